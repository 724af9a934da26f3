//! Versioned, checksummed JSON model files.
//!
//! The file is an envelope `{"format_version", "checksum", "body"}` where
//! `checksum` is the hex SHA-256 of the exact body text. Every float in the
//! body is written with 17 significant digits so it parses back to the same
//! `f64`.

use std::fs;
use std::io;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;
use sha2::{Digest, Sha256};

use crate::boost::{BinaryClassifier, BoostConfig, Mapper, MulticlassModel, Projection, WeakLearner};
use crate::error::{Error, Result};
use crate::integral::Window;
use crate::spd::SpdMatrix;
use crate::wrlpp::WrlppModel;

pub const FORMAT_VERSION: u32 = 1;

struct PreciseFormatter;

impl serde_json::ser::Formatter for PreciseFormatter {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        write!(writer, "{:.16e}", value as f64)
    }
}

#[derive(Serialize, Deserialize)]
struct MatrixDoc {
    rows: usize,
    cols: usize,
    /// Row-major entries.
    data: Vec<f64>,
}

impl MatrixDoc {
    fn from_matrix(m: &DMatrix<f64>) -> Self {
        MatrixDoc {
            rows: m.nrows(),
            cols: m.ncols(),
            data: m.transpose().iter().cloned().collect(),
        }
    }

    fn into_matrix(self) -> Result<DMatrix<f64>> {
        if self.data.len() != self.rows * self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.rows * self.cols,
                found: self.data.len(),
            });
        }
        Ok(DMatrix::from_row_slice(self.rows, self.cols, &self.data))
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
enum MappingDoc {
    Wrlpp {
        sigma: f64,
        points: Vec<MatrixDoc>,
        projection: MatrixDoc,
        eigenvalues: Vec<f64>,
    },
    UpperTriangle,
    IdentityTangent,
    KarcherTangent {
        mean: MatrixDoc,
    },
}

#[derive(Serialize, Deserialize)]
struct LearnerDoc {
    window: Window,
    coeffs: Vec<f64>,
    mapping: MappingDoc,
}

#[derive(Serialize, Deserialize)]
struct ClassifierDoc {
    positive_label: String,
    negative_label: String,
    threshold: f64,
    separated: bool,
    nll_history: Vec<f64>,
    learners: Vec<LearnerDoc>,
}

#[derive(Serialize, Deserialize)]
struct ModelDoc {
    labels: Vec<String>,
    dims: (usize, usize, usize),
    config: BoostConfig,
    classifiers: Vec<ClassifierDoc>,
}

#[derive(Serialize)]
struct EnvelopeOut<'a> {
    format_version: u32,
    checksum: String,
    body: &'a RawValue,
}

#[derive(Deserialize)]
struct EnvelopeIn<'a> {
    format_version: u32,
    checksum: String,
    #[serde(borrow)]
    body: &'a RawValue,
}

fn spd_from_doc(doc: MatrixDoc) -> Result<SpdMatrix> {
    let m = doc.into_matrix()?;
    if !m.is_square() || m != m.transpose() {
        return Err(Error::InvalidParameter("stored SPD matrix is not square and symmetric".into()));
    }
    Ok(SpdMatrix::from_symmetric_unchecked(m))
}

fn mapping_doc(p: &Projection) -> MappingDoc {
    match p {
        Projection::Riemannian(m) => MappingDoc::Wrlpp {
            sigma: m.sigma,
            points: m.points.iter().map(|x| MatrixDoc::from_matrix(x.matrix())).collect(),
            projection: MatrixDoc::from_matrix(&m.projection),
            eigenvalues: m.eigenvalues.clone(),
        },
        Projection::UpperTriangle => MappingDoc::UpperTriangle,
        Projection::IdentityTangent => MappingDoc::IdentityTangent,
        Projection::KarcherTangent { mean, .. } => MappingDoc::KarcherTangent {
            mean: MatrixDoc::from_matrix(mean.matrix()),
        },
    }
}

fn projection_from_doc(doc: MappingDoc) -> Result<Projection> {
    Ok(match doc {
        MappingDoc::Wrlpp {
            sigma,
            points,
            projection,
            eigenvalues,
        } => {
            let points = points.into_iter().map(spd_from_doc).collect::<Result<Vec<_>>>()?;
            let projection = projection.into_matrix()?;
            if projection.nrows() != points.len() {
                return Err(Error::DimensionMismatch {
                    expected: points.len(),
                    found: projection.nrows(),
                });
            }
            Projection::Riemannian(WrlppModel {
                sigma,
                points,
                projection,
                eigenvalues,
            })
        }
        MappingDoc::UpperTriangle => Projection::UpperTriangle,
        MappingDoc::IdentityTangent => Projection::IdentityTangent,
        MappingDoc::KarcherTangent { mean } => Projection::karcher(spd_from_doc(mean)?)?,
    })
}

fn model_doc(model: &MulticlassModel) -> ModelDoc {
    ModelDoc {
        labels: model.labels.clone(),
        dims: model.dims,
        config: model.config.clone(),
        classifiers: model
            .classifiers
            .iter()
            .map(|c| ClassifierDoc {
                positive_label: c.positive_label.clone(),
                negative_label: c.negative_label.clone(),
                threshold: c.threshold,
                separated: c.separated,
                nll_history: c.nll_history.clone(),
                learners: c
                    .learners()
                    .iter()
                    .map(|l| LearnerDoc {
                        window: l.window,
                        coeffs: l.coeffs.clone(),
                        mapping: mapping_doc(&l.projection),
                    })
                    .collect(),
            })
            .collect(),
    }
}

fn model_from_doc(doc: ModelDoc) -> Result<MulticlassModel> {
    let mut classifiers = Vec::with_capacity(doc.classifiers.len());
    for c in doc.classifiers {
        let learners = c
            .learners
            .into_iter()
            .map(|l| {
                if !l.window.fits(doc.dims) {
                    return Err(Error::WindowOutOfBounds([
                        l.window.x1,
                        l.window.y1,
                        l.window.t1,
                        l.window.x2,
                        l.window.y2,
                        l.window.t2,
                    ]));
                }
                Ok(WeakLearner {
                    window: l.window,
                    projection: projection_from_doc(l.mapping)?,
                    coeffs: l.coeffs,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let mut classifier = BinaryClassifier::new(c.positive_label, c.negative_label, learners, c.threshold)?;
        classifier.separated = c.separated;
        classifier.nll_history = c.nll_history;
        classifiers.push(classifier);
    }
    MulticlassModel::new(doc.labels, classifiers, doc.config, doc.dims)
}

fn to_precise_json<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, PreciseFormatter);
    value.serialize(&mut ser)?;
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

fn checksum(body: &str) -> String {
    hex::encode(Sha256::digest(body.as_bytes()))
}

/// Serializes a model to the enveloped JSON text.
pub fn model_to_string(model: &MulticlassModel) -> Result<String> {
    let body = to_precise_json(&model_doc(model))?;
    let raw = RawValue::from_string(body)?;
    let envelope = EnvelopeOut {
        format_version: FORMAT_VERSION,
        checksum: checksum(raw.get()),
        body: &raw,
    };
    Ok(serde_json::to_string(&envelope)? + "\n")
}

/// Parses enveloped JSON text; unreadable or tampered text is a checksum failure.
pub fn model_from_str(text: &str) -> Result<MulticlassModel> {
    let envelope: EnvelopeIn = serde_json::from_str(text).map_err(|_| Error::ChecksumMismatch)?;
    if envelope.format_version != FORMAT_VERSION {
        return Err(Error::VersionMismatch {
            expected: FORMAT_VERSION,
            found: envelope.format_version,
        });
    }
    if checksum(envelope.body.get()) != envelope.checksum.to_ascii_lowercase() {
        return Err(Error::ChecksumMismatch);
    }
    model_from_doc(serde_json::from_str(envelope.body.get())?)
}

pub fn save_model(model: &MulticlassModel, path: &Path) -> Result<()> {
    let text = model_to_string(model)?;
    fs::write(path, text).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

pub fn load_model(path: &Path) -> Result<MulticlassModel> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    model_from_str(&text)
}

/// Human-oriented overview of a model.
#[derive(Debug, Clone, Serialize)]
pub struct ModelSummary {
    pub format_version: u32,
    pub labels: Vec<String>,
    pub dims: (usize, usize, usize),
    pub config: BoostConfig,
    pub classifiers: Vec<ClassifierSummary>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassifierSummary {
    pub positive_label: String,
    pub negative_label: String,
    pub threshold: f64,
    pub separated: bool,
    pub rounds: usize,
    pub windows: Vec<Window>,
    pub mappers: Vec<Mapper>,
    pub projection_dims: Vec<usize>,
}

pub fn summarize(model: &MulticlassModel) -> ModelSummary {
    ModelSummary {
        format_version: FORMAT_VERSION,
        labels: model.labels.clone(),
        dims: model.dims,
        config: model.config.clone(),
        classifiers: model
            .classifiers
            .iter()
            .map(|c| ClassifierSummary {
                positive_label: c.positive_label.clone(),
                negative_label: c.negative_label.clone(),
                threshold: c.threshold,
                separated: c.separated,
                rounds: c.learners().len(),
                windows: c.learners().iter().map(|l| l.window).collect(),
                mappers: c.learners().iter().map(|l| l.projection.mapper()).collect(),
                projection_dims: c
                    .learners()
                    .iter()
                    .map(|l| match &l.projection {
                        Projection::Riemannian(m) => m.dim(),
                        _ => l.coeffs.len() - 1,
                    })
                    .collect(),
            })
            .collect(),
    }
}
