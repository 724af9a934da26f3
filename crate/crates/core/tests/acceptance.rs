//! Acceptance run: one line per criterion, nonzero exit status if any fails.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::OnceLock;
use std::time::Instant;

use cov3d::boost::{
    det_curve, miss_rate_at, train_binary, train_multiclass, BoostConfig, LabeledVideo, Mapper, MulticlassModel,
    PairData,
};
use cov3d::features::FeatureVideo;
use cov3d::harness::eval::{cross_validate, prepare_video, prepare_videos, stratified_folds};
use cov3d::harness::persist::{load_model, save_model};
use cov3d::harness::synth::{generate_videos, Motion, SyntheticSpec};
use cov3d::integral::build_integral_tensors;
use cov3d::spd::{exp_map, geodesic_distance, log_map, matrix_exp, matrix_log, sample_spd, sample_symmetric, SpdMatrix};
use cov3d::windows::enumerate_windows;
use cov3d::wrlpp::{build_kernel, build_weighted_graph, fit_rlpp, fit_wrlpp, WrlppParams};
use cov3d::{DescriptorExtractor, Error, Window};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn lib<T>(r: cov3d::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

/// Two-pass covariance of the window's feature vectors.
fn direct_covariance(f: &FeatureVideo, w: &Window) -> DMatrix<f64> {
    let d = f.dim();
    let mut cells = Vec::new();
    for t in w.t1..=w.t2 {
        for y in w.y1..=w.y2 {
            for x in w.x1..=w.x2 {
                cells.push(f.at(x, y, t).to_vec());
            }
        }
    }
    let n = cells.len() as f64;
    let mean: Vec<f64> = (0..d).map(|i| cells.iter().map(|c| c[i]).sum::<f64>() / n).collect();
    DMatrix::from_fn(d, d, |i, j| {
        cells.iter().map(|c| (c[i] - mean[i]) * (c[j] - mean[j])).sum::<f64>() / (n - 1.0)
    })
}

fn random_features(rng: &mut ChaCha8Rng, dims: (usize, usize, usize), d: usize) -> FeatureVideo {
    let (w, h, t) = dims;
    let data = (0..w * h * t * d).map(|_| rng.random_range(-1.0..1.0)).collect();
    FeatureVideo::new(w, h, t, d, data).unwrap()
}

fn random_window(rng: &mut ChaCha8Rng, dims: (usize, usize, usize)) -> Window {
    loop {
        let mut axis = |n: usize| {
            let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
            (a.min(b), a.max(b))
        };
        let ((x1, x2), (y1, y2), (t1, t2)) = (axis(dims.0), axis(dims.1), axis(dims.2));
        let w = Window::new(x1, y1, t1, x2, y2, t2);
        if w.volume() >= 2 {
            return w;
        }
    }
}

fn integral_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let dims = (16, 16, 8);
    let features = random_features(&mut rng, dims, 5);
    let windows: Vec<Window> = (0..100).map(|_| random_window(&mut rng, dims)).collect();
    let start = Instant::now();
    let tensors = lib(build_integral_tensors(&features))?;
    let fast = windows
        .iter()
        .map(|w| tensors.window_covariance(w))
        .collect::<cov3d::Result<Vec<_>>>();
    let elapsed = start.elapsed().as_secs_f64();
    let fast = lib(fast)?;
    let err = windows
        .iter()
        .zip(&fast)
        .map(|(w, c)| (c - direct_covariance(&features, w)).abs().max())
        .fold(0.0, f64::max);
    ensure(
        err <= 1e-8 && elapsed <= 1.0,
        format!("max abs error {err:.2e} over 100 windows, {elapsed:.3}s"),
    )
}

fn random_invertible(rng: &mut ChaCha8Rng, d: usize) -> DMatrix<f64> {
    loop {
        let a = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0f64..1.0));
        if a.determinant().abs() > 1e-2 {
            return a;
        }
    }
}

fn spd_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let rel = |a: &DMatrix<f64>, b: &DMatrix<f64>| (a - b).norm() / b.norm().max(1e-300);
    let (mut exp_log, mut log_exp, mut self_dist, mut asym, mut affine): (f64, f64, f64, f64, f64) =
        (0.0, 0.0, 0.0, 0.0, 0.0);
    for trial in 0..500 {
        let d = [2, 3, 5, 8, 15][trial % 5];
        let x = sample_spd(&mut rng, d, 0.1);
        let y = sample_spd(&mut rng, d, 0.1);
        if trial < 100 {
            let back = lib(matrix_exp(lib(matrix_log(&x))?.matrix()))?;
            exp_log = exp_log.max(rel(back.matrix(), x.matrix()));
            let s = sample_symmetric(&mut rng, d, 0.5);
            let again = lib(matrix_log(&lib(matrix_exp(&s))?))?;
            log_exp = log_exp.max(rel(again.matrix(), &s));
            let v = lib(log_map(&x, &y))?;
            exp_log = exp_log.max(rel(lib(exp_map(&x, &v))?.matrix(), y.matrix()));
            self_dist = self_dist.max(lib(geodesic_distance(&x, &x))?);
            asym = asym.max((lib(geodesic_distance(&x, &y))? - lib(geodesic_distance(&y, &x))?).abs());
        }
        let a = random_invertible(&mut rng, d);
        let dxy = lib(geodesic_distance(&x, &y))?;
        let dab = lib(geodesic_distance(&x.congruence(&a), &y.congruence(&a)))?;
        affine = affine.max((dxy - dab).abs());
    }
    let mut scaled: f64 = 0.0;
    for d in [2, 5, 15] {
        let e = lib(SpdMatrix::new(DMatrix::identity(d, d) * std::f64::consts::E))?;
        let dist = lib(geodesic_distance(&SpdMatrix::identity(d), &e))?;
        scaled = scaled.max((dist - (d as f64).sqrt()).abs());
    }
    ensure(
        exp_log <= 1e-10 && log_exp <= 1e-10 && self_dist <= 1e-10 && asym <= 1e-10 && affine <= 1e-8 && scaled <= 1e-12,
        format!(
            "exp(log) {exp_log:.1e}, log(exp) {log_exp:.1e}, d(X,X) {self_dist:.1e}, symmetry {asym:.1e}, \
             affine {affine:.1e} (500 trials), d(I,eI) vs sqrt(d) {scaled:.1e}"
        ),
    )
}

fn two_class_dataset(rng: &mut ChaCha8Rng, n: usize, d: usize) -> (Vec<SpdMatrix>, Vec<usize>) {
    let points = (0..n).map(|_| sample_spd(rng, d, 0.1)).collect();
    let labels = (0..n).map(|i| usize::from(i >= n / 2)).collect();
    (points, labels)
}

fn uniform_weight_reduction() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let (points, labels) = two_class_dataset(&mut rng, 20, 5);
        let c = rng.random_range(0.1..5.0);
        let params = WrlppParams::default();
        let weighted = lib(fit_wrlpp(&points, &labels, &[c; 20], params))?;
        let plain = lib(fit_rlpp(&points, &labels, params))?;
        if weighted.projection.shape() != plain.projection.shape() {
            return Err("projection shapes differ".into());
        }
        for (a, b) in weighted.projection.column_iter().zip(plain.projection.column_iter()) {
            let diff = (a - b).abs().max().min((a + b).abs().max());
            worst = worst.max(diff);
        }
    }
    ensure(worst <= 1e-6, format!("max abs diff up to column sign {worst:.2e} over 20 datasets"))
}

fn graph_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (points, labels) = two_class_dataset(&mut rng, 30, 5);
    let weights: Vec<f64> = (0..30).map(|_| rng.random_range(0.01..2.0)).collect();
    let sigma = lib(cov3d::wrlpp::median_bandwidth(&points))?;
    let kernel = lib(build_kernel(&points, sigma))?;
    let graph = lib(build_weighted_graph(&kernel, &labels, &weights, 5))?;
    let k = &kernel.values;
    let klk = k * &graph.laplacian * k.transpose();
    let (mut min_form, mut min_form_k) = (f64::INFINITY, f64::INFINITY);
    for _ in 0..1000 {
        let v = DVector::from_fn(30, |_, _| rng.random_range(-1.0..1.0));
        min_form = min_form.min(v.dot(&(&graph.laplacian * &v)));
        min_form_k = min_form_k.min(v.dot(&(&klk * &v)));
    }
    let mut cross: f64 = 0.0;
    for i in 0..30 {
        for j in 0..30 {
            if labels[i] != labels[j] {
                cross = cross.max(graph.adjacency[(i, j)].abs());
            }
        }
    }
    let asym = (k - k.transpose()).abs().max();
    let diag = (0..30).map(|i| (k[(i, i)] - 1.0).abs()).fold(0.0, f64::max);
    ensure(
        min_form >= -1e-10 && min_form_k >= -1e-10 && cross == 0.0 && asym == 0.0 && diag == 0.0,
        format!(
            "min v'Lv {min_form:.2e}, min v'KLK'v {min_form_k:.2e} (1000 vectors), cross-class adjacency {cross}, \
             kernel asymmetry {asym}, |diag - 1| {diag}"
        ),
    )
}

fn window_enumeration() -> Outcome {
    let dims = (16, 16, 16);
    let got: Vec<Window> = lib(enumerate_windows(dims, 0.125, 0.125))?;
    let listed: BTreeSet<Window> = got.iter().copied().collect();
    // Step and minimum extent are two cells on every axis.
    let axis: Vec<(usize, usize)> = (0..16)
        .flat_map(|a| (a..16).map(move |b| (a, b)))
        .filter(|&(a, b)| a % 2 == 0 && (b - a + 1) % 2 == 0 && b - a + 1 >= 2)
        .collect();
    let mut brute = BTreeSet::new();
    for &(x1, x2) in &axis {
        for &(y1, y2) in &axis {
            for &(t1, t2) in &axis {
                brute.insert(Window::new(x1, y1, t1, x2, y2, t2));
            }
        }
    }
    ensure(
        listed == brute && listed.len() == got.len(),
        format!("{} windows listed, {} by brute force, {} duplicates", listed.len(), brute.len(), got.len() - listed.len()),
    )
}

const BENCHMARK_SEED: u64 = 0;
const BENCHMARK_SUBSAMPLE: usize = 100;

struct Benchmark {
    videos: Vec<DescriptorExtractor>,
    labels: Vec<String>,
    prepare_seconds: f64,
}

fn benchmark() -> &'static Benchmark {
    static DATA: OnceLock<Benchmark> = OnceLock::new();
    DATA.get_or_init(|| {
        let start = Instant::now();
        let spec = SyntheticSpec::bars(&[Motion::Left, Motion::Right, Motion::Up], 30, (32, 32, 16), BENCHMARK_SEED);
        let samples = generate_videos(&spec).unwrap();
        let frames: Vec<_> = samples.iter().map(|s| s.to_video().unwrap()).collect();
        Benchmark {
            videos: prepare_videos(&frames).unwrap(),
            labels: samples.into_iter().map(|s| s.label).collect(),
            prepare_seconds: start.elapsed().as_secs_f64(),
        }
    })
}

fn benchmark_config() -> BoostConfig {
    BoostConfig {
        window_subsample: BENCHMARK_SUBSAMPLE,
        seed: BENCHMARK_SEED,
        ..Default::default()
    }
}

fn benchmark_model() -> &'static MulticlassModel {
    static MODEL: OnceLock<MulticlassModel> = OnceLock::new();
    MODEL.get_or_init(|| {
        let b = benchmark();
        let samples: Vec<LabeledVideo> = b
            .videos
            .iter()
            .zip(&b.labels)
            .map(|(video, label)| LabeledVideo { video, label })
            .collect();
        train_multiclass(&samples, &benchmark_config()).unwrap()
    })
}

fn end_to_end() -> Outcome {
    let b = benchmark();
    let config = benchmark_config();
    let report = lib(cross_validate(&b.videos, &b.labels, &config, 5, BENCHMARK_SEED, None))?;
    let total = b.prepare_seconds + report.timings.total_seconds;
    let rates: Vec<String> = report
        .labels
        .iter()
        .zip(&report.class_rates)
        .map(|(l, r)| format!("{l} {r:.3}"))
        .collect();
    ensure(
        report.overall_accuracy >= 0.90 && total <= 600.0,
        format!(
            "5-fold accuracy {:.4} ({}), {total:.1}s, dr = rr = {}, margin {}, {} windows per round of the {} grid",
            report.overall_accuracy,
            rates.join(", "),
            config.detection_rate,
            config.margin,
            config.window_subsample,
            config.grid.min_frac
        ),
    )
}

fn nll_monotonic() -> Outcome {
    let b = benchmark();
    let mut worst_rise = f64::NEG_INFINITY;
    let mut rounds = Vec::new();
    let mut check = |model: &MulticlassModel| {
        for c in &model.classifiers {
            rounds.push(c.learners().len());
            for pair in c.nll_history.windows(2) {
                worst_rise = worst_rise.max(pair[1] - pair[0]);
            }
        }
    };
    check(benchmark_model());
    // A tighter margin forces several rounds per pair.
    let samples: Vec<LabeledVideo> = b
        .videos
        .iter()
        .zip(&b.labels)
        .map(|(video, label)| LabeledVideo { video, label })
        .collect();
    let long = BoostConfig {
        margin: 0.99,
        max_iters: 8,
        window_subsample: 20,
        ..benchmark_config()
    };
    check(&lib(train_multiclass(&samples, &long))?);
    ensure(
        worst_rise <= 1e-6,
        format!("largest per-round NLL change {worst_rise:+.2e}, rounds per pair {rounds:?}"),
    )
}

fn normalization() -> Outcome {
    let b = benchmark();
    let mut diag_err: f64 = 0.0;
    for v in &b.videos {
        let full = lib(v.descriptor(&Window::full(v.dims())))?;
        for i in 0..full.dim() {
            diag_err = diag_err.max((full.matrix()[(i, i)] - 1.0).abs());
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let dims = (16, 16, 8);
    let features = random_features(&mut rng, dims, 15);
    let scales: Vec<f64> = (0..15).map(|_| rng.random_range(0.2..10.0)).collect();
    let original = lib(DescriptorExtractor::from_features(&features))?;
    let rescaled = lib(DescriptorExtractor::from_features(&features.scale_channels(&scales)))?;
    let mut scale_err: f64 = 0.0;
    for _ in 0..100 {
        let w = random_window(&mut rng, dims);
        let a = lib(original.descriptor(&w))?;
        let c = lib(rescaled.descriptor(&w))?;
        scale_err = scale_err.max((a.matrix() - c.matrix()).abs().max());
    }
    ensure(
        diag_err <= 1e-10 && scale_err <= 1e-8,
        format!("full-volume |diag - 1| {diag_err:.1e} on 90 videos, channel rescaling diff {scale_err:.1e} on 100 windows"),
    )
}

fn persistence() -> Outcome {
    let model = benchmark_model();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("model.json");
    lib(save_model(model, &path))?;
    let loaded = lib(load_model(&path))?;

    let spec = SyntheticSpec::bars(&[Motion::Left, Motion::Right, Motion::Up, Motion::Down], 5, (32, 32, 16), 99);
    let probes = lib(generate_videos(&spec))?
        .iter()
        .map(|s| prepare_video(&s.to_video()?))
        .collect::<cov3d::Result<Vec<_>>>();
    let probes = lib(probes)?;
    let mut worst: f64 = 0.0;
    let mut same_predictions = true;
    for p in &probes {
        for (a, b) in model.classifiers.iter().zip(&loaded.classifiers) {
            worst = worst.max((lib(a.raw_score(p))? - lib(b.raw_score(p))?).abs());
            worst = worst.max((lib(a.score(p))? - lib(b.score(p))?).abs());
        }
        same_predictions &= lib(model.predict(p))? == lib(loaded.predict(p))?;
    }

    let text = std::fs::read_to_string(&path).map_err(|e| e.to_string())?;
    let digit = text.rfind(|c: char| c.is_ascii_digit()).ok_or("no digits in model file")?;
    let mut corrupted = text.clone().into_bytes();
    corrupted[digit] = if corrupted[digit] == b'7' { b'3' } else { b'7' };
    std::fs::write(&path, &corrupted).map_err(|e| e.to_string())?;
    let flipped = matches!(load_model(&path), Err(Error::ChecksumMismatch));
    std::fs::write(&path, &text.as_bytes()[..text.len() / 2]).map_err(|e| e.to_string())?;
    let truncated = matches!(load_model(&path), Err(Error::ChecksumMismatch));
    ensure(
        worst <= 1e-12 && same_predictions && flipped && truncated,
        format!(
            "max score diff {worst:.1e} on {} probes, predictions equal {same_predictions}, \
             corrupted digit rejected {flipped}, truncated file rejected {truncated}",
            probes.len()
        ),
    )
}

fn det_ordering() -> Outcome {
    let b = benchmark();
    let folds = lib(stratified_folds(&b.labels, 3, BENCHMARK_SEED))?;
    let fprs: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
    let (mut within, mut total) = (0usize, 0usize);
    let mut per_pair = Vec::new();
    for (pos, neg) in [("left", "right"), ("left", "up"), ("right", "up")] {
        let pick = |held_out: bool| -> (Vec<&DescriptorExtractor>, Vec<bool>) {
            (0..b.videos.len())
                .filter(|&i| (b.labels[i] == pos || b.labels[i] == neg) && (folds[i] == 0) == held_out)
                .map(|i| (&b.videos[i], b.labels[i] == pos))
                .unzip()
        };
        let (train_v, train_p) = pick(false);
        let (test_v, test_p) = pick(true);
        let data = PairData {
            videos: &train_v,
            positives: &train_p,
            positive_label: pos,
            negative_label: neg,
        };
        let mut curves = Vec::new();
        for mapper in [Mapper::Wrlpp, Mapper::UpperTriangle] {
            let config = BoostConfig {
                mapper,
                ..benchmark_config()
            };
            let classifier = lib(train_binary(&data, &config, 0))?;
            curves.push(lib(det_curve(&classifier, &test_v, &test_p, 50))?);
        }
        let ok = fprs
            .iter()
            .filter(|&&f| miss_rate_at(&curves[0], f) <= miss_rate_at(&curves[1], f) + 0.02)
            .count();
        per_pair.push(format!("{pos}/{neg} {ok}/{}", fprs.len()));
        within += ok;
        total += fprs.len();
    }
    let fraction = within as f64 / total as f64;
    ensure(
        fraction >= 0.8,
        format!(
            "WRLPP within 0.02 of upper-triangle miss rate at {:.1}% of held-out operating points ({})",
            100.0 * fraction,
            per_pair.join(", ")
        ),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("integral covariance oracle", integral_oracle),
        ("SPD geometry suite", spd_suite),
        ("WRLPP uniform-weight reduction", uniform_weight_reduction),
        ("graph and Laplacian properties", graph_properties),
        ("window enumeration", window_enumeration),
        ("end-to-end synthetic benchmark", end_to_end),
        ("LogitBoost NLL monotonicity", nll_monotonic),
        ("descriptor normalization", normalization),
        ("model persistence", persistence),
        ("DET ordering of mappers", det_ordering),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
