// SPDX-License-Identifier: MIT OR Apache-2.0

//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Run with `cargo test -p tguhm-cli --test acceptance`.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tempfile::TempDir;
use tguhm::eval::{
    default_sweep, evaluate, run_scenario, EvalReport, MethodConfig, ReplicateScore,
};
use tguhm::sim::{BuiltinSignal, NoiseKind, SignalSpec, SimulationScenario};
use tguhm::{
    connected_threshold, extract_change_points, fit_segments, forward_transform, segment,
    MergeTree, Series, ThresholdConfig64, DEFAULT_RHO,
};
use tguhm_cli::output::{fitted_from_segments, read_fitted, read_segments};
use tguhm_cli::ratio::read_ratio_file;

const SEED: u64 = 20240601;

type Outcome = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(elapsed: Duration, limit_s: f64) -> Result<(), String> {
    if elapsed.as_secs_f64() <= limit_s {
        Ok(())
    } else {
        Err(format!(
            "took {:.1}s, limit {limit_s}s",
            elapsed.as_secs_f64()
        ))
    }
}

fn series(y: &[f64]) -> Series<f64> {
    Series::from_values(y.to_vec()).unwrap()
}

fn random_rho(rng: &mut ChaCha8Rng) -> f64 {
    if rng.random_bool(0.5) {
        DEFAULT_RHO
    } else {
        rng.random_range(0.05..=1.0)
    }
}

// 1. Energy preservation.
fn energy() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let n = rng.random_range(1..=200);
        let scale = 10f64.powi(rng.random_range(-3..=3));
        let y: Vec<f64> = (0..n)
            .map(|_| rng.random_range(-1.0..1.0) * scale)
            .collect();
        let tree = forward_transform(&series(&y), random_rho(&mut rng)).unwrap();
        let coef: f64 = tree.details.iter().map(|d| d.value * d.value).sum::<f64>()
            + tree.root_smooth * tree.root_smooth;
        let input: f64 = y.iter().map(|v| v * v).sum();
        worst = worst.max((coef - input).abs() / input);
    }
    within(start.elapsed(), 5.0)?;
    check(
        worst <= 1e-9,
        format!("max relative error {worst:.2e} (tol 1e-9)"),
    )
}

/// `l * c(s..b) - r * c(b..e)` from direct sums.
fn brute_detail(y: &[f64], s: usize, b: usize, e: usize) -> f64 {
    let c = |a: usize, z: usize| y[a..z].iter().sum::<f64>() / ((z - a) as f64).sqrt();
    let total = (e - s) as f64;
    ((e - b) as f64 / total).sqrt() * c(s, b) - ((b - s) as f64 / total).sqrt() * c(b, e)
}

/// A coefficient survives when it or any coefficient on a support nested
/// inside its own, produced no later, exceeds `lambda`.
fn brute_connected(tree: &MergeTree<f64>, lambda: f64) -> Vec<usize> {
    let d = &tree.details;
    (0..d.len())
        .filter(|&i| {
            d.iter().any(|o| {
                o.scale <= d[i].scale
                    && o.start >= d[i].start
                    && o.end <= d[i].end
                    && o.value.abs() > lambda
            })
        })
        .collect()
}

fn oracle_mismatch(y: &[f64], rho: f64) -> Option<String> {
    let tree = forward_transform(&series(y), rho).unwrap();
    for d in &tree.details {
        let want = brute_detail(y, d.start, d.split, d.end);
        if (d.value - want).abs() > 1e-12 {
            return Some(format!(
                "{y:?}: detail at {} is {} not {want}",
                d.split, d.value
            ));
        }
    }
    let mut lambdas = vec![0.0, 0.25, 0.5, 1.0, 2.0];
    lambdas.extend(tree.details.iter().map(|d| d.value.abs()));
    for l in lambdas {
        if connected_threshold(&tree, l) != brute_connected(&tree, l) {
            return Some(format!("{y:?}: connected set differs at lambda {l}"));
        }
    }
    None
}

// 2. Oracle equivalence.
fn oracle() -> Outcome {
    let start = Instant::now();
    let mut checked = 0;
    for n in 2..=8u32 {
        for code in 0..3usize.pow(n) {
            let y: Vec<f64> = (0..n)
                .map(|k| ((code / 3usize.pow(k)) % 3) as f64)
                .collect();
            if let Some(msg) = oracle_mismatch(&y, DEFAULT_RHO) {
                return Err(msg);
            }
            checked += 1;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..1000 {
        let n = rng.random_range(2..=50);
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let rho = random_rho(&mut rng);
        if let Some(msg) = oracle_mismatch(&y, rho) {
            return Err(msg);
        }
        checked += 1;
    }
    within(start.elapsed(), 30.0)?;
    Ok(format!("{checked} series agree to 1e-12"))
}

/// Random piecewise-constant signal plus Gaussian-ish noise.
fn noisy_series(rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = rng.random_range(20..=300);
    let noise = rng.random_range(0.05..0.6);
    let mut level = 0.0;
    let mut y = Vec::with_capacity(n);
    while y.len() < n {
        let len = rng.random_range(1..=40).min(n - y.len());
        level += rng.random_range(-1.5..1.5);
        for _ in 0..len {
            let e: f64 = (0..4).map(|_| rng.random_range(-1.0..1.0)).sum::<f64>() * 0.87;
            let spike = if rng.random_bool(0.03) {
                rng.random_range(-3.0..3.0)
            } else {
                0.0
            };
            y.push(level + noise * e + spike);
        }
    }
    y
}

fn noisy_corpus() -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    (0..500).map(|_| noisy_series(&mut rng)).collect()
}

// 3. c* = 1 equals connected thresholding alone.
fn c_star_one(corpus: &[Vec<f64>]) -> Outcome {
    for y in corpus {
        let s = series(y);
        let cfg = ThresholdConfig64::default().with_c_star(1);
        let full = segment(&s, &cfg, DEFAULT_RHO).unwrap().segmentation;
        let tree = forward_transform(&s, DEFAULT_RHO).unwrap();
        let lambda = cfg.resolve(&s).unwrap().lambda;
        let cps = extract_change_points(&tree, &connected_threshold(&tree, lambda));
        let plain = fit_segments(&s, &cps).unwrap();
        if full != plain {
            return Err(format!(
                "n = {}: {:?} vs {:?}",
                y.len(),
                full.change_points,
                plain.change_points
            ));
        }
    }
    Ok(format!("{} series identical", corpus.len()))
}

// 4. Nesting over c* and exact segment means.
fn c_star_nesting(corpus: &[Vec<f64>]) -> Outcome {
    let mut worst: f64 = 0.0;
    for y in corpus {
        let s = series(y);
        let mut prev: Option<Vec<usize>> = None;
        for c in (1..=5).rev() {
            let seg = segment(
                &s,
                &ThresholdConfig64::default().with_c_star(c),
                DEFAULT_RHO,
            )
            .unwrap()
            .segmentation;
            if let Some(p) = &prev {
                if !p.iter().all(|b| seg.change_points.contains(b)) {
                    return Err(format!("cps(c*={}) not within cps(c*={c})", c + 1));
                }
            }
            for (a, b, m) in seg.segments() {
                let mean = y[a..b].iter().sum::<f64>() / (b - a) as f64;
                worst = worst.max((m - mean).abs());
                if seg.fitted[a..b].iter().any(|f| *f != m) {
                    return Err("fitted value differs within a segment".into());
                }
            }
            prev = Some(seg.change_points);
        }
    }
    check(
        worst <= 1e-12,
        format!(
            "nested on {} series, max mean error {worst:.1e}",
            corpus.len()
        ),
    )
}

// 5. Noiseless recovery. Levels are multiples of 1/4 so segment sums are
// exact and the error can be required to be exactly zero.
fn noiseless_recovery() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let cfg = ThresholdConfig64::default().with_lambda(0.2);
    let mut total_mse = 0.0;
    for k in 0..200 {
        let segments = rng.random_range(1..=10);
        let mut level: f64 = rng.random_range(-8..=8) as f64 * 0.25;
        let (mut y, mut truth) = (Vec::new(), Vec::new());
        for j in 0..segments {
            if j > 0 {
                let step = rng.random_range(2..=12) as f64 * 0.25;
                level += if rng.random_bool(0.5) { step } else { -step };
                truth.push(y.len());
            }
            let len = rng.random_range(cfg.c_star + 1..=40);
            y.extend(std::iter::repeat_n(level, len));
        }
        let fit = segment(&series(&y), &cfg, DEFAULT_RHO)
            .unwrap()
            .segmentation;
        if fit.change_points != truth {
            return Err(format!(
                "signal {k}: {:?} vs truth {truth:?}",
                fit.change_points
            ));
        }
        total_mse += tguhm::eval::mse(&fit.fitted, &y).unwrap();
    }
    let a_mse = total_mse / 200.0;
    check(a_mse == 0.0, format!("200 signals recovered, aMSE {a_mse}"))
}

fn paired(
    a: &[&ReplicateScore],
    b: &[&ReplicateScore],
    f: impl Fn(&ReplicateScore) -> f64,
) -> (f64, f64) {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| f(x) - f(y)).collect();
    let n = d.len() as f64;
    let mean = d.iter().sum::<f64>() / n;
    let var = d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn scores(report: &EvalReport, sigma: f64) -> Vec<&ReplicateScore> {
    report
        .replicates
        .iter()
        .filter(|s| s.sigma == sigma)
        .collect()
}

fn spike_reports() -> (Vec<EvalReport>, Duration) {
    let scenario = SimulationScenario::new(
        SignalSpec::Builtin(BuiltinSignal::F1),
        NoiseKind::Contaminated,
        200,
        SEED,
    )
    .with_sigma_grid(vec![0.2, 0.3]);
    let start = Instant::now();
    let reports = run_scenario(
        &scenario,
        &[MethodConfig::with_c_star(1), MethodConfig::with_c_star(2)],
    )
    .unwrap();
    (reports, start.elapsed())
}

// 6. c* = 2 lowers false positives and error under contaminated noise.
fn spike_suppression(reports: &[EvalReport], elapsed: Duration) -> Outcome {
    within(elapsed, 120.0)?;
    let mut detail = Vec::new();
    let mut ok = true;
    for sigma in [0.2, 0.3] {
        let (one, two) = (scores(&reports[0], sigma), scores(&reports[1], sigma));
        let (dfpr, se_fpr) = paired(&one, &two, |s| s.fpr);
        let (dmse, se_mse) = paired(&one, &two, |s| s.mse);
        ok &= dfpr > 2.0 * se_fpr && dmse > 2.0 * se_mse;
        detail.push(format!(
            "sigma {sigma}: aFPR drop {dfpr:.4} (2SE {:.4}), aMSE drop {dmse:.4} (2SE {:.4})",
            2.0 * se_fpr,
            2.0 * se_mse
        ));
    }
    detail.push(format!("{:.1}s for both settings", elapsed.as_secs_f64()));
    check(ok, detail.join("; "))
}

// 7. Short segments are still found with c* = 2.
fn short_segments_kept(reports: &[EvalReport]) -> Outcome {
    let mut detail = Vec::new();
    let mut ok = true;
    for (a, b) in reports[0].per_sigma.iter().zip(&reports[1].per_sigma) {
        let (one, two) = (a.a_tpr_short.unwrap(), b.a_tpr_short.unwrap());
        ok &= two >= one - 0.05;
        detail.push(format!("sigma {}: aTPRsh {one:.3} -> {two:.3}", a.sigma));
    }
    check(ok, detail.join("; "))
}

// 8. Low-noise detection of the short F3 alteration.
fn low_noise_detection() -> Outcome {
    let scenario = SimulationScenario::new(
        SignalSpec::Builtin(BuiltinSignal::F3),
        NoiseKind::Gaussian,
        200,
        SEED,
    )
    .with_sigma_grid(vec![0.1]);
    let reports = run_scenario(&scenario, &[MethodConfig::with_c_star(2)]).unwrap();
    let short = reports[0].per_sigma[0].a_tpr_short.unwrap();
    check(short >= 0.9, format!("aTPRsh {short:.3} (need >= 0.9)"))
}

// 9. ROC sanity.
fn roc_sanity() -> Outcome {
    let noiseless = SimulationScenario::new(
        SignalSpec::Builtin(BuiltinSignal::F3),
        NoiseKind::Gaussian,
        1,
        SEED,
    )
    .with_sigma_grid(vec![0.0]);
    let mut fixed = MethodConfig::with_c_star(2);
    fixed.threshold = fixed.threshold.with_lambda(0.5);
    let curve = &evaluate(&noiseless, &[fixed], &default_sweep()).unwrap()[0].roc[0];
    if (curve.auc - 1.0).abs() > 1e-9 {
        return Err(format!("noiseless AUC {}", curve.auc));
    }
    let mut detail = vec![format!("noiseless AUC {}", curve.auc)];
    let methods = [MethodConfig::with_c_star(1), MethodConfig::with_c_star(2)];
    let mut ok = true;
    for signal in [BuiltinSignal::F1, BuiltinSignal::F2, BuiltinSignal::F3] {
        let scenario =
            SimulationScenario::new(SignalSpec::Builtin(signal), NoiseKind::Gaussian, 200, SEED);
        for report in evaluate(&scenario, &methods, &default_sweep()).unwrap() {
            let aucs: Vec<f64> = report.roc.iter().map(|c| c.auc).collect();
            let inversions = aucs.windows(2).filter(|w| w[1] > w[0]).count();
            ok &= inversions <= 1;
            detail.push(format!(
                "{signal} {}: {} inversion(s)",
                report.method.name, inversions
            ));
        }
    }
    check(ok, detail.join("; "))
}

fn tguhm(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_tguhm"))
        .args(args)
        .env_remove("TGUHM_CONFIG")
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!(
            "tguhm {args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        ))
    }
}

fn tree_files(root: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p.strip_prefix(root).unwrap().to_path_buf());
            }
        }
    }
    out.sort();
    out
}

fn same_outputs(a: &Path, b: &Path) -> Result<usize, String> {
    let files = tree_files(a);
    if files != tree_files(b) {
        return Err(format!(
            "{} and {} hold different files",
            a.display(),
            b.display()
        ));
    }
    for f in &files {
        if fs::read(a.join(f)).unwrap() != fs::read(b.join(f)).unwrap() {
            return Err(format!("{} differs between runs", f.display()));
        }
    }
    Ok(files.len())
}

// 10. CLI determinism and round trip.
fn cli_golden() -> Outcome {
    let dir = TempDir::new().map_err(|e| e.to_string())?;
    let p = |name: &str| dir.path().join(name).display().to_string();
    let mut files = 0;

    let sim = [
        "simulate",
        "--signal",
        "F1",
        "--noise",
        "contaminated",
        "--replicates",
        "3",
        "--sigma-grid",
        "0.2,0.3",
        "--seed",
        "99",
    ];
    tguhm(&[&sim[..], &["--out", &p("sim_a")]].concat())?;
    tguhm(&[&sim[..], &["--out", &p("sim_b")]].concat())?;
    files += same_outputs(&dir.path().join("sim_a"), &dir.path().join("sim_b"))?;

    let input = p("sim_a/sigma_0.20/replicate_0001.tsv");
    tguhm(&["segment", &input, "--out", &p("seg_a")])?;
    tguhm(&["segment", &input, "--out", &p("seg_b")])?;
    files += same_outputs(&dir.path().join("seg_a"), &dir.path().join("seg_b"))?;

    let eval = [
        "evaluate",
        "--signal",
        "F2",
        "--replicates",
        "10",
        "--sigma-grid",
        "0.1,0.3",
        "--cstar-grid",
        "1,2",
        "--seed",
        "5",
    ];
    tguhm(&[&eval[..], &["--out", &p("eval_a")]].concat())?;
    tguhm(&[&eval[..], &["--out", &p("eval_b")]].concat())?;
    files += same_outputs(&dir.path().join("eval_a"), &dir.path().join("eval_b"))?;

    let data = read_ratio_file(Path::new(&input)).map_err(|e| e.to_string())?;
    let s = data.chromosomes[0].series().unwrap();
    let expected = segment(&s, &ThresholdConfig64::default(), DEFAULT_RHO)
        .unwrap()
        .segmentation
        .fitted;
    let from_fitted =
        read_fitted(&dir.path().join("seg_a/fitted.tsv")).map_err(|e| e.to_string())?;
    let rows = read_segments(&dir.path().join("seg_a/segments.tsv")).map_err(|e| e.to_string())?;
    let from_segments = fitted_from_segments(&rows, &data).map_err(|e| e.to_string())?;
    let ok = from_fitted[0].1 == expected && from_segments[0].1 == expected;
    check(
        ok,
        format!(
            "{files} files byte-identical; fit read back exactly over {} windows",
            expected.len()
        ),
    )
}

fn main() -> ExitCode {
    let corpus = noisy_corpus();
    let (spike, spike_time) = spike_reports();
    let criteria: Vec<Criterion> = vec![
        ("energy preservation", Box::new(energy)),
        ("oracle equivalence", Box::new(oracle)),
        (
            "c*=1 matches connected thresholding",
            Box::new(|| c_star_one(&corpus)),
        ),
        (
            "c* nesting and exact means",
            Box::new(|| c_star_nesting(&corpus)),
        ),
        ("noiseless exact recovery", Box::new(noiseless_recovery)),
        (
            "spike suppression",
            Box::new(|| spike_suppression(&spike, spike_time)),
        ),
        (
            "short segments retained",
            Box::new(|| short_segments_kept(&spike)),
        ),
        ("low-noise detection", Box::new(low_noise_detection)),
        ("ROC sanity", Box::new(roc_sanity)),
        ("CLI golden files", Box::new(cli_golden)),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (tag, detail) = match run() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!(
            "{tag} {:>2} {name}: {detail} [{:.1}s]",
            k + 1,
            start.elapsed().as_secs_f64()
        );
    }
    println!(
        "{} of {} acceptance criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
