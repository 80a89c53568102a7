// SPDX-License-Identifier: MIT OR Apache-2.0

//! Detection metrics and the replicate evaluation harness.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::sim::{replicate_of, PiecewiseSignal, SimulationScenario};
use crate::{forward_transform, segment_with_tree, Error, MergeTree, Result, ThresholdConfig};

/// Partial AUC only uses ROC points with fewer false positives than this.
pub const PARTIAL_AUC_FP_LIMIT: f64 = 20.0;

/// Outcome of matching estimated change-points against the truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    /// `(true, estimated)` pairs, sorted by the true location.
    pub matched: Vec<(usize, usize)>,
    /// `tp / |truth|`, or 1 when there is nothing to find.
    pub tpr: f64,
    /// `fp / ((n - 1) - |truth|)`.
    pub fpr: f64,
}

/// Matches estimated change-points to true ones within `window` positions.
///
/// Candidate pairs are taken closest first; ties in distance go to the
/// earlier estimate, then the earlier true point. Each point is used at most
/// once. `n` is the series length, used for the false positive rate.
pub fn match_change_points(
    truth: &[usize],
    estimated: &[usize],
    window: usize,
    n: usize,
) -> MatchResult {
    let mut candidates: Vec<(usize, usize, usize, usize)> = Vec::new();
    for (ti, &t) in truth.iter().enumerate() {
        let lo = estimated.partition_point(|&e| e + window < t);
        for (ei, &e) in estimated.iter().enumerate().skip(lo) {
            if e > t + window {
                break;
            }
            candidates.push((t.abs_diff(e), e, ti, ei));
        }
    }
    candidates.sort_unstable_by_key(|&(d, e, ti, _)| (d, e, ti));

    let mut truth_used = vec![false; truth.len()];
    let mut est_used = vec![false; estimated.len()];
    let mut matched = Vec::new();
    for (_, _, ti, ei) in candidates {
        if truth_used[ti] || est_used[ei] {
            continue;
        }
        truth_used[ti] = true;
        est_used[ei] = true;
        matched.push((truth[ti], estimated[ei]));
    }
    matched.sort_unstable();

    let tp = matched.len();
    let fp = estimated.len() - tp;
    let fn_ = truth.len() - tp;
    let negatives = n.saturating_sub(1).saturating_sub(truth.len());
    MatchResult {
        tp,
        fp,
        fn_,
        matched,
        tpr: if truth.is_empty() {
            1.0
        } else {
            tp as f64 / truth.len() as f64
        },
        fpr: if negatives == 0 {
            0.0
        } else {
            fp as f64 / negatives as f64
        },
    }
}

/// Fraction of short-segment boundaries that were matched. `None` when the
/// truth has no short segments.
pub fn short_segment_tpr(
    signal: &PiecewiseSignal,
    theta: f64,
    range: (usize, usize),
    result: &MatchResult,
) -> Option<f64> {
    let short = signal.short_segment_change_points(theta, range);
    short_tpr(&short, result)
}

fn short_tpr(short: &[usize], result: &MatchResult) -> Option<f64> {
    if short.is_empty() {
        return None;
    }
    let hits = short
        .iter()
        .filter(|b| result.matched.iter().any(|(t, _)| t == *b))
        .count();
    Some(hits as f64 / short.len() as f64)
}

/// Mean squared error between a fit and the true signal.
pub fn mse(fitted: &[f64], truth: &[f64]) -> Result<f64> {
    if fitted.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: fitted.len(),
            right: truth.len(),
        });
    }
    if fitted.is_empty() {
        return Err(Error::EmptyInput("mse of empty vectors"));
    }
    let sse: f64 = fitted
        .iter()
        .zip(truth)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(sse / fitted.len() as f64)
}

/// A named segmentation setting to evaluate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodConfig {
    pub name: String,
    pub rho: f64,
    pub threshold: ThresholdConfig<f64>,
}

impl MethodConfig {
    /// Default settings with the given minimum arm width, named `cstar=<c>`.
    pub fn with_c_star(c_star: usize) -> Self {
        Self {
            name: format!("cstar={c_star}"),
            rho: crate::DEFAULT_RHO,
            threshold: ThresholdConfig::default().with_c_star(c_star),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateScore {
    pub sigma: f64,
    pub replicate: usize,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tpr: f64,
    pub fpr: f64,
    pub tpr_short: Option<f64>,
    pub mse: f64,
    pub sigma_hat: f64,
    pub lambda: f64,
}

/// Replicate averages at one noise level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaSummary {
    pub sigma: f64,
    pub replicates: usize,
    pub a_tpr: f64,
    pub a_fpr: f64,
    pub a_tpr_short: Option<f64>,
    pub a_mse: f64,
    pub mean_fp: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    /// Multiplier applied to the method's threshold.
    pub scale: f64,
    pub mean_fpr: f64,
    pub mean_tpr: f64,
    pub mean_fp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub sigma: f64,
    pub points: Vec<RocPoint>,
    pub auc: f64,
    pub partial_auc: f64,
}

/// Evaluation of one method over a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub method: MethodConfig,
    pub per_sigma: Vec<SigmaSummary>,
    pub replicates: Vec<ReplicateScore>,
    /// Threshold scales swept for `roc`; empty when no ROC was requested.
    pub sweep: Vec<f64>,
    pub roc: Vec<RocCurve>,
}

/// 30 log-spaced threshold scales from 0.1 to 3.
pub fn default_sweep() -> Vec<f64> {
    log_spaced(0.1, 3.0, 30)
}

pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

fn sorted_points(points: &[RocPoint]) -> Vec<(f64, f64)> {
    let mut pts: Vec<(f64, f64)> = points.iter().map(|p| (p.mean_fpr, p.mean_tpr)).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pts
}

fn trapezoid(pts: &[(f64, f64)]) -> f64 {
    pts.windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0)
        .sum()
}

/// Trapezoidal area under the ROC points, extended to (0, 0) and (1, 1).
pub fn auc(points: &[RocPoint]) -> f64 {
    let mut pts = vec![(0.0, 0.0)];
    pts.extend(sorted_points(points));
    pts.push((1.0, 1.0));
    trapezoid(&pts)
}

/// Area over the points with mean false positive count below `fp_limit`,
/// divided by the FPR span of that region. A region of zero width reports
/// its best TPR.
pub fn partial_auc(points: &[RocPoint], fp_limit: f64) -> f64 {
    let region: Vec<RocPoint> = points
        .iter()
        .copied()
        .filter(|p| p.mean_fp < fp_limit)
        .collect();
    if region.is_empty() {
        return 0.0;
    }
    let mut pts = vec![(0.0, 0.0)];
    pts.extend(sorted_points(&region));
    let span = pts.last().map(|p| p.0).unwrap_or(0.0);
    if span <= 0.0 {
        return region.iter().map(|p| p.mean_tpr).fold(0.0, f64::max);
    }
    trapezoid(&pts) / span
}

struct MethodOutcome {
    score: ReplicateScore,
    // (tpr, fpr, fp) per sweep scale
    roc: Vec<(f64, f64, f64)>,
}

struct Truth {
    signal: PiecewiseSignal,
    short: Vec<usize>,
}

fn evaluate_replicate(
    scenario: &SimulationScenario,
    truth: &Truth,
    methods: &[MethodConfig],
    sweep: &[f64],
    sigma: f64,
    r: usize,
) -> Result<Vec<MethodOutcome>> {
    let rep = replicate_of(&truth.signal, scenario, sigma, r);
    let n = rep.series.len();
    let mut trees: HashMap<u64, MergeTree<f64>> = HashMap::new();
    let mut out = Vec::with_capacity(methods.len());
    for m in methods {
        if let std::collections::hash_map::Entry::Vacant(e) = trees.entry(m.rho.to_bits()) {
            e.insert(forward_transform(&rep.series, m.rho)?);
        }
        let tree = &trees[&m.rho.to_bits()];
        let report = segment_with_tree(&rep.series, tree, &m.threshold)?;
        let seg = &report.segmentation;
        let matched = match_change_points(
            &rep.true_change_points,
            &seg.change_points,
            scenario.match_window,
            n,
        );
        let score = ReplicateScore {
            sigma,
            replicate: r,
            tp: matched.tp,
            fp: matched.fp,
            fn_: matched.fn_,
            tpr: matched.tpr,
            fpr: matched.fpr,
            tpr_short: short_tpr(&truth.short, &matched),
            mse: mse(&seg.fitted, &rep.truth)?,
            sigma_hat: report.sigma,
            lambda: report.lambda,
        };

        let mut roc = Vec::with_capacity(sweep.len());
        for &scale in sweep {
            let cfg = ThresholdConfig {
                lambda: Some(scale * report.lambda),
                ..m.threshold.clone()
            };
            let swept = segment_with_tree(&rep.series, tree, &cfg)?;
            let mr = match_change_points(
                &rep.true_change_points,
                &swept.segmentation.change_points,
                scenario.match_window,
                n,
            );
            roc.push((mr.tpr, mr.fpr, mr.fp as f64));
        }
        out.push(MethodOutcome { score, roc });
    }
    Ok(out)
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, count) = xs.fold((0.0, 0usize), |(s, c), x| (s + x, c + 1));
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

/// Runs every method over every replicate and noise level, and traces a ROC
/// curve per noise level over `sweep` (skipped when `sweep` is empty).
///
/// Replicates run in parallel; results are reduced in replicate order, so
/// the report is bit-identical across runs.
pub fn evaluate(
    scenario: &SimulationScenario,
    methods: &[MethodConfig],
    sweep: &[f64],
) -> Result<Vec<EvalReport>> {
    scenario.validate()?;
    for m in methods {
        m.threshold.validate()?;
    }
    if sweep.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
        return Err(Error::param("sweep", "scales must be finite and positive"));
    }
    let signal = scenario.signal.resolve()?;
    let truth = Truth {
        short: signal.short_segment_change_points(scenario.theta, scenario.short_segment_range),
        signal,
    };

    let mut reports: Vec<EvalReport> = methods
        .iter()
        .map(|m| EvalReport {
            method: m.clone(),
            per_sigma: Vec::new(),
            replicates: Vec::new(),
            sweep: sweep.to_vec(),
            roc: Vec::new(),
        })
        .collect();

    for &sigma in &scenario.sigma_grid {
        let outcomes: Vec<Vec<MethodOutcome>> = (1..=scenario.replicates)
            .into_par_iter()
            .map(|r| evaluate_replicate(scenario, &truth, methods, sweep, sigma, r))
            .collect::<Result<_>>()?;

        for (mi, report) in reports.iter_mut().enumerate() {
            let scores: Vec<&ReplicateScore> = outcomes.iter().map(|o| &o[mi].score).collect();
            let shorts: Vec<f64> = scores.iter().filter_map(|s| s.tpr_short).collect();
            report.per_sigma.push(SigmaSummary {
                sigma,
                replicates: scores.len(),
                a_tpr: mean(scores.iter().map(|s| s.tpr)),
                a_fpr: mean(scores.iter().map(|s| s.fpr)),
                a_tpr_short: (!shorts.is_empty()).then(|| mean(shorts.iter().copied())),
                a_mse: mean(scores.iter().map(|s| s.mse)),
                mean_fp: mean(scores.iter().map(|s| s.fp as f64)),
            });
            report.replicates.extend(scores.into_iter().cloned());

            if !sweep.is_empty() {
                let points: Vec<RocPoint> = sweep
                    .iter()
                    .enumerate()
                    .map(|(k, &scale)| RocPoint {
                        scale,
                        mean_tpr: mean(outcomes.iter().map(|o| o[mi].roc[k].0)),
                        mean_fpr: mean(outcomes.iter().map(|o| o[mi].roc[k].1)),
                        mean_fp: mean(outcomes.iter().map(|o| o[mi].roc[k].2)),
                    })
                    .collect();
                report.roc.push(RocCurve {
                    sigma,
                    auc: auc(&points),
                    partial_auc: partial_auc(&points, PARTIAL_AUC_FP_LIMIT),
                    points,
                });
            }
        }
    }
    Ok(reports)
}

/// Replicate metrics for each method, without ROC curves.
pub fn run_scenario(
    scenario: &SimulationScenario,
    methods: &[MethodConfig],
) -> Result<Vec<EvalReport>> {
    evaluate(scenario, methods, &[])
}

/// ROC curve per noise level for one method, sweeping `scale * lambda`.
pub fn roc_curve(
    scenario: &SimulationScenario,
    method: &MethodConfig,
    sweep: &[f64],
) -> Result<Vec<RocCurve>> {
    if sweep.is_empty() {
        return Err(Error::param("sweep", "must not be empty"));
    }
    let mut reports = evaluate(scenario, std::slice::from_ref(method), sweep)?;
    Ok(reports.remove(0).roc)
}
