//! One-sided comparators, shared-weight dominance, score ranking and the
//! efficiency + effectiveness productivity split.
//!
//! The input-side (`cf_score`) and output-side (`rf_score`) programs drop
//! half of the epsilon neighborhood. They are kept as comparators: the
//! input-side model cannot trade a small output loss for a large input
//! saving, and the output-side model cannot trade a small input increase
//! for a large output gain. Neither value is an efficiency score; they are
//! reported as raw weighted objectives.

use std::cmp::Ordering;

use thiserror::Error;

use crate::dataset::{Dataset, UncontrollableMode};
use crate::kam::{KamConfig, KamError, KamResult};
use crate::lp::{self, LinearProgram, LpStatus, ObjectiveSense, RowSense};
use crate::schemes::{make_epsilon, make_weights, shared_weights, WeightScheme};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error(transparent)]
    Kam(#[from] KamError),
    #[error("per-firm SBM weights make every dominance ratio equal to p/m")]
    SbmWeightsRejected,
    #[error("scores measured with a zero epsilon vector only separate efficient from inefficient firms and are not ranked")]
    RankingAtZeroEpsilon,
    #[error("no output factor carries a goal")]
    NoGoalDefined,
    #[error("{got} scores for {expected} firms")]
    ScoreCount { got: usize, expected: usize },
    #[error("scores must be finite and have a positive maximum")]
    InvalidScores,
    #[error("nothing to rank")]
    Empty,
}

impl From<crate::schemes::SchemeError> for AnalysisError {
    fn from(e: crate::schemes::SchemeError) -> Self {
        Self::Kam(KamError::Scheme(e))
    }
}

impl From<crate::lp::LpError> for AnalysisError {
    fn from(e: crate::lp::LpError) -> Self {
        Self::Kam(KamError::Lp(e))
    }
}

/// Result of a one-sided program.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedResult {
    pub value: f64,
    pub lambda: Vec<f64>,
    pub slack_in: Vec<f64>,
    pub slack_out: Vec<f64>,
    pub target_in: Vec<f64>,
    pub target_out: Vec<f64>,
}

#[derive(Clone, Copy, PartialEq)]
enum Side {
    Input,
    Output,
}

fn reduced(
    ds: &Dataset,
    cfg: &KamConfig,
    firm: usize,
    side: Side,
) -> Result<ReducedResult, AnalysisError> {
    let (n, m, p) = (ds.num_firms(), ds.num_inputs(), ds.num_outputs());
    let w = make_weights(ds, &cfg.weights, firm)?;
    let e = make_epsilon(ds, &w, &cfg.epsilon, firm)?;
    let (e_in, e_out) = match side {
        Side::Input => (e.eps_in, vec![0.0; p]),
        Side::Output => (vec![0.0; m], e.eps_out),
    };
    let x_l = ds.input_row(firm);
    let y_l = ds.output_row(firm);
    let nv = n + m + p;
    let s_in = |j: usize| n + j;
    let s_out = |k: usize| n + m + k;

    let mut c = vec![0.0; nv];
    let (sense, constant) = match side {
        Side::Input => {
            for j in 0..m {
                c[s_in(j)] = -w.v_in[j];
            }
            let k: f64 = (0..m).map(|j| w.v_in[j] * (x_l[j] + e_in[j])).sum();
            (ObjectiveSense::Min, k)
        }
        Side::Output => {
            for k in 0..p {
                c[s_out(k)] = w.v_out[k];
            }
            let k: f64 = (0..p).map(|k| w.v_out[k] * (y_l[k] - e_out[k])).sum();
            (ObjectiveSense::Max, k)
        }
    };
    let mut prog = LinearProgram::new(sense, c);
    for j in 0..m {
        let mut row = vec![0.0; nv];
        (0..n).for_each(|i| row[i] = ds.x(i, j));
        row[s_in(j)] = 1.0;
        prog.add_row(row, RowSense::Eq, x_l[j] + e_in[j]);
    }
    for k in 0..p {
        let mut row = vec![0.0; nv];
        (0..n).for_each(|i| row[i] = ds.y(i, k));
        row[s_out(k)] = -1.0;
        prog.add_row(row, RowSense::Eq, y_l[k] - e_out[k]);
    }
    // Uncontrollable factors keep the same target semantics as the full
    // model: fixed means target = observed, bounded means target >= observed.
    let unit = |col: usize| {
        let mut row = vec![0.0; nv];
        row[col] = 1.0;
        row
    };
    for &(j, mode) in &cfg.uncontrollable_in {
        match (side, mode) {
            (Side::Input, UncontrollableMode::Fixed) => {
                prog.add_row(unit(s_in(j)), RowSense::Eq, e_in[j])
            }
            (Side::Input, UncontrollableMode::Bounded) => {
                prog.add_row(unit(s_in(j)), RowSense::Le, e_in[j])
            }
            (Side::Output, _) => prog.add_row(unit(s_in(j)), RowSense::Eq, 0.0),
        };
    }
    for &(k, mode) in &cfg.uncontrollable_out {
        match (side, mode) {
            (Side::Output, UncontrollableMode::Fixed) => {
                prog.add_row(unit(s_out(k)), RowSense::Eq, e_out[k]);
            }
            (Side::Output, UncontrollableMode::Bounded) => {
                prog.add_row(unit(s_out(k)), RowSense::Ge, e_out[k]);
            }
            (Side::Input, UncontrollableMode::Fixed) => {
                prog.add_row(unit(s_out(k)), RowSense::Eq, 0.0);
            }
            (Side::Input, UncontrollableMode::Bounded) => {}
        }
    }
    let sol = lp::solve(&prog)?;
    if sol.status != LpStatus::Optimal {
        return Err(KamError::Solver {
            firm: ds.firms()[firm].clone(),
            status: sol.status,
        }
        .into());
    }
    let slack_in: Vec<f64> = (0..m).map(|j| sol.x[s_in(j)]).collect();
    let slack_out: Vec<f64> = (0..p).map(|k| sol.x[s_out(k)]).collect();
    Ok(ReducedResult {
        value: constant + sol.objective,
        lambda: sol.x[..n].to_vec(),
        target_in: (0..m).map(|j| x_l[j] + e_in[j] - slack_in[j]).collect(),
        target_out: (0..p).map(|k| y_l[k] - e_out[k] + slack_out[k]).collect(),
        slack_in,
        slack_out,
    })
}

/// Input-side program: epsilon on inputs only, outputs held at observed
/// levels. Value ≤ 1 when epsilon is zero.
pub fn cf_score(
    ds: &Dataset,
    cfg: &KamConfig,
    firm: usize,
) -> Result<ReducedResult, AnalysisError> {
    reduced(ds, cfg, firm, Side::Input)
}

/// Output-side program: epsilon on outputs only, inputs capped at observed
/// levels. Value ≥ 1 when epsilon is zero.
pub fn rf_score(
    ds: &Dataset,
    cfg: &KamConfig,
    firm: usize,
) -> Result<ReducedResult, AnalysisError> {
    reduced(ds, cfg, firm, Side::Output)
}

/// Weighted output sum over weighted input sum.
pub fn dominance_ratio(w_in: &[f64], w_out: &[f64], x: &[f64], y: &[f64]) -> f64 {
    let num: f64 = w_out.iter().zip(y).map(|(w, v)| w * v).sum();
    let den: f64 = w_in.iter().zip(x).map(|(w, v)| w * v).sum();
    num / den
}

#[derive(Debug, Clone, PartialEq)]
pub struct DominanceReport {
    pub firm_ratios: Vec<f64>,
    /// Firm indices, highest ratio first.
    pub ordering: Vec<usize>,
    /// Groups of firms with equal ratios, in `ordering` order.
    pub ties: Vec<Vec<usize>>,
}

/// Order firms by the shared-weight output/input ratio. A firm partially
/// dominates another iff its ratio is strictly greater.
pub fn partial_dominance(
    ds: &Dataset,
    weights: &WeightScheme,
) -> Result<DominanceReport, AnalysisError> {
    let (w_in, w_out) = shared_weights(ds, weights)?.ok_or(AnalysisError::SbmWeightsRejected)?;
    let firm_ratios: Vec<f64> = (0..ds.num_firms())
        .map(|i| dominance_ratio(&w_in, &w_out, ds.input_row(i), ds.output_row(i)))
        .collect();
    let mut ordering: Vec<usize> = (0..ds.num_firms()).collect();
    ordering.sort_by(|&a, &b| firm_ratios[b].total_cmp(&firm_ratios[a]));
    let mut ties: Vec<Vec<usize>> = Vec::new();
    for &i in &ordering {
        match ties.last_mut() {
            Some(g) if ratios_equal(firm_ratios[g[0]], firm_ratios[i]) => g.push(i),
            _ => ties.push(vec![i]),
        }
    }
    Ok(DominanceReport {
        firm_ratios,
        ordering,
        ties,
    })
}

fn ratios_equal(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

/// Firm indices by descending score, ties broken by firm name.
pub fn rank_by_score(ds: &Dataset, results: &[KamResult]) -> Result<Vec<usize>, AnalysisError> {
    if results.is_empty() {
        return Err(AnalysisError::Empty);
    }
    if results.iter().all(|r| r.epsilon.is_zero()) {
        return Err(AnalysisError::RankingAtZeroEpsilon);
    }
    let mut order: Vec<&KamResult> = results.iter().collect();
    order.sort_by(|a, b| match b.score.total_cmp(&a.score) {
        Ordering::Equal => ds.firms()[a.firm].cmp(&ds.firms()[b.firm]),
        o => o,
    });
    Ok(order.into_iter().map(|r| r.firm).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProductivityClass {
    Productive,
    NonProductive,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    pub efficiency: f64,
    pub effectiveness: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProductivityReport {
    pub rel_efficiency: Vec<f64>,
    pub rel_effectiveness: Vec<f64>,
    pub efficiency_threshold: f64,
    pub effectiveness_threshold: f64,
    pub classes: Vec<ProductivityClass>,
    pub effective: Vec<bool>,
}

/// Split firms into productive and non-productive.
///
/// A firm is effective when every goal-bearing output meets its goal.
/// Relative effectiveness is the firm's weakest attainment across goal
/// outputs (value over the best firm's value), rescaled so the top firm is 1.
/// A firm is productive when it is effective and both relative measures
/// reach their thresholds.
pub fn classify_productivity(
    ds: &Dataset,
    eff_scores: &[f64],
    thresholds: Thresholds,
) -> Result<ProductivityReport, AnalysisError> {
    let n = ds.num_firms();
    if eff_scores.len() != n {
        return Err(AnalysisError::ScoreCount {
            got: eff_scores.len(),
            expected: n,
        });
    }
    let goals: Vec<(usize, f64)> = ds
        .outputs()
        .iter()
        .enumerate()
        .filter_map(|(k, f)| f.goal.map(|g| (k, g)))
        .collect();
    if goals.is_empty() {
        return Err(AnalysisError::NoGoalDefined);
    }
    let max_score = eff_scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !eff_scores.iter().all(|s| s.is_finite()) || !(max_score > 0.0) {
        return Err(AnalysisError::InvalidScores);
    }
    let rel_efficiency: Vec<f64> = eff_scores.iter().map(|s| s / max_score).collect();

    let attainment: Vec<f64> = (0..n)
        .map(|i| {
            goals
                .iter()
                .map(|&(k, _)| {
                    let best = ds.output_column(k).fold(0.0, f64::max);
                    ds.y(i, k) / best
                })
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let best = attainment.iter().copied().fold(0.0, f64::max);
    let rel_effectiveness: Vec<f64> = attainment
        .iter()
        .map(|a| if best > 0.0 { a / best } else { 0.0 })
        .collect();
    let effective: Vec<bool> = (0..n)
        .map(|i| goals.iter().all(|&(k, g)| ds.y(i, k) >= g))
        .collect();
    let classes = (0..n)
        .map(|i| {
            if effective[i]
                && rel_efficiency[i] >= thresholds.efficiency
                && rel_effectiveness[i] >= thresholds.effectiveness
            {
                ProductivityClass::Productive
            } else {
                ProductivityClass::NonProductive
            }
        })
        .collect();
    Ok(ProductivityReport {
        rel_efficiency,
        rel_effectiveness,
        efficiency_threshold: thresholds.efficiency,
        effectiveness_threshold: thresholds.effectiveness,
        classes,
        effective,
    })
}
