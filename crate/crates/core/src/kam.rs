//! Epsilon-neighborhood efficiency model.
//!
//! For firm `l` the model searches the constant-returns hull of observed
//! firms for the point whose weighted output/input ratio beats `l` by the
//! largest factor, allowing `l`'s own inputs to grow by up to `ε_in` and its
//! outputs to shrink by up to `ε_out`. The fractional objective is
//! linearised with a scaling variable `t`:
//!
//! ```text
//! min   Σ_j V_in[j] (t x_lj + t ε_in[j] − s_in[j])
//! s.t.  Σ_k V_out[k] (t y_lk − t ε_out[k] + s_out[k]) = 1
//!       Σ_i λ_i x_ij + s_in[j]  = t (x_lj + ε_in[j])
//!       Σ_i λ_i y_ik − s_out[k] = t (y_lk − ε_out[k])
//!       s_in[j]  (= | ≤) t ε_in[j]    for uncontrollable inputs
//!       s_out[k] (= | ≥) t ε_out[k]   for uncontrollable outputs
//!       λ, s ≥ 0,  t > 0
//! ```
//!
//! The score is the optimum (1 when nothing better is reachable). Targets
//! are `x* = x_l + ε_in − s_in/t` and `y* = y_l − ε_out + s_out/t`.

use std::sync::OnceLock;

use thiserror::Error;

use crate::dataset::{Dataset, UncontrollableMode};
use crate::lp::{self, LinearProgram, LpError, LpStatus, ObjectiveSense, RowSense};
use crate::schemes::{
    make_epsilon, make_weights, EpsilonScheme, EpsilonVector, NormalizedWeights, SchemeError,
    WeightScheme,
};

/// Strictly positive lower bound standing in for `t > 0`.
pub const T_LOWER_BOUND: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KamError {
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("firm `{firm}`: LP reported {status:?}")]
    Solver { firm: String, status: LpStatus },
    #[error("firm `{0}`: scaling variable t reached its lower bound")]
    DegenerateScaling(String),
    #[error("uncontrollable factor `{0}` has no mode; set it in the schema or override it")]
    MissingUncontrollableMode(String),
    #[error("uncontrollable index {index} out of range for {side} factors")]
    UncontrollableIndex { side: &'static str, index: usize },
}

impl KamError {
    /// True for failures of the numerical kernel (as opposed to bad input).
    pub fn is_solver_failure(&self) -> bool {
        matches!(
            self,
            Self::Lp(LpError::NumericalBreakdown(_))
                | Self::Solver { .. }
                | Self::DegenerateScaling(_)
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KamConfig {
    pub weights: WeightScheme,
    pub epsilon: EpsilonScheme,
    /// Uncontrollable inputs `(index, mode)`.
    pub uncontrollable_in: Vec<(usize, UncontrollableMode)>,
    /// Uncontrollable outputs `(index, mode)`.
    pub uncontrollable_out: Vec<(usize, UncontrollableMode)>,
}

impl KamConfig {
    /// All factors treated as controllable.
    pub fn new(weights: WeightScheme, epsilon: EpsilonScheme) -> Self {
        Self {
            weights,
            epsilon,
            uncontrollable_in: Vec::new(),
            uncontrollable_out: Vec::new(),
        }
    }

    /// Uncontrollable sets taken from the schema. `mode_override`, when
    /// given, replaces every factor's own mode.
    pub fn from_schema(
        ds: &Dataset,
        weights: WeightScheme,
        epsilon: EpsilonScheme,
        mode_override: Option<UncontrollableMode>,
    ) -> Result<Self, KamError> {
        let collect = |factors: &[crate::dataset::FactorSchema]| {
            factors
                .iter()
                .enumerate()
                .filter(|(_, f)| !f.controllable)
                .map(|(i, f)| {
                    mode_override
                        .or(f.uncontrollable_mode)
                        .map(|mode| (i, mode))
                        .ok_or_else(|| KamError::MissingUncontrollableMode(f.name.clone()))
                })
                .collect::<Result<Vec<_>, _>>()
        };
        Ok(Self {
            uncontrollable_in: collect(ds.inputs())?,
            uncontrollable_out: collect(ds.outputs())?,
            weights,
            epsilon,
        })
    }

    fn check(&self, ds: &Dataset) -> Result<(), KamError> {
        if let Some(&(index, _)) = self
            .uncontrollable_in
            .iter()
            .find(|(j, _)| *j >= ds.num_inputs())
        {
            return Err(KamError::UncontrollableIndex {
                side: "input",
                index,
            });
        }
        if let Some(&(index, _)) = self
            .uncontrollable_out
            .iter()
            .find(|(k, _)| *k >= ds.num_outputs())
        {
            return Err(KamError::UncontrollableIndex {
                side: "output",
                index,
            });
        }
        Ok(())
    }
}

/// Column layout of the primal LP.
#[derive(Debug, Clone, Copy)]
pub struct PrimalLayout {
    pub n: usize,
    pub m: usize,
    pub p: usize,
}

impl PrimalLayout {
    pub fn of(ds: &Dataset) -> Self {
        Self {
            n: ds.num_firms(),
            m: ds.num_inputs(),
            p: ds.num_outputs(),
        }
    }
    pub fn lambda(&self, i: usize) -> usize {
        i
    }
    pub fn s_in(&self, j: usize) -> usize {
        self.n + j
    }
    pub fn s_out(&self, k: usize) -> usize {
        self.n + self.m + k
    }
    pub fn t(&self) -> usize {
        self.n + self.m + self.p
    }
    pub fn num_vars(&self) -> usize {
        self.n + self.m + self.p + 1
    }
}

/// Weights, epsilon vector and primal LP for one firm.
#[derive(Debug, Clone)]
pub struct PrimalModel {
    pub weights: NormalizedWeights,
    pub epsilon: EpsilonVector,
    pub layout: PrimalLayout,
    pub lp: LinearProgram,
}

fn prepare(
    ds: &Dataset,
    cfg: &KamConfig,
    firm: usize,
) -> Result<(NormalizedWeights, EpsilonVector), KamError> {
    cfg.check(ds)?;
    let weights = make_weights(ds, &cfg.weights, firm)?;
    let epsilon = make_epsilon(ds, &weights, &cfg.epsilon, firm)?;
    Ok((weights, epsilon))
}

pub fn build_primal(ds: &Dataset, cfg: &KamConfig, firm: usize) -> Result<PrimalModel, KamError> {
    let (weights, epsilon) = prepare(ds, cfg, firm)?;
    let layout = PrimalLayout::of(ds);
    let PrimalLayout { n, m, p } = layout;
    let nv = layout.num_vars();
    let x_l = ds.input_row(firm);
    let y_l = ds.output_row(firm);
    let (v_in, v_out) = (&weights.v_in, &weights.v_out);
    let (e_in, e_out) = (&epsilon.eps_in, &epsilon.eps_out);

    let mut c = vec![0.0; nv];
    for j in 0..m {
        c[layout.s_in(j)] = -v_in[j];
    }
    c[layout.t()] = (0..m).map(|j| v_in[j] * (x_l[j] + e_in[j])).sum();
    let mut lp = LinearProgram::new(ObjectiveSense::Min, c);

    let mut norm = vec![0.0; nv];
    for k in 0..p {
        norm[layout.s_out(k)] = v_out[k];
    }
    norm[layout.t()] = (0..p).map(|k| v_out[k] * (y_l[k] - e_out[k])).sum();
    lp.add_row(norm, RowSense::Eq, 1.0);

    for j in 0..m {
        let mut row = vec![0.0; nv];
        for i in 0..n {
            row[layout.lambda(i)] = ds.x(i, j);
        }
        row[layout.s_in(j)] = 1.0;
        row[layout.t()] = -(x_l[j] + e_in[j]);
        lp.add_row(row, RowSense::Eq, 0.0);
    }
    for k in 0..p {
        let mut row = vec![0.0; nv];
        for i in 0..n {
            row[layout.lambda(i)] = ds.y(i, k);
        }
        row[layout.s_out(k)] = -1.0;
        row[layout.t()] = -(y_l[k] - e_out[k]);
        lp.add_row(row, RowSense::Eq, 0.0);
    }
    for &(j, mode) in &cfg.uncontrollable_in {
        let mut row = vec![0.0; nv];
        row[layout.s_in(j)] = 1.0;
        row[layout.t()] = -e_in[j];
        let sense = match mode {
            UncontrollableMode::Fixed => RowSense::Eq,
            UncontrollableMode::Bounded => RowSense::Le,
        };
        lp.add_row(row, sense, 0.0);
    }
    for &(k, mode) in &cfg.uncontrollable_out {
        let mut row = vec![0.0; nv];
        row[layout.s_out(k)] = 1.0;
        row[layout.t()] = -e_out[k];
        let sense = match mode {
            UncontrollableMode::Fixed => RowSense::Eq,
            UncontrollableMode::Bounded => RowSense::Ge,
        };
        lp.add_row(row, sense, 0.0);
    }
    lp.set_lower_bound(layout.t(), T_LOWER_BOUND);

    Ok(PrimalModel {
        weights,
        epsilon,
        layout,
        lp,
    })
}

/// Optimal multipliers of the dual program.
#[derive(Debug, Clone, PartialEq)]
pub struct DualCertificate {
    pub tau: f64,
    pub w_in: Vec<f64>,
    pub w_out: Vec<f64>,
    /// Multipliers of the uncontrollable-input rows, in config order.
    pub theta_in: Vec<f64>,
    /// Multipliers of the uncontrollable-output rows, in config order.
    pub rho_out: Vec<f64>,
}

/// Build the dual program explicitly:
///
/// ```text
/// max τ
/// s.t. τ Σ V_out (y_l − ε_out) + Σ w_in (x_l + ε_in) − Σ w_out (y_l − ε_out)
///        + Σ_{J_u} θ_j ε_in[j] − Σ_{K_u} ρ_k ε_out[k] = Σ V_in (x_l + ε_in)
///      Σ_k w_out[k] y_ik − Σ_j w_in[j] x_ij ≤ 0       for every firm i
///      w_in[j] ≥ V_in[j]            (j controllable)
///      w_in[j] + θ_j ≥ V_in[j]      (j uncontrollable)
///      w_out[k] − τ V_out[k] ≥ 0    (k controllable)
///      w_out[k] − τ V_out[k] − ρ_k ≥ 0   (k uncontrollable)
/// ```
///
/// θ, ρ are free for fixed factors and non-negative for bounded ones.
pub fn build_dual(ds: &Dataset, cfg: &KamConfig, firm: usize) -> Result<LinearProgram, KamError> {
    let (weights, epsilon) = prepare(ds, cfg, firm)?;
    let (n, m, p) = (ds.num_firms(), ds.num_inputs(), ds.num_outputs());
    let ju = cfg.uncontrollable_in.len();
    let ku = cfg.uncontrollable_out.len();
    let tau = 0;
    let w_in = |j: usize| 1 + j;
    let w_out = |k: usize| 1 + m + k;
    let theta = |q: usize| 1 + m + p + q;
    let rho = |q: usize| 1 + m + p + ju + q;
    let nv = 1 + m + p + ju + ku;
    let x_l = ds.input_row(firm);
    let y_l = ds.output_row(firm);
    let (v_in, v_out) = (&weights.v_in, &weights.v_out);
    let (e_in, e_out) = (&epsilon.eps_in, &epsilon.eps_out);

    let mut c = vec![0.0; nv];
    c[tau] = 1.0;
    let mut lp = LinearProgram::new(ObjectiveSense::Max, c);
    lp.set_lower_bound(tau, f64::NEG_INFINITY);
    for k in 0..p {
        lp.set_lower_bound(w_out(k), f64::NEG_INFINITY);
    }

    let mut row = vec![0.0; nv];
    row[tau] = (0..p).map(|k| v_out[k] * (y_l[k] - e_out[k])).sum();
    for j in 0..m {
        row[w_in(j)] = x_l[j] + e_in[j];
    }
    for k in 0..p {
        row[w_out(k)] = -(y_l[k] - e_out[k]);
    }
    for (q, &(j, _)) in cfg.uncontrollable_in.iter().enumerate() {
        row[theta(q)] = e_in[j];
    }
    for (q, &(k, _)) in cfg.uncontrollable_out.iter().enumerate() {
        row[rho(q)] = -e_out[k];
    }
    let rhs = (0..m).map(|j| v_in[j] * (x_l[j] + e_in[j])).sum();
    lp.add_row(row, RowSense::Eq, rhs);

    for i in 0..n {
        let mut row = vec![0.0; nv];
        for j in 0..m {
            row[w_in(j)] = -ds.x(i, j);
        }
        for k in 0..p {
            row[w_out(k)] = ds.y(i, k);
        }
        lp.add_row(row, RowSense::Le, 0.0);
    }

    for j in 0..m {
        match cfg.uncontrollable_in.iter().position(|&(jj, _)| jj == j) {
            None => lp.set_lower_bound(w_in(j), v_in[j]),
            Some(q) => {
                lp.set_lower_bound(w_in(j), f64::NEG_INFINITY);
                let mut row = vec![0.0; nv];
                row[w_in(j)] = 1.0;
                row[theta(q)] = 1.0;
                lp.add_row(row, RowSense::Ge, v_in[j]);
                if cfg.uncontrollable_in[q].1 == UncontrollableMode::Fixed {
                    lp.set_lower_bound(theta(q), f64::NEG_INFINITY);
                }
            }
        }
    }
    for k in 0..p {
        let mut row = vec![0.0; nv];
        row[w_out(k)] = 1.0;
        row[tau] = -v_out[k];
        if let Some(q) = cfg.uncontrollable_out.iter().position(|&(kk, _)| kk == k) {
            row[rho(q)] = -1.0;
            if cfg.uncontrollable_out[q].1 == UncontrollableMode::Fixed {
                lp.set_lower_bound(rho(q), f64::NEG_INFINITY);
            }
        }
        lp.add_row(row, RowSense::Ge, 0.0);
    }
    Ok(lp)
}

pub fn solve_dual(ds: &Dataset, cfg: &KamConfig, firm: usize) -> Result<DualCertificate, KamError> {
    let lp = build_dual(ds, cfg, firm)?;
    debug_dump(ds, firm, "dual", &lp);
    let sol = lp::solve(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(KamError::Solver {
            firm: ds.firms()[firm].clone(),
            status: sol.status,
        });
    }
    let (m, p) = (ds.num_inputs(), ds.num_outputs());
    let ju = cfg.uncontrollable_in.len();
    let x = &sol.x;
    Ok(DualCertificate {
        tau: x[0],
        w_in: x[1..1 + m].to_vec(),
        w_out: x[1 + m..1 + m + p].to_vec(),
        theta_in: x[1 + m + p..1 + m + p + ju].to_vec(),
        rho_out: x[1 + m + p + ju..].to_vec(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct KamResult {
    pub firm: usize,
    pub score: f64,
    pub t_star: f64,
    /// Intensities divided by `t*`.
    pub lambda: Vec<f64>,
    /// Input slacks divided by `t*`.
    pub slack_in: Vec<f64>,
    /// Output slacks divided by `t*`.
    pub slack_out: Vec<f64>,
    pub target_in: Vec<f64>,
    pub target_out: Vec<f64>,
    pub epsilon: EpsilonVector,
    pub weights: NormalizedWeights,
    pub dual: DualCertificate,
    /// Raw primal LP values `(λ̃, s̃_in, s̃_out, t)`.
    pub raw: Vec<f64>,
}

impl KamResult {
    pub fn dual_tau(&self) -> f64 {
        self.dual.tau
    }
}

fn debug_enabled() -> bool {
    static FLAG: OnceLock<bool> = OnceLock::new();
    *FLAG.get_or_init(|| std::env::var("KAM_LP_DEBUG").is_ok_and(|v| v == "1"))
}

fn debug_dump(ds: &Dataset, firm: usize, which: &str, lp: &LinearProgram) {
    if debug_enabled() {
        eprintln!(
            "# firm {} {which}\n{}",
            ds.firms()[firm],
            lp.to_debug_text()
        );
    }
}

/// Score, slacks, targets and dual certificate for `firm`.
pub fn evaluate(ds: &Dataset, cfg: &KamConfig, firm: usize) -> Result<KamResult, KamError> {
    let model = build_primal(ds, cfg, firm)?;
    debug_dump(ds, firm, "primal", &model.lp);
    let sol = lp::solve(&model.lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(KamError::Solver {
            firm: ds.firms()[firm].clone(),
            status: sol.status,
        });
    }
    let lay = model.layout;
    let t = sol.x[lay.t()];
    if t <= T_LOWER_BOUND * (1.0 + 1e-6) {
        return Err(KamError::DegenerateScaling(ds.firms()[firm].clone()));
    }
    if debug_enabled() {
        let raw: Vec<String> = sol.x.iter().map(|v| format!("{v:.16e}")).collect();
        eprintln!(
            "# firm {} primal solution\n{}",
            ds.firms()[firm],
            raw.join(" ")
        );
    }
    let lambda: Vec<f64> = (0..lay.n).map(|i| sol.x[lay.lambda(i)] / t).collect();
    let slack_in: Vec<f64> = (0..lay.m).map(|j| sol.x[lay.s_in(j)] / t).collect();
    let slack_out: Vec<f64> = (0..lay.p).map(|k| sol.x[lay.s_out(k)] / t).collect();
    let target_in = (0..lay.m)
        .map(|j| ds.x(firm, j) + model.epsilon.eps_in[j] - slack_in[j])
        .collect();
    let target_out = (0..lay.p)
        .map(|k| ds.y(firm, k) - model.epsilon.eps_out[k] + slack_out[k])
        .collect();
    let dual = solve_dual(ds, cfg, firm)?;
    Ok(KamResult {
        firm,
        score: sol.objective,
        t_star: t,
        lambda,
        slack_in,
        slack_out,
        target_in,
        target_out,
        epsilon: model.epsilon,
        weights: model.weights,
        dual,
        raw: sol.x,
    })
}

/// How `evaluate_all` distributes firms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// Rayon thread pool; falls back to sequential without the
    /// `parallel` feature.
    #[default]
    Parallel,
}

pub fn evaluate_all(ds: &Dataset, cfg: &KamConfig) -> Vec<Result<KamResult, KamError>> {
    evaluate_all_with(ds, cfg, Execution::default())
}

/// Evaluate every firm, in dataset order. Errors are collected per firm.
pub fn evaluate_all_with(
    ds: &Dataset,
    cfg: &KamConfig,
    exec: Execution,
) -> Vec<Result<KamResult, KamError>> {
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            (0..ds.num_firms())
                .into_par_iter()
                .map(|l| evaluate(ds, cfg, l))
                .collect()
        }
        _ => (0..ds.num_firms()).map(|l| evaluate(ds, cfg, l)).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{airports, RUNWAY};
    use crate::schemes::EpsilonKind;

    fn airport_cfg(eps: f64, mode: UncontrollableMode) -> KamConfig {
        let ds = airports();
        KamConfig::from_schema(
            &ds,
            WeightScheme::Sbm,
            EpsilonScheme::per_firm(eps),
            Some(mode),
        )
        .unwrap()
    }

    fn two_firms(a: (f64, f64), b: (f64, f64)) -> Dataset {
        Dataset::from_rows(
            vec!["A".into(), "B".into()],
            vec![vec![a.0], vec![b.0]],
            vec![vec![a.1], vec![b.1]],
        )
        .unwrap()
    }

    fn unit_cfg(eps: f64) -> KamConfig {
        KamConfig::new(
            WeightScheme::custom(vec![1.0], vec![1.0]).unwrap(),
            EpsilonScheme::per_firm(eps),
        )
    }

    #[test]
    fn self_evaluation_single_firm() {
        let ds = Dataset::from_rows(vec!["F".into()], vec![vec![3.0]], vec![vec![5.0]]).unwrap();
        let r = evaluate(&ds, &unit_cfg(0.0), 0).unwrap();
        assert!((r.score - 1.0).abs() < 1e-12);
        assert!((r.lambda[0] - 1.0).abs() < 1e-12);
        assert!(r.slack_in[0].abs() < 1e-12 && r.slack_out[0].abs() < 1e-12);
        assert!((r.dual.tau - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_firm_half_score() {
        // Basic feasible solutions of the 3-row system, enumerated by hand:
        // λ_B-only vertex gives objective 1/2, λ_A-only gives 1.
        let ds = two_firms((2.0, 1.0), (1.0, 1.0));
        let r = evaluate(&ds, &unit_cfg(0.0), 0).unwrap();
        assert!((r.score - 0.5).abs() < 1e-12, "{}", r.score);
        assert!((r.lambda[1] - 1.0).abs() < 1e-12);
        assert!((r.target_in[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn primal_layout_and_rows() {
        let ds = airports();
        let m = build_primal(&ds, &airport_cfg(0.01, UncontrollableMode::Fixed), 3).unwrap();
        assert_eq!(m.lp.num_vars(), 8 + 4 + 3 + 1);
        assert_eq!(m.lp.num_rows(), 1 + 4 + 3 + 1);
        assert_eq!(m.lp.row_sense[8], RowSense::Eq);
        assert_eq!(m.lp.lower_bounds[m.layout.t()], T_LOWER_BOUND);
        let b = build_primal(&ds, &airport_cfg(0.01, UncontrollableMode::Bounded), 3).unwrap();
        assert_eq!(b.lp.row_sense[8], RowSense::Le);
    }

    #[test]
    fn firm_d_published_scores() {
        let ds = airports();
        let cfg = airport_cfg(0.01, UncontrollableMode::Fixed);
        let r = evaluate(&ds, &cfg, 3).unwrap();
        assert!((r.score - 0.63590).abs() < 5e-6, "{}", r.score);
        assert!((r.dual.tau - 0.63590).abs() < 1e-5);
    }

    #[test]
    fn firm_a_fixed_vs_bounded() {
        let ds = airports();
        let fixed = evaluate(&ds, &airport_cfg(0.1, UncontrollableMode::Fixed), 0).unwrap();
        let bounded = evaluate(&ds, &airport_cfg(0.1, UncontrollableMode::Bounded), 0).unwrap();
        assert!((fixed.score - 0.85672).abs() < 5e-6);
        assert!((bounded.score - 0.84096).abs() < 5e-6);
        assert!((fixed.target_in[RUNWAY] - 353_610.0).abs() < 353_610.0 * 1e-9);
        assert!(bounded.target_in[RUNWAY] >= 353_610.0 * (1.0 - 1e-9));
    }

    #[test]
    fn zero_epsilon_fixed_runway_pins_runway() {
        let ds = airports();
        let cfg = airport_cfg(0.0, UncontrollableMode::Fixed);
        for l in 0..ds.num_firms() {
            let r = evaluate(&ds, &cfg, l).unwrap();
            assert!(r.slack_in[RUNWAY].abs() < 1e-9);
            let combo: f64 = (0..8).map(|i| r.lambda[i] * ds.x(i, RUNWAY)).sum();
            assert!((combo - ds.x(l, RUNWAY)).abs() <= 1e-7 * ds.x(l, RUNWAY));
        }
    }

    #[test]
    fn missing_mode_is_an_error() {
        let ds = airports()
            .map_schema(|mut f| {
                f.uncontrollable_mode = None;
                f
            })
            .unwrap();
        let err =
            KamConfig::from_schema(&ds, WeightScheme::Sbm, EpsilonScheme::per_firm(0.0), None);
        assert_eq!(
            err,
            Err(KamError::MissingUncontrollableMode("Runway".into()))
        );
    }

    #[test]
    fn bad_uncontrollable_index() {
        let ds = two_firms((1.0, 1.0), (2.0, 1.0));
        let mut cfg = unit_cfg(0.0);
        cfg.uncontrollable_in.push((3, UncontrollableMode::Fixed));
        assert!(matches!(
            evaluate(&ds, &cfg, 0),
            Err(KamError::UncontrollableIndex { .. })
        ));
    }

    #[test]
    fn uncontrollable_output_bounded_keeps_target_above() {
        let ds = Dataset::from_rows(
            vec!["A".into(), "B".into(), "C".into()],
            vec![vec![2.0, 1.0], vec![1.0, 2.0], vec![2.0, 2.0]],
            vec![vec![3.0, 1.0], vec![1.0, 3.0], vec![1.0, 1.0]],
        )
        .unwrap();
        for mode in [UncontrollableMode::Fixed, UncontrollableMode::Bounded] {
            let mut cfg = KamConfig::new(WeightScheme::Sbm, EpsilonScheme::per_firm(0.1));
            cfg.uncontrollable_out.push((1, mode));
            for l in 0..3 {
                let r = evaluate(&ds, &cfg, l).unwrap();
                let y = ds.y(l, 1);
                match mode {
                    UncontrollableMode::Fixed => assert!((r.target_out[1] - y).abs() <= 1e-9 * y),
                    UncontrollableMode::Bounded => assert!(r.target_out[1] >= y - 1e-9),
                }
                assert!((r.score - r.dual.tau).abs() <= 1e-6 * r.score.max(1.0));
            }
        }
    }

    #[test]
    fn explicit_epsilon_equals_per_firm_values() {
        let ds = airports();
        let l = 4;
        let eps_in: Vec<f64> = ds.input_row(l).iter().map(|v| v * 0.01).collect();
        let eps_out: Vec<f64> = ds.output_row(l).iter().map(|v| v * 0.01).collect();
        let explicit = EpsilonScheme::new(EpsilonKind::Explicit { eps_in, eps_out }, 0.0);
        let mut cfg = airport_cfg(0.01, UncontrollableMode::Fixed);
        let a = evaluate(&ds, &cfg, l).unwrap().score;
        cfg.epsilon = explicit;
        let b = evaluate(&ds, &cfg, l).unwrap().score;
        assert!((a - b).abs() < 1e-9);
        assert!((a - 0.54534).abs() < 5e-6);
    }

    #[test]
    fn evaluate_all_collects_errors() {
        let ds = Dataset::from_rows(
            vec!["A".into(), "B".into()],
            vec![vec![1.0], vec![1.0]],
            vec![vec![0.0], vec![1.0]],
        )
        .unwrap();
        let cfg = KamConfig::new(WeightScheme::Sbm, EpsilonScheme::per_firm(0.0));
        let all = evaluate_all(&ds, &cfg);
        assert!(matches!(
            all[0],
            Err(KamError::Scheme(SchemeError::ZeroDataUnderSbm { .. }))
        ));
        assert!(all[1].is_ok());
    }

    #[test]
    fn parallel_matches_sequential_bitwise() {
        let ds = airports();
        let cfg = airport_cfg(0.01, UncontrollableMode::Bounded);
        let seq = evaluate_all_with(&ds, &cfg, Execution::Sequential);
        let par = evaluate_all_with(&ds, &cfg, Execution::Parallel);
        assert_eq!(seq, par);
    }
}
