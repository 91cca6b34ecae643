//! The outer safeguarded augmented Lagrangian loop.
//!
//! One outer iteration minimizes `L_rho(., w)` for the current penalty and
//! safeguarded multiplier, updates the multiplier estimate through the
//! positive part, and keeps the penalty only when the complementarity
//! measure `||min{-g(x), w/rho}||` decreased by the factor `tau`; otherwise
//! the penalty grows by `gamma`. The safeguard `w = min{lambda, w_max}`
//! keeps the shifts bounded regardless of the multiplier estimates.
//!
//! The Moreau-Yosida variant is the quadratic penalty special case: zero
//! shifts and a penalty increase in every iteration. Both variants stop on
//! the same inexact KKT condition, measured in the infinity norm.

use thiserror::Error;

use crate::diagnostics::DiagnosticRecord;
use crate::field::{Field, FieldError, InnerProductWeight};
use crate::newton::{newton_solve, NewtonSettings};
use crate::problems::{Problem, ProblemError};

#[derive(Debug, Error)]
pub enum AlmError {
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

impl From<FieldError> for AlmError {
    fn from(err: FieldError) -> Self {
        AlmError::Problem(ProblemError::Field(err))
    }
}

/// Which outer loop to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    /// Safeguarded multipliers with the conditional penalty update.
    SafeguardedAlm,
    /// Quadratic penalty: zero shifts, penalty increased every iteration.
    MoreauYosida,
}

/// How the safeguarded multiplier `w` is chosen from `lambda`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SafeguardRule {
    /// `w = min{lambda, w_max}` componentwise.
    MinWithWMax,
    /// `w = 0`, the pure penalty choice.
    Zero,
}

/// Upper bound for the safeguarded multiplier, a scalar broadcast or a
/// full field.
#[derive(Clone, Debug)]
pub enum WMax {
    Scalar(f64),
    Field(Field),
}

impl WMax {
    fn as_field(&self, grid: crate::field::Grid) -> Result<Field, AlmError> {
        match self {
            WMax::Scalar(s) => {
                if *s < 0.0 {
                    return Err(AlmError::InvalidConfig(format!("w_max must be >= 0, got {s}")));
                }
                Ok(Field::constant(grid, *s))
            }
            WMax::Field(f) => {
                if f.grid() != grid {
                    return Err(AlmError::InvalidConfig(
                        "w_max field lives on the wrong grid".into(),
                    ));
                }
                if f.values().iter().any(|&v| v < 0.0) {
                    return Err(AlmError::InvalidConfig("w_max must be >= 0".into()));
                }
                Ok(f.clone())
            }
        }
    }
}

/// Algorithm parameters. The defaults are the benchmark configuration:
/// `rho0 = 1`, `gamma = 10`, `tau = 0.1`, `w_max = 1e6`, `lambda0 = 0`,
/// outer tolerance `1e-4`, inner tolerance `1e-6`.
#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub rho0: f64,
    pub gamma: f64,
    pub tau: f64,
    pub w_max: WMax,
    /// Initial multiplier estimate; zero when absent.
    pub lambda0: Option<Field>,
    /// Starting point; zero when absent.
    pub x0: Option<Field>,
    /// Infinity-norm tolerance of the inexact KKT stopping test.
    pub outer_tol: f64,
    /// Infinity-norm tolerance on the subproblem gradient.
    pub inner_tol: f64,
    pub max_outer: usize,
    pub variant: Variant,
    pub safeguard_rule: SafeguardRule,
    /// Optional decreasing inner tolerance sequence; entry `k` is used in
    /// outer iteration `k` (the last entry persists). Off by default: the
    /// benchmarks use the fixed inner tolerance.
    pub inner_tol_schedule: Option<Vec<f64>>,
    pub newton: NewtonSettings,
    /// Capture `(x, lambda)` after every outer iteration.
    pub record_iterates: bool,
    /// Abort with `InnerFailure` when the penalty exceeds this cap.
    pub rho_cap: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            rho0: 1.0,
            gamma: 10.0,
            tau: 0.1,
            w_max: WMax::Scalar(1e6),
            lambda0: None,
            x0: None,
            outer_tol: 1e-4,
            inner_tol: 1e-6,
            max_outer: 50,
            variant: Variant::SafeguardedAlm,
            safeguard_rule: SafeguardRule::MinWithWMax,
            inner_tol_schedule: None,
            newton: NewtonSettings::default(),
            record_iterates: false,
            rho_cap: 1e16,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), AlmError> {
        let fail = |msg: String| Err(AlmError::InvalidConfig(msg));
        if !(self.rho0 > 0.0) {
            return fail(format!("rho0 must be positive, got {}", self.rho0));
        }
        if !(self.gamma > 1.0) {
            return fail(format!("gamma must exceed 1, got {}", self.gamma));
        }
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return fail(format!("tau must lie in (0, 1), got {}", self.tau));
        }
        if !(self.outer_tol > 0.0) || !(self.inner_tol > 0.0) {
            return fail("tolerances must be positive".into());
        }
        if self.max_outer == 0 {
            return fail("max_outer must be at least 1".into());
        }
        if let Some(schedule) = &self.inner_tol_schedule {
            if schedule.is_empty() || schedule.iter().any(|&t| !(t > 0.0)) {
                return fail("inner tolerance schedule must be positive".into());
            }
            if schedule.windows(2).any(|w| w[1] > w[0]) {
                return fail("inner tolerance schedule must be nonincreasing".into());
            }
        }
        Ok(())
    }

    fn inner_tol_at(&self, k: usize) -> f64 {
        match &self.inner_tol_schedule {
            Some(schedule) => schedule[k.min(schedule.len() - 1)],
            None => self.inner_tol,
        }
    }
}

/// Why the outer loop stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    MaxOuterReached,
    InnerFailure,
}

/// One completed outer iteration. `rho` is the penalty the subproblem was
/// solved with; the residuals are taken at the new pair `(x, lambda)`.
#[derive(Clone, Debug)]
pub struct IterationRecord {
    pub k: usize,
    pub rho: f64,
    /// `||g(x)_+||` in the problem weighting.
    pub feasibility: f64,
    /// `||min{-g(x), w/rho}||`, the penalty test quantity.
    pub complementarity_v: f64,
    pub kkt_grad_inf: f64,
    pub kkt_comp_inf: f64,
    pub inner_iterations: usize,
    pub multiplier_norm2: f64,
}

/// Structural invariants checked while the loop ran.
#[derive(Clone, Copy, Debug)]
pub struct RunInvariants {
    /// Every update satisfied `rho_{k+1} in {rho_k, gamma rho_k}` (and
    /// `= gamma rho_k` for Moreau-Yosida).
    pub rho_update_ok: bool,
    pub lambda_nonnegative: bool,
    /// `0 <= w <= w_max` componentwise in every iteration.
    pub w_within_bounds: bool,
    /// Largest deviation in `(g + w/rho)_+ = w/rho - min{-g, w/rho}`.
    pub pospart_identity_max: f64,
}

/// Full convergence record of one solve.
#[derive(Clone, Debug)]
pub struct SolveReport {
    pub status: SolveStatus,
    /// Number of subproblems solved.
    pub outer_count: usize,
    /// Newton steps summed over all subproblems.
    pub total_inner_count: usize,
    /// Penalty parameter after the final update.
    pub final_rho: f64,
    pub final_x: Field,
    pub final_lambda: Field,
    pub trace: Vec<IterationRecord>,
    pub diagnostics: Vec<DiagnosticRecord>,
    pub invariants: RunInvariants,
    /// `(x, lambda)` after each outer iteration when requested.
    pub iterates: Option<Vec<(Field, Field)>>,
    /// Weighting used for the L2-type quantities in this report.
    pub penalty_weight: InnerProductWeight,
    pub message: Option<String>,
}

/// `L_rho(x, w) = f(x) + rho/2 ||(g(x) + w/rho)_+||^2`.
pub fn augmented_lagrangian_value(
    problem: &dyn Problem,
    x: &Field,
    w: &Field,
    rho: f64,
) -> Result<f64, ProblemError> {
    problem.aug_lagrangian_value(x, w, rho)
}

/// `grad f(x) + g'(x)* (w + rho g(x))_+`.
pub fn augmented_lagrangian_gradient(
    problem: &dyn Problem,
    x: &Field,
    w: &Field,
    rho: f64,
) -> Result<Field, ProblemError> {
    problem.aug_lagrangian_gradient(x, w, rho)
}

/// Multiplier update `(w + rho g)_+`; the result is nonnegative.
pub fn multiplier_update(w: &Field, rho: f64, g_val: &Field) -> Field {
    (&(g_val * rho) + w).positive_part()
}

/// Sufficient decrease test of the penalty update: true keeps the penalty.
pub fn penalty_test(v_new: f64, v_old: f64, tau: f64) -> bool {
    v_new <= tau * v_old
}

/// Safeguarded multiplier from the current estimate.
pub fn safeguard(lambda: &Field, w_max: &Field, rule: SafeguardRule) -> Result<Field, FieldError> {
    match rule {
        SafeguardRule::MinWithWMax => lambda.elementwise_min(w_max),
        SafeguardRule::Zero => Ok(Field::zeros(lambda.grid())),
    }
}

/// The two infinity-norm residuals of the inexact KKT test:
/// `||grad f + g'* lambda||` and `||min{-g, lambda}||`.
pub fn kkt_residuals(
    problem: &dyn Problem,
    x: &Field,
    lambda: &Field,
) -> Result<(f64, f64), ProblemError> {
    let stationarity = &problem.objective_gradient(x)?
        + &problem.constraint_adjoint_apply(x, lambda)?;
    let g = problem.constraint(x)?;
    let comp = (-&g).elementwise_min(lambda)?.norm_inf();
    Ok((stationarity.norm_inf(), comp))
}

/// Runs the outer loop on `problem`.
///
/// Subproblem failures and a penalty cap overrun are reported in-band
/// through [`SolveStatus::InnerFailure`]; hard evaluation errors propagate.
pub fn solve(problem: &dyn Problem, config: &SolverConfig) -> Result<SolveReport, AlmError> {
    config.validate()?;
    let grid = problem.grid();
    let weight = problem.weight();

    let mut x = match &config.x0 {
        Some(x0) => {
            if x0.grid() != grid {
                return Err(AlmError::InvalidConfig("x0 lives on the wrong grid".into()));
            }
            x0.clone()
        }
        None => Field::zeros(grid),
    };
    let mut lambda = match &config.lambda0 {
        Some(l0) => {
            if l0.grid() != grid {
                return Err(AlmError::InvalidConfig(
                    "lambda0 lives on the wrong grid".into(),
                ));
            }
            l0.clone()
        }
        None => Field::zeros(grid),
    };
    let w_max = config.w_max.as_field(grid)?;
    let effective_rule = match config.variant {
        Variant::SafeguardedAlm => config.safeguard_rule,
        Variant::MoreauYosida => SafeguardRule::Zero,
    };

    // Baseline of the first penalty test: the k = 0 rule replaces
    // w^{-1}/rho_{-1} by the zero field.
    let g0 = problem.constraint(&x)?;
    let v_base = (-&g0)
        .elementwise_min(&Field::zeros(grid))?
        .norm2(weight);

    let mut rho = config.rho0;
    let mut prev_v = v_base;
    let mut trace: Vec<IterationRecord> = Vec::new();
    let mut diagnostics: Vec<DiagnosticRecord> = Vec::new();
    let mut iterates = config.record_iterates.then(Vec::new);
    let mut invariants = RunInvariants {
        rho_update_ok: true,
        lambda_nonnegative: true,
        w_within_bounds: true,
        pospart_identity_max: 0.0,
    };
    let mut last_kkt: Option<(f64, f64)> = None;
    let mut total_inner = 0usize;
    let status;
    let mut message = None;

    let mut k = 0usize;
    loop {
        // (S.1) with the residuals of the previous iterate; iteration 0
        // performs no check since lambda0 is arbitrary.
        if let Some((grad_inf, comp_inf)) = last_kkt {
            if grad_inf <= config.outer_tol && comp_inf <= config.outer_tol {
                status = SolveStatus::Converged;
                break;
            }
        }
        if k == config.max_outer {
            status = SolveStatus::MaxOuterReached;
            break;
        }
        if rho > config.rho_cap {
            status = SolveStatus::InnerFailure;
            message = Some(format!(
                "penalty parameter {rho:.3e} exceeded the cap {:.3e}",
                config.rho_cap
            ));
            break;
        }

        // (S.2) safeguarded shift and subproblem solve.
        let w = safeguard(&lambda, &w_max, effective_rule)?;
        if w.values().iter().zip(w_max.values()).any(|(&wi, &mi)| wi < 0.0 || wi > mi) {
            invariants.w_within_bounds = false;
        }
        let mut newton_settings = config.newton.clone();
        newton_settings.tol_inf = config.inner_tol_at(k);
        let outcome = newton_solve(problem, &w, rho, &x, &newton_settings)?;
        total_inner += outcome.iterations;
        x = outcome.x;

        // (S.3) multiplier update and conditional penalty update.
        let g = problem.constraint(&x)?;
        lambda = multiplier_update(&w, rho, &g);
        if lambda.values().iter().any(|&v| v < 0.0) {
            invariants.lambda_nonnegative = false;
        }

        let w_over_rho = &w * (1.0 / rho);
        let min_field = (-&g).elementwise_min(&w_over_rho)?;
        let shifted_pospart = (&g + &w_over_rho).positive_part();
        let identity_gap = (&shifted_pospart - &(&w_over_rho - &min_field)).norm_inf();
        invariants.pospart_identity_max = invariants.pospart_identity_max.max(identity_gap);

        let v_new = min_field.norm2(weight);
        let keep_rho = penalty_test(v_new, prev_v, config.tau);
        let rho_used = rho;
        rho = match config.variant {
            Variant::MoreauYosida => config.gamma * rho,
            Variant::SafeguardedAlm if keep_rho => rho,
            Variant::SafeguardedAlm => config.gamma * rho,
        };
        prev_v = v_new;

        let kkt = kkt_residuals(problem, &x, &lambda)?;
        last_kkt = Some(kkt);

        let g_neg = g.negative_part();
        let akkt_comp = lambda.inner(&g_neg, weight)?;
        let feas_adjoint = problem.constraint_adjoint_apply(&x, &g.positive_part())?;
        diagnostics.push(DiagnosticRecord {
            akkt_grad: kkt.0,
            akkt_comp,
            feas_stationarity: (&feas_adjoint * 2.0).norm2(weight),
            lambda_norm2: lambda.norm2(weight),
            lambda_norm_inf: lambda.norm_inf(),
        });
        trace.push(IterationRecord {
            k,
            rho: rho_used,
            feasibility: g.positive_part().norm2(weight),
            complementarity_v: v_new,
            kkt_grad_inf: kkt.0,
            kkt_comp_inf: kkt.1,
            inner_iterations: outcome.iterations,
            multiplier_norm2: lambda.norm2(weight),
        });
        if let Some(iterates) = iterates.as_mut() {
            iterates.push((x.clone(), lambda.clone()));
        }

        if !outcome.converged {
            status = SolveStatus::InnerFailure;
            message = Some(format!(
                "subproblem {k} stopped at gradient norm {:.3e} (tolerance {:.1e})",
                outcome.grad_inf, newton_settings.tol_inf
            ));
            break;
        }
        k += 1;
    }

    invariants.rho_update_ok = rho_updates_consistent(&trace, rho, config);

    Ok(SolveReport {
        status,
        outer_count: trace.len(),
        total_inner_count: total_inner,
        final_rho: rho,
        final_x: x,
        final_lambda: lambda,
        trace,
        diagnostics,
        invariants,
        iterates,
        penalty_weight: weight,
        message,
    })
}

/// Re-derives the penalty update pattern from the trace: every step is
/// either a hold or a multiplication by `gamma` (always the latter for the
/// Moreau-Yosida variant).
fn rho_updates_consistent(trace: &[IterationRecord], final_rho: f64, config: &SolverConfig) -> bool {
    let mut chain: Vec<f64> = trace.iter().map(|r| r.rho).collect();
    chain.push(final_rho);
    chain.windows(2).all(|pair| {
        let hold = pair[1] == pair[0];
        let grow = pair[1] == config.gamma * pair[0];
        match config.variant {
            Variant::MoreauYosida => grow,
            Variant::SafeguardedAlm => hold || grow,
        }
    })
}
