//! Residual measures from the sequential optimality conditions, and trace
//! export.
//!
//! The measures separate three non-equivalent readings of asymptotic
//! complementarity: the min-field `min{-g, lambda}`, the plain pairing
//! `<lambda, g>`, and the negative-part pairing `<lambda, g_->`. The last
//! is the one that stays meaningful for unbounded multiplier sequences, so
//! it is the one recorded per iteration.

use std::io::{self, Write};

use crate::alm::SolveReport;
use crate::field::Field;
use crate::problems::{Problem, ProblemError};

/// Per-iteration diagnostic quantities, alongside [`crate::alm::IterationRecord`].
#[derive(Clone, Copy, Debug)]
pub struct DiagnosticRecord {
    /// `||grad f + g'* lambda||_inf`.
    pub akkt_grad: f64,
    /// `<lambda, g_-(x)>` in the problem weighting; nonnegative.
    pub akkt_comp: f64,
    /// `||2 g'(x)* g_+(x)||`, the derivative norm of the squared constraint
    /// violation.
    pub feas_stationarity: f64,
    pub lambda_norm2: f64,
    pub lambda_norm_inf: f64,
}

/// The two asymptotic KKT quantities: the stationarity residual in the
/// infinity norm and the pairing `<lambda, g_-(x)>`.
pub fn akkt_measures(
    problem: &dyn Problem,
    x: &Field,
    lambda: &Field,
) -> Result<(f64, f64), ProblemError> {
    let stationarity = &problem.objective_gradient(x)?
        + &problem.constraint_adjoint_apply(x, lambda)?;
    let g = problem.constraint(x)?;
    let comp = lambda.inner(&g.negative_part(), problem.weight())?;
    Ok((stationarity.norm_inf(), comp))
}

/// `||2 g'(x)* g_+(x)||`, the norm of the derivative of `||g_+(x)||^2`.
/// Zero exactly at feasible points and at stationary points of the
/// constraint violation.
pub fn feasibility_stationarity(problem: &dyn Problem, x: &Field) -> Result<f64, ProblemError> {
    let g = problem.constraint(x)?;
    let adjoint = problem.constraint_adjoint_apply(x, &g.positive_part())?;
    Ok((&adjoint * 2.0).norm2(problem.weight()))
}

/// The three complementarity measures
/// `(||min{-g, lambda}||_inf, <lambda, g>, <lambda, g_->)`; the pairings use
/// the problem weighting. They scale differently along unbounded multiplier
/// sequences and are deliberately reported side by side.
pub fn complementarity_variants(
    problem: &dyn Problem,
    x: &Field,
    lambda: &Field,
) -> Result<(f64, f64, f64), ProblemError> {
    let g = problem.constraint(x)?;
    let weight = problem.weight();
    let min_form = (-&g).elementwise_min(lambda)?.norm_inf();
    let pairing_form = lambda.inner(&g, weight)?;
    let negpart_form = lambda.inner(&g.negative_part(), weight)?;
    Ok((min_form, pairing_form, negpart_form))
}

/// Writes the per-iteration trace as CSV: the iteration record columns
/// followed by the diagnostic columns, one row per outer iteration, LF line
/// endings.
pub fn write_trace_csv<W: Write>(report: &SolveReport, mut out: W) -> io::Result<()> {
    writeln!(
        out,
        "k,rho,feasibility,complementarity_v,kkt_grad_inf,kkt_comp_inf,inner_iterations,\
         multiplier_norm2,akkt_grad,akkt_comp,feas_stationarity,lambda_norm2,lambda_norm_inf"
    )?;
    for (record, diag) in report.trace.iter().zip(&report.diagnostics) {
        writeln!(
            out,
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            record.k,
            record.rho,
            record.feasibility,
            record.complementarity_v,
            record.kkt_grad_inf,
            record.kkt_comp_inf,
            record.inner_iterations,
            record.multiplier_norm2,
            diag.akkt_grad,
            diag.akkt_comp,
            diag.feas_stationarity,
            diag.lambda_norm2,
            diag.lambda_norm_inf,
        )?;
    }
    Ok(())
}
