// Scratch driver for calibration runs.
use alm_core::problems::{BratuProblem, ControlProblem, ObstacleProblem};
use alm_core::{solve, Grid, SolverConfig, Variant};
use std::time::Instant;

fn main() {
    let which = std::env::args().nth(1).unwrap_or_else(|| "obstacle".into());
    let ns: Vec<usize> = std::env::args()
        .nth(2)
        .unwrap_or_else(|| "16,32,64".into())
        .split(',')
        .map(|s| s.parse().unwrap())
        .collect();
    for &n in &ns {
        for variant in [Variant::SafeguardedAlm, Variant::MoreauYosida] {
            let grid = Grid::new(n);
            let config = SolverConfig {
                variant,
                ..SolverConfig::default()
            };
            let start = Instant::now();
            let report = match which.as_str() {
                "obstacle" => solve(&ObstacleProblem::new(grid), &config),
                "bratu" => solve(&BratuProblem::new(grid, 1.0), &config),
                "control" => solve(&ControlProblem::new(grid), &config),
                other => panic!("unknown problem {other}"),
            }
            .unwrap();
            println!(
                "{which} n={n} {variant:?}: status={:?} outer={} inner={} final_rho={:.1e} t={:.2}s",
                report.status,
                report.outer_count,
                report.total_inner_count,
                report.final_rho,
                start.elapsed().as_secs_f64()
            );
            for r in &report.trace {
                println!(
                    "  k={} rho={:.1e} inner={} V={:.3e} feas={:.3e} kkt=({:.2e},{:.2e}) |lam|={:.3e}",
                    r.k,
                    r.rho,
                    r.inner_iterations,
                    r.complementarity_v,
                    r.feasibility,
                    r.kkt_grad_inf,
                    r.kkt_comp_inf,
                    r.multiplier_norm2
                );
            }
        }
    }
}
