// Scratch driver: activity of the state constraint for candidate targets.
use alm_core::problems::{default_state_bound, ControlProblem};
use alm_core::{solve, Field, Grid, SolverConfig, Variant};

fn main() {
    let ns: Vec<usize> = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "16,32,64".into())
        .split(',')
        .map(|s| s.parse().unwrap())
        .collect();
    for &n in &ns {
        let grid = Grid::new(n);
        let pi = std::f64::consts::PI;
        let candidates: Vec<(&str, Field)> = vec![
            (
                "8ss-4",
                Field::from_fn(grid, |x, y| 8.0 * (pi * x).sin() * (pi * y).sin() - 4.0),
            ),
            (
                "4-8ss",
                Field::from_fn(grid, |x, y| 4.0 - 8.0 * (pi * x).sin() * (pi * y).sin()),
            ),
            (
                "-2-2ss",
                Field::from_fn(grid, |x, y| -2.0 - 2.0 * (pi * x).sin() * (pi * y).sin()),
            ),
        ];
        for (name, y_d) in candidates {
            let problem =
                ControlProblem::with_params(grid, 1e-3, y_d, default_state_bound(grid)).unwrap();
            for variant in [Variant::SafeguardedAlm, Variant::MoreauYosida] {
                let config = SolverConfig {
                    variant,
                    ..SolverConfig::default()
                };
                let report = solve(&problem, &config).unwrap();
                let y = problem.state_solve(&report.final_x).unwrap();
                let slack = (&y - problem.state_bound())
                    .values()
                    .iter()
                    .cloned()
                    .fold(f64::INFINITY, f64::min);
                println!(
                    "n={n} y_d={name} {variant:?}: status={:?} outer={} inner={} rho={:.0e} |lam|2={:.3e} |lam|inf={:.3e} min(y-yc)={:.2e}",
                    report.status,
                    report.outer_count,
                    report.total_inner_count,
                    report.final_rho,
                    report.final_lambda.norm2(alm_core::InnerProductWeight::MeshWeighted),
                    report.final_lambda.norm_inf(),
                    slack
                );
            }
        }
    }
}
