// Development probe: where does the step-size controller spend its time?

use fastdiff::model::{alpha_flux, FluxProfile};
use fastdiff::radial::{build_radial_grid, solve, Grading, Mobility, RadialField, RadialProblem};
use fastdiff::stepping::StepperConfig;

fn main() {
    let (m, q, d1) = (1.0 / 3.0, 4.5, 0.4);
    let alpha = alpha_flux(m, q, d1);
    let grid = build_radial_grid(0.1, 1.0, 400, Grading::Geometric { ratio: 1.05 }, 3).unwrap();
    let widths: Vec<f64> = grid.faces.windows(2).map(|w| w[1] - w[0]).collect();
    println!(
        "first widths: {:.3e} {:.3e} {:.3e}, mid {:.3e}, last {:.3e}",
        widths[0],
        widths[1],
        widths[2],
        widths[200],
        widths[399]
    );
    let profile = fastdiff::model::SingularProfile {
        params: fastdiff::model::SingularDataParams { c1: 1.0, c2: 1.0, q, delta1: d1 },
        choice: fastdiff::model::EnvelopeChoice::GeometricMean,
    };
    let p1 = RadialProblem {
        grid: grid.clone(),
        mobility: Mobility::Bare { m },
        inner_flux: FluxProfile::Constant { value: alpha },
        outer_flux: FluxProfile::zero(),
        inner_scale: 0.1f64.powf(-(m * q + 1.0)),
    };
    let u0 = RadialField::from_profile(&grid, |r| profile.eval(r));
    let cfg = StepperConfig::default();
    let traj = solve(&p1, &u0, &cfg, 0.2, &[]).unwrap();
    println!("steps to t=0.2: {}", traj.steps.len());
    // dt and biggest-mover diagnostics along the way
    let mut shown = 0;
    for (k, s) in traj.steps.iter().enumerate() {
        if k % (traj.steps.len() / 25).max(1) == 0 || k + 1 == traj.steps.len() {
            let prev = &traj.fields[k];
            let now = &traj.fields[k + 1];
            let floor = 1e-6 * prev.max();
            let (mut worst, mut cell) = (0.0f64, 0usize);
            for (c, (&a, &b)) in prev.values.iter().zip(&now.values).enumerate() {
                let rc = (b - a).abs() / (a.abs() + floor);
                if rc > worst {
                    worst = rc;
                    cell = c;
                }
            }
            println!(
                "k={k:>6} t={:.4e} dt={:.3e} iters={} rc={:.3e} cell={} r={:.3e} u={:.3e}",
                s.t, s.dt, s.newton_iters, worst, cell, grid.centers[cell], now.values[cell]
            );
            shown += 1;
        }
    }
    let _ = shown;
}
