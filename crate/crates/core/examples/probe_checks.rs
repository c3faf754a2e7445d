// Development probe: standard solve with the intrinsic-rate and mass checks.

use fastdiff::model::{alpha_flux, FluxProfile};
use fastdiff::radial::{build_radial_grid, solve, Grading, Mobility, RadialField, RadialProblem};
use fastdiff::stepping::{sync_times, StepperConfig};
use fastdiff::verify::{check_aronson_benilan, check_mass_balance, check_positivity};

fn main() {
    let (m, q, d1) = (1.0 / 3.0, 4.5, 0.4);
    let alpha = alpha_flux(m, q, d1);
    let grid = build_radial_grid(0.1, 1.0, 400, Grading::Geometric { ratio: 1.05 }, 3).unwrap();
    let profile = fastdiff::model::SingularProfile {
        params: fastdiff::model::SingularDataParams { c1: 1.0, c2: 1.0, q, delta1: d1 },
        choice: fastdiff::model::EnvelopeChoice::GeometricMean,
    };

    // criterion 1 style: constant unscaled g = alpha, f = 0
    let p1 = RadialProblem {
        grid: grid.clone(),
        mobility: Mobility::Bare { m },
        inner_flux: FluxProfile::Constant { value: alpha },
        outer_flux: FluxProfile::zero(),
        inner_scale: 0.1f64.powf(-(m * q + 1.0)),
    };
    let u0 = RadialField::from_profile(&grid, |r| profile.eval(r));
    let cfg = StepperConfig::default();
    let t0 = std::time::Instant::now();
    let traj = solve(&p1, &u0, &cfg, 1.0, &sync_times(1.0, 0.05)).unwrap();
    let mass_rep = check_mass_balance(&traj, &p1, 1e-8);
    println!(
        "mass run: {:?} steps={} margin={:.2e} pass={}",
        t0.elapsed(),
        traj.steps.len(),
        mass_rep.worst_margin,
        mass_rep.pass
    );
    println!("positivity: {:?}", check_positivity(&traj, 0.1).pass);

    // criterion 3 style: g(t) = alpha (1+t)^(-1/2)
    let p3 = RadialProblem {
        inner_flux: FluxProfile::PowerDecay { amplitude: alpha, exponent: 0.5 },
        ..p1.clone()
    };
    let t0 = std::time::Instant::now();
    let traj3 = solve(&p3, &u0, &cfg, 1.0, &sync_times(1.0, 0.05)).unwrap();
    let ab = check_aronson_benilan(&traj3, m, &p3.outer_flux, &p3.inner_flux, 0.1, 1e-6).unwrap();
    println!(
        "ab run: {:?} steps={} margin={:.3e} pass={} loc={:?}",
        t0.elapsed(),
        traj3.steps.len(),
        ab.worst_margin,
        ab.pass,
        ab.worst_location
    );
    let mass3 = check_mass_balance(&traj3, &p3, 1e-8);
    println!("ab-run mass margin={:.2e} pass={}", mass3.worst_margin, mass3.pass);
}
