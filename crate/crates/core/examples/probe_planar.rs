// Development probe: 2D disk-with-hole run against the n=2 radial solver.

use fastdiff::model::{FluxProfile, Hole};
use fastdiff::planar::{
    build_masked_grid, check_mass_balance2d, solve2d, PlanarField, PlanarOuter, PlanarProblem,
    PlanarShape,
};
use fastdiff::radial::{build_radial_grid, solve, Grading, Mobility, RadialField, RadialProblem};
use fastdiff::stepping::{sync_times, StepperConfig};

fn main() {
    let m = 1.0 / 3.0;
    let (r_outer, delta) = (1.0, 0.1);
    let h = delta / 8.0;
    let g_hole = 2.0;
    let profile = |r: f64| 1.0 + 0.5 * (std::f64::consts::PI * (r - delta) / (r_outer - delta)).cos();

    let shape = PlanarShape {
        outer: PlanarOuter::Disk { radius: r_outer },
        holes: vec![Hole { center: vec![0.0, 0.0], radius: delta }],
    };
    let grid2 = build_masked_grid(&shape, h).unwrap();
    println!(
        "2D: {} fluid cells, hole perimeter ratio {:.4}, outer {:.4}",
        grid2.n_cells(),
        grid2.hole_perimeter_ratio[0],
        grid2.outer_perimeter_ratio
    );
    let p2 = PlanarProblem {
        grid: grid2.clone(),
        mobility: Mobility::Bare { m },
        outer_flux: FluxProfile::zero(),
        hole_flux: vec![FluxProfile::Constant { value: g_hole }],
        hole_scale: vec![1.0],
    };
    let u0_2 = PlanarField::from_profile(&grid2, |x, y| profile((x * x + y * y).sqrt()));
    let cfg = StepperConfig::default();
    let t0 = std::time::Instant::now();
    let traj2 = solve2d(&p2, &u0_2, &cfg, 0.5, &sync_times(0.5, 0.25)).unwrap();
    println!("2D solve: {:?}, steps {}", t0.elapsed(), traj2.steps.len());
    let rep = check_mass_balance2d(&traj2, &p2, 1e-6);
    println!("2D mass margin {:.2e} pass {}", rep.worst_margin, rep.pass);

    // radial oracle with n = 2
    let grid1 = build_radial_grid(delta, r_outer, 600, Grading::Geometric { ratio: 1.05 }, 2).unwrap();
    let p1 = RadialProblem {
        grid: grid1.clone(),
        mobility: Mobility::Bare { m },
        inner_flux: FluxProfile::Constant { value: g_hole },
        outer_flux: FluxProfile::zero(),
        inner_scale: 1.0,
    };
    let u0_1 = RadialField::from_profile(&grid1, profile);
    let traj1 = solve(&p1, &u0_1, &cfg, 0.5, &sync_times(0.5, 0.25)).unwrap();
    let f1 = traj1.final_field();
    let f2 = traj2.final_field();

    // compare at fluid cells >= 3h from both boundaries
    let interp = |r: f64| -> f64 {
        let c = &grid1.centers;
        let i = c.partition_point(|&x| x < r).clamp(1, c.len() - 1);
        let (r0, r1) = (c[i - 1], c[i]);
        let w = (r - r0) / (r1 - r0);
        f1.values[i - 1] * (1.0 - w) + f1.values[i] * w
    };
    let mut worst = 0.0f64;
    let mut n_cmp = 0;
    for k in 0..grid2.n_cells() {
        let (x, y) = grid2.center(k);
        let r = (x * x + y * y).sqrt();
        if r - delta < 3.0 * h || r_outer - r < 3.0 * h {
            continue;
        }
        let rel = (f2.values[k] - interp(r)).abs() / interp(r).abs();
        worst = worst.max(rel);
        n_cmp += 1;
    }
    println!("agreement: {} cells compared, worst rel diff {:.4}", n_cmp, worst);
}
