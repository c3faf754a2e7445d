// Development probe: run the standard 5-level shrinking-hole continuation
// and print sandwich margins, Cauchy ratios and blow-up fits.

use fastdiff::continuation::{run_hole_continuation, shrink_schedule, ContinuationOptions};
use fastdiff::model::{
    alpha_flux, validate_spec, EnvelopeChoice, FluxProfile, FluxSchedule, Hole, InitialData,
    ProblemSpec, ScalingMode,
};

fn main() {
    let m = 1.0 / 3.0;
    let spec = validate_spec(ProblemSpec {
        n: 3,
        m,
        q: 4.5,
        p: 2.0,
        outer_radius: 1.0,
        holes: vec![Hole { center: vec![0.0, 0.0, 0.0], radius: 0.1 }],
        delta1: 0.4,
        initial_data: InitialData::Singular {
            c1: 1.0,
            c2: 1.0,
            envelope: EnvelopeChoice::GeometricMean,
        },
        schedule: FluxSchedule {
            outer: FluxProfile::zero(),
            holes: vec![FluxProfile::Constant { value: alpha_flux(m, 4.5, 0.4) }],
            scaling: ScalingMode::PaperScaled,
        },
    })
    .unwrap();
    let schedule = shrink_schedule(&spec, 4, 0.5).unwrap();
    println!("radii: {:?}  alpha: {}", schedule.radii, schedule.alpha);
    let opts = ContinuationOptions::default();
    let t0 = std::time::Instant::now();
    let report = run_hole_continuation(&spec, &schedule, &opts).unwrap();
    println!("wall time: {:?}", t0.elapsed());
    for run in &report.runs {
        let (lo, hi) = run.sandwich.as_ref().unwrap();
        println!(
            "eps={:>9.2e} cells={:>4} steps={:>6} mass_margin={:>10.2e} lo={:>10.2e} hi={:>10.2e} minu={:.2e}",
            run.radius,
            run.grid.n_cells(),
            run.trajectory.steps.len(),
            run.mass_report.worst_margin,
            lo.worst_margin,
            hi.worst_margin,
            run.trajectory.final_field().min(),
        );
    }
    println!("pairwise sup diffs (r >= {}): {:?}", report.cmp_region.0, report.pairwise_sup_diffs);
    for w in report.pairwise_sup_diffs.windows(2) {
        println!("  ratio {:.3}", w[0] / w[1]);
    }
    println!("fit window: {:?}", report.fit_window);
    for s in &report.qhat_per_time {
        if s.t >= 0.2 {
            println!("  t={:.2} qhat={:.4} resid={:.2e}", s.t, s.qhat, s.residual);
        }
    }
}
