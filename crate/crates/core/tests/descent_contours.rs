use cornergrowth::descent::{
    build_gamma, build_gamma_prime, contour_i_descent, locate_zeros, trace_phi, ActionFunction, Direction, StopRule,
    TraceStatus,
};
use cornergrowth::exactdist::{contour_i, KernelContext};
use cornergrowth::model::{sample_sequences, ParamLaw};
use cornergrowth::Spec;

fn sampled(m: usize, n: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let spec = Spec::geometric(ParamLaw::Uniform(0.3, 0.55), ParamLaw::Uniform(0.3, 0.55), seed).unwrap();
    sample_sequences(&spec, m, n)
}

#[test]
fn zero_count_matches_degree() {
    let (a, b) = sampled(8, 8, 1);
    let af = ActionFunction::new(a, b).unwrap();
    let zeros = locate_zeros(&af).unwrap();
    // the numerator has degree m + n; ζ is a double zero
    assert_eq!(zeros.count(), 16);
    assert_eq!(zeros.double, af.zeta());
}

#[test]
fn descent_matches_circle_on_sampled_parameters() {
    for seed in [2, 3] {
        let (a, b) = sampled(10, 10, seed);
        let ctx = KernelContext::new(a, b).unwrap();
        let af = ActionFunction::from_context(&ctx).unwrap();
        let phi = trace_phi(&af, Direction::Descent, None, StopRule::to_origin()).unwrap();
        assert_eq!(phi.status, TraceStatus::ReachedOrigin);
        let gamma = build_gamma(&phi).unwrap();
        let x = (10.0 * af.gamma()) as u64;
        let want = contour_i(&ctx, x).unwrap();
        let got = contour_i_descent(&ctx, x, &gamma).unwrap();
        assert!((got - want).abs() <= 1e-8 * want.abs(), "seed {seed}: {got} vs {want}");
    }
}

#[test]
fn deformed_contour_for_several_cutoffs() {
    let (a, b) = sampled(8, 8, 4);
    let ctx = KernelContext::new(a, b).unwrap();
    let af = ActionFunction::from_context(&ctx).unwrap();
    let x = (8.0 * af.gamma()) as u64;
    let want = contour_i(&ctx, x).unwrap();
    for frac in [0.05, 0.2, 0.5] {
        let delta = frac * af.zeta();
        let stop = StopRule { radius: delta, max_steps: StopRule::<f64>::DEFAULT_STEPS };
        let phi = trace_phi(&af, Direction::Descent, None, stop).unwrap();
        let gp = build_gamma_prime(&af, &phi, delta).unwrap();
        let got = contour_i_descent(&ctx, x, &gp.closed()).unwrap();
        assert!((got - want).abs() <= 1e-8 * want.abs(), "δ = {delta}: {got} vs {want}");
    }
}

#[test]
fn ascent_values_increase_from_the_saddle() {
    let (a, b) = sampled(8, 8, 5);
    let af = ActionFunction::new(a, b).unwrap();
    let psi = trace_phi(&af, Direction::Ascent, None, StopRule::ascent(&af)).unwrap();
    let last = *psi.points.last().unwrap();
    assert!(af.delta(last).re > 0.0);
    assert!(psi.v_drift(&af) < 1e-8);
}
