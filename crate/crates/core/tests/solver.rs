use flito::ito::{draw_basis, AggregationMap, GaussianBasisDraws};
use flito::qwiener::TruncationParams;
use flito::rng::StreamFactory;
use flito::spde::{
    simulate_path, strong_error_estimate, ConvergenceSetup, DiagnosticParams, GalerkinModel, Noise, Scheme,
    SpectralModel, StepContext, TermGroup, TermMask,
};
use proptest::prelude::*;

fn mixing(n_h: usize, m: usize) -> SpectralModel {
    SpectralModel::diagnostic(DiagnosticParams {
        n_h,
        noise: Noise::Mixing {
            sigma: 1.0,
            gain: 1.0,
            seed: 3,
        },
        max_components: m,
        ..Default::default()
    })
    .unwrap()
}

#[test]
fn wagner_platen_error_does_not_grow_with_q1() {
    let model = mixing(16, 4);
    let step = 1.0 / 16.0;
    let q1_min = flito::coeffs::minimal_q(step, flito::coeffs::ResidualKind::Triple, 64).unwrap().q;
    assert_eq!(q1_min, 2);
    let ref_trunc = TruncationParams::new(4, 32, 6, 0.5).unwrap();
    let mut prev: Option<(f64, f64)> = None;
    for q1 in 0..=q1_min {
        let setup = ConvergenceSetup {
            scheme: Scheme::wagner_platen(),
            trunc: TruncationParams::new(4, 32, q1, 0.5).unwrap(),
            ref_trunc,
            steps: vec![step, step / 2.0],
            step_ref: 1.0 / 128.0,
            horizon: 0.25,
            paths: 1000,
            seed: 7,
        };
        let row = strong_error_estimate(&model, &setup).unwrap().rows[0];
        if let Some((rms, se)) = prev {
            assert!(row.rms <= rms + se.max(row.rms_se), "q1={q1}: {} > {rms}", row.rms);
        }
        prev = Some((row.rms, row.rms_se));
    }
}

#[test]
fn coupled_refinement_tightens() {
    let model = SpectralModel::diagnostic(DiagnosticParams::default()).unwrap();
    let t = TruncationParams::new(4, 1, 1, 0.5).unwrap();
    let setup = ConvergenceSetup {
        scheme: Scheme::Milstein,
        trunc: t,
        ref_trunc: t,
        steps: vec![0.125, 0.0625, 0.03125],
        step_ref: 1.0 / 256.0,
        horizon: 0.5,
        paths: 200,
        seed: 1,
    };
    let tab = strong_error_estimate(&model, &setup).unwrap();
    assert!(tab.rows.windows(2).all(|w| w[1].rms < w[0].rms));
}

#[test]
fn aggregated_draws_drive_the_same_path() {
    // Milstein on constant noise is exact in the increments, so a coarse path from
    // aggregated draws must land where the fine path lands.
    let model = SpectralModel::new(
        vec![0.0; 3],
        flito::spde::Drift::Zero,
        Noise::Constant { sigma: 0.7 },
        flito::qwiener::QWienerSpec::default_power(),
        vec![0.1, 0.2, 0.3],
        3,
    )
    .unwrap();
    let t = TruncationParams::new(3, 1, 0, 0.5).unwrap();
    let fine_ctx = StepContext::new(&model, Scheme::Milstein, 0.01, t, None).unwrap();
    let coarse_ctx = StepContext::new(&model, Scheme::Milstein, 0.08, t, None).unwrap();
    let f = StreamFactory::new(12);
    let mut rng = f.stream(0);
    let fine: Vec<GaussianBasisDraws> = (0..8).map(|_| draw_basis(&mut rng, 3, 1)).collect();
    let mut y = model.initial().to_vec();
    for d in &fine {
        y = fine_ctx.advance(&model, &y, d).unwrap();
    }
    let coarse = AggregationMap::new(8, 1).unwrap().aggregate(&fine).unwrap();
    let z = coarse_ctx.advance(&model, model.initial(), &coarse).unwrap();
    for k in 0..3 {
        assert!((y[k] - z[k]).abs() < 1e-13);
    }
}

#[test]
fn wagner_platen_beats_milstein_on_mixing_noise() {
    let model = mixing(8, 3);
    let t = TruncationParams::new(3, 16, 2, 0.5).unwrap();
    let run = |scheme| {
        strong_error_estimate(
            &model,
            &ConvergenceSetup {
                scheme,
                trunc: t,
                ref_trunc: t,
                steps: vec![1.0 / 16.0, 1.0 / 32.0],
                step_ref: 1.0 / 256.0,
                horizon: 0.25,
                paths: 200,
                seed: 4,
            },
        )
        .unwrap()
    };
    let mil = run(Scheme::Milstein);
    let wp = run(Scheme::wagner_platen());
    assert!(wp.rows[1].rms < mil.rows[1].rms);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn noise_off_steppers_ignore_truncation(m in 1usize..6, q in 1usize..20, q1 in 0usize..5, seed in any::<u64>()) {
        let model = SpectralModel::diagnostic(DiagnosticParams { noise: Noise::Zero, ..Default::default() }).unwrap();
        let base_t = TruncationParams::new(1, 1, 0, 0.5).unwrap();
        let t = TruncationParams::new(m, q, q1, 0.5).unwrap();
        for scheme in [Scheme::Milstein, Scheme::wagner_platen()] {
            let a = simulate_path(&model, &StepContext::new(&model, scheme, 0.05, base_t, None).unwrap(), 5, 0, 0).unwrap();
            let b = simulate_path(&model, &StepContext::new(&model, scheme, 0.05, t, None).unwrap(), 5, seed, 1).unwrap();
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn dropping_noise_terms_leaves_the_deterministic_part(seed in any::<u64>()) {
        let model = mixing(4, 2);
        let t = TruncationParams::new(2, 3, 1, 0.5).unwrap();
        let noise_groups = [
            TermGroup::J1, TermGroup::Trace, TermGroup::I1, TermGroup::J2,
            TermGroup::J3, TermGroup::I3, TermGroup::J4, TermGroup::I2,
        ];
        let mask = noise_groups.iter().fold(TermMask::ALL, |m, g| m.without(*g));
        let ctx = StepContext::new(&model, Scheme::WagnerPlaten(mask), 0.1, t, None).unwrap();
        let d = draw_basis(&mut StreamFactory::new(seed).stream(0), 2, ctx.q_max());
        let y = ctx.advance(&model, model.initial(), &d).unwrap();
        let zero = GaussianBasisDraws::zeros(2, ctx.q_max());
        let y0 = ctx.advance(&model, model.initial(), &zero).unwrap();
        prop_assert_eq!(y, y0);
    }
}
