//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_rational::BigRational;

use flito::coeffs::{
    minimal_q, triple_residual, CoeffTensor, ResidualKind, DEFAULT_SEARCH_CAP,
};
use flito::ito::{
    approx_general_k, approx_i01, approx_i1, approx_i10, approx_i11, approx_i111, draw_basis, residual_study,
    BundleSpec, Component, GaussianBasisDraws, ItoIntegralBundle,
};
use flito::qwiener::TruncationParams;
use flito::rng::StreamFactory;
use flito::spde::{
    strong_error_estimate, tail_decay_study, ConvergenceSetup, DiagnosticParams, Drift, GalerkinModel, Noise,
    Scheme, SpectralModel, StepContext,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

fn table2() -> Outcome {
    #[rustfmt::skip]
    let expected: [[(i64, i64); 7]; 7] = [
        [(0, 1), (2, 105), (0, 1), (-4, 315), (0, 1), (2, 693), (0, 1)],
        [(4, 105), (0, 1), (-2, 315), (0, 1), (-8, 3465), (0, 1), (10, 9009)],
        [(2, 35), (-2, 105), (0, 1), (4, 3465), (0, 1), (-74, 45045), (0, 1)],
        [(2, 315), (0, 1), (-2, 3465), (0, 1), (16, 45045), (0, 1), (-10, 9009)],
        [(-2, 63), (46, 3465), (0, 1), (-32, 45045), (0, 1), (2, 9009), (0, 1)],
        [(-10, 693), (0, 1), (38, 9009), (0, 1), (-4, 9009), (0, 1), (122, 765765)],
        [(0, 1), (-10, 3003), (0, 1), (20, 9009), (0, 1), (-226, 765765), (0, 1)],
    ];
    let t = CoeffTensor::build(3, 6).expect("tensor");
    let mut bad = Vec::new();
    for (j, row) in expected.iter().enumerate() {
        for (k, &(n, d)) in row.iter().enumerate() {
            if *t.get(&[3, j, k]).expect("entry") != rat(n, d) {
                bad.push((j, k));
            }
        }
    }
    outcome(bad.is_empty(), format!("49 entries, mismatches {bad:?}"))
}

fn eq61() -> Outcome {
    let t = CoeffTensor::build(3, 6).expect("tensor");
    let v = triple_residual(6, 1.0, &t).expect("residual");
    let target = 0.01956000;
    outcome(
        (v - target).abs() <= 5e-9,
        format!("computed {v:.12}, expected {target:.8} +- 5e-9, difference {:.3e}", v - target),
    )
}

fn table1() -> Outcome {
    let steps = [0.08222, 0.05020, 0.02310, 0.01956];
    let q1_expected = [1, 2, 5, 6];
    let q_expected = [19usize, 51, 235, 328];
    let mut q1s = Vec::new();
    let mut qs = Vec::new();
    for &s in &steps {
        q1s.push(minimal_q(s, ResidualKind::Triple, DEFAULT_SEARCH_CAP).expect("q1").q);
        qs.push(minimal_q(s, ResidualKind::Pairwise, DEFAULT_SEARCH_CAP).expect("q").q);
    }
    let q1_ok = q1s == q1_expected;
    let q_ok = qs.iter().zip(q_expected).all(|(a, b)| a.abs_diff(b) <= 1);
    outcome(
        q1_ok && q_ok,
        format!(
            "q1 {q1s:?} vs {q1_expected:?} ({}), q {qs:?} vs {q_expected:?} +-1 ({})",
            if q1_ok { "ok" } else { "mismatch" },
            if q_ok { "ok" } else { "mismatch" }
        ),
    )
}

fn identities() -> Outcome {
    let draws_n = 10_000;
    let q = 10;
    let q1 = 6;
    let tensor3 = CoeffTensor::build(3, q1).expect("tensor");
    let tensor2 = CoeffTensor::build(2, q).expect("tensor");
    let f = StreamFactory::new(41);
    let mut worst = [0.0f64; 5];
    for p in 0..draws_n {
        let step = 0.05 + 0.9 * (p as f64 / draws_n as f64);
        let c3 = tensor3.scaled(q1, step).expect("scaled");
        let c2 = tensor2.scaled(q, step).expect("scaled");
        let d = draw_basis(&mut f.stream(p), 3, q);
        for r1 in 0..3 {
            // increment-product identity
            for r2 in 0..3 {
                let lhs = approx_i11(&d, r1, r2, q, step).unwrap() + approx_i11(&d, r2, r1, q, step).unwrap();
                let rhs = step * d.get(r1, 0) * d.get(r2, 0) - if r1 == r2 { step } else { 0.0 };
                worst[0] = worst[0].max((lhs - rhs).abs());
            }
            let low = approx_i01(&d, r1, step).unwrap() + approx_i10(&d, r1, step).unwrap()
                - step * approx_i1(&d, r1, step).unwrap();
            worst[1] = worst[1].max(low.abs());
        }
        // permutation sum over distinct components
        let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        let sum: f64 = perms
            .iter()
            .map(|r| approx_i111(&d, r[0], r[1], r[2], &c3).unwrap())
            .sum();
        let prod: f64 = (0..3).map(|r| approx_i1(&d, r, step).unwrap()).product();
        worst[2] = worst[2].max((sum - prod).abs());
        // general-k expansion against the explicit forms
        let w = |r| Component::Wiener(r);
        for &(r1, r2) in &[(0, 1), (1, 1)] {
            let g = approx_general_k(&d, &[w(r1), w(r2)], &[q, q], step, |js| c2.c2(js[1], js[0])).unwrap();
            worst[3] = worst[3].max((g - approx_i11(&d, r1, r2, q, step).unwrap()).abs());
        }
        for &(r1, r2, r3) in &[(0, 1, 2), (0, 0, 1), (1, 0, 1), (2, 1, 1), (1, 1, 1)] {
            let g = approx_general_k(&d, &[w(r1), w(r2), w(r3)], &[q1; 3], step, |js| c3.c3(js[2], js[1], js[0]))
                .unwrap();
            worst[3] = worst[3].max((g - approx_i111(&d, r1, r2, r3, &c3).unwrap()).abs());
        }
        let g1 = approx_general_k(&d, &[w(2)], &[0], step, |_| step.sqrt()).unwrap();
        worst[3] = worst[3].max((g1 - approx_i1(&d, 2, step).unwrap()).abs());
    }
    // exact coefficient permutation sums
    let mut coeff_ok = true;
    let t2 = CoeffTensor::build(2, 6).expect("tensor");
    let t3 = CoeffTensor::build(3, 6).expect("tensor");
    for a in 0..=6 {
        for b in 0..=6 {
            let s2 = t2.get(&[a, b]).unwrap() + t2.get(&[b, a]).unwrap();
            let e2 = if a == 0 && b == 0 { rat(4, 1) } else { rat(0, 1) };
            coeff_ok &= s2 == e2;
            for c in 0..=6 {
                let idx = [[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]];
                let s3: BigRational = idx.iter().map(|i| t3.get(i).unwrap().clone()).sum();
                let e3 = if a == 0 && b == 0 && c == 0 { rat(8, 1) } else { rat(0, 1) };
                coeff_ok &= s3 == e3;
            }
        }
    }
    worst[4] = if coeff_ok { 0.0 } else { 1.0 };
    outcome(
        worst.iter().all(|w| *w <= 1e-12),
        format!(
            "max deviations: increment-product {:.1e}, low-order sum {:.1e}, k=3 permutation sum {:.1e}, \
             general-k collapse {:.1e}; exact coefficient permutation sums {}",
            worst[0],
            worst[1],
            worst[2],
            worst[3],
            if coeff_ok { "hold" } else { "FAIL" }
        ),
    )
}

fn statistical() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (step, q, q1) in [(0.25, 5, 2), (0.0625, 20, 4)] {
        let s = residual_study(step, (q, q1), (200, 12), 100_000, 97).expect("study");
        pass &= s.identity_violations == 0;
        for c in &s.checks {
            pass &= c.rel_error() < 0.05;
            parts.push(format!("{step}/{}: {:.2}%", c.name, 100.0 * c.rel_error()));
        }
    }
    outcome(pass, parts.join(", "))
}

fn tail_decay() -> Outcome {
    let model = SpectralModel::diagnostic(DiagnosticParams {
        noise: Noise::Mixing {
            sigma: 1.0,
            gain: 1.0,
            seed: 3,
        },
        ..Default::default()
    })
    .expect("model");
    let s = tail_decay_study(&model, &[2, 4, 8, 16], 0.0625, 20, 10_000, 5).expect("study");
    let dec = |f: fn(&flito::spde::TailRow) -> f64| s.rows.windows(2).all(|w| f(&w[1]) < f(&w[0]));
    let monotone = dec(|r| r.j1_ms) && dec(|r| r.i1_ms);
    let predicted = 2.0 * 0.5;
    let band = |x: f64| x >= predicted / 2.0 && x <= predicted * 2.0;
    outcome(
        monotone && band(s.j1_slope) && band(s.i1_slope),
        format!(
            "monotone {monotone}, slopes J1 {:.3}, I1 {:.3} vs band [{}, {}]",
            s.j1_slope,
            s.i1_slope,
            predicted / 2.0,
            predicted * 2.0
        ),
    )
}

fn strong_order() -> Outcome {
    let model = SpectralModel::diagnostic(DiagnosticParams::default()).expect("model");
    let trunc = TruncationParams::new(8, 1, 1, 0.5).expect("trunc");
    let run = |scheme| {
        strong_error_estimate(
            &model,
            &ConvergenceSetup {
                scheme,
                trunc,
                ref_trunc: trunc,
                steps: vec![1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0, 1.0 / 256.0],
                step_ref: 1.0 / 2048.0,
                horizon: 0.5,
                paths: 400,
                seed: 7,
            },
        )
        .expect("estimate")
    };
    let mil = run(Scheme::Milstein);
    let wp = run(Scheme::wagner_platen());
    let dominance = (2..4).all(|i| wp.rows[i].rms <= mil.rows[i].rms);
    outcome(
        (0.75..=1.25).contains(&mil.slope) && (1.2..=1.8).contains(&wp.slope),
        format!(
            "Milstein slope {:.3} +- {:.3} in [0.75, 1.25], Wagner-Platen slope {:.3} +- {:.3} in [1.2, 1.8]; \
             Wagner-Platen below Milstein at the two smallest steps: {dominance}",
            mil.slope, mil.slope_se, wp.slope, wp.slope_se
        ),
    )
}

fn degeneracy() -> Outcome {
    let model = SpectralModel::diagnostic(DiagnosticParams {
        drift: Drift::Zero,
        noise: Noise::Zero,
        ..Default::default()
    })
    .expect("model");
    let mut worst = 0.0f64;
    for scheme in [Scheme::Milstein, Scheme::wagner_platen()] {
        let trunc = TruncationParams::new(4, 3, 2, 0.5).unwrap();
        let step = 0.05;
        let ctx = StepContext::new(&model, scheme, step, trunc, None).unwrap();
        let f = StreamFactory::new(3);
        let mut y = model.initial().to_vec();
        let mut rng = f.stream(0);
        for p in 1..=20 {
            let d = draw_basis(&mut rng, 4, ctx.q_max());
            y = ctx.advance(&model, &y, &d).unwrap();
            for (k, v) in y.iter().enumerate() {
                let exact = (model.a_spectrum()[k] * step * p as f64).exp() * model.initial()[k];
                worst = worst.max((v - exact).abs());
            }
        }
    }
    // all-zero draws
    let step = 0.3;
    let c = CoeffTensor::build(3, 4).unwrap().scaled(4, step).unwrap();
    let d = GaussianBasisDraws::zeros(3, 4);
    let b = ItoIntegralBundle::build(&d, step, BundleSpec::full(4, 4), Some(&c)).unwrap();
    let mut forced = true;
    for r1 in 0..3 {
        forced &= b.i1(r1) == 0.0 && b.i01(r1) == 0.0 && b.i10(r1) == 0.0;
        for r2 in 0..3 {
            let e = if r1 == r2 { -step / 2.0 } else { 0.0 };
            forced &= (b.i11(r1, r2) - e).abs() < 1e-15;
            for r3 in 0..3 {
                forced &= b.i111(r1, r2, r3).abs() < 1e-15;
            }
        }
    }
    outcome(
        worst <= 1e-12 && forced,
        format!("noise-off max deviation {worst:.1e}; zero-draw bundle values forced: {forced}"),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome, Duration); 8] = [
        ("table 2 coefficients", table2, Duration::from_secs(5)),
        ("triple residual at q1 = 6", eq61, Duration::from_secs(5)),
        ("table 1 minimal truncations", table1, Duration::from_secs(30)),
        ("exact identities", identities, Duration::from_secs(60)),
        ("statistical residuals", statistical, Duration::from_secs(300)),
        ("spectral tail decay", tail_decay, Duration::from_secs(300)),
        ("strong order", strong_order, Duration::from_secs(1200)),
        ("degeneracy", degeneracy, Duration::from_secs(5)),
    ];
    let mut failed = 0;
    for (i, (name, f, budget)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let o = f();
        let elapsed = t.elapsed();
        let pass = o.pass && elapsed <= *budget;
        if !pass {
            failed += 1;
        }
        println!(
            "{} {}. {name}: {} [{:.1}s of {}s]",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail,
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
