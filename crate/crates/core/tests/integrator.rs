mod common;

use common::*;
use nsch_core::diagnostics::{total_energy, Recorder};
use nsch_core::integrator::{cfl_candidates, cfl_dt, imex_step, integrate, rk4_step, IntegrateError, Observer};
use nsch_core::{DiagnosticsRecord, DiagnosticsSpec, Error, Field, ModelParams, Scheme, State, StepControls, VectorField};
use proptest::prelude::*;

fn shear(g: &nsch_core::Grid, eps: f64) -> VectorField {
    VectorField::new(vec![
        Field::from_fn(g, |x| eps * x[1].sin()),
        Field::zeros(g),
        Field::zeros(g),
    ])
    .unwrap()
}

fn shear_state(n: usize, eps: f64) -> State {
    let g = grid(n);
    State::new(shear(&g, eps), Field::zeros(&g), ModelParams::default()).unwrap()
}

fn amplitude_ratio(a: &Field, b: &Field) -> f64 {
    l2(a) / l2(b)
}

#[test]
fn zero_state_stays_zero() {
    let g = grid(8);
    let s = State::zero(&g, ModelParams::default()).unwrap();
    for next in [imex_step(&s, 0.3).unwrap(), rk4_step(&s, 1e-3).unwrap()] {
        assert_eq!(state_norm(&next), 0.0);
    }
    assert_eq!(imex_step(&s, 0.3).unwrap().time, 0.3);
}

#[test]
fn imex_stokes_mode_factor() {
    let s = shear_state(8, 1e-8);
    for dt in [1e-3, 0.1, 10.0] {
        let next = imex_step(&s, dt).unwrap();
        let r = amplitude_ratio(next.u.component(0), s.u.component(0));
        assert!((r - 1.0 / (1.0 + dt)).abs() < 1e-12, "dt = {dt}: {r}");
    }
}

#[test]
fn imex_phase_mode_factor() {
    let g = grid(8);
    // Cubic remainder is O(ε²) relative; smaller ε drowns in cancellation of (1 + φ)³.
    let eps = 1e-4;
    let phi = Field::from_fn(&g, |x| eps * x[0].sin());
    let s = State::new(VectorField::zeros(&g), phi, ModelParams::default()).unwrap();
    for dt in [1e-3, 0.1, 1.0] {
        let next = imex_step(&s, dt).unwrap();
        // Explicit linear coefficient 3ω₀² − 1 − κ = 1 at |k| = 1.
        let expect = (1.0 - dt) / (1.0 + 2.0 * dt);
        let r = inner(&next.phi, &s.phi) / inner(&s.phi, &s.phi);
        assert!((r - expect).abs() < 1e-8, "dt = {dt}: {r} vs {expect}");
    }
}

fn inner(a: &Field, b: &Field) -> f64 {
    nsch_core::spectral::inner_product(a, b).unwrap()
}

#[test]
fn rk4_stokes_factor_is_taylor_polynomial() {
    let s = shear_state(8, 1e-8);
    let dt: f64 = 0.05;
    let next = rk4_step(&s, dt).unwrap();
    let r = amplitude_ratio(next.u.component(0), s.u.component(0));
    let taylor = 1.0 - dt + dt.powi(2) / 2.0 - dt.powi(3) / 6.0 + dt.powi(4) / 24.0;
    assert!((r - taylor).abs() < 1e-12);
}

#[test]
fn rk4_is_fourth_order() {
    let g = grid(8);
    let s = random_state(&g, 9, 1.5, 0.1, ModelParams::default());
    let defect = |dt: f64| {
        let one = rk4_step(&s, dt).unwrap();
        let two = rk4_step(&rk4_step(&s, dt / 2.0).unwrap(), dt / 2.0).unwrap();
        state_diff(&one, &two)
    };
    let ratio = defect(4e-3) / defect(2e-3);
    assert!((25.0..40.0).contains(&ratio), "local error ratio {ratio}, expected ~32");
}

#[test]
fn cfl_examples() {
    let g = grid(8);
    let controls = StepControls::new(0.1, 1.0);
    let zero = State::zero(&g, ModelParams::default()).unwrap();
    assert_eq!(cfl_dt(&zero, &controls), 0.1);

    let coarse = cfl_candidates(&shear_state(8, 1.0)).advective;
    let fine = cfl_candidates(&shear_state(16, 1.0)).advective;
    assert!((fine / coarse - 0.5).abs() < 1e-14);
}

#[test]
fn cfl_worked_value() {
    let g = grid(16);
    let s = random_state(&g, 21, 3.0, 20.0, ModelParams::default());
    let c = cfl_candidates(&s);
    // Independent re-evaluation from physical samples.
    let h = std::f64::consts::TAU / 16.0;
    let mut umax2: f64 = 0.0;
    for i in 0..g.num_points() {
        let m: f64 = (0..3).map(|a| s.u.component(a).values()[i].powi(2)).sum();
        umax2 = umax2.max(m);
    }
    let var = s
        .phi
        .values()
        .iter()
        .map(|v| (3.0 * ((v + 1.0).powi(2) - 1.0)).abs())
        .fold(0.0, f64::max);
    assert!((c.advective - h / umax2.sqrt()).abs() <= 1e-14 * c.advective);
    assert!((c.advection_diffusion - 2.0 / umax2).abs() <= 1e-14 * c.advection_diffusion);
    assert!((c.explicit_phi - h * h / var).abs() <= 1e-14 * c.explicit_phi);
    assert!(c.linear_phi.is_infinite());
    let controls = StepControls::new(1.0, 1.0);
    let expect = 0.4 * c.advective.min(c.advection_diffusion).min(c.explicit_phi);
    assert_eq!(cfl_dt(&s, &controls), expect);

    let unstabilized = State { params: ModelParams { kappa: 0.0, ..s.params }, ..s.clone() };
    assert_eq!(cfl_candidates(&unstabilized).linear_phi, 2.0);
}

#[test]
fn controls_validation() {
    assert!(StepControls::new(0.0, 1.0).validate().is_err());
    assert!(StepControls::new(0.1, -1.0).validate().is_err());
    let c = StepControls { cfl_safety: 1.5, ..StepControls::new(0.1, 1.0) };
    assert!(matches!(c.validate(), Err(Error::InvalidArgument { name: "cfl_safety", .. })));
    let c = StepControls { stride: 0, ..StepControls::new(0.1, 1.0) };
    assert!(c.validate().is_err());
    let text = r#"{"dt": 0.01, "t_end": 1.0, "scheme": "rk4"}"#;
    let c: StepControls = serde_json::from_str(text).unwrap();
    assert_eq!(c.scheme, Scheme::Rk4);
    assert_eq!(c.cfl_safety, 0.4);
    assert!(serde_json::from_str::<StepControls>(r#"{"dt": 0.01, "t_end": 1.0, "dtt": 1}"#).is_err());
}

#[test]
fn integrate_to_zero_time_is_identity() {
    let s = shear_state(8, 0.1);
    let mut calls = 0usize;
    let mut obs = |_: &State, _: &DiagnosticsRecord| calls += 1;
    let out = integrate(s.clone(), &StepControls::new(0.1, 0.0), &DiagnosticsSpec::default(), &mut [&mut obs]).unwrap();
    assert_eq!(calls, 0);
    assert_eq!(state_diff(&out, &s), 0.0);
    assert_eq!(out.time, 0.0);
}

#[test]
fn stokes_mode_decays_like_heat() {
    let s = shear_state(8, 1e-3);
    let out = integrate(s.clone(), &StepControls::new(1e-3, 1.0), &DiagnosticsSpec::default(), &mut []).unwrap();
    let r = amplitude_ratio(out.u.component(0), s.u.component(0));
    let e = (-1.0f64).exp();
    assert!((r - e).abs() < 1e-3 * e);
    assert_eq!(out.time, 1.0);
}

#[test]
fn imex_is_first_order_against_rk4() {
    let g = grid(8);
    let s = random_state(&g, 4, 2.0, 0.05, ModelParams::default());
    let t_end = 0.1;
    let reference = integrate(
        s.clone(),
        &StepControls { scheme: Scheme::Rk4, ..StepControls::new(1e-3, t_end) },
        &DiagnosticsSpec::default(),
        &mut [],
    )
    .unwrap();
    let err = |dt: f64| {
        let out = integrate(s.clone(), &StepControls::new(dt, t_end), &DiagnosticsSpec::default(), &mut []).unwrap();
        state_diff(&out, &reference)
    };
    let ratio = err(0.01) / err(0.005);
    assert!((ratio - 2.0).abs() < 0.2, "Richardson factor {ratio}");
}

#[test]
fn observers_follow_stride_and_see_the_final_step() {
    let g = grid(8);
    let s = random_state(&g, 2, 2.0, 0.05, ModelParams::default());
    let mut times = Vec::new();
    let mut obs = |st: &State, r: &DiagnosticsRecord| {
        assert_eq!(st.time, r.time);
        times.push(r.time);
    };
    let controls = StepControls { stride: 3, ..StepControls::new(0.1, 1.0) };
    let out = integrate(s, &controls, &DiagnosticsSpec::default(), &mut [&mut obs]).unwrap();
    assert_eq!(out.time, 1.0);
    let expect: Vec<f64> = [3.0, 6.0, 9.0].iter().map(|k| k * 0.1).chain([1.0]).collect();
    assert_eq!(times.len(), expect.len());
    for (t, e) in times.iter().zip(&expect) {
        assert!((t - e).abs() < 1e-15);
    }
}

#[test]
fn final_step_is_clipped() {
    let s = shear_state(8, 0.1);
    let mut rec = Recorder::default();
    let out = integrate(s, &StepControls::new(0.3, 1.0), &DiagnosticsSpec::default(), &mut [&mut rec as &mut dyn Observer])
        .unwrap();
    assert_eq!(out.time, 1.0);
    let times: Vec<f64> = rec.records.iter().map(|r| r.time).collect();
    assert_eq!(times.len(), 4);
    assert_eq!(*times.last().unwrap(), 1.0);
}

#[test]
fn divergence_is_reported_with_time() {
    let g = grid(8);
    let phi = Field::from_fn(&g, |x| 1e120 * x[0].sin());
    let s = State::new(VectorField::zeros(&g), phi, ModelParams::default()).unwrap();
    match imex_step(&s, 0.1) {
        Err(Error::StepDiverged { time }) => assert_eq!(time, 0.1),
        other => panic!("expected divergence, got {:?}", other.map(|s| s.time)),
    }
    let s = State { time: 0.0, ..s };
    let err: IntegrateError = integrate(s, &StepControls::new(0.1, 1.0), &DiagnosticsSpec::default(), &mut []).unwrap_err();
    assert!(matches!(err.source, Error::StepDiverged { .. }));
    assert_eq!(err.steps_completed, 0);
    assert_eq!(err.last_time, 0.0);
}

#[test]
fn runs_are_bitwise_deterministic() {
    let g = grid(8);
    let run = || {
        let s = random_state(&g, 8, 3.0, 0.3, ModelParams::default());
        let mut rec = Recorder::default();
        let controls = StepControls { adaptive: true, ..StepControls::new(0.05, 0.5) };
        let out = integrate(s, &controls, &DiagnosticsSpec::default(), &mut [&mut rec as &mut dyn Observer]).unwrap();
        (out, rec.records)
    };
    let (a, ra) = run();
    let (b, rb) = run();
    assert_eq!(ra, rb);
    assert!(a.phi.values() == b.phi.values());
}

#[test]
fn conservation_over_many_steps() {
    let g = grid(8);
    let mut s = random_state(&g, 12, 3.0, 0.1, ModelParams::default());
    let mean_flow = [0.01, -0.02, 0.005];
    let u = VectorField::new(
        s.u.components()
            .iter()
            .zip(mean_flow)
            .map(|(c, m)| c.add(&Field::constant(&g, m)).unwrap())
            .collect(),
    )
    .unwrap();
    s.u = u;
    s.phi = s.phi.add(&Field::constant(&g, 0.02)).unwrap();
    for scheme in [Scheme::Imex1, Scheme::Rk4] {
        let controls = StepControls { scheme, ..StepControls::new(1e-3, 0.2) };
        let out = integrate(s.clone(), &controls, &DiagnosticsSpec::default(), &mut []).unwrap();
        assert!((out.phi.mean() - 0.02).abs() <= 1e-11 * 0.02);
        for (c, m) in out.u.components().iter().zip(mean_flow) {
            assert!((c.mean() - m).abs() <= 1e-14);
        }
        assert!(out.divergence_norm() <= 1e-8 * out.u.l2_norm());
    }
}

#[test]
fn small_data_energy_is_nonincreasing() {
    let g = grid(8);
    let s = random_state(&g, 31, 2.0, 0.05, ModelParams::default());
    let mut rec = Recorder::default();
    let dt = 1e-2;
    let out =
        integrate(s, &StepControls::new(dt, 1.0), &DiagnosticsSpec::default(), &mut [&mut rec as &mut dyn Observer]).unwrap();
    for w in rec.records.windows(2) {
        assert!(w[1].energy() <= w[0].energy() * (1.0 + dt * 1e-3));
    }
    assert!(rec.records.last().unwrap().energy() < rec.records[0].energy());
    assert_eq!(rec.records.last().unwrap().energy(), total_energy(&out));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn imex_is_unconditionally_stable_without_nonlinearity(
        seed in any::<u64>(),
        log_dt in -4.0..4.0f64,
        kappa in 1.0..3.0f64,
    ) {
        let g = grid(8);
        let params = ModelParams { linearized: true, kappa, ..Default::default() };
        let s = random_state(&g, seed, 4.0, 1.0, params);
        let next = imex_step(&s, 10f64.powf(log_dt)).unwrap();
        for (a, b) in next.phi.spectral().iter().zip(s.phi.spectral()) {
            prop_assert!(a.norm() <= b.norm() * (1.0 + 1e-14) + 1e-300);
        }
        for (ca, cb) in next.u.components().iter().zip(s.u.components()) {
            for (a, b) in ca.spectral().iter().zip(cb.spectral()) {
                prop_assert!(a.norm() <= b.norm() * (1.0 + 1e-14) + 1e-300);
            }
        }
    }
}
