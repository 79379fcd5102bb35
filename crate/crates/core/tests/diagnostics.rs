mod common;

use std::f64::consts::PI;

use common::*;
use nsch_core::diagnostics::{
    critical_pair, csv_header, dissipation_residual, fit_decay, negative_norm, record, sigma_target, total_energy,
    validity_horizon, write_csv, Recorder,
};
use nsch_core::integrator::{integrate, Observer};
use nsch_core::model::double_well;
use nsch_core::spectral::leray_project;
use nsch_core::{DiagnosticsRecord, DiagnosticsSpec, Error, Field, Grid, ModelParams, State, StepControls, VectorField};
use proptest::prelude::*;

fn vol() -> f64 {
    TAU.powi(3)
}

fn phase_only(g: &Grid, f: impl Fn(&[f64]) -> f64) -> State {
    State::new(VectorField::zeros(g), Field::from_fn(g, f), ModelParams::default()).unwrap()
}

#[test]
fn total_energy_examples() {
    let g = grid(8);
    assert_eq!(total_energy(&State::zero(&g, ModelParams::default()).unwrap()), 0.0);
    let u = VectorField::new(vec![Field::from_fn(&g, |x| x[1].sin()), Field::zeros(&g), Field::zeros(&g)]).unwrap();
    let s = State::new(u, Field::zeros(&g), ModelParams::default()).unwrap();
    assert!((total_energy(&s) - vol() / 4.0).abs() < 1e-12 * vol());
}

#[test]
fn total_energy_matches_fine_quadrature() {
    // Analytic divergence-free u (no component depends on its own coordinate)
    // and an analytic φ with its gradient.
    let u = [
        |x: &[f64]| 0.3 * x[1].sin() + 0.1 * (2.0 * x[2]).cos(),
        |x: &[f64]| -0.2 * x[2].sin(),
        |x: &[f64]| 0.15 * (x[0] + x[1]).cos(),
    ];
    let phi = |x: &[f64]| 0.3 * x[0].sin() * (2.0 * x[1]).cos() + 0.2 * (x[2] + x[0]).cos();
    let grad = |x: &[f64]| {
        [
            0.3 * x[0].cos() * (2.0 * x[1]).cos() - 0.2 * (x[2] + x[0]).sin(),
            -0.6 * x[0].sin() * (2.0 * x[1]).sin(),
            -0.2 * (x[2] + x[0]).sin(),
        ]
    };
    let g = grid(16);
    let vf = VectorField::new(u.iter().map(|f| Field::from_fn(&g, f)).collect()).unwrap();
    let s = State::new(vf, Field::from_fn(&g, phi), ModelParams::default()).unwrap();

    let m = 40;
    let h = TAU / m as f64;
    let mut sum = 0.0;
    for i in 0..m {
        for j in 0..m {
            for k in 0..m {
                let x = [i as f64 * h, j as f64 * h, k as f64 * h];
                let ke: f64 = u.iter().map(|f| f(&x).powi(2)).sum::<f64>() * 0.5;
                let gr: f64 = grad(&x).iter().map(|v| v * v).sum::<f64>() * 0.5;
                sum += ke + gr + double_well(phi(&x) + 1.0);
            }
        }
    }
    let oracle = sum * h.powi(3);
    assert!((total_energy(&s) - oracle).abs() <= 1e-10 * oracle);
}

fn records_of(times: &[f64]) -> Vec<DiagnosticsRecord> {
    times
        .iter()
        .map(|&t| DiagnosticsRecord {
            time: t,
            kinetic: 0.0,
            free_energy: 0.0,
            dissipation: 0.0,
            x: 0.0,
            y: 0.0,
            neg_norms: vec![],
            sobolev_series: vec![],
        })
        .collect()
}

#[test]
fn dissipation_residual_guards() {
    assert_eq!(dissipation_residual(&records_of(&[0.0, 0.1, 0.2, 0.3])).unwrap(), 0.0);
    assert!(matches!(
        dissipation_residual(&records_of(&[0.0, 0.1])),
        Err(Error::InvalidArgument { name: "records", .. })
    ));
    assert!(dissipation_residual(&records_of(&[0.0, 0.1, 0.3])).is_err());
}

fn stokes_residual(dt: f64) -> f64 {
    let g = grid(8);
    let u = VectorField::new(vec![Field::from_fn(&g, |x| x[1].sin()), Field::zeros(&g), Field::zeros(&g)]).unwrap();
    let s = State::new(u, Field::zeros(&g), ModelParams::default()).unwrap();
    let spec = DiagnosticsSpec { neg_orders: vec![], series_orders: vec![] };
    let mut rec = Recorder::default();
    rec.records.push(record(&s, &spec).unwrap());
    integrate(s, &StepControls::new(dt, 0.5), &spec, &mut [&mut rec as &mut dyn Observer]).unwrap();
    dissipation_residual(&rec.records).unwrap()
}

#[test]
fn stokes_residual_is_first_order() {
    let (a, b) = (stokes_residual(0.01), stokes_residual(0.005));
    // Scheme defect for a mode decaying at rate λ is about λ dt/2 (1 − e^{−2λT}).
    let predicted = 0.01 / 2.0 * (1.0 - (-1.0f64).exp());
    assert!((a / predicted - 1.0).abs() < 0.05, "{a} vs {predicted}");
    assert!((a / b - 2.0).abs() < 0.05);
}

#[test]
fn critical_pair_examples() {
    let g = grid(8);
    assert_eq!(critical_pair(&State::zero(&g, ModelParams::default()).unwrap()), (0.0, 0.0));
    let (x, y) = critical_pair(&phase_only(&g, |x| x[0].sin()));
    assert!((x - vol()).abs() < 1e-12 * vol());
    assert!((y - 2.0 * vol()).abs() < 1e-12 * vol());
}

#[test]
fn critical_pair_is_resolution_independent() {
    let (coarse, fine) = (grid(16), grid(32));
    let a = random_state(&coarse, 5, 3.5, 0.2, ModelParams::default());
    let b = random_state(&fine, 5, 3.5, 0.2, ModelParams::default());
    let (xa, ya) = critical_pair(&a);
    let (xb, yb) = critical_pair(&b);
    assert!((xa - xb).abs() <= 1e-10 * xa);
    assert!((ya - yb).abs() <= 1e-10 * ya);
}

#[test]
fn negative_norm_examples() {
    let g = grid(8);
    let s = random_state(&g, 3, 3.0, 0.4, ModelParams::default());
    let grad: f64 = (0..3)
        .map(|a| l2(&nsch_core::spectral::partial(&s.phi, a)).powi(2))
        .sum();
    let plain = s.u.l2_norm().powi(2) + l2(&s.phi).powi(2) + grad;
    assert!((negative_norm(&s, 0.0).unwrap() - plain).abs() <= 1e-12 * plain);

    // |k| = 2: ‖Λ^{−½}φ‖² = ‖φ‖²/2 and ‖Λ^{−½}∇φ‖² = 2‖φ‖², with ‖φ‖² = (2π)³/2.
    let s = phase_only(&g, |x| (2.0 * x[0]).sin());
    let expect = 1.25 * vol();
    assert!((negative_norm(&s, 0.5).unwrap() - expect).abs() < 1e-12 * expect);

    assert!(matches!(negative_norm(&s, 0.75), Err(Error::InvalidArgument { name: "s", .. })));
    assert!(negative_norm(&s, -0.1).is_err());
    let explore = State { params: ModelParams { paper_mode: false, ..s.params }, ..s.clone() };
    assert!(negative_norm(&explore, 0.75).is_ok());
}

#[test]
fn fit_decay_on_exact_power_laws() {
    for sigma in [0.25, 0.5, 0.75, 1.0, 1.5] {
        let series: Vec<(f64, f64)> = (0..40).map(|i| i as f64 * 0.5).map(|t| (t, 3.0 * (1.0 + t).powf(-sigma))).collect();
        let fit = fit_decay(&series, [0.0, 20.0]).unwrap();
        assert!((fit.sigma_hat - sigma).abs() < 1e-12, "{sigma}: {}", fit.sigma_hat);
        assert!(fit.residual < 1e-12);
        assert_eq!(fit.points, 40);
    }
    let constant: Vec<(f64, f64)> = (0..20).map(|i| (i as f64, 2.5)).collect();
    assert!(fit_decay(&constant, [0.0, 19.0]).unwrap().sigma_hat.abs() < 1e-6);
}

#[test]
fn fit_decay_rejects_bad_series() {
    let short: Vec<(f64, f64)> = (0..9).map(|i| (i as f64, 1.0)).collect();
    assert!(fit_decay(&short, [0.0, 10.0]).is_err());
    let mut bad: Vec<(f64, f64)> = (0..12).map(|i| (i as f64, 1.0)).collect();
    bad[4].1 = 0.0;
    assert!(fit_decay(&bad, [0.0, 12.0]).is_err());
    // Points outside the window are ignored.
    assert!(fit_decay(&bad, [5.0, 12.0]).is_err());
    bad[4].1 = -1.0;
    assert!(fit_decay(&bad, [2.0, 1.0]).is_err());
}

#[test]
fn sigma_targets() {
    assert_eq!(sigma_target(0, 2.0, true).unwrap(), 0.0);
    assert!((sigma_target(0, 1.5, true).unwrap() - 0.25).abs() < 1e-15);
    assert!((sigma_target(1, 1.5, true).unwrap() - 0.75).abs() < 1e-15);
    assert!(sigma_target(0, 1.2, true).is_err());
    assert!((sigma_target(0, 1.0, false).unwrap() - 0.75).abs() < 1e-15);
}

#[test]
fn horizon_formula() {
    let t = validity_horizon(32.0 * PI, 2.0, 1e-3);
    let expect = (16.0 * PI).powi(2) / (8.0 * 1000f64.ln());
    assert!((t - expect).abs() < 1e-12 * expect);
    assert!((t - 45.72).abs() < 0.01);
}

#[test]
fn heat_gaussian_gradient_decay() {
    // Stokes flow of P(e₁ G) with G = exp(−|x|²/4): every norm follows the
    // whole-space heat law, ‖∇u‖ ∝ (1 + t)^{−5/4}.
    let l = 16.0 * PI;
    let g = Grid::new(3, 32, l).unwrap();
    let blob = Field::from_fn(&g, |x| {
        let r2: f64 = x.iter().map(|xi| (xi - l / 2.0).powi(2)).sum();
        (-r2 / 4.0).exp()
    });
    let u = leray_project(&VectorField::new(vec![blob, Field::zeros(&g), Field::zeros(&g)]).unwrap());
    let params = ModelParams { linearized: true, ..Default::default() };
    let s = State::new(u, Field::zeros(&g), params).unwrap();
    let horizon = validity_horizon(l, 1.0, 1e-3);
    let spec = DiagnosticsSpec { neg_orders: vec![], series_orders: vec![0, 1] };
    let mut rec = Recorder::default();
    let controls = StepControls { stride: 2, ..StepControls::new(0.25, horizon.floor()) };
    integrate(s, &controls, &spec, &mut [&mut rec as &mut dyn Observer]).unwrap();
    let series: Vec<(f64, f64)> = rec.records.iter().map(|r| (r.time, r.series("u_k1").unwrap())).collect();
    let fit = fit_decay(&series, [1.0, horizon]).unwrap();
    assert!((fit.sigma_hat / 1.25 - 1.0).abs() < 0.15, "sigma_hat = {}", fit.sigma_hat);
}

#[test]
fn csv_layout_is_fixed() {
    let spec = DiagnosticsSpec::default();
    let header = csv_header(&spec);
    assert_eq!(&header[..6], &["time", "kinetic", "free_energy", "dissipation", "X", "Y"]);
    assert_eq!(&header[6..9], &["neg_s0", "neg_s0.25", "neg_s0.5"]);
    assert_eq!(&header[9..12], &["u_k0", "phi_k0", "grad_phi_k0"]);
    assert_eq!(header.len(), 6 + 3 + 9);

    let g = grid(8);
    let s = random_state(&g, 1, 2.0, 0.1, ModelParams::default());
    let r = record(&s, &spec).unwrap();
    let mut out = Vec::new();
    write_csv(&mut out, &spec, &[r.clone(), r]).unwrap();
    let text = String::from_utf8(out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[1].split(',').count(), header.len());
    assert_eq!(lines[1], lines[2]);
    // Shortest round-trip formatting.
    let kinetic: f64 = lines[1].split(',').nth(1).unwrap().parse().unwrap();
    assert_eq!(kinetic, nsch_core::diagnostics::kinetic_energy(&s));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn record_fields_are_nonnegative(seed in any::<u64>(), amp in 0.0..3.0f64, omega0 in prop_oneof![Just(1.0), Just(-1.0)]) {
        let g = grid(8);
        let params = ModelParams { omega0, ..Default::default() };
        let s = if amp == 0.0 { State::zero(&g, params).unwrap() } else { random_state(&g, seed, 3.0, amp, params) };
        let r = record(&s, &DiagnosticsSpec::default()).unwrap();
        prop_assert!(r.kinetic >= 0.0 && r.free_energy >= 0.0 && r.dissipation >= 0.0);
        prop_assert!(r.x >= 0.0 && r.y >= 0.0);
        prop_assert!(r.neg_norms.iter().all(|(_, v)| *v >= 0.0));
    }
}
