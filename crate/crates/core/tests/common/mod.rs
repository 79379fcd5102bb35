#![allow(dead_code)]

use std::f64::consts::PI;

use nsch_core::spectral::random::FieldRng;
use nsch_core::spectral::sobolev_norm;
use nsch_core::{Field, Grid, ModelParams, State, VectorField};

pub const TAU: f64 = 2.0 * PI;

pub fn grid(n: usize) -> Grid {
    Grid::new(3, n, TAU).unwrap()
}

pub fn l2(f: &Field) -> f64 {
    sobolev_norm(f, 0.0)
}

pub fn vec_diff(a: &VectorField, b: &VectorField) -> f64 {
    a.components()
        .iter()
        .zip(b.components())
        .map(|(x, y)| l2(&x.sub(y).unwrap()).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Divergence-free `u` and mean-free `φ`, each with L² norm `amp`.
pub fn random_state(g: &Grid, seed: u64, kmax: f64, amp: f64, params: ModelParams) -> State {
    let mut rng = FieldRng::new(seed);
    let u = rng.divergence_free(g, kmax);
    let phi = rng.band_limited(g, kmax);
    let su = amp / u.l2_norm();
    let sp = amp / l2(&phi);
    State::new(u.map(|c| c.scale(su)), phi.scale(sp), params).unwrap()
}

pub fn state_diff(a: &State, b: &State) -> f64 {
    (vec_diff(&a.u, &b.u).powi(2) + l2(&a.phi.sub(&b.phi).unwrap()).powi(2)).sqrt()
}

pub fn state_norm(a: &State) -> f64 {
    (a.u.l2_norm().powi(2) + l2(&a.phi).powi(2)).sqrt()
}
