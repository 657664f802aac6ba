//! Dense-matrix reference filter and random test inputs, shared by the
//! oracle tests and the acceptance run.
#![allow(dead_code)]

use fidtrack_core::kalman::{FilterConfig, FilterState, StateVector};
use fidtrack_core::linalg::{Mat9, Matrix, Vec3};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

pub fn dense<const R: usize, const C: usize>(m: &Matrix<R, C>) -> DMatrix<f64> {
    DMatrix::from_fn(R, C, |i, j| m[(i, j)])
}

pub fn transition_oracle(dt: f64) -> DMatrix<f64> {
    let mut a = DMatrix::identity(9, 9);
    for b in 0..3 {
        a[(3 * b, 3 * b + 1)] = dt;
        a[(3 * b, 3 * b + 2)] = dt * dt / 2.0;
        a[(3 * b + 1, 3 * b + 2)] = dt;
    }
    a
}

pub fn observation_oracle() -> DMatrix<f64> {
    let mut h = DMatrix::zeros(3, 9);
    h[(0, 0)] = 1.0;
    h[(1, 3)] = 1.0;
    h[(2, 6)] = 1.0;
    h
}

pub struct OracleStep {
    pub x: DVector<f64>,
    pub p: DMatrix<f64>,
    pub nis: f64,
    pub innovation: DVector<f64>,
}

pub fn oracle_step(state: &FilterState, z: Vec3, cfg: &FilterConfig) -> OracleStep {
    let a = transition_oracle(cfg.dt);
    let h = observation_oracle();
    let x = DVector::from_column_slice(&state.x.0);
    let x_prior = &a * x;
    let p_prior = &a * dense(&state.p) * a.transpose() + dense(&cfg.q);
    let p_prior = (&p_prior + p_prior.transpose()) * 0.5;
    let s = &h * &p_prior * h.transpose() + dense(&cfg.r);
    let s_inv = s.clone().try_inverse().expect("S invertible");
    let k = &p_prior * h.transpose() * &s_inv;
    let zv = DVector::from_column_slice(&z.to_array());
    let innovation = zv - &h * &x_prior;
    let x_post = &x_prior + &k * &innovation;
    let p_post = (DMatrix::identity(9, 9) - &k * &h) * &p_prior;
    let p_post = (&p_post + p_post.transpose()) * 0.5;
    let nis = (innovation.transpose() * &s_inv * &innovation)[(0, 0)];
    OracleStep {
        x: x_post,
        p: p_post,
        nis,
        innovation,
    }
}

pub fn random_spd<const N: usize>(
    rng: &mut impl Rng,
    scale: std::ops::Range<f64>,
    ridge: f64,
) -> Matrix<N, N> {
    let scale = if scale.is_empty() { scale.start } else { rng.gen_range(scale) };
    let b = Matrix::<N, N>::from_rows(std::array::from_fn(|_| {
        std::array::from_fn(|_| rng.gen_range(-1.0..1.0) * scale)
    }));
    (b * b.transpose() + Matrix::<N, N>::identity().scale(ridge)).symmetrized()
}

pub fn random_case(rng: &mut impl Rng) -> (FilterState, Vec3, FilterConfig) {
    let pos = Vec3::new(
        rng.gen_range(-500.0..500.0),
        rng.gen_range(-500.0..500.0),
        rng.gen_range(800.0..1500.0),
    );
    let vel = Vec3::new(rng.gen_range(-50.0..50.0), rng.gen_range(-50.0..50.0), rng.gen_range(-50.0..50.0));
    let acc = Vec3::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
    let state = FilterState {
        x: StateVector::from_parts(pos, vel, acc),
        p: random_spd::<9>(rng, 0.05..3.0, 1e-6),
        k: rng.gen_range(0..10_000),
    };
    let cfg = FilterConfig {
        dt: rng.gen_range(0.001..0.05),
        q: random_spd::<9>(rng, 0.0..0.1, 0.0),
        r: random_spd::<3>(rng, 0.05..0.5, 1e-4),
        p0: Mat9::identity(),
    };
    let z = pos + Vec3::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
    (state, z, cfg)
}

/// Per-component relative error. Entries smaller than 1e-4 of the object's
/// largest entry are measured against that floor instead: the covariance
/// update cancels to near zero in places, and there both implementations
/// only carry rounding noise of order eps·max.
pub fn max_rel_err(got: &[f64], want: &[f64]) -> f64 {
    let scale = want.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    got.iter()
        .zip(want)
        .map(|(g, w)| (g - w).abs() / w.abs().max(1e-4 * scale).max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max)
}
