//! Linear Kalman filter for a single fiducial under a constant-acceleration
//! motion model.
//!
//! The state is `[tx vx ax ty vy ay tz vz az]`: position, velocity and
//! acceleration interleaved per axis. The measurement is the fiducial
//! centre position, so the observation matrix simply selects columns 0, 3
//! and 6.
//!
//! One filter step is
//!
//! ```text
//! x⁻ = A x            P⁻ = A P Aᵀ + Q
//! S  = H P⁻ Hᵀ + R    K  = P⁻ Hᵀ S⁻¹
//! x  = x⁻ + K (z − H x⁻)
//! P  = (I − K H) P⁻
//! refined = H x
//! ```
//!
//! `S⁻¹` is never formed; the gain comes from a Cholesky solve of the 3x3
//! innovation covariance.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Cholesky3, Mat3, Mat3x9, Mat9, Mat9x3, Vec3};

pub const STATE_DIM: usize = 9;
pub const MEAS_DIM: usize = 3;

/// Column of each position component inside the state vector.
pub const POSITION_INDICES: [usize; 3] = [0, 3, 6];

/// Per-fiducial state `[tx vx ax ty vy ay tz vz az]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StateVector(pub [f64; STATE_DIM]);

impl StateVector {
    pub fn from_parts(position: Vec3, velocity: Vec3, acceleration: Vec3) -> Self {
        let (p, v, a) = (position, velocity, acceleration);
        Self([p.x, v.x, a.x, p.y, v.y, a.y, p.z, v.z, a.z])
    }

    pub fn position(&self) -> Vec3 {
        Vec3::new(self.0[0], self.0[3], self.0[6])
    }

    pub fn velocity(&self) -> Vec3 {
        Vec3::new(self.0[1], self.0[4], self.0[7])
    }

    pub fn acceleration(&self) -> Vec3 {
        Vec3::new(self.0[2], self.0[5], self.0[8])
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

/// The constant-acceleration transition matrix for time step `dt` (seconds).
///
/// `dt = 0` yields the identity, which tests use to isolate the update.
pub fn build_transition(dt: f64) -> Result<Mat9> {
    if !dt.is_finite() {
        return Err(Error::invalid(format!("time step must be finite, got {dt}")));
    }
    let mut a = Mat9::identity();
    for axis in 0..3 {
        let i = 3 * axis;
        a[(i, i + 1)] = dt;
        a[(i, i + 2)] = 0.5 * dt * dt;
        a[(i + 1, i + 2)] = dt;
    }
    Ok(a)
}

/// Selects the three position components from the state.
pub fn build_observation() -> Mat3x9 {
    let mut h = Mat3x9::zeros();
    for (row, &col) in POSITION_INDICES.iter().enumerate() {
        h[(row, col)] = 1.0;
    }
    h
}

/// How the scalar process-noise intensity is turned into a 9x9 `Q`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProcessNoiseModel {
    /// Continuous white jerk with spectral density `q`, discretised over `dt`
    /// (correlated position/velocity/acceleration block per axis).
    #[default]
    WhiteJerk,
    /// `q · I₉`, the same variance on every state regardless of units.
    Isotropic,
}

pub fn process_noise(model: ProcessNoiseModel, q: f64, dt: f64) -> Mat9 {
    match model {
        ProcessNoiseModel::Isotropic => Mat9::identity().scale(q),
        ProcessNoiseModel::WhiteJerk => {
            let (d1, d2, d3) = (dt, dt * dt, dt * dt * dt);
            let (d4, d5) = (d2 * d2, d2 * d3);
            let block = [
                [d5 / 20.0, d4 / 8.0, d3 / 6.0],
                [d4 / 8.0, d3 / 3.0, d2 / 2.0],
                [d3 / 6.0, d2 / 2.0, d1],
            ];
            let mut m = Mat9::zeros();
            for axis in 0..3 {
                let o = 3 * axis;
                for i in 0..3 {
                    for j in 0..3 {
                        m[(o + i, o + j)] = q * block[i][j];
                    }
                }
            }
            m
        }
    }
}

/// Scalar parameters from which a [`FilterConfig`] is assembled.
#[derive(Clone, Debug, PartialEq)]
pub struct FilterParams {
    pub dt: f64,
    pub q_var: f64,
    pub q_model: ProcessNoiseModel,
    /// Measurement noise variance per axis (mm²).
    pub r_var: [f64; 3],
    /// Initial position variance per axis; `None` reuses `r_var`.
    pub p0_pos_var: Option<[f64; 3]>,
    pub p0_vel_var: f64,
    pub p0_acc_var: f64,
}

/// Measurement noise standard deviations (mm) of the synthetic array.
pub const DEFAULT_NOISE_STD: [f64; 3] = [0.15, 0.15, 0.21];
/// Measurement noise variances (mm²) matching [`DEFAULT_NOISE_STD`].
pub const DEFAULT_R_VAR: [f64; 3] = [0.0225, 0.0225, 0.0441];
/// Process noise intensity for synthetic data.
pub const SIM_Q_VAR: f64 = 0.001;
/// Process noise intensity for recorded data.
pub const RECORDED_Q_VAR: f64 = 0.01;

impl Default for FilterParams {
    fn default() -> Self {
        Self {
            dt: 1.0 / 200.0,
            q_var: SIM_Q_VAR,
            q_model: ProcessNoiseModel::WhiteJerk,
            r_var: DEFAULT_R_VAR,
            p0_pos_var: None,
            p0_vel_var: 100.0,
            p0_acc_var: 100.0,
        }
    }
}

/// Everything the filter needs besides the state itself.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FilterConfig {
    /// Seconds between frames.
    pub dt: f64,
    pub q: Mat9,
    pub r: Mat3,
    pub p0: Mat9,
}

impl FilterConfig {
    pub fn new(dt: f64, q: Mat9, r: Mat3, p0: Mat9) -> Result<Self> {
        let cfg = Self { dt, q, r, p0 };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_params(p: &FilterParams) -> Result<Self> {
        let q = process_noise(p.q_model, p.q_var, p.dt);
        let r = Mat3::from_diagonal(p.r_var);
        let pos = p.p0_pos_var.unwrap_or(p.r_var);
        let (v, a) = (p.p0_vel_var, p.p0_acc_var);
        let p0 = Mat9::from_diagonal([pos[0], v, a, pos[1], v, a, pos[2], v, a]);
        Self::new(p.dt, q, r, p0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::invalid(format!("dt must be > 0, got {}", self.dt)));
        }
        check_psd("Q", &self.q)?;
        check_psd("P0", &self.p0)?;
        if !self.r.is_finite() || self.r.asymmetry() > 1e-12 * self.r.norm_inf().max(1.0) {
            return Err(Error::invalid("R must be finite and symmetric"));
        }
        if Cholesky3::new(&self.r).is_none() {
            return Err(Error::invalid("R must be positive definite"));
        }
        Ok(())
    }
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self::from_params(&FilterParams::default()).expect("default filter parameters are valid")
    }
}

fn check_psd(name: &str, m: &Mat9) -> Result<()> {
    if !m.is_finite() {
        return Err(Error::invalid(format!("{name} has non-finite entries")));
    }
    let health = CovarianceHealth::of(m);
    if !health.is_healthy() {
        return Err(Error::invalid(format!(
            "{name} is not symmetric positive semidefinite (asymmetry {:e}, min eigenvalue {:e})",
            health.asymmetry, health.min_eigenvalue
        )));
    }
    Ok(())
}

/// Symmetry and definiteness diagnostics for a covariance matrix.
#[derive(Clone, Copy, Debug)]
pub struct CovarianceHealth {
    /// `‖P − Pᵀ‖∞ / max(1, ‖P‖∞)`.
    pub asymmetry: f64,
    pub min_eigenvalue: f64,
}

impl CovarianceHealth {
    pub const SYMMETRY_TOL: f64 = 1e-9;
    pub const EIGEN_FLOOR: f64 = -1e-9;

    pub fn of(p: &Mat9) -> Self {
        Self {
            asymmetry: p.asymmetry() / p.norm_inf().max(1.0),
            min_eigenvalue: p.min_eigenvalue(),
        }
    }

    pub fn is_healthy(&self) -> bool {
        self.asymmetry <= Self::SYMMETRY_TOL && self.min_eigenvalue >= Self::EIGEN_FLOOR
    }
}

/// The filter's belief about one fiducial after `k` steps.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FilterState {
    pub x: StateVector,
    pub p: Mat9,
    pub k: u64,
}

/// Prediction for the next step, before the measurement is folded in.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Prior {
    pub x: StateVector,
    pub p: Mat9,
    /// Step index of the state this prediction was made from.
    pub from_step: u64,
}

/// Kalman gain together with the innovation covariance it was built from.
#[derive(Clone, Copy, Debug)]
pub struct Gain {
    pub k: Mat9x3,
    pub s: Mat3,
    chol: Cholesky3,
}

impl Gain {
    /// Normalised innovation squared `νᵀ S⁻¹ ν`.
    pub fn nis(&self, innovation: Vec3) -> f64 {
        self.chol.mahalanobis_sq(innovation.to_array())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepOutput {
    pub state: FilterState,
    pub refined: Vec3,
    pub innovation: Vec3,
    pub nis: f64,
    pub predicted_only: bool,
}

/// Starts a filter at the first reading with zero velocity and acceleration.
pub fn init_state(z0: Vec3, config: &FilterConfig) -> Result<FilterState> {
    if !z0.is_finite() {
        return Err(Error::invalid("initial measurement must be finite"));
    }
    Ok(FilterState {
        x: StateVector::from_parts(z0, Vec3::ZERO, Vec3::ZERO),
        p: config.p0,
        k: 0,
    })
}

pub fn predict(state: &FilterState, config: &FilterConfig) -> Result<Prior> {
    let a = build_transition(config.dt)?;
    let x = StateVector(a.mul_vec(&state.x.0));
    let p = (a * state.p * a.transpose() + config.q).symmetrized();
    if !x.is_finite() || !p.is_finite() {
        return Err(Error::NumericalOverflow("predict"));
    }
    Ok(Prior {
        x,
        p,
        from_step: state.k,
    })
}

/// Rows 0, 3 and 6 of `P`, i.e. `H P`.
fn observe_rows(p: &Mat9) -> Mat3x9 {
    let rows = p.rows();
    Mat3x9::from_rows(POSITION_INDICES.map(|i| rows[i]))
}

pub fn gain(p_prior: &Mat9, r: &Mat3) -> Result<Gain> {
    let hp = observe_rows(p_prior);
    // S = H P Hᵀ + R, read straight out of the position rows/columns
    let mut s = *r;
    for i in 0..3 {
        for j in 0..3 {
            s[(i, j)] += hp[(i, POSITION_INDICES[j])];
        }
    }
    let s = s.symmetrized();
    let chol = Cholesky3::new(&s).ok_or(Error::SingularInnovation)?;
    // K = P Hᵀ S⁻¹ = (S⁻¹ H P)ᵀ since P and S are symmetric
    let mut k = Mat9x3::zeros();
    for col in 0..STATE_DIM {
        let sol = chol.solve([hp[(0, col)], hp[(1, col)], hp[(2, col)]]);
        for (m, v) in sol.into_iter().enumerate() {
            k[(col, m)] = v;
        }
    }
    Ok(Gain { k, s, chol })
}

/// Folds measurement `z` into the prior.
pub fn update(prior: &Prior, k: &Mat9x3, z: Vec3) -> Result<FilterState> {
    let innovation = z - prior.x.position();
    let correction = k.mul_vec(&innovation.to_array());
    let mut x = prior.x;
    for (xi, ci) in x.0.iter_mut().zip(correction) {
        *xi += ci;
    }
    // (I − K H) P⁻ = P⁻ − K (H P⁻)
    let p = (prior.p - *k * observe_rows(&prior.p)).symmetrized();
    if !x.is_finite() || !p.is_finite() {
        return Err(Error::NumericalOverflow("update"));
    }
    Ok(FilterState {
        x,
        p,
        k: prior.from_step + 1,
    })
}

/// One full predict/correct cycle. A missing reading yields a
/// prediction-only step that still advances the step index.
pub fn step(state: &FilterState, z: Option<Vec3>, config: &FilterConfig) -> Result<StepOutput> {
    let prior = predict(state, config)?;
    match z {
        Some(z) => {
            let g = gain(&prior.p, &config.r)?;
            let innovation = z - prior.x.position();
            let nis = g.nis(innovation);
            let state = update(&prior, &g.k, z)?;
            Ok(StepOutput {
                refined: state.x.position(),
                state,
                innovation,
                nis,
                predicted_only: false,
            })
        }
        None => Ok(coast(&prior)),
    }
}

/// Accepts the prior as the posterior.
pub fn coast(prior: &Prior) -> StepOutput {
    let state = FilterState {
        x: prior.x,
        p: prior.p,
        k: prior.from_step + 1,
    };
    StepOutput {
        refined: state.x.position(),
        state,
        innovation: Vec3::ZERO,
        nis: 0.0,
        predicted_only: true,
    }
}
