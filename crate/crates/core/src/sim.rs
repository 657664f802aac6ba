//! Ground-truth trajectories for a rigid multi-fiducial array.
//!
//! The array pose is integrated per frame: translation under constant
//! acceleration, rotation by the first-order update `R ← R + dt·[ω]ₓ·R`.
//! Each fiducial's truth is its initial position pushed through the current
//! pose, then seeded anisotropic Gaussian noise and optional occlusion bias
//! segments are layered on top to produce the measurements.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Mat3, Vec3};
use crate::noise::GaussianSource;
use crate::session::{FiducialRecord, SessionData, SessionStep};

/// Skew-symmetric cross-product matrix: `skew(ω)·v = ω × v`.
pub fn skew(omega: Vec3) -> Mat3 {
    let Vec3 { x, y, z } = omega;
    Mat3::from_rows([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])
}

/// One first-order rotation step, optionally projected back onto SO(3).
pub fn propagate_rotation(r_prev: &Mat3, omega: Vec3, dt: f64, orthonormalize: bool) -> Mat3 {
    let r = *r_prev + (skew(omega) * *r_prev).scale(dt);
    if orthonormalize {
        orthonormalized(&r)
    } else {
        r
    }
}

/// Nearest rotation (polar factor) via the Björck iteration
/// `R ← R (3I − RᵀR) / 2`, which converges quadratically for near-orthonormal
/// input.
pub fn orthonormalized(r: &Mat3) -> Mat3 {
    let three = Mat3::identity().scale(3.0);
    let mut out = *r;
    for _ in 0..16 {
        let gram = out.transpose() * out;
        if (gram - Mat3::identity()).max_abs() <= 4.0 * f64::EPSILON {
            break;
        }
        out = (out * (three - gram)).scale(0.5);
    }
    out
}

/// Constant-acceleration translation update; returns `(t', v', a')`.
pub fn propagate_translation(t: Vec3, v: Vec3, a: Vec3, dt: f64) -> (Vec3, Vec3, Vec3) {
    let t_next = t + v.scale(dt) + a.scale(0.5 * dt * dt);
    let v_next = v + a.scale(dt);
    (t_next, v_next, a)
}

/// Rigid placement of the array.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pose {
    pub rotation: Mat3,
    pub translation: Vec3,
}

impl Pose {
    pub fn identity() -> Self {
        Self {
            rotation: Mat3::identity(),
            translation: Vec3::ZERO,
        }
    }
}

pub fn transform_point(pose: &Pose, x0: Vec3) -> Vec3 {
    pose.rotation * x0 + pose.translation
}

/// Distances between cyclically consecutive points: 0→1, 1→2, …, (n−1)→0.
pub fn pairwise_distances(points: &[Vec3]) -> Result<Vec<f64>> {
    if points.len() < 2 {
        return Err(Error::invalid("need at least two points"));
    }
    Ok((0..points.len())
        .map(|i| (points[(i + 1) % points.len()] - points[i]).norm())
        .collect())
}

/// A constant measurement offset on one fiducial, emulating a translucent
/// occluder, with a one-frame spike when it is placed and when it is removed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OcclusionBias {
    pub fiducial_id: usize,
    pub start_k: u64,
    /// Inclusive.
    pub end_k: u64,
    pub offset: Vec3,
    #[serde(default = "OcclusionBias::default_spike")]
    pub spike_magnitude: Vec3,
}

impl OcclusionBias {
    pub fn default_spike() -> Vec3 {
        Vec3::new(0.5, 0.5, 0.7)
    }

    fn covers(&self, k: u64) -> bool {
        (self.start_k..=self.end_k).contains(&k)
    }
}

/// Initial fiducial centres of the four-fiducial synthetic array (mm).
pub const DEFAULT_FIDUCIALS: [[f64; 3]; 4] = [
    [-180.0, 180.0, 1230.0],
    [170.0, -150.0, 1230.0],
    [50.0, -130.0, 1230.0],
    [70.0, -110.0, 1230.0],
];

pub const DEFAULT_SEED: u64 = 42;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub fiducial_initials: Vec<Vec3>,
    /// mm/s
    pub v0: Vec3,
    /// mm/s²
    pub a0: Vec3,
    /// rad/s
    pub omega: Vec3,
    pub fps: f64,
    /// seconds
    pub duration: f64,
    /// Per-axis measurement noise standard deviation (mm).
    pub noise_std: Vec3,
    pub seed: u64,
    pub bias_segments: Vec<OcclusionBias>,
    pub orthonormalize: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            fiducial_initials: DEFAULT_FIDUCIALS.iter().map(|&p| Vec3::from(p)).collect(),
            v0: Vec3::ZERO,
            a0: Vec3::splat(0.1),
            omega: Vec3::splat(0.001),
            fps: 200.0,
            duration: 5.0,
            noise_std: Vec3::from(crate::kalman::DEFAULT_NOISE_STD),
            seed: DEFAULT_SEED,
            bias_segments: Vec::new(),
            orthonormalize: false,
        }
    }
}

impl SimConfig {
    /// Same array and noise, but motionless.
    pub fn static_marker() -> Self {
        Self {
            v0: Vec3::ZERO,
            a0: Vec3::ZERO,
            omega: Vec3::ZERO,
            ..Self::default()
        }
    }

    pub fn step_count(&self) -> usize {
        (self.fps * self.duration).round() as usize
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.fps
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, msg: &str| Err(Error::config(format!("sim.{key}"), msg));
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return bad("fps", "must be > 0");
        }
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return bad("duration", "must be > 0");
        }
        let n = self.noise_std;
        if !n.is_finite() || n.x < 0.0 || n.y < 0.0 || n.z < 0.0 {
            return bad("noise_std", "components must be finite and >= 0");
        }
        if self.fiducial_initials.is_empty() {
            return bad("fiducial_initials", "need at least one fiducial");
        }
        if !self.fiducial_initials.iter().all(|p| p.is_finite()) {
            return bad("fiducial_initials", "positions must be finite");
        }
        for (name, v) in [("v0", self.v0), ("a0", self.a0), ("omega", self.omega)] {
            if !v.is_finite() {
                return bad(name, "must be finite");
            }
        }
        for (i, b) in self.bias_segments.iter().enumerate() {
            let key = format!("sim.bias_segments[{i}]");
            if b.fiducial_id >= self.fiducial_initials.len() {
                return Err(Error::config(key, "fiducial_id out of range"));
            }
            if b.start_k >= b.end_k {
                return Err(Error::config(key, "start_k must be < end_k"));
            }
            if !b.offset.is_finite() || !b.spike_magnitude.is_finite() {
                return Err(Error::config(key, "offset and spike must be finite"));
            }
        }
        Ok(())
    }
}

/// Runs the synthetic experiment.
///
/// Noise is drawn step-major, fiducial-minor, x→y→z, one draw per axis, so a
/// given seed always maps to the same session.
pub fn simulate_session(config: &SimConfig) -> Result<SessionData> {
    config.validate()?;
    let dt = config.dt();
    let n = config.step_count();
    let mut noise = GaussianSource::new(config.seed);
    let mut pose = Pose::identity();
    let (mut v, mut a) = (config.v0, config.a0);
    let mut steps = Vec::with_capacity(n);

    for k in 0..n as u64 {
        let readings = config
            .fiducial_initials
            .iter()
            .enumerate()
            .map(|(id, &x0)| {
                let truth = transform_point(&pose, x0);
                let s = config.noise_std;
                let mut measured = truth
                    + Vec3::new(noise.normal(s.x), noise.normal(s.y), noise.normal(s.z));
                let mut occluded = false;
                for b in config.bias_segments.iter().filter(|b| b.fiducial_id == id) {
                    if b.covers(k) {
                        measured += b.offset;
                        occluded = true;
                    }
                    if k == b.start_k || k == b.end_k {
                        measured += b.spike_magnitude;
                    }
                }
                FiducialRecord {
                    truth: Some(truth),
                    measured: Some(measured),
                    occluded,
                }
            })
            .collect();
        steps.push(SessionStep {
            k,
            t: k as f64 * dt,
            readings,
        });

        let (t_next, v_next, a_next) = propagate_translation(pose.translation, v, a, dt);
        pose.translation = t_next;
        (v, a) = (v_next, a_next);
        pose.rotation = propagate_rotation(&pose.rotation, config.omega, dt, config.orthonormalize);
    }

    Ok(SessionData {
        dt,
        fiducial_count: config.fiducial_initials.len(),
        seed: Some(config.seed),
        config: Some(config.clone()),
        steps,
    })
}
