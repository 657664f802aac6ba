//! Workloads shared by the criterion benchmarks.

use fidtrack_core::bank::{Frame, GateConfig, TrackerBank};
use fidtrack_core::kalman::{self, FilterConfig, FilterState};
use fidtrack_core::sim::{simulate_session, SimConfig};
use fidtrack_core::{Result, Vec3};

/// A settled single-fiducial filter and a stream of nearby measurements.
pub fn single_filter(samples: usize) -> Result<(FilterState, FilterConfig, Vec<Vec3>)> {
    let config = FilterConfig::default();
    let mut state = kalman::init_state(Vec3::new(0.0, 0.0, 1230.0), &config)?;
    let zs: Vec<Vec3> = (0..samples)
        .map(|i| {
            let s = i as f64;
            Vec3::new(0.1 * (s * 0.37).sin(), 0.1 * (s * 0.53).cos(), 1230.0 + 0.15 * (s * 0.71).sin())
        })
        .collect();
    for z in zs.iter().take(200) {
        state = kalman::step(&state, Some(*z), &config)?.state;
    }
    Ok((state, config, zs))
}

/// Frames of the default simulated array, `frames` long, and a fresh bank for them.
pub fn default_stream(frames: usize) -> Result<(TrackerBank, Vec<Frame>)> {
    let mut sim = SimConfig::default();
    sim.duration = frames as f64 / sim.fps;
    let session = simulate_session(&sim)?;
    let stream: Vec<Frame> = session.frames().take(frames).collect();
    let bank = TrackerBank::new(session.fiducial_count, FilterConfig::default(), GateConfig::default())?;
    Ok((bank, stream))
}
