//! One independent filter per fiducial, fed frame by frame.
//!
//! Besides refined positions, the bank watches each fiducial's normalised
//! innovation squared (NIS). Under a well-specified model NIS is χ²(3); a
//! fiducial whose NIS stays above the gate for `persistence` consecutive
//! measured frames is flagged as a suspected occlusion. The flag is
//! advisory: unless `reject_gated` is set the measurement is still used.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::kalman::{self, FilterConfig, FilterState};
use crate::linalg::Vec3;
use crate::session::SessionData;

/// χ²(3) 99.9th percentile.
pub const DEFAULT_GATE_THRESHOLD: f64 = 16.27;
pub const DEFAULT_GATE_PERSISTENCE: u32 = 3;

/// Readings for every fiducial at one instant.
#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    pub k: u64,
    /// seconds
    pub t: f64,
    pub readings: Vec<Option<Vec3>>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GateConfig {
    pub threshold: f64,
    pub persistence: u32,
    /// Treat gated measurements as dropped instead of filtering through them.
    pub reject_gated: bool,
}

impl Default for GateConfig {
    fn default() -> Self {
        Self {
            threshold: DEFAULT_GATE_THRESHOLD,
            persistence: DEFAULT_GATE_PERSISTENCE,
            reject_gated: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FiducialEstimate {
    pub refined: Vec3,
    pub nis: f64,
    pub occluded_suspect: bool,
    pub predicted_only: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FilteredFrame {
    pub k: u64,
    pub t: f64,
    /// `None` for fiducials that have not produced a reading yet.
    pub estimates: Vec<Option<FiducialEstimate>>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct TrackStats {
    /// Frames where a real innovation was evaluated.
    pub measured_frames: u64,
    pub gate_exceedances: u64,
    pub flagged_frames: u64,
}

#[derive(Clone, Debug, Default)]
struct Track {
    state: Option<FilterState>,
    consecutive: u32,
    suspect: bool,
    stats: TrackStats,
}

#[derive(Clone, Debug)]
pub struct TrackerBank {
    config: FilterConfig,
    gate: GateConfig,
    tracks: Vec<Track>,
    last_k: Option<u64>,
}

impl TrackerBank {
    pub fn new(n_fiducials: usize, config: FilterConfig, gate: GateConfig) -> Result<Self> {
        if n_fiducials == 0 {
            return Err(Error::invalid("a tracker bank needs at least one fiducial"));
        }
        if !(gate.threshold.is_finite() && gate.threshold > 0.0) {
            return Err(Error::invalid("gate threshold must be > 0"));
        }
        if gate.persistence == 0 {
            return Err(Error::invalid("gate persistence must be >= 1"));
        }
        config.validate()?;
        Ok(Self {
            config,
            gate,
            tracks: vec![Track::default(); n_fiducials],
            last_k: None,
        })
    }

    pub fn fiducial_count(&self) -> usize {
        self.tracks.len()
    }

    pub fn config(&self) -> &FilterConfig {
        &self.config
    }

    pub fn gate(&self) -> &GateConfig {
        &self.gate
    }

    /// Current filter state; `None` while the fiducial is still idle.
    pub fn state(&self, fiducial: usize) -> Option<&FilterState> {
        self.tracks.get(fiducial).and_then(|t| t.state.as_ref())
    }

    pub fn stats(&self, fiducial: usize) -> Option<TrackStats> {
        self.tracks.get(fiducial).map(|t| t.stats)
    }

    pub fn ingest(&mut self, frame: &Frame) -> Result<FilteredFrame> {
        if frame.readings.len() != self.tracks.len() {
            return Err(Error::schema(format!(
                "frame {} has {} readings, bank tracks {} fiducials",
                frame.k,
                frame.readings.len(),
                self.tracks.len()
            )));
        }
        if let Some(prev) = self.last_k {
            if frame.k != prev + 1 {
                return Err(Error::Ordering {
                    expected: prev + 1,
                    got: frame.k,
                });
            }
        }

        let config = &self.config;
        let gate = &self.gate;
        let estimates = self
            .tracks
            .iter_mut()
            .zip(&frame.readings)
            .map(|(track, reading)| track.advance(*reading, config, gate))
            .collect::<Result<Vec<_>>>()?;

        self.last_k = Some(frame.k);
        Ok(FilteredFrame {
            k: frame.k,
            t: frame.t,
            estimates,
        })
    }

    /// Filters a whole session from a fresh bank.
    pub fn filter_session(
        session: &SessionData,
        config: FilterConfig,
        gate: GateConfig,
    ) -> Result<Vec<FilteredFrame>> {
        let mut bank = Self::new(session.fiducial_count, config, gate)?;
        session.frames().map(|f| bank.ingest(&f)).collect()
    }
}

impl Track {
    fn advance(
        &mut self,
        reading: Option<Vec3>,
        config: &FilterConfig,
        gate: &GateConfig,
    ) -> Result<Option<FiducialEstimate>> {
        let Some(state) = self.state else {
            // idle until the first real reading
            return Ok(match reading {
                None => None,
                Some(z) => {
                    let state = kalman::init_state(z, config)?;
                    self.state = Some(state);
                    Some(FiducialEstimate {
                        refined: state.x.position(),
                        nis: 0.0,
                        occluded_suspect: false,
                        predicted_only: false,
                    })
                }
            });
        };

        let prior = kalman::predict(&state, config)?;
        let out = match reading {
            None => kalman::coast(&prior),
            Some(z) => {
                let g = kalman::gain(&prior.p, &config.r)?;
                let innovation = z - prior.x.position();
                let nis = g.nis(innovation);
                self.stats.measured_frames += 1;
                let exceeded = nis > gate.threshold;
                if exceeded {
                    self.stats.gate_exceedances += 1;
                    self.consecutive = self.consecutive.saturating_add(1);
                } else {
                    self.consecutive = 0;
                }
                self.suspect = self.consecutive >= gate.persistence;
                if exceeded && gate.reject_gated {
                    kalman::StepOutput {
                        innovation,
                        nis,
                        ..kalman::coast(&prior)
                    }
                } else {
                    let state = kalman::update(&prior, &g.k, z)?;
                    kalman::StepOutput {
                        refined: state.x.position(),
                        state,
                        innovation,
                        nis,
                        predicted_only: false,
                    }
                }
            }
        };
        if self.suspect {
            self.stats.flagged_frames += 1;
        }
        self.state = Some(out.state);
        Ok(Some(FiducialEstimate {
            refined: out.refined,
            nis: out.nis,
            occluded_suspect: self.suspect,
            predicted_only: out.predicted_only,
        }))
    }
}

/// Single-threaded fiducial updates per second over `frames`.
pub fn throughput_bench(bank: &mut TrackerBank, frames: &[Frame]) -> Result<f64> {
    if frames.is_empty() {
        return Err(Error::invalid("throughput bench needs at least one frame"));
    }
    let updates = (frames.len() * bank.fiducial_count()) as f64;
    let start = Instant::now();
    for f in frames {
        std::hint::black_box(bank.ingest(std::hint::black_box(f))?);
    }
    let secs = start.elapsed().as_secs_f64().max(f64::MIN_POSITIVE);
    Ok(updates / secs)
}
