use crate::bank::Frame;
use crate::linalg::Vec3;
use crate::sim::SimConfig;

/// One fiducial at one time step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FiducialRecord {
    /// Ground truth position; absent for real recordings.
    pub truth: Option<Vec3>,
    /// `None` when the tracker dropped the fiducial for this frame.
    pub measured: Option<Vec3>,
    pub occluded: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SessionStep {
    pub k: u64,
    pub t: f64,
    pub readings: Vec<FiducialRecord>,
}

/// A recorded or simulated run: every fiducial at every frame.
#[derive(Clone, Debug, PartialEq)]
pub struct SessionData {
    pub dt: f64,
    pub fiducial_count: usize,
    pub seed: Option<u64>,
    pub config: Option<SimConfig>,
    pub steps: Vec<SessionStep>,
}

impl SessionData {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// True when every record carries a ground-truth position.
    pub fn has_truth(&self) -> bool {
        !self.steps.is_empty()
            && self
                .steps
                .iter()
                .all(|s| s.readings.iter().all(|r| r.truth.is_some()))
    }

    pub fn frames(&self) -> impl Iterator<Item = Frame> + '_ {
        self.steps.iter().map(|s| Frame {
            k: s.k,
            t: s.t,
            readings: s.readings.iter().map(|r| r.measured).collect(),
        })
    }

    /// Truth series for one fiducial, if available everywhere.
    pub fn truth_series(&self, fiducial: usize) -> Option<Vec<Vec3>> {
        self.steps
            .iter()
            .map(|s| s.readings.get(fiducial).and_then(|r| r.truth))
            .collect()
    }

    /// Measured series for one fiducial, if no frame was dropped.
    pub fn measured_series(&self, fiducial: usize) -> Option<Vec<Vec3>> {
        self.steps
            .iter()
            .map(|s| s.readings.get(fiducial).and_then(|r| r.measured))
            .collect()
    }
}
