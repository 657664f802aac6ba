//! Error statistics of raw and filtered positions against ground truth.

use std::fmt::Write as _;

use crate::bank::FilteredFrame;
use crate::error::{Error, Result};
use crate::session::SessionData;

/// Samples excluded from the start of every series while the filter settles.
pub const DEFAULT_BURNOUT: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        }
    }

    pub fn parse(s: &str) -> Option<Axis> {
        match s.to_ascii_lowercase().as_str() {
            "x" => Some(Axis::X),
            "y" => Some(Axis::Y),
            "z" => Some(Axis::Z),
            _ => None,
        }
    }
}

fn errors_after_burnout<'a>(
    measured: &'a [f64],
    truth: &'a [f64],
    burnout: usize,
) -> Result<impl Iterator<Item = f64> + 'a> {
    if measured.len() != truth.len() {
        return Err(Error::invalid(format!(
            "series lengths differ: {} vs {}",
            measured.len(),
            truth.len()
        )));
    }
    if burnout >= measured.len() {
        return Err(Error::invalid(format!(
            "burnout of {burnout} leaves no samples out of {}",
            measured.len()
        )));
    }
    Ok(measured[burnout..]
        .iter()
        .zip(&truth[burnout..])
        .map(|(m, t)| m - t))
}

/// Mean squared error over the samples after the first `burnout`.
pub fn mse(measured: &[f64], truth: &[f64], burnout: usize) -> Result<f64> {
    let n = (measured.len().saturating_sub(burnout)) as f64;
    Ok(errors_after_burnout(measured, truth, burnout)?
        .map(|e| e * e)
        .sum::<f64>()
        / n)
}

/// Population variance (denominator n) of the error series after burnout.
pub fn error_variance(measured: &[f64], truth: &[f64], burnout: usize) -> Result<f64> {
    let n = (measured.len().saturating_sub(burnout)) as f64;
    let mean = errors_after_burnout(measured, truth, burnout)?.sum::<f64>() / n;
    Ok(errors_after_burnout(measured, truth, burnout)?
        .map(|e| (e - mean) * (e - mean))
        .sum::<f64>()
        / n)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricsRow {
    pub fiducial: usize,
    pub axis: Axis,
    pub mse_raw: f64,
    pub mse_filtered: f64,
    pub var_raw: f64,
    pub var_filtered: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricsReport {
    pub burnout: usize,
    pub n_used: usize,
    /// Fiducial-major, x→y→z.
    pub rows: Vec<MetricsRow>,
}

impl MetricsReport {
    pub fn row(&self, fiducial: usize, axis: Axis) -> Option<&MetricsRow> {
        self.rows
            .iter()
            .find(|r| r.fiducial == fiducial && r.axis == axis)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("fiducial,axis,mse_raw,mse_filtered,var_raw,var_filtered\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{:.6e},{:.6e},{:.6e},{:.6e}",
                r.fiducial,
                r.axis.label(),
                r.mse_raw,
                r.mse_filtered,
                r.var_raw,
                r.var_filtered
            );
        }
        out
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "burnout: {} samples, evaluated: {} samples per series",
            self.burnout, self.n_used
        );
        let _ = writeln!(
            out,
            "{:<14} {:>12} {:>12}   {:>12} {:>12}",
            "", "MSE raw", "MSE KF", "var raw", "var KF"
        );
        for r in &self.rows {
            let label = format!("fiducial {}, {}", r.fiducial, r.axis.label().to_uppercase());
            let _ = writeln!(
                out,
                "{:<14} {:>12.3e} {:>12.3e}   {:>12.3e} {:>12.3e}",
                label, r.mse_raw, r.mse_filtered, r.var_raw, r.var_filtered
            );
        }
        out
    }
}

/// Compares the session's raw measurements and the filter output against
/// the session's ground truth.
pub fn build_report(
    session: &SessionData,
    filtered: &[FilteredFrame],
    burnout: usize,
) -> Result<MetricsReport> {
    if !session.has_truth() {
        return Err(Error::NoGroundTruth(
            "session has no truth columns".to_string(),
        ));
    }
    if filtered.len() != session.len() {
        return Err(Error::schema(format!(
            "session has {} steps but filtered stream has {}",
            session.len(),
            filtered.len()
        )));
    }
    for (s, f) in session.steps.iter().zip(filtered) {
        if s.k != f.k {
            return Err(Error::schema(format!(
                "step mismatch: session k = {}, filtered k = {}",
                s.k, f.k
            )));
        }
        if f.estimates.len() != session.fiducial_count {
            return Err(Error::schema(format!(
                "filtered frame {} has {} fiducials, session has {}",
                f.k,
                f.estimates.len(),
                session.fiducial_count
            )));
        }
    }
    if burnout >= session.len() {
        return Err(Error::invalid(format!(
            "burnout of {burnout} leaves no samples out of {}",
            session.len()
        )));
    }

    let mut rows = Vec::with_capacity(session.fiducial_count * 3);
    for fid in 0..session.fiducial_count {
        let tail = |what: &str, step: usize| {
            Error::schema(format!(
                "fiducial {fid} has no {what} at step {}",
                session.steps[step].k
            ))
        };
        let truth = session.truth_series(fid).expect("checked by has_truth");
        let mut raw = Vec::with_capacity(session.len());
        let mut refined = Vec::with_capacity(session.len());
        for (i, (s, f)) in session.steps.iter().zip(filtered).enumerate() {
            // the burnout window may legitimately contain gaps
            let m = s.readings[fid].measured;
            let e = f.estimates[fid].map(|e| e.refined);
            if i >= burnout {
                raw.push(m.ok_or_else(|| tail("measurement", i))?);
                refined.push(e.ok_or_else(|| tail("estimate", i))?);
            } else {
                raw.push(m.unwrap_or_default());
                refined.push(e.unwrap_or_default());
            }
        }
        for axis in Axis::ALL {
            let a = axis.index();
            let t: Vec<f64> = truth.iter().map(|v| v.axis(a)).collect();
            let r: Vec<f64> = raw.iter().map(|v| v.axis(a)).collect();
            let f: Vec<f64> = refined.iter().map(|v| v.axis(a)).collect();
            rows.push(MetricsRow {
                fiducial: fid,
                axis,
                mse_raw: mse(&r, &t, burnout)?,
                mse_filtered: mse(&f, &t, burnout)?,
                var_raw: error_variance(&r, &t, burnout)?,
                var_filtered: error_variance(&f, &t, burnout)?,
            });
        }
    }
    Ok(MetricsReport {
        burnout,
        n_used: session.len() - burnout,
        rows,
    })
}
