//! Filter output files.
//!
//! ```text
//! # fidtrack-filtered 1.0
//! # dt_s=5.0000000000000001e-3
//! # fiducials=4
//! k,t_s,fiducial_id,meas_x,meas_y,meas_z,refined_x,refined_y,refined_z,nis,occluded_suspect,predicted_only
//! ```
//!
//! Fiducials that are still idle have empty `refined_*`, `nis` and flag
//! fields; dropped measurements have empty `meas_*` fields.

use std::fmt::Write as _;
use std::path::Path;

use super::session::{optional_vec3, parse_vec3};
use super::{data_rows, format_f64, parse_error, parse_finite, parse_flag, parse_int, Preamble};
use crate::bank::{FiducialEstimate, FilteredFrame};
use crate::error::{Error, Result};
use crate::linalg::Vec3;
use crate::session::SessionData;

pub const FILTERED_MAGIC: &str = "fidtrack-filtered";
pub const FILTERED_VERSION: &str = "1.0";

const COLUMNS: &[&str] = &[
    "k",
    "t_s",
    "fiducial_id",
    "meas_x",
    "meas_y",
    "meas_z",
    "refined_x",
    "refined_y",
    "refined_z",
    "nis",
    "occluded_suspect",
    "predicted_only",
];

/// Filter output aligned with the measurements it was computed from.
#[derive(Clone, Debug, PartialEq)]
pub struct FilteredRecording {
    pub dt: f64,
    pub fiducial_count: usize,
    pub frames: Vec<FilteredFrame>,
    /// `measured[i][fid]` belongs to `frames[i]`.
    pub measured: Vec<Vec<Option<Vec3>>>,
}

impl FilteredRecording {
    pub fn new(session: &SessionData, frames: Vec<FilteredFrame>) -> Result<Self> {
        if frames.len() != session.len() {
            return Err(Error::schema(format!(
                "{} filtered frames for {} session steps",
                frames.len(),
                session.len()
            )));
        }
        Ok(Self {
            dt: session.dt,
            fiducial_count: session.fiducial_count,
            measured: session
                .steps
                .iter()
                .map(|s| s.readings.iter().map(|r| r.measured).collect())
                .collect(),
            frames,
        })
    }

    /// Treats a session's raw measurements as if they were filter output,
    /// so unfiltered data can be scored by the same tools.
    pub fn from_measurements(session: &SessionData) -> Self {
        let frames = session
            .steps
            .iter()
            .map(|s| FilteredFrame {
                k: s.k,
                t: s.t,
                estimates: s
                    .readings
                    .iter()
                    .map(|r| {
                        r.measured.map(|m| FiducialEstimate {
                            refined: m,
                            nis: 0.0,
                            occluded_suspect: false,
                            predicted_only: false,
                        })
                    })
                    .collect(),
            })
            .collect();
        Self::new(session, frames).expect("one frame per step")
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# {FILTERED_MAGIC} {FILTERED_VERSION}");
        let _ = writeln!(out, "# dt_s={}", format_f64(self.dt));
        let _ = writeln!(out, "# fiducials={}", self.fiducial_count);
        out.push_str(&COLUMNS.join(","));
        out.push('\n');
        for (frame, meas) in self.frames.iter().zip(&self.measured) {
            for (id, (est, m)) in frame.estimates.iter().zip(meas).enumerate() {
                let _ = write!(
                    out,
                    "{},{},{},{},",
                    frame.k,
                    format_f64(frame.t),
                    id,
                    optional_vec3(*m)
                );
                match est {
                    Some(e) => {
                        let _ = writeln!(
                            out,
                            "{},{},{},{}",
                            optional_vec3(Some(e.refined)),
                            format_f64(e.nis),
                            u8::from(e.occluded_suspect),
                            u8::from(e.predicted_only)
                        );
                    }
                    None => out.push_str(",,,,,\n"),
                }
            }
        }
        out
    }
}

pub fn write_filtered(recording: &FilteredRecording, path: impl AsRef<Path>) -> Result<()> {
    super::write_text(path.as_ref(), &recording.to_csv_string())
}

pub fn read_filtered(path: impl AsRef<Path>) -> Result<FilteredRecording> {
    let path = path.as_ref();
    let text = super::read_text(path)?;
    parse_filtered(path, &text)
}

/// Reads filter output, or a session file whose measurements then stand in
/// for the estimates (see [`FilteredRecording::from_measurements`]).
pub fn read_estimates(path: impl AsRef<Path>) -> Result<FilteredRecording> {
    let path = path.as_ref();
    let text = super::read_text(path)?;
    if text.starts_with(&format!("# {}", super::session::SESSION_MAGIC)) {
        let session = super::session::parse_session(path, &text)?;
        Ok(FilteredRecording::from_measurements(&session))
    } else {
        parse_filtered(path, &text)
    }
}

pub fn parse_filtered(path: &Path, text: &str) -> Result<FilteredRecording> {
    let pre = Preamble::parse(path, text, FILTERED_MAGIC, FILTERED_VERSION)?;
    let (l, raw) = pre.require(path, "dt_s")?;
    let dt = parse_finite(path, l, "dt_s", raw)?;
    let (l, raw) = pre.require(path, "fiducials")?;
    let fiducial_count: usize = parse_int(path, l, "fiducials", raw)?;
    if fiducial_count == 0 {
        return Err(parse_error(path, l, "fiducials must be >= 1"));
    }
    if pre.columns != COLUMNS {
        return Err(parse_error(
            path,
            pre.lines,
            format!("unexpected columns `{}`", pre.columns.join(",")),
        ));
    }

    let mut frames: Vec<FilteredFrame> = Vec::new();
    let mut measured: Vec<Vec<Option<Vec3>>> = Vec::new();
    for row in data_rows(path, text, pre.lines, COLUMNS.len()) {
        let (line, rec) = row?;
        let f = |i: usize| rec.get(i).unwrap_or("");
        let k: u64 = parse_int(path, line, "k", f(0))?;
        let t = parse_finite(path, line, "t_s", f(1))?;
        let id: usize = parse_int(path, line, "fiducial_id", f(2))?;
        let meas = parse_vec3(path, line, ["meas_x", "meas_y", "meas_z"], [f(3), f(4), f(5)])?;
        let refined = parse_vec3(
            path,
            line,
            ["refined_x", "refined_y", "refined_z"],
            [f(6), f(7), f(8)],
        )?;
        let estimate = match refined {
            None => None,
            Some(refined) => Some(FiducialEstimate {
                refined,
                nis: parse_finite(path, line, "nis", f(9))?,
                occluded_suspect: parse_flag(path, line, "occluded_suspect", f(10))?,
                predicted_only: parse_flag(path, line, "predicted_only", f(11))?,
            }),
        };

        let new_frame = match frames.last() {
            Some(fr) if fr.k == k => false,
            Some(fr) if k < fr.k => {
                return Err(Error::schema(format!(
                    "line {line}: rows must be sorted by (k, fiducial_id)"
                )))
            }
            _ => true,
        };
        if new_frame {
            if let Some(prev) = frames.last() {
                if prev.estimates.len() != fiducial_count {
                    return Err(Error::schema(format!(
                        "frame k = {} lists {} fiducials, expected {fiducial_count}",
                        prev.k,
                        prev.estimates.len()
                    )));
                }
            }
            frames.push(FilteredFrame {
                k,
                t,
                estimates: Vec::with_capacity(fiducial_count),
            });
            measured.push(Vec::with_capacity(fiducial_count));
        }
        let frame = frames.last_mut().expect("frame pushed above");
        if id != frame.estimates.len() || id >= fiducial_count {
            return Err(Error::schema(format!(
                "line {line}: rows must be sorted by (k, fiducial_id); unexpected fiducial {id}"
            )));
        }
        frame.estimates.push(estimate);
        measured.last_mut().expect("pushed with frame").push(meas);
    }
    if let Some(last) = frames.last() {
        if last.estimates.len() != fiducial_count {
            return Err(Error::schema(format!(
                "frame k = {} lists {} fiducials, expected {fiducial_count}",
                last.k,
                last.estimates.len()
            )));
        }
    }
    Ok(FilteredRecording {
        dt,
        fiducial_count,
        frames,
        measured,
    })
}
