//! Session recordings.
//!
//! ```text
//! # fidtrack-session 1.0
//! # dt_s=5.0000000000000001e-3
//! # fiducials=4
//! # seed=42
//! # config={...SimConfig as JSON...}
//! k,t_s,fiducial_id,truth_x,truth_y,truth_z,meas_x,meas_y,meas_z,occluded
//! 0,0.0000000000000000e0,0,-1.8000000000000000e2,...,0
//! ```
//!
//! `seed` and `config` are optional, the three `truth_*` columns may be
//! left out entirely, and a dropped measurement is written as three empty
//! `meas_*` fields. Rows are sorted by `(k, fiducial_id)` and every frame
//! lists every fiducial.

use std::fmt::Write as _;
use std::path::Path;

use super::{data_rows, format_f64, parse_error, parse_finite, parse_flag, parse_int, Preamble};
use crate::error::{Error, Result};
use crate::linalg::Vec3;
use crate::session::{FiducialRecord, SessionData, SessionStep};
use crate::sim::SimConfig;

pub const SESSION_MAGIC: &str = "fidtrack-session";
pub const SESSION_VERSION: &str = "1.0";

const COLUMNS_WITH_TRUTH: &[&str] = &[
    "k", "t_s", "fiducial_id", "truth_x", "truth_y", "truth_z", "meas_x", "meas_y", "meas_z",
    "occluded",
];
const COLUMNS_NO_TRUTH: &[&str] = &[
    "k", "t_s", "fiducial_id", "meas_x", "meas_y", "meas_z", "occluded",
];

/// Allowed mismatch between a row's `t_s` and `k · dt`.
const TIME_TOLERANCE_S: f64 = 1e-9;

pub(crate) fn optional_vec3(v: Option<Vec3>) -> String {
    match v {
        Some(v) => format!("{},{},{}", format_f64(v.x), format_f64(v.y), format_f64(v.z)),
        None => ",,".to_string(),
    }
}

/// Renders a session in the on-disk format.
pub fn session_to_string(session: &SessionData) -> String {
    let with_truth = session.is_empty() || session.has_truth();
    let mut out = String::new();
    let _ = writeln!(out, "# {SESSION_MAGIC} {SESSION_VERSION}");
    let _ = writeln!(out, "# dt_s={}", format_f64(session.dt));
    let _ = writeln!(out, "# fiducials={}", session.fiducial_count);
    if let Some(seed) = session.seed {
        let _ = writeln!(out, "# seed={seed}");
    }
    if let Some(cfg) = &session.config {
        let json = serde_json::to_string(cfg).expect("sim config serialises");
        let _ = writeln!(out, "# config={json}");
    }
    let columns = if with_truth {
        COLUMNS_WITH_TRUTH
    } else {
        COLUMNS_NO_TRUTH
    };
    out.push_str(&columns.join(","));
    out.push('\n');
    for step in &session.steps {
        for (id, r) in step.readings.iter().enumerate() {
            let _ = write!(out, "{},{},{},", step.k, format_f64(step.t), id);
            if with_truth {
                let _ = write!(out, "{},", optional_vec3(r.truth));
            }
            let _ = writeln!(out, "{},{}", optional_vec3(r.measured), u8::from(r.occluded));
        }
    }
    out
}

pub fn write_session(session: &SessionData, path: impl AsRef<Path>) -> Result<()> {
    super::write_text(path.as_ref(), &session_to_string(session))
}

pub fn read_session(path: impl AsRef<Path>) -> Result<SessionData> {
    let path = path.as_ref();
    let text = super::read_text(path)?;
    parse_session(path, &text)
}

pub(crate) fn parse_vec3(
    path: &Path,
    line: usize,
    names: [&str; 3],
    raw: [&str; 3],
) -> Result<Option<Vec3>> {
    if raw.iter().all(|f| f.trim().is_empty()) {
        return Ok(None);
    }
    let mut v = [0.0; 3];
    for i in 0..3 {
        v[i] = parse_finite(path, line, names[i], raw[i])?;
    }
    Ok(Some(Vec3::from(v)))
}

pub fn parse_session(path: &Path, text: &str) -> Result<SessionData> {
    let pre = Preamble::parse(path, text, SESSION_MAGIC, SESSION_VERSION)?;
    let (l, raw) = pre.require(path, "dt_s")?;
    let dt = parse_finite(path, l, "dt_s", raw)?;
    if dt <= 0.0 {
        return Err(parse_error(path, l, "dt_s must be > 0"));
    }
    let (l, raw) = pre.require(path, "fiducials")?;
    let fiducial_count: usize = parse_int(path, l, "fiducials", raw)?;
    if fiducial_count == 0 {
        return Err(parse_error(path, l, "fiducials must be >= 1"));
    }
    let seed = match pre.get("seed") {
        Some((l, raw)) => Some(parse_int::<u64>(path, l, "seed", raw)?),
        None => None,
    };
    let config = match pre.get("config") {
        Some((l, raw)) => Some(
            serde_json::from_str::<SimConfig>(raw)
                .map_err(|e| parse_error(path, l, format!("config: {e}")))?,
        ),
        None => None,
    };

    let with_truth = if pre.columns == COLUMNS_WITH_TRUTH {
        true
    } else if pre.columns == COLUMNS_NO_TRUTH {
        false
    } else {
        return Err(parse_error(
            path,
            pre.lines,
            format!("unexpected columns `{}`", pre.columns.join(",")),
        ));
    };

    let mut steps: Vec<SessionStep> = Vec::new();
    let n_columns = pre.columns.len();
    for row in data_rows(path, text, pre.lines, n_columns) {
        let (line, rec) = row?;
        let f = |i: usize| rec.get(i).unwrap_or("");
        let k: u64 = parse_int(path, line, "k", f(0))?;
        let t = parse_finite(path, line, "t_s", f(1))?;
        let id: usize = parse_int(path, line, "fiducial_id", f(2))?;
        let (truth, m0) = if with_truth {
            let truth = parse_vec3(path, line, ["truth_x", "truth_y", "truth_z"], [f(3), f(4), f(5)])?;
            if truth.is_none() {
                return Err(parse_error(path, line, "truth columns present but empty"));
            }
            (truth, 6)
        } else {
            (None, 3)
        };
        let measured = parse_vec3(
            path,
            line,
            ["meas_x", "meas_y", "meas_z"],
            [f(m0), f(m0 + 1), f(m0 + 2)],
        )?;
        let occluded = parse_flag(path, line, "occluded", f(m0 + 3))?;

        if (t - k as f64 * dt).abs() > TIME_TOLERANCE_S + 1e-12 * t.abs() {
            return Err(Error::schema(format!(
                "line {line}: t_s = {t} inconsistent with k = {k} and dt = {dt}"
            )));
        }
        let record = FiducialRecord {
            truth,
            measured,
            occluded,
        };
        match steps.last_mut() {
            Some(step) if step.k == k => {
                if id != step.readings.len() {
                    return Err(Error::schema(format!(
                        "line {line}: rows must be sorted by (k, fiducial_id); expected fiducial {} at k = {k}, found {id}",
                        step.readings.len()
                    )));
                }
                step.readings.push(record);
            }
            last => {
                if let Some(prev) = last {
                    if k < prev.k {
                        return Err(Error::schema(format!(
                            "line {line}: rows must be sorted by (k, fiducial_id); k = {k} after k = {}",
                            prev.k
                        )));
                    }
                    if prev.readings.len() != fiducial_count {
                        return Err(Error::schema(format!(
                            "frame k = {} lists {} fiducials, expected {fiducial_count}",
                            prev.k,
                            prev.readings.len()
                        )));
                    }
                }
                if id != 0 {
                    return Err(Error::schema(format!(
                        "line {line}: frame k = {k} must start at fiducial 0, found {id}"
                    )));
                }
                steps.push(SessionStep {
                    k,
                    t,
                    readings: vec![record],
                });
            }
        }
        if id >= fiducial_count {
            return Err(Error::schema(format!(
                "line {line}: fiducial_id {id} out of range for {fiducial_count} fiducials"
            )));
        }
    }
    if let Some(last) = steps.last() {
        if last.readings.len() != fiducial_count {
            return Err(Error::schema(format!(
                "frame k = {} lists {} fiducials, expected {fiducial_count}",
                last.k,
                last.readings.len()
            )));
        }
    }

    Ok(SessionData {
        dt,
        fiducial_count,
        seed,
        config,
        steps,
    })
}
