use std::fmt;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use fidtrack_core::bank::{throughput_bench, TrackerBank};
use fidtrack_core::io::{self, format_f64, ConfigFile, FilteredRecording};
use fidtrack_core::metrics::build_report;
use fidtrack_core::sim::{pairwise_distances, simulate_session};
use fidtrack_core::{Error, SessionData, Vec3};

use crate::svg::{self, Series};
use crate::{BenchArgs, CommonArgs, EvaluateArgs, FilterArgs, Format, ReportArgs, SimulateArgs};

/// Built-in configuration used when `--config` is not given.
pub const DEFAULT_CONFIG: &str = include_str!("default_config.json");

pub const MIN_BENCH_FRAMES: usize = 10_000;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(e) if e.is_io() => 2,
            CliError::Core(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => f.write_str(msg),
            CliError::Core(e) => e.fmt(f),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

type CliResult<T = ()> = Result<T, CliError>;

fn load_config(common: &CommonArgs) -> CliResult<ConfigFile> {
    Ok(match &common.config {
        Some(path) => io::read_config(path)?,
        None => ConfigFile::from_json(DEFAULT_CONFIG)?,
    })
}

fn write_file(path: &Path, contents: &str) -> CliResult {
    fs::write(path, contents).map_err(|e| {
        CliError::Core(Error::Io {
            path: path.to_path_buf(),
            source: e,
        })
    })
}

fn emit(out: Option<&Path>, contents: &str) -> CliResult {
    match out {
        Some(path) => write_file(path, contents),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

pub fn simulate(common: &CommonArgs, args: &SimulateArgs) -> CliResult {
    let mut sim = load_config(common)?.sim;
    if let Some(seed) = args.seed {
        sim.seed = seed;
    }
    if let Some(d) = args.duration {
        sim.duration = d;
    }
    if let Some(fps) = args.fps {
        sim.fps = fps;
    }
    let session = simulate_session(&sim)?;
    io::write_session(&session, &args.out)?;

    println!(
        "wrote {} frames x {} fiducials to {}",
        session.len(),
        session.fiducial_count,
        args.out.display()
    );
    match pairwise_distances(&sim.fiducial_initials) {
        Ok(d) => {
            let list: Vec<String> = d.iter().map(|v| format!("{v:.2}")).collect();
            println!("consecutive-pair distances (mm): {}", list.join(", "));
        }
        Err(_) => println!("consecutive-pair distances (mm): n/a (single fiducial)"),
    }
    let (std, n) = noise_summary(&session);
    println!(
        "measurement noise std (mm): x {:.4}, y {:.4}, z {:.4} over {n} unbiased samples",
        std.x, std.y, std.z
    );
    Ok(())
}

/// Per-axis sample standard deviation of measured − truth, bias segments excluded.
fn noise_summary(session: &SessionData) -> (Vec3, usize) {
    let errors: Vec<Vec3> = session
        .steps
        .iter()
        .flat_map(|s| &s.readings)
        .filter(|r| !r.occluded)
        .filter_map(|r| Some(r.measured? - r.truth?))
        .collect();
    let n = errors.len();
    if n < 2 {
        return (Vec3::ZERO, n);
    }
    let mean = errors.iter().fold(Vec3::ZERO, |acc, e| acc + *e).scale(1.0 / n as f64);
    let var = errors.iter().fold(Vec3::ZERO, |acc, e| {
        let d = *e - mean;
        acc + Vec3::new(d.x * d.x, d.y * d.y, d.z * d.z)
    });
    let var = var.scale(1.0 / (n - 1) as f64);
    (Vec3::new(var.x.sqrt(), var.y.sqrt(), var.z.sqrt()), n)
}

pub fn filter(common: &CommonArgs, args: &FilterArgs) -> CliResult {
    let mut section = load_config(common)?.filter;
    if let Some(g) = args.gate {
        section.gate_threshold = g;
    }
    section.validate()?;
    let session = io::read_session(&args.input)?;
    if (section.dt_s - session.dt).abs() > 1e-12 {
        eprintln!(
            "fidtrack: warning: using the session's frame interval {} s instead of the configured {} s",
            session.dt, section.dt_s
        );
    }
    let frames =
        TrackerBank::filter_session(&session, section.filter_config(session.dt)?, section.gate())?;
    let flagged: Vec<usize> = (0..session.fiducial_count)
        .map(|fid| {
            frames
                .iter()
                .filter(|f| f.estimates[fid].is_some_and(|e| e.occluded_suspect))
                .count()
        })
        .collect();
    let recording = FilteredRecording::new(&session, frames)?;
    io::write_filtered(&recording, &args.out)?;

    println!(
        "filtered {} frames x {} fiducials into {}",
        session.len(),
        session.fiducial_count,
        args.out.display()
    );
    let list: Vec<String> = flagged
        .iter()
        .enumerate()
        .map(|(fid, n)| format!("{fid}: {n}"))
        .collect();
    println!("frames flagged as suspected occlusion per fiducial: {}", list.join(", "));
    Ok(())
}

pub fn evaluate(common: &CommonArgs, args: &EvaluateArgs) -> CliResult {
    if args.format == Format::Svg {
        return Err(CliError::Usage(
            "evaluate prints `table` or `csv`; charts come from `report --format svg`".into(),
        ));
    }
    let cfg = load_config(common)?;
    let session = io::read_session(&args.truth)?;
    if !session.has_truth() {
        return Err(Error::NoGroundTruth(format!("{} has no truth columns", args.truth.display())).into());
    }
    let estimates = io::read_estimates(&args.filtered)?;
    if estimates.dt != session.dt {
        return Err(Error::Schema(format!(
            "frame interval differs: {} s in {}, {} s in {}",
            session.dt,
            args.truth.display(),
            estimates.dt,
            args.filtered.display()
        ))
        .into());
    }
    if estimates.fiducial_count != session.fiducial_count {
        return Err(Error::Schema(format!(
            "{} fiducials in {}, {} in {}",
            session.fiducial_count,
            args.truth.display(),
            estimates.fiducial_count,
            args.filtered.display()
        ))
        .into());
    }
    let burnout = args.burnout.unwrap_or(cfg.filter.burnout);
    let report = build_report(&session, &estimates.frames, burnout)?;
    match args.format {
        Format::Csv => print!("{}", report.to_csv()),
        _ => print!("{}", report.to_table()),
    }
    if let Some(out) = &args.out {
        write_file(out, &report.to_csv())?;
    }
    Ok(())
}

fn axis_value(v: Option<Vec3>, axis: usize) -> Option<f64> {
    v.map(|v| v.axis(axis))
}

fn csv_field(v: Option<f64>) -> String {
    v.map(format_f64).unwrap_or_default()
}

/// `(k, truth, measured, refined)` for one axis of one fiducial.
type SeriesRow = (u64, Option<f64>, Option<f64>, Option<f64>);

pub fn report(args: &ReportArgs) -> CliResult {
    if args.format == Format::Table {
        return Err(CliError::Usage("report writes `csv` or `svg`".into()));
    }
    let rec = io::read_filtered(&args.filtered)?;
    if args.fiducial >= rec.fiducial_count {
        return Err(CliError::Usage(format!(
            "fiducial {} does not exist; {} has fiducials 0..={}",
            args.fiducial,
            args.filtered.display(),
            rec.fiducial_count - 1
        )));
    }
    let truth = match &args.truth {
        Some(path) => {
            let session = io::read_session(path)?;
            let series = session.truth_series(args.fiducial).ok_or_else(|| {
                Error::NoGroundTruth(format!("{} has no truth columns", path.display()))
            })?;
            let aligned = session.len() == rec.frames.len()
                && session.steps.iter().zip(&rec.frames).all(|(s, f)| s.k == f.k);
            if !aligned {
                return Err(Error::Schema(format!(
                    "{} and {} cover different frames",
                    path.display(),
                    args.filtered.display()
                ))
                .into());
            }
            Some(series)
        }
        None => None,
    };

    let n = rec.frames.len();
    let start = match args.last {
        Some(0) => return Err(CliError::Usage("--last must be at least 1".into())),
        Some(last) if last > n => {
            eprintln!("fidtrack: warning: --last {last} exceeds the {n} available frames; showing all of them");
            0
        }
        Some(last) => n - last,
        None => 0,
    };
    let (fid, axis) = (args.fiducial, args.axis.index());
    let rows: Vec<SeriesRow> = (start..n)
        .map(|i| {
            let frame = &rec.frames[i];
            (
                frame.k,
                truth.as_ref().map(|t| t[i].axis(axis)),
                axis_value(rec.measured[i][fid], axis),
                axis_value(frame.estimates[fid].map(|e| e.refined), axis),
            )
        })
        .collect();

    let contents = match args.format {
        Format::Svg => {
            let mut series = Vec::new();
            if truth.is_some() {
                series.push(Series::new("truth", "#2ca02c", rows.iter().map(|r| (r.0 as f64, r.1))));
            }
            series.push(Series::new("measured", "#1f77b4", rows.iter().map(|r| (r.0 as f64, r.2))));
            series.push(Series::new("refined", "#d62728", rows.iter().map(|r| (r.0 as f64, r.3))));
            let title = format!("fiducial {fid}, {} axis", args.axis.label());
            svg::line_chart(&title, "frame k", &format!("{} (mm)", args.axis.label()), &series)
        }
        _ => {
            let mut out = String::new();
            out.push_str(if truth.is_some() { "k,truth,measured,refined\n" } else { "k,measured,refined\n" });
            for (k, t, m, r) in &rows {
                let _ = write!(out, "{k},");
                if truth.is_some() {
                    let _ = write!(out, "{},", csv_field(*t));
                }
                let _ = writeln!(out, "{},{}", csv_field(*m), csv_field(*r));
            }
            out
        }
    };
    emit(args.out.as_deref(), &contents)
}

pub fn bench(common: &CommonArgs, args: &BenchArgs) -> CliResult {
    if args.frames < MIN_BENCH_FRAMES {
        return Err(CliError::Usage(format!(
            "--frames must be at least {MIN_BENCH_FRAMES}, got {}",
            args.frames
        )));
    }
    let cfg = load_config(common)?;
    let mut sim = cfg.sim;
    sim.duration = args.frames as f64 / sim.fps;
    let session = simulate_session(&sim)?;
    let frames: Vec<_> = session.frames().take(args.frames).collect();
    let mut bank = TrackerBank::new(
        session.fiducial_count,
        cfg.filter.filter_config(session.dt)?,
        cfg.filter.gate(),
    )?;
    let rate = throughput_bench(&mut bank, &frames)?;
    println!(
        "{} frames x {} fiducials: {:.0} fiducial-updates/s, {:.1} ns per update (single thread)",
        frames.len(),
        session.fiducial_count,
        rate,
        1e9 / rate
    );
    Ok(())
}
