//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. The pipeline criteria drive the `fidtrack` binary end to
//! end; the numerical ones call the library directly.

#[path = "../../core/tests/support/oracle.rs"]
mod oracle;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use fidtrack_core::io::{self, ConfigFile, FilteredRecording};
use fidtrack_core::kalman::{self, CovarianceHealth, FilterConfig};
use fidtrack_core::metrics::{error_variance, mse};
use fidtrack_core::sim::{OcclusionBias, DEFAULT_SEED};
use fidtrack_core::{SessionData, Vec3};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Normal};

const SEEDS: std::ops::Range<u64> = DEFAULT_SEED..DEFAULT_SEED + 10;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

type Check = Result<Outcome, String>;

fn fidtrack(args: &[&str]) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_fidtrack"))
        .args(args)
        .output()
        .map_err(|e| format!("cannot run fidtrack: {e}"))?;
    if !out.status.success() {
        return Err(format!(
            "fidtrack {args:?} failed: {}",
            String::from_utf8_lossy(&out.stderr).trim()
        ));
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

fn p(path: &Path) -> &str {
    path.to_str().expect("utf-8 temp path")
}

fn write_config(dir: &Path, name: &str, edit: impl FnOnce(&mut ConfigFile)) -> Result<PathBuf, String> {
    let mut cfg = ConfigFile::default();
    edit(&mut cfg);
    let path = dir.join(name);
    io::write_config(&path, &cfg).map_err(|e| e.to_string())?;
    Ok(path)
}

/// simulate → filter with the given config; returns (session, filtered).
fn pipeline(dir: &Path, tag: &str, config: Option<&Path>, seed: Option<u64>) -> Result<(PathBuf, PathBuf), String> {
    let (sess, filt) = (dir.join(format!("{tag}-session.csv")), dir.join(format!("{tag}-filtered.csv")));
    let mut sim: Vec<String> = Vec::new();
    if let Some(c) = config {
        sim.extend(["--config".into(), p(c).into()]);
    }
    sim.extend(["simulate".into(), "--out".into(), p(&sess).into()]);
    if let Some(seed) = seed {
        sim.extend(["--seed".into(), seed.to_string()]);
    }
    fidtrack(&sim.iter().map(String::as_str).collect::<Vec<_>>())?;
    let mut filter = vec!["filter", p(&sess), "--out", p(&filt)];
    if let Some(c) = config {
        filter.extend(["--config", p(c)]);
    }
    fidtrack(&filter)?;
    Ok((sess, filt))
}

/// Parses the CSV written by `evaluate --out` into
/// `(fiducial, axis, mse_raw, mse_filtered, var_raw, var_filtered)` rows.
fn parse_report(text: &str) -> Result<Vec<(usize, String, [f64; 4])>, String> {
    text.lines()
        .skip(1)
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            let num = |i: usize| f.get(i).and_then(|v| v.parse::<f64>().ok()).ok_or(format!("bad row `{line}`"));
            Ok((
                f[0].parse().map_err(|_| format!("bad row `{line}`"))?,
                f[1].to_string(),
                [num(2)?, num(3)?, num(4)?, num(5)?],
            ))
        })
        .collect()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn std_dev(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt()
}

/// Reports from the ten default-configuration runs, shared by criteria 1 and 2.
struct SeedRuns {
    reports: Vec<Vec<(usize, String, [f64; 4])>>,
    elapsed: Duration,
}

fn seed_runs(dir: &Path) -> Result<SeedRuns, String> {
    let start = Instant::now();
    let mut reports = Vec::new();
    for seed in SEEDS {
        let (sess, filt) = pipeline(dir, &format!("seed{seed}"), None, Some(seed))?;
        let rep = dir.join(format!("seed{seed}-report.csv"));
        fidtrack(&["evaluate", p(&sess), p(&filt), "--format", "csv", "--out", p(&rep)])?;
        reports.push(parse_report(&fs::read_to_string(&rep).map_err(|e| e.to_string())?)?);
    }
    Ok(SeedRuns {
        reports,
        elapsed: start.elapsed(),
    })
}

fn criterion_1(runs: &SeedRuns) -> Check {
    let mut parts = Vec::new();
    let mut pass = runs.elapsed < Duration::from_secs(5);
    for (axis, lo, hi) in [("x", 1.8e-2, 2.6e-2), ("y", 1.8e-2, 2.6e-2), ("z", 3.7e-2, 4.9e-2)] {
        let vals: Vec<f64> = runs
            .reports
            .iter()
            .flatten()
            .filter(|r| r.1 == axis)
            .map(|r| r.2[0])
            .collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        pass &= (lo..=hi).contains(&mean);
        parts.push(format!("{axis} {mean:.3e} in [{lo:.1e}, {hi:.1e}]"));
    }
    Ok(Outcome::new(
        pass,
        format!("mean raw MSE {}; {} runs in {:.2} s (< 5 s)", parts.join(", "), SEEDS.count(), runs.elapsed.as_secs_f64()),
    ))
}

fn criterion_2(runs: &SeedRuns) -> Check {
    let all: Vec<(u64, usize, &str, f64)> = SEEDS
        .zip(&runs.reports)
        .flat_map(|(seed, rep)| rep.iter().map(move |r| (seed, r.0, r.1.as_str(), r.2[1])))
        .collect();
    let worst = all
        .iter()
        .max_by(|a, b| a.3.total_cmp(&b.3))
        .ok_or("no report rows")?;
    let over = all.iter().filter(|r| r.3 > 1e-3).count();
    let mut worst_median = (0usize, "", 0.0f64);
    for fid in 0..runs.reports[0].len() / 3 {
        for axis in ["x", "y", "z"] {
            let m = median(all.iter().filter(|r| r.1 == fid && r.2 == axis).map(|r| r.3).collect());
            if m > worst_median.2 {
                worst_median = (fid, axis, m);
            }
        }
    }
    let pass = over == 0 && worst_median.2 <= 5e-4;
    Ok(Outcome::new(
        pass,
        format!(
            "filtered MSE max {:.3e} (seed {}, fiducial {} {}), {over}/{} entries above 1e-3; worst per-series median across seeds {:.3e} (fiducial {} {}), bound 5e-4",
            worst.3, worst.0, worst.1, worst.2, all.len(), worst_median.2, worst_median.0, worst_median.1
        ),
    ))
}

fn criterion_3(dir: &Path) -> Check {
    let out = fidtrack(&["simulate", "--out", p(&dir.join("geometry.csv"))])?;
    let line = out
        .lines()
        .find(|l| l.starts_with("consecutive-pair distances"))
        .ok_or("no distance line printed")?;
    let printed: Vec<f64> = line
        .split(':')
        .nth(1)
        .ok_or("malformed distance line")?
        .split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    let expected = [481.04, 121.66, 28.28, 382.88];
    let pass = printed.len() == 4 && printed.iter().zip(&expected).all(|(a, b)| (a - b).abs() <= 0.01);
    Ok(Outcome::new(pass, format!("printed {printed:?}, expected {expected:?} ± 0.01 mm")))
}

fn criterion_4() -> Check {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(4);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let (state, z, cfg) = oracle::random_case(&mut rng);
        let out = kalman::step(&state, Some(z), &cfg).map_err(|e| e.to_string())?;
        let want = oracle::oracle_step(&state, z, &cfg);
        let p_got: Vec<f64> = out.state.p.iter().collect();
        let p_want: Vec<f64> = want.p.transpose().iter().copied().collect();
        worst = worst
            .max(oracle::max_rel_err(&out.state.x.0, want.x.as_slice()))
            .max(oracle::max_rel_err(&p_got, &p_want))
            .max(oracle::max_rel_err(&[out.nis], &[want.nis]));
    }
    let elapsed = start.elapsed();
    Ok(Outcome::new(
        worst <= 1e-10 && elapsed < Duration::from_secs(1),
        format!("worst relative error {worst:.2e} (≤ 1e-10) in {:.3} s (< 1 s)", elapsed.as_secs_f64()),
    ))
}

fn criterion_5() -> Check {
    let mut rng = StdRng::seed_from_u64(5);
    let (mut state, _, cfg) = oracle::random_case(&mut rng);
    let truth = state.x.position();
    let (mut worst_sym, mut worst_eig) = (0.0f64, f64::INFINITY);
    for step in 0..10_000 {
        let z = (step % 50 != 0).then(|| {
            truth + Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        state = kalman::step(&state, z, &cfg).map_err(|e| e.to_string())?.state;
        let h = CovarianceHealth::of(&state.p);
        let eig = nalgebra::SymmetricEigen::new(oracle::dense(&state.p)).eigenvalues.min();
        worst_sym = worst_sym.max(h.asymmetry);
        worst_eig = worst_eig.min(eig.min(h.min_eigenvalue));
    }
    Ok(Outcome::new(
        worst_sym <= 1e-9 && worst_eig >= -1e-9,
        format!("10^4 steps: max asymmetry {worst_sym:.2e} (≤ 1e-9), min eigenvalue {worst_eig:.3e} (≥ -1e-9)"),
    ))
}

fn criterion_6(dir: &Path) -> Check {
    let cfg = FilterConfig::default();
    let std = [0.15, 0.15, 0.21];
    let mut rng = StdRng::seed_from_u64(6);
    let normal = Normal::new(0.0, 1.0).map_err(|e| e.to_string())?;
    let mut noisy = |p: Vec3| {
        p + Vec3::new(
            std[0] * normal.sample(&mut rng),
            std[1] * normal.sample(&mut rng),
            std[2] * normal.sample(&mut rng),
        )
    };
    let (mut t, mut v, a) = (Vec3::new(0.0, 0.0, 1230.0), Vec3::new(0.5, -0.2, 0.1), Vec3::splat(0.1));
    let mut state = kalman::init_state(noisy(t), &cfg).map_err(|e| e.to_string())?;
    let mut nis = 0.0;
    for _ in 1..1000 {
        t += v.scale(cfg.dt) + a.scale(cfg.dt * cfg.dt / 2.0);
        v += a.scale(cfg.dt);
        let out = kalman::step(&state, Some(noisy(t)), &cfg).map_err(|e| e.to_string())?;
        nis += out.nis;
        state = out.state;
    }
    let mean_nis = nis / 999.0;

    // identity check on the error series of the first seed run
    let seed = SEEDS.start;
    let session = io::read_session(dir.join(format!("seed{seed}-session.csv"))).map_err(|e| e.to_string())?;
    let filtered = io::read_filtered(dir.join(format!("seed{seed}-filtered.csv"))).map_err(|e| e.to_string())?;
    let worst_identity = identity_residual(&session, &filtered)?;
    Ok(Outcome::new(
        (2.5..=3.5).contains(&mean_nis) && worst_identity <= 1e-12,
        format!("mean NIS {mean_nis:.3} in [2.5, 3.5]; |mse - (var + mean^2)| / mse ≤ {worst_identity:.1e} (≤ 1e-12)"),
    ))
}

fn identity_residual(session: &SessionData, filtered: &FilteredRecording) -> Result<f64, String> {
    let mut worst = 0.0f64;
    for fid in 0..session.fiducial_count {
        let truth = session.truth_series(fid).ok_or("no truth")?;
        for axis in 0..3 {
            let t: Vec<f64> = truth.iter().map(|v| v.axis(axis)).collect();
            let raw: Vec<f64> = filtered.measured.iter().map(|m| m[fid].map_or(0.0, |v| v.axis(axis))).collect();
            let refined: Vec<f64> = filtered
                .frames
                .iter()
                .map(|f| f.estimates[fid].map_or(0.0, |e| e.refined.axis(axis)))
                .collect();
            for series in [&raw, &refined] {
                let m = mse(series, &t, 100).map_err(|e| e.to_string())?;
                let var = error_variance(series, &t, 100).map_err(|e| e.to_string())?;
                let n = (t.len() - 100) as f64;
                let mean = series[100..].iter().zip(&t[100..]).map(|(a, b)| a - b).sum::<f64>() / n;
                worst = worst.max((m - (var + mean * mean)).abs() / m);
            }
        }
    }
    Ok(worst)
}

fn criterion_7(dir: &Path) -> Check {
    let cfg = write_config(dir, "static.json", |c| {
        c.sim.v0 = Vec3::ZERO;
        c.sim.a0 = Vec3::ZERO;
        c.sim.omega = Vec3::ZERO;
    })?;
    let (_, filt) = pipeline(dir, "static", Some(&cfg), None)?;
    let rec = io::read_filtered(&filt).map_err(|e| e.to_string())?;
    let tail = rec.frames.len() - 500;
    let mut worst = (0.0f64, 0usize, 0usize);
    for fid in 0..rec.fiducial_count {
        for axis in 0..3 {
            let raw: Vec<f64> = rec.measured[tail..].iter().filter_map(|m| m[fid]).map(|v| v.axis(axis)).collect();
            let refined: Vec<f64> = rec.frames[tail..]
                .iter()
                .filter_map(|f| f.estimates[fid])
                .map(|e| e.refined.axis(axis))
                .collect();
            let ratio = std_dev(&refined) / std_dev(&raw);
            if ratio > worst.0 {
                worst = (ratio, fid, axis);
            }
        }
    }
    Ok(Outcome::new(
        worst.0 <= 0.2,
        format!(
            "worst filtered/raw std over the last 500 samples {:.3} (fiducial {}, axis {}), bound 0.2",
            worst.0,
            worst.1,
            ["x", "y", "z"][worst.2]
        ),
    ))
}

fn criterion_8(dir: &Path) -> Check {
    const START: u64 = 500;
    const END: u64 = 800;
    const ADAPT: u64 = 100;
    let cfg = write_config(dir, "occlusion.json", |c| {
        c.sim.bias_segments.push(OcclusionBias {
            fiducial_id: 0,
            start_k: START,
            end_k: END,
            offset: Vec3::new(0.0, 0.0, 1.0),
            spike_magnitude: OcclusionBias::default_spike(),
        })
    })?;
    let (sess, filt) = pipeline(dir, "occlusion", Some(&cfg), None)?;
    let rec = io::read_filtered(&filt).map_err(|e| e.to_string())?;
    let truth = io::read_session(&sess)
        .map_err(|e| e.to_string())?
        .truth_series(0)
        .ok_or("occlusion session has no truth")?;
    let first_flag = rec
        .frames
        .iter()
        .find(|f| f.k >= START && f.estimates[0].is_some_and(|e| e.occluded_suspect))
        .map(|f| f.k);
    let detected = first_flag.is_some_and(|k| k <= START + 5);

    // variance of the z error about its own mean: the bias shifts the mean,
    // the ratio measures how much of the measurement noise survives
    let window_var = |from: u64, to: u64| {
        let idx = |k: u64| rec.frames.iter().position(|f| f.k == k).unwrap_or(rec.frames.len());
        let (mut raw, mut refined) = (Vec::new(), Vec::new());
        for i in idx(from)..idx(to) {
            let t = truth[i].z;
            if let (Some(m), Some(e)) = (rec.measured[i][0], rec.frames[i].estimates[0]) {
                raw.push(m.z - t);
                refined.push(e.refined.z - t);
            }
        }
        (std_dev(&refined) / std_dev(&raw)).powi(2)
    };
    let settled = window_var(START + ADAPT, END);
    let whole = window_var(START, END + 1);
    Ok(Outcome::new(
        detected && settled <= 0.2,
        format!(
            "first flag at k = {} (need ≤ {}); z error variance ratio filtered/raw {settled:.3} over k ∈ [{}, {END}) after {ADAPT}-sample adaptation (bound 0.2; {whole:.2} over the whole window)",
            first_flag.map_or("never".to_string(), |k| k.to_string()),
            START + 5,
            START + ADAPT
        ),
    ))
}

fn criterion_9() -> Check {
    let out = fidtrack(&["bench", "--frames", "100000"])?;
    let rate: f64 = out
        .split(':')
        .nth(1)
        .and_then(|s| s.split_whitespace().next())
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| format!("cannot parse bench output `{}`", out.trim()))?;
    Ok(Outcome::new(rate >= 1e5, format!("{rate:.0} fiducial-updates/s single thread (≥ 1e5)")))
}

fn criterion_10(dir: &Path) -> Check {
    let run = |tag: &str| -> Result<Vec<(String, Vec<u8>)>, String> {
        let sub = dir.join(tag);
        fs::create_dir_all(&sub).map_err(|e| e.to_string())?;
        let (sess, filt) = pipeline(&sub, "run", None, Some(7))?;
        let (rep, csv, svg) = (sub.join("report.csv"), sub.join("series.csv"), sub.join("series.svg"));
        fidtrack(&["evaluate", p(&sess), p(&filt), "--out", p(&rep)])?;
        fidtrack(&["report", p(&filt), "--truth", p(&sess), "--last", "200", "--out", p(&csv)])?;
        fidtrack(&["report", p(&filt), "--truth", p(&sess), "--format", "svg", "--out", p(&svg)])?;
        [sess, filt, rep, csv, svg]
            .iter()
            .map(|path| {
                let name = path.file_name().unwrap().to_string_lossy().into_owned();
                fs::read(path).map(|b| (name, b)).map_err(|e| e.to_string())
            })
            .collect()
    };
    let (a, b) = (run("first")?, run("second")?);
    let differing: Vec<&str> = a.iter().zip(&b).filter(|(x, y)| x.1 != y.1).map(|(x, _)| x.0.as_str()).collect();
    Ok(Outcome::new(
        differing.is_empty(),
        if differing.is_empty() {
            format!("{} files byte-identical across two runs", a.len())
        } else {
            format!("files differ: {}", differing.join(", "))
        },
    ))
}

fn main() -> ExitCode {
    let tmp = match tempfile::tempdir() {
        Ok(t) => t,
        Err(e) => {
            eprintln!("cannot create a scratch directory: {e}");
            return ExitCode::FAILURE;
        }
    };
    let dir = tmp.path();
    let runs = seed_runs(dir);

    let results: Vec<(&str, Check)> = vec![
        ("1 raw MSE over 10 seeds", runs.as_ref().map_err(Clone::clone).and_then(criterion_1)),
        ("2 filtered MSE bound", runs.as_ref().map_err(Clone::clone).and_then(criterion_2)),
        ("3 array geometry", criterion_3(dir)),
        ("4 dense-oracle equivalence", criterion_4()),
        ("5 covariance health", criterion_5()),
        ("6 NIS and MSE identity", runs.as_ref().map_err(Clone::clone).and_then(|_| criterion_6(dir))),
        ("7 static marker", criterion_7(dir)),
        ("8 occlusion emulation", criterion_8(dir)),
        ("9 throughput", criterion_9()),
        ("10 determinism", criterion_10(dir)),
    ];

    let mut failed = 0;
    for (name, result) in &results {
        let (pass, detail) = match result {
            Ok(o) => (o.pass, o.detail.as_str()),
            Err(e) => (false, e.as_str()),
        };
        failed += usize::from(!pass);
        println!("{} criterion {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    }
    println!("acceptance: {}/{} criteria passed", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
