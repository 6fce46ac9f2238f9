use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use crate::aging::{
    self, coherence_time, cubic_trend, d10_vs_azimuth, expected_rate, temporal_correlation,
    write_gamma_csv, write_profile_csv,
};
use crate::chanmodel::{self, read_trace, write_trace, ChannelTrace, ScenarioConfig};
use crate::detect::{self, evaluate_series, summarize, DelayMode};
use crate::overhead::{overhead_curve, write_overhead_csv, OverheadModel};

use super::plot::{render_svg, PlotMode};
use super::{
    AgingArgs, CliError, CoherenceArgs, D10Args, GenerateArgs, OverheadArgs, PlotArgs, RunManifest,
    SumrateArgs,
};

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn load_trace(path: &Path) -> Result<ChannelTrace, CliError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    read_trace(BufReader::new(file)).map_err(|e| io_err(path, e))
}

/// Renders into memory first so a failed command never leaves a partial file.
fn write_output(
    path: &Path,
    render: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>,
) -> Result<(), CliError> {
    let mut buf = Vec::new();
    render(&mut buf).map_err(|e| io_err(path, e))?;
    fs::write(path, buf).map_err(|e| io_err(path, e))
}

fn finish(mut manifest: RunManifest, started: Instant, primary: &Path) -> Result<(), CliError> {
    manifest.wall_clock_seconds = started.elapsed().as_secs_f64();
    manifest.write_for(primary)
}

pub(super) fn generate(args: &GenerateArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let text = fs::read_to_string(&args.config).map_err(|e| io_err(&args.config, e))?;
    let config: ScenarioConfig = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("{}: invalid config: {e}", args.config.display())))?;
    config.validate()?;
    let raw = chanmodel::generate(&config)?;
    let trace = if args.no_normalize {
        raw
    } else {
        chanmodel::normalize(&raw)?
    };

    let file = File::create(&args.out).map_err(|e| io_err(&args.out, e))?;
    let mut sink = BufWriter::new(file);
    write_trace(&trace, &mut sink).map_err(|e| io_err(&args.out, e))?;
    sink.flush().map_err(|e| io_err(&args.out, e))?;

    let mut manifest = RunManifest::new(
        "generate",
        serde_json::json!({ "args": args, "scenario": config }),
    );
    manifest.inputs = vec![args.config.clone()];
    manifest.outputs = vec![args.out.clone()];
    manifest.rng_seed = Some(config.rng_seed);
    finish(manifest, started, &args.out)
}

pub(super) fn sumrate(args: &SumrateArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let trace = load_trace(&args.trace)?;
    let mode = if args.exact_delta {
        DelayMode::Exact
    } else {
        DelayMode::MinOneSample
    };
    let series = evaluate_series(&trace, args.decoder, args.snr_db, args.delta_samples, mode)?;
    write_output(&args.out, |w| detect::write_series_csv(&series, w))?;

    let mut outputs = vec![args.out.clone()];
    if args.summary_out.is_some() || args.cdf_out.is_some() {
        let summary = summarize(&series, args.cdf_bins)?;
        if let Some(path) = &args.summary_out {
            write_output(path, |w| detect::write_summary_csv(&series, &summary, w))?;
            outputs.push(path.clone());
        }
        if let Some(path) = &args.cdf_out {
            write_output(path, |w| detect::write_cdf_csv(&summary.cdf, w))?;
            outputs.push(path.clone());
        }
    }

    let mut manifest = RunManifest::new("sumrate", args);
    manifest.inputs = vec![args.trace.clone()];
    manifest.outputs = outputs;
    finish(manifest, started, &args.out)
}

pub(super) fn aging(args: &AgingArgs) -> Result<(), CliError> {
    let started = Instant::now();
    if args.max_delta == 0 {
        return Err(CliError::Usage("--max-delta must be >= 1".into()));
    }
    let trace = load_trace(&args.trace)?;
    let deltas: Vec<usize> = (1..=args.max_delta).collect();
    let curves = args
        .decoder
        .kinds()
        .into_iter()
        .map(|kind| expected_rate(&trace, kind, args.snr_db, &deltas))
        .collect::<Result<Vec<_>, _>>()?;
    write_output(&args.out, |w| write_gamma_csv(&curves, w))?;

    let mut manifest = RunManifest::new("aging", args);
    manifest.inputs = vec![args.trace.clone()];
    manifest.outputs = vec![args.out.clone()];
    finish(manifest, started, &args.out)
}

pub(super) fn coherence(args: &CoherenceArgs) -> Result<(), CliError> {
    let started = Instant::now();
    if !(args.threshold > 0.0 && args.threshold < 1.0) {
        return Err(CliError::Usage(format!(
            "--threshold must be in (0, 1), got {}",
            args.threshold
        )));
    }
    let trace = load_trace(&args.trace)?;
    let max_lag = args.max_lag.unwrap_or(trace.dims().snapshots - 1);
    let profile = temporal_correlation(&trace, max_lag)?;
    let tc = coherence_time(&profile, args.threshold);
    write_output(&args.out, |w| {
        writeln!(w, "threshold,coherence_time_ms,no_crossing")?;
        writeln!(
            w,
            "{},{},{}",
            args.threshold,
            aging::seconds_to_ms(tc.seconds),
            !tc.crossed
        )
    })?;
    let mut outputs = vec![args.out.clone()];
    if let Some(path) = &args.profile_out {
        write_output(path, |w| write_profile_csv(&profile, w))?;
        outputs.push(path.clone());
    }

    let mut manifest = RunManifest::new("coherence", args);
    manifest.inputs = vec![args.trace.clone()];
    manifest.outputs = outputs;
    finish(manifest, started, &args.out)
}

pub(super) fn d10(args: &D10Args) -> Result<(), CliError> {
    let started = Instant::now();
    let trace = load_trace(&args.trace)?;
    let points = d10_vs_azimuth(&trace, args.elevation_rows, &args.azimuth_sizes, args.speed)?;

    let cols = aging::azimuth_columns(&trace, args.elevation_rows)?;
    let mut rates = Vec::with_capacity(points.len());
    for p in &points {
        let antennas = aging::leftmost_columns(args.elevation_rows, cols, p.m_azimuth)?;
        let sub = chanmodel::normalize(&trace.select_antennas(&antennas)?)?;
        let series = evaluate_series(&sub, args.decoder, args.snr_db, 0, DelayMode::MinOneSample)?;
        rates.push(summarize(&series, detect::DEFAULT_CDF_BINS)?.median_sum_rate);
    }
    write_output(&args.out, |w| {
        writeln!(w, "m_azimuth,d10_wavelengths,median_rate")?;
        for (p, r) in points.iter().zip(&rates) {
            writeln!(w, "{},{},{}", p.m_azimuth, p.distance_wavelengths, r)?;
        }
        Ok(())
    })?;
    let mut outputs = vec![args.out.clone()];

    if let Some(path) = &args.trend_out {
        let d10_pts: Vec<(f64, f64)> = points
            .iter()
            .map(|p| (p.m_azimuth as f64, p.distance_wavelengths))
            .collect();
        if d10_pts.iter().any(|p| !p.1.is_finite()) {
            return Err(CliError::Usage(
                "cannot fit a trend: some sub-arrays never reach 10% decorrelation".into(),
            ));
        }
        let rate_pts: Vec<(f64, f64)> = points
            .iter()
            .zip(&rates)
            .map(|(p, &r)| (p.m_azimuth as f64, r))
            .collect();
        let d10_curve = cubic_trend(&d10_pts, args.trend_resolution)
            .map_err(|e| CliError::Usage(e.to_string()))?;
        let rate_curve = cubic_trend(&rate_pts, args.trend_resolution)
            .map_err(|e| CliError::Usage(e.to_string()))?;
        write_output(path, |w| {
            writeln!(w, "m_azimuth,d10_trend,rate_trend")?;
            for ((x, d), (_, r)) in d10_curve.iter().zip(&rate_curve) {
                writeln!(w, "{x},{d},{r}")?;
            }
            Ok(())
        })?;
        outputs.push(path.clone());
    }

    let mut manifest = RunManifest::new("d10", args);
    manifest.inputs = vec![args.trace.clone()];
    manifest.outputs = outputs;
    finish(manifest, started, &args.out)
}

fn read_d10_table(path: &Path) -> Result<Vec<(usize, f64)>, CliError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    let headers = reader.headers().map_err(|e| io_err(path, e))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Usage(format!("{}: missing column `{name}`", path.display())))
    };
    let (m_col, d_col) = (col("m_azimuth")?, col("d10_wavelengths")?);
    let mut table = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| io_err(path, e))?;
        let bad = || CliError::Usage(format!("{}: malformed row {}", path.display(), i + 1));
        let m = record
            .get(m_col)
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(bad)?;
        let d = record
            .get(d_col)
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(bad)?;
        table.push((m, d));
    }
    Ok(table)
}

pub(super) fn overhead(args: &OverheadArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let model = OverheadModel {
        coherence_bandwidth: args.bc_hz,
        subcarrier_bandwidth: args.bs_hz,
        symbol_duration: args.ts_us * 1e-6,
        system_subcarriers: args.subcarriers,
        users_to_train: args.users,
        elevation_rows: args.elevation_rows,
        tc_reference: args.tc_ref_ms * 1e-3,
        v_reference: args.v_ref,
        coherence_time_override: args.tc_ms.map(|ms| ms * 1e-3),
    };
    let table = args.d10_table.as_deref().map(read_d10_table).transpose()?;
    let points = overhead_curve(
        &model,
        &args.velocities,
        &args.azimuth_sizes,
        table.as_deref(),
        args.wavelength,
    )?;
    write_output(&args.out, |w| write_overhead_csv(&points, w))?;

    let mut manifest = RunManifest::new(
        "overhead",
        serde_json::json!({ "args": args, "model": model }),
    );
    manifest.inputs = args.d10_table.iter().cloned().collect();
    manifest.outputs = vec![args.out.clone()];
    finish(manifest, started, &args.out)
}

pub(super) fn plot(args: &PlotArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let mut reader = csv::Reader::from_path(&args.csv).map_err(|e| io_err(&args.csv, e))?;
    let headers = reader
        .headers()
        .map_err(|e| CliError::Usage(format!("malformed CSV: {e}")))?
        .clone();
    let find = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| {
            CliError::Usage(format!("unknown column `{name}` in {}", args.csv.display()))
        })
    };
    let y_cols = args
        .y
        .iter()
        .map(|n| find(n))
        .collect::<Result<Vec<_>, _>>()?;
    let x_col = match (&args.x, args.cdf) {
        (_, true) => None,
        (Some(x), false) => Some(find(x)?),
        (None, false) => {
            return Err(CliError::Usage(
                "--x is required unless --cdf is given".into(),
            ))
        }
    };

    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::Usage(format!("malformed CSV: {e}")))?;
        if record.len() != headers.len() {
            return Err(CliError::Usage(format!(
                "malformed CSV: row {} has {} fields",
                i + 1,
                record.len()
            )));
        }
        let mut row = vec![f64::NAN; headers.len()];
        for &c in y_cols.iter().chain(x_col.as_ref()) {
            row[c] = record[c].trim().parse::<f64>().map_err(|_| {
                CliError::Usage(format!(
                    "malformed CSV: row {} column `{}` is not a number",
                    i + 1,
                    &headers[c]
                ))
            })?;
        }
        rows.push(row);
    }
    if rows.len() < 2 && !args.cdf {
        return Err(CliError::Usage("need at least 2 data rows to plot".into()));
    }
    if rows.is_empty() {
        return Err(CliError::Usage("CSV has no data rows".into()));
    }

    let series: Vec<(String, Vec<(f64, f64)>)> = y_cols
        .iter()
        .zip(&args.y)
        .map(|(&c, name)| {
            let pts = rows
                .iter()
                .map(|r| (x_col.map_or(0.0, |x| r[x]), r[c]))
                .collect::<Vec<_>>();
            (name.clone(), pts)
        })
        .collect();
    let mode = if args.cdf {
        PlotMode::Cdf
    } else {
        PlotMode::Line
    };
    let x_label = if args.cdf {
        args.y.join(", ")
    } else {
        args.x.clone().unwrap_or_default()
    };
    let svg = render_svg(&series, mode, args.title.as_deref(), &x_label);
    write_output(&args.out, |w| w.write_all(svg.as_bytes()))?;

    let mut manifest = RunManifest::new("plot", args);
    manifest.inputs = vec![args.csv.clone()];
    manifest.outputs = vec![args.out.clone()];
    finish(manifest, started, &args.out)
}
