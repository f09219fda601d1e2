use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use mspca::dataset::{load_nab_csv, load_nab_labels, load_yahoo_csv, write_yahoo_csv};
use mspca::pipeline::{evaluate_record, method_name};
use mspca::{
    generate_synthetic, score_values, AggregationRule, Basis, BenchmarkReport, Error, Mode,
    PipelineConfig, ScoredSeries, SeriesRecord, SynthSpec,
};
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::{write_atomic, write_output, CliError, CliResult};

fn load_synth(path: &Path, seed: Option<u64>) -> CliResult<SeriesRecord> {
    let mut spec = SynthSpec::load(path)?;
    if let Some(s) = seed {
        spec.seed = s;
    }
    Ok(generate_synthetic(&spec)?)
}

/// Values to score: a synthetic spec, a Yahoo-format file, or a bare
/// `timestamp,value` file.
fn load_score_input(cfg: &RunConfig) -> CliResult<Vec<f64>> {
    let record = match (&cfg.synth, &cfg.input) {
        (Some(spec), _) => load_synth(spec, cfg.seed)?,
        (None, Some(path)) => match load_yahoo_csv(path) {
            Ok(r) => r,
            Err(yahoo_err @ Error::Format(_)) => load_nab_csv(path, &[]).map_err(|_| yahoo_err)?.0,
            Err(e) => return Err(e.into()),
        },
        (None, None) => return Err(CliError::Usage("score needs --input or --synth".into())),
    };
    if record.is_empty() {
        return Err(Error::Empty("input series has no samples".into()).into());
    }
    Ok(record.values)
}

/// Scores CSV: `t,alpha_1..alpha_J,final_score`, 17 significant digits.
pub fn write_scores(out: &mut dyn Write, scored: &ScoredSeries) -> CliResult<()> {
    let io = |e| CliError::io("writing scores", e);
    let dim = scored.alphas.first().map_or(0, Vec::len);
    let mut line = String::from("t");
    for j in 1..=dim {
        write!(line, ",alpha_{j}").unwrap();
    }
    line.push_str(",final_score\n");
    out.write_all(line.as_bytes()).map_err(io)?;
    for (t, (alpha, fin)) in scored.alphas.iter().zip(&scored.final_scores).enumerate() {
        line.clear();
        write!(line, "{t}").unwrap();
        for a in alpha {
            write!(line, ",{a:.16e}").unwrap();
        }
        writeln!(line, ",{fin:.16e}").unwrap();
        out.write_all(line.as_bytes()).map_err(io)?;
    }
    Ok(())
}

pub fn cmd_score(cfg: &RunConfig) -> CliResult<()> {
    let values = load_score_input(cfg)?;
    let scored = score_values(&cfg.pipeline, &values)?;
    if cfg.instrument {
        eprintln!("ops: {}", scored.ops);
    }
    write_output(cfg.out.as_deref(), |w| write_scores(w, &scored))
}

/// `.csv` files under `dir`, as (id, path) with the id being the relative path
/// using `/` separators, sorted by id.
fn list_series(dir: &Path) -> CliResult<Vec<(String, PathBuf)>> {
    if !dir.is_dir() {
        return Err(Error::Format(format!("{} is not a directory", dir.display())).into());
    }
    let mut files = Vec::new();
    for entry in walkdir::WalkDir::new(dir).follow_links(true) {
        let entry = entry.map_err(|e| {
            let msg = e.to_string();
            CliError::io(
                format!("listing {}", dir.display()),
                e.into_io_error()
                    .unwrap_or_else(|| std::io::Error::other(msg)),
            )
        })?;
        let path = entry.path();
        let is_csv = path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
        if entry.file_type().is_file() && is_csv {
            let rel = path.strip_prefix(dir).unwrap_or(path);
            let id = rel
                .components()
                .map(|c| c.as_os_str().to_string_lossy())
                .collect::<Vec<_>>()
                .join("/");
            files.push((id, path.to_path_buf()));
        }
    }
    files.sort();
    Ok(files)
}

fn load_series(
    id: &str,
    path: &Path,
    labels: Option<&BTreeMap<String, Vec<String>>>,
) -> mspca::Result<SeriesRecord> {
    let mut record = match labels {
        Some(map) => {
            let stamps = map.get(id).map(Vec::as_slice).unwrap_or(&[]);
            let (record, matched) = load_nab_csv(path, stamps)?;
            if !matched.dropped.is_empty() {
                eprintln!(
                    "warning: {id}: {} label timestamp(s) not found in the series, dropped",
                    matched.dropped.len()
                );
            }
            record
        }
        None => load_yahoo_csv(path)?,
    };
    record.id = id.to_string();
    Ok(record)
}

/// Every (mode, basis, aggregation, components) combination on top of `base`,
/// dropping combinations the base window settings cannot support.
pub fn grid_configs(base: &PipelineConfig) -> Vec<PipelineConfig> {
    let mut out = Vec::new();
    for mode in Mode::ALL {
        for basis in Basis::ALL {
            for aggregation in AggregationRule::ALL {
                for components in 1..=2 {
                    let mut c = base.clone();
                    c.detector.mode = mode;
                    c.detector.basis = basis;
                    c.detector.components = components;
                    c.aggregation = aggregation;
                    match c.detector.validate() {
                        Ok(()) => out.push(c),
                        Err(e) => eprintln!("warning: grid entry skipped: {e}"),
                    }
                }
            }
        }
    }
    out
}

fn benchmark_name(cfg: &RunConfig, dir: &Path) -> String {
    cfg.benchmark.clone().unwrap_or_else(|| {
        dir.file_name().map_or_else(
            || dir.display().to_string(),
            |n| n.to_string_lossy().into_owned(),
        )
    })
}

/// Evaluate already loaded series under one pipeline configuration.
pub fn evaluate_records(
    benchmark: &str,
    pipeline: &PipelineConfig,
    records: &[SeriesRecord],
    dilation: usize,
    n_malformed: usize,
) -> (BenchmarkReport, u64) {
    let results: Vec<_> = records
        .par_iter()
        .map(|r| evaluate_record(pipeline, r, dilation).map_err(|e| (r.id.clone(), e)))
        .collect();
    let mut per_series = Vec::with_capacity(results.len());
    let mut failed = 0;
    let mut ops = 0;
    for res in results {
        match res {
            Ok((scored, auc)) => {
                ops += scored.ops;
                per_series.push(auc);
            }
            Err((id, e)) => {
                eprintln!("warning: {id}: scoring failed, skipped: {e}");
                failed += 1;
            }
        }
    }
    let det = &pipeline.detector;
    let mut report = BenchmarkReport::new(
        benchmark,
        method_name(det.mode, det.basis),
        det.basis.as_str(),
        det.components,
        pipeline.aggregation.as_str(),
        per_series,
    );
    report.n_malformed = n_malformed + failed;
    (report, ops)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{x:.3}"))
}

/// Results table: one line per report with mean±std and median±MAD.
pub fn results_table(reports: &[BenchmarkReport]) -> String {
    let mut s = format!(
        "{:<12} {:<22} {:<8} {:>2}  {:>13}  {:>13}  {:>4} {:>4}\n",
        "benchmark", "method", "agg", "pc", "mean±std", "median±mad", "n", "skip"
    );
    for r in reports {
        writeln!(
            s,
            "{:<12} {:<22} {:<8} {:>2}  {:>13}  {:>13}  {:>4} {:>4}",
            r.benchmark,
            r.method,
            r.aggregation,
            r.components,
            format!("{}±{}", fmt_opt(r.mean), fmt_opt(r.std)),
            format!("{}±{}", fmt_opt(r.median), fmt_opt(r.mad)),
            r.n_series,
            r.n_skipped,
        )
        .unwrap();
    }
    s
}

pub fn cmd_eval(cfg: &RunConfig) -> CliResult<()> {
    let dir = cfg
        .input
        .as_deref()
        .ok_or_else(|| CliError::Usage("eval needs --input DIR".into()))?;
    let labels = cfg.labels.as_deref().map(load_nab_labels).transpose()?;
    let files = list_series(dir)?;
    if files.is_empty() {
        return Err(Error::Empty(format!("no .csv series under {}", dir.display())).into());
    }

    let loaded: Vec<_> = files
        .par_iter()
        .map(|(id, path)| load_series(id, path, labels.as_ref()).map_err(|e| (id.clone(), e)))
        .collect();
    let mut records = Vec::with_capacity(loaded.len());
    let mut malformed = 0;
    for res in loaded {
        match res {
            Ok(r) => records.push(r),
            Err((id, e)) => {
                eprintln!("warning: {id}: malformed, skipped: {e}");
                malformed += 1;
            }
        }
    }

    let benchmark = benchmark_name(cfg, dir);
    let pipelines = if cfg.grid {
        grid_configs(&cfg.pipeline)
    } else {
        vec![cfg.pipeline.clone()]
    };
    let mut reports = Vec::with_capacity(pipelines.len());
    for pipeline in &pipelines {
        let (mut report, ops) =
            evaluate_records(&benchmark, pipeline, &records, cfg.dilation, malformed);
        if cfg.instrument {
            eprintln!(
                "ops[{} {} pc={}]: {ops}",
                report.method, report.aggregation, report.components
            );
        }
        let mut effective = cfg.clone();
        effective.pipeline = pipeline.clone();
        report.config = Some(effective.to_json());
        for s in report.flagged() {
            eprintln!("note: {}: AUC below 0.5 ({})", s.id, report.method);
        }
        reports.push(report);
    }

    let json = if cfg.grid {
        serde_json::to_string_pretty(&reports)
    } else {
        serde_json::to_string_pretty(&reports[0])
    }
    .map_err(Error::from)?;
    write_output(cfg.report.as_deref(), |w| {
        w.write_all(json.as_bytes())
            .and_then(|_| w.write_all(b"\n"))
            .map_err(|e| CliError::io("writing report", e))
    })?;
    if cfg.report.is_some() {
        print!("{}", results_table(&reports));
    }
    Ok(())
}

pub fn cmd_synth(spec: &Path, out: &Path, seed: Option<u64>) -> CliResult<()> {
    let record = load_synth(spec, seed)?;
    write_atomic(out, |w| Ok(write_yahoo_csv(&record, w)?))
}
