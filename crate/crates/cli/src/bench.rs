//! Operation-count and wall-time sweep of multiscale vs hierarchical detection.

use std::time::Instant;

use mspca::{generate_synthetic, Detector, DetectorConfig, Error, Mode, SynthSpec};
use serde::Serialize;

use crate::args::BenchArgs;
use crate::config::RunConfig;
use crate::{write_output, CliError, CliResult};

#[derive(Clone, Debug, Serialize)]
pub struct BenchRow {
    #[serde(rename = "P")]
    pub p: usize,
    pub mode: Mode,
    pub ops: u64,
    pub seconds: f64,
}

/// Least-squares line `y = slope * x + intercept` and its R².
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Fit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Fit {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        sxy * sxy / (sxx * syy)
    };
    Fit {
        slope,
        intercept,
        r2,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BenchReport {
    #[serde(rename = "T")]
    pub length: usize,
    pub rows: Vec<BenchRow>,
    /// Multiscale ops against P.
    pub multiscale_fit: Fit,
    /// Hierarchical ops against log2 P.
    pub hierarchical_fit: Fit,
    pub config: serde_json::Value,
}

/// Noisy sinusoid used as the benchmark stream.
pub fn bench_stream(length: usize, seed: u64) -> mspca::Result<Vec<f64>> {
    let spec = SynthSpec {
        seed,
        length,
        periods: vec![50.0],
        noise_sigma: 0.1,
        ..Default::default()
    };
    Ok(generate_synthetic(&spec)?.values)
}

/// Run one detector over `xs`, returning (ops, seconds).
pub fn measure(config: DetectorConfig, xs: &[f64]) -> mspca::Result<(u64, f64)> {
    let mut det = Detector::new(config)?;
    let mut alphas = vec![0.0; det.num_scores()];
    let start = Instant::now();
    for &x in xs {
        det.step_into(x, &mut alphas)?;
    }
    Ok((det.ops(), start.elapsed().as_secs_f64()))
}

pub fn sweep(
    base: &DetectorConfig,
    length: usize,
    scales: std::ops::RangeInclusive<usize>,
    seed: u64,
) -> CliResult<(Vec<BenchRow>, Fit, Fit)> {
    if scales.is_empty() {
        return Err(CliError::Usage("empty scale range".into()));
    }
    let xs = bench_stream(length, seed)?;
    let mut rows = Vec::new();
    for j in scales {
        for mode in [Mode::Multiscale, Mode::Hierarchical] {
            let cfg = DetectorConfig {
                mode,
                scales: j,
                ..base.clone()
            };
            let (ops, seconds) = measure(cfg, &xs)?;
            rows.push(BenchRow {
                p: 1 << j,
                mode,
                ops,
                seconds,
            });
        }
    }
    let pick = |mode: Mode, x: fn(usize) -> f64| -> (Vec<f64>, Vec<f64>) {
        rows.iter()
            .filter(|r| r.mode == mode)
            .map(|r| (x(r.p), r.ops as f64))
            .unzip()
    };
    let (px, py) = pick(Mode::Multiscale, |p| p as f64);
    let (lx, ly) = pick(Mode::Hierarchical, |p| (p as f64).log2());
    Ok((rows, linear_fit(&px, &py), linear_fit(&lx, &ly)))
}

pub fn cmd_bench(cfg: &RunConfig, args: &BenchArgs) -> CliResult<()> {
    if args.length < 64 {
        return Err(
            Error::Config(format!("bench length must be >= 64, got {}", args.length)).into(),
        );
    }
    let (rows, multiscale_fit, hierarchical_fit) = sweep(
        &cfg.pipeline.detector,
        args.length,
        args.min_scales..=args.max_scales,
        cfg.seed.unwrap_or(0),
    )?;
    let report = BenchReport {
        length: args.length,
        rows,
        multiscale_fit,
        hierarchical_fit,
        config: cfg.to_json(),
    };
    let json = serde_json::to_string_pretty(&report).map_err(Error::from)?;
    write_output(cfg.report.as_deref(), |w| {
        w.write_all(json.as_bytes())
            .and_then(|_| w.write_all(b"\n"))
            .map_err(|e| CliError::io("writing bench report", e))
    })
}
