//! Benchmark series on disk and seeded synthetic benchmarks.
//!
//! Yahoo-format files are CSV with a `value` column, an `is_anomaly` (or
//! `anomaly`) column and an optional `timestamp`. NAB-format files carry
//! `timestamp,value`; their labels come from a separate list of anomalous
//! timestamps, usually read from NAB's combined-labels JSON.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Yahoo,
    Nab,
    Synthetic,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeriesRecord {
    pub id: String,
    pub values: Vec<f64>,
    pub labels: Vec<bool>,
    /// Opaque timestamps, when the source had them.
    pub timestamps: Option<Vec<String>>,
    pub source: Source,
}

impl SeriesRecord {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn n_anomalies(&self) -> usize {
        self.labels.iter().filter(|&&l| l).count()
    }
}

fn column(headers: &csv::StringRecord, names: &[&str]) -> Option<usize> {
    headers
        .iter()
        .position(|h| names.iter().any(|n| h.trim().eq_ignore_ascii_case(n)))
}

fn parse_value(cell: &str, row: usize) -> Result<f64> {
    let v: f64 = cell.trim().parse().map_err(|_| Error::Parse {
        row,
        msg: format!("value '{}' is not a number", cell.trim()),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            row,
            msg: format!("value '{}' is not finite", cell.trim()),
        });
    }
    Ok(v)
}

fn parse_label(cell: &str, row: usize) -> Result<bool> {
    match cell.trim() {
        "0" | "0.0" | "false" | "False" => Ok(false),
        "1" | "1.0" | "true" | "True" => Ok(true),
        other => Err(Error::Parse {
            row,
            msg: format!("label '{other}' is not 0 or 1"),
        }),
    }
}

fn csv_reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(input)
}

/// Line number of a record (the header is line 1).
fn line_of(rec: &csv::StringRecord, fallback: usize) -> usize {
    rec.position().map_or(fallback, |p| p.line() as usize)
}

pub fn read_yahoo_csv<R: Read>(input: R, id: impl Into<String>) -> Result<SeriesRecord> {
    let mut rdr = csv_reader(input);
    let headers = rdr.headers()?.clone();
    let value_col = column(&headers, &["value"])
        .ok_or_else(|| Error::Format("missing column 'value'".into()))?;
    let label_col = column(&headers, &["is_anomaly", "anomaly"])
        .ok_or_else(|| Error::Format("missing column 'is_anomaly' (or 'anomaly')".into()))?;
    let ts_col = column(&headers, &["timestamp"]);

    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut timestamps = ts_col.map(|_| Vec::new());
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = line_of(&rec, i + 2);
        let cell = |c: usize| {
            rec.get(c).ok_or_else(|| Error::Parse {
                row,
                msg: format!("row has {} fields", rec.len()),
            })
        };
        values.push(parse_value(cell(value_col)?, row)?);
        labels.push(parse_label(cell(label_col)?, row)?);
        if let (Some(ts), Some(c)) = (timestamps.as_mut(), ts_col) {
            ts.push(cell(c)?.to_string());
        }
    }
    Ok(SeriesRecord {
        id: id.into(),
        values,
        labels,
        timestamps,
        source: Source::Yahoo,
    })
}

pub fn load_yahoo_csv(path: impl AsRef<Path>) -> Result<SeriesRecord> {
    let path = path.as_ref();
    read_yahoo_csv(File::open(path)?, path.to_string_lossy())
}

/// Outcome of matching NAB label timestamps against a series.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LabelMatch {
    pub matched: usize,
    /// Label timestamps with no matching row.
    pub dropped: Vec<String>,
}

pub fn read_nab_csv<R: Read>(
    input: R,
    id: impl Into<String>,
    anomaly_timestamps: &[String],
) -> Result<(SeriesRecord, LabelMatch)> {
    let mut rdr = csv_reader(input);
    let headers = rdr.headers()?.clone();
    let ts_col = column(&headers, &["timestamp"])
        .ok_or_else(|| Error::Format("missing column 'timestamp'".into()))?;
    let value_col = column(&headers, &["value"])
        .ok_or_else(|| Error::Format("missing column 'value'".into()))?;

    let mut values = Vec::new();
    let mut timestamps = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = line_of(&rec, i + 2);
        let get = |c: usize| {
            rec.get(c).ok_or_else(|| Error::Parse {
                row,
                msg: format!("row has {} fields", rec.len()),
            })
        };
        timestamps.push(get(ts_col)?.to_string());
        values.push(parse_value(get(value_col)?, row)?);
    }

    let wanted: HashSet<&str> = anomaly_timestamps.iter().map(|s| s.trim()).collect();
    let labels: Vec<bool> = timestamps
        .iter()
        .map(|ts| wanted.contains(ts.trim()))
        .collect();
    let present: HashSet<&str> = timestamps.iter().map(|s| s.trim()).collect();
    let mut report = LabelMatch::default();
    for ts in anomaly_timestamps {
        if present.contains(ts.trim()) {
            report.matched += 1;
        } else {
            report.dropped.push(ts.clone());
        }
    }
    Ok((
        SeriesRecord {
            id: id.into(),
            values,
            labels,
            timestamps: Some(timestamps),
            source: Source::Nab,
        },
        report,
    ))
}

pub fn load_nab_csv(
    path: impl AsRef<Path>,
    anomaly_timestamps: &[String],
) -> Result<(SeriesRecord, LabelMatch)> {
    let path = path.as_ref();
    read_nab_csv(
        File::open(path)?,
        path.to_string_lossy(),
        anomaly_timestamps,
    )
}

/// NAB combined-labels file: `{ "relative/path.csv": ["timestamp", ...] }`.
pub fn load_nab_labels(path: impl AsRef<Path>) -> Result<BTreeMap<String, Vec<String>>> {
    Ok(serde_json::from_reader(File::open(path)?)?)
}

/// Shortest representation that parses back to the same `f64`.
fn fmt_value(v: f64) -> String {
    format!("{v}")
}

pub fn write_yahoo_csv<W: Write>(record: &SeriesRecord, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["timestamp", "value", "is_anomaly"])?;
    for i in 0..record.values.len() {
        let ts = match &record.timestamps {
            Some(ts) => ts[i].clone(),
            None => i.to_string(),
        };
        w.write_record([
            ts,
            fmt_value(record.values[i]),
            (record.labels[i] as u8).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseSignal {
    Sinusoid,
    SinusoidMix,
    TrendPlusOscillation,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnomalyKind {
    Spike,
    Drop,
    LevelShift,
}

fn one_or_many<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<f64>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(f64),
        Many(Vec<f64>),
    }
    Ok(match OneOrMany::deserialize(d)? {
        OneOrMany::One(v) => vec![v],
        OneOrMany::Many(v) => v,
    })
}

/// Parameters of a synthetic series. Anomaly magnitudes are in units of the
/// standard deviation of the series before injection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    pub id: String,
    pub seed: u64,
    pub length: usize,
    pub base: BaseSignal,
    /// Periods in samples. `sinusoid` and `trend_plus_oscillation` use the first.
    #[serde(deserialize_with = "one_or_many")]
    pub periods: Vec<f64>,
    pub amplitude: f64,
    /// Constant offset added to the signal.
    pub level: f64,
    /// Phase of the first component, radians.
    pub phase: f64,
    /// Per-sample slope for `trend_plus_oscillation`.
    pub trend: f64,
    pub noise_sigma: f64,
    pub n_anomalies: usize,
    pub anomaly_kind: AnomalyKind,
    pub anomaly_magnitude: f64,
    /// Samples affected by each `drop` anomaly (only the first is labeled).
    pub drop_width: usize,
    /// Largest detector window; anomalies are placed after `2 * max_window`.
    pub max_window: usize,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            id: "synthetic".into(),
            seed: 0,
            length: 1024,
            base: BaseSignal::Sinusoid,
            periods: vec![64.0],
            amplitude: 1.0,
            level: 0.0,
            phase: 0.0,
            trend: 0.0,
            noise_sigma: 0.0,
            n_anomalies: 0,
            anomaly_kind: AnomalyKind::Spike,
            anomaly_magnitude: 8.0,
            drop_width: 1,
            max_window: 64,
        }
    }
}

impl SynthSpec {
    /// Parse a spec from JSON or from `key = value` lines (`#` starts a comment,
    /// lists are comma-separated).
    pub fn parse(text: &str) -> Result<Self> {
        let trimmed = text.trim_start();
        let spec: SynthSpec = if trimmed.starts_with('{') {
            serde_json::from_str(trimmed)?
        } else {
            let mut map = serde_json::Map::new();
            for (n, line) in text.lines().enumerate() {
                let line = line.split('#').next().unwrap_or("").trim();
                if line.is_empty() {
                    continue;
                }
                let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                    row: n + 1,
                    msg: format!("expected key=value, got '{line}'"),
                })?;
                map.insert(key.trim().to_string(), kv_value(value.trim()));
            }
            serde_json::from_value(serde_json::Value::Object(map))?
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn warmup(&self) -> usize {
        2 * self.max_window
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.length < 64 {
            return bad(format!("length must be >= 64, got {}", self.length));
        }
        if self.periods.is_empty() || self.periods.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
            return bad("periods must be positive".into());
        }
        for (name, v) in [
            ("amplitude", self.amplitude),
            ("level", self.level),
            ("phase", self.phase),
            ("trend", self.trend),
            ("anomaly_magnitude", self.anomaly_magnitude),
        ] {
            if !v.is_finite() {
                return bad(format!("{name} must be finite"));
            }
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return bad("noise_sigma must be >= 0".into());
        }
        if self.n_anomalies > 0 {
            if self.anomaly_magnitude == 0.0 {
                return bad("anomaly_magnitude must be non-zero".into());
            }
            if self.drop_width == 0 {
                return bad("drop_width must be >= 1".into());
            }
            let room = self.length.saturating_sub(self.warmup());
            if room < self.n_anomalies * self.drop_width.max(1) {
                return bad(format!(
                    "{} anomalies do not fit after the warmup of {} samples",
                    self.n_anomalies,
                    self.warmup()
                ));
            }
        }
        Ok(())
    }
}

fn kv_value(raw: &str) -> serde_json::Value {
    use serde_json::Value;
    let scalar = |s: &str| -> Value {
        let s = s.trim();
        if let Ok(i) = s.parse::<u64>() {
            Value::from(i)
        } else if let Ok(f) = s.parse::<f64>() {
            Value::from(f)
        } else if let Ok(b) = s.parse::<bool>() {
            Value::from(b)
        } else {
            Value::from(s.trim_matches('"'))
        }
    };
    if raw.contains(',') {
        Value::Array(raw.split(',').map(scalar).collect())
    } else {
        scalar(raw)
    }
}

/// Generate a labeled synthetic series; a pure function of `spec`.
pub fn generate_synthetic(spec: &SynthSpec) -> Result<SeriesRecord> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let tau = std::f64::consts::TAU;
    let n = spec.length;

    let mut values: Vec<f64> = (0..n)
        .map(|t| {
            let t = t as f64;
            let osc = |k: usize| {
                (tau * t / spec.periods[k] + if k == 0 { spec.phase } else { 0.0 }).sin()
            };
            let signal = match spec.base {
                BaseSignal::Sinusoid => spec.amplitude * osc(0),
                BaseSignal::SinusoidMix => {
                    spec.amplitude * (0..spec.periods.len()).map(osc).sum::<f64>()
                }
                BaseSignal::TrendPlusOscillation => spec.trend * t + spec.amplitude * osc(0),
            };
            spec.level + signal
        })
        .collect();

    if spec.noise_sigma > 0.0 {
        let noise = Normal::new(0.0, spec.noise_sigma)
            .map_err(|e| Error::Config(format!("noise_sigma: {e}")))?;
        values.iter_mut().for_each(|v| *v += noise.sample(&mut rng));
    }

    let mut labels = vec![false; n];
    if let Some(slot) = (n - spec.warmup().min(n)).checked_div(spec.n_anomalies) {
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
        let delta = spec.anomaly_magnitude * if std > 0.0 { std } else { 1.0 };

        // One anomaly per equal-width slot after the warmup.
        let start = spec.warmup();
        for k in 0..spec.n_anomalies {
            let lo = start + k * slot;
            let span = slot.saturating_sub(spec.drop_width).max(1);
            let at = lo + rng.random_range(0..span);
            labels[at] = true;
            match spec.anomaly_kind {
                AnomalyKind::Spike => values[at] += delta,
                AnomalyKind::Drop => {
                    let end = (at + spec.drop_width).min(n);
                    values[at..end].iter_mut().for_each(|v| *v -= delta);
                }
                AnomalyKind::LevelShift => values[at..].iter_mut().for_each(|v| *v += delta),
            }
        }
    }

    Ok(SeriesRecord {
        id: spec.id.clone(),
        values,
        labels,
        timestamps: None,
        source: Source::Synthetic,
    })
}
