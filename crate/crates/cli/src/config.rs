use std::path::{Path, PathBuf};

use mspca::PipelineConfig;
use serde::{Deserialize, Serialize};

use crate::args::CommonArgs;
use crate::{CliError, CliResult};

/// Effective run configuration: config-file values overlaid with flags.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    #[serde(flatten)]
    pub pipeline: PipelineConfig,
    pub input: Option<PathBuf>,
    pub synth: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub grid: bool,
    pub instrument: bool,
    pub seed: Option<u64>,
    pub dilation: usize,
    pub benchmark: Option<String>,
}

impl RunConfig {
    /// Parse a config file; `.json` is read as JSON, anything else as TOML.
    pub fn from_file(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let is_json = path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("json"));
        let parsed = if is_json {
            serde_json::from_str(&text).map_err(|e| e.to_string())
        } else {
            toml::from_str(&text).map_err(|e| e.to_string())
        };
        parsed.map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))
    }

    /// Build the effective config from flags and validate it. No data is read.
    pub fn resolve(args: &CommonArgs) -> CliResult<Self> {
        let mut cfg = match &args.config {
            Some(p) => Self::from_file(p)?,
            None => Self::default(),
        };
        cfg.apply(args);
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply(&mut self, a: &CommonArgs) {
        let det = &mut self.pipeline.detector;
        if let Some(v) = a.mode {
            det.mode = v;
        }
        if let Some(v) = a.basis {
            det.basis = v;
        }
        if let Some(v) = a.scales {
            det.scales = v;
        }
        if let Some(v) = a.fixed_p {
            det.fixed_p = v;
        }
        if let Some(v) = a.components {
            det.components = v;
        }
        if let Some(v) = a.epsilon {
            det.epsilon = v;
        }
        det.haar_upper_levels |= a.haar_upper_levels;
        if let Some(v) = a.aggregation {
            self.pipeline.aggregation = v;
        }
        if let Some(v) = a.mincorr_mode {
            self.pipeline.mincorr_mode = v;
        }
        for (dst, src) in [
            (&mut self.input, &a.input),
            (&mut self.synth, &a.synth),
            (&mut self.labels, &a.labels),
            (&mut self.out, &a.out),
            (&mut self.report, &a.report),
        ] {
            if src.is_some() {
                dst.clone_from(src);
            }
        }
        self.grid |= a.grid;
        self.instrument |= a.instrument;
        if a.seed.is_some() {
            self.seed = a.seed;
        }
        if let Some(d) = a.dilation {
            self.dilation = d;
        }
        if a.benchmark.is_some() {
            self.benchmark.clone_from(&a.benchmark);
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        self.pipeline.detector.validate()?;
        if self.input.is_some() && self.synth.is_some() {
            return Err(CliError::Usage(
                "--input and --synth are mutually exclusive".into(),
            ));
        }
        Ok(())
    }

    /// The config as JSON, for echoing into reports.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("RunConfig serializes to JSON")
    }
}
