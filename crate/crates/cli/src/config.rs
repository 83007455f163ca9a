//! Run configuration: a versioned TOML document holding the data
//! source, split settings, and per-detector overrides. Command-line
//! flags only override fields that already live here, so every run is
//! reproducible from its echoed configuration alone.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use hydromon::dataset::{
    generate_synthetic, load_dataset, Dataset, DEFAULT_SYNTHETIC_NORMAL, DEFAULT_SYNTHETIC_SEVERE,
    DEFAULT_SYNTHETIC_WEAK,
};
use hydromon::detector::{DetectorConfig, DetectorKind};
use hydromon::error::{Error, Result};
use hydromon::eval::{default_configs, SplitSpec};

/// Schema version this binary reads and writes.
pub const CONFIG_VERSION: u32 = 1;

/// The whole run configuration, as stored on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    /// Master seed. Everything seeded derives from it unless a section
    /// pins its own; there is no wall-clock fallback.
    pub seed: u64,
    /// Output directory; `--out` overrides, `out` if neither is given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<DataSource>,
    #[serde(default)]
    pub split: SplitConfig,
    /// Full detector configurations replacing the defaults for their
    /// kind; kinds not listed keep their defaults.
    #[serde(default, rename = "detector", skip_serializing_if = "Vec::is_empty")]
    pub detectors: Vec<DetectorConfig>,
}

impl RunConfig {
    /// A default-shaped configuration on an explicit seed: synthetic
    /// data source, standard split, default detectors.
    pub fn with_seed(seed: u64) -> RunConfig {
        RunConfig {
            version: CONFIG_VERSION,
            seed,
            out: None,
            data: Some(DataSource {
                dir: None,
                synthetic: Some(SyntheticSpec::default()),
            }),
            split: SplitConfig::default(),
            detectors: Vec::new(),
        }
    }

    /// Loads and validates the dataset named by the `data` section.
    pub fn load_data(&self) -> Result<Dataset> {
        let source = self.data.as_ref().ok_or_else(|| {
            Error::argument("the configuration has no [data] section")
        })?;
        match (&source.dir, &source.synthetic) {
            (Some(dir), None) => load_dataset(dir),
            (None, Some(spec)) => Ok(generate_synthetic(
                spec.normal,
                spec.weak,
                spec.severe,
                spec.seed.unwrap_or(self.seed),
            )),
            _ => Err(Error::argument(
                "[data] must set exactly one of `dir` and `synthetic`",
            )),
        }
    }

    /// The split specification with its seed resolved.
    pub fn split_spec(&self) -> SplitSpec {
        SplitSpec {
            train_fraction: self.split.train_fraction,
            valid_fraction: self.split.valid_fraction,
            seed: self.split.seed.unwrap_or(self.seed),
            dae_valid_anomalies: self.split.dae_valid_anomalies,
        }
    }

    /// All six detector configurations in report order: defaults on
    /// seeds derived from the master, with `[[detector]]` entries
    /// replacing the default of their kind.
    pub fn detector_configs(&self) -> Result<Vec<DetectorConfig>> {
        for (i, a) in self.detectors.iter().enumerate() {
            if self.detectors[i + 1..].iter().any(|b| b.kind() == a.kind()) {
                return Err(Error::argument(format!(
                    "duplicate [[detector]] entry for {}",
                    a.kind()
                )));
            }
        }
        let mut configs = default_configs(self.seed);
        for custom in &self.detectors {
            let slot = configs
                .iter_mut()
                .find(|c| c.kind() == custom.kind())
                .expect("defaults cover every kind");
            *slot = custom.clone();
        }
        Ok(configs)
    }

    /// A fully resolved copy for provenance headers: every deferred
    /// seed pinned, the detector list expanded, and the output
    /// directory dropped — where artifacts land is not part of a run's
    /// identity, so reruns into different directories stay
    /// byte-identical. Parsing the echoed document reproduces the run.
    pub fn resolved(&self, detectors: &[DetectorConfig]) -> RunConfig {
        let mut out = self.clone();
        out.out = None;
        out.split.seed = Some(self.split_spec().seed);
        if let Some(source) = &mut out.data {
            if let Some(spec) = &mut source.synthetic {
                spec.seed = Some(spec.seed.unwrap_or(self.seed));
            }
        }
        out.detectors = detectors.to_vec();
        out
    }
}

/// Where cycles come from; exactly one field must be set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSource {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<SyntheticSpec>,
}

/// Synthetic corpus shape; the seed defaults to the master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    #[serde(default = "default_normal")]
    pub normal: usize,
    #[serde(default = "default_weak")]
    pub weak: usize,
    #[serde(default = "default_severe")]
    pub severe: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            normal: DEFAULT_SYNTHETIC_NORMAL,
            weak: DEFAULT_SYNTHETIC_WEAK,
            severe: DEFAULT_SYNTHETIC_SEVERE,
            seed: None,
        }
    }
}

fn default_normal() -> usize {
    DEFAULT_SYNTHETIC_NORMAL
}
fn default_weak() -> usize {
    DEFAULT_SYNTHETIC_WEAK
}
fn default_severe() -> usize {
    DEFAULT_SYNTHETIC_SEVERE
}

/// Split settings; the seed defaults to the master seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitConfig {
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
    #[serde(default = "default_valid_fraction")]
    pub valid_fraction: f64,
    #[serde(default = "default_dae_valid_anomalies")]
    pub dae_valid_anomalies: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Default for SplitConfig {
    fn default() -> Self {
        let spec = SplitSpec::default();
        SplitConfig {
            train_fraction: spec.train_fraction,
            valid_fraction: spec.valid_fraction,
            dae_valid_anomalies: spec.dae_valid_anomalies,
            seed: None,
        }
    }
}

fn default_train_fraction() -> f64 {
    SplitSpec::default().train_fraction
}
fn default_valid_fraction() -> f64 {
    SplitSpec::default().valid_fraction
}
fn default_dae_valid_anomalies() -> usize {
    SplitSpec::default().dae_valid_anomalies
}

/// Reads, parses, and version-checks a configuration file.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::io(format!("configuration file {}", path.display()), e))?;
    let config: RunConfig = toml::from_str(&text)
        .map_err(|e| Error::format(path.display().to_string(), None, e.to_string()))?;
    if config.version != CONFIG_VERSION {
        return Err(Error::format(
            path.display().to_string(),
            None,
            format!(
                "configuration version {} but this binary reads version {CONFIG_VERSION}",
                config.version
            ),
        ));
    }
    config.detector_configs()?;
    Ok(config)
}

/// The resolved configuration as `# `-prefixed TOML, written at the top
/// of every text artifact. No timestamps: reruns must be byte-identical.
pub fn echo_header(config: &RunConfig) -> String {
    let text = toml::to_string(config).expect("configuration serializes");
    let mut out = String::from("# hydromon run configuration\n");
    for line in text.lines() {
        if line.is_empty() {
            out.push_str("#\n");
        } else {
            out.push_str("# ");
            out.push_str(line);
            out.push('\n');
        }
    }
    out
}

/// Parses the comma-separated `--models` list into kinds.
pub fn parse_models(list: &str) -> Result<Vec<DetectorKind>> {
    let mut kinds = Vec::new();
    for name in list.split(',') {
        let kind = DetectorKind::parse(name.trim())?;
        if kinds.contains(&kind) {
            return Err(Error::argument(format!("model {kind} listed twice")));
        }
        kinds.push(kind);
    }
    Ok(kinds)
}
