//! Ingestion of the hydraulic condition-monitoring dataset and a
//! synthetic generator with the same schema.
//!
//! The on-disk layout is one text file per sensor (`PS1.txt`, ...,
//! `SE.txt`) with one 60-second cycle per row, values separated by tabs
//! or runs of whitespace, plus `profile.txt` holding the five condition
//! codes per cycle in the column order `cool valv pump hydr stab`. That
//! column order can be overridden by an optional `profile_columns.txt`
//! file naming the columns in file order.

use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Rng;

/// Sampling rate of a sensor channel, in samples per second.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleRate {
    Hz100,
    Hz10,
    Hz1,
}

impl SampleRate {
    pub fn per_second(self) -> usize {
        match self {
            SampleRate::Hz100 => 100,
            SampleRate::Hz10 => 10,
            SampleRate::Hz1 => 1,
        }
    }

    /// Samples in one 60-second cycle.
    pub fn samples_per_cycle(self) -> usize {
        self.per_second() * 60
    }
}

/// Static description of one sensor channel.
#[derive(Debug, Clone, Copy)]
pub struct SensorSpec {
    pub id: &'static str,
    pub rate: SampleRate,
    pub unit: &'static str,
}

/// The 17 sensor channels of the hydraulic test rig, in canonical order.
/// Feature vectors and data files follow this ordering everywhere.
pub const SENSORS: [SensorSpec; 17] = [
    SensorSpec { id: "PS1", rate: SampleRate::Hz100, unit: "bar" },
    SensorSpec { id: "PS2", rate: SampleRate::Hz100, unit: "bar" },
    SensorSpec { id: "PS3", rate: SampleRate::Hz100, unit: "bar" },
    SensorSpec { id: "PS4", rate: SampleRate::Hz100, unit: "bar" },
    SensorSpec { id: "PS5", rate: SampleRate::Hz100, unit: "bar" },
    SensorSpec { id: "PS6", rate: SampleRate::Hz100, unit: "bar" },
    SensorSpec { id: "EPS1", rate: SampleRate::Hz100, unit: "W" },
    SensorSpec { id: "FS1", rate: SampleRate::Hz10, unit: "l/min" },
    SensorSpec { id: "FS2", rate: SampleRate::Hz10, unit: "l/min" },
    SensorSpec { id: "TS1", rate: SampleRate::Hz1, unit: "C" },
    SensorSpec { id: "TS2", rate: SampleRate::Hz1, unit: "C" },
    SensorSpec { id: "TS3", rate: SampleRate::Hz1, unit: "C" },
    SensorSpec { id: "TS4", rate: SampleRate::Hz1, unit: "C" },
    SensorSpec { id: "VS1", rate: SampleRate::Hz1, unit: "mm/s" },
    SensorSpec { id: "CE", rate: SampleRate::Hz1, unit: "%" },
    SensorSpec { id: "CP", rate: SampleRate::Hz1, unit: "kW" },
    SensorSpec { id: "SE", rate: SampleRate::Hz1, unit: "%" },
];

/// Index of a sensor id within [`SENSORS`].
pub fn sensor_index(id: &str) -> Option<usize> {
    SENSORS.iter().position(|s| s.id == id)
}

/// Binary classification label. Internal pump leakage is the anomaly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Label {
    Normal,
    Anomaly,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Normal => write!(f, "normal"),
            Label::Anomaly => write!(f, "anomaly"),
        }
    }
}

/// Pump-leakage fault grade, straight from the condition code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FaultType {
    None,
    Weak,
    Severe,
}

impl fmt::Display for FaultType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FaultType::None => write!(f, "none"),
            FaultType::Weak => write!(f, "weak"),
            FaultType::Severe => write!(f, "severe"),
        }
    }
}

/// Component-condition codes for one cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conditions {
    pub cool: i64,
    pub valv: i64,
    pub pump: i64,
    pub hydr: i64,
    pub stab: i64,
}

impl Conditions {
    /// Checks every code against its documented enumeration.
    pub fn validate(&self) -> Result<()> {
        let ok = |name: &str, value: i64, allowed: &[i64]| -> Result<()> {
            if allowed.contains(&value) {
                Ok(())
            } else {
                Err(Error::data(format!(
                    "condition {name} has value {value}, expected one of {allowed:?}"
                )))
            }
        };
        ok("cool", self.cool, &[3, 20, 100])?;
        ok("valv", self.valv, &[73, 80, 90, 100])?;
        ok("pump", self.pump, &[0, 1, 2])?;
        ok("hydr", self.hydr, &[90, 100, 115, 130])?;
        ok("stab", self.stab, &[0, 1])?;
        Ok(())
    }
}

/// One 60-second operating cycle: 17 sensor channels at their native
/// rates plus the five condition codes.
#[derive(Debug, Clone, PartialEq)]
pub struct Cycle {
    pub index: usize,
    /// Channels ordered as in [`SENSORS`]; lengths follow each sensor's rate.
    pub channels: Vec<Vec<f64>>,
    pub conditions: Conditions,
}

impl Cycle {
    /// Channel data for a sensor id.
    pub fn channel(&self, id: &str) -> Option<&[f64]> {
        sensor_index(id).map(|i| self.channels[i].as_slice())
    }
}

/// An ordered collection of cycles sharing the sensor schema.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub cycles: Vec<Cycle>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.cycles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cycles.is_empty()
    }
}

/// Pump code 0 is normal; codes 1 (weak) and 2 (severe) are anomalies.
pub fn leakage_label(cycle: &Cycle) -> Result<Label> {
    match cycle.conditions.pump {
        0 => Ok(Label::Normal),
        1 | 2 => Ok(Label::Anomaly),
        other => Err(Error::data(format!(
            "cycle {}: pump code {other} outside {{0, 1, 2}}",
            cycle.index
        ))),
    }
}

/// Pump code mapped to its fault grade.
pub fn fault_type(cycle: &Cycle) -> Result<FaultType> {
    match cycle.conditions.pump {
        0 => Ok(FaultType::None),
        1 => Ok(FaultType::Weak),
        2 => Ok(FaultType::Severe),
        other => Err(Error::data(format!(
            "cycle {}: pump code {other} outside {{0, 1, 2}}",
            cycle.index
        ))),
    }
}

const PROFILE_COLUMNS: [&str; 5] = ["cool", "valv", "pump", "hydr", "stab"];

/// Loads a dataset directory: one `<ID>.txt` per sensor plus `profile.txt`.
///
/// All files must agree on the row count; each sensor row must hold
/// exactly `rate * 60` values.
pub fn load_dataset(dir: &Path) -> Result<Dataset> {
    let profile_order = read_profile_order(dir)?;
    let conditions = read_profile(dir, &profile_order)?;
    let n_cycles = conditions.len();

    let mut channels_by_sensor: Vec<Vec<Vec<f64>>> = Vec::with_capacity(SENSORS.len());
    for spec in &SENSORS {
        let rows = read_sensor_file(dir, spec)?;
        if rows.len() != n_cycles {
            return Err(Error::format(
                format!("{}.txt", spec.id),
                None,
                format!(
                    "row count {} does not match profile row count {n_cycles}",
                    rows.len()
                ),
            ));
        }
        channels_by_sensor.push(rows);
    }

    let mut cycles = Vec::with_capacity(n_cycles);
    for (index, conds) in conditions.into_iter().enumerate() {
        conds
            .validate()
            .map_err(|e| Error::data(format!("profile row {index}: {e}")))?;
        let channels = channels_by_sensor
            .iter_mut()
            .map(|rows| std::mem::take(&mut rows[index]))
            .collect();
        cycles.push(Cycle {
            index,
            channels,
            conditions: conds,
        });
    }
    Ok(Dataset { cycles })
}

fn read_profile_order(dir: &Path) -> Result<[usize; 5]> {
    let override_path = dir.join("profile_columns.txt");
    if !override_path.exists() {
        return Ok([0, 1, 2, 3, 4]);
    }
    let text = fs::read_to_string(&override_path)
        .map_err(|e| Error::io(override_path.display().to_string(), e))?;
    let names: Vec<&str> = text.split_whitespace().collect();
    if names.len() != 5 {
        return Err(Error::format(
            "profile_columns.txt",
            None,
            format!("expected 5 column names, found {}", names.len()),
        ));
    }
    let mut order = [usize::MAX; 5];
    for (file_col, name) in names.iter().enumerate() {
        let slot = PROFILE_COLUMNS
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| {
                Error::format(
                    "profile_columns.txt",
                    None,
                    format!("unknown column name {name:?}"),
                )
            })?;
        if order[slot] != usize::MAX {
            return Err(Error::format(
                "profile_columns.txt",
                None,
                format!("column {name:?} listed twice"),
            ));
        }
        order[slot] = file_col;
    }
    Ok(order)
}

/// `order[i]` gives the file column holding canonical column `i`
/// (cool, valv, pump, hydr, stab).
fn read_profile(dir: &Path, order: &[usize; 5]) -> Result<Vec<Conditions>> {
    let path = dir.join("profile.txt");
    let text = fs::read_to_string(&path).map_err(|e| Error::io("profile.txt", e))?;
    let mut out = Vec::new();
    for (row, line) in non_empty_lines(&text) {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != 5 {
            return Err(Error::format(
                "profile.txt",
                Some(row),
                format!("expected 5 condition values, found {}", tokens.len()),
            ));
        }
        let mut values = [0i64; 5];
        for (slot, &file_col) in order.iter().enumerate() {
            let token = tokens[file_col];
            values[slot] = parse_condition(token).map_err(|detail| {
                Error::format(
                    "profile.txt",
                    Some(row),
                    format!("column {file_col}: {detail}"),
                )
            })?;
        }
        out.push(Conditions {
            cool: values[0],
            valv: values[1],
            pump: values[2],
            hydr: values[3],
            stab: values[4],
        });
    }
    if out.is_empty() {
        return Err(Error::format("profile.txt", None, "file holds no rows"));
    }
    Ok(out)
}

/// Condition codes are integers, but some exports write them as decimals
/// ("100.0"); accept those when they are exactly integral.
fn parse_condition(token: &str) -> std::result::Result<i64, String> {
    if let Ok(v) = token.parse::<i64>() {
        return Ok(v);
    }
    match token.parse::<f64>() {
        Ok(v) if v.fract() == 0.0 && v.is_finite() => Ok(v as i64),
        _ => Err(format!("unparseable condition value {token:?}")),
    }
}

fn read_sensor_file(dir: &Path, spec: &SensorSpec) -> Result<Vec<Vec<f64>>> {
    let file_name = format!("{}.txt", spec.id);
    let path = dir.join(&file_name);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(format!("sensor {}", spec.id), e))?;
    let expected = spec.rate.samples_per_cycle();
    let mut rows = Vec::new();
    for (row, line) in non_empty_lines(&text) {
        let mut values = Vec::with_capacity(expected);
        for (col, token) in line.split_whitespace().enumerate() {
            let v: f64 = token.parse().map_err(|_| {
                Error::format(
                    &file_name,
                    Some(row),
                    format!("unparseable value {token:?} at position {col}"),
                )
            })?;
            if !v.is_finite() {
                return Err(Error::format(
                    &file_name,
                    Some(row),
                    format!("non-finite value at position {col}"),
                ));
            }
            values.push(v);
        }
        if values.len() != expected {
            return Err(Error::format(
                &file_name,
                Some(row),
                format!("expected {expected} values, found {}", values.len()),
            ));
        }
        rows.push(values);
    }
    if rows.is_empty() {
        return Err(Error::format(&file_name, None, "file holds no rows"));
    }
    Ok(rows)
}

/// Non-empty lines paired with their 0-based row index counted over
/// non-empty lines (matching cycle indices).
fn non_empty_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
}

/// Writes a dataset in the same layout `load_dataset` reads. Values are
/// printed with shortest round-trip formatting, so a load/write/load trip
/// preserves the numbers exactly.
pub fn write_dataset(dataset: &Dataset, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    for (s, spec) in SENSORS.iter().enumerate() {
        let mut text = String::new();
        for cycle in &dataset.cycles {
            let row: Vec<String> = cycle.channels[s].iter().map(|v| format!("{v}")).collect();
            text.push_str(&row.join("\t"));
            text.push('\n');
        }
        let path = dir.join(format!("{}.txt", spec.id));
        fs::write(&path, text).map_err(|e| Error::io(format!("sensor {}", spec.id), e))?;
    }
    let mut profile = String::new();
    for cycle in &dataset.cycles {
        let c = &cycle.conditions;
        profile.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\n",
            c.cool, c.valv, c.pump, c.hydr, c.stab
        ));
    }
    fs::write(dir.join("profile.txt"), profile).map_err(|e| Error::io("profile.txt", e))?;
    Ok(())
}

/// Per-sensor baseline level and noise scales used by the synthetic
/// generator. Values are plausible operating points for the rig; the
/// detectors only care about relative structure.
struct SyntheticSensor {
    baseline: f64,
    /// Standard deviation of the per-cycle operating level.
    jitter: f64,
    /// Standard deviation of per-sample noise around the cycle level.
    noise: f64,
}

fn synthetic_sensor(spec: &SensorSpec) -> SyntheticSensor {
    let baseline: f64 = match spec.id {
        "PS1" => 155.0,
        "PS2" => 105.0,
        "PS3" => 2.0,
        "PS4" => 8.6,
        "PS5" => 8.4,
        "PS6" => 8.4,
        "EPS1" => 2400.0,
        "FS1" => 6.0,
        "FS2" => 10.0,
        "TS1" => 35.6,
        "TS2" => 40.9,
        "TS3" => 38.3,
        "TS4" => 30.7,
        "VS1" => 0.58,
        "CE" => 39.0,
        "CP" => 1.8,
        "SE" => 60.0,
        _ => unreachable!("unknown sensor id"),
    };
    SyntheticSensor {
        baseline,
        jitter: (baseline.abs() * 0.01).max(0.02),
        noise: (baseline.abs() * 0.005).max(0.01),
    }
}

/// Channels perturbed on anomalous cycles: internal pump leakage drops
/// pressure across the circuit, starves both flows, costs motor power,
/// and degrades the efficiency factor. Spreading the signature over the
/// whole pressure/flow/power group keeps split-based detectors in the
/// game — with only a handful of marked columns out of 68, uniform
/// feature sampling dilutes the signal below detectability.
const PERTURBED_MEAN_SENSORS: [&str; 10] = [
    "PS1", "PS2", "PS3", "PS4", "PS5", "PS6", "EPS1", "FS1", "FS2", "SE",
];

/// Mean shift applied to perturbed channels, in units of the per-cycle
/// jitter, before scaling by fault severity (weak = 1, severe = 2).
/// Pressures, flows, and efficiency drop; motor power rises.
const MEAN_SHIFT_SIGMAS: f64 = 4.0;

/// Per-sample noise inflation factor for the flow channels is
/// `1 + 2 * severity`.
const FLOW_NOISE_INFLATION_PER_SEVERITY: f64 = 2.0;

/// Default synthetic corpus shape: enough normals that the robust
/// covariance support requirement holds after the standard split, with
/// anomalies of both grades forming the test-set majority.
pub const DEFAULT_SYNTHETIC_NORMAL: usize = 420;
pub const DEFAULT_SYNTHETIC_WEAK: usize = 50;
pub const DEFAULT_SYNTHETIC_SEVERE: usize = 50;

/// Generates a synthetic dataset with the real schema: 17 channels at
/// their native rates, condition codes, and pump labels. Normal cycles
/// vary around per-sensor baselines; anomalous cycles shift the
/// pressure/flow/power group means and inflate flow sample noise, with
/// severity scaling weak -> severe. Deterministic for a given seed.
pub fn generate_synthetic(n_normal: usize, n_weak: usize, n_severe: usize, seed: u64) -> Dataset {
    let mut rng = Rng::new(seed);
    let mut cycles = Vec::with_capacity(n_normal + n_weak + n_severe);
    for _ in 0..n_normal {
        cycles.push(synthetic_cycle(cycles.len(), 0, &mut rng));
    }
    for _ in 0..n_weak {
        cycles.push(synthetic_cycle(cycles.len(), 1, &mut rng));
    }
    for _ in 0..n_severe {
        cycles.push(synthetic_cycle(cycles.len(), 2, &mut rng));
    }
    Dataset { cycles }
}

fn synthetic_cycle(index: usize, pump: i64, rng: &mut Rng) -> Cycle {
    let severity = pump as f64;
    let mut channels = Vec::with_capacity(SENSORS.len());
    for spec in &SENSORS {
        let params = synthetic_sensor(spec);
        let perturbed = PERTURBED_MEAN_SENSORS.contains(&spec.id);
        let mut level = params.baseline + params.jitter * rng.normal();
        if perturbed {
            let direction = if spec.id == "EPS1" { 1.0 } else { -1.0 };
            level += direction * MEAN_SHIFT_SIGMAS * params.jitter * severity;
        }
        let noise = if spec.id == "FS1" || spec.id == "FS2" {
            params.noise * (1.0 + FLOW_NOISE_INFLATION_PER_SEVERITY * severity)
        } else {
            params.noise
        };
        let n = spec.rate.samples_per_cycle();
        let mut samples = Vec::with_capacity(n);
        for _ in 0..n {
            samples.push(level + noise * rng.normal());
        }
        channels.push(samples);
    }
    Cycle {
        index,
        channels,
        conditions: Conditions {
            cool: 100,
            valv: 100,
            pump,
            hydr: 130,
            stab: 0,
        },
    }
}
