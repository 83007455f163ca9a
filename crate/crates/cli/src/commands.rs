//! The six subcommands. Each one is a pure function of its resolved
//! configuration: data in, artifacts and a summary out, no clocks and
//! no ambient state, so reruns are byte-identical.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use hydromon::dataset::{
    fault_type, generate_synthetic, leakage_label, write_dataset, Dataset, FaultType, Label,
    SENSORS,
};
use hydromon::detector::{DetectorKind, FittedDetector, ScoreReport, TrainedDetector};
use hydromon::error::{Error, Result};
use hydromon::eval::{
    self, calibration_set, confusion_csv, metric_csv, metric_table, ratio_csv, split,
};
use hydromon::features::{
    attribute_names, correlation_matrix, extract_all, feature_table_csv, histogram, FeatureVector,
};

use crate::config::{echo_header, RunConfig};

/// Histogram resolution for the per-attribute exports.
const HISTOGRAM_BINS: usize = 20;

/// A command's resolved inputs: the configuration with flag overrides
/// already folded in, and the output directory.
pub struct Context {
    pub config: RunConfig,
    pub out: PathBuf,
}

impl Context {
    /// Provenance header listing the fully resolved detector set.
    fn header(&self) -> Result<String> {
        let detectors = self.config.detector_configs()?;
        Ok(echo_header(&self.config.resolved(&detectors)))
    }

    fn write_artifact(&self, relative: &str, content: &str) -> Result<PathBuf> {
        let path = self.out.join(relative);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)
                .map_err(|e| Error::io(format!("directory {}", parent.display()), e))?;
        }
        fs::write(&path, content)
            .map_err(|e| Error::io(format!("artifact {}", path.display()), e))?;
        Ok(path)
    }
}

/// Schema, label balance, and condition tallies of a dataset.
pub fn inspect_report(data: &Dataset) -> Result<String> {
    let mut normal = 0usize;
    let mut weak = 0usize;
    let mut severe = 0usize;
    for cycle in &data.cycles {
        match leakage_label(cycle)? {
            Label::Normal => normal += 1,
            Label::Anomaly => match fault_type(cycle)? {
                FaultType::Weak => weak += 1,
                _ => severe += 1,
            },
        }
    }

    let mut out = format!("cycles: {}\n", data.len());
    out.push_str(&format!(
        "labels: {normal} normal, {} anomaly ({weak} weak, {severe} severe)\n",
        weak + severe
    ));
    out.push_str("sensors:\n");
    for spec in &SENSORS {
        out.push_str(&format!(
            "  {:<5} {:>3} Hz  {:>5} samples/cycle  [{}]\n",
            spec.id,
            spec.rate.per_second(),
            spec.rate.samples_per_cycle(),
            spec.unit
        ));
    }
    out.push_str("conditions:\n");
    type Getter = fn(&hydromon::dataset::Conditions) -> i64;
    let fields: [(&str, Getter); 5] = [
        ("cool", |c| c.cool),
        ("valv", |c| c.valv),
        ("pump", |c| c.pump),
        ("hydr", |c| c.hydr),
        ("stab", |c| c.stab),
    ];
    for (name, get) in fields {
        let mut tally: BTreeMap<i64, usize> = BTreeMap::new();
        for cycle in &data.cycles {
            *tally.entry(get(&cycle.conditions)).or_default() += 1;
        }
        let rendered: Vec<String> = tally
            .iter()
            .map(|(value, count)| format!("{value} x{count}"))
            .collect();
        out.push_str(&format!("  {name}: {}\n", rendered.join(", ")));
    }
    Ok(out)
}

/// Writes the feature table, one histogram per attribute, and the
/// attribute correlation matrix.
pub fn features(ctx: &Context) -> Result<()> {
    let data = ctx.config.load_data()?;
    let features = extract_all(&data.cycles)?;
    let header = ctx.header()?;
    let names = attribute_names();

    let table = feature_table_csv(&features);
    ctx.write_artifact("features.csv", &format!("{header}{table}"))?;

    let rows: Vec<Vec<f64>> = features.iter().map(|f| f.values.clone()).collect();
    let corr = correlation_matrix(&rows)?;
    let mut text = format!("{header}attribute,{}\n", names.join(","));
    for (i, name) in names.iter().enumerate() {
        text.push_str(name);
        for j in 0..corr.cols() {
            text.push_str(&format!(",{}", corr.get(i, j)));
        }
        text.push('\n');
    }
    ctx.write_artifact("correlation.csv", &text)?;

    for (attribute, name) in names.iter().enumerate() {
        let hist = histogram(&rows, attribute, HISTOGRAM_BINS)?;
        let mut text = format!("{header}bin_low,bin_high,count\n");
        for (b, count) in hist.counts.iter().enumerate() {
            text.push_str(&format!("{},{},{count}\n", hist.edges[b], hist.edges[b + 1]));
        }
        ctx.write_artifact(&format!("histograms/{name}.csv"), &text)?;
    }

    println!(
        "wrote features for {} cycles ({} attributes) to {}",
        features.len(),
        names.len(),
        ctx.out.display()
    );
    Ok(())
}

/// Fits and calibrates one detector on the configured split and saves
/// it as a versioned model file.
pub fn train(ctx: &Context, kind: DetectorKind) -> Result<()> {
    let features = load_features(&ctx.config)?;
    let parts = split(&features, &ctx.config.split_spec())?;
    let configs = ctx.config.detector_configs()?;
    let config = configs
        .into_iter()
        .find(|c| c.kind() == kind)
        .expect("all kinds configured");

    let trained = TrainedDetector::fit(&config, &parts.train)?;
    let fitted = trained.calibrate(calibration_set(&config.policy, &parts))?;

    let path = ctx.out.join(format!("{}.model.json", kind.name()));
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)
            .map_err(|e| Error::io(format!("directory {}", parent.display()), e))?;
    }
    fitted.save(&path)?;
    println!(
        "trained {} on {} cycles, threshold {}; model at {}",
        kind.name(),
        parts.train.len(),
        fitted.threshold,
        path.display()
    );
    Ok(())
}

/// Loads a saved model, rebuilds the configured split, and writes the
/// per-cycle scores and labels for its test set.
pub fn score(ctx: &Context, model_path: &Path) -> Result<()> {
    let fitted = FittedDetector::load(model_path)?;
    let features = load_features(&ctx.config)?;
    let parts = split(&features, &ctx.config.split_spec())?;
    let reports = fitted.predict(&parts.test)?;

    let header = ctx.header()?;
    let name = format!("{}.scores.csv", fitted.kind().name());
    let path = ctx.write_artifact(&name, &format!("{header}{}", score_csv(&reports)))?;

    let flagged = reports
        .iter()
        .filter(|r| r.predicted == Label::Anomaly)
        .count();
    println!(
        "scored {} test cycles with {} ({} flagged); scores at {}",
        reports.len(),
        fitted.kind().name(),
        flagged,
        path.display()
    );
    Ok(())
}

/// Runs the configured detectors on the identical split, prints the
/// comparison table, and writes every artifact. Returns false when any
/// detector failed.
pub fn compare(ctx: &Context, models: Option<&[DetectorKind]>) -> Result<bool> {
    let features = load_features(&ctx.config)?;
    let mut configs = ctx.config.detector_configs()?;
    if let Some(keep) = models {
        configs.retain(|c| keep.contains(&c.kind()));
    }
    let header = ctx.header()?;

    let comparison = eval::compare(&features, &configs, &ctx.config.split_spec())?;
    println!(
        "split: {} train / {} validation ({} with labeled anomalies) / {} test",
        comparison.split.train,
        comparison.split.validation,
        comparison.split.dae_validation,
        comparison.split.test
    );
    print!("{}", metric_table(&comparison.metric_rows()));

    ctx.write_artifact(
        "metrics.csv",
        &format!("{header}{}", metric_csv(&comparison.metric_rows())),
    )?;
    ctx.write_artifact(
        "confusion.csv",
        &format!("{header}{}", confusion_csv(&comparison.confusion_entries())),
    )?;

    let helm_ran = comparison
        .outcomes
        .iter()
        .any(|m| m.kind == DetectorKind::Helm && m.outcome.is_ok());
    if helm_ran {
        ctx.write_artifact(
            "helm_ratios.csv",
            &format!("{header}{}", ratio_csv(&comparison.helm_ratios)),
        )?;
    }

    for m in &comparison.outcomes {
        if let Ok(outcome) = &m.outcome {
            ctx.write_artifact(
                &format!("scores/{}.csv", m.kind.name()),
                &format!("{header}{}", score_csv(&outcome.reports)),
            )?;
        }
    }

    let failures = comparison.failures();
    for (kind, message) in &failures {
        eprintln!("{kind} failed: {message}");
    }
    Ok(failures.is_empty())
}

/// Generates the configured synthetic dataset as real-schema files.
pub fn synth(ctx: &Context) -> Result<()> {
    let source = ctx.config.data.as_ref().and_then(|d| d.synthetic.as_ref());
    let spec = source.ok_or_else(|| {
        Error::argument("synth needs a synthetic data source in the configuration")
    })?;
    let data = generate_synthetic(
        spec.normal,
        spec.weak,
        spec.severe,
        spec.seed.unwrap_or(ctx.config.seed),
    );
    fs::create_dir_all(&ctx.out)
        .map_err(|e| Error::io(format!("directory {}", ctx.out.display()), e))?;
    write_dataset(&data, &ctx.out)?;
    println!(
        "wrote {} cycles ({} normal, {} weak, {} severe) to {}",
        data.len(),
        spec.normal,
        spec.weak,
        spec.severe,
        ctx.out.display()
    );
    Ok(())
}

fn load_features(config: &RunConfig) -> Result<Vec<FeatureVector>> {
    let data = config.load_data()?;
    extract_all(&data.cycles)
}

fn score_csv(reports: &[ScoreReport]) -> String {
    let mut out = String::from("cycle,score,predicted,truth,fault\n");
    for r in reports {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.cycle, r.score, r.predicted, r.truth, r.fault
        ));
    }
    out
}
