//! Report harness: runs benchmarks under labeled configurations and emits
//! metrics as JSON, CSV, or markdown plus folded stack files.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use crate::bench::Benchmark;
use crate::error::{Error, Result};
use crate::heap::AllocStats;
use crate::machine::{Mode, Scale};
use crate::profiler::{fold_diff, RuntimeLeaf, SampleSet, SiteHistogram};
use crate::vm::{RunArtifacts, TaxSetting, VmConfig};

/// One labeled run shape: `MODE.BLOCK.FRAME.TAX`, e.g. `purecap.word.ref.on`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RunConfig {
    pub mode: Mode,
    pub block_scale: Scale,
    pub frame_scale: Scale,
    pub tax: TaxSetting,
}

impl RunConfig {
    pub fn new(mode: Mode, block_scale: Scale, frame_scale: Scale, tax: TaxSetting) -> Self {
        RunConfig {
            mode,
            block_scale,
            frame_scale,
            tax,
        }
    }

    pub fn label(&self) -> String {
        format!(
            "{}.{}.{}.{}",
            self.mode, self.block_scale, self.frame_scale, self.tax
        )
    }

    /// Parses a `MODE.BLOCK.FRAME.TAX` label.
    pub fn parse(s: &str) -> Result<RunConfig> {
        let parts: Vec<&str> = s.split('.').collect();
        if parts.len() != 4 {
            return Err(Error::Config(format!(
                "bad run config `{s}`: expected MODE.BLOCK.FRAME.TAX"
            )));
        }
        Ok(RunConfig {
            mode: parts[0].parse()?,
            block_scale: parts[1].parse()?,
            frame_scale: parts[2].parse()?,
            tax: parts[3].parse()?,
        })
    }

    /// The full 2x2x2 policy matrix at a fixed tax setting.
    pub fn matrix(tax: TaxSetting) -> Vec<RunConfig> {
        let mut out = Vec::new();
        for mode in [Mode::Hybrid, Mode::Purecap] {
            for block in [Scale::WordScaled, Scale::RefScaled] {
                for frame in [Scale::WordScaled, Scale::RefScaled] {
                    out.push(RunConfig::new(mode, block, frame, tax));
                }
            }
        }
        out
    }

    /// Applies this run shape over a base configuration's other knobs.
    pub fn vm_config(&self, base: &VmConfig) -> VmConfig {
        let mut c = base.clone();
        c.mode = self.mode;
        c.policy.block_scale = self.block_scale;
        c.policy.frame_scale = self.frame_scale;
        c.tax = self.tax;
        c
    }
}

fn sites_as_maps(sites: &SiteHistogram) -> BTreeMap<String, BTreeMap<String, u64>> {
    let mut out: BTreeMap<String, BTreeMap<String, u64>> = BTreeMap::new();
    for ((leaf, site), n) in &sites.counts {
        out.entry(leaf.name().to_string())
            .or_default()
            .insert(site.name().to_string(), *n);
    }
    out
}

/// The full metrics payload for one benchmark run.
#[derive(Debug, Clone, Serialize)]
pub struct RunMetrics {
    pub bench: String,
    pub config: RunConfig,
    pub config_label: String,
    pub result: String,
    pub expected: String,
    pub total_cost: u64,
    pub dispatch_count: u64,
    pub opcode_cost: BTreeMap<String, u64>,
    pub runtime_cost: BTreeMap<String, u64>,
    pub sample_interval: u64,
    pub sample_total: u64,
    pub samples_by_leaf: BTreeMap<String, u64>,
    pub sites: BTreeMap<String, BTreeMap<String, u64>>,
    pub heap: AllocStats,
    pub total_allocs: u64,
    pub object_allocs: u64,
    pub frame_heap_allocs: u64,
    /// Reserved for hardware measurements; always null in the simulator.
    pub wall_clock_ns: Option<u64>,
    /// Reserved for hardware measurements; always null in the simulator.
    pub cache_miss_rate: Option<f64>,
}

impl RunMetrics {
    pub fn from_artifacts(bench: &str, config: RunConfig, a: &RunArtifacts) -> RunMetrics {
        let mut samples_by_leaf = BTreeMap::new();
        for leaf in RuntimeLeaf::ALL {
            samples_by_leaf.insert(leaf.name().to_string(), a.samples.leaf_total(leaf));
        }
        let frame_heap_allocs: u64 = a.stats.frame_heap_allocs_by_blocks.values().sum();
        RunMetrics {
            bench: bench.to_string(),
            config,
            config_label: config.label(),
            result: a.rendered_result.clone(),
            expected: String::new(),
            total_cost: a.ledger.total_cost,
            dispatch_count: a.ledger.dispatch_count,
            opcode_cost: a
                .ledger
                .per_opcode_cost
                .iter()
                .map(|(op, c)| (op.to_string(), *c))
                .collect(),
            runtime_cost: a
                .ledger
                .runtime_cost
                .iter()
                .map(|(k, v)| (k.to_string(), *v))
                .collect(),
            sample_interval: a.samples.interval,
            sample_total: a.samples.total(),
            samples_by_leaf,
            sites: sites_as_maps(&a.sites),
            heap: a.stats.clone(),
            total_allocs: a.stats.total_allocs(),
            object_allocs: a.stats.total_allocs() - frame_heap_allocs,
            frame_heap_allocs,
            wall_clock_ns: None,
            cache_miss_rate: None,
        }
    }

    /// Scalar summary columns shared by CSV and normalization.
    pub fn scalar_fields(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("total_cost", self.total_cost as f64),
            ("dispatch_count", self.dispatch_count as f64),
            ("sample_total", self.sample_total as f64),
            ("total_allocs", self.total_allocs as f64),
            ("object_allocs", self.object_allocs as f64),
            ("frame_heap_allocs", self.frame_heap_allocs as f64),
            ("search_iterations", self.heap.search_iterations as f64),
            ("collections", self.heap.collections as f64),
            ("peak_blocks_in_use", self.heap.peak_blocks_in_use as f64),
        ]
    }
}

/// Runs one benchmark under one run shape, validating the result.
pub fn run_benchmark(
    bench: &Benchmark,
    config: RunConfig,
    base: &VmConfig,
) -> Result<(RunMetrics, SampleSet)> {
    let artifacts = bench.run(config.vm_config(base))?;
    let mut metrics = RunMetrics::from_artifacts(&bench.name, config, &artifacts);
    metrics.expected = bench.expected.clone();
    Ok((metrics, artifacts.samples))
}

/// Runs a benchmark across several run shapes.
pub fn run_matrix(
    bench: &Benchmark,
    configs: &[RunConfig],
    base: &VmConfig,
) -> Result<Vec<(RunMetrics, SampleSet)>> {
    configs
        .iter()
        .map(|c| run_benchmark(bench, *c, base))
        .collect()
}

/// Elementwise ratios `probe / baseline` over the scalar summary fields.
/// Fields that are zero in the baseline are skipped unless the probe is
/// also nonzero there, which is an error (the ratio is undefined).
pub fn normalize(baseline: &RunMetrics, probe: &RunMetrics) -> Result<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    for ((name, b), (_, p)) in baseline.scalar_fields().iter().zip(probe.scalar_fields()) {
        if *b == 0.0 {
            if p != 0.0 {
                return Err(Error::Report(format!(
                    "cannot normalize `{name}`: baseline is zero but probe is {p}"
                )));
            }
            continue;
        }
        out.insert(name.to_string(), p / b);
    }
    Ok(out)
}

/// Geometric mean via the exponential of the mean logarithm. Requires a
/// nonempty slice of positive values.
pub fn geometric_mean(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Report("geometric mean of an empty set".into()));
    }
    let mut sum = 0.0;
    for v in values {
        if *v <= 0.0 || !v.is_finite() {
            return Err(Error::Report(format!(
                "geometric mean requires positive finite values, got {v}"
            )));
        }
        sum += v.ln();
    }
    Ok((sum / values.len() as f64).exp())
}

pub fn to_json(metrics: &RunMetrics) -> Result<String> {
    serde_json::to_string_pretty(metrics).map_err(|e| Error::Report(e.to_string()))
}

const CSV_FIXED: [&str; 4] = ["bench", "config", "result", "expected"];

pub fn to_csv(rows: &[RunMetrics]) -> String {
    let mut out = String::new();
    out.push_str(&CSV_FIXED.join(","));
    if let Some(first) = rows.first() {
        for (name, _) in first.scalar_fields() {
            out.push(',');
            out.push_str(name);
        }
    }
    out.push('\n');
    for m in rows {
        out.push_str(&format!(
            "{},{},{},{}",
            m.bench, m.config_label, m.result, m.expected
        ));
        for (_, v) in m.scalar_fields() {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    out
}

pub fn to_markdown(rows: &[RunMetrics]) -> String {
    let mut out = String::new();
    let Some(first) = rows.first() else {
        return out;
    };
    out.push_str(&format!("# {}\n\n", first.bench));
    out.push_str("| config | result |");
    for (name, _) in first.scalar_fields() {
        out.push_str(&format!(" {name} |"));
    }
    out.push('\n');
    out.push_str("|---|---|");
    for _ in first.scalar_fields() {
        out.push_str("---|");
    }
    out.push('\n');
    for m in rows {
        out.push_str(&format!("| {} | {} |", m.config_label, m.result));
        for (_, v) in m.scalar_fields() {
            out.push_str(&format!(" {v} |"));
        }
        out.push('\n');
    }
    out
}

pub fn run_stem(bench: &str, config: RunConfig) -> String {
    format!("{bench}.{}", config.label())
}

/// Writes `STEM.metrics.json` and `STEM.folded.txt` into `dir`.
pub fn write_run_files(
    dir: &Path,
    metrics: &RunMetrics,
    samples: &SampleSet,
) -> Result<(std::path::PathBuf, std::path::PathBuf)> {
    std::fs::create_dir_all(dir)?;
    let stem = run_stem(&metrics.bench, metrics.config);
    let json_path = dir.join(format!("{stem}.metrics.json"));
    std::fs::write(&json_path, to_json(metrics)?)?;
    let folded_path = dir.join(format!("{stem}.folded.txt"));
    std::fs::write(&folded_path, samples.folded_string())?;
    Ok((json_path, folded_path))
}

/// The `BENCH.BEFORE.vs.AFTER` stem used for differential outputs.
pub fn fold_label_pair(bench: &str, before: RunConfig, after: RunConfig) -> String {
    format!("{bench}.{}.vs.{}", before.label(), after.label())
}

/// Writes a `BENCH.BEFORE_LABEL.vs.AFTER_LABEL.diff-folded.txt` file.
pub fn write_diff_file(
    dir: &Path,
    bench: &str,
    before_cfg: RunConfig,
    before: &SampleSet,
    after_cfg: RunConfig,
    after: &SampleSet,
) -> Result<std::path::PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(format!(
        "{}.diff-folded.txt",
        fold_label_pair(bench, before_cfg, after_cfg)
    ));
    std::fs::write(&path, fold_diff(before, after))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_roundtrip() {
        for cfg in RunConfig::matrix(TaxSetting::On) {
            assert_eq!(RunConfig::parse(&cfg.label()).unwrap(), cfg);
        }
        assert_eq!(
            RunConfig::parse("purecap.word.ref.patched").unwrap(),
            RunConfig::new(
                Mode::Purecap,
                Scale::WordScaled,
                Scale::RefScaled,
                TaxSetting::Patched
            )
        );
        assert!(RunConfig::parse("purecap.word.ref").is_err());
        assert!(RunConfig::parse("purecap.word.ref.maybe").is_err());
    }

    #[test]
    fn matrix_is_eight_distinct_shapes() {
        let m = RunConfig::matrix(TaxSetting::On);
        assert_eq!(m.len(), 8);
        let labels: std::collections::BTreeSet<String> =
            m.iter().map(|c| c.label()).collect();
        assert_eq!(labels.len(), 8);
    }

    #[test]
    fn geometric_mean_oracle() {
        // Oracle: direct nth root of the product for small sets.
        let vals = [2.0, 8.0];
        let gm = geometric_mean(&vals).unwrap();
        assert!((gm - 4.0).abs() < 1e-12);
        let vals = [1.0, 3.0, 9.0];
        let gm = geometric_mean(&vals).unwrap();
        assert!((gm - (27.0f64).powf(1.0 / 3.0)).abs() < 1e-12);
        assert!(geometric_mean(&[]).is_err());
        assert!(geometric_mean(&[1.0, 0.0]).is_err());
        assert!(geometric_mean(&[1.0, -2.0]).is_err());
    }
}
