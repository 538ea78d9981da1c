//! Deterministic sampling profiler driven by modeled cost. Produces
//! folded stacks for flame-graph tooling, per-site histograms for the
//! runtime functions, and signed differential folded stacks.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;

use serde::Serialize;

use crate::error::Result;

pub const DEFAULT_SAMPLE_INTERVAL: u64 = 65536;

/// Maximum number of stack frames kept in a signature; deeper stacks keep
/// the leaf-most frames.
pub const MAX_SIGNATURE_DEPTH: usize = 128;

/// Synthetic leaf appended when a sample lands inside runtime work.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum RuntimeLeaf {
    GcAlloc,
    GcCollect,
    ListSlice,
    ListAppend,
    FrameAlloc,
}

impl RuntimeLeaf {
    pub fn name(self) -> &'static str {
        match self {
            RuntimeLeaf::GcAlloc => "gc_alloc",
            RuntimeLeaf::GcCollect => "gc_collect",
            RuntimeLeaf::ListSlice => "list_slice",
            RuntimeLeaf::ListAppend => "list_append",
            RuntimeLeaf::FrameAlloc => "frame_alloc",
        }
    }

    pub const ALL: [RuntimeLeaf; 5] = [
        RuntimeLeaf::GcAlloc,
        RuntimeLeaf::GcCollect,
        RuntimeLeaf::ListSlice,
        RuntimeLeaf::ListAppend,
        RuntimeLeaf::FrameAlloc,
    ];
}

/// Loop positions inside the runtime functions, the analog of sampled
/// program-counter buckets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Site {
    ScanLoop,
    AtbWrite,
    Finalize,
    RetryAfterCollect,
    MarkStep,
    SweepStep,
    Body,
}

impl Site {
    pub fn name(self) -> &'static str {
        match self {
            Site::ScanLoop => "scan-loop",
            Site::AtbWrite => "atb-write",
            Site::Finalize => "finalize",
            Site::RetryAfterCollect => "retry-after-collect",
            Site::MarkStep => "mark-step",
            Site::SweepStep => "sweep-step",
            Site::Body => "body",
        }
    }
}

/// Builds a stack signature: semicolon-joined frames root to leaf, with
/// the synthetic runtime leaf appended when present.
pub fn signature(frames: &[&str], leaf: Option<RuntimeLeaf>) -> String {
    let start = frames.len().saturating_sub(MAX_SIGNATURE_DEPTH);
    let mut sig = String::new();
    for (i, f) in frames[start..].iter().enumerate() {
        if i > 0 {
            sig.push(';');
        }
        sig.push_str(f);
    }
    if let Some(l) = leaf {
        if !sig.is_empty() {
            sig.push(';');
        }
        sig.push_str(l.name());
    }
    sig
}

/// Aggregated samples keyed by stack signature.
#[derive(Debug, Clone, Serialize)]
pub struct SampleSet {
    pub interval: u64,
    pub samples: BTreeMap<String, u64>,
}

impl SampleSet {
    pub fn total(&self) -> u64 {
        self.samples.values().sum()
    }

    /// Sum of samples whose signature ends in the given runtime leaf.
    pub fn leaf_total(&self, leaf: RuntimeLeaf) -> u64 {
        let name = leaf.name();
        self.samples
            .iter()
            .filter(|(sig, _)| {
                sig.as_str() == name || sig.ends_with(&format!(";{name}"))
            })
            .map(|(_, n)| n)
            .sum()
    }

    /// Emits `sig COUNT` lines sorted lexicographically by signature.
    pub fn write_folded(&self, sink: &mut dyn Write) -> Result<()> {
        for (sig, count) in &self.samples {
            writeln!(sink, "{sig} {count}")?;
        }
        Ok(())
    }

    pub fn folded_string(&self) -> String {
        let mut out = Vec::new();
        self.write_folded(&mut out).expect("write to Vec");
        String::from_utf8(out).expect("signatures are utf-8")
    }
}

/// Per-signature `sig BEFORE AFTER` lines over the union of both sets,
/// in the convention consumed by difffolded-style tooling.
pub fn fold_diff(before: &SampleSet, after: &SampleSet) -> String {
    let mut keys: Vec<&String> = before.samples.keys().collect();
    keys.extend(after.samples.keys());
    keys.sort();
    keys.dedup();
    let mut out = String::new();
    for sig in keys {
        let b = before.samples.get(sig).copied().unwrap_or(0);
        let a = after.samples.get(sig).copied().unwrap_or(0);
        writeln!(out, "{sig} {b} {a}").expect("write to String");
    }
    out
}

/// Per-(runtime function, site) sample counts.
#[derive(Debug, Clone, Default)]
pub struct SiteHistogram {
    pub counts: BTreeMap<(RuntimeLeaf, Site), u64>,
}

impl SiteHistogram {
    pub fn function_total(&self, leaf: RuntimeLeaf) -> u64 {
        self.counts
            .iter()
            .filter(|((l, _), _)| *l == leaf)
            .map(|(_, n)| n)
            .sum()
    }

    pub fn get(&self, leaf: RuntimeLeaf, site: Site) -> u64 {
        self.counts.get(&(leaf, site)).copied().unwrap_or(0)
    }
}

/// The sampler: advances a cost accumulator and records one stack sample
/// per interval boundary crossed.
pub struct Sampler {
    interval: u64,
    acc: u64,
    samples: BTreeMap<String, u64>,
    sites: SiteHistogram,
}

impl Sampler {
    pub fn new(interval: u64) -> Self {
        assert!(interval >= 1, "sample interval must be at least 1");
        Sampler {
            interval,
            acc: 0,
            samples: BTreeMap::new(),
            sites: SiteHistogram::default(),
        }
    }

    /// Charges `units` of cost. For each interval boundary crossed, queries
    /// the signature provider once and records that many samples of the
    /// same stack (and site, when inside runtime work).
    pub fn on_cost(
        &mut self,
        units: u64,
        sig: &mut dyn FnMut() -> String,
        site: Option<(RuntimeLeaf, Site)>,
    ) {
        self.acc += units;
        if self.acc < self.interval {
            return;
        }
        let crossings = self.acc / self.interval;
        self.acc %= self.interval;
        let signature = sig();
        *self.samples.entry(signature).or_insert(0) += crossings;
        if let Some(key) = site {
            *self.sites.counts.entry(key).or_insert(0) += crossings;
        }
    }

    pub fn sample_total(&self) -> u64 {
        self.samples.values().sum()
    }

    pub fn finish(self) -> (SampleSet, SiteHistogram) {
        (
            SampleSet {
                interval: self.interval,
                samples: self.samples,
            },
            self.sites,
        )
    }
}
