//! Benchmark suite: manifest loading, parameter injection, and the
//! generated call-heavy program.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::Deserialize;

use crate::asm::{assemble, Program};
use crate::error::{Error, Result};
use crate::vm::{Interpreter, RunArtifacts, VmConfig};

const FANNKUCH_SRC: &str =
    include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/../../benchmarks/fannkuch.vmasm"));
const NQUEENS_SRC: &str =
    include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/../../benchmarks/nqueens.vmasm"));
const SLICE_MICRO_SRC: &str =
    include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/../../benchmarks/slice_micro.vmasm"));
const CALLHEAVY_SRC: &str =
    include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/../../benchmarks/callheavy.vmasm"));
const INDEX_SRC: &str =
    include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/../../benchmarks/index.toml"));

#[derive(Debug, Clone)]
pub struct Benchmark {
    pub name: String,
    pub source: String,
    pub params: BTreeMap<String, i64>,
    /// Expected rendered result for the stored parameters.
    pub expected: String,
    pub tags: Vec<String>,
}

#[derive(Deserialize)]
struct Manifest {
    benchmark: Vec<ManifestEntry>,
}

#[derive(Deserialize)]
struct ManifestEntry {
    name: String,
    source: String,
    expected: String,
    #[serde(default)]
    tags: Vec<String>,
    #[serde(default)]
    params: BTreeMap<String, i64>,
}

fn parse_manifest(text: &str, read_source: impl Fn(&str) -> Result<String>) -> Result<Vec<Benchmark>> {
    let manifest: Manifest =
        toml::from_str(text).map_err(|e| Error::Config(format!("benchmark manifest: {e}")))?;
    manifest
        .benchmark
        .into_iter()
        .map(|e| {
            Ok(Benchmark {
                source: read_source(&e.source)?,
                name: e.name,
                params: e.params,
                expected: e.expected,
                tags: e.tags,
            })
        })
        .collect()
}

/// The suite compiled into the binary.
pub fn builtin_benchmarks() -> Vec<Benchmark> {
    parse_manifest(INDEX_SRC, |file| match file {
        "fannkuch.vmasm" => Ok(FANNKUCH_SRC.to_string()),
        "nqueens.vmasm" => Ok(NQUEENS_SRC.to_string()),
        "slice_micro.vmasm" => Ok(SLICE_MICRO_SRC.to_string()),
        "callheavy.vmasm" => Ok(CALLHEAVY_SRC.to_string()),
        other => Err(Error::Config(format!("unknown builtin source `{other}`"))),
    })
    .expect("builtin manifest is valid")
}

pub fn builtin_benchmark(name: &str) -> Result<Benchmark> {
    builtin_benchmarks()
        .into_iter()
        .find(|b| b.name == name)
        .ok_or_else(|| Error::Config(format!("unknown benchmark `{name}`")))
}

/// Loads `index.toml` plus sources from a directory.
pub fn load_dir(dir: &Path) -> Result<Vec<Benchmark>> {
    let text = std::fs::read_to_string(dir.join("index.toml"))
        .map_err(|e| Error::Config(format!("cannot read {}/index.toml: {e}", dir.display())))?;
    parse_manifest(&text, |file| {
        std::fs::read_to_string(dir.join(file))
            .map_err(|e| Error::Config(format!("cannot read {}/{file}: {e}", dir.display())))
    })
}

/// Generates the call-heavy tree program. Each call to `node` makes one
/// child call at depth-1 and `width - 1` calls at depth-2, counting one
/// for itself; `slots` fixes every node frame's state-slot count so that
/// the placement policy, not the program, decides where frames live.
pub fn callheavy_source(width: usize, slots: usize) -> Result<String> {
    if width < 2 {
        return Err(Error::Config("callheavy width must be at least 2".into()));
    }
    // node uses 2 named locals and 4 stack slots; padding locals bring the
    // frame to exactly `slots` state slots.
    if !(6..=12).contains(&slots) {
        return Err(Error::Config(
            "callheavy slots must be between 6 and 12".into(),
        ));
    }
    let n_locals = slots - 4;
    let mut s = String::new();
    writeln!(
        s,
        "; callheavy: a call-tree microbenchmark. node(d) performs one call at\n\
         ; depth d-1 and {} at depth d-2, so the call count follows a Fibonacci-\n\
         ; style recurrence. Every node frame occupies exactly {} state slots.\n\
         ;\n\
         ; Globals set by the harness:\n\
         ;   depth   tree depth\n\
         ;\n\
         ; Result: total number of node calls.\n",
        width - 1,
        slots
    )
    .unwrap();
    writeln!(s, "func node 1 {n_locals}").unwrap();
    writeln!(s, "local d 0").unwrap();
    writeln!(s, "local t 1").unwrap();
    s.push_str(
        "LOAD_FAST d\n\
         PUSH_INT 1\n\
         LE\n\
         JUMP_IF_FALSE recur\n\
         PUSH_INT 1\n\
         RET\n\
         recur:\n\
         PUSH_INT 1\n\
         STORE_FAST t\n",
    );
    for child in 0..width {
        let drop = if child == 0 { 1 } else { 2 };
        writeln!(
            s,
            "LOAD_FAST t\n\
             LOAD_GLOBAL node\n\
             LOAD_FAST d\n\
             PUSH_INT {drop}\n\
             SUB\n\
             CALL 1\n\
             ADD\n\
             STORE_FAST t"
        )
        .unwrap();
    }
    s.push_str(
        "LOAD_FAST t\n\
         RET\n\
         \n\
         func main 0 0\n\
         LOAD_GLOBAL node\n\
         LOAD_GLOBAL depth\n\
         CALL 1\n\
         RET\n",
    );
    Ok(s)
}

impl Benchmark {
    /// Assembles the program, regenerating structural sources from the
    /// current parameters where applicable.
    pub fn program(&self) -> Result<Program> {
        if self.name == "callheavy" {
            let width = *self.params.get("width").unwrap_or(&2) as usize;
            let slots = *self.params.get("slots").unwrap_or(&12) as usize;
            assemble(&callheavy_source(width, slots)?)
        } else {
            assemble(&self.source)
        }
    }

    /// Builds an interpreter with every parameter bound as a global.
    pub fn instantiate(&self, config: VmConfig) -> Result<Interpreter> {
        let program = self.program()?;
        let mut interp = Interpreter::new(config, program)?;
        for (k, v) in &self.params {
            interp.set_global_int(k, *v);
        }
        Ok(interp)
    }

    /// Runs to completion and checks the rendered result against the
    /// expected value.
    pub fn run(&self, config: VmConfig) -> Result<RunArtifacts> {
        let mut interp = self.instantiate(config)?;
        let result = interp.run_main()?;
        let artifacts = interp.finish(result);
        if artifacts.rendered_result != self.expected {
            return Err(Error::BenchMismatch {
                bench: self.name.clone(),
                got: artifacts.rendered_result,
                want: self.expected.clone(),
            });
        }
        Ok(artifacts)
    }

    pub fn with_params(mut self, params: &[(&str, i64)]) -> Benchmark {
        for (k, v) in params {
            self.params.insert((*k).to_string(), *v);
        }
        self
    }

    pub fn with_expected(mut self, expected: impl Into<String>) -> Benchmark {
        self.expected = expected.into();
        self
    }
}
