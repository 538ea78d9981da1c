//! A deterministic, desk-scale model of a bytecode interpreter running on
//! a conventional 64-bit machine versus one with double-width hardware
//! references. It reproduces, in miniature, the performance pathologies
//! that appear when heap block sizes and frame-placement thresholds are
//! scaled by the reference width: allocator free-pointer degradation,
//! per-call frame spills, and a per-opcode instruction tax.
//!
//! The crate provides the machine and cost model ([`machine`]), a fixed-
//! arena mark/sweep block heap ([`heap`]), tagged objects ([`object`]),
//! a textual bytecode assembler ([`asm`]), the interpreter ([`vm`]), a
//! cost-driven sampling profiler ([`profiler`]), a benchmark suite
//! ([`bench`]), and the report harness ([`report`]).

pub mod asm;
pub mod bench;
pub mod config;
pub mod error;
pub mod heap;
pub mod machine;
pub mod object;
pub mod opcode;
pub mod profiler;
pub mod report;
pub mod vm;

pub use asm::{assemble, CodeObject, Program};
pub use error::{Error, Result};
pub use heap::{Arena, BlockHeap, BlockState, GcHooks, Root};
pub use machine::{
    bytes_per_block, max_state_bytes, CostModel, LayoutPolicy, MachineModel, Mode, Scale,
};
pub use object::{AllocEnv, BasicEnv, ObjKind, ObjectModel, Value};
pub use opcode::Opcode;
pub use profiler::{fold_diff, RuntimeLeaf, SampleSet, Sampler, Site, SiteHistogram};
pub use report::{geometric_mean, normalize, run_benchmark, run_matrix, RunConfig, RunMetrics};
pub use vm::{frame_placement, Interpreter, Placement, RunArtifacts, TaxSetting, VmConfig};
