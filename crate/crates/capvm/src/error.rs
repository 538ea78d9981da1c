use thiserror::Error;

use crate::opcode::Opcode;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("unknown opcode in cost table: {0}")]
    UnknownOpcode(Opcode),

    #[error("heap: total_bytes {total} is not a multiple of block_bytes {block}")]
    HeapGeometry { total: usize, block: usize },

    #[error("heap: zero-byte allocation")]
    ZeroAlloc,

    #[error("heap exhausted: no run of {blocks} free blocks after collection")]
    HeapExhausted { blocks: usize },

    #[error("heap consistency: {0}")]
    HeapConsistency(String),

    #[error("assembly error at line {line}: {msg}")]
    Asm { line: usize, msg: String },

    #[error("vm: {0}")]
    Vm(String),

    #[error("vm: index {index} out of range for length {len}")]
    IndexRange { index: i64, len: usize },

    #[error("vm: step limit of {0} cost units exceeded")]
    StepLimit(u64),

    #[error("benchmark {bench}: result {got} does not match expected {want}")]
    BenchMismatch {
        bench: String,
        got: String,
        want: String,
    },

    #[error("report: {0}")]
    Report(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
