//! Simulated machine description: word and reference widths, the sizing
//! policies under test, and the per-opcode instruction-cost tables.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::opcode::{Opcode, ALL_OPCODES};

/// Cost units charged per free-run search-loop iteration in the allocator.
pub const SCAN_STEP_COST: u64 = 4;
/// Cost units charged per collector mark or sweep step.
pub const GC_STEP_COST: u64 = 2;
/// Cost units charged per allocation-table block write (head or tail).
pub const ATB_WRITE_COST: u64 = 2;
/// Fixed per-allocation bookkeeping cost (rounding, stats, header setup).
pub const ALLOC_FINALIZE_COST: u64 = 8;
/// Fixed cost charged when an allocation retries after a collection.
pub const RETRY_COST: u64 = 4;
/// Fixed cost of routing a spilled frame through the heap allocator.
pub const FRAME_ALLOC_COST: u64 = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Hybrid,
    Purecap,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Hybrid => "hybrid",
            Mode::Purecap => "purecap",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hybrid" => Ok(Mode::Hybrid),
            "purecap" => Ok(Mode::Purecap),
            other => Err(Error::Config(format!("unknown mode `{other}`"))),
        }
    }
}

/// Word and reference widths of the simulated machine.
///
/// The word is always 8 bytes; references are 8 bytes in hybrid mode and
/// 16 bytes in purecap mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MachineModel {
    pub name: Mode,
    pub word_bytes: usize,
    pub ref_bytes: usize,
}

impl MachineModel {
    pub fn hybrid() -> Self {
        MachineModel {
            name: Mode::Hybrid,
            word_bytes: 8,
            ref_bytes: 8,
        }
    }

    pub fn purecap() -> Self {
        MachineModel {
            name: Mode::Purecap,
            word_bytes: 8,
            ref_bytes: 16,
        }
    }

    pub fn for_mode(mode: Mode) -> Self {
        match mode {
            Mode::Hybrid => Self::hybrid(),
            Mode::Purecap => Self::purecap(),
        }
    }
}

/// Whether a sizing parameter scales with the machine word or with the
/// reference width.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    #[serde(rename = "word")]
    WordScaled,
    #[serde(rename = "ref")]
    RefScaled,
}

impl fmt::Display for Scale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scale::WordScaled => "word",
            Scale::RefScaled => "ref",
        })
    }
}

impl FromStr for Scale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "word" => Ok(Scale::WordScaled),
            "ref" => Ok(Scale::RefScaled),
            other => Err(Error::Config(format!("unknown scale `{other}`"))),
        }
    }
}

/// The two independently settable sizing choices: how the heap block size
/// and the on-stack frame threshold scale. The four combinations form the
/// experiment matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayoutPolicy {
    pub block_scale: Scale,
    pub frame_scale: Scale,
}

impl LayoutPolicy {
    pub fn new(block_scale: Scale, frame_scale: Scale) -> Self {
        LayoutPolicy {
            block_scale,
            frame_scale,
        }
    }
}

/// Heap block size in bytes: four words, or four references when the block
/// size is scaled by reference width.
pub fn bytes_per_block(model: &MachineModel, policy: &LayoutPolicy) -> usize {
    match policy.block_scale {
        Scale::WordScaled => 4 * model.word_bytes,
        Scale::RefScaled => 4 * model.ref_bytes,
    }
}

/// Largest frame (in bytes) that stays on the native stack: sixteen words,
/// or sixteen references under the reference-scaled policy.
pub fn max_state_bytes(model: &MachineModel, policy: &LayoutPolicy) -> usize {
    match policy.frame_scale {
        Scale::WordScaled => 16 * model.word_bytes,
        Scale::RefScaled => 16 * model.ref_bytes,
    }
}

/// Per-opcode cost tables for both modes.
///
/// `body` holds the per-opcode execution cost added to the fixed dispatch
/// cost. `tax` holds the extra units an opcode costs in purecap mode;
/// `patch_share` is the portion of each tax removed by the "patched"
/// variant. The sum of all patch shares equals `patch_savings`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostModel {
    pub dispatch_cost: u64,
    pub body_cost: BTreeMap<Opcode, u64>,
    pub purecap_tax: BTreeMap<Opcode, u64>,
    pub patch_share: BTreeMap<Opcode, u64>,
    pub patch_savings: u64,
}

impl CostModel {
    pub fn default_tables() -> Self {
        use Opcode::*;
        let body: &[(Opcode, u64)] = &[
            (PUSH_CONST, 1),
            (PUSH_INT, 1),
            (LOAD_FAST, 1),
            (STORE_FAST, 1),
            (LOAD_GLOBAL, 2),
            (STORE_GLOBAL, 2),
            (POP, 1),
            (DUP, 1),
            (SWAP, 1),
            (ADD, 2),
            (SUB, 2),
            (MUL, 2),
            (FLOORDIV, 2),
            (MOD, 2),
            (NEG, 2),
            (EQ, 2),
            (NE, 2),
            (LT, 2),
            (LE, 2),
            (GT, 2),
            (GE, 2),
            (JUMP, 2),
            // Conditional jumps test a value tag before branching.
            (JUMP_IF_FALSE, 3),
            (JUMP_IF_TRUE, 3),
            (CALL, 12),
            (RET, 6),
            (BUILD_LIST, 8),
            (LIST_APPEND_OP, 4),
            (INDEX_GET, 4),
            (INDEX_SET, 4),
            (LIST_SLICE, 10),
            (LEN, 2),
        ];
        // Tax classes: constant loads, compare-against-constant shapes,
        // tag tests, paired load/store shapes, and call/return linkage.
        // `patch_share` is the removable (codegen-induced) part of each tax;
        // the remainder is structural and survives patching.
        let tax: &[(Opcode, u64, u64)] = &[
            (PUSH_CONST, 2, 2),
            (PUSH_INT, 2, 2),
            (EQ, 2, 2),
            (NE, 2, 2),
            (LT, 2, 2),
            (LE, 2, 2),
            (GT, 2, 2),
            (GE, 2, 2),
            (JUMP_IF_FALSE, 3, 1),
            (JUMP_IF_TRUE, 3, 1),
            (INDEX_GET, 2, 1),
            (INDEX_SET, 2, 0),
            (CALL, 6, 0),
            (RET, 4, 0),
        ];
        let model = CostModel {
            dispatch_cost: 7,
            body_cost: body.iter().copied().collect(),
            purecap_tax: tax.iter().map(|&(op, t, _)| (op, t)).collect(),
            patch_share: tax.iter().map(|&(op, _, s)| (op, s)).collect(),
            patch_savings: tax.iter().map(|&(_, _, s)| s).sum(),
        };
        model.validate().expect("default cost tables are valid");
        model
    }

    /// Checks table consistency: every opcode priced, shares within taxes,
    /// simple-opcode bodies in the 1..=4 band, shares summing to
    /// `patch_savings`.
    pub fn validate(&self) -> Result<()> {
        for op in ALL_OPCODES {
            let body = *self
                .body_cost
                .get(&op)
                .ok_or(Error::UnknownOpcode(op))?;
            if body == 0 {
                return Err(Error::Config(format!("zero body cost for {op}")));
            }
            if Self::is_simple(op) && !(1..=4).contains(&body) {
                return Err(Error::Config(format!(
                    "body cost {body} for simple opcode {op} outside 1..=4"
                )));
            }
        }
        for (op, share) in &self.patch_share {
            let tax = self.purecap_tax.get(op).copied().unwrap_or(0);
            if *share > tax {
                return Err(Error::Config(format!(
                    "patch share {share} for {op} exceeds its tax {tax}"
                )));
            }
        }
        let total: u64 = self.patch_share.values().sum();
        if total != self.patch_savings {
            return Err(Error::Config(format!(
                "patch shares sum to {total}, expected patch_savings {}",
                self.patch_savings
            )));
        }
        Ok(())
    }

    fn is_simple(op: Opcode) -> bool {
        !matches!(
            op,
            Opcode::CALL
                | Opcode::RET
                | Opcode::BUILD_LIST
                | Opcode::LIST_SLICE
                | Opcode::LIST_APPEND_OP
        )
    }

    /// Total cost of one bytecode instruction: dispatch plus body, plus the
    /// purecap tax (less the opcode's patch share when patched).
    pub fn opcode_cost(&self, model: &MachineModel, op: Opcode, patched: bool) -> Result<u64> {
        let body = *self
            .body_cost
            .get(&op)
            .ok_or(Error::UnknownOpcode(op))?;
        let mut cost = self.dispatch_cost + body;
        if model.name == Mode::Purecap {
            let tax = self.purecap_tax.get(&op).copied().unwrap_or(0);
            let share = if patched {
                self.patch_share.get(&op).copied().unwrap_or(0)
            } else {
                0
            };
            cost += tax - share.min(tax);
        }
        Ok(cost)
    }
}

impl Default for CostModel {
    fn default() -> Self {
        Self::default_tables()
    }
}
