//! The bytecode instruction set.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[allow(non_camel_case_types)]
pub enum Opcode {
    PUSH_CONST,
    PUSH_INT,
    LOAD_FAST,
    STORE_FAST,
    LOAD_GLOBAL,
    STORE_GLOBAL,
    POP,
    DUP,
    SWAP,
    ADD,
    SUB,
    MUL,
    FLOORDIV,
    MOD,
    NEG,
    EQ,
    NE,
    LT,
    LE,
    GT,
    GE,
    JUMP,
    JUMP_IF_FALSE,
    JUMP_IF_TRUE,
    CALL,
    RET,
    BUILD_LIST,
    LIST_APPEND_OP,
    INDEX_GET,
    INDEX_SET,
    LIST_SLICE,
    LEN,
}

pub const ALL_OPCODES: [Opcode; 32] = [
    Opcode::PUSH_CONST,
    Opcode::PUSH_INT,
    Opcode::LOAD_FAST,
    Opcode::STORE_FAST,
    Opcode::LOAD_GLOBAL,
    Opcode::STORE_GLOBAL,
    Opcode::POP,
    Opcode::DUP,
    Opcode::SWAP,
    Opcode::ADD,
    Opcode::SUB,
    Opcode::MUL,
    Opcode::FLOORDIV,
    Opcode::MOD,
    Opcode::NEG,
    Opcode::EQ,
    Opcode::NE,
    Opcode::LT,
    Opcode::LE,
    Opcode::GT,
    Opcode::GE,
    Opcode::JUMP,
    Opcode::JUMP_IF_FALSE,
    Opcode::JUMP_IF_TRUE,
    Opcode::CALL,
    Opcode::RET,
    Opcode::BUILD_LIST,
    Opcode::LIST_APPEND_OP,
    Opcode::INDEX_GET,
    Opcode::INDEX_SET,
    Opcode::LIST_SLICE,
    Opcode::LEN,
];

impl Opcode {
    pub fn name(self) -> &'static str {
        match self {
            Opcode::PUSH_CONST => "PUSH_CONST",
            Opcode::PUSH_INT => "PUSH_INT",
            Opcode::LOAD_FAST => "LOAD_FAST",
            Opcode::STORE_FAST => "STORE_FAST",
            Opcode::LOAD_GLOBAL => "LOAD_GLOBAL",
            Opcode::STORE_GLOBAL => "STORE_GLOBAL",
            Opcode::POP => "POP",
            Opcode::DUP => "DUP",
            Opcode::SWAP => "SWAP",
            Opcode::ADD => "ADD",
            Opcode::SUB => "SUB",
            Opcode::MUL => "MUL",
            Opcode::FLOORDIV => "FLOORDIV",
            Opcode::MOD => "MOD",
            Opcode::NEG => "NEG",
            Opcode::EQ => "EQ",
            Opcode::NE => "NE",
            Opcode::LT => "LT",
            Opcode::LE => "LE",
            Opcode::GT => "GT",
            Opcode::GE => "GE",
            Opcode::JUMP => "JUMP",
            Opcode::JUMP_IF_FALSE => "JUMP_IF_FALSE",
            Opcode::JUMP_IF_TRUE => "JUMP_IF_TRUE",
            Opcode::CALL => "CALL",
            Opcode::RET => "RET",
            Opcode::BUILD_LIST => "BUILD_LIST",
            Opcode::LIST_APPEND_OP => "LIST_APPEND_OP",
            Opcode::INDEX_GET => "INDEX_GET",
            Opcode::INDEX_SET => "INDEX_SET",
            Opcode::LIST_SLICE => "LIST_SLICE",
            Opcode::LEN => "LEN",
        }
    }

    /// True for opcodes whose argument is a jump target label.
    pub fn is_jump(self) -> bool {
        matches!(
            self,
            Opcode::JUMP | Opcode::JUMP_IF_FALSE | Opcode::JUMP_IF_TRUE
        )
    }

    /// True for opcodes that take an immediate argument in the assembly text.
    pub fn has_arg(self) -> bool {
        matches!(
            self,
            Opcode::PUSH_CONST
                | Opcode::PUSH_INT
                | Opcode::LOAD_FAST
                | Opcode::STORE_FAST
                | Opcode::LOAD_GLOBAL
                | Opcode::STORE_GLOBAL
                | Opcode::JUMP
                | Opcode::JUMP_IF_FALSE
                | Opcode::JUMP_IF_TRUE
                | Opcode::CALL
                | Opcode::BUILD_LIST
        )
    }
}

impl fmt::Display for Opcode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Opcode {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        ALL_OPCODES
            .iter()
            .copied()
            .find(|op| op.name() == s)
            .ok_or(())
    }
}
