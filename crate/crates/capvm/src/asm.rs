//! Textual bytecode assembler.
//!
//! Grammar (one item per line, `;` starts a comment):
//!
//! ```text
//! const NAME INT            file-scope constant pool entry
//! const NAME "TEXT"         string pool entry
//! func NAME N_ARGS N_LOCALS start of a function body
//! local NAME INDEX          names a local slot (aliases for LOAD/STORE_FAST)
//! LABEL:                    jump target
//! OPCODE [ARG]              one instruction
//! ```
//!
//! The assembler resolves labels, interns global names, verifies stack
//! balance at every join point, and computes `max_stack`.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::opcode::Opcode;

#[derive(Debug, Clone, PartialEq)]
pub enum Const {
    Int(i64),
    Str(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Instr {
    pub op: Opcode,
    pub arg: i64,
}

/// An assembled bytecode unit. `n_state = n_locals + max_stack` is the
/// frame slot count used by the placement policy.
#[derive(Debug, Clone)]
pub struct CodeObject {
    pub name: String,
    pub n_args: usize,
    pub n_locals: usize,
    pub max_stack: usize,
    pub code: Vec<Instr>,
}

impl CodeObject {
    pub fn n_state(&self) -> usize {
        self.n_locals + self.max_stack
    }
}

/// A whole assembled program: functions plus the shared constant and
/// global-name pools.
#[derive(Debug, Clone, Default)]
pub struct Program {
    pub funcs: Vec<CodeObject>,
    pub consts: Vec<Const>,
    pub names: Vec<String>,
}

impl Program {
    pub fn func_index(&self, name: &str) -> Option<usize> {
        self.funcs.iter().position(|f| f.name == name)
    }
}

fn err(line: usize, msg: impl Into<String>) -> Error {
    Error::Asm {
        line,
        msg: msg.into(),
    }
}

struct PendingFunc {
    name: String,
    n_args: usize,
    n_locals: usize,
    start_line: usize,
    locals: BTreeMap<String, usize>,
    labels: BTreeMap<String, usize>,
    // (instr index, label, line) fixups for jumps
    fixups: Vec<(usize, String, usize)>,
    code: Vec<Instr>,
}

pub fn assemble(source: &str) -> Result<Program> {
    let mut program = Program::default();
    let mut const_pool: BTreeMap<String, usize> = BTreeMap::new();
    let mut name_pool: BTreeMap<String, usize> = BTreeMap::new();
    let mut cur: Option<PendingFunc> = None;

    let finish =
        |program: &mut Program, f: PendingFunc| -> Result<()> {
            let mut code = f.code;
            for (at, label, line) in &f.fixups {
                let target = f
                    .labels
                    .get(label)
                    .ok_or_else(|| err(*line, format!("unknown label `{label}`")))?;
                code[*at].arg = *target as i64;
            }
            let max_stack = compute_max_stack(&f.name, &code, f.start_line)?;
            if f.n_args > f.n_locals {
                return Err(err(
                    f.start_line,
                    format!("function `{}` has n_args > n_locals", f.name),
                ));
            }
            program.funcs.push(CodeObject {
                name: f.name,
                n_args: f.n_args,
                n_locals: f.n_locals,
                max_stack,
                code,
            });
            Ok(())
        };

    for (lineno, raw) in source.lines().enumerate() {
        let line = lineno + 1;
        let text = raw.split(';').next().unwrap_or("").trim();
        if text.is_empty() {
            continue;
        }
        let mut parts = text.split_whitespace();
        let head = parts.next().unwrap();

        if head == "const" {
            let name = parts
                .next()
                .ok_or_else(|| err(line, "const needs a name"))?;
            let rest = text[text.find(name).unwrap() + name.len()..].trim();
            let value = if rest.starts_with('"') {
                let inner = rest
                    .strip_prefix('"')
                    .and_then(|r| r.strip_suffix('"'))
                    .ok_or_else(|| err(line, "unterminated string constant"))?;
                Const::Str(inner.to_string())
            } else {
                Const::Int(
                    rest.parse::<i64>()
                        .map_err(|_| err(line, format!("bad const value `{rest}`")))?,
                )
            };
            if const_pool.contains_key(name) {
                return Err(err(line, format!("duplicate const `{name}`")));
            }
            const_pool.insert(name.to_string(), program.consts.len());
            program.consts.push(value);
            continue;
        }

        if head == "func" {
            if let Some(f) = cur.take() {
                finish(&mut program, f)?;
            }
            let name = parts
                .next()
                .ok_or_else(|| err(line, "func needs a name"))?;
            let n_args: usize = parts
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| err(line, "func needs N_ARGS"))?;
            let n_locals: usize = parts
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| err(line, "func needs N_LOCALS"))?;
            if program.funcs.iter().any(|f| f.name == name) {
                return Err(err(line, format!("duplicate function `{name}`")));
            }
            cur = Some(PendingFunc {
                name: name.to_string(),
                n_args,
                n_locals,
                start_line: line,
                locals: BTreeMap::new(),
                labels: BTreeMap::new(),
                fixups: Vec::new(),
                code: Vec::new(),
            });
            continue;
        }

        let f = cur
            .as_mut()
            .ok_or_else(|| err(line, "instruction outside any func"))?;

        if head == "local" {
            let name = parts
                .next()
                .ok_or_else(|| err(line, "local needs a name"))?;
            let index: usize = parts
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| err(line, "local needs an index"))?;
            if index >= f.n_locals {
                return Err(err(
                    line,
                    format!("local `{name}` index {index} >= n_locals {}", f.n_locals),
                ));
            }
            f.locals.insert(name.to_string(), index);
            continue;
        }

        if let Some(label) = head.strip_suffix(':') {
            if parts.next().is_some() {
                return Err(err(line, "label must stand alone on its line"));
            }
            if f.labels.insert(label.to_string(), f.code.len()).is_some() {
                return Err(err(line, format!("duplicate label `{label}`")));
            }
            continue;
        }

        let op: Opcode = head
            .parse()
            .map_err(|_| err(line, format!("unknown opcode `{head}`")))?;
        let arg_text = parts.next();
        if parts.next().is_some() {
            return Err(err(line, "trailing tokens after instruction"));
        }
        let arg = match (op.has_arg(), arg_text) {
            (false, None) => 0,
            (false, Some(_)) => return Err(err(line, format!("{op} takes no argument"))),
            (true, None) => return Err(err(line, format!("{op} needs an argument"))),
            (true, Some(a)) => resolve_arg(
                op,
                a,
                line,
                f,
                &const_pool,
                &mut name_pool,
                &mut program.names,
            )?,
        };
        if op.is_jump() {
            // Placeholder until labels resolve.
            f.fixups.push((f.code.len(), arg_text.unwrap().to_string(), line));
            f.code.push(Instr { op, arg: 0 });
        } else {
            f.code.push(Instr { op, arg });
        }
    }

    if let Some(f) = cur.take() {
        finish(&mut program, f)?;
    }
    Ok(program)
}

#[allow(clippy::too_many_arguments)]
fn resolve_arg(
    op: Opcode,
    text: &str,
    line: usize,
    f: &PendingFunc,
    const_pool: &BTreeMap<String, usize>,
    name_pool: &mut BTreeMap<String, usize>,
    names: &mut Vec<String>,
) -> Result<i64> {
    match op {
        Opcode::PUSH_INT => text
            .parse::<i64>()
            .map_err(|_| err(line, format!("bad integer `{text}`"))),
        Opcode::PUSH_CONST => const_pool
            .get(text)
            .map(|&i| i as i64)
            .ok_or_else(|| err(line, format!("unknown const `{text}`"))),
        Opcode::LOAD_FAST | Opcode::STORE_FAST => {
            let index = if let Ok(n) = text.parse::<usize>() {
                n
            } else {
                *f.locals
                    .get(text)
                    .ok_or_else(|| err(line, format!("unknown local `{text}`")))?
            };
            if index >= f.n_locals {
                return Err(err(
                    line,
                    format!("local index {index} >= n_locals {}", f.n_locals),
                ));
            }
            Ok(index as i64)
        }
        Opcode::LOAD_GLOBAL | Opcode::STORE_GLOBAL => {
            let idx = *name_pool.entry(text.to_string()).or_insert_with(|| {
                names.push(text.to_string());
                names.len() - 1
            });
            Ok(idx as i64)
        }
        Opcode::CALL | Opcode::BUILD_LIST => text
            .parse::<u32>()
            .map(|n| n as i64)
            .map_err(|_| err(line, format!("bad count `{text}`"))),
        // Jumps are fixed up from labels.
        _ => Ok(0),
    }
}

/// (pops, pushes, has fallthrough successor)
fn stack_effect(i: Instr) -> (usize, usize, bool) {
    use Opcode::*;
    match i.op {
        PUSH_CONST | PUSH_INT | LOAD_FAST | LOAD_GLOBAL => (0, 1, true),
        DUP => (1, 2, true),
        STORE_FAST | STORE_GLOBAL | POP => (1, 0, true),
        SWAP => (2, 2, true),
        ADD | SUB | MUL | FLOORDIV | MOD | EQ | NE | LT | LE | GT | GE => (2, 1, true),
        NEG | LEN => (1, 1, true),
        JUMP => (0, 0, false),
        JUMP_IF_FALSE | JUMP_IF_TRUE => (1, 0, true),
        CALL => (i.arg as usize + 1, 1, true),
        RET => (1, 0, false),
        BUILD_LIST => (i.arg as usize, 1, true),
        LIST_APPEND_OP => (2, 1, true),
        INDEX_GET => (2, 1, true),
        INDEX_SET => (3, 0, true),
        LIST_SLICE => (3, 1, true),
    }
}

/// Abstract stack-depth simulation over the control-flow graph. Errors on
/// underflow, inconsistent depth at a join point, or falling off the end.
fn compute_max_stack(name: &str, code: &[Instr], line: usize) -> Result<usize> {
    if code.is_empty() {
        return Err(err(line, format!("function `{name}` has no body")));
    }
    let mut depth: Vec<Option<usize>> = vec![None; code.len()];
    let mut work = vec![(0usize, 0usize)];
    let mut max_depth = 0usize;
    while let Some((at, d)) = work.pop() {
        if at >= code.len() {
            return Err(err(
                line,
                format!("function `{name}` falls off the end of its code"),
            ));
        }
        match depth[at] {
            Some(existing) if existing == d => continue,
            Some(existing) => {
                return Err(err(
                    line,
                    format!(
                        "function `{name}`: unbalanced stack at instruction {at} \
                         ({existing} vs {d})"
                    ),
                ));
            }
            None => depth[at] = Some(d),
        }
        let instr = code[at];
        let (pops, pushes, fallthrough) = stack_effect(instr);
        if d < pops {
            return Err(err(
                line,
                format!("function `{name}`: stack underflow at instruction {at}"),
            ));
        }
        let after = d - pops + pushes;
        max_depth = max_depth.max(after).max(d);
        if instr.op.is_jump() {
            work.push((instr.arg as usize, after));
        }
        if fallthrough {
            work.push((at + 1, after));
        }
    }
    Ok(max_depth)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn straight_line_max_stack() {
        let p = assemble(
            "func main 0 0\nPUSH_INT 3\nPUSH_INT 4\nADD\nRET\n",
        )
        .unwrap();
        assert_eq!(p.funcs.len(), 1);
        assert_eq!(p.funcs[0].max_stack, 2);
        assert_eq!(p.funcs[0].n_state(), 2);
    }

    #[test]
    fn unbalanced_join_is_an_error() {
        // One path reaches L with depth 1, the other with depth 2.
        let src = "func main 0 1\n\
                   PUSH_INT 1\n\
                   JUMP_IF_TRUE a\n\
                   PUSH_INT 1\n\
                   PUSH_INT 2\n\
                   JUMP join\n\
                   a:\n\
                   PUSH_INT 1\n\
                   join:\n\
                   POP\n\
                   PUSH_INT 0\n\
                   RET\n";
        let e = assemble(src).unwrap_err();
        assert!(e.to_string().contains("unbalanced stack"));
    }

    #[test]
    fn label_jump_roundtrip() {
        let src = "func main 0 0\n\
                   JUMP l\n\
                   l:\n\
                   PUSH_INT 0\n\
                   RET\n";
        let p = assemble(src).unwrap();
        let code = &p.funcs[0].code;
        assert_eq!(code[0].op, Opcode::JUMP);
        assert_eq!(code[0].arg, 1);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = assemble("func main 0 0\nBOGUS\n").unwrap_err();
        match e {
            Error::Asm { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other}"),
        }
        assert!(assemble("PUSH_INT 1\n").is_err());
        assert!(assemble("func main 0 0\nJUMP nowhere\nRET\n").is_err());
    }

    #[test]
    fn consts_and_locals_resolve() {
        let src = "const answer 42\n\
                   func main 0 2\n\
                   local x 0\n\
                   local y 1\n\
                   PUSH_CONST answer\n\
                   STORE_FAST x\n\
                   LOAD_FAST x\n\
                   STORE_FAST 1\n\
                   LOAD_FAST y\n\
                   RET\n";
        let p = assemble(src).unwrap();
        assert_eq!(p.consts, vec![Const::Int(42)]);
        let code = &p.funcs[0].code;
        assert_eq!(code[1].arg, 0);
        assert_eq!(code[3].arg, 1);
    }

    #[test]
    fn stack_underflow_detected() {
        let e = assemble("func main 0 0\nPOP\nPUSH_INT 0\nRET\n").unwrap_err();
        assert!(e.to_string().contains("underflow"));
    }

    #[test]
    fn deterministic_assembly() {
        let src = "func main 0 1\nPUSH_INT 1\nSTORE_FAST 0\nLOAD_FAST 0\nRET\n";
        let a = assemble(src).unwrap();
        let b = assemble(src).unwrap();
        assert_eq!(a.funcs[0].code, b.funcs[0].code);
        assert_eq!(a.funcs[0].max_stack, b.funcs[0].max_stack);
    }
}
