//! Stack-based bytecode interpreter with a metered dispatch loop and the
//! native-vs-heap frame placement policy.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::asm::{Const, Instr, Program};
use crate::error::{Error, Result};
use crate::heap::{AllocOutcome, Arena, BlockHeap, GcHooks, Root};
use crate::machine::{
    bytes_per_block, max_state_bytes, CostModel, LayoutPolicy, MachineModel, Mode, Scale,
    ALLOC_FINALIZE_COST, ATB_WRITE_COST, FRAME_ALLOC_COST, GC_STEP_COST, RETRY_COST,
    SCAN_STEP_COST,
};
use crate::object::{self, AllocEnv, ObjKind, ObjectModel, Value};
use crate::opcode::{Opcode, ALL_OPCODES};
use crate::profiler::{signature, RuntimeLeaf, Sampler, Site, DEFAULT_SAMPLE_INTERVAL};

pub const DEFAULT_HEAP_BYTES: usize = 2 * 1024 * 1024;
pub const DEFAULT_STEP_LIMIT: u64 = 1_000_000_000;

/// Whether the purecap instruction tax applies, and whether the patched
/// binary variant (with the removable codegen overhead eliminated) runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TaxSetting {
    Off,
    On,
    Patched,
}

impl std::fmt::Display for TaxSetting {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TaxSetting::Off => "off",
            TaxSetting::On => "on",
            TaxSetting::Patched => "patched",
        })
    }
}

impl std::str::FromStr for TaxSetting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "off" => Ok(TaxSetting::Off),
            "on" => Ok(TaxSetting::On),
            "patched" => Ok(TaxSetting::Patched),
            other => Err(Error::Config(format!("unknown tax setting `{other}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct VmConfig {
    pub mode: Mode,
    pub policy: LayoutPolicy,
    pub tax: TaxSetting,
    pub cost_model: CostModel,
    pub heap_bytes: usize,
    pub sample_interval: u64,
    /// `None` disables the limit.
    pub step_limit: Option<u64>,
}

impl VmConfig {
    pub fn new(mode: Mode, block_scale: Scale, frame_scale: Scale, tax: TaxSetting) -> Self {
        VmConfig {
            mode,
            policy: LayoutPolicy::new(block_scale, frame_scale),
            tax,
            cost_model: CostModel::default_tables(),
            heap_bytes: DEFAULT_HEAP_BYTES,
            sample_interval: DEFAULT_SAMPLE_INTERVAL,
            step_limit: None,
        }
    }
}

/// Instruction-cost accounting for one run.
#[derive(Debug, Clone, Default, Serialize)]
pub struct CostLedger {
    pub total_cost: u64,
    pub dispatch_count: u64,
    /// Cumulative cost units per opcode.
    pub per_opcode_cost: BTreeMap<Opcode, u64>,
    /// Metered allocator/collector/runtime units by synthetic leaf name.
    pub runtime_cost: BTreeMap<&'static str, u64>,
}

impl CostLedger {
    pub fn opcode_total(&self) -> u64 {
        self.per_opcode_cost.values().sum()
    }

    pub fn runtime_total(&self) -> u64 {
        self.runtime_cost.values().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Placement {
    Native,
    Heap,
}

/// Decides where a frame of `n_state` slots lives under the given model
/// and policy.
pub fn frame_placement(
    model: &MachineModel,
    policy: &LayoutPolicy,
    n_state: usize,
) -> (Placement, usize) {
    let om = ObjectModel::new(*model);
    let frame_bytes = om.sizeof_frame(n_state);
    let placement = if frame_bytes > max_state_bytes(model, policy) {
        Placement::Heap
    } else {
        Placement::Native
    };
    (placement, frame_bytes)
}

#[derive(Debug)]
struct Frame {
    code_idx: usize,
    ip: usize,
    sp: usize,
    n_locals: usize,
    state: Vec<Value>,
    /// Set when the frame spilled to the heap.
    heap_addr: Option<usize>,
}

impl Frame {
    fn push(&mut self, v: Value) {
        self.state[self.n_locals + self.sp] = v;
        self.sp += 1;
    }

    fn pop(&mut self) -> Value {
        self.sp -= 1;
        self.state[self.n_locals + self.sp]
    }

    fn peek(&self, depth: usize) -> Value {
        self.state[self.n_locals + self.sp - 1 - depth]
    }
}

/// Root enumeration over the interpreter state: globals, constant pool,
/// every frame's live slots, heap-spilled frame blocks, and any operation
/// temporaries.
struct VmRoots<'a> {
    om: &'a ObjectModel,
    frames: &'a [Frame],
    globals: &'a [Option<Value>],
    consts: &'a [Value],
    extra: &'a [Root],
}

impl GcHooks for VmRoots<'_> {
    fn roots(&self, out: &mut Vec<Root>) {
        for v in self.globals.iter().flatten() {
            if let Value::ObjRef(a) = v {
                out.push(Root::Object(*a));
            }
        }
        for v in self.consts {
            if let Value::ObjRef(a) = v {
                out.push(Root::Object(*a));
            }
        }
        for f in self.frames {
            for v in &f.state[..f.n_locals + f.sp] {
                if let Value::ObjRef(a) = v {
                    out.push(Root::Object(*a));
                }
            }
            if let Some(a) = f.heap_addr {
                out.push(Root::Raw(a));
            }
        }
        out.extend_from_slice(self.extra);
    }

    fn trace(&self, arena: &Arena, addr: usize, visit: &mut dyn FnMut(Root)) {
        self.om
            .trace_object(arena, addr, visit)
            .expect("object graph is well formed");
    }
}

/// Allocation environment wired to the interpreter: full root enumeration
/// plus cost metering into the ledger and sampler.
struct VmAllocEnv<'a> {
    heap: &'a mut BlockHeap,
    om: &'a ObjectModel,
    frames: &'a [Frame],
    globals: &'a [Option<Value>],
    consts: &'a [Value],
    program: &'a Program,
    sampler: &'a mut Sampler,
    ledger: &'a mut CostLedger,
}

fn stack_signature(program: &Program, frames: &[Frame], leaf: Option<RuntimeLeaf>) -> String {
    let names: Vec<&str> = frames
        .iter()
        .map(|f| program.funcs[f.code_idx].name.as_str())
        .collect();
    signature(&names, leaf)
}

impl VmAllocEnv<'_> {
    fn charge(&mut self, units: u64, leaf: RuntimeLeaf, site: Site) {
        if units == 0 {
            return;
        }
        self.ledger.total_cost += units;
        *self.ledger.runtime_cost.entry(leaf.name()).or_insert(0) += units;
        let program = self.program;
        let frames = self.frames;
        self.sampler.on_cost(
            units,
            &mut || stack_signature(program, frames, Some(leaf)),
            Some((leaf, site)),
        );
    }

    fn charge_alloc_outcome(&mut self, out: &AllocOutcome) {
        self.charge(
            out.scanned * SCAN_STEP_COST,
            RuntimeLeaf::GcAlloc,
            Site::ScanLoop,
        );
        if let Some(c) = out.collect {
            self.charge(
                c.mark_steps * GC_STEP_COST,
                RuntimeLeaf::GcCollect,
                Site::MarkStep,
            );
            self.charge(
                c.sweep_steps * GC_STEP_COST,
                RuntimeLeaf::GcCollect,
                Site::SweepStep,
            );
            self.charge(RETRY_COST, RuntimeLeaf::GcAlloc, Site::RetryAfterCollect);
        }
        self.charge(
            out.blocks as u64 * ATB_WRITE_COST,
            RuntimeLeaf::GcAlloc,
            Site::AtbWrite,
        );
        self.charge(ALLOC_FINALIZE_COST, RuntimeLeaf::GcAlloc, Site::Finalize);
    }

    fn alloc_raw(&mut self, n_bytes: usize, extra: &[Root]) -> Result<AllocOutcome> {
        let hooks = VmRoots {
            om: self.om,
            frames: self.frames,
            globals: self.globals,
            consts: self.consts,
            extra,
        };
        let out = self.heap.alloc(n_bytes, &hooks)?;
        self.charge_alloc_outcome(&out);
        Ok(out)
    }
}

impl AllocEnv for VmAllocEnv<'_> {
    fn om(&self) -> &ObjectModel {
        self.om
    }

    fn arena(&self) -> &Arena {
        self.heap.arena()
    }

    fn arena_mut(&mut self) -> &mut Arena {
        self.heap.arena_mut()
    }

    fn alloc(&mut self, n_bytes: usize, extra_roots: &[Root]) -> Result<usize> {
        Ok(self.alloc_raw(n_bytes, extra_roots)?.addr)
    }

    fn free(&mut self, addr: usize) -> Result<()> {
        self.heap.free(addr)?;
        Ok(())
    }
}

pub struct Interpreter {
    pub config: VmConfig,
    model: MachineModel,
    om: ObjectModel,
    program: Program,
    heap: BlockHeap,
    frames: Vec<Frame>,
    /// One slot per interned global name.
    globals: Vec<Option<Value>>,
    /// Resolved constant pool (strings preallocated on the heap).
    consts: Vec<Value>,
    ledger: CostLedger,
    sampler: Sampler,
    /// Effective per-opcode cost, precomputed from mode and tax setting.
    cost_table: Vec<u64>,
}

/// Everything a finished run yields.
pub struct RunArtifacts {
    pub result: Value,
    pub rendered_result: String,
    pub ledger: CostLedger,
    pub stats: crate::heap::AllocStats,
    pub samples: crate::profiler::SampleSet,
    pub sites: crate::profiler::SiteHistogram,
}

impl Interpreter {
    pub fn new(config: VmConfig, program: Program) -> Result<Self> {
        config.cost_model.validate()?;
        let model = MachineModel::for_mode(config.mode);
        let om = ObjectModel::new(model);
        let block = bytes_per_block(&model, &config.policy);
        let heap = BlockHeap::new(config.heap_bytes, block)?;

        // The effective cost table folds the tax setting in: `off` prices
        // purecap like hybrid, `patched` removes each opcode's patch share.
        let hybrid = MachineModel::hybrid();
        let mut cost_table = Vec::with_capacity(ALL_OPCODES.len());
        for op in ALL_OPCODES {
            let cost = match (model.name, config.tax) {
                (Mode::Hybrid, _) | (Mode::Purecap, TaxSetting::Off) => {
                    config.cost_model.opcode_cost(&hybrid, op, false)?
                }
                (Mode::Purecap, TaxSetting::On) => {
                    config.cost_model.opcode_cost(&model, op, false)?
                }
                (Mode::Purecap, TaxSetting::Patched) => {
                    config.cost_model.opcode_cost(&model, op, true)?
                }
            };
            cost_table.push(cost);
        }

        let sampler = Sampler::new(config.sample_interval);
        let globals = vec![None; program.names.len()];
        let mut interp = Interpreter {
            config,
            model,
            om,
            program,
            heap,
            frames: Vec::new(),
            globals,
            consts: Vec::new(),
            ledger: CostLedger::default(),
            sampler,
            cost_table,
        };
        interp.resolve_consts()?;
        interp.bind_functions()?;
        Ok(interp)
    }

    pub fn model(&self) -> &MachineModel {
        &self.model
    }

    pub fn object_model(&self) -> &ObjectModel {
        &self.om
    }

    pub fn heap(&self) -> &BlockHeap {
        &self.heap
    }

    pub fn ledger(&self) -> &CostLedger {
        &self.ledger
    }

    pub fn program(&self) -> &Program {
        &self.program
    }

    fn env<'a>(
        heap: &'a mut BlockHeap,
        om: &'a ObjectModel,
        frames: &'a [Frame],
        globals: &'a [Option<Value>],
        consts: &'a [Value],
        program: &'a Program,
        sampler: &'a mut Sampler,
        ledger: &'a mut CostLedger,
    ) -> VmAllocEnv<'a> {
        VmAllocEnv {
            heap,
            om,
            frames,
            globals,
            consts,
            program,
            sampler,
            ledger,
        }
    }

    fn resolve_consts(&mut self) -> Result<()> {
        let consts = self.program.consts.clone();
        for c in &consts {
            let v = match c {
                Const::Int(i) => Value::SmallInt(*i),
                Const::Str(s) => {
                    let mut env = Self::env(
                        &mut self.heap,
                        &self.om,
                        &self.frames,
                        &self.globals,
                        &self.consts,
                        &self.program,
                        &mut self.sampler,
                        &mut self.ledger,
                    );
                    object::str_new(&mut env, s, &[])?
                }
            };
            self.consts.push(v);
        }
        Ok(())
    }

    /// Allocates a function object per code object and binds it as a
    /// global under the function's name.
    fn bind_functions(&mut self) -> Result<()> {
        for idx in 0..self.program.funcs.len() {
            let name = self.program.funcs[idx].name.clone();
            let mut env = Self::env(
                &mut self.heap,
                &self.om,
                &self.frames,
                &self.globals,
                &self.consts,
                &self.program,
                &mut self.sampler,
                &mut self.ledger,
            );
            let v = object::func_new(&mut env, idx, 0)?;
            self.set_global(&name, v);
        }
        Ok(())
    }

    fn name_index(&mut self, name: &str) -> usize {
        if let Some(i) = self.program.names.iter().position(|n| n == name) {
            i
        } else {
            self.program.names.push(name.to_string());
            self.globals.push(None);
            self.program.names.len() - 1
        }
    }

    pub fn set_global(&mut self, name: &str, v: Value) {
        let i = self.name_index(name);
        self.globals[i] = Some(v);
    }

    pub fn set_global_int(&mut self, name: &str, v: i64) {
        self.set_global(name, Value::SmallInt(v));
    }

    pub fn global(&self, name: &str) -> Option<Value> {
        let i = self.program.names.iter().position(|n| n == name)?;
        self.globals[i]
    }

    /// Pushes an activation record, spilling it to the heap when its
    /// modeled byte size exceeds the on-stack threshold.
    fn push_frame(&mut self, code_idx: usize, args: &[Value]) -> Result<()> {
        let code = &self.program.funcs[code_idx];
        if args.len() != code.n_args {
            return Err(Error::Vm(format!(
                "function `{}` expects {} args, got {}",
                code.name,
                code.n_args,
                args.len()
            )));
        }
        let n_state = code.n_state();
        let n_locals = code.n_locals;
        let (placement, frame_bytes) = frame_placement(&self.model, &self.config.policy, n_state);
        let mut heap_addr = None;
        if placement == Placement::Heap {
            let extra: Vec<Root> = args
                .iter()
                .filter_map(|v| match v {
                    Value::ObjRef(a) => Some(Root::Object(*a)),
                    _ => None,
                })
                .collect();
            let mut env = Self::env(
                &mut self.heap,
                &self.om,
                &self.frames,
                &self.globals,
                &self.consts,
                &self.program,
                &mut self.sampler,
                &mut self.ledger,
            );
            env.charge(FRAME_ALLOC_COST, RuntimeLeaf::FrameAlloc, Site::Body);
            let out = env.alloc_raw(frame_bytes, &extra)?;
            self.heap.note_frame_alloc(out.blocks);
            heap_addr = Some(out.addr);
        }
        let mut state = vec![Value::SmallInt(0); n_state];
        state[..args.len()].copy_from_slice(args);
        self.frames.push(Frame {
            code_idx,
            ip: 0,
            sp: 0,
            n_locals,
            state,
            heap_addr,
        });
        Ok(())
    }

    fn charge_opcode(&mut self, op: Opcode) -> Result<()> {
        let cost = self.cost_table[op as usize];
        self.ledger.total_cost += cost;
        self.ledger.dispatch_count += 1;
        *self.ledger.per_opcode_cost.entry(op).or_insert(0) += cost;
        // List mutation opcodes count as runtime work for sampling; the
        // cost stays in the opcode ledger either way.
        let leaf_site = match op {
            Opcode::LIST_SLICE => Some((RuntimeLeaf::ListSlice, Site::Body)),
            Opcode::LIST_APPEND_OP => Some((RuntimeLeaf::ListAppend, Site::Body)),
            _ => None,
        };
        let program = &self.program;
        let frames = &self.frames;
        self.sampler.on_cost(
            cost,
            &mut || stack_signature(program, frames, leaf_site.map(|(l, _)| l)),
            leaf_site,
        );
        if let Some(limit) = self.config.step_limit {
            if self.ledger.total_cost > limit {
                return Err(Error::StepLimit(limit));
            }
        }
        Ok(())
    }

    /// Calls a function value with the given arguments and runs to
    /// completion of that call.
    pub fn call(&mut self, func: Value, args: &[Value]) -> Result<Value> {
        let base = self.frames.len();
        self.enter_call(func, args)?;
        self.run_until(base)
    }

    /// Runs the named zero-argument entry function.
    pub fn run(&mut self, entry: &str) -> Result<Value> {
        let func = self
            .global(entry)
            .ok_or_else(|| Error::Vm(format!("no function named `{entry}`")))?;
        self.call(func, &[])
    }

    pub fn run_main(&mut self) -> Result<Value> {
        self.run("main")
    }

    fn enter_call(&mut self, func: Value, args: &[Value]) -> Result<()> {
        let addr = func.as_ref()?;
        if self.om.kind(self.heap.arena(), addr)? != ObjKind::Func {
            return Err(Error::Vm("CALL target is not a function".into()));
        }
        let code_idx = self.om.func_code(self.heap.arena(), addr);
        self.push_frame(code_idx, args)
    }

    fn binary_int(op: Opcode, a: i64, b: i64) -> Result<i64> {
        let v = match op {
            Opcode::ADD => a.checked_add(b),
            Opcode::SUB => a.checked_sub(b),
            Opcode::MUL => a.checked_mul(b),
            Opcode::FLOORDIV => {
                if b == 0 {
                    return Err(Error::Vm("division by zero".into()));
                }
                Some(a.div_euclid(b))
            }
            Opcode::MOD => {
                if b == 0 {
                    return Err(Error::Vm("modulo by zero".into()));
                }
                Some(a.rem_euclid(b))
            }
            Opcode::EQ => Some((a == b) as i64),
            Opcode::NE => Some((a != b) as i64),
            Opcode::LT => Some((a < b) as i64),
            Opcode::LE => Some((a <= b) as i64),
            Opcode::GT => Some((a > b) as i64),
            Opcode::GE => Some((a >= b) as i64),
            _ => unreachable!("not a binary opcode"),
        };
        v.ok_or_else(|| Error::Vm("integer overflow".into()))
    }

    /// The dispatch loop. Runs until the frame stack shrinks back to
    /// `base`, returning the value produced by the frame at `base`.
    fn run_until(&mut self, base: usize) -> Result<Value> {
        loop {
            let fr = self.frames.last().expect("at least one live frame");
            let code = &self.program.funcs[fr.code_idx];
            debug_assert!(fr.sp <= code.max_stack);
            let Instr { op, arg } = code.code[fr.ip];
            self.charge_opcode(op)?;
            let fr = self.frames.last_mut().expect("frame");
            fr.ip += 1;
            match op {
                Opcode::PUSH_CONST => {
                    let v = self.consts[arg as usize];
                    self.frames.last_mut().unwrap().push(v);
                }
                Opcode::PUSH_INT => fr.push(Value::SmallInt(arg)),
                Opcode::LOAD_FAST => {
                    let v = fr.state[arg as usize];
                    fr.push(v);
                }
                Opcode::STORE_FAST => {
                    let v = fr.pop();
                    fr.state[arg as usize] = v;
                }
                Opcode::LOAD_GLOBAL => {
                    let v = self.globals[arg as usize].ok_or_else(|| {
                        Error::Vm(format!(
                            "undefined global `{}`",
                            self.program.names[arg as usize]
                        ))
                    })?;
                    self.frames.last_mut().unwrap().push(v);
                }
                Opcode::STORE_GLOBAL => {
                    let v = fr.pop();
                    self.globals[arg as usize] = Some(v);
                }
                Opcode::POP => {
                    fr.pop();
                }
                Opcode::DUP => {
                    let v = fr.peek(0);
                    fr.push(v);
                }
                Opcode::SWAP => {
                    let a = fr.pop();
                    let b = fr.pop();
                    fr.push(a);
                    fr.push(b);
                }
                Opcode::ADD
                | Opcode::SUB
                | Opcode::MUL
                | Opcode::FLOORDIV
                | Opcode::MOD
                | Opcode::EQ
                | Opcode::NE
                | Opcode::LT
                | Opcode::LE
                | Opcode::GT
                | Opcode::GE => {
                    let b = fr.pop().as_int()?;
                    let a = fr.pop().as_int()?;
                    fr.push(Value::SmallInt(Self::binary_int(op, a, b)?));
                }
                Opcode::NEG => {
                    let a = fr.pop().as_int()?;
                    fr.push(Value::SmallInt(
                        a.checked_neg().ok_or_else(|| Error::Vm("overflow".into()))?,
                    ));
                }
                Opcode::JUMP => fr.ip = arg as usize,
                Opcode::JUMP_IF_FALSE => {
                    if fr.pop().as_int()? == 0 {
                        fr.ip = arg as usize;
                    }
                }
                Opcode::JUMP_IF_TRUE => {
                    if fr.pop().as_int()? != 0 {
                        fr.ip = arg as usize;
                    }
                }
                Opcode::CALL => {
                    let n = arg as usize;
                    let mut args = vec![Value::SmallInt(0); n];
                    for i in (0..n).rev() {
                        args[i] = fr.pop();
                    }
                    let func = fr.pop();
                    self.enter_call(func, &args)?;
                }
                Opcode::RET => {
                    let fr = self.frames.last_mut().unwrap();
                    let result = fr.pop();
                    if let Some(addr) = fr.heap_addr {
                        self.heap.free(addr)?;
                    }
                    self.frames.pop();
                    if self.frames.len() == base {
                        return Ok(result);
                    }
                    self.frames.last_mut().unwrap().push(result);
                }
                Opcode::BUILD_LIST => {
                    let n = arg as usize;
                    let mut items = vec![Value::SmallInt(0); n];
                    for i in (0..n).rev() {
                        items[i] = fr.pop();
                    }
                    let v = {
                        let mut env = Self::env(
                            &mut self.heap,
                            &self.om,
                            &self.frames,
                            &self.globals,
                            &self.consts,
                            &self.program,
                            &mut self.sampler,
                            &mut self.ledger,
                        );
                        object::build_list(&mut env, &items, &[])?
                    };
                    self.frames.last_mut().unwrap().push(v);
                }
                Opcode::LIST_APPEND_OP => {
                    let v = fr.pop();
                    let list = fr.peek(0);
                    let mut env = Self::env(
                        &mut self.heap,
                        &self.om,
                        &self.frames,
                        &self.globals,
                        &self.consts,
                        &self.program,
                        &mut self.sampler,
                        &mut self.ledger,
                    );
                    // `v` is rooted through extras inside list_append; the
                    // list itself is still on the operand stack.
                    object::list_append(&mut env, list, v)?;
                }
                Opcode::INDEX_GET => {
                    let index = fr.pop().as_int()?;
                    let obj = fr.pop();
                    let v = self.index_get(obj, index)?;
                    self.frames.last_mut().unwrap().push(v);
                }
                Opcode::INDEX_SET => {
                    let v = fr.pop();
                    let index = fr.pop().as_int()?;
                    let obj = fr.pop();
                    let addr = obj.as_ref()?;
                    let len = self.om.list_len(self.heap.arena(), addr);
                    if index < 0 || index as usize >= len {
                        return Err(Error::IndexRange { index, len });
                    }
                    self.om
                        .list_set(self.heap.arena_mut(), addr, index as usize, v)?;
                }
                Opcode::LIST_SLICE => {
                    let stop = fr.pop().as_int()?;
                    let start = fr.pop().as_int()?;
                    let list = fr.pop();
                    let v = {
                        let mut env = Self::env(
                            &mut self.heap,
                            &self.om,
                            &self.frames,
                            &self.globals,
                            &self.consts,
                            &self.program,
                            &mut self.sampler,
                            &mut self.ledger,
                        );
                        object::list_slice(&mut env, list, start, stop)?
                    };
                    self.frames.last_mut().unwrap().push(v);
                }
                Opcode::LEN => {
                    let obj = fr.pop();
                    let addr = obj.as_ref()?;
                    let arena = self.heap.arena();
                    let len = match self.om.kind(arena, addr)? {
                        ObjKind::List => self.om.list_len(arena, addr),
                        ObjKind::Tuple => self.om.tuple_len(arena, addr),
                        ObjKind::Str => self.om.str_len(arena, addr),
                        ObjKind::Func => {
                            return Err(Error::Vm("LEN of a function".into()));
                        }
                    };
                    self.frames.last_mut().unwrap().push(Value::SmallInt(len as i64));
                }
            }
        }
    }

    fn index_get(&self, obj: Value, index: i64) -> Result<Value> {
        let addr = obj.as_ref()?;
        let arena = self.heap.arena();
        match self.om.kind(arena, addr)? {
            ObjKind::List => {
                let len = self.om.list_len(arena, addr);
                if index < 0 || index as usize >= len {
                    return Err(Error::IndexRange { index, len });
                }
                self.om.list_get(arena, addr, index as usize)
            }
            ObjKind::Tuple => {
                let len = self.om.tuple_len(arena, addr);
                if index < 0 || index as usize >= len {
                    return Err(Error::IndexRange { index, len });
                }
                Ok(self.om.tuple_get(arena, addr, index as usize))
            }
            _ => Err(Error::Vm("INDEX_GET on a non-indexable object".into())),
        }
    }

    /// Renders a value using the debug printer.
    pub fn render(&self, v: Value) -> String {
        object::value_to_string(&self.om, self.heap.arena(), v)
    }

    /// Consumes the interpreter, returning the run artifacts for `result`.
    pub fn finish(self, result: Value) -> RunArtifacts {
        let rendered = self.render(result);
        let (samples, sites) = self.sampler.finish();
        RunArtifacts {
            result,
            rendered_result: rendered,
            ledger: self.ledger,
            stats: self.heap.stats_snapshot(),
            samples,
            sites,
        }
    }
}
