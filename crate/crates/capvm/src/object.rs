//! Tagged values and canonical heap object layouts. Object byte sizes
//! scale with the modeled reference width, which is what drives the
//! block-size pathology.

use crate::error::{Error, Result};
use crate::heap::{Arena, Root};
use crate::machine::MachineModel;

/// A VM value: an immediate integer or a reference to a heap object.
/// In the modeled encoding a small integer carries a low tag bit of 1
/// and a reference (always block-aligned) a low bit of 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Value {
    SmallInt(i64),
    ObjRef(usize),
}

impl Value {
    pub const NIL: Value = Value::SmallInt(0);

    pub fn encode(self) -> u64 {
        match self {
            Value::SmallInt(i) => ((i as u64) << 1) | 1,
            Value::ObjRef(addr) => {
                debug_assert_eq!(addr & 1, 0);
                addr as u64
            }
        }
    }

    pub fn decode(raw: u64) -> Value {
        if raw & 1 == 1 {
            Value::SmallInt((raw as i64) >> 1)
        } else {
            Value::ObjRef(raw as usize)
        }
    }

    pub fn as_int(self) -> Result<i64> {
        match self {
            Value::SmallInt(i) => Ok(i),
            Value::ObjRef(_) => Err(Error::Vm("expected integer, got object".into())),
        }
    }

    pub fn as_ref(self) -> Result<usize> {
        match self {
            Value::ObjRef(a) => Ok(a),
            Value::SmallInt(_) => Err(Error::Vm("expected object, got integer".into())),
        }
    }
}

/// Heap object kinds, stored in the header's type field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum ObjKind {
    List = 1,
    Tuple = 2,
    Str = 3,
    Func = 4,
}

impl ObjKind {
    fn from_raw(raw: u64) -> Result<ObjKind> {
        Ok(match raw {
            1 => ObjKind::List,
            2 => ObjKind::Tuple,
            3 => ObjKind::Str,
            4 => ObjKind::Func,
            other => {
                return Err(Error::HeapConsistency(format!(
                    "unknown object kind {other}"
                )))
            }
        })
    }
}

/// Allocation services an object operation needs: the arena, allocation
/// with extra temporary roots, and explicit free. The VM implements this
/// with full root enumeration and cost metering; tests use simpler stubs.
pub trait AllocEnv {
    fn om(&self) -> &ObjectModel;
    fn arena(&self) -> &Arena;
    fn arena_mut(&mut self) -> &mut Arena;
    /// Allocates `n_bytes`, treating `extra_roots` as reachable for the
    /// duration of the call. Returns the head-block byte address.
    fn alloc(&mut self, n_bytes: usize, extra_roots: &[Root]) -> Result<usize>;
    fn free(&mut self, addr: usize) -> Result<()>;
}

/// Layout arithmetic for one machine model.
#[derive(Debug, Clone, Copy)]
pub struct ObjectModel {
    pub model: MachineModel,
}

impl ObjectModel {
    pub fn new(model: MachineModel) -> Self {
        ObjectModel { model }
    }

    fn r(&self) -> usize {
        self.model.ref_bytes
    }

    fn w(&self) -> usize {
        self.model.word_bytes
    }

    // List: header, items_ref, len word, cap word.
    pub fn sizeof_list(&self) -> usize {
        2 * self.r() + 2 * self.w()
    }

    // Tuple: header, len word, inline items.
    pub fn sizeof_tuple(&self, len: usize) -> usize {
        self.r() + self.w() + len * self.r()
    }

    // Str: header, len word, bytes rounded up to whole words.
    pub fn sizeof_str(&self, n_bytes: usize) -> usize {
        self.r() + self.w() + n_bytes.div_ceil(self.w()).max(1) * self.w()
    }

    // Func: header, code_ref, n_defaults word.
    pub fn sizeof_func(&self) -> usize {
        2 * self.r() + self.w()
    }

    /// Activation-record size: a four-reference header plus one reference
    /// per state slot.
    pub fn sizeof_frame(&self, n_state: usize) -> usize {
        (4 + n_state) * self.r()
    }

    fn read_ref(&self, arena: &Arena, addr: usize) -> Value {
        Value::decode(arena.read_u64(addr))
    }

    fn write_ref(&self, arena: &mut Arena, addr: usize, v: Value) {
        arena.write_ref(addr, v.encode(), self.r());
    }

    pub fn kind(&self, arena: &Arena, addr: usize) -> Result<ObjKind> {
        ObjKind::from_raw(arena.read_u64(addr))
    }

    // ---- list accessors ----

    pub fn list_len(&self, arena: &Arena, list: usize) -> usize {
        arena.read_u64(list + 2 * self.r()) as usize
    }

    pub fn list_cap(&self, arena: &Arena, list: usize) -> usize {
        arena.read_u64(list + 2 * self.r() + self.w()) as usize
    }

    fn set_list_len(&self, arena: &mut Arena, list: usize, len: usize) {
        arena.write_u64(list + 2 * self.r(), len as u64);
    }

    fn set_list_cap(&self, arena: &mut Arena, list: usize, cap: usize) {
        arena.write_u64(list + 2 * self.r() + self.w(), cap as u64);
    }

    pub fn list_items(&self, arena: &Arena, list: usize) -> Option<usize> {
        match self.read_ref(arena, list + self.r()) {
            Value::ObjRef(a) => Some(a),
            Value::SmallInt(_) => None,
        }
    }

    pub fn list_get(&self, arena: &Arena, list: usize, index: usize) -> Result<Value> {
        let len = self.list_len(arena, list);
        if index >= len {
            return Err(Error::IndexRange {
                index: index as i64,
                len,
            });
        }
        let items = self.list_items(arena, list).expect("non-empty list has items");
        Ok(self.read_ref(arena, items + index * self.r()))
    }

    pub fn list_set(&self, arena: &mut Arena, list: usize, index: usize, v: Value) -> Result<()> {
        let len = self.list_len(arena, list);
        if index >= len {
            return Err(Error::IndexRange {
                index: index as i64,
                len,
            });
        }
        let items = self.list_items(arena, list).expect("non-empty list has items");
        self.write_ref(arena, items + index * self.r(), v);
        Ok(())
    }

    // ---- str / func accessors ----

    pub fn str_len(&self, arena: &Arena, s: usize) -> usize {
        arena.read_u64(s + self.r()) as usize
    }

    pub fn str_bytes<'a>(&self, arena: &'a Arena, s: usize) -> &'a [u8] {
        let len = self.str_len(arena, s);
        let base = s + self.r() + self.w();
        arena.bytes_at(base, len)
    }

    pub fn func_code(&self, arena: &Arena, f: usize) -> usize {
        (arena.read_u64(f + self.r()) >> 1) as usize
    }

    pub fn tuple_len(&self, arena: &Arena, t: usize) -> usize {
        arena.read_u64(t + self.r()) as usize
    }

    pub fn tuple_get(&self, arena: &Arena, t: usize, index: usize) -> Value {
        self.read_ref(arena, t + self.r() + self.w() + index * self.r())
    }

    /// Visits every reference field of the object at `addr`. Items arrays
    /// are reported as raw roots; immediate values are skipped.
    pub fn trace_object(
        &self,
        arena: &Arena,
        addr: usize,
        visit: &mut dyn FnMut(Root),
    ) -> Result<()> {
        match self.kind(arena, addr)? {
            ObjKind::List => {
                if let Some(items) = self.list_items(arena, addr) {
                    visit(Root::Raw(items));
                    let len = self.list_len(arena, addr);
                    for i in 0..len {
                        if let Value::ObjRef(a) = self.read_ref(arena, items + i * self.r()) {
                            visit(Root::Object(a));
                        }
                    }
                }
            }
            ObjKind::Tuple => {
                let len = self.tuple_len(arena, addr);
                for i in 0..len {
                    if let Value::ObjRef(a) = self.tuple_get(arena, addr, i) {
                        visit(Root::Object(a));
                    }
                }
            }
            ObjKind::Str | ObjKind::Func => {}
        }
        Ok(())
    }
}

// ---- allocating operations ----

fn init_header(om: &ObjectModel, arena: &mut Arena, addr: usize, kind: ObjKind) {
    arena.write_ref(addr, kind as u64, om.model.ref_bytes);
}

/// Allocates a list object and, when `capacity > 0`, its items array
/// (two separate heap allocations, as in the reference design).
pub fn list_new(env: &mut dyn AllocEnv, capacity: usize, extra: &[Root]) -> Result<Value> {
    let om = *env.om();
    let obj = env.alloc(om.sizeof_list(), extra)?;
    init_header(&om, env.arena_mut(), obj, ObjKind::List);
    om.write_ref(env.arena_mut(), obj + om.r(), Value::NIL);
    om.set_list_len(env.arena_mut(), obj, 0);
    om.set_list_cap(env.arena_mut(), obj, 0);
    if capacity > 0 {
        let mut roots = vec![Root::Object(obj)];
        roots.extend_from_slice(extra);
        let items = env.alloc(capacity * om.r(), &roots)?;
        om.write_ref(env.arena_mut(), obj + om.r(), Value::ObjRef(items));
        om.set_list_cap(env.arena_mut(), obj, capacity);
    }
    Ok(Value::ObjRef(obj))
}

/// Builds a list of exactly the given items (capacity = length).
pub fn build_list(env: &mut dyn AllocEnv, items: &[Value], extra: &[Root]) -> Result<Value> {
    let mut roots: Vec<Root> = extra.to_vec();
    for v in items {
        if let Value::ObjRef(a) = v {
            roots.push(Root::Object(*a));
        }
    }
    let list = list_new(env, items.len(), &roots)?;
    let om = *env.om();
    let addr = list.as_ref()?;
    om.set_list_len(env.arena_mut(), addr, items.len());
    for (i, v) in items.iter().enumerate() {
        om.list_set(env.arena_mut(), addr, i, *v)?;
    }
    Ok(list)
}

/// Copies `[start, stop)` of a list into a freshly allocated list of
/// exactly that capacity. A zero-length slice allocates no items array.
pub fn list_slice(env: &mut dyn AllocEnv, list: Value, start: i64, stop: i64) -> Result<Value> {
    let om = *env.om();
    let src = list.as_ref()?;
    let len = om.list_len(env.arena(), src) as i64;
    if start < 0 || stop < start || stop > len {
        return Err(Error::IndexRange { index: stop, len: len as usize });
    }
    let count = (stop - start) as usize;
    let out = list_new(env, count, &[Root::Object(src)])?;
    let dst = out.as_ref()?;
    om.set_list_len(env.arena_mut(), dst, count);
    for i in 0..count {
        let v = om.list_get(env.arena(), src, start as usize + i)?;
        om.list_set(env.arena_mut(), dst, i, v)?;
    }
    Ok(out)
}

/// Appends a value, growing the items array to `max(4, 2 * cap)` when
/// full. The old items array is freed explicitly.
pub fn list_append(env: &mut dyn AllocEnv, list: Value, v: Value) -> Result<()> {
    let om = *env.om();
    let addr = list.as_ref()?;
    let len = om.list_len(env.arena(), addr);
    let cap = om.list_cap(env.arena(), addr);
    if len == cap {
        let new_cap = (2 * cap).max(4);
        let mut roots = vec![Root::Object(addr)];
        if let Value::ObjRef(a) = v {
            roots.push(Root::Object(a));
        }
        let new_items = env.alloc(new_cap * om.r(), &roots)?;
        if let Some(old_items) = om.list_items(env.arena(), addr) {
            for i in 0..len {
                let raw = env.arena().read_u64(old_items + i * om.r());
                env.arena_mut().write_ref(new_items + i * om.r(), raw, om.r());
            }
            env.free(old_items)?;
        }
        om.write_ref(env.arena_mut(), addr + om.r(), Value::ObjRef(new_items));
        om.set_list_cap(env.arena_mut(), addr, new_cap);
    }
    om.set_list_len(env.arena_mut(), addr, len + 1);
    om.list_set(env.arena_mut(), addr, len, v)?;
    Ok(())
}

pub fn tuple_new(env: &mut dyn AllocEnv, items: &[Value], extra: &[Root]) -> Result<Value> {
    let om = *env.om();
    let mut roots: Vec<Root> = extra.to_vec();
    for v in items {
        if let Value::ObjRef(a) = v {
            roots.push(Root::Object(*a));
        }
    }
    let addr = env.alloc(om.sizeof_tuple(items.len()), &roots)?;
    init_header(&om, env.arena_mut(), addr, ObjKind::Tuple);
    env.arena_mut().write_u64(addr + om.r(), items.len() as u64);
    for (i, v) in items.iter().enumerate() {
        om.write_ref(
            env.arena_mut(),
            addr + om.r() + om.w() + i * om.r(),
            *v,
        );
    }
    Ok(Value::ObjRef(addr))
}

pub fn str_new(env: &mut dyn AllocEnv, s: &str, extra: &[Root]) -> Result<Value> {
    let om = *env.om();
    let addr = env.alloc(om.sizeof_str(s.len()), extra)?;
    init_header(&om, env.arena_mut(), addr, ObjKind::Str);
    env.arena_mut().write_u64(addr + om.r(), s.len() as u64);
    env.arena_mut()
        .write_bytes(addr + om.r() + om.w(), s.as_bytes());
    Ok(Value::ObjRef(addr))
}

pub fn func_new(env: &mut dyn AllocEnv, code_index: usize, n_defaults: usize) -> Result<Value> {
    let om = *env.om();
    let addr = env.alloc(om.sizeof_func(), &[])?;
    init_header(&om, env.arena_mut(), addr, ObjKind::Func);
    // The code reference identifies a code object by index; encode it as
    // an immediate so the field never looks like a heap reference.
    om.write_ref(
        env.arena_mut(),
        addr + om.r(),
        Value::SmallInt(code_index as i64),
    );
    env.arena_mut()
        .write_u64(addr + 2 * om.r(), n_defaults as u64);
    Ok(Value::ObjRef(addr))
}

/// A minimal allocation environment over a standalone heap: a list of
/// persistent roots plus object tracing. Used by tests and host-side
/// object-graph construction; it does no cost metering.
pub struct BasicEnv {
    pub heap: crate::heap::BlockHeap,
    pub om: ObjectModel,
    /// Values treated as always reachable.
    pub roots: Vec<Value>,
}

struct BasicHooks<'a> {
    om: &'a ObjectModel,
    roots: &'a [Value],
    extra: &'a [Root],
}

impl crate::heap::GcHooks for BasicHooks<'_> {
    fn roots(&self, out: &mut Vec<Root>) {
        for v in self.roots {
            if let Value::ObjRef(a) = v {
                out.push(Root::Object(*a));
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

impl BasicEnv {
    pub fn new(model: MachineModel, heap_bytes: usize, block_bytes: usize) -> Result<Self> {
        Ok(BasicEnv {
            heap: crate::heap::BlockHeap::new(heap_bytes, block_bytes)?,
            om: ObjectModel::new(model),
            roots: Vec::new(),
        })
    }

    pub fn collect(&mut self) -> Result<crate::heap::CollectOutcome> {
        let hooks = BasicHooks {
            om: &self.om,
            roots: &self.roots,
            extra: &[],
        };
        self.heap.collect(&hooks)
    }
}

impl AllocEnv for BasicEnv {
    fn om(&self) -> &ObjectModel {
        &self.om
    }

    fn arena(&self) -> &Arena {
        self.heap.arena()
    }

    fn arena_mut(&mut self) -> &mut Arena {
        self.heap.arena_mut()
    }

    fn alloc(&mut self, n_bytes: usize, extra_roots: &[Root]) -> Result<usize> {
        let hooks = BasicHooks {
            om: &self.om,
            roots: &self.roots,
            extra: extra_roots,
        };
        Ok(self.heap.alloc(n_bytes, &hooks)?.addr)
    }

    fn free(&mut self, addr: usize) -> Result<()> {
        self.heap.free(addr)?;
        Ok(())
    }
}

/// Renders a value for benchmark output comparison: canonical decimal for
/// integers, bracketed comma-separated lists.
pub fn value_to_string(om: &ObjectModel, arena: &Arena, v: Value) -> String {
    match v {
        Value::SmallInt(i) => i.to_string(),
        Value::ObjRef(addr) => match om.kind(arena, addr) {
            Ok(ObjKind::List) => {
                let len = om.list_len(arena, addr);
                let items: Vec<String> = (0..len)
                    .map(|i| {
                        value_to_string(om, arena, om.list_get(arena, addr, i).unwrap())
                    })
                    .collect();
                format!("[{}]", items.join(", "))
            }
            Ok(ObjKind::Tuple) => {
                let len = om.tuple_len(arena, addr);
                let items: Vec<String> = (0..len)
                    .map(|i| value_to_string(om, arena, om.tuple_get(arena, addr, i)))
                    .collect();
                format!("({})", items.join(", "))
            }
            Ok(ObjKind::Str) => {
                String::from_utf8_lossy(om.str_bytes(arena, addr)).into_owned()
            }
            Ok(ObjKind::Func) => format!("<function #{}>", om.func_code(arena, addr)),
            Err(_) => format!("<invalid @{addr:#x}>"),
        },
    }
}
