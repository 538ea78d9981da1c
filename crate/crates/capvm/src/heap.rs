//! Fixed-arena block allocator with a 2-bit-per-block allocation table,
//! first-fit free-run search, a last-free index advanced only on 1-block
//! allocations, and a non-moving mark/sweep collector.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};

/// Per-block allocation state (the 2-bit ATB encoding).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum BlockState {
    Free = 0,
    Head = 1,
    Tail = 2,
    Marked = 3,
}

/// A collection root. `Object` roots are traced through the object graph;
/// `Raw` roots only pin their own block run (used for items arrays and
/// heap-spilled frames, which carry no header).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Root {
    Object(usize),
    Raw(usize),
}

impl Root {
    pub fn addr(self) -> usize {
        match self {
            Root::Object(a) | Root::Raw(a) => a,
        }
    }
}

/// Root enumeration and object tracing, supplied by the heap's owner.
/// `trace` must visit every reference field of the object at `addr` and
/// must not touch the heap.
pub trait GcHooks {
    fn roots(&self, out: &mut Vec<Root>);
    fn trace(&self, arena: &Arena, addr: usize, visit: &mut dyn FnMut(Root));
}

/// A hook with no roots; collections reclaim everything.
pub struct NoRoots;

impl GcHooks for NoRoots {
    fn roots(&self, _out: &mut Vec<Root>) {}
    fn trace(&self, _arena: &Arena, _addr: usize, _visit: &mut dyn FnMut(Root)) {}
}

/// A fixed list of roots, each pinning its own run only.
pub struct PinnedRoots(pub Vec<usize>);

impl GcHooks for PinnedRoots {
    fn roots(&self, out: &mut Vec<Root>) {
        out.extend(self.0.iter().map(|&a| Root::Raw(a)));
    }
    fn trace(&self, _arena: &Arena, _addr: usize, _visit: &mut dyn FnMut(Root)) {}
}

/// The byte arena. Object layouts read and write through this view; the
/// allocation table lives outside it.
pub struct Arena {
    bytes: Vec<u8>,
    block_bytes: usize,
}

impl Arena {
    pub fn block_bytes(&self) -> usize {
        self.block_bytes
    }

    pub fn len(&self) -> usize {
        self.bytes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bytes.is_empty()
    }

    pub fn read_u64(&self, addr: usize) -> u64 {
        let b: [u8; 8] = self.bytes[addr..addr + 8].try_into().unwrap();
        u64::from_le_bytes(b)
    }

    pub fn write_u64(&mut self, addr: usize, v: u64) {
        self.bytes[addr..addr + 8].copy_from_slice(&v.to_le_bytes());
    }

    /// Writes a reference-width slot: the value in the low 8 bytes, the
    /// modeled metadata half (if any) zeroed.
    pub fn write_ref(&mut self, addr: usize, v: u64, ref_bytes: usize) {
        self.write_u64(addr, v);
        if ref_bytes > 8 {
            self.bytes[addr + 8..addr + ref_bytes].fill(0);
        }
    }

    pub fn bytes_at(&self, addr: usize, len: usize) -> &[u8] {
        &self.bytes[addr..addr + len]
    }

    pub fn write_bytes(&mut self, addr: usize, src: &[u8]) {
        self.bytes[addr..addr + src.len()].copy_from_slice(src);
    }
}

/// Allocation statistics, the simulator analog of the interpreter's
/// in-built GC counters.
#[derive(Debug, Clone, Default, Serialize)]
pub struct AllocStats {
    /// Successful allocations keyed by run length in blocks.
    pub alloc_count_by_blocks: BTreeMap<usize, u64>,
    /// Cumulative free-run search-loop iterations.
    pub search_iterations: u64,
    pub collections: u64,
    pub bytes_in_use: usize,
    pub blocks_in_use: usize,
    pub peak_blocks_in_use: usize,
    /// Heap-spilled frame allocations keyed by run length (fed by the VM).
    pub frame_heap_allocs_by_blocks: BTreeMap<usize, u64>,
}

impl AllocStats {
    pub fn total_allocs(&self) -> u64 {
        self.alloc_count_by_blocks.values().sum()
    }

    /// Object allocations only: everything except heap-spilled frames.
    pub fn object_allocs_by_blocks(&self) -> BTreeMap<usize, u64> {
        let mut out = self.alloc_count_by_blocks.clone();
        for (blocks, n) in &self.frame_heap_allocs_by_blocks {
            if let Some(c) = out.get_mut(blocks) {
                *c -= n;
                if *c == 0 {
                    out.remove(blocks);
                }
            }
        }
        out
    }
}

/// Outcome of one collection, with step counts for cost metering.
#[derive(Debug, Clone, Copy, Default)]
pub struct CollectOutcome {
    pub mark_steps: u64,
    pub sweep_steps: u64,
    pub reclaimed_blocks: usize,
}

/// Outcome of one allocation, with enough metering detail for the cost
/// ledger and profiler.
#[derive(Debug, Clone, Copy)]
pub struct AllocOutcome {
    /// Byte address of the head block.
    pub addr: usize,
    /// Run length in blocks.
    pub blocks: usize,
    /// Search-loop iterations spent (both scans if a retry happened).
    pub scanned: u64,
    /// Present when the first scan failed and a collection ran.
    pub collect: Option<CollectOutcome>,
}

pub struct BlockHeap {
    arena: Arena,
    atb: Vec<BlockState>,
    last_free_idx: usize,
    stats: AllocStats,
}

impl BlockHeap {
    pub fn new(total_bytes: usize, block_bytes: usize) -> Result<Self> {
        if block_bytes < 16 || total_bytes == 0 || total_bytes % block_bytes != 0 {
            return Err(Error::HeapGeometry {
                total: total_bytes,
                block: block_bytes,
            });
        }
        let blocks = total_bytes / block_bytes;
        Ok(BlockHeap {
            arena: Arena {
                bytes: vec![0; total_bytes],
                block_bytes,
            },
            atb: vec![BlockState::Free; blocks],
            last_free_idx: 0,
            stats: AllocStats::default(),
        })
    }

    pub fn block_bytes(&self) -> usize {
        self.arena.block_bytes
    }

    pub fn block_count(&self) -> usize {
        self.atb.len()
    }

    pub fn last_free_idx(&self) -> usize {
        self.last_free_idx
    }

    pub fn arena(&self) -> &Arena {
        &self.arena
    }

    pub fn arena_mut(&mut self) -> &mut Arena {
        &mut self.arena
    }

    pub fn state_at(&self, block_idx: usize) -> BlockState {
        self.atb[block_idx]
    }

    pub fn blocks_needed(&self, n_bytes: usize) -> usize {
        n_bytes.div_ceil(self.arena.block_bytes)
    }

    /// Run length of the allocation headed at `addr`.
    pub fn run_len(&self, addr: usize) -> Result<usize> {
        let idx = self.head_index(addr)?;
        let mut len = 1;
        while idx + len < self.atb.len() && self.atb[idx + len] == BlockState::Tail {
            len += 1;
        }
        Ok(len)
    }

    fn head_index(&self, addr: usize) -> Result<usize> {
        let bb = self.arena.block_bytes;
        if addr % bb != 0 || addr >= self.arena.len() {
            return Err(Error::HeapConsistency(format!(
                "address {addr:#x} is not a valid block address"
            )));
        }
        let idx = addr / bb;
        match self.atb[idx] {
            BlockState::Head | BlockState::Marked => Ok(idx),
            other => Err(Error::HeapConsistency(format!(
                "address {addr:#x} is {other:?}, not a HEAD block"
            ))),
        }
    }

    /// Linear first-fit scan from `start`, no wrap. Returns the found block
    /// index and the number of loop iterations spent.
    fn scan(&self, start: usize, need: usize) -> (Option<usize>, u64) {
        let mut run = 0usize;
        let mut scanned = 0u64;
        for i in start..self.atb.len() {
            scanned += 1;
            if self.atb[i] == BlockState::Free {
                run += 1;
                if run == need {
                    return (Some(i + 1 - need), scanned);
                }
            } else {
                run = 0;
            }
        }
        (None, scanned)
    }

    /// Allocates a run of blocks covering `n_bytes`. Scans forward from the
    /// last-free index; on failure, collects once and rescans. The
    /// last-free index advances only when the run length is exactly one.
    pub fn alloc(&mut self, n_bytes: usize, gc: &dyn GcHooks) -> Result<AllocOutcome> {
        if n_bytes == 0 {
            return Err(Error::ZeroAlloc);
        }
        let need = self.blocks_needed(n_bytes);
        let (mut found, mut scanned) = self.scan(self.last_free_idx, need);
        self.stats.search_iterations += scanned;
        let mut collect = None;
        if found.is_none() {
            let outcome = self.collect(gc)?;
            collect = Some(outcome);
            let (f, s) = self.scan(self.last_free_idx, need);
            self.stats.search_iterations += s;
            scanned += s;
            found = f;
        }
        let Some(idx) = found else {
            return Err(Error::HeapExhausted { blocks: need });
        };
        self.atb[idx] = BlockState::Head;
        for t in idx + 1..idx + need {
            self.atb[t] = BlockState::Tail;
        }
        if need == 1 {
            self.last_free_idx = idx + 1;
        }
        *self.stats.alloc_count_by_blocks.entry(need).or_insert(0) += 1;
        self.stats.blocks_in_use += need;
        self.stats.bytes_in_use = self.stats.blocks_in_use * self.arena.block_bytes;
        self.stats.peak_blocks_in_use = self.stats.peak_blocks_in_use.max(self.stats.blocks_in_use);
        Ok(AllocOutcome {
            addr: idx * self.arena.block_bytes,
            blocks: need,
            scanned,
            collect,
        })
    }

    /// Frees the run headed at `addr`. Resets the last-free index downward
    /// when the freed run sits below it.
    pub fn free(&mut self, addr: usize) -> Result<usize> {
        let idx = self.head_index(addr)?;
        if self.atb[idx] == BlockState::Marked {
            return Err(Error::HeapConsistency(format!(
                "free({addr:#x}) during collection"
            )));
        }
        self.atb[idx] = BlockState::Free;
        let mut len = 1;
        while idx + len < self.atb.len() && self.atb[idx + len] == BlockState::Tail {
            self.atb[idx + len] = BlockState::Free;
            len += 1;
        }
        if idx < self.last_free_idx {
            self.last_free_idx = idx;
        }
        self.stats.blocks_in_use -= len;
        self.stats.bytes_in_use = self.stats.blocks_in_use * self.arena.block_bytes;
        Ok(len)
    }

    /// Mark/sweep collection. Marks heads reachable from the hook's roots,
    /// sweeps everything else, and resets the last-free index to the lowest
    /// free block found.
    pub fn collect(&mut self, gc: &dyn GcHooks) -> Result<CollectOutcome> {
        let mut worklist = Vec::new();
        gc.roots(&mut worklist);

        let BlockHeap {
            arena,
            atb,
            ..
        } = self;
        let bb = arena.block_bytes;
        let mut mark_steps = 0u64;
        while let Some(root) = worklist.pop() {
            mark_steps += 1;
            let addr = root.addr();
            if addr % bb != 0 || addr >= arena.len() {
                return Err(Error::HeapConsistency(format!(
                    "root {addr:#x} is not a valid block address"
                )));
            }
            let idx = addr / bb;
            match atb[idx] {
                BlockState::Marked => continue,
                BlockState::Head => {
                    atb[idx] = BlockState::Marked;
                    if let Root::Object(_) = root {
                        gc.trace(arena, addr, &mut |r| worklist.push(r));
                    }
                }
                other => {
                    return Err(Error::HeapConsistency(format!(
                        "root {addr:#x} is {other:?}, not a HEAD block"
                    )));
                }
            }
        }

        let mut reclaimed = 0usize;
        let mut lowest_free = None;
        let mut freeing = false;
        for i in 0..atb.len() {
            match atb[i] {
                BlockState::Marked => {
                    atb[i] = BlockState::Head;
                    freeing = false;
                }
                BlockState::Head => {
                    atb[i] = BlockState::Free;
                    reclaimed += 1;
                    freeing = true;
                }
                BlockState::Tail => {
                    if freeing {
                        atb[i] = BlockState::Free;
                        reclaimed += 1;
                    }
                }
                BlockState::Free => {
                    freeing = false;
                }
            }
            if atb[i] == BlockState::Free && lowest_free.is_none() {
                lowest_free = Some(i);
            }
        }
        self.last_free_idx = lowest_free.unwrap_or(self.atb.len());
        self.stats.collections += 1;
        self.stats.blocks_in_use -= reclaimed;
        self.stats.bytes_in_use = self.stats.blocks_in_use * self.arena.block_bytes;
        Ok(CollectOutcome {
            mark_steps,
            sweep_steps: self.atb.len() as u64,
            reclaimed_blocks: reclaimed,
        })
    }

    pub fn stats_snapshot(&self) -> AllocStats {
        self.stats.clone()
    }

    /// Records a heap-spilled frame allocation (called by the VM after the
    /// underlying `alloc` succeeded).
    pub fn note_frame_alloc(&mut self, blocks: usize) {
        *self
            .stats
            .frame_heap_allocs_by_blocks
            .entry(blocks)
            .or_insert(0) += 1;
    }

    /// ATB rendered as one character per block: `.` free, `H` head,
    /// `T` tail, `M` marked.
    pub fn dump_atb(&self) -> String {
        self.atb
            .iter()
            .map(|s| match s {
                BlockState::Free => '.',
                BlockState::Head => 'H',
                BlockState::Tail => 'T',
                BlockState::Marked => 'M',
            })
            .collect()
    }

    /// ATB well-formedness: no tail whose predecessor is free, and no mark
    /// bits outside a collection.
    pub fn check_well_formed(&self) -> Result<()> {
        for i in 0..self.atb.len() {
            match self.atb[i] {
                BlockState::Marked => {
                    return Err(Error::HeapConsistency(format!(
                        "block {i} MARKED outside collect"
                    )));
                }
                BlockState::Tail => {
                    let ok = i > 0
                        && matches!(
                            self.atb[i - 1],
                            BlockState::Head | BlockState::Tail | BlockState::Marked
                        );
                    if !ok {
                        return Err(Error::HeapConsistency(format!(
                            "block {i} is TAIL with no preceding HEAD"
                        )));
                    }
                }
                _ => {}
            }
        }
        let live: usize = self
            .atb
            .iter()
            .filter(|s| !matches!(s, BlockState::Free))
            .count();
        if live != self.stats.blocks_in_use {
            return Err(Error::HeapConsistency(format!(
                "blocks_in_use {} does not match ATB live count {live}",
                self.stats.blocks_in_use
            )));
        }
        Ok(())
    }
}
