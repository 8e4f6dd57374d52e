//! Pairwise edges in ascending length order, produced in memory, through an
//! external merge sort, or as a minimum spanning tree.
//!
//! All three sources agree on the component structure below every threshold,
//! so the sweep visits the same states whichever one is used.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{dist, Instance};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub i: u32,
    pub j: u32,
    pub len: f64,
}

impl Edge {
    /// Total order: length, then `(i, j)`. Lengths are non-negative so their
    /// bit patterns order like the values.
    #[inline]
    fn key(&self) -> (u64, u32, u32) {
        (self.len.to_bits(), self.i, self.j)
    }

    fn to_bytes(self) -> [u8; 16] {
        let mut b = [0u8; 16];
        b[..8].copy_from_slice(&self.len.to_bits().to_le_bytes());
        b[8..12].copy_from_slice(&self.i.to_le_bytes());
        b[12..].copy_from_slice(&self.j.to_le_bytes());
        b
    }

    fn from_bytes(b: &[u8; 16]) -> Self {
        Self {
            len: f64::from_bits(u64::from_le_bytes(b[..8].try_into().unwrap())),
            i: u32::from_le_bytes(b[8..12].try_into().unwrap()),
            j: u32::from_le_bytes(b[12..].try_into().unwrap()),
        }
    }
}

/// All `n(n-1)/2` pairs, sorted ascending by length with ties by `(i, j)`.
#[derive(Debug, Clone, Default)]
pub struct EdgeList {
    pub edges: Vec<Edge>,
}

impl EdgeList {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn lengths(&self) -> Vec<f64> {
        self.edges.iter().map(|e| e.len).collect()
    }
}

/// How the sweep obtains its sorted edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MemoryMode {
    /// In-memory edge list when it fits under the edge budget, spanning tree otherwise.
    #[default]
    Auto,
    InMemory,
    /// Sorted runs of `chunk_edges` edges spilled to temporary files, then merged.
    ExternalSort {
        chunk_edges: usize,
    },
    /// Only the minimum spanning tree edges (Prim, no edge storage).
    SpanningTree,
}

impl std::str::FromStr for MemoryMode {
    type Err = Error;

    /// `auto`, `in_memory`, `spanning_tree` or `external_sort:<chunk_edges>`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(MemoryMode::Auto),
            "in_memory" => Ok(MemoryMode::InMemory),
            "spanning_tree" => Ok(MemoryMode::SpanningTree),
            _ => s
                .strip_prefix("external_sort:")
                .and_then(|c| c.parse().ok())
                .filter(|&c: &usize| c > 0)
                .map(|chunk_edges| MemoryMode::ExternalSort { chunk_edges })
                .ok_or_else(|| Error::InvalidParameter(format!("unknown memory mode '{s}'"))),
        }
    }
}

/// Largest edge count `Auto` keeps in memory (16 bytes per edge).
pub const AUTO_IN_MEMORY_MAX_EDGES: usize = 1 << 25;

fn check_index_range(inst: &Instance) -> Result<()> {
    if inst.n() < 2 {
        return Err(Error::InvalidParameter("at least two points are required".into()));
    }
    if inst.n() > u32::MAX as usize {
        return Err(Error::TooLarge(format!("{} points exceed the u32 index range", inst.n())));
    }
    Ok(())
}

fn row_edges(inst: &Instance, i: usize, out: &mut Vec<Edge>) {
    let xi = inst.point(i);
    for j in i + 1..inst.n() {
        out.push(Edge { i: i as u32, j: j as u32, len: dist(xi, inst.point(j)) });
    }
}

pub fn sorted_edges(inst: &Instance) -> Result<EdgeList> {
    check_index_range(inst)?;
    let n = inst.n();
    let mut edges = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        row_edges(inst, i, &mut edges);
    }
    edges.sort_unstable_by_key(Edge::key);
    Ok(EdgeList { edges })
}

/// Sorted edge stream backed by spilled runs.
/// Sort key of an edge: length bits, then endpoints.
type EdgeKey = (u64, u32, u32);

pub struct ExternalEdges {
    readers: Vec<BufReader<File>>,
    heap: BinaryHeap<Reverse<(EdgeKey, usize)>>,
    pending: Vec<Option<Edge>>,
    // keeps the spill directory alive for the lifetime of the stream
    _dir: tempfile::TempDir,
}

impl ExternalEdges {
    pub fn new(inst: &Instance, chunk_edges: usize) -> Result<Self> {
        check_index_range(inst)?;
        if chunk_edges == 0 {
            return Err(Error::InvalidParameter("chunk_edges must be positive".into()));
        }
        let dir = tempfile::tempdir()?;
        let mut paths = Vec::new();
        let mut buf: Vec<Edge> = Vec::with_capacity(chunk_edges.min(1 << 24));
        let mut spill = |buf: &mut Vec<Edge>| -> Result<()> {
            buf.sort_unstable_by_key(Edge::key);
            let path = dir.path().join(format!("run{}.bin", paths.len()));
            let mut w = BufWriter::new(File::create(&path)?);
            for e in buf.iter() {
                w.write_all(&e.to_bytes())?;
            }
            w.flush()?;
            paths.push(path);
            buf.clear();
            Ok(())
        };
        let mut row = Vec::new();
        for i in 0..inst.n() {
            row.clear();
            row_edges(inst, i, &mut row);
            for &e in &row {
                buf.push(e);
                if buf.len() == chunk_edges {
                    spill(&mut buf)?;
                }
            }
        }
        if !buf.is_empty() {
            spill(&mut buf)?;
        }
        let mut readers = Vec::with_capacity(paths.len());
        for p in &paths {
            readers.push(BufReader::new(File::open(p)?));
        }
        let mut stream = Self { pending: vec![None; readers.len()], readers, heap: BinaryHeap::new(), _dir: dir };
        for r in 0..stream.readers.len() {
            stream.refill(r)?;
        }
        Ok(stream)
    }

    fn refill(&mut self, r: usize) -> Result<()> {
        let mut b = [0u8; 16];
        match self.readers[r].read_exact(&mut b) {
            Ok(()) => {
                let e = Edge::from_bytes(&b);
                self.heap.push(Reverse((e.key(), r)));
                self.pending[r] = Some(e);
                Ok(())
            }
            Err(err) if err.kind() == std::io::ErrorKind::UnexpectedEof => {
                self.pending[r] = None;
                Ok(())
            }
            Err(err) => Err(err.into()),
        }
    }

    pub fn run_count(&self) -> usize {
        self.readers.len()
    }
}

impl Iterator for ExternalEdges {
    type Item = Result<Edge>;

    fn next(&mut self) -> Option<Self::Item> {
        let Reverse((_, r)) = self.heap.pop()?;
        let e = self.pending[r].take().expect("heap entry has a pending edge");
        Some(self.refill(r).map(|()| e))
    }
}

/// Minimum spanning tree edges (Prim, O(n^2 d) time, O(n) memory), sorted
/// like [`sorted_edges`].
pub fn spanning_tree_edges(inst: &Instance) -> Result<EdgeList> {
    check_index_range(inst)?;
    let n = inst.n();
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    let mut best_from = vec![0usize; n];
    let mut edges = Vec::with_capacity(n - 1);
    let mut cur = 0;
    in_tree[0] = true;
    for _ in 1..n {
        let xc = inst.point(cur);
        let mut next = usize::MAX;
        let mut next_len = f64::INFINITY;
        for v in 0..n {
            if in_tree[v] {
                continue;
            }
            let l = dist(xc, inst.point(v));
            if l < best[v] {
                best[v] = l;
                best_from[v] = cur;
            }
            if next == usize::MAX || best[v] < next_len {
                next = v;
                next_len = best[v];
            }
        }
        in_tree[next] = true;
        let (a, b) = (best_from[next].min(next), best_from[next].max(next));
        edges.push(Edge { i: a as u32, j: b as u32, len: next_len });
        cur = next;
    }
    edges.sort_unstable_by_key(Edge::key);
    Ok(EdgeList { edges })
}

/// Sorted edge stream for the chosen memory mode.
pub fn edge_stream(inst: &Instance, mode: MemoryMode) -> Result<Box<dyn Iterator<Item = Result<Edge>>>> {
    let n = inst.n();
    let total = n.saturating_mul(n.saturating_sub(1)) / 2;
    let resolved = match mode {
        MemoryMode::Auto if total <= AUTO_IN_MEMORY_MAX_EDGES => MemoryMode::InMemory,
        MemoryMode::Auto => MemoryMode::SpanningTree,
        other => other,
    };
    Ok(match resolved {
        MemoryMode::InMemory => Box::new(sorted_edges(inst)?.edges.into_iter().map(Ok)),
        MemoryMode::SpanningTree => Box::new(spanning_tree_edges(inst)?.edges.into_iter().map(Ok)),
        MemoryMode::ExternalSort { chunk_edges } => Box::new(ExternalEdges::new(inst, chunk_edges)?),
        MemoryMode::Auto => unreachable!(),
    })
}
