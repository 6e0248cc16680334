//! Graphs, snake enumeration, move predicates, and the snake-walk
//! Hamiltonian `A_n(G)` for arbitrary finite graphs.
//!
//! A snake of length `n` is a directed walk `(v_0, ..., v_n)`; it can move
//! forward by advancing its head to any neighbor of `v_n` (dropping `v_0`)
//! and backward by growing a new tail at any neighbor of `v_0` (dropping
//! `v_n`). The weight between two snakes is the number of moves connecting
//! them, which is 0, 1 or 2; the weight 2 occurs exactly for the zigzag
//! pair `(u,v,u,...)`, `(v,u,v,...)` on a single edge.

use crate::error::{Error, Result};
use crate::linalg::SparseSym;
use crate::word::Word;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt::Write as _;

pub type VertexId = u32;

/// Finite undirected unweighted graph with interned string labels.
/// Adjacency lists are kept sorted so every enumeration is deterministic.
#[derive(Clone, Debug, Default)]
pub struct Graph {
    labels: Vec<String>,
    by_label: HashMap<String, VertexId>,
    adj: Vec<Vec<VertexId>>,
}

impl Graph {
    pub fn new() -> Self {
        Graph::default()
    }

    pub fn add_vertex(&mut self, label: impl Into<String>) -> VertexId {
        let label = label.into();
        if let Some(&id) = self.by_label.get(&label) {
            return id;
        }
        let id = self.labels.len() as VertexId;
        self.by_label.insert(label.clone(), id);
        self.labels.push(label);
        self.adj.push(Vec::new());
        id
    }

    pub fn add_edge(&mut self, u: VertexId, v: VertexId) -> Result<()> {
        if u == v {
            return Err(Error::InvalidInput(format!(
                "self-loop at vertex {}",
                self.labels[u as usize]
            )));
        }
        if self.adj[u as usize].contains(&v) {
            return Err(Error::InvalidInput(format!(
                "duplicate edge {} {}",
                self.labels[u as usize], self.labels[v as usize]
            )));
        }
        self.adj[u as usize].push(v);
        self.adj[v as usize].push(u);
        self.adj[u as usize].sort_unstable();
        self.adj[v as usize].sort_unstable();
        Ok(())
    }

    /// Parse an edge-list text: one `u v` pair of string ids per line.
    /// Blank lines and lines starting with `#` are skipped.
    pub fn from_edge_list(text: &str) -> Result<Self> {
        let mut g = Graph::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut it = line.split_whitespace();
            let (u, v) = match (it.next(), it.next(), it.next()) {
                (Some(u), Some(v), None) => (u, v),
                _ => {
                    return Err(Error::Parse(format!(
                        "line {}: expected exactly two vertex ids, got {line:?}",
                        lineno + 1
                    )))
                }
            };
            let ui = g.add_vertex(u);
            let vi = g.add_vertex(v);
            g.add_edge(ui, vi)?;
        }
        Ok(g)
    }

    /// Parse an edge-list file; see [`Graph::from_edge_list`].
    pub fn from_edge_list_file(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::from_edge_list(&std::fs::read_to_string(path)?)
    }

    pub fn vertex_count(&self) -> usize {
        self.labels.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(|a| a.len()).sum::<usize>() / 2
    }

    pub fn neighbors(&self, v: VertexId) -> &[VertexId] {
        &self.adj[v as usize]
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.adj[v as usize].len()
    }

    pub fn label(&self, v: VertexId) -> &str {
        &self.labels[v as usize]
    }

    pub fn vertex(&self, label: &str) -> Option<VertexId> {
        self.by_label.get(label).copied()
    }

    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for u in 0..self.vertex_count() as VertexId {
            for &v in self.neighbors(u) {
                if u < v {
                    writeln!(out, "{} {}", self.label(u), self.label(v)).unwrap();
                }
            }
        }
        out
    }

    /// Number of directed walks of length `n`, counted as
    /// `sum_{u,v} (A^n)_{u,v}` with the 0/1 adjacency matrix.
    pub fn count_walks(&self, n: usize) -> u128 {
        // Vector iteration of A^n against the all-ones vector.
        let mut ones = vec![1u128; self.vertex_count()];
        for _ in 0..n {
            let mut next = vec![0u128; self.vertex_count()];
            for u in 0..self.vertex_count() {
                for &v in self.neighbors(u as VertexId) {
                    next[u] += ones[v as usize];
                }
            }
            ones = next;
        }
        ones.iter().sum()
    }

    /// Path graph on integer labels `lo..=hi`.
    pub fn line_window(lo: i64, hi: i64) -> Self {
        let mut g = Graph::new();
        let ids: Vec<VertexId> = (lo..=hi).map(|x| g.add_vertex(x.to_string())).collect();
        for w in ids.windows(2) {
            g.add_edge(w[0], w[1]).unwrap();
        }
        g
    }

    pub fn cycle(len: usize) -> Self {
        let mut g = Graph::new();
        let ids: Vec<VertexId> = (0..len).map(|x| g.add_vertex(x.to_string())).collect();
        for i in 0..len {
            g.add_edge(ids[i], ids[(i + 1) % len]).unwrap();
        }
        g
    }

    /// Complete binary tree of the given height, heap-labeled from "1".
    pub fn complete_binary_tree(height: usize) -> Self {
        let mut g = Graph::new();
        let count = (1usize << (height + 1)) - 1;
        let ids: Vec<VertexId> = (1..=count).map(|x| g.add_vertex(x.to_string())).collect();
        for i in 2..=count {
            g.add_edge(ids[i - 1], ids[i / 2 - 1]).unwrap();
        }
        g
    }
}

/// A directed walk of fixed length; reversal is a distinct snake.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Snake(pub Vec<VertexId>);

impl Snake {
    /// Snake length `n` (number of edges).
    pub fn len(&self) -> usize {
        self.0.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn head(&self) -> VertexId {
        *self.0.last().unwrap()
    }

    pub fn tail(&self) -> VertexId {
        self.0[0]
    }

    pub fn is_walk_on(&self, g: &Graph) -> bool {
        self.0.windows(2).all(|w| g.neighbors(w[0]).contains(&w[1]))
    }
}

impl std::fmt::Debug for Snake {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Snake{:?}", self.0)
    }
}

/// `m_f(s, t)`: the head advances to a neighbor of `v_n`, the tail is dropped.
pub fn can_move_forward(s: &Snake, t: &Snake, g: &Graph) -> Result<bool> {
    check_same_length(s, t)?;
    let n = s.len();
    Ok(s.0[1..] == t.0[..n] && g.neighbors(s.head()).contains(&t.head()))
}

/// `m_b(s, t)`: a new tail appears at a neighbor of `v_0`, the head is dropped.
pub fn can_move_backward(s: &Snake, t: &Snake, g: &Graph) -> Result<bool> {
    check_same_length(s, t)?;
    let n = s.len();
    Ok(s.0[..n] == t.0[1..] && g.neighbors(s.tail()).contains(&t.tail()))
}

fn check_same_length(s: &Snake, t: &Snake) -> Result<()> {
    if s.len() != t.len() {
        return Err(Error::LengthMismatch { left: s.len(), right: t.len() });
    }
    Ok(())
}

/// Default ceiling on the number of enumerated snakes.
pub const DEFAULT_CAPACITY: usize = 5_000_000;

/// The enumerated configuration space `S_n(G)` together with the weighted
/// adjacency `A_n(G)`.
#[derive(Debug)]
pub struct SnakeSpace {
    n: usize,
    snakes: Vec<Snake>,
    index: HashMap<Snake, usize>,
    weights: SparseSym,
}

impl SnakeSpace {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.snakes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snakes.is_empty()
    }

    pub fn snakes(&self) -> &[Snake] {
        &self.snakes
    }

    pub fn snake(&self, i: usize) -> &Snake {
        &self.snakes[i]
    }

    pub fn index_of(&self, s: &Snake) -> Option<usize> {
        self.index.get(s).copied()
    }

    /// The symmetric weight matrix `A_n(G)` with entries `m_f + m_b`.
    pub fn adjacency(&self) -> &SparseSym {
        &self.weights
    }

    pub fn to_json(&self, g: &Graph) -> serde_json::Value {
        let snakes: Vec<Vec<&str>> = self
            .snakes
            .iter()
            .map(|s| s.0.iter().map(|&v| g.label(v)).collect())
            .collect();
        let mut triplets = Vec::new();
        for (r, cols, vals) in self.weights.rows() {
            for (&c, &v) in cols.iter().zip(vals) {
                if r <= c as usize {
                    triplets.push((r, c, v));
                }
            }
        }
        serde_json::json!({ "n": self.n, "snakes": snakes, "weights": triplets })
    }
}

/// Enumerate every directed walk of length `n` in lexicographic vertex-id
/// order and build `A_n(G)`.
pub fn enumerate_snakes(g: &Graph, n: usize, capacity: usize) -> Result<SnakeSpace> {
    if n == 0 {
        return Err(Error::InvalidInput("snake length must be at least 1".into()));
    }
    if g.vertex_count() == 0 {
        return Err(Error::InvalidInput("graph has no vertices".into()));
    }
    let predicted = g.count_walks(n);
    if predicted > capacity as u128 {
        return Err(Error::Capacity {
            required: predicted.try_into().unwrap_or(usize::MAX),
            limit: capacity,
        });
    }

    let mut snakes = Vec::with_capacity(predicted as usize);
    let mut stack: Vec<VertexId> = Vec::with_capacity(n + 1);
    for start in 0..g.vertex_count() as VertexId {
        stack.push(start);
        extend_walks(g, n, &mut stack, &mut snakes);
        stack.pop();
    }

    let index: HashMap<Snake, usize> =
        snakes.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();

    // One triplet per move; coincident forward and backward moves accumulate
    // to the weight 2.
    let mut triplets: Vec<(u32, u32, f64)> = Vec::new();
    for (i, s) in snakes.iter().enumerate() {
        for &head in g.neighbors(s.head()) {
            let mut t = s.0[1..].to_vec();
            t.push(head);
            let j = index[&Snake(t)];
            triplets.push((i as u32, j as u32, 1.0));
        }
        for &tail in g.neighbors(s.tail()) {
            let mut t = vec![tail];
            t.extend_from_slice(&s.0[..n]);
            let j = index[&Snake(t)];
            triplets.push((i as u32, j as u32, 1.0));
        }
    }
    let weights = SparseSym::from_triplets(snakes.len(), &triplets);

    Ok(SnakeSpace { n, snakes, index, weights })
}

fn extend_walks(g: &Graph, n: usize, stack: &mut Vec<VertexId>, out: &mut Vec<Snake>) {
    if stack.len() == n + 1 {
        out.push(Snake(stack.clone()));
        return;
    }
    let last = *stack.last().unwrap();
    for &v in g.neighbors(last) {
        stack.push(v);
        extend_walks(g, n, stack, out);
        stack.pop();
    }
}

/// Encode a walk on the integer line as `(start, move word)`:
/// `v_0 = x` and `v_l = v_{l-1} - (-1)^{j_l}`.
pub fn line_encode(positions: &[i64]) -> Result<(i64, Word)> {
    if positions.len() < 2 {
        return Err(Error::InvalidInput("snake needs at least two vertices".into()));
    }
    let n = positions.len() - 1;
    if n > 31 {
        return Err(Error::Capacity { required: n, limit: 31 });
    }
    let mut bits = 0u32;
    for l in 1..=n {
        match positions[l] - positions[l - 1] {
            -1 => {}
            1 => bits |= 1 << (l - 1),
            _ => {
                return Err(Error::NotOnLine(format!(
                    "step {} -> {} is not a unit step",
                    positions[l - 1],
                    positions[l]
                )))
            }
        }
    }
    Ok((positions[0], Word::new(bits, n)))
}

/// Inverse of [`line_encode`].
pub fn line_decode(x: i64, word: Word) -> Vec<i64> {
    let mut positions = Vec::with_capacity(word.len() + 1);
    positions.push(x);
    let mut v = x;
    for l in 1..=word.len() {
        v += if word.bit(l) == 1 { 1 } else { -1 };
        positions.push(v);
    }
    positions
}
