//! Glued trees, their expansion, the query-counted oracle, and the snake
//! walk driver that searches for a root-to-root path.

use crate::error::{Error, Result};
use crate::graph::{self, Graph, Snake, VertexId};
use crate::grid::MomentumGrid;
use crate::linalg::SparseSym;
use crate::propagator;
use crate::tree_column::{tree_band, WavePacketSpec};
use crate::word::Word;
use crate::{hat, state};
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

/// Two complete binary trees of height `N` glued by a random cycle that
/// alternates between their leaf sets.
pub struct GluedTrees {
    pub height: usize,
    pub graph: Graph,
    pub root_left: VertexId,
    pub root_right: VertexId,
    /// Distance from `root_left`, in `0 ..= 2N+1`.
    pub layer: Vec<u8>,
}

/// Vertex ids `0 .. 2^{N+1}-2` form the left tree in heap order; the right
/// tree follows with the same layout.
pub fn make_glued_trees(height: usize, seed: u64) -> Result<GluedTrees> {
    if height == 0 {
        return Err(Error::InvalidInput("glued trees need height >= 1".into()));
    }
    let side = (1usize << (height + 1)) - 1;
    let mut g = Graph::new();
    for v in 0..2 * side {
        g.add_vertex(format!("v{v}"));
    }
    // Tree edges, heap order: vertex heap-index i has parent i/2.
    for offset in [0, side] {
        for i in 2..=side {
            g.add_edge((offset + i - 1) as VertexId, (offset + i / 2 - 1) as VertexId)?;
        }
    }
    // Alternating cycle over the leaves from two independent permutations.
    let leaf_count = 1usize << height;
    let mut left_leaves: Vec<VertexId> =
        (0..leaf_count).map(|i| (side / 2 + i) as VertexId).collect();
    let mut right_leaves: Vec<VertexId> =
        (0..leaf_count).map(|i| (side + side / 2 + i) as VertexId).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    left_leaves.shuffle(&mut rng);
    right_leaves.shuffle(&mut rng);
    for i in 0..leaf_count {
        g.add_edge(left_leaves[i], right_leaves[i])?;
        g.add_edge(right_leaves[i], left_leaves[(i + 1) % leaf_count])?;
    }

    let mut layer = vec![0u8; 2 * side];
    for i in 1..=side {
        let depth = usize::BITS - i.leading_zeros() - 1;
        layer[i - 1] = depth as u8;
        layer[side + i - 1] = (2 * height + 1 - depth as usize) as u8;
    }
    Ok(GluedTrees {
        height,
        graph: g,
        root_left: 0,
        root_right: side as VertexId,
        layer,
    })
}

/// Where a vertex of the expanded graph lives.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Region {
    /// Internal vertex of the entry tree.
    EntryTree,
    /// Vertex of one base instance (includes the shared root copies).
    Instance(u32),
    /// Internal vertex of the exit tree.
    ExitTree,
}

/// The expanded glued trees graph `G^M`: `2^{M-N}` instances of the base
/// graph between two binary trees of height `M-N`, the tree leaves
/// identified with the instance roots.
pub struct ExpandedGluedTrees {
    pub base_height: usize,
    pub total_height: usize,
    pub graph: Graph,
    /// Layer index in `[-M ..= M+1]` per vertex.
    pub layer: Vec<i32>,
    pub region: Vec<Region>,
    /// Base vertex behind each instance vertex (undefined for tree parts).
    pub base_vertex: Vec<VertexId>,
    pub root_entry: VertexId,
    pub root_exit: VertexId,
}

pub fn expand(base: &GluedTrees, total_height: usize) -> Result<ExpandedGluedTrees> {
    let n_h = base.height;
    let m_h = total_height;
    if m_h <= n_h {
        return Err(Error::InvalidInput(format!(
            "expansion height {m_h} must exceed the base height {n_h}"
        )));
    }
    let h = m_h - n_h;
    let instances = 1usize << h;
    let internal = (1usize << h) - 1; // per side, the non-leaf tree part
    let base_count = base.graph.vertex_count();

    let mut g = Graph::new();
    let entry_id = |heap: usize| (heap - 1) as VertexId;
    let inst_id = |i: usize, v: VertexId| (internal + i * base_count + v as usize) as VertexId;
    let exit_id = |heap: usize| (internal + instances * base_count + heap - 1) as VertexId;
    let total = 2 * internal + instances * base_count;

    let mut layer = vec![0i32; total];
    let mut region = vec![Region::EntryTree; total];
    let mut base_vertex = vec![0 as VertexId; total];
    for v in 0..total {
        g.add_vertex(format!("e{v}"));
    }

    for heap in 1..=internal {
        let depth = (usize::BITS - heap.leading_zeros() - 1) as i32;
        layer[entry_id(heap) as usize] = -(m_h as i32) + depth;
        layer[exit_id(heap) as usize] = m_h as i32 + 1 - depth;
        region[exit_id(heap) as usize] = Region::ExitTree;
        if heap >= 2 {
            g.add_edge(entry_id(heap), entry_id(heap / 2))?;
            g.add_edge(exit_id(heap), exit_id(heap / 2))?;
        }
    }
    for i in 0..instances {
        for v in 0..base_count as VertexId {
            let id = inst_id(i, v);
            layer[id as usize] = -(n_h as i32) + base.layer[v as usize] as i32;
            region[id as usize] = Region::Instance(i as u32);
            base_vertex[id as usize] = v;
        }
        for u in 0..base_count as VertexId {
            for &v in base.graph.neighbors(u) {
                if u < v {
                    g.add_edge(inst_id(i, u), inst_id(i, v))?;
                }
            }
        }
        // Identify tree leaves with the instance roots via direct edges to
        // the leaf parents.
        let leaf_heap = (1usize << h) + i;
        g.add_edge(inst_id(i, base.root_left), entry_id(leaf_heap / 2))?;
        g.add_edge(inst_id(i, base.root_right), exit_id(leaf_heap / 2))?;
    }

    Ok(ExpandedGluedTrees {
        base_height: n_h,
        total_height: m_h,
        graph: g,
        layer,
        region,
        base_vertex,
        root_entry: entry_id(1),
        root_exit: exit_id(1),
    })
}

impl ExpandedGluedTrees {
    pub fn in_entry_tree(&self, v: VertexId) -> bool {
        self.layer[v as usize] <= -(self.base_height as i32)
    }

    pub fn in_exit_tree(&self, v: VertexId) -> bool {
        self.layer[v as usize] > self.base_height as i32
    }

    /// Number of neighbors one layer up (towards the entry root).
    pub fn up_degree(&self, x: i32) -> u32 {
        let m = self.total_height as i32;
        match x {
            v if v == -m => 0,
            v if v <= 0 => 1,
            _ => 2,
        }
    }

    /// Number of neighbors one layer down (towards the exit root).
    pub fn down_degree(&self, x: i32) -> u32 {
        let m = self.total_height as i32;
        match x {
            v if v == m + 1 => 0,
            v if v <= 0 => 2,
            _ => 1,
        }
    }

    /// log2 of the layer size `|Y_x|`.
    pub fn layer_log_size(&self, x: i32) -> u32 {
        let m = self.total_height as i32;
        if x <= 0 {
            (m + x) as u32
        } else {
            (m + 1 - x) as u32
        }
    }
}

/// Black-box neighborhood oracle over a glued trees graph, with random
/// distinct bit-string labels and a query counter.
pub struct Oracle {
    adjacency: HashMap<u64, Vec<u64>>,
    labels: Vec<u64>,
    label_bits: usize,
    counter: AtomicU64,
    rng: Mutex<ChaCha8Rng>,
}

impl Oracle {
    /// Labels are distinct `2N+2`-bit strings drawn from the seed.
    pub fn new(base: &GluedTrees, seed: u64) -> Oracle {
        let bits = 2 * base.height + 2;
        let space = 1u64 << bits;
        let count = base.graph.vertex_count();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e3779b97f4a7c15);
        let mut used = std::collections::HashSet::new();
        let mut labels = Vec::with_capacity(count);
        while labels.len() < count {
            let candidate = rng.gen_range(0..space);
            if used.insert(candidate) {
                labels.push(candidate);
            }
        }
        let mut adjacency = HashMap::new();
        for v in 0..count {
            let neigh: Vec<u64> = base
                .graph
                .neighbors(v as VertexId)
                .iter()
                .map(|&u| labels[u as usize])
                .collect();
            adjacency.insert(labels[v], neigh);
        }
        Oracle {
            adjacency,
            labels,
            label_bits: bits,
            counter: AtomicU64::new(0),
            rng: Mutex::new(rng),
        }
    }

    /// All neighbor labels in randomized order, or `None` for an invalid
    /// label. Every call counts as one query.
    pub fn neighbors(&self, label: u64) -> Option<Vec<u64>> {
        self.counter.fetch_add(1, Ordering::SeqCst);
        let mut out = self.adjacency.get(&label)?.clone();
        out.shuffle(&mut *self.rng.lock().unwrap());
        Some(out)
    }

    pub fn query_count(&self) -> u64 {
        self.counter.load(Ordering::SeqCst)
    }

    /// Vertex-id to label map; available to the simulator, not an oracle
    /// query.
    pub fn labels(&self) -> &[u64] {
        &self.labels
    }

    pub fn label_string(&self, label: u64) -> String {
        format!("{label:0width$b}", width = self.label_bits)
    }
}

/// A start-column/move-word class of the column subspace.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ColumnClass {
    pub x: i32,
    pub word: Word,
}

/// The column subspace of `G^M` for snakes of length `n`: the nonempty
/// classes, their log2 sizes, and the compressed Hamiltonian, all obtained
/// from layer degree counts (no snake enumeration).
pub struct ColumnSystem {
    pub n: usize,
    pub classes: Vec<ColumnClass>,
    pub index: HashMap<ColumnClass, usize>,
    /// log2 |S(x,j)| per class.
    pub log_size: Vec<u32>,
    pub hamiltonian: SparseSym,
}

/// Enumerate the nonempty classes and compress `A_n(G^M)` onto them.
///
/// Matrix elements follow from layer symmetry: a move between classes
/// contributes `(number of moves per source snake) * sqrt(|S|/|S'|)`, and
/// both class sizes are products of layer branching factors.
pub fn column_system(exp: &ExpandedGluedTrees, n: usize) -> Result<ColumnSystem> {
    hat::check_dense_n(n)?;
    let m = exp.total_height as i32;
    let mut classes = Vec::new();
    let mut index = HashMap::new();
    let mut log_size = Vec::new();
    for x in -m..=m + 1 {
        'word: for word in Word::all(n) {
            let mut exponent = exp.layer_log_size(x);
            let mut z = x;
            for l in 1..=n {
                let branch = if word.bit(l) == 1 {
                    let b = exp.down_degree(z);
                    z += 1;
                    b
                } else {
                    let b = exp.up_degree(z);
                    z -= 1;
                    b
                };
                if branch == 0 || z < -m || z > m + 1 {
                    continue 'word;
                }
                exponent += branch.trailing_zeros();
            }
            let class = ColumnClass { x, word };
            index.insert(class, classes.len());
            classes.push(class);
            log_size.push(exponent);
        }
    }

    let mut triplets: Vec<(u32, u32, f64)> = Vec::new();
    for (i, class) in classes.iter().enumerate() {
        let x = class.x;
        let word = class.word;
        let head = x + word.balance();
        let first = word.bit(1);
        // Forward moves: the head extends, the start advances to v_1.
        let fx = x + 2 * first as i32 - 1;
        for b in [0u32, 1] {
            let count = if b == 1 { exp.down_degree(head) } else { exp.up_degree(head) };
            if count == 0 {
                continue;
            }
            let target = ColumnClass { x: fx, word: word.advance(b) };
            if let Some(&j) = index.get(&target) {
                let weight = count as f64
                    * 2f64.powf((log_size[i] as f64 - log_size[j] as f64) / 2.0);
                triplets.push((i as u32, j as u32, weight));
            }
        }
        // Backward moves: a new tail appears one layer up or down.
        for c in [0u32, 1] {
            let (count, bx) = if c == 1 {
                (exp.up_degree(x), x - 1)
            } else {
                (exp.down_degree(x), x + 1)
            };
            if count == 0 {
                continue;
            }
            let target = ColumnClass { x: bx, word: word.retreat(c) };
            if let Some(&j) = index.get(&target) {
                let weight = count as f64
                    * 2f64.powf((log_size[i] as f64 - log_size[j] as f64) / 2.0);
                triplets.push((i as u32, j as u32, weight));
            }
        }
    }
    let hamiltonian = SparseSym::from_triplets(classes.len(), &triplets);
    Ok(ColumnSystem { n, classes, index, log_size, hamiltonian })
}

/// Classify an enumerated snake of the expanded graph.
pub fn class_of_snake(exp: &ExpandedGluedTrees, snake: &Snake) -> ColumnClass {
    let n = snake.len();
    let mut bits = 0u32;
    for l in 1..n + 1 {
        let step = exp.layer[snake.0[l] as usize] - exp.layer[snake.0[l - 1] as usize];
        debug_assert!(step.abs() == 1);
        if step == 1 {
            bits |= 1 << (l - 1);
        }
    }
    ColumnClass { x: exp.layer[snake.0[0] as usize], word: Word::new(bits, n) }
}

/// Compress `A_n(G^M)` by explicit enumeration and projection; the oracle
/// counterpart of [`column_system`]. Only feasible for small instances.
pub fn brute_force_column_matrix(
    exp: &ExpandedGluedTrees,
    n: usize,
    capacity: usize,
) -> Result<(Vec<ColumnClass>, Vec<usize>, nalgebra::DMatrix<f64>)> {
    let space = graph::enumerate_snakes(&exp.graph, n, capacity)?;
    let mut class_members: HashMap<ColumnClass, Vec<usize>> = HashMap::new();
    for (i, s) in space.snakes().iter().enumerate() {
        class_members.entry(class_of_snake(exp, s)).or_default().push(i);
    }
    let mut classes: Vec<ColumnClass> = class_members.keys().copied().collect();
    classes.sort_by_key(|c| (c.x, c.word.bits()));
    let sizes: Vec<usize> = classes.iter().map(|c| class_members[c].len()).collect();
    let dim = classes.len();
    let mut matrix = nalgebra::DMatrix::<f64>::zeros(dim, dim);
    let class_idx: HashMap<ColumnClass, usize> =
        classes.iter().enumerate().map(|(i, c)| (*c, i)).collect();
    let snake_class: Vec<usize> = space
        .snakes()
        .iter()
        .map(|s| class_idx[&class_of_snake(exp, s)])
        .collect();
    for (r, cols, vals) in space.adjacency().rows() {
        let cr = snake_class[r];
        for (&c, &v) in cols.iter().zip(vals) {
            let cc = snake_class[c as usize];
            matrix[(cr, cc)] += v;
        }
    }
    for r in 0..dim {
        for c in 0..dim {
            matrix[(r, c)] /= (sizes[r] as f64 * sizes[c] as f64).sqrt();
        }
    }
    Ok((classes, sizes, matrix))
}

/// Largest deviation of `A_n |x,j>` from the column span, over all classes:
/// the image of a uniform class state must assign equal amplitudes within
/// every class.
pub fn column_invariance_residual(
    exp: &ExpandedGluedTrees,
    n: usize,
    capacity: usize,
) -> Result<f64> {
    let space = graph::enumerate_snakes(&exp.graph, n, capacity)?;
    let mut members: HashMap<ColumnClass, Vec<usize>> = HashMap::new();
    for (i, s) in space.snakes().iter().enumerate() {
        members.entry(class_of_snake(exp, s)).or_default().push(i);
    }
    let snake_class: Vec<ColumnClass> =
        space.snakes().iter().map(|s| class_of_snake(exp, s)).collect();
    let mut worst = 0.0f64;
    for group in members.values() {
        let scale = 1.0 / (group.len() as f64).sqrt();
        // Apply A to the normalized uniform state over the class.
        let mut image: HashMap<usize, f64> = HashMap::new();
        for &i in group {
            let (cols, vals) = space.adjacency().row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                *image.entry(c as usize).or_insert(0.0) += v * scale;
            }
        }
        // Group the image by class and measure non-uniformity.
        let mut sums: HashMap<ColumnClass, (f64, usize)> = HashMap::new();
        for (&i, &amp) in &image {
            let e = sums.entry(snake_class[i]).or_insert((0.0, 0));
            e.0 += amp;
            e.1 += 1;
        }
        for (class, &(total, seen)) in &sums {
            let size = members[class].len();
            let mean = total / size as f64;
            // Members that received nothing count as amplitude zero.
            if seen < size && mean.abs() > worst {
                worst = mean.abs();
            }
            for &i in &members[class] {
                let amp = image.get(&i).copied().unwrap_or(0.0);
                worst = worst.max((amp - mean).abs());
            }
        }
    }
    Ok(worst)
}

/// One measured sample of the algorithm run.
#[derive(Clone, Debug, Serialize)]
pub struct OutcomeRecord {
    /// The measured snake, as expanded-graph vertex descriptions.
    pub snake: Vec<String>,
    /// Whether the snake touches both the entry and the exit tree.
    pub bridging: bool,
    /// Extracted root-to-root path through one instance, as base labels.
    pub path: Option<Vec<String>>,
    /// Oracle query counter after validating this sample.
    pub queries_after: u64,
}

#[derive(Serialize)]
pub struct RunOutcome {
    pub samples: Vec<OutcomeRecord>,
    pub bridging_count: usize,
    pub total_queries: u64,
    /// Snake-space dimension of the exact simulation, or the class count
    /// when the walk ran in the column subspace.
    pub dimension: usize,
    pub exact: bool,
    /// Present when the run used the column subspace instead of the full
    /// snake space.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

pub struct GluedRunConfig {
    pub base_height: usize,
    pub total_height: usize,
    pub snake_len: usize,
    pub packet: WavePacketSpec,
    pub time: f64,
    pub samples: usize,
    pub seed: u64,
    pub grid: MomentumGrid,
    pub capacity: usize,
}

/// Run the snake-walk search: build the packet over the entry tree, evolve,
/// measure, and extract root paths from bridging snakes. Uses the exact
/// snake-space simulation when it fits the capacity, otherwise the column
/// subspace (exact for column-supported initial states by symmetry).
pub fn run_algorithm(config: &GluedRunConfig) -> Result<RunOutcome> {
    if config.snake_len < 2 * config.base_height + 1 {
        return Err(Error::InvalidInput(format!(
            "snake length {} shorter than 2N+1 = {}",
            config.snake_len,
            2 * config.base_height + 1
        )));
    }
    let base = make_glued_trees(config.base_height, config.seed)?;
    let oracle = Oracle::new(&base, config.seed);
    let exp = expand(&base, config.total_height)?;
    let n = config.snake_len;

    let exact = exp.graph.count_walks(n) <= config.capacity as u128;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x51ab_e11e);

    let sampled: Vec<Snake> = if exact {
        sample_exact(&exp, config, &mut rng)?
    } else {
        sample_column(&exp, config, &mut rng)?
    };
    let dimension = if exact {
        exp.graph.count_walks(n) as usize
    } else {
        column_system(&exp, n)?.classes.len()
    };

    let mut samples = Vec::with_capacity(sampled.len());
    let mut bridging_count = 0;
    for snake in &sampled {
        let bridging = snake.0.iter().any(|&v| exp.in_entry_tree(v))
            && snake.0.iter().any(|&v| exp.in_exit_tree(v));
        let path = if bridging {
            bridging_count += 1;
            extract_root_path(snake, &exp, &oracle)?
        } else {
            None
        };
        samples.push(OutcomeRecord {
            snake: snake.0.iter().map(|&v| describe_vertex(&exp, &oracle, v)).collect(),
            bridging,
            path: path.map(|labels| {
                labels.iter().map(|&l| oracle.label_string(l)).collect()
            }),
            queries_after: oracle.query_count(),
        });
    }

    Ok(RunOutcome {
        samples,
        bridging_count,
        total_queries: oracle.query_count(),
        dimension,
        exact,
        note: (!exact).then(|| {
            "column-subspace simulation: span and bridging statistics are exact for \
             column-supported initial states by layer symmetry"
                .to_string()
        }),
    })
}

fn describe_vertex(exp: &ExpandedGluedTrees, oracle: &Oracle, v: VertexId) -> String {
    match exp.region[v as usize] {
        Region::EntryTree => format!("T1:{v}"),
        Region::ExitTree => format!("T2:{v}"),
        Region::Instance(i) => {
            format!("I{i}:{}", oracle.label_string(oracle.labels()[exp.base_vertex[v as usize] as usize]))
        }
    }
}

/// Packet amplitudes over the entry-tree classes, normalized.
fn entry_packet(
    exp: &ExpandedGluedTrees,
    config: &GluedRunConfig,
) -> Result<Vec<(ColumnClass, Complex64)>> {
    let n = config.snake_len;
    let m = exp.total_height as i64;
    config.packet.validate()?;
    let band = tree_band_for(n)?;
    let table = band.sample(&config.grid)?;
    let coeffs = config.packet.momentum_profile();
    let raw = state::synthesize(&table, 0.0, &coeffs, (-m, m + 1), None)?;

    let mut entries = Vec::new();
    let mut norm_sq = 0.0;
    let base_n = exp.base_height as i32;
    for x in -(m as i32)..=0 {
        'word: for word in Word::all(n) {
            // Keep only classes whose snakes stay on the entry tree.
            let mut z = x;
            if z > -base_n {
                continue;
            }
            for l in 1..=n {
                z += 2 * word.bit(l) as i32 - 1;
                if z > -base_n || z < -(m as i32) {
                    continue 'word;
                }
            }
            let amp = raw.amplitude(x as i64, word.bits() as usize);
            if amp.norm_sqr() > 0.0 {
                norm_sq += amp.norm_sqr();
                entries.push((ColumnClass { x, word }, amp));
            }
        }
    }
    if norm_sq < 1e-12 {
        return Err(Error::InvalidInput(
            "packet has no support on entry-tree snakes; move x0 or shrink sigma".into(),
        ));
    }
    let scale = 1.0 / norm_sq.sqrt();
    for (_, amp) in &mut entries {
        *amp *= scale;
    }
    Ok(entries)
}

/// Median band for even n, central band otherwise (the driver permits odd
/// snake lengths such as n = 2N+1).
fn tree_band_for(n: usize) -> Result<crate::band::Band> {
    if n.is_multiple_of(2) {
        tree_band(n)
    } else {
        crate::band::Band::central(crate::band::Host::Tree, n)
    }
}

fn sample_exact(
    exp: &ExpandedGluedTrees,
    config: &GluedRunConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Snake>> {
    let n = config.snake_len;
    let space = graph::enumerate_snakes(&exp.graph, n, config.capacity)?;
    let packet = entry_packet(exp, config)?;

    let mut members: HashMap<ColumnClass, Vec<usize>> = HashMap::new();
    for (i, s) in space.snakes().iter().enumerate() {
        members.entry(class_of_snake(exp, s)).or_default().push(i);
    }
    let mut vector = vec![Complex64::default(); space.len()];
    for (class, amp) in &packet {
        let group = members.get(class).ok_or_else(|| {
            Error::InvalidInput(format!("packet class {class:?} has no snakes"))
        })?;
        let share = amp / (group.len() as f64).sqrt();
        for &i in group {
            vector[i] = share;
        }
    }
    let norm = crate::linalg::norm2(&vector);
    vector.iter_mut().for_each(|c| *c /= norm);

    let evolved = if space.len() <= 4096 {
        crate::linalg::evolve_dense(&space.adjacency().to_dense(), config.time, &vector)
    } else {
        propagator::chebyshev_evolve(
            space.adjacency(),
            config.time,
            &vector,
            propagator::ITERATIVE_TOL,
        )?
    };

    let weights: Vec<f64> = evolved.iter().map(|c| c.norm_sqr()).collect();
    Ok((0..config.samples)
        .map(|_| space.snake(sample_index(&weights, rng)).clone())
        .collect())
}

fn sample_column(
    exp: &ExpandedGluedTrees,
    config: &GluedRunConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Snake>> {
    let system = column_system(exp, config.snake_len)?;
    let packet = entry_packet(exp, config)?;
    let mut vector = vec![Complex64::default(); system.classes.len()];
    for (class, amp) in &packet {
        let idx = system.index.get(class).ok_or_else(|| {
            Error::InvalidInput(format!("packet class {class:?} is empty"))
        })?;
        vector[*idx] = *amp;
    }
    let norm = crate::linalg::norm2(&vector);
    vector.iter_mut().for_each(|c| *c /= norm);
    let evolved = propagator::chebyshev_evolve(
        &system.hamiltonian,
        config.time,
        &vector,
        propagator::ITERATIVE_TOL,
    )?;
    let weights: Vec<f64> = evolved.iter().map(|c| c.norm_sqr()).collect();
    let mut out = Vec::with_capacity(config.samples);
    for _ in 0..config.samples {
        let class = system.classes[sample_index(&weights, rng)];
        out.push(materialize_snake(exp, &class, rng)?);
    }
    Ok(out)
}

fn sample_index(weights: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let total: f64 = weights.iter().sum();
    let mut draw = rng.gen::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        draw -= w;
        if draw <= 0.0 {
            return i;
        }
    }
    weights.len() - 1
}

/// Draw a uniform member of a column class by walking the expanded graph.
fn materialize_snake(
    exp: &ExpandedGluedTrees,
    class: &ColumnClass,
    rng: &mut ChaCha8Rng,
) -> Result<Snake> {
    let starts: Vec<VertexId> = (0..exp.graph.vertex_count() as VertexId)
        .filter(|&v| exp.layer[v as usize] == class.x)
        .collect();
    if starts.is_empty() {
        return Err(Error::InvalidInput(format!("empty layer {}", class.x)));
    }
    let mut vertices = vec![starts[rng.gen_range(0..starts.len())]];
    let mut z = class.x;
    for l in 1..=class.word.len() {
        let next_layer = z + 2 * class.word.bit(l) as i32 - 1;
        let here = *vertices.last().unwrap();
        let options: Vec<VertexId> = exp
            .graph
            .neighbors(here)
            .iter()
            .copied()
            .filter(|&u| exp.layer[u as usize] == next_layer)
            .collect();
        if options.is_empty() {
            return Err(Error::InvalidInput(format!(
                "stuck materializing class {class:?} at layer {z}"
            )));
        }
        vertices.push(options[rng.gen_range(0..options.len())]);
        z = next_layer;
    }
    Ok(Snake(vertices))
}

/// If the snake crosses from the entry tree to the exit tree, return the
/// base-graph labels of a simple root-to-root path through one instance,
/// validated edge by edge against the oracle.
pub fn extract_root_path(
    snake: &Snake,
    exp: &ExpandedGluedTrees,
    oracle: &Oracle,
) -> Result<Option<Vec<u64>>> {
    let n_h = exp.base_height as i32;
    let layers: Vec<i32> = snake.0.iter().map(|&v| exp.layer[v as usize]).collect();

    let mut segment: Option<Vec<VertexId>> = None;
    'outer: for dir in [1i32, -1] {
        let indices: Vec<usize> = if dir == 1 {
            (0..snake.0.len()).collect()
        } else {
            (0..snake.0.len()).rev().collect()
        };
        for (pos, &i) in indices.iter().enumerate() {
            if layers[i] != -n_h {
                continue;
            }
            let mut walk = vec![snake.0[i]];
            for &j in &indices[pos + 1..] {
                let layer = layers[j];
                if layer <= -n_h && walk.len() > 1 {
                    break; // fell back to the entry boundary; restart scan
                }
                walk.push(snake.0[j]);
                if layer == n_h + 1 {
                    segment = Some(walk);
                    break 'outer;
                }
                if layer <= -n_h || layer > n_h + 1 {
                    break;
                }
            }
        }
    }
    let Some(walk) = segment else {
        return Ok(None);
    };

    // Trim cycles to a simple path.
    let mut path: Vec<VertexId> = Vec::new();
    let mut seen: HashMap<VertexId, usize> = HashMap::new();
    for v in walk {
        if let Some(&at) = seen.get(&v) {
            for dropped in path.drain(at + 1..) {
                seen.remove(&dropped);
            }
        } else {
            seen.insert(v, path.len());
            path.push(v);
        }
    }

    // The crossing stays inside one instance.
    let instance = match exp.region[path[0] as usize] {
        Region::Instance(i) => i,
        _ => {
            return Err(Error::Validation(
                "path segment does not start at an instance root".into(),
            ))
        }
    };
    for &v in &path {
        if exp.region[v as usize] != Region::Instance(instance) {
            return Err(Error::Validation("path segment leaves its instance".into()));
        }
    }

    // Validate against the oracle, edge by edge, on base labels.
    let labels: Vec<u64> = path
        .iter()
        .map(|&v| oracle.labels()[exp.base_vertex[v as usize] as usize])
        .collect();
    for pair in labels.windows(2) {
        let neighbors = oracle
            .neighbors(pair[0])
            .ok_or_else(|| Error::Validation(format!("label {} rejected", pair[0])))?;
        if !neighbors.contains(&pair[1]) {
            return Err(Error::Validation(format!(
                "oracle denies edge {} - {}",
                pair[0], pair[1]
            )));
        }
    }
    Ok(Some(labels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn glued_trees_counts_and_degrees() {
        let g = make_glued_trees(2, 7).unwrap();
        assert_eq!(g.graph.vertex_count(), 14);
        // 2(2^{N+1} - 2) tree edges plus 2^{N+1} cycle edges.
        assert_eq!(g.graph.edge_count(), 12 + 8);
        for v in 0..g.graph.vertex_count() as VertexId {
            let expect = if v == g.root_left || v == g.root_right { 2 } else { 3 };
            assert_eq!(g.graph.degree(v), expect, "vertex {v}");
        }
        let n3 = make_glued_trees(3, 1).unwrap();
        assert_eq!(n3.graph.vertex_count(), 30);
    }

    #[test]
    fn cycle_alternates_between_leaf_sets() {
        let g = make_glued_trees(3, 99).unwrap();
        let side = (1 << 4) - 1;
        for v in 0..g.graph.vertex_count() as VertexId {
            if g.graph.degree(v) == 3 && g.layer[v as usize] as usize == g.height {
                // A left leaf: exactly two neighbors on the right side.
                let crossings = g
                    .graph
                    .neighbors(v)
                    .iter()
                    .filter(|&&u| (u as usize) >= side)
                    .count();
                assert_eq!(crossings, 2, "leaf {v}");
            }
        }
    }

    #[test]
    fn seeds_change_only_the_cycle() {
        let a = make_glued_trees(2, 1).unwrap();
        let b = make_glued_trees(2, 2).unwrap();
        assert_eq!(a.graph.vertex_count(), b.graph.vertex_count());
        assert_eq!(a.layer, b.layer);
        // Tree edges identical; cycles generally differ.
        let side = a.graph.vertex_count() / 2;
        for v in 0..side as VertexId {
            let ta: Vec<_> =
                a.graph.neighbors(v).iter().filter(|&&u| (u as usize) < side).collect();
            let tb: Vec<_> =
                b.graph.neighbors(v).iter().filter(|&&u| (u as usize) < side).collect();
            assert_eq!(ta, tb);
        }
    }

    #[test]
    fn expansion_shape() {
        let base = make_glued_trees(2, 3).unwrap();
        let exp = expand(&base, 4).unwrap();
        // Looks like glued trees of height 4: 2(2^5 - 1) vertices.
        assert_eq!(exp.graph.vertex_count(), 62);
        // Layer sizes double down the entry tree.
        let m = exp.total_height as i32;
        for x in -m..=0 {
            let count = exp
                .layer
                .iter()
                .filter(|&&l| l == x)
                .count();
            assert_eq!(count, 1 << (m + x), "layer {x}");
        }
        assert!(expand(&base, 2).is_err());
        let two = expand(&base, 3).unwrap();
        // M = N+1 gives two instances.
        let instances = two
            .region
            .iter()
            .filter_map(|r| match r {
                Region::Instance(i) => Some(*i),
                _ => None,
            })
            .max()
            .unwrap()
            + 1;
        assert_eq!(instances, 2);
    }

    #[test]
    fn expanded_graph_degrees_match_layer_tables() {
        let base = make_glued_trees(1, 5).unwrap();
        let exp = expand(&base, 3).unwrap();
        for v in 0..exp.graph.vertex_count() as VertexId {
            let x = exp.layer[v as usize];
            let up = exp
                .graph
                .neighbors(v)
                .iter()
                .filter(|&&u| exp.layer[u as usize] == x - 1)
                .count() as u32;
            let down = exp
                .graph
                .neighbors(v)
                .iter()
                .filter(|&&u| exp.layer[u as usize] == x + 1)
                .count() as u32;
            assert_eq!(up, exp.up_degree(x), "vertex {v} layer {x}");
            assert_eq!(down, exp.down_degree(x), "vertex {v} layer {x}");
        }
    }

    #[test]
    fn oracle_counts_queries_and_rejects_bad_labels() {
        let base = make_glued_trees(2, 11).unwrap();
        let oracle = Oracle::new(&base, 11);
        assert_eq!(oracle.query_count(), 0);
        let root = oracle.labels()[base.root_left as usize];
        let neigh = oracle.neighbors(root).unwrap();
        assert_eq!(neigh.len(), 2);
        assert_eq!(oracle.query_count(), 1);
        // An unused label: all labels are distinct 2N+2-bit strings.
        let bad = (0..(1u64 << 6)).find(|c| !oracle.labels().contains(c)).unwrap();
        assert!(oracle.neighbors(bad).is_none());
        assert_eq!(oracle.query_count(), 2);
    }

    #[test]
    fn column_compression_matches_brute_force() {
        let base = make_glued_trees(2, 21).unwrap();
        let exp = expand(&base, 4).unwrap();
        let n = 3;
        let system = column_system(&exp, n).unwrap();
        let (classes, sizes, dense) =
            brute_force_column_matrix(&exp, n, graph::DEFAULT_CAPACITY).unwrap();
        assert_eq!(system.classes.len(), classes.len());
        for (i, class) in classes.iter().enumerate() {
            let idx = system.index[class];
            assert_eq!(1usize << system.log_size[idx], sizes[i], "size of {class:?}");
        }
        let mut worst = 0.0f64;
        for (i, ci) in classes.iter().enumerate() {
            for (j, cj) in classes.iter().enumerate() {
                let fast = system.hamiltonian.get(system.index[ci], system.index[cj]);
                worst = worst.max((fast - dense[(i, j)]).abs());
            }
        }
        assert!(worst < 1e-10, "compression deviates by {worst:e}");
    }

    #[test]
    fn column_subspace_is_invariant() {
        let base = make_glued_trees(2, 31).unwrap();
        let exp = expand(&base, 4).unwrap();
        let residual = column_invariance_residual(&exp, 3, graph::DEFAULT_CAPACITY).unwrap();
        assert!(residual < 1e-10, "residual {residual:e}");
    }

    #[test]
    fn compressed_matrix_is_cycle_independent() {
        let n = 3;
        let mats: Vec<_> = [5u64, 6u64]
            .iter()
            .map(|&seed| {
                let base = make_glued_trees(1, seed).unwrap();
                let exp = expand(&base, 3).unwrap();
                let (classes, _, dense) =
                    brute_force_column_matrix(&exp, n, graph::DEFAULT_CAPACITY).unwrap();
                (classes, dense)
            })
            .collect();
        assert_eq!(mats[0].0, mats[1].0);
        let diff = (&mats[0].1 - &mats[1].1).abs().max();
        assert!(diff < 1e-12, "cycle dependence {diff:e}");
    }

    #[test]
    fn interior_column_matrix_matches_infinite_display() {
        // Away from the roots the exact compression reproduces the
        // infinite-M column Hamiltonian.
        let base = make_glued_trees(2, 41).unwrap();
        let exp = expand(&base, 4).unwrap();
        let n = 3;
        let system = column_system(&exp, n).unwrap();
        let display = crate::tree_column::column_hamiltonian(n, -6, 6).unwrap();
        // Source columns whose coupled classes all exist in the finite
        // graph; nearer the roots some deep words have no snakes.
        let mut checked = 0;
        for x in 0..=1i64 {
            for w in 0..(1usize << n) {
                let class = ColumnClass { x: x as i32, word: Word::new(w as u32, n) };
                let Some(&row) = system.index.get(&class) else { continue };
                for dx in [-1i64, 1] {
                    for w2 in 0..(1usize << n) {
                        let target =
                            ColumnClass { x: (x + dx) as i32, word: Word::new(w2 as u32, n) };
                        let fast = system
                            .index
                            .get(&target)
                            .map(|&c| system.hamiltonian.get(row, c))
                            .unwrap_or(0.0);
                        let disp = display.entry((x, w), (x + dx, w2));
                        assert_abs_diff_eq!(fast, disp, epsilon = 1e-10);
                        checked += 1;
                    }
                }
            }
        }
        assert!(checked > 0);
    }

    #[test]
    fn end_to_end_small_run_finds_a_path() {
        let config = GluedRunConfig {
            base_height: 1,
            total_height: 3,
            snake_len: 3,
            packet: WavePacketSpec { x0: -2, k0: 1.5 * PI, sigma: 0.6 },
            time: 2.5,
            samples: 100,
            seed: 42,
            grid: MomentumGrid::new(256).unwrap(),
            capacity: graph::DEFAULT_CAPACITY,
        };
        let outcome = run_algorithm(&config).unwrap();
        assert!(outcome.exact);
        assert_eq!(outcome.samples.len(), 100);
        assert!(outcome.bridging_count >= 1, "no bridging snakes at t=2.5");
        for record in &outcome.samples {
            if record.bridging {
                let path = record.path.as_ref().expect("bridging snake yields a path");
                assert!(path.len() > 3, "path length {}", path.len());
            }
        }
        // Queries only happen at validation time.
        if outcome.bridging_count == 0 {
            assert_eq!(outcome.total_queries, 0);
        } else {
            assert!(outcome.total_queries > 0);
        }
    }

    #[test]
    fn column_path_matches_exact_statistics() {
        // Force the column-subspace engine by shrinking the capacity; the
        // sampled snakes must still be valid walks and bridge at a similar
        // rate to the exact engine.
        let mut config = GluedRunConfig {
            base_height: 1,
            total_height: 3,
            snake_len: 3,
            packet: WavePacketSpec { x0: -2, k0: 1.5 * PI, sigma: 0.6 },
            time: 2.5,
            samples: 150,
            seed: 42,
            grid: MomentumGrid::new(256).unwrap(),
            capacity: graph::DEFAULT_CAPACITY,
        };
        let exact = run_algorithm(&config).unwrap();
        assert!(exact.exact);
        config.capacity = 10;
        let column = run_algorithm(&config).unwrap();
        assert!(!column.exact);
        assert!(column.note.is_some());
        assert!(column.bridging_count >= 1);
        // Same physics, independent sampling paths: rates agree loosely.
        let rate_a = exact.bridging_count as f64 / 150.0;
        let rate_b = column.bridging_count as f64 / 150.0;
        assert!((rate_a - rate_b).abs() < 0.1, "rates {rate_a} vs {rate_b}");
        for record in &column.samples {
            if record.bridging {
                assert!(record.path.is_some());
            }
        }
    }

    #[test]
    fn zero_time_keeps_snakes_on_entry_tree() {
        let config = GluedRunConfig {
            base_height: 1,
            total_height: 3,
            snake_len: 3,
            packet: WavePacketSpec { x0: -2, k0: 1.5 * PI, sigma: 0.6 },
            time: 0.0,
            samples: 40,
            seed: 7,
            grid: MomentumGrid::new(256).unwrap(),
            capacity: graph::DEFAULT_CAPACITY,
        };
        let outcome = run_algorithm(&config).unwrap();
        for record in &outcome.samples {
            assert!(!record.bridging);
            assert!(record.snake.iter().all(|s| s.starts_with("T1:") || s.starts_with("I")));
        }
        assert_eq!(outcome.total_queries, 0);
    }

    #[test]
    fn handmade_bridging_snake_extracts() {
        let base = make_glued_trees(1, 3).unwrap();
        let oracle = Oracle::new(&base, 3);
        let exp = expand(&base, 2).unwrap();
        // Walk from an instance root (layer -1) through the glued part to a
        // layer-2 root copy: layers -1, 0, 1, 2.
        let start = (0..exp.graph.vertex_count() as VertexId)
            .find(|&v| exp.layer[v as usize] == -1)
            .unwrap();
        let mut snake = vec![start];
        for target in [0i32, 1, 2] {
            let here = *snake.last().unwrap();
            let next = exp
                .graph
                .neighbors(here)
                .iter()
                .copied()
                .find(|&u| exp.layer[u as usize] == target)
                .unwrap();
            snake.push(next);
        }
        let snake = Snake(snake);
        let path = extract_root_path(&snake, &exp, &oracle).unwrap().unwrap();
        assert_eq!(path.len(), 4); // 2N+1 = 3 edges
        let mut sorted = path.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), path.len(), "path is simple");

        // A snake inside the entry side yields no path.
        let inner = Snake(vec![snake.0[0], snake.0[1], snake.0[0], snake.0[1]]);
        assert!(extract_root_path(&inner, &exp, &oracle).unwrap().is_none());
    }
}
