use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, HashSet};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::collapse::{CollapsePlan, DecimationState};
use super::map::BijectiveMap;
use super::SelfParamError;
use crate::mesh::Mesh;

/// Number of random candidate edges drawn per collapse by [`DecimationPolicy::Random100`].
pub const RANDOM_CANDIDATES: usize = 100;
/// Sampling rounds without a valid candidate before giving up.
pub const RANDOM_ROUNDS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecimationPolicy {
    /// Global minimum-error priority queue.
    QslimGreedy,
    /// Minimum error among 100 uniformly sampled edges.
    Random100,
}

impl FromStr for DecimationPolicy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "qslim" | "qslim-greedy" => Ok(Self::QslimGreedy),
            "random100" | "random-100" => Ok(Self::Random100),
            other => Err(format!("unknown decimation policy '{other}' (expected qslim or random100)")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Decimation {
    pub coarse: Mesh,
    pub map: BijectiveMap,
    /// False when no valid edge remained before reaching the target.
    pub reached_target: bool,
}

/// Collapses edges until at most `target_vertices` remain, recording a
/// bijective map back to `mesh`. Deterministic in `(mesh, policy, seed)`.
pub fn decimate(
    mesh: &Mesh,
    target_vertices: usize,
    policy: DecimationPolicy,
    seed: u64,
) -> Result<Decimation, SelfParamError> {
    if target_vertices < 4 {
        return Err(SelfParamError::InvalidTarget(target_vertices));
    }
    let mut state = DecimationState::new(mesh);
    let (records, reached_target) = match policy {
        DecimationPolicy::QslimGreedy => run_greedy(&mut state, mesh, target_vertices),
        DecimationPolicy::Random100 => run_random(&mut state, mesh, target_vertices, seed),
    };
    let (coarse, vertex_ids, face_ids) = state.to_mesh();
    let map = BijectiveMap::new(mesh.clone(), coarse.clone(), vertex_ids, face_ids, records);
    Ok(Decimation { coarse, map, reached_target })
}

#[derive(Debug, Clone, Copy)]
struct HeapEntry {
    cost: f64,
    a: usize,
    b: usize,
    stamps: (u32, u32),
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    // reversed so BinaryHeap pops the cheapest edge first
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.a.cmp(&self.a))
            .then_with(|| other.b.cmp(&self.b))
    }
}

fn run_greedy(state: &mut DecimationState, mesh: &Mesh, target: usize) -> (Vec<super::CollapseRecord>, bool) {
    let mut stamps = vec![0u32; mesh.num_vertices()];
    let mut heap = BinaryHeap::with_capacity(mesh.num_edges());
    let push = |heap: &mut BinaryHeap<HeapEntry>, state: &DecimationState, stamps: &[u32], a: usize, b: usize| {
        let (a, b) = (a.min(b), a.max(b));
        let (_, cost) = state.placement(a, b);
        heap.push(HeapEntry { cost, a, b, stamps: (stamps[a], stamps[b]) });
    };
    for &[a, b] in mesh.edges() {
        push(&mut heap, state, &stamps, a, b);
    }
    let mut records = Vec::new();
    while state.alive_vertices() > target {
        let Some(entry) = heap.pop() else {
            return (records, false);
        };
        let (a, b) = (entry.a, entry.b);
        if !state.is_alive(a) || !state.is_alive(b) || entry.stamps != (stamps[a], stamps[b]) {
            continue;
        }
        let (pos, _) = state.placement(a, b);
        let Ok(plan) = state.validate_collapse(a, b, pos) else { continue };
        let survivor = plan.j;
        records.push(state.apply(plan));

        let ring = state.ring(survivor);
        stamps[survivor] += 1;
        for &r in &ring {
            stamps[r] += 1;
        }
        let mut seen = HashSet::new();
        for &r in std::iter::once(&survivor).chain(&ring) {
            for s in state.ring(r) {
                let key = (r.min(s), r.max(s));
                if seen.insert(key) {
                    push(&mut heap, state, &stamps, key.0, key.1);
                }
            }
        }
    }
    (records, true)
}

/// Live undirected edges with O(1) uniform sampling.
struct EdgeSet {
    list: Vec<(usize, usize)>,
    index: HashMap<(usize, usize), usize>,
}

impl EdgeSet {
    fn new(mesh: &Mesh) -> Self {
        let list: Vec<(usize, usize)> = mesh.edges().iter().map(|&[a, b]| (a, b)).collect();
        let index = list.iter().enumerate().map(|(i, &e)| (e, i)).collect();
        Self { list, index }
    }

    fn insert(&mut self, a: usize, b: usize) {
        let key = (a.min(b), a.max(b));
        if !self.index.contains_key(&key) {
            self.index.insert(key, self.list.len());
            self.list.push(key);
        }
    }

    fn remove(&mut self, a: usize, b: usize) {
        let key = (a.min(b), a.max(b));
        if let Some(i) = self.index.remove(&key) {
            self.list.swap_remove(i);
            if i < self.list.len() {
                self.index.insert(self.list[i], i);
            }
        }
    }
}

fn run_random(
    state: &mut DecimationState,
    mesh: &Mesh,
    target: usize,
    seed: u64,
) -> (Vec<super::CollapseRecord>, bool) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = EdgeSet::new(mesh);
    let mut records = Vec::new();
    while state.alive_vertices() > target {
        let mut chosen: Option<CollapsePlan> = None;
        for _ in 0..RANDOM_ROUNDS {
            let mut candidates: Vec<(f64, usize, usize, crate::mesh::Vec3)> = (0..RANDOM_CANDIDATES)
                .map(|_| {
                    let (a, b) = edges.list[rng.gen_range(0..edges.list.len())];
                    let (pos, cost) = state.placement(a, b);
                    (cost, a, b, pos)
                })
                .collect();
            candidates.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
            candidates.dedup_by(|x, y| x.1 == y.1 && x.2 == y.2);
            chosen = candidates.iter().find_map(|&(_, a, b, pos)| state.validate_collapse(a, b, pos).ok());
            if chosen.is_some() {
                break;
            }
        }
        let Some(plan) = chosen else {
            return (records, false);
        };
        let (j, k) = (plan.j, plan.k);
        let ring_k = state.ring(k);
        let record = state.apply(plan);
        for &x in &ring_k {
            edges.remove(k, x);
        }
        for &x in &ring_k {
            if x != j {
                edges.insert(j, x);
            }
        }
        records.push(record);
    }
    (records, true)
}
