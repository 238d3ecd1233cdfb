//! Sparse collections of dyadic intervals: exact certification by max-flow,
//! the sparse bilinear form and stopping-time sparse dominations.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_len, Error, Result};
use crate::lattice::{interval_sum, DyadicGrid, Interval};
use crate::math::{ceil, exp, powf};
use crate::operators::Operator;
use crate::rng;

/// Density used when none is given: `|Q| ≤ 2|E_Q|`.
pub const DEFAULT_DENSITY: f64 = 0.5;

/// Dyadic intervals with optional pairwise disjoint witness sets `E_Q ⊆ Q`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SparseCollection {
    pub grid: DyadicGrid,
    /// Sorted by level, then position, without repeats.
    pub cubes: Vec<Interval>,
    /// Cell lists, one per cube in `cubes` order.
    pub witnesses: Option<Vec<Vec<usize>>>,
    pub density: f64,
}

impl SparseCollection {
    /// Canonicalizes `cubes` (dyadic, inside the grid) without witnesses.
    pub fn new(grid: DyadicGrid, cubes: Vec<Interval>, density: f64) -> Result<Self> {
        check_density(density)?;
        let mut keyed = Vec::with_capacity(cubes.len());
        for q in cubes {
            let (level, index) =
                q.dyadic_coords(grid).ok_or_else(|| Error::domain("sparse collections hold dyadic intervals of the grid"))?;
            keyed.push(((level, index), q));
        }
        keyed.sort();
        keyed.dedup();
        Ok(SparseCollection { grid, cubes: keyed.into_iter().map(|(_, q)| q).collect(), witnesses: None, density })
    }

    /// Number of cells cube `q` must own: `⌈density · |Q| · N⌉`.
    pub fn demand(&self, q: Interval) -> usize {
        demand(self.density, q)
    }

    /// Re-checks the witness invariants directly: `E_Q ⊆ Q`, pairwise
    /// disjoint, and `|E_Q| ≥ density · |Q|`.
    pub fn verify_witnesses(&self) -> bool {
        let Some(ws) = &self.witnesses else { return false };
        if ws.len() != self.cubes.len() {
            return false;
        }
        let mut used = vec![false; self.grid.cells()];
        for (q, e) in self.cubes.iter().zip(ws) {
            if (e.len() as f64) < self.density * q.len() as f64 {
                return false;
            }
            for &c in e {
                if !q.contains(c) || used[c] {
                    return false;
                }
                used[c] = true;
            }
        }
        true
    }
}

fn check_density(density: f64) -> Result<()> {
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::domain("density must lie in (0, 1]"));
    }
    Ok(())
}

fn demand(density: f64, q: Interval) -> usize {
    ceil(density * q.len() as f64) as usize
}

/// Outcome of [`certify_sparse`].
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum SparseCertificate {
    /// Witness sets are attached to the collection.
    Feasible(SparseCollection),
    /// A subfamily whose total demand exceeds the cells its members cover.
    Infeasible { family: Vec<Interval>, demand: usize, capacity: usize },
}

impl SparseCertificate {
    pub fn is_feasible(&self) -> bool {
        matches!(self, SparseCertificate::Feasible(_))
    }
}

/// Decides whether every cube can own `⌈density·|Q|·N⌉` of its cells with no
/// cell used twice, by integral max-flow (source → cube → cell → sink).
/// On failure the cubes reachable from the source in the residual graph form
/// a family violating Hall's condition.
pub fn certify_sparse(collection: &SparseCollection) -> SparseCertificate {
    let cubes = &collection.cubes;
    let n = collection.grid.cells();
    let k = cubes.len();
    let (source, sink) = (0, 1);
    let cube_node = |j: usize| 2 + j;
    let cell_node = |c: usize| 2 + k + c;
    let mut net = FlowNetwork::new(2 + k + n);
    let mut total = 0;
    let mut cube_edges = Vec::with_capacity(k);
    for (j, q) in cubes.iter().enumerate() {
        let d = collection.demand(*q);
        total += d;
        net.add_edge(source, cube_node(j), d);
        let first = net.edges.len();
        for c in q.start..q.end {
            net.add_edge(cube_node(j), cell_node(c), 1);
        }
        cube_edges.push(first);
    }
    for c in 0..n {
        net.add_edge(cell_node(c), sink, 1);
    }
    let flow = net.max_flow(source, sink);
    if flow == total {
        let witnesses = cubes
            .iter()
            .enumerate()
            .map(|(j, q)| {
                (0..q.len()).filter(|&t| net.edges[cube_edges[j] + 2 * t].cap == 0).map(|t| q.start + t).collect()
            })
            .collect();
        let mut out = collection.clone();
        out.witnesses = Some(witnesses);
        return SparseCertificate::Feasible(out);
    }
    let reach = net.reachable(source);
    let family: Vec<Interval> = (0..k).filter(|&j| reach[cube_node(j)]).map(|j| cubes[j]).collect();
    let mut covered = vec![false; n];
    for q in &family {
        covered[q.start..q.end].iter_mut().for_each(|c| *c = true);
    }
    let demand = family.iter().map(|&q| collection.demand(q)).sum();
    let capacity = covered.iter().filter(|&&c| c).count();
    SparseCertificate::Infeasible { family, demand, capacity }
}

struct Edge {
    to: usize,
    cap: usize,
}

/// Dinic's algorithm on unit-ish capacities. Edge `2i` is forward, `2i+1` its residual twin.
struct FlowNetwork {
    edges: Vec<Edge>,
    adj: Vec<Vec<usize>>,
}

impl FlowNetwork {
    fn new(nodes: usize) -> Self {
        FlowNetwork { edges: Vec::new(), adj: vec![Vec::new(); nodes] }
    }

    fn add_edge(&mut self, from: usize, to: usize, cap: usize) {
        self.adj[from].push(self.edges.len());
        self.edges.push(Edge { to, cap });
        self.adj[to].push(self.edges.len());
        self.edges.push(Edge { to: from, cap: 0 });
    }

    fn levels(&self, s: usize) -> Vec<usize> {
        let mut level = vec![usize::MAX; self.adj.len()];
        level[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            for &e in &self.adj[v] {
                let edge = &self.edges[e];
                if edge.cap > 0 && level[edge.to] == usize::MAX {
                    level[edge.to] = level[v] + 1;
                    queue.push_back(edge.to);
                }
            }
        }
        level
    }

    fn reachable(&self, s: usize) -> Vec<bool> {
        self.levels(s).iter().map(|&l| l != usize::MAX).collect()
    }

    fn max_flow(&mut self, s: usize, t: usize) -> usize {
        let mut flow = 0;
        loop {
            let level = self.levels(s);
            if level[t] == usize::MAX {
                return flow;
            }
            let mut next = vec![0usize; self.adj.len()];
            loop {
                let pushed = self.augment(s, t, usize::MAX, &level, &mut next);
                if pushed == 0 {
                    break;
                }
                flow += pushed;
            }
        }
    }

    /// Iterative blocking-flow search along level-increasing edges.
    fn augment(&mut self, s: usize, t: usize, limit: usize, level: &[usize], next: &mut [usize]) -> usize {
        let mut path: Vec<usize> = Vec::new();
        let mut v = s;
        loop {
            if v == t {
                let bottleneck = path.iter().fold(limit, |m, &e| m.min(self.edges[e].cap));
                for &e in &path {
                    self.edges[e].cap -= bottleneck;
                    self.edges[e ^ 1].cap += bottleneck;
                }
                return bottleneck;
            }
            let mut advanced = false;
            while next[v] < self.adj[v].len() {
                let e = self.adj[v][next[v]];
                let edge = &self.edges[e];
                if edge.cap > 0 && level[edge.to] == level[v] + 1 {
                    path.push(e);
                    v = edge.to;
                    advanced = true;
                    break;
                }
                next[v] += 1;
            }
            if !advanced {
                // Dead end: retreat and skip the edge that led here.
                match path.pop() {
                    Some(e) => {
                        v = self.edges[e ^ 1].to;
                        next[v] += 1;
                    }
                    None => return 0,
                }
            }
        }
    }
}

fn check_exponents(p_minus: f64, p_plus: f64) -> Result<()> {
    if !(p_minus >= 1.0 && p_minus <= p_plus) {
        return Err(Error::domain("exponents must satisfy 1 <= p_minus <= p_plus <= inf"));
    }
    Ok(())
}

/// `|f|^p` cellwise (`|f|` when `p` is 1 or ∞).
fn powered(f: &[f64], p: f64) -> Vec<f64> {
    if p == 1.0 || p.is_infinite() {
        f.iter().map(|v| v.abs()).collect()
    } else {
        f.iter().map(|v| powf(v.abs(), p)).collect()
    }
}

/// `⟨|f|^p⟩_Q^{1/p}` from `pw = |f|^p`, or the maximum over `Q` for `p = ∞`.
fn p_average(pw: &[f64], q: Interval, p: f64) -> f64 {
    if p.is_infinite() {
        return pw[q.start..q.end].iter().fold(0.0f64, |m, &v| m.max(v));
    }
    let avg = interval_sum(pw, q) / q.len() as f64;
    if p == 1.0 {
        avg
    } else {
        powf(avg, 1.0 / p)
    }
}

/// `Σ_{Q∈S} ⟨|f|^{p₋}⟩_Q^{1/p₋} ⟨|g|^{p₊}⟩_Q^{1/p₊} |Q|` for scalar functions on the grid.
pub fn sparse_form(s: &SparseCollection, f: &[f64], g: &[f64], p_minus: f64, p_plus: f64) -> Result<f64> {
    check_exponents(p_minus, p_plus)?;
    let n = s.grid.cells();
    check_len(n, f.len())?;
    check_len(n, g.len())?;
    let h = 1.0 / n as f64;
    let (pf, pg) = (powered(f, p_minus), powered(g, p_plus));
    Ok(s.cubes.iter().map(|&q| p_average(&pf, q, p_minus) * p_average(&pg, q, p_plus) * (q.len() as f64 * h)).sum())
}

/// Stopping-time parameters for [`find_domination`].
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DominationParams {
    pub p_minus: f64,
    pub p_plus: f64,
    /// Stopping threshold `λ > 1`.
    pub lambda: f64,
    pub density: f64,
}

impl Default for DominationParams {
    fn default() -> Self {
        DominationParams { p_minus: 1.0, p_plus: 2.0, lambda: 4.0, density: DEFAULT_DENSITY }
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Domination {
    /// The stopping collection, with witnesses when it is sparse.
    pub collection: SparseCollection,
    /// `⟨Tf, g⟩ = Σ_x Tf(x) g(x) / N`.
    pub pairing: f64,
    pub form: f64,
    /// `|⟨Tf, g⟩| / form`, or 0 when the form vanishes.
    pub c: f64,
    pub sparse: bool,
    pub certified: bool,
}

/// Stopping-time sparse collection for `(f, g)`: starting from `[0, 1)`, a
/// dyadic descendant of a selected cube `Q` is selected when its `p₋`-average
/// of `f` or `p₊`-average of `g` exceeds `λ` times that of `Q`; the search
/// below a selected cube continues from it. Cells are admissible cubes.
pub fn stopping_collection(grid: DyadicGrid, f: &[f64], g: &[f64], params: &DominationParams) -> Result<SparseCollection> {
    check_exponents(params.p_minus, params.p_plus)?;
    if !(params.lambda > 1.0) {
        return Err(Error::domain("stopping threshold must exceed 1"));
    }
    let n = grid.cells();
    check_len(n, f.len())?;
    check_len(n, g.len())?;
    let (pf, pg) = (powered(f, params.p_minus), powered(g, params.p_plus));
    let avg = |q: Interval| (p_average(&pf, q, params.p_minus), p_average(&pg, q, params.p_plus));
    let root = Interval { start: 0, end: n };
    let mut selected = vec![root];
    // Stack of (cube to inspect, averages of its selected ancestor).
    let mut stack: Vec<(Interval, (f64, f64))> = Vec::new();
    let push_children = |stack: &mut Vec<(Interval, (f64, f64))>, q: Interval, top: (f64, f64)| {
        if let Some((a, b)) = q.children() {
            stack.push((b, top));
            stack.push((a, top));
        }
    };
    push_children(&mut stack, root, avg(root));
    while let Some((q, top)) = stack.pop() {
        let here = avg(q);
        if here.0 > params.lambda * top.0 || here.1 > params.lambda * top.1 {
            selected.push(q);
            push_children(&mut stack, q, here);
        } else {
            push_children(&mut stack, q, top);
        }
    }
    SparseCollection::new(grid, selected, params.density)
}

/// Seeded `(f, g)` pair on `grid`: signed samples with log-uniform
/// magnitudes in `[e^{-2}, e^2]`, independent across seeds.
pub fn seeded_instance(grid: DyadicGrid, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut r = rng::stream(seed, 0x5A_5E);
    let mut sample = || {
        let mag = exp(rng::uniform(&mut r, -2.0, 2.0));
        if rng::uniform(&mut r, 0.0, 1.0) < 0.5 {
            -mag
        } else {
            mag
        }
    };
    let f = (0..grid.cells()).map(|_| sample()).collect();
    let g = (0..grid.cells()).map(|_| sample()).collect();
    (f, g)
}

/// Builds a stopping collection and the constant `C` with
/// `|⟨Tf, g⟩| ≤ C Σ_{Q∈S} ⟨|f|^{p₋}⟩^{1/p₋} ⟨|g|^{p₊}⟩^{1/p₊} |Q|`, then certifies sparseness.
pub fn find_domination(op: &Operator, f: &[f64], g: &[f64], params: &DominationParams) -> Result<Domination> {
    if op.arity() != 1 {
        return Err(Error::domain("sparse domination needs an operator of one argument"));
    }
    check_density(params.density)?;
    let grid = DyadicGrid::from_cells(f.len())?;
    let collection = stopping_collection(grid, f, g, params)?;
    let tf = op.apply_slices(&[f])?;
    let pairing = tf.iter().zip(g).map(|(a, b)| a * b).sum::<f64>() / f.len() as f64;
    let form = sparse_form(&collection, f, g, params.p_minus, params.p_plus)?;
    let c = if form == 0.0 { 0.0 } else { pairing.abs() / form };
    // C is the ratio itself, so the inequality can only miss by rounding.
    let holds = pairing.abs() <= c * form * (1.0 + 4.0 * f64::EPSILON) || pairing == 0.0;
    let (collection, sparse) = match certify_sparse(&collection) {
        SparseCertificate::Feasible(c) => (c, true),
        SparseCertificate::Infeasible { .. } => (collection, false),
    };
    Ok(Domination { collection, pairing, form, c, sparse, certified: sparse && holds })
}
