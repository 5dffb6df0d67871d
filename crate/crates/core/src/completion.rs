//! Rank-1 matrix completion.
//!
//! Known entries of a rank-1 matrix are edges of a bipartite row-column graph;
//! the matrix is determined iff that graph is connected. Missing entries are
//! filled from vanishing 2×2 determinants, `M_jk = M_jr M_rk / M_rr`.
//!
//! When the diagonal and every Hamming-distance-1 entry are known (the layout
//! produced by local Pauli measurements) entries are filled level by level in
//! Hamming distance `m = popcount(j ^ k)`: for a set bit `b` of `j ^ k` the
//! pivot `r = k ^ b` (or `j ^ b`) makes one factor a measured entry and the
//! other an entry of distance `m - 1`. Every such live pivot gives an estimate
//! of the entry; by default they are averaged with weights `|M_rr|`, which
//! damps shot noise and is exact on exact data. Any other mask goes through a
//! generic propagation over arbitrary 2×2 submatrices.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcore::{self, CMatrix, DensityMatrix, MatrixJson, C64, ZERO};
use crate::tolerance;

/// Square matrix with a mask of known entries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PartialJson", into = "PartialJson")]
pub struct PartialMatrix {
    entries: CMatrix,
    known: Vec<bool>,
}

impl PartialMatrix {
    pub fn new(dim: usize) -> Self {
        Self { entries: CMatrix::zeros(dim, dim), known: vec![false; dim * dim] }
    }

    /// Copies the entries of `m` at the given positions.
    pub fn observe(m: &CMatrix, positions: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut pm = Self::new(m.nrows());
        for (j, k) in positions {
            pm.set(j, k, m[(j, k)]);
        }
        pm
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn set(&mut self, j: usize, k: usize, value: C64) {
        let d = self.dim();
        self.entries[(j, k)] = value;
        self.known[j * d + k] = true;
    }

    pub fn is_known(&self, j: usize, k: usize) -> bool {
        self.known[j * self.dim() + k]
    }

    pub fn get(&self, j: usize, k: usize) -> Option<C64> {
        self.is_known(j, k).then(|| self.entries[(j, k)])
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn known_positions(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let d = self.dim();
        self.known.iter().enumerate().filter(|(_, &k)| k).map(move |(i, _)| (i / d, i % d))
    }

    pub fn known_count(&self) -> usize {
        self.known.iter().filter(|&&k| k).count()
    }

    /// Real diagonal if every diagonal entry is known.
    pub fn diagonal(&self) -> Option<Vec<f64>> {
        (0..self.dim()).map(|i| self.get(i, i).map(|c| c.re)).collect()
    }

    /// Largest `|M_kj - conj(M_jk)|` over pairs with both orientations known.
    pub fn hermitian_violation(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (j, k) in self.known_positions() {
            if let Some(v) = self.get(k, j) {
                worst = worst.max((v - self.entries[(j, k)].conj()).norm());
            }
        }
        worst
    }
}

#[derive(Serialize, Deserialize)]
struct PartialJson {
    #[serde(flatten)]
    matrix: MatrixJson,
    known: Vec<bool>,
}

impl TryFrom<PartialJson> for PartialMatrix {
    type Error = Error;

    fn try_from(j: PartialJson) -> Result<Self> {
        let entries = j.matrix.to_matrix()?;
        if j.known.len() != j.matrix.dim * j.matrix.dim {
            return Err(Error::Parse(format!("known mask has {} entries", j.known.len())));
        }
        Ok(Self { entries, known: j.known })
    }
}

impl From<PartialMatrix> for PartialJson {
    fn from(p: PartialMatrix) -> Self {
        PartialJson { matrix: MatrixJson::from_matrix(&p.entries), known: p.known }
    }
}

/// Positions observed by the local-Pauli protocol: the diagonal and every
/// ordered pair at Hamming distance one.
pub fn mcqst_mask(n: usize) -> Vec<(usize, usize)> {
    let d = 1usize << n;
    let mut out: Vec<(usize, usize)> = (0..d).map(|i| (i, i)).collect();
    for j in 0..d {
        for b in 0..n {
            out.push((j, j ^ (1 << b)));
        }
    }
    out
}

/// Bipartite graph with one edge per known entry; rows are nodes `0..d`,
/// columns `d..2d`.
#[derive(Clone, Debug)]
pub struct RowColumnGraph {
    dim: usize,
    edges: Vec<(usize, usize)>,
}

impl RowColumnGraph {
    pub fn from_partial(pm: &PartialMatrix) -> Self {
        Self { dim: pm.dim(), edges: pm.known_positions().collect() }
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Component label of each of the `2d` nodes.
    fn components(&self) -> Vec<usize> {
        let mut parent: Vec<usize> = (0..2 * self.dim).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for &(r, c) in &self.edges {
            let a = find(&mut parent, r);
            let b = find(&mut parent, self.dim + c);
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
        (0..2 * self.dim).map(|x| find(&mut parent, x)).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Feasibility {
    /// Connected; `redundancy` edges beyond a spanning tree.
    Complete { redundancy: usize },
    /// Too few entries to reach every node.
    Underdetermined { unreached_rows: Vec<usize>, unreached_cols: Vec<usize> },
    /// Enough entries for a spanning tree, but cycles leave nodes unreached.
    CycleWithoutTree { unreached_rows: Vec<usize>, unreached_cols: Vec<usize>, cycles: usize },
}

impl Feasibility {
    pub fn is_complete(&self) -> bool {
        matches!(self, Feasibility::Complete { .. })
    }
}

/// Connectivity of the row-column graph of `pm`.
pub fn feasibility_check(pm: &PartialMatrix) -> Feasibility {
    let graph = RowColumnGraph::from_partial(pm);
    let d = graph.dim;
    let labels = graph.components();
    let mut sizes = vec![0usize; 2 * d];
    for &l in &labels {
        sizes[l] += 1;
    }
    let ncomp = sizes.iter().filter(|&&s| s > 0).count();
    let edges = graph.edge_count();
    let cycles = edges + ncomp - 2 * d;
    if ncomp == 1 {
        return Feasibility::Complete { redundancy: cycles };
    }
    // Largest component, earliest label on ties.
    let main = (0..2 * d).max_by(|&a, &b| sizes[a].cmp(&sizes[b]).then(b.cmp(&a))).unwrap();
    let unreached_rows: Vec<usize> = (0..d).filter(|&r| labels[r] != main).collect();
    let unreached_cols: Vec<usize> = (0..d).filter(|&c| labels[d + c] != main).collect();
    if edges + 1 >= 2 * d {
        Feasibility::CycleWithoutTree { unreached_rows, unreached_cols, cycles }
    } else {
        Feasibility::Underdetermined { unreached_rows, unreached_cols }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Route {
    /// Hamming-level schedule when the mask allows it, generic otherwise.
    #[default]
    Auto,
    /// Always use generic 2×2 propagation.
    Generic,
}

/// How the Hamming-level schedule combines the pivots available for an entry.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum PivotRule {
    /// `Σ_r w_r M_jr M_rk / M_rr / Σ_r w_r` over every live pivot, `w_r = |M_rr|`.
    #[default]
    Fused,
    /// The single pivot with the largest `|M_rr|`.
    Largest,
}

#[derive(Clone, Copy, Debug)]
pub struct CompletionOptions {
    /// Pivots with magnitude below this are treated as vanishing.
    pub pivot_floor: f64,
    pub route: Route,
    pub pivot_rule: PivotRule,
}

impl Default for CompletionOptions {
    fn default() -> Self {
        Self { pivot_floor: tolerance::EXACT_PIVOT_FLOOR, route: Route::Auto, pivot_rule: PivotRule::Fused }
    }
}

impl CompletionOptions {
    pub fn with_floor(pivot_floor: f64) -> Self {
        Self { pivot_floor, ..Self::default() }
    }
}

/// Outcome of a completion, before Hermitization.
#[derive(Clone, Debug)]
pub struct Completion {
    filled: CMatrix,
    /// Entries determined by 2×2 fills.
    pub fills: usize,
    /// Entries in rows or columns of a vanishing diagonal that no pivot
    /// reached, set to zero (bounded by `|M_jk|² <= M_jj M_kk`).
    pub zeroed: usize,
    /// Diagonal indices below the pivot floor.
    pub vanishing: Vec<usize>,
    /// Filled by the Hamming-level schedule rather than generic propagation.
    pub hypercube: bool,
}

impl Completion {
    pub fn filled(&self) -> &CMatrix {
        &self.filled
    }

    /// `(M + M†)/2` of the filled matrix.
    pub fn hermitized(&self) -> Result<DensityMatrix> {
        qcore::qubits_for_dim(self.filled.nrows())?;
        Ok(DensityMatrix::hermitian_part(self.filled.clone()))
    }
}

/// Working grid of entries, `None` while unknown.
struct Grid {
    d: usize,
    cells: Vec<Option<C64>>,
}

impl Grid {
    fn get(&self, j: usize, k: usize) -> Option<C64> {
        self.cells[j * self.d + k]
    }

    fn set(&mut self, j: usize, k: usize, v: C64) {
        self.cells[j * self.d + k] = Some(v);
    }

    fn into_matrix(self) -> CMatrix {
        CMatrix::from_fn(self.d, self.d, |j, k| self.cells[j * self.d + k].unwrap_or(ZERO))
    }
}

fn has_hypercube_layout(grid: &Grid) -> bool {
    let d = grid.d;
    if d < 2 || !d.is_power_of_two() {
        return false;
    }
    let n = d.trailing_zeros();
    (0..d).all(|j| grid.get(j, j).is_some() && (0..n).all(|b| grid.get(j, j ^ (1 << b)).is_some()))
}

/// Fills every unknown entry of `pm` under the rank-1 constraint.
///
/// `diag`, when given, overrides the diagonal of `pm`. Known entries are
/// copied verbatim into the result.
pub fn fill_rank1(pm: &PartialMatrix, diag: Option<&[f64]>, opts: &CompletionOptions) -> Result<Completion> {
    let d = pm.dim();
    let mut grid = Grid { d, cells: vec![None; d * d] };
    for (j, k) in pm.known_positions() {
        grid.set(j, k, pm.entries[(j, k)]);
    }
    if let Some(diag) = diag {
        if diag.len() != d {
            return Err(Error::DimensionMismatch { expected: d, found: diag.len() });
        }
        for (i, &v) in diag.iter().enumerate() {
            grid.set(i, i, C64::new(v, 0.0));
        }
    }
    if opts.route == Route::Auto && has_hypercube_layout(&grid) {
        return fill_hypercube(grid, opts.pivot_floor, opts.pivot_rule);
    }
    let mut probe = pm.clone();
    for i in 0..d {
        if let Some(v) = grid.get(i, i) {
            probe.set(i, i, v);
        }
    }
    let feas = feasibility_check(&probe);
    if !feas.is_complete() {
        return Err(Error::Infeasible(format!("{feas:?}")));
    }
    fill_generic(grid, opts.pivot_floor)
}

/// [`fill_rank1`] followed by Hermitization.
pub fn complete_rank1(pm: &PartialMatrix, diag: Option<&[f64]>, opts: &CompletionOptions) -> Result<DensityMatrix> {
    fill_rank1(pm, diag, opts)?.hermitized()
}

fn fill_hypercube(mut grid: Grid, floor: f64, rule: PivotRule) -> Result<Completion> {
    let d = grid.d;
    let n = d.trailing_zeros() as usize;
    let pivot: Vec<f64> = (0..d).map(|r| grid.get(r, r).map_or(0.0, |c| c.norm())).collect();
    let live: Vec<bool> = pivot.iter().map(|&p| p >= floor && p > 0.0).collect();
    let mut fills = 0;
    let mut pending = Vec::new();

    // Masks grouped by popcount so each level only sees entries of lower distance.
    let mut by_weight: Vec<Vec<usize>> = vec![Vec::new(); n + 1];
    for mask in 1..d {
        by_weight[mask.count_ones() as usize].push(mask);
    }
    for masks in by_weight.iter().skip(2) {
        for j in 0..d {
            for &mask in masks {
                let k = j ^ mask;
                if grid.get(j, k).is_some() {
                    continue;
                }
                // Pivots one bit from either end; for distance 2 the two sets coincide.
                let mut pivots: Vec<usize> = (0..n)
                    .filter(|b| mask >> b & 1 == 1)
                    .flat_map(|b| [k ^ (1 << b), j ^ (1 << b)])
                    .filter(|&r| live[r])
                    .collect();
                pivots.sort_unstable();
                pivots.dedup();
                let mut best: Option<(f64, C64)> = None;
                let (mut acc, mut weight) = (ZERO, 0.0);
                for r in pivots {
                    let (Some(a), Some(c)) = (grid.get(j, r), grid.get(r, k)) else { continue };
                    let m_rr = grid.get(r, r).unwrap();
                    let estimate = a * c / m_rr;
                    acc += estimate * pivot[r];
                    weight += pivot[r];
                    if best.is_none_or(|(p, _)| pivot[r] > p) {
                        best = Some((pivot[r], estimate));
                    }
                }
                if rule == PivotRule::Fused && weight > 0.0 {
                    best = Some((weight, acc / weight));
                }
                match best {
                    Some((_, v)) => {
                        grid.set(j, k, v);
                        fills += 1;
                    }
                    None => pending.push((j, k)),
                }
            }
        }
    }

    // Entries whose geodesic pivots all vanish: any live pivot with both factors known.
    loop {
        let before = pending.len();
        pending.retain(|&(j, k)| {
            let mut best: Option<(f64, C64)> = None;
            for r in 0..d {
                if !live[r] || best.is_some_and(|(p, _)| p >= pivot[r]) {
                    continue;
                }
                if let (Some(a), Some(c)) = (grid.get(j, r), grid.get(r, k)) {
                    best = Some((pivot[r], a * c / grid.get(r, r).unwrap()));
                }
            }
            match best {
                Some((_, v)) => {
                    grid.set(j, k, v);
                    fills += 1;
                    false
                }
                None => true,
            }
        });
        if pending.is_empty() || pending.len() == before {
            break;
        }
    }

    let vanishing: Vec<usize> = (0..d).filter(|&r| !live[r]).collect();
    if pending.iter().any(|&(j, k)| live[j] && live[k]) {
        return Err(Error::SparseFailure { vanishing });
    }
    let zeroed = pending.len();
    for (j, k) in pending {
        grid.set(j, k, ZERO);
    }
    Ok(Completion { filled: grid.into_matrix(), fills, zeroed, vanishing, hypercube: true })
}

fn fill_generic(mut grid: Grid, floor: f64) -> Result<Completion> {
    let d = grid.d;
    let mut fills = 0;
    loop {
        let mut progress = false;
        let mut remaining = 0;
        for i in 0..d {
            for j in 0..d {
                if grid.get(i, j).is_some() {
                    continue;
                }
                let mut best: Option<(f64, C64)> = None;
                for c in 0..d {
                    let Some(ic) = grid.get(i, c) else { continue };
                    for r in 0..d {
                        let (Some(rj), Some(rc)) = (grid.get(r, j), grid.get(r, c)) else { continue };
                        let p = rc.norm();
                        if p >= floor && p > 0.0 && best.is_none_or(|(bp, _)| p > bp) {
                            best = Some((p, ic * rj / rc));
                        }
                    }
                }
                match best {
                    Some((_, v)) => {
                        grid.set(i, j, v);
                        fills += 1;
                        progress = true;
                    }
                    None => remaining += 1,
                }
            }
        }
        if remaining == 0 {
            break;
        }
        if !progress {
            let vanishing = (0..d)
                .filter(|&r| grid.get(r, r).is_none_or(|c| c.norm() < floor))
                .collect();
            return Err(Error::SparseFailure { vanishing });
        }
    }
    let vanishing = (0..d)
        .filter(|&r| grid.get(r, r).is_some_and(|c| c.norm() < floor))
        .collect();
    Ok(Completion { filled: grid.into_matrix(), fills, zeroed: 0, vanishing, hypercube: false })
}
