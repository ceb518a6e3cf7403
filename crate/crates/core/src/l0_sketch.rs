//! Linear ℓ₀ samplers over signed vectors and the edge-incidence encoding.
//!
//! A sampler instance subsamples coordinates into nested levels (coordinate `i`
//! lives in levels `0..=lvl(i)` where `lvl(i)` is the number of trailing zeros of
//! a pairwise-independent hash of `i`). Each level keeps a one-sparse recovery
//! cell: count, index-weighted sum and a polynomial fingerprint modulo 2^61 - 1.

use alloc::sync::Arc;
use alloc::vec::Vec;
use thiserror::Error;

use crate::field::{self, PairwiseHash};
use crate::graph::{Edge, Vertex};

/// Constant in the repetition count `ceil(REPETITION_FACTOR * ln(1/δ))`.
pub const REPETITION_FACTOR: f64 = 4.0;

/// Largest supported coordinate-space size (keeps weighted sums inside `i64`).
pub const MAX_DIMENSION: u64 = 1 << 31;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum SketchError {
    #[error("dimension {0} outside [1, 2^31]")]
    InvalidDimension(u64),
    #[error("failure probability {0}/{1} outside (0, 1)")]
    InvalidFailureProb(u64, u64),
    #[error("index {index} outside [0, {dimension})")]
    IndexOutOfRange { index: u64, dimension: u64 },
    #[error("sketches built from different parameters")]
    Incompatible,
    #[error("vertex set must be nonempty and proper")]
    DegenerateCut,
    #[error("malformed sketch encoding: {0}")]
    Malformed(&'static str),
}

/// Sketch parameters. The failure probability is kept as an exact fraction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SketchParams {
    dimension: u64,
    delta_num: u64,
    delta_den: u64,
    seed: u64,
}

impl SketchParams {
    pub fn new(dimension: u64, delta_num: u64, delta_den: u64, seed: u64) -> Result<Self, SketchError> {
        if dimension == 0 || dimension > MAX_DIMENSION {
            return Err(SketchError::InvalidDimension(dimension));
        }
        if delta_num == 0 || delta_num >= delta_den {
            return Err(SketchError::InvalidFailureProb(delta_num, delta_den));
        }
        Ok(SketchParams { dimension, delta_num, delta_den, seed })
    }

    pub fn dimension(&self) -> u64 {
        self.dimension
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn failure_prob(&self) -> f64 {
        self.delta_num as f64 / self.delta_den as f64
    }

    pub fn failure_fraction(&self) -> (u64, u64) {
        (self.delta_num, self.delta_den)
    }

    pub fn repetitions(&self) -> usize {
        let ln = libm::log(self.delta_den as f64 / self.delta_num as f64);
        (libm::ceil(REPETITION_FACTOR * ln) as usize).max(1)
    }

    pub fn levels(&self) -> usize {
        ceil_log2(self.dimension) as usize + 1
    }

    /// Words occupied by the cells of one sketch.
    pub fn words(&self) -> u64 {
        (self.repetitions() * self.levels() * 3) as u64
    }
}

pub fn ceil_log2(x: u64) -> u32 {
    if x <= 1 {
        0
    } else {
        64 - (x - 1).leading_zeros()
    }
}

#[derive(Clone, Copy, Debug)]
struct Instance {
    level_hash: PairwiseHash,
    base: u64,
}

/// Parameters plus the randomness derived from them. Shared between all sketches
/// built from the same parameters.
#[derive(Debug)]
pub struct SketchFamily {
    params: SketchParams,
    repetitions: usize,
    levels: usize,
    instances: Vec<Instance>,
}

impl SketchFamily {
    pub fn new(params: SketchParams) -> Arc<Self> {
        let repetitions = params.repetitions();
        let levels = params.levels();
        let instances = (0..repetitions)
            .map(|rep| {
                let mut rng = field::stream_rng(params.seed, rep as u64);
                let level_hash = PairwiseHash::draw(&mut rng);
                let base = 2 + field::below(&mut rng, field::MODULUS - 2);
                Instance { level_hash, base }
            })
            .collect();
        Arc::new(SketchFamily { params, repetitions, levels, instances })
    }

    pub fn params(&self) -> &SketchParams {
        &self.params
    }

    pub fn repetitions(&self) -> usize {
        self.repetitions
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn zero(self: &Arc<Self>) -> L0Sketch {
        L0Sketch {
            family: Arc::clone(self),
            cells: alloc::vec![Cell::default(); self.repetitions * self.levels],
        }
    }

    /// Hashes a coordinate once so it can be applied to many sketches of this family.
    pub fn prepare(&self, index: u64) -> Result<PreparedIndex, SketchError> {
        if index >= self.params.dimension {
            return Err(SketchError::IndexOutOfRange { index, dimension: self.params.dimension });
        }
        let slots = self
            .instances
            .iter()
            .map(|inst| {
                let h = inst.level_hash.hash(index);
                let top = (h.trailing_zeros() as usize).min(self.levels - 1);
                (top as u32, field::pow_mod(inst.base, index))
            })
            .collect();
        Ok(PreparedIndex { index, slots })
    }
}

/// A coordinate with its per-instance level and fingerprint power precomputed.
#[derive(Clone, Debug)]
pub struct PreparedIndex {
    index: u64,
    slots: Vec<(u32, u64)>,
}

impl PreparedIndex {
    pub fn index(&self) -> u64 {
        self.index
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Cell {
    pub count: i64,
    pub sum: i64,
    pub fingerprint: u64,
}

impl Cell {
    fn is_zero(&self) -> bool {
        self.count == 0 && self.sum == 0 && self.fingerprint == 0
    }
}

/// Linear sketch of a vector in Z^N supporting ℓ₀ sampling.
#[derive(Clone, Debug)]
pub struct L0Sketch {
    family: Arc<SketchFamily>,
    cells: Vec<Cell>,
}

impl PartialEq for L0Sketch {
    fn eq(&self, other: &Self) -> bool {
        self.family.params == other.family.params && self.cells == other.cells
    }
}

impl L0Sketch {
    /// Sketch of the zero vector.
    pub fn new(params: SketchParams) -> Self {
        SketchFamily::new(params).zero()
    }

    pub fn params(&self) -> &SketchParams {
        &self.family.params
    }

    pub fn family(&self) -> &Arc<SketchFamily> {
        &self.family
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn words(&self) -> u64 {
        self.cells.len() as u64 * 3
    }

    pub fn is_zero(&self) -> bool {
        self.cells.iter().all(Cell::is_zero)
    }

    pub fn update(&mut self, index: u64, delta: i64) -> Result<(), SketchError> {
        let prepared = self.family.prepare(index)?;
        self.apply(&prepared, delta);
        Ok(())
    }

    /// Adds `delta * e_index` using a coordinate prepared by the same family.
    pub fn apply(&mut self, prepared: &PreparedIndex, delta: i64) {
        let levels = self.family.levels;
        let fp_delta = field::from_signed(delta);
        let sum_delta = delta * prepared.index as i64;
        for (rep, &(top, power)) in prepared.slots.iter().enumerate() {
            let fp = field::mul_mod(fp_delta, power);
            let row = &mut self.cells[rep * levels..rep * levels + top as usize + 1];
            for cell in row {
                cell.count += delta;
                cell.sum += sum_delta;
                cell.fingerprint = field::add_mod(cell.fingerprint, fp);
            }
        }
    }

    fn check_compatible(&self, other: &L0Sketch) -> Result<(), SketchError> {
        if Arc::ptr_eq(&self.family, &other.family) || self.family.params == other.family.params {
            Ok(())
        } else {
            Err(SketchError::Incompatible)
        }
    }

    pub fn add_assign(&mut self, other: &L0Sketch) -> Result<(), SketchError> {
        self.check_compatible(other)?;
        for (a, b) in self.cells.iter_mut().zip(&other.cells) {
            a.count += b.count;
            a.sum += b.sum;
            a.fingerprint = field::add_mod(a.fingerprint, b.fingerprint);
        }
        Ok(())
    }

    pub fn sub_assign(&mut self, other: &L0Sketch) -> Result<(), SketchError> {
        self.check_compatible(other)?;
        for (a, b) in self.cells.iter_mut().zip(&other.cells) {
            a.count -= b.count;
            a.sum -= b.sum;
            a.fingerprint = field::sub_mod(a.fingerprint, b.fingerprint);
        }
        Ok(())
    }

    pub fn merge(&self, other: &L0Sketch) -> Result<L0Sketch, SketchError> {
        let mut out = self.clone();
        out.add_assign(other)?;
        Ok(out)
    }

    /// A nonzero coordinate, or `None` for ⊥. Instances are tried in order; within an
    /// instance the sparsest level is tried first.
    pub fn query(&self) -> Option<u64> {
        let levels = self.family.levels;
        for (rep, inst) in self.family.instances.iter().enumerate() {
            let row = &self.cells[rep * levels..(rep + 1) * levels];
            for cell in row.iter().rev() {
                if let Some(i) = self.decode(cell, inst.base) {
                    return Some(i);
                }
            }
        }
        None
    }

    fn decode(&self, cell: &Cell, base: u64) -> Option<u64> {
        if cell.count == 0 || cell.sum % cell.count != 0 {
            return None;
        }
        let idx = cell.sum / cell.count;
        if idx < 0 || idx as u64 >= self.family.params.dimension {
            return None;
        }
        let expect = field::mul_mod(field::from_signed(cell.count), field::pow_mod(base, idx as u64));
        (expect == cell.fingerprint).then_some(idx as u64)
    }

    /// Header `[N, δ numerator, δ denominator, seed, repetitions, levels]` followed by
    /// `count, sum, fingerprint` per cell.
    pub fn to_words(&self) -> Vec<u64> {
        let p = &self.family.params;
        let mut out = Vec::with_capacity(6 + self.cells.len() * 3);
        out.extend_from_slice(&[
            p.dimension,
            p.delta_num,
            p.delta_den,
            p.seed,
            self.family.repetitions as u64,
            self.family.levels as u64,
        ]);
        for c in &self.cells {
            out.extend_from_slice(&[c.count as u64, c.sum as u64, c.fingerprint]);
        }
        out
    }

    pub fn from_words(words: &[u64]) -> Result<Self, SketchError> {
        if words.len() < 6 {
            return Err(SketchError::Malformed("short header"));
        }
        let params = SketchParams::new(words[0], words[1], words[2], words[3])?;
        let family = SketchFamily::new(params);
        if words[4] != family.repetitions as u64 || words[5] != family.levels as u64 {
            return Err(SketchError::Malformed("shape disagrees with parameters"));
        }
        let body = &words[6..];
        if body.len() != family.repetitions * family.levels * 3 {
            return Err(SketchError::Malformed("cell count"));
        }
        let cells = body
            .chunks_exact(3)
            .map(|c| Cell { count: c[0] as i64, sum: c[1] as i64, fingerprint: c[2] })
            .collect();
        Ok(L0Sketch { family, cells })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        self.to_words().iter().flat_map(|w| w.to_le_bytes()).collect()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, SketchError> {
        if bytes.len() % 8 != 0 {
            return Err(SketchError::Malformed("length not a multiple of 8"));
        }
        let words: Vec<u64> = bytes
            .chunks_exact(8)
            .map(|c| u64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        Self::from_words(&words)
    }
}

/// Lexicographic bijection between vertex pairs `j < k` of `[0, n)` and `[0, C(n,2))`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EdgeCoordinates {
    n: u64,
}

impl EdgeCoordinates {
    pub fn new(n: usize) -> Self {
        EdgeCoordinates { n: n as u64 }
    }

    pub fn vertices(&self) -> usize {
        self.n as usize
    }

    /// `C(n, 2)`, at least 1 so a sketch can always be built.
    pub fn dimension(&self) -> u64 {
        (self.n * self.n.saturating_sub(1) / 2).max(1)
    }

    fn row_start(&self, j: u64) -> u64 {
        j * self.n - j * (j + 1) / 2
    }

    pub fn index(&self, e: Edge) -> u64 {
        let (j, k) = (e.u as u64, e.v as u64);
        debug_assert!(k < self.n);
        self.row_start(j) + (k - j - 1)
    }

    pub fn edge(&self, index: u64) -> Edge {
        let (mut lo, mut hi) = (0u64, self.n - 1);
        while lo + 1 < hi {
            let mid = (lo + hi) / 2;
            if self.row_start(mid) <= index {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let j = lo;
        let k = index - self.row_start(j) + j + 1;
        Edge::new(j as Vertex, k as Vertex)
    }

    /// Entry of vertex `x`'s incidence vector at edge `e`: +1 at the larger endpoint.
    pub fn sign(&self, x: Vertex, e: Edge) -> i64 {
        if x == e.v {
            1
        } else {
            debug_assert_eq!(x, e.u);
            -1
        }
    }
}

/// An edge incident on the vertex whose incidence sketch is given, or ⊥.
pub fn sample_vertex_edge(sketch: &L0Sketch, coords: &EdgeCoordinates) -> Option<Edge> {
    sketch.query().map(|i| coords.edge(i))
}

/// Merges the sketches of `set` (indexed by vertex in `bank`) and samples a cut edge.
pub fn sample_cut_edge(bank: &[L0Sketch], set: &[Vertex], coords: &EdgeCoordinates) -> Result<Option<Edge>, SketchError> {
    if set.is_empty() || set.len() >= bank.len() {
        return Err(SketchError::DegenerateCut);
    }
    let mut acc = bank[set[0] as usize].clone();
    for &v in &set[1..] {
        acc.add_assign(&bank[v as usize])?;
    }
    Ok(sample_vertex_edge(&acc, coords))
}

/// Sketch of the edges between two disjoint vertex groups. The owner decides which
/// edges belong to the pair and feeds only those.
#[derive(Clone, Debug, PartialEq)]
pub struct PairSketch {
    sketch: L0Sketch,
    coords: EdgeCoordinates,
}

impl PairSketch {
    pub fn new(family: &Arc<SketchFamily>, coords: EdgeCoordinates) -> Self {
        PairSketch { sketch: family.zero(), coords }
    }

    pub fn update_edge(&mut self, e: Edge, delta: i64) {
        let idx = self.coords.index(e);
        self.sketch.update(idx, delta).expect("edge index within C(n,2)");
    }

    pub fn apply(&mut self, prepared: &PreparedIndex, delta: i64) {
        self.sketch.apply(prepared, delta);
    }

    pub fn sample(&self) -> Option<Edge> {
        sample_vertex_edge(&self.sketch, &self.coords)
    }

    pub fn is_zero(&self) -> bool {
        self.sketch.is_zero()
    }

    pub fn words(&self) -> u64 {
        self.sketch.words()
    }
}
