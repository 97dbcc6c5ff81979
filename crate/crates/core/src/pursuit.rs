//! Per-block Optimized Orthogonal Matching Pursuit.
//!
//! Each block is approximated independently. At every iteration the atom
//! that minimizes the norm of the new residual is chosen, which amounts to
//! maximizing `|<d_n, r>|^2 / (1 - sum_i |<d_n, w~_i>|^2)` over atoms not yet
//! selected. The chosen atom is orthogonalized against the running basis
//! (with one re-orthogonalization pass), the biorthogonal duals are updated,
//! and the residual drops by its projection on the new basis vector. Final
//! coefficients are the inner products of the duals with the block.

use rayon::prelude::*;

use crate::dictionary::{dot, l2_norm, Dictionary};
use crate::error::{Error, Result};

/// Atoms whose squared distance to the selected span falls below this are
/// numerically inside it and never selected.
pub const DENOMINATOR_GUARD: f64 = 1e-10;

/// Relative gap below which two selection gains count as equal.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// One piece of a partitioned signal. `index` is 1-based.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub index: usize,
    pub samples: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub blocks: Vec<Block>,
    /// Zero samples appended to the last block.
    pub pad_length: usize,
}

/// Splits `signal` into `ceil(N / block_size)` blocks, zero-padding the last.
pub fn partition_signal(signal: &[f64], block_size: usize) -> Result<Partition> {
    if signal.is_empty() {
        return Err(Error::input("cannot partition an empty signal"));
    }
    if block_size == 0 {
        return Err(Error::config("block_size must be positive"));
    }
    let count = signal.len().div_ceil(block_size);
    let pad_length = count * block_size - signal.len();
    let blocks = signal
        .chunks(block_size)
        .enumerate()
        .map(|(q, chunk)| {
            let mut samples = chunk.to_vec();
            samples.resize(block_size, 0.0);
            Block {
                index: q + 1,
                samples,
            }
        })
        .collect();
    Ok(Partition { blocks, pad_length })
}

/// Concatenates equal-length blocks and drops the trailing `pad_length` samples.
pub fn assemble_signal<B: AsRef<[f64]>>(blocks: &[B], pad_length: usize) -> Result<Vec<f64>> {
    let Some(first) = blocks.first() else {
        return Err(Error::input("no blocks to assemble"));
    };
    let block_size = first.as_ref().len();
    let mut out = Vec::with_capacity(blocks.len() * block_size);
    for b in blocks {
        let b = b.as_ref();
        if b.len() != block_size {
            return Err(Error::Dimension {
                expected: block_size,
                found: b.len(),
            });
        }
        out.extend_from_slice(b);
    }
    if pad_length > block_size || pad_length > out.len() {
        return Err(Error::input(format!(
            "pad length {pad_length} exceeds block size {block_size}"
        )));
    }
    out.truncate(out.len() - pad_length);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopCriterion {
    /// Stop once `||r|| < rho`.
    ResidualNorm(f64),
    /// Stop once the block SNR reaches this many dB, i.e.
    /// `rho = ||f_q|| * 10^(-dB / 20)`.
    BlockSnrDb(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopRule {
    pub criterion: StopCriterion,
    /// Cap on atoms per block; `None` means `block_size`.
    pub max_atoms: Option<usize>,
}

impl StopRule {
    pub fn residual_norm(rho: f64) -> Self {
        StopRule {
            criterion: StopCriterion::ResidualNorm(rho),
            max_atoms: None,
        }
    }

    pub fn block_snr_db(db: f64) -> Self {
        StopRule {
            criterion: StopCriterion::BlockSnrDb(db),
            max_atoms: None,
        }
    }

    pub fn with_max_atoms(mut self, max_atoms: usize) -> Self {
        self.max_atoms = Some(max_atoms);
        self
    }

    pub fn validate(&self, block_size: usize) -> Result<()> {
        match self.criterion {
            StopCriterion::ResidualNorm(rho) if !(rho >= 0.0 && rho.is_finite()) => {
                return Err(Error::config(format!(
                    "residual tolerance {rho} is invalid"
                )));
            }
            StopCriterion::BlockSnrDb(db) if !db.is_finite() => {
                return Err(Error::config(format!("target block snr {db} is invalid")));
            }
            _ => {}
        }
        if let Some(max) = self.max_atoms {
            if max > block_size {
                return Err(Error::config(format!(
                    "max_atoms {max} exceeds block_size {block_size}"
                )));
            }
        }
        Ok(())
    }

    /// Absolute residual tolerance for a block of the given norm.
    pub fn tolerance_for(&self, block_norm: f64) -> f64 {
        match self.criterion {
            StopCriterion::ResidualNorm(rho) => rho,
            StopCriterion::BlockSnrDb(db) => block_norm * 10f64.powf(-db / 20.0),
        }
    }
}

/// `f_q ~ sum_n c(n) d_{l_n}`, atoms listed in selection order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AtomicDecomposition {
    pub block_index: usize,
    pub atom_indices: Vec<u32>,
    pub coefficients: Vec<f64>,
}

impl AtomicDecomposition {
    pub fn empty(block_index: usize) -> Self {
        AtomicDecomposition {
            block_index,
            ..Default::default()
        }
    }

    pub fn iterations(&self) -> usize {
        self.atom_indices.len()
    }
}

/// Working state of the pursuit on one block.
pub struct PursuitState<'a> {
    dict: &'a Dictionary,
    block: Vec<f64>,
    block_norm: f64,
    residual: Vec<f64>,
    selected: Vec<u32>,
    is_selected: Vec<bool>,
    w: Vec<Vec<f64>>,
    w_norm_sq: Vec<f64>,
    b: Vec<Vec<f64>>,
    // <d_n, r>
    corr: Vec<f64>,
    // sum_i |<d_n, w~_i>|^2
    denom: Vec<f64>,
    scratch: Vec<f64>,
}

impl<'a> PursuitState<'a> {
    /// Initial state: `r = f`, nothing selected.
    pub fn new(dict: &'a Dictionary, block: &[f64]) -> Result<Self> {
        let corr = dict.correlate_all(block)?;
        let total = dict.len();
        Ok(PursuitState {
            dict,
            block: block.to_vec(),
            block_norm: l2_norm(block),
            residual: block.to_vec(),
            selected: Vec::new(),
            is_selected: vec![false; total],
            w: Vec::new(),
            w_norm_sq: Vec::new(),
            b: Vec::new(),
            corr,
            denom: vec![0.0; total],
            scratch: vec![0.0; total],
        })
    }

    pub fn block(&self) -> &[f64] {
        &self.block
    }

    pub fn residual(&self) -> &[f64] {
        &self.residual
    }

    pub fn residual_norm(&self) -> f64 {
        l2_norm(&self.residual)
    }

    pub fn selected(&self) -> &[u32] {
        &self.selected
    }

    pub fn iterations(&self) -> usize {
        self.selected.len()
    }

    /// Orthogonal basis of the selected span, one vector per selected atom.
    pub fn w_vectors(&self) -> &[Vec<f64>] {
        &self.w
    }

    /// Biorthogonal duals: `<b_m, d_{l_n}> = delta_mn`.
    pub fn b_vectors(&self) -> &[Vec<f64>] {
        &self.b
    }

    /// Cached `<d_n, r>`, entry `n - 1` for atom `n`.
    pub fn correlation_cache(&self) -> &[f64] {
        &self.corr
    }

    /// Cached `sum_i |<d_n, w~_i>|^2`, entry `n - 1` for atom `n`.
    pub fn denominator_cache(&self) -> &[f64] {
        &self.denom
    }

    /// Index of the atom whose inclusion minimizes the new residual norm.
    ///
    /// Ties go to the smallest id. Returns `None` when no admissible atom
    /// would reduce the residual by more than rounding noise.
    pub fn select_next_atom(&self) -> Option<u32> {
        let gain = |n: usize| -> Option<f64> {
            let room = 1.0 - self.denom[n];
            (!self.is_selected[n] && room >= DENOMINATOR_GUARD)
                .then(|| self.corr[n] * self.corr[n] / room)
        };
        let best = (0..self.corr.len())
            .filter_map(gain)
            .fold(f64::NEG_INFINITY, f64::max);
        let floor = f64::EPSILON * self.block_norm;
        if !(best > floor * floor) {
            return None;
        }
        // Gains equal up to rounding are ties.
        let threshold = best * (1.0 - TIE_TOLERANCE);
        (0..self.corr.len())
            .find(|&n| gain(n).is_some_and(|g| g >= threshold))
            .map(|n| n as u32 + 1)
    }

    /// Adds atom `id` to the model: orthogonalizes it, updates the duals,
    /// the residual and both caches.
    pub fn add_atom(&mut self, id: u32) -> Result<()> {
        if id == 0 || id as usize > self.dict.len() {
            return Err(Error::input(format!("atom id {id} out of range")));
        }
        let n = id as usize - 1;
        if self.is_selected[n] {
            return Err(Error::Invariant(format!("atom {id} already selected")));
        }
        let atom = self.dict.atom(id)?;

        let mut w = atom.clone();
        self.orthogonalize(&mut w, &atom);
        let w_copy = w.clone();
        self.orthogonalize(&mut w, &w_copy);
        let w_norm_sq = dot(&w, &w);
        if !(w_norm_sq > 0.0) {
            return Err(Error::Invariant(format!(
                "atom {id} lies in the span of the selected atoms"
            )));
        }

        let b_new: Vec<f64> = w.iter().map(|x| x / w_norm_sq).collect();
        for b_old in &mut self.b {
            let t = dot(&atom, b_old);
            for (x, y) in b_old.iter_mut().zip(&b_new) {
                *x -= t * y;
            }
        }
        self.b.push(b_new);

        let step = dot(&w, &self.block) / w_norm_sq;
        for (r, x) in self.residual.iter_mut().zip(&w) {
            *r -= step * x;
        }

        self.dict.correlate_into(&w, &mut self.scratch)?;
        for ((c, d), s) in self.corr.iter_mut().zip(&mut self.denom).zip(&self.scratch) {
            *c -= step * s;
            *d += s * s / w_norm_sq;
        }

        self.is_selected[n] = true;
        self.selected.push(id);
        self.w.push(w);
        self.w_norm_sq.push(w_norm_sq);
        Ok(())
    }

    /// `v <- v - sum_i w_i <w_i, probe> / ||w_i||^2`
    fn orthogonalize(&self, v: &mut [f64], probe: &[f64]) {
        let weights: Vec<f64> = self
            .w
            .iter()
            .zip(&self.w_norm_sq)
            .map(|(wi, &n2)| dot(wi, probe) / n2)
            .collect();
        for (wi, t) in self.w.iter().zip(weights) {
            for (x, y) in v.iter_mut().zip(wi) {
                *x -= t * y;
            }
        }
    }

    /// `c(n) = <b_n, f>` in selection order.
    pub fn coefficients(&self) -> Vec<f64> {
        self.b.iter().map(|b| dot(b, &self.block)).collect()
    }

    pub fn into_decomposition(self, block_index: usize) -> AtomicDecomposition {
        let coefficients = self.coefficients();
        AtomicDecomposition {
            block_index,
            atom_indices: self.selected,
            coefficients,
        }
    }
}

/// Runs the pursuit on one block until the stop rule fires.
pub fn oomp_approximate(
    block: &Block,
    dict: &Dictionary,
    stop: &StopRule,
) -> Result<AtomicDecomposition> {
    oomp_approximate_observed(block, dict, stop, |_| {})
}

/// [`oomp_approximate`] calling `observe` after every iteration.
pub fn oomp_approximate_observed<F>(
    block: &Block,
    dict: &Dictionary,
    stop: &StopRule,
    mut observe: F,
) -> Result<AtomicDecomposition>
where
    F: FnMut(&PursuitState<'_>),
{
    if block.samples.len() != dict.block_size() {
        return Err(Error::Dimension {
            expected: dict.block_size(),
            found: block.samples.len(),
        });
    }
    stop.validate(dict.block_size())?;
    let block_norm = l2_norm(&block.samples);
    if block_norm == 0.0 {
        return Ok(AtomicDecomposition::empty(block.index));
    }
    let rho = stop.tolerance_for(block_norm);
    let max_atoms = stop.max_atoms.unwrap_or(dict.block_size()).min(dict.len());

    let mut state = PursuitState::new(dict, &block.samples)?;
    while state.iterations() < max_atoms && !(state.residual_norm() < rho) {
        let Some(id) = state.select_next_atom() else {
            break;
        };
        state.add_atom(id)?;
        observe(&state);
    }
    Ok(state.into_decomposition(block.index))
}

/// Approximates every block, optionally on a pool of `workers` threads.
/// Output order and values do not depend on the worker count.
pub fn approximate_blocks(
    blocks: &[Block],
    dict: &Dictionary,
    stop: &StopRule,
    workers: usize,
) -> Result<Vec<AtomicDecomposition>> {
    if workers <= 1 || blocks.len() <= 1 {
        return blocks
            .iter()
            .map(|b| oomp_approximate(b, dict, stop))
            .collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::config(format!("cannot start worker pool: {e}")))?;
    pool.install(|| {
        blocks
            .par_iter()
            .map(|b| oomp_approximate(b, dict, stop))
            .collect()
    })
}

/// `sum_n c(n) d_{l_n}`.
pub fn reconstruct_block(decomp: &AtomicDecomposition, dict: &Dictionary) -> Result<Vec<f64>> {
    reconstruct_from_parts(&decomp.atom_indices, &decomp.coefficients, dict)
}

pub(crate) fn reconstruct_from_parts(
    ids: &[u32],
    coefficients: &[f64],
    dict: &Dictionary,
) -> Result<Vec<f64>> {
    if ids.len() != coefficients.len() {
        return Err(Error::Dimension {
            expected: ids.len(),
            found: coefficients.len(),
        });
    }
    let mut out = vec![0.0; dict.block_size()];
    for (&id, &c) in ids.iter().zip(coefficients) {
        if id == 0 || id as usize > dict.len() {
            return Err(Error::corrupt(
                0,
                format!("atom id {id} outside dictionary"),
            ));
        }
        dict.add_scaled_atom(id, c, &mut out)?;
    }
    Ok(out)
}
