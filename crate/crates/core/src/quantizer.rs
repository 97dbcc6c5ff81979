//! Uniform magnitude quantization with sign separation and zero pruning.

use crate::error::{Error, Result};
use crate::pursuit::AtomicDecomposition;

/// Quantized model of one block, ordered by ascending atom id.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct QuantizedBlock {
    pub atom_indices: Vec<u32>,
    /// `floor(|c| / delta + 1/2)`, never zero.
    pub magnitudes: Vec<u32>,
    /// `false` for a positive coefficient, `true` for a negative one.
    pub signs: Vec<bool>,
}

impl QuantizedBlock {
    pub fn len(&self) -> usize {
        self.atom_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atom_indices.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.atom_indices.len();
        if self.magnitudes.len() != n || self.signs.len() != n {
            return Err(Error::Invariant(
                "quantized block lists differ in length".into(),
            ));
        }
        if self.magnitudes.contains(&0) {
            return Err(Error::Invariant("zero magnitude survived pruning".into()));
        }
        if self.atom_indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Invariant(
                "atom indices not strictly increasing".into(),
            ));
        }
        Ok(())
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::config(format!(
            "quantization step must be positive, got {delta}"
        )));
    }
    Ok(())
}

/// `floor(|c| / delta + 1/2)`, rounding exact halves up. Errors when the
/// result does not fit in 32 bits.
pub fn quantize_magnitude(c: f64, delta: f64) -> Result<u32> {
    let q = (c.abs() / delta + 0.5).floor();
    if !(q <= u32::MAX as f64) {
        return Err(Error::input(format!(
            "coefficient {c} too large for quantization step {delta}"
        )));
    }
    Ok(q as u32)
}

/// Quantizes, drops entries that round to zero and sorts by atom id.
pub fn quantize_block(decomp: &AtomicDecomposition, delta: f64) -> Result<QuantizedBlock> {
    check_delta(delta)?;
    if decomp.atom_indices.len() != decomp.coefficients.len() {
        return Err(Error::Dimension {
            expected: decomp.atom_indices.len(),
            found: decomp.coefficients.len(),
        });
    }
    let mut kept = Vec::with_capacity(decomp.coefficients.len());
    for (&id, &c) in decomp.atom_indices.iter().zip(&decomp.coefficients) {
        let m = quantize_magnitude(c, delta)?;
        if m > 0 {
            kept.push((id, m, c < 0.0));
        }
    }
    kept.sort_unstable_by_key(|&(id, _, _)| id);
    if kept.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(Error::Invariant(
            "duplicate atom id in decomposition".into(),
        ));
    }
    Ok(QuantizedBlock {
        atom_indices: kept.iter().map(|k| k.0).collect(),
        magnitudes: kept.iter().map(|k| k.1).collect(),
        signs: kept.iter().map(|k| k.2).collect(),
    })
}

/// Signed coefficients `+-delta * magnitude`, in the block's id order.
pub fn dequantize_block(qblock: &QuantizedBlock, delta: f64) -> Vec<f64> {
    qblock
        .magnitudes
        .iter()
        .zip(&qblock.signs)
        .map(|(&m, &neg)| {
            let v = delta * m as f64;
            if neg {
                -v
            } else {
                v
            }
        })
        .collect()
}

/// Step giving the largest magnitude `max_abs` a quantized value of
/// `2^16 - 1`, so every magnitude fits in 16 bits.
pub fn default_delta(max_abs: f64) -> Option<f64> {
    (max_abs > 0.0 && max_abs.is_finite()).then(|| max_abs / 65535.0)
}
