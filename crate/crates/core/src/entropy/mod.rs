//! Symbol streams for the quantized model and their entropy coding.
//!
//! A model is serialized as three streams coded independently:
//! * indices: per block the first sorted atom id followed by successive id
//!   differences, blocks separated by `0`;
//! * magnitudes: quantized coefficient magnitudes in the same order;
//! * signs: `0` for positive, `1` for negative.

mod arith;

pub use arith::{arith_decode, arith_encode, MAX_ALPHABET, RESCALE_LIMIT};

use crate::error::{Error, Result};
use crate::quantizer::QuantizedBlock;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolStream {
    pub symbols: Vec<u32>,
    pub alphabet_size: u32,
}

impl SymbolStream {
    pub fn new(symbols: Vec<u32>, alphabet_size: u32) -> Result<Self> {
        if let Some(&bad) = symbols.iter().find(|&&s| s >= alphabet_size) {
            return Err(Error::input(format!(
                "symbol {bad} outside alphabet of size {alphabet_size}"
            )));
        }
        Ok(SymbolStream {
            symbols,
            alphabet_size,
        })
    }

    /// Alphabet sized to `1 + max symbol`, at least `min_alphabet`.
    pub fn fitted(symbols: Vec<u32>, min_alphabet: u32) -> Self {
        let alphabet_size = symbols
            .iter()
            .max()
            .map_or(min_alphabet, |&m| (m + 1).max(min_alphabet));
        SymbolStream {
            symbols,
            alphabet_size,
        }
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodedStream {
    pub payload: Vec<u8>,
    pub symbol_count: u64,
    pub alphabet_size: u32,
}

/// Delta-coded sorted indices with `0` between consecutive blocks.
///
/// A model with no atoms at all yields an empty stream rather than a run of
/// bare separators, so an all-silent signal codes to a header-only file.
pub fn build_index_stream(blocks: &[QuantizedBlock]) -> Result<SymbolStream> {
    if blocks.iter().all(QuantizedBlock::is_empty) {
        return Ok(SymbolStream::fitted(Vec::new(), 1));
    }
    let total: usize = blocks.iter().map(QuantizedBlock::len).sum();
    let mut symbols = Vec::with_capacity(total + blocks.len());
    for (q, block) in blocks.iter().enumerate() {
        if q > 0 {
            symbols.push(0);
        }
        let mut prev = 0u32;
        for &id in &block.atom_indices {
            if id <= prev {
                return Err(Error::Invariant(format!(
                    "block {}: atom ids not strictly increasing and positive ({prev} then {id})",
                    q + 1
                )));
            }
            symbols.push(id - prev);
            prev = id;
        }
    }
    Ok(SymbolStream::fitted(symbols, 1))
}

/// Inverse of [`build_index_stream`].
pub fn parse_index_stream(stream: &[u32], block_count: usize) -> Result<Vec<Vec<u32>>> {
    if block_count == 0 {
        return if stream.is_empty() {
            Ok(Vec::new())
        } else {
            Err(Error::corrupt(0, "index symbols present but no blocks"))
        };
    }
    if stream.is_empty() {
        return Ok(vec![Vec::new(); block_count]);
    }
    let separators = stream.iter().filter(|&&s| s == 0).count();
    if separators + 1 != block_count {
        return Err(Error::corrupt(
            0,
            format!(
                "index stream has {separators} separators, expected {}",
                block_count - 1
            ),
        ));
    }
    stream
        .split(|&s| s == 0)
        .map(|segment| {
            let mut acc = 0u32;
            segment
                .iter()
                .map(|&delta| {
                    acc = acc
                        .checked_add(delta)
                        .ok_or_else(|| Error::corrupt(0, "atom id overflows 32 bits"))?;
                    Ok(acc)
                })
                .collect()
        })
        .collect()
}

pub fn build_coeff_stream(blocks: &[QuantizedBlock]) -> SymbolStream {
    let symbols = blocks
        .iter()
        .flat_map(|b| b.magnitudes.iter().copied())
        .collect();
    SymbolStream::fitted(symbols, 1)
}

pub fn build_sign_stream(blocks: &[QuantizedBlock]) -> SymbolStream {
    let symbols = blocks
        .iter()
        .flat_map(|b| b.signs.iter().map(|&neg| neg as u32))
        .collect();
    SymbolStream {
        symbols,
        alphabet_size: 2,
    }
}

/// Reassembles quantized blocks from the three decoded streams.
pub fn split_model(
    index_lists: Vec<Vec<u32>>,
    magnitudes: &[u32],
    signs: &[u32],
) -> Result<Vec<QuantizedBlock>> {
    let total: usize = index_lists.iter().map(Vec::len).sum();
    if magnitudes.len() != total || signs.len() != total {
        return Err(Error::corrupt(
            0,
            format!(
                "stream lengths disagree: {total} indices, {} magnitudes, {} signs",
                magnitudes.len(),
                signs.len()
            ),
        ));
    }
    if signs.iter().any(|&s| s > 1) {
        return Err(Error::corrupt(0, "sign symbol other than 0 or 1"));
    }
    if magnitudes.contains(&0) {
        return Err(Error::corrupt(0, "zero magnitude in coefficient stream"));
    }
    let mut offset = 0;
    Ok(index_lists
        .into_iter()
        .map(|atom_indices| {
            let n = atom_indices.len();
            let block = QuantizedBlock {
                atom_indices,
                magnitudes: magnitudes[offset..offset + n].to_vec(),
                signs: signs[offset..offset + n].iter().map(|&s| s == 1).collect(),
            };
            offset += n;
            block
        })
        .collect())
}
