//! Encode and decode pipelines around the `.gwdc` container.
//!
//! Encoding: partition, per-block pursuit, quantize and prune, build the
//! three symbol streams, arithmetic-code them, serialize. Decoding runs the
//! same steps backwards and reproduces the encoder-side quantized
//! approximation bit for bit.

mod format;
mod rate;

pub use format::{parse_header, EncodedFile, Header, MAGIC, VERSION};
pub use rate::{rate_control_search, RateOutcome, RateTarget, SearchOptions};

use crate::dictionary::{Dictionary, DictionaryConfig};
use crate::entropy::{
    arith_decode, arith_encode, build_coeff_stream, build_index_stream, build_sign_stream,
    parse_index_stream, split_model, MAX_ALPHABET,
};
use crate::error::{Error, Result};
use crate::pursuit::{
    approximate_blocks, assemble_signal, partition_signal, reconstruct_from_parts,
    AtomicDecomposition, StopRule,
};
use crate::quantizer::{default_delta, dequantize_block, quantize_block, QuantizedBlock};

/// Unquantized per-block model of a signal.
#[derive(Debug, Clone, PartialEq)]
pub struct Approximation {
    pub original_length: usize,
    pub pad_length: usize,
    pub decompositions: Vec<AtomicDecomposition>,
}

impl Approximation {
    pub fn total_atoms(&self) -> usize {
        self.decompositions.iter().map(|d| d.iterations()).sum()
    }

    pub fn max_abs_coefficient(&self) -> f64 {
        self.decompositions
            .iter()
            .flat_map(|d| d.coefficients.iter())
            .fold(0.0, |m: f64, c| m.max(c.abs()))
    }
}

/// Output of one encoding pass.
#[derive(Debug, Clone)]
pub struct Encoded {
    pub bytes: Vec<u8>,
    pub delta: f64,
    pub quantized: Vec<QuantizedBlock>,
    /// What a decoder will reconstruct from `bytes`.
    pub reconstruction: Vec<f64>,
}

impl Encoded {
    pub fn atom_count(&self) -> usize {
        self.quantized.iter().map(QuantizedBlock::len).sum()
    }
}

#[derive(Debug, Clone)]
pub struct Decoded {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
    pub header: Header,
    pub blocks: Vec<QuantizedBlock>,
}

pub struct Encoder {
    dict: Dictionary,
    workers: usize,
}

impl Encoder {
    pub fn new(config: DictionaryConfig) -> Result<Self> {
        let dict = Dictionary::new(config)?;
        if dict.len() >= MAX_ALPHABET as usize {
            return Err(Error::config(format!(
                "dictionary of {} atoms exceeds the index alphabet limit {}",
                dict.len(),
                MAX_ALPHABET - 1
            )));
        }
        Ok(Encoder { dict, workers: 1 })
    }

    /// Threads used for per-block pursuit. Output does not depend on it.
    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers.max(1);
        self
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    pub fn dictionary(&self) -> &Dictionary {
        &self.dict
    }

    pub fn block_size(&self) -> usize {
        self.dict.block_size()
    }

    pub fn approximate(&self, signal: &[f64], stop: &StopRule) -> Result<Approximation> {
        if signal.iter().any(|x| !x.is_finite()) {
            return Err(Error::input("signal contains non-finite samples"));
        }
        let partition = partition_signal(signal, self.dict.block_size())?;
        let decompositions = approximate_blocks(&partition.blocks, &self.dict, stop, self.workers)?;
        Ok(Approximation {
            original_length: signal.len(),
            pad_length: partition.pad_length,
            decompositions,
        })
    }

    /// Quantizes a model and reconstructs what the decoder will see.
    pub fn quantize(
        &self,
        approx: &Approximation,
        delta: f64,
    ) -> Result<(Vec<QuantizedBlock>, Vec<f64>)> {
        let quantized = approx
            .decompositions
            .iter()
            .map(|d| quantize_block(d, delta))
            .collect::<Result<Vec<_>>>()?;
        let reconstruction =
            reconstruct_quantized(&self.dict, &quantized, delta, approx.pad_length)?;
        Ok((quantized, reconstruction))
    }

    /// Step used when none is given: the finest the coder's alphabet allows.
    pub fn default_delta(&self, approx: &Approximation) -> f64 {
        default_delta(approx.max_abs_coefficient()).unwrap_or(1.0)
    }

    pub fn encode_approximation(
        &self,
        approx: &Approximation,
        sample_rate: u32,
        delta: Option<f64>,
    ) -> Result<Encoded> {
        let delta = delta.unwrap_or_else(|| self.default_delta(approx));
        let (quantized, reconstruction) = self.quantize(approx, delta)?;
        let config = self
            .dict
            .config()
            .expect("encoder dictionaries are built from a config")
            .clone();
        let block_count = u32::try_from(quantized.len())
            .map_err(|_| Error::input("signal has too many blocks"))?;
        let pad_length = approx.pad_length as u32;
        let header = Header {
            version: VERSION,
            sample_rate,
            original_length: approx.original_length as u64,
            pad_length,
            block_size: self.dict.block_size() as u32,
            delta,
            dictionary: config,
            block_count,
        };
        let magnitudes = build_coeff_stream(&quantized);
        if magnitudes.alphabet_size > MAX_ALPHABET {
            return Err(Error::input(format!(
                "quantization step {delta:e} yields magnitude {} above the coder limit {}",
                magnitudes.alphabet_size - 1,
                MAX_ALPHABET - 1
            )));
        }
        let file = EncodedFile {
            header,
            indices: arith_encode(&build_index_stream(&quantized)?)?,
            magnitudes: arith_encode(&magnitudes)?,
            signs: arith_encode(&build_sign_stream(&quantized))?,
        };
        Ok(Encoded {
            bytes: file.to_bytes(),
            delta,
            quantized,
            reconstruction,
        })
    }

    pub fn encode(
        &self,
        signal: &[f64],
        sample_rate: u32,
        stop: &StopRule,
        delta: Option<f64>,
    ) -> Result<Encoded> {
        let approx = self.approximate(signal, stop)?;
        self.encode_approximation(&approx, sample_rate, delta)
    }
}

/// Dequantizes every block, synthesizes it and concatenates without padding.
pub fn reconstruct_quantized(
    dict: &Dictionary,
    blocks: &[QuantizedBlock],
    delta: f64,
    pad_length: usize,
) -> Result<Vec<f64>> {
    let synthesized = blocks
        .iter()
        .map(|b| reconstruct_from_parts(&b.atom_indices, &dequantize_block(b, delta), dict))
        .collect::<Result<Vec<_>>>()?;
    assemble_signal(&synthesized, pad_length)
}

/// One-shot encode to container bytes.
pub fn encode_signal(
    signal: &[f64],
    sample_rate: u32,
    dict_config: DictionaryConfig,
    stop: &StopRule,
    delta: Option<f64>,
) -> Result<Vec<u8>> {
    Ok(Encoder::new(dict_config)?
        .encode(signal, sample_rate, stop, delta)?
        .bytes)
}

pub fn decode_signal(bytes: &[u8]) -> Result<Decoded> {
    let file = EncodedFile::from_bytes(bytes)?;
    let header = file.header;
    let block_count = header.block_count as usize;
    let dict = Dictionary::new(header.dictionary.clone())
        .map_err(|e| Error::corrupt(format::DICTIONARY_OFFSET, e.to_string()))?;

    let streams_start = format::header_len(&header);
    if file.indices.alphabet_size as usize > dict.len() + 1 {
        return Err(Error::corrupt(
            streams_start + 8,
            format!(
                "index alphabet {} larger than the {}-atom dictionary allows",
                file.indices.alphabet_size,
                dict.len()
            ),
        ));
    }
    if file.signs.alphabet_size != 2 {
        return Err(Error::corrupt(
            streams_start,
            format!("sign alphabet {} is not binary", file.signs.alphabet_size),
        ));
    }
    let indices = arith_decode(&file.indices)?;
    let magnitudes = arith_decode(&file.magnitudes)?;
    let signs = arith_decode(&file.signs)?;
    let lists = parse_index_stream(&indices.symbols, block_count)?;
    if let Some(&bad) = lists.iter().flatten().find(|&&id| id as usize > dict.len()) {
        return Err(Error::corrupt(
            0,
            format!("atom id {bad} outside dictionary"),
        ));
    }
    let blocks = split_model(lists, &magnitudes.symbols, &signs.symbols)?;
    let samples = if block_count == 0 {
        Vec::new()
    } else {
        reconstruct_quantized(&dict, &blocks, header.delta, header.pad_length as usize)?
    };
    Ok(Decoded {
        samples,
        sample_rate: header.sample_rate,
        header,
        blocks,
    })
}
