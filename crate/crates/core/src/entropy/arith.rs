//! Adaptive order-0 arithmetic coder with 32-bit integer registers.
//!
//! Every symbol starts with count 1; the coded symbol's count is incremented
//! after each step and all counts are halved (rounding up) once the total
//! exceeds [`RESCALE_LIMIT`]. Output is a pure function of the symbol
//! sequence and alphabet size.
//!
//! Alphabets larger than the rescale limit are accepted: their counts are
//! halved back to one after every step, so the model stays uniform.

use crate::error::{Error, Result};

use super::{CodedStream, SymbolStream};

/// Largest alphabet the model accepts. Totals stay far below the 2^30
/// that 32-bit registers can resolve.
pub const MAX_ALPHABET: u32 = 1 << 24;
/// Counts are halved when their total goes above this.
pub const RESCALE_LIMIT: u32 = 1 << 16;

const TOP: u64 = (1 << 32) - 1;
const HALF: u64 = 1 << 31;
const QUARTER: u64 = 1 << 30;
const THREE_QUARTERS: u64 = 3 << 30;

/// Symbol counts kept in a Fenwick tree for logarithmic cumulative lookups.
struct AdaptiveModel {
    freq: Vec<u32>,
    tree: Vec<u32>,
    total: u32,
    // Symbols whose count is above one; the only ones halving changes.
    raised: Vec<usize>,
}

impl AdaptiveModel {
    fn new(alphabet: u32) -> Self {
        let mut model = AdaptiveModel {
            freq: vec![1; alphabet as usize],
            tree: Vec::new(),
            total: alphabet,
            raised: Vec::new(),
        };
        model.rebuild();
        model
    }

    fn rebuild(&mut self) {
        let n = self.freq.len();
        self.tree = vec![0; n + 1];
        for (i, &f) in self.freq.iter().enumerate() {
            self.tree[i + 1] += f;
            let parent = (i + 1) + ((i + 1) & (i + 1).wrapping_neg());
            if parent <= n {
                let carry = self.tree[i + 1];
                self.tree[parent] += carry;
            }
        }
    }

    /// Sum of counts of symbols below `symbol`.
    fn cumulative(&self, symbol: usize) -> u32 {
        let mut i = symbol;
        let mut sum = 0;
        while i > 0 {
            sum += self.tree[i];
            i &= i - 1;
        }
        sum
    }

    fn interval(&self, symbol: usize) -> (u32, u32) {
        let lo = self.cumulative(symbol);
        (lo, lo + self.freq[symbol])
    }

    /// Symbol whose interval contains `target` (`target < total`).
    fn find(&self, target: u32) -> usize {
        let n = self.freq.len();
        let mut pos = 0usize;
        let mut rem = target;
        let mut step = n.next_power_of_two();
        while step > 0 {
            let next = pos + step;
            if next <= n && self.tree[next] <= rem {
                pos = next;
                rem -= self.tree[next];
            }
            step >>= 1;
        }
        pos
    }

    fn add(&mut self, symbol: usize, amount: u32, increase: bool) {
        let n = self.freq.len();
        let mut i = symbol + 1;
        while i <= n {
            if increase {
                self.tree[i] += amount;
            } else {
                self.tree[i] -= amount;
            }
            i += i & i.wrapping_neg();
        }
    }

    fn update(&mut self, symbol: usize) {
        if self.freq[symbol] == 1 {
            self.raised.push(symbol);
        }
        self.freq[symbol] += 1;
        self.total += 1;
        self.add(symbol, 1, true);
        if self.total > RESCALE_LIMIT {
            let raised = std::mem::take(&mut self.raised);
            for &s in &raised {
                let halved = self.freq[s].div_ceil(2);
                let drop = self.freq[s] - halved;
                self.freq[s] = halved;
                self.total -= drop;
                self.add(s, drop, false);
            }
            self.raised = raised.into_iter().filter(|&s| self.freq[s] > 1).collect();
        }
    }
}

struct BitWriter {
    bytes: Vec<u8>,
    current: u8,
    filled: u8,
}

impl BitWriter {
    fn new() -> Self {
        BitWriter {
            bytes: Vec::new(),
            current: 0,
            filled: 0,
        }
    }

    fn push(&mut self, bit: bool) {
        self.current = (self.current << 1) | bit as u8;
        self.filled += 1;
        if self.filled == 8 {
            self.bytes.push(self.current);
            self.current = 0;
            self.filled = 0;
        }
    }

    fn push_with_pending(&mut self, bit: bool, pending: &mut u64) {
        self.push(bit);
        while *pending > 0 {
            self.push(!bit);
            *pending -= 1;
        }
    }

    fn finish(mut self) -> Vec<u8> {
        if self.filled > 0 {
            self.current <<= 8 - self.filled;
            self.bytes.push(self.current);
        }
        self.bytes
    }
}

struct BitReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl BitReader<'_> {
    /// Past the end reads zeros; the caller bounds how far.
    fn next(&mut self) -> u64 {
        let byte = self.pos / 8;
        let bit = match self.bytes.get(byte) {
            Some(b) => (b >> (7 - self.pos % 8)) & 1,
            None => 0,
        };
        self.pos += 1;
        bit as u64
    }

    fn overrun(&self) -> usize {
        self.pos.saturating_sub(self.bytes.len() * 8)
    }
}

fn check_alphabet(alphabet: u32) -> Result<()> {
    if alphabet == 0 || alphabet > MAX_ALPHABET {
        return Err(Error::input(format!(
            "alphabet size {alphabet} outside 1..={MAX_ALPHABET}"
        )));
    }
    Ok(())
}

pub fn arith_encode(stream: &SymbolStream) -> Result<CodedStream> {
    check_alphabet(stream.alphabet_size)?;
    if let Some(&bad) = stream.symbols.iter().find(|&&s| s >= stream.alphabet_size) {
        return Err(Error::input(format!(
            "symbol {bad} outside alphabet of size {}",
            stream.alphabet_size
        )));
    }
    let mut coded = CodedStream {
        payload: Vec::new(),
        symbol_count: stream.symbols.len() as u64,
        alphabet_size: stream.alphabet_size,
    };
    if stream.symbols.is_empty() {
        return Ok(coded);
    }

    let mut model = AdaptiveModel::new(stream.alphabet_size);
    let mut out = BitWriter::new();
    let (mut low, mut high, mut pending) = (0u64, TOP, 0u64);
    for &s in &stream.symbols {
        let s = s as usize;
        let (lo, hi) = model.interval(s);
        let total = model.total as u64;
        let range = high - low + 1;
        high = low + range * hi as u64 / total - 1;
        low += range * lo as u64 / total;
        loop {
            if high < HALF {
                out.push_with_pending(false, &mut pending);
            } else if low >= HALF {
                out.push_with_pending(true, &mut pending);
                low -= HALF;
                high -= HALF;
            } else if low >= QUARTER && high < THREE_QUARTERS {
                pending += 1;
                low -= QUARTER;
                high -= QUARTER;
            } else {
                break;
            }
            low <<= 1;
            high = (high << 1) | 1;
        }
        model.update(s);
    }
    pending += 1;
    out.push_with_pending(low >= QUARTER, &mut pending);
    coded.payload = out.finish();
    Ok(coded)
}

pub fn arith_decode(coded: &CodedStream) -> Result<SymbolStream> {
    check_alphabet(coded.alphabet_size).map_err(|e| Error::corrupt(0, e.to_string()))?;
    let count = usize::try_from(coded.symbol_count)
        .map_err(|_| Error::corrupt(0, "symbol count does not fit in memory"))?;
    if count == 0 {
        if !coded.payload.is_empty() {
            return Err(Error::corrupt(0, "payload present for an empty stream"));
        }
        return Ok(SymbolStream {
            symbols: Vec::new(),
            alphabet_size: coded.alphabet_size,
        });
    }
    // Every coded symbol needs at least one payload bit per 2^16 symbols
    // in the most skewed case; reject counts the payload cannot carry.
    let max_symbols = (coded.payload.len() as u64 + 1) * 8 * (RESCALE_LIMIT as u64) * 16;
    if coded.symbol_count > max_symbols {
        return Err(Error::corrupt(
            0,
            "symbol count inconsistent with payload size",
        ));
    }

    let mut model = AdaptiveModel::new(coded.alphabet_size);
    let mut input = BitReader {
        bytes: &coded.payload,
        pos: 0,
    };
    let (mut low, mut high) = (0u64, TOP);
    let mut value = 0u64;
    for _ in 0..32 {
        value = (value << 1) | input.next();
    }
    let mut symbols = Vec::with_capacity(count);
    for _ in 0..count {
        let total = model.total as u64;
        let range = high - low + 1;
        if value < low || value > high {
            return Err(Error::corrupt(
                input.pos / 8,
                "code value left the coding interval",
            ));
        }
        let target = ((value - low + 1) * total - 1) / range;
        if target >= total {
            return Err(Error::corrupt(
                input.pos / 8,
                "code value outside model range",
            ));
        }
        let s = model.find(target as u32);
        let (lo, hi) = model.interval(s);
        high = low + range * hi as u64 / total - 1;
        low += range * lo as u64 / total;
        loop {
            if high < HALF {
            } else if low >= HALF {
                value -= HALF;
                low -= HALF;
                high -= HALF;
            } else if low >= QUARTER && high < THREE_QUARTERS {
                value -= QUARTER;
                low -= QUARTER;
                high -= QUARTER;
            } else {
                break;
            }
            low <<= 1;
            high = (high << 1) | 1;
            value = (value << 1) | input.next();
        }
        if input.overrun() > 32 {
            return Err(Error::corrupt(
                coded.payload.len(),
                "payload exhausted before all symbols were decoded",
            ));
        }
        model.update(s);
        symbols.push(s as u32);
    }
    Ok(SymbolStream {
        symbols,
        alphabet_size: coded.alphabet_size,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn roundtrip(symbols: Vec<u32>, alphabet: u32) -> CodedStream {
        let stream = SymbolStream::new(symbols, alphabet).unwrap();
        let coded = arith_encode(&stream).unwrap();
        let back = arith_decode(&coded).unwrap();
        assert_eq!(back, stream);
        coded
    }

    #[test]
    fn model_cumulative_and_find_agree() {
        let mut m = AdaptiveModel::new(13);
        for s in [3usize, 3, 7, 12, 0, 3] {
            m.update(s);
        }
        let mut acc = 0;
        for s in 0..13 {
            assert_eq!(m.cumulative(s), acc);
            for t in acc..acc + m.freq[s] {
                assert_eq!(m.find(t), s);
            }
            acc += m.freq[s];
        }
        assert_eq!(acc, m.total);
    }

    #[test]
    fn rescale_keeps_counts_positive() {
        let mut m = AdaptiveModel::new(4);
        for _ in 0..(RESCALE_LIMIT as usize + 10) {
            m.update(1);
        }
        assert!(m.total <= RESCALE_LIMIT);
        assert!(m.freq.iter().all(|&f| f >= 1));
        assert_eq!(m.total, m.freq.iter().sum::<u32>());
        assert_eq!(m.cumulative(4), m.total);
    }

    #[test]
    fn empty_stream_has_empty_payload() {
        let coded = roundtrip(vec![], 5);
        assert!(coded.payload.is_empty());
    }

    #[test]
    fn constant_source_compresses() {
        let coded = roundtrip(vec![3; 10_000], 16);
        assert!(coded.payload.len() < 200, "{} bytes", coded.payload.len());
    }

    #[test]
    fn single_symbol_alphabet() {
        roundtrip(vec![0; 100], 1);
    }

    #[test]
    fn sparse_rescale_matches_full_halving() {
        for alphabet in [3u32, 300, 70_000] {
            let mut model = AdaptiveModel::new(alphabet);
            let mut naive = vec![1u32; alphabet as usize];
            let mut total = alphabet;
            for i in 0..200_000u64 {
                let s = ((i * i + 7 * i) % 97 % alphabet as u64) as usize;
                model.update(s);
                naive[s] += 1;
                total += 1;
                if total > RESCALE_LIMIT {
                    for f in &mut naive {
                        *f = f.div_ceil(2);
                    }
                    total = naive.iter().sum();
                }
                if i % 9973 == 0 {
                    assert_eq!(model.freq, naive);
                    assert_eq!(model.total, naive.iter().sum::<u32>());
                    assert_eq!(model.cumulative(alphabet as usize), model.total);
                }
            }
        }
    }

    #[test]
    fn oversized_alphabet_codes_uniformly() {
        let alphabet = 1u32 << 20;
        let symbols: Vec<u32> = (0..2000u32).map(|i| i % 3).collect();
        let coded = roundtrip(symbols, alphabet);
        let bits = coded.payload.len() as f64 * 8.0 / 2000.0;
        assert!((bits - 20.0).abs() < 0.1, "{bits} bits per symbol");
    }

    #[test]
    fn largest_alphabet() {
        let symbols: Vec<u32> = (0..5000u32).map(|i| (i * 7919) % MAX_ALPHABET).collect();
        roundtrip(symbols, MAX_ALPHABET);
    }

    #[test]
    fn out_of_range_inputs_rejected() {
        let bad = SymbolStream {
            symbols: vec![4],
            alphabet_size: 4,
        };
        assert!(arith_encode(&bad).is_err());
        let bad = SymbolStream {
            symbols: vec![],
            alphabet_size: MAX_ALPHABET + 1,
        };
        assert!(arith_encode(&bad).is_err());
    }

    #[test]
    fn truncated_payload_is_corrupt() {
        let symbols: Vec<u32> = (0..4000u32).map(|i| (i * 31 + i / 7) % 200).collect();
        let stream = SymbolStream::new(symbols, 256).unwrap();
        let mut coded = arith_encode(&stream).unwrap();
        coded.payload.truncate(coded.payload.len() / 2);
        match arith_decode(&coded) {
            Err(Error::Corrupt { .. }) => {}
            Ok(s) => assert_ne!(s, stream),
            Err(e) => panic!("unexpected error {e}"),
        }
    }

    #[test]
    fn encoding_is_deterministic() {
        let symbols: Vec<u32> = (0..3000u32).map(|i| (i * i) % 97).collect();
        let stream = SymbolStream::new(symbols, 97).unwrap();
        assert_eq!(
            arith_encode(&stream).unwrap(),
            arith_encode(&stream).unwrap()
        );
    }
}
