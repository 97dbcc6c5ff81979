//! Byte layout of a `.gwdc` file. Little-endian throughout.
//!
//! ```text
//! magic "GWDC" | version u16 | sample_rate u32 | N u64 | pad u32 |
//! block_size u32 | delta f64 |
//! dictionary: block_size u32, trig_size u32, prototype count u8,
//!             per prototype: support u16, samples f64 * support |
//! Q u32 |
//! 3 x coded stream (indices, magnitudes, signs):
//!     symbol_count u64, alphabet_size u32, payload_len u64, payload
//! ```

use std::fmt::Write as _;

use crate::dictionary::{DictionaryConfig, PrototypeAtom};
use crate::entropy::{CodedStream, MAX_ALPHABET};
use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"GWDC";
pub const VERSION: u16 = 1;
/// Byte offset of the dictionary description.
pub const DICTIONARY_OFFSET: usize = 34;

#[derive(Debug, Clone, PartialEq)]
pub struct Header {
    pub version: u16,
    pub sample_rate: u32,
    pub original_length: u64,
    pub pad_length: u32,
    pub block_size: u32,
    pub delta: f64,
    pub dictionary: DictionaryConfig,
    pub block_count: u32,
}

impl Header {
    pub fn validate(&self) -> Result<()> {
        if self.block_size as usize != self.dictionary.block_size {
            return Err(Error::corrupt(
                22,
                format!(
                    "block size {} disagrees with dictionary block size {}",
                    self.block_size, self.dictionary.block_size
                ),
            ));
        }
        let padded = self.block_count as u64 * self.block_size as u64;
        if self.pad_length as u64 >= self.block_size as u64 && self.block_count > 0
            || padded.checked_sub(self.pad_length as u64) != Some(self.original_length)
        {
            return Err(Error::corrupt(
                10,
                format!(
                    "length {} inconsistent with {} blocks of {} minus pad {}",
                    self.original_length, self.block_count, self.block_size, self.pad_length
                ),
            ));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::corrupt(
                26,
                format!("invalid quantization step {}", self.delta),
            ));
        }
        self.dictionary
            .validate()
            .map_err(|e| Error::corrupt(DICTIONARY_OFFSET, e.to_string()))?;
        if self.dictionary.total_atoms() >= MAX_ALPHABET as usize {
            return Err(Error::corrupt(
                DICTIONARY_OFFSET,
                format!(
                    "{} atoms exceed the index alphabet",
                    self.dictionary.total_atoms()
                ),
            ));
        }
        Ok(())
    }

    /// One `key=value` line per field.
    pub fn describe(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "magic=GWDC");
        let _ = writeln!(s, "version={}", self.version);
        let _ = writeln!(s, "sample_rate={}", self.sample_rate);
        let _ = writeln!(s, "original_length={}", self.original_length);
        let _ = writeln!(s, "pad_length={}", self.pad_length);
        let _ = writeln!(s, "block_size={}", self.block_size);
        let _ = writeln!(s, "delta={:e}", self.delta);
        let _ = writeln!(s, "trig_size={}", self.dictionary.trig_size);
        let _ = writeln!(s, "prototypes={}", self.dictionary.prototypes.len());
        for (k, p) in self.dictionary.prototypes.iter().enumerate() {
            let samples: Vec<String> = p.samples().iter().map(|x| format!("{x:e}")).collect();
            let _ = writeln!(s, "prototype_{}={}", k + 1, samples.join(";"));
        }
        let _ = writeln!(s, "total_atoms={}", self.dictionary.total_atoms());
        let _ = writeln!(s, "block_count={}", self.block_count);
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncodedFile {
    pub header: Header,
    pub indices: CodedStream,
    pub magnitudes: CodedStream,
    pub signs: CodedStream,
}

impl EncodedFile {
    pub fn to_bytes(&self) -> Vec<u8> {
        let h = &self.header;
        let mut out = Vec::new();
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&h.version.to_le_bytes());
        out.extend_from_slice(&h.sample_rate.to_le_bytes());
        out.extend_from_slice(&h.original_length.to_le_bytes());
        out.extend_from_slice(&h.pad_length.to_le_bytes());
        out.extend_from_slice(&h.block_size.to_le_bytes());
        out.extend_from_slice(&h.delta.to_le_bytes());
        write_dictionary(&h.dictionary, &mut out);
        out.extend_from_slice(&h.block_count.to_le_bytes());
        for stream in [&self.indices, &self.magnitudes, &self.signs] {
            out.extend_from_slice(&stream.symbol_count.to_le_bytes());
            out.extend_from_slice(&stream.alphabet_size.to_le_bytes());
            out.extend_from_slice(&(stream.payload.len() as u64).to_le_bytes());
            out.extend_from_slice(&stream.payload);
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let header = read_header(&mut Reader::new(bytes))?;
        let mut r = Reader::new(bytes);
        r.pos = header_len(&header);
        let indices = read_stream(&mut r)?;
        let magnitudes = read_stream(&mut r)?;
        let signs = read_stream(&mut r)?;
        if r.pos != bytes.len() {
            return Err(Error::corrupt(r.pos, "trailing bytes after last stream"));
        }
        Ok(EncodedFile {
            header,
            indices,
            magnitudes,
            signs,
        })
    }
}

/// Parses and validates only the header.
pub fn parse_header(bytes: &[u8]) -> Result<Header> {
    read_header(&mut Reader::new(bytes))
}

pub(crate) fn header_len(h: &Header) -> usize {
    let protos: usize = h
        .dictionary
        .prototypes
        .iter()
        .map(|p| 2 + 8 * p.support())
        .sum();
    4 + 2 + 4 + 8 + 4 + 4 + 8 + (4 + 4 + 1 + protos) + 4
}

fn write_dictionary(cfg: &DictionaryConfig, out: &mut Vec<u8>) {
    out.extend_from_slice(&(cfg.block_size as u32).to_le_bytes());
    out.extend_from_slice(&(cfg.trig_size as u32).to_le_bytes());
    out.push(cfg.prototypes.len() as u8);
    for p in &cfg.prototypes {
        out.extend_from_slice(&(p.support() as u16).to_le_bytes());
        for s in p.samples() {
            out.extend_from_slice(&s.to_le_bytes());
        }
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Reader { bytes, pos: 0 }
    }

    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| {
                Error::corrupt(
                    self.pos,
                    format!(
                        "truncated {what}: need {n} bytes, {} left",
                        self.bytes.len() - self.pos
                    ),
                )
            })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
}

fn read_header(r: &mut Reader<'_>) -> Result<Header> {
    let magic = r.take(4, "magic")?;
    if magic != MAGIC {
        return Err(Error::corrupt(0, "bad magic, not a GWDC file"));
    }
    let version_at = r.pos;
    let version = r.u16("version")?;
    if version != VERSION {
        return Err(Error::corrupt(
            version_at,
            format!("unsupported version {version}, expected {VERSION}"),
        ));
    }
    let sample_rate = r.u32("sample rate")?;
    let original_length = r.u64("signal length")?;
    let pad_length = r.u32("pad length")?;
    let block_size = r.u32("block size")?;
    let delta = r.f64("quantization step")?;

    let dict_at = r.pos;
    let dict_block = r.u32("dictionary block size")? as usize;
    let trig_size = r.u32("trig size")? as usize;
    let count = r.u8("prototype count")?;
    let mut prototypes = Vec::with_capacity(count as usize);
    for k in 0..count {
        let support = r.u16("prototype support")? as usize;
        let proto_at = r.pos;
        let samples = (0..support)
            .map(|_| r.f64("prototype sample"))
            .collect::<Result<Vec<_>>>()?;
        let proto = PrototypeAtom::new(format!("p{}", k + 1), samples)
            .map_err(|e| Error::corrupt(proto_at, e.to_string()))?;
        prototypes.push(proto);
    }
    let dictionary = DictionaryConfig {
        block_size: dict_block,
        trig_size,
        prototypes,
    };
    dictionary
        .validate()
        .map_err(|e| Error::corrupt(dict_at, e.to_string()))?;
    let block_count = r.u32("block count")?;
    let header = Header {
        version,
        sample_rate,
        original_length,
        pad_length,
        block_size,
        delta,
        dictionary,
        block_count,
    };
    header.validate()?;
    Ok(header)
}

fn read_stream(r: &mut Reader<'_>) -> Result<CodedStream> {
    let symbol_count = r.u64("stream symbol count")?;
    let alphabet_size = r.u32("stream alphabet size")?;
    let len_at = r.pos;
    let len = r.u64("stream payload length")?;
    let len =
        usize::try_from(len).map_err(|_| Error::corrupt(len_at, "payload length overflow"))?;
    let payload = r.take(len, "stream payload")?.to_vec();
    Ok(CodedStream {
        payload,
        symbol_count,
        alphabet_size,
    })
}
