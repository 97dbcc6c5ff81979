//! Minimal RIFF/WAVE reader and writer for the signal interchange format.
//!
//! Reads integer PCM (16, 24 or 32 bit) and 32-bit IEEE float, keeping only
//! the first channel. Writes canonical 44-byte-header integer PCM.
//! `WAVE_FORMAT_EXTENSIBLE` files are rejected.

use crate::error::{Error, Result};

const FORMAT_PCM: u16 = 1;
const FORMAT_FLOAT: u16 = 3;
const FORMAT_EXTENSIBLE: u16 = 0xFFFE;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleFormat {
    Int16,
    Int24,
    Int32,
    Float32,
}

impl SampleFormat {
    pub fn bits(self) -> u16 {
        match self {
            SampleFormat::Int16 => 16,
            SampleFormat::Int24 => 24,
            SampleFormat::Int32 | SampleFormat::Float32 => 32,
        }
    }

    fn bytes(self) -> usize {
        self.bits() as usize / 8
    }

    /// Integer PCM format of the given width.
    pub fn pcm(bits: u16) -> Result<Self> {
        match bits {
            16 => Ok(SampleFormat::Int16),
            24 => Ok(SampleFormat::Int24),
            32 => Ok(SampleFormat::Int32),
            _ => Err(Error::input(format!("unsupported PCM bit depth {bits}"))),
        }
    }
}

/// Mono signal with samples nominally in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
    pub format: SampleFormat,
}

impl Signal {
    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len().max(1) as f64
    }
}

fn le_u16(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn le_u32(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

struct Format {
    tag: u16,
    channels: u16,
    sample_rate: u32,
    block_align: u16,
    bits: u16,
}

pub fn read_wav(bytes: &[u8]) -> Result<Signal> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(Error::wav("RIFF", "missing RIFF/WAVE signature"));
    }
    let mut pos = 12;
    let mut format: Option<Format> = None;
    let mut data: Option<&[u8]> = None;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = le_u32(bytes, pos + 4) as usize;
        let body_start = pos + 8;
        let chunk = String::from_utf8_lossy(id).into_owned();
        let body_end = body_start.checked_add(size).filter(|&e| e <= bytes.len());
        match id {
            b"fmt " => {
                let end =
                    body_end.ok_or_else(|| Error::wav(&chunk, "chunk runs past end of file"))?;
                let body = &bytes[body_start..end];
                if body.len() < 16 {
                    return Err(Error::wav(&chunk, format!("{} bytes, need 16", body.len())));
                }
                format = Some(Format {
                    tag: le_u16(body, 0),
                    channels: le_u16(body, 2),
                    sample_rate: le_u32(body, 4),
                    block_align: le_u16(body, 12),
                    bits: le_u16(body, 14),
                });
            }
            b"data" => {
                // Tolerate a data chunk whose declared size overshoots the file.
                let end = body_end.unwrap_or(bytes.len());
                data = Some(&bytes[body_start..end]);
                if body_end.is_none() {
                    log::warn!("data chunk truncated: declared {size} bytes");
                }
            }
            _ => {}
        }
        pos = body_start.saturating_add(size).saturating_add(size & 1);
    }

    let fmt = format.ok_or_else(|| Error::wav("fmt ", "missing"))?;
    let data = data.ok_or_else(|| Error::wav("data", "missing"))?;
    let sample_format = match (fmt.tag, fmt.bits) {
        (FORMAT_PCM, 16) => SampleFormat::Int16,
        (FORMAT_PCM, 24) => SampleFormat::Int24,
        (FORMAT_PCM, 32) => SampleFormat::Int32,
        (FORMAT_FLOAT, 32) => SampleFormat::Float32,
        (FORMAT_EXTENSIBLE, _) => {
            return Err(Error::wav(
                "fmt ",
                "WAVE_FORMAT_EXTENSIBLE is not supported",
            ))
        }
        (tag, bits) => {
            return Err(Error::wav(
                "fmt ",
                format!("unsupported encoding: format tag {tag}, {bits} bits"),
            ))
        }
    };
    if fmt.channels == 0 {
        return Err(Error::wav("fmt ", "zero channels"));
    }
    if fmt.sample_rate == 0 {
        return Err(Error::wav("fmt ", "zero sample rate"));
    }
    let width = sample_format.bytes();
    let frame = fmt.channels as usize * width;
    if fmt.block_align as usize != frame {
        return Err(Error::wav(
            "fmt ",
            format!("block align {} does not match {frame}", fmt.block_align),
        ));
    }
    if fmt.channels > 1 {
        log::info!("{} channels present; reading channel 0", fmt.channels);
    }
    let samples: Vec<f64> = data
        .chunks_exact(frame)
        .map(|f| decode_sample(&f[..width], sample_format))
        .collect();
    if samples.is_empty() {
        return Err(Error::wav("data", "no samples"));
    }
    Ok(Signal {
        samples,
        sample_rate: fmt.sample_rate,
        format: sample_format,
    })
}

fn decode_sample(b: &[u8], format: SampleFormat) -> f64 {
    match format {
        SampleFormat::Int16 => i16::from_le_bytes([b[0], b[1]]) as f64 / 32768.0,
        SampleFormat::Int24 => {
            let v = i32::from_le_bytes([0, b[0], b[1], b[2]]) >> 8;
            v as f64 / 8_388_608.0
        }
        SampleFormat::Int32 => {
            i32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64 / 2_147_483_648.0
        }
        SampleFormat::Float32 => f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WavOutput {
    pub bytes: Vec<u8>,
    /// Samples outside `[-1, 1]` that were clipped.
    pub clipped: usize,
}

/// Serializes `samples` as integer PCM with a canonical 44-byte header.
pub fn write_wav(samples: &[f64], sample_rate: u32, format: SampleFormat) -> Result<WavOutput> {
    if format == SampleFormat::Float32 {
        return Err(Error::input("writer emits integer PCM only"));
    }
    let width = format.bytes();
    let data_len = samples.len() * width;
    if data_len > u32::MAX as usize - 36 {
        return Err(Error::input("signal too long for a RIFF file"));
    }
    let mut out = Vec::with_capacity(44 + data_len);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len as u32).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&FORMAT_PCM.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&sample_rate.to_le_bytes());
    out.extend_from_slice(&(sample_rate * width as u32).to_le_bytes());
    out.extend_from_slice(&(width as u16).to_le_bytes());
    out.extend_from_slice(&format.bits().to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data_len as u32).to_le_bytes());

    let full_scale = (1u64 << (format.bits() - 1)) as f64;
    let (min, max) = (-full_scale, full_scale - 1.0);
    let mut clipped = 0;
    for &s in samples {
        if !(-1.0..=1.0).contains(&s) {
            clipped += 1;
        }
        let v = (s * full_scale).round().clamp(min, max) as i64;
        out.extend_from_slice(&v.to_le_bytes()[..width]);
    }
    if clipped > 0 {
        log::warn!("{clipped} samples outside [-1, 1] were clipped");
    }
    Ok(WavOutput {
        bytes: out,
        clipped,
    })
}
