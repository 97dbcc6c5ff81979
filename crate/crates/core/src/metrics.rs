//! Quality and compression metrics.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::pursuit::AtomicDecomposition;

/// Above this length cross-correlation goes through the FFT.
pub const DIRECT_XCORR_MAX_LEN: usize = 4096;

/// `10 log10(||f||^2 / ||f - fr||^2)`; `f64::INFINITY` when `fr == f`.
pub fn snr(f: &[f64], fr: &[f64]) -> Result<f64> {
    if f.len() != fr.len() {
        return Err(Error::Dimension {
            expected: f.len(),
            found: fr.len(),
        });
    }
    let signal: f64 = f.iter().map(|x| x * x).sum();
    if signal == 0.0 {
        return Err(Error::input("reference signal has zero norm"));
    }
    let noise: f64 = f.iter().zip(fr).map(|(a, b)| (a - b) * (a - b)).sum();
    if noise == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (signal / noise).log10())
}

/// Fixed six-decimal rendering; infinite values print as `inf`.
pub fn format_db(db: f64) -> String {
    if db.is_infinite() && db > 0.0 {
        "inf".to_string()
    } else {
        format!("{db:.6}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockSnrStats {
    /// One entry per block; `None` for blocks of zero norm.
    pub per_block: Vec<Option<f64>>,
    pub mean: f64,
    /// Sample standard deviation (divisor `Q - 1`); `None` with fewer than
    /// two measurable blocks.
    pub std: Option<f64>,
    /// 1-based indices of zero-norm blocks left out of mean and std.
    pub skipped: Vec<usize>,
}

/// Per-block snr with mean and standard deviation over blocks.
///
/// The last block may be shorter than `block_size`; it is measured on the
/// samples it has.
pub fn block_snr_stats(f: &[f64], fr: &[f64], block_size: usize) -> Result<BlockSnrStats> {
    if f.len() != fr.len() {
        return Err(Error::Dimension {
            expected: f.len(),
            found: fr.len(),
        });
    }
    if block_size == 0 {
        return Err(Error::config("block_size must be positive"));
    }
    let mut per_block = Vec::with_capacity(f.len().div_ceil(block_size));
    let mut skipped = Vec::new();
    for (q, (a, b)) in f.chunks(block_size).zip(fr.chunks(block_size)).enumerate() {
        match snr(a, b) {
            Ok(v) => per_block.push(Some(v)),
            Err(Error::Input(_)) => {
                per_block.push(None);
                skipped.push(q + 1);
            }
            Err(e) => return Err(e),
        }
    }
    let values: Vec<f64> = per_block.iter().flatten().copied().collect();
    if values.is_empty() {
        return Err(Error::input("every block has zero norm"));
    }
    let count = values.len() as f64;
    let mean = values.iter().sum::<f64>() / count;
    let std = (values.len() >= 2).then(|| {
        let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
        (ss / (count - 1.0)).sqrt()
    });
    Ok(BlockSnrStats {
        per_block,
        mean,
        std,
        skipped,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct QualityReport {
    pub snr_db: f64,
    pub block_snr_db: Vec<Option<f64>>,
    pub mean_snr_db: f64,
    pub std_snr_db: Option<f64>,
    pub cr: Option<f64>,
}

impl QualityReport {
    pub fn evaluate(f: &[f64], fr: &[f64], block_size: usize) -> Result<Self> {
        let stats = block_snr_stats(f, fr, block_size)?;
        Ok(QualityReport {
            snr_db: snr(f, fr)?,
            block_snr_db: stats.per_block,
            mean_snr_db: stats.mean,
            std_snr_db: stats.std,
            cr: None,
        })
    }

    pub fn with_cr(mut self, original_bytes: u64, compressed_bytes: u64) -> Result<Self> {
        self.cr = Some(compression_ratio(original_bytes, compressed_bytes)?);
        Ok(self)
    }

    /// Block rows `q,snr` followed by a `summary,<global snr>` row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("block_index,snr_db\n");
        for (q, v) in self.block_snr_db.iter().enumerate() {
            let cell = v.map_or_else(|| "skipped".to_string(), format_db);
            out.push_str(&format!("{},{}\n", q + 1, cell));
        }
        out.push_str(&format!("summary,{}\n", format_db(self.snr_db)));
        out
    }
}

pub fn compression_ratio(original_bytes: u64, compressed_bytes: u64) -> Result<f64> {
    if compressed_bytes == 0 || original_bytes == 0 {
        return Err(Error::input("file sizes must be positive"));
    }
    Ok(original_bytes as f64 / compressed_bytes as f64)
}

/// `sum_n f(n) g(n + lag)` for `lag` in `-max_lag..=max_lag`, samples outside
/// either signal taken as zero. Entry `lag + max_lag` holds that lag.
pub fn cross_correlation(f: &[f64], g: &[f64], max_lag: usize) -> Vec<f64> {
    if f.len().max(g.len()) <= DIRECT_XCORR_MAX_LEN {
        cross_correlation_direct(f, g, max_lag)
    } else {
        cross_correlation_fft(f, g, max_lag)
    }
}

pub fn cross_correlation_direct(f: &[f64], g: &[f64], max_lag: usize) -> Vec<f64> {
    let max_lag = max_lag as isize;
    (-max_lag..=max_lag)
        .map(|lag| {
            f.iter()
                .enumerate()
                .filter_map(|(n, &x)| {
                    let m = n as isize + lag;
                    (m >= 0 && (m as usize) < g.len()).then(|| x * g[m as usize])
                })
                .sum()
        })
        .collect()
}

pub fn cross_correlation_fft(f: &[f64], g: &[f64], max_lag: usize) -> Vec<f64> {
    let size = (f.len() + g.len()).max(2 * max_lag + 1).next_power_of_two();
    let mut planner = FftPlanner::new();
    let forward = planner.plan_fft_forward(size);
    let inverse = planner.plan_fft_inverse(size);
    let lift = |x: &[f64]| {
        let mut buf = vec![Complex::new(0.0, 0.0); size];
        for (b, &v) in buf.iter_mut().zip(x) {
            b.re = v;
        }
        buf
    };
    let mut fa = lift(f);
    let mut ga = lift(g);
    forward.process(&mut fa);
    forward.process(&mut ga);
    let mut prod: Vec<Complex<f64>> = fa.iter().zip(&ga).map(|(a, b)| a.conj() * b).collect();
    inverse.process(&mut prod);
    let scale = 1.0 / size as f64;
    let max_lag = max_lag as isize;
    (-max_lag..=max_lag)
        .map(|lag| prod[lag.rem_euclid(size as isize) as usize].re * scale)
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentResult {
    /// `g(n + shift)` lines up with `f(n)`.
    pub shift: i64,
    pub scale: f64,
    pub offset: f64,
    /// `scale * g(n + shift) + offset`, zero-extended outside `g`.
    pub aligned: Vec<f64>,
}

impl AlignmentResult {
    /// Gain and offset of the reference relative to `f`, i.e. `(a', b')`
    /// with `g(n + shift) ~ a' f(n) + b'`. Inverse of `(scale, offset)`.
    pub fn distortion(&self) -> (f64, f64) {
        (1.0 / self.scale, -self.offset / self.scale)
    }
}

/// Undoes a time shift and an affine gain between `f` and a reference `g`.
///
/// The shift maximizes the cross-correlation over `|lag| <= N/2`. Gain and
/// offset are the least-squares fit of `f` against the shifted `g` over the
/// samples where both are defined.
pub fn align_reference(f: &[f64], g: &[f64]) -> Result<AlignmentResult> {
    if f.len() != g.len() {
        return Err(Error::Dimension {
            expected: f.len(),
            found: g.len(),
        });
    }
    if f.is_empty() {
        return Err(Error::input("cannot align empty signals"));
    }
    let n = f.len();
    let max_lag = n / 2;
    let xc = cross_correlation(f, g, max_lag);
    let mut best = 0usize;
    for (k, &v) in xc.iter().enumerate() {
        if v > xc[best] {
            best = k;
        }
    }
    let shift = best as i64 - max_lag as i64;

    let shifted: Vec<Option<f64>> = (0..n as i64)
        .map(|i| {
            let m = i + shift;
            (m >= 0 && (m as usize) < n).then(|| g[m as usize])
        })
        .collect();
    let pairs: Vec<(f64, f64)> = f
        .iter()
        .zip(&shifted)
        .filter_map(|(&a, b)| b.map(|b| (a, b)))
        .collect();
    let count = pairs.len() as f64;
    let mean_f = pairs.iter().map(|p| p.0).sum::<f64>() / count;
    let mean_g = pairs.iter().map(|p| p.1).sum::<f64>() / count;
    let cov: f64 = pairs.iter().map(|(a, b)| (a - mean_f) * (b - mean_g)).sum();
    let var: f64 = pairs.iter().map(|(_, b)| (b - mean_g) * (b - mean_g)).sum();
    if var == 0.0 {
        return Err(Error::input("reference is constant; scale is undefined"));
    }
    let scale = cov / var;
    let offset = mean_f - scale * mean_g;
    let aligned = shifted
        .iter()
        .map(|v| scale * v.unwrap_or(0.0) + offset)
        .collect();
    Ok(AlignmentResult {
        shift,
        scale,
        offset,
        aligned,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryPoint {
    /// Block center in samples, `(q - 1/2) * block_size`.
    pub center_sample: f64,
    /// Share of all atoms used by this block.
    pub k_tilde: f64,
}

/// Normalized per-block atom counts placed at the block centers.
pub fn sparsity_summary<I>(counts: I, block_size: usize) -> Result<Vec<SummaryPoint>>
where
    I: IntoIterator<Item = usize>,
{
    let counts: Vec<usize> = counts.into_iter().collect();
    let total: usize = counts.iter().sum();
    if total == 0 {
        return Err(Error::input("model has no atoms"));
    }
    Ok(counts
        .iter()
        .enumerate()
        .map(|(q, &k)| SummaryPoint {
            center_sample: (q as f64 + 0.5) * block_size as f64,
            k_tilde: k as f64 / total as f64,
        })
        .collect())
}

pub fn decomposition_summary(
    decomps: &[AtomicDecomposition],
    block_size: usize,
) -> Result<Vec<SummaryPoint>> {
    sparsity_summary(
        decomps.iter().map(AtomicDecomposition::iterations),
        block_size,
    )
}

pub fn summary_to_csv(points: &[SummaryPoint]) -> String {
    let mut out = String::from("center_sample,k_tilde\n");
    for p in points {
        out.push_str(&format!("{:.1},{:.12}\n", p.center_sample, p.k_tilde));
    }
    out
}
