//! Reference implementations used to check the codec: dense linear algebra
//! through nalgebra and plain loops. Only the atom samples come from the
//! library.
#![allow(dead_code)]

use gwdc::dictionary::{Dictionary, DictionaryConfig};
use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut impl Rng) -> f64 {
    // Box-Muller
    let u: f64 = rng.gen_range(f64::EPSILON..1.0);
    let v: f64 = rng.gen();
    (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
}

pub fn noise(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| gaussian(rng)).collect()
}

pub fn unit(v: Vec<f64>) -> Vec<f64> {
    let n = norm(&v);
    v.into_iter().map(|x| x / n).collect()
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Every atom of `dict`, id order.
pub fn all_atoms(dict: &Dictionary) -> Vec<Vec<f64>> {
    (1..=dict.len() as u32)
        .map(|id| dict.atom(id).unwrap())
        .collect()
}

/// `count` atoms drawn without replacement from the full dictionary of the
/// given block size (trigonometric and pulse families mixed).
pub fn mixed_dictionary(rng: &mut impl Rng, block_size: usize, count: usize) -> Dictionary {
    let full = Dictionary::new(DictionaryConfig::with_redundancy(block_size, 2)).unwrap();
    let mut picks: Vec<usize> = sample(rng, full.len(), count).into_vec();
    picks.sort_unstable();
    let atoms: Vec<Vec<f64>> = picks
        .iter()
        .map(|&i| full.atom(i as u32 + 1).unwrap())
        .collect();
    Dictionary::from_atoms(block_size, &atoms).unwrap()
}

fn columns(atoms: &[&[f64]]) -> DMatrix<f64> {
    let rows = atoms[0].len();
    DMatrix::from_fn(rows, atoms.len(), |i, j| atoms[j][i])
}

/// Orthogonal projection of `f` onto the span of `atoms`, via SVD.
pub fn project(atoms: &[&[f64]], f: &[f64]) -> Vec<f64> {
    if atoms.is_empty() {
        return vec![0.0; f.len()];
    }
    let a = columns(atoms);
    let svd = a.clone().svd(true, true);
    let x = svd.solve(&DVector::from_column_slice(f), 1e-12).unwrap();
    (a * x).as_slice().to_vec()
}

pub fn residual_norm_after(atoms: &[&[f64]], f: &[f64]) -> f64 {
    let p = project(atoms, f);
    f.iter()
        .zip(&p)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

/// Brute-force next atom: the admissible candidate whose inclusion leaves the
/// smallest exact residual. A candidate is admissible when its component
/// outside the current span has squared norm at least `guard`. Residuals
/// within `tie` of the minimum count as ties, resolved to the smallest id.
pub fn brute_force_selection(
    atoms: &[Vec<f64>],
    selected: &[u32],
    f: &[f64],
    guard: f64,
    tie: f64,
) -> Option<u32> {
    let span: Vec<&[f64]> = selected
        .iter()
        .map(|&id| atoms[id as usize - 1].as_slice())
        .collect();
    let mut scores: Vec<(u32, f64)> = Vec::new();
    for (i, atom) in atoms.iter().enumerate() {
        let id = i as u32 + 1;
        if selected.contains(&id) {
            continue;
        }
        let p = project(&span, atom);
        let outside: f64 = atom.iter().zip(&p).map(|(a, b)| (a - b) * (a - b)).sum();
        if outside < guard {
            continue;
        }
        let mut with = span.clone();
        with.push(atom);
        let r = residual_norm_after(&with, f);
        scores.push((id, r * r));
    }
    let min = scores.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
    scores
        .iter()
        .filter(|s| s.1 <= min + tie)
        .map(|s| s.0)
        .min()
}

/// Least-squares coefficients on the given support from the normal
/// equations `A^T A c = A^T f`.
pub fn normal_equations(atoms: &[&[f64]], f: &[f64]) -> Vec<f64> {
    let a = columns(atoms);
    let gram = a.transpose() * &a;
    let rhs = a.transpose() * DVector::from_column_slice(f);
    let c = match gram.clone().cholesky() {
        Some(ch) => ch.solve(&rhs),
        None => gram
            .lu()
            .solve(&rhs)
            .expect("selected atoms are independent"),
    };
    c.as_slice().to_vec()
}

pub fn naive_snr(f: &[f64], fr: &[f64]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..f.len() {
        num += f[i] * f[i];
        den += (f[i] - fr[i]) * (f[i] - fr[i]);
    }
    10.0 * (num / den).log10()
}

/// Per-block snr, mean and `Q - 1` standard deviation by direct summation.
pub fn naive_block_stats(f: &[f64], fr: &[f64], block: usize) -> (Vec<f64>, f64, f64) {
    let mut values = Vec::new();
    let mut start = 0;
    while start < f.len() {
        let end = (start + block).min(f.len());
        values.push(naive_snr(&f[start..end], &fr[start..end]));
        start = end;
    }
    let q = values.len() as f64;
    let mut mean = 0.0;
    for v in &values {
        mean += v;
    }
    mean /= q;
    let mut var = 0.0;
    for v in &values {
        var += (v - mean) * (v - mean);
    }
    let std = (var / (q - 1.0)).sqrt();
    (values, mean, std)
}

/// Sum of tones with linearly rising frequencies.
pub fn multi_tone_chirp(n: usize, sample_rate: f64) -> Vec<f64> {
    let duration = n as f64 / sample_rate;
    let tones = [
        (200.0, 800.0, 0.4),
        (500.0, 1500.0, 0.25),
        (1200.0, 2400.0, 0.15),
    ];
    (0..n)
        .map(|i| {
            let t = i as f64 / sample_rate;
            tones
                .iter()
                .enumerate()
                .map(|(k, &(f0, f1, amp))| {
                    let phase =
                        2.0 * std::f64::consts::PI * (f0 * t + 0.5 * (f1 - f0) / duration * t * t)
                            + k as f64;
                    amp * phase.sin()
                })
                .sum()
        })
        .collect()
}

/// Smooth random test signal: a few random tones plus a little noise.
pub fn random_signal(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let tones: Vec<(f64, f64, f64)> = (0..rng.gen_range(1..6))
        .map(|_| {
            (
                rng.gen_range(0.001..0.45),
                rng.gen_range(0.05..1.0),
                rng.gen_range(0.0..6.3),
            )
        })
        .collect();
    let level = rng.gen_range(0.0..0.05);
    (0..n)
        .map(|i| {
            let s: f64 = tones
                .iter()
                .map(|&(fr, a, ph)| a * (2.0 * std::f64::consts::PI * fr * i as f64 + ph).sin())
                .sum();
            s + level * gaussian(rng)
        })
        .collect()
}
