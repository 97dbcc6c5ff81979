//! Closed-loop choice of pursuit tolerance and quantization step.
//!
//! A single quality parameter `g` (dB) sets every block's residual tolerance
//! to `||f_q|| * 10^(-g/20)`. Starting from `g = target + margin`, the step
//! `delta` is bisected on a log scale until the decoded metric lands in
//! `[target, target + tolerance]`. If even the finest step misses the target,
//! `g` is raised and the pursuit rerun.

use crate::error::{Error, Result};
use crate::metrics::{block_snr_stats, snr};
use crate::pursuit::StopRule;

use super::{Encoded, Encoder};

/// Highest quality parameter the search will ask the pursuit for.
pub const MAX_QUALITY_DB: f64 = 300.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateTarget {
    /// Match the SNR of the whole decoded signal.
    MatchSnr { target_db: f64, tolerance_db: f64 },
    /// Match the mean of the per-block snr values.
    MatchMeanSnr { target_db: f64, tolerance_db: f64 },
    /// Single pass with the given stop rule; `delta` defaults to the finest
    /// step the coder admits.
    Fixed { stop: StopRule, delta: Option<f64> },
}

impl RateTarget {
    fn window(&self) -> Option<(f64, f64)> {
        match *self {
            RateTarget::MatchSnr {
                target_db,
                tolerance_db,
            }
            | RateTarget::MatchMeanSnr {
                target_db,
                tolerance_db,
            } => Some((target_db, tolerance_db)),
            RateTarget::Fixed { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    /// Initial headroom of the pursuit quality over the target, and the
    /// increment applied when the target is missed.
    pub margin_db: f64,
    /// Budget of metric evaluations.
    pub max_steps: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            margin_db: 1.0,
            max_steps: 40,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RateOutcome {
    pub encoded: Encoded,
    /// Pursuit quality parameter `g`; `None` in fixed mode.
    pub quality_db: Option<f64>,
    pub delta: f64,
    /// Value of the matched metric on the decoded signal.
    pub achieved_db: f64,
    pub converged: bool,
    pub steps: usize,
}

#[derive(Debug, Clone, Copy)]
struct Trial {
    quality_db: f64,
    delta: f64,
    metric: f64,
}

/// Encodes `signal` so that the decoded quality meets `target`.
///
/// Non-convergence is not an error: the closest result found is returned
/// with `converged == false`.
pub fn rate_control_search(
    encoder: &Encoder,
    signal: &[f64],
    sample_rate: u32,
    target: &RateTarget,
    options: &SearchOptions,
) -> Result<RateOutcome> {
    if let RateTarget::Fixed { stop, delta } = *target {
        let encoded = encoder.encode(signal, sample_rate, &stop, delta)?;
        let achieved_db = snr(signal, &encoded.reconstruction).unwrap_or(f64::INFINITY);
        return Ok(RateOutcome {
            delta: encoded.delta,
            encoded,
            quality_db: None,
            achieved_db,
            converged: true,
            steps: 1,
        });
    }
    let (target_db, tolerance_db) = target.window().expect("match modes carry a window");
    if !(target_db > 0.0 && target_db.is_finite()) {
        return Err(Error::config(format!(
            "target {target_db} dB must be positive"
        )));
    }
    if !(tolerance_db >= 0.0) || !(options.margin_db > 0.0) {
        return Err(Error::config(
            "tolerance must be non-negative and margin positive",
        ));
    }
    if signal.iter().all(|&x| x == 0.0) {
        // Nothing to approximate: the header-only file is exact.
        let stop = StopRule::block_snr_db(target_db);
        let encoded = encoder.encode(signal, sample_rate, &stop, None)?;
        return Ok(RateOutcome {
            delta: encoded.delta,
            encoded,
            quality_db: Some(target_db),
            achieved_db: f64::INFINITY,
            converged: true,
            steps: 0,
        });
    }

    let block_size = encoder.block_size();
    let measure = |reconstruction: &[f64]| -> Result<f64> {
        match target {
            RateTarget::MatchSnr { .. } => snr(signal, reconstruction),
            _ => Ok(block_snr_stats(signal, reconstruction, block_size)?.mean),
        }
    };
    let in_window = |m: f64| m >= target_db && m <= target_db + tolerance_db;

    let mut steps = 0usize;
    let mut best: Option<Trial> = None;
    let keep = |t: Trial, best: &mut Option<Trial>| {
        let better = match best {
            None => true,
            Some(b) => match (b.metric >= target_db, t.metric >= target_db) {
                (true, true) => t.metric < b.metric,
                (false, true) => true,
                (true, false) => false,
                (false, false) => t.metric > b.metric,
            },
        };
        if better {
            *best = Some(t);
        }
    };

    let mut quality = (target_db + options.margin_db).min(MAX_QUALITY_DB);
    let mut found: Option<(Trial, super::Approximation)> = None;
    'quality: while steps < options.max_steps {
        let approx = encoder.approximate(signal, &StopRule::block_snr_db(quality))?;
        let finest = encoder.default_delta(&approx);
        let eval = |delta: f64, steps: &mut usize| -> Result<Trial> {
            *steps += 1;
            let (_, rec) = encoder.quantize(&approx, delta)?;
            Ok(Trial {
                quality_db: quality,
                delta,
                metric: measure(&rec)?,
            })
        };

        let first = eval(finest, &mut steps)?;
        keep(first, &mut best);
        if first.metric < target_db {
            if quality >= MAX_QUALITY_DB {
                break;
            }
            quality = (quality + options.margin_db).min(MAX_QUALITY_DB);
            continue;
        }
        if in_window(first.metric) {
            found = Some((first, approx));
            break;
        }

        // `fine` overshoots the window, `coarse` undershoots it.
        let mut fine = first;
        let mut coarse: Option<Trial> = None;
        while steps < options.max_steps {
            let delta = match coarse {
                None => fine.delta * 4.0,
                Some(c) => (fine.delta * c.delta).sqrt(),
            };
            let t = eval(delta, &mut steps)?;
            keep(t, &mut best);
            if in_window(t.metric) {
                found = Some((t, approx));
                break 'quality;
            }
            if t.metric > target_db + tolerance_db {
                fine = t;
            } else {
                coarse = Some(t);
            }
        }
        break;
    }

    let (trial, converged, approx) = match found {
        Some((t, approx)) => (t, true, approx),
        None => {
            let t = best.expect("at least one trial was evaluated");
            log::warn!(
                "rate control did not converge after {steps} steps; best {:.3} dB for target {target_db} dB",
                t.metric
            );
            let approx = encoder.approximate(signal, &StopRule::block_snr_db(t.quality_db))?;
            (t, false, approx)
        }
    };
    let encoded = encoder.encode_approximation(&approx, sample_rate, Some(trial.delta))?;
    Ok(RateOutcome {
        delta: trial.delta,
        encoded,
        quality_db: Some(trial.quality_db),
        achieved_db: trial.metric,
        converged,
        steps,
    })
}
