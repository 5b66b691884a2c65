//! Heuristic detection of a sustained oscillation in a sampled series.
//!
//! After dropping a transient, the remainder is split into two halves. A
//! limit cycle is reported when both halves have comparable peak-to-peak
//! amplitude above a floor and the same dominant spectral bin.

use alloc::vec::Vec;

use crate::error::invalid;
use crate::fft::{fft, pow2_floor, Direction};
use crate::{Result, C64};

pub const MIN_SAMPLES: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LimitCycleConfig {
    /// Leading fraction of the series treated as transient.
    pub transient_fraction: f64,
    /// Minimum peak-to-peak amplitude.
    pub amplitude_floor: f64,
    /// Allowed relative difference of the two half-window amplitudes.
    pub amplitude_tolerance: f64,
    /// Allowed difference of the dominant bins, in bins.
    pub bin_tolerance: usize,
    /// Cycles each half window must contain.
    pub min_cycles: f64,
}

impl Default for LimitCycleConfig {
    fn default() -> Self {
        Self {
            transient_fraction: 0.5,
            amplitude_floor: 0.05,
            amplitude_tolerance: 0.2,
            bin_tolerance: 1,
            min_cycles: 2.0,
        }
    }
}

impl LimitCycleConfig {
    pub fn with_transient_fraction(mut self, f: f64) -> Self {
        self.transient_fraction = f;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LimitCycleReport {
    pub detected: bool,
    /// Oscillation period in the time units of `dt`; `NaN` if none found.
    pub period: f64,
    /// Peak-to-peak amplitude over the post-transient window.
    pub amplitude: f64,
    /// Time at which the analysed window starts.
    pub transient_end: f64,
    /// Half-window amplitudes.
    pub half_amplitudes: [f64; 2],
    /// Dominant nonzero bin of each half (after truncating to a power of two).
    pub dominant_bins: [usize; 2],
}

fn peak_to_peak(x: &[f64]) -> f64 {
    let (lo, hi) = x
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    hi - lo
}

/// Largest nonzero-frequency bin of the mean-removed power spectrum of the
/// leading power-of-two prefix; returns `(bin, length)`.
fn dominant_bin(x: &[f64]) -> Result<(usize, usize)> {
    let n = pow2_floor(x.len());
    let mean = x[..n].iter().sum::<f64>() / n as f64;
    let mut buf: Vec<C64> = x[..n].iter().map(|v| C64::new(v - mean, 0.0)).collect();
    fft(&mut buf, Direction::Forward)?;
    let bin = (1..=n / 2)
        .max_by(|&i, &j| buf[i].norm_sqr().total_cmp(&buf[j].norm_sqr()))
        .unwrap_or(0);
    Ok((bin, n))
}

/// Mean spacing of upward mean crossings, in samples.
fn crossing_period(x: &[f64]) -> Option<f64> {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    let mut crossings = Vec::new();
    for i in 1..x.len() {
        let (a, b) = (x[i - 1] - mean, x[i] - mean);
        if a < 0.0 && b >= 0.0 {
            crossings.push(i as f64 - 1.0 + a / (a - b));
        }
    }
    if crossings.len() < 3 {
        return None;
    }
    Some((crossings[crossings.len() - 1] - crossings[0]) / (crossings.len() - 1) as f64)
}

/// Requires at least [`MIN_SAMPLES`] samples after the transient.
pub fn detect_limit_cycle(series: &[f64], dt: f64, cfg: &LimitCycleConfig) -> Result<LimitCycleReport> {
    if !(dt > 0.0) {
        return Err(invalid!("dt must be positive"));
    }
    if !(0.0..1.0).contains(&cfg.transient_fraction) {
        return Err(invalid!("transient fraction must lie in [0, 1)"));
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(invalid!("series contains non-finite values"));
    }
    let start = libm::ceil(series.len() as f64 * cfg.transient_fraction) as usize;
    let window = &series[start.min(series.len())..];
    if window.len() < MIN_SAMPLES {
        return Err(invalid!(
            "need at least {MIN_SAMPLES} post-transient samples, got {}",
            window.len()
        ));
    }
    let (first, second) = window.split_at(window.len() / 2);
    let half_amplitudes = [peak_to_peak(first), peak_to_peak(second)];
    let (bin1, n1) = dominant_bin(first)?;
    let (bin2, _) = dominant_bin(second)?;
    let amplitude = peak_to_peak(window);

    let amp_max = half_amplitudes[0].max(half_amplitudes[1]);
    let amp_ok = half_amplitudes.iter().all(|&a| a > cfg.amplitude_floor)
        && (half_amplitudes[0] - half_amplitudes[1]).abs() <= cfg.amplitude_tolerance * amp_max;
    let bins_ok = bin1.abs_diff(bin2) <= cfg.bin_tolerance && (bin1.min(bin2) as f64) >= cfg.min_cycles;

    let fft_period = if bin1 > 0 { n1 as f64 / bin1 as f64 } else { f64::NAN };
    let period_samples = crossing_period(window)
        .filter(|p| !fft_period.is_finite() || (p / fft_period - 1.0).abs() < 0.5)
        .unwrap_or(fft_period);
    let detected = amp_ok && bins_ok && period_samples.is_finite();
    Ok(LimitCycleReport {
        detected,
        period: period_samples * dt,
        amplitude,
        transient_end: start as f64 * dt,
        half_amplitudes,
        dominant_bins: [bin1, bin2],
    })
}
