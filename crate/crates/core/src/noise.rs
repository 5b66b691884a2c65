//! Stationary Gaussian colored noise with exponential autocorrelation
//! `⟨ωᵢ(t)ωⱼ(t′)⟩ = δᵢⱼ ω_s² exp(−|t − t′|/τ_s)`.
//!
//! Each component is synthesized on a periodic grid of `n_grid` points over
//! `[0, t_total)`: complex Gaussian Fourier coefficients with variance
//! `S(Ω_k)/t_total`, `S(Ω) = 2ω_s²τ_s/(1 + Ω²τ_s²)`, made conjugate
//! symmetric and summed back to the time domain. The zero-frequency
//! coefficient is set to zero, so every component has zero time average.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent f64 methods whenever std is linked
use num_traits::Float as _;
use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::invalid;
use crate::fft::{fft, Direction};
use crate::linalg::{embed, pauli_dot, HermitianOperator, Matrix, Spin};
use crate::{Error, Result, C64};

pub const MIN_GRID: usize = 256;
/// Minimum window length in correlation times.
pub const MIN_WINDOW_TAUS: f64 = 100.0;
/// Minimum grid points per correlation time.
pub const MIN_POINTS_PER_TAU: f64 = 20.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseParams {
    pub omega_s_sq: f64,
    pub tau_s: f64,
    pub t_total: f64,
    pub n_grid: usize,
    pub seed: u64,
    pub n_components: usize,
}

impl NoiseParams {
    pub fn new(
        omega_s_sq: f64,
        tau_s: f64,
        t_total: f64,
        n_grid: usize,
        seed: u64,
        n_components: usize,
    ) -> Result<Self> {
        let p = Self { omega_s_sq, tau_s, t_total, n_grid, seed, n_components };
        p.validate()?;
        Ok(p)
    }

    /// Smallest admissible window covering `[0, t_run]`.
    pub fn for_window(
        omega_s_sq: f64,
        tau_s: f64,
        t_run: f64,
        seed: u64,
        n_components: usize,
    ) -> Result<Self> {
        if !(tau_s > 0.0 && tau_s.is_finite()) || !(t_run >= 0.0 && t_run.is_finite()) {
            return Err(invalid!("tau_s must be positive and t_run non-negative"));
        }
        let t_total = t_run.max(MIN_WINDOW_TAUS * tau_s);
        let wanted = (MIN_POINTS_PER_TAU * t_total / tau_s).ceil();
        if wanted > (1u64 << 40) as f64 {
            return Err(invalid!("noise grid of {wanted} points is too large"));
        }
        let n_grid = (wanted as usize).max(MIN_GRID).next_power_of_two();
        Self::new(omega_s_sq, tau_s, t_total, n_grid, seed, n_components)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega_s_sq > 0.0 && self.omega_s_sq.is_finite()) {
            return Err(invalid!("omega_s_sq must be positive, got {}", self.omega_s_sq));
        }
        if !(self.tau_s > 0.0 && self.tau_s.is_finite()) {
            return Err(invalid!("tau_s must be positive, got {}", self.tau_s));
        }
        if !(self.t_total > 0.0 && self.t_total.is_finite()) {
            return Err(invalid!("t_total must be positive, got {}", self.t_total));
        }
        if self.n_grid < MIN_GRID || !self.n_grid.is_power_of_two() {
            return Err(invalid!("n_grid must be a power of two >= {MIN_GRID}, got {}", self.n_grid));
        }
        if self.t_total < MIN_WINDOW_TAUS * self.tau_s {
            return Err(invalid!("t_total must cover at least {MIN_WINDOW_TAUS} correlation times"));
        }
        if self.grid_spacing() > self.tau_s / MIN_POINTS_PER_TAU {
            return Err(invalid!("grid spacing must not exceed tau_s/{MIN_POINTS_PER_TAU}"));
        }
        if !matches!(self.n_components, 3 | 6) {
            return Err(invalid!("n_components must be 3 or 6, got {}", self.n_components));
        }
        Ok(())
    }

    pub fn grid_spacing(&self) -> f64 {
        self.t_total / self.n_grid as f64
    }

    /// `S(Ω) = 2ω_s²τ_s/(1 + Ω²τ_s²)`
    pub fn spectrum(&self, omega: f64) -> f64 {
        2.0 * self.omega_s_sq * self.tau_s / (1.0 + (omega * self.tau_s).powi(2))
    }
}

/// Sampled noise components on a uniform periodic grid.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseRealization {
    dt: f64,
    components: Vec<Vec<f64>>,
}

impl NoiseRealization {
    /// Wraps pre-sampled series (all the same nonzero length) with spacing `dt`.
    pub fn from_samples(dt: f64, components: Vec<Vec<f64>>) -> Result<Self> {
        let len = components.first().map_or(0, Vec::len);
        if !(dt > 0.0) || len == 0 || components.iter().any(|c| c.len() != len) {
            return Err(invalid!("need dt > 0 and equal-length non-empty components"));
        }
        Ok(Self { dt, components })
    }

    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    pub fn n_grid(&self) -> usize {
        self.components[0].len()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn t_total(&self) -> f64 {
        self.dt * self.n_grid() as f64
    }

    pub fn component(&self, index: usize) -> Option<&[f64]> {
        self.components.get(index).map(Vec::as_slice)
    }

    /// Linear interpolation at `t ∈ [0, t_total]`; the last interval wraps
    /// to the first sample.
    pub fn value(&self, index: usize, t: f64) -> Result<f64> {
        let series = self
            .components
            .get(index)
            .ok_or_else(|| invalid!("noise component {index} does not exist"))?;
        let t_max = self.t_total();
        if !(t >= 0.0 && t <= t_max) {
            return Err(Error::OutOfRange { t, t_max });
        }
        let n = series.len();
        let x = t / self.dt;
        let i = (x.floor() as usize).min(n - 1);
        let frac = x - i as f64;
        Ok(series[i] * (1.0 - frac) + series[(i + 1) % n] * frac)
    }

    /// `[ω_x, ω_y, ω_z]` from components `offset..offset + 3` at time `t`.
    pub fn vector(&self, offset: usize, t: f64) -> Result<[f64; 3]> {
        Ok([self.value(offset, t)?, self.value(offset + 1, t)?, self.value(offset + 2, t)?])
    }
}

/// Deterministic for a fixed seed; component `c` draws from stream `c`.
pub fn synthesize(params: &NoiseParams) -> Result<NoiseRealization> {
    params.validate()?;
    let n = params.n_grid;
    let t_total = params.t_total;
    let components = (0..params.n_components)
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
            rng.set_stream(c as u64);
            let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };
            let mut coeffs = vec![C64::new(0.0, 0.0); n];
            for k in 1..n / 2 {
                let omega = 2.0 * core::f64::consts::PI * k as f64 / t_total;
                let scale = (params.spectrum(omega) / (2.0 * t_total)).sqrt();
                let c = C64::new(normal(), normal()) * scale;
                coeffs[k] = c;
                coeffs[n - k] = c.conj();
            }
            let nyquist = core::f64::consts::PI * n as f64 / t_total;
            coeffs[n / 2] = C64::new(normal() * (params.spectrum(nyquist) / t_total).sqrt(), 0.0);
            fft(&mut coeffs, Direction::Inverse)?;
            Ok(coeffs.iter().map(|c| c.re).collect())
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    NoiseRealization::from_samples(params.grid_spacing(), components)
}

/// Unbiased sample autocovariance of one component at the grid lag nearest
/// `lag`, for `0 ≤ lag ≤ t_total/4`.
pub fn autocovariance(r: &NoiseRealization, component: usize, lag: f64) -> Result<f64> {
    let series = r
        .component(component)
        .ok_or_else(|| invalid!("noise component {component} does not exist"))?;
    cross_covariance(r, series, series, lag)
}

/// Unbiased sample covariance `⟨x(t) y(t + lag)⟩` between two components.
pub fn cross_covariance_of(r: &NoiseRealization, i: usize, j: usize, lag: f64) -> Result<f64> {
    let x = r.component(i).ok_or_else(|| invalid!("noise component {i} does not exist"))?;
    let y = r.component(j).ok_or_else(|| invalid!("noise component {j} does not exist"))?;
    cross_covariance(r, x, y, lag)
}

fn cross_covariance(r: &NoiseRealization, x: &[f64], y: &[f64], lag: f64) -> Result<f64> {
    if !(lag >= 0.0 && lag <= r.t_total() / 4.0) {
        return Err(invalid!("lag {lag} outside [0, t_total/4]"));
    }
    let n = x.len();
    let m = libm::round(lag / r.dt()) as usize;
    if m + 2 > n {
        return Err(invalid!("too few samples for lag {lag}"));
    }
    let count = n - m;
    let mean_x = x[..count].iter().sum::<f64>() / count as f64;
    let mean_y = y[m..].iter().sum::<f64>() / count as f64;
    let sum: f64 = x[..count]
        .iter()
        .zip(&y[m..])
        .map(|(a, b)| (a - mean_x) * (b - mean_y))
        .sum();
    Ok(sum / (count - 1) as f64)
}

/// Which noise components drive which spin.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Coupling {
    /// First of three components applied to spin 1 (or the single spin).
    pub spin1: Option<usize>,
    /// First of three components applied to spin 2.
    pub spin2: Option<usize>,
}

impl Coupling {
    pub const ONE_SPIN: Coupling = Coupling { spin1: Some(0), spin2: None };
    pub const BOTH: Coupling = Coupling { spin1: Some(0), spin2: Some(3) };
    pub const SPIN1_ONLY: Coupling = Coupling { spin1: Some(0), spin2: None };
    pub const SPIN2_ONLY: Coupling = Coupling { spin1: None, spin2: Some(3) };
}

/// `base + ω(t)·σ` on every coupled spin. For four-level systems the
/// single-spin terms are embedded with the Kronecker product.
pub fn noisy_hamiltonian<const N: usize>(
    base: &HermitianOperator<N>,
    r: &NoiseRealization,
    t: f64,
    coupling: &Coupling,
) -> Result<HermitianOperator<N>> {
    let mut out = *base.matrix();
    match N {
        2 => {
            if coupling.spin2.is_some() {
                return Err(invalid!("one-spin system has no second spin to couple"));
            }
            if let Some(offset) = coupling.spin1 {
                let term = pauli_dot(r.vector(offset, t)?);
                out = Matrix::from_fn(|i, j| out[(i, j)] + term[(i, j)]);
            }
        }
        4 => {
            for (offset, spin) in [(coupling.spin1, Spin::One), (coupling.spin2, Spin::Two)] {
                let Some(offset) = offset else { continue };
                let term = embed(&pauli_dot(r.vector(offset, t)?), spin);
                out = Matrix::from_fn(|i, j| out[(i, j)] + term[(i, j)]);
            }
        }
        _ => return Err(invalid!("noise coupling supports dimension 2 or 4, got {N}")),
    }
    Ok(HermitianOperator::new_unchecked(out))
}
