//! Rotating-frame Hamiltonian of a spin `a` coupled to a driven spin `b`.
//!
//! In the basis `|++⟩, |+−⟩, |−+⟩, |−−⟩` (spin `a` first),
//!
//! ```text
//!      ⎡ ω_a+Δ   ω₁      g       0     ⎤
//! Ω = ½⎢ ω₁      ω_a−Δ   0      −g     ⎥
//!      ⎢ g       0      −ω_a+Δ   ω₁    ⎥
//!      ⎣ 0      −g       ω₁     −ω_a−Δ ⎦
//! ```

#[allow(unused_imports)] // shadowed by inherent f64 methods whenever std is linked
use num_traits::Float as _;

use crate::error::invalid;
use crate::linalg::{HermitianOperator, Matrix};
use crate::{Result, C64};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DrivenParams {
    pub omega_a: f64,
    pub omega_1: f64,
    /// `−Δ` is the detuning of the drive.
    pub delta: f64,
    pub g: f64,
}

impl DrivenParams {
    pub fn new(omega_a: f64, omega_1: f64, delta: f64, g: f64) -> Result<Self> {
        if ![omega_a, omega_1, delta, g].iter().all(|v| v.is_finite()) {
            return Err(invalid!("driven-system parameters must be finite"));
        }
        Ok(Self { omega_a, omega_1, delta, g })
    }

    /// `ω₁ = −Δ = ω_a/√2`, which satisfies `ω_a = ω_R`.
    pub fn matched(omega_a: f64, g: f64) -> Result<Self> {
        let w1 = omega_a * core::f64::consts::FRAC_1_SQRT_2;
        Self::new(omega_a, w1, -w1, g)
    }

    pub fn is_hartmann_hahn_matched(&self, tol: f64) -> bool {
        hartmann_hahn_mismatch(self).abs() <= tol * self.omega_a.abs().max(1.0)
    }
}

pub fn omega_matrix(p: &DrivenParams) -> HermitianOperator<4> {
    let r = |v: f64| C64::new(v / 2.0, 0.0);
    let z = C64::new(0.0, 0.0);
    let (wa, d, w1, g) = (p.omega_a, p.delta, p.omega_1, p.g);
    HermitianOperator::new_unchecked(Matrix([
        [r(wa + d), r(w1), r(g), z],
        [r(w1), r(wa - d), z, r(-g)],
        [r(g), z, r(-wa + d), r(w1)],
        [z, r(-g), r(w1), r(-wa - d)],
    ]))
}

/// `ω_R = √(ω₁² + Δ²)`
pub fn rabi_frequency(p: &DrivenParams) -> f64 {
    p.omega_1.hypot(p.delta)
}

/// `ω_a − ω_R`
pub fn hartmann_hahn_mismatch(p: &DrivenParams) -> f64 {
    p.omega_a - rabi_frequency(p)
}
