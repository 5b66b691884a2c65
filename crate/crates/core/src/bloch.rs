//! One-spin reduced dynamics on the Bloch sphere.
//!
//! With `H = ω·σ` and a fixed target `|Ψ⟩` equal to the `+1` eigenvector of
//! `ŝ·σ`, the Bloch vector `k = ⟨σ⟩` obeys
//!
//! ```text
//! dk/dt = 2ω×k + γ_D [(ŝ·k)k − ŝ] / √((1 − ŝ·k)/2)
//! ```
//!
//! which keeps `|k| = 1` and, for strong damping, attracts `k` to `−ŝ`.

use alloc::vec::Vec;
use core::ops::{Add, Mul, Neg, Sub};

#[allow(unused_imports)] // shadowed by inherent f64 methods whenever std is linked
use num_traits::Float as _;

use crate::error::invalid;
use crate::linalg::{expectation, sigma_x, sigma_y, sigma_z, Ket, StateVector};
use crate::ode::{rk4_step, StepSchedule};
use crate::{Error, Result, ALGEBRAIC_TOL, C64};

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Vec3(pub [f64; 3]);

impl Vec3 {
    pub const X: Vec3 = Vec3([1.0, 0.0, 0.0]);
    pub const Y: Vec3 = Vec3([0.0, 1.0, 0.0]);
    pub const Z: Vec3 = Vec3([0.0, 0.0, 1.0]);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self([x, y, z])
    }

    pub fn x(&self) -> f64 {
        self.0[0]
    }

    pub fn y(&self) -> f64 {
        self.0[1]
    }

    pub fn z(&self) -> f64 {
        self.0[2]
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.0[0] * other.0[0] + self.0[1] * other.0[1] + self.0[2] * other.0[2]
    }

    pub fn cross(&self, other: &Self) -> Self {
        let [a1, a2, a3] = self.0;
        let [b1, b2, b3] = other.0;
        Self([a2 * b3 - a3 * b2, a3 * b1 - a1 * b3, a1 * b2 - a2 * b1])
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn normalized(&self) -> Option<Self> {
        let n = self.norm();
        (n > 0.0 && n.is_finite()).then(|| *self * n.recip())
    }

    /// Angle between two nonzero vectors, in radians.
    pub fn angle_to(&self, other: &Self) -> f64 {
        // atan2 form stays accurate for nearly (anti)parallel vectors.
        libm::atan2(self.cross(other).norm(), self.dot(other))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl Add for Vec3 {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        Self(core::array::from_fn(|i| self.0[i] + rhs.0[i]))
    }
}

impl Sub for Vec3 {
    type Output = Self;

    fn sub(self, rhs: Self) -> Self {
        Self(core::array::from_fn(|i| self.0[i] - rhs.0[i]))
    }
}

impl Neg for Vec3 {
    type Output = Self;

    fn neg(self) -> Self {
        Self(self.0.map(|v| -v))
    }
}

impl Mul<f64> for Vec3 {
    type Output = Self;

    fn mul(self, rhs: f64) -> Self {
        Self(self.0.map(|v| v * rhs))
    }
}

/// Bloch vector of a one-spin state, `|k| ≤ 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlochVector(Vec3);

impl BlochVector {
    const NORM_SLACK: f64 = 1e-10;

    pub fn new(k: Vec3) -> Result<Self> {
        if !k.is_finite() || k.norm() > 1.0 + Self::NORM_SLACK {
            return Err(invalid!("Bloch vector must satisfy |k| <= 1, got {:?}", k.0));
        }
        Ok(Self(k))
    }

    pub fn vector(&self) -> Vec3 {
        self.0
    }

    pub fn is_pure(&self) -> bool {
        (self.0.norm() - 1.0).abs() <= Self::NORM_SLACK
    }
}

impl core::ops::Deref for BlochVector {
    type Target = Vec3;

    fn deref(&self) -> &Vec3 {
        &self.0
    }
}

/// `kᵢ = ⟨ψ|σᵢ|ψ⟩`
pub fn bloch_from_state(psi: &StateVector<2>) -> BlochVector {
    BlochVector(bloch_components(psi.as_ket()))
}

/// Bloch components of a possibly unnormalized ket, divided by its norm.
pub fn bloch_components(psi: &Ket<2>) -> Vec3 {
    let [a, b] = psi.0;
    let cross = a.conj() * b;
    let n = psi.norm_sqr();
    Vec3([
        2.0 * cross.re / n,
        2.0 * cross.im / n,
        (a.norm_sqr() - b.norm_sqr()) / n,
    ])
}

/// The pure state with Bloch vector `k`: `(cos θ/2, e^{iφ} sin θ/2)`.
pub fn state_from_bloch(k: &Vec3) -> Result<StateVector<2>> {
    if !k.is_finite() || (k.norm() - 1.0).abs() > ALGEBRAIC_TOL {
        return Err(invalid!("pure-state Bloch vector must have |k| = 1, got {}", k.norm()));
    }
    let theta = libm::acos(k.z().clamp(-1.0, 1.0));
    let phi = libm::atan2(k.y(), k.x());
    StateVector::new([
        C64::new(libm::cos(theta / 2.0), 0.0),
        C64::from_polar(libm::sin(theta / 2.0), phi),
    ])
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OneSpinParams {
    /// Field vector `ω` in `H = ω·σ` (angular frequency).
    pub omega: Vec3,
    /// Unit vector whose `+1` eigenstate is the fixed target.
    pub s_hat: Vec3,
    pub gamma_d: f64,
}

impl OneSpinParams {
    pub fn new(omega: Vec3, s_hat: Vec3, gamma_d: f64) -> Result<Self> {
        if !omega.is_finite() {
            return Err(invalid!("omega must be finite"));
        }
        if !s_hat.is_finite() || (s_hat.norm() - 1.0).abs() > ALGEBRAIC_TOL {
            return Err(invalid!("s_hat must be a unit vector, |s_hat| = {}", s_hat.norm()));
        }
        if !(gamma_d >= 0.0 && gamma_d.is_finite()) {
            return Err(invalid!("gamma_d must be non-negative, got {gamma_d}"));
        }
        Ok(Self { omega, s_hat, gamma_d })
    }

    /// The normalized `+1` eigenvector of `ŝ·σ`.
    pub fn target(&self) -> Ket<2> {
        *state_from_bloch(&self.s_hat).expect("validated unit vector").as_ket()
    }
}

/// `2ω×k + γ_D[(ŝ·k)k − ŝ]/√((1 − ŝ·k)/2)`.
///
/// Fails with [`Error::Singular`] when `ŝ·k ≥ 1 − guard_eps`.
pub fn bloch_rhs(k: &Vec3, p: &OneSpinParams, guard_eps: f64) -> Result<Vec3> {
    let precession = p.omega.cross(k) * 2.0;
    if p.gamma_d == 0.0 {
        return Ok(precession);
    }
    let sk = p.s_hat.dot(k);
    if sk >= 1.0 - guard_eps {
        return Err(Error::Singular(alloc::format!("s_hat·k = {sk} reaches 1")));
    }
    let pull = (*k * sk - p.s_hat) * (p.gamma_d / ((1.0 - sk) / 2.0).sqrt());
    Ok(precession + pull)
}

/// As [`bloch_rhs`], but drops the nonlinear term at the singular point.
fn bloch_rhs_guarded(k: &Vec3, p: &OneSpinParams, guard_eps: f64) -> (Vec3, bool) {
    match bloch_rhs(k, p, guard_eps) {
        Ok(v) => (v, false),
        Err(_) => (p.omega.cross(k) * 2.0, true),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlochTrajectory {
    pub times: Vec<f64>,
    pub ks: Vec<Vec3>,
    pub guarded_steps: usize,
}

/// RK4 integration of [`bloch_rhs`], recording every `stride`-th step and
/// the final step.
pub fn integrate_bloch(
    k0: &Vec3,
    p: &OneSpinParams,
    dt: f64,
    t_final: f64,
    stride: usize,
    guard_eps: f64,
) -> Result<BlochTrajectory> {
    if !(dt > 0.0) || !(t_final >= 0.0) || stride == 0 {
        return Err(invalid!("need dt > 0, t_final >= 0 and stride >= 1"));
    }
    let schedule = StepSchedule::new(dt, t_final);
    let mut k = *k0;
    let mut out = BlochTrajectory { times: alloc::vec![0.0], ks: alloc::vec![k], guarded_steps: 0 };
    for step in 0..schedule.n_steps {
        let mut guarded = false;
        let [next] = rk4_step(schedule.time(step), &[k], schedule.step_len(step), |_, y| {
            let (v, g) = bloch_rhs_guarded(&y[0], p, guard_eps);
            guarded |= g;
            Ok::<_, Error>([v])
        })?;
        k = next;
        let t = schedule.time(step + 1);
        if !k.is_finite() {
            return Err(Error::Diverged { t });
        }
        if guarded {
            out.guarded_steps += 1;
        }
        if (step + 1) % stride == 0 || step + 1 == schedule.n_steps {
            out.times.push(t);
            out.ks.push(k);
        }
    }
    Ok(out)
}

/// A stationary point reached by integrating forward in time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RelaxedPoint {
    pub k: Vec3,
    /// `|dk/dt|` at the returned point.
    pub residual: f64,
    pub time: f64,
    pub converged: bool,
}

/// Integrates from `k0` until `|dk/dt| < tol` or `max_time` elapses.
pub fn relax_fixed_point(
    k0: &Vec3,
    p: &OneSpinParams,
    dt: f64,
    max_time: f64,
    tol: f64,
    guard_eps: f64,
) -> Result<RelaxedPoint> {
    if !(dt > 0.0) || !(max_time > 0.0) || !(tol > 0.0) {
        return Err(invalid!("need dt > 0, max_time > 0 and tol > 0"));
    }
    let mut k = *k0;
    let mut t = 0.0;
    let n_steps = libm::ceil(max_time / dt) as usize;
    for step in 0..=n_steps {
        let residual = bloch_rhs_guarded(&k, p, guard_eps).0.norm();
        if residual < tol || step == n_steps {
            return Ok(RelaxedPoint { k, residual, time: t, converged: residual < tol });
        }
        let [next] = rk4_step(t, &[k], dt, |_, y| Ok::<_, Error>([bloch_rhs_guarded(&y[0], p, guard_eps).0]))?;
        k = next;
        t += dt;
        if !k.is_finite() {
            return Err(Error::Diverged { t });
        }
    }
    unreachable!("loop returns on its last iteration")
}

/// First-order fixed points for `γ_D ≪ |ω|`:
/// `±(ω̂ + (γ_D/|ω|)(2(1 − ŝ·ω̂))^{−1/2} ŝ×ω̂)`.
///
/// The returned vectors are the uncorrected expansion and may exceed unit
/// length by a second-order amount.
pub fn fixed_point_weak(p: &OneSpinParams) -> Result<[Vec3; 2]> {
    let omega_norm = p.omega.norm();
    let w = p
        .omega
        .normalized()
        .ok_or_else(|| Error::DegenerateGeometry("omega vanishes".into()))?;
    let gap = 1.0 - p.s_hat.dot(&w);
    if gap <= ALGEBRAIC_TOL {
        return Err(Error::DegenerateGeometry("s_hat parallel to omega".into()));
    }
    let shift = p.s_hat.cross(&w) * ((p.gamma_d / omega_norm) / (2.0 * gap).sqrt());
    let point = w + shift;
    Ok([point, -point])
}

/// First-order fixed point for `γ_D ≫ |ω|`: `−ŝ + 2(|ω|/γ_D) ŝ×ω̂`.
pub fn fixed_point_strong(p: &OneSpinParams) -> Result<Vec3> {
    if p.gamma_d == 0.0 {
        return Err(invalid!("strong-damping fixed point needs gamma_d > 0"));
    }
    let omega_norm = p.omega.norm();
    let Some(w) = p.omega.normalized() else {
        return Ok(-p.s_hat);
    };
    Ok(-p.s_hat + p.s_hat.cross(&w) * (2.0 * omega_norm / p.gamma_d))
}

/// Parameters of the isotropic fluctuating field
/// `⟨ωᵢ(t)ωⱼ(t′)⟩ = δᵢⱼ ω_s² exp(−|t − t′|/τ_s)` on top of a static `ω₀ẑ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThermalParams {
    pub omega_0: f64,
    pub omega_s_sq: f64,
    pub tau_s: f64,
}

impl ThermalParams {
    pub fn new(omega_0: f64, omega_s_sq: f64, tau_s: f64) -> Result<Self> {
        if !(omega_s_sq > 0.0 && omega_s_sq.is_finite()) || !(tau_s > 0.0 && tau_s.is_finite()) {
            return Err(invalid!("omega_s_sq and tau_s must be positive"));
        }
        if !omega_0.is_finite() {
            return Err(invalid!("omega_0 must be finite"));
        }
        Ok(Self { omega_0, omega_s_sq, tau_s })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RelaxationRates {
    /// `1/T_s1`
    pub longitudinal: f64,
    /// `1/T_s2`
    pub transverse: f64,
}

impl RelaxationRates {
    pub fn t1(&self) -> f64 {
        self.longitudinal.recip()
    }
}

/// `1/T_s1 = 2ω_s²τ_s/(1 + ω₀²τ_s²)`, `1/T_s2 = 1/(2T_s1) + ω_s²τ_s`.
pub fn relaxation_rates(tp: &ThermalParams) -> RelaxationRates {
    let ws2_tau = tp.omega_s_sq * tp.tau_s;
    let longitudinal = 2.0 * ws2_tau / (1.0 + (tp.omega_0 * tp.tau_s).powi(2));
    RelaxationRates { longitudinal, transverse: 0.5 * longitudinal + ws2_tau }
}

/// Steady-state `k∥ = −1 + 1/(1 + 2γ_D T_s1)`.
pub fn thermal_steady_state(gamma_d: f64, t_s1: f64) -> f64 {
    -1.0 + 1.0 / (1.0 + 2.0 * gamma_d * t_s1)
}

/// Effective temperature in units of `ℏω₀/k_B`:
/// `1 / (2 atanh(1 − 1/(1 + 2γ_D T_s1)))`. Positive infinity when
/// `γ_D T_s1 = 0`.
pub fn reduced_temperature(gamma_d: f64, t_s1: f64) -> f64 {
    let polarization = -thermal_steady_state(gamma_d, t_s1);
    let denom = 2.0 * libm::atanh(polarization);
    if denom == 0.0 {
        f64::INFINITY
    } else {
        denom.recip()
    }
}

/// Effective temperature expressed as `k_B T_eff / ℏ` (an angular
/// frequency), i.e. `ω₀ ·` [`reduced_temperature`].
pub fn effective_temperature(omega_0: f64, gamma_d: f64, t_s1: f64) -> f64 {
    omega_0 * reduced_temperature(gamma_d, t_s1)
}

/// `dk∥/dt` for `ω̂ = ẑ` with an added longitudinal relaxation `−k∥/T_s1`:
///
/// ```text
/// γ_D[(s_x k_x + s_y k_y)k_z + s_z(k_z² − 1)] / √((1 − ŝ·k)/2) − k_z/T_s1
/// ```
///
/// `t_s1 = ∞` disables the relaxation term.
pub fn augmented_kpar_rhs(k: &Vec3, p: &OneSpinParams, t_s1: f64, guard_eps: f64) -> Result<f64> {
    let transverse = (p.omega.x().powi(2) + p.omega.y().powi(2)).sqrt();
    if transverse > ALGEBRAIC_TOL * p.omega.norm().max(1.0) {
        return Err(invalid!("longitudinal equation requires omega along z"));
    }
    if !(t_s1 > 0.0) {
        return Err(invalid!("T_s1 must be positive, got {t_s1}"));
    }
    let relaxation = -k.z() / t_s1;
    if p.gamma_d == 0.0 {
        return Ok(relaxation);
    }
    let s = p.s_hat;
    let sk = s.dot(k);
    if sk >= 1.0 - guard_eps {
        return Err(Error::Singular(alloc::format!("s_hat·k = {sk} reaches 1")));
    }
    let numerator = (s.x() * k.x() + s.y() * k.y()) * k.z() + s.z() * (k.z() * k.z() - 1.0);
    Ok(p.gamma_d * numerator / ((1.0 - sk) / 2.0).sqrt() + relaxation)
}

/// Expectation values of the three Pauli matrices via the operator path.
pub fn pauli_expectations(psi: &StateVector<2>) -> Result<Vec3> {
    Ok(Vec3([
        expectation(&sigma_x(), psi)?,
        expectation(&sigma_y(), psi)?,
        expectation(&sigma_z(), psi)?,
    ]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{evolve, EvolutionSettings, TargetRule};
    use crate::linalg::pauli_dot;
    use crate::DEFAULT_GUARD_EPS;
    use approx::assert_abs_diff_eq;
    use core::f64::consts::{FRAC_1_SQRT_2, PI};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_unit(rng: &mut impl Rng) -> Vec3 {
        loop {
            let v = Vec3::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            );
            if v.norm() > 0.1 && v.norm() < 1.0 {
                return v.normalized().unwrap();
            }
        }
    }

    #[test]
    fn bloch_of_basis_states() {
        let up = bloch_from_state(&StateVector::basis(0));
        assert_eq!(up.vector(), Vec3::Z);
        let plus = StateVector::from_ket(Ket::real([FRAC_1_SQRT_2, FRAC_1_SQRT_2])).unwrap();
        let k = bloch_from_state(&plus);
        assert!((k.vector() - Vec3::X).norm() < 1e-15);
    }

    #[test]
    fn bloch_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(30);
        for _ in 0..200 {
            let psi = StateVector::new([
                C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
                C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
            ])
            .unwrap();
            let k = bloch_from_state(&psi);
            assert!((k.vector() - pauli_expectations(&psi).unwrap()).norm() < 1e-12);
            let back = state_from_bloch(&k.vector()).unwrap();
            assert!((psi.fidelity(&back) - 1.0).abs() < 1e-12);
            assert!((bloch_from_state(&back).vector() - k.vector()).norm() < 1e-12);
        }
        assert!(state_from_bloch(&Vec3::new(0.5, 0.0, 0.0)).is_err());
        assert!(BlochVector::new(Vec3::new(1.0, 1.0, 0.0)).is_err());
    }

    #[test]
    fn anti_target_is_fixed_point() {
        let s = Vec3::new(0.0, 0.6, 0.8);
        let p = OneSpinParams::new(s * 1.3, s, 0.7).unwrap();
        assert!(bloch_rhs(&-s, &p, DEFAULT_GUARD_EPS).unwrap().norm() < 1e-15);
        assert!(matches!(bloch_rhs(&s, &p, DEFAULT_GUARD_EPS), Err(Error::Singular(_))));
    }

    #[test]
    fn radial_component_vanishes_on_sphere() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..500 {
            let k = random_unit(&mut rng);
            let s = random_unit(&mut rng);
            let omega = random_unit(&mut rng) * rng.random_range(0.0..3.0);
            let p = OneSpinParams::new(omega, s, rng.random_range(0.0..5.0)).unwrap();
            if s.dot(&k) > 0.99 {
                continue;
            }
            let rhs = bloch_rhs(&k, &p, DEFAULT_GUARD_EPS).unwrap();
            assert!(rhs.dot(&k).abs() < 1e-12);
        }
    }

    #[test]
    fn rhs_matches_componentwise_expansion() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        for _ in 0..200 {
            let k = random_unit(&mut rng) * rng.random_range(0.2..1.0);
            let s = random_unit(&mut rng);
            let w = random_unit(&mut rng) * 2.0;
            let g = rng.random_range(0.0..4.0);
            let p = OneSpinParams::new(w, s, g).unwrap();
            let [kx, ky, kz] = k.0;
            let [sx, sy, sz] = s.0;
            let [wx, wy, wz] = w.0;
            let sk = sx * kx + sy * ky + sz * kz;
            let d = (0.5 * (1.0 - sk)).sqrt();
            let oracle = [
                2.0 * (wy * kz - wz * ky) + g * (sk * kx - sx) / d,
                2.0 * (wz * kx - wx * kz) + g * (sk * ky - sy) / d,
                2.0 * (wx * ky - wy * kx) + g * (sk * kz - sz) / d,
            ];
            let got = bloch_rhs(&k, &p, DEFAULT_GUARD_EPS).unwrap();
            for i in 0..3 {
                assert_abs_diff_eq!(got.0[i], oracle[i], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn rhs_matches_heisenberg_expectation() {
        // ⟨M_D σ + σ M_D⟩ route for the nonlinear term.
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for _ in 0..100 {
            let s = random_unit(&mut rng);
            let k = random_unit(&mut rng);
            if s.dot(&k) > 0.99 {
                continue;
            }
            let w = random_unit(&mut rng) * 1.5;
            let p = OneSpinParams::new(w, s, 0.9).unwrap();
            let psi = state_from_bloch(&k).unwrap();
            let h = pauli_dot(w.0);
            let md = crate::dynamics::build_md(&p.target(), &psi, DEFAULT_GUARD_EPS).unwrap().op;
            let via_mhe = [sigma_x(), sigma_y(), sigma_z()]
                .map(|o| crate::dynamics::mhe_rhs(&o, &psi, &h, &md, p.gamma_d).unwrap());
            let got = bloch_rhs(&k, &p, DEFAULT_GUARD_EPS).unwrap();
            for i in 0..3 {
                assert_abs_diff_eq!(got.0[i], via_mhe[i], epsilon = 1e-10);
            }
        }
    }

    fn orthogonal_params(ratio: f64) -> OneSpinParams {
        OneSpinParams::new(Vec3::Z, Vec3::X, ratio).unwrap()
    }

    #[test]
    fn weak_fixed_point_formula() {
        let [plus, minus] = fixed_point_weak(&orthogonal_params(0.0)).unwrap();
        assert_eq!(plus, Vec3::Z);
        assert_eq!(minus, -Vec3::Z);
        let [plus, minus] = fixed_point_weak(&orthogonal_params(0.25)).unwrap();
        // x̂×ẑ = −ŷ
        let expected = Vec3::Z + Vec3::new(0.0, -1.0, 0.0) * (0.25 * FRAC_1_SQRT_2);
        assert!((plus - expected).norm() < 1e-15);
        assert!((minus + expected).norm() < 1e-15);
        let parallel = OneSpinParams::new(Vec3::Z, Vec3::Z, 0.1).unwrap();
        assert!(matches!(fixed_point_weak(&parallel), Err(Error::DegenerateGeometry(_))));
    }

    #[test]
    fn strong_fixed_point_formula() {
        let still = OneSpinParams::new(Vec3::default(), Vec3::X, 3.0).unwrap();
        assert_eq!(fixed_point_strong(&still).unwrap(), -Vec3::X);
        let k = fixed_point_strong(&orthogonal_params(25.0)).unwrap();
        let expected = -Vec3::X + Vec3::new(0.0, -1.0, 0.0) * 0.08;
        assert!((k - expected).norm() < 1e-15);
        assert!(fixed_point_strong(&orthogonal_params(0.0)).is_err());
    }

    fn tilted_s() -> Vec3 {
        let a = 2.0 * PI / 3.0;
        Vec3::new(libm::sin(a), 0.0, libm::cos(a))
    }

    #[test]
    fn relaxed_weak_fixed_point_near_formula() {
        let p = OneSpinParams::new(Vec3::Z, tilted_s(), 0.05).unwrap();
        let relaxed = relax_fixed_point(&Vec3::Y, &p, 1e-2, 2000.0, 1e-9, DEFAULT_GUARD_EPS).unwrap();
        assert!(relaxed.converged, "{relaxed:?}");
        let [plus, minus] = fixed_point_weak(&p).unwrap();
        let angle = relaxed.k.angle_to(&plus).min(relaxed.k.angle_to(&minus));
        assert!(angle < 0.01, "angle {angle}");
    }

    #[test]
    fn long_time_strong_damping_state_near_formula() {
        let p = OneSpinParams::new(Vec3::Z, tilted_s(), 100.0).unwrap();
        let h = pauli_dot(p.omega.0);
        let rule = TargetRule::fixed(p.target()).unwrap();
        let psi0 = state_from_bloch(&Vec3::Y).unwrap();
        let settings = EvolutionSettings::new(1e-4, 2.0, p.gamma_d).unwrap().with_stride(1000);
        let traj = evolve(&psi0, &h, &rule, &settings).unwrap();
        let k = bloch_components(traj.final_state().unwrap());
        let angle = k.angle_to(&fixed_point_strong(&p).unwrap());
        assert!(angle < 0.02, "angle {angle}");
    }

    #[test]
    fn sign_law_for_weak_damping() {
        for (sz, expected) in [(-0.5, 1.0), (0.5, -1.0)] {
            let s = Vec3::new((1.0 - sz * sz).sqrt(), 0.0, sz);
            let p = OneSpinParams::new(Vec3::Z * 2.0, s, 0.1).unwrap();
            let traj = integrate_bloch(&Vec3::Y, &p, 1e-2, 300.0, 1000, DEFAULT_GUARD_EPS).unwrap();
            let kz = traj.ks.last().unwrap().z();
            assert!((kz - expected).abs() < 0.05, "s_z = {sz}: k_z = {kz}");
        }
    }

    #[test]
    fn sphere_is_preserved() {
        let p = OneSpinParams::new(Vec3::new(0.3, 0.2, 1.0), tilted_s(), 0.25).unwrap();
        let traj = integrate_bloch(&Vec3::Y, &p, 1e-3, 20.0, 10, DEFAULT_GUARD_EPS).unwrap();
        for k in &traj.ks {
            assert!((k.norm() - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn relaxation_rate_examples() {
        let zero_field = relaxation_rates(&ThermalParams::new(0.0, 3.0, 0.5).unwrap());
        assert_abs_diff_eq!(zero_field.longitudinal, 3.0, epsilon = 1e-15);
        let fig = relaxation_rates(&ThermalParams::new(10.0, 10.0, 5.0).unwrap());
        assert_abs_diff_eq!(fig.longitudinal, 100.0 / 2501.0, epsilon = 1e-15);
        assert_abs_diff_eq!(fig.transverse, 50.0 / 2501.0 + 50.0, epsilon = 1e-12);
        assert!(fig.transverse >= 0.5 * fig.longitudinal);
        assert!(ThermalParams::new(1.0, 0.0, 1.0).is_err());
        assert!(ThermalParams::new(1.0, 1.0, -1.0).is_err());
    }

    #[test]
    fn steady_state_and_temperature() {
        assert_abs_diff_eq!(thermal_steady_state(5.0, 25.01), -0.996_017_5, epsilon = 1e-6);
        assert_eq!(thermal_steady_state(0.0, 10.0), 0.0);
        assert_eq!(thermal_steady_state(1.0, f64::INFINITY), -1.0);
        assert_eq!(reduced_temperature(0.0, 3.0), f64::INFINITY);
        let x = 2.0 * 5.0 * 25.01;
        let expected = 1.0 / (2.0 * libm::atanh(x / (1.0 + x)));
        assert_abs_diff_eq!(reduced_temperature(5.0, 25.01), expected, epsilon = 1e-15);
        assert_abs_diff_eq!(effective_temperature(10.0, 5.0, 25.01), 10.0 * expected, epsilon = 1e-14);
        let mut prev = 0.0;
        for i in 1..100 {
            let k = thermal_steady_state(0.1 * i as f64, 1.0);
            assert!(k < prev);
            prev = k;
        }
    }

    #[test]
    fn kpar_rhs_vanishes_on_axis_without_relaxation() {
        let s = tilted_s();
        let p = OneSpinParams::new(Vec3::Z * 3.0, s, 0.4).unwrap();
        for k in [Vec3::Z, -Vec3::Z] {
            let v = augmented_kpar_rhs(&k, &p, f64::INFINITY, DEFAULT_GUARD_EPS).unwrap();
            assert!(v.abs() < 1e-15);
        }
        let tilted_field = OneSpinParams::new(Vec3::X, s, 0.4).unwrap();
        assert!(augmented_kpar_rhs(&Vec3::Z, &tilted_field, 1.0, DEFAULT_GUARD_EPS).is_err());
    }

    #[test]
    fn kpar_rhs_matches_projected_bloch_rhs() {
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        for _ in 0..100 {
            let s = random_unit(&mut rng);
            let k = random_unit(&mut rng);
            if s.dot(&k) > 0.99 {
                continue;
            }
            let p = OneSpinParams::new(Vec3::Z * 2.0, s, 1.1).unwrap();
            let full = bloch_rhs(&k, &p, DEFAULT_GUARD_EPS).unwrap().z();
            let kpar = augmented_kpar_rhs(&k, &p, f64::INFINITY, DEFAULT_GUARD_EPS).unwrap();
            assert_abs_diff_eq!(full, kpar, epsilon = 1e-12);
        }
    }

    #[test]
    fn linearized_steady_state_matches_formula() {
        // −2γ_D(1 + k) − k/T = 0 solved by hand.
        for (g, t1) in [(5.0, 25.01), (0.3, 2.0), (1.0, 100.0)] {
            let k = -2.0 * g * t1 / (1.0 + 2.0 * g * t1);
            assert_abs_diff_eq!(k, thermal_steady_state(g, t1), epsilon = 1e-14);
        }
    }

    #[test]
    fn nonlinear_steady_state_close_to_formula() {
        // ŝ = ẑ, pure states on a meridian: bisect the full drift for its root.
        let (g, t1) = (5.0, 25.01);
        let p = OneSpinParams::new(Vec3::Z * 10.0, Vec3::Z, g).unwrap();
        let drift = |kz: f64| {
            let k = Vec3::new((1.0 - kz * kz).sqrt(), 0.0, kz);
            augmented_kpar_rhs(&k, &p, t1, DEFAULT_GUARD_EPS).unwrap()
        };
        let (mut lo, mut hi) = (-1.0 + 1e-12, 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if drift(mid) > 0.0 { lo = mid } else { hi = mid }
        }
        assert_abs_diff_eq!(lo, thermal_steady_state(g, t1), epsilon = 1e-5);
    }

    #[test]
    fn kpar_drifts_down_for_positive_sz() {
        let s = Vec3::new(0.6, 0.0, 0.8);
        let p = OneSpinParams::new(Vec3::Z, s, 0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(35);
        for _ in 0..100 {
            let k = random_unit(&mut rng);
            if k.z().abs() > 0.999 || s.dot(&k) > 0.99 {
                continue;
            }
            // Precession-averaged: the s_x k_x + s_y k_y term averages out.
            let averaged = p.gamma_d * s.z() * (k.z() * k.z() - 1.0) / ((1.0 - s.dot(&k)) / 2.0).sqrt();
            assert!(averaged < 0.0);
        }
    }
}
