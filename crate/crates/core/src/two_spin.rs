//! Two-spin states `|ψ⟩ = a|++⟩ + b|+−⟩ + c|−+⟩ + d|−−⟩`, their single-spin
//! observables and entanglement, and the disentangling runs started near a
//! Bell state.
//!
//! Spin 1 is the first Kronecker factor: `S₁ᵢ = σᵢ ⊗ σ₀`, `S₂ᵢ = σ₀ ⊗ σᵢ`.

use alloc::vec::Vec;
use core::f64::consts::FRAC_1_SQRT_2;

#[allow(unused_imports)] // shadowed by inherent f64 methods whenever std is linked
use num_traits::Float as _;
use rand_core::RngCore;
use rand_distr::{Distribution, StandardNormal};

use crate::bloch::Vec3;
use crate::dynamics::{evolve, EvolutionSettings, TargetRule, Trajectory};
use crate::error::invalid;
use crate::linalg::{
    embed, expectation, kron, pauli_dot, sigma_x, sigma_y, sigma_z, HermitianOperator, Ket, Matrix,
    Spin, StateVector,
};
use crate::{Error, Result, ALGEBRAIC_TOL, C64};

/// A normalized four-amplitude state in the fixed product basis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoSpinState(StateVector<4>);

impl TwoSpinState {
    /// Normalizes `(a, b, c, d)`.
    pub fn new(a: C64, b: C64, c: C64, d: C64) -> Result<Self> {
        Ok(Self(StateVector::new([a, b, c, d])?))
    }

    pub fn from_state(psi: StateVector<4>) -> Self {
        Self(psi)
    }

    pub fn from_ket(ket: &Ket<4>) -> Result<Self> {
        Ok(Self(StateVector::from_ket(*ket)?))
    }

    pub fn a(&self) -> C64 {
        self.0[0]
    }

    pub fn b(&self) -> C64 {
        self.0[1]
    }

    pub fn c(&self) -> C64 {
        self.0[2]
    }

    pub fn d(&self) -> C64 {
        self.0[3]
    }

    pub fn state(&self) -> &StateVector<4> {
        &self.0
    }
}

impl core::ops::Deref for TwoSpinState {
    type Target = StateVector<4>;

    fn deref(&self) -> &StateVector<4> {
        &self.0
    }
}

fn product_basis(index: usize) -> TwoSpinState {
    TwoSpinState(StateVector::basis(index))
}

/// `|++⟩`
pub fn up_up() -> TwoSpinState {
    product_basis(0)
}

/// `|−−⟩`
pub fn down_down() -> TwoSpinState {
    product_basis(3)
}

/// `|B₀,₀⟩ = (|+−⟩ − |−+⟩)/√2`
pub fn singlet() -> TwoSpinState {
    TwoSpinState(StateVector::from_ket(Ket::real([0.0, FRAC_1_SQRT_2, -FRAC_1_SQRT_2, 0.0])).expect("unit"))
}

/// `|B₁,₀⟩ = (|+−⟩ + |−+⟩)/√2`
pub fn triplet_zero() -> TwoSpinState {
    TwoSpinState(StateVector::from_ket(Ket::real([0.0, FRAC_1_SQRT_2, FRAC_1_SQRT_2, 0.0])).expect("unit"))
}

/// `S_n·u` with `u = (sin θ cos φ, sin θ sin φ, cos θ)`, for spin `which ∈ {1, 2}`.
pub fn spin_projection_op(which: u8, theta: f64, phi: f64) -> Result<HermitianOperator<4>> {
    let spin = Spin::try_from(which)?;
    if !theta.is_finite() || !phi.is_finite() {
        return Err(invalid!("angles must be finite"));
    }
    let (st, ct) = (libm::sin(theta), libm::cos(theta));
    let u = [st * libm::cos(phi), st * libm::sin(phi), ct];
    Ok(embed(&pauli_dot(u), spin))
}

/// `[S_x, S_y, S_z]` for one spin.
pub fn spin_operators(spin: Spin) -> [HermitianOperator<4>; 3] {
    [sigma_x(), sigma_y(), sigma_z()].map(|s| embed(&s, spin))
}

/// `(⟨S₁⟩, ⟨S₂⟩)` from the axis operators.
pub fn spin_expectations(psi: &TwoSpinState) -> Result<(Vec3, Vec3)> {
    let mut out = [Vec3::default(); 2];
    for (slot, spin) in out.iter_mut().zip([Spin::One, Spin::Two]) {
        let ops = spin_operators(spin);
        for (i, op) in ops.iter().enumerate() {
            slot.0[i] = expectation(op, psi)?;
        }
    }
    Ok((out[0], out[1]))
}

/// `E = ad − bc`
pub fn entanglement(psi: &TwoSpinState) -> C64 {
    psi.a() * psi.d() - psi.b() * psi.c()
}

/// Single-spin purity `P = 1 − 2|E|²`.
pub fn purity(psi: &TwoSpinState) -> f64 {
    1.0 - 2.0 * entanglement(psi).norm_sqr()
}

/// The state with `⟨S₁⟩ = ⟨S₂⟩ = 0`:
///
/// ```text
/// a = cos(θ/2) e^{−iφ_α/2}/√2    b = i sin(θ/2) e^{−iφ_β/2}/√2
/// c = i sin(θ/2) e^{ iφ_β/2}/√2  d = cos(θ/2) e^{ iφ_α/2}/√2
/// ```
pub fn symmetric_state(theta_psi: f64, phi_alpha: f64, phi_beta: f64) -> Result<TwoSpinState> {
    if ![theta_psi, phi_alpha, phi_beta].iter().all(|v| v.is_finite()) {
        return Err(invalid!("angles must be finite"));
    }
    let ch = libm::cos(theta_psi / 2.0) * FRAC_1_SQRT_2;
    let sh = libm::sin(theta_psi / 2.0) * FRAC_1_SQRT_2;
    let i = C64::i();
    TwoSpinState::new(
        C64::from_polar(ch, -phi_alpha / 2.0),
        i * C64::from_polar(sh, -phi_beta / 2.0),
        i * C64::from_polar(sh, phi_beta / 2.0),
        C64::from_polar(ch, phi_alpha / 2.0),
    )
}

/// `⟨R⟩ = 4(|ad|² − |bc|²) − 4 Re((b*² + c*²)(ad − bc))`.
pub fn r_expectation(psi: &TwoSpinState) -> f64 {
    let (a, b, c, d) = (psi.a(), psi.b(), psi.c(), psi.d());
    let e = a * d - b * c;
    let ad = (a * d).norm_sqr();
    let bc = (b * c).norm_sqr();
    4.0 * (ad - bc) - 4.0 * ((b.conj() * b.conj() + c.conj() * c.conj()) * e).re
}

/// `⟨S₁·S₂⟩ − ⟨S₁⟩·⟨S₂⟩` evaluated with explicit operators.
pub fn r_expectation_operator(psi: &TwoSpinState) -> Result<f64> {
    let mut s1s2 = 0.0;
    for s in [sigma_x(), sigma_y(), sigma_z()] {
        s1s2 += expectation(&kron(&s, &s), psi)?;
    }
    let (s1, s2) = spin_expectations(psi)?;
    Ok(s1s2 - s1.dot(&s2))
}

/// `|Ψ⟩ = (d*, −c*, −b*, a*)`, so that `⟨Ψ|ψ⟩ = 2(ad − bc)`.
pub fn spin_flip_target(psi: &TwoSpinState) -> StateVector<4> {
    let target = TargetRule::<4>::SpinFlip.target_for(psi.as_ket()).expect("dimension 4");
    StateVector::from_ket(target).expect("unit norm preserved")
}

/// Closed-form single-spin observables of a (possibly unnormalized) ket.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoSpinObservables {
    pub s1: Vec3,
    pub s2: Vec3,
    pub purity: f64,
    pub e_abs: f64,
    pub r: f64,
}

impl TwoSpinObservables {
    pub fn of(psi: &Ket<4>) -> Self {
        let inv = psi.norm_sqr().recip();
        let s = psi.scale(C64::new(inv.sqrt(), 0.0));
        let [a, b, c, d] = s.0;
        // ⟨S₁₊⟩ = 2(a*c + b*d), ⟨S₂₊⟩ = 2(a*b + c*d)
        let s1p = (a.conj() * c + b.conj() * d) * 2.0;
        let s2p = (a.conj() * b + c.conj() * d) * 2.0;
        let (na, nb, nc, nd) = (a.norm_sqr(), b.norm_sqr(), c.norm_sqr(), d.norm_sqr());
        let e = a * d - b * c;
        let state = TwoSpinState(StateVector::from_ket(s).expect("normalized"));
        Self {
            s1: Vec3::new(s1p.re, s1p.im, na + nb - nc - nd),
            s2: Vec3::new(s2p.re, s2p.im, na - nb + nc - nd),
            purity: 1.0 - 2.0 * e.norm_sqr(),
            e_abs: e.norm(),
            r: r_expectation(&state),
        }
    }
}

fn random_su2<R: RngCore + ?Sized>(rng: &mut R) -> Matrix<2> {
    let mut q = [0.0f64; 4];
    loop {
        for v in &mut q {
            *v = StandardNormal.sample(rng);
        }
        let n = q.iter().map(|v| v * v).sum::<f64>().sqrt();
        if n > 1e-6 {
            q.iter_mut().for_each(|v| *v /= n);
            break;
        }
    }
    let [q0, q1, q2, q3] = q;
    Matrix([
        [C64::new(q0, q3), C64::new(q2, q1)],
        [C64::new(-q2, q1), C64::new(q0, -q3)],
    ])
}

/// A random state with `|ad − bc| = e_abs`: the Schmidt form
/// `cos χ|++⟩ + sin χ|−−⟩`, `sin 2χ = 2 e_abs`, rotated by random local
/// unitaries.
pub fn random_state_with_entanglement<R: RngCore + ?Sized>(
    rng: &mut R,
    e_abs: f64,
) -> Result<TwoSpinState> {
    if !(0.0..=0.5).contains(&e_abs) {
        return Err(invalid!("|E| must lie in [0, 1/2], got {e_abs}"));
    }
    let chi = libm::asin(2.0 * e_abs) / 2.0;
    let schmidt = Ket::real([libm::cos(chi), 0.0, 0.0, libm::sin(chi)]);
    let local = random_su2(rng).kron(&random_su2(rng));
    TwoSpinState::from_ket(&local.apply(&schmidt))
}

/// A Haar-random normalized state.
pub fn random_state<R: RngCore + ?Sized>(rng: &mut R) -> TwoSpinState {
    loop {
        let amps: [C64; 4] =
            core::array::from_fn(|_| C64::new(StandardNormal.sample(rng), StandardNormal.sample(rng)));
        if let Ok(s) = TwoSpinState::new(amps[0], amps[1], amps[2], amps[3]) {
            return s;
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BellBase {
    /// `|B₀,₀⟩`
    Singlet,
    /// `|B₁,₀⟩`
    Triplet,
}

impl BellBase {
    pub fn state(&self) -> TwoSpinState {
        match self {
            Self::Singlet => singlet(),
            Self::Triplet => triplet_zero(),
        }
    }
}

/// `(|ψ₀⟩ + ε|ψ_p⟩)` normalized.
pub fn perturbed_bell(epsilon: f64, psi_p: &TwoSpinState, base: BellBase) -> Result<TwoSpinState> {
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(invalid!("epsilon must be non-negative, got {epsilon}"));
    }
    TwoSpinState::from_ket(&(*base.state().as_ket() + *psi_p.as_ket() * epsilon))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ButterflyReport {
    pub epsilon: f64,
    pub initial: TwoSpinObservables,
    pub last: TwoSpinObservables,
    /// `⟨S₁₊⟩`, `⟨S₂₊⟩` at `t = 0`.
    pub initial_s_plus: [C64; 2],
    /// First-order singlet predictions `2^{1/2}(δ − α*)ε` and its spin-2
    /// counterpart `2^{1/2}(α* − δ)ε`; `None` for the triplet base.
    pub predicted_s_plus: Option<[C64; 2]>,
    /// First-order singlet predictions `±2^{−1/2}(β + β* + γ + γ*)ε`.
    pub predicted_s_z: Option<[f64; 2]>,
    /// Angle between `⟨S₁⟩/|⟨S₁⟩|` at the start and at the end.
    pub s1_direction_change: f64,
    /// Every step hit the singular guard: the run started on the target.
    pub guarded_stationary: bool,
}

#[derive(Clone, Debug)]
pub struct ButterflyOutcome {
    pub trajectory: Trajectory<4>,
    pub report: ButterflyReport,
}

/// `H = 0` spin-flip run from `(|ψ₀⟩ + ε|ψ_p⟩)` normalized.
pub fn butterfly_run(
    epsilon: f64,
    psi_p: &TwoSpinState,
    base: BellBase,
    settings: &EvolutionSettings,
) -> Result<ButterflyOutcome> {
    let psi0 = perturbed_bell(epsilon, psi_p, base)?;
    let trajectory = evolve(psi0.state(), &HermitianOperator::<4>::zero(), &TargetRule::SpinFlip, settings)?;
    let last_ket = trajectory.final_state().ok_or_else(|| Error::Numerical("empty trajectory".into()))?;
    let initial = TwoSpinObservables::of(psi0.as_ket());
    let last = TwoSpinObservables::of(last_ket);
    let [a, b, c, d] = psi0.as_ket().0;
    let initial_s_plus = [(a.conj() * c + b.conj() * d) * 2.0, (a.conj() * b + c.conj() * d) * 2.0];
    let (predicted_s_plus, predicted_s_z) = match base {
        BellBase::Singlet => {
            let [al, be, ga, de] = psi_p.as_ket().0;
            let s1p = (de - al.conj()) * (core::f64::consts::SQRT_2 * epsilon);
            let s1z = FRAC_1_SQRT_2 * epsilon * 2.0 * (be.re + ga.re);
            (Some([s1p, -s1p]), Some([s1z, -s1z]))
        }
        BellBase::Triplet => (None, None),
    };
    let n_steps = settings.n_steps();
    let s1_direction_change = if initial.s1.norm() > ALGEBRAIC_TOL && last.s1.norm() > ALGEBRAIC_TOL {
        initial.s1.angle_to(&last.s1)
    } else {
        f64::NAN
    };
    let report = ButterflyReport {
        epsilon,
        initial,
        last,
        initial_s_plus,
        predicted_s_plus,
        predicted_s_z,
        s1_direction_change,
        guarded_stationary: n_steps > 0 && trajectory.guarded_steps == n_steps,
    };
    Ok(ButterflyOutcome { trajectory, report })
}

/// `max_t |⟨S₁z + S₂z⟩(t) − ⟨S₁z + S₂z⟩(0)|` over the stored samples.
pub fn total_sz_drift(trajectory: &Trajectory<4>) -> f64 {
    let total = |k: &Ket<4>| {
        let o = TwoSpinObservables::of(k);
        o.s1.z() + o.s2.z()
    };
    let Some(first) = trajectory.states.first() else { return 0.0 };
    let start = total(first);
    trajectory.states.iter().map(|k| (total(k) - start).abs()).fold(0.0, f64::max)
}

/// Attaches the standard two-spin series (`S1x … S2z, P, E, R`).
pub fn record_observables(trajectory: &mut Trajectory<4>) -> Vec<&'static str> {
    const NAMES: [&str; 9] = ["S1x", "S1y", "S1z", "S2x", "S2y", "S2z", "P", "E", "R"];
    let all: Vec<TwoSpinObservables> = trajectory.states.iter().map(TwoSpinObservables::of).collect();
    for (i, name) in NAMES.iter().enumerate() {
        let values = all
            .iter()
            .map(|o| match i {
                0..=2 => o.s1.0[i],
                3..=5 => o.s2.0[i - 3],
                6 => o.purity,
                7 => o.e_abs,
                _ => o.r,
            })
            .collect();
        trajectory.observables.push(crate::dynamics::Series { name: (*name).into(), values });
    }
    NAMES.to_vec()
}
