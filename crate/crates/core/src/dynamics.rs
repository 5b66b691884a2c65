//! The nonlinear operator `M_D` and time integration of the modified
//! Schrödinger equation.
//!
//! For a target vector `|Ψ⟩` and current state `|ψ⟩`,
//!
//! ```text
//! P     = |Ψ⟩⟨Ψ| / ⟨Ψ|Ψ⟩
//! ⟨P⟩   = |⟨Ψ|ψ⟩|² / (⟨Ψ|Ψ⟩⟨ψ|ψ⟩)
//! M_D   = −√(⟨Ψ|Ψ⟩ / (1 − ⟨P⟩)) (P − ⟨P⟩)
//! ```
//!
//! The prefactor diverges as `ψ` approaches `Ψ`. Whenever `1 − ⟨P⟩` drops
//! below the guard threshold the nonlinear term is dropped for that
//! evaluation and the step is counted as guarded.

use alloc::string::String;
use alloc::vec::Vec;
use core::ops::ControlFlow;

#[allow(unused_imports)] // shadowed by inherent f64 methods whenever std is linked
use num_traits::Float as _;

use crate::error::invalid;
use crate::linalg::{
    expectation_raw, projector, DensityOperator, HermitianOperator, Ket, Matrix, StateVector,
};
use crate::ode::{rk4_step, StepSchedule};
use crate::{Error, Result, ALGEBRAIC_TOL, C64, DEFAULT_GUARD_EPS};

/// How the target `|Ψ⟩` is chosen at each evaluation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TargetRule<const N: usize> {
    /// A constant, possibly unnormalized, nonzero vector.
    Fixed(Ket<N>),
    /// Two-spin disentangling target rebuilt from the current state:
    /// `|Ψ⟩ = (d*, −c*, −b*, a*)` for `|ψ⟩ = (a, b, c, d)`.
    SpinFlip,
}

impl<const N: usize> TargetRule<N> {
    pub fn fixed(target: Ket<N>) -> Result<Self> {
        if target.norm_sqr() == 0.0 || !target.is_finite() {
            return Err(invalid!("fixed target must be a nonzero finite vector"));
        }
        Ok(Self::Fixed(target))
    }

    pub fn spin_flip() -> Result<Self> {
        if N != 4 {
            return Err(invalid!("spin-flip target needs dimension 4, got {N}"));
        }
        Ok(Self::SpinFlip)
    }

    /// The target vector for the current (possibly unnormalized) state.
    pub fn target_for(&self, psi: &Ket<N>) -> Result<Ket<N>> {
        match self {
            Self::Fixed(target) => Ok(*target),
            Self::SpinFlip => {
                if N != 4 {
                    return Err(invalid!("spin-flip target needs dimension 4, got {N}"));
                }
                let mut out = Ket::<N>::zero();
                out[0] = psi[3].conj();
                out[1] = -psi[2].conj();
                out[2] = -psi[1].conj();
                out[3] = psi[0].conj();
                debug_assert!({
                    let e = psi[0] * psi[3] - psi[1] * psi[2];
                    (out.inner(psi) - e * 2.0).norm() <= 1e-10 * psi.norm_sqr().max(1.0)
                });
                Ok(out)
            }
        }
    }
}

/// Scalars shared by the matrix and matrix-free forms of `M_D`.
#[derive(Clone, Copy, Debug)]
struct MdParts {
    /// `√(⟨Ψ|Ψ⟩ / (1 − ⟨P⟩))`
    coef: f64,
    /// `⟨Ψ|ψ⟩ / ⟨Ψ|Ψ⟩`
    projected: C64,
    /// `⟨P⟩`
    p: f64,
    guarded: bool,
}

fn md_parts<const N: usize>(target: &Ket<N>, psi: &Ket<N>, guard_eps: f64) -> Result<MdParts> {
    let target_norm = target.norm_sqr();
    if target_norm == 0.0 || !target_norm.is_finite() {
        return Err(invalid!("target vector must be nonzero and finite"));
    }
    let psi_norm = psi.norm_sqr();
    if psi_norm == 0.0 {
        return Err(invalid!("state vector must be nonzero"));
    }
    let overlap = target.inner(psi);
    let p = overlap.norm_sqr() / (target_norm * psi_norm);
    let gap = 1.0 - p;
    let guarded = !(gap >= guard_eps);
    let coef = if guarded { 0.0 } else { (target_norm / gap).sqrt() };
    Ok(MdParts { coef, projected: overlap / target_norm, p, guarded })
}

/// `M_D` together with whether the singular guard replaced it by zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MdOperator<const N: usize> {
    pub op: HermitianOperator<N>,
    pub guarded: bool,
}

/// Builds `M_D` for target `Ψ` and normalized state `ψ`.
pub fn build_md<const N: usize>(
    target: &Ket<N>,
    psi: &StateVector<N>,
    guard_eps: f64,
) -> Result<MdOperator<N>> {
    build_md_raw(target, psi.as_ket(), guard_eps)
}

/// As [`build_md`], for a state that need not be normalized.
pub fn build_md_raw<const N: usize>(
    target: &Ket<N>,
    psi: &Ket<N>,
    guard_eps: f64,
) -> Result<MdOperator<N>> {
    let parts = md_parts(target, psi, guard_eps)?;
    if parts.guarded {
        return Ok(MdOperator { op: HermitianOperator::zero(), guarded: true });
    }
    let shifted = *projector(target)?.matrix() - Matrix::identity() * parts.p;
    Ok(MdOperator {
        op: HermitianOperator::new_unchecked(shifted * -parts.coef),
        guarded: false,
    })
}

/// `M_D |ψ⟩` without forming the matrix.
fn apply_md<const N: usize>(target: &Ket<N>, psi: &Ket<N>, guard_eps: f64) -> Result<(Ket<N>, bool)> {
    let parts = md_parts(target, psi, guard_eps)?;
    if parts.guarded {
        return Ok((Ket::zero(), true));
    }
    let projected = target.scale(parts.projected) - *psi * parts.p;
    Ok((projected * -parts.coef, false))
}

/// A state derivative and whether the nonlinear term was guarded out.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Derivative<const N: usize> {
    pub value: Ket<N>,
    pub guarded: bool,
}

/// `(−iH + γ_D M_D)|ψ⟩`
pub fn mse_rhs<const N: usize>(
    psi: &StateVector<N>,
    h: &HermitianOperator<N>,
    rule: &TargetRule<N>,
    gamma_d: f64,
    guard_eps: f64,
) -> Result<Derivative<N>> {
    mse_rhs_raw(psi.as_ket(), h, rule, gamma_d, guard_eps)
}

/// As [`mse_rhs`], for a state that need not be normalized (RK4 substeps).
pub fn mse_rhs_raw<const N: usize>(
    psi: &Ket<N>,
    h: &HermitianOperator<N>,
    rule: &TargetRule<N>,
    gamma_d: f64,
    guard_eps: f64,
) -> Result<Derivative<N>> {
    let unitary = h.apply(psi).scale(C64::new(0.0, -1.0));
    if gamma_d == 0.0 {
        return Ok(Derivative { value: unitary, guarded: false });
    }
    let target = rule.target_for(psi)?;
    let (md_psi, guarded) = apply_md(&target, psi, guard_eps)?;
    Ok(Derivative { value: unitary + md_psi * gamma_d, guarded })
}

/// `[H, ρ]/i + γ_D(ρ M_D + M_D ρ)`
pub fn mme_rhs<const N: usize>(
    rho: &DensityOperator<N>,
    h: &HermitianOperator<N>,
    md: &HermitianOperator<N>,
    gamma_d: f64,
) -> Matrix<N> {
    h.commutator(rho.matrix()) * C64::new(0.0, -1.0) + rho.anticommutator(md.matrix()) * gamma_d
}

/// `d⟨O⟩/dt = ⟨[O, H]⟩/i + γ_D⟨M_D O + O M_D⟩` for a time-independent `O`.
pub fn mhe_rhs<const N: usize>(
    o: &HermitianOperator<N>,
    psi: &StateVector<N>,
    h: &HermitianOperator<N>,
    md: &HermitianOperator<N>,
    gamma_d: f64,
) -> Result<f64> {
    let commutator = o.commutator(h.matrix());
    let unitary = psi.inner(&commutator.apply(psi)) * C64::new(0.0, -1.0);
    let tol = ALGEBRAIC_TOL * commutator.max_abs().max(1.0);
    if unitary.im.abs() > tol {
        return Err(Error::Numerical(alloc::format!(
            "commutator expectation has real residue {}",
            unitary.im
        )));
    }
    let anti = HermitianOperator::new_unchecked(md.anticommutator(o.matrix()));
    Ok(unitary.re + gamma_d * expectation_raw(&anti, psi.as_ket())?)
}

/// Source of the (possibly time-dependent) Hamiltonian, sampled at RK4
/// substep times.
pub trait HamiltonianProvider<const N: usize> {
    fn hamiltonian(&self, t: f64) -> Result<HermitianOperator<N>>;
}

impl<const N: usize> HamiltonianProvider<N> for HermitianOperator<N> {
    fn hamiltonian(&self, _t: f64) -> Result<HermitianOperator<N>> {
        Ok(*self)
    }
}

impl<const N: usize, F> HamiltonianProvider<N> for F
where
    F: Fn(f64) -> Result<HermitianOperator<N>>,
{
    fn hamiltonian(&self, t: f64) -> Result<HermitianOperator<N>> {
        self(t)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvolutionSettings {
    pub dt: f64,
    pub t_final: f64,
    pub gamma_d: f64,
    /// Rescale the state to unit norm after every step.
    pub renormalize: bool,
    /// Threshold on `1 − ⟨P⟩` below which `M_D` is dropped.
    pub guard_eps: f64,
    /// Record every `stride`-th step (the final step is always recorded).
    pub stride: usize,
}

impl EvolutionSettings {
    pub fn new(dt: f64, t_final: f64, gamma_d: f64) -> Result<Self> {
        let settings = Self {
            dt,
            t_final,
            gamma_d,
            renormalize: true,
            guard_eps: DEFAULT_GUARD_EPS,
            stride: 1,
        };
        settings.validate()?;
        Ok(settings)
    }

    pub fn with_renormalize(mut self, renormalize: bool) -> Self {
        self.renormalize = renormalize;
        self
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.stride = stride;
        self
    }

    pub fn with_guard_eps(mut self, guard_eps: f64) -> Self {
        self.guard_eps = guard_eps;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(invalid!("dt must be positive, got {}", self.dt));
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return Err(invalid!("t_final must be non-negative, got {}", self.t_final));
        }
        if !(self.gamma_d >= 0.0 && self.gamma_d.is_finite()) {
            return Err(invalid!("gamma_d must be non-negative, got {}", self.gamma_d));
        }
        if !(self.guard_eps > 0.0) {
            return Err(invalid!("guard_eps must be positive, got {}", self.guard_eps));
        }
        if self.stride == 0 {
            return Err(invalid!("stride must be at least 1"));
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        StepSchedule::new(self.dt, self.t_final).n_steps
    }
}

/// Named real series sampled alongside a trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub name: String,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory<const N: usize> {
    pub times: Vec<f64>,
    /// Unit-norm when the run renormalizes; otherwise raw RK4 output.
    pub states: Vec<Ket<N>>,
    pub observables: Vec<Series>,
    /// Steps in which at least one RK4 stage dropped the nonlinear term.
    pub guarded_steps: usize,
}

impl<const N: usize> Trajectory<N> {
    /// Evaluates `f` on every stored state and keeps the result as a named
    /// series.
    pub fn record(&mut self, name: &str, f: impl Fn(&Ket<N>) -> f64) -> &[f64] {
        let values = self.states.iter().map(f).collect();
        self.observables.push(Series { name: name.into(), values });
        &self.observables.last().expect("just pushed").values
    }

    pub fn observable(&self, name: &str) -> Option<&[f64]> {
        self.observables
            .iter()
            .find(|s| s.name == name)
            .map(|s| s.values.as_slice())
    }

    pub fn final_state(&self) -> Option<&Ket<N>> {
        self.states.last()
    }
}

/// Outcome of a streamed integration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunSummary {
    pub steps: usize,
    pub guarded_steps: usize,
    pub t_end: f64,
    /// The sample callback asked to stop before `t_final`.
    pub stopped_early: bool,
}

/// Integrates with RK4 and hands every recorded sample to `on_sample`.
///
/// Samples are produced at `t = 0`, every `stride` steps, and at `t_final`.
/// Returning [`ControlFlow::Break`] from the callback ends the run.
pub fn evolve_with<const N: usize, P, F>(
    psi0: &StateVector<N>,
    hamiltonian: &P,
    rule: &TargetRule<N>,
    settings: &EvolutionSettings,
    mut on_sample: F,
) -> Result<RunSummary>
where
    P: HamiltonianProvider<N> + ?Sized,
    F: FnMut(f64, &Ket<N>) -> ControlFlow<()>,
{
    settings.validate()?;
    let schedule = StepSchedule::new(settings.dt, settings.t_final);
    let mut psi = *psi0.as_ket();
    let mut guarded_steps = 0;
    if on_sample(0.0, &psi).is_break() {
        return Ok(RunSummary { steps: 0, guarded_steps, t_end: 0.0, stopped_early: true });
    }
    for step in 0..schedule.n_steps {
        let t = schedule.time(step);
        let mut guarded = false;
        let next = rk4_step(t, &psi.0, schedule.step_len(step), |ts, y| {
            let state = Ket(*y);
            if !state.is_finite() {
                return Err(Error::Diverged { t: ts });
            }
            let h = hamiltonian.hamiltonian(ts)?;
            let d = mse_rhs_raw(&state, &h, rule, settings.gamma_d, settings.guard_eps)?;
            guarded |= d.guarded;
            Ok::<_, Error>(d.value.0)
        });
        let t_next = schedule.time(step + 1);
        psi = Ket(next?);
        if !psi.is_finite() || psi.norm_sqr() == 0.0 {
            return Err(Error::Diverged { t: t_next });
        }
        if settings.renormalize {
            psi = psi * psi.norm().recip();
        }
        if guarded {
            guarded_steps += 1;
        }
        let last = step + 1 == schedule.n_steps;
        if ((step + 1) % settings.stride == 0 || last) && on_sample(t_next, &psi).is_break() {
            return Ok(RunSummary {
                steps: step + 1,
                guarded_steps,
                t_end: t_next,
                stopped_early: !last,
            });
        }
    }
    Ok(RunSummary {
        steps: schedule.n_steps,
        guarded_steps,
        t_end: schedule.time(schedule.n_steps),
        stopped_early: false,
    })
}

/// Integrates the modified Schrödinger equation and stores the sampled
/// states.
pub fn evolve<const N: usize, P>(
    psi0: &StateVector<N>,
    hamiltonian: &P,
    rule: &TargetRule<N>,
    settings: &EvolutionSettings,
) -> Result<Trajectory<N>>
where
    P: HamiltonianProvider<N> + ?Sized,
{
    let capacity = settings.n_steps() / settings.stride.max(1) + 2;
    let mut times = Vec::with_capacity(capacity);
    let mut states = Vec::with_capacity(capacity);
    let summary = evolve_with(psi0, hamiltonian, rule, settings, |t, psi| {
        times.push(t);
        states.push(*psi);
        ControlFlow::Continue(())
    })?;
    Ok(Trajectory {
        times,
        states,
        observables: Vec::new(),
        guarded_steps: summary.guarded_steps,
    })
}
