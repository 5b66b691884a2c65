//! Runs one ensemble member of a scenario and collects its table, summary
//! and scalar metrics.

use std::ops::ControlFlow;

use nlse_core::bloch::{
    bloch_components, bloch_rhs, fixed_point_strong, fixed_point_weak, relaxation_rates,
    reduced_temperature, state_from_bloch, thermal_steady_state, OneSpinParams, ThermalParams, Vec3,
};
use nlse_core::driven::{hartmann_hahn_mismatch, omega_matrix, rabi_frequency, DrivenParams};
use nlse_core::dynamics::{evolve_with, EvolutionSettings, RunSummary, TargetRule};
use nlse_core::limit_cycle::{detect_limit_cycle, LimitCycleConfig};
use nlse_core::linalg::{pauli_dot, HermitianOperator, Ket, Matrix, StateVector};
use nlse_core::noise::{noisy_hamiltonian, synthesize, Coupling, NoiseParams, NoiseRealization};
use nlse_core::two_spin::{
    butterfly_run, down_down, random_state_with_entanglement, total_sz_drift, BellBase,
    TwoSpinObservables, TwoSpinState,
};
use nlse_core::{Error, C64};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};

use crate::config::{
    amplitudes, Amp, BaseState, ButterflyModel, CustomModel, DisentangleModel, DrivenModel, Model,
    NoiseCoupling, OneSpinModel, ScenarioConfig, TargetSpec, ThermalModel,
};
use crate::error::CliError;

pub const ONE_SPIN_COLUMNS: &[&str] = &["t", "k_x", "k_y", "k_z"];
pub const TWO_SPIN_COLUMNS: &[&str] =
    &["t", "S1x", "S1y", "S1z", "S2x", "S2y", "S2z", "P", "|E|", "R"];

/// Stream used for random initial states, clear of the noise streams.
const INITIAL_STATE_STREAM: u64 = 64;

/// Everything one member produces.
#[derive(Clone, Debug, Default)]
pub struct MemberOutcome {
    pub columns: &'static [&'static str],
    pub rows: Vec<Vec<f64>>,
    pub summary: Map<String, Value>,
    /// Scalars aggregated across the ensemble, in a fixed order.
    pub metrics: Vec<(&'static str, f64)>,
    /// Set when the integration diverged; `rows` then holds the samples up
    /// to the failure.
    pub failure: Option<String>,
}

fn from_core(e: Error) -> CliError {
    match e {
        Error::Diverged { .. } | Error::Numerical(_) => CliError::Divergence(e.to_string()),
        _ => CliError::config(e.to_string()),
    }
}

fn vec3(v: [f64; 3]) -> Vec3 {
    Vec3(v)
}

fn one_spin_row(t: f64, k: &Ket<2>) -> Vec<f64> {
    let b = bloch_components(k);
    vec![t, b.x(), b.y(), b.z()]
}

fn two_spin_row(t: f64, k: &Ket<4>) -> Vec<f64> {
    let o = TwoSpinObservables::of(k);
    let mut row = Vec::with_capacity(10);
    row.push(t);
    row.extend_from_slice(&o.s1.0);
    row.extend_from_slice(&o.s2.0);
    row.extend([o.purity, o.e_abs, o.r]);
    row
}

fn settings(cfg: &ScenarioConfig, gamma_d: f64) -> Result<EvolutionSettings, CliError> {
    let i = &cfg.integrator;
    Ok(EvolutionSettings::new(i.dt, i.t_final, gamma_d)
        .map_err(from_core)?
        .with_stride(cfg.sample_stride)
        .with_renormalize(i.renormalize)
        .with_guard_eps(i.guard_eps))
}

fn coupling(cfg: &ScenarioConfig, dimension: usize) -> Coupling {
    if dimension == 2 {
        return Coupling::ONE_SPIN;
    }
    match cfg.noise.as_ref().and_then(|n| n.coupling).unwrap_or(NoiseCoupling::Both) {
        NoiseCoupling::Both => Coupling::BOTH,
        NoiseCoupling::Spin1 => Coupling::SPIN1_ONLY,
        NoiseCoupling::Spin2 => Coupling::SPIN2_ONLY,
    }
}

fn realization(
    cfg: &ScenarioConfig,
    seed: Option<u64>,
    dimension: usize,
) -> Result<Option<(NoiseRealization, Coupling)>, CliError> {
    let Some(n) = &cfg.noise else { return Ok(None) };
    let seed = seed.ok_or_else(|| CliError::config("noise needs a seed"))?;
    let components = if dimension == 2 { 3 } else { 6 };
    let params = NoiseParams::for_window(n.omega_s_sq, n.tau_s, cfg.integrator.t_final, seed, components)
        .map_err(from_core)?;
    let r = synthesize(&params).map_err(from_core)?;
    Ok(Some((r, coupling(cfg, dimension))))
}

/// Runs the integrator and turns every sample into a row. A divergence is
/// returned alongside the rows gathered so far.
fn stream<const N: usize>(
    psi0: &StateVector<N>,
    base: &HermitianOperator<N>,
    noise: Option<&(NoiseRealization, Coupling)>,
    rule: &TargetRule<N>,
    settings: &EvolutionSettings,
    row: impl Fn(f64, &Ket<N>) -> Vec<f64>,
) -> (Vec<Vec<f64>>, Result<RunSummary, CliError>) {
    let mut rows = Vec::with_capacity(settings.n_steps() / settings.stride + 2);
    let mut bad_row = None;
    let on_sample = |t: f64, k: &Ket<N>| {
        let r = row(t, k);
        if r.iter().any(|v| !v.is_finite()) {
            bad_row = Some(t);
            return ControlFlow::Break(());
        }
        rows.push(r);
        ControlFlow::Continue(())
    };
    let result = match noise {
        None => evolve_with(psi0, base, rule, settings, on_sample),
        Some((r, c)) => {
            let provider = |t: f64| noisy_hamiltonian(base, r, t, c);
            evolve_with(psi0, &provider, rule, settings, on_sample)
        }
    };
    let result = match (result, bad_row) {
        (_, Some(t)) => Err(CliError::Divergence(format!("non-finite observable at t = {t}"))),
        (r, None) => r.map_err(from_core),
    };
    (rows, result)
}

/// Mean of `column` over the rows after the transient.
fn time_average(rows: &[Vec<f64>], column: usize, transient_fraction: f64) -> f64 {
    let start = (rows.len() as f64 * transient_fraction).ceil() as usize;
    let tail = &rows[start.min(rows.len().saturating_sub(1))..];
    tail.iter().map(|r| r[column]).sum::<f64>() / tail.len() as f64
}

fn finish(
    outcome: &mut MemberOutcome,
    rows: Vec<Vec<f64>>,
    result: Result<RunSummary, CliError>,
) -> Result<Option<RunSummary>, CliError> {
    outcome.rows = rows;
    match result {
        Ok(s) => {
            outcome.summary.insert("steps".into(), json!(s.steps));
            outcome.summary.insert("guarded_steps".into(), json!(s.guarded_steps));
            Ok(Some(s))
        }
        Err(CliError::Divergence(msg)) => {
            outcome.failure = Some(msg);
            Ok(None)
        }
        Err(e) => Err(e),
    }
}

fn vec_json(v: &Vec3) -> Value {
    json!(v.0)
}

/// Runs member `seed` of `cfg`. Configuration problems found at run time
/// are errors; a diverging integration is reported in the outcome.
pub fn run_member(cfg: &ScenarioConfig, seed: Option<u64>) -> Result<MemberOutcome, CliError> {
    let mut out = MemberOutcome::default();
    if let Some(s) = seed {
        out.summary.insert("seed".into(), json!(s));
    }
    match &cfg.model {
        Model::OneSpinFixedPoint(m) => one_spin_fixed_point(cfg, m, seed, &mut out)?,
        Model::Thermalization(m) => thermalization(cfg, m, seed, &mut out)?,
        Model::Disentangle(m) => disentangle(cfg, m, seed, &mut out)?,
        Model::Butterfly(m) => butterfly(cfg, m, &mut out)?,
        Model::DrivenLc(m) => driven_lc(cfg, m, seed, &mut out)?,
        Model::Custom(m) => match m.dimension {
            2 => custom::<2>(cfg, m, seed, &mut out, ONE_SPIN_COLUMNS, one_spin_row)?,
            _ => custom::<4>(cfg, m, seed, &mut out, TWO_SPIN_COLUMNS, two_spin_row)?,
        },
    }
    Ok(out)
}

fn one_spin_setup(
    omega: [f64; 3],
    s_hat: [f64; 3],
    gamma_d: f64,
    initial: [f64; 3],
) -> Result<(OneSpinParams, StateVector<2>), CliError> {
    let p = OneSpinParams::new(vec3(omega), vec3(s_hat), gamma_d).map_err(from_core)?;
    let psi0 = state_from_bloch(&vec3(initial)).map_err(from_core)?;
    Ok((p, psi0))
}

fn omega_hat(p: &OneSpinParams) -> Vec3 {
    p.omega.normalized().unwrap_or(Vec3::Z)
}

fn kpar_mean(cfg: &ScenarioConfig, rows: &[Vec<f64>], w: &Vec3) -> f64 {
    let f = cfg.analysis.transient_fraction;
    w.x() * time_average(rows, 1, f) + w.y() * time_average(rows, 2, f) + w.z() * time_average(rows, 3, f)
}

fn one_spin_fixed_point(
    cfg: &ScenarioConfig,
    m: &OneSpinModel,
    seed: Option<u64>,
    out: &mut MemberOutcome,
) -> Result<(), CliError> {
    let (p, psi0) = one_spin_setup(m.omega, m.s_hat, m.gamma_d, m.initial)?;
    let noise = realization(cfg, seed, 2)?;
    let rule = TargetRule::fixed(p.target()).map_err(from_core)?;
    let (rows, result) =
        stream(&psi0, &pauli_dot(m.omega), noise.as_ref(), &rule, &settings(cfg, m.gamma_d)?, one_spin_row);
    out.columns = ONE_SPIN_COLUMNS;
    finish(out, rows, result)?;
    let Some(last) = out.rows.last() else { return Ok(()) };
    let k = Vec3::new(last[1], last[2], last[3]);
    let ratio = m.gamma_d / p.omega.norm();
    let residual = bloch_rhs(&k, &p, cfg.integrator.guard_eps).map(|d| d.norm()).unwrap_or(f64::NAN);
    let s = &mut out.summary;
    s.insert("gamma_over_omega".into(), json!(ratio));
    s.insert("final_k".into(), vec_json(&k));
    s.insert("final_residual".into(), json!(residual));
    let mut weak_angle = f64::NAN;
    if let Ok(weak) = fixed_point_weak(&p) {
        let nearest = weak.into_iter().min_by(|a, b| k.angle_to(a).total_cmp(&k.angle_to(b))).unwrap();
        weak_angle = k.angle_to(&nearest);
        s.insert("weak_prediction".into(), vec_json(&nearest));
        s.insert("angle_to_weak_prediction".into(), json!(weak_angle));
    }
    let mut strong_angle = f64::NAN;
    if let Ok(strong) = fixed_point_strong(&p) {
        strong_angle = k.angle_to(&strong);
        s.insert("strong_prediction".into(), vec_json(&strong));
        s.insert("angle_to_strong_prediction".into(), json!(strong_angle));
    }
    let kpar = kpar_mean(cfg, &out.rows, &omega_hat(&p));
    out.metrics = vec![
        ("final_k_x", k.x()),
        ("final_k_y", k.y()),
        ("final_k_z", k.z()),
        ("final_residual", residual),
        ("angle_to_weak_prediction", weak_angle),
        ("angle_to_strong_prediction", strong_angle),
        ("kpar_mean", kpar),
    ];
    Ok(())
}

fn thermalization(
    cfg: &ScenarioConfig,
    m: &ThermalModel,
    seed: Option<u64>,
    out: &mut MemberOutcome,
) -> Result<(), CliError> {
    let omega = [0.0, 0.0, m.omega_0];
    let (p, psi0) = one_spin_setup(omega, m.s_hat, m.gamma_d, m.initial)?;
    let n = cfg.noise.as_ref().ok_or_else(|| CliError::config("thermalization needs noise"))?;
    let noise = realization(cfg, seed, 2)?;
    let rule = TargetRule::fixed(p.target()).map_err(from_core)?;
    let (rows, result) =
        stream(&psi0, &pauli_dot(omega), noise.as_ref(), &rule, &settings(cfg, m.gamma_d)?, one_spin_row);
    out.columns = ONE_SPIN_COLUMNS;
    finish(out, rows, result)?;
    let tp = ThermalParams::new(m.omega_0, n.omega_s_sq, n.tau_s).map_err(from_core)?;
    let rates = relaxation_rates(&tp);
    let t_s1 = rates.t1();
    let predicted = thermal_steady_state(m.gamma_d, t_s1);
    let s = &mut out.summary;
    s.insert("rate_longitudinal".into(), json!(rates.longitudinal));
    s.insert("rate_transverse".into(), json!(rates.transverse));
    s.insert("t_s1".into(), json!(t_s1));
    s.insert("predicted_kpar".into(), json!(predicted));
    s.insert("predicted_reduced_temperature".into(), json!(reduced_temperature(m.gamma_d, t_s1)));
    if out.rows.is_empty() {
        return Ok(());
    }
    let kpar = kpar_mean(cfg, &out.rows, &omega_hat(&p));
    // Invert k∥ = −tanh(1/(2T)) for the temperature the run actually reached.
    let observed_t = if kpar < 0.0 && kpar > -1.0 { 0.5 / (-kpar).atanh() } else { f64::NAN };
    s.insert("kpar_mean".into(), json!(kpar));
    s.insert("observed_reduced_temperature".into(), json!(observed_t));
    out.metrics = vec![("kpar_mean", kpar), ("observed_reduced_temperature", observed_t)];
    Ok(())
}

fn two_spin_metrics(out: &mut MemberOutcome, initial: &TwoSpinObservables) {
    let s = &mut out.summary;
    s.insert("initial_e_abs".into(), json!(initial.e_abs));
    s.insert("initial_s1".into(), vec_json(&initial.s1));
    s.insert("initial_s2".into(), vec_json(&initial.s2));
    let Some(last) = out.rows.last() else { return };
    let s1 = Vec3::new(last[1], last[2], last[3]);
    let s2 = Vec3::new(last[4], last[5], last[6]);
    let e_abs = last[8];
    let max_rise = out.rows.windows(2).map(|w| w[1][8] - w[0][8]).fold(0.0, f64::max);
    let below = out.rows.iter().find(|r| r[8] < 1e-3).map(|r| r[0]);
    s.insert("final_s1".into(), vec_json(&s1));
    s.insert("final_s2".into(), vec_json(&s2));
    s.insert("final_e_abs".into(), json!(e_abs));
    s.insert("max_e_abs_rise".into(), json!(max_rise));
    s.insert("time_e_abs_below_1e-3".into(), json!(below));
    out.metrics = vec![
        ("final_e_abs", e_abs),
        ("max_e_abs_rise", max_rise),
        ("final_s1_norm", s1.norm()),
        ("final_s2_norm", s2.norm()),
    ];
}

fn disentangle(
    cfg: &ScenarioConfig,
    m: &DisentangleModel,
    seed: Option<u64>,
    out: &mut MemberOutcome,
) -> Result<(), CliError> {
    let psi0 = match (m.entanglement, &m.initial) {
        (Some(e), _) => {
            let seed = seed.ok_or_else(|| CliError::config("a random start needs a seed"))?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(INITIAL_STATE_STREAM);
            random_state_with_entanglement(&mut rng, e).map_err(from_core)?
        }
        (None, Some(amps)) => TwoSpinState::from_ket(&Ket(amplitudes::<4>(amps, "model.initial")?))
            .map_err(from_core)?,
        (None, None) => return Err(CliError::config("disentangle needs a start state")),
    };
    let noise = realization(cfg, seed, 4)?;
    let rule = TargetRule::SpinFlip;
    let (rows, result) = stream(
        psi0.state(),
        &HermitianOperator::zero(),
        noise.as_ref(),
        &rule,
        &settings(cfg, m.gamma_d)?,
        two_spin_row,
    );
    out.columns = TWO_SPIN_COLUMNS;
    finish(out, rows, result)?;
    two_spin_metrics(out, &TwoSpinObservables::of(psi0.as_ket()));
    Ok(())
}

fn butterfly(cfg: &ScenarioConfig, m: &ButterflyModel, out: &mut MemberOutcome) -> Result<(), CliError> {
    if cfg.noise.is_some() {
        return Err(CliError::config("butterfly runs are noiseless; remove `[noise]`"));
    }
    let psi_p = TwoSpinState::from_ket(&Ket(amplitudes::<4>(&m.psi_p, "model.psi_p")?)).map_err(from_core)?;
    let base = match m.base {
        BaseState::Singlet => BellBase::Singlet,
        BaseState::Triplet => BellBase::Triplet,
    };
    out.columns = TWO_SPIN_COLUMNS;
    let run = match butterfly_run(m.epsilon, &psi_p, base, &settings(cfg, m.gamma_d)?) {
        Ok(run) => run,
        Err(e) => {
            if let CliError::Divergence(msg) = from_core(e.clone()) {
                out.failure = Some(msg);
                return Ok(());
            }
            return Err(from_core(e));
        }
    };
    out.rows = run.trajectory.times.iter().zip(&run.trajectory.states).map(|(t, k)| two_spin_row(*t, k)).collect();
    let r = &run.report;
    // Largest angle between ⟨S₁⟩ and −⟨S₂⟩ along the run.
    let antiparallel = out
        .rows
        .iter()
        .map(|row| Vec3::new(row[1], row[2], row[3]).angle_to(&-Vec3::new(row[4], row[5], row[6])))
        .fold(0.0, f64::max);
    let drift = total_sz_drift(&run.trajectory);
    two_spin_metrics(out, &r.initial);
    let s = &mut out.summary;
    s.insert("steps".into(), json!(settings(cfg, m.gamma_d)?.n_steps()));
    s.insert("guarded_steps".into(), json!(run.trajectory.guarded_steps));
    s.insert("epsilon".into(), json!(r.epsilon));
    s.insert("initial_spin_sum".into(), json!((r.initial.s1 + r.initial.s2).norm()));
    s.insert("initial_s_plus".into(), json!(r.initial_s_plus.map(|c| [c.re, c.im])));
    s.insert("predicted_s_plus".into(), json!(r.predicted_s_plus.map(|p| p.map(|c| [c.re, c.im]))));
    s.insert("predicted_s_z".into(), json!(r.predicted_s_z));
    s.insert("s1_direction_change".into(), json!(r.s1_direction_change));
    s.insert("max_antiparallel_deviation".into(), json!(antiparallel));
    s.insert("total_sz_drift".into(), json!(drift));
    s.insert("guarded_stationary".into(), json!(r.guarded_stationary));
    out.metrics.extend([
        ("initial_spin_sum", (r.initial.s1 + r.initial.s2).norm()),
        ("s1_direction_change", r.s1_direction_change),
        ("max_antiparallel_deviation", antiparallel),
        ("total_sz_drift", drift),
    ]);
    Ok(())
}

fn driven_lc(
    cfg: &ScenarioConfig,
    m: &DrivenModel,
    seed: Option<u64>,
    out: &mut MemberOutcome,
) -> Result<(), CliError> {
    let p = DrivenParams::new(m.omega_a, m.omega_1, m.delta, m.g).map_err(from_core)?;
    let pert = Ket(amplitudes::<4>(&m.perturbation, "model.perturbation")?);
    let psi0 = TwoSpinState::from_ket(&(*down_down().as_ket() + pert * m.epsilon)).map_err(from_core)?;
    let noise = realization(cfg, seed, 4)?;
    let (rows, result) = stream(
        psi0.state(),
        &omega_matrix(&p),
        noise.as_ref(),
        &TargetRule::SpinFlip,
        &settings(cfg, m.gamma_d)?,
        two_spin_row,
    );
    out.columns = TWO_SPIN_COLUMNS;
    let summary = finish(out, rows, result)?;
    let s = &mut out.summary;
    s.insert("rabi_frequency".into(), json!(rabi_frequency(&p)));
    s.insert("hartmann_hahn_mismatch".into(), json!(hartmann_hahn_mismatch(&p)));
    if summary.is_none() {
        return Ok(());
    }
    // Only the evenly spaced samples; a trailing partial stride is dropped.
    let n_steps = (cfg.integrator.t_final / cfg.integrator.dt).round() as usize;
    let even = n_steps / cfg.sample_stride + 1;
    let s1z: Vec<f64> = out.rows.iter().take(even).map(|r| r[3]).collect();
    let lc_cfg = LimitCycleConfig {
        transient_fraction: cfg.analysis.transient_fraction,
        amplitude_floor: cfg.analysis.amplitude_floor,
        amplitude_tolerance: cfg.analysis.amplitude_tolerance,
        ..LimitCycleConfig::default()
    };
    let sample_dt = cfg.integrator.dt * cfg.sample_stride as f64;
    let s1z_mean = time_average(&out.rows, 3, cfg.analysis.transient_fraction);
    match detect_limit_cycle(&s1z, sample_dt, &lc_cfg) {
        Ok(lc) => {
            let half_ratio = (lc.half_amplitudes[0] - lc.half_amplitudes[1]).abs()
                / lc.half_amplitudes[0].max(lc.half_amplitudes[1]);
            out.summary.insert(
                "limit_cycle".into(),
                json!({
                    "detected": lc.detected,
                    "period": lc.period,
                    "amplitude": lc.amplitude,
                    "transient_end": lc.transient_end,
                    "half_amplitudes": lc.half_amplitudes,
                    "half_amplitude_mismatch": half_ratio,
                    "dominant_bins": lc.dominant_bins,
                }),
            );
            out.metrics = vec![
                ("lc_detected", if lc.detected { 1.0 } else { 0.0 }),
                ("lc_period", lc.period),
                ("lc_amplitude", lc.amplitude),
                ("lc_half_amplitude_mismatch", half_ratio),
                ("s1z_mean", s1z_mean),
            ];
        }
        Err(e) => {
            out.summary.insert("limit_cycle".into(), json!({ "error": e.to_string() }));
            out.metrics = vec![("s1z_mean", s1z_mean)];
        }
    }
    Ok(())
}

fn matrix<const N: usize>(rows: &[Vec<Amp>]) -> Result<Matrix<N>, CliError> {
    if rows.len() != N || rows.iter().any(|r| r.len() != N) {
        return Err(CliError::config(format!("`model.hamiltonian` must be {N}×{N}")));
    }
    Ok(Matrix::from_fn(|i, j| C64::new(rows[i][j][0], rows[i][j][1])))
}

fn custom<const N: usize>(
    cfg: &ScenarioConfig,
    m: &CustomModel,
    seed: Option<u64>,
    out: &mut MemberOutcome,
    columns: &'static [&'static str],
    row: fn(f64, &Ket<N>) -> Vec<f64>,
) -> Result<(), CliError> {
    let h = HermitianOperator::new(matrix::<N>(&m.hamiltonian)?).map_err(from_core)?;
    let rule = match &m.target {
        TargetSpec::Fixed(amps) => TargetRule::fixed(Ket(amplitudes::<N>(amps, "model.target")?)),
        TargetSpec::Rule(_) => TargetRule::spin_flip(),
    }
    .map_err(from_core)?;
    let psi0 = StateVector::from_ket(Ket(amplitudes::<N>(&m.initial, "model.initial")?)).map_err(from_core)?;
    let noise = realization(cfg, seed, N)?;
    let (rows, result) = stream(&psi0, &h, noise.as_ref(), &rule, &settings(cfg, m.gamma_d)?, row);
    out.columns = columns;
    finish(out, rows, result)?;
    let Some(last) = out.rows.last() else { return Ok(()) };
    let f = cfg.analysis.transient_fraction;
    let names: &[&'static str] = if N == 2 {
        &["k_x_mean", "k_y_mean", "k_z_mean"]
    } else {
        &["S1x_mean", "S1y_mean", "S1z_mean", "S2x_mean", "S2y_mean", "S2z_mean", "P_mean", "|E|_mean", "R_mean"]
    };
    out.metrics = names.iter().enumerate().map(|(i, n)| (*n, time_average(&out.rows, i + 1, f))).collect();
    out.summary.insert("final_row".into(), json!(last));
    Ok(())
}
