//! Strang split-step Fourier solver for the Schrödinger-Langevin equation
//!
//! ```text
//! iħ∂ₜψ + (ħ²/2)Δψ = λψ log|ψ|² + μSψ,    ψ = |ψ| e^{iS/ħ},
//! ```
//!
//! used as an independent check of the inviscid fluid solver through the
//! Madelung transform. The phase `S` is carried as a continuous lift so the
//! Langevin term never needs a complex logarithm.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::{complex_gradient, gradient_potential, ScalarField, TorusGrid};
use crate::state::{floored, madelung, Params, WaveFunction};

fn wrap(angle: f64) -> f64 {
    let a = (angle + PI).rem_euclid(2.0 * PI) - PI;
    if a == -PI {
        PI
    } else {
        a
    }
}

/// A phase lift for `wave`: `ħ` times a continuous branch of `arg ψ`.
///
/// The branch is built from the Madelung velocity (so it is continuous and
/// winding-free), shifted by the constant that best matches `arg ψ`.
pub fn initial_phase(wave: &WaveFunction, params: &Params) -> Result<Vec<f64>> {
    let fluid = madelung(wave, params)?;
    let s = gradient_potential(&fluid.u);
    let mut acc = Complex64::default();
    for (psi, sv) in wave.psi.iter().zip(s.values()) {
        acc += psi * Complex64::from_polar(1.0, -sv / params.hbar);
    }
    let shift = params.hbar * acc.arg();
    let mut phase: Vec<f64> = s.values().iter().map(|v| v + shift).collect();
    // absorb the O(roundoff) mismatch so ψ and S agree exactly in angle
    for (p, psi) in phase.iter_mut().zip(&wave.psi) {
        *p += params.hbar * wrap(psi.arg() - *p / params.hbar);
    }
    Ok(phase)
}

fn lift(old: &[f64], psi: &[Complex64], hbar: f64) -> Vec<f64> {
    old.iter().zip(psi).map(|(s, p)| s + hbar * wrap(p.arg() - s / hbar)).collect()
}

/// Exact free evolution `ψ̂ₖ ← e^{−iħ|k|²dt/2} ψ̂ₖ`.
pub fn kinetic_substep(wave: &WaveFunction, dt: f64, params: &Params) -> WaveFunction {
    let grid = wave.grid();
    let mut data = wave.psi.clone();
    grid.forward(&mut data);
    for (idx, c) in data.iter_mut().enumerate() {
        let k = grid.wavevector(idx);
        let k2 = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64;
        *c *= Complex64::from_polar(1.0, -0.5 * params.hbar * k2 * dt);
    }
    grid.inverse(&mut data);
    let phase = wave.phase.as_ref().map(|s| lift(s, &data, params.hbar));
    WaveFunction { phase, ..WaveFunction::new(grid, data, wave.time) }
}

/// Exact pointwise evolution under `S′ = −λ log ρ − μS` with `|ψ|` frozen.
pub fn potential_substep(wave: &WaveFunction, dt: f64, params: &Params) -> Result<WaveFunction> {
    let rho = floored(&wave.density(), params.density_floor)?;
    let s0 = match &wave.phase {
        Some(s) => s.clone(),
        None => initial_phase(wave, params)?,
    };
    let (decay, gain) = if params.mu > 0.0 {
        let e = (-params.mu * dt).exp();
        (e, -(params.lambda / params.mu) * (1.0 - e))
    } else {
        (1.0, -params.lambda * dt)
    };
    let phase: Vec<f64> =
        s0.iter().zip(rho.values()).map(|(s, r)| s * decay + gain * r.ln()).collect();
    let psi = wave
        .psi
        .iter()
        .zip(&phase)
        .map(|(p, s)| Complex64::from_polar(p.norm(), s / params.hbar))
        .collect();
    Ok(WaveFunction { phase: Some(phase), ..WaveFunction::new(wave.grid(), psi, wave.time) })
}

/// One Strang step: half kinetic, full potential, half kinetic.
pub fn strang_step(wave: &WaveFunction, dt: f64, params: &Params) -> Result<WaveFunction> {
    let half = kinetic_substep(wave, 0.5 * dt, params);
    let mid = potential_substep(&half, dt, params)?;
    let mut out = kinetic_substep(&mid, 0.5 * dt, params);
    out.time = wave.time + dt;
    Ok(out)
}

/// Wave functions along a split-step run.
#[derive(Clone, Debug, PartialEq)]
pub struct WaveTrajectory {
    /// `(step index, wave)`, initial and final always present.
    pub snapshots: Vec<(usize, WaveFunction)>,
    pub failure: Option<Error>,
}

impl WaveTrajectory {
    pub fn final_wave(&self) -> &WaveFunction {
        &self.snapshots.last().expect("initial snapshot").1
    }
}

/// Integrates to `t_end` with Strang splitting.
pub fn run_sl(psi0: &WaveFunction, params: &Params, dt: f64, t_end: f64) -> Result<WaveTrajectory> {
    run_sl_recorded(psi0, params, dt, t_end, None)
}

/// [`run_sl`] keeping a snapshot every `every` steps.
pub fn run_sl_recorded(
    psi0: &WaveFunction,
    params: &Params,
    dt: f64,
    t_end: f64,
    every: Option<usize>,
) -> Result<WaveTrajectory> {
    if !(dt > 0.0) || !(t_end > 0.0) {
        return Err(Error::Param(format!("need dt > 0 and t_end > 0, got {dt}, {t_end}")));
    }
    if every == Some(0) {
        return Err(Error::Param("snapshot interval must be >= 1".into()));
    }
    let mut wave = psi0.clone();
    if wave.phase.is_none() {
        wave.phase = Some(initial_phase(&wave, params)?);
    }
    let steps = ((t_end / dt) - 1e-9).ceil().max(1.0) as usize;
    let t0 = wave.time;
    let mut traj = WaveTrajectory { snapshots: vec![(0, wave.clone())], failure: None };
    let mut done = 0;
    for i in 1..=steps {
        let h = (i as f64 * dt).min(t_end) - ((i - 1) as f64 * dt).min(t_end);
        match strang_step(&wave, h, params) {
            Ok(mut w) => {
                w.time = t0 + (i as f64 * dt).min(t_end);
                wave = w;
                done = i;
            }
            Err(e) => {
                traj.failure = Some(e);
                break;
            }
        }
        if every.is_some_and(|k| i % k == 0) && i != steps {
            traj.snapshots.push((i, wave.clone()));
        }
    }
    if traj.snapshots.last().map(|s| s.0) != Some(done) {
        traj.snapshots.push((done, wave));
    }
    Ok(traj)
}

/// `∂ₜψ = (iħ/2)Δψ − (i/ħ)(λ log ρ + μS)ψ`.
pub fn sl_generator(wave: &WaveFunction, params: &Params) -> Result<Vec<Complex64>> {
    let grid = wave.grid();
    let rho = floored(&wave.density(), params.density_floor)?;
    let phase = match &wave.phase {
        Some(s) => s.clone(),
        None => initial_phase(wave, params)?,
    };
    let mut lap = wave.psi.clone();
    grid.forward(&mut lap);
    for (idx, c) in lap.iter_mut().enumerate() {
        let k = grid.wavevector(idx);
        *c *= -((k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64);
    }
    grid.inverse(&mut lap);
    let i = Complex64::i();
    Ok(wave
        .psi
        .iter()
        .zip(&lap)
        .zip(rho.values().iter().zip(&phase))
        .map(|((p, l), (r, s))| 0.5 * i * params.hbar * l - i / params.hbar * (params.lambda * r.ln() + params.mu * s) * p)
        .collect())
}

/// Rates `(∂ₜρ, ∂ₜ(ρu))` induced by a wave-function rate `dpsi`.
pub fn madelung_rates(
    wave: &WaveFunction,
    dpsi: &[Complex64],
    hbar: f64,
) -> (ScalarField, Vec<ScalarField>) {
    let grid: &TorusGrid = wave.grid();
    let drho = ScalarField::from_vec(
        grid,
        wave.psi.iter().zip(dpsi).map(|(p, d)| 2.0 * (p.conj() * d).re).collect(),
    );
    let grad = complex_gradient(grid, &wave.psi);
    let grad_d = complex_gradient(grid, dpsi);
    let dm = grad
        .iter()
        .zip(&grad_d)
        .map(|(g, gd)| {
            let vals = (0..grid.len())
                .map(|j| hbar * (dpsi[j].conj() * g[j] + wave.psi[j].conj() * gd[j]).im)
                .collect();
            ScalarField::from_vec(grid, vals)
        })
        .collect();
    (drho, dm)
}
