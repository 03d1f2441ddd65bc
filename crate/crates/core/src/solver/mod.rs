//! Time integration of the regularised viscous system and the augmented
//! system on the Fourier Galerkin space.

mod imex;
mod rhs;

use serde::{Deserialize, Serialize};

pub use rhs::{
    aug_conserved, aug_primitive, reg_conserved, reg_primitive, rhs_aug_nslk, rhs_reg_nslk,
    Conserved,
};

use crate::error::{Error, Result};
use crate::functionals::{
    aug_energy, b_integrand, bd_entropy_nslk, bd_entropy_reg, bohm_inequality_ratio,
    csiszar_kullback_gap, drag_mismatch_rate, energy_nslk, energy_reg, rel_entropy_elk,
    rel_entropy_nslk, EntropyReport, NslkAccumulators, StrongReference, TrapezoidAccumulator,
};
use crate::spectral::{gradient, integrate};
use crate::state::{augment, deaugment, floored, AugmentedState, FluidState, Params};

/// Any field exceeding this max-norm aborts a run.
pub const BLOWUP_THRESHOLD: f64 = 1e8;

/// Stability factor of classical RK4 against the fastest explicit rate.
pub const RK4_CFL: f64 = 2.5;
/// Stability factor of the Heun half of the IMEX scheme.
pub const IMEX_CFL: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Rk4,
    ImexCn,
}

fn default_true() -> bool {
    true
}

fn default_one() -> usize {
    1
}

fn default_floor() -> f64 {
    crate::state::DEFAULT_DENSITY_FLOOR
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub dt: f64,
    pub t_end: f64,
    pub scheme: Scheme,
    #[serde(default = "default_true")]
    pub dealias: bool,
    #[serde(default = "default_one")]
    pub report_every: usize,
    #[serde(default = "default_floor")]
    pub density_floor: f64,
    /// Keep a snapshot every this many steps; initial and final states are
    /// always kept.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot_every: Option<usize>,
}

impl SolverConfig {
    pub fn new(dt: f64, t_end: f64, scheme: Scheme) -> Self {
        Self {
            dt,
            t_end,
            scheme,
            dealias: true,
            report_every: 1,
            density_floor: default_floor(),
            snapshot_every: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Param(format!("dt must be > 0, got {}", self.dt)));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::Param(format!("t_end must be > 0, got {}", self.t_end)));
        }
        if self.report_every == 0 {
            return Err(Error::Param("report_every must be >= 1".into()));
        }
        if self.snapshot_every == Some(0) {
            return Err(Error::Param("snapshot_every must be >= 1".into()));
        }
        if !(self.density_floor > 0.0) {
            return Err(Error::Param("density_floor must be > 0".into()));
        }
        Ok(())
    }

    /// Number of steps; the last one is shortened to land on `t_end`.
    pub fn steps(&self) -> usize {
        ((self.t_end / self.dt) - 1e-9).ceil().max(1.0) as usize
    }

    fn time_of(&self, step: usize) -> f64 {
        (step as f64 * self.dt).min(self.t_end)
    }
}

/// State of whichever system is being integrated.
#[derive(Clone, Debug, PartialEq)]
pub enum SystemState {
    Reg(FluidState),
    Aug(AugmentedState),
}

impl SystemState {
    pub fn time(&self) -> f64 {
        match self {
            Self::Reg(s) => s.time,
            Self::Aug(a) => a.time,
        }
    }

    pub fn mass(&self) -> f64 {
        match self {
            Self::Reg(s) => s.mass(),
            Self::Aug(a) => a.mass(),
        }
    }

    /// Density and velocity, recovering `u` from `w` for augmented states.
    pub fn fluid(&self, params: &Params) -> Result<FluidState> {
        match self {
            Self::Reg(s) => Ok(s.clone()),
            Self::Aug(a) => deaugment(a, params),
        }
    }

    fn conserved(&self) -> Conserved {
        match self {
            Self::Reg(s) => reg_conserved(s),
            Self::Aug(a) => aug_conserved(a),
        }
    }

    fn rebuild(&self, y: &Conserved, time: f64, floor: f64) -> Result<Self> {
        match self {
            Self::Reg(_) => reg_primitive(y, time, floor).map(Self::Reg),
            Self::Aug(_) => aug_primitive(y, time, floor).map(Self::Aug),
        }
    }
}

fn check_params(state: &SystemState, params: &Params, config: &SolverConfig) -> Result<()> {
    config.validate()?;
    match state {
        SystemState::Reg(_) => params.validate(),
        SystemState::Aug(_) => {
            if config.scheme == Scheme::ImexCn {
                return Err(Error::Param(
                    "imex_cn is available for reg_nslk only; use rk4 for augmented runs".into(),
                ));
            }
            params.validate_augmented()
        }
    }
}

/// Fastest rate among the terms a scheme treats explicitly, bounded with the
/// largest wavenumber the 2/3 filter keeps (or the Nyquist-free maximum
/// without filtering).
pub fn explicit_rate(state: &SystemState, params: &Params, config: &SolverConfig) -> Result<f64> {
    let p = params;
    let fluid = state.fluid(p)?;
    let grid = fluid.grid().clone();
    let k = if config.dealias { grid.dealias_cutoff() } else { grid.nyquist() - 1 } as f64;
    let k2 = k * k;
    let dim = grid.dim() as f64;
    let rho = floored(&fluid.rho, p.density_floor)?;
    let (rmin, rmax) = (rho.min(), rho.max());
    let umax = fluid.u.max_norm();
    let mut rate = dim.sqrt() * umax * k + p.mu + 2.0 * p.nu * k2 * dim;
    if p.r0 != 0.0 {
        rate += p.r0 / rmin;
    }
    if p.r1 != 0.0 {
        rate += 3.0 * p.r1 * umax * umax;
    }
    if p.delta1 != 0.0 {
        let grad = gradient(&fluid.rho).max_norm();
        rate += p.delta1 * grad / rmin * k;
    }
    if p.eta1 != 0.0 {
        rate += (p.eta1 * p.alpha * rmin.powf(-p.alpha - 1.0)).sqrt() * k;
    }
    if config.scheme == Scheme::Rk4 {
        rate += dim.sqrt() * p.lambda.sqrt() * k + 0.5 * p.hbar * k2 * dim;
        if let SystemState::Reg(_) = state {
            rate += p.delta1 * k2 * dim
                + p.delta2 * k2 * k2 * dim * dim / rmin
                + (p.eta2 * rmax).sqrt() * (k2 * dim).powi(p.s as i32 + 1);
        }
    }
    Ok(rate)
}

/// Largest step the stability budget admits for this state.
pub fn stability_limit(state: &SystemState, params: &Params, config: &SolverConfig) -> Result<f64> {
    let c = match config.scheme {
        Scheme::Rk4 => RK4_CFL,
        Scheme::ImexCn => IMEX_CFL,
    };
    let rate = explicit_rate(state, params, config)?;
    Ok(if rate > 0.0 { c / rate } else { f64::INFINITY })
}

fn full_rhs(kind: &SystemState, y: &Conserved, params: &Params, dealias: bool) -> Result<Conserved> {
    match kind {
        SystemState::Reg(_) => rhs::reg_full(y, params, dealias),
        SystemState::Aug(_) => rhs::aug_full(y, params, dealias),
    }
}

fn rk4(kind: &SystemState, y: &Conserved, dt: f64, params: &Params, dealias: bool) -> Result<Conserved> {
    let k1 = full_rhs(kind, y, params, dealias)?;
    let mut y2 = y.clone();
    y2.axpy(0.5 * dt, &k1);
    let k2 = full_rhs(kind, &y2, params, dealias)?;
    let mut y3 = y.clone();
    y3.axpy(0.5 * dt, &k2);
    let k3 = full_rhs(kind, &y3, params, dealias)?;
    let mut y4 = y.clone();
    y4.axpy(dt, &k3);
    let k4 = full_rhs(kind, &y4, params, dealias)?;
    let mut acc = rhs::zeros_like(y);
    acc.axpy(1.0, &k1);
    acc.axpy(2.0, &k2);
    acc.axpy(2.0, &k3);
    acc.axpy(1.0, &k4);
    let mut out = y.clone();
    out.axpy(dt / 6.0, &acc);
    Ok(out)
}

fn advance(state: &SystemState, dt: f64, params: &Params, config: &SolverConfig) -> Result<SystemState> {
    let y = state.conserved();
    let next = match config.scheme {
        Scheme::Rk4 => rk4(state, &y, dt, params, config.dealias)?,
        Scheme::ImexCn => match state {
            SystemState::Reg(_) => imex::imex_step(&y, dt, params, config.dealias)?,
            SystemState::Aug(_) => {
                return Err(Error::Param("imex_cn is available for reg_nslk only".into()))
            }
        },
    };
    let time = state.time() + dt;
    let norm = next.max_abs();
    if !next.is_finite() || norm > BLOWUP_THRESHOLD {
        return Err(Error::Blowup { time, norm });
    }
    state.rebuild(&next, time, params.density_floor)
}

/// One step of size `config.dt`.
pub fn step(state: &SystemState, params: &Params, config: &SolverConfig) -> Result<SystemState> {
    let params = with_floor(params, config);
    check_params(state, &params, config)?;
    advance(state, config.dt, &params, config)
}

fn with_floor(params: &Params, config: &SolverConfig) -> Params {
    let mut p = params.clone();
    p.density_floor = config.density_floor;
    p
}

/// Supplies the smooth reference the relative entropy is measured against.
pub trait ReferenceSource {
    /// Reference at `time`; requested times are nondecreasing.
    fn reference_at(&mut self, time: f64) -> Result<StrongReference>;
}

/// Outcome of a run.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    /// `(step index, state)` pairs; always includes the initial state.
    pub snapshots: Vec<(usize, SystemState)>,
    pub reports: Vec<EntropyReport>,
    /// The error that stopped the run early, if any.
    pub failure: Option<Error>,
    pub steps_taken: usize,
}

impl Trajectory {
    pub fn completed(&self) -> bool {
        self.failure.is_none()
    }

    pub fn final_state(&self) -> &SystemState {
        &self.snapshots.last().expect("initial snapshot").1
    }
}

/// Running time integrals a run keeps against its reference.
#[derive(Default)]
struct Tracker {
    drag: TrapezoidAccumulator,
    nslk: NslkAccumulators,
    b: TrapezoidAccumulator,
}

impl Tracker {
    fn advance(&mut self, state: &SystemState, reference: &StrongReference, params: &Params) -> Result<()> {
        let fluid = state.fluid(params)?;
        match state {
            SystemState::Reg(s) => {
                self.drag.push(s.time, drag_mismatch_rate(&s.rho, &s.u, &reference.u));
            }
            SystemState::Aug(a) => self.nslk.push(a, reference),
        }
        let f = b_integrand(&fluid.rho, &fluid.u, reference, params.density_floor)?;
        self.b.push(state.time(), f);
        Ok(())
    }

    fn fill(
        &self,
        report: &mut EntropyReport,
        state: &SystemState,
        reference: &StrongReference,
        params: &Params,
    ) -> Result<()> {
        let (instant, total) = match state {
            SystemState::Reg(s) => {
                let vbar = gradient(&floored(&s.rho, params.density_floor)?.map(f64::ln))
                    .scaled(0.5 * params.hbar);
                rel_entropy_elk(s, &vbar, reference, params, &self.drag)?
            }
            SystemState::Aug(a) => rel_entropy_nslk(a, reference, params, &self.nslk)?,
        };
        report.rel_entropy_instant = Some(instant);
        report.rel_entropy_total = Some(total);
        report.b_accumulator = Some(self.b.value());
        report.ck_gap = Some(csiszar_kullback_gap(state_rho(state), &reference.r, params.density_floor)?);
        Ok(())
    }
}

fn state_rho(state: &SystemState) -> &crate::spectral::ScalarField {
    match state {
        SystemState::Reg(s) => &s.rho,
        SystemState::Aug(a) => &a.rho,
    }
}

/// Evaluates every functional that applies to `state`.
pub fn report_for(state: &SystemState, params: &Params) -> Result<EntropyReport> {
    let fluid = state.fluid(params)?;
    let mut r = EntropyReport { time: state.time(), mass: integrate(&fluid.rho), ..Default::default() };
    let (e, d) = energy_nslk(&fluid, params)?;
    r.energy_nslk = Some(e);
    r.dissipation_nslk = Some(d);
    let (be, bd) = bd_entropy_nslk(&fluid, params)?;
    r.bd_entropy = Some(be);
    r.bd_dissipation = Some(bd);
    let aug = match state {
        SystemState::Reg(s) => {
            let (er, dr) = energy_reg(s, params)?;
            r.energy_reg = Some(er);
            r.dissipation_reg = Some(dr);
            r.bd_entropy_reg = Some(bd_entropy_reg(s, params)?.0);
            if params.lambda_prime() > 0.0 && params.hbar_nu_sq() > 0.0 {
                Some(augment(s, params)?)
            } else {
                None
            }
        }
        SystemState::Aug(a) => Some(a.clone()),
    };
    if let Some(a) = aug {
        let (ae, ad) = aug_energy(&a, params)?;
        r.aug_energy = Some(ae);
        r.aug_dissipation = Some(ad);
    }
    r.bohm_ratio = bohm_inequality_ratio(&fluid.rho, params.density_floor).ok();
    Ok(r)
}

/// Integrates from `initial` to `config.t_end`.
///
/// Invalid parameters or configuration fail up front. Numerical failures
/// (vacuum, blow-up, a stalled implicit solve) end the run early and are
/// returned in [`Trajectory::failure`] together with everything computed
/// before them.
pub fn run(
    initial: SystemState,
    params: &Params,
    config: &SolverConfig,
    mut reference: Option<&mut dyn ReferenceSource>,
) -> Result<Trajectory> {
    let params = with_floor(params, config);
    let params = &params;
    check_params(&initial, params, config)?;
    let limit = stability_limit(&initial, params, config)?;
    if config.dt > limit {
        return Err(Error::Param(format!(
            "dt = {} exceeds the stability budget {limit:e} of the {:?} scheme",
            config.dt, config.scheme
        )));
    }
    if let Some(src) = reference.as_deref_mut() {
        let r0 = src.reference_at(initial.time())?;
        let (left, right) = (initial.mass(), r0.mass());
        if (left - right).abs() > crate::functionals::MASS_TOLERANCE * left.abs().max(right.abs()) {
            return Err(Error::MassMismatch { left, right });
        }
    }

    let steps = config.steps();
    let t0 = initial.time();
    let mut traj = Trajectory { snapshots: vec![(0, initial.clone())], reports: Vec::new(), failure: None, steps_taken: 0 };
    let mut tracker = Tracker::default();
    let mut state = initial;

    let observe = |state: &SystemState,
                   index: usize,
                   tracker: &mut Tracker,
                   reference: &mut Option<&mut dyn ReferenceSource>,
                   reports: &mut Vec<EntropyReport>|
     -> Result<()> {
        let due = index % config.report_every == 0 || index == steps;
        match reference.as_deref_mut() {
            Some(src) => {
                let r = src.reference_at(state.time())?;
                tracker.advance(state, &r, params)?;
                if due {
                    let mut rep = report_for(state, params)?;
                    tracker.fill(&mut rep, state, &r, params)?;
                    reports.push(rep);
                }
            }
            None => {
                if due {
                    reports.push(report_for(state, params)?);
                }
            }
        }
        Ok(())
    };

    if let Err(e) = observe(&state, 0, &mut tracker, &mut reference, &mut traj.reports) {
        traj.failure = Some(e);
        return Ok(traj);
    }
    for index in 1..=steps {
        let dt = config.time_of(index) - config.time_of(index - 1);
        let next = advance(&state, dt, params, config).and_then(|mut s| {
            // pin the clock to the grid of step times
            let t = t0 + config.time_of(index);
            match &mut s {
                SystemState::Reg(f) => f.time = t,
                SystemState::Aug(a) => a.time = t,
            }
            Ok(s)
        });
        state = match next {
            Ok(s) => s,
            Err(e) => {
                traj.failure = Some(e);
                break;
            }
        };
        traj.steps_taken = index;
        if let Err(e) = observe(&state, index, &mut tracker, &mut reference, &mut traj.reports) {
            traj.failure = Some(e);
            traj.snapshots.push((index, state.clone()));
            return Ok(traj);
        }
        let keep = config.snapshot_every.is_some_and(|k| index % k == 0);
        if keep && index != steps {
            traj.snapshots.push((index, state.clone()));
        }
    }
    if traj.snapshots.last().map(|s| s.0) != Some(traj.steps_taken) {
        traj.snapshots.push((traj.steps_taken, state));
    }
    Ok(traj)
}
