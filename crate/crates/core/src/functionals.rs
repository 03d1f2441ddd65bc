//! Energies, dissipations, BD entropies, relative entropies and the residual
//! fields used by the dissipative-solution certificate.
//!
//! Two pressure constants appear: the viscous BD entropy uses `λ − μν`
//! ([`Params::lambda_prime_bd`]), the augmented system `λ − μν/2`
//! ([`Params::lambda_prime`]).

use crate::error::{Error, Result};
use crate::spectral::{
    antisym_grad, divergence_tensor, grad_laplacian_power, gradient, hessian, integrate,
    laplacian, laplacian_power, sym_grad, vector_gradient, ScalarField, VectorField,
};
use crate::state::{floored, AugmentedState, FluidState, Params};

/// Relative tolerance on mass agreement between a state and its reference.
pub const MASS_TOLERANCE: f64 = 1e-8;

/// `H(ρ) = ρ(log ρ − 1)`.
pub fn enthalpy(rho: &ScalarField, floor: f64) -> Result<ScalarField> {
    Ok(floored(rho, floor)?.map(|r| r * (r.ln() - 1.0)))
}

/// `H(ρ|R) = H(ρ) − H(R) − log R (ρ − R) = ρ log(ρ/R) − ρ + R`.
pub fn relative_enthalpy(rho: &ScalarField, r: &ScalarField, floor: f64) -> Result<ScalarField> {
    let rho = floored(rho, floor)?;
    let r = floored(r, floor)?;
    Ok(rho.zip_map(&r, |a, b| a * (a / b).ln() - a + b))
}

fn check_mass(rho: &ScalarField, r: &ScalarField) -> Result<()> {
    let (left, right) = (integrate(rho), integrate(r));
    if (left - right).abs() > MASS_TOLERANCE * left.abs().max(right.abs()) {
        return Err(Error::MassMismatch { left, right });
    }
    Ok(())
}

/// `|∇√ρ|²`, computed as `|∇ρ|²/(4ρ)` to avoid differentiating `√ρ`.
fn grad_sqrt_sq(rho: &ScalarField) -> ScalarField {
    gradient(rho).norm_sq().zip_map(rho, |g, r| g / (4.0 * r))
}

/// `∫ρ|∇² log ρ|²` (Frobenius norm).
fn log_hessian_integral(rho: &ScalarField) -> f64 {
    let h = hessian(&rho.map(f64::ln));
    integrate(&(rho * &h.norm_sq()))
}

fn weighted_sq(rho: &ScalarField, v: &VectorField) -> f64 {
    integrate(&(rho * &v.norm_sq()))
}

/// Energy `E` and dissipation `D` of the viscous system.
pub fn energy_nslk(state: &FluidState, params: &Params) -> Result<(f64, f64)> {
    let rho = floored(&state.rho, params.density_floor)?;
    let kinetic = weighted_sq(&rho, &state.u);
    let quantum = integrate(&grad_sqrt_sq(&rho));
    let h = integrate(&enthalpy(&rho, params.density_floor)?);
    let e = 0.5 * (kinetic + params.hbar * params.hbar * quantum) + params.lambda * h;
    let mut d = params.mu * kinetic;
    if params.nu != 0.0 {
        d += params.nu * integrate(&(&rho * &sym_grad(&state.u).norm_sq()));
    }
    Ok((e, d))
}

/// BD entropy and its dissipation for the viscous system, with `λ − μν`.
pub fn bd_entropy_nslk(state: &FluidState, params: &Params) -> Result<(f64, f64)> {
    let rho = floored(&state.rho, params.density_floor)?;
    let nu = params.nu;
    let h2 = params.hbar * params.hbar;
    let mut shifted = state.u.clone();
    if nu != 0.0 {
        shifted.axpy(0.5 * nu, &gradient(&rho.map(f64::ln)));
    }
    let quantum = integrate(&grad_sqrt_sq(&rho));
    let h = integrate(&enthalpy(&rho, params.density_floor)?);
    let e = 0.5 * (weighted_sq(&rho, &shifted) + h2 * quantum) + params.lambda_prime_bd() * h;
    let mut d = params.mu * weighted_sq(&rho, &state.u);
    if nu != 0.0 {
        d += 0.5 * nu * integrate(&(&rho * &antisym_grad(&state.u).norm_sq()))
            + 0.5 * nu * h2 * log_hessian_integral(&rho)
            + 2.0 * nu * quantum;
    }
    Ok((e, d))
}

/// Every integral of the regularised energy identity, kept separate.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RegTerms {
    pub kinetic: f64,
    pub quantum: f64,
    pub enthalpy: f64,
    pub cold_pressure: f64,
    pub hyper: f64,

    pub drag: f64,
    pub viscous: f64,
    pub bilaplacian: f64,
    pub hyper_diffusion: f64,
    pub mass_diffusion: f64,
    pub cold_diffusion: f64,
    pub linear_friction: f64,
    pub cubic_friction: f64,
    pub quantum_diffusion: f64,
}

impl RegTerms {
    pub fn energy(&self) -> f64 {
        self.kinetic + self.quantum + self.enthalpy + self.cold_pressure + self.hyper
    }

    pub fn dissipation(&self) -> f64 {
        self.drag
            + self.viscous
            + self.bilaplacian
            + self.hyper_diffusion
            + self.mass_diffusion
            + self.cold_diffusion
            + self.linear_friction
            + self.cubic_friction
            + self.quantum_diffusion
    }
}

/// Component breakdown of the regularised energy and dissipation.
///
/// The `δ₁` quantum term carries `δ₁ħ²/4` and the mass-diffusion term
/// `4λδ₁`: these are the rates the discrete `δ₁Δρ` flux actually produces.
pub fn energy_reg_terms(state: &FluidState, params: &Params) -> Result<RegTerms> {
    let p = params;
    let rho = floored(&state.rho, p.density_floor)?;
    let u = &state.u;
    let u2 = u.norm_sq();
    let mut t = RegTerms {
        kinetic: 0.5 * integrate(&(&rho * &u2)),
        quantum: 0.5 * p.hbar * p.hbar * integrate(&grad_sqrt_sq(&rho)),
        enthalpy: p.lambda * integrate(&enthalpy(&rho, p.density_floor)?),
        drag: p.mu * integrate(&(&rho * &u2)),
        ..RegTerms::default()
    };
    if p.eta1 != 0.0 {
        t.cold_pressure = p.eta1 / (p.alpha + 1.0) * integrate(&rho.map(|r| r.powf(-p.alpha)));
    }
    if p.eta2 != 0.0 {
        t.hyper = 0.5 * p.eta2 * integrate(&grad_laplacian_power(&rho, p.s).norm_sq());
    }
    if p.nu != 0.0 {
        t.viscous = p.nu * integrate(&(&rho * &sym_grad(u).norm_sq()));
    }
    if p.delta2 != 0.0 {
        let lap = u.map_components(laplacian);
        t.bilaplacian = p.delta2 * integrate(&lap.norm_sq());
    }
    if p.delta1 != 0.0 {
        if p.eta2 != 0.0 {
            t.hyper_diffusion =
                p.delta1 * p.eta2 * integrate(&laplacian_power(&rho, p.s + 1).map(|v| v * v));
        }
        t.mass_diffusion = 4.0 * p.lambda * p.delta1 * integrate(&grad_sqrt_sq(&rho));
        if p.eta1 != 0.0 {
            let g = gradient(&rho.map(|r| r.powf(-0.5 * p.alpha)));
            t.cold_diffusion = 4.0 * p.delta1 * p.eta1 / p.alpha * integrate(&g.norm_sq());
        }
        t.quantum_diffusion = 0.25 * p.delta1 * p.hbar * p.hbar * log_hessian_integral(&rho);
    }
    if p.r0 != 0.0 {
        t.linear_friction = p.r0 * integrate(&u2);
    }
    if p.r1 != 0.0 {
        t.cubic_friction = p.r1 * integrate(&(&rho * &u2.map(|v| v * v)));
    }
    Ok(t)
}

/// Regularised energy and dissipation.
pub fn energy_reg(state: &FluidState, params: &Params) -> Result<(f64, f64)> {
    let t = energy_reg_terms(state, params)?;
    Ok((t.energy(), t.dissipation()))
}

/// Regularised BD entropy, shift `ν∇log ρ` and pressure constant `λ − μν`.
pub fn bd_entropy_reg(state: &FluidState, params: &Params) -> Result<(f64, f64)> {
    let p = params;
    let rho = floored(&state.rho, p.density_floor)?;
    let u = &state.u;
    let u2 = u.norm_sq();
    let h2 = p.hbar * p.hbar;
    let log_rho = rho.map(f64::ln);
    let mut shifted = u.clone();
    shifted.axpy(p.nu, &gradient(&log_rho));
    let quantum = integrate(&grad_sqrt_sq(&rho));

    let mut e = 0.5 * (weighted_sq(&rho, &shifted) + h2 * quantum)
        + p.lambda_prime_bd() * integrate(&enthalpy(&rho, p.density_floor)?)
        - p.r0 * integrate(&log_rho);
    if p.eta1 != 0.0 {
        e += p.eta1 / (p.alpha + 1.0) * integrate(&rho.map(|r| r.powf(-p.alpha)));
    }
    if p.eta2 != 0.0 {
        e += 0.5 * p.eta2 * integrate(&grad_laplacian_power(&rho, p.s).norm_sq());
    }

    let mut d = p.mu * integrate(&(&rho * &u2))
        + p.nu * integrate(&(&rho * &antisym_grad(u).norm_sq()))
        + 4.0 * (p.nu + p.delta1) * quantum
        + p.r0 * integrate(&u2)
        + p.r1 * integrate(&(&rho * &u2.map(|v| v * v)));
    let hess_coeff = p.nu * h2 + p.delta1 * p.nu * p.nu + 0.5 * p.delta1 * h2;
    if hess_coeff != 0.0 {
        d += hess_coeff * log_hessian_integral(&rho);
    }
    if p.eta1 != 0.0 {
        let g = gradient(&rho.map(|r| r.powf(-0.5 * p.alpha)));
        d += (0.25 * p.eta1 * p.nu * p.alpha + 0.4 * p.delta1 * p.eta1) * integrate(&g.norm_sq());
    }
    if p.eta2 != 0.0 {
        d += p.eta2 * (p.nu + p.delta1) * integrate(&laplacian_power(&rho, p.s + 1).map(|v| v * v));
    }
    if p.delta2 != 0.0 {
        d += p.delta2 * integrate(&u.map_components(laplacian).norm_sq());
    }
    Ok((e, d))
}

/// Energy and dissipation of the augmented system.
pub fn aug_energy(aug: &AugmentedState, params: &Params) -> Result<(f64, f64)> {
    let lp = params.lambda_prime();
    if lp <= 0.0 {
        return Err(Error::Param(format!("augmented energy needs lambda' > 0, got {lp}")));
    }
    let rho = floored(&aug.rho, params.density_floor)?;
    let w2 = weighted_sq(&rho, &aug.w);
    let v2 = weighted_sq(&rho, &aug.vbar);
    let e = 0.5 * (w2 + v2) + lp * integrate(&enthalpy(&rho, params.density_floor)?);
    let mut d = params.mu * w2;
    if params.nu != 0.0 {
        let hnu2 = params.hbar_nu_sq();
        if hnu2 <= 0.0 {
            return Err(Error::Param("augmented energy needs hbar^2 - nu^2 > 0".into()));
        }
        let gw = integrate(&(&rho * &vector_gradient(&aug.w).norm_sq()));
        let gv = integrate(&(&rho * &vector_gradient(&aug.vbar).norm_sq()));
        d += 0.5 * params.nu * (gw + gv + 4.0 * lp / hnu2 * v2);
    }
    Ok((e, d))
}

/// Which residual the reference carries.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorMode {
    /// Inviscid residual `𝓔(R, U)`.
    Elk,
    /// `𝓔(R, U) − ν Div(R 𝔻U)`.
    NslkNu,
}

/// Smooth reference fields `(R, U, W, V̄, 𝓔)` at one time.
#[derive(Clone, Debug, PartialEq)]
pub struct StrongReference {
    pub r: ScalarField,
    pub u: VectorField,
    pub w: VectorField,
    pub vbar: VectorField,
    pub escript: VectorField,
    pub time: f64,
}

impl StrongReference {
    /// Builds `W = U + (ν/2)∇log R`, `V̄ = (ħ_ν/2)∇log R` and the residual.
    pub fn new(
        r: ScalarField,
        u: VectorField,
        du_dt: &VectorField,
        time: f64,
        params: &Params,
        mode: ErrorMode,
    ) -> Result<Self> {
        let glog = gradient(&floored(&r, params.density_floor)?.map(f64::ln));
        let mut w = u.clone();
        if params.nu != 0.0 {
            w.axpy(0.5 * params.nu, &glog);
        }
        let hbar_nu = if params.nu == 0.0 { params.hbar } else { params.hbar_nu() };
        let vbar = glog.scaled(0.5 * hbar_nu);
        let mut out = Self { r, u, w, vbar, escript: VectorField::zeros(du_dt.grid()), time };
        out.escript = error_field(&out, params, du_dt, mode)?;
        Ok(out)
    }

    pub fn mass(&self) -> f64 {
        integrate(&self.r)
    }
}

/// `𝓔 = R(∂ₜU + (U·∇)U) + λ∇R + μRU − (ħ²/4)Div(R∇²log R)`, optionally minus
/// `ν Div(R 𝔻U)`.
pub fn error_field(
    reference: &StrongReference,
    params: &Params,
    du_dt: &VectorField,
    mode: ErrorMode,
) -> Result<VectorField> {
    let r = floored(&reference.r, params.density_floor)?;
    let u = &reference.u;
    let mut accel = du_dt.clone();
    let advect = vector_gradient(u).apply(u);
    accel.axpy(1.0, &advect);
    let mut e = accel.scale_by(&r);
    e.axpy(params.lambda, &gradient(&r));
    e.axpy(params.mu, &u.scale_by(&r));
    let bohm = divergence_tensor(&hessian(&r.map(f64::ln)).scale_by(&r));
    e.axpy(-0.25 * params.hbar * params.hbar, &bohm);
    if mode == ErrorMode::NslkNu && params.nu != 0.0 {
        e.axpy(-params.nu, &viscous_residual(reference));
    }
    Ok(e)
}

/// `Div(R 𝔻U)`, the difference between the two residual modes per unit `ν`.
pub fn viscous_residual(reference: &StrongReference) -> VectorField {
    divergence_tensor(&sym_grad(&reference.u).scale_by(&reference.r))
}

/// Running trapezoidal time integral fed with `(t, f(t))` samples.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrapezoidAccumulator {
    value: f64,
    last: Option<(f64, f64)>,
}

impl TrapezoidAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds the sample and returns the integral up to `t`.
    pub fn push(&mut self, t: f64, f: f64) -> f64 {
        if let Some((t0, f0)) = self.last {
            self.value += 0.5 * (t - t0) * (f0 + f);
        }
        self.last = Some((t, f));
        self.value
    }

    pub fn value(&self) -> f64 {
        self.value
    }
}

/// `∫ρ|u − U|²`, the rate of the drag part of the relative entropy.
pub fn drag_mismatch_rate(rho: &ScalarField, u: &VectorField, reference_u: &VectorField) -> f64 {
    weighted_sq(rho, &(u - reference_u))
}

/// Relative entropy of the inviscid system.
///
/// Returns `(instant, instant + μ·drag)`, where `drag` is the caller's
/// trapezoidal integral of [`drag_mismatch_rate`].
pub fn rel_entropy_elk(
    state: &FluidState,
    vbar: &VectorField,
    reference: &StrongReference,
    params: &Params,
    drag: &TrapezoidAccumulator,
) -> Result<(f64, f64)> {
    check_mass(&state.rho, &reference.r)?;
    let instant = 0.5 * weighted_sq(&state.rho, &(vbar - &reference.vbar))
        + 0.5 * weighted_sq(&state.rho, &(&state.u - &reference.u))
        + params.lambda * integrate(&relative_enthalpy(&state.rho, &reference.r, params.density_floor)?);
    Ok((instant, instant + params.mu * drag.value()))
}

/// Time-integrated parts of the augmented relative entropy.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct NslkAccumulators {
    /// `∫∫ρ(|∇v̄ − ∇V̄|² + |∇w − ∇W|²)`.
    pub gradient: TrapezoidAccumulator,
    /// `∫∫ρ|w − W|²`.
    pub drag: TrapezoidAccumulator,
}

impl NslkAccumulators {
    /// Samples both integrands at `aug.time` and advances them.
    pub fn push(&mut self, aug: &AugmentedState, reference: &StrongReference) {
        let (g, d) = nslk_rates(aug, reference);
        self.gradient.push(aug.time, g);
        self.drag.push(aug.time, d);
    }
}

/// Integrands of the two time integrals of the augmented relative entropy.
pub fn nslk_rates(aug: &AugmentedState, reference: &StrongReference) -> (f64, f64) {
    let gv = &vector_gradient(&aug.vbar) - &vector_gradient(&reference.vbar);
    let gw = &vector_gradient(&aug.w) - &vector_gradient(&reference.w);
    let grad = integrate(&(&aug.rho * &(&gv.norm_sq() + &gw.norm_sq())));
    (grad, drag_mismatch_rate(&aug.rho, &aug.w, &reference.w))
}

/// Relative entropy of the augmented system with `λ′`.
pub fn rel_entropy_nslk(
    aug: &AugmentedState,
    reference: &StrongReference,
    params: &Params,
    acc: &NslkAccumulators,
) -> Result<(f64, f64)> {
    check_mass(&aug.rho, &reference.r)?;
    let instant = 0.5 * weighted_sq(&aug.rho, &(&aug.vbar - &reference.vbar))
        + 0.5 * weighted_sq(&aug.rho, &(&aug.w - &reference.w))
        + params.lambda_prime()
            * integrate(&relative_enthalpy(&aug.rho, &reference.r, params.density_floor)?);
    let total =
        instant + 0.5 * params.nu * acc.gradient.value() + params.mu * acc.drag.value();
    Ok((instant, total))
}

/// `∫(ρ/R)|𝓔·(U − u)|`.
pub fn b_integrand(
    rho: &ScalarField,
    u: &VectorField,
    reference: &StrongReference,
    floor: f64,
) -> Result<f64> {
    let r = floored(&reference.r, floor)?;
    let proj = reference.escript.dot(&(&reference.u - u));
    let weight = rho.zip_map(&r, |a, b| a / b);
    Ok(integrate(&weight.zip_map(&proj, |w, p| w * p.abs())))
}

/// Advances `b(t)` with the sample at `state.time` and returns it.
pub fn b_accumulate(
    state: &FluidState,
    reference: &StrongReference,
    params: &Params,
    acc: &mut TrapezoidAccumulator,
) -> Result<f64> {
    let f = b_integrand(&state.rho, &state.u, reference, params.density_floor)?;
    Ok(acc.push(state.time, f))
}

/// `2‖ρ‖₁ ∫ρ log(ρ/R) − ‖ρ − R‖₁²`, nonnegative by Csiszár-Kullback.
pub fn csiszar_kullback_gap(rho: &ScalarField, r: &ScalarField, floor: f64) -> Result<f64> {
    check_mass(rho, r)?;
    let rho = floored(rho, floor)?;
    let r = floored(r, floor)?;
    let kl = integrate(&rho.zip_map(&r, |a, b| a * (a / b).ln()));
    let l1 = integrate(&rho.zip_map(&r, |a, b| (a - b).abs()));
    Ok(2.0 * integrate(&rho) * kl - l1 * l1)
}

/// Lower bound constant of `∫ρ|∇²log ρ|² ≥ κ_d ∫|∇²√ρ|²`.
///
/// Returns 7/8 in one dimension as well, a conservative value that the one
/// dimensional expression `(4d−1)/(d(d+2)) = 1` exceeds.
pub fn bohm_kappa(dim: usize) -> f64 {
    match dim {
        3 => 11.0 / 15.0,
        _ => 7.0 / 8.0,
    }
}

/// `∫ρ|∇²log ρ|² / ∫|∇²√ρ|²`.
pub fn bohm_inequality_ratio(rho: &ScalarField, floor: f64) -> Result<f64> {
    let rho = floored(rho, floor)?;
    let num = log_hessian_integral(&rho);
    let den = integrate(&hessian(&rho.map(f64::sqrt)).norm_sq());
    if den < 1e-14 {
        return Err(Error::Degenerate(format!(
            "Hessian of sqrt(rho) has squared L2 norm {den:e}"
        )));
    }
    Ok(num / den)
}

/// Both forms of the Bohm force: `(ħ²/2)ρ∇(Δ√ρ/√ρ)` and
/// `(ħ²/4)Div(ρ∇²log ρ)`.
pub fn bohm_forms(rho: &ScalarField, hbar: f64, floor: f64) -> Result<(VectorField, VectorField)> {
    let rho = floored(rho, floor)?;
    let sq = rho.map(f64::sqrt);
    let quotient = laplacian(&sq).zip_map(&sq, |l, s| l / s);
    let root_form = gradient(&quotient).scale_by(&rho).scaled(0.5 * hbar * hbar);
    let log_form = divergence_tensor(&hessian(&rho.map(f64::ln)).scale_by(&rho))
        .scaled(0.25 * hbar * hbar);
    Ok((root_form, log_form))
}

/// One row of monitored quantities; absent values stay `None`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EntropyReport {
    pub time: f64,
    pub mass: f64,
    pub energy_nslk: Option<f64>,
    pub dissipation_nslk: Option<f64>,
    pub bd_entropy: Option<f64>,
    pub bd_dissipation: Option<f64>,
    pub energy_reg: Option<f64>,
    pub dissipation_reg: Option<f64>,
    pub bd_entropy_reg: Option<f64>,
    pub aug_energy: Option<f64>,
    pub aug_dissipation: Option<f64>,
    pub rel_entropy_instant: Option<f64>,
    pub rel_entropy_total: Option<f64>,
    pub b_accumulator: Option<f64>,
    pub ck_gap: Option<f64>,
    pub bohm_ratio: Option<f64>,
}

impl EntropyReport {
    pub const CSV_HEADER: [&'static str; 16] = [
        "time", "mass", "E", "D", "BDE", "BDD", "Ereg", "Dreg", "BDEreg", "augE", "augD",
        "relE_inst", "relE_total", "b", "ck_gap", "bohm_ratio",
    ];

    /// Values in header order.
    pub fn columns(&self) -> [Option<f64>; 16] {
        [
            Some(self.time),
            Some(self.mass),
            self.energy_nslk,
            self.dissipation_nslk,
            self.bd_entropy,
            self.bd_dissipation,
            self.energy_reg,
            self.dissipation_reg,
            self.bd_entropy_reg,
            self.aug_energy,
            self.aug_dissipation,
            self.rel_entropy_instant,
            self.rel_entropy_total,
            self.b_accumulator,
            self.ck_gap,
            self.bohm_ratio,
        ]
    }

    /// Inverse of [`columns`](Self::columns).
    pub fn from_columns(cols: &[Option<f64>]) -> Option<Self> {
        if cols.len() != 16 {
            return None;
        }
        Some(Self {
            time: cols[0]?,
            mass: cols[1]?,
            energy_nslk: cols[2],
            dissipation_nslk: cols[3],
            bd_entropy: cols[4],
            bd_dissipation: cols[5],
            energy_reg: cols[6],
            dissipation_reg: cols[7],
            bd_entropy_reg: cols[8],
            aug_energy: cols[9],
            aug_dissipation: cols[10],
            rel_entropy_instant: cols[11],
            rel_entropy_total: cols[12],
            b_accumulator: cols[13],
            ck_gap: cols[14],
            bohm_ratio: cols[15],
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::TorusGrid;
    use std::f64::consts::PI;

    fn g1(n: usize) -> TorusGrid {
        TorusGrid::new(1, n).unwrap()
    }

    fn rest(g: &TorusGrid) -> FluidState {
        FluidState::new(ScalarField::constant(g, 1.0), VectorField::zeros(g), 0.0)
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn enthalpy_values() {
        let g = g1(8);
        let one = ScalarField::constant(&g, 1.0);
        let two = ScalarField::constant(&g, 2.0);
        assert!(enthalpy(&one, 1e-8).unwrap().values().iter().all(|&v| v == -1.0));
        assert!(relative_enthalpy(&two, &two, 1e-8).unwrap().max_abs() < 1e-15);
        let h = relative_enthalpy(&two, &one, 1e-8).unwrap();
        assert!((h.values()[0] - (2.0 * 2f64.ln() - 1.0)).abs() < 1e-15);
        assert!((h.values()[0] - 0.386294).abs() < 1e-6);
    }

    #[test]
    fn energy_of_rest_state() {
        let g = g1(16);
        let (e, d) = energy_nslk(&rest(&g), &Params::elk(1.0, 1.0, 1.0)).unwrap();
        assert!(close(e, -2.0 * PI, 1e-14));
        assert_eq!(d, 0.0);
    }

    #[test]
    fn energy_of_uniform_flow() {
        let g = g1(16);
        let c = 0.3;
        let s = FluidState::new(ScalarField::constant(&g, 1.0), VectorField::uniform(&g, &[c]), 0.0);
        let (e, d) = energy_nslk(&s, &Params::elk(1.0, 1.0, 1.0)).unwrap();
        assert!(close(e, 0.5 * c * c * 2.0 * PI - 2.0 * PI, 1e-14));
        assert!(close(d, c * c * 2.0 * PI, 1e-14));
    }

    #[test]
    fn bd_entropy_of_rest_state_in_2d() {
        let g = TorusGrid::new(2, 8).unwrap();
        let p = Params::elk(1.0, 1.0, 1.0).with_nu(0.2);
        let (e, d) = bd_entropy_nslk(&rest(&g), &p).unwrap();
        assert!(close(e, -p.lambda_prime_bd() * 4.0 * PI * PI, 1e-14));
        assert!(d.abs() < 1e-14);
    }

    #[test]
    fn bd_entropy_without_viscosity_is_energy() {
        let g = g1(32);
        let s = FluidState::new(
            ScalarField::from_fn(&g, |x| 1.0 + 0.3 * x[0].cos()),
            VectorField::from_fn(&g, |x, _| x[0].sin()),
            0.0,
        );
        let p = Params::elk(1.0, 0.7, 0.9);
        let (e, d) = energy_nslk(&s, &p).unwrap();
        let (be, bd) = bd_entropy_nslk(&s, &p).unwrap();
        assert_eq!(e, be);
        assert_eq!(d, bd);
    }

    #[test]
    fn unregularised_energy_matches_viscous_energy() {
        let g = g1(32);
        let s = FluidState::new(
            ScalarField::from_fn(&g, |x| 1.0 + 0.25 * x[0].cos()),
            VectorField::from_fn(&g, |x, _| x[0].sin()),
            0.0,
        );
        let p = Params::elk(1.0, 0.5, 1.0).with_nu(0.1);
        let (e, d) = energy_nslk(&s, &p).unwrap();
        let (er, dr) = energy_reg(&s, &p).unwrap();
        assert!(close(er, e, 1e-12) && close(dr, d, 1e-12));
    }

    #[test]
    fn cold_pressure_of_rest_state() {
        let g = g1(16);
        let mut p = Params::elk(1.0, 1.0, 1.0);
        p.eta1 = 0.1;
        let (e, _) = energy_reg(&rest(&g), &p).unwrap();
        assert!(close(e, -2.0 * PI + 0.1 / 3.0 * 2.0 * PI, 1e-14));
    }

    #[test]
    fn log_term_vanishes_at_unit_density() {
        let g = g1(16);
        let mut p = Params::elk(1.0, 1.0, 1.0);
        p.r0 = 0.5;
        let (e, _) = bd_entropy_reg(&rest(&g), &p).unwrap();
        assert!(close(e, -p.lambda_prime_bd() * 2.0 * PI, 1e-14));
    }

    #[test]
    fn regularised_bd_entropy_specialises_with_half_viscosity() {
        let g = g1(64);
        let s = FluidState::new(
            ScalarField::from_fn(&g, |x| (0.2 * x[0].cos()).exp()),
            VectorField::from_fn(&g, |x, _| 0.3 * x[0].sin()),
            0.0,
        );
        // the two pressure constants only coincide without drag
        let p = Params::elk(1.0, 0.0, 1.0).with_nu(0.3);
        let half = Params::elk(1.0, 0.0, 1.0).with_nu(0.15);
        let (e, d) = bd_entropy_nslk(&s, &p).unwrap();
        let (er, dr) = bd_entropy_reg(&s, &half).unwrap();
        assert!(close(er, e, 1e-12), "{er} {e}");
        assert!(close(dr, d, 1e-12), "{dr} {d}");
    }

    #[test]
    fn aug_energy_of_rest_state() {
        let g = g1(16);
        let p = Params::elk(1.0, 1.0, 1.0).with_nu(0.2);
        let aug = AugmentedState {
            rho: ScalarField::constant(&g, 1.0),
            w: VectorField::zeros(&g),
            vbar: VectorField::zeros(&g),
            time: 0.0,
        };
        let (e, d) = aug_energy(&aug, &p).unwrap();
        assert!(close(e, -p.lambda_prime() * 2.0 * PI, 1e-14));
        assert_eq!(d, 0.0);
        let bad = Params::elk(0.05, 1.0, 1.0).with_nu(0.2);
        assert!(matches!(aug_energy(&aug, &bad), Err(Error::Param(_))));
    }

    #[test]
    fn inviscid_aug_dissipation_is_drag_only() {
        let g = g1(32);
        let p = Params::elk(1.0, 0.8, 1.0);
        let aug = AugmentedState {
            rho: ScalarField::from_fn(&g, |x| 1.0 + 0.2 * x[0].cos()),
            w: VectorField::from_fn(&g, |x, _| x[0].sin()),
            vbar: VectorField::from_fn(&g, |x, _| 0.1 * x[0].cos()),
            time: 0.0,
        };
        let (_, d) = aug_energy(&aug, &p).unwrap();
        let expect = 0.8 * integrate(&(&aug.rho * &aug.w.norm_sq()));
        assert_eq!(d, expect);
    }

    fn steady_ref(g: &TorusGrid, c: f64, p: &Params) -> StrongReference {
        StrongReference::new(
            ScalarField::constant(g, 1.0),
            VectorField::uniform(g, &[c]),
            &VectorField::zeros(g),
            0.0,
            p,
            ErrorMode::Elk,
        )
        .unwrap()
    }

    #[test]
    fn error_field_of_uniform_flow_is_drag() {
        let g = g1(16);
        let p = Params::elk(1.0, 0.6, 1.0);
        let r = steady_ref(&g, 0.2, &p);
        assert!(r.escript.max_diff(&VectorField::uniform(&g, &[0.6 * 0.2])) < 1e-15);
        let zero = steady_ref(&g, 0.0, &p);
        assert!(zero.escript.max_abs() < 1e-15);
    }

    #[test]
    fn error_field_of_static_density() {
        let g = g1(64);
        let p = Params::elk(1.0, 1.0, 1.0);
        let a = 0.1;
        let r = ScalarField::from_fn(&g, |x| (a * x[0].cos()).exp());
        let reference =
            StrongReference::new(r, VectorField::zeros(&g), &VectorField::zeros(&g), 0.0, &p, ErrorMode::Elk)
                .unwrap();
        // λR' − (1/4)(R (log R)'')' with log R = a cos x
        let exact = ScalarField::from_fn(&g, |x| {
            let rr = (a * x[0].cos()).exp();
            let dr = -a * x[0].sin() * rr;
            let l2 = -a * x[0].cos();
            let l3 = a * x[0].sin();
            dr - 0.25 * (dr * l2 + rr * l3)
        });
        assert!(reference.escript.component(0).max_diff(&exact) < 1e-8);
    }

    #[test]
    fn viscous_mode_without_viscosity_is_inviscid() {
        let g = g1(32);
        let p = Params::elk(1.0, 0.5, 1.0);
        let r = ScalarField::from_fn(&g, |x| 1.0 + 0.2 * x[0].cos());
        let u = VectorField::from_fn(&g, |x, _| 0.1 * x[0].sin());
        let du = VectorField::from_fn(&g, |x, _| -0.1 * x[0].cos());
        let a = StrongReference::new(r.clone(), u.clone(), &du, 0.0, &p, ErrorMode::Elk).unwrap();
        let b = StrongReference::new(r, u, &du, 0.0, &p, ErrorMode::NslkNu).unwrap();
        assert_eq!(a.escript, b.escript);
    }

    #[test]
    fn trapezoid_accumulator() {
        let mut acc = TrapezoidAccumulator::new();
        for i in 0..=10 {
            let t = i as f64 * 0.1;
            acc.push(t, t);
        }
        assert!((acc.value() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rel_entropy_of_identical_states() {
        let g = g1(32);
        let p = Params::elk(1.0, 1.0, 1.0);
        let r = ScalarField::from_fn(&g, |x| 1.0 + 0.2 * x[0].cos());
        let u = VectorField::from_fn(&g, |x, _| 0.1 * x[0].sin());
        let reference =
            StrongReference::new(r.clone(), u.clone(), &VectorField::zeros(&g), 0.0, &p, ErrorMode::Elk).unwrap();
        let s = FluidState::new(r, u, 0.0);
        let (i, t) = rel_entropy_elk(&s, &reference.vbar, &reference, &p, &TrapezoidAccumulator::new()).unwrap();
        assert!(i.abs() < 1e-15 && t.abs() < 1e-15);
    }

    #[test]
    fn rel_entropy_of_uniform_offset() {
        let g = g1(16);
        let p = Params::elk(1.0, 1.0, 1.0);
        let reference = steady_ref(&g, 0.0, &p);
        let c = 0.4;
        let s = FluidState::new(ScalarField::constant(&g, 1.0), VectorField::uniform(&g, &[c]), 0.0);
        let (i, _) = rel_entropy_elk(&s, &VectorField::zeros(&g), &reference, &p, &TrapezoidAccumulator::new()).unwrap();
        assert!(close(i, 0.5 * c * c * 2.0 * PI, 1e-14));
    }

    #[test]
    fn rel_entropy_rejects_mass_mismatch() {
        let g = g1(16);
        let p = Params::elk(1.0, 1.0, 1.0);
        let reference = steady_ref(&g, 0.0, &p);
        let s = FluidState::new(ScalarField::constant(&g, 1.2), VectorField::zeros(&g), 0.0);
        let err = rel_entropy_elk(&s, &VectorField::zeros(&g), &reference, &p, &TrapezoidAccumulator::new());
        assert!(matches!(err, Err(Error::MassMismatch { .. })));
    }

    #[test]
    fn augmented_rel_entropy_closed_form() {
        let g = g1(16);
        let p = Params::elk(1.0, 1.0, 1.0);
        let reference = steady_ref(&g, 0.0, &p);
        let c = 0.1;
        let mut acc = NslkAccumulators::default();
        let mut last = (0.0, 0.0);
        for i in 0..=50 {
            let aug = AugmentedState {
                rho: ScalarField::constant(&g, 1.0),
                w: VectorField::uniform(&g, &[c]),
                vbar: VectorField::zeros(&g),
                time: i as f64 * 0.01,
            };
            acc.push(&aug, &reference);
            last = rel_entropy_nslk(&aug, &reference, &p, &acc).unwrap();
        }
        assert!((last.1 - 0.0628319).abs() < 1e-7, "{}", last.1);
    }

    #[test]
    fn augmented_rel_entropy_without_viscosity_is_inviscid() {
        let g = g1(32);
        let p = Params::elk(1.3, 0.4, 0.9);
        let r = ScalarField::from_fn(&g, |x| 1.0 + 0.2 * x[0].cos());
        let u_ref = VectorField::from_fn(&g, |x, _| 0.1 * x[0].sin());
        let reference = StrongReference::new(r, u_ref, &VectorField::zeros(&g), 0.0, &p, ErrorMode::Elk).unwrap();
        let rho = ScalarField::from_fn(&g, |x| 1.0 + 0.2 * (x[0] + 0.3).cos());
        let u = VectorField::from_fn(&g, |x, _| 0.2 * x[0].cos());
        let vbar = VectorField::from_fn(&g, |x, _| 0.05 * x[0].sin());
        let aug = AugmentedState { rho: rho.clone(), w: u.clone(), vbar: vbar.clone(), time: 0.0 };
        let mut acc = NslkAccumulators::default();
        acc.push(&aug, &reference);
        let (a, at) = rel_entropy_nslk(&aug, &reference, &p, &acc).unwrap();
        let (b, bt) = rel_entropy_elk(&FluidState::new(rho, u, 0.0), &vbar, &reference, &p, &TrapezoidAccumulator::new()).unwrap();
        assert!(close(a, b, 1e-12) && close(at, bt, 1e-12));
    }

    #[test]
    fn b_accumulates_constant_integrand() {
        let g = g1(16);
        let p = Params::elk(1.0, 1.0, 1.0);
        let c = 0.1;
        let reference = steady_ref(&g, c, &p);
        let mut acc = TrapezoidAccumulator::new();
        let mut b = 0.0;
        for i in 0..=10 {
            let s = FluidState::new(ScalarField::constant(&g, 1.0), VectorField::zeros(&g), i as f64 * 0.1);
            b = b_accumulate(&s, &reference, &p, &mut acc).unwrap();
        }
        assert!((b - c * c * 2.0 * PI).abs() < 1e-14);
        assert!((b - 0.0628319).abs() < 1e-7);
        let matched = FluidState::new(ScalarField::constant(&g, 1.0), VectorField::uniform(&g, &[c]), 0.0);
        assert_eq!(b_integrand(&matched.rho, &matched.u, &reference, 1e-8).unwrap(), 0.0);
    }

    #[test]
    fn csiszar_kullback_cases() {
        let g = g1(64);
        let rho = ScalarField::from_fn(&g, |x| 1.0 + 0.3 * x[0].sin());
        assert!(csiszar_kullback_gap(&rho, &rho, 1e-8).unwrap().abs() < 1e-15);
        let shifted = ScalarField::from_fn(&g, |x| 1.0 + 0.3 * (x[0] + PI).sin());
        assert!(csiszar_kullback_gap(&rho, &shifted, 1e-8).unwrap() >= 0.0);
        assert!(csiszar_kullback_gap(&rho, &ScalarField::constant(&g, 1.0), 1e-8).unwrap() > 0.0);
    }

    #[test]
    fn bohm_ratio_is_degenerate_for_constants() {
        let g = TorusGrid::new(2, 16).unwrap();
        let r = bohm_inequality_ratio(&ScalarField::constant(&g, 1.0), 1e-8);
        assert!(matches!(r, Err(Error::Degenerate(_))));
    }

    #[test]
    fn report_columns_roundtrip() {
        let r = EntropyReport { time: 0.5, mass: 2.0, ck_gap: Some(1e-3), ..Default::default() };
        assert_eq!(EntropyReport::from_columns(&r.columns()), Some(r));
    }
}
