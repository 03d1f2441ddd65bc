//! Right-hand sides of the regularised and augmented systems in conserved
//! variables.

use crate::error::{Error, Result};
use crate::spectral::{
    divergence, divergence_tensor, grad_laplacian_power, gradient, hessian, laplacian,
    laplacian_power, sym_grad, vector_gradient, Dealias, ScalarField, TensorField, VectorField,
};
use crate::state::{floored, AugmentedState, FluidState, Params};

/// Conserved unknowns: density plus one or two momentum-like fields.
#[derive(Clone, Debug, PartialEq)]
pub struct Conserved {
    pub rho: ScalarField,
    pub mom: Vec<VectorField>,
}

impl Conserved {
    pub fn axpy(&mut self, a: f64, other: &Self) {
        self.rho.axpy(a, &other.rho);
        for (m, o) in self.mom.iter_mut().zip(&other.mom) {
            m.axpy(a, o);
        }
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self { rho: self.rho.scaled(a), mom: self.mom.iter().map(|m| m.scaled(a)).collect() }
    }

    pub fn max_abs(&self) -> f64 {
        self.mom.iter().map(VectorField::max_abs).fold(self.rho.max_abs(), f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.rho.is_finite() && self.mom.iter().all(VectorField::is_finite)
    }

    fn zeros_like(&self) -> Self {
        let g = self.rho.grid();
        Self { rho: ScalarField::zeros(g), mom: self.mom.iter().map(|_| VectorField::zeros(g)).collect() }
    }

    fn dealiased(self, on: bool) -> Self {
        if !on {
            return self;
        }
        Self { rho: self.rho.dealias(), mom: self.mom.iter().map(Dealias::dealias).collect() }
    }
}

fn filt<T: Dealias>(x: T, on: bool) -> T {
    if on {
        x.dealias()
    } else {
        x
    }
}

fn velocity(rho: &ScalarField, m: &VectorField) -> VectorField {
    m.map_components(|c| c.zip_map(rho, |a, r| a / r))
}

/// Conserved variables `(ρ, ρu)` of a fluid state.
pub fn reg_conserved(state: &FluidState) -> Conserved {
    Conserved { rho: state.rho.clone(), mom: vec![state.momentum()] }
}

pub fn reg_primitive(y: &Conserved, time: f64, floor: f64) -> Result<FluidState> {
    let rho = floored(&y.rho, floor)?;
    Ok(FluidState::new(y.rho.clone(), velocity(&rho, &y.mom[0]), time))
}

/// Conserved variables `(ρ, ρw, ρv̄)` of an augmented state.
pub fn aug_conserved(aug: &AugmentedState) -> Conserved {
    Conserved { rho: aug.rho.clone(), mom: vec![aug.w.scale_by(&aug.rho), aug.vbar.scale_by(&aug.rho)] }
}

pub fn aug_primitive(y: &Conserved, time: f64, floor: f64) -> Result<AugmentedState> {
    let rho = floored(&y.rho, floor)?;
    Ok(AugmentedState {
        rho: y.rho.clone(),
        w: velocity(&rho, &y.mom[0]),
        vbar: velocity(&rho, &y.mom[1]),
        time,
    })
}

/// Non-stiff part of the regularised right-hand side: transport, drag,
/// friction, viscosity, the `δ₁` correction and the cold pressure.
pub(crate) fn reg_explicit(y: &Conserved, p: &Params, dealias: bool) -> Result<Conserved> {
    let rho = floored(&y.rho, p.density_floor)?;
    let m = &y.mom[0];
    let u = velocity(&rho, m);
    let mut dm = divergence_tensor(&filt(TensorField::outer(m, &u), dealias)).scaled(-1.0);
    dm.axpy(-p.mu, m);
    if p.r0 != 0.0 {
        dm.axpy(-p.r0, &u);
    }
    if p.r1 != 0.0 {
        let cubic = u.scale_by(&(&rho * &u.norm_sq()));
        dm.axpy(-p.r1, &filt(cubic, dealias));
    }
    if p.nu != 0.0 {
        let stress = filt(sym_grad(&u).scale_by(&rho), dealias);
        dm.axpy(p.nu, &divergence_tensor(&stress));
    }
    if p.delta1 != 0.0 {
        let grad_u = vector_gradient(&u);
        let corr = filt(grad_u.apply(&gradient(&rho)), dealias);
        dm.axpy(-p.delta1, &corr);
    }
    if p.eta1 != 0.0 {
        let cold = filt(rho.map(|r| r.powf(-p.alpha)), dealias);
        dm.axpy(p.eta1, &gradient(&cold));
    }
    Ok(Conserved { rho: ScalarField::zeros(rho.grid()), mom: vec![dm] }.dealiased(dealias))
}

/// Stiff part: mass flux and diffusion, pressure, Bohm force, `δ₂`
/// bilaplacian and the `η₂` capillarity.
pub(crate) fn reg_stiff(y: &Conserved, p: &Params, dealias: bool) -> Result<Conserved> {
    let rho = floored(&y.rho, p.density_floor)?;
    let m = &y.mom[0];
    let mut drho = divergence(m).scaled(-1.0);
    if p.delta1 != 0.0 {
        drho.axpy(p.delta1, &laplacian(&y.rho));
    }
    let mut dm = gradient(&y.rho).scaled(-p.lambda);
    let bohm = filt(hessian(&rho.map(f64::ln)).scale_by(&rho), dealias);
    dm.axpy(0.25 * p.hbar * p.hbar, &divergence_tensor(&bohm));
    if p.delta2 != 0.0 {
        // dissipative sign: the work −δ₂∫|Δu|² matches the energy identity
        let u = filt(velocity(&rho, m), dealias);
        dm.axpy(-p.delta2, &u.map_components(|c| laplacian_power(c, 2)));
    }
    if p.eta2 != 0.0 {
        let cap = filt(grad_laplacian_power(&y.rho, 2 * p.s + 1).scale_by(&y.rho), dealias);
        dm.axpy(p.eta2, &cap);
    }
    Ok(Conserved { rho: drho, mom: vec![dm] }.dealiased(dealias))
}

pub(crate) fn reg_full(y: &Conserved, p: &Params, dealias: bool) -> Result<Conserved> {
    let mut out = reg_explicit(y, p, dealias)?;
    out.axpy(1.0, &reg_stiff(y, p, dealias)?);
    Ok(out)
}

/// `(∂ₜρ, ∂ₜ(ρu))` of the regularised viscous system, with dealiasing.
pub fn rhs_reg_nslk(state: &FluidState, params: &Params) -> Result<(ScalarField, VectorField)> {
    let out = reg_full(&reg_conserved(state), params, true)?;
    let Conserved { rho, mut mom } = out;
    Ok((rho, mom.remove(0)))
}

pub(crate) fn aug_full(y: &Conserved, p: &Params, dealias: bool) -> Result<Conserved> {
    let lp = p.lambda_prime();
    let hnu2 = p.hbar_nu_sq();
    if lp <= 0.0 || hnu2 <= 0.0 {
        return Err(Error::Param(format!(
            "augmented dynamics need lambda' > 0 and hbar^2 - nu^2 > 0 (lambda' = {lp}, hbar_nu^2 = {hnu2})"
        )));
    }
    let hnu = hnu2.sqrt();
    let rho = floored(&y.rho, p.density_floor)?;
    let (pw, pv) = (&y.mom[0], &y.mom[1]);
    let w = velocity(&rho, pw);
    let vbar = velocity(&rho, pv);
    let mut u = w.clone();
    if p.nu != 0.0 {
        u.axpy(-0.5 * p.nu, &gradient(&rho.map(f64::ln)));
    }

    // ρu = ρw − (ν/2)∇ρ keeps the mass flux in divergence form
    let mut drho = divergence(pw).scaled(-1.0);
    if p.nu != 0.0 {
        drho.axpy(0.5 * p.nu, &laplacian(&y.rho));
    }

    let mut dw = divergence_tensor(&filt(TensorField::outer(pw, &u), dealias)).scaled(-1.0);
    dw.axpy(-lp, &gradient(&y.rho));
    dw.axpy(-p.mu, pw);
    let grad_v = filt(vector_gradient(&vbar).scale_by(&rho), dealias);
    dw.axpy(0.5 * hnu, &divergence_tensor(&grad_v));
    if p.nu != 0.0 {
        let grad_w = filt(vector_gradient(&w).scale_by(&rho), dealias);
        dw.axpy(0.5 * p.nu, &divergence_tensor(&grad_w));
    }

    let mut dv = divergence_tensor(&filt(TensorField::outer(pv, &u), dealias)).scaled(-1.0);
    let grad_ut = filt(vector_gradient(&u).transpose().scale_by(&rho), dealias);
    dv.axpy(-0.5 * hnu, &divergence_tensor(&grad_ut));

    Ok(Conserved { rho: drho, mom: vec![dw, dv] }.dealiased(dealias))
}

/// `(∂ₜρ, ∂ₜ(ρw), ∂ₜ(ρv̄))` of the augmented system, with dealiasing.
pub fn rhs_aug_nslk(
    aug: &AugmentedState,
    params: &Params,
) -> Result<(ScalarField, VectorField, VectorField)> {
    let Conserved { rho, mut mom } = aug_full(&aug_conserved(aug), params, true)?;
    let dv = mom.pop().expect("two momenta");
    let dw = mom.pop().expect("two momenta");
    Ok((rho, dw, dv))
}

pub(crate) fn zeros_like(y: &Conserved) -> Conserved {
    y.zeros_like()
}
