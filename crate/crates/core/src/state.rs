//! State containers and the Madelung bridge between wave functions and
//! hydrodynamic fields.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{
    antisym_grad, complex_gradient, gradient, gradient_potential, integrate, ScalarField,
    TorusGrid, VectorField,
};

pub const DEFAULT_DENSITY_FLOOR: f64 = 1e-8;

fn default_floor() -> f64 {
    DEFAULT_DENSITY_FLOOR
}

fn default_alpha() -> f64 {
    2.0
}

fn default_s() -> u32 {
    1
}

/// Physical and regularisation constants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    /// Isothermal pressure constant λ.
    pub lambda: f64,
    /// Linear drag μ.
    pub mu: f64,
    /// Scaled Planck constant ħ.
    pub hbar: f64,
    /// Viscosity ν.
    #[serde(default)]
    pub nu: f64,
    #[serde(default)]
    pub delta1: f64,
    #[serde(default)]
    pub delta2: f64,
    #[serde(default)]
    pub eta1: f64,
    #[serde(default)]
    pub eta2: f64,
    #[serde(default)]
    pub r0: f64,
    #[serde(default)]
    pub r1: f64,
    /// Cold-pressure exponent α.
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Hyperdiffusion order s.
    #[serde(default = "default_s")]
    pub s: u32,
    /// Densities below this are clamped in logs and divisions.
    #[serde(default = "default_floor")]
    pub density_floor: f64,
}

impl Params {
    /// Inviscid, unregularised parameters.
    pub fn elk(lambda: f64, mu: f64, hbar: f64) -> Self {
        Self {
            lambda,
            mu,
            hbar,
            nu: 0.0,
            delta1: 0.0,
            delta2: 0.0,
            eta1: 0.0,
            eta2: 0.0,
            r0: 0.0,
            r1: 0.0,
            alpha: default_alpha(),
            s: default_s(),
            density_floor: DEFAULT_DENSITY_FLOOR,
        }
    }

    pub fn with_nu(mut self, nu: f64) -> Self {
        self.nu = nu;
        self
    }

    /// Sets δ₁, δ₂, η₁, η₂, r₀, r₁ to one common weight.
    pub fn with_regularization(mut self, weight: f64) -> Self {
        self.delta1 = weight;
        self.delta2 = weight;
        self.eta1 = weight;
        self.eta2 = weight;
        self.r0 = weight;
        self.r1 = weight;
        self
    }

    /// `λ′ = λ − μν/2`, the pressure constant of the augmented system.
    pub fn lambda_prime(&self) -> f64 {
        self.lambda - 0.5 * self.mu * self.nu
    }

    /// `λ − μν`, the constant the BD entropy of the viscous system carries.
    pub fn lambda_prime_bd(&self) -> f64 {
        self.lambda - self.mu * self.nu
    }

    /// `ħ_ν² = ħ² − ν²`.
    pub fn hbar_nu_sq(&self) -> f64 {
        self.hbar * self.hbar - self.nu * self.nu
    }

    /// `ħ_ν`, or NaN when `ħ² ≤ ν²`.
    pub fn hbar_nu(&self) -> f64 {
        let h2 = self.hbar_nu_sq();
        if h2 > 0.0 {
            h2.sqrt()
        } else {
            f64::NAN
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.lambda, self.mu, self.hbar, self.nu, self.delta1, self.delta2, self.eta1,
            self.eta2, self.r0, self.r1, self.alpha, self.density_floor,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(Error::Param("all parameters must be finite".into()));
        }
        if self.lambda <= 0.0 {
            return Err(Error::Param(format!("pressure constant lambda must be > 0, got {}", self.lambda)));
        }
        if self.mu < 0.0 {
            return Err(Error::Param(format!("drag mu must be >= 0, got {}", self.mu)));
        }
        if self.hbar <= 0.0 {
            return Err(Error::Param(format!("hbar must be > 0, got {}", self.hbar)));
        }
        if self.nu < 0.0 {
            return Err(Error::Param(format!("viscosity nu must be >= 0, got {}", self.nu)));
        }
        let weights = [
            ("delta1", self.delta1),
            ("delta2", self.delta2),
            ("eta1", self.eta1),
            ("eta2", self.eta2),
            ("r0", self.r0),
            ("r1", self.r1),
        ];
        for (name, w) in weights {
            if !(0.0..1.0).contains(&w) {
                return Err(Error::Param(format!("{name} must lie in [0, 1), got {w}")));
            }
        }
        if self.alpha <= 0.0 {
            return Err(Error::Param(format!("alpha must be > 0, got {}", self.alpha)));
        }
        if self.s < 1 {
            return Err(Error::Param("hyperdiffusion order s must be >= 1".into()));
        }
        if self.density_floor <= 0.0 {
            return Err(Error::Param("density_floor must be > 0".into()));
        }
        Ok(())
    }

    /// Extra requirements of the augmented formulation: `λ′ > 0`, `ħ_ν² > 0`.
    pub fn validate_augmented(&self) -> Result<()> {
        self.validate()?;
        if self.lambda_prime() <= 0.0 {
            return Err(Error::Param(format!(
                "augmented dynamics need lambda' = lambda - mu*nu/2 > 0, got {}",
                self.lambda_prime()
            )));
        }
        if self.hbar_nu_sq() <= 0.0 {
            return Err(Error::Param(format!(
                "augmented dynamics need hbar^2 - nu^2 > 0, got {}",
                self.hbar_nu_sq()
            )));
        }
        Ok(())
    }
}

/// Returns `ρ` clamped at `floor`, or a vacuum error if its minimum drops
/// below `floor / 10`.
pub fn floored(rho: &ScalarField, floor: f64) -> Result<ScalarField> {
    let min = rho.min();
    if !(min >= floor / 10.0) {
        return Err(Error::Vacuum { min, floor });
    }
    Ok(rho.map(|v| v.max(floor)))
}

/// `log ρ` with the vacuum guard.
pub fn log_density(rho: &ScalarField, floor: f64) -> Result<ScalarField> {
    Ok(floored(rho, floor)?.map(f64::ln))
}

/// `∇ log ρ` with the vacuum guard.
pub fn grad_log_density(rho: &ScalarField, floor: f64) -> Result<VectorField> {
    Ok(gradient(&log_density(rho, floor)?))
}

/// Density and velocity at one time.
#[derive(Clone, Debug, PartialEq)]
pub struct FluidState {
    pub rho: ScalarField,
    pub u: VectorField,
    pub time: f64,
}

impl FluidState {
    pub fn new(rho: ScalarField, u: VectorField, time: f64) -> Self {
        assert_eq!(rho.grid(), u.grid(), "density and velocity must share a grid");
        Self { rho, u, time }
    }

    pub fn grid(&self) -> &TorusGrid {
        self.rho.grid()
    }

    pub fn mass(&self) -> f64 {
        integrate(&self.rho)
    }

    /// Momentum `ρu`.
    pub fn momentum(&self) -> VectorField {
        self.u.scale_by(&self.rho)
    }

    pub fn check_density(&self, floor: f64) -> Result<()> {
        floored(&self.rho, floor).map(|_| ())
    }
}

/// `(ρ, w, v̄)` with `w = u + (ν/2)∇log ρ` and `v̄ = (ħ_ν/2)∇log ρ`.
#[derive(Clone, Debug, PartialEq)]
pub struct AugmentedState {
    pub rho: ScalarField,
    pub w: VectorField,
    pub vbar: VectorField,
    pub time: f64,
}

impl AugmentedState {
    pub fn grid(&self) -> &TorusGrid {
        self.rho.grid()
    }

    pub fn mass(&self) -> f64 {
        integrate(&self.rho)
    }

    /// Max-norm of `𝔸v̄`; zero when `v̄` is a gradient.
    pub fn gradient_defect(&self) -> f64 {
        antisym_grad(&self.vbar).max_abs()
    }
}

/// Builds the augmented unknowns from `(ρ, u)`.
pub fn augment(state: &FluidState, params: &Params) -> Result<AugmentedState> {
    if params.hbar_nu_sq() <= 0.0 {
        return Err(Error::Param("augmentation needs hbar^2 - nu^2 > 0".into()));
    }
    let glog = grad_log_density(&state.rho, params.density_floor)?;
    let mut w = state.u.clone();
    w.axpy(0.5 * params.nu, &glog);
    let vbar = glog.scaled(0.5 * params.hbar_nu());
    Ok(AugmentedState { rho: state.rho.clone(), w, vbar, time: state.time })
}

/// Recovers `u = w − (ν/2)∇log ρ`.
pub fn deaugment(aug: &AugmentedState, params: &Params) -> Result<FluidState> {
    let glog = grad_log_density(&aug.rho, params.density_floor)?;
    let mut u = aug.w.clone();
    u.axpy(-0.5 * params.nu, &glog);
    Ok(FluidState::new(aug.rho.clone(), u, aug.time))
}

/// Complex wave function on a grid.
///
/// `phase`, when present, is a continuous lift `S` with `ψ = |ψ| e^{iS/ħ}`;
/// the potential substep evolves it directly instead of unwrapping `arg ψ`.
#[derive(Clone, Debug, PartialEq)]
pub struct WaveFunction {
    pub(crate) grid: TorusGrid,
    pub psi: Vec<Complex64>,
    pub phase: Option<Vec<f64>>,
    pub time: f64,
}

impl WaveFunction {
    pub fn new(grid: &TorusGrid, psi: Vec<Complex64>, time: f64) -> Self {
        assert_eq!(psi.len(), grid.len());
        Self { grid: grid.clone(), psi, phase: None, time }
    }

    /// `ψ = √ρ e^{iS/ħ}` with the lift `S` retained.
    pub fn from_polar(rho: &ScalarField, phase: &ScalarField, hbar: f64, time: f64) -> Self {
        let psi = rho
            .values()
            .iter()
            .zip(phase.values())
            .map(|(&r, &s)| Complex64::from_polar(r.max(0.0).sqrt(), s / hbar))
            .collect();
        Self { grid: rho.grid().clone(), psi, phase: Some(phase.values().to_vec()), time }
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn density(&self) -> ScalarField {
        ScalarField::from_vec(&self.grid, self.psi.iter().map(|c| c.norm_sqr()).collect())
    }

    /// `∫|ψ|²`.
    pub fn mass(&self) -> f64 {
        integrate(&self.density())
    }

    /// Real and imaginary parts as two scalar fields.
    pub fn parts(&self) -> (ScalarField, ScalarField) {
        (
            ScalarField::from_vec(&self.grid, self.psi.iter().map(|c| c.re).collect()),
            ScalarField::from_vec(&self.grid, self.psi.iter().map(|c| c.im).collect()),
        )
    }
}

/// `ρ = |ψ|²`, `ρu = ħ Im(ψ* ∇ψ)`.
pub fn madelung(wave: &WaveFunction, params: &Params) -> Result<FluidState> {
    let rho = wave.density();
    let rho_safe = floored(&rho, params.density_floor)?;
    let grad = complex_gradient(wave.grid(), &wave.psi);
    let comps = grad
        .iter()
        .map(|dpsi| {
            let data = wave
                .psi
                .iter()
                .zip(dpsi)
                .zip(rho_safe.values())
                .map(|((p, dp), r)| params.hbar * (p.conj() * dp).im / r)
                .collect();
            ScalarField::from_vec(wave.grid(), data)
        })
        .collect();
    Ok(FluidState::new(rho, VectorField::from_components(comps), wave.time))
}

/// Tolerance on `𝔸u` for accepting a velocity as a gradient.
pub const GRADIENT_TOLERANCE: f64 = 1e-6;

/// `ψ = √ρ e^{iS/ħ}` with `∇S = u` and `∫S = 0`.
pub fn inverse_madelung(state: &FluidState, params: &Params) -> Result<WaveFunction> {
    floored(&state.rho, params.density_floor)?;
    let defect = antisym_grad(&state.u).max_abs();
    if defect > GRADIENT_TOLERANCE {
        return Err(Error::NotGradient { defect });
    }
    let scale = 1.0 + state.u.max_abs();
    for (axis, comp) in state.u.components().iter().enumerate() {
        // circulation of a gradient field along any axis loop is 2π·mean(u_a)
        let circulation = 2.0 * std::f64::consts::PI * comp.mean();
        if circulation.abs() > 1e-9 * scale {
            return Err(Error::Winding { axis, circulation });
        }
    }
    let phase = gradient_potential(&state.u);
    Ok(WaveFunction::from_polar(&state.rho, &phase, params.hbar, state.time))
}
