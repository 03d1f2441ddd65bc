//! Named initial data.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{gradient, ScalarField, TorusGrid, VectorField};
use crate::state::FluidState;

fn one() -> f64 {
    1.0
}

fn one_i() -> i64 {
    1
}

fn four() -> i64 {
    4
}

/// Initial density and velocity recipes. Spatial variation is along the
/// first axis unless stated otherwise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "recipe", rename_all = "snake_case", deny_unknown_fields)]
pub enum Recipe {
    /// Constant density and velocity.
    Uniform {
        #[serde(default = "one")]
        density: f64,
        #[serde(default)]
        velocity: Vec<f64>,
    },
    /// `ρ = 1 + a cos(kx)`, `u = b sin(kx) e₁`.
    Cosine {
        amplitude: f64,
        #[serde(default)]
        velocity_amplitude: f64,
        #[serde(default = "one_i")]
        wavenumber: i64,
    },
    /// `ρ = exp(a cos x)`, `u = b sin x e₁`.
    ExpCosine {
        amplitude: f64,
        #[serde(default)]
        velocity_amplitude: f64,
    },
    /// `ρ = (1 + a cos x)²`, `u = b cos x e₁`, the Madelung image of
    /// `(1 + a cos x) e^{i b sin x / ħ}`.
    PhaseWave {
        amplitude: f64,
        #[serde(default = "one")]
        phase_amplitude: f64,
    },
    /// Gaussian bump centred in the box over a constant background, at rest.
    Gaussian {
        #[serde(default = "one")]
        background: f64,
        peak: f64,
        width: f64,
    },
    /// Band-limited random data: `ρ = exp(f)` and `u = ∇φ` with `f`, `φ`
    /// seeded Fourier series over `|kₐ| ≤ kmax`.
    Random {
        amplitude: f64,
        #[serde(default)]
        velocity_amplitude: f64,
        #[serde(default = "four")]
        kmax: i64,
    },
}

/// Seeded real Fourier series with `1 ≤ max|kₐ| ≤ kmax`, coefficient decay
/// `1/(1+|k|²)`, scaled to max-norm `amplitude`.
pub fn random_band_limited(grid: &TorusGrid, kmax: i64, amplitude: f64, rng: &mut ChaCha8Rng) -> ScalarField {
    let dim = grid.dim();
    let mut modes: Vec<([i64; 3], f64, f64)> = Vec::new();
    let range = |a: usize| if a < dim { -kmax..=kmax } else { 0..=0 };
    for k0 in range(0) {
        for k1 in range(1) {
            for k2 in range(2) {
                let k = [k0, k1, k2];
                // half space: one representative of each ±k pair
                let first = k.iter().find(|&&v| v != 0);
                if first.is_none_or(|&v| v < 0) {
                    continue;
                }
                let w = 1.0 / (1.0 + (k0 * k0 + k1 * k1 + k2 * k2) as f64);
                let a: f64 = rng.gen_range(-1.0..1.0);
                let b: f64 = rng.gen_range(-1.0..1.0);
                modes.push((k, a * w, b * w));
            }
        }
    }
    let f = ScalarField::from_fn(grid, |x| {
        modes
            .iter()
            .map(|(k, a, b)| {
                let ph = k[0] as f64 * x[0] + k[1] as f64 * x[1] + k[2] as f64 * x[2];
                a * ph.cos() + b * ph.sin()
            })
            .sum()
    });
    let m = f.max_abs();
    if m > 0.0 {
        f.scaled(amplitude / m)
    } else {
        f
    }
}

impl Recipe {
    pub fn build(&self, grid: &TorusGrid, seed: u64) -> Result<FluidState> {
        let dim = grid.dim();
        let along_x = |f: &dyn Fn(f64) -> f64| VectorField::from_fn(grid, |x, a| if a == 0 { f(x[0]) } else { 0.0 });
        let state = match self {
            Self::Uniform { density, velocity } => {
                let v = if velocity.is_empty() { vec![0.0; dim] } else { velocity.clone() };
                if v.len() != dim {
                    return Err(Error::Param(format!("velocity has {} components, grid has dim {dim}", v.len())));
                }
                FluidState::new(ScalarField::constant(grid, *density), VectorField::uniform(grid, &v), 0.0)
            }
            Self::Cosine { amplitude, velocity_amplitude, wavenumber } => {
                let k = *wavenumber as f64;
                FluidState::new(
                    ScalarField::from_fn(grid, |x| 1.0 + amplitude * (k * x[0]).cos()),
                    along_x(&|x| velocity_amplitude * (k * x).sin()),
                    0.0,
                )
            }
            Self::ExpCosine { amplitude, velocity_amplitude } => FluidState::new(
                ScalarField::from_fn(grid, |x| (amplitude * x[0].cos()).exp()),
                along_x(&|x| velocity_amplitude * x.sin()),
                0.0,
            ),
            Self::PhaseWave { amplitude, phase_amplitude } => FluidState::new(
                ScalarField::from_fn(grid, |x| (1.0 + amplitude * x[0].cos()).powi(2)),
                along_x(&|x| phase_amplitude * x.cos()),
                0.0,
            ),
            Self::Gaussian { background, peak, width } => {
                if !(*width > 0.0) {
                    return Err(Error::Param("gaussian width must be > 0".into()));
                }
                let c = std::f64::consts::PI;
                FluidState::new(
                    ScalarField::from_fn(grid, |x| {
                        let r2: f64 = (0..dim).map(|a| (x[a] - c).powi(2)).sum();
                        background + peak * (-r2 / (2.0 * width * width)).exp()
                    }),
                    VectorField::zeros(grid),
                    0.0,
                )
            }
            Self::Random { amplitude, velocity_amplitude, kmax } => {
                if *kmax < 1 {
                    return Err(Error::Param("random recipe needs kmax >= 1".into()));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let f = random_band_limited(grid, *kmax, *amplitude, &mut rng);
                let phi = random_band_limited(grid, *kmax, 1.0, &mut rng);
                let u = gradient(&phi);
                let m = u.max_norm();
                let u = if m > 0.0 { u.scaled(velocity_amplitude / m) } else { u };
                FluidState::new(f.map(f64::exp), u, 0.0)
            }
        };
        if !(state.rho.min() > 0.0) {
            return Err(Error::Param("recipe produces a non-positive density".into()));
        }
        Ok(state)
    }
}
