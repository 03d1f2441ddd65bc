//! Implicit-explicit trapezoidal stepping for the regularised system.
//!
//! The stiff operator `S` (mass flux, pressure, Bohm force, `δ₁Δρ`, `δ₂Δ²u`,
//! `η₂ρ∇Δ^{2s+1}ρ`) is treated by the trapezoidal rule, the remainder `N` by
//! Heun's method:
//!
//! ```text
//! y*   = yⁿ + dt N(yⁿ)               + h (S(yⁿ) + S(y*))
//! yⁿ⁺¹ = yⁿ + dt/2 (N(yⁿ) + N(y*))   + h (S(yⁿ) + S(yⁿ⁺¹)),   h = dt/2
//! ```
//!
//! Each implicit equation `y − h S(y) = r` is solved by iterating
//! `y ← y − P⁻¹(y − h S(y) − r)` where `P = I − h A₀` is the linearisation of
//! `S` about the mean density, diagonal in Fourier space.

use num_complex::Complex64;

use super::rhs::{reg_explicit, reg_stiff, Conserved};
use crate::error::{Error, Result};
use crate::spectral::{is_aliased, resolved_k2, resolved_wavevector, spectrum, synthesize, VectorField};
use crate::state::Params;

const MAX_ITERATIONS: usize = 200;
const UPDATE_TOLERANCE: f64 = 1e-12;

struct Preconditioner<'a> {
    params: &'a Params,
    h: f64,
    mean_rho: f64,
    dealias: bool,
}

impl Preconditioner<'_> {
    /// Solves `P x = g` mode by mode.
    fn solve(&self, g: &Conserved) -> Conserved {
        let grid = g.rho.grid();
        let dim = grid.dim();
        let p = self.params;
        let h = self.h;
        let rho_hat = spectrum(&g.rho);
        let m_hat: Vec<Vec<Complex64>> = g.mom[0].components().iter().map(spectrum).collect();
        let mut out_rho = vec![Complex64::default(); grid.len()];
        let mut out_m = vec![vec![Complex64::default(); grid.len()]; dim];
        let i = Complex64::i();
        for idx in 0..grid.len() {
            if self.dealias && is_aliased(grid, idx) {
                // S vanishes on filtered modes, so P is the identity there
                out_rho[idx] = rho_hat[idx];
                for a in 0..dim {
                    out_m[a][idx] = m_hat[a][idx];
                }
                continue;
            }
            let k = resolved_wavevector(grid, idx);
            let k2 = resolved_k2(grid, idx);
            let a_coef = 1.0 + h * p.delta1 * k2;
            let b_coef = 1.0 + h * p.delta2 * k2 * k2 / self.mean_rho;
            let c_coef = -p.lambda
                - 0.25 * p.hbar * p.hbar * k2
                - p.eta2 * self.mean_rho * k2.powi(2 * p.s as i32 + 1);
            let mut k_dot_rm = Complex64::default();
            for a in 0..dim {
                k_dot_rm += k[a] * m_hat[a][idx];
            }
            let denom = a_coef - h * h * c_coef * k2 / b_coef;
            let r = (rho_hat[idx] - (h / b_coef) * i * k_dot_rm) / denom;
            out_rho[idx] = r;
            for a in 0..dim {
                out_m[a][idx] = (m_hat[a][idx] + h * c_coef * i * k[a] * r) / b_coef;
            }
        }
        Conserved {
            rho: synthesize(grid, out_rho),
            mom: vec![VectorField::from_components(
                out_m.into_iter().map(|c| synthesize(grid, c)).collect(),
            )],
        }
    }
}

/// Solves `y − h S(y) = r` starting from `guess`.
fn implicit_solve(
    r: &Conserved,
    guess: Conserved,
    pre: &Preconditioner<'_>,
) -> Result<Conserved> {
    let mut y = guess;
    let mut last = f64::INFINITY;
    for _ in 0..MAX_ITERATIONS {
        let s = reg_stiff(&y, pre.params, pre.dealias)?;
        let mut g = y.clone();
        g.axpy(-pre.h, &s);
        g.axpy(-1.0, r);
        let delta = pre.solve(&g);
        y.axpy(-1.0, &delta);
        let size = delta.max_abs();
        last = size;
        if !size.is_finite() {
            break;
        }
        if size <= UPDATE_TOLERANCE * (1.0 + y.max_abs()) {
            return Ok(y);
        }
    }
    Err(Error::NoConvergence { iterations: MAX_ITERATIONS, residual: last })
}

/// One step of the trapezoidal IMEX scheme.
pub(crate) fn imex_step(y: &Conserved, dt: f64, params: &Params, dealias: bool) -> Result<Conserved> {
    let h = 0.5 * dt;
    let mean_rho = y.rho.mean();
    if !(mean_rho > 0.0) {
        return Err(Error::Degenerate(format!("mean density {mean_rho}")));
    }
    let pre = Preconditioner { params, h, mean_rho, dealias };
    let n0 = reg_explicit(y, params, dealias)?;
    let s0 = reg_stiff(y, params, dealias)?;

    let mut r1 = y.clone();
    r1.axpy(dt, &n0);
    r1.axpy(h, &s0);
    let star = implicit_solve(&r1, y.clone(), &pre)?;

    let n1 = reg_explicit(&star, params, dealias)?;
    let mut r2 = y.clone();
    r2.axpy(h, &n0);
    r2.axpy(h, &n1);
    r2.axpy(h, &s0);
    implicit_solve(&r2, star, &pre)
}
