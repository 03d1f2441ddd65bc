//! Spectral differential operators, quadrature and the 2/3-rule filter.
//!
//! Every derivative symbol drops the Nyquist mode (`|k_a| = n/2`), so the
//! discrete identities `div ∘ grad = Δ` and `Δ^1 = Δ` hold exactly.

use num_complex::Complex64;

use super::field::{ScalarField, TensorField, VectorField};
use super::grid::TorusGrid;

/// Forward transform of a real field.
pub fn spectrum(f: &ScalarField) -> Vec<Complex64> {
    let mut data: Vec<Complex64> = f.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    f.grid().forward(&mut data);
    data
}

/// Inverse transform keeping the real part.
pub fn synthesize(grid: &TorusGrid, mut coeffs: Vec<Complex64>) -> ScalarField {
    grid.inverse(&mut coeffs);
    ScalarField::from_vec(grid, coeffs.into_iter().map(|c| c.re).collect())
}

/// Wavevector with Nyquist entries zeroed, as used by derivative symbols.
pub(crate) fn resolved_wavevector(grid: &TorusGrid, flat: usize) -> [f64; 3] {
    let k = grid.wavevector(flat);
    let nyq = grid.nyquist();
    let mut out = [0.0; 3];
    for a in 0..grid.dim() {
        if k[a].abs() != nyq {
            out[a] = k[a] as f64;
        }
    }
    out
}

/// `|k|²` over the resolved wavevector.
pub(crate) fn resolved_k2(grid: &TorusGrid, flat: usize) -> f64 {
    resolved_wavevector(grid, flat).iter().map(|k| k * k).sum()
}

fn map_spectrum(
    grid: &TorusGrid,
    coeffs: &[Complex64],
    symbol: impl Fn(&[f64; 3]) -> Complex64,
) -> ScalarField {
    let out: Vec<Complex64> = coeffs
        .iter()
        .enumerate()
        .map(|(i, c)| c * symbol(&resolved_wavevector(grid, i)))
        .collect();
    synthesize(grid, out)
}

/// Multiplies the spectrum of `f` by `symbol(k̃)` where `k̃` is the
/// Nyquist-free wavevector.
pub fn apply_symbol(f: &ScalarField, symbol: impl Fn(&[f64; 3]) -> Complex64) -> ScalarField {
    map_spectrum(f.grid(), &spectrum(f), symbol)
}

/// Partial derivative along `axis`.
pub fn partial(f: &ScalarField, axis: usize) -> ScalarField {
    apply_symbol(f, |k| Complex64::new(0.0, k[axis]))
}

pub fn gradient(f: &ScalarField) -> VectorField {
    let grid = f.grid();
    let coeffs = spectrum(f);
    VectorField::from_components(
        (0..grid.dim())
            .map(|a| map_spectrum(grid, &coeffs, |k| Complex64::new(0.0, k[a])))
            .collect(),
    )
}

pub fn divergence(v: &VectorField) -> ScalarField {
    let grid = v.grid();
    let mut acc = vec![Complex64::default(); grid.len()];
    for (a, comp) in v.components().iter().enumerate() {
        for (i, c) in spectrum(comp).into_iter().enumerate() {
            acc[i] += c * Complex64::new(0.0, resolved_wavevector(grid, i)[a]);
        }
    }
    synthesize(grid, acc)
}

pub fn laplacian(f: &ScalarField) -> ScalarField {
    apply_symbol(f, |k| Complex64::new(-(k[0] * k[0] + k[1] * k[1] + k[2] * k[2]), 0.0))
}

/// `Δ^p f` with symbol `(-|k|²)^p`.
pub fn laplacian_power(f: &ScalarField, p: u32) -> ScalarField {
    apply_symbol(f, |k| {
        let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        Complex64::new((-k2).powi(p as i32), 0.0)
    })
}

/// `∇Δ^p f`.
pub fn grad_laplacian_power(f: &ScalarField, p: u32) -> VectorField {
    let grid = f.grid();
    let coeffs = spectrum(f);
    VectorField::from_components(
        (0..grid.dim())
            .map(|a| {
                map_spectrum(grid, &coeffs, |k| {
                    let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
                    Complex64::new(0.0, k[a] * (-k2).powi(p as i32))
                })
            })
            .collect(),
    )
}

/// Hessian `∇²f`, entries `∂_i ∂_j f`.
pub fn hessian(f: &ScalarField) -> TensorField {
    let grid = f.grid();
    let coeffs = spectrum(f);
    let mut entries: Vec<Option<ScalarField>> = vec![None; grid.dim() * grid.dim()];
    let d = grid.dim();
    for i in 0..d {
        for j in i..d {
            let e = map_spectrum(grid, &coeffs, |k| Complex64::new(-k[i] * k[j], 0.0));
            entries[j * d + i] = Some(e.clone());
            entries[i * d + j] = Some(e);
        }
    }
    TensorField::from_fn(d, |i, j| entries[i * d + j].clone().expect("filled"))
}

/// Velocity gradient `(∇u)_ij = ∂_j u_i`.
pub fn vector_gradient(u: &VectorField) -> TensorField {
    let d = u.dim();
    let rows: Vec<VectorField> = u.components().iter().map(gradient).collect();
    TensorField::from_fn(d, |i, j| rows[i].component(j).clone())
}

/// `𝔻u = (∇u + ∇uᵀ)/2`.
pub fn sym_grad(u: &VectorField) -> TensorField {
    let g = vector_gradient(u);
    (&g + &g.transpose()).scaled(0.5)
}

/// `𝔸u = (∇u − ∇uᵀ)/2`.
pub fn antisym_grad(u: &VectorField) -> TensorField {
    let g = vector_gradient(u);
    (&g - &g.transpose()).scaled(0.5)
}

/// Row divergence `Div(σ)_i = Σ_j ∂_j σ_ij`.
pub fn divergence_tensor(sigma: &TensorField) -> VectorField {
    let d = sigma.dim();
    VectorField::from_components(
        (0..d)
            .map(|i| {
                let row = VectorField::from_components((0..d).map(|j| sigma.get(i, j).clone()).collect());
                divergence(&row)
            })
            .collect(),
    )
}

/// Zero-mean potential `S` with `∇S` the gradient part of `u`.
pub fn gradient_potential(u: &VectorField) -> ScalarField {
    let grid = u.grid();
    let div = spectrum(&divergence(u));
    map_spectrum(grid, &div, |k| {
        let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        if k2 > 0.0 {
            Complex64::new(-1.0 / k2, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// Rectangle-rule quadrature, exact for band-limited fields.
pub fn integrate(f: &ScalarField) -> f64 {
    f.grid().cell_volume() * f.sum()
}

/// Fields that can be truncated by the 2/3 rule.
pub trait Dealias: Sized {
    /// Zeroes every Fourier coefficient with some `|k_a| > n/3`.
    fn dealias(&self) -> Self;
}

pub(crate) fn is_aliased(grid: &TorusGrid, flat: usize) -> bool {
    let k = grid.wavevector(flat);
    let n = grid.n() as i64;
    (0..grid.dim()).any(|a| 3 * k[a].abs() > n)
}

impl Dealias for ScalarField {
    fn dealias(&self) -> Self {
        let grid = self.grid();
        let mut coeffs = spectrum(self);
        for (i, c) in coeffs.iter_mut().enumerate() {
            if is_aliased(grid, i) {
                *c = Complex64::default();
            }
        }
        synthesize(grid, coeffs)
    }
}

impl Dealias for VectorField {
    fn dealias(&self) -> Self {
        self.map_components(ScalarField::dealias)
    }
}

impl Dealias for TensorField {
    fn dealias(&self) -> Self {
        self.map_entries(ScalarField::dealias)
    }
}

/// Complex-valued gradient used for wave functions.
pub fn complex_gradient(grid: &TorusGrid, psi: &[Complex64]) -> Vec<Vec<Complex64>> {
    let mut coeffs = psi.to_vec();
    grid.forward(&mut coeffs);
    (0..grid.dim())
        .map(|a| {
            let mut d: Vec<Complex64> = coeffs
                .iter()
                .enumerate()
                .map(|(i, c)| c * Complex64::new(0.0, resolved_wavevector(grid, i)[a]))
                .collect();
            grid.inverse(&mut d);
            d
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn g1(n: usize) -> TorusGrid {
        TorusGrid::new(1, n).unwrap()
    }

    fn g2(n: usize) -> TorusGrid {
        TorusGrid::new(2, n).unwrap()
    }

    #[test]
    fn gradient_of_sine_is_cosine() {
        let g = g1(64);
        let f = ScalarField::from_fn(&g, |x| x[0].sin());
        let df = gradient(&f);
        let exact = ScalarField::from_fn(&g, |x| x[0].cos());
        assert!(df.component(0).max_diff(&exact) <= 1e-12);
    }

    #[test]
    fn gradient_of_constant_vanishes() {
        let g = g2(16);
        let df = gradient(&ScalarField::constant(&g, 3.5));
        assert!(df.max_abs() < 1e-14);
    }

    #[test]
    fn gradient_2d_closed_form() {
        let g = g2(32);
        let f = ScalarField::from_fn(&g, |x| (2.0 * x[0]).cos() * x[1].sin());
        let df = gradient(&f);
        let dx = ScalarField::from_fn(&g, |x| -2.0 * (2.0 * x[0]).sin() * x[1].sin());
        let dy = ScalarField::from_fn(&g, |x| (2.0 * x[0]).cos() * x[1].cos());
        assert!(df.component(0).max_diff(&dx) <= 1e-10);
        assert!(df.component(1).max_diff(&dy) <= 1e-10);
    }

    #[test]
    fn divergence_of_cosine_e1() {
        let g = g1(32);
        let v = VectorField::from_components(vec![ScalarField::from_fn(&g, |x| x[0].cos())]);
        let exact = ScalarField::from_fn(&g, |x| -x[0].sin());
        assert!(divergence(&v).max_diff(&exact) < 1e-12);
    }

    #[test]
    fn laplacian_power_symbol() {
        let g = g1(32);
        let f = ScalarField::from_fn(&g, |x| (2.0 * x[0]).cos());
        let exact = f.scaled(16.0);
        let d = laplacian_power(&f, 2).max_diff(&exact);
        // roundoff in high modes is amplified by k⁴
        assert!(d < 1e-10, "{d}");
    }

    #[test]
    fn laplacian_symbol_table_2d() {
        let g = g2(32);
        let f = ScalarField::from_fn(&g, |x| x[0].cos() + (3.0 * x[1]).cos());
        let exact = ScalarField::from_fn(&g, |x| -x[0].cos() - 9.0 * (3.0 * x[1]).cos());
        assert!(laplacian(&f).max_diff(&exact) < 1e-11);
    }

    #[test]
    fn sym_and_antisym_split_gradient() {
        let g = g2(16);
        let u = VectorField::from_fn(&g, |x, a| ((a + 1) as f64 * x[0] - x[1]).sin());
        let full = vector_gradient(&u);
        let d = sym_grad(&u);
        let a = antisym_grad(&u);
        assert!((&d + &a).max_diff(&full) < 1e-13);
        assert!(d.max_diff(&d.transpose()) < 1e-15);
        assert!(a.max_diff(&a.transpose().scaled(-1.0)) < 1e-15);
    }

    #[test]
    fn sym_grad_of_uniform_is_zero() {
        let g = g2(16);
        let u = VectorField::uniform(&g, &[0.3, -1.0]);
        assert!(sym_grad(&u).max_abs() < 1e-14);
        assert!(antisym_grad(&u).max_abs() < 1e-14);
    }

    #[test]
    fn antisym_grad_of_gradient_vanishes() {
        let g = g2(32);
        let phi = ScalarField::from_fn(&g, |x| (x[0] + 2.0 * x[1]).sin() + 0.3 * x[0].cos());
        assert!(antisym_grad(&gradient(&phi)).max_abs() < 1e-10);
    }

    #[test]
    fn sym_grad_shear_flow() {
        // u = (sin y, 0): 𝔻u_01 = 𝔻u_10 = cos(y)/2
        let g = g2(32);
        let u = VectorField::from_fn(&g, |x, a| if a == 0 { x[1].sin() } else { 0.0 });
        let d = sym_grad(&u);
        let half_cos = ScalarField::from_fn(&g, |x| 0.5 * x[1].cos());
        assert!(d.get(0, 1).max_diff(&half_cos) < 1e-12);
        assert!(d.get(1, 0).max_diff(&half_cos) < 1e-12);
        assert!(d.get(0, 0).max_abs() < 1e-12);
        assert!(d.get(1, 1).max_abs() < 1e-12);
    }

    #[test]
    fn integration_examples() {
        let g = g1(32);
        assert!((integrate(&ScalarField::constant(&g, 1.0)) - 2.0 * PI).abs() < 1e-12);
        assert!(integrate(&ScalarField::from_fn(&g, |x| x[0].sin())).abs() < 1e-12);
        let f = ScalarField::from_fn(&g, |x| 1.0 + 0.5 * x[0].sin());
        assert!((integrate(&f) - 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn constant_quadrature_in_3d() {
        let g = TorusGrid::new(3, 8).unwrap();
        let v = integrate(&ScalarField::constant(&g, 1.0));
        assert!((v - (2.0 * PI).powi(3)).abs() / v < 1e-12);
    }

    #[test]
    fn dealias_kills_modes_above_cutoff() {
        let g = g1(64);
        let f = ScalarField::from_fn(&g, |x| (31.0 * x[0]).sin());
        assert!(f.dealias().max_abs() < 1e-13);
        let band = ScalarField::from_fn(&g, |x| (21.0 * x[0]).cos() + x[0].sin());
        assert!(band.dealias().max_diff(&band) < 1e-12);
    }

    #[test]
    fn gradient_potential_recovers_phase() {
        let g = g2(32);
        let s = ScalarField::from_fn(&g, |x| x[0].sin() * (2.0 * x[1]).cos());
        let back = gradient_potential(&gradient(&s));
        assert!(back.max_diff(&s) < 1e-12);
    }

    #[test]
    fn complex_gradient_of_plane_wave() {
        let g = g1(16);
        let psi: Vec<Complex64> = (0..g.len()).map(|i| Complex64::from_polar(1.0, 3.0 * g.point(i)[0])).collect();
        let d = complex_gradient(&g, &psi);
        for (dp, p) in d[0].iter().zip(&psi) {
            assert!((dp - Complex64::new(0.0, 3.0) * p).norm() < 1e-12);
        }
    }
}
