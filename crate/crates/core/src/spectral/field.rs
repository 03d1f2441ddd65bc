use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use super::grid::TorusGrid;

/// Real scalar values at every grid point.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: TorusGrid,
    data: Vec<f64>,
}

impl ScalarField {
    pub fn from_vec(grid: &TorusGrid, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), grid.len(), "field length does not match grid");
        Self { grid: grid.clone(), data }
    }

    pub fn constant(grid: &TorusGrid, value: f64) -> Self {
        Self::from_vec(grid, vec![value; grid.len()])
    }

    pub fn zeros(grid: &TorusGrid) -> Self {
        Self::constant(grid, 0.0)
    }

    /// Samples `f(x)` at every grid point.
    pub fn from_fn(grid: &TorusGrid, f: impl Fn([f64; 3]) -> f64) -> Self {
        let data = (0..grid.len()).map(|i| f(grid.point(i))).collect();
        Self::from_vec(grid, data)
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_values(self) -> Vec<f64> {
        self.data
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { grid: self.grid.clone(), data: self.data.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        debug_assert_eq!(self.grid, other.grid);
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        Self { grid: self.grid.clone(), data }
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.sum() / self.data.len() as f64
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// `self += a * other`
    pub fn axpy(&mut self, a: f64, other: &Self) {
        for (s, o) in self.data.iter_mut().zip(&other.data) {
            *s += a * o;
        }
    }

    pub fn scaled(&self, a: f64) -> Self {
        self.map(|v| a * v)
    }

    /// Max-norm distance to another field on the same grid.
    pub fn max_diff(&self, other: &Self) -> f64 {
        self.data.iter().zip(&other.data).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

impl Add for &ScalarField {
    type Output = ScalarField;
    fn add(self, rhs: &ScalarField) -> ScalarField {
        self.zip_map(rhs, |a, b| a + b)
    }
}

impl Sub for &ScalarField {
    type Output = ScalarField;
    fn sub(self, rhs: &ScalarField) -> ScalarField {
        self.zip_map(rhs, |a, b| a - b)
    }
}

impl Mul for &ScalarField {
    type Output = ScalarField;
    fn mul(self, rhs: &ScalarField) -> ScalarField {
        self.zip_map(rhs, |a, b| a * b)
    }
}

impl Mul<&ScalarField> for f64 {
    type Output = ScalarField;
    fn mul(self, rhs: &ScalarField) -> ScalarField {
        rhs.scaled(self)
    }
}

impl Neg for &ScalarField {
    type Output = ScalarField;
    fn neg(self) -> ScalarField {
        self.map(|v| -v)
    }
}

impl AddAssign<&ScalarField> for ScalarField {
    fn add_assign(&mut self, rhs: &ScalarField) {
        self.axpy(1.0, rhs);
    }
}

/// A `dim`-component vector field; components share one grid.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    comps: Vec<ScalarField>,
}

impl VectorField {
    pub fn from_components(comps: Vec<ScalarField>) -> Self {
        assert!(!comps.is_empty(), "vector field needs components");
        let grid = comps[0].grid();
        assert_eq!(comps.len(), grid.dim(), "one component per axis");
        assert!(comps.iter().all(|c| c.grid() == grid), "components must share a grid");
        Self { comps }
    }

    pub fn zeros(grid: &TorusGrid) -> Self {
        Self { comps: (0..grid.dim()).map(|_| ScalarField::zeros(grid)).collect() }
    }

    /// Spatially uniform vector; missing entries of `c` are zero.
    pub fn uniform(grid: &TorusGrid, c: &[f64]) -> Self {
        Self {
            comps: (0..grid.dim())
                .map(|a| ScalarField::constant(grid, c.get(a).copied().unwrap_or(0.0)))
                .collect(),
        }
    }

    pub fn from_fn(grid: &TorusGrid, f: impl Fn([f64; 3], usize) -> f64) -> Self {
        Self {
            comps: (0..grid.dim()).map(|a| ScalarField::from_fn(grid, |x| f(x, a))).collect(),
        }
    }

    pub fn grid(&self) -> &TorusGrid {
        self.comps[0].grid()
    }

    pub fn dim(&self) -> usize {
        self.comps.len()
    }

    pub fn components(&self) -> &[ScalarField] {
        &self.comps
    }

    pub fn components_mut(&mut self) -> &mut [ScalarField] {
        &mut self.comps
    }

    pub fn into_components(self) -> Vec<ScalarField> {
        self.comps
    }

    pub fn component(&self, a: usize) -> &ScalarField {
        &self.comps[a]
    }

    pub fn map_components(&self, f: impl Fn(&ScalarField) -> ScalarField) -> Self {
        Self { comps: self.comps.iter().map(f).collect() }
    }

    pub fn zip_components(&self, other: &Self, f: impl Fn(&ScalarField, &ScalarField) -> ScalarField) -> Self {
        Self { comps: self.comps.iter().zip(&other.comps).map(|(a, b)| f(a, b)).collect() }
    }

    /// Pointwise `u · v`.
    pub fn dot(&self, other: &Self) -> ScalarField {
        let mut out = ScalarField::zeros(self.grid());
        for (a, b) in self.comps.iter().zip(&other.comps) {
            for ((o, x), y) in out.values_mut().iter_mut().zip(a.values()).zip(b.values()) {
                *o += x * y;
            }
        }
        out
    }

    /// Pointwise `|u|²`.
    pub fn norm_sq(&self) -> ScalarField {
        self.dot(self)
    }

    /// Pointwise product with a scalar field.
    pub fn scale_by(&self, s: &ScalarField) -> Self {
        self.map_components(|c| c * s)
    }

    pub fn scaled(&self, a: f64) -> Self {
        self.map_components(|c| c.scaled(a))
    }

    pub fn axpy(&mut self, a: f64, other: &Self) {
        for (s, o) in self.comps.iter_mut().zip(&other.comps) {
            s.axpy(a, o);
        }
    }

    /// Largest pointwise Euclidean length.
    pub fn max_norm(&self) -> f64 {
        self.norm_sq().max().max(0.0).sqrt()
    }

    /// Largest absolute component value.
    pub fn max_abs(&self) -> f64 {
        self.comps.iter().map(ScalarField::max_abs).fold(0.0, f64::max)
    }

    pub fn max_diff(&self, other: &Self) -> f64 {
        self.comps.iter().zip(&other.comps).map(|(a, b)| a.max_diff(b)).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.comps.iter().all(ScalarField::is_finite)
    }
}

impl Add for &VectorField {
    type Output = VectorField;
    fn add(self, rhs: &VectorField) -> VectorField {
        self.zip_components(rhs, |a, b| a + b)
    }
}

impl Sub for &VectorField {
    type Output = VectorField;
    fn sub(self, rhs: &VectorField) -> VectorField {
        self.zip_components(rhs, |a, b| a - b)
    }
}

/// `dim × dim` tensor field, entry `(i, j)` stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct TensorField {
    dim: usize,
    entries: Vec<ScalarField>,
}

impl TensorField {
    pub fn from_fn(dim: usize, f: impl Fn(usize, usize) -> ScalarField) -> Self {
        let mut entries = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                entries.push(f(i, j));
            }
        }
        let grid = entries[0].grid().clone();
        assert_eq!(grid.dim(), dim);
        assert!(entries.iter().all(|e| *e.grid() == grid), "entries must share a grid");
        Self { dim, entries }
    }

    pub fn zeros(grid: &TorusGrid) -> Self {
        Self::from_fn(grid.dim(), |_, _| ScalarField::zeros(grid))
    }

    /// `u ⊗ v`, entries `u_i v_j`.
    pub fn outer(u: &VectorField, v: &VectorField) -> Self {
        Self::from_fn(u.dim(), |i, j| u.component(i) * v.component(j))
    }

    pub fn grid(&self) -> &TorusGrid {
        self.entries[0].grid()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> &ScalarField {
        &self.entries[i * self.dim + j]
    }

    pub fn get_mut(&mut self, i: usize, j: usize) -> &mut ScalarField {
        &mut self.entries[i * self.dim + j]
    }

    pub fn entries(&self) -> &[ScalarField] {
        &self.entries
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self.get(j, i).clone())
    }

    pub fn map_entries(&self, f: impl Fn(&ScalarField) -> ScalarField) -> Self {
        Self { dim: self.dim, entries: self.entries.iter().map(f).collect() }
    }

    pub fn zip_entries(&self, other: &Self, f: impl Fn(&ScalarField, &ScalarField) -> ScalarField) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().zip(&other.entries).map(|(a, b)| f(a, b)).collect(),
        }
    }

    pub fn scale_by(&self, s: &ScalarField) -> Self {
        self.map_entries(|e| e * s)
    }

    pub fn scaled(&self, a: f64) -> Self {
        self.map_entries(|e| e.scaled(a))
    }

    /// Pointwise `σ : τ`.
    pub fn contract(&self, other: &Self) -> ScalarField {
        let mut out = ScalarField::zeros(self.grid());
        for (a, b) in self.entries.iter().zip(&other.entries) {
            for ((o, x), y) in out.values_mut().iter_mut().zip(a.values()).zip(b.values()) {
                *o += x * y;
            }
        }
        out
    }

    /// Pointwise `|σ|² = σ : σ`.
    pub fn norm_sq(&self) -> ScalarField {
        self.contract(self)
    }

    /// Pointwise matrix-vector product `(σ v)_i = Σ_j σ_ij v_j`.
    pub fn apply(&self, v: &VectorField) -> VectorField {
        VectorField::from_components(
            (0..self.dim)
                .map(|i| {
                    let mut acc = ScalarField::zeros(self.grid());
                    for j in 0..self.dim {
                        acc += &(self.get(i, j) * v.component(j));
                    }
                    acc
                })
                .collect(),
        )
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(ScalarField::max_abs).fold(0.0, f64::max)
    }

    /// Largest pointwise Frobenius norm.
    pub fn max_norm(&self) -> f64 {
        self.norm_sq().max().max(0.0).sqrt()
    }

    pub fn max_diff(&self, other: &Self) -> f64 {
        self.entries.iter().zip(&other.entries).map(|(a, b)| a.max_diff(b)).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(ScalarField::is_finite)
    }
}

impl Add for &TensorField {
    type Output = TensorField;
    fn add(self, rhs: &TensorField) -> TensorField {
        self.zip_entries(rhs, |a, b| a + b)
    }
}

impl Sub for &TensorField {
    type Output = TensorField;
    fn sub(self, rhs: &TensorField) -> TensorField {
        self.zip_entries(rhs, |a, b| a - b)
    }
}
