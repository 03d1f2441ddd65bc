//! Manufactured references, Gronwall certificates and the vanishing
//! viscosity sweep.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::{rel_entropy_nslk, ErrorMode, NslkAccumulators, StrongReference};
use crate::oracle::run_sl;
use crate::recipes::random_band_limited;
use crate::solver::{run, ReferenceSource, SolverConfig, SystemState, Trajectory};
use crate::spectral::{divergence, gradient, vector_gradient, Dealias, ScalarField, TorusGrid, VectorField};
use crate::state::{augment, floored, inverse_madelung, madelung, FluidState, Params};

/// Structural factor in the estimate of the Gronwall constant.
pub const C_STRUCT: f64 = 8.0;

fn default_kmax() -> i64 {
    4
}

/// Closed-form reference velocity fields `U(t, x)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum USpec {
    Zero,
    Uniform { c: Vec<f64> },
    /// `a sin(k xₐ − ωt) eₐ` along `axis`.
    TravelingWave { amplitude: f64, wavenumber: i64, speed: f64, axis: usize },
    /// Steady seeded band-limited field, max-norm `amplitude`.
    Random {
        seed: u64,
        amplitude: f64,
        #[serde(default = "default_kmax")]
        kmax: i64,
    },
}

impl USpec {
    /// The family every certificate check samples.
    pub fn family() -> Vec<USpec> {
        vec![
            USpec::Zero,
            USpec::Uniform { c: vec![0.1] },
            USpec::TravelingWave { amplitude: 0.1, wavenumber: 1, speed: 1.0, axis: 0 },
            USpec::Random { seed: 11, amplitude: 0.1, kmax: 4 },
            USpec::Random { seed: 12, amplitude: 0.1, kmax: 4 },
        ]
    }

    pub fn validate(&self, grid: &TorusGrid) -> Result<()> {
        match self {
            Self::Uniform { c } if c.len() != grid.dim() => Err(Error::Param(format!(
                "uniform U has {} components, grid has dim {}",
                c.len(),
                grid.dim()
            ))),
            Self::TravelingWave { axis, .. } if *axis >= grid.dim() => {
                Err(Error::Param(format!("traveling wave axis {axis} out of range")))
            }
            Self::Random { kmax, .. } if *kmax < 1 => Err(Error::Param("random U needs kmax >= 1".into())),
            _ => Ok(()),
        }
    }

    pub fn velocity(&self, grid: &TorusGrid, t: f64) -> VectorField {
        match self {
            Self::Zero => VectorField::zeros(grid),
            Self::Uniform { c } => VectorField::uniform(grid, c),
            Self::TravelingWave { amplitude, wavenumber, speed, axis } => {
                let k = *wavenumber as f64;
                VectorField::from_fn(grid, |x, a| {
                    if a == *axis {
                        amplitude * (k * x[a] - speed * t).sin()
                    } else {
                        0.0
                    }
                })
            }
            Self::Random { seed, amplitude, kmax } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                VectorField::from_components(
                    (0..grid.dim()).map(|_| random_band_limited(grid, *kmax, *amplitude, &mut rng)).collect(),
                )
            }
        }
    }

    /// Analytic `∂ₜU`.
    pub fn time_derivative(&self, grid: &TorusGrid, t: f64) -> VectorField {
        match self {
            Self::TravelingWave { amplitude, wavenumber, speed, axis } => {
                let k = *wavenumber as f64;
                VectorField::from_fn(grid, |x, a| {
                    if a == *axis {
                        -amplitude * speed * (k * x[a] - speed * t).cos()
                    } else {
                        0.0
                    }
                })
            }
            _ => VectorField::zeros(grid),
        }
    }
}

/// Reference whose density is transported by a prescribed `U` through
/// `∂ₜR + Div(RU) = 0`, advanced lazily by RK4 with step `dt`.
pub struct ManufacturedReference {
    spec: USpec,
    params: Params,
    mode: ErrorMode,
    dt: f64,
    r: ScalarField,
    time: f64,
}

impl ManufacturedReference {
    pub fn new(spec: USpec, r0: ScalarField, params: &Params, dt: f64, mode: ErrorMode) -> Result<Self> {
        spec.validate(r0.grid())?;
        floored(&r0, params.density_floor)?;
        if !(dt > 0.0) {
            return Err(Error::Param("reference step must be > 0".into()));
        }
        Ok(Self { spec, params: params.clone(), mode, dt, r: r0, time: 0.0 })
    }

    pub fn density(&self) -> &ScalarField {
        &self.r
    }

    fn rate(&self, r: &ScalarField, t: f64) -> ScalarField {
        let u = self.spec.velocity(r.grid(), t);
        divergence(&u.scale_by(r).dealias()).scaled(-1.0)
    }

    fn rk4(&mut self, h: f64) {
        let t = self.time;
        let r = &self.r;
        let k1 = self.rate(r, t);
        let mut y = r.clone();
        y.axpy(0.5 * h, &k1);
        let k2 = self.rate(&y, t + 0.5 * h);
        let mut y = r.clone();
        y.axpy(0.5 * h, &k2);
        let k3 = self.rate(&y, t + 0.5 * h);
        let mut y = r.clone();
        y.axpy(h, &k3);
        let k4 = self.rate(&y, t + h);
        let mut next = r.clone();
        next.axpy(h / 6.0, &k1);
        next.axpy(h / 3.0, &k2);
        next.axpy(h / 3.0, &k3);
        next.axpy(h / 6.0, &k4);
        self.r = next;
        self.time = t + h;
    }

    fn advance_to(&mut self, t: f64) -> Result<()> {
        let eps = 1e-12 * (1.0 + t.abs());
        if t < self.time - eps {
            return Err(Error::GridMismatch(format!(
                "reference is at t = {}, cannot return to t = {t}",
                self.time
            )));
        }
        while self.time < t - eps {
            let h = self.dt.min(t - self.time);
            self.rk4(h);
        }
        self.time = self.time.max(t);
        Ok(())
    }
}

impl ReferenceSource for ManufacturedReference {
    fn reference_at(&mut self, time: f64) -> Result<StrongReference> {
        self.advance_to(time)?;
        let grid = self.r.grid();
        StrongReference::new(
            self.r.clone(),
            self.spec.velocity(grid, time),
            &self.spec.time_derivative(grid, time),
            time,
            &self.params,
            self.mode,
        )
    }
}

/// Reference fields at `0, dt, 2dt, …, t_end`.
pub fn manufactured_reference(
    spec: &USpec,
    r0: &ScalarField,
    params: &Params,
    dt: f64,
    t_end: f64,
    mode: ErrorMode,
) -> Result<Vec<StrongReference>> {
    let mut src = ManufacturedReference::new(spec.clone(), r0.clone(), params, dt, mode)?;
    let steps = ((t_end / dt) - 1e-9).ceil().max(1.0) as usize;
    (0..=steps).map(|i| src.reference_at((i as f64 * dt).min(t_end))).collect()
}

/// `c_struct (1 + sup_t(‖∇V̄‖ + ‖∇W‖ + ‖V̄‖ + ‖W‖ + ‖∇log R‖)) (1 + ν/ħ_ν)`
/// with pointwise Frobenius/Euclidean max-norms.
pub fn estimate_c(refs: &[StrongReference], params: &Params, c_struct: f64) -> f64 {
    let sup = refs
        .iter()
        .map(|r| {
            vector_gradient(&r.vbar).max_norm()
                + vector_gradient(&r.w).max_norm()
                + r.vbar.max_norm()
                + r.w.max_norm()
                + gradient(&r.r.map(|v| v.max(params.density_floor).ln())).max_norm()
        })
        .fold(0.0, f64::max);
    let viscous = if params.nu == 0.0 { 1.0 } else { 1.0 + params.nu / params.hbar_nu() };
    c_struct * (1.0 + sup) * viscous
}

/// A sampled check of `ℰ(t) ≤ ℰ(0)e^{Ct} + b(t) + C∫₀ᵗ b(s)e^{C(t−s)} ds`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    #[serde(rename = "C_used")]
    pub c_used: f64,
    pub c_struct: f64,
    pub tol_cert: f64,
    pub times: Vec<f64>,
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    pub b: Vec<f64>,
    pub margin: f64,
    pub verdict: bool,
}

/// Default slack `1e−6 (1 + |ℰ(0)|)`.
pub fn default_tolerance(e0: f64) -> f64 {
    1e-6 * (1.0 + e0.abs())
}

/// Builds the certificate from sampled `ℰ` and `b`.
pub fn certificate_from_series(
    times: &[f64],
    lhs: &[f64],
    b: &[f64],
    c: f64,
    c_struct: f64,
    tol: Option<f64>,
) -> Result<Certificate> {
    if times.is_empty() || lhs.len() != times.len() || b.len() != times.len() {
        return Err(Error::GridMismatch(format!(
            "series lengths differ: {} times, {} lhs, {} b",
            times.len(),
            lhs.len(),
            b.len()
        )));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::GridMismatch("times must be strictly increasing".into()));
    }
    let e0 = lhs[0];
    let tol = tol.unwrap_or_else(|| default_tolerance(e0));
    let t0 = times[0];
    let mut rhs = Vec::with_capacity(times.len());
    for (j, &t) in times.iter().enumerate() {
        // trapezoid on the sample grid
        let mut conv = 0.0;
        for i in 0..j {
            let f0 = b[i] * (c * (t - times[i])).exp();
            let f1 = b[i + 1] * (c * (t - times[i + 1])).exp();
            conv += 0.5 * (times[i + 1] - times[i]) * (f0 + f1);
        }
        rhs.push(e0 * (c * (t - t0)).exp() + b[j] + c * conv);
    }
    let margin = rhs.iter().zip(lhs).map(|(r, l)| r - l).fold(f64::INFINITY, f64::min);
    Ok(Certificate {
        c_used: c,
        c_struct,
        tol_cert: tol,
        times: times.to_vec(),
        lhs: lhs.to_vec(),
        rhs,
        b: b.to_vec(),
        margin,
        verdict: margin >= -tol,
    })
}

/// Certificate of a run made against a reference (reports carry the relative
/// entropy and `b`).
pub fn gronwall_certificate(traj: &Trajectory, c: f64, c_struct: f64, tol: Option<f64>) -> Result<Certificate> {
    let mut times = Vec::new();
    let mut lhs = Vec::new();
    let mut b = Vec::new();
    for r in &traj.reports {
        match (r.rel_entropy_total, r.b_accumulator) {
            (Some(e), Some(bv)) => {
                times.push(r.time);
                lhs.push(e);
                b.push(bv);
            }
            _ => return Err(Error::GridMismatch("trajectory was not run against a reference".into())),
        }
    }
    certificate_from_series(&times, &lhs, &b, c, c_struct, tol)
}

/// Certificate for a run from `initial` against the manufactured reference
/// of `spec` started at the same density. If the run stops early the
/// certificate covers the part that was computed; check
/// [`Trajectory::failure`].
pub fn certify_run(
    initial: &FluidState,
    params: &Params,
    config: &SolverConfig,
    spec: &USpec,
) -> Result<(Trajectory, Certificate)> {
    let mut p = params.clone();
    p.density_floor = config.density_floor;
    let mode = if p.nu == 0.0 { ErrorMode::Elk } else { ErrorMode::NslkNu };
    let refs = manufactured_reference(spec, &initial.rho, &p, config.dt, config.t_end, mode)?;
    let c = estimate_c(&refs, &p, C_STRUCT);
    let mut src = ManufacturedReference::new(spec.clone(), initial.rho.clone(), &p, config.dt, mode)?;
    let aug = augment(initial, &p)?;
    let traj = run(SystemState::Aug(aug), &p, config, Some(&mut src))?;
    let cert = gronwall_certificate(&traj, c, C_STRUCT, None)?;
    Ok((traj, cert))
}

/// One row of the vanishing viscosity sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub nu: f64,
    /// Relative entropy against the manufactured reference at `t_end`.
    pub rel_entropy_ref: Option<f64>,
    /// Relative entropy against the Schrödinger-Langevin state at `t_end`.
    pub rel_entropy_oracle: Option<f64>,
    pub verdict: Option<bool>,
    /// `‖𝓔^ν − 𝓔‖∞ / ν` at `t = 0`.
    pub residual_ratio: Option<f64>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub entries: Vec<SweepEntry>,
    /// Least-squares slope of `log relE_oracle` against `log ν` over `ν > 0`.
    pub order_oracle: Option<f64>,
    pub order_ref: Option<f64>,
}

fn fitted_order(pairs: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> =
        pairs.iter().filter(|(n, v)| *n > 0.0 && *v > 0.0).map(|(n, v)| (n.ln(), v.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / m, sy / m);
    let num: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = pts.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    (den > 0.0).then(|| num / den)
}

fn sweep_one(
    initial: &FluidState,
    base: &Params,
    nu: f64,
    config: &SolverConfig,
    spec: &USpec,
    oracle_final: Option<&FluidState>,
) -> SweepEntry {
    let mut entry = SweepEntry {
        nu,
        rel_entropy_ref: None,
        rel_entropy_oracle: None,
        verdict: None,
        residual_ratio: None,
        error: None,
    };
    let outcome = (|| -> Result<()> {
        let mut p = base.clone().with_nu(nu);
        p.density_floor = config.density_floor;
        p.validate_augmented()?;
        let (traj, cert) = certify_run(initial, &p, config, spec)?;
        if let Some(e) = &traj.failure {
            return Err(e.clone());
        }
        entry.verdict = Some(cert.verdict);
        entry.rel_entropy_ref = traj.reports.last().and_then(|r| r.rel_entropy_total);
        if nu > 0.0 {
            let grid = initial.grid();
            let r0 = StrongReference::new(
                initial.rho.clone(),
                spec.velocity(grid, 0.0),
                &spec.time_derivative(grid, 0.0),
                0.0,
                &p,
                ErrorMode::Elk,
            )?;
            let rv = StrongReference::new(
                initial.rho.clone(),
                spec.velocity(grid, 0.0),
                &spec.time_derivative(grid, 0.0),
                0.0,
                &p,
                ErrorMode::NslkNu,
            )?;
            entry.residual_ratio = Some(rv.escript.max_diff(&r0.escript) / nu);
        }
        if let (Some(target), SystemState::Aug(aug)) = (oracle_final, traj.final_state()) {
            let grid = target.grid();
            let reference = StrongReference::new(
                target.rho.clone(),
                target.u.clone(),
                &VectorField::zeros(grid),
                target.time,
                &p,
                ErrorMode::Elk,
            )?;
            let (instant, _) = rel_entropy_nslk(aug, &reference, &p, &NslkAccumulators::default())?;
            entry.rel_entropy_oracle = Some(instant);
        }
        Ok(())
    })();
    if let Err(e) = outcome {
        entry.error = Some(e.to_string());
    }
    entry
}

/// Runs the augmented system for every `ν` (in parallel) and compares each
/// end state with the manufactured reference and with the
/// Schrödinger-Langevin solution from the same data.
pub fn inviscid_sweep(
    initial: &FluidState,
    base: &Params,
    nu_list: &[f64],
    config: &SolverConfig,
    spec: &USpec,
) -> Result<SweepReport> {
    if nu_list.is_empty() {
        return Err(Error::Param("nu_list is empty".into()));
    }
    if nu_list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::Param("nu_list must be strictly decreasing".into()));
    }
    config.validate()?;
    let mut p0 = base.clone().with_nu(0.0);
    p0.density_floor = config.density_floor;
    let oracle_final = inverse_madelung(initial, &p0)
        .and_then(|psi| run_sl(&psi, &p0, config.dt, config.t_end))
        .and_then(|traj| match traj.failure {
            Some(e) => Err(e),
            None => madelung(traj.final_wave(), &p0),
        })
        .ok();
    let entries: Vec<SweepEntry> = nu_list
        .par_iter()
        .map(|&nu| sweep_one(initial, base, nu, config, spec, oracle_final.as_ref()))
        .collect();
    let pairs = |f: fn(&SweepEntry) -> Option<f64>| -> Vec<(f64, f64)> {
        entries.iter().filter_map(|e| f(e).map(|v| (e.nu, v))).collect()
    };
    let order_oracle = fitted_order(&pairs(|e| e.rel_entropy_oracle));
    let order_ref = fitted_order(&pairs(|e| e.rel_entropy_ref));
    Ok(SweepReport { entries, order_oracle, order_ref })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::integrate;

    fn g1(n: usize) -> TorusGrid {
        TorusGrid::new(1, n).unwrap()
    }

    #[test]
    fn zero_reference_is_static() {
        let g = g1(16);
        let p = Params::elk(1.0, 1.0, 1.0);
        let refs = manufactured_reference(&USpec::Zero, &ScalarField::constant(&g, 1.0), &p, 0.01, 0.1, ErrorMode::Elk).unwrap();
        assert_eq!(refs.len(), 11);
        for r in &refs {
            assert!(r.r.max_diff(&ScalarField::constant(&g, 1.0)) < 1e-15);
            assert!(r.vbar.max_abs() < 1e-15 && r.escript.max_abs() < 1e-15);
        }
    }

    #[test]
    fn uniform_reference_feels_drag() {
        let g = g1(16);
        let p = Params::elk(1.0, 0.5, 1.0);
        let spec = USpec::Uniform { c: vec![0.2] };
        let refs = manufactured_reference(&spec, &ScalarField::constant(&g, 1.0), &p, 0.01, 0.05, ErrorMode::Elk).unwrap();
        for r in &refs {
            assert!(r.escript.max_diff(&VectorField::uniform(&g, &[0.1])) < 1e-14);
        }
    }

    #[test]
    fn traveling_wave_reference_conserves_mass() {
        let g = g1(64);
        let p = Params::elk(1.0, 0.5, 1.0);
        let spec = USpec::TravelingWave { amplitude: 0.1, wavenumber: 1, speed: 1.0, axis: 0 };
        let r0 = ScalarField::from_fn(&g, |x| 1.0 + 0.2 * x[0].cos());
        let refs = manufactured_reference(&spec, &r0, &p, 1e-3, 0.5, ErrorMode::Elk).unwrap();
        let m0 = integrate(&r0);
        for r in &refs {
            assert!((r.mass() - m0).abs() <= 1e-10 * m0);
        }
    }

    #[test]
    fn c_estimate_of_rest_reference() {
        let g = g1(16);
        let p = Params::elk(1.0, 1.0, 1.0).with_nu(0.1);
        let refs = manufactured_reference(&USpec::Zero, &ScalarField::constant(&g, 1.0), &p, 0.1, 0.2, ErrorMode::NslkNu).unwrap();
        let c = estimate_c(&refs, &p, C_STRUCT);
        assert!((c - C_STRUCT * (1.0 + 0.1 / p.hbar_nu())).abs() < 1e-12);
        let p0 = Params::elk(1.0, 1.0, 1.0);
        assert_eq!(estimate_c(&refs, &p0, C_STRUCT), C_STRUCT);
    }

    #[test]
    fn certificate_of_exact_match() {
        let t = [0.0, 0.1, 0.2];
        let cert = certificate_from_series(&t, &[0.0; 3], &[0.0; 3], 3.0, C_STRUCT, None).unwrap();
        assert!(cert.verdict);
        assert_eq!(cert.margin, 0.0);
        assert!(certificate_from_series(&[0.0, 0.0], &[0.0; 2], &[0.0; 2], 1.0, C_STRUCT, None).is_err());
    }

    #[test]
    fn certificate_is_monotone_in_c() {
        let t: Vec<f64> = (0..20).map(|i| i as f64 * 0.05).collect();
        let lhs: Vec<f64> = t.iter().map(|s| 0.01 + 0.02 * s * s).collect();
        let b: Vec<f64> = t.iter().map(|s| 0.001 * s).collect();
        let mut prev = f64::NEG_INFINITY;
        for c in [0.0, 0.5, 1.0, 2.0, 4.0] {
            let cert = certificate_from_series(&t, &lhs, &b, c, C_STRUCT, None).unwrap();
            assert!(cert.rhs.iter().all(|r| r.is_finite()));
            assert!(cert.margin >= prev);
            prev = cert.margin;
        }
    }

    #[test]
    fn fitted_order_of_power_law() {
        let pairs: Vec<(f64, f64)> = [0.1, 0.05, 0.025].iter().map(|&n: &f64| (n, 3.0 * n * n)).collect();
        assert!((fitted_order(&pairs).unwrap() - 2.0).abs() < 1e-12);
    }
}
