//! `QFLD1` field snapshots with a JSON sidecar.
//!
//! The binary file is one header line `QFLD1 dim=<d> n=<n> comps=<c>`
//! followed by little-endian `f64` values, grid point by grid point with the
//! components of each point stored together.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use qfluid_core::solver::SystemState;
use qfluid_core::spectral::{ScalarField, TorusGrid, VectorField};
use qfluid_core::state::{AugmentedState, FluidState, Params, WaveFunction};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Fluid,
    Augmented,
    Wave,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Sidecar {
    pub time: f64,
    pub kind: Kind,
    pub fields: Vec<String>,
    pub params: Option<Params>,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

pub fn write_fields(path: &Path, grid: &TorusGrid, comps: &[&ScalarField]) -> Result<(), CliError> {
    let mut buf = format!("QFLD1 dim={} n={} comps={}\n", grid.dim(), grid.n(), comps.len()).into_bytes();
    buf.reserve(8 * grid.len() * comps.len());
    for i in 0..grid.len() {
        for c in comps {
            buf.extend_from_slice(&c.values()[i].to_le_bytes());
        }
    }
    let mut f = fs::File::create(path)?;
    f.write_all(&buf)?;
    Ok(())
}

fn header_value(token: Option<&str>, key: &str) -> Option<usize> {
    token?.strip_prefix(key)?.strip_prefix('=')?.parse().ok()
}

pub fn read_fields(path: &Path) -> Result<(TorusGrid, Vec<ScalarField>), CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::MissingData(format!("{}: {e}", path.display())))?;
    let bad = |why: &str| CliError::Config(format!("{}: {why}", path.display()));
    let end = bytes.iter().position(|&b| b == b'\n').ok_or_else(|| bad("missing QFLD1 header"))?;
    let header = std::str::from_utf8(&bytes[..end]).map_err(|_| bad("header is not text"))?;
    let mut tokens = header.split_whitespace();
    if tokens.next() != Some("QFLD1") {
        return Err(bad("not a QFLD1 file"));
    }
    let dim = header_value(tokens.next(), "dim").ok_or_else(|| bad("bad dim"))?;
    let n = header_value(tokens.next(), "n").ok_or_else(|| bad("bad n"))?;
    let comps = header_value(tokens.next(), "comps").ok_or_else(|| bad("bad comps"))?;
    let grid = TorusGrid::new(dim, n)?;
    let body = &bytes[end + 1..];
    if body.len() != 8 * grid.len() * comps {
        return Err(bad(&format!("expected {} values, found {} bytes", grid.len() * comps, body.len())));
    }
    let mut data = vec![Vec::with_capacity(grid.len()); comps];
    for (k, chunk) in body.chunks_exact(8).enumerate() {
        data[k % comps].push(f64::from_le_bytes(chunk.try_into().expect("8 bytes")));
    }
    let fields = data.into_iter().map(|v| ScalarField::from_vec(&grid, v)).collect();
    Ok((grid, fields))
}

fn vector_fields(prefix: &str, dim: usize) -> Vec<String> {
    (0..dim).map(|a| format!("{prefix}{a}")).collect()
}

fn write_sidecar(path: &Path, sidecar: &Sidecar) -> Result<(), CliError> {
    fs::write(sidecar_path(path), serde_json::to_string_pretty(sidecar)?)?;
    Ok(())
}

pub fn write_state(path: &Path, state: &SystemState, params: &Params) -> Result<(), CliError> {
    let (kind, fields, comps): (Kind, Vec<String>, Vec<&ScalarField>) = match state {
        SystemState::Reg(s) => {
            let mut names = vec!["rho".to_string()];
            names.extend(vector_fields("u", s.u.dim()));
            let mut comps = vec![&s.rho];
            comps.extend(s.u.components());
            (Kind::Fluid, names, comps)
        }
        SystemState::Aug(a) => {
            let mut names = vec!["rho".to_string()];
            names.extend(vector_fields("w", a.w.dim()));
            names.extend(vector_fields("vbar", a.vbar.dim()));
            let mut comps = vec![&a.rho];
            comps.extend(a.w.components());
            comps.extend(a.vbar.components());
            (Kind::Augmented, names, comps)
        }
    };
    write_fields(path, comps[0].grid(), &comps)?;
    write_sidecar(path, &Sidecar { time: state.time(), kind, fields, params: Some(params.clone()) })
}

pub fn write_wave(path: &Path, wave: &WaveFunction, params: &Params) -> Result<(), CliError> {
    let (re, im) = wave.parts();
    write_fields(path, wave.grid(), &[&re, &im])?;
    write_sidecar(
        path,
        &Sidecar {
            time: wave.time,
            kind: Kind::Wave,
            fields: vec!["re".into(), "im".into()],
            params: Some(params.clone()),
        },
    )
}

/// A snapshot read back from disk.
pub enum Loaded {
    Fluid(FluidState),
    Augmented(AugmentedState),
    Wave(WaveFunction),
}

/// Reads a snapshot. Without a sidecar the file is taken to hold `ρ, u`.
pub fn read_snapshot(path: &Path) -> Result<Loaded, CliError> {
    let (grid, mut comps) = read_fields(path)?;
    let side = sidecar_path(path);
    let sidecar: Option<Sidecar> = if side.exists() {
        Some(serde_json::from_str(&fs::read_to_string(&side)?)?)
    } else {
        None
    };
    let time = sidecar.as_ref().map_or(0.0, |s| s.time);
    let kind = sidecar.as_ref().map_or(Kind::Fluid, |s| s.kind);
    let d = grid.dim();
    let expected = match kind {
        Kind::Fluid => 1 + d,
        Kind::Augmented => 1 + 2 * d,
        Kind::Wave => 2,
    };
    if comps.len() != expected {
        return Err(CliError::Config(format!(
            "{}: {kind:?} snapshot needs {expected} components, found {}",
            path.display(),
            comps.len()
        )));
    }
    Ok(match kind {
        Kind::Fluid => {
            let u = comps.split_off(1);
            let rho = comps.pop().expect("density");
            Loaded::Fluid(FluidState::new(rho, VectorField::from_components(u), time))
        }
        Kind::Augmented => {
            let vbar = comps.split_off(1 + d);
            let w = comps.split_off(1);
            let rho = comps.pop().expect("density");
            Loaded::Augmented(AugmentedState {
                rho,
                w: VectorField::from_components(w),
                vbar: VectorField::from_components(vbar),
                time,
            })
        }
        Kind::Wave => {
            let psi = comps[0].values().iter().zip(comps[1].values()).map(|(&a, &b)| Complex64::new(a, b)).collect();
            Loaded::Wave(WaveFunction::new(&grid, psi, time))
        }
    })
}
