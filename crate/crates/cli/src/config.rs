//! JSON run configuration.

use std::path::{Path, PathBuf};

use qfluid_core::certify::USpec;
use qfluid_core::recipes::Recipe;
use qfluid_core::solver::{Scheme, SolverConfig};
use qfluid_core::spectral::TorusGrid;
use qfluid_core::state::Params;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    RegNslk,
    AugNslk,
    Elk,
    Sl,
    OracleCompare,
    Certify,
    Sweep,
}

impl Mode {
    pub fn name(self) -> String {
        serde_json::to_value(self).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default()
    }

    /// Modes integrating the augmented system.
    pub fn augmented(self) -> bool {
        !matches!(self, Mode::RegNslk | Mode::Sl)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub dim: usize,
    pub n: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnapshotSource {
    pub snapshot: PathBuf,
}

/// Either a named recipe or `{"snapshot": path}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "serde_json::Value", into = "serde_json::Value")]
pub enum InitialData {
    Recipe(Recipe),
    Snapshot(SnapshotSource),
}

impl TryFrom<serde_json::Value> for InitialData {
    type Error = String;

    fn try_from(v: serde_json::Value) -> Result<Self, String> {
        let res = if v.get("snapshot").is_some() {
            serde_json::from_value(v).map(InitialData::Snapshot)
        } else {
            serde_json::from_value(v).map(InitialData::Recipe)
        };
        res.map_err(|e| e.to_string())
    }
}

impl From<InitialData> for serde_json::Value {
    fn from(d: InitialData) -> Self {
        match d {
            InitialData::Recipe(r) => serde_json::to_value(r),
            InitialData::Snapshot(s) => serde_json::to_value(s),
        }
        .expect("plain data serializes")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    pub grid: GridSpec,
    pub params: Params,
    pub solver: SolverConfig,
    pub initial_data: InitialData,
    #[serde(default)]
    pub reference: Option<USpec>,
    #[serde(default)]
    pub nu_list: Option<Vec<f64>>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
}

/// A parsed configuration together with its source text and location.
#[derive(Clone, Debug)]
pub struct Loaded {
    pub config: RunConfig,
    /// The document as written, echoed into `run.json`.
    pub raw: serde_json::Value,
    pub base_dir: PathBuf,
}

impl Loaded {
    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_str(&text, base_dir)
    }

    pub fn from_str(text: &str, base_dir: PathBuf) -> Result<Self, CliError> {
        let raw: serde_json::Value =
            serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid JSON: {e}")))?;
        let config: RunConfig = serde_json::from_value(raw.clone()).map_err(|e| CliError::Config(e.to_string()))?;
        config.validate()?;
        Ok(Self { config, raw, base_dir })
    }

    /// `QFLUID_OUT` wins over `output_dir`.
    pub fn output_dir(&self) -> Result<PathBuf, CliError> {
        if let Some(dir) = std::env::var_os("QFLUID_OUT").filter(|v| !v.is_empty()) {
            return Ok(PathBuf::from(dir));
        }
        match &self.config.output_dir {
            Some(d) if d.is_absolute() => Ok(d.clone()),
            Some(d) => Ok(self.base_dir.join(d)),
            None => Err(CliError::Config("no output_dir given and QFLUID_OUT is unset".into())),
        }
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }
}

impl RunConfig {
    pub fn grid(&self) -> Result<TorusGrid, CliError> {
        Ok(TorusGrid::new(self.grid.dim, self.grid.n)?)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let grid = self.grid()?;
        self.params.validate()?;
        self.solver.validate()?;
        if self.mode.augmented() {
            if self.solver.scheme != Scheme::Rk4 {
                return Err(CliError::Config(format!("mode {} integrates the augmented system, which needs scheme rk4", self.mode.name())));
            }
            if self.mode != Mode::Sweep {
                self.params.validate_augmented()?;
            }
        }
        if matches!(self.mode, Mode::Elk | Mode::Sl | Mode::OracleCompare) && self.params.nu != 0.0 {
            return Err(CliError::Config(format!("mode {} needs nu = 0", self.mode.name())));
        }
        if let Some(r) = &self.reference {
            r.validate(&grid)?;
        }
        if matches!(self.mode, Mode::Certify | Mode::Sweep) && self.reference.is_none() {
            return Err(CliError::Config(format!("mode {} needs a reference", self.mode.name())));
        }
        match (&self.nu_list, self.mode) {
            (None, Mode::Sweep) => return Err(CliError::Config("sweep mode needs nu_list".into())),
            (Some(list), Mode::Sweep) => {
                if list.is_empty() || list.windows(2).any(|w| !(w[1] < w[0])) {
                    return Err(CliError::Config("nu_list must be nonempty and strictly decreasing".into()));
                }
                for &nu in list {
                    self.params.clone().with_nu(nu).validate_augmented()?;
                }
            }
            (Some(_), _) => return Err(CliError::Config("nu_list is only used in sweep mode".into())),
            _ => {}
        }
        Ok(())
    }
}
