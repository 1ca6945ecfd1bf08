//! Scenario and batch file formats (JSON).
//!
//! ```json
//! {
//!   "name": "amplitude_damping",
//!   "dim": 2,
//!   "beta": 1.0,
//!   "h_initial": { "diag": [0.0, 1.0] },
//!   "h_final": { "matrix": [[[0, 0], [0, 0]], [[0, 0], [1, 0]]] },
//!   "channel": { "preset": "amplitude_damping", "params": [1.0] },
//!   "seed": 0,
//!   "tolerances": { "identity_rtol": 1e-8, "bin_tol_scale": 1e-9 }
//! }
//! ```
//!
//! Complex entries are `[re, im]` pairs. A channel is either a preset with
//! parameters or an explicit list of Kraus matrices under `"kraus"`.

use std::fs;
use std::path::{Path, PathBuf};

use fluctlab::channels::{preset, KrausChannel};
use fluctlab::distributions::DEFAULT_BIN_SCALE;
use fluctlab::numerics::{c, diag, ComplexMatrix};
use fluctlab::states::Hamiltonian;
use fluctlab::thermo::Scenario;
use serde::Deserialize;

use crate::CliError;

pub const DEFAULT_RESIDUAL_TOL: f64 = 1e-8;

pub type ComplexEntry = [f64; 2];
pub type MatrixEntries = Vec<Vec<ComplexEntry>>;

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MatrixSpec {
    #[serde(default)]
    pub diag: Option<Vec<f64>>,
    #[serde(default)]
    pub matrix: Option<MatrixEntries>,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpec {
    #[serde(default)]
    pub preset: Option<String>,
    #[serde(default)]
    pub params: Vec<f64>,
    #[serde(default)]
    pub kraus: Option<Vec<MatrixEntries>>,
}

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub identity_rtol: Option<f64>,
    pub bin_tol_scale: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: String,
    pub dim: usize,
    pub beta: f64,
    pub h_initial: MatrixSpec,
    pub h_final: MatrixSpec,
    pub channel: ChannelSpec,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tolerances: Tolerances,
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn parse<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = read(path)?;
    serde_json::from_str(&text).map_err(|source| CliError::Parse {
        path: path.to_path_buf(),
        source,
    })
}

fn entries_to_matrix(entries: &MatrixEntries) -> Result<ComplexMatrix, String> {
    let rows = entries.len();
    if rows == 0 {
        return Err("matrix has no rows".into());
    }
    if let Some(bad) = entries.iter().position(|r| r.len() != rows) {
        return Err(format!(
            "matrix must be square: row {bad} has {} entries, expected {rows}",
            entries[bad].len()
        ));
    }
    let m = ComplexMatrix::from_fn(rows, rows, |i, j| c(entries[i][j][0], entries[i][j][1]));
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err("matrix has non-finite entries".into());
    }
    Ok(m)
}

impl MatrixSpec {
    fn to_matrix(&self) -> Result<ComplexMatrix, String> {
        match (&self.diag, &self.matrix) {
            (Some(d), None) => {
                if d.iter().any(|x| !x.is_finite()) {
                    return Err("diag has non-finite entries".into());
                }
                Ok(diag(d))
            }
            (None, Some(m)) => entries_to_matrix(m),
            _ => Err("give exactly one of `diag` or `matrix`".into()),
        }
    }
}

impl ScenarioFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        parse(path)
    }

    pub fn residual_tol(&self) -> f64 {
        self.tolerances.identity_rtol.unwrap_or(DEFAULT_RESIDUAL_TOL)
    }

    /// Builds the model objects. `origin` names the file in error messages.
    pub fn resolve(&self, origin: &Path) -> Result<Scenario, CliError> {
        let invalid = |field: &str, message: String| CliError::Invalid {
            path: origin.to_path_buf(),
            message: format!("{field}: {message}"),
        };
        if self.dim < 2 {
            return Err(invalid("dim", format!("must be at least 2, got {}", self.dim)));
        }
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(invalid("beta", format!("must be positive and finite, got {}", self.beta)));
        }
        let hamiltonian = |field: &str, spec: &MatrixSpec| -> Result<Hamiltonian, CliError> {
            let m = spec.to_matrix().map_err(|e| invalid(field, e))?;
            if m.nrows() != self.dim {
                return Err(invalid(field, format!("dimension {} does not match dim = {}", m.nrows(), self.dim)));
            }
            Hamiltonian::new(m).map_err(|e| invalid(field, e.to_string()))
        };
        let h_initial = hamiltonian("h_initial", &self.h_initial)?;
        let h_final = hamiltonian("h_final", &self.h_final)?;
        let channel = self.channel.build(self.dim, self.seed).map_err(|e| invalid("channel", e))?;
        let scale = self.tolerances.bin_tol_scale.unwrap_or(DEFAULT_BIN_SCALE);
        if !(scale.is_finite() && scale > 0.0) {
            return Err(invalid("tolerances.bin_tol_scale", format!("must be positive, got {scale}")));
        }
        if let Some(tol) = self.tolerances.identity_rtol {
            if !(tol.is_finite() && tol > 0.0) {
                return Err(invalid("tolerances.identity_rtol", format!("must be positive, got {tol}")));
            }
        }
        let scenario = Scenario::new(&self.name, self.beta, h_initial, h_final, channel)?;
        Ok(scenario.with_bin_scale(scale))
    }
}

impl ChannelSpec {
    fn build(&self, dim: usize, seed: u64) -> Result<KrausChannel, String> {
        match (&self.preset, &self.kraus) {
            (Some(name), None) => preset(name, &self.params, dim, seed).map_err(|e| e.to_string()),
            (None, Some(list)) => {
                if !self.params.is_empty() {
                    return Err("`params` only applies to presets".into());
                }
                let ops = list
                    .iter()
                    .enumerate()
                    .map(|(k, m)| entries_to_matrix(m).map_err(|e| format!("kraus[{k}]: {e}")))
                    .collect::<Result<Vec<_>, _>>()?;
                if let Some(op) = ops.iter().find(|op| op.nrows() != dim) {
                    return Err(format!("Kraus dimension {} does not match dim = {dim}", op.nrows()));
                }
                KrausChannel::new(ops, "kraus").map_err(|e| e.to_string())
            }
            _ => Err("give exactly one of `preset` or `kraus`".into()),
        }
    }
}

/// Randomized verification campaign.
#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct BatchSpec {
    pub count: usize,
    pub dim_range: [usize; 2],
    pub n_kraus_range: [usize; 2],
    pub beta_set: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub unital_only: bool,
    #[serde(default)]
    pub tolerances: Tolerances,
}

impl BatchSpec {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let spec: Self = parse(path)?;
        spec.validate(path)?;
        Ok(spec)
    }

    pub fn validate(&self, origin: &Path) -> Result<(), CliError> {
        let invalid = |message: String| CliError::Invalid {
            path: PathBuf::from(origin),
            message,
        };
        if self.count == 0 {
            return Err(invalid("count must be at least 1".into()));
        }
        let [dlo, dhi] = self.dim_range;
        if dlo < 2 || dlo > dhi || dhi > 64 {
            return Err(invalid(format!("dim_range must satisfy 2 <= min <= max <= 64, got {:?}", self.dim_range)));
        }
        let [klo, khi] = self.n_kraus_range;
        if klo < 1 || klo > khi || khi > 64 {
            return Err(invalid(format!(
                "n_kraus_range must satisfy 1 <= min <= max <= 64, got {:?}",
                self.n_kraus_range
            )));
        }
        if self.beta_set.is_empty() || self.beta_set.iter().any(|b| !(b.is_finite() && *b > 0.0)) {
            return Err(invalid("beta_set must be a non-empty list of positive values".into()));
        }
        Ok(())
    }
}
