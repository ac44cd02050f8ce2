//! Run configuration, read from a TOML file.
//!
//! Every key is optional; unknown keys are rejected. Defaults:
//!
//! ```toml
//! seed = 42            # --seed wins
//! workers = 0          # 0 = all cores; --workers wins
//! format = "csv"       # "csv" | "json"; --format wins
//! # out = "table.csv"  # stdout when absent; --out wins
//!
//! [model]
//! topology = "ring"    # "ring" | "chain"
//! n = 8
//! spin = "1/2"         # or: spins = ["3/2", "3/2", ...] (then n may be omitted)
//! # defect = { site = 5, spin = "1" }   # 1-based site; spin "0" opens a ring
//!
//! [solver]
//! tol = 1e-11
//! max_krylov = 250
//! max_restarts = 40
//! degeneracy_tol = 1e-9
//! dense_below = 64
//! dense_limit = 4096
//! sector_dense_limit = 8192
//! degenerate_cap = 16
//!
//! [scf]
//! etas = [1, -1]
//! damping = 0.5
//! tol = 1e-10
//! max_iter = 10000
//! init_fractions = [0.0, 0.25, 0.5, 0.75, 1.0]
//! eigen_tol = 1e-12    # eigensolver tolerance inside the fixed-point loop
//!
//! [map]                # the model must be a chain
//! theta_points = 13    # equally spaced on [0, pi]
//! z_diff = [0.0, 0.25, 0.45]
//! moduli = [0.5, 0.25, 0.05]
//!
//! [bisep]
//! offset = 1           # 1-based first site of A
//! length = 1
//!
//! [defect]             # the model must be a homogeneous ring
//! site = 5
//! spins = ["0", "1/2", "1", "3/2", "2", "5/2"]
//!
//! [verdict]
//! energy = -20.0       # required by the verdict command
//!
//! [thermal]
//! t_min = 0.05
//! t_max = 5.0
//! points = 100
//! # temperatures = [0.1, 0.5]   # replaces the linear grid
//! thresholds = []
//! include_global_ebs = true
//! ```

use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::eigensolver::SolverOptions;
use crate::error::{Error, Result};
use crate::hamiltonian::{SpinSystem, Topology};
use crate::scf::{Eta, ScfConfig};
use crate::spin::SpinLength;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub format: Option<Format>,
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub scf: ScfSection,
    #[serde(default)]
    pub map: MapSection,
    #[serde(default)]
    pub bisep: BisepSection,
    #[serde(default)]
    pub defect: DefectSection,
    #[serde(default)]
    pub verdict: VerdictSection,
    #[serde(default)]
    pub thermal: ThermalSection,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default = "default_topology")]
    pub topology: String,
    pub n: Option<usize>,
    pub spin: Option<String>,
    pub spins: Option<Vec<String>>,
    pub defect: Option<DefectSpec>,
}

fn default_topology() -> String {
    "ring".into()
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            topology: default_topology(),
            n: Some(8),
            spin: Some("1/2".into()),
            spins: None,
            defect: None,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DefectSpec {
    pub site: usize,
    pub spin: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub tol: f64,
    pub max_krylov: usize,
    pub max_restarts: usize,
    pub degeneracy_tol: f64,
    pub dense_below: usize,
    pub dense_limit: usize,
    pub sector_dense_limit: usize,
    pub degenerate_cap: usize,
}

impl Default for SolverSection {
    fn default() -> Self {
        let o = SolverOptions::default();
        Self {
            tol: o.tol,
            max_krylov: o.max_krylov,
            max_restarts: o.max_restarts,
            degeneracy_tol: o.degeneracy_tol,
            dense_below: o.dense_below,
            dense_limit: o.dense_limit,
            sector_dense_limit: o.sector_dense_limit,
            degenerate_cap: o.degenerate_cap,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScfSection {
    pub etas: Vec<i8>,
    pub damping: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub init_fractions: Vec<f64>,
    pub eigen_tol: f64,
}

impl Default for ScfSection {
    fn default() -> Self {
        let c = ScfConfig::default();
        Self {
            etas: vec![1, -1],
            damping: c.damping,
            tol: c.tol,
            max_iter: c.max_iter,
            init_fractions: c.init_fractions,
            eigen_tol: c.solver.tol,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MapSection {
    pub theta_points: usize,
    pub z_diff: Vec<f64>,
    pub moduli: Vec<f64>,
}

impl Default for MapSection {
    fn default() -> Self {
        Self {
            theta_points: 13,
            z_diff: vec![0.0, 0.25, 0.45],
            moduli: vec![0.5, 0.25, 0.05],
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BisepSection {
    pub offset: usize,
    pub length: usize,
}

impl Default for BisepSection {
    fn default() -> Self {
        Self { offset: 1, length: 1 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DefectSection {
    pub site: usize,
    pub spins: Vec<String>,
}

impl Default for DefectSection {
    fn default() -> Self {
        Self {
            site: 5,
            spins: ["0", "1/2", "1", "3/2", "2", "5/2"].map(String::from).to_vec(),
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerdictSection {
    pub energy: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ThermalSection {
    pub t_min: f64,
    pub t_max: f64,
    pub points: usize,
    pub temperatures: Option<Vec<f64>>,
    pub thresholds: Vec<f64>,
    pub include_global_ebs: bool,
}

impl Default for ThermalSection {
    fn default() -> Self {
        Self {
            t_min: 0.05,
            t_max: 5.0,
            points: 100,
            temperatures: None,
            thresholds: Vec::new(),
            include_global_ebs: true,
        }
    }
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

fn parse_spin(s: &str) -> Result<SpinLength> {
    SpinLength::from_str(s)
}

impl RunConfig {
    pub fn parse(text: &str) -> std::result::Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    /// Canonical serialization of everything that affects the numbers
    /// (not workers, output path or format); hashed into the metadata.
    pub fn canonical(&self) -> String {
        let physics = Self {
            workers: None,
            format: None,
            out: None,
            seed: Some(self.seed()),
            ..self.clone()
        };
        toml::to_string(&physics).expect("config serializes")
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(42)
    }

    pub fn solver_options(&self) -> SolverOptions {
        let s = &self.solver;
        SolverOptions {
            tol: s.tol,
            max_krylov: s.max_krylov,
            max_restarts: s.max_restarts,
            seed: self.seed(),
            degeneracy_tol: s.degeneracy_tol,
            dense_below: s.dense_below,
            dense_limit: s.dense_limit,
            sector_dense_limit: s.sector_dense_limit,
            degenerate_cap: s.degenerate_cap,
        }
    }

    pub fn scf_config(&self) -> Result<ScfConfig> {
        let s = &self.scf;
        let etas = s
            .etas
            .iter()
            .map(|&e| match e {
                1 => Ok(Eta::Plus),
                -1 => Ok(Eta::Minus),
                _ => Err(config_err(format!("eta must be 1 or -1, got {e}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        let cfg = ScfConfig {
            etas,
            damping: s.damping,
            tol: s.tol,
            max_iter: s.max_iter,
            init_fractions: s.init_fractions.clone(),
            solver: SolverOptions {
                tol: s.eigen_tol,
                ..self.solver_options()
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// The model without its defect.
    pub fn base_system(&self) -> Result<SpinSystem> {
        let m = &self.model;
        let topology = match m.topology.as_str() {
            "ring" => Topology::Ring,
            "chain" => Topology::Chain,
            other => return Err(config_err(format!("unknown topology `{other}`"))),
        };
        let spins = match (&m.spin, &m.spins) {
            (Some(_), Some(_)) => return Err(config_err("give either `spin` or `spins`, not both")),
            (Some(s), None) => {
                let n = m.n.ok_or_else(|| config_err("`n` is required with `spin`"))?;
                vec![parse_spin(s)?; n]
            }
            (None, Some(list)) => {
                let spins = list.iter().map(|s| parse_spin(s)).collect::<Result<Vec<_>>>()?;
                if let Some(n) = m.n {
                    if n != spins.len() {
                        return Err(config_err(format!(
                            "n = {n} but {} spins were listed",
                            spins.len()
                        )));
                    }
                }
                spins
            }
            (None, None) => return Err(config_err("the model needs `spin` or `spins`")),
        };
        SpinSystem::new(topology, spins)
    }

    pub fn system(&self) -> Result<SpinSystem> {
        let base = self.base_system()?;
        match &self.model.defect {
            None => Ok(base),
            Some(d) => base.with_defect(one_based(d.site, base.n_sites())?, parse_spin(&d.spin)?),
        }
    }

    pub fn defect_spins(&self) -> Result<Vec<SpinLength>> {
        if self.defect.spins.is_empty() {
            return Err(config_err("defect.spins is empty"));
        }
        self.defect.spins.iter().map(|s| parse_spin(s)).collect()
    }

    pub fn temperatures(&self) -> Result<Vec<f64>> {
        let t = &self.thermal;
        let grid = match &t.temperatures {
            Some(list) => list.clone(),
            None => {
                if t.points < 2 || !(t.t_max > t.t_min) {
                    return Err(config_err("thermal grid needs points >= 2 and t_max > t_min"));
                }
                let step = (t.t_max - t.t_min) / (t.points - 1) as f64;
                (0..t.points).map(|i| t.t_min + step * i as f64).collect()
            }
        };
        if grid.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
            return Err(config_err("temperatures must be finite and non-negative"));
        }
        Ok(grid)
    }
}

/// 1-based site number to a 0-based index.
pub fn one_based(site: usize, n: usize) -> Result<usize> {
    if site == 0 || site > n {
        return Err(Error::SiteOutOfRange { site, n });
    }
    Ok(site - 1)
}
