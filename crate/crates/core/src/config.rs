//! Declarative experiment configuration (TOML).
//!
//! Every section is optional; omitted keys take the published defaults.
//!
//! ```toml
//! output_dir = "out"
//! jobs = 4
//! sample_period = 1.0
//! scenarios = ["baseline", "lateral_transmural"]
//!
//! [mesh]
//! source = "synthetic"
//! resolution = 0.2
//!
//! [base_cv]
//! fiber = 65.0
//!
//! [[roots]]
//! name = "lv_mid_septum"
//! side = "LV"
//! tm = 1.0
//! ab = 0.5
//! rt = 0.83
//! pk_delay = 0.0
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::ecg::{ElectrodeSet, TransmembraneTemplate};
use crate::eikonal::{default_root_sites, RootSite};
use crate::error::{Error, Result};
use crate::fiber::{DEFAULT_ALPHA_ENDO, DEFAULT_ALPHA_EPI};
use crate::mesh::io::load_mesh;
use crate::mesh::synthetic::{generate_synthetic_biventricle, SyntheticParams};
use crate::mesh::Mesh;
use crate::scenario::{catalogue_with, BaseCv, CatalogueParams, ScenarioSpec, BASELINE};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "lowercase")]
pub enum MeshSource {
    Synthetic(SyntheticParams),
    File { path: PathBuf },
}

impl Default for MeshSource {
    fn default() -> Self {
        MeshSource::Synthetic(SyntheticParams::default())
    }
}

impl MeshSource {
    pub fn load(&self) -> Result<Mesh<f64>> {
        match self {
            MeshSource::Synthetic(p) => generate_synthetic_biventricle(p),
            MeshSource::File { path } => load_mesh(path),
        }
    }
}

/// Helix angles in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FiberAngles {
    pub alpha_endo: f64,
    pub alpha_epi: f64,
}

impl Default for FiberAngles {
    fn default() -> Self {
        FiberAngles { alpha_endo: DEFAULT_ALPHA_ENDO, alpha_epi: DEFAULT_ALPHA_EPI }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub output_dir: PathBuf,
    /// Worker threads; 0 lets the pool pick.
    pub jobs: usize,
    /// ms.
    pub sample_period: f64,
    /// Catalogue names to run; empty means the whole catalogue.
    pub scenarios: Vec<String>,
    pub mesh: MeshSource,
    pub base_cv: BaseCv,
    pub fibers: FiberAngles,
    pub catalogue: CatalogueParams,
    pub roots: Vec<RootSite>,
    pub electrodes: ElectrodeSet,
    pub template: TransmembraneTemplate,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            output_dir: PathBuf::from("out"),
            jobs: 0,
            sample_period: 1.0,
            scenarios: Vec::new(),
            mesh: MeshSource::default(),
            base_cv: BaseCv::default(),
            fibers: FiberAngles::default(),
            catalogue: CatalogueParams::default(),
            roots: default_root_sites(),
            electrodes: ElectrodeSet::default(),
            template: TransmembraneTemplate::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }

    /// Parses a file; relative paths inside it resolve against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let dir = path.parent().unwrap_or(Path::new(""));
        if let MeshSource::File { path: p } = &mut cfg.mesh {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        }
        if cfg.output_dir.is_relative() {
            cfg.output_dir = dir.join(&cfg.output_dir);
        }
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config is always serialisable")
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sample_period > 0.0) || !self.sample_period.is_finite() {
            return Err(Error::Parameter { name: "sample_period", reason: format!("{} is not positive", self.sample_period) });
        }
        if self.roots.is_empty() {
            return Err(Error::Parameter { name: "roots", reason: "at least one root is required".into() });
        }
        for r in &self.roots {
            r.root::<f64>()?;
        }
        if let MeshSource::File { path } = &self.mesh {
            if !path.is_file() {
                return Err(Error::Config(format!("mesh file {} not found", path.display())));
            }
        }
        self.base_cv.validate()?;
        self.catalogue.validate()?;
        self.template.validate()?;
        self.selected_scenarios().map(drop)
    }

    /// Baseline plus the selected scenarios, in catalogue order.
    pub fn selected_scenarios(&self) -> Result<Vec<ScenarioSpec<f64>>> {
        let all = catalogue_with::<f64>(&self.catalogue);
        if let Some(bad) = self.scenarios.iter().find(|n| !all.iter().any(|s| &s.name == *n)) {
            return Err(Error::UnknownScenario(bad.clone()));
        }
        if self.scenarios.is_empty() {
            return Ok(all);
        }
        Ok(all.into_iter().filter(|s| s.name == BASELINE || self.scenarios.contains(&s.name)).collect())
    }
}
