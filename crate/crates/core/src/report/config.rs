use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fem::{homogenized_lattice_modulus, MaterialConfig, PressureBounds, PressureProgram};
use crate::geometry::{build_design, MuDesign, DEFAULT_SENSOR_RADIUS};
use crate::search::SearchConfig;
use crate::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("{path}: {msg}")]
    Parse { path: PathBuf, msg: String },
    #[error("`{field}` {reason}")]
    Invalid { field: &'static str, reason: String },
}

fn invalid(field: &'static str, reason: impl Into<String>) -> Error {
    ConfigError::Invalid {
        field,
        reason: reason.into(),
    }
    .into()
}

/// Run configuration. Key names carry their units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub scale: f64,
    pub chamber_count: usize,
    /// 1 for a single actuator, 2 for the gripper preset.
    pub fingers: usize,
    pub cells_per_unit_cell: usize,
    /// Defaults to the homogenized modulus of the scale.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub e_lat_kpa: Option<f64>,
    pub e_mem_kpa: f64,
    pub e_sens_kpa: f64,
    pub poisson_ratio: f64,
    pub sensor_radius_mm: f64,
    /// `time,pressure` CSV, relative to the config file. Defaults to the
    /// built-in 0 -> -20 -> +40 kPa program.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pressure_csv: Option<PathBuf>,
    pub pressure_min_kpa: f64,
    pub pressure_max_kpa: f64,
    pub time_samples: usize,
    pub length_samples: usize,
    /// 0 uses every available core. Not part of the run record: results do
    /// not depend on it.
    #[serde(skip_serializing)]
    pub workers: usize,
    /// There are no stochastic components; `false` is rejected.
    pub deterministic: bool,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        let bounds = PressureBounds::default();
        Self {
            scale: 1.0,
            chamber_count: 6,
            fingers: 1,
            cells_per_unit_cell: 3,
            e_lat_kpa: None,
            e_mem_kpa: 1000.0,
            e_sens_kpa: 3000.0,
            poisson_ratio: 0.45,
            sensor_radius_mm: DEFAULT_SENSOR_RADIUS,
            pressure_csv: None,
            pressure_min_kpa: bounds.min,
            pressure_max_kpa: bounds.max,
            time_samples: 50,
            length_samples: 100,
            workers: 0,
            deterministic: true,
            base_dir: PathBuf::from("."),
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str, origin: &Path) -> crate::Result<Self> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: origin.to_path_buf(),
            msg: e.message().to_string(),
        })?;
        cfg.base_dir = origin
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."));
        Ok(cfg)
    }

    pub fn load(path: &Path) -> crate::Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    /// Canonical TOML of the effective settings.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn e_lat(&self) -> f64 {
        self.e_lat_kpa
            .unwrap_or_else(|| homogenized_lattice_modulus(self.scale))
    }

    pub fn design(&self) -> crate::Result<MuDesign> {
        if !(self.sensor_radius_mm > 0.0) {
            return Err(invalid(
                "sensor_radius_mm",
                format!("must be positive, got {}", self.sensor_radius_mm),
            ));
        }
        Ok(build_design(self.scale, self.chamber_count, self.fingers)?
            .with_sensor_radius(self.sensor_radius_mm)?)
    }

    pub fn material(&self) -> crate::Result<MaterialConfig> {
        let m = MaterialConfig {
            e_lat: self.e_lat(),
            e_mem: self.e_mem_kpa,
            e_sens: self.e_sens_kpa,
            poisson: self.poisson_ratio,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn pressure_path(&self) -> Option<PathBuf> {
        self.pressure_csv.as_ref().map(|p| self.base_dir.join(p))
    }

    pub fn program(&self) -> crate::Result<PressureProgram> {
        let bounds = PressureBounds {
            min: self.pressure_min_kpa,
            max: self.pressure_max_kpa,
        };
        if !(bounds.min <= 0.0 && bounds.max >= 0.0) {
            return Err(invalid("pressure_min_kpa", "bounds must bracket 0 kPa"));
        }
        match self.pressure_path() {
            None => {
                let p = PressureProgram::extension_then_flexion();
                Ok(PressureProgram::new(p.samples().to_vec(), bounds)?)
            }
            Some(path) => {
                let file = std::fs::File::open(&path).map_err(|e| Error::io(&path, e))?;
                Ok(PressureProgram::from_csv(
                    std::io::BufReader::new(file),
                    bounds,
                )?)
            }
        }
    }

    /// Checks every field against the owning module's preconditions.
    pub fn validate(&self) -> crate::Result<()> {
        if !self.deterministic {
            return Err(invalid(
                "deterministic",
                "must be true; the pipeline has no stochastic parts",
            ));
        }
        if self.cells_per_unit_cell == 0 {
            return Err(invalid("cells_per_unit_cell", "must be at least 1"));
        }
        if self.time_samples < 2 {
            return Err(invalid(
                "time_samples",
                format!("must be at least 2, got {}", self.time_samples),
            ));
        }
        if self.length_samples < 2 {
            return Err(invalid(
                "length_samples",
                format!("must be at least 2, got {}", self.length_samples),
            ));
        }
        self.design()?;
        self.material()?;
        self.program()?;
        Ok(())
    }

    pub fn search_config(&self) -> crate::Result<SearchConfig> {
        let mut cfg = SearchConfig::new(
            self.material()?,
            self.program()?,
            self.time_samples,
            self.length_samples,
        );
        cfg.workers = self.workers;
        Ok(cfg)
    }
}
