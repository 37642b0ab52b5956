use crate::mesh::{Region, RoiSet, TetMesh};

use super::SolverError;

/// Measured homogenized lattice moduli (kPa) by scale.
const LATTICE_MODULI: [(f64, f64); 3] = [(0.75, 21.70), (1.0, 18.34), (1.5, 16.38)];

/// Homogenized lattice modulus for `scale`, kPa.
///
/// Exact at the measured scales, linearly interpolated between them and
/// held constant outside the measured range.
pub fn homogenized_lattice_modulus(scale: f64) -> f64 {
    let (first, last) = (LATTICE_MODULI[0], LATTICE_MODULI[LATTICE_MODULI.len() - 1]);
    if scale <= first.0 {
        return first.1;
    }
    if scale >= last.0 {
        return last.1;
    }
    for w in LATTICE_MODULI.windows(2) {
        let ((s0, e0), (s1, e1)) = (w[0], w[1]);
        if scale == s0 {
            return e0;
        }
        if scale > s0 && scale <= s1 {
            if scale == s1 {
                return e1;
            }
            return e0 + (e1 - e0) * (scale - s0) / (s1 - s0);
        }
    }
    last.1
}

/// Moduli in kPa and the uniform Poisson ratio.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MaterialConfig {
    pub e_lat: f64,
    pub e_mem: f64,
    pub e_sens: f64,
    pub poisson: f64,
}

impl MaterialConfig {
    pub fn for_scale(scale: f64) -> Self {
        Self {
            e_lat: homogenized_lattice_modulus(scale),
            e_mem: 1000.0,
            e_sens: 3000.0,
            poisson: 0.45,
        }
    }

    /// Same modulus everywhere (degenerate configuration).
    pub fn uniform(e: f64, poisson: f64) -> Self {
        Self {
            e_lat: e,
            e_mem: e,
            e_sens: e,
            poisson,
        }
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        for (name, v) in [
            ("e_lat", self.e_lat),
            ("e_mem", self.e_mem),
            ("e_sens", self.e_sens),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(SolverError::Material(format!(
                    "`{name}` must be positive, got {v}"
                )));
            }
        }
        if !(0.0..0.5).contains(&self.poisson) {
            return Err(SolverError::Material(format!(
                "`poisson` must lie in [0, 0.5), got {}",
                self.poisson
            )));
        }
        if self.e_sens < self.e_lat {
            return Err(SolverError::Material(format!(
                "`e_sens` ({}) must not be below `e_lat` ({})",
                self.e_sens, self.e_lat
            )));
        }
        Ok(())
    }
}

/// Per-element Young's modulus.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialField {
    pub e_per_tet: Vec<f64>,
    pub poisson: f64,
    pub config: MaterialConfig,
}

impl MaterialField {
    /// Uniform field, bypassing region labels.
    pub fn uniform(tets: usize, e: f64, poisson: f64) -> Self {
        Self {
            e_per_tet: vec![e; tets],
            poisson,
            config: MaterialConfig::uniform(e, poisson),
        }
    }
}

/// Membrane and lattice moduli by label, then the sensor modulus on every
/// ROI element, whatever its label.
pub fn assemble_material(
    mesh: &TetMesh,
    roi: Option<&RoiSet>,
    config: &MaterialConfig,
) -> Result<MaterialField, SolverError> {
    config.validate()?;
    let mut e_per_tet: Vec<f64> = mesh
        .region
        .iter()
        .map(|r| match r {
            Region::Lattice => config.e_lat,
            Region::Membrane => config.e_mem,
        })
        .collect();
    if let Some(roi) = roi {
        for &t in &roi.element_ids {
            let slot = e_per_tet.get_mut(t).ok_or_else(|| {
                SolverError::Material(format!(
                    "ROI element {t} outside mesh of {}",
                    mesh.tets.len()
                ))
            })?;
            *slot = config.e_sens;
        }
    }
    Ok(MaterialField {
        e_per_tet,
        poisson: config.poisson,
        config: *config,
    })
}
