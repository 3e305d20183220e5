//! Run configuration: one JSON document, individual keys overridable from
//! the command line by dotted paths.

use anyhow::{bail, Context, Result};
use kinetic_fredholm::collision::{CrossSection, VelocityGridConfig};
use kinetic_fredholm::field::SpatialGridConfig;
use kinetic_fredholm::geometry::DomainGeometry;
use kinetic_fredholm::transport::{BoundarySource, SourceFamily, VolumetricSource};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub linear_tol: f64,
    pub nonlinear_tol: f64,
    pub quadrature_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            linear_tol: 1e-8,
            nonlinear_tol: 1e-7,
            quadrature_tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub domain: DomainGeometry,
    pub cross_section: CrossSection,
    /// Gaussian weight exponent of the working norm, in `[0, 1/2)`.
    pub alpha: f64,
    pub velocity_grid: VelocityGridConfig,
    pub spatial_grid: SpatialGridConfig,
    pub tolerances: Tolerances,
    pub boundary_source: BoundarySource,
    pub volumetric_source: Option<VolumetricSource>,
    pub scenario: String,
    pub output_dir: String,
    pub seed: u64,
    /// Amplitude multiplier for the boundary data (nonlinear smallness knob).
    pub scale: f64,
    /// Integrability exponent probed by the regularity report.
    pub p: f64,
    /// Sample count for the exit-geometry inequality suite.
    pub samples: usize,
    /// Small-speed floor for randomly sampled probe velocities; grid nodes
    /// and weight formulas are evaluated exactly regardless.
    pub speed_floor: f64,
    /// Whether solve scenarios rerun at 1.5x resolution to check stability
    /// of fitted constants.
    pub refine: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            domain: DomainGeometry::unit_ball(),
            cross_section: CrossSection::hard_sphere(0.5),
            alpha: 0.25,
            velocity_grid: VelocityGridConfig::default(),
            spatial_grid: SpatialGridConfig::default(),
            tolerances: Tolerances::default(),
            boundary_source: BoundarySource {
                family: SourceFamily::GaussianVelocity {
                    amplitude: 1.0,
                    decay: 0.25,
                },
                alpha: 0.25,
            },
            volumetric_source: None,
            scenario: "solve-linear".into(),
            output_dir: "out".into(),
            seed: 0,
            scale: 1.0,
            p: 2.0,
            samples: 10_000,
            speed_floor: 0.05,
            refine: true,
        }
    }
}

impl RunConfig {
    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.domain.validate().map_err(anyhow::Error::from)?;
        self.cross_section.validate().map_err(anyhow::Error::from)?;
        if !(0.0..0.5).contains(&self.alpha) {
            bail!("alpha must lie in [0, 1/2), got {}", self.alpha);
        }
        if self.velocity_grid.radial_order < 2
            || self.velocity_grid.n_mu < 2
            || self.velocity_grid.n_phi < 4
        {
            bail!("velocity grid orders below minimal defaults: {:?}", self.velocity_grid);
        }
        if self.spatial_grid.shells < 2 || self.spatial_grid.n_mu < 2 || self.spatial_grid.n_phi < 2
        {
            bail!("spatial grid orders below minimal defaults: {:?}", self.spatial_grid);
        }
        let t = &self.tolerances;
        if t.linear_tol <= 0.0 || t.nonlinear_tol <= 0.0 || t.quadrature_tol <= 0.0 {
            bail!("tolerances must be positive: {t:?}");
        }
        if self.scale <= 0.0 {
            bail!("scale must be positive, got {}", self.scale);
        }
        if self.p < 1.0 {
            bail!("p must be at least 1, got {}", self.p);
        }
        Ok(())
    }

    /// Applies one `key.path=value` override to the JSON form of the config.
    pub fn apply_override(&mut self, spec: &str) -> Result<()> {
        let Some((path, raw)) = spec.split_once('=') else {
            bail!("override must look like key.path=value, got `{spec}`");
        };
        let mut doc = serde_json::to_value(&*self)?;
        let mut cursor = &mut doc;
        let parts: Vec<&str> = path.split('.').collect();
        for (i, part) in parts.iter().enumerate() {
            if i + 1 == parts.len() {
                let value: serde_json::Value = serde_json::from_str(raw)
                    .unwrap_or_else(|_| serde_json::Value::String(raw.to_string()));
                match cursor {
                    serde_json::Value::Object(map) => {
                        map.insert(part.to_string(), value);
                    }
                    _ => bail!("cannot set `{path}`: parent is not an object"),
                }
            } else {
                cursor = cursor
                    .get_mut(*part)
                    .with_context(|| format!("unknown config key `{part}` in `{path}`"))?;
            }
        }
        *self = serde_json::from_value(doc).context("override produced an invalid config")?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn dotted_overrides() {
        let mut cfg = RunConfig::default();
        cfg.apply_override("cross_section.b0=0.25").unwrap();
        assert_eq!(cfg.cross_section.b0, 0.25);
        cfg.apply_override("velocity_grid.radial_order=20").unwrap();
        assert_eq!(cfg.velocity_grid.radial_order, 20);
        cfg.apply_override("scenario=\"verify-geometry\"").unwrap();
        assert_eq!(cfg.scenario, "verify-geometry");
        assert!(cfg.apply_override("nope.key=1").is_err());
        assert!(cfg.apply_override("alpha").is_err());
    }

    #[test]
    fn validation_rejects_bad_alpha_and_gamma() {
        let mut cfg = RunConfig::default();
        cfg.alpha = 0.5;
        assert!(cfg.validate().is_err());
        let mut cfg = RunConfig::default();
        cfg.cross_section.gamma = 1.5;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn domain_json_shapes() {
        let ball: DomainGeometry =
            serde_json::from_str(r#"{"shape":"ball","center":[0,0,0],"radius":1.0}"#).unwrap();
        assert_eq!(ball, DomainGeometry::unit_ball());
        let ell: DomainGeometry =
            serde_json::from_str(r#"{"shape":"ellipsoid","semi_axes":[2.0,1.0,1.0]}"#).unwrap();
        assert_eq!(
            ell,
            DomainGeometry::Ellipsoid {
                center: [0.0; 3],
                semi_axes: [2.0, 1.0, 1.0]
            }
        );
    }
}
