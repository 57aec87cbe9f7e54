use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::soliton::PhysicalParams;
use crate::spectral::Grid1D;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysicsConfig {
    pub c: f64,
    pub kappa: f64,
}

impl Default for PhysicsConfig {
    fn default() -> Self {
        Self { c: 3.0, kappa: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub nx: usize,
    /// Half-length `L` of `[-L, L)`; decay-based default when absent.
    pub lx: Option<f64>,
    pub ny: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            nx: 1024,
            lx: None,
            ny: 32,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StabilityConfig {
    /// Branch scan range `[0, k_max]` and sample count.
    pub k_max: f64,
    pub k_samples: usize,
    /// Condition-check samples on `[0, cond_k_max]` (should cover `[0, 2K]`).
    pub cond_k_max: f64,
    pub cond_samples: usize,
    pub tol_growth: f64,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        Self {
            k_max: 0.6,
            k_samples: 13,
            cond_k_max: 0.8,
            cond_samples: 11,
            tol_growth: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub delta_list: Vec<f64>,
    /// Escape amplitude; `0.05 (c - 2κ)` when absent.
    pub theta: Option<f64>,
    pub hierarchy_order: usize,
    pub sobolev_s: f64,
    pub dt: f64,
    /// Hierarchy states (and growth-CSV rows) are kept every `stride` steps.
    pub stride: usize,
    /// Also measure the escape time for `2θ`.
    pub theta_doubling: bool,
    /// Optional `𝒥^ε` regularization of the nonlinear solver.
    pub regularization: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            delta_list: vec![1e-3, 1e-4, 1e-5],
            theta: None,
            hierarchy_order: 2,
            sobolev_s: 1.0,
            dt: 0.02,
            stride: 25,
            theta_doubling: true,
            regularization: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutConfig {
    pub dir: PathBuf,
}

impl Default for OutConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
        }
    }
}

/// Experiment configuration; the text form is TOML with the namespaced
/// keys `physics.c`, `grid.nx`, `run.delta_list`, `out.dir`, ….
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub physics: PhysicsConfig,
    pub grid: GridConfig,
    pub stability: StabilityConfig,
    pub run: RunConfig,
    pub out: OutConfig,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        Self::from_toml_with_overrides(text, &[])
    }

    /// Parses `text` after applying `key=value` overrides (dotted keys,
    /// TOML values; bare strings are accepted for string fields).
    pub fn from_toml_with_overrides(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        for ov in overrides {
            apply_override(&mut table, ov)?;
        }
        let cfg: Self = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_with_overrides(&text, overrides)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn params(&self) -> Result<PhysicalParams> {
        PhysicalParams::new(self.physics.c, self.physics.kappa)
    }

    pub fn x_grid(&self) -> Result<Grid1D> {
        match self.grid.lx {
            Some(l) => Grid1D::new(l, self.grid.nx),
            None => Grid1D::for_wave(self.physics.c, self.physics.kappa, self.grid.nx),
        }
    }

    /// `θ`, defaulting to `0.05 (c - 2κ)`.
    pub fn theta(&self) -> f64 {
        self.run
            .theta
            .unwrap_or(0.05 * (self.physics.c - 2.0 * self.physics.kappa))
    }

    pub fn validate(&self) -> Result<()> {
        self.params()?;
        self.x_grid()?;
        if self.grid.ny < 4 || self.grid.ny % 2 != 0 {
            return Err(Error::Config(format!(
                "grid.ny must be even and >= 4, got {}",
                self.grid.ny
            )));
        }
        let theta = self.theta();
        if !(theta > 0.0) {
            return Err(Error::Config(format!("run.theta must be positive, got {theta}")));
        }
        for &d in &self.run.delta_list {
            if !(d > 0.0 && d < theta) {
                return Err(Error::Config(format!("every δ must lie in (0, θ = {theta}), got {d}")));
            }
        }
        if self.run.hierarchy_order > crate::grenier::MAX_ORDER {
            return Err(Error::Config(format!(
                "run.hierarchy_order must be <= {}, got {}",
                crate::grenier::MAX_ORDER,
                self.run.hierarchy_order
            )));
        }
        if !(self.run.dt > 0.0) || self.run.stride == 0 {
            return Err(Error::Config("run.dt must be positive and run.stride nonzero".into()));
        }
        let st = &self.stability;
        if !(st.k_max > 0.0 && st.cond_k_max > 0.0) || st.k_samples < 3 || st.cond_samples < 2 {
            return Err(Error::Config("stability sampling ranges are degenerate".into()));
        }
        Ok(())
    }
}

fn apply_override(table: &mut toml::Table, ov: &str) -> Result<()> {
    let (key, raw) = ov
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{ov}` is not of the form key=value")))?;
    let value: toml::Value = match format!("v = {}", raw.trim()).parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.trim().to_string()),
    };
    let parts: Vec<&str> = key.trim().split('.').collect();
    let (last, path) = parts.split_last().expect("split yields at least one part");
    let mut cur = table;
    for p in path {
        cur = cur
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override key `{key}`: `{p}` is not a table")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
[physics]
c = 3.0
kappa = 1.0

[grid]
nx = 512
ny = 16

[run]
delta_list = [1e-3, 1e-4]
hierarchy_order = 1

[out]
dir = "results"
"#;

    #[test]
    fn parses_namespaced_keys() {
        let cfg = ExperimentConfig::from_toml_str(SAMPLE).unwrap();
        assert_eq!(cfg.grid.nx, 512);
        assert_eq!(cfg.run.delta_list, vec![1e-3, 1e-4]);
        assert_eq!(cfg.out.dir, PathBuf::from("results"));
        assert!((cfg.theta() - 0.05).abs() < 1e-15);
    }

    #[test]
    fn overrides_take_precedence() {
        let ov = [
            "run.theta=0.1".to_string(),
            "out.dir=elsewhere".to_string(),
            "grid.lx=50".to_string(),
        ];
        let cfg = ExperimentConfig::from_toml_with_overrides(SAMPLE, &ov).unwrap();
        assert_eq!(cfg.run.theta, Some(0.1));
        assert_eq!(cfg.out.dir, PathBuf::from("elsewhere"));
        assert_eq!(cfg.grid.lx, Some(50.0));
    }

    #[test]
    fn rejects_invalid_configs() {
        for bad in [
            "physics.c=1.5",
            "run.delta_list=[0.5]",
            "run.hierarchy_order=9",
            "grid.ny=7",
            "run.bogus=1",
        ] {
            let r = ExperimentConfig::from_toml_with_overrides(SAMPLE, &[bad.to_string()]);
            assert!(r.is_err(), "{bad} accepted");
        }
    }

    #[test]
    fn toml_roundtrip() {
        let cfg = ExperimentConfig::from_toml_str(SAMPLE).unwrap();
        let back = ExperimentConfig::from_toml_str(&cfg.to_toml_string().unwrap()).unwrap();
        assert_eq!(cfg, back);
    }
}
