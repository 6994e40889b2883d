//! Run configuration: a TOML file plus `section.key=value` overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::approx::SolveConfig;
use crate::coefficients::{CapacityParams, MaterialParams};
use crate::error::{Error, Result};
use crate::geometry::{BuiltinCurve, CurveSource, Vec3};
use crate::harness::Scenario;
use crate::limit::LimitConfig;
use crate::mesh::QuadDensity;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurveSection {
    /// Built-in curve name, used when neither `spec` nor `polyline` is set.
    pub name: String,
    /// Fully parameterised built-in curve.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spec: Option<BuiltinCurve>,
    /// Sampled polyline file with `t s x y z` rows.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub polyline: Option<PathBuf>,
    pub t_span: [f64; 2],
}

impl Default for CurveSection {
    fn default() -> Self {
        CurveSection {
            name: "translating-segment".into(),
            spec: None,
            polyline: None,
            t_span: [0.0, 1.0],
        }
    }
}

impl CurveSection {
    pub fn source(&self) -> Result<CurveSource> {
        if let Some(path) = &self.polyline {
            return Ok(CurveSource::Polyline(path.clone()));
        }
        if let Some(spec) = &self.spec {
            return Ok(CurveSource::Builtin(spec.clone()));
        }
        BuiltinCurve::by_name(&self.name)
            .map(CurveSource::Builtin)
            .ok_or_else(|| Error::Config(format!("curve.name: unknown curve '{}'", self.name)))
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CapacitySection {
    pub eps0: f64,
    pub eps: f64,
}

impl Default for CapacitySection {
    fn default() -> Self {
        CapacitySection { eps0: 0.2, eps: 0.1 }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    /// Cells per side of the unit cube.
    pub n: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection { n: 32 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LadderSection {
    pub grids: Vec<usize>,
    /// Append a 192^3 rung to `grids`.
    pub deep: bool,
    /// Also run the energy ladder with `delta` comparable to `eps`.
    pub control: bool,
    pub capacity_rungs: usize,
    pub capacity_grid: usize,
    pub weak_grids: Vec<usize>,
    pub weak_dt_per_h: f64,
    pub constants_grid: usize,
}

impl Default for LadderSection {
    fn default() -> Self {
        LadderSection {
            grids: vec![32, 64, 96],
            deep: false,
            control: false,
            capacity_rungs: 4,
            capacity_grid: 16,
            weak_grids: vec![32, 64],
            weak_dt_per_h: 0.16,
            constants_grid: 16,
        }
    }
}

impl LadderSection {
    pub fn solver_grids(&self) -> Vec<usize> {
        let mut g = self.grids.clone();
        if self.deep && !g.contains(&192) {
            g.push(192);
        }
        g
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChecksSection {
    pub seed: u64,
    pub samples: usize,
    pub mc_samples: usize,
}

impl Default for ChecksSection {
    fn default() -> Self {
        ChecksSection {
            seed: 7,
            samples: 1000,
            mc_samples: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub vtk: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: PathBuf::from("out"),
            vtk: false,
        }
    }
}

/// Everything a subcommand needs. Defaults reproduce the moving-segment scenario.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub curve: CurveSection,
    pub capacity: CapacitySection,
    pub grid: GridSection,
    pub material: MaterialParams,
    pub solve: SolveConfig,
    pub limit: LimitConfig,
    pub ladder: LadderSection,
    pub quadrature: QuadDensity,
    pub checks: ChecksSection,
    pub output: OutputSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        let s = Scenario::moving_segment();
        RunConfig {
            curve: CurveSection::default(),
            capacity: CapacitySection {
                eps0: s.eps0,
                ..CapacitySection::default()
            },
            grid: GridSection::default(),
            material: s.material,
            solve: s.solve,
            limit: s.limit,
            ladder: LadderSection::default(),
            quadrature: s.quad,
            checks: ChecksSection::default(),
            output: OutputSection::default(),
        }
    }
}

fn parse_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

fn merge(base: &mut toml::Table, patch: toml::Table) {
    for (k, v) in patch {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(p)) if !p.contains_key("kind") => merge(b, p),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

fn apply_override(root: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override '{assignment}' is not of the form key=value")))?;
    let path: Vec<&str> = key.trim().split('.').collect();
    if path.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("override '{assignment}' has an empty key")));
    }
    let mut table = root;
    for part in &path[..path.len() - 1] {
        let entry = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override '{key}': '{part}' is not a table")))?;
    }
    table.insert(path[path.len() - 1].to_string(), parse_value(raw.trim()));
    Ok(())
}

impl RunConfig {
    /// Parses TOML text; errors carry the offending line and key.
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads `path` (defaults when `None`) and applies `overrides` in order.
    ///
    /// Keys absent from the file keep the values of [`RunConfig::default`],
    /// also inside partially given sections. Tables carrying a `kind` key
    /// (curves and fields) replace the default wholesale.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p).map_err(|source| Error::Read {
                path: p.to_path_buf(),
                source,
            })?,
            None => String::new(),
        };
        // Parse once on its own so that diagnostics point into the user's file.
        toml::from_str::<RunConfig>(&text).map_err(|e| Error::Config(e.to_string()))?;
        let file: toml::Table = toml::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
        let mut root: toml::Table = toml::from_str(&Self::default().to_toml()?).map_err(|e| Error::Config(e.to_string()))?;
        merge(&mut root, file);
        for o in overrides {
            apply_override(&mut root, o)?;
        }
        let merged = toml::to_string(&root).map_err(|e| Error::Config(e.to_string()))?;
        Self::from_toml(&merged)
    }

    /// Fully resolved configuration, defaults included.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn write_resolved(&self, dir: &Path) -> Result<PathBuf> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join("resolved-config.toml");
        std::fs::write(&path, self.to_toml()?)?;
        Ok(path)
    }

    pub fn t_span(&self) -> (f64, f64) {
        (self.curve.t_span[0], self.curve.t_span[1])
    }

    pub fn capacity_params(&self) -> Result<CapacityParams> {
        let eps = self.capacity.eps;
        let delta = self.solve.delta_rule.delta(eps, self.solve.delta);
        CapacityParams::new(self.capacity.eps0, eps, delta)
    }

    pub fn validate(&self) -> Result<()> {
        let wrap = |section: &str, e: Error| Error::Config(format!("{section}: {e}"));
        let (t0, t1) = self.t_span();
        if !(t0.is_finite() && t1.is_finite() && t1 > t0) {
            return Err(Error::Config(format!("curve.t_span: need t0 < t1, got [{t0}, {t1}]")));
        }
        self.curve.source()?;
        self.capacity_params().map_err(|e| wrap("capacity", e))?;
        self.solve.validate().map_err(|e| wrap("solve", e))?;
        if self.solve.t_end > t1 - t0 {
            return Err(Error::Config(format!(
                "solve.t_end = {} exceeds the curve time span {}",
                self.solve.t_end,
                t1 - t0
            )));
        }
        self.material
            .validate(self.capacity.eps0, self.t_span(), (&Vec3::zeros(), &Vec3::repeat(1.0)))
            .map_err(|e| wrap("material", e))?;
        if self.limit.n_s < 3 || !(self.limit.r_avg_cells > 0.0) {
            return Err(Error::Config("limit: need n_s >= 3 and r_avg_cells > 0".into()));
        }
        if matches!(self.limit.lambda_ex, Some(l) if !(l >= 0.0 && l.is_finite())) {
            return Err(Error::Config("limit.lambda_ex must be finite and non-negative".into()));
        }
        if self.grid.n == 0 || self.ladder.capacity_grid == 0 || self.ladder.constants_grid == 0 {
            return Err(Error::Config("grid resolutions must be positive".into()));
        }
        if self.ladder.grids.is_empty() || self.ladder.grids.contains(&0) {
            return Err(Error::Config("ladder.grids must list positive resolutions".into()));
        }
        if self.ladder.weak_grids.len() < 2 || self.ladder.weak_grids.contains(&0) {
            return Err(Error::Config("ladder.weak_grids needs at least two positive resolutions".into()));
        }
        if !(self.ladder.weak_dt_per_h > 0.0) || self.ladder.capacity_rungs == 0 {
            return Err(Error::Config("ladder: weak_dt_per_h and capacity_rungs must be positive".into()));
        }
        let q = &self.quadrature;
        if q.radial == 0 || q.angular == 0 || q.axial == 0 || q.collar == 0 {
            return Err(Error::Config("quadrature densities must be positive".into()));
        }
        if self.checks.samples == 0 || self.checks.mc_samples == 0 {
            return Err(Error::Config("checks: sample counts must be positive".into()));
        }
        Ok(())
    }

    /// Solver campaign scenario built from this configuration.
    pub fn scenario(&self) -> Result<Scenario> {
        let curve = self.curve.source()?;
        Ok(Scenario {
            name: curve.label(),
            curve,
            eps0: self.capacity.eps0,
            t_span: self.t_span(),
            material: self.material.clone(),
            solve: self.solve,
            limit: self.limit,
            quad: self.quadrature,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_scenario() {
        let cfg = RunConfig::load(None, &[]).unwrap();
        let s = cfg.scenario().unwrap();
        let m = Scenario::moving_segment();
        assert_eq!(s.eps0, m.eps0);
        assert_eq!(s.solve, m.solve);
        assert_eq!(s.limit, m.limit);
        assert_eq!(cfg.capacity_params().unwrap().delta, 0.1f64.powi(3));
    }

    #[test]
    fn resolved_round_trip() {
        let cfg = RunConfig::load(None, &["grid.n=24".into(), "solve.delta_rule=eps11".into(), "limit.lambda_ex=3.5".into()]).unwrap();
        let text = cfg.to_toml().unwrap();
        let again = RunConfig::from_toml(&text).unwrap();
        assert_eq!(again.to_toml().unwrap(), text);
        assert_eq!(again.grid.n, 24);
        assert_eq!(again.limit.lambda_ex, Some(3.5));
    }

    #[test]
    fn overrides_parse_values() {
        let cfg = RunConfig::load(None, &["curve.name=arc".into(), "ladder.grids=[16, 24]".into(), "output.vtk=true".into()]).unwrap();
        assert_eq!(cfg.curve.name, "arc");
        assert_eq!(cfg.ladder.grids, vec![16, 24]);
        assert!(cfg.output.vtk);
    }

    #[test]
    fn partial_section_keeps_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "[material]\nk0 = 2.0\ntheta = 0.5\n[material.u0]\nkind = \"constant\"\nvalue = 3.0\n").unwrap();
        let cfg = RunConfig::load(Some(&path), &[]).unwrap();
        let d = RunConfig::default();
        assert_eq!(cfg.material.k0, 2.0);
        assert_eq!(cfg.material.u0.eval(0.0, &Vec3::zeros()), 3.0);
        let x = Vec3::new(0.3, 0.2, 0.1);
        assert_eq!(cfg.material.v.eval(0.0, &x), d.material.v.eval(0.0, &x));
    }

    #[test]
    fn unknown_key_rejected_with_location() {
        let err = RunConfig::from_toml("[grid]\nn = 16\ncells = 3\n").unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, Error::Config(_)));
        assert!(msg.contains("cells") && msg.contains("line 3"), "{msg}");
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(RunConfig::load(None, &["capacity.eps=0.3".into()]).is_err());
        assert!(RunConfig::load(None, &["curve.name=spiral".into()]).is_err());
        assert!(RunConfig::load(None, &["solve.dt=-1".into()]).is_err());
        assert!(RunConfig::load(None, &["grid".into()]).is_err());
    }

    #[test]
    fn missing_file_is_read_error() {
        let err = RunConfig::load(Some(Path::new("/nonexistent/ccflow.toml")), &[]).unwrap_err();
        assert!(matches!(err, Error::Read { .. }));
    }
}
