//! Run configuration: a TOML file with one table per command, overridden by
//! `--param key=value` flags (dotted keys reach into tables).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quartic::{Gamma2Convention, SolutionParams};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub params: SolutionParams,
    pub gamma2: Gamma2Convention,
    pub tolerances: Tolerances,
    pub phase_diagram: PhaseDiagramOpts,
    pub h_profile: CurveOpts,
    pub region: RegionOpts,
    pub surface: SurfaceOpts,
    pub period_t: CurveOpts,
    pub phase: CurveOpts,
    pub residuals: ResidualOpts,
    pub ssfm: SsfmOpts,
    pub search: SearchOpts,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            params: SolutionParams::appendix_example(),
            gamma2: Gamma2Convention::Consistent,
            tolerances: Tolerances::default(),
            phase_diagram: PhaseDiagramOpts::default(),
            h_profile: CurveOpts::default(),
            region: RegionOpts::default(),
            surface: SurfaceOpts::default(),
            period_t: CurveOpts::default(),
            phase: CurveOpts::default(),
            residuals: ResidualOpts::default(),
            ssfm: SsfmOpts::default(),
            search: SearchOpts::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// relative residual of h_z² = R₁(h)
    pub residual_h: f64,
    /// relative residual of f_t² = R₂(f, z)
    pub residual_f: f64,
    /// absolute residual of φ_z = c₁ − 2a·h
    pub residual_phase: f64,
    /// relative difference of closed-form h and the ODE oracle
    pub oracle_h: f64,
    /// relative difference of oracle period and 2ω
    pub oracle_period: f64,
    /// Riccati residual must exceed the construction floor by this factor
    pub riccati_ratio: f64,
    /// CNLSE real part must stay within this factor of its floor
    pub cnlse_real_factor: f64,
    /// z-periodicity of Lt(z)
    pub lt_periodicity: f64,
    pub ssfm_plane_wave: f64,
    /// relative power drift per unit z
    pub ssfm_power: f64,
    pub ssfm_reversal: f64,
    /// relative agreement of Lz with the stated value
    pub lz_stated: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            residual_h: 1e-8,
            residual_f: 1e-6,
            residual_phase: 1e-6,
            oracle_h: 1e-6,
            oracle_period: 1e-3,
            riccati_ratio: 1e3,
            cnlse_real_factor: 1e2,
            lt_periodicity: 1e-8,
            ssfm_plane_wave: 1e-8,
            ssfm_power: 1e-10,
            ssfm_reversal: 1e-7,
            lz_stated: 0.02,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhaseDiagramOpts {
    pub n: usize,
    /// h window; default spans the real roots of R₁ with 10% margin
    pub h_min: Option<f64>,
    pub h_max: Option<f64>,
}

impl Default for PhaseDiagramOpts {
    fn default() -> Self {
        Self {
            n: 401,
            h_min: None,
            h_max: None,
        }
    }
}

/// A curve over z ∈ [0, periods·Lz].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurveOpts {
    pub periods: f64,
    pub n: usize,
}

impl Default for CurveOpts {
    fn default() -> Self {
        Self {
            periods: 3.0,
            n: 601,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegionOpts {
    pub f0_min: f64,
    pub f0_max: f64,
    /// z window [0, periods·Lz]
    pub periods: f64,
    pub nf: usize,
    pub nz: usize,
    /// rows expected admissible for every sampled z
    pub expect_admissible: Vec<f64>,
    /// rows expected to meet the region boundary
    pub expect_crossing: Vec<f64>,
}

impl Default for RegionOpts {
    fn default() -> Self {
        Self {
            f0_min: 0.0,
            f0_max: 1.0,
            periods: 3.0,
            nf: 400,
            nz: 400,
            expect_admissible: vec![0.0],
            expect_crossing: vec![0.8],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SurfaceOpts {
    pub t_min: f64,
    pub t_max: f64,
    pub nt: usize,
    pub periods: f64,
    pub nz: usize,
    pub f0_values: Vec<f64>,
}

impl Default for SurfaceOpts {
    fn default() -> Self {
        Self {
            t_min: -5.0,
            t_max: 5.0,
            nt: 201,
            periods: 3.0,
            nz: 201,
            f0_values: vec![0.0, 0.8],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResidualOpts {
    /// t window [−t_half, t_half]
    pub t_half: f64,
    pub nt: usize,
    /// z window as fractions of Lz
    pub z_lo: f64,
    pub z_hi: f64,
    pub nz: usize,
    /// CNLSE grid steps as fractions of the periods
    pub cnlse_step: f64,
    pub cnlse_z_lo: f64,
    pub cnlse_z_hi: f64,
}

impl Default for ResidualOpts {
    fn default() -> Self {
        Self {
            t_half: 1.0,
            nt: 41,
            z_lo: 0.05,
            z_hi: 0.45,
            nz: 41,
            cnlse_step: 1e-3,
            cnlse_z_lo: 0.1,
            cnlse_z_hi: 0.3,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SsfmOpts {
    pub n_modes: usize,
    pub dz: f64,
    /// seeding z as a fraction of Lz
    pub seed_z: f64,
    /// propagated span in units of Lz
    pub periods: f64,
    /// window as a multiple of Lt(seed_z)
    pub windows: usize,
    pub snapshots: usize,
}

impl Default for SsfmOpts {
    fn default() -> Self {
        Self {
            n_modes: 256,
            dz: 1e-4,
            seed_z: 0.25,
            periods: 1.0,
            windows: 1,
            snapshots: 21,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchOpts {
    /// half-width of each range relative to the parameter's magnitude
    pub rel_range: f64,
    /// explicit (lo, hi) per parameter; overrides rel_range where given
    pub a: Option<[f64; 2]>,
    pub c1: Option<[f64; 2]>,
    pub c2: Option<[f64; 2]>,
    pub c3: Option<[f64; 2]>,
    pub h0: Option<[f64; 2]>,
    pub f0: Option<[f64; 2]>,
    pub samples: usize,
    pub refine_top: usize,
    pub refine_evals: usize,
    pub seed: u64,
    pub nt: usize,
    pub nz: usize,
}

impl Default for SearchOpts {
    fn default() -> Self {
        Self {
            rel_range: 0.05,
            a: None,
            c1: None,
            c2: None,
            c3: None,
            h0: None,
            f0: None,
            samples: 200,
            refine_top: 10,
            refine_evals: 50,
            seed: 0,
            nt: 7,
            nz: 5,
        }
    }
}

fn parse_value(raw: &str) -> toml::Value {
    // reuse TOML's own literal syntax; bare words become strings
    match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t
            .remove("v")
            .unwrap_or_else(|| toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

/// Load `path` (if any), apply `key=value` overrides, deserialize, validate.
/// Bare parameter names (a, c1, …) address the `params` table.
pub fn load(path: Option<&std::path::Path>, overrides: &[String]) -> Result<RunConfig> {
    let mut table = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", p.display())))?;
            text.parse::<toml::Table>()
                .map_err(|e| Error::InvalidInput(format!("invalid config {}: {e}", p.display())))?
        }
        None => toml::Table::new(),
    };
    for item in overrides {
        let (key, raw) = item.split_once('=').ok_or_else(|| {
            Error::InvalidInput(format!("--param expects key=value, got '{item}'"))
        })?;
        let key = key.trim();
        let path: Vec<&str> = if key.contains('.') || key == "gamma2" {
            key.split('.').collect()
        } else {
            vec!["params", key]
        };
        let mut node = &mut table;
        for part in &path[..path.len() - 1] {
            node = node
                .entry(part.to_string())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()))
                .as_table_mut()
                .ok_or_else(|| Error::InvalidInput(format!("'{part}' is not a table")))?;
        }
        node.insert(path[path.len() - 1].to_string(), parse_value(raw.trim()));
    }
    let params_given = table.get("params").and_then(|p| p.as_table()).cloned();
    // partial [params] tables fill in from the defaults
    if let Some(given) = params_given {
        let mut full = toml::Table::try_from(SolutionParams::appendix_example())
            .map_err(|e| Error::Internal(e.to_string()))?;
        for (k, v) in given {
            full.insert(k, v);
        }
        table.insert("params".into(), toml::Value::Table(full));
    }
    let cfg: RunConfig = toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| {
            Error::InvalidInput(format!("invalid config: {}", e.message()))
        })?;
    cfg.validate()?;
    Ok(cfg)
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        let t = &self.tolerances;
        let tols = [
            t.residual_h,
            t.residual_f,
            t.residual_phase,
            t.oracle_h,
            t.oracle_period,
            t.riccati_ratio,
            t.cnlse_real_factor,
            t.lt_periodicity,
            t.ssfm_plane_wave,
            t.ssfm_power,
            t.ssfm_reversal,
            t.lz_stated,
        ];
        if tols.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidInput("all tolerances must be > 0".into()));
        }
        let res = [
            self.phase_diagram.n,
            self.h_profile.n,
            self.region.nf,
            self.region.nz,
            self.surface.nt,
            self.surface.nz,
            self.period_t.n,
            self.phase.n,
            self.residuals.nt,
            self.residuals.nz,
        ];
        if res.iter().any(|&n| n < 8) {
            return Err(Error::InvalidInput("all resolutions must be ≥ 8".into()));
        }
        let spans = [
            self.h_profile.periods,
            self.period_t.periods,
            self.phase.periods,
            self.region.periods,
            self.surface.periods,
            self.ssfm.periods,
        ];
        if spans.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidInput("period spans must be > 0".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_reach_params_and_tables() {
        let cfg = load(
            None,
            &[
                "c1=-1.5".into(),
                "region.nf=64".into(),
                "gamma2=unscaled".into(),
            ],
        )
        .unwrap();
        assert_eq!(cfg.params.c1, -1.5);
        assert_eq!(cfg.params.a, -1.0);
        assert_eq!(cfg.region.nf, 64);
        assert_eq!(cfg.gamma2, Gamma2Convention::Unscaled);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(load(None, &["region.nf=4".into()]).is_err());
        assert!(load(None, &["tolerances.residual_f=0".into()]).is_err());
        assert!(load(None, &["nonsense".into()]).is_err());
        assert!(load(None, &["region.bogus=1".into()]).is_err());
    }
}
