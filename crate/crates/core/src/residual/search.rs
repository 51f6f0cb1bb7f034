//! Search over (a, c₁, c₂, c₃, h₀, f₀) for a small Riccati residual:
//! shifted Halton sampling, then Nelder–Mead from the best candidates.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{residual_riccati, ResidualReport};
use crate::error::{Error, Result};
use crate::physicality::{check_h, is_admissible};
use crate::quartic::{Gamma2Convention, SolutionParams};
use crate::solution::{uniform_grid, FSolution, HSolution};

const PRIMES: [u32; 6] = [2, 3, 5, 7, 11, 13];
pub const PARAM_NAMES: [&str; 6] = ["a", "c1", "c2", "c3", "h0", "f0"];

#[derive(Debug, Clone, Serialize)]
pub struct SearchConfig {
    /// (lo, hi) for a, c₁, c₂, c₃, h₀, f₀
    pub ranges: [(f64, f64); 6],
    pub samples: usize,
    /// candidates handed to the simplex stage
    pub refine_top: usize,
    /// objective evaluations per simplex run
    pub refine_evals: usize,
    pub seed: u64,
    pub convention: Gamma2Convention,
    /// (t points, z points) of the residual grid
    pub grid: (usize, usize),
    /// z window as fractions of Lz
    pub z_window: (f64, f64),
    /// t window as fractions of Lt(z₀), centred on t = 0
    pub t_fraction: f64,
}

impl SearchConfig {
    pub fn around(p: &SolutionParams, rel: f64) -> Self {
        let r = |v: f64| (v - rel * v.abs(), v + rel * v.abs());
        Self {
            ranges: [r(p.a), r(p.c1), r(p.c2), r(p.c3), r(p.h0), r(p.f0)],
            samples: 1000,
            refine_top: 10,
            refine_evals: 100,
            seed: 0,
            convention: Gamma2Convention::Consistent,
            grid: (7, 5),
            z_window: (0.1, 0.4),
            t_fraction: 0.25,
        }
    }

    fn validate(&self) -> Result<()> {
        for (name, &(lo, hi)) in PARAM_NAMES.iter().zip(&self.ranges) {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::InvalidInput(format!(
                    "range for {name} must be finite with lo ≤ hi"
                )));
            }
        }
        if self.ranges[4].0 < 0.0 {
            return Err(Error::InvalidInput("h0 range must lie in h0 ≥ 0".into()));
        }
        if self.samples == 0 || self.grid.0 == 0 || self.grid.1 == 0 {
            return Err(Error::InvalidInput(
                "samples and grid sizes must be ≥ 1".into(),
            ));
        }
        let (z0, z1) = self.z_window;
        if !(z0.is_finite() && z1.is_finite() && z0 <= z1 && self.t_fraction > 0.0) {
            return Err(Error::InvalidInput("invalid search window".into()));
        }
        Ok(())
    }

    fn params_at(&self, u: &[f64; 6]) -> SolutionParams {
        let v: Vec<f64> = self
            .ranges
            .iter()
            .zip(u)
            .map(|(&(lo, hi), &x)| lo + x.clamp(0.0, 1.0) * (hi - lo))
            .collect();
        SolutionParams {
            a: v[0],
            c1: v[1],
            c2: v[2],
            c3: v[3],
            h0: v[4],
            f0: v[5],
            phi0: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchOutcome {
    Found,
    /// no candidate passed the physicality and admissibility gates
    Empty,
}

#[derive(Debug, Clone, Serialize)]
pub struct SearchResult {
    pub outcome: SearchOutcome,
    pub best: Option<SolutionParams>,
    /// normalized Riccati residual of `best` (∞ when empty)
    pub best_residual: f64,
    pub report: Option<ResidualReport>,
    /// best-so-far after each objective evaluation, non-increasing
    pub trace: Vec<f64>,
    pub evaluated: usize,
    pub rejected: usize,
}

fn radical_inverse(mut i: u64, base: u32) -> f64 {
    let b = base as f64;
    let mut inv = 1.0 / b;
    let mut x = 0.0;
    while i > 0 {
        x += (i % base as u64) as f64 * inv;
        i /= base as u64;
        inv /= b;
    }
    x
}

/// The normalized Riccati residual, or None when the candidate fails a gate.
fn objective(cfg: &SearchConfig, p: &SolutionParams) -> Option<(f64, ResidualReport)> {
    if p.validate().is_err() || !check_h(p).satisfied {
        return None;
    }
    let hs = HSolution::new(*p).ok()?;
    let lz = hs.period();
    if !lz.is_finite() {
        return None;
    }
    let fs = FSolution::with_convention(hs, cfg.convention);
    let zs = uniform_grid(cfg.z_window.0 * lz, cfg.z_window.1 * lz, cfg.grid.1);
    for &z in &zs {
        if !is_admissible(&fs, z).ok()? {
            return None;
        }
    }
    let lt = fs.column(zs[0]).ok()?.period();
    if !lt.is_finite() {
        return None;
    }
    let half = cfg.t_fraction * lt;
    let ts = uniform_grid(-half, half, cfg.grid.0);
    let report = residual_riccati(&fs, &ts, &zs);
    (report.evaluated > 0 && report.max_rel.is_finite()).then_some((report.max_rel, report))
}

fn nelder_mead(
    cfg: &SearchConfig,
    start: [f64; 6],
    active: &[usize],
    budget: usize,
    mut record: impl FnMut(f64, &[f64; 6]),
) {
    let f = |x: &[f64; 6]| objective(cfg, &cfg.params_at(x)).map_or(f64::INFINITY, |r| r.0);
    let n = active.len();
    let mut simplex: Vec<([f64; 6], f64)> = Vec::with_capacity(n + 1);
    let mut used = 0;
    let mut eval = |x: [f64; 6], used: &mut usize| -> ([f64; 6], f64) {
        let mut x = x;
        x.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
        let v = f(&x);
        *used += 1;
        record(v, &x);
        (x, v)
    };
    simplex.push(eval(start, &mut used));
    for &d in active {
        let mut x = start;
        x[d] += if x[d] + 0.05 <= 1.0 { 0.05 } else { -0.05 };
        simplex.push(eval(x, &mut used));
    }
    let comb = |a: &[f64; 6], b: &[f64; 6], t: f64| -> [f64; 6] {
        let mut out = *a;
        for &d in active {
            out[d] = a[d] + t * (b[d] - a[d]);
        }
        out
    };
    while used < budget {
        simplex.sort_by(|x, y| x.1.total_cmp(&y.1));
        let worst = simplex[n];
        let mut centroid = [0.0; 6];
        for (x, _) in &simplex[..n] {
            for d in 0..6 {
                centroid[d] += x[d] / n as f64;
            }
        }
        let refl = eval(comb(&centroid, &worst.0, -1.0), &mut used);
        if refl.1 < simplex[0].1 {
            let exp = eval(comb(&centroid, &worst.0, -2.0), &mut used);
            simplex[n] = if exp.1 < refl.1 { exp } else { refl };
        } else if refl.1 < simplex[n - 1].1 {
            simplex[n] = refl;
        } else {
            let con = eval(comb(&centroid, &worst.0, 0.5), &mut used);
            if con.1 < worst.1 {
                simplex[n] = con;
            } else {
                let best = simplex[0].0;
                for item in simplex.iter_mut().skip(1) {
                    *item = eval(comb(&best, &item.0, 0.5), &mut used);
                }
            }
        }
        let spread = simplex
            .iter()
            .map(|s| s.1)
            .fold(f64::NEG_INFINITY, f64::max)
            - simplex.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
        if spread.is_finite() && spread <= 1e-14 {
            break;
        }
    }
}

/// Deterministic for a given configuration (including its seed).
pub fn consistency_search(cfg: &SearchConfig) -> Result<SearchResult> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let shift: [f64; 6] = std::array::from_fn(|_| rng.random::<f64>());
    let points: Vec<[f64; 6]> = (0..cfg.samples)
        .map(|i| {
            std::array::from_fn(|d| (radical_inverse(i as u64 + 1, PRIMES[d]) + shift[d]).fract())
        })
        .collect();
    let values: Vec<Option<f64>> = points
        .par_iter()
        .map(|u| objective(cfg, &cfg.params_at(u)).map(|r| r.0))
        .collect();

    let mut trace = Vec::with_capacity(cfg.samples + cfg.refine_top * cfg.refine_evals);
    let mut best = (f64::INFINITY, [0.0; 6]);
    let mut rejected = 0;
    for (u, v) in points.iter().zip(&values) {
        match v {
            Some(v) if *v < best.0 => best = (*v, *u),
            Some(_) => {}
            None => rejected += 1,
        }
        trace.push(best.0);
    }
    let mut ranked: Vec<(f64, usize)> = values
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.map(|v| (v, i)))
        .collect();
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let active: Vec<usize> = (0..6)
        .filter(|&d| cfg.ranges[d].1 > cfg.ranges[d].0)
        .collect();
    if !active.is_empty() {
        for &(_, i) in ranked.iter().take(cfg.refine_top) {
            nelder_mead(cfg, points[i], &active, cfg.refine_evals, |v, x| {
                if v < best.0 {
                    best = (v, *x);
                }
                if !v.is_finite() {
                    rejected += 1;
                }
                trace.push(best.0);
            });
        }
    }
    let evaluated = trace.len();
    if !best.0.is_finite() {
        return Ok(SearchResult {
            outcome: SearchOutcome::Empty,
            best: None,
            best_residual: f64::INFINITY,
            report: None,
            trace,
            evaluated,
            rejected,
        });
    }
    let p = cfg.params_at(&best.1);
    let report = objective(cfg, &p).map(|r| r.1);
    Ok(SearchResult {
        outcome: SearchOutcome::Found,
        best: Some(p),
        best_residual: best.0,
        report,
        trace,
        evaluated,
        rejected,
    })
}
