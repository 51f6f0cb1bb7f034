//! Reality/boundedness constraints on h and f, behaviour classification and
//! the admissible {f₀, z} region.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quartic::{r1_coefficients, Gamma2Convention, SolutionParams};
use crate::solution::{uniform_grid, FSolution, HSolution};
use crate::weierstrass::{invariants_from_quartic, lattice_from_invariants, EllipticInvariants};

/// Samples of h over one period when checking the numerator sign.
const N1_SAMPLES: usize = 512;
/// Bisections per straddling cell edge before switching to the tolerance test.
const BOUNDARY_BISECTIONS: usize = 4;
/// Bound on the active inequality at a reported boundary point.
pub const BOUNDARY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum HCase {
    /// R₁(h₀) > 0, h₀ > 0 (or R₁(h₀) < 0, reported unsatisfied)
    Interior,
    /// h₀ = 0
    ZeroRoot,
    /// R₁(h₀) = 0, h₀ > 0
    SimpleRoot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Behavior {
    Periodic,
    SolitaryLike,
    Unclassified,
}

#[derive(Debug, Clone, Serialize)]
pub struct HPhysicalityReport {
    pub case: HCase,
    pub satisfied: bool,
    /// Named values of the evaluated inequalities.
    pub details: Vec<(String, f64)>,
    pub behavior: Behavior,
}

impl HPhysicalityReport {
    pub fn detail(&self, key: &str) -> Option<f64> {
        self.details.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }
}

/// Periodic if Δ ≠ 0 or (Δ = 0, g₂ > 0, g₃ > 0); solitary-like if Δ = 0,
/// g₂ ≥ 0, g₃ ≤ 0.
pub fn classify_behavior(inv: &EllipticInvariants) -> Behavior {
    if !inv.is_degenerate() || (inv.g2 > 0.0 && inv.g3 > 0.0) {
        Behavior::Periodic
    } else if inv.g2 >= 0.0 && inv.g3 <= 0.0 {
        Behavior::SolitaryLike
    } else {
        Behavior::Unclassified
    }
}

/// Minimum of h over one period: 512 samples, then golden-section search
/// in the bracket around the smallest sample.
fn min_over_period(hs: &HSolution) -> Result<(f64, f64)> {
    let lz = hs.period();
    let span = if lz.is_finite() { lz } else { 20.0 };
    let step = span / N1_SAMPLES as f64;
    let mut best = (f64::INFINITY, 0.0);
    for i in 0..N1_SAMPLES {
        let z = i as f64 * step;
        let h = hs.h_eval(z)?;
        if h < best.0 {
            best = (h, z);
        }
    }
    let (mut lo, mut hi) = (best.1 - step, best.1 + step);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let mut f1 = hs.h_eval(x1)?;
    let mut f2 = hs.h_eval(x2)?;
    for _ in 0..80 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = hs.h_eval(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = hs.h_eval(x2)?;
        }
    }
    let (h, z) = if f1 < f2 { (f1, x1) } else { (f2, x2) };
    Ok(if h < best.0 { (h, z) } else { best })
}

/// Select the constraint case for (params, h₀) and evaluate it. Never fails:
/// evaluation problems are reported as an unsatisfied case.
pub fn check_h(params: &SolutionParams) -> HPhysicalityReport {
    let q1 = r1_coefficients(params);
    let h0 = params.h0;
    let r0 = q1.evaluate(h0);
    let scale = q1.scale_at(h0);
    let root_tol = 1e-12 * scale.max(1e-300);
    let inv = invariants_from_quartic(&q1);
    let behavior = inv
        .as_ref()
        .map(classify_behavior)
        .unwrap_or(Behavior::Unclassified);
    let e1 = inv
        .ok()
        .and_then(|i| lattice_from_invariants(i).ok())
        .map(|l| l.e1)
        .unwrap_or(f64::NAN);
    let mut details = vec![
        ("h0".to_string(), h0),
        ("R1(h0)".to_string(), r0),
        ("e1".to_string(), e1),
    ];
    let numerator_ok = |details: &mut Vec<(String, f64)>| -> bool {
        match HSolution::new(*params).and_then(|hs| min_over_period(&hs)) {
            Ok((hmin, zmin)) => {
                details.push(("min_h".into(), hmin));
                details.push(("argmin_z".into(), zmin));
                hmin >= -1e-12
            }
            Err(_) => false,
        }
    };
    let (case, satisfied) = if h0 == 0.0 {
        let bound = q1.gamma / 2.0;
        details.push(("gamma1/2".into(), bound));
        details.push(("delta1".into(), q1.delta));
        (HCase::ZeroRoot, e1 > bound && q1.delta > 0.0)
    } else if r0.abs() <= root_tol {
        let bound = 0.5 * (q1.gamma + 2.0 * q1.beta * h0 + q1.alpha * h0 * h0);
        details.push(("k".into(), bound));
        let ok = e1 > bound && numerator_ok(&mut details);
        (HCase::SimpleRoot, ok)
    } else if r0 > 0.0 {
        (HCase::Interior, numerator_ok(&mut details))
    } else {
        (HCase::Interior, false)
    };
    HPhysicalityReport {
        case,
        satisfied,
        details,
        behavior,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ActiveConstraint {
    /// R₂(f₀, z) ≥ 0
    Nonnegative,
    /// ẽ₁ inequality with the + sign (a < 0) or the R₂ = 0 case (a > 0)
    RootPlus,
    /// ẽ₁ inequality with the − sign (a < 0)
    RootMinus,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct BoundaryPoint {
    pub f0: f64,
    pub z: f64,
    pub constraint: ActiveConstraint,
    /// value of the active inequality (≈ 0 unless `jump`)
    pub margin: f64,
    /// The inequality changes sign by a jump rather than through zero: ẽ₁
    /// is discontinuous where Δt changes sign.
    pub jump: bool,
}

/// Admissibility masks indexed `[iz][if0]`.
#[derive(Debug, Clone, Serialize)]
pub struct AdmissibleRegion {
    pub f0_grid: Vec<f64>,
    pub z_grid: Vec<f64>,
    pub mask: Vec<Vec<bool>>,
    /// R₂(f₀, z) ≥ 0 alone
    pub mask_nonnegative: Vec<Vec<bool>>,
    /// ẽ₁ inequality, + sign
    pub mask_plus: Vec<Vec<bool>>,
    /// ẽ₁ inequality, − sign
    pub mask_minus: Vec<Vec<bool>>,
    pub boundary: Vec<BoundaryPoint>,
}

impl AdmissibleRegion {
    pub fn count(&self) -> usize {
        self.mask.iter().flatten().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        self.count() == 0
    }
}

/// Per-z data that the f₀ constraints need.
#[derive(Debug, Clone)]
struct ZColumn {
    q2: crate::quartic::QuarticCoefficients,
    e1t: f64,
}

/// Signed margins of the constraints at (f₀, z): ≥ 0 means satisfied.
#[derive(Debug, Clone, Copy)]
struct Margins {
    nonneg: f64,
    plus: f64,
    minus: f64,
}

fn margins(col: &ZColumn, f0: f64) -> Margins {
    let q = &col.q2;
    let r2 = q.evaluate(f0);
    let scale = q.scale_at(f0).max(1e-300);
    let base = 0.5 * (q.gamma + q.alpha * f0 * f0);
    let root = (q.alpha * r2).max(0.0).sqrt();
    Margins {
        // relative, so the tolerance below is scale-free
        nonneg: r2 / scale + 1e-12,
        plus: col.e1t - (base + 0.5 * root),
        minus: col.e1t - (base - 0.5 * root),
    }
}

fn admissible(a: f64, m: &Margins) -> bool {
    if m.nonneg < 0.0 {
        return false;
    }
    if a > 0.0 {
        // R₂ > 0 suffices; at R₂ = 0 the root inequality is required
        m.nonneg > 2e-12 || m.plus > 0.0
    } else {
        m.plus > 0.0 && m.minus > 0.0
    }
}

/// Whether (f₀, z) with f₀ = `fs.h.params.f0` passes the same test as a
/// region cell.
pub fn is_admissible(fs: &FSolution, z: f64) -> Result<bool> {
    let col = fs.column(z)?;
    let zc = ZColumn {
        q2: col.q2,
        e1t: col.lat_t.e1,
    };
    Ok(admissible(fs.h.params.a, &margins(&zc, fs.h.params.f0)))
}

fn active(a: f64, m0: &Margins, m1: &Margins) -> Option<ActiveConstraint> {
    let flips = |x: f64, y: f64| (x >= 0.0) != (y >= 0.0);
    if flips(m0.nonneg, m1.nonneg) {
        Some(ActiveConstraint::Nonnegative)
    } else if flips(m0.plus, m1.plus) {
        Some(ActiveConstraint::RootPlus)
    } else if a < 0.0 && flips(m0.minus, m1.minus) {
        Some(ActiveConstraint::RootMinus)
    } else {
        None
    }
}

fn margin_of(c: ActiveConstraint, m: &Margins) -> f64 {
    match c {
        ActiveConstraint::Nonnegative => m.nonneg,
        ActiveConstraint::RootPlus => m.plus,
        ActiveConstraint::RootMinus => m.minus,
    }
}

/// Mask of admissible (f₀, z) with R₂(f₀, z) ≥ 0 combined with the ẽ₁
/// inequality for sign(a); both ± signs are required when a < 0.
pub fn admissible_region(
    params: &SolutionParams,
    f0_range: (f64, f64),
    z_range: (f64, f64),
    resolution: (usize, usize),
) -> Result<AdmissibleRegion> {
    admissible_region_with(
        params,
        Gamma2Convention::Consistent,
        f0_range,
        z_range,
        resolution,
    )
}

pub fn admissible_region_with(
    params: &SolutionParams,
    convention: Gamma2Convention,
    f0_range: (f64, f64),
    z_range: (f64, f64),
    resolution: (usize, usize),
) -> Result<AdmissibleRegion> {
    let report = check_h(params);
    if !report.satisfied {
        return Err(Error::ConstraintViolation(format!(
            "h is not physical ({:?} case): {:?}",
            report.case, report.details
        )));
    }
    let (nf, nz) = resolution;
    if nf < 2 || nz < 2 {
        return Err(Error::InvalidInput("region resolution must be ≥ 2".into()));
    }
    let hs = HSolution::new(*params)?;
    let fs = FSolution::with_convention(hs, convention);
    let f0_grid = uniform_grid(f0_range.0, f0_range.1, nf);
    let z_grid = uniform_grid(z_range.0, z_range.1, nz);
    let column = |z: f64| -> Result<ZColumn> {
        let col = fs.column(z)?;
        Ok(ZColumn {
            q2: col.q2,
            e1t: col.lat_t.e1,
        })
    };
    let columns: Vec<ZColumn> = z_grid
        .par_iter()
        .map(|&z| column(z))
        .collect::<Result<_>>()?;
    let a = params.a;
    let table: Vec<Vec<Margins>> = columns
        .iter()
        .map(|c| f0_grid.iter().map(|&f| margins(c, f)).collect())
        .collect();
    let map = |pred: &dyn Fn(&Margins) -> bool| -> Vec<Vec<bool>> {
        table
            .iter()
            .map(|row| row.iter().map(pred).collect())
            .collect()
    };
    let mask = map(&|m| admissible(a, m));
    let mask_nonnegative = map(&|m| m.nonneg >= 0.0);
    let mask_plus = map(&|m| m.plus > 0.0);
    let mask_minus = map(&|m| m.minus > 0.0);

    // straddling edges: along f₀ inside a column, and along z between columns
    let mut edges = Vec::new();
    for iz in 0..nz {
        for jf in 0..nf {
            if jf + 1 < nf && mask[iz][jf] != mask[iz][jf + 1] {
                edges.push(((iz, jf), (iz, jf + 1)));
            }
            if iz + 1 < nz && mask[iz][jf] != mask[iz + 1][jf] {
                edges.push(((iz, jf), (iz + 1, jf)));
            }
        }
    }
    let boundary: Vec<BoundaryPoint> = edges
        .par_iter()
        .filter_map(|&((iz0, jf0), (iz1, jf1))| {
            let p0 = (f0_grid[jf0], z_grid[iz0]);
            let p1 = (f0_grid[jf1], z_grid[iz1]);
            let m0 = table[iz0][jf0];
            let m1 = table[iz1][jf1];
            let c = active(a, &m0, &m1)?;
            let same_z = iz0 == iz1;
            let eval = |s: f64| -> Option<Margins> {
                let f = p0.0 + s * (p1.0 - p0.0);
                if same_z {
                    Some(margins(&columns[iz0], f))
                } else {
                    let z = p0.1 + s * (p1.1 - p0.1);
                    column(z).ok().map(|col| margins(&col, f))
                }
            };
            let (mut lo, mut hi) = (0.0, 1.0);
            let side0 = margin_of(c, &m0) >= 0.0;
            let mut mid_m = m0;
            for it in 0..80 {
                let mid = 0.5 * (lo + hi);
                mid_m = eval(mid)?;
                let g = margin_of(c, &mid_m);
                if it >= BOUNDARY_BISECTIONS && g.abs() <= BOUNDARY_TOL * 1e-3 {
                    break;
                }
                if (g >= 0.0) == side0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let s = 0.5 * (lo + hi);
            Some(BoundaryPoint {
                f0: p0.0 + s * (p1.0 - p0.0),
                z: p0.1 + s * (p1.1 - p0.1),
                constraint: c,
                margin: margin_of(c, &mid_m),
                jump: margin_of(c, &mid_m).abs() > BOUNDARY_TOL,
            })
        })
        .collect();

    Ok(AdmissibleRegion {
        f0_grid,
        z_grid,
        mask,
        mask_nonnegative,
        mask_plus,
        mask_minus,
        boundary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn behaviour_rule() {
        let i = |g2, g3| EllipticInvariants::new(g2, g3).unwrap();
        assert_eq!(classify_behavior(&i(12.0, -8.0)), Behavior::SolitaryLike);
        assert_eq!(classify_behavior(&i(12.0, 8.0)), Behavior::Periodic);
        assert_eq!(classify_behavior(&i(-0.64, -1.4784)), Behavior::Periodic);
        assert_eq!(classify_behavior(&i(0.0, 0.0)), Behavior::SolitaryLike);
    }

    #[test]
    fn appendix_zero_root_case_is_satisfied() {
        let r = check_h(&SolutionParams::appendix_example());
        assert_eq!(r.case, HCase::ZeroRoot);
        assert!(r.satisfied);
        assert!(r.detail("e1").unwrap() > -0.8);
    }

    #[test]
    fn negative_delta_fails_zero_root_case() {
        let p = SolutionParams {
            c3: -0.13,
            ..SolutionParams::appendix_example()
        };
        let r = check_h(&p);
        assert_eq!(r.case, HCase::ZeroRoot);
        assert!(!r.satisfied);
    }

    #[test]
    fn interior_case_dispatch() {
        let p = SolutionParams {
            h0: 0.3,
            ..SolutionParams::appendix_example()
        };
        let r = check_h(&p);
        assert_eq!(r.case, HCase::Interior);
        assert!(r.satisfied, "{r:?}");
    }
}
