//! Residual audits of the constructed fields against their defining
//! equations, with independent ODE/quadrature oracles and a parameter search
//! on the Riccati consistency residual.

mod oracle;
mod search;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quartic::QuarticCoefficients;
use crate::solution::{FSolution, HSolution, PhiSolution, QuarticSolution, SampledField};
use crate::weierstrass::EllipticInvariants;

pub use oracle::{ode_oracle, quadrature_period, OracleCurve, OracleKind};
pub use search::{consistency_search, SearchConfig, SearchOutcome, SearchResult};

/// Phase derivative step, relative to Lz.
pub const PHASE_STEP: f64 = 1e-5;
/// z-derivative step of f in the Riccati residual, relative to Lz.
pub const RICCATI_STEP: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Axis {
    fn of(grid: &[f64]) -> Option<Self> {
        Some(Self {
            lo: *grid.first()?,
            hi: *grid.last()?,
            n: grid.len(),
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ResidualReport {
    pub equation: String,
    pub t_axis: Option<Axis>,
    pub z_axis: Option<Axis>,
    pub max_abs: f64,
    /// max_abs / (1 + largest individual term magnitude on the grid)
    pub max_rel: f64,
    /// (t, z) of the maximum; t is NaN for z-only residuals.
    pub location: (f64, f64),
    pub construction_error_floor: f64,
    pub evaluated: usize,
    /// Grid points that could not be evaluated (singular or inadmissible).
    pub skipped: usize,
    pub details: Vec<(String, f64)>,
}

impl ResidualReport {
    pub fn detail(&self, key: &str) -> Option<f64> {
        self.details.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }
}

/// One evaluated grid point: residual, largest term magnitude, location.
#[derive(Debug, Clone, Copy)]
struct Sample {
    res: f64,
    terms: f64,
    at: (f64, f64),
}

/// Max with tie-break on the lowest index, so the result does not depend on
/// how the grid was split across threads.
fn reduce(equation: &str, samples: &[Option<Sample>]) -> ResidualReport {
    let mut max_abs = 0.0;
    let mut location = (f64::NAN, f64::NAN);
    let mut terms = 0.0f64;
    let mut evaluated = 0;
    for s in samples.iter().flatten() {
        evaluated += 1;
        terms = terms.max(s.terms);
        if s.res > max_abs || evaluated == 1 {
            max_abs = s.res;
            location = s.at;
        }
    }
    ResidualReport {
        equation: equation.to_string(),
        t_axis: None,
        z_axis: None,
        max_abs,
        max_rel: max_abs / (1.0 + terms),
        location,
        construction_error_floor: max_abs,
        evaluated,
        skipped: samples.len() - evaluated,
        details: Vec::new(),
    }
}

fn eval_quartic(q: &QuarticCoefficients, x: Complex64) -> Complex64 {
    let [c4, c3, c2, c1, c0] = q.expanded();
    (((c4 * x + c3) * x + c2) * x + c1) * x + c0
}

fn quartic_terms(q: &QuarticCoefficients, x: Complex64) -> f64 {
    q.expanded()
        .iter()
        .rev()
        .enumerate()
        .map(|(n, c)| (c * x.powi(n as i32)).norm())
        .fold(0.0, f64::max)
}

/// |x′² − R(x)| for a closed-form quartic solution, with analytic x′,
/// evaluated in complex arithmetic (the value may be complex when R(x₀) < 0).
fn quartic_residual(
    sol: &QuarticSolution,
    q: &QuarticCoefficients,
    s: f64,
    z: f64,
    t_major: bool,
) -> Option<Sample> {
    let (x, dx) = sol.eval_complex(Complex64::new(s, 0.0)).ok()?;
    let res = (dx * dx - eval_quartic(q, x)).norm();
    let terms = dx.norm_sqr().max(quartic_terms(q, x));
    res.is_finite().then_some(Sample {
        res,
        terms,
        at: if t_major { (s, z) } else { (f64::NAN, s) },
    })
}

/// max |h_z² − R₁(h)| over `z_grid`, h_z analytic.
pub fn residual_h(hs: &HSolution, z_grid: &[f64]) -> ResidualReport {
    let core = hs.core();
    let samples: Vec<Option<Sample>> = z_grid
        .par_iter()
        .map(|&z| quartic_residual(core, &hs.q1, z, z, false))
        .collect();
    let mut r = reduce("h", &samples);
    r.z_axis = Axis::of(z_grid);
    r
}

/// residual_h for h built on a lattice whose g₂ is shifted by `dg2`: the
/// sensitivity of the residual to the invariant formula.
pub fn residual_h_perturbed(hs: &HSolution, z_grid: &[f64], dg2: f64) -> Result<ResidualReport> {
    let inv = EllipticInvariants::new(hs.inv_z.g2 + dg2, hs.inv_z.g3)?;
    let sol = QuarticSolution::with_invariants(hs.q1, hs.params.h0, inv)?;
    let samples: Vec<Option<Sample>> = z_grid
        .par_iter()
        .map(|&z| quartic_residual(&sol, &hs.q1, z, z, false))
        .collect();
    let mut r = reduce("h-perturbed-g2", &samples);
    r.z_axis = Axis::of(z_grid);
    r.details.push(("dg2".into(), dg2));
    Ok(r)
}

/// max |f_t² − R₂(f, z)| over `t_grid` at one z, f_t analytic. A column with
/// R₂(f₀, z) < 0 is evaluated in complex arithmetic; its largest imaginary
/// part is reported as `max_imag_f`.
pub fn residual_f(fs: &FSolution, z: f64, t_grid: &[f64]) -> Result<ResidualReport> {
    let col = fs.column(z)?;
    let sol = col.solution();
    let samples: Vec<Option<Sample>> = t_grid
        .iter()
        .map(|&t| quartic_residual(sol, &col.q2, t, z, true))
        .collect();
    let max_imag = t_grid
        .iter()
        .filter_map(|&t| sol.eval_complex(Complex64::new(t, 0.0)).ok())
        .map(|(x, _)| x.im.abs())
        .fold(0.0, f64::max);
    let mut r = reduce("f", &samples);
    r.t_axis = Axis::of(t_grid);
    r.z_axis = Axis::of(&[z]);
    r.details.push(("R2(f0,z)".into(), col.r2_at_f0));
    r.details.push(("max_imag_f".into(), max_imag));
    Ok(r)
}

/// Central difference D(s) = (g(x+s) − g(x−s))/2s, extrapolated over
/// s, s/2, s/4 to sixth order. Also returns |D₆ − D₄| as an error estimate.
pub fn central_derivative(g: impl Fn(f64) -> Result<f64>, x: f64, step: f64) -> Result<(f64, f64)> {
    let d = |s: f64| -> Result<f64> { Ok((g(x + s)? - g(x - s)?) / (2.0 * s)) };
    let (d1, d2, d3) = (d(step)?, d(step / 2.0)?, d(step / 4.0)?);
    let e1 = (4.0 * d2 - d1) / 3.0;
    let e2 = (4.0 * d3 - d2) / 3.0;
    let best = (16.0 * e2 - e1) / 15.0;
    Ok((best, (best - e2).abs()))
}

/// The stencil offsets [`central_derivative`] touches.
fn stencil(step: f64) -> [f64; 6] {
    [
        -step,
        -step / 2.0,
        -step / 4.0,
        step / 4.0,
        step / 2.0,
        step,
    ]
}

/// max |φ_z + 2a·h − c₁| over `z_grid` for arbitrary φ and h.
pub fn residual_phase_with(
    phi: impl Fn(f64) -> Result<f64> + Sync,
    h: impl Fn(f64) -> Result<f64> + Sync,
    a: f64,
    c1: f64,
    z_grid: &[f64],
    step: f64,
) -> ResidualReport {
    let samples: Vec<(Option<Sample>, f64)> = z_grid
        .par_iter()
        .map(|&z| {
            let Ok((dphi, err)) = central_derivative(&phi, z, step) else {
                return (None, 0.0);
            };
            let Ok(hv) = h(z) else { return (None, 0.0) };
            let res = (dphi + 2.0 * a * hv - c1).abs();
            let terms = dphi.abs().max((2.0 * a * hv).abs()).max(c1.abs());
            (
                Some(Sample {
                    res,
                    terms,
                    at: (f64::NAN, z),
                }),
                err,
            )
        })
        .collect();
    let points: Vec<Option<Sample>> = samples.iter().map(|s| s.0).collect();
    let mut r = reduce("phase", &points);
    r.z_axis = Axis::of(z_grid);
    r.construction_error_floor = samples.iter().map(|s| s.1).fold(0.0, f64::max);
    r.details.push(("step".into(), step));
    r
}

/// Phase residual of the closed-form φ, step `PHASE_STEP`·Lz.
pub fn residual_phase(ps: &PhiSolution, hs: &HSolution, z_grid: &[f64]) -> ResidualReport {
    let lz = hs.period();
    let step = PHASE_STEP * if lz.is_finite() { lz } else { 1.0 };
    let p = hs.params;
    residual_phase_with(
        |z| ps.phi_eval(z),
        |z| hs.h_eval(z),
        p.a,
        p.c1,
        z_grid,
        step,
    )
}

/// Values of f along one t row at fixed z; `None` where f is singular.
pub type Row = Vec<Option<f64>>;

/// max |f_z − √h·(c₁ − a(3h + f²))| for arbitrary f and h.
///
/// `f_row(z, ts)` evaluates f on a t row, `h(z)` returns (h, h_z). f_z is a
/// Richardson-extrapolated central difference with the given step. Stencils
/// that straddle a zero of h are skipped: there √h has a kink and the sign
/// of δ₂ flips, so f is not differentiable in z.
pub fn residual_riccati_with(
    f_row: impl Fn(f64, &[f64]) -> Result<Row> + Sync,
    h: impl Fn(f64) -> Result<(f64, f64)> + Sync,
    a: f64,
    c1: f64,
    t_grid: &[f64],
    z_grid: &[f64],
    step: f64,
) -> ResidualReport {
    let nt = t_grid.len();
    let rows: Vec<(Vec<Option<Sample>>, f64)> = z_grid
        .par_iter()
        .map(|&z| {
            let empty = (vec![None; nt], 0.0);
            let offs = stencil(step);
            let Ok(base) = f_row(z, t_grid) else {
                return empty;
            };
            let Ok((hv, _)) = h(z) else { return empty };
            let mut hs_min = hv;
            let mut hz_max = 0.0f64;
            let mut shifted = Vec::with_capacity(offs.len());
            for &o in &offs {
                let (Ok(row), Ok((hh, hhz))) = (f_row(z + o, t_grid), h(z + o)) else {
                    return empty;
                };
                hs_min = hs_min.min(hh);
                hz_max = hz_max.max(hhz.abs());
                shifted.push(row);
            }
            if hs_min <= hz_max * step + 1e-14 {
                return empty;
            }
            let d = hv.max(0.0).sqrt();
            let mut worst_err = 0.0f64;
            let samples = (0..nt)
                .map(|it| {
                    let f = base[it]?;
                    let vals: Option<Vec<f64>> = shifted.iter().map(|r| r[it]).collect();
                    let v = vals?;
                    // offsets are −s, −s/2, −s/4, s/4, s/2, s
                    let dd = |k: usize| (v[5 - k] - v[k]) / (2.0 * offs[5 - k]);
                    let (d1, d2, d3) = (dd(0), dd(1), dd(2));
                    let e1 = (4.0 * d2 - d1) / 3.0;
                    let e2 = (4.0 * d3 - d2) / 3.0;
                    let fz = (16.0 * e2 - e1) / 15.0;
                    worst_err = worst_err.max((fz - e2).abs());
                    let rhs = d * (c1 - a * (3.0 * hv + f * f));
                    let res = (fz - rhs).abs();
                    let terms = fz
                        .abs()
                        .max((d * c1).abs())
                        .max((3.0 * a * d * hv).abs())
                        .max((a * d * f * f).abs());
                    res.is_finite().then_some(Sample {
                        res,
                        terms,
                        at: (t_grid[it], z),
                    })
                })
                .collect();
            (samples, worst_err)
        })
        .collect();
    let flat: Vec<Option<Sample>> = rows.iter().flat_map(|r| r.0.iter().copied()).collect();
    let fd_err = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    let mut r = reduce("riccati", &flat);
    r.t_axis = Axis::of(t_grid);
    r.z_axis = Axis::of(z_grid);
    r.construction_error_floor = fd_err;
    r.details.push(("fd_error".into(), fd_err));
    r.details.push(("step".into(), step));
    r
}

/// Riccati residual of the closed-form f, with step `RICCATI_STEP`·Lz. The
/// construction floor is the larger of the finite-difference error estimate
/// and residual_f on the same grid; `ratio_to_floor` compares against it.
pub fn residual_riccati(fs: &FSolution, t_grid: &[f64], z_grid: &[f64]) -> ResidualReport {
    let lz = fs.h.period();
    let step = RICCATI_STEP * if lz.is_finite() { lz } else { 1.0 };
    let row = |z: f64, ts: &[f64]| -> Result<Row> {
        let col = fs.column(z)?;
        if col.r2_at_f0 < -1e-12 * col.q2.scale_at(fs.h.params.f0) {
            return Err(Error::ConstraintViolation(format!("R₂(f₀, {z}) < 0")));
        }
        Ok(ts.iter().map(|&t| col.f_eval(t).ok()).collect())
    };
    let p = fs.h.params;
    let mut r = residual_riccati_with(
        row,
        |z| fs.h.eval_with_derivative(z),
        p.a,
        p.c1,
        t_grid,
        z_grid,
        step,
    );
    let f_floor = z_grid
        .par_iter()
        .filter_map(|&z| residual_f(fs, z, t_grid).ok())
        .map(|rep| rep.max_abs)
        .reduce(|| 0.0, f64::max);
    r.construction_error_floor = r.construction_error_floor.max(f_floor);
    r.details.push(("residual_f_floor".into(), f_floor));
    r.details.push((
        "ratio_to_floor".into(),
        r.max_abs / r.construction_error_floor.max(f64::MIN_POSITIVE),
    ));
    r
}

/// CNLSE residual split into the parts multiplying e^{iφ}: the real part
/// belongs to the f-equation, the imaginary part to the Riccati condition.
#[derive(Debug, Clone, Serialize)]
pub struct CnlseResidual {
    pub total: ResidualReport,
    pub real: ResidualReport,
    pub imag: ResidualReport,
}

fn uniform_step(grid: &[f64], name: &str) -> Result<f64> {
    if grid.len() < 9 {
        return Err(Error::Resolution(format!("{name} grid needs ≥ 9 points")));
    }
    let step = (grid[grid.len() - 1] - grid[0]) / (grid.len() - 1) as f64;
    let uneven = grid
        .windows(2)
        .any(|w| ((w[1] - w[0]) - step).abs() > 1e-9 * step.abs().max(1e-300));
    if uneven || step <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "{name} grid is not uniform and increasing"
        )));
    }
    Ok(step)
}

/// max |iΨ_z + Ψ_tt + aΨ|Ψ|²| on the interior of a uniform grid, by
/// fourth-order central differences. The same stencils at twice the step
/// give the truncation estimate |L_h − L_2h|/15, reported as the floor.
///
/// `phase[iz]` (φ at each z row) rotates the residual by e^{−iφ} before the
/// real/imaginary split; without it the raw residual is split. With `tol`,
/// a floor above it is a resolution error.
pub fn residual_cnlse(
    psi: &SampledField<Complex64>,
    a: f64,
    phase: Option<&[f64]>,
    tol: Option<f64>,
) -> Result<CnlseResidual> {
    let dt = uniform_step(&psi.t_grid, "t")?;
    let dz = uniform_step(&psi.z_grid, "z")?;
    if let Some(ph) = phase {
        if ph.len() != psi.z_grid.len() {
            return Err(Error::InvalidInput(
                "phase length must match the z grid".into(),
            ));
        }
    }
    let (nt, nz) = (psi.t_grid.len(), psi.z_grid.len());
    let v = &psi.values;
    let op = |iz: usize, it: usize, m: usize| -> (Complex64, f64) {
        let m = m as isize;
        let at = |di: isize, dj: isize| v[(iz as isize + di) as usize][(it as isize + dj) as usize];
        let (h_t, h_z) = (dt * m as f64, dz * m as f64);
        let tt = (-at(0, -2 * m) + 16.0 * at(0, -m) - 30.0 * at(0, 0) + 16.0 * at(0, m)
            - at(0, 2 * m))
            / (12.0 * h_t * h_t);
        let z = (at(-2 * m, 0) - 8.0 * at(-m, 0) + 8.0 * at(m, 0) - at(2 * m, 0)) / (12.0 * h_z);
        let p = at(0, 0);
        let nl = a * p * p.norm_sqr();
        let res = Complex64::i() * z + tt + nl;
        (res, z.norm().max(tt.norm()).max(nl.norm()))
    };
    let rows: Vec<Vec<Option<(Sample, Sample, Sample, f64)>>> = (0..nz)
        .into_par_iter()
        .map(|iz| {
            (0..nt)
                .map(|it| {
                    if iz < 4 || iz + 4 >= nz || it < 4 || it + 4 >= nt {
                        return None;
                    }
                    let (r1, terms) = op(iz, it, 1);
                    let (r2, _) = op(iz, it, 2);
                    let err = (r1 - r2).norm() / 15.0;
                    let rot = phase.map_or(Complex64::new(1.0, 0.0), |ph| {
                        Complex64::from_polar(1.0, -ph[iz])
                    });
                    let r = r1 * rot;
                    let at = (psi.t_grid[it], psi.z_grid[iz]);
                    let s = |res: f64| Sample { res, terms, at };
                    Some((s(r.norm()), s(r.re.abs()), s(r.im.abs()), err))
                })
                .collect()
        })
        .collect();
    let cells: Vec<(Sample, Sample, Sample, f64)> =
        rows.iter().flatten().flatten().copied().collect();
    if cells.is_empty() {
        return Err(Error::Resolution("grid has no interior points".into()));
    }
    let floor = cells.iter().map(|c| c.3).fold(0.0, f64::max);
    if let Some(tol) = tol {
        if floor > tol {
            return Err(Error::Resolution(format!(
                "estimated truncation {floor:e} exceeds tolerance {tol:e}"
            )));
        }
    }
    let pick = |k: usize, tag: &str| -> ResidualReport {
        let samples: Vec<Option<Sample>> = cells.iter().map(|c| Some([c.0, c.1, c.2][k])).collect();
        let mut r = reduce(tag, &samples);
        r.t_axis = Axis::of(&psi.t_grid);
        r.z_axis = Axis::of(&psi.z_grid);
        r.construction_error_floor = floor;
        r.skipped = nt * nz - r.evaluated;
        r
    };
    Ok(CnlseResidual {
        total: pick(0, "cnlse"),
        real: pick(1, "cnlse-real"),
        imag: pick(2, "cnlse-imag"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quartic::SolutionParams;
    use crate::solution::uniform_grid;

    #[test]
    fn derivative_self_test_on_exp_sin() {
        let g = |x: f64| Ok(x.sin().exp());
        let dg = |x: f64| x.cos() * x.sin().exp();
        let period = 2.0 * std::f64::consts::PI;
        let mut worst = 0.0f64;
        for i in 0..200 {
            let x = -3.0 + 0.031 * i as f64;
            for rel in [PHASE_STEP, RICCATI_STEP] {
                let (d, _) = central_derivative(g, x, rel * period).unwrap();
                worst = worst.max((d - dg(x)).abs());
            }
        }
        assert!(worst <= 1e-8, "{worst:e}");
    }

    #[test]
    fn appendix_h_residual_and_sensitivity() {
        let hs = HSolution::new(SolutionParams::appendix_example()).unwrap();
        let grid = uniform_grid(0.01, 3.0 * hs.period(), 301);
        let base = residual_h(&hs, &grid);
        assert!(base.max_rel <= 1e-8, "{base:?}");
        let pert = residual_h_perturbed(&hs, &grid, 1e-3).unwrap();
        assert!(
            pert.max_rel >= 1e3 * base.max_rel,
            "{} vs {}",
            pert.max_rel,
            base.max_rel
        );
    }

    #[test]
    fn phase_residual_for_a_zero() {
        let r = residual_phase_with(
            |z| Ok(0.7 * z + 1.0),
            |z| Ok(z.sin().powi(2)),
            0.0,
            0.7,
            &uniform_grid(0.0, 5.0, 51),
            1e-4,
        );
        assert!(r.max_abs <= 1e-10);
    }

    #[test]
    fn riccati_trivial_fixtures() {
        let ts = uniform_grid(-1.0, 1.0, 5);
        let zs = uniform_grid(0.0, 1.0, 5);
        // constants with c₁ = a(3h + f²)
        let (a, h, f) = (2.0, 0.5, 0.3);
        let c1 = a * (3.0 * h + f * f);
        let r = residual_riccati_with(
            |_, ts| Ok(vec![Some(f); ts.len()]),
            |_| Ok((h, 0.0)),
            a,
            c1,
            &ts,
            &zs,
            1e-3,
        );
        assert_eq!(r.max_abs, 0.0);
        assert_eq!(r.skipped, 0);
    }

    #[test]
    fn cnlse_plane_wave_and_gauge() {
        let a = 1.3;
        let amp = 0.8;
        let ts = uniform_grid(0.0, 1.0, 41);
        let zs = uniform_grid(0.0, 1.0, 41);
        let field = |theta: f64| {
            let vals = zs
                .iter()
                .map(|&z| {
                    ts.iter()
                        .map(|_| Complex64::from_polar(amp, a * amp * amp * z + theta))
                        .collect()
                })
                .collect();
            SampledField::new(ts.clone(), zs.clone(), vals).unwrap()
        };
        let r0 = residual_cnlse(&field(0.0), a, None, None).unwrap();
        let r1 = residual_cnlse(&field(1.1), a, None, None).unwrap();
        // exact solution: what remains is the stencils' own truncation
        assert!(
            r0.total.max_abs <= 2.0 * r0.total.construction_error_floor,
            "{:?}",
            r0.total
        );
        assert!((r0.total.max_abs - r1.total.max_abs).abs() <= 1e-9);
    }
}
