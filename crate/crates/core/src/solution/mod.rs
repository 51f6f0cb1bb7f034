//! The solution family: h(z), φ(z), f(t, z) and Ψ(t, z) = (f + i√h)·e^{iφ}.

mod closed_form;
mod phase;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quartic::{
    r1_coefficients, r2_coefficients_with, Gamma2Convention, QuarticCoefficients, SolutionParams,
};
use crate::weierstrass::{EllipticInvariants, LatticeData};

pub use closed_form::QuarticSolution;
pub use phase::PhiSolution;

/// Which closed form represents h.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum HForm {
    /// R₁(h₀) ≠ 0: the full expression with the ℘′ term.
    General,
    /// R₁(h₀) = 0, h₀ > 0: h₀ + (R₁′(h₀)/4)/(℘ − k).
    SimpleRoot,
    /// h₀ = 0, δ₁ > 0: δ₁/(℘ − γ₁/2).
    ZeroRoot,
}

/// h(z) solving h_z² = R₁(h), h(0) = h₀.
#[derive(Debug, Clone)]
pub struct HSolution {
    pub params: SolutionParams,
    pub q1: QuarticCoefficients,
    pub inv_z: EllipticInvariants,
    pub lat_z: LatticeData,
    pub r1_at_h0: f64,
    pub form: HForm,
    core: QuarticSolution,
}

impl HSolution {
    pub fn new(params: SolutionParams) -> Result<Self> {
        params.validate()?;
        let q1 = r1_coefficients(&params);
        let core = QuarticSolution::new(q1, params.h0)?;
        let r1_at_h0 = core.r0;
        let form = if params.h0 == 0.0 && q1.delta > 0.0 {
            HForm::ZeroRoot
        } else if r1_at_h0 == 0.0 {
            HForm::SimpleRoot
        } else {
            HForm::General
        };
        Ok(Self {
            params,
            q1,
            inv_z: core.invariants,
            lat_z: core.lattice.clone(),
            r1_at_h0,
            form,
            core,
        })
    }

    /// (h, h_z), analytic in z.
    pub fn eval_with_derivative(&self, z: f64) -> Result<(f64, f64)> {
        self.core.eval(z)
    }

    pub fn h_eval(&self, z: f64) -> Result<f64> {
        Ok(self.eval_with_derivative(z)?.0)
    }

    /// Complex (h, h_z) at complex z.
    pub fn eval_complex(&self, z: Complex64) -> Result<(Complex64, Complex64)> {
        self.core.eval_complex(z)
    }

    /// Lz = 2ω(g₂z, g₃z).
    pub fn period(&self) -> f64 {
        self.lat_z.real_period()
    }

    pub(crate) fn core(&self) -> &QuarticSolution {
        &self.core
    }
}

/// The expanded rational form of h for a simple root h₀ of R₁, written
/// directly in ℘ (no ℘′ term).
pub fn h_simple_root_expanded(q1: &QuarticCoefficients, h0: f64, wp: f64) -> f64 {
    let QuarticCoefficients {
        alpha: al,
        beta: be,
        gamma: ga,
        delta: de,
        ..
    } = *q1;
    let num = 4.0 * wp * (h0 * wp + be * h0 * h0 + 2.0 * ga * h0 + de)
        + h0 * h0 * (2.0 * al * de - 2.0 * be * ga)
        + h0 * (4.0 * be * de - 5.0 * ga * ga)
        - 2.0 * ga * de;
    let den = 2.0 * wp - ga - 2.0 * be * h0 - al * h0 * h0;
    num / (den * den)
}

/// h = δ₁/(℘ − γ₁/2), the form for h₀ = 0.
pub fn h_zero_root(q1: &QuarticCoefficients, wp: f64) -> f64 {
    q1.delta / (wp - q1.gamma / 2.0)
}

/// Lattice data and closed form of f(·, z) at one z.
#[derive(Debug, Clone)]
pub struct FColumn {
    pub z: f64,
    pub h: f64,
    pub hz: f64,
    pub q2: QuarticCoefficients,
    pub inv_t: EllipticInvariants,
    pub lat_t: LatticeData,
    /// R₂(f₀, z)
    pub r2_at_f0: f64,
    core: QuarticSolution,
}

impl FColumn {
    /// (f, f_t) at t; fails when R₂(f₀, z) < 0.
    pub fn eval_with_derivative(&self, t: f64) -> Result<(f64, f64)> {
        let scale = self.q2.scale_at(self.core.x0);
        if self.r2_at_f0 < -1e-12 * scale {
            return Err(Error::ConstraintViolation(format!(
                "R₂(f₀, z) = {} < 0 at z = {}",
                self.r2_at_f0, self.z
            )));
        }
        self.core.eval(t)
    }

    pub fn f_eval(&self, t: f64) -> Result<f64> {
        Ok(self.eval_with_derivative(t)?.0)
    }

    /// Lt(z) = 2ω(g₂t, g₃t).
    pub fn period(&self) -> f64 {
        self.lat_t.real_period()
    }

    pub fn solution(&self) -> &QuarticSolution {
        &self.core
    }
}

/// f(t, z) solving f_t² = R₂(f, z) with f(0, z) = f₀. The t-lattice depends
/// on z through h(z), h_z(z); one column is built per z.
#[derive(Debug, Clone)]
pub struct FSolution {
    pub h: HSolution,
    pub convention: Gamma2Convention,
}

impl FSolution {
    pub fn new(h: HSolution) -> Self {
        Self::with_convention(h, Gamma2Convention::Consistent)
    }

    pub fn with_convention(h: HSolution, convention: Gamma2Convention) -> Self {
        Self { h, convention }
    }

    pub fn column(&self, z: f64) -> Result<FColumn> {
        let (h, hz) = self.h.eval_with_derivative(z)?;
        // rounding can leave h a hair below its zero
        let h = if h < 0.0 && h > -1e-13 { 0.0 } else { h };
        let q2 = r2_coefficients_with(&self.h.params, h, hz, self.convention)?;
        let core = QuarticSolution::new(q2, self.h.params.f0)?;
        Ok(FColumn {
            z,
            h,
            hz,
            q2,
            inv_t: core.invariants,
            lat_t: core.lattice.clone(),
            r2_at_f0: core.r0,
            core,
        })
    }

    pub fn f_eval(&self, t: f64, z: f64) -> Result<f64> {
        self.column(z)?.f_eval(t)
    }

    /// (Lz, Lt(z)).
    pub fn periods(&self, z: f64) -> Result<(f64, f64)> {
        Ok((self.h.period(), self.column(z)?.period()))
    }
}

/// Ψ = (f + i·d)·e^{iφ} with d = +√h.
pub fn assemble_psi(f: f64, h: f64, phi: f64) -> Complex64 {
    let d = h.max(0.0).sqrt();
    Complex64::new(f, d) * Complex64::from_polar(1.0, phi)
}

/// Ψ(t, z) and |Ψ|² = f² + h.
pub fn psi_eval(t: f64, z: f64, fs: &FSolution, ps: &PhiSolution) -> Result<(Complex64, f64)> {
    let col = fs.column(z)?;
    let f = col.f_eval(t)?;
    let phi = ps.phi_eval(z)?;
    Ok((assemble_psi(f, col.h, phi), f * f + col.h.max(0.0)))
}

/// Values on a uniform (t, z) grid; `values[iz][it]`.
#[derive(Debug, Clone, Serialize)]
pub struct SampledField<T> {
    pub t_grid: Vec<f64>,
    pub z_grid: Vec<f64>,
    pub values: Vec<Vec<T>>,
    pub meta: Vec<(String, String)>,
}

impl<T: Clone> SampledField<T> {
    pub fn new(t_grid: Vec<f64>, z_grid: Vec<f64>, values: Vec<Vec<T>>) -> Result<Self> {
        if values.len() != z_grid.len() || values.iter().any(|row| row.len() != t_grid.len()) {
            return Err(Error::InvalidInput(format!(
                "value matrix does not match grids {}×{}",
                z_grid.len(),
                t_grid.len()
            )));
        }
        Ok(Self {
            t_grid,
            z_grid,
            values,
            meta: Vec::new(),
        })
    }

    pub fn with_meta(mut self, key: &str, value: impl ToString) -> Self {
        self.meta.push((key.to_string(), value.to_string()));
        self
    }
}

/// n evenly spaced points from lo to hi inclusive.
pub fn uniform_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// Ψ on a grid; columns with R₂(f₀, z) < 0 or a singular f fail the whole call.
pub fn sample_psi(
    fs: &FSolution,
    ps: &PhiSolution,
    t_grid: &[f64],
    z_grid: &[f64],
) -> Result<SampledField<Complex64>> {
    use rayon::prelude::*;
    let phis = ps.phi_grid(z_grid)?;
    let rows: Result<Vec<Vec<Complex64>>> = z_grid
        .par_iter()
        .zip(phis.par_iter())
        .map(|(&z, &phi)| {
            let col = fs.column(z)?;
            t_grid
                .iter()
                .map(|&t| Ok(assemble_psi(col.f_eval(t)?, col.h, phi)))
                .collect()
        })
        .collect();
    SampledField::new(t_grid.to_vec(), z_grid.to_vec(), rows?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn appendix_h_starts_at_zero_and_is_periodic() {
        let hs = HSolution::new(SolutionParams::appendix_example()).unwrap();
        assert_eq!(hs.form, HForm::ZeroRoot);
        assert_eq!(hs.h_eval(0.0).unwrap(), 0.0);
        let lz = hs.period();
        for i in 0..50 {
            let z = 0.173 * i as f64 - 2.0;
            let a = hs.h_eval(z).unwrap();
            let b = hs.h_eval(z + lz).unwrap();
            assert!((a - b).abs() <= 1e-8, "{z}");
        }
    }

    #[test]
    fn zero_root_form_matches_direct_formula() {
        let p = SolutionParams::appendix_example();
        let hs = HSolution::new(p).unwrap();
        for i in 1..40 {
            let z = 0.11 * i as f64;
            let (wp, _) = hs.lat_z.wp(Complex64::new(z, 0.0)).unwrap();
            let direct = h_zero_root(&hs.q1, wp.re);
            let via_simple = h_simple_root_expanded(&hs.q1, 0.0, wp.re);
            assert!((hs.h_eval(z).unwrap() - direct).abs() <= 1e-12 * (1.0 + direct.abs()));
            assert!((via_simple - direct).abs() <= 1e-12 * (1.0 + direct.abs()));
        }
    }

    #[test]
    fn psi_intensity_identity() {
        for &(f, h, phi) in &[(0.3, 1.2, 0.7), (-2.0, 0.0, -3.0), (0.0, 0.5, 10.0)] {
            let psi = assemble_psi(f, h, phi);
            assert!((psi.norm_sqr() - (f * f + h)).abs() <= 1e-12 * (f * f + h));
        }
    }

    #[test]
    fn f_leaves_f0_with_slope_sqrt_r2() {
        let fs = FSolution::new(HSolution::new(SolutionParams::appendix_example()).unwrap());
        let col = fs.column(0.25 * fs.h.period()).unwrap();
        let r = col.r2_at_f0;
        let t = 1e-4 * col.period();
        // second-order Taylor: f₀ − t√R₂(f₀) + t²R₂′(f₀)/4
        let taylor = -t * r.sqrt() + t * t * col.q2.derivative(0.0) / 4.0;
        let f = col.f_eval(t).unwrap();
        assert!((f - taylor).abs() <= 10.0 * t.powi(3), "{f} vs {taylor}");
        // about 1e-3 at this point, so not within 1e-5 of f₀
        assert!(f.abs() > 1e-4);
    }

    #[test]
    fn sampled_field_shape_is_checked() {
        let ok = SampledField::new(vec![0.0, 1.0], vec![0.0], vec![vec![1.0, 2.0]]);
        assert!(ok.is_ok());
        assert!(SampledField::new(vec![0.0, 1.0], vec![0.0], vec![vec![1.0]]).is_err());
    }
}
