//! Quartic right-hand sides of the amplitude ODEs, their real roots and
//! phase-diagram classification.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Free parameters of one member of the solution family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolutionParams {
    /// Nonlinearity: a > 0 focusing, a < 0 defocusing.
    pub a: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    /// Boundary value h(0) ≥ 0.
    pub h0: f64,
    /// Initial value f(0, 0).
    pub f0: f64,
    /// Phase constant φ(0).
    pub phi0: f64,
}

impl SolutionParams {
    pub fn new(a: f64, c1: f64, c2: f64, c3: f64, h0: f64, f0: f64, phi0: f64) -> Result<Self> {
        let p = Self {
            a,
            c1,
            c2,
            c3,
            h0,
            f0,
            phi0,
        };
        p.validate()?;
        Ok(p)
    }

    /// The worked background example: c₁ = −2, c₂ = 0.4, c₃ = 0.13, a = −1,
    /// h₀ = 0, f₀ = 0, φ₀ = 0.
    pub fn appendix_example() -> Self {
        Self {
            a: -1.0,
            c1: -2.0,
            c2: 0.4,
            c3: 0.13,
            h0: 0.0,
            f0: 0.0,
            phi0: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.a, self.c1, self.c2, self.c3, self.h0, self.f0, self.phi0,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite parameter in {self:?}"
            )));
        }
        if self.a == 0.0 {
            return Err(Error::InvalidInput("a must be non-zero".into()));
        }
        if self.h0 < 0.0 {
            return Err(Error::InvalidInput(format!("h0 = {} must be ≥ 0", self.h0)));
        }
        Ok(())
    }
}

/// R(x) = αx⁴ + 4βx³ + 6γx² + 4δx + ε.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuarticCoefficients {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub epsilon: f64,
}

impl QuarticCoefficients {
    pub fn new(alpha: f64, beta: f64, gamma: f64, delta: f64, epsilon: f64) -> Self {
        Self {
            alpha,
            beta,
            gamma,
            delta,
            epsilon,
        }
    }

    pub fn check_finite(&self) -> Result<()> {
        if self.expanded().iter().all(|c| c.is_finite()) {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!(
                "non-finite quartic coefficient in {self:?}"
            )))
        }
    }

    /// Ordinary coefficients, highest degree first.
    pub fn expanded(&self) -> [f64; 5] {
        [
            self.alpha,
            4.0 * self.beta,
            6.0 * self.gamma,
            4.0 * self.delta,
            self.epsilon,
        ]
    }

    pub fn evaluate(&self, x: f64) -> f64 {
        self.expanded().iter().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let [a, b, c, d, _] = self.expanded();
        ((4.0 * a * x + 3.0 * b) * x + 2.0 * c) * x + d
    }

    pub fn second_derivative(&self, x: f64) -> f64 {
        let [a, b, c, _, _] = self.expanded();
        (12.0 * a * x + 6.0 * b) * x + 2.0 * c
    }

    pub fn third_derivative(&self, x: f64) -> f64 {
        24.0 * (self.alpha * x + self.beta)
    }

    /// Σ|cᵢ||x|ⁱ, the natural size of R(x) for rounding comparisons.
    pub fn scale_at(&self, x: f64) -> f64 {
        self.expanded()
            .iter()
            .fold(0.0, |acc, &c| acc * x.abs() + c.abs())
    }
}

/// Coefficients of R₁(h) for (h_z)² = R₁(h).
pub fn r1_coefficients(p: &SolutionParams) -> QuarticCoefficients {
    let SolutionParams { a, c1, c2, c3, .. } = *p;
    QuarticCoefficients {
        alpha: -16.0 * a * a,
        beta: 4.0 * a * c1,
        gamma: -(2.0 * c1 * c1 + 8.0 * a * c2) / 3.0,
        delta: 2.0 * c3,
        epsilon: 0.0,
    }
}

/// Which γ₂ the R₂ quartic uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Gamma2Convention {
    /// γ₂ = (c₁ − 3a·h)/6, what the real part of the wave equation demands
    /// together with φ_z = c₁ − 2a·h. With it g₂t, g₃t do not depend on z.
    #[default]
    Consistent,
    /// γ₂ = (c₁ − 3h)/6, the commonly quoted form without the factor a.
    /// Coincides with `Consistent` only for a = 1.
    Unscaled,
}

impl std::str::FromStr for Gamma2Convention {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "consistent" => Ok(Self::Consistent),
            "unscaled" => Ok(Self::Unscaled),
            _ => Err(Error::InvalidInput(format!(
                "unknown gamma2 convention '{s}' (expected consistent|unscaled)"
            ))),
        }
    }
}

/// Coefficients of R₂(f, z) for (f_t)² = R₂(f, z), given h = h(z) and
/// h_z = h′(z), with the consistent γ₂.
pub fn r2_coefficients(p: &SolutionParams, h: f64, hz: f64) -> Result<QuarticCoefficients> {
    r2_coefficients_with(p, h, hz, Gamma2Convention::Consistent)
}

/// As [`r2_coefficients`] with an explicit γ₂ convention.
///
/// At h = 0 the quotient h_z/(4√h) is replaced by its limit ±√δ₁/2, with the
/// sign of h_z (taken as + when h_z = 0, the approach from z > 0 for an even
/// h).
pub fn r2_coefficients_with(
    p: &SolutionParams,
    h: f64,
    hz: f64,
    convention: Gamma2Convention,
) -> Result<QuarticCoefficients> {
    if !(h.is_finite() && hz.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite h={h}, h_z={hz}")));
    }
    if h < 0.0 {
        return Err(Error::InvalidInput(format!("h = {h} must be ≥ 0")));
    }
    let SolutionParams { a, c1, c2, c3, .. } = *p;
    let delta = if h > 0.0 {
        hz / (4.0 * h.sqrt())
    } else {
        let delta1 = 2.0 * c3;
        if delta1 < 0.0 {
            return Err(Error::InvalidInput(format!(
                "h = 0 with δ₁ = {delta1} < 0 has no real limit for δ₂"
            )));
        }
        let sign = if hz < 0.0 { -1.0 } else { 1.0 };
        sign * delta1.sqrt() / 2.0
    };
    let gamma = match convention {
        Gamma2Convention::Consistent => (c1 - 3.0 * a * h) / 6.0,
        Gamma2Convention::Unscaled => (c1 - 3.0 * h) / 6.0,
    };
    Ok(QuarticCoefficients {
        alpha: -a / 2.0,
        beta: 0.0,
        gamma,
        delta,
        epsilon: 2.0 * c2 + 1.5 * a * h * h - c1 * h,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Root {
    pub value: f64,
    pub multiplicity: usize,
}

/// Imaginary parts below this (relative) are treated as eigenvalue noise.
const REAL_EIGEN_TOL: f64 = 1e-6;

/// Default distance under which two roots count as one multiple root.
pub const MULTIPLICITY_TOL: f64 = 1e-7;

fn poly_eval(c: &[f64], x: f64) -> f64 {
    c.iter().fold(0.0, |acc, &v| acc * x + v)
}

fn poly_deriv(c: &[f64]) -> Vec<f64> {
    let d = c.len() - 1;
    c[..d]
        .iter()
        .enumerate()
        .map(|(i, &v)| v * (d - i) as f64)
        .collect()
}

fn poly_scale(c: &[f64], x: f64) -> f64 {
    c.iter().fold(0.0, |acc, &v| acc * x.abs() + v.abs())
}

fn newton(c: &[f64], mut x: f64) -> f64 {
    let dc = poly_deriv(c);
    for _ in 0..50 {
        let f = poly_eval(c, x);
        let df = poly_eval(&dc, x);
        if f == 0.0 || df == 0.0 {
            break;
        }
        let next = x - f / df;
        if !(poly_eval(c, next).abs() < f.abs()) {
            break;
        }
        x = next;
    }
    x
}

fn eigen_roots(c: &[f64]) -> Vec<(f64, f64)> {
    let d = c.len() - 1;
    if d == 0 {
        return vec![];
    }
    if d == 1 {
        return vec![(-c[1] / c[0], 0.0)];
    }
    let mut m = DMatrix::<f64>::zeros(d, d);
    for j in 0..d {
        m[(0, j)] = -c[j + 1] / c[0];
    }
    for i in 1..d {
        m[(i, i - 1)] = 1.0;
    }
    m.complex_eigenvalues()
        .iter()
        .map(|z| (z.re, z.im))
        .collect()
}

/// Real roots of R with multiplicities, sorted ascending.
pub fn real_roots(q: &QuarticCoefficients) -> Result<Vec<Root>> {
    real_roots_with_tol(q, MULTIPLICITY_TOL)
}

pub fn real_roots_with_tol(q: &QuarticCoefficients, multiplicity_tol: f64) -> Result<Vec<Root>> {
    q.check_finite()?;
    let full = q.expanded();
    let size = full.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    if size == 0.0 {
        return Err(Error::InvalidInput("quartic is identically zero".into()));
    }
    let lead = full
        .iter()
        .position(|c| c.abs() > 1e-14 * size)
        .unwrap_or(4);
    let mut coeffs: Vec<f64> = full[lead..].to_vec();

    // exact zeros from a vanishing constant term
    let mut zero_mult = 0;
    while coeffs.len() > 1 && *coeffs.last().unwrap() == 0.0 {
        coeffs.pop();
        zero_mult += 1;
    }

    let mut cands: Vec<f64> = eigen_roots(&coeffs)
        .into_iter()
        .filter(|(re, im)| im.abs() <= REAL_EIGEN_TOL * 1f64.max(re.abs()))
        .map(|(re, _)| re)
        .collect();
    cands.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let mut clusters: Vec<Vec<f64>> = Vec::new();
    for x in cands {
        match clusters.last_mut() {
            Some(cl) if (x - cl[cl.len() - 1]).abs() <= multiplicity_tol * 1f64.max(x.abs()) => {
                cl.push(x)
            }
            _ => clusters.push(vec![x]),
        }
    }

    let mut roots = Vec::new();
    for cl in clusters {
        let mult = cl.len();
        let mean = cl.iter().sum::<f64>() / mult as f64;
        // a multiple root is a simple root of the (m−1)-th derivative
        let mut target = coeffs.clone();
        for _ in 1..mult {
            target = poly_deriv(&target);
        }
        let x = newton(&target, mean);
        let resid = poly_eval(&coeffs, x).abs();
        if resid <= 1e-10 * poly_scale(&coeffs, x).max(f64::MIN_POSITIVE) {
            roots.push(Root {
                value: x,
                multiplicity: mult,
            });
        }
    }
    if zero_mult > 0 {
        // merge with a numerically found root at 0, if any
        if let Some(r) = roots.iter_mut().find(|r| r.value.abs() <= multiplicity_tol) {
            r.value = 0.0;
            r.multiplicity += zero_mult;
        } else {
            roots.push(Root {
                value: 0.0,
                multiplicity: zero_mult,
            });
        }
    }
    roots.sort_by(|a, b| a.value.partial_cmp(&b.value).unwrap());
    Ok(roots)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseDiagramReport {
    pub real_roots: Vec<Root>,
    /// Roots in the physical region x ≥ 0.
    pub pdc_roots: Vec<Root>,
    /// Descartes sign changes of the coefficient sequence.
    pub sign_changes: usize,
    /// Disjoint sorted intervals of [0, ∞) on which R ≥ 0; the upper end
    /// may be infinite.
    pub positivity_intervals: Vec<(f64, f64)>,
}

pub fn descartes_sign_changes(q: &QuarticCoefficients) -> usize {
    let signs: Vec<f64> = q
        .expanded()
        .iter()
        .filter(|c| **c != 0.0)
        .map(|c| c.signum())
        .collect();
    signs.windows(2).filter(|w| w[0] != w[1]).count()
}

/// Phase-diagram report for R restricted to the first quadrant x ≥ 0.
pub fn pdc_classify(q: &QuarticCoefficients) -> Result<PhaseDiagramReport> {
    let roots = real_roots(q)?;
    let pdc: Vec<Root> = roots.iter().copied().filter(|r| r.value >= 0.0).collect();

    let mut breaks = vec![0.0];
    breaks.extend(pdc.iter().map(|r| r.value).filter(|&v| v > 0.0));
    let mut intervals: Vec<(f64, f64)> = Vec::new();
    for i in 0..breaks.len() {
        let lo = breaks[i];
        let (hi, probe) = match breaks.get(i + 1) {
            Some(&hi) => (hi, 0.5 * (lo + hi)),
            None => (f64::INFINITY, lo + 1.0 + lo.abs()),
        };
        if q.evaluate(probe) > 0.0 {
            match intervals.last_mut() {
                Some(last) if last.1 == lo => last.1 = hi,
                _ => intervals.push((lo, hi)),
            }
        }
    }
    Ok(PhaseDiagramReport {
        real_roots: roots,
        pdc_roots: pdc,
        sign_changes: descartes_sign_changes(q),
        positivity_intervals: intervals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn appendix_r1() -> QuarticCoefficients {
        r1_coefficients(&SolutionParams::appendix_example())
    }

    #[test]
    fn r1_coefficients_at_example() {
        let q = appendix_r1();
        assert_eq!(q.alpha, -16.0);
        assert_eq!(q.beta, 8.0);
        assert!((q.gamma + 1.6).abs() < 1e-15);
        assert_eq!(q.delta, 0.26);
        assert_eq!(q.epsilon, 0.0);
    }

    #[test]
    fn r1_alpha_negative_and_c3_zero() {
        let mut p = SolutionParams::appendix_example();
        p.a = 2.5;
        p.c3 = 0.0;
        let q = r1_coefficients(&p);
        assert!(q.alpha < 0.0);
        assert_eq!(q.delta, 0.0);
    }

    #[test]
    fn r2_limit_branch_at_zero_h() {
        let p = SolutionParams::appendix_example();
        let q = r2_coefficients(&p, 0.0, 0.0).unwrap();
        assert_eq!(q.alpha, 0.5);
        assert_eq!(q.beta, 0.0);
        assert!((q.gamma + 1.0 / 3.0).abs() < 1e-15);
        assert!((q.delta - 0.26f64.sqrt() / 2.0).abs() < 1e-15);
        assert!((q.epsilon - 0.8).abs() < 1e-15);
        let q = r2_coefficients(&p, 0.0, -1e-30).unwrap();
        assert!((q.delta + 0.26f64.sqrt() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn r2_turning_point_and_focusing_sign() {
        let mut p = SolutionParams::appendix_example();
        assert_eq!(r2_coefficients(&p, 0.7, 0.0).unwrap().delta, 0.0);
        p.a = 1.3;
        assert!(r2_coefficients(&p, 0.7, 0.1).unwrap().alpha < 0.0);
        assert!(r2_coefficients(&p, -0.1, 0.0).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(SolutionParams::new(0.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0).is_err());
        assert!(SolutionParams::new(1.0, 1.0, 1.0, 1.0, -0.1, 0.0, 0.0).is_err());
        assert!(SolutionParams::new(1.0, 1.0, 1.0, 1.0, 0.1, 0.0, 0.0).is_ok());
    }

    #[test]
    fn horner_matches_expanded_polynomial() {
        let q = QuarticCoefficients::new(-1.3, 0.7, 0.2, -0.9, 2.1);
        for i in 0..20 {
            let x = -3.0 + 0.31 * i as f64;
            let expanded = q.alpha * x.powi(4)
                + 4.0 * q.beta * x.powi(3)
                + 6.0 * q.gamma * x * x
                + 4.0 * q.delta * x
                + q.epsilon;
            let h = q.evaluate(x);
            assert!((h - expanded).abs() <= 1e-13 * expanded.abs().max(1.0));
        }
    }

    #[test]
    fn zero_root_is_exact() {
        let roots = real_roots(&appendix_r1()).unwrap();
        assert!(roots.iter().any(|r| r.value == 0.0 && r.multiplicity == 1));
    }

    #[test]
    fn double_roots_detected() {
        // x⁴ − 2x² + 1
        let q = QuarticCoefficients::new(1.0, 0.0, -1.0 / 3.0, 0.0, 1.0);
        let roots = real_roots(&q).unwrap();
        assert_eq!(roots.len(), 2);
        for (r, want) in roots.iter().zip([-1.0, 1.0]) {
            assert_eq!(r.multiplicity, 2);
            assert!((r.value - want).abs() < 1e-7);
        }
    }

    #[test]
    fn appendix_roots_against_bisection() {
        let q = appendix_r1();
        let roots = real_roots(&q).unwrap();
        // independent sign-change bisection on (0, 10]
        let mut found = vec![];
        let n = 10_000;
        for i in 0..n {
            let (mut lo, mut hi) = (
                1e-9 + 10.0 * i as f64 / n as f64,
                1e-9 + 10.0 * (i + 1) as f64 / n as f64,
            );
            if q.evaluate(lo).signum() != q.evaluate(hi).signum() {
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if q.evaluate(mid).signum() == q.evaluate(lo).signum() {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                found.push(0.5 * (lo + hi));
            }
        }
        let positive: Vec<f64> = roots.iter().map(|r| r.value).filter(|&v| v > 0.0).collect();
        assert_eq!(positive.len(), found.len());
        for (a, b) in positive.iter().zip(&found) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
        assert!((found[0] - 1.662_641_988_883_136_7).abs() < 1e-12);
    }

    #[test]
    fn appendix_phase_diagram() {
        let rep = pdc_classify(&appendix_r1()).unwrap();
        assert_eq!(rep.sign_changes, 3);
        assert_eq!(rep.pdc_roots.len(), 2);
        assert_eq!(rep.positivity_intervals.len(), 1);
        let (lo, hi) = rep.positivity_intervals[0];
        assert_eq!(lo, 0.0);
        assert!((hi - 1.662_641_988_883_136_7).abs() < 1e-12);
    }

    #[test]
    fn all_positive_coefficients() {
        let q = QuarticCoefficients::new(1.0, 0.5, 0.2, 0.1, 0.3);
        let rep = pdc_classify(&q).unwrap();
        assert_eq!(rep.sign_changes, 0);
        assert!(rep.pdc_roots.is_empty());
        assert_eq!(rep.positivity_intervals, vec![(0.0, f64::INFINITY)]);
    }

    #[test]
    fn degenerate_quartic_rejected() {
        assert!(real_roots(&QuarticCoefficients::new(0.0, 0.0, 0.0, 0.0, 0.0)).is_err());
    }
}
