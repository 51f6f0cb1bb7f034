//! Closed-form solution of x′² = R(x) for a quartic R, through ℘ of the
//! quartic's invariants. Shared by h(z) and by every t-column of f(t, z).

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quartic::QuarticCoefficients;
use crate::weierstrass::{
    invariants_from_quartic, lattice_from_invariants, EllipticInvariants, LatticeData,
};

/// Below this distance (in units of min(shortest period, 1)) from a lattice
/// point, ℘ − k is inverted through its Laurent expansion.
const NEAR_POLE: f64 = 1e-3;

/// ℘(s) − k near or away from a pole: either s = 1/(℘ − k) with its first two
/// derivatives, or ℘ − k itself with ℘′, ℘″.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Shifted {
    Inverse {
        s: Complex64,
        ds: Complex64,
        dds: Complex64,
    },
    Direct {
        p: Complex64,
        dp: Complex64,
        ddp: Complex64,
    },
}

impl Shifted {
    /// (P − p₁)/(P − p₂) for P = ℘ − k.
    pub(crate) fn ratio(&self, p1: Complex64, p2: Complex64) -> Complex64 {
        match *self {
            Shifted::Inverse { s, .. } => (1.0 - p1 * s) / (1.0 - p2 * s),
            Shifted::Direct { p, .. } => (p - p1) / (p - p2),
        }
    }
}

/// x(s) = x₀ + [A℘′ + B(℘ − k) + C] / [2(℘ − k)² − D] with
/// A = √R(x₀), B = R′(x₀)/2, C = R(x₀)R‴(x₀)/24, D = αR(x₀)/2,
/// k = R″(x₀)/24. Satisfies x(0) = x₀ and x′(0) = −√R(x₀).
#[derive(Debug, Clone)]
pub struct QuarticSolution {
    pub q: QuarticCoefficients,
    pub x0: f64,
    /// R(x₀)
    pub r0: f64,
    pub invariants: EllipticInvariants,
    pub lattice: LatticeData,
    pub(crate) k: f64,
    pub(crate) a: Complex64,
    pub(crate) b: f64,
    pub(crate) c: f64,
    pub(crate) d: f64,
}

impl QuarticSolution {
    pub fn new(q: QuarticCoefficients, x0: f64) -> Result<Self> {
        q.check_finite()?;
        if !x0.is_finite() {
            return Err(Error::InvalidInput(format!(
                "non-finite initial value {x0}"
            )));
        }
        let invariants = invariants_from_quartic(&q)?;
        Self::with_invariants(q, x0, invariants)
    }

    /// As [`QuarticSolution::new`] but on a lattice built from the given
    /// invariants instead of the quartic's own. Only useful for sensitivity
    /// checks: with foreign invariants x no longer solves x′² = R(x).
    pub fn with_invariants(
        q: QuarticCoefficients,
        x0: f64,
        invariants: EllipticInvariants,
    ) -> Result<Self> {
        q.check_finite()?;
        if !x0.is_finite() {
            return Err(Error::InvalidInput(format!(
                "non-finite initial value {x0}"
            )));
        }
        let lattice = lattice_from_invariants(invariants)?;
        let r0 = q.evaluate(x0);
        Ok(Self {
            q,
            x0,
            r0,
            invariants,
            lattice,
            k: q.second_derivative(x0) / 24.0,
            a: Complex64::new(r0, 0.0).sqrt(),
            b: q.derivative(x0) / 2.0,
            c: r0 * q.third_derivative(x0) / 24.0,
            d: q.alpha * r0 / 2.0,
        })
    }

    /// ℘″(x₀)/24, the shift of ℘ in the denominator.
    pub fn shift(&self) -> f64 {
        self.k
    }

    pub(crate) fn shifted(&self, s: Complex64) -> Shifted {
        let lat = &self.lattice;
        let nearest = lat.nearest_lattice_point(s);
        let u = s - nearest;
        let radius = NEAR_POLE * lat.min_period().min(1.0);
        if u.norm() < radius {
            return self.shifted_series(u);
        }
        let (p, dp) = lat.wp_cell(lat.reduce(s).offset);
        let ddp = 6.0 * p * p - self.invariants.g2 / 2.0;
        let pk = p - self.k;
        if pk.norm() >= 1.0 {
            let inv = 1.0 / pk;
            Shifted::Inverse {
                s: inv,
                ds: -dp * inv * inv,
                dds: -ddp * inv * inv + 2.0 * dp * dp * inv * inv * inv,
            }
        } else {
            Shifted::Direct { p: pk, dp, ddp }
        }
    }

    /// 1/(℘(u) − k) = u²/E(u) from the Laurent expansion of ℘ about 0.
    fn shifted_series(&self, u: Complex64) -> Shifted {
        let EllipticInvariants { g2, g3, .. } = self.invariants;
        // u²(℘ − k) = 1 − k u² + c₂u⁴ + c₃u⁶ + c₄u⁸
        let coeffs = [1.0, -self.k, g2 / 20.0, g3 / 28.0, g2 * g2 / 1200.0];
        let u2 = u * u;
        let mut e = Complex64::new(0.0, 0.0);
        let mut de = Complex64::new(0.0, 0.0);
        let mut dde = Complex64::new(0.0, 0.0);
        for (j, &cj) in coeffs.iter().enumerate() {
            let n = 2 * j as i32;
            e += cj * u.powi(n);
            if n >= 1 {
                de += cj * n as f64 * u.powi(n - 1);
            }
            if n >= 2 {
                dde += cj * (n * (n - 1)) as f64 * u.powi(n - 2);
            }
        }
        let (num, dnum, ddnum) = (u2, 2.0 * u, Complex64::new(2.0, 0.0));
        let s = num / e;
        let ds = (dnum * e - num * de) / (e * e);
        let dds = (ddnum * e - num * dde) / (e * e) - 2.0 * de * ds / e;
        Shifted::Inverse { s, ds, dds }
    }

    /// (x, dx/ds) at a complex argument.
    pub fn eval_complex(&self, s: Complex64) -> Result<(Complex64, Complex64)> {
        if !s.is_finite() {
            return Err(Error::InvalidInput(format!("non-finite argument {s}")));
        }
        let (a, b, c, d) = (self.a, self.b, self.c, self.d);
        let (n, dn, den, dden, scale) = match self.shifted(s) {
            Shifted::Inverse { s, ds, dds } => (
                -a * ds + b * s + c * s * s,
                -a * dds + b * ds + 2.0 * c * s * ds,
                2.0 - d * s * s,
                -2.0 * d * s * ds,
                2.0 + (d * s * s).norm(),
            ),
            Shifted::Direct { p, dp, ddp } => (
                a * dp + b * p + c,
                a * ddp + b * dp,
                2.0 * p * p - d,
                4.0 * p * dp,
                2.0 * p.norm_sqr() + d.abs(),
            ),
        };
        if den.norm() <= 1e-12 * scale {
            return Err(Error::Singularity(format!(
                "denominator {:e} vanishes at argument {s}",
                den.norm()
            )));
        }
        let x = self.x0 + n / den;
        let dx = (dn * den - n * dden) / (den * den);
        Ok((x, dx))
    }

    /// Real (x, dx/ds) on the real axis. Fails when the value is not real,
    /// which happens when R(x₀) < 0.
    pub fn eval(&self, s: f64) -> Result<(f64, f64)> {
        let (x, dx) = self.eval_complex(Complex64::new(s, 0.0))?;
        let tol = 1e-8 * (1.0 + x.norm() + dx.norm());
        if x.im.abs() > tol || dx.im.abs() > tol {
            return Err(Error::ConstraintViolation(format!(
                "solution is complex at {s}: {x}; R(x₀) = {} < 0?",
                self.r0
            )));
        }
        Ok((x.re, dx.re))
    }

    /// Real period 2ω of the underlying ℘ (∞ for solitary-like lattices).
    pub fn period(&self) -> f64 {
        self.lattice.real_period()
    }
}
