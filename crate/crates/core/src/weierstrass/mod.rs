//! Weierstrass elliptic functions for real invariants.
//!
//! ℘, ℘′, ζ and σ are evaluated for complex arguments by reducing the
//! argument into the Voronoi cell of the period lattice, scaling it down
//! towards the origin, summing the Laurent series there and doubling back
//! up with the duplication formulas. Quasi-periodicity restores ζ and σ
//! outside the cell. Discriminant-zero lattices use the closed
//! hyperbolic/trigonometric forms instead, since the series route loses
//! accuracy as one period runs off to infinity.
//!
//! Half-periods come from Carlson's R_F, which also backs ℘⁻¹.

mod carlson;
mod cubic;

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quartic::QuarticCoefficients;

pub use carlson::carlson_rf;
pub use cubic::weierstrass_roots;

/// Relative threshold below which Δ is treated as exactly zero.
pub const DEGENERACY_TOL: f64 = 1e-12;

/// Default pole-proximity radius, in units of the shortest period.
pub const DEFAULT_POLE_EPSILON: f64 = 1e-8;

fn c64(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiscriminantClass {
    Positive,
    Negative,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipticInvariants {
    pub g2: f64,
    pub g3: f64,
    /// g₂³ − 27g₃²
    pub delta: f64,
}

impl EllipticInvariants {
    pub fn new(g2: f64, g3: f64) -> Result<Self> {
        if !(g2.is_finite() && g3.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite invariants g2={g2}, g3={g3}"
            )));
        }
        Ok(Self {
            g2,
            g3,
            delta: g2 * g2 * g2 - 27.0 * g3 * g3,
        })
    }

    pub fn class(&self) -> DiscriminantClass {
        if self.is_degenerate() {
            DiscriminantClass::Zero
        } else if self.delta > 0.0 {
            DiscriminantClass::Positive
        } else {
            DiscriminantClass::Negative
        }
    }

    /// |Δ| ≤ 1e−12·max(1, |g₂|³)
    pub fn is_degenerate(&self) -> bool {
        self.delta.abs() <= DEGENERACY_TOL * 1f64.max(self.g2.abs().powi(3))
    }
}

/// Invariants of the quartic αx⁴ + 4βx³ + 6γx² + 4δx + ε.
pub fn invariants_from_quartic(q: &QuarticCoefficients) -> Result<EllipticInvariants> {
    q.check_finite()?;
    let QuarticCoefficients {
        alpha: a,
        beta: b,
        gamma: c,
        delta: d,
        epsilon: e,
    } = *q;
    let g2 = a * e - 4.0 * b * d + 3.0 * c * c;
    let g3 = a * c * e + 2.0 * b * c * d - a * d * d - c * c * c - b * b * e;
    EllipticInvariants::new(g2, g3)
}

/// A half-period together with its quasi-period η = ζ(half-period).
#[derive(Debug, Clone, Copy)]
struct HalfPeriod {
    w: Complex64,
    eta: Complex64,
}

#[derive(Debug, Clone)]
enum Shape {
    /// Δ ≠ 0; reduced basis of half-periods with Im(w2/w1) > 0.
    General {
        nome: NomeSeries,
        basis: [HalfPeriod; 2],
    },
    /// Δ = 0: ℘ = c + 3c/sinh²(√(3c)·z), one finite period unless c = 0.
    Degenerate { c: f64, period: Option<HalfPeriod> },
}

/// Lattice data derived from real invariants.
///
/// `omega` is the real half-period (℘(ω) = e₁); it is `INFINITY` for
/// degenerate lattices whose real period diverges, in which case `eta` is
/// NaN. `omega_imag` is τ such that 2iτ is the shortest purely imaginary
/// period, again possibly infinite.
#[derive(Debug, Clone)]
pub struct LatticeData {
    pub invariants: EllipticInvariants,
    pub e_roots: [Complex64; 3],
    pub e1: f64,
    pub omega: f64,
    pub eta: f64,
    pub omega_imag: f64,
    pole_epsilon: f64,
    min_period: f64,
    shape: Shape,
}

/// Values of ℘, ℘′, ζ, σ at one point.
#[derive(Debug, Clone, Copy)]
struct Quad {
    p: Complex64,
    dp: Complex64,
    zeta: Complex64,
    sigma: Complex64,
}

/// Nome-series data for a lattice with reduced half-period basis (w₁, w₂),
/// w₁ the shorter, τ = w₂/w₁, q = e^{iπτ}, |q| ≤ e^{−π√3/2}.
#[derive(Debug, Clone)]
struct NomeSeries {
    w1: Complex64,
    k: Complex64,
    q2: Complex64,
    /// 1/(1 − q^{2n}) for n = 1..
    inv: Vec<Complex64>,
    /// q^{2n}, for the σ product
    q2n: Vec<Complex64>,
    eta1: Complex64,
}

impl NomeSeries {
    fn new(w1: Complex64, w2: Complex64) -> Self {
        let tau = w2 / w1;
        let q = (Complex64::new(0.0, PI) * tau).exp();
        let q2 = q * q;
        let mut inv = Vec::new();
        let mut q2n = Vec::new();
        let mut pw = q2;
        // terms decay at least like |q|ⁿ inside the strip
        while pw.norm() > 1e-40 && inv.len() < 400 {
            inv.push(1.0 / (1.0 - pw));
            q2n.push(pw);
            pw *= q2;
        }
        let e2: Complex64 = q2n
            .iter()
            .zip(&inv)
            .enumerate()
            .map(|(i, (p, d))| (i + 1) as f64 * p * d)
            .sum();
        let eta1 = PI * PI / (12.0 * w1) * (1.0 - 24.0 * e2);
        Self {
            w1,
            k: PI / (2.0 * w1),
            q2,
            inv,
            q2n,
            eta1,
        }
    }

    /// Valid for z = s·2w₁ + t·2w₂ with |t| ≤ ½.
    fn quad(&self, z: Complex64) -> Quad {
        let k = self.k;
        let v = k * z;
        let x = (Complex64::new(0.0, 2.0) * v).exp();
        let a = self.q2 * x;
        let b = self.q2 / x;
        let (mut an, mut bn) = (a, b);
        let mut sum_p = c64(0.0);
        let mut sum_dp = c64(0.0);
        let mut sum_z = c64(0.0);
        let mut prod = c64(1.0);
        let xinv = 1.0 / x;
        for (i, (d, p2n)) in self.inv.iter().zip(&self.q2n).enumerate() {
            let n = (i + 1) as f64;
            let cn = (an + bn) * 0.5 * d;
            let sn = (an - bn) / Complex64::new(0.0, 2.0) * d;
            sum_p += cn * n;
            sum_dp += sn * (n * n);
            sum_z += sn;
            prod *= (1.0 - p2n * x) * (1.0 - p2n * xinv) * d * d;
            if an.norm().max(bn.norm()) * n * n < 1e-20 * (1.0 + sum_p.norm()) && n > 2.0 {
                break;
            }
            an *= a;
            bn *= b;
        }
        let (sv, cv) = (v.sin(), v.cos());
        let csc2 = 1.0 / (sv * sv);
        let cot = cv / sv;
        Quad {
            p: -self.eta1 / self.w1 + k * k * csc2 - 8.0 * k * k * sum_p,
            dp: -2.0 * k * k * k * cot * csc2 + 16.0 * k * k * k * sum_dp,
            zeta: self.eta1 * z / self.w1 + k * cot + 4.0 * k * sum_z,
            sigma: (self.eta1 * z * z / (2.0 * self.w1)).exp() * sv / k * prod,
        }
    }
}

/// Closed forms for Δ = 0.
fn degenerate_quad(c: f64, z: Complex64) -> Quad {
    if c == 0.0 {
        return Quad {
            p: 1.0 / (z * z),
            dp: -2.0 / (z * z * z),
            zeta: 1.0 / z,
            sigma: z,
        };
    }
    let s = c64(3.0 * c).sqrt();
    let u = s * z;
    if u.re < 0.0 {
        // ℘ even; ℘′, ζ, σ odd
        let q = degenerate_quad(c, -z);
        return Quad {
            p: q.p,
            dp: -q.dp,
            zeta: -q.zeta,
            sigma: -q.sigma,
        };
    }
    let gauss = (-c * z * z / 2.0).exp();
    if u.norm() < 0.5 {
        let (sh, ch) = (u.sinh(), u.cosh());
        Quad {
            p: c + s * s / (sh * sh),
            dp: -2.0 * s * s * s * ch / (sh * sh * sh),
            zeta: -c * z + s * ch / sh,
            sigma: gauss * sh / s,
        }
    } else {
        // Re u ≥ 0: work with e^(−2u) to stay finite
        let q = (-2.0 * u).exp();
        let one = c64(1.0);
        let coth = (one + q) / (one - q);
        let csch2 = 4.0 * q / ((one - q) * (one - q));
        Quad {
            p: c + s * s * csch2,
            dp: -2.0 * s * s * s * coth * csch2,
            zeta: -c * z + s * coth,
            sigma: gauss * (one - q) * u.exp() / (2.0 * s),
        }
    }
}

/// Lagrange–Gauss reduction of a lattice basis given by two periods.
fn reduce_basis(mut b1: Complex64, mut b2: Complex64) -> (Complex64, Complex64) {
    for _ in 0..200 {
        if b1.norm_sqr() > b2.norm_sqr() {
            std::mem::swap(&mut b1, &mut b2);
        }
        let mu = ((b2 * b1.conj()).re / b1.norm_sqr()).round();
        if mu == 0.0 {
            break;
        }
        b2 -= b1 * mu;
    }
    if b1.norm_sqr() > b2.norm_sqr() {
        std::mem::swap(&mut b1, &mut b2);
    }
    if (b2 / b1).im < 0.0 {
        b2 = -b2;
    }
    (b1, b2)
}

/// Build lattice data (roots, half-periods, quasi-periods) from invariants.
pub fn lattice_from_invariants(inv: EllipticInvariants) -> Result<LatticeData> {
    let EllipticInvariants { g2, g3, .. } = inv;
    if inv.is_degenerate() {
        return Ok(degenerate_lattice(inv));
    }
    let roots = weierstrass_roots(g2, g3);
    let (omega, tau) = match inv.class() {
        DiscriminantClass::Positive => {
            let (e1, e2, e3) = (roots[0], roots[1], roots[2]);
            (
                carlson_rf(c64(0.0), e1 - e2, e1 - e3)?.re,
                carlson_rf(c64(0.0), e2 - e3, e1 - e3)?.re,
            )
        }
        _ => {
            let real =
                roots.iter().copied().find(|r| r.im == 0.0).ok_or_else(|| {
                    Error::Internal("no real root of the Weierstrass cubic".into())
                })?;
            let pair: Vec<Complex64> = roots.iter().copied().filter(|r| r.im != 0.0).collect();
            (
                carlson_rf(c64(0.0), real - pair[0], real - pair[1])?.re,
                carlson_rf(c64(0.0), pair[0] - real, pair[1] - real)?.re,
            )
        }
    };
    if !(omega.is_finite() && omega > 0.0 && tau.is_finite() && tau > 0.0) {
        return Err(Error::Internal(format!(
            "half-periods not finite/positive: omega={omega}, tau={tau}"
        )));
    }
    let second = match inv.class() {
        DiscriminantClass::Positive => Complex64::new(0.0, 2.0 * tau),
        _ => Complex64::new(omega, tau),
    };
    let (b1, b2) = reduce_basis(c64(2.0 * omega), second);
    let min_period = b1.norm();
    let (w1, w2) = (b1 / 2.0, b2 / 2.0);
    let nome = NomeSeries::new(w1, w2);
    // Legendre: η₁w₂ − η₂w₁ = iπ/2
    let eta2 = (nome.eta1 * w2 - Complex64::new(0.0, PI / 2.0)) / w1;
    let basis = [
        HalfPeriod {
            w: w1,
            eta: nome.eta1,
        },
        HalfPeriod { w: w2, eta: eta2 },
    ];
    let e1 = roots
        .iter()
        .filter(|r| r.im == 0.0)
        .map(|r| r.re)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut lat = LatticeData {
        invariants: inv,
        e_roots: roots,
        e1,
        omega,
        eta: 0.0,
        omega_imag: tau,
        pole_epsilon: DEFAULT_POLE_EPSILON,
        min_period,
        shape: Shape::General { nome, basis },
    };
    lat.eta = lat.zeta_unchecked(c64(omega)).re;
    Ok(lat)
}

fn degenerate_lattice(inv: EllipticInvariants) -> LatticeData {
    let EllipticInvariants { g2, g3, .. } = inv;
    // g₂ = 12c², g₃ = −8c³
    let c = if g2.abs() <= f64::EPSILON && g3.abs() <= f64::EPSILON {
        0.0
    } else {
        -1.5 * g3 / g2
    };
    let mut roots = [c64(c), c64(c), c64(-2.0 * c)];
    roots.sort_by(|a, b| b.re.partial_cmp(&a.re).unwrap());
    let (omega, tau, period) = if c > 0.0 {
        let tau = PI / (2.0 * (3.0 * c).sqrt());
        let w = Complex64::new(0.0, tau);
        (
            f64::INFINITY,
            tau,
            Some(HalfPeriod {
                w,
                eta: degenerate_quad(c, w).zeta,
            }),
        )
    } else if c < 0.0 {
        let omega = PI / (2.0 * (-3.0 * c).sqrt());
        let w = c64(omega);
        (
            omega,
            f64::INFINITY,
            Some(HalfPeriod {
                w,
                eta: degenerate_quad(c, w).zeta,
            }),
        )
    } else {
        (f64::INFINITY, f64::INFINITY, None)
    };
    let eta = if omega.is_finite() {
        degenerate_quad(c, c64(omega)).zeta.re
    } else {
        f64::NAN
    };
    let min_period = period.map(|h| 2.0 * h.w.norm()).unwrap_or(f64::INFINITY);
    LatticeData {
        invariants: inv,
        e_roots: roots,
        e1: c.max(-2.0 * c),
        omega,
        eta,
        omega_imag: tau,
        pole_epsilon: DEFAULT_POLE_EPSILON,
        min_period,
        shape: Shape::Degenerate { c, period },
    }
}

/// Result of reducing an argument modulo the period lattice:
/// `z = offset + 2m·w₁ + 2n·w₂` for the lattice's reduced basis.
#[derive(Debug, Clone, Copy)]
pub struct Reduced {
    pub offset: Complex64,
    pub m: i64,
    pub n: i64,
}

impl LatticeData {
    pub fn with_pole_epsilon(mut self, eps: f64) -> Self {
        self.pole_epsilon = eps;
        self
    }

    pub fn pole_epsilon(&self) -> f64 {
        self.pole_epsilon
    }

    /// Length of the shortest non-zero period (∞ when there is none).
    pub fn min_period(&self) -> f64 {
        self.min_period
    }

    pub fn is_degenerate(&self) -> bool {
        matches!(self.shape, Shape::Degenerate { .. })
    }

    /// Real period 2ω.
    pub fn real_period(&self) -> f64 {
        2.0 * self.omega
    }

    /// The reduced basis of half-periods (w₁, w₂) with Im(w₂/w₁) > 0 and
    /// their quasi-periods (η₁, η₂). Degenerate lattices return at most one.
    pub fn basis(&self) -> Vec<(Complex64, Complex64)> {
        match &self.shape {
            Shape::General { basis, .. } => basis.iter().map(|h| (h.w, h.eta)).collect(),
            Shape::Degenerate { period, .. } => period.iter().map(|h| (h.w, h.eta)).collect(),
        }
    }

    /// Reduce into the centred period parallelogram: the offset has
    /// coordinates in [−½, ½] along both basis periods.
    pub fn reduce(&self, z: Complex64) -> Reduced {
        match &self.shape {
            Shape::General { basis, .. } => {
                let (b1, b2) = (basis[0].w * 2.0, basis[1].w * 2.0);
                let det = b1.re * b2.im - b2.re * b1.im;
                let x = (z.re * b2.im - z.im * b2.re) / det;
                let y = (b1.re * z.im - b1.im * z.re) / det;
                let (m, n) = (x.round() as i64, y.round() as i64);
                Reduced {
                    offset: z - b1 * m as f64 - b2 * n as f64,
                    m,
                    n,
                }
            }
            Shape::Degenerate {
                period: Some(h), ..
            } => {
                let b = h.w * 2.0;
                let m = ((z * b.conj()).re / b.norm_sqr()).round() as i64;
                Reduced {
                    offset: z - b * m as f64,
                    m,
                    n: 0,
                }
            }
            Shape::Degenerate { period: None, .. } => Reduced {
                offset: z,
                m: 0,
                n: 0,
            },
        }
    }

    /// ℘, ℘′, ζ, σ at a point already inside the fundamental cell.
    fn cell(&self, z: Complex64) -> Quad {
        match &self.shape {
            Shape::General { nome, .. } => nome.quad(z),
            Shape::Degenerate { c, .. } => degenerate_quad(*c, z),
        }
    }

    /// ℘ and ℘′ at a reduced offset, without the pole-proximity check.
    /// Infinite at the origin.
    pub fn wp_cell(&self, offset: Complex64) -> (Complex64, Complex64) {
        let q = self.cell(offset);
        (q.p, q.dp)
    }

    fn pole_radius(&self) -> f64 {
        if self.min_period.is_finite() {
            self.pole_epsilon * self.min_period
        } else {
            self.pole_epsilon
        }
    }

    /// Sum 2Σ(count·η) and the σ factor for the lattice shift (m, n).
    fn shift(&self, red: &Reduced) -> (Complex64, Complex64) {
        let pairs: Vec<(Complex64, Complex64)> = self.basis();
        let mut eta_sum = c64(0.0);
        let mut half_shift = c64(0.0);
        for (h, k) in pairs.iter().zip([red.m, red.n]) {
            eta_sum += h.1 * (2.0 * k as f64);
            half_shift += h.0 * k as f64;
        }
        let sign = if red.m % 2 == 0 && red.n % 2 == 0 {
            1.0
        } else {
            -1.0
        };
        let factor = sign * (eta_sum * (red.offset + half_shift)).exp();
        (eta_sum, factor)
    }

    fn zeta_unchecked(&self, z: Complex64) -> Complex64 {
        let red = self.reduce(z);
        let q = self.cell(red.offset);
        q.zeta + self.shift(&red).0
    }

    /// The lattice point closest to z (the origin when there is no lattice).
    pub fn nearest_lattice_point(&self, z: Complex64) -> Complex64 {
        let red = self.reduce(z);
        let base = z - red.offset;
        let periods: Vec<Complex64> = self.basis().iter().map(|h| h.0 * 2.0).collect();
        let mut best = base;
        match periods.as_slice() {
            [b1, b2] => {
                for dm in -1..=1 {
                    for dn in -1..=1 {
                        let cand = base + b1 * dm as f64 + b2 * dn as f64;
                        if (z - cand).norm_sqr() < (z - best).norm_sqr() {
                            best = cand;
                        }
                    }
                }
            }
            [b] => {
                for d in [-1.0, 1.0] {
                    let cand = base + b * d;
                    if (z - cand).norm_sqr() < (z - best).norm_sqr() {
                        best = cand;
                    }
                }
            }
            _ => {}
        }
        best
    }

    pub fn wp(&self, z: Complex64) -> Result<(Complex64, Complex64)> {
        if !z.is_finite() {
            return Err(Error::InvalidInput(format!("non-finite argument {z}")));
        }
        let nearest = self.nearest_lattice_point(z);
        if (z - nearest).norm() <= self.pole_radius() {
            return Err(Error::PoleProximity { nearest });
        }
        Ok(self.wp_cell(self.reduce(z).offset))
    }

    /// (σ, ζ). At an exact lattice point σ = 0 and ζ is infinite.
    pub fn sigma_zeta(&self, z: Complex64) -> Result<(Complex64, Complex64)> {
        if !z.is_finite() {
            return Err(Error::InvalidInput(format!("non-finite argument {z}")));
        }
        let red = self.reduce(z);
        if red.offset.norm() == 0.0 {
            return Ok((c64(0.0), c64(f64::INFINITY)));
        }
        let q = self.cell(red.offset);
        let (eta_sum, factor) = self.shift(&red);
        Ok((q.sigma * factor, q.zeta + eta_sum))
    }

    /// Principal ℘⁻¹(w): Carlson's R_F(w−e₁, w−e₂, w−e₃), Newton-polished
    /// against ℘, sign-normalised to Re v ≥ 0. Not reduced modulo the
    /// lattice, so real w ≥ e₁ maps into (0, ω].
    pub fn wp_inverse(&self, w: Complex64) -> Result<Complex64> {
        if !w.is_finite() {
            return Err(Error::InvalidInput(format!("non-finite ℘ value {w}")));
        }
        let [e1, e2, e3] = self.e_roots;
        let mut v = carlson_rf(w - e1, w - e2, w - e3).map_err(|e| {
            Error::NumericFailure(format!("wp_inverse({w}): R_F start failed: {e}"))
        })?;
        let tol = 1e-14 * 1f64.max(w.norm());
        for _ in 0..30 {
            let red = self.reduce(v);
            if red.offset.norm() == 0.0 {
                break;
            }
            let (p, dp) = self.wp_cell(red.offset);
            let f = p - w;
            let resid = f.norm();
            if resid <= tol {
                break;
            }
            // near a half-period ℘′ → 0 and Newton is ill-conditioned
            if dp.norm() <= 1e-10 * (1.0 + p.norm().powf(1.5)) {
                break;
            }
            let next = v - f / dp;
            let rn = self.reduce(next);
            let fn_ = (self.wp_cell(rn.offset).0 - w).norm();
            if !(fn_ < resid) {
                break;
            }
            v = next;
        }
        let mut out = v;
        if out.re < 0.0 || (out.re == 0.0 && out.im < 0.0) {
            out = -out;
        }
        let check = (self.wp_cell(self.reduce(out).offset).0 - w).norm();
        if !(check <= 1e-9 * 1f64.max(w.norm())) {
            return Err(Error::NumericFailure(format!(
                "wp_inverse({w}) did not converge: |℘(v) − w| = {check:e} at v = {out}"
            )));
        }
        Ok(out)
    }
}

pub fn wp(z: Complex64, lat: &LatticeData) -> Result<(Complex64, Complex64)> {
    lat.wp(z)
}

pub fn sigma_zeta(z: Complex64, lat: &LatticeData) -> Result<(Complex64, Complex64)> {
    lat.sigma_zeta(z)
}

pub fn wp_inverse(w: Complex64, lat: &LatticeData) -> Result<Complex64> {
    lat.wp_inverse(w)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lat(g2: f64, g3: f64) -> LatticeData {
        lattice_from_invariants(EllipticInvariants::new(g2, g3).unwrap()).unwrap()
    }

    fn ode_defect(l: &LatticeData, z: Complex64) -> f64 {
        let (p, dp) = l.wp(z).unwrap();
        let EllipticInvariants { g2, g3, .. } = l.invariants;
        (dp * dp - (p * p * p * 4.0 - p * g2 - g3)).norm() / (1.0 + p.norm().powi(3))
    }

    #[test]
    fn quartic_invariants_trivial_and_appendix() {
        let q = QuarticCoefficients::new(0.0, 0.0, 1.0, 0.0, 0.0);
        let inv = invariants_from_quartic(&q).unwrap();
        assert_eq!((inv.g2, inv.g3), (3.0, -1.0));

        let q = QuarticCoefficients::new(-16.0, 8.0, -1.6, 0.26, 0.0);
        let inv = invariants_from_quartic(&q).unwrap();
        assert!((inv.g2 + 0.64).abs() < 1e-13);
        assert!((inv.g3 + 1.4784).abs() < 1e-13);
        assert_eq!(inv.class(), DiscriminantClass::Negative);
    }

    #[test]
    fn quartic_invariants_without_cubic_term() {
        let (a, c, d, e) = (-0.5, 0.3, 0.2, 0.8);
        let inv = invariants_from_quartic(&QuarticCoefficients::new(a, 0.0, c, d, e)).unwrap();
        assert!((inv.g2 - (a * e + 3.0 * c * c)).abs() < 1e-15);
        assert!((inv.g3 - (a * c * e - a * d * d - c * c * c)).abs() < 1e-15);
    }

    #[test]
    fn non_finite_rejected() {
        assert!(EllipticInvariants::new(f64::NAN, 1.0).is_err());
        let q = QuarticCoefficients::new(1.0, f64::INFINITY, 0.0, 0.0, 0.0);
        assert!(invariants_from_quartic(&q).is_err());
    }

    /// ∫₁^∞ dt/√(4t³−4t): t = 1/x² gives ∫₀¹ dx/√(1−x⁴), then x = sin θ
    /// gives ∫₀^{π/2} dθ/√(1+sin²θ), smooth, by composite Simpson.
    fn lemniscatic_oracle() -> f64 {
        let n = 2000;
        let h = PI / 2.0 / n as f64;
        let f = |t: f64| 1.0 / (1.0 + t.sin().powi(2)).sqrt();
        let mut s = f(0.0) + f(PI / 2.0);
        for i in 1..n {
            s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    #[test]
    fn lemniscatic_half_period() {
        let l = lat(4.0, 0.0);
        assert!((l.e1 - 1.0).abs() < 1e-14);
        assert!((l.omega - lemniscatic_oracle()).abs() < 1e-13);
        assert!((l.omega - 1.311_028_777_146_059_9).abs() < 1e-13);
        assert!((l.omega_imag - l.omega).abs() < 1e-13);
        let (p, _) = l.wp(c64(l.omega)).unwrap();
        assert!((p.re - l.e1).abs() < 1e-10);
    }

    #[test]
    fn degenerate_double_root() {
        let l = lat(12.0, -8.0);
        assert!(l.is_degenerate());
        assert!(l.omega.is_infinite());
        assert!((l.e1 - 1.0).abs() < 1e-15);
        let mut roots: Vec<f64> = l.e_roots.iter().map(|r| r.re).collect();
        roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(roots, vec![-2.0, 1.0, 1.0]);
        for i in 1..40 {
            let z = 0.05 * i as f64;
            let (p, _) = l.wp(c64(z)).unwrap();
            let exact = 1.0 + 3.0 / (3f64.sqrt() * z).sinh().powi(2);
            assert!((p.re - exact).abs() <= 1e-9 * exact.abs().max(1.0), "{z}");
        }
    }

    fn laurent_coefficients(g2: f64, g3: f64) -> Vec<f64> {
        // c[k] multiplies z^(2k−2); c[0], c[1] unused
        let mut c = vec![0.0; 42];
        c[2] = g2 / 20.0;
        c[3] = g3 / 28.0;
        for k in 4..c.len() {
            let s: f64 = (2..=k - 2).map(|m| c[m] * c[k - m]).sum();
            c[k] = 3.0 * s / (((2 * k + 1) * (k - 3)) as f64);
        }
        c
    }

    fn series_quad(laurent: &[f64], z: Complex64) -> Quad {
        let z2 = z * z;
        let mut pw = Complex64::new(1.0, 0.0); // z2^(k−2)
        let mut p = 1.0 / z2;
        let mut dp = -2.0 / (z2 * z);
        let mut zeta = 1.0 / z;
        let mut log_sigma = Complex64::new(0.0, 0.0);
        let mut small = 0;
        for (k, &ck) in laurent.iter().enumerate().skip(2) {
            let kf = k as f64;
            let t_dp = pw * z * (ck * (2.0 * kf - 2.0));
            let t_p = pw * z2 * ck;
            p += t_p;
            dp += t_dp;
            zeta -= t_p * z / (2.0 * kf - 1.0);
            log_sigma -= t_p * z2 / (2.0 * kf * (2.0 * kf - 1.0));
            pw *= z2;
            // odd-indexed coefficients vanish when g₃ = 0, so wait for two
            if t_p.norm() <= 1e-18 * p.norm() {
                small += 1;
                if small == 2 {
                    break;
                }
            } else {
                small = 0;
            }
        }
        Quad {
            p,
            dp,
            zeta,
            sigma: z * log_sigma.exp(),
        }
    }

    #[test]
    fn laurent_series_agrees_near_origin() {
        for (g2, g3) in [(4.0, 0.0), (-0.64, -1.4784), (7.0, 3.0), (2.0, -5.0)] {
            let l = lat(g2, g3);
            let c = laurent_coefficients(g2, g3);
            for i in 1..10 {
                let z = Complex64::from_polar(0.02 * l.min_period() * i as f64, 0.4 * i as f64);
                let a = series_quad(&c, z);
                let b = l.cell(z);
                for (x, y) in [
                    (a.p, b.p),
                    (a.dp, b.dp),
                    (a.zeta, b.zeta),
                    (a.sigma, b.sigma),
                ] {
                    assert!(
                        (x - y).norm() <= 1e-11 * (1.0 + x.norm()),
                        "{g2} {g3} {z}: {x} {y}"
                    );
                }
            }
        }
    }

    #[test]
    fn laurent_leading_term() {
        for (g2, g3) in [(4.0, 0.0), (-0.64, -1.4784), (12.0, -8.0)] {
            let l = lat(g2, g3);
            let z = Complex64::from_polar(1e-3, 0.3);
            let (p, _) = l.wp(z).unwrap();
            assert!((p * z * z - 1.0).norm() <= 1e-6);
        }
    }

    #[test]
    fn differential_equation_rectangular_and_rhombic() {
        for (g2, g3) in [
            (4.0, 0.0),
            (-0.64, -1.4784),
            (7.0, 3.0),
            (2.0, -5.0),
            (58.88, -1.4784),
        ] {
            let l = lat(g2, g3);
            for i in 1..40 {
                let z = Complex64::new(0.05 * l.omega * i as f64, 0.013 * i as f64);
                assert!(ode_defect(&l, z) < 1e-11, "{g2} {g3} {z}");
            }
        }
    }

    #[test]
    fn periodicity_along_both_periods() {
        for (g2, g3) in [(4.0, 0.0), (-0.64, -1.4784), (7.0, 3.0)] {
            let l = lat(g2, g3);
            let basis = l.basis();
            for i in 1..20 {
                let z = Complex64::new(0.1 * i as f64, -0.05 * i as f64);
                let (p0, d0) = l.wp(z).unwrap();
                for (w, _) in &basis {
                    let (p1, d1) = l.wp(z + w * 2.0).unwrap();
                    assert!((p1 - p0).norm() < 1e-8 * (1.0 + p0.norm()));
                    assert!((d1 - d0).norm() < 1e-8 * (1.0 + d0.norm()));
                }
                let (p2, _) = l.wp(z + c64(2.0 * l.omega)).unwrap();
                assert!((p2 - p0).norm() < 1e-8 * (1.0 + p0.norm()));
                let (p3, _) = l.wp(z + Complex64::new(0.0, 2.0 * l.omega_imag)).unwrap();
                assert!((p3 - p0).norm() < 1e-8 * (1.0 + p0.norm()));
            }
        }
    }

    #[test]
    fn legendre_relation() {
        for (g2, g3) in [(4.0, 0.0), (-0.64, -1.4784), (7.0, 3.0), (1.0, 2.0)] {
            let l = lat(g2, g3);
            let b = l.basis();
            let ((w1, e1), (w2, e2)) = (b[0], b[1]);
            let lhs = e1 * w2 - e2 * w1;
            assert!(
                (lhs - Complex64::new(0.0, PI / 2.0)).norm() < 1e-11,
                "{g2} {g3} {lhs}"
            );
        }
    }

    #[test]
    fn zeta_and_sigma_small_argument_and_parity() {
        let l = lat(-0.64, -1.4784);
        let z = Complex64::from_polar(1e-4, 1.1);
        let (s, zeta) = l.sigma_zeta(z).unwrap();
        assert!((s / z - 1.0).norm() <= 1e-6);
        assert!((zeta * z - 1.0).norm() <= 1e-6);
        for i in 1..10 {
            let z = Complex64::new(0.37 * i as f64, 0.11 * i as f64);
            let (s1, z1) = l.sigma_zeta(z).unwrap();
            let (s2, z2) = l.sigma_zeta(-z).unwrap();
            assert!((s1 + s2).norm() <= 1e-13 * s1.norm().max(1.0));
            assert!((z1 + z2).norm() <= 1e-13 * z1.norm().max(1.0));
        }
    }

    #[test]
    fn zeta_quasi_periodicity() {
        for (g2, g3) in [(4.0, 0.0), (-0.64, -1.4784)] {
            let l = lat(g2, g3);
            for i in 1..15 {
                let z = Complex64::new(0.21 * i as f64, 0.07);
                let (_, a) = l.sigma_zeta(z).unwrap();
                let (_, b) = l.sigma_zeta(z + c64(2.0 * l.omega)).unwrap();
                assert!((b - a - 2.0 * l.eta).norm() < 1e-8, "{z}");
            }
        }
    }

    #[test]
    fn derivative_identities_by_central_difference() {
        let l = lat(-0.64, -1.4784);
        let h = 1e-5;
        for i in 1..12 {
            let z = Complex64::new(0.3 * i as f64, 0.2);
            let (sp, zp) = l.sigma_zeta(z + h).unwrap();
            let (sm, zm) = l.sigma_zeta(z - h).unwrap();
            let (s0, z0) = l.sigma_zeta(z).unwrap();
            let (p, _) = l.wp(z).unwrap();
            let dzeta = (zp - zm) / (2.0 * h);
            let dsigma = (sp - sm) / (2.0 * h);
            assert!((dzeta + p).norm() <= 1e-6 * (1.0 + p.norm()));
            assert!((dsigma / s0 - z0).norm() <= 1e-6 * (1.0 + z0.norm()));
        }
    }

    #[test]
    fn pole_proximity_reports_lattice_point() {
        let l = lat(4.0, 0.0);
        let err = l.wp(c64(2.0 * l.omega + 1e-12)).unwrap_err();
        match err {
            Error::PoleProximity { nearest } => {
                assert!((nearest - c64(2.0 * l.omega)).norm() < 1e-12)
            }
            other => panic!("unexpected {other:?}"),
        }
        let l = l.with_pole_epsilon(1e-3);
        assert!(l.wp(c64(1e-4)).is_err());
    }

    #[test]
    fn inverse_round_trips() {
        for (g2, g3) in [(4.0, 0.0), (-0.64, -1.4784), (7.0, 3.0), (12.0, -8.0)] {
            let l = lat(g2, g3);
            if l.omega.is_finite() {
                let v = l.wp_inverse(c64(l.e1)).unwrap();
                assert!((v - c64(l.omega)).norm() < 1e-9, "{g2} {g3} {v}");
                let target = c64(0.7 * l.omega);
                let w = l.wp(target).unwrap().0;
                let v = l.wp_inverse(w).unwrap();
                assert!((v - target).norm() < 1e-9, "{v}");
            }
            for w in [
                Complex64::new(-0.8, 0.0),
                Complex64::new(0.3, 1.7),
                c64(5.0),
            ] {
                let v = l.wp_inverse(w).unwrap();
                let back = l.wp(v).unwrap().0;
                assert!(
                    (back - w).norm() <= 1e-9 * w.norm().max(1.0),
                    "{g2} {g3} {w} {back}"
                );
            }
        }
    }
}
