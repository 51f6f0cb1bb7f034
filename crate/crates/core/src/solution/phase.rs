//! φ(z) = φ₀ + c₁z − 2a∫₀^z h, in closed form through σ, ζ and a logarithm.
//!
//! With P = ℘ − k the integrand h − h₀ = (A℘′ + BP + C)/(2(P − p₁)(P − p₂)),
//! p₁,₂ = ±√(αR₁(h₀))/2, splits into a logarithmic derivative and partial
//! fractions 1/(℘ − ℘(v)), each integrated by
//! ∫dz/(℘ − ℘(v)) = [log σ(z−v)/σ(z+v) + 2zζ(v)]/℘′(v).
//! The logarithms are unwrapped along a walk in z; anchors over one period
//! make every evaluation a short walk.

use num_complex::Complex64;
use rayon::prelude::*;

use super::closed_form::QuarticSolution;
use super::HSolution;
use crate::error::{Error, Result};
use crate::quartic::QuarticCoefficients;

const ANCHORS_PER_PERIOD: usize = 512;
/// Largest accepted change of a logarithm's argument across one walk step.
const MAX_ARG_JUMP: f64 = 1.0;
const MAX_REFINE: u32 = 40;
/// Walk step when ℘ has no real period.
const APERIODIC_STEP: f64 = 0.01;

#[derive(Debug, Clone)]
struct SigmaTerm {
    v: Complex64,
    /// partial-fraction weight divided by ℘′(v)
    weight: Complex64,
    zeta_v: Complex64,
}

#[derive(Debug, Clone)]
pub struct PhiSolution {
    /// −(δ₁ + 2γ₁h₀ + β₁h₀² ∓ √…)/(2h₀); undefined at h₀ = 0.
    pub r1: Option<Complex64>,
    pub r2: Option<Complex64>,
    /// ℘(v₁) = r₃ = k + √(α₁R₁(h₀))/2
    pub r3: Complex64,
    /// ℘(v₂) = r₄ = k − √(α₁R₁(h₀))/2
    pub r4: Complex64,
    pub v1: Complex64,
    /// Absent when r₃ = r₄ (R₁(h₀) = 0).
    pub v2: Option<Complex64>,
    /// φ(0)
    pub const_term: f64,
    a: f64,
    c1: f64,
    h0: f64,
    core: QuarticSolution,
    p: (Complex64, Complex64),
    log_weight: Complex64,
    terms: Vec<SigmaTerm>,
    period: f64,
    step: f64,
    anchors: Vec<Vec<Complex64>>,
    f_at_zero: Complex64,
    per_period: Complex64,
}

fn wrap(x: f64) -> f64 {
    let tau = 2.0 * std::f64::consts::PI;
    x - tau * (x / tau).round()
}

fn printed_r12(q: &QuarticCoefficients, h0: f64) -> (Option<Complex64>, Option<Complex64>) {
    if h0 == 0.0 {
        return (None, None);
    }
    let QuarticCoefficients {
        alpha: al,
        beta: be,
        gamma: ga,
        delta: de,
        ..
    } = *q;
    let disc = be * be * h0.powi(4)
        + (6.0 * be * ga - 2.0 * al * de) * h0.powi(3)
        + (9.0 * ga * ga - 2.0 * be * de) * h0 * h0
        + 6.0 * ga * de * h0
        + de * de;
    let root = Complex64::new(disc, 0.0).sqrt();
    let base = de + 2.0 * ga * h0 + be * h0 * h0;
    let scale = -1.0 / (2.0 * h0);
    (Some((base - root) * scale), Some((base + root) * scale))
}

impl PhiSolution {
    pub fn new(hs: &HSolution) -> Result<Self> {
        let core = hs.core().clone();
        let lat = &core.lattice;
        let (a_coef, b, c, d, k) = (core.a, core.b, core.c, core.d, core.k);
        let term = |rho: Complex64, weight: Complex64| -> Result<SigmaTerm> {
            let v = lat.wp_inverse(rho)?;
            let (_, dp) = lat.wp_cell(lat.reduce(v).offset);
            if dp.norm() <= 1e-12 * (1.0 + rho.norm()).powf(1.5) {
                return Err(Error::Singularity(format!(
                    "℘′(v) vanishes at v = {v} (℘(v) = {rho} is a lattice root)"
                )));
            }
            let (_, zeta_v) = lat.sigma_zeta(v)?;
            Ok(SigmaTerm {
                v,
                weight: weight / dp,
                zeta_v,
            })
        };
        let (p, log_weight, terms, r3, r4) = if d != 0.0 {
            let p1 = Complex64::new(d / 2.0, 0.0).sqrt();
            let p2 = -p1;
            let w1 = (b * p1 + c) / (2.0 * (p1 - p2));
            let w2 = (b * p2 + c) / (2.0 * (p2 - p1));
            let (r3, r4) = (k + p1, k + p2);
            let t = vec![term(r3, w1)?, term(r4, w2)?];
            ((p1, p2), a_coef / (2.0 * (p1 - p2)), t, r3, r4)
        } else if a_coef.norm() == 0.0 {
            let r3 = Complex64::new(k, 0.0);
            let t = vec![term(r3, Complex64::new(b / 2.0, 0.0))?];
            ((r3, r3), Complex64::new(0.0, 0.0), t, r3, r3)
        } else {
            return Err(Error::InvalidInput(
                "phase closed form needs α₁ ≠ 0 (a ≠ 0)".into(),
            ));
        };
        let (r1, r2) = printed_r12(&hs.q1, hs.params.h0);
        let period = hs.period();
        let mut sol = Self {
            r1,
            r2,
            r3,
            r4,
            v1: terms[0].v,
            v2: terms.get(1).map(|t| t.v),
            const_term: hs.params.phi0,
            a: hs.params.a,
            c1: hs.params.c1,
            h0: hs.params.h0,
            core,
            p,
            log_weight,
            terms,
            period,
            step: if period.is_finite() {
                period / ANCHORS_PER_PERIOD as f64
            } else {
                APERIODIC_STEP
            },
            anchors: Vec::new(),
            f_at_zero: Complex64::new(0.0, 0.0),
            per_period: Complex64::new(0.0, 0.0),
        };
        let start = sol.principal_logs(0.0)?;
        sol.f_at_zero = sol.antiderivative(0.0, &start);
        sol.anchors.push(start);
        if period.is_finite() {
            for i in 1..=ANCHORS_PER_PERIOD {
                let prev = sol.anchors[i - 1].clone();
                let next = sol.walk((i - 1) as f64 * sol.step, &prev, i as f64 * sol.step)?;
                sol.anchors.push(next);
            }
            let end = &sol.anchors[ANCHORS_PER_PERIOD];
            sol.per_period = sol.antiderivative(period, end) - sol.f_at_zero;
        }
        Ok(sol)
    }

    fn principal_logs(&self, z: f64) -> Result<Vec<Complex64>> {
        let zc = Complex64::new(z, 0.0);
        let lat = &self.core.lattice;
        let mut out = Vec::with_capacity(self.terms.len() + 1);
        out.push(if self.log_weight.norm() == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            self.core.shifted(zc).ratio(self.p.0, self.p.1).ln()
        });
        for t in &self.terms {
            let (sm, _) = lat.sigma_zeta(zc - t.v)?;
            let (sp, _) = lat.sigma_zeta(zc + t.v)?;
            let q = sm / sp;
            if !(q.is_finite() && q.norm() > 0.0) {
                return Err(Error::Singularity(format!(
                    "σ quotient degenerate at z = {z} (v = {})",
                    t.v
                )));
            }
            out.push(q.ln());
        }
        Ok(out)
    }

    fn unwrap_onto(prev: &[Complex64], raw: &[Complex64]) -> (Vec<Complex64>, f64) {
        let mut worst = 0.0f64;
        let out = prev
            .iter()
            .zip(raw)
            .map(|(p, r)| {
                let dim = wrap(r.im - p.im);
                worst = worst.max(dim.abs());
                Complex64::new(r.re, p.im + dim)
            })
            .collect();
        (out, worst)
    }

    /// Continue unwrapped logarithms from (z0, logs) to z1.
    fn walk(&self, z0: f64, logs: &[Complex64], z1: f64) -> Result<Vec<Complex64>> {
        let mut z = z0;
        let mut cur = logs.to_vec();
        let n = ((z1 - z0).abs() / self.step).ceil().max(1.0) as usize;
        let h = (z1 - z0) / n as f64;
        for i in 1..=n {
            let target = if i == n { z1 } else { z0 + h * i as f64 };
            cur = self.refine(z, &cur, target, 0)?;
            z = target;
        }
        Ok(cur)
    }

    fn refine(&self, z0: f64, logs: &[Complex64], z1: f64, depth: u32) -> Result<Vec<Complex64>> {
        let raw = self.principal_logs(z1)?;
        let (next, jump) = Self::unwrap_onto(logs, &raw);
        if jump <= MAX_ARG_JUMP {
            return Ok(next);
        }
        if depth >= MAX_REFINE {
            return Err(Error::BranchTracking { z: z1 });
        }
        let mid = 0.5 * (z0 + z1);
        let half = self.refine(z0, logs, mid, depth + 1)?;
        self.refine(mid, &half, z1, depth + 1)
    }

    /// ∫(h − h₀) up to an additive constant, from unwrapped logarithms.
    fn antiderivative(&self, z: f64, logs: &[Complex64]) -> Complex64 {
        let mut f = self.log_weight * logs[0];
        for (t, l) in self.terms.iter().zip(&logs[1..]) {
            f += t.weight * (l + 2.0 * z * t.zeta_v);
        }
        f
    }

    /// ∫₀^z (h − h₀) dz, complex (its imaginary part is rounding noise).
    fn integral(&self, z: f64) -> Result<Complex64> {
        if !z.is_finite() {
            return Err(Error::InvalidInput(format!("non-finite z = {z}")));
        }
        if self.period.is_finite() {
            let m = (z / self.period).floor();
            let zr = z - m * self.period;
            let i = ((zr / self.step).floor() as usize).min(ANCHORS_PER_PERIOD - 1);
            let z_anchor = i as f64 * self.step;
            let logs = self.walk(z_anchor, &self.anchors[i], zr)?;
            Ok(self.antiderivative(zr, &logs) - self.f_at_zero + self.per_period * m)
        } else {
            let logs = self.walk(0.0, &self.anchors[0], z)?;
            Ok(self.antiderivative(z, &logs) - self.f_at_zero)
        }
    }

    /// Complex φ(z); the imaginary part measures the failure of reality.
    pub fn phi_complex(&self, z: f64) -> Result<Complex64> {
        let integral = self.integral(z)?;
        Ok(self.const_term + self.c1 * z - 2.0 * self.a * (self.h0 * z + integral))
    }

    pub fn phi_eval(&self, z: f64) -> Result<f64> {
        let phi = self.phi_complex(z)?;
        if phi.im.abs() > 1e-6 * (1.0 + phi.re.abs()) {
            return Err(Error::NumericFailure(format!("φ({z}) = {phi} is not real")));
        }
        Ok(phi.re)
    }

    pub fn phi_grid(&self, z_grid: &[f64]) -> Result<Vec<f64>> {
        z_grid.par_iter().map(|&z| self.phi_eval(z)).collect()
    }

    /// The change of φ over one period Lz (NaN without a real period).
    pub fn drift_per_period(&self) -> f64 {
        if self.period.is_finite() {
            -2.0 * self.a * (self.h0 * self.period + self.per_period.re) + self.c1 * self.period
        } else {
            f64::NAN
        }
    }
}
