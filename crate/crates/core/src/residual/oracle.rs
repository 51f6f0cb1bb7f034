//! Independent checks of h and φ: Dormand–Prince integration of
//! h_zz = R₁′(h)/2 with φ_z = c₁ − 2a·h alongside, and a quadrature of the
//! period integral.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quartic::{r1_coefficients, real_roots, QuarticCoefficients, SolutionParams};

const RTOL: f64 = 1e-10;
const ATOL: f64 = 1e-12;
const MAX_STEPS: usize = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleKind {
    HCurve,
    PhiCurve,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleCurve {
    pub kind: OracleKind,
    pub z: Vec<f64>,
    /// h or φ at each z
    pub value: Vec<f64>,
    /// Oscillation period of h from turning points; None if fewer than two
    /// were passed.
    pub period: Option<f64>,
    pub turning_points: Vec<f64>,
    pub steps: usize,
}

type State = [f64; 3];

struct System {
    q: QuarticCoefficients,
    a: f64,
    c1: f64,
}

impl System {
    /// (h, h_z, φ)′
    fn rhs(&self, y: &State) -> State {
        [
            y[1],
            self.q.derivative(y[0]) / 2.0,
            self.c1 - 2.0 * self.a * y[0],
        ]
    }

    /// One Dormand–Prince 5(4) step: (new state, error norm).
    fn step(&self, y: &State, h: f64) -> (State, f64) {
        const C: [[f64; 6]; 6] = [
            [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
            [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
            [
                19372.0 / 6561.0,
                -25360.0 / 2187.0,
                64448.0 / 6561.0,
                -212.0 / 729.0,
                0.0,
                0.0,
            ],
            [
                9017.0 / 3168.0,
                -355.0 / 33.0,
                46732.0 / 5247.0,
                49.0 / 176.0,
                -5103.0 / 18656.0,
                0.0,
            ],
            [
                35.0 / 384.0,
                0.0,
                500.0 / 1113.0,
                125.0 / 192.0,
                -2187.0 / 6784.0,
                11.0 / 84.0,
            ],
        ];
        const E: [f64; 7] = [
            71.0 / 57600.0,
            0.0,
            -71.0 / 16695.0,
            71.0 / 1920.0,
            -17253.0 / 339200.0,
            22.0 / 525.0,
            -1.0 / 40.0,
        ];
        let mut k = [[0.0; 3]; 7];
        k[0] = self.rhs(y);
        for s in 0..6 {
            let mut yi = *y;
            for (j, kj) in k.iter().enumerate().take(s + 1) {
                for d in 0..3 {
                    yi[d] += h * C[s][j] * kj[d];
                }
            }
            k[s + 1] = self.rhs(&yi);
            if s == 5 {
                // the last stage is the new state (FSAL)
                let mut err = 0.0f64;
                for d in 0..3 {
                    let e: f64 = (0..7).map(|j| E[j] * k[j][d]).sum::<f64>() * h;
                    let sc = ATOL + RTOL * y[d].abs().max(yi[d].abs());
                    err = err.max((e / sc).abs());
                }
                return (yi, err);
            }
        }
        unreachable!()
    }
}

/// Integrate from z = 0 through the ascending `z_grid` (all ≥ 0) with
/// h(0) = h₀, h_z(0) = −√R₁(h₀), φ(0) = φ₀.
pub fn ode_oracle(
    params: &SolutionParams,
    kind: OracleKind,
    z_grid: &[f64],
) -> Result<OracleCurve> {
    params.validate()?;
    if z_grid.iter().any(|z| !(z.is_finite() && *z >= 0.0))
        || z_grid.windows(2).any(|w| w[1] < w[0])
    {
        return Err(Error::InvalidInput(
            "oracle grid must be ascending and ≥ 0".into(),
        ));
    }
    let q = r1_coefficients(params);
    let sys = System {
        q,
        a: params.a,
        c1: params.c1,
    };
    let r0 = q.evaluate(params.h0);
    if r0 < -1e-12 * q.scale_at(params.h0) {
        return Err(Error::ConstraintViolation(format!("R₁(h₀) = {r0} < 0")));
    }
    let mut y: State = [params.h0, -r0.max(0.0).sqrt(), params.phi0];
    let mut z = 0.0;
    let mut h: f64 = 1e-3;
    let mut steps = 0;
    let mut turning = Vec::new();
    if y[1] == 0.0 && q.derivative(y[0]) != 0.0 {
        turning.push(0.0);
    }
    let mut value = Vec::with_capacity(z_grid.len());
    let pick = |y: &State| match kind {
        OracleKind::HCurve => y[0],
        OracleKind::PhiCurve => y[2],
    };
    for &target in z_grid {
        while z < target {
            if steps >= MAX_STEPS {
                return Err(Error::NumericFailure("oracle step budget exhausted".into()));
            }
            let hs = h.min(target - z);
            let (next, err) = sys.step(&y, hs);
            steps += 1;
            if !next.iter().all(|v| v.is_finite()) {
                return Err(Error::NumericFailure(format!("oracle diverged at z = {z}")));
            }
            if err <= 1.0 {
                if y[1] != 0.0 && next[1] != 0.0 && (y[1] > 0.0) != (next[1] > 0.0) {
                    turning.push(z + locate_turn(&sys, &y, hs));
                }
                y = next;
                z += hs;
            }
            let fac = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            let new_h = hs * fac;
            if err > 1.0 && new_h < 1e-14 * (1.0 + z.abs()) {
                return Err(Error::NumericFailure(format!("step underflow at z = {z}")));
            }
            if err <= 1.0 && hs < h {
                // a clipped step says nothing about the natural step size
                h = h.max(new_h);
            } else {
                h = new_h;
            }
        }
        value.push(pick(&y));
    }
    let period = match turning.len() {
        0 | 1 => None,
        2 => Some(2.0 * (turning[1] - turning[0])),
        n => {
            let spans: Vec<f64> = (0..n - 2).map(|i| turning[i + 2] - turning[i]).collect();
            Some(spans.iter().sum::<f64>() / spans.len() as f64)
        }
    };
    Ok(OracleCurve {
        kind,
        z: z_grid.to_vec(),
        value,
        period,
        turning_points: turning,
        steps,
    })
}

/// Offset s in (0, h) at which h_z vanishes, by bisection on single steps
/// from the left state.
fn locate_turn(sys: &System, y: &State, h: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, h);
    let s0 = y[1] > 0.0;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let (ym, _) = sys.step(y, mid);
        if (ym[1] > 0.0) == s0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Period 2∫ dh/√R₁(h) between the simple roots of R₁ enclosing h₀. With
/// h = m − r·cos θ the endpoint singularities cancel and the integrand is
/// smooth and even in θ, so the trapezoid rule converges geometrically.
pub fn quadrature_period(params: &SolutionParams) -> Result<f64> {
    params.validate()?;
    let q = r1_coefficients(params);
    let roots: Vec<f64> = real_roots(&q)?.iter().map(|r| r.value).collect();
    let h0 = params.h0;
    let lo = roots
        .iter()
        .copied()
        .filter(|&r| r <= h0 + 1e-12)
        .fold(f64::NEG_INFINITY, f64::max);
    let hi = roots
        .iter()
        .copied()
        .filter(|&r| r > h0 + 1e-12)
        .fold(f64::INFINITY, f64::min);
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "h₀ = {h0} is not enclosed by two real roots of R₁"
        )));
    }
    let (m, r) = (0.5 * (lo + hi), 0.5 * (hi - lo));
    // R₁(h) = (h − lo)(hi − h)·g(h)
    let g = |h: f64| q.evaluate(h) / ((h - lo) * (hi - h));
    let gm = |theta: f64| {
        let h = m - r * theta.cos();
        let den = (h - lo) * (hi - h);
        if den.abs() < 1e-10 * r * r {
            // endpoints: derivative of R₁ gives the limit of R₁/((h−lo)(hi−h))
            let root = if theta < 1.0 { lo } else { hi };
            q.derivative(root) / (if theta < 1.0 { hi - lo } else { lo - hi })
        } else {
            g(h)
        }
    };
    let n = 512;
    let mut sum = 0.0;
    for i in 0..=n {
        let theta = std::f64::consts::PI * i as f64 / n as f64;
        let w = if i == 0 || i == n { 0.5 } else { 1.0 };
        let gv = gm(theta);
        if gv <= 0.0 {
            return Err(Error::NumericFailure(format!(
                "R₁ changes sign inside [{lo}, {hi}]"
            )));
        }
        sum += w / gv.sqrt();
    }
    Ok(2.0 * std::f64::consts::PI / n as f64 * sum)
}
