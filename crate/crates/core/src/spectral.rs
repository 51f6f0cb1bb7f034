//! Split-step Fourier propagation of iΨ_z + Ψ_tt + aΨ|Ψ|² = 0 on a periodic
//! t window.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solution::SampledField;

/// Amplitude growth over the initial maximum treated as blow-up.
const BLOWUP_FACTOR: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralConfig {
    /// t-domain width (periodic)
    pub window: f64,
    pub n_modes: usize,
    pub dz: f64,
    pub z_span: f64,
    /// stored z rows, including both ends
    pub snapshots: usize,
}

impl SpectralConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.window.is_finite() && self.window > 0.0) {
            return Err(Error::InvalidInput(format!(
                "window {} must be > 0",
                self.window
            )));
        }
        if self.n_modes < 64 || !self.n_modes.is_power_of_two() {
            return Err(Error::InvalidInput(format!(
                "n_modes {} must be a power of two ≥ 64",
                self.n_modes
            )));
        }
        if !(self.dz.is_finite() && self.dz > 0.0) {
            return Err(Error::InvalidInput(format!("dz {} must be > 0", self.dz)));
        }
        if !(self.z_span.is_finite() && self.z_span >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "z_span {} must be ≥ 0",
                self.z_span
            )));
        }
        if self.snapshots < 2 {
            return Err(Error::InvalidInput("snapshots must be ≥ 2".into()));
        }
        Ok(())
    }

    /// t sample points j·window/n_modes.
    pub fn t_grid(&self) -> Vec<f64> {
        (0..self.n_modes)
            .map(|j| self.window * j as f64 / self.n_modes as f64)
            .collect()
    }

    /// Angular wavenumbers in FFT order.
    fn wavenumbers(&self) -> Vec<f64> {
        let n = self.n_modes as i64;
        let base = 2.0 * std::f64::consts::PI / self.window;
        (0..n)
            .map(|j| base * if j <= n / 2 { j } else { j - n } as f64)
            .collect()
    }
}

struct Stepper {
    a: f64,
    h: f64,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    linear: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl Stepper {
    fn new(cfg: &SpectralConfig, a: f64, h: f64) -> Self {
        let mut planner = FftPlanner::new();
        let n = cfg.n_modes;
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let scale = 1.0 / n as f64;
        let linear = cfg
            .wavenumbers()
            .iter()
            .map(|k| Complex64::from_polar(scale, -k * k * h))
            .collect();
        let scratch = vec![
            Complex64::new(0.0, 0.0);
            forward
                .get_inplace_scratch_len()
                .max(inverse.get_inplace_scratch_len())
        ];
        Self {
            a,
            h,
            forward,
            inverse,
            linear,
            scratch,
        }
    }

    fn nonlinear(&self, u: &mut [Complex64], h: f64) {
        for v in u.iter_mut() {
            *v *= Complex64::from_polar(1.0, self.a * v.norm_sqr() * h);
        }
    }

    /// N(h/2)·L(h)·N(h/2)
    fn step(&mut self, u: &mut [Complex64]) {
        self.nonlinear(u, 0.5 * self.h);
        self.forward.process_with_scratch(u, &mut self.scratch);
        for (v, l) in u.iter_mut().zip(&self.linear) {
            *v *= l;
        }
        self.inverse.process_with_scratch(u, &mut self.scratch);
        self.nonlinear(u, 0.5 * self.h);
    }
}

fn check_line(initial: &[Complex64], cfg: &SpectralConfig) -> Result<f64> {
    cfg.validate()?;
    if initial.len() != cfg.n_modes {
        return Err(Error::InvalidInput(format!(
            "initial line has {} points, expected {}",
            initial.len(),
            cfg.n_modes
        )));
    }
    if initial.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("initial line is not finite".into()));
    }
    Ok(initial.iter().map(|v| v.norm()).fold(0.0, f64::max))
}

/// Propagate over `cfg.z_span` (backwards when `forward` is false) and
/// return the final line. The step is z_span/⌈z_span/dz⌉.
pub fn propagate_line(
    initial: &[Complex64],
    cfg: &SpectralConfig,
    a: f64,
    forward: bool,
) -> Result<Vec<Complex64>> {
    let field = run(initial, cfg, a, forward, 2)?;
    Ok(field.values.into_iter().last().unwrap_or_default())
}

/// Strang split-step evolution; `snapshots` rows evenly spaced in z.
pub fn propagate(
    initial: &[Complex64],
    cfg: &SpectralConfig,
    a: f64,
) -> Result<SampledField<Complex64>> {
    run(initial, cfg, a, true, cfg.snapshots)
}

fn run(
    initial: &[Complex64],
    cfg: &SpectralConfig,
    a: f64,
    forward: bool,
    snapshots: usize,
) -> Result<SampledField<Complex64>> {
    let peak = check_line(initial, cfg)?;
    if !a.is_finite() {
        return Err(Error::InvalidInput(format!("non-finite a = {a}")));
    }
    let steps = (cfg.z_span / cfg.dz)
        .ceil()
        .max(if cfg.z_span > 0.0 { 1.0 } else { 0.0 }) as usize;
    let h = if steps > 0 {
        cfg.z_span / steps as f64
    } else {
        0.0
    };
    let sign = if forward { 1.0 } else { -1.0 };
    let mut stepper = Stepper::new(cfg, a, sign * h);
    let marks: Vec<usize> = (0..snapshots)
        .map(|k| ((k * steps) as f64 / (snapshots - 1) as f64).round() as usize)
        .collect();
    let mut u = initial.to_vec();
    let mut rows = Vec::with_capacity(snapshots);
    let mut z_grid = Vec::with_capacity(snapshots);
    let mut next = 0;
    let limit = BLOWUP_FACTOR * peak.max(f64::MIN_POSITIVE);
    for i in 0..=steps {
        if i > 0 {
            stepper.step(&mut u);
            let m = u.iter().map(|v| v.norm()).fold(0.0, f64::max);
            if m > limit || u.iter().any(|v| !v.is_finite()) {
                return Err(Error::Instability {
                    z: sign * h * i as f64,
                });
            }
        }
        while next < marks.len() && marks[next] == i {
            rows.push(u.clone());
            z_grid.push(sign * h * i as f64);
            next += 1;
        }
    }
    SampledField::new(cfg.t_grid(), z_grid, rows).map(|f| {
        f.with_meta("window", cfg.window)
            .with_meta("n_modes", cfg.n_modes)
            .with_meta("dz", h)
            .with_meta("a", a)
    })
}

/// d^order/dt^order of a periodic line by FFT.
pub fn spectral_derivative(line: &[Complex64], window: f64, order: u32) -> Result<Vec<Complex64>> {
    let n = line.len();
    if n == 0 || !(window > 0.0) {
        return Err(Error::InvalidInput(
            "empty line or non-positive window".into(),
        ));
    }
    let mut planner = FftPlanner::new();
    let mut u = line.to_vec();
    planner.plan_fft_forward(n).process(&mut u);
    let base = 2.0 * std::f64::consts::PI / window;
    for (j, v) in u.iter_mut().enumerate() {
        let j = j as i64;
        let n = n as i64;
        // the Nyquist mode has no real derivative; drop it for odd orders
        let k = if j < n / 2 {
            j
        } else if j == n / 2 && n % 2 == 0 {
            if order % 2 == 1 {
                0
            } else {
                j
            }
        } else {
            j - n
        };
        *v *= (Complex64::i() * base * k as f64).powu(order) / n as f64;
    }
    planner.plan_fft_inverse(n).process(&mut u);
    Ok(u)
}

/// (∫|Ψ|² dt, ∫(|Ψ_t|² − (a/2)|Ψ|⁴) dt) over the periodic window.
pub fn conserved_quantities(line: &[Complex64], window: f64, a: f64) -> Result<(f64, f64)> {
    let n = line.len();
    if n == 0 {
        return Err(Error::InvalidInput("empty line".into()));
    }
    let dt = window / n as f64;
    let power: f64 = line.iter().map(|v| v.norm_sqr()).sum::<f64>() * dt;
    let dpsi = spectral_derivative(line, window, 1)?;
    let kinetic: f64 = dpsi.iter().map(|v| v.norm_sqr()).sum::<f64>() * dt;
    let quartic: f64 = line.iter().map(|v| v.norm_sqr().powi(2)).sum::<f64>() * dt;
    Ok((power, kinetic - 0.5 * a * quartic))
}
