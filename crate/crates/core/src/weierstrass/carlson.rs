//! Carlson's symmetric elliptic integral R_F for complex arguments.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// R_F(x, y, z) = ½ ∫₀^∞ dt / √((t+x)(t+y)(t+z)) by Carlson's duplication
/// algorithm. At most one argument may be zero.
pub fn carlson_rf(x: Complex64, y: Complex64, z: Complex64) -> Result<Complex64> {
    let zeros = [x, y, z].iter().filter(|v| v.norm() == 0.0).count();
    if zeros > 1 {
        return Err(Error::InvalidInput(
            "carlson_rf: more than one argument is zero".into(),
        ));
    }
    if !(x.is_finite() && y.is_finite() && z.is_finite()) {
        return Err(Error::InvalidInput(
            "carlson_rf: non-finite argument".into(),
        ));
    }

    let (mut x, mut y, mut z) = (x, y, z);
    let a0 = (x + y + z) / 3.0;
    let mut a = a0;
    // (3r)^(-1/6) with r = 1e-16
    let q = 3.0e-16f64.powf(-1.0 / 6.0) * (a0 - x).norm().max((a0 - y).norm()).max((a0 - z).norm());
    let mut scale = 1.0;
    let mut converged = false;
    for _ in 0..200 {
        if q * scale < a.norm() {
            converged = true;
            break;
        }
        let (sx, sy, sz) = (x.sqrt(), y.sqrt(), z.sqrt());
        let lambda = sx * sy + sy * sz + sz * sx;
        x = (x + lambda) * 0.25;
        y = (y + lambda) * 0.25;
        z = (z + lambda) * 0.25;
        a = (a + lambda) * 0.25;
        scale *= 0.25;
    }
    if !converged {
        return Err(Error::NumericFailure("carlson_rf did not converge".into()));
    }
    let xd = (a - x) / a;
    let yd = (a - y) / a;
    let zd = -(xd + yd);
    let e2 = xd * yd - zd * zd;
    let e3 = xd * yd * zd;
    let series =
        Complex64::new(1.0, 0.0) - e2 / 10.0 + e3 / 14.0 + e2 * e2 / 24.0 - e2 * e3 * (3.0 / 44.0);
    let value = series / a.sqrt();
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NumericFailure(
            "carlson_rf produced a non-finite value".into(),
        ))
    }
}
