//! Roots of the Weierstrass cubic 4j³ − g₂j − g₃.

use num_complex::Complex64;

fn cubic(g2: f64, g3: f64, j: Complex64) -> Complex64 {
    j * j * j * 4.0 - j * g2 - g3
}

fn polish(g2: f64, g3: f64, mut j: Complex64) -> Complex64 {
    for _ in 0..8 {
        let f = cubic(g2, g3, j);
        let df = j * j * 12.0 - g2;
        if df.norm() == 0.0 || f.norm() == 0.0 {
            break;
        }
        let step = f / df;
        let next = j - step;
        if cubic(g2, g3, next).norm() >= f.norm() {
            break;
        }
        j = next;
    }
    j
}

/// The three roots, sorted by descending real part (ties broken by
/// descending imaginary part). Real roots carry an exactly-zero imaginary
/// part when the discriminant is non-negative.
pub fn weierstrass_roots(g2: f64, g3: f64) -> [Complex64; 3] {
    // j³ + p j + q = 0
    let p = -g2 / 4.0;
    let q = -g3 / 4.0;
    let disc = g2 * g2 * g2 - 27.0 * g3 * g3;

    let mut roots = if p == 0.0 && q == 0.0 {
        [Complex64::new(0.0, 0.0); 3]
    } else if disc >= 0.0 {
        // three real roots (trigonometric form); p < 0 here unless p = q = 0
        let m = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
        let theta = arg.acos() / 3.0;
        let tau = 2.0 * std::f64::consts::PI / 3.0;
        let r: Vec<f64> = (0..3).map(|k| m * (theta - tau * k as f64).cos()).collect();
        [
            Complex64::new(r[0], 0.0),
            Complex64::new(r[1], 0.0),
            Complex64::new(r[2], 0.0),
        ]
    } else {
        let d = (q / 2.0).powi(2) + (p / 3.0).powi(3);
        let s = d.sqrt();
        let big = -(q.signum()) * (q.abs() / 2.0 + s).cbrt();
        let small = if big != 0.0 { -p / (3.0 * big) } else { 0.0 };
        let real = big + small;
        let im = 3f64.sqrt() / 2.0 * (big - small);
        [
            Complex64::new(real, 0.0),
            Complex64::new(-real / 2.0, im.abs()),
            Complex64::new(-real / 2.0, -im.abs()),
        ]
    };

    for r in roots.iter_mut() {
        let keep_real = r.im == 0.0;
        *r = polish(g2, g3, *r);
        if keep_real {
            r.im = 0.0;
        }
    }
    if disc < 0.0 {
        // conjugate pair stays exactly conjugate
        roots[2] = roots[1].conj();
    }
    roots.sort_by(|a, b| {
        b.re.partial_cmp(&a.re)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(b.im.partial_cmp(&a.im).unwrap_or(std::cmp::Ordering::Equal))
    });
    roots
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn double_root_case() {
        let r = weierstrass_roots(12.0, -8.0);
        assert!((r[0].re - 1.0).abs() < 1e-7);
        assert!((r[1].re - 1.0).abs() < 1e-7);
        assert!((r[2].re + 2.0).abs() < 1e-12);
    }

    #[test]
    fn roots_satisfy_cubic_and_sum_to_zero() {
        for &(g2, g3) in &[
            (4.0, 0.0),
            (-0.64, -1.4784),
            (7.0, 3.0),
            (-3.0, 5.0),
            (1e-3, 1e-5),
        ] {
            let r = weierstrass_roots(g2, g3);
            let scale = 1f64.max(g2.abs()).max(g3.abs());
            for root in r {
                assert!(
                    cubic(g2, g3, root).norm() <= 1e-12 * scale,
                    "{g2} {g3} {root}"
                );
            }
            assert!((r[0] + r[1] + r[2]).norm() < 1e-12);
        }
    }
}
