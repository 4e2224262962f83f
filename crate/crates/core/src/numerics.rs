//! Small complex helpers that stay accurate near their removable
//! singularities.

use num_complex::Complex64;

pub(crate) const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
pub(crate) const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };
pub(crate) const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// sin(z)/z, entire.
pub fn sinc(z: Complex64) -> Complex64 {
    if z.norm() < 1e-3 {
        let z2 = z * z;
        ONE - z2 / 6.0 + z2 * z2 / 120.0
    } else {
        z.sin() / z
    }
}

/// sinh(z)/z, entire.
pub fn sinhc(z: Complex64) -> Complex64 {
    sinc(I * z)
}

/// e^z - 1 without cancellation for small |z|.
pub fn expm1(z: Complex64) -> Complex64 {
    let (x, y) = (z.re, z.im);
    let half = (0.5 * y).sin();
    Complex64::new(x.exp_m1() * y.cos() - 2.0 * half * half, x.exp() * y.sin())
}

/// (e^z - 1)/z, entire.
pub fn expm1c(z: Complex64) -> Complex64 {
    if z.norm() < 1e-2 {
        // Horner form of 1 + z/2! + z²/3! + ... + z⁶/7!
        let mut acc = ONE;
        for n in (2..=7).rev() {
            acc = ONE + z * acc / n as f64;
        }
        acc
    } else {
        expm1(z) / z
    }
}

/// Principal square root with the cut moved so that the result has
/// Im ≥ 0, and Re ≥ 0 when Im = 0.
pub fn upper_sqrt(z: Complex64) -> Complex64 {
    let r = z.sqrt();
    if r.im < 0.0 || (r.im == 0.0 && r.re < 0.0) {
        -r
    } else {
        r
    }
}

pub(crate) fn max_abs(values: &[Complex64]) -> f64 {
    values.iter().fold(0.0, |m, v| m.max(v.norm()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sinc_matches_direct_form_away_from_zero() {
        for z in [Complex64::new(0.3, 0.2), Complex64::new(-2.0, 1.5), Complex64::new(0.0, 4.0)] {
            assert!((sinc(z) - z.sin() / z).norm() < 1e-14);
        }
        assert_eq!(sinc(ZERO), ONE);
        let z = Complex64::new(1e-4, -2e-4);
        assert!((sinc(z) - z.sin() / z).norm() < 1e-12);
    }

    #[test]
    fn expm1c_series_and_direct_agree_at_switch() {
        let inner = Complex64::new(0.0099, 0.0);
        let outer = Complex64::new(0.0101, 0.0);
        let slope = (expm1c(outer) - expm1c(inner)) / 0.0002;
        assert!((slope.re - 0.5).abs() < 1e-2);
        let z = Complex64::new(0.004, -0.007);
        let reference = (z.exp() - ONE) / z;
        assert!((expm1c(z) - reference).norm() < 1e-12);
        assert_eq!(expm1c(ZERO), ONE);
    }

    #[test]
    fn expm1_is_accurate_for_tiny_arguments() {
        let z = Complex64::new(1e-12, 2e-12);
        let v = expm1(z);
        assert!((v - z).norm() < 1e-23);
    }

    #[test]
    fn upper_sqrt_branch() {
        assert_eq!(upper_sqrt(Complex64::new(4.0, 0.0)), Complex64::new(2.0, 0.0));
        let r = upper_sqrt(Complex64::new(-4.0, 0.0));
        assert!((r - Complex64::new(0.0, 2.0)).norm() < 1e-15);
        let r = upper_sqrt(Complex64::new(1.0, -1e-3));
        assert!(r.im >= 0.0);
        assert!((r * r - Complex64::new(1.0, -1e-3)).norm() < 1e-15);
    }
}
