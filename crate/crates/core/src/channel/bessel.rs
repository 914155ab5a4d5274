/// Bessel function of the first kind, order zero.
///
/// Power series below |x| = 12, Hankel asymptotic expansion above.
pub fn bessel_j0(x: f64) -> f64 {
    let x = x.abs();
    if x < 12.0 {
        let q = x * x / 4.0;
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..80 {
            term *= -q / (k * k) as f64;
            sum += term;
            if term.abs() < 1e-17 * sum.abs().max(1e-300) {
                break;
            }
        }
        sum
    } else {
        let z = 8.0 / x;
        let z2 = z * z;
        let p = 1.0 + z2 * (-0.1098628627e-2 + z2 * (0.2734510407e-4 + z2 * (-0.2073370639e-5 + z2 * 0.2093887211e-6)));
        let q = -0.1562499995e-1
            + z2 * (0.1430488765e-3 + z2 * (-0.6911147651e-5 + z2 * (0.7621095161e-6 - z2 * 0.934935152e-7)));
        let phase = x - std::f64::consts::FRAC_PI_4;
        (std::f64::consts::FRAC_2_PI / x).sqrt() * (phase.cos() * p - z * phase.sin() * q)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// J0(x) = (1/pi) * integral_0^pi cos(x sin t) dt, composite Simpson.
    fn j0_quadrature(x: f64) -> f64 {
        let n = 4000;
        let h = std::f64::consts::PI / n as f64;
        let f = |t: f64| (x * t.sin()).cos();
        let mut s = f(0.0) + f(std::f64::consts::PI);
        for k in 1..n {
            s += f(k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0 / std::f64::consts::PI
    }

    #[test]
    fn matches_quadrature() {
        for &x in &[
            0.0,
            1e-3,
            0.0244,
            0.5,
            1.0,
            2.404825557695773,
            5.0,
            11.9,
            12.5,
            20.0,
            40.0,
        ] {
            let tol = if x < 12.0 { 1e-12 } else { 1e-7 };
            assert!((bessel_j0(x) - j0_quadrature(x)).abs() < tol, "x = {x}");
        }
    }

    #[test]
    fn known_values() {
        assert_eq!(bessel_j0(0.0), 1.0);
        // First zero.
        assert!(bessel_j0(2.404825557695773).abs() < 1e-14);
        assert_eq!(bessel_j0(-1.5), bessel_j0(1.5));
    }
}
