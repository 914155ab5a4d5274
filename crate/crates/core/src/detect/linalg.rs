//! Small dense Hermitian positive-definite solves, row-major storage.

use num_complex::Complex64;

/// In-place lower Cholesky factor `A = L L^H`. Returns `false` when `A` is not
/// numerically positive definite.
pub(crate) fn cholesky(a: &mut [Complex64], n: usize) -> bool {
    for j in 0..n {
        let mut d = a[j * n + j].re;
        for k in 0..j {
            d -= a[j * n + k].norm_sqr();
        }
        if !(d > 0.0) {
            return false;
        }
        let d = d.sqrt();
        a[j * n + j] = Complex64::new(d, 0.0);
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k].conj();
            }
            a[i * n + j] = s / d;
        }
        for k in j + 1..n {
            a[j * n + k] = Complex64::new(0.0, 0.0);
        }
    }
    true
}

/// Solve `L z = b` in place.
pub(crate) fn forward(l: &[Complex64], n: usize, b: &mut [Complex64]) {
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * b[k];
        }
        b[i] = s / l[i * n + i].re;
    }
}

/// Solve `L^H x = z` in place.
pub(crate) fn backward(l: &[Complex64], n: usize, b: &mut [Complex64]) {
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in i + 1..n {
            s -= l[k * n + i].conj() * b[k];
        }
        b[i] = s / l[i * n + i].re;
    }
}

/// Diagonal of `(L L^H)^{-1}`: entry `c` is the squared norm of `L^{-1} e_c`.
pub(crate) fn inverse_diagonal(l: &[Complex64], n: usize, out: &mut [f64], scratch: &mut Vec<Complex64>) {
    for c in 0..n {
        scratch.clear();
        scratch.resize(n, Complex64::new(0.0, 0.0));
        scratch[c] = Complex64::new(1.0, 0.0);
        forward(l, n, scratch);
        out[c] = scratch.iter().map(|z| z.norm_sqr()).sum();
    }
}
