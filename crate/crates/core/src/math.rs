//! Scalar math shims and small dense linear-algebra kernels.
//!
//! The shims route through `std` float intrinsics when available and `libm`
//! otherwise, so the rest of the crate stays `no_std`-clean.

#[cfg(all(not(feature = "std"), not(feature = "libm")))]
compile_error!("enable either the `std` or the `libm` feature");

macro_rules! shim1 {
    ($name:ident, $libm:ident) => {
        #[inline]
        pub fn $name(x: f64) -> f64 {
            #[cfg(feature = "std")]
            {
                x.$name()
            }
            #[cfg(not(feature = "std"))]
            {
                libm::$libm(x)
            }
        }
    };
}

shim1!(sqrt, sqrt);
shim1!(ln, log);
shim1!(log2, log2);
shim1!(ln_1p, log1p);
shim1!(sin, sin);
shim1!(cos, cos);
shim1!(asin, asin);
shim1!(abs, fabs);

#[inline]
pub fn atan2(y: f64, x: f64) -> f64 {
    #[cfg(feature = "std")]
    {
        y.atan2(x)
    }
    #[cfg(not(feature = "std"))]
    {
        libm::atan2(y, x)
    }
}

#[inline]
pub fn powf(x: f64, y: f64) -> f64 {
    #[cfg(feature = "std")]
    {
        x.powf(y)
    }
    #[cfg(not(feature = "std"))]
    {
        libm::pow(x, y)
    }
}

#[inline]
pub fn hypot(x: f64, y: f64) -> f64 {
    #[cfg(feature = "std")]
    {
        x.hypot(y)
    }
    #[cfg(not(feature = "std"))]
    {
        libm::hypot(x, y)
    }
}

/// log2(1+x) without cancellation for small x.
#[inline]
pub fn log2_1p(x: f64) -> f64 {
    ln_1p(x) / core::f64::consts::LN_2
}

/// Dot product with four independent accumulators.
///
/// The fixed summation order keeps results bit-reproducible while letting the
/// compiler vectorize; a single serial accumulator would serialize on the add
/// latency and dominate the Newton factorization cost.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for i in 0..chunks {
        let k = 4 * i;
        acc[0] += a[k] * b[k];
        acc[1] += a[k + 1] * b[k + 1];
        acc[2] += a[k + 2] * b[k + 2];
        acc[3] += a[k + 3] * b[k + 3];
    }
    let mut tail = 0.0;
    for k in 4 * chunks..a.len() {
        tail += a[k] * b[k];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// y -= s * x over equal-length slices.
#[inline]
pub fn axpy_neg(y: &mut [f64], s: f64, x: &[f64]) {
    debug_assert_eq!(y.len(), x.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi -= s * xi;
    }
}

/// y += s * x over equal-length slices.
#[inline]
pub fn axpy_add(y: &mut [f64], s: f64, x: &[f64]) {
    debug_assert_eq!(y.len(), x.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += s * xi;
    }
}

/// In-place Cholesky factorization of a symmetric positive-definite matrix.
///
/// `a` is `n x n` row-major; only the lower triangle is read, and the factor
/// L overwrites it. The strict upper triangle is clobbered: each pivot column
/// is mirrored into its row so the trailing update reads contiguous memory.
/// Returns `Err(k)` with the failing pivot column if the matrix is not
/// numerically positive definite. Right-looking update keeps the inner loop a
/// contiguous `axpy`, which vectorizes without changing summation order.
pub fn cholesky_in_place(a: &mut [f64], n: usize) -> Result<(), usize> {
    debug_assert_eq!(a.len(), n * n);
    for k in 0..n {
        let piv = a[k * n + k];
        if !(piv > 0.0) || !piv.is_finite() {
            return Err(k);
        }
        let lkk = sqrt(piv);
        a[k * n + k] = lkk;
        let inv = 1.0 / lkk;
        for i in k + 1..n {
            let lik = a[i * n + k] * inv;
            a[i * n + k] = lik;
            a[k * n + i] = lik;
        }
        for i in k + 1..n {
            let lik = a[i * n + k];
            if lik != 0.0 {
                let (head, rowi) = a.split_at_mut(i * n);
                let rowk = &head[k * n + k + 1..k * n + i + 1];
                axpy_neg(&mut rowi[k + 1..i + 1], lik, rowk);
            }
        }
    }
    Ok(())
}

/// Solves L Lᵀ x = b given the factor from [`cholesky_in_place`]; overwrites `b`.
pub fn cholesky_solve(l: &[f64], n: usize, b: &mut [f64]) {
    debug_assert_eq!(l.len(), n * n);
    debug_assert_eq!(b.len(), n);
    for i in 0..n {
        let s = dot(&l[i * n..i * n + i], &b[..i]);
        b[i] = (b[i] - s) / l[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in i + 1..n {
            s -= l[k * n + i] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
}
