//! Small dense complex linear algebra kernels.
//!
//! The matrices involved are at most dwell-sized (K x K with K around 64),
//! so a cyclic Jacobi eigensolver and an unblocked Cholesky are plenty.
//! Both are written for Hermitian inputs; the eigensolver backs the
//! covariance square root used by the clutter sampler (which must survive
//! numerically semi-definite inputs), and Cholesky backs the adaptive
//! matched filter's whitening.

use ndarray::{Array1, Array2, ArrayView1};
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{real, Real};

/// Conjugated inner product `sum(conj(a_i) * b_i)`.
pub fn conj_dot<T: Real>(a: ArrayView1<Complex<T>>, b: ArrayView1<Complex<T>>) -> Complex<T> {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b.iter())
        .fold(Complex::new(T::zero(), T::zero()), |acc, (x, y)| {
            acc + x.conj() * *y
        })
}

/// Squared Euclidean norm of a complex vector.
pub fn norm_sq<T: Real>(a: ArrayView1<Complex<T>>) -> T {
    a.iter().map(|z| z.norm_sqr()).fold(T::zero(), |s, x| s + x)
}

fn frobenius<T: Real>(a: &Array2<Complex<T>>) -> T {
    a.iter()
        .map(|z| z.norm_sqr())
        .fold(T::zero(), |s, x| s + x)
        .sqrt()
}

/// Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.
///
/// Returns `(eigenvalues, eigenvectors)` with `a = V diag(w) V^H`; the
/// eigenvalues are unordered. Only the upper triangle of `a` is trusted,
/// the strict lower triangle is assumed to mirror it.
pub fn hermitian_eigen<T: Real>(
    a: &Array2<Complex<T>>,
) -> Result<(Array1<T>, Array2<Complex<T>>)> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::shape(format!(
            "hermitian_eigen needs a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if n == 0 {
        return Err(Error::invalid("hermitian_eigen needs a non-empty matrix"));
    }

    let mut m = a.clone();
    let mut v: Array2<Complex<T>> = Array2::from_shape_fn((n, n), |(i, j)| {
        if i == j {
            Complex::new(T::one(), T::zero())
        } else {
            Complex::new(T::zero(), T::zero())
        }
    });

    let scale = frobenius(&m);
    if !scale.is_finite() {
        return Err(Error::numeric("non-finite entries in eigen input"));
    }
    let done_tol = scale * T::epsilon() * real::<T>(n as f64);
    let skip_tol = scale * T::epsilon() * real::<T>(1e-2);
    let max_sweeps = 60;

    for _ in 0..max_sweeps {
        let mut off = T::zero();
        for p in 0..n {
            for q in (p + 1)..n {
                off = off + m[(p, q)].norm_sqr();
            }
        }
        if off.sqrt() <= done_tol {
            break;
        }

        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                let b = apq.norm();
                if b <= skip_tol {
                    m[(p, q)] = Complex::new(T::zero(), T::zero());
                    m[(q, p)] = Complex::new(T::zero(), T::zero());
                    continue;
                }
                let phase = apq / Complex::new(b, T::zero());
                let app = m[(p, p)].re;
                let aqq = m[(q, q)].re;
                let tau = (aqq - app) / (b + b);
                let t = if tau >= T::zero() {
                    T::one() / (tau + (T::one() + tau * tau).sqrt())
                } else {
                    -T::one() / (-tau + (T::one() + tau * tau).sqrt())
                };
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                let cs = Complex::new(c, T::zero());
                let s_ph = phase * s; // s * e^{j phi}
                let s_ph_c = s_ph.conj();

                // Rows/columns p and q of the Hermitian matrix.
                for i in 0..n {
                    if i == p || i == q {
                        continue;
                    }
                    let aip = m[(i, p)];
                    let aiq = m[(i, q)];
                    let new_ip = aip * cs - aiq * s_ph_c;
                    let new_iq = aip * s_ph + aiq * cs;
                    m[(i, p)] = new_ip;
                    m[(p, i)] = new_ip.conj();
                    m[(i, q)] = new_iq;
                    m[(q, i)] = new_iq.conj();
                }
                let new_pp = c * c * app - (c * s) * (b + b) + s * s * aqq;
                let new_qq = s * s * app + (c * s) * (b + b) + c * c * aqq;
                m[(p, p)] = Complex::new(new_pp, T::zero());
                m[(q, q)] = Complex::new(new_qq, T::zero());
                m[(p, q)] = Complex::new(T::zero(), T::zero());
                m[(q, p)] = Complex::new(T::zero(), T::zero());

                // Accumulate V <- V G.
                for i in 0..n {
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = vip * cs - viq * s_ph_c;
                    v[(i, q)] = vip * s_ph + viq * cs;
                }
            }
        }
    }

    let w = Array1::from_shape_fn(n, |i| m[(i, i)].re);
    Ok((w, v))
}

/// Square-root factor `F` of a Hermitian PSD matrix with `F F^H = m`.
///
/// Eigenvalues in `[-clamp_tol * max(|w|), 0)` are treated as rounding
/// noise and clamped to zero; anything more negative is a domain error.
pub fn hermitian_sqrt_factor<T: Real>(
    m: &Array2<Complex<T>>,
    clamp_tol: T,
) -> Result<Array2<Complex<T>>> {
    let (w, v) = hermitian_eigen(m)?;
    let wmax = w.iter().fold(T::zero(), |a, &x| a.max(x.abs())).max(T::one());
    let floor = -clamp_tol * wmax;
    let mut roots = Array1::zeros(w.len());
    for (i, &lam) in w.iter().enumerate() {
        if lam < floor {
            return Err(Error::numeric(format!(
                "matrix is not positive semi-definite (eigenvalue {lam})"
            )));
        }
        roots[i] = lam.max(T::zero()).sqrt();
    }
    let mut f = v;
    for (j, mut col) in f.columns_mut().into_iter().enumerate() {
        let r = Complex::new(roots[j], T::zero());
        col.mapv_inplace(|z| z * r);
    }
    Ok(f)
}

/// Lower-triangular Cholesky factor of a Hermitian positive definite matrix.
pub fn cholesky_lower<T: Real>(a: &Array2<Complex<T>>) -> Result<Array2<Complex<T>>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::shape("cholesky needs a square matrix".to_string()));
    }
    let mut l: Array2<Complex<T>> = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[(i, j)];
            for k in 0..j {
                sum = sum - l[(i, k)] * l[(j, k)].conj();
            }
            if i == j {
                let d = sum.re;
                if !(d > T::zero()) || !d.is_finite() {
                    return Err(Error::numeric(format!(
                        "matrix is not positive definite (pivot {d} at {i})"
                    )));
                }
                l[(i, j)] = Complex::new(d.sqrt(), T::zero());
            } else {
                l[(i, j)] = sum / l[(j, j)];
            }
        }
    }
    Ok(l)
}

/// Solves `L y = b` for lower-triangular `L` (forward substitution).
pub fn solve_lower<T: Real>(
    l: &Array2<Complex<T>>,
    b: ArrayView1<Complex<T>>,
) -> Array1<Complex<T>> {
    let n = l.nrows();
    debug_assert_eq!(b.len(), n);
    let mut y: Array1<Complex<T>> = Array1::zeros(n);
    for i in 0..n {
        let mut sum = b[i];
        for k in 0..i {
            sum = sum - l[(i, k)] * y[k];
        }
        y[i] = sum / l[(i, i)];
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(n: usize, seed: u64) -> Array2<Complex<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = Array2::from_shape_fn((n, n), |_| {
            Complex::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
        });
        // B B^H is Hermitian PSD; add a small shift for definiteness.
        let mut a = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                a[(i, j)] = conj_dot(b.row(j), b.row(i));
            }
            a[(i, i)] += Complex::new(0.1, 0.0);
        }
        a
    }

    fn reconstruct(
        w: &Array1<f64>,
        v: &Array2<Complex<f64>>,
    ) -> Array2<Complex<f64>> {
        let n = w.len();
        Array2::from_shape_fn((n, n), |(i, j)| {
            (0..n)
                .map(|k| v[(i, k)] * v[(j, k)].conj() * w[k])
                .sum::<Complex<f64>>()
        })
    }

    #[test]
    fn jacobi_eigen_reconstructs_random_hermitian() {
        let a = random_hermitian(12, 3);
        let (w, v) = hermitian_eigen(&a).unwrap();
        let r = reconstruct(&w, &v);
        let err: f64 = a
            .iter()
            .zip(r.iter())
            .map(|(x, y)| (x - y).norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(err < 1e-10, "reconstruction error {err}");
    }

    #[test]
    fn eigenvectors_are_orthonormal() {
        let a = random_hermitian(9, 11);
        let (_, v) = hermitian_eigen(&a).unwrap();
        for i in 0..9 {
            for j in 0..9 {
                let d = conj_dot(v.column(i), v.column(j));
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((d.re - expect).abs() < 1e-11 && d.im.abs() < 1e-11);
            }
        }
    }

    #[test]
    fn sqrt_factor_reproduces_matrix() {
        let a = random_hermitian(10, 5);
        let f = hermitian_sqrt_factor(&a, 1e-10).unwrap();
        let n = 10;
        for i in 0..n {
            for j in 0..n {
                let v: Complex<f64> = conj_dot(f.row(j), f.row(i));
                assert!((v - a[(i, j)]).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn sqrt_factor_clamps_tiny_negative_eigenvalues() {
        // Rank-1 PSD matrix; rounding can push the zero eigenvalue negative.
        let a = array![
            [Complex::new(1.0, 0.0), Complex::new(1.0, 0.0)],
            [Complex::new(1.0, 0.0), Complex::new(1.0, 0.0)]
        ];
        let f = hermitian_sqrt_factor(&a, 1e-10).unwrap();
        let v00: Complex<f64> = conj_dot(f.row(0), f.row(0));
        assert!((v00.re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sqrt_factor_rejects_indefinite_matrix() {
        let a = array![
            [Complex::new(1.0, 0.0), Complex::new(0.0, 0.0)],
            [Complex::new(0.0, 0.0), Complex::new(-0.5, 0.0)]
        ];
        assert!(hermitian_sqrt_factor(&a, 1e-10).is_err());
    }

    #[test]
    fn cholesky_solves_match_direct_substitution() {
        let a = random_hermitian(8, 21);
        let l = cholesky_lower(&a).unwrap();
        // L L^H must reproduce A.
        for i in 0..8 {
            for j in 0..8 {
                let v: Complex<f64> = (0..8).map(|k| l[(i, k)] * l[(j, k)].conj()).sum();
                assert!((v - a[(i, j)]).norm() < 1e-11);
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let b = Array1::from_shape_fn(8, |_| Complex::new(rng.gen::<f64>(), rng.gen::<f64>()));
        let y = solve_lower(&l, b.view());
        for i in 0..8 {
            let lhs: Complex<f64> = (0..=i).map(|k| l[(i, k)] * y[k]).sum();
            assert!((lhs - b[i]).norm() < 1e-11);
        }
    }

    #[test]
    fn cholesky_rejects_indefinite_matrix() {
        let a = array![
            [Complex::new(0.0, 0.0), Complex::new(0.0, 0.0)],
            [Complex::new(0.0, 0.0), Complex::new(1.0, 0.0)]
        ];
        assert!(cholesky_lower(&a).is_err());
    }
}
