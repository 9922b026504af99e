//! Dense complex eigensolver.
//!
//! Householder reduction to upper Hessenberg form followed by the implicit
//! single-shift QR algorithm (Wilkinson shifts, Givens bulge chase). The
//! result is a complex Schur form `A = Z T Z^H`; eigenvectors come from
//! back-substitution on the triangular factor.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

const ULP: f64 = f64::EPSILON;
const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Iteration budget per eigenvalue, as in LAPACK's `zlahqr`.
const ITERATIONS_PER_EIGENVALUE: usize = 30;

#[inline]
fn abs1(z: Complex64) -> f64 {
    z.re.abs() + z.im.abs()
}

/// Complex Schur decomposition `A = Z T Z^H` with `T` upper triangular.
#[derive(Debug, Clone)]
pub struct ComplexSchur {
    pub t: DMatrix<Complex64>,
    pub z: Option<DMatrix<Complex64>>,
}

impl ComplexSchur {
    pub fn new(a: &DMatrix<Complex64>, want_vectors: bool) -> Result<Self> {
        assert!(a.is_square(), "eigensolver needs a square matrix");
        let n = a.nrows();
        let mut h = a.clone();
        let mut z = want_vectors.then(|| DMatrix::identity(n, n));
        hessenberg(&mut h, z.as_mut());
        hessenberg_qr(&mut h, z.as_mut())?;
        Ok(ComplexSchur { t: h, z })
    }

    pub fn eigenvalues(&self) -> Vec<Complex64> {
        self.t.diagonal().iter().copied().collect()
    }

    /// Unit-norm eigenvectors, one column per diagonal entry of `T`.
    pub fn eigenvectors(&self) -> Option<DMatrix<Complex64>> {
        let z = self.z.as_ref()?;
        let t = &self.t;
        let n = t.nrows();
        let tnorm = t.iter().map(|v| abs1(*v)).fold(0.0, f64::max);
        let mut out = DMatrix::zeros(n, n);
        let mut x = vec![ZERO; n];
        for k in 0..n {
            let lambda = t[(k, k)];
            let smin = (ULP * abs1(lambda)).max(ULP * tnorm).max(f64::MIN_POSITIVE);
            x.iter_mut().for_each(|v| *v = ZERO);
            x[k] = ONE;
            for i in (0..k).rev() {
                let mut sum = ZERO;
                for j in i + 1..=k {
                    sum += t[(i, j)] * x[j];
                }
                let mut denom = t[(i, i)] - lambda;
                if abs1(denom) < smin {
                    denom = Complex64::new(smin, 0.0);
                }
                x[i] = -sum / denom;
                let big = abs1(x[i]);
                if big > 1e100 {
                    let s = 1.0 / big;
                    x[i..=k].iter_mut().for_each(|v| *v *= s);
                }
            }
            let mut v = DVector::zeros(n);
            for i in 0..n {
                let mut sum = ZERO;
                for j in 0..=k {
                    sum += z[(i, j)] * x[j];
                }
                v[i] = sum;
            }
            let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            if norm > 0.0 {
                v /= Complex64::new(norm, 0.0);
            }
            out.set_column(k, &v);
        }
        Some(out)
    }
}

/// All eigenvalues of a dense complex matrix, in Schur-diagonal order.
pub fn eigenvalues(a: &DMatrix<Complex64>) -> Result<Vec<Complex64>> {
    Ok(ComplexSchur::new(a, false)?.eigenvalues())
}

/// Eigenvalues with unit-norm right eigenvectors (columns).
pub fn eigenpairs(a: &DMatrix<Complex64>) -> Result<(Vec<Complex64>, DMatrix<Complex64>)> {
    let schur = ComplexSchur::new(a, true)?;
    let vectors = schur.eigenvectors().expect("Schur vectors were requested");
    Ok((schur.eigenvalues(), vectors))
}

/// Relative backward error `‖A v − λ v‖ / (‖A‖_F ‖v‖)`.
pub fn backward_error(a: &DMatrix<Complex64>, lambda: Complex64, v: &DVector<Complex64>) -> f64 {
    let r = a * v - v * lambda;
    let anorm = a.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    r.norm() / (anorm.max(f64::MIN_POSITIVE) * v.norm())
}

// ── Hessenberg reduction ────────────────────────────────────────────────────

fn hessenberg(h: &mut DMatrix<Complex64>, mut z: Option<&mut DMatrix<Complex64>>) {
    let n = h.nrows();
    if n < 3 {
        return;
    }
    let mut v = vec![ZERO; n];
    for k in 0..n - 2 {
        let tail: f64 = (k + 2..n).map(|i| h[(i, k)].norm_sqr()).sum();
        if tail == 0.0 {
            continue;
        }
        let x0 = h[(k + 1, k)];
        let xnorm = (x0.norm_sqr() + tail).sqrt();
        let phase = if x0 == ZERO { ONE } else { x0 / x0.norm() };
        let alpha = -phase * xnorm;

        // v = x - alpha e1, normalised
        let len = n - k - 1;
        v[0] = x0 - alpha;
        for i in 1..len {
            v[i] = h[(k + 1 + i, k)];
        }
        let vnorm = v[..len].iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        v[..len].iter_mut().for_each(|c| *c /= vnorm);

        // H <- (I - 2vv^H) H
        for j in k..n {
            let mut dot = ZERO;
            for i in 0..len {
                dot += v[i].conj() * h[(k + 1 + i, j)];
            }
            dot *= 2.0;
            for i in 0..len {
                h[(k + 1 + i, j)] -= v[i] * dot;
            }
        }
        // H <- H (I - 2vv^H)
        for i in 0..n {
            let mut dot = ZERO;
            for l in 0..len {
                dot += h[(i, k + 1 + l)] * v[l];
            }
            dot *= 2.0;
            for l in 0..len {
                h[(i, k + 1 + l)] -= dot * v[l].conj();
            }
        }
        if let Some(z) = z.as_deref_mut() {
            for i in 0..n {
                let mut dot = ZERO;
                for l in 0..len {
                    dot += z[(i, k + 1 + l)] * v[l];
                }
                dot *= 2.0;
                for l in 0..len {
                    z[(i, k + 1 + l)] -= dot * v[l].conj();
                }
            }
        }
        h[(k + 1, k)] = alpha;
        for i in k + 2..n {
            h[(i, k)] = ZERO;
        }
    }
}

// ── Shifted QR on the Hessenberg form ───────────────────────────────────────

/// Rotation `G = [[c, s], [-conj(s), c]]` with real `c` and `G [x; y] = [rho; 0]`.
#[inline]
fn givens(x: Complex64, y: Complex64) -> (f64, Complex64) {
    if y == ZERO {
        return (1.0, ZERO);
    }
    if x == ZERO {
        return (0.0, y.conj() / y.norm());
    }
    let xn = x.norm();
    let nrm = xn.hypot(y.norm());
    (xn / nrm, (x / xn) * y.conj() / nrm)
}

fn wilkinson_shift(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Complex64 {
    let half = (a - d) * 0.5;
    let disc = (half * half + b * c).sqrt();
    let mean = (a + d) * 0.5;
    let (e1, e2) = (mean + disc, mean - disc);
    if (e1 - d).norm() <= (e2 - d).norm() {
        e1
    } else {
        e2
    }
}

fn hessenberg_qr(h: &mut DMatrix<Complex64>, mut z: Option<&mut DMatrix<Complex64>>) -> Result<()> {
    let n = h.nrows();
    if n <= 1 {
        return Ok(());
    }
    let hnorm = h.iter().map(|v| abs1(*v)).fold(0.0, f64::max);
    let budget = ITERATIONS_PER_EIGENVALUE * n.max(10);
    let mut total = 0usize;
    let mut since_deflation = 0usize;
    let mut hi = n - 1;

    while hi > 0 {
        // Locate the start of the unreduced trailing block.
        let mut lo = hi;
        while lo > 0 {
            let sub = abs1(h[(lo, lo - 1)]);
            let mut scale = abs1(h[(lo - 1, lo - 1)]) + abs1(h[(lo, lo)]);
            if scale == 0.0 {
                scale = hnorm;
            }
            if sub <= ULP * scale || sub < f64::MIN_POSITIVE {
                h[(lo, lo - 1)] = ZERO;
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            hi -= 1;
            since_deflation = 0;
            continue;
        }

        total += 1;
        since_deflation += 1;
        if total > budget {
            return Err(Error::EigFailure { size: n });
        }

        let shift = if since_deflation.is_multiple_of(10) {
            // Exceptional shift to break cycles.
            h[(hi, hi)] + Complex64::new(0.75 * abs1(h[(hi, hi - 1)]), 0.0)
        } else {
            wilkinson_shift(h[(hi - 1, hi - 1)], h[(hi - 1, hi)], h[(hi, hi - 1)], h[(hi, hi)])
        };

        let mut x = h[(lo, lo)] - shift;
        let mut y = h[(lo + 1, lo)];
        for k in lo..hi {
            if k > lo {
                x = h[(k, k - 1)];
                y = h[(k + 1, k - 1)];
            }
            let (c, s) = givens(x, y);
            let col0 = if k > lo { k - 1 } else { lo };
            for j in col0..n {
                let a = h[(k, j)];
                let b = h[(k + 1, j)];
                h[(k, j)] = a * c + s * b;
                h[(k + 1, j)] = -s.conj() * a + b * c;
            }
            if k > lo {
                h[(k + 1, k - 1)] = ZERO;
            }
            let row_end = (k + 2).min(hi);
            for i in 0..=row_end {
                let a = h[(i, k)];
                let b = h[(i, k + 1)];
                h[(i, k)] = a * c + b * s.conj();
                h[(i, k + 1)] = -a * s + b * c;
            }
            if let Some(z) = z.as_deref_mut() {
                for i in 0..n {
                    let a = z[(i, k)];
                    let b = z[(i, k + 1)];
                    z[(i, k)] = a * c + b * s.conj();
                    z[(i, k + 1)] = -a * s + b * c;
                }
            }
        }
    }
    Ok(())
}
