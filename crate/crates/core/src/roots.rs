//! Roots of real univariate polynomials via companion-matrix eigenvalues.

use crate::error::{NrError, Result};
use crate::scalar::{cx, Cx, Real};

const HQR_MAX_ITERS: usize = 60;

/// All complex roots of `Σ coeffs[k]·x^k` (ascending powers, nonzero leading term).
pub fn polynomial_roots<T: Real>(coeffs: &[T]) -> Result<Vec<Cx<T>>> {
    let mut deg = coeffs.len();
    while deg > 0 && coeffs[deg - 1] == T::zero() {
        deg -= 1;
    }
    if deg <= 1 {
        return Ok(Vec::new());
    }
    let n = deg - 1;
    let lead = coeffs[n];
    // upper Hessenberg companion matrix
    let mut a = vec![T::zero(); n * n];
    for j in 0..n {
        a[j] = -coeffs[n - 1 - j] / lead;
    }
    for i in 1..n {
        a[i * n + i - 1] = T::one();
    }
    hqr(&mut a, n)
}

/// Divides `coeffs` (ascending) by `(x − r)`, returning quotient and remainder.
pub fn deflate<T: Real>(coeffs: &[T], r: T) -> (Vec<T>, T) {
    let n = coeffs.len();
    if n == 0 {
        return (Vec::new(), T::zero());
    }
    let mut q = vec![T::zero(); n - 1];
    let mut acc = coeffs[n - 1];
    for k in (0..n - 1).rev() {
        q[k] = acc;
        acc = coeffs[k] + acc * r;
    }
    (q, acc)
}

/// Eigenvalues of a real upper Hessenberg matrix (Francis double-shift QR).
fn hqr<T: Real>(a: &mut [T], n: usize) -> Result<Vec<Cx<T>>> {
    let idx = |i: usize, j: usize| i * n + j;
    let mut wr = vec![T::zero(); n];
    let mut wi = vec![T::zero(); n];
    let mut anorm = T::zero();
    for i in 0..n {
        for j in i.saturating_sub(1)..n {
            anorm += a[idx(i, j)].abs();
        }
    }
    let mut nn = n as isize - 1;
    let mut t = T::zero();
    while nn >= 0 {
        let mut its = 0;
        loop {
            // look for a single small subdiagonal element
            let mut l = nn;
            while l >= 1 {
                let lu = l as usize;
                let s = a[idx(lu - 1, lu - 1)].abs() + a[idx(lu, lu)].abs();
                let s = if s == T::zero() { anorm } else { s };
                if a[idx(lu, lu - 1)].abs() + s == s {
                    a[idx(lu, lu - 1)] = T::zero();
                    break;
                }
                l -= 1;
            }
            let nnu = nn as usize;
            let x = a[idx(nnu, nnu)];
            if l == nn {
                wr[nnu] = x + t;
                wi[nnu] = T::zero();
                nn -= 1;
                break;
            }
            let y = a[idx(nnu - 1, nnu - 1)];
            let w = a[idx(nnu, nnu - 1)] * a[idx(nnu - 1, nnu)];
            if l == nn - 1 {
                let p = T::lit(0.5) * (y - x);
                let q = p * p + w;
                let z = q.abs().sqrt();
                let xx = x + t;
                if q >= T::zero() {
                    let z = p + z.copysign(p);
                    wr[nnu - 1] = xx + z;
                    wr[nnu] = if z != T::zero() { xx - w / z } else { xx + z };
                    wi[nnu - 1] = T::zero();
                    wi[nnu] = T::zero();
                } else {
                    wr[nnu - 1] = xx + p;
                    wr[nnu] = xx + p;
                    wi[nnu - 1] = -z;
                    wi[nnu] = z;
                }
                nn -= 2;
                break;
            }
            if its == HQR_MAX_ITERS {
                return Err(NrError::NonConvergence {
                    routine: "hessenberg QR",
                    iterations: its,
                });
            }
            let (mut x, mut y, mut w) = (x, y, w);
            if its == 10 || its == 20 {
                // exceptional shift
                t += x;
                for i in 0..=nnu {
                    a[idx(i, i)] -= x;
                }
                let s = a[idx(nnu, nnu - 1)].abs() + a[idx(nnu - 1, nnu - 2)].abs();
                x = T::lit(0.75) * s;
                y = x;
                w = T::lit(-0.4375) * s * s;
            }
            its += 1;
            let lu = l as usize;
            let mut m = nnu - 2;
            let (mut p, mut q, mut r);
            loop {
                let z = a[idx(m, m)];
                let rr = x - z;
                let ss = y - z;
                p = (rr * ss - w) / a[idx(m + 1, m)] + a[idx(m, m + 1)];
                q = a[idx(m + 1, m + 1)] - z - rr - ss;
                r = a[idx(m + 2, m + 1)];
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == lu {
                    break;
                }
                let u = a[idx(m, m - 1)].abs() * (q.abs() + r.abs());
                let v = p.abs() * (a[idx(m - 1, m - 1)].abs() + z.abs() + a[idx(m + 1, m + 1)].abs());
                if u + v == v {
                    break;
                }
                m -= 1;
            }
            for i in (m + 2)..=nnu {
                a[idx(i, i - 2)] = T::zero();
                if i != m + 2 {
                    a[idx(i, i - 3)] = T::zero();
                }
            }
            let mut k = m;
            while k + 1 <= nnu {
                if k != m {
                    p = a[idx(k, k - 1)];
                    q = a[idx(k + 1, k - 1)];
                    r = T::zero();
                    if k + 1 != nnu {
                        r = a[idx(k + 2, k - 1)];
                    }
                    x = p.abs() + q.abs() + r.abs();
                    if x != T::zero() {
                        p /= x;
                        q /= x;
                        r /= x;
                    }
                }
                let s = (p * p + q * q + r * r).sqrt().copysign(p);
                if s != T::zero() {
                    if k == m {
                        if l as usize != m {
                            a[idx(k, k - 1)] = -a[idx(k, k - 1)];
                        }
                    } else {
                        a[idx(k, k - 1)] = -s * x;
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    let z = r / s;
                    q /= p;
                    r /= p;
                    for j in k..=nnu {
                        let mut pp = a[idx(k, j)] + q * a[idx(k + 1, j)];
                        if k + 1 != nnu {
                            pp += r * a[idx(k + 2, j)];
                            a[idx(k + 2, j)] -= pp * z;
                        }
                        a[idx(k + 1, j)] -= pp * y;
                        a[idx(k, j)] -= pp * x;
                    }
                    let mmin = if nnu < k + 3 { nnu } else { k + 3 };
                    for i in lu..=mmin {
                        let mut pp = x * a[idx(i, k)] + y * a[idx(i, k + 1)];
                        if k + 1 != nnu {
                            pp += z * a[idx(i, k + 2)];
                            a[idx(i, k + 2)] -= pp * r;
                        }
                        a[idx(i, k + 1)] -= pp * q;
                        a[idx(i, k)] -= pp;
                    }
                }
                k += 1;
            }
            if l >= nn - 1 {
                break;
            }
        }
    }
    Ok(wr.into_iter().zip(wi).map(|(re, im)| cx(re, im)).collect())
}
