//! Real affine singularities of the Kippenhahn curve: points `(u₀, v₀)` with
//! `∇p(u₀, v₀, 1) = 0`.
//!
//! A grid of seeds over `[-radius, radius]²` is pushed through damped Newton
//! on `(p_u, p_v)` at `w = 1`; survivors are polished with Gauss–Newton on the
//! full gradient, filtered by `|p_w|`, deduplicated and sorted.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::nrpoly::{NilpotentCoefficients, TernaryQuartic};
use crate::scalar::{wrap_pi, wrap_two_pi, Real};

pub const DEFAULT_GRID_N: usize = 64;
pub const DEFAULT_NEWTON_TOL: f64 = 1e-10;
pub const MAX_NEWTON_STEPS: usize = 50;
pub const DEDUP_RADIUS: f64 = 1e-6;
/// `|det|` of the (u, v)-Hessian below this (relative) marks a degenerate singularity.
pub const DEGENERATE_HESSIAN_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Singularity<T: Real> {
    pub u0: T,
    pub v0: T,
    /// `‖∇p(u₀, v₀, 1)‖`.
    pub grad_residual: T,
    /// Distance from the origin to the line `u₀x + v₀y + 1 = 0`, `1/√(u₀² + v₀²)`.
    pub distance_to_origin_of_line: T,
    /// Direction angle of that line, in `[0, π)`.
    pub line_angle: T,
    /// `atan2(v₀, u₀)` in `[0, 2π)`.
    pub argument: T,
    /// The (u, v)-Hessian is numerically singular here.
    pub degenerate_hessian: bool,
}

impl<T: Real> Singularity<T> {
    pub fn at(p: &TernaryQuartic<T>, u0: T, v0: T) -> Self {
        let g = p.gradient(u0, v0, T::one());
        let (a11, a12, a22) = p.hessian_uv(u0, v0, T::one());
        let hscale = a11.abs().max(a12.abs()).max(a22.abs()).max(T::one());
        let det = a11 * a22 - a12 * a12;
        let r = (u0 * u0 + v0 * v0).sqrt();
        Self {
            u0,
            v0,
            grad_residual: (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt(),
            distance_to_origin_of_line: T::one() / r,
            line_angle: wrap_pi(v0.atan2(u0) + T::FRAC_PI_2()),
            argument: wrap_two_pi(v0.atan2(u0)),
            degenerate_hessian: det.abs() <= T::lit(DEGENERATE_HESSIAN_TOL) * hscale * hscale,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SearchOptions {
    pub radius: f64,
    pub grid_n: usize,
    pub tol: f64,
    pub max_newton_steps: usize,
    pub dedup_radius: f64,
}

impl SearchOptions {
    pub fn new(radius: f64) -> Self {
        Self {
            radius,
            grid_n: DEFAULT_GRID_N,
            tol: DEFAULT_NEWTON_TOL,
            max_newton_steps: MAX_NEWTON_STEPS,
            dedup_radius: DEDUP_RADIUS,
        }
    }
}

/// Scaled gradient residual: `‖∇p‖ / max(1, ‖∇|p|‖)` at `w = 1`.
fn scaled_residual<T: Real>(p: &TernaryQuartic<T>, u: T, v: T) -> T {
    let g = p.gradient(u, v, T::one());
    let ga = p.gradient_abs(u, v, T::one());
    let scale = (ga[0] * ga[0] + ga[1] * ga[1] + ga[2] * ga[2]).sqrt().max(T::one());
    (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt() / scale
}

fn uv_residual<T: Real>(p: &TernaryQuartic<T>, u: T, v: T) -> T {
    let g = p.gradient(u, v, T::one());
    (g[0] * g[0] + g[1] * g[1]).sqrt()
}

/// Damped Newton on `(p_u, p_v)` at `w = 1`.
fn newton_uv<T: Real>(p: &TernaryQuartic<T>, mut u: T, mut v: T, steps: usize, tol: T) -> (T, T) {
    let mut res = uv_residual(p, u, v);
    for _ in 0..steps {
        if res <= tol {
            break;
        }
        let g = p.gradient(u, v, T::one());
        let (a11, a12, a22) = p.hessian_uv(u, v, T::one());
        let det = a11 * a22 - a12 * a12;
        let hscale = a11.abs().max(a12.abs()).max(a22.abs());
        let (du, dv) = if det.abs() > T::lit(DEGENERATE_HESSIAN_TOL) * hscale * hscale && hscale > T::zero() {
            ((a22 * g[0] - a12 * g[1]) / det, (a11 * g[1] - a12 * g[0]) / det)
        } else {
            // Levenberg–Marquardt step on the symmetric Jacobian
            let mu = hscale.max(T::one()) * T::lit(1e-6);
            let b11 = a11 * a11 + a12 * a12 + mu;
            let b12 = a11 * a12 + a12 * a22;
            let b22 = a12 * a12 + a22 * a22 + mu;
            let r1 = a11 * g[0] + a12 * g[1];
            let r2 = a12 * g[0] + a22 * g[1];
            let d = b11 * b22 - b12 * b12;
            if d == T::zero() {
                break;
            }
            ((b22 * r1 - b12 * r2) / d, (b11 * r2 - b12 * r1) / d)
        };
        let mut lambda = T::one();
        let mut improved = false;
        for _ in 0..30 {
            let (nu, nv) = (u - lambda * du, v - lambda * dv);
            let nres = uv_residual(p, nu, nv);
            if nres.is_finite() && nres < res {
                u = nu;
                v = nv;
                res = nres;
                improved = true;
                break;
            }
            lambda = lambda * T::lit(0.5);
        }
        if !improved {
            break;
        }
    }
    (u, v)
}

/// Gauss–Newton on the full gradient `(p_u, p_v, p_w)` at `w = 1`.
fn polish_full<T: Real>(p: &TernaryQuartic<T>, mut u: T, mut v: T, steps: usize) -> (T, T) {
    let norm3 = |g: [T; 3]| (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt();
    let mut res = norm3(p.gradient(u, v, T::one()));
    for _ in 0..steps {
        let g = p.gradient(u, v, T::one());
        let h = p.hessian(u, v, T::one());
        // J rows: ∂(p_u, p_v, p_w)/∂(u, v)
        let j = [[h[0][0], h[0][1]], [h[1][0], h[1][1]], [h[2][0], h[2][1]]];
        let mut n11 = T::zero();
        let mut n12 = T::zero();
        let mut n22 = T::zero();
        let mut r1 = T::zero();
        let mut r2 = T::zero();
        for k in 0..3 {
            n11 += j[k][0] * j[k][0];
            n12 += j[k][0] * j[k][1];
            n22 += j[k][1] * j[k][1];
            r1 += j[k][0] * g[k];
            r2 += j[k][1] * g[k];
        }
        let d = n11 * n22 - n12 * n12;
        if d.abs() <= T::epsilon() * (n11 * n22).abs() || d == T::zero() {
            break;
        }
        let du = (n22 * r1 - n12 * r2) / d;
        let dv = (n11 * r2 - n12 * r1) / d;
        let (nu, nv) = (u - du, v - dv);
        let nres = norm3(p.gradient(nu, nv, T::one()));
        if !(nres < res) {
            break;
        }
        u = nu;
        v = nv;
        res = nres;
    }
    (u, v)
}

/// Real affine singular points of `p` within (and seeded from) `[-radius, radius]²`.
pub fn find_real_singularities<T: Real>(p: &TernaryQuartic<T>, radius: T, grid_n: usize, tol: T) -> Vec<Singularity<T>> {
    let mut opts = SearchOptions::new(radius.to_f64_lossy());
    opts.grid_n = grid_n;
    opts.tol = tol.to_f64_lossy();
    find_real_singularities_with(p, &opts)
}

pub fn find_real_singularities_with<T: Real>(p: &TernaryQuartic<T>, opts: &SearchOptions) -> Vec<Singularity<T>> {
    assert!(opts.radius > 0.0, "search radius must be positive");
    assert!(opts.grid_n >= 8, "grid must have at least 8 points per side");
    assert!(opts.tol > 0.0, "tolerance must be positive");
    let n = opts.grid_n;
    let radius = T::lit(opts.radius);
    let tol = T::lit(opts.tol);
    let newton_tol = tol * T::lit(1e-3);
    let step = (radius + radius) / T::lit((n - 1) as f64);
    // Candidate filter before polishing; anything this far from singular is a
    // plain critical point of p(u, v, 1).
    let loose = T::lit(1e-4);

    let candidates: Vec<Option<(T, T)>> = (0..n * n)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / n, idx % n);
            let u0 = -radius + step * T::lit(i as f64);
            let v0 = -radius + step * T::lit(j as f64);
            let (u, v) = newton_uv(p, u0, v0, opts.max_newton_steps, newton_tol);
            if !(u.is_finite() && v.is_finite()) || scaled_residual(p, u, v) > loose {
                return None;
            }
            let (u, v) = polish_full(p, u, v, 8);
            (scaled_residual(p, u, v) <= tol).then_some((u, v))
        })
        .collect();

    let dedup = T::lit(opts.dedup_radius);
    let mut found: Vec<(T, T)> = Vec::new();
    for (u, v) in candidates.into_iter().flatten() {
        if u * u + v * v == T::zero() {
            // p_w(0, 0, 1) = 4, never singular; guards the line normalization
            continue;
        }
        if !found.iter().any(|&(a, b)| ((a - u) * (a - u) + (b - v) * (b - v)).sqrt() <= dedup) {
            found.push((u, v));
        }
    }
    let mut out: Vec<Singularity<T>> = found.into_iter().map(|(u, v)| Singularity::at(p, u, v)).collect();
    out.sort_by(|a, b| {
        let ra = a.u0 * a.u0 + a.v0 * a.v0;
        let rb = b.u0 * b.u0 + b.v0 * b.v0;
        a.argument
            .partial_cmp(&b.argument)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(ra.partial_cmp(&rb).unwrap_or(std::cmp::Ordering::Equal))
    });
    out
}

/// Rows of the linear system in `(c1, …, c6 | rhs)` that a singularity of the
/// nilpotent polynomial at `(u, v, 1)` imposes.
pub fn singularity_system<T: Real>(u: T, v: T) -> [[T; 7]; 3] {
    let two = T::lit(2.0);
    let three = T::lit(3.0);
    let four = T::lit(4.0);
    let (u2, v2) = (u * u, v * v);
    [
        [
            four * u2 * u + two * v2 * u,
            v2 * v + three * u2 * v,
            three * u2 + v2,
            two * u * v2,
            two * u,
            two * u * v,
            T::zero(),
        ],
        [
            two * u2 * v,
            u2 * u + three * v2 * u,
            two * u * v,
            four * v2 * v + two * u2 * v,
            two * v,
            u2 + three * v2,
            T::zero(),
        ],
        [
            T::zero(),
            T::zero(),
            u2 * u + v2 * u,
            T::zero(),
            two * u2 + two * v2,
            v2 * v + u2 * v,
            -four,
        ],
    ]
}

/// Checks the three linear singularity equations for `c` at `(u0, v0, 1)`.
pub fn check_coefficient_consistency<T: Real>(c: &NilpotentCoefficients<T>, u0: T, v0: T, tol: T) -> bool {
    assert!(u0 != T::zero() || v0 != T::zero(), "(u0, v0) must be nonzero");
    let cs = c.as_array();
    singularity_system(u0, v0).iter().all(|row| {
        let lhs: T = (0..6).map(|i| row[i] * cs[i]).sum();
        let scale: T = (0..6).map(|i| (row[i] * cs[i]).abs()).sum::<T>() + row[6].abs();
        (lhs - row[6]).abs() <= tol * scale.max(T::one())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ComplexSquareMatrix;
    use crate::nrpoly::{nr_poly_general, nr_poly_nilpotent};

    #[test]
    fn jordan_block_has_no_singularities() {
        let j = ComplexSquareMatrix::<f64>::jordan_block(4);
        let p = nr_poly_general(&j).unwrap();
        let s = find_real_singularities(&p, 8.0, 64, 1e-10);
        assert!(s.is_empty(), "{s:?}");
        let c = nr_poly_nilpotent(&j).unwrap();
        assert!(!check_coefficient_consistency(&c, 1.0, 1.0, 1e-9));
    }

    #[test]
    fn w4_has_no_singularities() {
        let p = TernaryQuartic::<f64>::w4();
        assert!(find_real_singularities(&p, 100.0, 16, 1e-10).is_empty());
    }

    #[test]
    fn product_of_lines_square() {
        // (1 − u²)(1 − v²) homogenized: the polynomial of diag(1, i, −1, −i)
        let a = ComplexSquareMatrix::<f64>::diagonal(&[
            crate::scalar::cx(1.0, 0.0),
            crate::scalar::cx(0.0, 1.0),
            crate::scalar::cx(-1.0, 0.0),
            crate::scalar::cx(0.0, -1.0),
        ]);
        let p = nr_poly_general(&a).unwrap();
        let s = find_real_singularities(&p, 3.0, 32, 1e-10);
        assert_eq!(s.len(), 4, "{s:?}");
        for x in &s {
            assert!((x.u0.abs() - 1.0).abs() < 1e-9 && (x.v0.abs() - 1.0).abs() < 1e-9);
            assert!((x.distance_to_origin_of_line - 0.5f64.sqrt()).abs() < 1e-9);
        }
        // sorted by argument
        assert!(s.windows(2).all(|w| w[0].argument <= w[1].argument));
    }
}
