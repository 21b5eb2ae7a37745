//! Support-function sampling of `∂W(A)`.
//!
//! For each `φ` the largest eigenvalue of `Re(e^{-iφ}A)` is the support value
//! `h(φ)` and `⟨Aξ, ξ⟩` for a unit top eigenvector `ξ` is a boundary point
//! with outward normal `(cos φ, sin φ)`. The resulting polygon is inscribed in
//! `W(A)` and serves as the reference every closed-form result is checked
//! against.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{NrError, Result};
use crate::flatdetect::{rotated_parts, FlatPortion, FlatSource};
use crate::linalg::{eig_hermitian, ComplexSquareMatrix, HermitianMatrix};
use crate::scalar::{wrap_two_pi, Cx, Real};

pub const MIN_SAMPLES: usize = 64;
/// Eigen gap (relative to `‖A‖`) below which both extreme points are emitted.
pub const DEGENERATE_GAP: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundarySample<T: Real> {
    pub phi: T,
    pub support_value: T,
    pub point: [T; 2],
    pub eigen_gap: T,
}

/// Closed polygon with the outward normal angle at which each vertex was sampled.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Polyline<T: Real> {
    pub vertices: Vec<[T; 2]>,
    pub normals: Vec<T>,
}

fn dot<T: Real>(a: [T; 2], b: [T; 2]) -> T {
    a[0] * b[0] + a[1] * b[1]
}

fn sub<T: Real>(a: [T; 2], b: [T; 2]) -> [T; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

fn norm2<T: Real>(a: [T; 2]) -> T {
    dot(a, a).sqrt()
}

fn point_segment_distance<T: Real>(p: [T; 2], a: [T; 2], b: [T; 2]) -> T {
    let ab = sub(b, a);
    let len2 = dot(ab, ab);
    let ap = sub(p, a);
    if len2 == T::zero() {
        return norm2(ap);
    }
    let t = (dot(ap, ab) / len2).max(T::zero()).min(T::one());
    norm2([ap[0] - t * ab[0], ap[1] - t * ab[1]])
}

impl<T: Real> Polyline<T> {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Edges `(v_i, v_{i+1})`, closing the loop.
    pub fn edges(&self) -> impl Iterator<Item = ([T; 2], [T; 2])> + '_ {
        let m = self.vertices.len();
        (0..m).map(move |i| (self.vertices[i], self.vertices[(i + 1) % m]))
    }

    /// `max_i ⟨v_i, (cos φ, sin φ)⟩`.
    pub fn support(&self, phi: T) -> T {
        let n = [phi.cos(), phi.sin()];
        self.vertices.iter().map(|&v| dot(v, n)).fold(T::neg_infinity(), T::max)
    }

    /// Every turn is counter-clockwise up to `tol` (cross products ≥ −tol·scale²... scaled by edge lengths).
    pub fn is_convex(&self, tol: T) -> bool {
        let m = self.vertices.len();
        if m < 3 {
            return true;
        }
        // drop repeated vertices (corners are sampled repeatedly)
        let mut pts: Vec<[T; 2]> = Vec::with_capacity(m);
        for &v in &self.vertices {
            if pts.last().is_none_or(|&l| norm2(sub(v, l)) > tol) {
                pts.push(v);
            }
        }
        while pts.len() > 1 && norm2(sub(pts[0], *pts.last().unwrap())) <= tol {
            pts.pop();
        }
        let k = pts.len();
        if k < 3 {
            return true;
        }
        (0..k).all(|i| {
            let a = pts[i];
            let b = pts[(i + 1) % k];
            let c = pts[(i + 2) % k];
            let ab = sub(b, a);
            let bc = sub(c, b);
            let cross = ab[0] * bc[1] - ab[1] * bc[0];
            // deviation of c to the right of line ab
            cross >= -tol * norm2(ab)
        })
    }

    /// Distance from `p` to the polygon boundary.
    pub fn distance_to_boundary(&self, p: [T; 2]) -> T {
        self.edges()
            .map(|(a, b)| point_segment_distance(p, a, b))
            .fold(T::infinity(), T::min)
    }

    /// `p` lies in the polygon expanded by `margin` (negative shrinks).
    pub fn contains(&self, p: [T; 2], margin: T) -> bool {
        self.edges().all(|(a, b)| {
            let e = sub(b, a);
            let len = norm2(e);
            if len == T::zero() {
                return true;
            }
            // outward normal of a counter-clockwise edge
            let n = [e[1] / len, -e[0] / len];
            dot(sub(p, a), n) <= margin
        })
    }

    /// Largest distance of a vertex from the origin.
    pub fn circumradius(&self) -> T {
        self.vertices.iter().map(|&v| norm2(v)).fold(T::zero(), T::max)
    }

    /// Smallest distance from the origin to an edge line (0 when the origin is outside).
    pub fn inradius(&self) -> T {
        let mut r = T::infinity();
        for (a, b) in self.edges() {
            let e = sub(b, a);
            let len = norm2(e);
            if len == T::zero() {
                continue;
            }
            let n = [e[1] / len, -e[0] / len];
            r = r.min(dot(a, n));
        }
        if r.is_finite() {
            r.max(T::zero())
        } else {
            T::zero()
        }
    }

    /// Largest distance between any vertex and the centroid of the vertices.
    pub fn extent(&self) -> T {
        if self.vertices.is_empty() {
            return T::zero();
        }
        let m = T::lit(self.vertices.len() as f64);
        let c = [
            self.vertices.iter().map(|v| v[0]).sum::<T>() / m,
            self.vertices.iter().map(|v| v[1]).sum::<T>() / m,
        ];
        self.vertices.iter().map(|&v| norm2(sub(v, c))).fold(T::zero(), T::max)
    }

    /// Reflection about the line through the origin with direction `angle`.
    pub fn reflected(&self, angle: T) -> Self {
        let two = T::lit(2.0);
        let (s, c) = (two * angle).sin_cos();
        let vertices = self.vertices.iter().map(|v| [c * v[0] + s * v[1], s * v[0] - c * v[1]]).collect();
        let normals = self.normals.iter().map(|&p| wrap_two_pi(two * angle - p)).collect();
        Self { vertices, normals }
    }
}

/// Largest eigenvalue of `Re(e^{-iφ}A)`.
pub fn support_function<T: Real>(a: &ComplexSquareMatrix<T>, phi: T) -> Result<T> {
    let (h, _) = rotated_parts(a, phi);
    let e = eig_hermitian(&h)?;
    Ok(*e.values.last().unwrap_or(&T::zero()))
}

fn quad_point<T: Real>(a: &ComplexSquareMatrix<T>, xi: &[Cx<T>]) -> [T; 2] {
    let z = a.quadratic_form(xi);
    [z.re, z.im]
}

/// Support value at `φ` and the two extreme points of `W(A)` on the support
/// line, ordered counter-clockwise. The top eigenspace is the cluster of
/// eigenvalues within `gap_tol` of the largest; the extremes come from the
/// compression of `Im(e^{-iφ}A)` to it.
pub fn support_extreme_points<T: Real>(a: &ComplexSquareMatrix<T>, phi: T, gap_tol: T) -> Result<(T, [T; 2], [T; 2])> {
    let (re, im) = rotated_parts(a, phi);
    let e = eig_hermitian(&re)?;
    let n = e.values.len();
    if n == 0 {
        return Err(NrError::Shape("empty matrix".into()));
    }
    let top = e.values[n - 1];
    let cluster: Vec<usize> = (0..n).filter(|&k| top - e.values[k] <= gap_tol).collect();
    let m = cluster.len();
    let h = cluster.iter().map(|&k| e.values[k]).sum::<T>() / T::lit(m as f64);
    if m == 1 {
        let p = quad_point(a, &e.vectors[n - 1]);
        return Ok((h, p, p));
    }
    // compression Q* Im(e^{-iφ}A) Q
    let mut c = ComplexSquareMatrix::zeros(m);
    for (i, &ki) in cluster.iter().enumerate() {
        for (j, &kj) in cluster.iter().enumerate() {
            let qi = &e.vectors[ki];
            let qj = &e.vectors[kj];
            let mut acc = Cx::new(T::zero(), T::zero());
            for r in 0..n {
                for s in 0..n {
                    acc += qi[r].conj() * im.get(r, s) * qj[s];
                }
            }
            c.set(i, j, acc);
        }
    }
    let ce = eig_hermitian(&HermitianMatrix::from_matrix(&c))?;
    let lift = |y: &[Cx<T>]| -> Vec<Cx<T>> {
        (0..n)
            .map(|r| {
                cluster
                    .iter()
                    .enumerate()
                    .fold(Cx::new(T::zero(), T::zero()), |acc, (i, &k)| acc + e.vectors[k][r] * y[i])
            })
            .collect()
    };
    let lo = quad_point(a, &lift(&ce.vectors[0]));
    let hi = quad_point(a, &lift(&ce.vectors[m - 1]));
    Ok((h, lo, hi))
}

/// Samples `∂W(A)` at `n` uniform angles.
///
/// At angles where the top eigenvalue is degenerate both extreme points of
/// the support segment are emitted, so the sample list may be longer than `n`.
pub fn sample_boundary<T: Real>(a: &ComplexSquareMatrix<T>, n: usize) -> Result<(Polyline<T>, Vec<BoundarySample<T>>)> {
    if n < MIN_SAMPLES {
        return Err(NrError::Domain(format!("boundary sampling needs n >= {MIN_SAMPLES} (got {n})")));
    }
    let norm = a.operator_norm();
    let gap_tol = T::lit(DEGENERATE_GAP) * norm;
    let dphi = T::TAU() / T::lit(n as f64);
    let per_phi: Vec<Result<Vec<BoundarySample<T>>>> = (0..n)
        .into_par_iter()
        .map(|k| {
            let phi = dphi * T::lit(k as f64);
            let (re, _) = rotated_parts(a, phi);
            let e = eig_hermitian(&re)?;
            let m = e.values.len();
            let gap = if m >= 2 {
                e.values[m - 1] - e.values[m - 2]
            } else {
                T::infinity()
            };
            if gap <= gap_tol && norm > T::zero() {
                let (h, p1, p2) = support_extreme_points(a, phi, gap_tol)?;
                Ok(vec![
                    BoundarySample { phi, support_value: h, point: p1, eigen_gap: gap },
                    BoundarySample { phi, support_value: h, point: p2, eigen_gap: gap },
                ])
            } else {
                Ok(vec![BoundarySample {
                    phi,
                    support_value: e.values[m - 1],
                    point: quad_point(a, &e.vectors[m - 1]),
                    eigen_gap: gap,
                }])
            }
        })
        .collect();
    let mut samples = Vec::with_capacity(n + 8);
    for r in per_phi {
        samples.extend(r?);
    }
    let poly = Polyline {
        vertices: samples.iter().map(|s| s.point).collect(),
        normals: samples.iter().map(|s| s.phi).collect(),
    };
    Ok((poly, samples))
}

/// Tunables for [`extract_flats_geometric`].
#[derive(Clone, Copy, Debug)]
pub struct GeometricOptions {
    /// A flat edge must be this many times longer than both neighbouring edges.
    pub jump_ratio: f64,
    /// Collinearity tolerance relative to the polygon extent.
    pub collinear_tol: f64,
    /// Minimal flat length relative to the polygon extent.
    pub min_length: f64,
}

impl Default for GeometricOptions {
    fn default() -> Self {
        Self {
            jump_ratio: 4.0,
            collinear_tol: 1e-6,
            min_length: 1e-6,
        }
    }
}

fn unit<T: Real>(angle: T) -> [T; 2] {
    [angle.cos(), angle.sin()]
}

/// Signed angle `a − b` wrapped into `(−π, π]`.
fn angle_diff<T: Real>(a: T, b: T) -> T {
    let d = wrap_two_pi(a - b);
    if d > T::PI() {
        d - T::TAU()
    } else {
        d
    }
}

/// Flat portions read off the sampled polygon.
///
/// A flat shows up as an edge much longer than its neighbours (the support
/// point jumps across the segment between consecutive angles). Its endpoints
/// are recovered by continuing the adjacent arcs, modelled as circles with
/// the radius of curvature of the neighbouring edge, up to the normal of the
/// flat.
pub fn extract_flats_geometric<T: Real>(poly: &Polyline<T>, opts: &GeometricOptions) -> Vec<FlatPortion<T>> {
    let m = poly.len();
    if m < 4 || poly.normals.len() != m {
        return Vec::new();
    }
    let extent = poly.extent();
    if extent == T::zero() {
        return Vec::new();
    }
    let ratio = T::lit(opts.jump_ratio);
    let col_tol = T::lit(opts.collinear_tol) * extent;
    let min_len = T::lit(opts.min_length) * extent;
    let v = &poly.vertices;
    let len: Vec<T> = (0..m).map(|i| norm2(sub(v[(i + 1) % m], v[i]))).collect();
    let span: Vec<T> = (0..m)
        .map(|i| wrap_two_pi(poly.normals[(i + 1) % m] - poly.normals[i]))
        .collect();
    let next = |i: usize| (i + 1) % m;
    let prev = |i: usize| (i + m - 1) % m;

    let mut covered = vec![false; m];
    let mut out = Vec::new();
    for i in 0..m {
        if covered[i] || len[i] <= min_len {
            continue;
        }
        if len[i] < ratio * len[prev(i)].max(len[next(i)]) && !(len[prev(i)] <= min_len && len[next(i)] <= min_len) {
            continue;
        }
        let seed_len = len[i];
        let (a, b) = (v[i], v[next(i)]);
        let dir = sub(b, a);
        let nrm = [dir[1] / seed_len, -dir[0] / seed_len];
        let off = |p: [T; 2]| dot(sub(p, a), nrm).abs();
        let long = |j: usize| len[j] * ratio >= seed_len;
        // grow across further long collinear edges
        let mut s = i;
        let mut e_edge = i;
        for _ in 0..m {
            let j = prev(s);
            if j == e_edge || covered[j] || !long(j) || off(v[j]) > col_tol {
                break;
            }
            s = j;
        }
        for _ in 0..m {
            let j = next(e_edge);
            if j == s || covered[j] || !long(j) || off(v[next(j)]) > col_tol {
                break;
            }
            e_edge = j;
        }
        let mut j = s;
        loop {
            covered[j] = true;
            if j == e_edge {
                break;
            }
            j = next(j);
        }
        let start = s;
        let end = next(e_edge);
        let (vs, ve) = (v[start], v[end]);
        let chord = sub(ve, vs);
        let clen = norm2(chord);
        let psi = chord[1].atan2(chord[0]) - T::FRAC_PI_2();
        let n_star = unit(psi);

        // radius of curvature of the arc leading into a flat endpoint
        let radius = |edge: usize| -> T {
            let dpsi = span[edge];
            if len[edge] * ratio >= seed_len || dpsi <= T::zero() {
                T::zero()
            } else {
                len[edge] / (T::lit(2.0) * (dpsi / T::lit(2.0)).sin())
            }
        };
        let extend = |p: [T; 2], psi_p: T, rho: T, forward: bool| -> [T; 2] {
            let mut delta = angle_diff(psi, psi_p);
            if !forward {
                delta = -delta;
            }
            if delta <= T::zero() || rho == T::zero() {
                return p;
            }
            let np = unit(psi_p);
            [p[0] + rho * (n_star[0] - np[0]), p[1] + rho * (n_star[1] - np[1])]
        };
        let e1 = extend(vs, poly.normals[start], radius(prev(start)), true);
        let e2 = extend(ve, poly.normals[end], radius(end), false);
        let h = (dot(e1, n_star) + dot(e2, n_star)) / T::lit(2.0);
        let project = |p: [T; 2]| {
            let r = dot(p, n_star) - h;
            [p[0] - r * n_star[0], p[1] - r * n_star[1]]
        };
        let (e1, e2) = (project(e1), project(e2));
        if clen > min_len {
            out.push(FlatPortion::from_support(wrap_two_pi(psi), h, e1, e2, FlatSource::Geometric));
        }
    }
    out.sort_by(|x, y| x.normal_angle.partial_cmp(&y.normal_angle).unwrap_or(std::cmp::Ordering::Equal));
    out
}

/// Half-width (in vertices) of the neighbourhood searched around the vertex with matching normal.
pub const HAUSDORFF_WINDOW: usize = 16;

/// One-sided Hausdorff distance from the vertices of `from` to the edges of `to`.
///
/// When both polylines carry normal angles, each vertex is first compared
/// with the edges of `to` near the vertex of matching normal, and all edges
/// are scanned only if that distance exceeds `10⁻³·extent`. Restricting the
/// candidate set can only overestimate a distance, so small results are upper
/// bounds of the exact vertex-to-edge value and large ones are exact.
pub fn directed_hausdorff<T: Real>(from: &Polyline<T>, to: &Polyline<T>) -> T {
    let m = to.len();
    if m == 0 || from.is_empty() {
        return T::zero();
    }
    let indexed = from.normals.len() == from.len() && to.normals.len() == m && m > 4 * HAUSDORFF_WINDOW;
    if !indexed {
        return from
            .vertices
            .par_iter()
            .map(|&p| to.distance_to_boundary(p))
            .reduce(|| T::zero(), T::max);
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| wrap_two_pi(to.normals[a]).total_cmp_t(&wrap_two_pi(to.normals[b])));
    let keys: Vec<T> = order.iter().map(|&i| wrap_two_pi(to.normals[i])).collect();
    let full_scan_above = T::lit(1e-3) * to.extent();
    from.vertices
        .par_iter()
        .zip(from.normals.par_iter())
        .map(|(&p, &psi)| {
            let psi = wrap_two_pi(psi);
            let pos = keys.partition_point(|&k| k < psi);
            let mut best = T::infinity();
            for off in 0..=2 * HAUSDORFF_WINDOW {
                let j = order[(pos + m + off - HAUSDORFF_WINDOW) % m];
                let (a, b, c) = (to.vertices[(j + m - 1) % m], to.vertices[j], to.vertices[(j + 1) % m]);
                best = best.min(point_segment_distance(p, a, b)).min(point_segment_distance(p, b, c));
            }
            if best > full_scan_above {
                best = to.distance_to_boundary(p);
            }
            best
        })
        .reduce(|| T::zero(), T::max)
}

trait TotalCmp {
    fn total_cmp_t(&self, other: &Self) -> std::cmp::Ordering;
}

impl<T: Real> TotalCmp for T {
    fn total_cmp_t(&self, other: &Self) -> std::cmp::Ordering {
        self.partial_cmp(other).unwrap_or(std::cmp::Ordering::Equal)
    }
}

/// Symmetric Hausdorff distance between two closed polylines (vertices to edges, both ways).
pub fn hausdorff<T: Real>(a: &Polyline<T>, b: &Polyline<T>) -> T {
    directed_hausdorff(a, b).max(directed_hausdorff(b, a))
}

/// Hausdorff distance between the polyline and its reflection about the line
/// through the origin with direction `line_angle`.
pub fn check_symmetry<T: Real>(poly: &Polyline<T>, line_angle: T) -> T {
    hausdorff(poly, &poly.reflected(line_angle))
}

/// Worst-case gap between `∂W(A)` and the inscribed polygon at `n` uniform angles, `‖A‖(1 − cos(2π/n))`.
pub fn discretization_bound<T: Real>(norm: T, n: usize) -> T {
    norm * (T::one() - (T::TAU() / T::lit(n as f64)).cos())
}

/// CSV export with header `phi,support,x,y,gap`.
pub fn samples_to_csv<T: Real>(samples: &[BoundarySample<T>]) -> String {
    let mut s = String::from("phi,support,x,y,gap\n");
    let f = |x: T| crate::io::format_float(x.to_f64_lossy());
    for b in samples {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            f(b.phi),
            f(b.support_value),
            f(b.point[0]),
            f(b.point[1]),
            f(b.eigen_gap)
        );
    }
    s
}

/// SVG drawing of the boundary, its flats and an optional symmetry axis.
pub fn to_svg<T: Real>(poly: &Polyline<T>, flats: &[FlatPortion<T>], symmetry_axis: Option<T>) -> String {
    let pts: Vec<(f64, f64)> = poly
        .vertices
        .iter()
        .map(|v| (v[0].to_f64_lossy(), -v[1].to_f64_lossy()))
        .collect();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in &pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 0.0, 0.0, 0.0);
    }
    let w = (x1 - x0).max(y1 - y0).max(1e-9);
    let margin = 0.1 * w;
    let (vx, vy) = (x0 - margin, y0 - margin);
    let (vw, vh) = (x1 - x0 + 2.0 * margin, y1 - y0 + 2.0 * margin);
    let (vw, vh) = (vw.max(2.0 * margin), vh.max(2.0 * margin));
    let stroke = 0.004 * w;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{vx:.6} {vy:.6} {vw:.6} {vh:.6}" width="600" height="{:.0}">"#,
        600.0 * vh / vw
    );
    if let Some(angle) = symmetry_axis {
        let (sa, ca) = (angle.to_f64_lossy().sin(), angle.to_f64_lossy().cos());
        let r = 2.0 * (vw + vh);
        let _ = writeln!(
            s,
            r##"<line x1="{:.6}" y1="{:.6}" x2="{:.6}" y2="{:.6}" stroke="#555" stroke-width="{stroke:.6}" stroke-dasharray="{:.6} {:.6}"/>"##,
            -r * ca,
            r * sa,
            r * ca,
            -r * sa,
            4.0 * stroke,
            3.0 * stroke
        );
    }
    if !pts.is_empty() {
        let mut d = String::new();
        for (k, (x, y)) in pts.iter().enumerate() {
            let _ = write!(d, "{}{x:.6},{y:.6} ", if k == 0 { "M" } else { "L" });
        }
        d.push('Z');
        let _ = writeln!(
            s,
            r##"<path d="{d}" fill="#dde8f5" stroke="#1f4e9a" stroke-width="{stroke:.6}"/>"##
        );
    }
    for f in flats {
        let (ax, ay) = (f.endpoint1[0].to_f64_lossy(), -f.endpoint1[1].to_f64_lossy());
        let (bx, by) = (f.endpoint2[0].to_f64_lossy(), -f.endpoint2[1].to_f64_lossy());
        let _ = writeln!(
            s,
            r##"<line x1="{ax:.6}" y1="{ay:.6}" x2="{bx:.6}" y2="{by:.6}" stroke="#c0392b" stroke-width="{:.6}"/>"##,
            2.0 * stroke
        );
        for (px, py) in [(ax, ay), (bx, by)] {
            let _ = writeln!(
                s,
                r##"<circle cx="{px:.6}" cy="{py:.6}" r="{:.6}" fill="#8e44ad"/>"##,
                3.0 * stroke
            );
        }
    }
    s.push_str("</svg>\n");
    s
}
