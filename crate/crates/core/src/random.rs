//! Seeded random matrix generators used by property checks and the verify suites.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::ComplexSquareMatrix;
use crate::scalar::{cx, Cx, Real};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform sample from the closed complex unit disk.
pub fn unit_disk<T: Real, R: Rng>(rng: &mut R) -> Cx<T> {
    let r: f64 = rng.random::<f64>().sqrt();
    let t: f64 = rng.random::<f64>() * std::f64::consts::TAU;
    cx(T::lit(r * t.cos()), T::lit(r * t.sin()))
}

pub fn gaussian_complex<T: Real, R: Rng>(rng: &mut R) -> Cx<T> {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    cx(T::lit(re), T::lit(im))
}

/// Strictly upper-triangular matrix with entries uniform in the unit disk.
pub fn strictly_upper<T: Real, R: Rng>(rng: &mut R, dim: usize) -> ComplexSquareMatrix<T> {
    let mut m = ComplexSquareMatrix::zeros(dim);
    for i in 0..dim {
        for j in (i + 1)..dim {
            m.set(i, j, unit_disk(rng));
        }
    }
    m
}

/// Real strictly upper-triangular matrix with entries uniform in `[-1, 1]`.
pub fn strictly_upper_real<T: Real, R: Rng>(rng: &mut R, dim: usize) -> ComplexSquareMatrix<T> {
    let mut m = ComplexSquareMatrix::zeros(dim);
    for i in 0..dim {
        for j in (i + 1)..dim {
            m.set(i, j, cx(T::lit(rng.random_range(-1.0..=1.0)), T::zero()));
        }
    }
    m
}

/// Matrix with independent standard complex Gaussian entries.
pub fn gaussian_matrix<T: Real, R: Rng>(rng: &mut R, dim: usize) -> ComplexSquareMatrix<T> {
    let entries = (0..dim * dim).map(|_| gaussian_complex(rng)).collect();
    ComplexSquareMatrix::from_row_major(dim, entries).expect("dim² entries")
}

/// Unitary matrix from the QR (modified Gram–Schmidt) factor of a Gaussian matrix.
pub fn unitary<T: Real, R: Rng>(rng: &mut R, dim: usize) -> ComplexSquareMatrix<T> {
    let g = gaussian_matrix::<T, R>(rng, dim);
    let mut cols: Vec<Vec<Cx<T>>> = (0..dim).map(|j| (0..dim).map(|i| g.get(i, j)).collect()).collect();
    for j in 0..dim {
        for k in 0..j {
            let dot: Cx<T> = (0..dim).map(|i| cols[k][i].conj() * cols[j][i]).fold(Cx::new(T::zero(), T::zero()), |a, b| a + b);
            for i in 0..dim {
                let t = cols[k][i] * dot;
                cols[j][i] = cols[j][i] - t;
            }
        }
        let nrm = cols[j].iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
        for z in &mut cols[j] {
            *z = *z / nrm;
        }
    }
    let mut u = ComplexSquareMatrix::zeros(dim);
    for (j, col) in cols.iter().enumerate() {
        for (i, &z) in col.iter().enumerate() {
            u.set(i, j, z);
        }
    }
    u
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unitary_is_unitary() {
        let mut r = rng(7);
        let u = unitary::<f64, _>(&mut r, 4);
        let g = u.adjoint().mul(&u);
        assert!(g.max_abs_diff(&ComplexSquareMatrix::identity(4)) < 1e-13);
    }

    #[test]
    fn seeded_is_reproducible() {
        let a = strictly_upper::<f64, _>(&mut rng(3), 4);
        let b = strictly_upper::<f64, _>(&mut rng(3), 4);
        assert_eq!(a, b);
        assert!(a.is_strictly_upper_triangular());
        assert!(a.entries().iter().all(|z| z.norm() <= 1.0));
    }
}
