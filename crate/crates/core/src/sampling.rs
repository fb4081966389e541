//! Random group elements and flags for tests, probes and sweeps.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::decomp::PartialFlag;
use crate::linalg::{qr_positive, Matrix};
use crate::weyl::{CartanVector, ThetaSubset};

fn gaussian_matrix<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Matrix {
    let data = (0..d * d).map(|_| StandardNormal.sample(rng)).collect();
    Matrix::from_row_major(d, d, data).expect("d > 0")
}

/// Haar-distributed element of `SO(d)`.
pub fn haar_orthogonal<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Matrix {
    loop {
        let g = gaussian_matrix(d, rng);
        if let Ok((mut q, _)) = qr_positive(&g) {
            if q.det() < 0.0 {
                for i in 0..d {
                    q[(i, 0)] = -q[(i, 0)];
                }
            }
            return q;
        }
    }
}

/// `k_1 exp(H) k_2` with Haar `k_i` and `H` uniform in the box
/// `[-spread, spread]^d` projected to trace zero.
pub fn random_sl<R: Rng + ?Sized>(d: usize, spread: f64, rng: &mut R) -> Matrix {
    let h = CartanVector::projected((0..d).map(|_| rng.random_range(-spread..=spread)).collect());
    let k1 = haar_orthogonal(d, rng);
    let k2 = haar_orthogonal(d, rng);
    k1.matmul(&h.exp_diag()).matmul(&k2)
}

/// A Gaussian matrix rescaled to determinant one.
pub fn random_gaussian_sl<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Matrix {
    loop {
        let mut g = gaussian_matrix(d, rng);
        let det = g.det();
        if det.abs() < 1e-3 {
            continue;
        }
        if det < 0.0 {
            for j in 0..d {
                g[(0, j)] = -g[(0, j)];
            }
        }
        return g.scale(det.abs().powf(-1.0 / d as f64));
    }
}

/// A flag `k . P_theta` with Haar-random `k`.
pub fn random_flag<R: Rng + ?Sized>(theta: &ThetaSubset, rng: &mut R) -> PartialFlag {
    let k = haar_orthogonal(theta.dim(), rng);
    PartialFlag::from_frame(theta.clone(), &k).expect("orthogonal frame")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn samples_are_in_the_right_groups() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for d in 2..=6 {
            let k = haar_orthogonal(d, &mut rng);
            assert!((k.det() - 1.0).abs() < 1e-12);
            assert!(k.transpose().matmul(&k).sub(&Matrix::identity(d)).max_abs() < 1e-12);
            assert!((random_sl(d, 2.0, &mut rng).det() - 1.0).abs() < 1e-9);
            assert!((random_gaussian_sl(d, &mut rng).det() - 1.0).abs() < 1e-9);
        }
    }
}
