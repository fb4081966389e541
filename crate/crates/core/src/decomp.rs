//! Cartan projection, KAK decomposition, flag projections and Iwasawa
//! cocycles for `SL(d, R)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    complete_orthonormal, orthonormalize_columns, qr_positive, subspace_distance, svd, Matrix,
};
use crate::weyl::{chamber_margin, partial_projection, CartanVector, ThetaSubset};

/// Default regularity tolerance for [`flag_projection`].
pub const DEFAULT_MARGIN_TOL: f64 = 1e-6;

/// Tolerance on `det g = 1` when a matrix enters the library as a group element.
pub const DET_TOL: f64 = 1e-9;

/// Checks that `g` is a finite square matrix with determinant one.
pub fn validate_special_linear(g: &Matrix) -> Result<()> {
    if !g.is_square() {
        return Err(Error::Shape(format!("{}x{} is not square", g.rows(), g.cols())));
    }
    if !g.is_finite() {
        return Err(Error::NonFinite);
    }
    let det = g.det();
    if (det - 1.0).abs() > DET_TOL {
        return Err(Error::NotSpecialLinear { det });
    }
    Ok(())
}

/// Converts singular values into a Cartan vector. The last coordinate is
/// filled in from the trace condition, so the smallest singular value (the
/// least accurate one for ill-conditioned input) never enters.
fn kappa_from_singular_values(sv: &[f64]) -> Result<CartanVector> {
    let d = sv.len();
    if sv[d - 1] <= 0.0 {
        return Err(Error::Singular);
    }
    let mut c: Vec<f64> = sv[..d - 1].iter().map(|s| s.ln()).collect();
    let head: f64 = c.iter().sum();
    c.push(-head);
    if c.iter().any(|x| !x.is_finite()) {
        return Err(Error::Singular);
    }
    Ok(CartanVector::from_raw(c))
}

fn top_singular_value_2x2(m: &Matrix) -> f64 {
    let s = m.as_slice();
    let (a, b, c, d) = (s[0], s[1], s[2], s[3]);
    0.5 * (((a + d).powi(2) + (c - b).powi(2)).sqrt() + ((a - d).powi(2) + (b + c).powi(2)).sqrt())
}

/// `kappa(g)`: log singular values in non-increasing order.
pub fn cartan_projection(g: &Matrix) -> Result<CartanVector> {
    if !g.is_square() {
        return Err(Error::Shape("Cartan projection of non-square matrix".into()));
    }
    if !g.is_finite() {
        return Err(Error::NonFinite);
    }
    if g.rows() == 2 {
        let s1 = top_singular_value_2x2(g);
        if !(s1 > 0.0) || g.det() == 0.0 {
            return Err(Error::Singular);
        }
        let k = s1.ln();
        return Ok(CartanVector::from_raw(vec![k, -k]));
    }
    let sv = svd(g)?.singular_values;
    if sv[sv.len() - 1] < 1e-300 {
        return Err(Error::Singular);
    }
    kappa_from_singular_values(&sv)
}

/// `kappa(g)` using an independently known inverse.
///
/// Singular values at or above one are read from `g`, the others from the
/// top of `g_inv`; both ends of the spectrum then carry relative accuracy
/// even when `g` is far from orthogonal.
pub fn cartan_projection_with_inverse(g: &Matrix, g_inv: &Matrix) -> Result<CartanVector> {
    let d = g.rows();
    if !g.is_finite() || !g_inv.is_finite() {
        return Err(Error::NonFinite);
    }
    if d == 2 {
        let s1 = top_singular_value_2x2(g);
        if !(s1 > 0.0) || !(top_singular_value_2x2(g_inv) > 0.0) {
            return Err(Error::Singular);
        }
        let k = s1.ln();
        return Ok(CartanVector::from_raw(vec![k, -k]));
    }
    let top = svd(g)?.singular_values;
    let bottom = svd(g_inv)?.singular_values;
    let mut c = vec![0.0; d];
    let mut split = d;
    for i in 0..d {
        if top[i] < 1.0 {
            split = i;
            break;
        }
        c[i] = top[i].ln();
    }
    // sigma_{d-1-j}(g) = 1 / sigma_j(g^{-1}), in 0-based indices.
    for j in 0..d - split {
        c[d - 1 - j] = -bottom[j].ln();
    }
    if c.iter().any(|x| !x.is_finite()) {
        return Err(Error::Singular);
    }
    // The coordinate nearest zero is the least accurate one; take it from
    // the trace condition instead.
    let mid = (0..d)
        .min_by(|&a, &b| c[a].abs().total_cmp(&c[b].abs()))
        .unwrap_or(0);
    c[mid] = 0.0;
    c[mid] = -c.iter().sum::<f64>();
    Ok(CartanVector::from_raw(c))
}

/// `g = left_k * exp(kappa) * right_k`.
#[derive(Clone, Debug)]
pub struct KakDecomposition {
    pub left_k: Matrix,
    pub kappa: CartanVector,
    pub right_k: Matrix,
}

impl KakDecomposition {
    pub fn reconstruct(&self) -> Matrix {
        self.left_k
            .matmul(&self.kappa.exp_diag())
            .matmul(&self.right_k)
    }
}

/// Cartan decomposition with both orthogonal factors in `SO(d)`.
pub fn kak(g: &Matrix) -> Result<KakDecomposition> {
    let s = svd(g)?;
    let kappa = kappa_from_singular_values(&s.singular_values)?;
    let mut u = s.left_factor;
    let mut v = s.right_factor;
    let d = g.rows();
    if u.det() < 0.0 {
        for i in 0..d {
            u[(i, d - 1)] = -u[(i, d - 1)];
            v[(i, d - 1)] = -v[(i, d - 1)];
        }
    }
    if v.det() < 0.0 {
        // Only reachable when det g < 0, which is outside SL(d).
        return Err(Error::NotSpecialLinear { det: g.det() });
    }
    Ok(KakDecomposition {
        left_k: u,
        kappa,
        right_k: v.transpose(),
    })
}

/// The longest Weyl element as a signed antidiagonal permutation in `SO(d)`.
pub fn longest_weyl_element(d: usize) -> Matrix {
    let mut w = Matrix::zeros(d, d);
    for i in 0..d {
        w[(i, d - 1 - i)] = 1.0;
    }
    if (d * (d - 1) / 2) % 2 == 1 {
        w[(0, d - 1)] = -1.0;
    }
    w
}

/// A point of the partial flag manifold of type `theta`, stored as one
/// orthonormal `d x max(theta)` frame whose first `k` columns span the
/// `k`-dimensional member of the flag.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartialFlag {
    theta: ThetaSubset,
    frame: Matrix,
}

impl PartialFlag {
    /// Orthonormalizes a frame while keeping the span of every leading
    /// column block.
    pub fn from_frame(theta: ThetaSubset, frame: &Matrix) -> Result<Self> {
        let d = theta.dim();
        let m = theta.max_index();
        if frame.rows() != d || frame.cols() < m {
            return Err(Error::Shape(format!(
                "frame {}x{} cannot carry a flag of type {theta:?}",
                frame.rows(),
                frame.cols()
            )));
        }
        let q = orthonormalize_columns(&frame.leading_columns(m))?;
        Ok(Self { theta, frame: q })
    }

    /// Builds a flag from one basis per member subspace, validating nesting.
    pub fn from_subspaces(theta: ThetaSubset, subspaces: &[Matrix]) -> Result<Self> {
        if subspaces.len() != theta.len() {
            return Err(Error::Shape("one basis per index of theta".into()));
        }
        for (b, &k) in subspaces.iter().zip(theta.indices()) {
            if b.cols() != k || b.rows() != theta.dim() {
                return Err(Error::Shape(format!("basis for index {k} has wrong shape")));
            }
            let gram = b.transpose().matmul(b);
            if gram.sub(&Matrix::identity(k)).max_abs() > 1e-9 {
                return Err(Error::InvalidArgument(format!(
                    "basis for index {k} is not orthonormal"
                )));
            }
        }
        for w in subspaces.windows(2) {
            let (small, big) = (&w[0], &w[1]);
            let proj = big.matmul(&big.transpose().matmul(small));
            if proj.sub(small).max_abs() > 1e-9 {
                return Err(Error::InvalidArgument("subspaces are not nested".into()));
            }
        }
        // Build a nested frame: each new block is the part of the larger
        // basis orthogonal to what is already present.
        let d = theta.dim();
        let mut cols: Vec<Vec<f64>> = Vec::new();
        for b in subspaces {
            for j in 0..b.cols() {
                if cols.len() == b.cols() {
                    break;
                }
                let mut v = b.column(j);
                for _ in 0..2 {
                    for c in &cols {
                        let dot: f64 = v.iter().zip(c).map(|(x, y)| x * y).sum();
                        for (x, y) in v.iter_mut().zip(c) {
                            *x -= dot * y;
                        }
                    }
                }
                let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if n > 1e-6 {
                    cols.push(v.iter().map(|x| x / n).collect());
                }
            }
        }
        if cols.len() != theta.max_index() {
            return Err(Error::InvalidArgument("degenerate subspace bases".into()));
        }
        let frame = Matrix::from_columns(&cols)?;
        debug_assert_eq!(frame.rows(), d);
        Ok(Self { theta, frame })
    }

    /// The standard flag `span(e_1) < span(e_1, e_2) < ...`.
    pub fn standard(theta: ThetaSubset) -> Self {
        let d = theta.dim();
        let frame = Matrix::identity(d).leading_columns(theta.max_index());
        Self { theta, frame }
    }

    pub fn theta(&self) -> &ThetaSubset {
        &self.theta
    }

    pub fn dim(&self) -> usize {
        self.theta.dim()
    }

    pub fn frame(&self) -> &Matrix {
        &self.frame
    }

    /// Orthonormal basis of the `k`-dimensional member of the flag.
    pub fn subspace(&self, k: usize) -> Result<Matrix> {
        if !self.theta.contains(k) {
            return Err(Error::IndexOutOfRange {
                what: "flag subspace",
                index: k,
                bound: self.theta.dim() - 1,
            });
        }
        Ok(self.frame.leading_columns(k))
    }

    /// `g . x`: multiply the frame and re-orthonormalize.
    pub fn act(&self, g: &Matrix) -> Result<Self> {
        let moved = g.matmul(&self.frame);
        Ok(Self {
            theta: self.theta.clone(),
            frame: orthonormalize_columns(&moved)?,
        })
    }

    /// A full orthonormal frame in `SO(d)` realizing the flag. The missing
    /// columns come from Gram-Schmidt over the standard basis.
    pub fn lift(&self) -> Matrix {
        complete_orthonormal(&self.frame)
    }

    /// The flag of the same point seen with a smaller `theta`.
    pub fn restrict(&self, theta: &ThetaSubset) -> Result<Self> {
        if theta.indices().iter().any(|&k| !self.theta.contains(k)) {
            return Err(Error::InvalidTheta(format!(
                "{theta:?} is not contained in {:?}",
                self.theta
            )));
        }
        Ok(Self {
            theta: theta.clone(),
            frame: self.frame.leading_columns(theta.max_index()),
        })
    }

    /// Largest principal-angle sine over the members of the flag.
    pub fn distance(&self, other: &PartialFlag) -> f64 {
        assert_eq!(self.theta, other.theta, "flags of different types");
        self.theta
            .indices()
            .iter()
            .map(|&k| {
                subspace_distance(
                    &self.frame.leading_columns(k),
                    &other.frame.leading_columns(k),
                )
            })
            .fold(0.0, f64::max)
    }
}

/// `U_theta(g)`: the flag spanned by the leading left singular vectors.
pub fn flag_projection(g: &Matrix, theta: &ThetaSubset, margin_tol: f64) -> Result<PartialFlag> {
    let decomposition = kak(g)?;
    let margin = chamber_margin(&decomposition.kappa, theta);
    if !(margin > margin_tol) {
        return Err(Error::NotRegular {
            margin,
            tol: margin_tol,
        });
    }
    Ok(PartialFlag {
        theta: theta.clone(),
        frame: decomposition.left_k.leading_columns(theta.max_index()),
    })
}

/// Log of the positive diagonal of `R` in `g k = Q R`, with the last entry
/// filled in from the trace condition.
fn iwasawa_log_diag(gk: &Matrix) -> Result<CartanVector> {
    let (_, r) = qr_positive(gk)?;
    let d = r.rows();
    let mut c: Vec<f64> = (0..d - 1).map(|i| r[(i, i)].ln()).collect();
    let head: f64 = c.iter().sum();
    c.push(-head);
    Ok(CartanVector::from_raw(c))
}

/// `B_Delta^IW(g, x)` for a full flag `x`.
pub fn iwasawa_cocycle_full(g: &Matrix, x: &PartialFlag) -> Result<CartanVector> {
    if !x.theta.is_full() {
        return Err(Error::InvalidTheta(format!(
            "full flag required, got {:?}",
            x.theta
        )));
    }
    iwasawa_log_diag(&g.matmul(&x.lift()))
}

/// `B_Delta^IW(g, k P)` for an explicit frame `k`.
pub fn iwasawa_cocycle_frame(g: &Matrix, k: &Matrix) -> Result<CartanVector> {
    iwasawa_log_diag(&g.matmul(k))
}

/// `B_theta^IW(g, x) = pi_theta B_Delta^IW(g, x~)` on the canonical lift.
pub fn iwasawa_cocycle_partial(theta: &ThetaSubset, g: &Matrix, x: &PartialFlag) -> Result<CartanVector> {
    if x.theta != *theta {
        return Err(Error::InvalidTheta(format!(
            "flag of type {:?} evaluated with {theta:?}",
            x.theta
        )));
    }
    let full = iwasawa_log_diag(&g.matmul(&x.lift()))?;
    Ok(partial_projection(theta, &full))
}

/// `dist_X(g o, h o) = |kappa(g^{-1} h)|`.
pub fn symmetric_distance(g: &Matrix, h: &Matrix) -> Result<f64> {
    Ok(cartan_projection(&g.inverse()?.matmul(h))?.norm())
}
