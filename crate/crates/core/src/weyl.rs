//! Root data of type `A_{d-1}`: Cartan subspace coordinates, simple roots,
//! fundamental weights, partial projections and the opposition involution.
//!
//! Indices of roots and weights are 1-based throughout, matching the usual
//! labelling `alpha_1, ..., alpha_{d-1}`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{svd, Matrix};

/// Tolerance on the trace of a Cartan vector.
pub const TRACE_TOL: f64 = 1e-9;

/// A point of the Cartan subspace: `d` log-scale coordinates summing to zero.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct CartanVector {
    coords: Vec<f64>,
}

impl fmt::Debug for CartanVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CartanVector{:?}", self.coords)
    }
}

impl CartanVector {
    /// Validates the traceless condition.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::Shape("a Cartan vector needs d >= 2 coordinates".into()));
        }
        if coords.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        let trace: f64 = coords.iter().sum();
        let scale = coords.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        if trace.abs() > TRACE_TOL * scale {
            return Err(Error::InvalidArgument(format!(
                "Cartan vector has trace {trace:e}"
            )));
        }
        Ok(Self { coords })
    }

    /// Projects arbitrary coordinates onto the traceless hyperplane.
    pub fn projected(mut coords: Vec<f64>) -> Self {
        let mean = coords.iter().sum::<f64>() / coords.len() as f64;
        for c in &mut coords {
            *c -= mean;
        }
        Self { coords }
    }

    /// Wraps coordinates that are traceless by construction.
    pub(crate) fn from_raw(coords: Vec<f64>) -> Self {
        Self { coords }
    }

    pub fn zero(d: usize) -> Self {
        Self {
            coords: vec![0.0; d],
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    pub fn norm(&self) -> f64 {
        self.coords.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn add(&self, other: &CartanVector) -> CartanVector {
        Self::projected(
            self.coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    pub fn sub(&self, other: &CartanVector) -> CartanVector {
        Self::projected(
            self.coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| a - b)
                .collect(),
        )
    }

    pub fn scale(&self, s: f64) -> CartanVector {
        Self::projected(self.coords.iter().map(|x| x * s).collect())
    }

    /// Largest absolute coordinate difference.
    pub fn max_abs_diff(&self, other: &CartanVector) -> f64 {
        self.coords
            .iter()
            .zip(&other.coords)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Whether coordinates are non-increasing (closed positive chamber).
    pub fn is_dominant(&self) -> bool {
        self.coords.windows(2).all(|w| w[0] >= w[1])
    }

    /// `exp(H)` as a diagonal matrix.
    pub fn exp_diag(&self) -> Matrix {
        Matrix::from_diag(&self.coords.iter().map(|x| x.exp()).collect::<Vec<_>>())
    }
}

/// A non-empty subset of simple roots, stored as 1-based indices.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ThetaSubset {
    d: usize,
    indices: Vec<usize>,
}

impl fmt::Debug for ThetaSubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Theta(d={}, {:?})", self.d, self.indices)
    }
}

impl ThetaSubset {
    /// Indices must be strictly increasing, within `1..=d-1`, and non-empty.
    pub fn new(d: usize, indices: Vec<usize>) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidTheta(format!("dimension {d} has no roots")));
        }
        if indices.is_empty() {
            return Err(Error::InvalidTheta("empty subset".into()));
        }
        if !indices.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidTheta(format!(
                "indices {indices:?} are not strictly increasing"
            )));
        }
        if indices[0] == 0 || *indices.last().unwrap() >= d {
            return Err(Error::InvalidTheta(format!(
                "indices {indices:?} outside 1..={}",
                d - 1
            )));
        }
        Ok(Self { d, indices })
    }

    /// The full set `Delta = {1, ..., d-1}`.
    pub fn full(d: usize) -> Self {
        Self {
            d,
            indices: (1..d).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.indices.len() == self.d - 1
    }

    pub fn contains(&self, k: usize) -> bool {
        self.indices.binary_search(&k).is_ok()
    }

    pub fn max_index(&self) -> usize {
        *self.indices.last().expect("non-empty theta")
    }

    /// Union with another subset of the same dimension.
    pub fn union(&self, other: &ThetaSubset) -> ThetaSubset {
        let mut idx: Vec<usize> = self.indices.iter().chain(&other.indices).copied().collect();
        idx.sort_unstable();
        idx.dedup();
        ThetaSubset {
            d: self.d,
            indices: idx,
        }
    }

    /// Block boundaries `0 = b_0 < b_1 < ... < b_{m+1} = d` cut at the indices.
    pub fn block_bounds(&self) -> Vec<usize> {
        let mut b = Vec::with_capacity(self.indices.len() + 2);
        b.push(0);
        b.extend_from_slice(&self.indices);
        b.push(self.d);
        b
    }
}

/// A linear functional `phi = sum_alpha c_alpha omega_alpha` on the partial
/// Cartan subspace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Functional {
    weight_coeffs: Vec<(usize, f64)>,
}

impl Functional {
    /// Coefficients must be finite and indexed by elements of `theta`.
    pub fn new(theta: &ThetaSubset, coeffs: Vec<(usize, f64)>) -> Result<Self> {
        let mut coeffs = coeffs;
        coeffs.sort_by_key(|&(k, _)| k);
        for w in coeffs.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::InvalidArgument(format!(
                    "repeated weight index {}",
                    w[0].0
                )));
            }
        }
        for &(k, c) in &coeffs {
            if !theta.contains(k) {
                return Err(Error::InvalidArgument(format!(
                    "weight index {k} is not in {theta:?}"
                )));
            }
            if !c.is_finite() {
                return Err(Error::NonFinite);
            }
        }
        Ok(Self {
            weight_coeffs: coeffs,
        })
    }

    /// The single fundamental weight `omega_k`.
    pub fn omega(k: usize) -> Self {
        Self {
            weight_coeffs: vec![(k, 1.0)],
        }
    }

    pub fn coeffs(&self) -> &[(usize, f64)] {
        &self.weight_coeffs
    }

    /// Sum of absolute coefficients.
    pub fn l1_norm(&self) -> f64 {
        self.weight_coeffs.iter().map(|(_, c)| c.abs()).sum()
    }

    pub fn eval(&self, h: &CartanVector) -> f64 {
        self.weight_coeffs
            .iter()
            .map(|&(k, c)| c * partial_sum(h, k))
            .sum()
    }
}

#[inline]
fn partial_sum(h: &CartanVector, k: usize) -> f64 {
    h.coords[..k].iter().sum()
}

fn check_root_index(k: usize, d: usize) -> Result<()> {
    if k == 0 || k >= d {
        return Err(Error::IndexOutOfRange {
            what: "root",
            index: k,
            bound: d - 1,
        });
    }
    Ok(())
}

/// `alpha_k(H) = H_k - H_{k+1}`.
pub fn simple_root(k: usize, h: &CartanVector) -> Result<f64> {
    check_root_index(k, h.dim())?;
    Ok(h.coords[k - 1] - h.coords[k])
}

/// `omega_k(H) = H_1 + ... + H_k`.
pub fn fundamental_weight(k: usize, h: &CartanVector) -> Result<f64> {
    check_root_index(k, h.dim())?;
    Ok(partial_sum(h, k))
}

/// Projection onto the partial Cartan subspace `a_theta` along the roots
/// outside `theta`, preserving `omega_alpha` for `alpha` in `theta`.
///
/// In coordinates this averages `H` over each block of indices cut out by
/// `theta`.
pub fn partial_projection(theta: &ThetaSubset, h: &CartanVector) -> CartanVector {
    assert_eq!(theta.dim(), h.dim(), "dimension mismatch");
    if theta.is_full() {
        return h.clone();
    }
    let bounds = theta.block_bounds();
    let mut out = vec![0.0; h.dim()];
    for w in bounds.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let mean = h.coords[lo..hi].iter().sum::<f64>() / (hi - lo) as f64;
        out[lo..hi].iter_mut().for_each(|x| *x = mean);
    }
    CartanVector::from_raw(out)
}

/// The unique `v` in `a_theta` with prescribed `omega_alpha(v)` for
/// `alpha` in `theta`, listed in the order of `theta.indices()`.
pub fn from_weight_values(theta: &ThetaSubset, weights: &[f64]) -> CartanVector {
    assert_eq!(weights.len(), theta.len(), "one value per root in theta");
    let bounds = theta.block_bounds();
    let m = theta.len();
    let mut out = vec![0.0; theta.dim()];
    let mut prev = 0.0;
    for j in 0..=m {
        let cumulative = if j < m { weights[j] } else { 0.0 };
        let block_sum = cumulative - prev;
        prev = cumulative;
        let (lo, hi) = (bounds[j], bounds[j + 1]);
        let v = block_sum / (hi - lo) as f64;
        out[lo..hi].iter_mut().for_each(|x| *x = v);
    }
    CartanVector::from_raw(out)
}

/// The `d x d` linear system characterising `partial_projection`:
/// rows `omega_alpha` for `alpha` in `theta`, `alpha_j` for `j` outside
/// `theta`, and the trace.
pub fn projection_system(theta: &ThetaSubset) -> Matrix {
    let d = theta.dim();
    let mut m = Matrix::zeros(d, d);
    let mut row = 0;
    for k in 1..d {
        if theta.contains(k) {
            for j in 0..k {
                m[(row, j)] = 1.0;
            }
        } else {
            m[(row, k - 1)] = 1.0;
            m[(row, k)] = -1.0;
        }
        row += 1;
    }
    for j in 0..d {
        m[(row, j)] = 1.0;
    }
    m
}

/// 2-norm condition number of [`projection_system`].
pub fn weight_basis_condition(theta: &ThetaSubset) -> f64 {
    let sv = svd(&projection_system(theta))
        .expect("projection system is finite and square")
        .singular_values;
    sv[0] / sv[sv.len() - 1]
}

/// `i(H) = (-H_d, ..., -H_1)`.
pub fn opposition_involution(h: &CartanVector) -> CartanVector {
    CartanVector::from_raw(h.coords.iter().rev().map(|x| -x).collect())
}

/// `k -> d - k` on root indices.
pub fn istar_theta(theta: &ThetaSubset) -> ThetaSubset {
    let mut idx: Vec<usize> = theta.indices.iter().map(|k| theta.d - k).collect();
    idx.reverse();
    ThetaSubset {
        d: theta.d,
        indices: idx,
    }
}

/// `min_{alpha in theta} alpha(H)`.
pub fn chamber_margin(h: &CartanVector, theta: &ThetaSubset) -> f64 {
    theta
        .indices
        .iter()
        .map(|&k| h.coords[k - 1] - h.coords[k])
        .fold(f64::INFINITY, f64::min)
}

/// Fundamental coweight `varpi_j`: `(d-j)/d` on the first `j` coordinates
/// and `-j/d` elsewhere. Satisfies `alpha_i(varpi_j) = [i == j]`.
pub fn fundamental_coweight(d: usize, j: usize) -> CartanVector {
    let mut v = vec![-(j as f64) / d as f64; d];
    for x in v.iter_mut().take(j) {
        *x = (d - j) as f64 / d as f64;
    }
    CartanVector::from_raw(v)
}
