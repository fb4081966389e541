//! The compactification `X ⊔ ∂_θ X`: Busemann-type functions, boundary
//! points as tuples of unit-norm endomorphisms of exterior powers, the
//! action of `SL(d, R)`, the flag embedding and a probe-based metric.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::decomp::{cartan_projection, flag_projection, PartialFlag};
use crate::error::{Error, Result};
use crate::linalg::{exterior_power_with_inverse, qr_positive, singular_values, wedge_columns, Matrix};
use crate::weyl::{
    fundamental_coweight, from_weight_values, partial_projection, CartanVector, ThetaSubset,
};

/// Norms below this are treated as an annihilated representative.
pub const DEGENERATE_NORM: f64 = 1e-300;

/// Tail increment above which [`orbit_limit`] reports non-convergence.
pub const CONVERGENCE_TOL: f64 = 1e-4;

/// Rank-one defect below which a limit is tagged with a flag.
const RANK_ONE_TOL: f64 = 1e-6;

/// The representative `T_alpha` attached to the root `alpha_k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EndoRep {
    pub k: usize,
    pub t: Matrix,
    /// Unit vector `u` with `T = u w^T` for a unit `w`, when `T` is known to
    /// have rank one. Then `|M T| = |M u|`.
    #[serde(skip)]
    pub left: Option<Vec<f64>>,
}

fn vec_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

impl EndoRep {
    /// `|M T|` in operator norm.
    fn norm_after(&self, m: &Matrix) -> f64 {
        match &self.left {
            Some(u) => vec_norm(&m.mul_vec(u)),
            None => m.matmul(&self.t).operator_norm(),
        }
    }

    fn own_norm(&self) -> f64 {
        match &self.left {
            Some(u) => vec_norm(u),
            None => self.t.operator_norm(),
        }
    }
}

/// A boundary point `xi` in `∂_θ X`, represented by one operator-norm-one
/// endomorphism of `Λ^k R^d` per `alpha_k` in `theta`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HorofunctionPoint {
    theta: ThetaSubset,
    reps: Vec<EndoRep>,
    flag_tag: Option<PartialFlag>,
    provenance: Option<String>,
}

impl HorofunctionPoint {
    /// Normalizes each representative to operator norm one.
    pub fn new(theta: ThetaSubset, reps: Vec<EndoRep>) -> Result<Self> {
        if reps.len() != theta.len() || reps.iter().zip(theta.indices()).any(|(r, &k)| r.k != k) {
            return Err(Error::InvalidTheta(
                "representatives must match the indices of theta in order".into(),
            ));
        }
        let d = theta.dim();
        let mut out = Vec::with_capacity(reps.len());
        for r in reps {
            let n = crate::linalg::binomial(d, r.k);
            if r.t.rows() != n || r.t.cols() != n {
                return Err(Error::Shape(format!(
                    "T for alpha_{} must be {n}x{n}",
                    r.k
                )));
            }
            let norm = r.t.operator_norm();
            if !(norm > DEGENERATE_NORM) || !norm.is_finite() {
                return Err(Error::DegenerateEvaluation { norm });
            }
            out.push(EndoRep {
                k: r.k,
                t: r.t.scale(1.0 / norm),
                left: None,
            });
        }
        Ok(Self {
            theta,
            reps: out,
            flag_tag: None,
            provenance: None,
        })
    }

    pub fn theta(&self) -> &ThetaSubset {
        &self.theta
    }

    pub fn reps(&self) -> &[EndoRep] {
        &self.reps
    }

    pub fn flag_tag(&self) -> Option<&PartialFlag> {
        self.flag_tag.as_ref()
    }

    pub fn provenance(&self) -> Option<&str> {
        self.provenance.as_deref()
    }

    pub fn with_provenance(mut self, word: impl Into<String>) -> Self {
        self.provenance = Some(word.into());
        self
    }

    /// `sigma_2 / sigma_1` of each representative.
    pub fn rank_one_defects(&self) -> Vec<f64> {
        self.reps
            .iter()
            .map(|r| {
                let sv = singular_values(&r.t);
                if sv.len() < 2 || sv[0] == 0.0 {
                    0.0
                } else {
                    sv[1] / sv[0]
                }
            })
            .collect()
    }

    /// JSON export: `{theta, alphas: [{k, T_matrix_rowmajor}], flag_tag?}`.
    pub fn to_json(&self) -> Value {
        let alphas: Vec<Value> = self
            .reps
            .iter()
            .map(|r| json!({ "k": r.k, "T_matrix_rowmajor": r.t.as_slice() }))
            .collect();
        let mut obj = json!({
            "theta": self.theta.indices(),
            "alphas": alphas,
        });
        if let Some(x) = &self.flag_tag {
            obj["flag_tag"] = json!({
                "rows": x.frame().rows(),
                "cols": x.frame().cols(),
                "frame_rowmajor": x.frame().as_slice(),
            });
        }
        if let Some(p) = &self.provenance {
            obj["provenance"] = json!(p);
        }
        obj
    }
}

/// A point of `X ⊔ ∂_θ X`.
#[derive(Clone, Debug, PartialEq)]
pub enum CompactificationPoint {
    /// The point `g o` of the symmetric space.
    Interior(Matrix),
    Boundary(HorofunctionPoint),
}

impl CompactificationPoint {
    pub fn dim(&self) -> usize {
        match self {
            CompactificationPoint::Interior(g) => g.rows(),
            CompactificationPoint::Boundary(xi) => xi.theta.dim(),
        }
    }
}

/// `b_x(h o) = kappa(h^{-1} g) - kappa(g)` for `x = g o`.
pub fn busemann_raw(g: &Matrix, h: &Matrix) -> Result<CartanVector> {
    let hg = h.inverse()?.matmul(g);
    Ok(cartan_projection(&hg)?.sub(&cartan_projection(g)?))
}

fn is_identity(h: &Matrix) -> bool {
    let n = h.rows();
    (0..n).all(|i| (0..n).all(|j| h[(i, j)] == if i == j { 1.0 } else { 0.0 }))
}

/// `log |Λ^k(h^{-1}) T| - log |T|` for each representative.
fn boundary_weights(xi: &HorofunctionPoint, h: &Matrix, h_inv: &Matrix) -> Result<Vec<f64>> {
    xi.reps
        .iter()
        .map(|r| {
            let m = exterior_power_with_inverse(h_inv, h, r.k)?;
            let norm = r.norm_after(&m);
            if !(norm > DEGENERATE_NORM) {
                return Err(Error::DegenerateEvaluation { norm });
            }
            Ok(norm.ln() - r.own_norm().ln())
        })
        .collect()
}

/// `p(h o)` in `a_theta` when both `h` and `h^{-1}` are known.
pub fn evaluate_pair(
    p: &CompactificationPoint,
    h: &Matrix,
    h_inv: &Matrix,
    theta: &ThetaSubset,
) -> Result<CartanVector> {
    let d = theta.dim();
    if p.dim() != d || h.rows() != d {
        return Err(Error::Shape("dimension mismatch in evaluation".into()));
    }
    match p {
        CompactificationPoint::Interior(g) => {
            if is_identity(h) {
                return Ok(CartanVector::zero(d));
            }
            let raw = cartan_projection(&h_inv.matmul(g))?.sub(&cartan_projection(g)?);
            Ok(partial_projection(theta, &raw))
        }
        CompactificationPoint::Boundary(xi) => {
            if xi.theta != *theta {
                return Err(Error::InvalidTheta(format!(
                    "point of type {:?} evaluated with {theta:?}",
                    xi.theta
                )));
            }
            if is_identity(h) {
                return Ok(CartanVector::zero(d));
            }
            Ok(from_weight_values(theta, &boundary_weights(xi, h, h_inv)?))
        }
    }
}

/// `p(h o)`: the value at `h o` of the (vector-valued) function representing `p`.
pub fn evaluate(p: &CompactificationPoint, h: &Matrix, theta: &ThetaSubset) -> Result<CartanVector> {
    evaluate_pair(p, h, &h.inverse()?, theta)
}

/// `B_theta(g, p) = p(g^{-1} o)`.
#[allow(non_snake_case)]
pub fn cocycle_B(theta: &ThetaSubset, g: &Matrix, p: &CompactificationPoint) -> Result<CartanVector> {
    evaluate_pair(p, &g.inverse()?, g, theta)
}

/// [`cocycle_B`] with a known inverse of `g`.
#[allow(non_snake_case)]
pub fn cocycle_B_pair(
    theta: &ThetaSubset,
    g: &Matrix,
    g_inv: &Matrix,
    p: &CompactificationPoint,
) -> Result<CartanVector> {
    evaluate_pair(p, g_inv, g, theta)
}

/// `g . xi`, transporting representatives by `Λ^k(g)`.
pub fn act(g: &Matrix, xi: &HorofunctionPoint) -> Result<HorofunctionPoint> {
    act_pair(g, &g.inverse()?, xi)
}

/// [`act`] with a known inverse of `g`.
pub fn act_pair(g: &Matrix, g_inv: &Matrix, xi: &HorofunctionPoint) -> Result<HorofunctionPoint> {
    let mut reps = Vec::with_capacity(xi.reps.len());
    for r in &xi.reps {
        let m = exterior_power_with_inverse(g, g_inv, r.k)?;
        let moved = m.matmul(&r.t);
        let norm = r.norm_after(&m);
        if !(norm > DEGENERATE_NORM) || !norm.is_finite() {
            return Err(Error::DegenerateEvaluation { norm });
        }
        let left = r
            .left
            .as_ref()
            .map(|u| m.mul_vec(u).iter().map(|x| x / norm).collect());
        reps.push(EndoRep {
            k: r.k,
            t: moved.scale(1.0 / norm),
            left,
        });
    }
    let flag_tag = match &xi.flag_tag {
        Some(x) => Some(x.act(g)?),
        None => None,
    };
    Ok(HorofunctionPoint {
        theta: xi.theta.clone(),
        reps,
        flag_tag,
        provenance: xi.provenance.clone(),
    })
}

/// `g . p` on the whole compactification.
pub fn act_point(g: &Matrix, p: &CompactificationPoint) -> Result<CompactificationPoint> {
    Ok(match p {
        CompactificationPoint::Interior(h) => CompactificationPoint::Interior(g.matmul(h)),
        CompactificationPoint::Boundary(xi) => CompactificationPoint::Boundary(act(g, xi)?),
    })
}

/// The flag embedding `iota`: `T_alpha` is the orthogonal projection onto
/// the Plücker line of the `k`-dimensional member of the flag.
pub fn embed_flag(x: &PartialFlag) -> HorofunctionPoint {
    let reps = x
        .theta()
        .indices()
        .iter()
        .map(|&k| {
            let basis = x.frame().leading_columns(k);
            let v = wedge_columns(&basis);
            let n = v.len();
            let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            let v: Vec<f64> = v.iter().map(|a| a / norm).collect();
            let mut t = Matrix::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    t[(i, j)] = v[i] * v[j];
                }
            }
            EndoRep { k, t, left: Some(v) }
        })
        .collect();
    HorofunctionPoint {
        theta: x.theta().clone(),
        reps,
        flag_tag: Some(x.clone()),
        provenance: None,
    }
}

/// Convergence record for [`orbit_limit`].
#[derive(Clone, Debug, Serialize)]
pub struct LimitDiagnostics {
    /// `|T^(n) - T^(n-1)|` per root, in sequence order.
    pub increments: Vec<Vec<f64>>,
    /// Largest final increment across roots.
    pub tail_increment: f64,
    /// `sigma_2 / sigma_1` of each limiting representative.
    pub rank_one_defect: Vec<f64>,
    pub converged: bool,
}

/// Limit of `g_n o`, with diagnostics, regardless of convergence.
pub fn orbit_limit_unchecked(
    seq: &[(Matrix, Matrix)],
    theta: &ThetaSubset,
) -> Result<(HorofunctionPoint, LimitDiagnostics)> {
    if seq.is_empty() {
        return Err(Error::InvalidArgument("empty sequence".into()));
    }
    let mut increments = vec![Vec::with_capacity(seq.len()); theta.len()];
    let mut prev: Option<Vec<Matrix>> = None;
    for (g, g_inv) in seq {
        let current: Vec<Matrix> = theta
            .indices()
            .iter()
            .map(|&k| {
                let m = exterior_power_with_inverse(g, g_inv, k)?;
                let n = m.operator_norm();
                if !(n > DEGENERATE_NORM) || !n.is_finite() {
                    return Err(Error::DegenerateEvaluation { norm: n });
                }
                Ok(m.scale(1.0 / n))
            })
            .collect::<Result<_>>()?;
        if let Some(p) = &prev {
            for (a, (t_new, t_old)) in current.iter().zip(p).enumerate() {
                increments[a].push(t_new.sub(t_old).operator_norm());
            }
        }
        prev = Some(current);
    }
    let reps: Vec<EndoRep> = theta
        .indices()
        .iter()
        .zip(prev.expect("non-empty sequence"))
        .map(|(&k, t)| EndoRep { k, t, left: None })
        .collect();
    let mut xi = HorofunctionPoint {
        theta: theta.clone(),
        reps,
        flag_tag: None,
        provenance: None,
    };
    let tail_increment = increments
        .iter()
        .map(|v| v.last().copied().unwrap_or(f64::INFINITY))
        .fold(0.0, f64::max);
    let rank_one_defect = xi.rank_one_defects();
    if rank_one_defect.iter().all(|&r| r < RANK_ONE_TOL) {
        let (g_last, _) = seq.last().expect("non-empty sequence");
        xi.flag_tag = flag_projection(g_last, theta, 1.0).ok();
    }
    let diagnostics = LimitDiagnostics {
        converged: tail_increment <= CONVERGENCE_TOL,
        increments,
        tail_increment,
        rank_one_defect,
    };
    Ok((xi, diagnostics))
}

/// Limit of `g_n o` in `∂_θ X`; fails when the tail increment exceeds
/// [`CONVERGENCE_TOL`].
pub fn orbit_limit(
    seq: &[Matrix],
    theta: &ThetaSubset,
) -> Result<(HorofunctionPoint, LimitDiagnostics)> {
    let pairs: Vec<(Matrix, Matrix)> = seq
        .iter()
        .map(|g| Ok((g.clone(), g.inverse()?)))
        .collect::<Result<_>>()?;
    let (xi, diag) = orbit_limit_unchecked(&pairs, theta)?;
    if !diag.converged {
        return Err(Error::NonConvergent {
            increment: diag.tail_increment,
        });
    }
    Ok((xi, diag))
}

/// One probe point `h o` of the symmetric space.
#[derive(Clone, Debug)]
pub struct Probe {
    pub h: Matrix,
    pub h_inv: Matrix,
    /// `dist_X(o, h o)`.
    pub radius: f64,
}

/// Deterministic probe points `k exp(t H_j)` used to approximate the
/// maxima over balls in the compactification metric.
#[derive(Clone, Debug)]
pub struct ProbeSet {
    d: usize,
    probes: Vec<Probe>,
}

/// Default number of probes.
pub const DEFAULT_PROBE_COUNT: usize = 64;
const PROBE_RADII: [f64; 3] = [1.0, 2.0, 4.0];

fn first_primes(n: usize) -> Vec<u64> {
    let mut primes = Vec::with_capacity(n);
    let mut c = 2u64;
    while primes.len() < n {
        if primes.iter().all(|p| !c.is_multiple_of(*p)) {
            primes.push(c);
        }
        c += 1;
    }
    primes
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut f = 1.0 / base as f64;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % base) as f64;
        i /= base;
        f /= base as f64;
    }
    r
}

/// Halton-sequence rotations: Box-Muller turns Halton points into Gaussian
/// matrices, and positive QR maps those into `SO(d)`.
fn halton_rotation(d: usize, index: u64, primes: &[u64]) -> Matrix {
    let pairs = (d * d).div_ceil(2);
    let mut normals = Vec::with_capacity(2 * pairs);
    for p in 0..pairs {
        let u1 = radical_inverse(index, primes[2 * p]).max(1e-12);
        let u2 = radical_inverse(index, primes[2 * p + 1]);
        let r = (-2.0 * u1.ln()).sqrt();
        let a = 2.0 * std::f64::consts::PI * u2;
        normals.push(r * a.cos());
        normals.push(r * a.sin());
    }
    normals.truncate(d * d);
    let g = Matrix::from_row_major(d, d, normals).expect("d > 0");
    let (mut q, _) = qr_positive(&g).unwrap_or_else(|_| (Matrix::identity(d), Matrix::identity(d)));
    if q.det() < 0.0 {
        for i in 0..d {
            q[(i, 0)] = -q[(i, 0)];
        }
    }
    q
}

impl ProbeSet {
    /// `count` probes; `offset` shifts the Halton index for an alternative set.
    pub fn new(d: usize, count: usize, offset: u64) -> Self {
        let rays: Vec<CartanVector> = (1..d)
            .map(|j| {
                let w = fundamental_coweight(d, j);
                w.scale(1.0 / w.norm())
            })
            .collect();
        let combos: Vec<(f64, usize)> = PROBE_RADII
            .iter()
            .flat_map(|&t| (0..rays.len()).map(move |j| (t, j)))
            .collect();
        let primes = first_primes(d * d + 2);
        let mut probes = Vec::with_capacity(count);
        let mut rotation_index = 0u64;
        let mut k = Matrix::identity(d);
        for i in 0..count {
            if i % combos.len() == 0 {
                rotation_index += 1;
                k = halton_rotation(d, rotation_index + offset, &primes);
            }
            let (t, j) = combos[i % combos.len()];
            let h_vec = rays[j].scale(t);
            let a = h_vec.exp_diag();
            let a_inv = h_vec.scale(-1.0).exp_diag();
            probes.push(Probe {
                h: k.matmul(&a),
                h_inv: a_inv.matmul(&k.transpose()),
                radius: t,
            });
        }
        Self { d, probes }
    }

    /// The shared default set for dimension `d`.
    pub fn standard(d: usize) -> Arc<ProbeSet> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<ProbeSet>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("probe cache poisoned");
        guard
            .entry(d)
            .or_insert_with(|| Arc::new(ProbeSet::new(d, DEFAULT_PROBE_COUNT, 0)))
            .clone()
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn probes(&self) -> &[Probe] {
        &self.probes
    }

    pub fn len(&self) -> usize {
        self.probes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probes.is_empty()
    }

    /// Evaluations of `p` at every probe, plus what the metric needs from
    /// interior points.
    pub fn signature(&self, p: &CompactificationPoint, theta: &ThetaSubset) -> Result<PointSignature> {
        let values = self
            .probes
            .iter()
            .map(|pr| Ok(evaluate_pair(p, &pr.h, &pr.h_inv, theta)?.into_coords()))
            .collect::<Result<Vec<_>>>()?;
        let interior = match p {
            CompactificationPoint::Interior(g) => Some(g.clone()),
            CompactificationPoint::Boundary(_) => None,
        };
        Ok(PointSignature { values, interior })
    }
}

/// Probe evaluations of one point.
#[derive(Clone, Debug)]
pub struct PointSignature {
    pub values: Vec<Vec<f64>>,
    interior: Option<Matrix>,
}

impl PointSignature {
    /// Largest difference of probe evaluations, in the Euclidean norm.
    pub fn max_difference(&self, other: &PointSignature, probes: &ProbeSet, radius: f64) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .zip(probes.probes())
            .filter(|(_, pr)| pr.radius <= radius)
            .map(|((a, b), _)| {
                a.iter()
                    .zip(b)
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }
}

fn h_weight(g: &Matrix) -> Result<f64> {
    Ok(1.0 / (1.0 + cartan_projection(g)?.norm()))
}

/// Metric between two precomputed signatures.
pub fn signature_distance(
    a: &PointSignature,
    b: &PointSignature,
    probes: &ProbeSet,
    probe_depth: usize,
) -> Result<f64> {
    let mut d0 = 0.0;
    let mut w = 1.0;
    for n in 1..=probe_depth {
        w *= 0.5;
        d0 += w * a.max_difference(b, probes, n as f64);
    }
    let extra = match (&a.interior, &b.interior) {
        (Some(x), Some(y)) => {
            let dist_xy = cartan_projection(&x.inverse()?.matmul(y))?.norm();
            dist_xy.min(h_weight(x)? + h_weight(y)?)
        }
        (Some(x), None) | (None, Some(x)) => h_weight(x)?,
        (None, None) => 0.0,
    };
    Ok(extra + d0)
}

/// Probe approximation of the compactification metric, with the series
/// truncated after `probe_depth` balls.
pub fn compactification_distance(
    p: &CompactificationPoint,
    q: &CompactificationPoint,
    theta: &ThetaSubset,
    probe_depth: usize,
) -> Result<f64> {
    if probe_depth == 0 {
        return Err(Error::InvalidArgument("probe_depth must be at least 1".into()));
    }
    let probes = ProbeSet::standard(theta.dim());
    let a = probes.signature(p, theta)?;
    let b = probes.signature(q, theta)?;
    signature_distance(&a, &b, &probes, probe_depth)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomp::iwasawa_cocycle_partial;
    use crate::sampling::{random_flag, random_sl};
    use crate::weyl::{fundamental_weight, opposition_involution};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn thetas3() -> Vec<ThetaSubset> {
        vec![
            ThetaSubset::new(3, vec![1]).unwrap(),
            ThetaSubset::new(3, vec![2]).unwrap(),
            ThetaSubset::full(3),
        ]
    }

    #[test]
    fn busemann_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = random_sl(3, 1.0, &mut rng);
        let h = random_sl(3, 1.0, &mut rng);
        assert!(busemann_raw(&g, &Matrix::identity(3)).unwrap().norm() < 1e-12);
        let at_o = busemann_raw(&Matrix::identity(3), &h).unwrap();
        let expected = opposition_involution(&cartan_projection(&h).unwrap());
        assert!(at_o.max_abs_diff(&expected) < 1e-9);
    }

    #[test]
    fn evaluation_at_basepoint_is_exactly_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for theta in thetas3() {
            let x = random_flag(&theta, &mut rng);
            let xi = CompactificationPoint::Boundary(embed_flag(&x));
            let v = evaluate(&xi, &Matrix::identity(3), &theta).unwrap();
            assert!(v.coords().iter().all(|&c| c == 0.0));
            let g = random_sl(3, 1.0, &mut rng);
            let moved = CompactificationPoint::Boundary(act(&g, &embed_flag(&x)).unwrap());
            let v = evaluate(&moved, &Matrix::identity(3), &theta).unwrap();
            assert!(v.coords().iter().all(|&c| c == 0.0));
            let inner = CompactificationPoint::Interior(g);
            let v = evaluate(&inner, &Matrix::identity(3), &theta).unwrap();
            assert!(v.coords().iter().all(|&c| c == 0.0));
        }
    }

    #[test]
    fn embedded_flag_matches_iwasawa() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for theta in thetas3() {
            for _ in 0..50 {
                let x = random_flag(&theta, &mut rng);
                let g = random_sl(3, 1.5, &mut rng);
                let xi = CompactificationPoint::Boundary(embed_flag(&x));
                let a = evaluate(&xi, &g, &theta).unwrap();
                let b = iwasawa_cocycle_partial(&theta, &g.inverse().unwrap(), &x).unwrap();
                assert!(a.max_abs_diff(&b) < 1e-7);
            }
        }
    }

    #[test]
    fn standard_flag_against_triangular_inverse() {
        // h^{-1} upper triangular with positive diagonal: evaluation is the
        // projection of its log-diagonal.
        let theta = ThetaSubset::new(3, vec![1]).unwrap();
        let h_inv = Matrix::from_rows(&[
            vec![2.0, 0.7, -1.2],
            vec![0.0, 0.8, 0.3],
            vec![0.0, 0.0, 0.625],
        ])
        .unwrap();
        let h = h_inv.inverse().unwrap();
        let xi = CompactificationPoint::Boundary(embed_flag(&PartialFlag::standard(theta.clone())));
        let v = evaluate(&xi, &h, &theta).unwrap();
        let log_diag = CartanVector::new(vec![2f64.ln(), 0.8f64.ln(), 0.625f64.ln()]).unwrap();
        assert!(v.max_abs_diff(&partial_projection(&theta, &log_diag)) < 1e-12);
    }

    #[test]
    fn lemma_upper_bound_on_embedded_flags() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let theta = ThetaSubset::full(3);
        for _ in 0..200 {
            let xi = CompactificationPoint::Boundary(embed_flag(&random_flag(&theta, &mut rng)));
            let h = random_sl(3, 2.0, &mut rng);
            let v = evaluate(&xi, &h.inverse().unwrap(), &theta).unwrap();
            let kh = cartan_projection(&h).unwrap();
            for k in 1..3 {
                assert!(
                    fundamental_weight(k, &v).unwrap() <= fundamental_weight(k, &kh).unwrap() + 1e-7
                );
            }
        }
    }

    #[test]
    fn action_law_and_equivariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for theta in thetas3() {
            for _ in 0..30 {
                let x = random_flag(&theta, &mut rng);
                let g1 = random_sl(3, 1.0, &mut rng);
                let g2 = random_sl(3, 1.0, &mut rng);
                let h = random_sl(3, 1.0, &mut rng);
                let xi = embed_flag(&x);
                let a = act(&g1.matmul(&g2), &xi).unwrap();
                let b = act(&g1, &act(&g2, &xi).unwrap()).unwrap();
                let va = evaluate(&CompactificationPoint::Boundary(a), &h, &theta).unwrap();
                let vb = evaluate(&CompactificationPoint::Boundary(b), &h, &theta).unwrap();
                assert!(va.max_abs_diff(&vb) < 1e-7);

                let moved = act(&g1, &xi).unwrap();
                let direct = embed_flag(&x.act(&g1).unwrap());
                let vm = evaluate(&CompactificationPoint::Boundary(moved), &h, &theta).unwrap();
                let vd = evaluate(&CompactificationPoint::Boundary(direct), &h, &theta).unwrap();
                assert!(vm.max_abs_diff(&vd) < 1e-7);
            }
        }
    }

    #[test]
    fn action_shifts_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let theta = ThetaSubset::full(3);
        let x = random_flag(&theta, &mut rng);
        let xi = CompactificationPoint::Boundary(embed_flag(&x));
        let g = random_sl(3, 1.0, &mut rng);
        let h = random_sl(3, 1.0, &mut rng);
        let moved = CompactificationPoint::Boundary(act(&g, &embed_flag(&x)).unwrap());
        let g_inv = g.inverse().unwrap();
        let lhs = evaluate(&moved, &h, &theta).unwrap();
        let rhs = evaluate(&xi, &g_inv.matmul(&h), &theta)
            .unwrap()
            .sub(&evaluate(&xi, &g_inv, &theta).unwrap());
        assert!(lhs.max_abs_diff(&rhs) < 1e-7);
    }

    #[test]
    fn limits_of_diagonal_flows() {
        let theta = ThetaSubset::full(3);
        let h = CartanVector::new(vec![1.0, 0.2, -1.2]).unwrap();
        let seq: Vec<Matrix> = (20..=40).map(|n| h.scale(n as f64).exp_diag()).collect();
        let (xi, diag) = orbit_limit(&seq, &theta).unwrap();
        assert!(diag.converged);
        assert!(diag.rank_one_defect.iter().all(|&r| r < 1e-6));
        let reference = embed_flag(&PartialFlag::standard(theta.clone()));
        for (a, b) in xi.reps().iter().zip(reference.reps()) {
            assert!(a.t.sub(&b.t).max_abs() < 1e-8);
        }
        assert!(xi.flag_tag().is_some());
    }

    #[test]
    fn oscillating_sequence_is_not_convergent() {
        let theta = ThetaSubset::new(2, vec![1]).unwrap();
        let a = Matrix::from_diag(&[3.0, 1.0 / 3.0]);
        let b = Matrix::from_diag(&[1.0 / 3.0, 3.0]);
        let seq = vec![a.clone(), b.clone(), a, b];
        assert!(matches!(orbit_limit(&seq, &theta), Err(Error::NonConvergent { .. })));
    }

    #[test]
    fn metric_basics() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let theta = ThetaSubset::full(3);
        let p = CompactificationPoint::Boundary(embed_flag(&random_flag(&theta, &mut rng)));
        let q = CompactificationPoint::Interior(random_sl(3, 1.0, &mut rng));
        assert_eq!(compactification_distance(&p, &p, &theta, 6).unwrap(), 0.0);
        let a = compactification_distance(&p, &q, &theta, 6).unwrap();
        let b = compactification_distance(&q, &p, &theta, 6).unwrap();
        assert_eq!(a, b);
        assert!(compactification_distance(&p, &q, &theta, 0).is_err());
    }

    #[test]
    fn probes_are_deterministic_and_at_the_right_radius() {
        let a = ProbeSet::new(3, 64, 0);
        let b = ProbeSet::new(3, 64, 0);
        assert_eq!(a.len(), 64);
        for (x, y) in a.probes().iter().zip(b.probes()) {
            assert_eq!(x.h, y.h);
            let r = cartan_projection(&x.h).unwrap().norm();
            assert!((r - x.radius).abs() < 1e-9);
            assert!(x.h.matmul(&x.h_inv).sub(&Matrix::identity(3)).max_abs() < 1e-9);
        }
    }

    #[test]
    fn json_export_has_fixed_schema() {
        let theta = ThetaSubset::new(3, vec![1, 2]).unwrap();
        let v = embed_flag(&PartialFlag::standard(theta)).to_json();
        assert_eq!(v["theta"], json!([1, 2]));
        assert_eq!(v["alphas"][0]["k"], json!(1));
        assert_eq!(v["alphas"][1]["T_matrix_rowmajor"].as_array().unwrap().len(), 9);
        assert!(v.get("flag_tag").is_some());
    }
}
