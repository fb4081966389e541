//! Shadows in the compactification and in the symmetric space, transversality
//! of flags, and search for conical chains.
//!
//! A point `eta` lies in the shadow `O_R(g)` when
//! `omega_alpha kappa(g) + omega_alpha eta(g o) < R` for every `alpha` in
//! `theta`. The left-hand side maximised over `alpha` is the *required
//! radius* of `eta` for `g`; the margin is `R` minus it.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::decomp::{
    cartan_projection, cartan_projection_with_inverse, flag_projection, validate_special_linear,
    PartialFlag,
};
use crate::error::{Error, Result};
use crate::horo::{act_point, embed_flag, evaluate_pair, signature_distance, CompactificationPoint, ProbeSet};
use crate::linalg::{subspace_gap, svd, Matrix};
use crate::orbit::{ls_slope, OrbitElement};
use crate::pattern_search::{pattern_search, PatternSearchSettings};
use crate::sampling::random_flag;
use crate::weyl::{chamber_margin, fundamental_coweight, istar_theta, CartanVector, ThetaSubset};

/// Half-width of the band in which a membership verdict is `Marginal`.
pub const SHADOW_BAND: f64 = 1e-9;

/// Chamber margin a chain must reach to count as contracting.
pub const CONTRACTING_MARGIN: f64 = 1.0;

/// Largest spread `kappa_1 - kappa_d` of a shadow element for which flags
/// in its shadow stay distinguishable in double precision. Beyond it the
/// shadow is narrower than the rounding error of a unit frame vector, and
/// evaluating `b_x(g o)` loses all accuracy.
pub const RESOLVABLE_SPREAD: f64 = 32.0;

fn omega_values(theta: &ThetaSubset, h: &CartanVector) -> Vec<f64> {
    theta
        .indices()
        .iter()
        .map(|&k| h.coords()[..k].iter().sum())
        .collect()
}

/// The shadow `O_R^theta(g)`.
#[derive(Clone, Debug)]
pub struct ShadowSpec {
    g: Matrix,
    g_inv: Matrix,
    r: f64,
    theta: ThetaSubset,
    kappa: CartanVector,
    omega_kappa: Vec<f64>,
}

/// Tri-state outcome of a membership test.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ShadowVerdict {
    Inside,
    Outside,
    Marginal,
}

impl ShadowVerdict {
    pub fn from_margin(margin: f64) -> Self {
        if margin > SHADOW_BAND {
            ShadowVerdict::Inside
        } else if margin < -SHADOW_BAND {
            ShadowVerdict::Outside
        } else {
            ShadowVerdict::Marginal
        }
    }

    /// Collapses to a boolean; marginal points count as outside.
    pub fn is_member(self) -> bool {
        self == ShadowVerdict::Inside
    }
}

impl ShadowSpec {
    pub fn new(g: Matrix, r: f64, theta: ThetaSubset) -> Result<Self> {
        validate_special_linear(&g)?;
        let g_inv = g.inverse()?;
        Self::with_inverse(g, g_inv, r, theta)
    }

    /// Uses a known inverse instead of computing one.
    pub fn with_inverse(g: Matrix, g_inv: Matrix, r: f64, theta: ThetaSubset) -> Result<Self> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::InvalidArgument(format!("shadow radius must be positive, got {r}")));
        }
        if g.rows() != theta.dim() || g_inv.rows() != theta.dim() {
            return Err(Error::Shape("shadow element and theta differ in dimension".into()));
        }
        let kappa = cartan_projection_with_inverse(&g, &g_inv)?;
        let omega_kappa = omega_values(&theta, &kappa);
        Ok(Self {
            g,
            g_inv,
            r,
            theta,
            kappa,
            omega_kappa,
        })
    }

    pub fn from_element(e: &OrbitElement, r: f64, theta: ThetaSubset) -> Result<Self> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::InvalidArgument(format!("shadow radius must be positive, got {r}")));
        }
        let omega_kappa = omega_values(&theta, &e.kappa);
        Ok(Self {
            g: e.matrix.clone(),
            g_inv: e.inverse.clone(),
            r,
            theta,
            kappa: e.kappa.clone(),
            omega_kappa,
        })
    }

    pub fn g(&self) -> &Matrix {
        &self.g
    }

    pub fn g_inv(&self) -> &Matrix {
        &self.g_inv
    }

    pub fn radius(&self) -> f64 {
        self.r
    }

    pub fn theta(&self) -> &ThetaSubset {
        &self.theta
    }

    pub fn kappa(&self) -> &CartanVector {
        &self.kappa
    }

    /// Whether `kappa_1 - kappa_d` is at most [`RESOLVABLE_SPREAD`].
    pub fn is_resolvable(&self) -> bool {
        let c = self.kappa.coords();
        c[0] - c[c.len() - 1] <= RESOLVABLE_SPREAD
    }

    pub fn with_radius(&self, r: f64) -> Result<Self> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::InvalidArgument(format!("shadow radius must be positive, got {r}")));
        }
        Ok(Self { r, ..self.clone() })
    }

    /// `max_alpha (omega_alpha kappa(g) + omega_alpha p(g o))`.
    pub fn required_radius(&self, p: &CompactificationPoint) -> Result<f64> {
        let v = evaluate_pair(p, &self.g, &self.g_inv, &self.theta)?;
        Ok(omega_values(&self.theta, &v)
            .iter()
            .zip(&self.omega_kappa)
            .map(|(a, b)| a + b)
            .fold(f64::NEG_INFINITY, f64::max))
    }

    /// Required radius of the interior point `gamma o`, reusing the Cartan
    /// projection already stored with `gamma`.
    pub fn required_radius_interior(&self, gamma: &OrbitElement) -> Result<f64> {
        let rel = cartan_projection_with_inverse(
            &self.g_inv.matmul(&gamma.matrix),
            &gamma.inverse.matmul(&self.g),
        )?;
        let rel_w = omega_values(&self.theta, &rel);
        let own_w = omega_values(&self.theta, &gamma.kappa);
        Ok(self
            .omega_kappa
            .iter()
            .zip(rel_w.iter().zip(&own_w))
            .map(|(k, (a, b))| k + a - b)
            .fold(f64::NEG_INFINITY, f64::max))
    }

    pub fn margin(&self, p: &CompactificationPoint) -> Result<f64> {
        Ok(self.r - self.required_radius(p)?)
    }

    pub fn verdict(&self, p: &CompactificationPoint) -> Result<ShadowVerdict> {
        Ok(ShadowVerdict::from_margin(self.margin(p)?))
    }
}

/// Whether `p` lies in the shadow; marginal points are excluded.
pub fn shadow_membership(s: &ShadowSpec, p: &CompactificationPoint) -> Result<bool> {
    Ok(s.verdict(p)?.is_member())
}

/// Largest pairwise compactification distance among the candidates that
/// lie in the shadow, a lower bound on its diameter.
pub fn shadow_diameter(s: &ShadowSpec, candidates: &[CompactificationPoint], probe_depth: usize) -> Result<f64> {
    if probe_depth == 0 {
        return Err(Error::InvalidArgument("probe_depth must be at least 1".into()));
    }
    let members: Vec<&CompactificationPoint> = candidates
        .par_iter()
        .map(|p| Ok((p, shadow_membership(s, p)?)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .filter_map(|(p, m)| m.then_some(p))
        .collect();
    if members.len() < 2 {
        return Ok(0.0);
    }
    let probes = ProbeSet::standard(s.theta.dim());
    let sigs = members
        .par_iter()
        .map(|p| probes.signature(p, &s.theta))
        .collect::<Result<Vec<_>>>()?;
    let n = sigs.len();
    let rows = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut best: f64 = 0.0;
            for j in i + 1..n {
                best = best.max(signature_distance(&sigs[i], &sigs[j], &probes, probe_depth)?);
            }
            Ok(best)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(rows.into_iter().fold(0.0, f64::max))
}

/// `(I - A)(I + A)^{-1}` for skew-symmetric `A`.
fn cayley(a: &Matrix) -> Result<Matrix> {
    let n = a.rows();
    let id = Matrix::identity(n);
    Ok(id.sub(a).matmul(&id.add(a).inverse()?))
}

/// Candidate boundary points concentrated near the shadow `s`: the flag
/// `U_theta(g)`, perturbations of the left Cartan factor of `g` on the
/// scale `exp(R - (kappa_i - kappa_j))` at three relative sizes, and a few
/// uniformly random flags.
pub fn shadow_adapted_candidates<R: Rng + ?Sized>(
    s: &ShadowSpec,
    count: usize,
    rng: &mut R,
) -> Result<Vec<CompactificationPoint>> {
    let (g, r, theta) = (&s.g, s.r, &s.theta);
    let d = theta.dim();
    let u = svd(g)?.left_factor;
    let kappa = s.kappa.coords();
    let mut out = Vec::with_capacity(count);
    if let Ok(x) = flag_projection(g, theta, 0.0) {
        out.push(CompactificationPoint::Boundary(embed_flag(&x)));
    }
    let random_count = count / 8;
    let sizes = [0.25, 1.0, 4.0];
    let mut i = 0;
    while out.len() + random_count < count {
        let size = sizes[i % sizes.len()];
        i += 1;
        let mut a = Matrix::zeros(d, d);
        for p in 0..d {
            for q in p + 1..d {
                let scale = (r - (kappa[p] - kappa[q])).exp().min(1.0) * size;
                let v = rng.random_range(-1.0..1.0) * scale;
                a[(q, p)] = v;
                a[(p, q)] = -v;
            }
        }
        let frame = u.matmul(&cayley(&a)?);
        let x = PartialFlag::from_frame(theta.clone(), &frame)?;
        out.push(CompactificationPoint::Boundary(embed_flag(&x)));
    }
    while out.len() < count {
        out.push(CompactificationPoint::Boundary(embed_flag(&random_flag(theta, rng))));
    }
    Ok(out)
}

/// One histogram bin of shadow margins, `lo <= margin < hi`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

/// Summary of one shadow over a candidate set.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ShadowReport {
    pub g_word: String,
    #[serde(rename = "R")]
    pub r: f64,
    pub theta: Vec<usize>,
    pub members: usize,
    pub margin_histogram: Vec<HistogramBin>,
    pub diameter_estimate: f64,
}

const HISTOGRAM_EDGES: [f64; 9] = [-10.0, -5.0, -2.0, -1.0, 0.0, 1.0, 2.0, 5.0, 10.0];

pub fn shadow_report(
    s: &ShadowSpec,
    g_word: &str,
    candidates: &[CompactificationPoint],
    probe_depth: usize,
) -> Result<ShadowReport> {
    let margins = candidates
        .par_iter()
        .map(|p| s.margin(p))
        .collect::<Result<Vec<f64>>>()?;
    let mut edges = vec![f64::NEG_INFINITY];
    edges.extend_from_slice(&HISTOGRAM_EDGES);
    edges.push(f64::INFINITY);
    let margin_histogram = edges
        .windows(2)
        .map(|w| HistogramBin {
            lo: w[0],
            hi: w[1],
            count: margins.iter().filter(|&&m| m >= w[0] && m < w[1]).count(),
        })
        .collect();
    let members = margins
        .iter()
        .filter(|&&m| ShadowVerdict::from_margin(m).is_member())
        .count();
    Ok(ShadowReport {
        g_word: g_word.to_string(),
        r: s.r,
        theta: s.theta.indices().to_vec(),
        members,
        margin_histogram,
        diameter_estimate: shadow_diameter(s, candidates, probe_depth)?,
    })
}

/// Verdict of [`symmetric_shadow_membership`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SymmetricVerdict {
    /// A point of `k A^+ o` within distance `R` of `g o` was found.
    Member,
    /// The search converged above `R`.
    NotMember,
    /// The budget ran out before convergence, with every value found `>= R`.
    Unknown,
}

/// Settings for [`symmetric_shadow_membership`].
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricShadowSettings {
    pub search: PatternSearchSettings,
    /// Multistarts when the fiber of representatives is non-trivial.
    pub fiber_starts: usize,
    /// Multistarts for full flags.
    pub full_flag_starts: usize,
    pub seed: u64,
}

impl Default for SymmetricShadowSettings {
    fn default() -> Self {
        Self {
            search: PatternSearchSettings::default(),
            fiber_starts: 32,
            full_flag_starts: 4,
            seed: 0x5eed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SymmetricShadowOutcome {
    pub verdict: SymmetricVerdict,
    /// Smallest distance `dist(k e^H o, g o)` found.
    pub minimum: f64,
    pub evals: usize,
}

impl SymmetricShadowOutcome {
    pub fn is_member(&self) -> bool {
        self.verdict == SymmetricVerdict::Member
    }
}

/// Givens angles parametrizing the identity component of the block
/// rotations cut out by `theta`.
fn fiber_pairs(theta: &ThetaSubset) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for w in theta.block_bounds().windows(2) {
        for i in w[0]..w[1] {
            for j in i + 1..w[1] {
                pairs.push((i, j));
            }
        }
    }
    pairs
}

fn block_rotation(d: usize, pairs: &[(usize, usize)], angles: &[f64]) -> Matrix {
    let mut m = Matrix::identity(d);
    for (&(i, j), &phi) in pairs.iter().zip(angles) {
        let (s, c) = phi.sin_cos();
        for row in 0..d {
            let a = m[(row, i)];
            let b = m[(row, j)];
            m[(row, i)] = c * a + s * b;
            m[(row, j)] = -s * a + c * b;
        }
    }
    m
}

/// Decides whether `x` lies in the symmetric-space shadow `O_R^theta(o, g o)`
/// by minimizing `|kappa(e^{-H} m^{-1} k_0^{-1} g)|` over `H` in the closed
/// chamber and block rotations `m` in the stabilizer of `x`, with `k_0` a
/// lift of `x`.
pub fn symmetric_shadow_membership(
    theta: &ThetaSubset,
    g: &Matrix,
    r: f64,
    x: &PartialFlag,
    settings: &SymmetricShadowSettings,
) -> Result<SymmetricShadowOutcome> {
    if x.theta() != theta {
        return Err(Error::InvalidTheta(format!(
            "flag of type {:?} tested against {theta:?}",
            x.theta()
        )));
    }
    let d = theta.dim();
    if g.rows() != d {
        return Err(Error::Shape("group element and flag differ in dimension".into()));
    }
    let base = x.lift().transpose().matmul(g);
    let coweights: Vec<CartanVector> = (1..d).map(|j| fundamental_coweight(d, j)).collect();
    let pairs = fiber_pairs(theta);
    let n_c = d - 1;
    let objective = |p: &[f64]| -> f64 {
        let m = block_rotation(d, &pairs, &p[n_c..]);
        let mut y = m.transpose().matmul(&base);
        let mut h = vec![0.0; d];
        for (c, w) in p[..n_c].iter().zip(&coweights) {
            for (hi, wi) in h.iter_mut().zip(w.coords()) {
                *hi += c * wi;
            }
        }
        for (i, hi) in h.iter().enumerate() {
            let s = (-hi).exp();
            for j in 0..d {
                y[(i, j)] *= s;
            }
        }
        cartan_projection(&y).map(|k| k.norm()).unwrap_or(f64::INFINITY)
    };
    let kappa = cartan_projection(g)?;
    let roots: Vec<f64> = (0..n_c)
        .map(|j| (kappa.coords()[j] - kappa.coords()[j + 1]).max(0.0))
        .collect();
    let starts = if pairs.is_empty() {
        settings.full_flag_starts.max(1)
    } else {
        settings.fiber_starts.max(1)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let mut lower = vec![Some(0.0); n_c];
    lower.extend(std::iter::repeat_n(None, pairs.len()));
    let mut scales = vec![1.0; n_c];
    scales.extend(std::iter::repeat_n(0.5, pairs.len()));
    let mut best = f64::INFINITY;
    let mut best_converged = false;
    let mut evals = 0;
    for s in 0..starts {
        let mut x0: Vec<f64> = roots.clone();
        if s > 0 {
            for v in x0.iter_mut() {
                *v = *v * rng.random_range(0.0..2.0) + rng.random_range(0.0..1.0);
            }
        }
        for _ in 0..pairs.len() {
            x0.push(if s > 0 {
                rng.random_range(-std::f64::consts::PI..std::f64::consts::PI)
            } else {
                0.0
            });
        }
        let res = pattern_search(objective, &x0, &lower, &scales, &settings.search);
        evals += res.evals;
        if res.value < best {
            best = res.value;
            best_converged = res.converged;
        }
        if best < r {
            break;
        }
    }
    let verdict = if best < r {
        SymmetricVerdict::Member
    } else if best_converged {
        SymmetricVerdict::NotMember
    } else {
        SymmetricVerdict::Unknown
    };
    Ok(SymmetricShadowOutcome {
        verdict,
        minimum: best,
        evals,
    })
}

/// Radius `2 R max_{k in theta} sqrt(k (d - k) / d)`, for which every
/// symmetric-space shadow of radius `R` is contained in the
/// compactification shadow. `omega_k` has norm `sqrt(k(d-k)/d)` on
/// traceless vectors, and the required radius of a flag whose ray passes
/// within `R` of `g o` is at most `omega_k kappa(u) + omega_k kappa(u^{-1})`
/// with `|kappa(u)| < R`.
pub fn comparison_radius_bound(theta: &ThetaSubset, r: f64) -> f64 {
    let d = theta.dim() as f64;
    let c = theta
        .indices()
        .iter()
        .map(|&k| (k as f64 * (d - k as f64) / d).sqrt())
        .fold(0.0, f64::max);
    2.0 * r * c
}

/// Radius `r(R)` calibrated from symmetric-shadow members.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparisonCalibration {
    pub r: f64,
    pub analytic_bound: f64,
    pub max_required: f64,
    pub samples: usize,
}

/// `r(R) = min(1.25 * max required radius, analytic bound)` over a sample
/// of pairs `(g, x)` known to satisfy symmetric-shadow membership at `R`.
pub fn calibrate_comparison_radius(
    theta: &ThetaSubset,
    r: f64,
    members: &[(Matrix, PartialFlag)],
) -> Result<ComparisonCalibration> {
    let required = members
        .par_iter()
        .map(|(g, x)| {
            let spec = ShadowSpec::new(g.clone(), r, theta.clone())?;
            spec.required_radius(&CompactificationPoint::Boundary(embed_flag(x)))
        })
        .collect::<Result<Vec<f64>>>()?;
    let max_required = required.into_iter().fold(0.0, f64::max);
    let analytic_bound = comparison_radius_bound(theta, r);
    Ok(ComparisonCalibration {
        r: (1.25 * max_required).min(analytic_bound).max(f64::MIN_POSITIVE),
        analytic_bound,
        max_required,
        samples: members.len(),
    })
}

/// Smallest singular value of `[x_k | y_{d-k}]` for each `k` in the type of
/// `x`, where `y` has the opposite type.
pub fn transverse_gaps(x: &PartialFlag, y: &PartialFlag) -> Result<Vec<f64>> {
    let theta = x.theta();
    if *y.theta() != istar_theta(theta) {
        return Err(Error::InvalidTheta(format!(
            "flag of type {:?} is not opposite to {theta:?}",
            y.theta()
        )));
    }
    let d = theta.dim();
    theta
        .indices()
        .iter()
        .map(|&k| subspace_gap(&x.subspace(k)?, &y.subspace(d - k)?))
        .collect()
}

/// Whether every gap from [`transverse_gaps`] exceeds `tol`.
pub fn transverse_pair_check(x: &PartialFlag, y: &PartialFlag, tol: f64) -> Result<bool> {
    Ok(transverse_gaps(x, y)?.iter().all(|&g| g > tol))
}

/// An escaping sequence of orbit elements whose shadows contain a point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConicalChain {
    /// Positions in the orbit slice.
    pub indices: Vec<usize>,
    pub word_lengths: Vec<usize>,
    pub shadow_margins: Vec<f64>,
    pub chamber_margins: Vec<f64>,
    /// Chamber margins trend upward and end above [`CONTRACTING_MARGIN`].
    pub contracting: bool,
}

/// Greedy search for a chain of at least `min_chain` elements of strictly
/// increasing word length whose `R`-shadows contain `xi`. For each word
/// length the member with the largest shadow margin is kept.
pub fn conical_witness(
    xi: &CompactificationPoint,
    orbit: &[OrbitElement],
    theta: &ThetaSubset,
    r: f64,
    min_chain: usize,
) -> Result<Option<ConicalChain>> {
    let scored = orbit
        .par_iter()
        .enumerate()
        .filter(|(_, e)| !e.word.is_empty())
        .map(|(i, e)| {
            let spec = ShadowSpec::from_element(e, r, theta.clone())?;
            Ok((i, spec.margin(xi)?))
        })
        .collect::<Result<Vec<(usize, f64)>>>()?;
    let max_len = orbit.iter().map(|e| e.word.len()).max().unwrap_or(0);
    let mut best: Vec<Option<(usize, f64)>> = vec![None; max_len + 1];
    for (i, m) in scored {
        if !ShadowVerdict::from_margin(m).is_member() {
            continue;
        }
        let slot = &mut best[orbit[i].word.len()];
        if slot.is_none_or(|(_, bm)| m > bm) {
            *slot = Some((i, m));
        }
    }
    let picked: Vec<(usize, f64)> = best.into_iter().flatten().collect();
    if picked.len() < min_chain.max(1) {
        return Ok(None);
    }
    let chamber_margins: Vec<f64> = picked
        .iter()
        .map(|&(i, _)| chamber_margin(&orbit[i].kappa, theta))
        .collect();
    let positions: Vec<f64> = (0..picked.len()).map(|i| i as f64).collect();
    let last = *chamber_margins.last().expect("non-empty chain");
    let contracting = last >= CONTRACTING_MARGIN && ls_slope(&positions, &chamber_margins) > 0.0;
    Ok(Some(ConicalChain {
        word_lengths: picked.iter().map(|&(i, _)| orbit[i].word.len()).collect(),
        indices: picked.iter().map(|&(i, _)| i).collect(),
        shadow_margins: picked.iter().map(|&(_, m)| m).collect(),
        chamber_margins,
        contracting,
    }))
}

/// Outcome of [`shadow_translate_radius`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TranslateReport {
    pub r_prime: f64,
    /// Sample pairs whose point lies in the original shadow.
    pub checked: usize,
    /// Transported points found outside the enlarged shadow.
    pub violations: usize,
}

/// `R' = R + max_alpha (omega_alpha kappa(g) + omega_alpha kappa(g^{-1}))`,
/// for which `g O_R(h)` is contained in `O_{R'}(g h)`. Each pair `(h, p)` of
/// the sample with `p` in `O_R(h)` is transported and checked.
pub fn shadow_translate_radius(
    g: &Matrix,
    r: f64,
    theta: &ThetaSubset,
    sample: &[(Matrix, CompactificationPoint)],
) -> Result<TranslateReport> {
    validate_special_linear(g)?;
    let g_inv = g.inverse()?;
    let forward = omega_values(theta, &cartan_projection_with_inverse(g, &g_inv)?);
    let backward = omega_values(theta, &cartan_projection_with_inverse(&g_inv, g)?);
    let c = forward
        .iter()
        .zip(&backward)
        .map(|(a, b)| a + b)
        .fold(0.0, f64::max);
    let r_prime = r + c;
    let outcomes = sample
        .par_iter()
        .map(|(h, p)| {
            let spec = ShadowSpec::new(h.clone(), r, theta.clone())?;
            if !shadow_membership(&spec, p)? {
                return Ok(None);
            }
            let moved_spec = ShadowSpec::new(g.matmul(h), r_prime, theta.clone())?;
            let moved = act_point(g, p)?;
            Ok(Some(moved_spec.verdict(&moved)? == ShadowVerdict::Outside))
        })
        .collect::<Result<Vec<Option<bool>>>>()?;
    Ok(TranslateReport {
        r_prime,
        checked: outcomes.iter().filter(|o| o.is_some()).count(),
        violations: outcomes.iter().filter(|o| **o == Some(true)).count(),
    })
}
