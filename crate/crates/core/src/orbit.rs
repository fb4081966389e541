//! Ball enumeration for finitely generated matrix groups.
//!
//! Words are sequences of letters; letter `2i` stands for generator `i` and
//! `2i + 1` for its inverse. Balls are grown breadth-first over reduced
//! words, each shell expanded in parallel and merged in a fixed order.

use std::collections::HashMap;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::decomp::{cartan_projection_with_inverse, flag_projection, validate_special_linear, PartialFlag};
use crate::error::{Error, Result};
use crate::linalg::{wedge_columns, Matrix};
use crate::weyl::{chamber_margin, CartanVector, Functional, ThetaSubset};

/// Default hard cap on the number of enumerated elements.
pub const DEFAULT_CAP: usize = 5_000_000;

/// Default tolerance under which two matrices are identified.
pub const DEFAULT_DEDUP_TOL: f64 = 1e-6;

/// Flags closer than this are merged by [`limit_set_sample`].
pub const FLAG_MERGE_TOL: f64 = 1e-6;

/// Generators of a subgroup of `SL(d, R)`, with inverses.
#[derive(Clone, Debug)]
pub struct GroupPresentation {
    dim: usize,
    generators: Vec<Matrix>,
    inverses: Vec<Matrix>,
    labels: Vec<String>,
}

impl GroupPresentation {
    /// Validates every generator as an element of `SL(d, R)`.
    pub fn new(generators: Vec<Matrix>, labels: Vec<String>) -> Result<Self> {
        if generators.is_empty() {
            return Err(Error::InvalidArgument("at least one generator required".into()));
        }
        if labels.len() != generators.len() {
            return Err(Error::InvalidArgument("one label per generator".into()));
        }
        if generators.len() > 127 {
            return Err(Error::InvalidArgument("at most 127 generators".into()));
        }
        let dim = generators[0].rows();
        let mut inverses = Vec::with_capacity(generators.len());
        for g in &generators {
            if g.rows() != dim {
                return Err(Error::Shape("generators of different sizes".into()));
            }
            validate_special_linear(g)?;
            inverses.push(g.inverse()?);
        }
        Ok(Self {
            dim,
            generators,
            inverses,
            labels,
        })
    }

    /// Labels `g1, g2, ...`.
    pub fn unlabelled(generators: Vec<Matrix>) -> Result<Self> {
        let labels = (1..=generators.len()).map(|i| format!("g{i}")).collect();
        Self::new(generators, labels)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.generators.len()
    }

    pub fn generators(&self) -> &[Matrix] {
        &self.generators
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Matrix of a letter.
    pub fn letter(&self, l: u8) -> &Matrix {
        let i = (l / 2) as usize;
        if l.is_multiple_of(2) {
            &self.generators[i]
        } else {
            &self.inverses[i]
        }
    }

    /// Matrix of the inverse of a letter.
    pub fn letter_inverse(&self, l: u8) -> &Matrix {
        self.letter(l ^ 1)
    }

    /// Multiplies out a word.
    pub fn evaluate_word(&self, word: &[u8]) -> Matrix {
        word.iter()
            .fold(Matrix::identity(self.dim), |acc, &l| acc.matmul(self.letter(l)))
    }

    /// `id` for the empty word, otherwise letters joined by dots with
    /// inverses written `label^-1`.
    pub fn format_word(&self, word: &[u8]) -> String {
        if word.is_empty() {
            return "id".to_string();
        }
        word.iter()
            .map(|&l| {
                let name = &self.labels[(l / 2) as usize];
                if l % 2 == 0 {
                    name.clone()
                } else {
                    format!("{name}^-1")
                }
            })
            .collect::<Vec<_>>()
            .join(".")
    }

    /// Inverse of [`format_word`](Self::format_word).
    pub fn parse_word(&self, s: &str) -> Result<Vec<u8>> {
        let s = s.trim();
        if s == "id" || s.is_empty() {
            return Ok(Vec::new());
        }
        s.split('.')
            .map(|tok| {
                let (name, inv) = match tok.strip_suffix("^-1") {
                    Some(n) => (n, 1u8),
                    None => (tok, 0u8),
                };
                self.labels
                    .iter()
                    .position(|l| l == name)
                    .map(|i| 2 * i as u8 + inv)
                    .ok_or_else(|| Error::InvalidArgument(format!("unknown generator {name}")))
            })
            .collect()
    }
}

/// A group element together with its word and Cartan data.
#[derive(Clone, Debug)]
pub struct OrbitElement {
    pub matrix: Matrix,
    /// The inverse, accumulated from generator inverses along the word.
    pub inverse: Matrix,
    pub word: Vec<u8>,
    pub kappa: CartanVector,
    pub theta_margin: f64,
    pub phi_length: f64,
}

impl OrbitElement {
    pub fn word_length(&self) -> usize {
        self.word.len()
    }
}

/// Parameters of [`enumerate_ball`].
#[derive(Clone, Debug)]
pub struct BallConfig {
    pub max_word_length: usize,
    pub dedup_tol: f64,
    pub cap: usize,
    /// Roots used for `theta_margin`; defaults to all simple roots.
    pub theta: Option<ThetaSubset>,
    /// Functional used for `phi_length`; defaults to `omega_1`.
    pub phi: Option<Functional>,
}

impl BallConfig {
    pub fn new(max_word_length: usize) -> Self {
        Self {
            max_word_length,
            dedup_tol: DEFAULT_DEDUP_TOL,
            cap: DEFAULT_CAP,
            theta: None,
            phi: None,
        }
    }
}

/// Hash index answering "is there a stored vector within `tol` of this one"
/// in expected constant time. Vectors are bucketed by a fixed linear
/// functional of their scaled entries; a query inspects its own bucket and
/// both neighbours.
pub(crate) struct ToleranceIndex {
    weights: Vec<f64>,
    tol: f64,
    width: f64,
    buckets: HashMap<i64, Vec<u32>>,
    relative: bool,
}

impl ToleranceIndex {
    pub(crate) fn new(len: usize, tol: f64, relative: bool) -> Self {
        let weights: Vec<f64> = (0..len)
            .map(|i| 0.5 + 0.5 * ((i as f64 + 1.0) * 0.618_033_988_749_895).fract())
            .collect();
        Self {
            weights,
            tol,
            width: 4.0 * len as f64 * tol,
            buckets: HashMap::new(),
            relative,
        }
    }

    fn scale(&self, v: &[f64]) -> f64 {
        if self.relative {
            v.iter().fold(1.0f64, |m, x| m.max(x.abs()))
        } else {
            1.0
        }
    }

    fn key(&self, v: &[f64]) -> i64 {
        let s = self.scale(v);
        let f: f64 = v.iter().zip(&self.weights).map(|(a, w)| a * w).sum();
        (f / (s * self.width)).floor() as i64
    }

    /// Finds a stored id whose vector (looked up through `get`) lies within
    /// tolerance of `v`.
    pub(crate) fn find<'a>(&self, v: &[f64], get: impl Fn(u32) -> &'a [f64]) -> Option<u32> {
        self.find_with(v, get, |_| true)
    }

    /// Like [`ToleranceIndex::find`], but skips candidates rejected by
    /// `accept`.
    pub(crate) fn find_with<'a>(
        &self,
        v: &[f64],
        get: impl Fn(u32) -> &'a [f64],
        accept: impl Fn(u32) -> bool,
    ) -> Option<u32> {
        let key = self.key(v);
        let s = self.scale(v);
        for k in [key - 1, key, key + 1] {
            if let Some(ids) = self.buckets.get(&k) {
                for &id in ids {
                    let w = get(id);
                    let close = v
                        .iter()
                        .zip(w)
                        .all(|(a, b)| (a - b).abs() <= self.tol * s);
                    if close && accept(id) {
                        return Some(id);
                    }
                }
            }
        }
        None
    }

    pub(crate) fn insert(&mut self, v: &[f64], id: u32) {
        let key = self.key(v);
        self.buckets.entry(key).or_default().push(id);
    }
}

/// Whether `m` represents the same group element as the stored element with
/// inverse `stored_inv`: `stored_inv * m` must be the identity up to rounding
/// proportional to the sizes of the factors.
pub(crate) fn same_element(stored_inv: &Matrix, m: &Matrix, tol: f64) -> bool {
    let d = m.rows();
    let prod = stored_inv.matmul(m);
    let bound = tol.max(1e-11 * stored_inv.max_abs() * m.max_abs());
    (0..d).all(|i| {
        (0..d).all(|j| {
            let target = if i == j { 1.0 } else { 0.0 };
            (prod[(i, j)] - target).abs() <= bound
        })
    })
}

/// `(M, M^{-1})` rescaled to determinant one when the determinant can be
/// trusted, which requires a moderate condition number.
fn renormalize(m: Matrix, m_inv: Matrix) -> (Matrix, Matrix) {
    let cond = m.max_abs() * m_inv.max_abs();
    if cond > 1e4 {
        return (m, m_inv);
    }
    let det = m.det();
    if !(det > 0.0) || (det - 1.0).abs() < 1e-15 {
        return (m, m_inv);
    }
    let d = m.rows() as f64;
    let c = det.powf(1.0 / d);
    (m.scale(1.0 / c), m_inv.scale(c))
}

fn annotate(
    matrix: Matrix,
    inverse: Matrix,
    word: Vec<u8>,
    theta: &ThetaSubset,
    phi: &Functional,
) -> Result<OrbitElement> {
    let kappa = cartan_projection_with_inverse(&matrix, &inverse)?;
    Ok(OrbitElement {
        theta_margin: chamber_margin(&kappa, theta),
        phi_length: phi.eval(&kappa),
        matrix,
        inverse,
        word,
        kappa,
    })
}

/// Enumerates the word ball of radius `max_word_length`.
///
/// Elements whose matrices agree within `dedup_tol` (relative to the
/// largest entry, floored at one) are merged, keeping the shorter and then
/// lexicographically smaller word. The output is sorted by word length and
/// then lexicographically, and does not depend on the number of worker
/// threads.
pub fn enumerate_ball(p: &GroupPresentation, cfg: &BallConfig) -> Result<Vec<OrbitElement>> {
    if !(cfg.dedup_tol > 0.0) {
        return Err(Error::InvalidArgument("dedup_tol must be positive".into()));
    }
    let d = p.dim();
    let theta = cfg.theta.clone().unwrap_or_else(|| ThetaSubset::full(d));
    if theta.dim() != d {
        return Err(Error::InvalidTheta("theta dimension differs from the group".into()));
    }
    let phi = cfg.phi.clone().unwrap_or_else(|| Functional::omega(1));
    let letters = 2 * p.rank() as u8;

    let mut out = vec![annotate(
        Matrix::identity(d),
        Matrix::identity(d),
        Vec::new(),
        &theta,
        &phi,
    )?];
    let mut index = ToleranceIndex::new(d * d, cfg.dedup_tol, true);
    index.insert(out[0].matrix.as_slice(), 0);
    let mut frontier: std::ops::Range<usize> = 0..1;

    for _len in 1..=cfg.max_word_length {
        let parents = &out[frontier.clone()];
        let children: Vec<Vec<OrbitElement>> = parents
            .par_iter()
            .map(|parent| {
                let last = parent.word.last().copied();
                (0..letters)
                    .filter(|&l| last.is_none_or(|x| x != (l ^ 1)))
                    .map(|l| {
                        let m = parent.matrix.matmul(p.letter(l));
                        let m_inv = p.letter_inverse(l).matmul(&parent.inverse);
                        let (m, m_inv) = renormalize(m, m_inv);
                        let mut word = Vec::with_capacity(parent.word.len() + 1);
                        word.extend_from_slice(&parent.word);
                        word.push(l);
                        annotate(m, m_inv, word, &theta, &phi)
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;

        let start = out.len();
        for child in children.into_iter().flatten() {
            let found = index.find_with(
                child.matrix.as_slice(),
                |id| out[id as usize].matrix.as_slice(),
                |id| same_element(&out[id as usize].inverse, &child.matrix, cfg.dedup_tol),
            );
            if found.is_none() {
                let id = out.len();
                if id >= cfg.cap {
                    return Err(Error::CapExceeded { cap: cfg.cap });
                }
                index.insert(child.matrix.as_slice(), id as u32);
                out.push(child);
            }
        }
        frontier = start..out.len();
        if frontier.is_empty() {
            break;
        }
    }
    Ok(out)
}

/// Margin statistics of one word-length shell.
#[derive(Clone, Debug, Serialize)]
pub struct ShellMargins {
    pub word_length: usize,
    pub count: usize,
    pub min_margin: f64,
    pub mean_margin: f64,
}

/// Output of [`regularity_report`].
#[derive(Clone, Debug, Serialize)]
pub struct RegularityReport {
    pub shells: Vec<ShellMargins>,
    /// Least-squares slope of the shell minimum over the outer half of shells.
    pub tail_slope: f64,
    pub diverging: bool,
}

/// Least-squares slope of `y` against `x`.
pub fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    if x.len() < 2 {
        return 0.0;
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

/// Slope threshold separating growing margins from numerically flat ones.
const DIVERGENCE_SLOPE: f64 = 1e-6;

/// Per-shell chamber margins and a divergence verdict.
pub fn regularity_report(orbit: &[OrbitElement], theta: &ThetaSubset) -> Result<RegularityReport> {
    if orbit.is_empty() {
        return Err(Error::InvalidArgument("empty orbit".into()));
    }
    let max_len = orbit.iter().map(OrbitElement::word_length).max().unwrap_or(0);
    let mut shells: Vec<ShellMargins> = (0..=max_len)
        .map(|l| ShellMargins {
            word_length: l,
            count: 0,
            min_margin: f64::INFINITY,
            mean_margin: 0.0,
        })
        .collect();
    for e in orbit {
        let m = chamber_margin(&e.kappa, theta);
        let s = &mut shells[e.word_length()];
        s.count += 1;
        s.min_margin = s.min_margin.min(m);
        s.mean_margin += m;
    }
    shells.retain(|s| s.count > 0);
    for s in &mut shells {
        s.mean_margin /= s.count as f64;
    }
    let nonzero: Vec<&ShellMargins> = shells.iter().filter(|s| s.word_length > 0).collect();
    let tail = &nonzero[nonzero.len() / 2..];
    let xs: Vec<f64> = tail.iter().map(|s| s.word_length as f64).collect();
    let ys: Vec<f64> = tail.iter().map(|s| s.min_margin).collect();
    let tail_slope = ls_slope(&xs, &ys);
    Ok(RegularityReport {
        diverging: tail.len() >= 2 && tail_slope > DIVERGENCE_SLOPE,
        tail_slope,
        shells,
    })
}

/// A sampled limit flag with the word that produced it.
#[derive(Clone, Debug)]
pub struct LimitFlag {
    pub flag: PartialFlag,
    pub word: Vec<u8>,
}

/// Plücker coordinates of every member of a flag, each sign-normalized so
/// that its first non-negligible entry is positive.
pub fn flag_plucker_coordinates(x: &PartialFlag) -> Vec<Vec<f64>> {
    x.theta()
        .indices()
        .iter()
        .map(|&k| {
            let mut v = wedge_columns(&x.frame().leading_columns(k));
            let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            v.iter_mut().for_each(|a| *a /= n);
            if let Some(first) = v.iter().find(|a| a.abs() > 1e-12) {
                if *first < 0.0 {
                    v.iter_mut().for_each(|a| *a = -*a);
                }
            }
            v
        })
        .collect()
}

/// `U_theta(gamma)` for every element with `theta_margin > margin_floor`
/// (margin taken over `theta`), merging flags closer than
/// [`FLAG_MERGE_TOL`].
pub fn limit_set_sample(
    orbit: &[OrbitElement],
    theta: &ThetaSubset,
    margin_floor: f64,
) -> Vec<LimitFlag> {
    let candidates: Vec<Option<LimitFlag>> = orbit
        .par_iter()
        .map(|e| {
            if !(chamber_margin(&e.kappa, theta) > margin_floor) {
                return None;
            }
            flag_projection(&e.matrix, theta, margin_floor.max(0.0))
                .ok()
                .map(|flag| LimitFlag {
                    flag,
                    word: e.word.clone(),
                })
        })
        .collect();
    let mut kept: Vec<LimitFlag> = Vec::new();
    let mut coords: Vec<Vec<f64>> = Vec::new();
    let mut index: Option<ToleranceIndex> = None;
    for c in candidates.into_iter().flatten() {
        let key: Vec<f64> = flag_plucker_coordinates(&c.flag).concat();
        let idx = index.get_or_insert_with(|| ToleranceIndex::new(key.len(), FLAG_MERGE_TOL, false));
        if idx.find(&key, |id| coords[id as usize].as_slice()).is_some() {
            continue;
        }
        idx.insert(&key, kept.len() as u32);
        coords.push(key);
        kept.push(c);
    }
    kept
}

/// Writes the orbit table with columns
/// `word, word_length, kappa_1..kappa_d, theta_margin, phi_length`.
pub fn write_orbit_csv<W: Write>(
    writer: W,
    p: &GroupPresentation,
    orbit: &[OrbitElement],
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let d = p.dim();
    let mut header = vec!["word".to_string(), "word_length".to_string()];
    header.extend((1..=d).map(|i| format!("kappa_{i}")));
    header.push("theta_margin".into());
    header.push("phi_length".into());
    w.write_record(&header)?;
    for e in orbit {
        let mut rec = vec![p.format_word(&e.word), e.word_length().to_string()];
        rec.extend(e.kappa.coords().iter().map(|x| format!("{x:.17e}")));
        rec.push(format!("{:.17e}", e.theta_margin));
        rec.push(format!("{:.17e}", e.phi_length));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
