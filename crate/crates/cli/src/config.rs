//! Experiment configuration: JSON schema, defaults and validation.

use std::path::Path;

use horoflag::groups;
use horoflag::orbit::{BallConfig, GroupPresentation, DEFAULT_CAP, DEFAULT_DEDUP_TOL};
use horoflag::patterson::HMode;
use horoflag::{Functional, Matrix, ThetaSubset};
use serde::Deserialize;

use crate::error::CliError;

pub const SCHEMA_VERSION: &str = "1";

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: String,
    pub group: GroupSection,
    /// Simple roots (1-based); all of them when absent.
    #[serde(default)]
    pub theta: Option<Vec<usize>>,
    /// `[[k, c_k], ...]` for `phi = sum c_k omega_k`; `omega_1` when absent.
    #[serde(default)]
    pub phi: Option<Vec<(usize, f64)>>,
    pub ball: BallSection,
    #[serde(default)]
    pub shadows: ShadowSection,
    #[serde(default)]
    pub measure: MeasureSection,
    #[serde(default)]
    pub probes: ProbeSection,
    #[serde(default)]
    pub limit_set: LimitSetSection,
    #[serde(default)]
    pub verify: VerifySection,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupSection {
    #[serde(default)]
    pub builtin: Option<String>,
    /// Generator matrices as lists of rows.
    #[serde(default)]
    pub generators: Option<Vec<Vec<Vec<f64>>>>,
    #[serde(default)]
    pub labels: Option<Vec<String>>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BallSection {
    pub max_word_length: usize,
    #[serde(default = "default_dedup_tol")]
    pub dedup_tol: f64,
    #[serde(default = "default_cap")]
    pub cap: usize,
}

fn default_dedup_tol() -> f64 {
    DEFAULT_DEDUP_TOL
}

fn default_cap() -> usize {
    DEFAULT_CAP
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShadowSection {
    #[serde(rename = "R_grid", default = "default_r_grid")]
    pub r_grid: Vec<f64>,
    /// Radius for shadow-lemma ratios, chains and diameters.
    #[serde(rename = "R", default = "default_r")]
    pub r: f64,
}

fn default_r_grid() -> Vec<f64> {
    vec![0.5, 1.0, 2.0, 5.0]
}

fn default_r() -> f64 {
    2.0
}

impl Default for ShadowSection {
    fn default() -> Self {
        Self {
            r_grid: default_r_grid(),
            r: default_r(),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureSection {
    /// Exponent of the measure; `delta_hat + s_offset` when absent.
    #[serde(default)]
    pub s: Option<f64>,
    #[serde(default = "default_s_offset")]
    pub s_offset: f64,
    /// Exponent in the shadow-lemma ratios; the midpoint of the
    /// confidence band of the exponent estimate when absent.
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default = "default_h_mode")]
    pub h_mode: HMode,
}

fn default_s_offset() -> f64 {
    0.05
}

fn default_h_mode() -> HMode {
    HMode::Constant
}

impl Default for MeasureSection {
    fn default() -> Self {
        Self {
            s: None,
            s_offset: default_s_offset(),
            delta: None,
            h_mode: default_h_mode(),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSection {
    #[serde(default = "default_probe_depth")]
    pub probe_depth: usize,
    /// Candidate boundary points per shadow.
    #[serde(default = "default_candidates")]
    pub candidates: usize,
}

fn default_probe_depth() -> usize {
    6
}

fn default_candidates() -> usize {
    24
}

impl Default for ProbeSection {
    fn default() -> Self {
        Self {
            probe_depth: default_probe_depth(),
            candidates: default_candidates(),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitSetSection {
    #[serde(default = "default_margin_floor")]
    pub margin_floor: f64,
}

fn default_margin_floor() -> f64 {
    0.1
}

impl Default for LimitSetSection {
    fn default() -> Self {
        Self {
            margin_floor: default_margin_floor(),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    /// Random instances for the embedding suite.
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Test elements per word-length shell.
    #[serde(default = "default_per_shell")]
    pub per_shell: usize,
    /// Word lengths of shadow-lemma test elements, inclusive.
    #[serde(default = "default_test_lengths")]
    pub test_lengths: (usize, usize),
    /// Sampled boundary directions for the product-group suite.
    #[serde(default = "default_directions")]
    pub directions: usize,
    /// Word-length shells compared by the PS7 stability check.
    #[serde(default = "default_ps7_shells")]
    pub ps7_shells: (usize, usize),
}

fn default_samples() -> usize {
    1000
}

fn default_per_shell() -> usize {
    6
}

fn default_test_lengths() -> (usize, usize) {
    (4, 10)
}

fn default_directions() -> usize {
    40
}

fn default_ps7_shells() -> (usize, usize) {
    (6, 10)
}

impl Default for VerifySection {
    fn default() -> Self {
        Self {
            samples: default_samples(),
            per_shell: default_per_shell(),
            test_lengths: default_test_lengths(),
            directions: default_directions(),
            ps7_shells: default_ps7_shells(),
        }
    }
}

/// A validated configuration with library objects built.
pub struct Resolved {
    pub raw: ExperimentConfig,
    pub group: GroupPresentation,
    pub theta: ThetaSubset,
    pub phi: Functional,
}

impl Resolved {
    pub fn ball_config(&self) -> BallConfig {
        BallConfig {
            max_word_length: self.raw.ball.max_word_length,
            dedup_tol: self.raw.ball.dedup_tol,
            cap: self.raw.ball.cap,
            theta: Some(self.theta.clone()),
            phi: Some(self.phi.clone()),
        }
    }
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

pub fn load(path: &Path) -> Result<Resolved, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
    parse(&text)
}

pub fn parse(text: &str) -> Result<Resolved, CliError> {
    let raw: ExperimentConfig =
        serde_json::from_str(text).map_err(|e| invalid(format!("malformed config: {e}")))?;
    resolve(raw)
}

fn positive(name: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be positive and finite, got {v}")))
    }
}

fn build_group(g: &GroupSection) -> Result<GroupPresentation, CliError> {
    match (&g.builtin, &g.generators) {
        (Some(name), None) => {
            if g.labels.is_some() {
                return Err(invalid("labels apply only to explicit generators"));
            }
            groups::builtin(name).ok_or_else(|| {
                invalid(format!(
                    "unknown built-in group {name:?}; expected one of {:?}",
                    groups::BUILTIN_NAMES
                ))
            })
        }
        (None, Some(gens)) => {
            let matrices = gens
                .iter()
                .map(|rows| Matrix::from_rows(rows))
                .collect::<horoflag::Result<Vec<_>>>()
                .map_err(|e| invalid(format!("bad generator: {e}")))?;
            let labels = match &g.labels {
                Some(l) => l.clone(),
                None => (1..=matrices.len()).map(|i| format!("g{i}")).collect(),
            };
            GroupPresentation::new(matrices, labels).map_err(|e| invalid(format!("bad generators: {e}")))
        }
        _ => Err(invalid("group needs exactly one of \"builtin\" or \"generators\"")),
    }
}

pub fn resolve(raw: ExperimentConfig) -> Result<Resolved, CliError> {
    if raw.schema_version != SCHEMA_VERSION {
        return Err(invalid(format!(
            "unsupported schema_version {:?}; expected {SCHEMA_VERSION:?}",
            raw.schema_version
        )));
    }
    let group = build_group(&raw.group)?;
    let d = group.dim();
    let theta = match &raw.theta {
        Some(idx) => ThetaSubset::new(d, idx.clone()).map_err(|e| invalid(format!("theta: {e}")))?,
        None => ThetaSubset::full(d),
    };
    let phi = match &raw.phi {
        Some(c) => Functional::new(&theta, c.clone()).map_err(|e| invalid(format!("phi: {e}")))?,
        None => Functional::new(&theta, vec![(theta.indices()[0], 1.0)])
            .map_err(|e| invalid(format!("phi: {e}")))?,
    };
    positive("ball.dedup_tol", raw.ball.dedup_tol)?;
    if raw.ball.cap == 0 {
        return Err(invalid("ball.cap must be positive"));
    }
    if raw.shadows.r_grid.is_empty() {
        return Err(invalid("shadows.R_grid must not be empty"));
    }
    for &r in &raw.shadows.r_grid {
        positive("shadows.R_grid entries", r)?;
    }
    positive("shadows.R", raw.shadows.r)?;
    if let Some(s) = raw.measure.s {
        positive("measure.s", s)?;
    }
    if let Some(delta) = raw.measure.delta {
        positive("measure.delta", delta)?;
    }
    if !raw.measure.s_offset.is_finite() {
        return Err(invalid("measure.s_offset must be finite"));
    }
    if let HMode::Polynomial { epsilon } = raw.measure.h_mode {
        positive("measure.h_mode.epsilon", epsilon)?;
    }
    if raw.probes.probe_depth == 0 || raw.probes.candidates == 0 {
        return Err(invalid("probes.probe_depth and probes.candidates must be positive"));
    }
    if !(raw.limit_set.margin_floor >= 0.0) {
        return Err(invalid("limit_set.margin_floor must be non-negative"));
    }
    let (lo, hi) = raw.verify.test_lengths;
    if lo > hi {
        return Err(invalid("verify.test_lengths must be increasing"));
    }
    let (s0, s1) = raw.verify.ps7_shells;
    if s0 >= s1 {
        return Err(invalid("verify.ps7_shells must be increasing"));
    }
    Ok(Resolved {
        raw,
        group,
        theta,
        phi,
    })
}
