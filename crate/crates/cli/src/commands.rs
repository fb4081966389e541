//! Subcommands. Each one computes every output in memory and returns it;
//! nothing touches the output directory until the whole command succeeded.

use horoflag::orbit::{
    enumerate_ball, flag_plucker_coordinates, limit_set_sample, regularity_report, write_orbit_csv,
    OrbitElement,
};
use horoflag::patterson::{
    critical_exponent, patterson_measure, poincare_abscissa, quasi_invariance_report,
    shadow_lemma_report, spread_sample, write_shadow_lemma_csv, AtomicMeasure, ExponentEstimate,
};
use serde_json::{json, Value};

use crate::config::Resolved;
use crate::error::CliError;

/// Named output files.
#[derive(Default)]
pub struct Outputs {
    pub files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    pub fn add(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.push((name.to_string(), bytes));
    }

    pub fn add_json(&mut self, name: &str, value: &Value) -> Result<(), CliError> {
        let mut bytes = serde_json::to_vec_pretty(value).map_err(std::io::Error::other)?;
        bytes.push(b'\n');
        self.add(name, bytes);
        Ok(())
    }
}

pub fn orbit(cfg: &Resolved) -> Result<Vec<OrbitElement>, CliError> {
    Ok(enumerate_ball(&cfg.group, &cfg.ball_config())?)
}

fn max_word_length(orbit: &[OrbitElement]) -> usize {
    orbit.iter().map(|e| e.word.len()).max().unwrap_or(0)
}

pub fn cmd_orbit(cfg: &Resolved) -> Result<Outputs, CliError> {
    let orbit = orbit(cfg)?;
    let report = regularity_report(&orbit, &cfg.theta)?;
    let mut out = Outputs::default();
    let mut csv = Vec::new();
    write_orbit_csv(&mut csv, &cfg.group, &orbit)?;
    out.add("orbit.csv", csv);
    out.add_json(
        "regularity.json",
        &json!({
            "orbit_size": orbit.len(),
            "max_word_length": max_word_length(&orbit),
            "theta": cfg.theta.indices(),
            "regularity": report,
        }),
    )?;
    Ok(out)
}

pub fn cmd_exponent(cfg: &Resolved) -> Result<Outputs, CliError> {
    let orbit = orbit(cfg)?;
    let estimate = critical_exponent(&orbit, &cfg.phi)?;
    let abscissa = poincare_abscissa(&orbit, &cfg.phi)?;
    let disagreement = if abscissa > 0.0 {
        Some((estimate.delta_hat - abscissa).abs() / abscissa)
    } else {
        None
    };
    let mut out = Outputs::default();
    out.add_json(
        "exponent.json",
        &json!({
            "orbit_size": orbit.len(),
            "max_word_length": max_word_length(&orbit),
            "phi": cfg.phi.coeffs(),
            "estimate": estimate,
            "poincare_abscissa": abscissa,
            "relative_disagreement": disagreement,
        }),
    )?;
    Ok(out)
}

/// Exponents used for the measure (`s`) and for shadow-lemma ratios
/// (`delta`), with the estimate they were derived from when one was needed.
pub struct Exponents {
    pub s: f64,
    pub delta: f64,
    pub estimate: Option<ExponentEstimate>,
}

pub fn exponents(cfg: &Resolved, orbit: &[OrbitElement]) -> Result<Exponents, CliError> {
    let m = &cfg.raw.measure;
    let estimate = if m.s.is_none() || m.delta.is_none() {
        Some(critical_exponent(orbit, &cfg.phi)?)
    } else {
        None
    };
    let s = match (m.s, &estimate) {
        (Some(s), _) => s,
        (None, Some(e)) => e.delta_hat + m.s_offset,
        (None, None) => unreachable!("estimate computed when s is absent"),
    };
    let delta = match (m.delta, &estimate) {
        (Some(d), _) => d,
        (None, Some(e)) => 0.5 * (e.confidence_band.0 + e.confidence_band.1),
        (None, None) => unreachable!("estimate computed when delta is absent"),
    };
    if !(s > 0.0) {
        return Err(CliError::Config(format!(
            "derived measure exponent s = {s} is not positive; set measure.s"
        )));
    }
    Ok(Exponents { s, delta, estimate })
}

pub fn measure(cfg: &Resolved, orbit: &[OrbitElement], s: f64) -> Result<AtomicMeasure, CliError> {
    Ok(patterson_measure(orbit, &cfg.phi, s, cfg.raw.measure.h_mode)?)
}

pub fn cmd_measure(cfg: &Resolved) -> Result<Outputs, CliError> {
    let orbit = orbit(cfg)?;
    let ex = exponents(cfg, &orbit)?;
    let mu = measure(cfg, &orbit, ex.s)?;
    let generators: Vec<_> = (0..2 * cfg.group.rank())
        .map(|l| cfg.group.letter(l as u8).clone())
        .collect();
    let qi = quasi_invariance_report(&mu, &orbit, &generators, &cfg.theta)?;

    let mut csv = csv_writer();
    csv.write_record(["word", "word_length", "phi_length", "weight"])
        .map_err(csv_error)?;
    for (i, e) in orbit.iter().enumerate() {
        csv.write_record([
            cfg.group.format_word(&e.word),
            e.word.len().to_string(),
            format!("{:.17e}", e.phi_length),
            format!("{:.17e}", mu.weight(i)),
        ])
        .map_err(csv_error)?;
    }
    let mut out = Outputs::default();
    out.add("measure.csv", finish_csv(csv)?);
    out.add_json(
        "measure.json",
        &json!({
            "orbit_size": orbit.len(),
            "s": ex.s,
            "h_mode": cfg.raw.measure.h_mode,
            "exponent_estimate": ex.estimate,
            "quasi_invariance": {
                "test_elements": (0..2 * cfg.group.rank())
                    .map(|l| cfg.group.format_word(&[l as u8]))
                    .collect::<Vec<_>>(),
                "report": qi,
            },
        }),
    )?;
    Ok(out)
}

pub fn shadow_lemma_tests(cfg: &Resolved, orbit: &[OrbitElement]) -> Vec<usize> {
    let (lo, hi) = cfg.raw.verify.test_lengths;
    spread_sample(orbit, lo..=hi, cfg.raw.verify.per_shell)
}

pub fn cmd_shadow_lemma(cfg: &Resolved) -> Result<Outputs, CliError> {
    let orbit = orbit(cfg)?;
    let ex = exponents(cfg, &orbit)?;
    let mu = measure(cfg, &orbit, ex.s)?;
    let tests = shadow_lemma_tests(cfg, &orbit);
    let report = shadow_lemma_report(&mu, &orbit, &cfg.theta, cfg.raw.shadows.r, ex.delta, &tests)?;
    let mut csv = Vec::new();
    write_shadow_lemma_csv(&mut csv, &report, |i| cfg.group.format_word(&orbit[i].word))?;
    let mut out = Outputs::default();
    out.add("shadow_lemma.csv", csv);
    out.add_json(
        "shadow_lemma.json",
        &json!({
            "s": ex.s,
            "delta": ex.delta,
            "R": cfg.raw.shadows.r,
            "min_ratio": report.min_ratio,
            "max_ratio": report.max_ratio,
            "median_ratio": report.median_ratio,
            "spread": report.spread,
            "implied_C": report.implied_c,
            "empty_shadows": report.empty_shadows,
            "rows": report.rows.len(),
        }),
    )?;
    Ok(out)
}

pub fn cmd_limit_set(cfg: &Resolved) -> Result<Outputs, CliError> {
    let orbit = orbit(cfg)?;
    let flags = limit_set_sample(&orbit, &cfg.theta, cfg.raw.limit_set.margin_floor);
    let d = cfg.group.dim();
    let mut header = vec!["word".to_string()];
    for &k in cfg.theta.indices() {
        let n = horoflag::linalg::binomial(d, k);
        header.extend((1..=n).map(|i| format!("alpha{k}_{i}")));
    }
    let mut csv = csv_writer();
    csv.write_record(&header).map_err(csv_error)?;
    for f in &flags {
        let mut rec = vec![cfg.group.format_word(&f.word)];
        for coords in flag_plucker_coordinates(&f.flag) {
            rec.extend(coords.iter().map(|x| format!("{x:.17e}")));
        }
        csv.write_record(&rec).map_err(csv_error)?;
    }
    let mut out = Outputs::default();
    out.add("limit_set.csv", finish_csv(csv)?);
    Ok(out)
}

pub(crate) fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::Writer::from_writer(Vec::new())
}

pub(crate) fn csv_error(e: csv::Error) -> CliError {
    CliError::Io(std::io::Error::other(e))
}

pub(crate) fn finish_csv(w: csv::Writer<Vec<u8>>) -> Result<Vec<u8>, CliError> {
    w.into_inner().map_err(|e| CliError::Io(std::io::Error::other(e.to_string())))
}
