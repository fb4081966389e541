//! Compass (coordinate pattern) search for small non-smooth problems with
//! optional lower bounds on the variables.

/// Settings for [`pattern_search`].
#[derive(Clone, Debug, PartialEq)]
pub struct PatternSearchSettings {
    pub max_evals: usize,
    pub initial_step: f64,
    /// The search is declared converged once the step drops below this.
    pub min_step: f64,
    pub shrink: f64,
}

impl Default for PatternSearchSettings {
    fn default() -> Self {
        Self {
            max_evals: 2000,
            initial_step: 1.0,
            min_step: 1e-7,
            shrink: 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PatternSearchResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: usize,
    pub converged: bool,
}

/// Minimizes `f` starting at `x0`. `lower[i] = Some(b)` clamps coordinate
/// `i` to `[b, inf)`; `scales[i]` multiplies the global step for coordinate
/// `i`. Successful sweeps enlarge the step, failed sweeps shrink it.
pub fn pattern_search<F>(
    mut f: F,
    x0: &[f64],
    lower: &[Option<f64>],
    scales: &[f64],
    settings: &PatternSearchSettings,
) -> PatternSearchResult
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    assert_eq!(lower.len(), n);
    assert_eq!(scales.len(), n);
    let clamp = |i: usize, v: f64| match lower[i] {
        Some(b) if v < b => b,
        _ => v,
    };
    let mut x: Vec<f64> = (0..n).map(|i| clamp(i, x0[i])).collect();
    let mut fx = f(&x);
    let mut evals = 1;
    let mut step = settings.initial_step;
    let mut converged = n == 0;
    while !converged && evals < settings.max_evals {
        let mut improved = false;
        'coords: for i in 0..n {
            for sign in [1.0, -1.0] {
                if evals >= settings.max_evals {
                    break 'coords;
                }
                let old = x[i];
                let trial = clamp(i, old + sign * step * scales[i]);
                if trial == old {
                    continue;
                }
                x[i] = trial;
                let ft = f(&x);
                evals += 1;
                if ft < fx {
                    fx = ft;
                    improved = true;
                    break;
                }
                x[i] = old;
            }
        }
        if improved {
            step = (step * 1.5).min(settings.initial_step * 4.0);
        } else {
            step *= settings.shrink;
            if step < settings.min_step {
                converged = true;
            }
        }
    }
    PatternSearchResult {
        x,
        value: fx,
        evals,
        converged,
    }
}
