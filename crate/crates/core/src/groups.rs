//! Built-in example groups.

use std::f64::consts::FRAC_PI_4;

use crate::linalg::Matrix;
use crate::orbit::GroupPresentation;

fn rotation(angle: f64) -> Matrix {
    let (s, c) = angle.sin_cos();
    Matrix::from_rows(&[vec![c, -s], vec![s, c]]).expect("2x2")
}

fn labels(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

/// `<diag(e^1, e^0.3, e^-1.3)>` in `SL(3, R)`.
pub fn cyclic_sl3() -> GroupPresentation {
    let g = Matrix::from_diag(&[1f64.exp(), 0.3f64.exp(), (-1.3f64).exp()]);
    GroupPresentation::new(vec![g], labels(&["g"])).expect("valid generator")
}

/// Two hyperbolic elements of `SL(2, R)` with translation length `2t`
/// whose axes meet at angle `pi/2` at the basepoint. Ping-pong holds for
/// `t` above roughly `0.88`.
pub fn schottky_sl2(t: f64) -> [Matrix; 2] {
    let a = Matrix::from_diag(&[t.exp(), (-t).exp()]);
    let r = rotation(FRAC_PI_4);
    let b = r.matmul(&a).matmul(&r.transpose());
    [a, b]
}

/// [`schottky_sl2`] as a presentation with generators `a`, `b`.
pub fn schottky_group(t: f64) -> GroupPresentation {
    GroupPresentation::new(schottky_sl2(t).to_vec(), labels(&["a", "b"])).expect("valid generators")
}

/// The free group on `[[1,1],[1,2]]` and `[[1,-1],[-1,2]]`, a lattice
/// uniformizing the once-punctured torus.
pub fn punctured_torus_generators() -> [Matrix; 2] {
    [
        Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 2.0]]).expect("2x2"),
        Matrix::from_rows(&[vec![1.0, -1.0], vec![-1.0, 2.0]]).expect("2x2"),
    ]
}

pub fn punctured_torus() -> GroupPresentation {
    GroupPresentation::new(punctured_torus_generators().to_vec(), labels(&["a", "b"]))
        .expect("valid generators")
}

/// Block-diagonal `diag(gamma_0, I_2)` in `SL(4, R)` for `gamma_0` in the
/// punctured-torus group.
pub fn example59() -> GroupPresentation {
    let gens = punctured_torus_generators()
        .iter()
        .map(|g| block_diag(g, &Matrix::identity(2)))
        .collect();
    GroupPresentation::new(gens, labels(&["a", "b"])).expect("valid generators")
}

/// `diag(a, b)`.
pub fn block_diag(a: &Matrix, b: &Matrix) -> Matrix {
    let n = a.rows() + b.rows();
    let mut m = Matrix::zeros(n, n);
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            m[(i, j)] = a[(i, j)];
        }
    }
    for i in 0..b.rows() {
        for j in 0..b.cols() {
            m[(a.rows() + i, a.cols() + j)] = b[(i, j)];
        }
    }
    m
}

/// The irreducible representation `Sym^2 : SL(2, R) -> SL(3, R)` in the
/// orthonormal basis `(x^2, sqrt2 xy, y^2)`, which maps `SO(2)` into `SO(3)`.
pub fn sym2(m: &Matrix) -> Matrix {
    let (a, b, c, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    let r = std::f64::consts::SQRT_2;
    Matrix::from_rows(&[
        vec![a * a, r * a * b, b * b],
        vec![r * a * c, a * d + b * c, r * b * d],
        vec![c * c, r * c * d, d * d],
    ])
    .expect("3x3")
}

/// `Sym^2` of [`schottky_sl2`]: a transverse (Anosov) subgroup of `SL(3, R)`.
pub fn sym2_schottky(t: f64) -> GroupPresentation {
    let gens = schottky_sl2(t).iter().map(sym2).collect();
    GroupPresentation::new(gens, labels(&["a", "b"])).expect("valid generators")
}

/// Default Schottky parameter.
pub const SCHOTTKY_T: f64 = 1.5;
/// Default parameter for the `Sym^2` Schottky group.
pub const SYM2_SCHOTTKY_T: f64 = 1.2;

/// Looks up a built-in group by name.
pub fn builtin(name: &str) -> Option<GroupPresentation> {
    match name {
        "cyclic" => Some(cyclic_sl3()),
        "schottky" => Some(schottky_group(SCHOTTKY_T)),
        "punctured-torus" => Some(punctured_torus()),
        "example59" => Some(example59()),
        "sym2-schottky" => Some(sym2_schottky(SYM2_SCHOTTKY_T)),
        _ => None,
    }
}

/// Names accepted by [`builtin`].
pub const BUILTIN_NAMES: [&str; 5] = [
    "cyclic",
    "schottky",
    "punctured-torus",
    "example59",
    "sym2-schottky",
];
