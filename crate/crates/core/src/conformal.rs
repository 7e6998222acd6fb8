//! Ray lengths under a singular conformal factor and the resulting
//! dimension bounds.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EquationKind {
    /// Nonnegative scalar curvature, `n >= 3`.
    Scalar,
    /// Q-curvature in dimension `n >= 5`.
    QCurvatureHigh,
    /// Q-curvature in dimension 4, where the factor behaves like `d^(-C m)`.
    #[serde(rename = "q-curvature-4")]
    QCurvature4,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct ConformalModel<T> {
    pub kind: EquationKind,
    pub n: usize,
    /// Dimension parameter of the singular set (`scalar`, `q-curvature-high`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<T>,
    /// Atom mass `m` (`q-curvature-4`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass: Option<T>,
    /// Constant `C` of the potential bound.
    pub constant: T,
    /// Length `l_0` of the ray in the background metric.
    pub l0: T,
}

impl<T: Scalar> ConformalModel<T> {
    pub fn scalar(n: usize, d: T) -> Self {
        Self { kind: EquationKind::Scalar, n, d: Some(d), mass: None, constant: T::one(), l0: T::one() }
    }

    pub fn q_high(n: usize, d: T) -> Self {
        Self { kind: EquationKind::QCurvatureHigh, n, d: Some(d), mass: None, constant: T::one(), l0: T::one() }
    }

    pub fn q4(mass: T, constant: T) -> Self {
        Self { kind: EquationKind::QCurvature4, n: 4, d: None, mass: Some(mass), constant, l0: T::one() }
    }

    pub fn with_constant(mut self, c: T) -> Self {
        self.constant = c;
        self
    }

    pub fn with_l0(mut self, l0: T) -> Self {
        self.l0 = l0;
        self
    }

    /// Dimension of the singular set at which the exponent equals 1.
    pub fn critical_dimension(&self) -> Option<T> {
        match self.kind {
            EquationKind::Scalar => Some(T::from_usize_lossy(self.n - 2) * T::lit(0.5)),
            EquationKind::QCurvatureHigh => Some(T::from_usize_lossy(self.n - 4) * T::lit(0.5)),
            EquationKind::QCurvature4 => None,
        }
    }

    fn check(&self) -> Result<()> {
        match self.kind {
            EquationKind::Scalar if self.n < 3 => Err(invalid("scalar curvature model needs n >= 3")),
            EquationKind::QCurvatureHigh if self.n < 5 => Err(invalid("q-curvature-high model needs n >= 5")),
            EquationKind::QCurvature4 if self.n != 4 => Err(invalid("q-curvature-4 model needs n = 4")),
            EquationKind::QCurvature4 => match self.mass {
                Some(m) if m >= T::zero() && m.is_finite() => Ok(()),
                _ => Err(invalid("q-curvature-4 model needs a nonnegative atom mass")),
            },
            _ => match self.d {
                Some(d) if d >= T::zero() && d.is_finite() => Ok(()),
                _ => Err(invalid("model needs a nonnegative dimension d")),
            },
        }
    }
}

/// Exponent `e` of the length integrand `C s^(-e)`.
pub fn length_exponent<T: Scalar>(model: &ConformalModel<T>) -> Result<T> {
    model.check()?;
    let two = T::lit(2.0);
    Ok(match model.kind {
        EquationKind::Scalar => {
            let m = T::from_usize_lossy(model.n - 2);
            two * (m - model.d.unwrap()) / m
        }
        EquationKind::QCurvatureHigh => {
            let m = T::from_usize_lossy(model.n - 4);
            two * (m - model.d.unwrap()) / m
        }
        EquationKind::QCurvature4 => model.constant * model.mass.unwrap(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Length {
    Finite,
    Infinite,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct LengthVerdict<T> {
    pub exponent: T,
    pub verdict: Length,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length: Option<T>,
    /// Bound on the omitted part `(0, s_K)` of the integral.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_bound: Option<T>,
    /// Number of dyadic cells integrated.
    pub cells: usize,
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; m];
    let mut w = vec![0.0; m];
    let mf = m as f64;
    for i in 0..m.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (mf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=m {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            if m == 1 {
                p0 = 1.0;
                p1 = z;
            }
            dp = mf * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[m - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[m - 1 - i] = w[i];
    }
    (x, w)
}

const LENGTH_TOLERANCE: f64 = 1e-10;
const MAX_CELLS: usize = 1 << 20;

/// Length of a ray of background length `l_0` under the factor `C s^(-e)`,
/// by Gauss-Legendre quadrature with `points` nodes on each cell
/// `[l_0 2^(-k-1), l_0 2^(-k)]`. Cells are added until the omitted part near
/// the singularity falls below `1e-10` of the integral.
pub fn ray_length<T: Scalar>(model: &ConformalModel<T>, points: usize) -> Result<LengthVerdict<T>> {
    let e = length_exponent(model)?;
    if !(model.l0 > T::zero()) || !(model.constant > T::zero()) {
        return Err(invalid("need l0 > 0 and C > 0"));
    }
    if points == 0 {
        return Err(invalid("need at least one quadrature point"));
    }
    if e >= T::one() {
        return Ok(LengthVerdict { exponent: e, verdict: Length::Infinite, length: None, error_bound: None, cells: 0 });
    }
    let (ef, c, l0) = (e.as_f64(), model.constant.as_f64(), model.l0.as_f64());
    let (nodes, weights) = gauss_legendre(points);
    // On [a, 2a] the integral of s^(-e) is a^(1-e) times the one on [1, 2].
    let unit: f64 = nodes
        .iter()
        .zip(&weights)
        .map(|(x, w)| 0.5 * w * (1.5 + 0.5 * x).powf(-ef))
        .sum();
    let (mut total, mut a, mut cells) = (0.0, 0.5 * l0, 0);
    let mut tail = f64::INFINITY;
    while cells < MAX_CELLS {
        total += c * unit * a.powf(1.0 - ef);
        cells += 1;
        tail = c * a.powf(1.0 - ef) / (1.0 - ef);
        if tail <= LENGTH_TOLERANCE * total {
            break;
        }
        a *= 0.5;
        if a == 0.0 {
            break;
        }
    }
    Ok(LengthVerdict {
        exponent: e,
        verdict: Length::Finite,
        length: Some(T::lit(total)),
        error_bound: Some(T::lit(tail)),
        cells,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Completeness {
    CompletenessCompatible,
    Contradiction,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct Dichotomy<T> {
    pub kind: EquationKind,
    pub n: usize,
    pub exponent: T,
    pub verdict: Completeness,
    /// `(n-2)/2` or `(n-4)/2`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub critical_dimension: Option<T>,
    /// `1/C`, the smallest atom mass compatible with completeness.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_atom_mass: Option<T>,
}

/// A finite ray length contradicts completeness, which happens exactly when
/// the exponent is below 1.
pub fn dimension_dichotomy<T: Scalar>(model: &ConformalModel<T>) -> Result<Dichotomy<T>> {
    let e = length_exponent(model)?;
    let min_atom_mass = match model.kind {
        EquationKind::QCurvature4 if model.constant > T::zero() => Some(model.constant.recip()),
        EquationKind::QCurvature4 => return Err(invalid("need C > 0")),
        _ => None,
    };
    Ok(Dichotomy {
        kind: model.kind,
        n: model.n,
        exponent: e,
        verdict: if e < T::one() { Completeness::Contradiction } else { Completeness::CompletenessCompatible },
        critical_dimension: model.critical_dimension(),
        min_atom_mass,
    })
}
