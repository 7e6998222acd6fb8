//! Riesz and logarithmic potentials of discrete measures.

mod tree;

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{invalid, Error, Result};
use crate::geometry::{MetricChart, PointSet};
use crate::measure::DiscreteMeasure;
use crate::scalar::{dist2, Scalar};

pub use tree::KdTree;

/// Kernel `r^-(n-alpha)` for `1 < alpha < n`, or `log(D/r)` for `alpha = n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct KernelSpec<T> {
    pub n: usize,
    pub alpha: T,
    /// Domain diameter, required by the log kernel.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diameter: Option<T>,
}

impl<T: Scalar> KernelSpec<T> {
    pub fn new(n: usize, alpha: T, diameter: Option<T>) -> Result<Self> {
        let k = Self { n, alpha, diameter };
        k.validate()?;
        Ok(k)
    }

    pub fn riesz(n: usize, alpha: T) -> Result<Self> {
        Self::new(n, alpha, None)
    }

    pub fn log(n: usize, diameter: T) -> Result<Self> {
        Self::new(n, T::from_usize_lossy(n), Some(diameter))
    }

    pub fn validate(&self) -> Result<()> {
        let n = T::from_usize_lossy(self.n);
        if self.n < 2 {
            return Err(invalid("ambient dimension must be at least 2"));
        }
        if !(self.alpha > T::one() && self.alpha <= n) {
            return Err(invalid(format!(
                "order alpha = {} outside (1, {}]",
                self.alpha, self.n
            )));
        }
        if self.is_log() {
            match self.diameter {
                Some(d) if d > T::zero() && d.is_finite() => {}
                _ => return Err(invalid("log kernel needs a positive diameter")),
            }
        }
        Ok(())
    }

    pub fn is_log(&self) -> bool {
        self.alpha == T::from_usize_lossy(self.n)
    }

    /// `n - alpha`.
    pub fn exponent(&self) -> T {
        T::from_usize_lossy(self.n) - self.alpha
    }

    pub fn with_diameter(mut self, d: T) -> Self {
        self.diameter = Some(d);
        self
    }

    pub(crate) fn diameter_or_one(&self) -> T {
        self.diameter.unwrap_or_else(T::one)
    }

    /// Kernel at distance `r > 0`.
    #[inline]
    pub fn eval(&self, r: T) -> T {
        if self.is_log() {
            (self.diameter_or_one() / r).ln()
        } else {
            r.powf(-self.exponent())
        }
    }

    /// Kernel capped at its value at distance `h`: `K(max(r, h))`.
    #[inline]
    pub fn eval_truncated(&self, r: T, h: T) -> T {
        self.eval(r.max(h))
    }

    pub(crate) fn fast(&self) -> FastKernel<T> {
        let s = self.exponent();
        let kind = if self.is_log() {
            FastKind::Log(self.diameter_or_one() * self.diameter_or_one())
        } else if s == T::one() {
            FastKind::Inverse
        } else if s == T::lit(2.0) {
            FastKind::InverseSquare
        } else {
            FastKind::Power(-s / T::lit(2.0))
        };
        FastKernel { kind }
    }
}

#[derive(Clone, Copy, Debug)]
enum FastKind<T> {
    Inverse,
    InverseSquare,
    Power(T),
    Log(T),
}

/// Kernel evaluated from squared distances.
#[derive(Clone, Copy, Debug)]
pub(crate) struct FastKernel<T> {
    kind: FastKind<T>,
}

impl<T: Scalar> FastKernel<T> {
    #[inline]
    pub(crate) fn of_dist2(&self, r2: T) -> T {
        match self.kind {
            FastKind::Inverse => r2.sqrt().recip(),
            FastKind::InverseSquare => r2.recip(),
            FastKind::Power(p) => r2.powf(p),
            FastKind::Log(d2) => (d2 / r2).ln() * T::lit(0.5),
        }
    }
}

/// Potential value; an evaluation point carrying positive mass gives
/// [`PotentialValue::Infinite`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PotentialValue<T> {
    Finite(T),
    Infinite,
}

impl<T: Scalar> PotentialValue<T> {
    pub fn is_infinite(&self) -> bool {
        matches!(self, PotentialValue::Infinite)
    }

    pub fn finite(&self) -> Option<T> {
        match self {
            PotentialValue::Finite(v) => Some(*v),
            PotentialValue::Infinite => None,
        }
    }

    /// Value as a float, with `+inf` for the infinite case.
    pub fn to_float(&self) -> T {
        self.finite().unwrap_or_else(T::infinity)
    }
}

impl<T: Scalar> fmt::Display for PotentialValue<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PotentialValue::Finite(v) => write!(f, "{v}"),
            PotentialValue::Infinite => f.write_str("inf"),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ValueRepr<T> {
    Num(T),
    Tag(String),
}

impl<T: Scalar> Serialize for PotentialValue<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            PotentialValue::Finite(v) => ValueRepr::Num(*v).serialize(s),
            PotentialValue::Infinite => ValueRepr::<T>::Tag("inf".into()).serialize(s),
        }
    }
}

impl<'de, T: Scalar> Deserialize<'de> for PotentialValue<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match ValueRepr::<T>::deserialize(d)? {
            ValueRepr::Num(v) => Ok(PotentialValue::Finite(v)),
            ValueRepr::Tag(t) if t == "inf" => Ok(PotentialValue::Infinite),
            ValueRepr::Tag(t) => Err(serde::de::Error::custom(format!("unknown value tag {t:?}"))),
        }
    }
}

/// Summation strategy.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "method")]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub enum Summation<T> {
    Naive,
    Tree(TreeOptions<T>),
}

impl<T: Scalar> Default for Summation<T> {
    fn default() -> Self {
        Summation::Naive
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct TreeOptions<T> {
    /// Initial opening angle: a cluster is used whole when radius/distance < theta.
    pub theta: T,
    /// Required per-point relative error bound.
    pub tolerance: T,
    pub leaf_size: usize,
}

impl<T: Scalar> Default for TreeOptions<T> {
    fn default() -> Self {
        Self {
            theta: T::lit(0.3),
            tolerance: T::lit(1e-8),
            leaf_size: 16,
        }
    }
}

/// Evaluated potential at a list of points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct PotentialField<T> {
    pub points: PointSet<T>,
    pub values: Vec<PotentialValue<T>>,
    pub kernel: KernelSpec<T>,
    pub method: Summation<T>,
    /// Absolute error bound per point (tree summation only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_bounds: Option<Vec<T>>,
    /// Smallest opening angle any point needed (tree summation only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_used: Option<T>,
}

impl<T: Scalar> PotentialField<T> {
    /// Largest error bound relative to the value, over finite entries.
    pub fn max_relative_bound(&self) -> Option<T> {
        let bounds = self.error_bounds.as_ref()?;
        Some(
            self.values
                .iter()
                .zip(bounds)
                .filter_map(|(v, b)| v.finite().map(|v| if v == T::zero() { *b } else { *b / v.abs() }))
                .fold(T::zero(), T::max),
        )
    }
}

fn check_dims<T: Scalar>(mu: &DiscreteMeasure<T>, kernel: &KernelSpec<T>, points: &PointSet<T>) -> Result<()> {
    kernel.validate()?;
    if mu.dim() != kernel.n {
        return Err(Error::DimensionMismatch {
            expected: kernel.n,
            found: mu.dim(),
        });
    }
    if points.dim() != kernel.n {
        return Err(Error::DimensionMismatch {
            expected: kernel.n,
            found: points.dim(),
        });
    }
    Ok(())
}

pub(crate) fn diameter_violation<T: Scalar>(r2: T, d2_limit: T) -> bool {
    r2 > d2_limit
}

/// Squared diameter with a few ulps of slack for rescaled inputs.
pub(crate) fn diameter_limit2<T: Scalar>(kernel: &KernelSpec<T>) -> T {
    let d = kernel.diameter_or_one() * (T::one() + T::epsilon() * T::lit(8.0));
    d * d
}

fn too_far<T: Scalar>(kernel: &KernelSpec<T>, r2: T) -> Error {
    Error::Domain(format!(
        "distance {} exceeds the log-kernel diameter {}",
        r2.sqrt(),
        kernel.diameter_or_one()
    ))
}

/// Direct summation at one point.
pub fn potential_at<T: Scalar>(mu: &DiscreteMeasure<T>, kernel: &KernelSpec<T>, x: &[T]) -> Result<PotentialValue<T>> {
    let fast = kernel.fast();
    let limit = diameter_limit2(kernel);
    let log = kernel.is_log();
    let mut acc = T::zero();
    let mut infinite = false;
    for (a, w) in mu.iter() {
        let r2 = dist2(a, x);
        if log && diameter_violation(r2, limit) {
            return Err(too_far(kernel, r2));
        }
        if w == T::zero() {
            continue;
        }
        if r2 == T::zero() {
            infinite = true;
        } else {
            acc = acc + w * fast.of_dist2(r2);
        }
    }
    Ok(if infinite {
        PotentialValue::Infinite
    } else {
        PotentialValue::Finite(acc)
    })
}

/// Potential of `mu` at every point, in the distance given by `metric`.
///
/// Non-Euclidean charts are handled by mapping atoms and points through
/// the chart and summing Euclidean kernels there.
pub fn eval_potential<T: Scalar>(
    mu: &DiscreteMeasure<T>,
    kernel: &KernelSpec<T>,
    points: &PointSet<T>,
    metric: &MetricChart<T>,
    method: Summation<T>,
) -> Result<PotentialField<T>> {
    check_dims(mu, kernel, points)?;
    let (charted_mu, charted_points);
    let (mu_c, pts_c) = if metric.is_euclidean() {
        (mu, points)
    } else {
        charted_mu = mu.push_forward(|x| metric.chart(x));
        charted_points = points.map(|x| metric.chart(x));
        (&charted_mu, &charted_points)
    };
    let (values, error_bounds, theta_used) = match method {
        Summation::Naive => {
            let rows: Vec<&[T]> = pts_c.iter().collect();
            let values = rows
                .par_iter()
                .map(|x| potential_at(mu_c, kernel, x))
                .collect::<Result<Vec<_>>>()?;
            (values, None, None)
        }
        Summation::Tree(opts) => {
            if !(opts.theta > T::zero() && opts.theta < T::one()) || !(opts.tolerance > T::zero()) || opts.leaf_size == 0 {
                return Err(invalid("tree options need 0 < theta < 1, tolerance > 0, leaf_size > 0"));
            }
            let tree = KdTree::build(mu_c, opts.leaf_size);
            let out = tree.evaluate_all(kernel, pts_c, opts)?;
            (out.values, Some(out.bounds), Some(out.theta_min))
        }
    };
    Ok(PotentialField {
        points: points.clone(),
        values,
        kernel: *kernel,
        method,
        error_bounds,
        theta_used,
    })
}

/// Potential of the push-forward of `mu` under `x -> lambda x`, evaluated at
/// `lambda x`; for Riesz kernels this equals `lambda^(alpha-n)` times the
/// unscaled value. Log kernels use the scaled diameter `lambda D`.
pub fn eval_potential_scaled<T: Scalar>(
    mu: &DiscreteMeasure<T>,
    kernel: &KernelSpec<T>,
    lambda: T,
    x: &[T],
) -> Result<PotentialValue<T>> {
    if !(lambda > T::zero()) || !lambda.is_finite() {
        return Err(invalid("scale factor must be positive"));
    }
    kernel.validate()?;
    let pushed = mu.push_forward(|y| y.iter().map(|c| *c * lambda).collect());
    let k = match kernel.diameter {
        Some(d) => kernel.with_diameter(d * lambda),
        None => *kernel,
    };
    let lx: Vec<T> = x.iter().map(|c| *c * lambda).collect();
    potential_at(&pushed, &k, &lx)
}
