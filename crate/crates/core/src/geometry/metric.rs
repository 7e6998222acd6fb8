use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::scalar::{dist, Scalar};

/// Built-in bi-Lipschitz coordinate warps with closed-form constants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Warp<T> {
    /// `x_k -> s_k x_k`, all `s_k > 0`.
    Diagonal { scales: Vec<T> },
    /// `x_k -> x_k + (a / w) sin(w x_k)` with `|a| < 1`; the Jacobian is
    /// diagonal with entries in `[1 - |a|, 1 + |a|]`.
    Sine { amplitude: T, frequency: T },
}

impl<T: Scalar> Warp<T> {
    pub fn apply(&self, x: &[T]) -> Vec<T> {
        match self {
            Warp::Diagonal { scales } => x.iter().zip(scales).map(|(v, s)| *v * *s).collect(),
            Warp::Sine {
                amplitude,
                frequency,
            } => x
                .iter()
                .map(|v| *v + *amplitude / *frequency * (*frequency * *v).sin())
                .collect(),
        }
    }

    pub fn lipschitz(&self) -> T {
        match self {
            Warp::Diagonal { scales } => {
                let hi = scales.iter().copied().fold(T::zero(), T::max);
                let lo = scales.iter().copied().fold(T::infinity(), T::min);
                hi.max(T::one() / lo)
            }
            Warp::Sine { amplitude, .. } => {
                let a = amplitude.abs();
                (T::one() + a).max(T::one() / (T::one() - a))
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Warp::Diagonal { scales } => {
                if scales.iter().any(|s| !(*s > T::zero())) {
                    return Err(invalid("diagonal warp scales must be positive"));
                }
            }
            Warp::Sine {
                amplitude,
                frequency,
            } => {
                if !(amplitude.abs() < T::one()) || !(*frequency > T::zero()) {
                    return Err(invalid("sine warp needs |amplitude| < 1 and frequency > 0"));
                }
            }
        }
        Ok(())
    }
}

type WarpFn<T> = Arc<dyn Fn(&[T]) -> Vec<T> + Send + Sync>;

/// Distance model: plain Euclidean, or Euclidean distance after a
/// bi-Lipschitz warp `d(x, y) = |phi(x) - phi(y)|`.
#[derive(Clone, Default)]
pub enum MetricChart<T> {
    #[default]
    Euclidean,
    Warped(Warp<T>),
    /// User-supplied warp with a declared constant `L >= 1`.
    Custom { map: WarpFn<T>, lipschitz: T },
}

impl<T: Scalar> fmt::Debug for MetricChart<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricChart::Euclidean => f.write_str("Euclidean"),
            MetricChart::Warped(w) => f.debug_tuple("Warped").field(w).finish(),
            MetricChart::Custom { lipschitz, .. } => {
                f.debug_struct("Custom").field("lipschitz", lipschitz).finish()
            }
        }
    }
}

impl<T: Scalar> MetricChart<T> {
    pub fn warped(w: Warp<T>) -> Result<Self> {
        w.validate()?;
        Ok(MetricChart::Warped(w))
    }

    pub fn custom(map: impl Fn(&[T]) -> Vec<T> + Send + Sync + 'static, lipschitz: T) -> Result<Self> {
        if !(lipschitz >= T::one()) {
            return Err(invalid("bi-Lipschitz constant must be at least 1"));
        }
        Ok(MetricChart::Custom {
            map: Arc::new(map),
            lipschitz,
        })
    }

    pub fn lipschitz(&self) -> T {
        match self {
            MetricChart::Euclidean => T::one(),
            MetricChart::Warped(w) => w.lipschitz(),
            MetricChart::Custom { lipschitz, .. } => *lipschitz,
        }
    }

    pub fn is_euclidean(&self) -> bool {
        matches!(self, MetricChart::Euclidean)
    }

    /// Chart coordinates of `x`.
    pub fn chart(&self, x: &[T]) -> Vec<T> {
        match self {
            MetricChart::Euclidean => x.to_vec(),
            MetricChart::Warped(w) => w.apply(x),
            MetricChart::Custom { map, .. } => map(x),
        }
    }

    pub fn distance(&self, x: &[T], y: &[T]) -> T {
        match self {
            MetricChart::Euclidean => dist(x, y),
            _ => dist(&self.chart(x), &self.chart(y)),
        }
    }

    /// Largest violation of `L^-1 |x-y| <= d(x,y) <= L |x-y|` over the
    /// given pairs, as a relative excess (zero when all pairs comply).
    pub fn bilipschitz_violation<'a>(&self, pairs: impl IntoIterator<Item = (&'a [T], &'a [T])>) -> T {
        let l = self.lipschitz();
        let slack = T::one() + T::epsilon() * T::lit(64.0);
        let mut worst = T::zero();
        for (x, y) in pairs {
            let e = dist(x, y);
            if e == T::zero() {
                continue;
            }
            let d = self.distance(x, y);
            let hi = d / (l * e * slack);
            let lo = e / (l * d.max(T::min_positive_value()) * slack);
            worst = worst.max(hi - T::one()).max(lo - T::one());
        }
        worst.max(T::zero())
    }
}
