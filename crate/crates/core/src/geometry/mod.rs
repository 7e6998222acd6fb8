//! Domains, dyadic annulus ladders, regions, metric charts and point sampling.

mod metric;
mod points;
mod region;
mod sampling;

pub use metric::{MetricChart, Warp};
pub use points::PointSet;
pub use region::{Primitive, RegionSet};
pub use sampling::{lattice_points, lattice_size, sphere_points, unit_sphere_area};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::scalar::{dist, norm, Scalar};

/// Bounded open region housing a measure or a capacity problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Bounds<T> {
    Ball { center: Vec<T>, radius: T },
    Box { min: Vec<T>, max: Vec<T> },
    /// Open annulus `inner < |x - center| < outer`.
    Shell { center: Vec<T>, inner: T, outer: T },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Bounds<T>", into = "Bounds<T>")]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct Domain<T> {
    dim: usize,
    bounds: Bounds<T>,
    diameter: T,
}

impl<T: Scalar> Domain<T> {
    pub fn new(bounds: Bounds<T>) -> Result<Self> {
        let (dim, diameter) = match &bounds {
            Bounds::Ball { center, radius } => {
                if !(*radius > T::zero()) {
                    return Err(invalid("ball radius must be positive"));
                }
                (center.len(), *radius + *radius)
            }
            Bounds::Box { min, max } => {
                if min.len() != max.len() {
                    return Err(Error::DimensionMismatch {
                        expected: min.len(),
                        found: max.len(),
                    });
                }
                if min.iter().zip(max).any(|(a, b)| !(*a < *b)) {
                    return Err(invalid("box must satisfy min < max on every axis"));
                }
                (min.len(), dist(min, max))
            }
            Bounds::Shell {
                center,
                inner,
                outer,
            } => {
                if !(*inner >= T::zero() && *inner < *outer) {
                    return Err(invalid("shell radii must satisfy 0 <= inner < outer"));
                }
                (center.len(), *outer + *outer)
            }
        };
        if dim < 2 {
            return Err(invalid("ambient dimension must be at least 2"));
        }
        Ok(Domain {
            dim,
            bounds,
            diameter,
        })
    }

    pub fn ball(center: Vec<T>, radius: T) -> Result<Self> {
        Self::new(Bounds::Ball { center, radius })
    }

    pub fn cuboid(min: Vec<T>, max: Vec<T>) -> Result<Self> {
        Self::new(Bounds::Box { min, max })
    }

    pub fn annulus(center: Vec<T>, inner: T, outer: T) -> Result<Self> {
        Self::new(Bounds::Shell {
            center,
            inner,
            outer,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn diameter(&self) -> T {
        self.diameter
    }

    pub fn bounds(&self) -> &Bounds<T> {
        &self.bounds
    }

    /// Open-set membership.
    pub fn contains(&self, x: &[T]) -> bool {
        match &self.bounds {
            Bounds::Ball { center, radius } => dist(x, center) < *radius,
            Bounds::Box { min, max } => x
                .iter()
                .zip(min.iter().zip(max))
                .all(|(v, (a, b))| *a < *v && *v < *b),
            Bounds::Shell {
                center,
                inner,
                outer,
            } => {
                let r = dist(x, center);
                *inner < r && r < *outer
            }
        }
    }

    pub fn bounding_box(&self) -> (Vec<T>, Vec<T>) {
        match &self.bounds {
            Bounds::Ball { center, radius } => ball_box(center, *radius),
            Bounds::Box { min, max } => (min.clone(), max.clone()),
            Bounds::Shell { center, outer, .. } => ball_box(center, *outer),
        }
    }

    /// Image under `x -> lambda * x`.
    pub fn scaled(&self, lambda: T) -> Result<Self> {
        if !(lambda > T::zero()) {
            return Err(invalid("scale factor must be positive"));
        }
        let s = |v: &Vec<T>| v.iter().map(|x| *x * lambda).collect::<Vec<_>>();
        Self::new(match &self.bounds {
            Bounds::Ball { center, radius } => Bounds::Ball {
                center: s(center),
                radius: *radius * lambda,
            },
            Bounds::Box { min, max } => Bounds::Box {
                min: s(min),
                max: s(max),
            },
            Bounds::Shell {
                center,
                inner,
                outer,
            } => Bounds::Shell {
                center: s(center),
                inner: *inner * lambda,
                outer: *outer * lambda,
            },
        })
    }
}

impl<T: Scalar> TryFrom<Bounds<T>> for Domain<T> {
    type Error = Error;
    fn try_from(b: Bounds<T>) -> Result<Self> {
        Domain::new(b)
    }
}

impl<T: Scalar> From<Domain<T>> for Bounds<T> {
    fn from(d: Domain<T>) -> Self {
        d.bounds
    }
}

pub(crate) fn ball_box<T: Scalar>(center: &[T], radius: T) -> (Vec<T>, Vec<T>) {
    (
        center.iter().map(|c| *c - radius).collect(),
        center.iter().map(|c| *c + radius).collect(),
    )
}

/// Spherical shell `{x : inner <= |x - center| <= outer}` (closed) or its
/// open counterpart.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Shell<T> {
    pub center: Vec<T>,
    pub inner: T,
    pub outer: T,
    pub closed: bool,
}

impl<T: Scalar> Shell<T> {
    pub fn contains(&self, x: &[T]) -> bool {
        let r = dist(x, &self.center);
        if self.closed {
            self.inner <= r && r <= self.outer
        } else {
            self.inner < r && r < self.outer
        }
    }

    /// Euclidean distance from `x` to the shell (zero inside).
    pub fn distance(&self, x: &[T]) -> T {
        let r = dist(x, &self.center);
        if r < self.inner {
            self.inner - r
        } else if r > self.outer {
            r - self.outer
        } else {
            T::zero()
        }
    }

    pub fn as_domain(&self) -> Result<Domain<T>> {
        Domain::annulus(self.center.clone(), self.inner, self.outer)
    }
}

/// Dyadic annuli around a center: shell `i` covers radii
/// `[2^-i delta, 2^(1-i) delta]`, its fattening `(2^(-i-1) delta, 2^(2-i) delta)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnulusLadder<T> {
    pub center: Vec<T>,
    pub delta: T,
    pub start: i32,
    pub count: usize,
}

impl<T: Scalar> AnnulusLadder<T> {
    pub fn new(center: Vec<T>, delta: T, start: i32, count: usize) -> Result<Self> {
        if !(delta > T::zero()) {
            return Err(invalid("ladder base radius must be positive"));
        }
        if start < 1 {
            return Err(invalid("ladder start index must be at least 1"));
        }
        if count == 0 {
            return Err(invalid("ladder needs at least one shell"));
        }
        Ok(Self {
            center,
            delta,
            start,
            count,
        })
    }

    pub fn end(&self) -> i32 {
        self.start + self.count as i32
    }

    pub fn indices(&self) -> std::ops::Range<i32> {
        self.start..self.end()
    }

    /// `2^-i delta`, the inner radius of shell `i`.
    pub fn radius(&self, i: i32) -> T {
        self.delta * T::pow2(-i)
    }

    fn check(&self, i: i32) -> Result<()> {
        if i < self.start || i >= self.end() {
            return Err(Error::IndexOutOfRange {
                index: i as i64,
                start: self.start as i64,
                end: self.end() as i64,
            });
        }
        Ok(())
    }

    /// The closed shell and its open fattening for index `i`.
    pub fn shell(&self, i: i32) -> Result<(Shell<T>, Shell<T>)> {
        self.check(i)?;
        Ok(self.shell_unchecked(i))
    }

    /// Same radii formulas without the range check; used for the far tail.
    pub fn shell_unchecked(&self, i: i32) -> (Shell<T>, Shell<T>) {
        let closed = Shell {
            center: self.center.clone(),
            inner: self.delta * T::pow2(-i),
            outer: self.delta * T::pow2(1 - i),
            closed: true,
        };
        let open = Shell {
            center: self.center.clone(),
            inner: self.delta * T::pow2(-i - 1),
            outer: self.delta * T::pow2(2 - i),
            closed: false,
        };
        (closed, open)
    }
}

/// Radial retraction onto the closed unit ball; 1-Lipschitz.
pub fn project_to_ball<T: Scalar>(x: &[T]) -> Vec<T> {
    let r = norm(x);
    if r >= T::one() {
        x.iter().map(|v| *v / r).collect()
    } else {
        x.to_vec()
    }
}
