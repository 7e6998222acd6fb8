use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::scalar::{dist, dot, Scalar};

use super::ball_box;

/// One closed building block of a region.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub enum Primitive<T> {
    Ball { center: Vec<T>, radius: T },
    Box { min: Vec<T>, max: Vec<T> },
    /// Finite point cloud, each point fattened to a closed ball of `radius`.
    Points { coords: Vec<Vec<T>>, radius: T },
    /// Round sphere `|x - center| = radius` (surface only).
    Sphere { center: Vec<T>, radius: T },
}

impl<T: Scalar> Primitive<T> {
    pub fn dim(&self) -> Option<usize> {
        match self {
            Primitive::Ball { center, .. } | Primitive::Sphere { center, .. } => Some(center.len()),
            Primitive::Box { min, .. } => Some(min.len()),
            Primitive::Points { coords, .. } => coords.first().map(|c| c.len()),
        }
    }

    fn validate(&self, dim: usize) -> Result<()> {
        let check = |len: usize| {
            if len == dim {
                Ok(())
            } else {
                Err(Error::DimensionMismatch {
                    expected: dim,
                    found: len,
                })
            }
        };
        match self {
            Primitive::Ball { center, radius } | Primitive::Sphere { center, radius } => {
                check(center.len())?;
                if !(*radius >= T::zero()) {
                    return Err(invalid("radius must be nonnegative"));
                }
            }
            Primitive::Box { min, max } => {
                check(min.len())?;
                check(max.len())?;
                if min.iter().zip(max).any(|(a, b)| !(*a <= *b)) {
                    return Err(invalid("box requires min <= max"));
                }
            }
            Primitive::Points { coords, radius } => {
                for c in coords {
                    check(c.len())?;
                }
                if !(*radius >= T::zero()) {
                    return Err(invalid("point radius must be nonnegative"));
                }
            }
        }
        Ok(())
    }

    pub fn contains(&self, x: &[T]) -> bool {
        match self {
            Primitive::Ball { center, radius } => dist(x, center) <= *radius,
            Primitive::Sphere { center, radius } => dist(x, center) == *radius,
            Primitive::Box { min, max } => x
                .iter()
                .zip(min.iter().zip(max))
                .all(|(v, (a, b))| *a <= *v && *v <= *b),
            Primitive::Points { coords, radius } => coords.iter().any(|c| dist(x, c) <= *radius),
        }
    }

    /// Euclidean distance from `x` to the primitive.
    pub fn distance(&self, x: &[T]) -> T {
        match self {
            Primitive::Ball { center, radius } => (dist(x, center) - *radius).max(T::zero()),
            Primitive::Sphere { center, radius } => (dist(x, center) - *radius).abs(),
            Primitive::Box { min, max } => {
                let mut acc = T::zero();
                for (v, (a, b)) in x.iter().zip(min.iter().zip(max)) {
                    let d = (*a - *v).max(*v - *b).max(T::zero());
                    acc = acc + d * d;
                }
                acc.sqrt()
            }
            Primitive::Points { coords, radius } => coords
                .iter()
                .map(|c| (dist(x, c) - *radius).max(T::zero()))
                .fold(T::infinity(), T::min),
        }
    }

    pub fn bounding_box(&self) -> Option<(Vec<T>, Vec<T>)> {
        match self {
            Primitive::Ball { center, radius } | Primitive::Sphere { center, radius } => {
                Some(ball_box(center, *radius))
            }
            Primitive::Box { min, max } => Some((min.clone(), max.clone())),
            Primitive::Points { coords, radius } => {
                let first = coords.first()?;
                let mut lo = first.clone();
                let mut hi = first.clone();
                for c in coords {
                    for k in 0..c.len() {
                        lo[k] = lo[k].min(c[k]);
                        hi[k] = hi[k].max(c[k]);
                    }
                }
                Some((
                    lo.into_iter().map(|v| v - *radius).collect(),
                    hi.into_iter().map(|v| v + *radius).collect(),
                ))
            }
        }
    }

    /// Length scale at which the primitive must be resolved.
    pub fn length_scale(&self) -> T {
        match self {
            Primitive::Ball { radius, .. }
            | Primitive::Sphere { radius, .. }
            | Primitive::Points { radius, .. } => *radius,
            Primitive::Box { min, max } => min
                .iter()
                .zip(max)
                .map(|(a, b)| *b - *a)
                .fold(T::infinity(), T::min),
        }
    }

    /// Image under `x -> lambda * x + shift`.
    pub fn affine(&self, lambda: T, shift: &[T]) -> Self {
        let m = |v: &Vec<T>| -> Vec<T> { v.iter().zip(shift).map(|(x, s)| *x * lambda + *s).collect() };
        match self {
            Primitive::Ball { center, radius } => Primitive::Ball {
                center: m(center),
                radius: *radius * lambda,
            },
            Primitive::Sphere { center, radius } => Primitive::Sphere {
                center: m(center),
                radius: *radius * lambda,
            },
            Primitive::Box { min, max } => Primitive::Box {
                min: m(min),
                max: m(max),
            },
            Primitive::Points { coords, radius } => Primitive::Points {
                coords: coords.iter().map(m).collect(),
                radius: *radius * lambda,
            },
        }
    }

    /// Whether `{origin + t * dir : 0 < t <= reach}` meets the primitive.
    /// `dir` must be a unit vector.
    pub fn hits_segment(&self, origin: &[T], dir: &[T], reach: T) -> bool {
        match self {
            Primitive::Ball { center, radius } => {
                match ball_interval(origin, dir, center, *radius) {
                    Some((t1, t2)) => t2 > T::zero() && t1 <= reach,
                    None => false,
                }
            }
            Primitive::Points { coords, radius } => coords.iter().any(|c| {
                matches!(ball_interval(origin, dir, c, *radius),
                    Some((t1, t2)) if t2 > T::zero() && t1 <= reach)
            }),
            Primitive::Sphere { center, radius } => {
                match ball_interval(origin, dir, center, *radius) {
                    Some((t1, t2)) => {
                        let inside = |t: T| t > T::zero() && t <= reach;
                        inside(t1) || inside(t2)
                    }
                    None => false,
                }
            }
            Primitive::Box { min, max } => {
                let mut lo = T::neg_infinity();
                let mut hi = T::infinity();
                for k in 0..origin.len() {
                    if dir[k] == T::zero() {
                        if origin[k] < min[k] || origin[k] > max[k] {
                            return false;
                        }
                    } else {
                        let a = (min[k] - origin[k]) / dir[k];
                        let b = (max[k] - origin[k]) / dir[k];
                        lo = lo.max(a.min(b));
                        hi = hi.min(a.max(b));
                    }
                }
                lo <= hi && hi > T::zero() && lo <= reach
            }
        }
    }
}

/// Parameter interval `[t1, t2]` on which `origin + t dir` lies in the closed
/// ball; `None` if the line misses it.
fn ball_interval<T: Scalar>(origin: &[T], dir: &[T], center: &[T], radius: T) -> Option<(T, T)> {
    let oc: Vec<T> = origin.iter().zip(center).map(|(o, c)| *o - *c).collect();
    let b = dot(&oc, dir);
    let c = dot(&oc, &oc) - radius * radius;
    let disc = b * b - c;
    if disc < T::zero() {
        return None;
    }
    let s = disc.sqrt();
    Some((-b - s, -b + s))
}

/// A subset of R^n given as a finite union of primitives.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct RegionSet<T> {
    pub primitives: Vec<Primitive<T>>,
}

impl<T: Scalar> RegionSet<T> {
    pub fn new(primitives: Vec<Primitive<T>>) -> Result<Self> {
        let set = Self { primitives };
        set.validate()?;
        Ok(set)
    }

    pub fn empty() -> Self {
        Self {
            primitives: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(dim) = self.dim() {
            for p in &self.primitives {
                p.validate(dim)?;
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> Option<usize> {
        self.primitives.iter().find_map(|p| p.dim())
    }

    pub fn is_empty(&self) -> bool {
        self.primitives.iter().all(|p| match p {
            Primitive::Points { coords, .. } => coords.is_empty(),
            _ => false,
        })
    }

    pub fn contains(&self, x: &[T]) -> bool {
        self.primitives.iter().any(|p| p.contains(x))
    }

    pub fn distance(&self, x: &[T]) -> T {
        self.primitives
            .iter()
            .map(|p| p.distance(x))
            .fold(T::infinity(), T::min)
    }

    pub fn union(&self, other: &RegionSet<T>) -> Self {
        let mut primitives = self.primitives.clone();
        primitives.extend(other.primitives.iter().cloned());
        Self { primitives }
    }

    /// `{lambda x : x in E}`, scaling about the origin.
    pub fn scale_set(&self, lambda: T) -> Result<Self> {
        if !(lambda > T::zero()) {
            return Err(invalid("scale factor must be positive"));
        }
        let zero = vec![T::zero(); self.dim().unwrap_or(0)];
        Ok(self.affine(lambda, &zero))
    }

    pub fn translate(&self, shift: &[T]) -> Self {
        self.affine(T::one(), shift)
    }

    pub fn affine(&self, lambda: T, shift: &[T]) -> Self {
        Self {
            primitives: self
                .primitives
                .iter()
                .map(|p| p.affine(lambda, shift))
                .collect(),
        }
    }

    /// Exact test of the half-open segment `(0, reach]` along unit `dir`.
    pub fn hits_segment(&self, origin: &[T], dir: &[T], reach: T) -> bool {
        self.primitives
            .iter()
            .any(|p| p.hits_segment(origin, dir, reach))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scale_examples() {
        let e = RegionSet::new(vec![Primitive::Ball {
            center: vec![1.0, 0.0, 0.0],
            radius: 0.1,
        }])
        .unwrap();
        let s = e.scale_set(2.0).unwrap();
        assert_eq!(
            s.primitives[0],
            Primitive::Ball {
                center: vec![2.0, 0.0, 0.0],
                radius: 0.2
            }
        );
        assert_eq!(e.scale_set(1.0).unwrap(), e);
        assert!(e.scale_set(0.0).is_err());
        assert!(e.scale_set(-1.0).is_err());

        let b = RegionSet::new(vec![Primitive::Box {
            min: vec![0.0, 0.0, 0.0],
            max: vec![1.0, 1.0, 1.0],
        }])
        .unwrap();
        assert_eq!(
            b.scale_set(0.5).unwrap().primitives[0],
            Primitive::Box {
                min: vec![0.0, 0.0, 0.0],
                max: vec![0.5, 0.5, 0.5]
            }
        );
    }

    #[test]
    fn json_schema() {
        let text = r#"{"primitives":[
            {"kind":"ball","center":[0,0,0],"radius":1},
            {"kind":"box","min":[0,0,0],"max":[1,2,3]},
            {"kind":"points","coords":[[0,0,1],[1,1,1]],"radius":0.5}]}"#;
        let set: RegionSet<f64> = serde_json::from_str(text).unwrap();
        assert_eq!(set.primitives.len(), 3);
        assert!(set.contains(&[0.5, 1.9, 2.9]));
        assert!(set.contains(&[1.2, 1.2, 1.2]));
        assert!(!set.contains(&[-1.0, -1.0, 3.0]));
    }

    #[test]
    fn segment_predicates() {
        let ball = Primitive::Ball {
            center: vec![2.0, 0.0],
            radius: 0.5,
        };
        let o = [0.0, 0.0];
        assert!(ball.hits_segment(&o, &[1.0, 0.0], 2.0));
        assert!(!ball.hits_segment(&o, &[1.0, 0.0], 1.4));
        assert!(!ball.hits_segment(&o, &[0.0, 1.0], 10.0));
        assert!(!ball.hits_segment(&o, &[-1.0, 0.0], 10.0));

        // tangent at the origin from the outside: only t = 0 touches
        let touching = Primitive::Ball {
            center: vec![-1.0, 0.0],
            radius: 1.0,
        };
        assert!(!touching.hits_segment(&o, &[1.0, 0.0], 5.0));
        assert!(touching.hits_segment(&o, &[-1.0, 0.0], 5.0));

        let bx = Primitive::Box {
            min: vec![1.0, -1.0],
            max: vec![2.0, 1.0],
        };
        assert!(bx.hits_segment(&o, &[1.0, 0.0], 1.0));
        assert!(!bx.hits_segment(&o, &[1.0, 0.0], 0.99));
        assert!(!bx.hits_segment(&o, &[0.0, 1.0], 10.0));

        let sphere = Primitive::Sphere {
            center: vec![0.0, 0.0],
            radius: 1.0,
        };
        assert!(sphere.hits_segment(&o, &[0.6, 0.8], 1.0));
        assert!(!sphere.hits_segment(&o, &[0.6, 0.8], 0.9));

        let pts = Primitive::Points {
            coords: vec![vec![0.0, 3.0]],
            radius: 0.0,
        };
        assert!(pts.hits_segment(&o, &[0.0, 1.0], 3.0));
        assert!(!pts.hits_segment(&o, &[0.6, 0.8], 5.0));
    }

    #[test]
    fn distances() {
        let bx = Primitive::Box {
            min: vec![0.0, 0.0],
            max: vec![1.0, 1.0],
        };
        assert_eq!(bx.distance(&[0.5, 0.5]), 0.0);
        assert!((bx.distance(&[2.0, 2.0]) - 2f64.sqrt()).abs() < 1e-15);
        let s = Primitive::Sphere {
            center: vec![0.0, 0.0],
            radius: 1.0,
        };
        assert_eq!(s.distance(&[0.0, 0.25]), 0.75);
    }
}
