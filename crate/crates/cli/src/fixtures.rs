//! Deterministic fixture generators for sets, measures and point lists.

use rand::Rng;
use rieszcap::geometry::{sphere_points, PointSet, Primitive, RegionSet};
use rieszcap::measure::DiscreteMeasure;
use rieszcap::{Measure, Points, Region};

fn e1(n: usize, t: f64) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[0] = t;
    v
}

/// Round sphere of `radius` about the origin.
pub fn sphere_set(n: usize, radius: f64) -> Region {
    RegionSet::new(vec![Primitive::Sphere { center: vec![0.0; n], radius }]).unwrap()
}

/// Balls of radius `rho(i) delta` centred at `1.5 2^-i delta e_1`, `i = 1..=count`.
pub fn ball_family(n: usize, delta: f64, count: i32, rho: impl Fn(i32) -> f64) -> Region {
    RegionSet::new(
        (1..=count)
            .map(|i| Primitive::Ball { center: e1(n, 1.5 * 2f64.powi(-i) * delta), radius: rho(i) * delta })
            .collect(),
    )
    .unwrap()
}

/// Radii `4^-i delta`: capacities decay geometrically.
pub fn thin_family(n: usize, delta: f64, count: i32) -> Region {
    ball_family(n, delta, count, |i| 4f64.powi(-i))
}

/// Radii `2^(-i-2) delta`: one ball of fixed relative size per shell.
pub fn nonthin_family(n: usize, delta: f64, count: i32) -> Region {
    ball_family(n, delta, count, |i| 2f64.powi(-i - 2))
}

/// Thin family with random directions and radii in `[4^-i delta / 2, 4^-i delta]`.
pub fn random_thin_family<R: Rng>(rng: &mut R, n: usize, delta: f64, count: i32) -> Region {
    let prims = (1..=count)
        .map(|i| {
            let u = random_direction(rng, n);
            let r = 1.5 * 2f64.powi(-i) * delta;
            Primitive::Ball {
                center: u.iter().map(|x| x * r).collect(),
                radius: rng.gen_range(0.5..=1.0) * 4f64.powi(-i) * delta,
            }
        })
        .collect();
    RegionSet::new(prims).unwrap()
}

/// Concentric spheres of radius `1.5 2^-i delta`: every ray from the
/// origin meets each of them.
pub fn covering_cone(n: usize, delta: f64, count: i32) -> Region {
    RegionSet::new(
        (1..=count)
            .map(|i| Primitive::Sphere { center: vec![0.0; n], radius: 1.5 * 2f64.powi(-i) * delta })
            .collect(),
    )
    .unwrap()
}

pub fn random_direction<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let len = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if len > 1e-3 && len <= 1.0 {
            return v.iter().map(|x| x / len).collect();
        }
    }
}

/// `count` equal atoms of total `mass` at the midpoints of a uniform
/// partition of the unit segment `[-1/2, 1/2] e_1`.
pub fn segment_measure(n: usize, count: usize, mass: f64) -> Measure {
    let mut pts = PointSet::with_capacity(n, count);
    for k in 0..count {
        pts.push(&e1(n, (k as f64 + 0.5) / count as f64 - 0.5)).unwrap();
    }
    DiscreteMeasure::uniform(pts, mass).unwrap()
}

/// Uniform random points in the cube `[-half, half]^n`.
pub fn cube_points<R: Rng>(rng: &mut R, n: usize, count: usize, half: f64) -> Points {
    let mut pts = PointSet::with_capacity(n, count);
    for _ in 0..count {
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-half..half)).collect();
        pts.push(&x).unwrap();
    }
    pts
}

/// Uniform random points in the open ball of `radius` about the origin.
pub fn ball_points<R: Rng>(rng: &mut R, n: usize, count: usize, radius: f64) -> Points {
    let mut pts = PointSet::with_capacity(n, count);
    while pts.len() < count {
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        if x.iter().map(|v| v * v).sum::<f64>() < 1.0 {
            let x: Vec<f64> = x.iter().map(|v| v * radius).collect();
            pts.push(&x).unwrap();
        }
    }
    pts
}

/// Equal atoms of total `mass` on a sphere of `radius` about the origin.
pub fn sphere_measure(n: usize, count: usize, radius: f64, mass: f64) -> Measure {
    let pts = sphere_points::<f64>(n, count).map(|u| u.iter().map(|x| x * radius).collect());
    DiscreteMeasure::uniform(pts, mass).unwrap()
}

/// Equal atoms of total `mass` at `pts`, plus an atom of mass `atom` at
/// the origin when positive.
pub fn with_atom(pts: Points, mass: f64, atom: f64) -> Measure {
    let n = pts.dim();
    let background = DiscreteMeasure::uniform(pts, mass).unwrap();
    if atom > 0.0 {
        DiscreteMeasure::dirac(&vec![0.0; n], atom).unwrap().combine(1.0, &background, 1.0).unwrap()
    } else {
        background
    }
}
