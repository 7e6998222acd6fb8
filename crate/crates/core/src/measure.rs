//! Finite atomic measures, ball masses and density scans.
//!
//! Suprema over radii are taken on dyadic grids `r_max 2^-k`; a true
//! supremum over all radii exceeds the dyadic one by at most a factor
//! `2^exponent`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{Domain, PointSet};
use crate::scalar::{dist, norm, Scalar};

/// Nonnegative measure with finitely many atoms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct DiscreteMeasure<T> {
    atoms: PointSet<T>,
    weights: Vec<T>,
}

impl<T: Scalar> DiscreteMeasure<T> {
    pub fn new(atoms: PointSet<T>, weights: Vec<T>) -> Result<Self> {
        if atoms.len() != weights.len() {
            return Err(invalid(format!(
                "{} atoms but {} weights",
                atoms.len(),
                weights.len()
            )));
        }
        if let Some(i) = weights.iter().position(|w| !(*w >= T::zero()) || !w.is_finite()) {
            return Err(invalid(format!("weight {i} is negative or not finite")));
        }
        Ok(Self { atoms, weights })
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            atoms: PointSet::new(dim),
            weights: Vec::new(),
        }
    }

    /// Single atom of mass `m` at `x`.
    pub fn dirac(x: &[T], m: T) -> Result<Self> {
        Self::new(PointSet::from_rows(x.len(), &[x])?, vec![m])
    }

    /// `n` equal atoms of total mass `m` at the given points.
    pub fn uniform(points: PointSet<T>, m: T) -> Result<Self> {
        let w = m / T::from_usize_lossy(points.len().max(1));
        let weights = vec![w; points.len()];
        Self::new(points, weights)
    }

    pub fn dim(&self) -> usize {
        self.atoms.dim()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn atoms(&self) -> &PointSet<T> {
        &self.atoms
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn atom(&self, i: usize) -> (&[T], T) {
        (self.atoms.get(i), self.weights[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[T], T)> + '_ {
        self.atoms.iter().zip(self.weights.iter().copied())
    }

    pub fn total_mass(&self) -> T {
        self.weights.iter().copied().sum()
    }

    /// Verifies every atom lies in the (open) domain.
    pub fn check_domain(&self, domain: &Domain<T>) -> Result<()> {
        if domain.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: domain.dim(),
                found: self.dim(),
            });
        }
        if let Some(i) = self.atoms.iter().position(|a| !domain.contains(a)) {
            return Err(Error::Domain(format!("atom {i} lies outside the domain")));
        }
        Ok(())
    }

    /// Mass of atoms satisfying `pred`.
    pub fn mass_where(&self, mut pred: impl FnMut(&[T]) -> bool) -> T {
        self.iter()
            .filter(|(a, _)| pred(a))
            .fold(T::zero(), |acc, (_, w)| acc + w)
    }

    /// Mass of the closed ball `|y - center| <= r`.
    pub fn ball_mass(&self, center: &[T], r: T) -> T {
        self.mass_where(|a| dist(a, center) <= r)
    }

    /// `a * self + b * other`, concatenating atoms.
    pub fn combine(&self, a: T, other: &DiscreteMeasure<T>, b: T) -> Result<Self> {
        let mut atoms = self.atoms.clone();
        atoms.extend(&other.atoms)?;
        let weights = self
            .weights
            .iter()
            .map(|w| *w * a)
            .chain(other.weights.iter().map(|w| *w * b))
            .collect();
        Self::new(atoms, weights)
    }

    /// Push-forward under `f` (weights unchanged).
    pub fn push_forward(&self, f: impl Fn(&[T]) -> Vec<T>) -> Self {
        Self {
            atoms: self.atoms.map(f),
            weights: self.weights.clone(),
        }
    }

    pub fn scaled_weights(&self, a: T) -> Self {
        Self {
            atoms: self.atoms.clone(),
            weights: self.weights.iter().map(|w| *w * a).collect(),
        }
    }

    /// Restriction to atoms satisfying `pred`.
    pub fn restrict(&self, mut pred: impl FnMut(&[T]) -> bool) -> Self {
        let mut atoms = PointSet::new(self.dim());
        let mut weights = Vec::new();
        for (a, w) in self.iter() {
            if pred(a) {
                atoms.push(a).unwrap();
                weights.push(w);
            }
        }
        Self { atoms, weights }
    }

    /// Atoms sorted by distance from `center`, with cumulative masses, for
    /// repeated ball-mass queries.
    pub fn radial_profile(&self, center: &[T]) -> RadialProfile<T> {
        let mut pairs: Vec<(T, T)> = self.iter().map(|(a, w)| (dist(a, center), w)).collect();
        pairs.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
        let mut acc = T::zero();
        let mut radii = Vec::with_capacity(pairs.len());
        let mut cumulative = Vec::with_capacity(pairs.len());
        for (r, w) in pairs {
            acc = acc + w;
            radii.push(r);
            cumulative.push(acc);
        }
        RadialProfile { radii, cumulative }
    }
}

/// Sorted atom distances from a fixed center.
#[derive(Clone, Debug)]
pub struct RadialProfile<T> {
    radii: Vec<T>,
    cumulative: Vec<T>,
}

impl<T: Scalar> RadialProfile<T> {
    /// Mass of the closed ball of radius `r`.
    pub fn ball_mass(&self, r: T) -> T {
        let k = self.radii.partition_point(|d| *d <= r);
        if k == 0 {
            T::zero()
        } else {
            self.cumulative[k - 1]
        }
    }

    /// Mass with `lo < |y - center| < hi`.
    pub fn open_shell_mass(&self, lo: T, hi: T) -> T {
        let below_hi = self.radii.partition_point(|d| *d < hi);
        let upto_lo = self.radii.partition_point(|d| *d <= lo);
        let m = |k: usize| if k == 0 { T::zero() } else { self.cumulative[k - 1] };
        m(below_hi) - m(upto_lo)
    }
}

/// `r_max 2^-k` for `k = 0..count`, descending.
pub fn dyadic_radii<T: Scalar>(r_max: T, count: usize) -> Vec<T> {
    (0..count).map(|k| r_max * T::pow2(-(k as i32))).collect()
}

/// Number of finest radii inspected by the unboundedness heuristic.
pub const GROWTH_WINDOW: usize = 5;

/// Heuristic for `limsup r^-d mu(B_r) = +infinity`: over the five smallest
/// radii the normalized mass grows at every step by at least the square
/// root of the growth a point mass would show.
fn growth_suspect<T: Scalar>(radii: &[T], values: &[T], exponent: T) -> bool {
    if radii.len() < GROWTH_WINDOW {
        return false;
    }
    let mut order: Vec<usize> = (0..radii.len()).collect();
    order.sort_by(|a, b| radii[*b].partial_cmp(&radii[*a]).unwrap());
    let tail = &order[order.len() - GROWTH_WINDOW..];
    tail.windows(2).all(|w| {
        let (big, small) = (w[0], w[1]);
        let required = (radii[big] / radii[small]).powf(exponent / T::lit(2.0));
        values[big] > T::zero() && values[small] > values[big] && values[small] >= values[big] * required
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityEntry<T> {
    /// `sup_r r^-d mu(B_r(x))` over the supplied radii.
    pub sup: T,
    /// Radius achieving the supremum.
    pub argmax_radius: T,
    /// Set when the finest radii show unbounded growth.
    pub unbounded_suspect: bool,
}

/// Upper `d`-density of `mu` at each probe over the given radii.
pub fn density_scan<T: Scalar>(
    mu: &DiscreteMeasure<T>,
    probes: &PointSet<T>,
    d: T,
    radii: &[T],
) -> Result<Vec<DensityEntry<T>>> {
    if radii.is_empty() {
        return Err(invalid("density scan needs at least one radius"));
    }
    if radii.iter().any(|r| !(*r > T::zero())) {
        return Err(invalid("radii must be positive"));
    }
    let n = T::from_usize_lossy(mu.dim());
    if !(d >= T::zero() && d <= n) {
        return Err(invalid("density exponent must lie in [0, n]"));
    }
    let probes: Vec<&[T]> = probes.iter().collect();
    Ok(probes
        .par_iter()
        .map(|x| density_at(mu, x, d, radii))
        .collect())
}

fn density_at<T: Scalar>(mu: &DiscreteMeasure<T>, x: &[T], d: T, radii: &[T]) -> DensityEntry<T> {
    let profile = mu.radial_profile(x);
    let values: Vec<T> = radii
        .iter()
        .map(|r| profile.ball_mass(*r) / r.powf(d))
        .collect();
    let (k, sup) = values
        .iter()
        .enumerate()
        .fold((0, T::zero()), |(bk, bv), (k, v)| if *v > bv { (k, *v) } else { (bk, bv) });
    DensityEntry {
        sup,
        argmax_radius: radii[k],
        unbounded_suspect: growth_suspect(radii, &values, d),
    }
}

/// Verified bound `mu(B_r(p)) <= constant r^exponent` on dyadic radii.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthCertificate<T> {
    pub point: Vec<T>,
    pub exponent: T,
    pub constant: T,
    pub r_min: T,
    pub r_max: T,
}

impl<T: Scalar> GrowthCertificate<T> {
    /// Re-checks the bound on every radius of the grid.
    pub fn holds(&self, mu: &DiscreteMeasure<T>, radii: &[T]) -> bool {
        let profile = mu.radial_profile(&self.point);
        let slack = T::one() + T::epsilon() * T::lit(16.0);
        radii
            .iter()
            .all(|r| profile.ball_mass(*r) <= self.constant * r.powf(self.exponent) * slack)
    }
}

/// Growth constant of `mu` at `p`, or `None` when the scan suspects the
/// normalized mass is unbounded.
pub fn growth_certificate<T: Scalar>(
    mu: &DiscreteMeasure<T>,
    p: &[T],
    exponent: T,
    radii: &[T],
) -> Result<Option<GrowthCertificate<T>>> {
    if radii.is_empty() || radii.iter().any(|r| !(*r > T::zero())) {
        return Err(invalid("growth certificate needs positive radii"));
    }
    let entry = density_at(mu, p, exponent, radii);
    if entry.unbounded_suspect {
        return Ok(None);
    }
    let (r_min, r_max) = radii
        .iter()
        .fold((T::infinity(), T::zero()), |(lo, hi), r| (lo.min(*r), hi.max(*r)));
    Ok(Some(GrowthCertificate {
        point: p.to_vec(),
        exponent,
        constant: entry.sup,
        r_min,
        r_max,
    }))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VitaliPoint<T> {
    pub index: usize,
    pub point: Vec<T>,
    /// `sup_r mu(B_r(p) ∩ B_2) / (mu(B_2) r^{n-1})` over dyadic `r <= 2`.
    pub ratio: T,
    /// Radius where the supremum is attained.
    pub radius: T,
    /// Whether `ratio <= c`.
    pub certified: bool,
}

/// Sphere sample with the smallest normalized `(n-1)`-density of `mu`
/// restricted to the open ball `B_2`, over radii `2^{1-k}`, `k < levels`.
pub fn vitali_point<T: Scalar>(
    mu: &DiscreteMeasure<T>,
    samples: &PointSet<T>,
    c: T,
    levels: usize,
) -> Result<VitaliPoint<T>> {
    if samples.is_empty() {
        return Err(invalid("vitali scan needs at least one sample"));
    }
    if levels == 0 {
        return Err(invalid("vitali scan needs at least one radius"));
    }
    let two = T::lit(2.0);
    let inside = mu.restrict(|a| norm(a) < two);
    let total = inside.total_mass();
    if !(total > T::zero()) {
        return Err(Error::DegenerateMeasure(
            "measure has no mass in B_2; the Vitali ratio is undefined".into(),
        ));
    }
    let radii = dyadic_radii(two, levels);
    let e = T::from_usize_lossy(mu.dim() - 1);
    let pts: Vec<&[T]> = samples.iter().collect();
    let scored: Vec<(T, T)> = pts
        .par_iter()
        .map(|p| {
            let profile = inside.radial_profile(p);
            radii
                .iter()
                .map(|r| (profile.ball_mass(*r) / (total * r.powf(e)), *r))
                .fold((T::zero(), radii[0]), |best, cur| if cur.0 > best.0 { cur } else { best })
        })
        .collect();
    let (index, (ratio, radius)) = scored
        .iter()
        .copied()
        .enumerate()
        .fold((0, scored[0]), |best, (i, cur)| {
            if cur.0 < best.1 .0 {
                (i, cur)
            } else {
                best
            }
        });
    Ok(VitaliPoint {
        index,
        point: samples.get(index).to_vec(),
        ratio,
        radius,
        certified: ratio <= c,
    })
}
