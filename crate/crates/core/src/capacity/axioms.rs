//! Lattice-level checks of monotonicity, subadditivity, scaling and
//! contraction.
//!
//! All problems in one check share the container lattice, so the inequalities
//! hold exactly for the discrete programs and any violation beyond the
//! solver tolerance is a bug.

use serde::{Deserialize, Serialize};

use super::{capacity, dedupe, CapacityProblem, UniformGrid};
use crate::error::{invalid, Result};
use crate::geometry::{project_to_ball, Domain, PointSet, RegionSet};
use crate::potential::KernelSpec;
use crate::scalar::Scalar;

/// 1-Lipschitz self-map of the container.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub enum Contraction<T> {
    /// Radial retraction onto the closed unit ball.
    ProjectToBall,
    /// `x -> matrix x + shift`, row-major matrix with operator norm <= 1.
    Affine { matrix: Vec<T>, shift: Vec<T> },
}

impl<T: Scalar> Contraction<T> {
    pub fn apply(&self, x: &[T]) -> Vec<T> {
        match self {
            Contraction::ProjectToBall => project_to_ball(x),
            Contraction::Affine { matrix, shift } => {
                let n = x.len();
                (0..n)
                    .map(|i| (0..n).fold(shift[i], |acc, k| acc + matrix[i * n + k] * x[k]))
                    .collect()
            }
        }
    }

    /// Upper bound on the Lipschitz constant (Frobenius norm for affine maps).
    pub fn lipschitz_bound(&self) -> T {
        match self {
            Contraction::ProjectToBall => T::one(),
            Contraction::Affine { matrix, .. } => matrix.iter().map(|v| *v * *v).sum::<T>().sqrt(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub enum AxiomInstance<T> {
    Monotone { small: RegionSet<T>, large: RegionSet<T> },
    Subadditive { parts: Vec<RegionSet<T>> },
    Scaling { set: RegionSet<T>, lambda: T },
    Contraction { set: RegionSet<T>, map: Contraction<T> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxiomKind {
    Monotone,
    Subadditive,
    Scaling,
    Contraction,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxiomCheck {
    pub kind: AxiomKind,
    /// Left side of the inequality (or scaled value for scaling).
    pub lhs: f64,
    /// Right side (or `lambda^(n-alpha)` times the base value).
    pub rhs: f64,
    /// `(lhs - rhs) / max(|rhs|, tiny)`; for scaling, its absolute value.
    pub excess: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxiomReport {
    pub tolerance: f64,
    pub checks: Vec<AxiomCheck>,
    pub violations: usize,
}

/// Runs every instance on `omega` with the shared lattice `grid`.
pub fn verify_axioms<T: Scalar>(
    instances: &[AxiomInstance<T>],
    omega: &Domain<T>,
    kernel: &KernelSpec<T>,
    grid: &UniformGrid<T>,
    tolerance: f64,
) -> Result<AxiomReport> {
    let mut checks = Vec::with_capacity(instances.len());
    for inst in instances {
        checks.push(check(inst, omega, kernel, grid, tolerance)?);
    }
    let violations = checks.iter().filter(|c| !c.holds).count();
    Ok(AxiomReport {
        tolerance,
        checks,
        violations,
    })
}

fn value<T: Scalar>(p: &CapacityProblem<T>) -> Result<f64> {
    Ok(capacity(p)?.value.as_f64())
}

fn inequality(kind: AxiomKind, lhs: f64, rhs: f64, tol: f64) -> AxiomCheck {
    let excess = (lhs - rhs) / rhs.abs().max(f64::MIN_POSITIVE);
    AxiomCheck {
        kind,
        lhs,
        rhs,
        excess,
        holds: lhs <= rhs + tol * rhs.abs().max(lhs.abs()),
    }
}

fn check<T: Scalar>(
    inst: &AxiomInstance<T>,
    omega: &Domain<T>,
    kernel: &KernelSpec<T>,
    grid: &UniformGrid<T>,
    tol: f64,
) -> Result<AxiomCheck> {
    let build = |e: &RegionSet<T>| CapacityProblem::uniform(e, omega, kernel, grid);
    Ok(match inst {
        AxiomInstance::Monotone { small, large } => {
            let a = value(&build(small)?)?;
            let b = value(&build(large)?)?;
            inequality(AxiomKind::Monotone, a, b, tol)
        }
        AxiomInstance::Subadditive { parts } => {
            if parts.is_empty() {
                return Err(invalid("subadditivity needs at least one part"));
            }
            let union = parts.iter().skip(1).fold(parts[0].clone(), |acc, p| acc.union(p));
            let whole = value(&build(&union)?)?;
            let mut sum = 0.0;
            for p in parts {
                sum += value(&build(p)?)?;
            }
            inequality(AxiomKind::Subadditive, whole, sum, tol)
        }
        AxiomInstance::Scaling { set, lambda } => {
            let base = build(set)?;
            let scaled = base.scaled(*lambda)?;
            let a = value(&base)?;
            let b = value(&scaled)?;
            let expected = a * lambda.as_f64().powf(kernel.exponent().as_f64());
            let excess = ((b - expected) / expected.abs().max(f64::MIN_POSITIVE)).abs();
            AxiomCheck {
                kind: AxiomKind::Scaling,
                lhs: b,
                rhs: expected,
                excess,
                holds: excess <= tol || (a == 0.0 && b == 0.0),
            }
        }
        AxiomInstance::Contraction { set, map } => {
            if map.lipschitz_bound() > T::one() + T::lit(1e-12) {
                return Err(invalid("contraction map has Lipschitz bound above one"));
            }
            let base = build(set)?;
            // The image problem keeps the original sites and adds their
            // images, so pushing the witness forward stays admissible.
            let samples = base.samples.map(|x| map.apply(x));
            let mut sites = base.sites.clone();
            let images = base.sites.map(|y| map.apply(y));
            let mut kept = PointSet::new(images.dim());
            for y in images.iter().filter(|y| omega.contains(y)) {
                kept.push(y)?;
            }
            sites.extend(&kept)?;
            let image = CapacityProblem::new(*kernel, dedupe(samples), dedupe(sites), grid.h, grid.h_e, grid.h_trunc)?;
            let a = value(&image)?;
            let b = value(&base)?;
            inequality(AxiomKind::Contraction, a, b, tol)
        }
    })
}
