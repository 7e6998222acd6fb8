//! Outer capacities `C(E, Omega)` as covering linear programs.
//!
//! A problem fixes constraint samples on `E` and candidate atom sites in
//! `Omega`; the capacity is the least total mass of a measure on the sites
//! whose truncated potential is at least one at every sample.

mod axioms;
mod builders;
mod sphere;

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{Domain, PointSet, RegionSet};
use crate::lp::{solve_covering, CoveringMatrix, DenseMatrix, LpMethod, LpOptions};
use crate::measure::DiscreteMeasure;
use crate::potential::KernelSpec;
use crate::scalar::{dist, Scalar};

pub use axioms::{verify_axioms, AxiomCheck, AxiomInstance, AxiomKind, AxiomReport, Contraction};
pub use builders::{Resolution, UniformGrid};
pub use sphere::sphere_capacity_constant;

/// Discretized capacity problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct CapacityProblem<T> {
    pub kernel: KernelSpec<T>,
    /// Constraint points on `E`.
    pub samples: PointSet<T>,
    /// Candidate atom positions in `Omega`.
    pub sites: PointSet<T>,
    /// Site spacing.
    pub h: T,
    /// Sample spacing.
    pub h_e: T,
    /// The kernel is capped at its value at this distance.
    pub h_trunc: T,
    #[serde(default)]
    pub lp: LpOptions,
}

impl<T: Scalar> CapacityProblem<T> {
    pub fn new(kernel: KernelSpec<T>, samples: PointSet<T>, sites: PointSet<T>, h: T, h_e: T, h_trunc: T) -> Result<Self> {
        let p = Self {
            kernel,
            samples,
            sites,
            h,
            h_e,
            h_trunc,
            lp: LpOptions::default(),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        self.kernel.validate()?;
        for (name, v) in [("h", self.h), ("h_e", self.h_e), ("h_trunc", self.h_trunc)] {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(invalid(format!("{name} must be positive")));
            }
        }
        for ps in [&self.samples, &self.sites] {
            if ps.dim() != self.kernel.n {
                return Err(Error::DimensionMismatch {
                    expected: self.kernel.n,
                    found: ps.dim(),
                });
            }
        }
        Ok(())
    }

    /// Checks samples lie on `e` and sites in `omega`.
    pub fn check_against(&self, e: &RegionSet<T>, omega: &Domain<T>) -> Result<()> {
        let tol = T::lit(1e-9) * omega.diameter();
        if let Some(i) = self.samples.iter().position(|x| e.distance(x) > tol) {
            return Err(Error::Domain(format!("constraint sample {i} is not on the target set")));
        }
        if let Some(i) = self.samples.iter().position(|x| !omega.contains(x)) {
            return Err(Error::Domain(format!(
                "constraint sample {i} lies outside the container; the target set must be inside it"
            )));
        }
        if let Some(i) = self.sites.iter().position(|x| !omega.contains(x)) {
            return Err(Error::Domain(format!("site {i} lies outside the container")));
        }
        Ok(())
    }

    /// Everything multiplied by `lambda`: the image problem on `lambda E`,
    /// `lambda Omega`.
    pub fn scaled(&self, lambda: T) -> Result<Self> {
        if !(lambda > T::zero()) {
            return Err(invalid("scale factor must be positive"));
        }
        let kernel = match self.kernel.diameter {
            Some(d) => self.kernel.with_diameter(d * lambda),
            None => self.kernel,
        };
        Ok(Self {
            kernel,
            samples: self.samples.scaled(lambda),
            sites: self.sites.scaled(lambda),
            h: self.h * lambda,
            h_e: self.h_e * lambda,
            h_trunc: self.h_trunc * lambda,
            lp: self.lp,
        })
    }

    /// Truncated kernel `K(max(r, h_trunc))`, clamped at zero for the log
    /// kernel.
    #[inline]
    pub fn entry(&self, x: &[T], y: &[T]) -> T {
        self.kernel.eval_truncated(dist(x, y), self.h_trunc).max(T::zero())
    }

    /// Truncated potential of `w` (weights on the sites) at `x`.
    pub fn potential(&self, w: &[T], x: &[T]) -> T {
        self.sites
            .iter()
            .zip(w)
            .filter(|(_, w)| **w > T::zero())
            .map(|(y, w)| *w * self.entry(x, y))
            .sum()
    }
}

struct KernelColumns<'a, T> {
    p: &'a CapacityProblem<T>,
}

impl<T: Scalar> CoveringMatrix<T> for KernelColumns<'_, T> {
    fn rows(&self) -> usize {
        self.p.samples.len()
    }

    fn cols(&self) -> usize {
        self.p.sites.len()
    }

    fn column(&self, j: usize, out: &mut [T]) {
        let y = self.p.sites.get(j);
        for (o, x) in out.iter_mut().zip(self.p.samples.iter()) {
            *o = self.p.entry(x, y);
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct CapacityResult<T> {
    /// Total mass of the feasible witness.
    pub value: T,
    /// Certified lower bound from the dual.
    pub dual_bound: T,
    pub gap: f64,
    pub slackness: f64,
    /// Optimal measure, restricted to sites carrying mass.
    pub witness: DiscreteMeasure<T>,
    /// Smallest truncated potential of the witness over the samples.
    #[serde(with = "crate::scalar::extended")]
    pub min_potential: T,
    pub n_sites: usize,
    pub n_samples: usize,
    pub h: T,
    pub h_e: T,
    pub h_trunc: T,
    pub method: LpMethod,
    pub pivots: usize,
}

/// Solves the capacity problem.
pub fn capacity<T: Scalar>(problem: &CapacityProblem<T>) -> Result<CapacityResult<T>> {
    problem.validate()?;
    let n = problem.kernel.n;
    let m = problem.samples.len();
    let empty = |method| CapacityResult {
        value: T::zero(),
        dual_bound: T::zero(),
        gap: 0.0,
        slackness: 0.0,
        witness: DiscreteMeasure::zero(n),
        min_potential: T::infinity(),
        n_sites: problem.sites.len(),
        n_samples: 0,
        h: problem.h,
        h_e: problem.h_e,
        h_trunc: problem.h_trunc,
        method,
        pivots: 0,
    };
    if m == 0 {
        return Ok(empty(LpMethod::DualSimplex));
    }
    if problem.sites.is_empty() {
        return Err(Error::Infeasible("the target set is nonempty but the site grid is empty".into()));
    }
    let implicit = KernelColumns { p: problem };
    let sol = if problem.sites.len() <= problem.lp.dense_limit {
        let cols = problem.sites.len();
        let rows: Vec<&[T]> = problem.samples.iter().collect();
        let data: Vec<T> = rows
            .par_iter()
            .flat_map_iter(|x| problem.sites.iter().map(move |y| problem.entry(x, y)))
            .collect();
        solve_covering(&DenseMatrix::new(m, cols, data)?, &problem.lp)?
    } else {
        solve_covering(&implicit, &problem.lp)?
    };
    let mut atoms = PointSet::new(n);
    let mut weights = Vec::new();
    for (y, w) in problem.sites.iter().zip(&sol.primal) {
        if *w > T::zero() {
            atoms.push(y)?;
            weights.push(*w);
        }
    }
    let witness = DiscreteMeasure::new(atoms, weights)?;
    let samples: Vec<&[T]> = problem.samples.iter().collect();
    let min_potential = samples
        .par_iter()
        .map(|x| {
            witness
                .iter()
                .map(|(y, w)| w * problem.entry(x, y))
                .sum::<T>()
        })
        .reduce(T::infinity, T::min);
    Ok(CapacityResult {
        value: sol.objective,
        dual_bound: sol.dual_objective,
        gap: sol.gap,
        slackness: sol.slackness,
        witness,
        min_potential,
        n_sites: problem.sites.len(),
        n_samples: m,
        h: problem.h,
        h_e: problem.h_e,
        h_trunc: problem.h_trunc,
        method: sol.method,
        pivots: sol.pivots,
    })
}

/// Removes exact duplicates, keeping first occurrences.
pub(crate) fn dedupe<T: Scalar>(ps: PointSet<T>) -> PointSet<T> {
    let mut seen = HashSet::new();
    let mut out = PointSet::with_capacity(ps.dim(), ps.len());
    for p in ps.iter() {
        let key: Vec<u64> = p.iter().map(|v| v.as_f64().to_bits()).collect();
        if seen.insert(key) {
            out.push(p).unwrap();
        }
    }
    out
}
