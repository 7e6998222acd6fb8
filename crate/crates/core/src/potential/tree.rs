//! k-d treecode with monopole far-field approximation.

use rayon::prelude::*;

use super::{diameter_limit2, diameter_violation, too_far, KernelSpec, PotentialValue, TreeOptions};
use crate::error::Result;
use crate::geometry::PointSet;
use crate::measure::DiscreteMeasure;
use crate::scalar::{dist2, Scalar};

/// Below this opening angle the point is summed directly.
const THETA_FLOOR: f64 = 1e-3;

/// Points used to pick the starting opening angle.
const TUNING_SAMPLE: usize = 64;

#[derive(Clone, Debug)]
struct Node<T> {
    start: usize,
    end: usize,
    mass: T,
    /// Largest distance from the centroid to an atom.
    radius: T,
    /// `sum w |y - c|^2`.
    second_moment: T,
    children: Option<(usize, usize)>,
}

/// Atoms reordered into a k-d tree with per-node mass moments.
#[derive(Clone, Debug)]
pub struct KdTree<T> {
    dim: usize,
    coords: Vec<T>,
    weights: Vec<T>,
    centroids: Vec<T>,
    nodes: Vec<Node<T>>,
}

pub(crate) struct TreeOutput<T> {
    pub values: Vec<PotentialValue<T>>,
    pub bounds: Vec<T>,
    pub theta_min: T,
}

impl<T: Scalar> KdTree<T> {
    pub fn build(mu: &DiscreteMeasure<T>, leaf_size: usize) -> Self {
        let dim = mu.dim();
        let mut order: Vec<usize> = (0..mu.len()).collect();
        let mut tree = KdTree {
            dim,
            coords: Vec::new(),
            weights: Vec::new(),
            centroids: Vec::new(),
            nodes: Vec::new(),
        };
        if !order.is_empty() {
            tree.split(mu, &mut order, 0, leaf_size.max(1));
        }
        tree.coords = order.iter().flat_map(|&i| mu.atoms().get(i).iter().copied()).collect();
        tree.weights = order.iter().map(|&i| mu.weights()[i]).collect();
        tree
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    fn split(&mut self, mu: &DiscreteMeasure<T>, order: &mut [usize], offset: usize, leaf: usize) -> usize {
        let dim = self.dim;
        let atoms = mu.atoms();
        let weights = mu.weights();
        let mass: T = order.iter().map(|&i| weights[i]).sum();
        let mut c = vec![T::zero(); dim];
        if mass > T::zero() {
            for &i in order.iter() {
                for (ck, xk) in c.iter_mut().zip(atoms.get(i)) {
                    *ck = *ck + weights[i] * *xk;
                }
            }
            c.iter_mut().for_each(|ck| *ck = *ck / mass);
        } else {
            let m = T::from_usize_lossy(order.len());
            for &i in order.iter() {
                for (ck, xk) in c.iter_mut().zip(atoms.get(i)) {
                    *ck = *ck + *xk / m;
                }
            }
        }
        let mut radius = T::zero();
        let mut second_moment = T::zero();
        for &i in order.iter() {
            let r2 = dist2(atoms.get(i), &c);
            radius = radius.max(r2.sqrt());
            second_moment = second_moment + weights[i] * r2;
        }
        let id = self.nodes.len();
        self.nodes.push(Node {
            start: offset,
            end: offset + order.len(),
            mass,
            radius,
            second_moment,
            children: None,
        });
        self.centroids.extend(c);
        if order.len() > leaf {
            let mut lo = vec![T::infinity(); dim];
            let mut hi = vec![T::neg_infinity(); dim];
            for &i in order.iter() {
                for (k, x) in atoms.get(i).iter().enumerate() {
                    lo[k] = lo[k].min(*x);
                    hi[k] = hi[k].max(*x);
                }
            }
            let axis = (0..dim)
                .max_by(|a, b| (hi[*a] - lo[*a]).partial_cmp(&(hi[*b] - lo[*b])).unwrap())
                .unwrap_or(0);
            if hi[axis] > lo[axis] {
                let mid = order.len() / 2;
                order.select_nth_unstable_by(mid, |a, b| {
                    atoms.get(*a)[axis].partial_cmp(&atoms.get(*b)[axis]).unwrap()
                });
                let (left, right) = order.split_at_mut(mid);
                let l = self.split(mu, left, offset, leaf);
                let r = self.split(mu, right, offset + mid, leaf);
                self.nodes[id].children = Some((l, r));
            }
        }
        id
    }

    fn centroid(&self, id: usize) -> &[T] {
        &self.centroids[id * self.dim..(id + 1) * self.dim]
    }

    /// Potential at `x` with opening angle `theta`, and a rigorous bound on
    /// the monopole truncation error.
    pub fn evaluate(&self, kernel: &KernelSpec<T>, x: &[T], theta: T) -> Result<(PotentialValue<T>, T)> {
        if self.nodes.is_empty() {
            return Ok((PotentialValue::Finite(T::zero()), T::zero()));
        }
        let fast = kernel.fast();
        let log = kernel.is_log();
        let limit = diameter_limit2(kernel);
        let big_d = kernel.diameter_or_one();
        let s = kernel.exponent();
        let half = T::lit(0.5);
        let mut value = T::zero();
        let mut bound = T::zero();
        let mut infinite = false;
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id];
            let r2 = dist2(x, self.centroid(id));
            let d = r2.sqrt();
            let rho = node.radius;
            let inside_diameter = !log || d + rho <= big_d;
            if rho < theta * d && inside_diameter {
                let gap = d - rho;
                value = value + node.mass * fast.of_dist2(r2);
                let (first, second) = if log {
                    (node.mass * rho / gap, half * node.second_moment / (gap * gap))
                } else {
                    (
                        node.mass * s * rho * gap.powf(-s - T::one()),
                        half * node.second_moment * s * (s + T::one()) * gap.powf(-s - T::lit(2.0)),
                    )
                };
                bound = bound + first.min(second);
                continue;
            }
            match node.children {
                Some((l, r)) => {
                    stack.push(r);
                    stack.push(l);
                }
                None => {
                    for j in node.start..node.end {
                        let a = &self.coords[j * self.dim..(j + 1) * self.dim];
                        let r2 = dist2(a, x);
                        if log && diameter_violation(r2, limit) {
                            return Err(too_far(kernel, r2));
                        }
                        let w = self.weights[j];
                        if w == T::zero() {
                            continue;
                        }
                        if r2 == T::zero() {
                            infinite = true;
                        } else {
                            value = value + w * fast.of_dist2(r2);
                        }
                    }
                }
            }
        }
        if infinite {
            Ok((PotentialValue::Infinite, T::zero()))
        } else {
            Ok((PotentialValue::Finite(value), bound))
        }
    }

    /// Evaluates every point, halving the opening angle per point until the
    /// bound is within `tolerance` of the value. The starting angle is the
    /// smallest one a subsample of the points needed.
    pub(crate) fn evaluate_all(
        &self,
        kernel: &KernelSpec<T>,
        points: &PointSet<T>,
        opts: TreeOptions<T>,
    ) -> Result<TreeOutput<T>> {
        let rows: Vec<&[T]> = points.iter().collect();
        let stride = (rows.len() / TUNING_SAMPLE).max(1);
        let probes: Vec<&[T]> = rows.iter().step_by(stride).copied().collect();
        let start = probes
            .par_iter()
            .map(|x| self.tune_point(kernel, x, opts.theta, opts.tolerance).map(|r| r.2))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(opts.theta, T::min);
        let per_point = rows
            .par_iter()
            .map(|x| self.tune_point(kernel, x, start, opts.tolerance))
            .collect::<Result<Vec<_>>>()?;
        let theta_min = per_point.iter().map(|p| p.2).fold(start, T::min);
        Ok(TreeOutput {
            values: per_point.iter().map(|p| p.0).collect(),
            bounds: per_point.iter().map(|p| p.1).collect(),
            theta_min,
        })
    }

    fn tune_point(&self, kernel: &KernelSpec<T>, x: &[T], theta0: T, tol: T) -> Result<(PotentialValue<T>, T, T)> {
        let floor = T::lit(THETA_FLOOR);
        let mut theta = theta0;
        loop {
            let (v, b) = self.evaluate(kernel, x, theta)?;
            let ok = match v {
                PotentialValue::Infinite => true,
                PotentialValue::Finite(val) => b <= tol * val.abs(),
            };
            if ok || theta == T::zero() {
                return Ok((v, b, theta));
            }
            theta = theta * T::lit(0.5);
            if theta < floor {
                theta = T::zero();
            }
        }
    }
}
