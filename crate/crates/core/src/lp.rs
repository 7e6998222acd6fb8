//! Covering linear programs `min 1'w  s.t.  A w >= 1, w >= 0` with a
//! nonnegative matrix `A`.
//!
//! Small problems run a dense-tableau dual simplex from the surplus basis,
//! which is dual feasible from the start. Wide problems run the same solver
//! on a restricted column set and price the remaining columns against the
//! dual until none has negative reduced cost.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::scalar::Scalar;

/// Column access for a covering matrix.
pub trait CoveringMatrix<T: Scalar>: Sync {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;
    /// Writes column `j` into `out` (length `rows`).
    fn column(&self, j: usize, out: &mut [T]);
}

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn new(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(invalid(format!(
                "matrix data has {} entries, expected {rows} x {cols}",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> T) -> Self {
        let data = (0..rows * cols).map(|k| f(k / cols.max(1), k % cols.max(1))).collect();
        Self { rows, cols, data }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }
}

impl<T: Scalar> CoveringMatrix<T> for DenseMatrix<T> {
    fn rows(&self) -> usize {
        self.rows
    }

    fn cols(&self) -> usize {
        self.cols
    }

    fn column(&self, j: usize, out: &mut [T]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.get(i, j);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LpOptions {
    pub max_pivots: usize,
    /// Relative duality gap required for success.
    pub gap_tolerance: f64,
    /// Degenerate pivots in a row before switching to Bland's rule.
    pub stall_limit: usize,
    /// Column count above which column generation is used.
    pub dense_limit: usize,
    /// Columns added per pricing round.
    pub pricing_batch: usize,
    pub max_rounds: usize,
}

impl Default for LpOptions {
    fn default() -> Self {
        Self {
            max_pivots: 200_000,
            gap_tolerance: 1e-9,
            stall_limit: 50,
            dense_limit: 5000,
            pricing_batch: 200,
            max_rounds: 200,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpMethod {
    DualSimplex,
    ColumnGeneration,
}

/// Certified covering-LP optimum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct LpSolution<T> {
    /// Feasible primal point (`A w >= 1` holds exactly as evaluated).
    pub primal: Vec<T>,
    /// Feasible dual point (`A' y <= 1`).
    pub dual: Vec<T>,
    pub objective: T,
    pub dual_objective: T,
    /// `(objective - dual_objective) / objective`.
    pub gap: f64,
    /// Largest complementary-slackness product, normalized by the objective.
    pub slackness: f64,
    pub pivots: usize,
    pub rounds: usize,
    pub method: LpMethod,
}

/// Solves the covering LP for `a`.
pub fn solve_covering<T: Scalar, M: CoveringMatrix<T>>(a: &M, opts: &LpOptions) -> Result<LpSolution<T>> {
    let (m, n) = (a.rows(), a.cols());
    if m == 0 {
        return Ok(LpSolution {
            primal: vec![T::zero(); n],
            dual: Vec::new(),
            objective: T::zero(),
            dual_objective: T::zero(),
            gap: 0.0,
            slackness: 0.0,
            pivots: 0,
            rounds: 0,
            method: LpMethod::DualSimplex,
        });
    }
    if n == 0 {
        return Err(Error::Infeasible("no candidate columns for a nonempty constraint set".into()));
    }
    if n <= opts.dense_limit {
        let cols: Vec<usize> = (0..n).collect();
        let mut sol = solve_restricted(a, &cols, opts)?;
        sol.method = LpMethod::DualSimplex;
        return Ok(sol);
    }
    column_generation(a, opts)
}

fn column_generation<T: Scalar, M: CoveringMatrix<T>>(a: &M, opts: &LpOptions) -> Result<LpSolution<T>> {
    let (m, n) = (a.rows(), a.cols());
    let mut buf = vec![T::zero(); m];
    // Start from the best-covering column of each row.
    let mut best = vec![(T::zero(), usize::MAX); m];
    for j in 0..n {
        a.column(j, &mut buf);
        for (i, v) in buf.iter().enumerate() {
            if *v > best[i].0 {
                best[i] = (*v, j);
            }
        }
    }
    if let Some(i) = best.iter().position(|b| b.1 == usize::MAX) {
        return Err(Error::Infeasible(format!("row {i} has no positive entry")));
    }
    let mut active: Vec<usize> = best.iter().map(|b| b.1).collect();
    active.sort_unstable();
    active.dedup();
    let mut pivots = 0;
    for round in 1..=opts.max_rounds {
        let mut sol = solve_restricted(a, &active, opts)?;
        pivots += sol.pivots;
        // Raw duals from the restricted problem; reduced costs 1 - A'y.
        let y = &sol.dual;
        let mut priced: Vec<(T, usize)> = Vec::new();
        let mut scale = T::one();
        for j in 0..n {
            a.column(j, &mut buf);
            let s: T = buf.iter().zip(y).map(|(x, y)| *x * *y).sum();
            scale = scale.max(s);
            if s > T::one() + T::lit(opts.gap_tolerance * 0.1) {
                priced.push((s, j));
            }
        }
        // Rescaling against every column gives a dual bound for the full problem.
        let full_dual: Vec<T> = y.iter().map(|v| *v / scale).collect();
        let dual_objective: T = full_dual.iter().copied().sum();
        let certified_gap = ((sol.objective - dual_objective) / sol.objective).as_f64().max(0.0);
        if priced.is_empty() || certified_gap <= opts.gap_tolerance {
            sol.primal = lift(&active, &sol.primal, n);
            sol.dual = full_dual;
            sol.dual_objective = dual_objective;
            sol.gap = certified_gap;
            sol.pivots = pivots;
            sol.rounds = round;
            sol.method = LpMethod::ColumnGeneration;
            sol.slackness = slackness(a, &sol.primal, &sol.dual, sol.objective);
            return Ok(sol);
        }
        priced.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap().then(x.1.cmp(&y.1)));
        let before = active.len();
        active.extend(priced.iter().take(opts.pricing_batch).map(|p| p.1));
        active.sort_unstable();
        active.dedup();
        if active.len() == before {
            return Err(Error::NotConverged {
                iterations: pivots,
                gap: certified_gap,
                objective: sol.objective.as_f64(),
            });
        }
    }
    Err(Error::NotConverged {
        iterations: pivots,
        gap: f64::NAN,
        objective: f64::NAN,
    })
}

fn lift<T: Scalar>(active: &[usize], w: &[T], n: usize) -> Vec<T> {
    let mut full = vec![T::zero(); n];
    for (k, j) in active.iter().enumerate() {
        full[*j] = w[k];
    }
    full
}

/// Dense dual simplex on the columns `cols` of `a`. The returned primal is
/// indexed by position in `cols` and the dual is certified against `cols`
/// only.
fn solve_restricted<T: Scalar, M: CoveringMatrix<T>>(a: &M, cols: &[usize], opts: &LpOptions) -> Result<LpSolution<T>> {
    let m = a.rows();
    let n = cols.len();
    let width = n + m;
    let mut buf = vec![T::zero(); m];
    let mut tab = vec![T::zero(); m * width];
    // Columns are scaled to unit maximum; the cost of column k becomes
    // 1 / scale[k] so the optimum is unchanged.
    let mut scale = vec![T::one(); n];
    for (k, j) in cols.iter().enumerate() {
        a.column(*j, &mut buf);
        let s = buf.iter().copied().fold(T::zero(), T::max);
        if s > T::zero() {
            scale[k] = s;
        }
        for i in 0..m {
            tab[i * width + k] = -buf[i] / scale[k];
        }
    }
    for i in 0..m {
        tab[i * width + n + i] = T::one();
    }
    let a_sub = Restricted { a, cols };
    let mut rhs = vec![-T::one(); m];
    let mut cost = vec![T::zero(); width];
    for k in 0..n {
        cost[k] = scale[k].recip();
    }
    let mut basis: Vec<usize> = (n..width).collect();

    let feas_tol = T::lit(1e-12);
    let piv_tol = T::lit(1e-11);
    let mut pivots = 0usize;
    let mut stall = 0usize;
    let mut last_obj = T::neg_infinity();
    let mut bland = false;
    let mut pivot_row = vec![T::zero(); width];
    loop {
        // Leaving row.
        let r = if bland {
            (0..m).filter(|i| rhs[*i] < -feas_tol).min_by_key(|i| basis[*i])
        } else {
            (0..m)
                .filter(|i| rhs[*i] < -feas_tol)
                .min_by(|x, y| rhs[*x].partial_cmp(&rhs[*y]).unwrap())
        };
        let Some(r) = r else { break };
        if pivots >= opts.max_pivots {
            return Err(Error::NotConverged {
                iterations: pivots,
                gap: f64::NAN,
                objective: f64::NAN,
            });
        }
        let row = &tab[r * width..(r + 1) * width];
        let row_scale = row.iter().fold(T::zero(), |acc, v| acc.max(v.abs()));
        let tol = piv_tol * row_scale.max(T::one());
        let mut q = usize::MAX;
        let mut best = T::infinity();
        let mut best_mag = T::zero();
        for (j, t) in row.iter().enumerate() {
            if *t < -tol {
                let ratio = cost[j].max(T::zero()) / -*t;
                let better = if bland {
                    ratio < best
                } else {
                    ratio < best || (ratio == best && -*t > best_mag)
                };
                if better {
                    best = ratio;
                    best_mag = -*t;
                    q = j;
                }
            }
        }
        if q == usize::MAX {
            return Err(Error::Infeasible(format!(
                "constraint row {r} cannot be satisfied by any candidate column"
            )));
        }
        // Pivot on (r, q).
        let p = tab[r * width + q];
        for (dst, src) in pivot_row.iter_mut().zip(&tab[r * width..(r + 1) * width]) {
            *dst = *src / p;
        }
        pivot_row[q] = T::one();
        let prhs = rhs[r] / p;
        for i in 0..m {
            if i == r {
                continue;
            }
            let f = tab[i * width + q];
            if f == T::zero() {
                continue;
            }
            let dst = &mut tab[i * width..(i + 1) * width];
            for (d, s) in dst.iter_mut().zip(&pivot_row) {
                *d = *d - f * *s;
            }
            dst[q] = T::zero();
            rhs[i] = rhs[i] - f * prhs;
        }
        let f = cost[q];
        if f != T::zero() {
            for (d, s) in cost.iter_mut().zip(&pivot_row) {
                *d = *d - f * *s;
            }
        }
        cost[q] = T::zero();
        tab[r * width..(r + 1) * width].copy_from_slice(&pivot_row);
        rhs[r] = prhs;
        basis[r] = q;
        pivots += 1;

        // Dual objective 1'y increases monotonically; stalls mean degeneracy.
        let obj: T = cost[n..].iter().copied().sum();
        if obj > last_obj * (T::one() + T::epsilon()) + T::epsilon() {
            last_obj = obj;
            stall = 0;
        } else {
            stall += 1;
            if stall >= opts.stall_limit {
                bland = true;
            }
        }
    }

    let mut w = vec![T::zero(); n];
    for (i, b) in basis.iter().enumerate() {
        if *b < n {
            w[*b] = rhs[i].max(T::zero()) / scale[*b];
        }
    }
    let y: Vec<T> = cost[n..].iter().map(|c| c.max(T::zero())).collect();
    let mut sol = certify(&a_sub, w, y, pivots);
    if sol.gap > opts.gap_tolerance {
        if let Some((w, y)) = refine(&a_sub, &basis) {
            let refined = certify(&a_sub, w, y, pivots);
            if refined.gap < sol.gap {
                sol = refined;
            }
        }
    }
    if !(sol.gap <= opts.gap_tolerance) {
        return Err(Error::NotConverged {
            iterations: pivots,
            gap: sol.gap,
            objective: sol.objective.as_f64(),
        });
    }
    Ok(sol)
}

struct Restricted<'a, M> {
    a: &'a M,
    cols: &'a [usize],
}

impl<T: Scalar, M: CoveringMatrix<T>> CoveringMatrix<T> for Restricted<'_, M> {
    fn rows(&self) -> usize {
        self.a.rows()
    }

    fn cols(&self) -> usize {
        self.cols.len()
    }

    fn column(&self, j: usize, out: &mut [T]) {
        self.a.column(self.cols[j], out)
    }
}

/// Rescales `w` to exact feasibility and `y` to dual feasibility, then
/// measures the gap.
fn certify<T: Scalar, M: CoveringMatrix<T>>(a: &M, mut w: Vec<T>, mut y: Vec<T>, pivots: usize) -> LpSolution<T> {
    let m = a.rows();
    let mut aw = vec![T::zero(); m];
    let mut aty_max = T::zero();
    let mut buf = vec![T::zero(); m];
    for j in 0..a.cols() {
        a.column(j, &mut buf);
        if w[j] > T::zero() {
            for (acc, v) in aw.iter_mut().zip(&buf) {
                *acc = *acc + *v * w[j];
            }
        }
        let s: T = buf.iter().zip(&y).map(|(x, y)| *x * *y).sum();
        aty_max = aty_max.max(s);
    }
    let min_aw = aw.iter().copied().fold(T::infinity(), T::min);
    if min_aw > T::zero() && min_aw < T::one() {
        w.iter_mut().for_each(|v| *v = *v / min_aw);
    }
    if aty_max > T::one() {
        y.iter_mut().for_each(|v| *v = *v / aty_max);
    }
    let objective: T = w.iter().copied().sum();
    let dual_objective: T = y.iter().copied().sum();
    let gap = if min_aw > T::zero() && objective > T::zero() {
        ((objective - dual_objective) / objective).as_f64().max(0.0)
    } else {
        f64::INFINITY
    };
    let mut sol = LpSolution {
        primal: w,
        dual: y,
        objective,
        dual_objective,
        gap,
        slackness: 0.0,
        pivots,
        rounds: 1,
        method: LpMethod::DualSimplex,
    };
    sol.slackness = slackness(a, &sol.primal, &sol.dual, objective);
    sol
}

/// `max(max_j w_j (1 - A'y)_j, max_i y_i ((Aw)_i - 1)) / objective`.
fn slackness<T: Scalar, M: CoveringMatrix<T>>(a: &M, w: &[T], y: &[T], objective: T) -> f64 {
    let m = a.rows();
    let mut buf = vec![T::zero(); m];
    let mut aw = vec![T::zero(); m];
    let mut worst = T::zero();
    for j in 0..a.cols() {
        a.column(j, &mut buf);
        let s: T = buf.iter().zip(y).map(|(x, y)| *x * *y).sum();
        worst = worst.max((w[j] * (T::one() - s)).abs());
        if w[j] > T::zero() {
            for (acc, v) in aw.iter_mut().zip(&buf) {
                *acc = *acc + *v * w[j];
            }
        }
    }
    for (yi, awi) in y.iter().zip(&aw) {
        worst = worst.max((*yi * (*awi - T::one())).abs());
    }
    if objective > T::zero() {
        (worst / objective).as_f64()
    } else {
        worst.as_f64()
    }
}

/// Recomputes the basic solution and duals from the final basis by LU.
fn refine<T: Scalar, M: CoveringMatrix<T>>(a: &M, basis: &[usize]) -> Option<(Vec<T>, Vec<T>)> {
    let m = a.rows();
    let n = a.cols();
    // Basis columns of [A | -I]; solve B x = 1 and B' p = c_B with y = p.
    let mut b = vec![T::zero(); m * m];
    let mut buf = vec![T::zero(); m];
    for (k, &j) in basis.iter().enumerate() {
        if j < n {
            a.column(j, &mut buf);
            for i in 0..m {
                b[i * m + k] = buf[i];
            }
        } else {
            b[(j - n) * m + k] = -T::one();
        }
    }
    let lu = Lu::factor(b, m)?;
    let x = lu.solve(vec![T::one(); m]);
    let c_b: Vec<T> = basis.iter().map(|&j| if j < n { T::one() } else { T::zero() }).collect();
    let p = lu.solve_transpose(c_b);
    let mut w = vec![T::zero(); n];
    for (k, &j) in basis.iter().enumerate() {
        if j < n {
            w[j] = x[k].max(T::zero());
        }
    }
    Some((w, p.into_iter().map(|v| v.max(T::zero())).collect()))
}

/// Dense LU with partial pivoting.
struct Lu<T> {
    m: usize,
    lu: Vec<T>,
    perm: Vec<usize>,
}

impl<T: Scalar> Lu<T> {
    fn factor(mut a: Vec<T>, m: usize) -> Option<Self> {
        let mut perm: Vec<usize> = (0..m).collect();
        for k in 0..m {
            let (p, pv) = (k..m)
                .map(|i| (i, a[i * m + k].abs()))
                .max_by(|x, y| x.1.partial_cmp(&y.1).unwrap())?;
            if !(pv > T::zero()) {
                return None;
            }
            if p != k {
                for c in 0..m {
                    a.swap(k * m + c, p * m + c);
                }
                perm.swap(k, p);
            }
            let d = a[k * m + k];
            for i in k + 1..m {
                let f = a[i * m + k] / d;
                if f == T::zero() {
                    continue;
                }
                a[i * m + k] = f;
                for c in k + 1..m {
                    a[i * m + c] = a[i * m + c] - f * a[k * m + c];
                }
            }
        }
        Some(Self { m, lu: a, perm })
    }

    fn solve(&self, b: Vec<T>) -> Vec<T> {
        let m = self.m;
        let mut x: Vec<T> = self.perm.iter().map(|&i| b[i]).collect();
        for i in 0..m {
            let mut s = x[i];
            for k in 0..i {
                s = s - self.lu[i * m + k] * x[k];
            }
            x[i] = s;
        }
        for i in (0..m).rev() {
            let mut s = x[i];
            for k in i + 1..m {
                s = s - self.lu[i * m + k] * x[k];
            }
            x[i] = s / self.lu[i * m + i];
        }
        x
    }

    /// Solves `A' x = b` for the factored `A` (`P A = L U`).
    fn solve_transpose(&self, b: Vec<T>) -> Vec<T> {
        let m = self.m;
        // U' z = b
        let mut z = b;
        for i in 0..m {
            let mut s = z[i];
            for k in 0..i {
                s = s - self.lu[k * m + i] * z[k];
            }
            z[i] = s / self.lu[i * m + i];
        }
        // L' v = z
        for i in (0..m).rev() {
            let mut s = z[i];
            for k in i + 1..m {
                s = s - self.lu[k * m + i] * z[k];
            }
            z[i] = s;
        }
        // x = P' v
        let mut x = vec![T::zero(); m];
        for (k, &i) in self.perm.iter().enumerate() {
            x[i] = z[k];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense(rows: &[&[f64]]) -> DenseMatrix<f64> {
        let m = rows.len();
        let n = rows[0].len();
        DenseMatrix::new(m, n, rows.iter().flat_map(|r| r.iter().copied()).collect()).unwrap()
    }

    #[test]
    fn identity_covering() {
        let a = dense(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let s = solve_covering(&a, &LpOptions::default()).unwrap();
        assert!((s.objective - 2.0).abs() < 1e-12);
        assert!(s.gap <= 1e-12);
    }

    #[test]
    fn shared_column_wins() {
        let a = dense(&[&[1.0, 0.0, 0.5], &[0.0, 1.0, 0.5]]);
        let s = solve_covering(&a, &LpOptions::default()).unwrap();
        assert!((s.objective - 2.0).abs() < 1e-12);
        let a = dense(&[&[1.0, 0.0, 1.0], &[0.0, 1.0, 1.0]]);
        let s = solve_covering(&a, &LpOptions::default()).unwrap();
        assert!((s.objective - 1.0).abs() < 1e-12);
        assert!((s.primal[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fractional_optimum() {
        // Three rows, each column covers two: optimum 1.5.
        let a = dense(&[&[1.0, 1.0, 0.0], &[0.0, 1.0, 1.0], &[1.0, 0.0, 1.0]]);
        let s = solve_covering(&a, &LpOptions::default()).unwrap();
        assert!((s.objective - 1.5).abs() < 1e-12);
        assert!((s.dual_objective - 1.5).abs() < 1e-12);
    }

    #[test]
    fn infeasible_row() {
        let a = dense(&[&[1.0, 1.0], &[0.0, 0.0]]);
        assert!(matches!(solve_covering(&a, &LpOptions::default()), Err(Error::Infeasible(_))));
        let empty = DenseMatrix::<f64>::new(2, 0, vec![]).unwrap();
        assert!(solve_covering(&empty, &LpOptions::default()).is_err());
    }

    #[test]
    fn no_rows_is_zero() {
        let a = DenseMatrix::<f64>::new(0, 3, vec![]).unwrap();
        let s = solve_covering(&a, &LpOptions::default()).unwrap();
        assert_eq!(s.objective, 0.0);
    }

    #[test]
    fn column_generation_agrees_with_dense() {
        let m = 30;
        let n = 400;
        let a = DenseMatrix::from_fn(m, n, |i, j| {
            let x = i as f64 / m as f64;
            let y = j as f64 / n as f64;
            1.0 / ((x - y).abs() + 0.05)
        });
        let dense_sol = solve_covering(&a, &LpOptions::default()).unwrap();
        let opts = LpOptions { dense_limit: 10, pricing_batch: 20, ..LpOptions::default() };
        let cg = solve_covering(&a, &opts).unwrap();
        assert_eq!(cg.method, LpMethod::ColumnGeneration);
        let rel = (cg.objective - dense_sol.objective).abs() / dense_sol.objective;
        assert!(rel < 2e-9, "relative difference {rel}");
    }

    #[test]
    fn lu_round_trip() {
        let a = vec![2.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 4.0f64];
        let lu = Lu::factor(a.clone(), 3).unwrap();
        let x = lu.solve(vec![1.0, 2.0, 3.0]);
        for i in 0..3 {
            let s: f64 = (0..3).map(|k| a[i * 3 + k] * x[k]).sum();
            assert!((s - [1.0, 2.0, 3.0][i]).abs() < 1e-12);
        }
        let x = lu.solve_transpose(vec![1.0, 2.0, 3.0]);
        for i in 0..3 {
            let s: f64 = (0..3).map(|k| a[k * 3 + i] * x[k]).sum();
            assert!((s - [1.0, 2.0, 3.0][i]).abs() < 1e-12);
        }
    }
}
