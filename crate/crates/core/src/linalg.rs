//! Small dense linear algebra for the (d-1)-dimensional gauge.
//!
//! Matrices here are tiny (at most ~20x20), so everything is written for
//! stability rather than speed: compensated summation for accumulations
//! and a cyclic Jacobi sweep for symmetric eigendecompositions.

use core::cmp::Ordering;
use core::ops::{Index, IndexMut};

use crate::scalar::Scalar;

/// Neumaier-compensated running sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct Accum<T> {
    sum: T,
    comp: T,
}

impl<T: Scalar> Accum<T> {
    pub fn new() -> Self {
        Accum {
            sum: T::zero(),
            comp: T::zero(),
        }
    }

    pub fn add(&mut self, x: T) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> T {
        self.sum + self.comp
    }
}

/// Compensated sum of an iterator.
pub fn ksum<T: Scalar>(xs: impl IntoIterator<Item = T>) -> T {
    let mut acc = Accum::new();
    for x in xs {
        acc.add(x);
    }
    acc.value()
}

/// Plain dot product (operands are short).
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = Accum::new();
    for (x, y) in a.iter().zip(b) {
        acc.add(*x * *y);
    }
    acc.value()
}

pub fn norm2<T: Scalar>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

/// Lexicographic comparison of finite float slices.
pub fn lex_cmp<T: Scalar>(a: &[T], b: &[T]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y).expect("non-finite coordinate in comparison") {
            Ordering::Equal => continue,
            ord => return ord,
        }
    }
    a.len().cmp(&b.len())
}

/// Partitions keyed items into tolerance-connected clusters, splitting
/// coordinate by coordinate wherever consecutive sorted values gap by
/// more than `tol`. Robust against the interleaving that defeats plain
/// sort-and-merge-adjacent deduplication.
pub fn tolerance_clusters<T: Scalar>(keys: &[Vec<T>], tol: T) -> Vec<Vec<usize>> {
    let n = keys.len();
    let dim = keys.first().map_or(0, Vec::len);
    let mut out = Vec::new();
    let mut stack: Vec<(Vec<usize>, usize)> = vec![((0..n).collect(), 0)];
    while let Some((mut idx, depth)) = stack.pop() {
        if depth == dim || idx.len() <= 1 {
            out.push(idx);
            continue;
        }
        idx.sort_by(|&a, &b| keys[a][depth].partial_cmp(&keys[b][depth]).unwrap());
        let mut run: Vec<usize> = vec![idx[0]];
        for w in idx.windows(2) {
            if keys[w[1]][depth] - keys[w[0]][depth] > tol {
                stack.push((core::mem::take(&mut run), depth + 1));
            }
            run.push(w[1]);
        }
        stack.push((run, depth + 1));
    }
    out
}

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Mat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Mat {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Mat<T> {
        let mut out = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    pub fn matvec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    /// `self^T v` without forming the transpose.
    pub fn tvec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.rows);
        let mut out = vec![Accum::new(); self.cols];
        for i in 0..self.rows {
            for (j, acc) in out.iter_mut().enumerate() {
                acc.add(self[(i, j)] * v[i]);
            }
        }
        out.into_iter().map(|a| a.value()).collect()
    }

    pub fn matmul(&self, other: &Mat<T>) -> Mat<T> {
        assert_eq!(self.cols, other.rows);
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = Accum::new();
                for k in 0..self.cols {
                    acc.add(self[(i, k)] * other[(k, j)]);
                }
                out[(i, j)] = acc.value();
            }
        }
        out
    }

    pub fn trace(&self) -> T {
        ksum((0..self.rows.min(self.cols)).map(|i| self[(i, i)]))
    }

    pub fn max_abs(&self) -> T {
        self.data
            .iter()
            .fold(T::zero(), |m, x| if x.abs() > m { x.abs() } else { m })
    }

    /// `x^T self x` for square `self`.
    pub fn quad_form(&self, x: &[T]) -> T {
        dot(&self.matvec(x), x)
    }

    pub fn scale(&self, s: T) -> Mat<T> {
        let mut out = self.clone();
        for v in &mut out.data {
            *v = *v * s;
        }
        out
    }

    pub fn add(&self, other: &Mat<T>) -> Mat<T> {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (v, w) in out.data.iter_mut().zip(&other.data) {
            *v = *v + *w;
        }
        out
    }

    pub fn sub(&self, other: &Mat<T>) -> Mat<T> {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (v, w) in out.data.iter_mut().zip(&other.data) {
            *v = *v - *w;
        }
        out
    }
}

impl<T> Index<(usize, usize)> for Mat<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Mat<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// Returns eigenvalues in ascending order and the matching eigenvectors as
/// the columns of the returned matrix.
pub fn sym_eigen<T: Scalar>(a: &Mat<T>) -> (Vec<T>, Mat<T>) {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "sym_eigen needs a square matrix");
    let mut m = a.clone();
    let mut v: Mat<T> = Mat::identity(n);
    if n <= 1 {
        return ((0..n).map(|i| m[(i, i)]).collect(), v);
    }
    let scale = m.max_abs().max(T::one());
    let stop = scale * T::epsilon() * T::of(4.0);
    for _sweep in 0..64 {
        let mut off = T::zero();
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(m[(p, q)].abs());
            }
        }
        if off <= stop {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq.abs() <= stop * T::of(1e-3) {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (T::of(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].partial_cmp(&m[(j, j)]).unwrap());
    let evals: Vec<T> = order.iter().map(|&i| m[(i, i)]).collect();
    let mut evecs = Mat::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        for k in 0..n {
            evecs[(k, col)] = v[(k, src)];
        }
    }
    (evals, evecs)
}

/// Rebuilds `sum_k f(lambda_k) u_k u_k^T` from an eigendecomposition.
pub fn sym_apply<T: Scalar>(evals: &[T], evecs: &Mat<T>, f: impl Fn(T) -> T) -> Mat<T> {
    let n = evals.len();
    let mut out = Mat::zeros(n, n);
    for k in 0..n {
        let fk = f(evals[k]);
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] = out[(i, j)] + fk * evecs[(i, k)] * evecs[(j, k)];
            }
        }
    }
    out
}

/// Numerical rank via Gaussian elimination with partial pivoting.
pub fn rank<T: Scalar>(m: &Mat<T>, rel_tol: T) -> usize {
    let mut a = m.clone();
    let (r, c) = (a.nrows(), a.ncols());
    let tol = a.max_abs().max(T::one()) * rel_tol;
    let mut rank = 0;
    let mut row = 0;
    for col in 0..c {
        let mut piv = row;
        for i in row..r {
            if a[(i, col)].abs() > a[(piv, col)].abs() {
                piv = i;
            }
        }
        if row >= r || a[(piv, col)].abs() <= tol {
            continue;
        }
        if piv != row {
            for j in 0..c {
                let tmp = a[(row, j)];
                a[(row, j)] = a[(piv, j)];
                a[(piv, j)] = tmp;
            }
        }
        for i in (row + 1)..r {
            let f = a[(i, col)] / a[(row, col)];
            for j in col..c {
                a[(i, j)] = a[(i, j)] - f * a[(row, j)];
            }
        }
        rank += 1;
        row += 1;
        if row == r {
            break;
        }
    }
    rank
}

/// A nontrivial solution of `M c = 0`, or `None` when `M` has full column
/// rank (up to `rel_tol`). The returned vector is scaled to unit max-norm.
pub fn nullspace_vector<T: Scalar>(m: &Mat<T>, rel_tol: T) -> Option<Vec<T>> {
    let mut a = m.clone();
    let (r, c) = (a.nrows(), a.ncols());
    let tol = a.max_abs().max(T::one()) * rel_tol;
    // Forward elimination, remembering the pivot column of each pivot row.
    let mut pivots: Vec<(usize, usize)> = Vec::new();
    let mut row = 0;
    for col in 0..c {
        if row >= r {
            break;
        }
        let mut piv = row;
        for i in row..r {
            if a[(i, col)].abs() > a[(piv, col)].abs() {
                piv = i;
            }
        }
        if a[(piv, col)].abs() <= tol {
            continue;
        }
        if piv != row {
            for j in 0..c {
                let tmp = a[(row, j)];
                a[(row, j)] = a[(piv, j)];
                a[(piv, j)] = tmp;
            }
        }
        for i in 0..r {
            if i == row {
                continue;
            }
            let f = a[(i, col)] / a[(row, col)];
            if f != T::zero() {
                for j in col..c {
                    a[(i, j)] = a[(i, j)] - f * a[(row, j)];
                }
            }
        }
        pivots.push((row, col));
        row += 1;
    }
    let pivot_cols: Vec<usize> = pivots.iter().map(|&(_, c)| c).collect();
    let free = (0..c).find(|col| !pivot_cols.contains(col))?;
    let mut sol = vec![T::zero(); c];
    sol[free] = T::one();
    for &(pr, pc) in &pivots {
        sol[pc] = -a[(pr, free)] / a[(pr, pc)];
    }
    let maxabs = sol
        .iter()
        .fold(T::zero(), |m, x| if x.abs() > m { x.abs() } else { m });
    if maxabs > T::zero() {
        for v in &mut sol {
            *v = *v / maxabs;
        }
    }
    Some(sol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobi_recovers_known_spectrum() {
        let m = Mat::from_rows(vec![vec![2.0_f64, 1.0], vec![1.0, 2.0]]);
        let (evals, evecs) = sym_eigen(&m);
        assert!((evals[0] - 1.0).abs() < 1e-13);
        assert!((evals[1] - 3.0).abs() < 1e-13);
        // Reconstruct and compare.
        let rec = sym_apply(&evals, &evecs, |x| x);
        for i in 0..2 {
            for j in 0..2 {
                assert!((rec[(i, j)] - m[(i, j)]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rank_and_nullspace() {
        // Columns (1,1), (2,2), (1,0): rank 2, dependent first two.
        let m = Mat::from_rows(vec![vec![1.0_f64, 2.0, 1.0], vec![1.0, 2.0, 0.0]]);
        assert_eq!(rank(&m, 1e-12), 2);
        let c = nullspace_vector(&m, 1e-12).expect("dependent columns");
        let r0 = c[0] + 2.0 * c[1] + c[2];
        let r1 = c[0] + 2.0 * c[1];
        assert!(r0.abs() < 1e-12 && r1.abs() < 1e-12);
        assert!(c.iter().any(|x| x.abs() > 0.5));
    }

    #[test]
    fn compensated_sum_handles_uniform_weights() {
        let n = 125_970usize;
        let w = 1.0_f64 / n as f64;
        let total = ksum((0..n).map(|_| w));
        assert!((total - 1.0).abs() < 1e-14);
    }
}
