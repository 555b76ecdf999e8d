//! Dense linear algebra for the small operator matrices of the analysis.
//!
//! Everything here targets matrices of dimension `p+1 <= 9`, stored dense
//! row-major. The eigensolver is a complex Schur decomposition: Householder
//! reduction to Hessenberg form followed by implicit single-shift QR with
//! Wilkinson shifts, then eigenvector recovery by back substitution.

use thiserror::Error;

use crate::scalar::{Scalar, C};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LinalgError {
    #[error("matrix is singular (zero pivot at column {0})")]
    Singular(usize),
    #[error("dimension mismatch")]
    DimensionMismatch,
}

#[derive(Debug, Error, PartialEq)]
pub enum EigenError {
    #[error("QR iteration did not converge within the budget; residual {residual:e}")]
    NonConvergence { residual: f64 },
}

/// Real square matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat<S> {
    n: usize,
    data: Vec<S>,
}

impl<S: Scalar> Mat<S> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![S::zero(); n * n],
        }
    }

    pub fn from_rows(rows: &[&[S]]) -> Self {
        let n = rows.len();
        let mut m = Self::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), n);
            m.data[i * n..(i + 1) * n].copy_from_slice(row);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> S {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: S) {
        self.data[i * self.n + j] = v;
    }

    pub fn add_assign_scaled(&mut self, other: &Self, a: S) {
        debug_assert_eq!(self.n, other.n);
        for (x, &y) in self.data.iter_mut().zip(&other.data) {
            *x += a * y;
        }
    }

    pub fn scale_row(&mut self, i: usize, a: S) {
        for j in 0..self.n {
            self.data[i * self.n + j] = self.data[i * self.n + j] * a;
        }
    }

    pub fn mul_vec(&self, x: &[S], out: &mut [S]) {
        for i in 0..self.n {
            let mut acc = S::zero();
            for j in 0..self.n {
                acc += self.data[i * self.n + j] * x[j];
            }
            out[i] = acc;
        }
    }

    /// Accumulate `out += a * (M x)` without allocating.
    pub fn mul_vec_acc(&self, x: &[S], a: S, out: &mut [S]) {
        for i in 0..self.n {
            let mut acc = S::zero();
            for j in 0..self.n {
                acc += self.data[i * self.n + j] * x[j];
            }
            out[i] += a * acc;
        }
    }

    pub fn max_abs(&self) -> S {
        self.data.iter().fold(S::zero(), |m, &v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> S {
        self.data
            .iter()
            .zip(&other.data)
            .fold(S::zero(), |m, (&a, &b)| m.max((a - b).abs()))
    }

    pub fn is_zero(&self, tol: S) -> bool {
        self.max_abs() <= tol
    }
}

/// Complex square matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMat<S> {
    n: usize,
    data: Vec<C<S>>,
}

impl<S: Scalar> CMat<S> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![C::new(S::zero(), S::zero()); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, C::new(S::one(), S::zero()));
        }
        m
    }

    pub fn from_fn<F: FnMut(usize, usize) -> C<S>>(n: usize, mut f: F) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> C<S> {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: C<S>) {
        self.data[i * self.n + j] = v;
    }

    pub fn column(&self, j: usize) -> Vec<C<S>> {
        (0..self.n).map(|i| self.get(i, j)).collect()
    }

    pub fn mul_vec(&self, x: &[C<S>]) -> Vec<C<S>> {
        let mut out = vec![C::new(S::zero(), S::zero()); self.n];
        for i in 0..self.n {
            let mut acc = C::new(S::zero(), S::zero());
            for j in 0..self.n {
                acc += self.data[i * self.n + j] * x[j];
            }
            out[i] = acc;
        }
        out
    }

    pub fn mul_mat(&self, other: &Self) -> Self {
        debug_assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a.norm_sqr() == S::zero() {
                    continue;
                }
                for j in 0..n {
                    let v = out.get(i, j) + a * other.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    pub fn norm_1(&self) -> S {
        let mut worst = S::zero();
        for j in 0..self.n {
            let mut col: S = S::zero();
            for i in 0..self.n {
                col += self.get(i, j).norm();
            }
            worst = worst.max(col);
        }
        worst
    }

    pub fn max_abs_diff(&self, other: &Self) -> S {
        self.data
            .iter()
            .zip(&other.data)
            .fold(S::zero(), |m, (&a, &b)| m.max((a - b).norm()))
    }
}

/// Solve `A x = b` by LU with partial pivoting.
pub fn lu_solve<S: Scalar>(a: &CMat<S>, b: &[C<S>]) -> Result<Vec<C<S>>, LinalgError> {
    if b.len() != a.dim() {
        return Err(LinalgError::DimensionMismatch);
    }
    let n = a.dim();
    let mut lu = a.clone();
    let mut x: Vec<C<S>> = b.to_vec();
    for col in 0..n {
        let mut pivot = col;
        let mut best = lu.get(col, col).norm();
        for row in col + 1..n {
            let mag = lu.get(row, col).norm();
            if mag > best {
                best = mag;
                pivot = row;
            }
        }
        if best == S::zero() {
            return Err(LinalgError::Singular(col));
        }
        if pivot != col {
            for j in 0..n {
                let tmp = lu.get(col, j);
                lu.set(col, j, lu.get(pivot, j));
                lu.set(pivot, j, tmp);
            }
            x.swap(col, pivot);
        }
        let inv = lu.get(col, col).inv();
        for row in col + 1..n {
            let factor = lu.get(row, col) * inv;
            lu.set(row, col, factor);
            for j in col + 1..n {
                let v = lu.get(row, j) - factor * lu.get(col, j);
                lu.set(row, j, v);
            }
            x[row] = x[row] - factor * x[col];
        }
    }
    for row in (0..n).rev() {
        let mut acc = x[row];
        for j in row + 1..n {
            acc -= lu.get(row, j) * x[j];
        }
        x[row] = acc / lu.get(row, row);
    }
    Ok(x)
}

/// Matrix inverse via column-wise LU solves.
pub fn inverse<S: Scalar>(a: &CMat<S>) -> Result<CMat<S>, LinalgError> {
    let n = a.dim();
    let mut out = CMat::zeros(n);
    for j in 0..n {
        let mut e = vec![C::new(S::zero(), S::zero()); n];
        e[j] = C::new(S::one(), S::zero());
        let col = lu_solve(a, &e)?;
        for i in 0..n {
            out.set(i, j, col[i]);
        }
    }
    Ok(out)
}

/// 1-norm condition number, computed from the explicit inverse (dimension <= 9
/// makes this the cheapest reliable estimate).
pub fn condition_1<S: Scalar>(a: &CMat<S>) -> Result<S, LinalgError> {
    Ok(a.norm_1() * inverse(a)?.norm_1())
}

/// Full eigen decomposition of a general complex matrix.
#[derive(Debug, Clone)]
pub struct EigenDecomposition<S> {
    /// Eigenvalues in Schur order.
    pub values: Vec<C<S>>,
    /// Unit-norm eigenvectors, column `j` pairs with `values[j]`.
    pub vectors: CMat<S>,
}

struct SchurState<S> {
    h: CMat<S>,
    q: Option<CMat<S>>,
}

fn givens<S: Scalar>(f: C<S>, g: C<S>) -> (S, C<S>) {
    let zero = C::new(S::zero(), S::zero());
    if g.norm_sqr() == S::zero() {
        return (S::one(), zero);
    }
    if f.norm_sqr() == S::zero() {
        return (S::zero(), g.conj() / C::new(g.norm(), S::zero()));
    }
    let fa = f.norm();
    let rho = (f.norm_sqr() + g.norm_sqr()).sqrt();
    let c = fa / rho;
    let s = (f / C::new(fa, S::zero())) * g.conj() / C::new(rho, S::zero());
    (c, s)
}

impl<S: Scalar> SchurState<S> {
    fn apply_left(&mut self, i: usize, j: usize, c: S, s: C<S>) {
        let n = self.h.dim();
        for m in 0..n {
            let a = self.h.get(i, m);
            let b = self.h.get(j, m);
            self.h.set(i, m, a * c + b * s);
            self.h.set(j, m, b * c - a * s.conj());
        }
    }

    fn apply_right_conj(&mut self, i: usize, j: usize, c: S, s: C<S>) {
        let n = self.h.dim();
        for r in 0..n {
            let a = self.h.get(r, i);
            let b = self.h.get(r, j);
            self.h.set(r, i, a * c + b * s.conj());
            self.h.set(r, j, b * c - a * s);
        }
        if let Some(q) = self.q.as_mut() {
            for r in 0..n {
                let a = q.get(r, i);
                let b = q.get(r, j);
                q.set(r, i, a * c + b * s.conj());
                q.set(r, j, b * c - a * s);
            }
        }
    }

    /// Householder reduction to upper Hessenberg form.
    fn hessenberg(&mut self) {
        let n = self.h.dim();
        if n < 3 {
            return;
        }
        for k in 0..n - 2 {
            let mut norm_sq = S::zero();
            for i in k + 1..n {
                norm_sq += self.h.get(i, k).norm_sqr();
            }
            let norm = norm_sq.sqrt();
            let x0 = self.h.get(k + 1, k);
            if norm <= S::epsilon() * self.h.norm_1() {
                continue;
            }
            let phase = if x0.norm_sqr() == S::zero() {
                C::new(S::one(), S::zero())
            } else {
                x0 / C::new(x0.norm(), S::zero())
            };
            let alpha = -phase * C::new(norm, S::zero());
            let mut v: Vec<C<S>> = (k + 1..n).map(|i| self.h.get(i, k)).collect();
            v[0] -= alpha;
            let vnorm_sq: S = v.iter().map(|z| z.norm_sqr()).sum();
            if vnorm_sq == S::zero() {
                continue;
            }
            let tau = S::two() / vnorm_sq;
            // H <- P H with P = I - tau v v^H acting on rows k+1..n.
            for col in 0..n {
                let mut dot = C::new(S::zero(), S::zero());
                for (idx, vi) in v.iter().enumerate() {
                    dot += vi.conj() * self.h.get(k + 1 + idx, col);
                }
                let dot = dot * C::new(tau, S::zero());
                for (idx, vi) in v.iter().enumerate() {
                    let val = self.h.get(k + 1 + idx, col) - *vi * dot;
                    self.h.set(k + 1 + idx, col, val);
                }
            }
            // H <- H P on columns k+1..n.
            for row in 0..n {
                let mut dot = C::new(S::zero(), S::zero());
                for (idx, vi) in v.iter().enumerate() {
                    dot += self.h.get(row, k + 1 + idx) * *vi;
                }
                let dot = dot * C::new(tau, S::zero());
                for (idx, vi) in v.iter().enumerate() {
                    let val = self.h.get(row, k + 1 + idx) - dot * vi.conj();
                    self.h.set(row, k + 1 + idx, val);
                }
            }
            if let Some(q) = self.q.as_mut() {
                for row in 0..n {
                    let mut dot = C::new(S::zero(), S::zero());
                    for (idx, vi) in v.iter().enumerate() {
                        dot += q.get(row, k + 1 + idx) * *vi;
                    }
                    let dot = dot * C::new(tau, S::zero());
                    for (idx, vi) in v.iter().enumerate() {
                        let val = q.get(row, k + 1 + idx) - dot * vi.conj();
                        q.set(row, k + 1 + idx, val);
                    }
                }
            }
            // Zero the annihilated entries explicitly.
            self.h.set(k + 1, k, alpha);
            for i in k + 2..n {
                self.h.set(i, k, C::new(S::zero(), S::zero()));
            }
        }
    }

    fn subdiag_negligible(&self, i: usize, scale: S) -> bool {
        let sub = self.h.get(i, i - 1).norm();
        let local = self.h.get(i - 1, i - 1).norm() + self.h.get(i, i).norm();
        let threshold = S::epsilon() * if local > S::zero() { local } else { scale };
        sub <= threshold
    }

    fn wilkinson_shift(&self, hi: usize) -> C<S> {
        let a = self.h.get(hi - 1, hi - 1);
        let b = self.h.get(hi - 1, hi);
        let c = self.h.get(hi, hi - 1);
        let d = self.h.get(hi, hi);
        let tr = a + d;
        let det = a * d - b * c;
        let half = C::new(S::half(), S::zero());
        let disc = (tr * tr * C::new(S::of(0.25), S::zero()) - det).sqrt();
        let l1 = tr * half + disc;
        let l2 = tr * half - disc;
        if (l1 - d).norm() <= (l2 - d).norm() {
            l1
        } else {
            l2
        }
    }

    /// Shifted QR to (upper triangular) Schur form. Budget `100 * n` sweeps.
    fn triangularize(&mut self) -> Result<(), EigenError> {
        let n = self.h.dim();
        let scale = self.h.norm_1().max(S::epsilon());
        let budget = 100 * n;
        let mut iters = 0usize;
        let mut stalled = 0usize;
        let mut hi = n.saturating_sub(1);
        while hi > 0 {
            let mut lo = hi;
            while lo > 0 && !self.subdiag_negligible(lo, scale) {
                lo -= 1;
            }
            if lo == hi {
                self.h.set(hi, hi - 1, C::new(S::zero(), S::zero()));
                hi -= 1;
                stalled = 0;
                continue;
            }
            if iters >= budget {
                let residual = self.h.get(hi, hi - 1).norm();
                return Err(EigenError::NonConvergence {
                    residual: residual.to_f64().unwrap_or(f64::NAN),
                });
            }
            let shift = if stalled > 0 && stalled % 12 == 0 {
                // Exceptional shift to break rare limit cycles.
                let kick = self.h.get(hi, hi - 1).norm() + self.h.get(hi - 1, hi - 2.min(hi - 1)).norm();
                self.h.get(hi, hi) + C::new(kick * S::of(0.75), S::zero())
            } else {
                self.wilkinson_shift(hi)
            };
            let mut x = self.h.get(lo, lo) - shift;
            let mut y = self.h.get(lo + 1, lo);
            for k in lo..hi {
                let (c, s) = givens(x, y);
                self.apply_left(k, k + 1, c, s);
                self.apply_right_conj(k, k + 1, c, s);
                if k + 2 <= hi {
                    x = self.h.get(k + 1, k);
                    y = self.h.get(k + 2, k);
                }
            }
            iters += 1;
            stalled += 1;
        }
        Ok(())
    }
}

/// Eigenvalues only (no vectors); cheaper path for stability scans.
pub fn eigenvalues<S: Scalar>(a: &CMat<S>) -> Result<Vec<C<S>>, EigenError> {
    let mut state = SchurState {
        h: a.clone(),
        q: None,
    };
    state.hessenberg();
    state.triangularize()?;
    Ok((0..a.dim()).map(|i| state.h.get(i, i)).collect())
}

/// Full decomposition with unit-norm eigenvectors.
///
/// Residuals `||A mu - lambda mu||` are checked against `1e-12` scaled by the
/// matrix 1-norm; failing that reports non-convergence with the worst residual.
pub fn eigen_decompose<S: Scalar>(a: &CMat<S>) -> Result<EigenDecomposition<S>, EigenError> {
    let n = a.dim();
    let mut state = SchurState {
        h: a.clone(),
        q: Some(CMat::identity(n)),
    };
    state.hessenberg();
    state.triangularize()?;
    let t = &state.h;
    let q = state.q.as_ref().expect("accumulated Schur vectors");
    let scale = a.norm_1().max(S::one());
    let smallnum = S::epsilon() * scale;

    let values: Vec<C<S>> = (0..n).map(|i| t.get(i, i)).collect();
    let mut vectors = CMat::zeros(n);
    let mut worst_residual = S::zero();
    for k in 0..n {
        let lambda = values[k];
        let mut y = vec![C::new(S::zero(), S::zero()); n];
        y[k] = C::new(S::one(), S::zero());
        for i in (0..k).rev() {
            let mut s = C::new(S::zero(), S::zero());
            for j in i + 1..=k {
                s += t.get(i, j) * y[j];
            }
            let mut d = t.get(i, i) - lambda;
            if d.norm() < smallnum {
                d = C::new(smallnum, S::zero());
            }
            y[i] = -s / d;
        }
        let mut v = vec![C::new(S::zero(), S::zero()); n];
        for i in 0..n {
            let mut acc = C::new(S::zero(), S::zero());
            for j in 0..=k {
                acc += q.get(i, j) * y[j];
            }
            v[i] = acc;
        }
        let norm: S = v.iter().map(|z| z.norm_sqr()).sum::<S>().sqrt();
        for z in v.iter_mut() {
            *z = *z / C::new(norm, S::zero());
        }
        let av = a.mul_vec(&v);
        let res: S = av
            .iter()
            .zip(&v)
            .map(|(&avi, &vi)| (avi - vi * lambda).norm_sqr())
            .sum::<S>()
            .sqrt();
        worst_residual = worst_residual.max(res);
        for i in 0..n {
            vectors.set(i, k, v[i]);
        }
    }
    if worst_residual > S::of(1e-12) * scale {
        return Err(EigenError::NonConvergence {
            residual: worst_residual.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(EigenDecomposition { values, vectors })
}
