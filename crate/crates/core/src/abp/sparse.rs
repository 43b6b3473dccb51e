//! Compressed sparse rows, ILU(0) and preconditioned BiCGSTAB.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub struct CsrMatrix<T> {
    n: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> CsrMatrix<T> {
    /// Builds an `n × n` matrix from triplets; duplicates are summed and
    /// columns sorted within each row.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, T)>) -> Self {
        triplets.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut indptr = vec![0usize; n + 1];
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values: Vec<T> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            debug_assert!(r < n && c < n);
            if last == Some((r, c)) {
                let k = values.len() - 1;
                values[k] = values[k] + v;
                continue;
            }
            indices.push(c);
            values.push(v);
            indptr[r + 1] += 1;
            last = Some((r, c));
        }
        for r in 0..n {
            indptr[r + 1] += indptr[r];
        }
        Self { n, indptr, indices, values }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> (&[usize], &[T]) {
        let span = self.indptr[r]..self.indptr[r + 1];
        (&self.indices[span.clone()], &self.values[span])
    }

    pub fn mul_vec(&self, x: &[T], out: &mut [T]) {
        for (r, o) in out.iter_mut().enumerate() {
            let (cols, vals) = self.row(r);
            *o = cols.iter().zip(vals).fold(T::zero(), |acc, (&c, &v)| acc + v * x[c]);
        }
    }

    /// Divides each row and the matching entry of `rhs` by the diagonal, so
    /// that residual norms weigh every equation alike.
    pub fn equilibrate(&mut self, rhs: &mut [T]) -> Result<()> {
        for r in 0..self.n {
            let span = self.indptr[r]..self.indptr[r + 1];
            let d = span
                .clone()
                .find(|&k| self.indices[k] == r)
                .map(|k| self.values[k])
                .unwrap_or(T::zero());
            if d == T::zero() || !d.is_finite() {
                return Err(Error::Solver(format!("row {r} has a zero diagonal")));
            }
            for k in span {
                self.values[k] = self.values[k] / d;
            }
            rhs[r] = rhs[r] / d;
        }
        Ok(())
    }

    /// Replaces row `r` by the identity row.
    pub fn pin_row(&mut self, r: usize) {
        for k in self.indptr[r]..self.indptr[r + 1] {
            self.values[k] = if self.indices[k] == r { T::one() } else { T::zero() };
        }
    }
}

/// Incomplete LU factorization with the sparsity pattern of the matrix.
#[derive(Debug, Clone)]
pub struct Ilu0<T> {
    lu: CsrMatrix<T>,
    diag: Vec<usize>,
}

impl<T: Scalar> Ilu0<T> {
    pub fn new(a: &CsrMatrix<T>) -> Result<Self> {
        let mut lu = a.clone();
        let n = lu.n;
        let mut diag = vec![usize::MAX; n];
        for (r, d) in diag.iter_mut().enumerate() {
            for k in lu.indptr[r]..lu.indptr[r + 1] {
                if lu.indices[k] == r {
                    *d = k;
                }
            }
            if *d == usize::MAX {
                return Err(Error::Solver(format!("row {r} has no diagonal entry")));
            }
        }
        // Column → position lookup for the current row.
        let mut pos = vec![usize::MAX; n];
        for i in 0..n {
            let (start, end) = (lu.indptr[i], lu.indptr[i + 1]);
            for k in start..end {
                pos[lu.indices[k]] = k;
            }
            for k in start..end {
                let col = lu.indices[k];
                if col >= i {
                    break;
                }
                let pivot = lu.values[diag[col]];
                if pivot == T::zero() {
                    return Err(Error::Solver(format!("zero pivot at row {col}")));
                }
                let factor = lu.values[k] / pivot;
                lu.values[k] = factor;
                for kk in diag[col] + 1..lu.indptr[col + 1] {
                    let p = pos[lu.indices[kk]];
                    if p != usize::MAX {
                        lu.values[p] = lu.values[p] - factor * lu.values[kk];
                    }
                }
            }
            for k in start..end {
                pos[lu.indices[k]] = usize::MAX;
            }
            if lu.values[diag[i]] == T::zero() {
                return Err(Error::Solver(format!("zero pivot at row {i}")));
            }
        }
        Ok(Self { lu, diag })
    }

    /// Solves `LU x = b` in place.
    pub fn apply(&self, x: &mut [T]) {
        let lu = &self.lu;
        for i in 0..lu.n {
            let mut v = x[i];
            for k in lu.indptr[i]..self.diag[i] {
                v = v - lu.values[k] * x[lu.indices[k]];
            }
            x[i] = v;
        }
        for i in (0..lu.n).rev() {
            let mut v = x[i];
            for k in self.diag[i] + 1..lu.indptr[i + 1] {
                v = v - lu.values[k] * x[lu.indices[k]];
            }
            x[i] = v / lu.values[self.diag[i]];
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SolveStats<T> {
    pub iterations: usize,
    /// `|b - Ax| / |b|` at exit.
    pub relative_residual: T,
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

/// Right-preconditioned BiCGSTAB from `x` (initial guess, overwritten).
pub fn bicgstab<T: Scalar>(
    a: &CsrMatrix<T>,
    pre: &Ilu0<T>,
    b: &[T],
    x: &mut [T],
    tol: T,
    max_iter: usize,
) -> Result<SolveStats<T>> {
    let n = a.dim();
    let bnorm = dot(b, b).sqrt();
    if bnorm == T::zero() {
        x.iter_mut().for_each(|v| *v = T::zero());
        return Ok(SolveStats { iterations: 0, relative_residual: T::zero() });
    }
    let mut r = vec![T::zero(); n];
    a.mul_vec(x, &mut r);
    for (ri, &bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let r0 = r.clone();
    let mut p = r.clone();
    let mut v = vec![T::zero(); n];
    let mut phat = vec![T::zero(); n];
    let mut shat = vec![T::zero(); n];
    let mut s = vec![T::zero(); n];
    let mut t = vec![T::zero(); n];
    let mut rho = dot(&r0, &r);
    let mut res = dot(&r, &r).sqrt() / bnorm;
    for it in 1..=max_iter {
        if res <= tol {
            return Ok(SolveStats { iterations: it - 1, relative_residual: res });
        }
        phat.copy_from_slice(&p);
        pre.apply(&mut phat);
        a.mul_vec(&phat, &mut v);
        let r0v = dot(&r0, &v);
        if r0v == T::zero() || !r0v.is_finite() {
            return Err(Error::Solver(format!("breakdown (r0·v = {r0v}) at iteration {it}")));
        }
        let alpha = rho / r0v;
        for i in 0..n {
            s[i] = r[i] - alpha * v[i];
        }
        if dot(&s, &s).sqrt() / bnorm <= tol {
            for i in 0..n {
                x[i] = x[i] + alpha * phat[i];
            }
            res = dot(&s, &s).sqrt() / bnorm;
            return Ok(SolveStats { iterations: it, relative_residual: res });
        }
        shat.copy_from_slice(&s);
        pre.apply(&mut shat);
        a.mul_vec(&shat, &mut t);
        let tt = dot(&t, &t);
        if tt == T::zero() {
            return Err(Error::Solver(format!("breakdown (t = 0) at iteration {it}")));
        }
        let omega = dot(&t, &s) / tt;
        for i in 0..n {
            x[i] = x[i] + alpha * phat[i] + omega * shat[i];
            r[i] = s[i] - omega * t[i];
        }
        res = dot(&r, &r).sqrt() / bnorm;
        let rho_next = dot(&r0, &r);
        if rho_next == T::zero() || omega == T::zero() {
            if res <= tol {
                return Ok(SolveStats { iterations: it, relative_residual: res });
            }
            return Err(Error::Solver(format!("breakdown (ρ or ω = 0) at iteration {it}")));
        }
        let beta = (rho_next / rho) * (alpha / omega);
        rho = rho_next;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
    }
    if res <= tol {
        Ok(SolveStats { iterations: max_iter, relative_residual: res })
    } else {
        Err(Error::Solver(format!(
            "no convergence in {max_iter} iterations (relative residual {res:e})"
        )))
    }
}
