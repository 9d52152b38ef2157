//! Left-looking sparse LU with threshold partial pivoting (Gilbert–Peierls).
//!
//! Columns are processed in a fixed fill-reducing order `q`; within each
//! column a sparse triangular solve against the partial `L` gives the
//! candidate column, and the pivot is the diagonal entry whenever it is within
//! `PIVOT_THRESHOLD` of the largest candidate.

use super::{ordering_for, SolveError};
use crate::sparse::SparseOperator;

const PIVOT_THRESHOLD: f64 = 0.1;

/// `P A Q = L U` with unit lower `L`, both stored by columns.
#[derive(Clone, Debug)]
pub struct Factorization {
    n: usize,
    q: Vec<usize>,
    pinv: Vec<usize>,
    lp: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<f64>,
    up: Vec<usize>,
    ui: Vec<usize>,
    ux: Vec<f64>,
}

struct Csc<'a> {
    p: &'a [usize],
    i: &'a [usize],
    x: &'a [f64],
}

const UNSET: usize = usize::MAX;

/// Nodes reachable from column `col` of `A` through the graph of `L`,
/// written to `xi[top..n]` in topological order.
#[allow(clippy::too_many_arguments)]
fn reach(
    a: &Csc,
    col: usize,
    lp: &[usize],
    li: &[usize],
    pinv: &[usize],
    xi: &mut [usize],
    stack: &mut [usize],
    pstack: &mut [usize],
    marked: &mut [bool],
) -> usize {
    let n = marked.len();
    let mut top = n;
    for p in a.p[col]..a.p[col + 1] {
        let start = a.i[p];
        if marked[start] {
            continue;
        }
        let mut head = 0usize;
        stack[0] = start;
        loop {
            let j = stack[head];
            let jnew = pinv[j];
            if !marked[j] {
                marked[j] = true;
                pstack[head] = if jnew == UNSET { 0 } else { lp[jnew] + 1 };
            }
            let end = if jnew == UNSET { 0 } else { lp[jnew + 1] };
            let mut descended = false;
            let mut q = pstack[head];
            while q < end {
                let i = li[q];
                q += 1;
                if !marked[i] {
                    pstack[head] = q;
                    head += 1;
                    stack[head] = i;
                    descended = true;
                    break;
                }
            }
            if !descended {
                pstack[head] = end;
                top -= 1;
                xi[top] = j;
                if head == 0 {
                    break;
                }
                head -= 1;
            }
        }
    }
    for &j in &xi[top..n] {
        marked[j] = false;
    }
    top
}

/// Factorizes a square matrix using the cached minimum-degree ordering of its pattern.
pub fn factorize(a: &SparseOperator) -> Result<Factorization, SolveError> {
    if !a.is_square() {
        return Err(SolveError::NotSquare { rows: a.nrows(), cols: a.ncols() });
    }
    let q = ordering_for(a);
    factorize_with_ordering(a, &q)
}

pub fn factorize_with_ordering(a: &SparseOperator, q: &[usize]) -> Result<Factorization, SolveError> {
    if !a.is_square() {
        return Err(SolveError::NotSquare { rows: a.nrows(), cols: a.ncols() });
    }
    let n = a.nrows();
    if q.len() != n {
        return Err(SolveError::DimensionMismatch { expected: n, found: q.len() });
    }
    // CSC of A is CSR of Aᵀ.
    let at = a.transpose();
    let csc = Csc { p: at.row_ptr(), i: at.col_idx(), x: at.values() };

    let est = 4 * a.nnz() + n;
    let mut lp = Vec::with_capacity(n + 1);
    let mut li = Vec::with_capacity(est);
    let mut lx = Vec::with_capacity(est);
    let mut up = Vec::with_capacity(n + 1);
    let mut ui = Vec::with_capacity(est);
    let mut ux = Vec::with_capacity(est);
    let mut pinv = vec![UNSET; n];
    let mut x = vec![0.0; n];
    let mut xi = vec![0usize; n];
    let mut stack = vec![0usize; n];
    let mut pstack = vec![0usize; n];
    let mut marked = vec![false; n];

    for k in 0..n {
        lp.push(li.len());
        up.push(ui.len());
        // Column k of L is appended during this step; close it virtually for reach().
        lp.push(li.len());
        let col = q[k];
        let top = reach(&csc, col, &lp, &li, &pinv, &mut xi, &mut stack, &mut pstack, &mut marked);
        lp.pop();
        for &j in &xi[top..n] {
            x[j] = 0.0;
        }
        for p in csc.p[col]..csc.p[col + 1] {
            x[csc.i[p]] = csc.x[p];
        }
        for &j in &xi[top..n] {
            let jn = pinv[j];
            if jn == UNSET {
                continue;
            }
            let xj = x[j];
            if xj != 0.0 {
                for p in lp[jn] + 1..lp[jn + 1] {
                    x[li[p]] -= lx[p] * xj;
                }
            }
        }
        let mut ipiv = UNSET;
        let mut amax = -1.0;
        for &i in &xi[top..n] {
            if pinv[i] == UNSET {
                let t = x[i].abs();
                if t > amax {
                    amax = t;
                    ipiv = i;
                }
            } else {
                ui.push(pinv[i]);
                ux.push(x[i]);
            }
        }
        if ipiv == UNSET || amax <= 0.0 || !amax.is_finite() {
            return Err(SolveError::SingularPivot { index: k });
        }
        if pinv[col] == UNSET && x[col].abs() >= amax * PIVOT_THRESHOLD {
            ipiv = col;
        }
        let pivot = x[ipiv];
        ui.push(k);
        ux.push(pivot);
        pinv[ipiv] = k;
        li.push(ipiv);
        lx.push(1.0);
        for &i in &xi[top..n] {
            if pinv[i] == UNSET {
                li.push(i);
                lx.push(x[i] / pivot);
            }
            x[i] = 0.0;
        }
    }
    lp.push(li.len());
    up.push(ui.len());
    for r in li.iter_mut() {
        *r = pinv[*r];
    }
    Ok(Factorization { n, q: q.to_vec(), pinv, lp, li, lx, up, ui, ux })
}

impl Factorization {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn fill(&self) -> usize {
        self.lx.len() + self.ux.len()
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, SolveError> {
        if b.len() != self.n {
            return Err(SolveError::DimensionMismatch { expected: self.n, found: b.len() });
        }
        let mut y = vec![0.0; self.n];
        for (i, &bi) in b.iter().enumerate() {
            y[self.pinv[i]] = bi;
        }
        for j in 0..self.n {
            let yj = y[j];
            if yj != 0.0 {
                for p in self.lp[j] + 1..self.lp[j + 1] {
                    y[self.li[p]] -= self.lx[p] * yj;
                }
            }
        }
        for j in (0..self.n).rev() {
            let last = self.up[j + 1] - 1;
            y[j] /= self.ux[last];
            let yj = y[j];
            if yj != 0.0 {
                for p in self.up[j]..last {
                    y[self.ui[p]] -= self.ux[p] * yj;
                }
            }
        }
        let mut x = vec![0.0; self.n];
        for (k, &c) in self.q.iter().enumerate() {
            x[c] = y[k];
        }
        Ok(x)
    }
}

/// Direct solve followed by one step of iterative refinement against `a`.
pub fn solve_refined(f: &Factorization, a: &SparseOperator, b: &[f64]) -> Result<Vec<f64>, SolveError> {
    let mut x = f.solve(b)?;
    let ax = a.mul_vec(&x);
    let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let dx = f.solve(&r)?;
    for (xi, d) in x.iter_mut().zip(&dx) {
        *xi += d;
    }
    Ok(x)
}
