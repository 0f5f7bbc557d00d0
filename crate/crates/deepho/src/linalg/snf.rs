use super::SparseIntMatrix;
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use std::collections::{BTreeMap, BTreeSet};

/// Elementary unimodular operation on rows or columns.
///
/// For rows, `Add(i, j, c)` means `row_i += c * row_j`.
/// For columns, `Add(i, j, c)` means `col_i += c * col_j`.
#[derive(Clone, Debug)]
pub enum ElemOp {
    Swap(u32, u32),
    Add(u32, u32, BigInt),
    Neg(u32),
}

/// Smith normal form decomposition `U * A * V = D` where `U`, `V` are
/// unimodular and `D` is diagonal with nonnegative entries `d_1 | d_2 | ...`.
///
/// The transforms are stored as logs of elementary operations, so they can be
/// applied to vectors in `O(ops)` without ever materializing dense matrices.
#[derive(Clone, Debug)]
pub struct Snf {
    pub rows: usize,
    pub cols: usize,
    /// The nonzero invariant factors, in divisibility order. `rank == diag.len()`.
    pub diag: Vec<BigInt>,
    row_ops: Vec<ElemOp>,
    col_ops: Vec<ElemOp>,
}

fn apply_row_op(op: &ElemOp, x: &mut [BigInt]) {
    match op {
        ElemOp::Swap(i, j) => x.swap(*i as usize, *j as usize),
        ElemOp::Add(i, j, c) => {
            let t = &x[*j as usize] * c;
            x[*i as usize] += t;
        }
        ElemOp::Neg(i) => {
            let v = std::mem::take(&mut x[*i as usize]);
            x[*i as usize] = -v;
        }
    }
}

/// Apply the matrix of a *column* op to a vector. The elementary matrix for
/// `Add(i, j, c)` (col_i += c * col_j) is `I + c * E_{j,i}`, which acts on a
/// vector by `x_j += c * x_i`.
fn apply_col_op(op: &ElemOp, x: &mut [BigInt]) {
    match op {
        ElemOp::Swap(i, j) => x.swap(*i as usize, *j as usize),
        ElemOp::Add(i, j, c) => {
            let t = &x[*i as usize] * c;
            x[*j as usize] += t;
        }
        ElemOp::Neg(i) => {
            let v = std::mem::take(&mut x[*i as usize]);
            x[*i as usize] = -v;
        }
    }
}

fn invert_op(op: &ElemOp) -> ElemOp {
    match op {
        ElemOp::Swap(i, j) => ElemOp::Swap(*i, *j),
        ElemOp::Add(i, j, c) => ElemOp::Add(*i, *j, -c),
        ElemOp::Neg(i) => ElemOp::Neg(*i),
    }
}

impl Snf {
    pub fn rank(&self) -> usize {
        self.diag.len()
    }

    /// `x := U x` (length `rows`).
    pub fn apply_u(&self, x: &mut [BigInt]) {
        assert_eq!(x.len(), self.rows);
        for op in &self.row_ops {
            apply_row_op(op, x);
        }
    }

    /// `x := U^{-1} x`.
    pub fn apply_u_inv(&self, x: &mut [BigInt]) {
        assert_eq!(x.len(), self.rows);
        for op in self.row_ops.iter().rev() {
            apply_row_op(&invert_op(op), x);
        }
    }

    /// `x := V x` (length `cols`).
    pub fn apply_v(&self, x: &mut [BigInt]) {
        assert_eq!(x.len(), self.cols);
        for op in self.col_ops.iter().rev() {
            apply_col_op(op, x);
        }
    }

    /// `x := V^{-1} x`.
    pub fn apply_v_inv(&self, x: &mut [BigInt]) {
        assert_eq!(x.len(), self.cols);
        for op in &self.col_ops {
            apply_col_op(&invert_op(op), x);
        }
    }

    /// Basis of `ker A`: the columns of `V` past the rank.
    pub fn kernel_basis(&self) -> Vec<Vec<BigInt>> {
        let mut out = Vec::new();
        for j in self.rank()..self.cols {
            let mut e = vec![BigInt::zero(); self.cols];
            e[j] = BigInt::one();
            self.apply_v(&mut e);
            out.push(e);
        }
        out
    }

    /// Materialize `U` (for tests and small matrices only).
    pub fn u_matrix(&self) -> SparseIntMatrix {
        let mut m = SparseIntMatrix::new(self.rows, self.rows);
        for j in 0..self.rows {
            let mut e = vec![BigInt::zero(); self.rows];
            e[j] = BigInt::one();
            self.apply_u(&mut e);
            for (i, v) in e.into_iter().enumerate() {
                if !v.is_zero() {
                    m.set(i, j, v);
                }
            }
        }
        m
    }

    /// Materialize `V`.
    pub fn v_matrix(&self) -> SparseIntMatrix {
        let mut m = SparseIntMatrix::new(self.cols, self.cols);
        for j in 0..self.cols {
            let mut e = vec![BigInt::zero(); self.cols];
            e[j] = BigInt::one();
            self.apply_v(&mut e);
            for (i, v) in e.into_iter().enumerate() {
                if !v.is_zero() {
                    m.set(i, j, v);
                }
            }
        }
        m
    }
}

/// Working state: rows as sorted maps plus a column occupancy index.
struct Work {
    rows: Vec<BTreeMap<u32, BigInt>>,
    colset: Vec<BTreeSet<u32>>,
    row_ops: Vec<ElemOp>,
    col_ops: Vec<ElemOp>,
}

impl Work {
    fn new(a: &SparseIntMatrix) -> Self {
        let mut rows = vec![BTreeMap::new(); a.rows];
        let mut colset = vec![BTreeSet::new(); a.cols];
        for (r, c, v) in a.iter() {
            rows[r].insert(c as u32, v.clone());
            colset[c].insert(r as u32);
        }
        Work { rows, colset, row_ops: Vec::new(), col_ops: Vec::new() }
    }

    fn get(&self, r: usize, c: usize) -> BigInt {
        self.rows[r].get(&(c as u32)).cloned().unwrap_or_else(BigInt::zero)
    }

    fn set(&mut self, r: usize, c: usize, v: BigInt) {
        if v.is_zero() {
            self.rows[r].remove(&(c as u32));
            self.colset[c].remove(&(r as u32));
        } else {
            self.rows[r].insert(c as u32, v);
            self.colset[c].insert(r as u32);
        }
    }

    fn row_swap(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        let ri = std::mem::take(&mut self.rows[i]);
        let rj = std::mem::take(&mut self.rows[j]);
        for (&c, _) in ri.iter() {
            self.colset[c as usize].remove(&(i as u32));
        }
        for (&c, _) in rj.iter() {
            self.colset[c as usize].remove(&(j as u32));
        }
        for (&c, _) in ri.iter() {
            self.colset[c as usize].insert(j as u32);
        }
        for (&c, _) in rj.iter() {
            self.colset[c as usize].insert(i as u32);
        }
        self.rows[i] = rj;
        self.rows[j] = ri;
        self.row_ops.push(ElemOp::Swap(i as u32, j as u32));
    }

    fn col_swap(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        let rows_i: Vec<u32> = self.colset[i].iter().cloned().collect();
        let rows_j: Vec<u32> = self.colset[j].iter().cloned().collect();
        let mut union: BTreeSet<u32> = rows_i.into_iter().collect();
        union.extend(rows_j);
        for r in union {
            let r = r as usize;
            let vi = self.get(r, i);
            let vj = self.get(r, j);
            self.set(r, i, vj);
            self.set(r, j, vi);
        }
        self.col_ops.push(ElemOp::Swap(i as u32, j as u32));
    }

    /// row_i += c * row_j
    fn row_add(&mut self, i: usize, j: usize, c: &BigInt) {
        if c.is_zero() {
            return;
        }
        let rj: Vec<(u32, BigInt)> = self.rows[j].iter().map(|(&k, v)| (k, v.clone())).collect();
        for (col, v) in rj {
            let cur = self.get(i, col as usize);
            self.set(i, col as usize, cur + v * c);
        }
        self.row_ops.push(ElemOp::Add(i as u32, j as u32, c.clone()));
    }

    /// col_i += c * col_j
    fn col_add(&mut self, i: usize, j: usize, c: &BigInt) {
        if c.is_zero() {
            return;
        }
        let rows_j: Vec<u32> = self.colset[j].iter().cloned().collect();
        for r in rows_j {
            let r = r as usize;
            let vj = self.get(r, j);
            let cur = self.get(r, i);
            self.set(r, i, cur + vj * c);
        }
        self.col_ops.push(ElemOp::Add(i as u32, j as u32, c.clone()));
    }

    fn row_neg(&mut self, i: usize) {
        let cols: Vec<u32> = self.rows[i].keys().cloned().collect();
        for c in cols {
            let v = self.get(i, c as usize);
            self.set(i, c as usize, -v);
        }
        self.row_ops.push(ElemOp::Neg(i as u32));
    }

    /// Pivot choice per policy: prefer |v| == 1, then minimal |v|, ties
    /// broken row-major. Scans the active submatrix (rows, cols >= k).
    fn find_pivot(&self, k: usize) -> Option<(usize, usize)> {
        let mut best: Option<(BigInt, usize, usize)> = None;
        for r in k..self.rows.len() {
            for (&c, v) in self.rows[r].range((k as u32)..) {
                let a = v.abs();
                if a.is_one() {
                    return Some((r, c as usize));
                }
                match &best {
                    Some((ba, _, _)) if *ba <= a => {}
                    _ => best = Some((a, r, c as usize)),
                }
            }
        }
        best.map(|(_, r, c)| (r, c))
    }

    /// Clear row k and column k using the pivot at (k, k); the pivot may be
    /// replaced by smaller remainders along the way (Euclidean steps).
    fn eliminate(&mut self, k: usize) {
        loop {
            let d = self.get(k, k);
            debug_assert!(!d.is_zero());
            // Column k below/above the pivot.
            let others: Vec<u32> =
                self.colset[k].iter().cloned().filter(|&r| r as usize != k).collect();
            let mut restarted = false;
            for r in others {
                let r = r as usize;
                let v = self.get(r, k);
                if v.is_zero() {
                    continue;
                }
                let q = &v / &d; // truncated division: |v - q*d| < |d|
                self.row_add(r, k, &(-q));
                if !self.get(r, k).is_zero() {
                    // Remainder smaller than pivot: promote it.
                    self.row_swap(r, k);
                    restarted = true;
                    break;
                }
            }
            if restarted {
                continue;
            }
            // Row k to the right of the pivot.
            let d = self.get(k, k);
            let others: Vec<u32> =
                self.rows[k].keys().cloned().filter(|&c| c as usize != k).collect();
            let mut restarted = false;
            for c in others {
                let c = c as usize;
                let v = self.get(k, c);
                if v.is_zero() {
                    continue;
                }
                let q = &v / &d;
                self.col_add(c, k, &(-q));
                if !self.get(k, c).is_zero() {
                    self.col_swap(c, k);
                    restarted = true;
                    break;
                }
            }
            if restarted {
                continue;
            }
            // Clean column again if the row pass reintroduced entries.
            if self.colset[k].iter().any(|&r| r as usize != k) {
                continue;
            }
            break;
        }
    }

    /// For diagonal positions i < j with d_i not dividing d_j, replace them by
    /// (gcd, lcm) using elementary operations. Assumes rows/cols i and j are
    /// clear outside the diagonal.
    fn gcd_fix(&mut self, i: usize, j: usize) {
        // row_i += row_j brings d_j into position (i, j).
        self.row_add(i, j, &BigInt::one());
        // Euclid between columns i and j acting on row i; row j keeps (j,i)=0.
        loop {
            let a = self.get(i, i);
            let b = self.get(i, j);
            if b.is_zero() {
                break;
            }
            if a.is_zero() {
                self.col_swap(i, j);
                continue;
            }
            let q = &b / &a;
            self.col_add(j, i, &(-q));
            let b2 = self.get(i, j);
            if b2.is_zero() {
                break;
            }
            self.col_swap(i, j);
        }
        // Column j may still contain (j, j); also (j, i) may have appeared
        // from the swaps. Clear column i below the pivot (only row j can be
        // dirty).
        let a = self.get(i, i);
        let v = self.get(j, i);
        if !v.is_zero() {
            let q = &v / &a;
            self.row_add(j, i, &(-q));
            debug_assert!(self.get(j, i).is_zero(), "gcd divides");
        }
    }
}

/// Compute the Smith normal form of `a` with transform logs.
pub fn snf(a: &SparseIntMatrix) -> Snf {
    let mut w = Work::new(a);
    let n = a.rows.min(a.cols);
    let mut rank = 0;
    for k in 0..n {
        let Some((pr, pc)) = w.find_pivot(k) else { break };
        w.row_swap(pr, k);
        w.col_swap(pc, k);
        w.eliminate(k);
        rank = k + 1;
    }
    // Sign normalization.
    for k in 0..rank {
        if w.get(k, k).is_negative() {
            w.row_neg(k);
        }
    }
    // Divisibility chain fix-up (bubble passes).
    loop {
        let mut changed = false;
        for k in 0..rank.saturating_sub(1) {
            let a = w.get(k, k);
            let b = w.get(k + 1, k + 1);
            if (&b % &a) != BigInt::zero() {
                w.gcd_fix(k, k + 1);
                if w.get(k, k).is_negative() {
                    w.row_neg(k);
                }
                if w.get(k + 1, k + 1).is_negative() {
                    w.row_neg(k + 1);
                }
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let diag = (0..rank).map(|k| w.get(k, k)).collect();
    Snf { rows: a.rows, cols: a.cols, diag, row_ops: w.row_ops, col_ops: w.col_ops }
}

/// Solve `A x = b` over the integers. Returns `None` when no integral
/// solution exists (including rational inconsistency).
pub fn solve_integer_linear(a: &SparseIntMatrix, b: &[BigInt]) -> Option<Vec<BigInt>> {
    assert_eq!(b.len(), a.rows);
    let s = snf(a);
    solve_with_snf(&s, b)
}

/// Solve using a precomputed decomposition of `A`.
pub fn solve_with_snf(s: &Snf, b: &[BigInt]) -> Option<Vec<BigInt>> {
    let mut c = b.to_vec();
    s.apply_u(&mut c);
    let mut y = vec![BigInt::zero(); s.cols];
    for (i, ci) in c.iter().enumerate() {
        if i < s.rank() {
            let d = &s.diag[i];
            if (ci % d) != BigInt::zero() {
                return None;
            }
            y[i] = ci / d;
        } else if !ci.is_zero() {
            return None;
        }
    }
    s.apply_v(&mut y);
    Some(y)
}

impl Snf {
    /// D as a sparse matrix (for verification).
    pub fn d_matrix(&self) -> SparseIntMatrix {
        let mut m = SparseIntMatrix::new(self.rows, self.cols);
        for (i, d) in self.diag.iter().enumerate() {
            m.set(i, i, d.clone());
        }
        m
    }
}
