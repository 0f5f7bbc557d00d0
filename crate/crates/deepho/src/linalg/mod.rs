//! Exact integer linear algebra: sparse matrices over Z, Smith normal form
//! with transform tracking, integer linear solves, and finitely generated
//! abelian groups with homomorphisms.

mod group;
mod snf;

pub use group::{
    hom_image, hom_inverse, hom_is_injective, hom_is_iso, hom_is_surjective, hom_kernel,
    subgroup_contains,
    subgroup_coordinates, subgroup_presentation, subgroups_equal, AbHom, FgAbGroup, Subgroup,
};
pub use snf::{snf, solve_integer_linear, solve_with_snf, ElemOp, Snf};

use num_bigint::BigInt;
use num_traits::Zero;
use std::collections::BTreeMap;

/// Sparse matrix over Z with explicit dimensions. Entries are stored in
/// row-major order keyed by (row, col); absent keys are zero.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SparseIntMatrix {
    pub rows: usize,
    pub cols: usize,
    entries: BTreeMap<(u32, u32), BigInt>,
}

impl SparseIntMatrix {
    pub fn new(rows: usize, cols: usize) -> Self {
        SparseIntMatrix { rows, cols, entries: BTreeMap::new() }
    }

    pub fn from_triplets(
        rows: usize,
        cols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, BigInt)>,
    ) -> Self {
        let mut m = Self::new(rows, cols);
        for (r, c, v) in triplets {
            m.add(r, c, v);
        }
        m
    }

    pub fn from_dense(rows: &[Vec<i64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut m = Self::new(r, c);
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                m.add(i, j, BigInt::from(v));
            }
        }
        m
    }

    pub fn add(&mut self, r: usize, c: usize, v: BigInt) {
        assert!(r < self.rows && c < self.cols, "entry out of bounds");
        if v.is_zero() {
            return;
        }
        let key = (r as u32, c as u32);
        let e = self.entries.entry(key).or_insert_with(BigInt::zero);
        *e += v;
        if e.is_zero() {
            self.entries.remove(&key);
        }
    }

    pub fn set(&mut self, r: usize, c: usize, v: BigInt) {
        assert!(r < self.rows && c < self.cols, "entry out of bounds");
        let key = (r as u32, c as u32);
        if v.is_zero() {
            self.entries.remove(&key);
        } else {
            self.entries.insert(key, v);
        }
    }

    pub fn get(&self, r: usize, c: usize) -> BigInt {
        self.entries.get(&(r as u32, c as u32)).cloned().unwrap_or_else(BigInt::zero)
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, &BigInt)> {
        self.entries.iter().map(|(&(r, c), v)| (r as usize, c as usize, v))
    }

    /// Column `j` as a dense vector.
    pub fn col(&self, j: usize) -> Vec<BigInt> {
        let mut v = vec![BigInt::zero(); self.rows];
        for (&(r, c), val) in &self.entries {
            if c as usize == j {
                v[r as usize] = val.clone();
            }
        }
        v
    }

    /// Matrix-vector product A*x.
    pub fn mul_vec(&self, x: &[BigInt]) -> Vec<BigInt> {
        assert_eq!(x.len(), self.cols);
        let mut out = vec![BigInt::zero(); self.rows];
        for (&(r, c), v) in &self.entries {
            if !x[c as usize].is_zero() {
                out[r as usize] += v * &x[c as usize];
            }
        }
        out
    }

    pub fn transpose(&self) -> SparseIntMatrix {
        let mut m = SparseIntMatrix::new(self.cols, self.rows);
        for (&(r, c), v) in &self.entries {
            m.entries.insert((c, r), v.clone());
        }
        m
    }

    pub fn to_dense(&self) -> Vec<Vec<BigInt>> {
        let mut d = vec![vec![BigInt::zero(); self.cols]; self.rows];
        for (&(r, c), v) in &self.entries {
            d[r as usize][c as usize] = v.clone();
        }
        d
    }

    /// A*B.
    pub fn mul(&self, other: &SparseIntMatrix) -> SparseIntMatrix {
        assert_eq!(self.cols, other.rows);
        let mut out = SparseIntMatrix::new(self.rows, other.cols);
        // index other by row
        let mut rows_of: Vec<Vec<(u32, &BigInt)>> = vec![Vec::new(); other.rows];
        for (&(r, c), v) in &other.entries {
            rows_of[r as usize].push((c, v));
        }
        for (&(r, c), v) in &self.entries {
            for &(c2, v2) in &rows_of[c as usize] {
                out.add(r as usize, c2 as usize, v * v2);
            }
        }
        out
    }
}
