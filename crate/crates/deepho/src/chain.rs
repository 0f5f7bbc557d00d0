//! Based chain complexes over Z and their homology.
//!
//! Everything downstream (pairs, cohomology, duality) reduces to one engine:
//! a [`BasedComplex`] with labeled generators, an elementary-collapse
//! preprocessor that shrinks it while recording a retraction chain map, and a
//! Smith-normal-form solver that turns kernels/images into [`FgAbGroup`]s
//! with explicit cycle representatives.
//!
//! Labels are `u64` and stay stable across subcomplexes, quotients, and
//! transposition, so chains can be moved between complexes by label without
//! any basis bookkeeping.

use crate::error::{Error, Result};
use crate::grid::Subcomplex;
use crate::linalg::{snf, FgAbGroup, Snf, SparseIntMatrix};
use num_bigint::BigInt;
use num_traits::{One, Zero};
use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};
use std::rc::Rc;

/// A chain written on generator labels.
pub type LChain = BTreeMap<u64, BigInt>;

/// Sparse vector on (core) indices.
type SVec = BTreeMap<u32, BigInt>;

pub fn lchain_add(dst: &mut LChain, label: u64, c: &BigInt) {
    if c.is_zero() {
        return;
    }
    let e = dst.entry(label).or_insert_with(BigInt::zero);
    *e += c;
    if e.is_zero() {
        dst.remove(&label);
    }
}

pub fn lchain_add_scaled(dst: &mut LChain, src: &LChain, c: &BigInt) {
    if c.is_zero() {
        return;
    }
    for (&l, v) in src {
        lchain_add(dst, l, &(v * c));
    }
}

fn svec_add(dst: &mut SVec, i: u32, c: &BigInt) {
    if c.is_zero() {
        return;
    }
    let e = dst.entry(i).or_insert_with(BigInt::zero);
    *e += c;
    if e.is_zero() {
        dst.remove(&i);
    }
}

/// A finite free chain complex with a chosen basis per degree.
///
/// `boundary[d][i]` lists `(index in degree d-1, coefficient)`. Degree 0 has
/// empty boundary lists; if `augmented` is set, the degree-0 boundary is
/// understood to be the augmentation to Z (all coefficients 1), which turns
/// degree-0 homology into reduced homology.
pub struct BasedComplex {
    pub labels: Vec<Vec<u64>>,
    pub index: Vec<HashMap<u64, u32>>,
    pub boundary: Vec<Vec<Vec<(u32, i64)>>>,
    pub augmented: bool,
}

impl BasedComplex {
    pub fn new(labels: Vec<Vec<u64>>, boundary: Vec<Vec<Vec<(u32, i64)>>>, augmented: bool) -> Self {
        assert_eq!(labels.len(), boundary.len());
        let index = labels
            .iter()
            .map(|ls| ls.iter().enumerate().map(|(i, &l)| (l, i as u32)).collect::<HashMap<_, _>>())
            .collect::<Vec<_>>();
        for (d, ix) in index.iter().enumerate() {
            assert_eq!(ix.len(), labels[d].len(), "duplicate labels in degree {d}");
        }
        let cx = BasedComplex { labels, index, boundary, augmented };
        debug_assert!(cx.dd_is_zero());
        cx
    }

    /// The chain complex of a subcomplex, or of a pair when `rel` is given:
    /// generators are the cells of `sub` not in `rel`, and boundary entries
    /// landing in `rel` are dropped (the quotient complex).
    pub fn from_subcomplex(sub: &Subcomplex, rel: Option<&Subcomplex>, augmented: bool) -> Self {
        if let Some(l) = rel {
            assert!(l.is_subset_of(sub), "relative divisor must be a subcomplex of the total");
            assert!(!augmented, "relative complexes are never augmented");
        }
        let parent = &sub.parent;
        let keep = |d: usize, id: u32| {
            sub.members[d][id as usize] && rel.map_or(true, |l| !l.members[d][id as usize])
        };
        let top = sub.members.len() - 1;
        let mut labels: Vec<Vec<u64>> = Vec::with_capacity(top + 1);
        let mut newid: Vec<HashMap<u32, u32>> = Vec::with_capacity(top + 1);
        for d in 0..=top {
            let mut ls = Vec::new();
            let mut map = HashMap::new();
            for id in 0..sub.members[d].len() as u32 {
                if keep(d, id) {
                    map.insert(id, ls.len() as u32);
                    ls.push(crate::grid::Cell::new(d, id).label());
                }
            }
            labels.push(ls);
            newid.push(map);
        }
        let mut boundary: Vec<Vec<Vec<(u32, i64)>>> = Vec::with_capacity(top + 1);
        for d in 0..=top {
            let mut rows = Vec::with_capacity(labels[d].len());
            for id in 0..sub.members[d].len() as u32 {
                if !keep(d, id) {
                    continue;
                }
                let mut bd = Vec::new();
                if d >= 1 {
                    for &(f, s) in &parent.facets[d][id as usize] {
                        if let Some(&ni) = newid[d - 1].get(&f) {
                            bd.push((ni, s as i64));
                        }
                    }
                }
                rows.push(bd);
            }
            boundary.push(rows);
        }
        BasedComplex::new(labels, boundary, augmented)
    }

    /// Abstract simplicial complex from facet lists of vertex labels; closes
    /// under faces. Returns the complex together with the label of every
    /// simplex keyed by its sorted vertex tuple (for tests and fixtures).
    pub fn from_facets(facets: &[Vec<u64>]) -> (Self, HashMap<Vec<u64>, u64>) {
        let mut by_dim: Vec<BTreeMap<Vec<u64>, ()>> = Vec::new();
        let mut stack: Vec<Vec<u64>> = facets
            .iter()
            .map(|f| {
                let mut v = f.clone();
                v.sort_unstable();
                v.dedup();
                v
            })
            .collect();
        while let Some(s) = stack.pop() {
            let d = s.len() - 1;
            if by_dim.len() <= d {
                by_dim.resize_with(d + 1, BTreeMap::new);
            }
            if by_dim[d].contains_key(&s) {
                continue;
            }
            for omit in 0..s.len() {
                if s.len() >= 2 {
                    let mut f = s.clone();
                    f.remove(omit);
                    stack.push(f);
                }
            }
            by_dim[d].insert(s, ());
        }
        let mut label_of: HashMap<Vec<u64>, u64> = HashMap::new();
        let mut labels: Vec<Vec<u64>> = Vec::new();
        let mut next: u64 = 0;
        for (_, dimset) in by_dim.iter().enumerate() {
            let mut ls = Vec::new();
            for s in dimset.keys() {
                label_of.insert(s.clone(), next);
                ls.push(next);
                next += 1;
            }
            labels.push(ls);
        }
        let mut boundary: Vec<Vec<Vec<(u32, i64)>>> = Vec::new();
        for (d, dimset) in by_dim.iter().enumerate() {
            let mut rows = Vec::new();
            for s in dimset.keys() {
                let mut bd = Vec::new();
                if d >= 1 {
                    for omit in 0..s.len() {
                        let mut f = s.clone();
                        f.remove(omit);
                        let fl = label_of[&f];
                        let fi = by_dim[d - 1].keys().position(|k| label_of[k] == fl).unwrap();
                        let sign = if omit % 2 == 0 { 1 } else { -1 };
                        bd.push((fi as u32, sign));
                    }
                }
                rows.push(bd);
            }
            boundary.push(rows);
        }
        (BasedComplex::new(labels, boundary, false), label_of)
    }

    pub fn top_dim(&self) -> usize {
        self.labels.len() - 1
    }

    pub fn size(&self, d: usize) -> usize {
        self.labels.get(d).map_or(0, |l| l.len())
    }

    pub fn total_size(&self) -> usize {
        self.labels.iter().map(|l| l.len()).sum()
    }

    pub fn index_of(&self, d: usize, label: u64) -> Option<u32> {
        self.index.get(d)?.get(&label).copied()
    }

    /// Coefficients of a labeled chain in this basis. Labels absent from the
    /// complex are dropped: this is the quotient/restriction map, used to
    /// push chains into relative or smaller complexes.
    pub fn to_coords(&self, d: usize, ch: &LChain) -> Vec<BigInt> {
        let mut out = vec![BigInt::zero(); self.size(d)];
        for (&l, c) in ch {
            if let Some(i) = self.index_of(d, l) {
                out[i as usize] = c.clone();
            }
        }
        out
    }

    pub fn to_lchain(&self, d: usize, coords: &[BigInt]) -> LChain {
        let mut out = LChain::new();
        for (i, c) in coords.iter().enumerate() {
            if !c.is_zero() {
                out.insert(self.labels[d][i], c.clone());
            }
        }
        out
    }

    pub fn boundary_coords(&self, d: usize, x: &[BigInt]) -> Vec<BigInt> {
        let mut out = vec![BigInt::zero(); if d == 0 { 0 } else { self.size(d - 1) }];
        for (i, c) in x.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            for &(f, s) in &self.boundary[d][i] {
                out[f as usize] += c * s;
            }
        }
        out
    }

    /// Boundary of a labeled chain (labels outside the complex dropped first).
    pub fn boundary_lchain(&self, d: usize, ch: &LChain) -> LChain {
        if d == 0 {
            return LChain::new();
        }
        let coords = self.to_coords(d, ch);
        self.to_lchain(d - 1, &self.boundary_coords(d, &coords))
    }

    /// The matrix of `∂_d`. In degree 0 this is the augmentation row (all
    /// ones) when the complex is augmented, otherwise a 0-row matrix.
    pub fn boundary_matrix(&self, d: usize) -> SparseIntMatrix {
        if d == 0 {
            if self.augmented {
                let mut m = SparseIntMatrix::new(1, self.size(0));
                for j in 0..self.size(0) {
                    m.set(0, j, BigInt::one());
                }
                return m;
            }
            return SparseIntMatrix::new(0, self.size(0));
        }
        if d > self.top_dim() {
            return SparseIntMatrix::new(self.size(d - 1), 0);
        }
        let mut m = SparseIntMatrix::new(self.size(d - 1), self.size(d));
        for (j, bd) in self.boundary[d].iter().enumerate() {
            for &(i, s) in bd {
                m.add(i as usize, j, BigInt::from(s));
            }
        }
        m
    }

    /// The dual complex: degree `d` becomes `top_dim - d` and the boundary
    /// is the transposed coboundary. Labels carry over unchanged, so a
    /// cochain "is" a chain on the same labels.
    pub fn transpose(&self) -> BasedComplex {
        let top = self.top_dim();
        let mut labels: Vec<Vec<u64>> = Vec::with_capacity(top + 1);
        let mut boundary: Vec<Vec<Vec<(u32, i64)>>> = Vec::with_capacity(top + 1);
        for dt in 0..=top {
            let d = top - dt;
            labels.push(self.labels[d].clone());
            // transposed boundary of an original degree-d cell: its cofaces
            // in original degree d+1 (which sit in transposed degree dt - 1)
            let mut rows: Vec<Vec<(u32, i64)>> = vec![Vec::new(); self.size(d)];
            if dt >= 1 {
                for (sigma, bd) in self.boundary[d + 1].iter().enumerate() {
                    for &(f, s) in bd {
                        rows[f as usize].push((sigma as u32, s));
                    }
                }
            }
            boundary.push(rows);
        }
        BasedComplex::new(labels, boundary, false)
    }

    /// The subquotient keeping only the labels accepted by `keep`: boundary
    /// entries pointing at dropped cells are removed. For a label set closed
    /// under the boundary this is a subcomplex; for its complement it is the
    /// quotient complex. Degree indexing is preserved.
    pub fn restricted(&self, keep: impl Fn(u64) -> bool) -> BasedComplex {
        let mut labels: Vec<Vec<u64>> = Vec::with_capacity(self.labels.len());
        let mut newid: Vec<HashMap<u32, u32>> = Vec::with_capacity(self.labels.len());
        for ls in &self.labels {
            let mut kept = Vec::new();
            let mut map = HashMap::new();
            for (i, &l) in ls.iter().enumerate() {
                if keep(l) {
                    map.insert(i as u32, kept.len() as u32);
                    kept.push(l);
                }
            }
            labels.push(kept);
            newid.push(map);
        }
        let mut boundary: Vec<Vec<Vec<(u32, i64)>>> = Vec::with_capacity(self.labels.len());
        for (d, rows) in self.boundary.iter().enumerate() {
            let mut out = Vec::with_capacity(labels[d].len());
            for (i, bd) in rows.iter().enumerate() {
                if !newid[d].contains_key(&(i as u32)) {
                    continue;
                }
                let nb = if d >= 1 {
                    bd.iter().filter_map(|&(f, s)| newid[d - 1].get(&f).map(|&nf| (nf, s))).collect()
                } else {
                    Vec::new()
                };
                out.push(nb);
            }
            boundary.push(out);
        }
        BasedComplex::new(labels, boundary, self.augmented)
    }

    fn dd_is_zero(&self) -> bool {
        for d in 2..=self.top_dim() {
            for bd in &self.boundary[d] {
                let mut acc: HashMap<u32, i64> = HashMap::new();
                for &(f, s) in bd {
                    for &(g, t) in &self.boundary[d - 1][f as usize] {
                        *acc.entry(g).or_insert(0) += s * t;
                    }
                }
                if acc.values().any(|&v| v != 0) {
                    return false;
                }
            }
        }
        true
    }
}

/// One elementary collapse: `tau` (degree `d`) is a face of exactly one cell
/// `sigma` (degree `d+1`, itself maximal) with unit coefficient `c`.
struct CollapsePair {
    d: usize,
    tau: u32,
    sigma: u32,
    c: i64,
}

/// The result of greedily collapsing free faces: a core subcomplex with the
/// same homology, plus the retraction chain map back onto the core.
///
/// At each step the removed pair leaves a genuine subcomplex (no remaining
/// cell has `tau` or `sigma` on its boundary), so the core inherits the
/// restricted boundary and the inclusion is a chain map. The retraction
/// rewrites `tau ↦ tau − c⁻¹ ∂sigma` (which cancels `tau`), `sigma ↦ 0`.
pub struct Collapsed {
    pub original: BasedComplex,
    pub core: BasedComplex,
    /// original (d, i) -> core index, when the cell survives
    core_of: Vec<Vec<Option<u32>>>,
    /// original (d, i) -> pair id that removed it (u32::MAX = alive)
    kill: Vec<Vec<u32>>,
    pairs: Vec<CollapsePair>,
    memo: RefCell<Vec<HashMap<u32, Rc<SVec>>>>,
}

impl Collapsed {
    pub fn new(original: BasedComplex) -> Self {
        Self::build(original, true)
    }

    /// Audit mode: no collapsing, core = original.
    pub fn identity(original: BasedComplex) -> Self {
        Self::build(original, false)
    }

    fn build(original: BasedComplex, collapse: bool) -> Self {
        let top = original.top_dim();
        // coface lists
        let mut cof: Vec<Vec<Vec<(u32, i64)>>> =
            (0..=top).map(|d| vec![Vec::new(); original.size(d)]).collect();
        for d in 1..=top {
            for (sigma, bd) in original.boundary[d].iter().enumerate() {
                for &(f, s) in bd {
                    cof[d - 1][f as usize].push((sigma as u32, s));
                }
            }
        }
        let mut ncof: Vec<Vec<u32>> =
            (0..=top).map(|d| cof[d].iter().map(|v| v.len() as u32).collect()).collect();
        let mut live: Vec<Vec<bool>> = (0..=top).map(|d| vec![true; original.size(d)]).collect();
        let mut kill: Vec<Vec<u32>> = (0..=top).map(|d| vec![u32::MAX; original.size(d)]).collect();
        let mut pairs: Vec<CollapsePair> = Vec::new();

        if collapse {
            use std::cmp::Reverse;
            use std::collections::BinaryHeap;
            let mut heap: BinaryHeap<Reverse<(usize, u32)>> = BinaryHeap::new();
            for d in 0..=top {
                for i in 0..original.size(d) as u32 {
                    heap.push(Reverse((d, i)));
                }
            }
            while let Some(Reverse((d, tau))) = heap.pop() {
                if !live[d][tau as usize] || d == top {
                    continue;
                }
                if ncof[d][tau as usize] != 1 {
                    continue;
                }
                let Some(&(sigma, c)) =
                    cof[d][tau as usize].iter().find(|&&(s, _)| live[d + 1][s as usize])
                else {
                    continue;
                };
                if c.abs() != 1 || ncof[d + 1][sigma as usize] != 0 {
                    continue;
                }
                let pid = pairs.len() as u32;
                live[d][tau as usize] = false;
                live[d + 1][sigma as usize] = false;
                kill[d][tau as usize] = pid;
                kill[d + 1][sigma as usize] = pid;
                pairs.push(CollapsePair { d, tau, sigma, c });
                // faces of the removed cells lose a coface
                for (dd, cell) in [(d + 1, sigma), (d, tau)] {
                    if dd == 0 {
                        continue;
                    }
                    for &(f, _) in &original.boundary[dd][cell as usize] {
                        if live[dd - 1][f as usize] {
                            ncof[dd - 1][f as usize] -= 1;
                            heap.push(Reverse((dd - 1, f)));
                            if ncof[dd - 1][f as usize] == 0 && dd >= 2 {
                                // f became maximal: its faces may now be free
                                for &(g, _) in &original.boundary[dd - 1][f as usize] {
                                    if live[dd - 2][g as usize] {
                                        heap.push(Reverse((dd - 2, g)));
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }

        // assemble the core
        let mut core_of: Vec<Vec<Option<u32>>> =
            (0..=top).map(|d| vec![None; original.size(d)]).collect();
        let mut labels: Vec<Vec<u64>> = Vec::with_capacity(top + 1);
        for d in 0..=top {
            let mut ls = Vec::new();
            for i in 0..original.size(d) {
                if live[d][i] {
                    core_of[d][i] = Some(ls.len() as u32);
                    ls.push(original.labels[d][i]);
                }
            }
            labels.push(ls);
        }
        let mut boundary: Vec<Vec<Vec<(u32, i64)>>> = Vec::with_capacity(top + 1);
        for d in 0..=top {
            let mut rows = Vec::new();
            for i in 0..original.size(d) {
                if !live[d][i] {
                    continue;
                }
                let bd = if d == 0 {
                    Vec::new()
                } else {
                    original.boundary[d][i]
                        .iter()
                        .map(|&(f, s)| {
                            (core_of[d - 1][f as usize].expect("core not face-closed"), s)
                        })
                        .collect()
                };
                rows.push(bd);
            }
            boundary.push(rows);
        }
        let core = BasedComplex::new(labels, boundary, original.augmented);
        let memo = RefCell::new((0..=top).map(|_| HashMap::new()).collect());
        Collapsed { original, core, core_of, kill, pairs, memo }
    }

    pub fn pair_count(&self) -> usize {
        self.pairs.len()
    }

    /// Retraction of an original basis cell onto the core, in core indices.
    fn retract_cell(&self, d: usize, i: u32) -> Rc<SVec> {
        if let Some(ci) = self.core_of[d][i as usize] {
            return Rc::new([(ci, BigInt::one())].into_iter().collect());
        }
        if let Some(v) = self.memo.borrow()[d].get(&i) {
            return v.clone();
        }
        let pid = self.kill[d][i as usize];
        let p = &self.pairs[pid as usize];
        let out = if p.d + 1 == d && p.sigma == i {
            SVec::new()
        } else {
            // tau ↦ -c⁻¹ (∂sigma - c·tau); every face of sigma other than tau
            // is alive at this step and is retracted by strictly later pairs
            let mut acc = SVec::new();
            for &(f, s) in &self.original.boundary[p.d + 1][p.sigma as usize] {
                if f == p.tau {
                    continue;
                }
                let r = self.retract_cell(p.d, f);
                let coef = BigInt::from(-p.c * s);
                for (&ci, v) in r.iter() {
                    svec_add(&mut acc, ci, &(v * &coef));
                }
            }
            acc
        };
        let rc = Rc::new(out);
        self.memo.borrow_mut()[d].insert(i, rc.clone());
        rc
    }

    /// Retraction of a labeled chain onto the core (core coordinates).
    /// Labels outside the original complex are dropped.
    pub fn retract_lchain(&self, d: usize, ch: &LChain) -> Vec<BigInt> {
        let mut out = vec![BigInt::zero(); self.core.size(d)];
        for (&l, c) in ch {
            if c.is_zero() {
                continue;
            }
            if let Some(i) = self.original.index_of(d, l) {
                let r = self.retract_cell(d, i);
                for (&ci, v) in r.iter() {
                    out[ci as usize] += v * c;
                }
            }
        }
        out
    }
}

/// Homology of one degree of a based complex: `ker ∂_d / im ∂_{d+1}` in
/// Smith normal form, with two-way translation between cycles and class
/// coordinates.
pub struct DegreeHomology {
    pub group: FgAbGroup,
    n_cells: usize,
    snf_d: Snf,
    rank1: usize,
    kdim: usize,
    snf_b: Snf,
    /// positions in the SNF basis of the kernel kept as generators,
    /// free generators first, then torsion in invariant-factor order
    keep: Vec<usize>,
}

impl DegreeHomology {
    pub fn compute(cx: &BasedComplex, d: usize) -> DegreeHomology {
        let n_cells = cx.size(d);
        let snf_d = snf(&cx.boundary_matrix(d));
        let rank1 = snf_d.rank();
        let kdim = n_cells - rank1;
        // image of ∂_{d+1} expressed in kernel coordinates
        let del1 = cx.boundary_matrix(d + 1);
        let mut b = SparseIntMatrix::new(kdim, del1.cols);
        for j in 0..del1.cols {
            let mut w = del1.col(j);
            snf_d.apply_v_inv(&mut w);
            for (r, v) in w.iter().enumerate().skip(rank1) {
                if !v.is_zero() {
                    b.set(r - rank1, j, v.clone());
                }
            }
            debug_assert!(w[..rank1].iter().all(|v| v.is_zero()), "∂∂ ≠ 0");
        }
        let snf_b = snf(&b);
        let rank2 = snf_b.rank();
        let mut keep: Vec<usize> = (rank2..kdim).collect();
        let mut torsion = Vec::new();
        for (j, f) in snf_b.diag.iter().enumerate() {
            if !f.is_one() {
                keep.push(j);
                torsion.push(f.clone());
            }
        }
        let group = FgAbGroup { free_rank: kdim - rank2, torsion };
        DegreeHomology { group, n_cells, snf_d, rank1, kdim, snf_b, keep }
    }

    /// Class coordinates of a cycle given in complex coordinates.
    pub fn class_of(&self, z: &[BigInt]) -> Result<Vec<BigInt>> {
        assert_eq!(z.len(), self.n_cells);
        let mut y = z.to_vec();
        self.snf_d.apply_v_inv(&mut y);
        let bad = y[..self.rank1].iter().filter(|v| !v.is_zero()).count();
        if bad > 0 {
            return Err(Error::NotACycle { dim: self.n_cells, nonzero: bad });
        }
        let mut t = y[self.rank1..].to_vec();
        self.snf_b.apply_u(&mut t);
        let coords: Vec<BigInt> = self.keep.iter().map(|&j| t[j].clone()).collect();
        Ok(self.group.reduce(&coords))
    }

    /// A cycle (complex coordinates) representing the given class coordinates.
    pub fn representative(&self, coords: &[BigInt]) -> Vec<BigInt> {
        assert_eq!(coords.len(), self.group.num_gens());
        let mut t = vec![BigInt::zero(); self.kdim];
        for (g, &j) in self.keep.iter().enumerate() {
            t[j] = coords[g].clone();
        }
        self.snf_b.apply_u_inv(&mut t);
        let mut y = vec![BigInt::zero(); self.rank1];
        y.extend(t);
        self.snf_d.apply_v(&mut y);
        y
    }
}

/// Homology of a based complex across all degrees: collapse once, solve per
/// degree on demand, and translate chains by label.
pub struct HomologyComputer {
    pub collapsed: Collapsed,
    solvers: RefCell<BTreeMap<usize, Rc<DegreeHomology>>>,
}

impl HomologyComputer {
    pub fn new(cx: BasedComplex) -> Self {
        HomologyComputer { collapsed: Collapsed::new(cx), solvers: RefCell::new(BTreeMap::new()) }
    }

    /// Audit mode: skip the collapse preprocessor.
    pub fn new_uncollapsed(cx: BasedComplex) -> Self {
        HomologyComputer {
            collapsed: Collapsed::identity(cx),
            solvers: RefCell::new(BTreeMap::new()),
        }
    }

    pub fn complex(&self) -> &BasedComplex {
        &self.collapsed.original
    }

    fn solver(&self, d: usize) -> Rc<DegreeHomology> {
        if let Some(s) = self.solvers.borrow().get(&d) {
            return s.clone();
        }
        let s = Rc::new(DegreeHomology::compute(&self.collapsed.core, d));
        self.solvers.borrow_mut().insert(d, s.clone());
        s
    }

    pub fn group(&self, d: usize) -> FgAbGroup {
        if d > self.collapsed.core.top_dim() {
            return FgAbGroup::trivial();
        }
        self.solver(d).group.clone()
    }

    /// Class coordinates of a labeled cycle. Labels outside the complex are
    /// dropped first (the quotient map for relative complexes).
    pub fn class_of(&self, d: usize, ch: &LChain) -> Result<Vec<BigInt>> {
        if d > self.collapsed.core.top_dim() {
            return Ok(Vec::new());
        }
        let z = self.collapsed.retract_lchain(d, ch);
        self.solver(d).class_of(&z)
    }

    /// A labeled cycle representing generator `g` of `H_d`.
    pub fn representative(&self, d: usize, g: usize) -> LChain {
        let solver = self.solver(d);
        let mut coords = vec![BigInt::zero(); solver.group.num_gens()];
        coords[g] = BigInt::one();
        self.chain_from_class(d, &coords)
    }

    /// A labeled cycle with the given class coordinates.
    pub fn chain_from_class(&self, d: usize, coords: &[BigInt]) -> LChain {
        let z = self.solver(d).representative(coords);
        self.collapsed.core.to_lchain(d, &z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_window, window_boundary};

    fn hollow_triangle() -> BasedComplex {
        let (cx, _) = BasedComplex::from_facets(&[vec![0, 1], vec![1, 2], vec![0, 2]]);
        cx
    }

    #[test]
    fn circle_homology() {
        let h = HomologyComputer::new(hollow_triangle());
        assert_eq!(h.group(0), FgAbGroup::free(1));
        assert_eq!(h.group(1), FgAbGroup::free(1));
        let gen = h.representative(1, 0);
        assert_eq!(gen.len(), 3);
        let cx = h.complex();
        assert!(cx.boundary_lchain(1, &gen).is_empty());
        // round trip through the class map
        let c = h.class_of(1, &gen).unwrap();
        assert_eq!(c, vec![BigInt::one()]);
    }

    #[test]
    fn sphere_homology_via_window_boundary() {
        let w = build_window(3, 2, None).unwrap();
        let b = window_boundary(&w);
        let cx = BasedComplex::from_subcomplex(&b, None, false);
        let h = HomologyComputer::new(cx);
        assert_eq!(h.group(0), FgAbGroup::free(1));
        assert_eq!(h.group(1), FgAbGroup::trivial());
        assert_eq!(h.group(2), FgAbGroup::free(1));
        // the degree-2 generator is a fundamental cycle: boundary zero,
        // supported on every boundary triangle with coefficient ±1
        let z = h.representative(2, 0);
        assert_eq!(z.len(), b.counts[2]);
        assert!(z.values().all(|c| c.magnitude() == BigInt::one().magnitude()));
        assert!(h.complex().boundary_lchain(2, &z).is_empty());
    }

    #[test]
    fn torus_fixture() {
        // 4x4 grid torus, squares split along the diagonal
        let n = 4u64;
        let v = |i: u64, j: u64| (i % n) * n + (j % n);
        let mut facets = Vec::new();
        for i in 0..n {
            for j in 0..n {
                facets.push(vec![v(i, j), v(i + 1, j), v(i + 1, j + 1)]);
                facets.push(vec![v(i, j), v(i, j + 1), v(i + 1, j + 1)]);
            }
        }
        let (cx, _) = BasedComplex::from_facets(&facets);
        let h = HomologyComputer::new(cx);
        assert_eq!(h.group(0), FgAbGroup::free(1));
        assert_eq!(h.group(1), FgAbGroup::free(2));
        assert_eq!(h.group(2), FgAbGroup::free(1));
    }

    /// 6-vertex triangulation of RP^2: 10 triangles on K6, every edge in
    /// exactly two of them, Euler characteristic 1.
    fn projective_plane() -> Vec<Vec<u64>> {
        vec![
            vec![0, 1, 2],
            vec![0, 1, 3],
            vec![0, 2, 4],
            vec![0, 3, 5],
            vec![0, 4, 5],
            vec![1, 2, 5],
            vec![1, 3, 4],
            vec![1, 4, 5],
            vec![2, 3, 4],
            vec![2, 3, 5],
        ]
    }

    #[test]
    fn projective_plane_torsion() {
        let (cx, _) = BasedComplex::from_facets(&projective_plane());
        let h = HomologyComputer::new(cx);
        assert_eq!(h.group(0), FgAbGroup::free(1));
        assert_eq!(h.group(1), FgAbGroup::cyclic(2));
        assert_eq!(h.group(2), FgAbGroup::trivial());
    }

    #[test]
    fn window_is_acyclic_reduced() {
        let w = build_window(3, 2, None).unwrap();
        let cx = BasedComplex::from_subcomplex(&w.full_subcomplex(), None, true);
        let h = HomologyComputer::new(cx);
        for d in 0..=3 {
            assert!(h.group(d).is_trivial(), "reduced H_{d} of a window should vanish");
        }
        // the collapse should do essentially all of the work here
        assert!(h.collapsed.core.total_size() < 50, "core size {}", h.collapsed.core.total_size());
    }

    #[test]
    fn interval_rel_endpoints() {
        let w = build_window(1, 3, None).unwrap();
        let all = w.full_subcomplex();
        let ends = crate::grid::Subcomplex::from_cells(
            &w,
            [crate::grid::Cell::new(0, 0), crate::grid::Cell::new(0, 6)],
        );
        let cx = BasedComplex::from_subcomplex(&all, Some(&ends), false);
        let h = HomologyComputer::new(cx);
        assert_eq!(h.group(0), FgAbGroup::trivial());
        assert_eq!(h.group(1), FgAbGroup::free(1));
        // and its transposed model: H^1(interval rel ends) = Z
        let cx2 = BasedComplex::from_subcomplex(&all, Some(&ends), false);
        let t = cx2.transpose();
        let ht = HomologyComputer::new(t);
        // cohomology degree k = transposed degree top - k, top = 1
        assert_eq!(ht.group(0), FgAbGroup::free(1)); // H^1
        assert_eq!(ht.group(1), FgAbGroup::trivial()); // H^0
    }

    #[test]
    fn collapse_agrees_with_direct_solver() {
        let w = build_window(2, 3, None).unwrap();
        // an annulus: complement of the center vertex's star
        let center = crate::grid::Subcomplex::from_cells(
            &w,
            [crate::grid::Cell::new(0, *w.vert_index.get(&[0, 0, 0]).unwrap())],
        );
        let ann = center.iterated_star(1).complement_closure();
        for d in 0..=2 {
            let a = HomologyComputer::new(BasedComplex::from_subcomplex(&ann, None, false));
            let b = HomologyComputer::new_uncollapsed(BasedComplex::from_subcomplex(
                &ann, None, false,
            ));
            assert_eq!(a.group(d), b.group(d), "degree {d}");
        }
    }

    #[test]
    fn retraction_is_a_chain_map() {
        let w = build_window(2, 3, None).unwrap();
        let center = crate::grid::Subcomplex::from_cells(
            &w,
            [crate::grid::Cell::new(0, *w.vert_index.get(&[0, 0, 0]).unwrap())],
        );
        let ann = center.iterated_star(1).complement_closure();
        let cx = BasedComplex::from_subcomplex(&ann, None, false);
        let col = Collapsed::new(cx);
        // r(∂x) = ∂(r(x)) for every original cell x
        for d in 1..=2 {
            for i in 0..col.original.size(d) {
                let x: LChain =
                    [(col.original.labels[d][i], BigInt::one())].into_iter().collect();
                let bx = col.original.boundary_lchain(d, &x);
                let r_bx = col.retract_lchain(d - 1, &bx);
                let rx = col.retract_lchain(d, &x);
                let b_rx = col.core.boundary_coords(d, &rx);
                assert_eq!(r_bx, b_rx, "cell {i} in degree {d}");
            }
        }
    }

    #[test]
    fn class_representative_round_trip_with_torsion() {
        let (cx, _) = BasedComplex::from_facets(&projective_plane());
        let h = HomologyComputer::new(cx);
        assert_eq!(h.group(1), FgAbGroup::cyclic(2));
        let z = h.representative(1, 0);
        assert_eq!(h.class_of(1, &z).unwrap(), vec![BigInt::one()]);
        // doubling the generator is a boundary
        let mut z2 = LChain::new();
        lchain_add_scaled(&mut z2, &z, &BigInt::from(2));
        assert_eq!(h.class_of(1, &z2).unwrap(), vec![BigInt::zero()]);
    }
}
