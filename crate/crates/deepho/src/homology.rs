//! Homology of subcomplex pairs and the duality building blocks.
//!
//! Wraps the chain engine for the objects the rest of the crate talks about:
//! absolute/relative/reduced homology of subcomplexes with induced and
//! connecting maps, compactly supported cohomology of truncations (modeled
//! as cohomology rel the truncation frontier, computed on the transposed
//! complex), the oriented fundamental cycle of a window, and the cap product
//! against it.

use crate::chain::{lchain_add, BasedComplex, HomologyComputer, LChain};
use crate::error::Result;
use crate::grid::{Cell, SimplicialComplex, Subcomplex};
use crate::linalg::{AbHom, FgAbGroup};
use num_bigint::BigInt;
use num_traits::{One, Zero};
use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;

/// Homology of a subcomplex, a pair, or their reduced variant, with chains
/// addressed by parent-complex cell labels.
pub struct SpaceHomology {
    pub total: Subcomplex,
    pub rel: Option<Subcomplex>,
    pub reduced: bool,
    pub computer: HomologyComputer,
}

impl SpaceHomology {
    pub fn absolute(sub: &Subcomplex, reduced: bool) -> Self {
        let cx = BasedComplex::from_subcomplex(sub, None, reduced);
        SpaceHomology {
            total: sub.clone(),
            rel: None,
            reduced,
            computer: HomologyComputer::new(cx),
        }
    }

    pub fn relative(sub: &Subcomplex, rel: &Subcomplex) -> Self {
        let cx = BasedComplex::from_subcomplex(sub, Some(rel), false);
        SpaceHomology {
            total: sub.clone(),
            rel: Some(rel.clone()),
            reduced: false,
            computer: HomologyComputer::new(cx),
        }
    }

    pub fn group(&self, d: usize) -> FgAbGroup {
        self.computer.group(d)
    }

    pub fn representative(&self, d: usize, g: usize) -> LChain {
        self.computer.representative(d, g)
    }

    pub fn class_of(&self, d: usize, ch: &LChain) -> Result<Vec<BigInt>> {
        self.computer.class_of(d, ch)
    }
}

/// Boundary of a labeled chain taken in the full parent complex (labels are
/// parent cell labels). This is the "lift and differentiate" step used by
/// connecting homomorphisms.
pub fn boundary_in_parent(parent: &Rc<SimplicialComplex>, d: usize, ch: &LChain) -> LChain {
    let mut out = LChain::new();
    if d == 0 {
        return out;
    }
    for (&l, c) in ch {
        let cell = Cell::from_label(l);
        assert_eq!(cell.dim as usize, d);
        for &(f, s) in &parent.facets[d][cell.id as usize] {
            lchain_add(&mut out, Cell::new(d - 1, f).label(), &(c * s));
        }
    }
    out
}

/// The homomorphism induced in degree `d` by a label-level chain map: each
/// domain generator's representative is pushed through `f` and classified in
/// the codomain.
pub fn induced_map(
    dom: &SpaceHomology,
    cod: &SpaceHomology,
    d: usize,
    f: impl Fn(&LChain) -> LChain,
) -> Result<AbHom> {
    let gd = dom.group(d);
    let gc = cod.group(d);
    let mut matrix = vec![vec![BigInt::zero(); gd.num_gens()]; gc.num_gens()];
    for j in 0..gd.num_gens() {
        let rep = dom.representative(d, j);
        let img = f(&rep);
        let coords = cod.class_of(d, &img)?;
        for (i, v) in coords.into_iter().enumerate() {
            matrix[i][j] = v;
        }
    }
    Ok(AbHom::new(gd, gc, matrix))
}

/// Induced map of an inclusion (or a quotient): the chain map is the
/// identity on labels; the codomain's basis does the restriction.
pub fn induced_inclusion(dom: &SpaceHomology, cod: &SpaceHomology, d: usize) -> Result<AbHom> {
    induced_map(dom, cod, d, |ch| ch.clone())
}

/// Connecting homomorphism `H_d(K, L) -> H_{d-1}(L)` of a pair: lift a
/// relative cycle to the absolute complex (same labels), take its boundary
/// there, and read the class in `L`. The class is lift-independent; the
/// boundary landing inside `L` is asserted.
pub fn connecting_hom(pair: &SpaceHomology, lower: &SpaceHomology, d: usize) -> Result<AbHom> {
    let l = pair.rel.as_ref().expect("connecting map needs a relative pair");
    assert!(l.same_as(&lower.total), "lower space must be the pair's divisor");
    let parent = &pair.total.parent;
    let gd = pair.group(d);
    let gc = lower.group(d - 1);
    let mut matrix = vec![vec![BigInt::zero(); gd.num_gens()]; gc.num_gens()];
    for j in 0..gd.num_gens() {
        let rep = pair.representative(d, j);
        let bd = boundary_in_parent(parent, d, &rep);
        for &lab in bd.keys() {
            let cell = Cell::from_label(lab);
            assert!(l.contains(cell), "relative cycle boundary escaped the divisor");
        }
        let coords = lower.class_of(d - 1, &bd)?;
        for (i, v) in coords.into_iter().enumerate() {
            matrix[i][j] = v;
        }
    }
    Ok(AbHom::new(gd, gc, matrix))
}

/// Compactly supported cohomology of a truncation, modeled as cohomology of
/// the pair (Z, truncation frontier) and computed as homology of the
/// transposed relative complex. Degree bookkeeping: `H^k` sits in transposed
/// degree `shift - k` where `shift` is the parent's top dimension.
pub struct CompactCohomology {
    pub shift: usize,
    pub computer: HomologyComputer,
}

impl CompactCohomology {
    pub fn new(z: &Subcomplex, frontier: &Subcomplex) -> Self {
        let cx = BasedComplex::from_subcomplex(z, Some(frontier), false);
        let shift = cx.top_dim();
        CompactCohomology { shift, computer: HomologyComputer::new(cx.transpose()) }
    }

    fn degree(&self, k: usize) -> usize {
        assert!(k <= self.shift);
        self.shift - k
    }

    pub fn group(&self, k: usize) -> FgAbGroup {
        self.computer.group(self.degree(k))
    }

    /// A representative cocycle of generator `g` of `H^k`, as a labeled
    /// cochain (zero on every cell outside the relative basis).
    pub fn representative(&self, k: usize, g: usize) -> LChain {
        self.computer.representative(self.degree(k), g)
    }

    pub fn class_of(&self, k: usize, cochain: &LChain) -> Result<Vec<BigInt>> {
        self.computer.class_of(self.degree(k), cochain)
    }
}

/// Evaluation pairing of a labeled cochain against a labeled chain.
pub fn evaluate(cochain: &LChain, chain: &LChain) -> BigInt {
    let mut acc = BigInt::zero();
    for (l, c) in chain {
        if let Some(v) = cochain.get(l) {
            acc += v * c;
        }
    }
    acc
}

/// The fundamental cycle of a triangulated window rel its boundary sphere:
/// every top simplex with the sign of its vertex-path permutation, so that
/// the chain is a relative cycle inducing compatible orientations.
pub fn fundamental_cycle(window: &Rc<SimplicialComplex>) -> LChain {
    let n = window.top_dim();
    let mut out = LChain::new();
    for (id, s) in window.simplices[n].iter().enumerate() {
        let mut axes = Vec::with_capacity(n);
        for w in s.windows(2) {
            let a = window.verts[w[0] as usize];
            let b = window.verts[w[1] as usize];
            let axis = (0..3).find(|&i| b[i] != a[i]).unwrap();
            debug_assert_eq!(b[axis] - a[axis], 1);
            axes.push(axis);
        }
        let sign = permutation_sign(&axes);
        out.insert(Cell::new(n, id as u32).label(), BigInt::from(sign));
    }
    out
}

fn permutation_sign(p: &[usize]) -> i64 {
    let mut inv = 0;
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            if p[i] > p[j] {
                inv += 1;
            }
        }
    }
    if inv % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Cap product against the window's fundamental cycle: a chain-level map
/// from `k`-cochains to `(n-k)`-chains,
/// `ζ ⌢ φ = Σ_σ ζ_σ · φ(back k-face of σ) · (front (n-k)-face of σ)`.
///
/// Displacement is one simplex: output cells are faces of the very simplices
/// carrying the input cell.
pub struct CapOperator {
    pub window: Rc<SimplicialComplex>,
    pub zeta: LChain,
    /// per k: back-face cell id -> list of (front-face id, coefficient)
    tables: RefCell<HashMap<usize, HashMap<u32, Vec<(u32, i64)>>>>,
}

impl CapOperator {
    pub fn new(window: &Rc<SimplicialComplex>) -> Self {
        CapOperator {
            window: window.clone(),
            zeta: fundamental_cycle(window),
            tables: RefCell::new(HashMap::new()),
        }
    }

    fn ensure_table(&self, k: usize) {
        if self.tables.borrow().contains_key(&k) {
            return;
        }
        let n = self.window.top_dim();
        assert!(k <= n);
        let mut table: HashMap<u32, Vec<(u32, i64)>> = HashMap::new();
        for (lab, coeff) in &self.zeta {
            let cell = Cell::from_label(*lab);
            let s = &self.window.simplices[n][cell.id as usize];
            let back: Vec<u32> = s[n - k..].to_vec();
            let front: Vec<u32> = s[..n - k + 1].to_vec();
            let back_id = *self.window.simp_index[k].get(&back).unwrap();
            let front_id = *self.window.simp_index[n - k].get(&front).unwrap();
            let c: i64 = coeff.try_into().unwrap();
            table.entry(back_id).or_default().push((front_id, c));
        }
        self.tables.borrow_mut().insert(k, table);
    }

    /// `ζ ⌢ φ` for a labeled `k`-cochain `φ`.
    pub fn cap(&self, k: usize, phi: &LChain) -> LChain {
        self.ensure_table(k);
        let n = self.window.top_dim();
        let tables = self.tables.borrow();
        let table = &tables[&k];
        let mut out = LChain::new();
        for (&lab, v) in phi {
            let cell = Cell::from_label(lab);
            if cell.dim as usize != k {
                continue;
            }
            if let Some(hits) = table.get(&cell.id) {
                for &(front, c) in hits {
                    lchain_add(&mut out, Cell::new(n - k, front).label(), &(v * c));
                }
            }
        }
        out
    }

    /// Largest lattice distance between an input cell and the cells of its
    /// image under the cap (the operator's measured displacement).
    pub fn measured_displacement(&self, k: usize) -> u32 {
        self.ensure_table(k);
        let tables = self.tables.borrow();
        let mut worst = 0;
        for (&back, hits) in &tables[&k] {
            let bv = self.window.simplices[k][back as usize][0];
            for &(front, _) in hits {
                for &fv in &self.window.simplices[self.window.top_dim() - k][front as usize] {
                    worst = worst.max(self.window.lattice_distance(bv, fv));
                }
            }
        }
        worst
    }
}

/// Exactness audit for the long exact sequence of a pair `(K, L)`:
/// at every degree in `1..=top`, check `im = ker` at the three positions
/// `H_d(L) → H_d(K) → H_d(K,L) → H_{d-1}(L)` (reduced in degree 0 so the
/// tail stays exact).
pub fn pair_les_exact(sub: &Subcomplex, rel: &Subcomplex, top: usize) -> Result<bool> {
    let l = SpaceHomology::absolute(rel, true);
    let k = SpaceHomology::absolute(sub, true);
    let pair = SpaceHomology::relative(sub, rel);
    for d in 1..=top {
        let i_low = induced_inclusion(&l, &k, d)?;
        let j_low = induced_inclusion(&k, &pair, d)?;
        let del = connecting_hom(&pair, &l, d)?;
        let i_next = induced_inclusion(&l, &k, d - 1)?;
        if !crate::linalg::subgroups_equal(
            &i_low.cod,
            &crate::linalg::hom_image(&i_low).gens,
            &crate::linalg::hom_kernel(&j_low).gens,
        ) {
            return Ok(false);
        }
        if !crate::linalg::subgroups_equal(
            &j_low.cod,
            &crate::linalg::hom_image(&j_low).gens,
            &crate::linalg::hom_kernel(&del).gens,
        ) {
            return Ok(false);
        }
        if !crate::linalg::subgroups_equal(
            &del.cod,
            &crate::linalg::hom_image(&del).gens,
            &crate::linalg::hom_kernel(&i_next).gens,
        ) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Verify the chain-map law `∂ ∘ f = f ∘ ∂` for a label-level map between
/// two based complexes, on every basis cell of the domain in degrees
/// `1..=top`.
pub fn verify_chain_map(
    dom: &BasedComplex,
    cod: &BasedComplex,
    f: impl Fn(usize, &LChain) -> LChain,
    top: usize,
) -> bool {
    for d in 1..=top.min(dom.top_dim()) {
        for i in 0..dom.size(d) {
            let x: LChain = [(dom.labels[d][i], BigInt::one())].into_iter().collect();
            let fx = f(d, &x);
            let b_fx = cod.boundary_lchain(d, &fx);
            let bx = dom.boundary_lchain(d, &x);
            let f_bx = f(d - 1, &bx);
            // compare after restriction to the codomain basis
            let lhs = cod.to_coords(d - 1, &b_fx);
            let rhs = cod.to_coords(d - 1, &f_bx);
            if lhs != rhs {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_window, window_boundary};

    fn axis_subcomplex(w: &Rc<SimplicialComplex>) -> Subcomplex {
        let cells = (0..w.simplex_count(1)).filter_map(|id| {
            let vs = &w.simplices[1][id];
            let a = w.verts[vs[0] as usize];
            let b = w.verts[vs[1] as usize];
            if a[0] == 0 && a[1] == 0 && b[0] == 0 && b[1] == 0 {
                Some(Cell::new(1, id as u32))
            } else {
                None
            }
        });
        Subcomplex::from_cells(w, cells)
    }

    #[test]
    fn fundamental_cycle_boundary_is_the_sphere() {
        for (n, s) in [(1usize, 3i64), (2, 2), (3, 2)] {
            let w = build_window(n, s, None).unwrap();
            let z = fundamental_cycle(&w);
            assert_eq!(z.len(), w.simplex_count(n));
            let bz = boundary_in_parent(&w, n, &z);
            let sphere = window_boundary(&w);
            assert_eq!(bz.len(), sphere.counts[n - 1], "n={n}");
            for (l, c) in &bz {
                let cell = Cell::from_label(*l);
                assert!(sphere.contains(cell), "n={n}: boundary escaped the sphere");
                assert_eq!(c.magnitude(), BigInt::one().magnitude());
            }
        }
    }

    #[test]
    fn relative_fundamental_class_generates() {
        let w = build_window(3, 2, None).unwrap();
        let all = w.full_subcomplex();
        let sphere = window_boundary(&w);
        let pair = SpaceHomology::relative(&all, &sphere);
        assert_eq!(pair.group(3), FgAbGroup::free(1));
        let z = fundamental_cycle(&w);
        let c = pair.class_of(3, &z).unwrap();
        assert_eq!(c[0].magnitude(), BigInt::one().magnitude());
    }

    #[test]
    fn connecting_map_interval() {
        let w = build_window(1, 3, None).unwrap();
        let all = w.full_subcomplex();
        let ends =
            Subcomplex::from_cells(&w, [Cell::new(0, 0), Cell::new(0, 6)]);
        let pair = SpaceHomology::relative(&all, &ends);
        let lower = SpaceHomology::absolute(&ends, true);
        assert_eq!(pair.group(1), FgAbGroup::free(1));
        assert_eq!(lower.group(0), FgAbGroup::free(1));
        let del = connecting_hom(&pair, &lower, 1).unwrap();
        assert!(crate::linalg::hom_is_iso(&del));
    }

    #[test]
    fn connecting_map_window_pair_is_iso() {
        // X contractible: ∂ : H_{d}(X, Y) -> H̃_{d-1}(Y) is an isomorphism
        let w = build_window(3, 6, None).unwrap();
        let axis = axis_subcomplex(&w);
        let y = axis.iterated_star(2).complement_closure();
        let all = w.full_subcomplex();
        let pair = SpaceHomology::relative(&all, &y);
        let lower = SpaceHomology::absolute(&y, true);
        for d in 1..=3usize {
            let del = connecting_hom(&pair, &lower, d).unwrap();
            assert!(crate::linalg::hom_is_iso(&del), "degree {d}");
        }
        assert_eq!(pair.group(2), FgAbGroup::free(1)); // dual to H_1(Y) = Z
    }

    #[test]
    fn les_of_pair_is_exact() {
        let w = build_window(2, 3, None).unwrap();
        let center = Subcomplex::from_cells(
            &w,
            [Cell::new(0, *w.vert_index.get(&[0, 0, 0]).unwrap())],
        );
        let n1 = center.iterated_star(1);
        let ann = n1.complement_closure();
        assert!(pair_les_exact(&w.full_subcomplex(), &ann, 2).unwrap());
    }

    #[test]
    fn compact_cohomology_of_interval() {
        // a line truncated to a window: H^1_c = Z, H^0_c = 0
        let w = build_window(1, 5, None).unwrap();
        let all = w.full_subcomplex();
        let fr = window_boundary(&w);
        let hc = CompactCohomology::new(&all, &fr);
        assert_eq!(hc.group(1), FgAbGroup::free(1));
        assert_eq!(hc.group(0), FgAbGroup::trivial());
    }

    #[test]
    fn compact_cohomology_of_window_ball() {
        // R^3 truncated: H^k_c = Z for k = 3, else 0
        let w = build_window(3, 2, None).unwrap();
        let all = w.full_subcomplex();
        let fr = window_boundary(&w);
        let hc = CompactCohomology::new(&all, &fr);
        for k in 0..=3usize {
            let expect = if k == 3 { FgAbGroup::free(1) } else { FgAbGroup::trivial() };
            assert_eq!(hc.group(k), expect, "k={k}");
        }
    }

    #[test]
    fn cap_operator_is_a_chain_map_and_duality_iso_interval() {
        let w = build_window(1, 4, None).unwrap();
        let cap = CapOperator::new(&w);
        assert!(cap.measured_displacement(1) <= 1);
        // H^1_c(interval) -> H_0(interval): cap with the fundamental cycle
        let all = w.full_subcomplex();
        let fr = window_boundary(&w);
        let hc = CompactCohomology::new(&all, &fr);
        let h0 = SpaceHomology::absolute(&all, false);
        let phi = hc.representative(1, 0);
        let capped = cap.cap(1, &phi);
        let c = h0.class_of(0, &capped).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].magnitude(), BigInt::one().magnitude());
    }

    #[test]
    fn cap_duality_on_window_3d() {
        // Lefschetz duality for the ball: H^k(X rel ∂X) ≅ H_{3-k}(X)
        let w = build_window(3, 2, None).unwrap();
        let all = w.full_subcomplex();
        let fr = window_boundary(&w);
        let hc = CompactCohomology::new(&all, &fr);
        let cap = CapOperator::new(&w);
        let h = SpaceHomology::absolute(&all, false);
        // k = 3 -> degree 0
        let phi = hc.representative(3, 0);
        let capped = cap.cap(3, &phi);
        let c = h.class_of(0, &capped).unwrap();
        assert_eq!(c[0].magnitude(), BigInt::one().magnitude());
        // k = 0: constant cochain caps to the fundamental class rel boundary
        let ones: LChain =
            (0..w.simplex_count(0)).map(|i| (Cell::new(0, i as u32).label(), BigInt::one())).collect();
        let capped = cap.cap(0, &ones);
        let pair = SpaceHomology::relative(&all, &fr);
        let c = pair.class_of(3, &capped).unwrap();
        assert_eq!(c[0].magnitude(), BigInt::one().magnitude());
    }
}
