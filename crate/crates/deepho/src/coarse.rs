//! Coarse maps between lattice complexes: sampled control-function
//! estimation, chain-level approximation by local fills, and controlled
//! chain homotopies between approximations.
//!
//! A coarse map is given on vertices only. Its chain-level approximation is
//! built degree by degree: the image of a simplex is any chain filling the
//! image of its boundary, found inside a star neighborhood of the image
//! vertices that grows until an integer solve succeeds. All fills are
//! deterministic; two different deterministic fill orders give two honest
//! approximations of the same map, which a controlled homotopy then relates.

use crate::chain::{lchain_add, lchain_add_scaled, BasedComplex, LChain};
use crate::error::{Error, Result};
use crate::grid::{Cell, SimplicialComplex, Subcomplex, VertId};
use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;
use std::rc::Rc;

/// Fills give up beyond this star radius around the image vertices.
pub const MAX_FILL_RADIUS: u32 = 8;

/// A vertex-level map between complexes. The codomain must be a lattice
/// window (its metric is used for all distance measurements); the domain may
/// be any finite complex, measured with its edge-path metric.
pub struct CoarseMap {
    pub dom: Rc<SimplicialComplex>,
    pub cod: Rc<SimplicialComplex>,
    pub vertex_image: Vec<VertId>,
}

impl CoarseMap {
    pub fn new(
        dom: &Rc<SimplicialComplex>,
        cod: &Rc<SimplicialComplex>,
        vertex_image: Vec<VertId>,
    ) -> Self {
        assert_eq!(vertex_image.len(), dom.verts.len());
        assert!(vertex_image.iter().all(|&w| (w as usize) < cod.verts.len()));
        CoarseMap { dom: dom.clone(), cod: cod.clone(), vertex_image }
    }

    /// The identity sample of a window onto itself.
    pub fn identity(window: &Rc<SimplicialComplex>) -> Self {
        let n = window.verts.len() as VertId;
        CoarseMap::new(window, window, (0..n).collect())
    }
}

/// Sampled distortion data for a coarse map: monotone staircase envelopes
/// around the graph of domain distance vs. image distance.
pub struct ControlEstimate {
    /// `upper[t]` bounds the image distance of every sampled pair at domain
    /// distance <= t; non-decreasing.
    pub upper: Vec<u32>,
    /// `lower[t]` is the least image distance among sampled pairs at domain
    /// distance >= t; non-decreasing.
    pub lower: Vec<u32>,
    pub samples: usize,
    /// Empirical properness: far-apart pairs must stop landing on top of
    /// each other within half the sampled distance range; a lower envelope
    /// flatlining at zero means the map collapses unbounded sets.
    pub proper: bool,
}

/// Estimate control functions from `n_sources` BFS samples (deterministic
/// for a fixed seed). Pairs are (source, every other sampled vertex).
pub fn estimate_controls(map: &CoarseMap, n_sources: usize, seed: u64) -> ControlEstimate {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut verts: Vec<VertId> = (0..map.dom.verts.len() as VertId).collect();
    verts.shuffle(&mut rng);
    let sources = &verts[..n_sources.min(verts.len())];

    // by_dist[t] collects observed image distances at domain distance t
    let mut by_dist: Vec<Vec<u32>> = Vec::new();
    let mut samples = 0;
    for &s in sources {
        let dist = map.dom.bfs_distances(s);
        for &t in sources {
            if t <= s || dist[t as usize] == u32::MAX {
                continue;
            }
            let dd = dist[t as usize] as usize;
            let dc = map.cod.lattice_distance(map.vertex_image[s as usize], map.vertex_image[t as usize]);
            if by_dist.len() <= dd {
                by_dist.resize(dd + 1, Vec::new());
            }
            by_dist[dd].push(dc);
            samples += 1;
        }
    }
    let tmax = by_dist.len().saturating_sub(1);
    let mut upper = vec![0u32; tmax + 1];
    let mut lower = vec![u32::MAX; tmax + 1];
    let mut run = 0u32;
    for t in 0..=tmax {
        if let Some(&m) = by_dist[t].iter().max() {
            run = run.max(m);
        }
        upper[t] = run;
    }
    let mut tail = u32::MAX;
    for t in (0..=tmax).rev() {
        if let Some(&m) = by_dist[t].iter().min() {
            tail = tail.min(m);
        }
        lower[t] = tail;
    }
    // Far pairs may collide in a bounded window, but for a proper map the
    // collisions must die out well inside the sampled range: by half of it,
    // the least observed image distance has to be positive.
    let proper = tmax >= 2 && lower[tmax.div_ceil(2)] > 0;
    ControlEstimate { upper, lower, samples, proper }
}

/// Which end of the local cell ordering the integer solver prefers when a
/// fill has many solutions. Both orders give valid approximations.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FillOrder {
    Forward,
    Reverse,
}

/// Fill `z` (a cycle-like chain of dimension `d - 1` in the codomain) by a
/// chain of dimension `d` supported near `seeds`, growing the neighborhood
/// until the integer solve succeeds.
fn local_fill(
    cod: &Rc<SimplicialComplex>,
    seeds: &BTreeSet<VertId>,
    d: usize,
    z: &LChain,
    order: FillOrder,
    who: Cell,
) -> Result<LChain> {
    for radius in 1..=MAX_FILL_RADIUS {
        let base = Subcomplex::from_cells(cod, seeds.iter().map(|&v| Cell::new(0, v)));
        let u = base.iterated_star(radius);
        if z.keys().any(|&l| !u.contains(Cell::from_label(l))) {
            continue; // the boundary image itself must sit inside U
        }
        let bc = BasedComplex::from_subcomplex(&u, None, false);
        if d > bc.top_dim() {
            continue;
        }
        let mut a = bc.boundary_matrix(d);
        let ncols = a.cols;
        if order == FillOrder::Reverse {
            a = reverse_columns(&a);
        }
        let b = bc.to_coords(d - 1, z);
        if let Some(x) = crate::linalg::solve_integer_linear(&a, &b) {
            let mut out = LChain::new();
            for (j, v) in x.iter().enumerate() {
                if v.is_zero() {
                    continue;
                }
                let col = if order == FillOrder::Reverse { ncols - 1 - j } else { j };
                lchain_add(&mut out, bc.labels[d][col], v);
            }
            return Ok(out);
        }
    }
    Err(Error::FillFailed { dim: who.dim as usize, id: who.id, radius: MAX_FILL_RADIUS })
}

/// When the images of a simplex's vertices span a codomain simplex of the
/// same dimension, that simplex with the permutation sign of the vertex
/// images is the canonical fill candidate.
fn simplicial_candidate(cod: &SimplicialComplex, imgs: &[VertId], d: usize) -> Option<LChain> {
    let mut sorted = imgs.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|p| p[0] == p[1]) {
        return None;
    }
    let id = *cod.simp_index[d].get(&sorted)?;
    let mut inversions = 0;
    for i in 0..imgs.len() {
        for j in i + 1..imgs.len() {
            if imgs[i] > imgs[j] {
                inversions += 1;
            }
        }
    }
    let sign = if inversions % 2 == 0 { BigInt::one() } else { -BigInt::one() };
    let mut ch = LChain::new();
    ch.insert(Cell::new(d, id).label(), sign);
    Some(ch)
}

fn reverse_columns(a: &crate::linalg::SparseIntMatrix) -> crate::linalg::SparseIntMatrix {
    let mut out = crate::linalg::SparseIntMatrix::new(a.rows, a.cols);
    for (r, c, v) in a.iter() {
        out.set(r, a.cols - 1 - c, v.clone());
    }
    out
}

/// A chain-level approximation of a coarse map: one codomain chain per
/// domain simplex, satisfying the chain map law exactly.
#[derive(Clone)]
pub struct ChainApprox {
    pub dom: Rc<SimplicialComplex>,
    pub cod: Rc<SimplicialComplex>,
    pub vertex_image: Vec<VertId>,
    /// `images[d][id]` is the image chain of simplex `d#id`, in codomain labels.
    pub images: Vec<Vec<LChain>>,
    /// Measured approximation constant: how far image supports stray from
    /// the images of the simplex's own vertices.
    pub displacement: u32,
    pub order: FillOrder,
}

/// Build a chain approximation of `map` by inductive local fills.
pub fn approximate_chain_map(map: &CoarseMap, order: FillOrder) -> Result<ChainApprox> {
    let dom = &map.dom;
    let cod = &map.cod;
    let mut images: Vec<Vec<LChain>> = Vec::with_capacity(dom.top_dim() + 1);

    let mut verts = Vec::with_capacity(dom.verts.len());
    for &w in &map.vertex_image {
        let mut ch = LChain::new();
        ch.insert(Cell::new(0, w).label(), BigInt::one());
        verts.push(ch);
    }
    images.push(verts);

    for d in 1..=dom.top_dim() {
        let mut level = Vec::with_capacity(dom.simplices[d].len());
        for id in 0..dom.simplices[d].len() as u32 {
            let cell = Cell::new(d, id);
            // z = f_#(boundary of the simplex), already defined in dim d-1
            let mut z = LChain::new();
            for &(fid, s) in dom.boundary_of(cell) {
                lchain_add_scaled(&mut z, &images[d - 1][fid as usize], &BigInt::from(s));
            }
            let imgs: Vec<VertId> =
                dom.vertices_of(cell).iter().map(|&v| map.vertex_image[v as usize]).collect();
            let filled = if z.is_empty() {
                LChain::new()
            } else {
                match simplicial_candidate(cod, &imgs, d) {
                    Some(c) if boundary_lchain_in(cod, d, &c) == z => c,
                    _ => {
                        let seeds: BTreeSet<VertId> = imgs.iter().copied().collect();
                        local_fill(cod, &seeds, d, &z, order, cell)?
                    }
                }
            };
            level.push(filled);
        }
        images.push(level);
    }

    let mut approx = ChainApprox {
        dom: dom.clone(),
        cod: cod.clone(),
        vertex_image: map.vertex_image.clone(),
        images,
        displacement: 0,
        order,
    };
    approx.displacement = approx.measure_displacement();
    Ok(approx)
}

impl ChainApprox {
    fn measure_displacement(&self) -> u32 {
        let mut m = 0;
        for d in 0..self.images.len() {
            for (id, ch) in self.images[d].iter().enumerate() {
                let imgs: Vec<VertId> = self
                    .dom
                    .vertices_of(Cell::new(d, id as u32))
                    .iter()
                    .map(|&v| self.vertex_image[v as usize])
                    .collect();
                for &l in ch.keys() {
                    let c = Cell::from_label(l);
                    for &w in self.cod.vertices_of(c) {
                        let near =
                            imgs.iter().map(|&u| self.cod.lattice_distance(u, w)).min().unwrap();
                        m = m.max(near);
                    }
                }
            }
        }
        m
    }

    /// Linear extension to label chains of dimension `d`.
    pub fn push(&self, ch: &LChain) -> LChain {
        let mut out = LChain::new();
        for (&l, v) in ch {
            let c = Cell::from_label(l);
            lchain_add_scaled(&mut out, &self.images[c.dim as usize][c.id as usize], v);
        }
        out
    }

    /// The closed support of the whole image: the smallest subcomplex of the
    /// codomain containing every image chain.
    pub fn support(&self) -> Subcomplex {
        let cells = self
            .images
            .iter()
            .flatten()
            .flat_map(|ch| ch.keys().copied().map(Cell::from_label));
        Subcomplex::from_cells(&self.cod, cells)
    }

    /// Exact chain map audit: boundary of the image equals image of the
    /// boundary for every simplex (with the vertex level checked against
    /// augmentation: image chains of vertices are single vertices).
    pub fn verify(&self) -> bool {
        for d in 1..self.images.len() {
            for id in 0..self.images[d].len() {
                let cell = Cell::new(d, id as u32);
                let mut want = LChain::new();
                for &(fid, s) in self.dom.boundary_of(cell) {
                    lchain_add_scaled(&mut want, &self.images[d - 1][fid as usize], &BigInt::from(s));
                }
                let got = boundary_lchain_in(&self.cod, d, &self.images[d][id]);
                if got != want {
                    return false;
                }
            }
        }
        self.images[0].iter().all(|ch| ch.len() == 1 && ch.values().all(|v| v.is_one()))
    }
}

/// Boundary of a codomain label chain, read off the parent complex.
fn boundary_lchain_in(cod: &SimplicialComplex, d: usize, ch: &LChain) -> LChain {
    let mut out = LChain::new();
    for (&l, v) in ch {
        let c = Cell::from_label(l);
        debug_assert_eq!(c.dim as usize, d);
        for &(fid, s) in &cod.facets[d][c.id as usize] {
            lchain_add(&mut out, Cell::new(d - 1, fid).label(), &(v * BigInt::from(s)));
        }
    }
    out
}

/// A chain homotopy `H` between two approximations `a`, `b` of coarse maps:
/// `boundary(H s) + H(boundary s) = a(s) - b(s)` degree by degree.
pub struct ChainHomotopy {
    /// `terms[d][id]`: the degree `d+1` codomain chain attached to `d#id`.
    pub terms: Vec<Vec<LChain>>,
    /// Measured homotopy control: how far the homotopy chains stray from the
    /// two image vertex sets.
    pub displacement: u32,
}

/// Build a controlled homotopy between two chain approximations over the
/// same domain and codomain (their vertex maps may differ, as long as each
/// pair of image vertices can be joined near by).
pub fn controlled_homotopy(a: &ChainApprox, b: &ChainApprox) -> Result<ChainHomotopy> {
    assert!(Rc::ptr_eq(&a.dom, &b.dom) && Rc::ptr_eq(&a.cod, &b.cod));
    let dom = &a.dom;
    let cod = &a.cod;
    let mut terms: Vec<Vec<LChain>> = Vec::with_capacity(dom.top_dim() + 1);
    let mut displacement = 0u32;

    for d in 0..=dom.top_dim() {
        let mut level = Vec::with_capacity(dom.simplices[d].len());
        for id in 0..dom.simplices[d].len() as u32 {
            let cell = Cell::new(d, id);
            // target = a(s) - b(s) - H(boundary s), to be filled in dim d+1
            let mut z = a.images[d][id as usize].clone();
            lchain_add_scaled(&mut z, &b.images[d][id as usize], &BigInt::from(-1));
            if d >= 1 {
                for &(fid, s) in dom.boundary_of(cell) {
                    lchain_add_scaled(&mut z, &terms[d - 1][fid as usize], &BigInt::from(-s));
                }
            }
            let h = if z.is_empty() {
                LChain::new()
            } else {
                let seeds: BTreeSet<VertId> = dom
                    .vertices_of(cell)
                    .iter()
                    .flat_map(|&v| {
                        [a.vertex_image[v as usize], b.vertex_image[v as usize]]
                    })
                    .collect();
                let h = local_fill(cod, &seeds, d + 1, &z, a.order, cell)?;
                for &l in h.keys() {
                    for &w in cod.vertices_of(Cell::from_label(l)) {
                        let near = seeds.iter().map(|&u| cod.lattice_distance(u, w)).min().unwrap();
                        displacement = displacement.max(near);
                    }
                }
                h
            };
            level.push(h);
        }
        terms.push(level);
    }
    Ok(ChainHomotopy { terms, displacement })
}

/// Exact audit of the homotopy identity on every simplex.
pub fn verify_homotopy(a: &ChainApprox, b: &ChainApprox, h: &ChainHomotopy) -> bool {
    let dom = &a.dom;
    let cod = &a.cod;
    for d in 0..=dom.top_dim() {
        for id in 0..dom.simplices[d].len() as u32 {
            let cell = Cell::new(d, id);
            let mut lhs = boundary_lchain_in(cod, d + 1, &h.terms[d][id as usize]);
            if d >= 1 {
                for &(fid, s) in dom.boundary_of(cell) {
                    lchain_add_scaled(&mut lhs, &h.terms[d - 1][fid as usize], &BigInt::from(s));
                }
            }
            let mut rhs = a.images[d][id as usize].clone();
            lchain_add_scaled(&mut rhs, &b.images[d][id as usize], &BigInt::from(-1));
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
    use crate::grid::build_window;

    fn vid(w: &SimplicialComplex, p: [i64; 3]) -> VertId {
        w.vert_index[&p]
    }

    #[test]
    fn identity_map_has_zero_displacement() {
        let w = build_window(2, 3, None).unwrap();
        let f = approximate_chain_map(&CoarseMap::identity(&w), FillOrder::Forward).unwrap();
        assert!(f.verify());
        assert_eq!(f.displacement, 0);
        // the image of each simplex is the simplex itself
        for d in 0..=2 {
            for (id, ch) in f.images[d].iter().enumerate() {
                assert_eq!(ch.len(), 1);
                assert!(ch.contains_key(&Cell::new(d, id as u32).label()));
            }
        }
    }

    #[test]
    fn doubling_the_line_stretches_edges() {
        let w = build_window(1, 8, None).unwrap();
        let img: Vec<VertId> =
            (0..w.verts.len()).map(|v| vid(&w, [(w.verts[v][0] * 2).clamp(-8, 8), 0, 0])).collect();
        let f = approximate_chain_map(&CoarseMap::new(&w, &w, img), FillOrder::Forward).unwrap();
        assert!(f.verify());
        // interior edges map to two-edge chains
        let e = w.simp_index[1][&vec![vid(&w, [0, 0, 0]), vid(&w, [1, 0, 0])]];
        assert_eq!(f.images[1][e as usize].len(), 2);
        assert!(f.displacement <= 2);
    }

    #[test]
    fn shear_map_on_plane_fills_squares() {
        // (x, y) -> (x + y, y) on a window, clamped: a genuine simplicial
        // distortion whose fills must cross square diagonals.
        let w = build_window(2, 5, None).unwrap();
        let img: Vec<VertId> = (0..w.verts.len())
            .map(|v| {
                let p = w.verts[v];
                vid(&w, [(p[0] + p[1]).clamp(-5, 5), p[1], 0])
            })
            .collect();
        let f = approximate_chain_map(&CoarseMap::new(&w, &w, img), FillOrder::Forward).unwrap();
        assert!(f.verify());
        assert!(f.displacement <= 3);
    }

    #[test]
    fn two_fill_orders_are_homotopic_with_small_control() {
        let w = build_window(2, 5, None).unwrap();
        let img: Vec<VertId> = (0..w.verts.len())
            .map(|v| {
                let p = w.verts[v];
                vid(&w, [(p[0] + p[1]).clamp(-5, 5), p[1], 0])
            })
            .collect();
        let m = CoarseMap::new(&w, &w, img);
        let a = approximate_chain_map(&m, FillOrder::Forward).unwrap();
        let b = approximate_chain_map(&m, FillOrder::Reverse).unwrap();
        assert!(b.verify());
        let h = controlled_homotopy(&a, &b).unwrap();
        assert!(verify_homotopy(&a, &b, &h));
        assert!(h.displacement <= 3);
    }

    #[test]
    fn nearby_vertex_maps_are_homotopic() {
        // identity vs. shift-by-one (clamped): different vertex maps, still
        // connected by a controlled homotopy with degree-0 paths.
        let w = build_window(1, 6, None).unwrap();
        let ident = approximate_chain_map(&CoarseMap::identity(&w), FillOrder::Forward).unwrap();
        let img: Vec<VertId> =
            (0..w.verts.len()).map(|v| vid(&w, [(w.verts[v][0] + 1).min(6), 0, 0])).collect();
        let shift =
            approximate_chain_map(&CoarseMap::new(&w, &w, img), FillOrder::Forward).unwrap();
        let h = controlled_homotopy(&ident, &shift).unwrap();
        assert!(verify_homotopy(&ident, &shift, &h));
        assert!(h.displacement <= 1);
    }

    #[test]
    fn controls_flag_a_collapsing_projection() {
        let w = build_window(2, 6, None).unwrap();
        // projection to the x-axis: not proper
        let proj: Vec<VertId> =
            (0..w.verts.len()).map(|v| vid(&w, [w.verts[v][0], 0, 0])).collect();
        let est = estimate_controls(&CoarseMap::new(&w, &w, proj), 40, 7);
        assert!(!est.proper);

        let est_id = estimate_controls(&CoarseMap::identity(&w), 40, 7);
        assert!(est_id.proper);
        assert!(est_id.upper.windows(2).all(|p| p[0] <= p[1]));
        assert!(est_id.lower.windows(2).all(|p| p[0] <= p[1]));
        // identity distorts nothing: envelopes match distances where sampled
        let t = est_id.upper.len() - 1;
        assert_eq!(est_id.upper[t] as usize, t);
    }

    #[test]
    fn support_is_a_closed_subcomplex_near_the_image() {
        let w = build_window(2, 5, None).unwrap();
        let img: Vec<VertId> =
            (0..w.verts.len()).map(|v| vid(&w, [w.verts[v][0], w.verts[v][1].max(0), 0])).collect();
        let f = approximate_chain_map(&CoarseMap::new(&w, &w, img), FillOrder::Forward).unwrap();
        assert!(f.verify());
        let k = f.support();
        // everything in the support lies within the measured displacement of
        // the image half-plane
        for v in k.vertex_ids() {
            assert!(w.verts[v as usize][1] >= -(f.displacement as i64));
        }
    }
}
