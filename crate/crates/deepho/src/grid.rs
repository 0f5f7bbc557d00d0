//! Finite simplicial complexes on cubical lattice windows.
//!
//! Windows `[-S, S]^n` (n <= 3) carry the standard triangulation of the unit
//! cube lattice into n! simplices per cube (ordered-path subdivision), so all
//! neighborhood and complement operations stay purely combinatorial.

use crate::error::{Error, Result};
use std::collections::HashMap;
use std::rc::Rc;

pub type VertId = u32;
pub type SimpId = u32;

/// Reference to a simplex: dimension plus index within that dimension.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell {
    pub dim: u8,
    pub id: SimpId,
}

impl Cell {
    pub fn new(dim: usize, id: SimpId) -> Self {
        Cell { dim: dim as u8, id }
    }
    /// Packed label, stable across subcomplexes of one parent complex.
    pub fn label(&self) -> u64 {
        ((self.dim as u64) << 32) | self.id as u64
    }
    pub fn from_label(l: u64) -> Self {
        Cell { dim: (l >> 32) as u8, id: l as u32 }
    }
}

/// A finite simplicial complex with vertices at integer lattice points.
///
/// Simplices are stored per dimension as ascending vertex-id lists; vertex
/// ids are assigned in lexicographic coordinate order, so "orient by
/// increasing vertex id" is a global orientation convention.
pub struct SimplicialComplex {
    pub ambient_dim: usize,
    pub verts: Vec<[i64; 3]>,
    pub vert_index: HashMap<[i64; 3], VertId>,
    /// simplices[d][id] = ascending vertex ids
    pub simplices: Vec<Vec<Vec<VertId>>>,
    pub simp_index: Vec<HashMap<Vec<VertId>, SimpId>>,
    /// facets[d][id] = (facet id in dim d-1, incidence sign); d >= 1
    pub facets: Vec<Vec<Vec<(SimpId, i32)>>>,
    /// cofacets[d][id] = ids in dim d+1 having this simplex as a facet
    pub cofacets: Vec<Vec<Vec<SimpId>>>,
    /// all simplices incident to each vertex
    pub vert_stars: Vec<Vec<Cell>>,
    /// lattice half-width when built as a window (None for abstract complexes)
    pub window_halfwidth: Option<i64>,
}

impl SimplicialComplex {
    pub fn top_dim(&self) -> usize {
        self.simplices.len() - 1
    }

    pub fn num_simplices(&self) -> usize {
        self.simplices.iter().map(|v| v.len()).sum()
    }

    pub fn simplex_count(&self, d: usize) -> usize {
        self.simplices.get(d).map_or(0, |v| v.len())
    }

    pub fn vertices_of(&self, c: Cell) -> &[VertId] {
        &self.simplices[c.dim as usize][c.id as usize]
    }

    /// Build from vertex coordinates and top-dimensional (or mixed) simplex
    /// list, closing under faces. Vertex coordinates must be unique.
    pub fn from_simplices(
        ambient_dim: usize,
        mut vert_coords: Vec<[i64; 3]>,
        simplex_vertex_sets: Vec<Vec<[i64; 3]>>,
    ) -> Self {
        vert_coords.sort();
        vert_coords.dedup();
        let vert_index: HashMap<[i64; 3], VertId> =
            vert_coords.iter().enumerate().map(|(i, &c)| (c, i as VertId)).collect();

        let top = simplex_vertex_sets
            .iter()
            .map(|vs| {
                let mut ids: Vec<VertId> = vs
                    .iter()
                    .map(|c| *vert_index.get(c).expect("simplex vertex missing from list"))
                    .collect();
                ids.sort_unstable();
                ids.dedup();
                ids
            })
            .collect::<Vec<_>>();

        let max_dim = top.iter().map(|s| s.len() - 1).max().unwrap_or(0);
        let mut index: Vec<HashMap<Vec<VertId>, SimpId>> = vec![HashMap::new(); max_dim + 1];
        // every vertex is a simplex
        for i in 0..vert_coords.len() {
            index[0].insert(vec![i as VertId], i as SimpId);
        }
        // close under faces, top-down insertion
        let mut stack: Vec<Vec<VertId>> = top;
        while let Some(s) = stack.pop() {
            let d = s.len() - 1;
            if d == 0 {
                continue;
            }
            if index[d].contains_key(&s) {
                continue;
            }
            let id = index[d].len() as SimpId;
            index[d].insert(s.clone(), id);
            for omit in 0..s.len() {
                let mut f = s.clone();
                f.remove(omit);
                if f.len() >= 2 && !index[f.len() - 1].contains_key(&f) {
                    stack.push(f);
                }
            }
        }

        let mut simplices: Vec<Vec<Vec<VertId>>> = Vec::with_capacity(max_dim + 1);
        for d in 0..=max_dim {
            let mut v: Vec<(Vec<VertId>, SimpId)> =
                index[d].iter().map(|(k, &i)| (k.clone(), i)).collect();
            v.sort_by_key(|(_, i)| *i);
            simplices.push(v.into_iter().map(|(k, _)| k).collect());
        }

        let mut cx = SimplicialComplex {
            ambient_dim,
            verts: vert_coords,
            vert_index,
            simplices,
            simp_index: index,
            facets: Vec::new(),
            cofacets: Vec::new(),
            vert_stars: Vec::new(),
            window_halfwidth: None,
        };
        cx.build_incidence();
        cx
    }

    fn build_incidence(&mut self) {
        let top = self.top_dim();
        self.facets = vec![Vec::new(); top + 1];
        self.cofacets = vec![Vec::new(); top + 1];
        for d in 0..=top {
            self.cofacets[d] = vec![Vec::new(); self.simplices[d].len()];
        }
        for d in 1..=top {
            let mut fac = Vec::with_capacity(self.simplices[d].len());
            for (id, s) in self.simplices[d].iter().enumerate() {
                let mut fs = Vec::with_capacity(s.len());
                for omit in 0..s.len() {
                    let mut f = s.clone();
                    f.remove(omit);
                    let fid = *self.simp_index[d - 1].get(&f).expect("face closure violated");
                    let sign = if omit % 2 == 0 { 1 } else { -1 };
                    fs.push((fid, sign));
                    self.cofacets[d - 1][fid as usize].push(id as SimpId);
                }
                fac.push(fs);
            }
            self.facets[d] = fac;
        }
        self.vert_stars = vec![Vec::new(); self.verts.len()];
        for d in 0..=top {
            for (id, s) in self.simplices[d].iter().enumerate() {
                for &v in s {
                    self.vert_stars[v as usize].push(Cell::new(d, id as SimpId));
                }
            }
        }
    }

    /// Boundary of a simplex as (facet cell, sign) pairs; empty in dim 0.
    pub fn boundary_of(&self, c: Cell) -> &[(SimpId, i32)] {
        if c.dim == 0 {
            &[]
        } else {
            &self.facets[c.dim as usize][c.id as usize]
        }
    }

    /// Lattice 1-skeleton distance between two window vertices. Valid for
    /// window complexes (convexity makes monotone paths stay inside): a
    /// single edge step moves by a 0/1 vector or its negative, so the
    /// distance of a difference vector w is (max positive coordinate) +
    /// (max negative coordinate magnitude).
    pub fn lattice_distance(&self, u: VertId, v: VertId) -> u32 {
        let a = self.verts[u as usize];
        let b = self.verts[v as usize];
        let mut pos = 0i64;
        let mut neg = 0i64;
        for i in 0..self.ambient_dim {
            let d = b[i] - a[i];
            pos = pos.max(d);
            neg = neg.max(-d);
        }
        (pos + neg) as u32
    }

    /// Graph distances in the 1-skeleton from `src` (u32::MAX = unreachable).
    pub fn bfs_distances(&self, src: VertId) -> Vec<u32> {
        let mut dist = vec![u32::MAX; self.verts.len()];
        let mut queue = std::collections::VecDeque::new();
        dist[src as usize] = 0;
        queue.push_back(src);
        while let Some(u) = queue.pop_front() {
            let du = dist[u as usize];
            for c in &self.vert_stars[u as usize] {
                if c.dim != 1 {
                    continue;
                }
                for &w in self.vertices_of(*c) {
                    if dist[w as usize] == u32::MAX {
                        dist[w as usize] = du + 1;
                        queue.push_back(w);
                    }
                }
            }
        }
        dist
    }

    /// Max number of simplices in any vertex star (bounded-geometry audit).
    pub fn max_star_size(&self) -> usize {
        self.vert_stars.iter().map(|s| s.len()).max().unwrap_or(0)
    }

    pub fn full_subcomplex(self: &Rc<Self>) -> Subcomplex {
        let mut sub = Subcomplex::empty(self);
        for d in 0..=self.top_dim() {
            sub.members[d] = vec![true; self.simplices[d].len()];
            sub.counts[d] = self.simplices[d].len();
        }
        sub
    }

    /// The full subcomplex spanned by a vertex set: every simplex all of
    /// whose vertices lie in the set.
    pub fn full_subcomplex_on(self: &Rc<Self>, verts: &[VertId]) -> Subcomplex {
        let mut keep = vec![false; self.verts.len()];
        for &v in verts {
            keep[v as usize] = true;
        }
        let mut sub = Subcomplex::empty(self);
        for d in 0..=self.top_dim() {
            for (id, simp) in self.simplices[d].iter().enumerate() {
                if simp.iter().all(|&v| keep[v as usize]) {
                    sub.insert(Cell::new(d, id as SimpId));
                }
            }
        }
        sub
    }
}

/// Build the standard triangulated window `[-S, S]^n`.
///
/// Top simplices are the ordered-path simplices of each unit cube: for a base
/// corner c and a permutation (i_1..i_n), the chain c, c+e_{i_1}, ...,
/// c+e_{i_1}+...+e_{i_n}.
pub fn build_window(n: usize, s: i64, budget: Option<usize>) -> Result<Rc<SimplicialComplex>> {
    assert!((1..=3).contains(&n), "ambient dimension must be 1..=3");
    assert!(s >= 1);
    let budget = budget.unwrap_or(DEFAULT_SIMPLEX_BUDGET);
    let side = (2 * s + 1) as usize;
    let verts_count = side.pow(n as u32);
    // Rough upper bound on total simplex count to refuse oversized windows
    // before allocating: per vertex, the number of simplices having it as
    // lex-least vertex is 3^n - 1 + 1 (subsets of directions), times n! paths
    // is an overestimate; use exact formulas per dimension instead.
    let cubes = (2 * s) as usize;
    let est = match n {
        1 => verts_count + cubes,
        2 => verts_count + (3 * cubes * (cubes + 1) + cubes * cubes) + 2 * cubes * cubes,
        _ => {
            let c = cubes;
            let v = verts_count;
            // edges + triangles + tets for the path triangulation of a cube grid
            let edges = 7 * c * c * c + 9 * c * c + 3 * c; // overestimate
            let tris = 12 * c * c * c + 6 * c * c;
            let tets = 6 * c * c * c;
            v + edges + tris + tets
        }
    };
    if est > budget {
        return Err(Error::BudgetExceeded { needed: est, budget });
    }

    let mut coords = Vec::with_capacity(verts_count);
    let range: Vec<i64> = (-s..=s).collect();
    match n {
        1 => {
            for &x in &range {
                coords.push([x, 0, 0]);
            }
        }
        2 => {
            for &x in &range {
                for &y in &range {
                    coords.push([x, y, 0]);
                }
            }
        }
        _ => {
            for &x in &range {
                for &y in &range {
                    for &z in &range {
                        coords.push([x, y, z]);
                    }
                }
            }
        }
    }

    let perms: Vec<Vec<usize>> = permutations(n);
    let mut top = Vec::new();
    let base_range: Vec<i64> = (-s..s).collect();
    let mut push_cube = |c: [i64; 3]| {
        for p in &perms {
            let mut v = c;
            let mut simplex = vec![c];
            for &axis in p {
                v[axis] += 1;
                simplex.push(v);
            }
            top.push(simplex);
        }
    };
    match n {
        1 => {
            for &x in &base_range {
                push_cube([x, 0, 0]);
            }
        }
        2 => {
            for &x in &base_range {
                for &y in &base_range {
                    push_cube([x, y, 0]);
                }
            }
        }
        _ => {
            for &x in &base_range {
                for &y in &base_range {
                    for &z in &base_range {
                        push_cube([x, y, z]);
                    }
                }
            }
        }
    }

    let mut cx = SimplicialComplex::from_simplices(n, coords, top);
    cx.window_halfwidth = Some(s);
    let total = cx.num_simplices();
    if total > budget {
        return Err(Error::BudgetExceeded { needed: total, budget });
    }
    Ok(Rc::new(cx))
}

pub const DEFAULT_SIMPLEX_BUDGET: usize = 2_000_000;

fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut items: Vec<usize> = (0..n).collect();
    permute(&mut items, 0, &mut out);
    out.sort();
    out
}

fn permute(items: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
    if k == items.len() {
        out.push(items.clone());
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permute(items, k + 1, out);
        items.swap(k, i);
    }
}

/// Subcomplex of a parent complex: per-dimension membership bitmaps.
/// Always closed under faces (constructors enforce it).
#[derive(Clone)]
pub struct Subcomplex {
    pub parent: Rc<SimplicialComplex>,
    pub members: Vec<Vec<bool>>,
    pub counts: Vec<usize>,
}

impl Subcomplex {
    pub fn empty(parent: &Rc<SimplicialComplex>) -> Self {
        let members = (0..=parent.top_dim()).map(|d| vec![false; parent.simplex_count(d)]).collect();
        Subcomplex { parent: parent.clone(), members, counts: vec![0; parent.top_dim() + 1] }
    }

    pub fn contains(&self, c: Cell) -> bool {
        self.members[c.dim as usize][c.id as usize]
    }

    pub fn insert(&mut self, c: Cell) {
        let slot = &mut self.members[c.dim as usize][c.id as usize];
        if !*slot {
            *slot = true;
            self.counts[c.dim as usize] += 1;
        }
    }

    pub fn num_simplices(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.num_simplices() == 0
    }

    pub fn cells(&self, d: usize) -> impl Iterator<Item = Cell> + '_ {
        self.members[d].iter().enumerate().filter(|(_, &m)| m).map(move |(i, _)| Cell::new(d, i as SimpId))
    }

    pub fn all_cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.members.len()).flat_map(move |d| self.cells(d))
    }

    pub fn vertex_ids(&self) -> Vec<VertId> {
        self.cells(0).map(|c| c.id).collect()
    }

    /// Close the current member set under faces (in place).
    fn close_faces(&mut self) {
        for d in (1..self.members.len()).rev() {
            let ids: Vec<SimpId> = self.cells(d).map(|c| c.id).collect();
            for id in ids {
                let parent = self.parent.clone();
                for &(f, _) in &parent.facets[d][id as usize] {
                    self.insert(Cell::new(d - 1, f));
                }
            }
        }
    }

    pub fn from_cells(parent: &Rc<SimplicialComplex>, cells: impl IntoIterator<Item = Cell>) -> Self {
        let mut sub = Subcomplex::empty(parent);
        for c in cells {
            sub.insert(c);
        }
        sub.close_faces();
        sub
    }

    pub fn union(&self, other: &Subcomplex) -> Subcomplex {
        assert!(Rc::ptr_eq(&self.parent, &other.parent));
        let mut out = self.clone();
        for c in other.all_cells() {
            out.insert(c);
        }
        out
    }

    pub fn intersect(&self, other: &Subcomplex) -> Subcomplex {
        assert!(Rc::ptr_eq(&self.parent, &other.parent));
        let mut out = Subcomplex::empty(&self.parent);
        for c in self.all_cells() {
            if other.contains(c) {
                out.insert(c);
            }
        }
        out
    }

    pub fn is_subset_of(&self, other: &Subcomplex) -> bool {
        self.all_cells().all(|c| other.contains(c))
    }

    pub fn same_as(&self, other: &Subcomplex) -> bool {
        self.counts == other.counts && self.is_subset_of(other)
    }

    /// Closed star: all simplices meeting this subcomplex in at least one
    /// vertex, closed under faces.
    pub fn closed_star(&self) -> Subcomplex {
        let mut out = Subcomplex::empty(&self.parent);
        for v in self.cells(0) {
            for &c in &self.parent.vert_stars[v.id as usize] {
                out.insert(c);
            }
        }
        out.close_faces();
        out
    }

    /// R-fold iterated closed star (combinatorial R-neighborhood).
    pub fn iterated_star(&self, r: u32) -> Subcomplex {
        let mut cur = self.clone();
        for _ in 0..r {
            cur = cur.closed_star();
        }
        cur
    }

    /// Closure of the complement: all simplices not in this subcomplex,
    /// together with their faces.
    pub fn complement_closure(&self) -> Subcomplex {
        let mut out = Subcomplex::empty(&self.parent);
        for d in 0..self.members.len() {
            for (id, &m) in self.members[d].iter().enumerate() {
                if !m {
                    out.insert(Cell::new(d, id as SimpId));
                }
            }
        }
        out.close_faces();
        out
    }

    /// Frontier: the intersection of this subcomplex with the closure of its
    /// complement.
    pub fn frontier(&self) -> Subcomplex {
        self.intersect(&self.complement_closure())
    }

    /// Connected components of the 1-skeleton. Component ids are assigned in
    /// order of least member vertex, so numbering is deterministic.
    pub fn connected_components(&self) -> Components {
        let n = self.parent.verts.len();
        let mut uf = UnionFind::new(n);
        for e in self.cells(1) {
            let vs = self.parent.vertices_of(e);
            uf.union(vs[0] as usize, vs[1] as usize);
        }
        let mut root_to_comp: HashMap<usize, usize> = HashMap::new();
        let mut comp_of_vertex = vec![usize::MAX; n];
        let mut reps = Vec::new();
        for v in self.cells(0) {
            let r = uf.find(v.id as usize);
            let next = root_to_comp.len();
            let c = *root_to_comp.entry(r).or_insert_with(|| {
                reps.push(v.id);
                next
            });
            comp_of_vertex[v.id as usize] = c;
        }
        Components { comp_of_vertex, reps }
    }

    /// Minimum lattice distance from vertex `v` to any vertex of this
    /// subcomplex (window metric).
    pub fn lattice_distance_to(&self, v: VertId) -> u32 {
        self.cells(0).map(|c| self.parent.lattice_distance(v, c.id)).min().unwrap_or(u32::MAX)
    }
}

pub struct Components {
    /// usize::MAX for vertices outside the subcomplex.
    pub comp_of_vertex: Vec<usize>,
    /// least vertex id of each component, indexed by component id
    pub reps: Vec<VertId>,
}

impl Components {
    pub fn count(&self) -> usize {
        self.reps.len()
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }
    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.parent[r] != r {
            r = self.parent[r];
        }
        let mut c = x;
        while self.parent[c] != r {
            let next = self.parent[c];
            self.parent[c] = r;
            c = next;
        }
        r
    }
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // attach larger root id under smaller so the least vertex stays
            // representative-ish; exact choice does not matter for counts
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// The boundary sphere of a window: all (n-1)-simplices with exactly one
/// top-dimensional cofacet, closed under faces.
pub fn window_boundary(window: &Rc<SimplicialComplex>) -> Subcomplex {
    let top = window.top_dim();
    let cells = (0..window.simplex_count(top - 1)).filter_map(|id| {
        if window.cofacets[top - 1][id].len() == 1 {
            Some(Cell::new(top - 1, id as SimpId))
        } else {
            None
        }
    });
    Subcomplex::from_cells(window, cells)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_1d_counts() {
        let w = build_window(1, 3, None).unwrap();
        assert_eq!(w.simplex_count(0), 7);
        assert_eq!(w.simplex_count(1), 6);
    }

    #[test]
    fn window_2d_counts() {
        // [-2,2]^2: 25 vertices, 16 squares -> 32 triangles,
        // edges: 2*5*4 axis + 16 diagonals = 56
        let w = build_window(2, 2, None).unwrap();
        assert_eq!(w.simplex_count(0), 25);
        assert_eq!(w.simplex_count(1), 56);
        assert_eq!(w.simplex_count(2), 32);
    }

    #[test]
    fn window_3d_counts_and_euler() {
        let w = build_window(3, 2, None).unwrap();
        let v = w.simplex_count(0) as i64;
        let e = w.simplex_count(1) as i64;
        let f = w.simplex_count(2) as i64;
        let t = w.simplex_count(3) as i64;
        assert_eq!(v, 125);
        assert_eq!(t, 6 * 64);
        // contractible window: Euler characteristic 1
        assert_eq!(v - e + f - t, 1);
    }

    #[test]
    fn budget_refused() {
        let err = match build_window(3, 40, None) {
            Err(e) => e,
            Ok(_) => panic!("expected budget refusal"),
        };
        match err {
            Error::BudgetExceeded { .. } => {}
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn complement_of_axis_leaves_connected_shell() {
        let w = build_window(3, 3, None).unwrap();
        // z-axis as subcomplex
        let axis_cells = (0..w.simplex_count(1)).filter_map(|id| {
            let vs = &w.simplices[1][id];
            let a = w.verts[vs[0] as usize];
            let b = w.verts[vs[1] as usize];
            if a[0] == 0 && a[1] == 0 && b[0] == 0 && b[1] == 0 {
                Some(Cell::new(1, id as SimpId))
            } else {
                None
            }
        });
        let axis = Subcomplex::from_cells(&w, axis_cells);
        assert_eq!(axis.counts[0], 7);
        assert_eq!(axis.counts[1], 6);
        let n1 = axis.iterated_star(1);
        let y = n1.complement_closure();
        let comps = y.connected_components();
        assert_eq!(comps.count(), 1);
        // frontier of the neighborhood is nonempty and 2-dimensional
        let fr = n1.frontier();
        assert!(fr.counts[2] > 0);
        assert_eq!(fr.counts.get(3), Some(&0));
    }

    #[test]
    fn lattice_distance_formula() {
        let w = build_window(3, 2, None).unwrap();
        let id = |c: [i64; 3]| *w.vert_index.get(&c).unwrap();
        let d = |a, b| w.lattice_distance(id(a), id(b));
        assert_eq!(d([0, 0, 0], [1, 1, 1]), 1);
        assert_eq!(d([0, 0, 0], [1, -1, 0]), 2);
        assert_eq!(d([0, 0, 0], [2, 1, -1]), 3);
        assert_eq!(d([-2, -2, -2], [2, 2, 2]), 4);
        // agrees with BFS on the 1-skeleton
        let bfs = w.bfs_distances(id([0, 0, 0]));
        for v in 0..w.verts.len() {
            assert_eq!(bfs[v], d([0, 0, 0], w.verts[v]), "vertex {:?}", w.verts[v]);
        }
    }

    #[test]
    fn boundary_sphere_of_window() {
        let w = build_window(3, 2, None).unwrap();
        let b = window_boundary(&w);
        // 6 faces of 4x4 cubes, 2 triangles each
        assert_eq!(b.counts[2], 6 * 16 * 2);
        // all boundary vertices have a coordinate at +-2
        for v in b.cells(0) {
            let c = w.verts[v.id as usize];
            assert!(c.iter().any(|&x| x.abs() == 2));
        }
    }
}
