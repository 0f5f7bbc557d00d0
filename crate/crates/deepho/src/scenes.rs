//! Books of half-planes in 3-dimensional lattice windows.
//!
//! A book `W_k` is `k` triangulated half-planes (pages) glued along a common
//! boundary line (the spine). Pages are embedded as staircase half-planes in
//! distinct rational xy-directions crossed with the z-axis, stretched so the
//! truncated book spans the whole window. On top of the embedded scene this
//! module computes the adjacency graph of relative ends, its chain complex
//! and circuit structure, the Jordan cycle with its diagonal coordinates,
//! collapse maps between adjacency graphs, deep-containment certificates,
//! and the action of window symmetries.

use crate::chain::{lchain_add_scaled, LChain};
use crate::coarse::{
    approximate_chain_map, estimate_controls, ChainApprox, CoarseMap, ControlEstimate, FillOrder,
};
use crate::duality::DualityScene;
use crate::error::{Error, Result};
use crate::filtered::{deep_components, end_projection, DeepHomology, EndFiltration, EndSet};
use crate::grid::{build_window, Cell, SimplicialComplex, Subcomplex, VertId};
use crate::homology::boundary_in_parent;
use crate::linalg::{
    hom_inverse, hom_is_iso, hom_kernel, snf, subgroups_equal, AbHom, FgAbGroup, SparseIntMatrix,
};
use crate::progroup::limit_map_at_stage;
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::rc::Rc;

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Round `a / b` to the nearest integer, halves away from zero. Odd in `a`,
/// so symmetric scenes embed symmetrically.
pub(crate) fn div_round(a: i64, b: i64) -> i64 {
    debug_assert!(b > 0);
    let two = 2 * a;
    if two >= 0 { (two + b) / (2 * b) } else { (two - b) / (2 * b) }
}

/// A book of `k` half-plane pages glued along a spine line, as an abstract
/// triangulated complex.
///
/// Page `i` is the grid `[0, extent] x [-extent, extent]` (first coordinate
/// the distance from the spine, second the spine direction), triangulated by
/// the monotone-path rule; the `u = 0` column is the shared spine.
pub struct Book {
    pub k: usize,
    /// Truncation radius `T` of every page and of the spine.
    pub extent: i64,
    /// Primitive xy-directions along which the pages will be embedded.
    pub directions: Vec<(i64, i64)>,
    pub complex: Rc<SimplicialComplex>,
    pub spine: Subcomplex,
    /// Page subcomplexes, each containing the spine.
    pub pages: Vec<Subcomplex>,
}

impl Book {
    /// The subcomplex `W_I` spanned by the listed pages and the spine.
    pub fn union_of(&self, pages: &[usize]) -> Subcomplex {
        let mut out = self.spine.clone();
        for &i in pages {
            out = out.union(&self.pages[i]);
        }
        out
    }

    /// `W_{k-1}^i`: the closure of the book minus page `i`.
    pub fn without(&self, i: usize) -> Subcomplex {
        let others: Vec<usize> = (0..self.k).filter(|&j| j != i).collect();
        self.union_of(&others)
    }
}

/// Alternating sum of cell counts.
pub fn euler_characteristic(sub: &Subcomplex) -> i64 {
    let mut chi = 0i64;
    for d in 0..=sub.parent.top_dim() {
        let n = sub.cells(d).count() as i64;
        chi += if d % 2 == 0 { n } else { -n };
    }
    chi
}

/// Build the abstract book `W_k` with truncation radius `extent`.
///
/// Directions must be nonzero and pairwise distinct after normalizing to
/// primitive vectors — two pages along the same ray would embed on top of
/// each other.
pub fn build_book(k: usize, directions: &[(i64, i64)], extent: i64) -> Book {
    assert!(k >= 1, "a book needs at least one page");
    assert_eq!(directions.len(), k);
    assert!(extent >= 2);
    let dirs: Vec<(i64, i64)> = directions
        .iter()
        .map(|&(p, q)| {
            assert!((p, q) != (0, 0), "page direction must be nonzero");
            let g = gcd(p, q);
            (p / g, q / g)
        })
        .collect();
    for i in 0..k {
        for j in i + 1..k {
            assert!(dirs[i] != dirs[j], "page directions must be pairwise distinct rays");
        }
    }

    let t = extent;
    let coord = |page: usize, u: i64, z: i64| -> [i64; 3] {
        if u == 0 { [0, z, 0] } else { [u, z, page as i64 + 1] }
    };
    let mut verts = Vec::new();
    for z in -t..=t {
        verts.push([0, z, 0]);
    }
    let mut tris = Vec::new();
    for page in 0..k {
        for u in 1..=t {
            for z in -t..=t {
                verts.push(coord(page, u, z));
            }
        }
        // Split each square along the diagonal whose image direction is
        // coordinatewise monotone: for a direction in the closed negative
        // quadrant that is the anti-diagonal, so an unstretched embedding
        // carries every triangle onto an actual window simplex.
        let (p, q) = dirs[page];
        let anti = p <= 0 && q <= 0;
        for u in 0..t {
            for z in -t..t {
                let a = coord(page, u, z);
                let b = coord(page, u + 1, z);
                let c = coord(page, u, z + 1);
                let d = coord(page, u + 1, z + 1);
                if anti {
                    tris.push(vec![a, b, c]);
                    tris.push(vec![b, c, d]);
                } else {
                    tris.push(vec![a, b, d]);
                    tris.push(vec![a, c, d]);
                }
            }
        }
    }
    let complex = Rc::new(SimplicialComplex::from_simplices(3, verts, tris));

    let spine_verts: Vec<VertId> =
        (-t..=t).map(|z| complex.vert_index[&[0, z, 0]]).collect();
    let spine = complex.full_subcomplex_on(&spine_verts);
    let pages = (0..k)
        .map(|page| {
            let mut vs = spine_verts.clone();
            for u in 1..=t {
                for z in -t..=t {
                    vs.push(complex.vert_index[&coord(page, u, z)]);
                }
            }
            complex.full_subcomplex_on(&vs)
        })
        .collect();

    Book { k, extent, directions: dirs, complex, spine, pages }
}

/// A sub-book's image data: support, end filtration, and ends.
pub struct SceneSubset {
    pub pages: Vec<usize>,
    pub domain: Subcomplex,
    /// `K_I`: the closed support of the image chains over `W_I`.
    pub support: Subcomplex,
    pub filtration: EndFiltration,
    pub ends: EndSet,
}

type DeepKey = (Vec<usize>, Option<Vec<usize>>, usize, bool);

/// An embedded book scene: the window, the audited coarse map and its chain
/// approximation, and cached end/homology data per sub-book.
pub struct Scene {
    pub book: Book,
    pub window: Rc<SimplicialComplex>,
    pub s: i64,
    pub f: ChainApprox,
    pub controls: ControlEstimate,
    pub r_min: u32,
    pub r_max: u32,
    /// Confidence window for stability detection.
    pub w: usize,
    subsets: RefCell<BTreeMap<Vec<usize>, Rc<SceneSubset>>>,
    deep: RefCell<BTreeMap<DeepKey, Rc<DeepHomology>>>,
}

/// Embed a book into the window `[-s, s]^3`: the spine goes to the z-axis
/// and page `i` to the staircase half-plane along its direction, stretched
/// by `s / extent` so the truncated book spans the window.
///
/// The sampled control functions of the vertex map are audited; a map that
/// fails the properness check (directions too close for the extent) is
/// refused.
pub fn embed_book(
    book: Book,
    s: i64,
    r_min: u32,
    r_max: u32,
    w: usize,
    seed: u64,
    budget: Option<usize>,
) -> Result<Scene> {
    embed_book_with(book, s, r_min, r_max, w, seed, budget, FillOrder::Forward)
}

/// `embed_book` with an explicit fill order, so independently generated
/// chain approximations of the same embedding can be compared.
#[allow(clippy::too_many_arguments)]
pub fn embed_book_with(
    book: Book,
    s: i64,
    r_min: u32,
    r_max: u32,
    w: usize,
    seed: u64,
    budget: Option<usize>,
    order: FillOrder,
) -> Result<Scene> {
    assert!(s >= book.extent, "window must contain the book extent");
    let window = build_window(3, s, budget)?;
    let t = book.extent;
    let mut vertex_image = Vec::with_capacity(book.complex.verts.len());
    for &[a, b, c] in &book.complex.verts {
        let img = if c == 0 {
            [0, 0, div_round(b * s, t)]
        } else {
            let (p, q) = book.directions[(c - 1) as usize];
            let m = p.abs().max(q.abs());
            [div_round(a * s * p, t * m), div_round(a * s * q, t * m), div_round(b * s, t)]
        };
        vertex_image.push(window.vert_index[&img]);
    }
    let map = CoarseMap::new(&book.complex, &window, vertex_image);
    let n_sources = book.complex.verts.len().min(48);
    let controls = estimate_controls(&map, n_sources, seed);
    if !controls.proper {
        return Err(Error::Config(format!(
            "embedding refused: sampled controls are not proper (lower envelope {:?})",
            controls.lower
        )));
    }
    let f = approximate_chain_map(&map, order)?;
    debug_assert!(f.verify());
    Ok(Scene {
        book,
        window,
        s,
        f,
        controls,
        r_min,
        r_max,
        w,
        subsets: RefCell::new(BTreeMap::new()),
        deep: RefCell::new(BTreeMap::new()),
    })
}

impl Scene {
    /// End data of the sub-book on the given pages (empty = the spine),
    /// cached per page set.
    pub fn subset(&self, pages: &[usize]) -> Result<Rc<SceneSubset>> {
        let mut key: Vec<usize> = pages.to_vec();
        key.sort_unstable();
        key.dedup();
        if let Some(s) = self.subsets.borrow().get(&key) {
            return Ok(s.clone());
        }
        let domain = self.book.union_of(&key);
        let cells = domain.all_cells().flat_map(|c| {
            self.f.images[c.dim as usize][c.id as usize].keys().copied().map(Cell::from_label)
        });
        let support = Subcomplex::from_cells(&self.window, cells);
        let filtration = EndFiltration::new(&support, self.r_min, self.r_max)?;
        let ends = deep_components(&filtration)?;
        let sub = Rc::new(SceneSubset { pages: key.clone(), domain, support, filtration, ends });
        self.subsets.borrow_mut().insert(key, sub.clone());
        Ok(sub)
    }

    /// Deep homology of the complement of `K_pages`, relative to the
    /// complement of the larger `K_rel` when given; cached.
    pub fn deep(
        &self,
        pages: &[usize],
        degree: usize,
        reduced: bool,
        rel_pages: Option<&[usize]>,
    ) -> Result<Rc<DeepHomology>> {
        let norm = |p: &[usize]| {
            let mut v = p.to_vec();
            v.sort_unstable();
            v.dedup();
            v
        };
        let key: DeepKey = (norm(pages), rel_pages.map(norm), degree, reduced);
        if let Some(d) = self.deep.borrow().get(&key) {
            return Ok(d.clone());
        }
        let sub = self.subset(pages)?;
        let dh = match rel_pages {
            Some(rp) => {
                let inner = self.subset(rp)?;
                DeepHomology::compute(&sub.filtration, degree, reduced, Some(&inner.filtration), self.w)?
            }
            None => DeepHomology::compute(&sub.filtration, degree, reduced, None, self.w)?,
        };
        let dh = Rc::new(dh);
        self.deep.borrow_mut().insert(key, dh.clone());
        Ok(dh)
    }

    /// The cells of the book where pages are truncated: the far edge of
    /// every page and the two spine-direction edges. This is the
    /// "at infinity" divisor for compactly supported cohomology of the book.
    pub fn truncation_frontier(&self) -> Subcomplex {
        let t = self.book.extent;
        let verts: Vec<VertId> = (0..self.book.complex.verts.len() as VertId)
            .filter(|&v| {
                let [a, b, _] = self.book.complex.verts[v as usize];
                a == t || b.abs() == t
            })
            .collect();
        self.book.complex.full_subcomplex_on(&verts)
    }

    /// The duality scene of the full book: complements of the image support
    /// against the book's compactly supported cohomology.
    pub fn duality_scene(&self) -> Result<DualityScene> {
        DualityScene::new(self.f.clone(), self.truncation_frontier(), self.r_min, self.r_max)
    }
}

/// Decode a 0-chain into per-end masses at one filtration stage. Mass on a
/// component that is not an end is an error.
fn end_signature(
    window: &Rc<SimplicialComplex>,
    bd: &LChain,
    y: &Subcomplex,
    ends: &EndSet,
    stage: usize,
) -> Result<Vec<BigInt>> {
    let comps = y.connected_components();
    let mut per_comp: BTreeMap<usize, BigInt> = BTreeMap::new();
    for (&lab, v) in bd {
        let cell = Cell::from_label(lab);
        assert_eq!(cell.dim, 0);
        let vert = window.vertices_of(cell)[0];
        let cid = comps.comp_of_vertex[vert as usize];
        if cid == usize::MAX {
            return Err(Error::Config("boundary chain left the complement".into()));
        }
        *per_comp.entry(cid).or_default() += v;
    }
    let mut out = vec![BigInt::zero(); ends.count];
    for (cid, val) in per_comp {
        if val.is_zero() {
            continue;
        }
        match ends.comp_of_end[stage].iter().position(|&c| c == cid) {
            Some(e) => out[e] += val,
            None => {
                return Err(Error::Config(
                    "boundary mass sits on a shallow component".into(),
                ))
            }
        }
    }
    Ok(out)
}

/// A chain in the eventual image at one stage: the listed generator of the
/// stage's restricted system, written out as a cycle representative.
fn image_generator_chain(
    dh: &DeepHomology,
    degree: usize,
    stage: usize,
    gen: usize,
) -> LChain {
    let coords = &dh.report.images[stage].gens[gen];
    let mut ch = LChain::new();
    for (j, c) in coords.iter().enumerate() {
        if !c.is_zero() {
            lchain_add_scaled(&mut ch, &dh.stages[stage].representative(degree, j), c);
        }
    }
    ch
}

/// One edge of the adjacency graph: the page whose removal merges the two
/// endpoint ends, with a relative 1-cycle certificate whose boundary is
/// `endpoints.0 - endpoints.1` in the end basis.
pub struct AdjacencyEdge {
    pub page: usize,
    pub endpoints: (usize, usize),
    pub certificate: LChain,
    /// Stage index at which the certificate and its boundary live.
    pub stage: usize,
}

/// The adjacency graph of an embedded (sub-)book: vertices are the ends of
/// the complement of the image, edges the merged end pairs per removed page.
pub struct AdjacencyGraph {
    pub pages: Vec<usize>,
    pub subset: Rc<SceneSubset>,
    pub edges: Vec<AdjacencyEdge>,
}

impl AdjacencyGraph {
    pub fn vertex_count(&self) -> usize {
        self.subset.ends.count
    }

    pub fn edge_pairs(&self) -> Vec<(usize, usize)> {
        self.edges.iter().map(|e| e.endpoints).collect()
    }
}

/// Build the edge of the adjacency graph over `pages` obtained by removing
/// page `i`: the merged end pair plus its normalized certificate, taken at
/// a stage no shallower than `min_stage`.
fn edge_of(
    scene: &Scene,
    pages: &[usize],
    i: usize,
    min_stage: usize,
) -> Result<AdjacencyEdge> {
    let sub = scene.subset(pages)?;
    let others: Vec<usize> = pages.iter().copied().filter(|&j| j != i).collect();
    let sub_i = scene.subset(&others)?;

    let proj = end_projection(&sub.ends, &sub_i.ends, &sub_i.filtration)?;
    let mut merged: Vec<(usize, usize)> = Vec::new();
    for a in 0..proj.len() {
        for b in a + 1..proj.len() {
            if proj[a] == proj[b] {
                merged.push((a, b));
            }
        }
    }
    if merged.len() != 1 {
        return Err(Error::Config(format!(
            "removing page {i} merges {} end pairs instead of one — truncation artifact",
            merged.len()
        )));
    }
    let (va, vb) = merged[0];

    let dh = scene.deep(&others, 1, false, Some(pages))?;
    let limit = dh.limit()?;
    if limit.group != FgAbGroup::free(1) {
        return Err(Error::Config(format!(
            "relative deep H_1 after removing page {i} is {}, expected Z",
            limit.group
        )));
    }
    let stage = limit
        .stage
        .max((sub.ends.r0 - scene.r_min) as usize)
        .max((sub_i.ends.r0 - scene.r_min) as usize)
        .max(min_stage);
    let mut cert = image_generator_chain(&dh, 1, stage, 0);
    let bd = boundary_in_parent(&scene.window, 1, &cert);
    let mut sig = end_signature(&scene.window, &bd, &sub.filtration.stages[stage], &sub.ends, stage)?;
    let hot: Vec<usize> = (0..sig.len()).filter(|&e| !sig[e].is_zero()).collect();
    if hot != vec![va, vb] || sig[va].abs() != BigInt::one() || sig[vb] != -&sig[va] {
        return Err(Error::Config(format!(
            "certificate boundary for page {i} is {:?} on the ends, expected a merged-pair difference",
            sig
        )));
    }
    if sig[va] < BigInt::zero() {
        for v in cert.values_mut() {
            *v = -&*v;
        }
        sig[va] = BigInt::one();
    }
    Ok(AdjacencyEdge { page: i, endpoints: (va, vb), certificate: cert, stage })
}

/// The adjacency graph of the sub-book on `pages` (the whole book by
/// default via [`adjacency_graph`]). A single page yields the degenerate
/// edgeless graph.
pub fn adjacency_graph_on(scene: &Scene, pages: &[usize]) -> Result<AdjacencyGraph> {
    let sub = scene.subset(pages)?;
    let mut edges = Vec::new();
    if pages.len() >= 2 {
        for &i in pages {
            edges.push(edge_of(scene, pages, i, 0)?);
        }
    }
    Ok(AdjacencyGraph { pages: pages.to_vec(), subset: sub, edges })
}

pub fn adjacency_graph(scene: &Scene) -> Result<AdjacencyGraph> {
    let all: Vec<usize> = (0..scene.book.k).collect();
    adjacency_graph_on(scene, &all)
}

/// Whether a multigraph is a single cycle through all its vertices.
pub struct CircuitVerdict {
    pub is_circuit: bool,
    /// Vertices in cyclic order when the graph is a circuit.
    pub cyclic_order: Option<Vec<usize>>,
    /// A vertex violating the circuit condition otherwise.
    pub witness: Option<usize>,
}

pub fn verify_circuit(n_vertices: usize, edges: &[(usize, usize)]) -> CircuitVerdict {
    let fail = |witness| CircuitVerdict { is_circuit: false, cyclic_order: None, witness };
    if edges.len() != n_vertices || n_vertices == 0 {
        return fail(None);
    }
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); n_vertices];
    for (e, &(a, b)) in edges.iter().enumerate() {
        incident[a].push(e);
        incident[b].push(e);
    }
    if let Some(v) = (0..n_vertices).find(|&v| incident[v].len() != 2) {
        return fail(Some(v));
    }
    // Walk unused edges from vertex 0; a circuit is closed up after
    // covering every edge and vertex exactly once.
    let mut used = vec![false; edges.len()];
    let mut order = vec![0usize];
    let mut at = 0usize;
    loop {
        let Some(&e) = incident[at].iter().find(|&&e| !used[e]) else {
            break;
        };
        used[e] = true;
        let (a, b) = edges[e];
        at = if at == a { b } else { a };
        if at == 0 {
            break;
        }
        order.push(at);
    }
    if used.iter().all(|&u| u) && order.len() == n_vertices {
        CircuitVerdict { is_circuit: true, cyclic_order: Some(order), witness: None }
    } else {
        fail((0..n_vertices).find(|&v| !order.contains(&v)))
    }
}

/// The adjacency chain complex: the relative deep `H_1` of the spine pair in
/// the per-page product basis, with its boundary map to the free group on
/// the ends.
pub struct AdjacencyChainComplex {
    /// Boundary matrix, rows indexed by ends, columns by pages in the
    /// product basis.
    pub boundary: Vec<Vec<BigInt>>,
    pub h0: FgAbGroup,
    pub h1: FgAbGroup,
    /// The product map of the per-page inclusions is unimodular.
    pub basis_unimodular: bool,
    /// Boundary columns match the adjacency graph's incidence matrix up to
    /// per-column signs.
    pub matches_incidence: bool,
    /// Diagonal coordinates of the Jordan cycle in the product basis.
    pub jordan_coordinates: Vec<BigInt>,
    /// The Jordan cycle's image generates `H_1` of this complex.
    pub jordan_generates_h1: bool,
    pub stage: usize,
}

/// Pieces shared between the chain complex and the Jordan certificate.
struct SpineSystems {
    stage: usize,
    /// `H_1` of the spine complement (absolute system).
    absolute: Rc<DeepHomology>,
    /// `H_1` of the spine pair (relative to the whole book's complement).
    pair: Rc<DeepHomology>,
    /// Jordan generator's coordinates in the pair limit.
    iota_sigma: Vec<BigInt>,
    /// Normalized product map: pair limit -> Z^k in per-page coordinates.
    product: AbHom,
    basis_unimodular: bool,
}

fn spine_systems(scene: &Scene, pages: &[usize]) -> Result<SpineSystems> {
    let k = pages.len();
    assert!(k >= 2, "the product basis needs at least two pages");
    let absolute = scene.deep(&[], 1, false, None)?;
    let pair = scene.deep(&[], 1, false, Some(pages))?;
    let singles: Vec<Rc<DeepHomology>> = pages
        .iter()
        .map(|&i| scene.deep(&[], 1, false, Some(&[i])))
        .collect::<Result<_>>()?;

    let jlim = absolute.limit()?;
    if jlim.group != FgAbGroup::free(1) {
        return Err(Error::Config(format!(
            "deep H_1 of the spine complement is {}, expected Z",
            jlim.group
        )));
    }
    let llim = pair.limit()?;
    if llim.group != FgAbGroup::free(k) {
        return Err(Error::Config(format!(
            "deep H_1 of the spine pair is {}, expected Z^{k}",
            llim.group
        )));
    }
    let mut stage = jlim.stage.max(llim.stage);
    for s in &singles {
        stage = stage.max(s.limit()?.stage);
    }

    let jimg = &absolute.report.images[stage];
    let limg = &pair.report.images[stage];
    // Per-page inclusion maps out of the pair limit, normalized so the
    // factor generator is the image of the Jordan generator.
    let mut rows = Vec::with_capacity(k);
    let mut basis_unimodular = true;
    for s in &singles {
        let simg = &s.report.images[stage];
        let inc = crate::homology::induced_inclusion(&pair.stages[stage], &s.stages[stage], 1)?;
        let lm = limit_map_at_stage(limg, simg, &inc)?;
        let ja = crate::homology::induced_inclusion(&absolute.stages[stage], &s.stages[stage], 1)?;
        let lja = limit_map_at_stage(jimg, simg, &ja)?;
        if !hom_is_iso(&lja) {
            return Err(Error::Config(
                "the spine's deep H_1 does not generate a single-page pair factor".into(),
            ));
        }
        let eps = lja.matrix[0][0].clone();
        basis_unimodular &= eps.abs() == BigInt::one();
        rows.push(lm.matrix[0].iter().map(|v| v * &eps).collect::<Vec<BigInt>>());
    }
    let product = AbHom::new(llim.group.clone(), FgAbGroup::free(k), rows);
    basis_unimodular &= hom_inverse(&product).is_some();

    let ji = crate::homology::induced_inclusion(&absolute.stages[stage], &pair.stages[stage], 1)?;
    let lji = limit_map_at_stage(jimg, limg, &ji)?;
    let iota_sigma = lji.apply(&[BigInt::one()]);

    Ok(SpineSystems { stage, absolute, pair, iota_sigma, product, basis_unimodular })
}

pub fn adjacency_chain_complex(
    scene: &Scene,
    graph: &AdjacencyGraph,
) -> Result<AdjacencyChainComplex> {
    let k = graph.pages.len();
    let sys = spine_systems(scene, &graph.pages)?;
    let stage = sys.stage.max((graph.subset.ends.r0 - scene.r_min) as usize);
    let inv = hom_inverse(&sys.product).ok_or_else(|| Error::NotInvertible {
        what: "per-page product basis of the spine pair".into(),
    })?;

    // Boundary to the free group on the ends, one column per pair generator.
    let ends = &graph.subset.ends;
    let ngens = sys.pair.report.images[stage].gens.len();
    let mut d = vec![vec![BigInt::zero(); ngens]; ends.count];
    for g in 0..ngens {
        let ch = image_generator_chain(&sys.pair, 1, stage, g);
        let bd = boundary_in_parent(&scene.window, 1, &ch);
        let sig = end_signature(
            &scene.window,
            &bd,
            &graph.subset.filtration.stages[stage],
            ends,
            stage,
        )?;
        for (e, v) in sig.into_iter().enumerate() {
            d[e][g] = v;
        }
    }
    let d_hom = AbHom::new(sys.product.dom.clone(), FgAbGroup::free(ends.count), d);
    let b_hom = d_hom.compose(&inv);
    let boundary = b_hom.matrix.clone();

    // Homology of the two-term complex from the Smith normal form.
    let mut m = SparseIntMatrix::new(ends.count, k);
    for (r, row) in boundary.iter().enumerate() {
        for (c, v) in row.iter().enumerate() {
            if !v.is_zero() {
                m.set(r, c, v.clone());
            }
        }
    }
    let s = snf(&m);
    let rank = s.rank();
    let torsion: Vec<BigInt> = (0..rank)
        .map(|i| s.d_matrix().get(i, i).abs())
        .filter(|v| *v > BigInt::one())
        .collect();
    let h0 = FgAbGroup { free_rank: ends.count - rank, torsion };
    let free_cols = FgAbGroup::free(k);
    let b_cols = AbHom::new(free_cols.clone(), FgAbGroup::free(ends.count), boundary.clone());
    let h1 = hom_kernel(&b_cols).group.clone();

    // Incidence audit: each product-basis column must be supported on its
    // edge's endpoints with coefficients +-1.
    let mut matches_incidence = true;
    for (c, edge) in graph.edges.iter().enumerate() {
        let col: Vec<&BigInt> = boundary.iter().map(|row| &row[c]).collect();
        let (a, b) = edge.endpoints;
        let ok = col.iter().enumerate().all(|(e, v)| {
            if e == a || e == b { v.abs() == BigInt::one() } else { v.is_zero() }
        }) && *col[a] == -col[b];
        matches_incidence &= ok;
    }

    let jordan_coordinates = sys.product.apply(&sys.iota_sigma);
    let kern = hom_kernel(&b_cols);
    let jordan_generates_h1 =
        subgroups_equal(&free_cols, &kern.gens, &[jordan_coordinates.clone()]);

    Ok(AdjacencyChainComplex {
        boundary,
        h0,
        h1,
        basis_unimodular: sys.basis_unimodular,
        matches_incidence,
        jordan_coordinates,
        jordan_generates_h1,
        stage,
    })
}

/// The Jordan cycle: a generator of the spine complement's deep `H_1` with
/// its diagonal coordinates in the per-page product basis.
pub struct JordanCertificate {
    pub coordinates: Vec<BigInt>,
    /// A representative lattice loop around the spine image, at `stage`.
    pub generator: LChain,
    pub stage: usize,
    pub orientation: i8,
}

/// Compute the Jordan certificate. `orientation = -1` reverses the chosen
/// generator while keeping the factor normalization fixed, flipping every
/// coordinate simultaneously.
pub fn jordan_cycle(
    scene: &Scene,
    graph: &AdjacencyGraph,
    orientation: i8,
) -> Result<JordanCertificate> {
    assert!(orientation == 1 || orientation == -1);
    let sys = spine_systems(scene, &graph.pages)?;
    let mut generator = image_generator_chain(&sys.absolute, 1, sys.stage, 0);
    if orientation < 0 {
        for v in generator.values_mut() {
            *v = -&*v;
        }
    }
    let scaled: Vec<BigInt> =
        sys.iota_sigma.iter().map(|v| v * BigInt::from(orientation)).collect();
    let coordinates = sys.product.apply(&scaled);
    Ok(JordanCertificate { coordinates, generator, stage: sys.stage, orientation })
}

/// The collapse of an adjacency graph onto the graph of the book without
/// page `i`.
pub struct CollapseVerdict {
    pub page: usize,
    /// End of the big graph -> end of the sub-graph.
    pub vertex_map: Vec<usize>,
    /// Edge index in the big graph -> edge index in the sub-graph; `None`
    /// exactly for the collapsed edge.
    pub edge_map: Vec<Option<usize>>,
    /// The sub-graph vertex the collapsed edge lands on.
    pub collapsed_to: usize,
    /// Endpoints of surviving edges map onto endpoints of their images.
    pub is_graph_morphism: bool,
    /// Certificate boundaries commute with the vertex map (naturality of
    /// the connecting homomorphism, checked on end signatures).
    pub squares_commute: bool,
}

pub fn collapse_map(
    scene: &Scene,
    graph: &AdjacencyGraph,
    i: usize,
) -> Result<(AdjacencyGraph, CollapseVerdict)> {
    let others: Vec<usize> = graph.pages.iter().copied().filter(|&j| j != i).collect();
    if others.len() < 2 {
        return Err(Error::Config(
            "collapsing needs at least two surviving pages".into(),
        ));
    }
    let sub_graph = adjacency_graph_on(scene, &others)?;
    let vertex_map =
        end_projection(&graph.subset.ends, &sub_graph.subset.ends, &sub_graph.subset.filtration)?;

    let min_stage = (sub_graph.subset.ends.r0 - scene.r_min) as usize;
    let mut edge_map = Vec::with_capacity(graph.edges.len());
    let mut is_graph_morphism = true;
    let mut squares_commute = true;
    let mut collapsed_to = usize::MAX;
    for edge in &graph.edges {
        if edge.page == i {
            let (a, b) = edge.endpoints;
            is_graph_morphism &= vertex_map[a] == vertex_map[b];
            collapsed_to = vertex_map[a];
            edge_map.push(None);
            continue;
        }
        let target = sub_graph
            .edges
            .iter()
            .position(|e| e.page == edge.page)
            .expect("surviving page has an edge in the sub-graph");
        edge_map.push(Some(target));
        let (a, b) = edge.endpoints;
        let (c, d) = sub_graph.edges[target].endpoints;
        let mapped = (vertex_map[a], vertex_map[b]);
        is_graph_morphism &= mapped == (c, d) || mapped == (d, c);

        // Naturality: rebuild the certificate deep enough for the sub-book's
        // ends, then read its boundary in the sub-book's complement.
        let fresh = edge_of(scene, &graph.pages, edge.page, min_stage)?;
        let bd = boundary_in_parent(&scene.window, 1, &fresh.certificate);
        let sig = end_signature(
            &scene.window,
            &bd,
            &sub_graph.subset.filtration.stages[fresh.stage],
            &sub_graph.subset.ends,
            fresh.stage,
        )?;
        let (fa, fb) = fresh.endpoints;
        let mut expected = vec![BigInt::zero(); sub_graph.subset.ends.count];
        expected[vertex_map[fa]] += BigInt::one();
        expected[vertex_map[fb]] -= BigInt::one();
        squares_commute &= sig == expected;
    }

    let verdict = CollapseVerdict {
        page: i,
        vertex_map,
        edge_map,
        collapsed_to,
        is_graph_morphism,
        squares_commute,
    };
    Ok((sub_graph, verdict))
}

/// Deep-containment certificate: the least `m` such that the image of the
/// book minus the domain `m`-neighborhood of `W_{k-1}^i` lies in the single
/// deep component absorbing the merged end pair.
pub struct ContainmentVerdict {
    pub page: usize,
    /// Radius from which the sub-book's ends are stable.
    pub r0: u32,
    pub m: Option<u32>,
    /// The absorbing end of the sub-book.
    pub end: usize,
}

pub fn deep_containment_check(scene: &Scene, graph: &AdjacencyGraph, i: usize) -> Result<ContainmentVerdict> {
    let others: Vec<usize> = graph.pages.iter().copied().filter(|&j| j != i).collect();
    let sub_i = scene.subset(&others)?;
    let proj = end_projection(&graph.subset.ends, &sub_i.ends, &sub_i.filtration)?;
    let edge = graph
        .edges
        .iter()
        .find(|e| e.page == i)
        .ok_or_else(|| Error::Config(format!("page {i} has no edge in the graph")))?;
    let u = proj[edge.endpoints.0];
    if proj[edge.endpoints.1] != u {
        return Err(Error::Config("merged pair does not project to one end".into()));
    }

    let last = sub_i.filtration.stage_count() - 1;
    let y = &sub_i.filtration.stages[last];
    let comps = y.connected_components();
    let target = comps.comp_of_vertex[sub_i.ends.reps[u] as usize];

    let removed = scene.book.without(i);
    let mut m = None;
    for radius in 1..=scene.book.extent as u32 {
        let near = removed.iterated_star(radius);
        let rest: Vec<VertId> = scene
            .book
            .union_of(&graph.pages)
            .vertex_ids()
            .into_iter()
            .filter(|&v| !near.contains(Cell::new(0, v)))
            .collect();
        let inside = rest.iter().all(|&v| {
            let w = scene.f.vertex_image[v as usize];
            comps.comp_of_vertex[w as usize] == target
        });
        if inside {
            m = Some(radius);
            break;
        }
    }
    Ok(ContainmentVerdict { page: i, r0: sub_i.ends.r0, m, end: u })
}

/// A signed-permutation isometry of the lattice window.
pub struct LatticeIsometry {
    pub matrix: [[i64; 3]; 3],
}

impl LatticeIsometry {
    pub fn new(matrix: [[i64; 3]; 3]) -> Self {
        for row in &matrix {
            assert_eq!(row.iter().map(|v| v.abs()).sum::<i64>(), 1);
        }
        for c in 0..3 {
            assert_eq!((0..3).map(|r| matrix[r][c].abs()).sum::<i64>(), 1);
        }
        LatticeIsometry { matrix }
    }

    pub fn apply(&self, p: [i64; 3]) -> [i64; 3] {
        let mut out = [0i64; 3];
        for (r, row) in self.matrix.iter().enumerate() {
            out[r] = row[0] * p[0] + row[1] * p[1] + row[2] * p[2];
        }
        out
    }
}

/// The action a window symmetry induces on the adjacency graph, audited at
/// the component level: the symmetry must permute the sampled page images
/// setwise, and then it permutes ends and edges compatibly.
pub struct SymmetryAction {
    pub page_permutation: Vec<usize>,
    pub end_permutation: Vec<usize>,
    /// Every edge's endpoint pair is carried onto its image edge's pair.
    pub edges_compatible: bool,
}

pub fn scene_symmetry_action(
    scene: &Scene,
    graph: &AdjacencyGraph,
    g: &LatticeIsometry,
) -> Result<SymmetryAction> {
    let image_set = |domain: &Subcomplex| -> Vec<[i64; 3]> {
        let mut pts: Vec<[i64; 3]> = domain
            .vertex_ids()
            .into_iter()
            .map(|v| scene.window.verts[scene.f.vertex_image[v as usize] as usize])
            .collect();
        pts.sort_unstable();
        pts.dedup();
        pts
    };
    let mapped = |pts: &[[i64; 3]]| -> Vec<[i64; 3]> {
        let mut out: Vec<[i64; 3]> = pts.iter().map(|&p| g.apply(p)).collect();
        out.sort_unstable();
        out
    };

    let spine_pts = image_set(&scene.book.spine);
    if mapped(&spine_pts) != spine_pts {
        return Err(Error::Config("symmetry does not preserve the spine image".into()));
    }
    let page_pts: Vec<Vec<[i64; 3]>> =
        graph.pages.iter().map(|&i| image_set(&scene.book.pages[i])).collect();
    let mut page_permutation = Vec::with_capacity(graph.pages.len());
    for (i, pts) in page_pts.iter().enumerate() {
        let img = mapped(pts);
        match page_pts.iter().position(|q| *q == img) {
            Some(j) => page_permutation.push(j),
            None => {
                return Err(Error::Config(format!(
                    "symmetry does not carry page {} onto a page",
                    graph.pages[i]
                )))
            }
        }
    }

    let last = graph.subset.filtration.stage_count() - 1;
    let y = &graph.subset.filtration.stages[last];
    let comps = y.connected_components();
    let ends = &graph.subset.ends;
    let in_y: BTreeSet<VertId> = y.vertex_ids().into_iter().collect();
    let mut end_permutation = Vec::with_capacity(ends.count);
    for (i, _) in ends.reps.iter().enumerate() {
        // Star neighborhoods are not equivariant under reflections, so a
        // single representative may land inside the image neighborhood.
        // Carry the whole deep component instead: its image must meet
        // exactly one deep component.
        let cid = ends.comp_of_end[last][i];
        let mut hit = BTreeSet::new();
        for &v in &in_y {
            if comps.comp_of_vertex[v as usize] != cid {
                continue;
            }
            let q = g.apply(scene.window.verts[v as usize]);
            let w = scene.window.vert_index[&q];
            if in_y.contains(&w) {
                let c = comps.comp_of_vertex[w as usize];
                if let Some(e) = ends.comp_of_end[last].iter().position(|&x| x == c) {
                    hit.insert(e);
                }
            }
        }
        if hit.len() != 1 {
            return Err(Error::Config(format!(
                "symmetry does not carry end {i} into a single deep component (hit {hit:?})"
            )));
        }
        end_permutation.push(hit.into_iter().next().unwrap());
    }

    let mut edges_compatible = true;
    for (idx, edge) in graph.edges.iter().enumerate() {
        let tpage = graph.pages[page_permutation[idx]];
        let target = graph.edges.iter().find(|e| e.page == tpage).expect("edge per page");
        let (a, b) = edge.endpoints;
        let mapped_pair = (end_permutation[a], end_permutation[b]);
        let (c, d) = target.endpoints;
        edges_compatible &= mapped_pair == (c, d) || mapped_pair == (d, c);
    }

    Ok(SymmetryAction { page_permutation, end_permutation, edges_compatible })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_scene(k: usize, dirs: &[(i64, i64)]) -> Scene {
        let book = build_book(k, dirs, 4);
        embed_book(book, 8, 1, 3, 2, 7, None).expect("embedding")
    }

    #[test]
    fn book_euler_characteristics_are_one() {
        for (k, dirs) in [
            (1usize, vec![(1i64, 0i64)]),
            (2, vec![(1, 0), (-1, 0)]),
            (4, vec![(1, 0), (0, 1), (-1, 0), (0, -1)]),
        ] {
            let book = build_book(k, &dirs, 3);
            let full = book.union_of(&(0..k).collect::<Vec<_>>());
            assert_eq!(euler_characteristic(&full), 1, "chi(W_{k})");
            assert_eq!(euler_characteristic(&book.spine), 1);
        }
    }

    #[test]
    #[should_panic(expected = "pairwise distinct")]
    fn duplicate_page_rays_are_refused() {
        build_book(2, &[(1, 0), (2, 0)], 3);
    }

    #[test]
    fn plane_scene_has_two_ends_and_a_two_circuit() {
        let scene = small_scene(2, &[(1, 0), (-1, 0)]);
        let graph = adjacency_graph(&scene).expect("graph");
        assert_eq!(graph.vertex_count(), 2);
        assert_eq!(graph.edges.len(), 2);
        let verdict = verify_circuit(graph.vertex_count(), &graph.edge_pairs());
        assert!(verdict.is_circuit);

        let cc = adjacency_chain_complex(&scene, &graph).expect("chain complex");
        assert!(cc.basis_unimodular);
        assert!(cc.matches_incidence);
        assert_eq!(cc.h0, FgAbGroup::free(1));
        assert_eq!(cc.h1, FgAbGroup::free(1));
        assert!(cc.jordan_generates_h1);
        assert_eq!(cc.jordan_coordinates, vec![BigInt::one(); 2]);
    }

    #[test]
    fn path_graph_is_not_a_circuit() {
        let verdict = verify_circuit(3, &[(0, 1), (1, 2), (2, 1)]);
        assert!(!verdict.is_circuit);
        assert_eq!(verdict.witness, Some(0));
    }

    #[test]
    fn three_page_book_is_a_triangle_with_diagonal_jordan_cycle() {
        let scene = small_scene(3, &[(1, 0), (0, 1), (-1, -1)]);
        let graph = adjacency_graph(&scene).expect("graph");
        assert_eq!(graph.vertex_count(), 3);
        assert!(verify_circuit(3, &graph.edge_pairs()).is_circuit);

        let plus = jordan_cycle(&scene, &graph, 1).expect("jordan");
        assert_eq!(plus.coordinates, vec![BigInt::one(); 3]);
        let minus = jordan_cycle(&scene, &graph, -1).expect("jordan reversed");
        assert_eq!(minus.coordinates, vec![-BigInt::one(); 3]);
    }

    #[test]
    fn collapsing_one_page_of_three_yields_the_two_circuit() {
        let scene = small_scene(3, &[(1, 0), (0, 1), (-1, -1)]);
        let graph = adjacency_graph(&scene).expect("graph");
        let (sub, verdict) = collapse_map(&scene, &graph, 1).expect("collapse");
        assert_eq!(sub.edges.len(), 2);
        assert!(verdict.is_graph_morphism);
        assert!(verdict.squares_commute);
        assert_eq!(verdict.edge_map.iter().filter(|m| m.is_none()).count(), 1);
        assert!(verify_circuit(sub.vertex_count(), &sub.edge_pairs()).is_circuit);
    }

    #[test]
    fn deep_containment_holds_for_the_plane_scene() {
        let scene = small_scene(2, &[(1, 0), (-1, 0)]);
        let graph = adjacency_graph(&scene).expect("graph");
        let verdict = deep_containment_check(&scene, &graph, 0).expect("containment");
        assert!(verdict.m.is_some(), "no containment radius found in range");
    }

    #[test]
    fn flip_symmetry_swaps_the_plane_scene_ends() {
        let scene = small_scene(2, &[(1, 0), (-1, 0)]);
        let graph = adjacency_graph(&scene).expect("graph");
        let g = LatticeIsometry::new([[1, 0, 0], [0, -1, 0], [0, 0, -1]]);
        let act = scene_symmetry_action(&scene, &graph, &g).expect("action");
        assert_eq!(act.page_permutation, vec![0, 1]);
        assert_eq!(act.end_permutation, vec![1, 0]);
        assert!(act.edges_compatible);
    }

    #[test]
    fn half_plane_scene_has_one_end_and_no_deep_homology() {
        let scene = small_scene(1, &[(1, 0)]);
        let sub = scene.subset(&[0]).expect("subset");
        assert_eq!(sub.ends.count, 1);
        for degree in 0..=2 {
            let dh = scene.deep(&[0], degree, true, None).expect("deep");
            let lim = dh.limit().expect("stable");
            assert!(lim.group.is_trivial(), "reduced deep H_{degree} should vanish");
        }
        let graph = adjacency_graph(&scene).expect("graph");
        assert!(graph.edges.is_empty());
    }
}
