//! Neighborhood filtrations of a closed set inside a lattice window, the
//! inverse systems of complement homology they generate, and the finite-scale
//! notion of an end (a deep complementary component persisting across the
//! computed range).

use crate::error::{Error, Result};
use crate::grid::{SimplicialComplex, Subcomplex, VertId};
use crate::homology::{induced_inclusion, SpaceHomology};
use crate::linalg::AbHom;
use crate::progroup::{
    eventual_images, inverse_limit_stable, limit_map_at_stage, InverseSequenceAb, LevelMorphism,
    StabilityReport, StableLimit,
};
use std::rc::Rc;

/// A complementary component only counts as deep when it reaches within this
/// lattice distance of the window boundary.
pub const DEEPNESS_MARGIN: i64 = 2;

/// Required slack between the window half-width and the largest neighborhood
/// radius: `S >= 2 * R_max + WINDOW_POLICY_MARGIN`.
pub const WINDOW_POLICY_MARGIN: i64 = 2;

/// The decreasing system of closed complements `Y^R = cl(X - N_R(K))` for
/// `R` in `[r_min, r_max]`, together with the neighborhoods themselves.
pub struct EndFiltration {
    pub window: Rc<SimplicialComplex>,
    pub k: Subcomplex,
    pub r_min: u32,
    pub r_max: u32,
    /// `neighborhoods[m]` is the full subcomplex `N_{r_min+m}(K)`.
    pub neighborhoods: Vec<Subcomplex>,
    /// `stages[m]` is `Y^{r_min+m}`.
    pub stages: Vec<Subcomplex>,
}

impl EndFiltration {
    /// Build the complement filtration of `k` at radii `r_min..=r_max`.
    ///
    /// An empty `k` degenerates to the constant filtration by the whole
    /// window. Exhausting the window (no complement left at `r_max`) and
    /// violating the window size policy are both hard errors: results at
    /// such scales would say nothing about the underlying space.
    pub fn new(k: &Subcomplex, r_min: u32, r_max: u32) -> Result<EndFiltration> {
        assert!(r_min >= 1 && r_min <= r_max, "need 1 <= r_min <= r_max");
        let window = k.parent.clone();
        if let Some(s) = window.window_halfwidth {
            let required = 2 * r_max as i64 + WINDOW_POLICY_MARGIN;
            if s < required {
                return Err(Error::WindowPolicy { s, r_max, required });
            }
        }
        let mut neighborhoods = Vec::new();
        let mut stages = Vec::new();
        let mut n = k.clone();
        for r in 1..=r_max {
            n = n.closed_star();
            if r >= r_min {
                let y = n.complement_closure();
                if y.is_empty() {
                    return Err(Error::FiltrationExhausted { r });
                }
                neighborhoods.push(n.clone());
                stages.push(y);
            }
        }
        Ok(EndFiltration { window, k: k.clone(), r_min, r_max, neighborhoods, stages })
    }

    pub fn stage_count(&self) -> usize {
        self.stages.len()
    }

    /// Index into `stages` of radius `r`.
    pub fn index_of(&self, r: u32) -> usize {
        assert!(r >= self.r_min && r <= self.r_max);
        (r - self.r_min) as usize
    }

    /// The complement `Y^r`.
    pub fn stage(&self, r: u32) -> &Subcomplex {
        &self.stages[self.index_of(r)]
    }

    /// The neighborhood `N_r(K)`.
    pub fn neighborhood(&self, r: u32) -> &Subcomplex {
        &self.neighborhoods[self.index_of(r)]
    }

    /// Whether `other` refines this filtration stagewise, i.e. each stage of
    /// `other` sits inside the corresponding stage here. Holds whenever
    /// `self.k` is contained in `other.k`.
    pub fn contains_stagewise(&self, other: &EndFiltration) -> bool {
        self.r_min == other.r_min
            && self.r_max == other.r_max
            && other.stages.iter().zip(&self.stages).all(|(a, b)| a.is_subset_of(b))
    }
}

/// The inverse system `H_i(Y^R)` (absolute, reduced, or relative to a second
/// filtration's complements), its stability analysis, and the per-stage
/// solvers kept around for class and representative queries.
pub struct DeepHomology {
    pub degree: usize,
    pub reduced: bool,
    pub relative: bool,
    pub r_min: u32,
    pub sequence: InverseSequenceAb,
    pub report: StabilityReport,
    pub stages: Vec<Rc<SpaceHomology>>,
}

impl DeepHomology {
    /// Deep homology of the filtration in one degree.
    ///
    /// With `relative_to` set, computes the pair system
    /// `H_i(Y^R, Y_0^R)` where `Y_0^R` are the complements of the larger
    /// closed set; its filtration must refine `filtration` stagewise.
    pub fn compute(
        filtration: &EndFiltration,
        degree: usize,
        reduced: bool,
        relative_to: Option<&EndFiltration>,
        confidence_window: usize,
    ) -> Result<DeepHomology> {
        if let Some(inner) = relative_to {
            assert!(
                filtration.contains_stagewise(inner),
                "relative filtration must sit inside the absolute one stagewise"
            );
        }
        let stages: Vec<Rc<SpaceHomology>> = filtration
            .stages
            .iter()
            .enumerate()
            .map(|(m, y)| {
                Rc::new(match relative_to {
                    Some(inner) => SpaceHomology::relative(y, &inner.stages[m]),
                    None => SpaceHomology::absolute(y, reduced),
                })
            })
            .collect();
        let terms = stages.iter().map(|h| h.group(degree)).collect::<Vec<_>>();
        let mut bondings = Vec::new();
        for m in 0..stages.len() - 1 {
            bondings.push(induced_inclusion(&stages[m + 1], &stages[m], degree)?);
        }
        let sequence = InverseSequenceAb::new(filtration.r_min as i64, terms, bondings);
        let report = eventual_images(&sequence, confidence_window);
        Ok(DeepHomology {
            degree,
            reduced,
            relative: relative_to.is_some(),
            r_min: filtration.r_min,
            sequence,
            report,
            stages,
        })
    }

    pub fn is_stable(&self) -> bool {
        self.report.is_stable()
    }

    /// The stable inverse limit, or an error when the verdict forbids one.
    pub fn limit(&self) -> Result<StableLimit> {
        inverse_limit_stable(&self.sequence, &self.report)
    }

    /// The solver for stage index `m` (radius `r_min + m`).
    pub fn stage_homology(&self, m: usize) -> &Rc<SpaceHomology> {
        &self.stages[m]
    }
}

/// Map of inverse systems induced by an inclusion of complements: `dom` must
/// be the deep homology of the larger closed set (smaller complements).
pub fn level_inclusion(dom: &DeepHomology, cod: &DeepHomology) -> Result<LevelMorphism> {
    assert_eq!(dom.degree, cod.degree);
    assert_eq!(dom.stages.len(), cod.stages.len());
    let mut components = Vec::new();
    for m in 0..dom.stages.len() {
        components.push(induced_inclusion(&dom.stages[m], &cod.stages[m], dom.degree)?);
    }
    Ok(LevelMorphism::new(&dom.sequence, &cod.sequence, components))
}

/// The map induced on stable limits by an inclusion of complements,
/// presented at the latest stabilization stage of the two systems. Returns
/// that common stage index together with the limit map.
pub fn end_induced_map(dom: &DeepHomology, cod: &DeepHomology) -> Result<(usize, AbHom)> {
    assert_eq!(dom.degree, cod.degree);
    let (dl, cl) = (dom.limit()?, cod.limit()?);
    let stage = dl.stage.max(cl.stage);
    let f = induced_inclusion(&dom.stages[stage], &cod.stages[stage], dom.degree)?;
    let map = limit_map_at_stage(&dom.report.images[stage], &cod.report.images[stage], &f)?;
    Ok((stage, map))
}

/// The ends detected by a filtration: deep complementary components at the
/// deepest computed radius, with vertex representatives and the radius from
/// which they biject with the deep components of every later stage.
pub struct EndSet {
    pub count: usize,
    /// One vertex per end, inside the deepest stage, ordered by vertex id.
    pub reps: Vec<VertId>,
    /// Least radius from which the stage-by-stage bijection holds.
    pub r0: u32,
    /// Per stage, the component id of each end's representative.
    pub comp_of_end: Vec<Vec<usize>>,
    /// Per stage, the sorted ids of deep (shell-touching) components.
    pub deep_comps: Vec<Vec<usize>>,
}

fn touches_shell(window: &SimplicialComplex, v: VertId, margin: i64) -> bool {
    let s = window.window_halfwidth.expect("end detection needs a lattice window");
    let p = window.verts[v as usize];
    (0..window.ambient_dim).any(|a| p[a].abs() >= s - margin)
}

/// Detect the ends of a filtration.
///
/// A component of `Y^R` is deep when it reaches the window's boundary shell
/// (within `DEEPNESS_MARGIN` of the frontier); an end is a deep component of
/// the deepest stage. The persistence check finds the least radius `r0` from
/// which the ends inject onto exactly the deep components of every stage —
/// shallow radii where components have not yet separated are tolerated, but
/// the bijection must hold on a final segment or the window is judged too
/// small (window policy error).
pub fn deep_components(filtration: &EndFiltration) -> Result<EndSet> {
    let window = &filtration.window;
    let nstages = filtration.stage_count();
    let mut stage_comps = Vec::with_capacity(nstages);
    let mut deep_comps = Vec::with_capacity(nstages);
    for y in &filtration.stages {
        let comps = y.connected_components();
        let mut deep: Vec<usize> = Vec::new();
        for (cid, _) in comps.reps.iter().enumerate() {
            let hit = y
                .vertex_ids()
                .into_iter()
                .any(|v| comps.comp_of_vertex[v as usize] == cid
                    && touches_shell(window, v, DEEPNESS_MARGIN));
            if hit {
                deep.push(cid);
            }
        }
        stage_comps.push(comps);
        deep_comps.push(deep);
    }

    let last = nstages - 1;
    let mut reps: Vec<VertId> =
        deep_comps[last].iter().map(|&cid| stage_comps[last].reps[cid]).collect();
    reps.sort_unstable();
    let count = reps.len();

    // Each representative lies in every shallower stage, so it picks out a
    // component there; record those and check where the bijection holds.
    let mut comp_of_end = Vec::with_capacity(nstages);
    let mut biject = Vec::with_capacity(nstages);
    for m in 0..nstages {
        let comps = &stage_comps[m];
        let ids: Vec<usize> =
            reps.iter().map(|&v| comps.comp_of_vertex[v as usize]).collect();
        let mut sorted = ids.clone();
        sorted.sort_unstable();
        sorted.dedup();
        biject.push(sorted == deep_comps[m]);
        comp_of_end.push(ids);
    }
    let mut first_ok = last;
    while first_ok > 0 && biject[first_ok - 1] {
        first_ok -= 1;
    }
    if !biject[last] {
        // The deepest stage maps ends to themselves, so this only fails if a
        // deep component there contains no representative — impossible.
        unreachable!("ends come from the deepest stage's own deep components");
    }
    Ok(EndSet {
        count,
        reps,
        r0: filtration.r_min + first_ok as u32,
        comp_of_end,
        deep_comps,
    })
}

/// Where each end of the finer filtration (larger closed set, `dom`) lands
/// among the ends of the coarser one (`cod`): `result[i]` is the index in
/// `cod_ends.reps` of the deep component absorbing dom end `i` at the
/// deepest stage. Errors if an end lands in a shallow component.
pub fn end_projection(
    dom_ends: &EndSet,
    cod_ends: &EndSet,
    cod_filtration: &EndFiltration,
) -> Result<Vec<usize>> {
    let last = cod_filtration.stage_count() - 1;
    let comps = cod_filtration.stages[last].connected_components();
    let mut out = Vec::with_capacity(dom_ends.count);
    for (i, &v) in dom_ends.reps.iter().enumerate() {
        let cid = *comps
            .comp_of_vertex
            .get(v as usize)
            .filter(|&&c| c != usize::MAX)
            .ok_or_else(|| Error::Config(format!("end {i} representative left the complement")))?;
        let rep = comps.reps[cid];
        let j = cod_ends.reps.iter().position(|&r| r == rep).ok_or_else(|| {
            Error::Config(format!("end {i} lands in a shallow component of the coarser complement"))
        })?;
        out.push(j);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_window;
    use crate::linalg::FgAbGroup;

    /// Full subcomplex on the vertices satisfying `keep`.
    fn locus(
        window: &Rc<SimplicialComplex>,
        keep: impl Fn(&[i64; 3]) -> bool,
    ) -> Subcomplex {
        let verts: Vec<u32> = (0..window.verts.len() as u32)
            .filter(|&v| keep(&window.verts[v as usize]))
            .collect();
        window.full_subcomplex_on(&verts)
    }

    #[test]
    fn window_policy_is_enforced() {
        let w = build_window(2, 4, None).unwrap();
        let axis = locus(&w, |p| p[0] == 0);
        match EndFiltration::new(&axis, 1, 3) {
            Err(Error::WindowPolicy { s: 4, r_max: 3, required: 8 }) => {}
            other => panic!("expected a window policy error, got {:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn exhaustion_is_reported() {
        let w = build_window(1, 8, None).unwrap();
        let all = w.full_subcomplex();
        match EndFiltration::new(&all, 1, 2) {
            Err(Error::FiltrationExhausted { r: 1 }) => {}
            other => panic!("expected exhaustion, got {:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn empty_set_gives_constant_window_filtration() {
        let w = build_window(2, 8, None).unwrap();
        let f = EndFiltration::new(&Subcomplex::empty(&w), 1, 3).unwrap();
        for r in 1..=3 {
            assert!(f.stage(r).same_as(&w.full_subcomplex()));
        }
        let ends = deep_components(&f).unwrap();
        assert_eq!(ends.count, 1);
        assert_eq!(ends.r0, 1);
    }

    #[test]
    fn line_in_plane_has_two_ends_and_deep_h0() {
        let w = build_window(2, 8, None).unwrap();
        let line = locus(&w, |p| p[1] == 0);
        let f = EndFiltration::new(&line, 1, 3).unwrap();
        let ends = deep_components(&f).unwrap();
        assert_eq!(ends.count, 2);
        assert_eq!(ends.r0, 1);

        let dh = DeepHomology::compute(&f, 0, true, None, 2).unwrap();
        assert!(dh.is_stable());
        let lim = dh.limit().unwrap();
        assert_eq!(lim.group, FgAbGroup::free(1)); // two ends, reduced
    }

    #[test]
    fn axis_in_space_has_one_end_and_deep_h1() {
        let w = build_window(3, 8, None).unwrap();
        let axis = locus(&w, |p| p[0] == 0 && p[1] == 0);
        let f = EndFiltration::new(&axis, 1, 3).unwrap();
        let ends = deep_components(&f).unwrap();
        assert_eq!(ends.count, 1);

        let h0 = DeepHomology::compute(&f, 0, true, None, 2).unwrap();
        assert!(h0.is_stable());
        assert!(h0.limit().unwrap().group.is_trivial());

        let h1 = DeepHomology::compute(&f, 1, false, None, 2).unwrap();
        assert!(h1.is_stable());
        assert_eq!(h1.limit().unwrap().group, FgAbGroup::free(1));
    }

    #[test]
    fn end_projection_merges_halfplane_ends_onto_plane() {
        // Complements: the half-plane leaves one deep component whose single
        // end absorbs into one of the two ends of the full plane's
        // complement pair under inclusion of closed sets.
        let w = build_window(3, 8, None).unwrap();
        let plane = locus(&w, |p| p[2] == 0);
        let half = locus(&w, |p| p[2] == 0 && p[0] >= 0);
        let f_plane = EndFiltration::new(&plane, 1, 3).unwrap();
        let f_half = EndFiltration::new(&half, 1, 3).unwrap();
        assert!(f_half.contains_stagewise(&f_plane));

        let ends_plane = deep_components(&f_plane).unwrap();
        let ends_half = deep_components(&f_half).unwrap();
        assert_eq!(ends_plane.count, 2);
        assert_eq!(ends_half.count, 1);

        let proj = end_projection(&ends_plane, &ends_half, &f_half).unwrap();
        assert_eq!(proj, vec![0, 0]); // both ends merge into the single one
    }

    #[test]
    fn end_induced_map_on_limits_is_the_fold() {
        // Reduced deep H_0: plane complement gives Z (two ends), half-plane
        // complement gives 0; the induced limit map must be zero, and the
        // level morphism must pass the commuting-square audit.
        let w = build_window(3, 8, None).unwrap();
        let plane = locus(&w, |p| p[2] == 0);
        let half = locus(&w, |p| p[2] == 0 && p[0] >= 0);
        let f_plane = EndFiltration::new(&plane, 1, 3).unwrap();
        let f_half = EndFiltration::new(&half, 1, 3).unwrap();

        let dh_plane = DeepHomology::compute(&f_plane, 0, true, None, 2).unwrap();
        let dh_half = DeepHomology::compute(&f_half, 0, true, None, 2).unwrap();
        assert_eq!(dh_plane.limit().unwrap().group, FgAbGroup::free(1));
        assert!(dh_half.limit().unwrap().group.is_trivial());

        level_inclusion(&dh_plane, &dh_half).unwrap();
        let (_, m) = end_induced_map(&dh_plane, &dh_half).unwrap();
        assert!(m.is_zero_map());
    }

    #[test]
    fn relative_pair_system_is_stable() {
        // Absolute complements come from the half-plane, the relative
        // divisor from the full plane containing it.
        let w = build_window(3, 8, None).unwrap();
        let plane = locus(&w, |p| p[2] == 0);
        let half = locus(&w, |p| p[2] == 0 && p[0] >= 0);
        let f_plane = EndFiltration::new(&plane, 1, 3).unwrap();
        let f_half = EndFiltration::new(&half, 1, 3).unwrap();

        let rel = DeepHomology::compute(&f_half, 1, false, Some(&f_plane), 2).unwrap();
        assert!(rel.relative);
        assert!(rel.is_stable());
        // The half-plane complement is connected while the plane complement
        // has two pieces, so H_1 of the pair is the kernel of Z^2 -> Z on
        // components: one copy of Z.
        assert_eq!(rel.limit().unwrap().group, FgAbGroup::free(1));
    }
}
