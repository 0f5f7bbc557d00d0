//! Stage-level Alexander duality between complement homology and compactly
//! supported cohomology of the embedded domain, the ladder of a pair with
//! sign-normalized commuting squares, and excision for relative deep
//! homology.
//!
//! The stage map in codimension `k` is a three-leg composite: invert the
//! connecting isomorphism of the pair (window, complement), invert the
//! homology map induced by capping with the window's fundamental cycle, and
//! pull the resulting compactly supported cocycle back along the chain
//! approximation of the embedding. The cap leg pairs homology stage `t` with
//! neighborhood stage `t + 1`: capped chains stray at most one star from the
//! cochain's support, so their boundary defects land one stage down, where
//! the complement absorbs them.

use crate::chain::{BasedComplex, HomologyComputer, LChain};
use crate::coarse::ChainApprox;
use crate::error::{Error, Result};
use crate::filtered::{DeepHomology, EndFiltration};
use crate::grid::{window_boundary, Cell, SimplicialComplex, Subcomplex, VertId};
use crate::homology::{
    connecting_hom, evaluate, induced_inclusion, CapOperator, CompactCohomology, SpaceHomology,
};
use crate::linalg::{
    hom_image, hom_inverse, hom_is_iso, hom_kernel, subgroups_equal, AbHom, FgAbGroup,
};
use crate::progroup::{limit_map_at_stage, LevelMorphism};
use num_bigint::BigInt;
use num_traits::Zero;
use std::cell::RefCell;
use std::collections::BTreeMap;
use std::rc::Rc;

/// Homomorphism induced between two label-complex homology computers by a
/// label-level chain map.
pub fn computer_map(
    dom: &HomologyComputer,
    ddeg: usize,
    cod: &HomologyComputer,
    cdeg: usize,
    f: impl Fn(&LChain) -> LChain,
) -> Result<AbHom> {
    let gd = dom.group(ddeg);
    let gc = cod.group(cdeg);
    let mut matrix = vec![vec![BigInt::zero(); gd.num_gens()]; gc.num_gens()];
    for j in 0..gd.num_gens() {
        let img = f(&dom.representative(ddeg, j));
        let coords = cod.class_of(cdeg, &img)?;
        for (i, v) in coords.into_iter().enumerate() {
            matrix[i][j] = v;
        }
    }
    Ok(AbHom::new(gd, gc, matrix))
}

/// Pull a window cocycle back along a chain approximation, producing a
/// cochain over the target computer's labels in transposed degree `tdeg`.
/// `forbidden` lists cell labels of the domain complex on which the pullback
/// must vanish (the divisor of the target's relative structure); a nonzero
/// value there means the map does not respect it.
fn pullback_cochain(
    f: &ChainApprox,
    phi: &LChain,
    k: usize,
    target: &HomologyComputer,
    tdeg: usize,
    forbidden: &[u64],
) -> Result<LChain> {
    let mut psi = LChain::new();
    for &l in &target.complex().labels[tdeg] {
        let cell = Cell::from_label(l);
        debug_assert_eq!(cell.dim as usize, k);
        let v = evaluate(phi, &f.images[k][cell.id as usize]);
        if !v.is_zero() {
            psi.insert(l, v);
        }
    }
    for &l in forbidden {
        let cell = Cell::from_label(l);
        if !evaluate(phi, &f.images[k][cell.id as usize]).is_zero() {
            return Err(Error::RelativeStructure { dim: cell.dim as usize, id: cell.id });
        }
    }
    Ok(psi)
}

/// Exactness at the middle of `a` then `b`: image of `a` equals kernel of `b`.
fn im_eq_ker(a: &AbHom, b: &AbHom) -> bool {
    subgroups_equal(&a.cod, &hom_image(a).gens, &hom_kernel(b).gens)
}

/// Compare two parallel homomorphisms up to one global sign: `Some(1)` if
/// equal, `Some(-1)` if negatives of each other, `None` otherwise.
pub fn sign_commute(x: &AbHom, y: &AbHom) -> Option<i8> {
    let mx = x.canonical_matrix();
    let my = y.canonical_matrix();
    if mx == my {
        return Some(1);
    }
    let neg: Vec<Vec<BigInt>> = my.iter().map(|r| r.iter().map(|v| -v).collect()).collect();
    if mx == neg {
        return Some(-1);
    }
    None
}

/// One duality problem: a chain-approximated embedding `f: Z -> X`, the part
/// of `Z` playing the role of infinity, and the complement filtration of the
/// image support.
pub struct DualityScene {
    pub f: ChainApprox,
    pub fr_z: Subcomplex,
    pub filtration: EndFiltration,
    pub coh_z: CompactCohomology,
    pub window: Rc<SimplicialComplex>,
    cap: CapOperator,
    shell: Subcomplex,
    full: Subcomplex,
    pairs: RefCell<BTreeMap<u32, Rc<SpaceHomology>>>,
    reduced: RefCell<BTreeMap<u32, Rc<SpaceHomology>>>,
}

impl DualityScene {
    pub fn new(f: ChainApprox, fr_z: Subcomplex, r_min: u32, r_max: u32) -> Result<Self> {
        assert!(Rc::ptr_eq(&fr_z.parent, &f.dom), "frontier must live in the domain complex");
        let window = f.cod.clone();
        let support = f.support();
        let filtration = EndFiltration::new(&support, r_min, r_max)?;
        let z_full = f.dom.full_subcomplex();
        let coh_z = CompactCohomology::new(&z_full, &fr_z);
        let cap = CapOperator::new(&window);
        let shell = window_boundary(&window);
        let full = window.full_subcomplex();
        Ok(DualityScene {
            f,
            fr_z,
            filtration,
            coh_z,
            window,
            cap,
            shell,
            full,
            pairs: RefCell::new(BTreeMap::new()),
            reduced: RefCell::new(BTreeMap::new()),
        })
    }

    pub fn ambient_dim(&self) -> usize {
        self.window.ambient_dim
    }

    /// The stage offset constant: measured cap displacement plus one.
    pub fn stage_offset(&self, k: usize) -> u32 {
        self.cap.measured_displacement(k) + 1
    }

    /// H_*(X, Y^t) solver, cached per stage.
    pub fn pair_at(&self, t: u32) -> Rc<SpaceHomology> {
        if let Some(p) = self.pairs.borrow().get(&t) {
            return p.clone();
        }
        let p = Rc::new(SpaceHomology::relative(&self.full, self.filtration.stage(t)));
        self.pairs.borrow_mut().insert(t, p.clone());
        p
    }

    /// Reduced H̃_*(Y^t) solver, cached per stage.
    pub fn reduced_at(&self, t: u32) -> Rc<SpaceHomology> {
        if let Some(p) = self.reduced.borrow().get(&t) {
            return p.clone();
        }
        let p = Rc::new(SpaceHomology::absolute(self.filtration.stage(t), true));
        self.reduced.borrow_mut().insert(t, p.clone());
        p
    }

    /// Cochain model of the stage-`b` neighborhood relative to its window
    /// shell caps (the directions in which the support escapes to infinity).
    /// The lateral frontier is *not* quotiented: cocycles may be nonzero
    /// there, and capping pushes that overflow into the complement, where
    /// the target pair's divisor absorbs it.
    fn neighborhood_cohomology(&self, b: u32) -> CompactCohomology {
        let n_b = self.filtration.neighborhood(b);
        CompactCohomology::new(n_b, &self.shell.intersect(n_b))
    }

    /// The homology map induced by capping stage-`b` cocycles with the
    /// fundamental cycle, landing in the relative homology `target` (whose
    /// divisor must absorb the one-star displacement of the cap).
    fn cap_hom(
        &self,
        cohn: &CompactCohomology,
        k: usize,
        target: &SpaceHomology,
    ) -> Result<AbHom> {
        let n = self.ambient_dim();
        let gd = cohn.group(k);
        let gc = target.group(n - k);
        let mut matrix = vec![vec![BigInt::zero(); gd.num_gens()]; gc.num_gens()];
        for j in 0..gd.num_gens() {
            let phi = cohn.representative(k, j);
            let capped = self.cap.cap(k, &phi);
            let coords = target.class_of(n - k, &capped)?;
            for (i, v) in coords.into_iter().enumerate() {
                matrix[i][j] = v;
            }
        }
        Ok(AbHom::new(gd, gc, matrix))
    }

    fn pullback_hom(
        &self,
        cohn: &CompactCohomology,
        k: usize,
        target: &HomologyComputer,
        tdeg: usize,
        forbidden: &[u64],
    ) -> Result<AbHom> {
        let gd = cohn.group(k);
        let gc = target.group(tdeg);
        let mut matrix = vec![vec![BigInt::zero(); gd.num_gens()]; gc.num_gens()];
        for j in 0..gd.num_gens() {
            let phi = cohn.representative(k, j);
            let psi = pullback_cochain(&self.f, &phi, k, target, tdeg, forbidden)?;
            let coords = target.class_of(tdeg, &psi)?;
            for (i, v) in coords.into_iter().enumerate() {
                matrix[i][j] = v;
            }
        }
        Ok(AbHom::new(gd, gc, matrix))
    }

    /// The absolute duality vertical at homology stage `t`, targeting an
    /// arbitrary cochain computer (callers pass either this scene's own
    /// cochain model or a row of a ladder system).
    fn stage_map_into(
        &self,
        k: usize,
        t: u32,
        red: &SpaceHomology,
        pair: &SpaceHomology,
        target: &HomologyComputer,
        tdeg: usize,
        forbidden: &[u64],
    ) -> Result<AbHom> {
        let n = self.ambient_dim();
        assert!(k < n, "codimension must leave a positive complement degree");
        let b = t + 1;
        if b > self.filtration.r_max {
            return Err(Error::Config(format!(
                "duality stage {t} needs neighborhood stage {b} beyond r_max = {}",
                self.filtration.r_max
            )));
        }
        let bd = connecting_hom(pair, red, n - k)?;
        let bd_inv = hom_inverse(&bd).ok_or_else(|| Error::NotInvertible {
            what: "connecting map of the contractible-window pair".into(),
        })?;
        let cohn = self.neighborhood_cohomology(b);
        let caph = self.cap_hom(&cohn, k, pair)?;
        let cap_inv = hom_inverse(&caph).ok_or_else(|| Error::NotInvertible {
            what: "cap with the fundamental cycle".into(),
        })?;
        let pull = self.pullback_hom(&cohn, k, target, tdeg, forbidden)?;
        Ok(pull.compose(&cap_inv).compose(&bd_inv))
    }

    /// The duality map at homology stage `t` in codimension `k`:
    /// H̃_{n-k-1}(Y^t) -> H^k_c(Z).
    pub fn duality_stage_map(&self, k: usize, t: u32) -> Result<AbHom> {
        let red = self.reduced_at(t);
        let pair = self.pair_at(t);
        let forbidden: Vec<u64> = self.fr_z.cells(k).map(|c| c.label()).collect();
        self.stage_map_into(k, t, &red, &pair, &self.coh_z.computer, self.coh_z.shift - k, &forbidden)
    }

    /// Pro-morphism audit: the stage map at `t` composed with the bonding
    /// from stage `t + 1` must agree with the stage map at `t + 1`, up to
    /// one global sign. Returns the sign.
    pub fn stage_compatibility(&self, k: usize, t: u32) -> Result<Option<i8>> {
        let n = self.ambient_dim();
        let a_t = self.duality_stage_map(k, t)?;
        let a_next = self.duality_stage_map(k, t + 1)?;
        let bond = induced_inclusion(&self.reduced_at(t + 1), &self.reduced_at(t), n - k - 1)?;
        Ok(sign_commute(&a_t.compose(&bond), &a_next))
    }
}

/// Per-stage verdicts of the duality verification.
pub struct DualityStageVerdict {
    pub t: u32,
    pub group: FgAbGroup,
    pub iso: bool,
    /// Sign relating this stage map (precomposed with the bonding) to the
    /// next stage's; `None` there is no next usable stage.
    pub compat: Option<Option<i8>>,
}

pub struct DualityReport {
    pub k: usize,
    pub target: FgAbGroup,
    pub stages: Vec<DualityStageVerdict>,
    pub limit_iso: bool,
    pub stage_offset: u32,
}

impl DualityReport {
    pub fn all_good(&self) -> bool {
        self.limit_iso
            && self.stages.iter().all(|s| {
                s.iso && s.compat.map_or(true, |c| c.is_some())
            })
    }
}

/// Verify the duality isomorphism in codimension `k`: every usable stage map
/// is an isomorphism, consecutive stage maps agree through the bondings up
/// to sign, and the induced map on the stable limit is an isomorphism onto
/// H^k_c(Z).
pub fn verify_duality_iso(scene: &DualityScene, k: usize, w: usize) -> Result<DualityReport> {
    let n = scene.ambient_dim();
    let deep = DeepHomology::compute(&scene.filtration, n - k - 1, true, None, w)?;
    let limit = deep.limit()?;
    let (r_min, r_max) = (scene.filtration.r_min, scene.filtration.r_max);
    let mut stages = Vec::new();
    let mut limit_iso = false;
    for t in r_min..r_max {
        let a = scene.duality_stage_map(k, t)?;
        let compat = if t + 1 < r_max { Some(scene.stage_compatibility(k, t)?) } else { None };
        stages.push(DualityStageVerdict { t, group: a.dom.clone(), iso: hom_is_iso(&a), compat });
        let m = scene.filtration.index_of(t);
        if m >= limit.stage {
            // the limit map, presented at this stage's eventual image
            let full_cod = hom_image(&AbHom::identity(&scene.coh_z.group(k)));
            let lm = limit_map_at_stage(&deep.report.images[m], &full_cod, &a)?;
            if m == limit.stage.max(scene.filtration.index_of(r_min)) {
                limit_iso = hom_is_iso(&lm);
            }
        }
    }
    Ok(DualityReport {
        k,
        target: scene.coh_z.group(k),
        stages,
        limit_iso,
        stage_offset: scene.stage_offset(k),
    })
}

/// The three compactly supported cochain complexes of a domain pair
/// `(Z_0, Z_1)`: ambient `C_c(Z_0)`, the subcomplex of cochains vanishing on
/// `Z_1` (the open complement), and the quotient `C_c(Z_1)`. All three share
/// degree bookkeeping: `H^k` sits in transposed degree `shift - k`.
pub struct CochainSystem {
    pub shift: usize,
    pub amb: HomologyComputer,
    pub sub: HomologyComputer,
    pub quot: HomologyComputer,
}

impl CochainSystem {
    pub fn new(dom: &Rc<SimplicialComplex>, fr_z: &Subcomplex, z1: &Subcomplex) -> Self {
        let z_full = dom.full_subcomplex();
        let rel = BasedComplex::from_subcomplex(&z_full, Some(fr_z), false);
        let shift = rel.top_dim();
        let amb = rel.transpose();
        let sub = amb.restricted(|l| !z1.contains(Cell::from_label(l)));
        let quot = amb.restricted(|l| z1.contains(Cell::from_label(l)));
        CochainSystem {
            shift,
            amb: HomologyComputer::new(amb),
            sub: HomologyComputer::new(sub),
            quot: HomologyComputer::new(quot),
        }
    }

    /// Restriction H^k_c(Z_0) -> H^k_c(Z_1).
    pub fn restriction(&self, k: usize) -> Result<AbHom> {
        computer_map(&self.amb, self.shift - k, &self.quot, self.shift - k, |ch| ch.clone())
    }

    /// Extension by zero H^k_c(Z_0 - Z_1) -> H^k_c(Z_0).
    pub fn extension(&self, k: usize) -> Result<AbHom> {
        computer_map(&self.sub, self.shift - k, &self.amb, self.shift - k, |ch| ch.clone())
    }

    /// Connecting map H^k_c(Z_1) -> H^{k+1}_c(Z_0 - Z_1): lift a cocycle of
    /// the quotient by zero, take its coboundary in the ambient complex, and
    /// read the class in the subcomplex.
    pub fn connecting(&self, k: usize) -> Result<AbHom> {
        let d = self.shift - k;
        let gd = self.quot.group(d);
        let gc = self.sub.group(d - 1);
        let mut matrix = vec![vec![BigInt::zero(); gd.num_gens()]; gc.num_gens()];
        for j in 0..gd.num_gens() {
            let rep = self.quot.representative(d, j);
            let bd = self.amb.complex().boundary_lchain(d, &rep);
            for &l in bd.keys() {
                assert!(
                    self.sub.complex().index_of(d - 1, l).is_some(),
                    "coboundary of a lifted cocycle escaped the vanishing subcomplex"
                );
            }
            let coords = self.sub.class_of(d - 1, &bd)?;
            for (i, v) in coords.into_iter().enumerate() {
                matrix[i][j] = v;
            }
        }
        Ok(AbHom::new(gd, gc, matrix))
    }
}

/// A duality problem for a pair of closed sets: the scene of the full
/// domain `Z_0` together with a subcomplex `Z_1` and the filtration of its
/// (smaller) image support.
pub struct DualityPair {
    pub scene: DualityScene,
    pub z1: Subcomplex,
    pub filt1: EndFiltration,
    pub cochains: CochainSystem,
    reduced1: RefCell<BTreeMap<u32, Rc<SpaceHomology>>>,
    pairs1: RefCell<BTreeMap<u32, Rc<SpaceHomology>>>,
    pairs10: RefCell<BTreeMap<u32, Rc<SpaceHomology>>>,
}

impl DualityPair {
    pub fn new(f: ChainApprox, fr_z: Subcomplex, z1: Subcomplex, r_min: u32, r_max: u32) -> Result<Self> {
        assert!(Rc::ptr_eq(&z1.parent, &f.dom));
        // image support of the restriction of f to Z_1
        let k1_cells = z1
            .all_cells()
            .flat_map(|c| f.images[c.dim as usize][c.id as usize].keys().copied().map(Cell::from_label).collect::<Vec<_>>());
        let k1 = Subcomplex::from_cells(&f.cod, k1_cells);
        let filt1 = EndFiltration::new(&k1, r_min, r_max)?;
        let cochains = CochainSystem::new(&f.dom, &fr_z, &z1);
        let scene = DualityScene::new(f, fr_z, r_min, r_max)?;
        assert!(
            filt1.contains_stagewise(&scene.filtration),
            "the sub-support's complements must contain the full support's"
        );
        Ok(DualityPair {
            scene,
            z1,
            filt1,
            cochains,
            reduced1: RefCell::new(BTreeMap::new()),
            pairs1: RefCell::new(BTreeMap::new()),
            pairs10: RefCell::new(BTreeMap::new()),
        })
    }

    pub fn reduced1_at(&self, t: u32) -> Rc<SpaceHomology> {
        if let Some(p) = self.reduced1.borrow().get(&t) {
            return p.clone();
        }
        let p = Rc::new(SpaceHomology::absolute(self.filt1.stage(t), true));
        self.reduced1.borrow_mut().insert(t, p.clone());
        p
    }

    fn pair1_at(&self, t: u32) -> Rc<SpaceHomology> {
        if let Some(p) = self.pairs1.borrow().get(&t) {
            return p.clone();
        }
        let p = Rc::new(SpaceHomology::relative(&self.scene.full, self.filt1.stage(t)));
        self.pairs1.borrow_mut().insert(t, p.clone());
        p
    }

    /// H_*(Y_1^t, Y_0^t): the complement pair of the two supports.
    pub fn pair10_at(&self, t: u32) -> Rc<SpaceHomology> {
        if let Some(p) = self.pairs10.borrow().get(&t) {
            return p.clone();
        }
        let p = Rc::new(SpaceHomology::relative(
            self.filt1.stage(t),
            self.scene.filtration.stage(t),
        ));
        self.pairs10.borrow_mut().insert(t, p.clone());
        p
    }

    fn forbidden(&self, k: usize, include_z1: bool) -> Vec<u64> {
        let mut out: Vec<u64> = self.scene.fr_z.cells(k).map(|c| c.label()).collect();
        if include_z1 {
            out.extend(self.z1.cells(k).filter(|c| !self.scene.fr_z.contains(*c)).map(|c| c.label()));
        }
        out
    }

    /// The vertical over `Z_1`: H̃_{n-k-1}(Y_1^t) -> H^k_c(Z_1), built from
    /// the sub-support's own neighborhoods.
    pub fn vertical1(&self, k: usize, t: u32) -> Result<AbHom> {
        let n = self.scene.ambient_dim();
        let b = t + 1;
        if b > self.filt1.r_max {
            return Err(Error::Config(format!("stage {t} needs neighborhood stage {b}")));
        }
        let red1 = self.reduced1_at(t);
        let pair1 = self.pair1_at(t);
        let bd = connecting_hom(&pair1, &red1, n - k)?;
        let bd_inv = hom_inverse(&bd).ok_or_else(|| Error::NotInvertible {
            what: "connecting map of the contractible-window pair".into(),
        })?;
        let n_b = self.filt1.neighborhood(b);
        let cohn = CompactCohomology::new(n_b, &self.scene.shell.intersect(n_b));
        let caph = self.scene.cap_hom(&cohn, k, &pair1)?;
        let cap_inv = hom_inverse(&caph).ok_or_else(|| Error::NotInvertible {
            what: "cap with the fundamental cycle".into(),
        })?;
        let fr1: Vec<u64> = self
            .scene
            .fr_z
            .intersect(&self.z1)
            .cells(k)
            .map(|c| c.label())
            .collect();
        let pull = self.scene.pullback_hom(
            &cohn,
            k,
            &self.cochains.quot,
            self.cochains.shift - k,
            &fr1,
        )?;
        Ok(pull.compose(&cap_inv).compose(&bd_inv))
    }

    /// The relative vertical: H_{n-k-1}(Y_1^t, Y_0^t) -> H^{k+1}_c(Z_0 - Z_1),
    /// a cap inverse followed by the relative pullback (no connecting leg).
    pub fn vertical_rel(&self, k: usize, t: u32) -> Result<AbHom> {
        let j = k + 1;
        let b = t + 1;
        let n0_b = self.scene.filtration.neighborhood(b);
        let n1_b = self.filt1.neighborhood(b);
        let div = n1_b.union(&self.scene.shell.intersect(n0_b));
        let cohn = CompactCohomology::new(n0_b, &div);
        let pair10 = self.pair10_at(t);
        let caph = self.scene.cap_hom(&cohn, j, &pair10)?;
        let cap_inv = hom_inverse(&caph).ok_or_else(|| Error::NotInvertible {
            what: "relative cap with the fundamental cycle".into(),
        })?;
        let forbidden = self.forbidden(j, true);
        let pull = self.scene.pullback_hom(
            &cohn,
            j,
            &self.cochains.sub,
            self.cochains.shift - j,
            &forbidden,
        )?;
        Ok(pull.compose(&cap_inv))
    }

    /// The vertical over `Z_0` targeting the ladder's own ambient cochain
    /// system (identical presentation to the scene's, kept apart for ladder
    /// consistency).
    pub fn vertical0(&self, k: usize, t: u32) -> Result<AbHom> {
        let red0 = self.scene.reduced_at(t);
        let pair0 = self.scene.pair_at(t);
        let forbidden = self.forbidden(k, false);
        self.scene.stage_map_into(
            k,
            t,
            &red0,
            &pair0,
            &self.cochains.amb,
            self.cochains.shift - k,
            &forbidden,
        )
    }

    /// One period of the duality ladder at stage `t`, spanning codimensions
    /// `k` and `k + 1`.
    pub fn ladder_stage(&self, k: usize, t: u32) -> Result<LadderStage> {
        let n = self.scene.ambient_dim();
        let i = n - k - 1;
        let red0 = self.scene.reduced_at(t);
        let red1 = self.reduced1_at(t);
        let pair10 = self.pair10_at(t);

        let top1 = induced_inclusion(&red0, &red1, i)?;
        let top2 = induced_inclusion(&red1, &pair10, i)?;
        let top3 = connecting_hom(&pair10, &red0, i)?;
        let top4 = induced_inclusion(&red0, &red1, i - 1)?;

        let bot1 = self.cochains.restriction(k)?;
        let bot2 = self.cochains.connecting(k)?;
        let bot3 = self.cochains.extension(k + 1)?;
        let bot4 = self.cochains.restriction(k + 1)?;

        let a0 = self.vertical0(k, t)?;
        let a1 = self.vertical1(k, t)?;
        let arel = self.vertical_rel(k, t)?;
        let a0_next = self.vertical0(k + 1, t)?;

        let squares = [
            sign_commute(&a1.compose(&top1), &bot1.compose(&a0)),
            sign_commute(&arel.compose(&top2), &bot2.compose(&a1)),
            sign_commute(&a0_next.compose(&top3), &bot3.compose(&arel)),
        ];
        let top_exact = [
            im_eq_ker(&top1, &top2),
            im_eq_ker(&top2, &top3),
            im_eq_ker(&top3, &top4),
        ];
        let bottom_exact = [
            im_eq_ker(&bot1, &bot2),
            im_eq_ker(&bot2, &bot3),
            im_eq_ker(&bot3, &bot4),
        ];
        let verticals_iso = [hom_is_iso(&a0), hom_is_iso(&a1), hom_is_iso(&arel), hom_is_iso(&a0_next)];
        Ok(LadderStage {
            t,
            k,
            squares,
            top_exact,
            bottom_exact,
            verticals_iso,
            top: [top1, top2, top3],
            bottom: [bot1, bot2, bot3],
            verticals: [a0, a1, arel, a0_next],
        })
    }
}

/// One period of a duality ladder: three squares spanning two codimensions,
/// with sign-normalized commutativity verdicts, exactness of both rows, and
/// isomorphism verdicts for the verticals.
pub struct LadderStage {
    pub t: u32,
    pub k: usize,
    /// `Some(sign)` when the square commutes after multiplying by `sign`.
    pub squares: [Option<i8>; 3],
    pub top_exact: [bool; 3],
    pub bottom_exact: [bool; 3],
    pub verticals_iso: [bool; 4],
    pub top: [AbHom; 3],
    pub bottom: [AbHom; 3],
    pub verticals: [AbHom; 4],
}

impl LadderStage {
    pub fn all_good(&self) -> bool {
        self.squares.iter().all(|s| s.is_some())
            && self.top_exact.iter().all(|&b| b)
            && self.bottom_exact.iter().all(|&b| b)
            && self.verticals_iso.iter().all(|&b| b)
    }
}

/// Excision verdict in one degree.
pub struct ExcisionVerdict {
    pub degree: usize,
    pub iso: bool,
    pub a_group: FgAbGroup,
    pub b_group: FgAbGroup,
}

/// Deep-homology excision: removing an open set `U` (the open star of
/// `u_verts`) from the interior of the smaller closed set `A_1 ⊆ A_0` must
/// not change the relative deep homology of the complement pairs. Checks
/// that the inclusion-induced map on stable limits is an isomorphism in each
/// requested degree.
pub fn excision_check(
    a0: &Subcomplex,
    a1: &Subcomplex,
    u_verts: &[VertId],
    r_min: u32,
    r_max: u32,
    degrees: &[usize],
    w: usize,
) -> Result<Vec<ExcisionVerdict>> {
    let window = a0.parent.clone();
    assert!(a1.is_subset_of(a0));
    // Interior is taken relative to `a0`: the excised set must avoid the
    // closure of `a0 - a1`, not merely the window's complement of `a1`.
    let outside = Subcomplex::from_cells(&window, a0.all_cells().filter(|&c| !a1.contains(c)));
    let mut in_u = vec![false; window.verts.len()];
    for &v in u_verts {
        in_u[v as usize] = true;
    }
    let u_cell = |c: Cell| window.vertices_of(c).iter().any(|&v| in_u[v as usize]);
    for &v in u_verts {
        for &c in &window.vert_stars[v as usize] {
            if !a0.contains(c) {
                continue;
            }
            if !a1.contains(c) || outside.contains(c) {
                return Err(Error::Config(
                    "excised set must lie in the interior of the smaller closed set".into(),
                ));
            }
        }
    }
    let b0 = Subcomplex::from_cells(&window, a0.all_cells().filter(|&c| !u_cell(c)));
    let b1 = Subcomplex::from_cells(&window, a1.all_cells().filter(|&c| !u_cell(c)));

    let fa0 = EndFiltration::new(a0, r_min, r_max)?;
    let fa1 = EndFiltration::new(a1, r_min, r_max)?;
    let fb0 = EndFiltration::new(&b0, r_min, r_max)?;
    let fb1 = EndFiltration::new(&b1, r_min, r_max)?;
    assert!(fa1.contains_stagewise(&fa0));
    assert!(fb1.contains_stagewise(&fb0));

    let mut out = Vec::new();
    for &i in degrees {
        let da = DeepHomology::compute(&fa1, i, false, Some(&fa0), w)?;
        let db = DeepHomology::compute(&fb1, i, false, Some(&fb0), w)?;
        let mut comps = Vec::new();
        for m in 0..da.stages.len() {
            comps.push(induced_inclusion(&da.stages[m], &db.stages[m], i)?);
        }
        LevelMorphism::new(&da.sequence, &db.sequence, comps.clone());
        let (la, lb) = (da.limit()?, db.limit()?);
        let stage = la.stage.max(lb.stage);
        let lm = limit_map_at_stage(&da.report.images[stage], &db.report.images[stage], &comps[stage])?;
        out.push(ExcisionVerdict {
            degree: i,
            iso: hom_is_iso(&lm),
            a_group: la.group,
            b_group: lb.group,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coarse::{approximate_chain_map, CoarseMap, FillOrder};
    use crate::grid::build_window;
    use num_traits::{One, Signed};

    fn locus(w: &Rc<SimplicialComplex>, keep: impl Fn(&[i64; 3]) -> bool) -> Subcomplex {
        let verts: Vec<u32> = (0..w.verts.len() as u32)
            .filter(|&v| keep(&w.verts[v as usize]))
            .collect();
        w.full_subcomplex_on(&verts)
    }

    fn axis_scene(s: i64, r_max: u32) -> DualityScene {
        let x = build_window(3, s, None).unwrap();
        let z = build_window(1, s, None).unwrap();
        let img: Vec<u32> =
            (0..z.verts.len()).map(|v| x.vert_index[&[0, 0, z.verts[v][0]]]).collect();
        let f = approximate_chain_map(&CoarseMap::new(&z, &x, img), FillOrder::Forward).unwrap();
        let fr = locus(&z, |p| p[0].abs() == s);
        DualityScene::new(f, fr, 1, r_max).unwrap()
    }

    #[test]
    fn axis_duality_stage_maps_are_unit_isos() {
        let scene = axis_scene(8, 3);
        assert_eq!(scene.coh_z.group(1), FgAbGroup::free(1));
        for t in 1..=2 {
            let a = scene.duality_stage_map(1, t).unwrap();
            assert_eq!(a.dom, FgAbGroup::free(1));
            assert!(hom_is_iso(&a));
            assert!(a.matrix[0][0].abs() == BigInt::one());
        }
        assert_eq!(scene.stage_compatibility(1, 1).unwrap(), Some(1));
        assert_eq!(scene.stage_offset(1), 2);
    }

    #[test]
    fn axis_duality_verified_in_the_limit() {
        let scene = axis_scene(8, 3);
        let report = verify_duality_iso(&scene, 1, 2).unwrap();
        assert!(report.all_good());
        assert_eq!(report.target, FgAbGroup::free(1));
    }

    #[test]
    fn plane_halfplane_ladder_commutes_with_iso_verticals() {
        // Z_0 = plane, Z_1 = half-plane: the interesting period is k = 1,
        // where the relative column carries the only nonzero group Z.
        let x = build_window(3, 8, None).unwrap();
        let z = build_window(2, 8, None).unwrap();
        let img: Vec<u32> = (0..z.verts.len())
            .map(|v| x.vert_index[&[z.verts[v][0], z.verts[v][1], 0]])
            .collect();
        let f = approximate_chain_map(&CoarseMap::new(&z, &x, img), FillOrder::Forward).unwrap();
        let fr = locus(&z, |p| p[0].abs() == 8 || p[1].abs() == 8);
        let z1 = locus(&z, |p| p[0] >= 0);
        let pair = DualityPair::new(f, fr, z1, 1, 3).unwrap();

        let stage = pair.ladder_stage(1, 2).unwrap();
        assert!(stage.all_good(), "squares {:?}", stage.squares);
        // the relative column: H_1(Y_1, Y_0) ≅ H^2_c(open half-plane) ≅ Z
        assert_eq!(stage.verticals[2].dom, FgAbGroup::free(1));
        assert_eq!(stage.verticals[2].cod, FgAbGroup::free(1));
        // Z_0 column at k = 2: H̃_0 of the plane complement vs H^2_c(R^2)
        assert_eq!(stage.verticals[3].dom, FgAbGroup::free(1));
    }

    #[test]
    fn excision_with_empty_u_is_the_identity() {
        let x = build_window(3, 8, None).unwrap();
        let plane = locus(&x, |p| p[2] == 0);
        let half = locus(&x, |p| p[2] == 0 && p[0] >= 0);
        let verdicts = excision_check(&plane, &half, &[], 1, 3, &[1], 2).unwrap();
        assert!(verdicts[0].iso);
        assert_eq!(verdicts[0].a_group, FgAbGroup::free(1));
        assert_eq!(verdicts[0].b_group, FgAbGroup::free(1));
    }

    #[test]
    fn excision_shrinks_halfplane_to_strip() {
        // A_0 = plane, A_1 = half-plane x >= 0; removing the open star of
        // the x >= 2 part leaves B_1 a strip and B_0 the closed complement
        // half-plane; relative deep H_1 must transport isomorphically.
        let x = build_window(3, 8, None).unwrap();
        let plane = locus(&x, |p| p[2] == 0);
        let half = locus(&x, |p| p[2] == 0 && p[0] >= 0);
        let deep_verts: Vec<u32> = (0..x.verts.len() as u32)
            .filter(|&v| {
                let p = x.verts[v as usize];
                p[2] == 0 && p[0] >= 2
            })
            .collect();
        let verdicts = excision_check(&plane, &half, &deep_verts, 1, 3, &[1], 2).unwrap();
        assert!(verdicts[0].iso);
        assert_eq!(verdicts[0].a_group, FgAbGroup::free(1));
    }

    #[test]
    fn illegal_excision_is_refused() {
        let x = build_window(3, 8, None).unwrap();
        let plane = locus(&x, |p| p[2] == 0);
        let half = locus(&x, |p| p[2] == 0 && p[0] >= 0);
        // x = 0 vertices sit on the frontier of the half-plane
        let bad: Vec<u32> = (0..x.verts.len() as u32)
            .filter(|&v| {
                let p = x.verts[v as usize];
                p[2] == 0 && p[0] == 0
            })
            .collect();
        match excision_check(&plane, &half, &bad, 1, 3, &[1], 2) {
            Err(Error::Config(_)) => {}
            other => panic!("expected refusal, got {:?}", other.map(|_| ()).err()),
        }
    }
}
