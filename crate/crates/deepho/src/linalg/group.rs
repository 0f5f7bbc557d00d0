use super::snf::{snf, solve_with_snf};
use super::SparseIntMatrix;
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use std::fmt;

/// Finitely generated abelian group in invariant-factor form:
/// `Z^free_rank ⊕ Z/t_1 ⊕ ... ⊕ Z/t_m` with `1 < t_1 | t_2 | ... | t_m`.
///
/// Generators are indexed with the free generators first (0..free_rank),
/// followed by the torsion generators in invariant-factor order.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FgAbGroup {
    pub free_rank: usize,
    pub torsion: Vec<BigInt>,
}

impl FgAbGroup {
    pub fn trivial() -> Self {
        FgAbGroup { free_rank: 0, torsion: Vec::new() }
    }

    pub fn free(n: usize) -> Self {
        FgAbGroup { free_rank: n, torsion: Vec::new() }
    }

    pub fn cyclic(n: u64) -> Self {
        assert!(n > 1);
        FgAbGroup { free_rank: 0, torsion: vec![BigInt::from(n)] }
    }

    pub fn is_trivial(&self) -> bool {
        self.free_rank == 0 && self.torsion.is_empty()
    }

    pub fn num_gens(&self) -> usize {
        self.free_rank + self.torsion.len()
    }

    /// Order of generator `i`: zero denotes infinite order.
    pub fn order(&self, i: usize) -> BigInt {
        if i < self.free_rank {
            BigInt::zero()
        } else {
            self.torsion[i - self.free_rank].clone()
        }
    }

    /// Relation vectors in generator coordinates (one per torsion generator).
    pub fn relation_vectors(&self) -> Vec<Vec<BigInt>> {
        let g = self.num_gens();
        self.torsion
            .iter()
            .enumerate()
            .map(|(j, t)| {
                let mut v = vec![BigInt::zero(); g];
                v[self.free_rank + j] = t.clone();
                v
            })
            .collect()
    }

    /// Reduce an element's coordinates: torsion coordinates mod their order
    /// (into `0..order`), free coordinates untouched.
    pub fn reduce(&self, x: &[BigInt]) -> Vec<BigInt> {
        assert_eq!(x.len(), self.num_gens());
        let mut out = x.to_vec();
        for (j, t) in self.torsion.iter().enumerate() {
            let i = self.free_rank + j;
            let mut r = &out[i] % t;
            if r.is_negative() {
                r += t;
            }
            out[i] = r;
        }
        out
    }

    pub fn is_zero_element(&self, x: &[BigInt]) -> bool {
        self.reduce(x).iter().all(|v| v.is_zero())
    }
}

impl fmt::Display for FgAbGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_trivial() {
            return write!(f, "0");
        }
        let mut parts = Vec::new();
        match self.free_rank {
            0 => {}
            1 => parts.push("Z".to_string()),
            n => parts.push(format!("Z^{}", n)),
        }
        for t in &self.torsion {
            parts.push(format!("Z/{}", t));
        }
        write!(f, "{}", parts.join(" + "))
    }
}

/// Homomorphism between finitely generated abelian groups, given by a matrix
/// in generator coordinates: `matrix[i][j]` is the coefficient of codomain
/// generator `i` in the image of domain generator `j`.
#[derive(Clone, Debug)]
pub struct AbHom {
    pub dom: FgAbGroup,
    pub cod: FgAbGroup,
    pub matrix: Vec<Vec<BigInt>>,
}

impl AbHom {
    pub fn new(dom: FgAbGroup, cod: FgAbGroup, matrix: Vec<Vec<BigInt>>) -> Self {
        assert_eq!(matrix.len(), cod.num_gens());
        for row in &matrix {
            assert_eq!(row.len(), dom.num_gens());
        }
        let h = AbHom { dom, cod, matrix };
        assert!(h.respects_relations(), "homomorphism does not respect relations: {:?}", h);
        h
    }

    /// Whether the matrix sends each domain relation into codomain relations.
    pub fn respects_relations(&self) -> bool {
        for j in 0..self.dom.num_gens() {
            let d = self.dom.order(j);
            if d.is_zero() {
                continue;
            }
            for i in 0..self.cod.num_gens() {
                let v = &self.matrix[i][j] * &d;
                let e = self.cod.order(i);
                if e.is_zero() {
                    if !v.is_zero() {
                        return false;
                    }
                } else if (&v % &e) != BigInt::zero() {
                    return false;
                }
            }
        }
        true
    }

    pub fn identity(g: &FgAbGroup) -> Self {
        let n = g.num_gens();
        let mut m = vec![vec![BigInt::zero(); n]; n];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = BigInt::one();
        }
        AbHom { dom: g.clone(), cod: g.clone(), matrix: m }
    }

    pub fn zero(dom: &FgAbGroup, cod: &FgAbGroup) -> Self {
        AbHom {
            dom: dom.clone(),
            cod: cod.clone(),
            matrix: vec![vec![BigInt::zero(); dom.num_gens()]; cod.num_gens()],
        }
    }

    pub fn apply(&self, x: &[BigInt]) -> Vec<BigInt> {
        assert_eq!(x.len(), self.dom.num_gens());
        let mut out = vec![BigInt::zero(); self.cod.num_gens()];
        for (i, row) in self.matrix.iter().enumerate() {
            for (j, m) in row.iter().enumerate() {
                if !m.is_zero() && !x[j].is_zero() {
                    out[i] += m * &x[j];
                }
            }
        }
        self.cod.reduce(&out)
    }

    /// `self ∘ other` (apply `other` first).
    pub fn compose(&self, other: &AbHom) -> AbHom {
        assert_eq!(other.cod, self.dom, "composition type mismatch");
        let mut m = vec![vec![BigInt::zero(); other.dom.num_gens()]; self.cod.num_gens()];
        for j in 0..other.dom.num_gens() {
            let mut col = vec![BigInt::zero(); other.cod.num_gens()];
            for (i, row) in other.matrix.iter().enumerate() {
                col[i] = row[j].clone();
            }
            let img = self.apply(&col);
            for (i, v) in img.into_iter().enumerate() {
                m[i][j] = v;
            }
        }
        AbHom { dom: other.dom.clone(), cod: self.cod.clone(), matrix: m }
    }

    pub fn negate(&self) -> AbHom {
        let m = self.matrix.iter().map(|row| row.iter().map(|v| -v).collect()).collect();
        AbHom { dom: self.dom.clone(), cod: self.cod.clone(), matrix: m }
    }

    pub fn sub(&self, other: &AbHom) -> AbHom {
        assert_eq!(self.dom, other.dom);
        assert_eq!(self.cod, other.cod);
        let m = self
            .matrix
            .iter()
            .zip(&other.matrix)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect())
            .collect();
        AbHom { dom: self.dom.clone(), cod: self.cod.clone(), matrix: m }
    }

    /// Canonical matrix: torsion rows reduced mod their order.
    pub fn canonical_matrix(&self) -> Vec<Vec<BigInt>> {
        let mut m = self.matrix.clone();
        for (i, row) in m.iter_mut().enumerate() {
            let e = self.cod.order(i);
            if e.is_zero() {
                continue;
            }
            for v in row.iter_mut() {
                let mut r = &*v % &e;
                if r.is_negative() {
                    r += &e;
                }
                *v = r;
            }
        }
        m
    }

    pub fn is_zero_map(&self) -> bool {
        self.canonical_matrix().iter().all(|row| row.iter().all(|v| v.is_zero()))
    }
}

impl PartialEq for AbHom {
    fn eq(&self, other: &Self) -> bool {
        self.dom == other.dom
            && self.cod == other.cod
            && self.canonical_matrix() == other.canonical_matrix()
    }
}
impl Eq for AbHom {}

/// Subgroup of a finitely generated abelian group, with an abstract
/// presentation and a reduced generating set in ambient coordinates.
#[derive(Clone, Debug)]
pub struct Subgroup {
    pub ambient: FgAbGroup,
    /// Reduced generating set, one ambient coordinate vector per abstract
    /// generator of `group` (free generators first).
    pub gens: Vec<Vec<BigInt>>,
    /// Isomorphism type of the subgroup.
    pub group: FgAbGroup,
}

fn columns_matrix(ambient_gens: usize, cols: &[Vec<BigInt>]) -> SparseIntMatrix {
    let mut m = SparseIntMatrix::new(ambient_gens, cols.len());
    for (j, col) in cols.iter().enumerate() {
        assert_eq!(col.len(), ambient_gens);
        for (i, v) in col.iter().enumerate() {
            if !v.is_zero() {
                m.set(i, j, v.clone());
            }
        }
    }
    m
}

/// Generators of the lattice `{ y : G y ∈ span(R) }` for column matrices
/// `G` (from `gens`) and `R` (ambient relations).
fn relation_lattice(ambient: &FgAbGroup, gens: &[Vec<BigInt>]) -> Vec<Vec<BigInt>> {
    let g = ambient.num_gens();
    let rels = ambient.relation_vectors();
    let mut cols: Vec<Vec<BigInt>> = gens.to_vec();
    cols.extend(rels.iter().cloned());
    let m = columns_matrix(g, &cols);
    let s = snf(&m);
    s.kernel_basis().into_iter().map(|v| v[..gens.len()].to_vec()).collect()
}

/// Present the subgroup generated by `gens` (ambient coordinates) of
/// `ambient`: returns its isomorphism type plus a reduced generating set.
pub fn subgroup_presentation(ambient: &FgAbGroup, gens: &[Vec<BigInt>]) -> Subgroup {
    let c = gens.len();
    if c == 0 {
        return Subgroup { ambient: ambient.clone(), gens: Vec::new(), group: FgAbGroup::trivial() };
    }
    // N = { y in Z^c : G y ∈ relations }; subgroup ≅ coker(N ⊆ Z^c).
    let n_gens = relation_lattice(ambient, gens);
    let b = columns_matrix(c, &n_gens);
    let s = snf(&b);
    let rank = s.rank();
    // Quotient Z^c / im(B): generator i (in y-coordinates) is U^{-1} e_i,
    // with order diag[i] for i < rank (dropping 1s) and infinite otherwise.
    let mut free_idx = Vec::new();
    let mut tors_idx = Vec::new();
    for i in 0..c {
        if i < rank {
            if !s.diag[i].is_one() {
                tors_idx.push(i);
            }
        } else {
            free_idx.push(i);
        }
    }
    let mut gen_vectors = Vec::new();
    let mut torsion = Vec::new();
    let gmat = columns_matrix(ambient.num_gens(), gens);
    let mut push_gen = |i: usize| {
        let mut e = vec![BigInt::zero(); c];
        e[i] = BigInt::one();
        s.apply_u_inv(&mut e);
        let amb = gmat.mul_vec(&e);
        gen_vectors.push(ambient.reduce(&amb));
    };
    for &i in &free_idx {
        push_gen(i);
    }
    for &i in &tors_idx {
        push_gen(i);
        torsion.push(s.diag[i].clone());
    }
    let group = FgAbGroup { free_rank: free_idx.len(), torsion };
    Subgroup { ambient: ambient.clone(), gens: gen_vectors, group }
}

/// Is `x` (ambient coordinates) in the subgroup generated by `gens`?
pub fn subgroup_contains(ambient: &FgAbGroup, gens: &[Vec<BigInt>], x: &[BigInt]) -> bool {
    let g = ambient.num_gens();
    assert_eq!(x.len(), g);
    let mut cols: Vec<Vec<BigInt>> = gens.to_vec();
    cols.extend(ambient.relation_vectors());
    if cols.is_empty() {
        return x.iter().all(|v| v.is_zero());
    }
    let m = columns_matrix(g, &cols);
    super::snf::solve_integer_linear(&m, x).is_some()
}

/// Coordinates of `x` in the subgroup's reduced generating set, if `x` lies
/// in the subgroup.
pub fn subgroup_coordinates(sub: &Subgroup, x: &[BigInt]) -> Option<Vec<BigInt>> {
    let g = sub.ambient.num_gens();
    assert_eq!(x.len(), g);
    let mut cols: Vec<Vec<BigInt>> = sub.gens.clone();
    cols.extend(sub.ambient.relation_vectors());
    if cols.is_empty() {
        return if x.iter().all(|v| v.is_zero()) { Some(Vec::new()) } else { None };
    }
    let m = columns_matrix(g, &cols);
    let s = snf(&m);
    solve_with_snf(&s, x).map(|w| sub.group.reduce(&w[..sub.gens.len()]))
}

pub fn subgroups_equal(
    ambient: &FgAbGroup,
    gens_a: &[Vec<BigInt>],
    gens_b: &[Vec<BigInt>],
) -> bool {
    gens_a.iter().all(|x| subgroup_contains(ambient, gens_b, x))
        && gens_b.iter().all(|x| subgroup_contains(ambient, gens_a, x))
}

/// Kernel of `h` as a subgroup of its domain.
pub fn hom_kernel(h: &AbHom) -> Subgroup {
    let gd = h.dom.num_gens();
    // Lattice { x : M x ∈ relations(cod) }.
    let mut cols: Vec<Vec<BigInt>> = Vec::new();
    for j in 0..gd {
        let mut col = vec![BigInt::zero(); h.cod.num_gens()];
        for (i, row) in h.matrix.iter().enumerate() {
            col[i] = row[j].clone();
        }
        cols.push(col);
    }
    cols.extend(h.cod.relation_vectors());
    let m = columns_matrix(h.cod.num_gens(), &cols);
    let s = snf(&m);
    let lattice: Vec<Vec<BigInt>> =
        s.kernel_basis().into_iter().map(|v| v[..gd].to_vec()).collect();
    subgroup_presentation(&h.dom, &lattice)
}

/// Image of `h` as a subgroup of its codomain.
pub fn hom_image(h: &AbHom) -> Subgroup {
    let cols: Vec<Vec<BigInt>> = (0..h.dom.num_gens())
        .map(|j| h.matrix.iter().map(|row| row[j].clone()).collect())
        .collect();
    subgroup_presentation(&h.cod, &cols)
}

pub fn hom_is_injective(h: &AbHom) -> bool {
    hom_kernel(h).group.is_trivial()
}

pub fn hom_is_surjective(h: &AbHom) -> bool {
    let cols: Vec<Vec<BigInt>> = (0..h.dom.num_gens())
        .map(|j| h.matrix.iter().map(|row| row[j].clone()).collect())
        .collect();
    (0..h.cod.num_gens()).all(|i| {
        let mut e = vec![BigInt::zero(); h.cod.num_gens()];
        e[i] = BigInt::one();
        subgroup_contains(&h.cod, &cols, &e)
    })
}

pub fn hom_is_iso(h: &AbHom) -> bool {
    hom_is_injective(h) && hom_is_surjective(h)
}

/// Two-sided inverse of an isomorphism, if `h` is one: solves `h(x) = e_i`
/// for every codomain generator and verifies both composites are identities.
pub fn hom_inverse(h: &AbHom) -> Option<AbHom> {
    let gd = h.dom.num_gens();
    let gc = h.cod.num_gens();
    // columns: images of domain generators, then codomain relations
    let mut cols: Vec<Vec<BigInt>> = (0..gd)
        .map(|j| h.matrix.iter().map(|row| row[j].clone()).collect())
        .collect();
    cols.extend(h.cod.relation_vectors());
    let m = columns_matrix(gc, &cols);
    let s = snf(&m);
    let mut matrix = vec![vec![BigInt::zero(); gc]; gd];
    for i in 0..gc {
        let mut e = vec![BigInt::zero(); gc];
        e[i] = BigInt::one();
        let w = solve_with_snf(&s, &e)?;
        for j in 0..gd {
            matrix[j][i] = w[j].clone();
        }
    }
    let inv = AbHom::new(h.cod.clone(), h.dom.clone(), matrix);
    let id_cod = AbHom::identity(&h.cod);
    let id_dom = AbHom::identity(&h.dom);
    if h.compose(&inv) == id_cod && inv.compose(h) == id_dom {
        Some(inv)
    } else {
        None
    }
}
