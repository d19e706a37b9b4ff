//! Finite permutation groups, Brauer relations between their permutation
//! representations, realizations of those relations by integral maps, and
//! regulator constants of self-dual rational representations.
//!
//! Permutations compose right to left: `(ab)(x) = a(b(x))`. A representation
//! is given by the images of the generators and is extended to every element
//! along a breadth-first spanning tree of the Cayley graph.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::arith::{squarefree_part, valuation_rational};
use crate::gen::random_unimodular;
use crate::linalg::{kernel_basis, IntMatrix, RatMatrix};
use crate::numserde;

pub const MAX_GROUP_ORDER: usize = 10_000;
pub const DEFAULT_REALIZE_BUDGET: u32 = 1000;
pub const GROUP_SCHEMA_VERSION: u32 = 1;

/// Names of the groups shipped with the library.
pub const BUILTIN_GROUPS: [&str; 8] = ["C2", "C3", "C4", "C2xC2", "S3", "D10", "D14", "S4"];

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum BrauerError {
    #[error("invalid group: {0}")]
    InvalidGroup(String),
    #[error("group has more than {MAX_GROUP_ORDER} elements")]
    TooLarge,
    #[error("invalid group data: {0}")]
    InvalidData(String),
    #[error("unknown built-in group {0:?}")]
    UnknownGroup(String),
    #[error("not a Brauer relation: {0}")]
    NotARelation(String),
    #[error("no realization found within {0} attempts")]
    SearchExhausted(u32),
    #[error("representation does not define an action of the group: {0}")]
    ActionMismatch(String),
    #[error("representation {0:?} is not self-dual with the supplied pairing")]
    NotSelfDual(String),
    #[error("pairing restricted to the fixed space of {0} is degenerate")]
    DegenerateRestriction(String),
}

pub type Perm = Vec<u32>;

fn compose(a: &[u32], b: &[u32]) -> Perm {
    b.iter().map(|&x| a[x as usize]).collect()
}

fn is_permutation(p: &[u32]) -> bool {
    let mut seen = vec![false; p.len()];
    for &x in p {
        let Some(s) = seen.get_mut(x as usize) else { return false };
        if *s {
            return false;
        }
        *s = true;
    }
    true
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Subgroup {
    pub name: String,
    /// sorted element indices
    pub elements: Vec<usize>,
}

impl Subgroup {
    pub fn order(&self) -> usize {
        self.elements.len()
    }
}

/// A permutation group with its elements, conjugacy classes and subgroups up
/// to conjugacy. Element 0 is the identity.
#[derive(Clone, Debug)]
pub struct Group {
    name: String,
    degree: usize,
    generators: Vec<Perm>,
    elements: Vec<Perm>,
    index: HashMap<Perm, usize>,
    /// `elements[g] = generators[s] ∘ elements[prev]` for `parent[g] = (prev, s)`
    parent: Vec<Option<(usize, usize)>>,
    inverse: Vec<usize>,
    classes: Vec<Vec<usize>>,
    subgroups: Vec<Subgroup>,
    representations: Vec<RationalRep>,
}

impl Group {
    pub fn from_generators(name: &str, degree: usize, generators: Vec<Perm>) -> Result<Self, BrauerError> {
        for g in &generators {
            if g.len() != degree || !is_permutation(g) {
                return Err(BrauerError::InvalidGroup(format!("{g:?} is not a permutation of 0..{degree}")));
            }
        }
        let identity: Perm = (0..degree as u32).collect();
        let mut elements = vec![identity.clone()];
        let mut index = HashMap::from([(identity, 0usize)]);
        let mut parent = vec![None];
        let mut queue = VecDeque::from([0usize]);
        while let Some(g) = queue.pop_front() {
            for (s, gen) in generators.iter().enumerate() {
                let h = compose(gen, &elements[g]);
                if index.contains_key(&h) {
                    continue;
                }
                if elements.len() == MAX_GROUP_ORDER {
                    return Err(BrauerError::TooLarge);
                }
                index.insert(h.clone(), elements.len());
                queue.push_back(elements.len());
                elements.push(h);
                parent.push(Some((g, s)));
            }
        }
        let inverse = elements
            .iter()
            .map(|g| {
                let mut inv = vec![0u32; degree];
                for (i, &x) in g.iter().enumerate() {
                    inv[x as usize] = i as u32;
                }
                index[&inv]
            })
            .collect();
        let mut group = Self {
            name: name.to_string(),
            degree,
            generators,
            elements,
            index,
            parent,
            inverse,
            classes: Vec::new(),
            subgroups: Vec::new(),
            representations: Vec::new(),
        };
        group.classes = group.compute_classes();
        group.subgroups = group.compute_subgroup_classes();
        group.name_subgroups(&[])?;
        Ok(group)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn generators(&self) -> &[Perm] {
        &self.generators
    }

    pub fn elements(&self) -> &[Perm] {
        &self.elements
    }

    pub fn element_index(&self, p: &[u32]) -> Option<usize> {
        self.index.get(p).copied()
    }

    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.index[&compose(&self.elements[a], &self.elements[b])]
    }

    pub fn inverse(&self, a: usize) -> usize {
        self.inverse[a]
    }

    pub fn conjugacy_classes(&self) -> &[Vec<usize>] {
        &self.classes
    }

    /// Subgroups up to conjugacy, ordered by size.
    pub fn subgroup_classes(&self) -> &[Subgroup] {
        &self.subgroups
    }

    pub fn subgroup_index(&self, name: &str) -> Option<usize> {
        self.subgroups.iter().position(|h| h.name == name)
    }

    /// Representations supplied with the group data.
    pub fn representations(&self) -> &[RationalRep] {
        &self.representations
    }

    fn compute_classes(&self) -> Vec<Vec<usize>> {
        let n = self.order();
        let mut assigned = vec![false; n];
        let mut classes = Vec::new();
        let gens: Vec<usize> = self.generators.iter().map(|g| self.index[g]).collect();
        for g in 0..n {
            if assigned[g] {
                continue;
            }
            let mut class = vec![g];
            assigned[g] = true;
            let mut i = 0;
            while i < class.len() {
                let x = class[i];
                for &s in &gens {
                    let y = self.mul(self.mul(s, x), self.inverse[s]);
                    if !assigned[y] {
                        assigned[y] = true;
                        class.push(y);
                    }
                }
                i += 1;
            }
            class.sort_unstable();
            classes.push(class);
        }
        classes
    }

    /// Subgroup generated by a set of elements, as sorted indices.
    pub fn closure(&self, gens: &[usize]) -> Vec<usize> {
        let mut members = vec![false; self.order()];
        members[0] = true;
        let mut list = vec![0usize];
        let mut i = 0;
        while i < list.len() {
            let x = list[i];
            for &s in gens {
                let y = self.mul(s, x);
                if !members[y] {
                    members[y] = true;
                    list.push(y);
                }
            }
            i += 1;
        }
        list.sort_unstable();
        list
    }

    fn conjugate_set(&self, set: &[usize], x: usize) -> Vec<usize> {
        let xi = self.inverse[x];
        let mut out: Vec<usize> = set.iter().map(|&h| self.mul(self.mul(xi, h), x)).collect();
        out.sort_unstable();
        out
    }

    /// Lexicographically least conjugate of a subgroup.
    fn canonical(&self, set: &[usize]) -> Vec<usize> {
        let gens: Vec<usize> = self.generators.iter().map(|g| self.index[g]).collect();
        let mut seen = HashSet::from([set.to_vec()]);
        let mut queue = VecDeque::from([set.to_vec()]);
        let mut best = set.to_vec();
        while let Some(s) = queue.pop_front() {
            for &g in &gens {
                let c = self.conjugate_set(&s, g);
                if seen.insert(c.clone()) {
                    if c < best {
                        best = c.clone();
                    }
                    queue.push_back(c);
                }
            }
        }
        best
    }

    fn compute_subgroup_classes(&self) -> Vec<Subgroup> {
        let trivial = vec![0usize];
        let mut found = vec![trivial.clone()];
        let mut seen = HashSet::from([trivial]);
        let mut i = 0;
        while i < found.len() {
            let h = found[i].clone();
            let mut tried = HashSet::new();
            for g in 0..self.order() {
                if h.binary_search(&g).is_ok() {
                    continue;
                }
                let mut gens = h.clone();
                gens.push(g);
                let k = self.closure(&gens);
                if !tried.insert(k.clone()) {
                    continue;
                }
                let c = self.canonical(&k);
                if seen.insert(c.clone()) {
                    found.push(c);
                }
            }
            i += 1;
        }
        found.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
        found.into_iter().map(|elements| Subgroup { name: String::new(), elements }).collect()
    }

    fn is_cyclic(&self, set: &[usize]) -> bool {
        set.iter().any(|&g| self.closure(&[g]).len() == set.len())
    }

    /// Applies supplied names and fills the rest with `1`, `C<n>` or `H<n>`,
    /// adding letter suffixes to repeated names.
    fn name_subgroups(&mut self, supplied: &[(String, Vec<usize>)]) -> Result<(), BrauerError> {
        let mut names: Vec<Option<String>> = vec![None; self.subgroups.len()];
        for (name, elems) in supplied {
            let c = self.canonical(elems);
            let pos = self
                .subgroups
                .iter()
                .position(|h| h.elements == c)
                .ok_or_else(|| BrauerError::InvalidData(format!("subgroup {name} not found")))?;
            names[pos] = Some(name.clone());
        }
        let last = self.subgroups.len() - 1;
        let auto: Vec<String> = self
            .subgroups
            .iter()
            .enumerate()
            .map(|(i, h)| {
                if h.order() == 1 {
                    "1".to_string()
                } else if i == last {
                    self.name.clone()
                } else if self.is_cyclic(&h.elements) {
                    format!("C{}", h.order())
                } else {
                    format!("H{}", h.order())
                }
            })
            .collect();
        let mut counts: HashMap<String, usize> = HashMap::new();
        for (i, a) in auto.iter().enumerate() {
            if names[i].is_none() {
                *counts.entry(a.clone()).or_default() += 1;
            }
        }
        let mut used: HashMap<String, usize> = HashMap::new();
        for (i, a) in auto.into_iter().enumerate() {
            if names[i].is_some() {
                continue;
            }
            if counts[&a] > 1 {
                let k = used.entry(a.clone()).or_default();
                names[i] = Some(format!("{a}{}", (b'a' + (*k % 26) as u8) as char));
                *k += 1;
            } else {
                names[i] = Some(a);
            }
        }
        for (h, n) in self.subgroups.iter_mut().zip(names) {
            h.name = n.expect("every subgroup named");
        }
        Ok(())
    }

    /// `χ_{G/H}(c)`: cosets of `H` fixed by a representative of each class.
    pub fn permutation_character(&self, h: &Subgroup) -> Vec<BigInt> {
        let members: HashSet<usize> = h.elements.iter().copied().collect();
        self.classes
            .iter()
            .map(|class| {
                let c = class[0];
                let hits =
                    (0..self.order()).filter(|&x| members.contains(&self.mul(self.mul(self.inverse[x], c), x))).count();
                BigInt::from(hits / h.order())
            })
            .collect()
    }

    /// Left cosets `xH`; coset 0 is `H` itself.
    pub fn cosets(&self, h: &Subgroup) -> CosetSpace {
        let mut coset_of = vec![usize::MAX; self.order()];
        let mut reps = Vec::new();
        for x in 0..self.order() {
            if coset_of[x] != usize::MAX {
                continue;
            }
            for &y in &h.elements {
                coset_of[self.mul(x, y)] = reps.len();
            }
            reps.push(x);
        }
        CosetSpace { reps, coset_of }
    }

    fn block_permutation(&self, blocks: &[usize], g: usize) -> IntMatrix {
        let mats: Vec<IntMatrix> = blocks
            .iter()
            .map(|&b| {
                let cs = self.cosets(&self.subgroups[b]);
                let n = cs.reps.len();
                let mut m = IntMatrix::zeros(n, n);
                for (c, &x) in cs.reps.iter().enumerate() {
                    m.set(cs.coset_of[self.mul(g, x)], c, 1);
                }
                m
            })
            .collect();
        IntMatrix::block_diagonal(&mats)
    }

    fn block_dimension(&self, blocks: &[usize]) -> usize {
        blocks.iter().map(|&b| self.order() / self.subgroups[b].order()).sum()
    }

    /// Basis of `Hom_G(ℤ[G/K], ℤ[G/H])`, one map per `K`-orbit on `G/H`.
    pub fn equivariant_basis(&self, k: usize, h: usize) -> Vec<IntMatrix> {
        let ck = self.cosets(&self.subgroups[k]);
        let ch = self.cosets(&self.subgroups[h]);
        let mut orbit_of = vec![usize::MAX; ch.reps.len()];
        let mut orbits: Vec<Vec<usize>> = Vec::new();
        for c in 0..ch.reps.len() {
            if orbit_of[c] != usize::MAX {
                continue;
            }
            let mut orbit: Vec<usize> =
                self.subgroups[k].elements.iter().map(|&g| ch.coset_of[self.mul(g, ch.reps[c])]).collect();
            orbit.sort_unstable();
            orbit.dedup();
            for &o in &orbit {
                orbit_of[o] = orbits.len();
            }
            orbits.push(orbit);
        }
        orbits
            .iter()
            .map(|orbit| {
                let mut m = IntMatrix::zeros(ch.reps.len(), ck.reps.len());
                for (d, &y) in ck.reps.iter().enumerate() {
                    for &c in orbit {
                        m.set(ch.coset_of[self.mul(y, ch.reps[c])], d, 1);
                    }
                }
                m
            })
            .collect()
    }

    /// Images of every element under a representation, checking that the
    /// generator images define a homomorphism.
    pub fn evaluate(&self, rep: &RationalRep) -> Result<Vec<RatMatrix>, BrauerError> {
        if rep.generators.len() != self.generators.len() {
            return Err(BrauerError::ActionMismatch(format!(
                "{} generator images for {} generators",
                rep.generators.len(),
                self.generators.len()
            )));
        }
        let d = rep.degree;
        if rep.generators.iter().any(|m| m.rows() != d || m.cols() != d) {
            return Err(BrauerError::ActionMismatch("generator image of the wrong size".into()));
        }
        let mut images = vec![RatMatrix::identity(d); self.order()];
        for g in 1..self.order() {
            let (prev, s) = self.parent[g].expect("non-identity element has a parent");
            images[g] = &rep.generators[s] * &images[prev];
        }
        for g in 0..self.order() {
            for (s, gen) in self.generators.iter().enumerate() {
                let h = self.index[&compose(gen, &self.elements[g])];
                if &rep.generators[s] * &images[g] != images[h] {
                    return Err(BrauerError::ActionMismatch(format!("relation fails for {:?}", rep.name)));
                }
            }
        }
        Ok(images)
    }

    pub fn character(&self, rep: &RationalRep) -> Result<Vec<BigRational>, BrauerError> {
        Ok(self.evaluate(rep)?.iter().map(RatMatrix::trace).collect())
    }

    /// `⟨χ, ψ⟩ = |G|⁻¹ Σ χ(g) ψ(g⁻¹)`
    pub fn inner_product(&self, chi: &[BigRational], psi: &[BigRational]) -> BigRational {
        let total: BigRational = (0..self.order()).map(|g| &chi[g] * &psi[self.inverse[g]]).sum();
        total / BigRational::from_integer(self.order().into())
    }

    pub fn summary(&self) -> GroupSummary {
        GroupSummary {
            name: self.name.clone(),
            order: self.order(),
            conjugacy_classes: self.classes.len(),
            subgroups: self
                .subgroups
                .iter()
                .map(|h| SubgroupSummary {
                    name: h.name.clone(),
                    order: h.order(),
                    conjugates: self.order() / self.normalizer_order(&h.elements),
                })
                .collect(),
        }
    }

    fn normalizer_order(&self, set: &[usize]) -> usize {
        (0..self.order()).filter(|&x| self.conjugate_set(set, x) == set).count()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CosetSpace {
    /// representative element of each coset
    pub reps: Vec<usize>,
    /// coset index of each element
    pub coset_of: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubgroupSummary {
    pub name: String,
    pub order: usize,
    pub conjugates: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub name: String,
    pub order: usize,
    pub conjugacy_classes: usize,
    pub subgroups: Vec<SubgroupSummary>,
}

/// A representation over ℚ by generator images, with an invariant pairing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RationalRep {
    pub name: String,
    pub degree: usize,
    pub generators: Vec<RatMatrix>,
    pub gram: RatMatrix,
}

impl RationalRep {
    pub fn direct_sum(name: &str, parts: &[&RationalRep]) -> Self {
        let degree = parts.iter().map(|r| r.degree).sum();
        let ngens = parts.first().map_or(0, |r| r.generators.len());
        let generators = (0..ngens)
            .map(|s| RatMatrix::block_diagonal(&parts.iter().map(|r| r.generators[s].clone()).collect::<Vec<_>>()))
            .collect();
        let gram = RatMatrix::block_diagonal(&parts.iter().map(|r| r.gram.clone()).collect::<Vec<_>>());
        Self { name: name.to_string(), degree, generators, gram }
    }

    pub fn with_gram(&self, gram: RatMatrix) -> Self {
        Self { gram, ..self.clone() }
    }

    /// `ρ'(g) = Pρ(g)P⁻¹` with pairing `P⁻ᵀQP⁻¹`.
    pub fn conjugate(&self, p: &RatMatrix) -> Self {
        let p_inv = p.inverse().expect("change of basis is invertible");
        let generators = self.generators.iter().map(|m| &(p * m) * &p_inv).collect();
        let gram = &(&p_inv.transpose() * &self.gram) * &p_inv;
        Self { name: self.name.clone(), degree: self.degree, generators, gram }
    }

    /// Checks that the pairing is symmetric, nondegenerate and invariant.
    pub fn check_self_dual(&self) -> Result<(), BrauerError> {
        let q = &self.gram;
        let ok = q.rows() == self.degree
            && q.cols() == self.degree
            && q.is_symmetric()
            && !q.determinant().is_zero()
            && self.generators.iter().all(|m| &(&m.transpose() * q) * m == *q);
        if ok {
            Ok(())
        } else {
            Err(BrauerError::NotSelfDual(self.name.clone()))
        }
    }
}

/// `Σ_g ρ(g)ᵀ R ρ(g)` for a random positive-definite integer `R`.
pub fn random_invariant_pairing(images: &[RatMatrix], rng: &mut impl Rng) -> RatMatrix {
    let d = images.first().map_or(0, RatMatrix::rows);
    let mut m = IntMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            m.set(i, j, rng.gen_range(-2..=2));
        }
    }
    let r = RatMatrix::from_int(&(&(&m.transpose() * &m) + &IntMatrix::identity(d)));
    let mut acc = RatMatrix::zeros(d, d);
    for g in images {
        acc = &acc + &(&(&g.transpose() * &r) * g);
    }
    acc
}

/// Random integral change of basis with determinant ±1.
pub fn random_basis_change(d: usize, rng: &mut impl Rng) -> RatMatrix {
    RatMatrix::from_int(&random_unimodular(rng, d, 3 * d).0)
}

/// `Θ = Σ_H a_H·H`, one coefficient per subgroup class.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BrauerRelation {
    pub coefficients: Vec<i64>,
}

impl BrauerRelation {
    pub fn zero(group: &Group) -> Self {
        Self { coefficients: vec![0; group.subgroup_classes().len()] }
    }

    pub fn is_zero(&self) -> bool {
        self.coefficients.iter().all(|&c| c == 0)
    }

    /// Subgroup blocks with positive coefficients, repeated by multiplicity.
    pub fn positive_blocks(&self) -> Vec<usize> {
        self.blocks(1)
    }

    pub fn negative_blocks(&self) -> Vec<usize> {
        self.blocks(-1)
    }

    fn blocks(&self, sign: i64) -> Vec<usize> {
        self.coefficients
            .iter()
            .enumerate()
            .flat_map(|(h, &c)| std::iter::repeat_n(h, if c * sign > 0 { c.unsigned_abs() as usize } else { 0 }))
            .collect()
    }

    /// Whether `Σ a_H χ_{G/H}` vanishes.
    pub fn check(&self, group: &Group) -> Result<(), BrauerError> {
        if self.coefficients.len() != group.subgroup_classes().len() {
            return Err(BrauerError::NotARelation(format!(
                "{} coefficients for {} subgroup classes",
                self.coefficients.len(),
                group.subgroup_classes().len()
            )));
        }
        let mut total = vec![BigInt::zero(); group.conjugacy_classes().len()];
        for (h, &a) in group.subgroup_classes().iter().zip(&self.coefficients) {
            if a == 0 {
                continue;
            }
            for (t, v) in total.iter_mut().zip(group.permutation_character(h)) {
                *t += v * a;
            }
        }
        if total.iter().all(Zero::is_zero) {
            Ok(())
        } else {
            Err(BrauerError::NotARelation("permutation characters do not cancel".into()))
        }
    }

    pub fn display<'a>(&'a self, group: &'a Group) -> RelationDisplay<'a> {
        RelationDisplay { rel: self, group }
    }

    /// Relation from `name: coefficient` pairs.
    pub fn from_named(group: &Group, terms: &[(String, i64)]) -> Result<Self, BrauerError> {
        let mut rel = Self::zero(group);
        for (name, c) in terms {
            let h = group
                .subgroup_index(name)
                .ok_or_else(|| BrauerError::NotARelation(format!("unknown subgroup {name:?}")))?;
            rel.coefficients[h] += c;
        }
        rel.check(group)?;
        Ok(rel)
    }
}

pub struct RelationDisplay<'a> {
    rel: &'a BrauerRelation,
    group: &'a Group,
}

impl fmt::Display for RelationDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Larger subgroups first, matching the usual way of writing relations.
        let mut first = true;
        let terms: Vec<(usize, i64)> =
            self.rel.coefficients.iter().copied().enumerate().filter(|&(_, c)| c != 0).collect();
        let mut ordered: Vec<(usize, i64)> = terms.iter().copied().filter(|&(_, c)| c > 0).collect();
        ordered.extend(terms.iter().copied().filter(|&(_, c)| c < 0).rev());
        if ordered.is_empty() {
            return write!(f, "0");
        }
        for (h, c) in ordered {
            let name = &self.group.subgroup_classes()[h].name;
            let name = if name == "1" { "{1}".to_string() } else { name.clone() };
            let sign = if c < 0 {
                "-"
            } else if first {
                ""
            } else {
                "+"
            };
            let mag = c.unsigned_abs();
            if mag == 1 {
                write!(f, "{sign}{name}")?;
            } else {
                write!(f, "{sign}{mag}{name}")?;
            }
            first = false;
        }
        Ok(())
    }
}

/// Basis of the lattice of Brauer relations: the integer kernel of the
/// subgroup-class × conjugacy-class permutation character table, each basis
/// vector signed so that its first nonzero coefficient is negative.
pub fn find_brauer_relations(group: &Group) -> Vec<BrauerRelation> {
    let subs = group.subgroup_classes();
    let mut table = IntMatrix::zeros(group.conjugacy_classes().len(), subs.len());
    for (j, h) in subs.iter().enumerate() {
        for (i, v) in group.permutation_character(h).into_iter().enumerate() {
            table.set(i, j, v);
        }
    }
    let k = kernel_basis(&table);
    k.columns()
        .into_iter()
        .map(|col| {
            let mut c: Vec<i64> = col.iter().map(|x| x.to_i64().expect("small relation coefficients")).collect();
            if c.iter().find(|&&x| x != 0).is_some_and(|&x| x > 0) {
                c.iter_mut().for_each(|x| *x = -*x);
            }
            BrauerRelation { coefficients: c }
        })
        .collect()
}

/// A G-equivariant integer map between sums of permutation modules,
/// `⊕ ℤ[G/H_source] → ⊕ ℤ[G/H_target]`, in coset bases.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PermModuleMap {
    pub source_blocks: Vec<usize>,
    pub target_blocks: Vec<usize>,
    pub matrix: IntMatrix,
}

impl PermModuleMap {
    pub fn identity(group: &Group, blocks: &[usize]) -> Self {
        let n = group.block_dimension(blocks);
        Self { source_blocks: blocks.to_vec(), target_blocks: blocks.to_vec(), matrix: IntMatrix::identity(n) }
    }

    /// Dual with respect to the coset bases, which are orthonormal for the
    /// invariant pairings on permutation modules.
    pub fn dual(&self) -> Self {
        Self {
            source_blocks: self.target_blocks.clone(),
            target_blocks: self.source_blocks.clone(),
            matrix: self.matrix.transpose(),
        }
    }

    /// `self ∘ first`
    pub fn after(&self, first: &Self) -> Self {
        assert_eq!(first.target_blocks, self.source_blocks, "composition of mismatched maps");
        Self {
            source_blocks: first.source_blocks.clone(),
            target_blocks: self.target_blocks.clone(),
            matrix: &self.matrix * &first.matrix,
        }
    }

    pub fn is_equivariant(&self, group: &Group) -> bool {
        group.generators().iter().all(|g| {
            let g = group.element_index(g).expect("generator is an element");
            &group.block_permutation(&self.target_blocks, g) * &self.matrix
                == &self.matrix * &group.block_permutation(&self.source_blocks, g)
        })
    }

    /// Random combination of the double-coset basis with entries in `[−b, b]`.
    pub fn random(group: &Group, source: &[usize], target: &[usize], b: i64, rng: &mut impl Rng) -> Self {
        let coeffs: Vec<Vec<Vec<i64>>> = target
            .iter()
            .map(|&h| {
                source
                    .iter()
                    .map(|&k| (0..group.equivariant_basis(k, h).len()).map(|_| rng.gen_range(-b..=b)).collect())
                    .collect()
            })
            .collect();
        assemble(group, source, target, &coeffs)
    }
}

fn assemble(group: &Group, source: &[usize], target: &[usize], coeffs: &[Vec<Vec<i64>>]) -> PermModuleMap {
    let rows: Vec<IntMatrix> = target
        .iter()
        .enumerate()
        .map(|(ti, &h)| {
            let blocks: Vec<IntMatrix> = source
                .iter()
                .enumerate()
                .map(|(si, &k)| {
                    let basis = group.equivariant_basis(k, h);
                    let mut acc = IntMatrix::zeros(
                        group.order() / group.subgroups[h].order(),
                        group.order() / group.subgroups[k].order(),
                    );
                    for (m, &c) in basis.iter().zip(&coeffs[ti][si]) {
                        if c != 0 {
                            acc = &acc + &m.scale(&BigInt::from(c));
                        }
                    }
                    acc
                })
                .collect();
            blocks.iter().skip(1).fold(blocks[0].clone(), |acc, b| acc.hstack(b))
        })
        .collect();
    let matrix = if rows.is_empty() || source.is_empty() {
        IntMatrix::zeros(group.block_dimension(target), group.block_dimension(source))
    } else {
        rows.iter().skip(1).fold(rows[0].clone(), |acc, r| acc.vstack(r))
    };
    PermModuleMap { source_blocks: source.to_vec(), target_blocks: target.to_vec(), matrix }
}

/// Map realizing a Brauer relation, with its dual and search statistics.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Realization {
    pub map: PermModuleMap,
    pub dual: PermModuleMap,
    #[serde(with = "numserde::bigint")]
    pub determinant: BigInt,
    pub attempts: u32,
}

/// Seeded search for an equivariant `Φ: ⊕_i ℤ[G/H_i] → ⊕_j ℤ[G/H_j′]` with
/// `det Φ ≠ 0`, over coefficient vectors of growing max-norm.
pub fn realize(group: &Group, rel: &BrauerRelation, budget: u32, seed: u64) -> Result<Realization, BrauerError> {
    rel.check(group)?;
    let source = rel.positive_blocks();
    let target = rel.negative_blocks();
    if source.is_empty() {
        let map = PermModuleMap::identity(group, &[]);
        return Ok(Realization { dual: map.dual(), map, determinant: BigInt::one(), attempts: 0 });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let per_level = 16u32;
    let mut attempts = 0;
    let mut bound = 1i64;
    while attempts < budget {
        for _ in 0..per_level.min(budget - attempts) {
            attempts += 1;
            let map = PermModuleMap::random(group, &source, &target, bound, &mut rng);
            let det = map.matrix.determinant();
            if !det.is_zero() {
                debug_assert!(map.is_equivariant(group));
                return Ok(Realization { dual: map.dual(), map, determinant: det, attempts });
            }
        }
        bound += 1;
    }
    Err(BrauerError::SearchExhausted(budget))
}

/// Basis (as columns) of `V^H`.
pub fn fixed_space(images: &[RatMatrix], h: &Subgroup) -> RatMatrix {
    let d = images[0].rows();
    let id = RatMatrix::identity(d);
    let stacked = h.elements.iter().skip(1).fold(RatMatrix::zeros(0, d), |acc, &g| acc.vstack(&(&images[g] - &id)));
    stacked.kernel()
}

/// `Φ*: ⊕_j M^{H_j′} → ⊕_i M^{H_i}` in the bases returned by [`fixed_space`],
/// via `Hom_G(ℤ[G/H], M) ≅ M^H`.
pub fn phi_star(group: &Group, map: &PermModuleMap, rep: &RationalRep) -> Result<RatMatrix, BrauerError> {
    let images = group.evaluate(rep)?;
    let subs = group.subgroup_classes();
    let src_bases: Vec<RatMatrix> = map.source_blocks.iter().map(|&h| fixed_space(&images, &subs[h])).collect();
    let tgt_bases: Vec<RatMatrix> = map.target_blocks.iter().map(|&h| fixed_space(&images, &subs[h])).collect();
    let tgt_cosets: Vec<CosetSpace> = map.target_blocks.iter().map(|&h| group.cosets(&subs[h])).collect();
    let src_offsets = offsets(group, &map.source_blocks);
    let tgt_offsets = offsets(group, &map.target_blocks);

    let mut block_rows = Vec::new();
    for (i, bi) in src_bases.iter().enumerate() {
        let mut blocks = Vec::new();
        for (j, bj) in tgt_bases.iter().enumerate() {
            // m ↦ Σ_c Φ[(j, c), (i, e)] ρ(g_c) m
            let mut op = RatMatrix::zeros(rep.degree, rep.degree);
            for (c, &g) in tgt_cosets[j].reps.iter().enumerate() {
                let coeff = map.matrix.get(tgt_offsets[j] + c, src_offsets[i]);
                if !coeff.is_zero() {
                    op = &op + &images[g].scale(&BigRational::from_integer(coeff.clone()));
                }
            }
            let image = &op * bj;
            let coords = bi.solve(&image).map_err(|_| BrauerError::ActionMismatch("map is not equivariant".into()))?;
            blocks.push(coords);
        }
        let row = blocks.iter().fold(RatMatrix::zeros(bi.cols(), 0), |acc, b| acc.hstack(b));
        block_rows.push(row);
    }
    let total_cols: usize = tgt_bases.iter().map(RatMatrix::cols).sum();
    Ok(block_rows.iter().fold(RatMatrix::zeros(0, total_cols), |acc, r| acc.vstack(r)))
}

fn offsets(group: &Group, blocks: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(blocks.len());
    let mut acc = 0;
    for &b in blocks {
        out.push(acc);
        acc += group.order() / group.subgroup_classes()[b].order();
    }
    out
}

/// `det((1/|H|)·Bᵀ Q B)` for a basis `B` of a fixed space.
pub fn restricted_determinant(gram: &RatMatrix, basis: &RatMatrix, order: usize) -> BigRational {
    let restricted = &(&basis.transpose() * gram) * basis;
    restricted.scale(&BigRational::new(BigInt::one(), order.into())).determinant()
}

/// Value of the regulator constant for one pairing, and its square class.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegulatorConstant {
    #[serde(with = "numserde::rational")]
    pub value: BigRational,
    /// squarefree representative of the class in `ℚ^×/(ℚ^×)²`
    #[serde(with = "numserde::bigint")]
    pub class: BigInt,
}

impl RegulatorConstant {
    pub fn ord(&self, p: u64) -> i64 {
        valuation_rational(&self.value, p)
    }
}

/// `𝒞_Θ(V) = ∏_H det((1/|H|)·⟨,⟩|V^H)^{a_H}` using the representation's own
/// pairing.
pub fn regulator_constant(
    group: &Group,
    rel: &BrauerRelation,
    rep: &RationalRep,
) -> Result<RegulatorConstant, BrauerError> {
    rel.check(group)?;
    rep.check_self_dual()?;
    let images = group.evaluate(rep)?;
    regulator_constant_with_images(group, rel, &images, &rep.gram)
}

fn regulator_constant_with_images(
    group: &Group,
    rel: &BrauerRelation,
    images: &[RatMatrix],
    gram: &RatMatrix,
) -> Result<RegulatorConstant, BrauerError> {
    let mut value = BigRational::one();
    for (h, &a) in group.subgroup_classes().iter().zip(&rel.coefficients) {
        if a == 0 || gram.rows() == 0 {
            continue;
        }
        let basis = fixed_space(images, h);
        let det = restricted_determinant(gram, &basis, h.order());
        if det.is_zero() {
            return Err(BrauerError::DegenerateRestriction(h.name.clone()));
        }
        let term = num_traits::pow(det, a.unsigned_abs() as usize);
        if a > 0 {
            value *= term;
        } else {
            value /= term;
        }
    }
    let class = squarefree_part(&value);
    Ok(RegulatorConstant { value, class })
}

/// Closed form of the regulator constant of the trivial representation,
/// `∏_j |H_j′| / ∏_i |H_i|`.
pub fn trivial_regulator_constant(group: &Group, rel: &BrauerRelation) -> BigRational {
    let mut v = BigRational::one();
    for (h, &a) in group.subgroup_classes().iter().zip(&rel.coefficients) {
        let o = BigRational::from_integer(h.order().into());
        let t = num_traits::pow(o, a.unsigned_abs() as usize);
        if a > 0 {
            v /= t;
        } else {
            v *= t;
        }
    }
    v
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TauEntry {
    pub name: String,
    pub regulator_constant: RegulatorConstant,
    pub ord_p: i64,
    /// `⟨V, V⟩`
    #[serde(with = "numserde::rational")]
    pub self_product: BigRational,
    #[serde(with = "numserde::rational")]
    pub inner_with_tau: BigRational,
    pub in_tau: bool,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RandomSumCheck {
    pub multiplicities: Vec<u32>,
    pub ord_p: i64,
    #[serde(with = "numserde::rational")]
    pub inner_with_tau: BigRational,
    pub holds: bool,
}

/// `τ = ⊕ W_V` over the supplied irreducibles `V` whose regulator constant has
/// odd `ord_p`, where `W_V` is one absolutely irreducible constituent of `V`.
/// The supplied representations are taken to be irreducible over the maximal
/// unramified extension of `ℚ_p`, where Schur indices are 1, so
/// `⟨W_V, U⟩ = ⟨V, U⟩ / ⟨V, V⟩`. The congruence `⟨τ,U⟩ ≡ ord_p 𝒞_Θ(U) (mod 2)`
/// is checked on each irreducible and on random direct sums, the latter with
/// freshly drawn invariant pairings.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TauReport {
    pub group: String,
    pub relation: String,
    pub p: u64,
    /// supplied representations contributing one absolutely irreducible
    /// constituent each
    pub tau: Vec<String>,
    pub irreducibles: Vec<TauEntry>,
    pub random_sums: Vec<RandomSumCheck>,
    pub pass: bool,
}

fn is_even_rational(x: &BigRational, parity: i64) -> Option<bool> {
    x.is_integer().then(|| (x.to_integer() - BigInt::from(parity)).is_even())
}

pub fn tau_candidate(
    group: &Group,
    rel: &BrauerRelation,
    p: u64,
    irreducibles: &[RationalRep],
    random_sums: usize,
    seed: u64,
) -> Result<TauReport, BrauerError> {
    rel.check(group)?;
    if !num_prime::nt_funcs::is_prime64(p) {
        return Err(BrauerError::InvalidData(format!("{p} is not prime")));
    }
    let mut chars = Vec::with_capacity(irreducibles.len());
    let mut images = Vec::with_capacity(irreducibles.len());
    for v in irreducibles {
        v.check_self_dual()?;
        images.push(group.evaluate(v)?);
        chars.push(group.character(v)?);
    }
    for i in 0..chars.len() {
        for j in 0..i {
            if !group.inner_product(&chars[i], &chars[j]).is_zero() {
                return Err(BrauerError::InvalidData(format!(
                    "{:?} and {:?} share a constituent",
                    irreducibles[j].name, irreducibles[i].name
                )));
            }
        }
    }
    let mut consts = Vec::with_capacity(irreducibles.len());
    for (v, im) in irreducibles.iter().zip(&images) {
        consts.push(regulator_constant_with_images(group, rel, im, &v.gram)?);
    }
    let in_tau: Vec<bool> = consts.iter().map(|c| c.ord(p).rem_euclid(2) == 1).collect();
    let self_products: Vec<BigRational> = chars.iter().map(|c| group.inner_product(c, c)).collect();
    let pair_with_tau = |chi: &[BigRational]| -> BigRational {
        chars
            .iter()
            .zip(&self_products)
            .zip(&in_tau)
            .filter(|(_, &t)| t)
            .map(|((c, n), _)| group.inner_product(c, chi) / n)
            .sum()
    };

    let mut entries = Vec::new();
    for (k, v) in irreducibles.iter().enumerate() {
        let ord = consts[k].ord(p);
        let inner = pair_with_tau(&chars[k]);
        let holds = is_even_rational(&inner, ord).unwrap_or(false);
        entries.push(TauEntry {
            name: v.name.clone(),
            regulator_constant: consts[k].clone(),
            ord_p: ord,
            self_product: self_products[k].clone(),
            inner_with_tau: inner,
            in_tau: in_tau[k],
            holds,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sums = Vec::new();
    if !irreducibles.is_empty() {
        for _ in 0..random_sums {
            let mut mult: Vec<u32> = (0..irreducibles.len()).map(|_| rng.gen_range(0..=2)).collect();
            if mult.iter().all(|&m| m == 0) {
                let k = rng.gen_range(0..mult.len());
                mult[k] = 1;
            }
            let parts: Vec<&RationalRep> =
                irreducibles.iter().zip(&mult).flat_map(|(v, &m)| std::iter::repeat_n(v, m as usize)).collect();
            let sum = RationalRep::direct_sum("sum", &parts);
            let sum_images = group.evaluate(&sum)?;
            let gram = random_invariant_pairing(&sum_images, &mut rng);
            let c = regulator_constant_with_images(group, rel, &sum_images, &gram)?;
            let inner = pair_with_tau(&group.character(&sum)?);
            let ord = c.ord(p);
            let holds = is_even_rational(&inner, ord).unwrap_or(false);
            sums.push(RandomSumCheck { multiplicities: mult, ord_p: ord, inner_with_tau: inner, holds });
        }
    }
    let tau = irreducibles.iter().zip(&in_tau).filter(|(_, &t)| t).map(|(v, _)| v.name.clone()).collect();
    let pass = entries.iter().all(|e| e.holds) && sums.iter().all(|s| s.holds);
    Ok(TauReport {
        group: group.name().to_string(),
        relation: rel.display(group).to_string(),
        p,
        tau,
        irreducibles: entries,
        random_sums: sums,
        pass,
    })
}

/// On-disk group description.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GroupFile {
    pub schema_version: u32,
    pub name: String,
    #[serde(default)]
    pub degree: Option<usize>,
    #[serde(default)]
    pub order: Option<usize>,
    pub generators: Vec<Perm>,
    #[serde(default)]
    pub subgroups: Vec<NamedSubgroup>,
    #[serde(default)]
    pub representations: Vec<RepFile>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NamedSubgroup {
    pub name: String,
    pub generators: Vec<Perm>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RepFile {
    pub name: String,
    pub degree: usize,
    pub generators: Vec<Vec<Vec<RatEntry>>>,
    pub gram: Vec<Vec<RatEntry>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RatEntry {
    pub num: String,
    #[serde(default = "default_den")]
    pub den: String,
}

fn default_den() -> String {
    "1".into()
}

fn parse_matrix(rows: &[Vec<RatEntry>], d: usize, what: &str) -> Result<RatMatrix, BrauerError> {
    if rows.len() != d || rows.iter().any(|r| r.len() != d) {
        return Err(BrauerError::InvalidData(format!("{what} is not {d}x{d}")));
    }
    let mut data = Vec::with_capacity(d * d);
    for e in rows.iter().flatten() {
        let v = numserde::parse_rational(&format!("{}/{}", e.num, e.den))
            .ok_or_else(|| BrauerError::InvalidData(format!("bad rational {}/{} in {what}", e.num, e.den)))?;
        data.push(v);
    }
    RatMatrix::new(d, d, data).map_err(|e| BrauerError::InvalidData(e.to_string()))
}

impl Group {
    pub fn from_file(file: &GroupFile) -> Result<Self, BrauerError> {
        if file.schema_version != GROUP_SCHEMA_VERSION {
            return Err(BrauerError::InvalidData(format!("unsupported schema_version {}", file.schema_version)));
        }
        let degree = file
            .degree
            .or_else(|| file.generators.first().map(Vec::len))
            .ok_or_else(|| BrauerError::InvalidData("degree is required when there are no generators".into()))?;
        let mut group = Self::from_generators(&file.name, degree, file.generators.clone())?;
        if let Some(order) = file.order {
            if order != group.order() {
                return Err(BrauerError::InvalidData(format!("declared order {order}, generated {}", group.order())));
            }
        }
        let mut named = Vec::new();
        for s in &file.subgroups {
            let mut gens = Vec::new();
            for g in &s.generators {
                gens.push(group.element_index(g).ok_or_else(|| {
                    BrauerError::InvalidData(format!("subgroup {} generator {g:?} is not in the group", s.name))
                })?);
            }
            named.push((s.name.clone(), group.closure(&gens)));
        }
        group.name_subgroups(&named)?;
        for r in &file.representations {
            let generators =
                r.generators.iter().map(|m| parse_matrix(m, r.degree, &r.name)).collect::<Result<Vec<_>, _>>()?;
            let gram = parse_matrix(&r.gram, r.degree, &r.name)?;
            let rep = RationalRep { name: r.name.clone(), degree: r.degree, generators, gram };
            group.evaluate(&rep)?;
            rep.check_self_dual()?;
            group.representations.push(rep);
        }
        Ok(group)
    }

    pub fn from_json(s: &str) -> Result<Self, BrauerError> {
        let file: GroupFile = serde_json::from_str(s).map_err(|e| BrauerError::InvalidData(e.to_string()))?;
        Self::from_file(&file)
    }
}

fn builtin_source(name: &str) -> Option<&'static str> {
    Some(match name.to_ascii_lowercase().as_str() {
        "c2" => include_str!("../data/groups/c2.json"),
        "c3" => include_str!("../data/groups/c3.json"),
        "c4" => include_str!("../data/groups/c4.json"),
        "c2xc2" | "v4" | "klein" => include_str!("../data/groups/c2xc2.json"),
        "s3" => include_str!("../data/groups/s3.json"),
        "d10" => include_str!("../data/groups/d10.json"),
        "d14" => include_str!("../data/groups/d14.json"),
        "s4" => include_str!("../data/groups/s4.json"),
        _ => return None,
    })
}

/// One of [`BUILTIN_GROUPS`], case-insensitive.
pub fn builtin_group(name: &str) -> Result<Group, BrauerError> {
    let src = builtin_source(name).ok_or_else(|| BrauerError::UnknownGroup(name.to_string()))?;
    Group::from_json(src)
}
