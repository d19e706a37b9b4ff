//! Finite abelian p-groups `M = ⊕ ℤ/p^{e_k}` with an automorphism, and the
//! determinant character of the automorphism on the graded pieces
//! `p^i M[p^{i+1}]` of the torsion filtration.

use std::collections::{HashMap, HashSet};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::arith::{det_mod_p, is_odd_prime};
use crate::linalg::{preimage_lattice, quotient_index, IntMatrix};

/// Largest subquotient the brute-force character enumerates.
pub const BRUTEFORCE_LIMIT: u64 = 1_000_000;

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum PGroupError {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("filtration index {index} out of range for exponent {exponent}")]
    IndexOutOfRange { index: usize, exponent: u32 },
    #[error("group has {0} elements, above the enumeration limit")]
    TooLarge(String),
}

/// How [`PGroupAutInstance::chi`] is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChiMethod {
    /// Closed-form graded action matrices.
    Fast,
    /// Explicit enumeration of each subquotient.
    Bruteforce,
}

/// A T-stable subgroup used to split `M` into sub and quotient.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StableSubgroup {
    /// `M[p^j]`
    Torsion(u32),
    /// `p^j M`
    Multiples(u32),
}

/// `M = ⊕_k ℤ/p^{e_k}` with `e₁ ≥ … ≥ e_r`, and an endomorphism whose
/// column `l` is the image of the generator `g_l`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "InstanceRepr", into = "InstanceRepr")]
pub struct PGroupAutInstance {
    p: u64,
    exponents: Vec<u32>,
    action: IntMatrix,
}

#[derive(Serialize, Deserialize)]
struct InstanceRepr {
    p: String,
    exponents: Vec<u32>,
    action: IntMatrix,
}

impl TryFrom<InstanceRepr> for PGroupAutInstance {
    type Error = PGroupError;

    fn try_from(r: InstanceRepr) -> Result<Self, Self::Error> {
        let p =
            r.p.trim()
                .parse::<u64>()
                .map_err(|_| PGroupError::InvalidInstance(format!("p = {:?} is not a small integer", r.p)))?;
        Self::new(p, r.exponents, r.action)
    }
}

impl From<PGroupAutInstance> for InstanceRepr {
    fn from(i: PGroupAutInstance) -> Self {
        InstanceRepr { p: i.p.to_string(), exponents: i.exponents, action: i.action }
    }
}

impl PGroupAutInstance {
    /// Checks shapes and sorts the summands by descending exponent (permuting
    /// the action accordingly). Well-definedness and bijectivity are left to
    /// [`validate`](Self::validate).
    pub fn new(p: u64, exponents: Vec<u32>, action: IntMatrix) -> Result<Self, PGroupError> {
        let r = exponents.len();
        if action.rows() != r || action.cols() != r {
            return Err(PGroupError::InvalidInstance(format!(
                "action is {}x{} but there are {r} cyclic factors",
                action.rows(),
                action.cols()
            )));
        }
        if exponents.contains(&0) {
            return Err(PGroupError::InvalidInstance("exponents must be at least 1".into()));
        }
        let mut order: Vec<usize> = (0..r).collect();
        order.sort_by(|&a, &b| exponents[b].cmp(&exponents[a]));
        let exponents = order.iter().map(|&k| exponents[k]).collect();
        let action = action.select_rows(&order).select_columns(&order);
        Ok(Self { p, exponents, action })
    }

    /// Instance with `T = u·I`.
    pub fn scalar(p: u64, exponents: Vec<u32>, u: i64) -> Result<Self, PGroupError> {
        let r = exponents.len();
        Self::new(p, exponents, IntMatrix::scalar(r, u))
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn exponents(&self) -> &[u32] {
        &self.exponents
    }

    pub fn action(&self) -> &IntMatrix {
        &self.action
    }

    pub fn rank(&self) -> usize {
        self.exponents.len()
    }

    /// `n` with `p^n` the exponent of `M` (0 for the trivial group).
    pub fn exponent(&self) -> u32 {
        self.exponents.first().copied().unwrap_or(0)
    }

    pub fn order(&self) -> BigInt {
        BigInt::from(self.p).pow(self.exponents.iter().sum::<u32>())
    }

    fn prime_power(&self, e: u32) -> BigInt {
        BigInt::from(self.p).pow(e)
    }

    /// Relation lattice `diag(p^{e_k})`.
    pub fn relations(&self) -> IntMatrix {
        IntMatrix::diagonal(self.exponents.iter().map(|&e| self.prime_power(e)))
    }

    /// Why the instance is not a valid automorphism, if it is not.
    pub fn validation_error(&self) -> Option<String> {
        if !is_odd_prime(self.p) {
            return Some(format!("p = {} is not an odd prime", self.p));
        }
        for k in 0..self.rank() {
            for l in 0..self.rank() {
                let gap = self.exponents[k].saturating_sub(self.exponents[l]);
                if gap > 0 && !self.action.get(k, l).is_multiple_of(&self.prime_power(gap)) {
                    return Some(format!(
                        "entry ({k},{l}) = {} is not divisible by {}^{gap}",
                        self.action.get(k, l),
                        self.p
                    ));
                }
            }
        }
        if self.action.determinant().is_multiple_of(&BigInt::from(self.p)) {
            return Some(format!("determinant is divisible by {}", self.p));
        }
        None
    }

    /// Well-defined on `M` and bijective.
    pub fn validate(&self) -> bool {
        self.validation_error().is_none()
    }

    fn require_valid(&self) -> Result<(), PGroupError> {
        match self.validation_error() {
            Some(e) => Err(PGroupError::InvalidInstance(e)),
            None => Ok(()),
        }
    }

    /// Whether `mat` induces the identity on `M`.
    pub fn acts_as_identity(&self, mat: &IntMatrix) -> bool {
        (0..self.rank()).all(|k| {
            let m = self.prime_power(self.exponents[k]);
            (0..self.rank()).all(|l| {
                let target = if k == l { BigInt::one() } else { BigInt::zero() };
                (mat.get(k, l) - target).is_multiple_of(&m)
            })
        })
    }

    /// `T²` acts trivially on `M`.
    pub fn is_involution(&self) -> bool {
        self.acts_as_identity(&(&self.action * &self.action))
    }

    /// Same group, action `T·T'`.
    pub fn compose(&self, other: &Self) -> Result<Self, PGroupError> {
        if self.p != other.p || self.exponents != other.exponents {
            return Err(PGroupError::InvalidInstance("composing actions on different groups".into()));
        }
        let modulus = self.prime_power(self.exponent());
        let action = (&self.action * &other.action).reduce_mod(&modulus);
        Ok(Self { p: self.p, exponents: self.exponents.clone(), action })
    }

    /// Matrix over 𝔽_p of the action on `p^i M[p^{i+1}]` in the basis
    /// `{p^{e_k−1} g_k : e_k ≥ i+1}`.
    pub fn graded_action(&self, i: usize) -> Result<Vec<Vec<u64>>, PGroupError> {
        let n = self.exponent();
        if i >= n as usize {
            return Err(PGroupError::IndexOutOfRange { index: i, exponent: n });
        }
        let p = BigInt::from(self.p);
        let surviving: Vec<usize> = (0..self.rank()).filter(|&k| self.exponents[k] as usize > i).collect();
        let rows = surviving
            .iter()
            .map(|&k| {
                surviving
                    .iter()
                    .map(|&l| {
                        let (ek, el) = (self.exponents[k], self.exponents[l]);
                        let t = self.action.get(k, l);
                        let v = match el.cmp(&ek) {
                            std::cmp::Ordering::Greater => BigInt::zero(),
                            std::cmp::Ordering::Equal => t.clone(),
                            std::cmp::Ordering::Less => t / self.prime_power(ek - el),
                        };
                        v.mod_floor(&p).to_u64().expect("reduced mod p")
                    })
                    .collect()
            })
            .collect();
        Ok(rows)
    }

    /// `χ_{M,i}`: determinant of the induced action on `p^i M[p^{i+1}]`.
    pub fn chi_component(&self, i: usize) -> Result<u64, PGroupError> {
        self.require_valid()?;
        Ok(det_mod_p(self.graded_action(i)?, self.p))
    }

    /// `χ_M = ∏_{i<n} χ_{M,i}`, a unit in `1..p`.
    pub fn chi(&self, method: ChiMethod) -> Result<u64, PGroupError> {
        self.require_valid()?;
        let p = self.p as u128;
        let mut acc = 1u128;
        for i in 0..self.exponent() as usize {
            let c = match method {
                ChiMethod::Fast => det_mod_p(self.graded_action(i)?, self.p),
                ChiMethod::Bruteforce => self.chi_component_bruteforce(i)?,
            };
            acc = acc * c as u128 % p;
        }
        Ok(acc as u64)
    }

    /// `χ_{M,i}` by enumerating `p^i M[p^{i+1}] ⊆ ∏ ℤ/p^{e_k}`, choosing a basis
    /// greedily and writing the action in it.
    pub fn chi_component_bruteforce(&self, i: usize) -> Result<u64, PGroupError> {
        self.require_valid()?;
        let n = self.exponent();
        if i >= n as usize {
            return Err(PGroupError::IndexOutOfRange { index: i, exponent: n });
        }
        let group = Enumerator::new(self)?;
        let p = self.p;
        let pi = p.pow(i as u32);
        let pi1 = pi * p;

        let mut layer: Vec<Vec<u64>> = Vec::new();
        let mut seen = HashSet::new();
        for code in 0..group.size {
            let y = group.decode(code);
            if !group.scale(&y, pi1).iter().all(|&c| c == 0) {
                continue;
            }
            let x = group.scale(&y, pi);
            if seen.insert(x.clone()) {
                layer.push(x);
            }
        }
        layer.sort();

        // span: element -> coordinates in the basis chosen so far
        let mut span: HashMap<Vec<u64>, Vec<u64>> = HashMap::new();
        span.insert(vec![0; self.rank()], vec![]);
        let mut basis: Vec<Vec<u64>> = Vec::new();
        for x in &layer {
            if span.contains_key(x) {
                continue;
            }
            let mut next = HashMap::with_capacity(span.len() * p as usize);
            for (v, c) in &span {
                for a in 0..p {
                    let w = group.add(v, &group.scale(x, a));
                    let mut cw = c.clone();
                    cw.push(a);
                    next.insert(w, cw);
                }
            }
            span = next
                .into_iter()
                .map(|(v, mut c)| {
                    c.resize(basis.len() + 1, 0);
                    (v, c)
                })
                .collect();
            basis.push(x.clone());
        }
        let d = basis.len();
        let mut mat = vec![vec![0u64; d]; d];
        for (j, b) in basis.iter().enumerate() {
            let img = group.act(b);
            let coords = span
                .get(&img)
                .ok_or_else(|| PGroupError::InvalidInstance("graded piece is not stable under the action".into()))?;
            for (r, &c) in coords.iter().enumerate() {
                mat[r][j] = c;
            }
        }
        Ok(det_mod_p(mat, p))
    }

    /// `#M^T`, via the index of the relation lattice in `{x : (T−I)x ∈ relations}`.
    pub fn fixed_count(&self) -> Result<BigInt, PGroupError> {
        self.require_valid()?;
        let rel = self.relations();
        let t_minus_i = &self.action - &IntMatrix::identity(self.rank());
        let fixed = preimage_lattice(&t_minus_i, &rel);
        let q = quotient_index(&rel, &fixed).map_err(|e| PGroupError::InvalidInstance(e.to_string()))?;
        q.order().ok_or_else(|| PGroupError::InvalidInstance("fixed quotient is infinite".into()))
    }

    /// Sub and quotient instances for a T-stable subgroup, each written on its
    /// own cyclic decomposition. Trivial summands are dropped.
    pub fn split(&self, sub: StableSubgroup) -> Result<(Self, Self), PGroupError> {
        self.require_valid()?;
        let r = self.rank();
        let e = &self.exponents;
        let (sub_exp, sub_shift, quot_exp): (Vec<u32>, Vec<u32>, Vec<u32>) = match sub {
            // M[p^j] is generated by p^{max(e_k − j, 0)} g_k.
            StableSubgroup::Torsion(j) => (
                e.iter().map(|&ek| ek.min(j)).collect(),
                e.iter().map(|&ek| ek.saturating_sub(j)).collect(),
                e.iter().map(|&ek| ek.saturating_sub(j)).collect(),
            ),
            // p^j M is generated by p^j g_k.
            StableSubgroup::Multiples(j) => (
                e.iter().map(|&ek| ek.saturating_sub(j)).collect(),
                vec![j; r],
                e.iter().map(|&ek| ek.min(j)).collect(),
            ),
        };

        // Sub action: T(p^{s_l} g_l) = Σ_k T_kl p^{s_l} g_k = Σ_k (T_kl p^{s_l − s_k}) p^{s_k} g_k.
        let keep_sub: Vec<usize> = (0..r).filter(|&k| sub_exp[k] > 0).collect();
        let mut sub_action = IntMatrix::zeros(keep_sub.len(), keep_sub.len());
        for (a, &k) in keep_sub.iter().enumerate() {
            for (b, &l) in keep_sub.iter().enumerate() {
                let t = self.action.get(k, l);
                let v = if sub_shift[l] >= sub_shift[k] {
                    t * self.prime_power(sub_shift[l] - sub_shift[k])
                } else {
                    let d = self.prime_power(sub_shift[k] - sub_shift[l]);
                    if !t.is_multiple_of(&d) {
                        return Err(PGroupError::InvalidInstance("subgroup is not stable".into()));
                    }
                    t / d
                };
                sub_action.set(a, b, v.mod_floor(&self.prime_power(sub_exp[k])));
            }
        }
        let sub_inst = Self::new(self.p, keep_sub.iter().map(|&k| sub_exp[k]).collect(), sub_action)?;

        // Quotient action: images of the g_k with the surviving exponents.
        let keep_quot: Vec<usize> = (0..r).filter(|&k| quot_exp[k] > 0).collect();
        let mut quot_action = self.action.select_rows(&keep_quot).select_columns(&keep_quot);
        for (a, &k) in keep_quot.iter().enumerate() {
            for b in 0..keep_quot.len() {
                let v = quot_action.get(a, b).mod_floor(&self.prime_power(quot_exp[k]));
                quot_action.set(a, b, v);
            }
        }
        let quot_inst = Self::new(self.p, keep_quot.iter().map(|&k| quot_exp[k]).collect(), quot_action)?;
        Ok((sub_inst, quot_inst))
    }
}

/// Mixed-radix enumeration of `∏ ℤ/p^{e_k}` with the action reduced to u64.
struct Enumerator {
    moduli: Vec<u64>,
    action: Vec<Vec<u64>>,
    size: u64,
}

impl Enumerator {
    fn new(inst: &PGroupAutInstance) -> Result<Self, PGroupError> {
        let order = inst.order();
        let size = order
            .to_u64()
            .filter(|&s| s <= BRUTEFORCE_LIMIT)
            .ok_or_else(|| PGroupError::TooLarge(order.to_string()))?;
        let moduli: Vec<u64> = inst.exponents.iter().map(|&e| inst.p.pow(e)).collect();
        let action = (0..inst.rank())
            .map(|k| {
                let m = BigInt::from(moduli[k]);
                (0..inst.rank()).map(|l| inst.action.get(k, l).mod_floor(&m).to_u64().expect("reduced")).collect()
            })
            .collect();
        Ok(Self { moduli, action, size })
    }

    fn decode(&self, mut code: u64) -> Vec<u64> {
        self.moduli
            .iter()
            .map(|&m| {
                let c = code % m;
                code /= m;
                c
            })
            .collect()
    }

    fn scale(&self, x: &[u64], a: u64) -> Vec<u64> {
        x.iter().zip(&self.moduli).map(|(&c, &m)| ((c as u128 * a as u128) % m as u128) as u64).collect()
    }

    fn add(&self, x: &[u64], y: &[u64]) -> Vec<u64> {
        x.iter().zip(y).zip(&self.moduli).map(|((&a, &b), &m)| (a + b) % m).collect()
    }

    fn act(&self, x: &[u64]) -> Vec<u64> {
        self.action
            .iter()
            .zip(&self.moduli)
            .map(|(row, &m)| {
                let s: u128 = row.iter().zip(x).map(|(&t, &c)| t as u128 * c as u128).sum();
                (s % m as u128) as u64
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst(p: u64, e: &[u32], t: &[&[i64]]) -> PGroupAutInstance {
        PGroupAutInstance::new(p, e.to_vec(), IntMatrix::from_rows(t)).unwrap()
    }

    /// Independent oracle: count x with Tx = x by enumerating all of M.
    fn brute_fixed(i: &PGroupAutInstance) -> u64 {
        let g = Enumerator::new(i).unwrap();
        (0..g.size)
            .filter(|&c| {
                let x = g.decode(c);
                g.act(&x) == x
            })
            .count() as u64
    }

    /// Independent oracle: bijectivity by enumerating images.
    fn brute_bijective(i: &PGroupAutInstance) -> bool {
        let g = Enumerator::new(i).unwrap();
        let imgs: HashSet<Vec<u64>> = (0..g.size).map(|c| g.act(&g.decode(c))).collect();
        imgs.len() as u64 == g.size
    }

    #[test]
    fn validate_examples() {
        assert!(inst(3, &[1], &[&[2]]).validate());
        assert!(!inst(3, &[2, 1], &[&[1, 1], &[1, 1]]).validate());
        // Column l is the image of g_l, so the upper-right entry (k=0 with
        // e=2, l=1 with e=1) must be divisible by 3.
        let bad = inst(3, &[2, 1], &[&[1, 1], &[3, 1]]);
        assert!(!bad.validate());
        let good = inst(3, &[2, 1], &[&[1, 3], &[1, 1]]);
        assert!(good.validate());
        assert!(brute_bijective(&good));
        assert!(!inst(9, &[1], &[&[1]]).validate());
        assert!(!inst(3, &[1, 1], &[&[1, 1], &[1, 1]]).validate());
    }

    #[test]
    fn constructor_sorts_exponents() {
        let i = inst(3, &[1, 2], &[&[1, 1], &[3, 2]]);
        assert_eq!(i.exponents(), &[2, 1]);
        assert_eq!(i.action(), &IntMatrix::from_rows(&[[2, 3], [1, 1]]));
        assert!(i.validate());
    }

    #[test]
    fn chi_examples() {
        assert_eq!(inst(3, &[1], &[&[-1]]).chi(ChiMethod::Fast).unwrap(), 2);
        let nine = inst(3, &[2], &[&[2]]);
        assert_eq!(nine.chi(ChiMethod::Fast).unwrap(), 1);
        assert_eq!(nine.chi(ChiMethod::Bruteforce).unwrap(), 1);
        assert_eq!(inst(5, &[1, 1], &[&[0, 1], &[1, 0]]).chi(ChiMethod::Fast).unwrap(), 4);
    }

    #[test]
    fn chi_component_examples() {
        let id = inst(3, &[2, 1], &[&[1, 0], &[0, 1]]);
        assert_eq!(id.chi_component(0).unwrap(), 1);
        let d = inst(3, &[2, 1], &[&[2, 0], &[0, 2]]);
        assert_eq!(d.chi_component(1).unwrap(), 2);
        assert_eq!(d.chi_component_bruteforce(1).unwrap(), 2);
        assert_eq!(inst(3, &[1], &[&[2]]).chi_component(0).unwrap(), 2);
        assert!(matches!(d.chi_component(2), Err(PGroupError::IndexOutOfRange { .. })));
    }

    #[test]
    fn chi_rejects_invalid() {
        let bad = inst(3, &[1], &[&[3]]);
        assert!(matches!(bad.chi(ChiMethod::Fast), Err(PGroupError::InvalidInstance(_))));
    }

    #[test]
    fn fixed_count_examples() {
        let id = inst(3, &[2, 1], &[&[1, 0], &[0, 1]]);
        assert_eq!(id.fixed_count().unwrap(), BigInt::from(27));
        assert_eq!(inst(3, &[1], &[&[-1]]).fixed_count().unwrap(), BigInt::one());
        let d = inst(3, &[2, 1], &[&[-1, 0], &[0, 1]]);
        assert_eq!(brute_fixed(&d), 3);
        assert_eq!(d.fixed_count().unwrap(), BigInt::from(3));
    }

    #[test]
    fn fixed_count_agrees_with_enumeration() {
        let cases = [
            inst(3, &[2, 1], &[&[1, 3], &[1, 1]]),
            inst(5, &[2, 2], &[&[0, 1], &[1, 0]]),
            inst(3, &[3, 1], &[&[4, 9], &[2, 2]]),
            inst(7, &[1, 1, 1], &[&[0, 0, 1], &[1, 0, 0], &[0, 1, 0]]),
        ];
        for c in &cases {
            assert!(c.validate(), "{c:?}");
            assert_eq!(c.fixed_count().unwrap(), BigInt::from(brute_fixed(c)), "{c:?}");
        }
    }

    #[test]
    fn split_of_cyclic_group() {
        // ℤ/27 with T = 2: M[9] ≅ ℤ/9, M/M[9] ≅ ℤ/3, both with action 2.
        let i = inst(3, &[3], &[&[2]]);
        let (s, q) = i.split(StableSubgroup::Torsion(2)).unwrap();
        assert_eq!(s.exponents(), &[2]);
        assert_eq!(q.exponents(), &[1]);
        assert_eq!(s.action(), &IntMatrix::from_rows(&[[2]]));
        let (s, q) = i.split(StableSubgroup::Multiples(3)).unwrap();
        assert!(s.exponents().is_empty());
        assert_eq!(q.exponents(), &[3]);
        assert_eq!(s.chi(ChiMethod::Fast).unwrap(), 1);
    }

    #[test]
    fn json_round_trip() {
        let i = inst(3, &[2, 1], &[&[1, 3], &[1, 1]]);
        let s = serde_json::to_string(&i).unwrap();
        assert!(s.contains("\"p\":\"3\""));
        let back: PGroupAutInstance = serde_json::from_str(&s).unwrap();
        assert_eq!(back, i);
    }
}
