//! Seeded random instances for the verification suites.
//!
//! Every draw takes an explicit RNG. [`trial_rng`] derives an independent
//! ChaCha stream per `(seed, trial)` pair, so trials can run in any order or
//! in parallel and still reproduce exactly.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::arith::is_odd_prime;
use crate::lattice::{adjoint, GLattice, LatticeError, PairedGLattice};
use crate::linalg::{cokernel, IntMatrix, RatMatrix};
use crate::pgroup::{PGroupAutInstance, StableSubgroup};

pub const DEFAULT_RETRY_BUDGET: u32 = 1000;

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum GenError {
    #[error("no valid instance after {0} attempts")]
    RetryBudgetExhausted(u32),
    #[error("invalid generator configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenConfig {
    pub seed: u64,
    pub p: u64,
    pub max_rank: usize,
    pub max_n: u64,
    pub max_exponent: u32,
    pub coefficient_bound: i64,
    pub trials: usize,
    pub retry_budget: u32,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            p: 3,
            max_rank: 5,
            max_n: 6,
            max_exponent: 4,
            coefficient_bound: 3,
            trials: 100,
            retry_budget: DEFAULT_RETRY_BUDGET,
        }
    }
}

impl GenConfig {
    pub fn check(&self) -> Result<(), GenError> {
        if !is_odd_prime(self.p) {
            return Err(GenError::InvalidConfig(format!("p = {} is not an odd prime", self.p)));
        }
        if self.max_rank == 0 || self.max_n == 0 || self.max_exponent == 0 {
            return Err(GenError::InvalidConfig("max_rank, max_n and max_exponent must be positive".into()));
        }
        if self.coefficient_bound <= 0 {
            return Err(GenError::InvalidConfig("coefficient_bound must be positive".into()));
        }
        Ok(())
    }
}

/// Independent RNG for one trial of a seeded run.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

fn random_unit_mod(rng: &mut impl Rng, p: u64, modulus: u64) -> u64 {
    loop {
        let u = rng.gen_range(1..modulus);
        if u % p != 0 {
            return u;
        }
    }
}

/// Exponent vector of rank at most `max_rank` with `p^{Σe} ≤ max_order` when a
/// cap is given.
fn random_exponents(rng: &mut impl Rng, cfg: &GenConfig, max_order: Option<&BigInt>) -> Vec<u32> {
    let mut total_cap = u32::MAX;
    if let Some(cap) = max_order {
        let p = BigInt::from(cfg.p);
        let mut acc = p.clone();
        total_cap = 0;
        while &acc <= cap {
            total_cap += 1;
            acc *= &p;
        }
        total_cap = total_cap.max(1);
    }
    let max_rank = cfg.max_rank.min(total_cap as usize).max(1);
    let rank = rng.gen_range(1..=max_rank);
    let mut remaining = total_cap;
    let mut exps = Vec::with_capacity(rank);
    for k in 0..rank {
        let slots_after = (rank - k - 1) as u32;
        let hi = cfg.max_exponent.min(remaining.saturating_sub(slots_after)).max(1);
        let e = rng.gen_range(1..=hi);
        remaining = remaining.saturating_sub(e);
        exps.push(e);
    }
    exps.sort_unstable_by(|a, b| b.cmp(a));
    exps
}

/// Random well-defined endomorphism matrix for `⊕ ℤ/p^{e_k}` with descending
/// exponents; entry `(k, l)` is a multiple of `p^{max(0, e_k − e_l)}`.
fn random_endomorphism(rng: &mut impl Rng, p: u64, exps: &[u32]) -> IntMatrix {
    let r = exps.len();
    let mut t = IntMatrix::zeros(r, r);
    for k in 0..r {
        for l in 0..r {
            let shift = exps[k].saturating_sub(exps[l]);
            let free = exps[k] - shift;
            let v = rng.gen_range(0..p.pow(free)) * p.pow(shift);
            t.set(k, l, BigInt::from(v));
        }
    }
    t
}

/// Inverse of an integer matrix modulo `m`, given `det` is a unit mod `m`.
fn inverse_mod(a: &IntMatrix, m: &BigInt) -> Option<IntMatrix> {
    let det = a.determinant();
    let g = det.extended_gcd(m);
    if !g.gcd.is_one() {
        return None;
    }
    let det_inv = g.x.mod_floor(m);
    let inv = RatMatrix::from_int(a).inverse().ok()?;
    let adj = inv.scale(&num_rational::BigRational::from_integer(det)).to_int()?;
    Some(adj.map(|x| (x * &det_inv).mod_floor(m)))
}

/// Random automorphism of a random finite abelian p-group. With `involution`
/// the matrix is `P·D·P⁻¹` for a random automorphism `P` and a ±1 diagonal
/// `D`, reduced modulo the exponent.
pub fn gen_pgroup(
    cfg: &GenConfig,
    rng: &mut impl Rng,
    involution: bool,
    max_order: Option<&BigInt>,
) -> Result<PGroupAutInstance, GenError> {
    cfg.check()?;
    let p = cfg.p;
    let exps = random_exponents(rng, cfg, max_order);
    let modulus = BigInt::from(p).pow(exps[0]);
    for _ in 0..cfg.retry_budget {
        let t = random_endomorphism(rng, p, &exps);
        let inst = PGroupAutInstance::new(p, exps.clone(), t.clone()).expect("shape is consistent");
        if !inst.validate() {
            continue;
        }
        if !involution {
            return Ok(inst);
        }
        let Some(t_inv) = inverse_mod(&t, &modulus) else { continue };
        let d = IntMatrix::diagonal((0..exps.len()).map(|_| BigInt::from(if rng.gen_bool(0.5) { 1 } else { -1 })));
        let conj = (&(&t * &d) * &t_inv).map(|x| x.mod_floor(&modulus));
        let inv = PGroupAutInstance::new(p, exps.clone(), conj).expect("shape is consistent");
        if inv.validate() && inv.is_involution() {
            return Ok(inv);
        }
    }
    Err(GenError::RetryBudgetExhausted(cfg.retry_budget))
}

/// Scalar automorphism `u·I` with a random unit `u`.
pub fn gen_scalar_pgroup(cfg: &GenConfig, rng: &mut impl Rng) -> Result<(PGroupAutInstance, u64), GenError> {
    cfg.check()?;
    let exps = random_exponents(rng, cfg, None);
    let u = random_unit_mod(rng, cfg.p, cfg.p.pow(exps[0]).max(cfg.p));
    let inst = PGroupAutInstance::scalar(cfg.p, exps, u as i64).expect("scalar instance is valid");
    Ok((inst, u))
}

/// Random stable subgroup `M[p^j]` or `p^j M` with `1 ≤ j < e₁` when possible.
pub fn gen_stable_subgroup(inst: &PGroupAutInstance, rng: &mut impl Rng) -> StableSubgroup {
    let top = inst.exponent().max(1);
    let j = if top > 1 { rng.gen_range(1..top) } else { 1 };
    if rng.gen_bool(0.5) {
        StableSubgroup::Torsion(j)
    } else {
        StableSubgroup::Multiples(j)
    }
}

/// Random unimodular matrix and its inverse, built from elementary operations.
pub fn random_unimodular(rng: &mut impl Rng, n: usize, steps: usize) -> (IntMatrix, IntMatrix) {
    let mut u = IntMatrix::identity(n);
    let mut u_inv = IntMatrix::identity(n);
    if n == 0 {
        return (u, u_inv);
    }
    for _ in 0..steps {
        let i = rng.gen_range(0..n);
        let j = rng.gen_range(0..n);
        let mut e = IntMatrix::identity(n);
        let mut e_inv = IntMatrix::identity(n);
        if i == j {
            if rng.gen_bool(0.2) {
                e.set(i, i, -1);
                e_inv.set(i, i, -1);
            } else {
                continue;
            }
        } else {
            let c: i64 = [-2, -1, 1, 2][rng.gen_range(0..4)];
            e.set(i, j, c);
            e_inv.set(i, j, -c);
        }
        u = &e * &u;
        u_inv = &u_inv * &e_inv;
    }
    (u, u_inv)
}

/// Random square integer matrix with nonzero determinant, either with
/// uniform entries or as `U·D·V` with unimodular `U`, `V`.
pub fn gen_isogeny(cfg: &GenConfig, rng: &mut impl Rng) -> Result<IntMatrix, GenError> {
    cfg.check()?;
    let b = cfg.coefficient_bound;
    for _ in 0..cfg.retry_budget {
        let r = rng.gen_range(1..=cfg.max_rank);
        let m = if rng.gen_bool(0.5) {
            let mut m = IntMatrix::zeros(r, r);
            for i in 0..r {
                for j in 0..r {
                    m.set(i, j, rng.gen_range(-b..=b));
                }
            }
            m
        } else {
            let d = IntMatrix::diagonal((0..r).map(|_| BigInt::from(rng.gen_range(1..=b.max(2) * 3))));
            let (u, _) = random_unimodular(rng, r, 3 * r);
            let (v, _) = random_unimodular(rng, r, 3 * r);
            &(&u * &d) * &v
        };
        if !m.determinant().is_zero() {
            return Ok(m);
        }
    }
    Err(GenError::RetryBudgetExhausted(cfg.retry_budget))
}

/// Coefficients (constant term first) of the `d`-th cyclotomic polynomial.
pub fn cyclotomic(d: u64) -> Vec<i64> {
    let d = d as usize;
    let mut poly = vec![0i64; d + 1];
    poly[0] = -1;
    poly[d] = 1;
    for e in 1..d {
        if d.is_multiple_of(e) {
            poly = poly_div_exact(&poly, &cyclotomic(e as u64));
        }
    }
    poly
}

fn poly_mul(a: &[i64], b: &[i64]) -> Vec<i64> {
    let mut out = vec![0i64; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Quotient of monic polynomial division known to be exact.
fn poly_div_exact(num: &[i64], den: &[i64]) -> Vec<i64> {
    let mut rem = num.to_vec();
    let dd = den.len() - 1;
    let qd = num.len() - 1 - dd;
    let mut q = vec![0i64; qd + 1];
    for k in (0..=qd).rev() {
        let c = rem[k + dd];
        q[k] = c;
        for (j, x) in den.iter().enumerate() {
            rem[k + j] -= c * x;
        }
    }
    debug_assert!(rem.iter().all(|&x| x == 0));
    q
}

/// Companion matrix of a monic polynomial: `e_i ↦ e_{i+1}`, last column
/// `−(a_0, …, a_{m−1})`.
pub fn companion(poly: &[i64]) -> IntMatrix {
    let m = poly.len() - 1;
    let mut c = IntMatrix::zeros(m, m);
    for i in 0..m {
        if i + 1 < m {
            c.set(i + 1, i, 1);
        }
        c.set(i, m - 1, -poly[i]);
    }
    c
}

fn euler_phi(d: u64) -> usize {
    (1..=d).filter(|k| k.gcd(&d) == 1).count()
}

/// Groups a multiset of cyclotomic indices into blocks with distinct indices.
fn random_blocks(rng: &mut impl Rng, factors: &[u64]) -> Vec<Vec<u64>> {
    let mut order = factors.to_vec();
    order.shuffle(rng);
    let mut blocks: Vec<Vec<u64>> = Vec::new();
    for d in order {
        let open: Vec<usize> = (0..blocks.len()).filter(|&b| !blocks[b].contains(&d)).collect();
        if open.is_empty() || rng.gen_bool(0.4) {
            blocks.push(vec![d]);
        } else {
            blocks[open[rng.gen_range(0..open.len())]].push(d);
        }
    }
    blocks
}

fn block_action(blocks: &[Vec<u64>]) -> IntMatrix {
    let mats: Vec<IntMatrix> = blocks
        .iter()
        .map(|b| companion(&b.iter().fold(vec![1i64], |acc, &d| poly_mul(&acc, &cyclotomic(d)))))
        .collect();
    IntMatrix::block_diagonal(&mats)
}

fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize, b: i64) -> IntMatrix {
    let mut m = IntMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            m.set(i, j, rng.gen_range(-b..=b));
        }
    }
    m
}

/// `Σ_k (σ^k)ᵀ R σ^k` for `R = MᵀM + I`, a positive-definite invariant form.
fn averaged_form(rng: &mut impl Rng, lat: &GLattice, b: i64) -> IntMatrix {
    let r = lat.rank();
    let m = random_matrix(rng, r, r, b);
    let base = &(&m.transpose() * &m) + &IntMatrix::identity(r);
    let mut acc = IntMatrix::zeros(r, r);
    let mut power = IntMatrix::identity(r);
    for _ in 0..lat.order() {
        acc = &acc + &(&(&power.transpose() * &base) * &power);
        power = &power * lat.sigma();
    }
    acc
}

/// How the pairing of a generated lattice was constructed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairingStrategy {
    /// averaged positive-definite form divided by the gcd of its entries
    Averaged,
    /// `M ⊕ M^∨` with `((m,f),(m',f')) = f(m') + f'(m)` plus a multiple of an
    /// averaged form
    Hyperbolic,
}

fn content(m: &IntMatrix) -> BigInt {
    m.entries().iter().fold(BigInt::zero(), |g, x| g.gcd(x))
}

/// Random G-lattice with an invariant nondegenerate pairing, in a random basis.
pub fn gen_paired_lattice(
    cfg: &GenConfig,
    rng: &mut impl Rng,
) -> Result<Generated<PairedGLattice, PairingStrategy>, GenError> {
    cfg.check()?;
    let b = cfg.coefficient_bound;
    let n = rng.gen_range(1..=cfg.max_n);
    let strategy =
        if cfg.max_rank >= 2 && rng.gen_bool(0.5) { PairingStrategy::Hyperbolic } else { PairingStrategy::Averaged };
    let sigma = match strategy {
        PairingStrategy::Hyperbolic => {
            let factors = random_cyclotomic_factors(rng, n, cfg.max_rank / 2);
            let blocks = random_blocks(rng, &factors);
            let (m, _, _) = change_basis(rng, &block_action(&blocks));
            let dual = GLattice::new(n, m.clone()).map_err(internal)?.dual();
            IntMatrix::block_diagonal(&[m, dual.sigma().clone()])
        }
        PairingStrategy::Averaged => {
            let factors = random_cyclotomic_factors(rng, n, cfg.max_rank);
            block_action(&random_blocks(rng, &factors))
        }
    };
    let lat = GLattice::new(n, sigma.clone()).map_err(internal)?;
    let r = lat.rank();
    for attempt in 0..cfg.retry_budget {
        let gram = match strategy {
            PairingStrategy::Hyperbolic => {
                let half = r / 2;
                let mut h = IntMatrix::zeros(r, r);
                for i in 0..half {
                    h.set(i, half + i, 1);
                    h.set(half + i, i, 1);
                }
                let c = rng.gen_range(0..=b);
                &h + &averaged_form(rng, &lat, b).scale(&BigInt::from(c))
            }
            PairingStrategy::Averaged => {
                let q = averaged_form(rng, &lat, b);
                let g = content(&q);
                q.map(|x| x / &g)
            }
        };
        if gram.determinant().is_zero() {
            continue;
        }
        let (s2, _, u_inv) = change_basis(rng, &sigma);
        let gram = &(&u_inv.transpose() * &gram) * &u_inv;
        let value = PairedGLattice::new(GLattice::new(n, s2).map_err(internal)?, gram).map_err(internal)?;
        return Ok(Generated { value, strategy, retries: attempt });
    }
    Err(GenError::RetryBudgetExhausted(cfg.retry_budget))
}

/// How a paired isogeny was constructed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IsogenyStrategy {
    /// `φ = f(σ)` on a single generated paired lattice, `φᵗ = f(σ⁻¹)`
    Polynomial,
    /// `φ = Σ σ_B^k X σ_A^{−k}`, target pairing scaled to make `φᵗ` integral
    Averaged,
    /// source pairing pulled back along `φ`, target pairing scaled by the
    /// exponent of `coker φ`
    Pullback,
}

/// Two paired G-lattices with an isogeny `φ` and its integral adjoint `φᵗ`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairedIsogeny {
    pub source: PairedGLattice,
    pub target: PairedGLattice,
    pub phi: IntMatrix,
    pub phi_t: IntMatrix,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Generated<T, S = IsogenyStrategy> {
    pub value: T,
    pub strategy: S,
    /// draws rejected before this one
    pub retries: u32,
}

fn random_cyclotomic_factors(rng: &mut impl Rng, n: u64, max_rank: usize) -> Vec<u64> {
    let divisors: Vec<u64> = (1..=n).filter(|d| n.is_multiple_of(*d)).collect();
    let mut factors = Vec::new();
    let mut rank = 0;
    loop {
        let fitting: Vec<u64> = divisors.iter().copied().filter(|&d| rank + euler_phi(d) <= max_rank).collect();
        if fitting.is_empty() || (!factors.is_empty() && rng.gen_bool(0.3)) {
            break;
        }
        let d = fitting[rng.gen_range(0..fitting.len())];
        rank += euler_phi(d);
        factors.push(d);
    }
    factors
}

/// Conjugates `σ` by a random unimodular `U`: returns `(UσU⁻¹, U, U⁻¹)`.
fn change_basis(rng: &mut impl Rng, sigma: &IntMatrix) -> (IntMatrix, IntMatrix, IntMatrix) {
    let r = sigma.rows();
    let (u, u_inv) = random_unimodular(rng, r, 2 * r);
    (&(&u * sigma) * &u_inv, u, u_inv)
}

/// `φ = f(σ)` for a random integer polynomial `f` on a generated paired
/// lattice, followed by a change of basis on the target. The adjoint is
/// `f(σ⁻¹)`, integral for every pairing.
fn gen_polynomial_isogeny(cfg: &GenConfig, rng: &mut impl Rng) -> Result<Generated<PairedIsogeny>, GenError> {
    let b = cfg.coefficient_bound;
    let src = gen_paired_lattice(cfg, rng)?;
    let source = src.value;
    let lat = source.base();
    let r = lat.rank();
    for attempt in 0..cfg.retry_budget {
        let mut f = IntMatrix::zeros(r, r);
        let mut power = IntMatrix::identity(r);
        for _ in 0..r.max(1) {
            f = &f + &power.scale(&BigInt::from(rng.gen_range(-b..=b)));
            power = &power * lat.sigma();
        }
        if f.determinant().is_zero() {
            continue;
        }
        let (sb, u, u_inv) = change_basis(rng, lat.sigma());
        let gram_b = &(&u_inv.transpose() * source.gram()) * &u_inv;
        let target =
            PairedGLattice::new(GLattice::new(lat.order(), sb).map_err(internal)?, gram_b).map_err(internal)?;
        let phi = &u * &f;
        let phi_t = adjoint(&phi, source.gram(), target.gram()).map_err(internal)?;
        return Ok(Generated {
            value: PairedIsogeny { source, target, phi, phi_t },
            strategy: IsogenyStrategy::Polynomial,
            retries: src.retries + attempt,
        });
    }
    Err(GenError::RetryBudgetExhausted(cfg.retry_budget))
}

/// Random adjoint-compatible isogeny between paired lattices with a cyclic
/// group of order at most `max_n` and rank at most `max_rank`.
pub fn gen_paired_isogeny(cfg: &GenConfig, rng: &mut impl Rng) -> Result<Generated<PairedIsogeny>, GenError> {
    cfg.check()?;
    let strategy = match rng.gen_range(0..3) {
        0 => IsogenyStrategy::Polynomial,
        1 => IsogenyStrategy::Averaged,
        _ => IsogenyStrategy::Pullback,
    };
    if strategy == IsogenyStrategy::Polynomial {
        return gen_polynomial_isogeny(cfg, rng);
    }
    let b = cfg.coefficient_bound;
    let n = rng.gen_range(1..=cfg.max_n);
    let factors = random_cyclotomic_factors(rng, n, cfg.max_rank);
    let blocks_a = random_blocks(rng, &factors);
    let blocks_b = random_blocks(rng, &factors);
    let (sigma_a, _, _) = change_basis(rng, &block_action(&blocks_a));
    let (sigma_b, _, _) = change_basis(rng, &block_action(&blocks_b));
    let lat_a = GLattice::new(n, sigma_a).expect("companion blocks have order dividing n");
    let lat_b = GLattice::new(n, sigma_b.clone()).expect("companion blocks have order dividing n");
    let r = lat_a.rank();
    let inv_a = lat_a.sigma_inverse();

    for attempt in 0..cfg.retry_budget {
        let x = random_matrix(rng, r, r, b);
        let mut phi = IntMatrix::zeros(r, r);
        let mut left = IntMatrix::identity(r);
        let mut right = IntMatrix::identity(r);
        for _ in 0..n {
            phi = &phi + &(&(&left * &x) * &right);
            left = &left * &sigma_b;
            right = &right * &inv_a;
        }
        if phi.determinant().is_zero() {
            continue;
        }
        let (gram_a, gram_b) = if strategy == IsogenyStrategy::Averaged {
            let qa = averaged_form(rng, &lat_a, b);
            let qb = averaged_form(rng, &lat_b, b);
            let qa_inv = RatMatrix::from_int(&qa).inverse().expect("definite form");
            let adj = &qa_inv * &RatMatrix::from_int(&(&phi.transpose() * &qb));
            (qa, qb.scale(&adj.denominator_lcm()))
        } else {
            let qb = averaged_form(rng, &lat_b, b);
            let qa = &(&phi.transpose() * &qb) * &phi;
            let e = cokernel(&phi).torsion.exponent();
            (qa, qb.scale(&e))
        };
        let source = PairedGLattice::new(lat_a.clone(), gram_a).map_err(internal)?;
        let target = PairedGLattice::new(lat_b.clone(), gram_b).map_err(internal)?;
        let phi_t = match adjoint(&phi, source.gram(), target.gram()) {
            Ok(m) => m,
            Err(LatticeError::NonIntegral(_)) => continue,
            Err(e) => return Err(internal(e)),
        };
        return Ok(Generated { value: PairedIsogeny { source, target, phi, phi_t }, strategy, retries: attempt });
    }
    Err(GenError::RetryBudgetExhausted(cfg.retry_budget))
}

fn internal(e: LatticeError) -> GenError {
    GenError::InvalidConfig(format!("generated an invalid lattice: {e}"))
}
