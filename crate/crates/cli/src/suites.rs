//! Seeded verification suites. Every trial draws its instance from
//! `trial_rng(seed, trial)`, so trials are independent of scheduling and any
//! failure can be re-checked from the instance alone.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use isoparity_core::arith::{mod_pow, valuation};
use isoparity_core::gen::{
    gen_isogeny, gen_paired_isogeny, gen_paired_lattice, gen_pgroup, gen_scalar_pgroup, trial_rng, GenConfig, GenError,
    IsogenyStrategy, PairedIsogeny, PairingStrategy,
};
use isoparity_core::lattice::{
    verify_discriminant_congruence, verify_invariant_z_ratio, z, LatticeError, LatticeIsogeny, PairedGLattice,
};
use isoparity_core::linalg::IntMatrix;
use isoparity_core::pgroup::{ChiMethod, PGroupAutInstance, PGroupError, StableSubgroup};
use num_bigint::BigInt;
use num_traits::One;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

/// Cap on `#M` for the enumeration oracle.
pub const CHI_ORACLE_MAX_ORDER: u64 = 59_049;
/// Largest rank on which the Betts index is also computed by enumeration.
pub const BETTS_BRUTEFORCE_MAX_RANK: usize = 4;
/// Odd primes at which the Betts order valuation is checked.
pub const BETTS_PRIMES: [u64; 5] = [3, 5, 7, 11, 13];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    /// χ_M(σ) = (−1)^{ord_p(#M/#M^σ)} for involutions
    #[serde(rename = "lemma23")]
    #[value(name = "lemma23")]
    SignFormula,
    /// χ_M = χ_{M₁}·χ_{M/M₁} for M₁ = M[p^j] and p^jM
    #[serde(rename = "lemma25")]
    #[value(name = "lemma25")]
    Filtration,
    /// χ_M(u·I) = u^{Σe_k} mod p
    #[serde(rename = "ex26")]
    #[value(name = "ex26")]
    ScalarAction,
    /// z(φ) = z(φᵀ)
    #[serde(rename = "lemma31")]
    #[value(name = "lemma31")]
    ZTranspose,
    /// z(H⁰(φ))/z(H⁰(φ^∨)) = #H¹(Λ_B)/#H¹(Λ_A)
    #[serde(rename = "lemma32")]
    #[value(name = "lemma32")]
    InvariantZ,
    /// ord_p #𝔅 even for odd p, with the Betts index cross-checked
    #[serde(rename = "prop34")]
    #[value(name = "prop34")]
    BettsParity,
    /// discriminant-group congruence for adjoint-compatible isogenies
    #[serde(rename = "prop35")]
    #[value(name = "prop35")]
    DiscriminantCongruence,
    /// closed-form χ equals the enumeration oracle
    ChiOracle,
    /// Herbrand quotients of isogenous lattices agree
    Herbrand,
}

impl Suite {
    pub const ALL: [Suite; 9] = [
        Suite::SignFormula,
        Suite::Filtration,
        Suite::ScalarAction,
        Suite::ZTranspose,
        Suite::InvariantZ,
        Suite::BettsParity,
        Suite::DiscriminantCongruence,
        Suite::ChiOracle,
        Suite::Herbrand,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::SignFormula => "lemma23",
            Suite::Filtration => "lemma25",
            Suite::ScalarAction => "ex26",
            Suite::ZTranspose => "lemma31",
            Suite::InvariantZ => "lemma32",
            Suite::BettsParity => "prop34",
            Suite::DiscriminantCongruence => "prop35",
            Suite::ChiOracle => "chi-oracle",
            Suite::Herbrand => "herbrand",
        }
    }
}

/// One generated instance, in the JSON formats of the core types.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Instance {
    Pgroup { instance: PGroupAutInstance },
    Scalar { instance: PGroupAutInstance, u: u64 },
    Isogeny { phi: IntMatrix },
    Paired { strategy: IsogenyStrategy, retries: u32, instance: PairedIsogeny },
    Lattice { strategy: PairingStrategy, retries: u32, lattice: PairedGLattice },
}

#[derive(Debug, thiserror::Error)]
pub enum SuiteError {
    #[error(transparent)]
    Gen(#[from] GenError),
    #[error(transparent)]
    PGroup(#[from] PGroupError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error("suite {suite} cannot check a {kind} instance")]
    WrongInstance { suite: &'static str, kind: &'static str },
    #[error("trial {trial}: {source}")]
    Trial { trial: u64, source: Box<SuiteError> },
}

/// Result of checking one instance: both sides of the identity and the
/// intermediate values.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub pass: bool,
    pub lhs: String,
    pub rhs: String,
    pub details: Value,
    /// the identity is not trivially `1 = 1` on this instance
    pub nontrivial: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub trial: u64,
    pub instance: Instance,
    pub lhs: String,
    pub rhs: String,
    pub details: Value,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub suite: Suite,
    pub seed: u64,
    pub config: GenConfig,
    /// re-check of embedded failures rather than a fresh seeded run
    #[serde(default)]
    pub replay: bool,
    pub trials: usize,
    pub passed: usize,
    pub nontrivial: usize,
    /// generator rejections summed over trials
    pub retries: u64,
    /// paired-isogeny constructions used, by name
    #[serde(default)]
    pub strategies: BTreeMap<String, usize>,
    pub failures: Vec<Failure>,
    #[serde(skip)]
    pub wall_time: Duration,
}

impl VerifyReport {
    pub fn all_pass(&self) -> bool {
        self.failures.is_empty()
    }
}

fn kind(inst: &Instance) -> &'static str {
    match inst {
        Instance::Pgroup { .. } => "pgroup",
        Instance::Scalar { .. } => "scalar",
        Instance::Isogeny { .. } => "isogeny",
        Instance::Paired { .. } => "paired",
        Instance::Lattice { .. } => "lattice",
    }
}

/// Instance for one trial of a suite.
pub fn generate(suite: Suite, cfg: &GenConfig, trial: u64) -> Result<Instance, SuiteError> {
    let mut rng = trial_rng(cfg.seed, trial);
    Ok(match suite {
        Suite::SignFormula => Instance::Pgroup { instance: gen_pgroup(cfg, &mut rng, true, None)? },
        Suite::Filtration => Instance::Pgroup { instance: gen_pgroup(cfg, &mut rng, false, None)? },
        Suite::ChiOracle => {
            let involution = rand::Rng::gen_bool(&mut rng, 0.5);
            let cap = BigInt::from(CHI_ORACLE_MAX_ORDER);
            Instance::Pgroup { instance: gen_pgroup(cfg, &mut rng, involution, Some(&cap))? }
        }
        Suite::ScalarAction => {
            let (instance, u) = gen_scalar_pgroup(cfg, &mut rng)?;
            Instance::Scalar { instance, u }
        }
        Suite::ZTranspose => Instance::Isogeny { phi: gen_isogeny(cfg, &mut rng)? },
        Suite::BettsParity => {
            let g = gen_paired_lattice(cfg, &mut rng)?;
            Instance::Lattice { strategy: g.strategy, retries: g.retries, lattice: g.value }
        }
        Suite::InvariantZ | Suite::DiscriminantCongruence | Suite::Herbrand => {
            let g = gen_paired_isogeny(cfg, &mut rng)?;
            Instance::Paired { strategy: g.strategy, retries: g.retries, instance: g.value }
        }
    })
}

fn wrong(suite: Suite, inst: &Instance) -> SuiteError {
    SuiteError::WrongInstance { suite: suite.name(), kind: kind(inst) }
}

fn sign_mod_p(odd: bool, p: u64) -> u64 {
    if odd {
        p - 1
    } else {
        1
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

/// Checks the suite's identity on one instance. `p` is the prime of the
/// discriminant congruence; the other suites ignore it.
pub fn check(suite: Suite, p: u64, inst: &Instance) -> Result<Outcome, SuiteError> {
    match (suite, inst) {
        (Suite::SignFormula, Instance::Pgroup { instance }) => {
            let chi = instance.chi(ChiMethod::Fast)?;
            let order = instance.order();
            let fixed = instance.fixed_count()?;
            let v = valuation(&(&order / &fixed), instance.p());
            let rhs = sign_mod_p(v % 2 == 1, instance.p());
            Ok(Outcome {
                pass: chi == rhs,
                lhs: chi.to_string(),
                rhs: rhs.to_string(),
                details: json!({
                    "order": order.to_string(),
                    "fixed": fixed.to_string(),
                    "ord_p_index": v,
                    "involution": instance.is_involution(),
                }),
                nontrivial: v % 2 == 1,
            })
        }
        (Suite::Filtration, Instance::Pgroup { instance }) => {
            let q = instance.p();
            let chi = instance.chi(ChiMethod::Fast)?;
            let mut splits = Vec::new();
            let mut pass = true;
            let mut nontrivial = false;
            let mut first_bad = None;
            for j in 0..=instance.exponent() {
                for sub in [StableSubgroup::Torsion(j), StableSubgroup::Multiples(j)] {
                    let (m1, m2) = instance.split(sub)?;
                    let (c1, c2) = (m1.chi(ChiMethod::Fast)?, m2.chi(ChiMethod::Fast)?);
                    let prod = c1 * c2 % q;
                    let label = match sub {
                        StableSubgroup::Torsion(j) => format!("M[p^{j}]"),
                        StableSubgroup::Multiples(j) => format!("p^{j}M"),
                    };
                    nontrivial |= m1.rank() > 0 && m2.rank() > 0 && chi != 1;
                    if prod != chi {
                        pass = false;
                        first_bad.get_or_insert_with(|| format!("{prod} ({label})"));
                    }
                    splits.push(json!({"subgroup": label, "chi_sub": c1, "chi_quotient": c2, "product": prod}));
                }
            }
            Ok(Outcome {
                pass,
                lhs: chi.to_string(),
                rhs: first_bad.unwrap_or_else(|| chi.to_string()),
                details: json!({ "splits": splits }),
                nontrivial,
            })
        }
        (Suite::ScalarAction, Instance::Scalar { instance, u }) => {
            let q = instance.p();
            let chi = instance.chi(ChiMethod::Fast)?;
            let t: u32 = instance.exponents().iter().sum();
            let rhs = mod_pow(u % q, t as u64, q);
            Ok(Outcome {
                pass: chi == rhs,
                lhs: chi.to_string(),
                rhs: rhs.to_string(),
                details: json!({ "u": u, "t": t }),
                nontrivial: rhs != 1,
            })
        }
        (Suite::ChiOracle, Instance::Pgroup { instance }) => {
            let fast: Vec<u64> =
                (0..instance.exponent() as usize).map(|i| instance.chi_component(i)).collect::<Result<_, _>>()?;
            let brute: Vec<u64> = (0..instance.exponent() as usize)
                .map(|i| instance.chi_component_bruteforce(i))
                .collect::<Result<_, _>>()?;
            let chi_fast = instance.chi(ChiMethod::Fast)?;
            let chi_brute = instance.chi(ChiMethod::Bruteforce)?;
            Ok(Outcome {
                pass: fast == brute && chi_fast == chi_brute,
                lhs: chi_fast.to_string(),
                rhs: chi_brute.to_string(),
                details: json!({ "components_fast": fast, "components_bruteforce": brute }),
                nontrivial: chi_fast != 1,
            })
        }
        (Suite::ZTranspose, Instance::Isogeny { phi }) => {
            let a = z(phi)?;
            let b = z(&phi.transpose())?;
            Ok(Outcome {
                pass: a == b,
                lhs: a.to_string(),
                rhs: b.to_string(),
                details: json!({ "rank": phi.rows(), "det": phi.determinant().to_string() }),
                nontrivial: !a.is_one(),
            })
        }
        (Suite::InvariantZ, Instance::Paired { instance, .. }) => {
            let phi = paired_map(instance)?;
            let r = verify_invariant_z_ratio(&phi)?;
            Ok(Outcome {
                pass: r.pass,
                lhs: r.lhs.to_string(),
                rhs: r.rhs.to_string(),
                nontrivial: !r.lhs.is_one(),
                details: to_value(&r),
            })
        }
        (Suite::Herbrand, Instance::Paired { instance, .. }) => {
            let a = instance.source.base().cohomology()?;
            let b = instance.target.base().cohomology()?;
            Ok(Outcome {
                pass: a.herbrand == b.herbrand,
                lhs: a.herbrand.to_string(),
                rhs: b.herbrand.to_string(),
                nontrivial: !a.herbrand.is_one(),
                details: json!({ "source": to_value(&a), "target": to_value(&b) }),
            })
        }
        (Suite::BettsParity, Instance::Lattice { lattice, .. }) => {
            let fast = lattice.betts_order()?;
            let brute = if lattice.rank() <= BETTS_BRUTEFORCE_MAX_RANK {
                Some(lattice.betts_order_bruteforce()?)
            } else {
                None
            };
            let vals: Vec<u64> = BETTS_PRIMES.iter().map(|&q| valuation(&fast, q)).collect();
            let odd: Vec<u64> = BETTS_PRIMES.iter().zip(&vals).filter(|(_, &v)| v % 2 == 1).map(|(&q, _)| q).collect();
            let agree = brute.as_ref().is_none_or(|b| b == &fast);
            Ok(Outcome {
                pass: odd.is_empty() && agree,
                lhs: format!("#B = {fast}"),
                rhs: match &brute {
                    Some(b) if b != &fast => format!("enumerated #B = {b}"),
                    _ if !odd.is_empty() => format!("odd valuation at {odd:?}"),
                    _ => "even valuations".to_string(),
                },
                nontrivial: vals.iter().any(|&v| v > 0),
                details: json!({
                    "betts_order": fast.to_string(),
                    "betts_order_bruteforce": brute.map(|b| b.to_string()),
                    "valuations": BETTS_PRIMES.iter().zip(&vals).map(|(q, v)| (q.to_string(), *v)).collect::<BTreeMap<_, _>>(),
                }),
            })
        }
        (Suite::DiscriminantCongruence, Instance::Paired { instance, .. }) => {
            let r =
                verify_discriminant_congruence(&instance.source, &instance.target, &instance.phi, &instance.phi_t, p)?;
            Ok(Outcome {
                pass: r.pass,
                lhs: format!("ord_p(#Φ_A^G/#Φ_B^G) = {}", r.ord_fixed_ratio),
                rhs: format!("ord_p det(φᵗφ | Λ_A^G) = {}", r.ord_det),
                nontrivial: r.ord_fixed_ratio != 0 || r.ord_det != 0,
                details: to_value(&r),
            })
        }
        _ => Err(wrong(suite, inst)),
    }
}

fn paired_map(inst: &PairedIsogeny) -> Result<LatticeIsogeny, LatticeError> {
    LatticeIsogeny::new(inst.source.base().clone(), inst.target.base().clone(), inst.phi.clone())
}

struct TrialResult {
    trial: u64,
    instance: Instance,
    outcome: Outcome,
}

fn run_trial(suite: Suite, cfg: &GenConfig, trial: u64) -> Result<TrialResult, SuiteError> {
    let wrap = |e: SuiteError| SuiteError::Trial { trial, source: Box::new(e) };
    let instance = generate(suite, cfg, trial).map_err(wrap)?;
    let outcome = check(suite, cfg.p, &instance).map_err(wrap)?;
    Ok(TrialResult { trial, instance, outcome })
}

fn assemble(suite: Suite, cfg: &GenConfig, replay: bool, results: Vec<TrialResult>, start: Instant) -> VerifyReport {
    let mut report = VerifyReport {
        suite,
        seed: cfg.seed,
        config: cfg.clone(),
        replay,
        trials: results.len(),
        passed: 0,
        nontrivial: 0,
        retries: 0,
        strategies: BTreeMap::new(),
        failures: Vec::new(),
        wall_time: Duration::ZERO,
    };
    for r in results {
        let tally = match &r.instance {
            Instance::Paired { strategy, retries, .. } => Some((to_value(strategy), *retries)),
            Instance::Lattice { strategy, retries, .. } => Some((to_value(strategy), *retries)),
            _ => None,
        };
        if let Some((strategy, retries)) = tally {
            report.retries += retries as u64;
            *report.strategies.entry(strategy.as_str().unwrap_or_default().to_string()).or_default() += 1;
        }
        report.nontrivial += r.outcome.nontrivial as usize;
        if r.outcome.pass {
            report.passed += 1;
        } else {
            report.failures.push(Failure {
                trial: r.trial,
                instance: r.instance,
                lhs: r.outcome.lhs,
                rhs: r.outcome.rhs,
                details: r.outcome.details,
            });
        }
    }
    report.wall_time = start.elapsed();
    report
}

/// Runs `cfg.trials` seeded trials in parallel on the current rayon pool.
/// Results are ordered by trial index.
pub fn run_suite(suite: Suite, cfg: &GenConfig) -> Result<VerifyReport, SuiteError> {
    cfg.check()?;
    let start = Instant::now();
    let results: Vec<TrialResult> =
        (0..cfg.trials as u64).into_par_iter().map(|t| run_trial(suite, cfg, t)).collect::<Result<_, _>>()?;
    Ok(assemble(suite, cfg, false, results, start))
}

/// Re-checks the instances embedded in a report's failures.
pub fn replay(report: &VerifyReport) -> Result<VerifyReport, SuiteError> {
    let start = Instant::now();
    let results: Vec<TrialResult> = report
        .failures
        .par_iter()
        .map(|f| {
            let outcome = check(report.suite, report.config.p, &f.instance)
                .map_err(|e| SuiteError::Trial { trial: f.trial, source: Box::new(e) })?;
            Ok(TrialResult { trial: f.trial, instance: f.instance.clone(), outcome })
        })
        .collect::<Result<_, SuiteError>>()?;
    Ok(assemble(report.suite, &report.config, true, results, start))
}
