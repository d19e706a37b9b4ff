//! Acceptance suite: runs every criterion and prints one line per criterion.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use isoparity_cli::suites::{replay, run_suite, Suite, VerifyReport};
use isoparity_core::brauer::{
    builtin_group, find_brauer_relations, random_invariant_pairing, realize, regulator_constant, tau_candidate,
    trivial_regulator_constant, BrauerRelation, RationalRep, BUILTIN_GROUPS, DEFAULT_REALIZE_BUDGET,
};
use isoparity_core::gen::GenConfig;
use isoparity_core::pgroup::PGroupAutInstance;
use num_bigint::BigInt;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 20_240_917;
const SIGN_FORMULA_TIME_LIMIT: Duration = Duration::from_secs(60);
const CONGRUENCE_TIME_LIMIT: Duration = Duration::from_secs(600);
const PAIRINGS_PER_REP: usize = 20;
const RANDOM_PAIRS: usize = 40;
const TAU_SUMS: usize = 50;

type Check = fn() -> Result<String, String>;

fn cfg(p: u64, trials: usize) -> GenConfig {
    GenConfig { seed: SEED, p, trials, ..GenConfig::default() }
}

fn run(suite: Suite, c: &GenConfig) -> Result<VerifyReport, String> {
    let r = run_suite(suite, c).map_err(|e| format!("{}: {e}", suite.name()))?;
    if !r.all_pass() {
        let f = &r.failures[0];
        return Err(format!(
            "{} p = {}: {} of {} trials fail, first at trial {}: {} vs {}",
            suite.name(),
            c.p,
            r.failures.len(),
            r.trials,
            f.trial,
            f.lhs,
            f.rhs
        ));
    }
    if r.trials != c.trials {
        return Err(format!("{} ran {} of {} trials", suite.name(), r.trials, c.trials));
    }
    Ok(r)
}

fn sign_formula() -> Result<String, String> {
    let start = Instant::now();
    let mut nontrivial = 0;
    for p in [3, 5, 7] {
        let c = GenConfig { max_rank: 5, max_exponent: 4, ..cfg(p, 500) };
        nontrivial += run(Suite::SignFormula, &c)?.nontrivial;
    }
    let t = start.elapsed();
    if t >= SIGN_FORMULA_TIME_LIMIT {
        return Err(format!("took {:.1} s", t.as_secs_f64()));
    }
    Ok(format!("3 x 500 involutions exact, {nontrivial} with χ = -1, {:.1} s", t.as_secs_f64()))
}

fn filtration() -> Result<String, String> {
    let mut nontrivial = 0;
    for p in [3, 5, 7] {
        nontrivial += run(Suite::Filtration, &cfg(p, 300))?.nontrivial;
    }
    Ok(format!("3 x 300 instances, M[p^j] and p^jM, {nontrivial} with proper subgroups"))
}

fn scalar_action() -> Result<String, String> {
    for p in [3, 5, 7] {
        run(Suite::ScalarAction, &cfg(p, 100))?;
    }
    Ok("3 x 100 scalar actions".into())
}

fn chi_oracle() -> Result<String, String> {
    let mut n = 0;
    for p in [3, 5, 7] {
        n += run(Suite::ChiOracle, &cfg(p, 300))?.trials;
    }
    Ok(format!("{n} instances with #M <= 3^10, zero mismatches"))
}

fn z_transpose() -> Result<String, String> {
    let r = run(Suite::ZTranspose, &GenConfig { max_rank: 8, ..cfg(3, 500) })?;
    Ok(format!("500 isogenies of rank <= 8, {} with z != 1", r.nontrivial))
}

fn invariant_z() -> Result<String, String> {
    let c = GenConfig { max_rank: 6, max_n: 6, ..cfg(3, 200) };
    let a = run(Suite::InvariantZ, &c)?;
    let h = run(Suite::Herbrand, &c)?;
    Ok(format!(
        "200 equivariant isogenies, {} with nontrivial H1 ratio; Herbrand quotients agree on all, {} nontrivial",
        a.nontrivial, h.nontrivial
    ))
}

fn betts_parity() -> Result<String, String> {
    let c = GenConfig { max_rank: 6, max_n: 6, ..cfg(3, 200) };
    let r = run(Suite::BettsParity, &c)?;
    let small = GenConfig { max_rank: 4, seed: SEED + 1, ..c };
    let s = run(Suite::BettsParity, &small)?;
    Ok(format!(
        "2 x 200 paired lattices, even valuations at 3, 5, 7, 11, 13; {} with odd-order part; brute force agrees at rank <= 4",
        r.nontrivial + s.nontrivial
    ))
}

fn discriminant_congruence() -> Result<String, String> {
    let start = Instant::now();
    let mut nontrivial = 0;
    for p in [3, 5, 7] {
        let c = GenConfig { max_rank: 6, max_n: 6, ..cfg(p, 200) };
        nontrivial += run(Suite::DiscriminantCongruence, &c)?.nontrivial;
    }
    let t = start.elapsed();
    if t >= CONGRUENCE_TIME_LIMIT {
        return Err(format!("took {:.1} s", t.as_secs_f64()));
    }
    Ok(format!("3 x 200 adjoint-compatible isogenies, {nontrivial} nontrivial, {:.1} s", t.as_secs_f64()))
}

fn brauer_relations() -> Result<String, String> {
    let s3 = builtin_group("S3").map_err(|e| e.to_string())?;
    let rels = find_brauer_relations(&s3);
    if rels.len() != 1 {
        return Err(format!("S3 relation lattice has rank {}", rels.len()));
    }
    let shown = rels[0].display(&s3).to_string();
    let negated = BrauerRelation { coefficients: rels[0].coefficients.iter().map(|a| -a).collect() };
    if shown != "2C2+C3-2S3-{1}" && negated.display(&s3).to_string() != "2C2+C3-2S3-{1}" {
        return Err(format!("S3 relation is {shown}"));
    }
    let mut dets = Vec::new();
    for name in ["S3", "C2xC2"] {
        let g = builtin_group(name).map_err(|e| e.to_string())?;
        for rel in find_brauer_relations(&g) {
            let r = realize(&g, &rel, DEFAULT_REALIZE_BUDGET, SEED).map_err(|e| format!("{name}: {e}"))?;
            if r.determinant.is_zero() || !r.map.is_equivariant(&g) {
                return Err(format!("{name}: singular or non-equivariant realization"));
            }
            dets.push(format!("{name} det {}", r.determinant));
        }
    }
    Ok(format!("S3 generator {shown}; realized {}", dets.join(", ")))
}

fn regulator_constants() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut checked = 0;
    let s3 = builtin_group("S3").map_err(|e| e.to_string())?;
    let s3_rel = &find_brauer_relations(&s3)[0];
    let triv = regulator_constant(&s3, s3_rel, &s3.representations()[0]).map_err(|e| e.to_string())?;
    if triv.class != BigInt::from(3) {
        return Err(format!("S3 trivial class is {}", triv.class));
    }
    for name in BUILTIN_GROUPS {
        let g = builtin_group(name).map_err(|e| e.to_string())?;
        let reps = g.representations();
        for rel in find_brauer_relations(&g) {
            let triv = regulator_constant(&g, &rel, &reps[0]).map_err(|e| e.to_string())?;
            let closed = trivial_regulator_constant(&g, &rel);
            if triv.value != closed {
                return Err(format!("{name}: trivial constant {} vs closed form {closed}", triv.value));
            }
            for rep in reps {
                let base = regulator_constant(&g, &rel, rep).map_err(|e| e.to_string())?;
                let images = g.evaluate(rep).map_err(|e| e.to_string())?;
                for _ in 0..PAIRINGS_PER_REP {
                    let other = rep.with_gram(random_invariant_pairing(&images, &mut rng));
                    let c = regulator_constant(&g, &rel, &other).map_err(|e| e.to_string())?;
                    if c.class != base.class {
                        return Err(format!("{name} {}: class {} vs {}", rep.name, c.class, base.class));
                    }
                    checked += 1;
                }
            }
            for _ in 0..RANDOM_PAIRS {
                let v = &reps[rng.gen_range(0..reps.len())];
                let w = &reps[rng.gen_range(0..reps.len())];
                let vw = RationalRep::direct_sum("V+W", &[v, w]);
                let (cv, cw, cs) = (
                    regulator_constant(&g, &rel, v).map_err(|e| e.to_string())?,
                    regulator_constant(&g, &rel, w).map_err(|e| e.to_string())?,
                    regulator_constant(&g, &rel, &vw).map_err(|e| e.to_string())?,
                );
                if cs.value != &cv.value * &cw.value {
                    return Err(format!("{name}: C({}+{}) not multiplicative", v.name, w.name));
                }
            }
        }
    }
    Ok(format!("S3 trivial class 3; {checked} pairings invariant; multiplicative on random pairs"))
}

fn tau() -> Result<String, String> {
    let mut runs = 0;
    for name in BUILTIN_GROUPS {
        let g = builtin_group(name).map_err(|e| e.to_string())?;
        for (i, rel) in find_brauer_relations(&g).iter().enumerate() {
            for p in [3, 5, 7] {
                let r = tau_candidate(&g, rel, p, g.representations(), TAU_SUMS, SEED + i as u64)
                    .map_err(|e| format!("{name} p = {p}: {e}"))?;
                if !r.pass || r.random_sums.len() != TAU_SUMS {
                    return Err(format!("{name} {} p = {p}: congruence fails", r.relation));
                }
                runs += 1;
            }
        }
    }
    Ok(format!("{runs} (group, relation, p) cases with {TAU_SUMS} random sums each"))
}

fn determinism() -> Result<String, String> {
    for suite in Suite::ALL {
        let c = GenConfig { max_rank: 5, ..cfg(5, 25) };
        let a = serde_json::to_string(&run_suite(suite, &c).map_err(|e| e.to_string())?).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let b = pool.install(|| run_suite(suite, &c)).map_err(|e| e.to_string())?;
        if a != serde_json::to_string(&b).unwrap() {
            return Err(format!("{} differs between runs", suite.name()));
        }
    }
    let inst = PGroupAutInstance::new(5, vec![1, 1], isoparity_core::linalg::IntMatrix::from_rows(&[[2, 0], [0, 1]]))
        .map_err(|e| e.to_string())?;
    let failure = isoparity_cli::suites::check(
        Suite::SignFormula,
        5,
        &isoparity_cli::suites::Instance::Pgroup { instance: inst.clone() },
    )
    .map_err(|e| e.to_string())?;
    if failure.pass {
        return Err("non-involution unexpectedly satisfies the sign formula".into());
    }
    let report: VerifyReport = serde_json::from_value(serde_json::json!({
        "suite": "lemma23",
        "seed": 0,
        "config": cfg(5, 1),
        "replay": false,
        "trials": 1,
        "passed": 0,
        "nontrivial": 0,
        "retries": 0,
        "strategies": {},
        "failures": [{
            "trial": 0,
            "instance": {"kind": "pgroup", "instance": inst},
            "lhs": failure.lhs,
            "rhs": failure.rhs,
            "details": failure.details,
        }],
    }))
    .map_err(|e| e.to_string())?;
    let once = replay(&report).map_err(|e| e.to_string())?;
    let twice =
        replay(&serde_json::from_str(&serde_json::to_string(&once).unwrap()).unwrap()).map_err(|e| e.to_string())?;
    if once.failures != report.failures || twice.failures != report.failures {
        return Err("replayed failure differs".into());
    }
    Ok("every suite byte-identical across runs and thread counts; failure replays identically".into())
}

fn main() -> ExitCode {
    let criteria: [(&str, Check); 12] = [
        ("sign formula for involutions", sign_formula),
        ("χ multiplicative along M[p^j] and p^jM", filtration),
        ("χ of scalar actions", scalar_action),
        ("fast χ matches enumeration", chi_oracle),
        ("z(φ) = z(φᵀ)", z_transpose),
        ("invariant z ratio equals H1 ratio", invariant_z),
        ("Betts group has even valuations", betts_parity),
        ("discriminant congruence", discriminant_congruence),
        ("Brauer relations and realizations", brauer_relations),
        ("regulator constants", regulator_constants),
        ("tau congruence", tau),
        ("determinism and replay", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default())
        });
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail} [{secs:.1} s]", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why} [{secs:.1} s]", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
