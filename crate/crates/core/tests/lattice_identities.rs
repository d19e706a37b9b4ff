use isoparity_core::gen::{gen_isogeny, gen_paired_isogeny, trial_rng, GenConfig};
use isoparity_core::lattice::{verify_discriminant_congruence, verify_invariant_z_ratio, z, LatticeIsogeny};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::Signed;

fn cfg(seed: u64) -> GenConfig {
    GenConfig { seed, max_rank: 6, max_n: 6, ..GenConfig::default() }
}

#[test]
fn z_is_preserved_by_transpose() {
    let c = GenConfig { max_rank: 8, ..cfg(11) };
    for t in 0..150 {
        let m = gen_isogeny(&c, &mut trial_rng(c.seed, t)).unwrap();
        assert_eq!(z(&m).unwrap(), z(&m.transpose()).unwrap());
        assert_eq!(z(&m).unwrap().to_integer(), m.determinant().abs());
    }
}

#[test]
fn invariant_z_ratio_matches_h1_ratio() {
    let c = cfg(12);
    for t in 0..80 {
        let inst = gen_paired_isogeny(&c, &mut trial_rng(c.seed, t)).unwrap().value;
        let phi =
            LatticeIsogeny::new(inst.source.base().clone(), inst.target.base().clone(), inst.phi.clone()).unwrap();
        let rep = verify_invariant_z_ratio(&phi).unwrap();
        assert!(rep.pass, "trial {t}: {rep:?}");
    }
}

#[test]
fn betts_index_matches_bruteforce_and_has_even_valuation() {
    let c = GenConfig { max_rank: 4, ..cfg(13) };
    for t in 0..80 {
        let inst = gen_paired_isogeny(&c, &mut trial_rng(c.seed, t)).unwrap().value;
        for l in [&inst.source, &inst.target] {
            let fast = l.betts_order().unwrap();
            assert_eq!(fast, l.betts_order_bruteforce().unwrap(), "trial {t}");
            for p in [3u64, 5, 7, 11, 13] {
                let v = isoparity_core::arith::valuation(&fast, p);
                assert!(v.is_even(), "trial {t}, p = {p}, #B = {fast}");
            }
        }
    }
}

#[test]
fn discriminant_congruence_holds() {
    let mut nontrivial = 0;
    for p in [3u64, 5, 7] {
        let c = GenConfig { p, ..cfg(14) };
        for t in 0..60 {
            let inst = gen_paired_isogeny(&c, &mut trial_rng(c.seed, t)).unwrap().value;
            let rep = verify_discriminant_congruence(&inst.source, &inst.target, &inst.phi, &inst.phi_t, p).unwrap();
            assert!(rep.pass, "p = {p}, trial {t}: {rep:?}");
            if rep.ord_fixed_ratio % 2 != 0 || rep.source.betts_order != BigInt::from(1) {
                nontrivial += 1;
            }
        }
    }
    assert!(nontrivial > 0);
}
