use junta_core::boolfn::{Distribution, TruthTable};
use junta_core::composition::{self, canonical_advantage, ComposedInstance};
use junta_core::experiments;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random `g`, and a balanced `f` under uniform `D`, so `μ = 0`.
fn balanced_instance(n: usize, k: usize, seed: u64) -> ComposedInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gb: Vec<bool> = (0..1usize << k).map(|_| rng.gen()).collect();
    let mut fb: Vec<bool> = (0..1usize << n).map(|x| x % 2 == 0).collect();
    for i in (1..fb.len()).rev() {
        fb.swap(i, rng.gen_range(0..=i));
    }
    ComposedInstance::new(
        TruthTable::from_fn(k, |y| gb[y]).unwrap(),
        TruthTable::from_fn(n, |x| fb[x]).unwrap().to_prob(),
        Distribution::uniform(n).unwrap(),
    )
    .unwrap()
}

#[test]
fn squared_chain_holds_when_balanced() {
    for (n, k) in [(2, 2), (3, 2), (2, 3)] {
        for seed in 0..60 {
            let inst = balanced_instance(n, k, seed);
            assert_eq!(inst.mu(), 0.0);
            for r in 0..=n * k {
                let rep = experiments::sandwich_experiment(&inst, r).unwrap();
                assert!(rep.passed(), "n={n} k={k} seed={seed} R={r}: {rep:?}");
            }
        }
    }
}

#[test]
fn lower_and_upper_bounds_hold_for_any_mean() {
    for (n, k) in [(2, 2), (3, 2), (2, 3)] {
        for seed in 0..60 {
            let inst = experiments::random_instance(n, k, 5000 + seed).unwrap();
            for r in 0..=n * k {
                let best = composition::best_partition(&inst, r).unwrap();
                let corr = composition::correlations(&inst, &best.partition).unwrap();
                let stab_alpha = inst.stab(&corr.alpha).unwrap();
                // canonical_advantage itself rejects a value below Stab_α
                let canon = canonical_advantage(&inst, &best.partition).unwrap();
                assert!(canon + 1e-9 >= stab_alpha);
                let opt = composition::exhaustive_optimum(&inst, r).unwrap();
                assert!(opt <= best.value.sqrt() + 1e-9);
                assert!(composition::error4_check(&inst, r).unwrap().holds);
            }
        }
    }
}

#[test]
fn reports_recheck() {
    let reports = experiments::sandwich_sweep(3, 2, 0..4).unwrap();
    assert_eq!(reports.len(), 4 * 7);
    assert!(reports.iter().all(|r| r.recheck()));
    let again = experiments::sandwich_sweep(3, 2, 0..4).unwrap();
    assert_eq!(reports, again);
}
