use distlab::dist::{kl_divergence, statistical_distance, tensor_power, tensor_sd, Distribution};
use distlab::fixtures::{biased_family, random_distribution, switched_family};
use distlab::mle::{eval_mle, likelihood, ml_ratio, MlRatio};
use distlab::owpuzz::same_distribution;
use distlab::rng::Coins;
use distlab::{draw_samples, BitString, Family};
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;

fn pair(seed: u64, width: usize, support: usize) -> (Distribution, Distribution, Distribution) {
    let mut c = Coins::new(seed, 99, 0);
    (
        random_distribution(&mut c, width, support).unwrap(),
        random_distribution(&mut c, width, support).unwrap(),
        random_distribution(&mut c, width, support).unwrap(),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sd_is_a_metric(seed in any::<u64>(), width in 1usize..=4) {
        let (p, q, r) = pair(seed, width, 16);
        let pq = statistical_distance(&p, &q).unwrap();
        prop_assert_eq!(&pq, &statistical_distance(&q, &p).unwrap());
        prop_assert!(statistical_distance(&p, &p).unwrap().is_zero());
        prop_assert!(statistical_distance(&p, &r).unwrap() <= pq + statistical_distance(&q, &r).unwrap());
        let total: BigRational = p.iter().map(|(_, v)| v.clone()).sum();
        prop_assert!(total.is_one());
    }

    #[test]
    fn kl_is_zero_only_on_equal_inputs(seed in any::<u64>(), width in 1usize..=3) {
        let (p, _, _) = pair(seed, width, 8);
        let q = p.mix(&Distribution::uniform(width).unwrap(), &distlab::dist::rat(1, 3)).unwrap();
        let kl = kl_divergence(&p, &q).unwrap();
        prop_assert!(kl >= 0.0);
        prop_assert_eq!(kl == 0.0, p == q);
        prop_assert_eq!(kl_divergence(&p, &p).unwrap(), 0.0);
    }

    #[test]
    fn tensor_distance_grows(seed in any::<u64>(), width in 1usize..=2) {
        let (p, q, _) = pair(seed, width, 4);
        let mut prev = statistical_distance(&p, &q).unwrap();
        for t in 2..=6 {
            let cur = tensor_sd(&p, &q, t).unwrap();
            prop_assert!(cur >= prev);
            prev = cur;
        }
        let direct = statistical_distance(&tensor_power(&p, 3).unwrap(), &tensor_power(&q, 3).unwrap()).unwrap();
        prop_assert_eq!(direct, tensor_sd(&p, &q, 3).unwrap());
    }

    #[test]
    fn mle_matches_a_direct_scan(seed in any::<u64>(), z in 0u32..16, t in 1usize..12) {
        let fam = switched_family(4).unwrap();
        let s = draw_samples(&fam, BitString::new(z, 4).unwrap(), t, seed).unwrap();
        let fit = eval_mle(&fam, &s).unwrap();
        let best = BitString::all(4).map(|a| likelihood(&fam, a, &s).unwrap()).max().unwrap();
        prop_assert_eq!(&fit.max_likelihood, &best);
        let first = BitString::all(4).find(|a| likelihood(&fam, *a, &s).unwrap() == best).unwrap();
        prop_assert_eq!(fit.argmax_z, first);
        let single = distlab::SampleSet { samples: vec![s.samples[0]], seed: 0 };
        let one = eval_mle(&fam, &single).unwrap();
        prop_assert_eq!(ml_ratio(&fam, s.samples[0], one.argmax_z).unwrap(), MlRatio::Finite(BigRational::one()));
    }
}

#[test]
fn verdicts_depend_only_on_the_answer_distribution() {
    let fam = biased_family(3).unwrap();
    for a in BitString::all(3) {
        for b in BitString::all(3) {
            assert_eq!(same_distribution(&fam, a, b).unwrap(), a == b);
        }
    }
    assert_eq!(fam.param_bits(), 3);
}
