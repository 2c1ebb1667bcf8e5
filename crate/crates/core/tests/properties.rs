use std::collections::HashMap;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use riskrl::dp::{evaluate_policy, lambda_factor, solve_optimal};
use riskrl::envs;
use riskrl::mdp::{enumerate_trajectories, sample_episode};
use riskrl::rsq::alpha_products;
use riskrl::{lse_beta, EpisodicMdp, Policy, RiskParam};

fn distribution(n: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (
        prop::collection::vec(0.01f64..1.0, n),
        prop::collection::vec(0.0f64..5.0, n),
    )
        .prop_map(|(w, v)| {
            let total: f64 = w.iter().sum();
            (w.iter().map(|x| x / total).collect(), v)
        })
}

fn beta() -> impl Strategy<Value = f64> {
    prop_oneof![-3.0f64..-1e-3, 1e-3f64..3.0]
}

fn small_mdp() -> impl Strategy<Value = EpisodicMdp> {
    (1usize..=4, 1usize..=3, 1usize..=4, any::<u64>(), 0.2f64..3.0)
        .prop_map(|(s, a, h, seed, c)| envs::random_mdp(s, a, h, seed, c).unwrap())
}

proptest! {
    #[test]
    fn lse_stays_in_support((w, v) in distribution(5), b in beta()) {
        let x = lse_beta(&w, &v, RiskParam::new(b));
        let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(x >= lo && x <= hi);
    }

    #[test]
    fn lse_is_monotone_in_values((w, v) in distribution(4), b in beta(), bump in 0.0f64..1.0, i in 0usize..4) {
        let mut u = v.clone();
        u[i] += bump;
        let risk = RiskParam::new(b);
        prop_assert!(lse_beta(&w, &u, risk) >= lse_beta(&w, &v, risk) - 1e-12);
    }

    #[test]
    fn lse_is_one_lipschitz_in_sup_norm(
        (w, v) in distribution(4),
        noise in prop::collection::vec(-1.0f64..1.0, 4),
        b in beta(),
    ) {
        let u: Vec<f64> = v.iter().zip(&noise).map(|(a, e)| a + e).collect();
        let sup = noise.iter().fold(0.0f64, |m, e| m.max(e.abs()));
        let risk = RiskParam::new(b);
        prop_assert!((lse_beta(&w, &u, risk) - lse_beta(&w, &v, risk)).abs() <= sup + 1e-12);
    }

    #[test]
    fn lse_is_increasing_in_beta((w, v) in distribution(4), b1 in -3.0f64..3.0, step in 1e-3f64..2.0) {
        let lo = lse_beta(&w, &v, RiskParam::new(b1));
        let hi = lse_beta(&w, &v, RiskParam::new(b1 + step));
        prop_assert!(hi >= lo - 1e-12);
    }

    #[test]
    fn optimal_value_dominates_every_policy(mdp in small_mdp(), b in beta(), seed in any::<u64>()) {
        let risk = RiskParam::new(b);
        let (opt, pi) = solve_optimal(&mdp, risk).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let other = Policy::uniform_random(mdp.horizon(), mdp.states(), mdp.actions(), &mut rng);
        let val = evaluate_policy(&mdp, &other, risk).unwrap();
        let greedy = evaluate_policy(&mdp, &pi, risk).unwrap();
        for h in 0..mdp.horizon() {
            for s in 0..mdp.states() {
                prop_assert!(opt.value(h, s) >= val.value(h, s) - 1e-10);
                prop_assert!((opt.value(h, s) - greedy.value(h, s)).abs() <= 1e-10);
                prop_assert!(opt.value(h, s) >= 0.0 && opt.value(h, s) <= (mdp.horizon() - h) as f64);
            }
        }
    }

    #[test]
    fn enumeration_is_normalized(mdp in small_mdp(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pi = Policy::uniform_random(mdp.horizon(), mdp.states(), mdp.actions(), &mut rng);
        let paths = enumerate_trajectories(&mdp, &pi, 0, 0).unwrap();
        let total: f64 = paths.iter().map(|(p, _)| p).sum();
        prop_assert!((total - 1.0).abs() <= 1e-10);
        for (_, r) in paths {
            prop_assert!(r >= 0.0 && r <= mdp.horizon() as f64);
        }
    }

    #[test]
    fn lambda_is_increasing(u in 0.0f64..20.0, du in 1e-6f64..5.0) {
        prop_assert!(lambda_factor(u + du) > lambda_factor(u));
        prop_assert!(lambda_factor(u) >= 3.0);
    }

    #[test]
    fn alpha_weights_sum_to_one(t in 1u64..400, h in 1usize..12) {
        let (a0, w) = alpha_products(t, h);
        prop_assert_eq!(a0, 0.0);
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert!(w.iter().all(|&x| x >= 0.0));
    }
}

#[test]
fn sampled_paths_match_enumerated_probabilities() {
    let mdp = envs::random_mdp(3, 2, 3, 21, 1.5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let pi = Policy::uniform_random(3, 3, 2, &mut rng);

    // path probabilities from the kernels, independent of the enumerator
    let mut expected: HashMap<Vec<usize>, f64> = HashMap::new();
    for s1 in 0..3 {
        for s2 in 0..3 {
            for s3 in 0..3 {
                let path = [0, s1, s2, s3];
                let p: f64 = (0..3)
                    .map(|h| mdp.prob(h, path[h], pi.action(h, path[h]), path[h + 1]))
                    .product();
                if p > 0.0 {
                    expected.insert(path[1..].to_vec(), p);
                }
            }
        }
    }
    let enumerated: f64 = enumerate_trajectories(&mdp, &pi, 0, 0)
        .unwrap()
        .iter()
        .map(|(p, _)| p)
        .sum();
    assert!((enumerated - expected.values().sum::<f64>()).abs() < 1e-12);

    let n = 100_000;
    let mut counts: HashMap<Vec<usize>, usize> = HashMap::new();
    for _ in 0..n {
        let traj = sample_episode(&mdp, &pi, 0, &mut rng);
        let key: Vec<usize> = traj.steps.iter().map(|t| t.next_state).collect();
        *counts.entry(key).or_default() += 1;
    }
    // bins with expected count below 5 are pooled into one
    let (mut stat, mut bins, mut pooled_obs, mut pooled_exp) = (0.0, 0usize, 0.0, 0.0);
    for (path, p) in &expected {
        let e = p * n as f64;
        let o = *counts.get(path).unwrap_or(&0) as f64;
        if e < 5.0 {
            pooled_obs += o;
            pooled_exp += e;
        } else {
            stat += (o - e).powi(2) / e;
            bins += 1;
        }
    }
    if pooled_exp > 0.0 {
        stat += (pooled_obs - pooled_exp).powi(2) / pooled_exp;
        bins += 1;
    }
    assert!(counts.keys().all(|k| expected.contains_key(k)));
    let p_value = 1.0 - ChiSquared::new((bins - 1) as f64).unwrap().cdf(stat);
    assert!(p_value > 0.001, "chi-square {stat} on {bins} bins, p = {p_value}");
}
