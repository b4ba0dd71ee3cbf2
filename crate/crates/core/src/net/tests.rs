use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::nn::{Activation, MlpParams, MlpShape};

const OBS: usize = 2;
const ACT: usize = 1;

fn actors(d: usize) -> Vec<MlpParams> {
    let shape = MlpShape::from_widths(OBS, &[3], Activation::Gelu, ACT, Activation::Tanh).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    (0..d)
        .map(|_| MlpParams::init_uniform(shape.clone(), &mut rng))
        .collect()
}

fn refs(acts: &[MlpParams]) -> Vec<&MlpParams> {
    acts.iter().collect()
}

fn tuple(agent: usize, n: u64) -> LocalTuple {
    LocalTuple {
        agent,
        origin_step: n,
        obs: vec![n as f64, agent as f64],
        action: vec![0.5],
        next_obs: vec![n as f64 + 1.0, agent as f64],
    }
}

/// Drive the network for `slots` slots; returns per-slot `tau_01` and all completions.
fn drive(config: NetworkConfig, slots: u64, seed: u64) -> (Vec<u64>, Vec<Completion>) {
    let acts = actors(2);
    let mut net = Network::new(config, OBS, ACT, &acts, 1000).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut taus = Vec::new();
    let mut done = Vec::new();
    for n in 0..slots {
        for i in 0..2 {
            done.extend(net.publish(tuple(i, n)));
        }
        done.extend(net.step(n, &refs(&acts), &mut rng).unwrap());
        taus.push(net.caches()[0].age(1, n).unwrap());
    }
    (taus, done)
}

fn paper_config(lambda: f64) -> NetworkConfig {
    NetworkConfig {
        force_paper_ratios: true,
        ..NetworkConfig::with_lambda(lambda)
    }
}

#[test]
fn full_access_gives_the_deterministic_sawtooth() {
    let (taus, _) = drive(paper_config(1.0), 400, 0);
    for (n, &tau) in taus.iter().enumerate() {
        let n = n as u64;
        // policy at slot 36k is enqueued on an empty queue and completes 2 slots later
        let expected = if n < 38 { n } else { 2 + (n - 38) % 36 };
        assert_eq!(tau, expected, "slot {n}");
    }
    assert_eq!(*taus.iter().max().unwrap(), 37);
}

#[test]
fn slot_zero_starts_from_the_seeded_exchange() {
    let (taus, _) = drive(paper_config(0.2), 1, 1);
    assert_eq!(taus[0], 0);
}

#[test]
fn tau_grows_by_one_or_refreshes() {
    let (taus, _) = drive(paper_config((-1.0f64).exp()), 3000, 7);
    for w in taus.windows(2) {
        assert!(w[1] == w[0] + 1 || w[1] <= w[0], "{} -> {}", w[0], w[1]);
    }
}

#[test]
fn completions_are_unique_per_agent_and_step() {
    let (_, done) = drive(paper_config(0.5), 2000, 11);
    let mut seen = std::collections::BTreeSet::new();
    for c in &done {
        assert_eq!(c.tuples.len(), 2);
        let step = c.tuples[0].origin_step;
        assert!(c.tuples.iter().all(|t| t.origin_step == step));
        assert!(seen.insert((c.agent, step)));
    }
    assert!(!done.is_empty());
}

#[test]
fn zero_size_messages_at_full_access_are_instantaneous() {
    let config = NetworkConfig {
        tuples_per_cycle: 1,
        quantize_wire: false,
        policy_bits: Some(0),
        tuple_bits: Some(0),
        ..NetworkConfig::with_lambda(1.0)
    };
    let (taus, done) = drive(config, 100, 0);
    assert!(taus.iter().all(|&t| t == 0));
    assert_eq!(done.len(), 200);
    for (k, c) in done.iter().enumerate() {
        assert_eq!(c.tuples[0].origin_step, (k / 2) as u64);
    }
}

#[test]
fn delivered_policy_is_the_enqueue_time_snapshot() {
    let config = NetworkConfig {
        tuples_per_cycle: 0,
        quantize_wire: false,
        ..NetworkConfig::with_lambda(1.0)
    };
    let mut acts = actors(2);
    let mut net = Network::new(config, OBS, ACT, &acts, 100).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    assert_eq!(net.policy_bits(), 32 * acts[1].len() as u64);
    let len = acts[1].len();
    for n in 1..5 {
        acts[1].add_scaled(1.0, &vec![0.25; len]).unwrap();
        let snapshot = acts[1].clone();
        net.step(n, &refs(&acts), &mut rng).unwrap();
        acts[1].add_scaled(1.0, &vec![1.0; len]).unwrap();
        let held = net.caches()[0].get(1).unwrap();
        assert_eq!(held.origin_step, n);
        assert_eq!(held.params, snapshot);
    }
}

#[test]
fn quantized_policies_round_through_single_precision() {
    let config = NetworkConfig {
        tuples_per_cycle: 0,
        ..NetworkConfig::with_lambda(1.0)
    };
    let acts = actors(2);
    let mut net = Network::new(config, OBS, ACT, &acts, 100).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    net.step(0, &refs(&acts), &mut rng).unwrap();
    net.step(1, &refs(&acts), &mut rng).unwrap();
    let held = &net.caches()[0].get(1).unwrap().params;
    let expect: Vec<f64> = acts[1].values().iter().map(|&v| v as f32 as f64).collect();
    assert_eq!(held.values(), &expect[..]);
}

#[test]
fn network_config_rejects_bad_lambda() {
    assert!(NetworkConfig::with_lambda(0.0).validate(2).is_err());
    assert!(NetworkConfig::with_lambda(1.5).validate(2).is_err());
    let per = NetworkConfig {
        lambda: AccessProb::PerAgent(vec![0.5]),
        ..NetworkConfig::with_lambda(1.0)
    };
    assert!(per.validate(2).is_err());
}

#[test]
fn network_aoi_is_dominated_by_the_cycle_bound() {
    let lambda = (-1.0f64).exp();
    let config = paper_config(lambda);
    let acts = actors(2);
    let net = Network::new(config.clone(), OBS, ACT, &acts, 100).unwrap();
    let bound = net.dominance_bound(1).unwrap();
    let (taus, _) = drive(config, 20_000, 5);
    let r = dominance_check(&taus, |m| bound.tail(m), 0.99).unwrap();
    assert!(r.dominated, "{r:?}");
}
