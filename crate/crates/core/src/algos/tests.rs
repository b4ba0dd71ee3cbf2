use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::env::{GlobalTransition, JointAction};
use crate::net::PolicyCache;
use crate::nn::{actor_forward, ActionBounds, Activation, LayerSpec, MlpParams, MlpShape};
use crate::Error;

const GAMMA: f64 = 0.9;

fn layout(num_agents: usize, obs_dim: usize, act_dim: usize) -> AgentLayout {
    AgentLayout {
        num_agents,
        obs_dim,
        bounds: ActionBounds::new(vec![(-0.5, 0.8); act_dim]).unwrap(),
    }
}

struct Fixture {
    learner: AgentLearner,
    peers: Vec<MlpParams>,
    cache: PolicyCache,
}

fn fixture(seed: u64, num_agents: usize, algo: Algo) -> Fixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lay = layout(num_agents, 3, 2);
    let mut learner = AgentLearner::new(0, algo, lay.clone(), &[4], &[6], &mut rng).unwrap();
    // targets differ from the online nets so the two roles are distinguishable
    let jitter: Vec<f64> = (0..learner.critic.len())
        .map(|_| rng.random_range(-0.1..0.1))
        .collect();
    learner.critic_target.add_scaled(1.0, &jitter).unwrap();
    let jitter: Vec<f64> = (0..learner.actor.len())
        .map(|_| rng.random_range(-0.1..0.1))
        .collect();
    learner.actor_target.add_scaled(1.0, &jitter).unwrap();

    let mut cache = PolicyCache::new();
    let mut peers = Vec::new();
    for j in 1..num_agents {
        let p = MlpParams::init_uniform(learner.actor.shape().clone(), &mut rng);
        cache.offer(j, p.clone(), 0);
        peers.push(p);
    }
    Fixture {
        learner,
        peers,
        cache,
    }
}

fn random_transition(rng: &mut ChaCha8Rng, lay: &AgentLayout, origin: u64) -> GlobalTransition {
    let mut vec = |n: usize| {
        (0..n)
            .map(|_| rng.random_range(-1.0..1.0))
            .collect::<Vec<f64>>()
    };
    let state = vec(lay.state_dim());
    let next_state = vec(lay.state_dim());
    let rewards = vec(lay.num_agents).iter().map(|r| r.abs()).collect();
    let actions = JointAction(
        (0..lay.num_agents)
            .map(|_| {
                (0..lay.action_dim())
                    .map(|k| {
                        let (lo, hi) = lay.bounds.as_slice()[k];
                        rng.random_range(lo..hi)
                    })
                    .collect()
            })
            .collect(),
    );
    GlobalTransition {
        state,
        actions,
        rewards,
        next_state,
        origin_step: origin,
        raw: None,
    }
}

/// Critic input `[state, u^1..u^D]` built by hand, `u` the action mapped onto `[-1, 1]`.
fn critic_input(bounds: &ActionBounds, state: &[f64], actions: &[Vec<f64>]) -> Vec<f64> {
    let mut x = state.to_vec();
    for a in actions {
        for (&v, &(lo, hi)) in a.iter().zip(bounds.as_slice()) {
            x.push((2.0 * v - lo - hi) / (hi - lo));
        }
    }
    x
}

fn eval(params: &MlpParams, x: &[f64]) -> f64 {
    params.forward(x).unwrap().0[0]
}

/// Bootstrap value `Q_target(s', pi_aged(s'))` computed independently of the learner.
fn bootstrap(f: &Fixture, t: &GlobalTransition) -> f64 {
    let lay = &f.learner.layout;
    let mut actions = Vec::new();
    for j in 0..lay.num_agents {
        let params = if j == 0 {
            &f.learner.actor_target
        } else {
            &f.peers[j - 1]
        };
        actions.push(actor_forward(params, lay.local_obs(&t.next_state, j), &lay.bounds).unwrap());
    }
    eval(
        &f.learner.critic_target,
        &critic_input(&f.learner.layout.bounds, &t.next_state, &actions),
    )
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-3)
}

#[test]
fn zero_td_error_gives_zero_critic_gradient() {
    let f = fixture(1, 2, Algo::ThreeDpg);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut t = random_transition(&mut rng, &f.learner.layout, 0);
    let q = eval(
        &f.learner.critic,
        &critic_input(&f.learner.layout.bounds, &t.state, &t.actions.0),
    );
    t.rewards[0] = q - GAMMA * bootstrap(&f, &t);
    let g = f
        .learner
        .critic_sample_gradient(&f.cache, &t, GAMMA)
        .unwrap();
    assert!(g.iter().all(|v| v.abs() < 1e-12), "{g:?}");
}

#[test]
fn linear_critic_gradient_is_input_times_td() {
    let lay = AgentLayout {
        num_agents: 1,
        obs_dim: 1,
        bounds: ActionBounds::new(vec![(-1.0, 1.0)]).unwrap(),
    };
    let actor_shape = MlpShape::new(vec![LayerSpec::new(1, 1, Activation::Tanh)]).unwrap();
    let critic_shape = MlpShape::new(vec![LayerSpec::new(2, 1, Activation::Identity)]).unwrap();
    let (w_s, w_a, b) = (0.7, -1.3, 0.2);
    let actor = MlpParams::from_values(actor_shape, vec![0.5, 0.0]).unwrap();
    let critic = MlpParams::from_values(critic_shape, vec![w_s, w_a, b]).unwrap();
    let learner = AgentLearner::from_params(0, Algo::ThreeDpg, lay, actor, critic).unwrap();

    let (s, a, r, s2) = (0.4, -0.3, 0.25, -0.6);
    let t = GlobalTransition {
        state: vec![s],
        actions: JointAction(vec![vec![a]]),
        rewards: vec![r],
        next_state: vec![s2],
        origin_step: 0,
        raw: None,
    };
    let a2 = (0.5f64 * s2).tanh();
    let delta = r + GAMMA * (w_s * s2 + w_a * a2 + b) - (w_s * s + w_a * a + b);
    let g = learner
        .critic_sample_gradient(&PolicyCache::new(), &t, GAMMA)
        .unwrap();
    let expected = [s * delta, a * delta, delta];
    for (x, y) in g.iter().zip(expected) {
        assert!((x - y).abs() < 1e-14, "{g:?} vs {expected:?}");
    }
}

#[test]
fn critic_gradient_matches_finite_difference_of_semi_gradient_loss() {
    let h = 1e-5;
    for seed in 0..20 {
        let f = fixture(100 + seed, 2, Algo::ThreeDpg);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = random_transition(&mut rng, &f.learner.layout, 0);
        let target = t.rewards[0] + GAMMA * bootstrap(&f, &t);
        let x = critic_input(&f.learner.layout.bounds, &t.state, &t.actions.0);
        let loss = |params: &MlpParams| 0.5 * (target - eval(params, &x)).powi(2);

        let g = f
            .learner
            .critic_sample_gradient(&f.cache, &t, GAMMA)
            .unwrap();
        for k in 0..g.len() {
            let mut plus = f.learner.critic.clone();
            let mut minus = f.learner.critic.clone();
            let mut e = vec![0.0; g.len()];
            e[k] = h;
            plus.add_scaled(1.0, &e).unwrap();
            minus.add_scaled(-1.0, &e).unwrap();
            let fd = (loss(&plus) - loss(&minus)) / (2.0 * h);
            // the returned vector is the descent direction of the loss
            assert!(
                rel_err(g[k], -fd) <= 1e-4,
                "seed {seed} coord {k}: {} vs {}",
                g[k],
                -fd
            );
        }
    }
}

#[test]
fn scalar_actor_gradient_by_hand() {
    let lay = AgentLayout {
        num_agents: 1,
        obs_dim: 1,
        bounds: ActionBounds::new(vec![(-1.0, 1.0)]).unwrap(),
    };
    let (w, c, s) = (0.8, 1.7, -0.45);
    let actor_shape = MlpShape::new(vec![LayerSpec::new(1, 1, Activation::Tanh)]).unwrap();
    let critic_shape = MlpShape::new(vec![LayerSpec::new(2, 1, Activation::Identity)]).unwrap();
    let actor = MlpParams::from_values(actor_shape, vec![w, 0.0]).unwrap();
    let critic = MlpParams::from_values(critic_shape, vec![0.0, c, 0.0]).unwrap();
    let learner = AgentLearner::from_params(0, Algo::ThreeDpg, lay, actor, critic).unwrap();
    let g = learner
        .actor_sample_gradient_3dpg(&PolicyCache::new(), &[s])
        .unwrap();
    let t = (w * s).tanh();
    assert!((g[0] - c * (1.0 - t * t) * s).abs() < 1e-15);
    assert!((g[1] - c * (1.0 - t * t)).abs() < 1e-15);
}

#[test]
fn critic_blind_to_own_action_gives_zero_actor_gradient() {
    let mut f = fixture(7, 2, Algo::ThreeDpg);
    let lay = f.learner.layout.clone();
    let first = f.learner.critic.shape().layers()[0];
    let mut values = f.learner.critic.values().to_vec();
    for r in 0..first.output_dim {
        for k in 0..lay.action_dim() {
            values[r * first.input_dim + lay.action_offset(0) + k] = 0.0;
        }
    }
    f.learner.critic.set_values(&values).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let t = random_transition(&mut rng, &lay, 0);
    let g3 = f
        .learner
        .actor_sample_gradient_3dpg(&f.cache, &t.state)
        .unwrap();
    let gm = f
        .learner
        .actor_sample_gradient_maddpg(&t.state, &t.actions)
        .unwrap();
    assert!(g3.iter().chain(&gm).all(|&v| v == 0.0));
}

/// Q^i(s, pi(s)) as a function of the own actor, peers frozen.
fn composed_q(f: &Fixture, actor: &MlpParams, state: &[f64], stored: Option<&JointAction>) -> f64 {
    let lay = &f.learner.layout;
    let mut actions = Vec::new();
    for j in 0..lay.num_agents {
        let a = if j == 0 {
            actor_forward(actor, lay.local_obs(state, 0), &lay.bounds).unwrap()
        } else if let Some(stored) = stored {
            stored.0[j].clone()
        } else {
            actor_forward(&f.peers[j - 1], lay.local_obs(state, j), &lay.bounds).unwrap()
        };
        actions.push(a);
    }
    eval(
        &f.learner.critic,
        &critic_input(&f.learner.layout.bounds, state, &actions),
    )
}

#[test]
fn actor_gradients_match_finite_differences() {
    let h = 1e-5;
    for seed in 0..20 {
        let f = fixture(200 + seed, 3, Algo::ThreeDpg);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = random_transition(&mut rng, &f.learner.layout, 0);
        let g3 = f
            .learner
            .actor_sample_gradient_3dpg(&f.cache, &t.state)
            .unwrap();
        let gm = f
            .learner
            .actor_sample_gradient_maddpg(&t.state, &t.actions)
            .unwrap();
        for k in 0..g3.len() {
            let mut e = vec![0.0; g3.len()];
            e[k] = h;
            let mut plus = f.learner.actor.clone();
            let mut minus = f.learner.actor.clone();
            plus.add_scaled(1.0, &e).unwrap();
            minus.add_scaled(-1.0, &e).unwrap();
            let fd3 = (composed_q(&f, &plus, &t.state, None)
                - composed_q(&f, &minus, &t.state, None))
                / (2.0 * h);
            let fdm = (composed_q(&f, &plus, &t.state, Some(&t.actions))
                - composed_q(&f, &minus, &t.state, Some(&t.actions)))
                / (2.0 * h);
            assert!(rel_err(g3[k], fd3) <= 1e-4, "3dpg seed {seed} coord {k}");
            assert!(rel_err(gm[k], fdm) <= 1e-4, "maddpg seed {seed} coord {k}");
        }
    }
}

fn on_policy_actions(f: &Fixture, state: &[f64], own: Vec<f64>) -> JointAction {
    let lay = &f.learner.layout;
    let mut actions = vec![own];
    for j in 1..lay.num_agents {
        actions.push(actor_forward(&f.peers[j - 1], lay.local_obs(state, j), &lay.bounds).unwrap());
    }
    JointAction(actions)
}

#[test]
fn maddpg_equals_3dpg_on_policy() {
    for seed in 0..50 {
        let f = fixture(300 + seed, 3, Algo::Maddpg);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = random_transition(&mut rng, &f.learner.layout, 0);
        let peers = on_policy_actions(&f, &t.state, t.actions.0[0].clone());
        let g3 = f
            .learner
            .actor_sample_gradient_3dpg(&f.cache, &t.state)
            .unwrap();
        let gm = f
            .learner
            .actor_sample_gradient_maddpg(&t.state, &peers)
            .unwrap();
        let max = g3
            .iter()
            .zip(&gm)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(max <= 1e-12);
    }
}

#[test]
fn single_agent_gradients_coincide() {
    for seed in 0..20 {
        let f = fixture(400 + seed, 1, Algo::Maddpg);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = random_transition(&mut rng, &f.learner.layout, 0);
        let g3 = f
            .learner
            .actor_sample_gradient_3dpg(&f.cache, &t.state)
            .unwrap();
        let gm = f
            .learner
            .actor_sample_gradient_maddpg(&t.state, &t.actions)
            .unwrap();
        assert_eq!(g3, gm);
    }
}

#[test]
fn perturbed_peer_action_moves_gradient_linearly() {
    let f = fixture(500, 2, Algo::Maddpg);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let t = random_transition(&mut rng, &f.learner.layout, 0);
    let base = on_policy_actions(&f, &t.state, t.actions.0[0].clone());
    let g3 = f
        .learner
        .actor_sample_gradient_3dpg(&f.cache, &t.state)
        .unwrap();
    let slope = |eps: f64| {
        let mut peers = base.clone();
        peers.0[1][0] += eps;
        let gm = f
            .learner
            .actor_sample_gradient_maddpg(&t.state, &peers)
            .unwrap();
        let diff = g3
            .iter()
            .zip(&gm)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        diff / eps
    };
    let (s_small, s_large) = (slope(1e-3), slope(1e-2));
    assert!(s_small > 0.0 && s_large > 0.0);
    assert!(
        (s_small / s_large - 1.0).abs() < 0.2,
        "{s_small} vs {s_large}"
    );
}

#[test]
fn wrong_stored_action_shape_is_data_corruption() {
    let f = fixture(9, 2, Algo::Maddpg);
    let lay = f.learner.layout.clone();
    let state = vec![0.1; lay.state_dim()];
    let bad = JointAction(vec![vec![0.0; 2], vec![0.0; 3]]);
    assert!(matches!(
        f.learner.actor_sample_gradient_maddpg(&state, &bad),
        Err(Error::DataCorruption(_))
    ));
}

#[test]
fn missing_peer_policy_is_not_initialized() {
    let f = fixture(10, 2, Algo::ThreeDpg);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let t = random_transition(&mut rng, &f.learner.layout, 0);
    let empty = PolicyCache::new();
    assert!(matches!(
        f.learner.critic_sample_gradient(&empty, &t, GAMMA),
        Err(Error::PeerNotInitialized(1))
    ));
    assert!(matches!(
        f.learner.actor_sample_gradient_3dpg(&empty, &t.state),
        Err(Error::PeerNotInitialized(1))
    ));
    assert!(f.learner.critic_sample_gradient(&f.cache, &t, 1.0).is_err());
}

fn filled_buffer(f: &Fixture, seed: u64, n: usize) -> ReplayBuffer {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut buf = ReplayBuffer::new(1000).unwrap();
    for m in 0..n {
        buf.push(random_transition(&mut rng, &f.learner.layout, m as u64));
    }
    buf
}

#[test]
fn underfull_buffer_skips_update() {
    let mut f = fixture(11, 2, Algo::ThreeDpg);
    let buf = filled_buffer(&f, 1, 5);
    let before = f.learner.clone();
    let config = TrainConfig {
        minibatch: 8,
        ..TrainConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let out = f
        .learner
        .train_step(&buf, &f.cache, 0, &config, &mut rng)
        .unwrap();
    assert_eq!(out, StepOutcome::Skipped { have: 5, need: 8 });
    assert_eq!(f.learner.actor, before.actor);
    assert_eq!(f.learner.critic_target, before.critic_target);
}

#[test]
fn train_step_is_reproducible() {
    let f = fixture(12, 2, Algo::ThreeDpg);
    let buf = filled_buffer(&f, 2, 64);
    let config = TrainConfig {
        minibatch: 16,
        ..TrainConfig::default()
    };
    let run = || {
        let mut learner = f.learner.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for n in 0..5 {
            learner
                .train_step(&buf, &f.cache, n, &config, &mut rng)
                .unwrap();
        }
        learner
    };
    let (a, b) = (run(), run());
    assert_eq!(a.actor.values(), b.actor.values());
    assert_eq!(a.critic.values(), b.critic.values());
    assert_eq!(a.critic_target.values(), b.critic_target.values());
}

#[test]
fn single_sample_step_is_the_plain_iteration() {
    for algo in [Algo::ThreeDpg, Algo::Maddpg] {
        let f = fixture(13, 2, algo);
        let buf = filled_buffer(&f, 3, 10);
        let config = TrainConfig {
            minibatch: 1,
            ..TrainConfig::default()
        };
        let n = 42;
        let mut learner = f.learner.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        learner
            .train_step(&buf, &f.cache, n, &config, &mut rng)
            .unwrap();

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let idx = buf.sample_indices(1, &mut rng)[0];
        let t = buf.get(idx).unwrap();
        let gc = f
            .learner
            .critic_sample_gradient(&f.cache, t, config.gamma)
            .unwrap();
        let ga = match algo {
            Algo::ThreeDpg => f.learner.actor_sample_gradient_3dpg(&f.cache, &t.state),
            Algo::Maddpg => f.learner.actor_sample_gradient_maddpg(&t.state, &t.actions),
        }
        .unwrap();
        let mut critic = f.learner.critic.clone();
        critic
            .add_scaled(config.critic_steps.alpha(n), &gc)
            .unwrap();
        let mut actor = f.learner.actor.clone();
        actor.add_scaled(config.actor_steps.beta(n), &ga).unwrap();
        assert_eq!(learner.critic.values(), critic.values());
        assert_eq!(learner.actor.values(), actor.values());
    }
}

#[test]
fn only_targets_move_when_nothing_is_learnable() {
    let mut f = fixture(14, 2, Algo::ThreeDpg);
    let lay = f.learner.layout.clone();
    // blind the critic to agent 0's action
    let first = f.learner.critic.shape().layers()[0];
    let mut values = f.learner.critic.values().to_vec();
    for r in 0..first.output_dim {
        for k in 0..lay.action_dim() {
            values[r * first.input_dim + lay.action_offset(0) + k] = 0.0;
        }
    }
    f.learner.critic.set_values(&values).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let mut buf = ReplayBuffer::new(100).unwrap();
    for m in 0..20 {
        let mut t = random_transition(&mut rng, &lay, m);
        let q = eval(
            &f.learner.critic,
            &critic_input(&f.learner.layout.bounds, &t.state, &t.actions.0),
        );
        t.rewards[0] = q - GAMMA * bootstrap(&f, &t);
        buf.push(t);
    }
    let tau = 0.3;
    let config = TrainConfig {
        minibatch: 8,
        tau_soft: tau,
        ..TrainConfig::default()
    };
    let before = f.learner.clone();
    let mut train_rng = ChaCha8Rng::seed_from_u64(0);
    f.learner
        .train_step(&buf, &f.cache, 0, &config, &mut train_rng)
        .unwrap();

    assert_eq!(f.learner.actor.values(), before.actor.values());
    for (a, b) in f.learner.critic.values().iter().zip(before.critic.values()) {
        assert!((a - b).abs() < 1e-15);
    }
    for (k, v) in f.learner.actor_target.values().iter().enumerate() {
        let expected =
            (1.0 - tau) * before.actor_target.values()[k] + tau * before.actor.values()[k];
        assert!((v - expected).abs() < 1e-15);
    }
    assert_ne!(
        f.learner.critic_target.values(),
        before.critic_target.values()
    );
}

#[test]
fn act_without_noise_is_the_policy() {
    let f = fixture(16, 2, Algo::ThreeDpg);
    let mut noise = OuNoise::new(2, 0.15, 0.0, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let obs = [0.2, -0.4, 0.9];
    let a = f.learner.act(&obs, &mut noise, &mut rng).unwrap();
    let pure = actor_forward(&f.learner.actor, &obs, &f.learner.layout.bounds).unwrap();
    assert_eq!(a, pure);
}

#[test]
fn act_clips_large_noise() {
    let f = fixture(17, 2, Algo::ThreeDpg);
    let mut noise = OuNoise::new(2, 0.15, 50.0, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for _ in 0..200 {
        let a = f
            .learner
            .act(&[0.0, 0.1, 0.2], &mut noise, &mut rng)
            .unwrap();
        assert!(f.learner.layout.bounds.contains(&a));
    }
}

#[test]
fn learner_rejects_mismatched_networks() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let lay = layout(2, 3, 2);
    let actor = MlpParams::init_uniform(
        MlpShape::from_widths(3, &[4], Activation::Gelu, 2, Activation::Tanh).unwrap(),
        &mut rng,
    );
    let bad_critic = MlpParams::init_uniform(
        MlpShape::from_widths(7, &[4], Activation::Gelu, 1, Activation::Identity).unwrap(),
        &mut rng,
    );
    assert!(
        AgentLearner::from_params(0, Algo::ThreeDpg, lay.clone(), actor.clone(), bad_critic)
            .is_err()
    );
    let critic = MlpParams::init_uniform(
        MlpShape::from_widths(10, &[4], Activation::Gelu, 1, Activation::Identity).unwrap(),
        &mut rng,
    );
    assert!(AgentLearner::from_params(
        2,
        Algo::ThreeDpg,
        lay.clone(),
        actor.clone(),
        critic.clone()
    )
    .is_err());
    assert!(AgentLearner::from_params(1, Algo::ThreeDpg, lay, actor, critic).is_ok());
}
