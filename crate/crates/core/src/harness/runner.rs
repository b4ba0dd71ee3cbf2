use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::config::{Diagnostics, Mode, RunConfig};
use super::metrics::{write_aoi, write_metrics, write_timing, MetricsRow};
use crate::algos::{AgentLayout, AgentLearner, OuNoise, ReplayBuffer, StepOutcome};
use crate::env::{GlobalTransition, JointAction, ParticleEnv};
use crate::net::{
    assemble_transition, staleness_gradient_error, AoiSnapshot, AoiTracker, LocalTuple, Network,
    PolicyCache,
};
use crate::nn::MlpParams;
use crate::{Error, Result};

pub const METRICS_FILE: &str = "metrics.csv";
pub const AOI_FILE: &str = "aoi.csv";
pub const TIMING_FILE: &str = "timing.csv";
pub const CONFIG_FILE: &str = "config.toml";
pub const PARAMS_FILE: &str = "final_params.json";

/// Independent random streams of one seed.
///
/// All come from the same ChaCha8 key with different stream ids, so adding
/// agents or switching modes does not shift the draws of the other streams.
pub struct SeedStreams {
    /// Per-epoch environment reset seeds.
    pub env: ChaCha8Rng,
    /// Network initialization, agent by agent.
    pub init: ChaCha8Rng,
    pub network: ChaCha8Rng,
    pub diagnostics: ChaCha8Rng,
    pub noise: Vec<ChaCha8Rng>,
    pub train: Vec<ChaCha8Rng>,
}

pub fn seed_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

impl SeedStreams {
    pub fn new(seed: u64, num_agents: usize) -> Self {
        Self {
            env: seed_stream(seed, 0),
            init: seed_stream(seed, 1),
            network: seed_stream(seed, 2),
            diagnostics: seed_stream(seed, 3),
            noise: (0..num_agents)
                .map(|i| seed_stream(seed, 16 + i as u64))
                .collect(),
            train: (0..num_agents)
                .map(|i| seed_stream(seed, 1024 + i as u64))
                .collect(),
        }
    }
}

/// Everything one seed produced, including a failure that cut it short.
#[derive(Debug)]
pub struct SeedOutcome {
    pub seed: u64,
    pub rows: Vec<MetricsRow>,
    pub aoi: Vec<AoiSnapshot>,
    pub timing: Vec<(u64, usize, u64)>,
    pub learners: Vec<AgentLearner>,
    /// Epochs whose replay-age bookkeeping was audited against a full scan.
    pub audited_epochs: usize,
    pub failure: Option<Error>,
}

#[derive(Debug)]
pub struct RunReport {
    pub dir: PathBuf,
    pub outcomes: Vec<SeedOutcome>,
}

#[derive(Serialize)]
struct AgentParams<'a> {
    actor: &'a MlpParams,
    critic: &'a MlpParams,
    actor_target: &'a MlpParams,
    critic_target: &'a MlpParams,
}

#[derive(Serialize)]
struct SeedParams<'a> {
    seed: u64,
    agents: Vec<AgentParams<'a>>,
}

/// Run every seed of `config` and write the run directory.
///
/// Seeds run in parallel; files list them in config order. On failure the
/// partial outputs are still written and the first seed's error is returned.
pub fn run(config: &RunConfig, out_dir: &Path) -> Result<RunReport> {
    config.validate()?;
    std::fs::create_dir_all(out_dir)?;
    std::fs::write(out_dir.join(CONFIG_FILE), config.to_toml_string()?)?;

    let mut outcomes: Vec<SeedOutcome> = config
        .seeds
        .par_iter()
        .map(|&seed| run_seed(config, seed))
        .collect();

    let d = config.env.num_agents;
    let rows: Vec<MetricsRow> = outcomes
        .iter()
        .flat_map(|o| o.rows.iter().cloned())
        .collect();
    write_metrics(&out_dir.join(METRICS_FILE), d, &rows)?;
    write_aoi(
        &out_dir.join(AOI_FILE),
        d,
        outcomes.iter().map(|o| (o.seed, o.aoi.as_slice())),
    )?;
    let timing: Vec<_> = outcomes
        .iter()
        .flat_map(|o| o.timing.iter().copied())
        .collect();
    write_timing(&out_dir.join(TIMING_FILE), &timing)?;
    let params: Vec<SeedParams> = outcomes
        .iter()
        .map(|o| SeedParams {
            seed: o.seed,
            agents: o
                .learners
                .iter()
                .map(|l| AgentParams {
                    actor: &l.actor,
                    critic: &l.critic,
                    actor_target: &l.actor_target,
                    critic_target: &l.critic_target,
                })
                .collect(),
        })
        .collect();
    std::fs::write(out_dir.join(PARAMS_FILE), serde_json::to_string(&params)?)?;

    if let Some(k) = outcomes.iter().position(|o| o.failure.is_some()) {
        return Err(outcomes[k].failure.take().expect("checked"));
    }
    Ok(RunReport {
        dir: out_dir.to_path_buf(),
        outcomes,
    })
}

/// Where peer information comes from during a seed.
enum Exchange {
    Central(Vec<PolicyCache>),
    Networked(Box<Network>),
}

impl Exchange {
    fn caches(&self) -> &[PolicyCache] {
        match self {
            Exchange::Central(c) => c,
            Exchange::Networked(net) => net.caches(),
        }
    }
}

struct EpochStats {
    reward_sums: Vec<f64>,
    tau_sum: u64,
    tau_count: u64,
    tau_max: Option<u64>,
    td_sum: f64,
    td_count: u64,
}

impl EpochStats {
    fn new(d: usize) -> Self {
        Self {
            reward_sums: vec![0.0; d],
            tau_sum: 0,
            tau_count: 0,
            tau_max: None,
            td_sum: 0.0,
            td_count: 0,
        }
    }
}

/// Run one seed sequentially. Never panics on numerical trouble; a failure
/// is returned inside the outcome together with everything recorded so far.
pub fn run_seed(config: &RunConfig, seed: u64) -> SeedOutcome {
    let mut out = SeedOutcome {
        seed,
        rows: Vec::new(),
        aoi: Vec::new(),
        timing: Vec::new(),
        learners: Vec::new(),
        audited_epochs: 0,
        failure: None,
    };
    if let Err(e) = seed_loop(config, seed, &mut out) {
        out.failure = Some(e);
    }
    out
}

fn seed_loop(config: &RunConfig, seed: u64, out: &mut SeedOutcome) -> Result<()> {
    let env = ParticleEnv::new(config.env.clone())?;
    let d = env.num_agents();
    let h = &config.hyper;
    let train = h.train_config();
    let mut streams = SeedStreams::new(seed, d);
    let layout = AgentLayout {
        num_agents: d,
        obs_dim: env.obs_dim(),
        bounds: env.action_bounds().clone(),
    };
    for i in 0..d {
        let mut l = AgentLearner::new(
            i,
            config.algo,
            layout.clone(),
            &h.actor_hidden,
            &h.critic_hidden,
            &mut streams.init,
        )?;
        if h.zero_actor {
            let zeros = vec![0.0; l.actor.len()];
            l.actor.set_values(&zeros)?;
            l.actor_target.set_values(&zeros)?;
        }
        out.learners.push(l);
    }
    let mut replays = (0..d)
        .map(|_| ReplayBuffer::new(h.replay_capacity))
        .collect::<Result<Vec<_>>>()?;
    let mut exchange = match (config.mode, &config.network) {
        (Mode::Centralized, _) => Exchange::Central(vec![PolicyCache::new(); d]),
        (Mode::Networked, Some(net)) => {
            let actors: Vec<MlpParams> = out.learners.iter().map(|l| l.actor.clone()).collect();
            Exchange::Networked(Box::new(Network::new(
                net.clone(),
                env.obs_dim(),
                env.action_dim(),
                &actors,
                h.replay_capacity as u64,
            )?))
        }
        (Mode::Networked, None) => {
            return Err(Error::Config(
                "networked mode needs a [network] block".into(),
            ))
        }
    };
    if let Exchange::Central(caches) = &mut exchange {
        sync_caches(caches, &out.learners, 0)?;
    }
    let mut tracker = AoiTracker::new(d);
    let mut noises: Vec<OuNoise> = (0..d)
        .map(|_| OuNoise::from_config(env.action_dim(), &h.ou))
        .collect();
    let horizon = env.config().horizon;
    let mut n: u64 = 0;

    for epoch in 0..config.epochs {
        let started = Instant::now();
        let mut stats = EpochStats::new(d);
        let sigma = h.ou.sigma * h.ou.sigma_decay.powi(epoch as i32);
        for noise in &mut noises {
            noise.reset();
            noise.sigma = sigma;
        }
        let mut state = env.reset(streams.env.random());
        for _ in 0..horizon {
            let obs = (0..d)
                .map(|i| env.observe(&state, i))
                .collect::<Result<Vec<_>>>()?;
            let mut actions = Vec::with_capacity(d);
            for i in 0..d {
                actions.push(out.learners[i].act(
                    &obs[i],
                    &mut noises[i],
                    &mut streams.noise[i],
                )?);
            }
            let joint = JointAction(actions);
            let (next, rewards) = env.step(&state, &joint)?;
            for (sum, r) in stats.reward_sums.iter_mut().zip(&rewards) {
                *sum += r;
            }

            match &mut exchange {
                Exchange::Central(caches) => {
                    let t = GlobalTransition {
                        state: env.encode(&state),
                        actions: joint,
                        rewards,
                        next_state: env.encode(&next),
                        origin_step: n,
                        raw: Some(Box::new((state.clone(), next.clone()))),
                    };
                    for buf in replays.iter_mut() {
                        buf.push(t.clone());
                    }
                    sync_caches(caches, &out.learners, n)?;
                }
                Exchange::Networked(net) => {
                    for (i, o) in obs.into_iter().enumerate() {
                        let tuple = LocalTuple {
                            agent: i,
                            origin_step: n,
                            obs: o,
                            action: joint.0[i].clone(),
                            next_obs: env.observe(&next, i)?,
                        };
                        if let Some(c) = net.publish(tuple) {
                            replays[c.agent].push(assemble_transition(&env, &c.tuples)?);
                        }
                    }
                    let actors: Vec<&MlpParams> = out.learners.iter().map(|l| &l.actor).collect();
                    for c in net.step(n, &actors, &mut streams.network)? {
                        replays[c.agent].push(assemble_transition(&env, &c.tuples)?);
                    }
                }
            }

            let buffers: Vec<&ReplayBuffer> = replays.iter().collect();
            let snap = tracker.record(n, exchange.caches(), &buffers);
            for tau in snap.taus() {
                stats.tau_sum += tau;
                stats.tau_count += 1;
                stats.tau_max = Some(stats.tau_max.map_or(tau, |m| m.max(tau)));
            }

            if h.learn {
                for i in 0..d {
                    let outcome = out.learners[i].train_step(
                        &replays[i],
                        &exchange.caches()[i],
                        n,
                        &train,
                        &mut streams.train[i],
                    )?;
                    if let StepOutcome::Updated { mean_sq_td } = outcome {
                        stats.td_sum += mean_sq_td;
                        stats.td_count += 1;
                    }
                    check_norms(&out.learners[i], n, h.param_ceiling)?;
                }
            }
            state = next;
            n += 1;
        }

        audit_replay_ages(
            config.mode,
            &replays,
            tracker.rows().last(),
            h.replay_capacity,
        )?;
        out.audited_epochs += 1;

        let (grad_err_critic, grad_err_actor) = match h.diagnostics {
            Diagnostics::Off => (None, None),
            Diagnostics::Shadow => {
                match shadow_gradient_error(
                    &out.learners,
                    &replays,
                    exchange.caches(),
                    n,
                    h.diagnostic_samples,
                    h.gamma,
                    &mut streams.diagnostics,
                )? {
                    Some((c, a)) => (Some(c), Some(a)),
                    None => (None, None),
                }
            }
        };

        let steps = horizon as f64;
        let agent_rewards: Vec<f64> = stats.reward_sums.iter().map(|s| s / steps).collect();
        out.rows.push(MetricsRow {
            seed,
            epoch,
            mean_reward: agent_rewards.iter().sum::<f64>() / d as f64,
            agent_rewards,
            aoi_max: stats.tau_max,
            aoi_mean: (stats.tau_count > 0).then(|| stats.tau_sum as f64 / stats.tau_count as f64),
            delta: replays
                .iter()
                .map(|b| b.age_of_oldest(n.saturating_sub(1)))
                .collect(),
            grad_err_critic,
            grad_err_actor,
            actor_norms: out.learners.iter().map(|l| l.actor.norm()).collect(),
            critic_norms: out.learners.iter().map(|l| l.critic.norm()).collect(),
            mean_sq_td: (stats.td_count > 0).then(|| stats.td_sum / stats.td_count as f64),
        });
        out.timing
            .push((seed, epoch, started.elapsed().as_millis() as u64));
    }
    out.aoi = tracker.rows().to_vec();
    Ok(())
}

/// Give every agent the current actors of its peers, taken at step `n`.
fn sync_caches(caches: &mut [PolicyCache], learners: &[AgentLearner], n: u64) -> Result<()> {
    for (i, cache) in caches.iter_mut().enumerate() {
        for (j, peer) in learners.iter().enumerate() {
            if i != j {
                cache.sync(j, &peer.actor, n)?;
            }
        }
    }
    Ok(())
}

fn check_norms(learner: &AgentLearner, n: u64, ceiling: f64) -> Result<()> {
    for (what, params) in [("actor", &learner.actor), ("critic", &learner.critic)] {
        let norm = params.norm();
        if !(norm <= ceiling) {
            return Err(Error::StabilityViolation {
                step: n,
                what: format!("agent {} {what}", learner.id),
                norm,
                ceiling,
            });
        }
    }
    Ok(())
}

/// The tracked replay age must equal a full scan; centralized memories are
/// filled one transition per slot, so their age never exceeds the capacity.
fn audit_replay_ages(
    mode: Mode,
    replays: &[ReplayBuffer],
    last: Option<&AoiSnapshot>,
    capacity: usize,
) -> Result<()> {
    let Some(snap) = last else {
        return Ok(());
    };
    for (i, buf) in replays.iter().enumerate() {
        let scanned = buf
            .iter()
            .map(|t| t.origin_step)
            .min()
            .map(|o| snap.slot - o);
        if snap.delta[i] != scanned {
            return Err(Error::Contract(format!(
                "replay age of agent {i} at slot {} is {:?}, scan gives {scanned:?}",
                snap.slot, snap.delta[i]
            )));
        }
        if mode == Mode::Centralized && scanned.is_some_and(|a| a as usize > capacity) {
            return Err(Error::Contract(format!(
                "centralized replay age {scanned:?} exceeds capacity {capacity}"
            )));
        }
    }
    Ok(())
}

/// Mean staleness gradient error norms over sampled transitions and agents,
/// with the true current peer actors as the fresh reference.
fn shadow_gradient_error<R: Rng + ?Sized>(
    learners: &[AgentLearner],
    replays: &[ReplayBuffer],
    caches: &[PolicyCache],
    n: u64,
    samples: usize,
    gamma: f64,
    rng: &mut R,
) -> Result<Option<(f64, f64)>> {
    let mut fresh = vec![PolicyCache::new(); learners.len()];
    sync_caches(&mut fresh, learners, n)?;
    let (mut critic, mut actor, mut count) = (0.0, 0.0, 0usize);
    for (i, learner) in learners.iter().enumerate() {
        if replays[i].is_empty() {
            continue;
        }
        for idx in replays[i].sample_indices(samples, rng) {
            let t = replays[i].get(idx).expect("sampled index in range");
            let e = staleness_gradient_error(learner, Some(&fresh[i]), &caches[i], t, gamma)?;
            critic += e.critic;
            actor += e.actor;
            count += 1;
        }
    }
    Ok((count > 0).then(|| (critic / count as f64, actor / count as f64)))
}
