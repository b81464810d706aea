//! The learners: DQN with target networks and epsilon-greedy exploration,
//! DDPG with Ornstein-Uhlenbeck noise and the transmit-power constraint
//! folded into the actor, the Gaussian REINFORCE / actor-critic transmitter,
//! the cross-entropy-trained receiver, and the shared replay buffer.

use alloc::collections::VecDeque;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::channels::{power_normalize, power_normalize_backward};
use crate::error::{Error, Result};
use crate::nn::{adam_step, softmax_cross_entropy, AdamState, NetworkParams};

/// Replay buffer capacity used by every experiment.
pub const REPLAY_CAPACITY: usize = 100_000;

/// Either a discrete action index or a continuous channel-input vector.
#[derive(Debug, Clone, PartialEq)]
pub enum Action {
    Discrete(usize),
    Continuous(Vec<f64>),
}

impl Action {
    pub fn discrete(&self) -> Result<usize> {
        match self {
            Action::Discrete(a) => Ok(*a),
            Action::Continuous(_) => Err(Error::Shape("expected a discrete action".into())),
        }
    }

    pub fn continuous(&self) -> Result<&[f64]> {
        match self {
            Action::Continuous(a) => Ok(a),
            Action::Discrete(_) => Err(Error::Shape("expected a continuous action".into())),
        }
    }
}

/// One stored experience.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub obs: Vec<f64>,
    pub action: Action,
    pub reward: f64,
    /// Absent for terminal and one-step transitions.
    pub next_obs: Option<Vec<f64>>,
    pub done: bool,
}

/// Fixed-capacity FIFO experience store with uniform batch sampling.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    buf: VecDeque<Transition>,
    capacity: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        ReplayBuffer {
            buf: VecDeque::with_capacity(capacity.min(1 << 20)),
            capacity,
        }
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    /// Oldest experience is evicted first.
    pub fn push(&mut self, transition: Transition) {
        if self.buf.len() == self.capacity {
            self.buf.pop_front();
        }
        self.buf.push_back(transition);
    }

    pub fn get(&self, idx: usize) -> Option<&Transition> {
        self.buf.get(idx)
    }

    /// Uniform sample without replacement within the batch.
    pub fn sample<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R) -> Result<Vec<&Transition>> {
        if batch == 0 || batch > self.buf.len() {
            return Err(Error::Argument(format!(
                "cannot sample batch of {batch} from buffer of {}",
                self.buf.len()
            )));
        }
        let picks = rand::seq::index::sample(rng, self.buf.len(), batch);
        Ok(picks.iter().map(|i| &self.buf[i]).collect())
    }
}

/// Exponential epsilon decay by episode.
pub fn epsilon_schedule(episode: u64, eps0: f64, eps_end: f64, lambda: f64) -> f64 {
    eps_end + (eps0 - eps_end) * libm::exp(-(episode as f64) / lambda)
}

/// Argmax with ties broken toward the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Epsilon-greedy action over the Q network's outputs.
pub fn select_discrete_action<R: Rng + ?Sized>(
    q_net: &NetworkParams,
    obs: &[f64],
    eps: f64,
    rng: &mut R,
) -> Result<usize> {
    let actions = q_net.output_dim();
    if eps > 0.0 && rng.random_bool(eps.min(1.0)) {
        return Ok(rng.random_range(0..actions));
    }
    Ok(argmax(&q_net.forward_value(obs)?))
}

/// Polyak averaging `target <- tau * online + (1 - tau) * target`, written in
/// difference form so `target == online` is an exact fixed point.
pub fn soft_update(online: &NetworkParams, target: &mut NetworkParams, tau: f64) {
    for (t, o) in target.layers.iter_mut().zip(&online.layers) {
        for (tw, ow) in t.weights.iter_mut().zip(&o.weights) {
            *tw += tau * (ow - *tw);
        }
        for (tb, ob) in t.bias.iter_mut().zip(&o.bias) {
            *tb += tau * (ob - *tb);
        }
    }
}

/// Value-based learner with a slowly tracking target network.
#[derive(Debug, Clone)]
pub struct DqnAgent {
    pub online: NetworkParams,
    pub target: NetworkParams,
    pub adam: AdamState,
    pub action_count: usize,
}

impl DqnAgent {
    pub fn new<R: Rng + ?Sized>(
        obs_dim: usize,
        hidden: usize,
        action_count: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let online = NetworkParams::init(&[obs_dim, hidden, hidden, action_count], rng)?;
        let target = online.clone();
        let adam = AdamState::new(&online);
        Ok(DqnAgent {
            online,
            target,
            adam,
            action_count,
        })
    }

    pub fn act<R: Rng + ?Sized>(&self, obs: &[f64], eps: f64, rng: &mut R) -> Result<usize> {
        select_discrete_action(&self.online, obs, eps, rng)
    }

    pub fn greedy_action(&self, obs: &[f64]) -> Result<usize> {
        Ok(argmax(&self.online.forward_value(obs)?))
    }

    /// One batch step of the squared temporal-difference loss
    /// `0.5 (r + gamma max_a Q_target(o', a) - Q(o, a))^2`, bootstrapping
    /// only through non-terminal transitions. Returns the mean loss.
    pub fn update(&mut self, batch: &[&Transition], gamma: f64, lr: f64) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::Argument("empty batch".into()));
        }
        let scale = 1.0 / batch.len() as f64;
        let mut grads = self.online.zeros_like();
        let mut total_loss = 0.0;
        for t in batch {
            let a = t.action.discrete()?;
            if a >= self.action_count {
                return Err(Error::Shape(format!("action {a} out of range")));
            }
            let target_value = if t.done {
                t.reward
            } else {
                let next = t
                    .next_obs
                    .as_ref()
                    .ok_or_else(|| Error::Shape("non-terminal transition without next observation".into()))?;
                let next_q = self.target.forward_value(next)?;
                t.reward + gamma * next_q[argmax(&next_q)]
            };
            let (q, trace) = self.online.forward(&t.obs)?;
            let td = q[a] - target_value;
            total_loss += 0.5 * td * td;
            let mut out_grad = vec![0.0; self.action_count];
            out_grad[a] = td;
            self.online.backward_accumulate(&trace, &out_grad, scale, &mut grads)?;
        }
        adam_step(&mut self.online, &mut self.adam, &grads, lr)?;
        Ok(total_loss * scale)
    }

    pub fn soft_update_target(&mut self, tau: f64) {
        soft_update(&self.online, &mut self.target, tau);
    }
}

/// Ornstein-Uhlenbeck exploration noise, mean-reverting to zero with unit
/// time step: `w <- w + theta (0 - w) + sigma N(0, I)`.
#[derive(Debug, Clone)]
pub struct OuState {
    w: Vec<f64>,
    pub theta: f64,
    pub sigma: f64,
}

/// Standard DDPG mean-reversion rate.
pub const OU_THETA: f64 = 0.15;
/// Initial OU noise scale; annealed down over training.
pub const OU_SIGMA_START: f64 = 0.2;
/// Final OU noise scale.
pub const OU_SIGMA_END: f64 = 0.02;

impl OuState {
    pub fn new(dim: usize, theta: f64, sigma: f64) -> Self {
        OuState {
            w: vec![0.0; dim],
            theta,
            sigma,
        }
    }

    pub fn reset(&mut self) {
        self.w.iter_mut().for_each(|x| *x = 0.0);
    }

    /// Advance the process once and return the new noise vector.
    pub fn sample<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Vec<f64> {
        for x in &mut self.w {
            let n: f64 = rng.sample(StandardNormal);
            *x += self.theta * (0.0 - *x) + self.sigma * n;
        }
        self.w.clone()
    }
}

/// Deterministic-actor learner for continuous channel inputs. The power
/// normalization is part of the actor's output map, in both acting and
/// differentiation.
#[derive(Debug, Clone)]
pub struct DdpgAgent {
    pub actor: NetworkParams,
    pub actor_target: NetworkParams,
    pub critic: NetworkParams,
    pub critic_target: NetworkParams,
    pub actor_adam: AdamState,
    pub critic_adam: AdamState,
    pub ou: OuState,
    pub obs_dim: usize,
    pub action_dim: usize,
}

impl DdpgAgent {
    pub fn new<R: Rng + ?Sized>(
        obs_dim: usize,
        hidden: usize,
        action_dim: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let actor = NetworkParams::init(&[obs_dim, hidden, hidden, action_dim], rng)?;
        let critic = NetworkParams::init(&[obs_dim + action_dim, hidden, hidden, 1], rng)?;
        Ok(DdpgAgent {
            actor_target: actor.clone(),
            critic_target: critic.clone(),
            actor_adam: AdamState::new(&actor),
            critic_adam: AdamState::new(&critic),
            actor,
            critic,
            ou: OuState::new(action_dim, OU_THETA, OU_SIGMA_START),
            obs_dim,
            action_dim,
        })
    }

    /// Power-normalized actor output, with OU exploration noise added
    /// before normalization when exploring.
    pub fn act<R: Rng + ?Sized>(
        &mut self,
        obs: &[f64],
        explore: bool,
        rng: &mut R,
    ) -> Result<Vec<f64>> {
        let mut raw = self.actor.forward_value(obs)?;
        if explore {
            let noise = self.ou.sample(rng);
            for (r, n) in raw.iter_mut().zip(&noise) {
                *r += n;
            }
        }
        power_normalize(&raw)
    }

    /// Deterministic (evaluation) action.
    pub fn act_mean(&self, obs: &[f64]) -> Result<Vec<f64>> {
        power_normalize(&self.actor.forward_value(obs)?)
    }

    fn critic_input(&self, obs: &[f64], action: &[f64]) -> Vec<f64> {
        let mut input = Vec::with_capacity(obs.len() + action.len());
        input.extend_from_slice(obs);
        input.extend_from_slice(action);
        input
    }

    /// Critic value at a normalized action.
    pub fn q_value(&self, obs: &[f64], action: &[f64]) -> Result<f64> {
        Ok(self.critic.forward_value(&self.critic_input(obs, action))?[0])
    }

    /// One batch step of both DDPG losses. The critic regresses
    /// `Q(o, a)` toward `r + gamma Q_target(o', mu_target(o'))`, or toward
    /// `r` alone for the one-step game; the policy loss is
    /// `-Q(o, normalize(mu(o)))` with the gradient flowing through the
    /// action input and the normalization Jacobian into the actor. Both
    /// gradients are computed before either network moves.
    pub fn update(
        &mut self,
        batch: &[&Transition],
        gamma: f64,
        lr: f64,
        one_step: bool,
    ) -> Result<(f64, f64)> {
        if batch.is_empty() {
            return Err(Error::Argument("empty batch".into()));
        }
        let scale = 1.0 / batch.len() as f64;

        let mut critic_grads = self.critic.zeros_like();
        let mut critic_loss = 0.0;
        for t in batch {
            let a = t.action.continuous()?;
            let target_value = if one_step || t.done {
                t.reward
            } else {
                let next = t
                    .next_obs
                    .as_ref()
                    .ok_or_else(|| Error::Shape("non-terminal transition without next observation".into()))?;
                let next_action = power_normalize(&self.actor_target.forward_value(next)?)?;
                let next_q =
                    self.critic_target.forward_value(&self.critic_input(next, &next_action))?[0];
                t.reward + gamma * next_q
            };
            let input = self.critic_input(&t.obs, a);
            let (q, trace) = self.critic.forward(&input)?;
            let diff = q[0] - target_value;
            critic_loss += diff * diff;
            self.critic
                .backward_accumulate(&trace, &[2.0 * diff], scale, &mut critic_grads)?;
        }

        let mut actor_grads = self.actor.zeros_like();
        let mut policy_loss = 0.0;
        for t in batch {
            let (raw, actor_trace) = self.actor.forward(&t.obs)?;
            let action = power_normalize(&raw)?;
            let input = self.critic_input(&t.obs, &action);
            let (q, critic_trace) = self.critic.forward(&input)?;
            policy_loss += -q[0];
            // d(-Q)/d(action) through the critic input, then the
            // normalization Jacobian, then the actor.
            let input_grad = self.critic.backward_input_only(&critic_trace, &[-1.0])?;
            let action_grad = &input_grad[self.obs_dim..];
            let raw_grad = power_normalize_backward(&raw, action_grad)?;
            self.actor
                .backward_accumulate(&actor_trace, &raw_grad, scale, &mut actor_grads)?;
        }

        adam_step(&mut self.critic, &mut self.critic_adam, &critic_grads, lr)?;
        adam_step(&mut self.actor, &mut self.actor_adam, &actor_grads, lr)?;
        Ok((critic_loss * scale, policy_loss * scale))
    }

    pub fn soft_update_targets(&mut self, tau: f64) {
        soft_update(&self.actor, &mut self.actor_target, tau);
        soft_update(&self.critic, &mut self.critic_target, tau);
    }
}

/// Fixed exploration std of the Gaussian transmitter policy.
pub const POLICY_SIGMA: f64 = 0.15;

/// Stochastic transmitter: Gaussian with mean `normalize(net(obs))` and
/// fixed per-coordinate std `sigma_p`, trained by the score-function
/// (REINFORCE) gradient, optionally with a per-message reward baseline.
#[derive(Debug, Clone)]
pub struct GaussianPolicy {
    pub net: NetworkParams,
    pub adam: AdamState,
    pub sigma_p: f64,
}

impl GaussianPolicy {
    pub fn new<R: Rng + ?Sized>(
        obs_dim: usize,
        hidden: usize,
        action_dim: usize,
        sigma_p: f64,
        rng: &mut R,
    ) -> Result<Self> {
        if !(sigma_p > 0.0) {
            return Err(Error::Config(format!("sigma_p {sigma_p} must be > 0")));
        }
        let net = NetworkParams::init(&[obs_dim, hidden, hidden, action_dim], rng)?;
        Ok(GaussianPolicy {
            adam: AdamState::new(&net),
            net,
            sigma_p,
        })
    }

    /// The policy mean: power-normalized network output.
    pub fn mean(&self, obs: &[f64]) -> Result<Vec<f64>> {
        power_normalize(&self.net.forward_value(obs)?)
    }

    /// Sample an action (mean plus white Gaussian exploration noise), or
    /// return the mean when not exploring.
    pub fn act<R: Rng + ?Sized>(&self, obs: &[f64], explore: bool, rng: &mut R) -> Result<Vec<f64>> {
        let mut a = self.mean(obs)?;
        if explore {
            for x in &mut a {
                let n: f64 = rng.sample(StandardNormal);
                *x += self.sigma_p * n;
            }
        }
        Ok(a)
    }

    /// Log-density of an action under the policy at `obs`.
    pub fn log_density(&self, obs: &[f64], action: &[f64]) -> Result<f64> {
        let mean = self.mean(obs)?;
        if action.len() != mean.len() {
            return Err(Error::Shape("action/mean length mismatch".into()));
        }
        let var = self.sigma_p * self.sigma_p;
        let m = mean.len() as f64;
        let sq: f64 = action
            .iter()
            .zip(&mean)
            .map(|(a, mu)| (a - mu) * (a - mu))
            .sum();
        Ok(-0.5 * sq / var - 0.5 * m * libm::log(2.0 * core::f64::consts::PI * var))
    }

    /// One batch step of the score-function gradient
    /// `grad log pi(a|o) (r - b)`, ascending the surrogate return. Returns
    /// the minimized surrogate loss (its negation).
    pub fn update(
        &mut self,
        batch: &[&Transition],
        baseline: Option<&ValueBaseline>,
        lr: f64,
    ) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::Argument("empty batch".into()));
        }
        let scale = 1.0 / batch.len() as f64;
        let var = self.sigma_p * self.sigma_p;
        let mut grads = self.net.zeros_like();
        let mut surrogate = 0.0;
        for t in batch {
            let action = t.action.continuous()?;
            let advantage = match baseline {
                Some(b) => t.reward - b.value(onehot_index(&t.obs)?),
                None => t.reward,
            };
            let (raw, trace) = self.net.forward(&t.obs)?;
            let mean = power_normalize(&raw)?;
            let sq: f64 = action
                .iter()
                .zip(&mean)
                .map(|(a, mu)| (a - mu) * (a - mu))
                .sum();
            surrogate += -0.5 * sq / var * advantage;
            // d(-J)/d(mean) = -advantage (a - mean) / sigma^2.
            let mean_grad: Vec<f64> = action
                .iter()
                .zip(&mean)
                .map(|(a, mu)| -advantage * (a - mu) / var)
                .collect();
            let raw_grad = power_normalize_backward(&raw, &mean_grad)?;
            self.net.backward_accumulate(&trace, &raw_grad, scale, &mut grads)?;
        }
        adam_step(&mut self.net, &mut self.adam, &grads, lr)?;
        Ok(-surrogate * scale)
    }
}

/// Index of the hot entry of a one-hot observation.
pub fn onehot_index(obs: &[f64]) -> Result<usize> {
    obs.iter()
        .position(|&x| x == 1.0)
        .ok_or_else(|| Error::Shape("observation is not one-hot".into()))
}

/// Per-message weighted moving average of the reward, used as the
/// actor-critic baseline.
#[derive(Debug, Clone)]
pub struct ValueBaseline {
    v: Vec<f64>,
    pub alpha: f64,
}

/// Baseline mixing weight.
pub const BASELINE_ALPHA: f64 = 0.01;

impl ValueBaseline {
    pub fn new(message_count: usize, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::Config(format!("alpha {alpha} outside (0, 1]")));
        }
        Ok(ValueBaseline {
            v: vec![0.0; message_count],
            alpha,
        })
    }

    pub fn value(&self, message: usize) -> f64 {
        self.v[message]
    }

    /// For every message present in the batch, mix the mean of its batch
    /// rewards into the moving average. Absent messages stay unchanged.
    pub fn update(&mut self, samples: &[(usize, f64)]) -> Result<()> {
        let mut sums = vec![0.0f64; self.v.len()];
        let mut counts = vec![0u32; self.v.len()];
        for &(msg, reward) in samples {
            if msg >= self.v.len() {
                return Err(Error::Argument(format!("message index {msg} out of range")));
            }
            sums[msg] += reward;
            counts[msg] += 1;
        }
        for (i, &c) in counts.iter().enumerate() {
            if c > 0 {
                let mean = sums[i] / c as f64;
                self.v[i] = (1.0 - self.alpha) * self.v[i] + self.alpha * mean;
            }
        }
        Ok(())
    }
}

/// Receiver network: channel output in, one logit per message out, trained
/// with softmax cross-entropy against the true message.
#[derive(Debug, Clone)]
pub struct Receiver {
    pub net: NetworkParams,
    pub adam: AdamState,
}

impl Receiver {
    pub fn new<R: Rng + ?Sized>(
        input_dim: usize,
        hidden: usize,
        message_count: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let net = NetworkParams::init(&[input_dim, hidden, hidden, message_count], rng)?;
        Ok(Receiver {
            adam: AdamState::new(&net),
            net,
        })
    }

    /// Greedy decode.
    pub fn classify(&self, channel_output: &[f64]) -> Result<usize> {
        Ok(argmax(&self.net.forward_value(channel_output)?))
    }

    /// Cross-entropy of the true message under the current logits; its
    /// negation is the transmitter's reward.
    pub fn ce_loss(&self, channel_output: &[f64], true_message: usize) -> Result<f64> {
        let logits = self.net.forward_value(channel_output)?;
        Ok(softmax_cross_entropy(&logits, true_message)?.0)
    }

    /// One batch step of the mean cross-entropy loss. Returns the mean CE.
    pub fn update(&mut self, batch: &[(&[f64], usize)], lr: f64) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::Argument("empty batch".into()));
        }
        let scale = 1.0 / batch.len() as f64;
        let mut grads = self.net.zeros_like();
        let mut total = 0.0;
        for &(obs, target) in batch {
            let (logits, trace) = self.net.forward(obs)?;
            let (loss, logit_grad) = softmax_cross_entropy(&logits, target)?;
            total += loss;
            self.net.backward_accumulate(&trace, &logit_grad, scale, &mut grads)?;
        }
        adam_step(&mut self.net, &mut self.adam, &grads, lr)?;
        Ok(total * scale)
    }
}
