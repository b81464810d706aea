//! The two environments: the guided-robot grid world (a scout that moves but
//! cannot see, directed by a guide that sees but cannot move) and the
//! one-step message game used for code design.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};

/// The fixed, ordered set of 16 scout displacements. The order is an indexing
/// contract shared with codebooks and network outputs.
pub const ACTIONS: [(i32, i32); 16] = [
    (1, 0),
    (-1, 0),
    (0, 1),
    (0, -1),
    (1, 1),
    (-1, 1),
    (-1, -1),
    (1, -1),
    (2, 0),
    (-2, 0),
    (0, 2),
    (0, -2),
    (2, 2),
    (-2, 2),
    (-2, -2),
    (2, -2),
];

/// Unit king moves used for the slip perturbation.
pub const SLIP_MOVES: [(i32, i32); 8] = [
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
    (0, -1),
    (-1, -1),
    (1, -1),
];

/// Reward on reaching the treasure.
pub const REWARD_GOAL: f64 = 10.0;
/// Reward for every other step.
pub const REWARD_STEP: f64 = -1.0;

/// Grid world parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridWorldConfig {
    /// Side length of the square grid.
    pub l: usize,
    /// Slip probability: chance a move lands on a random neighbor of the
    /// intended target.
    pub delta: f64,
    /// Episode step cap enforced by the episode runner.
    pub t_max: usize,
}

impl GridWorldConfig {
    pub fn new(l: usize, delta: f64, t_max: usize) -> Result<Self> {
        if l < 2 {
            return Err(Error::Config(format!("grid side {l} must be >= 2")));
        }
        if !(0.0..=1.0).contains(&delta) {
            return Err(Error::Config(format!("slip probability {delta} outside [0, 1]")));
        }
        if t_max < 1 {
            return Err(Error::Config("t_max must be >= 1".into()));
        }
        Ok(GridWorldConfig { l, delta, t_max })
    }

    /// Guide observation length: two stacked one-hot position encodings.
    pub fn observation_dim(&self) -> usize {
        2 * self.l * self.l
    }
}

impl Default for GridWorldConfig {
    fn default() -> Self {
        GridWorldConfig {
            l: 5,
            delta: 0.0,
            t_max: 200,
        }
    }
}

/// Scout and treasure cells, both within the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridState {
    pub scout: (i32, i32),
    pub treasure: (i32, i32),
}

impl GridState {
    pub fn is_terminal(&self) -> bool {
        self.scout == self.treasure
    }
}

/// Uniform scout and treasure placement over distinct cells.
pub fn grid_reset<R: Rng + ?Sized>(config: &GridWorldConfig, rng: &mut R) -> GridState {
    let cells = (config.l * config.l) as i32;
    let scout_idx = rng.random_range(0..cells);
    // Uniform over the remaining cells.
    let mut treasure_idx = rng.random_range(0..cells - 1);
    if treasure_idx >= scout_idx {
        treasure_idx += 1;
    }
    let l = config.l as i32;
    GridState {
        scout: (scout_idx / l, scout_idx % l),
        treasure: (treasure_idx / l, treasure_idx % l),
    }
}

/// Apply one scout action.
///
/// The intended target is `scout + action`; with probability `delta` a
/// uniform king-move perturbation is added first. If the final candidate
/// leaves the grid the scout stays where it was. Reaching the treasure pays
/// [`REWARD_GOAL`] and ends the episode, every other step pays
/// [`REWARD_STEP`]. The step cap lives in the episode runner, not here.
pub fn grid_step<R: Rng + ?Sized>(
    state: &GridState,
    action_index: usize,
    config: &GridWorldConfig,
    rng: &mut R,
) -> Result<(GridState, f64, bool)> {
    if action_index >= ACTIONS.len() {
        return Err(Error::Argument(format!(
            "action index {action_index} out of range 0..{}",
            ACTIONS.len()
        )));
    }
    if state.is_terminal() {
        return Err(Error::Argument("stepping a terminal state".into()));
    }
    let (ax, ay) = ACTIONS[action_index];
    let (mut cx, mut cy) = (state.scout.0 + ax, state.scout.1 + ay);
    if config.delta > 0.0 && rng.random_bool(config.delta) {
        let (zx, zy) = SLIP_MOVES[rng.random_range(0..SLIP_MOVES.len())];
        cx += zx;
        cy += zy;
    }
    let l = config.l as i32;
    let next_scout = if (0..l).contains(&cx) && (0..l).contains(&cy) {
        (cx, cy)
    } else {
        state.scout
    };
    let next = GridState {
        scout: next_scout,
        treasure: state.treasure,
    };
    if next.is_terminal() {
        Ok((next, REWARD_GOAL, true))
    } else {
        Ok((next, REWARD_STEP, false))
    }
}

/// Row-major cell index used by one-hot encodings and codebook files.
pub fn cell_index(cell: (i32, i32), l: usize) -> usize {
    cell.0 as usize * l + cell.1 as usize
}

/// Concatenated one-hot encodings of the scout and treasure positions.
pub fn encode_guide_observation(state: &GridState, l: usize) -> Vec<f64> {
    let n = l * l;
    let mut obs = vec![0.0; 2 * n];
    obs[cell_index(state.scout, l)] = 1.0;
    obs[n + cell_index(state.treasure, l)] = 1.0;
    obs
}

/// One-step message game parameters: B message bits over M channel uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CodingGameConfig {
    /// Message length in bits.
    pub b: u32,
    /// Channel uses per message.
    pub m: usize,
}

impl CodingGameConfig {
    pub fn new(b: u32, m: usize) -> Result<Self> {
        if b < 1 {
            return Err(Error::Config("message bits B must be >= 1".into()));
        }
        if b > 20 {
            return Err(Error::Config(format!("message bits B = {b} is unreasonably large")));
        }
        if m < 1 {
            return Err(Error::Config("channel uses M must be >= 1".into()));
        }
        Ok(CodingGameConfig { b, m })
    }

    pub fn message_count(&self) -> usize {
        1usize << self.b
    }

    /// Uniform message index in `[0, 2^B)`.
    pub fn sample_message<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        rng.random_range(0..self.message_count())
    }

    /// One-hot transmitter observation for a message.
    pub fn message_onehot(&self, index: usize) -> Result<Vec<f64>> {
        if index >= self.message_count() {
            return Err(Error::Argument(format!(
                "message index {index} out of range 0..{}",
                self.message_count()
            )));
        }
        let mut onehot = vec![0.0; self.message_count()];
        onehot[index] = 1.0;
        Ok(onehot)
    }
}

/// Discounted return `sum_t gamma^(t-1) r_t`.
pub fn discounted_return(rewards: &[f64], gamma: f64) -> f64 {
    let mut total = 0.0;
    let mut weight = 1.0;
    for &r in rewards {
        total += weight * r;
        weight *= gamma;
    }
    total
}
