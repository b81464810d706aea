//! Classical comparators: a systematic Hamming(7,4) codec, the
//! action-to-codeword association tables (hand-crafted and random), and the
//! shortest-path oracle policy for the grid world.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::envs::ACTIONS;
use crate::error::{Error, Result};

/// Parity submatrix P of the normative generator G = [I4 | P].
const PARITY: [[u8; 3]; 4] = [[1, 1, 0], [1, 0, 1], [0, 1, 1], [1, 1, 1]];

/// Systematic Hamming(7,4) code with generator `G = [I4 | P]` and parity
/// check `H = [P^T | I3]`.
#[derive(Debug, Clone)]
pub struct Hamming74 {
    /// Syndrome value (s1 s2 s3 read as a 3-bit number, s1 most significant)
    /// -> flipped position + 1, with 0 meaning no error.
    syndrome_to_position: [u8; 8],
}

impl Default for Hamming74 {
    fn default() -> Self {
        Self::new()
    }
}

impl Hamming74 {
    pub fn new() -> Self {
        let mut table = [0u8; 8];
        for pos in 0..7 {
            let mut syndrome = 0usize;
            for row in 0..3 {
                let bit = Self::check_row(row)[pos];
                syndrome = (syndrome << 1) | bit as usize;
            }
            table[syndrome] = pos as u8 + 1;
        }
        Hamming74 {
            syndrome_to_position: table,
        }
    }

    /// Row `r` of H = [P^T | I3].
    fn check_row(r: usize) -> [u8; 7] {
        let mut row = [0u8; 7];
        for c in 0..4 {
            row[c] = PARITY[c][r];
        }
        row[4 + r] = 1;
        row
    }

    /// Generator matrix rows, for audit output.
    pub fn generator_rows() -> [[u8; 7]; 4] {
        let mut rows = [[0u8; 7]; 4];
        for (r, row) in rows.iter_mut().enumerate() {
            row[r] = 1;
            row[4..].copy_from_slice(&PARITY[r]);
        }
        rows
    }

    /// Parity-check matrix rows, for audit output.
    pub fn check_rows() -> [[u8; 7]; 3] {
        [Self::check_row(0), Self::check_row(1), Self::check_row(2)]
    }

    /// Systematic encoding `[d1..d4 | p1 p2 p3]`.
    pub fn encode(&self, message: &[u8]) -> Result<Vec<u8>> {
        if message.len() != 4 {
            return Err(Error::Argument(format!(
                "Hamming(7,4) encodes 4 bits, got {}",
                message.len()
            )));
        }
        let mut code = Vec::with_capacity(7);
        code.extend_from_slice(message);
        for p in 0..3 {
            let parity = (0..4).fold(0u8, |acc, d| acc ^ (message[d] & PARITY[d][p]));
            code.push(parity);
        }
        Ok(code)
    }

    /// Syndrome decoding: correct at most one flipped position, return the
    /// data bits.
    pub fn decode(&self, received: &[u8]) -> Result<Vec<u8>> {
        if received.len() != 7 {
            return Err(Error::Argument(format!(
                "Hamming(7,4) decodes 7 bits, got {}",
                received.len()
            )));
        }
        let mut syndrome = 0usize;
        for r in 0..3 {
            let row = Self::check_row(r);
            let bit = received
                .iter()
                .zip(row.iter())
                .fold(0u8, |acc, (&x, &h)| acc ^ (x & h));
            syndrome = (syndrome << 1) | bit as usize;
        }
        let mut corrected = received.to_vec();
        let pos = self.syndrome_to_position[syndrome];
        if pos != 0 {
            corrected[pos as usize - 1] ^= 1;
        }
        corrected.truncate(4);
        Ok(corrected)
    }
}

/// How a codebook was constructed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CodebookKind {
    /// Hand-crafted: Hamming-adjacent messages map to geometrically similar
    /// actions.
    HandCrafted,
    /// Random bijection from a seed.
    Random(u64),
}

/// Bijection between the 16 actions (in [`ACTIONS`] order) and the 16
/// four-bit messages.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionCodebook {
    pub kind: CodebookKind,
    /// Message value for each action index.
    action_to_message: [u8; 16],
    /// Action index for each message value.
    message_to_action: [u8; 16],
}

fn displacement_distance(a: usize, b: usize) -> f64 {
    let (ax, ay) = ACTIONS[a];
    let (bx, by) = ACTIONS[b];
    let dx = (ax - bx) as f64;
    let dy = (ay - by) as f64;
    libm::sqrt(dx * dx + dy * dy)
}

impl ActionCodebook {
    fn from_assignment(kind: CodebookKind, action_to_message: [u8; 16]) -> Self {
        let mut message_to_action = [0u8; 16];
        for (action, &msg) in action_to_message.iter().enumerate() {
            message_to_action[msg as usize] = action as u8;
        }
        ActionCodebook {
            kind,
            action_to_message,
            message_to_action,
        }
    }

    /// Deterministic hand-crafted assignment: iterate actions in [`ACTIONS`]
    /// order and give each the unused message minimizing the summed
    /// displacement distance to the actions already holding a
    /// Hamming-distance-1 message.
    pub fn hand_crafted() -> Self {
        let mut assignment = [u8::MAX; 16];
        for action in 0..16usize {
            let mut best: Option<(f64, u8)> = None;
            for msg in 0..16u8 {
                if assignment.contains(&msg) {
                    continue;
                }
                let mut cost = 0.0;
                for bit in 0..4 {
                    let neighbor = msg ^ (1 << bit);
                    if let Some(holder) = assignment.iter().position(|&m| m == neighbor) {
                        cost += displacement_distance(action, holder);
                    }
                }
                // Ties break toward the lowest message value.
                if best.map_or(true, |(c, _)| cost < c) {
                    best = Some((cost, msg));
                }
            }
            assignment[action] = best.expect("message pool exhausted").1;
        }
        Self::from_assignment(CodebookKind::HandCrafted, assignment)
    }

    /// Uniform random bijection.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, seed_label: u64) -> Self {
        let mut msgs: Vec<u8> = (0..16).collect();
        msgs.shuffle(rng);
        let mut assignment = [0u8; 16];
        assignment.copy_from_slice(&msgs);
        Self::from_assignment(CodebookKind::Random(seed_label), assignment)
    }

    /// Four-bit message (most significant bit first) for an action index.
    pub fn encode_action(&self, action: usize) -> Result<Vec<u8>> {
        if action >= 16 {
            return Err(Error::Argument(format!("action index {action} out of range")));
        }
        let msg = self.action_to_message[action];
        Ok((0..4).map(|k| (msg >> (3 - k)) & 1).collect())
    }

    /// Action index for a received four-bit message.
    pub fn decode_message(&self, bits: &[u8]) -> Result<usize> {
        if bits.len() != 4 {
            return Err(Error::Argument(format!("message must be 4 bits, got {}", bits.len())));
        }
        let msg = bits.iter().fold(0u8, |acc, &b| (acc << 1) | (b & 1));
        Ok(self.message_to_action[msg as usize] as usize)
    }

    pub fn message_value(&self, action: usize) -> u8 {
        self.action_to_message[action]
    }

    /// Mean displacement distance between actions whose messages are at
    /// Hamming distance 1 - the quantity the hand-crafted construction
    /// minimizes.
    pub fn mean_adjacent_action_distance(&self) -> f64 {
        let mut total = 0.0;
        let mut count = 0u32;
        for msg in 0..16u8 {
            for bit in 0..4 {
                let other = msg ^ (1 << bit);
                if other > msg {
                    let a = self.message_to_action[msg as usize] as usize;
                    let b = self.message_to_action[other as usize] as usize;
                    total += displacement_distance(a, b);
                    count += 1;
                }
            }
        }
        total / count as f64
    }
}

/// Precomputed shortest-path distances and greedy actions for the
/// deterministic (delta = 0) grid world.
#[derive(Debug, Clone)]
pub struct ShortestPathOracle {
    l: usize,
    /// dist[from][to] in moves.
    dist: Vec<Vec<u32>>,
}

impl ShortestPathOracle {
    /// Breadth-first search from every cell under delta = 0 dynamics with
    /// the stay-on-exit boundary rule.
    pub fn new(l: usize) -> Result<Self> {
        if l < 2 {
            return Err(Error::Config(format!("grid side {l} must be >= 2")));
        }
        let n = l * l;
        let li = l as i32;
        let mut dist = vec![vec![u32::MAX; n]; n];
        let mut queue = Vec::with_capacity(n);
        for start in 0..n {
            let d = &mut dist[start];
            d[start] = 0;
            queue.clear();
            queue.push(start);
            let mut head = 0;
            while head < queue.len() {
                let cur = queue[head];
                head += 1;
                let (x, y) = ((cur / l) as i32, (cur % l) as i32);
                for (ax, ay) in ACTIONS {
                    let (nx, ny) = (x + ax, y + ay);
                    if !(0..li).contains(&nx) || !(0..li).contains(&ny) {
                        continue; // would stay in place
                    }
                    let nxt = (nx * li + ny) as usize;
                    if d[nxt] == u32::MAX {
                        d[nxt] = d[cur] + 1;
                        queue.push(nxt);
                    }
                }
            }
        }
        Ok(ShortestPathOracle { l, dist })
    }

    pub fn side(&self) -> usize {
        self.l
    }

    fn index(&self, cell: (i32, i32)) -> Result<usize> {
        let li = self.l as i32;
        if !(0..li).contains(&cell.0) || !(0..li).contains(&cell.1) {
            return Err(Error::Argument(format!("cell {cell:?} outside {li}x{li} grid")));
        }
        Ok((cell.0 * li + cell.1) as usize)
    }

    /// Minimum number of moves from `p_s` to `p_g`.
    pub fn distance(&self, p_s: (i32, i32), p_g: (i32, i32)) -> Result<u32> {
        Ok(self.dist[self.index(p_s)?][self.index(p_g)?])
    }

    /// Lowest-index action that strictly decreases the distance to `p_g`.
    pub fn action(&self, p_s: (i32, i32), p_g: (i32, i32)) -> Result<usize> {
        if p_s == p_g {
            return Err(Error::Argument("no action: already at the goal".into()));
        }
        let here = self.distance(p_s, p_g)?;
        let li = self.l as i32;
        for (idx, (ax, ay)) in ACTIONS.iter().enumerate() {
            let (nx, ny) = (p_s.0 + ax, p_s.1 + ay);
            if !(0..li).contains(&nx) || !(0..li).contains(&ny) {
                continue;
            }
            if self.dist[(nx * li + ny) as usize][self.index(p_g)?] < here {
                return Ok(idx);
            }
        }
        Err(Error::Numeric("no distance-decreasing action found".into()))
    }

    /// Exact mean of [`ShortestPathOracle::distance`] over all ordered
    /// distinct cell pairs.
    pub fn mean_steps(&self) -> f64 {
        let n = self.l * self.l;
        let mut total = 0u64;
        for from in 0..n {
            for to in 0..n {
                if from != to {
                    total += self.dist[from][to] as u64;
                }
            }
        }
        total as f64 / (n * (n - 1)) as f64
    }
}

/// Convenience wrapper: exact oracle mean steps for an `l x l` grid.
pub fn oracle_mean_steps(l: usize) -> Result<f64> {
    Ok(ShortestPathOracle::new(l)?.mean_steps())
}
