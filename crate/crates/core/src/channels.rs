//! Noisy-channel models, BPSK mapping, the transmit-power constraint, and
//! SNR bookkeeping.
//!
//! Channels never see environment state; they map input symbols to output
//! symbols and nothing else. The bursty channel carries its two-state Markov
//! noise state explicitly and advances it once per transmission.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Binary symmetric channel with crossover probability `p_e`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BscChannel {
    p_e: f64,
}

impl BscChannel {
    /// `p_e` must lie in `[0, 0.5]`.
    pub fn new(p_e: f64) -> Result<Self> {
        if !(0.0..=0.5).contains(&p_e) {
            return Err(Error::Config(format!("BSC crossover {p_e} outside [0, 0.5]")));
        }
        Ok(BscChannel { p_e })
    }

    pub fn p_e(&self) -> f64 {
        self.p_e
    }

    /// Flip each bit independently with probability `p_e`.
    pub fn transmit<R: Rng + ?Sized>(&self, bits: &[u8], rng: &mut R) -> Vec<u8> {
        bits.iter()
            .map(|&b| if rng.random_bool(self.p_e) { b ^ 1 } else { b })
            .collect()
    }
}

/// Additive white Gaussian noise channel with per-use noise std `sigma_n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AwgnChannel {
    sigma_n: f64,
}

impl AwgnChannel {
    pub fn new(sigma_n: f64) -> Result<Self> {
        if !(sigma_n > 0.0) {
            return Err(Error::Config(format!("AWGN sigma_n {sigma_n} must be > 0")));
        }
        Ok(AwgnChannel { sigma_n })
    }

    pub fn sigma_n(&self) -> f64 {
        self.sigma_n
    }

    pub fn transmit<R: Rng + ?Sized>(&self, symbols: &[f64], rng: &mut R) -> Vec<f64> {
        symbols
            .iter()
            .map(|&s| {
                let n: f64 = rng.sample(StandardNormal);
                s + self.sigma_n * n
            })
            .collect()
    }
}

/// Noise state of the bursty channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseState {
    Low,
    High,
}

/// Two-state Markov ("bursty") noise channel: low state is AWGN with std
/// `sigma_n`, high state adds an interference term for a combined std of
/// `sqrt(sigma_n^2 + sigma_b^2)`. Transitioning into the high state and
/// remaining there both happen with probability `p_b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BnChannel {
    sigma_n: f64,
    sigma_b: f64,
    p_b: f64,
    state: NoiseState,
}

/// Default burst std for the high-noise state.
pub const DEFAULT_SIGMA_B: f64 = 2.0;

impl BnChannel {
    /// Starts in the low-noise state (interference is the exceptional state).
    pub fn new(sigma_n: f64, sigma_b: f64, p_b: f64) -> Result<Self> {
        if !(sigma_n > 0.0) || !(sigma_b > 0.0) {
            return Err(Error::Config(format!(
                "BN noise stds must be > 0, got sigma_n {sigma_n}, sigma_b {sigma_b}"
            )));
        }
        if !(0.0..=1.0).contains(&p_b) {
            return Err(Error::Config(format!("BN p_b {p_b} outside [0, 1]")));
        }
        Ok(BnChannel {
            sigma_n,
            sigma_b,
            p_b,
            state: NoiseState::Low,
        })
    }

    pub fn state(&self) -> NoiseState {
        self.state
    }

    pub fn sigma_n(&self) -> f64 {
        self.sigma_n
    }

    pub fn sigma_b(&self) -> f64 {
        self.sigma_b
    }

    pub fn p_b(&self) -> f64 {
        self.p_b
    }

    /// Advance the Markov noise state once and noise all symbols under the
    /// new state. All uses within the step share the state.
    pub fn transmit<R: Rng + ?Sized>(&self, symbols: &[f64], rng: &mut R) -> (Vec<f64>, BnChannel) {
        let mut next = *self;
        // Deterministic transitions consume no randomness, so a p_b = 0
        // channel is draw-for-draw identical to AWGN with the same sigma_n.
        next.state = if self.p_b <= 0.0 {
            NoiseState::Low
        } else if self.p_b >= 1.0 {
            NoiseState::High
        } else if rng.random_bool(self.p_b) {
            NoiseState::High
        } else {
            NoiseState::Low
        };
        let sigma = match next.state {
            NoiseState::Low => self.sigma_n,
            NoiseState::High => libm::sqrt(self.sigma_n * self.sigma_n + self.sigma_b * self.sigma_b),
        };
        let out = symbols
            .iter()
            .map(|&s| {
                let n: f64 = rng.sample(StandardNormal);
                s + sigma * n
            })
            .collect();
        (out, next)
    }
}

/// Scale a length-M vector to squared norm M (unit average power per use).
///
/// A zero vector has no direction to preserve and is rejected.
pub fn power_normalize(vector: &[f64]) -> Result<Vec<f64>> {
    let norm_sq: f64 = vector.iter().map(|v| v * v).sum();
    if norm_sq == 0.0 || !norm_sq.is_finite() {
        return Err(Error::Degenerate(format!(
            "cannot power-normalize vector with squared norm {norm_sq}"
        )));
    }
    let scale = libm::sqrt(vector.len() as f64 / norm_sq);
    Ok(vector.iter().map(|v| v * scale).collect())
}

/// Backpropagate a gradient through [`power_normalize`].
///
/// With `f(v) = sqrt(M) v / ||v||`, the Jacobian-vector product is
/// `sqrt(M) (g / ||v|| - v (v.g) / ||v||^3)`.
pub fn power_normalize_backward(vector: &[f64], out_gradient: &[f64]) -> Result<Vec<f64>> {
    let norm_sq: f64 = vector.iter().map(|v| v * v).sum();
    if norm_sq == 0.0 || !norm_sq.is_finite() {
        return Err(Error::Degenerate("cannot differentiate normalization at zero".into()));
    }
    if vector.len() == 1 {
        // M = 1 pins the output to +/- 1; the derivative is exactly zero
        // almost everywhere. Returning the cancellation in floating point
        // instead would leave rounding residue for Adam to amplify.
        return Ok(alloc::vec![0.0]);
    }
    let norm = libm::sqrt(norm_sq);
    let sqrt_m = libm::sqrt(vector.len() as f64);
    let dot: f64 = vector.iter().zip(out_gradient).map(|(v, g)| v * g).sum();
    Ok(vector
        .iter()
        .zip(out_gradient)
        .map(|(v, g)| sqrt_m * (g / norm - v * dot / (norm_sq * norm)))
        .collect())
}

/// Noise std for a target AWGN SNR, `sigma_n = 10^(-snr_db / 20)`.
pub fn snr_db_to_sigma(snr_db: f64) -> f64 {
    libm::pow(10.0, -snr_db / 20.0)
}

/// Inverse of [`snr_db_to_sigma`]: `-10 log10(sigma_n^2)`.
pub fn sigma_to_snr_db(sigma_n: f64) -> f64 {
    -10.0 * libm::log10(sigma_n * sigma_n)
}

/// Expected SNR of the bursty channel over its two noise states.
pub fn bn_expected_snr_db(sigma_n: f64, sigma_b: f64, p_b: f64) -> f64 {
    let low = libm::log10(sigma_n * sigma_n);
    let high = libm::log10(sigma_n * sigma_n + sigma_b * sigma_b);
    -10.0 * ((1.0 - p_b) * low + p_b * high)
}

/// BPSK mapping: bit 0 -> -1.0, bit 1 -> +1.0.
pub fn bpsk_modulate(bits: &[u8]) -> Vec<f64> {
    bits.iter().map(|&b| if b == 0 { -1.0 } else { 1.0 }).collect()
}

/// Sign demodulation; an exact 0.0 resolves to bit 1.
pub fn hard_demodulate(symbols: &[f64]) -> Vec<u8> {
    symbols.iter().map(|&s| u8::from(s >= 0.0)).collect()
}

/// Codeword index -> bit vector, most significant bit first.
pub fn index_to_bits(index: usize, len: usize) -> Vec<u8> {
    (0..len).map(|k| ((index >> (len - 1 - k)) & 1) as u8).collect()
}

/// Bit vector (most significant bit first) -> codeword index.
pub fn bits_to_index(bits: &[u8]) -> usize {
    bits.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize)
}

/// Symbols offered to a channel: bits for the BSC, reals otherwise.
#[derive(Debug, Clone, PartialEq)]
pub enum ChannelSymbols {
    Bits(Vec<u8>),
    Reals(Vec<f64>),
}

impl ChannelSymbols {
    pub fn len(&self) -> usize {
        match self {
            ChannelSymbols::Bits(b) => b.len(),
            ChannelSymbols::Reals(r) => r.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// One of the three channel models, as selected by configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChannelModel {
    Bsc(BscChannel),
    Awgn(AwgnChannel),
    Bn(BnChannel),
}

impl ChannelModel {
    /// Transmit one step's symbols and return the receiver-side observation
    /// (BSC bits are mapped to the +/-1 alphabet at this boundary).
    pub fn transmit<R: Rng + ?Sized>(
        &mut self,
        input: &ChannelSymbols,
        rng: &mut R,
    ) -> Result<Vec<f64>> {
        match (self, input) {
            (ChannelModel::Bsc(ch), ChannelSymbols::Bits(bits)) => {
                Ok(bpsk_modulate(&ch.transmit(bits, rng)))
            }
            (ChannelModel::Awgn(ch), ChannelSymbols::Reals(symbols)) => {
                Ok(ch.transmit(symbols, rng))
            }
            (ChannelModel::Bn(ch), ChannelSymbols::Reals(symbols)) => {
                let (out, next) = ch.transmit(symbols, rng);
                *ch = next;
                Ok(out)
            }
            (ChannelModel::Bsc(_), ChannelSymbols::Reals(_)) => Err(Error::Argument(
                "BSC takes bit symbols, got reals".into(),
            )),
            (_, ChannelSymbols::Bits(_)) => Err(Error::Argument(
                "continuous channel takes real symbols, got bits".into(),
            )),
        }
    }

    /// Reset per-episode channel state (the BN noise state).
    pub fn reset(&mut self) {
        if let ChannelModel::Bn(ch) = self {
            ch.state = NoiseState::Low;
        }
    }
}
