//! Synthetic multi-cell OFDM downlink in the frequency domain.
//!
//! The received block over `N` subcarriers and `L` symbols is
//! `Y = Σ_k √P_k · diag(h_k) · S_k + σ · W`, where `h_k` is the frequency
//! response of station `k`, `S_k` its `N × L` symbol block and `W` white
//! circular Gaussian noise. Stacking the stations gives the usual matrix form
//! `Y = H P^{1/2} Θ + σ W` with `H = [diag(h_1) … diag(h_M)]`.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use faer::{c64, Mat};
use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::FftPlanner;

use crate::seed::{self, Stream};
use crate::spectral::MomentVector;
use crate::{Error, Result};

/// 3GPP-LTE short-delay channel presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LtePreset {
    /// Extended Vehicular A, channel length `N/27`.
    Eva,
    /// Extended Typical Urban, channel length `N/13`.
    Etu,
}

/// Time-domain length of the per-station channel impulse response.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelModel {
    /// Full-length taps (`τ_d = N`): i.i.d. frequency response.
    IidFrequency,
    /// Explicit delay spread in samples.
    Taps(usize),
    Preset(LtePreset),
}

impl ChannelModel {
    /// Delay spread `τ_d` in samples for `n` subcarriers.
    pub fn delay_spread(&self, n: usize) -> usize {
        match *self {
            ChannelModel::IidFrequency => n,
            ChannelModel::Taps(t) => t,
            ChannelModel::Preset(LtePreset::Eva) => ((n as f64 / 27.0).round() as usize).max(1),
            ChannelModel::Preset(LtePreset::Etu) => ((n as f64 / 13.0).round() as usize).max(1),
        }
    }
}

impl fmt::Display for ChannelModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChannelModel::IidFrequency => write!(f, "iid-frequency"),
            ChannelModel::Taps(t) => write!(f, "taps:{t}"),
            ChannelModel::Preset(LtePreset::Eva) => write!(f, "eva"),
            ChannelModel::Preset(LtePreset::Etu) => write!(f, "etu"),
        }
    }
}

/// Transmitted symbol distribution (zero mean, unit variance).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Alphabet {
    Gaussian,
    Qpsk,
}

impl fmt::Display for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Alphabet::Gaussian => write!(f, "gaussian"),
            Alphabet::Qpsk => write!(f, "qpsk"),
        }
    }
}

/// Full description of one synthetic experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkScenario {
    /// Number of base stations `M`.
    pub stations: usize,
    /// Number of subcarriers `N`.
    pub subcarriers: usize,
    /// Number of OFDM symbols `L`.
    pub symbols: usize,
    /// Per-station received powers, descending.
    pub powers: Vec<f64>,
    /// Noise variance `σ²`.
    pub sigma2: f64,
    pub channel_model: ChannelModel,
    pub alphabet: Alphabet,
    pub master_seed: u64,
}

impl NetworkScenario {
    /// Scenario with i.i.d. frequency channels and Gaussian symbols.
    pub fn new(subcarriers: usize, symbols: usize, powers: Vec<f64>, sigma2: f64) -> Self {
        NetworkScenario {
            stations: powers.len(),
            subcarriers,
            symbols,
            powers,
            sigma2,
            channel_model: ChannelModel::IidFrequency,
            alphabet: Alphabet::Gaussian,
            master_seed: 0,
        }
    }

    pub fn with_channel(mut self, model: ChannelModel) -> Self {
        self.channel_model = model;
        self
    }

    pub fn with_alphabet(mut self, alphabet: Alphabet) -> Self {
        self.alphabet = alphabet;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.master_seed = seed;
        self
    }

    /// Same scenario with a different power hypothesis.
    pub fn with_powers(&self, powers: &[f64]) -> Self {
        NetworkScenario { stations: powers.len(), powers: powers.to_vec(), ..self.clone() }
    }

    /// Aspect ratio `N/L`.
    pub fn ratio(&self) -> f64 {
        self.subcarriers as f64 / self.symbols as f64
    }

    pub fn delay_spread(&self) -> usize {
        self.channel_model.delay_spread(self.subcarriers)
    }

    /// Seed of experiment trial `index`.
    pub fn trial_seed(&self, index: u64) -> u64 {
        seed::derive(self.master_seed, index)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.stations == 0 || self.subcarriers == 0 || self.symbols == 0 {
            return bad("M, N and L must be positive".into());
        }
        if self.powers.len() != self.stations {
            return bad(format!(
                "powers has {} entries but M = {}",
                self.powers.len(),
                self.stations
            ));
        }
        if self.powers.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return bad("powers must be finite and nonnegative".into());
        }
        if self.powers.windows(2).any(|w| w[0] < w[1]) {
            return bad("powers must be sorted in descending order".into());
        }
        if !self.sigma2.is_finite() || self.sigma2 < 0.0 {
            return bad(format!("sigma2 must be finite and nonnegative, got {}", self.sigma2));
        }
        let tau = self.delay_spread();
        if tau < 1 || tau > self.subcarriers {
            return bad(format!("delay spread {tau} outside 1..={}", self.subcarriers));
        }
        Ok(())
    }
}

/// Per-station frequency responses; row `k` is the diagonal of `D_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub h: Mat<c64>,
}

impl ChannelRealization {
    pub fn stations(&self) -> usize {
        self.h.nrows()
    }

    pub fn subcarriers(&self) -> usize {
        self.h.ncols()
    }

    /// Diagonal of `H P Hᴴ`: `Σ_k P_k |h_kj|²` for every carrier `j`.
    pub fn hph_diagonal(&self, powers: &[f64]) -> Vec<f64> {
        (0..self.subcarriers())
            .map(|j| {
                powers
                    .iter()
                    .enumerate()
                    .map(|(k, p)| p * self.h[(k, j)].norm_sqr())
                    .sum()
            })
            .collect()
    }
}

/// One received `N × L` block with the ground truth used to build it.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceivedBlock {
    pub y: Mat<c64>,
    pub channels: ChannelRealization,
    pub scenario: NetworkScenario,
}

fn complex_normal<R: Rng>(rng: &mut R) -> c64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
}

/// Draws the `M × N` frequency responses: each row is the `N`-point DFT of
/// `τ_d` circular Gaussian taps of variance `1/τ_d`, zero-padded to `N`.
pub fn gen_channels(scenario: &NetworkScenario, trial_seed: u64) -> Result<ChannelRealization> {
    let n = scenario.subcarriers;
    let tau = scenario.delay_spread();
    if tau < 1 || tau > n {
        return Err(Error::InvalidConfig(format!("delay spread {tau} outside 1..={n}")));
    }
    let mut rng = seed::rng(trial_seed, Stream::Channel);
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);
    let tap_scale = (1.0 / tau as f64).sqrt();
    let mut h = Mat::<c64>::zeros(scenario.stations, n);
    let mut buf = vec![c64::new(0.0, 0.0); n];
    for k in 0..scenario.stations {
        buf.iter_mut().for_each(|x| *x = c64::new(0.0, 0.0));
        for tap in buf.iter_mut().take(tau) {
            *tap = complex_normal(&mut rng) * tap_scale;
        }
        fft.process(&mut buf);
        for (j, v) in buf.iter().enumerate() {
            h[(k, j)] = *v;
        }
    }
    Ok(ChannelRealization { h })
}

/// Draws the stacked `MN × L` symbol matrix `Θ`; rows `kN .. (k+1)N` belong
/// to station `k`.
pub fn gen_symbols(scenario: &NetworkScenario, trial_seed: u64) -> Mat<c64> {
    let rows = scenario.stations * scenario.subcarriers;
    let mut rng = seed::rng(trial_seed, Stream::Symbols);
    let mut theta = Mat::<c64>::zeros(rows, scenario.symbols);
    for i in 0..rows {
        for l in 0..scenario.symbols {
            theta[(i, l)] = match scenario.alphabet {
                Alphabet::Gaussian => complex_normal(&mut rng),
                Alphabet::Qpsk => {
                    let bits: u8 = rng.gen();
                    let re = if bits & 1 == 0 { FRAC_1_SQRT_2 } else { -FRAC_1_SQRT_2 };
                    let im = if bits & 2 == 0 { FRAC_1_SQRT_2 } else { -FRAC_1_SQRT_2 };
                    c64::new(re, im)
                }
            };
        }
    }
    theta
}

fn gen_noise(scenario: &NetworkScenario, trial_seed: u64) -> Mat<c64> {
    let mut rng = seed::rng(trial_seed, Stream::Noise);
    let mut w = Mat::<c64>::zeros(scenario.subcarriers, scenario.symbols);
    for j in 0..scenario.subcarriers {
        for l in 0..scenario.symbols {
            w[(j, l)] = complex_normal(&mut rng);
        }
    }
    w
}

/// Builds `Y = Σ_k √P_k diag(h_k) S_k + σ W`, deterministic in
/// `(scenario, trial_seed)`.
pub fn synthesize(scenario: &NetworkScenario, trial_seed: u64) -> Result<ReceivedBlock> {
    scenario.validate()?;
    let channels = gen_channels(scenario, trial_seed)?;
    let theta = gen_symbols(scenario, trial_seed);
    let sigma = scenario.sigma2.sqrt();
    let n = scenario.subcarriers;
    let mut y = gen_noise(scenario, trial_seed);
    for j in 0..n {
        for l in 0..scenario.symbols {
            y[(j, l)] *= sigma;
        }
    }
    for (k, p) in scenario.powers.iter().enumerate() {
        let amp = p.sqrt();
        for j in 0..n {
            let g = channels.h[(k, j)] * amp;
            for l in 0..scenario.symbols {
                y[(j, l)] += g * theta[(k * n + j, l)];
            }
        }
    }
    Ok(ReceivedBlock { y, channels, scenario: scenario.clone() })
}

/// Finite-`N` moments of `H P Hᴴ`: `ν_p = (1/N) Σ_j (Σ_k P_k |h_kj|²)^p`.
pub fn true_hph_moments(channels: &ChannelRealization, powers: &[f64], order: usize) -> MomentVector {
    let diag = channels.hph_diagonal(powers);
    let n = diag.len();
    let values = (1..=order as i32)
        .map(|p| diag.iter().map(|x| x.powi(p)).sum::<f64>() / n as f64)
        .collect();
    MomentVector { values, ratio: 0.0, n_eff: n }
}
