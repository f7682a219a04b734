//! Seeded Monte Carlo engine for end-to-end BER experiments.
//!
//! Determinism contract: every batch of trials draws its randomness from a
//! counter-based substream keyed by (seed, SNR-point index, batch index), and
//! batches are reduced in batch order after fixed-size waves, so a (seed,
//! config) pair fully determines the result regardless of how many rayon
//! workers execute the batches.
//!
//! A "trial" is one information-bearing IM symbol interval for every scheme,
//! so `bits_sent = trials * k` exactly (k, k_SPC or k_TCM). Tail intervals of
//! terminated SPC blocks carry no fresh information bits and are excluded
//! from the trial count (their symbol-bit slots transmit zeros).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{sample_channel, sample_noise};
use crate::conv::RscCode;
use crate::im::{compute_llrs, im_demap, im_map, ml_detect, mlse_detect, ImConfig, ImSymbol};
use crate::turbo::{turbo_decode, DecodeAlgo, Interleaver, TurboCode};
use crate::{Constellation, Correlation, Error, Result};

/// Transmission scheme selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    Uncoded,
    Spc,
    Turbo,
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Scheme::Uncoded => write!(f, "uncoded"),
            Scheme::Spc => write!(f, "spc"),
            Scheme::Turbo => write!(f, "turbo"),
        }
    }
}

/// Full description of one BER experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub scheme: Scheme,
    pub n_ports: usize,
    pub mod_order: usize,
    /// FA aperture in wavelengths (unused when `n_ports == 1`).
    pub fa_size: f64,
    pub snr_grid_db: Vec<f64>,
    /// Cap on information-bearing intervals per SNR point.
    pub max_trials: u64,
    /// Early-stop error target per SNR point.
    pub min_errors: u64,
    pub seed: u64,
    /// Octal generators, last entry = feedback (SPC and turbo schemes).
    #[serde(default)]
    pub generators: Option<Vec<u32>>,
    /// Block/interleaver length in symbols (SPC block length, turbo 𝔏).
    #[serde(default)]
    pub interleaver_len: Option<usize>,
    /// Turbo decoder iterations.
    #[serde(default)]
    pub turbo_iters: Option<usize>,
}

impl ExperimentConfig {
    /// Information bits per trial interval for this scheme.
    pub fn info_bits_per_interval(&self) -> Result<u32> {
        let cfg = ImConfig::new(self.n_ports, self.mod_order)?;
        let k = cfg.bits_per_symbol();
        Ok(match self.scheme {
            Scheme::Uncoded => k,
            Scheme::Spc => k - 1,
            Scheme::Turbo => k - 2,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = ImConfig::new(self.n_ports, self.mod_order)?;
        Constellation::new(self.mod_order)?;
        if self.n_ports >= 2 && !(self.fa_size > 0.0 && self.fa_size.is_finite()) {
            return Err(Error::Config("fa_size must be positive".into()));
        }
        if self.snr_grid_db.is_empty() {
            return Err(Error::Config("snr_grid_db is empty".into()));
        }
        if self.snr_grid_db.iter().any(|s| !s.is_finite()) {
            return Err(Error::Config("snr_grid_db has non-finite entries".into()));
        }
        if self.max_trials == 0 {
            return Err(Error::Config("max_trials must be positive".into()));
        }
        if self.min_errors == 0 {
            return Err(Error::Config("min_errors must be positive".into()));
        }
        match self.scheme {
            Scheme::Uncoded => {}
            Scheme::Spc => {
                let nb = cfg.n_bits_port();
                if nb < 2 {
                    return Err(Error::Config("spc scheme needs log2(n_ports) >= 2".into()));
                }
                let code = self.build_code()?;
                if code.output_arity() != nb as usize {
                    return Err(Error::Config(format!(
                        "spc scheme with N = {} needs a rate {}/{} code",
                        self.n_ports,
                        nb - 1,
                        nb
                    )));
                }
            }
            Scheme::Turbo => {
                let k = cfg.bits_per_symbol();
                if k < 3 {
                    return Err(Error::Config(
                        "turbo scheme needs log2(NM) >= 3 (k_TCM = log2(NM) - 2)".into(),
                    ));
                }
                let code = self.build_code()?;
                if code.input_arity() != (k - 2) as usize {
                    return Err(Error::Config(format!(
                        "turbo scheme with log2(NM) = {k} needs a rate {}/{} constituent",
                        k - 2,
                        k - 1
                    )));
                }
                if self.interleaver_len.unwrap_or(0) == 0 {
                    return Err(Error::Config(
                        "turbo scheme needs interleaver_len >= 1".into(),
                    ));
                }
                if self.turbo_iters.unwrap_or(0) == 0 {
                    return Err(Error::Config("turbo scheme needs turbo_iters >= 1".into()));
                }
            }
        }
        Ok(())
    }

    pub fn build_code(&self) -> Result<RscCode> {
        let gens = self
            .generators
            .as_ref()
            .ok_or_else(|| Error::Config("scheme requires --gen octal generators".into()))?;
        RscCode::new(gens)
    }

    fn correlation(&self) -> Result<Correlation> {
        if self.n_ports == 1 {
            Ok(Correlation::identity(1))
        } else {
            Correlation::jakes(self.n_ports, self.fa_size)
        }
    }
}

/// Per-real-dimension noise variance at a given SNR (dB), with unit-energy
/// constellations and unit fading power: SNR = Es/E|w|^2 = 1/(2 noise_var).
pub fn noise_var_from_snr_db(snr_db: f64) -> f64 {
    0.5 * 10f64.powf(-snr_db / 10.0)
}

/// Error statistics at one SNR point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BerPoint {
    pub snr_db: f64,
    pub bit_errors: u64,
    pub bits_sent: u64,
    pub ber: f64,
    /// Binomial standard error of the BER estimate.
    pub mc_std_error: f64,
    /// Bit errors after the first turbo iteration (turbo scheme only).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub first_iteration_errors: Option<u64>,
}

impl BerPoint {
    fn new(
        snr_db: f64,
        bit_errors: u64,
        bits_sent: u64,
        first_iteration_errors: Option<u64>,
    ) -> Self {
        let ber = bit_errors as f64 / bits_sent as f64;
        let mc_std_error = (ber * (1.0 - ber) / bits_sent as f64).sqrt();
        Self {
            snr_db,
            bit_errors,
            bits_sent,
            ber,
            mc_std_error,
            first_iteration_errors,
        }
    }
}

/// Result of one experiment: per-SNR statistics plus timing metadata.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BerCurve {
    pub config: ExperimentConfig,
    pub points: Vec<BerPoint>,
    pub wall_time_ms: u128,
}

/// Counter-based substream: fully determined by (seed, point, batch).
pub fn substream(seed: u64, point: u64, batch: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&point.to_le_bytes());
    key[16..24].copy_from_slice(&batch.to_le_bytes());
    key[24..32].copy_from_slice(b"imfa-sub");
    ChaCha8Rng::from_seed(key)
}

/// Runs the experiment selected by `config.scheme`.
pub fn run(config: &ExperimentConfig) -> Result<BerCurve> {
    match config.scheme {
        Scheme::Uncoded => run_uncoded(config),
        Scheme::Spc => run_spc(config),
        Scheme::Turbo => run_turbo(config),
    }
}

struct BatchResult {
    errors: u64,
    trials: u64,
    first_iter_errors: u64,
}

/// Shared driver: schedules fixed-size waves of batches, reduces them in
/// batch order and applies the stopping rule at wave boundaries. The wave
/// size is a fixed per-scheme constant so results never depend on the number
/// of workers.
fn drive<F>(config: &ExperimentConfig, wave: u64, body: F) -> Result<BerCurve>
where
    F: Fn(u64, u64, &mut ChaCha8Rng) -> BatchResult + Sync,
{
    config.validate()?;
    let start = std::time::Instant::now();
    let k = config.info_bits_per_interval()? as u64;
    let mut points = Vec::with_capacity(config.snr_grid_db.len());
    let mut grid: Vec<(usize, f64)> = config.snr_grid_db.iter().copied().enumerate().collect();
    grid.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
    for (pi, snr) in grid {
        let mut errors = 0u64;
        let mut trials = 0u64;
        let mut first_iter = 0u64;
        let mut batch = 0u64;
        while errors < config.min_errors && trials < config.max_trials {
            let results: Vec<BatchResult> = (batch..batch + wave)
                .into_par_iter()
                .map(|b| {
                    let mut rng = substream(config.seed, pi as u64, b);
                    body(pi as u64, b, &mut rng)
                })
                .collect();
            for r in results {
                errors += r.errors;
                trials += r.trials;
                first_iter += r.first_iter_errors;
            }
            batch += wave;
        }
        let bits = trials * k;
        let fie = matches!(config.scheme, Scheme::Turbo).then_some(first_iter);
        points.push(BerPoint::new(snr, errors, bits, fie));
    }
    points.sort_by(|a, b| a.snr_db.partial_cmp(&b.snr_db).unwrap());
    Ok(BerCurve {
        config: config.clone(),
        points,
        wall_time_ms: start.elapsed().as_millis(),
    })
}

const UNCODED_BATCH: u64 = 2048;
const UNCODED_WAVE: u64 = 16;
const SPC_WAVE: u64 = 8;
const TURBO_WAVE: u64 = 2;

/// Uncoded IM-FA: per interval draw bits, map, transmit, jointly detect.
pub fn run_uncoded(config: &ExperimentConfig) -> Result<BerCurve> {
    let cfg = ImConfig::new(config.n_ports, config.mod_order)?;
    let cons = Constellation::new(config.mod_order)?;
    let corr = config.correlation()?;
    let k = cfg.bits_per_symbol();
    let noise: Vec<f64> = config
        .snr_grid_db
        .iter()
        .map(|&s| noise_var_from_snr_db(s))
        .collect();
    drive(config, UNCODED_WAVE, move |pi, _b, rng| {
        let s2 = noise[pi as usize];
        let mut errors = 0u64;
        for _ in 0..UNCODED_BATCH {
            let word = rng.gen_range(0..(1u32 << k));
            let sym = im_map(word, &cfg, &cons).expect("word in range");
            let h = sample_channel(&corr, 1.0, rng);
            let w = sample_noise(s2, rng);
            let y = h.coeff(sym.port_idx) * cons.point(sym.sym_idx) + w;
            let (n_hat, v_hat) = ml_detect(y, &h, &cfg, &cons);
            let decided = im_demap(
                &ImSymbol {
                    port_idx: n_hat,
                    sym_idx: v_hat,
                },
                &cfg,
                &cons,
            );
            errors += (word ^ decided).count_ones() as u64;
        }
        BatchResult {
            errors,
            trials: UNCODED_BATCH,
            first_iter_errors: 0,
        }
    })
}

/// Spatial SPC: port bits RSC-encoded (terminated per block), symbol bits
/// uncoded; hard per-interval detection followed by Viterbi.
pub fn run_spc(config: &ExperimentConfig) -> Result<BerCurve> {
    let cfg = ImConfig::new(config.n_ports, config.mod_order)?;
    let cons = Constellation::new(config.mod_order)?;
    let corr = config.correlation()?;
    let code = config.build_code()?;
    let info_steps = config.interleaver_len.unwrap_or(256);
    let nb = cfg.n_bits_port() as usize;
    let b = nb - 1;
    let noise: Vec<f64> = config
        .snr_grid_db
        .iter()
        .map(|&s| noise_var_from_snr_db(s))
        .collect();
    drive(config, SPC_WAVE, move |pi, _b, rng| {
        let s2 = noise[pi as usize];
        let tail = code.tail_steps();
        let total_steps = info_steps + tail;
        // information bits
        let port_info: Vec<u8> = (0..info_steps * b).map(|_| rng.gen_range(0..2u8)).collect();
        let sym_labels: Vec<u32> = (0..info_steps)
            .map(|_| rng.gen_range(0..cfg.mod_order() as u32))
            .collect();
        let coded = code.encode(&port_info, true).expect("length divisible");
        // transmit
        let mut ys = Vec::with_capacity(total_steps);
        let mut hs = Vec::with_capacity(total_steps);
        for l in 0..total_steps {
            let step = &coded[l * nb..(l + 1) * nb];
            let mut port_word = 0u32;
            for &bit in step {
                port_word = (port_word << 1) | bit as u32;
            }
            let port = crate::conv::spc_port_map(port_word, nb as u32).expect("nb bits");
            let label = if l < info_steps { sym_labels[l] } else { 0 };
            let sym_idx = cons.index_of_label(label);
            let h = sample_channel(&corr, 1.0, rng);
            let w = sample_noise(s2, rng);
            ys.push(h.coeff(port) * cons.point(sym_idx) + w);
            hs.push(h);
        }
        let detected = mlse_detect(&ys, &hs, &cfg, &cons).expect("equal lengths");
        // received coded port bits and symbol decisions
        let mut rx = Vec::with_capacity(total_steps * nb);
        let mut errors = 0u64;
        for (l, &(n_hat, v_hat)) in detected.iter().enumerate() {
            for i in 0..nb {
                rx.push(((n_hat >> (nb - 1 - i)) & 1) as u8);
            }
            if l < info_steps {
                let lab = cons.label_of_index(v_hat);
                errors += (lab ^ sym_labels[l]).count_ones() as u64;
            }
        }
        let decoded = code.viterbi_decode_hard(&rx, true).expect("framed");
        errors += decoded
            .iter()
            .zip(&port_info)
            .filter(|(a, b)| a != b)
            .count() as u64;
        BatchResult {
            errors,
            trials: info_steps as u64,
            first_iter_errors: 0,
        }
    })
}

/// Turbo-coded IM-FA: per block, encode, map each (k_TCM + 2)-bit word to an
/// IM symbol, demodulate to per-bit LLRs and decode iteratively.
pub fn run_turbo(config: &ExperimentConfig) -> Result<BerCurve> {
    let cfg = ImConfig::new(config.n_ports, config.mod_order)?;
    let cons = Constellation::new(config.mod_order)?;
    let corr = config.correlation()?;
    let code = config.build_code()?;
    let ell = config.interleaver_len.unwrap_or(1024);
    let iters = config.turbo_iters.unwrap_or(10);
    let b = code.input_arity();
    let noise: Vec<f64> = config
        .snr_grid_db
        .iter()
        .map(|&s| noise_var_from_snr_db(s))
        .collect();
    let seed = config.seed;
    drive(config, TURBO_WAVE, move |pi, batch, rng| {
        let s2 = noise[pi as usize];
        // fresh interleaver per block, seeded deterministically
        let pi_seed = seed ^ (pi << 32) ^ batch;
        let tc = TurboCode::new(code.clone(), Interleaver::random(ell, pi_seed))
            .expect("non-empty interleaver");
        let info: Vec<u32> = (0..ell).map(|_| rng.gen_range(0..(1u32 << b))).collect();
        let coded = tc.encode(&info).expect("block length matches");
        let mut llrs = Vec::with_capacity(ell);
        for &word in &coded {
            let sym = im_map(word, &cfg, &cons).expect("word in range");
            let h = sample_channel(&corr, 1.0, rng);
            let w = sample_noise(s2, rng);
            let y = h.coeff(sym.port_idx) * cons.point(sym.sym_idx) + w;
            let l = compute_llrs(y, &h, &cfg, &cons, s2);
            llrs.push(l.word_llrs().collect::<Vec<f64>>());
        }
        let out = turbo_decode(&tc, &llrs, iters, DecodeAlgo::LogMap).expect("framed");
        let count = |dec: &[u32]| {
            dec.iter()
                .zip(&info)
                .map(|(a, b)| (a ^ b).count_ones() as u64)
                .sum::<u64>()
        };
        BatchResult {
            errors: count(&out.decisions),
            trials: ell as u64,
            first_iter_errors: count(&out.per_iteration_decisions[0]),
        }
    })
}
