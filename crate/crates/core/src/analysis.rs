//! Closed-form and semi-analytical results: pairwise error probabilities,
//! union bounds for the uncoded/SPC/turbo schemes, discrete-input capacity
//! and EXIT curves.
//!
//! Throughout, `noise_var` is the per-real-dimension noise variance of
//! [`crate::channel::sample_noise`] (total noise power `2 * noise_var`), and
//! fading has unit per-port power. The unconditional pairwise error
//! probability for a squared-distance eigenvalue `mu` is therefore
//! `1/2 (1 - sqrt(1/(1 + 8 noise_var / mu)))`.

use rand_chacha::ChaCha8Rng;

use crate::channel::{sample_channel, sample_noise, CorrelationMatrix};
use crate::conv::{compute_wef, RscCode};
use crate::im::{compute_llrs, im_map, ImConfig, QamConstellation};
use crate::numerics::{craig_integral_grouped, QuadratureRule};
use crate::turbo::{
    constituent_decode, turbo_decode_traced, word_metrics_from_bits, DecodeAlgo, TurboCode,
    TurboCwef,
};
use crate::{Error, Real, Result, Scalar};

/// Truncation controls shared by the coded-scheme bounds.
#[derive(Debug, Clone, Copy)]
pub struct BoundSpec {
    /// Number of leading non-zero spectrum terms kept (SPC bound).
    pub terms: usize,
    /// Input-weight truncation of the turbo enumerator.
    pub w_max: u32,
    /// Parity-weight truncation of the turbo enumerator.
    pub z_max: u32,
}

impl Default for BoundSpec {
    fn default() -> Self {
        Self {
            terms: 10,
            w_max: 8,
            z_max: 30,
        }
    }
}

/// Unconditional PEP between two transmit hypotheses whose difference vector
/// has quadratic-form eigenvalue `mu` (Rayleigh average of the Q-function).
pub fn pep_closed_form<T: Scalar>(mu: T, noise_var: T) -> T {
    debug_assert!(noise_var > T::zero());
    if mu <= T::zero() {
        return T::of(0.5);
    }
    let c = mu / (T::of(8.0) * noise_var);
    T::of(0.5) * (T::one() - (c / (T::one() + c)).sqrt())
}

/// PEP of a coded sequence over independent fading intervals with
/// per-interval eigenvalues `factors`; reduces to [`pep_closed_form`] for a
/// single interval.
pub fn sequence_pep<T: Scalar>(factors: &[T], noise_var: T, rule: &QuadratureRule<T>) -> Result<T> {
    let groups: Vec<(T, u32)> = factors.iter().map(|&m| (m, 1)).collect();
    craig_integral_grouped(&groups, noise_var, rule)
}

fn pair_mu<T: Scalar>(
    corr: &CorrelationMatrix<T>,
    constellation: &QamConstellation<T>,
    a: (usize, usize),
    b: (usize, usize),
) -> T {
    let sa = constellation.point(a.1);
    let sb = constellation.point(b.1);
    if a.0 == b.0 {
        corr.mu_two_sparse((a.0, sa - sb), None)
    } else {
        corr.mu_two_sparse((a.0, sa), Some((b.0, -sb)))
    }
}

fn hypothesis_table<T: Scalar>(
    cfg: &ImConfig,
    constellation: &QamConstellation<T>,
) -> Vec<(usize, usize)> {
    let k = cfg.bits_per_symbol();
    (0..1u32 << k)
        .map(|w| {
            let s = im_map(w, cfg, constellation).expect("word within range");
            (s.port_idx, s.sym_idx)
        })
        .collect()
}

/// Union bound on the uncoded IM-FA bit error rate: exhaustive double sum
/// over all (NM)^2 hypothesis pairs.
pub fn uncoded_union_bound<T: Scalar>(
    cfg: &ImConfig,
    corr: &CorrelationMatrix<T>,
    noise_var: T,
    constellation: &QamConstellation<T>,
) -> Result<T> {
    let nm = cfg.n_ports() * cfg.mod_order();
    if nm > 1 << 14 {
        return Err(Error::param("cfg", "NM > 2^14; refusing the (NM)^2 sum"));
    }
    if corr.dim() != cfg.n_ports() {
        return Err(Error::DimensionMismatch {
            expected: cfg.n_ports(),
            got: corr.dim(),
        });
    }
    let k = cfg.bits_per_symbol();
    let total = 1u32 << k;
    let syms = hypothesis_table(cfg, constellation);
    let mut acc = T::zero();
    for wa in 0..total {
        for wb in 0..total {
            if wa == wb {
                continue;
            }
            let d = (wa ^ wb).count_ones();
            let mu = pair_mu(corr, constellation, syms[wa as usize], syms[wb as usize]);
            acc += T::of(d as f64) * pep_closed_form(mu, noise_var);
        }
    }
    Ok(acc / (T::of(k as f64) * T::of(total as f64)))
}

/// BSC crossover probability seen by the coded port bits: per-coded-port-bit
/// union average restricted to error events that touch port bits.
pub fn spc_bsc_crossover<T: Scalar>(
    cfg: &ImConfig,
    corr: &CorrelationMatrix<T>,
    noise_var: T,
    constellation: &QamConstellation<T>,
) -> Result<T> {
    let np = cfg.n_bits_port();
    if np == 0 {
        return Err(Error::param("cfg", "SPC needs at least two ports"));
    }
    let k = cfg.bits_per_symbol();
    let total = 1u32 << k;
    let syms = hypothesis_table(cfg, constellation);
    let mut acc = T::zero();
    for wa in 0..total {
        for wb in 0..total {
            if wa == wb {
                continue;
            }
            let d_port = ((wa ^ wb) >> cfg.n_bits_sym()).count_ones();
            if d_port == 0 {
                continue;
            }
            let mu = pair_mu(corr, constellation, syms[wa as usize], syms[wb as usize]);
            acc += T::of(d_port as f64) * pep_closed_form(mu, noise_var);
        }
    }
    let d = acc / (T::of(np as f64) * T::of(total as f64));
    Ok(d.min(T::of(0.5)))
}

/// Probability that a weight-d error event survives hard-decision decoding
/// over a BSC with the given crossover probability (the even-d boundary term
/// enters with weight one half).
pub fn spc_zeta<T: Scalar>(d: usize, crossover: T) -> T {
    let p = crossover;
    let q = T::one() - p;
    let mut acc = T::zero();
    for kappa in (d / 2 + 1)..=d {
        acc += T::of(crate::turbo::binomial(d, kappa))
            * p.powi(kappa as i32)
            * q.powi((d - kappa) as i32);
    }
    if d % 2 == 0 {
        acc += T::of(0.5) * T::of(crate::turbo::binomial(d, d / 2)) * (p * q).powi((d / 2) as i32);
    }
    acc
}

/// Union bound on the post-Viterbi port-bit error rate of the SPC scheme:
/// the first `spec.terms` non-zero spectrum terms of the code evaluated at
/// the BSC crossover of the IM front end. Saturates at 1/2.
pub fn spc_ber_bound<T: Scalar>(
    code: &RscCode,
    cfg: &ImConfig,
    corr: &CorrelationMatrix<T>,
    noise_var: T,
    constellation: &QamConstellation<T>,
    spec: &BoundSpec,
) -> Result<T> {
    if code.output_arity() != cfg.n_bits_port() as usize {
        return Err(Error::param(
            "code",
            format!(
                "SPC needs a rate {}/{} code for N = {}",
                cfg.n_bits_port().saturating_sub(1),
                cfg.n_bits_port(),
                cfg.n_ports()
            ),
        ));
    }
    let crossover = spc_bsc_crossover(cfg, corr, noise_var, constellation)?;
    if crossover >= T::of(0.5) {
        return Ok(T::of(0.5));
    }
    let spectrum = compute_wef(code, 40)?;
    let mut acc = T::zero();
    for (d, a) in spectrum.leading_terms(spec.terms) {
        acc += T::of(a as f64) * spc_zeta(d, crossover);
    }
    Ok(acc.min(T::of(0.5)))
}

/// Squared-distance eigenvalues of every single coded-bit flip, grouped by
/// bit position and averaged-ready: one `Vec` of per-transmitted-word
/// eigenvalues for each position of the `[u, p1, p2]` word.
pub fn single_flip_mu_by_position<T: Scalar>(
    cfg: &ImConfig,
    corr: &CorrelationMatrix<T>,
    constellation: &QamConstellation<T>,
) -> Vec<Vec<T>> {
    let k = cfg.bits_per_symbol() as usize;
    let total = 1u32 << k;
    let syms = hypothesis_table(cfg, constellation);
    let mut by_pos = vec![Vec::with_capacity(total as usize); k];
    for w in 0..total {
        for (j, bucket) in by_pos.iter_mut().enumerate() {
            let flipped = w ^ (1 << (k - 1 - j));
            bucket.push(pair_mu(
                corr,
                constellation,
                syms[w as usize],
                syms[flipped as usize],
            ));
        }
    }
    by_pos
}

/// Union bound on the turbo-coded BER from the uniform-interleaver CWEF
/// under fast fading: each (w, z) monomial maps to w systematic and z parity
/// single-bit flips in distinct, independently fading intervals.
///
/// The transmitted word behind each flip is uniform, so the per-interval
/// Craig factor is the mean MGF factor over words (averaging the eigenvalue
/// itself would be optimistic by Jensen's inequality). The bit *position* of
/// a flip is not resolved by a (w, z) monomial, so the bound takes the
/// weakest position's factor within each class, keeping it an upper
/// estimate over all flip assignments.
pub fn turbo_ber_bound<T: Scalar>(
    cwef: &TurboCwef,
    cfg: &ImConfig,
    corr: &CorrelationMatrix<T>,
    noise_var: T,
    constellation: &QamConstellation<T>,
    rule: &QuadratureRule<T>,
) -> Result<T> {
    let k = cfg.bits_per_symbol() as usize;
    if k < 3 {
        return Err(Error::param("cfg", "turbo bound needs log2(NM) > 2"));
    }
    if !(noise_var > T::zero()) {
        return Err(Error::param("noise_var", "must be positive"));
    }
    let k_tcm = k - 2;
    if cwef.is_trivial() {
        return Ok(T::zero());
    }
    let by_pos = single_flip_mu_by_position(cfg, corr, constellation);
    let denom = T::of(8.0) * noise_var;
    let mean_factor = |mus: &[T], s2: T| -> T {
        let sum: T = mus
            .iter()
            .map(|&mu| (T::one() + mu / (denom * s2)).recip())
            .sum();
        sum / T::of(mus.len() as f64)
    };
    let n_sys = k - 2;
    let nodes: Vec<(T, T, T)> = rule
        .nodes()
        .iter()
        .zip(rule.weights())
        .map(|(&theta, &wt)| {
            let s2 = theta.sin().powi(2);
            let fs = by_pos[..n_sys]
                .iter()
                .map(|mus| mean_factor(mus, s2))
                .fold(T::zero(), T::max);
            let fp = by_pos[n_sys..]
                .iter()
                .map(|mus| mean_factor(mus, s2))
                .fold(T::zero(), T::max);
            (wt, fs, fp)
        })
        .collect();
    let ell = cwef.block_len();
    let mut acc = T::zero();
    for ((w, z), count) in cwef.terms() {
        if w == 0 {
            continue;
        }
        let mut pep = T::zero();
        for &(wt, fs, fp) in &nodes {
            pep += wt * fs.powi(w as i32) * fp.powi(z as i32);
        }
        pep = pep / T::PI();
        acc += T::of(w as f64) * T::of(count) * pep;
    }
    Ok((acc / T::of((k_tcm * ell) as f64)).min(T::of(0.5)))
}

// --- discrete-input capacity -------------------------------------------------

/// Monte Carlo estimate of the discrete-input capacity in bps/Hz.
#[derive(Debug, Clone, Copy)]
pub struct CapacityEstimate {
    pub value: f64,
    pub mc_samples: usize,
    pub std_error: f64,
}

/// Estimates `C = log2(NM) - E[equivocation]` by Monte Carlo over channel
/// and noise; one (h, w) draw is reused across all transmit hypotheses.
pub fn capacity_mc(
    cfg: &ImConfig,
    corr: &CorrelationMatrix<Real>,
    noise_var: Real,
    constellation: &QamConstellation<Real>,
    n_samples: usize,
    rng: &mut ChaCha8Rng,
) -> Result<CapacityEstimate> {
    if n_samples < 1_000 {
        return Err(Error::param("n_samples", "need at least 1000 samples"));
    }
    if corr.dim() != cfg.n_ports() {
        return Err(Error::DimensionMismatch {
            expected: cfg.n_ports(),
            got: corr.dim(),
        });
    }
    let n = cfg.n_ports();
    let m = cfg.mod_order();
    let nm = (n * m) as f64;
    let inv2s = 1.0 / (2.0 * noise_var);
    let ln2 = std::f64::consts::LN_2;
    let mut sum = 0.0;
    let mut sumsq = 0.0;
    let mut prod = vec![num_complex::Complex::<Real>::new(0.0, 0.0); n * m];
    let mut args = vec![0.0f64; n * m];
    for _ in 0..n_samples {
        let h = sample_channel(corr, 1.0, rng);
        let w = sample_noise(noise_var, rng);
        for u in 0..n {
            for (v, &s) in constellation.points().iter().enumerate() {
                prod[u * m + v] = h.coeff(u) * s;
            }
        }
        let w2 = w.norm_sqr();
        let mut equiv = 0.0;
        for t in 0..n * m {
            let y = prod[t] + w;
            let mut mx = f64::NEG_INFINITY;
            for (a, &g) in args.iter_mut().zip(prod.iter()) {
                *a = (-(y - g).norm_sqr() + w2) * inv2s;
                if *a > mx {
                    mx = *a;
                }
            }
            let s: f64 = args.iter().map(|&a| (a - mx).exp()).sum();
            equiv += (mx + s.ln()) / ln2;
        }
        let e = equiv / nm;
        sum += e;
        sumsq += e * e;
    }
    let mean = sum / n_samples as f64;
    let var = (sumsq / n_samples as f64 - mean * mean).max(0.0);
    let std_error = (var / n_samples as f64).sqrt();
    Ok(CapacityEstimate {
        value: nm.log2() - mean,
        mc_samples: n_samples,
        std_error,
    })
}

// --- EXIT analysis -----------------------------------------------------------

/// One point of the extrinsic information transfer characteristic.
#[derive(Debug, Clone, Copy)]
pub struct ExitPoint {
    /// A priori mutual information per info word, in [0, k_TCM].
    pub i_a: f64,
    /// Extrinsic mutual information per info word, in [0, k_TCM].
    pub i_e: f64,
}

/// Per-bit mutual information of the Gaussian-consistent LLR model
/// `L ~ N(x sigma^2/2, sigma^2)`, x = +-1.
pub fn j_function(sigma: f64) -> f64 {
    if sigma <= 1e-9 {
        return 0.0;
    }
    let mu = sigma * sigma / 2.0;
    let lo = mu - 10.0 * sigma;
    let hi = mu + 10.0 * sigma;
    let n = 2000usize;
    let h = (hi - lo) / n as f64;
    let pdf = |l: f64| {
        let z = (l - mu) / sigma;
        (-0.5 * z * z).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
    };
    let f = |l: f64| pdf(l) * (1.0 + (-l).exp()).log2();
    let mut s = f(lo) + f(hi);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(lo + i as f64 * h);
    }
    (1.0 - s * h / 3.0).clamp(0.0, 1.0)
}

/// Inverse of [`j_function`] by bisection.
pub fn j_inverse(i: f64) -> f64 {
    let i = i.clamp(0.0, 1.0 - 1e-12);
    let (mut lo, mut hi) = (1e-6f64, 60.0f64);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if j_function(mid) < i {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// k_TCM minus the mean entropy of normalized extrinsic symbol tables.
fn extrinsic_information(tables: &[Vec<f64>], k_tcm: f64) -> f64 {
    let mut h = 0.0;
    for t in tables {
        for &p in t {
            if p > 0.0 {
                h -= p * p.log2();
            }
        }
    }
    (k_tcm - h / tables.len() as f64).clamp(0.0, k_tcm)
}

struct SimulatedBlock {
    info: Vec<u32>,
    llrs: Vec<Vec<f64>>,
}

fn simulate_block(
    tc: &TurboCode,
    cfg: &ImConfig,
    corr: &CorrelationMatrix<Real>,
    noise_var: Real,
    constellation: &QamConstellation<Real>,
    rng: &mut ChaCha8Rng,
) -> Result<SimulatedBlock> {
    use rand::Rng;
    let ell = tc.block_len();
    let b = tc.info_bits_per_word();
    let info: Vec<u32> = (0..ell).map(|_| rng.gen_range(0..(1u32 << b))).collect();
    let coded = tc.encode(&info)?;
    let mut llrs = Vec::with_capacity(ell);
    for &word in &coded {
        let sym = im_map(word, cfg, constellation)?;
        let h = sample_channel(corr, 1.0, rng);
        let w = sample_noise(noise_var, rng);
        let y = h.coeff(sym.port_idx) * constellation.point(sym.sym_idx) + w;
        let l = compute_llrs(y, &h, cfg, constellation, noise_var);
        llrs.push(l.word_llrs().collect());
    }
    Ok(SimulatedBlock { info, llrs })
}

fn check_turbo_im_shape(tc: &TurboCode, cfg: &ImConfig) -> Result<usize> {
    let b = tc.info_bits_per_word();
    if cfg.bits_per_symbol() as usize != b + 2 {
        return Err(Error::Config(format!(
            "constituent rate {}/{} needs log2(NM) = {}, got {}",
            b,
            b + 1,
            b + 2,
            cfg.bits_per_symbol()
        )));
    }
    Ok(b)
}

/// EXIT characteristic of one constituent decoder: synthesizes
/// Gaussian-consistent per-bit priors at each a priori information level,
/// runs one constituent pass over simulated channel observations, and
/// measures the average extrinsic information.
#[allow(clippy::too_many_arguments)]
pub fn exit_curve(
    tc: &TurboCode,
    cfg: &ImConfig,
    corr: &CorrelationMatrix<Real>,
    noise_var: Real,
    constellation: &QamConstellation<Real>,
    ia_grid: &[f64],
    n_blocks: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<ExitPoint>> {
    let b = check_turbo_im_shape(tc, cfg)?;
    let k = 1usize << b;
    let k_tcm = b as f64;
    if ia_grid.iter().any(|&x| !(0.0..=k_tcm).contains(&x)) {
        return Err(Error::param(
            "ia_grid",
            format!("values must lie in [0, {k_tcm}]"),
        ));
    }
    let code = tc.constituent();
    let ell = tc.block_len();
    let mut points = Vec::with_capacity(ia_grid.len());
    for &ia in ia_grid {
        let sigma_a = j_inverse(ia / k_tcm);
        let mu_a = sigma_a * sigma_a / 2.0;
        let mut acc = 0.0;
        for _ in 0..n_blocks {
            let blk = simulate_block(tc, cfg, corr, noise_var, constellation, rng)?;
            let mut sys = vec![0.0f64; ell * k];
            let mut p1 = vec![0.0f64; ell];
            let mut prior = vec![0.0f64; ell * k];
            for l in 0..ell {
                let wm = word_metrics_from_bits(&blk.llrs[l][..b]);
                sys[l * k..(l + 1) * k].copy_from_slice(&wm);
                p1[l] = blk.llrs[l][b];
                let bit_priors: Vec<f64> = (0..b)
                    .map(|j| {
                        let bit = (blk.info[l] >> (b - 1 - j)) & 1;
                        let x = if bit == 1 { 1.0 } else { -1.0 };
                        let (g, _) = crate::channel::standard_normal_pair(rng);
                        x * mu_a + sigma_a * g
                    })
                    .collect();
                let pm = word_metrics_from_bits(&bit_priors);
                prior[l * k..(l + 1) * k].copy_from_slice(&pm);
            }
            let out = constituent_decode(code, &sys, &p1, &prior, DecodeAlgo::LogMap);
            let tables: Vec<Vec<f64>> = out
                .extrinsic
                .chunks_exact(k)
                .map(|row| {
                    let mx = row.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
                    let mut p: Vec<f64> = row.iter().map(|&x| (x - mx).exp()).collect();
                    let s: f64 = p.iter().sum();
                    for v in p.iter_mut() {
                        *v /= s;
                    }
                    p
                })
                .collect();
            acc += extrinsic_information(&tables, k_tcm);
        }
        points.push(ExitPoint {
            i_a: ia,
            i_e: acc / n_blocks as f64,
        });
    }
    Ok(points)
}

/// Measured decoding trajectory: extrinsic information of each constituent
/// output over the iterations of the actual iterative decoder, averaged over
/// simulated blocks. Entry `i` corresponds to half-iteration `i` (the
/// trajectory starts from zero a priori information).
#[allow(clippy::too_many_arguments)]
pub fn exit_trajectory(
    tc: &TurboCode,
    cfg: &ImConfig,
    corr: &CorrelationMatrix<Real>,
    noise_var: Real,
    constellation: &QamConstellation<Real>,
    n_iters: usize,
    n_blocks: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<(usize, f64)>> {
    let b = check_turbo_im_shape(tc, cfg)?;
    let k_tcm = b as f64;
    let mut acc = vec![0.0f64; 2 * n_iters];
    for _ in 0..n_blocks {
        let blk = simulate_block(tc, cfg, corr, noise_var, constellation, rng)?;
        let out = turbo_decode_traced(tc, &blk.llrs, n_iters, DecodeAlgo::LogMap)?;
        for st in &out.trace {
            acc[st.half_iteration] += extrinsic_information(&st.tables, k_tcm);
        }
    }
    Ok(acc
        .into_iter()
        .enumerate()
        .map(|(i, v)| (i, v / n_blocks as f64))
        .collect())
}
