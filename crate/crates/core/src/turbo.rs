//! Parallel-concatenated convolutional (turbo) coding: symbol interleaving,
//! word-level iterative log-MAP decoding, and the uniform-interleaver weight
//! enumerator combination.
//!
//! Each trellis step carries one b-bit info word; both constituents are the
//! same rate b/(b+1) [`RscCode`]. Per interval the transmitted word is
//! `[u, p1, p2]` (b + 2 bits). Constituent trellises are left unterminated;
//! the backward recursion starts uniform.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::conv::{RscCode, WeightEnumerator};
use crate::numerics::{maxstar, maxstar_approx};
use crate::{Error, Result, Scalar};

/// Symbol-level interleaver: a seeded permutation of block positions.
#[derive(Debug, Clone)]
pub struct Interleaver {
    perm: Vec<u32>,
    inv: Vec<u32>,
    seed: u64,
}

impl Interleaver {
    /// Uniform random permutation drawn from a ChaCha stream.
    pub fn random(len: usize, seed: u64) -> Self {
        let mut perm: Vec<u32> = (0..len as u32).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x696e_746c_7672); // "intlvr"
        perm.shuffle(&mut rng);
        Self::from_perm(perm, seed)
    }

    pub fn identity(len: usize) -> Self {
        Self::from_perm((0..len as u32).collect(), 0)
    }

    fn from_perm(perm: Vec<u32>, seed: u64) -> Self {
        let mut inv = vec![0u32; perm.len()];
        for (i, &p) in perm.iter().enumerate() {
            inv[p as usize] = i as u32;
        }
        Self { perm, inv, seed }
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// interleaved[i] = src[perm[i]]
    pub fn apply<T: Copy>(&self, src: &[T]) -> Vec<T> {
        debug_assert_eq!(src.len(), self.perm.len());
        self.perm.iter().map(|&p| src[p as usize]).collect()
    }

    /// Inverse permutation; `invert(apply(x)) == x`.
    pub fn invert<T: Copy>(&self, src: &[T]) -> Vec<T> {
        debug_assert_eq!(src.len(), self.inv.len());
        self.inv.iter().map(|&p| src[p as usize]).collect()
    }

    #[inline]
    pub fn source_of(&self, i: usize) -> usize {
        self.perm[i] as usize
    }
}

/// Parallel concatenation of two identical RSC constituents through a
/// symbol interleaver; overall rate b/(b+2).
#[derive(Debug, Clone)]
pub struct TurboCode {
    constituent: RscCode,
    interleaver: Interleaver,
}

impl TurboCode {
    pub fn new(constituent: RscCode, interleaver: Interleaver) -> Result<Self> {
        if interleaver.is_empty() {
            return Err(Error::param("interleaver", "empty interleaver"));
        }
        Ok(Self {
            constituent,
            interleaver,
        })
    }

    pub fn constituent(&self) -> &RscCode {
        &self.constituent
    }

    pub fn interleaver(&self) -> &Interleaver {
        &self.interleaver
    }

    /// Info bits per trellis step (the k of rate k/(k+2)).
    pub fn info_bits_per_word(&self) -> usize {
        self.constituent.input_arity()
    }

    /// Coded bits per transmitted word: b systematic + two parity bits.
    pub fn coded_bits_per_word(&self) -> usize {
        self.constituent.input_arity() + 2
    }

    pub fn block_len(&self) -> usize {
        self.interleaver.len()
    }

    /// Encodes one block of `block_len` info words into `[u, p1, p2]` words.
    pub fn encode(&self, info_words: &[u32]) -> Result<Vec<u32>> {
        let ell = self.block_len();
        if info_words.len() != ell {
            return Err(Error::DimensionMismatch {
                expected: ell,
                got: info_words.len(),
            });
        }
        let b = self.constituent.input_arity();
        let cap = 1u32 << b;
        if info_words.iter().any(|&u| u >= cap) {
            return Err(Error::param("info_words", format!("word exceeds {b} bits")));
        }
        let p1 = self.constituent.parity_sequence(info_words);
        let interleaved = self.interleaver.apply(info_words);
        let p2_perm = self.constituent.parity_sequence(&interleaved);
        // p2 belongs to the interval its systematic word is transmitted in
        let p2 = self.interleaver.invert(&p2_perm);
        Ok(info_words
            .iter()
            .zip(p1.iter().zip(&p2))
            .map(|(&u, (&a, &c))| (u << 2) | ((a as u32) << 1) | c as u32)
            .collect())
    }
}

/// Decoder flavour.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecodeAlgo {
    /// Exact log-MAP (Jacobian logarithm).
    LogMap,
    /// Max-log approximation.
    MaxLogMap,
}

impl DecodeAlgo {
    #[inline]
    fn combine<T: Scalar>(self, a: T, b: T) -> T {
        match self {
            DecodeAlgo::LogMap => maxstar(a, b),
            DecodeAlgo::MaxLogMap => maxstar_approx(a, b),
        }
    }
}

/// Normalized extrinsic symbol-probability tables after one half-iteration.
#[derive(Debug, Clone)]
pub struct ExtrinsicState<T> {
    /// 0-based half-iteration counter (decoder 1 emits even entries).
    pub half_iteration: usize,
    /// One probability table of size 2^b per block position.
    pub tables: Vec<Vec<T>>,
}

/// Output of the iterative decoder.
#[derive(Debug)]
pub struct TurboDecodeOutput<T> {
    /// Final hard decisions, one b-bit word per position.
    pub decisions: Vec<u32>,
    /// Hard decisions after each full iteration.
    pub per_iteration_decisions: Vec<Vec<u32>>,
    /// Extrinsic trace (empty unless the traced entry point is used).
    pub trace: Vec<ExtrinsicState<T>>,
}

/// Posterior / extrinsic word logits of one constituent decoder.
pub struct ConstituentOutput<T> {
    pub posterior: Vec<T>,
    pub extrinsic: Vec<T>,
}

/// One constituent BCJR pass in the log domain (unterminated: uniform final
/// state). All tables are flattened `[position][input word]` of size
/// `len * 2^b`, except `parity_llr` (one entry per position). Outputs are
/// normalized to max = 0 per position. The extrinsic removes prior and
/// systematic contributions, keeping parity and trellis structure.
pub fn constituent_decode<T: Scalar>(
    code: &RscCode,
    sys_metric: &[T],
    parity_llr: &[T],
    prior: &[T],
    algo: DecodeAlgo,
) -> ConstituentOutput<T> {
    let t = code.trellis();
    let ns = t.num_states();
    let k = t.num_inputs();
    let len = parity_llr.len();
    debug_assert_eq!(sys_metric.len(), len * k);
    debug_assert_eq!(prior.len(), len * k);
    let neg_inf = T::neg_infinity();

    let gamma = |l: usize, s: usize, u: usize| -> (T, usize) {
        let (s2, p) = t.step(s, u as u32);
        let mut g = sys_metric[l * k + u] + prior[l * k + u];
        if p == 1 {
            g += parity_llr[l];
        }
        (g, s2)
    };

    // forward
    let mut alpha = vec![neg_inf; (len + 1) * ns];
    alpha[0] = T::zero();
    for l in 0..len {
        let (head, tail) = alpha.split_at_mut((l + 1) * ns);
        let cur = &head[l * ns..];
        let nxt = &mut tail[..ns];
        for s in 0..ns {
            if cur[s] == neg_inf {
                continue;
            }
            for u in 0..k {
                let (g, s2) = gamma(l, s, u);
                nxt[s2] = algo.combine(nxt[s2], cur[s] + g);
            }
        }
        let m = nxt.iter().fold(neg_inf, |a, &b| a.max(b));
        for v in nxt.iter_mut() {
            *v -= m;
        }
    }

    // backward, uniform start
    let mut beta = vec![T::zero(); (len + 1) * ns];
    for l in (0..len).rev() {
        let (head, tail) = beta.split_at_mut((l + 1) * ns);
        let cur = &mut head[l * ns..];
        let nxt = &tail[..ns];
        for (s, slot) in cur.iter_mut().enumerate() {
            let mut acc = neg_inf;
            for u in 0..k {
                let (g, s2) = gamma(l, s, u);
                acc = algo.combine(acc, g + nxt[s2]);
            }
            *slot = acc;
        }
        let m = cur.iter().fold(neg_inf, |a, &b| a.max(b));
        for v in cur.iter_mut() {
            *v -= m;
        }
    }

    let mut posterior = vec![neg_inf; len * k];
    let mut extrinsic = vec![T::zero(); len * k];
    for l in 0..len {
        for u in 0..k {
            let mut acc = neg_inf;
            for s in 0..ns {
                let a = alpha[l * ns + s];
                if a == neg_inf {
                    continue;
                }
                let (g, s2) = gamma(l, s, u);
                acc = algo.combine(acc, a + g + beta[(l + 1) * ns + s2]);
            }
            posterior[l * k + u] = acc;
        }
        let row = &mut posterior[l * k..(l + 1) * k];
        let m = row.iter().fold(neg_inf, |a, &b| a.max(b));
        for v in row.iter_mut() {
            *v -= m;
        }
        for u in 0..k {
            extrinsic[l * k + u] = posterior[l * k + u] - prior[l * k + u] - sys_metric[l * k + u];
        }
        let row = &mut extrinsic[l * k..(l + 1) * k];
        let m = row.iter().fold(neg_inf, |a, &b| a.max(b));
        for v in row.iter_mut() {
            *v -= m;
        }
    }
    ConstituentOutput {
        posterior,
        extrinsic,
    }
}

/// Systematic word metrics `sum_{j: bit j of u set} llr_j` from per-bit LLRs
/// (MSB first), one entry per input word value.
pub fn word_metrics_from_bits<T: Scalar>(bit_llrs: &[T]) -> Vec<T> {
    let b = bit_llrs.len();
    let k = 1usize << b;
    (0..k)
        .map(|u| {
            let mut m = T::zero();
            for (j, &l) in bit_llrs.iter().enumerate() {
                if (u >> (b - 1 - j)) & 1 == 1 {
                    m += l;
                }
            }
            m
        })
        .collect()
}

/// Iterative turbo decoding from per-bit channel LLRs.
///
/// `channel_llrs[l]` holds the b + 2 LLRs of interval `l` in transmission
/// order `[u_1 .. u_b, p1, p2]`.
pub fn turbo_decode<T: Scalar>(
    tc: &TurboCode,
    channel_llrs: &[Vec<T>],
    n_iters: usize,
    algo: DecodeAlgo,
) -> Result<TurboDecodeOutput<T>> {
    decode_inner(tc, channel_llrs, n_iters, algo, false)
}

/// As [`turbo_decode`], additionally recording the normalized extrinsic
/// probability tables of every half-iteration (for EXIT evaluation).
pub fn turbo_decode_traced<T: Scalar>(
    tc: &TurboCode,
    channel_llrs: &[Vec<T>],
    n_iters: usize,
    algo: DecodeAlgo,
) -> Result<TurboDecodeOutput<T>> {
    decode_inner(tc, channel_llrs, n_iters, algo, true)
}

fn decode_inner<T: Scalar>(
    tc: &TurboCode,
    channel_llrs: &[Vec<T>],
    n_iters: usize,
    algo: DecodeAlgo,
    record_trace: bool,
) -> Result<TurboDecodeOutput<T>> {
    let ell = tc.block_len();
    let b = tc.info_bits_per_word();
    let k = 1usize << b;
    if channel_llrs.len() != ell {
        return Err(Error::DimensionMismatch {
            expected: ell,
            got: channel_llrs.len(),
        });
    }
    if n_iters == 0 {
        return Err(Error::param("n_iters", "need at least one iteration"));
    }
    if channel_llrs.iter().any(|v| v.len() != b + 2) {
        return Err(Error::param(
            "channel_llrs",
            format!("each interval needs {} LLRs", b + 2),
        ));
    }
    let code = tc.constituent();
    let pi = tc.interleaver();

    let mut sys = vec![T::zero(); ell * k];
    let mut p1 = vec![T::zero(); ell];
    let mut p2_nat = vec![T::zero(); ell];
    for l in 0..ell {
        let wm = word_metrics_from_bits(&channel_llrs[l][..b]);
        sys[l * k..(l + 1) * k].copy_from_slice(&wm);
        p1[l] = channel_llrs[l][b];
        p2_nat[l] = channel_llrs[l][b + 1];
    }
    // decoder 2 works in interleaved order
    let mut sys2 = vec![T::zero(); ell * k];
    let mut p2 = vec![T::zero(); ell];
    for i in 0..ell {
        let src = pi.source_of(i);
        sys2[i * k..(i + 1) * k].copy_from_slice(&sys[src * k..(src + 1) * k]);
        p2[i] = p2_nat[src];
    }

    let mut ext1 = vec![T::zero(); ell * k]; // natural order
    let mut ext2 = vec![T::zero(); ell * k]; // natural order
    let mut prior = vec![T::zero(); ell * k];
    let mut trace = Vec::new();
    let mut per_iteration_decisions = Vec::with_capacity(n_iters);

    for iter in 0..n_iters {
        prior.copy_from_slice(&ext2);
        let out1 = constituent_decode(code, &sys, &p1, &prior, algo);
        ext1.copy_from_slice(&out1.extrinsic);
        if record_trace {
            trace.push(ExtrinsicState {
                half_iteration: 2 * iter,
                tables: normalized_tables(&ext1, k),
            });
        }
        for i in 0..ell {
            let src = pi.source_of(i);
            prior[i * k..(i + 1) * k].copy_from_slice(&ext1[src * k..(src + 1) * k]);
        }
        let out2 = constituent_decode(code, &sys2, &p2, &prior, algo);
        for i in 0..ell {
            let src = pi.source_of(i);
            ext2[src * k..(src + 1) * k].copy_from_slice(&out2.extrinsic[i * k..(i + 1) * k]);
        }
        if record_trace {
            trace.push(ExtrinsicState {
                half_iteration: 2 * iter + 1,
                tables: normalized_tables(&ext2, k),
            });
        }
        per_iteration_decisions.push(hard_decisions(&sys, &ext1, &ext2, k));
    }
    let decisions = per_iteration_decisions.last().unwrap().clone();
    Ok(TurboDecodeOutput {
        decisions,
        per_iteration_decisions,
        trace,
    })
}

fn hard_decisions<T: Scalar>(sys: &[T], ext1: &[T], ext2: &[T], k: usize) -> Vec<u32> {
    let ell = sys.len() / k;
    (0..ell)
        .map(|l| {
            let mut best = 0usize;
            let mut bm = T::neg_infinity();
            for u in 0..k {
                let m = sys[l * k + u] + ext1[l * k + u] + ext2[l * k + u];
                if m > bm {
                    bm = m;
                    best = u;
                }
            }
            best as u32
        })
        .collect()
}

fn normalized_tables<T: Scalar>(logits: &[T], k: usize) -> Vec<Vec<T>> {
    logits
        .chunks_exact(k)
        .map(|row| {
            let m = row.iter().fold(T::neg_infinity(), |a, &b| a.max(b));
            let mut p: Vec<T> = row.iter().map(|&x| (x - m).exp()).collect();
            let s: T = p.iter().copied().sum();
            for v in p.iter_mut() {
                *v /= s;
            }
            p
        })
        .collect()
}

// --- uniform-interleaver weight enumerator -----------------------------------

/// Conditional weight enumerator of the turbo code under the uniform
/// interleaver: average codeword counts by (input weight w, total parity
/// weight z), systematic weight u == w.
#[derive(Debug, Clone)]
pub struct TurboCwef {
    block_len: usize,
    input_bits: usize,
    terms: BTreeMap<(u32, u32), f64>,
}

impl TurboCwef {
    pub fn block_len(&self) -> usize {
        self.block_len
    }

    /// Total input bits n = block_len * b, the base of the 1/C(n, w) factor.
    pub fn input_bits(&self) -> usize {
        self.input_bits
    }

    pub fn term(&self, w: u32, z: u32) -> f64 {
        self.terms.get(&(w, z)).copied().unwrap_or(0.0)
    }

    pub fn terms(&self) -> impl Iterator<Item = ((u32, u32), f64)> + '_ {
        self.terms.iter().map(|(&k, &v)| (k, v))
    }

    pub fn is_trivial(&self) -> bool {
        self.terms.iter().all(|(&(w, _), _)| w == 0)
    }
}

/// Exact binomial coefficient in f64.
pub(crate) fn binomial(n: usize, w: usize) -> f64 {
    if w > n {
        return 0.0;
    }
    let w = w.min(n - w);
    let mut acc = 1.0f64;
    for i in 0..w {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// Combines two constituent IOWEFs through the uniform-interleaver average:
/// `B^T_w(Z) = B^{C1}_w(Z) * B^{C2}_w(U=1, Z) * w!(n-w)!/n!` with n = total
/// input bits. Only parity is taken from the second constituent.
pub fn turbo_cwef(
    c1: &WeightEnumerator,
    c2: &WeightEnumerator,
    block_len: usize,
    w_max: u32,
    z_max: u32,
) -> Result<TurboCwef> {
    if c1.block_len() != block_len || c2.block_len() != block_len {
        return Err(Error::DimensionMismatch {
            expected: block_len,
            got: c1.block_len().min(c2.block_len()),
        });
    }
    if c1.input_arity() != c2.input_arity() {
        return Err(Error::param("iowef", "constituent input arities differ"));
    }
    let n = block_len * c1.input_arity();
    let mut by_w1: BTreeMap<u32, Vec<(u32, f64)>> = BTreeMap::new();
    for ((w, z), c) in c1.terms() {
        by_w1.entry(w).or_default().push((z, c as f64));
    }
    let mut by_w2: BTreeMap<u32, Vec<(u32, f64)>> = BTreeMap::new();
    for ((w, z), c) in c2.terms() {
        by_w2.entry(w).or_default().push((z, c as f64));
    }
    let mut terms: BTreeMap<(u32, u32), f64> = BTreeMap::new();
    for (&w, list1) in by_w1.range(..=w_max) {
        let Some(list2) = by_w2.get(&w) else {
            continue;
        };
        let denom = binomial(n, w as usize);
        for &(z1, a) in list1 {
            for &(z2, b) in list2 {
                let z = z1 + z2;
                if z <= z_max {
                    *terms.entry((w, z)).or_default() += a * b / denom;
                }
            }
        }
    }
    Ok(TurboCwef {
        block_len,
        input_bits: n,
        terms,
    })
}
