//! Recursive systematic convolutional codes: construction from octal
//! generators, encoding with optional termination, hard-decision Viterbi
//! decoding, and weight-enumerator computation (event spectrum and IOWEF).
//!
//! A rate b/(b+1) code is given as `[g_1, ..., g_b, g_r]` in octal with the
//! least significant bit as the D^0 coefficient (the parity-check-polynomial
//! convention of the TCM code tables), g_r being the feedback. The encoder is
//! the observer-canonical systematic realization of
//! `p(D) g_r(D) = sum_i g_i(D) u_i(D)` with 2^v states, v = max degree.

use std::collections::BTreeMap;

use crate::{Error, Result};

/// Transition tables of the 2^v-state, 2^b-input trellis.
#[derive(Debug, Clone)]
pub struct Trellis {
    num_states: usize,
    input_arity: usize,
    next_state: Vec<u16>,
    parity: Vec<u8>,
}

impl Trellis {
    pub fn num_states(&self) -> usize {
        self.num_states
    }

    /// Input bits per step (b).
    pub fn input_arity(&self) -> usize {
        self.input_arity
    }

    /// Number of distinct input words per step.
    pub fn num_inputs(&self) -> usize {
        1 << self.input_arity
    }

    /// (next state, parity bit) for `input` applied in `state`.
    #[inline]
    pub fn step(&self, state: usize, input: u32) -> (usize, u8) {
        let idx = (state << self.input_arity) | input as usize;
        (self.next_state[idx] as usize, self.parity[idx])
    }
}

/// Recursive systematic convolutional code of rate b/(b+1).
#[derive(Debug, Clone)]
pub struct RscCode {
    generators: Vec<u32>,
    input_arity: usize,
    memory: usize,
    trellis: Trellis,
    dist_to_zero: Vec<u8>,
}

impl RscCode {
    /// Builds the code from octal-valued generators, last entry = feedback.
    pub fn new(generators: &[u32]) -> Result<Self> {
        if generators.len() < 2 {
            return Err(Error::param("generators", "need at least two generators"));
        }
        let (&feedback, feedforward) = generators.split_last().unwrap();
        if feedback == 0 {
            return Err(Error::param("generators", "zero feedback polynomial"));
        }
        if feedback & 1 == 0 {
            return Err(Error::param(
                "generators",
                "feedback must have a D^0 tap (odd octal value)",
            ));
        }
        if feedforward.iter().any(|&g| g == 0) {
            return Err(Error::param("generators", "zero feedforward polynomial"));
        }
        let memory = generators
            .iter()
            .map(|&g| (32 - g.leading_zeros() - 1) as usize)
            .max()
            .unwrap();
        if memory == 0 {
            return Err(Error::param("generators", "feedback must have degree >= 1"));
        }
        let b = feedforward.len();
        if memory > 14 || b > 8 {
            return Err(Error::param("generators", "code too large"));
        }
        let num_states = 1usize << memory;
        let num_inputs = 1usize << b;
        let coeff = |g: u32, j: usize| (g >> j) & 1;
        let mut next_state = vec![0u16; num_states * num_inputs];
        let mut parity = vec![0u8; num_states * num_inputs];
        for s in 0..num_states {
            for u in 0..num_inputs as u32 {
                // w_j = sum_i g_i[j] * u_i, with input word MSB = first stream
                let mut w = vec![0u8; memory + 1];
                for (i, &g) in feedforward.iter().enumerate() {
                    let ui = (u >> (b - 1 - i)) & 1;
                    if ui == 1 {
                        for (j, wj) in w.iter_mut().enumerate() {
                            *wj ^= coeff(g, j) as u8;
                        }
                    }
                }
                let sigma = |j: usize| ((s >> (memory - j)) & 1) as u8; // sigma_1..sigma_v
                let p = sigma(1) ^ w[0];
                let mut ns = 0usize;
                for j in 1..=memory {
                    let shifted = if j < memory { sigma(j + 1) } else { 0 };
                    let bit = shifted ^ w[j] ^ (coeff(feedback, j) as u8 & p);
                    ns = (ns << 1) | bit as usize;
                }
                let idx = (s << b) | u as usize;
                next_state[idx] = ns as u16;
                parity[idx] = p;
            }
        }
        let trellis = Trellis {
            num_states,
            input_arity: b,
            next_state,
            parity,
        };
        let dist_to_zero = distances_to_zero(&trellis);
        let reach = dist_to_zero.iter().max().copied().unwrap();
        if reach as usize > memory {
            return Err(Error::param(
                "generators",
                format!("state not zero-terminable in {memory} steps"),
            ));
        }
        Ok(Self {
            generators: generators.to_vec(),
            input_arity: b,
            memory,
            trellis,
            dist_to_zero,
        })
    }

    /// Parses comma-separated octal literals, last entry = feedback.
    pub fn from_octal_str(s: &str) -> Result<Self> {
        let gens: Vec<u32> = s
            .split(',')
            .map(|t| u32::from_str_radix(t.trim(), 8))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::param("generators", format!("bad octal literal: {e}")))?;
        Self::new(&gens)
    }

    pub fn generators(&self) -> &[u32] {
        &self.generators
    }

    /// Input bits per trellis step (the b of rate b/(b+1)).
    pub fn input_arity(&self) -> usize {
        self.input_arity
    }

    /// Output bits per trellis step.
    pub fn output_arity(&self) -> usize {
        self.input_arity + 1
    }

    pub fn memory(&self) -> usize {
        self.memory
    }

    pub fn num_states(&self) -> usize {
        self.trellis.num_states
    }

    pub fn trellis(&self) -> &Trellis {
        &self.trellis
    }

    /// Tail steps appended by terminated encoding.
    pub fn tail_steps(&self) -> usize {
        self.memory
    }

    /// Tail input applied in `state` during termination: steers toward the
    /// zero state along a shortest path, idles once there.
    pub fn tail_input(&self, state: usize) -> u32 {
        if state == 0 {
            return 0;
        }
        let d = self.dist_to_zero[state];
        for u in 0..self.trellis.num_inputs() as u32 {
            let (ns, _) = self.trellis.step(state, u);
            if self.dist_to_zero[ns] + 1 == d {
                return u;
            }
        }
        unreachable!("dist_to_zero is a valid potential");
    }

    /// Encodes `info_bits` (length divisible by b); output per step is the b
    /// systematic bits followed by the parity bit. With `terminate`, `memory`
    /// tail steps drive the register to zero and are included in the output.
    pub fn encode(&self, info_bits: &[u8], terminate: bool) -> Result<Vec<u8>> {
        let b = self.input_arity;
        if info_bits.len() % b != 0 {
            return Err(Error::param(
                "info_bits",
                format!("length {} not divisible by {b}", info_bits.len()),
            ));
        }
        let steps = info_bits.len() / b;
        let tail = if terminate { self.memory } else { 0 };
        let mut out = Vec::with_capacity((steps + tail) * (b + 1));
        let mut state = 0usize;
        for chunk in info_bits.chunks_exact(b) {
            let mut u = 0u32;
            for &bit in chunk {
                u = (u << 1) | bit as u32;
            }
            let (ns, p) = self.trellis.step(state, u);
            out.extend_from_slice(chunk);
            out.push(p);
            state = ns;
        }
        for _ in 0..tail {
            let u = self.tail_input(state);
            let (ns, p) = self.trellis.step(state, u);
            for i in 0..b {
                out.push(((u >> (b - 1 - i)) & 1) as u8);
            }
            out.push(p);
            state = ns;
        }
        if terminate {
            debug_assert_eq!(state, 0);
        }
        Ok(out)
    }

    /// Word-level systematic encode used by the turbo encoder: returns the
    /// parity bit per input word, starting from the zero state, unterminated.
    pub(crate) fn parity_sequence(&self, info_words: &[u32]) -> Vec<u8> {
        let mut state = 0usize;
        info_words
            .iter()
            .map(|&u| {
                let (ns, p) = self.trellis.step(state, u);
                state = ns;
                p
            })
            .collect()
    }

    /// Minimum-Hamming-distance sequence decoding on hard bits. Ties break
    /// toward the lower-numbered predecessor state. With `terminated`, the
    /// last `memory` steps are tail steps (restricted branches, discarded
    /// from the output) and the path must end in the zero state.
    pub fn viterbi_decode_hard(&self, coded: &[u8], terminated: bool) -> Result<Vec<u8>> {
        let b = self.input_arity;
        let step_bits = b + 1;
        if coded.len() % step_bits != 0 {
            return Err(Error::param(
                "coded",
                format!("length {} not divisible by {step_bits}", coded.len()),
            ));
        }
        let steps = coded.len() / step_bits;
        let tail = if terminated { self.memory } else { 0 };
        if steps < tail {
            return Err(Error::param("coded", "shorter than the termination tail"));
        }
        let ns = self.trellis.num_states;
        let big = u32::MAX / 2;
        let mut metric = vec![big; ns];
        metric[0] = 0;
        let mut next_metric = vec![big; ns];
        // packed (prev_state << b) | input, per (step, state)
        let mut back = vec![0u32; steps * ns];
        for step in 0..steps {
            let rx = &coded[step * step_bits..(step + 1) * step_bits];
            next_metric.fill(big);
            let in_tail = step >= steps - tail;
            for s in 0..ns {
                let m0 = metric[s];
                if m0 >= big {
                    continue;
                }
                let inputs: Box<dyn Iterator<Item = u32>> = if in_tail {
                    Box::new(std::iter::once(self.tail_input(s)))
                } else {
                    Box::new(0..self.trellis.num_inputs() as u32)
                };
                for u in inputs {
                    let (nxt, p) = self.trellis.step(s, u);
                    let mut bm = (p != rx[b]) as u32;
                    for (i, &r) in rx.iter().take(b).enumerate() {
                        bm += (((u >> (b - 1 - i)) & 1) as u8 != r) as u32;
                    }
                    let cand = m0 + bm;
                    if cand < next_metric[nxt] {
                        next_metric[nxt] = cand;
                        back[step * ns + nxt] = (s as u32) << b | u;
                    }
                }
            }
            std::mem::swap(&mut metric, &mut next_metric);
        }
        let mut state = if terminated {
            0
        } else {
            let mut best = 0;
            for s in 1..ns {
                if metric[s] < metric[best] {
                    best = s;
                }
            }
            best
        };
        if metric[state] >= big {
            return Err(Error::param("coded", "no surviving path"));
        }
        let mut inputs = vec![0u32; steps];
        for step in (0..steps).rev() {
            let packed = back[step * ns + state];
            inputs[step] = packed & ((1 << b) - 1);
            state = (packed >> b) as usize;
        }
        let mut info = Vec::with_capacity((steps - tail) * b);
        for &u in inputs.iter().take(steps - tail) {
            for i in 0..b {
                info.push(((u >> (b - 1 - i)) & 1) as u8);
            }
        }
        Ok(info)
    }
}

fn distances_to_zero(trellis: &Trellis) -> Vec<u8> {
    let ns = trellis.num_states;
    let mut dist = vec![u8::MAX; ns];
    dist[0] = 0;
    // reverse BFS from the zero state
    let mut frontier = vec![0usize];
    let mut level = 0u8;
    while !frontier.is_empty() {
        level += 1;
        let mut next = Vec::new();
        for s in 0..ns {
            if dist[s] != u8::MAX {
                continue;
            }
            for u in 0..trellis.num_inputs() as u32 {
                let (t, _) = trellis.step(s, u);
                if frontier.contains(&t) || (dist[t] != u8::MAX && dist[t] < level) {
                    dist[s] = level;
                    next.push(s);
                    break;
                }
            }
        }
        frontier = next;
        if level as usize > ns {
            break;
        }
    }
    dist
}

// --- weight enumerators ------------------------------------------------------

/// Error-event spectrum: number of trellis paths that leave the zero state
/// once and remerge once, indexed by total output Hamming weight.
#[derive(Debug, Clone)]
pub struct EventSpectrum {
    d_free: usize,
    coeffs: BTreeMap<usize, u128>,
    #[allow(dead_code)] // consumed by the block-code consistency tests
    by_length: BTreeMap<(usize, usize), u128>,
}

impl EventSpectrum {
    /// Free distance of the code.
    pub fn d_free(&self) -> usize {
        self.d_free
    }

    /// a_d: number of error events with output weight `d`.
    pub fn coefficient(&self, d: usize) -> u128 {
        self.coeffs.get(&d).copied().unwrap_or(0)
    }

    /// Non-zero (d, a_d) pairs in increasing d.
    pub fn coefficients(&self) -> impl Iterator<Item = (usize, u128)> + '_ {
        self.coeffs.iter().map(|(&d, &a)| (d, a))
    }

    /// The first `n` non-zero terms.
    pub fn leading_terms(&self, n: usize) -> Vec<(usize, u128)> {
        self.coefficients().take(n).collect()
    }

    /// (d, event length in steps) -> count; used for block-code consistency.
    #[cfg(test)]
    pub(crate) fn by_length(&self) -> &BTreeMap<(usize, usize), u128> {
        &self.by_length
    }
}

/// Enumerates error events by breadth-first expansion over the state diagram
/// with output-weight pruning at `d_max`.
pub fn compute_wef(code: &RscCode, d_max: usize) -> Result<EventSpectrum> {
    if d_max > 40 {
        return Err(Error::param("d_max", "tractability bound is 40"));
    }
    let t = code.trellis();
    let mut coeffs: BTreeMap<usize, u128> = BTreeMap::new();
    let mut by_length: BTreeMap<(usize, usize), u128> = BTreeMap::new();
    // partial paths keyed by (state, accumulated weight)
    let mut frontier: BTreeMap<(usize, usize), u128> = BTreeMap::new();
    for u in 1..t.num_inputs() as u32 {
        let (ns, p) = t.step(0, u);
        let d = u.count_ones() as usize + p as usize;
        if d > d_max {
            continue;
        }
        if ns == 0 {
            *coeffs.entry(d).or_default() += 1;
            *by_length.entry((d, 1)).or_default() += 1;
        } else {
            *frontier.entry((ns, d)).or_default() += 1;
        }
    }
    let max_len = (d_max + 2) * (code.memory() + 1);
    let mut len = 1usize;
    while !frontier.is_empty() {
        len += 1;
        if len > max_len {
            return Err(Error::param("d_max", "event enumeration did not terminate"));
        }
        let mut next: BTreeMap<(usize, usize), u128> = BTreeMap::new();
        for (&(s, d), &cnt) in &frontier {
            for u in 0..t.num_inputs() as u32 {
                let (ns, p) = t.step(s, u);
                let nd = d + u.count_ones() as usize + p as usize;
                if nd > d_max {
                    continue;
                }
                if ns == 0 {
                    *coeffs.entry(nd).or_default() += cnt;
                    *by_length.entry((nd, len)).or_default() += cnt;
                } else {
                    *next.entry((ns, nd)).or_default() += cnt;
                }
            }
        }
        frontier = next;
    }
    let d_free = coeffs
        .iter()
        .find(|(_, &a)| a > 0)
        .map(|(&d, _)| d)
        .ok_or_else(|| Error::param("d_max", "no error event within d_max"))?;
    Ok(EventSpectrum {
        d_free,
        coeffs,
        by_length,
    })
}

/// Input-output weight enumerator of the length-`block_len` truncated block
/// code: counts of input words by (input weight w, parity weight z), with
/// systematic weight u == w, truncated at (w_max, z_max).
#[derive(Debug, Clone)]
pub struct WeightEnumerator {
    block_len: usize,
    input_arity: usize,
    w_max: u32,
    z_max: u32,
    counts: BTreeMap<(u32, u32), u128>,
}

impl WeightEnumerator {
    pub fn block_len(&self) -> usize {
        self.block_len
    }

    pub fn input_arity(&self) -> usize {
        self.input_arity
    }

    pub fn w_max(&self) -> u32 {
        self.w_max
    }

    pub fn z_max(&self) -> u32 {
        self.z_max
    }

    /// B_{w,u,z} with u == w.
    pub fn count(&self, w: u32, z: u32) -> u128 {
        self.counts.get(&(w, z)).copied().unwrap_or(0)
    }

    /// Non-zero ((w, z), count) terms.
    pub fn terms(&self) -> impl Iterator<Item = ((u32, u32), u128)> + '_ {
        self.counts.iter().map(|(&k, &v)| (k, v))
    }
}

/// Dynamic program over (step, state, w, z); equivalent to the augmented
/// state diagram evaluated at path length `block_len`, all end states.
pub fn compute_iowef(
    code: &RscCode,
    block_len: usize,
    w_max: u32,
    z_max: u32,
) -> Result<WeightEnumerator> {
    iowef_table(code, block_len, w_max, z_max, false)
}

pub(crate) fn iowef_table(
    code: &RscCode,
    block_len: usize,
    w_max: u32,
    z_max: u32,
    only_zero_final: bool,
) -> Result<WeightEnumerator> {
    if block_len == 0 {
        return Err(Error::param("block_len", "must be positive"));
    }
    let t = code.trellis();
    let ns = t.num_states();
    let wd = w_max as usize + 1;
    let zd = z_max as usize + 1;
    let idx = |s: usize, w: usize, z: usize| (s * wd + w) * zd + z;
    let mut cur = vec![0u128; ns * wd * zd];
    let mut nxt = vec![0u128; ns * wd * zd];
    cur[idx(0, 0, 0)] = 1;
    for _ in 0..block_len {
        nxt.fill(0);
        for s in 0..ns {
            for w in 0..wd {
                for z in 0..zd {
                    let c = cur[idx(s, w, z)];
                    if c == 0 {
                        continue;
                    }
                    for u in 0..t.num_inputs() as u32 {
                        let (s2, p) = t.step(s, u);
                        let w2 = w + u.count_ones() as usize;
                        let z2 = z + p as usize;
                        if w2 >= wd || z2 >= zd {
                            continue;
                        }
                        let slot = &mut nxt[idx(s2, w2, z2)];
                        *slot = slot.checked_add(c).ok_or_else(|| {
                            Error::param("w_max", "count overflow; reduce truncation limits")
                        })?;
                    }
                }
            }
        }
        std::mem::swap(&mut cur, &mut nxt);
    }
    let mut counts = BTreeMap::new();
    let states: Box<dyn Iterator<Item = usize>> = if only_zero_final {
        Box::new(std::iter::once(0))
    } else {
        Box::new(0..ns)
    };
    for s in states {
        for w in 0..wd {
            for z in 0..zd {
                let c = cur[idx(s, w, z)];
                if c > 0 {
                    *counts.entry((w as u32, z as u32)).or_default() += c;
                }
            }
        }
    }
    Ok(WeightEnumerator {
        block_len,
        input_arity: code.input_arity(),
        w_max,
        z_max,
        counts,
    })
}

/// Natural-binary map from coded port bits (MSB first) to the 0-based port
/// index; realizes the set partitioning of the spatial SPC scheme.
pub fn spc_port_map(coded_port_bits: u32, n_bits_port: u32) -> Result<usize> {
    if n_bits_port < 32 && coded_port_bits >= (1 << n_bits_port) {
        return Err(Error::param(
            "coded_port_bits",
            format!("exceeds {n_bits_port} bits"),
        ));
    }
    Ok(coded_port_bits as usize)
}
