//! Index-modulation mapping, QAM constellations, joint ML detection and soft
//! LLR demodulation.
//!
//! Bit words are carried in `u32` values, most significant bit first: for a
//! k-bit word the first transmitted bit is bit `k-1` of the integer. The
//! first `log2(N)` bits select the port (natural binary), the remaining
//! `log2(M)` bits select the constellation point through its Gray label.

use num_complex::Complex;

use crate::channel::FadingSample;
use crate::numerics::maxstar;
use crate::{Error, Result, Scalar};

/// LLR magnitudes are clipped here to keep iterated exponentials finite.
pub const LLR_CLIP: f64 = 50.0;

/// Static shape of an IM transmission: port count and modulation order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ImConfig {
    n_ports: usize,
    mod_order: usize,
    n_bits_port: u32,
    n_bits_sym: u32,
}

impl ImConfig {
    pub fn new(n_ports: usize, mod_order: usize) -> Result<Self> {
        if n_ports == 0 || !n_ports.is_power_of_two() {
            return Err(Error::param("n_ports", "must be a power of two"));
        }
        if mod_order < 2 || !mod_order.is_power_of_two() {
            return Err(Error::param("mod_order", "must be a power of two >= 2"));
        }
        Ok(Self {
            n_ports,
            mod_order,
            n_bits_port: n_ports.trailing_zeros(),
            n_bits_sym: mod_order.trailing_zeros(),
        })
    }

    pub fn n_ports(&self) -> usize {
        self.n_ports
    }

    pub fn mod_order(&self) -> usize {
        self.mod_order
    }

    /// log2(N)
    pub fn n_bits_port(&self) -> u32 {
        self.n_bits_port
    }

    /// log2(M)
    pub fn n_bits_sym(&self) -> u32 {
        self.n_bits_sym
    }

    /// Spectral efficiency k = log2(NM) of the uncoded system.
    pub fn bits_per_symbol(&self) -> u32 {
        self.n_bits_port + self.n_bits_sym
    }
}

/// Unit-average-energy rectangular QAM with Gray labeling.
///
/// `points` are stored in lattice order; `label_to_index` maps an
/// `n_bits_sym`-bit Gray label (as an integer, MSB first) to the point index.
#[derive(Debug, Clone)]
pub struct QamConstellation<T> {
    points: Vec<Complex<T>>,
    label_to_index: Vec<usize>,
    index_to_label: Vec<u32>,
}

impl<T: Scalar> QamConstellation<T> {
    pub fn new(mod_order: usize) -> Result<Self> {
        match mod_order {
            2 => Ok(Self {
                // BPSK: bit 0 -> +1, bit 1 -> -1
                points: vec![
                    Complex::new(T::one(), T::zero()),
                    Complex::new(-T::one(), T::zero()),
                ],
                label_to_index: vec![0, 1],
                index_to_label: vec![0, 1],
            }),
            4 | 8 | 16 | 32 | 64 => Ok(Self::rectangular(mod_order)),
            _ => Err(Error::UnsupportedModulation(mod_order)),
        }
    }

    fn rectangular(m: usize) -> Self {
        let bits = m.trailing_zeros();
        let bits_i = bits.div_ceil(2);
        let bits_q = bits / 2;
        let li = 1usize << bits_i;
        let lq = 1usize << bits_q;
        // average energy of odd-integer levels: (L^2-1)/3 per axis
        let energy = ((li * li - 1) as f64 + (lq * lq - 1) as f64) / 3.0;
        let scale = T::of(1.0 / energy.sqrt());
        let level = |k: usize, l: usize| T::of((2 * k) as f64 - (l - 1) as f64);
        let mut points = Vec::with_capacity(m);
        let mut index_to_label = Vec::with_capacity(m);
        let mut label_to_index = vec![0usize; m];
        for ki in 0..li {
            for kq in 0..lq {
                let idx = points.len();
                points.push(Complex::new(level(ki, li) * scale, level(kq, lq) * scale));
                let label = (gray(ki as u32) << bits_q) | gray(kq as u32);
                index_to_label.push(label);
                label_to_index[label as usize] = idx;
            }
        }
        Self {
            points,
            label_to_index,
            index_to_label,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Complex<T>] {
        &self.points
    }

    #[inline]
    pub fn point(&self, index: usize) -> Complex<T> {
        self.points[index]
    }

    #[inline]
    pub fn index_of_label(&self, label: u32) -> usize {
        self.label_to_index[label as usize]
    }

    #[inline]
    pub fn label_of_index(&self, index: usize) -> u32 {
        self.index_to_label[index]
    }
}

#[inline]
fn gray(k: u32) -> u32 {
    k ^ (k >> 1)
}

/// One IM symbol: activated port and constellation point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ImSymbol {
    /// Port index, 0-based (1-based port numbering is `port_idx + 1`).
    pub port_idx: usize,
    /// Constellation point index, 0-based.
    pub sym_idx: usize,
}

impl ImSymbol {
    /// The length-N transmit vector with a single non-zero entry.
    pub fn sparse_vector<T: Scalar>(
        &self,
        cfg: &ImConfig,
        constellation: &QamConstellation<T>,
    ) -> Vec<Complex<T>> {
        let mut v = vec![Complex::new(T::zero(), T::zero()); cfg.n_ports()];
        v[self.port_idx] = constellation.point(self.sym_idx);
        v
    }
}

/// Maps a k-bit word onto (port, constellation point).
pub fn im_map<T: Scalar>(
    word: u32,
    cfg: &ImConfig,
    constellation: &QamConstellation<T>,
) -> Result<ImSymbol> {
    let k = cfg.bits_per_symbol();
    if k < 32 && word >= (1u32 << k) {
        return Err(Error::param("word", format!("exceeds {k} bits")));
    }
    let port_idx = (word >> cfg.n_bits_sym()) as usize;
    let label = word & ((cfg.mod_order() - 1) as u32);
    Ok(ImSymbol {
        port_idx,
        sym_idx: constellation.index_of_label(label),
    })
}

/// Exact inverse of [`im_map`].
pub fn im_demap<T: Scalar>(
    sym: &ImSymbol,
    cfg: &ImConfig,
    constellation: &QamConstellation<T>,
) -> u32 {
    ((sym.port_idx as u32) << cfg.n_bits_sym()) | constellation.label_of_index(sym.sym_idx)
}

/// Joint ML detection: argmin over (port, point) of `|y - h_n s|^2`.
/// Ties break toward the smallest port index, then smallest point index.
pub fn ml_detect<T: Scalar>(
    y: Complex<T>,
    h: &FadingSample<T>,
    cfg: &ImConfig,
    constellation: &QamConstellation<T>,
) -> (usize, usize) {
    debug_assert_eq!(h.len(), cfg.n_ports());
    let mut best = (0usize, 0usize);
    let mut best_metric = T::infinity();
    for n in 0..cfg.n_ports() {
        let hn = h.coeff(n);
        for (v, &s) in constellation.points().iter().enumerate() {
            let metric = (y - hn * s).norm_sqr();
            if metric < best_metric {
                best_metric = metric;
                best = (n, v);
            }
        }
    }
    best
}

/// Sequence estimation over a block. The channel is memoryless across
/// intervals and the sequence metric is separable, so this equals per-interval
/// [`ml_detect`]; the equivalence is the implementation.
pub fn mlse_detect<T: Scalar>(
    ys: &[Complex<T>],
    hs: &[FadingSample<T>],
    cfg: &ImConfig,
    constellation: &QamConstellation<T>,
) -> Result<Vec<(usize, usize)>> {
    if ys.len() != hs.len() {
        return Err(Error::DimensionMismatch {
            expected: ys.len(),
            got: hs.len(),
        });
    }
    Ok(ys
        .iter()
        .zip(hs)
        .map(|(&y, h)| ml_detect(y, h, cfg, constellation))
        .collect())
}

/// Per-bit soft output of the IM demodulator (natural log LLRs, clipped).
#[derive(Debug, Clone)]
pub struct LlrVector<T> {
    pub port_llrs: Vec<T>,
    pub symbol_llrs: Vec<T>,
}

impl<T: Scalar> LlrVector<T> {
    /// All bit LLRs in transmission order: port bits, then symbol bits.
    pub fn word_llrs(&self) -> impl Iterator<Item = T> + '_ {
        self.port_llrs
            .iter()
            .chain(self.symbol_llrs.iter())
            .copied()
    }
}

/// Exact per-bit a posteriori LLRs `log P(bit=1|y) / P(bit=0|y)` under
/// equiprobable symbols, computed with log-sum-exp stabilization.
pub fn compute_llrs<T: Scalar>(
    y: Complex<T>,
    h: &FadingSample<T>,
    cfg: &ImConfig,
    constellation: &QamConstellation<T>,
    noise_var: T,
) -> LlrVector<T> {
    debug_assert!(noise_var > T::zero());
    let np = cfg.n_bits_port() as usize;
    let ns = cfg.n_bits_sym() as usize;
    let neg_inf = T::neg_infinity();
    let mut port_acc = vec![[neg_inf; 2]; np];
    let mut sym_acc = vec![[neg_inf; 2]; ns];
    let inv = (T::of(2.0) * noise_var).recip();
    for n in 0..cfg.n_ports() {
        let hn = h.coeff(n);
        for (v, &s) in constellation.points().iter().enumerate() {
            let metric = -(y - hn * s).norm_sqr() * inv;
            for (i, acc) in port_acc.iter_mut().enumerate() {
                let bit = (n >> (np - 1 - i)) & 1;
                acc[bit] = maxstar(acc[bit], metric);
            }
            let label = constellation.label_of_index(v);
            for (j, acc) in sym_acc.iter_mut().enumerate() {
                let bit = ((label >> (ns - 1 - j)) & 1) as usize;
                acc[bit] = maxstar(acc[bit], metric);
            }
        }
    }
    let clip = T::of(LLR_CLIP);
    let to_llr = |acc: &[T; 2]| (acc[1] - acc[0]).max(-clip).min(clip);
    LlrVector {
        port_llrs: port_acc.iter().map(to_llr).collect(),
        symbol_llrs: sym_acc.iter().map(to_llr).collect(),
    }
}
