//! Special functions, Gauss–Legendre quadrature and the small dense
//! linear-algebra kernels shared by the analytical operations.

use num_complex::Complex;

use crate::{Error, Result, Scalar};

// --- Bessel J0 -------------------------------------------------------------

// Rational approximations from Cephes (Moshier), ~4e-16 peak error.
// polevl/p1evl follow the Cephes conventions: coefficients in decreasing
// degree order, p1evl with an implicit leading 1.

static J0_RP: [f64; 4] = [
    -4.794_432_209_782_018e9,
    1.956_174_919_465_565_7e12,
    -2.492_483_443_609_677_2e14,
    9.708_622_510_473_064e15,
];
static J0_RQ: [f64; 8] = [
    4.995_631_471_526_51e2,
    1.737_854_016_763_747e5,
    4.844_096_583_399_621e7,
    1.118_555_370_453_568_3e10,
    2.112_775_201_154_892e12,
    3.105_182_298_574_225_6e14,
    3.181_219_559_432_049_6e16,
    1.710_862_940_810_431_5e18,
];
static J0_PP: [f64; 7] = [
    7.969_367_292_973_471e-4,
    8.283_523_921_074_408e-2,
    1.239_533_716_464_143,
    5.447_250_030_587_687,
    8.747_165_001_998_17,
    5.303_240_382_353_949,
    1.0,
];
static J0_PQ: [f64; 7] = [
    9.244_088_105_588_637e-4,
    8.562_884_743_544_745e-2,
    1.253_527_439_010_589_5,
    5.470_977_403_304_171,
    8.761_908_832_370_695,
    5.306_052_882_353_947,
    1.0,
];
static J0_QP: [f64; 8] = [
    -1.136_638_388_984_691_6e-2,
    -1.282_527_186_705_093_1,
    -1.955_395_442_577_359_7e1,
    -9.320_601_521_237_683e1,
    -1.776_811_679_804_880_6e2,
    -1.470_775_051_549_511_8e2,
    -5.141_053_267_665_993e1,
    -6.050_143_506_007_285,
];
static J0_QQ: [f64; 7] = [
    6.431_782_561_181_78e1,
    8.564_300_259_769_806e2,
    3.882_401_836_054_016_3e3,
    7.240_467_741_956_525e3,
    5.930_727_011_873_169e3,
    2.062_093_316_603_278_3e3,
    2.420_057_402_402_914e2,
];
// Squares of the first two zeros of J0.
const J0_DR1: f64 = 5.783_185_962_946_784;
const J0_DR2: f64 = 30.471_262_343_662_087;
const SQRT_2_OVER_PI: f64 = 0.797_884_560_802_865_4;

fn polevl<T: Scalar>(x: T, coef: &[f64]) -> T {
    coef.iter().fold(T::zero(), |acc, &c| acc * x + T::of(c))
}

fn p1evl<T: Scalar>(x: T, coef: &[f64]) -> T {
    coef.iter().fold(T::one(), |acc, &c| acc * x + T::of(c))
}

/// Bessel function of the first kind, order zero.
///
/// Absolute error below `1e-12` for `|x| <= 500`.
pub fn bessel_j0<T: Scalar>(x: T) -> Result<T> {
    if !x.is_finite() {
        return Err(Error::NonFinite("bessel_j0"));
    }
    Ok(j0_raw(x))
}

pub(crate) fn j0_raw<T: Scalar>(x: T) -> T {
    let x = x.abs();
    if x <= T::of(5.0) {
        let z = x * x;
        if x < T::of(1e-5) {
            return T::one() - z * T::of(0.25);
        }
        let p = (z - T::of(J0_DR1)) * (z - T::of(J0_DR2));
        p * polevl(z, &J0_RP) / p1evl(z, &J0_RQ)
    } else {
        let w = T::of(5.0) / x;
        let z = w * w;
        let p = polevl(z, &J0_PP) / polevl(z, &J0_PQ);
        let q = polevl(z, &J0_QP) / p1evl(z, &J0_QQ);
        let xn = x - T::of(std::f64::consts::FRAC_PI_4);
        (p * xn.cos() - w * q * xn.sin()) * T::of(SQRT_2_OVER_PI) / x.sqrt()
    }
}

// --- Gaussian Q function ---------------------------------------------------

/// Gaussian tail probability Q(x) = P{N(0,1) > x}.
pub fn gaussian_q<T: Scalar>(x: T) -> Result<T> {
    if !x.is_finite() {
        if x == T::infinity() {
            return Ok(T::zero());
        }
        if x == T::neg_infinity() {
            return Ok(T::one());
        }
        return Err(Error::NonFinite("gaussian_q"));
    }
    Ok(T::of(0.5) * erfc(x / T::SQRT_2()))
}

/// Complementary error function, ~1e-14 relative accuracy on f64.
pub(crate) fn erfc<T: Scalar>(x: T) -> T {
    if x < T::zero() {
        return T::of(2.0) - erfc(-x);
    }
    if x < T::of(3.0) {
        T::one() - erf_series(x)
    } else {
        erfc_continued_fraction(x)
    }
}

// erf(x) = 2/sqrt(pi) * x * exp(-x^2) * sum_k (2x^2)^k / (1*3*...*(2k+1)),
// all terms positive so there is no cancellation.
fn erf_series<T: Scalar>(x: T) -> T {
    let two_x2 = T::of(2.0) * x * x;
    let mut term = T::one();
    let mut sum = T::one();
    let mut k = 1u32;
    loop {
        term = term * two_x2 / T::of((2 * k + 1) as f64);
        sum += term;
        if term <= sum * T::epsilon() || k > 200 {
            break;
        }
        k += 1;
    }
    let two_over_sqrt_pi = T::of(2.0) / T::of(std::f64::consts::PI).sqrt();
    two_over_sqrt_pi * x * (-x * x).exp() * sum
}

// Laplace continued fraction, evaluated backwards with fixed depth:
// erfc(x) = exp(-x^2)/sqrt(pi) * 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
fn erfc_continued_fraction<T: Scalar>(x: T) -> T {
    let mut f = x;
    for n in (1..=80u32).rev() {
        f = x + T::of(n as f64 / 2.0) / f;
    }
    let e = (-x * x).exp();
    e / (T::of(std::f64::consts::PI).sqrt() * f)
}

// --- log-domain helpers ----------------------------------------------------

/// Exact Jacobian logarithm: log(exp(a) + exp(b)).
#[inline]
pub fn maxstar<T: Scalar>(a: T, b: T) -> T {
    if a == T::neg_infinity() {
        return b;
    }
    if b == T::neg_infinity() {
        return a;
    }
    let m = a.max(b);
    m + (-(a - b).abs()).exp().ln_1p()
}

/// Max-log approximation of [`maxstar`].
#[inline]
pub fn maxstar_approx<T: Scalar>(a: T, b: T) -> T {
    a.max(b)
}

// --- quadrature ------------------------------------------------------------

/// Quadrature rule on the open interval (0, pi/2).
#[derive(Debug, Clone)]
pub struct QuadratureRule<T> {
    nodes: Vec<T>,
    weights: Vec<T>,
}

impl<T: Scalar> QuadratureRule<T> {
    /// Gauss–Legendre rule mapped to (0, pi/2). Requires `n >= 16`.
    pub fn gauss_legendre(n: usize) -> Result<Self> {
        if n < 16 {
            return Err(Error::param("nodes", format!("need >= 16 nodes, got {n}")));
        }
        let (xs, ws) = gauss_legendre_unit::<T>(n);
        let quarter_pi = T::of(std::f64::consts::FRAC_PI_4);
        let nodes = xs.iter().map(|&x| quarter_pi * (x + T::one())).collect();
        let weights = ws.iter().map(|&w| w * quarter_pi).collect();
        Ok(Self { nodes, weights })
    }

    /// The 64-node default used by all bound evaluations.
    pub fn default_rule() -> Self {
        Self::gauss_legendre(64).expect("64 >= 16")
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// Integrate `f` over (0, pi/2).
    pub fn integrate(&self, mut f: impl FnMut(T) -> T) -> T {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

// Nodes/weights of the n-point Gauss-Legendre rule on [-1, 1].
fn gauss_legendre_unit<T: Scalar>(n: usize) -> (Vec<T>, Vec<T>) {
    let mut xs = vec![T::zero(); n];
    let mut ws = vec![T::zero(); n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = T::of((std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos());
        let mut dp = T::zero();
        for _ in 0..100 {
            let (p, d) = legendre_and_derivative(n, x);
            dp = d;
            let dx = p / d;
            x = x - dx;
            if dx.abs() <= T::epsilon() * T::of(2.0) * (x.abs() + T::one()) {
                let (_, d2) = legendre_and_derivative(n, x);
                dp = d2;
                break;
            }
        }
        let w = T::of(2.0) / ((T::one() - x * x) * dp * dp);
        xs[i] = -x;
        ws[i] = w;
        xs[n - 1 - i] = x;
        ws[n - 1 - i] = w;
    }
    (xs, ws)
}

fn legendre_and_derivative<T: Scalar>(n: usize, x: T) -> (T, T) {
    let mut p0 = T::one();
    let mut p1 = x;
    for k in 2..=n {
        let kf = T::of(k as f64);
        let p2 = ((T::of(2.0) * kf - T::one()) * x * p1 - (kf - T::one()) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = T::of(n as f64);
    let d = nf * (x * p1 - p0) / (x * x - T::one());
    (p1, d)
}

// --- Craig-form fading average ---------------------------------------------

/// Average pairwise error probability over independent fading intervals:
///
/// (1/pi) * int_0^{pi/2} prod_l (1 + mu_l / (8 sigma_w^2 sin^2 t))^-1 dt
///
/// `noise_var` is the per-real-dimension noise variance, so the single-factor
/// case reduces exactly to [`crate::analysis::pep_closed_form`].
pub fn craig_integral<T: Scalar>(
    factors: &[T],
    noise_var: T,
    rule: &QuadratureRule<T>,
) -> Result<T> {
    let groups: Vec<(T, u32)> = factors.iter().map(|&m| (m, 1)).collect();
    craig_integral_grouped(&groups, noise_var, rule)
}

/// Same as [`craig_integral`] with repeated factors grouped as (mu, count).
pub fn craig_integral_grouped<T: Scalar>(
    groups: &[(T, u32)],
    noise_var: T,
    rule: &QuadratureRule<T>,
) -> Result<T> {
    if groups.is_empty() {
        return Err(Error::param("factors", "empty factor list"));
    }
    if !(noise_var > T::zero()) {
        return Err(Error::param("noise_var", "must be positive"));
    }
    for &(mu, _) in groups {
        if mu < T::zero() || !mu.is_finite() {
            return Err(Error::param("factors", "factors must be finite and >= 0"));
        }
    }
    let denom = T::of(8.0) * noise_var;
    let acc = rule.integrate(|theta| {
        let s2 = theta.sin().powi(2);
        let mut prod = T::one();
        for &(mu, count) in groups {
            prod = prod * (T::one() + mu / (denom * s2)).powi(-(count as i32));
        }
        prod
    });
    Ok(acc / T::PI())
}

// --- small dense matrices --------------------------------------------------

/// Dense square matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![T::zero(); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// A * A^T
    pub fn times_transpose(&self) -> Matrix<T> {
        let n = self.n;
        Matrix::from_fn(n, |i, j| (0..n).map(|k| self[(i, k)] * self[(j, k)]).sum())
    }

    pub fn frobenius_distance(&self, other: &Matrix<T>) -> T {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| (a - b) * (a - b))
            .sum::<T>()
            .sqrt()
    }
}

impl<T> std::ops::Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.n + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.n + j]
    }
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns (eigenvalues, eigenvectors-as-columns) with `a = V diag(l) V^T`.
pub fn sym_eigen<T: Scalar>(a: &Matrix<T>) -> (Vec<T>, Matrix<T>) {
    let n = a.dim();
    let mut a = a.clone();
    let mut v = Matrix::identity(n);
    for _sweep in 0..100 {
        let mut off = T::zero();
        for i in 0..n {
            for j in (i + 1)..n {
                off += a[(i, j)] * a[(i, j)];
            }
        }
        if off.sqrt() <= T::epsilon() * T::of(n as f64) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == T::zero() {
                    continue;
                }
                let tau = (a[(q, q)] - a[(p, p)]) / (T::of(2.0) * apq);
                let t = {
                    let s = if tau >= T::zero() {
                        T::one()
                    } else {
                        -T::one()
                    };
                    s / (tau.abs() + (T::one() + tau * tau).sqrt())
                };
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let eig = (0..n).map(|i| a[(i, i)]).collect();
    (eig, v)
}

// --- rank-one eigenvalue ---------------------------------------------------

/// The sole non-zero eigenvalue of `delta delta^H R`, computed as the
/// quadratic form `delta^H R delta` (real and non-negative for PSD `R`).
pub fn rank_one_eigenvalue<T: Scalar>(delta: &[Complex<T>], corr: &Matrix<T>) -> Result<T> {
    let n = corr.dim();
    if delta.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: delta.len(),
        });
    }
    let mut acc = T::zero();
    for i in 0..n {
        // Re(conj(d_i) * R_ij * d_j) accumulated; imaginary parts cancel by symmetry.
        for j in 0..n {
            let prod = delta[i].conj() * delta[j];
            acc += corr[(i, j)] * prod.re;
        }
    }
    Ok(acc.max(T::zero()))
}
