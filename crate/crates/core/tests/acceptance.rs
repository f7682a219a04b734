//! Acceptance suite: one test per criterion, printing a pass/fail line per
//! checked part. Tolerances and thresholds are pinned in code.
//!
//! A few checks pin externally reported reference targets that the
//! implemented channel equations do not support; they fail deliberately and
//! the failure messages carry the measured numbers.

use imfa_core::analysis::*;
use imfa_core::channel::{sample_channel, sample_noise, CorrelationMatrix};
use imfa_core::conv::{compute_iowef, compute_wef, RscCode};
use imfa_core::im::{im_demap, im_map, ImConfig, QamConstellation};
use imfa_core::sim::*;
use imfa_core::turbo::{turbo_cwef, Interleaver, TurboCode};
use imfa_core::{Constellation, Correlation, Quadrature};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Criterion {
    id: usize,
    failures: Vec<String>,
}

impl Criterion {
    fn new(id: usize, title: &str) -> Self {
        println!("=== criterion {id}: {title}");
        Self {
            id,
            failures: Vec::new(),
        }
    }

    fn part(&mut self, name: &str, pass: bool, detail: String) {
        let tag = if pass { "PASS" } else { "FAIL" };
        println!("criterion {} [{}] {}: {}", self.id, tag, name, detail);
        if !pass {
            self.failures.push(format!("{name}: {detail}"));
        }
    }

    fn finish(self) {
        assert!(
            self.failures.is_empty(),
            "criterion {} failed: {}",
            self.id,
            self.failures.join(" | ")
        );
    }
}

fn snr_at_ber(points: &[(f64, f64)], target: f64) -> Option<f64> {
    for w in points.windows(2) {
        let (s0, b0) = w[0];
        let (s1, b1) = w[1];
        if b0 >= target && b1 <= target && b1 > 0.0 && b0 > 0.0 {
            let t = (b0.ln() - target.ln()) / (b0.ln() - b1.ln());
            return Some(s0 + t * (s1 - s0));
        }
    }
    None
}

fn curve_points(c: &BerCurve) -> Vec<(f64, f64)> {
    c.points.iter().map(|p| (p.snr_db, p.ber)).collect()
}

fn grid(start: f64, step: f64, stop: f64) -> Vec<f64> {
    let mut g = Vec::new();
    let mut x = start;
    while x <= stop + 1e-9 {
        g.push(x);
        x += step;
    }
    g
}

// Criterion 1: exact leading weight-enumerator coefficients of the rate-3/4
// [13,15,17,11]_8 code, zero tolerance. The reference expansion lists
// a7 = 720 and a8 = 3472; the code's true spectrum (verified against an
// independent exact series solve of the state equations, brute-force event
// enumeration and an exhaustive search over all eight-state rate-3/4
// generator sets) has a7 = 708 and a8 = 3424, so those two sub-checks
// document a defect of the reference expansion.
#[test]
fn c01_wef_exactness() {
    let mut c = Criterion::new(1, "WEF exactness for [13,15,17,11]");
    let start = std::time::Instant::now();
    let code = RscCode::new(&[0o13, 0o15, 0o17, 0o11]).unwrap();
    let spec = compute_wef(&code, 10).unwrap();
    c.part(
        "d_free",
        spec.d_free() == 4,
        format!("d_free = {}", spec.d_free()),
    );
    for (d, expect) in [(4usize, 5u128), (5, 36), (6, 152), (7, 720), (8, 3472)] {
        let got = spec.coefficient(d);
        c.part(
            &format!("a_{d}"),
            got == expect,
            format!("expected {expect}, enumerated {got}"),
        );
    }
    let dt = start.elapsed();
    c.part("runtime < 1 s", dt.as_secs_f64() < 1.0, format!("{dt:?}"));
    c.finish();
}

// Criterion 2: closed-form PEP against a 1e7-draw Monte Carlo of the
// pairwise decision event for 10 random (delta, R, noise) instances.
#[test]
fn c02_pep_monte_carlo() {
    let mut c = Criterion::new(2, "PEP closed form vs event Monte Carlo");
    let start = std::time::Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1002);
    let n_draws = 10_000_000u64;
    for inst in 0..10 {
        let n = *[2usize, 4, 8].iter().nth(inst % 3).unwrap();
        let w = [0.12, 0.4, 0.5, 1.0, 5.0][inst % 5];
        let corr = Correlation::jakes(n, w).unwrap();
        let m = [2usize, 4][inst % 2];
        let cons = Constellation::new(m).unwrap();
        let cfg = ImConfig::new(n, m).unwrap();
        let k = cfg.bits_per_symbol();
        let wa = rng.gen_range(0..(1u32 << k));
        let wb = loop {
            let x = rng.gen_range(0..(1u32 << k));
            if x != wa {
                break x;
            }
        };
        let sa = im_map(wa, &cfg, &cons).unwrap();
        let sb = im_map(wb, &cfg, &cons).unwrap();
        let mut delta = vec![num_complex::Complex::new(0.0, 0.0); n];
        delta[sa.port_idx] += cons.point(sa.sym_idx);
        delta[sb.port_idx] -= cons.point(sb.sym_idx);
        let s2 = 10f64.powf(rng.gen_range(-2.0..-0.3));
        let mu = corr.rank_one_eigenvalue(&delta).unwrap();
        let p = pep_closed_form(mu, s2);
        let mut errs = 0u64;
        for _ in 0..n_draws {
            let h = sample_channel(&corr, 1.0, &mut rng);
            let mut g = num_complex::Complex::new(0.0, 0.0);
            for (i, &d) in delta.iter().enumerate() {
                g += h.coeff(i) * d;
            }
            let wn = sample_noise(s2, &mut rng);
            if (g + wn).norm_sqr() < wn.norm_sqr() {
                errs += 1;
            }
        }
        let p_hat = errs as f64 / n_draws as f64;
        let se = (p * (1.0 - p) / n_draws as f64).sqrt();
        c.part(
            &format!("instance {inst} (N={n}, W={w}, M={m})"),
            (p_hat - p).abs() <= 3.0 * se,
            format!("closed form {p:.6e}, MC {p_hat:.6e}, 3se {:.2e}", 3.0 * se),
        );
    }
    let dt = start.elapsed();
    c.part(
        "runtime < 2 min",
        dt.as_secs_f64() < 120.0,
        format!("{dt:?}"),
    );
    c.finish();
}

// Criterion 3: simulated BER below the union bound at every 15..30 dB point,
// and within a factor 10 of it wherever at least 100 errors were observed.
#[test]
fn c03_union_bound_dominance_and_tightness() {
    let mut c = Criterion::new(3, "union bound dominance and tightness (N=4, M=4, W=0.5)");
    let start = std::time::Instant::now();
    let cfg = ExperimentConfig {
        scheme: Scheme::Uncoded,
        n_ports: 4,
        mod_order: 4,
        fa_size: 0.5,
        snr_grid_db: grid(15.0, 3.0, 30.0),
        max_trials: 3_000_000,
        min_errors: 150,
        seed: 1003,
        generators: None,
        interleaver_len: None,
        turbo_iters: None,
    };
    let curve = run_uncoded(&cfg).unwrap();
    let im = ImConfig::new(4, 4).unwrap();
    let cons = Constellation::new(4).unwrap();
    let corr = Correlation::jakes(4, 0.5).unwrap();
    for p in &curve.points {
        let bound =
            uncoded_union_bound(&im, &corr, noise_var_from_snr_db(p.snr_db), &cons).unwrap();
        c.part(
            &format!("dominance at {} dB", p.snr_db),
            p.ber <= bound,
            format!("ber {:.3e} <= bound {bound:.3e}", p.ber),
        );
        if p.bit_errors >= 100 {
            c.part(
                &format!("tightness at {} dB", p.snr_db),
                bound / p.ber <= 10.0,
                format!("bound/ber = {:.2} ({} errors)", bound / p.ber, p.bit_errors),
            );
        }
    }
    // second configuration of the dominance invariant
    let cfg8 = ExperimentConfig {
        n_ports: 8,
        mod_order: 2,
        fa_size: 0.3,
        snr_grid_db: vec![18.0, 24.0, 30.0],
        ..cfg
    };
    let curve8 = run_uncoded(&cfg8).unwrap();
    let im8 = ImConfig::new(8, 2).unwrap();
    let cons8 = Constellation::new(2).unwrap();
    let corr8 = Correlation::jakes(8, 0.3).unwrap();
    for p in &curve8.points {
        let bound =
            uncoded_union_bound(&im8, &corr8, noise_var_from_snr_db(p.snr_db), &cons8).unwrap();
        c.part(
            &format!("dominance (N=8, M=2) at {} dB", p.snr_db),
            p.ber <= bound,
            format!("ber {:.3e} <= bound {bound:.3e}", p.ber),
        );
    }
    let dt = start.elapsed();
    c.part(
        "runtime < 10 min",
        dt.as_secs_f64() < 600.0,
        format!("{dt:?}"),
    );
    c.finish();
}

// Criterion 4: k = 6 bps/Hz crossover between the 32-port FA at W = 1 and the
// 2-antenna half-wavelength IM-CA reference (M = 32). The reported target
// has the FA 4 +- 1.5 dB better at BER 1e-3; under Jakes correlation at
// this port spacing the FA's port-confusion floor makes it far worse there.
#[test]
fn c04_fa_vs_ca_crossover() {
    let mut c = Criterion::new(4, "IM-FA vs IM-CA at k = 6 bps/Hz");
    let start = std::time::Instant::now();
    let fa = ExperimentConfig {
        scheme: Scheme::Uncoded,
        n_ports: 32,
        mod_order: 2,
        fa_size: 1.0,
        snr_grid_db: grid(30.0, 3.0, 54.0),
        max_trials: 400_000,
        min_errors: 100,
        seed: 1004,
        generators: None,
        interleaver_len: None,
        turbo_iters: None,
    };
    // half-wavelength two-antenna reference: N = 2 at W = 0.5 gives J0(pi)
    let ca = ExperimentConfig {
        scheme: Scheme::Uncoded,
        n_ports: 2,
        mod_order: 32,
        fa_size: 0.5,
        snr_grid_db: grid(21.0, 3.0, 45.0),
        ..fa.clone()
    };
    let fa_curve = run_uncoded(&fa).unwrap();
    let ca_curve = run_uncoded(&ca).unwrap();
    let fa_snr = snr_at_ber(&curve_points(&fa_curve), 1e-3);
    let ca_snr = snr_at_ber(&curve_points(&ca_curve), 1e-3);
    println!("criterion 4 data: FA@1e-3 = {fa_snr:?} dB, CA@1e-3 = {ca_snr:?} dB");
    match (fa_snr, ca_snr) {
        (Some(f), Some(g)) => {
            let gain = g - f;
            c.part(
                "FA beats CA by 4 +- 1.5 dB at BER 1e-3",
                (2.5..=5.5).contains(&gain),
                format!("measured gain {gain:.2} dB (FA {f:.2}, CA {g:.2})"),
            );
        }
        _ => {
            c.part(
                "FA beats CA by 4 +- 1.5 dB at BER 1e-3",
                false,
                format!(
                    "no 1e-3 crossing inside the grid: FA {fa_snr:?}, CA {ca_snr:?} \
                     (FA floor from adjacent-port confusion sits above 1e-3 until ~48 dB)"
                ),
            );
        }
    }
    let dt = start.elapsed();
    c.part(
        "runtime < 30 min",
        dt.as_secs_f64() < 1800.0,
        format!("{dt:?}"),
    );
    c.finish();
}

// Criterion 5: SPC gain at high correlation and the low-correlation
// inversion, both at k = 5 bps/Hz with N = 16.
#[test]
fn c05_spc_gain_and_inversion() {
    let mut c = Criterion::new(5, "SPC gain (W=0.4) and inversion (W=5)");
    let start = std::time::Instant::now();
    let run_pair = |w: f64, lo: f64, hi: f64| {
        let spc = ExperimentConfig {
            scheme: Scheme::Spc,
            n_ports: 16,
            mod_order: 4,
            fa_size: w,
            snr_grid_db: grid(lo, 2.0, hi),
            max_trials: 400_000,
            min_errors: 100,
            seed: 1005,
            generators: Some(vec![0o13, 0o15, 0o17, 0o11]),
            interleaver_len: Some(256),
            turbo_iters: None,
        };
        let unc = ExperimentConfig {
            scheme: Scheme::Uncoded,
            mod_order: 2,
            generators: None,
            interleaver_len: None,
            ..spc.clone()
        };
        (run_spc(&spc).unwrap(), run_uncoded(&unc).unwrap())
    };

    let (spc_hc, unc_hc) = run_pair(0.4, 28.0, 52.0);
    let s = snr_at_ber(&curve_points(&spc_hc), 1e-3);
    let u = snr_at_ber(&curve_points(&unc_hc), 1e-3);
    println!("criterion 5 data (W=0.4): SPC@1e-3 = {s:?}, uncoded@1e-3 = {u:?}");
    match (s, u) {
        (Some(s), Some(u)) => c.part(
            "high correlation: SPC better by >= 2.5 dB at 1e-3",
            u - s >= 2.5,
            format!("gain {:.2} dB (spc {s:.2}, uncoded {u:.2})", u - s),
        ),
        _ => c.part(
            "high correlation: SPC better by >= 2.5 dB at 1e-3",
            false,
            format!("no crossing in grid: spc {s:?}, uncoded {u:?}"),
        ),
    }

    let (spc_lc, unc_lc) = run_pair(5.0, 16.0, 46.0);
    let s = snr_at_ber(&curve_points(&spc_lc), 1e-3);
    let u = snr_at_ber(&curve_points(&unc_lc), 1e-3);
    println!("criterion 5 data (W=5): SPC@1e-3 = {s:?}, uncoded@1e-3 = {u:?}");
    match (s, u) {
        (Some(s), Some(u)) => c.part(
            "low correlation: SPC worse than uncoded at 1e-3",
            s > u,
            format!("spc {s:.2} dB vs uncoded {u:.2} dB"),
        ),
        _ => c.part(
            "low correlation: SPC worse than uncoded at 1e-3",
            false,
            format!("no crossing in grid: spc {s:?}, uncoded {u:?}"),
        ),
    }
    let dt = start.elapsed();
    c.part(
        "runtime < 30 min",
        dt.as_secs_f64() < 1800.0,
        format!("{dt:?}"),
    );
    c.finish();
}

// Criterion 6: capacity saturation anchors (at W = 1.0, the 6 cm aperture
// at 5 GHz) with a uniform +-1 dB convention offset allowed across both
// anchors. The second anchor (N=8, M=4 reaching 4.9 bps/Hz by 20.5 dB)
// exceeds the discrete-input capacity even with fully independent ports
// (4.70 at 21.5 dB), so it fails for any correlation model.
#[test]
fn c06_capacity_saturation() {
    let mut c = Criterion::new(6, "capacity saturation anchors");
    let start = std::time::Instant::now();
    let samples = 40_000;
    let cap = |n: usize, m: usize, snr: f64, seed: u64| {
        let cfg = ImConfig::new(n, m).unwrap();
        let cons = Constellation::new(m).unwrap();
        let corr = Correlation::jakes(n, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        capacity_mc(
            &cfg,
            &corr,
            noise_var_from_snr_db(snr),
            &cons,
            samples,
            &mut rng,
        )
        .unwrap()
    };
    let offsets = [-1.0f64, 0.0, 1.0];
    let a1: Vec<f64> = offsets
        .iter()
        .map(|d| cap(4, 4, 28.0 + d, 1006).value)
        .collect();
    let a2: Vec<f64> = offsets
        .iter()
        .map(|d| cap(8, 4, 20.5 + d, 1007).value)
        .collect();
    println!("criterion 6 data: C(N4M4, 27..29 dB) = {a1:?}");
    println!("criterion 6 data: C(N8M4, 19.5..21.5 dB) = {a2:?}");
    c.part(
        "N=4, M=4: C >= 3.9 at 28 dB",
        a1[1] >= 3.9,
        format!("C = {:.3}", a1[1]),
    );
    let joint = (0..3).any(|i| a1[i] >= 3.9 && a2[i] >= 4.9);
    c.part(
        "N=8, M=4: C >= 4.9 at 20.5 dB (uniform offset allowed)",
        joint,
        format!(
            "best N8M4 value {:.3}; no offset satisfies both anchors",
            a2[2]
        ),
    );
    // cap by log2(NM) across a broad grid
    let mut capped = true;
    let mut detail = String::new();
    for snr in [0.0, 10.0, 20.0, 30.0] {
        let e = cap(4, 4, snr, 1008);
        if e.value > 4.0 + 3.0 * e.std_error {
            capped = false;
            detail = format!("C({snr} dB) = {} exceeds log2(NM)", e.value);
        }
    }
    c.part(
        "capacity <= log2(NM) everywhere",
        capped,
        if capped {
            "all grid points below the cap".into()
        } else {
            detail
        },
    );
    let dt = start.elapsed();
    c.part(
        "runtime < 10 min",
        dt.as_secs_f64() < 600.0,
        format!("{dt:?}"),
    );
    c.finish();
}

fn waterfall_turbo_config(w: f64, grid_db: Vec<f64>) -> ExperimentConfig {
    ExperimentConfig {
        scheme: Scheme::Turbo,
        n_ports: 8,
        mod_order: 2,
        fa_size: w,
        snr_grid_db: grid_db,
        max_trials: 700_000,
        min_errors: 100,
        seed: 1007,
        generators: Some(vec![0o2, 0o4, 0o11]),
        interleaver_len: Some(4096),
        turbo_iters: Some(15),
    }
}

// Criterion 7: turbo waterfall at the reference configuration (N=8, M=2,
// L=4096, 15 iterations): >= 6 dB gain over the rate-matched uncoded system
// at BER 1e-3, and the W = 0.30 curve below W = 0.12 in the floor region.
#[test]
fn c07_turbo_waterfall() {
    let mut c = Criterion::new(7, "turbo waterfall (N=8, M=2, L=4096, 15 iterations)");
    let start = std::time::Instant::now();
    let turbo = run_turbo(&waterfall_turbo_config(
        0.30,
        vec![14.0, 16.0, 18.0, 19.0, 20.0, 21.0, 22.0],
    ))
    .unwrap();
    let unc = ExperimentConfig {
        scheme: Scheme::Uncoded,
        n_ports: 2,
        mod_order: 2,
        fa_size: 0.30,
        snr_grid_db: grid(16.0, 3.0, 34.0),
        max_trials: 2_000_000,
        min_errors: 150,
        seed: 1007,
        generators: None,
        interleaver_len: None,
        turbo_iters: None,
    };
    let unc = run_uncoded(&unc).unwrap();
    let t = snr_at_ber(&curve_points(&turbo), 1e-3);
    let u = snr_at_ber(&curve_points(&unc), 1e-3);
    println!("criterion 7 data: turbo@1e-3 = {t:?} dB, uncoded@1e-3 = {u:?} dB");
    for p in &turbo.points {
        println!(
            "criterion 7 data: turbo W=0.30 {} dB -> ber {:.3e} (iter1 errors {:?})",
            p.snr_db, p.ber, p.first_iteration_errors
        );
    }
    match (t, u) {
        (Some(t), Some(u)) => c.part(
            "turbo better than uncoded by >= 6 dB at 1e-3",
            u - t >= 6.0,
            format!("gain {:.2} dB (turbo {t:.2}, uncoded {u:.2})", u - t),
        ),
        _ => c.part(
            "turbo better than uncoded by >= 6 dB at 1e-3",
            false,
            format!("no crossing: turbo {t:?}, uncoded {u:?}"),
        ),
    }
    // iteration monotonicity on the measured points
    let iters_ok = turbo.points.iter().all(|p| {
        p.first_iteration_errors
            .map(|f| p.bit_errors <= f)
            .unwrap_or(false)
    });
    c.part(
        "iteration 15 errors <= iteration 1 errors at every point",
        iters_ok,
        "aggregated per point".into(),
    );
    // floor-region ordering: evaluate both W at the supra-cliff points
    let w12 = run_turbo(&waterfall_turbo_config(0.12, vec![20.0, 22.0])).unwrap();
    let mut ordered = true;
    let mut detail = String::new();
    for p12 in &w12.points {
        let p30 = turbo
            .points
            .iter()
            .find(|p| (p.snr_db - p12.snr_db).abs() < 1e-9)
            .unwrap();
        detail.push_str(&format!(
            "{} dB: W=.30 {:.2e} vs W=.12 {:.2e}; ",
            p12.snr_db, p30.ber, p12.ber
        ));
        if p30.ber >= p12.ber {
            ordered = false;
        }
    }
    c.part(
        "W = 0.30 curve below W = 0.12 in the floor region",
        ordered,
        detail,
    );
    let dt = start.elapsed();
    c.part(
        "runtime < 60 min",
        dt.as_secs_f64() < 3600.0,
        format!("{dt:?}"),
    );
    c.finish();
}

// Criterion 8: the analytical turbo bound is monotone in SNR and sits above
// the simulated BER wherever the decoder has passed its cliff.
#[test]
fn c08_turbo_bound_shape() {
    let mut c = Criterion::new(8, "turbo bound shape (waterfall configuration)");
    let start = std::time::Instant::now();
    let code = RscCode::new(&[0o2, 0o4, 0o11]).unwrap();
    let ell = 4096usize;
    let io = compute_iowef(&code, ell, 8, 30).unwrap();
    let cwef = turbo_cwef(&io, &io, ell, 8, 30).unwrap();
    let cfg = ImConfig::new(8, 2).unwrap();
    let cons = Constellation::new(2).unwrap();
    let corr = Correlation::jakes(8, 0.30).unwrap();
    let rule = Quadrature::default_rule();
    let snrs = grid(10.0, 2.0, 30.0);
    let bounds: Vec<f64> = snrs
        .iter()
        .map(|&s| {
            turbo_ber_bound(&cwef, &cfg, &corr, noise_var_from_snr_db(s), &cons, &rule).unwrap()
        })
        .collect();
    println!("criterion 8 data: bounds {bounds:?}");
    let monotone = bounds.windows(2).all(|w| w[1] <= w[0] + 1e-15);
    c.part(
        "bound monotone non-increasing in SNR",
        monotone,
        format!("{bounds:?}"),
    );
    // supra-cliff comparison at 20 and 22 dB
    let turbo = run_turbo(&waterfall_turbo_config(0.30, vec![20.0, 22.0])).unwrap();
    for p in &turbo.points {
        let b = turbo_ber_bound(
            &cwef,
            &cfg,
            &corr,
            noise_var_from_snr_db(p.snr_db),
            &cons,
            &rule,
        )
        .unwrap();
        c.part(
            &format!("bound >= simulated BER at {} dB", p.snr_db),
            b >= p.ber,
            format!("bound {b:.3e} vs ber {:.3e}", p.ber),
        );
    }
    let dt = start.elapsed();
    c.part(
        "runtime < 5 min past criterion 7",
        dt.as_secs_f64() < 900.0,
        format!("{dt:?}"),
    );
    c.finish();
}

// Criterion 9: EXIT behavior at the long-interleaver configuration
// (N=8, M=2, W=0.12, L=24649). The escape sub-check fails deliberately: the
// discrete-input capacity of this channel at 6.2 (+1) dB is ~0.97 (1.05)
// bps/Hz, below the k_TCM = 2 bps/Hz the decoder would need, so no tunnel
// can exist at that SNR under the implemented channel model.
#[test]
fn c09_exit_behavior() {
    let mut c = Criterion::new(9, "EXIT trajectory (long-interleaver configuration)");
    let start = std::time::Instant::now();
    let code = RscCode::new(&[0o2, 0o4, 0o11]).unwrap();
    let ell = 24_649usize;
    let cfg = ImConfig::new(8, 2).unwrap();
    let cons = Constellation::new(2).unwrap();
    let corr = Correlation::jakes(8, 0.12).unwrap();
    let k_tcm = 2.0;
    let mut escaped_at = None;
    for offset in [0.0, 1.0] {
        let snr = 6.2 + offset;
        let tc = TurboCode::new(code.clone(), Interleaver::random(ell, 1009)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1009);
        let traj = exit_trajectory(
            &tc,
            &cfg,
            &corr,
            noise_var_from_snr_db(snr),
            &cons,
            15,
            2,
            &mut rng,
        )
        .unwrap();
        let peak = traj.iter().map(|&(_, v)| v).fold(0.0f64, f64::max);
        println!("criterion 9 data: {snr} dB trajectory peak I_E = {peak:.3}");
        if peak >= 0.95 * k_tcm {
            escaped_at = Some(snr);
            break;
        }
    }
    c.part(
        "trajectory escapes the diagonal at 6.2 dB (+- offset) within 15 iterations",
        escaped_at.is_some(),
        match escaped_at {
            Some(s) => format!("escaped at {s} dB"),
            None => "no escape at 6.2 or 7.2 dB (capacity there is ~1 bps/Hz < k_TCM = 2)".into(),
        },
    );
    // three dB below the nominal point the trajectory must stall
    let tc = TurboCode::new(code, Interleaver::random(ell, 1010)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    let traj = exit_trajectory(
        &tc,
        &cfg,
        &corr,
        noise_var_from_snr_db(3.2),
        &cons,
        15,
        2,
        &mut rng,
    )
    .unwrap();
    let peak = traj.iter().map(|&(_, v)| v).fold(0.0f64, f64::max);
    c.part(
        "trajectory stalls below 0.5 k_TCM at 3.2 dB",
        peak < 0.5 * k_tcm,
        format!("peak I_E = {peak:.3}"),
    );
    let dt = start.elapsed();
    c.part(
        "runtime < 20 min",
        dt.as_secs_f64() < 1200.0,
        format!("{dt:?}"),
    );
    c.finish();
}

// Criterion 10: always-on property suites.
#[test]
fn c10_property_suites() {
    let mut c = Criterion::new(10, "property suites");
    let start = std::time::Instant::now();

    // im_map bijection over all words for every supported shape
    let mut bijective = true;
    for (n, m) in [(2usize, 2usize), (4, 4), (8, 4), (16, 2), (32, 2), (4, 32)] {
        let cfg = ImConfig::new(n, m).unwrap();
        let cons = QamConstellation::<f64>::new(m).unwrap();
        let k = cfg.bits_per_symbol();
        let mut seen = vec![false; 1 << k];
        for word in 0..(1u32 << k) {
            let sym = im_map(word, &cfg, &cons).unwrap();
            let back = im_demap(&sym, &cfg, &cons);
            if back != word || seen[word as usize] {
                bijective = false;
            }
            seen[word as usize] = true;
        }
    }
    c.part(
        "im_map bijection on all 2^k words",
        bijective,
        "6 configurations".into(),
    );

    // encoder linearity
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    let mut linear = true;
    for gens in [
        vec![0o13u32, 0o15, 0o17, 0o11],
        vec![0o2, 0o4, 0o11],
        vec![0o5, 0o7],
    ] {
        let code = RscCode::new(&gens).unwrap();
        let b = code.input_arity();
        for _ in 0..50 {
            let x: Vec<u8> = (0..b * 16).map(|_| rng.gen_range(0..2)).collect();
            let y: Vec<u8> = (0..b * 16).map(|_| rng.gen_range(0..2)).collect();
            let xy: Vec<u8> = x.iter().zip(&y).map(|(a, b)| a ^ b).collect();
            let ex = code.encode(&x, false).unwrap();
            let ey = code.encode(&y, false).unwrap();
            let exy = code.encode(&xy, false).unwrap();
            let want: Vec<u8> = ex.iter().zip(&ey).map(|(a, b)| a ^ b).collect();
            if exy != want {
                linear = false;
            }
        }
    }
    c.part(
        "encoder linearity over GF(2)",
        linear,
        "3 codes x 50 random pairs".into(),
    );

    // Viterbi guaranteed-correction radius
    let code = RscCode::new(&[0o13, 0o15, 0o17, 0o11]).unwrap();
    let radius = (compute_wef(&code, 10).unwrap().d_free() - 1) / 2;
    let mut corrected = true;
    for _ in 0..100 {
        let info: Vec<u8> = (0..code.input_arity() * 24)
            .map(|_| rng.gen_range(0..2))
            .collect();
        let mut coded = code.encode(&info, true).unwrap();
        let mut positions: Vec<usize> = (0..coded.len()).collect();
        for _ in 0..radius {
            let i = positions.swap_remove(rng.gen_range(0..positions.len()));
            coded[i] ^= 1;
        }
        if code.viterbi_decode_hard(&coded, true).unwrap() != info {
            corrected = false;
        }
    }
    c.part(
        "Viterbi corrects within the guaranteed radius",
        corrected,
        format!("radius {radius}, 100 random blocks"),
    );

    // rank-one eigenvalue identity: quadratic form equals the trace of the
    // dense product to 1e-9
    let mut rank_one_ok = true;
    for _ in 0..200 {
        let n = 4 + 2 * (rng.gen_range(0..3) as usize);
        let w = 10f64.powf(rng.gen_range(-1.0..0.7));
        let corr = CorrelationMatrix::<f64>::jakes(n, w).unwrap();
        let delta: Vec<num_complex::Complex<f64>> = (0..n)
            .map(|_| num_complex::Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let mu = corr.rank_one_eigenvalue(&delta).unwrap();
        // trace of delta delta^H R
        let mut trace = num_complex::Complex::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                trace += delta[i] * delta[j].conj() * corr.entries()[(j, i)];
            }
        }
        if (trace.re - mu).abs() > 1e-9 || trace.im.abs() > 1e-9 {
            rank_one_ok = false;
        }
    }
    c.part(
        "rank-one eigenvalue = trace identity (1e-9)",
        rank_one_ok,
        "200 random instances".into(),
    );

    // IOWEF total-count identity at toy scale
    let code = RscCode::new(&[0o2, 0o4, 0o11]).unwrap();
    let ell = 6usize;
    let io = compute_iowef(&code, ell, (2 * ell) as u32, 16).unwrap();
    let total: u128 = io.terms().map(|(_, v)| v).sum();
    c.part(
        "IOWEF total count = 2^(b L), L = 6",
        total == 1u128 << (2 * ell),
        format!("{total} vs {}", 1u128 << (2 * ell)),
    );

    // uniform-interleaver CWEF equals the exhaustive average at L = 6 for a
    // b = 1 constituent (the granularity at which Eq.-(32)-style averaging
    // is exact)
    let half = RscCode::new(&[0o5, 0o7]).unwrap();
    let io = compute_iowef(&half, 6, 6, 16).unwrap();
    let cwef = turbo_cwef(&io, &io, 6, 6, 32).unwrap();
    let mut table: std::collections::BTreeMap<(u32, u32), f64> = std::collections::BTreeMap::new();
    let perms = permutations(6);
    for p in &perms {
        for word in 0..(1u32 << 6) {
            let bits: Vec<u8> = (0..6).map(|i| ((word >> (5 - i)) & 1) as u8).collect();
            let z1: u32 = half
                .encode(&bits, false)
                .unwrap()
                .chunks_exact(2)
                .map(|c| c[1] as u32)
                .sum();
            let permd: Vec<u8> = (0..6).map(|i| bits[p[i]]).collect();
            let z2: u32 = half
                .encode(&permd, false)
                .unwrap()
                .chunks_exact(2)
                .map(|c| c[1] as u32)
                .sum();
            let w: u32 = bits.iter().map(|&b| b as u32).sum();
            *table.entry((w, z1 + z2)).or_default() += 1.0;
        }
    }
    let mut cwef_ok = true;
    for v in table.values_mut() {
        *v /= perms.len() as f64;
    }
    for (key, v) in &table {
        let got = cwef.term(key.0, key.1);
        if (got - v).abs() > 1e-9 * v.max(1.0) {
            cwef_ok = false;
        }
    }
    c.part(
        "uniform-interleaver CWEF = exhaustive 6! average",
        cwef_ok && table.len() == cwef.terms().count(),
        format!("{} terms compared", table.len()),
    );

    // determinism: identical reruns and worker invariance
    let cfg = ExperimentConfig {
        scheme: Scheme::Uncoded,
        n_ports: 4,
        mod_order: 4,
        fa_size: 0.5,
        snr_grid_db: vec![12.0, 18.0],
        max_trials: 50_000,
        min_errors: 80,
        seed: 77,
        generators: None,
        interleaver_len: None,
        turbo_iters: None,
    };
    let a = run_uncoded(&cfg).unwrap();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(4)
        .build()
        .unwrap();
    let b = pool.install(|| run_uncoded(&cfg)).unwrap();
    let identical = a
        .points
        .iter()
        .zip(&b.points)
        .all(|(x, y)| x.bit_errors == y.bit_errors && x.bits_sent == y.bits_sent);
    c.part(
        "byte-identical reruns across worker counts",
        identical,
        "2-point curve".into(),
    );

    let dt = start.elapsed();
    c.part(
        "runtime < 5 min",
        dt.as_secs_f64() < 300.0,
        format!("{dt:?}"),
    );
    c.finish();
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut stack = vec![(Vec::new(), (0..n).collect::<Vec<_>>())];
    while let Some((pfx, rest)) = stack.pop() {
        if rest.is_empty() {
            out.push(pfx);
            continue;
        }
        for (i, &x) in rest.iter().enumerate() {
            let mut p = pfx.clone();
            p.push(x);
            let mut r = rest.clone();
            r.remove(i);
            stack.push((p, r));
        }
    }
    out
}
