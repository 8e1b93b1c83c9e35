use cogradio_core::channel::{cr_rate, full_csit_alpha2, ChannelRealization, DesignParams, PowerConfig};
use cogradio_core::lattice::{
    build_filters, build_filters_from, build_nested, codeword_error_sim_with, encode, expand, second_moment_mc,
    to_real, Decoder, SphereDecoder, LatticeScenario, LatticeScheme, NestedPair,
};
use cogradio_core::linalg::{c, re, C64};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::sync::OnceLock;

fn pair2() -> &'static NestedPair {
    static P: OnceLock<NestedPair> = OnceLock::new();
    P.get_or_init(|| build_nested(2, 0.5).unwrap())
}

fn cn(rng: &mut ChaCha8Rng) -> C64 {
    let a: f64 = rng.sample(StandardNormal);
    let b: f64 = rng.sample(StandardNormal);
    c(a, b) * std::f64::consts::FRAC_1_SQRT_2
}

fn moments(x: &[f64]) -> (f64, f64, f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let cm = |k: i32| x.iter().map(|v| (v - m).powi(k)).sum::<f64>() / n;
    let v = cm(2);
    (m, v, cm(3) / v.powf(1.5), cm(4) / (v * v) - 3.0)
}

/// Two-sample Kolmogorov-Smirnov p-value (asymptotic).
fn ks_p_value(a: &mut [f64], b: &mut [f64]) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    let ne = (a.len() * b.len()) as f64 / (a.len() + b.len()) as f64;
    let lam = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    let q: f64 = (1..=100).map(|k| 2.0 * (-1f64).powi(k - 1) * (-2.0 * (k * k) as f64 * lam * lam).exp()).sum();
    q.clamp(0.0, 1.0)
}

#[test]
fn calibrated_second_moment_in_band() {
    for q in [2, 4] {
        let pair = build_nested(q, 0.5).unwrap();
        let m = second_moment_mc(&pair.coarse, 1_000_000, 777);
        assert!((0.4975..=0.5025).contains(&m), "Q={q}: {m}");
        assert_eq!(pair.rate(), 2.0 * (q as f64).log2());
    }
}

#[test]
fn encoder_power_matches_budget() {
    let pair = pair2();
    let f = build_filters_from(c(0.8, 0.3), c(0.5, -0.4), c(0.6, 0.2), 4.0, 10.0, 1.0, 4).unwrap();
    let (a1, p_c) = (0.6, 10.0);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 100_000;
    let mut acc = 0.0;
    for _ in 0..n {
        let s = to_real(&[cn(&mut rng), cn(&mut rng), cn(&mut rng), cn(&mut rng)]) * 10f64.sqrt();
        let idx = rng.gen_range(0..pair.codebook_size());
        let x = encode(idx, &s, &pair.sample_dither(&mut rng), pair, &f, a1, p_c).unwrap();
        acc += x.norm_squared() / 8.0;
    }
    let want = (1.0 - a1) * p_c / 2.0;
    assert!((acc / n as f64 / want - 1.0).abs() < 0.01, "{} vs {want}", acc / n as f64);
}

fn transmit_marginal(n: usize, seed: u64) -> Vec<f64> {
    let pair = pair2();
    let f = build_filters_from(re(1.0), re(1.0), re(0.7), 4.0, 10.0, 1.0, 4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .flat_map(|_| {
            let s = to_real(&[cn(&mut rng), cn(&mut rng), cn(&mut rng), cn(&mut rng)]) * 10f64.sqrt();
            let idx = rng.gen_range(0..pair.codebook_size());
            encode(idx, &s, &pair.sample_dither(&mut rng), pair, &f, 0.6, 10.0).unwrap().iter().copied().collect::<Vec<_>>()
        })
        .collect()
}

#[test]
fn transmit_marginal_is_symmetric() {
    let (m, _, skew, _) = moments(&transmit_marginal(100_000, 4));
    assert!(m.abs() < 0.01 && skew.abs() < 0.05, "mean {m} skew {skew}");
}

// The marginal of a uniform point in the E8 cell has excess kurtosis near
// -0.48; one 8-dimensional cell is far from Gaussian in its tails.
#[test]
#[ignore = "E8 Voronoi marginal has excess kurtosis about -0.48"]
fn transmit_marginal_is_near_gaussian() {
    let (_, _, skew, kurt) = moments(&transmit_marginal(100_000, 4));
    assert!(skew.abs() < 0.05 && kurt.abs() < 0.1, "skew {skew} kurtosis {kurt}");
}

#[test]
fn output_independent_of_codeword() {
    let pair = pair2();
    let f = build_filters_from(re(1.0), re(0.0), re(0.0), 4.0, 0.0, 1.0, 4).unwrap();
    let zero = DVector::zeros(8);
    let sample = |idx: u64, seed: u64| -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..100_000)
            .map(|_| encode(idx, &zero, &pair.sample_dither(&mut rng), pair, &f, 0.5, 10.0).unwrap()[0])
            .collect()
    };
    for (i, j) in [(0u64, 1u64), (17, 200), (5, 255)] {
        let p = ks_p_value(&mut sample(i, 10 + i), &mut sample(j, 20 + j));
        assert!(p > 0.01, "codewords {i}, {j}: p = {p}");
    }
}

fn random_filters(rng: &mut ChaCha8Rng, pw: &PowerConfig) -> (ChannelRealization, DesignParams) {
    let r = ChannelRealization { h11: cn(rng), h12: cn(rng), h21: cn(rng), h22: cn(rng) + re(0.5) };
    let alpha1 = rng.gen_range(0.05..0.9);
    let alpha2 = full_csit_alpha2(&r, alpha1, pw) + cn(rng) * 0.3;
    (r, DesignParams { alpha1, alpha2 })
}

#[test]
fn lattice_rate_equals_unstructured_rate() {
    let pw = PowerConfig::unit_noise(10.0, 10.0);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let (r, p) = random_filters(&mut rng, &pw);
        let f = build_filters(&r, &p, &pw, 4).unwrap();
        let want = cr_rate(&r, &p, &pw).unwrap();
        assert!((f.inverse_log_det_per_symbol() - want).abs() < 1e-6, "{} vs {want}", f.inverse_log_det_per_symbol());
        assert!((f.achievable_rate() - want).abs() < 1e-6);
    }
}

#[test]
fn decoder_matches_exhaustive_box_search() {
    let pair = pair2();
    let pw = PowerConfig::unit_noise(10.0, 10.0);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let g = pair.fine.generator();
    for _ in 0..1000 {
        let (r, p) = random_filters(&mut rng, &pw);
        let f = build_filters(&r, &p, &pw, 4).unwrap();
        let dec = Decoder::new(&f, pair).unwrap();
        let s = to_real(&[cn(&mut rng), cn(&mut rng), cn(&mut rng), cn(&mut rng)]) * pw.p_p.sqrt();
        let z = to_real(&[cn(&mut rng), cn(&mut rng), cn(&mut rng), cn(&mut rng)]);
        let idx = rng.gen_range(0..pair.codebook_size());
        let dither = pair.sample_dither(&mut rng);
        let x = encode(idx, &s, &dither, pair, &f, p.alpha1, pw.p_c).unwrap();
        let hs = r.interference_gain(p.alpha1, &pw);
        let y = expand(r.h22, 4) * DVector::from_column_slice(x.as_slice()) + expand(hs, 4) * &s + z;
        let got = dec.decode(&y, &dither, pair);

        // metric |L(F_r y + d) - L G b|² over b in a box about the real solution
        let lg = &f.l * nalgebra::DMatrix::from_column_slice(8, 8, g.as_slice());
        let target = &f.l * (&f.fr * &y + DVector::from_column_slice(dither.as_slice()));
        let center = lg.clone().lu().solve(&target).unwrap();
        let base: Vec<i64> = center.iter().map(|v| v.round() as i64).collect();
        let (mut best, mut best_b) = (f64::INFINITY, base.clone());
        for code in 0..3usize.pow(8) {
            let b: Vec<i64> = (0..8).map(|k| base[k] + (code / 3usize.pow(k as u32) % 3) as i64 - 1).collect();
            let bv = DVector::from_iterator(8, b.iter().map(|&v| v as f64));
            let d = (&target - &lg * bv).norm_squared();
            if d < best {
                best = d;
                best_b = b;
            }
        }
        let (b, dist) = SphereDecoder::new(&lg).unwrap().decode(&target);
        assert_eq!(got, pair.index_of(&b));
        assert!(dist <= best + 1e-9, "sphere {dist} worse than box {best}");
        if (dist - best).abs() > 1e-9 {
            // optimum lies outside the box
            assert!(b.iter().zip(&base).any(|(x, y)| (x - y).abs() > 1));
        } else {
            assert_eq!(got, pair.index_of(&best_b));
        }
    }
}

#[test]
fn dirty_paper_limit_decodes_at_high_snr() {
    let pair = pair2();
    let (own, noise, p_s) = (1e4, 1.0, 100.0);
    let hs = c(0.6, -0.8);
    let alpha_c = re(own / (own + noise));
    let f = build_filters_from(re(1.0), hs, alpha_c, own, p_s, noise, 4).unwrap();
    let dec = Decoder::new(&f, pair).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut errors = 0;
    let n = 100_000;
    for _ in 0..n {
        let s = to_real(&[cn(&mut rng), cn(&mut rng), cn(&mut rng), cn(&mut rng)]) * p_s.sqrt();
        let z = to_real(&[cn(&mut rng), cn(&mut rng), cn(&mut rng), cn(&mut rng)]) * noise.sqrt();
        let idx = rng.gen_range(0..pair.codebook_size());
        let dither = pair.sample_dither(&mut rng);
        let x = encode(idx, &s, &dither, pair, &f, 0.0, own).unwrap();
        let y = DVector::from_column_slice(x.as_slice()) + expand(hs, 4) * &s + z;
        if dec.decode(&y, &dither, pair) != idx {
            errors += 1;
        }
    }
    assert!((errors as f64) < 1e-4 * n as f64, "{errors} errors");
}

#[test]
fn simulated_baselines_bracket_the_scheme() {
    let sc = LatticeScenario { trials: 2_000, outage_samples: 100_000, snr_db: vec![10.0, 20.0, 30.0], ..LatticeScenario::new(10.0, 2) };
    let rows = codeword_error_sim_with(&sc, pair2()).unwrap();
    assert_eq!(rows.len(), 12);
    for snr in &sc.snr_db {
        let get = |s| rows.iter().find(|r| r.snr_db == *snr && r.scheme == s).unwrap();
        let la = get(LatticeScheme::PartialCsit);
        let free = get(LatticeScheme::NoInterference);
        let ian = get(LatticeScheme::InterferenceAsNoise);
        assert!(ian.error_rate > 0.99, "SNR {snr}: {}", ian.error_rate);
        assert!(free.error_rate <= la.ci_high, "SNR {snr}: {} vs {}", free.error_rate, la.error_rate);
        assert!(la.ci_low <= la.error_rate && la.error_rate <= la.ci_high);
    }
    let again = codeword_error_sim_with(&sc, pair2()).unwrap();
    assert_eq!(rows, again);
}
