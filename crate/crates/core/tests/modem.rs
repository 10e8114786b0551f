mod common;

use nalgebra::Vector3;
use num_complex::Complex64;
use proptest::prelude::*;

use oisac::channel::{Aiming, ChannelState, RadiationPattern};
use oisac::exec::Execution;
use oisac::geometry::Scenario;
use oisac::modem::{
    hermitian_extend, noise_variance, run_ber, run_ber_with_sigmas, BerSetup, Constellation, EbN0Reference,
    FrequencyResponse, OfdmConfig, Transform,
};

fn table2_response(c: Constellation) -> (OfdmConfig, FrequencyResponse) {
    let s = Scenario::table2();
    let pat = RadiationPattern::lambertian(s.semi_angle).unwrap();
    let ch = ChannelState::compute(&s, &pat, &Vector3::new(0.5, 0.5, 0.0), &Aiming::Vertical);
    let cfg = OfdmConfig::new(32, c);
    let resp = FrequencyResponse::from_channel(&ch, &cfg);
    (cfg, resp)
}

#[test]
fn noiseless_chain_is_error_free() {
    for c in [Constellation::Bpsk, Constellation::Qam16] {
        let (cfg, resp) = table2_response(c);
        let setup = BerSetup::new(cfg, resp, 11);
        let r = run_ber_with_sigmas(&setup, &[0.0], &[f64::INFINITY], 200_000).unwrap();
        assert_eq!(r.points[0].num_errors, 0, "{c:?}");
        assert_eq!(r.points[0].num_bits, 200_000);
        assert!(r.max_imag_residue < 1e-10, "{}", r.max_imag_residue);
    }
}

#[test]
fn delay_spread_is_far_below_a_symbol() {
    let s = Scenario::table2();
    let pat = RadiationPattern::lambertian(s.semi_angle).unwrap();
    let ch = ChannelState::compute(&s, &pat, &Vector3::new(-2.0, 1.5, 0.0), &Aiming::Vertical);
    let cfg = OfdmConfig::new(32, Constellation::Bpsk);
    let t_sym = cfg.num_subcarriers as f64 * cfg.sample_period;
    assert!(ch.delay_spread() < 0.01 * t_sym);
}

#[test]
fn bpsk_matches_the_q_function() {
    let (cfg, resp) = table2_response(Constellation::Bpsk);
    let mut setup = BerSetup::new(cfg, resp, 5);
    setup.reference = EbN0Reference::Receive;
    let ebn0: Vec<f64> = (0..=6).map(f64::from).collect();
    let n = 200_000;
    let r = run_ber(&setup, &ebn0, n).unwrap();
    for p in &r.points {
        let expect = common::bpsk_ber_oracle(10f64.powf(p.ebn0_db / 10.0));
        assert!(expect * n as f64 >= 100.0);
        let band = common::binomial_3sigma(expect, n);
        assert!(
            (p.ber - expect).abs() <= band,
            "{} dB: {} vs {} ± {}",
            p.ebn0_db,
            p.ber,
            expect,
            band
        );
    }
}

#[test]
fn sixteen_qam_tracks_its_closed_form() {
    // Gray 16QAM: P_b ≈ (3/4) Q(√(4/5 · Eb/N0)) away from low SNR.
    let (cfg, resp) = table2_response(Constellation::Qam16);
    let mut setup = BerSetup::new(cfg, resp, 8);
    setup.reference = EbN0Reference::Receive;
    let n = 400_000;
    let r = run_ber(&setup, &[8.0, 10.0], n).unwrap();
    for p in &r.points {
        let g = 10f64.powf(p.ebn0_db / 10.0);
        let expect = 0.75 * common::q_oracle((0.8 * g).sqrt());
        assert!((p.ber - expect).abs() / expect < 0.1, "{} vs {}", p.ber, expect);
    }
}

#[test]
fn results_do_not_depend_on_execution_mode() {
    let (cfg, resp) = table2_response(Constellation::Qam16);
    let mut a = BerSetup::new(cfg, resp, 3);
    a.exec = Execution::Sequential;
    let mut b = a.clone();
    b.exec = Execution::Parallel;
    let grid = [70.0, 80.0, 90.0];
    assert_eq!(run_ber(&a, &grid, 50_000).unwrap(), run_ber(&b, &grid, 50_000).unwrap());
}

#[test]
fn half_power_offset_shifts_the_curve_by_three_db() {
    let (cfg, resp) = table2_response(Constellation::Bpsk);
    let full = BerSetup::new(cfg, resp, 4);
    let mut half = full.clone();
    half.power_offset_db = 10.0 * 2f64.log10();
    let a = run_ber(&full, &[80.0], 50_000).unwrap();
    let b = run_ber(&half, &[80.0 + 10.0 * 2f64.log10()], 50_000).unwrap();
    assert_eq!(a.points[0].num_errors, b.points[0].num_errors);
}

#[test]
fn noise_variance_follows_the_bit_energy() {
    let resp = FrequencyResponse::flat(&[1.0], 32);
    let b = noise_variance(10.0, Constellation::Bpsk, EbN0Reference::Transmit, &resp);
    let q = noise_variance(10.0, Constellation::Qam16, EbN0Reference::Transmit, &resp);
    assert!((b - 0.1).abs() < 1e-15);
    assert!((q - 0.025).abs() < 1e-15);
}

proptest! {
    #[test]
    fn hermitian_frames_are_real(re in prop::collection::vec(-3.0f64..3.0, 15), im in prop::collection::vec(-3.0f64..3.0, 15)) {
        let u: Vec<Complex64> = re.iter().zip(&im).map(|(a, b)| Complex64::new(*a, *b)).collect();
        let x = hermitian_extend(&u, 32).unwrap();
        let t = Transform::new(32);
        let (v, residue) = t.modulate(&x);
        prop_assert!(residue < 1e-12);
        let back = t.demodulate(&v);
        for (a, b) in back.iter().zip(&x) {
            prop_assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn unitary_transform_keeps_energy(re in prop::collection::vec(-3.0f64..3.0, 15)) {
        let u: Vec<Complex64> = re.iter().map(|a| Complex64::new(*a, -a / 2.0)).collect();
        let x = hermitian_extend(&u, 32).unwrap();
        let (v, _) = Transform::new(32).modulate(&x);
        let ef: f64 = x.iter().map(|c| c.norm_sqr()).sum();
        let et: f64 = v.iter().map(|s| s * s).sum();
        prop_assert!((ef - et).abs() < 1e-9 * ef.max(1.0));
    }

    #[test]
    fn mapping_round_trips(bits in prop::collection::vec(0u8..2, 4)) {
        for c in [Constellation::Bpsk, Constellation::Qam16] {
            let k = c.bits_per_symbol();
            let mut out = vec![0u8; k];
            c.demap(c.map(&bits[..k]), &mut out);
            prop_assert_eq!(&out[..], &bits[..k]);
        }
    }

    #[test]
    fn gray_neighbours_differ_in_one_bit(a in 0u8..16) {
        // Horizontally adjacent 16QAM points differ in exactly one bit.
        let bits = |v: u8| [(v >> 3) & 1, (v >> 2) & 1, (v >> 1) & 1, v & 1];
        let c = Constellation::Qam16;
        let p = c.map(&bits(a));
        for b in 0u8..16 {
            let q = c.map(&bits(b));
            let d = q - p;
            let step = 2.0 / 10f64.sqrt();
            if d.im.abs() < 1e-12 && (d.re.abs() - step).abs() < 1e-12 {
                prop_assert_eq!((a ^ b).count_ones(), 1);
            }
        }
    }
}
