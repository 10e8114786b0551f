//! DCO-OFDM link: Hermitian loading, unitary IDFT, DC bias, multi-PD
//! reception with real AWGN, maximum ratio combining and Monte Carlo BER.
//!
//! Transform convention: the unitary pair
//! `V[t] = N^{-1/2} Σ_n X[n] e^{+j2πnt/N}` and its inverse, so energy is the
//! same in both domains. Real time-domain noise of variance `σ²` becomes
//! complex frequency-domain noise with `E|W[n]|² = σ²` (`σ²/2` per
//! dimension) on every data bin.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::{Fft, FftPlanner};

use crate::channel::ChannelState;
use crate::exec::{chunks, Execution};
use crate::{Error, Result};

/// Frames handed to one worker at a time in Monte Carlo loops.
const FRAMES_PER_TASK: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constellation {
    Bpsk,
    /// Gray-mapped square 16-QAM.
    Qam16,
}

impl Constellation {
    pub fn bits_per_symbol(self) -> usize {
        match self {
            Constellation::Bpsk => 1,
            Constellation::Qam16 => 4,
        }
    }

    /// Unit average symbol energy.
    pub fn map(self, bits: &[u8]) -> Complex64 {
        match self {
            Constellation::Bpsk => Complex64::new(if bits[0] == 0 { 1.0 } else { -1.0 }, 0.0),
            Constellation::Qam16 => {
                let s = 1.0 / 10f64.sqrt();
                Complex64::new(pam4(bits[0], bits[1]) * s, pam4(bits[2], bits[3]) * s)
            }
        }
    }

    /// Hard decision; writes `bits_per_symbol` bits into `out`.
    pub fn demap(self, y: Complex64, out: &mut [u8]) {
        match self {
            Constellation::Bpsk => out[0] = u8::from(y.re < 0.0),
            Constellation::Qam16 => {
                let t = 2.0 / 10f64.sqrt();
                out[0] = u8::from(y.re > 0.0);
                out[1] = u8::from(y.re.abs() < t);
                out[2] = u8::from(y.im > 0.0);
                out[3] = u8::from(y.im.abs() < t);
            }
        }
    }
}

/// Gray 4-PAM: sign bit then inner/outer bit. 00→-3, 01→-1, 11→+1, 10→+3.
fn pam4(b0: u8, b1: u8) -> f64 {
    let mag = if b1 == 1 { 1.0 } else { 3.0 };
    if b0 == 1 {
        mag
    } else {
        -mag
    }
}

/// Standard normal tail `Q(x)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(x / 2f64.sqrt())
}

/// Theoretical AWGN bit error rate at per-bit SNR `ebn0` (linear).
pub fn theoretical_ber(c: Constellation, ebn0: f64) -> f64 {
    match c {
        Constellation::Bpsk => q_function((2.0 * ebn0).sqrt()),
        Constellation::Qam16 => {
            let a = (0.8 * ebn0).sqrt();
            0.25 * (3.0 * q_function(a) + 2.0 * q_function(3.0 * a) - q_function(5.0 * a))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OfdmConfig {
    pub num_subcarriers: usize,
    pub constellation: Constellation,
    /// DC bias as a multiple of the time-domain standard deviation.
    pub dc_bias_sigma: f64,
    pub clipping: bool,
    /// Sampling period `T_sam` in seconds.
    pub sample_period: f64,
}

impl OfdmConfig {
    pub fn new(num_subcarriers: usize, constellation: Constellation) -> Self {
        OfdmConfig {
            num_subcarriers,
            constellation,
            dc_bias_sigma: 3.0,
            clipping: false,
            sample_period: 1e-7,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_subcarriers;
        if n < 4 || !n.is_power_of_two() {
            return Err(Error::Config(format!(
                "num_subcarriers must be a power of two >= 4, got {n}"
            )));
        }
        if !(self.sample_period > 0.0) {
            return Err(Error::Config("sample_period must be positive".into()));
        }
        if !(self.dc_bias_sigma >= 0.0) {
            return Err(Error::Config("dc_bias_sigma must be non-negative".into()));
        }
        Ok(())
    }

    /// Data symbols per OFDM frame, `N/2 - 1`.
    pub fn payload_len(&self) -> usize {
        self.num_subcarriers / 2 - 1
    }

    pub fn bits_per_frame(&self) -> usize {
        self.payload_len() * self.constellation.bits_per_symbol()
    }
}

/// `[0, u_1..u_{N/2-1}, 0, u*_{N/2-1}..u*_1]`.
pub fn hermitian_extend(u: &[Complex64], n: usize) -> Result<Vec<Complex64>> {
    if n < 4 || !n.is_multiple_of(2) {
        return Err(Error::Domain(format!("frame length must be even and >= 4, got {n}")));
    }
    if u.len() != n / 2 - 1 {
        return Err(Error::Shape {
            expected: n / 2 - 1,
            got: u.len(),
        });
    }
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    for (i, v) in u.iter().enumerate() {
        x[i + 1] = *v;
        x[n - 1 - i] = v.conj();
    }
    Ok(x)
}

/// `Û[n] = ½ (X̂[n] + conj X̂[N-n])` for `n = 1..N/2-1`.
pub fn hermitian_reconstruct(x: &[Complex64]) -> Vec<Complex64> {
    let n = x.len();
    (1..n / 2).map(|i| 0.5 * (x[i] + x[n - i].conj())).collect()
}

/// Unitary DFT pair of fixed length.
#[derive(Clone)]
pub struct Transform {
    n: usize,
    scale: f64,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Transform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Transform").field("n", &self.n).finish()
    }
}

impl Transform {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Transform {
            n,
            scale: 1.0 / (n as f64).sqrt(),
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Unitary IDFT. Returns the real samples and the largest discarded
    /// imaginary part.
    pub fn modulate(&self, x: &[Complex64]) -> (Vec<f64>, f64) {
        let mut buf = x.to_vec();
        self.inv.process(&mut buf);
        let mut residue = 0.0_f64;
        let v = buf
            .iter()
            .map(|c| {
                residue = residue.max((c.im * self.scale).abs());
                c.re * self.scale
            })
            .collect();
        (v, residue)
    }

    /// Unitary DFT of a real sequence.
    pub fn demodulate(&self, v: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = v.iter().map(|&r| Complex64::new(r, 0.0)).collect();
        self.fwd.process(&mut buf);
        for c in &mut buf {
            *c *= self.scale;
        }
        buf
    }
}

/// Time-domain frame after biasing. `ac` is what survives once the receiver
/// removes the bias: equal to the input when clipping is off.
#[derive(Debug, Clone, PartialEq)]
pub struct BiasedFrame {
    pub ac: Vec<f64>,
    pub bias: f64,
    pub clipped: usize,
}

impl BiasedFrame {
    /// Non-negative drive samples `s = ac + b`.
    pub fn samples(&self) -> Vec<f64> {
        self.ac.iter().map(|v| v + self.bias).collect()
    }
}

/// Add `b = bias_sigma · std(V)`; optionally clip what is still negative.
pub fn apply_dc_bias(v: &[f64], bias_sigma: f64, clipping: bool) -> BiasedFrame {
    let n = v.len().max(1) as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    let bias = bias_sigma * var.sqrt();
    let mut clipped = 0;
    let ac = if clipping {
        v.iter()
            .map(|&x| {
                if x < -bias {
                    clipped += 1;
                    -bias
                } else {
                    x
                }
            })
            .collect()
    } else {
        v.to_vec()
    };
    BiasedFrame { ac, bias, clipped }
}

/// Per-PD baseband frequency response
/// `H_k[n] = I^tx Σ_m h_{m,k} exp(-j2π n_s τ_{m,k} / (N T_sam))`, where
/// `n_s` is the signed bin index so the response is conjugate-symmetric and
/// the received time signal stays real.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyResponse {
    pub per_pd: Vec<Vec<Complex64>>,
}

impl FrequencyResponse {
    pub fn from_channel(ch: &ChannelState, cfg: &OfdmConfig) -> Self {
        let n = cfg.num_subcarriers;
        let per_pd = (0..ch.num_pds())
            .map(|k| {
                (0..n)
                    .map(|bin| {
                        let ns = signed_bin(bin, n);
                        (0..ch.num_oaps())
                            .map(|m| {
                                let phase = -2.0 * PI * ns * ch.delays[m][k] / (n as f64 * cfg.sample_period);
                                Complex64::from_polar(ch.received(m, k), phase)
                            })
                            .sum()
                    })
                    .collect()
            })
            .collect();
        FrequencyResponse { per_pd }
    }

    /// Frequency-flat response with the given per-PD gains.
    pub fn flat(gains: &[f64], n: usize) -> Self {
        FrequencyResponse {
            per_pd: gains.iter().map(|&g| vec![Complex64::new(g, 0.0); n]).collect(),
        }
    }

    /// Mean over data bins of `Σ_k |H_k[n]|²` (post-MRC power gain).
    pub fn combining_gain(&self) -> f64 {
        let n = self.per_pd.first().map_or(0, Vec::len);
        if n < 4 {
            return 0.0;
        }
        let bins = 1..n / 2;
        let count = bins.len() as f64;
        bins.map(|b| self.per_pd.iter().map(|h| h[b].norm_sqr()).sum::<f64>())
            .sum::<f64>()
            / count
    }
}

fn signed_bin(bin: usize, n: usize) -> f64 {
    if bin < n / 2 {
        bin as f64
    } else if bin == n / 2 {
        0.0
    } else {
        bin as f64 - n as f64
    }
}

/// Pass one biased frame through every PD's channel and add real AWGN of
/// variance `sigma2` before the DFT. Returns `Y_k[n]` per PD.
pub fn channel_and_receive<R: Rng>(
    frame: &BiasedFrame,
    resp: &FrequencyResponse,
    t: &Transform,
    sigma2: f64,
    rng: &mut R,
) -> Vec<Vec<Complex64>> {
    let x = t.demodulate(&frame.ac);
    let sigma = sigma2.max(0.0).sqrt();
    resp.per_pd
        .iter()
        .map(|h| {
            let w: Vec<f64> = (0..t.len()).map(|_| sigma * rng.sample::<f64, _>(StandardNormal)).collect();
            let wf = t.demodulate(&w);
            h.iter().zip(&x).zip(&wf).map(|((h, x), w)| h * x + w).collect()
        })
        .collect()
}

/// Textbook MRC: `x̂[n] = Σ_k conj(H_k[n]) Y_k[n] / Σ_k |H_k[n]|²`.
pub fn mrc_combine(ys: &[Vec<Complex64>], resp: &FrequencyResponse) -> Result<Vec<Complex64>> {
    if ys.len() != resp.per_pd.len() {
        return Err(Error::Shape {
            expected: resp.per_pd.len(),
            got: ys.len(),
        });
    }
    let n = ys.first().map_or(0, Vec::len);
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for (bin, o) in out.iter_mut().enumerate() {
        let mut num = Complex64::new(0.0, 0.0);
        let mut den = 0.0;
        for (y, h) in ys.iter().zip(&resp.per_pd) {
            num += h[bin].conj() * y[bin];
            den += h[bin].norm_sqr();
        }
        if bin != 0 && bin != n / 2 && den == 0.0 {
            return Err(Error::ZeroGain);
        }
        *o = if den > 0.0 { num / den } else { Complex64::new(0.0, 0.0) };
    }
    Ok(out)
}

/// Which energy the Eb/N0 axis refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EbN0Reference {
    /// Per-bit energy of the unit-gain transmit waveform. Channel gain
    /// differences show up as horizontal shifts of the BER curve.
    Transmit,
    /// Per-bit energy after the channel at the combiner input, so every
    /// channel collapses onto the AWGN curve.
    Receive,
}

/// Real per-sample noise variance for a given Eb/N0 (dB).
///
/// A frame of `N` samples carries `(N/2-1)` symbols of unit energy and, by
/// Hermitian symmetry, `2(N/2-1)` units of time-domain energy, so
/// `E_b = 2 E_s / log2 M`. With `N_0 = 2σ²`,
/// `σ² = E_s G / (log2 M · Eb/N0)` where `G = 1` for the transmit reference
/// and the combining gain for the receive reference.
pub fn noise_variance(ebn0_db: f64, c: Constellation, reference: EbN0Reference, resp: &FrequencyResponse) -> f64 {
    let gamma = 10f64.powf(ebn0_db / 10.0);
    let g = match reference {
        EbN0Reference::Transmit => 1.0,
        EbN0Reference::Receive => resp.combining_gain(),
    };
    g / (c.bits_per_symbol() as f64 * gamma)
}

/// One point of a BER curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BerPoint {
    pub ebn0_db: f64,
    pub ber: f64,
    pub num_bits: u64,
    pub num_errors: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BerReport {
    pub points: Vec<BerPoint>,
    /// Largest imaginary residue seen in any modulated frame.
    pub max_imag_residue: f64,
}

/// Everything a Monte Carlo BER run needs besides the sweep itself.
#[derive(Debug, Clone)]
pub struct BerSetup {
    pub cfg: OfdmConfig,
    pub response: FrequencyResponse,
    pub reference: EbN0Reference,
    /// Extra attenuation in dB applied to the Eb/N0 axis (used by the
    /// half-power baseline).
    pub power_offset_db: f64,
    pub seed: u64,
    pub exec: Execution,
}

impl BerSetup {
    pub fn new(cfg: OfdmConfig, response: FrequencyResponse, seed: u64) -> Self {
        BerSetup {
            cfg,
            response,
            reference: EbN0Reference::Transmit,
            power_offset_db: 0.0,
            seed,
            exec: Execution::default(),
        }
    }
}

/// RNG for frame `index`: one ChaCha stream per frame, independent of which
/// worker runs it.
pub fn frame_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Monte Carlo BER over a sweep of Eb/N0 values.
///
/// Every sweep point sees the same bits and the same unit-variance noise
/// draws scaled by its own `σ` (common random numbers), which keeps the
/// curve monotone and makes gaps between configurations sharp. Use
/// [`run_ber_with_sigmas`] with a zero sigma for a noiseless run.
pub fn run_ber(setup: &BerSetup, ebn0_db: &[f64], num_bits: u64) -> Result<BerReport> {
    setup.cfg.validate()?;
    let sigmas: Vec<f64> = ebn0_db
        .iter()
        .map(|&e| noise_variance(e - setup.power_offset_db, setup.cfg.constellation, setup.reference, &setup.response).sqrt())
        .collect();
    run_ber_with_sigmas(setup, &sigmas, ebn0_db, num_bits)
}

/// Same as [`run_ber`] but with explicit per-point noise standard deviations.
pub fn run_ber_with_sigmas(setup: &BerSetup, sigmas: &[f64], labels: &[f64], num_bits: u64) -> Result<BerReport> {
    setup.cfg.validate()?;
    if setup.response.per_pd.iter().all(|h| h.iter().all(|c| c.norm_sqr() == 0.0)) {
        return Err(Error::ZeroGain);
    }
    let bpf = setup.cfg.bits_per_frame() as u64;
    let frames = num_bits.div_ceil(bpf) as usize;
    let t = Transform::new(setup.cfg.num_subcarriers);
    let tasks = chunks(frames, FRAMES_PER_TASK);
    let partial: Vec<Result<(Vec<u64>, f64)>> = setup.exec.map_indexed(tasks.len(), |i| {
        let (start, len) = tasks[i];
        let mut errors = vec![0u64; sigmas.len()];
        let mut residue = 0.0_f64;
        for f in start..start + len {
            let bits_here = (num_bits - f as u64 * bpf).min(bpf) as usize;
            let r = simulate_frame(setup, &t, sigmas, f as u64, bits_here, &mut errors)?;
            residue = residue.max(r);
        }
        Ok((errors, residue))
    });
    let mut errors = vec![0u64; sigmas.len()];
    let mut residue = 0.0_f64;
    for p in partial {
        let (e, r): (Vec<u64>, f64) = p?;
        for (a, b) in errors.iter_mut().zip(e) {
            *a += b;
        }
        residue = residue.max(r);
    }
    Ok(BerReport {
        points: labels
            .iter()
            .zip(errors)
            .map(|(&l, e)| BerPoint {
                ebn0_db: l,
                ber: e as f64 / num_bits as f64,
                num_bits,
                num_errors: e,
            })
            .collect(),
        max_imag_residue: residue,
    })
}

/// Run one frame at every noise level; add bit errors among the first
/// `bits_used` bits to `errors`. Returns the frame's imaginary residue.
fn simulate_frame(
    setup: &BerSetup,
    t: &Transform,
    sigmas: &[f64],
    index: u64,
    bits_used: usize,
    errors: &mut [u64],
) -> Result<f64> {
    let cfg = &setup.cfg;
    let c = cfg.constellation;
    let bps = c.bits_per_symbol();
    let n = cfg.num_subcarriers;
    let mut rng = frame_rng(setup.seed, index);
    let bits: Vec<u8> = (0..cfg.bits_per_frame()).map(|_| rng.random_range(0..2u8)).collect();
    let u: Vec<Complex64> = bits.chunks(bps).map(|b| c.map(b)).collect();
    let x = hermitian_extend(&u, n)?;
    let (v, residue) = t.modulate(&x);
    let frame = apply_dc_bias(&v, cfg.dc_bias_sigma, cfg.clipping);
    let xr = t.demodulate(&frame.ac);
    let clean: Vec<Vec<Complex64>> = setup
        .response
        .per_pd
        .iter()
        .map(|h| h.iter().zip(&xr).map(|(h, x)| h * x).collect())
        .collect();
    let unit_noise: Vec<Vec<Complex64>> = (0..clean.len())
        .map(|_| {
            let w: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            t.demodulate(&w)
        })
        .collect();
    let mut decided = vec![0u8; bps];
    for (p, &sigma) in sigmas.iter().enumerate() {
        let ys: Vec<Vec<Complex64>> = clean
            .iter()
            .zip(&unit_noise)
            .map(|(y0, z)| y0.iter().zip(z).map(|(a, b)| a + sigma * b).collect())
            .collect();
        let xhat = mrc_combine(&ys, &setup.response)?;
        let uhat = hermitian_reconstruct(&xhat);
        let mut e = 0u64;
        for (s, sym) in uhat.iter().enumerate() {
            c.demap(*sym, &mut decided);
            for (j, d) in decided.iter().enumerate() {
                let idx = s * bps + j;
                if idx < bits_used && *d != bits[idx] {
                    e += 1;
                }
            }
        }
        errors[p] += e;
    }
    Ok(residue)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn hermitian_layout_n8() {
        let u = [c(1.0, 2.0), c(3.0, -1.0), c(0.5, 0.5)];
        let x = hermitian_extend(&u, 8).unwrap();
        let expected = [
            c(0.0, 0.0),
            u[0],
            u[1],
            u[2],
            c(0.0, 0.0),
            u[2].conj(),
            u[1].conj(),
            u[0].conj(),
        ];
        assert_eq!(x, expected);
        assert!(hermitian_extend(&u, 16).is_err());
        assert_eq!(hermitian_reconstruct(&x), u.to_vec());
    }

    #[test]
    fn constellation_round_trip() {
        for c in [Constellation::Bpsk, Constellation::Qam16] {
            let bps = c.bits_per_symbol();
            let mut energy = 0.0;
            for word in 0..(1u8 << bps) {
                let bits: Vec<u8> = (0..bps).map(|i| (word >> i) & 1).collect();
                let s = c.map(&bits);
                energy += s.norm_sqr();
                let mut out = vec![0u8; bps];
                c.demap(s, &mut out);
                assert_eq!(out, bits);
            }
            assert!((energy / (1 << bps) as f64 - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn qam16_neighbours_differ_in_one_bit() {
        let c = Constellation::Qam16;
        let mut pts = Vec::new();
        for word in 0..16u8 {
            let bits: Vec<u8> = (0..4).map(|i| (word >> i) & 1).collect();
            pts.push((c.map(&bits), word));
        }
        let d = 2.0 / 10f64.sqrt();
        for (a, wa) in &pts {
            for (b, wb) in &pts {
                if ((a - b).norm() - d).abs() < 1e-9 {
                    assert_eq!((wa ^ wb).count_ones(), 1);
                }
            }
        }
    }

    #[test]
    fn bias_without_clipping_keeps_signal() {
        let v = [0.3, -1.2, 0.7, 0.2];
        let f = apply_dc_bias(&v, 3.0, false);
        assert_eq!(f.ac, v.to_vec());
        assert!(f.bias > 0.0);
        let z = apply_dc_bias(&[0.0; 8], 3.0, true);
        assert_eq!(z.bias, 0.0);
        assert!(z.samples().iter().all(|s| *s == 0.0));
    }

    #[test]
    fn noise_variance_scaling() {
        let r = FrequencyResponse::flat(&[1.0], 32);
        let s = noise_variance(0.0, Constellation::Bpsk, EbN0Reference::Transmit, &r);
        assert!((s - 1.0).abs() < 1e-12);
        let s = noise_variance(10.0, Constellation::Qam16, EbN0Reference::Transmit, &r);
        assert!((s - 1.0 / 40.0).abs() < 1e-12);
        let r2 = FrequencyResponse::flat(&[0.5, 0.5], 32);
        let s = noise_variance(0.0, Constellation::Bpsk, EbN0Reference::Receive, &r2);
        assert!((s - 0.5).abs() < 1e-12);
    }

    #[test]
    fn mrc_rejects_all_zero_gains() {
        let r = FrequencyResponse::flat(&[0.0, 0.0], 8);
        let ys = vec![vec![c(0.0, 0.0); 8]; 2];
        assert!(matches!(mrc_combine(&ys, &r), Err(Error::ZeroGain)));
    }
}
