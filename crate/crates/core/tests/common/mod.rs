//! Independent reference computations shared by the integration tests.
//! None of these call into the crate's numerics.

#![allow(dead_code)]

use std::f64::consts::PI;

/// Gaussian tail `Q(x)` by composite Simpson on `[x, x + 12]`.
pub fn q_oracle(x: f64) -> f64 {
    let n = 20_000;
    let (a, b) = (x, x + 12.0);
    let h = (b - a) / n as f64;
    let pdf = |t: f64| (-0.5 * t * t).exp() / (2.0 * PI).sqrt();
    let mut s = pdf(a) + pdf(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * pdf(a + i as f64 * h);
    }
    s * h / 3.0
}

/// BPSK bit error rate at linear Eb/N0.
pub fn bpsk_ber_oracle(ebn0: f64) -> f64 {
    q_oracle((2.0 * ebn0).sqrt())
}

/// Received intensity from a downward Lambertian LED at `(sx, sy, h)` on an
/// upward PD at `(x, y, 0)`: `I A (m+1)/(2π) h^{m+1} / d^{m+3}` inside both
/// cones, zero outside.
pub fn lambertian_oracle(
    tx: f64,
    area: f64,
    semi_deg: f64,
    fov_deg: f64,
    src: (f64, f64, f64),
    pd: (f64, f64, f64),
) -> f64 {
    let semi = semi_deg.to_radians();
    let m = -(2f64.ln()) / semi.cos().ln();
    let (dx, dy, dz) = (pd.0 - src.0, pd.1 - src.1, src.2 - pd.2);
    let d = (dx * dx + dy * dy + dz * dz).sqrt();
    let angle = (dz / d).acos();
    if angle > semi + 1e-12 || angle > fov_deg.to_radians() + 1e-12 {
        return 0.0;
    }
    tx * area * (m + 1.0) / (2.0 * PI) * (dz / d).powf(m) * (dz / d) / (d * d)
}

/// Scalar exact AoD through the collimating surface. Angles are measured
/// from the optical axis, positive towards +x. The surface normal sits at
/// `θ = atan2(n0 sin φ, n0 cos φ − 1)` and the ray leaves glass of index
/// `n` into air.
pub fn aod_oracle(phi: f64, n: f64, n0: f64) -> f64 {
    let theta = (n0 * phi.sin()).atan2(n0 * phi.cos() - 1.0);
    theta + (n * (phi - theta).sin()).asin()
}

/// Least-squares slope of `y` against `x`.
pub fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Three-sigma binomial band around `p` for `n` trials.
pub fn binomial_3sigma(p: f64, n: u64) -> f64 {
    3.0 * (p * (1.0 - p) / n as f64).sqrt()
}

/// `F(ξ0)` written out term by term for the symmetry check.
pub fn f_oracle(xi0: f64, mu: usize, eps: f64, h: f64, x: f64) -> f64 {
    let mut total = 0.0;
    for m in 1..=mu {
        let a = xi0 + 2.0 * PI * m as f64 / mu as f64;
        let (sx, sy) = (eps * a.cos(), eps * a.sin());
        // d2: squared distance from the floor point (x, x) to source m.
        let num = -(2f64.sqrt()) * eps * (a - PI / 4.0).sin() * x;
        let d2 = (x - sx).powi(2) + (x - sy).powi(2) + h * h;
        total += num / (d2 * d2 * d2);
    }
    total
}
