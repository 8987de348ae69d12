//! Independent reference computations used to validate the solvers.
//!
//! Nothing in here is used on a computation path; the functions only exist
//! to give checks something to compare against.

use std::f64::consts::PI;

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// a(n, m) from the one-dimensional Fourier representation
/// a = (2/π) ∫₀^π (1 − cos(mθ) t^{|n|}) / √(b² − 1) dθ, b = 2 − cos θ,
/// t = b − √(b² − 1), evaluated by composite Gauss–Legendre quadrature on a
/// mesh graded towards θ = 0.
pub fn potential_quadrature(n: i64, m: i64) -> f64 {
    let (n, m) = if n.abs() >= m.abs() { (n.abs(), m.abs()) } else { (m.abs(), n.abs()) };
    if n == 0 && m == 0 {
        return 0.0;
    }
    let (gx, gw) = gauss_legendre(20);
    let f = |th: f64| {
        let s = (0.5 * th).sin();
        let bm1 = 2.0 * s * s;
        let b = 1.0 + bm1;
        let root = (bm1 * (b + 1.0)).sqrt();
        let t = b - root;
        (1.0 - (m as f64 * th).cos() * t.powi(n as i32)) / root
    };
    // geometric grading near zero, uniform panels further out
    let scale = 1.0 / (n.max(m).max(1) as f64);
    let mut edges = vec![0.0];
    let mut e = 1e-12f64.max(scale * 1e-9);
    while e < scale.min(PI) {
        edges.push(e);
        e *= 1.6;
    }
    let start = *edges.last().unwrap();
    let panels = 400 + 40 * m.max(1) as usize;
    for k in 1..=panels {
        edges.push(start + (PI - start) * k as f64 / panels as f64);
    }
    let mut total = 0.0;
    for win in edges.windows(2) {
        let (lo, hi) = (win[0], win[1]);
        let (c, h) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        total += h * gx.iter().zip(&gw).map(|(x, w)| w * f(c + h * x)).sum::<f64>();
    }
    2.0 / PI * total
}

fn ln_binom_half(k: u64, j: i64) -> f64 {
    // ln[ C(k, (k + j)/2) 2^-k ], requires k ≡ j (mod 2) and |j| ≤ k
    let up = ((k as i64 + j) / 2) as f64;
    let down = k as f64 - up;
    ln_gamma(k as f64 + 1.0) - ln_gamma(up + 1.0) - ln_gamma(down + 1.0) - k as f64 * std::f64::consts::LN_2
}

fn ln_gamma(x: f64) -> f64 {
    statrs::function::gamma::ln_gamma(x)
}

/// a(n, m) = Σ_k [P(S_k = 0) − P(S_k = x)] using the factorisation of the
/// walk into two independent ±1 walks along the diagonals. Partial sums at
/// K, 2K, 4K are Richardson-extrapolated assuming a c₁/K + c₂/K² tail.
pub fn potential_series(n: i64, m: i64, k_max: u64) -> f64 {
    let (u, v) = (n + m, n - m);
    let prob = |k: u64, uu: i64, vv: i64| -> f64 {
        if (k as i64 + uu) % 2 != 0 || uu.unsigned_abs() > k || vv.unsigned_abs() > k {
            return 0.0;
        }
        (ln_binom_half(k, uu) + ln_binom_half(k, vv)).exp()
    };
    let partial = |kk: u64| -> f64 {
        let mut s = 0.0;
        // pair consecutive k so that both parities contribute to each term
        for k in 0..kk {
            s += prob(k, 0, 0) - prob(k, u, v);
        }
        s
    };
    let k = k_max / 4;
    let (s1, s2, s4) = (partial(k), partial(2 * k), partial(4 * k));
    // eliminate c₁/K and c₂/K²
    let r1 = 2.0 * s2 - s1;
    let r2 = 2.0 * s4 - s2;
    (4.0 * r2 - r1) / 3.0
}
