//! Planner for the modified hierarchical cooperation scheme.
//!
//! Level `k` groups `n_k` nodes into a cluster made of `n_k / n_{k-1}`
//! level-`(k-1)` clusters; `m_{k-1} = G_k` nodes of each take part in the
//! cluster-to-cluster MIMO phase. All order constants are set to one and
//! logarithms are base 2.

use crate::channel::Regime;
use crate::error::{ensure, Result};

/// Default quantisation rate in subblocks per time slot.
pub const DEFAULT_Q: u32 = 3;

/// `y = lambda log2(1 / lambda)`.
pub fn wavelength_term(lambda: f64) -> Result<f64> {
    ensure!(
        lambda > 0.0 && lambda < 1.0,
        "wavelength must lie in (0, 1), got {lambda}"
    );
    Ok(lambda * (1.0 / lambda).log2())
}

/// Number of level-`(k-1)` nodes taking part in a level-`k` MIMO phase:
/// `min{n_{k-1}, n_{k-1} / ((n_k n)^(1/2) y)}`.
pub fn g_k_real(n_prev: f64, n_cur: f64, n: f64, lambda: f64) -> Result<f64> {
    ensure!(
        n_prev >= 1.0 && n_prev <= n_cur && n_cur <= n,
        "need 1 <= n_prev <= n_cur <= n"
    );
    let y = wavelength_term(lambda)?;
    Ok(n_prev.min(n_prev / ((n_cur * n).sqrt() * y)))
}

/// [`g_k_real`] floored to a positive integer.
pub fn g_k(n_prev: u64, n_cur: u64, n: u64, lambda: f64) -> Result<u64> {
    let g = g_k_real(n_prev as f64, n_cur as f64, n as f64, lambda)?;
    Ok((g.floor() as u64).max(1))
}

/// Aggregate throughput of level `k` from the time-slot count of its three
/// phases.
pub fn throughput_recursion(t_prev: f64, n_prev: f64, n_cur: f64, m: f64, r_k: f64, q: f64) -> f64 {
    let phase1 = 9.0 * m * n_prev / t_prev;
    let phase2 = n_cur * m / r_k;
    let phase3 = 9.0 * q * m * m * n_prev / (r_k * t_prev);
    n_cur * m / (phase1 + phase2 + phase3)
}

/// Multihop throughput `sqrt(n_0) / log2 n_0` of the bottom level.
pub fn base_throughput(n0: f64) -> Result<f64> {
    ensure!(n0 >= 2.0, "bottom clusters need at least two nodes, got {n0}");
    Ok(n0.sqrt() / n0.log2())
}

/// MIMO rate `G_k / (log2 n)^7` per level-`k` transmission.
pub fn rate_rk(g_k: f64, n: f64) -> f64 {
    g_k / n.log2().powi(7)
}

/// Regime threshold
/// `Lambda(v) = (3^(h-v)(3+v) - 2^(h-v)) / (3^(h-v)(4+v) - 2^(1+h-v))`.
pub fn lambda_threshold(v: usize, h: usize) -> f64 {
    let e = (h - v) as i32;
    let (p3, p2) = (3f64.powi(e), 2f64.powi(e));
    let v = v as f64;
    (p3 * (3.0 + v) - p2) / (p3 * (4.0 + v) - 2.0 * p2)
}

/// `log_n(lambda log2(1 / lambda))`.
pub fn log_wavelength_exponent(n: f64, lambda: f64) -> Result<f64> {
    ensure!(n > 1.0, "network needs more than one node");
    Ok(wavelength_term(lambda)?.ln() / n.ln())
}

/// Regime index `b(n, lambda, h)` in `1..=h+1`.
pub fn regime_classifier(n: f64, lambda: f64, h: usize) -> Result<usize> {
    ensure!(h >= 1, "hierarchy needs at least one level");
    let x = log_wavelength_exponent(n, lambda)?;
    Ok(regime_of_exponent(x, h))
}

fn regime_of_exponent(x: f64, h: usize) -> usize {
    if x <= -lambda_threshold(h, h) {
        return h + 1;
    }
    (2..=h).rev().find(|&k| x <= -lambda_threshold(k - 1, h)).unwrap_or(1)
}

/// Throughput exponents `(delta_u, tau_u)` of regime `u`.
pub fn delta_tau(u: usize, h: usize) -> Result<(f64, f64)> {
    ensure!((1..=h + 1).contains(&u), "regime index {u} outside 1..={}", h + 1);
    let e = (h as i32) - (u as i32);
    let (p3, p2) = (3f64.powi(e + 1), 2f64.powi(e));
    let den = p3 + p2 * (u as f64 - 1.0);
    Ok((u as f64 * p2 / den, (p3 - 2.0 * p2) / den))
}

/// Exponents `(alpha_{h',k}, beta_{h',k})` of
/// `T_k ~ n_k^alpha / ((lambda log lambda^-1)^2 n)^beta`, closed form, for
/// `k >= h' - 1`.
pub fn alpha_beta(h_prime: usize, k: usize) -> (f64, f64) {
    let e = (1 + k) as i32 - h_prime as i32;
    let (p3, p2) = (3f64.powi(e), 2f64.powi(e));
    let hp = h_prime as f64 - 1.0;
    let den = 2.0 * p3 + p2 * hp;
    ((p3 + p2 * hp) / den, (p3 - p2) / den)
}

/// The same exponents from the one-step recursion seeded with
/// `(h' / (h' + 1), 0)` at level `h' - 1`.
pub fn alpha_beta_recursive(h_prime: usize, k: usize) -> (f64, f64) {
    let mut a = h_prime as f64 / (h_prime as f64 + 1.0);
    let mut b = 0.0;
    for _ in h_prime..=k {
        let den = 2.0 * (2.0 - a);
        (a, b) = ((a + 1.0) / den, (1.0 - a + 2.0 * b) / den);
    }
    (a, b)
}

/// Real-valued optimal cluster sizes `n_0..=n_h` built top-down.
pub fn real_cluster_sizes(n: f64, lambda: f64, h: usize) -> Result<Vec<f64>> {
    let h_prime = regime_classifier(n, lambda, h)?;
    let y = wavelength_term(lambda)?;
    let mut sizes = vec![0.0; h + 1];
    sizes[h] = n;
    for k in (1..=h).rev() {
        sizes[k - 1] = if k >= h_prime {
            let (a, b) = alpha_beta(h_prime, k - 1);
            let den = 2.0 * (2.0 - a);
            sizes[k].powf(3.0 / den) * (y * y * n).powf((1.0 - 2.0 * b) / den)
        } else {
            sizes[k].powf((k as f64 + 1.0) / (k as f64 + 2.0))
        };
    }
    Ok(sizes)
}

/// Explicit solution `n_k = n^A_k y^B_k` of the DoF-regime recursion,
/// valid for `h' - 1 <= k <= h` with `h' = b(n, lambda, h) <= h`.
pub fn explicit_cluster_size(n: f64, lambda: f64, h: usize, k: usize) -> Result<f64> {
    let hp = regime_classifier(n, lambda, h)?;
    ensure!(hp <= h, "no DoF-limited levels in regime {hp}");
    ensure!(k + 1 >= hp && k <= h, "level {k} outside {}..={h}", hp - 1);
    let y = wavelength_term(lambda)?;
    let (h, k, hpf) = (h as i32, k as i32, hp as f64);
    let hp = hp as i32;
    let p = |b: f64, e: i32| b.powi(e);
    let den = p(3.0, 1 + h - hp) + p(2.0, h - hp) * (hpf - 1.0);
    let a = (p(3.0, 1 + h - hp) + hpf * p(2.0, 1 + k - hp) * p(3.0, h - k) - p(2.0, h - hp) * (1.0 + hpf)) / den;
    let b = (p(2.0, 1 + k - hp) * p(3.0, h - k) - p(2.0, 1 + h - hp)) * (1.0 + hpf) / den;
    Ok(n.powf(a) * y.powf(b))
}

/// Integer plan of the modified scheme with its per-level rates and
/// throughputs.
#[derive(Debug, Clone, PartialEq)]
pub struct HierarchyPlan {
    pub n: u64,
    pub wavelength: f64,
    pub h: usize,
    pub q: u32,
    /// `b(n, lambda, h)`.
    pub regime_index: usize,
    /// `n_0..=n_h`.
    pub n_seq: Vec<u64>,
    /// `m_0..m_{h-1}`; `m_{k-1}` nodes per level-`(k-1)` cluster take part
    /// in level `k`.
    pub m_seq: Vec<u64>,
    /// `R_1..=R_h`.
    pub rates: Vec<f64>,
    /// `T_0..=T_h`.
    pub throughputs: Vec<f64>,
}

impl HierarchyPlan {
    /// Assembles a plan from given sizes, filling `m`, `R` and `T`.
    pub fn from_sizes(n_seq: Vec<u64>, wavelength: f64, q: u32) -> Result<Self> {
        ensure!(n_seq.len() >= 2, "plan needs at least one level");
        ensure!(
            n_seq.windows(2).all(|w| w[0] <= w[1]),
            "cluster sizes must be nondecreasing"
        );
        let h = n_seq.len() - 1;
        let n = n_seq[h];
        let mut m_seq = Vec::with_capacity(h);
        let mut rates = Vec::with_capacity(h);
        let mut throughputs = vec![base_throughput(n_seq[0] as f64)?];
        for k in 1..=h {
            let m = g_k(n_seq[k - 1], n_seq[k], n, wavelength)?;
            let r = rate_rk(m as f64, n as f64);
            let t = throughput_recursion(
                throughputs[k - 1],
                n_seq[k - 1] as f64,
                n_seq[k] as f64,
                m as f64,
                r,
                q as f64,
            );
            m_seq.push(m);
            rates.push(r);
            throughputs.push(t);
        }
        Ok(Self {
            n,
            wavelength,
            h,
            q,
            regime_index: regime_classifier(n as f64, wavelength, h)?,
            n_seq,
            m_seq,
            rates,
            throughputs,
        })
    }

    /// `T_h`.
    pub fn throughput(&self) -> f64 {
        *self.throughputs.last().expect("plan has levels")
    }
}

/// Optimal sizes rounded to integers, with `2 <= n_{k-1} <= n_k`.
pub fn optimal_cluster_sizes(n: u64, lambda: f64, h: usize, q: u32) -> Result<HierarchyPlan> {
    ensure!(n >= 2, "network needs at least two nodes");
    let real = real_cluster_sizes(n as f64, lambda, h)?;
    let mut n_seq = vec![0u64; h + 1];
    n_seq[h] = n;
    for k in (0..h).rev() {
        n_seq[k] = (real[k].round() as u64).clamp(2, n_seq[k + 1]);
    }
    HierarchyPlan::from_sizes(n_seq, lambda, q)
}

/// `T_h` from the recursion on real-valued sizes, without integer rounding.
pub fn real_plan_throughput(n: f64, lambda: f64, h: usize, q: f64) -> Result<f64> {
    let sizes = real_cluster_sizes(n, lambda, h)?;
    let mut t = base_throughput(sizes[0].max(2.0))?;
    for k in 1..=h {
        let m = g_k_real(sizes[k - 1].max(1.0), sizes[k], n, lambda)?;
        t = throughput_recursion(t, sizes[k - 1], sizes[k], m, rate_rk(m, n), q);
    }
    Ok(t)
}

/// `min_k n^delta_k / y^tau_k` over `k in 1..=h+1`, without the polylog
/// factor.
pub fn min_formula(n: f64, lambda: f64, h: usize) -> Result<f64> {
    let y = wavelength_term(lambda)?;
    (1..=h + 1)
        .map(|k| delta_tau(k, h).map(|(d, t)| n.powf(d) / y.powf(t)))
        .try_fold(f64::INFINITY, |acc, v| v.map(|v| acc.min(v)))
}

/// `n^delta_b / y^tau_b` at the classified regime, without the polylog
/// factor.
pub fn regime_formula(n: f64, lambda: f64, h: usize) -> Result<f64> {
    let y = wavelength_term(lambda)?;
    let (d, t) = delta_tau(regime_classifier(n, lambda, h)?, h)?;
    Ok(n.powf(d) / y.powf(t))
}

/// `(log2 n)^(7h + 1)`.
pub fn polylog_factor(n: f64, h: usize) -> f64 {
    n.log2().powi(7 * h as i32 + 1)
}

/// Upper bound on the dense-network capacity,
/// `min{lambda^-1 (log2 lambda^-2)^2, n log2 n}`.
pub fn dense_upper_bound(n: f64, lambda: f64) -> f64 {
    dof_term(lambda).min(n * n.log2())
}

fn dof_term(lambda: f64) -> f64 {
    (1.0 / lambda) * (1.0 / (lambda * lambda)).log2().powi(2)
}

/// Wavelength of the unit-area network equivalent to an extended one.
pub fn equivalent_wavelength(n: f64, lambda: f64, regime: Regime) -> f64 {
    match regime {
        Regime::Dense => lambda,
        Regime::Extended => lambda / n.sqrt(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingPrediction {
    pub regime: Regime,
    pub n: f64,
    pub wavelength: f64,
    /// Wavelength of the equivalent unit-area network.
    pub effective_wavelength: f64,
    pub h: usize,
    pub regime_index: usize,
    pub delta: f64,
    pub tau: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
    /// Whether the network is limited by spatial degrees of freedom rather
    /// than by the number of nodes.
    pub dof_limited: bool,
}

/// Predicted throughput bounds. Extended networks are evaluated as the
/// equivalent dense network with wavelength `lambda n^-1/2`.
pub fn predicted_throughput(n: f64, lambda: f64, h: usize, regime: Regime) -> Result<ScalingPrediction> {
    ensure!(n >= 2.0, "network needs at least two nodes");
    ensure!(lambda > 0.0, "wavelength must be positive");
    let eff = equivalent_wavelength(n, lambda, regime);
    let regime_index = regime_classifier(n, eff, h)?;
    let (delta, tau) = delta_tau(regime_index, h)?;
    let lower_bound = min_formula(n, eff, h)? / polylog_factor(n, h);
    // DoF order 1 / lambda against node count, polylog factors dropped
    let dof = 1.0 / eff;
    let dof_limited = dof < n * (1.0 - 1e-9);
    Ok(ScalingPrediction {
        regime,
        n,
        wavelength: lambda,
        effective_wavelength: eff,
        h,
        regime_index,
        delta,
        tau,
        lower_bound,
        upper_bound: dense_upper_bound(n, eff),
        dof_limited,
    })
}

impl ScalingPrediction {
    /// Applies the duty-cycled operation needed for `alpha > 2`. Only
    /// extended networks are power limited; dense ones are unchanged.
    pub fn with_path_loss(mut self, alpha: f64) -> Result<Self> {
        let (_, multiplier) = bursty_adjustment(self.n, alpha)?;
        if self.regime == Regime::Extended {
            self.lower_bound *= multiplier;
        }
        Ok(self)
    }
}

/// Active fraction `n^(1 - alpha/2)` of the bursty scheme and the resulting
/// throughput multiplier for extended networks.
pub fn bursty_adjustment(n: f64, alpha: f64) -> Result<(f64, f64)> {
    ensure!(alpha >= 2.0, "path-loss exponent must be at least 2, got {alpha}");
    ensure!(n >= 1.0, "network needs at least one node");
    let fraction = n.powf(1.0 - alpha / 2.0);
    Ok((fraction, fraction))
}

/// Smallest integer `h > 8 / eps'`.
pub fn levels_for(eps_prime: f64) -> usize {
    (8.0 / eps_prime).floor() as usize + 1
}

/// `min_k (delta_k - tau_k x) - eps'/4 - (1 - eps') min{-x, 1}`: positive
/// when the best regime exponent beats `(1 - eps')` of the target, with the
/// polylog loss budgeted at `eps'/4`.
pub fn exponent_margin(x: f64, h: usize, eps_prime: f64) -> Result<f64> {
    let best = (1..=h + 1)
        .map(|k| delta_tau(k, h).map(|(d, t)| d - t * x))
        .try_fold(f64::INFINITY, |acc, v| v.map(|v| acc.min(v)))?;
    Ok(best - eps_prime / 4.0 - (1.0 - eps_prime) * (-x).min(1.0))
}
