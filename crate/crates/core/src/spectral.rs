//! Statistics of the normalised channel matrix between two clusters.
//!
//! The second eigenvalue moment of `F F*` is controlled by the four-node
//! cosine terms `Q_ijkl`. This module computes them, estimates their mean by
//! Monte Carlo, checks the mean's decay in the DoF quantity `M`, and
//! numerically verifies the oscillatory integral bound used to establish that
//! decay.

use std::f64::consts::TAU;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng as _;

use crate::channel::{phase_factor, wavelength_fraction};
use crate::error::{ensure, Error, Result};
use crate::geometry::{ClusterPair, Point};
use crate::mimo::dof_limit_m;
use crate::rng::{self, Rng};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Cluster-pair geometry without node positions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairGeometry {
    pub side: f64,
    pub separation: f64,
    pub wavelength: f64,
    pub alpha: f64,
}

impl PairGeometry {
    pub fn new(side: f64, separation: f64, wavelength: f64, alpha: f64) -> Result<Self> {
        dof_limit_m(side, separation, wavelength)?;
        ensure!(alpha >= 2.0, "path-loss exponent must be at least 2, got {alpha}");
        Ok(Self {
            side,
            separation,
            wavelength,
            alpha,
        })
    }

    pub fn dof(&self) -> f64 {
        dof_limit_m(self.side, self.separation, self.wavelength).expect("validated on construction")
    }

    fn amplitude(&self, d: f64) -> f64 {
        (self.separation / d).powf(self.alpha / 2.0)
    }

    fn tx_point(&self, rng: &mut Rng) -> Point {
        Point::new(rng.random::<f64>() * self.side, rng.random::<f64>() * self.side)
    }

    fn rx_point(&self, rng: &mut Rng) -> Point {
        Point::new(
            self.separation + rng.random::<f64>() * self.side,
            rng.random::<f64>() * self.side,
        )
    }

    /// Places `n` nodes per cluster. Smaller placements from the same seed
    /// are prefixes of larger ones.
    pub fn place(&self, n: usize, seed: u64) -> Result<ClusterPair> {
        let mut rng = rng::seeded(seed);
        let (tx, rx) = (0..n)
            .map(|_| (self.tx_point(&mut rng), self.rx_point(&mut rng)))
            .unzip();
        ClusterPair::from_points(self.side, self.separation, tx, rx)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QSample {
    /// Receive indices, `i < j`.
    pub i: usize,
    pub j: usize,
    /// Transmit indices, `k < l`.
    pub k: usize,
    pub l: usize,
    pub value: f64,
}

/// `Q_ijkl = a_ik a_il a_jk a_jl cos(2 pi / lambda (d_ik - d_il - d_jk + d_jl))`
/// with `a = (L / d)^(alpha / 2)`. Indices are zero-based.
pub fn q_term(
    pair: &ClusterPair,
    (i, j): (usize, usize),
    (k, l): (usize, usize),
    wavelength: f64,
    alpha: f64,
) -> Result<QSample> {
    let n = pair.nodes();
    ensure!(
        i < j && j < n,
        "receive indices must satisfy i < j < {n}, got ({i}, {j})"
    );
    ensure!(
        k < l && l < n,
        "transmit indices must satisfy k < l < {n}, got ({k}, {l})"
    );
    ensure!(wavelength > 0.0, "wavelength must be positive");
    let d = |r: usize, t: usize| pair.rx[r].distance(pair.tx[t]);
    let a = |dist: f64| (pair.separation / dist).powf(alpha / 2.0);
    let (dik, dil, djk, djl) = (d(i, k), d(i, l), d(j, k), d(j, l));
    ensure!(dik > 0.0 && dil > 0.0 && djk > 0.0 && djl > 0.0, "coincident nodes");
    let frac = |x: f64| wavelength_fraction(x, wavelength);
    let turns = frac(dik) - frac(dil) - frac(djk) + frac(djl);
    let value = a(dik) * a(dil) * a(djk) * a(djl) * (TAU * turns).cos();
    Ok(QSample { i, j, k, l, value })
}

/// Normalised channel `F_ik = (L / d_ik)^(alpha/2) exp(-j 2 pi d_ik / lambda)`,
/// rows indexed by receivers.
pub fn normalized_channel(pair: &ClusterPair, wavelength: f64, alpha: f64) -> Result<DMatrix<Complex64>> {
    let mut f = DMatrix::zeros(pair.rx.len(), pair.tx.len());
    for (i, r) in pair.rx.iter().enumerate() {
        for (k, t) in pair.tx.iter().enumerate() {
            let d = r.distance(*t);
            if d.is_nan() || d <= 0.0 {
                return Err(Error::Singular(format!("receiver {i} coincides with transmitter {k}")));
            }
            f[(i, k)] = phase_factor(d, wavelength) * (pair.separation / d).powf(alpha / 2.0);
        }
    }
    Ok(f)
}

/// `(E[gamma], E[gamma^2]) = (tr(F F*) / N, tr(F F* F F*) / N)` with `N` the
/// number of rows.
pub fn gamma_trace_moments(f: &DMatrix<Complex64>) -> (f64, f64) {
    let n = f.nrows().max(1) as f64;
    let gram = f * f.adjoint();
    (f.norm_squared() / n, gram.norm_squared() / n)
}

/// `4 / (N^2 (N-1)^2) * sum_{i<j, k<l} Q_ijkl`, computed from
/// `tr((F F*)^2)` minus the index-coincident terms.
pub fn full_sample_mean(pair: &ClusterPair, wavelength: f64, alpha: f64) -> Result<f64> {
    let n = pair.nodes();
    ensure!(n >= 2, "full sample mean needs at least two nodes per cluster");
    let f = normalized_channel(pair, wavelength, alpha)?;
    let p = f.map(|z| z.norm_sqr());
    let total = (&f * f.adjoint()).norm_squared();
    let rows: f64 = p.row_iter().map(|r| r.sum().powi(2)).sum();
    let cols: f64 = p.column_iter().map(|c| c.sum().powi(2)).sum();
    let diag: f64 = p.iter().map(|v| v * v).sum();
    let nf = n as f64;
    Ok((total - rows - cols + diag) / (nf * nf * (nf - 1.0) * (nf - 1.0)))
}

/// Monte Carlo estimate of `E[Q_1212]` at one geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayPoint {
    pub wavelength: f64,
    pub dof: f64,
    pub mean: f64,
    pub std_error: f64,
    /// 95% normal-approximation half-width.
    pub half_width: f64,
    pub trials: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DecaySeries {
    pub points: Vec<DecayPoint>,
}

/// Estimates `E[Q_1212]` from `trials` independent blocks.
///
/// Each block draws two transmit nodes and `receive_block` receive nodes and
/// averages `Q` over every receive pair, an unbiased U-statistic whose blocks
/// are i.i.d. With `receive_block = 2` every block is a single plain
/// four-node draw.
pub fn estimate_eq(geom: &PairGeometry, trials: usize, receive_block: usize, seed: u64) -> Result<DecayPoint> {
    ensure!(trials >= 1, "need at least one trial");
    ensure!(receive_block >= 2, "a receive block needs at least two nodes");
    let mut rng = rng::seeded(seed);
    let pairs = (receive_block * (receive_block - 1) / 2) as f64;
    let (mut mean, mut m2) = (0.0, 0.0);
    for t in 0..trials {
        let (tk, tl) = (geom.tx_point(&mut rng), geom.tx_point(&mut rng));
        let mut phasor = Complex64::new(0.0, 0.0);
        let mut energy = 0.0;
        for _ in 0..receive_block {
            let r = geom.rx_point(&mut rng);
            let (dk, dl) = (r.distance(tk), r.distance(tl));
            let amp = geom.amplitude(dk) * geom.amplitude(dl);
            let turns = wavelength_fraction(dk, geom.wavelength) - wavelength_fraction(dl, geom.wavelength);
            phasor += Complex64::from_polar(amp, TAU * turns);
            energy += amp * amp;
        }
        // sum_{i<j} A_i A_j cos(theta_i - theta_j)
        let block = 0.5 * (phasor.norm_sqr() - energy) / pairs;
        let delta = block - mean;
        mean += delta / (t + 1) as f64;
        m2 += delta * (block - mean);
    }
    let std_error = if trials > 1 {
        (m2 / (trials - 1) as f64 / trials as f64).sqrt()
    } else {
        f64::INFINITY
    };
    Ok(DecayPoint {
        wavelength: geom.wavelength,
        dof: geom.dof(),
        mean,
        std_error,
        half_width: Z95 * std_error,
        trials,
    })
}

/// Least-squares slope of `ln|E[Q]|` against `ln M`.
pub fn decay_regression(series: &DecaySeries) -> Result<f64> {
    let pts = &series.points;
    ensure!(
        pts.len() >= 5,
        "decay regression needs at least 5 points, got {}",
        pts.len()
    );
    ensure!(pts.iter().all(|p| p.dof > 1.0), "every point must have M > 1");
    ensure!(pts.iter().all(|p| p.mean != 0.0), "a zero mean has no logarithm");
    let (lo, hi) = pts
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), p| (lo.min(p.dof), hi.max(p.dof)));
    ensure!(
        hi / lo >= 100.0 * (1.0 - 1e-12),
        "M spans only {:.3} decades",
        (hi / lo).log10()
    );
    let xs: Vec<f64> = pts.iter().map(|p| p.dof.ln()).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.mean.abs().ln()).collect();
    Ok(least_squares_slope(&xs, &ys))
}

pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Full sample means over nested placements of growing size.
#[derive(Debug, Clone, PartialEq)]
pub struct LlnReport {
    pub sizes: Vec<usize>,
    pub seeds: Vec<u64>,
    /// `means[s][r]` is the full sample mean at `sizes[s]` for `seeds[r]`.
    pub means: Vec<Vec<f64>>,
    /// Mean over seeds of `|means[s+1][r] - means[s][r]|`.
    pub successive_diffs: Vec<f64>,
}

impl LlnReport {
    /// Mean over seeds at size index `s` and its standard error.
    pub fn seed_average(&self, s: usize) -> (f64, f64) {
        let v = &self.means[s];
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = if v.len() > 1 {
            v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            f64::INFINITY
        };
        (mean, (var / n).sqrt())
    }

    /// Distance between the seed average at size index `s` and a Monte
    /// Carlo estimate, in combined standard errors.
    pub fn z_score(&self, s: usize, estimate: &DecayPoint) -> f64 {
        let (mean, se) = self.seed_average(s);
        (mean - estimate.mean).abs() / se.hypot(estimate.std_error)
    }
}

/// For each seed, places `max(sizes)` nodes per cluster and evaluates the
/// full sample mean on the prefix of each size, so that every seed traces one
/// realisation of a growing network.
pub fn lln_convergence_check(geom: &PairGeometry, sizes: &[usize], seeds: &[u64]) -> Result<LlnReport> {
    ensure!(
        !sizes.is_empty() && !seeds.is_empty(),
        "need at least one size and one seed"
    );
    ensure!(sizes.windows(2).all(|w| w[0] < w[1]), "sizes must be increasing");
    let largest = *sizes.last().expect("nonempty");
    let mut means = vec![Vec::with_capacity(seeds.len()); sizes.len()];
    for &seed in seeds {
        let full = geom.place(largest, seed)?;
        for (s, &n) in sizes.iter().enumerate() {
            let sub =
                ClusterPair::from_points(geom.side, geom.separation, full.tx[..n].to_vec(), full.rx[..n].to_vec())?;
            means[s].push(full_sample_mean(&sub, geom.wavelength, geom.alpha)?);
        }
    }
    let successive_diffs = means
        .windows(2)
        .map(|w| w[0].iter().zip(&w[1]).map(|(a, b)| (a - b).abs()).sum::<f64>() / seeds.len() as f64)
        .collect();
    Ok(LlnReport {
        sizes: sizes.to_vec(),
        seeds: seeds.to_vec(),
        means,
        successive_diffs,
    })
}

// ---------------------------------------------------------------------------
// Oscillatory integral bound

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum Waveform {
    Cos,
    Sin,
    Square,
    Triangle,
    /// Evaluated at the phase in turns, `t in [0, 1)`.
    Custom(RealFn),
}

impl std::fmt::Debug for Waveform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Waveform::Cos => "Cos",
            Waveform::Sin => "Sin",
            Waveform::Square => "Square",
            Waveform::Triangle => "Triangle",
            Waveform::Custom(_) => "Custom",
        })
    }
}

/// A periodic function with `g(x + p/2) = -g(x)` and `max |g| = 1`.
#[derive(Debug, Clone)]
pub struct Periodic {
    pub period: f64,
    pub shape: Waveform,
}

impl Periodic {
    pub fn new(period: f64, shape: Waveform) -> Result<Self> {
        ensure!(
            period > 0.0 && period.is_finite(),
            "period must be positive, got {period}"
        );
        let g = Self { period, shape };
        if matches!(g.shape, Waveform::Custom(_)) {
            let samples = 512;
            for s in 0..samples {
                let x = period * s as f64 / samples as f64;
                let (u, v) = (g.eval(x), g.eval(x + 0.5 * period));
                ensure!(
                    u.abs() <= 1.0 + 1e-12,
                    "periodic function exceeds 1 in magnitude at {x}"
                );
                ensure!(
                    (u + v).abs() <= 1e-9,
                    "periodic function is not half-period antisymmetric at {x}"
                );
            }
        }
        Ok(g)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let t = (x / self.period).rem_euclid(1.0);
        match &self.shape {
            Waveform::Cos => (TAU * t).cos(),
            Waveform::Sin => (TAU * t).sin(),
            Waveform::Square => {
                if t < 0.5 {
                    1.0
                } else {
                    -1.0
                }
            }
            Waveform::Triangle => {
                if t < 0.5 {
                    1.0 - 4.0 * t
                } else {
                    4.0 * t - 3.0
                }
            }
            Waveform::Custom(f) => f(t),
        }
    }
}

/// A nonnegative function together with a partition of `[a, b]` on whose
/// cells it is monotone.
#[derive(Clone)]
pub struct PiecewiseMonotone {
    pub partition: Vec<f64>,
    pub f: RealFn,
}

impl std::fmt::Debug for PiecewiseMonotone {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PiecewiseMonotone")
            .field("partition", &self.partition)
            .finish()
    }
}

impl PiecewiseMonotone {
    /// Validates nonnegativity and cellwise monotonicity on a sample grid.
    pub fn new(partition: Vec<f64>, f: RealFn) -> Result<Self> {
        ensure!(partition.len() >= 2, "partition needs at least two points");
        ensure!(
            partition.windows(2).all(|w| w[0] < w[1]) && partition.iter().all(|x| x.is_finite()),
            "partition must be strictly increasing and finite"
        );
        let samples = 64;
        for w in partition.windows(2) {
            // cell midpoints: endpoint values may belong to the neighbour
            let vals: Vec<f64> = (0..samples)
                .map(|s| f(w[0] + (w[1] - w[0]) * (s as f64 + 0.5) / samples as f64))
                .collect();
            ensure!(vals.iter().all(|&v| v >= 0.0), "h is negative on [{}, {}]", w[0], w[1]);
            let scale = vals.iter().fold(0.0f64, |m, v| m.max(v.abs())) * 1e-12;
            let up = vals.windows(2).all(|p| p[1] >= p[0] - scale);
            let down = vals.windows(2).all(|p| p[1] <= p[0] + scale);
            ensure!(up || down, "h is not monotone on [{}, {}]", w[0], w[1]);
        }
        Ok(Self { partition, f })
    }

    pub fn start(&self) -> f64 {
        self.partition[0]
    }

    pub fn end(&self) -> f64 {
        *self.partition.last().expect("validated")
    }

    /// Number of monotone cells `m`.
    pub fn cells(&self) -> usize {
        self.partition.len() - 1
    }
}

/// 15-point Kronrod nodes on `[0, 1]` (positive half, descending), with the
/// embedded 7-point Gauss rule at odd positions.
const XK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gauss_kronrod(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let (f1, f2) = (f(c - h * XK[i]), f(c + h * XK[i]));
        k += WK[i] * (f1 + f2);
        if i % 2 == 1 {
            g += WG[i / 2] * (f1 + f2);
        }
    }
    (k * h, ((k - g) * h).abs())
}

fn adaptive(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> (f64, f64) {
    let (v, e) = gauss_kronrod(f, a, b);
    if e <= tol || depth == 0 || (b - a) <= 1e-14 * (a.abs() + b.abs()) {
        return (v, e);
    }
    let m = 0.5 * (a + b);
    let (v1, e1) = adaptive(f, a, m, 0.5 * tol, depth - 1);
    let (v2, e2) = adaptive(f, m, b, 0.5 * tol, depth - 1);
    (v1 + v2, e1 + e2)
}

/// Integral over `[a, b]` split at the given interior points, with an
/// estimated absolute error.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, breaks: &[f64], tol: f64) -> (f64, f64) {
    if b <= a {
        return (0.0, 0.0);
    }
    let mut pts: Vec<f64> = std::iter::once(a)
        .chain(breaks.iter().copied().filter(|&x| x > a && x < b))
        .chain(std::iter::once(b))
        .collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let per = tol / (pts.len() - 1) as f64;
    pts.windows(2)
        .map(|w| adaptive(f, w[0], w[1], per, 40))
        .fold((0.0, 0.0), |(v, e), (dv, de)| (v + dv, e + de))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegralBoundReport {
    pub lhs: f64,
    pub rhs: f64,
    /// Combined quadrature error allowance.
    pub tolerance: f64,
    /// Start of the maximising window.
    pub window_start: f64,
    pub ok: bool,
}

/// Checks `|int_a^b g(c1 x + c2) h(x) dx| <= m max_x int_x^(x+w) h` with
/// `w = p / (2|c1|)` and the window start ranging over `[a, b - w]`.
pub fn integral_bound_check(g: &Periodic, h: &PiecewiseMonotone, c1: f64, c2: f64) -> Result<IntegralBoundReport> {
    ensure!(
        c1 != 0.0 && c1.is_finite() && c2.is_finite(),
        "c1 must be nonzero and finite"
    );
    let (a, b) = (h.start(), h.end());
    let hf = &*h.f;
    let w = g.period / (2.0 * c1.abs());

    // split at every half-period of g(c1 x + c2) and at the partition
    let half = 0.5 * g.period;
    let (u0, u1) = {
        let (ua, ub) = (c1 * a + c2, c1 * b + c2);
        (ua.min(ub), ua.max(ub))
    };
    let mut breaks: Vec<f64> = h.partition.clone();
    let mut q = (u0 / half).ceil();
    while q * half < u1 {
        breaks.push((q * half - c2) / c1);
        q += 1.0;
    }

    let scale = integrate(hf, a, b, &h.partition, 1e-12).0.max(f64::MIN_POSITIVE);
    let tol = 1e-11 * scale;
    let integrand = |x: f64| g.eval(c1 * x + c2) * hf(x);
    let (lhs, lhs_err) = integrate(&integrand, a, b, &breaks, tol);
    let lhs = lhs.abs();

    let window = |x: f64| integrate(hf, x, (x + w).min(b), &h.partition, tol);
    let (best_start, best, best_err) = if b - a <= w {
        let (v, e) = window(a);
        (a, v, e)
    } else {
        let span = b - w - a;
        let grid = 1000;
        let step = span / grid as f64;
        let mut best = (a, f64::NEG_INFINITY, 0.0);
        for s in 0..=grid {
            let x = a + step * s as f64;
            let (v, e) = window(x);
            if v > best.1 {
                best = (x, v, e);
            }
        }
        refine_window(&window, best, (a, b - w), step)
    };
    let m = h.cells() as f64;
    let rhs = m * best;
    let tolerance = lhs_err + m * best_err + 1e-10 * scale;
    Ok(IntegralBoundReport {
        lhs,
        rhs,
        tolerance,
        window_start: best_start,
        ok: lhs <= rhs + tolerance,
    })
}

/// Golden-section refinement of the window start around a grid maximum.
fn refine_window(
    window: &dyn Fn(f64) -> (f64, f64),
    best: (f64, f64, f64),
    (lo, hi): (f64, f64),
    step: f64,
) -> (f64, f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut a, mut b) = ((best.0 - step).max(lo), (best.0 + step).min(hi));
    let mut out = best;
    for _ in 0..40 {
        let x1 = b - INV_PHI * (b - a);
        let x2 = a + INV_PHI * (b - a);
        let (v1, e1) = window(x1);
        let (v2, e2) = window(x2);
        if v1 > out.1 {
            out = (x1, v1, e1);
        }
        if v2 > out.1 {
            out = (x2, v2, e2);
        }
        if v1 >= v2 {
            b = x2;
        } else {
            a = x1;
        }
    }
    out
}

/// A randomly drawn instance satisfying every hypothesis of the integral
/// bound.
#[derive(Debug, Clone)]
pub struct IntegralInstance {
    pub g: Periodic,
    pub h: PiecewiseMonotone,
    pub c1: f64,
    pub c2: f64,
}

impl IntegralInstance {
    /// Draws a waveform, a nonnegative piecewise-monotone `h` on a random
    /// interval (piecewise linear, decaying power or exponential pieces) and
    /// random `c1`, `c2`.
    pub fn random(rng: &mut Rng) -> Result<Self> {
        let shape = match rng.random_range(0..5) {
            0 => Waveform::Cos,
            1 => Waveform::Sin,
            2 => Waveform::Square,
            3 => Waveform::Triangle,
            _ => Waveform::Custom(Arc::new(|t: f64| {
                let s = (TAU * t).sin();
                0.5 * (s + (3.0 * TAU * t).sin() / 3.0) / 0.666_666_666_666_666_6
            })),
        };
        let g = Periodic::new(rng.random_range(0.2..3.0), shape)?;
        let a = rng.random_range(-5.0..5.0);
        let cells = rng.random_range(1..=6);
        let mut partition = vec![a];
        for _ in 0..cells {
            let last = *partition.last().expect("nonempty");
            partition.push(last + rng.random_range(0.05..4.0));
        }
        let knots: Vec<f64> = (0..=cells).map(|_| rng.random_range(0.0..3.0)).collect();
        let h: RealFn = match rng.random_range(0..3) {
            0 => {
                let (p, k) = (partition.clone(), knots);
                Arc::new(move |x| piecewise_linear(&p, &k, x))
            }
            1 => {
                // decaying power law, monotone on the whole interval
                let (shift, power, amp) = (
                    rng.random_range(0.1..2.0),
                    rng.random_range(0.5..3.0),
                    rng.random_range(0.1..5.0),
                );
                Arc::new(move |x| amp * (x - a + shift).powf(-power))
            }
            _ => {
                let (p, k) = (partition.clone(), knots);
                let rate: f64 = rng.random_range(0.0..2.0);
                // piecewise linear times a monotone exponential is monotone on
                // each cell only when both factors move the same way, so
                // take the linear part's direction per cell
                Arc::new(move |x| {
                    let cell = p.partition_point(|&e| e <= x).clamp(1, p.len() - 1);
                    let dir = (k[cell] - k[cell - 1]).signum();
                    piecewise_linear(&p, &k, x) * (dir * rate * (x - p[cell - 1])).exp()
                })
            }
        };
        let h = PiecewiseMonotone::new(partition, h)?;
        let c1 = rng.random_range(0.1..40.0) * if rng.random::<bool>() { 1.0 } else { -1.0 };
        let c2 = rng.random_range(-10.0..10.0);
        Ok(Self { g, h, c1, c2 })
    }

    pub fn check(&self) -> Result<IntegralBoundReport> {
        integral_bound_check(&self.g, &self.h, self.c1, self.c2)
    }
}

fn piecewise_linear(p: &[f64], k: &[f64], x: f64) -> f64 {
    let cell = p.partition_point(|&e| e <= x).clamp(1, p.len() - 1);
    let t = ((x - p[cell - 1]) / (p[cell] - p[cell - 1])).clamp(0.0, 1.0);
    k[cell - 1] + t * (k[cell] - k[cell - 1])
}
