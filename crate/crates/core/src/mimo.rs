//! Cooperative MIMO capacity between two clusters.
//!
//! The lower bound is evaluated from empirical eigenvalue moments of the
//! normalised signal and interference covariances, which keeps it fully
//! computable for any concrete channel realisation.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand_distr::{Distribution, Uniform};

use crate::channel::{channel_matrix, Propagation};
use crate::error::{ensure, Error, Result};
use crate::geometry::{interferer_subgroups, ClusterGrid, ClusterPair, Point};
use crate::rng;

pub type CMatrix = DMatrix<Complex64>;

/// The 19-point grid `0.05, 0.10, ..., 0.95` searched for the best `delta`.
pub fn delta_grid() -> impl Iterator<Item = f64> {
    (1..=19).map(|i| i as f64 * 0.05)
}

/// `delta = 1 / s^2` (capped at 1), the unit-constant choice for an
/// interference level with `rho1 = O(s N)` and `rho2 = O(s^2 ...)`.
pub fn corollary_delta(s: f64) -> f64 {
    if s <= 1.0 {
        1.0
    } else {
        1.0 / (s * s)
    }
}

/// Geometry and power of one transmit-cluster to receive-cluster link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Link {
    /// Cluster side `D`.
    pub side: f64,
    /// Centre distance `L`.
    pub separation: f64,
    pub wavelength: f64,
    pub alpha: f64,
    pub gain: f64,
    pub power: f64,
}

impl Link {
    pub fn new(pair: &ClusterPair, prop: &Propagation, power: f64) -> Result<Self> {
        ensure!(power > 0.0, "power must be positive, got {power}");
        Ok(Self {
            side: pair.side,
            separation: pair.separation,
            wavelength: prop.wavelength,
            alpha: prop.alpha,
            gain: prop.gain,
            power,
        })
    }

    /// Received SNR scale `G P / L^alpha`.
    pub fn snr_scale(&self) -> f64 {
        self.gain * self.power / self.separation.powf(self.alpha)
    }

    pub fn dof(&self) -> Result<f64> {
        dof_limit_m(self.side, self.separation, self.wavelength)
    }
}

/// Degrees-of-freedom quantity
/// `M = max{1, r / (1 + (log2 r)^+)}` with `r = D^2 / (lambda L)`.
pub fn dof_limit_m(side: f64, separation: f64, wavelength: f64) -> Result<f64> {
    ensure!(
        side > 0.0 && separation > 0.0 && wavelength > 0.0,
        "lengths must be positive"
    );
    ensure!(
        separation >= 2.0 * side,
        "L = {separation} must be at least 2D = {}",
        2.0 * side
    );
    let r = side * side / (wavelength * separation);
    Ok((r / (1.0 + r.log2().max(0.0))).max(1.0))
}

fn check_square(a: &CMatrix, what: &str) -> Result<()> {
    ensure!(a.is_square(), "{what} must be square, got {}x{}", a.nrows(), a.ncols());
    Ok(())
}

fn check_hermitian(a: &CMatrix, what: &str) -> Result<()> {
    check_square(a, what)?;
    let scale = a.norm().max(f64::MIN_POSITIVE);
    let skew = (a - a.adjoint()).norm();
    ensure!(skew <= 1e-10 * scale, "{what} is not Hermitian (skew norm {skew:e})");
    Ok(())
}

/// Eigenvalues of a Hermitian matrix in ascending order.
pub fn hermitian_eigenvalues(a: &CMatrix) -> Result<Vec<f64>> {
    check_hermitian(a, "matrix")?;
    let mut ev: Vec<f64> = a.clone().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

fn trace_re(a: &CMatrix) -> f64 {
    a.trace().re
}

/// PSD tolerance `1e-9 tr(A) / N`.
fn psd_tolerance(a: &CMatrix) -> f64 {
    1e-9 * trace_re(a).abs() / a.nrows().max(1) as f64
}

/// Eigenvalues of a Hermitian PSD matrix, with round-off negatives floored
/// at zero. Anything more negative than the tolerance is rejected.
pub fn psd_eigenvalues(a: &CMatrix, what: &str) -> Result<Vec<f64>> {
    let ev = hermitian_eigenvalues(a)?;
    let tol = psd_tolerance(a);
    if let Some(&min) = ev.first() {
        ensure!(min >= -tol, "{what} is not positive semidefinite (eigenvalue {min:e})");
    }
    Ok(ev.into_iter().map(|v| v.max(0.0)).collect())
}

/// `log2 det A` for Hermitian positive definite `A`, via Cholesky.
pub fn log2det_hpd(a: &CMatrix) -> Result<f64> {
    let chol = a
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Numerical("Cholesky factorisation failed".into()))?;
    let l = chol.l_dirty();
    Ok((0..a.nrows()).map(|i| l[(i, i)].re.log2()).sum::<f64>() * 2.0)
}

/// `log2 det(I + Sigma + P H H*) - log2 det(I + Sigma)` in bits.
pub fn mutual_information_gaussian(h: &CMatrix, sigma: &CMatrix, power: f64) -> Result<f64> {
    check_square(sigma, "interference covariance")?;
    ensure!(
        h.nrows() == sigma.nrows(),
        "channel has {} receivers but covariance is {}x{}",
        h.nrows(),
        sigma.nrows(),
        sigma.ncols()
    );
    ensure!(power >= 0.0, "power must be nonnegative, got {power}");
    psd_eigenvalues(sigma, "interference covariance")?;
    let n = sigma.nrows();
    let noise = CMatrix::identity(n, n) + sigma;
    let signal = &noise + h * h.adjoint() * Complex64::from(power);
    Ok(log2det_hpd(&signal)? - log2det_hpd(&noise)?)
}

/// `(rho1, rho2) = (L^a tr(S) / (N G P), L^2a tr(S^2) / (N (G P)^2))`.
pub fn rho_moments(sigma: &CMatrix, n: usize, link: &Link) -> Result<(f64, f64)> {
    check_square(sigma, "interference covariance")?;
    ensure!(n >= 1, "normalising node count must be positive");
    let c = link.snr_scale();
    let tr1 = trace_re(sigma);
    let tr2 = sigma.iter().map(|z| z.norm_sqr()).sum::<f64>();
    Ok((tr1 / (n as f64 * c), tr2 / (n as f64 * c * c)))
}

/// A validated interference covariance together with its normalised moments.
#[derive(Debug, Clone, PartialEq)]
pub struct InterferenceModel {
    pub sigma: CMatrix,
    pub rho1: f64,
    pub rho2: f64,
}

impl InterferenceModel {
    /// Normalises by the matrix dimension.
    pub fn new(sigma: CMatrix, link: &Link) -> Result<Self> {
        let n = sigma.nrows();
        Self::with_normaliser(sigma, n, link)
    }

    /// Normalises by `n` nodes, which may differ from the matrix dimension
    /// when only a subset of the cluster takes part.
    pub fn with_normaliser(sigma: CMatrix, n: usize, link: &Link) -> Result<Self> {
        psd_eigenvalues(&sigma, "interference covariance")?;
        let (rho1, rho2) = rho_moments(&sigma, n, link)?;
        Ok(Self { sigma, rho1, rho2 })
    }

    pub fn none(n: usize) -> Self {
        Self {
            sigma: CMatrix::zeros(n, n),
            rho1: 0.0,
            rho2: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.sigma.nrows()
    }
}

/// First and second empirical moments of an eigenvalue set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean: f64,
    pub second: f64,
}

impl Moments {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len().max(1) as f64;
        Self {
            mean: values.iter().sum::<f64>() / n,
            second: values.iter().map(|v| v * v).sum::<f64>() / n,
        }
    }
}

/// Eigenvalues of the normalised covariances entering the bound.
///
/// `kappa` belongs to `(L^a / GP)(Sigma + P H H*)`, `chi` to
/// `(L^a / GP) Sigma` and `gamma` to `(L^a / G) H H*`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSummary {
    pub kappa: Vec<f64>,
    pub chi: Vec<f64>,
    pub gamma: Vec<f64>,
    pub kappa_m: Moments,
    pub chi_m: Moments,
    pub gamma_m: Moments,
}

impl EigenSummary {
    pub fn compute(h: &CMatrix, interference: &InterferenceModel, link: &Link) -> Result<Self> {
        ensure!(
            h.nrows() == interference.dim(),
            "channel has {} receivers but covariance is {}x{}",
            h.nrows(),
            interference.dim(),
            interference.dim()
        );
        let c = link.snr_scale();
        let hh = h * h.adjoint();
        let p = Complex64::from(link.power);
        let kappa_mat = (&interference.sigma + &hh * p) / Complex64::from(c);
        let chi_mat = &interference.sigma / Complex64::from(c);
        let gamma_mat = &hh * (p / Complex64::from(c));
        let kappa = psd_eigenvalues(&kappa_mat, "signal-plus-interference covariance")?;
        let chi = psd_eigenvalues(&chi_mat, "interference covariance")?;
        let gamma = psd_eigenvalues(&gamma_mat, "signal covariance")?;
        Ok(Self {
            kappa_m: Moments::of(&kappa),
            chi_m: Moments::of(&chi),
            gamma_m: Moments::of(&gamma),
            kappa,
            chi,
            gamma,
        })
    }

    pub fn nodes(&self) -> usize {
        self.kappa.len()
    }

    /// Evaluates the explicit lower bound at one `delta`.
    pub fn bound(&self, delta: f64, link: &Link) -> Result<MimoBound> {
        ensure!((0.0..=1.0).contains(&delta), "delta must lie in [0, 1], got {delta}");
        let c = link.snr_scale();
        let (chi, gamma) = (self.chi_m, self.gamma_m);
        let num = delta * delta * (chi.mean + gamma.mean).powi(2);
        let den = (chi.second.sqrt() + gamma.second.sqrt()).powi(2);
        let prefactor = if den > 0.0 { num / den } else { 0.0 };
        let log_argument = 1.0 + c * ((1.0 - delta) * gamma.mean - delta * chi.mean) / (1.0 + c * chi.mean);
        let n = self.nodes() as f64;
        let value = if log_argument > 1.0 {
            n * prefactor * log_argument.log2()
        } else {
            0.0
        };
        Ok(MimoBound {
            value,
            delta,
            dof: link.dof()?,
            prefactor,
            log_argument,
        })
    }

    /// Best bound over [`delta_grid`].
    pub fn best_bound(&self, link: &Link) -> Result<MimoBound> {
        let mut best: Option<MimoBound> = None;
        for delta in delta_grid() {
            let b = self.bound(delta, link)?;
            if best.as_ref().is_none_or(|cur| b.value > cur.value) {
                best = Some(b);
            }
        }
        Ok(best.expect("delta grid is nonempty"))
    }

    /// Every intermediate line of the bound chain at one `delta`.
    pub fn chain(&self, delta: f64, link: &Link) -> Result<BoundChain> {
        let c = link.snr_scale();
        let n = self.nodes() as f64;
        let log_det_ratio = self.kappa.iter().map(|k| (1.0 + c * k).log2()).sum::<f64>()
            - self.chi.iter().map(|x| (1.0 + c * x).log2()).sum::<f64>();
        let denom = 1.0 + c * self.chi_m.mean;
        let am_gm = self.kappa.iter().map(|k| ((1.0 + c * k) / denom).log2()).sum::<f64>();
        let threshold = (1.0 - delta) * self.kappa_m.mean;
        let tail = self.kappa.iter().filter(|&&k| k > threshold).count() as f64 / n;
        let log_term = ((1.0 + c * threshold) / denom).log2();
        let pz = if self.kappa_m.second > 0.0 {
            delta * delta * self.kappa_m.mean.powi(2) / self.kappa_m.second
        } else {
            0.0
        };
        let bound = self.bound(delta, link)?;
        Ok(BoundChain {
            log_det_ratio,
            am_gm,
            tail: n * tail * log_term,
            paley_zygmund: n * pz * log_term,
            explicit: bound.value,
        })
    }
}

/// The explicit capacity lower bound in bits per channel use.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MimoBound {
    pub value: f64,
    pub delta: f64,
    /// Degrees-of-freedom quantity `M` of the link geometry.
    pub dof: f64,
    pub prefactor: f64,
    pub log_argument: f64,
}

/// Successive lines of the bound chain.
///
/// `log_det_ratio >= am_gm` always holds. The remaining steps are only
/// ordered as written when there is no interference; with interference the
/// final explicit bound remains below the log-det ratio but intermediate
/// lines may cross.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundChain {
    pub log_det_ratio: f64,
    pub am_gm: f64,
    pub tail: f64,
    pub paley_zygmund: f64,
    pub explicit: f64,
}

pub fn theorem2_bound(h: &CMatrix, interference: &InterferenceModel, delta: f64, link: &Link) -> Result<MimoBound> {
    ensure!((0.0..=1.0).contains(&delta), "delta must lie in [0, 1], got {delta}");
    EigenSummary::compute(h, interference, link)?.bound(delta, link)
}

/// Paley-Zygmund check on a sample: returns the fraction of values above
/// `(1 - delta) mean` and the lower bound `delta^2 E[v]^2 / E[v^2]`.
pub fn paley_zygmund_lower(values: &[f64], delta: f64) -> Result<(f64, f64)> {
    ensure!(!values.is_empty(), "Paley-Zygmund needs at least one value");
    ensure!((0.0..=1.0).contains(&delta), "delta must lie in [0, 1], got {delta}");
    ensure!(
        values.iter().all(|&v| v >= 0.0),
        "Paley-Zygmund needs nonnegative values"
    );
    let m = Moments::of(values);
    let threshold = (1.0 - delta) * m.mean;
    let lhs = values.iter().filter(|&&v| v > threshold).count() as f64 / values.len() as f64;
    let rhs = if m.second > 0.0 {
        delta * delta * m.mean * m.mean / m.second
    } else {
        0.0
    };
    Ok((lhs, rhs))
}

/// Both sides of `tr((sum A_i)^2) <= (sum tr^(1/2)(A_i^2))^2`.
pub fn trace_sq_inequality(matrices: &[CMatrix]) -> Result<(f64, f64)> {
    let first = matrices
        .first()
        .ok_or_else(|| Error::InvalidArgument("need at least one matrix".into()))?;
    let n = first.nrows();
    let mut sum = CMatrix::zeros(n, n);
    let mut rhs_root = 0.0;
    for a in matrices {
        ensure!(a.nrows() == n && a.ncols() == n, "all matrices must be {n}x{n}");
        psd_eigenvalues(a, "trace-inequality operand")?;
        // tr(A^2) = ||A||_F^2 for Hermitian A
        rhs_root += a.norm();
        sum += a;
    }
    Ok((sum.norm_squared(), rhs_root * rhs_root))
}

/// Layout of the interfering clusters around a MIMO link.
///
/// The link sits in the centre cell of a `grid x grid` array of square
/// clusters of side `cell`; every other cluster sharing its 9-TDMA slot
/// activates `active` uniformly placed nodes, each transmitting at `power`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterferenceLayout {
    pub grid: usize,
    pub cell: f64,
    pub active: usize,
    pub power: f64,
}

impl InterferenceLayout {
    pub fn new(grid: usize, cell: f64, active: usize, power: f64) -> Result<Self> {
        ensure!(
            grid >= 1 && grid % 2 == 1,
            "grid must have an odd side count, got {grid}"
        );
        ensure!(cell > 0.0, "cell side must be positive");
        ensure!(power >= 0.0, "interferer power must be nonnegative");
        Ok(Self {
            grid,
            cell,
            active,
            power,
        })
    }

    pub fn centre(&self) -> (usize, usize) {
        (self.grid / 2, self.grid / 2)
    }
}

/// Receive-node coordinates of `pair` once it is centred inside the middle
/// cluster of `layout`.
pub fn embedded_receivers(pair: &ClusterPair, layout: &InterferenceLayout) -> Result<Vec<Point>> {
    let span = pair.separation + pair.side;
    ensure!(
        layout.cell >= span,
        "cell side {} cannot hold a pair spanning {span}",
        layout.cell
    );
    let centre = layout.centre();
    let x0 = centre.1 as f64 * layout.cell + 0.5 * (layout.cell - span);
    let y0 = centre.0 as f64 * layout.cell + 0.5 * (layout.cell - pair.side);
    Ok(pair.rx.iter().map(|p| Point::new(p.x + x0, p.y + y0)).collect())
}

/// Covariance `P' sum_i H_i H_i^*` of the interference seen by the receive
/// cluster, normalised by the pair's node count.
pub fn interference_covariance(
    pair: &ClusterPair,
    layout: &InterferenceLayout,
    prop: &Propagation,
    link: &Link,
    seed: u64,
) -> Result<InterferenceModel> {
    let rx = embedded_receivers(pair, layout)?;
    let grid = ClusterGrid::uniform(layout.grid, layout.cell)?;
    let mut rng = rng::seeded(seed);
    let mut sigma = CMatrix::zeros(rx.len(), rx.len());
    for ring in interferer_subgroups(layout.centre(), &grid)? {
        for cell in ring {
            let tx: Vec<Point> = (0..layout.active).map(|_| grid.sample_in(cell, &mut rng)).collect();
            if tx.is_empty() {
                continue;
            }
            let h = channel_matrix(&tx, &rx, prop)?.entries;
            sigma += &h * h.adjoint() * Complex64::from(layout.power);
        }
    }
    // exact Hermitian symmetry for the eigensolver
    let sigma = (&sigma + sigma.adjoint()) * Complex64::from(0.5);
    InterferenceModel::new(sigma, link)
}

/// A random Hermitian PSD matrix `A A^*` with i.i.d. uniform complex entries
/// scaled so that `tr = trace`.
pub fn random_psd(n: usize, rank: usize, trace: f64, rng: &mut rng::Rng) -> CMatrix {
    let u = Uniform::new(-1.0, 1.0).expect("valid range");
    let a = CMatrix::from_fn(n, rank.max(1), |_, _| Complex64::new(u.sample(rng), u.sample(rng)));
    let m = &a * a.adjoint();
    let t = trace_re(&m);
    let m = if t > 0.0 { m * Complex64::from(trace / t) } else { m };
    (&m + m.adjoint()) * Complex64::from(0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn scalar(v: f64) -> CMatrix {
        CMatrix::from_element(1, 1, Complex64::from(v))
    }

    fn diag(v: &[f64]) -> CMatrix {
        CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            v.len(),
            v.iter().map(|&x| Complex64::from(x)),
        ))
    }

    fn unit_link(separation: f64) -> Link {
        Link {
            side: 1.0,
            separation,
            wavelength: 0.1,
            alpha: 2.0,
            gain: 1.0,
            power: 1.0,
        }
    }

    #[test]
    fn mutual_information_examples() {
        let zero = CMatrix::zeros(3, 3);
        assert_eq!(mutual_information_gaussian(&zero, &zero, 1.0).unwrap(), 0.0);
        assert_relative_eq!(
            mutual_information_gaussian(&scalar(1.0), &scalar(0.0), 1.0).unwrap(),
            1.0,
            epsilon = 1e-15
        );
        assert_relative_eq!(
            mutual_information_gaussian(&scalar(1.0), &scalar(1.0), 1.0).unwrap(),
            1.5f64.log2(),
            epsilon = 1e-15
        );
        assert!(mutual_information_gaussian(&scalar(1.0), &scalar(-1.0), 1.0).is_err());
        assert!(mutual_information_gaussian(&scalar(1.0), &zero, 1.0).is_err());
    }

    #[test]
    fn dof_examples() {
        assert_eq!(dof_limit_m(1.0, 2.0, 1.0).unwrap(), 1.0);
        assert_relative_eq!(dof_limit_m(1.0, 2.0, 0.125).unwrap(), 4.0 / 3.0, epsilon = 1e-15);
        assert_eq!(dof_limit_m(1.0, 2.0, 0.25).unwrap(), 1.0);
        assert!(dof_limit_m(1.0, 1.5, 0.1).is_err());
    }

    #[test]
    fn rho_examples() {
        let link = unit_link(2.0);
        assert_eq!(rho_moments(&CMatrix::zeros(4, 4), 4, &link).unwrap(), (0.0, 0.0));
        for n in [1, 3, 8] {
            let (r1, r2) = rho_moments(&CMatrix::identity(n, n), n, &link).unwrap();
            assert_relative_eq!(r1, 4.0, epsilon = 1e-14);
            assert_relative_eq!(r2, 16.0, epsilon = 1e-14);
        }
        let mut rng = rng::seeded(1);
        let s = random_psd(5, 5, 3.0, &mut rng);
        let (a1, a2) = rho_moments(&s, 5, &link).unwrap();
        let (b1, b2) = rho_moments(&(&s * Complex64::from(2.5)), 5, &link).unwrap();
        assert_relative_eq!(b1, 2.5 * a1, max_relative = 1e-13);
        assert_relative_eq!(b2, 6.25 * a2, max_relative = 1e-13);
    }

    #[test]
    fn paley_zygmund_examples() {
        assert_eq!(paley_zygmund_lower(&[3.0; 5], 0.5).unwrap(), (1.0, 0.25));
        assert_eq!(paley_zygmund_lower(&[0.0, 2.0], 0.5).unwrap(), (0.5, 0.125));
        assert!(paley_zygmund_lower(&[], 0.5).is_err());
        assert!(paley_zygmund_lower(&[-1.0], 0.5).is_err());
    }

    #[test]
    fn trace_inequality_examples() {
        let (l, r) = trace_sq_inequality(&[CMatrix::identity(2, 2)]).unwrap();
        assert_relative_eq!(l, 2.0, epsilon = 1e-15);
        assert_relative_eq!(r, 2.0, epsilon = 1e-15);
        let (l, r) = trace_sq_inequality(&[diag(&[1.0, 0.0]), diag(&[0.0, 1.0])]).unwrap();
        assert_relative_eq!(l, 2.0, epsilon = 1e-15);
        assert_relative_eq!(r, 4.0, epsilon = 1e-15);
        assert!(trace_sq_inequality(&[diag(&[1.0, -1.0])]).is_err());
    }

    #[test]
    fn zero_channel_gives_zero_bound() {
        let link = unit_link(2.0);
        let h = CMatrix::zeros(4, 4);
        let b = theorem2_bound(&h, &InterferenceModel::none(4), 0.5, &link).unwrap();
        assert_eq!(b.value, 0.0);
        assert_eq!(b.log_argument, 1.0);
        assert!(theorem2_bound(&h, &InterferenceModel::none(4), 1.5, &link).is_err());
    }

    #[test]
    fn interference_free_half_delta_is_positive() {
        let pair = ClusterPair::random(1.0, 2.0, 8, 11).unwrap();
        let prop = Propagation::new(0.05, 2.0, 1.0).unwrap();
        let link = Link::new(&pair, &prop, 1.0).unwrap();
        let h = channel_matrix(&pair.tx, &pair.rx, &prop).unwrap().entries;
        let b = theorem2_bound(&h, &InterferenceModel::none(8), 0.5, &link).unwrap();
        assert!(b.value > 0.0);
        // value is assembled exactly from its components
        assert_eq!(b.value, 8.0 * b.prefactor * b.log_argument.log2());
    }

    #[test]
    fn no_same_slot_clusters_means_no_interference() {
        let pair = ClusterPair::random(1.0, 2.0, 4, 2).unwrap();
        let prop = Propagation::new(0.05, 2.0, 1.0).unwrap();
        let link = Link::new(&pair, &prop, 1.0).unwrap();
        let layout = InterferenceLayout::new(3, 3.0, 4, 1.0).unwrap();
        let model = interference_covariance(&pair, &layout, &prop, &link, 5).unwrap();
        assert_eq!(model.sigma, CMatrix::zeros(4, 4));
    }

    #[test]
    fn ring_sum_bounds_rho1() {
        // Nodes in clusters at grid distance 3i are at least (3i - 1) cells
        // apart, and ring i holds at most 8i clusters of `active` nodes.
        let (d, l, cell, active) = (1.0, 2.0, 4.0, 6);
        let pair = ClusterPair::random(d, l, 8, 9).unwrap();
        let prop = Propagation::new(0.05, 2.0, 1.0).unwrap();
        let link = Link::new(&pair, &prop, 1.0).unwrap();
        for grid in [9, 15, 21] {
            let layout = InterferenceLayout::new(grid, cell, active, 1.0).unwrap();
            let model = interference_covariance(&pair, &layout, &prop, &link, 3).unwrap();
            let rings = grid / 2 / 3;
            let oracle: f64 = (1..=rings)
                .map(|i| 8.0 * i as f64 * (l / ((3.0 * i as f64 - 1.0) * cell)).powi(2))
                .sum();
            assert!(model.rho1 / active as f64 <= oracle, "{} > {oracle}", model.rho1);
            assert!(model.rho1 > 0.0);
        }
    }

    #[test]
    fn trace_additivity_and_amgm() {
        let pair = ClusterPair::random(1.0, 3.0, 16, 21).unwrap();
        let prop = Propagation::new(0.02, 2.0, 1.0).unwrap();
        let link = Link::new(&pair, &prop, 4.0).unwrap();
        let h = channel_matrix(&pair.tx, &pair.rx, &prop).unwrap().entries;
        let mut rng = rng::seeded(4);
        let sigma = random_psd(16, 4, 2.0, &mut rng);
        let model = InterferenceModel::new(sigma, &link).unwrap();
        let s = EigenSummary::compute(&h, &model, &link).unwrap();
        let sum = s.chi_m.mean + s.gamma_m.mean;
        assert_relative_eq!(s.kappa_m.mean, sum, max_relative = 1e-8);
        assert_relative_eq!(s.chi_m.mean, model.rho1, max_relative = 1e-8);
        assert_relative_eq!(s.chi_m.second, model.rho2, max_relative = 1e-8);
        let c = link.snr_scale();
        let lhs: f64 = s.chi.iter().map(|x| (1.0 + c * x).log2()).sum();
        assert!(lhs <= 16.0 * (1.0 + c * s.chi_m.mean).log2() + 1e-12);
    }

    #[test]
    fn chain_is_ordered_without_interference() {
        let pair = ClusterPair::random(1.0, 2.0, 12, 8).unwrap();
        let prop = Propagation::new(0.03, 2.0, 1.0).unwrap();
        let link = Link::new(&pair, &prop, 2.0).unwrap();
        let h = channel_matrix(&pair.tx, &pair.rx, &prop).unwrap().entries;
        let s = EigenSummary::compute(&h, &InterferenceModel::none(12), &link).unwrap();
        let mi = mutual_information_gaussian(&h, &CMatrix::zeros(12, 12), link.power).unwrap();
        for delta in delta_grid() {
            let c = s.chain(delta, &link).unwrap();
            assert_relative_eq!(c.log_det_ratio, mi, max_relative = 1e-9);
            assert!(c.log_det_ratio + 1e-9 >= c.am_gm);
            assert!(c.am_gm + 1e-9 >= c.tail);
            assert!(c.tail + 1e-9 >= c.paley_zygmund);
            assert!(c.paley_zygmund + 1e-9 >= c.explicit);
        }
    }

    #[test]
    fn corollary_delta_rule() {
        assert_eq!(corollary_delta(0.5), 1.0);
        assert_eq!(corollary_delta(4.0), 1.0 / 16.0);
        assert_eq!(delta_grid().count(), 19);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn mutual_information_dominates_bound(
            n in 2usize..24,
            l in 2.0f64..8.0,
            lambda_exp in 2i32..10,
            power in 0.1f64..100.0,
            interference in 0u8..3,
            seed in any::<u64>(),
        ) {
            let pair = ClusterPair::random(1.0, l, n, seed).unwrap();
            let prop = Propagation::new(2f64.powi(-lambda_exp), 2.0, 1.0).unwrap();
            let link = Link::new(&pair, &prop, power).unwrap();
            let h = channel_matrix(&pair.tx, &pair.rx, &prop).unwrap().entries;
            let model = match interference {
                0 => InterferenceModel::none(n),
                1 => {
                    let layout = InterferenceLayout::new(9, l + 1.0, n, power).unwrap();
                    interference_covariance(&pair, &layout, &prop, &link, seed ^ 1).unwrap()
                }
                _ => {
                    let mut rng = rng::seeded(seed ^ 2);
                    InterferenceModel::new(random_psd(n, n, n as f64, &mut rng), &link).unwrap()
                }
            };
            let mi = mutual_information_gaussian(&h, &model.sigma, power).unwrap();
            let s = EigenSummary::compute(&h, &model, &link).unwrap();
            for delta in delta_grid() {
                let b = s.bound(delta, &link).unwrap();
                prop_assert!(mi >= b.value, "mi {mi} < bound {} at delta {delta}", b.value);
            }
        }

        #[test]
        fn gamma_mean_within_amplitude_bounds(n in 2usize..20, l in 2.0f64..10.0, seed in any::<u64>()) {
            let pair = ClusterPair::random(1.0, l, n, seed).unwrap();
            let prop = Propagation::new(0.01, 2.0, 0.5).unwrap();
            let link = Link::new(&pair, &prop, 1.0).unwrap();
            let h = channel_matrix(&pair.tx, &pair.rx, &prop).unwrap().entries;
            let s = EigenSummary::compute(&h, &InterferenceModel::none(n), &link).unwrap();
            let (amin, amax) = pair.amplitude_bounds(2.0);
            let nf = n as f64;
            prop_assert!(s.gamma_m.mean >= amin * amin * nf * (1.0 - 1e-9));
            prop_assert!(s.gamma_m.mean <= amax * amax * nf * (1.0 + 1e-9));
        }

        #[test]
        fn paley_zygmund_holds(values in prop::collection::vec(0.0f64..10.0, 1..64), delta in 0.0f64..=1.0) {
            let (lhs, rhs) = paley_zygmund_lower(&values, delta).unwrap();
            prop_assert!(lhs >= rhs - 1e-12);
        }

        #[test]
        fn trace_inequality_holds(n in 1usize..6, k in 1usize..5, seed in any::<u64>()) {
            let mut rng = rng::seeded(seed);
            let mats: Vec<CMatrix> = (0..k).map(|i| random_psd(n, 1 + i % n, 1.0 + i as f64, &mut rng)).collect();
            let (lhs, rhs) = trace_sq_inequality(&mats).unwrap();
            prop_assert!(lhs <= rhs * (1.0 + 1e-12));
        }
    }
}
