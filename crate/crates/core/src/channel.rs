//! Line-of-sight channel gains with distance-dependent phase.
//!
//! Every entry is `sqrt(G) * d^(-alpha/2) * exp(-j 2 pi d / lambda)`. With
//! `alpha = 2` this is the far-field free-space response; larger exponents
//! model power-limited propagation.

use std::f64::consts::{PI, TAU};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{ensure, Error, Result};
use crate::geometry::Point;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    /// `n` nodes on a unit square.
    Dense,
    /// `n` nodes on a square of area `n`.
    Extended,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::Dense => "dense",
            Regime::Extended => "extended",
        }
    }

    /// Side of the network square for `n` nodes.
    pub fn side(self, n: usize) -> f64 {
        match self {
            Regime::Dense => 1.0,
            Regime::Extended => (n as f64).sqrt(),
        }
    }
}

impl std::str::FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dense" => Ok(Regime::Dense),
            "extended" => Ok(Regime::Extended),
            other => Err(Error::InvalidArgument(format!("unknown regime '{other}'"))),
        }
    }
}

/// The physical parameters a channel entry depends on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Propagation {
    pub wavelength: f64,
    pub alpha: f64,
    pub gain: f64,
}

impl Propagation {
    pub fn new(wavelength: f64, alpha: f64, gain: f64) -> Result<Self> {
        ensure!(
            wavelength > 0.0 && wavelength.is_finite(),
            "wavelength must be positive, got {wavelength}"
        );
        ensure!(alpha >= 2.0, "path-loss exponent must be at least 2, got {alpha}");
        ensure!(gain > 0.0 && gain.is_finite(), "gain must be positive, got {gain}");
        Ok(Self {
            wavelength,
            alpha,
            gain,
        })
    }

    /// Free-space propagation (`alpha = 2`).
    pub fn free_space(wavelength: f64, gain: f64) -> Result<Self> {
        Self::new(wavelength, 2.0, gain)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    pub n: usize,
    pub regime: Regime,
    pub wavelength: f64,
    pub alpha: f64,
    /// Average transmit power per node.
    pub power: f64,
    /// Aggregate Friis gain `G`.
    pub gain: f64,
    /// `wavelength >= n^-mu` is required.
    pub mu: f64,
    /// Quantisation rate in subblocks per time slot.
    pub q: u32,
    /// Far-field margin: the wavelength must stay below this fraction of the
    /// typical node spacing.
    pub far_field_factor: f64,
}

impl NetworkConfig {
    /// Unit-area network with `G = 1/n`.
    pub fn dense(n: usize, wavelength: f64) -> Self {
        Self {
            n,
            regime: Regime::Dense,
            wavelength,
            alpha: 2.0,
            power: 1.0,
            gain: 1.0 / n as f64,
            mu: 4.0,
            q: 3,
            far_field_factor: 0.5,
        }
    }

    /// Area-`n` network with constant `G = 1`.
    pub fn extended(n: usize, wavelength: f64) -> Self {
        Self {
            regime: Regime::Extended,
            gain: 1.0,
            ..Self::dense(n, wavelength)
        }
    }

    pub fn propagation(&self) -> Result<Propagation> {
        Propagation::new(self.wavelength, self.alpha, self.gain)
    }

    /// Typical separation between neighbouring nodes.
    pub fn spacing(&self) -> f64 {
        match self.regime {
            Regime::Dense => (self.n as f64).powf(-0.5),
            Regime::Extended => 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(self.n >= 2, "network needs at least two nodes");
        self.propagation()?;
        ensure!(self.power > 0.0, "power must be positive, got {}", self.power);
        ensure!(self.mu > 0.5, "mu must exceed 1/2, got {}", self.mu);
        ensure!(self.q >= 1, "quantisation rate must be a positive integer");
        ensure!(
            self.far_field_factor > 0.0 && self.far_field_factor < 1.0,
            "far-field factor must lie in (0, 1)"
        );
        let limit = self.far_field_factor * self.spacing();
        ensure!(
            self.wavelength < limit,
            "wavelength {} violates the far-field margin {limit}",
            self.wavelength
        );
        let floor = (self.n as f64).powf(-self.mu);
        ensure!(
            self.wavelength >= floor,
            "wavelength {} below n^-mu = {floor}",
            self.wavelength
        );
        Ok(())
    }
}

/// Friis aggregate gain `lambda^2 G_l / (16 pi^2)`.
pub fn friis_gain(wavelength: f64, antenna_gain: f64) -> Result<f64> {
    ensure!(wavelength > 0.0, "wavelength must be positive, got {wavelength}");
    ensure!(
        antenna_gain > 0.0,
        "antenna gain product must be positive, got {antenna_gain}"
    );
    Ok(wavelength * wavelength * antenna_gain / (16.0 * PI * PI))
}

/// Antenna gain product that makes `friis_gain` follow the regime convention:
/// `G = 1` for extended networks and `G = 1/n` for dense ones.
pub fn antenna_gain_for(regime: Regime, wavelength: f64, n: usize) -> f64 {
    let base = 16.0 * PI * PI / (wavelength * wavelength);
    match regime {
        Regime::Extended => base,
        Regime::Dense => base / n as f64,
    }
}

/// Fractional part of `d / lambda`, with the division remainder recovered by
/// a fused multiply-add so that large ratios keep their sub-wavelength phase.
pub fn wavelength_fraction(d: f64, wavelength: f64) -> f64 {
    let q = d / wavelength;
    let whole = q.floor();
    // exact residual of the rounded quotient: d - q * lambda
    let residual = (-q).mul_add(wavelength, d) / wavelength;
    let frac = (q - whole) + residual;
    frac - frac.floor()
}

/// `exp(-j 2 pi d / lambda)`.
pub fn phase_factor(d: f64, wavelength: f64) -> Complex64 {
    let theta = -TAU * wavelength_fraction(d, wavelength);
    Complex64::new(theta.cos(), theta.sin())
}

pub fn channel_gain(d: f64, prop: &Propagation) -> Result<Complex64> {
    if d.is_nan() || d <= 0.0 {
        return Err(Error::Singular(format!("channel gain at distance {d}")));
    }
    let magnitude = prop.gain.sqrt() * d.powf(-prop.alpha / 2.0);
    Ok(phase_factor(d, prop.wavelength) * magnitude)
}

/// Complex gains from `tx` to `rx`; rows are receivers, columns transmitters.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    pub entries: DMatrix<Complex64>,
    pub prop: Propagation,
}

pub fn channel_matrix(tx: &[Point], rx: &[Point], prop: &Propagation) -> Result<ChannelMatrix> {
    let mut entries = DMatrix::zeros(rx.len(), tx.len());
    for (i, r) in rx.iter().enumerate() {
        for (k, t) in tx.iter().enumerate() {
            let d = r.distance(*t);
            entries[(i, k)] = channel_gain(d, prop)
                .map_err(|_| Error::Singular(format!("receiver {i} coincides with transmitter {k}")))?;
        }
    }
    Ok(ChannelMatrix { entries, prop: *prop })
}

impl ChannelMatrix {
    pub fn rows(&self) -> usize {
        self.entries.nrows()
    }

    pub fn cols(&self) -> usize {
        self.entries.ncols()
    }

    /// `F = (L^(alpha/2) / sqrt(G)) H`: magnitudes become `(L / d)^(alpha/2)`.
    pub fn normalized(&self, separation: f64) -> DMatrix<Complex64> {
        let scale = separation.powf(self.prop.alpha / 2.0) / self.prop.gain.sqrt();
        self.entries.map(|z| z * scale)
    }

    /// `H H^*`.
    pub fn gram(&self) -> DMatrix<Complex64> {
        &self.entries * self.entries.adjoint()
    }
}
