//! Runners for each experiment kind. Every runner expands its grids, fans
//! the points out over the current rayon pool and returns rows in grid order.

use hcscale::channel::{channel_matrix, Propagation, Regime};
use hcscale::geometry::{angle_phi, classify_region, phi_corner_min, ClusterPair, Point, Region};
use hcscale::mimo::{
    delta_grid, interference_covariance, mutual_information_gaussian, random_psd, EigenSummary, InterferenceLayout,
    InterferenceModel, Link, MimoBound,
};
use hcscale::planner::{optimal_cluster_sizes, predicted_throughput, throughput_recursion};
use hcscale::protocol::simulate_level;
use hcscale::rng;
use hcscale::spectral::{
    decay_regression, estimate_eq, lln_convergence_check, DecaySeries, IntegralInstance, PairGeometry,
};
use rand::Rng as _;
use rayon::prelude::*;

use crate::spec::{Kind, SweepSpec};
use crate::CliError;

/// Result rows of one run plus the number of failed inequality checks.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: &'static [&'static str],
    pub rows: Vec<Vec<String>>,
    pub violations: usize,
    /// One-line digest for the terminal.
    pub summary: String,
}

/// Independent seed for item `index` of a run seeded with `seed`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    rng::stream(seed, index).random()
}

/// Float cell with 17 significant digits.
pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn run(spec: &SweepSpec) -> Result<Table, CliError> {
    match spec.kind {
        Kind::MimoBound => mimo_bound(spec),
        Kind::EqDecay => eq_decay(spec),
        Kind::Lln => lln(spec),
        Kind::Scaling => scaling(spec),
        Kind::Protocol => protocol(spec),
        Kind::Lemma7 => lemma7(spec),
        Kind::Lemma8 => lemma8(spec),
    }
}

fn cartesian<A: Copy, B: Copy>(a: &[A], b: &[B]) -> Vec<(A, B)> {
    a.iter().flat_map(|&x| b.iter().map(move |&y| (x, y))).collect()
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interference {
    None,
    /// Co-slot clusters of a 9 x 9 TDMA array.
    Tdma,
    /// Random PSD covariance with trace `N`.
    Psd,
}

impl Interference {
    pub fn name(self) -> &'static str {
        match self {
            Interference::None => "none",
            Interference::Tdma => "tdma",
            Interference::Psd => "psd",
        }
    }
}

/// One random MIMO link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MimoInstance {
    pub nodes: usize,
    pub side: f64,
    pub separation: f64,
    pub wavelength: f64,
    pub alpha: f64,
    pub power: f64,
    pub gain: f64,
    pub interference: Interference,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MimoOutcome {
    pub mutual_information: f64,
    /// Largest bound over the delta grid.
    pub best: MimoBound,
    /// Smallest `MI - bound` over the delta grid.
    pub margin: f64,
    /// Grid points where the bound exceeds the mutual information.
    pub violations: usize,
}

impl MimoInstance {
    pub fn evaluate(&self) -> hcscale::Result<MimoOutcome> {
        let pair = ClusterPair::random(self.side, self.separation, self.nodes, self.seed)?;
        let prop = Propagation::new(self.wavelength, self.alpha, self.gain)?;
        let link = Link::new(&pair, &prop, self.power)?;
        let h = channel_matrix(&pair.tx, &pair.rx, &prop)?.entries;
        let model = match self.interference {
            Interference::None => InterferenceModel::none(self.nodes),
            Interference::Tdma => {
                let layout = InterferenceLayout::new(9, self.side + self.separation, self.nodes, self.power)?;
                interference_covariance(&pair, &layout, &prop, &link, derive_seed(self.seed, 1))?
            }
            Interference::Psd => {
                let mut r = rng::seeded(derive_seed(self.seed, 2));
                InterferenceModel::new(random_psd(self.nodes, self.nodes, self.nodes as f64, &mut r), &link)?
            }
        };
        let mi = mutual_information_gaussian(&h, &model.sigma, self.power)?;
        let summary = EigenSummary::compute(&h, &model, &link)?;
        let mut margin = f64::INFINITY;
        let mut violations = 0;
        for delta in delta_grid() {
            let b = summary.bound(delta, &link)?;
            margin = margin.min(mi - b.value);
            violations += usize::from(mi < b.value);
        }
        Ok(MimoOutcome {
            mutual_information: mi,
            best: summary.best_bound(&link)?,
            margin,
            violations,
        })
    }
}

const MIMO_COLUMNS: &[&str] = &[
    "n_nodes",
    "l",
    "lambda",
    "instance",
    "interference",
    "mi",
    "bound",
    "delta_star",
    "dof",
    "margin",
    "ok",
];

fn mimo_bound(spec: &SweepSpec) -> Result<Table, CliError> {
    let nodes = spec.int_grid("n-nodes")?;
    let seps = spec.grid("l")?;
    let lambdas = spec.grid("lambda")?;
    let (side, alpha, power, gain) = (
        spec.number("d")?,
        spec.number("alpha")?,
        spec.number("power")?,
        spec.number("gain")?,
    );
    let instances = spec.count("instances")?;
    let mode = spec.text("interference");
    let pick = |i: usize| -> Result<Interference, CliError> {
        Ok(match mode {
            "none" => Interference::None,
            "tdma" => Interference::Tdma,
            "psd" => Interference::Psd,
            "cycle" => [Interference::None, Interference::Tdma, Interference::Psd][i % 3],
            other => return Err(CliError::Usage(format!("--interference: unknown mode {other:?}"))),
        })
    };
    let mut jobs = Vec::new();
    for &n in &nodes {
        for (l, lambda) in cartesian(&seps, &lambdas) {
            for i in 0..instances {
                jobs.push((n, l, lambda, i));
            }
        }
    }
    let results: Vec<_> = jobs
        .par_iter()
        .enumerate()
        .map(|(idx, &(n, l, lambda, i))| -> Result<_, CliError> {
            let inst = MimoInstance {
                nodes: n as usize,
                side,
                separation: l,
                wavelength: lambda,
                alpha,
                power,
                gain,
                interference: pick(i)?,
                seed: derive_seed(spec.seed, idx as u64),
            };
            Ok((inst, inst.evaluate()?))
        })
        .collect::<Result<_, _>>()?;
    let violations = results.iter().filter(|(_, o)| o.violations > 0).count();
    let rows = results
        .iter()
        .zip(&jobs)
        .map(|((inst, o), &(_, _, _, i))| {
            vec![
                inst.nodes.to_string(),
                float(inst.separation),
                float(inst.wavelength),
                i.to_string(),
                inst.interference.name().to_string(),
                float(o.mutual_information),
                float(o.best.value),
                float(o.best.delta),
                float(o.best.dof),
                float(o.margin),
                (o.violations == 0).to_string(),
            ]
        })
        .collect();
    Ok(Table {
        columns: MIMO_COLUMNS,
        rows,
        violations,
        summary: format!(
            "{} instances, {violations} with the bound above the mutual information",
            jobs.len()
        ),
    })
}

// ---------------------------------------------------------------------------

/// Monte Carlo `E[Q]` at each wavelength, one derived seed per point.
pub fn decay_series(
    side: f64,
    separation: f64,
    lambdas: &[f64],
    alpha: f64,
    trials: usize,
    block: usize,
    seed: u64,
) -> hcscale::Result<DecaySeries> {
    let points = lambdas
        .par_iter()
        .enumerate()
        .map(|(i, &lambda)| {
            let geom = PairGeometry::new(side, separation, lambda, alpha)?;
            estimate_eq(&geom, trials, block, derive_seed(seed, i as u64))
        })
        .collect::<hcscale::Result<_>>()?;
    Ok(DecaySeries { points })
}

fn eq_decay(spec: &SweepSpec) -> Result<Table, CliError> {
    let series = decay_series(
        spec.number("d")?,
        spec.number("l")?,
        &spec.grid("lambda")?,
        spec.number("alpha")?,
        spec.count("trials")?,
        spec.count("block")?,
        spec.seed,
    )?;
    let rows = series
        .points
        .iter()
        .map(|p| {
            vec![
                float(p.wavelength),
                float(p.dof),
                float(p.mean),
                float(p.std_error),
                float(p.half_width),
                p.trials.to_string(),
            ]
        })
        .collect();
    let summary = match decay_regression(&series) {
        Ok(slope) => format!("{} points, log-log slope {slope:.4}", series.points.len()),
        Err(e) => format!("{} points, no slope fitted: {e}", series.points.len()),
    };
    Ok(Table {
        columns: &["lambda", "dof", "mean", "std_error", "half_width", "trials"],
        rows,
        violations: 0,
        summary,
    })
}

// ---------------------------------------------------------------------------

fn lln(spec: &SweepSpec) -> Result<Table, CliError> {
    let (side, sep, alpha) = (spec.number("d")?, spec.number("l")?, spec.number("alpha")?);
    let lambdas = spec.grid("lambda")?;
    let sizes: Vec<usize> = spec.int_grid("sizes")?.into_iter().map(|s| s as usize).collect();
    let seeds = spec.count("seeds")?;
    let (trials, block) = (spec.count("trials")?, spec.count("block")?);
    let blocks: Vec<Vec<Vec<String>>> = lambdas
        .par_iter()
        .enumerate()
        .map(|(i, &lambda)| -> Result<_, CliError> {
            let geom = PairGeometry::new(side, sep, lambda, alpha)?;
            let point_seed = derive_seed(spec.seed, i as u64);
            let seed_list: Vec<u64> = (0..seeds as u64).map(|s| derive_seed(point_seed, s + 1)).collect();
            let report = lln_convergence_check(&geom, &sizes, &seed_list)?;
            let mc = estimate_eq(&geom, trials, block, derive_seed(point_seed, 0))?;
            Ok((0..sizes.len())
                .map(|s| {
                    let (mean, se) = report.seed_average(s);
                    let diff = s
                        .checked_sub(1)
                        .map_or(String::new(), |p| float(report.successive_diffs[p]));
                    vec![
                        float(lambda),
                        sizes[s].to_string(),
                        seeds.to_string(),
                        float(mean),
                        float(se),
                        diff,
                        float(mc.mean),
                        float(mc.std_error),
                        float(report.z_score(s, &mc)),
                    ]
                })
                .collect())
        })
        .collect::<Result<_, _>>()?;
    let rows: Vec<_> = blocks.into_iter().flatten().collect();
    Ok(Table {
        columns: &[
            "lambda",
            "size",
            "seeds",
            "mean",
            "std_error",
            "successive_diff",
            "mc_mean",
            "mc_std_error",
            "z_score",
        ],
        summary: format!("{} rows", rows.len()),
        rows,
        violations: 0,
    })
}

// ---------------------------------------------------------------------------

fn scaling(spec: &SweepSpec) -> Result<Table, CliError> {
    let ns = spec.int_grid("n")?;
    let betas = spec.grid("beta")?;
    let h = spec.count("h")?;
    let regime: Regime = spec.text("regime").parse().map_err(|_| {
        CliError::Usage(format!(
            "--regime: expected dense or extended, got {:?}",
            spec.text("regime")
        ))
    })?;
    let alpha = spec.number("alpha")?;
    let rows = cartesian(&betas, &ns)
        .par_iter()
        .map(|&(beta, n)| -> Result<_, CliError> {
            let nf = n as f64;
            let lambda = nf.powf(-beta);
            let p = predicted_throughput(nf, lambda, h, regime)?.with_path_loss(alpha)?;
            Ok(vec![
                n.to_string(),
                float(lambda),
                p.regime_index.to_string(),
                float(p.delta),
                float(p.tau),
                float(p.lower_bound),
                float(p.upper_bound),
                p.dof_limited.to_string(),
            ])
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Table {
        columns: &["n", "lambda", "b", "delta", "tau", "lower", "upper", "dof_limited"],
        summary: format!("{} grid points", rows.len()),
        rows,
        violations: 0,
    })
}

// ---------------------------------------------------------------------------

/// Relative gap allowed between the slot-accounting throughput and the
/// closed-form recursion.
pub const RECURSION_TOL: f64 = 1e-12;

fn protocol(spec: &SweepSpec) -> Result<Table, CliError> {
    let ns = spec.int_grid("n")?;
    let betas = spec.grid("beta")?;
    let h = spec.count("h")?;
    let q = u32::try_from(spec.int_grid("q")?.first().copied().unwrap_or(0))
        .map_err(|_| CliError::Usage("--q out of range".into()))?;
    let blocks = cartesian(&betas, &ns)
        .par_iter()
        .map(|&(beta, n)| -> Result<Vec<(Vec<String>, bool)>, CliError> {
            let lambda = (n as f64).powf(-beta);
            let plan = optimal_cluster_sizes(n, lambda, h, q)?;
            (1..=h)
                .map(|k| {
                    let s = simulate_level(k, &plan, q)?;
                    let p = s.params;
                    let closed =
                        throughput_recursion(p.t_prev, p.n_prev as f64, p.n_cur as f64, p.m as f64, p.rate, q as f64);
                    let rel = (s.real_throughput() - closed).abs() / closed;
                    let row = vec![
                        n.to_string(),
                        float(lambda),
                        k.to_string(),
                        p.n_prev.to_string(),
                        p.n_cur.to_string(),
                        p.m.to_string(),
                        float(p.rate),
                        float(p.t_prev),
                        float(s.ceiled.phase1),
                        float(s.ceiled.phase2),
                        float(s.ceiled.phase3),
                        float(s.real_throughput()),
                        float(s.throughput()),
                        float(closed),
                        float(rel),
                    ];
                    Ok((row, rel <= RECURSION_TOL))
                })
                .collect::<Result<_, CliError>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    let flat: Vec<_> = blocks.into_iter().flatten().collect();
    let violations = flat.iter().filter(|(_, ok)| !ok).count();
    Ok(Table {
        columns: &[
            "n",
            "lambda",
            "level",
            "n_prev",
            "n_cur",
            "m",
            "rate",
            "t_prev",
            "phase1",
            "phase2",
            "phase3",
            "real_throughput",
            "ceiled_throughput",
            "recursion",
            "relative_error",
        ],
        summary: format!("{} levels, {violations} disagreeing with the recursion", flat.len()),
        rows: flat.into_iter().map(|(r, _)| r).collect(),
        violations,
    })
}

// ---------------------------------------------------------------------------

fn lemma7(spec: &SweepSpec) -> Result<Table, CliError> {
    let instances = spec.count("instances")?;
    let rows = (0..instances)
        .into_par_iter()
        .map(|i| -> Result<_, CliError> {
            let mut r = rng::stream(spec.seed, i as u64);
            let inst = IntegralInstance::random(&mut r)?;
            let rep = inst.check()?;
            let row = vec![
                i.to_string(),
                float(inst.g.period),
                float(inst.h.start()),
                float(inst.h.end()),
                float(inst.c1),
                float(inst.c2),
                float(rep.lhs),
                float(rep.rhs),
                float(rep.tolerance),
                float(rep.window_start),
                rep.ok.to_string(),
            ];
            Ok((row, rep.ok))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let violations = rows.iter().filter(|(_, ok)| !ok).count();
    Ok(Table {
        columns: &[
            "instance",
            "period",
            "a",
            "b",
            "c1",
            "c2",
            "lhs",
            "rhs",
            "tolerance",
            "window_start",
            "ok",
        ],
        summary: format!("{instances} integrands, {violations} violations"),
        rows: rows.into_iter().map(|(r, _)| r).collect(),
        violations,
    })
}

// ---------------------------------------------------------------------------

/// A transmit pair whose line misses the receive square and a receive point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleSample {
    pub zu: Point,
    pub zv: Point,
    pub zs: Point,
    pub phi: f64,
    pub phi_min: f64,
}

impl AngleSample {
    /// Rejection-samples `zu`, `zv` uniformly in the transmit square until
    /// their line misses the receive square, then draws `zs` in it.
    pub fn draw(pair: &ClusterPair, rng: &mut rng::Rng) -> hcscale::Result<Self> {
        let d = pair.side;
        let point = |rng: &mut rng::Rng, x0: f64| Point::new(x0 + rng.random_range(0.0..d), rng.random_range(0.0..d));
        let (zu, zv) = loop {
            let (a, b) = (point(rng, 0.0), point(rng, 0.0));
            if a != b && classify_region(a, b, pair)? == Region::Gamma2 {
                break (a, b);
            }
        };
        let zs = point(rng, pair.separation);
        Ok(Self {
            zu,
            zv,
            zs,
            phi: angle_phi(zu, zv, zs)?,
            phi_min: phi_corner_min(zu, zv, pair)?,
        })
    }

    pub fn holds(&self) -> bool {
        self.phi.abs() >= self.phi_min
    }
}

fn lemma8(spec: &SweepSpec) -> Result<Table, CliError> {
    let pair = ClusterPair::random(spec.number("d")?, spec.number("l")?, 1, 0)?;
    let instances = spec.count("instances")?;
    let samples = (0..instances)
        .into_par_iter()
        .map(|i| AngleSample::draw(&pair, &mut rng::stream(spec.seed, i as u64)))
        .collect::<hcscale::Result<Vec<_>>>()?;
    let violations = samples.iter().filter(|s| !s.holds()).count();
    let rows = samples
        .iter()
        .enumerate()
        .map(|(i, s)| {
            vec![
                i.to_string(),
                float(s.zu.x),
                float(s.zu.y),
                float(s.zv.x),
                float(s.zv.y),
                float(s.zs.x),
                float(s.zs.y),
                float(s.phi),
                float(s.phi_min),
                s.holds().to_string(),
            ]
        })
        .collect();
    Ok(Table {
        columns: &[
            "instance", "zu_x", "zu_y", "zv_x", "zv_y", "zs_x", "zs_y", "phi", "phi_min", "ok",
        ],
        summary: format!("{instances} pairs, {violations} violations"),
        rows,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_cells_round_trip() {
        for x in [0.1, 1.0 / 3.0, 2f64.powi(-40), 6.02e23] {
            assert_eq!(float(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn scaling_schema() {
        let spec = SweepSpec::new(Kind::Scaling).with("n", "1024:1048576:x4").unwrap();
        let t = run(&spec).unwrap();
        assert_eq!(t.columns.join(","), "n,lambda,b,delta,tau,lower,upper,dof_limited");
        assert_eq!(t.rows.len(), 6);
        assert_eq!(t.rows[0][0], "1024");
    }

    #[test]
    fn mimo_rows_never_violate() {
        let spec = SweepSpec::new(Kind::MimoBound)
            .with("n-nodes", "8,16")
            .and_then(|s| s.with("interference", "cycle"))
            .and_then(|s| s.with("instances", "3"))
            .unwrap();
        let t = run(&spec).unwrap();
        assert_eq!(t.rows.len(), 6);
        assert_eq!(t.violations, 0);
        assert!(t.rows.iter().all(|r| r.last().unwrap() == "true"));
        assert_eq!(t.rows[1][4], "tdma");
    }

    #[test]
    fn unknown_interference_is_usage() {
        let spec = SweepSpec::new(Kind::MimoBound).with("interference", "all").unwrap();
        assert!(matches!(run(&spec), Err(CliError::Usage(_))));
    }

    #[test]
    fn protocol_matches_recursion() {
        let spec = SweepSpec::new(Kind::Protocol).with("n", "1024:65536:x16").unwrap();
        let t = run(&spec).unwrap();
        assert_eq!(t.violations, 0);
        assert_eq!(t.rows.len(), 2 * 3);
    }

    #[test]
    fn angle_samples_are_gamma2() {
        let pair = ClusterPair::random(1.0, 2.0, 1, 0).unwrap();
        let mut r = rng::seeded(4);
        for _ in 0..200 {
            let s = AngleSample::draw(&pair, &mut r).unwrap();
            assert!(s.phi_min > 0.0 && s.holds());
        }
    }
}
