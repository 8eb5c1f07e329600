//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use hcscale::channel::Regime;
use hcscale::geometry::ClusterPair;
use hcscale::mimo::{paley_zygmund_lower, random_psd, trace_sq_inequality, CMatrix};
use hcscale::planner::{
    delta_tau, optimal_cluster_sizes, polylog_factor, predicted_throughput, regime_classifier, regime_formula,
    throughput_recursion, DEFAULT_Q,
};
use hcscale::protocol::simulate_level;
use hcscale::rng;
use hcscale::spectral::{
    decay_regression, estimate_eq, least_squares_slope, lln_convergence_check, IntegralInstance, PairGeometry,
};
use hcscale_cli::experiments::{decay_series, derive_seed, AngleSample, Interference, MimoInstance};
use rand::Rng as _;
use rand_distr::{Distribution, Exp, LogNormal};
use rayon::prelude::*;

const SEED: u64 = 20_100_601;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn timed(limit: Option<Duration>, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let mut o = f();
    let took = start.elapsed();
    o.detail = format!("{}; {:.1} s", o.detail, took.as_secs_f64());
    if let Some(limit) = limit {
        if took > limit {
            o.pass = false;
            o.detail = format!("{} exceeds {} s", o.detail, limit.as_secs());
        }
    }
    o
}

fn single_thread<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .expect("pool")
        .install(f)
}

// 1 -------------------------------------------------------------------------

fn central_inequality() -> Outcome {
    let mut r = rng::seeded(SEED);
    let modes = [Interference::None, Interference::Tdma, Interference::Psd];
    let instances: Vec<MimoInstance> = (0..200)
        .map(|i| MimoInstance {
            nodes: [4, 8, 16, 32, 64][r.random_range(0..5)],
            side: 1.0,
            separation: [2.0, 4.0, 8.0][r.random_range(0..3)],
            wavelength: 2f64.powi(-r.random_range(2..=10)),
            alpha: 2.0,
            power: 10f64.powf(r.random_range(-1.0..2.0)),
            gain: 1.0,
            interference: modes[i % 3],
            seed: r.random(),
        })
        .collect();
    let mut violations = 0;
    let mut checks = 0;
    let mut min_margin = f64::INFINITY;
    for inst in &instances {
        match inst.evaluate() {
            Ok(o) => {
                violations += o.violations;
                checks += 19;
                min_margin = min_margin.min(o.margin);
            }
            Err(e) => return outcome(false, format!("instance {inst:?} failed: {e}")),
        }
    }
    outcome(
        violations == 0,
        format!("200 instances x 19 deltas = {checks} checks, {violations} violations, smallest MI - bound {min_margin:.3e}"),
    )
}

// 2 -------------------------------------------------------------------------

fn lemma6_decay() -> Outcome {
    let lambdas: Vec<f64> = (3..=12).map(|k| 2f64.powi(-k)).collect();
    let series = match decay_series(1.0, 2.0, &lambdas, 2.0, 100_000, 32, SEED) {
        Ok(s) => s,
        Err(e) => return outcome(false, e.to_string()),
    };
    let slope = match decay_regression(&series) {
        Ok(s) => s,
        Err(e) => return outcome(false, e.to_string()),
    };
    let scaled: Vec<f64> = series.points.iter().map(|p| p.mean * p.dof).collect();
    let (lo, hi) = scaled
        .iter()
        .fold((f64::INFINITY, 0f64), |(a, b), &v| (a.min(v), b.max(v)));
    let m_min = series.points.iter().map(|p| p.dof).fold(f64::INFINITY, f64::min);
    let m_max = series.points.iter().map(|p| p.dof).fold(0.0, f64::max);
    let allowance = 3.0 * lo * (1.0 + m_max.log2()) / (1.0 + m_min.log2());
    outcome(
        slope <= -0.8 && hi <= allowance,
        format!(
            "M in [{m_min:.1}, {m_max:.1}], slope {slope:.4} (need <= -0.8), max E[Q]M {hi:.4e} vs allowance {allowance:.4e}"
        ),
    )
}

// 3 -------------------------------------------------------------------------

fn lemma5_lln() -> Outcome {
    let run = || -> hcscale::Result<Outcome> {
        let geom = PairGeometry::new(1.0, 8.0, 2f64.powi(-3), 2.0)?;
        let seeds: Vec<u64> = (0..10).map(|s| derive_seed(SEED, s)).collect();
        let report = lln_convergence_check(&geom, &[64, 128], &seeds)?;
        let mc = estimate_eq(&geom, 100_000, 32, derive_seed(SEED, 100))?;
        let diff = report.successive_diffs[0];
        let z: Vec<f64> = (0..2).map(|s| report.z_score(s, &mc)).collect();
        let limit = 0.05 * mc.mean.abs();
        Ok(outcome(
            diff < limit && z.iter().all(|&z| z <= 3.0),
            format!(
                "E[Q] = {:.4e} +- {:.1e}, mean |diff| 64->128 {diff:.3e} (limit {limit:.3e}), z at 64/128 = {:.2}/{:.2}",
                mc.mean, mc.std_error, z[0], z[1]
            ),
        ))
    };
    run().unwrap_or_else(|e| outcome(false, e.to_string()))
}

// 4 -------------------------------------------------------------------------

fn lemma3_and_paley_zygmund() -> Outcome {
    let trace_violations: usize = (0..10_000u64)
        .into_par_iter()
        .map(|i| {
            let mut r = rng::stream(SEED, i);
            let n = r.random_range(1..=8);
            let k = r.random_range(1..=6);
            let mats: Vec<CMatrix> = (0..k)
                .map(|_| {
                    let rank = r.random_range(1..=n);
                    let trace = 10f64.powf(r.random_range(-3.0..3.0));
                    random_psd(n, rank, trace, &mut r)
                })
                .collect();
            let (lhs, rhs) = trace_sq_inequality(&mats).expect("nonempty");
            usize::from(lhs > rhs * (1.0 + 1e-12))
        })
        .sum();
    let pz_violations: usize = (0..10_000u64)
        .into_par_iter()
        .map(|i| {
            let mut r = rng::stream(SEED ^ 0x5a5a, i);
            let len = r.random_range(1..=200);
            let values: Vec<f64> = match i % 3 {
                0 => (0..len).map(|_| r.random_range(0.0..1.0)).collect(),
                1 => {
                    let d = Exp::new(1.0).expect("rate");
                    (0..len).map(|_| d.sample(&mut r)).collect()
                }
                _ => {
                    let d = LogNormal::new(0.0, 2.0).expect("sigma");
                    (0..len).map(|_| d.sample(&mut r)).collect()
                }
            };
            let delta = r.random_range(0.0..=1.0);
            let (lhs, rhs) = paley_zygmund_lower(&values, delta).expect("valid sample");
            usize::from(lhs < rhs - 1e-12)
        })
        .sum();
    outcome(
        trace_violations == 0 && pz_violations == 0,
        format!("trace inequality {trace_violations}/10000 violations, Paley-Zygmund {pz_violations}/10000 violations"),
    )
}

// 5 -------------------------------------------------------------------------

fn lemma7_and_8() -> Outcome {
    let l7: Vec<Result<bool, String>> = (0..1000u64)
        .into_par_iter()
        .map(|i| {
            let mut r = rng::stream(SEED, i);
            let inst = IntegralInstance::random(&mut r).map_err(|e| e.to_string())?;
            inst.check().map(|rep| rep.ok).map_err(|e| e.to_string())
        })
        .collect();
    if let Some(Err(e)) = l7.iter().find(|r| r.is_err()) {
        return outcome(false, format!("lemma 7 instance failed: {e}"));
    }
    let l7_bad = l7.iter().filter(|r| matches!(r, Ok(false))).count();
    let pair = ClusterPair::random(1.0, 2.0, 1, 0).expect("geometry");
    let l8_bad: usize = (0..100_000u64)
        .into_par_iter()
        .map(|i| {
            let s = AngleSample::draw(&pair, &mut rng::stream(SEED, i)).expect("gamma2 sample");
            usize::from(!s.holds())
        })
        .sum();
    outcome(
        l7_bad == 0 && l8_bad == 0,
        format!("integral bound {l7_bad}/1000 violations, corner angle {l8_bad}/100000 violations"),
    )
}

// 6 -------------------------------------------------------------------------

/// Relative gap allowed between the real-valued slot accounting and the
/// recursion: a few ulps of accumulated rounding.
const MACHINE_TOL: f64 = 1e-13;

fn recursion_consistency() -> Outcome {
    let mut r = rng::seeded(SEED ^ 6);
    let mut worst_real = 0f64;
    let mut worst_ceiled = 0f64;
    let mut ceiled_levels = 0;
    for _ in 0..100 {
        let n = 2f64.powf(r.random_range(10.0..=20.0)).round() as u64;
        let beta = r.random_range(0.3..1.6);
        let h = r.random_range(1..=4);
        let plan = match optimal_cluster_sizes(n, (n as f64).powf(-beta), h, DEFAULT_Q) {
            Ok(p) => p,
            Err(e) => return outcome(false, format!("plan n={n} beta={beta}: {e}")),
        };
        for k in 1..=h {
            let s = simulate_level(k, &plan, DEFAULT_Q).expect("valid plan");
            let p = s.params;
            let closed = throughput_recursion(
                p.t_prev,
                p.n_prev as f64,
                p.n_cur as f64,
                p.m as f64,
                p.rate,
                DEFAULT_Q as f64,
            );
            worst_real = worst_real
                .max((s.real_throughput() - closed).abs() / closed)
                .max((s.real_throughput() - plan.throughputs[k]).abs() / plan.throughputs[k]);
            if p.n_cur >= 1 << 10 {
                ceiled_levels += 1;
                worst_ceiled = worst_ceiled.max((s.throughput() - closed).abs() / closed);
            }
        }
    }
    outcome(
        worst_real <= MACHINE_TOL && worst_ceiled <= 0.05,
        format!(
            "100 plans, worst real-valued relative gap {worst_real:.2e} (limit {MACHINE_TOL:.0e}), \
             worst ceiled gap {worst_ceiled:.2e} over {ceiled_levels} levels with n_k >= 2^10 (limit 5e-2)"
        ),
    )
}

// 7 -------------------------------------------------------------------------

fn fitted_exponent(beta: f64, regime: Regime) -> hcscale::Result<(f64, f64, f64)> {
    let h = 3;
    let ns: Vec<f64> = (10..=20).map(|e| 2f64.powi(e)).collect();
    let mut xs = Vec::new();
    let (mut lower, mut piecewise, mut nominal) = (Vec::new(), Vec::new(), Vec::new());
    for &n in &ns {
        let dense_lambda = n.powf(-beta);
        let lambda = match regime {
            Regime::Dense => dense_lambda,
            Regime::Extended => dense_lambda * n.sqrt(),
        };
        let p = predicted_throughput(n, lambda, h, regime)?;
        xs.push(n.ln());
        lower.push((p.lower_bound * polylog_factor(n, h)).ln());
        piecewise.push(regime_formula(n, p.effective_wavelength, h)?.ln());
        let (d, t) = delta_tau(regime_classifier(n, p.effective_wavelength, h)?, h)?;
        nominal.push(d + beta * t);
    }
    let mean_nominal = nominal.iter().sum::<f64>() / nominal.len() as f64;
    Ok((
        least_squares_slope(&xs, &lower),
        least_squares_slope(&xs, &piecewise),
        mean_nominal,
    ))
}

fn scaling_exponents() -> Outcome {
    let run = || -> hcscale::Result<Outcome> {
        let (s_hi, _, _) = fitted_exponent(1.25, Regime::Dense)?;
        let (s_lo, piece_lo, nominal_lo) = fitted_exponent(0.6, Regime::Dense)?;
        let hi_ok = (s_hi - 0.8).abs() <= 0.05;
        let lo_ok = (s_lo - piece_lo).abs() <= 0.05;
        // the extended regime must be the dense computation at lambda n^-1/2
        let mut identical = true;
        for beta in [0.6, 1.25] {
            for e in 10..=20 {
                let n = 2f64.powi(e);
                let ext = predicted_throughput(n, n.powf(-beta) * n.sqrt(), 3, Regime::Extended)?;
                let dense = predicted_throughput(n, ext.effective_wavelength, 3, Regime::Dense)?;
                identical &= ext.lower_bound.to_bits() == dense.lower_bound.to_bits()
                    && ext.regime_index == dense.regime_index
                    && ext.upper_bound.to_bits() == dense.upper_bound.to_bits();
            }
        }
        let (e_hi, _, _) = fitted_exponent(1.25, Regime::Extended)?;
        let (e_lo, _, _) = fitted_exponent(0.6, Regime::Extended)?;
        let ext_ok = identical && (e_hi - 0.8).abs() <= 0.05 && (e_lo - piece_lo).abs() <= 0.05;
        Ok(outcome(
            hi_ok && lo_ok && ext_ok,
            format!(
                "beta 1.25: slope {s_hi:.4} vs 0.8; beta 0.6: slope {s_lo:.4} vs piecewise {piece_lo:.4} \
                 (nominal mean {nominal_lo:.4}); extended slopes {e_hi:.4}/{e_lo:.4}, identical to dense: {identical}"
            ),
        ))
    };
    run().unwrap_or_else(|e| outcome(false, e.to_string()))
}

// 8 -------------------------------------------------------------------------

fn dof_crossover() -> Outcome {
    let betas: Vec<f64> = (1..=40).map(|i| i as f64 * 0.05).collect();
    let mut mismatches = Vec::new();
    for (regime, flip) in [(Regime::Dense, 1.0), (Regime::Extended, 0.5)] {
        for &beta in &betas {
            for e in 10..=20 {
                let n = 2f64.powi(e);
                let p = predicted_throughput(n, n.powf(-beta), 3, regime).expect("valid point");
                let expect = beta < flip - 1e-12;
                if p.dof_limited != expect {
                    mismatches.push(format!("{} beta={beta:.2} n=2^{e}", regime.name()));
                }
            }
        }
    }
    outcome(
        mismatches.is_empty(),
        format!(
            "{} grid points, flag set exactly for beta < 1 (dense) and beta < 1/2 (extended); mismatches: {:?}",
            2 * betas.len() * 11,
            mismatches
        ),
    )
}

// 9 -------------------------------------------------------------------------

fn cli_runs() -> Vec<Vec<&'static str>> {
    vec![
        vec![
            "mimo-bound",
            "--n-nodes",
            "32",
            "--d",
            "1",
            "--l",
            "2",
            "--lambda",
            "0.01",
            "--instances",
            "200",
            "--seed",
            "3",
        ],
        vec![
            "mimo-bound",
            "--n-nodes",
            "4,16",
            "--l",
            "2,8",
            "--interference",
            "cycle",
            "--instances",
            "6",
            "--seed",
            "1",
        ],
        vec![
            "eq-decay",
            "--d",
            "1",
            "--l",
            "2",
            "--lambda",
            "2^-3:2^-12:x0.5",
            "--trials",
            "100000",
            "--seed",
            "7",
        ],
        vec![
            "lln",
            "--sizes",
            "16,32",
            "--seeds",
            "4",
            "--trials",
            "2000",
            "--lambda",
            "2^-3,2^-4",
            "--seed",
            "11",
        ],
        vec![
            "scaling",
            "--n",
            "1024:1048576:x4",
            "--beta",
            "1.0",
            "--h",
            "3",
            "--regime",
            "dense",
        ],
        vec![
            "scaling",
            "--n",
            "1024:1048576:x2",
            "--beta",
            "0.25:1.5:+0.25",
            "--regime",
            "extended",
            "--alpha",
            "3",
        ],
        vec![
            "protocol",
            "--n",
            "1024:1048576:x4",
            "--beta",
            "0.6,1.25",
            "--seed",
            "2",
        ],
        vec!["lemma7", "--instances", "200", "--seed", "5"],
        vec!["lemma8", "--instances", "5000", "--seed", "5"],
    ]
}

fn run_cli(args: &[&str], out: &Path, jobs: &str) -> Result<Vec<u8>, String> {
    let status = Command::new(env!("CARGO_BIN_EXE_hcscale"))
        .args(args)
        .arg("--out")
        .arg(out)
        .arg("--jobs")
        .arg(jobs)
        .stderr(std::process::Stdio::null())
        .status()
        .map_err(|e| e.to_string())?;
    if !status.success() {
        return Err(format!("{args:?} exited with {status}"));
    }
    std::fs::read(out).map_err(|e| e.to_string())
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().expect("temp dir");
    let runs = cli_runs();
    let mut differing = Vec::new();
    for (i, args) in runs.iter().enumerate() {
        let a = run_cli(args, &dir.path().join(format!("{i}a.csv")), "1");
        let b = run_cli(args, &dir.path().join(format!("{i}b.csv")), "4");
        match (a, b) {
            (Ok(a), Ok(b)) if a == b && !a.is_empty() => {}
            (Err(e), _) | (_, Err(e)) => differing.push(e),
            _ => differing.push(format!("{} output differs", args[0])),
        }
    }
    outcome(
        differing.is_empty(),
        format!(
            "{} runs repeated with 1 and 4 workers, problems: {differing:?}",
            runs.len()
        ),
    )
}

fn main() {
    type Check = (u8, &'static str, Option<Duration>, fn() -> Outcome);
    let checks: [Check; 9] = [
        (1, "central MIMO inequality", Some(Duration::from_secs(300)), || {
            single_thread(central_inequality)
        }),
        (2, "E[Q] decay in the DoF", Some(Duration::from_secs(600)), lemma6_decay),
        (3, "law of large numbers for Q means", None, lemma5_lln),
        (
            4,
            "trace and Paley-Zygmund inequalities",
            Some(Duration::from_secs(60)),
            lemma3_and_paley_zygmund,
        ),
        (5, "integral and corner angle bounds", None, lemma7_and_8),
        (6, "slot accounting against the recursion", None, recursion_consistency),
        (7, "scaling exponents", None, scaling_exponents),
        (8, "DoF-limit crossover", None, dof_crossover),
        (9, "CLI determinism", None, determinism),
    ];
    let mut failed = 0;
    for (id, name, limit, check) in checks {
        let o = timed(limit, check);
        failed += usize::from(!o.pass);
        println!("{} [{id}] {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    println!("{} of {} criteria passed", checks.len() - failed, checks.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
