//! Subcommand implementations: single runs, relaxation-scale sweeps,
//! diffusion-limit studies, the deterministic verification suite, and rate
//! re-fitting from existing CSV output.

use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use slabkin_core::asymptotics::{compare_with_diffusion, layer_norm, solve_layer, solve_parabolic};
use slabkin_core::boundary::{identity_residuals, BoundaryConfig, WallTrace};
use slabkin_core::collision::{apply, dissipation_form, CollisionKind};
use slabkin_core::diagnostics::{
    default_fit_window, dissipation_ledger, fit_decay_rate, full_norm_sq, RateFit,
};
use slabkin_core::elliptic::{inequality_report, solve_robin};
use slabkin_core::fields::{moment0, perp, snapshot_to_string, DistributionField, MacroField};
use slabkin_core::grids::{Domain, PotentialSpec, Wall};
use slabkin_core::transport::run_simulation;

use crate::config::ResolvedConfig;
use crate::error::{CliError, Result};
use crate::io::{ensure_dir, records_to_csv, snapshot_file_name, to_json, write_text};

// ---------------------------------------------------------------------------
// Shared summary pieces
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct FitSummary {
    pub lambda: f64,
    pub prefactor: f64,
    pub r_squared: f64,
    pub window_start: f64,
    pub window_end: f64,
    pub samples: usize,
    pub window_shrunk: bool,
}

impl From<RateFit> for FitSummary {
    fn from(fit: RateFit) -> Self {
        FitSummary {
            lambda: fit.lambda,
            prefactor: fit.prefactor,
            r_squared: fit.r_squared,
            window_start: fit.window.0,
            window_end: fit.window.1,
            samples: fit.samples,
            window_shrunk: fit.window_shrunk,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LedgerSummary {
    pub lhs: f64,
    pub initial_norm_sq: f64,
    pub slack: f64,
    pub holds: bool,
    pub trapezoid_defect: f64,
    pub reliable: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub version: String,
    pub config: ResolvedConfig,
    pub outputs: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub manifest: RunManifest,
    pub dt: f64,
    pub steps: usize,
    pub kappa: f64,
    pub m_c: f64,
    pub initial_mass: f64,
    pub final_mass: f64,
    pub max_mass_drift_rel: f64,
    pub initial_centered_norm: f64,
    pub final_centered_norm: f64,
    /// Reconstructed `||f||` never increases across records.
    pub norm_nonincreasing: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rate_fit: Option<FitSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rate_fit_error: Option<String>,
    pub ledger: LedgerSummary,
    pub entropy_equivalent: bool,
    pub entropy_monotone: bool,
}

fn version() -> String {
    env!("CARGO_PKG_VERSION").to_string()
}

// ---------------------------------------------------------------------------
// run
// ---------------------------------------------------------------------------

/// Execute one run: CSV record stream, optional snapshots, JSON summary.
/// Nothing is written unless the whole simulation succeeds.
pub fn cmd_run(cfg: &ResolvedConfig, outdir: &Path) -> Result<RunSummary> {
    let domain = cfg.domain()?;
    let sim = cfg.sim_config(&domain)?;
    let result = run_simulation(&domain, &sim, &cfg.snapshot_times)?;

    ensure_dir(outdir)?;
    let mut outputs = vec!["run.csv".to_string()];
    write_text(&outdir.join("run.csv"), &records_to_csv(&result.records))?;
    for (i, (_, f)) in result.samples.iter().enumerate() {
        let name = snapshot_file_name(i);
        write_text(&outdir.join(&name), &snapshot_to_string(f, &domain))?;
        outputs.push(name);
    }
    outputs.push("summary.json".to_string());

    let series: Vec<(f64, f64)> = result
        .records
        .iter()
        .map(|r| (r.t, r.norm_f_minus_mc))
        .collect();
    let window = default_fit_window(cfg.epsilon, cfg.t_final);
    let (rate_fit, rate_fit_error) = match fit_decay_rate(&series, window) {
        Ok(fit) => (Some(FitSummary::from(fit)), None),
        Err(e) => (None, Some(e.to_string())),
    };

    let total_measure = domain.measure().total();
    let ledger = dissipation_ledger(
        &result.records,
        cfg.epsilon,
        result.m_c,
        total_measure,
        1e-3,
    )?;

    let masses: Vec<f64> = result.records.iter().map(|r| r.mass).collect();
    let m0 = masses[0];
    let max_mass_drift_rel = masses
        .iter()
        .map(|m| (m - m0).abs() / m0.abs().max(f64::MIN_POSITIVE))
        .fold(0.0f64, f64::max);

    let e0 = result.records[0].entropy_e.max(0.0);
    let entropy_equivalent = result.records.iter().all(|r| {
        let base = r.norm_f_minus_mc * r.norm_f_minus_mc;
        let atol = 1e-14 * e0;
        r.entropy_e >= 0.5 * base - atol && r.entropy_e <= 1.5 * base + atol
    });
    let entropy_monotone = result
        .records
        .windows(2)
        .all(|p| p[1].entropy_e <= p[0].entropy_e + 1e-9 * e0);

    let norms_sq: Vec<f64> = result
        .records
        .iter()
        .map(|r| full_norm_sq(r, result.m_c, total_measure))
        .collect();
    let norm_nonincreasing = norms_sq
        .windows(2)
        .all(|p| p[1] <= p[0] * (1.0 + 1e-12) + 1e-14 * norms_sq[0]);

    let summary = RunSummary {
        manifest: RunManifest {
            version: version(),
            config: cfg.clone(),
            outputs,
        },
        dt: result.dt,
        steps: result.steps,
        kappa: result.kappa,
        m_c: result.m_c,
        initial_mass: masses[0],
        final_mass: *masses.last().unwrap(),
        max_mass_drift_rel,
        initial_centered_norm: result.records[0].norm_f_minus_mc,
        final_centered_norm: result.records.last().unwrap().norm_f_minus_mc,
        norm_nonincreasing,
        rate_fit,
        rate_fit_error,
        ledger: LedgerSummary {
            lhs: ledger.lhs,
            initial_norm_sq: ledger.initial_norm_sq,
            slack: ledger.slack,
            holds: ledger.holds,
            trapezoid_defect: ledger.trapezoid_defect,
            reliable: ledger.reliable,
        },
        entropy_equivalent,
        entropy_monotone,
    };
    write_text(&outdir.join("summary.json"), &to_json(&summary)?)?;
    Ok(summary)
}

// ---------------------------------------------------------------------------
// Worker pool: index-ordered results regardless of completion order.
// ---------------------------------------------------------------------------

fn parallel_map<T, F>(n: usize, workers: usize, job: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    let slots: Vec<Mutex<Option<T>>> = (0..n).map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let threads = workers.max(1).min(n.max(1));
    std::thread::scope(|scope| {
        for _ in 0..threads {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n {
                    break;
                }
                let value = job(i);
                *slots[i].lock().expect("result slot poisoned") = Some(value);
            });
        }
    });
    slots
        .into_iter()
        .map(|m| {
            m.into_inner()
                .expect("result slot poisoned")
                .expect("job ran")
        })
        .collect()
}

pub fn default_workers() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

fn check_eps_list(eps_list: &[f64]) -> Result<()> {
    if eps_list.is_empty() {
        return Err(CliError::Config(
            "sweep/limit needs at least one epsilon (--eps)".to_string(),
        ));
    }
    if eps_list
        .iter()
        .any(|e| !(e.is_finite() && *e > 0.0 && *e <= 1.0))
    {
        return Err(CliError::Config(
            "every epsilon must lie in (0, 1]".to_string(),
        ));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
pub struct SweepMember {
    pub eps: f64,
    pub dir: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summary: Option<RunSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct SweepSummary {
    pub version: String,
    pub members: Vec<SweepMember>,
    /// `max lambda / min lambda` when every member fitted a positive rate.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_max_over_min: Option<f64>,
    pub partial: bool,
}

/// Rerun the base configuration across a list of relaxation scales and
/// tabulate the fitted rates.
pub fn cmd_sweep(
    cfg: &ResolvedConfig,
    eps_list: &[f64],
    outdir: &Path,
    workers: usize,
) -> Result<SweepSummary> {
    check_eps_list(eps_list)?;
    ensure_dir(outdir)?;

    let outcomes = parallel_map(eps_list.len(), workers, |i| {
        let member = cfg.with_epsilon(eps_list[i]);
        let dir = outdir.join(format!("run_{i:03}"));
        cmd_run(&member, &dir)
    });

    let mut members = Vec::new();
    let mut lambdas = Vec::new();
    let mut partial = false;
    for (i, outcome) in outcomes.into_iter().enumerate() {
        let dir = format!("run_{i:03}");
        match outcome {
            Ok(summary) => {
                if let Some(fit) = &summary.rate_fit {
                    lambdas.push(fit.lambda);
                }
                members.push(SweepMember {
                    eps: eps_list[i],
                    dir,
                    summary: Some(summary),
                    error: None,
                });
            }
            Err(e) => {
                partial = true;
                members.push(SweepMember {
                    eps: eps_list[i],
                    dir,
                    summary: None,
                    error: Some(e.to_string()),
                });
            }
        }
    }

    let lambda_max_over_min =
        if !partial && lambdas.len() == eps_list.len() && lambdas.iter().all(|l| *l > 0.0) {
            let max = lambdas.iter().cloned().fold(f64::MIN, f64::max);
            let min = lambdas.iter().cloned().fold(f64::MAX, f64::min);
            Some(max / min)
        } else {
            None
        };

    let summary = SweepSummary {
        version: version(),
        members,
        lambda_max_over_min,
        partial,
    };
    write_text(&outdir.join("sweep.json"), &to_json(&summary)?)?;
    Ok(summary)
}

// ---------------------------------------------------------------------------
// limit
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
pub struct LimitMember {
    pub eps: f64,
    pub dir: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_layer: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l2_time: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sup_after_layer: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sup_with_layer: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct LimitSummary {
    pub version: String,
    pub well_prepared: bool,
    pub members: Vec<LimitMember>,
    /// Whether `sup_after_layer` decreases as eps does (evaluated on the
    /// members sorted by decreasing eps).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub monotone_sup: Option<bool>,
    /// Log-log slope of `sup_after_layer` against eps.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fitted_order: Option<f64>,
    pub partial: bool,
}

/// Compare kinetic runs against the diffusion profile across a list of
/// relaxation scales; fit the convergence order of the supremum gap.
pub fn cmd_limit(
    cfg: &ResolvedConfig,
    eps_list: &[f64],
    outdir: &Path,
    workers: usize,
) -> Result<LimitSummary> {
    check_eps_list(eps_list)?;
    ensure_dir(outdir)?;
    let well_prepared = cfg.initial()?.well_prepared();

    let outcomes = parallel_map(eps_list.len(), workers, |i| -> Result<LimitMember> {
        let member = cfg.with_epsilon(eps_list[i]);
        let domain = member.domain()?;
        let sim = member.sim_config(&domain)?;
        let comparison = compare_with_diffusion(&domain, &sim, member.limit_samples)?;
        let dir = outdir.join(format!("run_{i:03}"));
        ensure_dir(&dir)?;
        write_text(
            &dir.join("run.csv"),
            &records_to_csv(&comparison.kinetic.records),
        )?;
        let mut gap_csv = String::from("t,gap\n");
        for (t, g) in &comparison.gap.series {
            gap_csv.push_str(&format!("{t:.16e},{g:.16e}\n"));
        }
        write_text(&dir.join("gap.csv"), &gap_csv)?;
        Ok(LimitMember {
            eps: eps_list[i],
            dir: format!("run_{i:03}"),
            dt: Some(comparison.kinetic.dt),
            steps: Some(comparison.kinetic.steps),
            t_layer: Some(comparison.gap.t_layer),
            l2_time: Some(comparison.gap.l2_time),
            sup_after_layer: Some(comparison.gap.sup_after_layer),
            sup_with_layer: Some(comparison.gap.sup_with_layer),
            error: None,
        })
    });

    let mut members = Vec::new();
    let mut partial = false;
    for (i, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(m) => members.push(m),
            Err(e) => {
                partial = true;
                members.push(LimitMember {
                    eps: eps_list[i],
                    dir: format!("run_{i:03}"),
                    dt: None,
                    steps: None,
                    t_layer: None,
                    l2_time: None,
                    sup_after_layer: None,
                    sup_with_layer: None,
                    error: Some(e.to_string()),
                });
            }
        }
    }

    let mut pairs: Vec<(f64, f64)> = members
        .iter()
        .filter_map(|m| m.sup_after_layer.map(|s| (m.eps, s)))
        .collect();
    pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("finite eps"));
    let monotone_sup = if pairs.len() >= 2 {
        Some(pairs.windows(2).all(|p| p[1].1 < p[0].1))
    } else {
        None
    };
    let fitted_order = fit_loglog_order(&pairs);

    let summary = LimitSummary {
        version: version(),
        well_prepared,
        members,
        monotone_sup,
        fitted_order,
        partial,
    };
    write_text(&outdir.join("limit.json"), &to_json(&summary)?)?;
    Ok(summary)
}

/// Least-squares slope of `log gap` against `log eps`.
pub fn fit_loglog_order(pairs: &[(f64, f64)]) -> Option<f64> {
    if pairs.len() < 2 || pairs.iter().any(|p| !(p.0 > 0.0 && p.1 > 0.0)) {
        return None;
    }
    let n = pairs.len() as f64;
    let (mut sx, mut sy) = (0.0, 0.0);
    for (e, g) in pairs {
        sx += e.ln();
        sy += g.ln();
    }
    let (xbar, ybar) = (sx / n, sy / n);
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (e, g) in pairs {
        let dx = e.ln() - xbar;
        sxx += dx * dx;
        sxy += dx * (g.ln() - ybar);
    }
    (sxx > 0.0).then(|| sxy / sxx)
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaultMode {
    /// Evaluate the boundary identities against a domain whose central
    /// velocity quadrature weight has its sign flipped — a deliberate
    /// corruption that the suite must catch.
    FlipWeightSign,
}

impl FaultMode {
    pub fn parse(text: &str) -> Result<FaultMode> {
        match text {
            "flip-weight-sign" => Ok(FaultMode::FlipWeightSign),
            other => Err(CliError::Config(format!(
                "unknown fault mode '{other}' (available: flip-weight-sign)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyCase {
    pub suite: String,
    pub case: String,
    pub passed: bool,
    pub residual: f64,
    pub bound: f64,
}

#[derive(Debug, Serialize)]
pub struct VerifyReport {
    pub version: String,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fault: Option<String>,
    pub cases: Vec<VerifyCase>,
    pub passed: bool,
}

fn push_case(cases: &mut Vec<VerifyCase>, suite: &str, case: &str, residual: f64, bound: f64) {
    cases.push(VerifyCase {
        suite: suite.to_string(),
        case: case.to_string(),
        passed: residual.is_finite() && residual <= bound,
        residual,
        bound,
    });
}

/// Range check as a residual: how far outside `[lo, hi]` the value sits.
fn interval_residual(value: f64, lo: f64, hi: f64) -> f64 {
    if !value.is_finite() {
        return f64::INFINITY;
    }
    (lo - value).max(value - hi).max(0.0)
}

fn verify_boundary(cases: &mut Vec<VerifyCase>, seed: u64, fault: Option<FaultMode>) {
    let healthy = Domain::build(16, 16, 8.0, &PotentialSpec::Cosine { amplitude: 0.4 })
        .expect("verification domain");
    // Under fault injection the identities are checked against a corrupted
    // quadrature; they rely on the exact weight symmetry and must fail.
    let domain = match fault {
        Some(FaultMode::FlipWeightSign) => healthy.with_flipped_weight(healthy.n_v() / 2),
        None => healthy,
    };
    let laws = [(1.0, 0.0), (0.0, 1.0), (0.5, 0.5), (0.3, 0.3), (0.0, 0.0)];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for (alpha, beta) in laws {
        let cfg = BoundaryConfig::uniform(alpha, beta).expect("admissible law");
        let mut worst = 0.0f64;
        for _ in 0..40 {
            let mut trace = WallTrace::zeros(domain.n_v());
            for wall in Wall::BOTH {
                for value in trace.wall_mut(wall) {
                    *value = rng.gen_range(0.0..2.0);
                }
            }
            trace.close_incoming(&cfg, domain.velocity());
            let report = identity_residuals(&trace, &cfg, &domain, [1.0, 1.0]);
            worst = worst
                .max(report.residual_split_form)
                .max(report.residual_full_form);
            if let Some(robin) = report.robin {
                if !robin.satisfied {
                    worst = worst.max(1.0);
                }
            }
        }
        push_case(
            cases,
            "boundary",
            &format!("identity-alpha{alpha}-beta{beta}"),
            worst,
            1e-12,
        );
    }
}

fn verify_collision(cases: &mut Vec<VerifyCase>, seed: u64) {
    let domain = Domain::build(8, 32, 8.0, &PotentialSpec::Zero).expect("verification domain");
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x636f6c6c);
    for kind in [CollisionKind::Bgk, CollisionKind::FokkerPlanck] {
        let name = match kind {
            CollisionKind::Bgk => "relaxation",
            CollisionKind::FokkerPlanck => "diffusion",
        };
        let mut worst_mean = 0.0f64;
        let mut worst_gain = 0.0f64;
        for _ in 0..100 {
            let values: Vec<f64> = (0..domain.n_x() * domain.n_v())
                .map(|_| rng.gen_range(-2.0..2.0))
                .collect();
            let f = DistributionField::from_values(&domain, values, 0.0).expect("shape");
            let lf = apply(kind, &f, &domain);
            let mean = moment0(&lf, &domain);
            let scale = f
                .values()
                .iter()
                .fold(0.0f64, |m, v| m.max(v.abs()))
                .max(1.0);
            for &m in mean.values() {
                worst_mean = worst_mean.max(m.abs() / scale);
            }
            let d = domain.inner_dm(lf.values(), f.values());
            worst_gain = worst_gain.max(d / (scale * scale));
            worst_gain = worst_gain.max(dissipation_form(kind, &f, &domain) / (scale * scale));
        }
        push_case(
            cases,
            "collision",
            &format!("{name}-mass"),
            worst_mean,
            1e-12,
        );
        push_case(
            cases,
            "collision",
            &format!("{name}-dissipative"),
            worst_gain,
            1e-12,
        );
    }

    // Eigen-relation convergence order of the diffusion operator.
    let fields: [(fn(f64) -> f64, f64, &str); 2] =
        [(|v| v, 1.0, "v"), (|v: f64| v * v - 1.0, 2.0, "hermite2")];
    for (profile, rate, name) in fields {
        let mut errors = Vec::new();
        for n_v in [32usize, 64, 128] {
            let d = Domain::build(4, n_v, 8.0, &PotentialSpec::Zero).expect("domain");
            let f = DistributionField::from_fn(&d, |_, v| profile(v));
            let lf = apply(CollisionKind::FokkerPlanck, &f, &d);
            let mut diff = lf.clone();
            for (x, y) in diff.values_mut().iter_mut().zip(f.values()) {
                *x += rate * y;
            }
            errors.push(d.norm_dm(diff.values()) / d.norm_dm(f.values()));
        }
        let order = (errors[0] / errors[2]).log2() / 2.0;
        push_case(
            cases,
            "collision",
            &format!("eigen-order-{name}"),
            interval_residual(order, 1.8, f64::INFINITY),
            0.0,
        );
    }
}

fn verify_elliptic(cases: &mut Vec<VerifyCase>, seed: u64) {
    // Manufactured solutions for the three wall regimes; second order. The
    // accommodation sum s realizes the slope weight (1 - s)/s at the walls,
    // so tan(1/2) needs s = 1/(1 + tan(1/2)).
    let regimes: [(&str, BoundaryConfig, fn(f64) -> f64, fn(f64) -> f64); 3] = [
        (
            "no-flux",
            BoundaryConfig::uniform(1.0, 0.0).expect("law"),
            |x| (pi_c() * x).cos(),
            |x| (1.0 + pi_c() * pi_c()) * (pi_c() * x).cos(),
        ),
        (
            "robin",
            BoundaryConfig::uniform(1.0 / (1.0 + (0.5f64).tan()), 0.0).expect("law"),
            |x| (x - 0.5).cos(),
            |x| 2.0 * (x - 0.5).cos(),
        ),
        (
            "dirichlet",
            BoundaryConfig::uniform(0.0, 0.0).expect("law"),
            |x| (pi_c() * x).sin(),
            |x| (1.0 + pi_c() * pi_c()) * (pi_c() * x).sin(),
        ),
    ];
    for (name, cfg, exact, source_fn) in regimes {
        let mut errors = Vec::new();
        for n_x in [32usize, 64, 128] {
            let d = Domain::build(n_x, 8, 8.0, &PotentialSpec::Zero).expect("domain");
            let source = MacroField::from_fn(&d, source_fn);
            let sol = solve_robin(&source, &cfg, &d).expect("solve");
            let mut err_sq = 0.0;
            for (i, &x) in d.space().centers().iter().enumerate() {
                let e = sol.values()[i] - exact(x);
                err_sq += d.space().dx() * e * e;
            }
            errors.push(err_sq.sqrt());
        }
        let order = (errors[0] / errors[2]).log2() / 2.0;
        push_case(
            cases,
            "elliptic",
            &format!("order-{name}"),
            interval_residual(order, 1.8, 2.2),
            0.0,
        );
    }

    // Exact energy relations on random sources.
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x656c6c);
    let d = Domain::build(48, 8, 8.0, &PotentialSpec::Cosine { amplitude: 0.3 }).expect("domain");
    let cfgs = [
        BoundaryConfig::uniform(1.0, 0.0).expect("law"),
        BoundaryConfig::uniform(0.5, 0.0).expect("law"),
        BoundaryConfig::uniform(1.0 / 1001.0, 0.0).expect("law"),
        BoundaryConfig::uniform(0.0, 0.0).expect("law"),
    ];
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let coeffs: [f64; 4] = rng.gen();
        let source = MacroField::from_fn(&d, |x| {
            (coeffs[0] - 0.5)
                + coeffs[1] * (pi_c() * x).cos()
                + coeffs[2] * (2.0 * pi_c() * x).cos()
                + coeffs[3] * (3.0 * pi_c() * x).sin()
        });
        for cfg in &cfgs {
            let sol = solve_robin(&source, cfg, &d).expect("solve");
            let report = inequality_report(&source, &sol, &d);
            let scale = d.norm_x(source.values()).powi(2).max(1.0);
            worst = worst
                .max(report.residual_energy_identity.abs() / scale)
                .max(report.residual_lower_bound.abs() / scale);
        }
    }
    push_case(cases, "elliptic", "energy-relations", worst, 1e-8);
}

fn pi_c() -> f64 {
    std::f64::consts::PI
}

fn verify_layer(cases: &mut Vec<VerifyCase>, seed: u64) {
    // Exact exponential for the relaxation operator.
    let d = Domain::build(8, 16, 8.0, &PotentialSpec::Zero).expect("domain");
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6c617965);
    let values: Vec<f64> = (0..d.n_x() * d.n_v())
        .map(|_| rng.gen_range(-1.0..1.0))
        .collect();
    let psi0 = DistributionField::from_values(&d, values, 0.0).expect("shape");
    let eps = 0.2;
    let times = [0.01, 0.04, 0.1];
    let states = solve_layer(CollisionKind::Bgk, &psi0, eps, &times, &d).expect("layer");
    let base = perp(&psi0, &d);
    let mut worst = 0.0f64;
    for (&t, state) in times.iter().zip(&states) {
        let scale = (-t / (eps * eps)).exp();
        for (a, b) in state.values().iter().zip(base.values()) {
            worst = worst.max((a - b * scale).abs() / scale.max(1e-300));
        }
    }
    push_case(cases, "layer", "relaxation-exact", worst, 1e-13);

    // Eigen-decay of the diffusion layer.
    let d = Domain::build(4, 128, 8.0, &PotentialSpec::Zero).expect("domain");
    let psi0 = DistributionField::from_fn(&d, |_, v| v);
    let eps = 0.1;
    let taus = [1.0, 2.0];
    let times: Vec<f64> = taus.iter().map(|tau| tau * eps * eps).collect();
    let states = solve_layer(CollisionKind::FokkerPlanck, &psi0, eps, &times, &d).expect("layer");
    let mut worst = 0.0f64;
    for (tau, state) in taus.iter().zip(&states) {
        let scale = (-tau).exp();
        let mut diff = state.clone();
        for (flat, v) in diff.values_mut().iter_mut().enumerate() {
            *v -= scale * d.velocity().node(flat % d.n_v());
        }
        worst = worst.max(d.norm_dm(diff.values()) / (scale * d.norm_dm(psi0.values())));
    }
    push_case(cases, "layer", "diffusion-eigen-decay", worst, 0.01);

    let fit_times: Vec<f64> = (1..=30).map(|k| k as f64 * 0.1 * eps * eps).collect();
    let fit_states =
        solve_layer(CollisionKind::FokkerPlanck, &psi0, eps, &fit_times, &d).expect("layer");
    let series: Vec<(f64, f64)> = fit_times
        .iter()
        .zip(&fit_states)
        .map(|(&t, s)| (t, layer_norm(s, &d)))
        .collect();
    let fit = fit_decay_rate(&series, (0.0, 3.0 * eps * eps)).expect("fit");
    let c0 = fit.lambda * eps * eps;
    push_case(
        cases,
        "layer",
        "weighted-rate-positive",
        interval_residual(c0, 0.9, 1.1),
        0.0,
    );
}

fn verify_parabolic(cases: &mut Vec<VerifyCase>) {
    let n_x = 64;
    let d = Domain::build(n_x, 8, 8.0, &PotentialSpec::Zero).expect("domain");
    let dx = d.space().dx();
    let rho0 = MacroField::from_fn(&d, |x| 1.0 + (pi_c() * x).cos());
    let t_final = 0.25;
    let states = solve_parabolic(&rho0, &[t_final], &d).expect("parabolic");

    let lambda_h = (2.0 / (dx * dx)) * (1.0 - (pi_c() * dx).cos());
    let n_steps = (t_final / (0.5 * dx * dx)).ceil() as usize;
    let h = t_final / n_steps as f64;
    let sigma = (1.0 - 0.5 * h * lambda_h) / (1.0 + 0.5 * h * lambda_h);
    let amp = sigma.powi(n_steps as i32);
    let mut worst = 0.0f64;
    for (i, &x) in d.space().centers().iter().enumerate() {
        worst = worst.max((states[0].values()[i] - (1.0 + amp * (pi_c() * x).cos())).abs());
    }
    push_case(cases, "parabolic", "cosine-mode-oracle", worst, 1e-11);

    let ones = vec![1.0; n_x];
    let mass0 = d.inner_x(rho0.values(), &ones);
    let mass1 = d.inner_x(states[0].values(), &ones);
    push_case(
        cases,
        "parabolic",
        "mass-conservation",
        (mass1 - mass0).abs() / mass0.abs(),
        1e-12,
    );
}

/// Deterministic invariant suite. Returns the report; the caller decides the
/// exit status from `report.passed`.
pub fn cmd_verify(seed: u64, fault: Option<FaultMode>, out: Option<&Path>) -> Result<VerifyReport> {
    let mut cases = Vec::new();
    verify_boundary(&mut cases, seed, fault);
    verify_collision(&mut cases, seed);
    verify_elliptic(&mut cases, seed);
    verify_layer(&mut cases, seed);
    verify_parabolic(&mut cases);

    let passed = cases.iter().all(|c| c.passed);
    let report = VerifyReport {
        version: version(),
        seed,
        fault: fault.map(|_| "flip-weight-sign".to_string()),
        cases,
        passed,
    };
    if let Some(dir) = out {
        ensure_dir(dir)?;
        write_text(&dir.join("verify.json"), &to_json(&report)?)?;
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// fit
// ---------------------------------------------------------------------------

/// Re-fit a decay rate from an existing record CSV over an explicit window.
pub fn cmd_fit(
    records: &[slabkin_core::diagnostics::DiagnosticsRecord],
    column: &str,
    window: (f64, f64),
) -> Result<FitSummary> {
    let series = crate::io::csv_series(records, column)?;
    let fit = fit_decay_rate(&series, window)?;
    Ok(FitSummary::from(fit))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    fn quick_cfg(extra: &str) -> ResolvedConfig {
        let text = format!(
            "[model]\ncollision = \"bgk\"\nepsilon = 1.0\n[grids]\nn_x = 16\nn_v = 16\n[time]\nt_final = 0.25\n[output]\nrecords = 20\n{extra}"
        );
        parse_config(&text, None).unwrap()
    }

    #[test]
    fn run_writes_csv_snapshots_and_summary() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = quick_cfg("");
        cfg.snapshot_times = vec![0.0, 0.25];
        let summary = cmd_run(&cfg, dir.path()).unwrap();
        assert!(dir.path().join("run.csv").exists());
        assert!(dir.path().join("summary.json").exists());
        assert!(dir.path().join("snapshot_0000.txt").exists());
        assert!(dir.path().join("snapshot_0001.txt").exists());
        assert!(summary.norm_nonincreasing);
        assert!(summary.ledger.holds);
        assert!(summary.max_mass_drift_rel <= 1e-10);
        assert_eq!(summary.manifest.config, cfg);
    }

    #[test]
    fn equilibrium_run_reports_zero_rate() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = quick_cfg("[initial]\npreset = \"equilibrium\"\nlevel = 1.0\n");
        let summary = cmd_run(&cfg, dir.path()).unwrap();
        let fit = summary
            .rate_fit
            .unwrap_or_else(|| panic!("fit failed: {:?}", summary.rate_fit_error));
        assert_eq!(fit.lambda, 0.0);
        assert_eq!(fit.prefactor, 1.0);
    }

    #[test]
    fn sweep_degenerate_single_member_has_ratio_one() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = quick_cfg("");
        let summary = cmd_sweep(&cfg, &[1.0], dir.path(), 1).unwrap();
        assert!(!summary.partial);
        let ratio = summary.lambda_max_over_min.expect("one positive rate");
        assert!((ratio - 1.0).abs() <= 1e-12);
        assert!(dir.path().join("sweep.json").exists());
        assert!(dir.path().join("run_000/run.csv").exists());
    }

    #[test]
    fn sweep_rejects_empty_and_invalid_lists() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = quick_cfg("");
        assert!(cmd_sweep(&cfg, &[], dir.path(), 1).is_err());
        assert!(cmd_sweep(&cfg, &[1.5], dir.path(), 1).is_err());
        assert!(cmd_limit(&cfg, &[0.0], dir.path(), 1).is_err());
    }

    #[test]
    fn limit_of_constant_data_has_vanishing_gaps() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = quick_cfg("[initial]\npreset = \"equilibrium\"\nlevel = 1.0\n");
        let summary = cmd_limit(&cfg, &[0.5, 0.25], dir.path(), 2).unwrap();
        assert!(!summary.partial);
        assert!(summary.well_prepared);
        for m in &summary.members {
            assert!(m.sup_with_layer.unwrap() <= 1e-10);
            assert!(m.sup_after_layer.unwrap() <= 1e-10);
        }
        assert!(dir.path().join("limit.json").exists());
        assert!(dir.path().join("run_000/gap.csv").exists());
    }

    #[test]
    fn verify_passes_clean_and_catches_injected_fault() {
        let report = cmd_verify(2024, None, None).unwrap();
        assert!(
            report.passed,
            "{:#?}",
            report
                .cases
                .iter()
                .filter(|c| !c.passed)
                .collect::<Vec<_>>()
        );
        let faulted = cmd_verify(2024, Some(FaultMode::FlipWeightSign), None).unwrap();
        assert!(!faulted.passed);
        let failing: Vec<_> = faulted.cases.iter().filter(|c| !c.passed).collect();
        assert!(failing.iter().all(|c| c.suite == "boundary"));
        assert!(!failing.is_empty());
    }

    #[test]
    fn verify_is_deterministic_for_a_seed() {
        let a = cmd_verify(7, None, None).unwrap();
        let b = cmd_verify(7, None, None).unwrap();
        assert_eq!(to_json(&a).unwrap(), to_json(&b).unwrap());
    }

    #[test]
    fn loglog_order_fit_recovers_powers() {
        let pairs: Vec<(f64, f64)> = [0.4, 0.2, 0.1, 0.05]
            .iter()
            .map(|&e: &f64| (e, 3.0 * e.powf(0.7)))
            .collect();
        let order = fit_loglog_order(&pairs).unwrap();
        assert!((order - 0.7).abs() <= 1e-12);
        assert!(fit_loglog_order(&pairs[..1]).is_none());
    }
}
