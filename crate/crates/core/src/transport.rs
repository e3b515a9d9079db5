//! Phase-space advection in conservative flux form and the split
//! explicit/implicit time integrator.
//!
//! The advected quantity is the weighted density `m f` with
//! `m = e^{-phi(x)} M(v) dx dv / Z`; in these variables the streaming field
//! `(v, -phi'(x))` is divergence free, so first-order upwind fluxes give a
//! scheme that
//!
//! * keeps constants exactly stationary (the cell drift is defined from the
//!   same face exponentials that weight the spatial fluxes, and the velocity
//!   flux weights telescope to `-v_j w_j` across each node),
//! * conserves total weighted mass up to the wall flux, which itself
//!   cancels exactly when the wall laws satisfy `alpha + beta = 1`,
//! * is monotone — hence nonexpansive on the weighted L^2 norm — under the
//!   CFL bound implemented by [`stable_dt`].
//!
//! A time step advances the stiff collision term implicitly after the
//! explicit transport update:
//!
//! ```text
//!     f* = f - (dt/eps) div(m f) / m,      (I - (dt/eps^2) L) f_new = f*.
//! ```

use alloc::vec;
use alloc::vec::Vec;

use crate::boundary::{BoundaryConfig, WallTrace};
use crate::collision::{CollisionKind, ImplicitCollision};
use crate::diagnostics::{choose_kappa, record_state, DiagnosticsRecord};
use crate::elliptic::entropy_aux;
use crate::error::{CoreError, Result};
use crate::fields::DistributionField;
use crate::grids::Domain;

/// Largest explicit step allowed by the transport CFL condition,
/// `dt = theta eps / (v_max/dx + L_phi/dv)`.
pub fn stable_dt(theta: f64, eps: f64, domain: &Domain) -> f64 {
    let rate = domain.velocity().v_max() / domain.space().dx()
        + domain.potential().lipschitz() / domain.velocity().dv();
    theta * eps / rate
}

/// Wall traces of a field with the incoming half closed by the wall laws.
pub fn closed_trace(f: &DistributionField, cfg: &BoundaryConfig, domain: &Domain) -> WallTrace {
    let mut trace = WallTrace::from_field(f, domain);
    trace.close_incoming(cfg, domain.velocity());
    trace
}

/// Net outflow of the weighted density through the faces of every cell.
/// Spatial faces upwind on the sign of `v`, velocity faces on the sign of
/// the cell drift; wall faces read the (closed) trace, cutoff faces carry
/// zero flux.
fn flux_divergence(f: &[f64], trace: &WallTrace, domain: &Domain) -> Vec<f64> {
    let g = domain.velocity();
    let pot = domain.potential();
    let n_x = domain.n_x();
    let n_v = g.len();
    let z = g.z();
    let dx = domain.space().dx();
    let mut div = vec![0.0; n_x * n_v];
    let [left, right] = trace.as_slices();

    // Spatial sweep with a running face flux per velocity node. The trace
    // already holds the upwind value at both walls: the adjacent cell on the
    // outgoing half, the closure on the incoming half.
    let coef: Vec<f64> = (0..n_v).map(|j| g.node(j) * g.weight(j) / z).collect();
    let mut flux: Vec<f64> = (0..n_v)
        .map(|j| coef[j] * pot.exp_neg_face(0) * left[j])
        .collect();
    for k in 1..n_x {
        let w = pot.exp_neg_face(k);
        for j in 0..n_v {
            let up = if g.node(j) > 0.0 {
                f[(k - 1) * n_v + j]
            } else {
                f[k * n_v + j]
            };
            let next = coef[j] * w * up;
            div[(k - 1) * n_v + j] += next - flux[j];
            flux[j] = next;
        }
    }
    let w = pot.exp_neg_face(n_x);
    for j in 0..n_v {
        let last = coef[j] * w * right[j];
        div[(n_x - 1) * n_v + j] += last - flux[j];
    }

    // Velocity sweep, cell by cell.
    for i in 0..n_x {
        let speed = -pot.drift(i);
        if speed == 0.0 {
            continue;
        }
        let scale = speed * pot.exp_neg_center(i) * dx / z;
        let row = i * n_v;
        let mut prev = 0.0;
        for k in 1..n_v {
            let up = if speed > 0.0 {
                f[row + k - 1]
            } else {
                f[row + k]
            };
            let next = scale * g.drift_face(k) * up;
            div[row + k - 1] += next - prev;
            prev = next;
        }
        div[row + n_v - 1] -= prev;
    }

    div
}

/// The transport right-hand side `-(1/eps)(v d_x f - phi' d_v f)` in its
/// discrete flux form, with the boundary closure applied.
pub fn transport_rhs(
    f: &DistributionField,
    cfg: &BoundaryConfig,
    eps: f64,
    domain: &Domain,
) -> DistributionField {
    let trace = closed_trace(f, cfg, domain);
    let div = flux_divergence(f.values(), &trace, domain);
    let mut out = f.clone();
    let m = domain.measure();
    for (flat, value) in out.values_mut().iter_mut().enumerate() {
        *value = -div[flat] / (eps * m.cell(flat));
    }
    out
}

/// One split step: explicit transport over `dt`, then the implicit collision
/// solve whose relaxation weight `solver` must have been built with
/// `nu = dt / eps^2`.
pub fn step_imex(
    f: &DistributionField,
    dt: f64,
    eps: f64,
    solver: &ImplicitCollision,
    cfg: &BoundaryConfig,
    domain: &Domain,
) -> Result<DistributionField> {
    let trace = closed_trace(f, cfg, domain);
    let div = flux_divergence(f.values(), &trace, domain);
    let lambda = dt / eps;
    let m = domain.measure();

    let mut star = f.clone();
    for (flat, value) in star.values_mut().iter_mut().enumerate() {
        *value -= lambda * div[flat] / m.cell(flat);
    }
    let mut next = solver.solve(&star, domain)?;
    next.set_time(f.time() + dt);
    Ok(next)
}

/// Initial data presets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialPreset {
    /// The constant `level` (a steady state under conservative walls).
    Equilibrium { level: f64 },
    /// `1 + a cos(pi x)`, velocity independent.
    CosineDensity { amplitude: f64 },
    /// `exp(-((x - center)/width)^2)`, velocity independent.
    Bump { center: f64, width: f64 },
    /// `1 + a v cos(pi x)`: carries a velocity flux at time zero, so it is
    /// not prepared for the diffusive regime.
    ShiftedVelocity { amplitude: f64 },
}

impl InitialPreset {
    pub fn build(&self, domain: &Domain) -> Result<DistributionField> {
        let f = match *self {
            InitialPreset::Equilibrium { level } => {
                if !level.is_finite() {
                    return Err(CoreError::config("equilibrium level must be finite"));
                }
                DistributionField::constant(domain, level)
            }
            InitialPreset::CosineDensity { amplitude } => {
                if !(amplitude.is_finite() && amplitude.abs() < 1.0) {
                    return Err(CoreError::config(
                        "cosine amplitude must satisfy |a| < 1 to keep the data positive",
                    ));
                }
                DistributionField::from_fn(domain, |x, _| {
                    1.0 + amplitude * libm::cos(core::f64::consts::PI * x)
                })
            }
            InitialPreset::Bump { center, width } => {
                if !(center.is_finite() && width.is_finite() && width > 0.0) {
                    return Err(CoreError::config(
                        "bump needs a finite center and width > 0",
                    ));
                }
                DistributionField::from_fn(domain, |x, _| {
                    let r = (x - center) / width;
                    libm::exp(-r * r)
                })
            }
            InitialPreset::ShiftedVelocity { amplitude } => {
                if !amplitude.is_finite() {
                    return Err(CoreError::config("velocity-shift amplitude must be finite"));
                }
                DistributionField::from_fn(domain, |x, v| {
                    1.0 + amplitude * v * libm::cos(core::f64::consts::PI * x)
                })
            }
        };
        Ok(f)
    }

    /// Whether the data is velocity independent (no initial kinetic layer).
    pub fn well_prepared(&self) -> bool {
        !matches!(self, InitialPreset::ShiftedVelocity { .. })
    }
}

/// Full description of one kinetic run.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub eps: f64,
    pub kind: CollisionKind,
    pub boundary: BoundaryConfig,
    pub theta: f64,
    pub t_final: f64,
    pub initial: InitialPreset,
    /// Diagnostics cadence: record every this many steps (plus the final
    /// step).
    pub record_every: usize,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps.is_finite() && self.eps > 0.0 && self.eps <= 1.0) {
            return Err(CoreError::config("eps must lie in (0, 1]"));
        }
        if !(self.theta.is_finite() && self.theta > 0.0 && self.theta < 1.0) {
            return Err(CoreError::config("CFL number theta must lie in (0, 1)"));
        }
        if !(self.t_final.is_finite() && self.t_final > 0.0) {
            return Err(CoreError::config("final time must be positive"));
        }
        if self.record_every == 0 {
            return Err(CoreError::config("record cadence must be at least 1"));
        }
        Ok(())
    }
}

/// Output of a completed run.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub records: Vec<DiagnosticsRecord>,
    /// `(t, f(t))` at the step times nearest the requested sample times.
    pub samples: Vec<(f64, DistributionField)>,
    pub final_field: DistributionField,
    pub dt: f64,
    pub steps: usize,
    /// Cross-term weight frozen at the initial time.
    pub kappa: f64,
    /// Conserved-density offset (zero unless both walls conserve mass).
    pub m_c: f64,
    pub initial_norm_sq: f64,
}

/// Run the split scheme from `t = 0` to `t_final` with a uniform step that
/// divides the horizon exactly. Deterministic: identical inputs produce
/// bit-identical records and fields. `sample_times` must be sorted and lie
/// in `[0, t_final]`.
pub fn run_simulation(domain: &Domain, sim: &SimConfig, sample_times: &[f64]) -> Result<RunResult> {
    sim.validate()?;
    if sample_times.windows(2).any(|p| !(p[0] <= p[1])) {
        return Err(CoreError::config("sample times must be sorted ascending"));
    }
    if let (Some(&first), Some(&last)) = (sample_times.first(), sample_times.last()) {
        if first < 0.0 || last > sim.t_final * (1.0 + 1e-12) {
            return Err(CoreError::config("sample times must lie in [0, t_final]"));
        }
    }

    let dt_max = stable_dt(sim.theta, sim.eps, domain);
    let steps = libm::ceil(sim.t_final / dt_max) as usize;
    let steps = steps.max(1);
    let dt = sim.t_final / steps as f64;

    let mut f = sim.initial.build(domain)?;
    let initial_norm_sq = domain.inner_dm(f.values(), f.values());

    let aux0 = entropy_aux(&f, &sim.boundary, domain)?;
    let m_c = aux0.m_c;
    let kappa = choose_kappa(&f, &aux0, sim.eps, domain);

    let mut records = Vec::new();
    records.push(record_state(
        &f,
        &sim.boundary,
        domain,
        sim.eps,
        kappa,
        None,
    )?);

    let mut samples: Vec<(f64, DistributionField)> = Vec::new();
    let mut next_sample = 0usize;
    while next_sample < sample_times.len() && sample_times[next_sample] <= 0.5 * dt {
        samples.push((0.0, f.clone()));
        next_sample += 1;
    }

    let solver = ImplicitCollision::new(sim.kind, dt / (sim.eps * sim.eps), domain.velocity())?;

    for k in 1..=steps {
        f = step_imex(&f, dt, sim.eps, &solver, &sim.boundary, domain)?;
        let t = dt * k as f64;
        f.set_time(t);

        while next_sample < sample_times.len() && t + 0.5 * dt >= sample_times[next_sample] {
            samples.push((t, f.clone()));
            next_sample += 1;
        }

        if k % sim.record_every == 0 || k == steps {
            let record = record_state(&f, &sim.boundary, domain, sim.eps, kappa, records.last())?;
            records.push(record);
        }
    }

    Ok(RunResult {
        records,
        samples,
        final_field: f,
        dt,
        steps,
        kappa,
        m_c,
        initial_norm_sq,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{moment0, moment1};
    use crate::grids::PotentialSpec;
    use core::f64::consts::PI;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn domain(n_x: usize, n_v: usize, spec: &PotentialSpec) -> Domain {
        Domain::build(n_x, n_v, 8.0, spec).unwrap()
    }

    #[test]
    fn stable_dt_matches_the_cfl_formula() {
        let d = domain(64, 64, &PotentialSpec::Zero);
        // v_max/dx = 8 * 64 = 512 and no drift term.
        assert_eq!(stable_dt(0.5, 1.0, &d), 0.5 / 512.0);
        assert_eq!(stable_dt(0.5, 0.5, &d), 0.25 / 512.0);
        let d = domain(64, 64, &PotentialSpec::Linear { slope: 0.8 });
        let expected = 0.5 / (512.0 + d.potential().lipschitz() / d.velocity().dv());
        assert!((stable_dt(0.5, 1.0, &d) - expected).abs() <= 1e-15 * expected);
        // The slope bound itself sits within rounding of the drift value.
        assert!((d.potential().lipschitz() - 0.8).abs() <= 1e-4);
    }

    #[test]
    fn rhs_matches_streaming_derivative_for_density_waves() {
        // f = sin(2 pi x), no potential: rhs = -(1/eps) v 2 pi cos(2 pi x)
        // + O(dx), first order in dx away from the walls.
        let eps = 0.5;
        let cfg = BoundaryConfig::uniform(1.0, 0.0).unwrap();
        let mut errors = Vec::new();
        for n_x in [64usize, 128, 256] {
            let d = domain(n_x, 32, &PotentialSpec::Zero);
            let f = DistributionField::from_fn(&d, |x, _| libm::sin(2.0 * PI * x));
            let rhs = transport_rhs(&f, &cfg, eps, &d);
            let mut err_sq = 0.0;
            let mut measure = 0.0;
            for i in 2..n_x - 2 {
                let x = d.space().center(i);
                for j in 0..d.n_v() {
                    let target = -d.velocity().node(j) * 2.0 * PI * libm::cos(2.0 * PI * x) / eps;
                    let e = rhs.values()[d.idx(i, j)] - target;
                    let m = d.measure().cell(d.idx(i, j));
                    err_sq += m * e * e;
                    measure += m;
                }
            }
            errors.push(libm::sqrt(err_sq / measure));
        }
        // First-order convergence: successive refinements roughly halve it.
        assert!(errors[0] / errors[1] > 1.7, "{errors:?}");
        assert!(errors[1] / errors[2] > 1.7, "{errors:?}");
        assert!(errors[2] < 1.0, "{errors:?}");
    }

    #[test]
    fn rhs_matches_drift_derivative_for_linear_potential() {
        // f = v under phi = a x: the streaming and drift contributions sum
        // to exactly a/eps in the continuum, first order in dv here.
        let a = 0.8;
        let cfg = BoundaryConfig::uniform(1.0, 0.0).unwrap();
        let mut errors = Vec::new();
        for n_v in [32usize, 64, 128] {
            let d = domain(64, n_v, &PotentialSpec::Linear { slope: a });
            let f = DistributionField::from_fn(&d, |_, v| v);
            let rhs = transport_rhs(&f, &cfg, 1.0, &d);
            let mut err_sq = 0.0;
            let mut measure = 0.0;
            for i in 2..62 {
                for j in 0..n_v {
                    let e = rhs.values()[d.idx(i, j)] - a;
                    let m = d.measure().cell(d.idx(i, j));
                    err_sq += m * e * e;
                    measure += m;
                }
            }
            errors.push(libm::sqrt(err_sq / measure));
            if n_v == 128 {
                // Pointwise band at moderate velocities.
                for i in 2..62 {
                    for j in 0..n_v {
                        let v = d.velocity().node(j);
                        if v.abs() <= 2.0 {
                            let e = (rhs.values()[d.idx(i, j)] - a).abs();
                            assert!(e <= 0.2 * a, "cell ({i},{j}): err {e}");
                        }
                    }
                }
            }
        }
        assert!(errors[0] / errors[1] > 1.6, "{errors:?}");
        assert!(errors[1] / errors[2] > 1.6, "{errors:?}");
    }

    #[test]
    fn hydrodynamic_moment_of_rhs_is_a_flux_divergence() {
        // <rhs> must be consistent with -(1/eps)(d_x<vf> - phi'<vf>): check
        // first-order convergence of the residual against a centered oracle.
        let cfg = BoundaryConfig::uniform(1.0, 0.0).unwrap();
        let spec = PotentialSpec::Cosine { amplitude: 0.3 };
        let mut residuals = Vec::new();
        for n_x in [64usize, 128] {
            let d = domain(n_x, 64, &spec);
            let f = DistributionField::from_fn(&d, |x, v| {
                (1.0 + 0.3 * libm::cos(2.0 * PI * x)) * (1.0 + 0.2 * v)
            });
            let rhs = transport_rhs(&f, &cfg, 1.0, &d);
            let mean_rhs = moment0(&rhs, &d);
            let q = moment1(&f, &d);
            let dx = d.space().dx();
            let mut sq = 0.0;
            for i in 2..n_x - 2 {
                let dq = (q.values()[i + 1] - q.values()[i - 1]) / (2.0 * dx);
                let r = mean_rhs.values()[i] + dq - d.potential().drift(i) * q.values()[i];
                sq += dx * r * r;
            }
            residuals.push(libm::sqrt(sq));
        }
        assert!(residuals[0] / residuals[1] > 1.5, "{residuals:?}");
    }

    #[test]
    fn constants_are_stationary_whenever_walls_recycle_all_mass() {
        let d = domain(48, 48, &PotentialSpec::Cosine { amplitude: 0.5 });
        let c = 2.0;
        let f = DistributionField::constant(&d, c);
        let rate =
            d.velocity().v_max() / d.space().dx() + d.potential().lipschitz() / d.velocity().dv();
        for (alpha, beta) in [(1.0, 0.0), (0.0, 1.0), (0.5, 0.5)] {
            let cfg = BoundaryConfig::uniform(alpha, beta).unwrap();
            let rhs = transport_rhs(&f, &cfg, 1.0, &d);
            let drift = d.norm_dm(rhs.values());
            assert!(
                drift <= 1e-12 * c * rate,
                "({alpha},{beta}): residual {drift:e}"
            );
        }
    }

    #[test]
    fn equilibrium_stays_fixed_over_a_long_run() {
        let d = domain(64, 64, &PotentialSpec::Cosine { amplitude: 0.5 });
        let sim = SimConfig {
            eps: 1.0,
            kind: CollisionKind::Bgk,
            boundary: BoundaryConfig::uniform(1.0, 0.0).unwrap(),
            theta: 0.5,
            t_final: 5.0,
            initial: InitialPreset::Equilibrium { level: 1.5 },
            record_every: 200,
        };
        let res = run_simulation(&d, &sim, &[]).unwrap();
        assert!((res.m_c - 1.5).abs() <= 1e-12);
        for r in &res.records {
            assert!(
                r.norm_f_minus_mc <= 1e-12 * 1.5,
                "t = {}: deviation {:e}",
                r.t,
                r.norm_f_minus_mc
            );
        }
    }

    #[test]
    fn split_step_never_expands_the_weighted_norm() {
        let d = domain(32, 32, &PotentialSpec::Cosine { amplitude: 0.5 });
        let mut rng = ChaCha8Rng::seed_from_u64(0x1d5);
        for kind in [CollisionKind::Bgk, CollisionKind::FokkerPlanck] {
            for (alpha, beta) in [(1.0, 0.0), (0.5, 0.5), (0.0, 0.0), (0.3, 0.3)] {
                let cfg = BoundaryConfig::uniform(alpha, beta).unwrap();
                let eps = 0.5;
                let dt = stable_dt(0.5, eps, &d);
                let solver = ImplicitCollision::new(kind, dt / (eps * eps), d.velocity()).unwrap();
                let mut f = DistributionField::from_values(
                    &d,
                    (0..d.n_x() * d.n_v())
                        .map(|_| rng.gen_range(-1.0..2.0))
                        .collect(),
                    0.0,
                )
                .unwrap();
                let mut prev = d.norm_dm(f.values());
                for _ in 0..50 {
                    f = step_imex(&f, dt, eps, &solver, &cfg, &d).unwrap();
                    let now = d.norm_dm(f.values());
                    assert!(
                        now <= prev * (1.0 + 1e-12),
                        "{kind:?} ({alpha},{beta}): {prev} -> {now}"
                    );
                    prev = now;
                }
            }
        }
    }

    #[test]
    fn mass_is_conserved_exactly_when_wall_laws_sum_to_one() {
        let d = domain(48, 48, &PotentialSpec::Cosine { amplitude: 0.5 });
        for (alpha, beta) in [(1.0, 0.0), (0.7, 0.3), (0.0, 1.0)] {
            let sim = SimConfig {
                eps: 0.5,
                kind: CollisionKind::FokkerPlanck,
                boundary: BoundaryConfig::uniform(alpha, beta).unwrap(),
                theta: 0.5,
                t_final: 0.25,
                initial: InitialPreset::CosineDensity { amplitude: 0.5 },
                record_every: 50,
            };
            let res = run_simulation(&d, &sim, &[]).unwrap();
            let m0 = res.records[0].mass;
            for r in &res.records {
                assert!(
                    (r.mass - m0).abs() <= 1e-12 * m0.abs(),
                    "({alpha},{beta}) t = {}: {} vs {}",
                    r.t,
                    r.mass,
                    m0
                );
            }
        }
    }

    #[test]
    fn absorbing_walls_drain_mass_monotonically() {
        let d = domain(48, 48, &PotentialSpec::Zero);
        let sim = SimConfig {
            eps: 1.0,
            kind: CollisionKind::Bgk,
            boundary: BoundaryConfig::uniform(0.0, 0.0).unwrap(),
            theta: 0.5,
            t_final: 1.0,
            initial: InitialPreset::CosineDensity { amplitude: 0.5 },
            record_every: 100,
        };
        let res = run_simulation(&d, &sim, &[]).unwrap();
        let masses: Vec<f64> = res.records.iter().map(|r| r.mass).collect();
        for pair in masses.windows(2) {
            assert!(pair[1] < pair[0], "{masses:?}");
        }
        assert!(
            masses.last().unwrap() < &(0.7 * masses[0]),
            "outflow too weak: {masses:?}"
        );
    }

    #[test]
    fn runs_are_deterministic_and_land_on_the_final_time() {
        let d = domain(32, 32, &PotentialSpec::Cosine { amplitude: 0.3 });
        let sim = SimConfig {
            eps: 0.25,
            kind: CollisionKind::Bgk,
            boundary: BoundaryConfig::uniform(0.5, 0.5).unwrap(),
            theta: 0.5,
            t_final: 0.5,
            initial: InitialPreset::ShiftedVelocity { amplitude: 0.3 },
            record_every: 64,
        };
        let a = run_simulation(&d, &sim, &[0.0, 0.25, 0.5]).unwrap();
        let b = run_simulation(&d, &sim, &[0.0, 0.25, 0.5]).unwrap();
        assert_eq!(a.records, b.records);
        assert_eq!(a.final_field.values(), b.final_field.values());

        assert!((a.final_field.time() - 0.5).abs() <= 1e-12);
        assert_eq!(a.samples.len(), 3);
        assert_eq!(a.samples[0].0, 0.0);
        assert_eq!(
            a.samples[0].1.values(),
            sim.initial.build(&d).unwrap().values()
        );
        for (&target, (t, _)) in [0.0, 0.25, 0.5].iter().zip(&a.samples) {
            assert!((t - target).abs() <= 0.5 * a.dt + 1e-15);
        }
        assert!(a.dt <= stable_dt(0.5, 0.25, &d));
        assert!((a.dt * a.steps as f64 - 0.5).abs() <= 1e-14);
    }

    #[test]
    fn perturbations_decay_toward_the_conserved_state() {
        let d = domain(32, 32, &PotentialSpec::Zero);
        let sim = SimConfig {
            eps: 1.0,
            kind: CollisionKind::Bgk,
            boundary: BoundaryConfig::uniform(1.0, 0.0).unwrap(),
            theta: 0.5,
            t_final: 3.0,
            initial: InitialPreset::CosineDensity { amplitude: 0.5 },
            record_every: 60,
        };
        let res = run_simulation(&d, &sim, &[]).unwrap();
        let first = res.records.first().unwrap().norm_f_minus_mc;
        let last = res.records.last().unwrap().norm_f_minus_mc;
        assert!((res.m_c - 1.0).abs() <= 1e-10);
        assert!(last < 0.1 * first, "{first} -> {last}");
        // Entropy is within the equivalence band and non-increasing.
        for r in &res.records {
            let base = r.norm_f_minus_mc * r.norm_f_minus_mc;
            assert!(r.entropy_e >= 0.5 * base && r.entropy_e <= 1.5 * base);
        }
        for pair in res.records.windows(2) {
            assert!(pair[1].entropy_e <= pair[0].entropy_e * (1.0 + 1e-9));
        }
    }

    #[test]
    fn invalid_configurations_are_rejected() {
        let d = domain(16, 16, &PotentialSpec::Zero);
        let mut sim = SimConfig {
            eps: 1.0,
            kind: CollisionKind::Bgk,
            boundary: BoundaryConfig::uniform(1.0, 0.0).unwrap(),
            theta: 0.5,
            t_final: 1.0,
            initial: InitialPreset::Equilibrium { level: 1.0 },
            record_every: 1,
        };
        sim.eps = 0.0;
        assert!(run_simulation(&d, &sim, &[]).is_err());
        sim.eps = 2.0;
        assert!(run_simulation(&d, &sim, &[]).is_err());
        sim.eps = 1.0;
        sim.theta = 1.0;
        assert!(run_simulation(&d, &sim, &[]).is_err());
        sim.theta = 0.5;
        sim.record_every = 0;
        assert!(run_simulation(&d, &sim, &[]).is_err());
        sim.record_every = 1;
        assert!(run_simulation(&d, &sim, &[0.5, 0.2]).is_err());
        assert!(run_simulation(&d, &sim, &[0.5, 2.0]).is_err());
        assert!(InitialPreset::CosineDensity { amplitude: 1.5 }
            .build(&d)
            .is_err());
        assert!(InitialPreset::Bump {
            center: 0.5,
            width: 0.0
        }
        .build(&d)
        .is_err());
    }
}
