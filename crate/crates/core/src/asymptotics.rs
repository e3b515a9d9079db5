//! The diffusive limit: a drift-diffusion solver for the macroscopic
//! density, the initial-layer corrector, and the gap metrics that compare a
//! kinetic run against its limit profile.
//!
//! The limit density solves the weighted heat equation
//! `d_t rho = e^{phi} d_x ( e^{-phi} d_x rho )` with no-flux walls,
//! discretized in flux form on the same mesh (conductances
//! `e^{-phi(face)}/dx`, masses `e^{-phi(center)} dx`) and advanced by a
//! Crank–Nicolson step kept at or below `dx^2/2` so the update matrix stays
//! nonnegative: mass is conserved exactly and the discrete max principle
//! holds.
//!
//! The layer corrector solves the fast relaxation `d_t psi = eps^{-2} L psi`
//! for the mean-free part of the initial data: exactly (a scalar
//! exponential) for the relaxation operator, by damped implicit substeps of
//! size `eps^2/1000` for the diffusion operator. Past the layer timescale
//! `t_layer = eps^2 |log sqrt(eps)|` the corrector is negligible and the
//! kinetic solution should track `rho` directly.

use alloc::vec;
use alloc::vec::Vec;

use crate::collision::{CollisionKind, ImplicitCollision};
use crate::error::{CoreError, Result};
use crate::fields::{moment0, perp, DistributionField, MacroField};
use crate::grids::Domain;
use crate::transport::{run_simulation, RunResult, SimConfig};
use crate::tridiag::Tridiagonal;

/// Layer timescale `eps^2 |log sqrt(eps)|`.
pub fn layer_time(eps: f64) -> f64 {
    eps * eps * libm::fabs(libm::log(libm::sqrt(eps)))
}

fn check_times(times: &[f64], label: &str) -> Result<()> {
    if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(CoreError::config(format!(
            "{label} times must be finite and non-negative"
        )));
    }
    if times.windows(2).any(|p| p[0] > p[1]) {
        return Err(CoreError::config(format!(
            "{label} times must be sorted ascending"
        )));
    }
    Ok(())
}

use alloc::format;

/// Drift-diffusion solve sampled at the given times (which must be sorted).
/// Returns one density per sample time.
pub fn solve_parabolic(
    rho0: &MacroField,
    sample_times: &[f64],
    domain: &Domain,
) -> Result<Vec<MacroField>> {
    check_times(sample_times, "parabolic sample")?;
    if sample_times.is_empty() {
        return Ok(Vec::new());
    }
    let n_x = domain.n_x();
    if rho0.values().len() != n_x {
        return Err(CoreError::config("density length does not match the mesh"));
    }
    let dx = domain.space().dx();
    let pot = domain.potential();

    // No-flux conductances and masses of the flux-form operator.
    let cond: Vec<f64> = (0..=n_x)
        .map(|k| {
            if k == 0 || k == n_x {
                0.0
            } else {
                pot.exp_neg_face(k) / dx
            }
        })
        .collect();
    let mass: Vec<f64> = (0..n_x).map(|i| pot.exp_neg_center(i) * dx).collect();
    let h_max = 0.5 * dx * dx;

    let mut rho: Vec<f64> = rho0.values().to_vec();
    let mut out = Vec::with_capacity(sample_times.len());
    let mut t = 0.0;

    let mut cached_h = f64::NAN;
    let mut factor = None;
    let mut rhs = vec![0.0; n_x];

    for &target in sample_times {
        let gap = target - t;
        if gap > 0.0 {
            let n_steps = libm::ceil(gap / h_max).max(1.0) as usize;
            let h = gap / n_steps as f64;
            if h != cached_h {
                let mut matrix = Tridiagonal::zeros(n_x);
                for i in 0..n_x {
                    matrix.diag[i] = mass[i] + 0.5 * h * (cond[i] + cond[i + 1]);
                    if i > 0 {
                        matrix.sub[i] = -0.5 * h * cond[i];
                    }
                    if i + 1 < n_x {
                        matrix.sup[i] = -0.5 * h * cond[i + 1];
                    }
                }
                factor = Some(matrix.factor()?);
                cached_h = h;
            }
            let fac = factor.as_ref().expect("factor built above");
            for _ in 0..n_steps {
                for i in 0..n_x {
                    let mut flux = 0.0;
                    if i > 0 {
                        flux += cond[i] * (rho[i] - rho[i - 1]);
                    }
                    if i + 1 < n_x {
                        flux += cond[i + 1] * (rho[i] - rho[i + 1]);
                    }
                    rhs[i] = mass[i] * rho[i] - 0.5 * h * flux;
                }
                rho.copy_from_slice(&rhs);
                fac.solve_in_place(&mut rho);
            }
            t = target;
        }
        out.push(MacroField::from_values(domain, rho.clone())?);
    }
    Ok(out)
}

/// Solve the fast relaxation of the mean-free part of `psi0`, sampled at the
/// given times. The relaxation operator is integrated exactly; the diffusion
/// operator by implicit substeps of `eps^2/1000`. Fields whose mean-free
/// part has decayed below `1e-16` of its initial size are returned as zero.
pub fn solve_layer(
    kind: CollisionKind,
    psi0: &DistributionField,
    eps: f64,
    times: &[f64],
    domain: &Domain,
) -> Result<Vec<DistributionField>> {
    check_times(times, "layer sample")?;
    if !(eps.is_finite() && eps > 0.0) {
        return Err(CoreError::config("eps must be positive"));
    }
    let mut psi = perp(psi0, domain);
    psi.set_time(0.0);
    let initial_norm = domain.norm_dm(psi.values());
    let floor = 1e-16 * initial_norm;

    let mut out = Vec::with_capacity(times.len());
    // A mean-free part at rounding level relative to the data itself is the
    // zero corrector (well-prepared input), not a signal to integrate.
    if initial_norm <= 1e-14 * domain.norm_dm(psi0.values()) {
        for &t in times {
            let mut z = DistributionField::zeros(domain);
            z.set_time(t);
            out.push(z);
        }
        return Ok(out);
    }

    match kind {
        CollisionKind::Bgk => {
            for &t in times {
                let scale = libm::exp(-t / (eps * eps));
                let mut state = psi.clone();
                for v in state.values_mut() {
                    *v *= scale;
                }
                state.set_time(t);
                out.push(state);
            }
        }
        CollisionKind::FokkerPlanck => {
            let h_nom = eps * eps / 1000.0;
            let mut t = 0.0;
            let mut dead = false;
            let mut cached_h = f64::NAN;
            let mut solver: Option<ImplicitCollision> = None;
            for &target in times {
                while !dead && target - t > 1e-12 * eps * eps {
                    let h = h_nom.min(target - t);
                    if h != cached_h {
                        solver = Some(ImplicitCollision::new(
                            CollisionKind::FokkerPlanck,
                            h / (eps * eps),
                            domain.velocity(),
                        )?);
                        cached_h = h;
                    }
                    psi = solver
                        .as_ref()
                        .expect("solver built above")
                        .solve(&psi, domain)?;
                    t += h;
                    if domain.norm_dm(psi.values()) <= floor {
                        dead = true;
                    }
                }
                let mut state = if dead {
                    DistributionField::zeros(domain)
                } else {
                    perp(&psi, domain)
                };
                state.set_time(target);
                out.push(state);
            }
        }
    }
    Ok(out)
}

/// Norm with the heavier velocity weight `1 + |v|`, used to monitor the
/// layer decay.
pub fn layer_norm(psi: &DistributionField, domain: &Domain) -> f64 {
    let g = domain.velocity();
    let n_v = g.len();
    let mut acc = 0.0;
    for i in 0..domain.n_x() {
        for j in 0..n_v {
            let flat = i * n_v + j;
            let w = 1.0 + libm::fabs(g.node(j));
            acc += domain.measure().cell(flat) * w * psi.values()[flat] * psi.values()[flat];
        }
    }
    libm::sqrt(acc)
}

/// Distances between a kinetic trajectory and its diffusion profile.
#[derive(Debug, Clone)]
pub struct GapMetrics {
    /// `sqrt( int_0^T ||f - rho||^2 dt )` by the trapezoid rule.
    pub l2_time: f64,
    /// `sup ||f(t) - rho(t)||` over samples with `t >= t_layer`.
    pub sup_after_layer: f64,
    /// `sup ||f(t) - rho(t) - psi(t)||` over all samples.
    pub sup_with_layer: f64,
    /// The layer timescale used for the split.
    pub t_layer: f64,
    /// `(t, ||f - rho||)` per sample.
    pub series: Vec<(f64, f64)>,
}

/// Compare kinetic samples with aligned diffusion states and layer
/// correctors. All three slices must be sampled at identical times.
pub fn diffusion_gap(
    kinetic: &[(f64, DistributionField)],
    limit: &[MacroField],
    layer: &[DistributionField],
    eps: f64,
    domain: &Domain,
) -> Result<GapMetrics> {
    if kinetic.len() != limit.len() || kinetic.len() != layer.len() {
        return Err(CoreError::config(
            "kinetic, limit, and layer samples must be aligned",
        ));
    }
    if kinetic.is_empty() {
        return Err(CoreError::config("gap metrics need at least one sample"));
    }
    let n_v = domain.n_v();
    let t_layer = layer_time(eps);

    let mut series = Vec::with_capacity(kinetic.len());
    let mut sup_after_layer: f64 = 0.0;
    let mut sup_with_layer: f64 = 0.0;
    let mut scratch = vec![0.0; domain.n_x() * n_v];

    for ((t, f), (rho, psi)) in kinetic.iter().zip(limit.iter().zip(layer)) {
        for i in 0..domain.n_x() {
            let r = rho.values()[i];
            for j in 0..n_v {
                let flat = i * n_v + j;
                scratch[flat] = f.values()[flat] - r;
            }
        }
        let d = domain.norm_dm(&scratch);
        series.push((*t, d));
        if *t >= t_layer {
            sup_after_layer = sup_after_layer.max(d);
        }
        for (s, p) in scratch.iter_mut().zip(psi.values()) {
            *s -= p;
        }
        sup_with_layer = sup_with_layer.max(domain.norm_dm(&scratch));
    }

    let mut l2_sq = 0.0;
    for pair in series.windows(2) {
        l2_sq += 0.5 * (pair[1].0 - pair[0].0) * (pair[0].1 * pair[0].1 + pair[1].1 * pair[1].1);
    }

    Ok(GapMetrics {
        l2_time: libm::sqrt(l2_sq),
        sup_after_layer,
        sup_with_layer,
        t_layer,
        series,
    })
}

/// Outcome of one kinetic-versus-diffusion comparison.
#[derive(Debug, Clone)]
pub struct DiffusionComparison {
    pub gap: GapMetrics,
    pub kinetic: RunResult,
}

/// Run the kinetic scheme, its diffusion limit from the same initial
/// density, and the layer corrector, all sampled on `n_samples + 1` evenly
/// spread times, and measure the gaps.
pub fn compare_with_diffusion(
    domain: &Domain,
    sim: &SimConfig,
    n_samples: usize,
) -> Result<DiffusionComparison> {
    if n_samples < 2 {
        return Err(CoreError::config("comparison needs at least 2 samples"));
    }
    let targets: Vec<f64> = (0..=n_samples)
        .map(|k| sim.t_final * k as f64 / n_samples as f64)
        .collect();
    let kinetic = run_simulation(domain, sim, &targets)?;

    // The runner lands samples on step times; align the limit solves on the
    // times actually hit.
    let times: Vec<f64> = kinetic.samples.iter().map(|(t, _)| *t).collect();
    let f_in = sim.initial.build(domain)?;
    let rho0 = moment0(&f_in, domain);
    let limit = solve_parabolic(&rho0, &times, domain)?;
    let layer = solve_layer(sim.kind, &f_in, sim.eps, &times, domain)?;

    let gap = diffusion_gap(&kinetic.samples, &limit, &layer, sim.eps, domain)?;
    Ok(DiffusionComparison { gap, kinetic })
}
