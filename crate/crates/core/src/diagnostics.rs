//! Instrumentation: per-time norm records, the Lyapunov functional with its
//! transport cross term, the energy-ledger inequality, and exponential-rate
//! fitting.
//!
//! The record layout mirrors the CSV schema used by the command-line tools:
//! one row per sample with columns `t, norm_f_minus_Mc, norm_fperp, mass,
//! boundary_dissipation, A_quantity, entropy_E, int_fperp2, int_boundary`,
//! serialized with 17 significant digits so rows round-trip bit-exactly.
//!
//! The modified functional is
//!
//! ```text
//!     E = ||f - M_c||^2 + kappa eps (v d_x u, f_perp)
//! ```
//!
//! with `u` the auxiliary Robin solution for the centered density. The
//! weight `kappa` is frozen at the start of a run by an explicit smallness
//! rule (`kappa <= 0.1` and the cross term at most half the quadratic term),
//! which forces `E` to stay within `[1/2, 3/2]` of `||f - M_c||^2` along the
//! whole trajectory — the equivalence regime in which decay of `E` and decay
//! of the norm are interchangeable.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::boundary::{boundary_dissipation, BoundaryConfig, WallTrace};
use crate::elliptic::{entropy_aux, EntropyAux};
use crate::error::{CoreError, Result};
use crate::fields::{moment1, perp, DistributionField};
use crate::grids::Domain;

/// Column order of the time-series schema.
pub const CSV_HEADER: &str = "t,norm_f_minus_Mc,norm_fperp,mass,boundary_dissipation,A_quantity,entropy_E,int_fperp2,int_boundary";

/// One time sample of every monitored functional.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub norm_f_minus_mc: f64,
    pub norm_fperp: f64,
    pub mass: f64,
    pub boundary_dissipation: f64,
    pub a_quantity: f64,
    pub entropy_e: f64,
    /// Cumulative trapezoid of `||f_perp||^2` over the recorded samples.
    pub int_fperp2: f64,
    /// Cumulative trapezoid of the boundary dissipation.
    pub int_boundary: f64,
}

impl DiagnosticsRecord {
    /// Serialize with 17 significant digits per value.
    pub fn to_csv_row(&self) -> String {
        format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            self.t,
            self.norm_f_minus_mc,
            self.norm_fperp,
            self.mass,
            self.boundary_dissipation,
            self.a_quantity,
            self.entropy_e,
            self.int_fperp2,
            self.int_boundary
        )
    }

    pub fn from_csv_row(row: &str) -> Result<Self> {
        let cols: Vec<&str> = row.trim().split(',').collect();
        if cols.len() != 9 {
            return Err(CoreError::config(format!(
                "record row must have 9 columns, got {}",
                cols.len()
            )));
        }
        let mut vals = [0.0f64; 9];
        for (slot, col) in vals.iter_mut().zip(&cols) {
            *slot = col
                .trim()
                .parse()
                .map_err(|_| CoreError::config("record row holds a malformed number"))?;
        }
        Ok(DiagnosticsRecord {
            t: vals[0],
            norm_f_minus_mc: vals[1],
            norm_fperp: vals[2],
            mass: vals[3],
            boundary_dissipation: vals[4],
            a_quantity: vals[5],
            entropy_e: vals[6],
            int_fperp2: vals[7],
            int_boundary: vals[8],
        })
    }
}

/// The transport cross term `(v d_x u, f_perp)` with the gradient of the
/// auxiliary solution averaged onto cell centers. Reduces exactly to the
/// spatial inner product of that averaged gradient with the flux moment.
pub fn entropy_cross_term(f: &DistributionField, aux: &EntropyAux, domain: &Domain) -> f64 {
    let grad = aux.solution.grad_faces();
    let centered: Vec<f64> = (0..domain.n_x())
        .map(|i| 0.5 * (grad[i] + grad[i + 1]))
        .collect();
    let flux = moment1(f, domain);
    domain.inner_x(&centered, flux.values())
}

/// Smallness rule for the cross-term weight, evaluated once at the start of
/// a run: at most 0.1, and small enough that `|kappa eps cross|` is at most
/// half of `||f - M_c||^2`.
pub fn choose_kappa(f: &DistributionField, aux: &EntropyAux, eps: f64, domain: &Domain) -> f64 {
    let centered_sq = centered_norm_sq(f, aux.m_c, domain);
    let cross = entropy_cross_term(f, aux, domain);
    let cap = centered_sq / (2.0 * eps * libm::fabs(cross) + f64::MIN_POSITIVE);
    cap.min(0.1)
}

/// `||f - M_c||^2`.
pub fn centered_norm_sq(f: &DistributionField, m_c: f64, domain: &Domain) -> f64 {
    let mut shifted = f.clone();
    for v in shifted.values_mut() {
        *v -= m_c;
    }
    domain.inner_dm(shifted.values(), shifted.values())
}

/// `E = ||f - M_c||^2 + kappa eps (v d_x u, f_perp)`.
pub fn modified_entropy(
    f: &DistributionField,
    aux: &EntropyAux,
    kappa: f64,
    eps: f64,
    domain: &Domain,
) -> f64 {
    centered_norm_sq(f, aux.m_c, domain) + kappa * eps * entropy_cross_term(f, aux, domain)
}

/// Assemble one record. `prev` carries the cumulative integrals forward by
/// the trapezoid rule; pass `None` at the initial time.
pub fn record_state(
    f: &DistributionField,
    cfg: &BoundaryConfig,
    domain: &Domain,
    eps: f64,
    kappa: f64,
    prev: Option<&DiagnosticsRecord>,
) -> Result<DiagnosticsRecord> {
    f.check_finite()?;
    let aux = entropy_aux(f, cfg, domain)?;
    let p = perp(f, domain);
    let fperp_sq = domain.inner_dm(p.values(), p.values());

    let mut trace = WallTrace::from_field(f, domain);
    trace.close_incoming(cfg, domain.velocity());
    let dissipation = boundary_dissipation(&trace, domain);

    let centered_sq = centered_norm_sq(f, aux.m_c, domain);
    let entropy_e = centered_sq + kappa * eps * entropy_cross_term(f, &aux, domain);

    let t = f.time();
    let (int_fperp2, int_boundary) = match prev {
        None => (0.0, 0.0),
        Some(p0) => {
            let h = t - p0.t;
            let prev_fperp_sq = p0.norm_fperp * p0.norm_fperp;
            (
                p0.int_fperp2 + 0.5 * h * (prev_fperp_sq + fperp_sq),
                p0.int_boundary + 0.5 * h * (p0.boundary_dissipation + dissipation),
            )
        }
    };

    Ok(DiagnosticsRecord {
        t,
        norm_f_minus_mc: libm::sqrt(centered_sq.max(0.0)),
        norm_fperp: libm::sqrt(fperp_sq.max(0.0)),
        mass: domain.integral_dm(f.values()),
        boundary_dissipation: dissipation,
        a_quantity: aux.a_quantity,
        entropy_e,
        int_fperp2,
        int_boundary,
    })
}

/// Result of a log-linear least-squares fit `value ~ C value(0) e^{-lambda t}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    /// Decay rate (minus the fitted slope of `log value`).
    pub lambda: f64,
    /// `exp(intercept) / value(0)`: amplitude relative to the first sample.
    pub prefactor: f64,
    /// The window actually used (may be shorter than requested).
    pub window: (f64, f64),
    pub r_squared: f64,
    /// Number of samples in the fit.
    pub samples: usize,
    /// True when non-positive or rounding-floor values forced the window to
    /// end early.
    pub window_shrunk: bool,
}

/// Default fit window: skip the initial transient (the larger of the layer
/// timescale `10 eps^2` and a tenth of the horizon, but never more than half
/// of it) and fit up to the final time.
pub fn default_fit_window(eps: f64, t_final: f64) -> (f64, f64) {
    let start = (10.0 * eps * eps).max(0.1 * t_final).min(0.5 * t_final);
    (start, t_final)
}

/// Fit an exponential rate on a positive series by least squares on
/// `log value`. Needs at least 10 usable samples inside the window; values
/// at or below `1e-12` of the series' first value are treated as rounding
/// floor and shrink the window.
pub fn fit_decay_rate(series: &[(f64, f64)], window: (f64, f64)) -> Result<RateFit> {
    if window.0 >= window.1 {
        return Err(CoreError::config("rate-fit window must satisfy t0 < t1"));
    }
    let reference = series
        .first()
        .ok_or_else(|| CoreError::config("rate fit on an empty series"))?
        .1;
    let floor = 1e-12 * libm::fabs(reference);

    let raw: Vec<(f64, f64)> = series
        .iter()
        .copied()
        .filter(|&(t, _)| t >= window.0 && t <= window.1)
        .collect();
    if raw.len() < 10 {
        return Err(CoreError::numerical(format!(
            "rate fit needs at least 10 usable samples, found {}",
            raw.len()
        )));
    }

    // Constant-series branch (checked before the positivity floor so that an
    // exactly stationary series — including the all-zero one — reports a
    // zero rate instead of failing): no decay to fit.
    let vmax = raw.iter().fold(f64::MIN, |m, p| m.max(p.1));
    let vmin = raw.iter().fold(f64::MAX, |m, p| m.min(p.1));
    if vmax - vmin <= 1e-12 * libm::fabs(vmax) {
        return Ok(RateFit {
            lambda: 0.0,
            prefactor: 1.0,
            window: (raw[0].0, raw[raw.len() - 1].0),
            r_squared: 1.0,
            samples: raw.len(),
            window_shrunk: false,
        });
    }

    let mut pts: Vec<(f64, f64)> = Vec::new();
    let mut window_shrunk = false;
    for &(t, v) in &raw {
        if !(v > floor) {
            // Decayed to the floor: ignore the tail and report the shrink.
            window_shrunk = true;
            break;
        }
        pts.push((t, v));
    }
    if pts.len() < 10 {
        return Err(CoreError::numerical(format!(
            "rate fit needs at least 10 usable samples, found {}",
            pts.len()
        )));
    }
    let used_window = (pts[0].0, pts[pts.len() - 1].0);

    let n = pts.len() as f64;
    let mut st = 0.0;
    let mut sy = 0.0;
    for &(t, v) in &pts {
        st += t;
        sy += libm::log(v);
    }
    let (tbar, ybar) = (st / n, sy / n);
    let mut stt = 0.0;
    let mut sty = 0.0;
    for &(t, v) in &pts {
        let dt = t - tbar;
        stt += dt * dt;
        sty += dt * (libm::log(v) - ybar);
    }
    let slope = sty / stt;
    let intercept = ybar - slope * tbar;

    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for &(t, v) in &pts {
        let y = libm::log(v);
        let fitted = intercept + slope * t;
        ss_res += (y - fitted) * (y - fitted);
        ss_tot += (y - ybar) * (y - ybar);
    }
    let r_squared = if ss_tot > 0.0 {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    } else {
        1.0
    };

    Ok(RateFit {
        lambda: -slope,
        prefactor: libm::exp(intercept) / reference,
        window: used_window,
        r_squared,
        samples: pts.len(),
        window_shrunk,
    })
}

/// The time-integrated energy inequality
/// `||f(T)||^2 + (2/eps^2) int ||f_perp||^2 + (1/eps) int (f^2, n.v)_b
///  <= ||f_in||^2 (1 + tol)`, reconstructed from a record series.
#[derive(Debug, Clone, Copy)]
pub struct LedgerReport {
    pub lhs: f64,
    pub initial_norm_sq: f64,
    /// `initial - lhs` (non-negative when the inequality holds strictly).
    pub slack: f64,
    pub holds: bool,
    /// Relative change of the integrals under cadence halving; the ledger is
    /// only trusted when this is below `1e-3`.
    pub trapezoid_defect: f64,
    pub reliable: bool,
}

/// Recover `||f||^2` from a record: the centered norm plus the mass terms,
/// `||f||^2 = ||f - M_c||^2 + 2 M_c mass - M_c^2 total`.
pub fn full_norm_sq(record: &DiagnosticsRecord, m_c: f64, total_measure: f64) -> f64 {
    record.norm_f_minus_mc * record.norm_f_minus_mc + 2.0 * m_c * record.mass
        - m_c * m_c * total_measure
}

fn trapezoid(samples: &[(f64, f64)]) -> f64 {
    let mut acc = 0.0;
    for pair in samples.windows(2) {
        acc += 0.5 * (pair[1].0 - pair[0].0) * (pair[0].1 + pair[1].1);
    }
    acc
}

fn subsample_half(samples: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = samples.iter().copied().step_by(2).collect();
    if let (Some(last_full), Some(last_half)) = (samples.last(), out.last()) {
        if last_half.0 != last_full.0 {
            out.push(*last_full);
        }
    }
    out
}

/// Evaluate the ledger over a completed record series.
pub fn dissipation_ledger(
    records: &[DiagnosticsRecord],
    eps: f64,
    m_c: f64,
    total_measure: f64,
    tolerance: f64,
) -> Result<LedgerReport> {
    if records.len() < 3 {
        return Err(CoreError::config(
            "ledger needs at least 3 records to verify its quadrature",
        ));
    }
    let first = &records[0];
    let last = &records[records.len() - 1];
    let initial_norm_sq = full_norm_sq(first, m_c, total_measure);
    let final_norm_sq = full_norm_sq(last, m_c, total_measure);

    let lhs = final_norm_sq + (2.0 / (eps * eps)) * last.int_fperp2 + last.int_boundary / eps;
    let slack = initial_norm_sq - lhs;
    let holds = lhs <= initial_norm_sq * (1.0 + tolerance);

    // Cadence-halving estimate of the quadrature error, on the weighted sum
    // of both integrands (the combination that enters the ledger).
    let combined: Vec<(f64, f64)> = records
        .iter()
        .map(|r| {
            (
                r.t,
                (2.0 / (eps * eps)) * r.norm_fperp * r.norm_fperp + r.boundary_dissipation / eps,
            )
        })
        .collect();
    let full = trapezoid(&combined);
    let half = trapezoid(&subsample_half(&combined));
    let trapezoid_defect = libm::fabs(full - half) / libm::fabs(full).max(f64::MIN_POSITIVE);
    let reliable = trapezoid_defect <= 1e-3;

    Ok(LedgerReport {
        lhs,
        initial_norm_sq,
        slack,
        holds,
        trapezoid_defect,
        reliable,
    })
}
