//! The kinetic unknown and its macro-micro decomposition.
//!
//! A [`DistributionField`] stores the density `f(x_i, v_j)` against the
//! weighted measure, row-major over `(i, j)`, stamped with simulation time.
//! A [`MacroField`] holds one value per spatial cell. The velocity average
//! `<f>` projects onto constants-in-v; the fluctuation `f - <f>` carries all
//! microscopic structure and is what the collision operators damp.
//!
//! Fields have value semantics: they are cloned or moved between workers and
//! never shared mutably.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write as _;

use crate::error::{CoreError, Result};
use crate::grids::{mirror_pair_sum, Domain};

/// Phase-space field sampled at `(x_i, v_j)`, row-major, with a time stamp.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionField {
    values: Vec<f64>,
    time: f64,
}

impl DistributionField {
    pub fn zeros(domain: &Domain) -> Self {
        DistributionField {
            values: vec![0.0; domain.n_x() * domain.n_v()],
            time: 0.0,
        }
    }

    pub fn constant(domain: &Domain, c: f64) -> Self {
        DistributionField {
            values: vec![c; domain.n_x() * domain.n_v()],
            time: 0.0,
        }
    }

    /// Sample `g(x_i, v_j)` at every node.
    pub fn from_fn(domain: &Domain, g: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = vec![0.0; domain.n_x() * domain.n_v()];
        for i in 0..domain.n_x() {
            let x = domain.space().center(i);
            for j in 0..domain.n_v() {
                values[domain.idx(i, j)] = g(x, domain.velocity().node(j));
            }
        }
        DistributionField { values, time: 0.0 }
    }

    /// Wrap raw row-major values; rejects shape mismatch.
    pub fn from_values(domain: &Domain, values: Vec<f64>, time: f64) -> Result<Self> {
        if values.len() != domain.n_x() * domain.n_v() {
            return Err(CoreError::config(
                "field length does not match the grid shape",
            ));
        }
        Ok(DistributionField { values, time })
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    #[inline]
    pub fn time(&self) -> f64 {
        self.time
    }

    #[inline]
    pub fn set_time(&mut self, t: f64) {
        self.time = t;
    }

    /// Err if any value is NaN or infinite (blow-up guard for steppers).
    pub fn check_finite(&self) -> Result<()> {
        if self.values.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(CoreError::numerical("field contains non-finite values"))
        }
    }
}

/// Spatial field sampled at cell centers.
#[derive(Debug, Clone, PartialEq)]
pub struct MacroField {
    values: Vec<f64>,
}

impl MacroField {
    pub fn zeros(domain: &Domain) -> Self {
        MacroField {
            values: vec![0.0; domain.n_x()],
        }
    }

    pub fn constant(domain: &Domain, c: f64) -> Self {
        MacroField {
            values: vec![c; domain.n_x()],
        }
    }

    pub fn from_fn(domain: &Domain, g: impl Fn(f64) -> f64) -> Self {
        MacroField {
            values: domain.space().centers().iter().map(|&x| g(x)).collect(),
        }
    }

    pub fn from_values(domain: &Domain, values: Vec<f64>) -> Result<Self> {
        if values.len() != domain.n_x() {
            return Err(CoreError::config(
                "macro field length does not match the spatial grid",
            ));
        }
        Ok(MacroField { values })
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Lift to a phase-space field constant in `v`.
    pub fn lift(&self, domain: &Domain) -> DistributionField {
        let mut out = DistributionField::zeros(domain);
        for i in 0..domain.n_x() {
            let c = self.values[i];
            for j in 0..domain.n_v() {
                out.values[domain.idx(i, j)] = c;
            }
        }
        out
    }
}

/// Velocity average `<f>_i = Z^{-1} sum_j w_j f_ij`, the projection onto
/// constants-in-v.
pub fn moment0(f: &DistributionField, domain: &Domain) -> MacroField {
    let (n_v, z) = (domain.n_v(), domain.velocity().z());
    let values = (0..domain.n_x())
        .map(|i| {
            let row = i * n_v;
            mirror_pair_sum(n_v, |j| domain.velocity().weight(j) * f.values[row + j]) / z
        })
        .collect();
    MacroField { values }
}

/// Fluctuation `f - <f>` (mean-zero in `v` per cell, up to rounding).
pub fn perp(f: &DistributionField, domain: &Domain) -> DistributionField {
    let mean = moment0(f, domain);
    let mut out = f.clone();
    for i in 0..domain.n_x() {
        let c = mean.values[i];
        for j in 0..domain.n_v() {
            out.values[domain.idx(i, j)] -= c;
        }
    }
    out
}

/// First moment `<v f>_i = Z^{-1} sum_j w_j v_j f_ij` (the flux density).
pub fn moment1(f: &DistributionField, domain: &Domain) -> MacroField {
    let (n_v, z) = (domain.n_v(), domain.velocity().z());
    let values = (0..domain.n_x())
        .map(|i| {
            let row = i * n_v;
            mirror_pair_sum(n_v, |j| {
                domain.velocity().weight(j) * domain.velocity().node(j) * f.values[row + j]
            }) / z
        })
        .collect();
    MacroField { values }
}

/// Measure-average of `f`: its weighted integral divided by the total
/// spatial measure. For conservative walls this is the constant state the
/// solution relaxes to.
pub fn average_density(f: &DistributionField, domain: &Domain) -> f64 {
    domain.integral_dm(&f.values) / domain.measure().x_total()
}

/// Header of the plain-text snapshot format.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnapshotHeader {
    pub n_x: usize,
    pub n_v: usize,
    pub v_max: f64,
    pub time: f64,
}

/// Serialize a field as restart-safe text: one header line
/// `N_x N_v V_max t`, then one row-major value per line, round-trip exact
/// via hexadecimal float significands avoided in favor of 17 significant
/// digits (enough to reproduce every f64 bit pattern).
pub fn snapshot_to_string(f: &DistributionField, domain: &Domain) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{} {} {:.17e} {:.17e}",
        domain.n_x(),
        domain.n_v(),
        domain.velocity().v_max(),
        f.time()
    );
    for v in &f.values {
        let _ = writeln!(out, "{v:.17e}");
    }
    out
}

/// Parse the text produced by [`snapshot_to_string`]. The caller re-binds
/// the values to a [`Domain`] built from the header.
pub fn snapshot_from_string(text: &str) -> Result<(SnapshotHeader, Vec<f64>)> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header_line = lines
        .next()
        .ok_or_else(|| CoreError::config("snapshot is empty"))?;
    let fields: Vec<&str> = header_line.split_whitespace().collect();
    if fields.len() != 4 {
        return Err(CoreError::config(
            "snapshot header must contain exactly N_x, N_v, V_max, and t",
        ));
    }
    let n_x: usize = fields[0]
        .parse()
        .map_err(|_| CoreError::config("snapshot header N_x is not an integer"))?;
    let n_v: usize = fields[1]
        .parse()
        .map_err(|_| CoreError::config("snapshot header N_v is not an integer"))?;
    let v_max: f64 = fields[2]
        .parse()
        .map_err(|_| CoreError::config("snapshot header V_max is not a float"))?;
    let time: f64 = fields[3]
        .parse()
        .map_err(|_| CoreError::config("snapshot header t is not a float"))?;

    let mut values = Vec::with_capacity(n_x * n_v);
    for line in lines {
        let v: f64 = line
            .trim()
            .parse()
            .map_err(|_| CoreError::config("snapshot body contains a malformed value"))?;
        values.push(v);
    }
    if values.len() != n_x * n_v {
        return Err(CoreError::config(format!(
            "snapshot body has {} values but the header promises {}",
            values.len(),
            n_x * n_v
        )));
    }
    Ok((
        SnapshotHeader {
            n_x,
            n_v,
            v_max,
            time,
        },
        values,
    ))
}
