//! Run configuration: strict TOML parsing, defaults, and the fully resolved
//! echo that goes into every manifest.
//!
//! Only `model.collision` and `model.epsilon` are required; everything else
//! has documented defaults. Unknown keys anywhere are rejected, as are known
//! keys that do not apply to the selected preset — a run is always fully
//! described by its manifest echo.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use slabkin_core::boundary::{BoundaryConfig, WallLaw};
use slabkin_core::collision::CollisionKind;
use slabkin_core::grids::{Domain, PotentialSpec};
use slabkin_core::transport::{InitialPreset, SimConfig};

use crate::error::{CliError, Result};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    model: ModelSection,
    #[serde(default)]
    grids: GridsSection,
    #[serde(default)]
    boundary: BoundarySection,
    #[serde(default)]
    potential: PotentialSection,
    #[serde(default)]
    initial: InitialSection,
    #[serde(default)]
    time: TimeSection,
    #[serde(default)]
    output: OutputSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelSection {
    collision: String,
    epsilon: f64,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridsSection {
    n_x: Option<usize>,
    n_v: Option<usize>,
    v_max: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct BoundarySection {
    alpha_left: Option<f64>,
    beta_left: Option<f64>,
    alpha_right: Option<f64>,
    beta_right: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct PotentialSection {
    preset: Option<String>,
    slope: Option<f64>,
    amplitude: Option<f64>,
    file: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct InitialSection {
    preset: Option<String>,
    level: Option<f64>,
    amplitude: Option<f64>,
    center: Option<f64>,
    width: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct TimeSection {
    t_final: Option<f64>,
    theta: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct OutputSection {
    records: Option<usize>,
    snapshots: Option<Vec<f64>>,
    limit_samples: Option<usize>,
}

/// Every parameter of a run after defaults are applied. Serialized verbatim
/// into the manifest so reruns are reproducible from the summary alone.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ResolvedConfig {
    pub collision: String,
    pub epsilon: f64,
    pub n_x: usize,
    pub n_v: usize,
    pub v_max: f64,
    pub alpha_left: f64,
    pub beta_left: f64,
    pub alpha_right: f64,
    pub beta_right: f64,
    pub potential_preset: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub potential_slope: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub potential_amplitude: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub potential_file: Option<String>,
    pub initial_preset: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial_level: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial_amplitude: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial_center: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial_width: Option<f64>,
    pub t_final: f64,
    pub theta: f64,
    pub records: usize,
    pub snapshot_times: Vec<f64>,
    pub limit_samples: usize,
    /// Tabulated potential data, inlined so the manifest is self-contained.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub potential_table: Option<(Vec<f64>, Vec<f64>)>,
}

fn cfg_err(path: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{path}: {msg}"))
}

fn reject_irrelevant(path: &str, key: &str, set: bool, preset: &str) -> Result<()> {
    if set {
        return Err(cfg_err(
            &format!("{path}.{key}"),
            format!("not a parameter of preset '{preset}'"),
        ));
    }
    Ok(())
}

/// Parse a two-column (x, phi) table; one pair per non-empty line.
fn parse_table(text: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut xs = Vec::new();
    let mut phis = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut cols = line.split_whitespace();
        let err = || {
            cfg_err(
                "potential.file",
                format!("line {}: expected two numbers", lineno + 1),
            )
        };
        let x: f64 = cols.next().ok_or_else(err)?.parse().map_err(|_| err())?;
        let phi: f64 = cols.next().ok_or_else(err)?.parse().map_err(|_| err())?;
        if cols.next().is_some() {
            return Err(err());
        }
        xs.push(x);
        phis.push(phi);
    }
    Ok((xs, phis))
}

/// Parse and resolve a configuration. `base_dir` anchors relative paths
/// (tabulated potentials).
pub fn parse_config(text: &str, base_dir: Option<&Path>) -> Result<ResolvedConfig> {
    let raw: RawConfig =
        toml::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))?;

    let collision = match raw.model.collision.as_str() {
        "bgk" => "bgk",
        "fokker-planck" => "fokker-planck",
        other => {
            return Err(cfg_err(
                "model.collision",
                format!("unknown kind '{other}' (use 'bgk' or 'fokker-planck')"),
            ))
        }
    }
    .to_string();
    let epsilon = raw.model.epsilon;
    if !(epsilon.is_finite() && epsilon > 0.0 && epsilon <= 1.0) {
        return Err(cfg_err("model.epsilon", "must lie in (0, 1]"));
    }

    let n_x = raw.grids.n_x.unwrap_or(64);
    let n_v = raw.grids.n_v.unwrap_or(64);
    let v_max = raw.grids.v_max.unwrap_or(8.0);

    let alpha_left = raw.boundary.alpha_left.unwrap_or(1.0);
    let beta_left = raw.boundary.beta_left.unwrap_or(0.0);
    let alpha_right = raw.boundary.alpha_right.unwrap_or(1.0);
    let beta_right = raw.boundary.beta_right.unwrap_or(0.0);
    WallLaw::new(alpha_left, beta_left).map_err(|e| cfg_err("boundary.alpha_left/beta_left", e))?;
    WallLaw::new(alpha_right, beta_right)
        .map_err(|e| cfg_err("boundary.alpha_right/beta_right", e))?;

    let p = &raw.potential;
    let potential_preset = p.preset.clone().unwrap_or_else(|| "zero".to_string());
    let mut potential_table = None;
    match potential_preset.as_str() {
        "zero" => {
            reject_irrelevant("potential", "slope", p.slope.is_some(), "zero")?;
            reject_irrelevant("potential", "amplitude", p.amplitude.is_some(), "zero")?;
            reject_irrelevant("potential", "file", p.file.is_some(), "zero")?;
        }
        "linear" => {
            reject_irrelevant("potential", "amplitude", p.amplitude.is_some(), "linear")?;
            reject_irrelevant("potential", "file", p.file.is_some(), "linear")?;
            if p.slope.is_none() {
                return Err(cfg_err("potential.slope", "required for preset 'linear'"));
            }
        }
        "cosine" => {
            reject_irrelevant("potential", "slope", p.slope.is_some(), "cosine")?;
            reject_irrelevant("potential", "file", p.file.is_some(), "cosine")?;
            if p.amplitude.is_none() {
                return Err(cfg_err(
                    "potential.amplitude",
                    "required for preset 'cosine'",
                ));
            }
        }
        "table" => {
            reject_irrelevant("potential", "slope", p.slope.is_some(), "table")?;
            reject_irrelevant("potential", "amplitude", p.amplitude.is_some(), "table")?;
            let file = p
                .file
                .as_ref()
                .ok_or_else(|| cfg_err("potential.file", "required for preset 'table'"))?;
            let mut path = PathBuf::from(file);
            if path.is_relative() {
                if let Some(base) = base_dir {
                    path = base.join(path);
                }
            }
            let text = fs::read_to_string(&path).map_err(|e| {
                cfg_err(
                    "potential.file",
                    format!("cannot read {}: {e}", path.display()),
                )
            })?;
            potential_table = Some(parse_table(&text)?);
        }
        other => {
            return Err(cfg_err(
                "potential.preset",
                format!("unknown preset '{other}' (zero, linear, cosine, table)"),
            ))
        }
    }

    let s = &raw.initial;
    let initial_preset = s.preset.clone().unwrap_or_else(|| "cosine".to_string());
    match initial_preset.as_str() {
        "equilibrium" => {
            reject_irrelevant("initial", "amplitude", s.amplitude.is_some(), "equilibrium")?;
            reject_irrelevant("initial", "center", s.center.is_some(), "equilibrium")?;
            reject_irrelevant("initial", "width", s.width.is_some(), "equilibrium")?;
        }
        "cosine" | "shifted" => {
            reject_irrelevant("initial", "level", s.level.is_some(), &initial_preset)?;
            reject_irrelevant("initial", "center", s.center.is_some(), &initial_preset)?;
            reject_irrelevant("initial", "width", s.width.is_some(), &initial_preset)?;
        }
        "bump" => {
            reject_irrelevant("initial", "level", s.level.is_some(), "bump")?;
            reject_irrelevant("initial", "amplitude", s.amplitude.is_some(), "bump")?;
        }
        other => {
            return Err(cfg_err(
                "initial.preset",
                format!("unknown preset '{other}' (equilibrium, cosine, bump, shifted)"),
            ))
        }
    }

    let resolved = ResolvedConfig {
        collision,
        epsilon,
        n_x,
        n_v,
        v_max,
        alpha_left,
        beta_left,
        alpha_right,
        beta_right,
        potential_preset,
        potential_slope: p.slope,
        potential_amplitude: p.amplitude,
        potential_file: p.file.clone(),
        initial_preset,
        initial_level: s.level,
        initial_amplitude: s.amplitude,
        initial_center: s.center,
        initial_width: s.width,
        t_final: raw.time.t_final.unwrap_or(5.0),
        theta: raw.time.theta.unwrap_or(0.5),
        records: raw.output.records.unwrap_or(600),
        snapshot_times: raw.output.snapshots.clone().unwrap_or_default(),
        limit_samples: raw.output.limit_samples.unwrap_or(120),
        potential_table,
    };
    resolved.validate()?;
    Ok(resolved)
}

/// Read and resolve a configuration file.
pub fn load_config(path: &Path) -> Result<ResolvedConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text, path.parent())
}

impl ResolvedConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_final.is_finite() && self.t_final > 0.0) {
            return Err(cfg_err("time.t_final", "must be positive"));
        }
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return Err(cfg_err("time.theta", "must lie in (0, 1)"));
        }
        if self.records == 0 {
            return Err(cfg_err("output.records", "must be at least 1"));
        }
        if self.limit_samples < 2 {
            return Err(cfg_err("output.limit_samples", "must be at least 2"));
        }
        if self
            .snapshot_times
            .iter()
            .any(|t| !(t.is_finite() && *t >= 0.0 && *t <= self.t_final))
        {
            return Err(cfg_err(
                "output.snapshots",
                "times must lie in [0, t_final]",
            ));
        }
        if self.snapshot_times.windows(2).any(|p| p[0] > p[1]) {
            return Err(cfg_err("output.snapshots", "times must be sorted"));
        }
        // Grid and wall-law ranges are enforced again by the solver types;
        // surface them here with key paths.
        self.domain()?;
        Ok(())
    }

    pub fn kind(&self) -> CollisionKind {
        match self.collision.as_str() {
            "fokker-planck" => CollisionKind::FokkerPlanck,
            _ => CollisionKind::Bgk,
        }
    }

    pub fn potential_spec(&self) -> PotentialSpec {
        match self.potential_preset.as_str() {
            "linear" => PotentialSpec::Linear {
                slope: self.potential_slope.unwrap_or(0.0),
            },
            "cosine" => PotentialSpec::Cosine {
                amplitude: self.potential_amplitude.unwrap_or(0.0),
            },
            "table" => {
                let (x, phi) = self.potential_table.clone().unwrap_or_default();
                PotentialSpec::Table { x, phi }
            }
            _ => PotentialSpec::Zero,
        }
    }

    pub fn domain(&self) -> Result<Domain> {
        Domain::build(self.n_x, self.n_v, self.v_max, &self.potential_spec())
            .map_err(|e| cfg_err("grids/potential", e))
    }

    pub fn boundary(&self) -> Result<BoundaryConfig> {
        let left =
            WallLaw::new(self.alpha_left, self.beta_left).map_err(|e| cfg_err("boundary", e))?;
        let right =
            WallLaw::new(self.alpha_right, self.beta_right).map_err(|e| cfg_err("boundary", e))?;
        Ok(BoundaryConfig::new(left, right))
    }

    pub fn initial(&self) -> Result<InitialPreset> {
        let preset = match self.initial_preset.as_str() {
            "equilibrium" => InitialPreset::Equilibrium {
                level: self.initial_level.unwrap_or(1.0),
            },
            "bump" => InitialPreset::Bump {
                center: self.initial_center.unwrap_or(0.5),
                width: self.initial_width.unwrap_or(0.1),
            },
            "shifted" => InitialPreset::ShiftedVelocity {
                amplitude: self.initial_amplitude.unwrap_or(0.5),
            },
            _ => InitialPreset::CosineDensity {
                amplitude: self.initial_amplitude.unwrap_or(0.5),
            },
        };
        Ok(preset)
    }

    /// The cadence that yields about `records` evenly spread samples given
    /// the CFL step the runner will take.
    pub fn record_every(&self, domain: &Domain) -> usize {
        let dt = slabkin_core::transport::stable_dt(self.theta, self.epsilon, domain);
        let steps = (self.t_final / dt).ceil().max(1.0) as usize;
        (steps / self.records).max(1)
    }

    pub fn sim_config(&self, domain: &Domain) -> Result<SimConfig> {
        Ok(SimConfig {
            eps: self.epsilon,
            kind: self.kind(),
            boundary: self.boundary()?,
            theta: self.theta,
            t_final: self.t_final,
            initial: self.initial()?,
            record_every: self.record_every(domain),
        })
    }

    /// A copy with a different relaxation scale (sweeps and limit studies).
    pub fn with_epsilon(&self, epsilon: f64) -> Self {
        let mut c = self.clone();
        c.epsilon = epsilon;
        c
    }
}
