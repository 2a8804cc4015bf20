//! Run configuration: a TOML file, overridden by command-line flags, resolved
//! into a validated [`Plan`] before anything is computed.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use pilotwave::scenarios::{self, MeasurementConfig, Scenario};
use pilotwave::Complex64;
use serde::{Deserialize, Serialize};

/// A configuration problem; maps to exit status 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

impl From<pilotwave::Error> for ConfigError {
    fn from(e: pilotwave::Error) -> Self {
        ConfigError(e.to_string())
    }
}

fn bad<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    Equivariance,
    Continuity,
    Born,
    Collapse,
    Fcp,
}

impl Check {
    pub const ALL: [Check; 5] = [Check::Equivariance, Check::Continuity, Check::Born, Check::Collapse, Check::Fcp];

    pub fn name(self) -> &'static str {
        match self {
            Check::Equivariance => "equivariance",
            Check::Continuity => "continuity",
            Check::Born => "born",
            Check::Collapse => "collapse",
            Check::Fcp => "fcp",
        }
    }

    pub fn parse(s: &str) -> Result<Self, ConfigError> {
        Check::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .map_or_else(|| bad(format!("unknown check `{s}`")), Ok)
    }

    fn needs_measurement(self) -> bool {
        matches!(self, Check::Born | Check::Collapse | Check::Fcp)
    }
}

/// Where the initial ensemble comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Initial {
    /// `|ψ₀|²` by rejection sampling.
    Born,
    /// Uniform over the slit openings (two-slit only).
    UniformInSlits,
}

/// Everything a run file may set. Every field is optional; flags override
/// file values.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: Option<String>,
    /// Scenario parameter overrides, e.g. `sigma0 = 0.8`.
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    pub dt: Option<f64>,
    pub nsteps: Option<usize>,
    pub stride: Option<usize>,
    pub n: Option<usize>,
    pub seed: Option<u64>,
    pub initial: Option<Initial>,
    #[serde(default)]
    pub checks: Vec<String>,
    pub output_dir: Option<PathBuf>,
    /// Recorded points per trajectory, besides the start.
    pub record_points: Option<usize>,
    /// Extra times at which to write density snapshots.
    #[serde(default)]
    pub density_times: Vec<f64>,
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError(format!("invalid config: {e}")))
    }

    /// `other`'s set fields win.
    pub fn merged(mut self, other: RunConfig) -> Self {
        self.params.extend(other.params);
        macro_rules! take {
            ($($f:ident),*) => { $( if other.$f.is_some() { self.$f = other.$f; } )* };
        }
        take!(scenario, dt, nsteps, stride, n, seed, initial, output_dir, record_points);
        if !other.checks.is_empty() {
            self.checks = other.checks;
        }
        if !other.density_times.is_empty() {
            self.density_times = other.density_times;
        }
        self
    }

    pub fn resolve(&self) -> Result<Plan, ConfigError> {
        let name = self.scenario.as_deref().map_or_else(|| bad("no scenario given"), Ok)?;
        let scenario = build_scenario(name, &self.params)?;
        let d = scenario.defaults;
        let dt = self.dt.unwrap_or(d.dt);
        let nsteps = self.nsteps.unwrap_or(d.nsteps);
        let stride = self.stride.unwrap_or(d.stride);
        let n = self.n.unwrap_or(d.n_samples);
        if !(dt.is_finite() && dt > 0.0) {
            return bad(format!("dt must be positive, got {dt}"));
        }
        if nsteps == 0 || stride == 0 || nsteps % stride != 0 {
            return bad(format!("nsteps ({nsteps}) must be a positive multiple of stride ({stride})"));
        }
        if n == 0 {
            return bad("ensemble size must be at least 1");
        }
        let initial = self.initial.unwrap_or(Initial::Born);
        if initial == Initial::UniformInSlits && scenario.name != "two_slit" {
            return bad("uniform_in_slits needs the two_slit scenario");
        }
        let mut checks = self.checks.iter().map(|c| Check::parse(c)).collect::<Result<Vec<_>, _>>()?;
        checks.sort();
        checks.dedup();
        if checks.contains(&Check::Equivariance) && initial != Initial::Born {
            return bad("the equivariance check needs a |psi|^2 initial ensemble");
        }
        let t_final = dt * nsteps as f64;
        if let Some(c) = checks.iter().find(|c| c.needs_measurement()) {
            let Some(setup) = &scenario.measurement else {
                return bad(format!("check `{}` needs the measurement scenario", c.name()));
            };
            if (t_final - setup.duration()).abs() > 1e-9 * setup.duration() {
                return bad(format!(
                    "check `{}` reads outcomes at t = {}, but the run ends at {t_final}",
                    c.name(),
                    setup.duration()
                ));
            }
        }
        if checks.contains(&Check::Continuity) && nsteps / stride < 2 {
            return bad("the continuity check needs at least three frames");
        }
        let frames = nsteps / stride;
        let record_points = self.record_points.unwrap_or(50).clamp(1, frames);
        let mut density_frames = vec![0, frames];
        for &t in &self.density_times {
            let k = t / (dt * stride as f64);
            if !(k >= -1e-9 && k <= frames as f64 + 1e-9 && (k - k.round()).abs() < 1e-6) {
                return bad(format!("density time {t} is not a frame time"));
            }
            density_frames.push(k.round() as usize);
        }
        density_frames.sort_unstable();
        density_frames.dedup();
        Ok(Plan {
            scenario,
            dt,
            nsteps,
            stride,
            n,
            seed: self.seed.unwrap_or(0),
            initial,
            checks,
            output_dir: self.output_dir.clone().unwrap_or_else(|| PathBuf::from("pilotwave-out")),
            record_every: frames.div_ceil(record_points),
            density_frames,
            overrides: self.params.clone(),
        })
    }
}

/// A validated run.
#[derive(Debug, Clone)]
pub struct Plan {
    pub scenario: Scenario,
    pub dt: f64,
    pub nsteps: usize,
    pub stride: usize,
    pub n: usize,
    pub seed: u64,
    pub initial: Initial,
    pub checks: Vec<Check>,
    pub output_dir: PathBuf,
    /// Trajectory points are written every this many frames.
    pub record_every: usize,
    /// Frame indices with a density snapshot.
    pub density_frames: Vec<usize>,
    pub overrides: BTreeMap<String, f64>,
}

impl Plan {
    pub fn t_final(&self) -> f64 {
        self.dt * self.nsteps as f64
    }
}

/// Parameter names and defaults of each scenario, in listing order.
pub fn scenario_parameters(name: &str) -> Option<Vec<(&'static str, f64)>> {
    let m = MeasurementConfig::default();
    Some(match name {
        "two_slit" => vec![("separation", 2.0), ("slit_width", 0.25), ("extent", 48.0), ("points", 2048.0)],
        "free_gaussian" => {
            vec![("x0", 0.0), ("sigma0", 1.0), ("k0", 0.0), ("extent", 40.0), ("points", 512.0)]
        }
        "harmonic" => vec![("omega", 1.0), ("displacement", 2.0), ("extent", 20.0), ("points", 256.0)],
        "measurement" => vec![
            ("p1", 0.5),
            ("p2", 0.5),
            ("mode_width", m.mode_width),
            ("mode_spacing", m.mode_spacing),
            ("pointer_width", m.pointer_width),
            ("coupling", m.coupling),
            ("duration", m.duration),
            ("pointer_mass", m.pointer_mass),
        ],
        _ => return None,
    })
}

fn build_scenario(name: &str, overrides: &BTreeMap<String, f64>) -> Result<Scenario, ConfigError> {
    let Some(defaults) = scenario_parameters(name) else {
        return bad(format!("unknown scenario `{name}` (known: {})", scenarios::NAMES.join(", ")));
    };
    for key in overrides.keys() {
        if !defaults.iter().any(|(k, _)| k == key) {
            return bad(format!("scenario `{name}` has no parameter `{key}`"));
        }
    }
    let get = |key: &str| -> f64 {
        overrides.get(key).copied().unwrap_or_else(|| defaults.iter().find(|(k, _)| *k == key).expect("listed").1)
    };
    let points = || -> Result<usize, ConfigError> {
        let p = get("points");
        if p.fract() != 0.0 || p < 1.0 {
            return bad(format!("points must be a positive integer, got {p}"));
        }
        Ok(p as usize)
    };
    let scenario = match name {
        "two_slit" => scenarios::two_slit(get("separation"), get("slit_width"), get("extent"), points()?)?,
        "free_gaussian" => {
            scenarios::free_gaussian(get("x0"), get("sigma0"), get("k0"), get("extent"), points()?)?
        }
        "harmonic" => scenarios::harmonic(get("omega"), get("displacement"), get("extent"), points()?)?,
        _ => {
            let (p1, p2) = (get("p1"), get("p2"));
            if !(p1 >= 0.0 && p2 >= 0.0) || (p1 + p2 - 1.0).abs() > 1e-9 {
                return bad(format!("outcome weights must be nonnegative and sum to 1, got {p1} + {p2}"));
            }
            let total = p1 + p2;
            let config = MeasurementConfig {
                coeffs: vec![Complex64::new((p1 / total).sqrt(), 0.0), Complex64::new((p2 / total).sqrt(), 0.0)],
                mode_width: get("mode_width"),
                mode_spacing: get("mode_spacing"),
                pointer_width: get("pointer_width"),
                coupling: get("coupling"),
                duration: get("duration"),
                pointer_mass: get("pointer_mass"),
            };
            scenarios::measurement_scenario(config.build()?)?
        }
    };
    Ok(scenario)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_win_over_the_file() {
        let file = RunConfig::from_toml(
            r#"
            scenario = "free_gaussian"
            seed = 3
            checks = ["equivariance"]
            [params]
            sigma0 = 0.8
            "#,
        )
        .unwrap();
        let flags = RunConfig { seed: Some(7), params: [("k0".to_string(), 1.0)].into(), ..Default::default() };
        let merged = file.merged(flags);
        assert_eq!(merged.seed, Some(7));
        assert_eq!(merged.params.len(), 2);
        let plan = merged.resolve().unwrap();
        assert_eq!(plan.checks, vec![Check::Equivariance]);
        assert_eq!(plan.seed, 7);
    }

    #[test]
    fn rejects_bad_configs() {
        let cfg = |s: &str| RunConfig::from_toml(s).and_then(|c| c.resolve());
        assert!(cfg("scenario = \"three_slit\"").is_err());
        assert!(cfg("scenario = \"free_gaussian\"\nchecks = [\"born\"]").is_err());
        assert!(cfg("scenario = \"free_gaussian\"\nnsteps = 7\nstride = 2").is_err());
        assert!(cfg("scenario = \"free_gaussian\"\n[params]\nomega = 1.0").is_err());
        assert!(cfg("scenario = \"two_slit\"\n[params]\npoints = 256.0").is_err());
        assert!(cfg("scenario = \"measurement\"\nchecks = [\"born\"]\nnsteps = 250").is_err());
        assert!(cfg("scenario = \"harmonic\"\ninitial = \"uniform_in_slits\"").is_err());
        assert!(cfg("sceanrio = \"harmonic\"").is_err());
        assert!(cfg("scenario = \"measurement\"\nchecks = [\"born\", \"fcp\"]").is_ok());
    }

    #[test]
    fn every_listed_scenario_resolves_with_defaults() {
        for name in scenarios::NAMES {
            let plan = RunConfig { scenario: Some(name.into()), ..Default::default() }.resolve().unwrap();
            assert_eq!(plan.density_frames.first(), Some(&0));
        }
    }
}
