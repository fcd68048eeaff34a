use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::ensembles::DEFAULT_EPSILONS;

pub const SUBCOMMANDS: [&str; 5] = ["chsh-scan", "trials", "lhv-sim", "dispersion-check", "bohm-evolve"];

const GLOBAL_KEYS: [&str; 5] = ["subcommand", "seed", "out", "threads", "dat"];

fn subcommand_keys(sub: &str) -> &'static [&'static str] {
    match sub {
        "chsh-scan" => &["theta_steps"],
        "trials" => &["model", "n", "theta_a", "theta_b"],
        "lhv-sim" => &["models", "n", "theta_steps"],
        "dispersion-check" => &["d", "eps", "x0", "p0", "t"],
        "bohm-evolve" => &[
            "preset",
            "grid_points",
            "dim",
            "p0",
            "dt",
            "t_end",
            "particles",
            "save_every",
            "fields",
            "trajectories",
            "residuals",
            "probes",
        ],
        _ => &[],
    }
}

/// Flat experiment description. Every key is optional in a file; `resolve`
/// fills the defaults relevant to the chosen subcommand.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subcommand: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dat: Option<bool>,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub models: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_b: Option<f64>,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_points: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub particles: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub save_every: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fields: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trajectories: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residuals: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probes: Option<usize>,
}

macro_rules! overlay {
    ($base:ident, $top:ident; $($f:ident),*) => {
        $( if $top.$f.is_some() { $base.$f = $top.$f.clone(); } )*
    };
}

impl ExperimentConfig {
    /// Reads a TOML config, or the `config` object of a JSON run manifest.
    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        if path.extension().is_some_and(|e| e == "json") {
            let v: serde_json::Value = serde_json::from_str(&text)
                .map_err(|e| CliError::config("config", format!("{}: {e}", path.display())))?;
            let inner = v.get("config").cloned().unwrap_or(v);
            serde_json::from_value(inner).map_err(|e| CliError::config(key_from_message(&e.to_string()), e.to_string()))
        } else {
            toml::from_str(&text).map_err(|e| {
                let key = e
                    .span()
                    .and_then(|sp| key_at(&text, sp.start))
                    .unwrap_or_else(|| key_from_message(e.message()));
                CliError::config(key, e.message().trim().to_string())
            })
        }
    }

    /// Values set in `top` replace those in `self`.
    pub fn merged(mut self, top: &ExperimentConfig) -> Self {
        overlay!(self, top; subcommand, seed, out, threads, dat, theta_steps, model, models, n,
            theta_a, theta_b, d, eps, x0, p0, t, preset, grid_points, dim, dt, t_end, particles,
            save_every, fields, trajectories, residuals, probes);
        self
    }

    /// Keys that are set, as named in config files.
    pub fn set_keys(&self) -> Vec<String> {
        match serde_json::to_value(self) {
            Ok(serde_json::Value::Object(m)) => m.keys().cloned().collect(),
            _ => Vec::new(),
        }
    }

    /// Checks keys against the subcommand and fills its defaults.
    pub fn resolve(mut self) -> Result<Self, CliError> {
        let sub = self
            .subcommand
            .clone()
            .ok_or_else(|| CliError::config("subcommand", "no subcommand given on the command line or in the config"))?;
        if !SUBCOMMANDS.contains(&sub.as_str()) {
            return Err(CliError::config("subcommand", format!("unknown subcommand `{sub}`")));
        }
        let allowed = subcommand_keys(&sub);
        for key in self.set_keys() {
            if !GLOBAL_KEYS.contains(&key.as_str()) && !allowed.contains(&key.as_str()) {
                return Err(CliError::config(key.clone(), format!("`{key}` is not a parameter of {sub}")));
            }
        }
        self.seed.get_or_insert(0);
        self.out.get_or_insert_with(|| PathBuf::from("hvbench-out"));
        self.dat.get_or_insert(false);
        match sub.as_str() {
            "chsh-scan" => {
                self.theta_steps.get_or_insert(360);
            }
            "trials" => {
                self.model.get_or_insert_with(|| "singlet".into());
                self.n.get_or_insert(1000);
                self.theta_a.get_or_insert(0.0);
                self.theta_b.get_or_insert(std::f64::consts::FRAC_PI_3);
            }
            "lhv-sim" => {
                self.models
                    .get_or_insert_with(|| crate::lhv::MODEL_NAMES.iter().map(|s| s.to_string()).collect());
                self.n.get_or_insert(100_000);
                self.theta_steps.get_or_insert(50);
            }
            "dispersion-check" => {
                self.d.get_or_insert_with(|| vec![2, 3, 4]);
                self.eps.get_or_insert_with(|| DEFAULT_EPSILONS.to_vec());
                self.x0.get_or_insert(0.3);
                self.p0.get_or_insert(0.7);
                self.t.get_or_insert(1.0);
            }
            "bohm-evolve" => {
                self.preset.get_or_insert_with(|| "free-gaussian".into());
                let two = self.preset.as_deref().is_some_and(|p| p.starts_with("two-particle"));
                self.grid_points.get_or_insert(if two { 256 } else { 2048 });
                if two {
                    self.probes.get_or_insert(1000);
                } else {
                    let (dt, t_end) = crate::bohmian::presets::preset_timing(self.preset.as_deref().unwrap_or_default())
                        .map_err(|e| CliError::config("preset", e.to_string()))?;
                    let dt = *self.dt.get_or_insert(dt);
                    let t_end = *self.t_end.get_or_insert(t_end);
                    let steps = (t_end / dt).round().max(1.0) as usize;
                    self.save_every.get_or_insert((steps / 100).max(1));
                    self.dim.get_or_insert(1);
                    self.p0.get_or_insert(0.0);
                    self.particles.get_or_insert(200);
                    self.fields.get_or_insert(true);
                    self.trajectories.get_or_insert(true);
                    self.residuals.get_or_insert(true);
                }
            }
            _ => unreachable!(),
        }
        Ok(self)
    }
}

/// Key on the `key = value` line containing byte offset `pos`.
fn key_at(text: &str, pos: usize) -> Option<String> {
    let start = text[..pos.min(text.len())].rfind('\n').map_or(0, |i| i + 1);
    let line = text[start..].lines().next()?;
    let (key, _) = line.split_once('=')?;
    Some(key.trim().to_string())
}

/// Pulls the offending key out of a serde message such as
/// "unknown field `foo`, expected ..." or "invalid type ... for key `n`".
fn key_from_message(msg: &str) -> String {
    msg.split('`').nth(1).unwrap_or("config").to_string()
}
