//! Run configuration shared by flags and `--config` files.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Dist,
    Stopsum,
    Regimes,
    Verify,
    Llt,
    Bounds,
    Clustering,
    Rig,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Dist => "dist",
            Command::Stopsum => "stopsum",
            Command::Regimes => "regimes",
            Command::Verify => "verify",
            Command::Llt => "llt",
            Command::Bounds => "bounds",
            Command::Clustering => "clustering",
            Command::Rig => "rig",
        }
    }
}

/// Model inputs. Unset fields take per-command defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, clap::Args)]
#[serde(deny_unknown_fields)]
pub struct Params {
    /// Tail exponent of the summands, or of the attribute weights.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Tail exponent of the stopping time, or of the actor weights.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Attribute to actor count ratio of the intersection graph.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Right tail constant.
    #[arg(long)]
    pub a: Option<f64>,
    /// Left tail constant; a positive value makes the summands two-sided.
    #[arg(long)]
    pub b: Option<f64>,
    /// Power of the logarithmic slowly varying factor.
    #[arg(long)]
    pub rho: Option<f64>,
    /// Largest lattice point computed.
    #[arg(long)]
    pub tmax: Option<i64>,
    /// Summand counts for `llt` and `bounds`.
    #[arg(long, value_delimiter = ',')]
    pub n: Option<Vec<u64>>,
    /// Deviation level `x` for `bounds`.
    #[arg(long)]
    pub x: Option<f64>,
    /// Truncation level `y` for `bounds`.
    #[arg(long)]
    pub y: Option<f64>,
    /// Largest degree for `clustering` and `rig`.
    #[arg(long)]
    pub kmax: Option<i64>,
    /// Actor and attribute count for `rig`.
    #[arg(long)]
    pub size: Option<usize>,
}

impl Params {
    /// Fields set here win over `base`.
    pub fn over(self, base: Params) -> Params {
        Params {
            alpha: self.alpha.or(base.alpha),
            gamma: self.gamma.or(base.gamma),
            beta: self.beta.or(base.beta),
            a: self.a.or(base.a),
            b: self.b.or(base.b),
            rho: self.rho.or(base.rho),
            tmax: self.tmax.or(base.tmax),
            n: self.n.or(base.n),
            x: self.x.or(base.x),
            y: self.y.or(base.y),
            kmax: self.kmax.or(base.kmax),
            size: self.size.or(base.size),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    #[serde(default)]
    pub scenario: Option<String>,
    #[serde(default)]
    pub params: Params,
    pub out: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub emit_plots: bool,
}

/// JSON Schema of [`RunConfig`], written next to every emitted config.
pub const SCHEMA: &str = r##"{
  "$schema": "https://json-schema.org/draft/2020-12/schema",
  "title": "RunConfig",
  "type": "object",
  "additionalProperties": false,
  "required": ["command", "out"],
  "properties": {
    "command": {
      "enum": ["dist", "stopsum", "regimes", "verify", "llt", "bounds", "clustering", "rig"]
    },
    "scenario": { "type": ["string", "null"] },
    "params": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "alpha": { "type": ["number", "null"] },
        "gamma": { "type": ["number", "null"] },
        "beta": { "type": ["number", "null"], "exclusiveMinimum": 0 },
        "a": { "type": ["number", "null"], "minimum": 0 },
        "b": { "type": ["number", "null"], "minimum": 0 },
        "rho": { "type": ["number", "null"] },
        "tmax": { "type": ["integer", "null"], "minimum": 1 },
        "n": { "type": ["array", "null"], "items": { "type": "integer", "minimum": 1 } },
        "x": { "type": ["number", "null"], "exclusiveMinimum": 0 },
        "y": { "type": ["number", "null"], "exclusiveMinimum": 0 },
        "kmax": { "type": ["integer", "null"], "minimum": 2 },
        "size": { "type": ["integer", "null"], "minimum": 1 }
      }
    },
    "out": { "type": "string" },
    "seed": { "type": "integer", "minimum": 0 },
    "emit_plots": { "type": "boolean" }
  }
}
"##;

impl RunConfig {
    pub fn load(path: &std::path::Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// Range checks mirroring [`SCHEMA`] plus the per-command requirements.
    pub fn validate(&self) -> Result<()> {
        let p = &self.params;
        let positive = [("beta", p.beta), ("x", p.x), ("y", p.y)];
        for (name, v) in positive {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    bail!("{name} must be positive and finite, got {v}");
                }
            }
        }
        for (name, v) in [("a", p.a), ("b", p.b)] {
            if let Some(v) = v {
                if !(v >= 0.0 && v.is_finite()) {
                    bail!("{name} must be nonnegative and finite, got {v}");
                }
            }
        }
        for (name, v) in [("alpha", p.alpha), ("gamma", p.gamma), ("rho", p.rho)] {
            if let Some(v) = v {
                if !v.is_finite() {
                    bail!("{name} must be finite");
                }
            }
        }
        if let Some(t) = p.tmax {
            if t < 1 {
                bail!("tmax must be at least 1, got {t}");
            }
        }
        if let Some(k) = p.kmax {
            if k < 2 {
                bail!("kmax must be at least 2, got {k}");
            }
        }
        if p.size == Some(0) {
            bail!("size must be at least 1");
        }
        if let Some(ns) = &p.n {
            if ns.is_empty() || ns.contains(&0) {
                bail!("n must be a nonempty list of positive counts");
            }
        }
        match (self.command, &self.scenario) {
            (Command::Verify, None) => bail!("verify needs a scenario name"),
            (Command::Verify, Some(_)) | (_, None) => {}
            (c, Some(_)) => bail!("{} takes no scenario", c.name()),
        }
        Ok(())
    }
}
