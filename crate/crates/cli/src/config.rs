use crate::CliError;
use extremal_core::fem::NonlinearitySpec;
use extremal_core::geom2d::DomainSpec;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Solve,
    Eigen,
    Check,
    Flow,
    Branch,
    Report,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Eigen => "eigen",
            Command::Check => "check",
            Command::Flow => "flow",
            Command::Branch => "branch",
            Command::Report => "report",
        }
    }
}

impl std::str::FromStr for Command {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|_| format!("unknown command `{s}`"))
    }
}

/// Overrides of module defaults. Every value must lie in `[1e-14, 1e-1]`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eigen: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub newton: Option<f64>,
    /// Flow stopping spread.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spread: Option<f64>,
    /// Relative bisection tolerance of the bifurcation period.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bifurcation: Option<f64>,
    /// Grid spacing of the inscribed-ball search.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inradius_grid: Option<f64>,
    /// Convexity threshold of the P-function check.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convexity: Option<f64>,
}

impl Tolerances {
    fn entries(&self) -> [(&'static str, Option<f64>); 6] {
        [
            ("eigen", self.eigen),
            ("newton", self.newton),
            ("spread", self.spread),
            ("bifurcation", self.bifurcation),
            ("inradius_grid", self.inradius_grid),
            ("convexity", self.convexity),
        ]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowParams {
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
}

fn default_max_steps() -> usize {
    300
}

impl Default for FlowParams {
    fn default() -> Self {
        FlowParams { max_steps: default_max_steps() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchParams {
    pub lambda: f64,
    /// Starting period; the bifurcation period when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period: Option<f64>,
    pub s_max: f64,
    pub ds: f64,
    #[serde(default = "default_modes")]
    pub n_modes: usize,
}

fn default_modes() -> usize {
    12
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Theorem {
    T4,
    T5,
    T8,
    L3R,
}

fn all_theorems() -> Vec<Theorem> {
    vec![Theorem::T4, Theorem::T5, Theorem::T8, Theorem::L3R]
}

fn default_lines() -> usize {
    16
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckParams {
    #[serde(default = "all_theorems")]
    pub theorems: Vec<Theorem>,
    #[serde(default = "default_lines")]
    pub lines: usize,
}

impl Default for CheckParams {
    fn default() -> Self {
        CheckParams { theorems: all_theorems(), lines: default_lines() }
    }
}

/// One experiment, read from a single JSON document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Must agree with the command given on the command line, if present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<DomainSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nonlinearity: Option<NonlinearitySpec>,
    /// Target Neumann constant; solutions are scaled to it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default = "default_h")]
    pub h: f64,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flow: Option<FlowParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub branch: Option<BranchParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub check: Option<CheckParams>,
    /// Record files aggregated by `report`, relative to the config file.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub records: Vec<PathBuf>,
}

fn default_h() -> f64 {
    0.05
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::ConfigInvalid(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::ConfigInvalid(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Checks the invariants that do not depend on running anything.
    pub fn validate(&self, command: Command) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::ConfigInvalid(m));
        if let Some(c) = self.command {
            if c != command {
                return bad(format!("config is for `{}`, command line says `{}`", c.name(), command.name()));
            }
        }
        if !(self.h > 1e-4 && self.h < 1.0) {
            return bad(format!("h = {} outside (1e-4, 1)", self.h));
        }
        for (name, v) in self.tolerances.entries() {
            if let Some(v) = v {
                if !(1e-14..=1e-1).contains(&v) {
                    return bad(format!("tolerance `{name}` = {v} outside [1e-14, 1e-1]"));
                }
            }
        }
        if let Some(a) = self.alpha {
            if !(a < 0.0 && a.is_finite()) {
                return bad(format!("alpha must be negative, got {a}"));
            }
        }
        if let Some(f) = &self.nonlinearity {
            f.validate().map_err(|e| CliError::ConfigInvalid(e.to_string()))?;
        }
        if let Some(d) = &self.domain {
            d.validate().map_err(|e| CliError::ConfigInvalid(e.to_string()))?;
        }
        match command {
            Command::Solve | Command::Eigen | Command::Check | Command::Flow if self.domain.is_none() => {
                bad(format!("`{}` needs a domain", command.name()))
            }
            Command::Solve if self.nonlinearity.is_none() => bad("`solve` needs a nonlinearity".into()),
            Command::Check
                if self.nonlinearity.as_ref().is_some_and(|f| !matches!(f, NonlinearitySpec::Linear { .. })) =>
            {
                bad("`check` runs on eigenfunctions; only a Linear nonlinearity is accepted".into())
            }
            Command::Branch => match &self.branch {
                None => bad("`branch` needs branch parameters".into()),
                Some(b) if !(b.lambda > 0.0 && b.s_max > 0.0 && b.ds > 0.0 && b.period.is_none_or(|t| t > 0.0)) => {
                    bad("branch lambda, s_max, ds and period must be positive".into())
                }
                Some(b) if b.n_modes < 8 => bad(format!("branch needs at least 8 modes, got {}", b.n_modes)),
                _ => Ok(()),
            },
            Command::Flow if self.flow.as_ref().is_some_and(|f| f.max_steps == 0) => {
                bad("flow max_steps must be positive".into())
            }
            Command::Check if self.check.as_ref().is_some_and(|c| c.lines == 0) => {
                bad("check needs at least one line".into())
            }
            _ => Ok(()),
        }
    }

    /// SHA-256 of the canonical JSON form.
    pub fn digest(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        hex(&Sha256::digest(text.as_bytes()))
    }

    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(-1.0)
    }
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> RunConfig {
        RunConfig::from_json(text).unwrap()
    }

    #[test]
    fn minimal_eigen_config() {
        let c = cfg(r#"{"domain": {"kind": "Disk", "radius": 1.0}, "h": 0.05}"#);
        c.validate(Command::Eigen).unwrap();
        assert_eq!(c.alpha(), -1.0);
        assert!(c.validate(Command::Branch).is_err());
    }

    #[test]
    fn bounds_are_enforced() {
        for text in [
            r#"{"domain": {"kind": "Disk", "radius": 1.0}, "h": -0.1}"#,
            r#"{"domain": {"kind": "Disk", "radius": 1.0}, "h": 1.5}"#,
            r#"{"domain": {"kind": "Disk", "radius": 1.0}, "tolerances": {"eigen": 1e-16}}"#,
            r#"{"domain": {"kind": "Disk", "radius": 1.0}, "tolerances": {"spread": 0.5}}"#,
            r#"{"domain": {"kind": "Disk", "radius": -1.0}}"#,
            r#"{"domain": {"kind": "Disk", "radius": 1.0}, "alpha": 1.0}"#,
            r#"{"command": "flow", "domain": {"kind": "Disk", "radius": 1.0}}"#,
        ] {
            assert!(matches!(cfg(text).validate(Command::Eigen), Err(CliError::ConfigInvalid(_))), "{text}");
        }
        let ac = cfg(r#"{"domain": {"kind": "Disk", "radius": 1.0}, "nonlinearity": {"kind": "AllenCahn"}}"#);
        assert!(ac.validate(Command::Check).is_err());
        ac.validate(Command::Solve).unwrap();
        assert!(RunConfig::from_json(r#"{"h": 0.1, "typo": 1}"#).is_err());
        assert!(RunConfig::from_json(r#"{"tolerances": {"eigen_tol": 1e-8}}"#).is_err());
    }

    #[test]
    fn digest_is_stable_and_sensitive() {
        let a = cfg(r#"{"domain": {"kind": "Disk", "radius": 1.0}, "h": 0.05}"#);
        let b = cfg(r#"{"h": 0.05, "domain": {"radius": 1.0, "kind": "Disk"}}"#);
        let c = cfg(r#"{"domain": {"kind": "Disk", "radius": 1.0}, "h": 0.04}"#);
        assert_eq!(a.digest(), b.digest());
        assert_ne!(a.digest(), c.digest());
        assert_eq!(a.digest().len(), 64);
    }

    #[test]
    fn commands_parse() {
        for c in ["solve", "eigen", "check", "flow", "branch", "report"] {
            assert_eq!(c.parse::<Command>().unwrap().name(), c);
        }
        assert!("mesh".parse::<Command>().is_err());
    }
}
