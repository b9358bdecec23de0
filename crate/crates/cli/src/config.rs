//! Scenario configuration files (TOML).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemKind {
    Generic,
    Sweeping,
    Lure,
    #[serde(rename = "builtin-example-1")]
    BuiltinExample1,
    #[serde(rename = "builtin-example-2")]
    BuiltinExample2,
    BuiltinSweepingStatic,
    BuiltinLureRelay,
}

impl ProblemKind {
    /// Kind addressed by a built-in scenario name.
    pub fn from_builtin(name: &str) -> Option<Self> {
        Some(match name {
            "example-1" => ProblemKind::BuiltinExample1,
            "example-2" => ProblemKind::BuiltinExample2,
            "sweeping-static" => ProblemKind::BuiltinSweepingStatic,
            "lure-relay" => ProblemKind::BuiltinLureRelay,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: ScenarioSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub lyapunov: LyapunovSection,
    #[serde(default)]
    pub output: OutputSection,
    pub example1: Option<Example1Section>,
    pub example2: Option<Example2Section>,
    pub sweeping: Option<SweepingSection>,
    pub lure: Option<LureSection>,
    pub generic: Option<GenericSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub kind: ProblemKind,
    pub t0: Option<f64>,
    pub x0: Option<Vec<f64>>,
    pub horizon: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub h: Option<f64>,
    pub h_list: Option<Vec<f64>>,
    /// Number of runs `h, h/2, …, h/2^{k−1}`.
    pub refine: Option<usize>,
    #[serde(default)]
    pub allow_large_step: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LyapunovSection {
    #[serde(default = "yes")]
    pub enabled: bool,
    pub slack: Option<f64>,
}

fn yes() -> bool {
    true
}

impl Default for LyapunovSection {
    fn default() -> Self {
        LyapunovSection { enabled: true, slack: None }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Example1Section {
    #[serde(default = "one")]
    pub p: f64,
    /// Constant gain `g`.
    #[serde(default = "one")]
    pub g: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Example2Section {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SetShape {
    Box,
    Ball,
}

/// `C(t,x) = C₀ + t·velocity + coupling·x` with `C₀` a box or a ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepingSection {
    pub set: SetShape,
    pub lo: Option<Vec<f64>>,
    pub hi: Option<Vec<f64>>,
    pub center: Option<Vec<f64>>,
    pub radius: Option<f64>,
    pub velocity: Option<Vec<f64>>,
    #[serde(default)]
    pub coupling: f64,
    /// `f(t,x) = F x + b`.
    pub f_matrix: Option<Vec<Vec<f64>>>,
    pub f_offset: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeedbackKind {
    Sign,
    Interval,
}

/// `ẋ = G x + B λ`, `y = C x + D λ`, `λ ∈ −F(y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LureSection {
    pub g_matrix: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    pub c: Vec<Vec<f64>>,
    pub d: Vec<Vec<f64>>,
    pub feedback: FeedbackKind,
    #[serde(default = "one")]
    pub gain: f64,
    pub lo: Option<Vec<f64>>,
    pub hi: Option<Vec<f64>>,
    pub p: Option<Vec<Vec<f64>>>,
    /// Growth constant of `Φ⁰`; fitted on samples when absent.
    pub beta1: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OperatorChoice {
    Sign,
    Linear,
    Box,
}

/// `ẋ ∈ F x + b − A(x)` with a fixed operator `A`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenericSection {
    pub f_matrix: Vec<Vec<f64>>,
    pub f_offset: Option<Vec<f64>>,
    pub operator: OperatorChoice,
    #[serde(default = "one")]
    pub gain: f64,
    pub mask: Option<Vec<bool>>,
    pub m: Option<Vec<Vec<f64>>>,
    pub lo: Option<Vec<f64>>,
    pub hi: Option<Vec<f64>>,
}

impl ScenarioConfig {
    pub fn builtin(name: &str) -> Result<Self, CliError> {
        let kind = ProblemKind::from_builtin(name).ok_or_else(|| {
            CliError::Input(format!(
                "--scenario: unknown scenario `{name}`; available: {}",
                sdmi::scenarios::BUILTIN_NAMES.join(", ")
            ))
        })?;
        Ok(ScenarioConfig {
            scenario: ScenarioSection { kind, t0: None, x0: None, horizon: None, seed: 0 },
            solver: SolverSection::default(),
            lyapunov: LyapunovSection::default(),
            output: OutputSection::default(),
            example1: None,
            example2: None,
            sweeping: None,
            lure: None,
            generic: None,
        })
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| CliError::Input(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("{}: cannot read config: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Checks that do not need a constructed problem.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |key: &str, msg: &str| Err(CliError::Input(format!("{key}: {msg}")));
        let s = &self.scenario;
        if let Some(t0) = s.t0 {
            if !t0.is_finite() {
                return bad("scenario.t0", "must be finite");
            }
        }
        if let Some(h) = s.horizon {
            if !(h > 0.0) || !h.is_finite() {
                return bad("scenario.horizon", "must be positive and finite");
            }
        }
        if let Some(x0) = &s.x0 {
            if x0.is_empty() || x0.iter().any(|v| !v.is_finite()) {
                return bad("scenario.x0", "must be a nonempty list of finite numbers");
            }
        }
        let sv = &self.solver;
        if let Some(h) = sv.h {
            if !(h > 0.0) || !h.is_finite() {
                return bad("solver.h", "must be positive and finite");
            }
        }
        if let Some(list) = &sv.h_list {
            if list.len() < 2 {
                return bad("solver.h_list", "needs at least two step sizes");
            }
            if list.iter().any(|h| !(*h > 0.0)) {
                return bad("solver.h_list", "step sizes must be positive");
            }
        }
        if let Some(k) = sv.refine {
            if k < 2 {
                return bad("solver.refine", "needs at least 2 runs");
            }
            if sv.h_list.is_some() {
                return bad("solver.refine", "cannot be combined with solver.h_list");
            }
        }
        if let Some(sl) = self.lyapunov.slack {
            if !(sl >= 0.0) {
                return bad("lyapunov.slack", "must be nonnegative");
            }
        }
        let needs = |present: bool, section: &str| {
            if present {
                Ok(())
            } else {
                Err(CliError::Input(format!("[{section}]: section is required for kind `{section}`")))
            }
        };
        match s.kind {
            ProblemKind::Sweeping => needs(self.sweeping.is_some(), "sweeping"),
            ProblemKind::Lure => needs(self.lure.is_some(), "lure"),
            ProblemKind::Generic => needs(self.generic.is_some(), "generic"),
            ProblemKind::BuiltinExample1 | ProblemKind::BuiltinExample2 => Ok(()),
            ProblemKind::BuiltinSweepingStatic | ProblemKind::BuiltinLureRelay => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_builtin_config() {
        let c = ScenarioConfig::parse("[scenario]\nkind = \"builtin-example-2\"\n").unwrap();
        assert_eq!(c.scenario.kind, ProblemKind::BuiltinExample2);
        assert!(c.lyapunov.enabled);
    }

    #[test]
    fn unknown_key_is_named() {
        let e = ScenarioConfig::parse("[scenario]\nkind = \"builtin-example-2\"\n[solver]\nhh = 0.1\n").unwrap_err();
        assert!(e.to_string().contains("hh"), "{e}");
    }

    #[test]
    fn semantic_errors_name_the_key() {
        let e = ScenarioConfig::parse("[scenario]\nkind = \"builtin-example-2\"\n[solver]\nh = -1.0\n").unwrap_err();
        assert!(e.to_string().starts_with("solver.h"), "{e}");
        let e = ScenarioConfig::parse("[scenario]\nkind = \"lure\"\n").unwrap_err();
        assert!(e.to_string().contains("[lure]"), "{e}");
    }
}
