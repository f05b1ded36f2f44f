//! Flat JSON experiment configuration.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use semimart_core::paths::{PartitionKind, SemimartingaleSpec};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    ItoVerify,
    RiemannConverge,
    Metrics,
    IntegratorProbe,
    Simulate,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Self::ItoVerify => "ito-verify",
            Self::RiemannConverge => "riemann-converge",
            Self::Metrics => "metrics",
            Self::IntegratorProbe => "integrator-probe",
            Self::Simulate => "simulate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PartitionChoice {
    Dyadic,
    JumpRefined,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub experiment: Experiment,

    pub z0: f64,
    pub mu: f64,
    pub sigma: f64,
    pub jump_intensity: f64,
    pub jump_mean: f64,
    pub jump_sd: f64,
    pub horizon: f64,

    /// Hermite truncation `N`.
    pub truncation: usize,
    /// Gauss–Hermite order `Q`.
    pub quad_order: usize,

    pub partition: PartitionChoice,
    /// Dyadic refinement levels.
    pub levels: Vec<u32>,
    /// Simulation grid cells; `0` means `2^max(levels)`.
    pub grid_cells: usize,

    pub replicas: usize,
    pub seed: u64,
    pub output_dir: PathBuf,

    /// Series truncation for the UCP and Émery estimators.
    pub n_max: usize,
    /// Seminorm level for dual distances.
    pub dual_r: i32,
    /// Threshold in UCP probability estimates.
    pub eps: f64,

    pub tolerances: BTreeMap<String, f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: Experiment::Simulate,
            z0: 0.0,
            mu: 0.0,
            sigma: 1.0,
            jump_intensity: 0.0,
            jump_mean: 0.0,
            jump_sd: 1.0,
            horizon: 1.0,
            truncation: 64,
            quad_order: 160,
            partition: PartitionChoice::JumpRefined,
            levels: vec![4, 6, 8],
            grid_cells: 0,
            replicas: 8,
            seed: 0,
            output_dir: PathBuf::from("output"),
            n_max: 1,
            dual_r: 1,
            eps: 0.05,
            tolerances: BTreeMap::new(),
        }
    }
}

/// Known tolerance names.
pub const TOLERANCE_NAMES: [&str; 5] = [
    "exact",
    "ito_median",
    "ito_slope",
    "riemann_slope",
    "continuity",
];

/// 1-based line of the first occurrence of `"field"` as a key, if any.
fn field_line(source: &str, field: &str) -> Option<usize> {
    let key = format!("\"{field}\"");
    source.lines().position(|l| l.contains(&key)).map(|i| i + 1)
}

impl ExperimentConfig {
    /// Parses and validates a config document.
    pub fn from_json(source: &str) -> Result<Self, CliError> {
        let config: Self = serde_json::from_str(source).map_err(|e| CliError::Config {
            line: Some(e.line()),
            message: e.to_string(),
        })?;
        config.validate(Some(source))?;
        Ok(config)
    }

    pub fn spec(&self) -> SemimartingaleSpec {
        SemimartingaleSpec {
            z0: self.z0,
            mu: self.mu,
            sigma: self.sigma,
            jump_intensity: self.jump_intensity,
            jump_mean: self.jump_mean,
            jump_sd: self.jump_sd,
            horizon: self.horizon,
        }
    }

    pub fn partition_kind(&self, level: u32) -> PartitionKind {
        match self.partition {
            PartitionChoice::Dyadic => PartitionKind::Dyadic { level },
            PartitionChoice::JumpRefined => PartitionKind::JumpRefined { level },
        }
    }

    pub fn max_level(&self) -> u32 {
        self.levels.iter().copied().max().unwrap_or(0)
    }

    /// Grid cells actually simulated.
    pub fn resolved_grid_cells(&self) -> usize {
        if self.grid_cells == 0 {
            (1usize << self.max_level()).max(16)
        } else {
            self.grid_cells
        }
    }

    pub fn tolerance(&self, name: &str) -> Option<f64> {
        self.tolerances.get(name).copied()
    }

    /// The config with every default written out.
    pub fn resolved(&self) -> Self {
        Self {
            grid_cells: self.resolved_grid_cells(),
            ..self.clone()
        }
    }

    /// Checks every field against the module preconditions. Errors name the
    /// field and, when `source` is given, the line it appears on.
    pub fn validate(&self, source: Option<&str>) -> Result<(), CliError> {
        let fail = |field: &str, message: String| CliError::Config {
            line: source.and_then(|s| field_line(s, field)),
            message: format!("{field}: {message}"),
        };

        if let Err(e) = self.spec().validate() {
            let message = e.to_string();
            let field = [
                "z0",
                "mu",
                "sigma",
                "jump_intensity",
                "jump_mean",
                "jump_sd",
                "horizon",
            ]
            .into_iter()
            .find(|f| message.contains(&format!(": {f} ")))
            .unwrap_or("model");
            return Err(fail(field, message));
        }
        if self.truncation == 0 {
            return Err(fail("truncation", "must be at least 1".into()));
        }
        if self.quad_order < 2 * self.truncation {
            return Err(fail(
                "quad_order",
                format!(
                    "must be at least 2 × truncation = {}, got {}",
                    2 * self.truncation,
                    self.quad_order
                ),
            ));
        }
        if self.levels.is_empty() {
            return Err(fail("levels", "need at least one refinement level".into()));
        }
        if self.levels.iter().any(|&l| l > 20) {
            return Err(fail("levels", "levels above 20 are not supported".into()));
        }
        if self.levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(fail("levels", "must be strictly increasing".into()));
        }
        if self.grid_cells != 0 && self.grid_cells < (1usize << self.max_level()) {
            return Err(fail(
                "grid_cells",
                format!(
                    "must be 0 or at least 2^{} = {}",
                    self.max_level(),
                    1usize << self.max_level()
                ),
            ));
        }
        if self.replicas == 0 {
            return Err(fail("replicas", "must be at least 1".into()));
        }
        if self.n_max == 0 {
            return Err(fail("n_max", "must be at least 1".into()));
        }
        if self.experiment == Experiment::Metrics && self.horizon < self.n_max as f64 {
            return Err(fail("n_max", format!("exceeds horizon {}", self.horizon)));
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(fail("eps", format!("must be positive, got {}", self.eps)));
        }
        if self.experiment == Experiment::ItoVerify
            && self.partition == PartitionChoice::Dyadic
            && self.jump_intensity > 0.0
        {
            return Err(fail(
                "partition",
                "ito-verify with jumps needs a jump-refined partition".into(),
            ));
        }
        if self.experiment == Experiment::RiemannConverge && self.levels.len() < 2 {
            return Err(fail(
                "levels",
                "riemann-converge needs at least two levels".into(),
            ));
        }
        for (name, value) in &self.tolerances {
            if !TOLERANCE_NAMES.contains(&name.as_str()) {
                return Err(fail(
                    name,
                    format!(
                        "unknown tolerance, expected one of {}",
                        TOLERANCE_NAMES.join(", ")
                    ),
                ));
            }
            if !value.is_finite() {
                return Err(fail(name, "tolerance must be finite".into()));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_missing_fields() {
        let config =
            ExperimentConfig::from_json(r#"{"experiment": "metrics", "horizon": 2}"#).unwrap();
        assert_eq!(config.experiment, Experiment::Metrics);
        assert_eq!(config.horizon, 2.0);
        assert_eq!(config.truncation, 64);
        assert_eq!(config.resolved().grid_cells, 256);
    }

    #[test]
    fn negative_sigma_names_field_and_line() {
        let source = "{\n  \"experiment\": \"ito-verify\",\n  \"sigma\": -1\n}";
        match ExperimentConfig::from_json(source) {
            Err(CliError::Config { line, message }) => {
                assert_eq!(line, Some(3));
                assert!(message.starts_with("sigma"), "{message}");
            }
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_experiment_and_field_are_rejected() {
        let source = "{\n  \"experiment\": \"fly\"\n}";
        assert!(matches!(
            ExperimentConfig::from_json(source),
            Err(CliError::Config { line: Some(2), .. })
        ));
        let source = "{\n  \"experiment\": \"simulate\",\n  \"sigmaa\": 1\n}";
        assert!(matches!(
            ExperimentConfig::from_json(source),
            Err(CliError::Config { line: Some(3), .. })
        ));
    }

    #[test]
    fn quadrature_order_is_checked() {
        let source = r#"{"truncation": 64, "quad_order": 100}"#;
        match ExperimentConfig::from_json(source) {
            Err(CliError::Config { message, .. }) => assert!(message.starts_with("quad_order")),
            other => panic!("expected config error, got {other:?}"),
        }
    }
}
