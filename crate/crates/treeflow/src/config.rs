//! Experiment configuration: JSON file plus flag overrides (flags win).

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::averaging::AveragingSpec;
use crate::datum::InitialDatum;
use crate::error::{Error, Result};
use crate::solver::{ClosureRule, TimeGrid};
use crate::tree::TreeShape;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeConfig {
    pub m: usize,
    pub depth: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub t_end: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub operator: AveragingSpec,
    pub datum: InitialDatum,
    pub tree: TreeConfig,
    pub grid: GridConfig,
    pub closure: ClosureRule,
    #[serde(default)]
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let config: ExperimentConfig = serde_json::from_str(&text)?;
        config.validate()?;
        Ok(config)
    }

    /// Cross-field consistency.
    pub fn validate(&self) -> Result<()> {
        if self.operator.arity() != self.tree.m {
            return Err(Error::Config(format!(
                "operator arity {} does not match tree.m {}",
                self.operator.arity(),
                self.tree.m
            )));
        }
        match (&self.closure, &self.datum) {
            (ClosureRule::GeometricEnvelope { .. }, InitialDatum::Geometric { .. }) => {}
            (ClosureRule::EigenExtension { .. }, InitialDatum::ScalingEigen { .. }) => {}
            (ClosureRule::ZeroBoundary, _) => {}
            (closure, datum) => {
                return Err(Error::Config(format!(
                    "closure {closure:?} is incompatible with datum class {}",
                    datum_class(datum)
                )))
            }
        }
        if let InitialDatum::Geometric { lambda, .. } = &self.datum {
            if !(*lambda > 0.0 && *lambda < 1.0) {
                return Err(Error::Config(format!(
                    "geometric datum needs lambda in (0,1), got {lambda}"
                )));
            }
        }
        Ok(())
    }

    /// Materialize the runtime objects.
    pub fn build(&self) -> Result<(TreeShape, AveragingSpec, InitialDatum, TimeGrid, ClosureRule)> {
        self.validate()?;
        let shape = TreeShape::new(self.tree.m, self.tree.depth)?;
        let grid = TimeGrid::new(self.grid.t_end, self.grid.steps)?;
        Ok((shape, self.operator, self.datum.clone(), grid, self.closure))
    }
}

fn datum_class(datum: &InitialDatum) -> &'static str {
    match datum {
        InitialDatum::FiniteSupport { .. } => "finite_support",
        InitialDatum::Geometric { .. } => "geometric",
        InitialDatum::LevelFunction { .. } => "level_function",
        InitialDatum::ScalingEigen { .. } => "scaling_eigen",
    }
}
