//! Run configuration: one JSON document shared by every CLI subcommand.

use crate::energy::Problem;
use crate::evolution::EvolutionConfig;
use crate::lattice::BoxDomain;
use crate::model::{Nonlinearity, Potential};
use crate::solver::{default_starts, SolveConfig, Start};
use crate::{Error, Result};
use serde::Deserialize;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSection {
    pub d: usize,
    #[serde(rename = "L")]
    pub l: i64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub tol: f64,
    pub max_iters: usize,
    pub step_init: f64,
    pub step_shrink: f64,
    pub decrease_coeff: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iters: 200_000,
            step_init: 1.0,
            step_shrink: 0.5,
            decrease_coeff: 1e-4,
        }
    }
}

fn default_eps_neg() -> f64 {
    1e-7
}

fn default_trials() -> usize {
    8
}

fn default_refine_probes() -> usize {
    8
}

/// The whole run configuration. `mass` drives `solve`/`evolve`; `mass_grid`
/// drives `scan`/`verify`; `evolution` drives `evolve`. Optional knobs have
/// working defaults so minimal configs stay minimal.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub domain: DomainSection,
    pub potential: Potential<f64>,
    pub nonlinearity: Nonlinearity<f64>,
    #[serde(default)]
    pub mass: Option<f64>,
    #[serde(default)]
    pub mass_grid: Option<Vec<f64>>,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub evolution: Option<EvolutionConfig<f64>>,
    /// Negativity margin for threshold decisions.
    #[serde(default = "default_eps_neg")]
    pub eps_neg: f64,
    /// Witness height for the analytic upper bound; defaults to the
    /// nonlinearity's own witness, then 1.
    #[serde(default)]
    pub xi: Option<f64>,
    /// Random trials for constant estimation.
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Bisection probes when a threshold bracket is refined.
    #[serde(default = "default_refine_probes")]
    pub refine_probes: usize,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub seed: Option<u64>,
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_str(&text)
    }

    pub fn from_str(text: &str) -> Result<Self> {
        let cfg: Self =
            serde_json::from_str(text).map_err(|e| Error::Parse(format!("invalid config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if let Some(a) = self.mass {
            if !(a > 0.0) {
                return Err(Error::Parse(format!("field `mass` must be positive, got {a}")));
            }
        }
        if let Some(grid) = &self.mass_grid {
            if grid.is_empty() {
                return Err(Error::Parse("field `mass_grid` must be nonempty".into()));
            }
            for w in grid.windows(2) {
                if !(w[1] > w[0]) {
                    return Err(Error::Parse(
                        "field `mass_grid` must be strictly increasing".into(),
                    ));
                }
            }
            if !(grid[0] > 0.0) {
                return Err(Error::Parse("field `mass_grid` must be positive".into()));
            }
        }
        if !(self.eps_neg > 0.0) {
            return Err(Error::Parse("field `eps_neg` must be positive".into()));
        }
        if self.trials < 1 {
            return Err(Error::Parse("field `trials` must be at least 1".into()));
        }
        if let Some(ev) = &self.evolution {
            ev.validate().map_err(|e| Error::Parse(format!("field `evolution`: {e}")))?;
        }
        // surfacing domain/model errors here keeps "bad config" one exit code
        self.problem().map(|_| ())
    }

    pub fn problem(&self) -> Result<Problem<f64>> {
        let domain = BoxDomain::new(self.domain.d, self.domain.l)
            .map_err(|e| Error::Parse(format!("field `domain`: {e}")))?;
        Problem::new(domain, self.potential.clone(), self.nonlinearity.clone())
            .map_err(|e| Error::Parse(format!("invalid model: {e}")))
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(1)
    }

    /// Solver settings with the standard multi-start list for this problem.
    pub fn solve_config(&self, problem: &Problem<f64>, seed: u64) -> SolveConfig<f64> {
        let starts: Vec<Start<f64>> =
            default_starts(&problem.domain, problem.nonlinearity.xi_witness());
        let mut cfg = SolveConfig::new(seed, starts);
        cfg.tol = self.solver.tol;
        cfg.max_iters = self.solver.max_iters;
        cfg.step_init = self.solver.step_init;
        cfg.step_shrink = self.solver.step_shrink;
        cfg.decrease_coeff = self.solver.decrease_coeff;
        cfg
    }

    pub fn xi(&self) -> f64 {
        self.xi
            .or_else(|| self.nonlinearity.xi_witness())
            .unwrap_or(1.0)
    }

    pub fn require_mass(&self) -> Result<f64> {
        self.mass
            .ok_or_else(|| Error::Parse("missing field `mass`".into()))
    }

    pub fn require_mass_grid(&self) -> Result<&[f64]> {
        self.mass_grid
            .as_deref()
            .ok_or_else(|| Error::Parse("missing field `mass_grid`".into()))
    }

    pub fn require_evolution(&self) -> Result<&EvolutionConfig<f64>> {
        self.evolution
            .as_ref()
            .ok_or_else(|| Error::Parse("missing field `evolution`".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "domain": {"d": 1, "L": 5},
        "potential": {"kind": "zero"},
        "nonlinearity": {"kind": "power", "p": 4.0},
        "mass": 4.0
    }"#;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let cfg = RunConfig::from_str(MINIMAL).unwrap();
        assert_eq!(cfg.require_mass().unwrap(), 4.0);
        assert_eq!(cfg.solver.tol, 1e-9);
        assert_eq!(cfg.eps_neg, 1e-7);
        assert_eq!(cfg.seed(), 1);
        assert_eq!(cfg.xi(), 1.0);
        let prob = cfg.problem().unwrap();
        assert_eq!(prob.domain.site_count(), 11);
        assert!(matches!(cfg.require_mass_grid(), Err(Error::Parse(m)) if m.contains("mass_grid")));
        assert!(matches!(cfg.require_evolution(), Err(Error::Parse(m)) if m.contains("evolution")));
    }

    #[test]
    fn missing_mass_is_named() {
        let cfg = RunConfig::from_str(
            r#"{"domain": {"d": 1, "L": 5},
                "potential": {"kind": "zero"},
                "nonlinearity": {"kind": "power", "p": 4.0}}"#,
        )
        .unwrap();
        let err = cfg.require_mass().unwrap_err();
        assert!(err.to_string().contains("`mass`"));
    }

    #[test]
    fn bad_configs_are_rejected() {
        assert!(RunConfig::from_str("{").is_err());
        // unknown field
        assert!(RunConfig::from_str(
            r#"{"domain": {"d": 1, "L": 5}, "potential": {"kind": "zero"},
                "nonlinearity": {"kind": "power", "p": 4.0}, "surprise": 1}"#
        )
        .is_err());
        // invalid model parameter
        assert!(RunConfig::from_str(
            r#"{"domain": {"d": 1, "L": 5}, "potential": {"kind": "zero"},
                "nonlinearity": {"kind": "power", "p": 1.0}}"#
        )
        .is_err());
        // non-increasing grid
        assert!(RunConfig::from_str(
            r#"{"domain": {"d": 1, "L": 5}, "potential": {"kind": "zero"},
                "nonlinearity": {"kind": "power", "p": 4.0}, "mass_grid": [2.0, 1.0]}"#
        )
        .is_err());
    }

    #[test]
    fn full_config_round_trip() {
        let cfg = RunConfig::from_str(
            r#"{
            "domain": {"d": 1, "L": 10},
            "potential": {"kind": "well", "c": 1.0},
            "nonlinearity": {"kind": "modulated", "base": {"kind": "power", "p": 4.0}, "b0": 1.0},
            "mass_grid": [0.5, 1.0, 2.0],
            "solver": {"tol": 1e-8, "max_iters": 1000, "step_init": 1.0,
                       "step_shrink": 0.5, "decrease_coeff": 1e-4},
            "evolution": {"dt": 1e-3, "T": 1.0, "scheme": "strang_split"},
            "eps_neg": 1e-6,
            "xi": 0.5,
            "seed": 7,
            "output_dir": "out"
        }"#,
        )
        .unwrap();
        assert_eq!(cfg.require_mass_grid().unwrap().len(), 3);
        assert_eq!(cfg.solver.max_iters, 1000);
        assert_eq!(cfg.require_evolution().unwrap().t_final, 1.0);
        assert_eq!(cfg.xi(), 0.5);
        assert_eq!(cfg.seed(), 7);
    }
}
