use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use stopgame::evaluator::ViConfig;
use stopgame::spsa::SpsaConfig;
use stopgame::strategies::DEFAULT_STEEPNESS;
use stopgame::tfp::{MixtureMode, TfpConfig};
use stopgame::GameConfig;

use crate::error::{io_err, CliError, CliResult};

/// Either a path to a `GameConfig` JSON file or the config itself.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GameSource {
    Path(PathBuf),
    Inline(Box<GameConfig>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalSpec {
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    pub seeds: Vec<u64>,
    #[serde(default = "one")]
    pub stride: usize,
    /// Episodes simulated per iteration for the learning-curve metrics.
    #[serde(default = "default_episodes")]
    pub episodes: usize,
    #[serde(default)]
    pub mode: MixtureMode,
    #[serde(default = "default_steepness")]
    pub steepness: f64,
    #[serde(default = "default_max_sweeps")]
    pub max_sweeps: usize,
}

fn default_grid() -> usize {
    100
}
fn default_tol() -> f64 {
    1e-6
}
fn default_delta() -> f64 {
    1e-3
}
fn default_max_iters() -> usize {
    100
}
fn one() -> usize {
    1
}
fn default_episodes() -> usize {
    1000
}
fn default_steepness() -> f64 {
    DEFAULT_STEEPNESS
}
fn default_max_sweeps() -> usize {
    10_000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub game: GameSource,
    #[serde(default)]
    pub spsa: SpsaConfig,
    pub eval: EvalSpec,
    pub outputs: PathBuf,
}

/// A parsed spec with its game loaded and relative paths resolved against
/// the directory of the spec file.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub game: GameConfig,
    pub spsa: SpsaConfig,
    pub eval: EvalSpec,
    pub outputs: PathBuf,
}

impl Experiment {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_json_str(&text, base)
    }

    pub fn from_json_str(text: &str, base: &Path) -> CliResult<Self> {
        let spec: ExperimentSpec =
            serde_json::from_str(text).map_err(|e| CliError::Input(format!("experiment spec: {e}")))?;
        let game = match spec.game {
            GameSource::Inline(g) => {
                g.validate()?;
                *g
            }
            GameSource::Path(p) => {
                let p = base.join(p);
                let text = std::fs::read_to_string(&p).map_err(|e| io_err(&p, e))?;
                GameConfig::from_json_str(&text).map_err(|e| io_err(&p, e))?
            }
        };
        let exp = Self {
            game,
            spsa: spec.spsa,
            eval: spec.eval,
            outputs: base.join(spec.outputs),
        };
        exp.validate()?;
        Ok(exp)
    }

    fn validate(&self) -> CliResult<()> {
        if self.eval.seeds.is_empty() {
            return Err(CliError::Input("eval.seeds must not be empty".into()));
        }
        let mut seen = self.eval.seeds.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != self.eval.seeds.len() {
            return Err(CliError::Input("eval.seeds contains duplicates".into()));
        }
        if self.eval.grid == 0 {
            return Err(CliError::Input("eval.grid must be positive".into()));
        }
        self.tfp().validate()?;
        Ok(())
    }

    pub fn vi(&self) -> ViConfig {
        ViConfig {
            grid: self.eval.grid,
            tol: self.eval.tol,
            max_sweeps: self.eval.max_sweeps,
        }
    }

    pub fn tfp(&self) -> TfpConfig {
        TfpConfig {
            spsa: self.spsa,
            vi: self.vi(),
            delta: self.eval.delta,
            max_iters: self.eval.max_iters,
            stride: self.eval.stride,
            episodes: self.eval.episodes,
            mode: self.eval.mode,
            steepness: self.eval.steepness,
        }
    }

    pub fn seed_dir(&self, out: &Path, seed: u64) -> PathBuf {
        out.join(format!("seed_{seed}"))
    }
}
