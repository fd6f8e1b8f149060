use std::io::Write;
use std::path::Path;

use stopgame::evaluator::{attacker_best_response_vi, GridAttackerPolicy};
use stopgame::policy::{AttackerMixture, AttackerPolicy, ConstantAttacker, DefenderMixture, DefenderPolicy};
use stopgame::sim::{play, run_batch};
use stopgame::{BaselineDefender, MixedStrategy, Player};

use super::create_file;
use crate::error::{io_err, CliError, CliResult};
use crate::spec::Experiment;
use crate::stats::mean_ci;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum DefenderChoice {
    Tfp,
    AlertAny,
    Oracle,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum AttackerChoice {
    Tfp,
    Br,
}

impl DefenderChoice {
    fn name(self) -> &'static str {
        match self {
            DefenderChoice::Tfp => "tfp",
            DefenderChoice::AlertAny => "alert-any",
            DefenderChoice::Oracle => "oracle",
        }
    }
}

impl AttackerChoice {
    fn name(self) -> &'static str {
        match self {
            AttackerChoice::Tfp => "tfp",
            AttackerChoice::Br => "br",
        }
    }
}

/// `(mean, 95% half-width)` of each episode statistic.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvalReport {
    pub episodes: usize,
    pub reward: (f64, f64),
    pub length: (f64, f64),
    pub intrusion_len: (f64, f64),
}

fn load_mix(path: &Path, player: Player) -> CliResult<MixedStrategy> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("missing strategy artifact {}: {e}", path.display())))?;
    let mix: MixedStrategy = serde_json::from_str(&text).map_err(|e| io_err(path, e))?;
    if mix.player != player {
        return Err(CliError::Input(format!("{} holds a {} strategy", path.display(), mix.player.name())));
    }
    Ok(mix)
}

/// Plays `episodes` episodes of the chosen pair. T-FP artifacts are read from
/// the first seed's directory under the spec's output directory; the T-FP
/// attacker always reacts to the T-FP defender average, and a best-response
/// attacker is computed against the chosen defender. Writes
/// `evaluate_<defender>_<attacker>.csv` next to the artifacts.
pub fn evaluate(
    exp: &Experiment,
    defender: DefenderChoice,
    attacker: AttackerChoice,
    episodes: usize,
) -> CliResult<EvalReport> {
    if episodes == 0 {
        return Err(CliError::Input("--episodes must be positive".into()));
    }
    let needs_tfp = defender == DefenderChoice::Tfp || attacker == AttackerChoice::Tfp;
    let dir = exp.seed_dir(&exp.outputs, exp.eval.seeds[0]);
    let tfp = if needs_tfp {
        let d = load_mix(&dir.join("defender.json"), Player::Defender)?;
        let a = load_mix(&dir.join("attacker.json"), Player::Attacker)?;
        if d.stops() != exp.game.stops || a.stops() != exp.game.stops {
            return Err(CliError::Input(format!(
                "artifacts in {} do not match L = {}",
                dir.display(),
                exp.game.stops
            )));
        }
        Some((d, a))
    } else {
        None
    };
    let d_mix = tfp.as_ref().map(|(d, _)| DefenderMixture::new(d));
    let a_mix = tfp
        .as_ref()
        .zip(d_mix.as_ref())
        .map(|((_, a), d)| AttackerMixture::new(a, d));

    let pi1: &dyn DefenderPolicy = match defender {
        DefenderChoice::Tfp => d_mix.as_ref().expect("loaded above"),
        DefenderChoice::AlertAny => &BaselineDefender::AlertOnAny,
        DefenderChoice::Oracle => &BaselineDefender::OracleIntrusionTime,
    };
    // The defender's filter models the T-FP attacker when one exists.
    let filter: &dyn AttackerPolicy = match &a_mix {
        Some(a) => a,
        None => &ConstantAttacker::NEVER,
    };
    let br;
    let pi2: &dyn AttackerPolicy = match attacker {
        AttackerChoice::Tfp => a_mix.as_ref().expect("loaded above"),
        AttackerChoice::Br => {
            let sol = attacker_best_response_vi(pi1, filter, &exp.game, &exp.vi())?;
            if !sol.converged {
                return Err(CliError::Numeric("attacker best response did not converge".into()));
            }
            br = GridAttackerPolicy::new(sol);
            &br
        }
    };

    let batch = run_batch(exp.game.seed, episodes, |r| play(pi1, pi2, filter, &exp.game, r, None));
    let pick = |f: fn(&stopgame::sim::EpisodeSummary) -> f64| {
        let xs: Vec<f64> = batch.iter().map(f).collect();
        let (m, h, _) = mean_ci(&xs);
        (m, h)
    };
    let report = EvalReport {
        episodes,
        reward: pick(|e| e.discounted_return),
        length: pick(|e| e.length as f64),
        intrusion_len: pick(|e| e.intrusion_len as f64),
    };

    let rows = [
        ("reward", report.reward),
        ("episode_length", report.length),
        ("intrusion_length", report.intrusion_len),
    ];
    for (name, (m, h)) in rows {
        println!("{name}: {m:.4} ± {h:.4}");
    }
    std::fs::create_dir_all(&exp.outputs).map_err(|e| io_err(&exp.outputs, e))?;
    let path = exp
        .outputs
        .join(format!("evaluate_{}_{}.csv", defender.name(), attacker.name()));
    let mut f = create_file(&path)?;
    let mut w = csv::Writer::from_writer(&mut f);
    let csv_err = |e: csv::Error| io_err(&path, e);
    w.write_record(["metric", "mean", "ci_low", "ci_high", "episodes"]).map_err(csv_err)?;
    for (name, (m, h)) in rows {
        w.write_record(&[
            name.to_string(),
            m.to_string(),
            (m - h).to_string(),
            (m + h).to_string(),
            episodes.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| io_err(&path, e))?;
    drop(w);
    f.flush().map_err(|e| io_err(&path, e))?;
    Ok(report)
}
