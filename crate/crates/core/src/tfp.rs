//! Threshold fictitious play: both players repeatedly learn threshold best
//! responses to the other's average strategy by SPSA ascent on simulated
//! returns, and the learned vectors join the averages.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluator::{self, ViConfig};
use crate::game::GameConfig;
use crate::policy::{AttackerMixture, AttackerPolicy, DefenderMixture};
use crate::sim::{mean_return, play, run_batch, EpisodeSummary};
use crate::spsa::{rademacher, spsa_gradient_along, SpsaConfig};
use crate::strategies::{MixedStrategy, Player, ThresholdStrategy, DEFAULT_STEEPNESS};

/// How an average strategy is played.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MixtureMode {
    /// Per-context mean of the buffer's stop probabilities.
    #[default]
    Behavioral,
    /// One buffer entry drawn per episode. The defender's filter and the
    /// attacker's reference still use behavioral averages.
    SampledPerEpisode,
}

/// Current average strategies of both players.
#[derive(Clone, Copy, Debug)]
pub struct Averages<'a> {
    pub defender: &'a MixedStrategy,
    pub attacker: &'a MixedStrategy,
}

fn initial_theta<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    rademacher(dim, rng)
}

/// SPSA ascent on `objective`, starting from a uniform draw on `{-1,1}^dim`.
/// Both sides of each gradient estimate share the batch seed.
fn ascend_once<R, F>(dim: usize, spsa: &SpsaConfig, rng: &mut R, objective: &F) -> Vec<f64>
where
    R: Rng + ?Sized,
    F: Fn(&[f64], u64) -> f64,
{
    let mut theta = initial_theta(dim, rng);
    for n in 1..=spsa.iterations {
        let delta = rademacher(dim, rng);
        let seed: u64 = rng.gen();
        let g = spsa_gradient_along(|t| objective(t, seed), &theta, spsa.perturbation(n), &delta);
        let a_n = spsa.gain(n);
        for (t, gk) in theta.iter_mut().zip(&g) {
            *t += a_n * gk;
        }
    }
    theta
}

/// Runs `spsa.restarts` ascents and keeps the best-scoring final iterate.
/// `objective(θ, seed, episodes)` estimates the return on a seeded batch.
fn ascend<R, F>(dim: usize, spsa: &SpsaConfig, rng: &mut R, objective: F) -> Vec<f64>
where
    R: Rng + ?Sized,
    F: Fn(&[f64], u64, usize) -> f64,
{
    let batch = |t: &[f64], seed: u64| objective(t, seed, spsa.episodes_per_eval);
    if spsa.restarts <= 1 {
        return ascend_once(dim, spsa, rng, &batch);
    }
    let finals: Vec<Vec<f64>> = (0..spsa.restarts)
        .map(|_| ascend_once(dim, spsa, rng, &batch))
        .collect();
    let seed: u64 = rng.gen();
    let mut best = (f64::NEG_INFINITY, 0);
    for (k, theta) in finals.iter().enumerate() {
        let score = objective(theta, seed, 10 * spsa.episodes_per_eval);
        if score > best.0 {
            best = (score, k);
        }
    }
    finals.into_iter().nth(best.1).expect("at least one restart")
}

/// Learns a defender threshold vector maximizing `J_1` against `attacker`,
/// whose behavior the defender's filter models as `filter`.
pub fn learn_defender_response<R: Rng + ?Sized>(
    attacker: &dyn AttackerPolicy,
    filter: &dyn AttackerPolicy,
    cfg: &GameConfig,
    spsa: &SpsaConfig,
    steepness: f64,
    rng: &mut R,
) -> ThresholdStrategy {
    let theta = ascend(cfg.stops, spsa, rng, |t, seed, episodes| {
        let pi1 = DefenderMixture::pure(&pure(Player::Defender, t, steepness));
        mean_return(&run_batch(seed, episodes, |r| {
            play(&pi1, attacker, filter, cfg, r, None)
        }))
    });
    pure(Player::Defender, &theta, steepness)
}

/// Learns an attacker threshold vector maximizing `J_2 = -J_1` against the
/// defender average `defender`, which the attacker entries react to.
pub fn learn_attacker_response<R: Rng + ?Sized>(
    defender: &DefenderMixture,
    filter: &dyn AttackerPolicy,
    cfg: &GameConfig,
    spsa: &SpsaConfig,
    steepness: f64,
    rng: &mut R,
) -> ThresholdStrategy {
    let theta = ascend(2 * cfg.stops, spsa, rng, |t, seed, episodes| {
        let pi2 = AttackerMixture::pure(&pure(Player::Attacker, t, steepness), defender);
        -mean_return(&run_batch(seed, episodes, |r| {
            play(defender, &pi2, filter, cfg, r, None)
        }))
    });
    pure(Player::Attacker, &theta, steepness)
}

fn pure(player: Player, theta: &[f64], steepness: f64) -> ThresholdStrategy {
    ThresholdStrategy {
        player,
        steepness,
        theta: theta.to_vec(),
    }
}

/// Best response of `player` to the other player's average.
pub fn learn_best_response<R: Rng + ?Sized>(
    player: Player,
    avg: Averages<'_>,
    cfg: &GameConfig,
    spsa: &SpsaConfig,
    mode: MixtureMode,
    rng: &mut R,
) -> Result<ThresholdStrategy> {
    if avg.defender.is_empty() || avg.attacker.is_empty() {
        return Err(Error::EmptyBuffer);
    }
    evaluator::check_pair(avg.defender, avg.attacker, cfg)?;
    let d_avg = DefenderMixture::new(avg.defender);
    let a_avg = AttackerMixture::new(avg.attacker, &d_avg);
    match (player, mode) {
        (Player::Defender, MixtureMode::Behavioral) => Ok(learn_defender_response(
            &a_avg,
            &a_avg,
            cfg,
            spsa,
            avg.defender.steepness,
            rng,
        )),
        (Player::Attacker, MixtureMode::Behavioral) => Ok(learn_attacker_response(
            &d_avg,
            &a_avg,
            cfg,
            spsa,
            avg.attacker.steepness,
            rng,
        )),
        (Player::Defender, MixtureMode::SampledPerEpisode) => {
            let pure_attackers: Vec<AttackerMixture> = (0..avg.attacker.len())
                .map(|j| AttackerMixture::pure(&avg.attacker.get(j), &d_avg))
                .collect();
            let steep = avg.defender.steepness;
            let theta = ascend(cfg.stops, spsa, rng, |t, seed, episodes| {
                let pi1 = DefenderMixture::pure(&pure(Player::Defender, t, steep));
                mean_return(&run_batch(seed, episodes, |r| {
                    let j = r.gen_range(0..pure_attackers.len());
                    play(&pi1, &pure_attackers[j], &a_avg, cfg, r, None)
                }))
            });
            Ok(pure(Player::Defender, &theta, steep))
        }
        (Player::Attacker, MixtureMode::SampledPerEpisode) => {
            let pure_defenders: Vec<DefenderMixture> = (0..avg.defender.len())
                .map(|j| DefenderMixture::pure(&avg.defender.get(j)))
                .collect();
            let steep = avg.attacker.steepness;
            let theta = ascend(2 * cfg.stops, spsa, rng, |t, seed, episodes| {
                let pi2 = AttackerMixture::pure(&pure(Player::Attacker, t, steep), &d_avg);
                -mean_return(&run_batch(seed, episodes, |r| {
                    let j = r.gen_range(0..pure_defenders.len());
                    play(&pure_defenders[j], &pi2, &a_avg, cfg, r, None)
                }))
            });
            Ok(pure(Player::Attacker, &theta, steep))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TfpConfig {
    pub spsa: SpsaConfig,
    pub vi: ViConfig,
    /// Stop once exploitability falls below this.
    pub delta: f64,
    pub max_iters: usize,
    /// Exploitability is evaluated every `stride` iterations.
    pub stride: usize,
    /// Episodes simulated per iteration for the episodic metrics.
    pub episodes: usize,
    pub mode: MixtureMode,
    pub steepness: f64,
}

impl Default for TfpConfig {
    fn default() -> Self {
        Self {
            spsa: SpsaConfig::default(),
            vi: ViConfig::default(),
            delta: 1e-3,
            max_iters: 100,
            stride: 1,
            episodes: 1000,
            mode: MixtureMode::Behavioral,
            steepness: DEFAULT_STEEPNESS,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationMetrics {
    pub iter: usize,
    /// NaN on iterations skipped by the stride.
    pub exploitability: f64,
    /// `J_1` of the defender average against a best-response attacker.
    pub j1_vs_br_attacker: f64,
    /// Simulated `J_1` of the two averages.
    pub j1_defender_mix: f64,
    pub mean_t: f64,
    pub mean_intrusion_len: f64,
}

#[derive(Clone, Debug)]
pub struct TfpState {
    pub defender: MixedStrategy,
    pub attacker: MixedStrategy,
    pub iteration: usize,
    pub history: Vec<IterationMetrics>,
    pub delta: f64,
    /// Latest evaluated exploitability.
    pub exploitability_now: f64,
    pub converged: bool,
}

impl TfpState {
    pub fn write_curve_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        write_curve_csv(&self.history, out)
    }
}

pub const CURVE_HEADER: [&str; 6] = [
    "iter",
    "exploitability",
    "J1_vs_br_attacker",
    "J1_defender_mix",
    "mean_T",
    "mean_intrusion_len",
];

pub fn write_curve_csv<W: std::io::Write>(history: &[IterationMetrics], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CURVE_HEADER)?;
    for m in history {
        w.write_record(&[
            m.iter.to_string(),
            m.exploitability.to_string(),
            m.j1_vs_br_attacker.to_string(),
            m.j1_defender_mix.to_string(),
            m.mean_t.to_string(),
            m.mean_intrusion_len.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

impl TfpConfig {
    pub fn validate(&self) -> Result<()> {
        self.spsa.validate()?;
        if !(self.delta > 0.0) {
            return Err(Error::InvalidConfig("delta must be positive".into()));
        }
        if self.stride == 0 {
            return Err(Error::InvalidConfig("stride must be positive".into()));
        }
        if !(self.steepness > 0.0) {
            return Err(Error::InvalidConfig("steepness must be positive".into()));
        }
        Ok(())
    }
}

/// Simulated metrics of the two averages played against each other.
fn episodic_metrics(
    defender: &MixedStrategy,
    attacker: &MixedStrategy,
    cfg: &GameConfig,
    episodes: usize,
    seed: u64,
) -> (f64, f64, f64) {
    if episodes == 0 {
        return (f64::NAN, f64::NAN, f64::NAN);
    }
    let d = DefenderMixture::new(defender);
    let a = AttackerMixture::new(attacker, &d);
    let batch: Vec<EpisodeSummary> = run_batch(seed, episodes, |r| play(&d, &a, &a, cfg, r, None));
    let n = batch.len() as f64;
    (
        mean_return(&batch),
        batch.iter().map(|e| e.length as f64).sum::<f64>() / n,
        batch.iter().map(|e| e.intrusion_len as f64).sum::<f64>() / n,
    )
}

/// Runs threshold fictitious play from `seed`.
pub fn run_tfp(cfg: &GameConfig, tfp: &TfpConfig, seed: u64) -> Result<TfpState> {
    cfg.validate()?;
    tfp.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l = cfg.stops;
    let mut defender = MixedStrategy::singleton(pure(
        Player::Defender,
        &initial_theta(l, &mut rng),
        tfp.steepness,
    ));
    let mut attacker = MixedStrategy::singleton(pure(
        Player::Attacker,
        &initial_theta(2 * l, &mut rng),
        tfp.steepness,
    ));
    let mut exploitability_now = evaluator::exploitability(&defender, &attacker, cfg, &tfp.vi)?.value();
    let mut history = Vec::new();
    let mut iteration = 0;
    while exploitability_now >= tfp.delta && iteration < tfp.max_iters {
        iteration += 1;
        let (seed_d, seed_a, seed_m): (u64, u64, u64) = (rng.gen(), rng.gen(), rng.gen());
        let avg = Averages {
            defender: &defender,
            attacker: &attacker,
        };
        let (br_d, br_a) = rayon::join(
            || {
                let mut r = ChaCha8Rng::seed_from_u64(seed_d);
                learn_best_response(Player::Defender, avg, cfg, &tfp.spsa, tfp.mode, &mut r)
            },
            || {
                let mut r = ChaCha8Rng::seed_from_u64(seed_a);
                learn_best_response(Player::Attacker, avg, cfg, &tfp.spsa, tfp.mode, &mut r)
            },
        );
        defender.push(&br_d?)?;
        attacker.push(&br_a?)?;

        let (exploit, j1_br) = if iteration % tfp.stride == 0 || iteration == tfp.max_iters {
            let e = evaluator::exploitability(&defender, &attacker, cfg, &tfp.vi)?;
            exploitability_now = e.value();
            (e.value(), -e.attacker_br_value)
        } else {
            (f64::NAN, f64::NAN)
        };
        let (j1_mix, mean_t, mean_int) = episodic_metrics(&defender, &attacker, cfg, tfp.episodes, seed_m);
        history.push(IterationMetrics {
            iter: iteration,
            exploitability: exploit,
            j1_vs_br_attacker: j1_br,
            j1_defender_mix: j1_mix,
            mean_t,
            mean_intrusion_len: mean_int,
        });
    }
    Ok(TfpState {
        defender,
        attacker,
        iteration,
        history,
        delta: tfp.delta,
        exploitability_now,
        converged: exploitability_now < tfp.delta,
    })
}
