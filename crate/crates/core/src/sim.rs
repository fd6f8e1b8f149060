//! Episode simulation.
//!
//! The defender's belief is maintained with the Bayes filter against an
//! attacker model (by default the attacker policy actually in play).

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::Result;
use crate::game::{
    filter_or_reset, predicted_mass, reward, transition_row, Action, ActionPair, GameConfig,
    GameState, State,
};
use crate::policy::{AttackerPolicy, AttackerView, DefenderPolicy, DefenderView};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Step {
    pub t: usize,
    pub s: State,
    pub l: usize,
    pub b1: f64,
    pub a1: Action,
    pub a2: Action,
    pub o: usize,
    pub r: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EpisodeTrace {
    pub steps: Vec<Step>,
    pub discounted_return: f64,
    pub defender_stops: Vec<usize>,
    pub attacker_stops: Vec<usize>,
    pub truncated: bool,
}

/// What a training or evaluation batch needs from an episode.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EpisodeSummary {
    pub discounted_return: f64,
    pub length: usize,
    pub intrusion_len: usize,
    pub truncated: bool,
}

/// Result of one simultaneous move.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepOutcome {
    pub actions: ActionPair,
    pub next: State,
    /// Observation emitted by the next state; `None` once terminal.
    pub observation: Option<usize>,
    pub reward: f64,
}

/// Draws both actions, the next state and its observation. Four uniforms are
/// consumed per call whatever the outcome, which keeps random streams aligned
/// across strategy perturbations.
#[allow(clippy::too_many_arguments)]
pub fn sample_step<R: Rng + ?Sized>(
    gs: &GameState,
    b1: f64,
    o: usize,
    pi1: &dyn DefenderPolicy,
    pi2: &dyn AttackerPolicy,
    cfg: &GameConfig,
    rng: &mut R,
) -> StepOutcome {
    debug_assert!(!gs.s.is_terminal());
    let alert = o >= 1;
    let u: [f64; 4] = [rng.gen(), rng.gen(), rng.gen(), rng.gen()];
    let p1 = pi1.stop_prob(&DefenderView {
        belief: b1,
        stops: gs.l,
        alert,
        intrusion: gs.s == State::Intrusion,
    });
    let p2 = pi2.stop_prob(&AttackerView {
        state: gs.s,
        belief: b1,
        stops: gs.l,
        alert,
    });
    let actions = ActionPair::new(Action::from_stop(u[0] < p1), Action::from_stop(u[1] < p2));
    let row = transition_row(gs.s, gs.l, actions, cfg);
    let next = if u[2] < row[0] {
        State::NoIntrusion
    } else if u[2] < row[0] + row[1] {
        State::Intrusion
    } else {
        State::Terminal
    };
    let observation = (!next.is_terminal()).then(|| {
        let pmf = cfg.obs.pmf(next);
        let mut acc = 0.0;
        pmf.iter()
            .position(|p| {
                acc += p;
                u[3] < acc
            })
            .unwrap_or(pmf.len() - 1)
    });
    StepOutcome {
        actions,
        next,
        observation,
        reward: reward(gs.s, gs.l, actions, cfg),
    }
}

/// Plays one episode; the defender's filter models the attacker as `filter`.
pub fn play<R: Rng + ?Sized>(
    pi1: &dyn DefenderPolicy,
    pi2: &dyn AttackerPolicy,
    filter: &dyn AttackerPolicy,
    cfg: &GameConfig,
    rng: &mut R,
    mut trace: Option<&mut EpisodeTrace>,
) -> EpisodeSummary {
    let mut gs = GameState::initial(cfg);
    let mut b1 = 0.0;
    let mut o = cfg.obs.sample(State::NoIntrusion, rng);
    let mut summary = EpisodeSummary::default();
    let mut discount = 1.0;
    loop {
        if gs.t > cfg.horizon_cap {
            summary.truncated = true;
            break;
        }
        let out = sample_step(&gs, b1, o, pi1, pi2, cfg, rng);
        summary.discounted_return += discount * out.reward;
        summary.length = gs.t;
        if gs.s == State::Intrusion {
            summary.intrusion_len += 1;
        }
        discount *= cfg.gamma;
        if let Some(tr) = trace.as_deref_mut() {
            tr.steps.push(Step {
                t: gs.t,
                s: gs.s,
                l: gs.l,
                b1,
                a1: out.actions.defender,
                a2: out.actions.attacker,
                o,
                r: out.reward,
            });
            if out.actions.defender.is_stop() {
                tr.defender_stops.push(gs.t);
            }
            if out.actions.attacker.is_stop() {
                tr.attacker_stops.push(gs.t);
            }
        }
        let Some(next_o) = out.observation else {
            break;
        };
        let q = filter.stop_probs(b1, gs.l, o >= 1);
        let mass = predicted_mass(b1, out.actions.defender, q, gs.l, cfg);
        b1 = filter_or_reset(mass, next_o, &cfg.obs, b1);
        if out.actions.defender.is_stop() {
            gs.l -= 1;
        }
        gs.s = out.next;
        gs.t += 1;
        o = next_o;
    }
    if let Some(tr) = trace {
        tr.discounted_return = summary.discounted_return;
        tr.truncated = summary.truncated;
    }
    summary
}

/// Simulates one episode with the attacker policy itself as the filter model.
pub fn simulate_episode<R: Rng + ?Sized>(
    pi1: &dyn DefenderPolicy,
    pi2: &dyn AttackerPolicy,
    cfg: &GameConfig,
    rng: &mut R,
) -> EpisodeTrace {
    simulate_episode_with_filter(pi1, pi2, pi2, cfg, rng)
}

pub fn simulate_episode_with_filter<R: Rng + ?Sized>(
    pi1: &dyn DefenderPolicy,
    pi2: &dyn AttackerPolicy,
    filter: &dyn AttackerPolicy,
    cfg: &GameConfig,
    rng: &mut R,
) -> EpisodeTrace {
    let mut trace = EpisodeTrace::default();
    play(pi1, pi2, filter, cfg, rng, Some(&mut trace));
    trace
}

/// Random source of episode `i` in the batch seeded with `seed`. Streams are
/// keyed by episode index, so results do not depend on how the batch is split
/// across workers.
pub fn episode_rng(seed: u64, i: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i);
    rng
}

/// Runs `episodes` independent episodes in parallel, returned in index order.
pub fn run_batch<F>(seed: u64, episodes: usize, f: F) -> Vec<EpisodeSummary>
where
    F: Fn(&mut ChaCha8Rng) -> EpisodeSummary + Sync,
{
    (0..episodes as u64)
        .into_par_iter()
        .map(|i| f(&mut episode_rng(seed, i)))
        .collect()
}

/// Sequential mean of the discounted returns.
pub fn mean_return(batch: &[EpisodeSummary]) -> f64 {
    batch.iter().map(|e| e.discounted_return).sum::<f64>() / batch.len() as f64
}

pub fn write_trace_csv<W: Write>(trace: &EpisodeTrace, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "s", "l", "b1", "a1", "a2", "o", "r"])?;
    for st in &trace.steps {
        w.write_record(&[
            st.t.to_string(),
            st.s.index().to_string(),
            st.l.to_string(),
            st.b1.to_string(),
            st.a1.code().to_string(),
            st.a2.code().to_string(),
            st.o.to_string(),
            st.r.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
