use crate::error::Result;
use crate::game::GameConfig;
use crate::policy::{
    AttackerMixture, AttackerPolicy, ConstantAttacker, DefenderMixture, DefenderPolicy,
};
use crate::strategies::{BaselineDefender, MixedStrategy};

use super::{
    attacker_best_response_vi, defender_best_response_vi, GridAttackerPolicy, ViConfig,
};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Exploitability {
    /// `J_1` of the defender best response at the start of the game.
    pub defender_br_value: f64,
    /// `J_2` of the attacker best response at the start of the game.
    pub attacker_br_value: f64,
    pub converged: bool,
}

impl Exploitability {
    pub fn value(&self) -> f64 {
        self.defender_br_value + self.attacker_br_value
    }
}

/// Exploitability of a strategy pair. `filter` is the attacker model used by
/// the defender's belief when the attacker deviates; normally `pi2` itself.
pub fn exploitability_of(
    pi1: &dyn DefenderPolicy,
    pi2: &dyn AttackerPolicy,
    filter: &dyn AttackerPolicy,
    cfg: &GameConfig,
    vi: &ViConfig,
) -> Result<Exploitability> {
    let (d, a) = rayon::join(
        || defender_best_response_vi(pi2, cfg, vi),
        || attacker_best_response_vi(pi1, filter, cfg, vi),
    );
    let (d, a) = (d?, a?);
    Ok(Exploitability {
        defender_br_value: d.initial_value,
        attacker_br_value: a.initial_value,
        converged: d.converged && a.converged,
    })
}

/// Exploitability of the behavioral averages of two buffers. The attacker
/// entries react to the defender average.
pub fn exploitability(
    pi1: &MixedStrategy,
    pi2: &MixedStrategy,
    cfg: &GameConfig,
    vi: &ViConfig,
) -> Result<Exploitability> {
    check_pair(pi1, pi2, cfg)?;
    let d = DefenderMixture::new(pi1);
    let a = AttackerMixture::new(pi2, &d);
    exploitability_of(&d, &a, &a, cfg, vi)
}

pub(crate) fn check_pair(pi1: &MixedStrategy, pi2: &MixedStrategy, cfg: &GameConfig) -> Result<()> {
    use crate::error::Error;
    use crate::strategies::Player;
    if pi1.player != Player::Defender || pi2.player != Player::Attacker {
        return Err(Error::RoleMismatch {
            expected: "defender and attacker",
            got: "swapped or equal roles",
        });
    }
    if pi1.stops() != cfg.stops || pi2.stops() != cfg.stops {
        return Err(Error::InvalidConfig(format!(
            "strategies sized for L = {} and {}, game has L = {}",
            pi1.stops(),
            pi2.stops(),
            cfg.stops
        )));
    }
    Ok(())
}

/// Exploitability of the alert-on-any defender paired with its best-response
/// attacker. Returns the attacker policy too.
pub fn alert_baseline_exploitability(
    cfg: &GameConfig,
    vi: &ViConfig,
) -> Result<(Exploitability, GridAttackerPolicy)> {
    // The baseline ignores the belief, so the filter model is immaterial.
    let att = attacker_best_response_vi(&BaselineDefender::AlertOnAny, &ConstantAttacker::NEVER, cfg, vi)?;
    let attacker_br_value = att.initial_value;
    let converged = att.converged;
    let policy = GridAttackerPolicy::new(att);
    let def = defender_best_response_vi(&policy, cfg, vi)?;
    Ok((
        Exploitability {
            defender_br_value: def.initial_value,
            attacker_br_value,
            converged: converged && def.converged,
        },
        policy,
    ))
}
