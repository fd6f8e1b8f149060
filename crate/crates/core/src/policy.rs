//! Behavioral policies as seen by the simulator and the solvers.
//!
//! A defender policy maps what the defender knows (belief, stops left, whether
//! the latest observation raised an alert) to a stop probability. Attacker
//! policies additionally see the true state.

use crate::game::{AttackerStop, State};
use crate::strategies::{logit, sigmoid, BaselineDefender, MixedStrategy, Player, ThresholdStrategy};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DefenderView {
    pub belief: f64,
    pub stops: usize,
    pub alert: bool,
    /// True state flag. Only privileged baselines may look at it.
    pub intrusion: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AttackerView {
    pub state: State,
    pub belief: f64,
    pub stops: usize,
    pub alert: bool,
}

pub trait DefenderPolicy: Sync {
    fn stop_prob(&self, view: &DefenderView) -> f64;

    /// Whether the policy reads the alert flag; solvers then track it as state.
    fn uses_alert(&self) -> bool {
        false
    }
}

pub trait AttackerPolicy: Sync {
    fn stop_prob(&self, view: &AttackerView) -> f64;

    /// Stop probabilities in both live states at one defender context.
    fn stop_probs(&self, belief: f64, stops: usize, alert: bool) -> AttackerStop {
        let at = |state| {
            self.stop_prob(&AttackerView {
                state,
                belief,
                stops,
                alert,
            })
        };
        AttackerStop::new(at(State::NoIntrusion), at(State::Intrusion))
    }

    fn uses_alert(&self) -> bool {
        false
    }
}

impl<T: DefenderPolicy + ?Sized> DefenderPolicy for &T {
    fn stop_prob(&self, view: &DefenderView) -> f64 {
        (**self).stop_prob(view)
    }
    fn uses_alert(&self) -> bool {
        (**self).uses_alert()
    }
}

impl<T: AttackerPolicy + ?Sized> AttackerPolicy for &T {
    fn stop_prob(&self, view: &AttackerView) -> f64 {
        (**self).stop_prob(view)
    }
    fn stop_probs(&self, belief: f64, stops: usize, alert: bool) -> AttackerStop {
        (**self).stop_probs(belief, stops, alert)
    }
    fn uses_alert(&self) -> bool {
        (**self).uses_alert()
    }
}

/// Gates of one steepness at sorted thresholds, averaged.
///
/// Gates whose argument exceeds `SATURATION` in magnitude are counted as
/// exactly 0 or 1; the neglected mass is below 1e-17 per entry.
#[derive(Clone, Debug)]
struct GateBank {
    steepness: f64,
    sorted: Vec<f64>,
}

const SATURATION: f64 = 40.0;

impl GateBank {
    fn new(mut thresholds: Vec<f64>, steepness: f64) -> Self {
        thresholds.sort_by(f64::total_cmp);
        Self {
            steepness,
            sorted: thresholds,
        }
    }

    #[inline]
    fn mean(&self, p: f64) -> f64 {
        if p <= 0.0 {
            return 0.0;
        }
        if p >= 1.0 {
            return 1.0;
        }
        let x = logit(p);
        let w = SATURATION / self.steepness;
        let lo = self.sorted.partition_point(|&a| a < x - w);
        let hi = self.sorted.partition_point(|&a| a <= x + w);
        let mut sum = lo as f64;
        for &a in &self.sorted[lo..hi] {
            sum += sigmoid(self.steepness * (x - a));
        }
        sum / self.sorted.len() as f64
    }
}

/// Behavioral average of a defender buffer, tabulated per `l` for fast
/// evaluation.
#[derive(Clone, Debug)]
pub struct DefenderMixture {
    banks: Vec<GateBank>,
}

impl DefenderMixture {
    pub fn new(mix: &MixedStrategy) -> Self {
        assert_eq!(mix.player, Player::Defender, "defender buffer expected");
        let stops = mix.stops();
        let banks = (0..stops)
            .map(|i| GateBank::new(mix.buffer.iter().map(|t| t[i]).collect(), mix.steepness))
            .collect();
        Self { banks }
    }

    pub fn pure(s: &ThresholdStrategy) -> Self {
        Self::new(&MixedStrategy::singleton(s.clone()))
    }

    pub fn stops(&self) -> usize {
        self.banks.len()
    }

    #[inline]
    pub fn prob(&self, b1: f64, l: usize) -> f64 {
        self.banks[l - 1].mean(b1)
    }
}

impl DefenderPolicy for DefenderMixture {
    #[inline]
    fn stop_prob(&self, view: &DefenderView) -> f64 {
        self.prob(view.belief, view.stops)
    }
}

/// Behavioral average of an attacker buffer. Each entry reacts to the stop
/// probability of `reference`, the defender strategy the attacker plays
/// against.
#[derive(Clone, Debug)]
pub struct AttackerMixture<'a> {
    reference: &'a DefenderMixture,
    hazard: Vec<f64>,
    exits: Vec<GateBank>,
}

impl<'a> AttackerMixture<'a> {
    pub fn new(mix: &MixedStrategy, reference: &'a DefenderMixture) -> Self {
        assert_eq!(mix.player, Player::Attacker, "attacker buffer expected");
        let stops = mix.stops();
        assert_eq!(stops, reference.stops(), "stop budgets differ");
        let n = mix.len() as f64;
        let hazard = (0..stops)
            .map(|i| mix.buffer.iter().map(|t| sigmoid(t[i])).sum::<f64>() / n)
            .collect();
        let exits = (0..stops)
            .map(|i| {
                GateBank::new(
                    mix.buffer.iter().map(|t| t[stops + i]).collect(),
                    mix.steepness,
                )
            })
            .collect();
        Self {
            reference,
            hazard,
            exits,
        }
    }

    pub fn pure(s: &ThresholdStrategy, reference: &'a DefenderMixture) -> Self {
        Self::new(&MixedStrategy::singleton(s.clone()), reference)
    }

    #[inline]
    pub fn probs(&self, b1: f64, l: usize) -> AttackerStop {
        let pi1 = self.reference.prob(b1, l);
        AttackerStop::new(self.hazard[l - 1] * (1.0 - pi1), self.exits[l - 1].mean(pi1))
    }
}

impl AttackerPolicy for AttackerMixture<'_> {
    #[inline]
    fn stop_prob(&self, view: &AttackerView) -> f64 {
        self.probs(view.belief, view.stops).get(view.state)
    }

    #[inline]
    fn stop_probs(&self, belief: f64, stops: usize, _alert: bool) -> AttackerStop {
        self.probs(belief, stops)
    }
}

impl DefenderPolicy for BaselineDefender {
    fn stop_prob(&self, view: &DefenderView) -> f64 {
        let o = usize::from(view.alert);
        if self.action(o, view.intrusion).is_stop() {
            1.0
        } else {
            0.0
        }
    }

    fn uses_alert(&self) -> bool {
        *self == BaselineDefender::AlertOnAny
    }
}

/// Stops with a fixed probability everywhere.
#[derive(Clone, Copy, Debug)]
pub struct ConstantDefender(pub f64);

impl DefenderPolicy for ConstantDefender {
    fn stop_prob(&self, _: &DefenderView) -> f64 {
        self.0
    }
}

/// Fixed per-state stop probabilities.
#[derive(Clone, Copy, Debug)]
pub struct ConstantAttacker(pub AttackerStop);

impl ConstantAttacker {
    pub const NEVER: ConstantAttacker = ConstantAttacker(AttackerStop {
        idle: 0.0,
        intruding: 0.0,
    });
}

impl AttackerPolicy for ConstantAttacker {
    fn stop_prob(&self, view: &AttackerView) -> f64 {
        self.0.get(view.state)
    }
}

/// Defender policy given by a closure.
pub struct FnDefender<F>(pub F);

impl<F: Fn(&DefenderView) -> f64 + Sync> DefenderPolicy for FnDefender<F> {
    fn stop_prob(&self, view: &DefenderView) -> f64 {
        (self.0)(view)
    }
}

/// Attacker policy given by a closure.
pub struct FnAttacker<F>(pub F);

impl<F: Fn(&AttackerView) -> f64 + Sync> AttackerPolicy for FnAttacker<F> {
    fn stop_prob(&self, view: &AttackerView) -> f64 {
        (self.0)(view)
    }
}
