//! Threshold strategies, their fictitious-play averages and the smoothed
//! stopping gate shared by both.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::State;

pub const DEFAULT_STEEPNESS: f64 = 20.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Player {
    Defender,
    Attacker,
}

impl Player {
    pub fn name(self) -> &'static str {
        match self {
            Player::Defender => "defender",
            Player::Attacker => "attacker",
        }
    }

    /// Length of the threshold vector for a game with `stops` defender stops.
    pub fn dim(self, stops: usize) -> usize {
        match self {
            Player::Defender => stops,
            Player::Attacker => 2 * stops,
        }
    }

    fn stops_for_dim(self, dim: usize) -> Option<usize> {
        match self {
            Player::Defender if dim > 0 => Some(dim),
            Player::Attacker if dim > 0 && dim % 2 == 0 => Some(dim / 2),
            _ => None,
        }
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[inline]
pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Smoothed step from 0 to 1 as `b` crosses `σ(a)`:
/// `(1 + (b(1-σ(a)) / (σ(a)(1-b)))^-k)^-1`, which equals `σ(k (logit b - a))`.
#[inline]
pub fn smooth_gate(a: f64, b: f64, steepness: f64) -> f64 {
    if b <= 0.0 {
        0.0
    } else if b >= 1.0 {
        1.0
    } else {
        sigmoid(steepness * (logit(b) - a))
    }
}

/// A pure threshold strategy. Entries are indexed by `l - 1` for the
/// defender; the attacker uses `theta[l - 1]` in state 0 and
/// `theta[L + l - 1]` in state 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawThreshold")]
pub struct ThresholdStrategy {
    pub player: Player,
    pub steepness: f64,
    pub theta: Vec<f64>,
}

#[derive(Deserialize)]
struct RawThreshold {
    player: Player,
    #[serde(default = "default_steepness")]
    steepness: f64,
    theta: Vec<f64>,
}

fn default_steepness() -> f64 {
    DEFAULT_STEEPNESS
}

impl TryFrom<RawThreshold> for ThresholdStrategy {
    type Error = Error;

    fn try_from(raw: RawThreshold) -> Result<Self> {
        ThresholdStrategy::with_steepness(raw.player, raw.theta, raw.steepness)
    }
}

fn check_params(player: Player, theta: &[f64], steepness: f64) -> Result<()> {
    if player.stops_for_dim(theta.len()).is_none() {
        return Err(Error::InvalidConfig(format!(
            "{} threshold vector of length {} is not allowed",
            player.name(),
            theta.len()
        )));
    }
    if !(steepness > 0.0 && steepness.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "steepness must be positive, got {steepness}"
        )));
    }
    if theta.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidConfig("threshold entries must be finite".into()));
    }
    Ok(())
}

impl ThresholdStrategy {
    pub fn new(player: Player, theta: Vec<f64>) -> Result<Self> {
        Self::with_steepness(player, theta, DEFAULT_STEEPNESS)
    }

    pub fn with_steepness(player: Player, theta: Vec<f64>, steepness: f64) -> Result<Self> {
        check_params(player, &theta, steepness)?;
        Ok(Self {
            player,
            steepness,
            theta,
        })
    }

    /// Number of defender stops `L` the vector is sized for.
    pub fn stops(&self) -> usize {
        self.player.stops_for_dim(self.theta.len()).unwrap_or(0)
    }

    /// Thresholds `σ(θ)` in vector order.
    pub fn thresholds(&self) -> Vec<f64> {
        self.theta.iter().map(|&t| sigmoid(t)).collect()
    }

    fn expect(&self, player: Player) -> Result<()> {
        if self.player == player {
            Ok(())
        } else {
            Err(Error::RoleMismatch {
                expected: player.name(),
                got: self.player.name(),
            })
        }
    }

    fn entry(&self, index: usize) -> Result<f64> {
        self.theta.get(index).copied().ok_or(Error::IndexOutOfRange {
            index,
            len: self.theta.len(),
        })
    }

    /// `π(S | b, l) = gate(θ_l, b)`.
    pub fn defender_stop_prob(&self, l: usize, b1: f64) -> Result<f64> {
        self.expect(Player::Defender)?;
        let a = self.entry(l.checked_sub(1).ok_or(Error::StopsOutOfRange {
            l,
            max: self.theta.len(),
        })?)?;
        Ok(smooth_gate(a, b1, self.steepness))
    }

    /// Attacker stop probability given the defender's stop probability
    /// `pi1` at the current `(b, l)`.
    ///
    /// In state 1 the attacker leaves through `gate(θ_{L+l}, pi1)`. In state
    /// 0 it starts with hazard `σ(θ_l)` scaled by the defender's continue
    /// probability, so the start rate falls as the defender grows ready to
    /// stop and stays adjustable at `b = 0`, where `pi1` is exactly 0.
    pub fn attacker_stop_prob(&self, l: usize, s: State, pi1: f64) -> Result<f64> {
        self.expect(Player::Attacker)?;
        let stops = self.theta.len() / 2;
        if l == 0 || l > stops {
            return Err(Error::StopsOutOfRange { l, max: stops });
        }
        match s {
            State::NoIntrusion => Ok(sigmoid(self.entry(l - 1)?) * (1.0 - pi1)),
            State::Intrusion => Ok(smooth_gate(self.entry(stops + l - 1)?, pi1, self.steepness)),
            State::Terminal => Ok(0.0),
        }
    }
}

/// Uniform mixture over a buffer of threshold vectors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMixed")]
pub struct MixedStrategy {
    pub player: Player,
    pub steepness: f64,
    pub buffer: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
struct RawMixed {
    player: Player,
    #[serde(default = "default_steepness")]
    steepness: f64,
    buffer: Vec<Vec<f64>>,
}

impl TryFrom<RawMixed> for MixedStrategy {
    type Error = Error;

    fn try_from(raw: RawMixed) -> Result<Self> {
        let mut it = raw.buffer.into_iter();
        let first = it.next().ok_or(Error::EmptyBuffer)?;
        let mut mix =
            MixedStrategy::singleton(ThresholdStrategy::with_steepness(raw.player, first, raw.steepness)?);
        for theta in it {
            mix.push_theta(theta)?;
        }
        Ok(mix)
    }
}

impl MixedStrategy {
    pub fn singleton(s: ThresholdStrategy) -> Self {
        Self {
            player: s.player,
            steepness: s.steepness,
            buffer: vec![s.theta],
        }
    }

    pub fn from_buffer(player: Player, steepness: f64, buffer: Vec<Vec<f64>>) -> Result<Self> {
        RawMixed {
            player,
            steepness,
            buffer,
        }
        .try_into()
    }

    pub fn len(&self) -> usize {
        self.buffer.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buffer.is_empty()
    }

    pub fn stops(&self) -> usize {
        self.player.stops_for_dim(self.buffer[0].len()).unwrap_or(0)
    }

    pub fn get(&self, i: usize) -> ThresholdStrategy {
        ThresholdStrategy {
            player: self.player,
            steepness: self.steepness,
            theta: self.buffer[i].clone(),
        }
    }

    pub fn push(&mut self, s: &ThresholdStrategy) -> Result<()> {
        if s.player != self.player {
            return Err(Error::RoleMismatch {
                expected: self.player.name(),
                got: s.player.name(),
            });
        }
        if s.steepness != self.steepness {
            return Err(Error::InvalidConfig("steepness differs from buffer".into()));
        }
        self.push_theta(s.theta.clone())
    }

    fn push_theta(&mut self, theta: Vec<f64>) -> Result<()> {
        check_params(self.player, &theta, self.steepness)?;
        if theta.len() != self.buffer[0].len() {
            return Err(Error::InvalidConfig(format!(
                "buffer entry of length {} does not match {}",
                theta.len(),
                self.buffer[0].len()
            )));
        }
        self.buffer.push(theta);
        Ok(())
    }

    /// Behavioral average of the defender stop probability.
    pub fn defender_stop_prob(&self, l: usize, b1: f64) -> Result<f64> {
        self.mean(|s| s.defender_stop_prob(l, b1))
    }

    /// Behavioral average of the attacker stop probability.
    pub fn attacker_stop_prob(&self, l: usize, s: State, pi1: f64) -> Result<f64> {
        self.mean(|t| t.attacker_stop_prob(l, s, pi1))
    }

    fn mean(&self, f: impl Fn(&ThresholdStrategy) -> Result<f64>) -> Result<f64> {
        if self.buffer.is_empty() {
            return Err(Error::EmptyBuffer);
        }
        let mut sum = 0.0;
        for i in 0..self.buffer.len() {
            sum += f(&self.get(i))?;
        }
        Ok(sum / self.buffer.len() as f64)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("strategy serializes")
    }
}

/// Fixed defender rules used as reference points.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BaselineDefender {
    /// Stop whenever the IDS reports at least one alert.
    AlertOnAny,
    /// Stop at every step once the intrusion has started.
    OracleIntrusionTime,
}

impl BaselineDefender {
    pub fn action(self, o: usize, intrusion_started: bool) -> crate::game::Action {
        let stop = match self {
            BaselineDefender::AlertOnAny => o >= 1,
            BaselineDefender::OracleIntrusionTime => intrusion_started,
        };
        crate::game::Action::from_stop(stop)
    }
}
