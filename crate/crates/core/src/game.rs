//! The stopping game itself: states, actions, transition kernel, rewards,
//! observation model and the defender's belief filter.
//!
//! States are `NoIntrusion` (0), `Intrusion` (1) and the absorbing
//! `Terminal`. The defender holds `l` stops; each `S` it plays consumes one
//! and the game ends when the last stop is used. The attacker stops twice:
//! once to start the intrusion and once to end it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Game state `s`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum State {
    NoIntrusion,
    Intrusion,
    Terminal,
}

impl State {
    /// Non-terminal states in index order.
    pub const LIVE: [State; 2] = [State::NoIntrusion, State::Intrusion];

    pub fn index(self) -> usize {
        match self {
            State::NoIntrusion => 0,
            State::Intrusion => 1,
            State::Terminal => 2,
        }
    }

    pub fn from_index(i: usize) -> State {
        match i {
            0 => State::NoIntrusion,
            1 => State::Intrusion,
            _ => State::Terminal,
        }
    }

    pub fn is_terminal(self) -> bool {
        self == State::Terminal
    }
}

/// `S` is encoded as 1 and `C` as 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    Continue,
    Stop,
}

impl Action {
    pub const BOTH: [Action; 2] = [Action::Stop, Action::Continue];

    pub fn code(self) -> usize {
        match self {
            Action::Continue => 0,
            Action::Stop => 1,
        }
    }

    pub fn from_stop(stop: bool) -> Action {
        if stop {
            Action::Stop
        } else {
            Action::Continue
        }
    }

    pub fn is_stop(self) -> bool {
        self == Action::Stop
    }
}

/// Simultaneous move `(a1, a2)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ActionPair {
    pub defender: Action,
    pub attacker: Action,
}

impl ActionPair {
    pub fn new(defender: Action, attacker: Action) -> Self {
        Self { defender, attacker }
    }
}

/// Full game state `(s, l, t)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GameState {
    pub s: State,
    pub l: usize,
    pub t: usize,
}

impl GameState {
    pub fn initial(cfg: &GameConfig) -> Self {
        Self {
            s: State::NoIntrusion,
            l: cfg.stops,
            t: 1,
        }
    }
}

/// Defender belief `b(1)`, the probability that an intrusion is ongoing.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Belief(f64);

impl Belief {
    pub const INITIAL: Belief = Belief(0.0);

    pub fn new(b1: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&b1) {
            Ok(Belief(b1))
        } else {
            Err(Error::InvalidConfig(format!("belief {b1} outside [0,1]")))
        }
    }

    pub fn b1(self) -> f64 {
        self.0
    }
}

/// Observation pmfs `f(o|0)` and `f(o|1)` over the alphabet `{0..n-1}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawObservationModel", into = "RawObservationModel")]
pub struct ObservationModel {
    pmf: [Vec<f64>; 2],
    cdf: [Vec<f64>; 2],
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct RawObservationModel {
    n: usize,
    pmf0: Vec<f64>,
    pmf1: Vec<f64>,
}

impl TryFrom<RawObservationModel> for ObservationModel {
    type Error = Error;

    fn try_from(raw: RawObservationModel) -> Result<Self> {
        if raw.pmf0.len() != raw.n || raw.pmf1.len() != raw.n {
            return Err(Error::InvalidConfig(format!(
                "pmf lengths {} and {} do not match n = {}",
                raw.pmf0.len(),
                raw.pmf1.len(),
                raw.n
            )));
        }
        ObservationModel::new(raw.pmf0, raw.pmf1)
    }
}

impl From<ObservationModel> for RawObservationModel {
    fn from(m: ObservationModel) -> Self {
        let [pmf0, pmf1] = m.pmf;
        RawObservationModel {
            n: pmf0.len(),
            pmf0,
            pmf1,
        }
    }
}

/// Input pmfs may carry decimal rounding from JSON; anything farther than this
/// from a unit sum is rejected, the rest is renormalized.
const PMF_SUM_SLACK: f64 = 1e-6;

impl ObservationModel {
    pub fn new(pmf0: Vec<f64>, pmf1: Vec<f64>) -> Result<Self> {
        if pmf0.is_empty() || pmf0.len() != pmf1.len() {
            return Err(Error::InvalidConfig(
                "observation pmfs must be nonempty and of equal length".into(),
            ));
        }
        let pmf0 = normalize(pmf0, "pmf0")?;
        let pmf1 = normalize(pmf1, "pmf1")?;
        let cdf = [cumulative(&pmf0), cumulative(&pmf1)];
        Ok(Self {
            pmf: [pmf0, pmf1],
            cdf,
        })
    }

    pub fn n(&self) -> usize {
        self.pmf[0].len()
    }

    /// `f(o|s)` for a non-terminal state.
    #[inline]
    pub fn prob(&self, s: State, o: usize) -> f64 {
        self.pmf[s.index()][o]
    }

    pub fn pmf(&self, s: State) -> &[f64] {
        &self.pmf[s.index()]
    }

    /// Draws an observation emitted by the non-terminal state `s`.
    pub fn sample<R: rand::Rng + ?Sized>(&self, s: State, rng: &mut R) -> usize {
        let cdf = &self.cdf[s.index()];
        let u: f64 = rng.gen();
        cdf.partition_point(|&c| c <= u).min(cdf.len() - 1)
    }

    /// Equal-variance discretized Gaussians at 20% and 50% of the alphabet.
    /// The pair is TP2 and used as the default desk-scale model.
    pub fn desk(n: usize) -> Self {
        let nf = n as f64;
        let sd = (0.12 * nf).max(0.6);
        let pmf0 = crate::obs_model::discretize_gaussian(0.2 * nf, sd * sd, n);
        let pmf1 = crate::obs_model::discretize_gaussian(0.5 * nf, sd * sd, n);
        ObservationModel::new(pmf0, pmf1).expect("desk model is a valid pmf pair")
    }
}

fn normalize(mut pmf: Vec<f64>, name: &str) -> Result<Vec<f64>> {
    if pmf.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(Error::InvalidConfig(format!(
            "{name} has negative or non-finite entries"
        )));
    }
    let sum: f64 = pmf.iter().sum();
    if (sum - 1.0).abs() > PMF_SUM_SLACK {
        return Err(Error::InvalidConfig(format!("{name} sums to {sum}, not 1")));
    }
    // Sums within a few ulps of 1 are left alone so that serialized models
    // read back bit for bit.
    if (sum - 1.0).abs() > 1e-12 {
        pmf.iter_mut().for_each(|p| *p /= sum);
    }
    Ok(pmf)
}

fn cumulative(pmf: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut cdf: Vec<f64> = pmf
        .iter()
        .map(|p| {
            acc += p;
            acc
        })
        .collect();
    if let Some(last) = cdf.last_mut() {
        *last = 1.0;
    }
    cdf
}

/// Prevention probabilities `φ_l`.
#[derive(Clone, Debug, PartialEq)]
pub enum Phi {
    /// `φ_l = 1/(2l)`.
    HalfInverse,
    /// Explicit values for `l = 1..=L`.
    Values(Vec<f64>),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum PhiRepr {
    Named(String),
    Values(Vec<f64>),
}

impl Serialize for Phi {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Phi::HalfInverse => PhiRepr::Named("half-inverse".into()),
            Phi::Values(v) => PhiRepr::Values(v.clone()),
        }
        .serialize(ser)
    }
}

impl<'de> Deserialize<'de> for Phi {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        match PhiRepr::deserialize(de)? {
            PhiRepr::Named(s) if s == "half-inverse" => Ok(Phi::HalfInverse),
            PhiRepr::Named(s) => Err(serde::de::Error::custom(format!(
                "unknown phi schedule {s:?}"
            ))),
            PhiRepr::Values(v) => Ok(Phi::Values(v)),
        }
    }
}

/// All game parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameConfig {
    #[serde(rename = "L")]
    pub stops: usize,
    #[serde(rename = "R_st")]
    pub r_st: f64,
    #[serde(rename = "R_cost")]
    pub r_cost: f64,
    #[serde(rename = "R_int")]
    pub r_int: f64,
    pub gamma: f64,
    pub phi: Phi,
    pub obs: ObservationModel,
    #[serde(default = "default_horizon_cap")]
    pub horizon_cap: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_horizon_cap() -> usize {
    1000
}

impl GameConfig {
    /// Grid-searched reference parameters with a caller-chosen stop budget and
    /// observation model.
    pub fn reference(stops: usize, obs: ObservationModel) -> Self {
        Self {
            stops,
            r_st: 20.0,
            r_cost: -2.0,
            r_int: -1.0,
            gamma: 0.99,
            phi: Phi::HalfInverse,
            obs,
            horizon_cap: default_horizon_cap(),
            seed: 0,
        }
    }

    /// Reference parameters with the desk observation model over `n` symbols.
    pub fn desk(stops: usize, n: usize) -> Self {
        Self::reference(stops, ObservationModel::desk(n))
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: GameConfig = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.stops == 0 {
            return bad("L must be at least 1".into());
        }
        if !(self.r_st > 0.0) {
            return bad(format!("R_st must be > 0, got {}", self.r_st));
        }
        if !(self.r_cost < 0.0) {
            return bad(format!("R_cost must be < 0, got {}", self.r_cost));
        }
        if !(self.r_int < 0.0) {
            return bad(format!("R_int must be < 0, got {}", self.r_int));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return bad(format!("gamma must lie in [0,1), got {}", self.gamma));
        }
        if self.horizon_cap == 0 {
            return bad("horizon_cap must be positive".into());
        }
        if let Phi::Values(v) = &self.phi {
            if v.len() != self.stops {
                return bad(format!("phi has {} entries, expected L = {}", v.len(), self.stops));
            }
            if v.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return bad("phi values must lie in [0,1]".into());
            }
        }
        for l in 1..=self.stops {
            let lf = l as f64;
            if self.r_st / lf - self.r_cost / lf - self.r_int < 0.0 {
                return bad(format!("R_st/l - R_cost/l - R_int < 0 at l = {l}"));
            }
        }
        Ok(())
    }

    /// Prevention probability `φ_l`.
    #[inline]
    pub fn phi(&self, l: usize) -> f64 {
        match &self.phi {
            Phi::HalfInverse => 1.0 / (2.0 * l as f64),
            Phi::Values(v) => v[l - 1],
        }
    }

    pub fn check_stops(&self, l: usize) -> Result<()> {
        if l == 0 || l > self.stops {
            Err(Error::StopsOutOfRange {
                l,
                max: self.stops,
            })
        } else {
            Ok(())
        }
    }

    /// Largest possible per-step reward magnitude.
    pub fn reward_bound(&self) -> f64 {
        self.r_st.abs().max(self.r_cost.abs()).max(self.r_int.abs())
    }
}

/// Next-state distribution `[P(0), P(1), P(∅)]` for a valid `l`.
#[inline]
pub fn transition_row(s: State, l: usize, a: ActionPair, cfg: &GameConfig) -> [f64; 3] {
    debug_assert!(l >= 1 && l <= cfg.stops);
    if s == State::Terminal || (l == 1 && a.defender.is_stop()) {
        return [0.0, 0.0, 1.0];
    }
    match (s, a.attacker) {
        (State::NoIntrusion, Action::Continue) => [1.0, 0.0, 0.0],
        (State::NoIntrusion, Action::Stop) => [0.0, 1.0, 0.0],
        (State::Intrusion, Action::Stop) => [0.0, 0.0, 1.0],
        (State::Intrusion, Action::Continue) => {
            let phi = cfg.phi(l);
            [0.0, 1.0 - phi, phi]
        }
        (State::Terminal, _) => unreachable!(),
    }
}

/// `P_l[s_next | s, a]`.
pub fn transition_prob(
    s_next: State,
    s: State,
    l: usize,
    a: ActionPair,
    cfg: &GameConfig,
) -> Result<f64> {
    cfg.check_stops(l)?;
    Ok(transition_row(s, l, a, cfg)[s_next.index()])
}

/// Defender reward `R_l(s, a)`; the attacker receives the negation.
#[inline]
pub fn reward(s: State, l: usize, a: ActionPair, cfg: &GameConfig) -> f64 {
    let lf = l as f64;
    match (s, a.defender, a.attacker) {
        (State::Terminal, _, _) => 0.0,
        (State::Intrusion, _, Action::Stop) => 0.0,
        (State::NoIntrusion, Action::Continue, _) => 0.0,
        (State::NoIntrusion, Action::Stop, _) => cfg.r_cost / lf,
        (State::Intrusion, Action::Stop, Action::Continue) => cfg.r_st / lf,
        (State::Intrusion, Action::Continue, Action::Continue) => cfg.r_int,
    }
}

/// Attacker behaviour at one decision point: probability of `S` in each
/// non-terminal state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AttackerStop {
    pub idle: f64,
    pub intruding: f64,
}

impl AttackerStop {
    pub fn new(idle: f64, intruding: f64) -> Self {
        Self { idle, intruding }
    }

    #[inline]
    pub fn get(&self, s: State) -> f64 {
        match s {
            State::NoIntrusion => self.idle,
            State::Intrusion => self.intruding,
            State::Terminal => 0.0,
        }
    }
}

/// Unnormalized mass the filter places on `s' ∈ {0, 1}` after the defender
/// plays `a1` from belief `b1`, marginalizing the attacker's move.
#[inline]
pub fn predicted_mass(
    b1: f64,
    a1: Action,
    attacker: AttackerStop,
    l: usize,
    cfg: &GameConfig,
) -> [f64; 2] {
    let mut mass = [0.0; 2];
    for s in State::LIVE {
        let bs = if s == State::Intrusion { b1 } else { 1.0 - b1 };
        if bs == 0.0 {
            continue;
        }
        let stop = attacker.get(s);
        for (a2, pa2) in [(Action::Stop, stop), (Action::Continue, 1.0 - stop)] {
            if pa2 == 0.0 {
                continue;
            }
            let row = transition_row(s, l, ActionPair::new(a1, a2), cfg);
            mass[0] += bs * pa2 * row[0];
            mass[1] += bs * pa2 * row[1];
        }
    }
    mass
}

/// Conditions predicted mass on observation `o`. `None` when `o` has zero
/// predictive probability.
#[inline]
pub fn condition(mass: [f64; 2], o: usize, obs: &ObservationModel) -> Option<f64> {
    let joint1 = mass[1] * obs.prob(State::Intrusion, o);
    let total = mass[0] * obs.prob(State::NoIntrusion, o) + joint1;
    if total > 0.0 {
        Some((joint1 / total).clamp(0.0, 1.0))
    } else {
        None
    }
}

/// Bayes filter step: the posterior `b'(1)` after playing `a1` and receiving
/// `o`, with the attacker's move marginalized through `attacker`.
pub fn belief_update(
    b: Belief,
    a1: Action,
    o: usize,
    attacker: AttackerStop,
    l: usize,
    cfg: &GameConfig,
) -> Result<Belief> {
    cfg.check_stops(l)?;
    if o >= cfg.obs.n() {
        return Err(Error::ObservationOutOfRange { o, n: cfg.obs.n() });
    }
    let mass = predicted_mass(b.b1(), a1, attacker, l, cfg);
    condition(mass, o, &cfg.obs)
        .map(Belief)
        .ok_or(Error::FilterDegenerate)
}

/// Filter step with the reset policy used by the simulator and the solvers:
/// an observation the filter model deems impossible resets the belief to the
/// likelihood ratio of `o` under a uniform prior.
#[inline]
pub fn filter_or_reset(mass: [f64; 2], o: usize, obs: &ObservationModel, prior: f64) -> f64 {
    condition(mass, o, obs).unwrap_or_else(|| {
        let f0 = obs.prob(State::NoIntrusion, o);
        let f1 = obs.prob(State::Intrusion, o);
        if f0 + f1 > 0.0 {
            f1 / (f0 + f1)
        } else {
            prior
        }
    })
}
