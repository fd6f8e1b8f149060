use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::ObservationModel;
use crate::policy::{DefenderPolicy, DefenderView};

use super::BeliefGridSolution;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructureReport {
    pub pass: bool,
    /// Extracted thresholds; `None` where the stop region is empty.
    pub thresholds: Vec<Option<f64>>,
    pub violations: Vec<String>,
}

impl StructureReport {
    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// First index of a region that must extend to the end of `seq`. Records a
/// violation if membership switches back.
fn upper_interval(seq: impl Iterator<Item = bool>, what: &str, violations: &mut Vec<String>) -> Option<usize> {
    let mut first = None;
    for (i, inside) in seq.enumerate() {
        match (first, inside) {
            (None, true) => first = Some(i),
            (Some(f), false) => {
                violations.push(format!("{what}: leaves the region at position {i} after entering at {f}"));
                break;
            }
            _ => {}
        }
    }
    first
}

/// Checks that every stop region of a defender table is an upper interval
/// `[α_l, 1]` and that `α_1 ≥ α_2 ≥ … ≥ α_L` within one grid cell.
pub fn check_threshold_structure(sol: &BeliefGridSolution) -> StructureReport {
    let mut violations = Vec::new();
    let mut thresholds = Vec::new();
    let h = 1.0 / sol.grid.k as f64;
    for c in 0..sol.classes {
        let mut prev: Option<Option<f64>> = None;
        for l in 1..=sol.stops {
            let what = format!("l={l} class={c}");
            let first = upper_interval(
                (0..sol.grid.len()).map(|i| sol.stop_prob(0, l, c, i) >= 0.5),
                &what,
                &mut violations,
            );
            let alpha = first.map(|i| sol.grid.point(i));
            if let Some(p) = prev {
                // α_{l-1} ≥ α_l - h, with an empty region counting as +∞.
                let ok = match (p, alpha) {
                    (None, _) => true,
                    (Some(_), None) => false,
                    (Some(a_prev), Some(a)) => a_prev >= a - h - 1e-12,
                };
                if !ok {
                    violations.push(format!(
                        "{what}: threshold {alpha:?} exceeds threshold {p:?} at l={} by more than one cell",
                        l - 1
                    ));
                }
            }
            prev = Some(alpha);
            if c == 0 {
                thresholds.push(alpha);
            }
        }
    }
    StructureReport {
        pass: violations.is_empty(),
        thresholds,
        violations,
    }
}

/// Checks an attacker table against a defender policy whose stop probability
/// is nondecreasing in `b` and equals 1 at `b = 1`: the continue region in
/// state 0 and the stop region in state 1 are upper intervals in the
/// defender's stop probability, state-1 stops imply state-0 continues, and
/// values are nonnegative up to `tol`.
///
/// Thresholds are reported as `β_{0,1..L}` followed by `β_{1,1..L}`.
pub fn check_attacker_structure(
    sol: &BeliefGridSolution,
    pi1: &dyn DefenderPolicy,
    tol: f64,
) -> Result<StructureReport> {
    if sol.layers != 2 {
        return Err(Error::Precondition("attacker table expected".into()));
    }
    let mut violations = Vec::new();
    let mut beta = vec![None; 2 * sol.stops];
    for c in 0..sol.classes {
        for l in 1..=sol.stops {
            let probs: Vec<f64> = sol
                .grid
                .points()
                .map(|b| {
                    pi1.stop_prob(&DefenderView {
                        belief: b,
                        stops: l,
                        alert: c == 1,
                        intrusion: false,
                    })
                })
                .collect();
            if probs.windows(2).any(|w| w[1] < w[0] - 1e-12) {
                return Err(Error::Precondition(format!(
                    "defender stop probability decreases in b at l={l}"
                )));
            }
            if (probs[sol.grid.k] - 1.0).abs() > 1e-9 {
                return Err(Error::Precondition(format!(
                    "defender stop probability at b=1 is {} at l={l}",
                    probs[sol.grid.k]
                )));
            }
            // Grid order is already sorted by the defender's stop probability.
            let what0 = format!("s=0 continue region l={l} class={c}");
            let first0 = upper_interval(
                (0..sol.grid.len()).map(|i| sol.stop_prob(0, l, c, i) < 0.5),
                &what0,
                &mut violations,
            );
            let what1 = format!("s=1 stop region l={l} class={c}");
            let first1 = upper_interval(
                (0..sol.grid.len()).map(|i| sol.stop_prob(1, l, c, i) >= 0.5),
                &what1,
                &mut violations,
            );
            if c == 0 {
                beta[l - 1] = first0.map(|i| probs[i]);
                beta[sol.stops + l - 1] = first1.map(|i| probs[i]);
            }
            for i in 0..sol.grid.len() {
                if sol.stop_prob(1, l, c, i) >= 0.5 && sol.stop_prob(0, l, c, i) >= 0.5 {
                    violations.push(format!(
                        "l={l} class={c} b={}: stops in both states",
                        sol.grid.point(i)
                    ));
                }
            }
        }
    }
    if let Some((x, v)) = sol
        .values
        .iter()
        .enumerate()
        .find(|(_, v)| **v < -tol)
    {
        violations.push(format!("negative attacker value {v} at table index {x}"));
    }
    Ok(StructureReport {
        pass: violations.is_empty(),
        thresholds: beta,
        violations,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tp2Report {
    pub pass: bool,
    pub negative_minors: u64,
    pub minors: u64,
}

/// Counts negative 2×2 minors `f(i|0) f(j|1) - f(j|0) f(i|1)`, `i < j`.
/// Minors smaller in magnitude than the probability floor are treated as
/// zero: flooring both tails of two ordered pmfs leaves deficits of that size.
pub fn check_tp2(model: &ObservationModel) -> Tp2Report {
    use crate::game::State;
    let f0 = model.pmf(State::NoIntrusion);
    let f1 = model.pmf(State::Intrusion);
    let n = f0.len();
    let mut negative = 0u64;
    for i in 0..n {
        for j in i + 1..n {
            let (x, y) = (f0[i] * f1[j], f0[j] * f1[i]);
            if x - y < -(1e-12 * (x + y)).max(crate::obs_model::PMF_FLOOR) {
                negative += 1;
            }
        }
    }
    let minors = (n as u64) * (n as u64).saturating_sub(1) / 2;
    Tp2Report {
        pass: negative == 0,
        negative_minors: negative,
        minors,
    }
}
