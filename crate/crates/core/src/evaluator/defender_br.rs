use crate::error::Result;
use crate::game::{predicted_mass, reward, Action, ActionPair, GameConfig, State};
use crate::policy::AttackerPolicy;

use super::{
    cell_value, check_vi, class_of, class_probs, layout, sweep, BeliefGrid, BeliefGridSolution,
    CellBuilder, ViConfig, TIE_MARGIN,
};

/// Defender best response to a fixed attacker policy. The defender's filter
/// models the attacker as `pi2` itself.
pub fn defender_best_response_vi(
    pi2: &dyn AttackerPolicy,
    cfg: &GameConfig,
    vi: &ViConfig,
) -> Result<BeliefGridSolution> {
    check_vi(vi, cfg)?;
    let grid = BeliefGrid::new(vi.grid);
    let stops = cfg.stops;
    let classes = if pi2.uses_alert() { 2 } else { 1 };
    let n = stops * classes * grid.len();
    let base = |l: usize, c: usize| layout(stops, classes, grid, 0, l, c, 0);

    let mut cb = CellBuilder::default();
    for l in 1..=stops {
        for c in 0..classes {
            for i in 0..grid.len() {
                let b = grid.point(i);
                let q = pi2.stop_probs(b, l, c == 1);
                for a1 in Action::BOTH {
                    let start = cb.begin();
                    let mut r = 0.0;
                    for s in State::LIVE {
                        let bs = if s == State::Intrusion { b } else { 1.0 - b };
                        let stop = q.get(s);
                        r += bs
                            * (stop * reward(s, l, ActionPair::new(a1, Action::Stop), cfg)
                                + (1.0 - stop)
                                    * reward(s, l, ActionPair::new(a1, Action::Continue), cfg));
                    }
                    let next_l = if a1.is_stop() { l - 1 } else { l };
                    if next_l >= 1 {
                        let mass = predicted_mass(b, a1, q, l, cfg);
                        for o in 0..cfg.obs.n() {
                            let j0 = mass[0] * cfg.obs.prob(State::NoIntrusion, o);
                            let j1 = mass[1] * cfg.obs.prob(State::Intrusion, o);
                            let p = j0 + j1;
                            if p > 0.0 {
                                cb.push(p, base(next_l, class_of(o, classes)), grid, j1 / p);
                            }
                        }
                    }
                    cb.finish(r, start);
                }
            }
        }
    }

    let gamma = cfg.gamma;
    let (cells, entries) = (&cb.cells, &cb.entries);
    let q = |v: &[f64], x: usize| {
        [
            cell_value(&cells[2 * x], entries, v, gamma),
            cell_value(&cells[2 * x + 1], entries, v, gamma),
        ]
    };
    let res = sweep(n, vi, |v, x| {
        let [qs, qc] = q(v, x);
        qs.max(qc)
    });
    // Greedy policy with respect to the returned values.
    let policy = (0..n)
        .map(|x| {
            let [qs, qc] = q(&res.values, x);
            if qs > qc + TIE_MARGIN {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    let initial_value = class_probs(&cfg.obs, State::NoIntrusion, classes)
        .iter()
        .enumerate()
        .map(|(c, p)| p * res.values[base(stops, c)])
        .sum();
    Ok(BeliefGridSolution {
        grid,
        stops,
        layers: 1,
        classes,
        values: res.values,
        policy,
        residual: *res.residuals.last().unwrap_or(&0.0),
        iterations: res.residuals.len(),
        residuals: res.residuals,
        converged: res.converged,
        initial_value,
    })
}
