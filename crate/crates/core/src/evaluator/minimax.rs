use crate::error::Result;
use crate::game::{predicted_mass, reward, Action, ActionPair, AttackerStop, GameConfig, State};

use super::stage::solve_stage_game;
use super::{cell_value, check_vi, layout, sweep, BeliefGrid, BeliefGridSolution, CellBuilder, ViConfig};

/// Attacker pure stage actions as `(action in state 0, action in state 1)`.
pub const STAGE_COLUMNS: [(Action, Action); 4] = [
    (Action::Continue, Action::Continue),
    (Action::Continue, Action::Stop),
    (Action::Stop, Action::Continue),
    (Action::Stop, Action::Stop),
];

/// Minimax value iteration over `(l, b)`. Each grid point solves the 2×4
/// stage game between defender rows `[S, C]` and state-contingent attacker
/// columns; continuation values use the belief updated under each column.
pub fn minimax_value_iteration(cfg: &GameConfig, vi: &ViConfig) -> Result<BeliefGridSolution> {
    check_vi(vi, cfg)?;
    let grid = BeliefGrid::new(vi.grid);
    let stops = cfg.stops;
    let n = stops * grid.len();
    let base = |l: usize| layout(stops, 1, grid, 0, l, 0, 0);

    let mut cb = CellBuilder::default();
    for l in 1..=stops {
        for i in 0..grid.len() {
            let b = grid.point(i);
            for a1 in Action::BOTH {
                for (x0, x1) in STAGE_COLUMNS {
                    let start = cb.begin();
                    let r = (1.0 - b) * reward(State::NoIntrusion, l, ActionPair::new(a1, x0), cfg)
                        + b * reward(State::Intrusion, l, ActionPair::new(a1, x1), cfg);
                    let next_l = if a1.is_stop() { l - 1 } else { l };
                    if next_l >= 1 {
                        let col = AttackerStop::new(x0.code() as f64, x1.code() as f64);
                        let mass = predicted_mass(b, a1, col, l, cfg);
                        for o in 0..cfg.obs.n() {
                            let j0 = mass[0] * cfg.obs.prob(State::NoIntrusion, o);
                            let j1 = mass[1] * cfg.obs.prob(State::Intrusion, o);
                            let p = j0 + j1;
                            if p > 0.0 {
                                cb.push(p, base(next_l), grid, j1 / p);
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
    let stage = |v: &[f64], x: usize| {
        let mut a = [[0.0; 4]; 2];
        for (row, a_row) in a.iter_mut().enumerate() {
            for (col, e) in a_row.iter_mut().enumerate() {
                *e = cell_value(&cells[8 * x + 4 * row + col], entries, v, gamma);
            }
        }
        solve_stage_game(&a)
    };
    let res = sweep(n, vi, |v, x| stage(v, x).value);
    let policy = (0..n).map(|x| stage(&res.values, x).stop_prob).collect();
    let initial_value = res.values[base(stops)];
    Ok(BeliefGridSolution {
        grid,
        stops,
        layers: 1,
        classes: 1,
        values: res.values,
        policy,
        residual: *res.residuals.last().unwrap_or(&0.0),
        iterations: res.residuals.len(),
        residuals: res.residuals,
        converged: res.converged,
        initial_value,
    })
}
