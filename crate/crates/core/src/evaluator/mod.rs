//! Dynamic programming on a discretized belief grid: best responses,
//! exploitability, minimax value iteration and structural checks.
//!
//! Tables are laid out as `(state, l, alert class, grid point)` with the grid
//! index fastest. Defender and minimax tables have a single state layer.

mod attacker_br;
mod defender_br;
mod exploitability;
mod minimax;
mod stage;
mod structure;

pub use attacker_br::attacker_best_response_vi;
pub use defender_br::defender_best_response_vi;
pub use exploitability::{
    alert_baseline_exploitability, exploitability, exploitability_of, Exploitability,
};
pub use minimax::{minimax_value_iteration, STAGE_COLUMNS};
pub use stage::{solve_stage_game, StageSolution};
pub(crate) use exploitability::check_pair;
pub use structure::{
    check_attacker_structure, check_threshold_structure, check_tp2, StructureReport, Tp2Report,
};

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::game::{GameConfig, ObservationModel, State};
use crate::policy::{AttackerPolicy, AttackerView, DefenderPolicy, DefenderView};

/// Greedy choices only switch to `S` when it beats `C` by more than this.
pub(crate) const TIE_MARGIN: f64 = 1e-10;

/// `K + 1` equally spaced beliefs on `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BeliefGrid {
    pub k: usize,
}

impl BeliefGrid {
    pub fn new(k: usize) -> Self {
        assert!(k >= 1, "grid needs at least two points");
        Self { k }
    }

    pub fn len(&self) -> usize {
        self.k + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn point(&self, i: usize) -> f64 {
        i as f64 / self.k as f64
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.k).map(|i| self.point(i))
    }

    /// Left neighbor index and interpolation weight of the right neighbor.
    #[inline]
    pub fn locate(&self, b: f64) -> (usize, f64) {
        let x = b.clamp(0.0, 1.0) * self.k as f64;
        let i = (x.floor() as usize).min(self.k - 1);
        (i, x - i as f64)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViConfig {
    pub grid: usize,
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for ViConfig {
    fn default() -> Self {
        Self {
            grid: 100,
            tol: 1e-6,
            max_sweeps: 10_000,
        }
    }
}

impl ViConfig {
    /// Exactly `h` Bellman backups from zero: the `h`-step truncated game.
    pub fn horizon(grid: usize, h: usize) -> Self {
        Self {
            grid,
            tol: 0.0,
            max_sweeps: h,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BeliefGridSolution {
    pub grid: BeliefGrid,
    pub stops: usize,
    /// 1 for defender and minimax tables, 2 for attacker tables.
    pub layers: usize,
    /// 2 when the opponent conditions on the alert flag, else 1.
    pub classes: usize,
    pub values: Vec<f64>,
    /// Stop probability of the optimizing player.
    pub policy: Vec<f64>,
    pub residual: f64,
    pub residuals: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Value at the start of the game `(s = 0, b = 0, l = L)`, averaged over
    /// the alert class of the first observation.
    pub initial_value: f64,
}

impl BeliefGridSolution {
    #[inline]
    pub fn index(&self, s: usize, l: usize, c: usize, i: usize) -> usize {
        layout(self.stops, self.classes, self.grid, s, l, c, i)
    }

    pub fn value(&self, s: usize, l: usize, c: usize, i: usize) -> f64 {
        self.values[self.index(s, l, c, i)]
    }

    pub fn stop_prob(&self, s: usize, l: usize, c: usize, i: usize) -> f64 {
        self.policy[self.index(s, l, c, i)]
    }

    pub fn value_at(&self, s: usize, l: usize, c: usize, b: f64) -> f64 {
        interp(&self.values, self.index(s, l, c, 0), self.grid, b)
    }

    pub fn stop_prob_at(&self, s: usize, l: usize, c: usize, b: f64) -> f64 {
        interp(&self.policy, self.index(s, l, c, 0), self.grid, b)
    }

    /// `l,b,V` rows of the no-alert class of layer `s`.
    pub fn write_values_csv<W: Write>(&self, s: usize, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["l", "b", "V"])?;
        for l in 1..=self.stops {
            for i in 0..self.grid.len() {
                w.write_record(&[
                    l.to_string(),
                    self.grid.point(i).to_string(),
                    self.value(s, l, 0, i).to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// `s,l,b,stop_prob` rows of the no-alert class for every layer.
    pub fn write_policy_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["s", "l", "b", "stop_prob"])?;
        for s in 0..self.layers {
            for l in 1..=self.stops {
                for i in 0..self.grid.len() {
                    w.write_record(&[
                        s.to_string(),
                        l.to_string(),
                        self.grid.point(i).to_string(),
                        self.stop_prob(s, l, 0, i).to_string(),
                    ])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }
}

#[inline]
fn layout(
    stops: usize,
    classes: usize,
    grid: BeliefGrid,
    s: usize,
    l: usize,
    c: usize,
    i: usize,
) -> usize {
    ((s * stops + (l - 1)) * classes + c) * grid.len() + i
}

#[inline]
fn interp(table: &[f64], base: usize, grid: BeliefGrid, b: f64) -> f64 {
    let (i, w) = grid.locate(b);
    (1.0 - w) * table[base + i] + w * table[base + i + 1]
}

/// Alert class of an observation when `classes` classes are tracked.
#[inline]
pub(crate) fn class_of(o: usize, classes: usize) -> usize {
    if classes == 2 && o >= 1 {
        1
    } else {
        0
    }
}

/// Probability of each alert class for the observation emitted by `s`.
pub(crate) fn class_probs(obs: &ObservationModel, s: State, classes: usize) -> Vec<f64> {
    if classes == 1 {
        vec![1.0]
    } else {
        let quiet = obs.prob(s, 0);
        vec![quiet, 1.0 - quiet]
    }
}

/// Interpolated continuation term: `p * V(b)` with `b` between `idx` and
/// `idx + 1`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Entry {
    p: f64,
    idx: u32,
    w: f64,
}

/// One action (or action profile): immediate reward and its continuation
/// entries, stored as a range into a shared entry list.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Cell {
    reward: f64,
    start: u32,
    end: u32,
}

#[derive(Default)]
pub(crate) struct CellBuilder {
    pub entries: Vec<Entry>,
    pub cells: Vec<Cell>,
}

impl CellBuilder {
    pub fn begin(&self) -> u32 {
        self.entries.len() as u32
    }

    /// Adds `p * V(b')` where layer `base` holds the grid for the target.
    #[inline]
    pub fn push(&mut self, p: f64, base: usize, grid: BeliefGrid, b: f64) {
        if p > 0.0 {
            let (i, w) = grid.locate(b);
            self.entries.push(Entry {
                p,
                idx: (base + i) as u32,
                w,
            });
        }
    }

    pub fn finish(&mut self, reward: f64, start: u32) {
        self.cells.push(Cell {
            reward,
            start,
            end: self.entries.len() as u32,
        });
    }
}

#[inline]
pub(crate) fn cell_value(cell: &Cell, entries: &[Entry], v: &[f64], gamma: f64) -> f64 {
    let mut cont = 0.0;
    for e in &entries[cell.start as usize..cell.end as usize] {
        let i = e.idx as usize;
        cont += e.p * ((1.0 - e.w) * v[i] + e.w * v[i + 1]);
    }
    cell.reward + gamma * cont
}

pub(crate) struct SweepResult {
    pub values: Vec<f64>,
    pub residuals: Vec<f64>,
    pub converged: bool,
}

/// Synchronous value iteration from zero: every sweep applies `backup` to
/// all states using the previous table only.
pub(crate) fn sweep<F>(n: usize, vi: &ViConfig, backup: F) -> SweepResult
where
    F: Fn(&[f64], usize) -> f64 + Sync,
{
    let mut v = vec![0.0; n];
    let mut next = vec![0.0; n];
    let mut residuals = Vec::new();
    let mut converged = false;
    while residuals.len() < vi.max_sweeps {
        next.par_iter_mut()
            .with_min_len(64)
            .enumerate()
            .for_each(|(i, x)| *x = backup(&v, i));
        let r = v
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        std::mem::swap(&mut v, &mut next);
        residuals.push(r);
        if r <= vi.tol {
            converged = true;
            break;
        }
    }
    SweepResult {
        values: v,
        residuals,
        converged,
    }
}

pub(crate) fn check_vi(vi: &ViConfig, cfg: &GameConfig) -> Result<()> {
    if vi.grid == 0 {
        return Err(crate::error::Error::InvalidConfig("grid resolution must be positive".into()));
    }
    if !(vi.tol >= 0.0) {
        return Err(crate::error::Error::InvalidConfig("tolerance must be nonnegative".into()));
    }
    cfg.validate()
}

/// Defender policy read off a solved table by interpolation.
#[derive(Clone, Debug)]
pub struct GridDefenderPolicy {
    sol: BeliefGridSolution,
}

impl GridDefenderPolicy {
    pub fn new(sol: BeliefGridSolution) -> Self {
        assert_eq!(sol.layers, 1, "defender table expected");
        Self { sol }
    }
}

impl DefenderPolicy for GridDefenderPolicy {
    fn stop_prob(&self, view: &DefenderView) -> f64 {
        let c = class_of(usize::from(view.alert), self.sol.classes);
        self.sol.stop_prob_at(0, view.stops, c, view.belief)
    }

    fn uses_alert(&self) -> bool {
        self.sol.classes == 2
    }
}

/// Attacker policy read off a solved attacker table by interpolation.
#[derive(Clone, Debug)]
pub struct GridAttackerPolicy {
    sol: BeliefGridSolution,
}

impl GridAttackerPolicy {
    pub fn new(sol: BeliefGridSolution) -> Self {
        assert_eq!(sol.layers, 2, "attacker table expected");
        Self { sol }
    }
}

impl AttackerPolicy for GridAttackerPolicy {
    fn stop_prob(&self, view: &AttackerView) -> f64 {
        if view.state.is_terminal() {
            return 0.0;
        }
        let c = class_of(usize::from(view.alert), self.sol.classes);
        self.sol
            .stop_prob_at(view.state.index(), view.stops, c, view.belief)
    }

    fn uses_alert(&self) -> bool {
        self.sol.classes == 2
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn locate_endpoints() {
        let g = BeliefGrid::new(4);
        assert_eq!(g.locate(0.0), (0, 0.0));
        assert_eq!(g.locate(1.0), (3, 1.0));
        let (i, w) = g.locate(0.3);
        assert_eq!(i, 1);
        assert!((w - 0.2).abs() < 1e-12);
    }
}
