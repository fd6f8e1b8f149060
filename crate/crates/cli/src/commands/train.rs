use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use stopgame::tfp::{run_tfp, IterationMetrics, TfpState, CURVE_HEADER};

use super::{create_dir, create_file};
use crate::error::{io_err, CliResult};
use crate::spec::Experiment;
use crate::stats::mean_ci;

/// Runs T-FP once per seed and writes `seed_<s>/{curve.csv, defender.json,
/// attacker.json}` plus `aggregate.csv` under `out`.
pub fn train(exp: &Experiment, out: &Path) -> CliResult<Vec<(u64, TfpState)>> {
    create_dir(out)?;
    let tfp = exp.tfp();
    let runs: Vec<(u64, TfpState)> = exp
        .eval
        .seeds
        .par_iter()
        .map(|&seed| run_tfp(&exp.game, &tfp, seed).map(|st| (seed, st)))
        .collect::<stopgame::Result<_>>()?;
    for (seed, st) in &runs {
        let dir = exp.seed_dir(out, *seed);
        create_dir(&dir)?;
        let path = dir.join("curve.csv");
        let mut f = create_file(&path)?;
        st.write_curve_csv(&mut f)?;
        f.flush().map_err(|e| io_err(&path, e))?;
        for (name, mix) in [("defender.json", &st.defender), ("attacker.json", &st.attacker)] {
            let path = dir.join(name);
            std::fs::write(&path, mix.to_json_string() + "\n").map_err(|e| io_err(&path, e))?;
        }
        println!(
            "seed {seed}: {} iterations, exploitability {:.4}{}",
            st.iteration,
            st.exploitability_now,
            if st.converged { " (converged)" } else { "" }
        );
    }
    let histories: Vec<&[IterationMetrics]> = runs.iter().map(|(_, st)| st.history.as_slice()).collect();
    let path = out.join("aggregate.csv");
    let mut f = create_file(&path)?;
    write_aggregate_csv(&aggregate(&histories), &mut f)?;
    f.flush().map_err(|e| io_err(&path, e))?;
    Ok(runs)
}

/// Cross-seed statistics of one iteration: `(mean, half-width)` per curve
/// metric, in `CURVE_HEADER` order after `iter`.
#[derive(Clone, Debug, PartialEq)]
pub struct AggregateRow {
    pub iter: usize,
    /// Seeds that reached this iteration.
    pub runs: usize,
    pub stats: Vec<(f64, f64)>,
}

fn metric_values(m: &IterationMetrics) -> [f64; 5] {
    [
        m.exploitability,
        m.j1_vs_br_attacker,
        m.j1_defender_mix,
        m.mean_t,
        m.mean_intrusion_len,
    ]
}

pub fn aggregate(histories: &[&[IterationMetrics]]) -> Vec<AggregateRow> {
    let longest = histories.iter().map(|h| h.len()).max().unwrap_or(0);
    (0..longest)
        .map(|k| {
            let rows: Vec<[f64; 5]> = histories
                .iter()
                .filter_map(|h| h.get(k))
                .map(metric_values)
                .collect();
            let stats = (0..5)
                .map(|j| {
                    let xs: Vec<f64> = rows.iter().map(|r| r[j]).collect();
                    let (m, h, _) = mean_ci(&xs);
                    (m, h)
                })
                .collect();
            AggregateRow {
                iter: k + 1,
                runs: rows.len(),
                stats,
            }
        })
        .collect()
}

pub fn write_aggregate_csv<W: Write>(rows: &[AggregateRow], out: W) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["iter".to_string(), "runs".to_string()];
    for name in &CURVE_HEADER[1..] {
        header.push(format!("{name}_mean"));
        header.push(format!("{name}_ci_low"));
        header.push(format!("{name}_ci_high"));
    }
    let csv_err = |e: csv::Error| crate::error::CliError::Input(e.to_string());
    w.write_record(&header).map_err(csv_err)?;
    for r in rows {
        let mut rec = vec![r.iter.to_string(), r.runs.to_string()];
        for (m, h) in &r.stats {
            rec.push(m.to_string());
            rec.push((m - h).to_string());
            rec.push((m + h).to_string());
        }
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush().map_err(|e| crate::error::CliError::Input(e.to_string()))?;
    Ok(())
}
