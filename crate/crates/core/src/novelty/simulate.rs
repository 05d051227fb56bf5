//! Degree-preserving Monte-Carlo null model.
//!
//! Each run redraws every project's import set as a uniform random subset
//! of the year's package universe with the project's actual import count.
//! Row degrees are preserved; column degrees are not. Runs draw from named
//! substreams of the master seed, so results are identical at any thread
//! count.

use std::collections::{BTreeMap, HashMap};

use rand::Rng;
use rayon::prelude::*;

use super::{NoveltyError, YearMatrix};
use crate::rng::{novelty_run_path, substream};

/// Integer co-occurrence accumulators across simulation runs. Expectation
/// and spread derive from exact integer sums, so merge order is irrelevant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NullStats {
    runs: usize,
    /// pair -> (sum of counts, sum of squared counts) over all runs.
    sums: BTreeMap<(u32, u32), (u64, u64)>,
}

impl NullStats {
    /// Accumulates per-run pair counts. Pairs absent from a run count as 0.
    pub fn from_runs<M>(run_counts: Vec<M>) -> NullStats
    where
        M: IntoIterator<Item = ((u32, u32), u64)>,
    {
        let runs = run_counts.len();
        let mut sums: BTreeMap<(u32, u32), (u64, u64)> = BTreeMap::new();
        for counts in run_counts {
            for (pair, count) in counts {
                let slot = sums.entry(pair).or_insert((0, 0));
                slot.0 += count;
                slot.1 += count * count;
            }
        }
        NullStats { runs, sums }
    }

    pub fn runs(&self) -> usize {
        self.runs
    }

    /// Pairs that co-occurred in at least one run.
    pub fn pairs(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.sums.keys().copied()
    }

    /// Mean and population standard deviation of the pair's co-occurrence
    /// count across runs.
    pub fn exp_sigma(&self, pair: (u32, u32)) -> (f64, f64) {
        let (sum, sumsq) = self.sums.get(&pair).copied().unwrap_or((0, 0));
        let runs = self.runs as f64;
        let exp = sum as f64 / runs;
        let var = sumsq as f64 / runs - exp * exp;
        (exp, var.max(0.0).sqrt())
    }
}

/// Runs the null simulation and returns per-pair statistics.
pub fn simulate_null(matrix: &YearMatrix, runs: usize, seed: u64) -> Result<NullStats, NoveltyError> {
    let universe = matrix.package_count();
    for (i, &degree) in matrix.row_degrees.iter().enumerate() {
        if degree > universe {
            return Err(NoveltyError::DegreeExceedsUniverse {
                project_id: matrix.project_ids[i].clone(),
                degree,
                universe,
            });
        }
    }
    let run_counts: Vec<HashMap<(u32, u32), u64>> = (0..runs)
        .into_par_iter()
        .map(|run| simulate_one_run(matrix, seed, run))
        .collect();
    Ok(NullStats::from_runs(run_counts))
}

fn simulate_one_run(matrix: &YearMatrix, seed: u64, run: usize) -> HashMap<(u32, u32), u64> {
    let mut rng = substream(seed, &novelty_run_path(matrix.year, run));
    let universe = matrix.package_count();
    let base: Vec<u32> = (0..universe as u32).collect();
    let mut pool = vec![0u32; universe];
    let mut counts: HashMap<(u32, u32), u64> = HashMap::new();

    for &degree in &matrix.row_degrees {
        pool.copy_from_slice(&base);
        // Partial Fisher-Yates: the first `degree` slots become a uniform
        // random subset.
        for slot in 0..degree {
            let pick = rng.gen_range(slot..universe);
            pool.swap(slot, pick);
        }
        let drawn = &mut pool[..degree];
        drawn.sort_unstable();
        debug_assert_eq!(drawn.len(), degree);
        for a_pos in 0..drawn.len() {
            for b_pos in a_pos + 1..drawn.len() {
                *counts.entry((drawn[a_pos], drawn[b_pos])).or_insert(0) += 1;
            }
        }
    }
    counts
}
