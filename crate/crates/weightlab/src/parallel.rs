//! Parallel drivers. Work items are evaluated on a rayon pool and assembled
//! by index, so results never depend on scheduling.

use rayon::prelude::*;

use weightlab_core::lab::{run_row, sort_rows, ExperimentRow, ExtrapolationSpec};
use weightlab_core::lattice::DyadicGrid;
use weightlab_core::operators::Operator;
use weightlab_core::sparse::{find_domination, seeded_instance, Domination, DominationParams};

use crate::Error;

/// Environment variable capping the number of worker threads.
pub const THREADS_VAR: &str = "WEIGHTLAB_THREADS";

/// A pool sized by `WEIGHTLAB_THREADS`, or by rayon's default when unset.
pub fn thread_pool() -> Result<rayon::ThreadPool, Error> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_VAR) {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::Usage(format!("{THREADS_VAR} must be a positive integer, got {v:?}")))?;
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| Error::Usage(format!("cannot start worker threads: {e}")))
}

/// Every planned row of `spec`, evaluated in parallel and sorted by characteristic.
pub fn extrapolation_table(spec: &ExtrapolationSpec) -> Result<Vec<ExperimentRow>, Error> {
    let plans = spec.plan()?;
    let rows: Result<Vec<ExperimentRow>, _> = plans.par_iter().map(|p| run_row(spec, p)).collect();
    let mut rows = rows?;
    sort_rows(&mut rows);
    Ok(rows)
}

/// [`find_domination`] on the seeded instances `seed, seed + 1, …`.
pub fn domination_corpus(
    op: &Operator,
    grid: DyadicGrid,
    seeds: std::ops::Range<u64>,
    params: &DominationParams,
) -> Result<Vec<Domination>, Error> {
    let seeds: Vec<u64> = seeds.collect();
    let out: Result<Vec<Domination>, _> = seeds
        .par_iter()
        .map(|&s| {
            let (f, g) = seeded_instance(grid, s);
            find_domination(op, &f, &g, params)
        })
        .collect();
    Ok(out?)
}
