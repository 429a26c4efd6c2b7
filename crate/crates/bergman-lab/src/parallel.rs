//! Deterministic parallel drivers.
//!
//! `bergman-core` keeps every reduction sequential and order-fixed so that
//! results do not depend on scheduling.  The expensive outer loops, however,
//! are embarrassingly parallel: the projection integrates one radial node at
//! a time, and the multistart search runs one independent local search per
//! start.  The wrappers here fan those loops across the current rayon pool,
//! collect the partial results *in index order*, and hand them back to the
//! core's own order-preserving combinators — so the output is bit-identical
//! to the sequential path for any worker count.

use bergman_core::error::Result;
use bergman_core::luqikeng::{
    finalize_search, search_single_start, SearchConfig, SearchReport, SearchSeries, StartOutcome,
};
use bergman_core::projection::{
    project_from_contributions, project_node_contribution, Evaluable, ProjectedFunction,
    QuadratureGrid,
};
use rayon::prelude::*;

/// Bergman projection of `g`, with the per-radial-node quadrature spread
/// over the rayon pool.  Matches `bergman_core::projection::project` bit
/// for bit.
pub fn project_parallel<E>(g: &E, grid: &QuadratureGrid, cap: u32) -> Result<ProjectedFunction>
where
    E: Evaluable + Sync + ?Sized,
{
    let contributions: Vec<Vec<num_complex::Complex64>> = (0..grid.radial_nodes().len())
        .into_par_iter()
        .map(|node| project_node_contribution(g, grid, node, cap))
        .collect();
    project_from_contributions(grid, cap, contributions)
}

/// Multistart zero search with the local searches spread over the rayon
/// pool.  Start `i` derives its random stream from `(seed, i)` no matter
/// which worker runs it, and `finalize_search` merges outcomes by a fixed
/// rule, so the report matches the sequential search bit for bit.
pub fn zero_search_parallel<S>(series: &S, cfg: &SearchConfig) -> Result<SearchReport>
where
    S: SearchSeries + Sync + ?Sized,
{
    cfg.validate()?;
    let outcomes: Result<Vec<StartOutcome>> = (0..cfg.starts)
        .into_par_iter()
        .map(|start| search_single_start(series, cfg, start))
        .collect();
    finalize_search(series, cfg, &outcomes?)
}
