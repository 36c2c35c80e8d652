//! Seeded suite runs of both modes.

use rayon::prelude::*;
use serde::Serialize;
use tplroute::coloring::validate_layout;
use tplroute::gen::{generate, GenParams};
use tplroute::router::{run_flow, Mode, RouterConfig};

#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub seed: u64,
    pub mode: Mode,
    pub wirelength: i64,
    pub stitches: usize,
    pub conflicts: usize,
    pub unroutable: usize,
    /// Violations found by the independent layout check.
    pub violations: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteTotals {
    pub mode: Mode,
    pub runs: usize,
    pub wirelength: i64,
    pub stitches: usize,
    pub conflicts: usize,
    pub unroutable: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub params: GenParams,
    pub runs: Vec<RunSummary>,
    pub totals: Vec<SuiteTotals>,
}

/// Runs every seed in both modes. Each flow owns its state; runs are
/// spread over the rayon pool and collected in seed order.
pub fn run_suite(params: &GenParams, seeds: std::ops::Range<u64>, base: &RouterConfig) -> SuiteReport {
    let jobs: Vec<(u64, Mode)> = seeds.flat_map(|s| [(s, Mode::Triad), (s, Mode::Greedy)]).collect();
    let runs: Vec<RunSummary> = jobs
        .par_iter()
        .map(|&(seed, mode)| {
            let nl = generate(params, seed);
            let cfg = RouterConfig { mode, rules: nl.rules(), rng_seed: seed, ..base.clone() };
            let out = run_flow(&nl, &cfg, false);
            let wires: Vec<_> = out.layout.segments.iter().map(|s| (s.wire().expect("router output"), s.color)).collect();
            RunSummary {
                seed,
                mode,
                wirelength: out.report.wirelength,
                stitches: out.report.stitches,
                conflicts: out.report.conflicts,
                unroutable: out.report.unroutable,
                violations: validate_layout(&wires, &nl.rules()).len(),
            }
        })
        .collect();
    let totals = [Mode::Triad, Mode::Greedy]
        .into_iter()
        .map(|mode| {
            let rs: Vec<&RunSummary> = runs.iter().filter(|r| r.mode == mode).collect();
            SuiteTotals {
                mode,
                runs: rs.len(),
                wirelength: rs.iter().map(|r| r.wirelength).sum(),
                stitches: rs.iter().map(|r| r.stitches).sum(),
                conflicts: rs.iter().map(|r| r.conflicts).sum(),
                unroutable: rs.iter().map(|r| r.unroutable).sum(),
            }
        })
        .collect();
    SuiteReport { params: params.clone(), runs, totals }
}
