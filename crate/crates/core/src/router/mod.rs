//! Grid router with token graph checks, stitching and rip-up.

pub mod decompose;
pub mod engine;
pub mod flow;
pub mod grid;
pub mod search;

use serde::{Deserialize, Serialize};

use crate::geometry::SpacingRules;
use crate::stitcher::Penalties;

pub use decompose::{decompose_nets, TwoPinId, TwoPinNet};
pub use flow::{net_order, run_flow, FlowOutput, FlowReport, IterationStat, RouteResult, Router};
pub use grid::{GridPoint, RoutingGrid};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Triad,
    Greedy,
}

/// Per-step routing costs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostWeights {
    pub unit_wire_cost: i64,
    /// Step against the layer's preferred direction.
    pub wrong_way_cost: i64,
    pub bend_cost: i64,
    pub via_cost: i64,
    pub conflict_penalty: i64,
    /// Cell where the wire would be pinned to a single mask.
    pub tight_cost: i64,
    /// Cell held by another net, when looking for wires to rip up.
    pub blocked_cost: i64,
    /// Added to a cell each time a wire through it is refused for a conflict.
    pub history_cost: i64,
}

impl Default for CostWeights {
    fn default() -> Self {
        CostWeights { unit_wire_cost: 1, wrong_way_cost: 3, bend_cost: 1, via_cost: 3, conflict_penalty: 5000, tight_cost: 2, blocked_cost: 1000, history_cost: 4 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RouterConfig {
    pub rules: SpacingRules,
    pub penalties: Penalties,
    pub costs: CostWeights,
    pub max_iterations: u32,
    pub conflict_prohibited_iterations: u32,
    pub mode: Mode,
    pub allow_stitch: bool,
    pub rng_seed: u64,
}

impl Default for RouterConfig {
    fn default() -> Self {
        RouterConfig {
            rules: SpacingRules::default(),
            penalties: Penalties::default(),
            costs: CostWeights::default(),
            max_iterations: 30,
            conflict_prohibited_iterations: 15,
            mode: Mode::Triad,
            allow_stitch: true,
            rng_seed: 0,
        }
    }
}

impl RouterConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.conflict_prohibited_iterations > self.max_iterations {
            return Err(format!(
                "conflict-prohibited iterations ({}) exceed the iteration limit ({})",
                self.conflict_prohibited_iterations, self.max_iterations
            ));
        }
        if self.max_iterations == 0 {
            return Err("at least one iteration is needed".into());
        }
        Ok(())
    }
}
