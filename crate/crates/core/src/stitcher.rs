//! Stitch planning over shadowy intervals and vertex splitting.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::conflict_graph::{Stitch, VertexId};
use crate::error::StitchError;
use crate::geometry::{shadow_of, shadowy_intervals, Coord, Shadow, ShadowyInterval, SpacingRules};
use crate::tecg::Tecg;
use crate::token_graph::{Scc, TokenId};

/// Routing-cost charges for stitching.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Penalties {
    pub penalty_st: i64,
    pub penalty_unsolvable: i64,
}

impl Default for Penalties {
    fn default() -> Self {
        Penalties { penalty_st: 20, penalty_unsolvable: 10_000 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StitchPlan {
    pub target: VertexId,
    /// Cut positions along the wire axis, increasing.
    pub cuts: Vec<Coord>,
    pub num_st: usize,
    pub cost_delta: i64,
    pub solvable: bool,
}

impl StitchPlan {
    fn unsolvable(target: VertexId, p: &Penalties) -> Self {
        StitchPlan { target, cuts: Vec::new(), num_st: 0, cost_delta: p.penalty_unsolvable, solvable: false }
    }

    fn with_cuts(target: VertexId, cuts: Vec<Coord>, p: &Penalties) -> Self {
        let num_st = cuts.len();
        StitchPlan { target, cuts, num_st, cost_delta: num_st as i64 * p.penalty_st, solvable: true }
    }
}

/// Cut position inside `iv`, kept strictly inside the wire `[lo, hi]`.
fn cut_in(iv: &ShadowyInterval<TokenId>, lo: Coord, hi: Coord) -> Option<Coord> {
    let a = iv.lo.max(lo + 1);
    let b = iv.hi.min(hi - 1);
    if a > b {
        return None;
    }
    Some(iv.midpoint().clamp(a, b))
}

/// Sweeps intervals of a wire spanning `[lo, hi]` and places the fewest cuts
/// so that no piece sees more than two tokens.
///
/// Cuts go into the latest interval seen by at most one token. After a cut
/// the passed set restarts from the cut interval, since the new piece
/// begins inside it.
pub fn sweep_intervals(
    target: VertexId,
    intervals: &[ShadowyInterval<TokenId>],
    lo: Coord,
    hi: Coord,
    penalties: &Penalties,
) -> StitchPlan {
    if intervals.iter().any(|iv| iv.labels.len() > 2) {
        return StitchPlan::unsolvable(target, penalties);
    }
    let mut cuts = Vec::new();
    let mut cand: Option<usize> = None;
    let mut last: Option<usize> = None;
    let mut passed: BTreeSet<TokenId> = BTreeSet::new();
    for (k, iv) in intervals.iter().enumerate() {
        passed.extend(iv.labels.iter().copied());
        if passed.len() > 2 {
            let Some(c) = cand.filter(|&c| Some(c) != last) else {
                log::debug!("no cut position before interval {k} on {target}");
                return StitchPlan::unsolvable(target, penalties);
            };
            let Some(at) = cut_in(&intervals[c], lo, hi) else {
                return StitchPlan::unsolvable(target, penalties);
            };
            cuts.push(at);
            passed = intervals[c..=k].iter().flat_map(|iv| iv.labels.iter().copied()).collect();
            if passed.len() > 2 {
                return StitchPlan::unsolvable(target, penalties);
            }
            last = Some(c);
        }
        // A cut inside the interval that overflows would leave the overflow
        // on the left piece, so candidates are only taken after the check.
        if iv.labels.len() <= 1 {
            cand = Some(k);
        }
    }
    StitchPlan::with_cuts(target, cuts, penalties)
}

fn neighbor_shadows(tecg: &Tecg, v: VertexId, rules: &SpacingRules) -> Vec<(Shadow, TokenId)> {
    let cg = tecg.cg();
    cg.neighbors(v)
        .filter_map(|n| {
            let seg = cg.segment(n)?;
            Some((shadow_of(seg, rules), cg.token(n).ok()?))
        })
        .collect()
}

/// Shadowy intervals of `v` labelled by the tokens of its conflict
/// neighbours that belong to `scc`.
pub fn scc_intervals(
    tecg: &Tecg,
    v: VertexId,
    scc: &Scc,
    rules: &SpacingRules,
) -> Result<Vec<ShadowyInterval<TokenId>>, StitchError> {
    let seg = tecg.cg().segment(v).ok_or(crate::error::GraphError::NoGeometry(v))?;
    let shadows: Vec<(Shadow, TokenId)> =
        neighbor_shadows(tecg, v, rules).into_iter().filter(|(_, t)| scc.contains(*t)).collect();
    Ok(shadowy_intervals(seg, &shadows))
}

/// Shadowy intervals of `v` under every neighbour shadow.
pub fn all_intervals(tecg: &Tecg, v: VertexId, rules: &SpacingRules) -> Result<Vec<ShadowyInterval<TokenId>>, StitchError> {
    let seg = tecg.cg().segment(v).ok_or(crate::error::GraphError::NoGeometry(v))?;
    Ok(shadowy_intervals(seg, &neighbor_shadows(tecg, v, rules)))
}

/// Stitch positions the double patterning rule allows: only inside
/// stretches no shadow passes.
pub fn dpl_stitch_positions(intervals: &[ShadowyInterval<TokenId>], lo: Coord, hi: Coord) -> Vec<Coord> {
    intervals.iter().filter(|iv| iv.labels.is_empty()).filter_map(|iv| cut_in(iv, lo, hi)).collect()
}

fn conflicting_token(tecg: &Tecg, v: VertexId) -> Result<TokenId, StitchError> {
    let t = tecg.token(v)?;
    let cg = tecg.cg();
    if cg.neighbors(v).any(|n| cg.token(n).ok() == Some(t)) {
        Ok(t)
    } else {
        Err(StitchError::NoConflict(v))
    }
}

/// Plans stitches on `v` for one SCC holding its conflicting token.
pub fn plan_stitches(
    v: VertexId,
    scc: &Scc,
    tecg: &Tecg,
    rules: &SpacingRules,
    penalties: &Penalties,
) -> Result<StitchPlan, StitchError> {
    let tc = conflicting_token(tecg, v)?;
    if !scc.contains(tc) {
        return Ok(StitchPlan::unsolvable(v, penalties));
    }
    let seg = tecg.cg().segment(v).ok_or(crate::error::GraphError::NoGeometry(v))?;
    let intervals = scc_intervals(tecg, v, scc, rules)?;
    Ok(sweep_intervals(v, &intervals, seg.lo(), seg.hi(), penalties))
}

/// Plans stitches on `v` for every SCC holding its conflicting token and
/// merges the cuts.
pub fn plan_for_all_sccs(
    v: VertexId,
    tecg: &Tecg,
    rules: &SpacingRules,
    penalties: &Penalties,
) -> Result<StitchPlan, StitchError> {
    let tc = conflicting_token(tecg, v)?;
    let sccs: Vec<Scc> = tecg.tg().sccs_of(tc).cloned().collect();
    if sccs.is_empty() {
        log::info!("conflict on {v} has no scc around {tc}; not splittable");
        return Ok(StitchPlan::unsolvable(v, penalties));
    }
    let mut cuts = BTreeSet::new();
    for scc in &sccs {
        let p = plan_stitches(v, scc, tecg, rules, penalties)?;
        if !p.solvable {
            return Ok(StitchPlan::unsolvable(v, penalties));
        }
        cuts.extend(p.cuts);
    }
    Ok(StitchPlan::with_cuts(v, cuts.into_iter().collect(), penalties))
}

/// Splits the target of a solvable plan and re-inserts the pieces.
pub fn apply_stitches(plan: &StitchPlan, tecg: &mut Tecg) -> Result<(Vec<VertexId>, Vec<Stitch>), StitchError> {
    if !plan.solvable || plan.cuts.is_empty() {
        return Err(StitchError::Unsolvable(plan.target));
    }
    let (pieces, stitches) = tecg.apply_cuts(plan.target, &plan.cuts)?;
    let left = tecg.conflict_vertices();
    if pieces.iter().any(|p| left.contains(p)) {
        log::warn!("stitching {} left a conflict on its pieces", plan.target);
    }
    Ok((pieces, stitches))
}
