//! Exact per-component check of the pipeline's verdicts.

use std::collections::BTreeSet;

use serde::Serialize;
use tplroute::coloring::{assign_colors, brute_force_3color, ORACLE_BOUND};
use tplroute::conflict_graph::VertexId;
use tplroute::format::Layout;
use tplroute::geometry::WireSegment;
use tplroute::tecg::Tecg;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Agree,
    Disagree,
    Skipped,
}

#[derive(Clone, Debug, Serialize)]
pub struct ComponentCheck {
    pub segments: Vec<u32>,
    pub oracle_colorable: Option<bool>,
    pub pipeline_conflicts: usize,
    pub verdict: Verdict,
}

impl ComponentCheck {
    pub fn line(&self) -> String {
        let oracle = match self.oracle_colorable {
            Some(true) => "colorable",
            Some(false) => "uncolorable",
            None => "skipped (too large)",
        };
        let pipe = if self.pipeline_conflicts == 0 { "0 conflicts".to_string() } else { "conflict".to_string() };
        let v = match self.verdict {
            Verdict::Agree => "AGREE",
            Verdict::Disagree => "DISAGREE",
            Verdict::Skipped => "SKIP",
        };
        format!("segments {:?}: oracle: {oracle}; pipeline: {pipe}: {v}", self.segments)
    }
}

fn replay(wires: &[WireSegment], layout: &Layout) -> Tecg {
    let mut g = Tecg::new(layout.rules());
    let vs: Vec<VertexId> = wires.iter().map(|w| g.add_segment(*w).expect("unique ids")).collect();
    for v in vs {
        g.connect_geometric(v).expect("live vertex");
    }
    g
}

/// Splits the layout's conflict graph into components and compares the
/// exact oracle with the token graph verdict on each.
pub fn verify(layout: &Layout) -> Result<Vec<ComponentCheck>, tplroute::error::FormatError> {
    let mut wires = layout.wires()?;
    wires.sort_by_key(|w| w.id);
    let whole = replay(&wires, layout);
    let cg = whole.cg();
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for v in cg.vertex_ids() {
        if !seen.insert(v) {
            continue;
        }
        let mut comp = vec![v];
        let mut k = 0;
        while k < comp.len() {
            for n in cg.neighbors(comp[k]) {
                if seen.insert(n) {
                    comp.push(n);
                }
            }
            k += 1;
        }
        comp.sort();
        let part: Vec<WireSegment> = comp.iter().filter_map(|&x| cg.segment(x).copied()).collect();
        let g = replay(&part, layout);
        let ma = assign_colors(&g);
        let conflicts = g.conflict_count() + ma.residual.len();
        let oracle = match brute_force_3color(g.cg(), ORACLE_BOUND) {
            Ok(c) => Some(c.is_some()),
            Err(e) => {
                log::info!("component of {} segments skipped: {e}", part.len());
                None
            }
        };
        let verdict = match oracle {
            None => Verdict::Skipped,
            Some(ok) if ok == (conflicts == 0) => Verdict::Agree,
            Some(_) => Verdict::Disagree,
        };
        out.push(ComponentCheck {
            segments: part.iter().map(|w| w.id.0).collect(),
            oracle_colorable: oracle,
            pipeline_conflicts: conflicts,
            verdict,
        });
    }
    Ok(out)
}
