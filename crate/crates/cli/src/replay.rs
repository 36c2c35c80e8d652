//! Mask decomposition of a fixed layout.

use serde::Serialize;
use tplroute::coloring::{validate_layout, Violation};
use tplroute::format::{Layout, LayoutSegment};
use tplroute::router::engine::{Engine, TriadEngine};
use tplroute::stitcher::Penalties;
use tplroute::tecg::Tecg;

#[derive(Clone, Debug, Serialize)]
pub struct DecomposeReport {
    pub segments: usize,
    pub stitches: usize,
    pub conflicts: usize,
    pub violations: Vec<Violation>,
}

pub struct Decomposition {
    pub layout: Layout,
    pub report: DecomposeReport,
    pub tecg: Tecg,
}

/// Inserts the segments in id order, stitching each one that closes a
/// conflict when a plan exists, then assigns masks.
pub fn decompose(input: &Layout, penalties: Penalties, allow_stitch: bool) -> Result<Decomposition, tplroute::error::FormatError> {
    let rules = input.rules();
    let mut wires = input.wires()?;
    wires.sort_by_key(|w| w.id);
    let mut eng = TriadEngine::new(rules, penalties, allow_stitch);
    let mut stitches = Vec::new();
    for w in wires {
        let done = eng.commit(vec![w]);
        stitches.extend(done.stitches);
    }
    let colored = eng.colored();
    let violations = validate_layout(&colored, &rules);
    let mut layout = Layout::new(input.header.layers, rules);
    layout.obstacles = input.obstacles.clone();
    layout.segments = colored.iter().map(|(w, c)| LayoutSegment::from_wire(w, *c)).collect();
    layout.segments.sort_by_key(|s| s.id);
    layout.stitches = stitches.into_iter().map(Into::into).collect();
    let report = DecomposeReport {
        segments: layout.segments.len(),
        stitches: layout.stitches.len(),
        conflicts: eng.conflict_count(),
        violations,
    };
    Ok(Decomposition { layout, report, tecg: eng.tecg })
}
