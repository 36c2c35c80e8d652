//! SVG drawing of one layout layer.

use std::fmt::Write;

use tplroute::format::Layout;
use tplroute::geometry::Coord;

pub const MASK_FILLS: [&str; 3] = ["#d62728", "#1f77b4", "#2ca02c"];
const UNCOLORED: &str = "#000000";
const OBSTACLE: &str = "#9e9e9e";
const MARGIN: Coord = 4;

fn bounds(l: &Layout) -> (Coord, Coord, Coord, Coord) {
    let mut b = (0, 0, 1, 1);
    let mut grow = |x0: Coord, y0: Coord, x1: Coord, y1: Coord| {
        b = (b.0.min(x0), b.1.min(y0), b.2.max(x1), b.3.max(y1));
    };
    for r in &l.obstacles {
        grow(r.x_lo, r.y_lo, r.x_hi, r.y_hi);
    }
    for s in &l.segments {
        grow(s.x0.min(s.x1) - s.hw, s.y0.min(s.y1) - s.hw, s.x0.max(s.x1) + s.hw, s.y0.max(s.y1) + s.hw);
    }
    b
}

/// Layout units map to SVG units one to one with y flipped. All layers
/// share the same frame.
pub fn render_layer(l: &Layout, layer: u8) -> String {
    let (x0, y0, x1, y1) = bounds(l);
    let (w, h) = (x1 - x0 + 2 * MARGIN, y1 - y0 + 2 * MARGIN);
    let tx = |x: Coord| x - x0 + MARGIN;
    let ty = |y: Coord| y1 - y + MARGIN;
    let mut out = String::new();
    writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#).unwrap();
    writeln!(out, r#"<rect class="frame" x="0" y="0" width="{w}" height="{h}" fill="white" stroke="black"/>"#).unwrap();
    for r in l.obstacles.iter().filter(|r| r.layer == layer) {
        writeln!(
            out,
            r#"<rect class="obstacle" x="{}" y="{}" width="{}" height="{}" fill="{OBSTACLE}"/>"#,
            tx(r.x_lo),
            ty(r.y_hi),
            r.x_hi - r.x_lo,
            r.y_hi - r.y_lo
        )
        .unwrap();
    }
    for s in l.segments.iter().filter(|s| s.layer == layer) {
        let fill = s.color.map_or(UNCOLORED, |c| MASK_FILLS[c as usize]);
        let (xl, xh) = (s.x0.min(s.x1) - s.hw, s.x0.max(s.x1) + s.hw);
        let (yl, yh) = (s.y0.min(s.y1) - s.hw, s.y0.max(s.y1) + s.hw);
        writeln!(
            out,
            r#"<rect class="wire" data-id="{}" x="{}" y="{}" width="{}" height="{}" fill="{fill}"/>"#,
            s.id,
            tx(xl),
            ty(yh),
            xh - xl,
            yh - yl
        )
        .unwrap();
    }
    for st in l.stitches.iter().filter(|s| s.layer == layer) {
        let (cx, cy) = (tx(st.x), ty(st.y));
        writeln!(
            out,
            r#"<path class="stitch" d="M{} {} L{} {} M{} {} L{} {}" stroke="black" stroke-width="0.5"/>"#,
            cx - 2,
            cy - 2,
            cx + 2,
            cy + 2,
            cx - 2,
            cy + 2,
            cx + 2,
            cy - 2
        )
        .unwrap();
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use tplroute::geometry::SpacingRules;

    #[test]
    fn empty_layout_has_only_the_frame() {
        let svg = render_layer(&Layout::new(1, SpacingRules::default()), 0);
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<rect").count(), 1);
    }
}
