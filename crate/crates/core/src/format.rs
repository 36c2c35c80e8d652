//! Line-oriented JSON netlist and layout files.
//!
//! Every line is one JSON object with a `kind` field. Field order is fixed by
//! the structs below, so parse then serialize reproduces a canonical file
//! byte for byte.

use serde::{Deserialize, Serialize};

use crate::conflict_graph::Stitch;
use crate::error::FormatError;
use crate::geometry::{Axis, Coord, NetId, Point, Rect, SegmentId, SpacingRules, WireSegment};

/// Preferred routing direction of a layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Dir {
    H,
    V,
}

impl Dir {
    pub fn axis(self) -> Axis {
        match self {
            Dir::H => Axis::Horizontal,
            Dir::V => Axis::Vertical,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetlistHeader {
    pub width: Coord,
    pub height: Coord,
    pub layers: Vec<Dir>,
    pub sp_w: Coord,
    pub hw: Coord,
    pub sp_tp: Coord,
}

/// Pin in track coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Pin {
    pub x: Coord,
    pub y: Coord,
    pub layer: u8,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetDecl {
    pub name: String,
    pub pins: Vec<Pin>,
}

/// Blocked cells, inclusive, in track coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Obstacle {
    pub layer: u8,
    pub x_lo: Coord,
    pub y_lo: Coord,
    pub x_hi: Coord,
    pub y_hi: Coord,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum NetlistLine {
    Header(NetlistHeader),
    Obstacle(Obstacle),
    Net(NetDecl),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Netlist {
    pub header: NetlistHeader,
    pub obstacles: Vec<Obstacle>,
    pub nets: Vec<NetDecl>,
}

/// Size statistics of a netlist.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetlistStats {
    pub size: String,
    pub layers: usize,
    pub nets: usize,
    pub pins: usize,
    pub two_pin_nets: usize,
}

fn parse_err(line: usize, message: impl Into<String>) -> FormatError {
    FormatError::Parse { line, message: message.into() }
}

fn json_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty())
}

impl Netlist {
    pub fn parse(text: &str) -> Result<Netlist, FormatError> {
        let mut header = None;
        let mut obstacles = Vec::new();
        let mut nets = Vec::new();
        for (n, line) in json_lines(text) {
            let parsed: NetlistLine = serde_json::from_str(line).map_err(|source| FormatError::Json { line: n, source })?;
            match parsed {
                NetlistLine::Header(h) if header.is_none() && n == first_line(text) => header = Some(h),
                NetlistLine::Header(_) => return Err(parse_err(n, "header must be the first line and appear once")),
                NetlistLine::Obstacle(o) => obstacles.push(o),
                NetlistLine::Net(d) => nets.push(d),
            }
        }
        let header = header.ok_or_else(|| parse_err(1, "missing header"))?;
        let nl = Netlist { header, obstacles, nets };
        nl.validate()?;
        Ok(nl)
    }

    fn validate(&self) -> Result<(), FormatError> {
        let h = &self.header;
        if h.width < 1 || h.height < 1 {
            return Err(parse_err(1, "grid must be at least 1x1"));
        }
        if h.layers.is_empty() || h.layers.len() > 16 {
            return Err(parse_err(1, "layer count must be 1..=16"));
        }
        if h.hw < 1 {
            return Err(parse_err(1, "hw must be at least 1"));
        }
        SpacingRules::new(h.sp_w, h.sp_tp)?;
        let inside = |x: Coord, y: Coord, l: u8| x >= 0 && y >= 0 && x < h.width && y < h.height && (l as usize) < h.layers.len();
        for (i, o) in self.obstacles.iter().enumerate() {
            if !(inside(o.x_lo, o.y_lo, o.layer) && inside(o.x_hi, o.y_hi, o.layer)) || o.x_lo > o.x_hi || o.y_lo > o.y_hi {
                return Err(parse_err(2 + i, "obstacle outside the grid or inverted"));
            }
        }
        let mut names = std::collections::BTreeSet::new();
        for d in &self.nets {
            if !names.insert(&d.name) {
                return Err(parse_err(0, format!("duplicate net {}", d.name)));
            }
            if let Some(p) = d.pins.iter().find(|p| !inside(p.x, p.y, p.layer)) {
                return Err(parse_err(0, format!("net {} pin ({}, {}, {}) outside the grid", d.name, p.x, p.y, p.layer)));
            }
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        let mut push = |l: &NetlistLine| {
            out.push_str(&serde_json::to_string(l).expect("plain data"));
            out.push('\n');
        };
        push(&NetlistLine::Header(self.header.clone()));
        for o in &self.obstacles {
            push(&NetlistLine::Obstacle(*o));
        }
        for d in &self.nets {
            push(&NetlistLine::Net(d.clone()));
        }
        out
    }

    pub fn rules(&self) -> SpacingRules {
        SpacingRules { sp_w: self.header.sp_w, sp_tp: self.header.sp_tp }
    }

    /// Distance between adjacent tracks in layout units.
    pub fn pitch(&self) -> Coord {
        2 * self.header.hw + self.header.sp_w
    }

    pub fn stats(&self) -> NetlistStats {
        let routed: Vec<&NetDecl> = self.nets.iter().filter(|d| d.pins.len() >= 2).collect();
        let pins: usize = self.nets.iter().map(|d| d.pins.len()).sum();
        NetlistStats {
            size: format!("{}x{}", self.header.width, self.header.height),
            layers: self.header.layers.len(),
            nets: self.nets.len(),
            pins,
            two_pin_nets: routed.iter().map(|d| d.pins.len() - 1).sum(),
        }
    }
}

fn first_line(text: &str) -> usize {
    json_lines(text).next().map_or(1, |(n, _)| n)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayoutHeader {
    pub layers: u8,
    pub sp_w: Coord,
    pub sp_tp: Coord,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayoutSegment {
    pub id: u32,
    pub net: u32,
    pub layer: u8,
    pub x0: Coord,
    pub y0: Coord,
    pub x1: Coord,
    pub y1: Coord,
    pub hw: Coord,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub color: Option<u8>,
}

impl LayoutSegment {
    pub fn from_wire(w: &WireSegment, color: Option<u8>) -> Self {
        LayoutSegment {
            id: w.id.0,
            net: w.net.0,
            layer: w.layer,
            x0: w.start.x,
            y0: w.start.y,
            x1: w.end.x,
            y1: w.end.y,
            hw: w.half_width,
            color,
        }
    }

    pub fn wire(&self) -> Result<WireSegment, FormatError> {
        Ok(WireSegment::new(
            SegmentId(self.id),
            NetId(self.net),
            self.layer,
            Point::new(self.x0, self.y0),
            Point::new(self.x1, self.y1),
            self.hw,
        )?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayoutStitch {
    pub net: u32,
    pub layer: u8,
    pub x: Coord,
    pub y: Coord,
}

impl From<Stitch> for LayoutStitch {
    fn from(s: Stitch) -> Self {
        LayoutStitch { net: s.net.0, layer: s.layer, x: s.at.x, y: s.at.y }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum LayoutLine {
    Header(LayoutHeader),
    Obstacle(Rect),
    Segment(LayoutSegment),
    Stitch(LayoutStitch),
}

/// Wires, obstacles and stitches in layout units.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Layout {
    pub header: LayoutHeader,
    pub obstacles: Vec<Rect>,
    pub segments: Vec<LayoutSegment>,
    pub stitches: Vec<LayoutStitch>,
}

impl Layout {
    pub fn new(layers: u8, rules: SpacingRules) -> Self {
        Layout {
            header: LayoutHeader { layers, sp_w: rules.sp_w, sp_tp: rules.sp_tp },
            obstacles: Vec::new(),
            segments: Vec::new(),
            stitches: Vec::new(),
        }
    }

    pub fn rules(&self) -> SpacingRules {
        SpacingRules { sp_w: self.header.sp_w, sp_tp: self.header.sp_tp }
    }

    pub fn parse(text: &str) -> Result<Layout, FormatError> {
        let mut layout: Option<Layout> = None;
        for (n, line) in json_lines(text) {
            let parsed: LayoutLine = serde_json::from_str(line).map_err(|source| FormatError::Json { line: n, source })?;
            match (parsed, layout.as_mut()) {
                (LayoutLine::Header(h), None) => {
                    SpacingRules::new(h.sp_w, h.sp_tp)?;
                    layout = Some(Layout::new(h.layers, SpacingRules { sp_w: h.sp_w, sp_tp: h.sp_tp }));
                }
                (LayoutLine::Header(_), Some(_)) => return Err(parse_err(n, "duplicate header")),
                (_, None) => return Err(parse_err(n, "header must come first")),
                (LayoutLine::Obstacle(r), Some(l)) => {
                    Rect::new(r.x_lo, r.y_lo, r.x_hi, r.y_hi, r.layer)?;
                    l.obstacles.push(r);
                }
                (LayoutLine::Segment(s), Some(l)) => {
                    s.wire().map_err(|e| parse_err(n, e.to_string()))?;
                    if s.color.is_some_and(|c| c > 2) {
                        return Err(parse_err(n, "color must be 0, 1 or 2"));
                    }
                    l.segments.push(s);
                }
                (LayoutLine::Stitch(s), Some(l)) => l.stitches.push(s),
            }
        }
        let layout = layout.ok_or_else(|| parse_err(1, "missing header"))?;
        let mut ids = std::collections::BTreeSet::new();
        if let Some(s) = layout.segments.iter().find(|s| !ids.insert(s.id)) {
            return Err(parse_err(0, format!("duplicate segment id {}", s.id)));
        }
        Ok(layout)
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        let mut push = |l: &LayoutLine| {
            out.push_str(&serde_json::to_string(l).expect("plain data"));
            out.push('\n');
        };
        push(&LayoutLine::Header(self.header));
        for r in &self.obstacles {
            push(&LayoutLine::Obstacle(*r));
        }
        for s in &self.segments {
            push(&LayoutLine::Segment(*s));
        }
        for s in &self.stitches {
            push(&LayoutLine::Stitch(*s));
        }
        out
    }

    pub fn wires(&self) -> Result<Vec<WireSegment>, FormatError> {
        self.segments.iter().map(|s| s.wire()).collect()
    }

    /// Sum of segment lengths in layout units.
    pub fn wirelength(&self) -> Coord {
        self.segments.iter().map(|s| (s.x1 - s.x0).abs() + (s.y1 - s.y0).abs()).sum()
    }
}
