//! Static SVG rendering of a clustered map on a hexagonal tiling.
//!
//! Tiles use pointy-top hexagons in odd-r offset layout: odd rows shift half
//! a tile to the right.

use std::fmt::Write;

use crate::formats::{MapFile, ObsId};

const TILE: f64 = 20.0;
const MARGIN: f64 = 10.0;
const UNLABELED: &str = "#d9d9d9";
const PALETTE: [&str; 12] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
    "#aec7e8", "#ffbb78",
];

#[derive(Debug, Clone, Default)]
pub struct SvgOptions {
    /// One extra map per variable with each prototype drawn as a histogram.
    pub panels: bool,
    /// Black hexagons sized by the number of observations per neuron.
    pub counts: bool,
    /// Observation ids whose BMUs are joined by a polyline, in order.
    pub trajectory: Vec<ObsId>,
}

pub fn cluster_color(cluster: Option<usize>) -> &'static str {
    match cluster {
        Some(c) => PALETTE[c % PALETTE.len()],
        None => UNLABELED,
    }
}

/// Centre of tile `(row, col)` relative to the panel origin.
pub fn hex_center(row: usize, col: usize) -> (f64, f64) {
    let w = 3f64.sqrt() * TILE;
    let shift = if row % 2 == 1 { w / 2.0 } else { 0.0 };
    (MARGIN + w / 2.0 + col as f64 * w + shift, MARGIN + TILE + row as f64 * 1.5 * TILE)
}

fn hex_points(cx: f64, cy: f64, radius: f64) -> String {
    (0..6)
        .map(|k| {
            let a = std::f64::consts::PI / 180.0 * (60.0 * k as f64 - 30.0);
            format!("{:.3},{:.3}", cx + radius * a.cos(), cy + radius * a.sin())
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn panel_size(map: &MapFile) -> (f64, f64) {
    let w = 3f64.sqrt() * TILE;
    let width = 2.0 * MARGIN + w * (map.cols as f64 + 0.5);
    let height = 2.0 * MARGIN + TILE * (1.5 * map.rows as f64 + 0.5);
    (width, height)
}

fn tiles(out: &mut String, map: &MapFile, dx: f64) {
    for n in &map.neurons {
        let (cx, cy) = hex_center(n.row, n.col);
        let _ = writeln!(
            out,
            r##"<polygon class="tile" data-neuron="{}" points="{}" fill="{}" stroke="#ffffff" stroke-width="1"/>"##,
            n.index,
            hex_points(cx + dx, cy, TILE),
            cluster_color(n.cluster)
        );
    }
}

fn count_overlay(out: &mut String, map: &MapFile) {
    let max = map.neurons.iter().map(|n| n.count).max().unwrap_or(0).max(1) as f64;
    for n in &map.neurons {
        let (cx, cy) = hex_center(n.row, n.col);
        let r = 0.9 * TILE * (n.count as f64 / max).sqrt();
        let _ = writeln!(
            out,
            r##"<polygon class="count" data-neuron="{}" data-radius="{r:.3}" points="{}" fill="#000000"/>"##,
            n.index,
            hex_points(cx, cy, r)
        );
    }
}

fn trajectory(out: &mut String, map: &MapFile, ids: &[ObsId]) -> Result<(), ObsId> {
    let mut points = Vec::with_capacity(ids.len());
    for id in ids {
        let a = map.assignments.iter().find(|a| &a.id == id).ok_or_else(|| id.clone())?;
        let n = &map.neurons[a.bmu];
        let (cx, cy) = hex_center(n.row, n.col);
        points.push(format!("{cx:.3},{cy:.3}"));
    }
    let _ = writeln!(
        out,
        r##"<polyline class="trajectory" points="{}" fill="none" stroke="#000000" stroke-width="2"/>"##,
        points.join(" ")
    );
    Ok(())
}

/// Histogram glyph of variable `var` for every neuron, scaled to the range
/// of that variable over all prototypes.
fn glyph_panel(out: &mut String, map: &MapFile, var: usize, dx: f64) {
    let (lo, hi) = map
        .neurons
        .iter()
        .flat_map(|n| n.prototype.get(var))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), h| {
            let bins = h.bins();
            (lo.min(bins[0].lower), hi.max(bins[bins.len() - 1].upper))
        });
    let span = (hi - lo).max(f64::EPSILON);
    let max_height = map
        .neurons
        .iter()
        .flat_map(|n| n.prototype.get(var))
        .flat_map(|h| h.bins().iter().map(|b| b.weight / (b.upper - b.lower).max(span * 1e-3)))
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let _ = writeln!(out, r#"<g class="panel" data-variable="{var}">"#);
    tiles(out, map, dx);
    let box_w = 1.2 * TILE;
    let box_h = 0.9 * TILE;
    for n in &map.neurons {
        let Some(h) = n.prototype.get(var) else { continue };
        let (cx, cy) = hex_center(n.row, n.col);
        let (x0, y0) = (cx + dx - box_w / 2.0, cy + box_h / 2.0);
        for b in h.bins() {
            let x = x0 + (b.lower - lo) / span * box_w;
            let w = ((b.upper - b.lower) / span * box_w).max(0.3);
            let hgt = b.weight / (b.upper - b.lower).max(span * 1e-3) / max_height * box_h;
            let _ = writeln!(
                out,
                r##"<rect x="{x:.3}" y="{:.3}" width="{w:.3}" height="{hgt:.3}" fill="#ffffff" fill-opacity="0.85"/>"##,
                y0 - hgt
            );
        }
    }
    out.push_str("</g>\n");
}

/// Renders the map. Fails with the first trajectory id missing from the map.
pub fn render(map: &MapFile, opts: &SvgOptions) -> Result<String, ObsId> {
    let (pw, ph) = panel_size(map);
    let dim = map.neurons.first().map_or(0, |n| n.prototype.len());
    let n_panels = if opts.panels { 1 + dim } else { 1 };
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.3}" height="{ph:.3}" viewBox="0 0 {:.3} {ph:.3}">"#,
        pw * n_panels as f64,
        pw * n_panels as f64
    );
    out.push_str("<g class=\"map\">\n");
    tiles(&mut out, map, 0.0);
    if opts.counts {
        count_overlay(&mut out, map);
    }
    if !opts.trajectory.is_empty() {
        trajectory(&mut out, map, &opts.trajectory)?;
    }
    out.push_str("</g>\n");
    if opts.panels {
        for var in 0..dim {
            glyph_panel(&mut out, map, var, pw * (var + 1) as f64);
        }
    }
    out.push_str("</svg>\n");
    Ok(out)
}
