//! Deterministic SVG rendering: stereographic projection of graphs
//! and colored-square plots of parameter scans. All numbers are
//! printed with fixed precision so identical inputs give
//! byte-identical files.

use sphere_markov::embedded_graph::EmbeddedGraph;
use sphere_markov::numerics::{Vec3, EPS_GEOM};
use sphere_markov::param_space::{NodeStatus, ScanReport};
use sphere_markov::{Error, Result};
use std::fmt::Write as _;

const POLES: [(&str, Vec3); 6] = [
    ("+z", Vec3::new(0.0, 0.0, 1.0)),
    ("-z", Vec3::new(0.0, 0.0, -1.0)),
    ("+x", Vec3::new(1.0, 0.0, 0.0)),
    ("-x", Vec3::new(-1.0, 0.0, 0.0)),
    ("+y", Vec3::new(0.0, 1.0, 0.0)),
    ("-y", Vec3::new(0.0, -1.0, 0.0)),
];

struct Projection {
    pole: Vec3,
    u: Vec3,
    v: Vec3,
}

impl Projection {
    fn new(pole: Vec3) -> Self {
        let seed = if pole.z.abs() < 0.9 {
            Vec3::new(0.0, 0.0, 1.0)
        } else {
            Vec3::new(1.0, 0.0, 0.0)
        };
        let u = seed.sub(pole.scale(seed.dot(pole)));
        let u = u.scale(1.0 / u.norm());
        let v = pole.cross(u);
        Projection { pole, u, v }
    }

    fn apply(&self, p: Vec3) -> (f64, f64) {
        let denom = 1.0 - p.dot(self.pole);
        (p.dot(self.u) / denom, p.dot(self.v) / denom)
    }
}

fn pole_clear(g: &EmbeddedGraph, pole: Vec3) -> bool {
    g.edges().iter().all(|e| {
        e.polyline
            .iter()
            .all(|p| p.to_vec3().arc_dist(pole) > EPS_GEOM)
    })
}

fn pick_pole(g: &EmbeddedGraph, requested: Option<&str>) -> Result<Vec3> {
    match requested {
        Some(name) => {
            let (_, pole) = POLES
                .iter()
                .find(|(n, _)| *n == name)
                .ok_or_else(|| {
                    Error::InvalidInput(format!(
                        "unknown pole `{name}` (use +z -z +x -x +y -y)"
                    ))
                })?;
            if !pole_clear(g, *pole) {
                return Err(Error::ProjectionPoleOnGraph);
            }
            Ok(*pole)
        }
        None => POLES
            .iter()
            .map(|(_, p)| *p)
            .find(|&p| pole_clear(g, p))
            .ok_or(Error::ProjectionPoleOnGraph),
    }
}

/// Hue from a stable string hash (FNV-1a), for face and cell colors.
fn hue(text: &str) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in text.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x100000001b3);
    }
    h % 360
}

pub fn graph_svg(
    g: &EmbeddedGraph,
    pole_name: Option<&str>,
    size: u32,
    fill: bool,
) -> Result<String> {
    let projection = Projection::new(pick_pole(g, pole_name)?);
    let project_polyline = |pl: &[sphere_markov::numerics::SpherePoint]| -> Vec<(f64, f64)> {
        pl.iter().map(|p| projection.apply(p.to_vec3())).collect()
    };

    // Bounding box over every projected sample.
    let mut lo = (f64::MAX, f64::MAX);
    let mut hi = (f64::MIN, f64::MIN);
    for e in g.edges() {
        for (x, y) in project_polyline(&e.polyline) {
            lo = (lo.0.min(x), lo.1.min(y));
            hi = (hi.0.max(x), hi.1.max(y));
        }
    }
    let span = (hi.0 - lo.0).max(hi.1 - lo.1).max(1e-12);
    let pad = 0.05 * span;
    let scale = f64::from(size) / (span + 2.0 * pad);
    let to_px = |(x, y): (f64, f64)| -> (f64, f64) {
        ((x - lo.0 + pad) * scale, (hi.1 - y + pad) * scale)
    };

    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{size}\" height=\"{size}\" viewBox=\"0 0 {size} {size}\">"
    );

    if fill {
        // Faces painted large-to-small so nested faces stay visible;
        // the face wrapping the pole projects inverted and lands at
        // the bottom of the stack.
        let mut polygons: Vec<(usize, f64, String)> = Vec::new();
        for (fid, face) in g.faces().iter().enumerate() {
            let mut pts: Vec<(f64, f64)> = Vec::new();
            for &he in &face.walk {
                let pl = g.he_polyline(he);
                for p in project_polyline(&pl).into_iter().skip(1) {
                    pts.push(p);
                }
            }
            let area: f64 = pts
                .windows(2)
                .map(|w| w[0].0 * w[1].1 - w[1].0 * w[0].1)
                .sum::<f64>()
                .abs();
            let mut d = String::new();
            for (i, &pt) in pts.iter().enumerate() {
                let (x, y) = to_px(pt);
                let _ = write!(d, "{}{x:.3} {y:.3} ", if i == 0 { "M" } else { "L" });
            }
            d.push('Z');
            polygons.push((fid, area, d));
        }
        polygons.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        for (fid, _, d) in polygons {
            let _ = writeln!(
                out,
                "<path d=\"{d}\" fill=\"hsl({},60%,75%)\" stroke=\"none\"/>",
                hue(&format!("face{fid}"))
            );
        }
    }

    for e in g.edges() {
        let mut d = String::new();
        for (i, pt) in project_polyline(&e.polyline).into_iter().enumerate() {
            let (x, y) = to_px(pt);
            let _ = write!(d, "{}{x:.3} {y:.3} ", if i == 0 { "M" } else { "L" });
        }
        let _ = writeln!(
            out,
            "<path d=\"{}\" fill=\"none\" stroke=\"#1f4e79\" stroke-width=\"1.5\"/>",
            d.trim_end()
        );
    }
    for vtx in g.vertices() {
        let (x, y) = to_px(projection.apply(vtx.to_vec3()));
        let _ = writeln!(
            out,
            "<circle cx=\"{x:.3}\" cy=\"{y:.3}\" r=\"3\" fill=\"#c0392b\"/>"
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}

pub fn scan_svg(report: &ScanReport, size: u32) -> String {
    let cell = f64::from(size) / report.nx.max(report.ny) as f64;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{size}\" height=\"{size}\" viewBox=\"0 0 {size} {size}\">"
    );
    for (idx, node) in report.nodes.iter().enumerate() {
        let (ix, iy) = (idx % report.nx, idx / report.nx);
        let x = ix as f64 * cell;
        // Imaginary axis points up.
        let y = (report.ny - 1 - iy) as f64 * cell;
        let color = match &node.status {
            NodeStatus::Cell(d) => format!("hsl({},70%,55%)", hue(&d.to_string())),
            NodeStatus::Failed(_) => "#444444".to_string(),
        };
        let _ = writeln!(
            out,
            "<rect x=\"{x:.3}\" y=\"{y:.3}\" width=\"{cell:.3}\" height=\"{cell:.3}\" fill=\"{color}\"/>"
        );
    }
    out.push_str("</svg>\n");
    out
}
