//! Refining a seed graph towards an invariant graph `G` with
//! `G` contained in `f^{-1}(G)`.
//!
//! One refinement step pulls the current graph back through the map
//! and extracts the isotopic subgraph; under expansion the step is a
//! contraction near the invariant graph, so the invariance residual
//! decays geometrically.

use crate::embedded_graph::{slerp, EmbeddedGraph, GraphEdge, SupportIndex};
use crate::error::{Error, Result};
use crate::embedded_graph::EPS_SNAP;
use crate::numerics::{sph_dist, RationalMap, SpherePoint, Vec3, DELTA_SAMPLE};
use crate::pullback::{extract_isotopic_subgraph, iterated_preimage};

/// Knobs for [`refine_to_invariant`].
#[derive(Debug, Clone)]
pub struct IterationConfig {
    /// Hard iteration cap.
    pub max_iterations: usize,
    /// Isotopy tube radius handed to the subgraph extraction.
    pub delta1: f64,
    /// Stop once the invariance residual falls below this.
    pub eps_invariant: f64,
    /// After the burn-in, consecutive residuals must contract by at
    /// least this factor.
    pub lambda_max: f64,
    /// Iterations exempt from the contraction test.
    pub burn_in: usize,
    /// Edge budget for pullbacks.
    pub edge_cap: usize,
    /// Polyline sampling step for the iterates; coarser steps trade
    /// the attainable residual floor for speed.
    pub sample_step: f64,
    /// Pullback depth each iteration starts from; raised further when
    /// the pulled-back graph is too coarse around the seed.
    pub pullback_depth: usize,
}

impl Default for IterationConfig {
    fn default() -> Self {
        IterationConfig {
            max_iterations: 40,
            delta1: 0.5,
            eps_invariant: 1e-6,
            lambda_max: 0.9,
            burn_in: 3,
            edge_cap: 200_000,
            sample_step: DELTA_SAMPLE,
            pullback_depth: 1,
        }
    }
}

/// Outcome of a successful refinement.
#[derive(Debug, Clone)]
pub struct RefinementReport {
    pub graph: EmbeddedGraph,
    pub iterations: usize,
    /// Invariance residual after each iteration.
    pub residuals: Vec<f64>,
}

/// Numerically checks `f(G)` against the support of `G`: the maximum
/// over samples of the distance from the image to the graph.
/// `density` subsamples every polyline segment that many times, so
/// the residual is probed between stored samples too.
pub fn invariance_residual(f: &RationalMap, g: &EmbeddedGraph, density: usize) -> Result<f64> {
    let density = density.max(1);
    let mut worst = 0.0f64;
    for e in g.edges() {
        for w in e.polyline.windows(2) {
            for k in 0..density {
                let t = k as f64 / density as f64;
                let p = SpherePoint::from_vec3(slerp(w[0].to_vec3(), w[1].to_vec3(), t));
                let image = f.evaluate(&p)?;
                let (d, _, _) = g.nearest_on_support(&image);
                worst = worst.max(d);
            }
        }
        let image = f.evaluate(e.polyline.last().unwrap())?;
        let (d, _, _) = g.nearest_on_support(&image);
        worst = worst.max(d);
    }
    Ok(worst)
}

/// Iterates pullback-and-extract from `seed` until the invariance
/// residual drops below `cfg.eps_invariant`.
///
/// If the extraction reports the pullback as too coarse, the depth of
/// the pullback is raised (up to 5) before giving up. A residual
/// sequence that stops contracting after the burn-in fails with
/// `NonConvergence`, as does exhausting the iteration budget.
pub fn refine_to_invariant(
    f: &RationalMap,
    seed: &EmbeddedGraph,
    cfg: &IterationConfig,
) -> Result<RefinementReport> {
    let mut cur = if seed.sample_step() == cfg.sample_step {
        seed.clone()
    } else {
        seed.resampled(cfg.sample_step)?
    };
    let mut residuals: Vec<f64> = Vec::new();
    let mut depth = cfg.pullback_depth.max(1);
    let mut iter = 0usize;
    while iter < cfg.max_iterations {
        let gamma = iterated_preimage(f, &cur, depth, cfg.edge_cap).map_err(|e| match e {
            Error::EmbeddingInconsistent(m) => Error::NonConvergence {
                iterations: iter,
                message: format!("pullback lost embeddedness: {m}"),
            },
            other => other,
        })?;
        // Widen the tube while the pullback is still far from the
        // current graph; a fixed radius would reject coarse seeds.
        let gap = crate::embedded_graph::directed_hausdorff(&gamma, &cur);
        let d_match = cur
            .vertices()
            .iter()
            .map(|v| {
                gamma
                    .vertices()
                    .iter()
                    .map(|w| sph_dist(v, w))
                    .fold(f64::MAX, f64::min)
            })
            .fold(0.0f64, f64::max);
        let delta1_eff = cfg.delta1.max(2.2 * gap).max(2.2 * d_match);
        let extraction = match extract_isotopic_subgraph(&cur, &gamma, delta1_eff) {
            Ok(ex) => ex,
            Err(Error::NeighbourhoodTooCoarse(m)) => {
                if depth >= cfg.pullback_depth.max(1) + 4 {
                    return Err(Error::NeighbourhoodTooCoarse(m));
                }
                depth += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        cur = extraction.graph;
        iter += 1;
        let res = invariance_residual(f, &cur, 1)?;
        residuals.push(res);
        if res < cfg.eps_invariant {
            return Ok(RefinementReport {
                graph: cur,
                iterations: iter,
                residuals,
            });
        }
        if iter > cfg.burn_in {
            let prev = residuals[iter - 2];
            if res > cfg.lambda_max * prev {
                return Err(Error::NonConvergence {
                    iterations: iter,
                    message: format!(
                        "residual stopped contracting: {prev:e} -> {res:e} (limit ratio {})",
                        cfg.lambda_max
                    ),
                });
            }
        }
    }
    Err(Error::NonConvergence {
        iterations: cfg.max_iterations,
        message: format!(
            "residual {:e} still above {:e} after {} iterations",
            residuals.last().copied().unwrap_or(f64::NAN),
            cfg.eps_invariant,
            cfg.max_iterations
        ),
    })
}

/// Re-refines an invariant graph after perturbing the map; the old
/// graph is the seed for the new map.
pub fn continue_graph(
    f_new: &RationalMap,
    g_old: &EmbeddedGraph,
    cfg: &IterationConfig,
) -> Result<RefinementReport> {
    refine_to_invariant(f_new, g_old, cfg)
}

const CROSSING_CAP: usize = 16;
// Intersection runs longer than this are arcs, not crossings.
const RUN_LEN: f64 = 5.0 * DELTA_SAMPLE;

/// Overlays two embedded graphs into one embedded graph supported on
/// the union of their supports.
///
/// Transverse crossings become new vertices (at most 16 per edge
/// pair). An edge lying entirely on the other graph's support is
/// dropped and its endpoints split the covering edges. Edges sharing
/// a sub-arc of positive length without either containing the other
/// fail with `InfiniteIntersection`.
pub fn promote_union(g: &EmbeddedGraph, h: &EmbeddedGraph) -> Result<EmbeddedGraph> {
    let g_support = SupportIndex::new(g.edges());
    let h_support = SupportIndex::new(h.edges());

    // Edges fully supported on the other graph are duplicates.
    let g_dup: Vec<bool> = g
        .edges()
        .iter()
        .map(|e| covered(&e.polyline, &h_support))
        .collect();
    let h_dup: Vec<bool> = h
        .edges()
        .iter()
        .map(|e| covered(&e.polyline, &g_support))
        .collect();

    // Crossing points between non-duplicate edges.
    let mut crossings: Vec<SpherePoint> = Vec::new();
    for (ai, a) in g.edges().iter().enumerate() {
        for (bi, b) in h.edges().iter().enumerate() {
            if g_dup[ai] && h_dup[bi] {
                continue;
            }
            let hits = polyline_hits(&a.polyline, &b.polyline);
            let clusters = cluster_hits(&hits);
            let mut isolated = 0usize;
            for cl in &clusters {
                if cl.span > RUN_LEN {
                    if g_dup[ai] || h_dup[bi] {
                        continue; // containment, handled by splitting
                    }
                    return Err(Error::InfiniteIntersection(format!(
                        "edges {ai} and {bi} share a sub-arc of length {:.3e}",
                        cl.span
                    )));
                }
                isolated += 1;
                crossings.push(cl.point);
            }
            if isolated > CROSSING_CAP {
                return Err(Error::InfiniteIntersection(format!(
                    "edges {ai} and {bi} cross {isolated} times"
                )));
            }
        }
    }

    // Merged vertex list: g's, then unmatched h's, then crossings.
    let mut vertices: Vec<SpherePoint> = g.vertices().to_vec();
    let add_vertex = |vertices: &mut Vec<SpherePoint>, p: SpherePoint| -> usize {
        for (i, q) in vertices.iter().enumerate() {
            if sph_dist(q, &p) < EPS_SNAP {
                return i;
            }
        }
        vertices.push(p);
        vertices.len() - 1
    };
    for v in h.vertices() {
        add_vertex(&mut vertices, *v);
    }
    for p in crossings {
        add_vertex(&mut vertices, p);
    }

    // Split every edge at the merged vertices in its interior, then
    // drop sub-edges whose support is already present (g wins ties).
    let mut kept: Vec<GraphEdge> = Vec::new();
    for src in [g, h] {
        for e in src.edges() {
            for piece in split_edge_at(&e.polyline, &vertices) {
                if !retained(&kept, &piece.polyline) {
                    kept.push(piece);
                }
            }
        }
    }
    let resolved: Vec<GraphEdge> = kept
        .into_iter()
        .map(|e| {
            let from = nearest_vertex(&vertices, &e.polyline[0]);
            let to = nearest_vertex(&vertices, e.polyline.last().unwrap());
            GraphEdge {
                from,
                to,
                polyline: e.polyline,
            }
        })
        .collect();
    EmbeddedGraph::new(vertices, resolved)
}

fn covered(pl: &[SpherePoint], support: &SupportIndex) -> bool {
    pl.iter().all(|p| {
        let (d, _, _) = support.nearest(p.to_vec3());
        d < EPS_SNAP
    })
}

fn retained(edges: &[GraphEdge], pl: &[SpherePoint]) -> bool {
    let mid = pl[pl.len() / 2];
    let a = &pl[0];
    let b = pl.last().unwrap();
    edges.iter().any(|e| {
        let ea = &e.polyline[0];
        let eb = e.polyline.last().unwrap();
        let ends_match = (sph_dist(ea, a) < EPS_SNAP && sph_dist(eb, b) < EPS_SNAP)
            || (sph_dist(ea, b) < EPS_SNAP && sph_dist(eb, a) < EPS_SNAP);
        if !ends_match {
            return false;
        }
        let s = SupportIndex::new(std::slice::from_ref(e));
        let (d, _, _) = s.nearest(mid.to_vec3());
        d < EPS_SNAP
    })
}

fn nearest_vertex(vertices: &[SpherePoint], p: &SpherePoint) -> usize {
    let mut best = (f64::MAX, 0usize);
    for (i, v) in vertices.iter().enumerate() {
        let d = sph_dist(v, p);
        if d < best.0 {
            best = (d, i);
        }
    }
    best.1
}

/// Splits a polyline at every vertex within `EPS_SNAP` of it, keeping
/// the encounter order along the arc.
fn split_edge_at(pl: &[SpherePoint], vertices: &[SpherePoint]) -> Vec<GraphEdge> {
    let mut pieces: Vec<Vec<SpherePoint>> = Vec::new();
    let mut cur: Vec<SpherePoint> = vec![pl[0]];
    for w in pl.windows(2) {
        let (a, b) = (w[0].to_vec3(), w[1].to_vec3());
        // Vertices hit inside this segment, ordered by parameter.
        let mut hits: Vec<(f64, usize)> = Vec::new();
        for (vi, v) in vertices.iter().enumerate() {
            let (d, t) = point_segment(v.to_vec3(), a, b);
            if d < EPS_SNAP && t > 1e-9 && t < 1.0 - 1e-9 {
                hits.push((t, vi));
            }
        }
        hits.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap().then(x.1.cmp(&y.1)));
        for (_, vi) in hits {
            let v = vertices[vi];
            if sph_dist(cur.last().unwrap(), &v) < EPS_SNAP {
                continue;
            }
            cur.push(v);
            pieces.push(std::mem::replace(&mut cur, vec![v]));
        }
        let endpoint = w[1];
        let at_vertex = vertices.iter().any(|v| sph_dist(v, &endpoint) < EPS_SNAP);
        if sph_dist(cur.last().unwrap(), &endpoint) > 1e-15 {
            cur.push(endpoint);
        }
        if at_vertex && cur.len() > 1 {
            pieces.push(std::mem::replace(&mut cur, vec![endpoint]));
        }
    }
    if cur.len() > 1 {
        pieces.push(cur);
    }
    pieces
        .into_iter()
        .filter(|pl| crate::embedded_graph::polyline_length(pl) > EPS_SNAP)
        .map(|polyline| GraphEdge {
            from: 0,
            to: 0,
            polyline,
        })
        .collect()
}

fn point_segment(p: Vec3, a: Vec3, b: Vec3) -> (f64, f64) {
    let ab = b.sub(a);
    let denom = ab.dot(ab);
    let t = if denom > 0.0 {
        (p.sub(a).dot(ab) / denom).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let q = a.add(ab.scale(t));
    (p.dist(q), t)
}

struct HitCluster {
    point: SpherePoint,
    span: f64,
}

/// Proximity hits between two polylines as (arc position on `a`,
/// midpoint of the close approach).
fn polyline_hits(a: &[SpherePoint], b: &[SpherePoint]) -> Vec<(f64, SpherePoint)> {
    let mut out = Vec::new();
    let mut ta = 0.0f64;
    for wa in a.windows(2) {
        let (a0, a1) = (wa[0].to_vec3(), wa[1].to_vec3());
        for wb in b.windows(2) {
            let (b0, b1) = (wb[0].to_vec3(), wb[1].to_vec3());
            if let Some((s, t)) = segment_close_params(a0, a1, b0, b1) {
                let pa = a0.add(a1.sub(a0).scale(s));
                let pb = b0.add(b1.sub(b0).scale(t));
                let mid = pa.add(pb).scale(0.5);
                out.push((ta + s * a0.arc_dist(a1), SpherePoint::from_vec3(mid)));
            }
        }
        ta += a0.arc_dist(a1);
    }
    out.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    out
}

/// Closest-approach parameters of two 3D segments when the distance
/// is below the snap tolerance.
fn segment_close_params(a0: Vec3, a1: Vec3, b0: Vec3, b1: Vec3) -> Option<(f64, f64)> {
    let d1 = a1.sub(a0);
    let d2 = b1.sub(b0);
    let r = a0.sub(b0);
    let (aa, bb, cc) = (d1.dot(d1), d1.dot(d2), d2.dot(d2));
    let (dd, ee) = (d1.dot(r), d2.dot(r));
    let denom = aa * cc - bb * bb;
    let mut s = if denom.abs() > 1e-30 {
        ((bb * ee - cc * dd) / denom).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let mut t = if cc > 0.0 {
        ((bb * s + ee) / cc).clamp(0.0, 1.0)
    } else {
        0.0
    };
    s = if aa > 0.0 {
        ((bb * t - dd) / aa).clamp(0.0, 1.0)
    } else {
        0.0
    };
    t = if cc > 0.0 {
        ((bb * s + ee) / cc).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let pa = a0.add(d1.scale(s));
    let pb = b0.add(d2.scale(t));
    if pa.dist(pb) < EPS_SNAP {
        Some((s, t))
    } else {
        None
    }
}

fn cluster_hits(hits: &[(f64, SpherePoint)]) -> Vec<HitCluster> {
    let mut clusters: Vec<HitCluster> = Vec::new();
    let mut i = 0usize;
    while i < hits.len() {
        let start = hits[i].0;
        let mut end = start;
        let mut j = i;
        while j + 1 < hits.len() && hits[j + 1].0 - end < 3.0 * DELTA_SAMPLE {
            j += 1;
            end = hits[j].0;
        }
        clusters.push(HitCluster {
            point: hits[(i + j) / 2].1,
            span: end - start,
        });
        i = j + 1;
    }
    clusters
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedded_graph::{builders, graph_hausdorff};
    use num_complex::Complex64;

    fn squaring() -> RationalMap {
        RationalMap::monic_plus_c(2, Complex64::new(0.0, 0.0)).unwrap()
    }

    #[test]
    fn unit_circle_is_nearly_invariant_for_squaring() {
        let f = squaring();
        let g = builders::circle(Complex64::new(0.0, 0.0), 1.0, 1, 8192).unwrap();
        let r1 = invariance_residual(&f, &g, 1).unwrap();
        let r4 = invariance_residual(&f, &g, 4).unwrap();
        assert!(r1 < 2e-6, "residual {r1:e}");
        assert!(r4 < 2e-6, "dense residual {r4:e}");
    }

    #[test]
    fn ellipse_refines_to_unit_circle() {
        let f = squaring();
        let seed = builders::ellipse(0.8, 1.2, 4, 64).unwrap();
        let report = refine_to_invariant(&f, &seed, &IterationConfig::default()).unwrap();
        assert!(report.iterations <= 25, "{} iterations", report.iterations);
        let target = builders::circle(Complex64::new(0.0, 0.0), 1.0, 1, 8192).unwrap();
        let err = graph_hausdorff(&report.graph, &target);
        assert!(err < 1e-4, "distance to unit circle {err:e}");
        assert!(*report.residuals.last().unwrap() < 1e-6);
    }

    #[test]
    fn refusing_enough_iterations_reports_nonconvergence() {
        let f = squaring();
        let seed = builders::ellipse(0.8, 1.2, 4, 64).unwrap();
        let cfg = IterationConfig {
            max_iterations: 1,
            ..IterationConfig::default()
        };
        match refine_to_invariant(&f, &seed, &cfg) {
            Err(Error::NonConvergence { iterations: 1, .. }) => {}
            other => panic!("expected NonConvergence, got {other:?}"),
        }
    }

    #[test]
    fn union_of_crossing_circles() {
        let a = builders::circle(Complex64::new(0.0, 0.0), 1.0, 1, 4096).unwrap();
        let b = builders::circle(Complex64::new(0.5, 0.0), 1.0, 1, 4096).unwrap();
        let u = promote_union(&a, &b).unwrap();
        // 2 original vertices + 2 crossings; each circle splits into 3
        // arcs; Euler then forces 4 faces.
        assert_eq!(u.vertices().len(), 4);
        assert_eq!(u.edges().len(), 6);
        assert_eq!(u.faces().len(), 4);
    }

    #[test]
    fn union_with_identical_support_is_a_refinement() {
        let a = builders::circle(Complex64::new(0.0, 0.0), 1.0, 1, 4096).unwrap();
        let b = builders::circle(Complex64::new(0.0, 0.0), 1.0, 2, 4096).unwrap();
        let u = promote_union(&a, &b).unwrap();
        assert_eq!(u.vertices().len(), 2);
        assert_eq!(u.edges().len(), 2);
        assert_eq!(u.faces().len(), 2);
    }

    #[test]
    fn partial_arc_overlap_is_rejected() {
        let a = builders::circle(Complex64::new(0.0, 0.0), 1.0, 1, 4096).unwrap();
        // Closed curve sharing the arc |theta| <= 0.5 with the unit
        // circle, returning outside it.
        let mut samples: Vec<SpherePoint> = Vec::new();
        let n = 512;
        for k in 0..n {
            let th = -0.5 + k as f64 / n as f64;
            samples.push(SpherePoint::from_complex(Complex64::from_polar(1.0, th)));
        }
        for k in 0..64 {
            let r = 1.0 + 0.3 * k as f64 / 64.0;
            samples.push(SpherePoint::from_complex(Complex64::from_polar(r, 0.5)));
        }
        for k in 0..n {
            let th = 0.5 - k as f64 / n as f64;
            samples.push(SpherePoint::from_complex(Complex64::from_polar(1.3, th)));
        }
        for k in 0..64 {
            let r = 1.3 - 0.3 * k as f64 / 64.0;
            samples.push(SpherePoint::from_complex(Complex64::from_polar(r, -0.5)));
        }
        let b = builders::from_closed_curve(&samples, &[0, samples.len() / 2]).unwrap();
        match promote_union(&a, &b) {
            Err(Error::InfiniteIntersection(_)) => {}
            other => panic!("expected InfiniteIntersection, got {other:?}"),
        }
    }
}
