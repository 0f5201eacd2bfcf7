//! Pulling graphs back through rational maps.
//!
//! An edge avoiding the critical values by [`EPS_CV`] lifts to exactly
//! `deg` disjoint arcs. Lifts are tracked by nearest-fiber branch
//! continuation: the full fiber is solved at every sample and each
//! branch follows its nearest root, with adaptive step halving when a
//! step is large compared to the fiber separation.

use rayon::prelude::*;

use crate::embedded_graph::{
    directed_hausdorff, EmbeddedGraph, GraphEdge, SupportIndex,
};
use crate::error::{Error, Result};
use crate::numerics::{
    sph_dist, RationalMap, SpherePoint, Vec3, EPS_CV, EPS_LIFT,
};

/// One connected component of the preimage of an edge.
#[derive(Debug, Clone)]
pub struct LiftedEdge {
    /// Samples spaced at most the source graph's step, mapping onto the source
    /// edge within `EPS_LIFT`.
    pub polyline: Vec<SpherePoint>,
    /// Index into the canonically sorted fiber of the source edge's
    /// start vertex.
    pub start_fiber_index: usize,
    /// Likewise for the end vertex.
    pub end_fiber_index: usize,
}

/// Lifts one edge of `g` through `f`; returns `deg` lifted arcs in
/// deterministic order (sorted by their starting point).
pub fn lift_edge(f: &RationalMap, g: &EmbeddedGraph, edge: usize) -> Result<Vec<LiftedEdge>> {
    let critical_values = f.critical_values()?;
    lift_edge_with_cvs(f, g, edge, &critical_values)
}

fn lift_edge_with_cvs(
    f: &RationalMap,
    g: &EmbeddedGraph,
    edge: usize,
    critical_values: &[SpherePoint],
) -> Result<Vec<LiftedEdge>> {
    let src = &g.edges()[edge].polyline;
    for p in src {
        for cv in critical_values {
            let d = sph_dist(p, cv);
            if d < EPS_CV {
                return Err(Error::CriticalValueOnEdge {
                    edge,
                    value: format!("{:?}", cv.to_complex()),
                    clearance: d,
                });
            }
        }
    }
    let d = f.degree();
    let start_fiber = f.fiber(&src[0])?;
    let mut branches: Vec<Vec<SpherePoint>> =
        start_fiber.iter().map(|p| vec![*p]).collect();
    let mut cur: Vec<SpherePoint> = start_fiber.clone();
    let step = g.sample_step();
    for pair in src.windows(2) {
        advance_branches(f, &mut branches, &mut cur, pair[0], pair[1], 0, edge, step)?;
    }
    let end_fiber = f.fiber(src.last().unwrap())?;
    let mut out = Vec::with_capacity(d);
    for (b, polyline) in branches.into_iter().enumerate() {
        let last = *polyline.last().unwrap();
        let (end_idx, dist) = nearest_index(&end_fiber, &last);
        if dist > 1e-6 {
            return Err(Error::RootFindingFailure(format!(
                "lift of edge {edge} does not terminate on the end fiber (off by {dist:e})"
            )));
        }
        out.push(LiftedEdge {
            polyline,
            start_fiber_index: b,
            end_fiber_index: end_idx,
        });
    }
    Ok(out)
}

/// Advances every branch across one source step, splitting the step
/// until the fiber assignment is unambiguous and the lifted spacing
/// stays below the sampling resolution.
fn advance_branches(
    f: &RationalMap,
    branches: &mut [Vec<SpherePoint>],
    cur: &mut [SpherePoint],
    w0: SpherePoint,
    w1: SpherePoint,
    depth: usize,
    edge: usize,
    step: f64,
) -> Result<()> {
    const MAX_DEPTH: usize = 24;
    let fiber = f.fiber(&w1)?;
    let minsep = min_pairwise(&fiber);
    if fiber.len() > 1 && minsep < 10.0 * EPS_LIFT {
        return Err(Error::CriticalValueOnEdge {
            edge,
            value: format!("{:?}", w1.to_complex()),
            clearance: minsep,
        });
    }
    let mut assignment = Vec::with_capacity(cur.len());
    let mut ok = true;
    let mut taken = vec![false; fiber.len()];
    for c in cur.iter() {
        let (idx, dist) = nearest_index(&fiber, c);
        if taken[idx] || (fiber.len() > 1 && dist > 0.4 * minsep) || dist > 8.0 * step {
            ok = false;
            break;
        }
        taken[idx] = true;
        assignment.push(idx);
    }
    if !ok {
        if depth >= MAX_DEPTH {
            return Err(Error::NonConvergence {
                iterations: depth,
                message: format!("branch continuation stalled lifting edge {edge}"),
            });
        }
        let mid = SpherePoint::from_vec3(crate::embedded_graph::slerp(
            w0.to_vec3(),
            w1.to_vec3(),
            0.5,
        ));
        advance_branches(f, branches, cur, w0, mid, depth + 1, edge, step)?;
        advance_branches(f, branches, cur, mid, w1, depth + 1, edge, step)?;
        return Ok(());
    }
    // Keep the lifted polylines at the sampling resolution.
    let max_move = cur
        .iter()
        .zip(assignment.iter())
        .map(|(c, &i)| sph_dist(c, &fiber[i]))
        .fold(0.0f64, f64::max);
    if max_move > step && depth < MAX_DEPTH {
        let mid = SpherePoint::from_vec3(crate::embedded_graph::slerp(
            w0.to_vec3(),
            w1.to_vec3(),
            0.5,
        ));
        advance_branches(f, branches, cur, w0, mid, depth + 1, edge, step)?;
        advance_branches(f, branches, cur, mid, w1, depth + 1, edge, step)?;
        return Ok(());
    }
    for (b, &i) in assignment.iter().enumerate() {
        cur[b] = fiber[i];
        branches[b].push(fiber[i]);
    }
    Ok(())
}

fn nearest_index(pts: &[SpherePoint], p: &SpherePoint) -> (usize, f64) {
    let mut best = (0usize, f64::MAX);
    for (i, q) in pts.iter().enumerate() {
        let d = sph_dist(p, q);
        if d < best.1 {
            best = (i, d);
        }
    }
    (best.0, best.1)
}

fn min_pairwise(pts: &[SpherePoint]) -> f64 {
    let mut m = f64::MAX;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            m = m.min(sph_dist(&pts[i], &pts[j]));
        }
    }
    m
}

/// Full preimage graph `f^{-1}(g)`: vertices are the fibers of `g`'s
/// vertices, edges the lifts of `g`'s edges, rotation from geometry.
pub fn graph_preimage(f: &RationalMap, g: &EmbeddedGraph) -> Result<EmbeddedGraph> {
    let critical_values = f.critical_values()?;
    let d = f.degree();
    let mut offsets = Vec::with_capacity(g.vertices().len());
    let mut vertices = Vec::with_capacity(d * g.vertices().len());
    for v in g.vertices() {
        let fib = f.fiber(v)?;
        if fib.len() > 1 && min_pairwise(&fib) < 1e-9 {
            return Err(Error::CriticalValueOnEdge {
                edge: usize::MAX,
                value: format!("{:?}", v.to_complex()),
                clearance: 0.0,
            });
        }
        offsets.push(vertices.len());
        vertices.extend(fib);
    }
    let lifts: Vec<Result<Vec<LiftedEdge>>> = (0..g.edges().len())
        .into_par_iter()
        .map(|e| lift_edge_with_cvs(f, g, e, &critical_values))
        .collect();
    let mut edges = Vec::with_capacity(d * g.edges().len());
    for (e, lifted) in lifts.into_iter().enumerate() {
        let lifted = lifted?;
        let (from_v, to_v) = (g.edges()[e].from, g.edges()[e].to);
        for lift in lifted {
            let from = offsets[from_v] + lift.start_fiber_index;
            let to = offsets[to_v] + lift.end_fiber_index;
            let mut polyline = lift.polyline;
            *polyline.first_mut().unwrap() = vertices[from];
            *polyline.last_mut().unwrap() = vertices[to];
            edges.push(GraphEdge { from, to, polyline });
        }
    }
    EmbeddedGraph::with_step(vertices, edges, g.sample_step())
}

/// `n`-fold preimage with an edge-count cap.
pub fn iterated_preimage(
    f: &RationalMap,
    g: &EmbeddedGraph,
    n: usize,
    edge_cap: usize,
) -> Result<EmbeddedGraph> {
    let mut cur = g.clone();
    for _ in 0..n {
        if cur.edges().len() * f.degree() > edge_cap {
            return Err(Error::ResourceLimit(format!(
                "preimage would exceed {edge_cap} edges"
            )));
        }
        cur = graph_preimage(f, &cur)?;
    }
    Ok(cur)
}

/// A subgraph of a pulled-back graph isotopic to a target graph.
#[derive(Debug, Clone)]
pub struct SubgraphExtraction {
    pub graph: EmbeddedGraph,
    /// For each edge of `graph`, the ids of the edges of the ambient
    /// graph whose polylines it concatenates.
    pub edge_traces: Vec<Vec<usize>>,
}

/// Extracts from `gamma` a subgraph isotopic to `g0` lying in the
/// `delta1`-neighbourhood of `g0`.
///
/// Vertices of `g0` are matched to their nearest `gamma` vertices (ties
/// broken by lowest id); each edge of `g0` is routed through `gamma`
/// inside the `delta1`-tube around that edge by successive shortest
/// paths through an interior waypoint, never reusing a `gamma` edge.
/// Faces of `gamma` contained in the `2 delta1`-neighbourhood of `g0`
/// must have diameter below an internal fraction of `delta1`; larger
/// ones trigger `NeighbourhoodTooCoarse` (increase the pullback depth).
pub fn extract_isotopic_subgraph(
    g0: &EmbeddedGraph,
    gamma: &EmbeddedGraph,
    delta1: f64,
) -> Result<SubgraphExtraction> {
    let delta = delta1 / 2.0;
    check_face_granularity(g0, gamma, delta1, delta)?;

    // Vertex matching, injective, ties by lowest id.
    let mut matched: Vec<usize> = Vec::with_capacity(g0.vertices().len());
    for (vi, v) in g0.vertices().iter().enumerate() {
        let mut best: Option<(f64, usize)> = None;
        for (wi, w) in gamma.vertices().iter().enumerate() {
            let d = sph_dist(v, w);
            if d <= delta && best.map(|(bd, _)| d < bd - 1e-15).unwrap_or(true) {
                best = Some((d, wi));
            }
        }
        let (_, wi) = best.ok_or_else(|| {
            Error::RoutingFailure(format!(
                "no vertex of the pulled-back graph within {delta:e} of vertex {vi}"
            ))
        })?;
        if matched.contains(&wi) {
            return Err(Error::RoutingFailure(format!(
                "vertices map to the same pulled-back vertex {wi}"
            )));
        }
        matched.push(wi);
    }

    // Adjacency of gamma for routing.
    let mut adjacency: Vec<Vec<(usize, usize)>> = vec![Vec::new(); gamma.vertices().len()];
    for (ei, e) in gamma.edges().iter().enumerate() {
        adjacency[e.from].push((ei, e.to));
        adjacency[e.to].push((ei, e.from));
    }
    let lengths: Vec<f64> = (0..gamma.edges().len())
        .map(|e| gamma.edge_length(e))
        .collect();

    let mut used = vec![false; gamma.edges().len()];
    let mut out_edges: Vec<GraphEdge> = Vec::with_capacity(g0.edges().len());
    let mut traces: Vec<Vec<usize>> = Vec::with_capacity(g0.edges().len());
    let matched_set: Vec<bool> = {
        let mut s = vec![false; gamma.vertices().len()];
        for &m in &matched {
            s[m] = true;
        }
        s
    };

    for (ei, e) in g0.edges().iter().enumerate() {
        let tube = SupportIndex::new(std::slice::from_ref(e));
        let allowed: Vec<bool> = gamma
            .edges()
            .iter()
            .map(|ge| {
                ge.polyline.iter().all(|p| {
                    let (d, _, _) = tube.nearest(p.to_vec3());
                    d <= delta1
                })
            })
            .collect();
        let start = matched[e.from];
        let goal = matched[e.to];
        // Interior waypoint: the gamma vertex nearest the edge midpoint.
        let mid = point_at_fraction(&e.polyline, 0.5);
        let waypoint = gamma
            .vertices()
            .iter()
            .enumerate()
            .filter(|(wi, w)| {
                sph_dist(w, &mid) <= delta && *wi != start && *wi != goal && allowed_vertex(&adjacency[*wi], &allowed)
            })
            .min_by(|a, b| {
                sph_dist(a.1, &mid)
                    .partial_cmp(&sph_dist(b.1, &mid))
                    .unwrap()
                    .then(a.0.cmp(&b.0))
            })
            .map(|(wi, _)| wi);
        let legs: Vec<(usize, usize)> = match waypoint {
            Some(m) => vec![(start, m), (m, goal)],
            None => {
                if start == goal {
                    return Err(Error::RoutingFailure(format!(
                        "loop edge {ei} has no interior waypoint vertex within {delta:e}"
                    )));
                }
                vec![(start, goal)]
            }
        };
        let mut polyline: Vec<SpherePoint> = Vec::new();
        let mut trace = Vec::new();
        for (leg_from, leg_to) in legs {
            let path = shortest_path(
                &adjacency,
                &lengths,
                &allowed,
                &used,
                &matched_set,
                gamma,
                leg_from,
                leg_to,
            )
            .ok_or_else(|| {
                Error::RoutingFailure(format!(
                    "no path for edge {ei} between matched vertices inside its tube"
                ))
            })?;
            for he in path {
                let pl = gamma.he_polyline(he);
                let skip = usize::from(!polyline.is_empty());
                polyline.extend(pl.into_iter().skip(skip));
                let edge_id = crate::embedded_graph::he_edge(he);
                used[edge_id] = true;
                trace.push(edge_id);
            }
        }
        out_edges.push(GraphEdge {
            from: e.from,
            to: e.to,
            polyline,
        });
        traces.push(trace);
    }

    let vertices: Vec<SpherePoint> = matched.iter().map(|&m| gamma.vertices()[m]).collect();
    let graph = EmbeddedGraph::with_step(vertices, out_edges, gamma.sample_step())
        .map_err(|err| Error::RoutingFailure(format!("routed subgraph is not embedded: {err}")))?;
    if graph.isotopy_signature() != g0.isotopy_signature() {
        return Err(Error::RoutingFailure(
            "extracted subgraph is not isotopic to the target".into(),
        ));
    }
    let drift = directed_hausdorff(&graph, g0);
    if drift > delta1 + gamma.sample_step() {
        return Err(Error::RoutingFailure(format!(
            "extracted subgraph drifts {drift:e} from the target (> delta1)"
        )));
    }
    Ok(SubgraphExtraction {
        graph,
        edge_traces: traces,
    })
}

fn allowed_vertex(adj: &[(usize, usize)], allowed: &[bool]) -> bool {
    adj.iter().any(|&(e, _)| allowed[e])
}

/// Faces of `gamma` contained in the `2 delta1`-neighbourhood of `g0`
/// must be finer than `delta`. Faces that are not contained in the
/// neighbourhood (the macroscopic complementary components) are exempt.
fn check_face_granularity(
    g0: &EmbeddedGraph,
    gamma: &EmbeddedGraph,
    delta1: f64,
    delta: f64,
) -> Result<()> {
    for (fid, face) in gamma.faces().iter().enumerate() {
        let mut boundary: Vec<Vec3> = Vec::new();
        for &he in &face.walk {
            let pl = gamma.he_polyline(he);
            let stride = (pl.len() / 32).max(1);
            boundary.extend(pl.iter().step_by(stride).map(|p| p.to_vec3()));
        }
        let near = boundary.iter().all(|p| {
            let (d, _, _) = g0.nearest_on_support(&SpherePoint::from_vec3(*p));
            d <= 2.0 * delta1
        });
        if !near {
            continue;
        }
        let mut diam = 0.0f64;
        for i in 0..boundary.len() {
            for j in i + 1..boundary.len() {
                diam = diam.max(boundary[i].arc_dist(boundary[j]));
            }
        }
        // Large boundary: the face is not inside the neighbourhood.
        // The threshold is capped at an absolute scale so that the
        // macroscopic complementary faces stay exempt even when the
        // tube is wide.
        if diam > (6.0 * delta1).min(1.5) {
            continue;
        }
        if diam >= delta {
            return Err(Error::NeighbourhoodTooCoarse(format!(
                "face {fid} near the target has diameter {diam:e} >= {delta:e}; increase pullback depth"
            )));
        }
    }
    Ok(())
}

/// Deterministic Dijkstra over gamma restricted to allowed, unused
/// edges, forbidding interior visits to matched vertices.
#[allow(clippy::too_many_arguments)]
fn shortest_path(
    adjacency: &[Vec<(usize, usize)>],
    lengths: &[f64],
    allowed: &[bool],
    used: &[bool],
    matched_set: &[bool],
    gamma: &EmbeddedGraph,
    start: usize,
    goal: usize,
) -> Option<Vec<usize>> {
    let n = adjacency.len();
    let mut dist = vec![f64::MAX; n];
    let mut prev: Vec<Option<usize>> = vec![None; n]; // entering half-edge
    let mut done = vec![false; n];
    dist[start] = 0.0;
    loop {
        let mut cur = None;
        let mut best = f64::MAX;
        for v in 0..n {
            if !done[v] && dist[v] < best {
                best = dist[v];
                cur = Some(v);
            }
        }
        let v = cur?;
        if v == goal {
            break;
        }
        done[v] = true;
        if v != start && matched_set[v] {
            continue; // matched vertices may only terminate a leg
        }
        for &(e, w) in &adjacency[v] {
            if !allowed[e] || used[e] || done[w] {
                continue;
            }
            let nd = dist[v] + lengths[e];
            if nd < dist[w] - 1e-15 {
                dist[w] = nd;
                let reversed = gamma.edges()[e].to == w;
                prev[w] = Some(crate::embedded_graph::half_edge(e, !reversed));
            }
        }
    }
    // Reconstruct.
    let mut path = Vec::new();
    let mut v = goal;
    while v != start {
        let he = prev[v]?;
        path.push(he);
        v = gamma.he_tail(he);
        if path.len() > adjacency.len() + lengths.len() {
            return None;
        }
    }
    path.reverse();
    Some(path)
}

fn point_at_fraction(pl: &[SpherePoint], frac: f64) -> SpherePoint {
    let total = crate::embedded_graph::polyline_length(pl);
    let target = total * frac;
    let mut acc = 0.0;
    for w in pl.windows(2) {
        let step = w[0].to_vec3().arc_dist(w[1].to_vec3());
        if acc + step >= target {
            let t = if step > 0.0 { (target - acc) / step } else { 0.0 };
            return SpherePoint::from_vec3(crate::embedded_graph::slerp(
                w[0].to_vec3(),
                w[1].to_vec3(),
                t,
            ));
        }
        acc += step;
    }
    *pl.last().unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedded_graph::builders;
    use num_complex::Complex64;

    fn z_pow(d: usize) -> RationalMap {
        let mut num = vec![Complex64::new(0.0, 0.0); d + 1];
        num[d] = Complex64::new(1.0, 0.0);
        RationalMap::new(crate::numerics::Poly::new(num), crate::numerics::Poly::new(vec![Complex64::new(1.0, 0.0)])).unwrap()
    }

    // Dense enough that chord sagitta stays below the lift accuracy.
    fn circle(r: f64, verts: usize) -> EmbeddedGraph {
        builders::circle(Complex64::new(0.0, 0.0), r, verts, 8192).unwrap()
    }

    /// Forward oracle: every lifted sample must map back onto the
    /// source edge.
    fn assert_maps_onto(f: &RationalMap, g: &EmbeddedGraph, lifts: &[LiftedEdge]) {
        for lift in lifts {
            for p in &lift.polyline {
                let image = f.evaluate(p).unwrap();
                let (d, _, _) = g.nearest_on_support(&image);
                assert!(d < 1e-6, "lift sample maps {d:e} away from the source edge");
            }
        }
    }

    #[test]
    fn square_map_lifts_radius_two_circle() {
        let f = z_pow(2);
        let g = circle(2.0, 2);
        let lifts = lift_edge(&f, &g, 0).unwrap();
        assert_eq!(lifts.len(), 2);
        assert_maps_onto(&f, &g, &lifts);
        let r = 2.0f64.sqrt();
        for lift in &lifts {
            for p in &lift.polyline {
                assert!((p.to_complex().norm() - r).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn cube_map_lifts_three_branches() {
        let f = z_pow(3);
        let g = circle(2.0, 2);
        let lifts = lift_edge(&f, &g, 0).unwrap();
        assert_eq!(lifts.len(), 3);
        assert_maps_onto(&f, &g, &lifts);
        // Branches start at distinct cube roots.
        let mut starts: Vec<usize> = lifts.iter().map(|l| l.start_fiber_index).collect();
        starts.sort_unstable();
        assert_eq!(starts, vec![0, 1, 2]);
    }

    #[test]
    fn preimage_of_radius_two_circle_is_root_two_circle() {
        let f = z_pow(2);
        let g = circle(2.0, 2);
        let pre = graph_preimage(&f, &g).unwrap();
        assert_eq!(pre.vertices().len(), 4);
        assert_eq!(pre.edges().len(), 4);
        assert_eq!(pre.faces().len(), 2);
        let target = circle(2.0f64.sqrt(), 4);
        assert!(crate::embedded_graph::graph_hausdorff(&pre, &target) < 1e-6);
    }

    #[test]
    fn unit_circle_is_fixed_by_square_map_preimage() {
        let f = z_pow(2);
        let g = circle(1.0, 1);
        let pre = graph_preimage(&f, &g).unwrap();
        assert_eq!(pre.vertices().len(), 2);
        assert!(crate::embedded_graph::graph_hausdorff(&pre, &g) < 1e-6);
    }

    #[test]
    fn edge_through_critical_value_is_rejected() {
        let f = z_pow(2);
        // Passes through 0, the finite critical value of z^2.
        let g = builders::circle(Complex64::new(0.5, 0.0), 0.5, 2, 512).unwrap();
        match lift_edge(&f, &g, 0) {
            Err(Error::CriticalValueOnEdge { clearance, .. }) => {
                assert!(clearance < EPS_CV);
            }
            other => panic!("expected CriticalValueOnEdge, got {other:?}"),
        }
    }

    #[test]
    fn iterated_preimage_respects_edge_cap() {
        let f = z_pow(2);
        let g = circle(2.0, 2);
        match iterated_preimage(&f, &g, 10, 16) {
            Err(Error::ResourceLimit(_)) => {}
            other => panic!("expected ResourceLimit, got {other:?}"),
        }
    }

    #[test]
    fn extraction_recovers_a_loop_through_the_preimage() {
        let f = z_pow(2);
        let g0 = circle(1.0, 1);
        let gamma = graph_preimage(&f, &circle(1.1, 1)).unwrap();
        let ex = extract_isotopic_subgraph(&g0, &gamma, 0.5).unwrap();
        assert_eq!(ex.graph.vertices().len(), 1);
        assert_eq!(ex.graph.edges().len(), 1);
        assert_eq!(ex.graph.isotopy_signature(), g0.isotopy_signature());
        // The loop concatenates both halves of the pulled-back circle.
        let mut trace = ex.edge_traces[0].clone();
        trace.sort_unstable();
        assert_eq!(trace, vec![0, 1]);
        assert!(directed_hausdorff(&ex.graph, &g0) < 0.1);
    }

    #[test]
    fn extraction_fails_without_nearby_vertices() {
        let g0 = circle(2.0, 1);
        let f = z_pow(2);
        let gamma = graph_preimage(&f, &circle(1.1, 1)).unwrap();
        match extract_isotopic_subgraph(&g0, &gamma, 0.2) {
            Err(Error::RoutingFailure(_)) => {}
            other => panic!("expected RoutingFailure, got {other:?}"),
        }
    }

    #[test]
    fn sliver_face_near_target_is_too_coarse() {
        let g0 = circle(1.0, 1);
        // Circle split at angles 0 and pi/4, plus a parallel arc at
        // radius 1.01 bounding a sliver face of diameter ~0.77.
        let arc = |r: f64, a0: f64, a1: f64| -> Vec<SpherePoint> {
            (0..=256)
                .map(|i| {
                    let t = a0 + (a1 - a0) * i as f64 / 256.0;
                    SpherePoint::from_complex(Complex64::from_polar(r, t))
                })
                .collect()
        };
        let a = SpherePoint::from_complex(Complex64::new(1.0, 0.0));
        let c = SpherePoint::from_complex(Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4));
        let gamma = EmbeddedGraph::new(
            vec![a, c],
            vec![
                GraphEdge { from: 0, to: 1, polyline: arc(1.0, 0.0, std::f64::consts::FRAC_PI_4) },
                GraphEdge { from: 1, to: 0, polyline: arc(1.0, std::f64::consts::FRAC_PI_4, 2.0 * std::f64::consts::PI) },
                GraphEdge {
                    from: 0,
                    to: 1,
                    polyline: {
                        let mut pl = arc(1.01, 0.0, std::f64::consts::FRAC_PI_4);
                        *pl.first_mut().unwrap() = a;
                        *pl.last_mut().unwrap() = c;
                        pl
                    },
                },
            ],
        )
        .unwrap();
        match extract_isotopic_subgraph(&g0, &gamma, 0.5) {
            Err(Error::NeighbourhoodTooCoarse(_)) => {}
            other => panic!("expected NeighbourhoodTooCoarse, got {other:?}"),
        }
    }
}
