//! Markov partitions induced by an invariant graph.
//!
//! For an invariant graph `G` (so `f(G)` is supported on `G`), the
//! faces of `G` are the pieces and the faces of `f^{-1}(G)` the
//! sub-pieces; each sub-piece sits inside one piece and maps onto one
//! piece. Edges carry the one-dimensional symbolic dynamics: the
//! image of an edge traverses a sequence of edges, read off by
//! tracing the map along the polyline.

use crate::embedded_graph::{slerp, EmbeddedGraph, Location};
use crate::error::{Error, Result};
use crate::numerics::{RationalMap, SpherePoint};
use crate::pullback::graph_preimage;

/// Images are accepted as "on the graph" up to this distance.
pub const TOL_TRACE: f64 = 1e-4;

/// A verified Markov partition.
#[derive(Debug, Clone)]
pub struct MarkovPartition {
    pub graph: EmbeddedGraph,
    /// `f^{-1}(graph)`, whose faces are the sub-pieces.
    pub preimage: EmbeddedGraph,
    /// `face_matrix[i][j]`: sub-pieces inside piece `i` mapping onto
    /// piece `j`.
    pub face_matrix: Vec<Vec<usize>>,
    /// For each face of `preimage`: (containing piece, image piece).
    pub sub_piece_map: Vec<(usize, usize)>,
    /// `edge_matrix[i][j]`: traversals of edge `j` by the image of
    /// edge `i`.
    pub edge_matrix: Vec<Vec<usize>>,
}

/// Builds and verifies the partition induced by `g` under `f`.
///
/// Fails with `MarkovViolation` if a sub-piece sample cannot be
/// located inside a piece, or an edge image strays from the graph.
pub fn build_partition(f: &RationalMap, g: &EmbeddedGraph) -> Result<MarkovPartition> {
    let preimage = graph_preimage(f, g)?;
    let pieces = g.faces().len();
    let mut face_matrix = vec![vec![0usize; pieces]; pieces];
    let mut sub_piece_map = Vec::with_capacity(preimage.faces().len());
    for (sub, face) in preimage.faces().iter().enumerate() {
        let sample = face.sample;
        let inside = match g.face_containing(&sample) {
            Location::Face(i) => i,
            other => {
                return Err(Error::MarkovViolation {
                    piece: sub,
                    message: format!("sub-piece sample not interior to a piece: {other:?}"),
                })
            }
        };
        let image = f.evaluate(&sample)?;
        let onto = match g.face_containing(&image) {
            Location::Face(j) => j,
            other => {
                return Err(Error::MarkovViolation {
                    piece: sub,
                    message: format!("sub-piece image not interior to a piece: {other:?}"),
                })
            }
        };
        face_matrix[inside][onto] += 1;
        sub_piece_map.push((inside, onto));
    }
    let edge_matrix = edge_transition_matrix(f, g)?;
    Ok(MarkovPartition {
        graph: g.clone(),
        preimage,
        face_matrix,
        sub_piece_map,
        edge_matrix,
    })
}

/// One maximal stretch of a trace along a single edge.
#[derive(Debug, Clone, Copy)]
struct Run {
    edge: usize,
    first: usize,
    last: usize,
}

/// Classifies on-graph points to (edge, parameter), requiring each to
/// be within [`TOL_TRACE`] of the graph.
fn classify_on_graph(g: &EmbeddedGraph, pts: &[SpherePoint]) -> Result<Vec<(usize, f64)>> {
    pts.iter()
        .map(|p| {
            let (d, e, t) = g.nearest_on_support(p);
            if d > TOL_TRACE {
                Err(Error::MarkovViolation {
                    piece: e,
                    message: format!("traced image strays {d:e} from the graph"),
                })
            } else {
                Ok((e, t))
            }
        })
        .collect()
}

/// Splits a classified trace into edge traversals. A new run starts
/// when the edge changes or the parameter jumps (a loop edge being
/// re-entered through its vertex).
fn trace_runs(seq: &[(usize, f64)]) -> Vec<Run> {
    let mut runs: Vec<Run> = Vec::new();
    for (i, &(e, t)) in seq.iter().enumerate() {
        match runs.last_mut() {
            Some(r) if r.edge == e && (t - seq[r.last].1).abs() < 0.5 => {
                r.last = i;
            }
            _ => runs.push(Run {
                edge: e,
                first: i,
                last: i,
            }),
        }
    }
    // A sample landing exactly on a vertex may classify to any edge
    // incident to it, leaving one- or two-sample stubs pinned at a
    // polyline end. Drop them, then re-merge identical neighbours.
    if runs.len() > 1 {
        runs.retain(|r| {
            let stub = r.last - r.first <= 1
                && (r.first..=r.last).all(|i| {
                    let t = seq[i].1;
                    t < 0.05 || t > 0.95
                });
            !stub
        });
    }
    let mut merged: Vec<Run> = Vec::new();
    for r in runs {
        match merged.last_mut() {
            Some(m) if m.edge == r.edge && (seq[r.first].1 - seq[m.last].1).abs() < 0.5 => {
                m.last = r.last;
            }
            _ => merged.push(r),
        }
    }
    merged
}

/// Traversals of a classified trace as (edge, sample count,
/// increasing parameter direction).
pub(crate) fn trace_runs_public(seq: &[(usize, f64)]) -> Vec<(usize, usize, bool)> {
    trace_runs(seq)
        .into_iter()
        .map(|r| (r.edge, r.last - r.first + 1, seq[r.last].1 >= seq[r.first].1))
        .collect()
}

/// Counts how often the image of each edge traverses each edge.
pub fn edge_transition_matrix(f: &RationalMap, g: &EmbeddedGraph) -> Result<Vec<Vec<usize>>> {
    let n = g.edges().len();
    let mut m = vec![vec![0usize; n]; n];
    for (ei, e) in g.edges().iter().enumerate() {
        let images: Vec<SpherePoint> = e
            .polyline
            .iter()
            .map(|p| f.evaluate(p))
            .collect::<Result<_>>()?;
        let seq = classify_on_graph(g, &images)?;
        for run in trace_runs(&seq) {
            // A traversal must sweep most of the edge; short stubs
            // mean the trace resolution or the partition is off.
            let (t0, t1) = (seq[run.first].1, seq[run.last].1);
            if (t1 - t0).abs() < 0.9 {
                return Err(Error::TraceAmbiguous(format!(
                    "image of edge {ei} covers only [{t0:.3}, {t1:.3}] of edge {}",
                    run.edge
                )));
            }
            m[ei][run.edge] += 1;
        }
    }
    Ok(m)
}

/// Dominant eigendata of a non-negative matrix.
#[derive(Debug, Clone)]
pub struct PerronData {
    pub lambda: f64,
    /// Right eigenvector, normalized to maximum entry 1.
    pub vector: Vec<f64>,
}

/// Perron eigenvalue and eigenvector by power iteration on `A + I`
/// (which is primitive whenever `A` is irreducible). A reducible
/// matrix fails with its strongly connected components listed.
pub fn perron(a: &[Vec<f64>]) -> Result<PerronData> {
    let n = a.len();
    if n == 0 || a.iter().any(|row| row.len() != n) {
        return Err(Error::InvalidInput("matrix must be square".into()));
    }
    if a.iter().flatten().any(|&x| !(x >= 0.0)) {
        return Err(Error::InvalidInput("matrix must be non-negative".into()));
    }
    let comps = strongly_connected_components(a);
    if comps.len() > 1 {
        return Err(Error::Reducible { components: comps });
    }
    const TOL: f64 = 1e-12;
    const MAX: usize = 100_000;
    let mut v = vec![1.0 / n as f64; n];
    let mut lambda_shift = 0.0f64;
    for it in 0..MAX {
        let mut w = vec![0.0f64; n];
        for i in 0..n {
            let mut s = v[i]; // the +I term
            for j in 0..n {
                s += a[i][j] * v[j];
            }
            w[i] = s;
        }
        let norm = w.iter().cloned().fold(0.0f64, f64::max);
        if norm == 0.0 {
            return Err(Error::InvalidInput("matrix annihilates the cone".into()));
        }
        for x in &mut w {
            *x /= norm;
        }
        let diff = v
            .iter()
            .zip(&w)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        let done = diff < TOL;
        v = w;
        lambda_shift = norm;
        if done {
            break;
        }
        if it + 1 == MAX {
            return Err(Error::NonConvergence {
                iterations: MAX,
                message: format!("power iteration stuck at increment {diff:e}"),
            });
        }
    }
    Ok(PerronData {
        lambda: lambda_shift - 1.0,
        vector: v,
    })
}

/// Perron data certified as genuine eigendata: the residual
/// `A v - lambda v` must be below `1e-9` in the maximum norm.
pub fn expanding_lengths(a: &[Vec<f64>]) -> Result<PerronData> {
    let data = perron(a)?;
    let n = a.len();
    let mut residual = 0.0f64;
    for i in 0..n {
        let mut s = 0.0;
        for j in 0..n {
            s += a[i][j] * data.vector[j];
        }
        residual = residual.max((s - data.lambda * data.vector[i]).abs());
    }
    if residual > 1e-9 {
        return Err(Error::NonConvergence {
            iterations: 0,
            message: format!("eigenvector residual {residual:e} above 1e-9"),
        });
    }
    Ok(data)
}

/// Topological entropy of the edge dynamics, `ln` of the Perron root.
pub fn entropy(a: &[Vec<f64>]) -> Result<f64> {
    Ok(perron(a)?.lambda.ln())
}

pub fn usize_matrix(a: &[Vec<usize>]) -> Vec<Vec<f64>> {
    a.iter()
        .map(|row| row.iter().map(|&x| x as f64).collect())
        .collect()
}

/// Iterative Tarjan; components are listed in a deterministic order
/// with sorted members.
fn strongly_connected_components(a: &[Vec<f64>]) -> Vec<Vec<usize>> {
    let n = a.len();
    let adj: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..n).filter(|&j| a[i][j] > 0.0).collect())
        .collect();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<usize> = Vec::new();
    let mut next_index = 0usize;
    let mut comps: Vec<Vec<usize>> = Vec::new();
    // Explicit DFS stack: (node, next child position).
    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        let mut dfs: Vec<(usize, usize)> = vec![(root, 0)];
        while let Some(&mut (v, ref mut ci)) = dfs.last_mut() {
            if *ci == 0 {
                index[v] = next_index;
                low[v] = next_index;
                next_index += 1;
                stack.push(v);
                on_stack[v] = true;
            }
            if *ci < adj[v].len() {
                let w = adj[v][*ci];
                *ci += 1;
                if index[w] == usize::MAX {
                    dfs.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                dfs.pop();
                if let Some(&(parent, _)) = dfs.last() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().unwrap();
                        on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    comp.sort_unstable();
                    comps.push(comp);
                }
            }
        }
    }
    comps.sort();
    comps
}

/// Face itinerary: the piece containing each forward iterate. Points
/// landing on the graph make the symbol undefined.
pub fn itinerary(
    f: &RationalMap,
    g: &EmbeddedGraph,
    z: &SpherePoint,
    n: usize,
) -> Result<Vec<usize>> {
    let mut out = Vec::with_capacity(n);
    let mut p = *z;
    for k in 0..n {
        match g.face_containing(&p) {
            Location::Face(i) => out.push(i),
            other => {
                return Err(Error::TraceAmbiguous(format!(
                    "iterate {k} lies on the graph: {other:?}"
                )))
            }
        }
        p = f.evaluate(&p)?;
    }
    Ok(out)
}

/// Edge itinerary of a point on the graph: the edge carrying each
/// forward iterate.
pub fn edge_itinerary(
    f: &RationalMap,
    g: &EmbeddedGraph,
    z: &SpherePoint,
    n: usize,
) -> Result<Vec<usize>> {
    let mut out = Vec::with_capacity(n);
    let mut p = *z;
    for k in 0..n {
        let (d, e, _) = g.nearest_on_support(&p);
        if d > TOL_TRACE {
            return Err(Error::TraceAmbiguous(format!(
                "iterate {k} is {d:e} from the graph"
            )));
        }
        out.push(e);
        p = f.evaluate(&p)?;
    }
    Ok(out)
}

/// A decoded symbolic address.
#[derive(Debug, Clone)]
pub struct AddressedPoint {
    pub point: SpherePoint,
    /// Diameter of the cylinder arc after each refinement; index 0 is
    /// the full first edge.
    pub diameters: Vec<f64>,
}

const ADDRESS_SAMPLES: usize = 512;

/// Finds a point whose edge itinerary realizes `address`, by interval
/// refinement on the first edge: at each level the sub-arc is
/// restricted to the first traversal of the next symbol.
pub fn address_to_point(
    f: &RationalMap,
    g: &EmbeddedGraph,
    address: &[usize],
) -> Result<AddressedPoint> {
    if address.is_empty() {
        return Err(Error::InvalidInput("empty address".into()));
    }
    let n_edges = g.edges().len();
    if let Some(&bad) = address.iter().find(|&&s| s >= n_edges) {
        return Err(Error::InvalidInput(format!(
            "symbol {bad} out of range (graph has {n_edges} edges)"
        )));
    }
    // The cylinder is a parameter interval on the first edge.
    let base = &g.edges()[address[0]].polyline;
    let (mut a, mut b) = (0.0f64, 1.0f64);
    let mut diameters = vec![arc_between(base, 0.0, 1.0)];
    for (level, &symbol) in address.iter().enumerate().skip(1) {
        let params: Vec<f64> = (0..=ADDRESS_SAMPLES)
            .map(|k| a + (b - a) * k as f64 / ADDRESS_SAMPLES as f64)
            .collect();
        let mut images = Vec::with_capacity(params.len());
        for &t in &params {
            let mut p = point_on_polyline(base, t);
            for _ in 0..level {
                p = f.evaluate(&p)?;
            }
            images.push(p);
        }
        let seq = classify_on_graph(g, &images)?;
        let runs = trace_runs(&seq);
        let run = runs
            .iter()
            .find(|r| r.edge == symbol)
            .ok_or(Error::Inadmissible {
                position: level,
                from: address[level - 1],
                to: symbol,
            })?;
        // Pad one sample outward so the true preimage stays inside.
        let lo = run.first.saturating_sub(1);
        let hi = (run.last + 1).min(ADDRESS_SAMPLES);
        let (na, nb) = (params[lo], params[hi]);
        a = na;
        b = nb;
        diameters.push(arc_between(base, a, b));
    }
    Ok(AddressedPoint {
        point: point_on_polyline(base, 0.5 * (a + b)),
        diameters,
    })
}

fn point_on_polyline(pl: &[SpherePoint], t: f64) -> SpherePoint {
    let total = crate::embedded_graph::polyline_length(pl);
    let target = (t.clamp(0.0, 1.0)) * total;
    let mut acc = 0.0;
    for w in pl.windows(2) {
        let step = w[0].to_vec3().arc_dist(w[1].to_vec3());
        if acc + step >= target {
            let s = if step > 0.0 { (target - acc) / step } else { 0.0 };
            return SpherePoint::from_vec3(slerp(w[0].to_vec3(), w[1].to_vec3(), s));
        }
        acc += step;
    }
    *pl.last().unwrap()
}

fn arc_between(pl: &[SpherePoint], a: f64, b: f64) -> f64 {
    (b - a).abs() * crate::embedded_graph::polyline_length(pl)
}
