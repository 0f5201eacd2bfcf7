//! Parameter-space combinatorics of one-parameter families of
//! rational maps carrying an invariant graph.
//!
//! The invariant graph of a base map is continued across the family by
//! re-refining it after each parameter step. Where continuation
//! succeeds, the free critical value is classified against the graph
//! and its iterated preimages, producing a nested cell address; grid
//! scans map out the regions on which that address is constant.

use crate::embedded_graph::{EmbeddedGraph, Location, SupportIndex};
use crate::error::{Error, Result};
use crate::invariant_graph::{continue_graph, invariance_residual, IterationConfig};
use crate::numerics::{RationalMap, SpherePoint};
use crate::pullback::graph_preimage;
use num_complex::Complex64;
use rayon::prelude::*;
use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::fmt::Write as _;

/// Smallest continuation step, as a fraction of the requested segment.
pub const STEP_FLOOR: f64 = 1.0 / 65536.0;

/// Residual bound a base graph must meet at the base parameter.
const BASE_TOL: f64 = 1e-3;

/// Continuation attempts per segment before giving up.
const ATTEMPT_CAP: usize = 10_000;

/// A one-parameter family of rational maps with a distinguished
/// critical value and a base parameter where an invariant graph is
/// known.
pub struct FamilySpec {
    /// Parameter rectangle `(re0, im0, re1, im1)` the family is
    /// considered on.
    pub domain: (f64, f64, f64, f64),
    map: Box<dyn Fn(Complex64) -> Result<RationalMap> + Send + Sync>,
    free_cv: Box<dyn Fn(Complex64) -> Complex64 + Send + Sync>,
    pub base_parameter: Complex64,
    pub base_graph: EmbeddedGraph,
}

impl fmt::Debug for FamilySpec {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        out.debug_struct("FamilySpec")
            .field("domain", &self.domain)
            .field("base_parameter", &self.base_parameter)
            .finish_non_exhaustive()
    }
}

impl FamilySpec {
    /// Validates that the base graph is invariant (residual below an
    /// internal bound) under the base map.
    pub fn new(
        domain: (f64, f64, f64, f64),
        map: Box<dyn Fn(Complex64) -> Result<RationalMap> + Send + Sync>,
        free_cv: Box<dyn Fn(Complex64) -> Complex64 + Send + Sync>,
        base_parameter: Complex64,
        base_graph: EmbeddedGraph,
    ) -> Result<Self> {
        let f = map(base_parameter)?;
        let residual = invariance_residual(&f, &base_graph, 2)?;
        if residual > BASE_TOL {
            return Err(Error::NotInvariant {
                residual,
                tolerance: BASE_TOL,
            });
        }
        Ok(FamilySpec {
            domain,
            map,
            free_cv,
            base_parameter,
            base_graph,
        })
    }

    /// The family `z^2 + c` with free critical value `v(c) = c`, base
    /// parameter `0` and the unit circle as base graph, resampled at
    /// `step`.
    pub fn quadratic(step: f64) -> Result<Self> {
        let circle = crate::embedded_graph::builders::circle(
            Complex64::new(0.0, 0.0),
            1.0,
            4,
            512,
        )?
        .resampled(step)?;
        FamilySpec::new(
            (-2.5, -2.5, 2.5, 2.5),
            Box::new(|c| RationalMap::monic_plus_c(2, c)),
            Box::new(|c| c),
            Complex64::new(0.0, 0.0),
            circle,
        )
    }

    pub fn map_at(&self, c: Complex64) -> Result<RationalMap> {
        (self.map)(c)
    }

    pub fn free_critical_value(&self, c: Complex64) -> SpherePoint {
        SpherePoint::from_complex((self.free_cv)(c))
    }
}

/// Continues an invariant graph from `start` (where `graph` is
/// invariant) to `target` along the straight parameter segment,
/// halving the step on convergence failures. Steps below
/// [`STEP_FLOOR`] of the segment abort with `LeftExistenceSet`: the
/// graph is presumed not to persist up to `target`.
pub fn continue_from(
    fam: &FamilySpec,
    start: Complex64,
    graph: &EmbeddedGraph,
    target: Complex64,
    cfg: &IterationConfig,
) -> Result<EmbeddedGraph> {
    let seg = target - start;
    if seg.norm() == 0.0 {
        return Ok(graph.clone());
    }
    let mut cur = graph.clone();
    let mut s = 0.0f64;
    let mut step = 1.0f64;
    let mut attempts = 0usize;
    while s < 1.0 {
        attempts += 1;
        if attempts > ATTEMPT_CAP {
            return Err(Error::ResourceLimit(format!(
                "continuation exceeded {ATTEMPT_CAP} steps"
            )));
        }
        step = step.min(1.0 - s);
        let trial = start + seg * (s + step);
        let f = fam.map_at(trial)?;
        match continue_graph(&f, &cur, cfg) {
            Ok(rep) => {
                cur = rep.graph;
                s += step;
                step *= 2.0;
            }
            Err(
                Error::NonConvergence { .. }
                | Error::RoutingFailure(_)
                | Error::NeighbourhoodTooCoarse(_),
            ) => {
                step /= 2.0;
                if step < STEP_FLOOR {
                    return Err(Error::LeftExistenceSet {
                        parameter: format!("{}+{}i", trial.re, trial.im),
                        floor: STEP_FLOOR,
                    });
                }
            }
            Err(e) => return Err(e),
        }
    }
    Ok(cur)
}

/// Continuation from the family's base parameter and base graph.
pub fn continue_to(
    fam: &FamilySpec,
    target: Complex64,
    cfg: &IterationConfig,
) -> Result<EmbeddedGraph> {
    continue_from(fam, fam.base_parameter, &fam.base_graph, target, cfg)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CellKind {
    Face,
    Edge,
    Vertex,
}

/// One level of a nested address: which piece (or edge or vertex) of
/// the i-fold preimage graph holds the free critical value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CellLevel {
    pub kind: CellKind,
    /// For the face case, the rank among the faces nested in the
    /// previous level's face; at level zero (or after an edge/vertex
    /// level) the raw face id. Edge and vertex ids are raw.
    pub id: usize,
}

/// Nested address `(Q_0, ..., Q_{n-1})` of the free critical value.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CellDescriptor {
    pub levels: Vec<CellLevel>,
}

impl fmt::Display for CellDescriptor {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, l) in self.levels.iter().enumerate() {
            if i > 0 {
                out.write_char('.')?;
            }
            let tag = match l.kind {
                CellKind::Face => 'F',
                CellKind::Edge => 'E',
                CellKind::Vertex => 'V',
            };
            write!(out, "{tag}{}", l.id)?;
        }
        Ok(())
    }
}

impl CellDescriptor {
    pub fn parse(text: &str) -> Result<Self> {
        let mut levels = Vec::new();
        for tok in text.split('.') {
            let mut chars = tok.chars();
            let kind = match chars.next() {
                Some('F') => CellKind::Face,
                Some('E') => CellKind::Edge,
                Some('V') => CellKind::Vertex,
                _ => return Err(Error::Parse(format!("bad level `{tok}`"))),
            };
            let id: usize = chars
                .as_str()
                .parse()
                .map_err(|_| Error::Parse(format!("bad level `{tok}`")))?;
            levels.push(CellLevel { kind, id });
        }
        if levels.is_empty() {
            return Err(Error::Parse("empty descriptor".into()));
        }
        Ok(CellDescriptor { levels })
    }
}

/// Classifies `v` against `g` and its iterated preimages, `depth`
/// levels deep. Level `i` locates `v` in the `i`-fold preimage of
/// `g`; face ids are ranked among the faces nested in the previous
/// level's face, so the address is stable under relabeling of the
/// pullback. A failing pullback (for instance the critical value
/// sitting on the graph, which makes deeper levels ill-posed) reports
/// `DepthUnreachable` carrying the partial address.
pub fn nested_address(
    f: &RationalMap,
    g: &EmbeddedGraph,
    v: &SpherePoint,
    depth: usize,
    edge_cap: usize,
) -> Result<CellDescriptor> {
    if depth == 0 {
        return Err(Error::InvalidInput("address depth must be positive".into()));
    }
    let mut levels: Vec<CellLevel> = Vec::with_capacity(depth);
    let mut cur = g.clone();
    let mut prev: Option<(EmbeddedGraph, usize)> = None;
    for i in 0..depth {
        let loc = cur.face_containing(v);
        let level = match loc {
            Location::Face(fid) => {
                let id = match &prev {
                    None => fid,
                    Some((pg, pfid)) => {
                        // Rank among the faces of the current graph
                        // nested in the previous level's face.
                        let mut rank = None;
                        let mut count = 0usize;
                        for (j, face) in cur.faces().iter().enumerate() {
                            let inside = matches!(
                                pg.face_containing(&face.sample),
                                Location::Face(x) if x == *pfid
                            );
                            if inside {
                                if j == fid {
                                    rank = Some(count);
                                }
                                count += 1;
                            }
                        }
                        rank.ok_or_else(|| Error::DepthUnreachable {
                            level: i,
                            message: format!(
                                "nesting witness failed at level {i} (partial address {})",
                                CellDescriptor {
                                    levels: levels.clone()
                                }
                            ),
                        })?
                    }
                };
                CellLevel {
                    kind: CellKind::Face,
                    id,
                }
            }
            Location::OnEdge { edge, .. } => CellLevel {
                kind: CellKind::Edge,
                id: edge,
            },
            Location::OnVertex(vid) => CellLevel {
                kind: CellKind::Vertex,
                id: vid,
            },
        };
        prev = match loc {
            Location::Face(fid) => Some((cur.clone(), fid)),
            _ => None,
        };
        levels.push(level);
        if i + 1 < depth {
            if cur.edges().len() * f.degree() > edge_cap {
                return Err(Error::ResourceLimit(format!(
                    "preimage would exceed {edge_cap} edges"
                )));
            }
            cur = graph_preimage(f, &cur).map_err(|e| Error::DepthUnreachable {
                level: i + 1,
                message: format!(
                    "pullback failed beyond level {i}: {e} (partial address {})",
                    CellDescriptor {
                        levels: levels.clone()
                    }
                ),
            })?;
        }
    }
    Ok(CellDescriptor { levels })
}

/// Continues the family's graph to `c` and classifies the free
/// critical value there.
pub fn cell_address(
    fam: &FamilySpec,
    c: Complex64,
    depth: usize,
    cfg: &IterationConfig,
) -> Result<CellDescriptor> {
    let g = continue_to(fam, c, cfg)?;
    let f = fam.map_at(c)?;
    nested_address(&f, &g, &fam.free_critical_value(c), depth, cfg.edge_cap)
}

/// Outcome of the combinatorial-boundedness search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CombinatorialDistance {
    /// Depth `r` at which the pullback neighbourhood of the graph
    /// avoids every critical value and pulls back into itself.
    Bounded(usize),
    NotFound { r_max: usize },
}

/// Searches for the smallest `r <= r_max` such that `U`, the union of
/// closures of the faces of the `r`-fold preimage meeting `g`,
/// satisfies: (a) every critical value of `f` lies outside `U`, and
/// (b) the component of `f^{-1}(U)` containing `g` lies inside `U`.
/// Both checks are sample-based at face granularity; faces touching
/// `g` in a single vertex only are treated as meeting it.
pub fn combinatorial_distance(
    f: &RationalMap,
    g: &EmbeddedGraph,
    r_max: usize,
    edge_cap: usize,
) -> Result<CombinatorialDistance> {
    let cvs = f.critical_values()?;
    let mut g_r = g.clone();
    for r in 1..=r_max {
        if g_r.edges().len() * f.degree() > edge_cap {
            return Err(Error::ResourceLimit(format!(
                "preimage would exceed {edge_cap} edges"
            )));
        }
        g_r = graph_preimage(f, &g_r)?;
        if certify_depth(f, g, &g_r, &cvs, edge_cap)? {
            return Ok(CombinatorialDistance::Bounded(r));
        }
    }
    Ok(CombinatorialDistance::NotFound { r_max })
}

/// Face ids of `host` whose closure meets the support of `g`, decided
/// by whether a boundary edge or vertex lies on `g`.
fn faces_meeting(host: &EmbeddedGraph, g_support: &SupportIndex, tol: f64) -> Vec<bool> {
    let on_g: Vec<bool> = host
        .edges()
        .iter()
        .map(|e| {
            e.polyline
                .iter()
                .all(|p| g_support.nearest(p.to_vec3()).0 <= tol)
        })
        .collect();
    let vertex_on_g: Vec<bool> = host
        .vertices()
        .iter()
        .map(|v| g_support.nearest(v.to_vec3()).0 <= tol)
        .collect();
    let mut meets = vec![false; host.faces().len()];
    for (fid, face) in host.faces().iter().enumerate() {
        for &he in &face.walk {
            let e = crate::embedded_graph::he_edge(he);
            if on_g[e] || vertex_on_g[host.edges()[e].from] || vertex_on_g[host.edges()[e].to] {
                meets[fid] = true;
                break;
            }
        }
    }
    meets
}

/// The two checks of the boundedness definition at one depth.
fn certify_depth(
    f: &RationalMap,
    g: &EmbeddedGraph,
    g_r: &EmbeddedGraph,
    cvs: &[SpherePoint],
    edge_cap: usize,
) -> Result<bool> {
    let tol = 6.0 * g.sample_step();
    let g_support = SupportIndex::new(g.edges());
    let in_u = faces_meeting(g_r, &g_support, tol);

    // (a) Every critical value strictly outside U. A value on the
    // pullback graph itself cannot be placed outside.
    for cv in cvs {
        match g_r.face_containing(cv) {
            Location::Face(fid) => {
                if in_u[fid] {
                    return Ok(false);
                }
            }
            _ => return Ok(false),
        }
    }

    // (b) The component of f^{-1}(U) containing g stays inside U.
    if g_r.edges().len() * f.degree() > edge_cap {
        return Err(Error::ResourceLimit(format!(
            "preimage would exceed {edge_cap} edges"
        )));
    }
    let g_next = graph_preimage(f, g_r)?;
    let seeds = faces_meeting(&g_next, &g_support, tol);
    let in_f_inv_u: Vec<bool> = g_next
        .faces()
        .iter()
        .map(|face| match f.evaluate(&face.sample) {
            Ok(image) => {
                matches!(g_r.face_containing(&image), Location::Face(x) if in_u[x])
            }
            Err(_) => false,
        })
        .collect();
    // Face adjacency across shared edges.
    let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); g_next.faces().len()];
    for e in 0..g_next.edges().len() {
        let a = g_next.face_left_of(crate::embedded_graph::half_edge(e, false));
        let b = g_next.face_left_of(crate::embedded_graph::half_edge(e, true));
        if a != b {
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
    }
    let mut reached = vec![false; g_next.faces().len()];
    let mut queue: VecDeque<usize> = VecDeque::new();
    for (fid, &seed) in seeds.iter().enumerate() {
        if seed {
            if !in_f_inv_u[fid] {
                return Ok(false);
            }
            if !reached[fid] {
                reached[fid] = true;
                queue.push_back(fid);
            }
        }
    }
    while let Some(fid) = queue.pop_front() {
        // Component face must itself sit inside U.
        let inside = matches!(
            g_r.face_containing(&g_next.faces()[fid].sample),
            Location::Face(x) if in_u[x]
        );
        if !inside {
            return Ok(false);
        }
        for &nb in &adjacency[fid] {
            if in_f_inv_u[nb] && !reached[nb] {
                reached[nb] = true;
                queue.push_back(nb);
            }
        }
    }
    Ok(true)
}

/// Grid-scan configuration.
#[derive(Debug, Clone)]
pub struct ScanConfig {
    /// `(re0, im0, re1, im1)` corners of the scanned rectangle.
    pub rect: (f64, f64, f64, f64),
    pub nx: usize,
    pub ny: usize,
    /// Address depth at each node.
    pub depth: usize,
    pub iteration: IterationConfig,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NodeStatus {
    Cell(CellDescriptor),
    /// Short failure token (continuation or classification).
    Failed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanNode {
    pub c: Complex64,
    pub status: NodeStatus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanReport {
    pub nx: usize,
    pub ny: usize,
    pub depth: usize,
    /// Row-major, index `iy * nx + ix`.
    pub nodes: Vec<ScanNode>,
}

fn error_token(e: &Error) -> String {
    match e {
        Error::LeftExistenceSet { .. } => "left-existence-set",
        Error::NonConvergence { .. } => "non-convergence",
        Error::DepthUnreachable { .. } => "depth-unreachable",
        Error::RoutingFailure(_) => "routing-failure",
        Error::NeighbourhoodTooCoarse(_) => "neighbourhood-too-coarse",
        Error::CriticalValueOnEdge { .. } => "critical-value-on-edge",
        Error::ResourceLimit(_) => "resource-limit",
        Error::InfiniteIntersection(_) => "infinite-intersection",
        _ => "error",
    }
    .to_string()
}

/// Evaluates the cell address on every grid node. Continuation is
/// seeded along a fixed breadth-first order from the node nearest the
/// base parameter: each node continues from its BFS parent's graph
/// (falling back to the base graph when the parent failed), so the
/// result does not depend on execution order or thread count. Nodes
/// of one BFS level are computed in parallel.
pub fn scan_grid(fam: &FamilySpec, cfg: &ScanConfig) -> Result<ScanReport> {
    if cfg.nx == 0 || cfg.ny == 0 {
        return Err(Error::InvalidInput("grid must be at least 1x1".into()));
    }
    if cfg.depth == 0 {
        return Err(Error::InvalidInput("address depth must be positive".into()));
    }
    let (re0, im0, re1, im1) = cfg.rect;
    let coord = |idx: usize| -> Complex64 {
        let (ix, iy) = (idx % cfg.nx, idx / cfg.nx);
        let re = if cfg.nx == 1 {
            re0
        } else {
            re0 + (re1 - re0) * ix as f64 / (cfg.nx - 1) as f64
        };
        let im = if cfg.ny == 1 {
            im0
        } else {
            im0 + (im1 - im0) * iy as f64 / (cfg.ny - 1) as f64
        };
        Complex64::new(re, im)
    };
    let n = cfg.nx * cfg.ny;
    // Base node: grid node nearest the base parameter, lowest index on ties.
    let base_node = (0..n)
        .min_by(|&a, &b| {
            let da = (coord(a) - fam.base_parameter).norm();
            let db = (coord(b) - fam.base_parameter).norm();
            da.partial_cmp(&db).unwrap().then(a.cmp(&b))
        })
        .unwrap();

    // Breadth-first levels and parents, neighbor order fixed.
    let mut parent: Vec<Option<usize>> = vec![None; n];
    let mut seen = vec![false; n];
    let mut levels: Vec<Vec<usize>> = Vec::new();
    seen[base_node] = true;
    let mut frontier = vec![base_node];
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for &idx in &frontier {
            let (ix, iy) = (idx % cfg.nx, idx / cfg.nx);
            let mut push = |jx: i64, jy: i64| {
                if jx < 0 || jy < 0 || jx >= cfg.nx as i64 || jy >= cfg.ny as i64 {
                    return;
                }
                let j = jy as usize * cfg.nx + jx as usize;
                if !seen[j] {
                    seen[j] = true;
                    parent[j] = Some(idx);
                    next.push(j);
                }
            };
            push(ix as i64 - 1, iy as i64);
            push(ix as i64 + 1, iy as i64);
            push(ix as i64, iy as i64 - 1);
            push(ix as i64, iy as i64 + 1);
        }
        levels.push(frontier);
        frontier = next;
    }

    let mut statuses: Vec<Option<NodeStatus>> = vec![None; n];
    // Graphs of the previous level; BFS parents are always there.
    let mut prev_graphs: HashMap<usize, EmbeddedGraph> = HashMap::new();
    for level in &levels {
        let computed: Vec<(usize, NodeStatus, Option<EmbeddedGraph>)> = level
            .par_iter()
            .map(|&idx| {
                let c = coord(idx);
                let (seed_c, seed_g) = match parent[idx].and_then(|p| {
                    prev_graphs.get(&p).map(|gr| (coord(p), gr))
                }) {
                    Some(pair) => pair,
                    None => (fam.base_parameter, &fam.base_graph),
                };
                match continue_from(fam, seed_c, seed_g, c, &cfg.iteration) {
                    Ok(gr) => {
                        let status = fam
                            .map_at(c)
                            .and_then(|f| {
                                nested_address(
                                    &f,
                                    &gr,
                                    &fam.free_critical_value(c),
                                    cfg.depth,
                                    cfg.iteration.edge_cap,
                                )
                            })
                            .map(NodeStatus::Cell)
                            .unwrap_or_else(|e| NodeStatus::Failed(error_token(&e)));
                        (idx, status, Some(gr))
                    }
                    Err(e) => (idx, NodeStatus::Failed(error_token(&e)), None),
                }
            })
            .collect();
        prev_graphs.clear();
        for (idx, status, graph) in computed {
            statuses[idx] = Some(status);
            if let Some(gr) = graph {
                prev_graphs.insert(idx, gr);
            }
        }
    }

    let nodes: Vec<ScanNode> = statuses
        .into_iter()
        .enumerate()
        .map(|(idx, s)| ScanNode {
            c: coord(idx),
            status: s.expect("breadth-first search covers the grid"),
        })
        .collect();
    Ok(ScanReport {
        nx: cfg.nx,
        ny: cfg.ny,
        depth: cfg.depth,
        nodes,
    })
}

impl ScanReport {
    /// Text table: a header line, then one `re im status descriptor`
    /// line per node in row-major order.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "scan {} {} {}", self.nx, self.ny, self.depth);
        for node in &self.nodes {
            let (status, detail) = match &node.status {
                NodeStatus::Cell(d) => ("ok", d.to_string()),
                NodeStatus::Failed(tok) => ("fail", tok.clone()),
            };
            let _ = writeln!(out, "{} {} {status} {detail}", node.c.re, node.c.im);
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty scan report".into()))?;
        let h: Vec<&str> = header.split_whitespace().collect();
        if h.len() != 4 || h[0] != "scan" {
            return Err(Error::Parse("bad scan header".into()));
        }
        let nx: usize = h[1].parse().map_err(|_| Error::Parse("bad nx".into()))?;
        let ny: usize = h[2].parse().map_err(|_| Error::Parse("bad ny".into()))?;
        let depth: usize = h[3].parse().map_err(|_| Error::Parse("bad depth".into()))?;
        let mut nodes = Vec::with_capacity(nx * ny);
        for line in lines {
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 4 {
                return Err(Error::Parse(format!("bad scan line `{line}`")));
            }
            let re: f64 = f[0].parse().map_err(|_| Error::Parse("bad re".into()))?;
            let im: f64 = f[1].parse().map_err(|_| Error::Parse("bad im".into()))?;
            let status = match f[2] {
                "ok" => NodeStatus::Cell(CellDescriptor::parse(f[3])?),
                "fail" => NodeStatus::Failed(f[3].to_string()),
                other => return Err(Error::Parse(format!("bad status `{other}`"))),
            };
            nodes.push(ScanNode {
                c: Complex64::new(re, im),
                status,
            });
        }
        if nodes.len() != nx * ny {
            return Err(Error::Parse(format!(
                "expected {} nodes, found {}",
                nx * ny,
                nodes.len()
            )));
        }
        Ok(ScanReport {
            nx,
            ny,
            depth,
            nodes,
        })
    }
}

/// Component statistics of one descriptor's node set in a scan.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DescriptorComponents {
    pub descriptor: String,
    pub nodes: usize,
    /// 4-neighbor components of the descriptor's node set.
    pub components: usize,
    /// 4-neighbor components of its complement within the successful
    /// region.
    pub complement_components: usize,
}

/// Grid-resolution connectivity evidence, one entry per distinct
/// descriptor (sorted). Purely empirical: component counts at the
/// scan's resolution, not a connectivity proof.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConnectivityReport {
    pub entries: Vec<DescriptorComponents>,
    pub failed_nodes: usize,
}

pub fn connectivity_report(scan: &ScanReport) -> ConnectivityReport {
    let descriptor_of = |idx: usize| -> Option<String> {
        match &scan.nodes[idx].status {
            NodeStatus::Cell(d) => Some(d.to_string()),
            NodeStatus::Failed(_) => None,
        }
    };
    let n = scan.nx * scan.ny;
    let count_components = |member: &dyn Fn(usize) -> bool| -> usize {
        let mut seen = vec![false; n];
        let mut components = 0;
        for start in 0..n {
            if !member(start) || seen[start] {
                continue;
            }
            components += 1;
            let mut queue = VecDeque::from([start]);
            seen[start] = true;
            while let Some(idx) = queue.pop_front() {
                let (ix, iy) = (idx % scan.nx, idx / scan.nx);
                let mut neighbors = Vec::with_capacity(4);
                if ix > 0 {
                    neighbors.push(idx - 1);
                }
                if ix + 1 < scan.nx {
                    neighbors.push(idx + 1);
                }
                if iy > 0 {
                    neighbors.push(idx - scan.nx);
                }
                if iy + 1 < scan.ny {
                    neighbors.push(idx + scan.nx);
                }
                for j in neighbors {
                    if member(j) && !seen[j] {
                        seen[j] = true;
                        queue.push_back(j);
                    }
                }
            }
        }
        components
    };
    let mut descriptors: Vec<String> = (0..n).filter_map(descriptor_of).collect();
    descriptors.sort();
    descriptors.dedup();
    let entries = descriptors
        .into_iter()
        .map(|d| {
            let matches = |idx: usize| descriptor_of(idx).as_deref() == Some(d.as_str());
            let complement =
                |idx: usize| descriptor_of(idx).map(|x| x != d).unwrap_or(false);
            DescriptorComponents {
                nodes: (0..n).filter(|&i| matches(i)).count(),
                components: count_components(&matches),
                complement_components: count_components(&complement),
                descriptor: d,
            }
        })
        .collect();
    ConnectivityReport {
        entries,
        failed_nodes: (0..n)
            .filter(|&i| matches!(scan.nodes[i].status, NodeStatus::Failed(_)))
            .count(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedded_graph::builders;

    fn quick_cfg() -> IterationConfig {
        IterationConfig {
            eps_invariant: 2e-3,
            sample_step: 1e-2,
            ..IterationConfig::default()
        }
    }

    fn quadratic() -> FamilySpec {
        FamilySpec::quadratic(1e-2).unwrap()
    }

    #[test]
    fn base_address_is_the_inner_piece_at_every_level() {
        let fam = quadratic();
        let origin = SpherePoint::from_complex(Complex64::new(0.0, 0.0));
        let expected0 = match fam.base_graph.face_containing(&origin) {
            Location::Face(fid) => fid,
            other => panic!("origin not in a face: {other:?}"),
        };
        let desc = cell_address(&fam, Complex64::new(0.0, 0.0), 3, &quick_cfg()).unwrap();
        assert_eq!(desc.levels.len(), 3);
        assert_eq!(desc.levels[0].kind, CellKind::Face);
        assert_eq!(desc.levels[0].id, expected0);
        // A circle pulls back to a circle under squaring: one nested
        // face per level, so every deeper rank is 0.
        for l in &desc.levels[1..] {
            assert_eq!((l.kind, l.id), (CellKind::Face, 0));
        }
    }

    #[test]
    fn nearby_parameter_has_the_base_address() {
        let fam = quadratic();
        let base = cell_address(&fam, Complex64::new(0.0, 0.0), 3, &quick_cfg()).unwrap();
        let off = cell_address(&fam, Complex64::new(-0.05, 0.0), 3, &quick_cfg()).unwrap();
        assert_eq!(base, off);
    }

    #[test]
    fn far_parameter_leaves_the_existence_set() {
        let fam = quadratic();
        let err = cell_address(&fam, Complex64::new(-2.5, 0.0), 1, &quick_cfg()).unwrap_err();
        assert!(matches!(err, Error::LeftExistenceSet { .. }), "{err:?}");
    }

    #[test]
    fn non_invariant_base_graph_is_rejected() {
        let circle = builders::circle(Complex64::new(0.0, 0.0), 2.0, 4, 512).unwrap();
        let err = FamilySpec::new(
            (-1.0, -1.0, 1.0, 1.0),
            Box::new(|c| RationalMap::monic_plus_c(2, c)),
            Box::new(|c| c),
            Complex64::new(0.0, 0.0),
            circle,
        )
        .unwrap_err();
        assert!(matches!(err, Error::NotInvariant { .. }), "{err:?}");
    }

    #[test]
    fn squaring_circle_is_never_combinatorially_bounded() {
        // The preimage of the unit circle under squaring is the unit
        // circle: both faces always meet it and contain a critical
        // value, so no depth certifies.
        let f = RationalMap::monic_plus_c(2, Complex64::new(0.0, 0.0)).unwrap();
        let g = builders::circle(Complex64::new(0.0, 0.0), 1.0, 4, 512)
            .unwrap()
            .resampled(1e-2)
            .unwrap();
        let out = combinatorial_distance(&f, &g, 3, 200_000).unwrap();
        assert_eq!(out, CombinatorialDistance::NotFound { r_max: 3 });
        let zero = combinatorial_distance(&f, &g, 0, 200_000).unwrap();
        assert_eq!(zero, CombinatorialDistance::NotFound { r_max: 0 });
    }

    #[test]
    fn combinatorial_distance_is_stable_under_finer_sampling() {
        let f = RationalMap::monic_plus_c(2, Complex64::new(0.0, 0.0)).unwrap();
        let g = builders::circle(Complex64::new(0.0, 0.0), 1.0, 4, 512)
            .unwrap()
            .resampled(1e-2)
            .unwrap();
        let fine = g.resampled(5e-3).unwrap();
        assert_eq!(
            combinatorial_distance(&f, &g, 2, 200_000).unwrap(),
            combinatorial_distance(&f, &fine, 2, 200_000).unwrap()
        );
    }

    #[test]
    fn small_scan_is_uniform_and_connected() {
        let fam = quadratic();
        let cfg = ScanConfig {
            rect: (-0.05, -0.05, 0.05, 0.05),
            nx: 3,
            ny: 3,
            depth: 1,
            iteration: quick_cfg(),
        };
        let report = scan_grid(&fam, &cfg).unwrap();
        let mut descriptors = Vec::new();
        for node in &report.nodes {
            match &node.status {
                NodeStatus::Cell(d) => descriptors.push(d.to_string()),
                NodeStatus::Failed(tok) => panic!("node {} failed: {tok}", node.c),
            }
        }
        descriptors.dedup();
        assert_eq!(descriptors.len(), 1);
        let conn = connectivity_report(&report);
        assert_eq!(conn.failed_nodes, 0);
        assert_eq!(conn.entries.len(), 1);
        assert_eq!(conn.entries[0].components, 1);
        assert_eq!(conn.entries[0].complement_components, 0);
    }

    #[test]
    fn scan_report_is_identical_across_thread_counts() {
        let fam = quadratic();
        let cfg = ScanConfig {
            rect: (-0.04, -0.04, 0.04, 0.04),
            nx: 3,
            ny: 3,
            depth: 1,
            iteration: quick_cfg(),
        };
        let ambient = scan_grid(&fam, &cfg).unwrap().serialize();
        for threads in [1, 2] {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            let pinned = pool.install(|| scan_grid(&fam, &cfg).unwrap().serialize());
            assert_eq!(ambient, pinned, "thread count {threads}");
        }
    }

    #[test]
    fn scan_report_round_trips_through_text() {
        let fam = quadratic();
        let cfg = ScanConfig {
            rect: (-0.03, 0.0, 0.03, 0.0),
            nx: 2,
            ny: 1,
            depth: 2,
            iteration: quick_cfg(),
        };
        let report = scan_grid(&fam, &cfg).unwrap();
        let text = report.serialize();
        let back = ScanReport::parse(&text).unwrap();
        assert_eq!(back.serialize(), text);
    }

    #[test]
    fn checkerboard_component_counts_are_verbatim() {
        // Synthetic 3x3 alternating pattern: descriptor A on the five
        // even cells, B on the four odd ones; every cell is isolated
        // under 4-neighbor adjacency.
        let nodes = (0..9)
            .map(|idx| {
                let d = if idx % 2 == 0 { "F0" } else { "F1" };
                ScanNode {
                    c: Complex64::new(idx as f64, 0.0),
                    status: NodeStatus::Cell(CellDescriptor::parse(d).unwrap()),
                }
            })
            .collect();
        let scan = ScanReport {
            nx: 3,
            ny: 3,
            depth: 1,
            nodes,
        };
        let conn = connectivity_report(&scan);
        assert_eq!(conn.entries.len(), 2);
        let a = &conn.entries[0];
        let b = &conn.entries[1];
        assert_eq!((a.descriptor.as_str(), a.nodes, a.components), ("F0", 5, 5));
        assert_eq!(a.complement_components, 4);
        assert_eq!((b.descriptor.as_str(), b.nodes, b.components), ("F1", 4, 4));
        assert_eq!(b.complement_components, 5);
    }

    #[test]
    fn single_node_grid_reports_the_base() {
        let fam = quadratic();
        let cfg = ScanConfig {
            rect: (0.0, 0.0, 0.0, 0.0),
            nx: 1,
            ny: 1,
            depth: 1,
            iteration: quick_cfg(),
        };
        let report = scan_grid(&fam, &cfg).unwrap();
        assert_eq!(report.nodes.len(), 1);
        assert!(matches!(report.nodes[0].status, NodeStatus::Cell(_)));
    }
}
