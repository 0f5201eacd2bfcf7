//! Graphs embedded in the sphere with an explicit rotation system.
//!
//! Vertices are sphere points, edges are polylines sampled at most
//! [`DELTA_SAMPLE`] apart, and each vertex carries the counterclockwise
//! cyclic order of its outgoing half-edges (viewed from outside the
//! sphere). Faces are traced combinatorially from the rotation system;
//! the face of a directed half-edge lies to its left. The Euler count
//! `V - E + F = 2` is checked at construction, as are connectivity,
//! valence at least two, and pairwise disjointness of open edges.

use std::collections::HashMap;
use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{sph_dist, Chart, SpherePoint, Vec3, DELTA_SAMPLE, EPS_GEOM};

/// Distance within which an edge polyline endpoint must hit its vertex.
pub(crate) const EPS_SNAP: f64 = 1e-6;

/// Directed edge id: `2 * edge + dir`, `dir = 0` runs from -> to.
pub type HalfEdge = usize;

pub fn half_edge(edge: usize, reversed: bool) -> HalfEdge {
    2 * edge + usize::from(reversed)
}

pub fn he_edge(he: HalfEdge) -> usize {
    he >> 1
}

pub fn he_reversed(he: HalfEdge) -> bool {
    he & 1 == 1
}

pub fn he_rev(he: HalfEdge) -> HalfEdge {
    he ^ 1
}

#[derive(Debug, Clone)]
pub struct GraphEdge {
    pub from: usize,
    pub to: usize,
    /// Samples including both endpoints, spaced at most `DELTA_SAMPLE`.
    pub polyline: Vec<SpherePoint>,
}

#[derive(Debug, Clone)]
pub struct Face {
    /// Directed boundary walk; the face lies on the left of each entry.
    pub walk: Vec<HalfEdge>,
    /// A point in the open face.
    pub sample: SpherePoint,
}

/// Where a query point sits relative to a graph.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Location {
    Face(usize),
    /// On the open edge, at normalized arc-length parameter `t`.
    OnEdge { edge: usize, t: f64 },
    OnVertex(usize),
}

/// Combinatorial isotopy invariant: the canonical form of the rotation
/// system. Graphs related by an orientation-preserving ambient isotopy
/// of the sphere compare equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Signature(Vec<(u32, u32)>);

impl Signature {
    pub fn as_hex(&self) -> String {
        let mut out = String::new();
        for (a, b) in &self.0 {
            let _ = write!(out, "{a:x}.{b:x};");
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct EmbeddedGraph {
    vertices: Vec<SpherePoint>,
    edges: Vec<GraphEdge>,
    /// Outgoing half-edges per vertex in counterclockwise order.
    rotation: Vec<Vec<HalfEdge>>,
    faces: Vec<Face>,
    face_of: Vec<usize>,
    support: SupportIndex,
    /// Per-graph resampling step; polylines are kept at this spacing.
    step: f64,
}

impl EmbeddedGraph {
    /// Builds a graph from vertices and edge polylines, computing the
    /// rotation system from the geometry.
    pub fn new(vertices: Vec<SpherePoint>, edges: Vec<GraphEdge>) -> Result<Self> {
        Self::build(vertices, edges, None, DELTA_SAMPLE)
    }

    /// Builds a graph with an explicitly supplied rotation system.
    pub fn with_rotation(
        vertices: Vec<SpherePoint>,
        edges: Vec<GraphEdge>,
        rotation: Vec<Vec<HalfEdge>>,
    ) -> Result<Self> {
        Self::build(vertices, edges, Some(rotation), DELTA_SAMPLE)
    }

    /// Builds a graph whose polylines are resampled at `step` instead
    /// of the default spacing. Coarser steps trade residual accuracy
    /// for speed; derived graphs (pullbacks, extractions) inherit it.
    pub fn with_step(
        vertices: Vec<SpherePoint>,
        edges: Vec<GraphEdge>,
        step: f64,
    ) -> Result<Self> {
        if !(step > 0.0) || step > 0.5 {
            return Err(Error::InvalidInput(format!("bad sampling step {step}")));
        }
        Self::build(vertices, edges, None, step)
    }

    /// The polyline spacing this graph is maintained at.
    pub fn sample_step(&self) -> f64 {
        self.step
    }

    /// Rebuilds the graph with a different sampling step, keeping the
    /// rotation system.
    pub fn resampled(&self, step: f64) -> Result<Self> {
        if !(step > 0.0) || step > 0.5 {
            return Err(Error::InvalidInput(format!("bad sampling step {step}")));
        }
        Self::build(
            self.vertices.clone(),
            self.edges.clone(),
            Some(self.rotation.clone()),
            step,
        )
    }

    fn build(
        vertices: Vec<SpherePoint>,
        mut edges: Vec<GraphEdge>,
        rotation: Option<Vec<Vec<HalfEdge>>>,
        step: f64,
    ) -> Result<Self> {
        if vertices.is_empty() || edges.is_empty() {
            return Err(Error::InvalidInput("graph needs vertices and edges".into()));
        }
        for (i, e) in edges.iter_mut().enumerate() {
            if e.from >= vertices.len() || e.to >= vertices.len() {
                return Err(Error::InvalidInput(format!("edge {i} references missing vertex")));
            }
            if e.polyline.len() < 2 {
                return Err(Error::InvalidInput(format!("edge {i} has fewer than 2 samples")));
            }
            if sph_dist(e.polyline.first().unwrap(), &vertices[e.from]) > EPS_SNAP
                || sph_dist(e.polyline.last().unwrap(), &vertices[e.to]) > EPS_SNAP
            {
                return Err(Error::InvalidInput(format!(
                    "edge {i} polyline does not end at its vertices"
                )));
            }
            let mut pl = e.polyline.clone();
            *pl.first_mut().unwrap() = vertices[e.from];
            *pl.last_mut().unwrap() = vertices[e.to];
            e.polyline = resample_polyline(&pl, step);
            if e.polyline.len() < 2 {
                return Err(Error::InvalidInput(format!("edge {i} degenerates to a point")));
            }
        }
        let rotation = match rotation {
            Some(r) => {
                validate_rotation(&vertices, &edges, &r)?;
                r
            }
            None => geometric_rotation(&vertices, &edges)?,
        };
        // Valence check: every vertex is the endpoint of at least two
        // half-edges (a single loop contributes two).
        for (v, rot) in rotation.iter().enumerate() {
            if rot.len() < 2 {
                return Err(Error::EmbeddingInconsistent(format!(
                    "vertex {v} has valence {}",
                    rot.len()
                )));
            }
        }
        check_connected(vertices.len(), &edges)?;
        let (faces_walks, face_of) = trace_faces(&edges, &rotation, &vertices)?;
        let v = vertices.len() as i64;
        let e = edges.len() as i64;
        let f = faces_walks.len() as i64;
        if v - e + f != 2 {
            return Err(Error::EmbeddingInconsistent(format!(
                "Euler count V-E+F = {v}-{e}+{f} != 2"
            )));
        }
        let support = SupportIndex::new(&edges);
        check_edge_disjointness(&vertices, &edges, &support, step)?;
        let mut graph = EmbeddedGraph {
            vertices,
            edges,
            rotation,
            faces: Vec::new(),
            face_of,
            support,
            step,
        };
        graph.faces = graph.make_faces(faces_walks)?;
        Ok(graph)
    }

    pub fn vertices(&self) -> &[SpherePoint] {
        &self.vertices
    }

    pub fn edges(&self) -> &[GraphEdge] {
        &self.edges
    }

    pub fn rotation(&self) -> &[Vec<HalfEdge>] {
        &self.rotation
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    /// The face on the left of the directed half-edge.
    pub fn face_left_of(&self, he: HalfEdge) -> usize {
        self.face_of[he]
    }

    /// Tail vertex of a half-edge.
    pub fn he_tail(&self, he: HalfEdge) -> usize {
        let e = &self.edges[he_edge(he)];
        if he_reversed(he) {
            e.to
        } else {
            e.from
        }
    }

    /// Head vertex of a half-edge.
    pub fn he_head(&self, he: HalfEdge) -> usize {
        self.he_tail(he_rev(he))
    }

    /// Polyline of the half-edge in traversal direction.
    pub fn he_polyline(&self, he: HalfEdge) -> Vec<SpherePoint> {
        let pl = &self.edges[he_edge(he)].polyline;
        if he_reversed(he) {
            pl.iter().rev().copied().collect()
        } else {
            pl.clone()
        }
    }

    /// Nearest point of the graph support: `(arc distance, edge,
    /// normalized arc parameter)`.
    pub fn nearest_on_support(&self, p: &SpherePoint) -> (f64, usize, f64) {
        self.support.nearest(p.to_vec3())
    }

    /// Total arc length of an edge polyline.
    pub fn edge_length(&self, edge: usize) -> f64 {
        polyline_length(&self.edges[edge].polyline)
    }

    /// Classifies a point against the graph: a vertex within
    /// `tol`, else a point of an open edge within `tol`, else a face.
    pub fn locate_with_tol(&self, p: &SpherePoint, tol: f64) -> Location {
        for (v, q) in self.vertices.iter().enumerate() {
            if sph_dist(p, q) <= tol {
                return Location::OnVertex(v);
            }
        }
        let (d, edge, t) = self.support.nearest(p.to_vec3());
        if d <= tol {
            return Location::OnEdge { edge, t };
        }
        Location::Face(self.side_face(p.to_vec3()))
    }

    /// Classification at the geometric coincidence tolerance.
    pub fn face_containing(&self, p: &SpherePoint) -> Location {
        self.locate_with_tol(p, EPS_GEOM)
    }

    /// Face id of a point assumed to lie off the support.
    fn side_face(&self, p: Vec3) -> usize {
        // Among near-minimal segments, score by transversality so the
        // answer is stable near polyline joints and vertices.
        let cands = self.support.near_minimal_segments(p, 2.0 * self.step);
        let mut best = (f64::MIN, 0usize);
        for seg in cands {
            let (a, b, edge) = (seg.a, seg.b, seg.edge);
            let q = closest_on_segment(p, a, b).normalized();
            let t = b.sub(a);
            let tn = t.norm();
            if tn == 0.0 {
                continue;
            }
            let left = q.cross(t.scale(1.0 / tn));
            let side = p.sub(q).dot(left);
            let he = half_edge(edge, side < 0.0);
            let score = side.abs();
            if score > best.0 {
                best = (score, self.face_of[he]);
            }
        }
        best.1
    }

    fn make_faces(&self, walks: Vec<Vec<HalfEdge>>) -> Result<Vec<Face>> {
        let mut faces = Vec::with_capacity(walks.len());
        for (fid, walk) in walks.iter().enumerate() {
            let sample = self.interior_sample(fid, walk)?;
            faces.push(Face {
                walk: walk.clone(),
                sample,
            });
        }
        Ok(faces)
    }

    /// Finds a point strictly inside a face by stepping left off the
    /// boundary walk and verifying with the side test.
    fn interior_sample(&self, fid: usize, walk: &[HalfEdge]) -> Result<SpherePoint> {
        for &he in walk {
            let pl = self.he_polyline(he);
            for frac in [0.5, 0.25, 0.75] {
                let k = ((pl.len() - 1) as f64 * frac) as usize;
                if k + 1 >= pl.len() {
                    continue;
                }
                let a = pl[k].to_vec3();
                let b = pl[k + 1].to_vec3();
                let q = a.add(b).scale(0.5).normalized();
                let t = b.sub(a);
                let tn = t.norm();
                if tn == 0.0 {
                    continue;
                }
                let left = q.cross(t.scale(1.0 / tn));
                for s in [3e-3, 1e-3, 3e-4, 1e-4, 3e-5, 1e-5] {
                    let cand = q.add(left.scale(s)).normalized();
                    let (d, _, _) = self.support.nearest(cand);
                    if d <= 2.0 * EPS_GEOM {
                        continue;
                    }
                    if self.side_face(cand) == fid {
                        return Ok(SpherePoint::from_vec3(cand));
                    }
                }
            }
        }
        Err(Error::EmbeddingInconsistent(format!(
            "no interior sample found for face {fid}"
        )))
    }

    /// Canonical combinatorial code of the embedding.
    pub fn isotopy_signature(&self) -> Signature {
        let n_he = 2 * self.edges.len();
        let sigma: Vec<HalfEdge> = {
            // Rotation successor at the tail of each half-edge.
            let mut s = vec![0; n_he];
            for rot in &self.rotation {
                for (i, &he) in rot.iter().enumerate() {
                    s[he] = rot[(i + 1) % rot.len()];
                }
            }
            s
        };
        let mut best: Option<Vec<(u32, u32)>> = None;
        for start in 0..n_he {
            let mut idx = vec![u32::MAX; n_he];
            let mut order: Vec<HalfEdge> = vec![start];
            idx[start] = 0;
            let mut code = Vec::with_capacity(n_he);
            let mut cursor = 0;
            while cursor < order.len() {
                let he = order[cursor];
                cursor += 1;
                let mut local = [0u32; 2];
                for (slot, target) in [(0usize, he_rev(he)), (1, sigma[he])] {
                    if idx[target] == u32::MAX {
                        idx[target] = order.len() as u32;
                        order.push(target);
                    }
                    local[slot] = idx[target];
                }
                code.push((local[0], local[1]));
            }
            if best.as_ref().map(|b| code < *b).unwrap_or(true) {
                best = Some(code);
            }
        }
        Signature(best.unwrap_or_default())
    }

    /// Text serialization; see [`EmbeddedGraph::parse`].
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        if self.step != DELTA_SAMPLE {
            let _ = writeln!(out, "step {}", self.step);
        }
        let coord = |p: &SpherePoint| {
            let tag = match p.chart() {
                Chart::Standard => 's',
                Chart::Inverted => 'i',
            };
            format!("{} {} {}", tag, p.coords().re, p.coords().im)
        };
        for (i, v) in self.vertices.iter().enumerate() {
            let _ = writeln!(out, "vertex {} {}", i, coord(v));
        }
        for (i, e) in self.edges.iter().enumerate() {
            let _ = writeln!(out, "edge {} {} {} {}", i, e.from, e.to, e.polyline.len());
            for p in &e.polyline {
                let _ = writeln!(out, "{}", coord(p));
            }
        }
        for (v, rot) in self.rotation.iter().enumerate() {
            let rot = canonical_rot_start(rot);
            let _ = write!(out, "rot {}", v);
            let mut seen: HashMap<usize, usize> = HashMap::new();
            for he in rot {
                let e = he_edge(he);
                let occurrence = seen.entry(e).or_insert(0);
                // Loop edges appear twice; when the to-end comes first
                // the occurrence order cannot encode it, so mark it.
                let needs_mark = *occurrence == 0 && he_reversed(he) && is_loop(&self.edges[e]);
                let _ = if needs_mark {
                    write!(out, " {}'", e)
                } else {
                    write!(out, " {}", e)
                };
                *occurrence += 1;
            }
            let _ = writeln!(out);
        }
        out
    }

    /// Parses the text form produced by [`EmbeddedGraph::serialize`]:
    /// `vertex id chart x y` lines, `edge id vfrom vto n` headers each
    /// followed by `n` sample lines `chart x y`, and `rot vid e1 ... ek`
    /// lines listing the counterclockwise outgoing edges at a vertex.
    /// For a loop edge the first listed occurrence is its from-end
    /// unless written with a trailing apostrophe.
    pub fn parse(text: &str) -> Result<Self> {
        let mut vertices: Vec<(usize, SpherePoint)> = Vec::new();
        let mut edges: Vec<(usize, GraphEdge)> = Vec::new();
        let mut rots: Vec<(usize, Vec<(usize, bool)>)> = Vec::new();
        let mut step = DELTA_SAMPLE;
        let parse_pt = |fields: &[&str], lineno: usize| -> Result<SpherePoint> {
            if fields.len() != 3 {
                return Err(Error::Parse(format!("line {}: expected `chart x y`", lineno + 1)));
            }
            let re: f64 = fields[1]
                .parse()
                .map_err(|_| Error::Parse(format!("line {}: bad coordinate", lineno + 1)))?;
            let im: f64 = fields[2]
                .parse()
                .map_err(|_| Error::Parse(format!("line {}: bad coordinate", lineno + 1)))?;
            let c = Complex64::new(re, im);
            match fields[0] {
                "s" => Ok(raw_point(Chart::Standard, c)),
                "i" => Ok(raw_point(Chart::Inverted, c)),
                other => Err(Error::Parse(format!("line {}: unknown chart `{other}`", lineno + 1))),
            }
        };
        let lines: Vec<&str> = text.lines().collect();
        let mut i = 0usize;
        while i < lines.len() {
            let line = lines[i].trim();
            if line.is_empty() || line.starts_with('#') {
                i += 1;
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            match fields[0] {
                "step" => {
                    if fields.len() != 2 {
                        return Err(Error::Parse(format!("line {}: bad step record", i + 1)));
                    }
                    step = fields[1]
                        .parse()
                        .map_err(|_| Error::Parse(format!("line {}: bad step value", i + 1)))?;
                    i += 1;
                }
                "vertex" => {
                    if fields.len() != 5 {
                        return Err(Error::Parse(format!("line {}: bad vertex record", i + 1)));
                    }
                    let id: usize = fields[1]
                        .parse()
                        .map_err(|_| Error::Parse(format!("line {}: bad vertex id", i + 1)))?;
                    vertices.push((id, parse_pt(&fields[2..], i)?));
                    i += 1;
                }
                "edge" => {
                    if fields.len() != 5 {
                        return Err(Error::Parse(format!("line {}: bad edge record", i + 1)));
                    }
                    let id: usize = fields[1].parse().map_err(|_| {
                        Error::Parse(format!("line {}: bad edge id", i + 1))
                    })?;
                    let from: usize = fields[2].parse().map_err(|_| {
                        Error::Parse(format!("line {}: bad edge endpoint", i + 1))
                    })?;
                    let to: usize = fields[3].parse().map_err(|_| {
                        Error::Parse(format!("line {}: bad edge endpoint", i + 1))
                    })?;
                    let n: usize = fields[4].parse().map_err(|_| {
                        Error::Parse(format!("line {}: bad sample count", i + 1))
                    })?;
                    let mut polyline = Vec::with_capacity(n);
                    for k in 0..n {
                        let li = i + 1 + k;
                        let sample = lines.get(li).ok_or_else(|| {
                            Error::Parse("unexpected end of file in edge samples".into())
                        })?;
                        let sf: Vec<&str> = sample.split_whitespace().collect();
                        polyline.push(parse_pt(&sf, li)?);
                    }
                    edges.push((id, GraphEdge { from, to, polyline }));
                    i += 1 + n;
                }
                "rot" => {
                    let vid: usize = fields[1]
                        .parse()
                        .map_err(|_| Error::Parse(format!("line {}: bad rot vertex", i + 1)))?;
                    let mut entries = Vec::new();
                    for tok in &fields[2..] {
                        let (body, marked) = match tok.strip_suffix('\'') {
                            Some(b) => (b, true),
                            None => (*tok, false),
                        };
                        let e: usize = body.parse().map_err(|_| {
                            Error::Parse(format!("line {}: bad rot entry `{tok}`", i + 1))
                        })?;
                        entries.push((e, marked));
                    }
                    rots.push((vid, entries));
                    i += 1;
                }
                other => {
                    return Err(Error::Parse(format!("line {}: unknown record `{other}`", i + 1)))
                }
            }
        }
        vertices.sort_by_key(|(id, _)| *id);
        edges.sort_by_key(|(id, _)| *id);
        for (want, (id, _)) in vertices.iter().enumerate() {
            if *id != want {
                return Err(Error::Parse("vertex ids must be 0..n contiguous".into()));
            }
        }
        for (want, (id, _)) in edges.iter().enumerate() {
            if *id != want {
                return Err(Error::Parse("edge ids must be 0..n contiguous".into()));
            }
        }
        let vertices: Vec<SpherePoint> = vertices.into_iter().map(|(_, p)| p).collect();
        let edges: Vec<GraphEdge> = edges.into_iter().map(|(_, e)| e).collect();
        let mut rotation = vec![Vec::new(); vertices.len()];
        for (vid, entries) in rots {
            if vid >= vertices.len() {
                return Err(Error::Parse(format!("rot references missing vertex {vid}")));
            }
            let mut seen: HashMap<usize, usize> = HashMap::new();
            let mut out = Vec::with_capacity(entries.len());
            for (e, marked) in entries {
                if e >= edges.len() {
                    return Err(Error::Parse(format!("rot references missing edge {e}")));
                }
                let occ = seen.entry(e).or_insert(0);
                let reversed = if is_loop(&edges[e]) {
                    if *occ == 0 {
                        marked
                    } else {
                        !out.iter().any(|&h| h == half_edge(e, true))
                    }
                } else {
                    edges[e].to == vid
                };
                out.push(half_edge(e, reversed));
                *occ += 1;
            }
            rotation[vid] = out;
        }
        Self::build(vertices, edges, Some(rotation), step)
    }
}

fn is_loop(e: &GraphEdge) -> bool {
    e.from == e.to
}

/// Builds a point directly in a given chart (used by the parser so
/// stored coordinates round-trip bit-exact).
fn raw_point(chart: Chart, c: Complex64) -> SpherePoint {
    SpherePoint::from_chart_coords(chart, c)
}

/// Rotates the cyclic order so loop from-ends precede to-ends whenever
/// a cyclic rotation can achieve it.
fn canonical_rot_start(rot: &[HalfEdge]) -> Vec<HalfEdge> {
    let n = rot.len();
    'outer: for start in 0..n {
        let view: Vec<HalfEdge> = (0..n).map(|k| rot[(start + k) % n]).collect();
        let mut count: HashMap<usize, usize> = HashMap::new();
        for &he in &view {
            *count.entry(he_edge(he)).or_insert(0) += 1;
        }
        // Acceptable if every loop's from-end occurs before its to-end.
        let mut first: HashMap<usize, bool> = HashMap::new();
        for &he in &view {
            let e = he_edge(he);
            if count[&e] == 2 {
                if let std::collections::hash_map::Entry::Vacant(slot) = first.entry(e) {
                    if he_reversed(he) {
                        continue 'outer;
                    }
                    slot.insert(true);
                }
            }
        }
        return view;
    }
    rot.to_vec()
}

fn validate_rotation(
    vertices: &[SpherePoint],
    edges: &[GraphEdge],
    rotation: &[Vec<HalfEdge>],
) -> Result<()> {
    if rotation.len() != vertices.len() {
        return Err(Error::EmbeddingInconsistent(
            "rotation system size mismatch".into(),
        ));
    }
    let mut seen = vec![false; 2 * edges.len()];
    for (v, rot) in rotation.iter().enumerate() {
        for &he in rot {
            if he >= 2 * edges.len() {
                return Err(Error::EmbeddingInconsistent(format!(
                    "rotation entry {he} out of range"
                )));
            }
            let e = &edges[he_edge(he)];
            let tail = if he_reversed(he) { e.to } else { e.from };
            if tail != v {
                return Err(Error::EmbeddingInconsistent(format!(
                    "half-edge {he} listed at vertex {v} but starts at {tail}"
                )));
            }
            if seen[he] {
                return Err(Error::EmbeddingInconsistent(format!(
                    "half-edge {he} listed twice"
                )));
            }
            seen[he] = true;
        }
    }
    if seen.iter().any(|s| !s) {
        return Err(Error::EmbeddingInconsistent(
            "rotation system misses a half-edge".into(),
        ));
    }
    Ok(())
}

/// Rotation system from geometry: outgoing half-edges sorted by the
/// angle of their initial direction in the tangent plane, measured in a
/// right-handed frame around the outward normal.
fn geometric_rotation(vertices: &[SpherePoint], edges: &[GraphEdge]) -> Result<Vec<Vec<HalfEdge>>> {
    let mut rotation: Vec<Vec<(f64, HalfEdge)>> = vec![Vec::new(); vertices.len()];
    for (i, e) in edges.iter().enumerate() {
        for he in [half_edge(i, false), half_edge(i, true)] {
            let (tail, pl_dir): (usize, Vec3) = if he_reversed(he) {
                (e.to, initial_direction(&e.polyline, true))
            } else {
                (e.from, initial_direction(&e.polyline, false))
            };
            let n = vertices[tail].to_vec3();
            // Tangent-plane projection of the initial direction.
            let tang = pl_dir.sub(n.scale(pl_dir.dot(n)));
            if tang.norm() < 1e-14 {
                return Err(Error::EmbeddingInconsistent(format!(
                    "edge {i} leaves its vertex radially; direction undefined"
                )));
            }
            let tang = tang.normalized();
            let (u1, u2) = tangent_frame(n);
            let angle = tang.dot(u2).atan2(tang.dot(u1));
            rotation[tail].push((angle, he));
        }
    }
    Ok(rotation
        .into_iter()
        .map(|mut v| {
            v.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
            v.into_iter().map(|(_, he)| he).collect()
        })
        .collect())
}

/// Right-handed tangent frame `(u1, u2, n)` at outward normal `n`.
fn tangent_frame(n: Vec3) -> (Vec3, Vec3) {
    let pick = if n.x.abs() < 0.9 {
        Vec3::new(1.0, 0.0, 0.0)
    } else {
        Vec3::new(0.0, 1.0, 0.0)
    };
    let u1 = pick.sub(n.scale(pick.dot(n))).normalized();
    let u2 = n.cross(u1);
    (u1, u2)
}

/// Direction of a polyline away from one of its ends.
fn initial_direction(pl: &[SpherePoint], from_end: bool) -> Vec3 {
    let pts: Vec<Vec3> = if from_end {
        pl.iter().rev().take(4).map(|p| p.to_vec3()).collect()
    } else {
        pl.iter().take(4).map(|p| p.to_vec3()).collect()
    };
    let base = pts[0];
    for q in pts.iter().skip(1) {
        let d = q.sub(base);
        if d.norm() > 1e-14 {
            return d;
        }
    }
    Vec3::new(0.0, 0.0, 0.0)
}

fn check_connected(n_vertices: usize, edges: &[GraphEdge]) -> Result<()> {
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n_vertices];
    for e in edges {
        adj[e.from].push(e.to);
        adj[e.to].push(e.from);
    }
    let mut seen = vec![false; n_vertices];
    let mut stack = vec![0usize];
    seen[0] = true;
    while let Some(v) = stack.pop() {
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    if seen.iter().any(|s| !s) {
        return Err(Error::EmbeddingInconsistent("graph is disconnected".into()));
    }
    Ok(())
}

/// Traces face boundary walks: the successor of a half-edge is the
/// rotation successor of its reversal at the head vertex.
fn trace_faces(
    edges: &[GraphEdge],
    rotation: &[Vec<HalfEdge>],
    _vertices: &[SpherePoint],
) -> Result<(Vec<Vec<HalfEdge>>, Vec<usize>)> {
    let n_he = 2 * edges.len();
    let mut pos: HashMap<HalfEdge, (usize, usize)> = HashMap::new();
    for (v, rot) in rotation.iter().enumerate() {
        for (i, &he) in rot.iter().enumerate() {
            pos.insert(he, (v, i));
        }
    }
    let next = |he: HalfEdge| -> Result<HalfEdge> {
        let r = he_rev(he);
        let &(v, i) = pos
            .get(&r)
            .ok_or_else(|| Error::EmbeddingInconsistent(format!("half-edge {r} not in rotation")))?;
        let rot = &rotation[v];
        Ok(rot[(i + 1) % rot.len()])
    };
    let mut face_of = vec![usize::MAX; n_he];
    let mut walks = Vec::new();
    for start in 0..n_he {
        if face_of[start] != usize::MAX {
            continue;
        }
        let fid = walks.len();
        let mut walk = Vec::new();
        let mut he = start;
        loop {
            if face_of[he] != usize::MAX {
                return Err(Error::EmbeddingInconsistent(format!(
                    "half-edge {he} traversed by two faces"
                )));
            }
            face_of[he] = fid;
            walk.push(he);
            he = next(he)?;
            if he == start {
                break;
            }
            if walk.len() > n_he {
                return Err(Error::EmbeddingInconsistent(
                    "face walk does not close".into(),
                ));
            }
        }
        walks.push(walk);
    }
    Ok((walks, face_of))
}

/// Rejects graphs whose open edges intersect away from shared vertices.
fn check_edge_disjointness(
    vertices: &[SpherePoint],
    edges: &[GraphEdge],
    support: &SupportIndex,
    step: f64,
) -> Result<()> {
    let guard = 5.0 * step;
    let vpos: Vec<Vec3> = vertices.iter().map(|v| v.to_vec3()).collect();
    for seg in &support.segs {
        let mid = seg.a.add(seg.b).scale(0.5).normalized();
        for other in support.near_minimal_segments(mid, 2.0 * step) {
            if other.edge == seg.edge && other.index.abs_diff(seg.index) <= 1 {
                continue;
            }
            let d = segment_pair_distance(seg.a, seg.b, other.a, other.b);
            if d >= EPS_GEOM {
                continue;
            }
            // Touching near a shared vertex is legitimate.
            let near_vertex = vpos.iter().any(|v| {
                v.dist(mid) < guard
                    && (edges[seg.edge].from == edges[other.edge].from
                        || edges[seg.edge].from == edges[other.edge].to
                        || edges[seg.edge].to == edges[other.edge].from
                        || edges[seg.edge].to == edges[other.edge].to
                        || seg.edge == other.edge)
            });
            if !near_vertex {
                return Err(Error::EmbeddingInconsistent(format!(
                    "edges {} and {} intersect away from shared vertices",
                    seg.edge, other.edge
                )));
            }
        }
    }
    Ok(())
}

/// Minimal distance between two segments in `R^3` (clamped
/// closest-point computation).
fn segment_pair_distance(a1: Vec3, b1: Vec3, a2: Vec3, b2: Vec3) -> f64 {
    let d1 = b1.sub(a1);
    let d2 = b2.sub(a2);
    let r = a1.sub(a2);
    let (a, e, f) = (d1.dot(d1), d2.dot(d2), d2.dot(r));
    let (b, c) = (d1.dot(d2), d1.dot(r));
    let denom = a * e - b * b;
    let mut s = if denom.abs() > 1e-30 {
        ((b * f - c * e) / denom).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let mut t = if e > 0.0 { ((b * s + f) / e).clamp(0.0, 1.0) } else { 0.0 };
    if a > 0.0 {
        s = ((b * t - c) / a).clamp(0.0, 1.0);
    }
    t = if e > 0.0 { ((b * s + f) / e).clamp(0.0, 1.0) } else { 0.0 };
    let p1 = a1.add(d1.scale(s));
    let p2 = a2.add(d2.scale(t));
    p1.dist(p2)
}

/// Directed Hausdorff distance from `a` to `b` at sampling resolution.
pub fn directed_hausdorff(a: &EmbeddedGraph, b: &EmbeddedGraph) -> f64 {
    let mut worst = 0.0f64;
    for e in &a.edges {
        for p in &e.polyline {
            let (d, _, _) = b.support.nearest(p.to_vec3());
            worst = worst.max(d);
        }
    }
    worst
}

/// Symmetric Hausdorff distance between graph supports, accurate up to
/// the sampling resolution.
pub fn graph_hausdorff(a: &EmbeddedGraph, b: &EmbeddedGraph) -> f64 {
    directed_hausdorff(a, b).max(directed_hausdorff(b, a))
}

/// Resamples a polyline so consecutive samples are at most `max_step`
/// apart in arc length, inserting great-circle interpolants.
pub fn resample_polyline(pl: &[SpherePoint], max_step: f64) -> Vec<SpherePoint> {
    // Decimate first: oversampled inputs (typically pullbacks, whose
    // sample count would otherwise double per iteration) are thinned
    // to roughly half the target step before gaps are filled.
    let mut thinned: Vec<SpherePoint> = Vec::with_capacity(pl.len());
    for (i, p) in pl.iter().enumerate() {
        if i == 0 || i + 1 == pl.len() {
            thinned.push(*p);
            continue;
        }
        let arc = thinned.last().unwrap().to_vec3().arc_dist(p.to_vec3());
        if arc >= 0.6 * max_step {
            thinned.push(*p);
        }
    }
    let mut out: Vec<SpherePoint> = Vec::with_capacity(thinned.len());
    for p in &thinned {
        let v = p.to_vec3();
        if let Some(last) = out.last() {
            let lv = last.to_vec3();
            let arc = lv.arc_dist(v);
            if arc < 1e-15 {
                continue;
            }
            if arc > max_step {
                let n = (arc / max_step).ceil() as usize;
                for k in 1..n {
                    out.push(SpherePoint::from_vec3(slerp(lv, v, k as f64 / n as f64)));
                }
            }
        }
        out.push(*p);
    }
    out
}

/// Great-circle interpolation between unit vectors.
pub fn slerp(a: Vec3, b: Vec3, t: f64) -> Vec3 {
    let theta = a.arc_dist(b);
    if theta < 1e-9 {
        return a.scale(1.0 - t).add(b.scale(t)).normalized();
    }
    let s = theta.sin();
    a.scale(((1.0 - t) * theta).sin() / s)
        .add(b.scale((t * theta).sin() / s))
        .normalized()
}

pub fn polyline_length(pl: &[SpherePoint]) -> f64 {
    pl.windows(2)
        .map(|w| w[0].to_vec3().arc_dist(w[1].to_vec3()))
        .sum()
}

/// Point of a chord segment closest to `p` (all in `R^3`).
pub fn closest_on_segment(p: Vec3, a: Vec3, b: Vec3) -> Vec3 {
    let ab = b.sub(a);
    let denom = ab.dot(ab);
    if denom == 0.0 {
        return a;
    }
    let t = (p.sub(a).dot(ab) / denom).clamp(0.0, 1.0);
    a.add(ab.scale(t))
}

#[derive(Debug, Clone)]
pub(crate) struct Segment {
    pub a: Vec3,
    pub b: Vec3,
    pub edge: usize,
    pub index: usize,
    /// Normalized arc-length parameters of the segment ends.
    pub t0: f64,
    pub t1: f64,
}

/// Block-anchored nearest-segment index over the graph support.
///
/// Segments are grouped into contiguous blocks of `BLOCK` along each
/// edge; each block stores an anchor and covering radius, so a nearest
/// query scans blocks first and fine-scans only competitive ones.
#[derive(Debug, Clone)]
pub(crate) struct SupportIndex {
    pub segs: Vec<Segment>,
    blocks: Vec<(Vec3, f64, usize, usize)>,
}

const BLOCK: usize = 48;

impl SupportIndex {
    pub fn new(edges: &[GraphEdge]) -> Self {
        let mut segs = Vec::new();
        for (ei, e) in edges.iter().enumerate() {
            let total = polyline_length(&e.polyline).max(1e-300);
            let mut acc = 0.0;
            let vecs: Vec<Vec3> = e.polyline.iter().map(|p| p.to_vec3()).collect();
            for (k, w) in vecs.windows(2).enumerate() {
                let step = w[0].arc_dist(w[1]);
                segs.push(Segment {
                    a: w[0],
                    b: w[1],
                    edge: ei,
                    index: k,
                    t0: acc / total,
                    t1: (acc + step) / total,
                });
                acc += step;
            }
        }
        let mut blocks = Vec::new();
        let mut start = 0;
        while start < segs.len() {
            let end = (start + BLOCK).min(segs.len());
            let anchor = segs[start].a;
            let mut radius = 0.0f64;
            for s in &segs[start..end] {
                radius = radius.max(anchor.dist(s.a)).max(anchor.dist(s.b));
            }
            blocks.push((anchor, radius, start, end));
            start = end;
        }
        SupportIndex { segs, blocks }
    }

    /// `(arc distance, edge, normalized arc parameter)` of the nearest
    /// support point.
    pub fn nearest(&self, p: Vec3) -> (f64, usize, f64) {
        let mut ub = f64::MAX;
        for &(anchor, _, _, _) in &self.blocks {
            ub = ub.min(anchor.dist(p));
        }
        let mut best = (f64::MAX, 0usize, 0.0f64);
        for &(anchor, radius, s, e) in &self.blocks {
            if anchor.dist(p) - radius > ub.min(best.0) {
                continue;
            }
            for seg in &self.segs[s..e] {
                let q = closest_on_segment(p, seg.a, seg.b);
                let d = q.dist(p);
                if d < best.0 {
                    let ab = seg.b.sub(seg.a);
                    let denom = ab.dot(ab);
                    let frac = if denom == 0.0 {
                        0.0
                    } else {
                        (p.sub(seg.a).dot(ab) / denom).clamp(0.0, 1.0)
                    };
                    best = (d, seg.edge, seg.t0 + (seg.t1 - seg.t0) * frac);
                }
            }
        }
        (2.0 * (0.5 * best.0.clamp(0.0, 2.0)).asin(), best.1, best.2)
    }

    /// All segments within `slack` of the minimal distance to `p`.
    pub(crate) fn near_minimal_segments(&self, p: Vec3, slack: f64) -> Vec<&Segment> {
        let mut ub = f64::MAX;
        for &(anchor, _, _, _) in &self.blocks {
            ub = ub.min(anchor.dist(p));
        }
        let mut dmin = f64::MAX;
        let mut cands: Vec<(&Segment, f64)> = Vec::new();
        for &(anchor, radius, s, e) in &self.blocks {
            if anchor.dist(p) - radius > ub + slack {
                continue;
            }
            for seg in &self.segs[s..e] {
                let d = closest_on_segment(p, seg.a, seg.b).dist(p);
                dmin = dmin.min(d);
                if d <= ub + slack {
                    cands.push((seg, d));
                }
            }
        }
        cands
            .into_iter()
            .filter(|(_, d)| *d <= dmin + slack)
            .map(|(s, _)| s)
            .collect()
    }
}

/// Builders for common test and demo graphs.
pub mod builders {
    use super::*;

    /// Jordan graph from a closed curve. `samples` lists the curve
    /// without repeating the first point; `vertex_indices` (ascending)
    /// select which samples become vertices.
    pub fn from_closed_curve(
        samples: &[SpherePoint],
        vertex_indices: &[usize],
    ) -> Result<EmbeddedGraph> {
        if samples.len() < 3 || vertex_indices.is_empty() {
            return Err(Error::InvalidInput(
                "closed curve needs at least 3 samples and 1 vertex".into(),
            ));
        }
        let n = samples.len();
        let vertices: Vec<SpherePoint> = vertex_indices.iter().map(|&i| samples[i]).collect();
        let mut edges = Vec::new();
        let k = vertex_indices.len();
        for vi in 0..k {
            let start = vertex_indices[vi];
            let end = vertex_indices[(vi + 1) % k];
            let mut pl = Vec::new();
            let mut idx = start;
            loop {
                pl.push(samples[idx % n]);
                if idx % n == end && pl.len() > 1 {
                    break;
                }
                idx += 1;
                if idx > 2 * n {
                    return Err(Error::InvalidInput("vertex indices do not cycle".into()));
                }
                if idx % n == end {
                    pl.push(samples[end]);
                    break;
                }
            }
            edges.push(GraphEdge {
                from: vi,
                to: (vi + 1) % k,
                polyline: pl,
            });
        }
        EmbeddedGraph::new(vertices, edges)
    }

    /// Round curve `center + r e^(i theta)` in the standard chart.
    pub fn circle(center: Complex64, r: f64, n_vertices: usize, n_samples: usize) -> Result<EmbeddedGraph> {
        let samples: Vec<SpherePoint> = (0..n_samples)
            .map(|k| {
                let th = 2.0 * std::f64::consts::PI * k as f64 / n_samples as f64;
                SpherePoint::from_complex(center + Complex64::from_polar(r, th))
            })
            .collect();
        let vidx: Vec<usize> = (0..n_vertices)
            .map(|k| k * n_samples / n_vertices)
            .collect();
        from_closed_curve(&samples, &vidx)
    }

    /// Ellipse `a cos theta + i b sin theta` about the origin.
    pub fn ellipse(a: f64, b: f64, n_vertices: usize, n_samples: usize) -> Result<EmbeddedGraph> {
        let samples: Vec<SpherePoint> = (0..n_samples)
            .map(|k| {
                let th = 2.0 * std::f64::consts::PI * k as f64 / n_samples as f64;
                SpherePoint::from_complex(Complex64::new(a * th.cos(), b * th.sin()))
            })
            .collect();
        let vidx: Vec<usize> = (0..n_vertices)
            .map(|k| k * n_samples / n_vertices)
            .collect();
        from_closed_curve(&samples, &vidx)
    }
}
