//! Metric regularity of invariant curves and the boundary dynamics.
//!
//! The bounded turning constant certifies quasicircle geometry: for
//! every pair of points on a Jordan curve, the smaller of the two
//! connecting arcs has diameter comparable to the chord. The interval
//! systems model the expansive dynamics on the curve itself, and
//! conjugacies between two such systems are computed by pullback
//! iteration and measured for quasi-symmetry.

use crate::embedded_graph::{half_edge, slerp, EmbeddedGraph};
use crate::error::{Error, Result};
use crate::markov::{expanding_lengths, usize_matrix, MarkovPartition, TOL_TRACE};
use crate::numerics::{RationalMap, SpherePoint, Vec3};

/// Endpoints of branch images must land on partition endpoints to
/// this accuracy.
pub const EPS_ALIGN: f64 = 1e-12;

/// Bounded turning constant of a Jordan curve graph, estimated on a
/// uniform closed resampling with `n_samples` points (256 is a good
/// default; more than 512 is rarely worth the cubic cost).
///
/// For every sample pair, the diameters of both connecting arcs are
/// accumulated incrementally; the constant is the maximum over pairs
/// of `min(arc diameters) / chord`. A great circle gives 1.
pub fn bounded_turning_constant(g: &EmbeddedGraph, n_samples: usize) -> Result<f64> {
    let loop_pts = jordan_loop(g)?;
    let n = n_samples.clamp(8, 512);
    let pts = resample_closed(&loop_pts, n);
    let chord2 = |i: usize, j: usize| pts[i].dist(pts[j]).powi(2);
    // diam2[i][gap]: squared diameter of the forward arc from sample i
    // to sample i+gap.
    let mut diam2 = vec![vec![0.0f64; n]; n];
    for gap in 1..n {
        for i in 0..n {
            let j = (i + gap) % n;
            let mut d = diam2[i][gap - 1];
            for m in 0..=gap {
                d = d.max(chord2((i + m) % n, j));
            }
            diam2[i][gap] = d;
        }
    }
    let total: f64 = pts
        .windows(2)
        .map(|w| w[0].dist(w[1]))
        .sum::<f64>()
        + pts[n - 1].dist(pts[0]);
    let min_chord2 = (0.5 * total / n as f64).powi(2);
    let mut turning = 1.0f64;
    for i in 0..n {
        for gap in 1..n {
            let j = (i + gap) % n;
            if j < i {
                continue; // each unordered pair once
            }
            let c2 = chord2(i, j);
            if c2 < min_chord2 {
                continue;
            }
            let m2 = diam2[i][gap].min(diam2[j][n - gap]);
            turning = turning.max((m2 / c2).sqrt());
        }
    }
    Ok(turning)
}

/// Walks a valence-2 graph into one closed sample loop.
fn jordan_loop(g: &EmbeddedGraph) -> Result<Vec<Vec3>> {
    if g.vertices().iter().enumerate().any(|(v, _)| g.rotation()[v].len() != 2) {
        return Err(Error::InvalidInput(
            "bounded turning is defined for Jordan curves (valence 2 everywhere)".into(),
        ));
    }
    let start = half_edge(0, false);
    let mut he = start;
    let mut out: Vec<Vec3> = Vec::new();
    loop {
        let pl = g.he_polyline(he);
        let skip = usize::from(!out.is_empty());
        out.extend(pl.iter().skip(skip).map(|p| p.to_vec3()));
        let head = g.he_head(he);
        let rev = he ^ 1;
        let next = *g.rotation()[head]
            .iter()
            .find(|&&o| o != rev)
            .expect("valence 2 vertex has another half-edge");
        he = next;
        if he == start {
            break;
        }
    }
    out.pop(); // closing point duplicates the start
    Ok(out)
}

/// Uniform arc-length resampling of a closed loop to exactly `n`
/// points.
fn resample_closed(pts: &[Vec3], n: usize) -> Vec<Vec3> {
    let m = pts.len();
    let mut cum = Vec::with_capacity(m + 1);
    let mut acc = 0.0f64;
    cum.push(0.0);
    for i in 0..m {
        acc += pts[i].arc_dist(pts[(i + 1) % m]);
        cum.push(acc);
    }
    let total = acc;
    let mut out = Vec::with_capacity(n);
    let mut seg = 0usize;
    for k in 0..n {
        let target = total * k as f64 / n as f64;
        while cum[seg + 1] < target {
            seg += 1;
        }
        let span = cum[seg + 1] - cum[seg];
        let t = if span > 0.0 { (target - cum[seg]) / span } else { 0.0 };
        out.push(slerp(pts[seg], pts[(seg + 1) % m], t));
    }
    out
}

/// One monotone branch of a Markov interval map, stored as a sample
/// table interpolated linearly.
#[derive(Debug, Clone)]
pub struct Branch {
    /// Ascending sample abscissae spanning the branch domain.
    pub samples: Vec<(f64, f64)>,
}

impl Branch {
    pub fn linear(x0: f64, x1: f64, y0: f64, y1: f64) -> Branch {
        Branch {
            samples: vec![(x0, y0), (x1, y1)],
        }
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.samples[0].0, self.samples.last().unwrap().0)
    }

    pub fn image(&self) -> (f64, f64) {
        let (y0, y1) = (self.samples[0].1, self.samples.last().unwrap().1);
        (y0.min(y1), y0.max(y1))
    }

    pub fn increasing(&self) -> bool {
        self.samples.last().unwrap().1 >= self.samples[0].1
    }

    pub fn eval(&self, x: f64) -> f64 {
        let s = &self.samples;
        let i = match s.binary_search_by(|&(sx, _)| sx.partial_cmp(&x).unwrap()) {
            Ok(i) => return s[i].1,
            Err(i) => i.clamp(1, s.len() - 1),
        };
        let (x0, y0) = s[i - 1];
        let (x1, y1) = s[i];
        if x1 == x0 {
            return y0;
        }
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }

    /// Inverse of the (strictly monotone) branch.
    pub fn eval_inverse(&self, y: f64) -> f64 {
        let s = &self.samples;
        let inc = self.increasing();
        let (mut lo, mut hi) = (0usize, s.len() - 1);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            let below = if inc { s[mid].1 <= y } else { s[mid].1 >= y };
            if below {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (x0, y0) = s[lo];
        let (x1, y1) = s[hi];
        if y1 == y0 {
            return x0;
        }
        (x0 + (x1 - x0) * (y - y0) / (y1 - y0)).clamp(x0, x1)
    }
}

/// Piecewise-monotone Markov map of an interval.
#[derive(Debug, Clone)]
pub struct IntervalSystem {
    /// Partition endpoints, ascending.
    pub endpoints: Vec<f64>,
    /// Branches, ordered by domain; domains tile the full interval.
    pub branches: Vec<Branch>,
}

impl IntervalSystem {
    /// Validates the Markov structure: branch domains tile the
    /// interval, every branch is strictly monotone, and branch image
    /// endpoints align with partition endpoints within [`EPS_ALIGN`].
    pub fn new(endpoints: Vec<f64>, mut branches: Vec<Branch>) -> Result<IntervalSystem> {
        if endpoints.len() < 2 || endpoints.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput(
                "need at least two strictly ascending endpoints".into(),
            ));
        }
        if branches.is_empty() {
            return Err(Error::InvalidInput("need at least one branch".into()));
        }
        branches.sort_by(|a, b| a.domain().0.partial_cmp(&b.domain().0).unwrap());
        let lo = endpoints[0];
        let hi = *endpoints.last().unwrap();
        let mut cursor = lo;
        for (bi, b) in branches.iter().enumerate() {
            if b.samples.len() < 2 {
                return Err(Error::InvalidInput(format!(
                    "branch {bi} needs at least two samples"
                )));
            }
            let monotone_x = b.samples.windows(2).all(|w| w[1].0 > w[0].0);
            let inc = b.increasing();
            let monotone_y = b
                .samples
                .windows(2)
                .all(|w| if inc { w[1].1 > w[0].1 } else { w[1].1 < w[0].1 });
            if !monotone_x || !monotone_y {
                return Err(Error::InvalidInput(format!(
                    "branch {bi} is not strictly monotone"
                )));
            }
            let (d0, d1) = b.domain();
            if (d0 - cursor).abs() > EPS_ALIGN {
                return Err(Error::InvalidInput(format!(
                    "branch {bi} leaves a gap: domain starts at {d0}, expected {cursor}"
                )));
            }
            cursor = d1;
            let (i0, i1) = b.image();
            for y in [i0, i1] {
                if !endpoints.iter().any(|e| (e - y).abs() <= EPS_ALIGN) {
                    return Err(Error::IncidenceMismatch(format!(
                        "branch {bi} image endpoint {y} misses every partition endpoint"
                    )));
                }
            }
        }
        if (cursor - hi).abs() > EPS_ALIGN {
            return Err(Error::InvalidInput(format!(
                "branch domains end at {cursor}, expected {hi}"
            )));
        }
        Ok(IntervalSystem {
            endpoints,
            branches,
        })
    }

    pub fn range(&self) -> (f64, f64) {
        (self.endpoints[0], *self.endpoints.last().unwrap())
    }

    /// Index of the branch whose domain contains `x`.
    pub fn branch_of(&self, x: f64) -> usize {
        let mut idx = 0;
        for (i, b) in self.branches.iter().enumerate() {
            if x >= b.domain().0 {
                idx = i;
            }
        }
        idx
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.branches[self.branch_of(x)].eval(x)
    }

    /// `incidence[i][j]`: how many branches with domain in partition
    /// cell `i` map onto cell `j`.
    pub fn incidence_matrix(&self) -> Vec<Vec<usize>> {
        let n = self.endpoints.len() - 1;
        let mut m = vec![vec![0usize; n]; n];
        for b in &self.branches {
            let (d0, d1) = b.domain();
            let mid = 0.5 * (d0 + d1);
            let cell = self.cell_of(mid);
            let (i0, i1) = b.image();
            for j in 0..n {
                if self.endpoints[j] >= i0 - EPS_ALIGN && self.endpoints[j + 1] <= i1 + EPS_ALIGN {
                    m[cell][j] += 1;
                }
            }
        }
        m
    }

    fn cell_of(&self, x: f64) -> usize {
        let n = self.endpoints.len() - 1;
        for j in (0..n).rev() {
            if x >= self.endpoints[j] {
                return j;
            }
        }
        0
    }

    /// Text form: one `endpoints` line, then one `branch` header and
    /// its sample lines per branch.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        out.push_str("endpoints");
        for e in &self.endpoints {
            out.push_str(&format!(" {e}"));
        }
        out.push('\n');
        for b in &self.branches {
            out.push_str(&format!("branch {}\n", b.samples.len()));
            for (x, y) in &b.samples {
                out.push_str(&format!("{x} {y}\n"));
            }
        }
        out
    }

    pub fn parse(text: &str) -> Result<IntervalSystem> {
        let mut endpoints: Vec<f64> = Vec::new();
        let mut branches: Vec<Branch> = Vec::new();
        let mut pending: Option<(usize, Vec<(f64, f64)>)> = None;
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |m: &str| Error::Parse(format!("line {}: {m}", ln + 1));
            if let Some((want, samples)) = pending.as_mut() {
                let mut it = line.split_whitespace();
                let x: f64 = it
                    .next()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| bad("expected sample x"))?;
                let y: f64 = it
                    .next()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| bad("expected sample y"))?;
                samples.push((x, y));
                if samples.len() == *want {
                    branches.push(Branch {
                        samples: std::mem::take(samples),
                    });
                    pending = None;
                }
                continue;
            }
            let mut it = line.split_whitespace();
            match it.next() {
                Some("endpoints") => {
                    endpoints = it
                        .map(|s| s.parse::<f64>())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|e| bad(&format!("bad endpoint: {e}")))?;
                }
                Some("branch") => {
                    let n: usize = it
                        .next()
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| bad("branch needs a sample count"))?;
                    if n < 2 {
                        return Err(bad("branch needs at least 2 samples"));
                    }
                    pending = Some((n, Vec::with_capacity(n)));
                }
                _ => return Err(bad("expected 'endpoints' or 'branch'")),
            }
        }
        if pending.is_some() {
            return Err(Error::Parse("truncated branch sample table".into()));
        }
        IntervalSystem::new(endpoints, branches)
    }
}

/// A topological conjugacy sampled on a uniform grid.
#[derive(Debug, Clone)]
pub struct Conjugacy {
    /// Grid over the domain system's interval.
    pub grid: Vec<f64>,
    /// Conjugacy values, monotone over the grid.
    pub values: Vec<f64>,
    pub iterations: usize,
    /// Final `sup |phi(h1(x)) - h2(phi(x))|` over the grid.
    pub residual: f64,
}

impl Conjugacy {
    pub fn eval(&self, x: f64) -> f64 {
        interp(&self.grid, &self.values, x)
    }

    /// Inverse by bisection over the monotone value table.
    pub fn eval_inverse(&self, y: f64) -> f64 {
        interp(&self.values, &self.grid, y)
    }
}

fn interp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[n - 1] {
        return ys[n - 1];
    }
    let (mut lo, mut hi) = (0usize, n - 1);
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if xs[mid] <= x {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = (x - xs[lo]) / (xs[hi] - xs[lo]);
    ys[lo] + t * (ys[hi] - ys[lo])
}

const QS_GRID_BITS: usize = 14;
const QS_TOL: f64 = 1e-10;
const QS_MAX_ITERS: usize = 20_000;

/// Conjugacy `phi` with `phi . h1 = h2 . phi`, by pullback iteration
/// `phi <- h2_b^{-1} . phi . h1` branch by branch on a dyadic grid.
///
/// The two systems must have identical branch counts, matching branch
/// orientations, and equal incidence matrices.
pub fn qs_conjugacy(sys1: &IntervalSystem, sys2: &IntervalSystem) -> Result<Conjugacy> {
    if sys1.branches.len() != sys2.branches.len()
        || sys1.endpoints.len() != sys2.endpoints.len()
        || sys1.incidence_matrix() != sys2.incidence_matrix()
        || sys1
            .branches
            .iter()
            .zip(&sys2.branches)
            .any(|(a, b)| a.increasing() != b.increasing())
    {
        return Err(Error::IncidenceMismatch(
            "systems have different symbolic structure".into(),
        ));
    }
    let (a1, b1) = sys1.range();
    let n = (1usize << QS_GRID_BITS) + 1;
    let grid: Vec<f64> = (0..n)
        .map(|k| a1 + (b1 - a1) * k as f64 / (n - 1) as f64)
        .collect();
    // Initial guess: piecewise-linear endpoint correspondence.
    let mut values: Vec<f64> = grid
        .iter()
        .map(|&x| interp(&sys1.endpoints, &sys2.endpoints, x))
        .collect();
    let branch_idx: Vec<usize> = grid.iter().map(|&x| sys1.branch_of(x)).collect();
    let mut iterations = 0usize;
    loop {
        iterations += 1;
        let mut next = Vec::with_capacity(n);
        let mut delta = 0.0f64;
        for (k, &x) in grid.iter().enumerate() {
            let b = branch_idx[k];
            let y = sys1.branches[b].eval(x);
            let phi_y = interp(&grid, &values, y);
            let v = sys2.branches[b].eval_inverse(phi_y);
            delta = delta.max((v - values[k]).abs());
            next.push(v);
        }
        values = next;
        if delta < QS_TOL {
            break;
        }
        if iterations >= QS_MAX_ITERS {
            return Err(Error::NonConvergence {
                iterations,
                message: format!("conjugacy update stuck at {delta:e}"),
            });
        }
    }
    let mut residual = 0.0f64;
    for &x in &grid {
        let lhs = interp(&grid, &values, sys1.eval(x));
        let rhs = sys2.eval(interp(&grid, &values, x));
        residual = residual.max((lhs - rhs).abs());
    }
    Ok(Conjugacy {
        grid,
        values,
        iterations,
        residual,
    })
}

/// Quasi-symmetry estimate: the worst symmetric ratio
/// `|phi(x+t) - phi(x)| / |phi(x) - phi(x-t)|` (or its reciprocal)
/// over dyadic scales of the grid.
pub fn qs_norm_estimate(conj: &Conjugacy) -> f64 {
    let n = conj.grid.len();
    let mut worst = 1.0f64;
    let mut step = 1usize;
    while 2 * step < n {
        let mut k = step;
        while k + step < n {
            let right = conj.values[k + step] - conj.values[k];
            let left = conj.values[k] - conj.values[k - step];
            if right > 0.0 && left > 0.0 {
                let r = right / left;
                worst = worst.max(r.max(1.0 / r));
            }
            k += step;
        }
        step *= 2;
    }
    worst
}

/// Linearized boundary dynamics of a Markov partition: each edge
/// becomes an interval with its expanding eigenlength, and every
/// traversal in the edge trace becomes one affine branch.
pub fn boundary_interval_system(
    f: &RationalMap,
    part: &MarkovPartition,
) -> Result<IntervalSystem> {
    let g = &part.graph;
    let n = g.edges().len();
    let eig = expanding_lengths(&usize_matrix(&part.edge_matrix))?;
    let total: f64 = eig.vector.iter().sum();
    let lengths: Vec<f64> = eig.vector.iter().map(|v| v / total).collect();
    let mut endpoints = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    endpoints.push(0.0);
    for len in &lengths {
        acc += len;
        endpoints.push(acc);
    }
    endpoints[n] = 1.0;
    let mut branches = Vec::new();
    for (ei, e) in g.edges().iter().enumerate() {
        let images: Vec<SpherePoint> = e
            .polyline
            .iter()
            .map(|p| f.evaluate(p))
            .collect::<Result<_>>()?;
        let seq = classify(g, &images)?;
        let runs = crate::markov::trace_runs_public(&seq);
        let mut x = endpoints[ei];
        for run in runs {
            let j = run.0;
            let increasing = run.2;
            let width = lengths[j] / eig.lambda;
            let (y0, y1) = if increasing {
                (endpoints[j], endpoints[j + 1])
            } else {
                (endpoints[j + 1], endpoints[j])
            };
            branches.push(Branch::linear(x, x + width, y0, y1));
            x += width;
        }
        // Absorb the accumulated rounding into the last branch so the
        // domains tile exactly.
        if let Some(last) = branches.last_mut() {
            let m = last.samples.len() - 1;
            last.samples[m].0 = endpoints[ei + 1];
        }
    }
    IntervalSystem::new(endpoints, branches)
}

fn classify(g: &EmbeddedGraph, pts: &[SpherePoint]) -> Result<Vec<(usize, f64)>> {
    pts.iter()
        .map(|p| {
            let (d, e, t) = g.nearest_on_support(p);
            if d > TOL_TRACE {
                Err(Error::TraceAmbiguous(format!(
                    "boundary trace strays {d:e} from the graph"
                )))
            } else {
                Ok((e, t))
            }
        })
        .collect()
}

/// Rigid rotation of a graph, for invariance checks: applies the
/// orthogonal matrix to every stored point and rebuilds.
pub fn rotate_graph(g: &EmbeddedGraph, r: &[[f64; 3]; 3]) -> Result<EmbeddedGraph> {
    let rot = |p: &SpherePoint| {
        let v = p.to_vec3();
        let (x, y, z) = (v.x, v.y, v.z);
        SpherePoint::from_vec3(Vec3::new(
            r[0][0] * x + r[0][1] * y + r[0][2] * z,
            r[1][0] * x + r[1][1] * y + r[1][2] * z,
            r[2][0] * x + r[2][1] * y + r[2][2] * z,
        ))
    };
    let vertices: Vec<SpherePoint> = g.vertices().iter().map(|p| rot(p)).collect();
    let edges: Vec<crate::embedded_graph::GraphEdge> = g
        .edges()
        .iter()
        .map(|e| crate::embedded_graph::GraphEdge {
            from: e.from,
            to: e.to,
            polyline: e.polyline.iter().map(|p| rot(p)).collect(),
        })
        .collect();
    EmbeddedGraph::new(vertices, edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedded_graph::builders;
    use crate::markov::build_partition;
    use num_complex::Complex64;

    fn doubling() -> IntervalSystem {
        IntervalSystem::new(
            vec![0.0, 0.5, 1.0],
            vec![
                Branch::linear(0.0, 0.5, 0.0, 1.0),
                Branch::linear(0.5, 1.0, 0.0, 1.0),
            ],
        )
        .unwrap()
    }

    fn one_third() -> IntervalSystem {
        IntervalSystem::new(
            vec![0.0, 1.0 / 3.0, 1.0],
            vec![
                Branch::linear(0.0, 1.0 / 3.0, 0.0, 1.0),
                Branch::linear(1.0 / 3.0, 1.0, 0.0, 1.0),
            ],
        )
        .unwrap()
    }

    #[test]
    fn great_circle_turning_is_one() {
        let g = builders::circle(Complex64::new(0.0, 0.0), 1.0, 1, 4096).unwrap();
        let k = bounded_turning_constant(&g, 256).unwrap();
        assert!((k - 1.0).abs() < 1e-3, "turning {k}");
    }

    #[test]
    fn small_square_turning_matches_planar_value() {
        // Oracle: for a planar square with unit side, the worst pair
        // is (u, 0) and (1-u, 1); both arcs then have diameter
        // sqrt((1-u)^2 + 1) against chord sqrt((1-2u)^2 + 1), and the
        // ratio is maximized over u.
        let s = 0.01;
        let corners = [
            Complex64::new(0.0, 0.0),
            Complex64::new(s, 0.0),
            Complex64::new(s, s),
            Complex64::new(0.0, s),
        ];
        let mut samples = Vec::new();
        for k in 0..4 {
            let (a, b) = (corners[k], corners[(k + 1) % 4]);
            for m in 0..64 {
                let t = m as f64 / 64.0;
                samples.push(SpherePoint::from_complex(a + (b - a) * t));
            }
        }
        let g = builders::from_closed_curve(&samples, &[0, 64, 128, 192]).unwrap();
        let k = bounded_turning_constant(&g, 256).unwrap();
        let oracle = (0..=1000)
            .map(|i| {
                let u = i as f64 / 1000.0;
                ((((1.0 - u).powi(2) + 1.0) / ((1.0 - 2.0 * u).powi(2) + 1.0)) as f64).sqrt()
            })
            .fold(0.0f64, f64::max);
        assert!((k - oracle).abs() < 3e-3, "turning {k}, oracle {oracle}");
    }

    #[test]
    fn turning_is_rotation_invariant() {
        let g = builders::ellipse(0.7, 1.1, 1, 4096).unwrap();
        let k0 = bounded_turning_constant(&g, 256).unwrap();
        let (c, s) = (0.6f64, 0.8f64);
        let r = [[c, 0.0, -s], [0.0, 1.0, 0.0], [s, 0.0, c]];
        let rotated = rotate_graph(&g, &r).unwrap();
        let k1 = bounded_turning_constant(&rotated, 256).unwrap();
        assert!((k0 - k1).abs() < 1e-6, "k0 {k0} k1 {k1}");
    }

    #[test]
    fn doubling_to_one_third_conjugacy() {
        let conj = qs_conjugacy(&doubling(), &one_third()).unwrap();
        assert!(conj.residual <= 1e-8, "residual {:e}", conj.residual);
        assert!((conj.eval(0.5) - 1.0 / 3.0).abs() < 1e-8);
        assert!((conj.eval(0.25) - 1.0 / 9.0).abs() < 1e-8);
        for k in 0..=20 {
            let x = k as f64 / 20.0;
            assert!((conj.eval_inverse(conj.eval(x)) - x).abs() < 1e-6);
            assert!((conj.eval(conj.eval_inverse(x)) - x).abs() < 1e-6);
        }
        let norm = qs_norm_estimate(&conj);
        assert!(norm > 1.5, "conjugacy is genuinely quasisymmetric: {norm}");
    }

    #[test]
    fn identity_conjugacy_has_unit_norm() {
        let conj = qs_conjugacy(&doubling(), &doubling()).unwrap();
        let norm = qs_norm_estimate(&conj);
        assert!((norm - 1.0).abs() < 1e-9, "norm {norm}");
    }

    #[test]
    fn mismatched_systems_are_rejected() {
        let tripling = IntervalSystem::new(
            vec![0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0],
            vec![
                Branch::linear(0.0, 1.0 / 3.0, 0.0, 1.0),
                Branch::linear(1.0 / 3.0, 2.0 / 3.0, 0.0, 1.0),
                Branch::linear(2.0 / 3.0, 1.0, 0.0, 1.0),
            ],
        )
        .unwrap();
        assert!(matches!(
            qs_conjugacy(&doubling(), &tripling),
            Err(Error::IncidenceMismatch(_))
        ));
    }

    #[test]
    fn interval_system_text_round_trip() {
        let sys = one_third();
        let text = sys.serialize();
        let back = IntervalSystem::parse(&text).unwrap();
        assert_eq!(back.endpoints, sys.endpoints);
        assert_eq!(back.branches.len(), sys.branches.len());
        assert_eq!(back.incidence_matrix(), sys.incidence_matrix());
    }

    #[test]
    fn boundary_system_of_squaring_circle() {
        let f = RationalMap::monic_plus_c(2, Complex64::new(0.0, 0.0)).unwrap();
        let g = builders::circle(Complex64::new(0.0, 0.0), 1.0, 2, 8192).unwrap();
        let part = build_partition(&f, &g).unwrap();
        let sys = boundary_interval_system(&f, &part).unwrap();
        assert_eq!(sys.endpoints.len(), 3);
        assert!((sys.endpoints[1] - 0.5).abs() < 1e-9);
        assert_eq!(sys.branches.len(), 4);
        assert_eq!(sys.incidence_matrix(), part.edge_matrix);
        let conj = qs_conjugacy(&sys, &sys).unwrap();
        assert!((qs_norm_estimate(&conj) - 1.0).abs() < 1e-9);
    }
}
