//! Command-line driver: file plumbing around the library plus SVG
//! rendering. Every library error class maps to one documented exit
//! code so batch scripts can branch on failures.

mod render;

use clap::{Parser, Subcommand};
use num_complex::Complex64;
use sphere_markov::embedded_graph::EmbeddedGraph;
use sphere_markov::invariant_graph::{refine_to_invariant, IterationConfig};
use sphere_markov::markov::{build_partition, entropy, expanding_lengths, itinerary, usize_matrix};
use sphere_markov::numerics::{RationalMap, SpherePoint};
use sphere_markov::param_space::{scan_grid, FamilySpec, ScanConfig, ScanReport};
use sphere_markov::regularity::{qs_conjugacy, qs_norm_estimate, IntervalSystem};
use sphere_markov::{Error, Result};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const PROFILE_HELP: &str = "\
Environment:
  SPHERE_MARKOV_PROFILE=strict|fast
      Default tolerance profile. `strict` (the default) refines to
      residual 1e-6 at sampling step 1e-3; `fast` stops at 5e-3 with
      step 5e-3. Explicit flags override the profile.

Exit codes:
  0  success
  2  convergence failure (non-convergence, routing failure, too-coarse
     neighbourhood, left existence set, resource limit, unreachable
     depth, root finding)
  3  invalid input (bad arguments, unreadable or malformed files,
     mismatched interval systems)
  4  geometric degeneracy (critical value on an edge, infinite
     intersection, indeterminate form, non-invariant graph, Markov or
     embedding violations, reducible matrix, projection pole on the
     graph)";

#[derive(Parser)]
#[command(
    name = "sphere-markov",
    about = "Markov partitions of the Riemann sphere from invariant graphs",
    after_help = PROFILE_HELP
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Pull a graph back through a rational map.
    Preimage {
        /// Rational map file.
        #[arg(long)]
        map: PathBuf,
        /// Graph file.
        #[arg(long)]
        graph: PathBuf,
        /// Number of preimage iterations.
        #[arg(long, default_value_t = 1)]
        depth: usize,
        /// Output graph file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Refine a seed graph to an invariant graph.
    Invariant {
        #[arg(long)]
        map: PathBuf,
        /// Seed graph file.
        #[arg(long)]
        graph: PathBuf,
        /// Pullback depth per refinement step.
        #[arg(long = "N", default_value_t = 1)]
        n: usize,
        /// Target invariance residual (overrides the profile).
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        out: PathBuf,
        /// Residual history file.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Verify the Markov property and report transition data.
    Partition {
        #[arg(long)]
        map: PathBuf,
        /// Invariant graph file.
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Face itinerary of a point under the map.
    Itinerary {
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        graph: PathBuf,
        /// Point as `re im`.
        #[arg(long, allow_hyphen_values = true)]
        point: String,
        #[arg(long, default_value_t = 12)]
        depth: usize,
    },
    /// Quasi-symmetric conjugacy between two interval systems.
    Conjugacy {
        #[arg(long)]
        sys1: PathBuf,
        #[arg(long)]
        sys2: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Scan a parameter grid and classify each node's cell.
    Scan {
        /// Family name; `quadratic` (z^2 + c) is built in.
        #[arg(long)]
        family: String,
        /// Grid resolution `WxH`.
        #[arg(long)]
        grid: String,
        /// Rectangle `x0 y0 x1 y1`.
        #[arg(long, allow_hyphen_values = true)]
        rect: String,
        /// Address depth per node.
        #[arg(long, default_value_t = 1)]
        depth: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render a graph or a scan report as SVG.
    Render {
        #[arg(long)]
        graph: Option<PathBuf>,
        #[arg(long)]
        scan: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Projection pole `+z`, `-z`, `+x`, `-x`, `+y` or `-y`;
        /// without it the poles are tried in that order.
        #[arg(long)]
        pole: Option<String>,
        /// Image size in pixels.
        #[arg(long, default_value_t = 800)]
        size: u32,
        /// Fill graph faces by id hue.
        #[arg(long, default_value_t = false)]
        fill: bool,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::NonConvergence { .. }
        | Error::RootFindingFailure(..)
        | Error::RoutingFailure(..)
        | Error::NeighbourhoodTooCoarse(..)
        | Error::LeftExistenceSet { .. }
        | Error::ResourceLimit(..)
        | Error::DepthUnreachable { .. } => 2,
        Error::InvalidInput(..)
        | Error::Parse(..)
        | Error::Io(..)
        | Error::IncidenceMismatch(..) => 3,
        _ => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// Tolerance profile from the environment; flags override the result.
fn profile_config() -> Result<IterationConfig> {
    match std::env::var("SPHERE_MARKOV_PROFILE") {
        Ok(profile) => match profile.as_str() {
            "strict" => Ok(IterationConfig::default()),
            "fast" => Ok(IterationConfig {
                eps_invariant: 5e-3,
                sample_step: 5e-3,
                ..IterationConfig::default()
            }),
            other => Err(Error::InvalidInput(format!(
                "unknown profile `{other}` (use strict or fast)"
            ))),
        },
        Err(_) => Ok(IterationConfig::default()),
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(Error::Io)
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(Error::Io)
}

fn read_map(path: &Path) -> Result<RationalMap> {
    RationalMap::parse(&read(path)?)
}

fn read_graph(path: &Path) -> Result<EmbeddedGraph> {
    EmbeddedGraph::parse(&read(path)?)
}

fn run(cmd: Cmd) -> Result<()> {
    match cmd {
        Cmd::Preimage {
            map,
            graph,
            depth,
            out,
        } => {
            let f = read_map(&map)?;
            let g = read_graph(&graph)?;
            let cfg = profile_config()?;
            let result =
                sphere_markov::pullback::iterated_preimage(&f, &g, depth, cfg.edge_cap)?;
            write(&out, &result.serialize())
        }
        Cmd::Invariant {
            map,
            graph,
            n,
            tol,
            out,
            report,
        } => {
            let f = read_map(&map)?;
            let g = read_graph(&graph)?;
            let mut cfg = profile_config()?;
            cfg.pullback_depth = n.max(1);
            if let Some(t) = tol {
                if !(t > 0.0) {
                    return Err(Error::InvalidInput("--tol must be positive".into()));
                }
                cfg.eps_invariant = t;
            }
            let refined = refine_to_invariant(&f, &g, &cfg)?;
            write(&out, &refined.graph.serialize())?;
            if let Some(path) = report {
                let mut text = format!("iterations {}\n", refined.iterations);
                for (i, r) in refined.residuals.iter().enumerate() {
                    let _ = writeln!(text, "residual {i} {r:e}");
                }
                write(&path, &text)?;
            }
            Ok(())
        }
        Cmd::Partition { map, graph, out } => {
            let f = read_map(&map)?;
            let g = read_graph(&graph)?;
            let partition = build_partition(&f, &g)?;
            let edge = usize_matrix(&partition.edge_matrix);
            let perron = expanding_lengths(&edge)?;
            let h = entropy(&edge)?;
            let mut text = String::new();
            let _ = writeln!(text, "pieces {}", partition.face_matrix.len());
            let _ = writeln!(text, "edges {}", partition.edge_matrix.len());
            let _ = writeln!(text, "face-matrix");
            for row in &partition.face_matrix {
                let cells: Vec<String> = row.iter().map(|x| x.to_string()).collect();
                let _ = writeln!(text, "{}", cells.join(" "));
            }
            let _ = writeln!(text, "edge-matrix");
            for row in &partition.edge_matrix {
                let cells: Vec<String> = row.iter().map(|x| x.to_string()).collect();
                let _ = writeln!(text, "{}", cells.join(" "));
            }
            let _ = writeln!(text, "lambda {:e}", perron.lambda);
            let _ = writeln!(text, "entropy {h:e}");
            let lengths: Vec<String> = perron.vector.iter().map(|x| format!("{x:e}")).collect();
            let _ = writeln!(text, "expanding-lengths {}", lengths.join(" "));
            write(&out, &text)
        }
        Cmd::Itinerary {
            map,
            graph,
            point,
            depth,
        } => {
            let f = read_map(&map)?;
            let g = read_graph(&graph)?;
            let parts: Vec<&str> = point.split_whitespace().collect();
            if parts.len() != 2 {
                return Err(Error::InvalidInput("--point needs `re im`".into()));
            }
            let re: f64 = parts[0]
                .parse()
                .map_err(|_| Error::InvalidInput("bad point coordinate".into()))?;
            let im: f64 = parts[1]
                .parse()
                .map_err(|_| Error::InvalidInput("bad point coordinate".into()))?;
            let z = SpherePoint::from_complex(Complex64::new(re, im));
            let symbols = itinerary(&f, &g, &z, depth)?;
            let words: Vec<String> = symbols.iter().map(|s| s.to_string()).collect();
            println!("{}", words.join(" "));
            Ok(())
        }
        Cmd::Conjugacy { sys1, sys2, out } => {
            let a = IntervalSystem::parse(&read(&sys1)?)?;
            let b = IntervalSystem::parse(&read(&sys2)?)?;
            let conj = qs_conjugacy(&a, &b)?;
            let norm = qs_norm_estimate(&conj);
            let mut text = String::new();
            let _ = writeln!(text, "residual {:e}", conj.residual);
            let _ = writeln!(text, "iterations {}", conj.iterations);
            let _ = writeln!(text, "qs-norm {norm:e}");
            // Down-sampled transfer table, enough to plot.
            let stride = (conj.grid.len() / 32).max(1);
            for (x, y) in conj
                .grid
                .iter()
                .zip(conj.values.iter())
                .step_by(stride)
            {
                let _ = writeln!(text, "phi {x:e} {y:e}");
            }
            write(&out, &text)
        }
        Cmd::Scan {
            family,
            grid,
            rect,
            depth,
            out,
        } => {
            let iteration = profile_config()?;
            let fam = match family.as_str() {
                "quadratic" => FamilySpec::quadratic(iteration.sample_step)?,
                other => {
                    return Err(Error::InvalidInput(format!(
                        "unknown family `{other}` (built in: quadratic)"
                    )))
                }
            };
            let (nx, ny) = parse_grid(&grid)?;
            let r: Vec<f64> = rect
                .split_whitespace()
                .map(|t| {
                    t.parse::<f64>()
                        .map_err(|_| Error::InvalidInput("bad rect coordinate".into()))
                })
                .collect::<Result<_>>()?;
            if r.len() != 4 {
                return Err(Error::InvalidInput("--rect needs `x0 y0 x1 y1`".into()));
            }
            let cfg = ScanConfig {
                rect: (r[0], r[1], r[2], r[3]),
                nx,
                ny,
                depth,
                iteration,
            };
            let report = scan_grid(&fam, &cfg)?;
            write(&out, &report.serialize())
        }
        Cmd::Render {
            graph,
            scan,
            out,
            pole,
            size,
            fill,
        } => {
            let svg = match (&graph, &scan) {
                (Some(path), None) => {
                    let g = read_graph(path)?;
                    render::graph_svg(&g, pole.as_deref(), size, fill)?
                }
                (None, Some(path)) => {
                    let report = ScanReport::parse(&read(path)?)?;
                    render::scan_svg(&report, size)
                }
                _ => {
                    return Err(Error::InvalidInput(
                        "render needs exactly one of --graph or --scan".into(),
                    ))
                }
            };
            write(&out, &svg)
        }
    }
}

fn parse_grid(text: &str) -> Result<(usize, usize)> {
    let (w, h) = text
        .split_once('x')
        .ok_or_else(|| Error::InvalidInput("--grid needs `WxH`".into()))?;
    let nx: usize = w
        .parse()
        .map_err(|_| Error::InvalidInput("bad grid width".into()))?;
    let ny: usize = h
        .parse()
        .map_err(|_| Error::InvalidInput("bad grid height".into()))?;
    if nx == 0 || ny == 0 {
        return Err(Error::InvalidInput("grid must be at least 1x1".into()));
    }
    Ok((nx, ny))
}
