//! End-to-end runs of the binary: exit codes, file round trips, and
//! deterministic outputs.

use num_complex::Complex64;
use sphere_markov::embedded_graph::builders;
use sphere_markov::numerics::RationalMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_sphere-markov"));
    cmd.env_remove("SPHERE_MARKOV_PROFILE");
    cmd
}

fn write_squaring_map(dir: &Path) -> PathBuf {
    let path = dir.join("z2.map");
    let f = RationalMap::monic_plus_c(2, Complex64::new(0.0, 0.0)).unwrap();
    std::fs::write(&path, f.serialize()).unwrap();
    path
}

fn write_circle_graph(dir: &Path, center: Complex64, r: f64, name: &str) -> PathBuf {
    let path = dir.join(name);
    let g = builders::circle(center, r, 4, 512)
        .unwrap()
        .resampled(1e-2)
        .unwrap();
    std::fs::write(&path, g.serialize()).unwrap();
    path
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("process exited")
}

#[test]
fn partition_of_the_unit_circle_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let map = write_squaring_map(dir.path());
    let graph = write_circle_graph(dir.path(), Complex64::new(0.0, 0.0), 1.0, "circle.graph");
    let out_path = dir.path().join("partition.txt");
    let out = bin()
        .args(["partition", "--map"])
        .arg(&map)
        .arg("--graph")
        .arg(&graph)
        .arg("--out")
        .arg(&out_path)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report = std::fs::read_to_string(&out_path).unwrap();
    assert!(report.contains("pieces 2"), "{report}");
    assert!(report.contains("entropy"), "{report}");
}

#[test]
fn missing_input_file_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["partition", "--map", "does-not-exist.map", "--graph"])
        .arg(dir.path().join("nope.graph"))
        .arg("--out")
        .arg(dir.path().join("out.txt"))
        .output()
        .unwrap();
    assert_eq!(code(&out), 3);
}

#[test]
fn small_circle_seed_fails_to_converge_with_exit_2() {
    // A short loop around z = 1 is not isotopic to any invariant
    // graph of the squaring map; refinement must give up.
    let dir = tempfile::tempdir().unwrap();
    let map = write_squaring_map(dir.path());
    let graph = write_circle_graph(dir.path(), Complex64::new(1.0, 0.0), 0.1, "small.graph");
    let out = bin()
        .args(["invariant", "--map"])
        .arg(&map)
        .arg("--graph")
        .arg(&graph)
        .arg("--out")
        .arg(dir.path().join("out.graph"))
        .output()
        .unwrap();
    assert_eq!(code(&out), 2, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn edge_through_a_critical_value_exits_4() {
    // The circle through 0 hits a critical value of z^2; its lift is
    // rejected.
    let dir = tempfile::tempdir().unwrap();
    let map = write_squaring_map(dir.path());
    let graph = write_circle_graph(dir.path(), Complex64::new(0.5, 0.0), 0.5, "through.graph");
    let out = bin()
        .args(["preimage", "--map"])
        .arg(&map)
        .arg("--graph")
        .arg(&graph)
        .arg("--out")
        .arg(dir.path().join("out.graph"))
        .output()
        .unwrap();
    assert_eq!(code(&out), 4, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn itinerary_prints_the_inner_piece() {
    let dir = tempfile::tempdir().unwrap();
    let map = write_squaring_map(dir.path());
    let graph = write_circle_graph(dir.path(), Complex64::new(0.0, 0.0), 1.0, "circle.graph");
    let out = bin()
        .args(["itinerary", "--map"])
        .arg(&map)
        .arg("--graph")
        .arg(&graph)
        .args(["--point", "0.5 0", "--depth", "6"])
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let symbols: Vec<&str> = std::str::from_utf8(&out.stdout)
        .unwrap()
        .split_whitespace()
        .collect();
    assert_eq!(symbols.len(), 6);
    // 0.5 stays inside the unit disc under squaring: one symbol.
    assert_eq!(symbols.iter().collect::<std::collections::HashSet<_>>().len(), 1);
}

#[test]
fn scan_report_is_deterministic_and_parses() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| -> String {
        let out_path = dir.path().join(name);
        let out = bin()
            .env("SPHERE_MARKOV_PROFILE", "fast")
            .args([
                "scan",
                "--family",
                "quadratic",
                "--grid",
                "2x2",
                "--rect",
                "-0.05 -0.05 0.05 0.05",
                "--depth",
                "1",
            ])
            .arg("--out")
            .arg(&out_path)
            .output()
            .unwrap();
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        std::fs::read_to_string(&out_path).unwrap()
    };
    let first = run("scan1.txt");
    let second = run("scan2.txt");
    assert_eq!(first, second);
    assert!(first.starts_with("scan 2 2 1\n"), "{first}");
    assert_eq!(first.matches(" ok ").count(), 4, "{first}");
}

#[test]
fn unknown_profile_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let map = write_squaring_map(dir.path());
    let graph = write_circle_graph(dir.path(), Complex64::new(0.0, 0.0), 1.0, "circle.graph");
    let out = bin()
        .env("SPHERE_MARKOV_PROFILE", "sloppy")
        .args(["preimage", "--map"])
        .arg(&map)
        .arg("--graph")
        .arg(&graph)
        .arg("--out")
        .arg(dir.path().join("out.graph"))
        .output()
        .unwrap();
    assert_eq!(code(&out), 3);
}

#[test]
fn render_graph_is_deterministic_svg() {
    let dir = tempfile::tempdir().unwrap();
    let graph = write_circle_graph(dir.path(), Complex64::new(0.0, 0.0), 1.0, "circle.graph");
    let render = |name: &str| -> String {
        let out_path = dir.path().join(name);
        let out = bin()
            .args(["render", "--graph"])
            .arg(&graph)
            .arg("--out")
            .arg(&out_path)
            .output()
            .unwrap();
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        std::fs::read_to_string(&out_path).unwrap()
    };
    let first = render("a.svg");
    assert_eq!(first, render("b.svg"));
    assert!(first.starts_with("<svg "));
    assert_eq!(first.matches("<path ").count(), 4, "one path per edge");
}

#[test]
fn pole_on_the_graph_exits_4() {
    // The unit circle passes through z = 1, the +x projection pole.
    let dir = tempfile::tempdir().unwrap();
    let graph = write_circle_graph(dir.path(), Complex64::new(0.0, 0.0), 1.0, "circle.graph");
    let out = bin()
        .args(["render", "--graph"])
        .arg(&graph)
        .args(["--pole", "+x"])
        .arg("--out")
        .arg(dir.path().join("out.svg"))
        .output()
        .unwrap();
    assert_eq!(code(&out), 4, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn render_scan_colors_nodes() {
    let dir = tempfile::tempdir().unwrap();
    let report = "scan 2 1 1\n-0.1 0 ok F1\n0.1 0 fail left-existence-set\n";
    let scan_path = dir.path().join("scan.txt");
    std::fs::write(&scan_path, report).unwrap();
    let out_path = dir.path().join("scan.svg");
    let out = bin()
        .args(["render", "--scan"])
        .arg(&scan_path)
        .arg("--out")
        .arg(&out_path)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let svg = std::fs::read_to_string(&out_path).unwrap();
    assert_eq!(svg.matches("<rect ").count(), 2);
    assert!(svg.contains("#444444"), "failed node is gray: {svg}");
}
