use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use kirchhoff_core::csvio;
use tempfile::TempDir;

fn kirchhoff(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kirchhoff"))
        .args(args)
        .env_remove("KIRCHHOFF_SEED")
        .output()
        .unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, text).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn three_node(dir: &TempDir) -> (PathBuf, PathBuf) {
    let g = write(dir, "g.csv", "i,j,w\n0,1,0.1\n0,2,0.15\n1,2,0.25\n");
    let f = write(dir, "f.csv", "i,value\n0,1\n1,2\n2,3\n");
    (g, f)
}

#[test]
fn graph_evolve_writes_full_trace() {
    let dir = TempDir::new().unwrap();
    let (g, f) = three_node(&dir);
    let out = dir.path().join("trace.csv");
    let o = kirchhoff(&[
        "graph",
        "evolve",
        "--graph",
        s(&g),
        "--initial",
        s(&f),
        "--times",
        "linspace:0,10,21",
        "--out",
        s(&out),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert!(o.stdout.is_empty());
    let (times, snaps) = csvio::read_trace(fs::File::open(&out).unwrap()).unwrap();
    assert_eq!(times.len(), 21);
    assert_eq!(snaps.dim(), (21, 3));
    assert_eq!(snaps.row(0).to_vec(), vec![1.0, 2.0, 3.0]);
    let last = snaps.row(20);
    assert!(last.iter().all(|u| (u - 2.15).abs() < 1e-3));
}

#[test]
fn graph_steady_and_kirchhoff() {
    let dir = TempDir::new().unwrap();
    let (g, _) = three_node(&dir);
    let out = dir.path().join("m.csv");
    let o = kirchhoff(&["graph", "steady", "--graph", s(&g), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0));
    let m = csvio::read_vector(fs::File::open(&out).unwrap()).unwrap();
    for (a, b) in m.iter().zip([0.25, 0.35, 0.40]) {
        assert!((a - b).abs() <= 1e-10);
    }

    let phi = write(
        &dir,
        "phi.csv",
        "0,1,1\n0,2,1\n1,0,1\n1,2,1\n2,0,1\n2,1,1\n",
    );
    let psi_out = dir.path().join("psi.csv");
    let o = kirchhoff(&[
        "graph",
        "kirchhoff",
        "--graph",
        s(&g),
        "--phi",
        s(&phi),
        "--out",
        s(&psi_out),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let psi = csvio::read_vector(fs::File::open(&psi_out).unwrap()).unwrap();
    assert!(psi.iter().all(|v| (v - 1.0).abs() <= 1e-15));
}

#[test]
fn graph_validate_passes_and_periodic_graph_fails() {
    let dir = TempDir::new().unwrap();
    let (g, _) = three_node(&dir);
    let out = dir.path().join("report.csv");
    let o = kirchhoff(&["graph", "validate", "--graph", s(&g), "--out", s(&out)]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        fs::read_to_string(&out).unwrap()
    );
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("check,pass,measured,tolerance\n"));
    assert!(text.ends_with("overall,true,,\n"));

    let pair = write(&dir, "pair.csv", "0,1,0.5\n");
    let o = kirchhoff(&["graph", "validate", "--graph", s(&pair), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(fs::read_to_string(&out)
        .unwrap()
        .contains("regular_chain,false"));
    let o = kirchhoff(&["graph", "steady", "--graph", s(&pair), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn input_errors_exit_two_with_line_numbers() {
    let dir = TempDir::new().unwrap();
    let bad = write(&dir, "bad.csv", "i,j,w\n0,1,0.5\n1,x,0.5\n");
    let out = dir.path().join("o.csv");
    let o = kirchhoff(&["graph", "steady", "--graph", s(&bad), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 3"), "{err}");

    let unnormalized = write(&dir, "u.csv", "0,1,1\n1,2,1\n0,2,1\n");
    let o = kirchhoff(&[
        "graph",
        "steady",
        "--graph",
        s(&unnormalized),
        "--out",
        s(&out),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let o = kirchhoff(&[
        "graph",
        "steady",
        "--graph",
        s(&unnormalized),
        "--normalize",
        "--out",
        s(&out),
    ]);
    assert_eq!(o.status.code(), Some(0));

    let o = kirchhoff(&[
        "graph",
        "evolve",
        "--graph",
        s(&unnormalized),
        "--times",
        "1,-2",
        "--out",
        s(&out),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let o = kirchhoff(&[
        "graph",
        "steady",
        "--graph",
        s(&dir.path().join("missing.csv")),
        "--out",
        s(&out),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn dyadic_commands() {
    let dir = TempDir::new().unwrap();
    let alpha = write(&dir, "a.csv", "j,alpha\n0,0.5\n1,0.25\n2,0.25\n");
    let out = dir.path().join("report.csv");
    let o = kirchhoff(&["dyadic", "validate", "--alpha", s(&alpha), "--out", s(&out)]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        fs::read_to_string(&out).unwrap()
    );
    let report = fs::read_to_string(&out).unwrap();
    for name in [
        "absolutely_summable",
        "partial_sums_nonnegative",
        "unit_mass",
        "column_integrals",
        "row_integrals",
    ] {
        assert!(report.contains(&format!("{name},true")), "{report}");
    }

    let negative = write(&dir, "neg.csv", "0,-1\n1,2\n");
    let o = kirchhoff(&[
        "dyadic",
        "validate",
        "--alpha",
        s(&negative),
        "--out",
        s(&out),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(fs::read_to_string(&out)
        .unwrap()
        .contains("partial_sums_nonnegative,false"));

    let trace = dir.path().join("trace.csv");
    let o = kirchhoff(&[
        "dyadic",
        "evolve",
        "--alpha",
        s(&alpha),
        "--fn",
        "x^2",
        "--resolution",
        "4",
        "--times",
        "0,1,60",
        "--out",
        s(&trace),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let (times, snaps) = csvio::read_trace(fs::File::open(&trace).unwrap()).unwrap();
    assert_eq!(times, vec![0.0, 1.0, 60.0]);
    let mean = snaps.row(0).mean().unwrap();
    assert!(snaps.row(2).iter().all(|u| (u - mean).abs() <= 1e-10));

    let grid = write(&dir, "grid.csv", "0,1\n1,0\n1,0\n");
    let o = kirchhoff(&[
        "dyadic",
        "steady",
        "--alpha",
        s(&alpha),
        "--initial",
        s(&grid),
        "--out",
        s(&trace),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn transport_evolve_with_table_and_sidecar() {
    let dir = TempDir::new().unwrap();
    let table: String = (0..=20)
        .map(|i| format!("{},{}\n", i as f64 / 20.0, (i * i) as f64 / 400.0))
        .collect();
    let f = write(&dir, "f.csv", &format!("x,value\n{table}"));
    let out = dir.path().join("trace.csv");
    let arg = format!("table:{}", s(&f));
    let o = kirchhoff(&[
        "transport",
        "evolve",
        "--map",
        "cantor",
        "--fn",
        &arg,
        "--times",
        "0,1,5,50",
        "--out",
        s(&out),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let (times, snaps) = csvio::read_trace(fs::File::open(&out).unwrap()).unwrap();
    assert_eq!(times.len(), 4);
    assert_eq!(snaps.ncols(), 101);
    let xs = csvio::read_vector(fs::File::open(dir.path().join("trace.x.csv")).unwrap()).unwrap();
    assert_eq!(xs.len(), 101);
    assert_eq!((xs[0], xs[100]), (0.0, 1.0));
}

#[test]
fn transport_negation_validate_and_steady() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("r.csv");
    let o = kirchhoff(&[
        "transport",
        "validate",
        "--map",
        "negation",
        "--fn",
        "x+x^2",
        "--out",
        s(&out),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        fs::read_to_string(&out).unwrap()
    );
    assert!(fs::read_to_string(&out)
        .unwrap()
        .contains("negation_closed_form,true"));

    let o = kirchhoff(&[
        "transport",
        "steady",
        "--map",
        "negation",
        "--fn",
        "x",
        "--max-iter",
        "100",
        "--out",
        s(&out),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let o = kirchhoff(&[
        "transport",
        "steady",
        "--map",
        "cantor",
        "--fn",
        "x^2",
        "--grid",
        "0.4,0.5,0.6",
        "--out",
        s(&out),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v = csvio::read_vector(fs::File::open(&out).unwrap()).unwrap();
    assert_eq!(v.to_vec(), vec![0.25; 3]);
}

#[test]
fn transport_kirchhoff_variants() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("k.csv");
    let o = kirchhoff(&[
        "transport",
        "kirchhoff",
        "--map",
        "negation",
        "--fn",
        "x",
        "--grid",
        "linspace:-0.5,0.5,5",
        "--out",
        s(&out),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v = csvio::read_vector(fs::File::open(&out).unwrap()).unwrap();
    assert_eq!(v.to_vec(), vec![1.0, 0.5, 0.0, -0.5, -1.0]);
    let o = kirchhoff(&[
        "transport",
        "kirchhoff",
        "--map",
        "negation",
        "--phi-kind",
        "displacement",
        "--grid",
        "linspace:-0.5,0.5,5",
        "--out",
        s(&out),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let map = write(&dir, "map.csv", "x,Tx\n0,0.5\n1,2\n");
    let arg = format!("table:{}", s(&map));
    let o = kirchhoff(&[
        "transport",
        "kirchhoff",
        "--map",
        &arg,
        "--phi-kind",
        "displacement",
        "--out",
        s(&out),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn coupling_commands_and_seed() {
    let dir = TempDir::new().unwrap();
    let c = write(
        &dir,
        "c.csv",
        "0,0,0.1\n0,1,0.2\n1,0,0.2\n1,1,0.1\n1,2,0.1\n2,1,0.1\n2,2,0.2\n",
    );
    let out = dir.path().join("r.csv");
    let o = kirchhoff(&[
        "coupling",
        "validate",
        "--coupling",
        s(&c),
        "--out",
        s(&out),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        fs::read_to_string(&out).unwrap()
    );
    let default = fs::read(&out).unwrap();
    let seeded = Command::new(env!("CARGO_BIN_EXE_kirchhoff"))
        .args([
            "coupling",
            "validate",
            "--coupling",
            s(&c),
            "--out",
            s(&out),
        ])
        .env("KIRCHHOFF_SEED", "42")
        .output()
        .unwrap();
    assert_eq!(seeded.status.code(), Some(0));
    assert_ne!(fs::read(&out).unwrap(), default);
    let bad_seed = Command::new(env!("CARGO_BIN_EXE_kirchhoff"))
        .args([
            "coupling",
            "validate",
            "--coupling",
            s(&c),
            "--out",
            s(&out),
        ])
        .env("KIRCHHOFF_SEED", "abc")
        .output()
        .unwrap();
    assert_eq!(bad_seed.status.code(), Some(2));

    let f = write(&dir, "f.csv", "0,1\n1,0\n2,-1\n");
    let o = kirchhoff(&[
        "coupling",
        "evolve",
        "--coupling",
        s(&c),
        "--initial",
        s(&f),
        "--times",
        "0.5,2",
        "--out",
        s(&out),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let o = kirchhoff(&["coupling", "steady", "--coupling", s(&c), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0));
    let m = csvio::read_vector(fs::File::open(&out).unwrap()).unwrap();
    for (a, b) in m.iter().zip([0.3, 0.4, 0.3]) {
        assert!((a - b).abs() <= 1e-9);
    }
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let dir = TempDir::new().unwrap();
    let (g, f) = three_node(&dir);
    let runs: Vec<Vec<u8>> = (0..2)
        .map(|i| {
            let out = dir.path().join(format!("t{i}.csv"));
            let o = kirchhoff(&[
                "graph",
                "evolve",
                "--graph",
                s(&g),
                "--initial",
                s(&f),
                "--times",
                "0.3,1,7",
                "--out",
                s(&out),
            ]);
            assert_eq!(o.status.code(), Some(0));
            fs::read(&out).unwrap()
        })
        .collect();
    assert_eq!(runs[0], runs[1]);

    let reports: Vec<Vec<u8>> = (0..2)
        .map(|i| {
            let out = dir.path().join(format!("r{i}.csv"));
            kirchhoff(&[
                "transport",
                "validate",
                "--map",
                "cantor",
                "--fn",
                "x^2",
                "--out",
                s(&out),
            ]);
            fs::read(&out).unwrap()
        })
        .collect();
    assert_eq!(reports[0], reports[1]);
}
