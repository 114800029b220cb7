//! End-to-end checks of the CLI surface and the on-disk formats.

use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_borsuk"))
}

#[test]
fn generate_writes_all_formats_and_they_reload() {
    let dir = tempfile::tempdir().unwrap();
    let status = bin()
        .args([
            "--seed",
            "7",
            "--out",
            dir.path().to_str().unwrap(),
            "generate",
            "-d",
            "2",
            "-n",
            "200",
            "--alpha",
            "0.5",
            "--formats",
            "points-jsonl,points-bin,graph-json,graph-bin",
        ])
        .status()
        .unwrap();
    assert!(status.success());
    let jsonl = borsuk::io::read_points_jsonl(dir.path().join("points.jsonl")).unwrap();
    let binary = borsuk::io::read_points_binary(dir.path().join("points.bin")).unwrap();
    assert_eq!(jsonl, binary);
    assert_eq!(jsonl.len(), 200);
    let export = borsuk::io::read_graph_json(dir.path().join("graph.json")).unwrap();
    let (n, edges) = borsuk::io::read_edges_binary(dir.path().join("graph.edges")).unwrap();
    assert_eq!(n as usize, export.n);
    assert_eq!(edges, export.edges);
    // The export must equal a fresh build from the same seed.
    let g = borsuk::graph::build_graph(jsonl, 0.5).unwrap();
    assert_eq!(
        borsuk::io::GraphExport::from_graph(&g, Some(7)).edges,
        export.edges
    );
}

#[test]
fn color_consumes_generated_graph() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert!(bin()
        .args([
            "--seed", "11", "--out", out, "generate", "-d", "2", "-n", "40", "--alpha", "1.3",
            "--formats", "graph-json",
        ])
        .status()
        .unwrap()
        .success());
    let output = bin()
        .args([
            "--seed",
            "11",
            "--out",
            out,
            "color",
            "--input",
            dir.path().join("graph.json").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(output.status.success());
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("chromatic number"), "stdout: {stdout}");
}

#[test]
fn sweep_exit_code_3_when_not_bracketed() {
    let dir = tempfile::tempdir().unwrap();
    let status = bin()
        .args([
            "--out",
            dir.path().to_str().unwrap(),
            "--trials",
            "10",
            "sweep",
            "--n-list",
            "300",
            "--c-list",
            "0.2,0.25",
        ])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(3));
}

#[test]
fn verify_subcommand_passes() {
    let dir = tempfile::tempdir().unwrap();
    let output = bin()
        .args(["--out", dir.path().to_str().unwrap(), "verify", "--quick"])
        .output()
        .unwrap();
    assert!(output.status.success());
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(!stdout.contains("FAIL"), "stdout: {stdout}");
}

#[test]
fn config_file_supplies_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("cfg.json");
    let out_dir = dir.path().join("from_config");
    std::fs::write(
        &cfg_path,
        format!(
            "{{\"seed\": 99, \"trials\": 5, \"out\": \"{}\"}}",
            out_dir.display()
        ),
    )
    .unwrap();
    assert!(bin()
        .args([
            "--config",
            cfg_path.to_str().unwrap(),
            "generate",
            "-n",
            "10",
            "--formats",
            "points-jsonl",
        ])
        .status()
        .unwrap()
        .success());
    assert!(out_dir.join("points.jsonl").exists());
}

#[test]
fn edge_csv_is_identical_across_thread_flags() {
    let dir1 = tempfile::tempdir().unwrap();
    let dir2 = tempfile::tempdir().unwrap();
    for (dir, threads) in [(&dir1, "1"), (&dir2, "3")] {
        assert!(bin()
            .args([
                "--seed",
                "5",
                "--trials",
                "300",
                "--threads",
                threads,
                "--out",
                dir.path().to_str().unwrap(),
                "edges",
                "--n-list",
                "500",
                "--nu",
                "6",
            ])
            .status()
            .unwrap()
            .success());
    }
    let a = std::fs::read(dir1.path().join("edge_counts.csv")).unwrap();
    let b = std::fs::read(dir2.path().join("edge_counts.csv")).unwrap();
    assert_eq!(a, b);
}
