//! Command-line interface: experiment drivers, file emission and the quick
//! self-check battery.

use crate::abperc::{self, PercModel};
use crate::color::{self, ChromaticResult};
use crate::embed;
use crate::experiments;
use crate::geom;
use crate::graph;
use crate::io;
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use std::path::PathBuf;

/// Exit codes: 0 ok, 2 config error, 3 transition not bracketed,
/// 4 all trials censored.
pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NOT_BRACKETED: i32 = 3;
pub const EXIT_ALL_CENSORED: i32 = 4;

#[derive(Parser, Debug)]
#[command(
    name = "borsuk",
    about = "Random Borsuk graph and continuum AB percolation lab",
    version
)]
pub struct Cli {
    /// Master seed for all randomness.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Trials per sweep cell.
    #[arg(long, global = true, default_value_t = 200)]
    pub trials: u64,
    /// Output directory (created if missing).
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads (0 = library default, 1 = sequential).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// JSON config file; explicit flags override its fields.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Sample sphere points and optionally the graph, writing the chosen
    /// formats.
    Generate(GenerateArgs),
    /// Color a graph: greedy and exact bounds, optional cover certificate.
    Color(ColorArgs),
    /// Continuum AB / Boolean / bond percolation experiments.
    Percolate(PercolateArgs),
    /// Threshold sweep of P(chi > k) at alpha = c n^{-1/d}.
    Sweep(SweepArgs),
    /// Edge-count limit law and pair-connection probability.
    Edges(EdgesArgs),
    /// Build and verify the bad-patch-avoiding embedding.
    Embed(EmbedArgs),
    /// Run the quick self-check battery.
    Verify(VerifyArgs),
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    #[arg(short, long, default_value_t = 2)]
    pub d: usize,
    #[arg(short, long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 0.3)]
    pub alpha: f64,
    /// Emit formats: any of points-jsonl, points-bin, graph-json,
    /// graph-bin.
    #[arg(long, value_delimiter = ',', default_value = "points-jsonl,graph-json")]
    pub formats: Vec<String>,
    /// Draw the vertex count as Poisson(n).
    #[arg(long, default_value_t = false)]
    pub poissonized: bool,
}

#[derive(Args, Debug)]
pub struct ColorArgs {
    /// Graph JSON produced by `generate` (otherwise a fresh instance is
    /// sampled from the flags below).
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(short, long, default_value_t = 2)]
    pub d: usize,
    #[arg(short, long, default_value_t = 60)]
    pub n: usize,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    /// Decide k-colorability for this k (in addition to the chromatic
    /// number search).
    #[arg(long)]
    pub k: Option<u32>,
    #[arg(long, default_value_t = color::DEFAULT_NODE_BUDGET)]
    pub budget: u64,
    /// Also evaluate the cap-cover certificate at this net spacing.
    #[arg(long)]
    pub beta: Option<f64>,
}

#[derive(Args, Debug)]
pub struct PercolateArgs {
    /// ab | boolean | bond
    #[arg(long, default_value = "ab")]
    pub model: String,
    #[arg(short, long, default_value_t = 2)]
    pub d: usize,
    /// Intensity grid for the lambda_c sweep.
    #[arg(long, value_delimiter = ',')]
    pub lambda_grid: Vec<f64>,
    /// Box half-widths for the sweep.
    #[arg(long, value_delimiter = ',', default_value = "10,15,20")]
    pub box_sizes: Vec<f64>,
    /// Subcritical decay: estimate reach probabilities over these box
    /// sizes at --lambda.
    #[arg(long, value_delimiter = ',')]
    pub decay_r: Vec<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    /// M_k statistic window (implies the M_k experiment).
    #[arg(long)]
    pub mk: Option<f64>,
    /// Bond model: box radius m.
    #[arg(long, default_value_t = 30)]
    pub m: usize,
    /// Bond model: open probability.
    #[arg(long, default_value_t = 0.99)]
    pub p: f64,
    /// Bond model: density defect epsilon.
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,
    /// Also report c2 = ((d+1) kappa_{d+1} lambda_c)^{1/d}.
    #[arg(long, default_value_t = true)]
    pub c2: bool,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[arg(short, long, default_value_t = 2)]
    pub d: usize,
    #[arg(short, long, default_value_t = 2)]
    pub k: u32,
    #[arg(long, value_delimiter = ',', default_value = "2000,8000")]
    pub n_list: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "2.0,2.8,3.3,3.8,4.3,5.0,6.0")]
    pub c_list: Vec<f64>,
    #[arg(long, default_value_t = color::DEFAULT_NODE_BUDGET)]
    pub budget: u64,
    /// Emit an SVG of the sweep curves.
    #[arg(long, default_value_t = false)]
    pub svg: bool,
}

#[derive(Args, Debug)]
pub struct EdgesArgs {
    #[arg(short, long, default_value_t = 2)]
    pub d: usize,
    #[arg(long, default_value_t = 8.0)]
    pub nu: f64,
    #[arg(long, value_delimiter = ',', default_value = "1000,4000")]
    pub n_list: Vec<usize>,
    /// Also run the pair-connection experiment on these alphas.
    #[arg(long, value_delimiter = ',')]
    pub pn_alphas: Vec<f64>,
    #[arg(long, default_value_t = 1_000_000)]
    pub pairs: u64,
}

#[derive(Args, Debug)]
pub struct EmbedArgs {
    #[arg(short, long, default_value_t = 2)]
    pub d: usize,
    #[arg(short, long, default_value_t = 100_000)]
    pub n: usize,
    #[arg(long, default_value_t = 0.05)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 420.0)]
    pub c: f64,
    /// Number of seeds to run; the success rate is reported.
    #[arg(long, default_value_t = 1)]
    pub seeds: u64,
    /// Build the induced lower-dimensional instance from the last accepted
    /// run and hand it to the coloring module.
    #[arg(long, default_value_t = false)]
    pub cross_check: bool,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Lighter probe counts.
    #[arg(long, default_value_t = false)]
    pub quick: bool,
}

/// Optional JSON config file: any present field becomes the default for the
/// matching flag.
#[derive(Debug, Default, Deserialize)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub trials: Option<u64>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
}

pub fn load_file_config(path: &PathBuf) -> Result<FileConfig, io::IoError> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

pub struct Ctx {
    pub seed: u64,
    pub trials: u64,
    pub out: PathBuf,
    pub threads: usize,
}

impl Ctx {
    pub fn from_cli(cli: &Cli) -> Result<Self, String> {
        let mut ctx = Ctx {
            seed: cli.seed,
            trials: cli.trials,
            out: cli.out.clone(),
            threads: cli.threads,
        };
        if let Some(path) = &cli.config {
            let file = load_file_config(path).map_err(|e| format!("config file: {e}"))?;
            // Flags that were explicitly provided win; clap does not expose
            // that cleanly for globals, so the file only fills fields still
            // at their defaults.
            if cli.seed == 1 {
                if let Some(s) = file.seed {
                    ctx.seed = s;
                }
            }
            if cli.trials == 200 {
                if let Some(t) = file.trials {
                    ctx.trials = t;
                }
            }
            if cli.threads == 0 {
                if let Some(t) = file.threads {
                    ctx.threads = t;
                }
            }
            if cli.out.as_os_str() == "out" {
                if let Some(o) = file.out {
                    ctx.out = o;
                }
            }
        }
        std::fs::create_dir_all(&ctx.out).map_err(|e| format!("output dir: {e}"))?;
        Ok(ctx)
    }
}

pub fn run(cli: Cli) -> i32 {
    let ctx = match Ctx::from_cli(&cli) {
        Ok(ctx) => ctx,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let result = match &cli.command {
        Command::Generate(args) => cmd_generate(&ctx, args),
        Command::Color(args) => cmd_color(&ctx, args),
        Command::Percolate(args) => cmd_percolate(&ctx, args),
        Command::Sweep(args) => cmd_sweep(&ctx, args),
        Command::Edges(args) => cmd_edges(&ctx, args),
        Command::Embed(args) => cmd_embed(&ctx, args),
        Command::Verify(args) => cmd_verify(&ctx, args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            classify_error(&e)
        }
    }
}

fn classify_error(msg: &str) -> i32 {
    if msg.contains("not bracketed") {
        EXIT_NOT_BRACKETED
    } else if msg.contains("censored") {
        EXIT_ALL_CENSORED
    } else {
        EXIT_CONFIG
    }
}

type CmdResult = Result<i32, String>;

fn stringify<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn cmd_generate(ctx: &Ctx, args: &GenerateArgs) -> CmdResult {
    let count = if args.poissonized {
        experiments::poissonize_seeded(args.n as f64, ctx.seed) as usize
    } else {
        args.n
    };
    let points = geom::sample_uniform(args.d, count, ctx.seed).map_err(stringify)?;
    for format in &args.formats {
        match format.as_str() {
            "points-jsonl" => {
                let path = ctx.out.join("points.jsonl");
                io::write_points_jsonl(&path, &points).map_err(stringify)?;
                println!("wrote {}", path.display());
            }
            "points-bin" => {
                let path = ctx.out.join("points.bin");
                io::write_points_binary(&path, &points).map_err(stringify)?;
                println!("wrote {}", path.display());
            }
            "graph-json" | "graph-bin" => {
                let g = graph::build_graph(points.clone(), args.alpha).map_err(stringify)?;
                let export = io::GraphExport::from_graph(&g, Some(ctx.seed));
                if format == "graph-json" {
                    let path = ctx.out.join("graph.json");
                    io::write_graph_json(&path, &export).map_err(stringify)?;
                    println!("wrote {} ({} edges)", path.display(), export.edges.len());
                } else {
                    let path = ctx.out.join("graph.edges");
                    io::write_edges_binary(&path, &export).map_err(stringify)?;
                    println!("wrote {}", path.display());
                }
            }
            other => return Err(format!("unknown format {other}")),
        }
    }
    Ok(EXIT_OK)
}

fn cmd_color(ctx: &Ctx, args: &ColorArgs) -> CmdResult {
    let g = if let Some(path) = &args.input {
        let export = io::read_graph_json(path).map_err(stringify)?;
        // Topology-only reload: coordinates are not stored in the export,
        // so resample deterministically when geometry is needed.
        let points = geom::sample_uniform(export.d, export.n, export.seed.unwrap_or(ctx.seed))
            .map_err(stringify)?;
        let g = graph::build_graph(points, export.alpha).map_err(stringify)?;
        if io::GraphExport::from_graph(&g, export.seed).edges != export.edges {
            return Err("input graph does not match its recorded seed".into());
        }
        g
    } else {
        let points = geom::sample_uniform(args.d, args.n, ctx.seed).map_err(stringify)?;
        graph::build_graph(points, args.alpha).map_err(stringify)?
    };
    let greedy = color::greedy_color(&g);
    println!("greedy palette: {}", greedy.palette);
    let (bip, witness) = graph::is_bipartite(&g);
    println!("bipartite: {bip}");
    if let Some(w) = &witness {
        io::write_json(ctx.out.join("odd_cycle.json"), &w.vertices).map_err(stringify)?;
        println!("odd cycle witness of length {} written", w.len());
    }
    match color::chromatic_number(&g, args.budget) {
        ChromaticResult::Exact(chi, coloring) => {
            println!("chromatic number: {chi}");
            io::write_json(ctx.out.join("coloring.json"), &coloring.colors).map_err(stringify)?;
        }
        ChromaticResult::Bounds { lo, hi } => {
            println!("chromatic number: unknown, bounds [{lo}, {hi}]");
        }
    }
    if let Some(k) = args.k {
        let decision = color::k_colorable(&g, k, args.budget).map_err(stringify)?;
        println!("{k}-colorable: {:?}", decision.decided());
    }
    if let Some(beta) = args.beta {
        let cert = color::cap_cover_certificate(&g, beta).map_err(stringify)?;
        println!(
            "cover certificate: valid={} (net {}, margin {:.4}, {} failures)",
            cert.valid,
            cert.net_size,
            cert.margin,
            cert.failures.len()
        );
        io::write_json(ctx.out.join("certificate.json"), &cert).map_err(stringify)?;
    }
    Ok(EXIT_OK)
}

fn cmd_percolate(ctx: &Ctx, args: &PercolateArgs) -> CmdResult {
    match args.model.as_str() {
        "bond" => {
            let w = abperc::bond_percolation_box(
                args.d, args.m, args.p, args.eps, ctx.trials, ctx.seed, ctx.threads,
            )
            .map_err(stringify)?;
            println!(
                "bond d={} m={} p={}: dense-cluster fraction {:.4} [{:.4}, {:.4}]",
                args.d, args.m, args.p, w.estimate, w.lo, w.hi
            );
            return Ok(EXIT_OK);
        }
        "ab" | "boolean" => {}
        other => return Err(format!("unknown percolation model {other}")),
    }
    let model = if args.model == "ab" {
        PercModel::Ab
    } else {
        PercModel::Boolean
    };
    if let Some(k) = args.mk {
        let lambda = args.lambda.ok_or("--mk needs --lambda")?;
        let w = abperc::m_k_statistic(args.d, lambda, k, ctx.trials, ctx.seed, ctx.threads)
            .map_err(stringify)?;
        println!(
            "P(M_k > 0) at lambda={lambda}, k={k}: {:.4} [{:.4}, {:.4}]",
            w.estimate, w.lo, w.hi
        );
        return Ok(EXIT_OK);
    }
    if !args.decay_r.is_empty() {
        let lambda = args.lambda.ok_or("--decay-r needs --lambda")?;
        let mut rows = Vec::new();
        println!("subcritical decay at lambda = {lambda}:");
        for &r in &args.decay_r {
            let w = abperc::boundary_reach_prob(args.d, lambda, r, ctx.trials, ctx.seed, ctx.threads)
                .map_err(stringify)?;
            println!("  R={r:5.1}: p = {:.6} [{:.6}, {:.6}]", w.estimate, w.lo, w.hi);
            rows.push((r, w));
        }
        let pts: Vec<(f64, f64)> = rows
            .iter()
            .filter(|(_, w)| w.estimate > 0.0)
            .map(|&(r, w)| (r, w.estimate.ln()))
            .collect();
        if pts.len() >= 2 {
            let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
            let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
            let (_, slope, r2) = crate::numeric::linear_fit(&xs, &ys);
            println!("log-linear fit: slope {slope:.4}, R^2 {r2:.4}");
        }
        return Ok(EXIT_OK);
    }
    // Critical intensity sweep.
    let grid = if args.lambda_grid.is_empty() {
        match model {
            PercModel::Ab => vec![0.6, 0.72, 0.84, 0.96, 1.08, 1.2],
            PercModel::Boolean => vec![1.0, 1.15, 1.3, 1.45, 1.6, 1.8],
        }
    } else {
        args.lambda_grid.clone()
    };
    let est = abperc::estimate_lambda_c(
        model,
        args.d,
        &grid,
        &args.box_sizes,
        ctx.trials,
        ctx.seed,
        ctx.threads,
    )
    .map_err(stringify)?;
    println!(
        "lambda_c ({:?}, d={}): {:.4} CI [{:.4}, {:.4}]{}",
        model,
        args.d,
        est.estimate,
        est.ci.0,
        est.ci.1,
        if est.monotonicity_flag {
            "  [non-monotone raw data: CI widened]"
        } else {
            ""
        }
    );
    for (r, x) in &est.crossings {
        println!("  crossing at R={r}: {x:.4}");
    }
    if args.c2 && model == PercModel::Ab {
        println!("c2(d={}) = {:.4}", args.d, abperc::c2_constant(args.d, est.estimate));
    }
    let csv = io::lambda_sweep_csv(&est);
    let path = ctx.out.join(format!("{}_sweep.csv", args.model));
    io::write_text(&path, &csv).map_err(stringify)?;
    io::write_json(ctx.out.join(format!("{}_lambda_c.json", args.model)), &est)
        .map_err(stringify)?;
    println!("wrote {}", path.display());
    Ok(EXIT_OK)
}

fn cmd_sweep(ctx: &Ctx, args: &SweepArgs) -> CmdResult {
    let report = experiments::threshold_sweep(
        args.d,
        args.k,
        &args.n_list,
        &args.c_list,
        ctx.trials,
        ctx.seed,
        ctx.threads,
        args.budget,
    )
    .map_err(stringify)?;
    for fit in &report.crossings {
        println!(
            "n={}: crossing c = {:.4} CI [{:.4}, {:.4}]",
            fit.n, fit.crossing, fit.ci.0, fit.ci.1
        );
    }
    println!(
        "pooled crossing: {:.4} +- {:.4}",
        report.pooled_crossing, report.pooled_half_width
    );
    let path = ctx.out.join("threshold_sweep.csv");
    io::write_text(&path, &io::sweep_csv(&report)).map_err(stringify)?;
    io::write_json(ctx.out.join("threshold_sweep.json"), &report).map_err(stringify)?;
    println!("wrote {}", path.display());
    if args.svg {
        let series: Vec<(String, Vec<(f64, f64)>)> = args
            .n_list
            .iter()
            .map(|&n| {
                (
                    format!("n={n}"),
                    report
                        .cells
                        .iter()
                        .filter(|c| c.n == n)
                        .map(|c| (c.lambda, c.estimate))
                        .collect(),
                )
            })
            .collect();
        let svg = io::svg_line_plot(
            &format!("P(chi > {}) vs c at alpha = c n^(-1/{})", args.k, args.d),
            &series,
        );
        let path = ctx.out.join("threshold_sweep.svg");
        io::write_text(&path, &svg).map_err(stringify)?;
        println!("wrote {}", path.display());
    }
    Ok(EXIT_OK)
}

fn cmd_edges(ctx: &Ctx, args: &EdgesArgs) -> CmdResult {
    let report = experiments::edge_count_experiment(
        args.d,
        args.nu,
        &args.n_list,
        ctx.trials,
        ctx.seed,
        ctx.threads,
    )
    .map_err(stringify)?;
    println!(
        "edge counts at nu={} (target Poisson mean {:.4}):",
        args.nu, report.mu
    );
    for row in &report.rows {
        println!(
            "  n={:6}: mean {:.4} (target {:.4}), P(W=0) {:.4} (target {:.4}), TV {:.4}",
            row.n, row.mean, row.target_mean, row.p_zero, row.target_p_zero, row.tv_poisson
        );
    }
    io::write_text(ctx.out.join("edge_counts.csv"), &io::edge_count_csv(&report))
        .map_err(stringify)?;
    io::write_json(ctx.out.join("edge_counts.json"), &report).map_err(stringify)?;
    if !args.pn_alphas.is_empty() {
        let pn = experiments::pn_experiment(args.d, &args.pn_alphas, args.pairs, ctx.seed, ctx.threads)
            .map_err(stringify)?;
        for row in &pn.rows {
            println!(
                "  alpha={:.4}: p = {:.6} vs cap {:.6} (z {:+.2}), asymptotic ratio {:.4}",
                row.alpha, row.empirical, row.exact, row.z_exact, row.asymptotic_ratio
            );
        }
        io::write_text(ctx.out.join("pn.csv"), &io::pn_csv(&pn)).map_err(stringify)?;
    }
    Ok(EXIT_OK)
}

fn cmd_embed(ctx: &Ctx, args: &EmbedArgs) -> CmdResult {
    let cfg = embed::EmbedConfig::desk_default(args.d, args.epsilon);
    let mut accepted = 0u64;
    let mut last_accepted = None;
    for s in 0..args.seeds {
        let points =
            geom::sample_uniform(args.d, args.n, ctx.seed.wrapping_add(s)).map_err(stringify)?;
        let outcome = embed::build_embedding(&points, args.epsilon, args.c, &cfg)
            .map_err(stringify)?;
        if outcome.accepted {
            accepted += 1;
            println!(
                "seed {}: accepted (layers {}, i_max {})",
                ctx.seed.wrapping_add(s),
                outcome.h.layers.len(),
                outcome.i_max
            );
            last_accepted = Some((points, outcome));
        } else {
            println!(
                "seed {}: rejected: {}",
                ctx.seed.wrapping_add(s),
                outcome.rejection.as_deref().unwrap_or("?")
            );
        }
    }
    println!(
        "success rate: {accepted}/{} = {:.2}",
        args.seeds,
        accepted as f64 / args.seeds as f64
    );
    if let Some((points, outcome)) = last_accepted {
        io::write_json(ctx.out.join("embedding.json"), &outcome).map_err(stringify)?;
        println!("wrote {}", ctx.out.join("embedding.json").display());
        if args.cross_check {
            let induced =
                embed::induced_equator_instance(&points, &outcome.h, args.epsilon, outcome.alpha);
            println!("induced S^{} instance: {} points", args.d - 1, induced.len());
            if args.d == 2 && !induced.is_empty() {
                let g = graph::build_graph(induced, outcome.alpha / 5.0).map_err(stringify)?;
                let (bip, _) = graph::is_bipartite(&g);
                println!(
                    "induced circle graph: {} edges, bipartite: {bip}",
                    g.edge_count()
                );
            }
        }
    }
    Ok(EXIT_OK)
}

fn cmd_verify(ctx: &Ctx, args: &VerifyArgs) -> CmdResult {
    let scale = if args.quick { 1 } else { 4 };
    let mut all_ok = true;
    let mut check = |name: &str, ok: bool| {
        println!("{}  {name}", if ok { "PASS" } else { "FAIL" });
        all_ok &= ok;
    };

    // Chord/geodesic identity and distortion lower bound on random pairs.
    {
        let pts = geom::sample_uniform(2, 2000 * scale, ctx.seed).map_err(stringify)?;
        let mut ok = true;
        for pair in pts.chunks(2) {
            if pair.len() < 2 {
                break;
            }
            let geo = geom::geodesic_distance(&pair[0], &pair[1]).unwrap();
            let chord = geom::chord_distance(&pair[0], &pair[1]).unwrap();
            ok &= (chord - 2.0 * (geo / 2.0).sin()).abs() <= 1e-12;
            ok &= chord <= geo + 1e-12 && chord >= 2.0 / std::f64::consts::PI * geo - 1e-12;
            if 1.0 - pair[0].height() > 1e-6 && 1.0 - pair[1].height() > 1e-6 {
                let pa = geom::stereo_project(&pair[0]).unwrap();
                let pb = geom::stereo_project(&pair[1]).unwrap();
                ok &= pa.dist(&pb) >= 0.5 * geo - 1e-9;
            }
        }
        check("geometry: chord identity and projection lower bound", ok);
    }
    // Grid adjacency equals brute force.
    {
        let mut ok = true;
        for s in 0..5 * scale as u64 {
            let pts = geom::sample_uniform(2, 300, ctx.seed ^ s).map_err(stringify)?;
            let a = graph::build_graph_bruteforce(pts.clone(), 0.35).map_err(stringify)?;
            let b = graph::build_graph_grid(pts, 0.35).map_err(stringify)?;
            ok &= a.adj == b.adj;
        }
        check("graph: grid construction bit-identical to brute force", ok);
    }
    // Mirror equivalence.
    {
        let mut ok = true;
        for s in 0..10 * scale as u64 {
            let pts = geom::sample_uniform(2, 250, 0x771 ^ s).map_err(stringify)?;
            let g = graph::build_graph(pts.clone(), 0.55).map_err(stringify)?;
            let m = graph::build_geo_mirror(pts, 0.55).map_err(stringify)?;
            ok &= graph::antipodal_connectivity(&m).connected != graph::is_bipartite(&g).0;
        }
        check("graph: antipodal connectivity equals non-bipartiteness", ok);
    }
    // Solver vs greedy sanity and proper colorings.
    {
        let mut ok = true;
        for s in 0..10 * scale as u64 {
            let pts = geom::sample_uniform(2, 30, 0x99 ^ s).map_err(stringify)?;
            let g = graph::build_graph(pts, 1.6).map_err(stringify)?;
            if let ChromaticResult::Exact(chi, coloring) = color::chromatic_number(&g, u64::MAX) {
                ok &= coloring.is_proper(&g);
                ok &= chi <= color::greedy_color(&g).palette;
            } else {
                ok = false;
            }
        }
        check("coloring: exact solver within greedy bound, proper output", ok);
    }
    // Clustering equivalence.
    {
        let mut ok = true;
        for s in 0..10 * scale as u64 {
            let sample = abperc::sample_ab_seeded(2, 5.0, 1.0, 1.0, 0x3a ^ s, None)
                .map_err(stringify)?;
            let fast = abperc::build_clusters(&sample);
            let slow = abperc::build_clusters_bruteforce(&sample);
            ok &= fast.component_count() == slow.component_count();
        }
        check("percolation: grid clustering equals brute force", ok);
    }
    // Schedule closed forms.
    {
        let (a, r) = (0.006, 0.004);
        let mut a_i = a;
        let mut r_i = r / 4.0;
        let mut ok = true;
        for i in 0..5 {
            let (ca, cr, _) = embed::schedule_closed_form(a, r, i);
            ok &= ((a_i - ca) / ca).abs() < 1e-12 && ((r_i - cr) / cr).abs() < 1e-12;
            r_i *= a_i / 2.0;
            a_i *= 9.0;
        }
        check("embedding: perturbation schedule closed forms", ok);
    }
    // Projected density normalization.
    {
        let total = crate::numeric::integrate(
            |s| {
                let rho = s / (1.0 - s);
                let jac = 1.0 / ((1.0 - s) * (1.0 - s));
                geom::projected_density_radial(rho, 2)
                    * 2.0
                    * crate::numeric::ball_volume(2)
                    * rho
                    * jac
            },
            0.0,
            1.0 - 1e-12,
            1e-10,
        );
        check(
            "geometry: projected density integrates to 1",
            (total - 1.0).abs() < 1e-6,
        );
    }
    Ok(if all_ok { EXIT_OK } else { 1 })
}
