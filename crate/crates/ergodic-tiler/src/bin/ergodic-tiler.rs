use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use ergodic_tiler::experiments::{ergodic_run_on, ratio_experiment, tile_graph};
use ergodic_tiler::io::{self, GraphFile};
use ergodic_tiler::models::generate_model;
use ergodic_tiler::report::{emit_report, RunReport};
use ergodic_tiler::{Config, LabError, LabResult};
use tiler_core::cuts::{edge_price, vertex_price, Cut, PriceMethod};
use tiler_core::flows::{balance_check, validate_flow};
use tiler_core::prepartitions::{
    find_injective_extension, find_pack, packed_and_saturated, CentralFamily, Landscape, SearchBudget,
};
use tiler_core::visibility::{block, distinct_blocks, orbit_merge_test};
use tiler_core::RhoMeasure;

/// Cocycle-weighted tiling experiments on finite graphs.
#[derive(Parser)]
#[command(name = "ergodic-tiler", version)]
struct Cli {
    /// Configuration file with one `key=value` per line.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides `model.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for CSV, JSON and dump files.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Extra `key=value` settings, applied after the config file.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tile the function of a graph file.
    Tile {
        #[arg(long)]
        graph: PathBuf,
    },
    /// Validate a flow file and optionally compare `∫_U out` with `∫_V in`.
    FlowCheck {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        flow: PathBuf,
        /// Comma-separated source set.
        #[arg(long, requires = "v")]
        u: Option<String>,
        /// Comma-separated target set.
        #[arg(long, requires = "u")]
        v: Option<String>,
    },
    /// Build a packed and saturated prepartition of central sets, or audit one.
    Pack {
        #[arg(long)]
        graph: PathBuf,
        /// Prepartition to audit instead of building one.
        #[arg(long)]
        prep: Option<PathBuf>,
        /// Centrality threshold: admitted sets have `|A_f| ≤ λ`.
        #[arg(long, default_value_t = 0.1)]
        lambda: f64,
        /// Least ρ-ratio of admitted sets.
        #[arg(long, default_value_t = 1.0)]
        min_ratio: f64,
        /// Packing ratio.
        #[arg(long, default_value_t = 0.5)]
        p: f64,
        /// Search exhaustively for packs and injective extensions.
        #[arg(long)]
        audit: bool,
    },
    /// List visibility blocks.
    Blocks {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        /// Only the block of this vertex.
        #[arg(long)]
        vertex: Option<usize>,
    },
    /// Price of a K-finitizing cut.
    Price {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Vertex)]
        mode: Mode,
        #[arg(long)]
        k: usize,
        #[arg(long, value_enum, default_value_t = Method::Exact)]
        method: Method,
    },
    /// Tile the configured model.
    ErgodicRun,
    /// Tile `f/g` on the configured model under the rescaled cocycle.
    RatioRun {
        /// Denominator: the model's own `g`, constant one, or `f = c·g`
        /// with `f` replaced accordingly.
        #[arg(long, value_enum, default_value_t = Denominator::Model)]
        g: Denominator,
        /// Constant for `--g proportional`.
        #[arg(long, default_value_t = 2.0)]
        c: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Vertex,
    Edge,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Exact,
    Greedy,
    Local,
}

#[derive(Clone, Copy, ValueEnum)]
enum Denominator {
    Model,
    One,
    Proportional,
}

/// Exit status beyond plain success or error.
#[derive(PartialEq)]
enum Verdict {
    Pass,
    Miss,
}

fn load_config(cli: &Cli) -> LabResult<Config> {
    let mut config = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    for pair in &cli.set {
        config.assign(pair)?;
    }
    if let Some(seed) = cli.seed {
        config.model.seed = seed;
    }
    Ok(config)
}

fn measure(g: &GraphFile) -> RhoMeasure {
    RhoMeasure::by_component_size(&g.graph, &g.cocycle)
}

fn ids(list: &[usize]) -> String {
    list.iter().map(usize::to_string).collect::<Vec<_>>().join(" ")
}

fn print_run(report: &RunReport, out: Option<&Path>) -> LabResult<Verdict> {
    println!("stage  mass_within_eps  frontier  tiles  max_tile  mean_tile");
    for s in &report.stages {
        let mass = s.ratio_mass.unwrap_or(s.mass_within_eps);
        println!(
            "{:>5}  {:>15.6}  {:>8.6}  {:>5}  {:>8}  {:>9.3}",
            s.stage, mass, s.frontier_mass, s.tiles, s.max_tile, s.mean_tile
        );
    }
    if let Some(err) = report.max_ratio_error {
        println!("target ratio {:.9}, largest tile error {err:.3e}", report.integral);
    }
    if let Some(stall) = &report.stall {
        println!(
            "stalled at stage {} on components {}",
            stall.stage,
            ids(&stall.components)
        );
        if !stall.flow_violations.is_empty() {
            println!("flow-away bound fails on components {}", ids(&stall.flow_violations));
        }
    }
    println!(
        "{}",
        if report.reached {
            "target reached"
        } else {
            "target missed"
        }
    );
    if let Some(dir) = out {
        let files = emit_report(report, dir)?;
        let tiles = dir.join("tiles.txt");
        std::fs::write(&tiles, io::format_cells(&report.tiles)).map_err(|e| LabError::io(&tiles, e))?;
        println!(
            "wrote {}, {} and {}",
            files.csv.display(),
            files.json.display(),
            tiles.display()
        );
    }
    Ok(if report.reached { Verdict::Pass } else { Verdict::Miss })
}

fn run(cli: &Cli) -> LabResult<Verdict> {
    let config = load_config(cli)?;
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Tile { graph } => {
            let g = io::load_graph(graph)?;
            let mu = measure(&g);
            let frontier = g.has_frontier().then_some(g.frontier.as_slice());
            let report = tile_graph(&g.graph, &g.cocycle, &mu, &g.values, frontier, &config, "tile")?;
            print_run(&report, out)
        }
        Command::FlowCheck { graph, flow, u, v } => {
            let g = io::load_graph(graph)?;
            let phi = io::load_flow(flow)?;
            let report = validate_flow(&phi, &g.cocycle, Some(&measure(&g)))?;
            println!("entries {}", phi.len());
            println!("sources {}", ids(&report.sources));
            println!("sinks {}", ids(&report.sinks));
            println!("pure {}", report.pure);
            println!("global integral {:.3e}", report.global_integral.unwrap_or(0.0));
            for bad in &report.violations {
                println!("bound violation at {} ({:?}): {}", bad.vertex, bad.bound, bad.value);
            }
            let mut ok = report.violations.is_empty();
            if let (Some(u), Some(v)) = (u, v) {
                let (out_u, in_v) = balance_check(&phi, &g.cocycle, &io::parse_id_list(u)?, &io::parse_id_list(v)?)?;
                let balanced = (out_u - in_v).abs() <= 1e-9 * out_u.abs().max(in_v.abs()).max(1e-300);
                println!("out of U {out_u:.12}, into V {in_v:.12}, balanced {balanced}");
                ok &= balanced;
            }
            Ok(if ok { Verdict::Pass } else { Verdict::Miss })
        }
        Command::Pack {
            graph,
            prep,
            lambda,
            min_ratio,
            p,
            audit,
        } => {
            let g = io::load_graph(graph)?;
            let land = Landscape {
                graph: &g.graph,
                cocycle: &g.cocycle,
                values: &g.values,
            };
            let family = CentralFamily {
                lambda: *lambda,
                min_ratio: *min_ratio,
            };
            let budget = SearchBudget {
                exhaustive_limit: config.exhaustive_limit,
                max_units: config.max_units,
            };
            let prep = match prep {
                Some(path) => io::load_prepartition(path, g.graph.vertex_count())?,
                None => {
                    let report = packed_and_saturated(&family, *p, &land, budget, 64)?;
                    if !report.exhaustive {
                        println!("note: some components exceeded the exhaustive limit");
                    }
                    report.prepartition
                }
            };
            print!("{}", io::format_cells(prep.cells()));
            if let Some(dir) = out {
                std::fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))?;
                io::save_prepartition(&dir.join("prepartition.txt"), &prep)?;
            }
            if !audit {
                return Ok(Verdict::Pass);
            }
            let largest = g.graph.components().iter().map(Vec::len).max().unwrap_or(0);
            let exact = SearchBudget {
                exhaustive_limit: largest.max(budget.exhaustive_limit),
                ..budget
            };
            let pack = find_pack(&family, &prep, *p, &land, exact);
            let extension = find_injective_extension(&family, &prep, &land, exact);
            match &pack {
                Some(cert) => println!("audit: pack {}", ids(&cert.set)),
                None => println!("audit: packed"),
            }
            match &extension {
                Some(set) => println!("audit: injective extension {}", ids(set)),
                None => println!("audit: saturated"),
            }
            Ok(if pack.is_none() && extension.is_none() {
                Verdict::Pass
            } else {
                Verdict::Miss
            })
        }
        Command::Blocks { graph, alpha, vertex } => {
            let g = io::load_graph(graph)?;
            let blocks = match vertex {
                Some(x) => vec![block(&g.graph, &g.cocycle, *x, *alpha)?],
                None => distinct_blocks(&g.graph, &g.cocycle, *alpha)?,
            };
            for b in &blocks {
                let flag = if b.touches(&g.frontier) { " frontier" } else { "" };
                println!("dominus {}: {}{flag}", b.dominus, ids(&b.vertices));
            }
            let merges = orbit_merge_test(&g.graph, &g.cocycle);
            println!("orbit merge {}", if merges { "holds" } else { "fails" });
            Ok(if merges { Verdict::Pass } else { Verdict::Miss })
        }
        Command::Price { graph, mode, k, method } => {
            let g = io::load_graph(graph)?;
            let method = match method {
                Method::Exact => PriceMethod::Exact,
                Method::Greedy => PriceMethod::Greedy,
                Method::Local => PriceMethod::Local,
            };
            let report = match mode {
                Mode::Vertex => vertex_price(&g.graph, &g.cocycle, &measure(&g), *k, method)?,
                Mode::Edge => edge_price(&g.graph, &g.cocycle, None, *k, method)?,
            };
            println!("price {}", report.price);
            match &report.cut {
                Cut::Vertices(vs) => println!("cut {}", ids(vs)),
                Cut::Edges(es) => {
                    let list: Vec<String> = es.iter().map(|(a, b)| format!("{a}-{b}")).collect();
                    println!("cut {}", list.join(" "));
                }
            }
            println!("largest component {}", report.largest_component);
            Ok(Verdict::Pass)
        }
        Command::ErgodicRun => {
            let model = generate_model(&config.model)?;
            print_run(&ergodic_run_on(&model, &config)?, out)
        }
        Command::RatioRun { g, c } => {
            let model = generate_model(&config.model)?;
            let (f, den) = match g {
                Denominator::Model => (model.f.clone(), model.g.clone()),
                Denominator::One => (model.f.clone(), vec![1.0; model.f.len()]),
                Denominator::Proportional => (model.g.iter().map(|x| c * x).collect(), model.g.clone()),
            };
            print_run(&ratio_experiment(&model, &f, &den, &config)?, out)
        }
    }
}

fn main() -> ExitCode {
    // Usage errors exit with 1, since 2 means a missed threshold here.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(u8::from(e.use_stderr()));
        }
    };
    match run(&cli) {
        Ok(Verdict::Pass) => ExitCode::SUCCESS,
        Ok(Verdict::Miss) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
