use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use polymem::ann::{build_ann_with, read_index, write_index, AnnParams};
use polymem::bench::{summary, sweep, write_csv, BenchConfig};
use polymem::geometry::io::{format_points, format_polytope, parse_points, parse_polytope};
use polymem::geometry::Point;
use polymem::precondition::{canonicalize, reduce_halfspaces, CanonicalForm};
use polymem::splitreduce::{build, read_tree, write_tree};
use polymem::workloads::{
    gen_ball_polytope, gen_box, gen_hypercylinder, gen_points, gen_queries, gen_random_tangent, gen_simplex,
    PointDistribution, QueryCounts,
};
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "polymem",
    version,
    about = "Approximate polytope membership and nearest-neighbor indexes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a membership tree for a polytope file.
    Build(BuildArgs),
    /// Answer membership queries against a saved tree.
    Query(QueryArgs),
    /// Build a nearest-neighbor index over a point file.
    AnnBuild(AnnBuildArgs),
    /// Answer nearest-neighbor queries against a saved index.
    AnnQuery(AnnQueryArgs),
    /// Generate bodies, point clouds, or labeled queries.
    Gen {
        #[command(subcommand)]
        what: GenCommand,
    },
    /// Run a benchmark sweep and write its CSV.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Position {
    /// Use the body as given; it must already sit in Q0 around the origin.
    Identity,
    /// Map into canonical position with the enclosing ellipsoid.
    Canonical,
    /// Canonicalize and thin the halfspaces to a kernel.
    Reduce,
}

#[derive(Args)]
struct BuildArgs {
    #[arg(long)]
    body: PathBuf,
    /// Approximation error; absolute for `identity`, relative to the diameter otherwise.
    #[arg(long)]
    eps: f64,
    /// Largest number of halfspaces per leaf.
    #[arg(long)]
    t: usize,
    #[arg(long, value_enum, default_value = "canonical")]
    position: Position,
    /// Label cells inside only when they lie in the body.
    #[arg(long)]
    strict: bool,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct QueryArgs {
    #[arg(long)]
    tree: PathBuf,
    /// Point file in the body's original coordinates.
    #[arg(long)]
    points: PathBuf,
    /// CSV output; standard output when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct AnnBuildArgs {
    #[arg(long)]
    points: PathBuf,
    #[arg(long)]
    eps: f64,
    #[arg(long, default_value_t = 4)]
    t: usize,
    /// Representatives a cell may carry before it splits.
    #[arg(long)]
    rep_threshold: Option<usize>,
    #[arg(long)]
    depth_cap: Option<u32>,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct AnnQueryArgs {
    #[arg(long)]
    index: PathBuf,
    #[arg(long)]
    points: PathBuf,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    RandomTangent,
    Ball,
    Hypercylinder,
    Box,
    Simplex,
}

#[derive(Clone, Copy, ValueEnum)]
enum DistArg {
    Uniform,
    Clusters,
    Sphere,
}

#[derive(Subcommand)]
enum GenCommand {
    Body {
        #[arg(long, value_enum)]
        family: FamilyArg,
        #[arg(long)]
        d: usize,
        /// Halfspace count for random-tangent bodies.
        #[arg(long, default_value_t = 24)]
        n: usize,
        /// Ball diameter; defaults to `1/√d`.
        #[arg(long)]
        diam: Option<f64>,
        #[arg(long, default_value_t = 0.01)]
        facet_eps: f64,
        #[arg(long, default_value_t = 4.0)]
        alpha: f64,
        /// Target error of the hypercylinder construction.
        #[arg(long, default_value_t = 0.001)]
        eps: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    Points {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum, default_value = "uniform")]
        dist: DistArg,
        #[arg(long, default_value_t = 2)]
        clusters: usize,
        #[arg(long, default_value_t = 1.0)]
        gap: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Labeled queries: a point file plus a CSV of strata and oracle distances.
    Queries {
        #[arg(long)]
        body: PathBuf,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 100)]
        inside: usize,
        #[arg(long, default_value_t = 100)]
        band: usize,
        #[arg(long, default_value_t = 100)]
        far: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long)]
        labels: Option<PathBuf>,
    },
}

#[derive(Args)]
struct BenchArgs {
    /// TOML configuration; the built-in default when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Leave the timing columns empty so the CSV depends only on the configuration.
    #[arg(long)]
    no_timing: bool,
    /// Print the default configuration and exit.
    #[arg(long)]
    print_default_config: bool,
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

fn run_build(a: BuildArgs) -> Result<()> {
    let k = parse_polytope(&read_text(&a.body)?)?;
    let cf = match a.position {
        Position::Identity => CanonicalForm::identity(k)?.with_eps_abs(a.eps),
        Position::Canonical => canonicalize(&k)?.with_eps_rel(a.eps),
        Position::Reduce => reduce_halfspaces(&k, a.eps)?,
    };
    let tree = build(&cf, a.t, a.strict)?;
    let r = tree.space_report();
    write_tree(&tree, BufWriter::new(File::create(&a.output)?))?;
    eprintln!(
        "nodes {} leaves {} sum_tq {} max_tq {} depth {}",
        r.nodes, r.leaves, r.sum_tq, r.max_tq, r.depth
    );
    Ok(())
}

fn run_query(a: QueryArgs) -> Result<()> {
    let tree = read_tree(BufReader::new(File::open(&a.tree)?))?;
    let pts = parse_points(&read_text(&a.points)?)?;
    let mut w = csv::Writer::from_writer(sink(a.output.as_deref())?);
    w.write_record(["query_id", "inside", "levels", "tests", "witness"])?;
    for (i, p) in pts.iter().enumerate() {
        let o = tree.query_original(p)?;
        let witness = o
            .witness
            .map_or(String::new(), |w| tree.canonical.origin[w.index].to_string());
        w.write_record([
            i.to_string(),
            o.inside.to_string(),
            o.levels.to_string(),
            o.tests.to_string(),
            witness,
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn run_ann_build(a: AnnBuildArgs) -> Result<()> {
    let sites = parse_points(&read_text(&a.points)?)?;
    let mut params = AnnParams::new(a.eps, a.t);
    if let Some(r) = a.rep_threshold {
        params.rep_threshold = r;
    }
    if let Some(c) = a.depth_cap {
        params.depth_cap = c;
    }
    let index = build_ann_with(&sites, params)?;
    write_index(&index, BufWriter::new(File::create(&a.output)?))?;
    eprintln!(
        "sites {} leaves {} lifted {} depth {}",
        sites.len(),
        index.leaf_count(),
        index.lifted_count(),
        index.depth
    );
    Ok(())
}

fn run_ann_query(a: AnnQueryArgs) -> Result<()> {
    let index = read_index(BufReader::new(File::open(&a.index)?))?;
    let pts = parse_points(&read_text(&a.points)?)?;
    let mut w = csv::Writer::from_writer(sink(a.output.as_deref())?);
    w.write_record(["query_id", "site_id", "distance", "cost"])?;
    for (i, p) in pts.iter().enumerate() {
        let ans = index.query(p)?;
        w.write_record([
            i.to_string(),
            ans.site.to_string(),
            format!("{:e}", ans.distance),
            ans.cost.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn run_gen(what: GenCommand) -> Result<()> {
    match what {
        GenCommand::Body {
            family,
            d,
            n,
            diam,
            facet_eps,
            alpha,
            eps,
            seed,
            output,
        } => {
            let k = match family {
                FamilyArg::RandomTangent => gen_random_tangent(d, n, seed)?,
                FamilyArg::Ball => gen_ball_polytope(d, diam.unwrap_or(1.0 / (d as f64).sqrt()), facet_eps)?,
                FamilyArg::Hypercylinder => {
                    let h = gen_hypercylinder(d, alpha, eps)?;
                    eprintln!("k {} diameter {:.6} t {:.3}", h.k, h.diameter, h.t);
                    h.body
                }
                FamilyArg::Box => gen_box(d),
                FamilyArg::Simplex => gen_simplex(d),
            };
            sink(output.as_deref())?.write_all(format_polytope(&k).as_bytes())?;
        }
        GenCommand::Points {
            d,
            n,
            dist,
            clusters,
            gap,
            seed,
            output,
        } => {
            let dist = match dist {
                DistArg::Uniform => PointDistribution::Uniform,
                DistArg::Clusters => PointDistribution::Clusters { count: clusters, gap },
                DistArg::Sphere => PointDistribution::Sphere,
            };
            sink(output.as_deref())?.write_all(format_points(&gen_points(d, n, dist, seed)).as_bytes())?;
        }
        GenCommand::Queries {
            body,
            eps,
            inside,
            band,
            far,
            seed,
            output,
            labels,
        } => {
            let k = parse_polytope(&read_text(&body)?)?;
            let qs = gen_queries(&k, eps, QueryCounts { inside, band, far }, seed)?;
            let pts: Vec<Point> = qs.iter().map(|q| q.point.clone()).collect();
            std::fs::write(&output, format_points(&pts))?;
            if let Some(path) = labels {
                let mut w = csv::Writer::from_path(&path)?;
                w.write_record(["query_id", "stratum", "distance"])?;
                for (i, q) in qs.iter().enumerate() {
                    w.write_record([i.to_string(), q.stratum.name().to_string(), format!("{:e}", q.distance)])?;
                }
                w.flush()?;
            }
        }
    }
    Ok(())
}

/// Returns whether the correctness gate held.
fn run_bench(a: BenchArgs) -> Result<bool> {
    if a.print_default_config {
        print!("{}", BenchConfig::default().to_toml());
        return Ok(true);
    }
    let cfg = match &a.config {
        Some(p) => BenchConfig::from_toml(&read_text(p)?)?,
        None => BenchConfig::default(),
    };
    let out = sweep(&cfg)?;
    write_csv(&out.records, sink(a.output.as_deref())?, !a.no_timing)?;
    eprint!("{}", summary(&out));
    Ok(out.gate_failures().is_empty())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Build(a) => run_build(a).map(|_| true),
        Command::Query(a) => run_query(a).map(|_| true),
        Command::AnnBuild(a) => run_ann_build(a).map(|_| true),
        Command::AnnQuery(a) => run_ann_query(a).map(|_| true),
        Command::Gen { what } => run_gen(what).map(|_| true),
        Command::Bench(a) => run_bench(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("correctness gate failed");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
