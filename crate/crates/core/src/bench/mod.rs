//! Parameter sweeps over bodies and structures, oracle-gated correctness counts,
//! CSV output, and log–log exponent fits.

mod fit;

pub use fit::{fit_exponent, fit_records, ExponentFit, Metric};

use crate::approx::{bentley_columns, dudley_approx, hybrid_tradeoff};
use crate::geometry::{Polytope, TOL};
use crate::precondition::CanonicalForm;
use crate::splitreduce::build;
use crate::workloads::{
    gen_ball_polytope, gen_box, gen_hypercylinder, gen_queries, gen_random_tangent, gen_simplex, LabeledQuery,
    QueryCounts, Stratum,
};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::io::Write;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    RandomTangent,
    Ball,
    Hypercylinder,
    Box,
    Simplex,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::RandomTangent => "random-tangent",
            Family::Ball => "ball",
            Family::Hypercylinder => "hypercylinder",
            Family::Box => "box",
            Family::Simplex => "simplex",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Structure {
    Splitreduce,
    Hybrid,
    Dudley,
    Bentley,
}

impl Structure {
    pub fn name(self) -> &'static str {
        match self {
            Structure::Splitreduce => "splitreduce",
            Structure::Hybrid => "hybrid",
            Structure::Dudley => "dudley",
            Structure::Bentley => "bentley",
        }
    }

    /// Whether the structure has a storage/query trade-off parameter.
    pub fn uses_alpha(self) -> bool {
        matches!(self, Structure::Splitreduce | Structure::Hybrid)
    }
}

/// Sweep configuration; read from a flat TOML file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchConfig {
    pub families: Vec<Family>,
    pub structures: Vec<Structure>,
    pub dims: Vec<usize>,
    pub eps: Vec<f64>,
    pub alphas: Vec<f64>,
    pub inside: usize,
    pub band: usize,
    pub far: usize,
    pub seed: u64,
    /// Halfspace count of the random-tangent family.
    pub tangent_halfspaces: usize,
    /// Facet tolerance of the ball family, whose diameter is `1/√d`.
    pub ball_facet_eps: f64,
    /// Worker threads; zero means one per available core.
    pub threads: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            families: vec![Family::RandomTangent, Family::Ball],
            structures: vec![Structure::Splitreduce, Structure::Hybrid],
            dims: vec![2],
            eps: vec![0.1, 0.05, 0.025],
            alphas: vec![4.0],
            inside: 200,
            band: 100,
            far: 200,
            seed: 1,
            tangent_halfspaces: 24,
            ball_facet_eps: 0.01,
            threads: 0,
        }
    }
}

impl BenchConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::InvalidParameter(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if let Some(e) = self.eps.iter().find(|&&e| !(e > 0.0 && e <= 1.0)) {
            return bad(format!("eps {e} outside (0, 1]"));
        }
        if let Some(a) = self.alphas.iter().find(|&&a| !(a >= 2.0)) {
            return bad(format!("alpha {a} below 2"));
        }
        if let Some(d) = self.dims.iter().find(|&&d| !(2..=6).contains(&d)) {
            return bad(format!("dimension {d} outside 2..=6"));
        }
        if !(self.ball_facet_eps > 0.0) {
            return bad("ball_facet_eps must be positive".into());
        }
        Ok(())
    }

    fn queries(&self) -> QueryCounts {
        QueryCounts {
            inside: self.inside,
            band: self.band,
            far: self.far,
        }
    }

    fn body(&self, family: Family, d: usize, eps: f64, alpha: f64) -> Result<Polytope> {
        match family {
            Family::RandomTangent => gen_random_tangent(d, self.tangent_halfspaces, self.seed),
            Family::Ball => gen_ball_polytope(d, 1.0 / (d as f64).sqrt(), self.ball_facet_eps),
            Family::Hypercylinder => gen_hypercylinder(d, alpha, eps).map(|h| h.body),
            Family::Box => Ok(gen_box(d)),
            Family::Simplex => Ok(gen_simplex(d)),
        }
    }

    /// Sweep cells in output order.
    fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for &family in &self.families {
            for &d in &self.dims {
                for &eps in &self.eps {
                    for &structure in &self.structures {
                        if structure.uses_alpha() || family == Family::Hypercylinder {
                            out.extend(self.alphas.iter().map(|&a| Cell {
                                family,
                                structure,
                                d,
                                eps,
                                alpha: Some(a),
                            }));
                        } else {
                            out.push(Cell {
                                family,
                                structure,
                                d,
                                eps,
                                alpha: None,
                            });
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Cell {
    family: Family,
    structure: Structure,
    d: usize,
    eps: f64,
    alpha: Option<f64>,
}

/// Query budget of the tree at trade-off parameter `alpha`: `⌈lg(1/eps)/eps^((d−1)/alpha)⌉`.
pub fn tradeoff_t(d: usize, eps: f64, alpha: f64) -> usize {
    ((1.0 / eps).log2() / eps.powf((d as f64 - 1.0) / alpha))
        .ceil()
        .max(1.0) as usize
}

#[derive(Clone, Debug, PartialEq)]
pub struct TradeoffRecord {
    pub family: Family,
    pub structure: Structure,
    pub d: usize,
    pub eps: f64,
    pub alpha: Option<f64>,
    /// Leaf budget (tree), largest cell list (grid), or facet count (global).
    pub t: usize,
    pub nodes: usize,
    /// Stored halfspaces, or stored reals for the column table.
    pub sum_tq: usize,
    pub mean_tests: f64,
    pub max_tests: usize,
    pub depth: u32,
    pub inside_ok: usize,
    pub inside_n: usize,
    pub far_ok: usize,
    pub far_n: usize,
    pub band_n: usize,
    pub build_ms: f64,
    pub query_us: f64,
}

impl TradeoffRecord {
    pub fn violations(&self) -> usize {
        (self.inside_n - self.inside_ok) + (self.far_n - self.far_ok)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CellFailure {
    pub family: Family,
    pub structure: Structure,
    pub d: usize,
    pub eps: f64,
    pub alpha: Option<f64>,
    pub message: String,
}

#[derive(Clone, Debug, Default)]
pub struct SweepOutcome {
    pub records: Vec<TradeoffRecord>,
    pub failures: Vec<CellFailure>,
}

impl SweepOutcome {
    /// Records that rejected an inside query or accepted a far one.
    pub fn gate_failures(&self) -> Vec<&TradeoffRecord> {
        self.records.iter().filter(|r| r.violations() > 0).collect()
    }
}

/// Runs every cell of the configuration. Cells are independent and run on a worker
/// pool; output order follows the configuration.
pub fn sweep(cfg: &BenchConfig) -> Result<SweepOutcome> {
    cfg.validate()?;
    let cells = cfg.cells();
    let threads = match cfg.threads {
        0 => std::thread::available_parallelism().map_or(1, |n| n.get()),
        n => n,
    }
    .min(cells.len().max(1));
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<std::result::Result<TradeoffRecord, String>>>> = Mutex::new(vec![None; cells.len()]);
    std::thread::scope(|s| {
        for _ in 0..threads {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(&cell) = cells.get(i) else { break };
                let r = run_cell(cfg, cell, i as u64).map_err(|e| e.to_string());
                results.lock().expect("no worker panicked")[i] = Some(r);
            });
        }
    });
    let mut out = SweepOutcome::default();
    for (cell, r) in cells.iter().zip(results.into_inner().expect("no worker panicked")) {
        match r.expect("every cell ran") {
            Ok(rec) => out.records.push(rec),
            Err(message) => out.failures.push(CellFailure {
                family: cell.family,
                structure: cell.structure,
                d: cell.d,
                eps: cell.eps,
                alpha: cell.alpha,
                message,
            }),
        }
    }
    Ok(out)
}

/// A built structure behind a uniform query interface: `(inside, tests)`.
type Oracle = Box<dyn Fn(&[f64]) -> Result<(bool, usize)>>;

fn run_cell(cfg: &BenchConfig, cell: Cell, index: u64) -> Result<TradeoffRecord> {
    let Cell {
        family,
        structure,
        d,
        eps,
        alpha,
    } = cell;
    let body = cfg.body(family, d, eps, alpha.unwrap_or(4.0))?;
    let queries = gen_queries(
        &body,
        eps,
        cfg.queries(),
        cfg.seed.wrapping_add(index.wrapping_mul(0x9e37_79b9)),
    )?;
    let alpha = if structure.uses_alpha() || family == Family::Hypercylinder {
        alpha
    } else {
        None
    };
    evaluate(family, structure, body, eps, alpha, &queries)
}

/// Builds one structure for `body` (already in Q0 around the origin) and runs the
/// labeled queries through it. Alpha-free structures ignore `alpha`; the tree and
/// grid default to 4.
pub fn evaluate(
    family: Family,
    structure: Structure,
    body: Polytope,
    eps: f64,
    alpha: Option<f64>,
    queries: &[LabeledQuery],
) -> Result<TradeoffRecord> {
    let d = body.dim;
    let a = alpha.unwrap_or(4.0);
    let start = Instant::now();
    let (t, nodes, sum_tq, static_max, depth, oracle): (usize, usize, usize, usize, u32, Oracle) = match structure {
        Structure::Splitreduce => {
            let t = tradeoff_t(d, eps, a);
            let cf = CanonicalForm::identity(body)?.with_eps_abs(eps);
            let tree = build(&cf, t, false)?;
            let r = tree.space_report();
            (
                t,
                r.nodes,
                r.sum_tq,
                r.max_tq,
                r.depth,
                Box::new(move |q| tree.query(q).map(|o| (o.inside, o.tests))),
            )
        }
        Structure::Hybrid => {
            let g = hybrid_tradeoff(&body, eps, a)?;
            let max = g.max_tests();
            (
                max,
                g.cells.len(),
                g.storage(),
                max,
                0,
                Box::new(move |q| Ok(g.query(q))),
            )
        }
        Structure::Dudley => {
            let p = dudley_approx(&body, eps)?;
            let m = p.len();
            let oracle = move |q: &[f64]| {
                Ok(match p.first_violated(q, TOL.membership) {
                    Some(i) => (false, i + 1),
                    None => (true, m),
                })
            };
            (m, 1, m, m, 0, Box::new(oracle))
        }
        Structure::Bentley => {
            let c = bentley_columns(&body, eps);
            (
                1,
                c.columns.len(),
                c.storage(),
                1,
                0,
                Box::new(move |q| Ok((c.query(q), 1))),
            )
        }
    };
    let build_ms = start.elapsed().as_secs_f64() * 1e3;

    let mut rec = TradeoffRecord {
        family,
        structure,
        d,
        eps,
        alpha,
        t,
        nodes,
        sum_tq,
        mean_tests: 0.0,
        max_tests: static_max,
        depth,
        inside_ok: 0,
        inside_n: 0,
        far_ok: 0,
        far_n: 0,
        band_n: 0,
        build_ms,
        query_us: 0.0,
    };
    let start = Instant::now();
    let mut tests = 0usize;
    for q in queries {
        let (inside, n) = oracle(q.point.as_slice())?;
        tests += n;
        match q.stratum {
            Stratum::Inside => {
                rec.inside_n += 1;
                rec.inside_ok += inside as usize;
            }
            Stratum::Far => {
                rec.far_n += 1;
                rec.far_ok += !inside as usize;
            }
            Stratum::Band => rec.band_n += 1,
        }
    }
    if !queries.is_empty() {
        rec.query_us = start.elapsed().as_secs_f64() * 1e6 / queries.len() as f64;
        rec.mean_tests = tests as f64 / queries.len() as f64;
    }
    Ok(rec)
}

pub const CSV_HEADER: [&str; 15] = [
    "family",
    "d",
    "eps",
    "alpha",
    "t",
    "nodes",
    "sum_tq",
    "mean_tests",
    "max_tests",
    "depth",
    "inside_ok",
    "far_ok",
    "band_n",
    "build_ms",
    "query_us",
];

/// Writes records in the fixed column order. The structure is folded into the family
/// field as `family/structure`. With `timing` off the two timing fields are left empty,
/// which makes the output a pure function of the configuration.
pub fn write_csv<W: Write>(records: &[TradeoffRecord], w: W, timing: bool) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
    out.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in records {
        let time = |v: f64| if timing { format!("{v:.3}") } else { String::new() };
        out.write_record([
            format!("{}/{}", r.family.name(), r.structure.name()),
            r.d.to_string(),
            r.eps.to_string(),
            r.alpha.map_or(String::new(), |a| a.to_string()),
            r.t.to_string(),
            r.nodes.to_string(),
            r.sum_tq.to_string(),
            format!("{:.6}", r.mean_tests),
            r.max_tests.to_string(),
            r.depth.to_string(),
            r.inside_ok.to_string(),
            r.far_ok.to_string(),
            r.band_n.to_string(),
            time(r.build_ms),
            time(r.query_us),
        ])
        .map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

/// Storage exponent of the hybrid grid: `(d−1)(1−1/α)`.
pub fn grid_storage_exponent(d: usize, alpha: f64) -> f64 {
    (d as f64 - 1.0) * (1.0 - 1.0 / alpha)
}

/// Storage exponent of the tree: `(d−1)(1−(2⌊lg α⌋−2)/α)`.
pub fn tree_storage_exponent(d: usize, alpha: f64) -> f64 {
    (d as f64 - 1.0) * (1.0 - (2.0 * alpha.log2().floor() - 2.0) / alpha)
}

/// Storage exponent no tree at query budget `1/ε^((d−1)/α)` can beat:
/// `(d−1)(1−(2√(2α)−3)/α) − 1`.
pub fn storage_floor_exponent(d: usize, alpha: f64) -> f64 {
    (d as f64 - 1.0) * (1.0 - (2.0 * (2.0 * alpha).sqrt() - 3.0) / alpha) - 1.0
}

/// Fitted slopes are flagged when they exceed the predicted exponent by more than this.
pub const SLOPE_FLAG: f64 = 0.5;

/// Human-readable digest: failures, gate violations, and fitted slopes next to the
/// predicted exponents.
pub fn summary(out: &SweepOutcome) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{} records, {} failed cells", out.records.len(), out.failures.len());
    for f in &out.failures {
        let _ = writeln!(
            s,
            "  failed {}/{} d={} eps={} alpha={}: {}",
            f.family.name(),
            f.structure.name(),
            f.d,
            f.eps,
            f.alpha.map_or("-".into(), |a| a.to_string()),
            f.message
        );
    }
    let gate = out.gate_failures();
    if gate.is_empty() {
        let _ = writeln!(s, "correctness gate: pass");
    } else {
        let _ = writeln!(s, "correctness gate: FAIL ({} records with violations)", gate.len());
        for r in gate {
            let _ = writeln!(
                s,
                "  {}/{} d={} eps={}: inside {}/{}, far {}/{}",
                r.family.name(),
                r.structure.name(),
                r.d,
                r.eps,
                r.inside_ok,
                r.inside_n,
                r.far_ok,
                r.far_n
            );
        }
    }
    let _ = writeln!(
        s,
        "{:<32} {:>9} {:>9} {:>6} {:>9} {:>9} {:>9}  note",
        "series", "storage", "r2", "n", "grid", "tree", "floor"
    );
    for (key, fit) in fit_records(&out.records, Metric::Storage) {
        let (family, structure, d, alpha) = key;
        let a = alpha.unwrap_or(f64::NAN);
        let label = format!(
            "{}/{} d={} a={}",
            family.name(),
            structure.name(),
            d,
            alpha.map_or("-".into(), |a| a.to_string())
        );
        let tree = tree_storage_exponent(d, a);
        let flag = structure == Structure::Splitreduce && fit.slope > tree + SLOPE_FLAG;
        let _ = writeln!(
            s,
            "{label:<32} {:>9.3} {:>9.3} {:>6} {:>9.3} {:>9.3} {:>9.3}  {}",
            fit.slope,
            fit.r2,
            fit.n,
            grid_storage_exponent(d, a),
            tree,
            storage_floor_exponent(d, a),
            if flag { "CHECK: above tree exponent" } else { "" }
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::enumerate_vertices;
    use crate::splitreduce::depth_limit;

    fn small() -> BenchConfig {
        BenchConfig {
            families: vec![Family::RandomTangent, Family::Box],
            structures: vec![
                Structure::Splitreduce,
                Structure::Hybrid,
                Structure::Dudley,
                Structure::Bentley,
            ],
            dims: vec![2],
            eps: vec![0.1, 0.05],
            alphas: vec![4.0],
            inside: 50,
            band: 20,
            far: 50,
            ..Default::default()
        }
    }

    #[test]
    fn exponent_formulas() {
        assert_eq!(grid_storage_exponent(3, 4.0), 1.5);
        assert_eq!(tree_storage_exponent(3, 4.0), 2.0 * (1.0 - 2.0 / 4.0));
        assert_eq!(tree_storage_exponent(3, 8.0), 2.0 * (1.0 - 4.0 / 8.0));
        assert!((storage_floor_exponent(3, 8.0) - (2.0 * (1.0 - 5.0 / 8.0) - 1.0)).abs() < 1e-12);
        assert_eq!(tradeoff_t(2, 0.25, 1.0), 8);
        assert_eq!(tradeoff_t(3, 0.5, 4.0), 2);
    }

    #[test]
    fn config_round_trips_and_rejects_unknown_keys() {
        let cfg = small();
        assert_eq!(BenchConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
        assert!(BenchConfig::from_toml("colour = 3").is_err());
        assert!(BenchConfig::from_toml("eps = [0.0]").is_err());
        assert_eq!(BenchConfig::from_toml("").unwrap(), BenchConfig::default());
        let cfg = BenchConfig::from_toml("families = [\"ball\", \"hypercylinder\"]\ndims = [3]").unwrap();
        assert_eq!(cfg.families, vec![Family::Ball, Family::Hypercylinder]);
    }

    #[test]
    fn sweep_is_correct_and_ordered() {
        let out = sweep(&small()).unwrap();
        assert!(out.failures.is_empty(), "{:?}", out.failures);
        assert_eq!(out.records.len(), 2 * 2 * 4);
        assert!(out.gate_failures().is_empty());
        let order: Vec<_> = out.records.iter().map(|r| (r.family, r.eps, r.structure)).collect();
        assert_eq!(order[0], (Family::RandomTangent, 0.1, Structure::Splitreduce));
        assert_eq!(order[3], (Family::RandomTangent, 0.1, Structure::Bentley));
        assert!(out
            .records
            .iter()
            .all(|r| r.inside_n == 50 && r.far_n == 50 && r.band_n == 20));
        for r in out.records.iter().filter(|r| r.structure == Structure::Splitreduce) {
            assert!(r.depth <= depth_limit(r.eps) + 1);
        }
    }

    #[test]
    fn single_eps_gives_one_record_per_combination() {
        let cfg = BenchConfig {
            eps: vec![0.05],
            ..small()
        };
        assert_eq!(sweep(&cfg).unwrap().records.len(), 2 * 4);
    }

    #[test]
    fn csv_is_deterministic_without_timing() {
        let cfg = BenchConfig { threads: 2, ..small() };
        let render = |out: &SweepOutcome| {
            let mut buf = Vec::new();
            write_csv(&out.records, &mut buf, false).unwrap();
            String::from_utf8(buf).unwrap()
        };
        let a = render(&sweep(&cfg).unwrap());
        let b = render(&sweep(&BenchConfig { threads: 1, ..cfg }).unwrap());
        assert_eq!(a, b);
        assert!(a.starts_with(&CSV_HEADER.join(",")));
    }

    #[test]
    fn empty_record_list_is_header_only() {
        let mut buf = Vec::new();
        write_csv(&[], &mut buf, true).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), CSV_HEADER.join(",") + "\n");
    }

    #[test]
    fn oversized_cylinder_is_a_recorded_failure() {
        let cfg = BenchConfig {
            families: vec![Family::Hypercylinder],
            structures: vec![Structure::Splitreduce],
            dims: vec![3],
            eps: vec![0.1],
            ..small()
        };
        let out = sweep(&cfg).unwrap();
        assert!(out.records.is_empty());
        assert_eq!(out.failures.len(), 1);
        assert!(summary(&out).contains("failed hypercylinder/splitreduce"));
    }

    #[test]
    fn sum_tq_shrinks_as_t_grows() {
        let body = gen_random_tangent(2, 40, 3).unwrap();
        let cf = CanonicalForm::identity(body).unwrap().with_eps_abs(0.02);
        let sums: Vec<usize> = [1, 2, 4, 8, 16]
            .iter()
            .map(|&t| build(&cf, t, false).unwrap().space_report().sum_tq)
            .collect();
        let nodes: Vec<usize> = [1, 2, 4, 8, 16]
            .iter()
            .map(|&t| build(&cf, t, false).unwrap().space_report().nodes)
            .collect();
        assert!(sums.windows(2).all(|w| w[1] <= w[0]), "{sums:?}");
        assert!(nodes.windows(2).all(|w| w[1] <= w[0]), "{nodes:?}");
    }

    #[test]
    fn vertices_of_generated_bodies_exist() {
        let cfg = BenchConfig::default();
        for &f in &cfg.families {
            assert!(enumerate_vertices(&cfg.body(f, 2, 0.05, 4.0).unwrap()).is_ok());
        }
    }
}
