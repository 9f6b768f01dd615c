//! Command-line front end: mesh export, single solves, convergence studies,
//! and diagnostic checks for the Kirchhoff plate on polygonal disks.
//!
//! Configuration comes from flags, optionally backed by a `key=value` file
//! (`--config`); flags override the file. Exit status: 0 when the requested
//! work (including any diagnostic tolerance) succeeds, 1 on runtime or check
//! failures, 2 on usage errors.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use platefem::argyris::BcMode;
use platefem::bench::{
    self, curvature_identity_check_with, det_zero_check, energy_identity_check, measure_level,
    ConvergenceRow, Method, PlateProblem,
};
use platefem::dg::DgParams;
use platefem::exact::ExactDiskSolution;
use platefem::geo::Point2;
use platefem::io::{matrix_to_matrix_market, mesh_to_text, p1_fields_to_vtu, write_atomic};
use platefem::mesh::{build_disk_mesh, Triangulation};
use platefem::quadrature::{DEFAULT_EDGE_DEGREE, DEFAULT_VOLUME_DEGREE};
use platefem::{AnalyticField, SmoothField};

/// Environment variable read for the rayon thread count when the run is not
/// deterministic.
const THREADS_ENV: &str = "PLATEFEM_THREADS";

#[derive(Parser)]
#[command(
    name = "platefem",
    version,
    about = "Kirchhoff plate laboratory on polygonal approximations of the unit disk",
    after_help = "Defaults: sigma=0, load f=1, gamma0=gamma1=10, dg degree 2, eps=h3, \
                  levels 1..5. Set PLATEFEM_THREADS together with --deterministic false \
                  to enable threaded linear algebra."
)]
struct Cli {
    /// key=value configuration file; command-line flags override its entries
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Output directory for generated files
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Sequential, bitwise-reproducible runs (true by default); pass
    /// `--deterministic false` to allow threading
    #[arg(long, global = true, value_name = "BOOL")]
    deterministic: Option<bool>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the level-L triangulation as plain text and VTU
    Mesh {
        #[arg(long)]
        level: Option<u32>,
    },
    /// Solve one level and write a solution VTU plus a one-row CSV
    Solve {
        /// argyris | dkt | dg | splitting
        #[arg(long)]
        method: Option<String>,
        #[arg(long)]
        level: Option<u32>,
        /// Boundary treatment for argyris: full | nodal | penalty | penalty-vertex
        #[arg(long)]
        bc: Option<String>,
        /// Poisson ratio in [0, 1)
        #[arg(long)]
        sigma: Option<f64>,
        /// Value-jump penalty factor (dg)
        #[arg(long)]
        gamma0: Option<f64>,
        /// Gradient-jump penalty factor (dg)
        #[arg(long)]
        gamma1: Option<f64>,
        /// Polynomial degree of the dg space
        #[arg(long)]
        degree: Option<u32>,
        /// Boundary penalty size: a number, or a mesh power like `h3`
        #[arg(long)]
        eps: Option<String>,
        /// Also dump the assembled system in MatrixMarket format
        #[arg(long, default_value_t = false)]
        dump_matrix: bool,
    },
    /// Run a convergence study over an inclusive level range and write its CSV
    Study {
        /// argyris | dkt | dg | splitting
        #[arg(long)]
        method: Option<String>,
        /// Inclusive range like 1..5
        #[arg(long)]
        levels: Option<String>,
        #[arg(long)]
        bc: Option<String>,
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long)]
        gamma0: Option<f64>,
        #[arg(long)]
        gamma1: Option<f64>,
        #[arg(long)]
        degree: Option<u32>,
        #[arg(long)]
        eps: Option<String>,
    },
    /// Run a diagnostic check and write a report; exit 0 iff it passes
    Diag {
        /// curvature | energy-identity | det-zero
        #[arg(long)]
        check: Option<String>,
        #[arg(long)]
        level: Option<u32>,
        /// Poisson ratio for the energy-identity check
        #[arg(long)]
        sigma: Option<f64>,
        /// Triangle quadrature degree for the curvature check
        #[arg(long, value_name = "DEG")]
        volume_degree: Option<u32>,
        /// Edge quadrature degree for the curvature check
        #[arg(long, value_name = "DEG")]
        edge_degree: Option<u32>,
    },
}

enum CliError {
    /// Bad flags, bad config values, incompatible combinations → status 2.
    Usage(String),
    /// Failures while doing the work → status 1.
    Runtime(String),
}

impl From<platefem::Error> for CliError {
    fn from(e: platefem::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

type CliResult<T> = Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Configuration file plus helpers that merge flag > file > default.
struct Settings {
    cfg: HashMap<String, String>,
}

const CONFIG_KEYS: &[&str] = &[
    "method",
    "bc",
    "sigma",
    "gamma0",
    "gamma1",
    "degree",
    "eps",
    "level",
    "levels",
    "out",
    "deterministic",
    "check",
    "volume-degree",
    "edge-degree",
];

impl Settings {
    fn load(path: Option<&Path>) -> CliResult<Self> {
        let mut cfg = HashMap::new();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path).map_err(|e| {
                usage(format!("cannot read config '{}': {e}", path.display()))
            })?;
            for (n, line) in text.lines().enumerate() {
                let line = line.split('#').next().unwrap_or("").trim();
                if line.is_empty() {
                    continue;
                }
                let (key, value) = line.split_once('=').ok_or_else(|| {
                    usage(format!("config line {}: expected key=value", n + 1))
                })?;
                let key = key.trim().to_string();
                if !CONFIG_KEYS.contains(&key.as_str()) {
                    return Err(usage(format!("config line {}: unknown key '{key}'", n + 1)));
                }
                cfg.insert(key, value.trim().to_string());
            }
        }
        Ok(Settings { cfg })
    }

    /// Flag wins; else the config value, parsed; else `None`.
    fn merge<T: std::str::FromStr>(&self, flag: Option<T>, key: &str) -> CliResult<Option<T>> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.cfg.get(key) {
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|_| usage(format!("config key '{key}': cannot parse '{raw}'"))),
            None => Ok(None),
        }
    }

    fn merge_or<T: std::str::FromStr>(
        &self,
        flag: Option<T>,
        key: &str,
        default: T,
    ) -> CliResult<T> {
        Ok(self.merge(flag, key)?.unwrap_or(default))
    }
}

/// Boundary penalty size: fixed, or a power of the mesh size.
#[derive(Clone, Copy, Debug)]
enum EpsRule {
    Fixed(f64),
    HPower(f64),
}

impl EpsRule {
    fn value(self, h_max: f64) -> f64 {
        match self {
            EpsRule::Fixed(v) => v,
            EpsRule::HPower(p) => h_max.powf(p),
        }
    }
}

fn parse_eps(s: &str) -> CliResult<EpsRule> {
    let t = s.trim();
    if let Some(rest) = t.strip_prefix('h') {
        let rest = rest.strip_prefix('^').unwrap_or(rest);
        let power = if rest.is_empty() {
            1.0
        } else {
            rest.parse::<f64>()
                .map_err(|_| usage(format!("bad eps rule '{s}': expected h<power> or a number")))?
        };
        if !power.is_finite() {
            return Err(usage(format!("bad eps power in '{s}'")));
        }
        Ok(EpsRule::HPower(power))
    } else {
        let v = t
            .parse::<f64>()
            .map_err(|_| usage(format!("bad eps '{s}': expected h<power> or a number")))?;
        if !(v > 0.0 && v.is_finite()) {
            return Err(usage(format!("eps must be positive and finite, got {v}")));
        }
        Ok(EpsRule::Fixed(v))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum MethodKind {
    Argyris,
    Dkt,
    Dg,
    Splitting,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum BcKind {
    Full,
    Nodal,
    Penalty,
    PenaltyVertex,
}

fn parse_method(s: &str) -> CliResult<MethodKind> {
    match s.trim() {
        "argyris" => Ok(MethodKind::Argyris),
        "dkt" => Ok(MethodKind::Dkt),
        "dg" => Ok(MethodKind::Dg),
        "splitting" => Ok(MethodKind::Splitting),
        other => Err(usage(format!(
            "unknown method '{other}' (expected argyris | dkt | dg | splitting)"
        ))),
    }
}

fn parse_bc(s: &str) -> CliResult<BcKind> {
    match s.trim() {
        "full" => Ok(BcKind::Full),
        "nodal" => Ok(BcKind::Nodal),
        "penalty" => Ok(BcKind::Penalty),
        "penalty-vertex" => Ok(BcKind::PenaltyVertex),
        other => Err(usage(format!(
            "unknown bc '{other}' (expected full | nodal | penalty | penalty-vertex)"
        ))),
    }
}

/// Inclusive `A..B` (also accepts `A..=B` and a single level).
fn parse_levels(s: &str) -> CliResult<Vec<u32>> {
    let t = s.trim();
    let bad = || usage(format!("bad level range '{t}': expected A..B"));
    if let Some((a, b)) = t.split_once("..") {
        let b = b.strip_prefix('=').unwrap_or(b);
        let a: u32 = a.trim().parse().map_err(|_| bad())?;
        let b: u32 = b.trim().parse().map_err(|_| bad())?;
        if a > b {
            return Err(usage(format!("bad level range '{t}': {a} > {b}")));
        }
        Ok((a..=b).collect())
    } else {
        let level: u32 = t.parse().map_err(|_| bad())?;
        Ok(vec![level])
    }
}

/// Fully resolved method configuration; the penalty size may still depend on
/// the mesh, so the concrete [`Method`] is produced per level.
#[derive(Clone, Copy, Debug)]
struct MethodSpec {
    kind: MethodKind,
    bc: BcKind,
    eps: EpsRule,
    gamma0: f64,
    gamma1: f64,
    degree: u32,
}

impl MethodSpec {
    fn method_for_h(&self, h_max: f64) -> Method {
        match self.kind {
            MethodKind::Argyris => Method::Argyris {
                bc: match self.bc {
                    BcKind::Full => BcMode::Full,
                    BcKind::Nodal => BcMode::NodalReduced,
                    BcKind::Penalty => BcMode::Penalty(self.eps.value(h_max)),
                    BcKind::PenaltyVertex => {
                        BcMode::PenaltyVertexQuadrature(self.eps.value(h_max))
                    }
                },
            },
            MethodKind::Dkt => Method::Dkt,
            MethodKind::Dg => Method::Dg {
                params: DgParams {
                    gamma0: self.gamma0,
                    gamma1: self.gamma1,
                    degree: self.degree,
                },
            },
            MethodKind::Splitting => Method::Splitting,
        }
    }

    /// File-name label; distinguishes the argyris boundary treatments.
    fn label(&self) -> &'static str {
        match (self.kind, self.bc) {
            (MethodKind::Argyris, BcKind::Full) => "argyris-full",
            (MethodKind::Argyris, BcKind::Nodal) => "argyris-nodal",
            (MethodKind::Argyris, BcKind::Penalty) => "argyris-penalty",
            (MethodKind::Argyris, BcKind::PenaltyVertex) => "argyris-penalty-vertex",
            (MethodKind::Dkt, _) => "dkt",
            (MethodKind::Dg, _) => "dg",
            (MethodKind::Splitting, _) => "splitting",
        }
    }
}

struct SolveArgs {
    method: Option<String>,
    bc: Option<String>,
    gamma0: Option<f64>,
    gamma1: Option<f64>,
    degree: Option<u32>,
    eps: Option<String>,
}

fn resolve_method(settings: &Settings, args: SolveArgs) -> CliResult<MethodSpec> {
    let method = settings
        .merge(args.method, "method")?
        .ok_or_else(|| usage("missing --method (argyris | dkt | dg | splitting)"))?;
    let kind = parse_method(&method)?;
    let bc = match settings.merge(args.bc, "bc")? {
        Some(raw) => {
            if kind != MethodKind::Argyris {
                return Err(usage(format!(
                    "--bc only applies to --method argyris, not '{method}'"
                )));
            }
            parse_bc(&raw)?
        }
        None => BcKind::Nodal,
    };
    let eps = match settings.merge(args.eps, "eps")? {
        Some(raw) => parse_eps(&raw)?,
        None => EpsRule::HPower(3.0),
    };
    let gamma0 = settings.merge_or(args.gamma0, "gamma0", platefem::dg::DEFAULT_GAMMA)?;
    let gamma1 = settings.merge_or(args.gamma1, "gamma1", platefem::dg::DEFAULT_GAMMA)?;
    let degree = settings.merge_or(args.degree, "degree", platefem::dg::DEFAULT_DEGREE)?;
    Ok(MethodSpec {
        kind,
        bc,
        eps,
        gamma0,
        gamma1,
        degree,
    })
}

/// Validate the resolved problem once, with a representative mesh size, so
/// incompatible combinations fail as usage errors before any work happens.
fn validate_problem(spec: &MethodSpec, sigma: f64) -> CliResult<()> {
    let problem = PlateProblem {
        sigma,
        method: spec.method_for_h(0.5),
    };
    problem.validate().map_err(|e| usage(e.to_string()))
}

fn apply_parallelism(deterministic: bool) -> CliResult<()> {
    if deterministic {
        faer::set_global_parallelism(faer::Par::Seq);
        return Ok(());
    }
    if let Ok(raw) = std::env::var(THREADS_ENV) {
        let n: usize = raw
            .trim()
            .parse()
            .map_err(|_| usage(format!("{THREADS_ENV}='{raw}' is not a thread count")))?;
        faer::set_global_parallelism(faer::Par::rayon(n));
    }
    Ok(())
}

fn ensure_out_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Runtime(format!("cannot create '{}': {e}", dir.display())))
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    write_atomic(path, contents)
        .map_err(|e| CliError::Runtime(format!("writing '{}': {e}", path.display())))
}

fn paraboloid() -> impl SmoothField {
    AnalyticField {
        value: |x: Point2| 1.0 - x.dot(x),
        gradient: |x: Point2| [-2.0 * x.x, -2.0 * x.y],
        hessian: |_| [-2.0, 0.0, -2.0],
    }
}

fn run_mesh(settings: &Settings, out: &Path, level: Option<u32>) -> CliResult<ExitCode> {
    let level = settings.merge_or(level, "level", 3)?;
    let mesh = build_disk_mesh(level)?;
    ensure_out_dir(out)?;

    let text_path = out.join(format!("mesh-level{level}.txt"));
    write_file(&text_path, &mesh_to_text(&mesh))?;

    let flags: Vec<f64> = mesh
        .boundary_vertex
        .iter()
        .map(|&b| if b { 1.0 } else { 0.0 })
        .collect();
    let vtu = p1_fields_to_vtu(&mesh, &[("boundary", &flags)])?;
    let vtu_path = out.join(format!("mesh-level{level}.vtu"));
    write_file(&vtu_path, &vtu)?;

    let stats = mesh.stats();
    println!(
        "mesh level {level}: {} vertices, {} triangles, {} sides, h_max {:.6}, area {:.6}",
        mesh.n_vertices(),
        mesh.n_triangles(),
        mesh.n_sides(),
        stats.h_max,
        stats.area
    );
    println!("wrote {}", text_path.display());
    println!("wrote {}", vtu_path.display());
    Ok(ExitCode::SUCCESS)
}

#[allow(clippy::too_many_arguments)]
fn run_solve(
    settings: &Settings,
    out: &Path,
    level: Option<u32>,
    sigma: Option<f64>,
    args: SolveArgs,
    dump_matrix: bool,
) -> CliResult<ExitCode> {
    let level = settings.merge_or(level, "level", 3)?;
    let sigma = settings.merge_or(sigma, "sigma", 0.0)?;
    let spec = resolve_method(settings, args)?;
    validate_problem(&spec, sigma)?;

    let mesh = build_disk_mesh(level)?;
    let problem = PlateProblem {
        sigma,
        method: spec.method_for_h(mesh.h_max()),
    };
    let (mut rows, solution) = {
        let (row, solution) = measure_level(&problem, &mesh, &|_| 1.0)?;
        (vec![row], solution)
    };
    bench::fill_rates(&mut rows);
    ensure_out_dir(out)?;

    let label = spec.label();
    let csv = bench::rows_to_csv(&rows);
    let csv_path = out.join(format!("solve-{label}-level{level}.csv"));
    write_file(&csv_path, &csv)?;

    let field = solution.vertex_field()?;
    let vtu = p1_fields_to_vtu(&mesh, &[("deflection", &field.vertex_values)])?;
    let vtu_path = out.join(format!("solution-{label}-level{level}.vtu"));
    write_file(&vtu_path, &vtu)?;

    if dump_matrix {
        if let bench::StudySolution::Dg { ah, sh, .. } = &solution {
            let mm_path = out.join(format!("matrix-{label}-level{level}.mtx"));
            let sum = platefem::sparse::SymSparseMatrix::assemble(&{
                let mut t = platefem::sparse::TripletList::new(ah.dim());
                for i in 0..ah.dim() {
                    for (j, v) in ah.row(i) {
                        t.push(i, j, v);
                    }
                    for (j, v) in sh.row(i) {
                        t.push(i, j, v);
                    }
                }
                t
            })?;
            write_file(&mm_path, &matrix_to_matrix_market(&sum))?;
            println!("wrote {}", mm_path.display());
        } else {
            eprintln!("note: --dump-matrix currently exports the dg system only");
        }
    }

    print!("{csv}");
    println!("wrote {}", csv_path.display());
    println!("wrote {}", vtu_path.display());
    Ok(ExitCode::SUCCESS)
}

fn run_study(
    settings: &Settings,
    out: &Path,
    levels: Option<String>,
    sigma: Option<f64>,
    args: SolveArgs,
) -> CliResult<ExitCode> {
    let levels = match settings.merge(levels, "levels")? {
        Some(raw) => parse_levels(&raw)?,
        None => (1..=5).collect(),
    };
    let sigma = settings.merge_or(sigma, "sigma", 0.0)?;
    let spec = resolve_method(settings, args)?;
    validate_problem(&spec, sigma)?;

    let rows = bench::convergence_study_with(
        &|mesh: &Triangulation| {
            Ok(PlateProblem {
                sigma,
                method: spec.method_for_h(mesh.h_max()),
            })
        },
        &levels,
        &|_| 1.0,
    )?;

    ensure_out_dir(out)?;
    let label = spec.label();
    let first = levels.first().copied().unwrap_or(0);
    let last = levels.last().copied().unwrap_or(0);
    let csv = bench::rows_to_csv(&rows);
    let csv_path = out.join(format!("study-{label}-levels{first}-{last}.csv"));
    write_file(&csv_path, &csv)?;

    print!("{csv}");
    println!("wrote {}", csv_path.display());

    let failures: Vec<&ConvergenceRow> = rows.iter().filter(|r| r.error.is_some()).collect();
    if failures.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        for row in failures {
            eprintln!(
                "level {} failed: {}",
                row.level,
                row.error.as_deref().unwrap_or("unknown")
            );
        }
        Ok(ExitCode::FAILURE)
    }
}

fn run_diag(
    settings: &Settings,
    out: &Path,
    check: Option<String>,
    level: Option<u32>,
    sigma: Option<f64>,
    volume_degree: Option<u32>,
    edge_degree: Option<u32>,
) -> CliResult<ExitCode> {
    let check = settings
        .merge(check, "check")?
        .ok_or_else(|| usage("missing --check (curvature | energy-identity | det-zero)"))?;
    let level = settings.merge_or(level, "level", 3)?;
    let sigma = settings.merge_or(sigma, "sigma", 0.0)?;
    let volume_degree = settings.merge_or(volume_degree, "volume-degree", DEFAULT_VOLUME_DEGREE)?;
    let edge_degree = settings.merge_or(edge_degree, "edge-degree", DEFAULT_EDGE_DEGREE)?;

    let mut report = String::new();
    let pass = match check.trim() {
        "curvature" => {
            let v = paraboloid();
            let result = curvature_identity_check_with(&v, level, volume_degree, edge_degree)
                .map_err(|e| usage(e.to_string()))?;
            let defect = std::f64::consts::PI - result.polygon_area;
            let bound = 4.0 * defect + 1e-12;
            let pass = result.gap <= bound;
            let _ = writeln!(report, "check = curvature");
            let _ = writeln!(report, "level = {level}");
            let _ = writeln!(report, "field = 1 - r^2");
            let _ = writeln!(report, "volume_integral = {:.16e}", result.volume_integral);
            let _ = writeln!(report, "boundary_integral = {:.16e}", result.boundary_integral);
            let _ = writeln!(report, "gap = {:.16e}", result.gap);
            let _ = writeln!(report, "area_defect = {defect:.16e}");
            let _ = writeln!(report, "bound = {bound:.16e}");
            pass
        }
        "energy-identity" => {
            let exact = ExactDiskSolution::new(sigma).map_err(|e| usage(e.to_string()))?;
            let mesh = build_disk_mesh(level)?;
            let space = platefem::argyris::ArgyrisSpace::new(&mesh);
            let coeffs = platefem::argyris::interpolate_canonical(&space, &exact.field());
            let b = platefem::argyris::energy_breakdown(&space, &coeffs)?;
            let result = energy_identity_check(b.laplacian_sq, b.hessian_sq, b.det_integral, sigma);
            let pass = result.rel_gap <= 1e-10;
            let _ = writeln!(report, "check = energy-identity");
            let _ = writeln!(report, "level = {level}");
            let _ = writeln!(report, "sigma = {sigma}");
            let _ = writeln!(report, "lhs = {:.16e}", result.lhs);
            let _ = writeln!(report, "rhs = {:.16e}", result.rhs);
            let _ = writeln!(report, "rel_gap = {:.16e}", result.rel_gap);
            let _ = writeln!(report, "tolerance = 1e-10");
            pass
        }
        "det-zero" => {
            let result = det_zero_check(level)?;
            let bound = 1e-9 * result.hessian_sq;
            let pass = result.det_integral.abs() <= bound;
            let _ = writeln!(report, "check = det-zero");
            let _ = writeln!(report, "level = {level}");
            let _ = writeln!(report, "det_integral = {:.16e}", result.det_integral);
            let _ = writeln!(report, "hessian_sq = {:.16e}", result.hessian_sq);
            let _ = writeln!(report, "bound = {bound:.16e}");
            pass
        }
        other => {
            return Err(usage(format!(
                "unknown check '{other}' (expected curvature | energy-identity | det-zero)"
            )))
        }
    };
    let _ = writeln!(report, "status = {}", if pass { "PASS" } else { "FAIL" });

    ensure_out_dir(out)?;
    let path = out.join(format!("diag-{}-level{level}.txt", check.trim()));
    write_file(&path, &report)?;
    print!("{report}");
    println!("wrote {}", path.display());
    Ok(if pass { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn real_main() -> CliResult<ExitCode> {
    let cli = Cli::parse();
    let settings = Settings::load(cli.config.as_deref())?;
    let out = match settings.merge(cli.out, "out")? {
        Some(dir) => dir,
        None => PathBuf::from("out"),
    };
    let deterministic = settings.merge_or(cli.deterministic, "deterministic", true)?;
    apply_parallelism(deterministic)?;

    match cli.command {
        Command::Mesh { level } => run_mesh(&settings, &out, level),
        Command::Solve {
            method,
            level,
            bc,
            sigma,
            gamma0,
            gamma1,
            degree,
            eps,
            dump_matrix,
        } => run_solve(
            &settings,
            &out,
            level,
            sigma,
            SolveArgs {
                method,
                bc,
                gamma0,
                gamma1,
                degree,
                eps,
            },
            dump_matrix,
        ),
        Command::Study {
            method,
            levels,
            bc,
            sigma,
            gamma0,
            gamma1,
            degree,
            eps,
        } => run_study(
            &settings,
            &out,
            levels,
            sigma,
            SolveArgs {
                method,
                bc,
                gamma0,
                gamma1,
                degree,
                eps,
            },
        ),
        Command::Diag {
            check,
            level,
            sigma,
            volume_degree,
            edge_degree,
        } => run_diag(
            &settings,
            &out,
            check,
            level,
            sigma,
            volume_degree,
            edge_degree,
        ),
    }
}

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => code,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
