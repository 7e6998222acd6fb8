use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use rieszcap::asymptotics::{
    log_limit_verify, multiscale_verify, LogLimitOptions, LogLimitReport, MultiscaleOptions, MultiscaleReport,
};
use rieszcap::capacity::{capacity, CapacityProblem, Resolution, UniformGrid};
use rieszcap::conformal::{dimension_dichotomy, ray_length, ConformalModel, Dichotomy, EquationKind, LengthVerdict};
use rieszcap::geometry::{Bounds, MetricChart, PointSet, Warp};
use rieszcap::io::{self, fmt_f64, MeasureFile};
use rieszcap::lp::LpMethod;
use rieszcap::potential::{eval_potential, KernelSpec, PotentialValue, Summation, TreeOptions};
use rieszcap::scalar::dist;
use rieszcap::thinness::{find_avoiding_ray, thinness_test, RayOptions, RayResult, ThinnessOptions, ThinnessReport};
use rieszcap::{Domain, Error, Measure, Points, Region};
use rieszcap_cli::fixtures;
use rieszcap_cli::report::{read_report, Report};
use rieszcap_cli::{exit_code, EXIT_DOMAIN, EXIT_OK, EXIT_VERDICT};

#[derive(Parser)]
#[command(name = "rieszcap", version, about = "Riesz potentials, capacities and thinness of sets near a point")]
struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Where to write the report (default: standard output).
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the potential of a measure at a list of points.
    Potential(PotentialArgs),
    /// Outer capacity of a set relative to a bounded domain.
    Capacity(CapacityArgs),
    /// Capacity series of a set on dyadic annuli about a point.
    Thinness(ThinnessArgs),
    /// Search for a ray from a point that avoids a thin set.
    Ray(RayArgs),
    /// Split potential bound near a point of the support.
    Multiscale(MultiscaleArgs),
    /// Limit of the log potential over log(1/|x - p|).
    Loglimit(LogLimitArgs),
    /// Length exponent, ray length and dimension verdict.
    Conformal(ConformalArgs),
    /// Write a fixture set, measure or point list.
    Sample(SampleArgs),
    /// Turn a report into plot-ready CSV tables.
    Replot(ReplotArgs),
}

#[derive(Args, Serialize)]
struct KernelArgs {
    /// Ambient dimension (default: that of the input).
    #[arg(long)]
    n: Option<usize>,
    /// Kernel order; `alpha = n` selects the logarithmic kernel.
    #[arg(long)]
    alpha: f64,
    /// Diameter `D` for the logarithmic kernel.
    #[arg(long)]
    diameter: Option<f64>,
}

impl KernelArgs {
    fn kernel(&self, dim: usize, default_diameter: Option<f64>) -> Result<KernelSpec<f64>> {
        let n = self.n.unwrap_or(dim);
        if n != dim {
            return Err(Error::DimensionMismatch { expected: n, found: dim }.into());
        }
        let d = if self.alpha == n as f64 { self.diameter.or(default_diameter) } else { None };
        if self.alpha == n as f64 && d.is_none() {
            return Err(Error::InvalidParameter("the logarithmic kernel needs --diameter".into()).into());
        }
        Ok(KernelSpec::new(n, self.alpha, d)?)
    }
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum MethodArg {
    Naive,
    Tree,
}

#[derive(Args, Serialize)]
struct PotentialArgs {
    /// Measure file: CSV `x_1,...,x_n,weight` or JSON.
    #[arg(long)]
    measure: PathBuf,
    /// Point file: CSV `x_1,...,x_n`.
    #[arg(long)]
    points: PathBuf,
    #[command(flatten)]
    kernel: KernelArgs,
    #[arg(long, value_enum, default_value_t = MethodArg::Naive)]
    method: MethodArg,
    #[arg(long, default_value_t = 0.3)]
    theta: f64,
    #[arg(long, default_value_t = 1e-8)]
    tolerance: f64,
    #[arg(long, default_value_t = 16)]
    leaf_size: usize,
    /// Bi-Lipschitz warp as JSON, e.g. `{"kind":"diagonal","scales":[1,2]}`.
    #[arg(long)]
    warp: Option<String>,
    /// Write `x_1,...,x_n,value` rows here instead of into the report.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Serialize, serde::Deserialize)]
struct PotentialPayload {
    kernel: KernelSpec<f64>,
    method: Summation<f64>,
    n_atoms: usize,
    n_points: usize,
    infinite: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    max_relative_bound: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    theta_used: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    csv: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    points: Option<Points>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    values: Option<Vec<PotentialValue<f64>>>,
}

#[derive(Args, Serialize)]
struct CapacityArgs {
    /// Region JSON `{"primitives":[...]}`.
    #[arg(long)]
    set: PathBuf,
    /// Domain as JSON (inline or a file), e.g. `{"kind":"ball","center":[0,0,0],"radius":2}`;
    /// defaults to the ball of radius 2 about the origin.
    #[arg(long)]
    domain: Option<String>,
    #[command(flatten)]
    kernel: KernelArgs,
    /// Spacing of a uniform site lattice; without it the layout is adaptive.
    #[arg(long)]
    grid_h: Option<f64>,
    /// Spacing of the uniform sample lattice (default: `--grid-h`).
    #[arg(long)]
    grid_he: Option<f64>,
    /// Kernel truncation distance.
    #[arg(long)]
    trunc: Option<f64>,
    /// Adaptive layout: points per length scale.
    #[arg(long, default_value_t = 6.0)]
    pps: f64,
    #[arg(long, default_value_t = 2500)]
    max_samples: usize,
    #[arg(long, default_value_t = 12_000)]
    max_sites: usize,
    /// Also write the witness measure as CSV.
    #[arg(long)]
    witness: Option<PathBuf>,
}

#[derive(Serialize, serde::Deserialize)]
struct CapacityPayload {
    value: f64,
    dual_bound: f64,
    n_atoms: usize,
    n_constraints: usize,
    gap: f64,
    slackness: f64,
    min_potential: f64,
    h: f64,
    h_e: f64,
    h_trunc: f64,
    layout: String,
    method: LpMethod,
    pivots: usize,
    witness: MeasureFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    witness_file: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct ThinnessArgs {
    /// Region JSON.
    #[arg(long)]
    set: PathBuf,
    /// Base point (default: origin).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    point: Option<Vec<f64>>,
    #[arg(long)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    delta: f64,
    #[arg(long, default_value_t = 1)]
    start: i32,
    #[arg(long, default_value_t = 12)]
    shells: usize,
    /// Points per length scale in each shell problem.
    #[arg(long, default_value_t = 4.0)]
    pps: f64,
    /// Points per length scale in the sphere problem.
    #[arg(long, default_value_t = 4.0)]
    sphere_pps: f64,
}

impl ThinnessArgs {
    fn options(&self) -> ThinnessOptions<f64> {
        ThinnessOptions {
            start: self.start,
            shells: self.shells,
            resolution: Resolution::default().with_points_per_scale(self.pps),
            sphere_resolution: Resolution::default().with_points_per_scale(self.sphere_pps),
            ..ThinnessOptions::default()
        }
    }
}

#[derive(Args, Serialize)]
struct RayArgs {
    #[command(flatten)]
    thinness: ThinnessArgs,
    /// Number of candidate directions.
    #[arg(long, default_value_t = 2000)]
    samples: usize,
    /// Fraction of the sphere constant the tail series must stay below.
    #[arg(long, default_value_t = 0.5)]
    budget: f64,
}

#[derive(Args, Serialize)]
struct MultiscaleArgs {
    #[arg(long)]
    measure: PathBuf,
    /// Candidate base points, CSV (default: `--point`).
    #[arg(long)]
    candidates: Option<PathBuf>,
    /// Single candidate (default: origin).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    point: Option<Vec<f64>>,
    #[arg(long)]
    d: f64,
    #[arg(long)]
    alpha: f64,
    #[arg(long, default_value_t = 0.25)]
    delta: f64,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, default_value_t = 1)]
    start: i32,
    #[arg(long, default_value_t = 8)]
    shells: usize,
    /// Samples per shell.
    #[arg(long, default_value_t = 200)]
    samples: usize,
    #[arg(long, default_value_t = 4.0)]
    sphere_pps: f64,
}

#[derive(Args, Serialize)]
struct LogLimitArgs {
    #[arg(long)]
    measure: PathBuf,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    point: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0.0625)]
    delta: f64,
    /// Diameter of the domain (default: that of the smallest ball about the
    /// point holding every atom and the first shell).
    #[arg(long)]
    diameter: Option<f64>,
    #[arg(long, default_value_t = 1)]
    start: i32,
    #[arg(long, default_value_t = 10)]
    shells: usize,
    #[arg(long, default_value_t = 100)]
    samples: usize,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum KindArg {
    Scalar,
    QCurvatureHigh,
    #[value(name = "q-curvature-4")]
    #[serde(rename = "q-curvature-4")]
    QCurvature4,
}

#[derive(Args, Serialize)]
struct ConformalArgs {
    #[arg(long, value_enum)]
    kind: KindArg,
    /// Ambient dimension (4 for `q-curvature-4`).
    #[arg(long)]
    n: Option<usize>,
    /// Dimension of the singular set.
    #[arg(long)]
    d: Option<f64>,
    /// Atom mass (`q-curvature-4`).
    #[arg(long)]
    mass: Option<f64>,
    /// Constant `C` of the potential bound.
    #[arg(long = "const", default_value_t = 1.0)]
    constant: f64,
    #[arg(long, default_value_t = 1.0)]
    l0: f64,
    /// Gauss-Legendre points per dyadic cell.
    #[arg(long, default_value_t = 10)]
    points: usize,
}

#[derive(Serialize, serde::Deserialize)]
struct ConformalPayload {
    #[serde(flatten)]
    dichotomy: Dichotomy<f64>,
    length: LengthVerdict<f64>,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Fixture {
    /// Round sphere of `--radius` (region).
    Sphere,
    /// Balls of radius `4^-i delta` along `e_1` (region).
    ThinFamily,
    /// Balls of radius `2^(-i-2) delta` along `e_1` (region).
    NonthinFamily,
    /// Thin ball family in random directions (region).
    ThinRandom,
    /// Concentric spheres blocking every direction (region).
    Cone,
    /// Equal atoms on the unit segment along `e_1` (measure).
    Segment,
    /// Uniform atoms in the cube `[-radius, radius]^n` (measure).
    Cube,
    /// Uniform atoms in the ball of `--radius` (measure).
    Ball,
    /// Equal atoms on the sphere of `--radius` (measure).
    SphereMeasure,
    /// Uniform points in the cube `[-radius, radius]^n`.
    Points,
}

#[derive(Args, Serialize)]
struct SampleArgs {
    #[arg(value_enum)]
    fixture: Fixture,
    /// Destination of the generated data.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 3)]
    n: usize,
    /// Number of primitives, atoms or points.
    #[arg(long)]
    count: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    delta: f64,
    #[arg(long, default_value_t = 1.0)]
    radius: f64,
    /// Total mass of the generated atoms.
    #[arg(long, default_value_t = 1.0)]
    mass: f64,
    /// Extra atom of this mass at the origin.
    #[arg(long, default_value_t = 0.0)]
    atom: f64,
}

#[derive(Serialize, serde::Deserialize)]
struct SamplePayload {
    fixture: String,
    format: String,
    rows: usize,
    file: PathBuf,
}

#[derive(Args, Serialize)]
struct ReplotArgs {
    /// Report written by another subcommand.
    #[arg(long)]
    report: PathBuf,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_DOMAIN,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let code = run(cli).unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        exit_code(&e)
    });
    std::process::exit(code);
}

fn run(cli: Cli) -> Result<i32> {
    if let Some(t) = cli.threads {
        if t == 0 {
            bail!(Error::InvalidParameter("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global().context("thread pool")?;
    }
    let out = Output { seed: cli.seed, path: cli.output.clone(), start: Instant::now() };
    match &cli.command {
        Command::Potential(a) => potential(&out, a),
        Command::Capacity(a) => capacity_cmd(&out, a),
        Command::Thinness(a) => thinness(&out, a),
        Command::Ray(a) => ray(&out, a),
        Command::Multiscale(a) => multiscale(&out, a),
        Command::Loglimit(a) => loglimit(&out, a),
        Command::Conformal(a) => conformal(&out, a),
        Command::Sample(a) => sample(&out, a),
        Command::Replot(a) => replot(&out, a),
    }
}

struct Output {
    seed: u64,
    path: Option<PathBuf>,
    start: Instant,
}

impl Output {
    fn text(&self, text: &str) -> Result<()> {
        match &self.path {
            Some(p) => io::write_text(p, text)?,
            None => print!("{text}"),
        }
        Ok(())
    }

    fn report<C: Serialize, P: Serialize>(&self, name: &str, config: &C, payload: &P) -> Result<()> {
        let r = Report::new(name, self.seed, config, self.start.elapsed().as_secs_f64(), payload);
        let mut s = serde_json::to_string_pretty(&r)?;
        s.push('\n');
        self.text(&s)
    }
}

fn base_point(point: &Option<Vec<f64>>, dim: usize) -> Result<Vec<f64>> {
    let p = point.clone().unwrap_or_else(|| vec![0.0; dim]);
    if p.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: p.len() }.into());
    }
    Ok(p)
}

fn region_dim(e: &Region, flag: Option<usize>) -> Result<usize> {
    match (e.dim(), flag) {
        (Some(d), _) => Ok(d),
        (None, Some(n)) => Ok(n),
        (None, None) => bail!(Error::InvalidParameter("empty set: pass --n".into())),
    }
}

fn parse_domain(spec: Option<&str>, n: usize) -> Result<Domain> {
    let Some(spec) = spec else {
        return Ok(Domain::ball(vec![0.0; n], 2.0)?);
    };
    let (text, name) = if spec.trim_start().starts_with('{') {
        (spec.to_string(), "--domain".to_string())
    } else {
        (io::read_text(Path::new(spec))?, spec.to_string())
    };
    let bounds: Bounds<f64> = serde_json::from_str(&text)
        .map_err(|e| Error::Parse { path: name, line: e.line(), message: e.to_string() })?;
    let d = Domain::new(bounds)?;
    if d.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, found: d.dim() }.into());
    }
    Ok(d)
}

fn potential(out: &Output, a: &PotentialArgs) -> Result<i32> {
    let mu = io::read_measure(&a.measure)?;
    let pts = io::read_points(&a.points)?;
    if pts.dim() != mu.dim() {
        return Err(Error::DimensionMismatch { expected: mu.dim(), found: pts.dim() }.into());
    }
    let kernel = a.kernel.kernel(mu.dim(), None)?;
    let method = match a.method {
        MethodArg::Naive => Summation::Naive,
        MethodArg::Tree => Summation::Tree(TreeOptions { theta: a.theta, tolerance: a.tolerance, leaf_size: a.leaf_size }),
    };
    let metric = match &a.warp {
        None => MetricChart::Euclidean,
        Some(s) => {
            let w: Warp<f64> = serde_json::from_str(s)
                .map_err(|e| Error::Parse { path: "--warp".into(), line: e.line(), message: e.to_string() })?;
            MetricChart::warped(w)?
        }
    };
    let field = eval_potential(&mu, &kernel, &pts, &metric, method)?;
    let infinite = field.values.iter().filter(|v| v.is_infinite()).count();
    let mut payload = PotentialPayload {
        kernel,
        method,
        n_atoms: mu.len(),
        n_points: pts.len(),
        infinite,
        max_relative_bound: field.max_relative_bound(),
        theta_used: field.theta_used,
        csv: None,
        points: None,
        values: None,
    };
    match &a.csv {
        Some(path) => {
            let rows = field.points.iter().zip(&field.values).map(|(p, v)| (p, vec![v.to_float()]));
            io::write_text(path, &io::table_csv(rows))?;
            payload.csv = Some(path.clone());
        }
        None => {
            payload.points = Some(field.points);
            payload.values = Some(field.values);
        }
    }
    out.report("potential", a, &payload)?;
    Ok(EXIT_OK)
}

fn capacity_cmd(out: &Output, a: &CapacityArgs) -> Result<i32> {
    let e = io::read_region(&a.set)?;
    let n = region_dim(&e, a.kernel.n)?;
    let omega = parse_domain(a.domain.as_deref(), n)?;
    let kernel = a.kernel.kernel(n, Some(omega.diameter()))?;
    let (problem, layout) = match a.grid_h {
        Some(h) => {
            let mut grid = UniformGrid::new(h, a.grid_he.unwrap_or(h));
            if let Some(t) = a.trunc {
                grid.h_trunc = t;
            }
            (CapacityProblem::uniform(&e, &omega, &kernel, &grid)?, "uniform")
        }
        None => {
            let res = Resolution {
                h_trunc: a.trunc,
                max_samples: a.max_samples,
                max_sites: a.max_sites,
                ..Resolution::default().with_points_per_scale(a.pps)
            };
            (CapacityProblem::adaptive(&e, None, &omega, &kernel, &res)?, "adaptive")
        }
    };
    let r = capacity(&problem)?;
    if let Some(path) = &a.witness {
        io::write_text(path, &io::measure_csv(&r.witness))?;
    }
    let payload = CapacityPayload {
        value: r.value,
        dual_bound: r.dual_bound,
        n_atoms: r.n_sites,
        n_constraints: r.n_samples,
        gap: r.gap,
        slackness: r.slackness,
        min_potential: r.min_potential,
        h: r.h,
        h_e: r.h_e,
        h_trunc: r.h_trunc,
        layout: layout.into(),
        method: r.method,
        pivots: r.pivots,
        witness: MeasureFile::from_measure(&r.witness),
        witness_file: a.witness.clone(),
    };
    out.report("capacity", a, &payload)?;
    Ok(EXIT_OK)
}

fn thinness(out: &Output, a: &ThinnessArgs) -> Result<i32> {
    let e = io::read_region(&a.set)?;
    let n = region_dim(&e, a.point.as_ref().map(|p| p.len()))?;
    let p = base_point(&a.point, n)?;
    let r = thinness_test(&e, &p, a.alpha, a.delta, &a.options())?;
    out.report("thinness", a, &r)?;
    Ok(EXIT_OK)
}

fn ray(out: &Output, a: &RayArgs) -> Result<i32> {
    let t = &a.thinness;
    let e = io::read_region(&t.set)?;
    let n = region_dim(&e, t.point.as_ref().map(|p| p.len()))?;
    let p = base_point(&t.point, n)?;
    let opts = RayOptions { thinness: t.options(), samples: a.samples, budget: a.budget };
    let r = find_avoiding_ray(&e, &p, t.alpha, t.delta, &opts)?;
    out.report("ray", a, &r)?;
    Ok(if r.found() { EXIT_OK } else { EXIT_VERDICT })
}

fn multiscale(out: &Output, a: &MultiscaleArgs) -> Result<i32> {
    let mu = io::read_measure(&a.measure)?;
    let s = match &a.candidates {
        Some(path) => io::read_points(path)?,
        None => PointSet::from_rows(mu.dim(), &[base_point(&a.point, mu.dim())?])?,
    };
    let opts = MultiscaleOptions {
        i0: a.start,
        shells: a.shells,
        samples_per_shell: a.samples,
        lambda: a.lambda,
        epsilon: a.epsilon,
        sphere_resolution: Resolution::default().with_points_per_scale(a.sphere_pps),
        ..MultiscaleOptions::default()
    };
    let r = multiscale_verify(&mu, &s, a.d, a.alpha, a.delta, &opts)?;
    out.report("multiscale", a, &r)?;
    Ok(EXIT_OK)
}

fn loglimit(out: &Output, a: &LogLimitArgs) -> Result<i32> {
    let mu = io::read_measure(&a.measure)?;
    let p = base_point(&a.point, mu.dim())?;
    let diameter = a.diameter.unwrap_or_else(|| {
        let far = mu.iter().map(|(y, _)| dist(y, &p)).fold(2.0 * a.delta, f64::max);
        2.0 * far
    });
    let opts = LogLimitOptions { i0: a.start, shells: a.shells, samples_per_shell: a.samples, diameter };
    let r = log_limit_verify(&mu, &p, a.delta, &opts)?;
    out.report("loglimit", a, &r)?;
    Ok(EXIT_OK)
}

fn conformal(out: &Output, a: &ConformalArgs) -> Result<i32> {
    let kind = match a.kind {
        KindArg::Scalar => EquationKind::Scalar,
        KindArg::QCurvatureHigh => EquationKind::QCurvatureHigh,
        KindArg::QCurvature4 => EquationKind::QCurvature4,
    };
    let n = match (a.n, kind) {
        (Some(n), _) => n,
        (None, EquationKind::QCurvature4) => 4,
        (None, _) => bail!(Error::InvalidParameter("--n is required".into())),
    };
    let model = ConformalModel { kind, n, d: a.d, mass: a.mass, constant: a.constant, l0: a.l0 };
    let payload = ConformalPayload { dichotomy: dimension_dichotomy(&model)?, length: ray_length(&model, a.points)? };
    out.report("conformal", a, &payload)?;
    Ok(EXIT_OK)
}

fn sample(out: &Output, a: &SampleArgs) -> Result<i32> {
    let mut rng = ChaCha8Rng::seed_from_u64(out.seed);
    let n = a.n;
    if n < 2 {
        bail!(Error::InvalidParameter("--n must be at least 2".into()));
    }
    let count = |default: usize| a.count.unwrap_or(default);
    let balls = || i32::try_from(count(16)).unwrap_or(i32::MAX);
    enum Data {
        Region(Region),
        Measure(Measure),
        Points(Points),
    }
    let data = match a.fixture {
        Fixture::Sphere => Data::Region(fixtures::sphere_set(n, a.radius)),
        Fixture::ThinFamily => Data::Region(fixtures::thin_family(n, a.delta, balls())),
        Fixture::NonthinFamily => Data::Region(fixtures::nonthin_family(n, a.delta, balls())),
        Fixture::ThinRandom => Data::Region(fixtures::random_thin_family(&mut rng, n, a.delta, balls())),
        Fixture::Cone => Data::Region(fixtures::covering_cone(n, a.delta, balls())),
        Fixture::Segment => {
            let mu = fixtures::segment_measure(n, count(2000), a.mass);
            Data::Measure(fixtures::with_atom(mu.atoms().clone(), a.mass, a.atom))
        }
        Fixture::Cube => {
            let pts = fixtures::cube_points(&mut rng, n, count(1000), a.radius);
            Data::Measure(fixtures::with_atom(pts, a.mass, a.atom))
        }
        Fixture::Ball => {
            let pts = fixtures::ball_points(&mut rng, n, count(10_000), a.radius);
            Data::Measure(fixtures::with_atom(pts, a.mass, a.atom))
        }
        Fixture::SphereMeasure => {
            let mu = fixtures::sphere_measure(n, count(1000), a.radius, a.mass);
            Data::Measure(fixtures::with_atom(mu.atoms().clone(), a.mass, a.atom))
        }
        Fixture::Points => Data::Points(fixtures::cube_points(&mut rng, n, count(1000), a.radius)),
    };
    let (text, format, rows) = match &data {
        Data::Region(e) => (serde_json::to_string_pretty(e)? + "\n", "region-json", e.primitives.len()),
        Data::Measure(mu) => (io::measure_csv(mu), "measure-csv", mu.len()),
        Data::Points(p) => (io::points_csv(p), "points-csv", p.len()),
    };
    io::write_text(&a.data, &text)?;
    let fixture = serde_json::to_value(a.fixture)?.as_str().unwrap_or_default().to_string();
    let payload = SamplePayload { fixture, format: format.into(), rows, file: a.data.clone() };
    out.report("sample", a, &payload)?;
    Ok(EXIT_OK)
}

fn csv_row(cells: &[f64]) -> String {
    cells.iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>().join(",")
}

fn thinness_table(r: &ThinnessReport<f64>) -> String {
    let mut s = String::from("shell,radius,term,partial_sum,numerator,denominator\n");
    for (k, i) in r.ladder.indices().enumerate() {
        let row = [r.ladder.radius(i), r.terms[k], r.partial_sums[k], r.numerators[k], r.denominators[k]];
        let _ = writeln!(s, "{i},{}", csv_row(&row));
    }
    s
}

fn replot(out: &Output, a: &ReplotArgs) -> Result<i32> {
    let raw = read_report(&a.report)?;
    let payload = raw.payload;
    let table = match raw.subcommand.as_str() {
        "potential" => {
            let p: PotentialPayload = serde_json::from_value(payload)?;
            match (p.points, p.values, p.csv) {
                (Some(points), Some(values), _) => {
                    io::table_csv(points.iter().zip(&values).map(|(x, v)| (x, vec![v.to_float()])))
                }
                (_, _, Some(csv)) => {
                    let beside = a.report.parent().map(|d| d.join(&csv)).filter(|f| f.exists());
                    let path = if csv.exists() { csv } else { beside.unwrap_or(csv) };
                    io::read_text(&path)?
                }
                _ => bail!("report has neither inline values nor a values file"),
            }
        }
        "capacity" => {
            let p: CapacityPayload = serde_json::from_value(payload)?;
            io::measure_csv(&p.witness.into_measure()?)
        }
        "thinness" => thinness_table(&serde_json::from_value::<ThinnessReport<f64>>(payload)?),
        "ray" => thinness_table(&serde_json::from_value::<RayResult<f64>>(payload)?.report),
        "multiscale" => {
            let r: MultiscaleReport<f64> = serde_json::from_value(payload)?;
            let mut s = String::from(
                "shell,mass,threshold,budget,budget_term,partial_sum,term_i_bound,term_ii_bound,exceptional,samples\n",
            );
            for (k, sh) in r.shells.iter().enumerate() {
                let row = [
                    sh.mass,
                    sh.threshold,
                    sh.budget,
                    r.budget_terms[k],
                    r.budget_partial_sums[k],
                    sh.term_i_bound,
                    sh.term_ii_bound,
                ];
                let _ = writeln!(s, "{},{},{},{}", sh.index, csv_row(&row), sh.exceptional.len(), sh.samples.len());
            }
            s
        }
        "loglimit" => {
            let r: LogLimitReport<f64> = serde_json::from_value(payload)?;
            let mut s = String::from("shell,distance,ratio\n");
            for sh in &r.shells {
                for (d, q) in sh.distances.iter().zip(&sh.ratios) {
                    let _ = writeln!(s, "{},{}", sh.index, csv_row(&[*d, *q]));
                }
            }
            s
        }
        "conformal" => {
            let p: ConformalPayload = serde_json::from_value(payload)?;
            let verdict = serde_json::to_value(p.dichotomy.verdict)?;
            let length = p.length.length.map_or("inf".to_string(), fmt_f64);
            format!(
                "exponent,verdict,length\n{},{},{length}\n",
                fmt_f64(p.dichotomy.exponent),
                verdict.as_str().unwrap_or_default()
            )
        }
        "sample" => {
            let p: SamplePayload = serde_json::from_value(payload)?;
            bail!("sample reports carry no table; the data is in {}", p.file.display())
        }
        other => bail!("unknown subcommand {other:?} in report"),
    };
    out.text(&table)?;
    Ok(EXIT_OK)
}
