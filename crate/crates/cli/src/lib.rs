//! Command-line front end for `qrdyn`.
//!
//! Every subcommand wraps one library operation and writes JSON (with the
//! parsed command line echoed under `config`), CSV with a header row, or, for
//! `render`, a binary PPM with a JSON stats file beside it.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use qrdyn::circle::{self, LimitConfig};
use qrdyn::fixed_rays::{self, FixedRay};
use qrdyn::obstruction;
use qrdyn::plane::{self, Window};
use qrdyn::{blaschke, mobius, MapParams};
use serde::Serialize;
use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_IO: i32 = 74;

/// Environment variable capping the worker threads used by `render`.
pub const THREADS_ENV: &str = "QRDYN_THREADS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] qrdyn::Error),
    #[error("usage: {0}")]
    Usage(String),
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(qrdyn::Error::InvalidParameter(_) | qrdyn::Error::NoBasin(_)) => {
                EXIT_INVALID
            }
            CliError::Core(_) => EXIT_NUMERICAL,
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Io(_) | CliError::Csv(_) | CliError::Json(_) => EXIT_IO,
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser, Serialize)]
#[command(name = "qrdyn", version, about = "Dynamics of H(z) = h(z)² for affine stretches h")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args, Serialize)]
pub struct ParamArgs {
    /// Stretch factor K > 1.
    #[arg(long = "K", allow_hyphen_values = true, conflicts_with = "mu")]
    pub k: Option<f64>,
    /// Stretch direction θ.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "mu")]
    pub theta: Option<f64>,
    /// Complex dilatation as `re,im`, instead of --K/--theta.
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    pub mu: Option<(f64, f64)>,
}

#[derive(Debug, Args, Serialize)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
pub enum Command {
    /// Fixed rays, their stability and traces, and the regime.
    FixedRays {
        #[command(flatten)]
        params: ParamArgs,
        /// Read angles in degrees.
        #[arg(long)]
        degrees: bool,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Critical stretch K_θ for a direction.
    Ktheta {
        #[arg(long, allow_hyphen_values = true)]
        theta: f64,
        #[arg(long)]
        degrees: bool,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Forward orbit of an angle under the circle map and its limit.
    Orbit {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long)]
        degrees: bool,
        #[arg(long, allow_hyphen_values = true)]
        phi: f64,
        /// Number of iterates listed.
        #[arg(long, default_value_t = 50)]
        n: usize,
        #[arg(long, default_value_t = 10_000)]
        max_iter: usize,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long, default_value_t = 5)]
        confirm: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Growth of the dilatation of iterates on a fixed ray or along an orbit.
    Growth {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long)]
        degrees: bool,
        /// Fixed angle to follow.
        #[arg(long, allow_hyphen_values = true, conflicts_with = "z", required_unless_present = "z")]
        phi: Option<f64>,
        /// Starting point `re,im` of the orbit.
        #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
        z: Option<(f64, f64)>,
        #[arg(long, default_value_t = 10)]
        n_lo: usize,
        #[arg(long, default_value_t = 60)]
        n_hi: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Seeded inverse-iteration sample of the Julia set on the circle.
    Julia {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long)]
        degrees: bool,
        #[arg(long, default_value_t = 1000)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Immediate basin of the non-repelling fixed ray.
    Basin {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long)]
        degrees: bool,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Classify a pixel grid into escaping, attracted and undecided points.
    Render {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long)]
        degrees: bool,
        /// `x_min,x_max,y_min,y_max`.
        #[arg(long, value_parser = parse_window, allow_hyphen_values = true, default_value = "-2,2,-2,2")]
        window: [f64; 4],
        /// Pixels per side.
        #[arg(long, default_value_t = 512)]
        res: usize,
        #[arg(long, default_value_t = 100)]
        max_iter: u32,
        /// PPM output; the stats JSON is written next to it.
        #[arg(long)]
        out: PathBuf,
    },
    /// Look for obstructions to quasiconformal equivalence of two maps.
    Obstruct {
        #[arg(long = "K1", allow_hyphen_values = true)]
        k1: f64,
        #[arg(long, allow_hyphen_values = true)]
        theta1: f64,
        #[arg(long = "K2", allow_hyphen_values = true)]
        k2: f64,
        #[arg(long, allow_hyphen_values = true)]
        theta2: f64,
        #[arg(long)]
        degrees: bool,
        /// Relative tolerance for trace comparison.
        #[arg(long, default_value_t = obstruction::TRACE_REL_TOL)]
        tol: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
}

fn parse_floats(s: &str, n: usize) -> std::result::Result<Vec<f64>, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|e| format!("`{x}`: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    if v.len() != n {
        return Err(format!("expected {n} comma-separated numbers, got {}", v.len()));
    }
    Ok(v)
}

fn parse_complex(s: &str) -> std::result::Result<(f64, f64), String> {
    let v = parse_floats(s, 2)?;
    Ok((v[0], v[1]))
}

fn parse_window(s: &str) -> std::result::Result<[f64; 4], String> {
    let v = parse_floats(s, 4)?;
    Ok([v[0], v[1], v[2], v[3]])
}

fn angle_in(x: f64, degrees: bool) -> f64 {
    if degrees {
        x.to_radians()
    } else {
        x
    }
}

impl ParamArgs {
    pub fn resolve(&self, degrees: bool) -> Result<MapParams> {
        match (self.k, self.theta, self.mu) {
            (Some(k), Some(t), None) => Ok(MapParams::new(k, angle_in(t, degrees))?),
            (None, None, Some((re, im))) => Ok(MapParams::from_mu(Complex64::new(re, im))?),
            _ => Err(CliError::Usage(
                "give either both --K and --theta, or --mu re,im".into(),
            )),
        }
    }
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    config: &'a Cli,
    params: Option<MapParams>,
    result: T,
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json<T: Serialize>(cli: &Cli, params: Option<MapParams>, result: T, out: &OutputArgs) -> Result<()> {
    let mut w = open_out(out.out.as_deref())?;
    serde_json::to_writer_pretty(
        &mut w,
        &Envelope {
            config: cli,
            params,
            result,
        },
    )?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn write_csv<R: Serialize>(rows: impl IntoIterator<Item = R>, out: &OutputArgs) -> Result<()> {
    let mut w = csv::Writer::from_writer(open_out(out.out.as_deref())?);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Row of `fixed-rays --format csv`.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct RayRow {
    pub angle: f64,
    pub multiplier: f64,
    pub stability: String,
    pub trace_sq: f64,
    pub contraction_k: f64,
    pub multiplicity: u8,
}

impl From<&FixedRay> for RayRow {
    fn from(r: &FixedRay) -> Self {
        Self {
            angle: r.angle.value(),
            multiplier: r.multiplier,
            stability: format!("{:?}", r.stability),
            trace_sq: r.trace_sq,
            contraction_k: r.contraction_k,
            multiplicity: r.multiplicity,
        }
    }
}

#[derive(Serialize)]
struct KthetaRow {
    theta: f64,
    k_theta: f64,
}

#[derive(Serialize)]
struct OrbitRow {
    n: usize,
    angle: f64,
}

#[derive(Serialize)]
struct GrowthRow {
    n: usize,
    log_distortion: f64,
    mu_re: f64,
    mu_im: f64,
}

#[derive(Serialize)]
struct JuliaRow {
    index: usize,
    angle: f64,
}

#[derive(Serialize)]
struct BasinRow {
    lower: f64,
    upper: f64,
    attractor: f64,
    includes_lower: bool,
    includes_upper: bool,
}

#[derive(Serialize)]
struct ObstructRow {
    verdict: String,
    reasons: String,
    traces_left: String,
    traces_right: String,
}

fn join(v: impl IntoIterator<Item = f64>) -> String {
    v.into_iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| {
                qrdyn::Error::InvalidParameter(format!("{THREADS_ENV}={v} is not a positive integer"))
            })?;
        b = b.num_threads(n);
    }
    b.build()
        .map_err(|e| CliError::Core(qrdyn::Error::ResourceLimit(e.to_string())))
}

/// Path of the stats JSON written beside a rendered image.
pub fn stats_path(image: &Path) -> PathBuf {
    image.with_extension("stats.json")
}

fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::FixedRays {
            params,
            degrees,
            output,
        } => {
            let p = params.resolve(*degrees)?;
            let rep = fixed_rays::fixed_rays(&p)?;
            match output.format {
                Format::Json => write_json(cli, Some(p), &rep, output),
                Format::Csv => write_csv(rep.rays.iter().map(RayRow::from), output),
            }
        }
        Command::Ktheta {
            theta,
            degrees,
            output,
        } => {
            let t = angle_in(*theta, *degrees);
            let k = fixed_rays::k_theta(t)?;
            let row = KthetaRow { theta: t, k_theta: k };
            match output.format {
                Format::Json => write_json(cli, None, row, output),
                Format::Csv => write_csv([row], output),
            }
        }
        Command::Orbit {
            params,
            degrees,
            phi,
            n,
            max_iter,
            tol,
            confirm,
            output,
        } => {
            let p = params.resolve(*degrees)?;
            let phi = angle_in(*phi, *degrees);
            let orbit = circle::orbit(&p, phi, *n);
            match output.format {
                Format::Json => {
                    let rep = fixed_rays::fixed_rays(&p)?;
                    let cfg = LimitConfig {
                        max_iter: *max_iter,
                        tol: *tol,
                        confirm: *confirm,
                    };
                    let limit = circle::classify_limit(&p, &rep, phi, &cfg);
                    #[derive(Serialize)]
                    struct R {
                        orbit: Vec<f64>,
                        limit: circle::LimitReport,
                    }
                    let orbit = orbit.iter().map(|a| a.value()).collect();
                    write_json(cli, Some(p), R { orbit, limit }, output)
                }
                Format::Csv => write_csv(
                    orbit.iter().enumerate().map(|(n, a)| OrbitRow { n, angle: a.value() }),
                    output,
                ),
            }
        }
        Command::Growth {
            params,
            degrees,
            phi,
            z,
            n_lo,
            n_hi,
            output,
        } => {
            let p = params.resolve(*degrees)?;
            let (seq, fit) = match (phi, z) {
                (Some(phi), _) => {
                    let phi = angle_in(*phi, *degrees);
                    (
                        mobius::dilatation_series_on_ray(&p, phi, *n_hi)?,
                        mobius::growth_fit_ray(&p, phi, *n_lo, *n_hi)?,
                    )
                }
                (None, Some((re, im))) => {
                    let z = Complex64::new(*re, *im);
                    (
                        mobius::dilatation_series(&p, z, *n_hi)?,
                        mobius::growth_fit_point(&p, z, *n_lo, *n_hi)?,
                    )
                }
                (None, None) => return Err(CliError::Usage("give --phi or --z".into())),
            };
            let rows = seq.iter().enumerate().map(|(i, d)| GrowthRow {
                n: i + 1,
                log_distortion: d.log_distortion,
                mu_re: d.mu.re,
                mu_im: d.mu.im,
            });
            match output.format {
                Format::Json => {
                    #[derive(Serialize)]
                    struct R {
                        fit: mobius::GrowthFit,
                        series: Vec<GrowthRow>,
                    }
                    write_json(cli, Some(p), R { fit, series: rows.collect() }, output)
                }
                Format::Csv => write_csv(rows, output),
            }
        }
        Command::Julia {
            params,
            degrees,
            count,
            seed,
            output,
        } => {
            let p = params.resolve(*degrees)?;
            let sample = blaschke::julia_sample(&p, *count, *seed)?;
            match output.format {
                Format::Json => {
                    #[derive(Serialize)]
                    struct R {
                        classification: blaschke::JuliaClassification,
                        sample: Vec<f64>,
                    }
                    let classification = blaschke::julia_classification(&p)?;
                    let sample = sample.iter().map(|a| a.value()).collect();
                    write_json(cli, Some(p), R { classification, sample }, output)
                }
                Format::Csv => write_csv(
                    sample
                        .iter()
                        .enumerate()
                        .map(|(index, a)| JuliaRow { index, angle: a.value() }),
                    output,
                ),
            }
        }
        Command::Basin {
            params,
            degrees,
            output,
        } => {
            let p = params.resolve(*degrees)?;
            let b = blaschke::immediate_basin(&p)?;
            match output.format {
                Format::Json => write_json(cli, Some(p), b, output),
                Format::Csv => write_csv(
                    [BasinRow {
                        lower: b.lower,
                        upper: b.upper,
                        attractor: b.attractor.value(),
                        includes_lower: b.includes_lower,
                        includes_upper: b.includes_upper,
                    }],
                    output,
                ),
            }
        }
        Command::Render {
            params,
            degrees,
            window,
            res,
            max_iter,
            out,
        } => {
            let p = params.resolve(*degrees)?;
            let [x0, x1, y0, y1] = *window;
            let w = Window::new(x0, x1, y0, y1)?;
            let grid = thread_pool()?.install(|| plane::render_grid(&p, w, *res, *res, *max_iter))?;
            let mut f = BufWriter::new(File::create(out)?);
            plane::write_ppm(&grid, &mut f)?;
            f.flush()?;
            let stats = OutputArgs {
                format: Format::Json,
                out: Some(stats_path(out)),
            };
            write_json(cli, Some(p), grid.stats(), &stats)
        }
        Command::Obstruct {
            k1,
            theta1,
            k2,
            theta2,
            degrees,
            tol,
            output,
        } => {
            let p1 = MapParams::new(*k1, angle_in(*theta1, *degrees))?;
            let p2 = MapParams::new(*k2, angle_in(*theta2, *degrees))?;
            let rep = obstruction::obstruction_report(&p1, &p2, *tol)?;
            match output.format {
                Format::Json => write_json(cli, None, &rep, output),
                Format::Csv => write_csv(
                    [ObstructRow {
                        verdict: match &rep.verdict {
                            obstruction::Verdict::Obstructed(_) => "Obstructed".into(),
                            obstruction::Verdict::Inconclusive => "Inconclusive".into(),
                        },
                        reasons: rep
                            .reasons
                            .iter()
                            .map(|r| format!("{r:?}"))
                            .collect::<Vec<_>>()
                            .join(";"),
                        traces_left: join(rep.traces_left.iter().map(|t| t.trace_sq)),
                        traces_right: join(rep.traces_right.iter().map(|t| t.trace_sq)),
                    }],
                    output,
                ),
            }
        }
    }
}

/// Parse `args` (program name first), run, and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("qrdyn: {e}");
            e.exit_code()
        }
    }
}
