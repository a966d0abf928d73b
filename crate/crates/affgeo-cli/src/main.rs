//! Command-line front end: verification suites, pointwise invariants,
//! figure meshes, variational checks and geodesic probes.
//!
//! Exit status is the single source of truth for automation:
//! 0 all checks pass, 1 a check failed, 2 usage error (including unknown
//! surface ids), 3 evaluation error.

use affgeo::calabi::{second_variation, BumpSpec};
use affgeo::catalog::{Catalog, Geometry, SurfaceKind};
use affgeo::centroaffine::decompose_centroaffine;
use affgeo::error::Error;
use affgeo::expr::{parse_program, ExpressionProgram, ParseContext};
use affgeo::riemann::{geodesic_ray, GeodesicControls, GeodesicStatus};
use affgeo::verify::{
    emit_figure, render_json, render_text, run_verify, surface_metric, VerifyOptions,
};
use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "affgeo",
    about = "verification laboratory for affine surface geometry"
)]
struct Cli {
    /// Load additional .surf files from this directory.
    #[arg(long, global = true)]
    catalog_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Catalog inspection.
    Catalog {
        #[command(subcommand)]
        sub: CatalogCmd,
    },
    /// Run every expected invariant and the identity suite for a surface.
    Verify {
        id: String,
        /// Grid resolution, e.g. 11x11 or 7x7x7.
        #[arg(long)]
        grid: Option<String>,
        /// Tolerance override for every check.
        #[arg(long)]
        tol: Option<f64>,
        /// Constant overrides, e.g. --set c=2.
        #[arg(long = "set", value_name = "NAME=VALUE")]
        set: Vec<String>,
        /// Emit the machine-readable report.
        #[arg(long)]
        json: bool,
    },
    /// Pointwise invariants of a surface at a chart point.
    Invariants {
        id: String,
        /// Chart coordinates, comma separated.
        #[arg(long, allow_hyphen_values = true)]
        at: String,
        #[arg(long = "set", value_name = "NAME=VALUE")]
        set: Vec<String>,
    },
    /// Export the mesh of a published figure.
    Figure {
        n: u32,
        #[arg(long, default_value = "41x41")]
        grid: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Second variation of a maximal graph under a boundary-flat bump.
    SecondVariation {
        id: String,
        /// Only the built-in separable bump is provided.
        #[arg(long, default_value = "default")]
        bump: String,
        /// Rectangle a,b;c,d (defaults to the catalog chart).
        #[arg(long, allow_hyphen_values = true)]
        domain: Option<String>,
        /// Quadrature panels per axis.
        #[arg(long, default_value_t = 16)]
        panels: usize,
    },
    /// Shoot a unit-speed geodesic of the surface metric.
    Geodesic {
        id: String,
        /// Start chart point, comma separated.
        #[arg(long, allow_hyphen_values = true)]
        from: String,
        /// Initial direction, comma separated.
        #[arg(long, allow_hyphen_values = true)]
        dir: String,
        /// Arclength budget.
        #[arg(long)]
        length: f64,
        /// Optional CSV trace output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum CatalogCmd {
    /// List all surfaces with kind and description.
    List,
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("AFFGEO_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build_global();
        }
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                Error::UnknownSurface(_) | Error::Parse(_) => 2u8,
                _ => 3u8,
            };
            ExitCode::from(code)
        }
    }
}

fn parse_set(set: &[String]) -> Result<Vec<(String, f64)>, Error> {
    set.iter()
        .map(|s| {
            let (name, value) = s
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("bad --set '{s}', expected NAME=VALUE")))?;
            let v = value
                .trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad value in --set '{s}'")))?;
            Ok((name.trim().to_string(), v))
        })
        .collect()
}

fn parse_grid(grid: &str) -> Result<Vec<usize>, Error> {
    grid.split('x')
        .map(|t| {
            t.parse::<usize>()
                .map_err(|_| Error::Parse(format!("bad grid component '{t}'")))
        })
        .collect()
}

fn parse_coords(text: &str) -> Result<Vec<f64>, Error> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad coordinate '{t}'")))
        })
        .collect()
}

fn load_catalog(dir: &Option<PathBuf>) -> Result<Catalog, Error> {
    let mut cat = Catalog::builtin();
    if let Some(d) = dir {
        cat.add_dir(d)?;
    }
    Ok(cat)
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    let catalog = load_catalog(&cli.catalog_dir)?;
    match cli.command {
        Command::Catalog {
            sub: CatalogCmd::List,
        } => {
            for (id, kind, description) in catalog.list() {
                println!("{id:<20} {kind:<11} {description}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify {
            id,
            grid,
            tol,
            set,
            json,
        } => {
            let opts = VerifyOptions {
                grid: grid.as_deref().map(parse_grid).transpose()?,
                tolerance: tol,
                set: parse_set(&set)?,
            };
            let report = run_verify(&catalog, &id, &opts)?;
            if json {
                let bytes = render_json(&report)?;
                use std::io::Write;
                std::io::stdout()
                    .write_all(&bytes)
                    .map_err(|e| Error::Io(e.to_string()))?;
            } else {
                print!("{}", render_text(&report));
            }
            Ok(ExitCode::from(report.exit_status as u8))
        }
        Command::Invariants { id, at, set } => {
            let spec = catalog.get_with(&id, &parse_set(&set)?)?;
            let point = parse_coords(&at)?;
            if point.len() != spec.chart_dim() {
                return Err(Error::Parse(format!(
                    "surface '{id}' expects {} coordinates",
                    spec.chart_dim()
                )));
            }
            print_invariants(&spec, &point)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Figure { n, grid, out } => {
            let g = parse_grid(&grid)?;
            if g.len() != 2 {
                return Err(Error::Parse("figure grid must be AxB".into()));
            }
            let mesh = emit_figure(&catalog, n, (g[0], g[1]))?;
            std::fs::write(&out, &mesh.bytes).map_err(|e| Error::Io(e.to_string()))?;
            println!(
                "figure {n}: surface {} -> {} ({} rows)",
                mesh.surface_id,
                out.display(),
                mesh.rows
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::SecondVariation {
            id,
            bump,
            domain,
            panels,
        } => {
            if bump != "default" {
                return Err(Error::Parse("only --bump default is available".into()));
            }
            let spec = catalog.get(&id)?;
            if spec.kind != SurfaceKind::Graph || spec.geometry != Geometry::Calabi {
                return Err(Error::Parse(format!(
                    "second variation needs a graph under the constant transversal; '{id}' is not one"
                )));
            }
            let (xr, yr) = match domain {
                Some(d) => {
                    let parts: Vec<Vec<f64>> =
                        d.split(';').map(parse_coords).collect::<Result<_, _>>()?;
                    if parts.len() != 2 || parts.iter().any(|p| p.len() != 2) {
                        return Err(Error::Parse("domain must be a,b;c,d".into()));
                    }
                    ((parts[0][0], parts[0][1]), (parts[1][0], parts[1][1]))
                }
                None => (spec.domain[0], spec.domain[1]),
            };
            let mut bspec = BumpSpec::new(xr, yr);
            bspec.panels = panels;
            let phi = default_bump(xr, yr)?;
            let v = second_variation(&spec.programs[0], &phi, &bspec)?;
            let gap = (v.direct - v.trace_free).abs();
            println!(
                "surface {id} on [{}, {}] x [{}, {}]",
                xr.0, xr.1, yr.0, yr.1
            );
            println!("  V''(0) direct          = {:+.12e}", v.direct);
            println!("  V''(0) trace-free form = {:+.12e}", v.trace_free);
            println!("  (L phi, L phi)         = {:+.12e}", v.l_inner);
            println!("  (A^ phi, A^ phi)       = {:+.12e}", v.ahat_inner);
            println!(
                "  route gap {gap:.3e} vs quadrature error estimate {:.3e}",
                v.quad_error
            );
            let ok = gap <= 10.0 * v.quad_error && v.direct < 0.0 && v.trace_free < 0.0;
            println!("  verdict: {}", if ok { "PASS" } else { "FAIL" });
            Ok(if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Command::Geodesic {
            id,
            from,
            dir,
            length,
            out,
        } => {
            let spec = catalog.get(&id)?;
            let start = parse_coords(&from)?;
            let direction = parse_coords(&dir)?;
            if start.len() != spec.chart_dim() || direction.len() != spec.chart_dim() {
                return Err(Error::Parse(format!(
                    "surface '{id}' expects {} coordinates",
                    spec.chart_dim()
                )));
            }
            let field = |p: &[f64]| surface_metric(&spec, p);
            let controls = GeodesicControls::with_chart(spec.domain.clone());
            let trace = geodesic_ray(&field, &start, &direction, length, &controls)?;
            let (s, end, vel) = trace.endpoint();
            println!("surface {id}: geodesic from {start:?} toward {direction:?}");
            println!(
                "  status {:?} after arclength {s:.6} ({} samples)",
                trace.status,
                trace.samples.len()
            );
            println!("  endpoint {end:?}");
            println!("  velocity {vel:?}");
            println!("  speed drift {:.3e}", trace.speed_drift);
            if let Some(path) = out {
                let mut csv = String::from("# arclength, point..., velocity...\n");
                for (s, x, v) in &trace.samples {
                    let cols: Vec<String> = std::iter::once(*s)
                        .chain(x.iter().copied())
                        .chain(v.iter().copied())
                        .map(|t| format!("{t:.16e}"))
                        .collect();
                    csv.push_str(&cols.join(","));
                    csv.push('\n');
                }
                std::fs::write(&path, csv).map_err(|e| Error::Io(e.to_string()))?;
                println!("  trace written to {}", path.display());
            }
            let ok = trace.status != GeodesicStatus::StepFailure && trace.speed_drift <= 1e-6;
            Ok(if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
    }
}

fn default_bump(xr: (f64, f64), yr: (f64, f64)) -> Result<ExpressionProgram, Error> {
    let ctx = ParseContext::new(&["x1", "x2"])
        .with_constant("ax", xr.0)
        .with_constant("bx", xr.1)
        .with_constant("ay", yr.0)
        .with_constant("by", yr.1);
    parse_program(
        "(1 - ((2*x1 - ax - bx)/(bx - ax))^2)^2 * (1 - ((2*x2 - ay - by)/(by - ay))^2)^2",
        &ctx,
    )
}

fn print_invariants(spec: &affgeo::catalog::SurfaceSpec, point: &[f64]) -> Result<(), Error> {
    println!("surface {} at {point:?}", spec.id);
    match (spec.kind, spec.geometry) {
        (SurfaceKind::Graph, Geometry::Calabi) => {
            let r = affgeo::calabi::calabi_invariants(&spec.programs[0], point)?;
            print_calabi(&r);
        }
        (SurfaceKind::Parametric, Geometry::Calabi) => {
            let r = affgeo::calabi::calabi_invariants_parametric(&spec.programs, point)?;
            print_calabi(&r);
        }
        (SurfaceKind::Parametric, Geometry::Centroaffine) => {
            let d = decompose_centroaffine(&spec.programs, point)?;
            print_centro(&d)?;
        }
        (SurfaceKind::Graph, Geometry::Centroaffine) => {
            let n = spec.programs[0].arity();
            let immersion: Vec<ExpressionProgram> = (0..n)
                .map(|i| ExpressionProgram::variable(n, i))
                .chain(std::iter::once(spec.programs[0].clone()))
                .collect();
            let d = decompose_centroaffine(&immersion, point)?;
            print_centro(&d)?;
            let g = affgeo::centroaffine::extremal_residual_graph(&spec.programs[0], point)?;
            println!("  support rho         = {:+.12e}", g.support);
            println!("  det Hess            = {:+.12e}", g.hessian_det);
            println!("  extremal argument w = {:+.12e}", g.extremal_argument);
            println!("  graph residual      = {:+.3e}", g.residual);
        }
        (SurfaceKind::Implicit, _) => {
            return Err(Error::Parse(
                "implicit-only surfaces have no chart invariants".into(),
            ))
        }
    }
    Ok(())
}

fn print_calabi(r: &affgeo::calabi::CalabiReport) {
    println!("  metric G            = {:?}", r.metric.g);
    println!("  Tchebychev T        = {:?}", r.tchebychev);
    println!("  |T|^2               = {:+.12e}", r.tchebychev_norm_sq);
    println!("  Pick invariant J    = {:+.12e}", r.pick);
    println!("  scalar curvature R  = {:+.12e}", r.scalar_curvature);
    if let Some(k) = r.gaussian {
        println!("  Gaussian K          = {:+.12e}", k);
    }
    println!("  det Hess            = {:+.12e}", r.hessian_det);
    println!("  maximality residual = {:+.3e}", r.maximal_residual);
}

fn print_centro(d: &affgeo::centroaffine::CentroaffineDecomposition) -> Result<(), Error> {
    println!("  type                = {:?}", d.kind);
    println!("  metric h            = {:?}", d.metric.g);
    println!("  Tchebychev T        = {:?}", d.tchebychev);
    println!("  |T|^2               = {:+.12e}", d.tchebychev_norm_sq);
    if let Some(k) = affgeo::centroaffine::gaussian_curvature(d)? {
        println!("  Gaussian K          = {:+.12e}", k);
    }
    println!("  solve residual      = {:.3e}", d.residual);
    Ok(())
}
