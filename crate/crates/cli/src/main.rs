use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use divjohn::divsolve::{GlobalSolver, SolverOptions, WhitneySolver};
use divjohn::experiments::{generate, rhs, run_sweep, DomainSpec, RhsPattern, SweepConfig};
use divjohn::grid::pgm::{read_field, read_mask, write_heatmap, write_mask, PgmFormat};
use divjohn::grid::{distance_transform, Ball, DistanceField, GridDomain};
use divjohn::john::{
    component_diameter_test, content_thickness, default_samples, john_constant, separation_check, write_paths_csv,
    Curves, JohnAssessment, JohnOptions,
};
use divjohn::poincare::{
    hardy_constant, poincare_constant, validate_triple, ConstantEstimate, EstimateOptions, Exponents, Mode, Path as EstimatePath,
};
use divjohn::whitney::{build_tree, whitney_decompose};

#[derive(Parser)]
#[command(name = "divjohn", version, about = "Divergence equation and John-domain experiments on grids")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rasterize a domain and write its mask as PGM.
    Rasterize {
        #[command(flatten)]
        domain: DomainArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write binary (P5) instead of ASCII (P2) PGM.
        #[arg(long)]
        binary: bool,
    },
    /// Distance to the boundary; optional PGM heatmap.
    Distance {
        #[command(flatten)]
        domain: DomainArgs,
        #[arg(long)]
        heatmap: Option<PathBuf>,
    },
    /// Whitney decomposition and chain tree toward the deepest cell.
    Whitney {
        #[command(flatten)]
        domain: DomainArgs,
        /// Write the cube tree as JSON.
        #[arg(long)]
        tree: Option<PathBuf>,
    },
    /// Estimate the John constant by admissible-path search.
    John {
        #[command(flatten)]
        domain: DomainArgs,
        #[command(flatten)]
        john: JohnArgs,
        /// Write witness paths as CSV polylines.
        #[arg(long)]
        paths_csv: Option<PathBuf>,
        /// Include every sample in the report.
        #[arg(long)]
        verbose: bool,
    },
    /// Test the separation property along candidate curves.
    Separation {
        #[command(flatten)]
        domain: DomainArgs,
        #[command(flatten)]
        john: JohnArgs,
        #[arg(long = "cs")]
        c_s: f64,
        #[arg(long, value_enum, default_value_t = CurveArg::Quasihyperbolic)]
        curves: CurveArg,
    },
    /// Diameters of the components of Ω ∖ B(w, d) away from B0.
    Components {
        #[command(flatten)]
        domain: DomainArgs,
        #[arg(long, value_parser = parse_point)]
        w: [f64; 2],
        #[arg(long)]
        d: f64,
        /// B0 as `x,y,r`.
        #[arg(long, value_parser = parse_ball)]
        b0: Ball,
    },
    /// Dyadic Hausdorff-content ratio of the complement near a boundary point.
    Thickness {
        #[command(flatten)]
        domain: DomainArgs,
        #[arg(long)]
        lambda: f64,
        #[arg(long, value_parser = parse_point)]
        w: [f64; 2],
        #[arg(long)]
        r: f64,
    },
    /// Best constant of the weighted Poincaré inequality.
    Poincare {
        #[command(flatten)]
        domain: DomainArgs,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long, default_value_t = 2.0)]
        q: f64,
        /// Override the weight exponent (diagnostic only, not a Sobolev triple).
        #[arg(long)]
        b: Option<f64>,
        /// Require u = 0 on the square `x,y,half_side` instead of mean zero.
        #[arg(long, value_parser = parse_ball)]
        zero_on_cube: Option<Ball>,
        #[command(flatten)]
        estimate: EstimateArgs,
    },
    /// Best constant of the Hardy inequality.
    Hardy {
        #[command(flatten)]
        domain: DomainArgs,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[command(flatten)]
        estimate: EstimateArgs,
    },
    /// Solve div v = f with zero trace.
    Solve {
        #[command(flatten)]
        domain: DomainArgs,
        /// Right-hand side as JSON, e.g. `{"pattern":"checkerboard","k":2}`.
        #[arg(long, conflicts_with = "f_pgm")]
        f: Option<String>,
        /// Right-hand side as a PGM on the domain's grid (projected to mean zero).
        #[arg(long)]
        f_pgm: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = MethodArg::Whitney)]
        method: MethodArg,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        /// Directory for v1/v2 as float32 rasters and PGM heatmaps.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a sweep configuration; exits nonzero if any cell errored.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct DomainArgs {
    /// Domain spec as JSON text or a path to a JSON file.
    #[arg(long, required_unless_present = "mask", conflicts_with = "mask")]
    spec: Option<String>,
    /// Domain mask as PGM.
    #[arg(long)]
    mask: Option<PathBuf>,
    /// Grid spacing for masks whose header does not record it.
    #[arg(long)]
    h: Option<f64>,
}

#[derive(Args)]
struct JohnArgs {
    /// Center point; defaults to the deepest cell.
    #[arg(long, value_parser = parse_point)]
    center: Option<[f64; 2]>,
    #[arg(long, default_value_t = 512)]
    max_samples: usize,
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 20)]
    starts: usize,
    #[arg(long, value_enum, default_value_t = PathArg::Auto)]
    path: PathArg,
    /// Write the maximizing field as a PGM heatmap.
    #[arg(long)]
    trial_pgm: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum CurveArg {
    Quasihyperbolic,
    Witness,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Whitney,
    Global,
}

#[derive(Clone, Copy, ValueEnum)]
enum PathArg {
    Auto,
    Eigen,
    Ascent,
}

fn parse_numbers(s: &str, n: usize) -> std::result::Result<Vec<f64>, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    if v.len() != n {
        return Err(format!("expected {n} comma-separated numbers"));
    }
    Ok(v)
}

fn parse_point(s: &str) -> std::result::Result<[f64; 2], String> {
    let v = parse_numbers(s, 2)?;
    Ok([v[0], v[1]])
}

fn parse_ball(s: &str) -> std::result::Result<Ball, String> {
    let v = parse_numbers(s, 3)?;
    Ok(Ball::new([v[0], v[1]], v[2]))
}

fn load_domain(args: &DomainArgs) -> Result<GridDomain> {
    if let Some(path) = &args.mask {
        let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
        return Ok(read_mask(file, args.h)?);
    }
    let text = args.spec.as_deref().unwrap_or_default();
    let json = if text.trim_start().starts_with('{') {
        text.to_string()
    } else {
        fs::read_to_string(text).with_context(|| format!("reading {text}"))?
    };
    let mut spec: DomainSpec = serde_json::from_str(&json).context("parsing domain spec")?;
    if let Some(h) = args.h {
        spec.h = h;
    }
    Ok(generate(&spec)?)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn print(value: &serde_json::Value) -> Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn assess(dom: &GridDomain, rho: &DistanceField, args: &JohnArgs) -> Result<JohnAssessment> {
    let opts = JohnOptions { max_samples: args.max_samples, ..Default::default() };
    let samples = default_samples(dom, rho, &opts);
    let center = args.center.unwrap_or_else(|| dom.center(rho.argmax()));
    Ok(john_constant(dom, rho, center, &samples, &opts)?)
}

fn estimate_options(args: &EstimateArgs) -> EstimateOptions {
    EstimateOptions {
        seed: args.seed,
        starts: args.starts,
        path: match args.path {
            PathArg::Auto => EstimatePath::Auto,
            PathArg::Eigen => EstimatePath::Eigen,
            PathArg::Ascent => EstimatePath::Ascent,
        },
        ..Default::default()
    }
}

fn report_estimate(e: &ConstantEstimate, extra: serde_json::Value, trial_pgm: Option<&Path>) -> Result<()> {
    if let Some(path) = trial_pgm {
        write_heatmap(&e.trial.shape, &e.trial.values, PgmFormat::Binary, &mut create(path)?)?;
    }
    let mut v = serde_json::to_value(e)?;
    if let (Some(map), serde_json::Value::Object(more)) = (v.as_object_mut(), extra) {
        map.extend(more);
    }
    print(&v)
}

fn write_f32(path: &Path, values: &[f64]) -> Result<()> {
    let mut w = create(path)?;
    for &x in values {
        w.write_all(&(x as f32).to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Rasterize { domain, out, binary } => {
            let dom = load_domain(&domain)?;
            if let Some(path) = out {
                let format = if binary { PgmFormat::Binary } else { PgmFormat::Ascii };
                let mut w = create(&path)?;
                write_mask(&dom, format, &mut w)?;
                w.flush()?;
            }
            let s = dom.shape();
            print(&json!({
                "nx": s.nx, "ny": s.ny, "h": s.h, "origin": s.origin,
                "cells": dom.num_cells(), "area": dom.area(), "family": dom.family_tag(),
            }))?;
        }
        Command::Distance { domain, heatmap } => {
            let dom = load_domain(&domain)?;
            let rho = distance_transform(&dom);
            if let Some(path) = heatmap {
                let mut w = create(&path)?;
                write_heatmap(dom.shape(), rho.values(), PgmFormat::Binary, &mut w)?;
                w.flush()?;
            }
            print(&json!({ "max": rho.max(), "argmax": dom.center(rho.argmax()), "cells": dom.num_cells() }))?;
        }
        Command::Whitney { domain, tree } => {
            let dom = load_domain(&domain)?;
            let rho = distance_transform(&dom);
            let dec = whitney_decompose(&dom, &rho)?;
            let summary = json!({
                "cubes": dec.len(),
                "sigma": dec.sigma(),
                "overlap_constant": dec.overlap_constant(),
                "levels": dec.level_histogram(),
            });
            let t = build_tree(dec, dom.center(rho.argmax()))?;
            if let Some(path) = tree {
                let mut w = create(&path)?;
                t.write_json(&mut w)?;
                w.flush()?;
            }
            let mut summary = summary;
            summary["max_depth"] = json!(t.max_depth());
            print(&summary)?;
        }
        Command::John { domain, john, paths_csv, verbose } => {
            let dom = load_domain(&domain)?;
            let rho = distance_transform(&dom);
            let a = assess(&dom, &rho, &john)?;
            if let Some(path) = paths_csv {
                write_paths_csv(&a, &rho, create(&path)?)?;
            }
            let worst = &a.samples[a.worst_sample];
            let mut report = json!({
                "center": a.center,
                "c_hat": a.c_hat,
                "samples": a.samples.len(),
                "worst": { "x": worst.x, "c_best": worst.c_best, "length": worst.arclength.last() },
            });
            if verbose {
                report["per_sample"] =
                    a.samples.iter().map(|s| json!({ "x": s.x, "c_best": s.c_best })).collect::<Vec<_>>().into();
            }
            print(&report)?;
        }
        Command::Separation { domain, john, c_s, curves } => {
            let dom = load_domain(&domain)?;
            let rho = distance_transform(&dom);
            let a = assess(&dom, &rho, &john)?;
            let curves = match curves {
                CurveArg::Quasihyperbolic => Curves::Quasihyperbolic,
                CurveArg::Witness => Curves::Witness,
            };
            let r = separation_check(&dom, &rho, &a, c_s, curves);
            print(&json!({
                "constant_tested": r.constant_tested,
                "pass": r.pass,
                "curves": r.curves,
                "failed_samples": r.samples.iter().filter(|s| !s.pass).count(),
                "samples": r.samples.len(),
                "first_failure": r.first_failure(),
            }))?;
        }
        Command::Components { domain, w, d, b0 } => {
            let dom = load_domain(&domain)?;
            print(&serde_json::to_value(component_diameter_test(&dom, &b0, w, d)?)?)?;
        }
        Command::Thickness { domain, lambda, w, r } => {
            let dom = load_domain(&domain)?;
            print(&serde_json::to_value(content_thickness(&dom, lambda, w, r)?)?)?;
        }
        Command::Poincare { domain, p, q, b, zero_on_cube, estimate } => {
            let dom = load_domain(&domain)?;
            let rho = distance_transform(&dom);
            let exps = match b {
                Some(b) => Exponents::diagnostic(p, q, b)?,
                None => validate_triple(p, q, 2)?.into(),
            };
            let mode = match zero_on_cube {
                Some(c) => Mode::ZeroOnCube { center: c.center, half_side: c.radius },
                None => Mode::MeanZero,
            };
            let e = poincare_constant(&dom, &rho, exps, &mode, &estimate_options(&estimate))?;
            let mode_label = if zero_on_cube.is_some() { "zero_on_cube" } else { "mean_zero" };
            report_estimate(&e, json!({ "mode": mode_label }), estimate.trial_pgm.as_deref())?;
        }
        Command::Hardy { domain, p, estimate } => {
            let dom = load_domain(&domain)?;
            let rho = distance_transform(&dom);
            let e = hardy_constant(&dom, &rho, p, &estimate_options(&estimate))?;
            report_estimate(&e, json!({}), estimate.trial_pgm.as_deref())?;
        }
        Command::Solve { domain, f, f_pgm, method, p, out } => {
            let dom = load_domain(&domain)?;
            let rho = distance_transform(&dom);
            let f = match (f, f_pgm) {
                (_, Some(path)) => read_field(File::open(&path)?, dom.shape())?.restricted(&dom).mean_zero(&dom),
                (Some(text), None) => {
                    let pattern: RhsPattern = serde_json::from_str(&text).context("parsing right-hand side")?;
                    rhs(&dom, &pattern)?
                }
                (None, None) => bail!("one of --f or --f-pgm is required"),
            };
            let sol = match method {
                MethodArg::Whitney => {
                    let dec = whitney_decompose(&dom, &rho)?;
                    let tree = build_tree(dec, dom.center(rho.argmax()))?;
                    WhitneySolver::new(&dom, tree, SolverOptions::default())?.solve(&dom, &rho, &f, p)?
                }
                MethodArg::Global => GlobalSolver::new(&dom, SolverOptions::default())?.solve(&dom, &rho, &f, p)?,
            };
            if let Some(dir) = out {
                fs::create_dir_all(&dir)?;
                write_f32(&dir.join("v1.f32"), &sol.v.v1)?;
                write_f32(&dir.join("v2.f32"), &sol.v.v2)?;
                for (name, values) in [("v1.pgm", &sol.v.v1), ("v2.pgm", &sol.v.v2)] {
                    let mut w = create(&dir.join(name))?;
                    write_heatmap(dom.shape(), values, PgmFormat::Binary, &mut w)?;
                    w.flush()?;
                }
            }
            let mut report = serde_json::to_value(&sol)?;
            report["nx"] = json!(dom.shape().nx);
            report["ny"] = json!(dom.shape().ny);
            print(&report)?;
        }
        Command::Sweep { config, out } => {
            let text = fs::read_to_string(&config).with_context(|| format!("reading {}", config.display()))?;
            let cfg: SweepConfig = serde_json::from_str(&text).context("parsing sweep config")?;
            let result = run_sweep(&cfg, Some(&out))?;
            let errors = result.rows.iter().filter(|r| r.error.is_some()).count();
            print(&json!({ "rows": result.rows.len(), "errors": errors, "out": out }))?;
            if errors > 0 {
                return Ok(ExitCode::FAILURE);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
