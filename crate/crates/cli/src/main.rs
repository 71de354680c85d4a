use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use trivar::integrate::{integrate_untrimmed, Order};
use trivar::io::{read_model, serialize_model, tessellate_shell, tessellate_tiles, to_obj, to_vtk, ModelFile};
use trivar::io::{StatsReport, StatsRow};
use trivar::spline::compose_surface_in_trivariate;
use trivar::subdivide::{bezier_subdivide, trim_trivar_subdiv};
use trivar::trim::{validate_shell, Shell, Space, TrimmedSurface, TrimmedTrivariate};
use trivar::untrim::{untrim_trimmed_trivariate, UntrimResult};
use trivar::{Config, Error};

#[derive(Parser)]
#[command(name = "trivar", version, about = "Untrimming and integration of trimmed B-spline trivariates")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    #[command(flatten)]
    tol: TolFlags,
}

#[derive(Args)]
struct TolFlags {
    /// Boundary matching tolerance relative to the box diagonal.
    #[arg(long, global = true)]
    stitch: Option<f64>,
    /// Geometric tolerance relative to the box diagonal.
    #[arg(long, global = true)]
    geo: Option<f64>,
    /// Contouring tolerance relative to the box span.
    #[arg(long, global = true)]
    contour: Option<f64>,
    /// Split perturbation relative to the axis span.
    #[arg(long, global = true)]
    perturb: Option<f64>,
    /// Seed for randomized ray directions.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Model id inside the file; defaults to the first model.
    #[arg(long, global = true)]
    model: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SpaceArg {
    Param,
    Euclid,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Obj,
    Vtk,
}

#[derive(Args)]
struct UntrimFlags {
    #[arg(long, value_enum, default_value = "param")]
    space: SpaceArg,
    /// Kernel sampling resolution; repeat for a sequence of grids.
    #[arg(long)]
    grid: Vec<usize>,
    #[arg(long)]
    max_depth: Option<usize>,
    /// Fallback surface extent threshold relative to the diagonal.
    #[arg(long)]
    eps_e: Option<f64>,
    /// Fallback normal cone aperture threshold in radians.
    #[arg(long)]
    eps_theta: Option<f64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Checks that every shell is closed and consistently oriented.
    Validate { file: PathBuf },
    /// Splits a model at an iso-parameter, or into its Bézier cells.
    Subdivide {
        file: PathBuf,
        #[arg(long, required_unless_present = "bezier", requires = "axis")]
        t: Option<f64>,
        #[arg(long)]
        axis: Option<usize>,
        #[arg(long, conflicts_with_all = ["t", "axis"])]
        bezier: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Decomposes a model into tensor-product tiles.
    Untrim {
        file: PathBuf,
        #[command(flatten)]
        flags: UntrimFlags,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Volume of a model after untrimming.
    Volume {
        file: PathBuf,
        /// Gauss points per axis; by default exact for the Jacobian.
        #[arg(long)]
        order: Option<usize>,
        #[command(flatten)]
        flags: UntrimFlags,
    },
    /// Untrimming statistics for every model in the file.
    Stats {
        file: PathBuf,
        #[command(flatten)]
        flags: UntrimFlags,
    },
    /// Writes a mesh of the result tiles, or of the shell of a model.
    Export {
        file: PathBuf,
        #[arg(long, default_value_t = 5)]
        res: usize,
        #[arg(long, default_value_t = 0.0)]
        explode: f64,
        #[arg(long, value_enum, default_value = "obj")]
        format: Format,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Parse { .. }
        | Error::Reference(_)
        | Error::Unsupported(_)
        | Error::InvalidShell(_)
        | Error::OpenShell(_)
        | Error::Shape(_)
        | Error::Knots(_)
        | Error::Config(_)
        | Error::Io(_) => 2,
        _ => 3,
    }
}

fn config(tol: &TolFlags, flags: Option<&UntrimFlags>) -> Config {
    let mut cfg = Config { seed: tol.seed, ..Config::default() };
    if let Some(x) = tol.stitch {
        cfg.stitch_rel = x;
    }
    if let Some(x) = tol.geo {
        cfg.geo_rel = x;
    }
    if let Some(x) = tol.contour {
        cfg.contour_rel = x;
    }
    if let Some(x) = tol.perturb {
        cfg.perturb_rel = x;
    }
    if let Some(f) = flags {
        if !f.grid.is_empty() {
            cfg.grids = f.grid.clone();
        }
        if let Some(d) = f.max_depth {
            cfg.max_depth = d;
        }
        if let Some(x) = f.eps_e {
            cfg.eps_e_rel = x;
        }
        if let Some(x) = f.eps_theta {
            cfg.eps_theta = x;
        }
    }
    cfg
}

fn model_id(doc: &ModelFile, want: Option<&str>) -> Result<String, Error> {
    match want {
        Some(id) => Ok(id.to_string()),
        None => doc
            .model_ids()
            .first()
            .map(|s| s.to_string())
            .ok_or_else(|| Error::InvalidShell("the file defines no model".into())),
    }
}

/// Model with its shell pushed through the trivariate, over the identity
/// of the resulting bounding box.
fn to_euclidean(tt: &TrimmedTrivariate) -> Result<TrimmedTrivariate, Error> {
    if tt.space == Space::Euclidean {
        return Ok(tt.clone());
    }
    let surfaces = tt
        .shell
        .surfaces
        .iter()
        .map(|s| {
            Ok(TrimmedSurface { base: compose_surface_in_trivariate(&tt.t, &s.base)?, loops: s.loops.clone(), inward: s.inward })
        })
        .collect::<Result<Vec<_>, Error>>()?;
    Ok(TrimmedTrivariate::euclidean(Shell::new(surfaces)))
}

fn load(path: &Path, tol: &TolFlags, flags: &UntrimFlags) -> Result<(ModelFile, String, TrimmedTrivariate), Error> {
    let doc = read_model(path)?;
    let id = model_id(&doc, tol.model.as_deref())?;
    let mut tt = doc.model(&id)?;
    if let SpaceArg::Euclid = flags.space {
        tt = to_euclidean(&tt)?;
    }
    Ok((doc, id, tt))
}

fn checked(tt: &TrimmedTrivariate, cfg: &Config) -> Result<(), Error> {
    let r = validate_shell(&tt.shell, cfg);
    if r.is_valid() {
        Ok(())
    } else {
        Err(Error::InvalidShell(format!(
            "{} unmatched segment(s), {} misoriented and {} empty surface(s)",
            r.unmatched.len(),
            r.orientation.len(),
            r.empty.len()
        )))
    }
}

fn untrim(tt: &TrimmedTrivariate, cfg: &Config) -> Result<UntrimResult, Error> {
    checked(tt, cfg)?;
    untrim_trimmed_trivariate(tt, cfg)
}

fn emit(output: Option<&Path>, text: &str) -> Result<(), Error> {
    match output {
        Some(p) => Ok(std::fs::write(p, text)?),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    let tol = &cli.tol;
    match &cli.cmd {
        Cmd::Validate { file } => {
            let doc = read_model(file)?;
            let cfg = config(tol, None);
            let ids: Vec<String> = match &tol.model {
                Some(id) => vec![id.clone()],
                None => doc.model_ids().iter().map(|s| s.to_string()).collect(),
            };
            let mut bad = 0;
            for id in ids {
                let tt = doc.model(&id)?;
                let r = validate_shell(&tt.shell, &cfg);
                if r.is_valid() {
                    println!("{id}: ok ({} surfaces)", tt.shell.surfaces.len());
                } else {
                    bad += 1;
                    println!(
                        "{id}: invalid ({} unmatched segments, misoriented {:?}, empty {:?})",
                        r.unmatched.len(),
                        r.orientation,
                        r.empty
                    );
                }
            }
            if bad > 0 {
                return Err(Error::InvalidShell(format!("{bad} invalid model(s)")));
            }
        }
        Cmd::Subdivide { file, t, axis, bezier, output } => {
            let doc = read_model(file)?;
            let id = model_id(&doc, tol.model.as_deref())?;
            let tt = doc.model(&id)?;
            let cfg = config(tol, None);
            checked(&tt, &cfg)?;
            let pieces: Vec<TrimmedTrivariate> = if *bezier {
                bezier_subdivide(&tt, &cfg)?
            } else {
                let (t, axis) = (t.expect("required by clap"), axis.expect("required by clap"));
                if axis > 2 {
                    return Err(Error::Config(format!("axis {axis} is not 0, 1 or 2")));
                }
                trim_trivar_subdiv(&tt, t, axis, &cfg)?.pieces.into_iter().map(|p| p.tt).collect()
            };
            let mut out = ModelFile::default();
            for (i, p) in pieces.iter().enumerate() {
                out.add_model(&format!("{id}.{i}"), p);
            }
            eprintln!("{} piece(s)", pieces.len());
            emit(output.as_deref(), &serialize_model(&out))?;
        }
        Cmd::Untrim { file, flags, output } => {
            let cfg = config(tol, Some(flags));
            let (_, id, tt) = load(file, tol, flags)?;
            let ur = untrim(&tt, &cfg)?;
            let mut out = ModelFile::default();
            out.add_model(&id, &tt);
            out.add_result(&format!("{id}.untrimmed"), &id, &ur);
            eprintln!("{} tile(s), {} subdivision(s), depth {}", ur.tiles.len(), ur.stats.subdivisions, ur.stats.max_depth);
            match output {
                Some(_) => emit(output.as_deref(), &serialize_model(&out))?,
                None => println!("tiles {} depth {}", ur.tiles.len(), ur.stats.max_depth),
            }
        }
        Cmd::Volume { file, order, flags } => {
            let cfg = config(tol, Some(flags));
            let (_, _, tt) = load(file, tol, flags)?;
            let ur = untrim(&tt, &cfg)?;
            let order = match order {
                Some(k) => Order::Fixed([*k; 3]),
                None => Order::Exact { integrand_degree: 0 },
            };
            let r = integrate_untrimmed(&ur, |_| 1.0, order)?;
            println!("{:.10}", r.value);
        }
        Cmd::Stats { file, flags } => {
            let cfg = config(tol, Some(flags));
            let doc = read_model(file)?;
            let mut report = StatsReport::default();
            let mut volumes = Vec::new();
            for id in doc.model_ids() {
                let mut tt = doc.model(id)?;
                if let SpaceArg::Euclid = flags.space {
                    tt = to_euclidean(&tt)?;
                }
                let ur = untrim(&tt, &cfg)?;
                report.rows.push(StatsRow::from_results(id, &[&ur]));
                volumes.push((id.to_string(), trivar::integrate::volume(&ur)?));
            }
            print!("{}", report.render());
            for (id, v) in volumes {
                println!("volume {id} {v:.10}");
            }
        }
        Cmd::Export { file, res, explode, format, output } => {
            if *res < 2 {
                return Err(Error::Config("resolution must be at least 2".into()));
            }
            let doc = read_model(file)?;
            let mesh = match doc.results.first() {
                Some((rid, r)) => {
                    let tt = doc.model(&r.model)?;
                    tessellate_tiles(&tt.t, &doc.result_tiles(rid)?, *res, *explode)
                }
                None => {
                    let id = model_id(&doc, tol.model.as_deref())?;
                    tessellate_shell(&doc.model(&id)?, *res)
                }
            };
            let text = match format {
                Format::Obj => to_obj(&mesh),
                Format::Vtk => to_vtk(&mesh),
            };
            emit(output.as_deref(), &text)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
