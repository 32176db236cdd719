//! Command-line interface. Exit codes: 0 success, 2 usage, 1 runtime failure.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::evolution::{evolve, EvoConfig};
use crate::experiments::run_suite;
use crate::fitness::{Evaluator, FitnessConfig, FitnessVariant, DEFAULT_SUBSET};
use crate::io::document::load_stencil;
use crate::io::png::write_png;
use crate::io::shapes::{assemble_with_shapes, render_specimen, ShapeLibrary, ShapeMapping, DEFAULT_TRACKING};
use crate::io::svg::{export_svg_glyph, export_svg_stencil};
use crate::output::write_run;
use crate::raster::{render_expression, RenderSettings};
use crate::search::SearchConfig;
use crate::stencil::{Bounds, GridSpec};
use crate::targets::{builtin_alphabet, load_targets, TargetSet};

pub const THREADS_ENV: &str = "STENCILFORGE_THREADS";

#[derive(Debug, Parser)]
#[command(name = "stencilforge", version, about = "Evolve type stencils made of grid line segments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one evolution and write stats.csv plus the ranked final population
    Evolve(EvolveArgs),
    /// Export a stencil, a glyph, or a text specimen
    Render(RenderArgs),
    /// Run a seeded multi-run suite and write mean curves
    Experiments(ExperimentArgs),
    /// Start the HTTP service
    #[cfg(feature = "service")]
    Serve(ServeArgs),
    /// Target alphabet utilities
    #[command(subcommand)]
    Targets(TargetsCommand),
}

/// Settings shared by `evolve` and `experiments`.
#[derive(Debug, Args)]
pub struct EvoArgs {
    /// Directory with manifest.txt and one PGM per character [default: built-in alphabet]
    #[arg(long, value_name = "DIR")]
    pub targets: Option<PathBuf>,
    /// Evaluated subset used by exp3 and by the subset statistics
    #[arg(long, value_name = "CHARS", default_value = DEFAULT_SUBSET)]
    pub subset: String,
    /// Population size
    #[arg(long, value_name = "N", default_value_t = 100)]
    pub pop: usize,
    /// Generations after generation 0
    #[arg(long, value_name = "N", default_value_t = 300)]
    pub gens: usize,
    /// Grid points per axis
    #[arg(long, value_name = "D", default_value_t = 10)]
    pub grid: u32,
    /// Canvas size in pixels
    #[arg(long, value_name = "PX", default_value_t = 64)]
    pub canvas: usize,
    /// Stroke weight in pixels
    #[arg(long, value_name = "W", default_value_t = 3.0)]
    pub stroke: f64,
    /// Minimum segments per stencil
    #[arg(long, value_name = "N", default_value_t = 10)]
    pub min_elements: usize,
    /// Maximum segments per stencil
    #[arg(long, value_name = "N", default_value_t = 40)]
    pub max_elements: usize,
    /// Alternatives kept per glyph
    #[arg(long, value_name = "K", default_value_t = 5)]
    pub top_k: usize,
    /// Under exp3, solve characters outside the subset only when needed
    #[arg(long)]
    pub defer_unevaluated: bool,
    /// Evaluation threads [default: available parallelism]
    #[arg(long, value_name = "N", env = THREADS_ENV)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvolveArgs {
    /// Fitness function
    #[arg(long, value_name = "VARIANT", default_value = "exp1")]
    pub fitness: FitnessVariant,
    /// Random seed
    #[arg(long, value_name = "S", default_value_t = 0)]
    pub seed: u64,
    /// Output directory
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    #[command(flatten)]
    pub evo: EvoArgs,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// Fitness function of the suite
    #[arg(long, value_name = "VARIANT")]
    pub suite: FitnessVariant,
    /// Number of seeded runs
    #[arg(long, value_name = "R", default_value_t = 5)]
    pub runs: usize,
    /// Seed of the first run; run i uses seed-base + i
    #[arg(long, value_name = "S", default_value_t = 1)]
    pub seed_base: u64,
    /// Output directory
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    #[command(flatten)]
    pub evo: EvoArgs,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("what").required(true).args(["char", "text", "overview"])))]
#[command(group(clap::ArgGroup::new("format").required(true).args(["svg", "png"])))]
pub struct RenderArgs {
    /// Stencil document
    #[arg(long, value_name = "FILE")]
    pub stencil: PathBuf,
    /// Render the best expression of one character
    #[arg(long, value_name = "C")]
    pub char: Option<char>,
    /// Render a text specimen
    #[arg(long, value_name = "TEXT")]
    pub text: Option<String>,
    /// Render every segment in its own color
    #[arg(long)]
    pub overview: bool,
    /// Write SVG to this file
    #[arg(long, value_name = "OUT")]
    pub svg: Option<PathBuf>,
    /// Write PNG to this file (single character, no shapes)
    #[arg(long, value_name = "OUT", conflicts_with_all = ["text", "overview", "shapes", "mapping", "random_seed"])]
    pub png: Option<PathBuf>,
    /// Shape library replacing segments [default: built-in library when a mapping is given]
    #[arg(long, value_name = "LIB")]
    pub shapes: Option<PathBuf>,
    /// Shape mapping file
    #[arg(long, value_name = "FILE", conflicts_with = "random_seed")]
    pub mapping: Option<PathBuf>,
    /// Assign shapes at random with this seed
    #[arg(long, value_name = "S")]
    pub random_seed: Option<u64>,
    /// Extra space between specimen glyphs, in pixels
    #[arg(long, value_name = "PX", default_value_t = DEFAULT_TRACKING, allow_hyphen_values = true)]
    pub tracking: f64,
}

#[cfg(feature = "service")]
#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Listening port
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    /// Listening address
    #[arg(long, default_value = "127.0.0.1")]
    pub bind: std::net::IpAddr,
    /// Directory whose subdirectories are named target sets
    #[arg(long, value_name = "DIR")]
    pub targets_root: Option<PathBuf>,
    /// Directory of *.lib shape libraries
    #[arg(long, value_name = "DIR")]
    pub shape_libs: Option<PathBuf>,
    /// Where deleted runs persist their latest snapshot
    #[arg(long, value_name = "DIR")]
    pub runs_dir: Option<PathBuf>,
    /// Concurrent runs
    #[arg(long, value_name = "N", default_value_t = crate::service::DEFAULT_CAPACITY)]
    pub capacity: usize,
}

#[derive(Debug, Subcommand)]
pub enum TargetsCommand {
    /// Write the built-in alphabet as PGM files with a manifest
    ExportBuiltin {
        /// Output directory
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
        /// Canvas size in pixels
        #[arg(long, value_name = "PX", default_value_t = 64)]
        canvas: usize,
    },
}

impl EvoArgs {
    fn targets(&self) -> Result<TargetSet> {
        match &self.targets {
            Some(dir) => load_targets(dir),
            None => Ok(builtin_alphabet(self.canvas)),
        }
    }

    fn config(&self, variant: FitnessVariant, seed: u64) -> Result<EvoConfig> {
        if self.threads == Some(0) {
            return Err(Error::InvalidConfig("--threads must be at least 1".into()));
        }
        let config = EvoConfig {
            population_size: self.pop,
            generations: self.gens,
            rng_seed: seed,
            grid: GridSpec { density: self.grid },
            bounds: Bounds {
                min: self.min_elements,
                max: self.max_elements,
            },
            render: RenderSettings {
                canvas_size: self.canvas,
                stroke_weight: self.stroke,
            },
            search: SearchConfig { top_k: self.top_k },
            fitness: FitnessConfig {
                variant,
                evaluated_subset: self.subset.chars().collect(),
                defer_unevaluated: self.defer_unevaluated,
                ..Default::default()
            },
            ..Default::default()
        };
        config.validate()?;
        Ok(config)
    }
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn cmd_evolve(args: &EvolveArgs) -> Result<()> {
    let targets = args.evo.targets()?;
    let config = args.evo.config(args.fitness, args.seed)?;
    let evaluator = Evaluator::new(targets.clone(), config.render, config.search, config.fitness.clone())?;
    let (population, stats) = evolve(config.clone(), targets, args.evo.threads, |_| {})?;
    write_run(&args.out, &config, &stats, &population, &evaluator, config.generations)?;
    let last = stats.last().expect("at least generation 0");
    println!(
        "generation {} best_fitness {} elements {} stats {}",
        last.generation,
        last.best_fitness,
        last.best_element_count,
        args.out.join("stats.csv").display()
    );
    Ok(())
}

fn cmd_experiments(args: &ExperimentArgs) -> Result<()> {
    let targets = args.evo.targets()?;
    let base = args.evo.config(args.suite, args.seed_base)?;
    let outcome = run_suite(&base, args.suite, args.runs, args.seed_base, &targets, args.evo.threads, |run| {
        let last = run.stats.last().expect("at least generation 0");
        eprintln!(
            "seed {} best_fitness {} elements {}",
            run.seed, last.best_fitness, last.best_element_count
        );
    })?;
    for run in &outcome.runs {
        write_file(&args.out.join(format!("seed_{}", run.seed)).join("stats.csv"), run.stats.to_csv())?;
    }
    write_file(&args.out.join("aggregate.csv"), outcome.aggregate_csv()?)?;
    write_file(
        &args.out.join("shared_elements.csv"),
        outcome.shared_elements(&targets)?.to_csv(),
    )?;
    let best = outcome.best_run();
    let doc = crate::io::document::StencilDocument::from_stencil(
        &best.best,
        base.render,
        Some(args.suite),
        Some(crate::io::document::Provenance {
            seed: best.seed,
            generation: base.generations,
            config_digest: EvoConfig { rng_seed: best.seed, ..base.clone() }.digest(),
        }),
    );
    crate::io::document::save_stencil(&doc, args.out.join("best.stencil"))?;
    println!(
        "suite {} runs {} best_fitness {} aggregate {}",
        args.suite,
        outcome.runs.len(),
        best.best.fitness.unwrap_or(f64::NAN),
        args.out.join("aggregate.csv").display()
    );
    Ok(())
}

fn cmd_render(args: &RenderArgs) -> Result<()> {
    let doc = load_stencil(&args.stencil)?;
    let mapping = match (&args.mapping, args.random_seed) {
        (Some(path), _) => Some(ShapeMapping::load(path)?),
        (None, Some(seed)) => Some(ShapeMapping::random(seed)),
        (None, None) => None,
    };
    let library = match (&args.shapes, &mapping) {
        (Some(path), _) => Some(ShapeLibrary::load(path)?),
        (None, Some(_)) => Some(ShapeLibrary::builtin()),
        (None, None) => None,
    };
    if let Some(out) = &args.png {
        let c = args.char.expect("clap enforces --char with --png");
        let stencil = doc.to_stencil()?;
        return write_png(&render_expression(&stencil, c, &doc.render)?, out);
    }
    let out = args.svg.as_ref().expect("clap enforces an output");
    let shapes = match (&library, &mapping) {
        (Some(lib), Some(map)) => Some((lib, map)),
        (Some(_), None) => return Err(Error::InvalidConfig("--shapes needs --mapping or --random-seed".into())),
        _ => None,
    };
    let svg = if args.overview {
        export_svg_stencil(&doc)
    } else if let Some(text) = &args.text {
        render_specimen(&doc, text, shapes, args.tracking)?
    } else {
        let c = args.char.expect("clap enforces one target");
        match shapes {
            Some((lib, map)) => assemble_with_shapes(&doc, c, lib, map)?,
            None => export_svg_glyph(&doc, c)?,
        }
    };
    write_file(out, svg)
}

#[cfg(feature = "service")]
fn cmd_serve(args: &ServeArgs) -> Result<()> {
    let config = crate::service::ServiceConfig {
        targets_root: args.targets_root.clone(),
        shape_libs: args.shape_libs.clone(),
        runs_dir: args.runs_dir.clone(),
        capacity: args.capacity,
    };
    let runtime = tokio::runtime::Runtime::new().map_err(|e| Error::io("tokio runtime", e))?;
    runtime.block_on(crate::service::serve((args.bind, args.port).into(), config))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Evolve(args) => cmd_evolve(&args),
        Command::Render(args) => cmd_render(&args),
        Command::Experiments(args) => cmd_experiments(&args),
        #[cfg(feature = "service")]
        Command::Serve(args) => cmd_serve(&args),
        Command::Targets(TargetsCommand::ExportBuiltin { out, canvas }) => {
            if canvas < 8 {
                return Err(Error::InvalidConfig(format!("canvas must be at least 8 px, got {canvas}")));
            }
            builtin_alphabet(canvas).save(&out)
        }
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
