use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rheotome::pipeline::{parse_stages, remodel_step, run_pipeline, Stage, ALL_STAGES};
use rheotome::scene::load_scene;
use rheotome::Error;

#[derive(Parser)]
#[command(name = "rheotome", version, about = "Generate, accumulate, mesh, slice and analyze bridging structures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the deck and pre-form.
    Generate(Common),
    /// Apply the accumulation raster.
    Accumulate(Common),
    /// Extract the surface mesh.
    Mesh(Common),
    /// Slice into layers with support contours.
    Slice(Common),
    /// Write the analysis report.
    Analyze(Common),
    /// Run every stage, or those given by --stage.
    Run(Common),
    /// Parse and validate the scene only.
    Validate(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    scene: PathBuf,
    /// Output directory (overrides the scene).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated stages: generate,accumulate,mesh,slice,analyze.
    #[arg(long)]
    stage: Option<String>,
    /// Accumulation raster replacing the scene's own.
    #[arg(long)]
    raster: Option<PathBuf>,
    /// Worker threads; output does not depend on it.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    verbose: bool,
}

fn execute(cmd: Command) -> Result<(), Error> {
    let (fixed, c) = match cmd {
        Command::Generate(c) => (Some(Stage::Generate), c),
        Command::Accumulate(c) => (Some(Stage::Accumulate), c),
        Command::Mesh(c) => (Some(Stage::Mesh), c),
        Command::Slice(c) => (Some(Stage::Slice), c),
        Command::Analyze(c) => (Some(Stage::Analyze), c),
        Command::Run(c) => (None, c),
        Command::Validate(c) => {
            load_scene(&c.scene)?;
            println!("{}: ok", c.scene.display());
            return Ok(());
        }
    };
    if let Some(n) = c.threads {
        if n == 0 {
            return Err(Error::invalid("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::invalid(e.to_string()))?;
    }
    let mut scene = load_scene(&c.scene)?;
    if let Some(r) = &c.raster {
        scene = remodel_step(&scene, r)?;
    }
    if let Some(o) = c.out {
        scene.output.dir = o;
    }
    let stages = match (&c.stage, fixed) {
        (Some(list), _) => parse_stages(list)?,
        (None, Some(s)) => vec![s],
        (None, None) => ALL_STAGES.to_vec(),
    };
    let out = run_pipeline(&scene, &stages)?;
    if c.verbose {
        for p in &out.manifest.products {
            eprintln!("{}  {}  {} bytes", p.sha256, p.path, p.bytes);
        }
        if let Some(r) = &out.report {
            eprintln!(
                "max slope {:.1}%  support fraction {:.4}  layers {}",
                r.slope.max_slope_pct, r.support.support_fraction, r.layers.layer_count
            );
        }
    }
    println!("{}", scene.output.dir.join("manifest.json").display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.code());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
