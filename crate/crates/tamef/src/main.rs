use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tamef::commands::{CliError, EXIT_USAGE};
use tamef::{run, RunConfig};

/// Certified estimates for graded sequence spaces, implicit solves and
/// sphere atlases, as reproducible batch runs.
#[derive(Parser)]
#[command(name = "tamef", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// JSON run configuration; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed of the ChaCha8 probe generator.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Truncation degree K.
    #[arg(long, global = true)]
    k: Option<usize>,
    /// Highest seminorm index.
    #[arg(long, global = true)]
    nmax: Option<usize>,
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Number of probes.
    #[arg(long, global = true)]
    probes: Option<usize>,
    /// Real dimension of the Euclidean fiber.
    #[arg(long, global = true)]
    fiber_dim: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Tame-equivalence certificates between two gradings, both directions.
    CertifyGradings {
        /// l1, linf, l2 or decreasing.
        #[arg(long)]
        a: Option<String>,
        #[arg(long)]
        b: Option<String>,
        #[arg(long)]
        r_max: Option<usize>,
    },
    /// Tameness certificate of a registry map.
    CertifyMap {
        /// identity, shift_up, shift_down, derivative, scale:<c>,
        /// coeff_square, projection:<i>, product:<a,b>, compose:<a,b>.
        #[arg(long)]
        map: Option<String>,
        #[arg(long)]
        grading: Option<String>,
        #[arg(long)]
        r_max: Option<usize>,
    },
    /// Newton solve of φ(x, y) = 0 for y on a coordinate splitting.
    Solve {
        /// sphere:<n>, spheres:<n1,…>, linear:<a,…>, affine:<rows|c>,
        /// custom:<path>.
        #[arg(long)]
        constraint: Option<String>,
        /// Fixed coordinates, comma separated; zero-padded.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        x: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        y0: Option<Vec<f64>>,
        /// Indices of the solved coordinates.
        #[arg(long, value_delimiter = ',')]
        y_coords: Option<Vec<usize>>,
        #[arg(long)]
        max_iter: Option<usize>,
    },
    /// Atlas of a sphere or sphere intersection and its transition checks.
    Atlas {
        /// sphere:<n> or spheres:<n1,n2,…>.
        #[arg(long)]
        constraint: Option<String>,
        /// Newton seeds for intersections.
        #[arg(long)]
        seeds: Option<usize>,
        #[arg(long)]
        transition_probes: Option<usize>,
    },
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn resolve(cli: Cli) -> Result<RunConfig, CliError> {
    let g = cli.global;
    let mut cfg = match &g.config {
        Some(p) => RunConfig::from_file(p).map_err(CliError::usage)?,
        None => RunConfig::default(),
    };
    set(&mut cfg.seed, g.seed);
    set(&mut cfg.out, g.out);
    set(&mut cfg.k, g.k);
    set(&mut cfg.nmax, g.nmax);
    set(&mut cfg.probes, g.probes);
    set(&mut cfg.fiber_dim, g.fiber_dim);
    if g.tol.is_some() {
        cfg.tol = g.tol;
    }
    cfg.command = match cli.command {
        Command::CertifyGradings { a, b, r_max } => {
            set(&mut cfg.grading_a, a);
            set(&mut cfg.grading_b, b);
            set(&mut cfg.r_max, r_max);
            "certify-gradings"
        }
        Command::CertifyMap { map, grading, r_max } => {
            set(&mut cfg.map, map);
            set(&mut cfg.grading, grading);
            set(&mut cfg.r_max, r_max);
            "certify-map"
        }
        Command::Solve { constraint, x, y0, y_coords, max_iter } => {
            set(&mut cfg.constraint, constraint);
            set(&mut cfg.x, x);
            if y0.is_some() {
                cfg.y0 = y0;
            }
            if y_coords.is_some() {
                cfg.y_coords = y_coords;
            }
            set(&mut cfg.max_iter, max_iter);
            "solve"
        }
        Command::Atlas { constraint, seeds, transition_probes } => {
            set(&mut cfg.constraint, constraint);
            set(&mut cfg.seeds, seeds);
            set(&mut cfg.transition_probes, transition_probes);
            "atlas"
        }
    }
    .into();
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let result = resolve(cli).and_then(|cfg| run(&cfg));
    match result {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            ExitCode::from(outcome.code as u8)
        }
        Err(e) => {
            eprintln!("tamef: {e}");
            ExitCode::from(e.code as u8)
        }
    }
}
