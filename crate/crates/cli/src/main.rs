use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::Parser;

use pwbddc::adaptive::Scaling;
use pwbddc::bench::{emit_table, sweep, Example, Experiment, ExperimentConfig, Report, TableLayout};
use pwbddc::mesh::PartitionDump;
use pwbddc::pwls::{assemble_global, write_vector_market};

/// Plane-wave least-squares Helmholtz solver with adaptive BDDC.
#[derive(Debug, Parser)]
#[command(name = "pwbddc", version)]
struct Args {
    /// JSON file with any subset of the options below; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// constant | layered | random
    #[arg(long)]
    example: Option<Example>,
    #[arg(long)]
    omega_over_pi: Option<f64>,
    /// Plane waves per element.
    #[arg(long)]
    p: Option<usize>,
    /// Subdomains per direction.
    #[arg(long)]
    nd: Option<usize>,
    /// Complete elements per subdomain side.
    #[arg(long)]
    n_side: Option<usize>,
    /// multiplicity | deluxe
    #[arg(long)]
    scaling: Option<Scaling>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    levels: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    inner_tol: Option<f64>,
    #[arg(long)]
    maxit: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Report path (JSON); for --table the CSV path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run a sweep: error | frequency | subdomains | mesh | multilevel.
    #[arg(long)]
    table: Option<TableLayout>,
    /// Directory for Matrix Market dumps of the system and right-hand side.
    #[arg(long)]
    matrix_market: Option<PathBuf>,
    /// Partition dump (JSON).
    #[arg(long)]
    partition: Option<PathBuf>,
    /// Per-face coarse-space diagnostics (CSV).
    #[arg(long)]
    face_csv: Option<PathBuf>,
}

impl Args {
    fn config(&self) -> anyhow::Result<ExperimentConfig> {
        let mut c = match &self.config {
            Some(path) => {
                let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
                serde_json::from_reader(f).with_context(|| format!("parsing {}", path.display()))?
            }
            None => ExperimentConfig::default(),
        };
        macro_rules! over {
            ($($f:ident),*) => { $( if let Some(v) = self.$f.clone() { c.$f = v; } )* };
        }
        over!(example, omega_over_pi, p, nd, n_side, scaling, levels, tol, inner_tol, maxit, seed);
        if self.theta.is_some() {
            c.theta = self.theta;
        }
        for (dst, src) in [
            (&mut c.out, &self.out),
            (&mut c.matrix_market, &self.matrix_market),
            (&mut c.partition, &self.partition),
            (&mut c.face_csv, &self.face_csv),
        ] {
            if src.is_some() {
                *dst = src.clone();
            }
        }
        c.validate()?;
        Ok(c)
    }
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn run_one(cfg: &ExperimentConfig) -> anyhow::Result<Report> {
    let exp = Experiment::setup(cfg)?;
    if let Some(path) = &cfg.partition {
        serde_json::to_writer_pretty(create(path)?, &PartitionDump::new(&exp.mesh, &exp.part))?;
    }
    if let Some(dir) = &cfg.matrix_market {
        std::fs::create_dir_all(dir)?;
        let a = assemble_global(&exp.mesh, &exp.space)?;
        a.write_matrix_market(create(&dir.join("A.mtx"))?)?;
        write_vector_market(&exp.rhs, create(&dir.join("b.mtx"))?)?;
    }
    let outcome = exp.solve()?;
    if let Some(path) = &cfg.face_csv {
        outcome.bddc.cs.write_face_csv(&exp.sub.face_sides, create(path)?)?;
    }
    Ok(outcome.report)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    // usage errors exit 1 like setup errors
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let cfg = match args.config() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    };
    let configs = match args.table {
        Some(layout) => sweep(layout, &cfg),
        None => vec![cfg.clone()],
    };
    let mut reports = Vec::new();
    for c in &configs {
        match run_one(c) {
            Ok(r) => reports.push(r),
            Err(e) => {
                eprintln!("error: {e:#}");
                return ExitCode::from(1);
            }
        }
    }
    let written = match args.table {
        Some(layout) => {
            let csv = emit_table(&reports, layout);
            match &cfg.out {
                Some(path) => std::fs::write(path, &csv).map_err(anyhow::Error::from),
                None => {
                    print!("{csv}");
                    Ok(())
                }
            }
        }
        None => {
            let json = serde_json::to_string_pretty(&reports[0]).expect("report serializes");
            println!("{json}");
            match &cfg.out {
                Some(path) => create(path).and_then(|mut w| Ok(writeln!(w, "{json}")?)),
                None => Ok(()),
            }
        }
    };
    if let Err(e) = written {
        eprintln!("error: {e:#}");
        return ExitCode::from(1);
    }
    if reports.iter().all(|r| r.converged) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}
