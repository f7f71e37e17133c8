use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lattice_tdse::experiment::{self, ExperimentConfig, Report};
use lattice_tdse::{catalog, cbc_construct, AntiAliasSet, CbcCriterion, Error, Exec, LatticeDocument};

#[derive(Parser)]
#[command(name = "tdse", version, about = "Lattice pseudo-spectral Schrödinger experiments")]
struct Cli {
    /// Run every kernel on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a convergence, conservation or initial-error study.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides the config's `output`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build a rank-1 generating vector component by component.
    Cbc {
        /// Number of points, as an integer or `2^m`.
        #[arg(long, value_parser = parse_points)]
        n: u64,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Attach the minimal-norm frequency set to a lattice file.
    Aaset {
        #[arg(long)]
        lattice: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Inspect the bundled generating vectors.
    Catalog {
        #[command(subcommand)]
        action: CatalogAction,
    },
}

#[derive(Subcommand)]
enum CatalogAction {
    List,
}

fn parse_points(s: &str) -> Result<u64, String> {
    let parsed = match s.split_once('^') {
        Some(("2", m)) => m
            .trim()
            .parse::<u32>()
            .ok()
            .and_then(|m| 1u64.checked_shl(m).filter(|_| m < 63)),
        Some(_) => None,
        None => s.trim().parse().ok(),
    };
    parsed.ok_or_else(|| format!("expected an integer or 2^m, got {s:?}"))
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::InvariantViolation(_) => 3,
        Error::Config(_)
        | Error::Json(_)
        | Error::Io { .. }
        | Error::MalformedLattice(_)
        | Error::NonDivisibleModuli { .. }
        | Error::NonCoprimeComponent { .. }
        | Error::RankDeficientGenerators
        | Error::PointCountMismatch { .. }
        | Error::NonCoprime { .. }
        | Error::LengthMismatch { .. }
        | Error::ReferenceTooCoarse { .. } => 2,
        _ => 1,
    }
}

fn write_json(path: &Path, value: &serde_json::Value) -> lattice_tdse::Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    std::fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn describe(report: &Report) -> String {
    match report {
        Report::Convergence(r) => match (r.slope, r.exact) {
            (_, true) => format!("{} runs, all errors at round-off (exact)", r.rows.len()),
            (Some(s), _) => format!("{} runs, fitted slope {s:.4}", r.rows.len()),
            (None, _) => format!("{} runs, too few points to fit a slope", r.rows.len()),
        },
        Report::Conservation(r) => format!(
            "{} steps, delta_norm {:.3e}, delta_energy {:.3e}",
            r.steps, r.delta_norm, r.delta_energy
        ),
        Report::InitialError(r) => {
            let last = r.rows.last().map(|row| row.e_total).unwrap_or(0.0);
            format!("{} lattices, finest e_total {last:.3e}", r.rows.len())
        }
    }
}

fn execute(cli: Cli) -> lattice_tdse::Result<()> {
    let exec = if cli.sequential {
        Exec::Sequential
    } else {
        Exec::Parallel
    };
    match cli.command {
        Command::Run { config, out } => {
            let cfg = ExperimentConfig::from_path(&config)?;
            let dir = out
                .or_else(|| cfg.output_dir())
                .unwrap_or_else(|| cfg.resolve(Path::new("results")));
            let report = experiment::run(&cfg, exec)?;
            let (csv, summary) = report.write(&cfg, &dir)?;
            println!("{}: {}", report.name(), describe(&report));
            println!("wrote {} and {}", csv.display(), summary.display());
        }
        Command::Cbc { n, d, out } => {
            let result = cbc_construct(&CbcCriterion::new(n, d), exec)?;
            let spec = result.lattice(n)?;
            write_json(
                &out,
                &serde_json::json!({
                    "n": n,
                    "d": d,
                    "z": result.z,
                    "criterion": result.criterion,
                    "lattice": spec,
                    "lattice_hash": spec.hash(),
                }),
            )?;
            println!("z = {:?}", result.z);
        }
        Command::Aaset { lattice, out } => {
            let doc = LatticeDocument::read(&lattice)?;
            let set = AntiAliasSet::build(&doc.lattice)?;
            LatticeDocument::with_aaset(&set).write(&out)?;
            println!(
                "{} frequencies, max |h|^2 = {}, lattice {}",
                set.len(),
                set.max_norm2(),
                doc.lattice.hash()
            );
        }
        Command::Catalog {
            action: CatalogAction::List,
        } => {
            println!("{:>3} {:>6}  z", "d", "n");
            for e in catalog::entries() {
                println!("{:>3} {:>6}  {:?}", e.d, format!("2^{}", e.log2n), e.z);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_counts() {
        assert_eq!(parse_points("2^10"), Ok(1024));
        assert_eq!(parse_points("55"), Ok(55));
        assert!(parse_points("3^2").is_err());
        assert!(parse_points("2^64").is_err());
    }
}
