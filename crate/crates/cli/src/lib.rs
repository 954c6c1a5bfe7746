//! Command-line front end: argument parsing and command dispatch.
//!
//! [`run`] does all the work and returns the exit code with both output
//! streams, so the binary is a thin wrapper.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use solab_core::catalog;
use solab_core::geometry::load_geometry;
use solab_core::selftest::run_selftest;
use solab_core::verify::{
    parse_at, parse_grid, run_verify, seed_from_env, verify_catalog, Check, VerifyError,
    VerifyOptions,
};

/// Numerical verification of Ricci-soliton type equations on coordinate charts.
#[derive(Parser)]
#[command(name = "solab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Verify a geometry file.
    Verify {
        file: PathBuf,
        /// Evaluation point such as `x=0.5,y=-1`; repeatable.
        #[arg(long = "at", value_name = "POINT")]
        at: Vec<String>,
        /// `k` points per axis over the sampling box, or `x=lo:hi:k,y=lo:hi:k`.
        #[arg(long, value_name = "SPEC")]
        grid: Option<String>,
        /// Comma-separated checks; defaults to the file's or to those its sections imply.
        #[arg(long, value_delimiter = ',')]
        checks: Option<Vec<String>>,
        #[arg(long)]
        json: bool,
        #[arg(long, value_name = "T")]
        tol: Option<f64>,
    },
    /// Built-in geometries.
    Catalog {
        #[command(subcommand)]
        command: CatalogCommand,
    },
    /// Run every acceptance suite.
    Selftest {
        #[arg(long)]
        json: bool,
    },
}

#[derive(Subcommand)]
enum CatalogCommand {
    /// List entries and their parameters.
    List,
    /// Print an entry as a geometry file.
    Show { call: String },
    /// Verify an entry and reproduce its expected values.
    Verify {
        call: String,
        #[arg(long)]
        json: bool,
    },
}

pub const PASS: u8 = 0;
pub const ASSERTION: u8 = 1;
pub const INPUT: u8 = 2;

/// Exit code and captured output of one invocation.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Outcome {
    pub code: u8,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn verdict(passed: bool, stdout: String) -> Self {
        Outcome {
            code: if passed { PASS } else { ASSERTION },
            stdout,
            stderr: String::new(),
        }
    }

    fn input_error(e: impl std::fmt::Display) -> Self {
        Outcome {
            code: INPUT,
            stdout: String::new(),
            stderr: format!("error: {e}\n"),
        }
    }
}

/// Runs `solab` with `args`, the first being the program name.
pub fn run<I, S>(args: I) -> Outcome
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                Outcome {
                    code: INPUT,
                    stdout: String::new(),
                    stderr: text,
                }
            } else {
                Outcome {
                    code: PASS,
                    stdout: text,
                    stderr: String::new(),
                }
            };
        }
    };
    match cli.command {
        Command::Verify {
            file,
            at,
            grid,
            checks,
            json,
            tol,
        } => match verify_file(&file, &at, grid.as_deref(), checks, tol) {
            Ok(report) => {
                let out = if json {
                    format!("{}\n", report.to_json())
                } else {
                    report.to_text()
                };
                Outcome::verdict(report.passed, out)
            }
            Err(e) => Outcome::input_error(e),
        },
        Command::Catalog { command } => match command {
            CatalogCommand::List => {
                let mut out = String::new();
                for e in catalog::entries() {
                    let params: Vec<String> = e
                        .params
                        .iter()
                        .map(|p| format!("{}={}", p.name, p.default))
                        .collect();
                    let _ = writeln!(out, "{}({})  {}", e.name, params.join(", "), e.summary);
                }
                Outcome::verdict(true, out)
            }
            CatalogCommand::Show { call } => match catalog::get_call(&call) {
                Ok(inst) => Outcome::verdict(true, inst.to_toml()),
                Err(e) => Outcome::input_error(e),
            },
            CatalogCommand::Verify { call, json } => {
                match verify_catalog(&call, &VerifyOptions::default()) {
                    Ok(r) => {
                        let out = if json {
                            format!("{}\n", r.to_json())
                        } else {
                            r.to_text()
                        };
                        Outcome::verdict(r.passed, out)
                    }
                    Err(e) => Outcome::input_error(e),
                }
            }
        },
        Command::Selftest { json } => {
            let report = run_selftest(seed_from_env());
            let out = if json {
                format!("{}\n", report.to_json())
            } else {
                report.to_text()
            };
            Outcome::verdict(report.passed, out)
        }
    }
}

fn verify_file(
    file: &Path,
    at: &[String],
    grid: Option<&str>,
    checks: Option<Vec<String>>,
    tol: Option<f64>,
) -> Result<solab_core::report::Report, VerifyError> {
    let spec = load_geometry(file)?;
    let mut points = Vec::new();
    for a in at {
        points.push(parse_at(&spec, a)?);
    }
    if let Some(g) = grid {
        points.extend(parse_grid(&spec, g)?);
    }
    let checks = checks
        .map(|c| c.iter().map(|s| s.parse::<Check>()).collect())
        .transpose()?;
    let opts = VerifyOptions {
        checks,
        points: (!points.is_empty()).then_some(points),
        tolerance: tol,
        seed: None,
    };
    run_verify(&spec, &opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solab(args: &[&str]) -> Outcome {
        run(std::iter::once("solab").chain(args.iter().copied()))
    }

    fn temp_file(name: &str, text: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("solab-cli-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join(name);
        std::fs::write(&path, text).unwrap();
        path
    }

    const FLAT: &str = "[manifold]\ncoords = [\"x\", \"y\"]\n[metric]\nconformal = \"1\"\n";

    #[test]
    fn help_and_version_succeed() {
        assert_eq!(solab(&["--help"]).code, PASS);
        assert!(solab(&["--version"]).stdout.contains("solab"));
    }

    #[test]
    fn usage_errors_are_input_errors() {
        for args in [
            &["bogus"][..],
            &["verify"],
            &["catalog"],
            &["selftest", "--nope"],
        ] {
            let o = solab(args);
            assert_eq!(o.code, INPUT, "{args:?}");
            assert!(!o.stderr.is_empty());
        }
    }

    #[test]
    fn verify_exit_codes() {
        let flat = temp_file("flat.toml", FLAT);
        let flat = flat.to_str().unwrap();
        assert_eq!(solab(&["verify", flat]).code, PASS);

        let bad = temp_file(
            "swapped.toml",
            &FLAT.replace(
                "conformal = \"1\"",
                "components = [[\"1\", \"2\"], [\"2\", \"1\"]]",
            ),
        );
        let o = solab(&["verify", bad.to_str().unwrap()]);
        assert_eq!(o.code, ASSERTION, "{}", o.stdout);

        let o = solab(&["verify", flat, "--checks", "gradient"]);
        assert_eq!(o.code, INPUT);
        assert!(o.stderr.contains("potential"), "{}", o.stderr);
        assert_eq!(solab(&["verify", flat, "--at", "x=1,z=2"]).code, INPUT);
        assert_eq!(solab(&["verify", flat, "--grid", "x=0:1"]).code, INPUT);
    }

    #[test]
    fn at_points_replace_the_sample() {
        let flat = temp_file("flat_at.toml", FLAT);
        let o = solab(&[
            "verify",
            flat.to_str().unwrap(),
            "--at",
            "x=0.5,y=-1",
            "--at",
            "y=0,x=0",
            "--json",
        ]);
        let r = solab_core::report::Report::from_json(&o.stdout).unwrap();
        assert_eq!(r.points, vec![vec![0.5, -1.0], vec![0.0, 0.0]]);
    }

    #[test]
    fn catalog_commands() {
        assert_eq!(
            solab(&["catalog", "list"]).stdout.lines().count(),
            catalog::entries().len()
        );
        let o = solab(&["catalog", "show", "gaussian(3, -1)"]);
        assert!(o.stdout.starts_with("# gaussian(3, -1)\n"), "{}", o.stdout);
        let o = solab(&["catalog", "verify", "cigar"]);
        assert_eq!(o.code, PASS, "{}", o.stdout);
        assert_eq!(solab(&["catalog", "verify", "cone(2)"]).code, INPUT);
    }

    #[test]
    fn json_output_is_stable() {
        let a = solab(&["catalog", "verify", "sphere(2)", "--json"]);
        let b = solab(&["catalog", "verify", "sphere(2)", "--json"]);
        assert_eq!(a, b);
        let r = solab_core::report::CatalogReport::from_json(&a.stdout).unwrap();
        assert_eq!(solab_core::report::quantize(&r).unwrap(), r);
        assert_eq!(format!("{}\n", r.to_json()), a.stdout);
    }
}
