use std::path::PathBuf;
use std::process::{Command, Output};

fn solab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_solab"))
        .args(args)
        .env_remove("SOLAB_SEED")
        .output()
        .expect("solab binary runs")
}

fn with_seed(seed: &str, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_solab"))
        .args(args)
        .env("SOLAB_SEED", seed)
        .output()
        .expect("solab binary runs")
}

fn write(name: &str, text: &str) -> PathBuf {
    let path = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

const CIGAR: &str = r#"
[manifold]
name = "cigar"
coords = ["x", "y"]

[metric]
conformal = "1/(1+x^2+y^2)"

[potential]
f = "-log(1+x^2+y^2)"

[soliton]
lambda = 0
"#;

#[test]
fn passing_verify_exits_zero() {
    let file = write("cigar.toml", CIGAR);
    let o = solab(&[
        "verify",
        file.to_str().unwrap(),
        "--at",
        "x=0,y=0",
        "--checks",
        "gradient,lambda,inequalities",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("pass  gradient"));
}

#[test]
fn failing_assertion_exits_one() {
    let file = write(
        "indefinite.toml",
        "[manifold]\ncoords = [\"x\", \"y\"]\n[metric]\ncomponents = [[\"-1\", \"0\"], [\"0\", \"1\"]]\n",
    );
    let o = solab(&["verify", file.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(
        stdout(&o).contains("not positive definite"),
        "{}",
        stdout(&o)
    );
}

#[test]
fn wrong_lambda_is_an_assertion_failure() {
    let file = write(
        "cigar_wrong.toml",
        &CIGAR.replace("lambda = 0", "lambda = 1"),
    );
    let o = solab(&["verify", file.to_str().unwrap(), "--checks", "gradient"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn input_errors_exit_two() {
    let missing = write("nocoords.toml", "[metric]\nconformal = \"1\"\n");
    let o = solab(&["verify", missing.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("coords required"));

    let cigar = write("cigar_checks.toml", CIGAR);
    let cigar = cigar.to_str().unwrap();
    for args in [
        vec!["verify", cigar, "--checks", "vaisman"],
        vec!["verify", cigar, "--checks", "nonsense"],
        vec!["verify", cigar, "--at", "x=1"],
        vec!["verify", "/nonexistent/file.toml"],
        vec!["catalog", "show", "nosuchentry"],
        vec!["catalog", "verify", "cylinder(9)"],
        vec!["frobnicate"],
    ] {
        assert_eq!(solab(&args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn verify_json_is_deterministic_and_seeded() {
    let file = write("cigar_seed.toml", CIGAR);
    let args = ["verify", file.to_str().unwrap(), "--json"];
    let a = solab(&args);
    let b = solab(&args);
    assert_eq!(a.stdout, b.stdout);
    let hex = with_seed("0x5EED", &args);
    assert_eq!(a.stdout, hex.stdout);
    let other = with_seed("7", &args);
    assert_ne!(a.stdout, other.stdout);
    let report = solab_core::report::Report::from_json(&stdout(&other)).unwrap();
    assert_eq!(report.seed, 7);
}

#[test]
fn grid_and_tolerance_flags() {
    let file = write("cigar_grid.toml", CIGAR);
    let o = solab(&[
        "verify",
        file.to_str().unwrap(),
        "--grid",
        "x=-1:1:3,y=0:0:1",
        "--tol",
        "1e-6",
        "--json",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let r = solab_core::report::Report::from_json(&stdout(&o)).unwrap();
    assert_eq!(r.points.len(), 3);
    assert_eq!(r.tolerance, 1e-6);
}

#[test]
fn catalog_show_output_loads_back() {
    let o = solab(&["catalog", "show", "cylinder(4)"]);
    assert_eq!(o.status.code(), Some(0));
    let file = write("cylinder4.toml", &stdout(&o));
    let v = solab(&["verify", file.to_str().unwrap()]);
    assert_eq!(v.status.code(), Some(0), "{}", stdout(&v));
    assert!(stdout(&v).contains("differs"), "printed claims annotated");
}

#[test]
fn extends_pulls_in_a_catalog_entry() {
    let file = write("ext.toml", "[manifold]\nextends = \"cylinder(3)\"\n");
    let o = solab(&["verify", file.to_str().unwrap(), "--json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let r = solab_core::report::Report::from_json(&stdout(&o)).unwrap();
    let text = r.to_text();
    assert!(text.contains("shrinking"), "{text}");
}

#[test]
fn catalog_list_and_verify() {
    let o = solab(&["catalog", "list"]);
    assert_eq!(o.status.code(), Some(0));
    let list = stdout(&o);
    for name in ["gaussian", "cigar", "hopf", "sphere", "torse_special"] {
        assert!(list.contains(name), "{name} listed");
    }
    let v = solab(&["catalog", "verify", "hopf", "--json"]);
    assert_eq!(v.status.code(), Some(0));
    let r = solab_core::report::CatalogReport::from_json(&stdout(&v)).unwrap();
    assert!(r.passed && r.outcomes.iter().all(|o| o.passed));
}
