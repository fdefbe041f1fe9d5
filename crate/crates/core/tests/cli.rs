use std::path::PathBuf;
use std::process::Command as Proc;

use darboux_core::cli::{cmd_density, cmd_simulate, cmd_verify, Command, Grid, RunConfig};
use darboux_core::Error;
use proptest::prelude::*;

fn cfg(command: Command) -> RunConfig {
    RunConfig {
        command,
        ..RunConfig::default()
    }
}

fn density_rows(c: &RunConfig) -> Vec<Vec<String>> {
    let mut buf = Vec::new();
    cmd_density(c, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(!text.contains('\r'));
    text.lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn density_grid_shape_and_header() {
    let c = RunConfig {
        example: Some("e1".into()),
        t: vec![1.0],
        grid: Some("-1:1:3".parse().unwrap()),
        ..cfg(Command::Density)
    };
    let rows = density_rows(&c);
    assert_eq!(rows[0].join(","), "t,x,y,p_Y,p_Ytilde");
    assert_eq!(rows.len(), 10);
    for r in &rows[1..] {
        assert_eq!(r.len(), 5);
        // 17 significant digits in scientific notation
        let mantissa = r[3].split('e').next().unwrap().trim_start_matches('-');
        assert_eq!(mantissa.replace('.', "").len(), 17, "{}", r[3]);
        let v: f64 = r[3].parse().unwrap();
        assert!(v > 0.0);
    }
}

#[test]
fn elastic_example_requires_gamma() {
    let c = RunConfig {
        example: Some("e3".into()),
        ..cfg(Command::Density)
    };
    let err = cmd_density(&c, &mut Vec::new()).unwrap_err();
    assert!(matches!(&err, Error::Config { field, .. } if field == "gamma"), "{err}");
}

#[test]
fn unit_interval_density_is_symmetric() {
    let c = RunConfig {
        example: Some("e4".into()),
        t: vec![0.5],
        grid: Some(Grid {
            lo: 0.15,
            hi: 0.85,
            n: 4,
        }),
        ..cfg(Command::Density)
    };
    let rows = density_rows(&c);
    let val = |x: &str, y: &str| -> f64 {
        rows[1..].iter().find(|r| r[1] == x && r[2] == y).unwrap()[4]
            .parse()
            .unwrap()
    };
    let xs: Vec<String> = rows[1..5].iter().map(|r| r[2].clone()).collect();
    for a in &xs {
        for b in &xs {
            let (p, q) = (val(a, b), val(b, a));
            assert!((p - q).abs() <= 1e-14 * p.abs().max(1e-300), "{a},{b}: {p} vs {q}");
        }
    }
}

#[test]
fn grid_outside_the_state_space_is_rejected() {
    let c = RunConfig {
        example: Some("e2".into()),
        grid: Some("-1:1:3".parse().unwrap()),
        ..cfg(Command::Density)
    };
    assert!(matches!(cmd_density(&c, &mut Vec::new()), Err(Error::Config { .. })));
}

#[test]
fn grid_parsing() {
    assert_eq!("0:1:5".parse::<Grid>().unwrap(), Grid { lo: 0.0, hi: 1.0, n: 5 });
    for bad in ["0:1:1", "1:0:4", "0:1", "a:1:3", "0:1:-2"] {
        assert!(
            matches!(bad.parse::<Grid>(), Err(Error::Config { ref field, .. }) if field == "grid"),
            "{bad}"
        );
    }
}

#[test]
fn config_errors_name_line_and_field() {
    let err = RunConfig::parse("command = density\n# note\n\nseed = x\n").unwrap_err();
    assert!(
        matches!(&err, Error::Config { line: Some(4), field, .. } if field == "seed"),
        "{err}"
    );
    let err = RunConfig::parse("colour = blue\n").unwrap_err();
    assert!(matches!(&err, Error::Config { line: Some(1), field, .. } if field == "colour"));
    assert!(matches!(RunConfig::parse("tol = 0\n"), Err(Error::Config { field, .. }) if field == "tol"));
    assert!(matches!(
        RunConfig::parse("grid = 0:1:1\n"),
        Err(Error::Config { line: Some(1), .. })
    ));
}

#[test]
fn unknown_suite() {
    let c = RunConfig {
        suite: Some("nonsense".into()),
        ..cfg(Command::Verify)
    };
    assert_eq!(
        cmd_verify(&c, &mut Vec::new()).unwrap_err(),
        Error::UnknownSuite("nonsense".into())
    );
}

#[test]
fn negativity_suite_passes_on_a_negative_value() {
    let c = RunConfig {
        suite: Some("negativity".into()),
        ..cfg(Command::Verify)
    };
    let mut buf = Vec::new();
    let o = cmd_verify(&c, &mut buf).unwrap();
    assert!(o.success, "{}", o.report);
    let csv = String::from_utf8(buf).unwrap();
    let value: f64 = csv.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!(value < 0.0);
}

#[test]
fn fourier_suite_and_density_suite() {
    for (suite, example) in [("appendixA", None), ("theorem48", Some("e1"))] {
        let c = RunConfig {
            suite: Some(suite.into()),
            example: example.map(String::from),
            ..cfg(Command::Verify)
        };
        let o = cmd_verify(&c, &mut Vec::new()).unwrap();
        assert!(o.success, "{}", o.report);
    }
}

#[test]
fn simulate_is_reproducible_and_calibrated() {
    let c = RunConfig {
        example: Some("e2".into()),
        t: vec![0.5],
        paths: 30_000,
        seed: 42,
        ..cfg(Command::Simulate)
    };
    let mut a = Vec::new();
    let mut b = Vec::new();
    cmd_simulate(&c, &mut a).unwrap();
    cmd_simulate(&c, &mut b).unwrap();
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "bin_lo,bin_hi,mc_mass,kernel_mass,z_score");
    for l in lines {
        let z: f64 = l.rsplit(',').next().unwrap().parse().unwrap();
        assert!(z.abs() < 4.0, "{l}");
    }
}

#[test]
fn simulate_with_ten_paths_fails() {
    let c = RunConfig {
        example: Some("e1".into()),
        paths: 10,
        ..cfg(Command::Simulate)
    };
    assert!(matches!(
        cmd_simulate(&c, &mut Vec::new()),
        Err(Error::TooFewSurvivors { .. })
    ));
}

fn bin() -> Proc {
    Proc::new(env!("CARGO_BIN_EXE_darboux"))
}

#[test]
fn binary_exit_codes() {
    let ok = bin().args(["verify", "negativity"]).output().unwrap();
    assert!(ok.status.success());
    assert!(String::from_utf8_lossy(&ok.stdout).contains("PASS"));

    let unknown = bin().args(["verify", "bogus"]).output().unwrap();
    assert!(!unknown.status.success());
    assert!(String::from_utf8_lossy(&unknown.stderr).contains("bogus"));

    let few = bin()
        .args(["simulate", "--example", "e1", "--paths", "10"])
        .output()
        .unwrap();
    assert!(!few.status.success());
    assert!(String::from_utf8_lossy(&few.stderr).contains("too few"));

    let gamma = bin().args(["density", "--example", "e3"]).output().unwrap();
    assert!(!gamma.status.success());
    assert!(String::from_utf8_lossy(&gamma.stderr).contains("gamma"));

    // A failing check turns into a nonzero exit.
    let strict = bin()
        .args(["verify", "theorem48", "--example", "e1", "--tol", "1e-30"])
        .output()
        .unwrap();
    assert!(!strict.status.success());
    assert!(String::from_utf8_lossy(&strict.stdout).contains("FAIL"));
}

#[test]
fn binary_reads_config_and_writes_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("grid.csv");
    let conf = dir.path().join("run.conf");
    std::fs::write(&conf, "example = e3\ngamma = 0.5\nt = 0.3,1\ngrid = 0.5:1.5:3\n").unwrap();
    let st = bin()
        .args(["density", "--config"])
        .arg(&conf)
        .args(["--t", "2", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(st.success());
    let text = std::fs::read_to_string(&out).unwrap();
    // the command-line time overrides the two in the file
    assert_eq!(text.lines().count(), 1 + 9);
    assert!(text.lines().skip(1).all(|l| l.starts_with("2.0000000000000000e0,")));
}

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![-1e6..1e6, 1e-12..1e-3, Just(0.1), Just(1.0 / 3.0)]
}

prop_compose! {
    fn run_config()(
        command in prop_oneof![Just(Command::Density), Just(Command::Verify), Just(Command::Simulate), Just(Command::Catalog)],
        example in proptest::option::of("e[1-5]"),
        gamma in proptest::option::of(finite()),
        t in proptest::collection::vec(1e-6..50.0f64, 0..4),
        grid in proptest::option::of((finite(), 1e-9..1e3f64, 2usize..500)),
        tol in proptest::option::of(1e-15..1.0f64),
        paths in 1usize..10_000_000,
        seed in any::<u64>(),
        dt in 1e-6..0.5f64,
        x0 in proptest::option::of(finite()),
        suite in proptest::option::of("[a-z][a-zA-Z0-9]{0,12}"),
        out in proptest::option::of("[a-z0-9_/]{1,20}\\.csv"),
    ) -> RunConfig {
        RunConfig {
            command,
            example,
            gamma,
            t,
            grid: grid.map(|(lo, w, n)| Grid { lo, hi: lo + w, n }),
            tol,
            paths,
            seed,
            dt,
            x0,
            suite,
            out: out.map(PathBuf::from),
        }
    }
}

proptest! {
    #[test]
    fn config_round_trip(c in run_config()) {
        let parsed = RunConfig::parse(&c.emit()).unwrap();
        prop_assert_eq!(parsed, c);
    }
}
