use cle_fourpoint::cli::*;
use cle_fourpoint::closed_forms::r_fk;
use cle_fourpoint::connection::connect_basis;
use cle_fourpoint::frobenius::DEFAULT_ORDER;
use cle_fourpoint::ode::KappaParams;
use std::process::Command as Process;

fn run_cli(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let argv = std::iter::once("cle4pt").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn column(csv: &str, name: &str) -> Vec<f64> {
    let mut lines = csv.lines();
    let idx = lines.next().unwrap().split(',').position(|h| h == name).unwrap();
    lines.map(|l| l.split(',').nth(idx).unwrap().parse().unwrap()).collect()
}

fn value(report: &str, key: &str) -> f64 {
    let prefix = format!("{key} = ");
    report.lines().find_map(|l| l.strip_prefix(&prefix)).unwrap().parse().unwrap()
}

#[test]
fn defaults_and_flags_parse() {
    let spec = parse_args(["cle4pt", "eval"]).unwrap();
    assert_eq!(spec, RunSpec::new(Command::Eval));
    assert_eq!(spec.kappa, 6.0);
    assert_eq!(spec.out, None);
    let spec = parse_args(["cle4pt", "mc", "--box", "64", "--w", "1,2", "--seed", "7", "--workers", "3"]).unwrap();
    assert_eq!((spec.mc.box_width, spec.seed, spec.workers), (64, 7, 3));
    assert_eq!(spec.mc.halfwidths, vec![1, 2]);
    let spec = parse_args(["cle4pt", "eval", "--grid", "0.1:0.3:3", "--kappa", "5.5"]).unwrap();
    assert_eq!(spec.grid.points(), vec![0.1, 0.2, 0.3]);
    assert!(parse_args(["cle4pt", "eval", "--grid", "0.3:0.1:3"]).is_err());
}

#[test]
fn eval_table_format_and_values() {
    let (code, out, _) = run_cli(&["eval", "--grid", "0.25:0.75:3"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(out.lines().next().unwrap(), "lambda,V0,Vh,V3h1,R,residual_max");
    let first = out.lines().nth(1).unwrap();
    assert!(first.split(',').all(|f| f.contains('e')), "{first}");
    let conn = connect_basis(&KappaParams::new(6.0).unwrap(), DEFAULT_ORDER).unwrap();
    let r = column(&out, "R");
    assert_eq!(r[0], conn.ratio(0.25).unwrap());
    assert!(column(&out, "residual_max").iter().all(|&v| v <= 1e-8));
}

#[test]
fn eval_at_sixteen_thirds_matches_the_closed_form() {
    let (code, out, _) = run_cli(&["eval", "--kappa", "5.333333333333333"]);
    assert_eq!(code, EXIT_OK);
    for (l, r) in column(&out, "lambda").into_iter().zip(column(&out, "R")) {
        assert!((r - r_fk(l).unwrap()).abs() <= 1e-7, "lambda {l}");
    }
}

#[test]
fn conjectural_regime_is_marked() {
    let (code, out, err) = run_cli(&["eval", "--kappa", "3", "--grid", "0.2:0.4:2"]);
    assert_eq!(code, EXIT_OK);
    assert!(err.contains("conjectural"));
    assert!(out.lines().next().unwrap().ends_with(",regime"));
    assert!(out.lines().skip(1).all(|l| l.ends_with(",CONJECTURAL")));
    let (_, out, _) = run_cli(&["eval", "--grid", "0.2:0.4:2"]);
    assert!(!out.contains("CONJECTURAL"));
}

#[test]
fn constants_report() {
    let (code, out, _) = run_cli(&["constants"]);
    assert_eq!(code, EXIT_OK);
    assert!((value(&out, "A") - 0.3224535).abs() <= 1e-6);
    assert!(value(&out, "A_abs_diff") <= 1e-6);
    let (_, out, _) = run_cli(&["constants", "--kappa", "5.333333333333333"]);
    assert!((value(&out, "A_FK") - 1.19948).abs() <= 2e-5);
    let (_, out, _) = run_cli(&["constants", "--kappa", "4.8"]);
    assert!(value(&out, "beta").abs() <= 1e-8);
}

#[test]
fn verify_passes_and_detects_an_injected_fault() {
    let (code, out, _) = run_cli(&["verify"]);
    assert_eq!(code, EXIT_OK, "{out}");
    assert!(out.trim_end().ends_with(" 0 failed"));
    let (again, repeat, _) = run_cli(&["verify"]);
    assert_eq!((again, repeat), (code, out));
    let (code, out, _) = run_cli(&["verify", "--kappas", "6", "--inject-fault", "1e-6"]);
    assert_eq!(code, EXIT_VERIFY_FAILED, "{out}");
}

#[test]
fn domain_errors_exit_two() {
    assert_eq!(run_cli(&["eval", "--kappa", "9"]).0, EXIT_DOMAIN);
    assert_eq!(run_cli(&["eval", "--grid", "0.5:1.5:3"]).0, EXIT_DOMAIN);
    assert_eq!(run_cli(&["mc", "--box", "64", "--half-span", "64"]).0, EXIT_DOMAIN);
    assert_eq!(run_cli(&["nonsense"]).0, EXIT_DOMAIN);
}

#[test]
fn outputs_are_byte_identical() {
    let mc = ["mc", "--box", "64", "--half-span", "16", "--lambdas", "0.3,0.5", "--w", "1", "--samples", "200"];
    assert_eq!(run_cli(&mc).1, run_cli(&mc).1);
    let (_, csv, _) = run_cli(&mc);
    assert!(csv.starts_with("lambda,L,w,samples,n_1234,n_12_34,n_14_23,ratio,stderr\n"));
    let bulk = ["bulk", "--grid", "0.2:1.8:4"];
    let (code, out, _) = run_cli(&bulk);
    assert_eq!(code, EXIT_OK);
    assert_eq!(out, run_cli(&bulk).1);
    assert!(column(&out, "residual_max").iter().all(|&v| v <= 1e-8));
}

#[test]
fn out_flag_writes_the_file() {
    let path = std::env::temp_dir().join(format!("cle4pt-{}.csv", std::process::id()));
    let p = path.to_str().unwrap();
    let (code, stdout, _) = run_cli(&["eval", "--grid", "0.3:0.3:1", "--out", p]);
    assert_eq!((code, stdout.as_str()), (EXIT_OK, ""));
    let written = std::fs::read_to_string(&path).unwrap();
    std::fs::remove_file(&path).unwrap();
    assert_eq!(written, run_cli(&["eval", "--grid", "0.3:0.3:1"]).1);
}

#[test]
fn binary_reports_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_cle4pt");
    let ok = Process::new(bin).args(["constants", "--kappa", "7"]).output().unwrap();
    assert_eq!(ok.status.code(), Some(EXIT_OK));
    assert!(String::from_utf8(ok.stdout).unwrap().starts_with("kappa = "));
    let bad = Process::new(bin).args(["eval", "--kappa", "-1"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(EXIT_DOMAIN));
}
