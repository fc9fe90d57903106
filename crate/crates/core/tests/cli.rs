use std::f64::consts::PI;
use std::path::PathBuf;

use casimir_sc::analysis::{dynes_conductance, DynesParams};
use casimir_sc::cli::{run, EXIT_CONVERGENCE, EXIT_INPUT, EXIT_OK, EXIT_USAGE};
use casimir_sc::membrane::{electrostatic_dw2, fundamental_frequency};
use casimir_sc::physcore::MembraneSpec;

struct Out {
    code: i32,
    stdout: String,
    stderr: String,
}

fn casimir(args: &[&str]) -> Out {
    let mut o = Vec::new();
    let mut e = Vec::new();
    let code = run(std::iter::once("casimir").chain(args.iter().copied()), &mut o, &mut e);
    Out { code, stdout: String::from_utf8(o).unwrap(), stderr: String::from_utf8(e).unwrap() }
}

fn scratch(name: &str, contents: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("casimir-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

/// Data rows of CSV output, split into cells.
fn rows(out: &str) -> Vec<Vec<String>> {
    out.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn summary(out: &str, key: &str) -> f64 {
    let prefix = format!("# {key} = ");
    out.lines().find_map(|l| l.strip_prefix(&prefix)).unwrap_or_else(|| panic!("no {key} in\n{out}")).parse().unwrap()
}

fn num(s: &str) -> f64 {
    s.trim().parse().unwrap()
}

#[test]
fn pressure_headline_row() {
    let o = casimir(&["pressure", "--d", "190e-9", "--T", "14.058", "--model", "bcs", "--approach", "plasma-bcs"]);
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    assert!(o.stdout.starts_with("# command = pressure\n"));
    assert!(o.stdout.contains("# approach = plasma-bcs"));
    assert!(o.stdout.contains("d_m,T_K,P_Pa,dPdd_Pa_per_m,n\n"));
    let r = &rows(&o.stdout)[0];
    assert!((num(&r[2]) + 0.4021).abs() < 0.005, "{}", r[2]);
    assert!((num(&r[4]) - 3.507).abs() < 0.01);
    // nine significant digits
    assert_eq!(r[2].split('e').next().unwrap().trim_start_matches('-').len(), 10);
}

#[test]
fn ideal_modes() {
    let o = casimir(&["pressure", "--ideal", "--d", "190e-9", "--area", "4.9e-7"]);
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    let f = num(&rows(&o.stdout)[0][2]);
    // the table quotes 4.891e-7 N for this geometry; 0.5% is the table tolerance
    assert!((f - 4.891e-7).abs() < 5e-3 * 4.891e-7, "{f}");
    let p = |d: &str| num(&rows(&casimir(&["pressure", "--ideal-zero-T", "--d", d]).stdout)[0][1]);
    // CSV carries nine digits
    assert!((p("380e-9") / p("190e-9") * 16.0 - 1.0).abs() < 1e-8);
    assert_eq!(casimir(&["pressure", "--ideal", "--d", "1e-7"]).code, EXIT_INPUT);
}

#[test]
fn jump_all_and_zero_width() {
    let o = casimir(&["jump", "--all"]);
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    let r = rows(&o.stdout);
    let names: Vec<&str> = r.iter().map(|x| x[0].as_str()).collect();
    assert_eq!(names, ["plasma-bcs", "plasma-plasma", "drude-bcs"]);
    assert!((num(&r[0][1]) - 6.0e3).abs() < 1.2e3);
    // predicted shift of the plasma-bcs row, Hz
    assert!((num(&r[0][3]).abs() - 0.28).abs() < 0.03, "{}", r[0][3]);
    for a in ["plasma-plasma", "drude-bcs"] {
        let o = casimir(&["jump", "--approach", a, "--dT", "0"]);
        assert_eq!(o.code, EXIT_OK);
        assert!(num(&rows(&o.stdout)[0][1]).abs() < 1e-6, "{a}");
    }
}

fn write_sweeps(tag: &str, jump_gradient: &str) -> (PathBuf, PathBuf) {
    let grid = ["--t-start", "12", "--t-stop", "16", "--t-step", "0.05", "--slope", "1e6"];
    let mut small = vec!["generate-sweep", "--jump-gradient", jump_gradient, "--seed", "7"];
    small.extend(grid);
    let mut big = vec!["generate-sweep", "--membrane", "big", "--seed", "8"];
    big.extend(grid);
    let s = casimir(&small);
    let b = casimir(&big);
    assert_eq!(s.code, EXIT_OK, "{}", s.stderr);
    assert_eq!(b.code, EXIT_OK, "{}", b.stderr);
    (scratch(&format!("small-{tag}.csv"), &s.stdout), scratch(&format!("big-{tag}.csv"), &b.stdout))
}

#[test]
fn generated_sweeps_round_trip() {
    let (s, b) = write_sweeps("rt", "12100");
    let o = casimir(&["sweep", "--small", s.to_str().unwrap(), "--big", b.to_str().unwrap(), "--fit-lo", "12", "--fit-hi", "14"]);
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    let g = summary(&o.stdout, "jump_dPdd_Pa_per_m");
    assert!((g - 12100.0).abs() < 1e-6 * 12100.0, "{g}");
    // LinearSquared factors: 1.55e-9 Pa per Hz^2
    let dp = summary(&o.stdout, "jump_dP_Pa");
    assert!((dp + 6.14e-4).abs() < 0.01e-4, "{dp}");
    let header = o.stdout.lines().find(|l| l.starts_with("T_K,")).unwrap();
    assert_eq!(header, "T_K,dw2_casimir_rad2_per_s2,sigma_dw2_rad2_per_s2,dPdd_Pa_per_m,dF_N,dP_Pa,dz_m");
}

#[test]
fn sweep_merges_repeated_inputs() {
    let (s, b) = write_sweeps("merge", "8000");
    let (_, b2) = write_sweeps("merge2", "8000");
    let o = casimir(&[
        "sweep", "--small", s.to_str().unwrap(), "--big", b.to_str().unwrap(), "--big", b2.to_str().unwrap(),
        "--fit-lo", "12", "--fit-hi", "14",
    ]);
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    assert_eq!(o.stdout.matches("# big = ").count(), 2);
    assert!((summary(&o.stdout, "jump_dPdd_Pa_per_m") - 8000.0).abs() < 1e-2);
}

#[test]
fn sweep_input_errors() {
    let (s, _) = write_sweeps("err", "12100");
    let empty = scratch("empty.csv", "T_K,f_Hz\n");
    let o = casimir(&["sweep", "--small", s.to_str().unwrap(), "--big", empty.to_str().unwrap(), "--fit-lo", "12", "--fit-hi", "14"]);
    assert_eq!(o.code, EXIT_INPUT);
    assert!(o.stderr.contains("no sweep records"), "{}", o.stderr);

    let bad = scratch("bad.csv", "T_K,f_Hz\n12.0,352800\n12.1,abc\n");
    let o = casimir(&["sweep", "--small", bad.to_str().unwrap(), "--big", s.to_str().unwrap(), "--fit-lo", "12", "--fit-hi", "14"]);
    assert_eq!(o.code, EXIT_INPUT);
    assert!(o.stderr.contains("line 3"), "{}", o.stderr);

    let missing = casimir(&["sweep", "--small", "/nonexistent.csv", "--big", "/nonexistent.csv", "--fit-lo", "12", "--fit-hi", "14"]);
    assert_eq!(missing.code, EXIT_INPUT);
}

#[test]
fn usage_errors_and_help() {
    assert_eq!(casimir(&["pressure", "--bogus"]).code, EXIT_USAGE);
    assert_eq!(casimir(&["frobnicate"]).code, EXIT_USAGE);
    assert_eq!(casimir(&["pressure", "--model", "jellium"]).code, EXIT_USAGE);
    assert_eq!(casimir(&["noise", "--f0", "1e5", "--Q", "1e4", "--tau", "1"]).code, EXIT_USAGE);
    let help = casimir(&["--help"]);
    assert_eq!(help.code, EXIT_OK);
    for cmd in ["pressure", "gradient", "exponent", "jump", "sweep", "generate-sweep", "lcpd-fit", "dynes-fit", "tables", "noise"] {
        assert!(help.stdout.contains(cmd), "{cmd}");
    }
}

#[test]
fn domain_and_convergence_exit_codes() {
    assert_eq!(casimir(&["pressure", "--d", "-1e-7"]).code, EXIT_INPUT);
    assert_eq!(casimir(&["gradient", "--T", "0"]).code, EXIT_INPUT);
    let o = casimir(&["pressure", "--max-matsubara", "5"]);
    assert_eq!(o.code, EXIT_CONVERGENCE);
    assert!(o.stderr.contains("error"));
}

#[test]
fn config_file_and_flag_precedence() {
    let cfg = scratch("run.cfg", "# test\nd_m = 300e-9\nOmega_eV = 6.0\n");
    let c = cfg.to_str().unwrap();
    let o = casimir(&["--config", c, "gradient"]);
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    assert!(o.stdout.contains("# Omega_eV = 6.0"));
    assert!(o.stdout.contains(&format!("# config = {c}")));
    assert_eq!(num(&rows(&o.stdout)[0][0]), 300e-9);
    let o = casimir(&["--config", c, "gradient", "--d", "250e-9", "--omega", "5.0"]);
    assert!(o.stdout.contains("# Omega_eV = 5.0"));
    assert_eq!(num(&rows(&o.stdout)[0][0]), 250e-9);

    let broken = scratch("broken.cfg", "d_m = 1e-7\nnot a pair\n");
    let o = casimir(&["--config", broken.to_str().unwrap(), "tables"]);
    assert_eq!(o.code, EXIT_INPUT);
    assert!(o.stderr.contains("line 2"), "{}", o.stderr);
}

#[test]
fn tables_recompute_transcribed_forces() {
    let o = casimir(&["tables"]);
    assert_eq!(o.code, EXIT_OK);
    let r = rows(&o.stdout);
    assert_eq!(r.len(), 35);
    assert!(r.iter().all(|x| x[8] == "ok"));
    let this = r.iter().find(|x| x[1] == "this work").unwrap();
    assert!((num(&this[6]) - 4.89117e-7).abs() < 1e-3 * 4.89117e-7);
    assert!((summary(&o.stdout, "plate_plate_average_except_this_work_N") - 1.3873e-8).abs() < 5e-3 * 1.3873e-8);
}

#[test]
fn table_format_carries_the_same_numbers() {
    let csv = casimir(&["exponent"]);
    let table = casimir(&["--format", "table", "exponent"]);
    assert_eq!(table.code, EXIT_OK);
    let c: Vec<f64> = rows(&csv.stdout)[0].iter().map(|s| num(s)).collect();
    let line = table.stdout.lines().filter(|l| !l.starts_with('#')).nth(1).unwrap();
    let t: Vec<f64> = line.split_whitespace().map(num).collect();
    assert_eq!(c.len(), t.len());
    for (a, b) in c.iter().zip(&t) {
        assert!((a - b).abs() <= 5e-4 * a.abs(), "{a} vs {b}");
    }
}

#[test]
fn output_is_byte_deterministic() {
    let args = ["generate-sweep", "--t-start", "13", "--t-stop", "15", "--t-step", "0.1", "--sigma-f", "0.0047", "--seed", "3"];
    assert_eq!(casimir(&args).stdout, casimir(&args).stdout);
    assert_eq!(casimir(&["jump"]).stdout, casimir(&["jump"]).stdout);
}

#[test]
fn noise_forward_and_inverse() {
    let o = casimir(&["noise", "--f0", "352800", "--Q", "50000", "--tau", "0.1", "--ns", "0.02"]);
    assert_eq!(o.code, EXIT_OK);
    let df = num(&rows(&o.stdout)[0][4]);
    let expect = 352800.0 / 1e5 * 0.02 * (1.0 / (2.0 * PI * 0.1)).sqrt();
    assert!((df - expect).abs() < 1e-8 * expect);
    let o = casimir(&["noise", "--f0", "352800", "--Q", "50000", "--tau", "0.1", "--df", &df.to_string()]);
    assert!((num(&rows(&o.stdout)[0][4]) - 0.02).abs() < 1e-9);
}

#[test]
fn lcpd_fit_command() {
    let m = MembraneSpec::small_gap();
    let w0 = (2.0 * PI * fundamental_frequency(&m, true)).powi(2);
    let mut csv = String::from("V_volt,f_Hz\n");
    for i in 0..41 {
        let v = -1.0 + 0.05 * i as f64;
        csv += &format!("{v},{:e}\n", (w0 + electrostatic_dw2(v, 0.21, &m)).sqrt() / (2.0 * PI));
    }
    let path = scratch("lcpd.csv", &csv);
    let o = casimir(&["lcpd-fit", "--input", path.to_str().unwrap()]);
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    let r = &rows(&o.stdout)[0];
    assert!((num(&r[0]) - 0.21).abs() < 1e-8);
    assert!((num(&r[3]) - m.stress).abs() < 1e-5 * m.stress);
    let wrong = scratch("lcpd-wrong.csv", "V,f\n0,1\n");
    assert_eq!(casimir(&["lcpd-fit", "--input", wrong.to_str().unwrap()]).code, EXIT_INPUT);
}

#[test]
fn dynes_fit_command() {
    let p = DynesParams { delta: 2.6e-3, gamma: 0.465e-3, temperature: 4.6, amplitude: 2.0 };
    let mut csv = String::from("V_volt,G_arb\n");
    for i in 0..=120 {
        let v = -12e-3 + 2e-4 * i as f64;
        csv += &format!("{v:e},{:e}\n", dynes_conductance(v, &p).unwrap());
    }
    let path = scratch("dynes.csv", &csv);
    let o = casimir(&["dynes-fit", "--input", path.to_str().unwrap(), "--T", "4.6"]);
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    let r = &rows(&o.stdout)[0];
    assert!((num(&r[0]) - 2.6e-3).abs() < 1e-4 * 2.6e-3, "{}", r[0]);
    assert!((num(&r[1]) - 0.465e-3).abs() < 1e-4 * 0.465e-3, "{}", r[1]);
    // too few points to fit
    let short = scratch("dynes-short.csv", "V_volt,G_arb\n0,1\n0.001,1\n");
    assert_eq!(casimir(&["dynes-fit", "--input", short.to_str().unwrap(), "--T", "4.6"]).code, EXIT_CONVERGENCE);
}
