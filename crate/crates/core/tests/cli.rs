use std::fs;
use std::path::Path;
use std::process::Command;

use strata::io::{read_boreholes, read_chain, read_parent, write_chain};
use strata::mcmc::{run_chain, ChainSettings, Model, PriorSpec, ProposalSpec};
use strata::synth::SyntheticScenario;

/// Runs the command line in-process and returns (status, stdout, stderr).
fn strata(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("strata").chain(args.iter().copied());
    let code = strata::cli::run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn synth_into(dir: &Path, n: usize) {
    let (code, out, err) = strata(&["synth", "--seed", "3", "--n-boreholes", &n.to_string(), "--output", path(dir)]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains(&format!("{n} boreholes")), "{out}");
}

fn small_grid(cfg: &Path) {
    let text = fs::read_to_string(cfg).unwrap();
    let text: String = text
        .lines()
        .map(|l| {
            if l.starts_with("grid") {
                "grid = 0 0 20 20 6 6".to_string()
            } else if l.starts_with("transect") {
                "transect = 0 0 100 100 12".to_string()
            } else {
                l.to_string()
            }
        })
        .collect::<Vec<_>>()
        .join("\n");
    fs::write(cfg, text + "\nsection_rows = 20\n").unwrap();
}

#[test]
fn synth_fit_simulate_tcd_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    synth_into(dir.path(), 4);
    for f in ["boreholes.csv", "parent.txt", "truth.csv", "run.cfg"] {
        assert!(dir.path().join(f).is_file(), "{f} missing");
    }
    let cfg = dir.path().join("run.cfg");
    small_grid(&cfg);

    let (code, out, _) = strata(&["validate", "--config", path(&cfg)]);
    assert_eq!(code, 0);
    assert_eq!(out.trim(), "4 boreholes compatible with a 15-layer parent sequence");

    let (code, out, _) = strata(&["fit", "--config", path(&cfg), "--seed", "2", "--dry-run"]);
    assert_eq!(code, 0);
    assert!(out.starts_with("facies,records,slots,presence,mean_thickness,p0,tau0,mu0\n"), "{out}");
    assert_eq!(out.lines().count(), 5);

    let chain = dir.path().join("chain");
    let (code, out, err) = strata(&[
        "fit", "--config", path(&cfg), "--seed", "2", "--n-iter", "30", "--burn-in", "10", "--thin", "5",
        "--output", path(&chain),
    ]);
    assert_eq!(code, 0, "{err}");
    assert!(out.starts_with("wrote 4 samples"), "{out}");
    for f in ["samples.csv", "configurations.csv", "trace.csv", "diagnostics.csv", "summary.csv"] {
        assert!(chain.join(f).is_file(), "{f} missing");
    }
    let trace = fs::read_to_string(chain.join("trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 32);

    let sims = dir.path().join("sim");
    let (code, _, err) = strata(&[
        "simulate", "--config", path(&cfg), "--mode", "conditional", "--chain", path(&chain), "--seed", "4",
        "--output", path(&sims),
    ]);
    assert_eq!(code, 0, "{err}");
    let grid = fs::read_to_string(sims.join("grid.txt")).unwrap();
    assert!(grid.starts_with("strata-grid 1\n"));
    let raster = fs::read_to_string(sims.join("raster.csv")).unwrap();
    assert_eq!(raster.lines().count(), 1 + 15 * 36);
    let section = fs::read_to_string(sims.join("section.csv")).unwrap();
    assert!(section.lines().count() > 1);
    let polylines = fs::read_to_string(sims.join("polylines.csv")).unwrap();
    assert!(polylines.starts_with("transect_distance,depth,layer_index\n"));

    let (code, _, err) = strata(&[
        "simulate", "--config", path(&cfg), "--mode", "unconditional", "--seed", "4", "--output",
        path(&dir.path().join("free")),
    ]);
    assert_eq!(code, 0, "{err}");

    let (code, out, err) =
        strata(&["tcd", "--config", path(&cfg), "--chain", path(&chain), "--facies", "Green", "--points", "11"]);
    assert_eq!(code, 0, "{err}");
    let rows: Vec<&str> = out.lines().collect();
    assert_eq!(rows[0], "z,median,q05,q95,empirical");
    assert_eq!(rows.len(), 12);
    let first: Vec<f64> = rows[1].split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(&first[..4], &[0.0, 0.0, 0.0, 0.0]);
}

#[test]
fn same_seed_same_chain() {
    let dir = tempfile::tempdir().unwrap();
    synth_into(dir.path(), 3);
    let cfg = dir.path().join("run.cfg");
    let mut texts = Vec::new();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        let (code, _, err) = strata(&[
            "fit", "--config", path(&cfg), "--seed", "8", "--n-iter", "15", "--burn-in", "0", "--output", path(&out),
        ]);
        assert_eq!(code, 0, "{err}");
        texts.push(fs::read_to_string(out.join("samples.csv")).unwrap());
    }
    assert_eq!(texts[0], texts[1]);
}

#[test]
fn chain_files_round_trip() {
    let scenario = SyntheticScenario::default().with_seed(4);
    let data = scenario.generate().unwrap();
    let boreholes = data.boreholes[..3].to_vec();
    let model = Model::new(scenario.parent.clone(), boreholes).unwrap();
    let params = model.initial_params(&|_| scenario.nu, 10.0).unwrap();
    let settings = ChainSettings {
        n_iter: 20,
        burn_in: 5,
        thin: 3,
        seed: 6,
        ..ChainSettings::default()
    };
    let chain = run_chain(&model, params, PriorSpec::default(), ProposalSpec::default(), settings).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_chain(dir.path(), &scenario.parent, &chain.samples, &chain.diagnostics).unwrap();
    let nu = vec![scenario.nu; scenario.parent.len()];
    let back = read_chain(dir.path(), &nu).unwrap();
    assert_eq!(back.len(), chain.samples.len());
    for (a, b) in chain.samples.iter().zip(&back) {
        assert_eq!(a.iteration, b.iteration);
        assert_eq!(a.params, b.params);
        assert_eq!(a.configs, b.configs);
        assert_eq!(a.log_likelihood, b.log_likelihood);
    }
}

#[test]
fn synthetic_files_parse_back() {
    let dir = tempfile::tempdir().unwrap();
    synth_into(dir.path(), 5);
    let parent = read_parent(&dir.path().join("parent.txt")).unwrap();
    assert_eq!(parent.len(), 15);
    let boreholes = read_boreholes(&dir.path().join("boreholes.csv")).unwrap();
    assert_eq!(boreholes.len(), 5);
    assert!(Model::new(parent, boreholes).is_ok());
}

#[test]
fn malformed_borehole_file_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("p.txt"), "Red\nBlue\n").unwrap();
    fs::write(
        dir.path().join("b.csv"),
        "borehole_id,x_km,y_km,ground_level_m,record_index,facies,thickness_m\nB1,0,0,0,1,Red,thick\n",
    )
    .unwrap();
    fs::write(dir.path().join("r.cfg"), "boreholes = b.csv\nparent = p.txt\n").unwrap();
    let (code, _, err) = strata(&["validate", "--config", path(&dir.path().join("r.cfg"))]);
    assert_eq!(code, 2);
    assert!(err.contains("b.csv") && err.contains(":2"), "{err}");
}

#[test]
fn bad_config_and_arguments_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("r.cfg");
    fs::write(&cfg, "parent = p.txt\nbogus = 1\n").unwrap();
    let (code, _, err) = strata(&["validate", "--config", path(&cfg)]);
    assert_eq!(code, 2);
    assert!(err.contains("bogus"), "{err}");

    let (code, _, _) = strata(&["fit", "--config", path(&cfg)]);
    assert_eq!(code, 2);
    let (code, _, _) = strata(&["validate", "--config", path(&dir.path().join("missing.cfg"))]);
    assert_eq!(code, 2);
}

#[test]
fn incompatible_borehole_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("p.txt"), "Red\nBlue\n").unwrap();
    fs::write(
        dir.path().join("b.csv"),
        "borehole_id,x_km,y_km,ground_level_m,record_index,facies,thickness_m\nB1,0,0,0,1,Blue,1\nB1,0,0,0,2,Red,1\n",
    )
    .unwrap();
    fs::write(dir.path().join("r.cfg"), "boreholes = b.csv\nparent = p.txt\n").unwrap();
    let (code, _, err) = strata(&["validate", "--config", path(&dir.path().join("r.cfg"))]);
    assert_eq!(code, 3, "{err}");
    assert!(err.contains("B1"), "{err}");
}

#[test]
fn conditional_without_chain_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    synth_into(dir.path(), 3);
    let cfg = dir.path().join("run.cfg");
    small_grid(&cfg);
    let (code, _, err) = strata(&["simulate", "--config", path(&cfg), "--mode", "conditional", "--seed", "1"]);
    assert_eq!(code, 3, "{err}");
}

#[test]
fn unreachable_cdf_tolerance_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let mut rows = String::from("borehole_id,x_km,y_km,ground_level_m,record_index,facies,thickness_m\n");
    for i in 1..=6 {
        rows += &format!("B{i},{i},{},0,1,Blue,1.0\n", i * 2 % 5);
    }
    fs::write(dir.path().join("b.csv"), rows).unwrap();
    fs::write(dir.path().join("p.txt"), "Red\nBlue\n").unwrap();
    fs::write(dir.path().join("r.cfg"), "boreholes = b.csv\nparent = p.txt\ncdf_tol = 1e-300\n").unwrap();
    let (code, _, err) = strata(&[
        "fit", "--config", path(&dir.path().join("r.cfg")), "--seed", "1", "--n-iter", "5", "--output",
        path(&dir.path().join("c")),
    ]);
    assert_eq!(code, 4, "{err}");
    assert!(err.contains("layer 1"), "{err}");
}

#[test]
fn binary_reports_help_and_status() {
    let exe = env!("CARGO_BIN_EXE_strata");
    let help = Command::new(exe).arg("--help").output().unwrap();
    assert!(help.status.success());
    let text = String::from_utf8(help.stdout).unwrap();
    for sub in ["fit", "simulate", "tcd", "synth", "validate"] {
        assert!(text.contains(sub), "{sub} missing from help:\n{text}");
    }
    let dir = tempfile::tempdir().unwrap();
    let status = Command::new(exe)
        .args(["synth", "--seed", "1", "--n-boreholes", "2", "--output"])
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    let status = Command::new(exe)
        .args(["validate", "--config"])
        .arg(dir.path().join("run.cfg"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let status = Command::new(exe).arg("nonsense").status().unwrap();
    assert_eq!(status.code(), Some(2));
}
