//! End-to-end tests of the `gct` binary: pipeline wiring, byte-level
//! determinism, thread-count invariance, output formats, and the stable
//! exit codes for each failure class.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn gct() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_gct"));
    // Keep runs hermetic: thread-count tests set this explicitly.
    c.env_remove("GCT_THREADS");
    c
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("binary should spawn");
    assert!(
        out.status.success(),
        "command failed: {:?}\nstdout: {}\nstderr: {}",
        cmd,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn exit_code(cmd: &mut Command) -> (i32, String) {
    let out = cmd.output().expect("binary should spawn");
    let code = out.status.code().expect("binary should not be signalled");
    (code, String::from_utf8_lossy(&out.stderr).into_owned())
}

fn synth(dir: &Path, identities: usize, seed: u64) -> PathBuf {
    run_ok(gct()
        .arg("synth")
        .arg("--out")
        .arg(dir)
        .arg("--identities")
        .arg(identities.to_string())
        .arg("--seed")
        .arg(seed.to_string()));
    dir.join("manifest.json")
}

/// Every file the generator writes, as (relative name, bytes), sorted.
fn dir_contents(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                files.push((rel, std::fs::read(&p).unwrap()));
            }
        }
    }
    files.sort();
    files
}

#[test]
fn synth_is_byte_reproducible_per_seed() {
    let tmp = TempDir::new().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let c = tmp.path().join("c");
    synth(&a, 4, 7);
    synth(&b, 4, 7);
    synth(&c, 4, 8);

    let fa = dir_contents(&a);
    let fb = dir_contents(&b);
    assert!(!fa.is_empty());
    assert_eq!(fa, fb, "same seed must reproduce every file byte for byte");

    let fc = dir_contents(&c);
    let names: Vec<&String> = fa.iter().map(|(n, _)| n).collect();
    let names_c: Vec<&String> = fc.iter().map(|(n, _)| n).collect();
    assert_eq!(names, names_c, "file set should not depend on the seed");
    assert_ne!(fa, fc, "a different seed must change the data");
}

#[test]
fn pipeline_trains_evaluates_and_writes_a_cmc_curve() {
    let tmp = TempDir::new().unwrap();
    let data = tmp.path().join("data");
    let manifest = synth(&data, 8, 3);
    let store = tmp.path().join("store.json");
    let csv = tmp.path().join("cmc.csv");

    let out = run_ok(gct()
        .arg("build-templates")
        .arg(&manifest)
        .arg("--out")
        .arg(&store)
        .arg("--seed")
        .arg("11"));
    assert!(store.is_file());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("templates"), "unexpected stdout: {stdout}");

    let out = run_ok(gct()
        .arg("evaluate")
        .arg(&manifest)
        .arg(&store)
        .arg("--out")
        .arg(&csv)
        .arg("--trials")
        .arg("2")
        .arg("--R")
        .arg("3")
        .arg("--k")
        .arg("2")
        .arg("--seed")
        .arg("5"));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("rank-1"), "summary missing from: {stdout}");
    assert!(
        stdout.contains("patch-metric evaluations:"),
        "cost report missing from: {stdout}"
    );

    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("rank,match_rate"));
    let mut prev = 0.0f64;
    let mut rows = 0usize;
    for (i, line) in lines.enumerate() {
        let (rank, rate) = line.split_once(',').expect("rank,rate row");
        assert_eq!(rank.parse::<usize>().unwrap(), i + 1);
        let rate: f64 = rate.parse().unwrap();
        assert!(rate >= prev && rate <= 100.0, "curve must be monotone");
        prev = rate;
        rows += 1;
    }
    assert!(rows >= 2);
    assert_eq!(prev, 100.0, "final rank must reach 100%");
}

#[test]
fn training_and_evaluation_are_deterministic_across_runs_and_threads() {
    let tmp = TempDir::new().unwrap();
    let data = tmp.path().join("data");
    let manifest = synth(&data, 6, 21);

    let store1 = tmp.path().join("s1.json");
    let store2 = tmp.path().join("s2.json");
    for s in [&store1, &store2] {
        run_ok(gct()
            .arg("build-templates")
            .arg(&manifest)
            .arg("--out")
            .arg(s)
            .arg("--seed")
            .arg("9"));
    }
    assert_eq!(
        std::fs::read(&store1).unwrap(),
        std::fs::read(&store2).unwrap(),
        "template stores must be byte-identical across runs"
    );

    let mut csvs = Vec::new();
    for (name, threads) in [("t_default", None), ("t1", Some("1")), ("t4", Some("4"))] {
        let csv = tmp.path().join(format!("{name}.csv"));
        let mut cmd = gct();
        cmd.arg("evaluate")
            .arg(&manifest)
            .arg(&store1)
            .arg("--out")
            .arg(&csv)
            .arg("--trials")
            .arg("2")
            .arg("--seed")
            .arg("13");
        if let Some(t) = threads {
            cmd.env("GCT_THREADS", t);
        }
        run_ok(&mut cmd);
        csvs.push(std::fs::read(&csv).unwrap());
    }
    assert_eq!(csvs[0], csvs[1], "GCT_THREADS=1 must not change results");
    assert_eq!(csvs[0], csvs[2], "GCT_THREADS=4 must not change results");
    assert!(csvs[0].starts_with(b"rank,match_rate\n"));
}

#[test]
fn match_pair_reports_every_probe_patch_and_zero_self_distance() {
    let tmp = TempDir::new().unwrap();
    let data = tmp.path().join("data");
    let manifest = synth(&data, 4, 2);
    let store = tmp.path().join("store.json");
    run_ok(gct().arg("build-templates").arg(&manifest).arg("--out").arg(&store));

    let (m, _) = gct::io::manifest::Manifest::load(&manifest).unwrap();
    let id = m.entries[0].image_id.clone();

    let out = run_ok(gct()
        .arg("match-pair")
        .arg(&manifest)
        .arg(&store)
        .arg(&id)
        .arg(&id));
    let stdout = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines[0], "probe_patch,gallery_patch,delta");

    let cfg = gct::Config::default();
    let layout = gct::graph::PatchLayout::new(
        48,
        128,
        cfg.patch.width,
        cfg.patch.height,
        cfg.patch.stride_w,
        cfg.patch.stride_h,
        cfg.patch.n_stripes,
    )
    .unwrap();
    assert_eq!(lines.len(), 1 + layout.n_patches(), "one row per probe patch");
    for (i, row) in lines[1..].iter().enumerate() {
        assert_eq!(*row, format!("{i},{i},0.000000"), "self-match must be exact");
    }

    // The same pair written to a file matches stdout.
    let csv = tmp.path().join("pair.csv");
    run_ok(gct()
        .arg("match-pair")
        .arg(&manifest)
        .arg(&store)
        .arg(&id)
        .arg(&id)
        .arg("--out")
        .arg(&csv));
    assert_eq!(std::fs::read_to_string(&csv).unwrap(), stdout);
}

#[test]
fn pose_sim_prints_both_factors_and_their_product() {
    let tmp = TempDir::new().unwrap();
    let data = tmp.path().join("data");
    let manifest = synth(&data, 3, 4);
    let (m, _) = gct::io::manifest::Manifest::load(&manifest).unwrap();
    let a = m.entries[0].image_id.clone();
    let b = m.entries[1].image_id.clone();

    let out = run_ok(gct().arg("pose-sim").arg(&manifest).arg(&a).arg(&b));
    let stdout = String::from_utf8(out.stdout).unwrap();
    let mut vals = Vec::new();
    for (line, prefix) in stdout.lines().zip([
        "magnitude_similarity,",
        "angle_similarity,",
        "similarity,",
    ]) {
        let rest = line.strip_prefix(prefix).unwrap_or_else(|| {
            panic!("line {line:?} should start with {prefix:?}")
        });
        let v: f64 = rest.parse().unwrap();
        assert!(v > 0.0 && v <= 1.0, "similarity out of range: {v}");
        vals.push(v);
    }
    assert_eq!(vals.len(), 3);
    assert!(
        (vals[0] * vals[1] - vals[2]).abs() < 2e-6,
        "printed product should agree with its factors"
    );

    // An image compared with itself is maximally similar.
    let out = run_ok(gct().arg("pose-sim").arg(&manifest).arg(&a).arg(&a));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("similarity,1.000000"), "got: {stdout}");
}

#[test]
fn failure_classes_map_to_stable_exit_codes() {
    let tmp = TempDir::new().unwrap();
    let data = tmp.path().join("data");
    let manifest = synth(&data, 4, 6);
    let store = tmp.path().join("store.json");
    run_ok(gct().arg("build-templates").arg(&manifest).arg("--out").arg(&store));

    // 2: manifest that is not valid JSON.
    let bad_manifest = tmp.path().join("broken.json");
    std::fs::write(&bad_manifest, "{ this is not json").unwrap();
    let (code, err) = exit_code(gct()
        .arg("build-templates")
        .arg(&bad_manifest)
        .arg("--out")
        .arg(tmp.path().join("ignored.json")));
    assert_eq!(code, 2, "stderr: {err}");
    assert!(err.starts_with("error:"), "stderr: {err}");

    // 3: referenced data file does not exist.
    let (code, err) = exit_code(gct()
        .arg("evaluate")
        .arg(&manifest)
        .arg(tmp.path().join("no-such-store.json"))
        .arg("--out")
        .arg(tmp.path().join("ignored.csv")));
    assert_eq!(code, 3, "stderr: {err}");

    // 4: config file that does not parse.
    let bad_config = tmp.path().join("bad-config.json");
    std::fs::write(&bad_config, "{ nope").unwrap();
    let (code, err) = exit_code(gct()
        .arg("build-templates")
        .arg(&manifest)
        .arg("--out")
        .arg(tmp.path().join("ignored.json"))
        .arg("--config")
        .arg(&bad_config));
    assert_eq!(code, 4, "stderr: {err}");

    // 4: config that parses but violates a constraint.
    let zero_beta = tmp.path().join("zero-beta.json");
    let mut cfg = gct::Config::default();
    cfg.solver.beta = 0.0;
    std::fs::write(&zero_beta, serde_json::to_string(&cfg).unwrap()).unwrap();
    let (code, err) = exit_code(gct()
        .arg("build-templates")
        .arg(&manifest)
        .arg("--out")
        .arg(tmp.path().join("ignored.json"))
        .arg("--config")
        .arg(&zero_beta));
    assert_eq!(code, 4, "stderr: {err}");

    // 5: config whose patch grid disagrees with the store's.
    let coarse = tmp.path().join("coarse.json");
    let mut cfg = gct::Config::default();
    cfg.patch.stride_h *= 2;
    std::fs::write(&coarse, serde_json::to_string(&cfg).unwrap()).unwrap();
    let (m, _) = gct::io::manifest::Manifest::load(&manifest).unwrap();
    let id = m.entries[0].image_id.clone();
    let (code, err) = exit_code(gct()
        .arg("match-pair")
        .arg(&manifest)
        .arg(&store)
        .arg(&id)
        .arg(&id)
        .arg("--config")
        .arg(&coarse));
    assert_eq!(code, 5, "stderr: {err}");

    // 1: anything else, e.g. an unknown image id.
    let (code, err) = exit_code(gct()
        .arg("match-pair")
        .arg(&manifest)
        .arg(&store)
        .arg("nobody")
        .arg("nobody"));
    assert_eq!(code, 1, "stderr: {err}");
}
