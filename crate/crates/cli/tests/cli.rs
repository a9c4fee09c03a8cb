use magflow_cli::{parse_config, run, Command, ConfigError, RunError};
use std::fs;
use std::path::Path;
use std::process::Command as Process;

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn magflow(config: &Path, out: &Path, command: &str) -> std::process::Output {
    Process::new(env!("CARGO_BIN_EXE_magflow"))
        .args(["--config", config.to_str().unwrap(), "--out", out.to_str().unwrap(), "--command", command])
        .output()
        .unwrap()
}

#[test]
fn unknown_key_is_a_config_error_with_location() {
    let text = "seed = 3\n[grid]\nm = [1.0]\nlevel = 4\n[profile]\nfamily = \"round_sphere\"\n";
    match parse_config(text) {
        Err(ConfigError::Syntax { line, message, .. }) => {
            assert_eq!(line, 4);
            assert!(message.contains("level"), "{message}");
        }
        other => panic!("{other:?}"),
    }
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", text);
    let out = magflow(&cfg, &dir.path().join("out"), "bounds");
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn defaults_fill_missing_sections() {
    let cfg = parse_config("[profile]\nfamily = \"round_sphere\"\n").unwrap();
    assert_eq!(cfg.seed, 7);
    assert_eq!(cfg.grid.m, vec![1.0]);
    assert_eq!(cfg.grid.levels, 256);
    assert_eq!(cfg.tolerances.rtol, 1e-10);
    assert_eq!(cfg.cover.samples, 1000);
    assert!(cfg.trajectory.is_none());
}

#[test]
fn infeasible_family_parameters_exit_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "[profile]\nfamily = \"dip_profile\"\ndelta = 0.1\nepsilon = 1.5\n");
    let out = magflow(&cfg, &dir.path().join("out"), "bounds");
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn round_sphere_bounds_are_the_full_ray() {
    let dir = tempfile::tempdir().unwrap();
    let text = "[profile]\nfamily = \"round_sphere\"\n";
    let cfg = parse_config(text).unwrap();
    let manifest = run(&cfg, text, Command::Bounds, dir.path()).unwrap();
    assert_eq!(manifest.outputs.len(), 1);
    let csv = fs::read_to_string(dir.path().join("bounds.csv")).unwrap();
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    assert!(row[0].parse::<f64>().unwrap() < 1e-9);
    assert_eq!(row[1], "full_ray");
}

#[test]
fn dip_certificate_is_negative_and_still_written() {
    let dir = tempfile::tempdir().unwrap();
    let text = "[profile]\nfamily = \"dip_profile\"\ndelta = 0.1\nepsilon = 0.5\n[grid]\nm = [0.022053]\nlevels = 16\n";
    let cfg = write(dir.path(), "dip.toml", text);
    let out_dir = dir.path().join("out");
    let out = magflow(&cfg, &out_dir, "certify");
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
    let cert: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("certificates.json")).unwrap()).unwrap();
    assert_eq!(cert["data"][0]["verdict"], "negative");
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 2);
}

#[test]
fn runs_are_byte_for_byte_deterministic() {
    let text = "seed = 11\n[profile]\nfamily = \"ellipsoid\"\na = 1.0\nc = 1.5\n[strength]\nkind = \"cosine_series\"\ncoeffs = [0.3]\n[index]\nm = [0.1]\nsamples = 20\n[cover]\nsamples = 50\n";
    let cfg = parse_config(text).unwrap();
    for command in [Command::Cover, Command::Index, Command::ProfileGen] {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        run(&cfg, text, command, a.path()).unwrap();
        run(&cfg, text, command, b.path()).unwrap();
        for entry in fs::read_dir(a.path()).unwrap() {
            let name = entry.unwrap().file_name();
            assert_eq!(
                fs::read(a.path().join(&name)).unwrap(),
                fs::read(b.path().join(&name)).unwrap(),
                "{command:?} {name:?}"
            );
        }
    }
}

#[test]
fn seed_flag_changes_sampled_outputs_only() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "[profile]\nfamily = \"round_sphere\"\n[cover]\nsamples = 20\n");
    let run_seed = |seed: &str, out: &str| {
        let o = Process::new(env!("CARGO_BIN_EXE_magflow"))
            .args(["--config", cfg.to_str().unwrap(), "--out", dir.path().join(out).to_str().unwrap()])
            .args(["--command", "cover", "--seed", seed])
            .output()
            .unwrap();
        assert!(o.status.success());
        let m: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join(out).join("manifest.json")).unwrap()).unwrap();
        (m["seed"].as_u64().unwrap(), m["config_sha256"].as_str().unwrap().to_string())
    };
    let (s1, h1) = run_seed("1", "a");
    let (s2, h2) = run_seed("2", "b");
    assert_eq!((s1, s2), (1, 2));
    assert_eq!(h1, h2);
}

#[test]
fn no_temporary_files_are_left_behind() {
    let dir = tempfile::tempdir().unwrap();
    let text = "[profile]\nfamily = \"round_sphere\"\n";
    run(&parse_config(text).unwrap(), text, Command::ProfileGen, dir.path()).unwrap();
    let names: Vec<String> =
        fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    assert!(names.iter().all(|n| !n.ends_with(".tmp")), "{names:?}");
    assert_eq!(names.len(), 3);
}

#[test]
fn exit_codes_by_error_kind() {
    assert_eq!(RunError::Config(ConfigError::Invalid("x".into())).exit_code(), 2);
    assert_eq!(RunError::Numerical("x".into()).exit_code(), 3);
    assert_eq!(RunError::NegativeCertificate(vec![1.0]).exit_code(), 4);
}
