use std::path::Path;

use impostor_cli::{command, run, EXIT_DATA, EXIT_NUMERICAL, EXIT_OK, EXIT_USAGE};

fn cli(args: &[&str]) -> (i32, String) {
    let mut out = Vec::new();
    let code = run(std::iter::once("impostor").chain(args.iter().copied()), &mut out);
    (code, String::from_utf8(out).unwrap())
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).display().to_string()
}

#[test]
fn help_documents_every_flag() {
    let root = command();
    let mut commands: Vec<&clap::Command> = vec![&root];
    commands.extend(root.get_subcommands());
    for cmd in commands {
        let name = cmd.get_name().to_string();
        let args: Vec<&str> = if name == "impostor" { vec!["--help"] } else { vec![&name, "--help"] };
        let (code, help) = cli(&args);
        assert_eq!(code, EXIT_OK, "{name}");
        for arg in cmd.get_arguments() {
            let Some(long) = arg.get_long() else { continue };
            if long == "help" || long == "version" {
                continue;
            }
            assert!(help.contains(&format!("--{long}")), "{name} --help lacks --{long}");
            assert!(arg.get_help().is_some(), "{name} --{long} has no description");
        }
    }
}

#[test]
fn eval_of_identical_images() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _) = cli(&["gen-scene", "--out", &path(dir.path(), "s"), "--resolution", "8", "--quality", "16"]);
    assert_eq!(code, EXIT_OK);
    let img = path(dir.path(), "s/train/frame_0000.ppm");
    let (code, out) = cli(&["eval", "--a", &img, "--b", &img]);
    assert_eq!(code, EXIT_OK);
    assert!(out.lines().any(|l| l == "psnr=99.0"), "{out}");
}

#[test]
fn untrained_checkpoint_and_render() {
    let dir = tempfile::tempdir().unwrap();
    let model = path(dir.path(), "toy.nimp");
    let (code, out) = cli(&["train", "--scene", "toy", "--steps", "0", "--log2-table", "12", "--out", &model]);
    assert_eq!(code, EXIT_OK, "{out}");
    assert!(out.contains("steps=0"));
    assert!(Path::new(&model).exists());

    let cams = path(dir.path(), "cams.txt");
    std::fs::write(&cams, "cam 3 0 0  0 -1 0  0 0 -1  1 0 0  20 16 12\n").unwrap();
    for name in ["a.ppm", "b.ppm"] {
        let (code, _) = cli(&["render", "--model", &model, "--camera", &cams, "--out", &path(dir.path(), name)]);
        assert_eq!(code, EXIT_OK);
    }
    let a = std::fs::read(dir.path().join("a.ppm")).unwrap();
    assert_eq!(a, std::fs::read(dir.path().join("b.ppm")).unwrap());
    assert!(a.starts_with(b"P6\n16 12\n255\n"));
}

#[test]
fn config_file_supplies_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = path(dir.path(), "run.cfg");
    std::fs::write(&cfg, "steps = 0\nlog2-table = 12\nscene = toy\n").unwrap();
    let model = path(dir.path(), "m.nimp");
    let (code, out) = cli(&["train", "--config", &cfg, "--out", &model]);
    assert_eq!(code, EXIT_OK, "{out}");
    assert!(out.contains("steps=0"));
    let (code, _) = cli(&["train", "--config", &path(dir.path(), "missing.cfg"), "--out", &model]);
    assert_eq!(code, EXIT_DATA);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(cli(&[]).0, EXIT_USAGE);
    assert_eq!(cli(&["render", "--model", "x"]).0, EXIT_USAGE);
    assert_eq!(cli(&["train", "--out", "x", "--steps", "many"]).0, EXIT_USAGE);
    assert_eq!(cli(&["--threads", "0", "eval", "--a", "a", "--b", "b"]).0, EXIT_USAGE);

    let missing = path(dir.path(), "missing.ppm");
    assert_eq!(cli(&["eval", "--a", &missing, "--b", &missing]).0, EXIT_DATA);
    let junk = path(dir.path(), "junk.nimp");
    std::fs::write(&junk, b"not a checkpoint").unwrap();
    let cams = path(dir.path(), "cams.txt");
    std::fs::write(&cams, "cam 3 0 0  0 -1 0  0 0 -1  1 0 0  20 4 4\n").unwrap();
    assert_eq!(
        cli(&["render", "--model", &junk, "--camera", &cams, "--out", &path(dir.path(), "o.ppm")]).0,
        EXIT_DATA
    );

    let (code, _) = cli(&[
        "train", "--scene", "toy", "--steps", "5", "--batch", "64", "--log2-table", "12", "--lr-features", "1e308",
        "--lr-decoders", "1e308", "--out", &path(dir.path(), "nan.nimp"),
    ]);
    assert_eq!(code, EXIT_NUMERICAL);
}
