use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

const DISK: &str = r#"{"g":1,"d":2,"matrices":[[[[0,0],[1,0]],[[0,0],[0,0]]]]}"#;
const HALF: &str = r#"{"g":1,"d":1,"matrices":[[[[0.5,0]]]]}"#;

fn scratch(name: &str, contents: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("freespec-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_freespec"))
        .args(args)
        .env_remove("FREESPEC_TOL")
        .output()
        .unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

fn bidisk() -> String {
    let z = "[0,0]";
    let o = "[1,0]";
    let row = |cells: [&str; 4]| format!("[{}]", cells.join(","));
    let first = [
        row([z, o, z, z]),
        row([z, z, z, z]),
        row([z, z, z, z]),
        row([z, z, z, z]),
    ]
    .join(",");
    let second = [
        row([z, z, z, z]),
        row([z, z, z, z]),
        row([z, z, z, o]),
        row([z, z, z, z]),
    ]
    .join(",");
    format!(r#"{{"g":2,"d":4,"matrices":[[{first}],[{second}]]}}"#)
}

#[test]
fn member_on_the_disk() {
    let a = scratch("disk.json", DISK);
    let x = scratch("half.json", HALF);
    let out = run(&[
        "member",
        "-i",
        a.to_str().unwrap(),
        "--point",
        x.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["member"], true);
    assert!((v["min_eigenvalue"].as_f64().unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn bidisk_block_sizes() {
    let a = scratch("bidisk.json", &bidisk());
    let out = run(&["circular", "-i", a.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["circular"], true);
    assert_eq!(v["block_sizes"], serde_json::json!([[1, 1], [1, 1]]));
}

#[test]
fn crossterm_polynomial_reports_its_word() {
    let p = r#"{"rows":1,"cols":1,"g":2,"terms":[
        {"word":[],"coeff":[[[1,0]]]},
        {"word":[{"var":1,"star":false},{"var":2,"star":false}],"coeff":[[[1,0]]]}]}"#;
    let path = scratch("crossterm.json", p);
    let out = run(&["poly-invariant", "-i", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["invariant"], false);
    assert_eq!(v["witness"]["cross_term"], "x1 x2");
}

#[test]
fn malformed_json_is_an_input_error_with_position() {
    let a = scratch("broken.json", "{\"g\": 1,\n \"d\": [");
    let x = scratch("half2.json", HALF);
    let out = run(&[
        "member",
        "-i",
        a.to_str().unwrap(),
        "--point",
        x.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("line 2"), "{err}");
}

#[test]
fn gen_is_byte_deterministic_and_needs_a_seed() {
    let spec = r#"{"kind":"superdiagonal_tuple","g":2,"sizes":[1,2,1]}"#;
    let first = run(&["gen", "--seed", "7", "--spec", spec]);
    let second = run(&["gen", "--seed", "7", "--spec", spec]);
    assert_eq!(first.status.code(), Some(0));
    assert_eq!(first.stdout, second.stdout);
    assert_eq!(run(&["gen", "--spec", spec]).status.code(), Some(3));
}

#[test]
fn generated_plant_is_recovered() {
    let spec = r#"{"kind":"superdiagonal_tuple","g":2,"sizes":[1,2,1]}"#;
    let out = run(&["gen", "--seed", "7", "--spec", spec]);
    let a = scratch("plant.json", std::str::from_utf8(&out.stdout).unwrap());
    let v = json(&run(&["canonical-form", "-i", a.to_str().unwrap()]));
    let mut sizes: Vec<u64> = v["block_sizes"][0]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_u64().unwrap())
        .collect();
    sizes.sort_unstable();
    assert_eq!(sizes, vec![1, 1, 2]);
}

#[test]
fn boundary_point_feeds_separate() {
    let a = scratch("disk3.json", DISK);
    let out = run(&[
        "boundary-point",
        "-i",
        a.to_str().unwrap(),
        "--seed",
        "4",
        "--level",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let pt = scratch("bp.json", std::str::from_utf8(&out.stdout).unwrap());
    let out = run(&[
        "separate",
        "--pencil",
        a.to_str().unwrap(),
        "--point",
        pt.to_str().unwrap(),
        "--samples",
        "50",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v = json(&out);
    assert!((v["norms"]["at_boundary"].as_f64().unwrap() - 1.0).abs() < 1e-6);
}

#[test]
fn inclusion_of_a_shrunken_disk() {
    let small = r#"{"g":1,"d":2,"matrices":[[[[0,0],[2,0]],[[0,0],[0,0]]]]}"#;
    let a = scratch("small.json", small);
    let b = scratch("disk4.json", DISK);
    let v = json(&run(&[
        "include",
        "-i",
        a.to_str().unwrap(),
        "--target",
        b.to_str().unwrap(),
    ]));
    assert_eq!(v["status"], "included");
    let v = json(&run(&[
        "include",
        "-i",
        b.to_str().unwrap(),
        "--target",
        a.to_str().unwrap(),
    ]));
    assert_eq!(v["status"], "not_included");
}

#[test]
fn tolerance_comes_from_the_environment() {
    let a = scratch("disk5.json", DISK);
    let x = scratch(
        "edge.json",
        r#"{"g":1,"d":1,"matrices":[[[[1.000001,0]]]]}"#,
    );
    let strict = run(&[
        "member",
        "-i",
        a.to_str().unwrap(),
        "--point",
        x.to_str().unwrap(),
    ]);
    assert_eq!(json(&strict)["member"], false);
    let loose = Command::new(env!("CARGO_BIN_EXE_freespec"))
        .args([
            "member",
            "-i",
            a.to_str().unwrap(),
            "--point",
            x.to_str().unwrap(),
        ])
        .env("FREESPEC_TOL", "1e-5")
        .output()
        .unwrap();
    assert_eq!(json(&loose)["member"], true);
}
