use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(format!("{name}.model"))
}

fn trivar(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_trivar")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn volume_of_cube_tetra() {
    let o = trivar(&["volume", fixture("cube_tetra").to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: f64 = stdout(&o).trim().parse().unwrap();
    assert!((v - 0.97916667).abs() < 1e-8, "{v}");
}

#[test]
fn untrim_box_is_one_tile() {
    let o = trivar(&["untrim", fixture("box").to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "tiles 1 depth 0");
}

#[test]
fn shipped_fixtures_validate() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures");
    let mut n = 0;
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        let o = trivar(&["validate", p.to_str().unwrap()]);
        assert!(o.status.success(), "{}: {}", p.display(), stdout(&o));
        n += 1;
    }
    assert!(n >= 6);
}

#[test]
fn input_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(fixture("box")).unwrap();

    let dangling = dir.path().join("dangling.model");
    std::fs::write(&dangling, text.replace("  shell box.shell\n", "  shell box.nothing\n")).unwrap();
    let o = trivar(&["validate", dangling.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("box.nothing"));

    let weighted = dir.path().join("weighted.model");
    std::fs::write(&weighted, text.replacen("  dim 3\n", "  dim 3\n  weights 1 1 1 1 1 1 1 1\n", 1)).unwrap();
    let o = trivar(&["volume", weighted.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("weights"));

    let broken = dir.path().join("broken.model");
    std::fs::write(&broken, text.replacen("  ctrl 0.0 0.0 0.0\n", "  ctrl 0.0 zero 0.0\n", 1)).unwrap();
    let o = trivar(&["untrim", broken.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains(" 8:12: "), "{}", stderr(&o));

    // an open shell: drop one face from the list
    let open = dir.path().join("open.model");
    let dropped = text.replace(" box.f5\n", "\n");
    assert_ne!(dropped, text);
    std::fs::write(&open, dropped).unwrap();
    let o = trivar(&["validate", open.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn algorithmic_failure_exits_with_3() {
    let o = trivar(&["untrim", fixture("dumbbell").to_str().unwrap(), "--max-depth", "0"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn result_files_are_deterministic_and_exportable() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.model");
    let b = dir.path().join("b.model");
    for p in [&a, &b] {
        let o = trivar(&["untrim", fixture("ring").to_str().unwrap(), "-o", p.to_str().unwrap()]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let ta = std::fs::read(&a).unwrap();
    assert_eq!(ta, std::fs::read(&b).unwrap());
    let doc = trivar::io::read_model(&a).unwrap();
    let tiles = doc.result_tiles("ring.untrimmed").unwrap();
    assert!(tiles.len() > 1);

    let o = trivar(&["export", a.to_str().unwrap(), "--res", "2", "--explode", "0.2"]);
    assert!(o.status.success());
    let obj = stdout(&o);
    assert_eq!(obj.lines().filter(|l| l.starts_with("v ")).count(), 8 * tiles.len());
    assert_eq!(obj.lines().filter(|l| l.starts_with("f ")).count(), 6 * tiles.len());

    let o = trivar(&["export", fixture("cube_tetra").to_str().unwrap(), "--res", "4", "--format", "vtk"]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("# vtk DataFile Version 3.0"));
}

#[test]
fn subdivide_commands() {
    let o = trivar(&["subdivide", fixture("knotted_box").to_str().unwrap(), "--bezier"]);
    assert!(o.status.success());
    let doc = trivar::io::parse_model(&stdout(&o)).unwrap();
    assert_eq!(doc.models.len(), 8);

    let o = trivar(&["subdivide", fixture("u_prism").to_str().unwrap(), "--t", "0.7", "--axis", "1"]);
    assert!(o.status.success());
    assert_eq!(trivar::io::parse_model(&stdout(&o)).unwrap().models.len(), 3);

    let o = trivar(&["subdivide", fixture("u_prism").to_str().unwrap(), "--t", "0.7"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn euclidean_mode_and_tolerance_flags() {
    let o = trivar(&["volume", fixture("ring").to_str().unwrap(), "--space", "euclid", "--stitch", "2e-7", "--seed", "4"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: f64 = stdout(&o).trim().parse().unwrap();
    assert!((v - 0.96).abs() < 1e-8, "{v}");
}

#[test]
fn stats_for_fig10() {
    let o = trivar(&["stats", fixture("fig10").to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split('|').map(str::trim).collect();
    assert_eq!(header, trivar::io::StatsReport::COLUMNS);
    lines.next();
    let row: Vec<&str> = lines.next().unwrap().split('|').map(str::trim).collect();
    assert_eq!(row[0], "fig10");
    assert_eq!(row[2], "34");
    assert_eq!(row[7], "E");
    let vol = lines.next().unwrap();
    let v: f64 = vol.rsplit(' ').next().unwrap().parse().unwrap();
    assert!((v - 0.855486).abs() < 1e-2, "{vol}");
}
