use trivar::io::{
    parse_model, serialize_model, tessellate_shell, tessellate_tiles, to_obj, to_vtk, ModelFile, StatsReport, StatsRow,
};
use trivar::spline::ruled_trivariate;
use trivar::trim::Space;
use trivar::untrim::untrim_trimmed_trivariate;
use trivar::{fixtures, Config, Error, Spline};

fn doc(name: &str, tt: &trivar::trim::TrimmedTrivariate) -> ModelFile {
    let mut m = ModelFile::default();
    m.add_model(name, tt);
    m
}

#[test]
fn unit_box_round_trips() {
    let tt = fixtures::unit_box();
    let text = serialize_model(&doc("box", &tt));
    assert!(text.starts_with("untrim-model 1\n"));
    let parsed = parse_model(&text).unwrap();
    assert_eq!(serialize_model(&parsed), text);
    assert_eq!(parsed.model("box").unwrap(), tt);
}

#[test]
fn trimmed_model_round_trips() {
    for (name, tt) in [("cube_tetra", fixtures::cube_tetra()), ("ring", fixtures::ring()), ("star", fixtures::star_bulge(3))] {
        let text = serialize_model(&doc(name, &tt));
        let parsed = parse_model(&text).unwrap();
        assert_eq!(serialize_model(&parsed), text, "{name}");
        assert_eq!(parsed.model(name).unwrap(), tt, "{name}");
    }
}

#[test]
fn floats_round_trip_exactly() {
    let vals = [0.1, 1.0 / 3.0, 1e-7, -2.5e300, 5e-324, 0.0, -0.0, 123456789.125];
    let mut c = Vec::new();
    for v in vals {
        c.extend([v, 0.0]);
    }
    let curve = Spline::new(vec![trivar::Knots::uniform(1, vals.len(), 0.0, 1.0).unwrap()], 2, c).unwrap();
    let mut m = ModelFile::default();
    m.maps.push(("c".into(), curve.clone()));
    let back = parse_model(&serialize_model(&m)).unwrap();
    let got = back.map("c").unwrap();
    for (a, b) in got.coeffs().iter().zip(curve.coeffs()) {
        assert_eq!(a.to_bits(), b.to_bits());
    }
}

#[test]
fn results_round_trip() {
    let tt = fixtures::cube_tetra();
    let ur = untrim_trimmed_trivariate(&tt, &Config::default()).unwrap();
    let mut m = doc("ct", &tt);
    m.add_result("ct.untrimmed", "ct", &ur);
    let text = serialize_model(&m);
    let parsed = parse_model(&text).unwrap();
    assert_eq!(serialize_model(&parsed), text);
    assert_eq!(parsed.result_tiles("ct.untrimmed").unwrap(), ur.tiles);
}

const SMALL: &str = "untrim-model 1
trivariate t
  degree 1 1 1
  knots 0 0 1 1
  knots 0 0 1 1
  knots 0 0 1 1
  dim 3
  ctrl 0 0 0
  ctrl 0 0 1
  ctrl 0 1 0
  ctrl 0 1 1
  ctrl 1 0 0
  ctrl 1 0 1
  ctrl 1 1 0
  ctrl 1 1 1
end
shell sh
  surfaces
end
model m
  trivariate t
  shell SHELL
  space parametric
end
";

#[test]
fn dangling_reference_names_the_id() {
    let e = parse_model(&SMALL.replace("SHELL", "nowhere")).unwrap_err();
    assert!(matches!(&e, Error::Reference(id) if id == "nowhere"), "{e}");
    assert!(e.to_string().contains("nowhere"));
    parse_model(&SMALL.replace("SHELL", "sh")).unwrap();
}

#[test]
fn wrong_kind_reference_is_located() {
    let e = parse_model(&SMALL.replace("SHELL", "t")).unwrap_err();
    match e {
        Error::Parse { line, col, .. } => assert_eq!((line, col), (22, 9)),
        e => panic!("{e}"),
    }
}

#[test]
fn weights_are_unsupported() {
    let text = SMALL.replace("SHELL", "sh").replace("  dim 3\n", "  dim 3\n  weights 1 1 1 1 1 1 1 1\n");
    let e = parse_model(&text).unwrap_err();
    assert!(matches!(e, Error::Unsupported(_)), "{e}");
    assert!(e.to_string().contains("weights"));
}

#[test]
fn syntax_errors_carry_positions() {
    let cases = [
        (SMALL.replace("ctrl 0 1 1", "ctrl 0 x 1"), 11, 10),
        (SMALL.replace("space parametric", "space sideways"), 23, 9),
        (SMALL.replace("shell sh\n", "shel sh\n"), 17, 1),
        (SMALL.replace("untrim-model 1", "untrim model"), 1, 1),
        (SMALL.replace("  ctrl 1 1 1\n", ""), 2, 1),
    ];
    for (text, line, col) in cases {
        let text = text.replace("SHELL", "sh");
        match parse_model(&text) {
            Err(Error::Parse { line: l, col: c, .. }) => assert_eq!((l, c), (line, col), "{text}"),
            r => panic!("{r:?}"),
        }
    }
    let unclosed = SMALL.replace("SHELL", "sh").trim_end().trim_end_matches("end").to_string();
    assert!(matches!(parse_model(&unclosed), Err(Error::Parse { line: 20, col: 1, .. })));
    assert!(matches!(parse_model("untrim-model 2\n"), Err(Error::Unsupported(_))));
}

#[test]
fn duplicate_ids_are_rejected() {
    let text = SMALL.replace("SHELL", "sh").replace("shell sh\n", "shell t\n").replace("shell sh", "shell t");
    assert!(matches!(parse_model(&text), Err(Error::Parse { line: 17, col: 7, .. })));
}

#[test]
fn comments_and_spacing_are_ignored() {
    let text = SMALL.replace("SHELL", "sh").replace("  dim 3\n", "\n  dim   3   # three\n\n");
    let m = parse_model(&text).unwrap();
    assert_eq!(m.map("t").unwrap(), &Spline::identity_box(&[0.0; 3], &[1.0; 3]));
    assert_eq!(m.models[0].1.space, Space::Parametric);
}

fn scaled(s: [f64; 3]) -> Spline {
    let mut c = Vec::new();
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                c.extend([s[0] * i as f64, s[1] * j as f64, s[2] * k as f64]);
            }
        }
    }
    Spline::bezier(&[1, 1, 1], 3, c).unwrap()
}

#[test]
fn unit_box_mesh() {
    let id = Spline::identity_box(&[0.0; 3], &[1.0; 3]);
    let m = tessellate_tiles(&id, std::slice::from_ref(&id), 2, 0.0);
    assert_eq!(m.vertices.len(), 8);
    assert_eq!(m.quads.len(), 6);
    assert_eq!(m.hexes.len(), 1);
    let obj = to_obj(&m);
    assert_eq!(obj.lines().filter(|l| l.starts_with("v ")).count(), 8);
    assert_eq!(obj.lines().filter(|l| l.starts_with("f ")).count(), 6);
    let vtk = to_vtk(&m);
    assert!(vtk.starts_with("# vtk DataFile Version 3.0\n"));
    assert!(vtk.contains("POINTS 8 double\n"));
    assert!(vtk.contains("CELLS 7 39\n"));
}

#[test]
fn mesh_vertices_follow_the_maps() {
    let s = [2.0, 3.0, 4.0];
    let t = scaled(s);
    let tile = Spline::identity_box(&[0.0; 3], &[1.0; 3]);
    let res = 5;
    let m = tessellate_tiles(&t, &[tile], res, 0.0);
    for i in 0..res {
        for j in 0..res {
            for k in 0..res {
                let p = [i, j, k].map(|x| x as f64 / (res - 1) as f64);
                let v = m.vertices[(i * res + j) * res + k];
                for a in 0..3 {
                    assert!((v[a] - s[a] * p[a]).abs() < 1e-12);
                }
            }
        }
    }
}

#[test]
fn pyramid_apex_face_collapses() {
    let top = Spline::bezier(&[1, 1], 3, vec![0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 1.0]).unwrap();
    let tile = ruled_trivariate(&[0.5, 0.5, 0.0], &top).unwrap();
    let id = Spline::identity_box(&[0.0; 3], &[1.0; 3]);
    let res = 4;
    let m = tessellate_tiles(&id, &[tile], res, 0.0);
    for i in 0..res {
        for j in 0..res {
            assert_eq!(m.vertices[(i * res + j) * res], [0.5, 0.5, 0.0]);
        }
    }
}

#[test]
fn exploded_tiles_move_apart() {
    let ur = untrim_trimmed_trivariate(&fixtures::knotted_box(), &Config::default()).unwrap();
    let a = tessellate_tiles(&ur.source.t, &ur.tiles, 2, 0.0);
    let b = tessellate_tiles(&ur.source.t, &ur.tiles, 2, 0.5);
    assert_eq!(a.vertices.len(), b.vertices.len());
    // every vertex of the first octant moves by half its center offset
    let moved: f64 = (0..3).map(|k| a.vertices[0][k] - b.vertices[0][k]).map(|d| d * d).sum::<f64>().sqrt();
    assert!(moved > 0.1);
}

#[test]
fn shell_mesh_stays_on_the_trimmed_faces() {
    let tt = fixtures::cube_tetra();
    let m = tessellate_shell(&tt, 9);
    assert!(!m.quads.is_empty());
    for q in &m.quads {
        let c: Vec<f64> = (0..3).map(|a| q.iter().map(|i| m.vertices[*i][a]).sum::<f64>() / 4.0).collect();
        assert!(c[0] + c[1] + c[2] <= 2.5 + 1e-9, "{c:?}");
    }
}

#[test]
fn stats_table_has_table_columns() {
    let tt = fixtures::cube_tetra();
    let ur = untrim_trimmed_trivariate(&tt, &Config::default()).unwrap();
    let report = StatsReport { rows: vec![StatsRow::from_results("cube_tetra", &[&ur])] };
    let text = report.render();
    let header: Vec<&str> = text.lines().next().unwrap().split('|').map(str::trim).collect();
    assert_eq!(header, StatsReport::COLUMNS);
    let row: Vec<&str> = text.lines().nth(2).unwrap().split('|').map(str::trim).collect();
    assert_eq!(row.len(), 8);
    assert_eq!(row[1], "1");
    assert_eq!(row[2], tt.shell.surfaces.len().to_string());
    assert_eq!(row[3], ur.tiles.len().to_string());
    assert_eq!(row[7], "P");
    assert_eq!(report.to_csv().lines().count(), 2);
}

#[test]
fn shipped_fixture_files_match_builders() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures");
    for (name, tt) in fixtures::named() {
        let text = std::fs::read_to_string(dir.join(format!("{name}.model"))).unwrap();
        let parsed = parse_model(&text).unwrap();
        assert_eq!(parsed.model(name).unwrap(), tt, "{name}");
        assert_eq!(serialize_model(&parsed), text, "{name}");
    }
}
