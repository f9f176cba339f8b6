use hiphome::experiment::{ExperimentConfig, Preset, ProfileConfig};
use hiphome::geometry::Table;
use hiphome::Error;

const MINIMAL: &str = r#"{
  "domain": { "length": 2.0, "width": 0.2, "epsilon": 0.2 },
  "profile": { "kind": "poiseuille", "mean": 10.0 },
  "problem": { "diffusion": 1.0, "reaction": 1.0, "forcing": 0.0, "inlet": 1.0 },
  "discretisation": { "h": [0.0125], "m": [1, 2] },
  "families": ["hiphome"],
  "reference": { "nx": 401, "nz": 21 }
}"#;

#[test]
fn every_preset_round_trips_through_json() {
    for p in [Preset::PoiseuilleSteady, Preset::LoglawSteady, Preset::LoglawUnsteady] {
        let c = ExperimentConfig::preset(p).unwrap();
        let again = ExperimentConfig::from_json_str(&c.to_json(), "roundtrip").unwrap();
        assert_eq!(c, again, "{}", p.as_str());
        assert_eq!(p.as_str().parse::<Preset>().unwrap(), p);
    }
}

#[test]
fn minimal_config_fills_defaults() {
    let c = ExperimentConfig::from_json_str(MINIMAL, "minimal").unwrap();
    assert_eq!(c.discretisation.n_y, 2048);
    assert_eq!(c.lattice.nx, 801);
    assert!(!c.timings && !c.dump_fields);
    assert!(c.time.is_none());
}

#[test]
fn unknown_fields_are_parse_errors() {
    let text = MINIMAL.replace("\"families\"", "\"colour\": 1, \"families\"");
    assert!(matches!(
        ExperimentConfig::from_json_str(&text, "x"),
        Err(Error::Parse { .. })
    ));
}

#[test]
fn invalid_values_are_config_errors() {
    for (from, to) in [
        ("\"h\": [0.0125]", "\"h\": [-1.0]"),
        ("\"m\": [1, 2]", "\"m\": []"),
        ("\"epsilon\": 0.2", "\"epsilon\": 1.5"),
        ("\"diffusion\": 1.0", "\"diffusion\": 0.0"),
        ("\"families\": [\"hiphome\"]", "\"families\": []"),
    ] {
        let text = MINIMAL.replace(from, to);
        assert_ne!(text, MINIMAL);
        match ExperimentConfig::from_json_str(&text, "x") {
            Err(Error::Config(_)) | Err(Error::InvalidArgument(_)) => {}
            other => panic!("{to}: {other:?}"),
        }
    }
}

#[test]
fn tabulated_path_resolves_next_to_the_config() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("u.csv"), "z,u\n0,0\n0.5,1\n1,0\n").unwrap();
    let text = MINIMAL.replace(
        r#"{ "kind": "poiseuille", "mean": 10.0 }"#,
        r#"{ "kind": "tabulated", "path": "u.csv" }"#,
    );
    let path = dir.path().join("cfg.json");
    std::fs::write(&path, text).unwrap();
    let c = ExperimentConfig::from_path(&path).unwrap();
    match &c.profile {
        ProfileConfig::Tabulated { path } => assert_eq!(path, &dir.path().join("u.csv")),
        other => panic!("{other:?}"),
    }
    let p = c.profile().unwrap();
    assert!((p.speed(0.25).unwrap() - 0.5).abs() < 1e-15);
}

#[test]
fn table_parsing() {
    let t = Table::from_csv_str("z, u\n0, 1\n0.5, 3\n1, 2\n").unwrap();
    assert_eq!(t.z(), &[0.0, 0.5, 1.0]);
    assert!((t.eval(0.75).unwrap() - 2.5).abs() < 1e-15);
    assert!(t.eval(1.5).is_err());
    for bad in ["z,u\n0,1\n", "z,u\n0,1\n0,2\n", "z,u\n0,1\nx,2\n", "z,u\n0,1,2\n1,2,3\n", "z,u\n0,1\n1,inf\n"] {
        assert!(matches!(Table::from_csv_str(bad), Err(Error::Parse { .. })), "{bad:?}");
    }
}
