use thickpoints::experiment::{cmd_excursions, cmd_spectrum, ExperimentConfig};

fn config(out: &std::path::Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.set("out", out.to_str().unwrap()).unwrap();
    cfg
}

#[test]
fn spectrum_command_writes_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = config(tmp.path());
    for (k, v) in [("reps", "4"), ("dt", "1e-3"), ("eps", "0.1,0.05,0.02"), ("a", "0.3,0.1")] {
        cfg.set(k, v).unwrap();
    }
    let s = cmd_spectrum(&cfg).unwrap();
    // levels come back sorted
    assert_eq!(s.spectra.iter().map(|e| e.a).collect::<Vec<_>>(), vec![0.1, 0.3]);
    assert!(s.mass_monotone_in_a);
    assert_eq!(s.sup.values.len(), 4);
    for f in ["spectrum_a0.1.csv", "spectrum_a0.3.csv", "sup.csv", "spectrum.json"] {
        assert!(tmp.path().join(f).exists(), "{f}");
    }
    let csv = std::fs::read_to_string(tmp.path().join("spectrum_a0.1.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn excursion_command_reports_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = config(tmp.path());
    for (k, v) in [("reps", "2"), ("dt", "1e-4"), ("k_max", "2")] {
        cfg.set(k, v).unwrap();
    }
    let s = cmd_excursions(&cfg).unwrap();
    assert!(!s.resolved);
    // two centers, k = 2, two radii each
    assert_eq!(s.rows.len(), 4);
    for pair in s.rows.chunks(2) {
        assert!(pair[0].count <= pair[1].count);
    }
    let again = cmd_excursions(&cfg).unwrap();
    assert_eq!(s, again);
    assert!(tmp.path().join("excursions.json").exists());
}
