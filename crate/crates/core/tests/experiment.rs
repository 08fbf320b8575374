use std::fs;

use dissest::experiment::{figure_svg, run_fig3, run_fig4, ExperimentSpec, FigureOptions, SampleSet};
use tempfile::TempDir;

fn opts(seed: u64) -> FigureOptions {
    FigureOptions {
        seed,
        ..FigureOptions::default()
    }
}

#[test]
fn runs_are_byte_identical() {
    let dirs = [TempDir::new().unwrap(), TempDir::new().unwrap()];
    for d in &dirs {
        run_fig3(&[0.1, 1.0], 60, &opts(3))
            .unwrap()
            .write(d.path())
            .unwrap();
    }
    for name in [
        "manifest.json",
        "report.json",
        "figure.svg",
        "T0.1_lti_circle/records.csv",
        "T1_lti_circle/scatter.csv",
    ] {
        let a = fs::read(dirs[0].path().join(name)).unwrap();
        let b = fs::read(dirs[1].path().join(name)).unwrap();
        assert_eq!(a, b, "{name}");
    }
    let other = run_fig3(&[0.1], 60, &opts(4)).unwrap();
    let first = run_fig3(&[0.1], 60, &opts(3)).unwrap();
    assert_ne!(first.panels[0].records, other.panels[0].records);
}

#[test]
fn figure_is_a_function_of_the_csvs() {
    let dir = TempDir::new().unwrap();
    let run = run_fig4(0.2, &[2.0], 0.2, &opts(1)).unwrap();
    run.write(dir.path()).unwrap();
    let panels: Vec<(String, String)> = ["Tmax2_lti_circle", "Tmax2_pendulum"]
        .iter()
        .map(|sub| {
            let csv = fs::read_to_string(dir.path().join(sub).join("records.csv")).unwrap();
            (sub.to_string(), csv)
        })
        .collect();
    let svg = figure_svg(&run.title, &panels).unwrap();
    assert_eq!(svg, fs::read_to_string(dir.path().join("figure.svg")).unwrap());
}

#[test]
fn manifest_reproduces_the_records() {
    let spec = ExperimentSpec::from_json(
        r#"{"name":"m","plant":{"kind":"lti_circle"},"basis":{"kind":"legendre","n_basis":3},
            "sampling":{"mode":"uniform","count":30},"seed":8,"T":2}"#,
    )
    .unwrap();
    let set = SampleSet::generate(&spec).unwrap();
    let records = set.simulate(&spec.plant).unwrap();
    let manifest = dissest::experiment::Manifest::for_spec(&spec, "sim").unwrap();
    let respec: ExperimentSpec = serde_json::from_value(manifest.spec.clone()).unwrap();
    assert_eq!(respec, spec);
    let again = SampleSet::generate(&respec)
        .unwrap()
        .simulate(&respec.plant)
        .unwrap();
    assert_eq!(
        dissest::cone::records_to_csv(&records),
        dissest::cone::records_to_csv(&again)
    );
    assert_eq!(manifest.seed, Some(8));
}

#[test]
fn parallel_simulation_is_partition_independent() {
    let spec = ExperimentSpec::from_json(
        r#"{"plant":{"kind":"pendulum"},"sampling":{"mode":"wiener","count":40},"seed":2,"T":1}"#,
    )
    .unwrap();
    let set = SampleSet::generate(&spec).unwrap();
    let parallel = set.simulate(&spec.plant).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let serial = pool.install(|| set.simulate(&spec.plant)).unwrap();
    assert_eq!(parallel, serial);
}
