//! Drive the batch runner programmatically: write a config, run it, and
//! read the classification histogram back from the JSON report. The same
//! config works through the `geofol run` binary.

use geofol::cli::{run, RunOverrides};

fn main() {
    let dir = std::env::temp_dir().join("geofol-batch-example");
    std::fs::create_dir_all(&dir).unwrap();
    let config_path = dir.join("torus.json");
    std::fs::write(
        &config_path,
        r#"{
    "version": 1,
    "construction": {
        "type": "rotation",
        "profile": {"type": "circle", "radius": 0.5, "center": [0.0, 0.0], "angle_range": [-3.0, 3.0]},
        "radius": 2.0
    },
    "verify": ["classify", "partial_tube_eq3"],
    "grid_res": [4],
    "output": {"mesh_res": [24, 24], "mesh_wrap": [true, false]}
}"#,
    )
    .unwrap();

    let mesh_path = dir.join("torus.obj");
    let code = run(
        &config_path,
        &RunOverrides {
            mesh: Some(mesh_path.clone()),
            ..RunOverrides::default()
        },
    );
    println!("exit code: {code}");

    let report_path = dir.join("torus.report.json");
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(report_path).unwrap()).unwrap();
    println!("histogram: {}", report["summary"]["histogram"]);
    println!("suites:    {}", report["summary"]["suite_pass"]);
    println!(
        "mesh:      {} ({} bytes)",
        mesh_path.display(),
        std::fs::metadata(&mesh_path).unwrap().len()
    );
}
