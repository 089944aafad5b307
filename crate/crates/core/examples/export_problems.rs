//! Writes the sample problem files under `problems/`.

use std::path::Path;

use nalgebra::DVector;
use polycert::complexity::one_layer_replica;
use polycert::io::{write_json, ControllerDoc, NetworkDoc, SystemDoc};
use polycert::{instances, Result};
use serde_json::json;

fn main() -> Result<()> {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../problems");

    let (sys, spec) = instances::inert_box()?;
    let dir = root.join("inert_box");
    std::fs::create_dir_all(&dir)?;
    write_json(&dir.join("system.json"), &SystemDoc::of(&sys, &spec))?;

    let (sys, spec) = instances::planar_pair()?;
    let dir = root.join("planar_pair");
    std::fs::create_dir_all(&dir)?;
    write_json(&dir.join("system.json"), &SystemDoc::of(&sys, &spec))?;
    let mut bare = SystemDoc::of(&sys, &spec);
    bare.vertex_controls = None;
    write_json(&dir.join("system_bare.json"), &bare)?;

    let controllers = [
        ("simplex", ControllerDoc::SimplexGain),
        ("vertex_interp", ControllerDoc::VertexInterp),
        ("minimal_selection", ControllerDoc::default_minimal_selection(2, 1)),
    ];
    for (name, doc) in &controllers {
        write_json(&dir.join(format!("{name}.json")), doc)?;
    }

    let simplex = ControllerDoc::SimplexGain.build(&sys, &spec)?;
    let replica = one_layer_replica(&simplex.partition()?)?;
    write_json(&dir.join("replica.json"), &NetworkDoc::of(&replica))?;
    let mut offset = replica.clone();
    let last = offset.layers_mut().last_mut().expect("output layer");
    last.bias += DVector::from_element(last.bias.len(), 0.5);
    write_json(&dir.join("offset.json"), &NetworkDoc::of(&offset))?;

    let jobs = [
        ("job_replica.json", json!({"system": "system.json", "controller": "simplex.json", "network": "replica.json", "alpha": "inf", "rho": 0.9})),
        ("job_offset.json", json!({"system": "system.json", "controller": "simplex.json", "network": "offset.json", "alpha": "inf", "rho": 0.9})),
        ("job_minimal_selection.json", json!({"system": "system.json", "controller": "minimal_selection.json", "seed": 7})),
    ];
    for (name, job) in &jobs {
        write_json(&dir.join(name), job)?;
    }
    Ok(())
}
