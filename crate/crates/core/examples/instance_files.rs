//! Instance files: build one in code, write it, read it back and run the
//! same pipeline the `locp` binary runs on it.
//!
//! Run with `cargo run --example instance_files`, then try
//! `cargo run --bin locp -- validate <printed path>`.

use locp::cli::{gen, GenKind};
use locp::instance::Instance;
use locp::radon_nikodym::derivative;
use locp::{dilate_minimal, verify_local_cp, Tolerances};

fn main() -> locp::Result<()> {
    let tol = Tolerances::default();
    let json = gen(GenKind::DominatedPair, 0, 7, &tol)?;
    let path = std::env::temp_dir().join("locp_dominated_pair.json");
    std::fs::write(&path, json.to_json_string())?;
    println!("wrote {}", path.display());

    let inst = Instance::load(&path)?;
    for (name, map) in &inst.maps {
        println!("map {name}: local CP = {}", verify_local_cp(map, &inst.tolerances).pass);
    }
    let rep = dilate_minimal(inst.map("phi")?, &inst.tolerances)?;
    let cert = derivative(&rep, inst.map("psi")?, &inst.tolerances)?;
    let recorded = &inst.ground_truth["T"];
    println!("derivative matches the recorded T to {:.2e}", (&cert.t_matrix - recorded).norm());
    Ok(())
}
