//! Write a bilevel instance to the JSON file format, read it back and solve it.

use bilevel_dc::bench::random_starts;
use bilevel_dc::{run_penalty, BilevelInstance, Method, PenaltyParams};

const TOY: &str = r#"{
  "A": [[-1.0], [0.0], [0.0]],
  "B": [[-1.0, -1.0], [-1.0, 0.0], [0.0, -1.0]],
  "b": [-1.0, 0.0, 0.0],
  "C": [[-1.0]],
  "D": [[0.0, 0.0]],
  "d": [-0.5],
  "c": [1.0, 0.0],
  "Q": [[2.0, 0.0, 0.0], [0.0, 2.0, 2.0], [0.0, 2.0, 2.0]],
  "q": [0.0, 0.0, 0.0],
  "const": 0.0,
  "start_box": [[0.0, 2.0], [0.0, 2.0], [0.0, 2.0]],
  "f_star": 0.5
}"#;

fn main() -> bilevel_dc::Result<()> {
    let path = std::env::temp_dir().join("bilevel-dc-toy.json");
    std::fs::write(&path, TOY).expect("temp dir is writable");
    let inst = BilevelInstance::load(path.to_str().expect("utf-8 temp path"))?;
    println!(
        "loaded `{}`: n = {}, m = {}, p = {}, q = {}",
        inst.name,
        inst.n(),
        inst.m(),
        inst.p(),
        inst.q()
    );
    let w0 = random_starts(&inst, 1, 1)?.remove(0);
    let r = run_penalty(&inst, &w0, Method::Pbdc, &PenaltyParams::default())?;
    println!(
        "PBDC: x = {:?}, y = {:?}, f = {:.6}",
        r.x.as_slice(),
        r.y.as_slice(),
        r.final_value
    );

    // round trip through the serializer
    let again = BilevelInstance::from_json("copy", &inst.to_json())?;
    println!(
        "round trip preserves the data: {}",
        again.to_json() == inst.to_json()
    );
    Ok(())
}
