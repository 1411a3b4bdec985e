//! Reads a `key = value` configuration and prints the full result.

use std::path::Path;

use flowsplat::io::{config_to_text, parse_config};

const TEXT: &str = "\
# fewer refinement rounds, no flow
refine_stage1_iters = 20
refine_stage2_iters = 20
weights.lambda4 = 0
tracking_solver = adam
lr.pose_rotation = 0.004
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = parse_config(TEXT, Path::new("example.cfg"))?;
    print!("{}", config_to_text(&cfg));
    match parse_config("weights.lambda1 = -1\n", Path::new("bad.cfg")) {
        Err(e) => println!("rejected: {e}"),
        Ok(_) => unreachable!("negative weights are invalid"),
    }
    Ok(())
}
