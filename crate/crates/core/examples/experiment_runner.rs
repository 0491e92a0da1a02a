//! Driving the config-based runner from code: the same path the `pga run`
//! command takes. Writes per-seed traces and a summary under the system
//! temp directory.

use pga::cli::{parse_config, render_config, run};

fn main() -> pga::Result<()> {
    let out = std::env::temp_dir().join("pga-experiment-runner");
    let config = "\
experiment=zdt1
method=pga
seeds=0,1,2
total_iters=500
";
    let spec = parse_config(config, &[format!("output_dir={}", out.display())])?;
    print!("{}", render_config(&spec));
    let summary = run(&spec)?;
    for metric in ["f1", "f2", "convergence", "sim_rise"] {
        println!("{metric:<12} mean {:.5}", summary.mean(metric).unwrap());
    }
    println!("files in {}", out.display());
    Ok(())
}
