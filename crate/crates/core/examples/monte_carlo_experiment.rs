//! Randomized trials with noise on the conformed poses: three placements of
//! the L-shape, 20 repeats each. Pass a directory to also write trials.csv
//! and summary.json.
//!
//!     cargo run --release --example monte_carlo_experiment -- report/

use regrasp::experiment::{default_placements, run_experiment, write_report, TrialConfig};
use regrasp::geometry::io::{BuiltinShape, MeshSource};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mesh = BuiltinShape::LShape.mesh();
    let mut config = TrialConfig::new(
        MeshSource::Builtin {
            builtin: BuiltinShape::LShape,
        },
        default_placements(&mesh),
    );
    config.n_repeats = 20;
    // Keep the hidden error inside the pads' robust contact region.
    config.ranges.max_delta = 0.002;
    config.ranges.max_theta = 2f64.to_radians();
    config.sigma_p = 1e-4;
    config.sigma_r = 0.05f64.to_radians();

    let report = run_experiment(&config)?;
    println!("{:<8} {:>3}  {:>24}  {:>24}", "", "n", "std dp x/y/z (mm)", "std dw x/y/z (deg)");
    let rows = report.summary.placements.iter().map(|p| (p.name.as_str(), &p.stats));
    for (name, stats) in rows.chain([("overall", &report.summary.overall)]) {
        if let Some(std) = &stats.std {
            let [px, py, pz] = std.obj_dp;
            let [wx, wy, wz] = std.obj_dw;
            println!("{name:<8} {:>3}  {px:>7.4} {py:>7.4} {pz:>7.4}  {wx:>7.4} {wy:>7.4} {wz:>7.4}", stats.n);
        }
    }
    if let Some(dir) = std::env::args().nth(1) {
        write_report(&report, &dir)?;
        println!("report written to {dir}");
    }
    Ok(())
}
