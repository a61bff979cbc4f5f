//! Simulated hit ratio and imported bandwidth next to the closed-form model
//! over a range of cache sizes.

use std::io;

use proxycache::cache::Policy;
use proxycache::simulator::{compare_analytic, write_comparison_csv, SimConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = SimConfig {
        n_objects: 1000,
        alpha: 0.98,
        total_requests: 200_000,
        policy: Policy::Lru,
        seed: 11,
        ..SimConfig::default()
    };
    let rows = compare_analytic(&config, &[10, 32, 100, 316, 1000])?;
    write_comparison_csv(&rows, io::stdout().lock())?;
    Ok(())
}
