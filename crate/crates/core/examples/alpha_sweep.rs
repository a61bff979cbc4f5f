//! Simulate the six reference skew values in parallel and report hit ratio,
//! bandwidth and the fitted popularity slope for each.

use proxycache::simulator::{
    fit_power_law, request_share, sweep, SimConfig, SweepConfig, PAPER_ALPHAS,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = SweepConfig {
        base: SimConfig {
            total_requests: 300_000,
            seed: 3,
            ..SimConfig::default()
        },
        alphas: PAPER_ALPHAS.to_vec(),
        capacities: vec![100],
    };
    println!("alpha  hit_ratio  bandwidth      slope   top-158 share");
    for report in sweep(&spec)? {
        let hist = report.histogram();
        let fit = fit_power_law(&hist, 100)?;
        println!(
            "{:<5}  {:.4}     {:<13.1}  {:.3}  {:.3}",
            report.config.alpha,
            report.totals.hit_ratio,
            report.totals.total_bandwidth,
            fit.slope,
            request_share(&hist, 158),
        );
    }
    Ok(())
}
