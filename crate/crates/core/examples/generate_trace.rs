//! Generate a request trace, save it, read it back and summarise the
//! rank histogram.

use proxycache::popularity::ZipfCatalog;
use proxycache::simulator::fit_power_law;
use proxycache::workload::Workload;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let catalog = ZipfCatalog::new(10_000, 0.7)?;
    let workload = Workload::generate(&catalog, 1_000_000, 1000, 2024)?;

    let path = std::env::temp_dir().join("example.trace");
    workload.save_trace(&path)?;
    let reloaded = Workload::load_trace(&path)?;
    assert_eq!(reloaded.requests(), workload.requests());
    println!(
        "{} requests in {} sessions written to {}",
        reloaded.len(),
        reloaded.session_boundaries().len(),
        path.display()
    );

    let hist = reloaded.histogram();
    println!("request deciles: {:?}", hist.binned(10));
    let fit = fit_power_law(&hist, 100)?;
    println!(
        "log-log slope over ranks 1..=100: {:.4} (r2 {:.4})",
        fit.slope, fit.r_squared
    );
    Ok(())
}
