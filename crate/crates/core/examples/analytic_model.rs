//! Closed-form hit-miss and bandwidth estimates for one catalog.

use proxycache::analytics::{
    top_c_mass, top_c_mass_asymptotic, BandwidthParams, MassMode, ModelReport,
};
use proxycache::popularity::ZipfCatalog;
use proxycache::workload::{
    ObjectAttributes, RateConvention, DEFAULT_CHANNEL_RANGE_MS, DEFAULT_SIZE_RANGE_KB,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n = 10_000;
    let attributes =
        ObjectAttributes::generate(n, DEFAULT_SIZE_RANGE_KB, DEFAULT_CHANNEL_RANGE_MS, 7)?;

    println!("alpha     C  exact   corrected  paper");
    for alpha in [0.98, 0.75, 0.51, 0.31] {
        let catalog = ZipfCatalog::new(n, alpha)?;
        for c in [10, 100, 1000] {
            println!(
                "{alpha:<5} {c:>5}  {:.4}  {:.4}     {:.4}",
                top_c_mass(&catalog, c)?,
                top_c_mass_asymptotic(&catalog, c, MassMode::Corrected)?,
                top_c_mass_asymptotic(&catalog, c, MassMode::PaperLiteral)?,
            );
        }
    }

    let catalog = ZipfCatalog::new(n, 0.75)?;
    for rate in [RateConvention::Product, RateConvention::Ratio] {
        let params = BandwidthParams::new(0.5, 100)?.with_rate(rate);
        let report = ModelReport::build(&catalog, &attributes, &params, 1_000_000)?;
        println!("{rate:?}: {}", report.summary_line());
    }
    Ok(())
}
