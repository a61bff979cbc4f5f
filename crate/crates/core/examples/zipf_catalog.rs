//! Build a Zipf catalog, inspect its head and tail, and draw a few requests.
//!
//!     cargo run --example zipf_catalog -- 10000 0.75

use proxycache::popularity::ZipfCatalog;
use proxycache::workload::seeded_rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map_or(Ok(10_000), |s| s.parse())?;
    let alpha: f64 = args.next().map_or(Ok(0.75), |s| s.parse())?;

    let catalog = ZipfCatalog::new(n, alpha)?;
    println!(
        "N={n} alpha={alpha} H(N,alpha)={:.6} normalizer={:.6e}",
        catalog.harmonic_sum(),
        catalog.normalizer()
    );
    for rank in [1, 2, 10, 100, n] {
        if rank <= n {
            println!("  p_{rank:<6} = {:.6e}", catalog.probability(rank)?);
        }
    }

    let mut rng = seeded_rng(42, 0);
    let draws: Vec<usize> = (0..12).map(|_| catalog.sample_rank(&mut rng)).collect();
    println!("sampled ranks: {draws:?}");

    let path = std::env::temp_dir().join("zipf_catalog.csv");
    catalog.save_csv(&path)?;
    println!("catalog written to {}", path.display());
    Ok(())
}
