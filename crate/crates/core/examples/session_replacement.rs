//! Walk a short trace through the session-based LFU cache and show every
//! hit, miss and eviction, then compare the three policies on a Zipf workload.

use proxycache::cache::{process_session, run_policy, CacheState, Policy, SessionBuffer};
use proxycache::popularity::ZipfCatalog;
use proxycache::workload::Workload;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sessions: [&[usize]; 3] = [&[1, 2, 1, 3], &[4, 1, 2], &[5, 5, 3]];
    let mut cache = CacheState::new(2, None)?;
    let mut buffer = SessionBuffer::new(4)?;
    for (i, session) in sessions.iter().enumerate() {
        buffer.fill(session)?;
        for o in process_session(&mut cache, &mut buffer)? {
            let what = if o.hit { "hit " } else { "miss" };
            match o.evicted {
                Some(v) => println!("session {i}: {} {what} (evicts {v})", o.rank),
                None => println!("session {i}: {} {what}", o.rank),
            }
        }
        let resident: Vec<String> = cache
            .entries()
            .iter()
            .map(|(r, e)| format!("{r}:{}", e.hit_count))
            .collect();
        println!("  resident [{}]", resident.join(" "));
    }

    let catalog = ZipfCatalog::new(1000, 0.98)?;
    let workload = Workload::generate(&catalog, 200_000, 1000, 1)?;
    for policy in Policy::ALL {
        let outcomes = run_policy(policy, 100, &workload)?;
        let hits = outcomes.iter().filter(|o| o.hit).count();
        println!(
            "{policy:<12} hit ratio {:.4}",
            hits as f64 / outcomes.len() as f64
        );
    }
    Ok(())
}
