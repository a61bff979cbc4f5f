//! Correction terms a_n = n^-s - integral_n^{n+1} x^-s dx for a complex
//! exponent, checked against the bound |s| n^(-1-sigma).

use proxycache::popularity::{
    power_modulus, zeta_partial_sum, zeta_partial_terms, zeta_real, ComplexExponent,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let s = ComplexExponent::new(0.5, 14.134725);
    println!(
        "|n^-s| is independent of the imaginary part: {:.6} vs {:.6}",
        power_modulus(10, s),
        power_modulus(10, ComplexExponent::real(0.5))
    );

    let terms = zeta_partial_terms(s, 10_000)?;
    for t in terms
        .iter()
        .filter(|t| [1, 10, 100, 1000, 10_000].contains(&t.n))
    {
        println!(
            "n={:<6} |a_n|={:.3e} bound={:.3e}",
            t.n,
            t.value.norm(),
            t.bound
        );
    }
    let worst = terms
        .iter()
        .map(|t| t.value.norm() / t.bound)
        .fold(0.0, f64::max);
    println!("largest |a_n| / bound = {worst:.4}");

    let two = zeta_partial_sum(ComplexExponent::real(2.0), 2000)?;
    println!(
        "sum of a_n at s=2: {:.8} (pi^2/6 - 1 = {:.8})",
        two.re,
        std::f64::consts::PI.powi(2) / 6.0 - 1.0
    );
    for x in [0.31, 0.5, 0.98, 2.0] {
        println!("zeta({x}) = {:.8}", zeta_real(x)?);
    }
    Ok(())
}
