//! Gauss-Hermite expectations under normal random effects.

use clustered_msm::likelihood::{bivariate_integrate, gauss_hermite_rule};
use clustered_msm::model::RandomEffectsParams;

fn main() {
    for n in [5, 15, 30] {
        let rule = gauss_hermite_rule(n).unwrap();
        // E exp(U) for U ~ N(0, s2) is exp(s2 / 2)
        let s2: f64 = 2.07;
        let got = rule.integrate(|x| (s2.sqrt() * x).exp());
        println!("n = {n:>2}: E exp(U) = {got:.10} (exact {:.10})", (s2 / 2.0).exp());
    }

    let re = RandomEffectsParams::from_natural(1.0, 1.0, 0.5);
    let rule = gauss_hermite_rule(15).unwrap();
    let mixed = bivariate_integrate(|u, v| u * v, &re, &rule);
    let mgf = bivariate_integrate(|u, v| (u + v).exp(), &re, &rule);
    println!("E[UV] = {mixed:.12} (covariance 0.5)");
    println!("E exp(U + V) = {mgf:.12} (exact {:.12})", 1.5f64.exp());

    // a sharply peaked integrand needs more nodes
    for n in [15, 30, 60, 100] {
        let rule = gauss_hermite_rule(n).unwrap();
        let peaked = rule.integrate(|x| (-(x - 1.0).powi(2) * 40.0).exp());
        println!("n = {n:>3}: peaked integrand {peaked:.10}");
    }
}
