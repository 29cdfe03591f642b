#![allow(dead_code)]

use bates_cva::{BatesParams, JumpLaw};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use rayon::prelude::*;

/// Benchmark CVAs at config D, indexed by S0 = 80, 100, 120.
pub const EUROPEAN_BENCHMARK: [f64; 3] = [0.323724, 0.060359, 0.005589];
pub const AMERICAN_BENCHMARK: [f64; 3] = [0.339054, 0.062145, 0.005740];
pub const SPOTS: [f64; 3] = [80.0, 100.0, 120.0];

#[derive(Debug, Clone, Copy)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
}

/// Discounted European put prices for several spots from one set of
/// full-truncation Euler paths of the log-return `log(S_T / S0)`.
pub fn euler_put_prices(
    p: &BatesParams,
    spots: &[f64],
    strike: f64,
    maturity: f64,
    n_paths: usize,
    n_steps: usize,
    seed: u64,
) -> Vec<Estimate> {
    let log_mean = match p.jump_law {
        JumpLaw::MeanCorrected => p.alpha - 0.5 * p.beta2,
        JumpLaw::LogMean => p.alpha,
    };
    let kbar = (log_mean + 0.5 * p.beta2).exp() - 1.0;
    let h = maturity / n_steps as f64;
    let sqrt_h = h.sqrt();
    let rho_perp = (1.0 - p.rho * p.rho).sqrt();
    let jump_sd = p.beta2.sqrt();
    let poisson = (p.lambda > 0.0).then(|| Poisson::new(p.lambda * h).unwrap());
    let df = (-p.r * maturity).exp();

    const CHUNK: usize = 10_000;
    let n_chunks = n_paths.div_ceil(CHUNK);
    let sums: Vec<(Vec<f64>, Vec<f64>)> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let mut s1 = vec![0.0; spots.len()];
            let mut s2 = vec![0.0; spots.len()];
            let count = CHUNK.min(n_paths - c * CHUNK);
            for _ in 0..count {
                let mut x = 0.0;
                let mut v = p.v0;
                for _ in 0..n_steps {
                    let vp = v.max(0.0);
                    let z1: f64 = StandardNormal.sample(&mut rng);
                    let z2: f64 = StandardNormal.sample(&mut rng);
                    let zv = p.rho * z1 + rho_perp * z2;
                    let mut jump = 0.0;
                    if let Some(d) = &poisson {
                        let k: f64 = d.sample(&mut rng);
                        for _ in 0..k as usize {
                            let g: f64 = StandardNormal.sample(&mut rng);
                            jump += log_mean + jump_sd * g;
                        }
                    }
                    x += (p.r - p.eta - p.lambda * kbar - 0.5 * vp) * h
                        + (vp * h).sqrt() * z1
                        + jump;
                    v += p.kappa * (p.theta - vp) * h + p.sigma * vp.sqrt() * sqrt_h * zv;
                }
                let growth = x.exp();
                for (i, &s0) in spots.iter().enumerate() {
                    let pay = df * (strike - s0 * growth).max(0.0);
                    s1[i] += pay;
                    s2[i] += pay * pay;
                }
            }
            (s1, s2)
        })
        .collect();

    let n = n_paths as f64;
    (0..spots.len())
        .map(|i| {
            let s1: f64 = sums.iter().map(|s| s.0[i]).sum();
            let s2: f64 = sums.iter().map(|s| s.1[i]).sum();
            let mean = s1 / n;
            let var = (s2 / n - mean * mean) * n / (n - 1.0);
            Estimate {
                mean,
                se: (var.max(0.0) / n).sqrt(),
            }
        })
        .collect()
}
