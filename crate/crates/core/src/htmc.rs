//! Hybrid tree / Monte Carlo paths and expected-exposure estimation.
//!
//! The variance walks on the binomial tree while the uncorrelated log-spot
//! follows the Euler recursion
//!
//! ```text
//! Y_{n+1} = Y_n + mu_Y(V_n) h + rho_bar sqrt(h V_n) Z_{n+1} + (N_{(n+1)h} - N_{nh})
//! ```
//!
//! with exact compound-Poisson increments.

use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{CvaError, Result};
use crate::htfd::PriceSurface;
use crate::model::{BatesParams, NumericsConfig};
use crate::tree::VolTree;

/// Simulated paths: tree node index and `Y` value per path and time level.
#[derive(Debug, Clone, PartialEq)]
pub struct PathBatch {
    n_paths: usize,
    n_steps: usize,
    seed: u64,
    // path-major, (n_steps + 1) entries per path
    node_index: Vec<u32>,
    y: Vec<f64>,
}

impl PathBatch {
    pub fn n_paths(&self) -> usize {
        self.n_paths
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn node_path(&self, j: usize) -> &[u32] {
        let w = self.n_steps + 1;
        &self.node_index[j * w..(j + 1) * w]
    }

    pub fn y_path(&self, j: usize) -> &[f64] {
        let w = self.n_steps + 1;
        &self.y[j * w..(j + 1) * w]
    }
}

/// RNG for path `j`: one ChaCha stream per path under the batch seed, so the
/// draws do not depend on how paths are scheduled across workers.
pub fn path_rng(seed: u64, j: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(j as u64);
    rng
}

pub fn simulate_paths(
    tree: &VolTree,
    params: &BatesParams,
    cfg: &NumericsConfig,
) -> Result<PathBatch> {
    params.validate()?;
    if cfg.n_paths == 0 {
        return Err(CvaError::InvalidParameter {
            name: "n_paths",
            reason: "must be >= 1".into(),
        });
    }
    let n_steps = tree.n_steps();
    let width = n_steps + 1;
    let h = tree.h();
    let sqrt_h = h.sqrt();
    let rho_bar = params.rho_bar();
    let jump_mean = params.log_jump_mean();
    let jump_sd = params.beta2.sqrt();
    let poisson = if params.lambda > 0.0 {
        Some(
            Poisson::new(params.lambda * h).map_err(|e| CvaError::InvalidParameter {
                name: "lambda",
                reason: e.to_string(),
            })?,
        )
    } else {
        None
    };
    let y0 = params.y0();

    let mut node_index = vec![0u32; cfg.n_paths * width];
    let mut y = vec![0.0; cfg.n_paths * width];
    node_index
        .par_chunks_mut(width)
        .zip(y.par_chunks_mut(width))
        .enumerate()
        .for_each(|(j, (nodes, ys))| {
            let mut rng = path_rng(cfg.seed, j);
            let mut k = 0usize;
            let mut yn = y0;
            nodes[0] = 0;
            ys[0] = yn;
            for n in 0..n_steps {
                let v = tree.v(n, k);
                let z: f64 = StandardNormal.sample(&mut rng);
                let mut jump = 0.0;
                if let Some(p) = &poisson {
                    let count: f64 = p.sample(&mut rng);
                    if count > 0.0 {
                        let g: f64 = StandardNormal.sample(&mut rng);
                        jump = count * jump_mean + count.sqrt() * jump_sd * g;
                    }
                }
                yn += params.mu_y(v) * h + rho_bar * sqrt_h * v.sqrt() * z + jump;
                let (kd, ku, p_up) = tree.transition(n, k);
                let u: f64 = rng.random();
                k = if u < p_up { ku } else { kd };
                nodes[n + 1] = k as u32;
                ys[n + 1] = yn;
            }
        });

    Ok(PathBatch {
        n_paths: cfg.n_paths,
        n_steps,
        seed: cfg.seed,
        node_index,
        y,
    })
}

/// Expected exposure `EE(nh)` on the time grid with its Monte Carlo error.
#[derive(Debug, Clone, PartialEq)]
pub struct ExposureProfile {
    pub times: Vec<f64>,
    pub ee: Vec<f64>,
    /// Standard error of each `ee[n]`.
    pub se: Vec<f64>,
    pub n_paths: usize,
    /// Sample covariance of the per-path exposures across time levels,
    /// row-major `(N + 1) x (N + 1)`.
    pub covariance: Vec<f64>,
}

impl ExposureProfile {
    pub fn len(&self) -> usize {
        self.ee.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ee.is_empty()
    }

    /// Writes the `t,ee,se` table.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        #[derive(Serialize)]
        struct Row {
            t: f64,
            ee: f64,
            se: f64,
        }
        let mut w = csv::Writer::from_writer(writer);
        for ((&t, &ee), &se) in self.times.iter().zip(&self.ee).zip(&self.se) {
            w.serialize(Row { t, ee, se })?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_csv_file(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

/// `EE(nh) = mean_j max(V(nh, S_j, V_j), 0)` with the price read off the
/// surface at each path's node.
pub fn expected_exposure(batch: &PathBatch, surface: &PriceSurface) -> Result<ExposureProfile> {
    let n_steps = surface.n_steps();
    if batch.n_steps != n_steps {
        return Err(CvaError::DimensionMismatch(format!(
            "paths have {} steps, surface has {n_steps}",
            batch.n_steps
        )));
    }
    let width = n_steps + 1;
    let n_paths = batch.n_paths;

    let mut exposures = vec![0.0; n_paths * width];
    exposures
        .par_chunks_mut(width)
        .enumerate()
        .for_each(|(j, row)| {
            let nodes = batch.node_path(j);
            let ys = batch.y_path(j);
            for n in 0..width {
                let values = surface.node_values(n, nodes[n] as usize);
                row[n] = surface.grid.interpolate(values, ys[n]).max(0.0);
            }
        });

    // Means shifted by the first path keep identical samples exactly identical.
    let first = &exposures[..width];
    let mut ee = vec![0.0; width];
    for row in exposures.chunks(width) {
        for n in 0..width {
            ee[n] += row[n] - first[n];
        }
    }
    for n in 0..width {
        ee[n] = first[n] + ee[n] / n_paths as f64;
    }
    let centred: Vec<f64> = exposures
        .chunks(width)
        .flat_map(|row| row.iter().zip(&ee).map(|(x, m)| x - m))
        .collect();

    let denom = if n_paths > 1 {
        (n_paths - 1) as f64
    } else {
        1.0
    };
    let mut covariance = vec![0.0; width * width];
    covariance
        .par_chunks_mut(width)
        .enumerate()
        .for_each(|(a, cov_row)| {
            for row in centred.chunks(width) {
                let ca = row[a];
                if ca == 0.0 {
                    continue;
                }
                for (c, &cb) in cov_row.iter_mut().zip(row) {
                    *c += ca * cb;
                }
            }
            for c in cov_row.iter_mut() {
                *c /= denom;
            }
        });
    let se = (0..width)
        .map(|n| (covariance[n * width + n] / n_paths as f64).sqrt())
        .collect();
    let h = surface.tree.h();
    Ok(ExposureProfile {
        times: (0..width).map(|n| n as f64 * h).collect(),
        ee,
        se,
        n_paths,
        covariance,
    })
}
