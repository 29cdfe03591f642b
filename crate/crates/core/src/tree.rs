//! Recombining binomial tree for the CIR variance with multiple jumps.
//!
//! Node values are `v[n][k] = (sqrt(V0) + sigma/2 (2k - n) sqrt(h))^2`,
//! floored at zero. From node `(n, k)` the chain moves to the closest
//! nodes at level `n + 1` that bracket the one-step conditional mean
//! `v + kappa (theta - v) h`, with the up-probability chosen so that this
//! mean is matched exactly (then clamped into `[0, 1]`).

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::{invalid, CvaError, Result};
use crate::model::BatesParams;

#[derive(Debug, Clone, PartialEq)]
pub struct VolTree {
    n_steps: usize,
    h: f64,
    values: Vec<f64>,
    up: Vec<usize>,
    down: Vec<usize>,
    p_up: Vec<f64>,
    // true where the target set was empty or the raw probability left [0, 1]
    clamped: Vec<bool>,
}

#[inline]
fn offset(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Node value formula, zero where the square root would go negative.
pub fn node_value(v0: f64, sigma: f64, h: f64, n: usize, k: usize) -> f64 {
    if 2 * k == n {
        return v0;
    }
    let root = v0.sqrt() + 0.5 * sigma * (2.0 * k as f64 - n as f64) * h.sqrt();
    if root > 0.0 {
        root * root
    } else {
        0.0
    }
}

impl VolTree {
    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    /// Time step `T / N`.
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn maturity(&self) -> f64 {
        self.h * self.n_steps as f64
    }

    /// Total node count, `(N + 1)(N + 2) / 2`.
    pub fn node_count(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn v(&self, n: usize, k: usize) -> f64 {
        self.values[offset(n) + k]
    }

    /// The variance values at level `n`.
    pub fn level(&self, n: usize) -> &[f64] {
        &self.values[offset(n)..offset(n) + n + 1]
    }

    fn check(&self, n: usize, k: usize) -> Result<usize> {
        if n >= self.n_steps || k > n {
            return Err(CvaError::IndexOutOfRange(format!(
                "node ({n}, {k}) outside a tree with {} steps (need k <= n < N)",
                self.n_steps
            )));
        }
        Ok(offset(n) + k)
    }

    /// `(k_d, k_u)`: the down and up targets at level `n + 1`.
    pub fn jump_targets(&self, n: usize, k: usize) -> Result<(usize, usize)> {
        let idx = self.check(n, k)?;
        Ok((self.down[idx], self.up[idx]))
    }

    /// Probability of moving to the up target.
    pub fn transition_prob(&self, n: usize, k: usize) -> Result<f64> {
        let idx = self.check(n, k)?;
        Ok(self.p_up[idx])
    }

    /// Unchecked accessor used on hot paths: `(k_d, k_u, p_up)`.
    #[inline]
    pub fn transition(&self, n: usize, k: usize) -> (usize, usize, f64) {
        let idx = offset(n) + k;
        (self.down[idx], self.up[idx], self.p_up[idx])
    }

    pub fn is_clamped(&self, n: usize, k: usize) -> Result<bool> {
        let idx = self.check(n, k)?;
        Ok(self.clamped[idx])
    }

    /// Marginal distribution of the chain over level `n`, starting at the root.
    pub fn marginal(&self, n: usize) -> Vec<f64> {
        let n = n.min(self.n_steps);
        let mut dist = vec![1.0];
        for m in 0..n {
            let mut next = vec![0.0; m + 2];
            for (k, &mass) in dist.iter().enumerate() {
                if mass == 0.0 {
                    continue;
                }
                let (kd, ku, p) = self.transition(m, k);
                next[ku] += p * mass;
                next[kd] += (1.0 - p) * mass;
            }
            dist = next;
        }
        dist
    }

    /// Writes one row per non-terminal node: `n,k,v,k_down,k_up,p_up`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        #[derive(Serialize)]
        struct Row {
            n: usize,
            k: usize,
            v: f64,
            k_down: usize,
            k_up: usize,
            p_up: f64,
        }
        let mut w = csv::Writer::from_writer(writer);
        for n in 0..self.n_steps {
            for k in 0..=n {
                let (k_down, k_up, p_up) = self.transition(n, k);
                w.serialize(Row {
                    n,
                    k,
                    v: self.v(n, k),
                    k_down,
                    k_up,
                    p_up,
                })?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_csv_file(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

/// Mean-matching up-probability between children `lo <= hi`, clamped into
/// `[0, 1]`; `1` when the children coincide. Also reports whether clamping
/// (or the coincidence rule) was used.
fn up_probability(target: f64, lo: f64, hi: f64) -> (f64, bool) {
    let den = hi - lo;
    if den > 0.0 {
        let raw = (target - lo) / den;
        (raw.clamp(0.0, 1.0), !(0.0..=1.0).contains(&raw))
    } else {
        (1.0, true)
    }
}

/// Builds the variance tree over `[0, maturity]` with `n_steps` steps.
pub fn build_tree(params: &BatesParams, n_steps: usize, maturity: f64) -> Result<VolTree> {
    if n_steps < 1 {
        return Err(invalid("n_steps", "must be >= 1"));
    }
    if !(maturity > 0.0 && maturity.is_finite()) {
        return Err(invalid("maturity", "must be finite and > 0"));
    }
    params.validate()?;

    let h = maturity / n_steps as f64;
    let total = offset(n_steps + 1);
    let mut values = Vec::with_capacity(total);
    for n in 0..=n_steps {
        for k in 0..=n {
            values.push(node_value(params.v0, params.sigma, h, n, k));
        }
    }

    let inner = offset(n_steps);
    let mut up = vec![0; inner];
    let mut down = vec![0; inner];
    let mut p_up = vec![0.0; inner];
    let mut clamped = vec![false; inner];

    for n in 0..n_steps {
        let next = &values[offset(n + 1)..offset(n + 1) + n + 2];
        for k in 0..=n {
            let idx = offset(n) + k;
            let v = values[idx];
            let target = v + params.mu_v(v) * h;

            // Largest k* <= k whose value lies at or below the target.
            let found_down = (0..=k).rev().find(|&j| target >= next[j]);
            // Smallest k* > k whose value lies at or above the target.
            let found_up = (k + 1..=n + 1).find(|&j| target <= next[j]);
            let kd = found_down.unwrap_or(0);
            let ku = found_up.unwrap_or(n + 1);

            let (p, was_clamped) = up_probability(target, next[kd], next[ku]);
            up[idx] = ku;
            down[idx] = kd;
            p_up[idx] = p;
            clamped[idx] = was_clamped || found_down.is_none() || found_up.is_none();
        }
    }

    Ok(VolTree {
        n_steps,
        h,
        values,
        up,
        down,
        p_up,
        clamped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::base_case;

    fn base_tree(n: usize) -> VolTree {
        build_tree(&base_case().params, n, 1.0).unwrap()
    }

    #[test]
    fn root_and_first_level() {
        let t = base_tree(100);
        assert_eq!(t.v(0, 0), 0.01);
        assert!((t.v(1, 1) - 0.0121).abs() < 1e-15);
        assert!((t.v(1, 0) - 0.0081).abs() < 1e-15);
        assert_eq!(t.node_count(), 101 * 102 / 2);
    }

    #[test]
    fn levels_nondecreasing_and_nonnegative() {
        let t = base_tree(125);
        for n in 0..=125 {
            let level = t.level(n);
            assert!(level.iter().all(|&v| v >= 0.0));
            assert!(level.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn targets_match_exhaustive_scan() {
        let p = base_case().params;
        for n_steps in [10, 50, 125] {
            let t = build_tree(&p, n_steps, 1.0).unwrap();
            for n in 0..n_steps {
                for k in 0..=n {
                    let v = t.v(n, k);
                    let target = v + p.kappa * (p.theta - v) * t.h();
                    let mut best_d = None;
                    let mut best_u = None;
                    for j in 0..=n + 1 {
                        let w = t.v(n + 1, j);
                        if j <= k && target >= w {
                            best_d = Some(best_d.map_or(j, |b: usize| b.max(j)));
                        }
                        if j > k && target <= w {
                            best_u = Some(best_u.map_or(j, |b: usize| b.min(j)));
                        }
                    }
                    let (kd, ku) = t.jump_targets(n, k).unwrap();
                    assert_eq!(kd, best_d.unwrap_or(0), "k_d at ({n},{k})");
                    assert_eq!(ku, best_u.unwrap_or(n + 1), "k_u at ({n},{k})");
                }
            }
        }
    }

    #[test]
    fn root_moment_match() {
        let p = base_case().params;
        let t = build_tree(&p, 125, 1.0).unwrap();
        let (kd, ku) = t.jump_targets(0, 0).unwrap();
        let pu = t.transition_prob(0, 0).unwrap();
        assert!(!t.is_clamped(0, 0).unwrap());
        let mean = pu * t.v(1, ku) + (1.0 - pu) * t.v(1, kd);
        let expected = p.v0 + p.kappa * (p.theta - p.v0) * t.h();
        assert!((mean - expected).abs() < 1e-15);
    }

    #[test]
    fn moment_match_at_every_unclamped_node() {
        let p = base_case().params;
        let t = build_tree(&p, 125, 1.0).unwrap();
        let mut unclamped = 0;
        for n in 0..125 {
            for k in 0..=n {
                let pu = t.transition_prob(n, k).unwrap();
                assert!((0.0..=1.0).contains(&pu));
                if t.is_clamped(n, k).unwrap() {
                    continue;
                }
                unclamped += 1;
                let (kd, ku) = t.jump_targets(n, k).unwrap();
                let v = t.v(n, k);
                let mean = pu * t.v(n + 1, ku) + (1.0 - pu) * t.v(n + 1, kd);
                let expected = v + p.kappa * (p.theta - v) * t.h();
                assert!((mean - expected).abs() <= 1e-12 * expected.abs().max(1.0));
                assert!(t.v(n + 1, kd) <= expected && expected <= t.v(n + 1, ku));
            }
        }
        assert!(unclamped > 0);
    }

    #[test]
    fn extreme_drift_clamps_up() {
        let mut p = base_case().params;
        p.kappa = 50.0;
        p.theta = 1.0;
        let t = build_tree(&p, 100, 1.0).unwrap();
        let target = p.v0 + p.kappa * (p.theta - p.v0) * t.h();
        assert!(target > t.v(1, 1));
        let (_, ku) = t.jump_targets(0, 0).unwrap();
        assert_eq!(ku, 1);
        assert_eq!(t.transition_prob(0, 0).unwrap(), 1.0);
        assert!(t.is_clamped(0, 0).unwrap());
    }

    #[test]
    fn exact_landing_probabilities() {
        // kappa theta h chosen so that the root lands exactly on v[1][1]:
        // v0 + kappa (theta - v0) h = (sqrt(v0) + sigma sqrt(h) / 2)^2
        let mut p = base_case().params;
        let h: f64 = 0.01;
        let v_up = (p.v0.sqrt() + 0.5 * p.sigma * h.sqrt()).powi(2);
        p.kappa = 1.0;
        p.theta = p.v0 + (v_up - p.v0) / (p.kappa * h);
        let t = build_tree(&p, 100, 1.0).unwrap();
        assert!((t.transition_prob(0, 0).unwrap() - 1.0).abs() < 1e-12);

        // Landing exactly on the down node.
        let v_dn = (p.v0.sqrt() - 0.5 * p.sigma * h.sqrt()).powi(2);
        p.kappa = 100.0;
        p.theta = p.v0 + (v_dn - p.v0) / (p.kappa * h);
        let t = build_tree(&p, 100, 1.0).unwrap();
        assert!(t.transition_prob(0, 0).unwrap().abs() < 1e-12);
    }

    #[test]
    fn degenerate_denominator_sets_p_up_one() {
        assert_eq!(up_probability(0.0, 0.0, 0.0), (1.0, true));
        assert_eq!(up_probability(-1e-9, 0.0, 0.0), (1.0, true));
        assert_eq!(up_probability(0.5, 0.0, 1.0), (0.5, false));
        assert_eq!(up_probability(2.0, 0.0, 1.0), (1.0, true));
        assert_eq!(up_probability(-1.0, 0.0, 1.0), (0.0, true));
    }

    #[test]
    fn children_distinct_under_heavy_flooring() {
        // Most nodes floor to zero, yet the chosen children never coincide.
        let mut p = base_case().params;
        p.sigma = 3.0;
        p.theta = 1e-6;
        p.kappa = 0.1;
        let t = build_tree(&p, 40, 1.0).unwrap();
        let mut floored = 0;
        for n in 0..40 {
            for k in 0..=n {
                let (kd, ku) = t.jump_targets(n, k).unwrap();
                assert!(t.v(n + 1, kd) < t.v(n + 1, ku), "({n},{k})");
                floored += usize::from(t.v(n + 1, kd) == 0.0);
            }
        }
        assert!(floored > 100);
    }

    #[test]
    fn out_of_range_rejected() {
        let t = base_tree(10);
        assert!(t.jump_targets(10, 0).is_err());
        assert!(t.jump_targets(3, 4).is_err());
        assert!(t.transition_prob(11, 0).is_err());
    }

    #[test]
    fn marginal_mean_converges_to_cir_mean() {
        // Use a tree whose mean is not trivially stationary (V0 != theta).
        let mut p = base_case().params;
        p.v0 = 0.04;
        let exact = p.theta + (p.v0 - p.theta) * (-p.kappa).exp();
        let mut errors = Vec::new();
        for n_steps in [25, 50, 100, 200] {
            let t = build_tree(&p, n_steps, 1.0).unwrap();
            let dist = t.marginal(n_steps);
            assert!((dist.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            let mean: f64 = dist.iter().zip(t.level(n_steps)).map(|(w, v)| w * v).sum();
            errors.push((mean - exact).abs());
        }
        for pair in errors.windows(2) {
            assert!(pair[1] < pair[0], "{errors:?}");
        }
        assert!(errors[3] < 2e-3 * exact.max(1.0));
    }

    #[test]
    fn csv_dump_has_one_row_per_inner_node() {
        let t = base_tree(5);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "n,k,v,k_down,k_up,p_up");
        assert_eq!(lines.count(), 15);
    }
}
