//! Monte-Carlo checks of the analytic accuracy bounds.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::data::{generate_synthetic, SynthConfig};
use crate::dense::{azuma_error_bound, even_widths, rate_distortion_bound, train_codebooks};
use crate::par::{self, Execution};
use crate::pipeline::{build_index, gap_recall_check, HybridIndexConfig};
use crate::sparse::chernoff_prune_bound;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    /// Rate-distortion floor for k-means on Gaussian data.
    Prop1,
    /// Azuma bound on the PQ inner-product error.
    Prop2,
    /// Chernoff bound on the pruning error.
    Prop3,
    /// Recall against the stage-1 gap probability.
    Prop4,
}

impl Suite {
    pub const ALL: [Suite; 4] = [Suite::Prop1, Suite::Prop2, Suite::Prop3, Suite::Prop4];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Prop1 => "prop1",
            Suite::Prop2 => "prop2",
            Suite::Prop3 => "prop3",
            Suite::Prop4 => "prop4",
        }
    }
}

impl std::str::FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::config(format!("unknown suite {s:?}; expected prop1..prop4")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyParams {
    /// Prop. 1: dimensions, subspaces, codewords, training points.
    pub kmeans_d: usize,
    pub kmeans_k: usize,
    pub kmeans_l: usize,
    pub kmeans_n: usize,
    /// Prop. 1: accepted MSE / bound ceiling.
    pub kmeans_ceiling: f64,
    /// Prop. 2: dense dimensions, subspaces, training points.
    pub pq_d: usize,
    pub pq_k: usize,
    pub pq_n: usize,
    /// Prop. 2: ε is solved so that the analytic bound equals this value.
    pub pq_target_bound: f64,
    /// Prop. 3: generative model.
    pub prune_d: usize,
    pub prune_p: f64,
    pub prune_m: f64,
    pub prune_eta: f64,
    pub prune_eps: f64,
    /// Prop. 4: synthetic index and query count.
    pub gap_n: usize,
    pub gap_queries: usize,
    pub gap_h: usize,
    pub gap_alpha: f64,
    pub gap_slack: f64,
}

impl Default for VerifyParams {
    fn default() -> Self {
        Self {
            kmeans_d: 32,
            kmeans_k: 16,
            kmeans_l: 16,
            kmeans_n: 50_000,
            kmeans_ceiling: 2.0,
            pq_d: 16,
            pq_k: 8,
            pq_n: 5_000,
            pq_target_bound: 0.5,
            prune_d: 10_000,
            prune_p: 0.01,
            prune_m: 1.0,
            prune_eta: 0.1,
            prune_eps: 0.5,
            gap_n: 20_000,
            gap_queries: 100,
            gap_h: 20,
            gap_alpha: 10.0,
            gap_slack: 0.02,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub suite: Suite,
    pub trials: usize,
    /// Empirical statistic: MSE for prop1, success fraction otherwise.
    pub empirical: f64,
    pub bound: f64,
    /// Two-sigma Monte-Carlo allowance.
    pub slack: f64,
    pub pass: bool,
    /// Distance to failure; positive when passing.
    pub margin: f64,
    pub detail: String,
}

impl fmt::Display for BoundReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: empirical={:.6} bound={:.6} slack={:.6} margin={:+.6} trials={} ({})",
            if self.pass { "PASS" } else { "FAIL" },
            self.suite.name(),
            self.empirical,
            self.bound,
            self.slack,
            self.margin,
            self.trials,
            self.detail
        )
    }
}

fn two_sigma(p: f64, trials: usize) -> f64 {
    2.0 * (p.clamp(0.0, 1.0) * (1.0 - p.clamp(0.0, 1.0)) / trials.max(1) as f64).sqrt()
}

fn gaussian(n: usize, rng: &mut ChaCha8Rng) -> Vec<f32> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

pub fn verify_bounds(suite: Suite, params: &VerifyParams, trials: usize, seed: u64, exec: Execution) -> Result<BoundReport> {
    match suite {
        Suite::Prop1 => prop1(params, seed, exec),
        Suite::Prop2 => prop2(params, trials, seed, exec),
        Suite::Prop3 => prop3(params, trials, seed, exec),
        Suite::Prop4 => prop4(params, seed, exec),
    }
}

fn prop1(p: &VerifyParams, seed: u64, exec: Execution) -> Result<BoundReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = gaussian(p.kmeans_n * p.kmeans_d, &mut rng);
    let widths = even_widths(p.kmeans_d, p.kmeans_k)?;
    let (_, report) = train_codebooks(&x, &widths, p.kmeans_l, 25, seed, exec)?;
    let n = p.kmeans_n as f64;
    let var = x.iter().map(|&v| (v as f64).powi(2)).sum::<f64>() / (n * p.kmeans_d as f64);
    let bits = p.kmeans_k as f64 * (p.kmeans_l as f64).log2();
    let mse = report.mse / p.kmeans_d as f64;
    let bound = rate_distortion_bound(var, bits, p.kmeans_d as f64);
    let ratio = mse / bound;
    let pass = mse >= bound && ratio <= p.kmeans_ceiling;
    Ok(BoundReport {
        suite: Suite::Prop1,
        trials: p.kmeans_n,
        empirical: mse,
        bound,
        slack: 0.0,
        pass,
        margin: (mse - bound).min(p.kmeans_ceiling * bound - mse),
        detail: format!("mse/bound={ratio:.4} ceiling={}", p.kmeans_ceiling),
    })
}

fn prop2(p: &VerifyParams, trials: usize, seed: u64, exec: Execution) -> Result<BoundReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = p.pq_d;
    let x = gaussian(p.pq_n * d, &mut rng);
    let widths = even_widths(d, p.pq_k)?;
    let (cb, _) = train_codebooks(&x, &widths, 16, 25, seed, exec)?;
    let recon: Vec<Vec<f32>> = par::map_range(p.pq_n, exec, |i| cb.decode(&cb.encode(&x[i * d..(i + 1) * d]).unwrap()));
    let mut max_res = 0f64;
    for (i, r) in recon.iter().enumerate() {
        for k in 0..cb.n_subspaces() {
            let s: f64 = cb.span(k).map(|t| (x[i * d + t] as f64 - r[t] as f64).powi(2)).sum();
            max_res = max_res.max(s.sqrt());
        }
    }
    let queries: Vec<Vec<f32>> = (0..trials).map(|_| gaussian(d, &mut rng)).collect();
    let points: Vec<usize> = (0..trials).map(|_| rng.random_range(0..p.pq_n)).collect();
    let mut max_q = 0f64;
    for q in &queries {
        for k in 0..cb.n_subspaces() {
            let s: f64 = cb.span(k).map(|t| (q[t] as f64).powi(2)).sum();
            max_q = max_q.max(s.sqrt());
        }
    }
    let denom = 2.0 * cb.n_subspaces() as f64 * max_q.powi(2) * max_res.powi(2);
    let eps = (-((1.0 - p.pq_target_bound) / 2.0).ln() * denom).sqrt();
    let bound = azuma_error_bound(cb.n_subspaces(), max_q, max_res, eps);
    let ok = (0..trials)
        .filter(|&t| {
            let (q, i) = (&queries[t], points[t]);
            let err: f64 = (0..d).map(|j| q[j] as f64 * (x[i * d + j] as f64 - recon[i][j] as f64)).sum();
            err.abs() < eps
        })
        .count();
    report_fraction(Suite::Prop2, ok, trials, bound, format!("eps={eps:.4}"))
}

fn report_fraction(suite: Suite, ok: usize, trials: usize, bound: f64, detail: String) -> Result<BoundReport> {
    if trials == 0 {
        return Err(Error::config("need at least one trial"));
    }
    let frac = ok as f64 / trials as f64;
    let slack = two_sigma(bound, trials);
    Ok(BoundReport {
        suite,
        trials,
        empirical: frac,
        bound,
        slack,
        pass: frac >= bound - slack,
        margin: frac - (bound - slack),
        detail,
    })
}

/// Both vectors: each dim nonzero with probability `p`, value uniform on
/// `[-M, M]`. Data entries below `eta` in magnitude are pruned.
fn prop3(p: &VerifyParams, trials: usize, seed: u64, exec: Execution) -> Result<BoundReport> {
    let bound = chernoff_prune_bound(p.prune_eps, p.prune_m, p.prune_eta, p.prune_d as f64, p.prune_p);
    let chunk = 1000;
    let chunks = trials.div_ceil(chunk);
    let counts = par::map_range(chunks, exec, |c| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(c as u64);
        let geo = |rng: &mut ChaCha8Rng| -> Vec<(usize, f64)> {
            let mut v = Vec::new();
            let mut j = 0usize;
            let lp = (1.0 - p.prune_p).ln();
            loop {
                let u: f64 = 1.0 - rng.random::<f64>();
                let skip = if p.prune_p >= 1.0 { 0 } else { (u.ln() / lp).floor() as usize };
                j += skip;
                if j >= p.prune_d {
                    break;
                }
                v.push((j, rng.random_range(-p.prune_m..=p.prune_m)));
                j += 1;
            }
            v
        };
        let n = chunk.min(trials - c * chunk);
        let mut ok = 0;
        for _ in 0..n {
            let q = geo(&mut rng);
            let x = geo(&mut rng);
            let mut err = 0.0;
            let (mut a, mut b) = (0, 0);
            while a < q.len() && b < x.len() {
                match q[a].0.cmp(&x[b].0) {
                    std::cmp::Ordering::Less => a += 1,
                    std::cmp::Ordering::Greater => b += 1,
                    std::cmp::Ordering::Equal => {
                        if x[b].1.abs() < p.prune_eta {
                            err += q[a].1 * x[b].1;
                        }
                        a += 1;
                        b += 1;
                    }
                }
            }
            if f64::abs(err) < p.prune_eps {
                ok += 1;
            }
        }
        ok
    });
    let ok = counts.iter().sum();
    let n_eps = p.prune_eps / (p.prune_m * p.prune_eta);
    report_fraction(
        Suite::Prop3,
        ok,
        trials,
        bound,
        format!("n_eps={n_eps:.3} dp^2={:.4}", p.prune_d as f64 * p.prune_p * p.prune_p),
    )
}

fn prop4(p: &VerifyParams, seed: u64, exec: Execution) -> Result<BoundReport> {
    let cfg = SynthConfig {
        n: p.gap_n,
        n_queries: p.gap_queries,
        d_sparse: 5_000,
        d_dense: 32,
        seed,
        ..Default::default()
    };
    let syn = generate_synthetic(&cfg)?;
    let idx = build_index(&syn.data, &HybridIndexConfig::default(), exec)?;
    let reports = par::map_range(syn.queries.len(), exec, |i| {
        gap_recall_check(&idx, &syn.data, syn.queries.point(i), p.gap_h, p.gap_alpha)
    });
    let mut held = 0;
    let mut informative = 0;
    let mut worst = f64::INFINITY;
    for r in reports {
        let r = r?;
        if !r.degenerate {
            informative += 1;
            worst = worst.min(r.recall - r.small_error_fraction);
        }
        held += r.holds(p.gap_slack) as usize;
    }
    let n = syn.queries.len();
    let frac = held as f64 / n as f64;
    Ok(BoundReport {
        suite: Suite::Prop4,
        trials: n,
        empirical: frac,
        bound: 1.0,
        slack: 0.0,
        pass: held == n,
        margin: worst + p.gap_slack,
        detail: format!("informative queries={informative} min(recall-fraction)={worst:.4} slack={}", p.gap_slack),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert!("prop9".parse::<Suite>().is_err());
    }

    #[test]
    fn prop3_bound_value() {
        let p = VerifyParams::default();
        let b = chernoff_prune_bound(p.prune_eps, p.prune_m, p.prune_eta, p.prune_d as f64, p.prune_p);
        assert!((b - (1.0 - 2.0 * (-16.0f64 / 6.0).exp())).abs() < 1e-12);
    }

    #[test]
    fn small_runs_pass() {
        let p = VerifyParams {
            kmeans_n: 5_000,
            pq_n: 1_000,
            gap_n: 3_000,
            gap_queries: 10,
            ..Default::default()
        };
        for s in Suite::ALL {
            let r = verify_bounds(s, &p, 2_000, 1, Execution::Parallel).unwrap();
            assert!(r.pass, "{r}");
        }
    }
}
