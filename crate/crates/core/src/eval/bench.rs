//! Recall and latency comparison of search methods.

use std::fmt::Write as _;
use std::time::Instant;

use super::baselines::{Built, Method};
use super::oracle::{brute_force_batch, recall_at_h};
use crate::data::HybridDataset;
use crate::par::Execution;
use crate::{Error, Result};

pub const CSV_HEADER: &str = "method,dataset,N,dS,dD,h,recall,mean_ms,median_ms,index_bytes,build_s";

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub method: String,
    pub dataset: String,
    pub n: usize,
    pub d_sparse: usize,
    pub d_dense: usize,
    pub h: usize,
    /// `None` when the method was skipped.
    pub recall: Option<f64>,
    pub mean_ms: f64,
    pub median_ms: f64,
    pub index_bytes: usize,
    pub build_s: f64,
    pub skipped: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct BenchOptions {
    pub h: usize,
    /// Timed repetitions per query; the median is kept.
    pub repetitions: usize,
    pub dataset_name: String,
    /// Used for ground truth and index builds. Timed searches always run
    /// one query at a time on the calling thread.
    pub exec: Execution,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self {
            h: 20,
            repetitions: 3,
            dataset_name: "synthetic".into(),
            exec: Execution::Parallel,
        }
    }
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    }
}

pub fn run_benchmark(
    data: &HybridDataset,
    queries: &HybridDataset,
    methods: &[Method],
    opts: &BenchOptions,
) -> Result<BenchReport> {
    if opts.h == 0 || opts.repetitions == 0 {
        return Err(Error::config("h and repetitions must be positive"));
    }
    if queries.is_empty() {
        return Err(Error::InsufficientData("no queries".into()));
    }
    let truth = brute_force_batch(data, queries, opts.h, opts.exec)?;
    let mut rows = Vec::with_capacity(methods.len());
    for m in methods {
        let mut row = BenchRow {
            method: m.name(),
            dataset: opts.dataset_name.clone(),
            n: data.len(),
            d_sparse: data.d_sparse(),
            d_dense: data.d_dense(),
            h: opts.h,
            recall: None,
            mean_ms: 0.0,
            median_ms: 0.0,
            index_bytes: 0,
            build_s: 0.0,
            skipped: None,
        };
        let t = Instant::now();
        let built = m.build(data, opts.exec)?;
        row.build_s = t.elapsed().as_secs_f64();
        let searcher = match built {
            Built::Ready(s) => s,
            Built::Skipped(why) => {
                row.skipped = Some(why);
                rows.push(row);
                continue;
            }
        };
        row.index_bytes = searcher.index_bytes();
        let mut per_query = Vec::with_capacity(queries.len());
        let mut recall = 0.0;
        for (qi, truth) in truth.iter().enumerate() {
            let q = queries.point(qi);
            let mut times = Vec::with_capacity(opts.repetitions);
            let mut ids = Vec::new();
            for _ in 0..opts.repetitions {
                let t = Instant::now();
                ids = searcher.search(q, opts.h)?;
                times.push(t.elapsed().as_secs_f64() * 1e3);
            }
            per_query.push(median(&mut times));
            recall += recall_at_h(&ids, truth, opts.h);
        }
        row.recall = Some(recall / queries.len() as f64);
        row.mean_ms = per_query.iter().sum::<f64>() / per_query.len() as f64;
        row.median_ms = median(&mut per_query);
        rows.push(row);
    }
    Ok(BenchReport {
        rows,
        notes: vec![
            format!("queries={} repetitions={}", queries.len(), opts.repetitions),
            format!("threads={}", available_threads(opts.exec)),
        ],
    })
}

fn available_threads(exec: Execution) -> usize {
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return rayon::current_num_threads();
    }
    let _ = exec;
    1
}

impl BenchReport {
    pub fn row(&self, method: &str) -> Option<&BenchRow> {
        self.rows.iter().find(|r| r.method == method)
    }

    /// With `timing` false the time columns are left empty, so output
    /// depends only on inputs and seeds.
    pub fn to_csv(&self, timing: bool) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let recall = match (&r.skipped, r.recall) {
                (Some(_), _) => "OOM".to_string(),
                (None, Some(v)) => format!("{v:.4}"),
                (None, None) => String::new(),
            };
            let t = |v: f64, digits: usize| {
                if timing && r.skipped.is_none() {
                    format!("{v:.digits$}")
                } else {
                    String::new()
                }
            };
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{}",
                r.method,
                r.dataset,
                r.n,
                r.d_sparse,
                r.d_dense,
                r.h,
                recall,
                t(r.mean_ms, 4),
                t(r.median_ms, 4),
                r.index_bytes,
                t(r.build_s, 3)
            );
        }
        out
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<30} {:>9} {:>11} {:>11} {:>14} {:>9}",
            "method", "recall@h", "mean ms", "median ms", "index bytes", "build s"
        );
        for r in &self.rows {
            if let Some(why) = &r.skipped {
                let _ = writeln!(out, "{:<30} {:>9} ({why})", r.method, "OOM");
                continue;
            }
            let _ = writeln!(
                out,
                "{:<30} {:>8.1}% {:>11.3} {:>11.3} {:>14} {:>9.2}",
                r.method,
                r.recall.unwrap_or(0.0) * 100.0,
                r.mean_ms,
                r.median_ms,
                r.index_bytes,
                r.build_s
            );
        }
        for n in &self.notes {
            let _ = writeln!(out, "# {n}");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_synthetic, SynthConfig};
    use crate::pipeline::HybridIndexConfig;

    #[test]
    fn report_shape_and_determinism() {
        let syn = generate_synthetic(&SynthConfig {
            n: 2000,
            n_queries: 5,
            d_sparse: 500,
            d_dense: 8,
            seed: 1,
            ..Default::default()
        })
        .unwrap();
        let methods = vec![
            Method::DenseBruteForce { memory_limit: 1 },
            Method::SparseInverted,
            Method::SparseInvertedPruned { top_t: 16, reorder: 0 },
            Method::Hybrid(HybridIndexConfig::default()),
        ];
        let opts = BenchOptions {
            h: 10,
            ..Default::default()
        };
        let a = run_benchmark(&syn.data, &syn.queries, &methods, &opts).unwrap();
        let b = run_benchmark(&syn.data, &syn.queries, &methods, &opts).unwrap();
        assert_eq!(a.to_csv(false), b.to_csv(false));
        let csv = a.to_csv(true);
        assert!(csv.starts_with(CSV_HEADER));
        assert_eq!(csv.lines().count(), 5);
        assert!(csv.lines().nth(1).unwrap().contains(",OOM,"));
        assert_eq!(a.row("sparse-inverted").unwrap().recall, Some(1.0));
        let hybrid = a.row("hybrid").unwrap().recall.unwrap();
        let pruned = a.row("sparse-inverted-no-reorder").unwrap().recall.unwrap();
        assert!(hybrid >= pruned, "{hybrid} < {pruned}");
        assert!(a.to_table().contains("hybrid"));
    }
}
