use std::fs::File;
use std::io::{BufReader, Write};

use anyhow::{bail, Context, Result};
use hybrid_mips::data::{load_dataset, save_dataset, HybridDataset};
use hybrid_mips::eval::{
    read_ratings, run_benchmark, svd_embed, verify_bounds, BenchOptions, Method, Suite, SvdOptions, VerifyParams,
};
use hybrid_mips::pipeline::{build_index, HybridIndex};
use hybrid_mips::sparse::{
    build_inverted, cache_sort, dim_line_counts, expected_cachelines_sorted_bound, expected_cachelines_unsorted,
    measure_cachelines, CostModelParams, Permutation,
};
use hybrid_mips::{generate_synthetic, Execution};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::args::*;
use crate::exit::{CliError, ExitKind};
use crate::output::render;

const EXEC: Execution = Execution::Parallel;

fn config_err(e: hybrid_mips::Error) -> anyhow::Error {
    anyhow::Error::new(e)
}

fn load(path: &std::path::Path) -> Result<HybridDataset> {
    load_dataset(path).with_context(|| format!("reading dataset {}", path.display()))
}

pub fn gen(a: &GenArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = a.synth.to_config();
    cfg.validate().map_err(config_err)?;
    let syn = generate_synthetic(&cfg)?;
    save_dataset(&a.out, &syn.data).with_context(|| format!("writing {}", a.out.display()))?;
    if let Some(q) = &a.queries_out {
        save_dataset(q, &syn.queries).with_context(|| format!("writing {}", q.display()))?;
    }
    writeln!(
        out,
        "wrote {} points (nnz {}) to {}",
        syn.data.len(),
        syn.data.sparse_matrix().nnz(),
        a.out.display()
    )?;
    Ok(())
}

pub fn prep_ratings(a: &PrepArgs, out: &mut dyn Write) -> Result<()> {
    if a.n_queries > 0 && a.queries_out.is_none() {
        return Err(CliError::new(ExitKind::Config, "--n-queries needs --queries-out").into());
    }
    let file = File::open(&a.input).with_context(|| format!("opening {}", a.input.display()))?;
    let ratings = read_ratings(BufReader::new(file)).with_context(|| format!("parsing {}", a.input.display()))?;
    let opts = SvdOptions {
        power_iters: a.power_iters,
        seed: a.seed,
        ..SvdOptions::default()
    };
    let emb = svd_embed(&ratings, a.rank, a.lambda, &opts)?;
    let n = emb.dataset.len();
    if a.n_queries > n {
        return Err(CliError::new(ExitKind::Config, format!("--n-queries {} exceeds {n} users", a.n_queries)).into());
    }
    let mut held: Vec<usize> = sample(&mut ChaCha8Rng::seed_from_u64(a.seed), n, a.n_queries).into_vec();
    held.sort_unstable();
    let (queries, data) = emb.dataset.split(&held);
    save_dataset(&a.out, &data).with_context(|| format!("writing {}", a.out.display()))?;
    if let Some(q) = &a.queries_out {
        save_dataset(q, &queries).with_context(|| format!("writing {}", q.display()))?;
    }
    writeln!(
        out,
        "users {} items {} ratings {}; rank {} lambda {:.6}; {} data rows, {} query rows",
        ratings.n_users(),
        ratings.n_items(),
        ratings.nnz(),
        a.rank,
        emb.lambda,
        data.len(),
        queries.len()
    )?;
    Ok(())
}

pub fn build(a: &BuildArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = a.index.to_config();
    cfg.validate().map_err(config_err)?;
    let data = load(&a.data)?;
    let idx = build_index(&data, &cfg, EXEC)?;
    idx.save(&a.out).with_context(|| format!("writing {}", a.out.display()))?;
    let s = idx.build_stats();
    writeln!(
        out,
        "indexed {} points in {:.2}s: {} sparse postings, {} residual, {} discarded; {} bytes",
        idx.len(),
        s.build_time.as_secs_f64(),
        s.data_nnz,
        s.residual_nnz,
        s.discarded_nnz,
        idx.heap_bytes()
    )?;
    Ok(())
}

pub fn search(a: &SearchArgs, format: OutputFormat, out: &mut dyn Write) -> Result<()> {
    if a.h == 0 {
        return Err(CliError::new(ExitKind::Config, "--h must be at least 1").into());
    }
    let mut idx = HybridIndex::load(&a.index).with_context(|| format!("reading index {}", a.index.display()))?;
    if a.alpha.is_some() || a.beta.is_some() {
        let alpha = a.alpha.unwrap_or(idx.config().alpha);
        let beta = a.beta.unwrap_or(idx.config().beta);
        idx.set_fetch_factors(alpha, beta)?;
    }
    let queries = load(&a.queries)?;
    let rows: Vec<usize> = match a.query {
        Some(i) if i >= queries.len() => {
            return Err(CliError::new(
                ExitKind::Config,
                format!("--query {i} out of range ({} queries)", queries.len()),
            )
            .into())
        }
        Some(i) => vec![i],
        None => (0..queries.len()).collect(),
    };
    let single = rows.len() == 1;
    let sub = queries.select(&rows);
    let results = idx.search_batch(&sub, a.h, EXEC)?;
    let mut table = Vec::new();
    for (r, res) in rows.iter().zip(&results) {
        for (id, s) in res.ids.iter().zip(&res.scores) {
            let mut line = if single { vec![] } else { vec![r.to_string()] };
            line.push(id.to_string());
            line.push(format!("{s:.6}"));
            table.push(line);
        }
    }
    let header: &[&str] = if single { &["id", "score"] } else { &["query", "id", "score"] };
    match format {
        OutputFormat::Csv => {
            for line in table {
                writeln!(out, "{}", line.join(","))?;
            }
        }
        OutputFormat::Table => out.write_all(render(format, header, &table).as_bytes())?,
    }
    Ok(())
}

pub fn bench(a: &BenchArgs, format: OutputFormat, out: &mut dyn Write) -> Result<()> {
    let cfg = a.index.to_config();
    cfg.validate().map_err(config_err)?;
    let roster = Method::roster(cfg);
    let methods: Vec<Method> = if a.methods.is_empty() {
        roster
    } else {
        let mut picked = Vec::new();
        for name in &a.methods {
            match roster.iter().find(|m| &m.name() == name) {
                Some(m) => picked.push(m.clone()),
                None => {
                    let known: Vec<String> = roster.iter().map(Method::name).collect();
                    return Err(CliError::new(
                        ExitKind::Config,
                        format!("unknown method {name:?}; known: {}", known.join(", ")),
                    )
                    .into());
                }
            }
        }
        picked
    };
    let data = load(&a.data)?;
    let queries = load(&a.queries)?;
    let opts = BenchOptions {
        h: a.h,
        repetitions: a.repetitions,
        dataset_name: a.dataset_name.clone(),
        exec: EXEC,
    };
    let report = run_benchmark(&data, &queries, &methods, &opts)?;
    match format {
        OutputFormat::Csv => out.write_all(report.to_csv(!a.no_timing).as_bytes())?,
        OutputFormat::Table => out.write_all(report.to_table().as_bytes())?,
    }
    Ok(())
}

/// Returns whether every suite passed.
pub fn verify(a: &VerifyArgs, format: OutputFormat, out: &mut dyn Write) -> Result<bool> {
    if a.trials == 0 {
        return Err(CliError::new(ExitKind::Config, "--trials must be positive").into());
    }
    let suites: Vec<Suite> = match a.suite {
        SuiteArg::Prop1 => vec![Suite::Prop1],
        SuiteArg::Prop2 => vec![Suite::Prop2],
        SuiteArg::Prop3 => vec![Suite::Prop3],
        SuiteArg::Prop4 => vec![Suite::Prop4],
        SuiteArg::All => Suite::ALL.to_vec(),
    };
    let params = VerifyParams {
        gap_queries: a.gap_queries,
        kmeans_n: a.kmeans_n,
        ..VerifyParams::default()
    };
    let mut rows = Vec::new();
    let mut all = true;
    for s in suites {
        let r = verify_bounds(s, &params, a.trials, a.seed, EXEC)?;
        all &= r.pass;
        rows.push(vec![
            r.suite.name().to_string(),
            if r.pass { "PASS" } else { "FAIL" }.to_string(),
            format!("{:.6}", r.empirical),
            format!("{:.6}", r.bound),
            format!("{:.6}", r.slack),
            format!("{:+.6}", r.margin),
            r.trials.to_string(),
            r.detail.clone(),
        ]);
    }
    if format == OutputFormat::Csv {
        for r in &mut rows {
            r[7] = format!("\"{}\"", r[7].replace('"', "\"\""));
        }
    }
    let header = ["suite", "result", "empirical", "bound", "slack", "margin", "trials", "detail"];
    out.write_all(render(format, &header, &rows).as_bytes())?;
    Ok(all)
}

pub fn cost(a: &CostArgs, format: OutputFormat, out: &mut dyn Write) -> Result<()> {
    let cfg = a.synth.to_config();
    cfg.validate().map_err(config_err)?;
    let params = CostModelParams::from_synth(&cfg, a.line_capacity)?;
    let dims = a.dims.min(cfg.d_sparse);
    let mut header = vec!["dim", "p", "q", "expected_unsorted", "sorted_bound"];
    let mut measured = None;
    if a.measure {
        if cfg.n == 0 {
            bail!(CliError::new(ExitKind::Config, "--measure needs --n > 0"));
        }
        header.extend(["measured_unsorted", "measured_sorted"]);
        let syn = generate_synthetic(&cfg)?;
        let x = syn.data.sparse_matrix();
        let plain = build_inverted(x, &Permutation::identity(x.n_rows()))?;
        let sorted = build_inverted(x, &cache_sort(x, EXEC))?;
        let q = syn.queries.sparse_matrix();
        measured = Some((
            dim_line_counts(&plain, a.line_capacity)?,
            dim_line_counts(&sorted, a.line_capacity)?,
            measure_cachelines(&plain, q, a.line_capacity, EXEC)?,
            measure_cachelines(&sorted, q, a.line_capacity, EXEC)?,
        ));
    }
    let mut rows = Vec::with_capacity(dims + 1);
    for j in 0..dims {
        let mut r = vec![
            j.to_string(),
            format!("{:.6e}", params.p()[j]),
            format!("{:.6e}", params.q()[j]),
            format!("{:.4}", params.unsorted_term(j)),
            format!("{:.4}", params.sorted_term(j)),
        ];
        if let Some((u, s, _, _)) = &measured {
            r.push(u[j].to_string());
            r.push(s[j].to_string());
        }
        rows.push(r);
    }
    let mut total = vec![
        "total".to_string(),
        String::new(),
        String::new(),
        format!("{:.4}", expected_cachelines_unsorted(&params)),
        format!("{:.4}", expected_cachelines_sorted_bound(&params)),
    ];
    if let Some((_, _, mu, ms)) = &measured {
        total.push(format!("{mu:.4}"));
        total.push(format!("{ms:.4}"));
    }
    rows.push(total);
    out.write_all(render(format, &header, &rows).as_bytes())?;
    Ok(())
}
