use hybrid_mips::data::{generate_synthetic, HybridDataset, SparseMatrix, SparseVector, SynthConfig};
use hybrid_mips::eval::{brute_force_topk, recall_at_h};
use hybrid_mips::pipeline::{build_index, HybridIndex, HybridIndexConfig, PruneSpec};
use hybrid_mips::{hybrid_dot, Execution};

fn small(seed: u64, n: usize, d_dense: usize) -> (HybridDataset, HybridDataset) {
    let syn = generate_synthetic(&SynthConfig {
        n,
        n_queries: 20,
        d_sparse: 2_000,
        d_dense,
        nnz_scale: 0.3,
        seed,
        ..Default::default()
    })
    .unwrap();
    (syn.data, syn.queries)
}

fn exact_cfg(n: usize, h: usize) -> HybridIndexConfig {
    let f = n as f64 / h as f64;
    HybridIndexConfig {
        alpha: f,
        beta: f,
        exact_final_rerank: true,
        ..Default::default()
    }
}

#[test]
fn full_overfetch_with_exact_rerank_matches_brute_force() {
    let (data, queries) = small(3, 2_000, 16);
    let idx = build_index(&data, &exact_cfg(data.len(), 10), Execution::Parallel).unwrap();
    for q in queries.points() {
        let got = idx.search(q, 10).unwrap();
        let (truth, scores) = brute_force_topk(&data, q, 10).unwrap();
        assert_eq!(got.ids, truth);
        for (a, b) in got.scores.iter().zip(&scores) {
            assert_eq!(a, b);
        }
    }
}

#[test]
fn h_equal_to_n_returns_everything() {
    let (data, queries) = small(4, 300, 8);
    let idx = build_index(&data, &exact_cfg(300, 300), Execution::Sequential).unwrap();
    let got = idx.search(queries.point(0), 300).unwrap();
    let mut ids = got.ids.clone();
    ids.sort_unstable();
    assert_eq!(ids, (0..300).collect::<Vec<u32>>());
    let (truth, _) = brute_force_topk(&data, queries.point(0), 300).unwrap();
    assert_eq!(got.ids, truth);
}

#[test]
fn final_score_is_sum_of_stage_contributions() {
    let (data, queries) = small(5, 1_000, 16);
    let cfg = HybridIndexConfig {
        prune: PruneSpec::TopT { top_t: 20, epsilon: 0.0 },
        alpha: 1.0,
        beta: 1.0,
        ..Default::default()
    };
    let idx = build_index(&data, &cfg, Execution::Parallel).unwrap();
    assert!(idx.build_stats().residual_nnz > 0);
    let perm = idx.sparse_index().permutation();
    let dense = idx.dense_index().unwrap();
    let q = queries.point(1);
    let s1 = idx.stage1_scores(q).unwrap();
    let dq = dense.prepare(q.dense).unwrap();
    let got = idx.search(q, data.len()).unwrap();
    assert_eq!(got.ids.len(), data.len());
    for (&id, &score) in got.ids.iter().zip(&got.scores) {
        let p = perm.to_position(id as usize) as usize;
        let expect = s1[p] as f64 + dense.residual_dot(&dq, p) + q.sparse.dot(&idx.sparse_residual().row(p));
        assert!((score - expect).abs() < 1e-9, "id {id}: {score} vs {expect}");
    }
}

#[test]
fn keep_all_with_residuals_tracks_exact_scores() {
    let (data, queries) = small(6, 1_500, 16);
    let cfg = HybridIndexConfig {
        prune: PruneSpec::KeepAll,
        ..Default::default()
    };
    let idx = build_index(&data, &cfg, Execution::Parallel).unwrap();
    for q in queries.points() {
        let got = idx.search(q, 10).unwrap();
        for (&id, &s) in got.ids.iter().zip(&got.scores) {
            let exact = hybrid_dot(q, data.point(id as usize)).unwrap();
            assert!((s - exact).abs() < 0.05 * (1.0 + exact.abs()), "{s} vs {exact}");
        }
    }
}

#[test]
fn recall_is_monotone_in_alpha() {
    let (data, queries) = small(7, 3_000, 32);
    let cfg = HybridIndexConfig {
        prune: PruneSpec::TopT { top_t: 32, epsilon: 0.0 },
        ..Default::default()
    };
    let mut idx = build_index(&data, &cfg, Execution::Parallel).unwrap();
    let truth: Vec<Vec<u32>> = queries.points().map(|q| brute_force_topk(&data, q, 10).unwrap().0).collect();
    let mut prev = 0.0;
    for alpha in [1.0, 2.0, 5.0, 20.0, 300.0] {
        idx.set_fetch_factors(alpha, 1.0).unwrap();
        let r: f64 = queries
            .points()
            .zip(&truth)
            .map(|(q, t)| recall_at_h(&idx.search(q, 10).unwrap().ids, t, 10))
            .sum::<f64>()
            / queries.len() as f64;
        assert!(r + 1e-12 >= prev, "alpha {alpha}: {r} < {prev}");
        prev = r;
    }
}

#[test]
fn stage_candidate_counts() {
    let (data, queries) = small(8, 1_000, 16);
    let idx = build_index(&data, &HybridIndexConfig::default(), Execution::Sequential).unwrap();
    let r = idx.search(queries.point(0), 20).unwrap();
    assert_eq!(r.stats.candidates, [200, 60, 20]);
    assert_eq!(r.ids.len(), 20);
    assert!(r.scores.windows(2).all(|w| w[0] >= w[1]));
}

#[test]
fn serialization_round_trip() {
    let (data, queries) = small(9, 800, 16);
    for exact in [false, true] {
        let cfg = HybridIndexConfig {
            exact_final_rerank: exact,
            ..Default::default()
        };
        let idx = build_index(&data, &cfg, Execution::Parallel).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("index.hybi");
        idx.save(&path).unwrap();
        let back = HybridIndex::load(&path).unwrap();
        assert!(idx.same_contents(&back));
        for q in queries.points() {
            let a = idx.search(q, 20).unwrap();
            let b = back.search(q, 20).unwrap();
            assert_eq!(a.ids, b.ids);
            assert_eq!(a.scores, b.scores);
        }
    }
}

#[test]
fn truncated_file_is_rejected() {
    let (data, _) = small(10, 200, 8);
    let idx = build_index(&data, &HybridIndexConfig::default(), Execution::Sequential).unwrap();
    let mut buf = Vec::new();
    idx.write_to(&mut buf).unwrap();
    for cut in [0, 3, buf.len() / 2, buf.len() - 1] {
        assert!(HybridIndex::read_from(&buf[..cut]).is_err());
    }
    let mut bad = buf.clone();
    bad[0] ^= 0xff;
    assert!(HybridIndex::read_from(&bad[..]).is_err());
}

#[test]
fn sparse_only_data() {
    let (data, queries) = small(11, 500, 0);
    let idx = build_index(&data, &exact_cfg(500, 10), Execution::Sequential).unwrap();
    assert!(idx.dense_index().is_none());
    for q in queries.points() {
        assert_eq!(idx.search(q, 10).unwrap().ids, brute_force_topk(&data, q, 10).unwrap().0);
    }
}

#[test]
fn dense_only_data() {
    let syn = generate_synthetic(&SynthConfig {
        n: 600,
        n_queries: 5,
        d_sparse: 50,
        d_dense: 16,
        nnz_scale: 0.0,
        seed: 12,
        ..Default::default()
    })
    .unwrap();
    assert_eq!(syn.data.sparse_matrix().nnz(), 0);
    let idx = build_index(&syn.data, &exact_cfg(600, 5), Execution::Sequential).unwrap();
    for q in syn.queries.points() {
        assert_eq!(idx.search(q, 5).unwrap().ids, brute_force_topk(&syn.data, q, 5).unwrap().0);
    }
}

#[test]
fn ties_break_toward_lower_id() {
    let mut sparse = SparseMatrix::new(4);
    let row = SparseVector::from_sorted(vec![1], vec![1.0]).unwrap();
    for _ in 0..50 {
        sparse.push_row(&row).unwrap();
    }
    let data = HybridDataset::from_parts(sparse, 0, Vec::new()).unwrap();
    let idx = build_index(&data, &HybridIndexConfig::default(), Execution::Sequential).unwrap();
    let q = data.point(0);
    assert_eq!(idx.search(q, 5).unwrap().ids, vec![0, 1, 2, 3, 4]);
}

#[test]
fn query_schema_is_checked() {
    let (data, _) = small(13, 200, 8);
    let idx = build_index(&data, &HybridIndexConfig::default(), Execution::Sequential).unwrap();
    let bad_dense = hybrid_mips::HybridVector::new(SparseVector::empty(), vec![0.0; 3]);
    assert!(idx.search(bad_dense.as_ref(), 5).is_err());
    let bad_dim = hybrid_mips::HybridVector::new(SparseVector::from_sorted(vec![5_000], vec![1.0]).unwrap(), vec![0.0; 8]);
    assert!(idx.search(bad_dim.as_ref(), 5).is_err());
    assert!(idx.search(data.point(0), 0).is_err());
}

#[test]
fn batch_matches_single_and_is_execution_independent() {
    let (data, queries) = small(14, 1_000, 16);
    let seq = build_index(&data, &HybridIndexConfig::default(), Execution::Sequential).unwrap();
    let par = build_index(&data, &HybridIndexConfig::default(), Execution::Parallel).unwrap();
    assert!(seq.same_contents(&par));
    let a = seq.search_batch(&queries, 10, Execution::Sequential).unwrap();
    let b = par.search_batch(&queries, 10, Execution::Parallel).unwrap();
    for (i, (x, y)) in a.iter().zip(&b).enumerate() {
        assert_eq!(x.ids, y.ids);
        assert_eq!(x.scores, y.scores);
        assert_eq!(x.ids, seq.search(queries.point(i), 10).unwrap().ids);
    }
}
