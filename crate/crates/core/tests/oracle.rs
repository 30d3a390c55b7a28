use hybrid_mips::data::{HybridDataset, HybridVector, SparseMatrix, SparseVector};
use hybrid_mips::eval::{brute_force_topk, recall_at_h};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;

type Point = (Vec<(u32, f32)>, Vec<f32>);

/// Scores through a hash map of the sparse query; no shared code with the library scorer.
fn naive_topk(points: &[Point], q: &Point, h: usize) -> Vec<u32> {
    let qmap: HashMap<u32, f64> = q.0.iter().map(|&(j, v)| (j, v as f64)).collect();
    let mut scored: Vec<(f64, u32)> = points
        .iter()
        .enumerate()
        .map(|(i, (s, d))| {
            let mut t = 0.0;
            for (j, v) in s {
                if let Some(w) = qmap.get(j) {
                    t += w * *v as f64;
                }
            }
            for (a, b) in d.iter().zip(&q.1) {
                t += *a as f64 * *b as f64;
            }
            (t, i as u32)
        })
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    scored.into_iter().take(h).map(|(_, i)| i).collect()
}

fn random_point(rng: &mut ChaCha8Rng, ds: usize, dd: usize, nnz: usize, coarse: bool) -> Point {
    let mut dims: Vec<u32> = (0..nnz).map(|_| rng.random_range(0..ds as u32)).collect();
    dims.sort_unstable();
    dims.dedup();
    let val = |rng: &mut ChaCha8Rng| {
        if coarse {
            rng.random_range(-2i32..=2) as f32
        } else {
            rng.random_range(-1.0f32..1.0)
        }
    };
    let s = dims.into_iter().map(|j| (j, val(rng))).filter(|p| p.1 != 0.0).collect();
    let d = (0..dd).map(|_| val(rng)).collect();
    (s, d)
}

fn to_vector(p: &Point) -> HybridVector {
    let (dims, vals) = p.0.iter().copied().unzip();
    HybridVector::new(SparseVector::from_sorted(dims, vals).unwrap(), p.1.clone())
}

#[test]
fn brute_force_agrees_with_naive_scorer_on_1k_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for inst in 0..1_000 {
        let n = rng.random_range(1..60);
        let ds = rng.random_range(1..40);
        let dd = rng.random_range(0..6);
        let h = rng.random_range(1..=n);
        // Small integer values force exact ties on some instances.
        let coarse = inst % 3 == 0;
        let points: Vec<_> = (0..n).map(|_| random_point(&mut rng, ds, dd, 6, coarse)).collect();
        let q = random_point(&mut rng, ds, dd, 8, coarse);
        let vecs: Vec<HybridVector> = points.iter().map(to_vector).collect();
        let data = HybridDataset::from_vectors(ds, dd, &vecs).unwrap();
        let (ids, scores) = brute_force_topk(&data, to_vector(&q).as_ref(), h).unwrap();
        assert_eq!(ids, naive_topk(&points, &q, h), "instance {inst}");
        assert!(scores.windows(2).all(|w| w[0] >= w[1]));
    }
}

#[test]
fn single_point_and_full_ranking() {
    let mut sparse = SparseMatrix::new(3);
    sparse.push_row(&SparseVector::from_sorted(vec![0], vec![2.0]).unwrap()).unwrap();
    let one = HybridDataset::from_parts(sparse, 1, vec![1.0]).unwrap();
    let q = HybridVector::new(SparseVector::empty(), vec![-1.0]);
    assert_eq!(brute_force_topk(&one, q.as_ref(), 1).unwrap(), (vec![0], vec![-1.0]));

    let vecs: Vec<HybridVector> = [3.0, -1.0, 3.0, 7.0]
        .iter()
        .map(|&v| HybridVector::new(SparseVector::empty(), vec![v]))
        .collect();
    let data = HybridDataset::from_vectors(1, 1, &vecs).unwrap();
    let q = HybridVector::new(SparseVector::empty(), vec![1.0]);
    assert_eq!(brute_force_topk(&data, q.as_ref(), 4).unwrap().0, vec![3, 0, 2, 1]);
}

#[test]
fn recall_examples() {
    let truth: Vec<u32> = (0..20).collect();
    assert_eq!(recall_at_h(&truth, &truth, 20), 1.0);
    let disjoint: Vec<u32> = (100..120).collect();
    assert_eq!(recall_at_h(&disjoint, &truth, 20), 0.0);
    let half: Vec<u32> = (10..30).collect();
    assert_eq!(recall_at_h(&half, &truth, 20), 0.5);
}
