use hybrid_mips::dense::{
    adc_scan, adc_table, build_dense_index, even_widths, lut16_scan_with, quantize_lut, train_codebooks, whiten_fit,
    DenseIndexConfig, Lut16Kernel, PqCodes,
};
use hybrid_mips::Execution;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn correlated(n: usize, d: usize, seed: u64) -> Vec<f32> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mix: Vec<f32> = (0..d * d).map(|_| rng.random_range(-1.0..1.0)).collect();
    let scale: Vec<f32> = (0..d).map(|j| 0.1 + j as f32).collect();
    let normal = Normal::new(0.0f32, 1.0).unwrap();
    let mut x = Vec::with_capacity(n * d);
    for _ in 0..n {
        let z: Vec<f32> = (0..d).map(|j| normal.sample(&mut rng) * scale[j]).collect();
        for r in 0..d {
            x.push(3.0 + (0..d).map(|c| mix[r * d + c] * z[c]).sum::<f32>());
        }
    }
    x
}

fn argmax(scores: impl Iterator<Item = f64>) -> usize {
    scores
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |b, (i, s)| if s > b.1 { (i, s) } else { b })
        .0
}

#[test]
fn whitening_preserves_inner_product_argmax() {
    let (n, d) = (2_000, 8);
    let x = correlated(n, d, 1);
    let w = whiten_fit(&x, d).unwrap();
    let xw: Vec<f32> = x.chunks(d).flat_map(|r| w.apply_data(r)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..50 {
        let q: Vec<f32> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let qw = w.apply_query(&q);
        let off = w.query_offset(&q);
        let raw = (0..n).map(|i| (0..d).map(|j| q[j] as f64 * x[i * d + j] as f64).sum::<f64>());
        let wht = (0..n).map(|i| off + (0..d).map(|j| qw[j] as f64 * xw[i * d + j] as f64).sum::<f64>());
        let (a, b) = (argmax(raw.clone()), argmax(wht.clone()));
        let (ra, rb): (Vec<f64>, Vec<f64>) = (raw.collect(), wht.collect());
        assert!(a == b || (ra[a] - ra[b]).abs() < 1e-3, "{a} vs {b}");
        for (u, v) in ra.iter().zip(&rb) {
            assert!((u - v).abs() < 1e-3 * (1.0 + u.abs()));
        }
    }
}

#[test]
fn whitened_training_data_is_isotropic() {
    let (n, d) = (5_000, 6);
    let x = correlated(n, d, 3);
    let w = whiten_fit(&x, d).unwrap();
    let xw: Vec<f32> = x.chunks(d).flat_map(|r| w.apply_data(r)).collect();
    for a in 0..d {
        for b in 0..d {
            let c: f64 = (0..n).map(|i| xw[i * d + a] as f64 * xw[i * d + b] as f64).sum::<f64>() / n as f64;
            let want = if a == b { 1.0 } else { 0.0 };
            assert!((c - want).abs() < 1e-2, "cov[{a}][{b}]={c}");
        }
    }
}

#[test]
fn dense_index_scores_approximate_exact_inner_products() {
    let (n, d) = (3_000, 16);
    let x = correlated(n, d, 4);
    let idx = build_dense_index(&x, d, &DenseIndexConfig::default(), Execution::Parallel).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let q: Vec<f32> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
    let dq = idx.prepare(&q).unwrap();
    let mut out = vec![0.0f32; n];
    idx.scan(&dq, &mut out).unwrap();
    let mut err_adc = 0.0;
    let mut err_res = 0.0;
    for i in 0..n {
        let exact: f64 = (0..d).map(|j| q[j] as f64 * x[i * d + j] as f64).sum();
        err_adc += (out[i] as f64 - exact).abs();
        err_res += (out[i] as f64 + idx.residual_dot(&dq, i) - exact).abs();
    }
    assert!(err_res < 0.2 * err_adc, "residual {err_res} vs adc {err_adc}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lut16_kernels_agree_and_track_float_adc(n in 1usize..300, k in 1usize..40, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = k * 2;
        let x: Vec<f32> = (0..(n.max(16)) * d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (cb, _) = train_codebooks(&x, &even_widths(d, k).unwrap(), 16, 3, seed, Execution::Sequential).unwrap();
        let codes = PqCodes::encode_all(&x[..n * d], &cb, Execution::Sequential).unwrap();
        let q: Vec<f32> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
        let lut = adc_table(&q, &cb).unwrap();
        let qlut = quantize_lut(&lut).unwrap();
        let mut reference = vec![0.0f32; n];
        lut16_scan_with(Lut16Kernel::Scalar, &codes, &qlut, &mut reference).unwrap();
        for kernel in [Lut16Kernel::Portable, Lut16Kernel::Avx2] {
            if kernel.is_available() {
                let mut out = vec![0.0f32; n];
                lut16_scan_with(kernel, &codes, &qlut, &mut out).unwrap();
                prop_assert_eq!(out.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                    reference.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
            }
        }
        let mut float = vec![0.0f32; n];
        adc_scan(&codes, &lut, &mut float).unwrap();
        let tol = k as f64 * qlut.scale() as f64 / 2.0 + 1e-4;
        for i in 0..n {
            prop_assert!(((reference[i] - float[i]) as f64).abs() <= tol);
        }
    }
}
