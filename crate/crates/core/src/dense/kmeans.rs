//! Lloyd's k-means with k-means++ seeding, in double precision.

use rand::Rng;

use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct KMeans {
    /// `k × dim`, row-major.
    pub centers: Vec<f64>,
    pub assignments: Vec<u32>,
    /// Mean squared error per point after the initial assignment and after
    /// every completed iteration.
    pub history: Vec<f64>,
}

impl KMeans {
    pub fn mse(&self) -> f64 {
        *self.history.last().unwrap()
    }
}

#[inline]
fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Nearest center, ties to the lower index.
#[inline]
fn nearest(x: &[f64], centers: &[f64], dim: usize) -> (u32, f64) {
    let mut best = (0u32, f64::INFINITY);
    for (c, center) in centers.chunks_exact(dim.max(1)).enumerate() {
        let d = if dim == 0 { 0.0 } else { sq_dist(x, center) };
        if d < best.1 {
            best = (c as u32, d);
        }
    }
    best
}

fn seed_plus_plus<R: Rng>(data: &[f64], n: usize, dim: usize, k: usize, rng: &mut R) -> Vec<f64> {
    let row = |i: usize| &data[i * dim..(i + 1) * dim];
    let mut centers = Vec::with_capacity(k * dim);
    let mut chosen = vec![false; n];
    let first = rng.random_range(0..n);
    chosen[first] = true;
    centers.extend_from_slice(row(first));
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(row(i), row(first))).collect();
    for _ in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = None;
            for (i, &w) in d2.iter().enumerate() {
                if w > 0.0 {
                    pick = Some(i);
                    if target < w {
                        break;
                    }
                    target -= w;
                }
            }
            pick.unwrap()
        } else {
            // Fewer distinct points than centers.
            (0..n).find(|&i| !chosen[i]).unwrap_or(0)
        };
        chosen[pick] = true;
        let c = row(pick).to_vec();
        for (i, w) in d2.iter_mut().enumerate() {
            *w = w.min(sq_dist(row(i), &c));
        }
        centers.extend_from_slice(&c);
    }
    centers
}

fn assign(data: &[f64], dim: usize, centers: &[f64], out: &mut [u32]) -> (f64, bool) {
    let mut total = 0.0;
    let mut changed = false;
    for (i, a) in out.iter_mut().enumerate() {
        let (c, d) = nearest(&data[i * dim..(i + 1) * dim], centers, dim);
        changed |= *a != c;
        *a = c;
        total += d;
    }
    (total, changed)
}

/// Clusters `n` rows of width `dim` into `k` centers.
///
/// Runs `iters` Lloyd iterations at most, stopping early once assignments are
/// stable. An empty cluster is reseeded at the member of the largest cluster
/// farthest from its center.
pub fn kmeans<R: Rng>(
    data: &[f64],
    dim: usize,
    k: usize,
    iters: usize,
    rng: &mut R,
) -> Result<KMeans> {
    if dim == 0 {
        return Err(Error::config("k-means on an empty subspace"));
    }
    if k == 0 {
        return Err(Error::config("k-means needs at least one center"));
    }
    if !data.len().is_multiple_of(dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: data.len() % dim,
        });
    }
    let n = data.len() / dim;
    if n < k {
        return Err(Error::InsufficientData(format!(
            "{n} points for {k} centers"
        )));
    }
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("k-means input"));
    }
    let mut centers = seed_plus_plus(data, n, dim, k, rng);
    let mut assignments = vec![u32::MAX; n];
    let (cost, _) = assign(data, dim, &centers, &mut assignments);
    let mut history = vec![cost / n as f64];
    let mut sums = vec![0.0; k * dim];
    let mut counts = vec![0usize; k];
    for _ in 0..iters {
        sums.iter_mut().for_each(|s| *s = 0.0);
        counts.iter_mut().for_each(|c| *c = 0);
        for (i, &a) in assignments.iter().enumerate() {
            let a = a as usize;
            counts[a] += 1;
            for (s, x) in sums[a * dim..(a + 1) * dim].iter_mut().zip(&data[i * dim..]) {
                *s += x;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                let inv = 1.0 / counts[c] as f64;
                for t in 0..dim {
                    centers[c * dim + t] = sums[c * dim + t] * inv;
                }
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                continue;
            }
            let largest = (0..k).max_by_key(|&j| (counts[j], std::cmp::Reverse(j))).unwrap();
            let far = (0..n)
                .filter(|&i| assignments[i] as usize == largest)
                .map(|i| (i, sq_dist(&data[i * dim..(i + 1) * dim], &centers[largest * dim..(largest + 1) * dim])))
                .fold((usize::MAX, -1.0), |b, x| if x.1 > b.1 { x } else { b });
            if far.0 == usize::MAX {
                continue;
            }
            let src = data[far.0 * dim..(far.0 + 1) * dim].to_vec();
            centers[c * dim..(c + 1) * dim].copy_from_slice(&src);
            counts[largest] -= 1;
            counts[c] = 1;
            assignments[far.0] = c as u32;
        }
        let (cost, changed) = assign(data, dim, &centers, &mut assignments);
        history.push(cost / n as f64);
        if !changed {
            break;
        }
    }
    Ok(KMeans {
        centers,
        assignments,
        history,
    })
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    use super::*;

    fn gaussian(n: usize, dim: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n * dim).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    #[test]
    fn recovers_repeated_points() {
        let pts: Vec<[f64; 2]> = (0..16).map(|i| [i as f64, (i * i) as f64 * 0.5]).collect();
        let data: Vec<f64> = (0..320).flat_map(|i| pts[i % 16]).collect();
        let km = kmeans(&data, 2, 16, 25, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(km.mse(), 0.0);
        let mut got: Vec<[f64; 2]> = km.centers.chunks(2).map(|c| [c[0], c[1]]).collect();
        got.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(got, pts);
    }

    #[test]
    fn zero_iterations_keeps_seeds() {
        let data = gaussian(200, 3, 2);
        let km = kmeans(&data, 3, 8, 0, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(km.history.len(), 1);
        for c in km.centers.chunks(3) {
            assert!(data.chunks(3).any(|r| r == c));
        }
    }

    #[test]
    fn objective_never_increases() {
        for seed in 0..10 {
            let data = gaussian(2000, 2, seed);
            let km = kmeans(&data, 2, 16, 25, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            for w in km.history.windows(2) {
                assert!(w[1] <= w[0] * (1.0 + 1e-12), "{:?}", km.history);
            }
        }
    }

    #[test]
    fn assignments_are_nearest() {
        let data = gaussian(500, 4, 9);
        let km = kmeans(&data, 4, 16, 25, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        for (i, &a) in km.assignments.iter().enumerate() {
            let x = &data[i * 4..(i + 1) * 4];
            let best = km
                .centers
                .chunks(4)
                .map(|c| sq_dist(x, c))
                .fold(f64::INFINITY, f64::min);
            assert_eq!(sq_dist(x, &km.centers[a as usize * 4..][..4]), best);
        }
    }

    #[test]
    fn deterministic_for_seed() {
        let data = gaussian(1000, 2, 4);
        let a = kmeans(&data, 2, 16, 25, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let b = kmeans(&data, 2, 16, 25, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(a.centers, b.centers);
        assert_eq!(a.assignments, b.assignments);
    }

    #[test]
    fn too_few_points() {
        let data = gaussian(10, 2, 0);
        assert!(matches!(
            kmeans(&data, 2, 16, 5, &mut ChaCha8Rng::seed_from_u64(0)),
            Err(Error::InsufficientData(_))
        ));
        assert!(kmeans(&[], 0, 16, 5, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
    }
}
