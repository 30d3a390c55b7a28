//! User/item/rating triplets and their hybrid embedding.

use std::collections::BTreeMap;
use std::io::BufRead;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::data::{HybridDataset, SparseMatrix};
use crate::{Error, Result};

pub const MIN_RATING: f32 = 1.0;
pub const MAX_RATING: f32 = 5.0;

/// Ratings with user and item ids remapped to `0..n` in ascending order of
/// the raw ids.
#[derive(Debug, Clone, PartialEq)]
pub struct RatingsMatrix {
    user_ids: Vec<u64>,
    item_ids: Vec<u64>,
    /// `(user, item, rating)`, sorted by user then item.
    entries: Vec<(u32, u32, f32)>,
}

fn bad(line: usize, reason: impl std::fmt::Display) -> Error {
    Error::Corrupt {
        format: "ratings",
        reason: format!("line {line}: {reason}"),
    }
}

/// Parses `user item rating` lines separated by whitespace or commas.
/// Blank lines and lines starting with `#` are skipped. A repeated
/// `(user, item)` pair keeps its last rating.
pub fn read_ratings<R: BufRead>(r: R) -> Result<RatingsMatrix> {
    let mut raw: BTreeMap<(u64, u64), f32> = BTreeMap::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = t.split(|c: char| c.is_whitespace() || c == ',').filter(|f| !f.is_empty()).collect();
        if fields.len() != 3 {
            return Err(bad(i + 1, format!("expected 3 fields, found {}", fields.len())));
        }
        let user: u64 = fields[0].parse().map_err(|e| bad(i + 1, format!("user id: {e}")))?;
        let item: u64 = fields[1].parse().map_err(|e| bad(i + 1, format!("item id: {e}")))?;
        let rating: f32 = fields[2].parse().map_err(|e| bad(i + 1, format!("rating: {e}")))?;
        if !(MIN_RATING..=MAX_RATING).contains(&rating) {
            return Err(bad(i + 1, format!("rating {rating} outside {MIN_RATING}..={MAX_RATING}")));
        }
        raw.insert((user, item), rating);
    }
    RatingsMatrix::from_triplets(raw.into_iter().map(|((u, i), r)| (u, i, r)))
}

impl RatingsMatrix {
    pub fn from_triplets<I: IntoIterator<Item = (u64, u64, f32)>>(triplets: I) -> Result<Self> {
        let mut map: BTreeMap<(u64, u64), f32> = BTreeMap::new();
        for (u, i, r) in triplets {
            if !(MIN_RATING..=MAX_RATING).contains(&r) {
                return Err(Error::config(format!("rating {r} outside {MIN_RATING}..={MAX_RATING}")));
            }
            map.insert((u, i), r);
        }
        let mut user_ids: Vec<u64> = map.keys().map(|k| k.0).collect();
        user_ids.dedup();
        let mut item_ids: Vec<u64> = map.keys().map(|k| k.1).collect();
        item_ids.sort_unstable();
        item_ids.dedup();
        if user_ids.len() > u32::MAX as usize || item_ids.len() > u32::MAX as usize {
            return Err(Error::Unsupported("more than 2^32 users or items".into()));
        }
        let entries = map
            .into_iter()
            .map(|((u, i), r)| {
                (
                    user_ids.binary_search(&u).unwrap() as u32,
                    item_ids.binary_search(&i).unwrap() as u32,
                    r,
                )
            })
            .collect();
        Ok(Self {
            user_ids,
            item_ids,
            entries,
        })
    }

    pub fn n_users(&self) -> usize {
        self.user_ids.len()
    }

    pub fn n_items(&self) -> usize {
        self.item_ids.len()
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn user_ids(&self) -> &[u64] {
        &self.user_ids
    }

    pub fn item_ids(&self) -> &[u64] {
        &self.item_ids
    }

    pub fn entries(&self) -> &[(u32, u32, f32)] {
        &self.entries
    }

    /// One row per user over item columns.
    pub fn to_sparse(&self) -> SparseMatrix {
        let mut m = SparseMatrix::with_capacity(self.n_items(), self.n_users(), self.nnz());
        let mut e = self.entries.iter().peekable();
        for u in 0..self.n_users() as u32 {
            while let Some(&&(uu, i, r)) = e.peek() {
                if uu != u {
                    break;
                }
                m.push_entry(i, r);
                e.next();
            }
            m.end_row();
        }
        m
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvdOptions {
    pub oversample: usize,
    pub power_iters: usize,
    pub seed: u64,
}

impl Default for SvdOptions {
    fn default() -> Self {
        Self {
            oversample: 10,
            power_iters: 4,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TruncatedSvd {
    /// `n_rows × rank`, row-major.
    pub u: Vec<f64>,
    pub singular_values: Vec<f64>,
    pub rank: usize,
}

/// `M · X` with `X` of shape `n_cols × k`.
fn mul(m: &SparseMatrix, x: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(m.n_rows(), x.ncols());
    for (i, row) in m.rows().enumerate() {
        for (j, v) in row.iter() {
            for c in 0..x.ncols() {
                out[(i, c)] += v as f64 * x[(j as usize, c)];
            }
        }
    }
    out
}

/// `Mᵀ · Y` with `Y` of shape `n_rows × k`.
fn mul_t(m: &SparseMatrix, y: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(m.n_cols(), y.ncols());
    for (i, row) in m.rows().enumerate() {
        for (j, v) in row.iter() {
            for c in 0..y.ncols() {
                out[(j as usize, c)] += v as f64 * y[(i, c)];
            }
        }
    }
    out
}

fn orthonormal(a: DMatrix<f64>) -> DMatrix<f64> {
    a.qr().q()
}

/// Randomized range finder with power iterations, then an exact
/// eigendecomposition of the projected Gram matrix.
pub fn randomized_svd(m: &SparseMatrix, rank: usize, opts: &SvdOptions) -> Result<TruncatedSvd> {
    let (n, d) = (m.n_rows(), m.n_cols());
    if rank > n.min(d) {
        return Err(Error::config(format!("rank {rank} exceeds min({n}, {d})")));
    }
    if rank == 0 {
        return Ok(TruncatedSvd {
            u: Vec::new(),
            singular_values: Vec::new(),
            rank,
        });
    }
    let l = (rank + opts.oversample).min(n.min(d));
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let omega = DMatrix::from_fn(d, l, |_, _| StandardNormal.sample(&mut rng));
    let mut q = orthonormal(mul(m, &omega));
    for _ in 0..opts.power_iters {
        let z = orthonormal(mul_t(m, &q));
        q = orthonormal(mul(m, &z));
    }
    // B = Qᵀ M, so B Bᵀ = (Mᵀ Q)ᵀ (Mᵀ Q).
    let bt = mul_t(m, &q);
    let gram = bt.transpose() * &bt;
    let eig = SymmetricEigen::new(gram);
    let mut order: Vec<usize> = (0..l).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let order = &order[..rank];
    let ub = DMatrix::from_fn(l, rank, |r, c| eig.eigenvectors[(r, order[c])]);
    let u = q * ub;
    let singular_values = order.iter().map(|&i| eig.eigenvalues[i].max(0.0).sqrt()).collect();
    let u = (0..n).flat_map(|r| (0..rank).map(move |c| (r, c))).map(|rc| u[rc]).collect();
    Ok(TruncatedSvd {
        u,
        singular_values,
        rank,
    })
}

#[derive(Debug, Clone)]
pub struct Embedding {
    pub dataset: HybridDataset,
    pub singular_values: Vec<f64>,
    pub lambda: f64,
}

/// Hybrid rows `(λ·U_i | M_i)`: dense part from the truncated left singular
/// vectors, sparse part the raw rating row. Without an explicit `lambda`, it
/// equalizes the mean dense and sparse row norms.
pub fn svd_embed(r: &RatingsMatrix, rank: usize, lambda: Option<f64>, opts: &SvdOptions) -> Result<Embedding> {
    let m = r.to_sparse();
    let svd = randomized_svd(&m, rank, opts)?;
    let n = m.n_rows();
    let mean_norm = |rows: &mut dyn Iterator<Item = f64>| rows.sum::<f64>() / n.max(1) as f64;
    let lambda = match lambda {
        Some(l) => l,
        None if rank == 0 => 1.0,
        None => {
            let sparse = mean_norm(&mut m.rows().map(|row| row.iter().map(|(_, v)| (v as f64).powi(2)).sum::<f64>().sqrt()));
            let dense = mean_norm(&mut svd.u.chunks(rank).map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt()));
            if dense > 0.0 {
                sparse / dense
            } else {
                1.0
            }
        }
    };
    if !lambda.is_finite() {
        return Err(Error::config("lambda must be finite"));
    }
    let dense: Vec<f32> = svd.u.iter().map(|&v| (lambda * v) as f32).collect();
    Ok(Embedding {
        dataset: HybridDataset::from_parts(m, rank, dense)?,
        singular_values: svd.singular_values,
        lambda,
    })
}

#[cfg(test)]
mod tests {
    use rand::Rng;

    use super::*;

    #[test]
    fn parse_and_remap() {
        let text = "# header\n10 7 5\n3 7 1\n10 2 4.5\n\n3 7 2\n";
        let r = read_ratings(text.as_bytes()).unwrap();
        assert_eq!(r.user_ids(), &[3, 10]);
        assert_eq!(r.item_ids(), &[2, 7]);
        assert_eq!(r.entries(), &[(0, 1, 2.0), (1, 0, 4.5), (1, 1, 5.0)]);
        let m = r.to_sparse();
        assert_eq!(m.n_rows(), 2);
        assert_eq!(m.row(1).values, &[4.5, 5.0]);
    }

    #[test]
    fn parse_errors() {
        assert!(read_ratings("1 2\n".as_bytes()).is_err());
        assert!(read_ratings("1 2 6\n".as_bytes()).is_err());
        assert!(read_ratings("a 2 3\n".as_bytes()).is_err());
        assert!(read_ratings("1,2,0.5\n".as_bytes()).is_err());
        assert!(read_ratings("1,2,3\n".as_bytes()).is_ok());
    }

    fn dense_to_sparse(a: &DMatrix<f64>) -> SparseMatrix {
        let mut m = SparseMatrix::new(a.ncols());
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                if a[(i, j)] != 0.0 {
                    m.push_entry(j as u32, a[(i, j)] as f32);
                }
            }
            m.end_row();
        }
        m
    }

    #[test]
    fn rank_one_recovers_direction() {
        let u: Vec<f64> = (0..30).map(|i| 1.0 + (i % 5) as f64).collect();
        let v: Vec<f64> = (0..20).map(|j| 0.5 + (j % 3) as f64).collect();
        let a = DMatrix::from_fn(30, 20, |i, j| u[i] * v[j]);
        let svd = randomized_svd(&dense_to_sparse(&a), 1, &SvdOptions::default()).unwrap();
        let norm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        let cos: f64 = svd.u.iter().zip(&u).map(|(a, b)| a * b / norm).sum();
        assert!((cos.abs() - 1.0).abs() < 1e-6);
        let sigma = norm * v.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((svd.singular_values[0] / sigma - 1.0).abs() < 1e-5);
    }

    #[test]
    fn leading_values_match_eigen_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (n, d, k) = (1000, 500, 10);
        let left: DMatrix<f64> = DMatrix::from_fn(n, k, |_, _| StandardNormal.sample(&mut rng));
        let right: DMatrix<f64> = DMatrix::from_fn(k, d, |_, _| StandardNormal.sample(&mut rng));
        let noise = DMatrix::from_fn(n, d, |_, _| rng.random_range(-0.1..0.1));
        let a = dense_to_sparse(&(left * right + noise));
        let svd = randomized_svd(&a, k, &SvdOptions { oversample: 10, power_iters: 4, seed: 1 }).unwrap();
        // Oracle: eigenvalues of MᵀM from the f32-rounded matrix.
        let dense = DMatrix::from_fn(n, d, |i, j| {
            let row = a.row(i);
            row.iter().find(|(c, _)| *c as usize == j).map_or(0.0, |(_, v)| v as f64)
        });
        let mut ev: Vec<f64> = SymmetricEigen::new(dense.transpose() * &dense).eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| b.total_cmp(a));
        for i in 0..k {
            let s = ev[i].sqrt();
            assert!((svd.singular_values[i] / s - 1.0).abs() < 1e-3, "{i}: {} vs {s}", svd.singular_values[i]);
        }
    }

    #[test]
    fn embed_shapes_and_lambda() {
        let trip: Vec<(u64, u64, f32)> = (0..40u64)
            .flat_map(|u| (0..15u64).filter(move |i| (u + i) % 3 != 0).map(move |i| (u, i, 1.0 + ((u * i) % 5) as f32)))
            .collect();
        let r = RatingsMatrix::from_triplets(trip).unwrap();
        let e = svd_embed(&r, 4, None, &SvdOptions::default()).unwrap();
        assert_eq!(e.dataset.len(), 40);
        assert_eq!(e.dataset.d_dense(), 4);
        assert_eq!(e.dataset.d_sparse(), 15);
        let mean = |f: &dyn Fn(usize) -> f64| (0..40).map(f).sum::<f64>() / 40.0;
        let sparse = mean(&|i| e.dataset.point(i).sparse.values.iter().map(|&v| (v as f64).powi(2)).sum::<f64>().sqrt());
        let dense = mean(&|i| e.dataset.dense_row(i).iter().map(|&v| (v as f64).powi(2)).sum::<f64>().sqrt());
        assert!((sparse / dense - 1.0).abs() < 1e-4);
        let zero = svd_embed(&r, 0, None, &SvdOptions::default()).unwrap();
        assert_eq!(zero.dataset.d_dense(), 0);
        assert!(svd_embed(&r, 16, None, &SvdOptions::default()).is_err());
    }
}
