//! Principal direction divisive partitioning.
//!
//! The corpus is split top-down: the leaf with the largest scatter is cut by
//! the sign of each document's projection onto the leaf's principal
//! direction, until the requested number of leaves exists.

use super::SparseVec;
use crate::{Error, Result};

const MAX_ITERATIONS: usize = 1000;
const TOLERANCE: f64 = 1e-8;

/// Anything that can apply `MᵀM` for a (conceptually centered) matrix `M`.
pub trait Scatter {
    fn cols(&self) -> usize;
    /// `out = MᵀM u`.
    fn gram_apply(&self, u: &[f64], out: &mut [f64]);
    /// Squared Frobenius norm of `M` (total scatter).
    fn total_scatter(&self) -> f64;
    /// Dense copy of the row with the largest norm, used as the start vector.
    fn largest_row(&self) -> Vec<f64>;
}

/// Dense row-major matrix, used as given (the caller centers it).
#[derive(Debug, Clone)]
pub struct DenseRows<'a> {
    rows: &'a [Vec<f64>],
    cols: usize,
}

impl<'a> DenseRows<'a> {
    pub fn new(rows: &'a [Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged matrix");
        DenseRows { rows, cols }
    }
}

impl Scatter for DenseRows<'_> {
    fn cols(&self) -> usize {
        self.cols
    }

    fn gram_apply(&self, u: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|x| *x = 0.0);
        for row in self.rows {
            let p = dot(row, u);
            for (o, r) in out.iter_mut().zip(row) {
                *o += p * r;
            }
        }
    }

    fn total_scatter(&self) -> f64 {
        self.rows.iter().map(|r| dot(r, r)).sum()
    }

    fn largest_row(&self) -> Vec<f64> {
        self.rows
            .iter()
            .max_by(|a, b| dot(a, a).total_cmp(&dot(b, b)))
            .cloned()
            .unwrap_or_default()
    }
}

/// Sparse rows centered implicitly by their mean: `M = X - 1 μᵀ`.
struct CenteredSparse<'a> {
    rows: Vec<&'a SparseVec>,
    mean: Vec<f64>,
    mean_sq: f64,
}

impl<'a> CenteredSparse<'a> {
    fn new(rows: Vec<&'a SparseVec>, cols: usize) -> Self {
        let mut mean = vec![0.0; cols];
        for row in &rows {
            for &(j, x) in row.iter() {
                mean[j as usize] += x;
            }
        }
        let n = rows.len() as f64;
        mean.iter_mut().for_each(|m| *m /= n);
        let mean_sq = dot(&mean, &mean);
        CenteredSparse { rows, mean, mean_sq }
    }

    fn project(&self, row: &SparseVec, u: &[f64], mean_u: f64) -> f64 {
        sparse_dot(row, u) - mean_u
    }
}

impl Scatter for CenteredSparse<'_> {
    fn cols(&self) -> usize {
        self.mean.len()
    }

    fn gram_apply(&self, u: &[f64], out: &mut [f64]) {
        let mean_u = dot(&self.mean, u);
        out.iter_mut().for_each(|x| *x = 0.0);
        let mut total = 0.0;
        for row in &self.rows {
            let p = self.project(row, u, mean_u);
            total += p;
            for &(j, x) in row.iter() {
                out[j as usize] += p * x;
            }
        }
        for (o, m) in out.iter_mut().zip(&self.mean) {
            *o -= total * m;
        }
    }

    fn total_scatter(&self) -> f64 {
        let sq: f64 = self.rows.iter().map(|r| r.iter().map(|&(_, x)| x * x).sum::<f64>()).sum();
        (sq - self.rows.len() as f64 * self.mean_sq).max(0.0)
    }

    fn largest_row(&self) -> Vec<f64> {
        let mut best = (f64::NEG_INFINITY, Vec::new());
        for row in &self.rows {
            let mut dense: Vec<f64> = self.mean.iter().map(|m| -m).collect();
            for &(j, x) in row.iter() {
                dense[j as usize] += x;
            }
            let norm = dot(&dense, &dense);
            if norm > best.0 {
                best = (norm, dense);
            }
        }
        best.1
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sparse_dot(a: &SparseVec, dense: &[f64]) -> f64 {
    a.iter().map(|&(j, x)| x * dense[j as usize]).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// False for zero, negative and NaN values alike.
fn positive(x: f64) -> bool {
    x.partial_cmp(&0.0) == Some(std::cmp::Ordering::Greater)
}

/// Unit vector maximizing `‖Mu‖²`, by power iteration on `MᵀM`.
///
/// The sign is fixed so that the first nonzero component is positive.
pub fn principal_direction<M: Scatter + ?Sized>(m: &M) -> Result<Vec<f64>> {
    let scatter = m.total_scatter();
    if !positive(scatter) {
        return Err(Error::DegenerateScatter);
    }
    let mut v = m.largest_row();
    let n0 = norm(&v);
    if !positive(n0) {
        return Err(Error::DegenerateScatter);
    }
    v.iter_mut().for_each(|x| *x /= n0);
    let mut w = vec![0.0; m.cols()];
    for _ in 0..MAX_ITERATIONS {
        m.gram_apply(&v, &mut w);
        let nw = norm(&w);
        if !positive(nw - scatter * 1e-300) {
            return Err(Error::DegenerateScatter);
        }
        w.iter_mut().for_each(|x| *x /= nw);
        let diff = v.iter().zip(&w).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        std::mem::swap(&mut v, &mut w);
        if diff <= TOLERANCE {
            break;
        }
    }
    let max_abs = v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    if let Some(first) = v.iter().find(|x| x.abs() > max_abs * 1e-12) {
        if *first < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
    Ok(v)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    pub k: usize,
    /// Document index -> cluster.
    pub assignments: Vec<usize>,
    /// Dense mean vector of each cluster.
    pub centroids: Vec<Vec<f64>>,
}

impl Clustering {
    pub fn members(&self, cluster: usize) -> impl Iterator<Item = usize> + '_ {
        self.assignments
            .iter()
            .enumerate()
            .filter(move |&(_, &c)| c == cluster)
            .map(|(i, _)| i)
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &c in &self.assignments {
            sizes[c] += 1;
        }
        sizes
    }
}

struct Leaf {
    members: Vec<usize>,
    scatter: f64,
    frozen: bool,
}

/// Total within-leaf scatter of a partition, relative to each leaf's mean.
pub fn partition_scatter(vectors: &[SparseVec], dim: usize, groups: &[Vec<usize>]) -> f64 {
    groups
        .iter()
        .filter(|g| !g.is_empty())
        .map(|g| CenteredSparse::new(g.iter().map(|&i| &vectors[i]).collect(), dim).total_scatter())
        .sum()
}

/// Divides `vectors` (rows of dimension `dim`) into `k` clusters.
pub fn pddp_cluster(vectors: &[SparseVec], dim: usize, k: usize) -> Result<Clustering> {
    pddp_cluster_traced(vectors, dim, k, |_| {})
}

/// As [`pddp_cluster`], reporting the total scatter after every executed split.
pub fn pddp_cluster_traced(
    vectors: &[SparseVec],
    dim: usize,
    k: usize,
    mut on_split: impl FnMut(f64),
) -> Result<Clustering> {
    if vectors.is_empty() {
        return Err(Error::EmptyCorpus("no documents to cluster"));
    }
    if k == 0 || k > vectors.len() {
        return Err(Error::ClusteringUnreachable {
            requested: k,
            reached: vectors.len().min(k),
        });
    }
    let leaf = |members: Vec<usize>| {
        let op = CenteredSparse::new(members.iter().map(|&i| &vectors[i]).collect(), dim);
        Leaf {
            scatter: op.total_scatter(),
            members,
            frozen: false,
        }
    };
    let mut leaves = vec![leaf((0..vectors.len()).collect())];
    while leaves.len() < k {
        let pick = leaves
            .iter()
            .enumerate()
            .filter(|(_, l)| !l.frozen && l.members.len() > 1)
            .fold(None::<(usize, f64)>, |best, (i, l)| match best {
                Some((_, s)) if s >= l.scatter => best,
                _ => Some((i, l.scatter)),
            });
        let Some((idx, _)) = pick else {
            return Err(Error::ClusteringUnreachable {
                requested: k,
                reached: leaves.len(),
            });
        };
        let members = &leaves[idx].members;
        let op = CenteredSparse::new(members.iter().map(|&i| &vectors[i]).collect(), dim);
        let squares: f64 = members
            .iter()
            .map(|&i| vectors[i].iter().map(|&(_, x)| x * x).sum::<f64>())
            .sum();
        if op.total_scatter() <= 1e-12 * squares.max(1.0) {
            leaves[idx].frozen = true;
            continue;
        }
        let u = match principal_direction(&op) {
            Ok(u) => u,
            Err(Error::DegenerateScatter) => {
                leaves[idx].frozen = true;
                continue;
            }
            Err(e) => return Err(e),
        };
        let mean_u = dot(&op.mean, &u);
        let (left, right): (Vec<usize>, Vec<usize>) = members
            .iter()
            .partition(|&&i| op.project(&vectors[i], &u, mean_u) <= 0.0);
        if left.is_empty() || right.is_empty() {
            leaves[idx].frozen = true;
            continue;
        }
        leaves[idx] = leaf(left);
        leaves.push(leaf(right));
        on_split(leaves.iter().map(|l| l.scatter).sum());
    }

    let mut assignments = vec![0; vectors.len()];
    let mut centroids = Vec::with_capacity(k);
    for (c, l) in leaves.iter().enumerate() {
        let mut centroid = vec![0.0; dim];
        for &i in &l.members {
            assignments[i] = c;
            for &(j, x) in &vectors[i] {
                centroid[j as usize] += x;
            }
        }
        let n = l.members.len() as f64;
        centroid.iter_mut().for_each(|x| *x /= n);
        centroids.push(centroid);
    }
    Ok(Clustering {
        k,
        assignments,
        centroids,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn residual(rows: &[Vec<f64>], u: &[f64]) -> (f64, f64) {
        let m = DenseRows::new(rows);
        let mut g = vec![0.0; u.len()];
        m.gram_apply(u, &mut g);
        let sigma2 = dot(u, &g);
        let r = g.iter().zip(u).map(|(a, b)| (a - sigma2 * b).powi(2)).sum::<f64>().sqrt();
        (r, sigma2)
    }

    #[test]
    fn rank_one_matrix() {
        let r = vec![0.0, -3.0, 4.0];
        let rows = vec![vec![0.0; 3], r.clone(), vec![0.0; 3]];
        let u = principal_direction(&DenseRows::new(&rows)).unwrap();
        // first nonzero component of ±r/‖r‖ made positive
        let expected = [0.0, 0.6, -0.8];
        for (a, b) in u.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12, "{u:?}");
        }
    }

    #[test]
    fn antipodal_clouds_along_third_axis() {
        let mut rows = Vec::new();
        for i in 0..20 {
            let jitter = (i as f64 * 0.37).sin() * 0.01;
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            rows.push(vec![jitter, -jitter, sign * 5.0, 0.5 * jitter]);
        }
        // center
        let mean: Vec<f64> = (0..4).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / 20.0).collect();
        for r in &mut rows {
            for (x, m) in r.iter_mut().zip(&mean) {
                *x -= m;
            }
        }
        let u = principal_direction(&DenseRows::new(&rows)).unwrap();
        assert!((u[2].abs() - 1.0).abs() < 1e-6, "{u:?}");
        let (res, s2) = residual(&rows, &u);
        assert!(res <= 1e-6 * s2);
    }

    #[test]
    fn all_zero_matrix_is_degenerate() {
        let rows = vec![vec![0.0; 4]; 3];
        assert!(matches!(principal_direction(&DenseRows::new(&rows)), Err(Error::DegenerateScatter)));
    }

    fn sparse(dense: &[f64]) -> SparseVec {
        dense
            .iter()
            .enumerate()
            .filter(|(_, &x)| x != 0.0)
            .map(|(j, &x)| (j as u32, x))
            .collect()
    }

    #[test]
    fn single_cluster_holds_everything() {
        let v: Vec<SparseVec> = (0..5).map(|i| sparse(&[i as f64, 1.0])).collect();
        let c = pddp_cluster(&v, 2, 1).unwrap();
        assert_eq!(c.assignments, vec![0; 5]);
        assert!((c.centroids[0][0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn k_equal_to_corpus_size_gives_singletons() {
        let v: Vec<SparseVec> = (0..9).map(|i| sparse(&[(i * i) as f64, (i % 3) as f64, 1.0])).collect();
        let c = pddp_cluster(&v, 3, 9).unwrap();
        let mut sorted = c.assignments.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..9).collect::<Vec<_>>());
    }

    #[test]
    fn identical_documents_cannot_be_split() {
        let v: Vec<SparseVec> = vec![sparse(&[1.0, 2.0]); 4];
        let err = pddp_cluster(&v, 2, 2).unwrap_err();
        assert!(matches!(err, Error::ClusteringUnreachable { requested: 2, reached: 1 }));
    }

    #[test]
    fn frozen_leaf_is_skipped_for_next_largest() {
        // leaf A: many identical docs (large norm, zero scatter); leaf B: spread docs
        let mut v: Vec<SparseVec> = vec![sparse(&[10.0, 0.0, 0.0]); 6];
        v.extend((0..4).map(|i| sparse(&[0.0, 1.0 + i as f64, 1.0])));
        let c = pddp_cluster(&v, 3, 3).unwrap();
        let sizes = c.sizes();
        assert_eq!(sizes.iter().sum::<usize>(), 10);
        // the identical block stays together
        let a = c.assignments[0];
        assert!(c.assignments[..6].iter().all(|&x| x == a));
    }
}
