//! r-nearest-neighbors graph, degree-based seeding, and spherical K-Means.

use alloc::vec;
use alloc::vec::Vec;

use libm::sqrt;

use crate::agglomeration::FeatureSpace;
use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

pub const DEFAULT_NEIGHBORS: usize = 5;
pub const DEFAULT_KMEANS_MAX_ITER: usize = 300;

/// Symmetric binary connectivity matrix over records.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborGraph {
    /// Adjacency lists, ascending, no self-loops. Symmetric by construction.
    pub adjacency: Vec<Vec<usize>>,
    pub degrees: Vec<usize>,
}

impl NeighborGraph {
    pub fn n_nodes(&self) -> usize {
        self.adjacency.len()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adjacency[a].binary_search(&b).is_ok()
    }
}

/// Output of spherical K-Means.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusteringResult {
    /// Cluster id (0-based) per record.
    pub assignments: Vec<usize>,
    /// K x d unit-norm centroid rows (zero rows only for all-zero clusters).
    pub centroids: DenseMatrix,
    /// Records used as initial centroids.
    pub seed_indices: Vec<usize>,
    pub iterations: usize,
    /// Final cosine objective: sum over records of (1 - cos to centroid).
    pub inertia: f64,
    /// Records whose feature row was entirely zero.
    pub zero_rows: Vec<usize>,
}

/// L2-normalizes each row; zero rows are left as zero.
pub fn normalize_rows(m: &DenseMatrix) -> DenseMatrix {
    let mut out = m.clone();
    for i in 0..out.nrows() {
        let row = out.row_mut(i);
        let norm = sqrt(row.iter().map(|v| v * v).sum());
        if norm > 0.0 {
            for v in row {
                *v /= norm;
            }
        }
    }
    out
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Builds the r-nearest-neighbors graph on L2-normalized rows using Euclidean
/// distance, then symmetrizes. Ties at the r-th distance break toward the
/// smaller index.
pub fn knn_graph(f: &FeatureSpace, r: usize) -> Result<NeighborGraph> {
    let n = f.n_documents();
    if r == 0 || r >= n {
        return Err(Error::TooFewRecords { r, n });
    }
    let norm = normalize_rows(&f.matrix);
    let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        let mut order: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| (sq_dist(norm.row(i), norm.row(j)), j))
            .collect();
        order.sort_by(|a, b| {
            a.0.partial_cmp(&b.0)
                .unwrap_or(core::cmp::Ordering::Equal)
                .then(a.1.cmp(&b.1))
        });
        for &(_, j) in order.iter().take(r) {
            for (a, b) in [(i, j), (j, i)] {
                if let Err(pos) = adjacency[a].binary_search(&b) {
                    adjacency[a].insert(pos, b);
                }
            }
        }
    }
    let degrees = adjacency.iter().map(|adj| adj.len()).collect();
    Ok(NeighborGraph { adjacency, degrees })
}

/// Picks the K highest-degree records as seeds (ties by smaller index). A
/// candidate whose normalized row is within 1e-12 of an already chosen seed
/// is skipped, so seeds are pairwise distinct points.
pub fn seed_centroids(g: &NeighborGraph, f: &FeatureSpace, k: usize) -> Result<Vec<usize>> {
    let n = g.n_nodes();
    if k == 0 || k > n {
        return Err(Error::NotEnoughDistinctSeeds {
            requested: k,
            found: n,
        });
    }
    let norm = normalize_rows(&f.matrix);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| g.degrees[b].cmp(&g.degrees[a]).then(a.cmp(&b)));
    let mut seeds: Vec<usize> = Vec::with_capacity(k);
    for &cand in &order {
        let duplicate = seeds
            .iter()
            .any(|&s| sqrt(sq_dist(norm.row(cand), norm.row(s))) <= 1e-12);
        if !duplicate {
            seeds.push(cand);
            if seeds.len() == k {
                return Ok(seeds);
            }
        }
    }
    Err(Error::NotEnoughDistinctSeeds {
        requested: k,
        found: seeds.len(),
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Lloyd iterations on the unit sphere: assignment by maximal dot product,
/// centroid update by renormalized mean. Empty clusters steal the record
/// farthest from its current centroid.
pub fn spherical_kmeans(
    f: &FeatureSpace,
    seeds: &[usize],
    max_iter: usize,
) -> ClusteringResult {
    let n = f.n_documents();
    let d = f.n_features();
    let k = seeds.len();
    assert!(k >= 1 && k <= n);
    let norm = normalize_rows(&f.matrix);
    let zero_rows: Vec<usize> = (0..n)
        .filter(|&i| norm.row(i).iter().all(|&v| v == 0.0))
        .collect();

    let mut centroids = DenseMatrix::zeros(k, d);
    for (c, &s) in seeds.iter().enumerate() {
        centroids.row_mut(c).copy_from_slice(norm.row(s));
    }

    let mut assignments = vec![0usize; n];
    let mut iterations = 0;
    for _iter in 0..max_iter {
        // Assignment: maximal dot product, ties toward the smaller centroid.
        let mut new_assignments = vec![0usize; n];
        for i in 0..n {
            let mut best = 0usize;
            let mut best_dot = dot(norm.row(i), centroids.row(0));
            for c in 1..k {
                let dp = dot(norm.row(i), centroids.row(c));
                if dp > best_dot {
                    best_dot = dp;
                    best = c;
                }
            }
            new_assignments[i] = best;
        }

        // Empty-cluster repair: give the cluster the record with the smallest
        // dot product to its assigned centroid, excluding sole members.
        let mut counts = vec![0usize; k];
        for &a in &new_assignments {
            counts[a] += 1;
        }
        for c in 0..k {
            if counts[c] > 0 {
                continue;
            }
            let mut worst: Option<(f64, usize)> = None;
            for i in 0..n {
                let owner = new_assignments[i];
                if counts[owner] <= 1 {
                    continue;
                }
                let dp = dot(norm.row(i), centroids.row(owner));
                match worst {
                    Some((w, _)) if dp >= w => {}
                    _ => worst = Some((dp, i)),
                }
            }
            if let Some((_, i)) = worst {
                counts[new_assignments[i]] -= 1;
                new_assignments[i] = c;
                counts[c] += 1;
            }
        }

        let converged = iterations > 0 && new_assignments == assignments;
        assignments = new_assignments;
        iterations += 1;
        if converged {
            break;
        }

        // Centroid update: renormalized mean of members, fixed index order.
        let mut sums = DenseMatrix::zeros(k, d);
        for i in 0..n {
            let c = assignments[i];
            let row = norm.row(i);
            let dst = sums.row_mut(c);
            for (v, r) in dst.iter_mut().zip(row) {
                *v += r;
            }
        }
        for c in 0..k {
            let row = sums.row_mut(c);
            let nrm = sqrt(row.iter().map(|v| v * v).sum());
            if nrm > 0.0 {
                for v in row.iter_mut() {
                    *v /= nrm;
                }
            }
        }
        centroids = sums;
    }

    let inertia = (0..n)
        .map(|i| 1.0 - dot(norm.row(i), centroids.row(assignments[i])))
        .sum();

    ClusteringResult {
        assignments,
        centroids,
        seed_indices: seeds.to_vec(),
        iterations,
        inertia,
        zero_rows,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agglomeration::FeatureStage;

    fn space(rows: Vec<Vec<f64>>) -> FeatureSpace {
        let n = rows.len();
        let d = rows[0].len();
        let data: Vec<f64> = rows.into_iter().flatten().collect();
        FeatureSpace {
            matrix: DenseMatrix::from_rows(n, d, data),
            stage: FeatureStage::Agglomerated,
        }
    }

    #[test]
    fn two_points_single_edge() {
        let f = space(vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        let g = knn_graph(&f, 1).unwrap();
        assert!(g.has_edge(0, 1));
        assert!(g.has_edge(1, 0));
        assert_eq!(g.degrees, vec![1, 1]);
    }

    #[test]
    fn collinear_chain() {
        // Distinct directions with ordered angular gaps: point 1 sits between
        // 0 and 2, so 0-1 and 1-2 are the r=1 edges after symmetrization.
        let f = space(vec![
            vec![1.0, 0.0],
            vec![0.9, 0.2],
            vec![0.2, 0.9],
        ]);
        let g = knn_graph(&f, 1).unwrap();
        assert!(g.has_edge(0, 1));
        assert!(g.has_edge(1, 2));
        assert!(!g.has_edge(0, 2));
        assert_eq!(g.degrees, vec![1, 2, 1]);
    }

    #[test]
    fn r_at_least_n_rejected() {
        let f = space(vec![vec![1.0], vec![2.0]]);
        assert!(matches!(
            knn_graph(&f, 2),
            Err(Error::TooFewRecords { .. })
        ));
    }

    #[test]
    fn matches_brute_force_oracle() {
        // Independent oracle: recompute all-pairs distances and the
        // symmetrized neighbor sets from scratch.
        let n = 40;
        let mut state = 4242_u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..4).map(|_| next()).collect()).collect();
        let f = space(rows.clone());
        for r in [1usize, 3, 5] {
            let g = knn_graph(&f, r).unwrap();
            let norm = normalize_rows(&f.matrix);
            let mut expected = vec![vec![false; n]; n];
            for i in 0..n {
                let mut cands: Vec<(f64, usize)> = (0..n)
                    .filter(|&j| j != i)
                    .map(|j| (sq_dist(norm.row(i), norm.row(j)), j))
                    .collect();
                cands.sort_by(|a, b| a.partial_cmp(b).unwrap());
                for &(_, j) in cands.iter().take(r) {
                    expected[i][j] = true;
                    expected[j][i] = true;
                }
            }
            for i in 0..n {
                for j in 0..n {
                    assert_eq!(g.has_edge(i, j), expected[i][j], "r={r} edge ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn graph_symmetric_no_diagonal() {
        let f = space(vec![
            vec![1.0, 0.1],
            vec![0.3, 1.0],
            vec![1.0, 1.0],
            vec![0.2, 0.4],
        ]);
        let g = knn_graph(&f, 2).unwrap();
        for i in 0..4 {
            assert!(!g.has_edge(i, i));
            for j in 0..4 {
                assert_eq!(g.has_edge(i, j), g.has_edge(j, i));
            }
        }
        for i in 0..4 {
            assert!(g.degrees[i] >= 2);
        }
    }

    #[test]
    fn seed_ranking_with_ties() {
        let f = space(vec![
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![0.7, 0.7],
            vec![0.7, -0.7],
        ]);
        let g = NeighborGraph {
            adjacency: vec![vec![1, 2, 3, 1, 2], vec![0, 2], vec![], vec![]],
            degrees: vec![5, 2, 9, 9],
        };
        let seeds = seed_centroids(&g, &f, 2).unwrap();
        assert_eq!(seeds, vec![2, 3]);
    }

    #[test]
    fn seed_skips_duplicate_rows() {
        let f = space(vec![
            vec![1.0, 0.0],
            vec![2.0, 0.0], // same direction as 0 after normalization
            vec![0.0, 1.0],
        ]);
        let g = NeighborGraph {
            adjacency: vec![vec![], vec![], vec![]],
            degrees: vec![9, 9, 1],
        };
        let seeds = seed_centroids(&g, &f, 2).unwrap();
        assert_eq!(seeds, vec![0, 2]);
    }

    #[test]
    fn seed_not_enough_distinct() {
        let f = space(vec![vec![1.0, 0.0], vec![3.0, 0.0]]);
        let g = NeighborGraph {
            adjacency: vec![vec![1], vec![0]],
            degrees: vec![1, 1],
        };
        assert!(matches!(
            seed_centroids(&g, &f, 2),
            Err(Error::NotEnoughDistinctSeeds { .. })
        ));
    }

    #[test]
    fn fixed_point_at_distinct_unit_vectors() {
        let f = space(vec![
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ]);
        let res = spherical_kmeans(&f, &[0, 1, 2], 100);
        assert_eq!(res.assignments, vec![0, 1, 2]);
        assert!(res.inertia.abs() < 1e-12);
    }

    #[test]
    fn antipodal_groups_perfect_split() {
        let f = space(vec![
            vec![1.0, 0.05],
            vec![1.0, -0.05],
            vec![1.0, 0.0],
            vec![-1.0, 0.05],
            vec![-1.0, -0.05],
            vec![-1.0, 0.0],
        ]);
        let res = spherical_kmeans(&f, &[0, 3], 100);
        assert_eq!(res.assignments[0], res.assignments[1]);
        assert_eq!(res.assignments[1], res.assignments[2]);
        assert_eq!(res.assignments[3], res.assignments[4]);
        assert_eq!(res.assignments[4], res.assignments[5]);
        assert_ne!(res.assignments[0], res.assignments[3]);

        // Exhaustive 2-partition oracle over all assignments.
        let norm = normalize_rows(&f.matrix);
        let n = 6;
        let mut best = f64::INFINITY;
        for mask in 0..(1u32 << n) {
            let groups: Vec<usize> = (0..n).map(|i| ((mask >> i) & 1) as usize).collect();
            if !groups.contains(&0) || !groups.contains(&1) {
                continue;
            }
            let mut obj = 0.0;
            for c in 0..2 {
                let members: Vec<usize> =
                    (0..n).filter(|&i| groups[i] == c).collect();
                let mut mean = vec![0.0; 2];
                for &i in &members {
                    for (m, v) in mean.iter_mut().zip(norm.row(i)) {
                        *m += v;
                    }
                }
                let nrm = mean.iter().map(|v| v * v).sum::<f64>().sqrt();
                if nrm > 0.0 {
                    for m in &mut mean {
                        *m /= nrm;
                    }
                }
                for &i in &members {
                    obj += 1.0 - dot(norm.row(i), &mean);
                }
            }
            best = best.min(obj);
        }
        assert!((res.inertia - best).abs() < 1e-9);
    }

    #[test]
    fn identical_records_single_cluster() {
        let f = space(vec![vec![0.6, 0.8], vec![0.6, 0.8], vec![0.6, 0.8]]);
        let res = spherical_kmeans(&f, &[0], 100);
        assert_eq!(res.assignments, vec![0, 0, 0]);
        assert!((res.centroids.get(0, 0) - 0.6).abs() < 1e-12);
        assert!((res.centroids.get(0, 1) - 0.8).abs() < 1e-12);
    }

    #[test]
    fn scale_invariance() {
        let f = space(vec![
            vec![1.0, 0.2],
            vec![0.9, 0.3],
            vec![0.1, 1.0],
            vec![0.2, 0.8],
        ]);
        let mut scaled = f.clone();
        scaled.matrix.scale(7.0);
        let g1 = knn_graph(&f, 2).unwrap();
        let g2 = knn_graph(&scaled, 2).unwrap();
        assert_eq!(g1, g2);
        let s1 = seed_centroids(&g1, &f, 2).unwrap();
        let s2 = seed_centroids(&g2, &scaled, 2).unwrap();
        assert_eq!(s1, s2);
        let r1 = spherical_kmeans(&f, &s1, 100);
        let r2 = spherical_kmeans(&scaled, &s2, 100);
        assert_eq!(r1.assignments, r2.assignments);
    }

    #[test]
    fn determinism_across_runs() {
        let f = space(vec![
            vec![1.0, 0.2, 0.1],
            vec![0.9, 0.3, 0.0],
            vec![0.1, 1.0, 0.4],
            vec![0.2, 0.8, 0.5],
            vec![0.3, 0.1, 1.0],
        ]);
        let g = knn_graph(&f, 2).unwrap();
        let seeds = seed_centroids(&g, &f, 2).unwrap();
        let a = spherical_kmeans(&f, &seeds, 100);
        let b = spherical_kmeans(&f, &seeds, 100);
        assert_eq!(a, b);
    }

    #[test]
    fn zero_rows_flagged_and_assigned() {
        let f = space(vec![vec![1.0, 0.0], vec![0.0, 0.0], vec![0.0, 1.0]]);
        let res = spherical_kmeans(&f, &[0, 2], 100);
        assert_eq!(res.zero_rows, vec![1]);
        // Zero row ties at dot 0 with every centroid; tie rule gives cluster 0.
        assert_eq!(res.assignments[1], 0);
    }
}
