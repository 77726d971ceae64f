//! k-medoids++ over cosine distance.
//!
//! Seeding follows k-means++ (first medoid uniform, then sampling by squared
//! distance to the nearest chosen medoid); refinement alternates nearest-medoid
//! assignment with per-cluster medoid updates until the medoid set stops
//! changing. Every tie resolves to the lowest frame index.

use itertools::Itertools;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::kernels::{cosine_distance, norm, Matrix};

pub const DEFAULT_MAX_ITER: usize = 100;

/// Largest number of subsets [`brute_force_medoids`] will enumerate.
pub const BRUTE_FORCE_LIMIT: u128 = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterOutcome {
    /// Medoid frame indices, ascending; cluster `j` is represented by `medoid_indices[j]`.
    pub medoid_indices: Vec<usize>,
    /// Cluster id of every point.
    pub assignment: Vec<usize>,
    /// Sum over points of the distance to their medoid.
    pub cost: f64,
    /// Update rounds performed, including the final one that changed nothing.
    pub iterations: usize,
    /// Cost after the initial assignment and after every accepted update.
    pub cost_trace: Vec<f64>,
}

/// Pairwise cosine distances.
fn distance_matrix(points: &Matrix) -> Result<Vec<Vec<f64>>> {
    if let Some(i) = points.iter_rows().position(|r| norm(r) == 0.0) {
        return Err(Error::domain(format!("point {i} has zero norm")));
    }
    let n = points.rows();
    let mut dist = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let d = cosine_distance(points.row(i), points.row(j))?;
            dist[i][j] = d;
            dist[j][i] = d;
        }
    }
    Ok(dist)
}

/// Nearest medoid per point (lowest cluster id on ties; medoids keep their own
/// cluster) and the resulting cost.
fn assign(dist: &[Vec<f64>], medoids: &[usize]) -> (Vec<usize>, f64) {
    let mut assignment = Vec::with_capacity(dist.len());
    let mut cost = 0.0;
    for (i, row) in dist.iter().enumerate() {
        let cluster = match medoids.iter().position(|&m| m == i) {
            Some(own) => own,
            None => {
                let mut best = 0;
                for (j, &m) in medoids.iter().enumerate().skip(1) {
                    if row[m] < row[medoids[best]] {
                        best = j;
                    }
                }
                best
            }
        };
        cost += row[medoids[cluster]];
        assignment.push(cluster);
    }
    (assignment, cost)
}

/// The cluster member with the smallest distance sum to the rest of its cluster.
fn best_member(dist: &[Vec<f64>], members: &[usize]) -> usize {
    let mut best = members[0];
    let mut best_sum = f64::INFINITY;
    for &c in members {
        let s: f64 = members.iter().map(|&m| dist[c][m]).sum();
        if s < best_sum {
            best = c;
            best_sum = s;
        }
    }
    best
}

fn seed_medoids(dist: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = dist.len();
    // Exact duplicates are interchangeable; always take the first of them.
    let canonical = |i: usize, chosen: &[usize]| {
        (0..=i).find(|&j| dist[i][j] == 0.0 && !chosen.contains(&j)).unwrap_or(i)
    };

    let first = rng.random_range(0..n);
    let mut chosen = vec![canonical(first, &[])];
    let mut nearest: Vec<f64> = dist[chosen[0]].clone();

    while chosen.len() < k {
        let weights: Vec<f64> = nearest.iter().map(|d| d * d).collect();
        let total: f64 = weights.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = None;
            for (i, &w) in weights.iter().enumerate() {
                if w <= 0.0 {
                    continue;
                }
                pick = Some(i);
                if target < w {
                    break;
                }
                target -= w;
            }
            canonical(pick.unwrap(), &chosen)
        } else {
            (0..n).find(|i| !chosen.contains(i)).unwrap()
        };
        chosen.push(pick);
        for (nd, &d) in nearest.iter_mut().zip(&dist[pick]) {
            *nd = nd.min(d);
        }
    }
    chosen.sort_unstable();
    chosen
}

/// Clusters the rows of `points` into `k` groups around actual points.
pub fn kmedoids(points: &Matrix, k: usize, seed: u64, max_iter: usize) -> Result<ClusterOutcome> {
    let n = points.rows();
    if k == 0 || k > n {
        return Err(Error::domain(format!("k must lie in [1, {n}], got {k}")));
    }
    let dist = distance_matrix(points)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut medoids = seed_medoids(&dist, k, &mut rng);
    let (mut assignment, mut cost) = assign(&dist, &medoids);
    let mut cost_trace = vec![cost];
    let mut iterations = 0;

    while iterations < max_iter {
        iterations += 1;
        let mut updated: Vec<usize> = (0..k)
            .map(|j| {
                let members: Vec<usize> = (0..n).filter(|&i| assignment[i] == j).collect();
                best_member(&dist, &members)
            })
            .collect();
        updated.sort_unstable();
        if updated == medoids {
            break;
        }
        medoids = updated;
        (assignment, cost) = assign(&dist, &medoids);
        cost_trace.push(cost);
    }

    Ok(ClusterOutcome { medoid_indices: medoids, assignment, cost, iterations, cost_trace })
}

/// `Σ_i (1 - cos(point_i, medoid_{assignment(i)}))`.
pub fn clustering_cost(points: &Matrix, medoid_indices: &[usize], assignment: &[usize]) -> Result<f64> {
    if assignment.len() != points.rows() {
        return Err(Error::shape(format!(
            "{} assignments for {} points",
            assignment.len(),
            points.rows()
        )));
    }
    let mut cost = 0.0;
    for (i, &c) in assignment.iter().enumerate() {
        let m = *medoid_indices
            .get(c)
            .ok_or_else(|| Error::shape(format!("point {i} assigned to missing cluster {c}")))?;
        if m >= points.rows() {
            return Err(Error::shape(format!("medoid index {m} out of range")));
        }
        cost += cosine_distance(points.row(i), points.row(m))?;
    }
    Ok(cost)
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k) as u128;
    let n = n as u128;
    (0..k).fold(1u128, |acc, i| acc * (n - i) / (i + 1))
}

/// Exhaustive minimum-cost medoid set; the lexicographically smallest set wins ties.
pub fn brute_force_medoids(points: &Matrix, k: usize) -> Result<(Vec<usize>, f64)> {
    let n = points.rows();
    if k == 0 || k > n {
        return Err(Error::domain(format!("k must lie in [1, {n}], got {k}")));
    }
    let subsets = binomial(n, k);
    if subsets > BRUTE_FORCE_LIMIT {
        return Err(Error::domain(format!("C({n}, {k}) = {subsets} exceeds the enumeration bound")));
    }
    let dist = distance_matrix(points)?;
    let mut best: Option<(Vec<usize>, f64)> = None;
    for set in (0..n).combinations(k) {
        let cost: f64 = dist
            .iter()
            .map(|row| set.iter().map(|&m| row[m]).fold(f64::INFINITY, f64::min))
            .sum();
        if best.as_ref().is_none_or(|(_, b)| cost < *b) {
            best = Some((set, cost));
        }
    }
    Ok(best.unwrap())
}
