//! Leader-follower communication topology and its spectral quantities.
//!
//! The follower network is a weighted undirected graph; a nonnegative vector
//! `b` records which followers additionally receive the leader state. The
//! gain conditions of the protocols depend on the smallest eigenvalue of
//! `M = Q + diag(b)`, where `Q` is the follower Laplacian. `M` is symmetric
//! positive definite whenever every follower component touches a leader
//! link.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use libm::{fabs, sqrt};

/// Errors raised while validating a topology or computing its spectrum.
#[derive(Debug, Clone, PartialEq)]
pub enum GraphError {
    SelfLoop { index: usize },
    NonPositiveWeight { i: usize, j: usize, weight: f64 },
    DuplicateEdge { i: usize, j: usize },
    EdgeOutOfRange { i: usize, j: usize, n: usize },
    NegativeLeaderLink { index: usize, weight: f64 },
    NoLeaderLink,
    LeaderLinkCount { expected: usize, got: usize },
    UnreachableFollowers { followers: Vec<usize> },
    EmptyTopology,
    NotSymmetric { i: usize, j: usize },
    NoConvergence { sweeps: usize },
}

impl fmt::Display for GraphError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphError::SelfLoop { index } => write!(f, "self-loop at follower {index}"),
            GraphError::NonPositiveWeight { i, j, weight } => {
                write!(f, "edge ({i}, {j}) has non-positive weight {weight}")
            }
            GraphError::DuplicateEdge { i, j } => {
                write!(f, "edge ({i}, {j}) specified more than once")
            }
            GraphError::EdgeOutOfRange { i, j, n } => {
                write!(f, "edge ({i}, {j}) out of range for {n} followers")
            }
            GraphError::NegativeLeaderLink { index, weight } => {
                write!(f, "leader link {index} has negative weight {weight}")
            }
            GraphError::NoLeaderLink => write!(f, "no follower has a leader link (all b_i = 0)"),
            GraphError::LeaderLinkCount { expected, got } => {
                write!(f, "expected {expected} leader-link weights, got {got}")
            }
            GraphError::UnreachableFollowers { followers } => {
                write!(f, "followers not reachable from the leader: {followers:?}")
            }
            GraphError::EmptyTopology => write!(f, "topology needs at least one follower"),
            GraphError::NotSymmetric { i, j } => {
                write!(f, "matrix is not symmetric at ({i}, {j})")
            }
            GraphError::NoConvergence { sweeps } => {
                write!(f, "eigensolver did not converge after {sweeps} sweeps")
            }
        }
    }
}

/// Small dense square matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let n = rows.len();
        let mut m = Self::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), n, "matrix rows must be square");
            for (j, &v) in row.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        m
    }

    pub fn diagonal(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                if fabs(self[(i, j)] - self[(j, i)]) > tol {
                    return false;
                }
            }
        }
        true
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let mut acc = 0.0;
            for j in 0..self.n {
                acc += self[(i, j)] * x[j];
            }
            y[i] = acc;
        }
        y
    }

    /// `x^T * self * x`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let mx = self.mul_vec(x);
        x.iter().zip(mx.iter()).map(|(a, b)| a * b).sum()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }
}

impl core::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl core::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

/// Weighted undirected follower graph plus leader links.
///
/// Edges are stored once per unordered pair; symmetry `a_ij = a_ji` is
/// enforced by construction. At least one leader link must be positive and
/// every connected follower component must contain a linked follower.
#[derive(Debug, Clone, PartialEq)]
pub struct TopologySpec {
    n_followers: usize,
    edges: Vec<(usize, usize, f64)>,
    leader_links: Vec<f64>,
}

impl TopologySpec {
    /// Builds and fully validates a topology. Edge indices are zero-based.
    pub fn new(
        n_followers: usize,
        edges: Vec<(usize, usize, f64)>,
        leader_links: Vec<f64>,
    ) -> Result<Self, GraphError> {
        if n_followers == 0 {
            return Err(GraphError::EmptyTopology);
        }
        if leader_links.len() != n_followers {
            return Err(GraphError::LeaderLinkCount {
                expected: n_followers,
                got: leader_links.len(),
            });
        }
        for (idx, &b) in leader_links.iter().enumerate() {
            if b < 0.0 || !b.is_finite() {
                return Err(GraphError::NegativeLeaderLink { index: idx, weight: b });
            }
        }
        if !leader_links.iter().any(|&b| b > 0.0) {
            return Err(GraphError::NoLeaderLink);
        }
        let mut normalized = Vec::with_capacity(edges.len());
        for &(i, j, w) in &edges {
            if i >= n_followers || j >= n_followers {
                return Err(GraphError::EdgeOutOfRange { i, j, n: n_followers });
            }
            if i == j {
                return Err(GraphError::SelfLoop { index: i });
            }
            if !(w > 0.0) || !w.is_finite() {
                return Err(GraphError::NonPositiveWeight { i, j, weight: w });
            }
            let (lo, hi) = if i < j { (i, j) } else { (j, i) };
            if normalized.iter().any(|&(a, b, _)| (a, b) == (lo, hi)) {
                return Err(GraphError::DuplicateEdge { i: lo, j: hi });
            }
            normalized.push((lo, hi, w));
        }
        let spec = Self { n_followers, edges: normalized, leader_links };
        let (ok, unreachable) = validate_root_reachability(&spec);
        if !ok {
            return Err(GraphError::UnreachableFollowers { followers: unreachable });
        }
        Ok(spec)
    }

    pub fn n_followers(&self) -> usize {
        self.n_followers
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn leader_links(&self) -> &[f64] {
        &self.leader_links
    }
}

/// Adjacency, Laplacian, leader-augmented matrix and its smallest eigenvalue.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionMatrices {
    pub adjacency: Matrix,
    pub laplacian: Matrix,
    pub leader_matrix: Matrix,
    pub lambda_min: f64,
}

/// Assembles `A`, `Q = Delta - A`, `M = Q + diag(b)` and `lambda_min(M)`
/// from a validated topology.
pub fn build_matrices(spec: &TopologySpec) -> ConnectionMatrices {
    let n = spec.n_followers;
    let mut adjacency = Matrix::zeros(n);
    for &(i, j, w) in &spec.edges {
        adjacency[(i, j)] = w;
        adjacency[(j, i)] = w;
    }
    let mut laplacian = Matrix::zeros(n);
    for i in 0..n {
        let degree: f64 = (0..n).map(|j| adjacency[(i, j)]).sum();
        for j in 0..n {
            laplacian[(i, j)] = if i == j { degree } else { 0.0 } - adjacency[(i, j)];
        }
    }
    let mut leader_matrix = laplacian.clone();
    for i in 0..n {
        leader_matrix[(i, i)] += spec.leader_links[i];
    }
    let lambda_min = min_eigenvalue(&leader_matrix)
        .expect("validated topology yields a symmetric leader matrix");
    ConnectionMatrices { adjacency, laplacian, leader_matrix, lambda_min }
}

/// True iff every connected follower component contains a follower with a
/// positive leader link; the second return lists the followers of
/// components that do not.
pub fn validate_root_reachability(spec: &TopologySpec) -> (bool, Vec<usize>) {
    let n = spec.n_followers;
    // Flood-fill from every leader-linked follower over follower edges.
    let mut reached = vec![false; n];
    let mut stack: Vec<usize> = (0..n).filter(|&i| spec.leader_links[i] > 0.0).collect();
    for &i in &stack {
        reached[i] = true;
    }
    while let Some(i) = stack.pop() {
        for &(a, b, _) in &spec.edges {
            let other = if a == i {
                b
            } else if b == i {
                a
            } else {
                continue;
            };
            if !reached[other] {
                reached[other] = true;
                stack.push(other);
            }
        }
    }
    let unreachable: Vec<usize> = (0..n).filter(|&i| !reached[i]).collect();
    (unreachable.is_empty(), unreachable)
}

const JACOBI_MAX_SWEEPS: usize = 100;

/// Smallest eigenvalue of a symmetric matrix, by cyclic Jacobi rotations.
///
/// Deterministic, dependency-free, and accurate to about 1e-12 relative for
/// the small well-conditioned matrices that arise here (the contract asks
/// for 1e-9).
pub fn min_eigenvalue(m: &Matrix) -> Result<f64, GraphError> {
    let n = m.n();
    if n == 1 {
        return Ok(m[(0, 0)]);
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let scale = 1.0f64.max(fabs(m[(i, j)])).max(fabs(m[(j, i)]));
            if fabs(m[(i, j)] - m[(j, i)]) > 1e-12 * scale {
                return Err(GraphError::NotSymmetric { i, j });
            }
        }
    }
    let mut a = m.clone();
    // Symmetrize exactly so rotations preserve symmetry bit-for-bit.
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = avg;
            a[(j, i)] = avg;
        }
    }
    for sweep in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += a[(i, j)] * a[(i, j)];
            }
        }
        if sqrt(off) < 1e-15 * frobenius(&a).max(f64::MIN_POSITIVE) {
            let mut lambda = a[(0, 0)];
            for i in 1..n {
                lambda = lambda.min(a[(i, i)]);
            }
            return Ok(lambda);
        }
        for p in 0..n {
            for q in (p + 1)..n {
                jacobi_rotate(&mut a, p, q);
            }
        }
        let _ = sweep;
    }
    Err(GraphError::NoConvergence { sweeps: JACOBI_MAX_SWEEPS })
}

fn frobenius(a: &Matrix) -> f64 {
    let mut acc = 0.0;
    for i in 0..a.n() {
        for j in 0..a.n() {
            acc += a[(i, j)] * a[(i, j)];
        }
    }
    sqrt(acc)
}

fn jacobi_rotate(a: &mut Matrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    if apq == 0.0 {
        return;
    }
    let app = a[(p, p)];
    let aqq = a[(q, q)];
    let theta = (aqq - app) / (2.0 * apq);
    // Stable tangent of the rotation angle.
    let t = if theta >= 0.0 {
        1.0 / (theta + sqrt(1.0 + theta * theta))
    } else {
        -1.0 / (-theta + sqrt(1.0 + theta * theta))
    };
    let c = 1.0 / sqrt(1.0 + t * t);
    let s = t * c;
    let n = a.n();
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = c * akp - s * akq;
        a[(k, q)] = s * akp + c * akq;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = c * apk - s * aqk;
        a[(q, k)] = s * apk + c * aqk;
    }
    a[(p, q)] = 0.0;
    a[(q, p)] = 0.0;
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn single_follower_identity_case() {
        let spec = TopologySpec::new(1, vec![], vec![1.0]).unwrap();
        let m = build_matrices(&spec);
        assert_eq!(m.laplacian[(0, 0)], 0.0);
        assert_eq!(m.leader_matrix[(0, 0)], 1.0);
        assert_eq!(m.lambda_min, 1.0);
    }

    #[test]
    fn two_follower_example() {
        let spec = TopologySpec::new(2, vec![(0, 1, 1.0)], vec![1.0, 0.0]).unwrap();
        let m = build_matrices(&spec);
        assert_eq!(m.laplacian.row(0), &[1.0, -1.0]);
        assert_eq!(m.laplacian.row(1), &[-1.0, 1.0]);
        assert_eq!(m.leader_matrix.row(0), &[2.0, -1.0]);
        assert_eq!(m.leader_matrix.row(1), &[-1.0, 1.0]);
        // Roots of lambda^2 - 3*lambda + 1: (3 - sqrt(5))/2.
        let expected = 0.381_966_011_250_105_15;
        assert!((m.lambda_min - expected).abs() < 1e-9 * expected);
    }

    #[test]
    fn laplacian_rows_sum_to_zero() {
        let spec = TopologySpec::new(
            5,
            vec![(0, 1, 1.0), (0, 3, 1.0), (1, 4, 1.0), (2, 3, 1.0), (3, 4, 1.0)],
            vec![1.0, 0.0, 0.0, 0.0, 1.0],
        )
        .unwrap();
        let m = build_matrices(&spec);
        for i in 0..5 {
            let s: f64 = m.laplacian.row(i).iter().sum();
            assert!(s.abs() < 1e-12);
        }
        assert!(m.leader_matrix.is_symmetric(0.0));
        assert!(m.lambda_min > 0.0);
    }

    #[test]
    fn min_eigenvalue_trivial_cases() {
        assert_eq!(min_eigenvalue(&Matrix::identity(3)).unwrap(), 1.0);
        let d = Matrix::diagonal(&[0.2907, 5.0, 9.0]);
        assert_eq!(min_eigenvalue(&d).unwrap(), 0.2907);
    }

    #[test]
    fn min_eigenvalue_rejects_asymmetric() {
        let m = Matrix::from_rows(&[&[1.0, 2.0], &[3.0, 1.0]]);
        assert!(matches!(min_eigenvalue(&m), Err(GraphError::NotSymmetric { .. })));
    }

    #[test]
    fn reachability_cases() {
        // Two components, only one with a leader link.
        let spec = TopologySpec {
            n_followers: 4,
            edges: vec![(0, 1, 1.0), (2, 3, 1.0)],
            leader_links: vec![1.0, 0.0, 0.0, 0.0],
        };
        let (ok, missing) = validate_root_reachability(&spec);
        assert!(!ok);
        assert_eq!(missing, vec![2, 3]);
        // Constructor rejects the same spec.
        assert!(matches!(
            TopologySpec::new(4, vec![(0, 1, 1.0), (2, 3, 1.0)], vec![1.0, 0.0, 0.0, 0.0]),
            Err(GraphError::UnreachableFollowers { .. })
        ));

        let spec = TopologySpec::new(3, vec![(0, 1, 1.0), (1, 2, 1.0)], vec![1.0, 0.0, 0.0])
            .unwrap();
        assert!(validate_root_reachability(&spec).0);

        let path5 = TopologySpec::new(
            5,
            vec![(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 4, 1.0)],
            vec![1.0, 0.0, 0.0, 0.0, 0.0],
        )
        .unwrap();
        assert!(validate_root_reachability(&path5).0);
    }

    #[test]
    fn disconnected_with_full_leader_coverage_accepted() {
        // No follower edges at all, every component (singleton) linked.
        let spec = TopologySpec::new(3, vec![], vec![1.0, 2.0, 0.5]).unwrap();
        let m = build_matrices(&spec);
        assert_eq!(m.lambda_min, 0.5);
    }

    #[test]
    fn construction_rejections() {
        assert!(matches!(
            TopologySpec::new(2, vec![(0, 0, 1.0)], vec![1.0, 0.0]),
            Err(GraphError::SelfLoop { .. })
        ));
        assert!(matches!(
            TopologySpec::new(2, vec![(0, 1, -1.0)], vec![1.0, 0.0]),
            Err(GraphError::NonPositiveWeight { .. })
        ));
        assert!(matches!(
            TopologySpec::new(2, vec![(0, 1, 1.0), (1, 0, 2.0)], vec![1.0, 0.0]),
            Err(GraphError::DuplicateEdge { .. })
        ));
        assert!(matches!(
            TopologySpec::new(2, vec![(0, 1, 1.0)], vec![0.0, 0.0]),
            Err(GraphError::NoLeaderLink)
        ));
        assert!(matches!(
            TopologySpec::new(0, vec![], vec![]),
            Err(GraphError::EmptyTopology)
        ));
    }
}
