//! Point sets, clusterings and the small numeric kernels everything else is built on.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch { what: "matrix buffer", expected: rows * cols, found: data.len() });
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from equally long rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::DimensionMismatch { expected: cols, found: r.len() });
            }
            data.extend_from_slice(r);
        }
        Ok(Self { rows: rows.len(), cols, data })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        // chunks_exact panics on a zero chunk size
        (0..self.rows).map(move |i| self.row(i))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.iter_rows().map(<[f64]>::to_vec).collect()
    }
}

/// A k-means input: `n` points in `d` dimensions with optional ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    points: Matrix,
    labels: Option<Vec<usize>>,
    name: String,
}

impl Instance {
    /// Validates finiteness, non-emptiness and (when given) that labels cover `0..k`.
    pub fn new(points: Matrix, labels: Option<Vec<usize>>, name: impl Into<String>) -> Result<Self> {
        if points.rows() == 0 || points.cols() == 0 {
            return Err(Error::InvalidParameter(format!(
                "instance must have n >= 1 and d >= 1 (got {}x{})",
                points.rows(),
                points.cols()
            )));
        }
        for (i, row) in points.iter_rows().enumerate() {
            if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFiniteValue { row: i, column: j });
            }
        }
        if let Some(labels) = &labels {
            if labels.len() != points.rows() {
                return Err(Error::SizeMismatch { left: points.rows(), right: labels.len() });
            }
            let k = labels.iter().max().map_or(0, |m| m + 1);
            let mut seen = vec![false; k];
            for &l in labels {
                seen[l] = true;
            }
            if let Some(missing) = seen.iter().position(|s| !s) {
                return Err(Error::EmptyCluster(missing));
            }
        }
        Ok(Self { points, labels, name: name.into() })
    }

    pub fn unlabeled(points: Matrix) -> Result<Self> {
        Self::new(points, None, "")
    }

    /// Convenience constructor for 1-D data, used heavily in tests.
    pub fn from_scalars(values: &[f64]) -> Result<Self> {
        Self::unlabeled(Matrix::from_vec(values.len(), 1, values.to_vec())?)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.points.rows()
    }

    #[inline]
    pub fn d(&self) -> usize {
        self.points.cols()
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        self.points.row(i)
    }

    pub fn points(&self) -> &Matrix {
        &self.points
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    /// Number of distinct ground-truth labels, 0 when unlabeled.
    pub fn label_count(&self) -> usize {
        self.labels.as_ref().and_then(|l| l.iter().max()).map_or(0, |m| m + 1)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn with_labels(self, labels: Option<Vec<usize>>) -> Result<Self> {
        Self::new(self.points, labels, self.name)
    }

    /// Sub-instance on the given point indices, labels carried along.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let mut data = Vec::with_capacity(indices.len() * self.d());
        for &i in indices {
            data.extend_from_slice(self.point(i));
        }
        let points = Matrix::from_vec(indices.len(), self.d(), data)?;
        let labels = self.labels.as_ref().map(|l| indices.iter().map(|&i| l[i]).collect::<Vec<_>>());
        // a subset may drop whole labels; only keep them when still dense
        let labels = labels.filter(|l| {
            let k = l.iter().max().map_or(0, |m| m + 1);
            let mut seen = vec![false; k];
            l.iter().for_each(|&x| seen[x] = true);
            seen.iter().all(|&s| s)
        });
        Self::new(points, labels, self.name.clone())
    }
}

/// A k-clustering: assignment, the centroid of every cluster and the objective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clustering {
    pub assignment: Vec<usize>,
    pub centers: Matrix,
    pub cost: f64,
    pub k: usize,
    /// Cluster ids that received no points. Their center row is a sentinel (all NaN).
    pub empty_clusters: Vec<usize>,
}

impl Clustering {
    /// Recomputes centroids of `assignment` and the objective against them.
    pub fn from_assignment(inst: &Instance, assignment: Vec<usize>, k: usize) -> Result<Self> {
        if assignment.len() != inst.n() {
            return Err(Error::SizeMismatch { left: inst.n(), right: assignment.len() });
        }
        if let Some(&bad) = assignment.iter().find(|&&a| a >= k) {
            return Err(Error::InvalidParameter(format!("cluster id {bad} out of range for k = {k}")));
        }
        let (centers, empty_clusters) = crate::kmeans::centroids(inst, &assignment, k);
        let cost = assigned_cost(inst, &assignment, &centers);
        Ok(Self { assignment, centers, cost, k, empty_clusters })
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &a in &self.assignment {
            sizes[a] += 1;
        }
        sizes
    }

    pub fn members(&self, cluster: usize) -> Vec<usize> {
        self.assignment.iter().enumerate().filter(|(_, &a)| a == cluster).map(|(i, _)| i).collect()
    }

    /// Same partition up to relabeling.
    pub fn same_partition(&self, other: &[usize]) -> bool {
        same_partition(&self.assignment, other)
    }
}

/// True when the two label vectors induce the same partition of the points.
pub fn same_partition(a: &[usize], b: &[usize]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let ka = a.iter().max().map_or(0, |m| m + 1);
    let kb = b.iter().max().map_or(0, |m| m + 1);
    let mut fwd = vec![usize::MAX; ka];
    let mut back = vec![usize::MAX; kb];
    for (&x, &y) in a.iter().zip(b) {
        if fwd[x] == usize::MAX && back[y] == usize::MAX {
            fwd[x] = y;
            back[y] = x;
        } else if fwd[x] != y || back[y] != x {
            return false;
        }
    }
    true
}

/// Objective of a fixed assignment against fixed centers.
pub fn assigned_cost(inst: &Instance, assignment: &[usize], centers: &Matrix) -> f64 {
    let terms: Vec<f64> = assignment.iter().enumerate().map(|(i, &a)| sq_dist(inst.point(i), centers.row(a))).collect();
    pairwise_sum(&terms)
}

#[inline]
pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    sq_dist(a, b).sqrt()
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

const PAIRWISE_BLOCK: usize = 8;

/// Pairwise (cascade) summation. The split tree depends only on the length,
/// so equal inputs always give bit-identical results.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= PAIRWISE_BLOCK {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}
