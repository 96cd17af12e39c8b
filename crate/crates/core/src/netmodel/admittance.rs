use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::{Error, Result, C64};

/// Symmetric complex nodal admittance matrix in per-unit siemens.
///
/// One value is stored per unordered index pair `(i, j)` with `i <= j`;
/// pairs that are absent are zero. Off-diagonal entries follow the usual
/// sign convention `Y[i,j] = -y_ij`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmittanceMatrix {
    labels: Vec<String>,
    entries: BTreeMap<(usize, usize), C64>,
}

fn key(i: usize, j: usize) -> (usize, usize) {
    if i <= j {
        (i, j)
    } else {
        (j, i)
    }
}

impl AdmittanceMatrix {
    /// All-zero matrix over the given bus labels.
    pub fn zeros(labels: Vec<String>) -> Self {
        Self { labels, entries: BTreeMap::new() }
    }

    /// All-zero matrix labelled `0..n`.
    pub fn zeros_indexed(n: usize) -> Self {
        Self::zeros((0..n).map(|i| i.to_string()).collect())
    }

    /// Builds from a dense matrix, reading the upper triangle.
    ///
    /// Exact zeros are not stored. Callers are expected to pass symmetric
    /// input; any asymmetry in the lower triangle is discarded.
    pub fn from_dense(labels: Vec<String>, m: &DMatrix<C64>) -> Result<Self> {
        let n = labels.len();
        if m.shape() != (n, n) {
            return Err(Error::Dimension(format!(
                "{} labels for a {}x{} matrix",
                n,
                m.nrows(),
                m.ncols()
            )));
        }
        let mut out = Self::zeros(labels);
        for j in 0..n {
            for i in 0..=j {
                let v = m[(i, j)];
                if v != C64::new(0.0, 0.0) {
                    out.entries.insert((i, j), v);
                }
            }
        }
        Ok(out)
    }

    /// Same as [`from_dense`](Self::from_dense) but averages `M` and `M^T`.
    pub fn from_dense_symmetrized(labels: Vec<String>, m: &DMatrix<C64>) -> Result<Self> {
        Self::from_dense(labels, &crate::linalg::symmetric_part(m))
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.entries.get(&key(i, j)).copied().unwrap_or_default()
    }

    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        assert!(i < self.n() && j < self.n(), "index out of range");
        if v == C64::new(0.0, 0.0) {
            self.entries.remove(&key(i, j));
        } else {
            self.entries.insert(key(i, j), v);
        }
    }

    pub fn add(&mut self, i: usize, j: usize, v: C64) {
        let cur = self.get(i, j);
        self.set(i, j, cur + v);
    }

    /// Stored `(i, j, value)` triples with `i <= j`, ascending.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        self.entries.iter().map(|(&(i, j), &v)| (i, j, v))
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let n = self.n();
        let mut m = DMatrix::zeros(n, n);
        for (&(i, j), &v) in &self.entries {
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
        m
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.values().fold(0.0, |a, v| a.max(v.norm()))
    }

    pub fn row_sum(&self, i: usize) -> C64 {
        (0..self.n()).map(|j| self.get(i, j)).sum()
    }

    /// Every row sums to zero within `rtol * max|entry|`.
    pub fn has_zero_row_sums(&self, rtol: f64) -> bool {
        let tol = rtol * self.max_abs();
        (0..self.n()).all(|i| self.row_sum(i).norm() <= tol)
    }

    /// Principal submatrix over `idx`, in that order.
    pub fn submatrix(&self, idx: &[usize]) -> Self {
        let labels = idx.iter().map(|&i| self.labels[i].clone()).collect();
        let mut out = Self::zeros(labels);
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate().skip(a) {
                let v = self.get(i, j);
                if v != C64::new(0.0, 0.0) {
                    out.entries.insert((a, b), v);
                }
            }
        }
        out
    }

    /// Largest elementwise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.n(), other.n(), "max_abs_diff: size mismatch");
        let mut worst: f64 = 0.0;
        for j in 0..self.n() {
            for i in 0..=j {
                worst = worst.max((self.get(i, j) - other.get(i, j)).norm());
            }
        }
        worst
    }

    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        for v in out.entries.values_mut() {
            *v *= c;
        }
        out.entries.retain(|_, v| *v != C64::new(0.0, 0.0));
        out
    }

    pub fn relabel(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n() {
            return Err(Error::Dimension(format!("{} labels for n = {}", labels.len(), self.n())));
        }
        self.labels = labels;
        Ok(self)
    }

    /// Serialises to the shared matrix exchange document.
    pub fn to_json(&self) -> String {
        let doc = MatrixDoc {
            n: self.n(),
            labels: self.labels.clone(),
            entries: self.entries().map(|(i, j, v)| EntryDoc { i, j, re: v.re, im: v.im }).collect(),
        };
        let mut s = serde_json::to_string_pretty(&doc).expect("matrix document serialises");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: MatrixDoc = serde_json::from_str(text)?;
        if doc.labels.len() != doc.n {
            return Err(Error::Invalid(format!("n = {} but {} labels", doc.n, doc.labels.len())));
        }
        let mut out = Self::zeros(doc.labels);
        for e in doc.entries {
            if !(e.i <= e.j && e.j < doc.n) {
                return Err(Error::Invalid(format!("entry ({}, {}) outside 0 <= i <= j < {}", e.i, e.j, doc.n)));
            }
            if out.entries.insert((e.i, e.j), C64::new(e.re, e.im)).is_some() {
                return Err(Error::Invalid(format!("duplicate entry ({}, {})", e.i, e.j)));
            }
        }
        Ok(out)
    }
}

#[derive(Serialize, Deserialize)]
struct MatrixDoc {
    n: usize,
    labels: Vec<String>,
    entries: Vec<EntryDoc>,
}

#[derive(Serialize, Deserialize)]
struct EntryDoc {
    i: usize,
    j: usize,
    re: f64,
    im: f64,
}
