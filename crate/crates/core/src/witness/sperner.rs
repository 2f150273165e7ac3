//! Kuhn subdivisions of the standard simplex and Sperner labelings.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Vertex labeling rule for a [`SimplexGrid`].
#[derive(Debug, Clone, PartialEq)]
pub enum Labeling {
    /// Largest barycentric coordinate, lowest index on ties.
    Nearest,
    /// Interior vertices get label 0, boundary vertices follow [`Labeling::Nearest`].
    ConstantInterior,
    /// One label per vertex in enumeration order.
    Explicit(Vec<usize>),
}

/// Kuhn subdivision of the standard `n`-simplex at resolution `k` with a labeling.
///
/// Vertices are integer points `k ≥ y_1 ≥ … ≥ y_n ≥ 0` in lexicographic order, with
/// barycentric weights `(k - y_1, y_1 - y_2, …, y_n)/k`.
#[derive(Debug, Clone)]
pub struct SimplexGrid {
    n: usize,
    k: usize,
    vertices: Vec<Vec<usize>>,
    index: HashMap<Vec<usize>, usize>,
    labels: Vec<usize>,
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn rec(cur: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if cur.len() == used.len() {
            out.push(cur.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                cur.push(i);
                rec(cur, used, out);
                cur.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

impl SimplexGrid {
    pub fn new(n: usize, k: usize, labeling: Labeling) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("resolution must be positive"));
        }
        let mut vertices = Vec::new();
        let mut cur = vec![0usize; n];
        fn rec(pos: usize, upper: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if pos == cur.len() {
                out.push(cur.clone());
                return;
            }
            for y in 0..=upper {
                cur[pos] = y;
                rec(pos + 1, y, cur, out);
            }
        }
        rec(0, k, &mut cur, &mut vertices);
        vertices.sort();
        let index = vertices.iter().enumerate().map(|(i, v)| (v.clone(), i)).collect();
        let mut grid = SimplexGrid { n, k, vertices, index, labels: Vec::new() };
        grid.labels = match labeling {
            Labeling::Nearest => (0..grid.len()).map(|v| grid.nearest_label(v)).collect(),
            Labeling::ConstantInterior => (0..grid.len())
                .map(|v| if grid.carrier(v).len() == n + 1 { 0 } else { grid.nearest_label(v) })
                .collect(),
            Labeling::Explicit(labels) => {
                if labels.len() != grid.len() {
                    return Err(Error::invalid(format!(
                        "expected {} labels, got {}",
                        grid.len(),
                        labels.len()
                    )));
                }
                labels
            }
        };
        if let Some(v) = (0..grid.len()).find(|&v| !grid.carrier(v).contains(&grid.labels[v])) {
            return Err(Error::invalid(format!(
                "labeling is not Sperner-admissible: vertex {v} with weights {:?} has label {}",
                grid.barycentric(v),
                grid.labels[v]
            )));
        }
        Ok(grid)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn resolution(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertex(&self, v: usize) -> &[usize] {
        &self.vertices[v]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Integer barycentric weights summing to `k`.
    pub fn barycentric(&self, v: usize) -> Vec<usize> {
        let y = &self.vertices[v];
        let mut out = Vec::with_capacity(self.n + 1);
        out.push(self.k - y.first().copied().unwrap_or(0));
        for i in 0..self.n {
            out.push(y[i] - y.get(i + 1).copied().unwrap_or(0));
        }
        out
    }

    /// Indices of the simplex vertices whose weight is positive.
    pub fn carrier(&self, v: usize) -> Vec<usize> {
        self.barycentric(v).iter().enumerate().filter(|(_, &w)| w > 0).map(|(i, _)| i).collect()
    }

    fn nearest_label(&self, v: usize) -> usize {
        let b = self.barycentric(v);
        let max = *b.iter().max().expect("non-empty");
        b.iter().position(|&w| w == max).expect("max exists")
    }

    /// All `k^n` top-dimensional cells as sorted-by-construction vertex lists.
    pub fn cells(&self) -> Vec<Vec<usize>> {
        if self.n == 0 {
            return vec![vec![0]];
        }
        let perms = permutations(self.n);
        let mut bases = vec![vec![0usize; self.n]];
        for axis in 0..self.n {
            bases = bases
                .into_iter()
                .flat_map(|b| {
                    (0..self.k).map(move |y| {
                        let mut b = b.clone();
                        b[axis] = y;
                        b
                    })
                })
                .collect();
        }
        let mut cells = Vec::new();
        for base in &bases {
            'perm: for p in &perms {
                let mut cur = base.clone();
                let mut cell = Vec::with_capacity(self.n + 1);
                match self.index.get(&cur) {
                    Some(&i) => cell.push(i),
                    None => continue,
                }
                for &axis in p {
                    cur[axis] += 1;
                    match self.index.get(&cur) {
                        Some(&i) => cell.push(i),
                        None => continue 'perm,
                    }
                }
                cells.push(cell);
            }
        }
        cells
    }

    /// Cells whose vertices carry all `n+1` labels.
    pub fn fully_labeled(&self) -> Vec<Vec<usize>> {
        self.cells()
            .into_par_iter()
            .filter(|c| {
                let mut seen = vec![false; self.n + 1];
                c.iter().for_each(|&v| seen[self.labels[v]] = true);
                seen.iter().all(|&s| s)
            })
            .collect()
    }
}

/// First fully-labeled cell in enumeration order.
pub fn sperner_find(grid: &SimplexGrid) -> Result<Vec<usize>> {
    grid.fully_labeled()
        .into_iter()
        .next()
        .ok_or_else(|| Error::Internal("admissible labeling without a fully-labeled cell".into()))
}
