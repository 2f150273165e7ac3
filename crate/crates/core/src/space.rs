//! Finite pseudometric spaces and maps between them.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Tolerance used for strict and non-strict distance comparisons.
pub const DIST_TOL: f64 = 1e-12;

/// Tolerance for validating the triangle inequality of user-supplied matrices.
pub const TRIANGLE_TOL: f64 = 1e-9;

/// Axis-aligned lattice sample of a box in ℝⁿ.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    pub step: f64,
    counts: Vec<usize>,
}

impl GridSpec {
    pub fn new(min: Vec<f64>, max: Vec<f64>, step: f64) -> Result<Self> {
        if min.is_empty() || min.len() != max.len() {
            return Err(Error::invalid("grid bounds must be non-empty and of equal dimension"));
        }
        if !(step > 0.0) || !step.is_finite() {
            return Err(Error::invalid(format!("grid step must be positive, got {step}")));
        }
        let mut counts = Vec::with_capacity(min.len());
        for (lo, hi) in min.iter().zip(&max) {
            if !(hi >= lo) || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::invalid(format!("grid bounds [{lo}, {hi}] are invalid")));
            }
            counts.push(((hi - lo) / step + 1e-9).floor() as usize + 1);
        }
        let total = counts.iter().try_fold(1usize, |acc, &c| acc.checked_mul(c));
        match total {
            Some(t) if t <= 50_000_000 => {}
            _ => return Err(Error::ResourceLimit("grid has more than 5e7 points".into())),
        }
        Ok(GridSpec { min, max, step, counts })
    }

    /// Cube `[lo, hi]^dim` with the given step.
    pub fn cube(dim: usize, lo: f64, hi: f64, step: f64) -> Result<Self> {
        GridSpec::new(vec![lo; dim], vec![hi; dim], step)
    }

    pub fn dim(&self) -> usize {
        self.min.len()
    }

    /// Number of lattice points along each axis.
    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Multi-index of a flat index; the first axis varies slowest.
    pub fn multi_index(&self, mut i: usize) -> Vec<usize> {
        let mut out = vec![0; self.dim()];
        for k in (0..self.dim()).rev() {
            out[k] = i % self.counts[k];
            i /= self.counts[k];
        }
        out
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        multi
            .iter()
            .zip(&self.counts)
            .fold(0, |acc, (&m, &c)| acc * c + m)
    }

    pub fn coord(&self, i: usize) -> Vec<f64> {
        self.multi_index(i)
            .iter()
            .zip(&self.min)
            .map(|(&m, lo)| lo + m as f64 * self.step)
            .collect()
    }
}

/// How distances of a [`Space`] are produced.
#[derive(Debug, Clone, PartialEq)]
pub enum Backing {
    /// Explicit symmetric distance matrix, row-major.
    Matrix { dist: Vec<f64> },
    /// Lattice sample with Euclidean distance.
    Grid { spec: GridSpec },
    /// Arbitrary Euclidean point cloud, row-major coordinates.
    Points { dim: usize, coords: Vec<f64> },
    /// Tree with unit edge lengths.
    Tree(TreeData),
    /// Points of the hyperbolic plane of curvature `kappa` in polar coordinates `(r, phi)`.
    HyperbolicPolar { kappa: f64, points: Vec<(f64, f64)> },
    /// Restriction of a parent space to the listed indices.
    Subspace { parent: Arc<Space>, indices: Vec<u32> },
    /// Cartesian product with the max metric; index `a * |right| + b`.
    Product { left: Arc<Space>, right: Arc<Space> },
}

/// Rooted-at-zero tree with binary-lifting ancestor tables.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeData {
    pub adjacency: Vec<Vec<u32>>,
    depth: Vec<u32>,
    up: Vec<Vec<u32>>,
}

impl TreeData {
    fn new(n: usize, edges: &[(u32, u32)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("tree must have at least one vertex"));
        }
        if edges.len() + 1 != n {
            return Err(Error::invalid(format!(
                "a tree on {n} vertices needs {} edges, got {}",
                n - 1,
                edges.len()
            )));
        }
        let mut adjacency = vec![Vec::new(); n];
        for &(a, b) in edges {
            if a as usize >= n || b as usize >= n || a == b {
                return Err(Error::invalid(format!("bad tree edge ({a},{b})")));
            }
            adjacency[a as usize].push(b);
            adjacency[b as usize].push(a);
        }
        for row in &mut adjacency {
            row.sort_unstable();
        }
        let mut depth = vec![u32::MAX; n];
        let mut parent = vec![0u32; n];
        depth[0] = 0;
        let mut queue = VecDeque::from([0u32]);
        while let Some(v) = queue.pop_front() {
            for &w in &adjacency[v as usize] {
                if depth[w as usize] == u32::MAX {
                    depth[w as usize] = depth[v as usize] + 1;
                    parent[w as usize] = v;
                    queue.push_back(w);
                }
            }
        }
        if depth.contains(&u32::MAX) {
            return Err(Error::invalid("tree edges do not form a connected graph"));
        }
        let levels = (usize::BITS - n.leading_zeros()).max(1) as usize;
        let mut up = vec![parent];
        for l in 1..levels {
            let prev = &up[l - 1];
            let next = (0..n).map(|v| prev[prev[v] as usize]).collect();
            up.push(next);
        }
        Ok(TreeData { adjacency, depth, up })
    }

    fn lca(&self, mut a: usize, mut b: usize) -> usize {
        if self.depth[a] < self.depth[b] {
            std::mem::swap(&mut a, &mut b);
        }
        let mut diff = self.depth[a] - self.depth[b];
        let mut l = 0;
        while diff > 0 {
            if diff & 1 == 1 {
                a = self.up[l][a] as usize;
            }
            diff >>= 1;
            l += 1;
        }
        if a == b {
            return a;
        }
        for l in (0..self.up.len()).rev() {
            if self.up[l][a] != self.up[l][b] {
                a = self.up[l][a] as usize;
                b = self.up[l][b] as usize;
            }
        }
        self.up[0][a] as usize
    }

    pub fn distance(&self, a: usize, b: usize) -> u32 {
        let c = self.lca(a, b);
        self.depth[a] + self.depth[b] - 2 * self.depth[c]
    }

    /// Breadth-first distances from `root`.
    pub fn distances_from(&self, root: usize) -> Vec<u32> {
        let mut dist = vec![u32::MAX; self.adjacency.len()];
        dist[root] = 0;
        let mut queue = VecDeque::from([root as u32]);
        while let Some(v) = queue.pop_front() {
            for &w in &self.adjacency[v as usize] {
                if dist[w as usize] == u32::MAX {
                    dist[w as usize] = dist[v as usize] + 1;
                    queue.push_back(w);
                }
            }
        }
        dist
    }
}

/// Distance in the hyperbolic plane of curvature `kappa < 0` between polar points.
///
/// Uses `cosh(c d) = cosh(c(r1-r2)) + 2 sinh(c r1) sinh(c r2) sin²(Δφ/2)` with `c = √-κ`,
/// which agrees with the law of cosines and stays accurate for nearby points.
pub fn hyperbolic_distance(kappa: f64, a: (f64, f64), b: (f64, f64)) -> f64 {
    let c = (-kappa).sqrt();
    let (r1, p1) = a;
    let (r2, p2) = b;
    let s = ((p1 - p2) / 2.0).sin();
    let t = ((c * (r1 - r2)).cosh() - 1.0) + 2.0 * (c * r1).sinh() * (c * r2).sinh() * s * s;
    if t <= 0.0 {
        return 0.0;
    }
    // acosh(1 + t) = ln(1 + t + sqrt(t (t + 2)))
    (t + (t * (t + 2.0)).sqrt()).ln_1p() / c
}

/// A finite list of points with a pseudometric.
#[derive(Debug, Clone, PartialEq)]
pub struct Space {
    backing: Backing,
    len: usize,
    labels: Option<Vec<String>>,
}

impl Space {
    /// Space from an explicit distance matrix, validated as a pseudometric.
    pub fn from_matrix(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let mut dist = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::invalid(format!("distance row {i} has length {}", row.len())));
            }
            dist.extend_from_slice(row);
        }
        for i in 0..n {
            if dist[i * n + i].abs() > DIST_TOL {
                return Err(Error::invalid(format!("dist({i},{i}) is not zero")));
            }
            for j in 0..n {
                let d = dist[i * n + j];
                if !d.is_finite() || d < 0.0 {
                    return Err(Error::invalid(format!("dist({i},{j}) = {d} is not a non-negative real")));
                }
                if (d - dist[j * n + i]).abs() > TRIANGLE_TOL {
                    return Err(Error::invalid(format!("distance matrix not symmetric at ({i},{j})")));
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if dist[i * n + k] > dist[i * n + j] + dist[j * n + k] + TRIANGLE_TOL {
                        return Err(Error::invalid(format!(
                            "triangle inequality fails for ({i},{j},{k})"
                        )));
                    }
                }
            }
        }
        Ok(Space { backing: Backing::Matrix { dist }, len: n, labels: None })
    }

    pub(crate) fn from_matrix_unchecked(n: usize, dist: Vec<f64>, labels: Option<Vec<String>>) -> Self {
        debug_assert_eq!(dist.len(), n * n);
        Space { backing: Backing::Matrix { dist }, len: n, labels }
    }

    pub fn grid(spec: GridSpec) -> Self {
        let len = spec.len();
        Space { backing: Backing::Grid { spec }, len, labels: None }
    }

    /// Euclidean point cloud; `coords` lists points as rows of length `dim`.
    pub fn points(dim: usize, coords: Vec<Vec<f64>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("point dimension must be positive"));
        }
        let len = coords.len();
        let mut flat = Vec::with_capacity(len * dim);
        for (i, c) in coords.iter().enumerate() {
            if c.len() != dim || c.iter().any(|x| !x.is_finite()) {
                return Err(Error::invalid(format!("point {i} is not a finite {dim}-vector")));
            }
            flat.extend_from_slice(c);
        }
        Ok(Space { backing: Backing::Points { dim, coords: flat }, len, labels: None })
    }

    pub fn tree(n: usize, edges: &[(u32, u32)]) -> Result<Self> {
        let data = TreeData::new(n, edges)?;
        Ok(Space { backing: Backing::Tree(data), len: n, labels: None })
    }

    pub fn hyperbolic_polar(kappa: f64, points: Vec<(f64, f64)>) -> Result<Self> {
        if !(kappa < 0.0) || !kappa.is_finite() {
            return Err(Error::invalid(format!("curvature must be negative, got {kappa}")));
        }
        if let Some((i, _)) = points
            .iter()
            .enumerate()
            .find(|(_, (r, p))| !(*r >= 0.0) || !r.is_finite() || !p.is_finite())
        {
            return Err(Error::invalid(format!("polar point {i} is invalid")));
        }
        let len = points.len();
        Ok(Space { backing: Backing::HyperbolicPolar { kappa, points }, len, labels: None })
    }

    /// Restriction of `parent` to a strictly increasing list of indices.
    pub fn subspace(parent: Arc<Space>, indices: Vec<u32>) -> Result<Self> {
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("subspace indices must be strictly increasing"));
        }
        if indices.last().is_some_and(|&i| i as usize >= parent.len()) {
            return Err(Error::invalid("subspace index out of range"));
        }
        let len = indices.len();
        Ok(Space { backing: Backing::Subspace { parent, indices }, len, labels: None })
    }

    /// Product space with the max metric.
    pub fn product(left: Arc<Space>, right: Arc<Space>) -> Result<Self> {
        let len = left
            .len()
            .checked_mul(right.len())
            .filter(|&l| l <= u32::MAX as usize)
            .ok_or_else(|| Error::ResourceLimit("product space too large".into()))?;
        Ok(Space { backing: Backing::Product { left, right }, len, labels: None })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.len {
            return Err(Error::invalid("label count does not match point count"));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn backing(&self) -> &Backing {
        &self.backing
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn label(&self, i: usize) -> String {
        match &self.labels {
            Some(l) => l[i].clone(),
            None => i.to_string(),
        }
    }

    /// Short name of the backing kind.
    pub fn kind(&self) -> &'static str {
        match self.backing {
            Backing::Matrix { .. } => "matrix",
            Backing::Grid { .. } => "grid",
            Backing::Points { .. } => "points",
            Backing::Tree(_) => "tree",
            Backing::HyperbolicPolar { .. } => "hyperbolic_polar",
            Backing::Subspace { .. } => "subspace",
            Backing::Product { .. } => "product",
        }
    }

    /// True when both values denote the same space.
    pub fn same_as(&self, other: &Space) -> bool {
        std::ptr::eq(self, other) || self == other
    }

    pub fn dist(&self, i: usize, j: usize) -> f64 {
        match &self.backing {
            Backing::Matrix { dist } => dist[i * self.len + j],
            Backing::Grid { spec } => {
                let (a, b) = (spec.multi_index(i), spec.multi_index(j));
                let s: f64 = a
                    .iter()
                    .zip(&b)
                    .map(|(&x, &y)| {
                        let d = x as f64 - y as f64;
                        d * d
                    })
                    .sum();
                s.sqrt() * spec.step
            }
            Backing::Points { dim, coords } => {
                let a = &coords[i * dim..(i + 1) * dim];
                let b = &coords[j * dim..(j + 1) * dim];
                a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
            }
            Backing::Tree(t) => t.distance(i, j) as f64,
            Backing::HyperbolicPolar { kappa, points } => {
                if i == j {
                    0.0
                } else {
                    hyperbolic_distance(*kappa, points[i], points[j])
                }
            }
            Backing::Subspace { parent, indices } => {
                parent.dist(indices[i] as usize, indices[j] as usize)
            }
            Backing::Product { left, right } => {
                let m = right.len();
                let dl = left.dist(i / m, j / m);
                let dr = right.dist(i % m, j % m);
                dl.max(dr)
            }
        }
    }

    /// Euclidean coordinates when the backing has them.
    pub fn coords(&self, i: usize) -> Option<Vec<f64>> {
        match &self.backing {
            Backing::Grid { spec } => Some(spec.coord(i)),
            Backing::Points { dim, coords } => Some(coords[i * dim..(i + 1) * dim].to_vec()),
            Backing::Subspace { parent, indices } => parent.coords(indices[i] as usize),
            _ => None,
        }
    }

    /// Polar coordinates for hyperbolic-backed spaces.
    pub fn polar(&self, i: usize) -> Option<(f64, f64)> {
        match &self.backing {
            Backing::HyperbolicPolar { points, .. } => Some(points[i]),
            Backing::Subspace { parent, indices } => parent.polar(indices[i] as usize),
            _ => None,
        }
    }

    /// A 1-Lipschitz real function of the point, when one is cheap to evaluate.
    ///
    /// `|key(i) - key(j)| ≤ d(i, j)` lets scans stop early once keys are far apart.
    pub fn lipschitz_key(&self, i: usize) -> Option<f64> {
        match &self.backing {
            Backing::HyperbolicPolar { points, .. } => Some(points[i].0),
            Backing::Grid { spec } => Some(spec.coord(i)[0]),
            Backing::Points { dim, coords } => Some(coords[i * dim]),
            Backing::Tree(t) => Some(t.depth[i] as f64),
            Backing::Subspace { parent, indices } => parent.lipschitz_key(indices[i] as usize),
            _ => None,
        }
    }

    /// Points `j` with `d(i, j) < r` (or `≤ r` when `closed`), sorted by index.
    pub fn neighbors_within(&self, i: usize, r: f64, closed: bool) -> Vec<u32> {
        let inside = |d: f64| if closed { d <= r + DIST_TOL } else { d < r - DIST_TOL };
        if let Backing::Grid { spec } = &self.backing {
            if r.is_finite() {
                let center = spec.multi_index(i);
                let reach = (r / spec.step + 1e-9).floor() as i64;
                let dim = spec.dim();
                let mut out = Vec::new();
                let mut lo = Vec::with_capacity(dim);
                let mut hi = Vec::with_capacity(dim);
                for k in 0..dim {
                    let c = center[k] as i64;
                    lo.push((c - reach).max(0) as usize);
                    hi.push(((c + reach) as usize).min(spec.counts()[k] - 1));
                }
                let mut cur = lo.clone();
                loop {
                    let s: f64 = cur
                        .iter()
                        .zip(&center)
                        .map(|(&x, &y)| {
                            let d = x as f64 - y as f64;
                            d * d
                        })
                        .sum();
                    if inside(s.sqrt() * spec.step) {
                        out.push(spec.flat_index(&cur) as u32);
                    }
                    let mut k = dim;
                    loop {
                        if k == 0 {
                            out.sort_unstable();
                            return out;
                        }
                        k -= 1;
                        if cur[k] < hi[k] {
                            cur[k] += 1;
                            break;
                        }
                        cur[k] = lo[k];
                    }
                }
            }
        }
        (0..self.len)
            .filter(|&j| j == i || inside(self.dist(i, j)))
            .map(|j| j as u32)
            .collect()
    }

    /// Largest pairwise distance within `set`; 0 for sets with fewer than two points.
    pub fn diameter(&self, set: &[u32]) -> f64 {
        let mut best: f64 = 0.0;
        for (a, &x) in set.iter().enumerate() {
            for &y in &set[a + 1..] {
                best = best.max(self.dist(x as usize, y as usize));
            }
        }
        best
    }

    /// Distance from `x` to the nearest point of `set` (infinite for an empty set).
    pub fn dist_to_set(&self, x: usize, set: &[u32]) -> f64 {
        set.iter()
            .map(|&y| self.dist(x, y as usize))
            .fold(f64::INFINITY, f64::min)
    }
}

impl fmt::Display for Space {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} space with {} points", self.kind(), self.len)
    }
}

/// A total map between the index sets of two spaces.
#[derive(Debug, Clone)]
pub struct PointMap {
    pub source: Arc<Space>,
    pub target: Arc<Space>,
    table: Vec<u32>,
}

impl PointMap {
    pub fn new(source: Arc<Space>, target: Arc<Space>, table: Vec<u32>) -> Result<Self> {
        if table.len() != source.len() {
            return Err(Error::invalid(format!(
                "map table has {} entries for a source of {} points",
                table.len(),
                source.len()
            )));
        }
        if let Some(&t) = table.iter().find(|&&t| t as usize >= target.len()) {
            return Err(Error::invalid(format!("map value {t} out of target range")));
        }
        Ok(PointMap { source, target, table })
    }

    pub fn identity(space: Arc<Space>) -> Self {
        let table = (0..space.len() as u32).collect();
        PointMap { source: space.clone(), target: space, table }
    }

    pub fn apply(&self, i: usize) -> usize {
        self.table[i] as usize
    }

    pub fn table(&self) -> &[u32] {
        &self.table
    }

    pub fn is_injective(&self) -> bool {
        let mut seen = vec![false; self.target.len()];
        self.table.iter().all(|&t| !std::mem::replace(&mut seen[t as usize], true))
    }

    /// Fibres `f⁻¹(t)` for every target index.
    pub fn fibres(&self) -> Vec<Vec<u32>> {
        let mut out = vec![Vec::new(); self.target.len()];
        for (s, &t) in self.table.iter().enumerate() {
            out[t as usize].push(s as u32);
        }
        out
    }
}

/// Group models with a trivially decidable word problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupModel {
    /// ℤⁿ; elements are integer vectors of length `rank`.
    Abelian { rank: usize },
    /// Free group; elements are reduced words with letters `±1..=±rank`.
    Free { rank: usize },
}

impl GroupModel {
    fn validate(&self, g: &[i64]) -> Result<()> {
        match *self {
            GroupModel::Abelian { rank } => {
                if g.len() != rank {
                    return Err(Error::invalid(format!("element {g:?} is not in Z^{rank}")));
                }
            }
            GroupModel::Free { rank } => {
                if g.iter().any(|&l| l == 0 || l.unsigned_abs() as usize > rank) {
                    return Err(Error::invalid(format!("word {g:?} uses letters outside rank {rank}")));
                }
            }
        }
        Ok(())
    }

    pub fn identity(&self) -> Vec<i64> {
        match *self {
            GroupModel::Abelian { rank } => vec![0; rank],
            GroupModel::Free { .. } => Vec::new(),
        }
    }

    /// Free reduction of a word; no-op for ℤⁿ.
    pub fn normalize(&self, g: &[i64]) -> Vec<i64> {
        match self {
            GroupModel::Abelian { .. } => g.to_vec(),
            GroupModel::Free { .. } => {
                let mut out: Vec<i64> = Vec::with_capacity(g.len());
                for &l in g {
                    if out.last() == Some(&-l) {
                        out.pop();
                    } else {
                        out.push(l);
                    }
                }
                out
            }
        }
    }

    pub fn mul(&self, a: &[i64], b: &[i64]) -> Vec<i64> {
        match self {
            GroupModel::Abelian { .. } => a.iter().zip(b).map(|(x, y)| x + y).collect(),
            GroupModel::Free { .. } => {
                let mut w = a.to_vec();
                w.extend_from_slice(b);
                self.normalize(&w)
            }
        }
    }

    pub fn inv(&self, a: &[i64]) -> Vec<i64> {
        match self {
            GroupModel::Abelian { .. } => a.iter().map(|x| -x).collect(),
            GroupModel::Free { .. } => a.iter().rev().map(|l| -l).collect(),
        }
    }

    pub fn label(&self, g: &[i64]) -> String {
        match self {
            GroupModel::Abelian { .. } => {
                let parts: Vec<String> = g.iter().map(|x| x.to_string()).collect();
                format!("({})", parts.join(","))
            }
            GroupModel::Free { .. } => {
                if g.is_empty() {
                    return "e".into();
                }
                g.iter()
                    .map(|&l| {
                        let c = (b'a' + (l.unsigned_abs() as u8 - 1) % 26) as char;
                        if l < 0 { c.to_ascii_uppercase() } else { c }
                    })
                    .collect()
            }
        }
    }
}

const WORD_BALL_CAP: usize = 2_000_000;

/// Word lengths of all elements of word length `≤ radius`, in breadth-first order.
pub fn word_lengths(model: GroupModel, generators: &[Vec<i64>], radius: usize) -> Result<Vec<(Vec<i64>, u32)>> {
    if generators.is_empty() {
        return Err(Error::invalid("generator set is empty"));
    }
    let mut gens: Vec<Vec<i64>> = Vec::new();
    for g in generators {
        model.validate(g)?;
        let g = model.normalize(g);
        for h in [g.clone(), model.inv(&g)] {
            if h != model.identity() && !gens.contains(&h) {
                gens.push(h);
            }
        }
    }
    let id = model.identity();
    let mut seen: HashMap<Vec<i64>, u32> = HashMap::from([(id.clone(), 0)]);
    let mut order = vec![(id, 0u32)];
    let mut head = 0;
    while head < order.len() {
        let (g, d) = order[head].clone();
        head += 1;
        if d as usize == radius {
            continue;
        }
        for s in &gens {
            let h = model.mul(&g, s);
            if !seen.contains_key(&h) {
                seen.insert(h.clone(), d + 1);
                order.push((h, d + 1));
                if order.len() > WORD_BALL_CAP {
                    return Err(Error::ResourceLimit(format!(
                        "word-metric ball of radius {radius} exceeds {WORD_BALL_CAP} elements"
                    )));
                }
            }
        }
    }
    Ok(order)
}

/// Ball of the given radius about the identity with the word metric of `generators`.
///
/// Distances `d(g, h) = |g⁻¹h|` are read from a breadth-first search of radius `2·radius`,
/// so geodesics leaving the ball are accounted for.
pub fn word_metric_ball(model: GroupModel, generators: &[Vec<i64>], radius: usize) -> Result<Space> {
    let big = word_lengths(model, generators, 2 * radius)?;
    let lengths: HashMap<&[i64], u32> = big.iter().map(|(g, d)| (g.as_slice(), *d)).collect();
    let ball: Vec<&Vec<i64>> = big
        .iter()
        .filter(|(_, d)| *d as usize <= radius)
        .map(|(g, _)| g)
        .collect();
    let n = ball.len();
    if n.saturating_mul(n) > 100_000_000 {
        return Err(Error::ResourceLimit(format!("word-metric ball has {n} points")));
    }
    let mut dist = vec![0.0; n * n];
    for i in 0..n {
        let gi = model.inv(ball[i]);
        for j in 0..n {
            let h = model.mul(&gi, ball[j]);
            let d = lengths.get(h.as_slice()).ok_or_else(|| {
                Error::Internal(format!("element {:?} missing from the doubled ball", h))
            })?;
            dist[i * n + j] = *d as f64;
        }
    }
    let labels = ball.iter().map(|g| model.label(g)).collect();
    Ok(Space::from_matrix_unchecked(n, dist, Some(labels)))
}

/// Index of a group element within a word-metric ball built by [`word_metric_ball`].
pub fn ball_index(space: &Space, model: GroupModel, g: &[i64]) -> Option<usize> {
    let label = model.label(&model.normalize(g));
    (0..space.len()).find(|&i| space.label(i) == label)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_indexing_round_trips() {
        let spec = GridSpec::new(vec![0.0, -1.0], vec![2.0, 1.0], 0.5).unwrap();
        assert_eq!(spec.counts(), &[5, 5]);
        for i in 0..spec.len() {
            assert_eq!(spec.flat_index(&spec.multi_index(i)), i);
        }
        assert_eq!(spec.coord(6), vec![0.5, -0.5]);
    }

    #[test]
    fn grid_neighbors_match_scan() {
        let space = Space::grid(GridSpec::cube(2, 0.0, 5.0, 0.5).unwrap());
        for &r in &[0.3, 1.0, 1.6] {
            for i in [0usize, 17, 60] {
                let fast = space.neighbors_within(i, r, false);
                let slow: Vec<u32> = (0..space.len())
                    .filter(|&j| space.dist(i, j) < r - DIST_TOL)
                    .map(|j| j as u32)
                    .collect();
                assert_eq!(fast, slow);
            }
        }
    }

    #[test]
    fn tree_distance_uses_lca() {
        let t = Space::tree(5, &[(0, 1), (1, 2), (1, 3), (3, 4)]).unwrap();
        assert_eq!(t.dist(2, 4), 3.0);
        assert_eq!(t.dist(0, 4), 3.0);
        assert_eq!(t.dist(3, 3), 0.0);
        assert!(Space::tree(3, &[(0, 1), (0, 1)]).is_err());
    }

    #[test]
    fn hyperbolic_distance_matches_law_of_cosines() {
        let (a, b) = ((1.3, 0.2), (0.7, 2.1));
        let lhs = hyperbolic_distance(-1.0, a, b).cosh();
        let rhs = a.0.cosh() * b.0.cosh() - a.0.sinh() * b.0.sinh() * (a.1 - b.1).cos();
        assert!((lhs - rhs).abs() < 1e-12);
        assert!((hyperbolic_distance(-1.0, (2.0, 0.5), (0.0, 0.0)) - 2.0).abs() < 1e-12);
        // the polar radius is the distance to the basepoint for every curvature
        assert!((hyperbolic_distance(-4.0, (1.0, 0.0), (0.0, 0.0)) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn standard_generators_give_l1_metric() {
        let gens = vec![vec![1, 0], vec![0, 1]];
        let s = word_metric_ball(GroupModel::Abelian { rank: 2 }, &gens, 7).unwrap();
        let o = ball_index(&s, GroupModel::Abelian { rank: 2 }, &[0, 0]).unwrap();
        let p = ball_index(&s, GroupModel::Abelian { rank: 2 }, &[3, 4]).unwrap();
        assert_eq!(s.dist(o, p), 7.0);
        assert_eq!(s.len(), 1 + 4 * (1..=7).sum::<usize>());
    }

    #[test]
    fn free_group_ball_sizes() {
        let model = GroupModel::Free { rank: 2 };
        let s = word_metric_ball(model, &[vec![1], vec![2]], 3).unwrap();
        assert_eq!(s.len(), 53);
        let ab = ball_index(&s, model, &[1, 2]).unwrap();
        let ba = ball_index(&s, model, &[2, 1]).unwrap();
        assert_eq!(s.dist(ab, ba), 4.0);
    }

    #[test]
    fn empty_generators_rejected() {
        assert!(word_metric_ball(GroupModel::Abelian { rank: 1 }, &[], 2).is_err());
    }

    #[test]
    fn matrix_validation() {
        assert!(Space::from_matrix(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).is_ok());
        assert!(Space::from_matrix(vec![vec![0.0, 1.0], vec![2.0, 0.0]]).is_err());
        let bad = vec![vec![0.0, 1.0, 5.0], vec![1.0, 0.0, 1.0], vec![5.0, 1.0, 0.0]];
        assert!(Space::from_matrix(bad).is_err());
        // pseudometric: distinct points at distance zero are fine
        assert!(Space::from_matrix(vec![vec![0.0, 0.0], vec![0.0, 0.0]]).is_ok());
    }

    #[test]
    fn product_uses_max_metric() {
        let a = Arc::new(Space::grid(GridSpec::cube(1, 0.0, 3.0, 1.0).unwrap()));
        let p = Space::product(a.clone(), a).unwrap();
        assert_eq!(p.len(), 16);
        assert_eq!(p.dist(0, 4 * 2 + 3), 3.0);
    }
}
