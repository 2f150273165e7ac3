//! Entourages: relations on the points of a [`Space`] and their algebra.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::space::{PointMap, Space};

/// Upper bound on the number of pairs an entourage may materialize.
pub const MATERIALIZE_CAP: usize = 10_000_000;

/// Explicit relation stored as sorted successor rows: `rows[x] = {y | (x,y) ∈ E}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairSet {
    rows: Vec<Vec<u32>>,
    count: usize,
}

impl PairSet {
    fn from_rows(mut rows: Vec<Vec<u32>>) -> Self {
        let mut count = 0;
        for row in &mut rows {
            row.sort_unstable();
            row.dedup();
            count += row.len();
        }
        PairSet { rows, count }
    }

    pub fn row(&self, x: usize) -> &[u32] {
        &self.rows[x]
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        self.rows[x].binary_search(&(y as u32)).is_ok()
    }

    fn transpose(&self) -> PairSet {
        let mut rows = vec![Vec::new(); self.rows.len()];
        for (x, row) in self.rows.iter().enumerate() {
            for &y in row {
                rows[y as usize].push(x as u32);
            }
        }
        PairSet::from_rows(rows)
    }
}

/// Lazily evaluated relation given by its point images.
pub trait Neighborhood: Send + Sync {
    /// `E(x) = E[{x}]`, sorted; implementations must describe a symmetric relation.
    fn image_of_point(&self, x: usize) -> Vec<u32>;
}

impl<F> Neighborhood for F
where
    F: Fn(usize) -> Vec<u32> + Send + Sync,
{
    fn image_of_point(&self, x: usize) -> Vec<u32> {
        self(x)
    }
}

#[derive(Clone)]
enum Kind {
    Pairs { pairs: Arc<PairSet>, columns: Arc<OnceLock<PairSet>> },
    Radius { r: f64, closed: bool },
    Lazy { name: String, f: Arc<dyn Neighborhood> },
}

/// A relation on the points of a space.
///
/// Pair sets are stored exactly as given (no implicit symmetric closure); radius
/// entourages `Δ_r = {(x,y) | d(x,y) < r}` stay symbolic until materialized.
#[derive(Clone)]
pub struct Entourage {
    space: Arc<Space>,
    kind: Kind,
}

impl fmt::Debug for Entourage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            Kind::Pairs { pairs, .. } => write!(f, "Entourage(pairs, {} pairs)", pairs.len()),
            Kind::Radius { r, closed } => {
                write!(f, "Entourage({} {r})", if *closed { "closed radius" } else { "radius" })
            }
            Kind::Lazy { name, .. } => write!(f, "Entourage(lazy {name})"),
        }
    }
}

impl Entourage {
    /// Explicit pair set; indices are range-checked.
    pub fn from_pairs(space: Arc<Space>, pairs: impl IntoIterator<Item = (u32, u32)>) -> Result<Self> {
        let n = space.len();
        let mut rows = vec![Vec::new(); n];
        let mut count = 0usize;
        for (x, y) in pairs {
            if x as usize >= n || y as usize >= n {
                return Err(Error::invalid(format!("pair ({x},{y}) out of range for {n} points")));
            }
            rows[x as usize].push(y);
            count += 1;
            if count > MATERIALIZE_CAP {
                return Err(Error::ResourceLimit(format!("more than {MATERIALIZE_CAP} pairs")));
            }
        }
        Ok(Self::from_pair_set(space, PairSet::from_rows(rows)))
    }

    fn from_pair_set(space: Arc<Space>, pairs: PairSet) -> Self {
        Entourage {
            space,
            kind: Kind::Pairs { pairs: Arc::new(pairs), columns: Arc::new(OnceLock::new()) },
        }
    }

    /// Open radius relation `d(x,y) < r`.
    pub fn radius(space: Arc<Space>, r: f64) -> Result<Self> {
        if !(r >= 0.0) {
            return Err(Error::invalid(format!("radius must be non-negative, got {r}")));
        }
        Ok(Entourage { space, kind: Kind::Radius { r, closed: false } })
    }

    /// Closed radius relation `d(x,y) ≤ r`.
    pub fn closed_radius(space: Arc<Space>, r: f64) -> Result<Self> {
        if !(r >= 0.0) {
            return Err(Error::invalid(format!("radius must be non-negative, got {r}")));
        }
        Ok(Entourage { space, kind: Kind::Radius { r, closed: true } })
    }

    /// The diagonal `Δ_X`.
    pub fn diagonal(space: Arc<Space>) -> Self {
        let rows = (0..space.len() as u32).map(|i| vec![i]).collect();
        Self::from_pair_set(space, PairSet::from_rows(rows))
    }

    /// Symmetric relation described by its point images.
    pub fn lazy(space: Arc<Space>, name: impl Into<String>, f: impl Neighborhood + 'static) -> Self {
        Entourage { space, kind: Kind::Lazy { name: name.into(), f: Arc::new(f) } }
    }

    pub fn space(&self) -> &Arc<Space> {
        &self.space
    }

    /// Radius of a radius-kind entourage.
    pub fn radius_value(&self) -> Option<(f64, bool)> {
        match self.kind {
            Kind::Radius { r, closed } => Some((r, closed)),
            _ => None,
        }
    }

    pub fn is_symbolic(&self) -> bool {
        !matches!(self.kind, Kind::Pairs { .. })
    }

    fn check_space(&self, other: &Entourage) -> Result<()> {
        if self.space.same_as(&other.space) {
            Ok(())
        } else {
            Err(Error::invalid("entourages live over different spaces"))
        }
    }

    fn columns(&self) -> Option<&PairSet> {
        match &self.kind {
            Kind::Pairs { pairs, columns } => Some(columns.get_or_init(|| pairs.transpose())),
            _ => None,
        }
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        match &self.kind {
            Kind::Pairs { pairs, .. } => pairs.contains(x, y),
            Kind::Radius { r, closed } => {
                let d = self.space.dist(x, y);
                if *closed { d <= r + crate::space::DIST_TOL } else { x == y && *r > 0.0 || d < r - crate::space::DIST_TOL }
            }
            Kind::Lazy { f, .. } => f.image_of_point(y).binary_search(&(x as u32)).is_ok(),
        }
    }

    /// Successors `{y | (x,y) ∈ E}`, sorted.
    pub fn successors(&self, x: usize) -> Vec<u32> {
        match &self.kind {
            Kind::Pairs { pairs, .. } => pairs.row(x).to_vec(),
            Kind::Radius { r, closed } => self.radius_ball(x, *r, *closed),
            Kind::Lazy { f, .. } => f.image_of_point(x),
        }
    }

    /// `E(x) = E[{x}] = {y | (y,x) ∈ E}`, sorted.
    pub fn point_image(&self, x: usize) -> Vec<u32> {
        match &self.kind {
            Kind::Pairs { .. } => self.columns().expect("pairs kind").row(x).to_vec(),
            Kind::Radius { r, closed } => self.radius_ball(x, *r, *closed),
            Kind::Lazy { f, .. } => f.image_of_point(x),
        }
    }

    fn radius_ball(&self, x: usize, r: f64, closed: bool) -> Vec<u32> {
        if r == 0.0 && !closed {
            return Vec::new();
        }
        self.space.neighbors_within(x, r, closed)
    }

    /// `E[A] = {x | (x,a) ∈ E for some a ∈ A}`, sorted.
    pub fn image(&self, set: &[u32]) -> Vec<u32> {
        let n = self.space.len();
        let mut mark = vec![false; n];
        for &a in set {
            for y in self.point_image(a as usize) {
                mark[y as usize] = true;
            }
        }
        (0..n as u32).filter(|&i| mark[i as usize]).collect()
    }

    /// Explicit pair set, materializing symbolic kinds (capped at [`MATERIALIZE_CAP`]).
    pub fn pair_set(&self) -> Result<Arc<PairSet>> {
        if let Kind::Pairs { pairs, .. } = &self.kind {
            return Ok(pairs.clone());
        }
        let n = self.space.len();
        let mut rows = Vec::with_capacity(n);
        let mut count = 0usize;
        for x in 0..n {
            let row = self.successors(x);
            count += row.len();
            if count > MATERIALIZE_CAP {
                return Err(Error::ResourceLimit(format!(
                    "materializing {self:?} exceeds {MATERIALIZE_CAP} pairs"
                )));
            }
            rows.push(row);
        }
        Ok(Arc::new(PairSet::from_rows(rows)))
    }

    /// Pairs-kind copy of this entourage.
    pub fn materialize(&self) -> Result<Entourage> {
        let pairs = self.pair_set()?;
        Ok(Entourage {
            space: self.space.clone(),
            kind: Kind::Pairs { pairs, columns: Arc::new(OnceLock::new()) },
        })
    }

    /// All pairs in lexicographic order.
    pub fn pairs(&self) -> Result<Vec<(u32, u32)>> {
        let p = self.pair_set()?;
        Ok((0..self.space.len())
            .flat_map(|x| p.row(x).iter().map(move |&y| (x as u32, y)))
            .collect())
    }

    pub fn pair_count(&self) -> Result<usize> {
        Ok(self.pair_set()?.len())
    }

    /// Raw composition `E1E2 = {(x,z) | ∃y: (x,y) ∈ E1, (y,z) ∈ E2}`.
    pub fn compose(&self, other: &Entourage) -> Result<Entourage> {
        self.check_space(other)?;
        let a = self.pair_set()?;
        let b = other.pair_set()?;
        let n = self.space.len();
        let mut mark = vec![u32::MAX; n];
        let mut rows = Vec::with_capacity(n);
        let mut count = 0usize;
        for x in 0..n {
            let mut row = Vec::new();
            for &y in a.row(x) {
                for &z in b.row(y as usize) {
                    if mark[z as usize] != x as u32 {
                        mark[z as usize] = x as u32;
                        row.push(z);
                    }
                }
            }
            count += row.len();
            if count > MATERIALIZE_CAP {
                return Err(Error::ResourceLimit(format!("composition exceeds {MATERIALIZE_CAP} pairs")));
            }
            rows.push(row);
        }
        Ok(Self::from_pair_set(self.space.clone(), PairSet::from_rows(rows)))
    }

    /// `E⁻¹ = {(y,x) | (x,y) ∈ E}`.
    pub fn inverse(&self) -> Result<Entourage> {
        match &self.kind {
            Kind::Pairs { pairs, .. } => Ok(Self::from_pair_set(self.space.clone(), pairs.transpose())),
            _ => Ok(self.clone()),
        }
    }

    pub fn union(&self, other: &Entourage) -> Result<Entourage> {
        self.check_space(other)?;
        let (a, b) = (self.pair_set()?, other.pair_set()?);
        if a.len() + b.len() > MATERIALIZE_CAP {
            return Err(Error::ResourceLimit(format!("union exceeds {MATERIALIZE_CAP} pairs")));
        }
        let rows = (0..self.space.len())
            .map(|x| a.row(x).iter().chain(b.row(x)).copied().collect())
            .collect();
        Ok(Self::from_pair_set(self.space.clone(), PairSet::from_rows(rows)))
    }

    pub fn symmetric_closure(&self) -> Result<Entourage> {
        self.union(&self.inverse()?)
    }

    /// `E ⊆ F`; returns the first pair of `E` outside `F` when the inclusion fails.
    pub fn subset_witness(&self, other: &Entourage) -> Result<Option<(u32, u32)>> {
        self.check_space(other)?;
        let a = self.pair_set()?;
        for x in 0..self.space.len() {
            for &y in a.row(x) {
                if !other.contains(x, y as usize) {
                    return Ok(Some((x as u32, y)));
                }
            }
        }
        Ok(None)
    }

    pub fn is_subset(&self, other: &Entourage) -> Result<bool> {
        Ok(self.subset_witness(other)?.is_none())
    }

    pub fn is_symmetric(&self) -> Result<bool> {
        let inv = self.inverse()?;
        self.is_subset(&inv)
    }

    pub fn contains_diagonal(&self) -> bool {
        (0..self.space.len()).all(|x| self.contains(x, x))
    }

    /// Same relation as pair sets.
    pub fn equals(&self, other: &Entourage) -> Result<bool> {
        self.check_space(other)?;
        Ok(self.pair_set()? == other.pair_set()?)
    }

    /// Largest distance realized by a pair (the smallest `D` with `E ⊆ Δ̄_D`).
    pub fn max_distance(&self) -> Result<f64> {
        let p = self.pair_set()?;
        let mut best: f64 = 0.0;
        for x in 0..self.space.len() {
            for &y in p.row(x) {
                best = best.max(self.space.dist(x, y as usize));
            }
        }
        Ok(best)
    }

    /// Product entourage `E × F` over the product space `X × Y` of their spaces.
    pub fn product(&self, other: &Entourage, product_space: Arc<Space>) -> Result<Entourage> {
        let (n, m) = (self.space.len(), other.space.len());
        if product_space.len() != n * m {
            return Err(Error::invalid("product space size does not match the factors"));
        }
        let a = self.pair_set()?;
        let b = other.pair_set()?;
        if a.len().saturating_mul(b.len()) > MATERIALIZE_CAP {
            return Err(Error::ResourceLimit(format!("product exceeds {MATERIALIZE_CAP} pairs")));
        }
        let mut rows = Vec::with_capacity(n * m);
        for x in 0..n {
            for y in 0..m {
                let mut row = Vec::with_capacity(a.row(x).len() * b.row(y).len());
                for &x2 in a.row(x) {
                    for &y2 in b.row(y) {
                        row.push(x2 * m as u32 + y2);
                    }
                }
                rows.push(row);
            }
        }
        Ok(Self::from_pair_set(product_space, PairSet::from_rows(rows)))
    }

    /// Restriction `E|_A` to a subspace built from this entourage's space.
    pub fn restrict(&self, subspace: Arc<Space>, indices: &[u32]) -> Result<Entourage> {
        let mut pos = vec![u32::MAX; self.space.len()];
        for (k, &i) in indices.iter().enumerate() {
            pos[i as usize] = k as u32;
        }
        let mut pairs = Vec::new();
        for (k, &i) in indices.iter().enumerate() {
            for y in self.successors(i as usize) {
                if pos[y as usize] != u32::MAX {
                    pairs.push((k as u32, pos[y as usize]));
                }
            }
        }
        Entourage::from_pairs(subspace, pairs)
    }
}

/// Direction of [`transport`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Push,
    Pull,
}

/// Push-forward `(f×f)(E)` or pull-back `(f×f)⁻¹(E)` of an entourage along a map.
pub fn transport(f: &PointMap, e: &Entourage, direction: Direction) -> Result<Entourage> {
    match direction {
        Direction::Push => {
            if !e.space().same_as(&f.source) {
                return Err(Error::invalid("push-forward needs an entourage over the map's source"));
            }
            let pairs = e.pair_set()?;
            let mut out = Vec::with_capacity(pairs.len());
            for x in 0..f.source.len() {
                for &y in pairs.row(x) {
                    out.push((f.apply(x) as u32, f.apply(y as usize) as u32));
                }
            }
            Entourage::from_pairs(f.target.clone(), out)
        }
        Direction::Pull => {
            if !e.space().same_as(&f.target) {
                return Err(Error::invalid("pull-back needs an entourage over the map's target"));
            }
            let fibres = f.fibres();
            let mut rows = Vec::with_capacity(f.source.len());
            let mut count = 0usize;
            for x in 0..f.source.len() {
                let mut row = Vec::new();
                for t in e.successors(f.apply(x)) {
                    row.extend_from_slice(&fibres[t as usize]);
                }
                count += row.len();
                if count > MATERIALIZE_CAP {
                    return Err(Error::ResourceLimit(format!("pull-back exceeds {MATERIALIZE_CAP} pairs")));
                }
                rows.push(row);
            }
            Ok(Entourage::from_pair_set(f.source.clone(), PairSet::from_rows(rows)))
        }
    }
}

/// Values `s(r) = max{d(f x₁, f x₂) | d(x₁,x₂) ≤ r}` and the optional closeness to a second map.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformityModulus {
    pub table: Vec<(f64, f64)>,
    pub closeness: Option<f64>,
}

pub fn uniformity_modulus(f: &PointMap, radii: &[f64], g: Option<&PointMap>) -> Result<UniformityModulus> {
    if radii.is_empty() {
        return Err(Error::invalid("radius list is empty"));
    }
    let n = f.source.len();
    let mut table: Vec<(f64, f64)> = radii.iter().map(|&r| (r, 0.0)).collect();
    for x in 0..n {
        for y in x..n {
            let d = f.source.dist(x, y);
            let e = f.target.dist(f.apply(x), f.apply(y));
            for (r, s) in &mut table {
                if d <= *r + crate::space::DIST_TOL && e > *s {
                    *s = e;
                }
            }
        }
    }
    let closeness = match g {
        None => None,
        Some(g) => {
            if !g.source.same_as(&f.source) || !g.target.same_as(&f.target) {
                return Err(Error::invalid("closeness needs maps with equal source and target"));
            }
            Some((0..n).map(|x| f.target.dist(f.apply(x), g.apply(x))).fold(0.0, f64::max))
        }
    };
    Ok(UniformityModulus { table, closeness })
}

/// Sorted, deduplicated index set from any iterator.
pub fn index_set(items: impl IntoIterator<Item = u32>) -> Vec<u32> {
    let set: BTreeSet<u32> = items.into_iter().collect();
    set.into_iter().collect()
}
