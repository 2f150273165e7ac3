//! Covers of finite spaces and their quality metrics.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock};

use rayon::prelude::*;

use crate::entourage::Entourage;
use crate::error::{Error, Result};
use crate::space::{Backing, Space};

/// A family of index sets covering a space, optionally split into families.
#[derive(Debug, Clone)]
pub struct Cover {
    space: Arc<Space>,
    sets: Vec<Vec<u32>>,
    families: Option<Vec<Vec<usize>>>,
    incidence: OnceLock<Vec<Vec<u32>>>,
}

impl PartialEq for Cover {
    fn eq(&self, other: &Self) -> bool {
        self.space.same_as(&other.space) && self.sets == other.sets && self.families == other.families
    }
}

/// Two sets of one family that fail a disjointness requirement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DisjointnessWitness {
    pub family: usize,
    pub sets: (usize, usize),
    pub pair: (u32, u32),
}

impl std::fmt::Display for DisjointnessWitness {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "family {} sets {} and {} linked by pair ({}, {})",
            self.family, self.sets.0, self.sets.1, self.pair.0, self.pair.1
        )
    }
}

impl Cover {
    /// Validates ranges, the covering property and within-family disjointness.
    ///
    /// Each set is sorted and deduplicated; the order of sets is kept.
    pub fn new(space: Arc<Space>, sets: Vec<Vec<u32>>, families: Option<Vec<Vec<usize>>>) -> Result<Self> {
        let n = space.len();
        let mut sets = sets;
        for (k, set) in sets.iter_mut().enumerate() {
            set.sort_unstable();
            set.dedup();
            if set.last().is_some_and(|&i| i as usize >= n) {
                return Err(Error::invalid(format!("set {k} has an index outside {n} points")));
            }
        }
        let mut covered = vec![false; n];
        for set in &sets {
            for &i in set {
                covered[i as usize] = true;
            }
        }
        if let Some(i) = covered.iter().position(|c| !c) {
            return Err(Error::invalid(format!("point {i} is not covered")));
        }
        if let Some(fams) = &families {
            let mut seen = vec![false; sets.len()];
            for fam in fams {
                for &s in fam {
                    if s >= sets.len() || std::mem::replace(&mut seen[s], true) {
                        return Err(Error::invalid(format!("family entry {s} is out of range or repeated")));
                    }
                }
            }
            if let Some(s) = seen.iter().position(|x| !x) {
                return Err(Error::invalid(format!("set {s} belongs to no family")));
            }
        }
        let cover = Cover { space, sets, families, incidence: OnceLock::new() };
        if let Some(w) = cover.disjointness_witness(None)? {
            return Err(Error::invalid(format!("families are not disjoint: {w}")));
        }
        Ok(cover)
    }

    /// Cover whose families are given as lists of sets.
    pub fn from_families(space: Arc<Space>, families: Vec<Vec<Vec<u32>>>) -> Result<Self> {
        let mut sets = Vec::new();
        let mut fams = Vec::new();
        for fam in families {
            let mut ids = Vec::with_capacity(fam.len());
            for set in fam {
                ids.push(sets.len());
                sets.push(set);
            }
            fams.push(ids);
        }
        Cover::new(space, sets, Some(fams))
    }

    pub fn space(&self) -> &Arc<Space> {
        &self.space
    }

    pub fn sets(&self) -> &[Vec<u32>] {
        &self.sets
    }

    pub fn set(&self, k: usize) -> &[u32] {
        &self.sets[k]
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn families(&self) -> Option<&[Vec<usize>]> {
        self.families.as_deref()
    }

    pub fn family_count(&self) -> usize {
        self.families.as_ref().map_or(0, |f| f.len())
    }

    /// Family index of every set (when families are present).
    pub fn family_of(&self) -> Option<Vec<usize>> {
        let fams = self.families.as_ref()?;
        let mut out = vec![0; self.sets.len()];
        for (f, fam) in fams.iter().enumerate() {
            for &s in fam {
                out[s] = f;
            }
        }
        Some(out)
    }

    /// Same sets with a new family partition.
    pub fn with_families(&self, families: Option<Vec<Vec<usize>>>) -> Result<Self> {
        Cover::new(self.space.clone(), self.sets.clone(), families)
    }

    /// Sets containing each point, as sorted set indices.
    pub fn incidence(&self) -> &[Vec<u32>] {
        self.incidence.get_or_init(|| {
            let mut inc = vec![Vec::new(); self.space.len()];
            for (k, set) in self.sets.iter().enumerate() {
                for &i in set {
                    inc[i as usize].push(k as u32);
                }
            }
            inc
        })
    }

    pub fn contains(&self, set: usize, point: usize) -> bool {
        self.sets[set].binary_search(&(point as u32)).is_ok()
    }

    pub fn empty_set_count(&self) -> usize {
        self.sets.iter().filter(|s| s.is_empty()).count()
    }

    /// Content identifier per set; equal sets share an identifier.
    fn content_ids(&self) -> Vec<usize> {
        let mut ids: HashMap<&[u32], usize> = HashMap::new();
        self.sets
            .iter()
            .map(|s| {
                let next = ids.len();
                *ids.entry(s.as_slice()).or_insert(next)
            })
            .collect()
    }

    /// Largest number of distinct sets sharing a point.
    pub fn multiplicity(&self) -> usize {
        self.multiplicity_witness().map_or(0, |(_, m)| m)
    }

    /// A point realizing the multiplicity, with the multiplicity.
    pub fn multiplicity_witness(&self) -> Option<(u32, usize)> {
        let ids = self.content_ids();
        let inc = self.incidence();
        let mut best: Option<(u32, usize)> = None;
        let mut buf = Vec::new();
        for (p, sets) in inc.iter().enumerate() {
            buf.clear();
            buf.extend(sets.iter().map(|&s| ids[s as usize]));
            buf.sort_unstable();
            buf.dedup();
            if best.is_none_or(|(_, m)| buf.len() > m) {
                best = Some((p as u32, buf.len()));
            }
        }
        best
    }

    /// Largest diameter of a covering set.
    pub fn mesh(&self) -> f64 {
        self.sets
            .par_iter()
            .map(|s| self.space.diameter(s))
            .reduce(|| 0.0, f64::max)
    }

    /// Discrete Lebesgue number.
    ///
    /// For each point `x` takes the best covering set `U ∋ x` by the distance from `x`
    /// to the nearest sample point outside `U`, then minimizes over `x`. A set
    /// containing every sample point yields `+∞`.
    pub fn lebesgue_number(&self) -> f64 {
        self.lebesgue_witness().map_or(f64::INFINITY, |(_, v)| v)
    }

    /// Point attaining the discrete Lebesgue number, with the value.
    pub fn lebesgue_witness(&self) -> Option<(u32, f64)> {
        let n = self.space.len();
        if n == 0 {
            return None;
        }
        let inc = self.incidence();
        let sweep = self.key_order();
        let values: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|x| match &sweep {
                Some((order, pos, keys)) => self.point_lebesgue_sweep(x, inc, order, pos[x], keys),
                None => self.point_lebesgue(x, inc),
            })
            .collect();
        let mut best: Option<(u32, f64)> = None;
        for (x, &v) in values.iter().enumerate() {
            if best.is_none_or(|(_, b)| v < b) {
                best = Some((x as u32, v));
            }
        }
        best
    }

    /// Points sorted by their Lipschitz key, with positions and key values; grids keep
    /// their lattice search.
    #[allow(clippy::type_complexity)]
    fn key_order(&self) -> Option<(Vec<u32>, Vec<usize>, Vec<f64>)> {
        if matches!(self.space.backing(), Backing::Grid { .. }) {
            return None;
        }
        let n = self.space.len();
        let keys: Vec<f64> = (0..n).map(|i| self.space.lipschitz_key(i)).collect::<Option<_>>()?;
        let mut order: Vec<u32> = (0..n as u32).collect();
        order.sort_by(|&a, &b| keys[a as usize].total_cmp(&keys[b as usize]).then(a.cmp(&b)));
        let mut pos = vec![0usize; n];
        for (k, &i) in order.iter().enumerate() {
            pos[i as usize] = k;
        }
        Some((order, pos, keys))
    }

    /// Same value as [`Self::point_lebesgue`], visiting points by increasing key gap and
    /// stopping once the gap exceeds every unresolved bound.
    fn point_lebesgue_sweep(&self, x: usize, inc: &[Vec<u32>], order: &[u32], at: usize, keys: &[f64]) -> f64 {
        let own = &inc[x];
        let mut best = vec![f64::INFINITY; own.len()];
        let kx = keys[x];
        let (mut lo, mut hi) = (at, at + 1);
        loop {
            let gap_lo = if lo > 0 { kx - keys[order[lo - 1] as usize] } else { f64::INFINITY };
            let gap_hi = if hi < order.len() { keys[order[hi] as usize] - kx } else { f64::INFINITY };
            let gap = gap_lo.min(gap_hi);
            let bound = best.iter().copied().fold(0.0, f64::max);
            if gap == f64::INFINITY || gap > bound {
                break;
            }
            let y = if gap_lo <= gap_hi {
                lo -= 1;
                order[lo] as usize
            } else {
                hi += 1;
                order[hi - 1] as usize
            };
            let d = self.space.dist(x, y);
            let ys = &inc[y];
            for (k, &u) in own.iter().enumerate() {
                if d < best[k] && ys.binary_search(&u).is_err() {
                    best[k] = d;
                }
            }
        }
        best.into_iter().fold(0.0, f64::max)
    }

    fn point_lebesgue(&self, x: usize, inc: &[Vec<u32>]) -> f64 {
        let own = &inc[x];
        let n = self.space.len();
        let outside_min = |candidates: &mut dyn Iterator<Item = (usize, f64)>| {
            let mut best = vec![f64::INFINITY; own.len()];
            for (y, d) in candidates {
                let ys = &inc[y];
                for (k, &u) in own.iter().enumerate() {
                    if d < best[k] && ys.binary_search(&u).is_err() {
                        best[k] = d;
                    }
                }
            }
            best
        };
        if let Backing::Grid { spec } = self.space.backing() {
            let mut r = 2.0 * spec.step;
            loop {
                let nb = self.space.neighbors_within(x, r, true);
                let best = outside_min(&mut nb.iter().map(|&y| (y as usize, self.space.dist(x, y as usize))));
                // Values found within r are exact; a set with no outside point within r
                // has value > r, so r grows until every set resolves or r spans the space.
                if nb.len() == n || best.iter().all(|v| v.is_finite()) {
                    return best.into_iter().fold(0.0, f64::max);
                }
                r *= 2.0;
            }
        }
        let best = outside_min(&mut (0..n).map(|y| (y, self.space.dist(x, y))));
        best.into_iter().fold(0.0, f64::max)
    }

    /// First point `x` such that no covering set contains `L(x)`.
    pub fn appetite_witness(&self, l: &Entourage) -> Result<Option<u32>> {
        if !l.space().same_as(&self.space) {
            return Err(Error::invalid("entourage and cover live over different spaces"));
        }
        let inc = self.incidence();
        let n = self.space.len();
        let fails = (0..n).into_par_iter().position_first(|x| {
            let img = l.point_image(x);
            match img.first() {
                None => self.sets.is_empty(),
                Some(&first) => !inc[first as usize]
                    .iter()
                    .any(|&u| is_sorted_subset(&img, &self.sets[u as usize])),
            }
        });
        Ok(fails.map(|x| x as u32))
    }

    pub fn has_appetite(&self, l: &Entourage) -> Result<bool> {
        Ok(self.appetite_witness(l)?.is_none())
    }

    /// `Δ_U = ⋃_U U×U` as an explicit pair set.
    pub fn cover_entourage(&self) -> Result<Entourage> {
        let inc = self.incidence();
        let n = self.space.len();
        let mut total = 0usize;
        let mut rows: Vec<Vec<u32>> = Vec::with_capacity(n);
        for x in 0..n {
            let mut row: Vec<u32> = inc[x]
                .iter()
                .flat_map(|&u| self.sets[u as usize].iter().copied())
                .collect();
            row.sort_unstable();
            row.dedup();
            total += row.len();
            if total > crate::entourage::MATERIALIZE_CAP {
                return Err(Error::ResourceLimit("cover entourage exceeds the pair cap".into()));
            }
            rows.push(row);
        }
        Entourage::from_pairs(
            self.space.clone(),
            rows.into_iter()
                .enumerate()
                .flat_map(|(x, row)| row.into_iter().map(move |y| (x as u32, y))),
        )
    }

    /// First failure of `L`-disjointness within a family (plain disjointness when `l` is `None`).
    pub fn disjointness_witness(&self, l: Option<&Entourage>) -> Result<Option<DisjointnessWitness>> {
        let Some(fams) = &self.families else {
            return Ok(None);
        };
        if let Some(l) = l {
            if !l.space().same_as(&self.space) {
                return Err(Error::invalid("entourage and cover live over different spaces"));
            }
        }
        let n = self.space.len();
        let mut owner = vec![usize::MAX; n];
        for (f, fam) in fams.iter().enumerate() {
            for &s in fam {
                for &p in &self.sets[s] {
                    let o = owner[p as usize];
                    if o != usize::MAX && o != s {
                        return Ok(Some(DisjointnessWitness { family: f, sets: (o, s), pair: (p, p) }));
                    }
                    owner[p as usize] = s;
                }
            }
            if let Some(l) = l {
                for &s in fam {
                    for &a in &self.sets[s] {
                        for b in l.successors(a as usize) {
                            let o = owner[b as usize];
                            if o != usize::MAX && o != s {
                                return Ok(Some(DisjointnessWitness { family: f, sets: (s, o), pair: (a, b) }));
                            }
                        }
                    }
                }
            }
            for &s in fam {
                for &p in &self.sets[s] {
                    owner[p as usize] = usize::MAX;
                }
            }
        }
        Ok(None)
    }

    /// True when some set of `other` contains each set of `self`.
    pub fn refines(&self, other: &Cover) -> bool {
        let inc = other.incidence();
        self.sets.iter().all(|s| match s.first() {
            None => true,
            Some(&p) => inc[p as usize].iter().any(|&u| is_sorted_subset(s, other.set(u as usize))),
        })
    }

    pub fn stats(&self, l: Option<&Entourage>) -> Result<CoverStats> {
        Ok(CoverStats {
            multiplicity: self.multiplicity(),
            mesh: self.mesh(),
            lebesgue: self.lebesgue_number(),
            appetite: match l {
                Some(l) => Some(self.has_appetite(l)?),
                None => None,
            },
            empty_sets: self.empty_set_count(),
        })
    }
}

/// The four cover metrics plus the count of empty sets.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverStats {
    pub multiplicity: usize,
    pub mesh: f64,
    pub lebesgue: f64,
    pub appetite: Option<bool>,
    pub empty_sets: usize,
}

/// `a ⊆ b` for sorted slices.
pub fn is_sorted_subset(a: &[u32], b: &[u32]) -> bool {
    if a.len() > b.len() {
        return false;
    }
    let mut j = 0;
    for &x in a {
        while j < b.len() && b[j] < x {
            j += 1;
        }
        if j == b.len() || b[j] != x {
            return false;
        }
        j += 1;
    }
    true
}

/// Sorted intersection of two sorted slices.
pub fn sorted_intersection(a: &[u32], b: &[u32]) -> Vec<u32> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

/// Sorted difference `a \ b`.
pub fn sorted_difference(a: &[u32], b: &[u32]) -> Vec<u32> {
    let mut j = 0;
    let mut out = Vec::new();
    for &x in a {
        while j < b.len() && b[j] < x {
            j += 1;
        }
        if j == b.len() || b[j] != x {
            out.push(x);
        }
    }
    out
}

/// Sorted union of sorted slices.
pub fn sorted_union(a: &[u32], b: &[u32]) -> Vec<u32> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        if j == b.len() || (i < a.len() && a[i] < b[j]) {
            out.push(a[i]);
            i += 1;
        } else if i == a.len() || b[j] < a[i] {
            out.push(b[j]);
            j += 1;
        } else {
            out.push(a[i]);
            i += 1;
            j += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::GridSpec;

    fn line(n: usize) -> Arc<Space> {
        Arc::new(Space::grid(GridSpec::cube(1, 0.0, (n - 1) as f64, 1.0).unwrap()))
    }

    #[test]
    fn singleton_partition() {
        let s = line(6);
        let c = Cover::new(s.clone(), (0..6).map(|i| vec![i]).collect(), None).unwrap();
        assert_eq!(c.multiplicity(), 1);
        assert_eq!(c.mesh(), 0.0);
        assert_eq!(c.lebesgue_number(), 1.0);
        assert!(c.has_appetite(&Entourage::diagonal(s.clone())).unwrap());
        assert!(!c.has_appetite(&Entourage::radius(s.clone(), 1.5).unwrap()).unwrap());
        assert!(c.cover_entourage().unwrap().equals(&Entourage::diagonal(s)).unwrap());
    }

    #[test]
    fn whole_space_has_infinite_lebesgue() {
        let s = line(4);
        let c = Cover::new(s, vec![vec![0, 1, 2, 3]], None).unwrap();
        assert_eq!(c.lebesgue_number(), f64::INFINITY);
        assert_eq!(c.mesh(), 3.0);
    }

    #[test]
    fn duplicates_counted_once() {
        let s = line(3);
        let c = Cover::new(s, vec![vec![0, 1], vec![1, 2], vec![1, 0]], None).unwrap();
        assert_eq!(c.multiplicity(), 2);
    }

    #[test]
    fn uncovered_point_rejected() {
        assert!(Cover::new(line(3), vec![vec![0, 1]], None).is_err());
    }

    #[test]
    fn overlapping_family_rejected() {
        let r = Cover::new(line(3), vec![vec![0, 1], vec![1, 2]], Some(vec![vec![0, 1]]));
        assert!(r.is_err());
    }

    #[test]
    fn l_disjointness_witness() {
        let s = line(4);
        let c = Cover::new(s.clone(), vec![vec![0, 1], vec![2, 3]], Some(vec![vec![0, 1]])).unwrap();
        let w = c
            .disjointness_witness(Some(&Entourage::radius(s.clone(), 1.5).unwrap()))
            .unwrap()
            .unwrap();
        assert_eq!(w.pair, (1, 2));
        assert!(c.disjointness_witness(Some(&Entourage::diagonal(s))).unwrap().is_none());
    }

    #[test]
    fn sorted_helpers() {
        assert!(is_sorted_subset(&[1, 3], &[0, 1, 2, 3]));
        assert!(!is_sorted_subset(&[1, 4], &[0, 1, 2, 3]));
        assert_eq!(sorted_intersection(&[1, 2, 5], &[2, 5, 7]), vec![2, 5]);
        assert_eq!(sorted_difference(&[1, 2, 5], &[2, 7]), vec![1, 5]);
        assert_eq!(sorted_union(&[1, 5], &[2, 5, 7]), vec![1, 2, 5, 7]);
    }
}
