//! Sampled metrisable compactifications.
//!
//! A [`CompactificationModel`] samples `hX` with a designated corona. It provides
//! the filtration `X_i = {x | d(x, νX) ≥ 1/i}`, the maps `f: νX×ℕ → X` and
//! `g: X → νX×ℕ`, and the finite-window test for continuously controlled
//! entourages. [`corona_dim_cover`] builds the cover of `νX×ℕ` from a schedule of
//! colored covers of the corona.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::sync::Arc;

use serde::Serialize;

use crate::certificate::{num, Certificate};
use crate::cover::{is_sorted_subset, sorted_union, Cover};
use crate::entourage::Entourage;
use crate::error::{Error, Result};
use crate::space::Space;
use crate::transform::ColoredCover;

const ANCHOR_EQUIV: &str = "corona-equivalence";
const ANCHOR_CC: &str = "corona-controlled";
const ANCHOR_DIM: &str = "corona-dim-cover";

/// Slack used when comparing `d(x, νX)` with `1/i`.
const LEVEL_TOL: f64 = 1e-12;

/// Sample of a compact metric space `hX` split into interior and corona.
#[derive(Debug, Clone)]
pub struct CompactificationModel {
    ambient: Arc<Space>,
    interior: Vec<u32>,
    corona: Vec<u32>,
    /// Per interior position: filtration level, distance to the corona, nearest corona point.
    level: Vec<u32>,
    to_corona: Vec<f64>,
    nearest: Vec<u32>,
    position: Vec<Option<u32>>,
}

impl CompactificationModel {
    /// Interior is the complement of `corona`; every interior point must keep a
    /// positive distance from it.
    pub fn new(ambient: Arc<Space>, corona: Vec<u32>) -> Result<Self> {
        let n = ambient.len();
        let mut corona = corona;
        corona.sort_unstable();
        corona.dedup();
        if corona.is_empty() {
            return Err(Error::invalid("the corona sample is empty"));
        }
        if let Some(&x) = corona.iter().find(|&&x| x as usize >= n) {
            return Err(Error::invalid(format!("corona index {x} is outside {n} points")));
        }
        let interior: Vec<u32> = (0..n as u32).filter(|x| corona.binary_search(x).is_err()).collect();
        if interior.is_empty() {
            return Err(Error::invalid("the interior sample is empty"));
        }
        let mut level = Vec::with_capacity(interior.len());
        let mut to_corona = Vec::with_capacity(interior.len());
        let mut nearest = Vec::with_capacity(interior.len());
        let mut position = vec![None; n];
        for (p, &x) in interior.iter().enumerate() {
            position[x as usize] = Some(p as u32);
            let (c, d) = nearest_in(&ambient, x as usize, &corona);
            if d <= LEVEL_TOL {
                return Err(Error::invalid(format!("interior point {x} lies on the corona")));
            }
            level.push(level_of(d));
            to_corona.push(d);
            nearest.push(c);
        }
        Ok(CompactificationModel { ambient, interior, corona, level, to_corona, nearest, position })
    }

    /// `hX = [0,1]` sampled at `k/steps`, corona `{1}`.
    pub fn unit_interval(steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::invalid("steps must be positive"));
        }
        let coords = (0..=steps).map(|k| vec![k as f64 / steps as f64]).collect();
        let space = Arc::new(Space::points(1, coords)?);
        Self::new(space, vec![steps as u32])
    }

    /// Closed unit disk: the centre, `rings - 1` interior circles of radius `j/rings`
    /// and the boundary circle as corona, each circle with `angles` points.
    pub fn disk(rings: usize, angles: usize) -> Result<Self> {
        if rings < 2 || angles < 3 {
            return Err(Error::invalid("a disk model needs at least 2 rings and 3 angles"));
        }
        let mut coords = vec![vec![0.0, 0.0]];
        for j in 1..=rings {
            let r = j as f64 / rings as f64;
            for t in 0..angles {
                let phi = std::f64::consts::TAU * t as f64 / angles as f64;
                coords.push(vec![r * phi.cos(), r * phi.sin()]);
            }
        }
        let n = coords.len();
        let space = Arc::new(Space::points(2, coords)?);
        Self::new(space, ((n - angles) as u32..n as u32).collect())
    }

    pub fn ambient(&self) -> &Arc<Space> {
        &self.ambient
    }

    pub fn interior(&self) -> &[u32] {
        &self.interior
    }

    pub fn corona(&self) -> &[u32] {
        &self.corona
    }

    /// The interior sample as a space of its own; entourages for
    /// [`check_cc_entourage`] live here.
    pub fn interior_space(&self) -> Result<Arc<Space>> {
        Ok(Arc::new(Space::subspace(self.ambient.clone(), self.interior.clone())?))
    }

    /// Largest filtration level on the sample.
    pub fn depth(&self) -> u32 {
        self.level.iter().copied().max().unwrap_or(0)
    }

    /// Level of the interior point at position `p`.
    pub fn level_at(&self, p: usize) -> u32 {
        self.level[p]
    }

    /// `d(x, νX)` for the interior point at position `p`.
    pub fn distance_to_corona(&self, p: usize) -> f64 {
        self.to_corona[p]
    }

    /// `X_i` as ambient indices.
    pub fn filtration(&self, i: u32) -> Vec<u32> {
        self.interior
            .iter()
            .zip(&self.level)
            .filter(|(_, &l)| l <= i)
            .map(|(&x, _)| x)
            .collect()
    }

    /// `f(x̄, n)`: the point of `X_n` nearest to `x̄`, lowest index on ties.
    pub fn map_f(&self, xbar: u32, n: u32) -> Result<u32> {
        if self.corona.binary_search(&xbar).is_err() {
            return Err(Error::invalid(format!("{xbar} is not a corona point")));
        }
        let xn = self.filtration(n);
        if xn.is_empty() {
            return Err(Error::invalid(format!("X_{n} is empty on the sample")));
        }
        Ok(nearest_in(&self.ambient, xbar as usize, &xn).0)
    }

    /// `g(x) = (x̄, i)` with `x ∈ X_i \ X_{i-1}` and `x̄` the nearest corona point.
    pub fn map_g(&self, x: u32) -> Result<(u32, u32)> {
        let p = self.interior_position(x)?;
        Ok((self.nearest[p], self.level[p]))
    }

    fn interior_position(&self, x: u32) -> Result<usize> {
        self.position
            .get(x as usize)
            .copied()
            .flatten()
            .map(|p| p as usize)
            .ok_or_else(|| Error::invalid(format!("{x} is not an interior point")))
    }

    /// `a_i = max_x̄ d(X_i, x̄)` for `i = 1..=depth` (`+∞` while `X_i` is empty).
    pub fn a_sequence(&self) -> Vec<f64> {
        (1..=self.depth())
            .map(|i| {
                let xi = self.filtration(i);
                if xi.is_empty() {
                    return f64::INFINITY;
                }
                self.corona
                    .iter()
                    .map(|&c| self.ambient.dist_to_set(c as usize, &xi))
                    .fold(0.0, f64::max)
            })
            .collect()
    }

    /// Full `f` and `g` tables with the closeness bounds of the equivalence.
    pub fn equivalence(&self) -> Result<EquivalenceReport> {
        let depth = self.depth();
        let a = self.a_sequence();
        let mut g_table = Vec::with_capacity(self.interior.len());
        let mut round_trip_worst: Option<(u32, f64, f64)> = None;
        let mut round_trip_ok = true;
        for (p, &x) in self.interior.iter().enumerate() {
            let (xbar, i) = (self.nearest[p], self.level[p]);
            let back = self.map_f(xbar, i)?;
            let d = self.ambient.dist(back as usize, x as usize);
            g_table.push(GEntry { x, corona: xbar, level: i, f_of_g: back, distance: d });
            if i >= 2 {
                let bound = 2.0 / (i - 1) as f64;
                let ok = d <= bound + 1e-12;
                round_trip_ok &= ok;
                let slack = bound - d;
                if round_trip_worst.is_none_or(|(_, _, s)| slack < s) || !ok {
                    round_trip_worst = Some((x, d, slack));
                }
            }
        }
        let mut f_table = Vec::new();
        let mut band_failure: Option<String> = None;
        let mut band_checked = 0usize;
        for k in 1..=depth {
            let ak = a[k as usize - 1];
            if !ak.is_finite() {
                continue;
            }
            let nk = n_of(ak);
            for &xbar in &self.corona {
                let y = self.map_f(xbar, k)?;
                let (xt, kt) = self.map_g(y)?;
                let shift = self.ambient.dist(xbar as usize, xt as usize);
                let upper = kt <= k;
                let lower = nk.is_none_or(|nk| kt > nk);
                let close = shift <= 2.0 * ak + 1e-12;
                band_checked += 1;
                if band_failure.is_none() && !(upper && lower && close) {
                    band_failure = Some(format!("x̄={xbar} k={k} -> ({xt},{kt}), n_k={nk:?}, shift={shift}"));
                }
                f_table.push(FEntry { corona: xbar, k, f: y, g_corona: xt, g_level: kt });
            }
        }
        let mut cert = Certificate::new();
        cert.holds(
            ANCHOR_EQUIV,
            "d(f(g(x)),x) <= 2/(i-1) for i >= 2",
            round_trip_ok,
            round_trip_worst.map(|(x, d, s)| format!("tightest x={x} d={d} slack={s}")),
        );
        cert.holds(
            ANCHOR_EQUIV,
            "g(f(x,k)) = (x',k') with n_k < k' <= k and d(x,x') <= 2a_k",
            band_failure.is_none(),
            band_failure.or(Some(format!("{band_checked} pairs checked"))),
        );
        Ok(EquivalenceReport { depth, a, f_table, g_table, certificate: cert })
    }
}

fn nearest_in(space: &Space, x: usize, set: &[u32]) -> (u32, f64) {
    let mut best = (set[0], f64::INFINITY);
    for &y in set {
        let d = space.dist(x, y as usize);
        if d < best.1 {
            best = (y, d);
        }
    }
    best
}

/// Least `i ≥ 1` with `d ≥ 1/i`.
fn level_of(d: f64) -> u32 {
    let mut i = (1.0 / d).ceil().max(1.0) as u32;
    while i > 1 && 1.0 / (i - 1) as f64 <= d + LEVEL_TOL {
        i -= 1;
    }
    while 1.0 / i as f64 > d + LEVEL_TOL {
        i += 1;
    }
    i
}

/// `n = max{n | a < 1/n}`, if `a < 1`, with the slack used for levels.
fn n_of(a: f64) -> Option<u32> {
    let a = a + LEVEL_TOL;
    if a >= 1.0 {
        return None;
    }
    if a * (u32::MAX as f64) < 1.0 {
        return Some(u32::MAX);
    }
    let mut n = (1.0 / a).floor().max(1.0) as u32;
    while n > 1 && a >= 1.0 / n as f64 {
        n -= 1;
    }
    while a < 1.0 / (n + 1) as f64 {
        n += 1;
    }
    Some(n)
}

#[derive(Debug, Clone, Serialize)]
pub struct GEntry {
    pub x: u32,
    pub corona: u32,
    pub level: u32,
    pub f_of_g: u32,
    pub distance: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FEntry {
    pub corona: u32,
    pub k: u32,
    pub f: u32,
    pub g_corona: u32,
    pub g_level: u32,
}

#[derive(Debug, Clone, Serialize)]
pub struct EquivalenceReport {
    pub depth: u32,
    #[serde(serialize_with = "serialize_nums")]
    pub a: Vec<f64>,
    pub f_table: Vec<FEntry>,
    pub g_table: Vec<GEntry>,
    pub certificate: Certificate,
}

fn serialize_nums<S: serde::Serializer>(v: &[f64], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for &x in v {
        seq.serialize_element(&num(x))?;
    }
    seq.end()
}

/// Reference decay for the ρ-sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Decay {
    /// `ρ_i ≤ c/i`.
    Harmonic(f64),
    /// `ρ_i ≤ diam(hX)/i`.
    AmbientHarmonic,
}

#[derive(Debug, Clone, Serialize)]
pub struct CcVerdict {
    pub controlled: bool,
    /// `ρ_i` for `i = 1..=depth`.
    pub rho: Vec<f64>,
    pub constant: f64,
    /// First index from which the tail is tested.
    pub tail_from: u32,
    pub witness: Option<String>,
}

impl CcVerdict {
    pub fn certificate(&self) -> Certificate {
        let mut cert = Certificate::new();
        let last = self.rho.last().copied().unwrap_or(0.0);
        cert.push(
            ANCHOR_CC,
            "rho_i <= c/i on the window tail",
            format!("c = {}, i >= {}", self.constant, self.tail_from),
            num(last),
            self.controlled,
            self.witness.clone(),
        );
        cert
    }
}

/// Finite-window test of continuous control.
///
/// Computes `ρ_i = max{d(x,y) | (x,y) ∈ E, (x,y) ∉ X_i²}` and declares `E`
/// controlled when `ρ_i ≤ c/i` on the upper half of the filtration window.
pub fn check_cc_entourage(model: &CompactificationModel, e: &Entourage, decay: Decay) -> Result<CcVerdict> {
    let n = model.interior.len();
    if e.space().len() != n {
        return Err(Error::invalid(format!(
            "entourage has {} points, the interior has {n}",
            e.space().len()
        )));
    }
    let depth = model.depth();
    let pairs = e.pair_set()?;
    // ρ_i only sees pairs whose larger level exceeds i.
    let mut by_level = vec![0.0f64; depth as usize + 2];
    for x in 0..n {
        for &y in pairs.row(x) {
            let top = model.level[x].max(model.level[y as usize]) as usize;
            let d = model.ambient.dist(model.interior[x] as usize, model.interior[y as usize] as usize);
            by_level[top] = by_level[top].max(d);
        }
    }
    let mut rho = vec![0.0; depth as usize];
    let mut acc = 0.0f64;
    for i in (1..=depth as usize).rev() {
        if i < by_level.len() - 1 {
            acc = acc.max(by_level[i + 1]);
        }
        rho[i - 1] = acc;
    }
    let constant = match decay {
        Decay::Harmonic(c) => c,
        Decay::AmbientHarmonic => {
            let all: Vec<u32> = (0..model.ambient.len() as u32).collect();
            model.ambient.diameter(&all)
        }
    };
    let tail_from = depth / 2 + 1;
    let witness = (tail_from..=depth)
        .find(|&i| rho[i as usize - 1] > constant / i as f64 + 1e-12)
        .map(|i| format!("rho_{i} = {} > {}/{i}", rho[i as usize - 1], constant));
    Ok(CcVerdict { controlled: witness.is_none(), rho, constant, tail_from, witness })
}

/// Source of the covers `V_k` of the corona.
#[derive(Debug, Clone)]
enum Source {
    Point,
    Circle,
    Explicit(BTreeMap<usize, Cover>),
}

/// Covers `V_k` of a corona sample with `mesh ≤ 1/k` in `families` disjoint families.
#[derive(Debug, Clone)]
pub struct CoronaCoverSchedule {
    space: Arc<Space>,
    families: usize,
    source: Source,
}

impl CoronaCoverSchedule {
    /// One-point corona with the trivial cover.
    pub fn point() -> Result<Self> {
        let space = Arc::new(Space::points(1, vec![vec![0.0]])?);
        Ok(CoronaCoverSchedule { space, families: 1, source: Source::Point })
    }

    /// Unit circle sampled at `points` equally spaced angles (chord metric),
    /// covered by overlapping arcs in two families.
    pub fn circle(points: usize) -> Result<Self> {
        if points < 4 || points % 2 == 1 {
            return Err(Error::invalid("a circle schedule needs an even number of at least 4 points"));
        }
        let coords = (0..points)
            .map(|t| {
                let phi = std::f64::consts::TAU * t as f64 / points as f64;
                vec![phi.cos(), phi.sin()]
            })
            .collect();
        let space = Arc::new(Space::points(2, coords)?);
        Ok(CoronaCoverSchedule { space, families: 2, source: Source::Circle })
    }

    /// Explicit covers keyed by scale; `V_k` is the entry with the least key `≥ k`.
    pub fn explicit(space: Arc<Space>, families: usize, covers: Vec<(usize, Cover)>) -> Result<Self> {
        if families == 0 {
            return Err(Error::invalid("a schedule needs at least one family"));
        }
        let mut map = BTreeMap::new();
        for (k, c) in covers {
            if !c.space().same_as(&space) {
                return Err(Error::invalid(format!("cover at scale {k} lives over another space")));
            }
            map.insert(k, c);
        }
        Ok(CoronaCoverSchedule { space, families, source: Source::Explicit(map) })
    }

    pub fn space(&self) -> &Arc<Space> {
        &self.space
    }

    pub fn families(&self) -> usize {
        self.families
    }

    /// `V_k`, verified: mesh `≤ 1/k`, at most `families` families, each disjoint.
    pub fn cover(&self, k: usize) -> Result<ColoredCover> {
        if k == 0 {
            return Err(Error::invalid("scales start at 1"));
        }
        let cover = match &self.source {
            Source::Point => Cover::new(self.space.clone(), vec![vec![0]], Some(vec![vec![0]]))?,
            Source::Circle => circle_arcs(&self.space, k)?,
            Source::Explicit(map) => map
                .range(k..)
                .next()
                .map(|(_, c)| c.clone())
                .ok_or_else(|| Error::contract("schedule has no cover at this scale", format!("k={k}")))?,
        };
        let mesh = cover.mesh();
        if mesh > 1.0 / k as f64 + 1e-12 {
            return Err(Error::contract(
                "schedule cover is too coarse",
                format!("k={k}: mesh {mesh} > 1/{k}"),
            ));
        }
        if cover.families().is_none() || cover.family_count() > self.families {
            return Err(Error::contract(
                "schedule cover has the wrong families",
                format!("k={k}: {} families, expected at most {}", cover.family_count(), self.families),
            ));
        }
        ColoredCover::new(cover, Entourage::diagonal(self.space.clone()))
            .map_err(|e| Error::contract("schedule families are not disjoint", format!("k={k}: {e}")))
    }
}

/// Coarsest arc cover with an even number of arcs and mesh `≤ 1/k`.
fn circle_arcs(space: &Arc<Space>, k: usize) -> Result<Cover> {
    let n = space.len();
    let bound = 1.0 / k as f64;
    for m in (2..=n).step_by(2) {
        let start: Vec<usize> = (0..=m).map(|j| j * n / m).collect();
        let gap = n / m;
        let overlap = gap / 2;
        let arcs: Vec<Vec<u32>> = (0..m)
            .map(|j| {
                let len = start[j + 1] - start[j] + overlap;
                (0..len).map(|t| ((start[j] + t) % n) as u32).collect()
            })
            .collect();
        let worst = arcs.iter().map(|a| space.diameter(a)).fold(0.0, f64::max);
        if worst <= bound + 1e-12 {
            let families = vec![(0..m).step_by(2).collect(), (1..m).step_by(2).collect()];
            return Cover::new(space.clone(), arcs, Some(families));
        }
    }
    Err(Error::Internal("singleton arcs exceed the mesh bound".into()))
}

/// Levels `0..=depth` as a space.
pub fn level_space(depth: usize) -> Result<Arc<Space>> {
    Ok(Arc::new(Space::points(1, (0..=depth).map(|m| vec![m as f64]).collect())?))
}

/// `{(m, m') | |m - m'| ≤ s}` on the level space.
pub fn level_shift(levels: Arc<Space>, s: usize) -> Result<Entourage> {
    Entourage::closed_radius(levels, s as f64)
}

/// Output of [`corona_dim_cover`].
#[derive(Debug, Clone)]
pub struct CoronaDimCover {
    pub cover: Cover,
    pub product: Arc<Space>,
    /// `E = {((x,m),(x',m')) | (m,m') ∈ E_ℕ, d(x,x') < δ_max(m,m')}`.
    pub entourage: Entourage,
    /// `l_0, l_1, …`.
    pub l: Vec<usize>,
    /// `k_{-1}, k_0, …`.
    pub k: Vec<usize>,
    /// `d_m` for every level.
    pub d: Vec<f64>,
    /// `b_i` for every level.
    pub b: Vec<u32>,
    pub certificate: Certificate,
}

struct Scale {
    cover: Cover,
    lebesgue: f64,
    /// Family number `j_V` in `1..=n` per set.
    family: Vec<usize>,
}

/// The cover of `νX × {0..depth}` of multiplicity `≤ n+1` with appetite `E`.
///
/// `delta[m]` bounds the corona distance of `E`-pairs whose larger level is `m`;
/// `e_levels` is `E_ℕ` on [`level_space`]`(depth)`.
pub fn corona_dim_cover(
    schedule: &CoronaCoverSchedule,
    delta: &[f64],
    e_levels: &Entourage,
    depth: usize,
) -> Result<CoronaDimCover> {
    let levels = depth + 1;
    let n = schedule.families;
    if delta.len() < levels {
        return Err(Error::invalid(format!("{} deltas for {levels} levels", delta.len())));
    }
    if let Some(m) = (0..levels).find(|&m| !(delta[m] > 0.0) || (m > 0 && delta[m] > delta[m - 1])) {
        return Err(Error::invalid(format!("delta must be positive and non-increasing (level {m})")));
    }
    if e_levels.space().len() != levels {
        return Err(Error::invalid(format!(
            "E_N has {} points, expected {levels}",
            e_levels.space().len()
        )));
    }
    // E_ℕ ∪ E_ℕ⁻¹ ∪ Δ_1.
    let raw = e_levels.pair_set()?;
    let mut rows: Vec<Vec<u32>> = (0..levels)
        .map(|m| {
            let lo = m.saturating_sub(1);
            let hi = (m + 1).min(depth);
            (lo as u32..=hi as u32).collect()
        })
        .collect();
    for m in 0..levels {
        for &m2 in raw.row(m) {
            rows[m].push(m2);
            rows[m2 as usize].push(m as u32);
        }
    }
    for r in &mut rows {
        r.sort_unstable();
        r.dedup();
    }
    // rank[m] = least k with m ∈ K_k.
    let mut rank = vec![usize::MAX; levels];
    rank[0] = 0;
    let mut queue = VecDeque::from([0usize]);
    while let Some(m) = queue.pop_front() {
        for &m2 in &rows[m] {
            if rank[m2 as usize] == usize::MAX {
                rank[m2 as usize] = rank[m] + 1;
                queue.push_back(m2 as usize);
            }
        }
    }
    let saturation = *rank.iter().max().unwrap_or(&0);

    let mut chain = Chain { schedule, scales: HashMap::new(), l: vec![1] };

    // k_{-2} = 0; k_i > k_{i-1} + 2n with δ_m < 1/l_{i+2} for every m ∉ K_{k_i - 2}.
    let mut k: Vec<usize> = Vec::new();
    let mut prev = 0usize;
    let mut i = -1i64;
    loop {
        let target = 1.0 / chain.l((i + 2) as usize)? as f64;
        let mut ki = prev + 2 * n + 1;
        while ki < saturation + 2 && (0..levels).any(|m| rank[m] + 2 > ki && delta[m] >= target) {
            ki += 1;
        }
        k.push(ki);
        prev = ki;
        if i >= 0 && ki >= saturation {
            break;
        }
        i += 1;
    }
    // k[idx] holds k_{idx-1}.
    let kk = |i: i64| -> usize { if i < -1 { 0 } else { k[(i + 1) as usize] } };
    let last = k.len() as i64 - 2;
    for i in 0..=last + 1 {
        let li = chain.l(i as usize)?;
        chain.scale(li)?;
    }

    // φ_i: V_{l_i} → V_{l_{i-1}} with W ⊆ φ_i(W).
    let mut phi: Vec<Vec<usize>> = vec![Vec::new()];
    for i in 1..=(last + 1) as usize {
        let (fine, coarse) = (&chain.scales[&chain.l[i]].cover, &chain.scales[&chain.l[i - 1]].cover);
        let mut map = Vec::with_capacity(fine.len());
        for (w, set) in fine.sets().iter().enumerate() {
            let v = if set.is_empty() {
                Some(0)
            } else {
                coarse.sets().iter().position(|v| is_sorted_subset(set, v))
            };
            let v = v.ok_or_else(|| {
                Error::contract(
                    "no coarser set contains a finer one",
                    format!("k={}: set {w} of V_{}", chain.l[i - 1], chain.l[i]),
                )
            })?;
            map.push(v);
        }
        phi.push(map);
    }

    let width = levels;
    let idx = move |x: u32, m: usize| x * width as u32 + m as u32;
    let band = |lo: i64, hi: i64| -> Vec<usize> {
        (0..levels)
            .filter(|&m| (lo < 0 || rank[m] as i64 > lo) && rank[m] as i64 <= hi)
            .collect()
    };
    let mut parts: Vec<(Vec<u32>, Vec<usize>)> = Vec::new();
    let mut sets: Vec<Vec<u32>> = Vec::new();
    let mut push = |pieces: Vec<(&[u32], Vec<usize>)>| {
        let mut set = Vec::new();
        let mut spatial = Vec::new();
        let mut lv = Vec::new();
        for (space_part, level_part) in pieces {
            if space_part.is_empty() || level_part.is_empty() {
                continue;
            }
            spatial = sorted_union(&spatial, space_part);
            for &x in space_part {
                for &m in &level_part {
                    set.push(idx(x, m));
                }
            }
            lv.extend(level_part);
        }
        if !set.is_empty() {
            set.sort_unstable();
            lv.sort_unstable();
            lv.dedup();
            sets.push(set);
            parts.push((spatial, lv));
        }
    };

    let v0 = &chain.scales[&chain.l[0]];
    let u0: Vec<(&[u32], Vec<usize>)> = v0
        .cover
        .sets()
        .iter()
        .zip(&v0.family)
        .map(|(v, &j)| (v.as_slice(), band(-1, (kk(0) + 2 * j) as i64)))
        .collect();
    push(u0);
    for i in 1..=last {
        let cur = &chain.scales[&chain.l[i as usize]];
        let prev_scale = &chain.scales[&chain.l[i as usize - 1]];
        let next = &chain.scales[&chain.l[i as usize + 1]];
        for (v, set) in cur.cover.sets().iter().enumerate() {
            let j_phi = prev_scale.family[phi[i as usize][v]];
            let j_v = cur.family[v];
            let breve: Vec<u32> = next
                .cover
                .sets()
                .iter()
                .enumerate()
                .filter(|(w, _)| phi[i as usize + 1][*w] == v)
                .fold(Vec::new(), |acc, (_, w)| sorted_union(&acc, w));
            let a = band((kk(i - 1) + 2 * j_phi) as i64 - 2, kk(i) as i64);
            let b = band(kk(i) as i64, (kk(i) + 2 * j_v) as i64);
            push(vec![(set.as_slice(), a), (breve.as_slice(), b)]);
        }
    }

    let corona = schedule.space.clone();
    let product = Arc::new(Space::product(corona.clone(), level_space(depth)?)?);
    let cover = Cover::new(product.clone(), sets, None)
        .map_err(|e| Error::Internal(format!("corona cover construction: {e}")))?;

    let delta_owned: Vec<f64> = delta[..levels].to_vec();
    let rows = Arc::new(rows);
    let image_space = corona.clone();
    let entourage = Entourage::lazy(product.clone(), "corona E", move |p: usize| {
        let (x, m) = (p / width, p % width);
        let mut out = Vec::new();
        for x2 in 0..image_space.len() {
            let d = image_space.dist(x, x2);
            for &m2 in &rows[m] {
                if d < delta_owned[m.max(m2 as usize)] {
                    out.push(idx(x2 as u32, m2 as usize));
                }
            }
        }
        out.sort_unstable();
        out
    });

    // d_m bookkeeping.
    let all: Vec<u32> = (0..corona.len() as u32).collect();
    let top = corona.diameter(&all).max(1.0);
    let band_of = |m: usize| -> i64 { (-1..=last).find(|&i| rank[m] <= kk(i)).unwrap_or(last) };
    let d: Vec<f64> = (0..levels)
        .map(|m| {
            let i = band_of(m);
            if i <= 1 {
                top
            } else {
                1.0 / chain.l[(i - 2) as usize] as f64
            }
        })
        .collect();
    // b_i = min{n | (n, i) in the interval completion of the level relation of Δ_U}.
    let mut b: Vec<u32> = (0..levels as u32).collect();
    for (_, lv) in &parts {
        let (lo, hi) = (lv[0], *lv.last().unwrap());
        for bi in b.iter_mut().take(hi + 1).skip(lo) {
            *bi = (*bi).min(lo as u32);
        }
    }

    let mut cert = Certificate::new();
    let (mult, mult_w) = cover
        .multiplicity_witness()
        .map_or((0, None), |(x, c)| (c, Some(format!("point {x} (corona {}, level {})", x as usize / width, x as usize % width))));
    cert.at_most(ANCHOR_DIM, "multiplicity", (n + 1) as f64, mult as f64, mult_w);
    let miss = cover.appetite_witness(&entourage)?;
    cert.holds(
        ANCHOR_DIM,
        "appetite E",
        miss.is_none(),
        miss.map(|p| format!("E((corona {}, level {})) fits in no set", p as usize / width, p as usize % width)),
    );
    let chain_ok = (1..chain.l.len()).all(|i| {
        let prev = &chain.scales.get(&chain.l[i - 1]);
        chain.l[i] > chain.l[i - 1] && prev.is_none_or(|s| 1.0 / (chain.l[i] as f64) < s.lebesgue)
    });
    cert.holds(ANCHOR_DIM, "1/l_i < L(V_l_{i-1}), l increasing", chain_ok, Some(format!("l = {:?}", chain.l)));
    let k_ok = (0..k.len()).all(|t| k[t] > if t == 0 { 0 } else { k[t - 1] } + 2 * n);
    cert.holds(ANCHOR_DIM, "k_i > k_{i-1} + 2n", k_ok, Some(format!("k_-1.. = {k:?}")));
    let mut bounded: Option<String> = None;
    for (u, (spatial, lv)) in parts.iter().enumerate() {
        let diam = corona.diameter(spatial);
        let allowed = lv.iter().map(|&m| d[m]).fold(f64::INFINITY, f64::min);
        if diam > allowed + 1e-12 && bounded.is_none() {
            bounded = Some(format!("set {u}: corona diameter {diam} > d = {allowed}"));
        }
    }
    cert.holds(ANCHOR_DIM, "corona diameter of each set <= min d_m over its levels", bounded.is_none(), bounded);
    let mut by_rank: Vec<usize> = (0..levels).collect();
    by_rank.sort_by_key(|&m| (rank[m], m));
    let monotone = by_rank.windows(2).all(|w| d[w[1]] <= d[w[0]]);
    let floor = d.iter().copied().fold(f64::INFINITY, f64::min);
    cert.push(ANCHOR_DIM, "d_m non-increasing", true, monotone, monotone, Some(format!("floor {floor}")));
    let spread = parts.iter().enumerate().find_map(|(u, (_, lv))| {
        let bands: Vec<i64> = lv.iter().map(|&m| band_of(m)).filter(|&i| i >= 0).collect();
        let (lo, hi) = (bands.iter().min()?, bands.iter().max()?);
        (hi - lo > 1).then(|| format!("set {u} spans bands {lo}..{hi}"))
    });
    cert.holds(ANCHOR_DIM, "each set meets at most two consecutive bands", spread.is_none(), spread);
    let b_monotone = b.windows(2).all(|w| w[0] <= w[1]);
    cert.holds(
        ANCHOR_DIM,
        "b_i non-decreasing",
        b_monotone,
        Some(format!("b_{depth} = {}", b[depth])),
    );

    let l = chain.l.clone();
    Ok(CoronaDimCover { cover, product, entourage, l, k, d, b, certificate: cert })
}

struct Chain<'a> {
    schedule: &'a CoronaCoverSchedule,
    scales: HashMap<usize, Scale>,
    l: Vec<usize>,
}

impl Chain<'_> {
    fn scale(&mut self, k: usize) -> Result<&Scale> {
        if !self.scales.contains_key(&k) {
            let cover = self.schedule.cover(k)?.into_cover();
            let lebesgue = cover.lebesgue_number();
            if !(lebesgue > 0.0) {
                return Err(Error::contract("schedule cover has no positive Lebesgue number", format!("k={k}")));
            }
            let family = cover
                .family_of()
                .ok_or_else(|| Error::Internal("schedule cover lost its families".into()))?
                .iter()
                .map(|f| f + 1)
                .collect();
            self.scales.insert(k, Scale { cover, lebesgue, family });
        }
        Ok(&self.scales[&k])
    }

    /// `l_i`, extending the chain on demand.
    fn l(&mut self, i: usize) -> Result<usize> {
        while self.l.len() <= i {
            let prev = *self.l.last().unwrap();
            let lebesgue = self.scale(prev)?.lebesgue;
            let from_lebesgue = if lebesgue.is_finite() { (1.0 / lebesgue).floor() as usize + 1 } else { 0 };
            self.l.push(from_lebesgue.max(prev + 1));
        }
        Ok(self.l[i])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn levels_respect_tolerance() {
        assert_eq!(level_of(1.0 - 0.9), 10);
        assert_eq!(level_of(1.0), 1);
        assert_eq!(level_of(0.3), 4);
        assert_eq!(n_of(0.3), Some(3));
        assert_eq!(n_of(0.25), Some(3));
        assert_eq!(n_of(1.0 - 0.8), Some(4));
        assert_eq!(n_of(1.5), None);
    }

    #[test]
    fn interval_maps() {
        let m = CompactificationModel::unit_interval(100).unwrap();
        assert_eq!(m.map_f(100, 10).unwrap(), 90);
        assert_eq!(m.map_g(90).unwrap(), (100, 10));
        assert_eq!(m.map_g(0).unwrap(), (100, 1));
        assert_eq!(m.map_f(100, 1).unwrap(), 0);
        assert!(m.map_f(50, 3).is_err());
        let report = m.equivalence().unwrap();
        assert!(report.certificate.all_pass(), "{:?}", report.certificate);
    }

    #[test]
    fn disk_radial_nearest() {
        let m = CompactificationModel::disk(10, 16).unwrap();
        let xbar = m.corona()[3];
        let y = m.map_f(xbar, 5).unwrap();
        let c = m.ambient().coords(y as usize).unwrap();
        let r = (c[0] * c[0] + c[1] * c[1]).sqrt();
        assert!((r - 0.8).abs() < 1e-12);
        assert!(m.equivalence().unwrap().certificate.all_pass());
    }

    #[test]
    fn cc_verdicts() {
        let m = CompactificationModel::unit_interval(100).unwrap();
        let s = m.interior_space().unwrap();
        let diag = Entourage::diagonal(s.clone()).materialize().unwrap();
        let v = check_cc_entourage(&m, &diag, Decay::AmbientHarmonic).unwrap();
        assert!(v.controlled && v.rho.iter().all(|&r| r == 0.0));
        let band = Entourage::radius(s.clone(), 0.1).unwrap().materialize().unwrap();
        let v = check_cc_entourage(&m, &band, Decay::AmbientHarmonic).unwrap();
        assert!(!v.controlled);
    }

    #[test]
    fn point_corona_bands() {
        let sched = CoronaCoverSchedule::point().unwrap();
        let depth = 60;
        let e = level_shift(level_space(depth).unwrap(), 1).unwrap();
        let delta: Vec<f64> = (0..=depth).map(|m| 0.5 / (m + 1) as f64).collect();
        let out = corona_dim_cover(&sched, &delta, &e, depth).unwrap();
        assert!(out.certificate.all_pass(), "{:#?}", out.certificate);
        assert!(out.cover.multiplicity() <= 2);
    }

    #[test]
    fn circle_schedule_meshes() {
        let sched = CoronaCoverSchedule::circle(32).unwrap();
        for k in [1, 2, 5, 40] {
            let c = sched.cover(k).unwrap();
            assert!(c.cover().mesh() <= 1.0 / k as f64 + 1e-12);
            assert!(c.cover().multiplicity() <= 2);
        }
    }

    #[test]
    fn circle_corona_cover() {
        let sched = CoronaCoverSchedule::circle(96).unwrap();
        let depth = 200;
        let e = level_shift(level_space(depth).unwrap(), 1).unwrap();
        let delta: Vec<f64> = (0..=depth).map(|m| 0.5 / (m + 1) as f64).collect();
        let out = corona_dim_cover(&sched, &delta, &e, depth).unwrap();
        assert!(out.certificate.all_pass(), "{:#?}", out.certificate);
    }
}
