//! Covers of the sampled hyperbolic plane lifted from arc covers of concentric circles.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use crate::certificate::Certificate;
use crate::cover::Cover;
use crate::entourage::Entourage;
use crate::error::{Error, Result};
use crate::space::{Backing, Space};
use crate::transform::ColoredCover;

const ANCHOR: &str = "hyperbolic";
const SAMPLE_CAP: usize = 2_000_000;

fn curvature_scale(kappa: f64) -> Result<f64> {
    if !(kappa < 0.0) || !kappa.is_finite() {
        return Err(Error::invalid(format!("curvature must be negative, got {kappa}")));
    }
    Ok((-kappa).sqrt())
}

/// Gap `a` beyond which radial projection onto an inner circle is `δ`-Lipschitz on sets
/// of diameter below `a`: `(2/√-κ)·max{1, ln(2/δ)}`.
pub fn adjust_gap(kappa: f64, delta: f64) -> Result<f64> {
    let c = curvature_scale(kappa)?;
    if !(delta > 0.0) {
        return Err(Error::invalid("delta must be positive"));
    }
    Ok(2.0 / c * (2.0 / delta).ln().max(1.0))
}

/// Smallest `x` on the `0.01` lattice with `x > bound`.
fn lattice_above(bound: f64) -> f64 {
    let mut m = (bound * 100.0).floor() as i64 + 1;
    while (m as f64) / 100.0 <= bound {
        m += 1;
    }
    while m > 1 && ((m - 1) as f64) / 100.0 > bound {
        m -= 1;
    }
    m as f64 / 100.0
}

/// Sphere spacing `ρ` and shift `N` for the lift to reach Lebesgue number `L`.
///
/// `ρ` is the smallest value on the `0.01` lattice with `ρn > D`, `ρ > 2L` and
/// `ρn > (2/√-κ)·max{1, ln(2D/λ)}`; `N` is the smallest natural number with
/// `(N-1)ρ > 2L` and `(N-1)ρ > (2/√-κ)·max{1, ln(2L/λ)}`.
pub fn hyperbolic_params(kappa: f64, lambda: f64, d: f64, l: f64, n: usize) -> Result<(f64, usize)> {
    let c = curvature_scale(kappa)?;
    for (name, v) in [("lambda", lambda), ("D", d), ("L", l)] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::invalid(format!("{name} must be positive, got {v}")));
        }
    }
    if n == 0 {
        return Err(Error::invalid("n must be positive"));
    }
    let nf = n as f64;
    let theta_bound = 2.0 / c * (2.0 * d / lambda).ln().max(1.0);
    let mut rho = lattice_above((d / nf).max(theta_bound / nf).max(2.0 * l));
    while !(rho * nf > d && rho * nf > theta_bound && rho > 2.0 * l) {
        rho += 0.01;
    }
    let shift_bound = (2.0 * l).max(2.0 / c * (2.0 * l / lambda).ln().max(1.0));
    let mut big_n = 1usize;
    while !((big_n - 1) as f64 * rho > shift_bound) {
        big_n += 1;
    }
    Ok((rho, big_n))
}

/// Point where the geodesic from the basepoint to `x` crosses the circle of radius `kρ`.
pub fn radial_projection(x: (f64, f64), k: usize, rho: f64) -> Result<(f64, f64)> {
    let r = k as f64 * rho;
    if x.0 < r - 1e-12 {
        return Err(Error::invalid(format!("radius {} lies inside the circle of radius {r}", x.0)));
    }
    Ok((r, x.1))
}

/// Arc layout on one circle: `cells` equal cells, each widened by `alpha` on both sides.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereLayout {
    pub radius: f64,
    pub cells: u64,
    /// Angular widening of each cell.
    pub alpha: f64,
    /// Arclength of the widening.
    pub overlap: f64,
    pub circumference: f64,
}

impl SphereLayout {
    /// Half-open angular interval of arc `j` (the full turn for a single arc).
    pub fn interval(&self, j: u64) -> (f64, f64) {
        if self.cells == 1 {
            return (0.0, TAU);
        }
        let w = TAU / self.cells as f64;
        (j as f64 * w - self.alpha, (j + 1) as f64 * w + self.alpha)
    }

    pub fn family(&self, j: u64) -> usize {
        (j % 2) as usize
    }

    /// Arcs containing angle `phi`, at most one per family, in index order.
    pub fn arcs_containing(&self, phi: f64) -> Vec<u64> {
        if self.cells == 1 {
            return vec![0];
        }
        let phi = phi.rem_euclid(TAU);
        let m = self.cells;
        let cell = ((phi / TAU * m as f64).floor() as u64).min(m - 1);
        let mut out: Vec<u64> = [cell + m - 1, cell, cell + 1]
            .into_iter()
            .map(|j| j % m)
            .filter(|&j| contains_angle(self.interval(j), phi))
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }
}

fn contains_angle((s, e): (f64, f64), phi: f64) -> bool {
    if e - s >= TAU {
        return true;
    }
    let p = s + (phi - s).rem_euclid(TAU);
    p < e
}

fn contains_interval((s, e): (f64, f64), (a, b): (f64, f64)) -> bool {
    if e - s >= TAU {
        return true;
    }
    if b - a >= TAU {
        return false;
    }
    let p = s + (a - s).rem_euclid(TAU);
    p + (b - a) <= e
}

/// Two-colored arc covers of every circle `S_{kρ}` with Lebesgue number `λ` and mesh `D`.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereAtlas {
    pub kappa: f64,
    pub rho: f64,
    pub lambda: f64,
    pub mesh: f64,
    pub colors: usize,
}

impl SphereAtlas {
    pub fn new(kappa: f64, rho: f64, lambda: f64, mesh: f64) -> Result<Self> {
        curvature_scale(kappa)?;
        for (name, v) in [("rho", rho), ("lambda", lambda), ("D", mesh)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(SphereAtlas { kappa, rho, lambda, mesh, colors: 2 })
    }

    /// Layout of circle `k`: one arc when the circle has diameter at most `D`, otherwise
    /// an even number of cells widened by the angle of a `λ`-ball.
    pub fn layout(&self, k: usize) -> Result<SphereLayout> {
        let c = (-self.kappa).sqrt();
        let radius = k as f64 * self.rho;
        let circumference = TAU * (c * radius).sinh() / c;
        let single = SphereLayout { radius, cells: 1, alpha: PI, overlap: 0.0, circumference };
        if k == 0 || 2.0 * radius <= self.mesh {
            return Ok(single);
        }
        let s = (c * self.lambda / 2.0).sinh() / (c * radius).sinh();
        if s >= 1.0 {
            return Err(Error::invalid(format!(
                "circle {k} is too small for Lebesgue number {} with mesh {}",
                self.lambda, self.mesh
            )));
        }
        let alpha = 2.0 * s.asin();
        let overlap = alpha * (c * radius).sinh() / c;
        let room = self.mesh - 2.0 * overlap;
        if room <= 0.0 {
            return Err(Error::invalid(format!("mesh {} cannot host overlaps of {overlap}", self.mesh)));
        }
        let mut cells = (circumference / room).ceil().max(2.0) as u64;
        if cells % 2 == 1 {
            cells += 1;
        }
        if circumference / cells as f64 <= 2.0 * overlap {
            return Err(Error::invalid(format!("circle {k} cannot be split into disjoint same-color arcs")));
        }
        Ok(SphereLayout { radius, cells, alpha, overlap, circumference })
    }

    /// `Θ_k`: first arc of circle `k` (index order) containing the angular interval of
    /// arc `v` of circle `k + colors`.
    pub fn theta_choice(&self, k: usize, v: u64) -> Result<u64> {
        let inner = self.layout(k)?;
        let outer = self.layout(k + self.colors)?;
        let iv = outer.interval(v);
        if inner.cells == 1 {
            return Ok(0);
        }
        let mut cands = inner.arcs_containing(iv.0);
        cands.sort_unstable();
        cands
            .into_iter()
            .find(|&u| contains_interval(inner.interval(u), iv))
            .ok_or_else(|| {
                Error::contract(
                    format!("no arc of circle {k} contains the projection of arc {v} of circle {}", k + self.colors),
                    format!("sphere {} arc {v} interval [{}, {})", k + self.colors, iv.0, iv.1),
                )
            })
    }

    /// Sampled window of circle `k` with its arc cover and verified bounds.
    pub fn sphere_cover(&self, k: usize, spacing: f64, window: f64) -> Result<(ColoredCover, Certificate)> {
        let layout = self.layout(k)?;
        let c = (-self.kappa).sqrt();
        let scale = (c * layout.radius).sinh() / c;
        let half_angle = if scale > 0.0 { window / scale } else { PI };
        let cap = (2.0 * window / spacing).ceil() as usize + 1;
        if cap > SAMPLE_CAP {
            return Err(Error::ResourceLimit("sphere window needs too many samples".into()));
        }
        let pts = ring(self.kappa, layout.radius, spacing, half_angle, cap)?;
        let space = Arc::new(Space::hyperbolic_polar(self.kappa, pts)?);
        let mut keyed: BTreeMap<u64, Vec<u32>> = BTreeMap::new();
        for p in 0..space.len() {
            let (_, phi) = space.polar(p).expect("polar space");
            for j in layout.arcs_containing(phi) {
                keyed.entry(j).or_default().push(p as u32);
            }
        }
        let mut families: Vec<Vec<Vec<u32>>> = vec![Vec::new(); self.colors];
        for (j, set) in keyed {
            families[layout.family(j)].push(set);
        }
        let cover = Cover::from_families(space.clone(), families)?;
        let mut cert = Certificate::new();
        let dis = cover.disjointness_witness(None)?;
        cert.holds("sphere-atlas", "family multiplicity 1", dis.is_none(), dis.map(|w| w.to_string()));
        let (lw, lv) = cover.lebesgue_witness().unwrap_or((0, f64::INFINITY));
        cert.at_least("sphere-atlas", "lebesgue", self.lambda, lv, Some(format!("point {lw}")));
        cert.at_most("sphere-atlas", "mesh", self.mesh, cover.mesh(), None);
        Ok((ColoredCover::new(cover, Entourage::diagonal(space))?, cert))
    }
}

/// One ring of radius `r`: points spaced `ds` in arclength over the angular window
/// `[π - half_angle, π + half_angle]`, thinned to at most `cap` points.
fn ring(kappa: f64, r: f64, ds: f64, half_angle: f64, cap: usize) -> Result<Vec<(f64, f64)>> {
    let c = (-kappa).sqrt();
    if r <= 0.0 {
        return Ok(vec![(0.0, PI)]);
    }
    let scale = (c * r).sinh() / c;
    let cap = cap.max(1);
    if half_angle >= PI {
        let m = (TAU * scale / ds).ceil().clamp(1.0, cap as f64) as usize;
        return Ok((0..m).map(|j| (r, TAU * j as f64 / m as f64)).collect());
    }
    let step = (ds / scale).max(2.0 * half_angle / cap as f64);
    let half = (half_angle / step + 1e-9).floor() as i64;
    Ok((-half..=half).map(|j| (r, PI + j as f64 * step)).collect())
}

/// Rings of radii `0, dr, 2dr, …` up to `radius` over the angular window of half-width
/// `half_angle` around `π` (the full circle when `half_angle ≥ π`); each ring is spaced `ds`
/// in arclength and thinned to at most `cap` points.
pub fn disk_sample(kappa: f64, radius: f64, dr: f64, ds: f64, half_angle: f64, cap: usize) -> Result<Space> {
    curvature_scale(kappa)?;
    if !(dr > 0.0) || !(ds > 0.0) || !(radius >= 0.0) || !(half_angle > 0.0) {
        return Err(Error::invalid("disk sample needs positive steps and window and a non-negative radius"));
    }
    let rings = (radius / dr + 1e-9).floor() as usize;
    let mut pts = Vec::new();
    for i in 0..=rings {
        pts.extend(ring(kappa, i as f64 * dr, ds, half_angle, cap)?);
        if pts.len() > SAMPLE_CAP {
            return Err(Error::ResourceLimit("disk sample exceeds the point cap".into()));
        }
    }
    Space::hyperbolic_polar(kappa, pts)
}

/// Where a point of the lifted cover sits: the core disk, or circle level `k` with band `j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Band {
    Core,
    Shell { level: usize, band: usize },
}

pub fn band_of(r: f64, rho: f64, big_n: usize, colors: usize) -> Band {
    if r < (big_n + colors) as f64 * rho {
        return Band::Core;
    }
    let f = (r / rho - big_n as f64).floor().max(colors as f64) as usize;
    let level = colors * (f / colors);
    Band::Shell { level, band: f - level + 1 }
}

/// The cover `M_{ρ,N} = {U^#}` of a sampled disk.
///
/// Sets are keyed by `(level, arc)`; `U^#` for an arc `U` of circle `k` collects
/// `A(U) = θ_k⁻¹(U) ∩ D_{k+N+n} \ D_{k+N+i-1}` (the core disk `D_{N+n}` when `k = 0`) and
/// every `B(V) = θ_{k+n}⁻¹(V) ∩ D_{k+n+N+i} \ D_{k+n+N}` with `Θ_k(V) = U`.
pub fn sphere_cover_lift(
    space: &Arc<Space>,
    atlas: &SphereAtlas,
    big_n: usize,
    l: f64,
) -> Result<(Cover, Certificate)> {
    let Backing::HyperbolicPolar { kappa, .. } = space.backing() else {
        return Err(Error::invalid("the lift needs a hyperbolic polar sample"));
    };
    if (kappa - atlas.kappa).abs() > 1e-12 {
        return Err(Error::invalid("sample and atlas curvatures differ"));
    }
    let n = atlas.colors;
    let rho = atlas.rho;
    let mut layouts: HashMap<usize, SphereLayout> = HashMap::new();
    let mut theta: HashMap<(usize, u64), u64> = HashMap::new();
    let mut keyed: BTreeMap<(usize, u64), Vec<u32>> = BTreeMap::new();
    for p in 0..space.len() {
        let (r, phi) = space.polar(p).expect("polar space");
        match band_of(r, rho, big_n, n) {
            Band::Core => keyed.entry((0, 0)).or_default().push(p as u32),
            Band::Shell { level, band } => {
                if let std::collections::hash_map::Entry::Vacant(e) = layouts.entry(level) {
                    e.insert(atlas.layout(level)?);
                }
                let layout = layouts[&level];
                for arc in layout.arcs_containing(phi) {
                    let i = layout.family(arc) + 1;
                    if i <= band {
                        keyed.entry((level, arc)).or_default().push(p as u32);
                    }
                    if i >= band {
                        let inner = level - n;
                        let u = match theta.get(&(inner, arc)) {
                            Some(&u) => u,
                            None => {
                                let u = atlas.theta_choice(inner, arc)?;
                                theta.insert((inner, arc), u);
                                u
                            }
                        };
                        keyed.entry((inner, u)).or_default().push(p as u32);
                    }
                }
            }
        }
    }
    let sets: Vec<Vec<u32>> = keyed.into_values().collect();
    let cover = Cover::new(space.clone(), sets, None)?;
    let mut cert = Certificate::new();
    cert.at_most(ANCHOR, "multiplicity", (n + 1) as f64, cover.multiplicity() as f64, None);
    let bound = 2.0 * (big_n + 2 * n) as f64 * rho + atlas.mesh;
    cert.at_most(ANCHOR, "mesh", bound, cover.mesh(), None);
    let (lw, lv) = cover.lebesgue_witness().unwrap_or((0, f64::INFINITY));
    cert.at_least(ANCHOR, "lebesgue", l, lv, Some(format!("point {lw}")));
    Ok((cover, cert))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::hyperbolic_distance;

    #[test]
    fn params_example() {
        let (rho, n) = hyperbolic_params(-1.0, 0.2, 1.0, 5.0, 2).unwrap();
        assert!((rho - 10.01).abs() < 1e-9);
        assert_eq!(n, 2);
    }

    #[test]
    fn gap_for_half() {
        assert!((adjust_gap(-1.0, 0.5).unwrap() - 2.0 * 4f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn projection_keeps_angle() {
        assert_eq!(radial_projection((5.0, 1.2), 1, 3.0).unwrap(), (3.0, 1.2));
        assert!(radial_projection((2.0, 0.0), 1, 3.0).is_err());
    }

    #[test]
    fn arcs_cover_and_separate() {
        let atlas = SphereAtlas::new(-1.0, 2.31, 0.2, 1.0).unwrap();
        for k in [2, 4, 6] {
            let lay = atlas.layout(k).unwrap();
            assert_eq!(lay.cells % 2, 0);
            for t in 0..1000 {
                let phi = TAU * t as f64 / 1000.0;
                let arcs = lay.arcs_containing(phi);
                assert!(!arcs.is_empty() && arcs.len() <= 2);
                if arcs.len() == 2 {
                    assert_ne!(lay.family(arcs[0]), lay.family(arcs[1]));
                }
            }
        }
    }

    #[test]
    fn sampled_atlas_bounds() {
        let atlas = SphereAtlas::new(-1.0, 2.31, 0.2, 1.0).unwrap();
        let (_, cert) = atlas.sphere_cover(2, 0.02, 4.0).unwrap();
        assert!(cert.all_pass(), "{cert:?}");
    }

    #[test]
    fn core_only_lift() {
        let s = Arc::new(disk_sample(-1.0, 3.0, 0.5, 0.5, PI, 1000).unwrap());
        let atlas = SphereAtlas::new(-1.0, 10.01, 0.2, 1.0).unwrap();
        let (c, cert) = sphere_cover_lift(&s, &atlas, 2, 5.0).unwrap();
        assert!(cert.all_pass());
        assert_eq!(c.len(), 1);
    }

    #[test]
    fn projection_contracts() {
        let (x, y) = ((4.0, 0.3), (6.5, 0.9));
        let d = hyperbolic_distance(-1.0, x, y);
        let px = radial_projection(x, 1, 3.0).unwrap();
        let py = radial_projection(y, 1, 3.0).unwrap();
        assert!(hyperbolic_distance(-1.0, px, py) <= d + 1e-9);
    }
}
