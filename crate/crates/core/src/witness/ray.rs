//! Cell covers of sampled `ℝ₊ⁿ` built from iterated interval-completed neighborhoods.

use std::collections::BTreeMap;

use crate::certificate::Certificate;
use crate::cover::Cover;
use crate::entourage::Entourage;
use crate::error::{Error, Result};
use crate::space::Backing;
use crate::transform::ColoredCover;

const ANCHOR: &str = "ray-cell-cover";
const MAX_STAGES: usize = 1_000_000;

/// Nested sets `K_i = [0, κ_i]` on the axis sample, as indices of `κ_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct RayFiltration {
    pub step: f64,
    pub kappa: Vec<usize>,
    /// `band[t] = b` when sample `t` lies in `K_b \ K_{b-1}`.
    pub band: Vec<usize>,
    /// Largest `v - u` (in sample steps) over pairs `(u, v)` of the completed entourage.
    pub span: usize,
}

/// Projects `e` to every axis, adds `Δ_1`, applies the interval completion and iterates
/// `K_{i+1} = Ẽ[K_i]` from `K_0 = {0}` until the whole axis sample is reached.
pub fn ray_filtration(e: &Entourage) -> Result<RayFiltration> {
    let Backing::Grid { spec } = e.space().backing() else {
        return Err(Error::invalid("ray cell cover needs a grid-backed space"));
    };
    if spec.min.iter().any(|&m| m.abs() > 1e-12) {
        return Err(Error::invalid("ray samples must start at the origin on every axis"));
    }
    let dim = spec.dim();
    let len = *spec.counts().iter().max().expect("non-empty grid");
    let step = spec.step;
    // best[a] = largest b with (a, b) in the projected relation and a ≤ b
    let mut best: Vec<usize> = (0..len).collect();
    let unit = (1.0 / step + 1e-9).floor() as usize;
    for (a, b) in best.iter_mut().enumerate() {
        *b = (a + unit).min(len - 1);
    }
    let pairs = e.pair_set()?;
    for x in 0..e.space().len() {
        let mx = spec.multi_index(x);
        for &y in pairs.row(x) {
            let my = spec.multi_index(y as usize);
            for k in 0..dim {
                let (a, b) = (mx[k].min(my[k]), mx[k].max(my[k]));
                if b > best[a] {
                    best[a] = b;
                }
            }
        }
    }
    let mut hi = best;
    for t in 1..len {
        hi[t] = hi[t].max(hi[t - 1]);
    }
    let span = (0..len).map(|t| hi[t] - t).max().unwrap_or(0);
    let mut kappa = vec![0usize];
    while *kappa.last().expect("non-empty") < len - 1 {
        let cur = *kappa.last().expect("non-empty");
        let next = hi[cur];
        if next == cur || kappa.len() > MAX_STAGES {
            return Err(Error::ResourceLimit(format!(
                "K_i stalls at {} before covering the region",
                cur as f64 * step
            )));
        }
        kappa.push(next);
    }
    let mut band = vec![0usize; len];
    let mut b = 0;
    for (t, slot) in band.iter_mut().enumerate() {
        while t > kappa[b] {
            b += 1;
        }
        *slot = b;
    }
    Ok(RayFiltration { step, kappa, band, span })
}

/// `U_i = K_i \ K_{i-n}` and the `n+1` families of products with indices `≡ c mod n+1`.
///
/// For `n = 0` the sample is one-dimensional and the cover is the partition into
/// consecutive bands `K_i \ K_{i-1}`.
pub fn ray_cell_cover(n: usize, e: &Entourage) -> Result<(ColoredCover, Certificate)> {
    let space = e.space().clone();
    let Backing::Grid { spec } = space.backing() else {
        return Err(Error::invalid("ray cell cover needs a grid-backed space"));
    };
    if spec.dim() != n.max(1) {
        return Err(Error::invalid(format!("expected a {}-dimensional sample, got {}", n.max(1), spec.dim())));
    }
    let inv = e.inverse()?;
    if let Some((x, y)) = e.subset_witness(&inv)? {
        return Err(Error::contract("E must be symmetric", format!("pair ({x}, {y})")));
    }
    let filt = ray_filtration(e)?;
    let mut keyed: BTreeMap<(usize, Vec<usize>), Vec<u32>> = BTreeMap::new();
    let colors = n + 1;
    for p in 0..space.len() {
        let bands: Vec<usize> = spec.multi_index(p).iter().map(|&t| filt.band[t]).collect();
        if n == 0 {
            keyed.entry((0, bands)).or_default().push(p as u32);
            continue;
        }
        for c in 0..colors {
            // the unique i ≡ c (mod n+1) in [b, b+n-1], if any
            let idx: Option<Vec<usize>> = bands
                .iter()
                .map(|&b| {
                    let i = b + (c + colors - b % colors) % colors;
                    (i < b + n).then_some(i)
                })
                .collect();
            if let Some(idx) = idx {
                keyed.entry((c, idx)).or_default().push(p as u32);
            }
        }
    }
    let mut families: Vec<Vec<Vec<u32>>> = vec![Vec::new(); colors];
    for ((c, _), set) in keyed {
        families[c].push(set);
    }
    let cover = Cover::from_families(space.clone(), families)?;
    let mut cert = Certificate::new();
    cert.at_most(ANCHOR, "multiplicity", colors as f64, cover.multiplicity() as f64, None);
    // a single band partition is disjoint but consecutive bands are E-close
    let sep = if n == 0 { Entourage::diagonal(space.clone()) } else { e.clone() };
    let dis = cover.disjointness_witness(Some(&sep))?;
    let name = if n == 0 { "partition" } else { "families E-disjoint" };
    cert.holds(ANCHOR, name, dis.is_none(), dis.map(|w| w.to_string()));
    let bound = (n.max(1) as f64).sqrt() * (3 * n + 6) as f64 * filt.span as f64 * filt.step;
    cert.at_most(ANCHOR, "mesh", bound, cover.mesh(), None);
    cert.push(ANCHOR, "stages", serde_json::Value::Null, filt.kappa.len() as u64, true, None);
    let colored = ColoredCover::new(cover, sep)?;
    Ok((colored, cert))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{GridSpec, Space};
    use std::sync::Arc;

    #[test]
    fn filtration_of_unit_steps() {
        let s = Arc::new(Space::grid(GridSpec::cube(1, 0.0, 10.0, 1.0).unwrap()));
        let f = ray_filtration(&Entourage::diagonal(s)).unwrap();
        assert_eq!(f.kappa, (0..=10).collect::<Vec<_>>());
    }

    #[test]
    fn single_ray_bands() {
        let s = Arc::new(Space::grid(GridSpec::cube(1, 0.0, 30.0, 1.0).unwrap()));
        let e = Entourage::closed_radius(s, 1.0).unwrap();
        let (c, cert) = ray_cell_cover(0, &e).unwrap();
        assert!(cert.all_pass(), "{cert:?}");
        assert_eq!(c.cover().multiplicity(), 1);
        let (c1, cert1) = ray_cell_cover(1, &e).unwrap();
        assert!(cert1.all_pass(), "{cert1:?}");
        assert_eq!(c1.cover().family_count(), 2);
    }

    #[test]
    fn stalls_on_coarse_grid() {
        let s = Arc::new(Space::grid(GridSpec::cube(1, 0.0, 10.0, 2.0).unwrap()));
        assert!(matches!(ray_filtration(&Entourage::diagonal(s)), Err(Error::ResourceLimit(_))));
    }
}
