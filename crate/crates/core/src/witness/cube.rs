//! Shifted-cube covers of Euclidean grids.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::certificate::Certificate;
use crate::cover::Cover;
use crate::entourage::Entourage;
use crate::error::{Error, Result};
use crate::space::{Backing, Space};
use crate::transform::ColoredCover;

const ANCHOR: &str = "cube-cover";

/// `n+1` families of open cubes of edge `a`, family `i` centered at `a(z + i/(n+1)·v)`.
///
/// `space` must be grid-backed of dimension `n` with step at most `a/(2(n+1))`.
pub fn cube_cover(space: &Arc<Space>, a: f64) -> Result<(ColoredCover, Certificate)> {
    let Backing::Grid { spec } = space.backing() else {
        return Err(Error::invalid("cube cover needs a grid-backed space"));
    };
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::invalid(format!("cube edge must be positive, got {a}")));
    }
    let n = spec.dim();
    let colors = n + 1;
    let lebesgue_bound = a / (2.0 * colors as f64);
    if spec.step > lebesgue_bound + 1e-12 {
        return Err(Error::invalid(format!(
            "grid step {} exceeds a/(2(n+1)) = {lebesgue_bound}",
            spec.step
        )));
    }
    let mut keyed: BTreeMap<(usize, Vec<i64>), Vec<u32>> = BTreeMap::new();
    for p in 0..space.len() {
        let x = spec.coord(p);
        'family: for i in 0..colors {
            let shift = i as f64 / colors as f64;
            let mut z = Vec::with_capacity(n);
            for &xj in &x {
                let zj = (xj / a - shift).round();
                let center = a * (zj + shift);
                if (xj - center).abs() >= a / 2.0 - 1e-9 {
                    continue 'family;
                }
                z.push(zj as i64);
            }
            keyed.entry((i, z)).or_default().push(p as u32);
        }
    }
    let mut families: Vec<Vec<Vec<u32>>> = vec![Vec::new(); colors];
    for ((i, _), set) in keyed {
        families[i].push(set);
    }
    let cover = Cover::from_families(space.clone(), families)?;
    let mut cert = Certificate::new();
    cert.at_most(ANCHOR, "multiplicity", colors as f64, cover.multiplicity() as f64, None);
    let (lw, lv) = cover.lebesgue_witness().unwrap_or((0, f64::INFINITY));
    cert.at_least(ANCHOR, "lebesgue", lebesgue_bound - spec.step, lv, Some(format!("point {lw}")));
    cert.at_most(ANCHOR, "mesh", a * (n as f64).sqrt(), cover.mesh(), None);
    let dis = cover.disjointness_witness(None)?;
    cert.holds(ANCHOR, "families disjoint", dis.is_none(), dis.map(|w| w.to_string()));
    let colored = ColoredCover::new(cover, Entourage::diagonal(space.clone()))?;
    Ok((colored, cert))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::GridSpec;

    #[test]
    fn line_alternates() {
        let s = Arc::new(Space::grid(GridSpec::cube(1, 0.0, 12.0, 0.5).unwrap()));
        let (c, cert) = cube_cover(&s, 2.0).unwrap();
        assert!(cert.all_pass(), "{cert:?}");
        assert_eq!(c.cover().multiplicity(), 2);
        assert_eq!(c.cover().family_count(), 2);
    }

    #[test]
    fn coarse_grid_rejected() {
        let s = Arc::new(Space::grid(GridSpec::cube(2, 0.0, 4.0, 2.0).unwrap()));
        assert!(matches!(cube_cover(&s, 6.0), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn plane_mesh_near_diagonal() {
        let s = Arc::new(Space::grid(GridSpec::cube(2, 0.0, 20.0, 0.5).unwrap()));
        let (c, cert) = cube_cover(&s, 6.0).unwrap();
        assert!(cert.all_pass(), "{cert:?}");
        assert_eq!(c.cover().multiplicity(), 3);
        assert!(c.cover().lebesgue_number() >= 1.0 - 1e-9);
        // open cubes of edge 6 centered on the lattice keep points within 2.5 per axis
        let mesh = c.cover().mesh();
        assert!(mesh <= 6.0 * 2f64.sqrt());
        assert!((mesh - 5.0 * 2f64.sqrt()).abs() < 1e-9);
    }
}
