//! Multiplicity lower bound on sampled `P_n` via a Sperner-labeled simplex.

use std::collections::HashMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::certificate::{num, Certificate};
use crate::cover::Cover;
use crate::entourage::Entourage;
use crate::error::{Error, Result};
use crate::space::Space;
use crate::witness::sperner::{sperner_find, Labeling, SimplexGrid};

const ANCHOR: &str = "lower-bound";
const TOL: f64 = 1e-9;

/// A point of the sample lying in `n+1` distinct covering sets, with the construction data.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LowerBoundCertificate {
    pub point: u32,
    pub sets: Vec<usize>,
    pub r: f64,
    pub epsilon: f64,
    pub resolution: usize,
    pub cell: Vec<Vec<f64>>,
}

/// Grid points of `[0, extent]ⁿ` with spacing `step`, `x_n > 0` and `x_i ≤ x_n`.
pub fn pn_sample(n: usize, extent: f64, step: f64) -> Result<Space> {
    if n == 0 || !(step > 0.0) || !(extent > 0.0) {
        return Err(Error::invalid("P_n sample needs n ≥ 1 and positive extent and step"));
    }
    let m = (extent / step + 1e-9).floor() as usize;
    let mut coords = Vec::new();
    let mut cur = vec![0usize; n];
    loop {
        let last = cur[n - 1];
        if last > 0 && cur[..n - 1].iter().all(|&c| c <= last) {
            coords.push(cur.iter().map(|&c| c as f64 * step).collect());
        }
        let mut k = n;
        loop {
            if k == 0 {
                return Space::points(n, coords);
            }
            k -= 1;
            if cur[k] < m {
                cur[k] += 1;
                break;
            }
            cur[k] = 0;
        }
    }
}

/// Simplex vertices `a_j = (0,…,0,r,…,r)` with `j` zeros for `j < n` and `a_n = (0,…,0,1)`.
pub fn simplex_vertices(n: usize, r: f64) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = (0..n).map(|j| (0..n).map(|i| if i < j { 0.0 } else { r }).collect()).collect();
    let mut last = vec![0.0; n];
    last[n - 1] = 1.0;
    out.push(last);
    out
}

struct Projections {
    /// `values[j][u]`: sorted distinct `j`-th coordinates of set `u`.
    values: Vec<Vec<Vec<f64>>>,
}

impl Projections {
    fn new(c: &Cover, coords: &[Vec<f64>], n: usize) -> Self {
        let values = (0..n)
            .map(|j| {
                c.sets()
                    .iter()
                    .map(|u| {
                        let mut v: Vec<f64> = u.iter().map(|&p| coords[p as usize][j]).collect();
                        v.sort_by(f64::total_cmp);
                        v.dedup();
                        v
                    })
                    .collect()
            })
            .collect();
        Projections { values }
    }

    /// `E_j[Δ_t[V]]` where `E_j` is the `j`-th coordinate projection of `Δ_U`.
    fn step(&self, j: usize, v: &[f64], t: f64) -> Vec<f64> {
        let near = |x: f64| {
            let i = v.partition_point(|&y| y < x - t - TOL);
            i < v.len() && v[i] <= x + t + TOL
        };
        let mut out: Vec<f64> = Vec::new();
        for set in &self.values[j] {
            if set.iter().any(|&x| near(x)) {
                out.extend_from_slice(set);
            }
        }
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }
}

/// `max V_n + ε` for the chain `V_0 = {0}`, `V_j = E_j[Δ_{2ε}[V_{j-1}]]`, `V_n = E_n[Δ_{1+2ε}[V_{n-1}]]`.
fn chain_bound(proj: &Projections, n: usize, eps: f64) -> f64 {
    let mut v = vec![0.0];
    for j in 1..=n {
        let t = if j == n { 1.0 + 2.0 * eps } else { 2.0 * eps };
        v = proj.step(j - 1, &v, t);
    }
    v.last().copied().unwrap_or(0.0) + eps
}

/// Face test `x ∈ T_j`, the coordinate conditions implied by lying within `ε` of face `S_j`
/// (with the convention `x_0 = 0`).
fn near_face(x: &[f64], j: usize, n: usize, r: f64, eps: f64) -> bool {
    let coord = |i: usize| if i == 0 { 0.0 } else { x[i - 1] };
    if j + 2 <= n {
        (coord(j) - coord(j + 1)).abs() <= 2.0 * eps + TOL
    } else if j + 1 == n {
        let d = coord(n) - coord(n - 1);
        d >= -2.0 * eps - TOL && d <= 1.0 + 2.0 * eps + TOL
    } else {
        coord(n) >= r - eps - TOL
    }
}

fn nearest(coords: &[Vec<f64>], target: &[f64]) -> (u32, f64) {
    let (i, d2) = coords
        .par_iter()
        .enumerate()
        .map(|(i, c)| (i, c.iter().zip(target).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()))
        .reduce(|| (usize::MAX, f64::INFINITY), |a, b| if b.1 < a.1 || (b.1 == a.1 && b.0 < a.0) { b } else { a });
    (i as u32, d2.sqrt())
}

/// Builds the simplex `S`, a Kuhn triangulation of mesh at most `1 - 2ε` snapped to the
/// sample, labels each vertex by a face its covering set avoids, and returns a point of
/// a fully-labeled cell lying in `n+1` distinct covering sets.
pub fn simplex_lower_bound_check(c: &Cover, n: usize) -> Result<(LowerBoundCertificate, Certificate)> {
    let space: Arc<Space> = c.space().clone();
    if n == 0 {
        return Err(Error::invalid("n must be positive"));
    }
    let coords: Vec<Vec<f64>> = (0..space.len())
        .map(|i| space.coords(i).filter(|v| v.len() == n))
        .collect::<Option<_>>()
        .ok_or_else(|| Error::invalid(format!("the cover must live on {n}-dimensional coordinates")))?;
    if let Some(x) = c.appetite_witness(&Entourage::closed_radius(space.clone(), 1.0)?)? {
        return Err(Error::contract("cover lacks appetite Δ_1", format!("point {x}")));
    }
    let extent = coords.iter().map(|x| x[n - 1]).fold(0.0, f64::max);
    let proj = Projections::new(c, &coords, n);
    let mut eps = 0.0f64;
    let (r, resolution, snapped) = loop {
        if eps >= 0.5 {
            return Err(Error::invalid(format!("sample too coarse: snapping error {eps} leaves no room for the triangulation")));
        }
        let r = chain_bound(&proj, n, eps).max(1.0) + 1e-6;
        if r > extent + TOL {
            return Err(Error::contract(
                "cover is not uniformly bounded at the sampled scale",
                format!("required simplex size {r} exceeds the sample extent {extent}"),
            ));
        }
        let a = simplex_vertices(n, r);
        let path: f64 = (1..=n)
            .map(|i| a[i].iter().zip(&a[i - 1]).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt())
            .sum();
        let resolution = (path / (1.0 - 2.0 * eps)).ceil().max(1.0) as usize;
        let grid = SimplexGrid::new(n, resolution, Labeling::Nearest)?;
        let snapped: Vec<(u32, f64)> = (0..grid.len())
            .into_par_iter()
            .map(|v| {
                let w = grid.barycentric(v);
                let p: Vec<f64> = (0..n)
                    .map(|i| (0..=n).map(|j| w[j] as f64 * a[j][i]).sum::<f64>() / resolution as f64)
                    .collect();
                nearest(&coords, &p)
            })
            .collect();
        let worst = snapped.iter().map(|s| s.1).fold(0.0, f64::max);
        if worst <= eps + 1e-12 {
            break (r, resolution, snapped);
        }
        eps = worst;
    };
    // Covering set and avoided face per triangulation vertex.
    let inc = c.incidence();
    let mut set_of_point: HashMap<u32, usize> = HashMap::new();
    let mut face_of_set: HashMap<usize, usize> = HashMap::new();
    let mut labels = Vec::with_capacity(snapped.len());
    let mut sets_by_vertex = Vec::with_capacity(snapped.len());
    for &(p, _) in &snapped {
        let u = match set_of_point.get(&p) {
            Some(&u) => u,
            None => {
                let ball = space.neighbors_within(p as usize, 1.0, true);
                let u = inc[p as usize]
                    .iter()
                    .map(|&u| u as usize)
                    .find(|&u| crate::cover::is_sorted_subset(&ball, c.set(u)))
                    .ok_or_else(|| Error::contract("cover lacks appetite Δ_1", format!("point {p}")))?;
                set_of_point.insert(p, u);
                u
            }
        };
        let face = match face_of_set.get(&u) {
            Some(&f) => f,
            None => {
                let f = (0..=n)
                    .find(|&j| c.set(u).iter().all(|&x| !near_face(&coords[x as usize], j, n, r, eps)))
                    .ok_or_else(|| Error::Internal(format!("set {u} meets every thickened face of the simplex")))?;
                face_of_set.insert(u, f);
                f
            }
        };
        labels.push(face);
        sets_by_vertex.push(u);
    }
    let grid = SimplexGrid::new(n, resolution, Labeling::Explicit(labels))
        .map_err(|e| Error::Internal(format!("face labeling is not admissible: {e}")))?;
    let cell = sperner_find(&grid)?;
    let point = snapped[cell[0]].0;
    let mut sets: Vec<usize> = cell.iter().map(|&v| sets_by_vertex[v]).collect();
    sets.sort_unstable_by_key(|&u| face_of_set[&u]);
    let mut cert = Certificate::new();
    let inside = sets.iter().all(|&u| c.contains(u, point as usize));
    cert.holds(ANCHOR, "point lies in every labeled set", inside, Some(format!("point {point}")));
    let mut distinct: Vec<&[u32]> = inc[point as usize].iter().map(|&u| c.set(u as usize)).collect();
    distinct.sort();
    distinct.dedup();
    cert.at_least(ANCHOR, "multiplicity at point", (n + 1) as f64, distinct.len() as f64, Some(format!("point {point}")));
    cert.push(ANCHOR, "simplex size r", serde_json::Value::Null, num(r), true, None);
    let cell_coords = cell.iter().map(|&v| coords[snapped[v].0 as usize].clone()).collect();
    Ok((LowerBoundCertificate { point, sets, r, epsilon: eps, resolution, cell: cell_coords }, cert))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_shape() {
        let s = pn_sample(2, 2.0, 1.0).unwrap();
        // (0,1),(1,1),(0,2),(1,2),(2,2)
        assert_eq!(s.len(), 5);
    }

    #[test]
    fn line_intervals() {
        let s = Arc::new(pn_sample(1, 40.0, 0.5).unwrap());
        // intervals of length 6 overlapping by 3
        let mut sets = Vec::new();
        let mut lo = 0.0;
        while lo < 40.0 {
            sets.push((0..s.len() as u32).filter(|&p| {
                let x = s.coords(p as usize).unwrap()[0];
                x >= lo && x <= lo + 6.0
            }).collect::<Vec<_>>());
            lo += 3.0;
        }
        let c = Cover::new(s, sets, None).unwrap();
        let (lb, cert) = simplex_lower_bound_check(&c, 1).unwrap();
        assert!(cert.all_pass(), "{cert:?}");
        assert_eq!(lb.sets.len(), 2);
    }

    #[test]
    fn whole_space_rejected() {
        let s = Arc::new(pn_sample(1, 10.0, 0.5).unwrap());
        let c = Cover::new(s.clone(), vec![(0..s.len() as u32).collect()], None).unwrap();
        assert!(matches!(simplex_lower_bound_check(&c, 1), Err(Error::ContractViolation { .. })));
    }
}
