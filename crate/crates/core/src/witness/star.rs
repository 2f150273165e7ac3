//! Open-star covers of sampled simplicial complexes in the affine metric.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::certificate::{num, Certificate};
use crate::cover::Cover;
use crate::error::{Error, Result};
use crate::space::Space;

const ANCHOR: &str = "star-cover";

/// Finite simplicial complex given by its vertex count and generating simplices.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplicialComplex {
    vertices: usize,
    simplices: Vec<Vec<usize>>,
}

/// `1/√(2k(k+1))`, the distance from the barycenter of a `k`-simplex to a facet
/// when vertices sit at mutual distance 1; infinite for `k = 0`.
pub fn star_lambda(k: usize) -> f64 {
    if k == 0 {
        return f64::INFINITY;
    }
    1.0 / (2.0 * (k * (k + 1)) as f64).sqrt()
}

impl SimplicialComplex {
    /// Generating simplices are closed under faces implicitly; every vertex must appear.
    pub fn new(vertices: usize, simplices: Vec<Vec<usize>>) -> Result<Self> {
        let mut seen = vec![false; vertices];
        let mut clean = Vec::with_capacity(simplices.len());
        for s in simplices {
            let mut s = s;
            s.sort_unstable();
            s.dedup();
            if s.is_empty() {
                return Err(Error::invalid("empty simplex"));
            }
            if let Some(&v) = s.iter().find(|&&v| v >= vertices) {
                return Err(Error::invalid(format!("vertex {v} out of range")));
            }
            s.iter().for_each(|&v| seen[v] = true);
            clean.push(s);
        }
        if let Some(v) = seen.iter().position(|&s| !s) {
            return Err(Error::invalid(format!("vertex {v} lies in no simplex")));
        }
        if vertices == 0 {
            return Err(Error::invalid("complex has no vertices"));
        }
        Ok(SimplicialComplex { vertices, simplices: clean })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices
    }

    pub fn simplices(&self) -> &[Vec<usize>] {
        &self.simplices
    }

    pub fn dim(&self) -> usize {
        self.simplices.iter().map(|s| s.len() - 1).max().unwrap_or(0)
    }

    /// All `d`-dimensional faces.
    pub fn faces(&self, d: usize) -> BTreeSet<Vec<usize>> {
        fn rec(s: &[usize], d: usize, start: usize, cur: &mut Vec<usize>, out: &mut BTreeSet<Vec<usize>>) {
            if cur.len() == d + 1 {
                out.insert(cur.clone());
                return;
            }
            for i in start..s.len() {
                cur.push(s[i]);
                rec(s, d, i + 1, cur, out);
                cur.pop();
            }
        }
        let mut out = BTreeSet::new();
        for s in &self.simplices {
            rec(s, d, 0, &mut Vec::new(), &mut out);
        }
        out
    }

    /// Largest `k ≥ 1` with two `k`-simplices meeting in a `(k-1)`-simplex, with such a pair;
    /// `0` when no two simplices of positive dimension share a facet.
    pub fn stability(&self) -> (usize, Option<(Vec<usize>, Vec<usize>)>) {
        for d in (1..=self.dim()).rev() {
            let mut by_facet: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
            for f in self.faces(d) {
                for skip in 0..=d {
                    let facet: Vec<usize> = f.iter().enumerate().filter(|&(i, _)| i != skip).map(|(_, &v)| v).collect();
                    if let Some(other) = by_facet.get(&facet) {
                        return (d, Some((other.clone(), f.clone())));
                    }
                    by_facet.insert(facet, f.clone());
                }
            }
        }
        (0, None)
    }
}

/// Barycentric lattice points at `resolution` over every simplex, embedded at `t/√2`.
///
/// Returns the sample and, per point, the integer weights indexed by vertex.
pub fn star_sample(complex: &SimplicialComplex, resolution: usize) -> Result<(Space, Vec<Vec<usize>>)> {
    if resolution == 0 {
        return Err(Error::invalid("resolution must be positive"));
    }
    let nv = complex.vertex_count();
    let mut weights: BTreeSet<Vec<usize>> = BTreeSet::new();
    for s in complex.simplices() {
        let mut cur = vec![0usize; s.len()];
        fn rec(pos: usize, left: usize, cur: &mut Vec<usize>, s: &[usize], nv: usize, out: &mut BTreeSet<Vec<usize>>) {
            if pos + 1 == cur.len() {
                cur[pos] = left;
                let mut w = vec![0usize; nv];
                for (i, &v) in s.iter().enumerate() {
                    w[v] = cur[i];
                }
                out.insert(w);
                return;
            }
            for x in 0..=left {
                cur[pos] = x;
                rec(pos + 1, left - x, cur, s, nv, out);
            }
        }
        rec(0, resolution, &mut cur, s, nv, &mut weights);
        if weights.len() > 2_000_000 {
            return Err(Error::ResourceLimit("star sample exceeds the point cap".into()));
        }
    }
    let weights: Vec<Vec<usize>> = weights.into_iter().collect();
    let scale = 1.0 / (resolution as f64 * std::f64::consts::SQRT_2);
    let coords = weights.iter().map(|w| w.iter().map(|&x| x as f64 * scale).collect()).collect();
    Ok((Space::points(nv, coords)?, weights))
}

/// Open stars `{t | t_v > 0}` of every vertex on the affine-metric sample.
///
/// The declared `stability` must equal the scanned stability or the dimension.
pub fn star_cover(
    complex: &SimplicialComplex,
    stability: usize,
    resolution: usize,
) -> Result<(Cover, Certificate)> {
    let (scanned, pair) = complex.stability();
    let dim = complex.dim();
    if stability != scanned && stability != dim {
        let witness = match (&pair, stability < scanned) {
            (Some((a, b)), true) => format!("simplices {a:?} and {b:?} share a facet"),
            _ => format!("no two {stability}-simplices share a facet; scanned stability {scanned}"),
        };
        return Err(Error::contract(format!("declared stability {stability} is false"), witness));
    }
    let (space, weights) = star_sample(complex, resolution)?;
    let space = Arc::new(space);
    let sets: Vec<Vec<u32>> = (0..complex.vertex_count())
        .map(|v| (0..weights.len() as u32).filter(|&p| weights[p as usize][v] > 0).collect())
        .collect();
    let cover = Cover::new(space, sets, None)?;
    let mut cert = Certificate::new();
    cert.at_most(ANCHOR, "multiplicity", (dim + 1) as f64, cover.multiplicity() as f64, None);
    cert.at_most(ANCHOR, "mesh", 2.0, cover.mesh(), None);
    let (lw, lv) = cover.lebesgue_witness().unwrap_or((0, f64::INFINITY));
    let effective = star_lambda(stability.max(dim));
    cert.at_least(ANCHOR, "lebesgue", effective - 1e-9, lv, Some(format!("point {lw}")));
    cert.push(ANCHOR, "declared lambda_k", num(star_lambda(stability)), num(lv), true, None);
    Ok((cover, cert))
}
