//! Two-colored covers of trees by neighborhoods of geodesic-equivalence classes.

use std::collections::{BTreeMap, VecDeque};
use std::sync::Arc;

use crate::certificate::Certificate;
use crate::cover::Cover;
use crate::entourage::Entourage;
use crate::error::{Error, Result};
use crate::space::{Backing, Space};
use crate::transform::ColoredCover;

const ANCHOR: &str = "tree-cover";

/// Smallest natural number strictly greater than `2L`.
pub fn tree_scale(l: f64) -> u32 {
    (2.0 * l).floor() as u32 + 1
}

fn bfs(adjacency: &[Vec<u32>], sources: &[(u32, usize)], limit: u32) -> (Vec<u32>, Vec<usize>) {
    let n = adjacency.len();
    let mut dist = vec![u32::MAX; n];
    let mut label = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    for &(s, l) in sources {
        if dist[s as usize] == u32::MAX {
            dist[s as usize] = 0;
            label[s as usize] = l;
            queue.push_back(s);
        }
    }
    while let Some(v) = queue.pop_front() {
        let d = dist[v as usize];
        if d >= limit {
            continue;
        }
        for &w in &adjacency[v as usize] {
            if dist[w as usize] == u32::MAX {
                dist[w as usize] = d + 1;
                label[w as usize] = label[v as usize];
                queue.push_back(w);
            }
        }
    }
    (dist, label)
}

/// Class of each vertex: `f(x) = ⌊d(root,x)/L′⌋` together with the geodesic point at
/// depth `τ = L′·(f(x) - 1/2)` (the root when `f = 0`).
///
/// When `τ` falls inside an edge the deeper endpoint stands for it, so the anchor
/// depth is `L′·f - ⌊L′/2⌋`.
pub fn tree_classes(space: &Space, l: f64, root: usize) -> Result<Vec<(u32, u32)>> {
    let Backing::Tree(tree) = space.backing() else {
        return Err(Error::invalid("tree cover needs a tree-backed space"));
    };
    if root >= space.len() {
        return Err(Error::invalid(format!("root {root} out of range")));
    }
    let scale = tree_scale(l);
    let adjacency = &tree.adjacency;
    let n = adjacency.len();
    let mut depth = vec![u32::MAX; n];
    let mut parent = vec![root as u32; n];
    depth[root] = 0;
    let mut queue = VecDeque::from([root as u32]);
    while let Some(v) = queue.pop_front() {
        for &w in &adjacency[v as usize] {
            if depth[w as usize] == u32::MAX {
                depth[w as usize] = depth[v as usize] + 1;
                parent[w as usize] = v;
                queue.push_back(w);
            }
        }
    }
    Ok((0..n)
        .map(|v| {
            let f = depth[v] / scale;
            let mut a = v as u32;
            if f == 0 {
                return (0, root as u32);
            }
            while depth[a as usize] > f * scale - scale / 2 {
                a = parent[a as usize];
            }
            (f, a)
        })
        .collect())
}

/// Closed `L`-neighborhoods of the classes, split by the parity of `f`.
pub fn tree_cover(space: &Arc<Space>, l: f64, root: usize) -> Result<(ColoredCover, Certificate)> {
    if !(l > 0.0) || !l.is_finite() {
        return Err(Error::invalid(format!("L must be positive, got {l}")));
    }
    let classes = tree_classes(space, l, root)?;
    let Backing::Tree(tree) = space.backing() else { unreachable!() };
    let scale = tree_scale(l);
    let reach = (l + 1e-12).floor() as u32;
    let mut members: BTreeMap<(u32, u32), Vec<u32>> = BTreeMap::new();
    for (v, &key) in classes.iter().enumerate() {
        members.entry(key).or_default().push(v as u32);
    }
    let mut families: Vec<Vec<Vec<u32>>> = vec![Vec::new(), Vec::new()];
    let mut class_sets: [Vec<&Vec<u32>>; 2] = [Vec::new(), Vec::new()];
    for (key, class) in &members {
        let sources: Vec<(u32, usize)> = class.iter().map(|&v| (v, 0)).collect();
        let (dist, _) = bfs(&tree.adjacency, &sources, reach);
        let set: Vec<u32> = (0..space.len() as u32).filter(|&v| dist[v as usize] != u32::MAX).collect();
        families[(key.0 % 2) as usize].push(set);
        class_sets[(key.0 % 2) as usize].push(class);
    }
    let mut separation = f64::INFINITY;
    let mut sep_witness = None;
    for parity in class_sets.iter() {
        let sources: Vec<(u32, usize)> = parity
            .iter()
            .enumerate()
            .flat_map(|(k, class)| class.iter().map(move |&v| (v, k)))
            .collect();
        let (dist, label) = bfs(&tree.adjacency, &sources, u32::MAX);
        for (u, row) in tree.adjacency.iter().enumerate() {
            for &w in row {
                let w = w as usize;
                if label[u] != label[w] && label[u] != usize::MAX && label[w] != usize::MAX {
                    let d = (dist[u] + dist[w] + 1) as f64;
                    if d < separation {
                        separation = d;
                        sep_witness = Some(format!("classes meet across edge ({u}, {w})"));
                    }
                }
            }
        }
    }
    let cover = Cover::from_families(space.clone(), families)?;
    let mut cert = Certificate::new();
    cert.at_most(ANCHOR, "multiplicity", 2.0, cover.multiplicity() as f64, None);
    cert.at_most(ANCHOR, "mesh", 3.0 * scale as f64 + 2.0 * l, cover.mesh(), None);
    cert.at_least(ANCHOR, "same-parity class separation", scale as f64, separation, sep_witness);
    let app = cover.appetite_witness(&Entourage::closed_radius(space.clone(), l)?)?;
    cert.holds(ANCHOR, "appetite closed L-ball", app.is_none(), app.map(|x| format!("point {x}")));
    let colored = ColoredCover::new(cover, Entourage::diagonal(space.clone()))?;
    Ok((colored, cert))
}
