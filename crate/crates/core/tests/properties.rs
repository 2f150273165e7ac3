//! Property tests for the structural invariants, each checked against a brute-force oracle.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::sync::Arc;

use coarse_core::corona::{check_cc_entourage, CompactificationModel, Decay};
use coarse_core::entourage::{transport, Direction};
use coarse_core::support::{is_controlled, BlockOperator, Decomposition};
use coarse_core::transform::colorize;
use coarse_core::witness::{radial_projection, Labeling, SimplexGrid};
use coarse_core::{Cover, Entourage, PointMap, Space};
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

type Pairs = BTreeSet<(u32, u32)>;

fn line(k: usize) -> Arc<Space> {
    Arc::new(Space::points(1, (0..k).map(|i| vec![i as f64]).collect()).unwrap())
}

fn pairs_of(e: &Entourage) -> Pairs {
    e.pairs().unwrap().into_iter().collect()
}

fn compose_oracle(a: &Pairs, b: &Pairs) -> Pairs {
    let mut out = Pairs::new();
    for &(x, y) in a {
        for &(y2, z) in b {
            if y == y2 {
                out.insert((x, z));
            }
        }
    }
    out
}

fn relation(k: usize) -> impl Strategy<Value = Vec<(u32, u32)>> {
    prop::collection::vec((0..k as u32, 0..k as u32), 0..3 * k)
}

fn cloud() -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-20.0..20.0f64, 2), 2..40)
}

fn random_cover(points: usize) -> impl Strategy<Value = Vec<Vec<u32>>> {
    prop::collection::vec(prop::collection::btree_set(0..points as u32, 1..points.max(2)), 1..10).prop_map(
        move |sets| {
            let mut sets: Vec<Vec<u32>> = sets.into_iter().map(|s| s.into_iter().collect()).collect();
            // Fill in every point not yet covered.
            let covered: BTreeSet<u32> = sets.iter().flatten().copied().collect();
            let rest: Vec<u32> = (0..points as u32).filter(|p| !covered.contains(p)).collect();
            if !rest.is_empty() {
                sets.push(rest);
            }
            sets
        },
    )
}

/// Largest number of sets with a common point, found by scanning every subfamily.
fn subset_multiplicity(points: usize, sets: &[Vec<u32>]) -> usize {
    let distinct: BTreeSet<&Vec<u32>> = sets.iter().collect();
    let distinct: Vec<&Vec<u32>> = distinct.into_iter().collect();
    let mut best = 0;
    for mask in 1u32..1 << distinct.len() {
        let chosen: Vec<&Vec<u32>> = (0..distinct.len()).filter(|i| mask >> i & 1 == 1).map(|i| distinct[i]).collect();
        if (0..points as u32).any(|p| chosen.iter().all(|s| s.contains(&p))) {
            best = best.max(chosen.len());
        }
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn distances_form_a_pseudometric(coords in cloud()) {
        let s = Space::points(2, coords).unwrap();
        for i in 0..s.len() {
            prop_assert_eq!(s.dist(i, i), 0.0);
            for j in 0..s.len() {
                prop_assert_eq!(s.dist(i, j), s.dist(j, i));
                for k in 0..s.len() {
                    prop_assert!(s.dist(i, k) <= s.dist(i, j) + s.dist(j, k) + 1e-9);
                }
            }
        }
    }

    #[test]
    fn tree_distances_form_a_metric(parents in prop::collection::vec(any::<prop::sample::Index>(), 1..60)) {
        let edges: Vec<(u32, u32)> = parents.iter().enumerate().map(|(i, p)| (p.index(i + 1) as u32, i as u32 + 1)).collect();
        let s = Space::tree(parents.len() + 1, &edges).unwrap();
        for i in 0..s.len() {
            for j in 0..s.len() {
                prop_assert_eq!(s.dist(i, j), s.dist(j, i));
                prop_assert_eq!(s.dist(i, j) == 0.0, i == j);
                for k in 0..s.len() {
                    prop_assert!(s.dist(i, k) <= s.dist(i, j) + s.dist(j, k));
                }
            }
        }
    }

    #[test]
    fn composition_is_associative(a in relation(20), b in relation(20), c in relation(20)) {
        let s = line(20);
        let (ea, eb, ec) = (
            Entourage::from_pairs(s.clone(), a).unwrap(),
            Entourage::from_pairs(s.clone(), b).unwrap(),
            Entourage::from_pairs(s.clone(), c).unwrap(),
        );
        let left = ea.compose(&eb).unwrap().compose(&ec).unwrap();
        let right = ea.compose(&eb.compose(&ec).unwrap()).unwrap();
        prop_assert_eq!(pairs_of(&left), pairs_of(&right));
        prop_assert_eq!(pairs_of(&ea.compose(&eb).unwrap()), compose_oracle(&pairs_of(&ea), &pairs_of(&eb)));
    }

    #[test]
    fn composition_distributes_over_union(e1 in relation(16), e2 in relation(16), f1 in relation(16), f2 in relation(16)) {
        let s = line(16);
        let mk = |r: Vec<(u32, u32)>| Entourage::from_pairs(s.clone(), r).unwrap();
        let (e1, e2, f1, f2) = (mk(e1), mk(e2), mk(f1), mk(f2));
        let left = e1.union(&e2).unwrap().compose(&f1.union(&f2).unwrap()).unwrap();
        let mut right = pairs_of(&e1.compose(&f1).unwrap());
        for (e, f) in [(&e1, &f2), (&e2, &f1), (&e2, &f2)] {
            right.extend(pairs_of(&e.compose(f).unwrap()));
        }
        prop_assert_eq!(pairs_of(&left), right);
    }

    #[test]
    fn inverse_is_an_involution(r in relation(25)) {
        let e = Entourage::from_pairs(line(25), r).unwrap();
        prop_assert_eq!(pairs_of(&e.inverse().unwrap().inverse().unwrap()), pairs_of(&e));
    }

    #[test]
    fn image_distributes_over_union(
        r in relation(30),
        a in prop::collection::btree_set(0..30u32, 0..10),
        b in prop::collection::btree_set(0..30u32, 0..10),
    ) {
        let e = Entourage::from_pairs(line(30), r).unwrap();
        let a: Vec<u32> = a.into_iter().collect();
        let b: Vec<u32> = b.into_iter().collect();
        let ab: Vec<u32> = a.iter().chain(&b).copied().collect::<BTreeSet<_>>().into_iter().collect();
        let mut joined: BTreeSet<u32> = e.image(&a).into_iter().collect();
        joined.extend(e.image(&b));
        prop_assert_eq!(e.image(&ab).into_iter().collect::<BTreeSet<_>>(), joined);
    }

    #[test]
    fn radius_composition_is_within_sum(coords in cloud(), r in 0.5..8.0f64, t in 0.5..8.0f64) {
        let s = Arc::new(Space::points(2, coords).unwrap());
        let er = Entourage::radius(s.clone(), r).unwrap();
        let et = Entourage::radius(s.clone(), t).unwrap();
        for (x, y) in er.compose(&et).unwrap().pairs().unwrap() {
            prop_assert!(s.dist(x as usize, y as usize) < r + t + 1e-12);
        }
    }

    #[test]
    fn pull_after_push_contains_original(
        r in relation(12),
        table in prop::collection::vec(0..20u32, 12),
        bijective in any::<bool>(),
    ) {
        let src = line(12);
        let tgt = if bijective { line(12) } else { line(20) };
        let table: Vec<u32> = if bijective {
            let mut t: Vec<u32> = (0..12).collect();
            t.sort_by_key(|&i| table[i as usize]);
            t
        } else {
            let mut seen = BTreeSet::new();
            let mut out = Vec::new();
            for (i, &v) in table.iter().enumerate() {
                // Injective: probe upwards from the drawn value.
                let mut v = (v + i as u32) % 20;
                while !seen.insert(v) {
                    v = (v + 1) % 20;
                }
                out.push(v);
            }
            out
        };
        let f = PointMap::new(src.clone(), tgt, table).unwrap();
        let e = Entourage::from_pairs(src, r).unwrap();
        let back = transport(&f, &transport(&f, &e, Direction::Push).unwrap(), Direction::Pull).unwrap();
        let orig = pairs_of(&e);
        let round = pairs_of(&back);
        prop_assert!(orig.is_subset(&round));
        if f.is_injective() {
            prop_assert_eq!(orig, round);
        }
    }

    #[test]
    fn lebesgue_number_gives_appetite(coords in cloud(), sets in random_cover(40)) {
        let n = coords.len();
        let s = Arc::new(Space::points(2, coords).unwrap());
        let sets: Vec<Vec<u32>> = sets.into_iter().map(|v| v.into_iter().filter(|&p| (p as usize) < n).collect::<Vec<_>>()).filter(|v: &Vec<u32>| !v.is_empty()).collect();
        prop_assume!(!sets.is_empty());
        let c = Cover::new(s.clone(), sets, None).unwrap();
        let r = c.lebesgue_number();
        if r.is_finite() && r > 0.0 {
            prop_assert!(c.has_appetite(&Entourage::radius(s, r).unwrap()).unwrap());
        }
    }

    #[test]
    fn multiplicity_matches_subset_oracle_and_ignores_order(sets in random_cover(30), seed in any::<u64>()) {
        let s = line(30);
        let c = Cover::new(s.clone(), sets.clone(), None).unwrap();
        prop_assert_eq!(c.multiplicity(), subset_multiplicity(30, &sets));
        let mut shuffled = sets.clone();
        let k = shuffled.len();
        shuffled.rotate_left((seed as usize) % k);
        shuffled.push(sets[(seed as usize / 7) % k].clone());
        prop_assert_eq!(Cover::new(s, shuffled, None).unwrap().multiplicity(), c.multiplicity());
    }

    #[test]
    fn mesh_is_the_cover_entourage_radius(coords in cloud(), sets in random_cover(40)) {
        let n = coords.len();
        let s = Arc::new(Space::points(2, coords).unwrap());
        let sets: Vec<Vec<u32>> = sets.into_iter().map(|v| v.into_iter().filter(|&p| (p as usize) < n).collect::<Vec<_>>()).filter(|v: &Vec<u32>| !v.is_empty()).collect();
        prop_assume!(!sets.is_empty());
        let c = Cover::new(s, sets, None).unwrap();
        let d = c.cover_entourage().unwrap().max_distance().unwrap();
        prop_assert!((c.mesh() - d).abs() <= f64::EPSILON * d.max(1.0));
    }

    #[test]
    fn colorize_refines_its_input(k in 20..80usize, width in 3..7usize, n in 1..3usize) {
        // Overlapping intervals of length `(n+1)·width` started every `width` points.
        let s = line(k);
        let sets: Vec<Vec<u32>> = (0..k.div_ceil(width) + n)
            .map(|j| ((j * width).saturating_sub(n * width)..((j + 1) * width).min(k)).map(|p| p as u32).collect::<Vec<_>>())
            .filter(|v: &Vec<u32>| !v.is_empty())
            .collect();
        let c = Cover::new(s.clone(), sets, None).unwrap();
        prop_assume!(c.multiplicity() <= n + 1);
        let l = Entourage::closed_radius(s.clone(), ((width as f64) / 2.0 - 0.5).max(0.5)).unwrap();
        if let Ok((out, _)) = colorize(&c, &l, n) {
            let out = out.cover();
            prop_assert!(out.family_count() <= n + 1);
            for set in out.sets() {
                prop_assert!(c.sets().iter().any(|u| set.iter().all(|p| u.binary_search(p).is_ok())));
            }
            for fam in out.families().unwrap() {
                for (i, &a) in fam.iter().enumerate() {
                    for &b in &fam[i + 1..] {
                        for &p in out.set(a) {
                            prop_assert!(!l.image(&[p]).iter().any(|q| out.set(b).binary_search(q).is_ok()));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn sperner_counts_are_odd(n in 1..3usize, k in 1..7usize, picks in prop::collection::vec(any::<prop::sample::Index>(), 64)) {
        let base = SimplexGrid::new(n, k, Labeling::Nearest).unwrap();
        let labels: Vec<usize> = (0..base.len()).map(|v| {
            let carrier = base.carrier(v);
            carrier[picks[v % picks.len()].index(carrier.len())]
        }).collect();
        let grid = SimplexGrid::new(n, k, Labeling::Explicit(labels)).unwrap();
        let full = grid.cells().iter().filter(|cell| {
            let got: BTreeSet<usize> = cell.iter().map(|&v| grid.labels()[v]).collect();
            got.len() == n + 1
        }).count();
        prop_assert_eq!(full % 2, 1);
        prop_assert_eq!(grid.fully_labeled().len(), full);
    }

    #[test]
    fn radial_projection_contracts(
        k in 1..4usize,
        rho in 0.5..6.0f64,
        r1 in 0.0..8.0f64, r2 in 0.0..8.0f64,
        p1 in 0.0..2.0 * PI, p2 in 0.0..2.0 * PI,
    ) {
        let x = (k as f64 * rho + r1, p1);
        let y = (k as f64 * rho + r2, p2);
        let d = |a: (f64, f64), b: (f64, f64)| {
            (a.0.cosh() * b.0.cosh() - a.0.sinh() * b.0.sinh() * (a.1 - b.1).cos()).max(1.0).acosh()
        };
        let (px, py) = (radial_projection(x, k, rho).unwrap(), radial_projection(y, k, rho).unwrap());
        prop_assert!(d(px, py) <= d(x, y) + 1e-9);
    }

    #[test]
    fn controlled_is_monotone(
        dims in prop::collection::vec(1..3usize, 2..6),
        entries in prop::collection::vec((any::<prop::sample::Index>(), any::<prop::sample::Index>(), -1.0..1.0f64), 1..12),
        r in relation(6),
        extra in relation(6),
    ) {
        let b = dims.len();
        let d = Arc::new(Decomposition::new(line(b), (0..b as u32).map(|i| vec![i]).collect(), dims, None, None).unwrap());
        let total = d.total_dim();
        let mut m = DMatrix::<Complex64>::zeros(total, total);
        for (i, j, v) in entries {
            m[(i.index(total), j.index(total))] = Complex64::new(v, 0.0);
        }
        let t = BlockOperator::new(m, d.clone()).unwrap();
        let q = d.quotient_space().unwrap();
        let keep = |rel: Vec<(u32, u32)>| rel.into_iter().filter(|&(x, y)| (x as usize) < b && (y as usize) < b).collect::<Vec<_>>();
        let small = Entourage::from_pairs(q.clone(), keep(r.clone())).unwrap();
        let big = Entourage::from_pairs(q, keep(r).into_iter().chain(keep(extra)).collect::<Vec<_>>()).unwrap();
        if is_controlled(&t, &small, 1e-12).unwrap() {
            prop_assert!(is_controlled(&t, &big, 1e-12).unwrap());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn filtration_is_monotone_and_exhaustive(steps in 5..60usize) {
        let model = CompactificationModel::unit_interval(steps).unwrap();
        let mut prev: BTreeSet<u32> = BTreeSet::new();
        for i in 1..=model.depth() {
            let xi: BTreeSet<u32> = model.filtration(i).into_iter().collect();
            prop_assert!(prev.is_subset(&xi));
            prev = xi;
        }
        prop_assert_eq!(prev, model.interior().iter().copied().collect::<BTreeSet<_>>());
    }

    #[test]
    fn continuous_control_is_inherited_by_subsets(steps in 10..50usize, keep in prop::collection::vec(any::<bool>(), 64)) {
        let model = CompactificationModel::unit_interval(steps).unwrap();
        let inner = model.interior_space().unwrap();
        // {(x,y) | |x-y| ≤ (1 - max(x,y))/2} shrinks towards the corona point 1.
        let x = |p: usize| inner.coords(p).unwrap()[0];
        let mut pairs = Vec::new();
        for p in 0..inner.len() {
            for q in 0..inner.len() {
                if (x(p) - x(q)).abs() <= 0.5 * (1.0 - x(p).max(x(q))) + 1e-12 {
                    pairs.push((p as u32, q as u32));
                }
            }
        }
        let big = Entourage::from_pairs(inner.clone(), pairs.clone()).unwrap();
        let small = Entourage::from_pairs(inner, pairs.iter().enumerate().filter(|(i, _)| keep[i % keep.len()]).map(|(_, &p)| p)).unwrap();
        let vb = check_cc_entourage(&model, &big, Decay::AmbientHarmonic).unwrap();
        let vs = check_cc_entourage(&model, &small, Decay::Harmonic(vb.constant)).unwrap();
        prop_assert!(vb.controlled);
        prop_assert!(vs.controlled);
        for (a, b) in vs.rho.iter().zip(&vb.rho) {
            prop_assert!(a <= b);
        }
    }
}
