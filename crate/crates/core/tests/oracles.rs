//! Worked examples checked against independent brute-force computations.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::sync::Arc;

use coarse_core::corona::{
    check_cc_entourage, corona_dim_cover, level_shift, level_space, CompactificationModel, CoronaCoverSchedule, Decay,
};
use coarse_core::entourage::{transport, uniformity_modulus, Direction};
use coarse_core::space::{word_lengths, GroupModel};
use coarse_core::transform::{expand, merge_union, product_refine, ColoredCover};
use coarse_core::witness::hyperbolic::adjust_gap;
use coarse_core::witness::lower_bound::pn_sample;
use coarse_core::witness::star::star_lambda;
use coarse_core::witness::{
    cube_cover, hyperbolic_params, ray_cell_cover, simplex_lower_bound_check, star_cover, tree_cover, Labeling,
    SimplexGrid, SimplicialComplex,
};
use coarse_core::{Cover, Entourage, GridSpec, PointMap, Space};

fn line(k: usize) -> Arc<Space> {
    Arc::new(Space::points(1, (0..k).map(|i| vec![i as f64]).collect()).unwrap())
}

fn multiplicity(points: usize, sets: &[Vec<u32>]) -> usize {
    let mut count = vec![0; points];
    sets.iter().flatten().for_each(|&p| count[p as usize] += 1);
    count.into_iter().max().unwrap_or(0)
}

fn covers(points: usize, sets: &[Vec<u32>]) -> bool {
    let seen: BTreeSet<u32> = sets.iter().flatten().copied().collect();
    seen.len() == points
}

/// Whether two distinct same-family sets contain points related by `e`.
fn families_linked(c: &Cover, e: &Entourage) -> bool {
    c.families().unwrap().iter().any(|fam| {
        fam.iter().enumerate().any(|(i, &a)| {
            fam[i + 1..]
                .iter()
                .any(|&b| c.set(a).iter().any(|&p| c.set(b).iter().any(|&q| e.contains(p as usize, q as usize))))
        })
    })
}

/// Whether every `e`-neighbourhood of a point lies in one set.
fn has_appetite(c: &Cover, e: &Entourage) -> bool {
    (0..c.space().len()).all(|x| {
        let ball: Vec<u32> = (0..c.space().len() as u32).filter(|&y| e.contains(x, y as usize)).collect();
        c.sets().iter().any(|s| ball.iter().all(|p| s.contains(p)))
    })
}

#[test]
fn free_group_ball_has_53_elements() {
    let gens = vec![vec![1], vec![2]];
    let ball = word_lengths(GroupModel::Free { rank: 2 }, &gens, 3).unwrap();
    assert_eq!(ball.len(), 1 + 4 + 12 + 36);
    // Reduced words: no letter followed by its inverse.
    for (w, d) in &ball {
        assert_eq!(w.len(), *d as usize);
        assert!(w.windows(2).all(|p| p[0] != -p[1]));
    }
}

#[test]
fn word_metrics_on_z2_are_comparable() {
    let b = vec![vec![1, 0], vec![1, 1]];
    let lengths = word_lengths(GroupModel::Abelian { rank: 2 }, &b, 8).unwrap();
    // Breadth-first search over the Cayley graph of B.
    let steps = [(1, 0), (-1, 0), (1, 1), (-1, -1)];
    let mut dist: HashMap<(i64, i64), u32> = HashMap::from([((0, 0), 0)]);
    let mut queue = VecDeque::from([(0i64, 0i64)]);
    while let Some((x, y)) = queue.pop_front() {
        let d = dist[&(x, y)];
        if d == 8 {
            continue;
        }
        for (dx, dy) in steps {
            dist.entry((x + dx, y + dy)).or_insert_with(|| {
                queue.push_back((x + dx, y + dy));
                d + 1
            });
        }
    }
    assert_eq!(lengths.len(), dist.len());
    for (g, d) in lengths {
        assert_eq!(dist[&(g[0], g[1])], d);
        // The standard word metric on Z² is the l¹ norm.
        let da = (g[0].abs() + g[1].abs()) as u32;
        assert!(da <= 2 * d);
    }
}

#[test]
fn composite_image_is_iterated_image() {
    let s = line(20);
    let e1 = Entourage::from_pairs(s.clone(), (0..19).map(|i| (i, i + 1))).unwrap();
    let e2 = Entourage::from_pairs(s.clone(), (0..10).map(|i| (2 * i, 19 - i))).unwrap();
    let a = [3u32, 4, 12];
    assert_eq!(e1.compose(&e2).unwrap().image(&a), e1.image(&e2.image(&a)));
}

#[test]
fn pullback_along_inclusion_is_restriction() {
    let x = Arc::new(Space::points(1, (0..40).map(|i| vec![i as f64 * 0.5]).collect()).unwrap());
    let idx: Vec<u32> = (0..40).filter(|i| i % 3 != 1).collect();
    let a = Arc::new(Space::subspace(x.clone(), idx.clone()).unwrap());
    let inc = PointMap::new(a.clone(), x.clone(), idx.clone()).unwrap();
    let e = Entourage::radius(x.clone(), 2.0).unwrap();
    let pulled: BTreeSet<(u32, u32)> = transport(&inc, &e, Direction::Pull).unwrap().pairs().unwrap().into_iter().collect();
    let mut oracle = BTreeSet::new();
    for (i, &p) in idx.iter().enumerate() {
        for (j, &q) in idx.iter().enumerate() {
            if x.dist(p as usize, q as usize) < 2.0 {
                oracle.insert((i as u32, j as u32));
            }
        }
    }
    assert_eq!(pulled, oracle);
    let restricted: BTreeSet<(u32, u32)> = e.restrict(a, &idx).unwrap().pairs().unwrap().into_iter().collect();
    assert_eq!(restricted, oracle);
}

#[test]
fn floor_map_modulus() {
    let src = Arc::new(Space::points(1, (0..=40).map(|i| vec![i as f64 * 0.25]).collect()).unwrap());
    let tgt = line(11);
    let table = (0..=40).map(|i| (i as f64 * 0.25).floor() as u32).collect();
    let f = PointMap::new(src.clone(), tgt.clone(), table).unwrap();
    let radii = [0.25, 0.5, 1.0, 2.5];
    let m = uniformity_modulus(&f, &radii, None).unwrap();
    for (r, s) in m.table {
        let mut oracle: f64 = 0.0;
        for i in 0..src.len() {
            for j in 0..src.len() {
                if src.dist(i, j) <= r {
                    oracle = oracle.max(tgt.dist(f.apply(i), f.apply(j)));
                }
            }
        }
        assert_eq!(s, oracle);
        assert!(s <= r + 1.0);
    }
}

#[test]
fn cube_cover_in_the_plane() {
    let grid = Arc::new(Space::grid(GridSpec::cube(2, 0.0, 20.0, 0.5).unwrap()));
    let (c, cert) = cube_cover(&grid, 6.0).unwrap();
    assert!(cert.all_pass());
    let c = c.cover();
    assert_eq!(multiplicity(grid.len(), c.sets()), 3);
    assert!(c.lebesgue_number() >= 1.0);
    assert!(has_appetite(c, &Entourage::radius(grid.clone(), 1.0).unwrap()));
    // The cover entourage sits inside Δ_{6√2 + ε}.
    let bound = 6.0 * 2f64.sqrt() + 1e-9;
    for s in c.sets() {
        for &p in s {
            for &q in s {
                assert!(grid.dist(p as usize, q as usize) < bound);
            }
        }
    }
}

#[test]
fn expanding_alternating_blocks() {
    let s = line(40);
    let families: Vec<Vec<Vec<u32>>> = (0..2)
        .map(|f| (0..10).filter(|k| k % 2 == f).map(|k| (4 * k..4 * k + 4).collect()).collect())
        .collect();
    let c = Cover::from_families(s.clone(), families).unwrap();
    let l = Entourage::closed_radius(s.clone(), 1.0).unwrap();
    let (out, _) = expand(&c, &l).unwrap();
    assert!(has_appetite(out.cover(), &l));
}

#[test]
fn merging_two_halves_of_a_path() {
    let x = line(101);
    let l = Entourage::closed_radius(x.clone(), 1.0).unwrap();
    let half = |lo: u32, hi: u32, width: u32| {
        let idx: Vec<u32> = (lo..=hi).collect();
        let sub = Arc::new(Space::subspace(x.clone(), idx.clone()).unwrap());
        let mut families = vec![Vec::new(), Vec::new()];
        for (j, start) in (0..idx.len() as u32).step_by(width as usize).enumerate() {
            families[j % 2].push((start..(start + width).min(idx.len() as u32)).collect());
        }
        let cover = Cover::from_families(sub.clone(), families).unwrap();
        ColoredCover::new(cover, l.restrict(sub, &idx).unwrap()).unwrap()
    };
    let (out, _) = merge_union(&half(0, 50, 5), &half(50, 100, 12), &l).unwrap();
    let c = out.cover();
    assert_eq!(c.space().len(), 101);
    assert!(covers(101, c.sets()));
    assert_eq!(c.family_count(), 2);
    assert!(!families_linked(c, &l));
}

fn padded(space: Arc<Space>, width: u32, pad: u32) -> Cover {
    let k = space.len() as u32;
    let mut families = vec![Vec::new(), Vec::new()];
    for (j, start) in (0..k).step_by(width as usize).enumerate() {
        families[j % 2].push((start.saturating_sub(pad)..(start + width + pad).min(k)).collect());
    }
    Cover::from_families(space, families).unwrap()
}

#[test]
fn product_of_interval_covers() {
    let (x, y) = (line(24), line(18));
    let ex = Entourage::closed_radius(x.clone(), 1.0).unwrap();
    let ey = Entourage::closed_radius(y.clone(), 1.0).unwrap();
    let (out, _) = product_refine(&padded(x, 8, 3), &padded(y, 8, 3), &ex, &ey, 1, 1).unwrap();
    let c = out.cover.cover();
    assert_eq!(c.family_count(), 3);
    let m = multiplicity(c.space().len(), c.sets());
    assert!(m <= 3, "multiplicity {m} vs naive 4");
    assert!(covers(c.space().len(), c.sets()));
    assert!(!families_linked(c, &out.entourage));
}

#[test]
fn path_tree_classes() {
    let edges: Vec<(u32, u32)> = (1..20).map(|i| (i - 1, i)).collect();
    let s = Arc::new(Space::tree(20, &edges).unwrap());
    let (c, cert) = tree_cover(&s, 2.0, 0).unwrap();
    assert!(cert.all_pass());
    assert!(c.cover().mesh() <= 15.0);
}

#[test]
fn star_tree_splits_per_branch() {
    // Three legs of length 10 hanging off the root.
    let mut edges = Vec::new();
    for leg in 0..3u32 {
        let mut prev = 0;
        for i in 0..10 {
            let v = 1 + leg * 10 + i;
            edges.push((prev, v));
            prev = v;
        }
    }
    let s = Arc::new(Space::tree(31, &edges).unwrap());
    let (c, cert) = tree_cover(&s, 1.0, 0).unwrap();
    assert!(cert.all_pass());
    assert!(multiplicity(31, c.cover().sets()) <= 2);
    // L′ = 3: depth 6 onwards splits into one class per leg.
    let classes = coarse_core::witness::tree::tree_classes(&s, 1.0, 0).unwrap();
    let deep: BTreeSet<(u32, u32)> = (0..3).map(|leg| classes[(1 + leg * 10 + 7) as usize]).collect();
    assert_eq!(deep.len(), 3);
}

#[test]
fn ray_cells() {
    let line = Arc::new(Space::grid(GridSpec::cube(1, 0.0, 30.0, 1.0).unwrap()));
    let (c, _) = ray_cell_cover(1, &Entourage::closed_radius(line.clone(), 1.0).unwrap()).unwrap();
    assert_eq!(c.cover().family_count(), 2);
    assert!(covers(line.len(), c.cover().sets()));
    assert!(!families_linked(c.cover(), &Entourage::closed_radius(line, 1.0).unwrap()));
    let plane = Arc::new(Space::grid(GridSpec::cube(2, 0.0, 59.0, 1.0).unwrap()));
    let (c, _) = ray_cell_cover(2, &Entourage::closed_radius(plane.clone(), 1.0).unwrap()).unwrap();
    assert!(multiplicity(plane.len(), c.cover().sets()) <= 3);
    assert!(covers(plane.len(), c.cover().sets()));
}

#[test]
fn hyperbolic_parameters() {
    let (rho, n) = hyperbolic_params(-1.0, 0.2, 1.0, 5.0, 2).unwrap();
    assert!((rho - 10.01).abs() < 1e-9);
    assert_eq!(n, 2);
    // The four lower bounds on ρ and (N-1)ρ.
    assert!(2.0 * rho > 1.0 && 2.0 * rho > 2.0 * 10f64.ln() && rho > 10.0);
    assert!((n - 1) as f64 * rho > 10.0 && (n - 1) as f64 * rho > 2.0 * 50f64.ln());
    let a = adjust_gap(-1.0, 0.5).unwrap();
    assert!((a - 2.0 * 4f64.ln()).abs() < 1e-9);
}

#[test]
fn star_cover_of_an_edge() {
    let k = SimplicialComplex::new(2, vec![vec![0, 1]]).unwrap();
    let (c, _) = star_cover(&k, 1, 12).unwrap();
    assert_eq!(c.len(), 2);
    assert!((c.lebesgue_number() - 0.5).abs() < 1e-9);
    assert!((star_lambda(2) - 1.0 / 12f64.sqrt()).abs() < 1e-15);
}

fn full_count(grid: &SimplexGrid, n: usize) -> usize {
    grid.cells()
        .iter()
        .filter(|c| c.iter().map(|&v| grid.labels()[v]).collect::<BTreeSet<_>>().len() == n + 1)
        .count()
}

#[test]
fn sperner_examples() {
    let g = SimplexGrid::new(2, 4, Labeling::Nearest).unwrap();
    assert_eq!(full_count(&g, 2) % 2, 1);
    let g = SimplexGrid::new(2, 4, Labeling::ConstantInterior).unwrap();
    assert_eq!(full_count(&g, 2) % 2, 1);
    let cell = coarse_core::witness::sperner_find(&g).unwrap();
    assert!(cell.iter().any(|&v| g.carrier(v).len() < 3));
}

#[test]
fn lower_bound_on_a_ray() {
    let s = Arc::new(pn_sample(1, 30.0, 0.5).unwrap());
    let sets: Vec<Vec<u32>> = (0..9)
        .map(|j| {
            let (lo, hi) = (4.0 * j as f64 - 1.25, 4.0 * (j + 1) as f64 + 1.25);
            (0..s.len() as u32).filter(|&p| (lo..hi).contains(&s.coords(p as usize).unwrap()[0])).collect()
        })
        .filter(|v: &Vec<u32>| !v.is_empty())
        .collect();
    let c = Cover::new(s, sets, None).unwrap();
    let (lb, _) = simplex_lower_bound_check(&c, 1).unwrap();
    assert_eq!(lb.sets.len(), 2);
    assert!(lb.sets.iter().all(|&k| c.set(k).contains(&lb.point)));
}

#[test]
fn lower_bound_on_the_cube_cover() {
    let grid = Arc::new(Space::grid(GridSpec::cube(2, 0.0, 30.0, 0.5).unwrap()));
    let (cube, _) = cube_cover(&grid, 12.0).unwrap();
    let pn = Arc::new(pn_sample(2, 30.0, 0.5).unwrap());
    let key = |v: Vec<f64>| v.iter().map(|x| (x * 2.0).round() as i64).collect::<Vec<_>>();
    let index: HashMap<Vec<i64>, u32> = (0..pn.len()).map(|i| (key(pn.coords(i).unwrap()), i as u32)).collect();
    let sets: Vec<Vec<u32>> = cube
        .cover()
        .sets()
        .iter()
        .map(|s| s.iter().filter_map(|&p| index.get(&key(grid.coords(p as usize).unwrap())).copied()).collect::<Vec<_>>())
        .filter(|v| !v.is_empty())
        .collect();
    let c = Cover::new(pn, sets, None).unwrap();
    let (lb, _) = simplex_lower_bound_check(&c, 2).unwrap();
    let mut hits = lb.sets.clone();
    hits.dedup();
    assert_eq!(hits.len(), 3);
    assert!(hits.iter().all(|&k| c.set(k).contains(&lb.point)));
}

#[test]
fn corona_maps_on_the_interval() {
    let m = CompactificationModel::unit_interval(10).unwrap();
    assert_eq!(m.map_g(9).unwrap(), (10, 10));
    let steps = 100;
    let m = CompactificationModel::unit_interval(steps).unwrap();
    for &x in m.interior() {
        let (xbar, i) = m.map_g(x).unwrap();
        if i >= 2 {
            let y = m.map_f(xbar, i).unwrap();
            let d = m.ambient().dist(x as usize, y as usize);
            assert!(d <= 2.0 / (i - 1) as f64 + 1e-12);
        }
    }
}

#[test]
fn corona_map_on_the_disk() {
    let m = CompactificationModel::disk(20, 16).unwrap();
    let xbar = m.corona()[3];
    let y = m.map_f(xbar, 5).unwrap();
    let (p, q) = (m.ambient().coords(y as usize).unwrap(), m.ambient().coords(xbar as usize).unwrap());
    let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
    assert!((r - 0.8).abs() < 1e-12);
    assert!((p[1].atan2(p[0]) - q[1].atan2(q[0])).abs() < 1e-12);
}

#[test]
fn continuous_control_examples() {
    let m = CompactificationModel::unit_interval(60).unwrap();
    let inner = m.interior_space().unwrap();
    let fixed = Entourage::radius(inner.clone(), 0.1).unwrap();
    let v = check_cc_entourage(&m, &fixed, Decay::Harmonic(0.5)).unwrap();
    assert!(!v.controlled);
    // Below the top level some point outside X_i still has a partner at distance ≥ r - step.
    let below_top = &v.rho[..v.rho.len() - 1];
    assert!(below_top.iter().all(|&r| r >= 0.1 - 1.0 / 60.0 - 1e-12), "{:?}", v.rho);
    let x = |p: usize| inner.coords(p).unwrap()[0];
    let mut pairs = Vec::new();
    for p in 0..inner.len() {
        for q in 0..inner.len() {
            if (x(p) - x(q)).abs() <= 0.5 * (1.0 - x(p).max(x(q))) + 1e-12 {
                pairs.push((p as u32, q as u32));
            }
        }
    }
    let shrinking = Entourage::from_pairs(inner, pairs).unwrap();
    let v = check_cc_entourage(&m, &shrinking, Decay::Harmonic(0.5)).unwrap();
    assert!(v.controlled);
    for (i, r) in v.rho.iter().enumerate() {
        assert!(*r <= 0.5 / (i + 1) as f64 + 1e-12);
    }
}

#[test]
fn point_corona_gives_bands() {
    let depth = 60;
    let levels = level_space(depth).unwrap();
    let e = level_shift(levels, 1).unwrap();
    let delta = vec![1.0; depth + 1];
    let out = corona_dim_cover(&CoronaCoverSchedule::point().unwrap(), &delta, &e, depth).unwrap();
    let sets = out.cover.sets();
    assert!(multiplicity(depth + 1, sets) <= 2);
    assert!(covers(depth + 1, sets));
    // Every shift-by-one neighbourhood lies in one band.
    for m in 0..=depth {
        let ball: Vec<u32> = (m.saturating_sub(1)..=(m + 1).min(depth)).map(|i| i as u32).collect();
        assert!(sets.iter().any(|s| ball.iter().all(|p| s.contains(p))));
    }
}
