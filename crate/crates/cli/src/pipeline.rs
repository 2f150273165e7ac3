//! Registered multi-step checks.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use coarse_core::certificate::num;
use coarse_core::corona::{corona_dim_cover, level_shift, level_space, CompactificationModel, CoronaCoverSchedule};
use coarse_core::space::{hyperbolic_distance, GridSpec};
use coarse_core::support::{
    check_calculus, induce_adjoint, is_controlled, pvm_blocks, pvm_projection, support_operator, BlockOperator,
    Decomposition, SupportRelation, ZERO_TOL,
};
use coarse_core::transform::{colorize, expand};
use coarse_core::witness::hyperbolic::{adjust_gap, disk_sample};
use coarse_core::witness::lower_bound::pn_sample;
use coarse_core::witness::{
    cube_cover, hyperbolic_params, radial_projection, simplex_lower_bound_check, sperner_find, sphere_cover_lift,
    Labeling, SimplexGrid, SphereAtlas,
};
use coarse_core::{Certificate, Cover, Entourage, Space};
use rand::Rng;
use serde_json::{json, Value};

use crate::args::{GridName, PipelineArgs, PipelineName};
use crate::commands::cover_summary;
use crate::{fixtures, CmdResult, Ctx, Failure, Output};

pub fn run(p: &PipelineArgs, ctx: &mut Ctx) -> CmdResult<Output> {
    match p.name {
        PipelineName::AsdimUpper => asdim_upper(p),
        PipelineName::AsdimLower => asdim_lower(p),
        PipelineName::HyperbolicFull => hyperbolic_full(p, ctx),
        PipelineName::CoronaFull => corona_full(p),
        PipelineName::SupportSuite => support_suite(p, ctx),
    }
}

fn positive(v: f64, what: &str) -> CmdResult<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Failure::Usage(format!("{what} must be positive")))
    }
}

/// Entourage radii used by `asdim-upper`: colorize at `L/4`, expand at `L/8`.
pub fn asdim_upper_radii(l: f64) -> (f64, f64) {
    (l / 4.0, l / 8.0)
}

/// Cube cover, then colorize, then expand, then cover metrics.
fn asdim_upper(p: &PipelineArgs) -> CmdResult<Output> {
    let dim = match p.space.unwrap_or(GridName::Grid2d) {
        GridName::Grid1d => 1,
        GridName::Grid2d => 2,
    };
    let l = positive(p.l.unwrap_or(2.0), "--l")?;
    let step = positive(p.step.unwrap_or(0.25), "--step")?;
    let extent = positive(p.extent.unwrap_or(12.0), "--extent")?;
    let a = 2.0 * (dim + 1) as f64 * l;
    let space = Arc::new(Space::grid(GridSpec::cube(dim, 0.0, extent, step)?));
    let (cube, mut cert) = cube_cover(&space, a)?;
    let (rc, re) = asdim_upper_radii(l);
    let lc = Entourage::closed_radius(space.clone(), rc)?;
    let le = Entourage::closed_radius(space.clone(), re)?;
    let (colored, c2) = colorize(cube.cover(), &lc, dim)?;
    cert.extend(c2);
    let (expanded, c3) = expand(colored.cover(), &le)?;
    cert.extend(c3);
    let fin = expanded.cover();
    let appetite = fin.appetite_witness(&le)?;
    cert.holds("cover-metrics", "appetite", appetite.is_none(), appetite.map(|x| format!("point {x}")));
    cert.at_most("cover-metrics", "multiplicity", (dim + 1) as f64, fin.multiplicity() as f64, None);
    let result = json!({
        "a": num(a),
        "colorize_radius": num(rc),
        "expand_radius": num(re),
        "cube": cover_summary(cube.cover()),
        "colorized": cover_summary(colored.cover()),
        "expanded": cover_summary(fin),
    });
    Ok(Output { certificate: cert, result, artifact: None })
}

/// Regular box cover of a `P_n` sample: cells of edge `width` grown by `pad` on every side.
pub fn pn_grid_cover(space: Arc<Space>, n: usize, extent: f64, width: f64, pad: f64) -> coarse_core::Result<Cover> {
    let cells = (extent / width).ceil() as usize + 1;
    let mut sets = Vec::new();
    let total = cells.pow(n as u32);
    for cell in 0..total {
        let mut idx = cell;
        let bounds: Vec<(f64, f64)> = (0..n)
            .map(|_| {
                let i = idx % cells;
                idx /= cells;
                (i as f64 * width - pad, (i + 1) as f64 * width + pad)
            })
            .collect();
        let set: Vec<u32> = (0..space.len() as u32)
            .filter(|&q| {
                let x = space.coords(q as usize).expect("coordinates");
                x.iter().zip(&bounds).all(|(v, (lo, hi))| v >= lo && v < hi)
            })
            .collect();
        if !set.is_empty() {
            sets.push(set);
        }
    }
    Cover::new(space, sets, None)
}

/// Lower-bound certificate for a box cover of `P_n`, plus the Sperner parity check.
fn asdim_lower(p: &PipelineArgs) -> CmdResult<Output> {
    let n = p.n.unwrap_or(2);
    if n == 0 || n > 3 {
        return Err(Failure::Usage("--n must be 1, 2 or 3".into()));
    }
    let extent = positive(p.extent.unwrap_or(30.0), "--extent")?;
    let step = positive(p.step.unwrap_or(0.5), "--step")?;
    let space = Arc::new(pn_sample(n, extent, step)?);
    let cover = pn_grid_cover(space, n, extent, 4.0, 1.25)?;
    let (lb, mut cert) = simplex_lower_bound_check(&cover, n)?;
    let mut counts = Vec::new();
    for labeling in [Labeling::Nearest, Labeling::ConstantInterior] {
        let grid = SimplexGrid::new(n, 6, labeling)?;
        sperner_find(&grid)?;
        let count = grid.fully_labeled().len();
        cert.push("sperner", "fully-labeled count odd", "odd", count as u64, count % 2 == 1, None);
        counts.push(count);
    }
    let result = json!({
        "cover": cover_summary(&cover),
        "certificate": serde_json::to_value(&lb).expect("certificates serialize"),
        "sperner_counts": counts,
    });
    Ok(Output { certificate: cert, result, artifact: None })
}

/// Sampled contraction and `δ`-Lipschitz checks of the radial projection.
pub struct ProjectionChecks {
    pub contraction_pairs: usize,
    pub contraction_excess: f64,
    pub lipschitz_pairs: usize,
    pub lipschitz_ratio: f64,
}

/// `pairs` random pairs in the annulus beyond circle `k` for contraction; pairs on the
/// circle of radius `kρ + a` with `d < a`, `a` just above the gap for `delta`, for the Lipschitz bound.
pub fn projection_checks<R: Rng>(
    rng: &mut R,
    kappa: f64,
    rho: f64,
    delta: f64,
    pairs: usize,
) -> coarse_core::Result<ProjectionChecks> {
    let mut excess = f64::NEG_INFINITY;
    for _ in 0..pairs {
        let k = rng.gen_range(1..=4);
        let r0 = k as f64 * rho;
        let x = (rng.gen_range(r0..r0 + 8.0), rng.gen_range(0.0..TAU));
        let y = (rng.gen_range(r0..r0 + 8.0), rng.gen_range(0.0..TAU));
        let d = hyperbolic_distance(kappa, x, y);
        let dp = hyperbolic_distance(kappa, radial_projection(x, k, rho)?, radial_projection(y, k, rho)?);
        excess = excess.max(dp - d);
    }
    let a = adjust_gap(kappa, delta)? * 1.01;
    let mut ratio: f64 = 0.0;
    let mut tested = 0;
    for _ in 0..pairs {
        let k = rng.gen_range(1..=4);
        let r = k as f64 * rho + a;
        // Angle at which two points of the circle sit at distance `a`.
        let c = (-kappa).sqrt();
        let w = 2.0 * ((c * a / 2.0).sinh() / (c * r).sinh()).min(1.0).asin();
        let x = (r, rng.gen_range(0.0..TAU));
        let y = (r, x.1 + rng.gen_range(-w..w));
        let d = hyperbolic_distance(kappa, x, y);
        if d >= a || d.is_nan() || d == 0.0 {
            continue;
        }
        tested += 1;
        let dp = hyperbolic_distance(kappa, radial_projection(x, k, rho)?, radial_projection(y, k, rho)?);
        ratio = ratio.max(dp / d);
    }
    Ok(ProjectionChecks { contraction_pairs: pairs, contraction_excess: excess, lipschitz_pairs: tested, lipschitz_ratio: ratio })
}

/// Stress configuration of the lift with several shells inside the sampled disk.
pub const STRESS_RHO: f64 = 2.31;
pub const STRESS_SHIFT: usize = 2;
pub const STRESS_L: f64 = 0.3;

pub fn stress_sample(kappa: f64) -> coarse_core::Result<Space> {
    disk_sample(kappa, 16.0, 0.15, 0.1, 0.03, 60)
}

/// Lift at the computed parameters on a radius-30 disk, the stress lift, and the projection checks.
fn hyperbolic_full(p: &PipelineArgs, ctx: &mut Ctx) -> CmdResult<Output> {
    let kappa = p.kappa.unwrap_or(-1.0);
    let l = positive(p.l.unwrap_or(5.0), "--l")?;
    let (lambda, d, n) = (0.2, 1.0, 2);
    let (rho, big_n) = hyperbolic_params(kappa, lambda, d, l, n)?;
    let atlas = SphereAtlas::new(kappa, rho, lambda, d)?;
    let disk = Arc::new(disk_sample(kappa, 30.0, 0.5, 0.5, PI, 40)?);
    let (cover, mut cert) = sphere_cover_lift(&disk, &atlas, big_n, l)?;
    let stress = Arc::new(stress_sample(kappa)?);
    let stress_atlas = SphereAtlas::new(kappa, STRESS_RHO, lambda, d)?;
    let (stress_cover, c2) = sphere_cover_lift(&stress, &stress_atlas, STRESS_SHIFT, STRESS_L)?;
    cert.extend(c2);
    let mut result = json!({
        "rho": num(rho),
        "shift": big_n,
        "cover": cover_summary(&cover),
        "stress": { "rho": num(STRESS_RHO), "shift": STRESS_SHIFT, "l": num(STRESS_L), "cover": cover_summary(&stress_cover) },
    });
    if ctx.seed.is_some() {
        let mut rng = ctx.rng("projection checks")?;
        let delta = 0.5;
        let pc = projection_checks(&mut rng, kappa, rho, delta, 10_000)?;
        cert.at_most("radial-projection", "contraction excess", 1e-9, pc.contraction_excess, None);
        cert.at_most("radial-projection", "delta-Lipschitz ratio", delta, pc.lipschitz_ratio, None);
        result["projection"] = json!({
            "contraction_pairs": pc.contraction_pairs,
            "contraction_excess": num(pc.contraction_excess),
            "lipschitz_pairs": pc.lipschitz_pairs,
            "lipschitz_ratio": num(pc.lipschitz_ratio),
        });
    }
    Ok(Output { certificate: cert, result, artifact: None })
}

/// Equivalence tables for both models and the circle-corona cover.
fn corona_full(p: &PipelineArgs) -> CmdResult<Output> {
    let depth = p.depth.unwrap_or(200);
    let mut cert = Certificate::new();
    let interval = CompactificationModel::unit_interval(100)?.equivalence()?;
    cert.extend(interval.certificate);
    let disk = CompactificationModel::disk(20, 16)?.equivalence()?;
    cert.extend(disk.certificate);
    let sched = CoronaCoverSchedule::circle(96)?;
    let e = level_shift(level_space(depth)?, 1)?;
    let delta: Vec<f64> = (0..=depth).map(|m| 0.5 / (m + 1) as f64).collect();
    let out = corona_dim_cover(&sched, &delta, &e, depth)?;
    cert.extend(out.certificate);
    let result = json!({
        "interval_depth": interval.depth,
        "disk_depth": disk.depth,
        "dimcover": {
            "depth": depth,
            "sets": out.cover.len(),
            "multiplicity": out.cover.multiplicity(),
            "l": out.l,
            "k": out.k,
            "d_floor": num(out.d.last().copied().unwrap_or(f64::NAN)),
        },
    });
    Ok(Output { certificate: cert, result, artifact: None })
}

/// PVM axioms over every pair of block subsets of a decomposition with at most 5 blocks:
/// `P(∅) = 0`, `P(all) = 1`, `P(A)P(B) = P(A∩B)`, `P(A∪B) = P(A)+P(B)-P(A∩B)`, and
/// `P(A)` commutes with `P(B)`. Returns the first failing pair.
pub fn pvm_exhaustive(d: &Decomposition) -> Option<(usize, usize)> {
    let b = d.block_count();
    let all = (1usize << b) - 1;
    let blocks = |mask: usize| -> Vec<usize> { (0..b).filter(|i| mask >> i & 1 == 1).collect() };
    let empty_points = pvm_projection(d, &[]).ok()?;
    if empty_points.iter().any(|&x| x != 0.0) {
        return Some((0, 0));
    }
    let full: Vec<u32> = (0..d.space().len() as u32).collect();
    if pvm_projection(d, &full).ok()?.iter().any(|&x| x != 1.0) {
        return Some((all, all));
    }
    for ma in 0..=all {
        let pa = pvm_blocks(d, &blocks(ma));
        let from_points = pvm_projection(d, &d.points_of(&blocks(ma))).ok()?;
        if pa != from_points {
            return Some((ma, ma));
        }
        for mb in 0..=all {
            let pb = pvm_blocks(d, &blocks(mb));
            let meet = pvm_blocks(d, &blocks(ma & mb));
            let join = pvm_blocks(d, &blocks(ma | mb));
            if pa.component_mul(&pb) != meet || join != &pa + &pb - &meet {
                return Some((ma, mb));
            }
        }
    }
    None
}

/// Projections commute with an operator exactly on blocks outside its support:
/// `P(A) T P(B) = 0` whenever no support pair lies in `A × B`.
pub fn projection_commute_witness(t: &BlockOperator, tol: f64) -> coarse_core::Result<Option<(usize, usize)>> {
    let d = t.decomposition().clone();
    let b = d.block_count();
    let supp = support_operator(t, tol);
    let all = (1usize << b) - 1;
    for ma in 1..=all {
        for mb in 1..=all {
            let a: Vec<usize> = (0..b).filter(|i| ma >> i & 1 == 1).collect();
            let bb: Vec<usize> = (0..b).filter(|i| mb >> i & 1 == 1).collect();
            let pa = BlockOperator::projection(d.clone(), &a);
            let pb = BlockOperator::projection(d.clone(), &bb);
            let sandwich = pa.mul(t)?.mul(&pb)?;
            let hits = a.iter().any(|&x| bb.iter().any(|&y| supp.contains(x, y)));
            let zero = support_operator(&sandwich, tol).pairs.is_empty();
            if hits == zero {
                return Ok(Some((ma, mb)));
            }
        }
    }
    Ok(None)
}

/// Random calculus triples, exhaustive PVM checks, induced supports and controlled monotonicity.
fn support_suite(p: &PipelineArgs, ctx: &mut Ctx) -> CmdResult<Output> {
    let trials = p.trials.unwrap_or(100);
    let mut rng = ctx.rng("support-suite")?;
    const ANCHOR: &str = "support-calculus";
    let mut cert = Certificate::new();
    let mut failures: Vec<String> = Vec::new();
    let mut sensitive = 0usize;
    for trial in 0..trials {
        let d = Arc::new(fixtures::random_decomposition(&mut rng, 6, 4)?);
        let s = fixtures::random_operator(&mut rng, &d, 0.35)?;
        let t = fixtures::random_operator(&mut rng, &d, 0.35)?;
        let u = fixtures::random_vector(&mut rng, &d, 0.5);
        let v = fixtures::random_vector(&mut rng, &d, 0.5);
        let report = check_calculus(&s, &t, &u, &v, ZERO_TOL)?;
        sensitive += report.sensitive.len();
        for inc in report.inclusions.iter().filter(|i| !i.pass) {
            failures.push(format!("trial {trial}: {}", inc.name));
        }
    }
    cert.push(
        ANCHOR,
        "calculus inclusions on random triples",
        0u64,
        failures.len() as u64,
        failures.is_empty(),
        failures.first().cloned(),
    );

    let mut pvm_checked = 0;
    let mut pvm_failure = None;
    let mut commute_failure = None;
    for blocks in 1..=5 {
        for _ in 0..4 {
            let d = Arc::new(fixtures::random_decomposition(&mut rng, blocks, 3)?);
            pvm_checked += 1;
            if pvm_failure.is_none() {
                pvm_failure = pvm_exhaustive(&d).map(|(a, b)| format!("{} blocks, subsets {a:#b} and {b:#b}", d.block_count()));
            }
            let t = fixtures::random_operator(&mut rng, &d, 0.4)?;
            if commute_failure.is_none() {
                commute_failure = projection_commute_witness(&t, ZERO_TOL)?
                    .map(|(a, b)| format!("{} blocks, subsets {a:#b} and {b:#b}", d.block_count()));
            }
        }
    }
    cert.holds("pvm", "projection-valued measure axioms", pvm_failure.is_none(), pvm_failure);
    cert.holds("pvm", "projections and supports", commute_failure.is_none(), commute_failure);

    let mut induce_failure = None;
    for trial in 0..10 {
        let src = Arc::new(fixtures::random_decomposition(&mut rng, 5, 3)?);
        let t = fixtures::random_operator(&mut rng, &src, 0.4)?;
        let fx = fixtures::induce_fixture(&mut rng, &src)?;
        let (out, c) = induce_adjoint(&fx.map, &fx.phi, &t, fx.target.clone(), ZERO_TOL)?;
        let image = support_operator(&t, ZERO_TOL).image(&fx.map);
        let extra = support_operator(&out, ZERO_TOL).subset_witness(&image);
        if induce_failure.is_none() && (!c.all_pass() || extra.is_some()) {
            induce_failure = Some(format!("trial {trial}: {extra:?}"));
        }
    }
    cert.holds("induced-support", "Supp(ad T) in f x f(Supp(T)) on 10 trials", induce_failure.is_none(), induce_failure);

    // Controlled support is monotone in the entourage: Supp(T) ⊆ E ⊆ E' gives Supp(T) ⊆ E'.
    let mut mono_failure = None;
    for trial in 0..20 {
        let d = Arc::new(fixtures::random_decomposition(&mut rng, 5, 2)?);
        let t = fixtures::random_operator(&mut rng, &d, 0.3)?;
        let q = d.quotient_space()?;
        let supp = support_operator(&t, ZERO_TOL);
        let e = supp.to_entourage(q.clone())?;
        let extra: Vec<(u32, u32)> =
            (0..3).map(|_| (rng.gen_range(0..q.len()) as u32, rng.gen_range(0..q.len()) as u32)).collect();
        let bigger = e.union(&Entourage::from_pairs(q.clone(), extra)?)?;
        let ok = is_controlled(&t, &e, ZERO_TOL)? && is_controlled(&t, &bigger, ZERO_TOL)?;
        let back = SupportRelation::from_entourage(&e)?;
        if mono_failure.is_none() && (!ok || back != supp) {
            mono_failure = Some(format!("trial {trial}"));
        }
    }
    cert.holds("controlled-support", "controlled support monotone in E", mono_failure.is_none(), mono_failure);

    let result: Value = json!({
        "trials": trials,
        "pvm_decompositions": pvm_checked,
        "near_threshold_blocks": sensitive,
    });
    Ok(Output { certificate: cert, result, artifact: None })
}
