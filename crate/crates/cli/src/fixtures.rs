//! Seeded random fixtures shared by the pipelines and the test suites.

use std::sync::Arc;

use coarse_core::space::GridSpec;
use coarse_core::support::{BlockOperator, Decomposition};
use coarse_core::transform::{colorize, ColoredCover};
use coarse_core::{Cover, Entourage, Result, Space};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;

/// Uniform recursive tree: vertex `i` hangs below a uniform earlier vertex.
pub fn random_tree<R: Rng>(rng: &mut R, nodes: usize) -> Result<Space> {
    let edges: Vec<(u32, u32)> = (1..nodes).map(|i| (rng.gen_range(0..i) as u32, i as u32)).collect();
    Space::tree(nodes.max(1), &edges)
}

/// `k` points on the integer line.
pub fn line(k: usize) -> Result<Arc<Space>> {
    Ok(Arc::new(Space::points(1, (0..k).map(|i| vec![i as f64]).collect())?))
}

/// Cut points with gaps drawn from `[2λ + 0.1, 4λ + 0.1]`, reaching `m+1` gaps past both ends of `[lo, hi]`.
fn cuts<R: Rng>(rng: &mut R, lo: f64, hi: f64, lambda: f64, m: usize) -> Vec<f64> {
    let margin = (m + 1) as f64 * (4.0 * lambda + 0.1);
    let mut c = vec![lo - margin - rng.gen_range(0.0..2.0 * lambda + 0.1)];
    while *c.last().expect("nonempty") <= hi + margin {
        let next = c.last().expect("nonempty") + rng.gen_range(2.0 * lambda + 0.1..=4.0 * lambda + 0.1);
        c.push(next);
    }
    c
}

/// Pull-back along `f` of the half-open intervals `[c_j, c_{j+m})`.
///
/// When `f` is 1-Lipschitz and `m ≥ 2` the cover has multiplicity at most `m` and every
/// closed `λ`-ball lies in one of its sets.
pub fn interval_pullback<R: Rng>(rng: &mut R, space: Arc<Space>, f: &[f64], m: usize, lambda: f64) -> Result<Cover> {
    let lo = f.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = f.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let c = cuts(rng, lo, hi, lambda, m);
    let sets: Vec<Vec<u32>> = (0..c.len() - m)
        .map(|j| (0..f.len() as u32).filter(|&p| f[p as usize] >= c[j] && f[p as usize] < c[j + m]).collect())
        .filter(|s: &Vec<u32>| !s.is_empty())
        .collect();
    Cover::new(space, sets, None)
}

/// A random sample space and a 1-Lipschitz function on it.
pub fn random_space<R: Rng>(rng: &mut R, max_points: usize) -> Result<(Arc<Space>, Vec<f64>)> {
    let kind = rng.gen_range(0..3);
    let space = match kind {
        0 => {
            let k = rng.gen_range(40..=max_points.min(200));
            line(k)?
        }
        1 => {
            let k = rng.gen_range(40..=max_points);
            let w = rng.gen_range(10.0..30.0);
            let h = rng.gen_range(2.0..10.0);
            let coords = (0..k).map(|_| vec![rng.gen_range(0.0..w), rng.gen_range(0.0..h)]).collect();
            Arc::new(Space::points(2, coords)?)
        }
        _ => {
            let k = rng.gen_range(30..=max_points);
            Arc::new(random_tree(rng, k)?)
        }
    };
    let base = rng.gen_range(0..space.len());
    let f = (0..space.len())
        .map(|p| match kind {
            0 | 1 => space.coords(p).expect("coordinates")[0],
            _ => space.dist(base, p),
        })
        .collect();
    Ok((space, f))
}

/// Input to `colorize`: a cover of multiplicity at most `n+1` with appetite `L^{n+1}`.
pub struct ColorizeFixture {
    pub cover: Cover,
    pub l: Entourage,
    pub n: usize,
}

pub fn colorize_fixture<R: Rng>(rng: &mut R, max_points: usize) -> Result<ColorizeFixture> {
    let (space, f) = random_space(rng, max_points)?;
    let n = rng.gen_range(1..=2);
    let r = *[0.5, 1.0, 1.5].choose(rng).expect("nonempty");
    let l = Entourage::closed_radius(space.clone(), r)?;
    let cover = interval_pullback(rng, space, &f, n + 1, (n + 1) as f64 * r + 0.01)?;
    Ok(ColorizeFixture { cover, l, n })
}

/// Input to `expand`: a colored cover whose families are `L²`-disjoint.
pub fn expand_fixture<R: Rng>(rng: &mut R, max_points: usize) -> Result<(Cover, Entourage)> {
    let (space, f) = random_space(rng, max_points)?;
    let n = rng.gen_range(1..=2);
    let r = *[0.5, 1.0].choose(rng).expect("nonempty");
    let l = Entourage::closed_radius(space.clone(), r)?;
    let l2 = l.compose(&l)?;
    let base = interval_pullback(rng, space, &f, n + 1, 2.0 * (n + 1) as f64 * r + 0.01)?;
    let (colored, _) = colorize(&base, &l2, n)?;
    Ok((colored.into_cover(), l))
}

/// Strips of width `width` along the first coordinate, colored cyclically in `k` families.
fn strip_cover(space: &Arc<Space>, parent: &Space, members: &[u32], offset: f64, width: f64, k: usize) -> Result<Cover> {
    let mut keyed: std::collections::BTreeMap<i64, Vec<u32>> = std::collections::BTreeMap::new();
    for (i, &p) in members.iter().enumerate() {
        let x = parent.coords(p as usize).expect("coordinates")[0];
        keyed.entry(((x - offset) / width).floor() as i64).or_default().push(i as u32);
    }
    let mut families = vec![Vec::new(); k];
    for (b, set) in keyed {
        families[b.rem_euclid(k as i64) as usize].push(set);
    }
    Cover::from_families(space.clone(), families)
}

/// Two colored covers of overlapping pieces of a grid, with the separations `merge_union` needs.
pub struct MergeFixture {
    pub a: ColoredCover,
    pub b: ColoredCover,
    pub l: Entourage,
}

pub fn merge_fixture<R: Rng>(rng: &mut R) -> Result<MergeFixture> {
    let dim = rng.gen_range(1..=2);
    let len = rng.gen_range(40..=120) as f64;
    let height = if dim == 1 { 0.0 } else { rng.gen_range(1..=3) as f64 };
    let mut max = vec![len];
    if dim == 2 {
        max.push(height);
    }
    let x = Arc::new(Space::grid(GridSpec::new(vec![0.0; dim], max, 1.0)?));
    let r = *[1.0, 1.5, 2.0].choose(rng).expect("nonempty");
    let k = rng.gen_range(2..=3);
    let l = Entourage::closed_radius(x.clone(), r)?;
    // Pieces: A = {x₀ ≤ s + o}, B = {x₀ ≥ s}.
    let split = rng.gen_range(0.3 * len..0.7 * len).round();
    let overlap = rng.gen_range(0..=6) as f64;
    let first = |p: u32| x.coords(p as usize).expect("coordinates")[0];
    let in_a: Vec<u32> = (0..x.len() as u32).filter(|&p| first(p) <= split + overlap).collect();
    let in_b: Vec<u32> = (0..x.len() as u32).filter(|&p| first(p) >= split).collect();
    let sa = Arc::new(Space::subspace(x.clone(), in_a.clone())?);
    let sb = Arc::new(Space::subspace(x.clone(), in_b.clone())?);
    // Same-family strips of A are (k-1)w - 1 > r apart.
    let w = (r / (k - 1) as f64).floor() + 2.0 + rng.gen_range(0..3) as f64;
    // A-strips have horizontal extent below w, so chains L Δ_A L Δ_A L move less than 3r + 2w.
    let reach = 3.0 * r + 2.0 * w;
    let wb = (reach / (k - 1) as f64).floor() + 2.0 + rng.gen_range(0..4) as f64;
    let ca = strip_cover(&sa, &x, &in_a, rng.gen_range(0.0..w), w, k)?;
    let cb = strip_cover(&sb, &x, &in_b, rng.gen_range(0.0..wb), wb, k)?;
    let la = l.restrict(sa.clone(), &in_a)?;
    let lb = l.restrict(sb.clone(), &in_b)?;
    Ok(MergeFixture { a: ColoredCover::new(ca, la)?, b: ColoredCover::new(cb, lb)?, l })
}

/// Input to `product_refine`.
pub struct ProductFixture {
    pub name: &'static str,
    pub u: Cover,
    pub v: Cover,
    pub ex: Entourage,
    pub ey: Entourage,
    pub n: usize,
    pub m: usize,
}

/// Two-family interval cover of `k` integer points: blocks of `width` extended by `pad` on each side.
/// Families are disjoint when `2·pad < width`.
pub fn padded_intervals(space: Arc<Space>, width: usize, pad: usize) -> Result<Cover> {
    let k = space.len();
    let mut families = vec![Vec::new(), Vec::new()];
    let mut start = 0;
    let mut j = 0;
    while start < k {
        let lo = start.saturating_sub(pad);
        let hi = (start + width + pad).min(k);
        families[j % 2].push((lo as u32..hi as u32).collect::<Vec<_>>());
        start += width;
        j += 1;
    }
    Cover::from_families(space, families)
}

/// Fixed 1-D × 1-D and 1-D × 2-D inputs with appetite `E^{n+m+1}`.
pub fn product_fixtures() -> Result<Vec<ProductFixture>> {
    let mut out = Vec::new();
    let x = line(24)?;
    let y = line(18)?;
    let ex = Entourage::closed_radius(x.clone(), 1.0)?;
    let ey = Entourage::closed_radius(y.clone(), 1.0)?;
    out.push(ProductFixture {
        name: "line x line",
        u: padded_intervals(x.clone(), 8, 3)?,
        v: padded_intervals(y.clone(), 8, 3)?,
        ex: ex.clone(),
        ey,
        n: 1,
        m: 1,
    });
    // Three families of strips `[5j-6, 5j+6]` in a 2-D band: multiplicity 3, each closed 4-ball inside one set.
    let band = Arc::new(Space::grid(GridSpec::new(vec![0.0, 0.0], vec![23.0, 2.0], 1.0)?));
    let mut families = vec![Vec::new(), Vec::new(), Vec::new()];
    for j in 0..6i64 {
        let lo = 5 * j - 6;
        let hi = 5 * j + 6;
        let set: Vec<u32> = (0..band.len() as u32)
            .filter(|&p| {
                let x0 = band.coords(p as usize).expect("coordinates")[0] as i64;
                x0 >= lo && x0 <= hi
            })
            .collect();
        if !set.is_empty() {
            families[(j % 3) as usize].push(set);
        }
    }
    let v = Cover::from_families(band.clone(), families)?;
    let x = line(16)?;
    out.push(ProductFixture {
        name: "line x band",
        u: padded_intervals(x.clone(), 10, 4)?,
        v,
        ex: Entourage::closed_radius(x, 1.0)?,
        ey: Entourage::closed_radius(band, 1.0)?,
        n: 1,
        m: 2,
    });
    Ok(out)
}

/// Box cover of the `P_n` sample: cells of random width in `[3, 6]` grown by `pad > 1`.
pub fn pn_box_cover<R: Rng>(rng: &mut R, space: Arc<Space>, n: usize, extent: f64) -> Result<Cover> {
    let pad = rng.gen_range(1.05..1.6);
    let mut breaks: Vec<Vec<f64>> = Vec::with_capacity(n);
    for _ in 0..n {
        let mut b = vec![-rng.gen_range(0.0..3.0) - 0.5];
        while *b.last().unwrap() <= extent + 1.0 {
            let next = b.last().unwrap() + rng.gen_range(3.0..6.0);
            b.push(next);
        }
        breaks.push(b);
    }
    let counts: Vec<usize> = breaks.iter().map(|b| b.len() - 1).collect();
    let total: usize = counts.iter().product();
    let mut sets = Vec::with_capacity(total);
    for cell in 0..total {
        let mut idx = cell;
        let mut bounds = Vec::with_capacity(n);
        for (d, &c) in counts.iter().enumerate() {
            let i = idx % c;
            idx /= c;
            bounds.push((breaks[d][i] - pad, breaks[d][i + 1] + pad));
        }
        let set: Vec<u32> = (0..space.len() as u32)
            .filter(|&p| {
                let x = space.coords(p as usize).expect("coordinates");
                x.iter().zip(&bounds).all(|(v, (lo, hi))| v >= lo && v < hi)
            })
            .collect();
        if !set.is_empty() {
            sets.push(set);
        }
    }
    Cover::new(space, sets, None)
}

/// Random block decomposition of an integer line: at most `max_blocks` blocks of
/// dimension at most `max_dim`, possibly with one empty block of dimension 0.
pub fn random_decomposition<R: Rng>(rng: &mut R, max_blocks: usize, max_dim: usize) -> Result<Decomposition> {
    let blocks = rng.gen_range(1..=max_blocks);
    let empty = blocks > 1 && rng.gen_bool(0.2);
    let filled = blocks - empty as usize;
    let points = filled + rng.gen_range(0..=4);
    let mut owner: Vec<usize> = (0..filled).chain((filled..points).map(|_| rng.gen_range(0..filled))).collect();
    owner.shuffle(rng);
    let mut parts = vec![Vec::new(); blocks];
    for (p, &b) in owner.iter().enumerate() {
        parts[b].push(p as u32);
    }
    let mut dims: Vec<usize> = (0..filled).map(|_| rng.gen_range(1..=max_dim)).collect();
    if empty {
        dims.push(0);
    }
    Decomposition::new(line(points)?, parts, dims, None, None)
}

fn random_entry<R: Rng>(rng: &mut R) -> Complex64 {
    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

/// Block-sparse operator: each block pair is nonzero with probability `density`.
pub fn random_operator<R: Rng>(rng: &mut R, d: &Arc<Decomposition>, density: f64) -> Result<BlockOperator> {
    let n = d.total_dim();
    let mut m = DMatrix::zeros(n, n);
    for a in 0..d.block_count() {
        for b in 0..d.block_count() {
            if rng.gen_bool(density) {
                for i in d.range(a) {
                    for j in d.range(b) {
                        m[(i, j)] = random_entry(rng);
                    }
                }
            }
        }
    }
    BlockOperator::new(m, d.clone())
}

/// Vector supported on a random set of blocks.
pub fn random_vector<R: Rng>(rng: &mut R, d: &Decomposition, density: f64) -> DVector<Complex64> {
    let mut v = DVector::zeros(d.total_dim());
    for b in 0..d.block_count() {
        if rng.gen_bool(density) {
            for i in d.range(b) {
                v[i] = random_entry(rng);
            }
        }
    }
    v
}

/// Target decomposition, block map and block-respecting isometry for `induce_adjoint`.
///
/// Target block `t` has room for every source block mapped to it; `φ` sends the basis
/// of source block `b` to distinct basis vectors of target block `f(b)`, with random phases.
pub struct InduceFixture {
    pub target: Arc<Decomposition>,
    pub map: Vec<usize>,
    pub phi: DMatrix<Complex64>,
}

pub fn induce_fixture<R: Rng>(rng: &mut R, src: &Decomposition) -> Result<InduceFixture> {
    let targets = rng.gen_range(1..=src.block_count());
    let map: Vec<usize> = (0..src.block_count()).map(|_| rng.gen_range(0..targets)).collect();
    let mut dims = vec![0usize; targets];
    for (b, &t) in map.iter().enumerate() {
        dims[t] += src.dims()[b];
    }
    // Spare dimensions keep φ a proper partial isometry.
    for d in dims.iter_mut() {
        *d += rng.gen_range(0..=1);
    }
    let dims: Vec<usize> = dims.into_iter().map(|d| d.max(1)).collect();
    let blocks = (0..targets as u32).map(|t| vec![t]).collect();
    let target = Arc::new(Decomposition::new(line(targets)?, blocks, dims, None, None)?);
    let mut phi = DMatrix::zeros(target.total_dim(), src.total_dim());
    let mut next: Vec<usize> = (0..targets).map(|t| target.range(t).start).collect();
    for (b, &t) in map.iter().enumerate() {
        for j in src.range(b) {
            let theta: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            phi[(next[t], j)] = Complex64::from_polar(1.0, theta);
            next[t] += 1;
        }
    }
    Ok(InduceFixture { target, map, phi })
}
