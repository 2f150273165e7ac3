//! Cover-to-cover constructions: interiors, expansion, colorization, unions and products.

use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use rayon::prelude::*;

use crate::certificate::{num, Certificate};
use crate::cover::{is_sorted_subset, sorted_difference, sorted_intersection, sorted_union, Cover};
use crate::entourage::Entourage;
use crate::error::{Error, Result};
use crate::space::{Backing, Space};

/// A cover with families together with the entourage `L` separating each family.
#[derive(Debug, Clone)]
pub struct ColoredCover {
    cover: Cover,
    disjointness: Entourage,
}

impl ColoredCover {
    /// Checks that every family is `L`-disjoint.
    pub fn new(cover: Cover, l: Entourage) -> Result<Self> {
        if cover.families().is_none() {
            return Err(Error::invalid("a colored cover needs families"));
        }
        if let Some(w) = cover.disjointness_witness(Some(&l))? {
            return Err(Error::contract("families are not L-disjoint", w.to_string()));
        }
        Ok(ColoredCover { cover, disjointness: l })
    }

    pub fn cover(&self) -> &Cover {
        &self.cover
    }

    pub fn disjointness(&self) -> &Entourage {
        &self.disjointness
    }

    pub fn into_cover(self) -> Cover {
        self.cover
    }
}

/// `Int_E(U) = {x | E(x) ⊆ U}`.
pub fn interior(u: &[u32], e: &Entourage) -> Vec<u32> {
    let diagonal = e.contains_diagonal();
    interior_inner(u, e, diagonal)
}

fn interior_inner(u: &[u32], e: &Entourage, diagonal: bool) -> Vec<u32> {
    let test = |x: u32| is_sorted_subset(&e.point_image(x as usize), u);
    if diagonal {
        u.iter().copied().filter(|&x| test(x)).collect()
    } else {
        (0..e.space().len() as u32).filter(|&x| test(x)).collect()
    }
}

/// Memoized powers `L^k` of one entourage.
pub struct Powers {
    base: Entourage,
    cache: Vec<Entourage>,
}

impl Powers {
    pub fn new(base: &Entourage) -> Result<Self> {
        let base = base.materialize()?;
        Ok(Powers { cache: vec![Entourage::diagonal(base.space().clone()), base.clone()], base })
    }

    pub fn get(&mut self, k: usize) -> Result<&Entourage> {
        while self.cache.len() <= k {
            let next = self.cache.last().expect("non-empty").compose(&self.base)?;
            self.cache.push(next);
        }
        Ok(&self.cache[k])
    }
}

fn require_symmetric_reflexive(l: &Entourage, what: &str) -> Result<()> {
    if !l.contains_diagonal() {
        let x = (0..l.space().len()).find(|&x| !l.contains(x, x)).unwrap_or(0);
        return Err(Error::contract(format!("{what} must contain the diagonal"), format!("point {x}")));
    }
    let inv = l.inverse()?;
    if let Some((x, y)) = l.subset_witness(&inv)? {
        return Err(Error::contract(format!("{what} must be symmetric"), format!("pair ({x}, {y})")));
    }
    Ok(())
}

/// Distinct set contents of a cover with, per point, the sorted ids of distinct sets containing it.
fn distinct_sets(c: &Cover) -> (Vec<Vec<u32>>, Vec<Vec<usize>>) {
    let mut ids: HashMap<&[u32], usize> = HashMap::new();
    let mut unique: Vec<Vec<u32>> = Vec::new();
    let mut map = Vec::with_capacity(c.len());
    for s in c.sets() {
        let id = *ids.entry(s.as_slice()).or_insert_with(|| {
            unique.push(s.clone());
            unique.len() - 1
        });
        map.push(id);
    }
    let per_point = c
        .incidence()
        .iter()
        .map(|inc| {
            let mut v: Vec<usize> = inc.iter().map(|&s| map[s as usize]).collect();
            v.sort_unstable();
            v.dedup();
            v
        })
        .collect();
    (unique, per_point)
}

/// All `k`-element subsets of a sorted slice.
fn subsets_of_size(items: &[usize], k: usize, out: &mut Vec<Vec<usize>>) {
    fn rec(items: &[usize], k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..items.len() {
            if items.len() - i < k - cur.len() {
                break;
            }
            cur.push(items[i]);
            rec(items, k, i + 1, cur, out);
            cur.pop();
        }
    }
    rec(items, k, 0, &mut Vec::new(), out);
}

fn intersect_all(sets: &[Vec<u32>], ids: &[usize]) -> Vec<u32> {
    let mut acc = sets[ids[0]].clone();
    for &i in &ids[1..] {
        acc = sorted_intersection(&acc, &sets[i]);
    }
    acc
}

fn dedup_sets(sets: Vec<Vec<u32>>) -> Vec<Vec<u32>> {
    let set: BTreeSet<Vec<u32>> = sets.into_iter().filter(|s| !s.is_empty()).collect();
    set.into_iter().collect()
}

fn union_all<'a>(n: usize, sets: impl IntoIterator<Item = &'a Vec<u32>>) -> Vec<u32> {
    let mut mark = vec![false; n];
    for s in sets {
        for &i in s {
            mark[i as usize] = true;
        }
    }
    (0..n as u32).filter(|&i| mark[i as usize]).collect()
}

/// Point-to-set ownership for one disjoint family.
fn owners(n: usize, family: &[&Vec<u32>]) -> Vec<usize> {
    let mut own = vec![usize::MAX; n];
    for (k, s) in family.iter().enumerate() {
        for &p in s.iter() {
            own[p as usize] = k;
        }
    }
    own
}

/// `Int_{L^{n+2-i}}` colorization into `n+1` `L`-disjoint families.
///
/// `U_i` ranges over intersections of `i` distinct covering sets (only those with a
/// common point), `S_i = ⋃_{U∈U_i} Int_{L^{n+2-i}}(U)` with `S_{n+2} = ∅`, and family
/// `i` is `{Int_{L^{n+2-i}}(U) \ S_{i+1} | U ∈ U_i}` with empty sets dropped.
pub fn colorize(c: &Cover, l: &Entourage, n: usize) -> Result<(ColoredCover, Certificate)> {
    const ANCHOR: &str = "colorize";
    let space = c.space().clone();
    if !l.space().same_as(&space) {
        return Err(Error::invalid("entourage and cover live over different spaces"));
    }
    require_symmetric_reflexive(l, "L")?;
    if let Some((p, m)) = c.multiplicity_witness() {
        if m > n + 1 {
            return Err(Error::contract(
                format!("multiplicity {m} exceeds n+1 = {}", n + 1),
                format!("point {p}"),
            ));
        }
    }
    let mut powers = Powers::new(l)?;
    if let Some(x) = c.appetite_witness(powers.get(n + 1)?)? {
        return Err(Error::contract(
            format!("cover lacks appetite L^{}", n + 1),
            format!("uncovered point {x}"),
        ));
    }
    let npts = space.len();
    let (unique, per_point) = distinct_sets(c);
    // U_i for i = 1..=n+1
    let mut layers: Vec<Vec<Vec<u32>>> = vec![Vec::new(); n + 2];
    for i in 1..=n + 1 {
        let mut keys: BTreeSet<Vec<usize>> = BTreeSet::new();
        let mut buf = Vec::new();
        for ids in &per_point {
            if ids.len() >= i {
                buf.clear();
                subsets_of_size(ids, i, &mut buf);
                keys.extend(buf.drain(..));
            }
        }
        let inters: Vec<Vec<u32>> = keys.iter().map(|k| intersect_all(&unique, k)).collect();
        layers[i] = dedup_sets(inters);
    }
    let mut interiors: Vec<Vec<Vec<u32>>> = vec![Vec::new(); n + 2];
    for i in 1..=n + 1 {
        let e = powers.get(n + 2 - i)?.clone();
        interiors[i] = layers[i].par_iter().map(|u| interior_inner(u, &e, true)).collect();
    }
    let mut families: Vec<Vec<Vec<u32>>> = Vec::with_capacity(n + 1);
    for i in 1..=n + 1 {
        let s_next = if i < n + 1 { union_all(npts, &interiors[i + 1]) } else { Vec::new() };
        let fam = interiors[i].iter().map(|int| sorted_difference(int, &s_next)).collect();
        families.push(dedup_sets(fam));
    }
    let cover = Cover::from_families(space.clone(), families)
        .map_err(|e| Error::Internal(format!("colorized sets do not form a valid cover: {e}")))?;
    let mut cert = Certificate::new();
    let dis = cover.disjointness_witness(Some(l))?;
    cert.holds(ANCHOR, "families L-disjoint", dis.is_none(), dis.map(|w| w.to_string()));
    cert.push(ANCHOR, "family count", (n + 1) as u64, cover.family_count() as u64, cover.family_count() == n + 1, None);
    cert.holds(ANCHOR, "covers space", true, None);
    let refines = cover.refines(c);
    cert.holds(ANCHOR, "refines input", refines, None);
    cert.at_most(ANCHOR, "multiplicity", (n + 1) as f64, cover.multiplicity() as f64, None);
    if !cert.all_pass() {
        let bad: Vec<String> = cert.failures().map(|g| g.name.clone()).collect();
        return Err(Error::Internal(format!("colorize guarantees failed: {}", bad.join(", "))));
    }
    Ok((ColoredCover { cover, disjointness: l.clone() }, cert))
}

/// The cover `{L[U]}` with the family structure of `c`.
///
/// Requires every family of `c` to be `L²`-disjoint; the result has appetite `L`
/// and `Δ_{U_L} ⊆ L Δ_U L⁻¹`.
pub fn expand(c: &Cover, l: &Entourage) -> Result<(ColoredCover, Certificate)> {
    const ANCHOR: &str = "expand";
    let space = c.space().clone();
    if c.families().is_none() {
        return Err(Error::invalid("expand needs a cover with families"));
    }
    if !l.space().same_as(&space) {
        return Err(Error::invalid("entourage and cover live over different spaces"));
    }
    require_symmetric_reflexive(l, "L")?;
    let l2 = l.compose(l)?;
    if let Some(w) = c.disjointness_witness(Some(&l2))? {
        return Err(Error::contract("families are not L²-disjoint", w.to_string()));
    }
    let sets: Vec<Vec<u32>> = c.sets().par_iter().map(|u| l.image(u)).collect();
    let families = c.families().map(|f| f.to_vec());
    let cover = Cover::new(space.clone(), sets, families)
        .map_err(|e| Error::Internal(format!("expanded sets are not a valid cover: {e}")))?;
    let mut cert = Certificate::new();
    cert.holds(ANCHOR, "families disjoint", true, None);
    let app = cover.appetite_witness(l)?;
    cert.holds(ANCHOR, "appetite L", app.is_none(), app.map(|x| format!("point {x}")));
    let bound = l.compose(&c.cover_entourage()?)?.compose(&l.inverse()?)?;
    let sub = cover.cover_entourage()?.subset_witness(&bound)?;
    cert.holds(
        ANCHOR,
        "cover entourage within L.D.L^-1",
        sub.is_none(),
        sub.map(|(x, y)| format!("pair ({x}, {y})")),
    );
    Ok((ColoredCover { cover, disjointness: Entourage::diagonal(space) }, cert))
}

/// Indices of `space` inside `parent` (identity when they are the same space).
fn embedding(space: &Arc<Space>, parent: &Arc<Space>) -> Result<Vec<u32>> {
    if space.same_as(parent) {
        return Ok((0..parent.len() as u32).collect());
    }
    if let Backing::Subspace { parent: p, indices } = space.backing() {
        if p.same_as(parent) {
            return Ok(indices.clone());
        }
    }
    Err(Error::invalid("cover space is neither the entourage space nor a subspace of it"))
}

fn nested_image(chain: &[&Entourage], set: &[u32]) -> Vec<u32> {
    let mut cur = set.to_vec();
    for e in chain.iter().rev() {
        cur = e.image(&cur);
    }
    cur
}

/// Union construction `W_i = {N_L(V, U_i) | V ∈ V_i} ∪ {U ∈ U_i | L ∩ U×V = ∅ ∀V ∈ V_i}`.
///
/// `a` covers a subspace `A` and `b` a subspace `B` of the space of `l`; the result
/// covers `A ∪ B` (as a subspace, or the whole space when the union is everything).
pub fn merge_union(a: &ColoredCover, b: &ColoredCover, l: &Entourage) -> Result<(ColoredCover, Certificate)> {
    const ANCHOR: &str = "union";
    let x = l.space().clone();
    let n = x.len();
    require_symmetric_reflexive(l, "L")?;
    let emb_a = embedding(a.cover().space(), &x)?;
    let emb_b = embedding(b.cover().space(), &x)?;
    let lift = |c: &Cover, emb: &[u32]| -> Vec<Vec<Vec<u32>>> {
        c.families()
            .unwrap_or(&[])
            .iter()
            .map(|fam| {
                fam.iter()
                    .map(|&s| {
                        let mut v: Vec<u32> = c.set(s).iter().map(|&p| emb[p as usize]).collect();
                        v.sort_unstable();
                        v
                    })
                    .collect()
            })
            .collect()
    };
    let mut fa = lift(a.cover(), &emb_a);
    let mut fb = lift(b.cover(), &emb_b);
    let (ka, kb) = (fa.len(), fb.len());
    if ka != kb {
        let a_empty = a.cover().is_empty();
        let b_empty = b.cover().is_empty();
        if !(a_empty || b_empty) {
            return Err(Error::invalid(format!("family counts differ: {ka} vs {kb}")));
        }
    }
    let families = ka.max(kb);
    fa.resize(families, Vec::new());
    fb.resize(families, Vec::new());

    // Preconditions, checked over the ambient space.
    for (i, fam) in fa.iter().enumerate() {
        let own = owners(n, &fam.iter().collect::<Vec<_>>());
        for (k, u) in fam.iter().enumerate() {
            for &p in u {
                for q in l.successors(p as usize) {
                    let o = own[q as usize];
                    if o != usize::MAX && o != k {
                        return Err(Error::contract(
                            "cover of A is not L-disjoint",
                            format!("family {i} sets {k} and {o} via pair ({p}, {q})"),
                        ));
                    }
                }
            }
        }
    }
    let all_a: Vec<Vec<u32>> = fa.iter().flatten().cloned().collect();
    let delta_a = {
        let mut pairs = Vec::new();
        for u in &all_a {
            for &p in u {
                for &q in u {
                    pairs.push((p, q));
                }
            }
        }
        let d = Entourage::from_pairs(x.clone(), pairs)?;
        d.union(&Entourage::diagonal(x.clone()))?
    };
    let chain = [l, &delta_a, l, &delta_a, l];
    for (i, fam) in fb.iter().enumerate() {
        let own = owners(n, &fam.iter().collect::<Vec<_>>());
        for (k, v) in fam.iter().enumerate() {
            let reach = nested_image(&chain, v);
            for p in reach {
                let o = own[p as usize];
                if o != usize::MAX && o != k {
                    return Err(Error::contract(
                        "cover of B is not (L.D_A.L.D_A.L)-disjoint",
                        format!("family {i} sets {o} and {k} via point {p}"),
                    ));
                }
            }
        }
    }

    let mut out_families: Vec<Vec<Vec<u32>>> = Vec::with_capacity(families);
    for i in 0..families {
        let vs = &fb[i];
        let own_v = owners(n, &vs.iter().collect::<Vec<_>>());
        let mut grown: Vec<Vec<u32>> = vs.clone();
        let mut kept: Vec<Vec<u32>> = Vec::new();
        for (k, u) in fa[i].iter().enumerate() {
            let mut hit: BTreeSet<usize> = BTreeSet::new();
            for &p in u {
                for q in l.successors(p as usize) {
                    let o = own_v[q as usize];
                    if o != usize::MAX {
                        hit.insert(o);
                    }
                }
            }
            match hit.len() {
                0 => kept.push(u.clone()),
                1 => {
                    let v = *hit.iter().next().expect("one element");
                    grown[v] = sorted_union(&grown[v], u);
                }
                _ => {
                    return Err(Error::contract(
                        "a set of A meets two sets of one family of B",
                        format!("family {i} set {k} meets sets {:?}", hit),
                    ))
                }
            }
        }
        grown.extend(kept);
        out_families.push(grown.into_iter().filter(|s| !s.is_empty()).collect());
    }

    let domain = sorted_union(&union_all(n, &all_a), &union_all(n, fb.iter().flatten()));
    let (space, l_out, relabel): (Arc<Space>, Entourage, Vec<u32>) = if domain.len() == n {
        (x.clone(), l.clone(), (0..n as u32).collect())
    } else {
        let sub = Arc::new(Space::subspace(x.clone(), domain.clone())?);
        let restricted = l.restrict(sub.clone(), &domain)?;
        let mut pos = vec![u32::MAX; n];
        for (k, &p) in domain.iter().enumerate() {
            pos[p as usize] = k as u32;
        }
        (sub, restricted, pos)
    };
    let relabeled: Vec<Vec<Vec<u32>>> = out_families
        .iter()
        .map(|fam| fam.iter().map(|s| s.iter().map(|&p| relabel[p as usize]).collect()).collect())
        .collect();
    let cover = Cover::from_families(space.clone(), relabeled)
        .map_err(|e| Error::Internal(format!("union sets are not a valid cover: {e}")))?;

    let mut cert = Certificate::new();
    let dis = cover.disjointness_witness(Some(&l_out))?;
    cert.holds(ANCHOR, "families L-disjoint", dis.is_none(), dis.map(|w| w.to_string()));
    cert.holds(ANCHOR, "covers A union B", true, None);
    cert.push(ANCHOR, "family count", families as u64, cover.family_count() as u64, cover.family_count() == families, None);
    // Δ_W ⊆ (Δ_A L Δ_B L Δ_A) ∪ Δ_A, tested column by column in the ambient space.
    let delta_b = {
        let mut pairs = Vec::new();
        for v in fb.iter().flatten() {
            for &p in v {
                for &q in v {
                    pairs.push((p, q));
                }
            }
        }
        Entourage::from_pairs(x.clone(), pairs)?.union(&Entourage::diagonal(x.clone()))?
    };
    let bound_chain = [&delta_a, l, &delta_b, l, &delta_a];
    let mut bounded_witness = None;
    'outer: for fam in &out_families {
        for w in fam {
            for &y in w {
                let reach = sorted_union(&nested_image(&bound_chain, &[y]), &delta_a.image(&[y]));
                if let Some(&xw) = w.iter().find(|&&p| reach.binary_search(&p).is_err()) {
                    bounded_witness = Some(format!("pair ({xw}, {y})"));
                    break 'outer;
                }
            }
        }
    }
    cert.holds(ANCHOR, "uniformly bounded by D_A.L.D_B.L.D_A", bounded_witness.is_none(), bounded_witness);
    Ok((ColoredCover { cover, disjointness: l_out }, cert))
}

/// Result of [`product_refine`], with the product space it lives on.
pub struct ProductCover {
    pub cover: ColoredCover,
    pub space: Arc<Space>,
    pub entourage: Entourage,
}

/// Multiplicity-improving refinement of the product of two covers.
///
/// `A_k` ranges over products `U₁∩…∩U_p × V₁∩…∩V_q` with `p, q ≥ 1`, `p+q = k`;
/// with `E = E_X × E_Y`, `B_k = ⋃_{A∈A_k} Int_{E^{n+m+3-k}}(A)` and family `k` is
/// `{Int_{E^{n+m+3-k}}(A) \ B_{k+1}}` for `k = 2..=n+m+2`.
pub fn product_refine(
    cu: &Cover,
    cv: &Cover,
    ex: &Entourage,
    ey: &Entourage,
    n: usize,
    m: usize,
) -> Result<(ProductCover, Certificate)> {
    const ANCHOR: &str = "product";
    let (xs, ys) = (cu.space().clone(), cv.space().clone());
    if !ex.space().same_as(&xs) || !ey.space().same_as(&ys) {
        return Err(Error::invalid("factor entourages must live over the factor spaces"));
    }
    require_symmetric_reflexive(ex, "E_X")?;
    require_symmetric_reflexive(ey, "E_Y")?;
    for (c, bound, name) in [(cu, n + 1, "first"), (cv, m + 1, "second")] {
        if let Some((p, mult)) = c.multiplicity_witness() {
            if mult > bound {
                return Err(Error::contract(
                    format!("{name} cover has multiplicity {mult} > {bound}"),
                    format!("point {p}"),
                ));
            }
        }
    }
    let top = n + m + 1;
    let mut px = Powers::new(ex)?;
    let mut py = Powers::new(ey)?;
    if let Some(p) = cu.appetite_witness(px.get(top)?)? {
        return Err(Error::contract(format!("first cover lacks appetite E_X^{top}"), format!("point {p}")));
    }
    if let Some(p) = cv.appetite_witness(py.get(top)?)? {
        return Err(Error::contract(format!("second cover lacks appetite E_Y^{top}"), format!("point {p}")));
    }
    let prod = Arc::new(Space::product(xs.clone(), ys.clone())?);
    let (nx, ny) = (xs.len(), ys.len());
    let (uu, per_x) = distinct_sets(cu);
    let (vv, per_y) = distinct_sets(cv);

    // Distinct (P, Q) index pairs per k, collected from points of the product.
    let kmax = n + m + 2;
    let mut keys: Vec<BTreeSet<(Vec<usize>, Vec<usize>)>> = vec![BTreeSet::new(); kmax + 2];
    let mut subs_x: HashMap<usize, Vec<Vec<Vec<usize>>>> = HashMap::new();
    let subsets_by_size = |ids: &[usize]| -> Vec<Vec<Vec<usize>>> {
        (0..=ids.len())
            .map(|s| {
                let mut out = Vec::new();
                if s > 0 {
                    subsets_of_size(ids, s, &mut out);
                }
                out
            })
            .collect()
    };
    let sy: Vec<Vec<Vec<Vec<usize>>>> = per_y.iter().map(|ids| subsets_by_size(ids)).collect();
    for (xi, ids_x) in per_x.iter().enumerate() {
        let sx = subs_x.entry(xi).or_insert_with(|| subsets_by_size(ids_x));
        for sy_y in &sy {
            for p in 1..sx.len() {
                for q in 1..sy_y.len() {
                    let k = p + q;
                    if k > kmax {
                        continue;
                    }
                    for ps in &sx[p] {
                        for qs in &sy_y[q] {
                            keys[k].insert((ps.clone(), qs.clone()));
                        }
                    }
                }
            }
        }
        subs_x.remove(&xi);
    }

    let to_prod = |a: &[u32], b: &[u32]| -> Vec<u32> {
        let mut out = Vec::with_capacity(a.len() * b.len());
        for &x in a {
            for &y in b {
                out.push(x * ny as u32 + y);
            }
        }
        out
    };
    // Interiors of products are products of interiors for E = E_X × E_Y.
    let mut ints: Vec<Vec<Vec<u32>>> = vec![Vec::new(); kmax + 2];
    for k in 2..=kmax {
        let j = n + m + 3 - k;
        let ejx = px.get(j)?.clone();
        let ejy = py.get(j)?.clone();
        let mut cache_x: HashMap<Vec<usize>, Vec<u32>> = HashMap::new();
        let mut cache_y: HashMap<Vec<usize>, Vec<u32>> = HashMap::new();
        let mut sets = Vec::with_capacity(keys[k].len());
        for (ps, qs) in &keys[k] {
            let ix = cache_x
                .entry(ps.clone())
                .or_insert_with(|| interior_inner(&intersect_all(&uu, ps), &ejx, true))
                .clone();
            let iy = cache_y
                .entry(qs.clone())
                .or_insert_with(|| interior_inner(&intersect_all(&vv, qs), &ejy, true))
                .clone();
            let mut s = to_prod(&ix, &iy);
            s.sort_unstable();
            sets.push(s);
        }
        ints[k] = sets;
    }
    let np = nx * ny;
    let mut families = Vec::with_capacity(top);
    for k in 2..=kmax {
        let b_next = if k < kmax { union_all(np, &ints[k + 1]) } else { Vec::new() };
        let fam = ints[k].iter().map(|s| sorted_difference(s, &b_next)).collect();
        families.push(dedup_sets(fam));
    }
    let cover = Cover::from_families(prod.clone(), families)
        .map_err(|e| Error::Internal(format!("product sets are not a valid cover: {e}")))?;
    let e = ex.product(ey, prod.clone())?;
    let mut cert = Certificate::new();
    cert.push(ANCHOR, "family count", top as u64, cover.family_count() as u64, cover.family_count() == top, None);
    let dis = cover.disjointness_witness(Some(&e))?;
    cert.holds(ANCHOR, "families E-disjoint", dis.is_none(), dis.map(|w| w.to_string()));
    cert.holds(ANCHOR, "covers product", true, None);
    let mult = cover.multiplicity();
    cert.at_most(ANCHOR, "multiplicity", top as f64, mult as f64, None);
    cert.push(
        ANCHOR,
        "naive product multiplicity",
        num(((n + 1) * (m + 1)) as f64),
        num(mult as f64),
        true,
        None,
    );
    Ok((
        ProductCover { cover: ColoredCover { cover, disjointness: e.clone() }, space: prod, entourage: e },
        cert,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::GridSpec;

    fn line(lo: f64, hi: f64) -> Arc<Space> {
        Arc::new(Space::grid(GridSpec::cube(1, lo, hi, 1.0).unwrap()))
    }

    #[test]
    fn interior_of_band() {
        let s = line(0.0, 10.0);
        let e = Entourage::radius(s.clone(), 2.0).unwrap();
        let all: Vec<u32> = (0..11).collect();
        assert_eq!(interior(&all, &e), all);
        let u: Vec<u32> = (2..=8).collect();
        assert_eq!(interior(&u, &e), (3..=7).collect::<Vec<u32>>());
        assert_eq!(interior(&u, &Entourage::diagonal(s)), u);
    }

    #[test]
    fn colorize_whole_space() {
        let s = line(0.0, 5.0);
        let c = Cover::new(s.clone(), vec![(0..6).collect()], None).unwrap();
        let l = Entourage::radius(s, 1.5).unwrap();
        let (cc, cert) = colorize(&c, &l, 0).unwrap();
        assert!(cert.all_pass());
        assert_eq!(cc.cover().sets(), &[(0..6).collect::<Vec<u32>>()]);
    }

    #[test]
    fn colorize_two_intervals() {
        let s = line(0.0, 20.0);
        let l = Entourage::radius(s.clone(), 1.5).unwrap();
        let c = Cover::new(s.clone(), vec![(0..=12).collect(), (8..=20).collect()], None).unwrap();
        let (cc, cert) = colorize(&c, &l, 1).unwrap();
        assert!(cert.all_pass(), "{cert:?}");
        assert_eq!(cc.cover().family_count(), 2);
    }

    #[test]
    fn colorize_rejects_missing_appetite() {
        let s = line(0.0, 9.0);
        let l = Entourage::radius(s.clone(), 1.5).unwrap();
        let c = Cover::new(s, vec![(0..=5).collect(), (5..=9).collect()], None).unwrap();
        assert!(matches!(colorize(&c, &l, 1), Err(Error::ContractViolation { .. })));
    }

    #[test]
    fn expand_singletons_with_diagonal() {
        let s = line(0.0, 4.0);
        let c = Cover::new(s.clone(), (0..5).map(|i| vec![i]).collect(), Some(vec![(0..5).collect()])).unwrap();
        let (out, cert) = expand(&c, &Entourage::diagonal(s)).unwrap();
        assert!(cert.all_pass());
        assert_eq!(out.cover().sets(), c.sets());
    }

    #[test]
    fn expand_blocks() {
        // blocks [4k, 4k+1] alternating colors; L = Δ_1.5 (neighbors), L² reaches 2 steps.
        let s = line(0.0, 39.0);
        let l = Entourage::radius(s.clone(), 1.5).unwrap();
        let mut fams = [Vec::new(), Vec::new()];
        for k in 0..10u32 {
            fams[(k % 2) as usize].push(vec![4 * k, 4 * k + 1]);
        }
        // gaps points 4k+2, 4k+3 are uncovered, so expand a cover of the block points only
        let pts: Vec<u32> = (0..10).flat_map(|k| [4 * k, 4 * k + 1]).collect();
        let sub = Arc::new(Space::subspace(s.clone(), pts.clone()).unwrap());
        let pos = |p: u32| pts.iter().position(|&q| q == p).unwrap() as u32;
        let fams_sub = fams
            .iter()
            .map(|f| f.iter().map(|b| b.iter().map(|&p| pos(p)).collect()).collect())
            .collect();
        let c = Cover::from_families(sub.clone(), fams_sub).unwrap();
        let lsub = l.restrict(sub.clone(), &pts).unwrap();
        let (out, cert) = expand(&c, &lsub).unwrap();
        assert!(cert.all_pass(), "{cert:?}");
        assert!(out.cover().has_appetite(&lsub).unwrap());
    }

    #[test]
    fn expand_rejects_close_families() {
        let s = line(0.0, 3.0);
        let c = Cover::new(s.clone(), vec![vec![0, 1], vec![2, 3]], Some(vec![vec![0, 1]])).unwrap();
        let l = Entourage::radius(s, 1.5).unwrap();
        assert!(matches!(expand(&c, &l), Err(Error::ContractViolation { .. })));
    }

    #[test]
    fn product_of_singletons() {
        let x = line(0.0, 3.0);
        let y = line(0.0, 2.0);
        let cu = Cover::new(x.clone(), (0..4).map(|i| vec![i]).collect(), None).unwrap();
        let cv = Cover::new(y.clone(), (0..3).map(|i| vec![i]).collect(), None).unwrap();
        let (pc, cert) =
            product_refine(&cu, &cv, &Entourage::diagonal(x), &Entourage::diagonal(y), 0, 0).unwrap();
        assert!(cert.all_pass());
        assert_eq!(pc.cover.cover().family_count(), 1);
        assert_eq!(pc.cover.cover().len(), 12);
        assert!(pc.cover.cover().sets().iter().all(|s| s.len() == 1));
    }
}
