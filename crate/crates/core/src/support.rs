//! Block decompositions, projection-valued measures and operator supports.
//!
//! A [`Decomposition`] partitions a space into blocks and assigns each block a
//! finite Hilbert dimension. Vectors and operators live on the direct sum; their
//! supports are computed blockwise against a numerical zero threshold.

use std::collections::BTreeSet;
use std::fmt;
use std::ops::Range;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::certificate::{num, Certificate};
use crate::cover::{sorted_union, Cover};
use crate::entourage::Entourage;
use crate::error::{Error, Result};
use crate::space::Space;

/// Default cutoff below which a block norm counts as zero.
pub const ZERO_TOL: f64 = 1e-12;

const ANCHOR: &str = "support-calculus";

/// Partition of a space into blocks with per-block Hilbert dimensions.
#[derive(Debug, Clone)]
pub struct Decomposition {
    space: Arc<Space>,
    blocks: Vec<Vec<u32>>,
    names: Vec<String>,
    dims: Vec<usize>,
    offsets: Vec<usize>,
    block_of: Vec<usize>,
}

impl Decomposition {
    /// Validates the partition and the dimension rule; with `bound`, every block
    /// must lie in one `bound`-neighbourhood (`Δ_U ⊆ bound`).
    pub fn new(
        space: Arc<Space>,
        blocks: Vec<Vec<u32>>,
        dims: Vec<usize>,
        names: Option<Vec<String>>,
        bound: Option<&Entourage>,
    ) -> Result<Self> {
        let n = space.len();
        if dims.len() != blocks.len() {
            return Err(Error::invalid(format!("{} dims for {} blocks", dims.len(), blocks.len())));
        }
        let names = match names {
            Some(v) if v.len() != blocks.len() => {
                return Err(Error::invalid(format!("{} names for {} blocks", v.len(), blocks.len())))
            }
            Some(v) => v,
            None => (0..blocks.len()).map(|b| format!("b{b}")).collect(),
        };
        let mut block_of = vec![usize::MAX; n];
        let mut blocks = blocks;
        for (b, block) in blocks.iter_mut().enumerate() {
            block.sort_unstable();
            block.dedup();
            for &x in block.iter() {
                let x = x as usize;
                if x >= n {
                    return Err(Error::invalid(format!("block {b} has index {x} outside {n} points")));
                }
                if block_of[x] != usize::MAX {
                    return Err(Error::invalid(format!("point {x} lies in blocks {} and {b}", block_of[x])));
                }
                block_of[x] = b;
            }
            if (dims[b] == 0) != block.is_empty() {
                return Err(Error::invalid(format!(
                    "block {b} has {} points and dimension {}",
                    block.len(),
                    dims[b]
                )));
            }
        }
        if let Some(x) = block_of.iter().position(|&b| b == usize::MAX) {
            return Err(Error::invalid(format!("point {x} lies in no block")));
        }
        let mut offsets = Vec::with_capacity(blocks.len() + 1);
        let mut acc = 0;
        offsets.push(0);
        for &d in &dims {
            acc += d;
            offsets.push(acc);
        }
        let dec = Decomposition { space, blocks, names, dims, offsets, block_of };
        if let Some(e) = bound {
            let delta = dec.block_cover()?.cover_entourage()?;
            if let Some((x, y)) = delta.subset_witness(e)? {
                return Err(Error::contract(
                    "blocks are not bounded by the declared entourage",
                    format!("({x},{y}) in blocks {}", dec.block_of[x as usize]),
                ));
            }
        }
        Ok(dec)
    }

    /// One block per point, each of dimension `dim`.
    pub fn singletons(space: Arc<Space>, dim: usize) -> Result<Self> {
        let n = space.len();
        let blocks = (0..n as u32).map(|x| vec![x]).collect();
        Self::new(space, blocks, vec![dim; n], None, None)
    }

    pub fn space(&self) -> &Arc<Space> {
        &self.space
    }

    pub fn blocks(&self) -> &[Vec<u32>] {
        &self.blocks
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn total_dim(&self) -> usize {
        *self.offsets.last().unwrap_or(&0)
    }

    /// Matrix index range of block `b`.
    pub fn range(&self, b: usize) -> Range<usize> {
        self.offsets[b]..self.offsets[b + 1]
    }

    pub fn block_of(&self, x: usize) -> usize {
        self.block_of[x]
    }

    /// The blocks as a cover of the space (empty blocks dropped).
    pub fn block_cover(&self) -> Result<Cover> {
        let sets = self.blocks.iter().filter(|b| !b.is_empty()).cloned().collect();
        Cover::new(self.space.clone(), sets, None)
    }

    /// Blocks as points, at Hausdorff distance; empty blocks sit at the space diameter.
    pub fn quotient_space(&self) -> Result<Arc<Space>> {
        let k = self.blocks.len();
        let all: Vec<u32> = (0..self.space.len() as u32).collect();
        let far = self.space.diameter(&all);
        let mut rows = vec![vec![0.0; k]; k];
        for a in 0..k {
            for b in a + 1..k {
                let d = if self.blocks[a].is_empty() || self.blocks[b].is_empty() {
                    far
                } else {
                    self.hausdorff(a, b)
                };
                rows[a][b] = d;
                rows[b][a] = d;
            }
        }
        Ok(Arc::new(Space::from_matrix(rows)?.with_labels(self.names.clone())?))
    }

    fn hausdorff(&self, a: usize, b: usize) -> f64 {
        let one_sided = |p: &[u32], q: &[u32]| {
            p.iter()
                .map(|&x| self.space.dist_to_set(x as usize, q))
                .fold(0.0, f64::max)
        };
        let (p, q) = (&self.blocks[a], &self.blocks[b]);
        one_sided(p, q).max(one_sided(q, p))
    }

    /// Points of the union of the given blocks.
    pub fn points_of(&self, blocks: &[usize]) -> Vec<u32> {
        let mut out = Vec::new();
        for &b in blocks {
            out = sorted_union(&out, &self.blocks[b]);
        }
        out
    }

    /// Blocks making up a point set; fails unless the set is a union of blocks.
    pub fn blocks_of(&self, points: &[u32]) -> Result<Vec<usize>> {
        let mut set: Vec<u32> = points.to_vec();
        set.sort_unstable();
        set.dedup();
        if let Some(&x) = set.iter().find(|&&x| x as usize >= self.space.len()) {
            return Err(Error::invalid(format!("point {x} is outside the space")));
        }
        let chosen: BTreeSet<usize> = set.iter().map(|&x| self.block_of[x as usize]).collect();
        for &b in &chosen {
            if let Some(&x) = self.blocks[b].iter().find(|x| set.binary_search(x).is_err()) {
                return Err(Error::invalid(format!(
                    "set is not a union of blocks: block {} misses point {x}",
                    self.names[b]
                )));
            }
        }
        Ok(chosen.into_iter().collect())
    }

    fn same_as(&self, other: &Decomposition) -> bool {
        self.space.same_as(&other.space) && self.blocks == other.blocks && self.dims == other.dims
    }

    fn check_len(&self, len: usize, what: &str) -> Result<()> {
        if len != self.total_dim() {
            return Err(Error::invalid(format!(
                "{what} has dimension {len}, decomposition has {}",
                self.total_dim()
            )));
        }
        Ok(())
    }
}

/// `λ(A)` as a diagonal 0/1 mask, for `A` a union of blocks given by its points.
pub fn pvm_projection(d: &Decomposition, points: &[u32]) -> Result<DVector<f64>> {
    let blocks = d.blocks_of(points)?;
    Ok(pvm_blocks(d, &blocks))
}

/// `λ` of a union of blocks given by block index.
pub fn pvm_blocks(d: &Decomposition, blocks: &[usize]) -> DVector<f64> {
    let mut mask = DVector::zeros(d.total_dim());
    for &b in blocks {
        for i in d.range(b) {
            mask[i] = 1.0;
        }
    }
    mask
}

/// Dense operator on the direct sum of block spaces.
#[derive(Debug, Clone)]
pub struct BlockOperator {
    matrix: DMatrix<Complex64>,
    decomposition: Arc<Decomposition>,
}

impl BlockOperator {
    pub fn new(matrix: DMatrix<Complex64>, decomposition: Arc<Decomposition>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::invalid(format!("operator is {}x{}", matrix.nrows(), matrix.ncols())));
        }
        decomposition.check_len(matrix.nrows(), "operator")?;
        Ok(BlockOperator { matrix, decomposition })
    }

    pub fn identity(decomposition: Arc<Decomposition>) -> Self {
        let n = decomposition.total_dim();
        BlockOperator { matrix: DMatrix::identity(n, n), decomposition }
    }

    /// `λ(A)` as an operator.
    pub fn projection(decomposition: Arc<Decomposition>, blocks: &[usize]) -> Self {
        let mask = pvm_blocks(&decomposition, blocks).map(|v| Complex64::new(v, 0.0));
        BlockOperator { matrix: DMatrix::from_diagonal(&mask), decomposition }
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn decomposition(&self) -> &Arc<Decomposition> {
        &self.decomposition
    }

    pub fn adjoint(&self) -> Self {
        BlockOperator { matrix: self.matrix.adjoint(), decomposition: self.decomposition.clone() }
    }

    pub fn mul(&self, other: &BlockOperator) -> Result<Self> {
        self.compatible(other)?;
        Ok(BlockOperator { matrix: &self.matrix * &other.matrix, decomposition: self.decomposition.clone() })
    }

    pub fn add(&self, other: &BlockOperator) -> Result<Self> {
        self.compatible(other)?;
        Ok(BlockOperator { matrix: &self.matrix + &other.matrix, decomposition: self.decomposition.clone() })
    }

    pub fn apply(&self, u: &DVector<Complex64>) -> Result<DVector<Complex64>> {
        self.decomposition.check_len(u.len(), "vector")?;
        Ok(&self.matrix * u)
    }

    /// Frobenius norm of block `(a, b)`.
    pub fn block_norm(&self, a: usize, b: usize) -> f64 {
        let (ra, rb) = (self.decomposition.range(a), self.decomposition.range(b));
        self.matrix.view((ra.start, rb.start), (ra.len(), rb.len())).norm()
    }

    fn compatible(&self, other: &BlockOperator) -> Result<()> {
        if !Arc::ptr_eq(&self.decomposition, &other.decomposition) && !self.decomposition.same_as(&other.decomposition) {
            return Err(Error::invalid("operators live on different decompositions"));
        }
        Ok(())
    }
}

/// Set of block pairs.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SupportRelation {
    pub pairs: BTreeSet<(usize, usize)>,
}

impl SupportRelation {
    pub fn contains(&self, a: usize, b: usize) -> bool {
        self.pairs.contains(&(a, b))
    }

    pub fn inverse(&self) -> Self {
        SupportRelation { pairs: self.pairs.iter().map(|&(a, b)| (b, a)).collect() }
    }

    /// First pair of `self` outside `other`.
    pub fn subset_witness(&self, other: &SupportRelation) -> Option<(usize, usize)> {
        self.pairs.iter().copied().find(|p| !other.pairs.contains(p))
    }

    /// Image under a block map applied to both coordinates.
    pub fn image(&self, f: &[usize]) -> Self {
        SupportRelation { pairs: self.pairs.iter().map(|&(a, b)| (f[a], f[b])).collect() }
    }

    /// As an entourage on the block-quotient space.
    pub fn to_entourage(&self, quotient: Arc<Space>) -> Result<Entourage> {
        Entourage::from_pairs(quotient, self.pairs.iter().map(|&(a, b)| (a as u32, b as u32)))
    }

    pub fn from_entourage(e: &Entourage) -> Result<Self> {
        Ok(SupportRelation {
            pairs: e.pairs()?.into_iter().map(|(a, b)| (a as usize, b as usize)).collect(),
        })
    }
}

impl fmt::Display for SupportRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.pairs.iter().map(|(a, b)| format!("({a},{b})")).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

/// Blocks on which `u` has a component of norm above `tol`.
pub fn support_vector(u: &DVector<Complex64>, d: &Decomposition, tol: f64) -> Result<Vec<usize>> {
    d.check_len(u.len(), "vector")?;
    Ok((0..d.block_count()).filter(|&b| block_vec_norm(u, d, b) > tol).collect())
}

fn block_vec_norm(u: &DVector<Complex64>, d: &Decomposition, b: usize) -> f64 {
    let r = d.range(b);
    u.rows(r.start, r.len()).norm()
}

/// `{(a, b) | ‖λ(a) T λ(b)‖ > tol}`.
pub fn support_operator(t: &BlockOperator, tol: f64) -> SupportRelation {
    let k = t.decomposition.block_count();
    let mut pairs = BTreeSet::new();
    for a in 0..k {
        for b in 0..k {
            if t.block_norm(a, b) > tol {
                pairs.insert((a, b));
            }
        }
    }
    SupportRelation { pairs }
}

/// Pass/fail for one support inclusion.
#[derive(Debug, Clone, PartialEq)]
pub struct Inclusion {
    pub name: &'static str,
    pub pass: bool,
    pub witness: Option<String>,
}

/// Outcome of [`check_calculus`].
#[derive(Debug, Clone)]
pub struct CalculusReport {
    pub threshold: f64,
    pub inclusions: Vec<Inclusion>,
    /// Block norms within a factor of ten of the threshold, as `(object, a, b, norm)`;
    /// vectors report `b = a`.
    pub sensitive: Vec<(String, usize, usize, f64)>,
}

impl CalculusReport {
    pub fn all_pass(&self) -> bool {
        self.inclusions.iter().all(|i| i.pass)
    }

    pub fn certificate(&self) -> Certificate {
        let mut cert = Certificate::new();
        for inc in &self.inclusions {
            cert.holds(ANCHOR, inc.name, inc.pass, inc.witness.clone());
        }
        cert.push(ANCHOR, "zero threshold", num(self.threshold), num(self.threshold), true, None);
        cert.push(
            ANCHOR,
            "tolerance-sensitive blocks",
            "reported",
            self.sensitive.len(),
            true,
            (!self.sensitive.is_empty()).then(|| {
                self.sensitive
                    .iter()
                    .map(|(o, a, b, v)| format!("{o}[{a},{b}]={v:e}"))
                    .collect::<Vec<_>>()
                    .join(";")
            }),
        );
        cert
    }
}

/// Verifies the five support inclusions for `S`, `T`, `u`, `v`.
///
/// Relations are taken on the block quotient, where the block cover entourage is
/// the diagonal; right-hand sides are composed explicitly.
pub fn check_calculus(
    s: &BlockOperator,
    t: &BlockOperator,
    u: &DVector<Complex64>,
    v: &DVector<Complex64>,
    tol: f64,
) -> Result<CalculusReport> {
    s.compatible(t)?;
    let d = &s.decomposition;
    d.check_len(u.len(), "u")?;
    d.check_len(v.len(), "v")?;
    let q = d.quotient_space()?;
    let delta = Entourage::diagonal(q.clone()).materialize()?;
    let ent = |r: &SupportRelation| r.to_entourage(q.clone());

    let supp_u = support_vector(u, d, tol)?;
    let supp_v = support_vector(v, d, tol)?;
    let supp_s = support_operator(s, tol);
    let supp_t = support_operator(t, tol);
    let uv: DVector<Complex64> = u + v;
    let st_sum = s.add(t)?;
    let tu = t.apply(u)?;
    let st = s.mul(t)?;
    let t_adj = t.adjoint();

    let mut inclusions = Vec::new();
    let as_set = |x: &[usize]| x.iter().map(|&b| b as u32).collect::<Vec<u32>>();
    let set_witness = |lhs: &[usize], rhs: &[u32]| {
        lhs.iter().find(|&&b| rhs.binary_search(&(b as u32)).is_err()).map(|b| format!("block {b}"))
    };

    let lhs = support_vector(&uv, d, tol)?;
    let rhs = sorted_union(&as_set(&supp_u), &as_set(&supp_v));
    let w = set_witness(&lhs, &rhs);
    inclusions.push(Inclusion { name: "Supp(u+v) in Supp(u) + Supp(v)", pass: w.is_none(), witness: w });

    let lhs = ent(&support_operator(&st_sum, tol))?;
    let rhs = ent(&supp_s)?.union(&ent(&supp_t)?)?;
    let w = lhs.subset_witness(&rhs)?.map(|(a, b)| format!("pair ({a},{b})"));
    inclusions.push(Inclusion { name: "Supp(S+T) in Supp(S) + Supp(T)", pass: w.is_none(), witness: w });

    let lhs = support_vector(&tu, d, tol)?;
    let around_t = delta.compose(&ent(&supp_t)?)?.compose(&delta)?;
    let rhs = around_t.image(&as_set(&supp_u));
    let w = set_witness(&lhs, &rhs);
    inclusions.push(Inclusion { name: "Supp(Tu) in D Supp(T) D [Supp(u)]", pass: w.is_none(), witness: w });

    let lhs = ent(&support_operator(&st, tol))?;
    let rhs = delta
        .compose(&ent(&supp_s)?)?
        .compose(&delta)?
        .compose(&ent(&supp_t)?)?
        .compose(&delta)?;
    let w = lhs.subset_witness(&rhs)?.map(|(a, b)| format!("pair ({a},{b})"));
    inclusions.push(Inclusion { name: "Supp(ST) in D Supp(S) D Supp(T) D", pass: w.is_none(), witness: w });

    let lhs = ent(&support_operator(&t_adj, tol))?;
    let rhs = ent(&supp_t)?.inverse()?;
    let w = lhs
        .subset_witness(&rhs)?
        .or(rhs.subset_witness(&lhs)?)
        .map(|(a, b)| format!("pair ({a},{b})"));
    inclusions.push(Inclusion { name: "Supp(T*) = Supp(T)^-1", pass: w.is_none(), witness: w });

    let mut sensitive = Vec::new();
    let k = d.block_count();
    let near = |x: f64| x >= tol / 10.0 && x <= tol * 10.0;
    for (label, op) in [("S", s), ("T", t), ("S+T", &st_sum), ("ST", &st), ("T*", &t_adj)] {
        for a in 0..k {
            for b in 0..k {
                let x = op.block_norm(a, b);
                if near(x) {
                    sensitive.push((label.to_string(), a, b, x));
                }
            }
        }
    }
    for (label, vec) in [("u", u), ("v", v), ("u+v", &uv), ("Tu", &tu)] {
        for a in 0..k {
            let x = block_vec_norm(vec, d, a);
            if near(x) {
                sensitive.push((label.to_string(), a, a, x));
            }
        }
    }
    Ok(CalculusReport { threshold: tol, inclusions, sensitive })
}

/// `Supp(T) ⊆ E` for `E` over the block-quotient space.
pub fn is_controlled(t: &BlockOperator, e: &Entourage, tol: f64) -> Result<bool> {
    if e.space().len() != t.decomposition.block_count() {
        return Err(Error::invalid(format!(
            "entourage has {} points, decomposition has {} blocks",
            e.space().len(),
            t.decomposition.block_count()
        )));
    }
    Ok(support_operator(t, tol).pairs.iter().all(|&(a, b)| e.contains(a, b)))
}

/// `ad_φ(T) = φ T φ*` for a block-respecting partial isometry `φ` from the
/// source decomposition of `T` to `target`, with block map `f`.
pub fn induce_adjoint(
    f: &[usize],
    phi: &DMatrix<Complex64>,
    t: &BlockOperator,
    target: Arc<Decomposition>,
    tol: f64,
) -> Result<(BlockOperator, Certificate)> {
    let src = &t.decomposition;
    if f.len() != src.block_count() {
        return Err(Error::invalid(format!("block map has {} entries for {} blocks", f.len(), src.block_count())));
    }
    if let Some((b, &y)) = f.iter().enumerate().find(|(_, &y)| y >= target.block_count()) {
        return Err(Error::invalid(format!("block map sends {b} to {y}, outside the target")));
    }
    if phi.nrows() != target.total_dim() || phi.ncols() != src.total_dim() {
        return Err(Error::invalid(format!(
            "phi is {}x{}, expected {}x{}",
            phi.nrows(),
            phi.ncols(),
            target.total_dim(),
            src.total_dim()
        )));
    }
    for b in 0..src.block_count() {
        let cols = src.range(b);
        let keep = target.range(f[b]);
        for c in cols {
            for r in 0..phi.nrows() {
                if !keep.contains(&r) && phi[(r, c)].norm() > tol {
                    return Err(Error::contract(
                        "phi maps a block outside its image block",
                        format!("source block {} (column {c}, row {r})", src.names[b]),
                    ));
                }
            }
        }
    }
    let p = phi.adjoint() * phi;
    let defect = (&p * &p - &p).norm().max((&p - p.adjoint()).norm());
    if defect > 1e-9 {
        return Err(Error::contract("phi*phi is not a projection", format!("defect {defect:e}")));
    }
    let out = BlockOperator::new(phi * &t.matrix * phi.adjoint(), target)?;
    let lhs = support_operator(&out, tol);
    let rhs = support_operator(t, tol).image(f);
    let w = lhs.subset_witness(&rhs).map(|(a, b)| format!("pair ({a},{b})"));
    let mut cert = Certificate::new();
    cert.push(ANCHOR, "phi*phi projection defect", "<= 1e-9", num(defect), true, None);
    cert.holds(ANCHOR, "Supp(ad T) in f x f(Supp(T))", w.is_none(), w);
    Ok((out, cert))
}
