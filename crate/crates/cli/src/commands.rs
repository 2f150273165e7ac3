//! One function per subcommand.

use std::path::Path;
use std::sync::Arc;

use coarse_core::certificate::num;
use coarse_core::corona::{
    check_cc_entourage, corona_dim_cover, level_shift, level_space, CompactificationModel, CoronaCoverSchedule,
    Decay,
};
use coarse_core::json::{CoverSpec, DecompositionSpec, EntourageSpec, OperatorSpec, SpaceSpec, VectorSpec};
use coarse_core::space::{Backing, GridSpec};
use coarse_core::support::{
    check_calculus, induce_adjoint, is_controlled, support_operator, support_vector, BlockOperator, Decomposition,
};
use coarse_core::transform::{colorize, expand, merge_union, product_refine, ColoredCover};
use coarse_core::witness::hyperbolic::disk_sample;
use coarse_core::witness::lower_bound::pn_sample;
use coarse_core::witness::{
    cube_cover, hyperbolic_params, ray_cell_cover, simplex_lower_bound_check, sperner_find, sphere_cover_lift,
    star_cover, tree_cover, Labeling, SimplexGrid, SimplicialComplex, SphereAtlas,
};
use coarse_core::{Certificate, Cover, Entourage, Error, Space};
use nalgebra::DVector;
use num_complex::Complex64;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::args::{Command, CoronaCmd, CoverCmd, LabelingArg, SpaceCmd, SupportCmd, TransformCmd, WitnessCmd};
use crate::{fixtures, pipeline, CmdResult, Ctx, Output};

pub fn dispatch(cmd: &Command, ctx: &mut Ctx) -> CmdResult<Output> {
    match cmd {
        Command::Space(c) => space(c, ctx),
        Command::Cover(c) => cover(c, ctx),
        Command::Transform(c) => transform(c, ctx),
        Command::Witness(c) => witness(c, ctx),
        Command::Support(c) => support(c, ctx),
        Command::Corona(c) => corona(c, ctx),
        Command::Pipeline(p) => pipeline::run(p, ctx),
    }
}

/// Summary of a cover for the `result` field.
pub fn cover_summary(c: &Cover) -> Value {
    json!({
        "points": c.space().len(),
        "sets": c.len(),
        "families": c.family_count(),
        "multiplicity": c.multiplicity(),
        "mesh": num(c.mesh()),
        "lebesgue": num(c.lebesgue_number()),
    })
}

fn cover_artifact(c: &Cover) -> Option<Value> {
    Some(serde_json::to_value(CoverSpec::describe(c)).expect("covers serialize"))
}

fn space_artifact(s: &Space) -> Option<Value> {
    Some(serde_json::to_value(SpaceSpec::describe(s)).expect("spaces serialize"))
}

fn load_space(ctx: &mut Ctx, path: &Path) -> CmdResult<Arc<Space>> {
    let spec: SpaceSpec = ctx.read_json(path)?;
    Ok(spec.build()?)
}

fn load_cover(ctx: &mut Ctx, path: &Path) -> CmdResult<Cover> {
    let spec: CoverSpec = ctx.read_json(path)?;
    Ok(spec.build()?)
}

fn load_entourage(ctx: &mut Ctx, path: &Path, space: Arc<Space>) -> CmdResult<Entourage> {
    let spec: EntourageSpec = ctx.read_json(path)?;
    Ok(spec.build(space)?)
}

fn load_decomposition(ctx: &mut Ctx, path: &Path) -> CmdResult<Arc<Decomposition>> {
    let spec: DecompositionSpec = ctx.read_json(path)?;
    Ok(Arc::new(spec.build()?))
}

fn load_operator(ctx: &mut Ctx, path: &Path, d: &Arc<Decomposition>) -> CmdResult<BlockOperator> {
    let spec: OperatorSpec = ctx.read_json(path)?;
    Ok(spec.build(d.clone())?)
}

fn load_vector(ctx: &mut Ctx, path: &Path) -> CmdResult<DVector<Complex64>> {
    let spec: VectorSpec = ctx.read_json(path)?;
    Ok(spec.vector()?)
}

fn space(cmd: &SpaceCmd, ctx: &mut Ctx) -> CmdResult<Output> {
    let s = match cmd {
        SpaceCmd::Info { space } => load_space(ctx, space)?,
        SpaceCmd::Grid { dim, lo, hi, step } => Arc::new(Space::grid(GridSpec::cube(*dim, *lo, *hi, *step)?)),
        SpaceCmd::Pn { n, extent, step } => Arc::new(pn_sample(*n, *extent, *step)?),
        SpaceCmd::Tree { nodes } => {
            let mut rng = ctx.rng("space tree")?;
            Arc::new(fixtures::random_tree(&mut rng, *nodes)?)
        }
    };
    let all: Vec<u32> = (0..s.len() as u32).collect();
    let result = json!({ "kind": s.kind(), "points": s.len(), "diameter": num(s.diameter(&all)) });
    Ok(Output { certificate: Certificate::new(), result, artifact: space_artifact(&s) })
}

fn cover(cmd: &CoverCmd, ctx: &mut Ctx) -> CmdResult<Output> {
    let CoverCmd::Stats { cover, entourage, max_multiplicity, min_lebesgue, max_mesh } = cmd;
    let c = load_cover(ctx, cover)?;
    let l = entourage.as_ref().map(|p| load_entourage(ctx, p, c.space().clone())).transpose()?;
    let stats = c.stats(l.as_ref())?;
    let mut cert = Certificate::new();
    const ANCHOR: &str = "cover-metrics";
    if let Some(m) = max_multiplicity {
        let w = c.multiplicity_witness().map(|(p, k)| format!("point {p} in {k} sets"));
        cert.at_most(ANCHOR, "multiplicity", *m as f64, stats.multiplicity as f64, w);
    }
    if let Some(b) = min_lebesgue {
        let w = c.lebesgue_witness().map(|(p, _)| format!("point {p}"));
        cert.at_least(ANCHOR, "lebesgue", *b, stats.lebesgue, w);
    }
    if let Some(b) = max_mesh {
        cert.at_most(ANCHOR, "mesh", *b, stats.mesh, None);
    }
    if let Some(l) = &l {
        let w = c.appetite_witness(l)?.map(|p| format!("point {p}"));
        cert.holds(ANCHOR, "appetite", w.is_none(), w);
    }
    let mut result = cover_summary(&c);
    result["empty_sets"] = json!(stats.empty_sets);
    result["appetite"] = json!(stats.appetite);
    Ok(Output { certificate: cert, result, artifact: None })
}

/// `l` restricted to the points of `sub`, which must be `l`'s space or a subspace of it.
fn restrict_to(l: &Entourage, sub: &Arc<Space>) -> CmdResult<Entourage> {
    if sub.same_as(l.space()) {
        return Ok(Entourage::from_pairs(sub.clone(), l.pairs()?)?);
    }
    match sub.backing() {
        Backing::Subspace { parent, indices } if parent.same_as(l.space()) => Ok(l.restrict(sub.clone(), indices)?),
        _ => Err(Error::invalid("cover space is neither the ambient space nor a subspace of it").into()),
    }
}

fn colored_result(c: &ColoredCover, cert: Certificate) -> Output {
    Output { certificate: cert, result: cover_summary(c.cover()), artifact: cover_artifact(c.cover()) }
}

fn transform(cmd: &TransformCmd, ctx: &mut Ctx) -> CmdResult<Output> {
    match cmd {
        TransformCmd::Colorize { cover, entourage, n } => {
            let c = load_cover(ctx, cover)?;
            let l = load_entourage(ctx, entourage, c.space().clone())?;
            let (out, cert) = colorize(&c, &l, *n)?;
            Ok(colored_result(&out, cert))
        }
        TransformCmd::Expand { cover, entourage } => {
            let c = load_cover(ctx, cover)?;
            let l = load_entourage(ctx, entourage, c.space().clone())?;
            let (out, cert) = expand(&c, &l)?;
            Ok(colored_result(&out, cert))
        }
        TransformCmd::Merge { a, b, space, entourage } => {
            let x = load_space(ctx, space)?;
            let l = load_entourage(ctx, entourage, x)?;
            let ca = load_cover(ctx, a)?;
            let cb = load_cover(ctx, b)?;
            let la = restrict_to(&l, ca.space())?;
            let lb = restrict_to(&l, cb.space())?;
            let (out, cert) = merge_union(&ColoredCover::new(ca, la)?, &ColoredCover::new(cb, lb)?, &l)?;
            Ok(colored_result(&out, cert))
        }
        TransformCmd::Product { u, v, ex, ey, n, m } => {
            let cu = load_cover(ctx, u)?;
            let cv = load_cover(ctx, v)?;
            let ex = load_entourage(ctx, ex, cu.space().clone())?;
            let ey = load_entourage(ctx, ey, cv.space().clone())?;
            let (out, cert) = product_refine(&cu, &cv, &ex, &ey, *n, *m)?;
            let mut result = cover_summary(out.cover.cover());
            result["naive_multiplicity"] = json!((n + 1) * (m + 1));
            Ok(Output { certificate: cert, result, artifact: cover_artifact(out.cover.cover()) })
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ComplexSpec {
    vertices: usize,
    simplices: Vec<Vec<usize>>,
}

fn witness(cmd: &WitnessCmd, ctx: &mut Ctx) -> CmdResult<Output> {
    match cmd {
        WitnessCmd::Cube { n, a, step, extent } => {
            let s = Arc::new(Space::grid(GridSpec::cube(*n, 0.0, extent.unwrap_or(2.0 * a), *step)?));
            let (c, cert) = cube_cover(&s, *a)?;
            Ok(colored_result(&c, cert))
        }
        WitnessCmd::Tree { tree, nodes, l, root } => {
            let s = match (tree, nodes) {
                (Some(p), _) => load_space(ctx, p)?,
                (None, Some(k)) => {
                    let mut rng = ctx.rng("witness tree --nodes")?;
                    Arc::new(fixtures::random_tree(&mut rng, *k)?)
                }
                (None, None) => return Err(crate::Failure::Usage("witness tree needs --tree or --nodes".into())),
            };
            let (c, cert) = tree_cover(&s, *l, *root)?;
            Ok(colored_result(&c, cert))
        }
        WitnessCmd::Ray { n, extent, step, radius } => {
            let s = Arc::new(Space::grid(GridSpec::cube((*n).max(1), 0.0, *extent, *step)?));
            let e = Entourage::closed_radius(s, *radius)?;
            let (c, cert) = ray_cell_cover(*n, &e)?;
            Ok(colored_result(&c, cert))
        }
        WitnessCmd::Hyperbolic { kappa, lambda, d, l, n, radius, dr, ds, half_angle, cap, rho, shift } => {
            let (p_rho, p_n) = hyperbolic_params(*kappa, *lambda, *d, *l, *n)?;
            let rho = rho.unwrap_or(p_rho);
            let big_n = shift.unwrap_or(p_n);
            let atlas = SphereAtlas::new(*kappa, rho, *lambda, *d)?;
            let s = Arc::new(disk_sample(*kappa, *radius, *dr, *ds, *half_angle, *cap)?);
            let (c, cert) = sphere_cover_lift(&s, &atlas, big_n, *l)?;
            let mut result = cover_summary(&c);
            result["rho"] = num(rho);
            result["shift"] = json!(big_n);
            Ok(Output { certificate: cert, result, artifact: cover_artifact(&c) })
        }
        WitnessCmd::Sperner { n, k, labeling } => {
            let rule = match labeling {
                LabelingArg::Nearest => Labeling::Nearest,
                LabelingArg::Constant => Labeling::ConstantInterior,
            };
            let grid = SimplexGrid::new(*n, *k, rule)?;
            let cell = sperner_find(&grid)?;
            let count = grid.fully_labeled().len();
            let mut cert = Certificate::new();
            let mut labels: Vec<usize> = cell.iter().map(|&v| grid.labels()[v]).collect();
            labels.sort_unstable();
            cert.holds("sperner", "cell fully labeled", labels == (0..=*n).collect::<Vec<_>>(), None);
            cert.push("sperner", "fully-labeled count odd", "odd", count as u64, count % 2 == 1, None);
            let vertices: Vec<&[usize]> = cell.iter().map(|&v| grid.vertex(v)).collect();
            let result = json!({ "cell": cell, "vertices": vertices, "fully_labeled": count });
            Ok(Output { certificate: cert, result, artifact: None })
        }
        WitnessCmd::LowerBound { cover, n } => {
            let c = load_cover(ctx, cover)?;
            let (lb, cert) = simplex_lower_bound_check(&c, *n)?;
            let result = serde_json::to_value(&lb).expect("certificates serialize");
            Ok(Output { certificate: cert, result, artifact: None })
        }
        WitnessCmd::Star { complex, stability, resolution } => {
            let spec: ComplexSpec = ctx.read_json(complex)?;
            let k = SimplicialComplex::new(spec.vertices, spec.simplices)?;
            let (c, cert) = star_cover(&k, *stability, *resolution)?;
            Ok(Output { certificate: cert, result: cover_summary(&c), artifact: cover_artifact(&c) })
        }
    }
}

fn support(cmd: &SupportCmd, ctx: &mut Ctx) -> CmdResult<Output> {
    match cmd {
        SupportCmd::Verify { decomposition, op, op_s, u, v, tol } => {
            let d = load_decomposition(ctx, decomposition)?;
            let t = load_operator(ctx, op, &d)?;
            let s = match op_s {
                Some(p) => load_operator(ctx, p, &d)?,
                None => t.clone(),
            };
            let n = d.total_dim();
            let u = match u {
                Some(p) => load_vector(ctx, p)?,
                None => DVector::from_element(n, Complex64::new(1.0, 0.0)),
            };
            let v = match v {
                Some(p) => load_vector(ctx, p)?,
                None => {
                    let mut e = DVector::zeros(n);
                    if n > 0 {
                        e[0] = Complex64::new(1.0, 0.0);
                    }
                    e
                }
            };
            let report = check_calculus(&s, &t, &u, &v, *tol)?;
            let sensitive: Vec<Value> = report
                .sensitive
                .iter()
                .map(|(o, a, b, x)| json!({ "object": o, "blocks": [a, b], "norm": num(*x) }))
                .collect();
            let result = json!({
                "supp_s": support_operator(&s, *tol).to_string(),
                "supp_t": support_operator(&t, *tol).to_string(),
                "supp_u": support_vector(&u, &d, *tol)?,
                "supp_v": support_vector(&v, &d, *tol)?,
                "threshold": num(report.threshold),
                "sensitive": sensitive,
            });
            Ok(Output { certificate: report.certificate(), result, artifact: None })
        }
        SupportCmd::Controlled { decomposition, op, entourage, tol } => {
            let d = load_decomposition(ctx, decomposition)?;
            let t = load_operator(ctx, op, &d)?;
            let e = load_entourage(ctx, entourage, d.quotient_space()?)?;
            let ok = is_controlled(&t, &e, *tol)?;
            let supp = support_operator(&t, *tol);
            let witness = supp.pairs.iter().find(|&&(a, b)| !e.contains(a, b)).map(|(a, b)| format!("block pair ({a},{b})"));
            let mut cert = Certificate::new();
            cert.holds("controlled-support", "Supp(T) in E", ok, witness);
            Ok(Output { certificate: cert, result: json!({ "controlled": ok, "support": supp.to_string() }), artifact: None })
        }
        SupportCmd::Induce { source, target, map, phi, op, tol } => {
            let src = load_decomposition(ctx, source)?;
            let tgt = load_decomposition(ctx, target)?;
            let t = load_operator(ctx, op, &src)?;
            let phi: OperatorSpec = ctx.read_json(phi)?;
            let (out, cert) = induce_adjoint(map, &phi.matrix()?, &t, tgt.clone(), *tol)?;
            let result = json!({
                "supp_t": support_operator(&t, *tol).to_string(),
                "supp_induced": support_operator(&out, *tol).to_string(),
            });
            let artifact = serde_json::to_value(OperatorSpec::describe(out.matrix(), tgt.dims())).expect("operators serialize");
            Ok(Output { certificate: cert, result, artifact: Some(artifact) })
        }
    }
}

/// Compactification model file.
#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum ModelSpec {
    Interval { steps: usize },
    Disk { rings: usize, angles: usize },
    Sample { space: SpaceSpec, corona: Vec<u32> },
}

fn load_model(ctx: &mut Ctx, path: &Path) -> CmdResult<CompactificationModel> {
    let spec: ModelSpec = ctx.read_json(path)?;
    Ok(match spec {
        ModelSpec::Interval { steps } => CompactificationModel::unit_interval(steps)?,
        ModelSpec::Disk { rings, angles } => CompactificationModel::disk(rings, angles)?,
        ModelSpec::Sample { space, corona } => CompactificationModel::new(space.build()?, corona)?,
    })
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum CoronaSpec {
    Point,
    Circle { points: usize },
    Explicit { space: SpaceSpec, families: usize, covers: Vec<ScaleCover> },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScaleCover {
    k: usize,
    sets: Vec<Vec<u32>>,
    families: Vec<Vec<usize>>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum DeltaSpec {
    List(Vec<f64>),
    Harmonic { harmonic: f64 },
}

/// Cover schedule file for `corona dimcover`.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScheduleSpec {
    corona: CoronaSpec,
    delta: DeltaSpec,
    #[serde(default = "one")]
    level_shift: usize,
    #[serde(default)]
    level_pairs: Vec<(u32, u32)>,
}

fn one() -> usize {
    1
}

fn corona(cmd: &CoronaCmd, ctx: &mut Ctx) -> CmdResult<Output> {
    match cmd {
        CoronaCmd::Equiv { model } => {
            let m = load_model(ctx, model)?;
            let report = m.equivalence()?;
            let mut result = serde_json::to_value(&report).expect("reports serialize");
            result.as_object_mut().expect("object").remove("certificate");
            Ok(Output { certificate: report.certificate, result, artifact: None })
        }
        CoronaCmd::Check { model, entourage, c } => {
            let m = load_model(ctx, model)?;
            let e = load_entourage(ctx, entourage, m.interior_space()?)?;
            let decay = c.map_or(Decay::AmbientHarmonic, Decay::Harmonic);
            let verdict = check_cc_entourage(&m, &e, decay)?;
            let result = serde_json::to_value(&verdict).expect("verdicts serialize");
            Ok(Output { certificate: verdict.certificate(), result, artifact: None })
        }
        CoronaCmd::Dimcover { schedule, depth } => {
            let spec: ScheduleSpec = ctx.read_json(schedule)?;
            let sched = match spec.corona {
                CoronaSpec::Point => CoronaCoverSchedule::point()?,
                CoronaSpec::Circle { points } => CoronaCoverSchedule::circle(points)?,
                CoronaSpec::Explicit { space, families, covers } => {
                    let s = space.build()?;
                    let covers = covers
                        .into_iter()
                        .map(|c| Ok((c.k, Cover::new(s.clone(), c.sets, Some(c.families))?)))
                        .collect::<coarse_core::Result<Vec<_>>>()?;
                    CoronaCoverSchedule::explicit(s, families, covers)?
                }
            };
            let delta = match spec.delta {
                DeltaSpec::List(v) => v,
                DeltaSpec::Harmonic { harmonic } => (0..=*depth).map(|m| harmonic / (m + 1) as f64).collect(),
            };
            let levels = level_space(*depth)?;
            let mut e = level_shift(levels.clone(), spec.level_shift)?;
            if !spec.level_pairs.is_empty() {
                e = e.union(&Entourage::from_pairs(levels, spec.level_pairs)?)?;
            }
            let out = corona_dim_cover(&sched, &delta, &e, *depth)?;
            let mut result = cover_summary(&out.cover);
            result["l"] = json!(out.l);
            result["k"] = json!(out.k);
            result["d"] = out.d.iter().map(|&x| num(x)).collect();
            result["b"] = json!(out.b);
            Ok(Output { certificate: out.certificate, result, artifact: cover_artifact(&out.cover) })
        }
    }
}
