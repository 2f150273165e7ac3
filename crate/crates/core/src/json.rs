//! JSON interchange formats for spaces, covers, entourages, decompositions and operators.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cover::Cover;
use crate::entourage::Entourage;
use crate::error::{Error, Result};
use crate::space::{word_metric_ball, Backing, GridSpec, GroupModel, Space};
use crate::support::{BlockOperator, Decomposition};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Group {
    Abelian,
    Free,
}

/// A space description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpaceSpec {
    Grid {
        /// Optional; must equal the length of `min` when given.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dim: Option<usize>,
        min: Vec<f64>,
        max: Vec<f64>,
        step: f64,
    },
    Points {
        dim: usize,
        coords: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        labels: Option<Vec<String>>,
    },
    Matrix {
        dist: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        labels: Option<Vec<String>>,
    },
    Tree {
        /// Vertex count; defaults to one more than the largest edge endpoint.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n: Option<usize>,
        edges: Vec<(u32, u32)>,
    },
    HyperbolicPolar {
        kappa: f64,
        points: Vec<(f64, f64)>,
    },
    WordBall {
        group: Group,
        rank: usize,
        generators: Vec<Vec<i64>>,
        radius: usize,
    },
    Subspace {
        parent: Box<SpaceSpec>,
        indices: Vec<u32>,
    },
    Product {
        left: Box<SpaceSpec>,
        right: Box<SpaceSpec>,
    },
}

impl SpaceSpec {
    pub fn build(&self) -> Result<Arc<Space>> {
        let space = match self {
            SpaceSpec::Grid { dim, min, max, step } => {
                if dim.is_some_and(|d| d != min.len()) {
                    return Err(Error::invalid(format!("grid dim {} does not match {} coordinates", dim.unwrap_or(0), min.len())));
                }
                Space::grid(GridSpec::new(min.clone(), max.clone(), *step)?)
            }
            SpaceSpec::Points { dim, coords, labels } => with_labels(Space::points(*dim, coords.clone())?, labels)?,
            SpaceSpec::Matrix { dist, labels } => with_labels(Space::from_matrix(dist.clone())?, labels)?,
            SpaceSpec::Tree { n, edges } => {
                let n = n.unwrap_or_else(|| edges.iter().map(|&(a, b)| a.max(b) as usize + 1).max().unwrap_or(1));
                Space::tree(n, edges)?
            }
            SpaceSpec::HyperbolicPolar { kappa, points } => Space::hyperbolic_polar(*kappa, points.clone())?,
            SpaceSpec::WordBall { group, rank, generators, radius } => {
                let model = match group {
                    Group::Abelian => GroupModel::Abelian { rank: *rank },
                    Group::Free => GroupModel::Free { rank: *rank },
                };
                word_metric_ball(model, generators, *radius)?
            }
            SpaceSpec::Subspace { parent, indices } => Space::subspace(parent.build()?, indices.clone())?,
            SpaceSpec::Product { left, right } => Space::product(left.build()?, right.build()?)?,
        };
        Ok(Arc::new(space))
    }

    pub fn describe(space: &Space) -> SpaceSpec {
        let labels = space.labels().map(|l| l.to_vec());
        match space.backing() {
            Backing::Matrix { dist } => {
                let n = space.len();
                SpaceSpec::Matrix { dist: (0..n).map(|i| dist[i * n..(i + 1) * n].to_vec()).collect(), labels }
            }
            Backing::Grid { spec } => SpaceSpec::Grid {
                dim: Some(spec.dim()),
                min: spec.min.clone(),
                max: spec.max.clone(),
                step: spec.step,
            },
            Backing::Points { dim, coords } => SpaceSpec::Points {
                dim: *dim,
                coords: coords.chunks(*dim).map(|c| c.to_vec()).collect(),
                labels,
            },
            Backing::Tree(t) => SpaceSpec::Tree {
                n: Some(space.len()),
                edges: t
                    .adjacency
                    .iter()
                    .enumerate()
                    .flat_map(|(a, row)| row.iter().filter(move |&&b| (a as u32) < b).map(move |&b| (a as u32, b)))
                    .collect(),
            },
            Backing::HyperbolicPolar { kappa, points } => SpaceSpec::HyperbolicPolar { kappa: *kappa, points: points.clone() },
            Backing::Subspace { parent, indices } => {
                SpaceSpec::Subspace { parent: Box::new(Self::describe(parent)), indices: indices.clone() }
            }
            Backing::Product { left, right } => SpaceSpec::Product {
                left: Box::new(Self::describe(left)),
                right: Box::new(Self::describe(right)),
            },
        }
    }
}

fn with_labels(space: Space, labels: &Option<Vec<String>>) -> Result<Space> {
    match labels {
        Some(l) => space.with_labels(l.clone()),
        None => Ok(space),
    }
}

/// A cover together with its space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoverSpec {
    pub space: SpaceSpec,
    pub sets: Vec<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub families: Option<Vec<Vec<usize>>>,
}

impl CoverSpec {
    pub fn build(&self) -> Result<Cover> {
        Cover::new(self.space.build()?, self.sets.clone(), self.families.clone())
    }

    /// Builds the cover over an already constructed space.
    pub fn build_over(&self, space: Arc<Space>) -> Result<Cover> {
        Cover::new(space, self.sets.clone(), self.families.clone())
    }

    pub fn describe(cover: &Cover) -> CoverSpec {
        CoverSpec {
            space: SpaceSpec::describe(cover.space()),
            sets: cover.sets().to_vec(),
            families: cover.families().map(|f| f.to_vec()),
        }
    }
}

/// An entourage over a space given elsewhere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EntourageSpec {
    Diagonal,
    Radius {
        r: f64,
        #[serde(default)]
        closed: bool,
    },
    Pairs {
        pairs: Vec<(u32, u32)>,
    },
}

impl EntourageSpec {
    pub fn build(&self, space: Arc<Space>) -> Result<Entourage> {
        match self {
            EntourageSpec::Diagonal => Ok(Entourage::diagonal(space)),
            EntourageSpec::Radius { r, closed: false } => Entourage::radius(space, *r),
            EntourageSpec::Radius { r, closed: true } => Entourage::closed_radius(space, *r),
            EntourageSpec::Pairs { pairs } => Entourage::from_pairs(space, pairs.iter().copied()),
        }
    }

    pub fn describe(e: &Entourage) -> Result<EntourageSpec> {
        Ok(match e.radius_value() {
            Some((r, closed)) => EntourageSpec::Radius { r, closed },
            None => EntourageSpec::Pairs { pairs: e.pairs()? },
        })
    }
}

/// A block decomposition with its space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecompositionSpec {
    pub space: SpaceSpec,
    pub blocks: Vec<Vec<u32>>,
    pub dims: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub names: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<EntourageSpec>,
}

impl DecompositionSpec {
    pub fn build(&self) -> Result<Decomposition> {
        let space = self.space.build()?;
        let bound = self.bound.as_ref().map(|b| b.build(space.clone())).transpose()?;
        Decomposition::new(space, self.blocks.clone(), self.dims.clone(), self.names.clone(), bound.as_ref())
    }

    pub fn describe(d: &Decomposition) -> DecompositionSpec {
        DecompositionSpec {
            space: SpaceSpec::describe(d.space()),
            blocks: d.blocks().to_vec(),
            dims: d.dims().to_vec(),
            names: Some(d.names().to_vec()),
            bound: None,
        }
    }
}

/// Dense complex matrix as separate real and imaginary parts; `dims` are the block dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorSpec {
    pub dims: Vec<usize>,
    pub re: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<Vec<f64>>>,
}

impl OperatorSpec {
    pub fn matrix(&self) -> Result<DMatrix<Complex64>> {
        let n: usize = self.dims.iter().sum();
        let rows = self.re.len();
        let cols = self.re.first().map_or(0, Vec::len);
        if rows != n || self.re.iter().any(|r| r.len() != cols) {
            return Err(Error::invalid(format!("operator re part is not {n} rows of equal length")));
        }
        if let Some(im) = &self.im {
            if im.len() != rows || im.iter().any(|r| r.len() != cols) {
                return Err(Error::invalid("operator im part does not match re part"));
            }
        }
        Ok(DMatrix::from_fn(rows, cols, |i, j| {
            let im = self.im.as_ref().map_or(0.0, |m| m[i][j]);
            Complex64::new(self.re[i][j], im)
        }))
    }

    pub fn build(&self, d: Arc<Decomposition>) -> Result<BlockOperator> {
        if self.dims != d.dims() {
            return Err(Error::invalid(format!(
                "operator dims {:?} differ from decomposition dims {:?}",
                self.dims,
                d.dims()
            )));
        }
        BlockOperator::new(self.matrix()?, d)
    }

    pub fn describe(m: &DMatrix<Complex64>, dims: &[usize]) -> OperatorSpec {
        let part = |f: fn(&Complex64) -> f64| {
            (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| f(&m[(i, j)])).collect()).collect()
        };
        OperatorSpec { dims: dims.to_vec(), re: part(|c| c.re), im: Some(part(|c| c.im)) }
    }
}

/// Complex vector as `{"re": [...], "im": [...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VectorSpec {
    pub re: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<f64>>,
}

impl VectorSpec {
    pub fn vector(&self) -> Result<nalgebra::DVector<Complex64>> {
        if let Some(im) = &self.im {
            if im.len() != self.re.len() {
                return Err(Error::invalid("vector im part does not match re part"));
            }
        }
        Ok(nalgebra::DVector::from_fn(self.re.len(), |i, _| {
            Complex64::new(self.re[i], self.im.as_ref().map_or(0.0, |v| v[i]))
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn space_round_trip() {
        let spec: SpaceSpec = serde_json::from_str(r#"{"kind":"tree","n":4,"edges":[[0,1],[1,2],[1,3]]}"#).unwrap();
        let space = spec.build().unwrap();
        assert_eq!(space.dist(2, 3), 2.0);
        assert_eq!(SpaceSpec::describe(&space), spec);
        let prod = Space::product(space.clone(), space).unwrap();
        let again = SpaceSpec::describe(&prod).build().unwrap();
        assert!(again.same_as(&prod));
    }

    #[test]
    fn rejects_unknown_fields() {
        assert!(serde_json::from_str::<SpaceSpec>(r#"{"kind":"grid","min":[0],"max":[1],"step":1,"x":1}"#).is_err());
    }

    #[test]
    fn operator_shape_checked() {
        let op = OperatorSpec { dims: vec![1, 1], re: vec![vec![1.0, 0.0]], im: None };
        assert!(op.matrix().is_err());
    }

    #[test]
    fn optional_grid_dim_and_tree_size() {
        let grid: SpaceSpec = serde_json::from_str(r#"{"kind":"grid","dim":2,"min":[0,0],"max":[2,1],"step":1}"#).unwrap();
        assert_eq!(grid.build().unwrap().len(), 6);
        let bad: SpaceSpec = serde_json::from_str(r#"{"kind":"grid","dim":3,"min":[0,0],"max":[2,1],"step":1}"#).unwrap();
        assert!(bad.build().is_err());
        let tree: SpaceSpec = serde_json::from_str(r#"{"kind":"tree","edges":[[0,1],[1,4]]}"#).unwrap();
        assert!(matches!(tree.build(), Err(Error::InvalidInput(_))));
        let tree: SpaceSpec = serde_json::from_str(r#"{"kind":"tree","edges":[[0,1],[1,2]]}"#).unwrap();
        assert_eq!(tree.build().unwrap().len(), 3);
    }
}
