//! The tree tensor representation and its dense validation path.
//!
//! A [`TreeTensor`] stores one coefficient array per node that carries
//! parameters:
//!
//! - active leaf `α`: shape `[r_α, n_α]`, the components of `U_α` in the
//!   orthonormal basis of the leaf space;
//! - active interior node `α`: shape `[r_α, s_1, …, s_k]` with one axis per
//!   son in son order, `s_j = r_β` for an active son and `n_β` for an inactive
//!   leaf;
//! - root: shape `[s_1, …, s_k]` (the leading `r_D = 1` axis is dropped).
//!
//! Dense arrays are kept in coefficient space of the orthonormal product
//! basis, so L² norms of functions are Euclidean norms of arrays.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bases::{BasisError, FeatureSpace};
use crate::dimtree::{
    nodes_bottom_up, parse_tree_text, ActiveSet, DimensionTree, Node, RankTuple, TreeError,
};
use crate::linalg::thin_svd;
use crate::tensor_ops::{mode_product, permute};
use crate::RngStream;

/// Default cap on the number of entries of a dense array.
pub const DENSE_CAP: usize = 10_000_000;

/// Format tag and version written in serialized tree tensors.
pub const FORMAT_TAG: &str = "treepca/tree-tensor";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum TensorError {
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Basis(#[from] BasisError),
    #[error("core of node {node} has shape {got:?}, expected {expected:?}")]
    Shape {
        node: String,
        got: Vec<usize>,
        expected: Vec<usize>,
    },
    #[error("missing core for node {0}")]
    MissingCore(String),
    #[error("unexpected core for node {0}")]
    UnexpectedCore(String),
    #[error("expected {expected} feature spaces, got {got}")]
    SpaceCount { expected: usize, got: usize },
    #[error("point has {got} coordinates, expected {expected}")]
    PointDim { expected: usize, got: usize },
    #[error("norm from the root core needs orthonormal components")]
    NotOrthonormal,
    #[error("dense array of {0} entries exceeds the cap of {1}")]
    CapExceeded(usize, usize),
    #[error("node {0} must be a nonempty strict subset of the dimensions")]
    BadAlpha(String),
    #[error("serialized tensor: {0}")]
    Format(String),
}

/// A coefficient array with its shape, row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Core {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl Core {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Self {
        assert_eq!(shape.iter().product::<usize>(), data.len(), "core size mismatch");
        Self { shape, data }
    }

    pub fn from_matrix(m: &DMatrix<f64>) -> Self {
        Self::new(vec![m.nrows(), m.ncols()], m.transpose().as_slice().to_vec())
    }

    /// First axis against the flattened rest.
    pub fn as_matrix(&self) -> DMatrix<f64> {
        let rows = self.shape.first().copied().unwrap_or(1);
        let cols = self.data.len() / rows.max(1);
        DMatrix::from_row_slice(rows, cols, &self.data)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

/// The function `Σ Π C^α … Π v^α` assembled over a dimension tree.
#[derive(Clone, Debug, PartialEq)]
pub struct TreeTensor {
    tree: DimensionTree,
    active: ActiveSet,
    spaces: Vec<FeatureSpace>,
    cores: Vec<Option<Core>>,
    orthonormal: bool,
}

impl TreeTensor {
    /// Assemble and shape-check. `cores` is keyed by node id; inactive
    /// leaves must have no core.
    pub fn new(
        tree: DimensionTree,
        active: ActiveSet,
        spaces: Vec<FeatureSpace>,
        cores: Vec<Option<Core>>,
        orthonormal: bool,
    ) -> Result<Self, TensorError> {
        active.validate(&tree)?;
        if spaces.len() != tree.d() {
            return Err(TensorError::SpaceCount {
                expected: tree.d(),
                got: spaces.len(),
            });
        }
        if cores.len() != tree.len() {
            return Err(TensorError::Format(format!(
                "{} cores for {} nodes",
                cores.len(),
                tree.len()
            )));
        }
        let tt = Self {
            tree,
            active,
            spaces,
            cores,
            orthonormal,
        };
        tt.check_shapes()?;
        Ok(tt)
    }

    fn check_shapes(&self) -> Result<(), TensorError> {
        let t = &self.tree;
        for id in (0..t.len()).rev() {
            let name = || t.node(id).to_string();
            let core = self.cores[id].as_ref();
            if t.is_leaf(id) && !self.active.contains(id) {
                if core.is_some() {
                    return Err(TensorError::UnexpectedCore(name()));
                }
                continue;
            }
            let core = core.ok_or_else(|| TensorError::MissingCore(name()))?;
            let mut expected = Vec::new();
            if id != t.root() {
                expected.push(core.shape.first().copied().unwrap_or(0).max(1));
            }
            if t.is_leaf(id) {
                expected.push(self.spaces[t.node(id).first_dim()].dim());
            } else {
                for &s in t.sons(id) {
                    expected.push(self.son_width(s));
                }
            }
            if core.shape != expected || core.data.len() != expected.iter().product::<usize>() {
                return Err(TensorError::Shape {
                    node: name(),
                    got: core.shape.clone(),
                    expected,
                });
            }
        }
        Ok(())
    }

    /// Width of the vector a son feeds into its parent.
    fn son_width(&self, id: usize) -> usize {
        if self.active.contains(id) {
            self.cores[id].as_ref().map_or(0, |c| c.shape[0])
        } else {
            self.spaces[self.tree.node(id).first_dim()].dim()
        }
    }

    pub fn tree(&self) -> &DimensionTree {
        &self.tree
    }

    pub fn active(&self) -> &ActiveSet {
        &self.active
    }

    pub fn spaces(&self) -> &[FeatureSpace] {
        &self.spaces
    }

    pub fn core(&self, id: usize) -> Option<&Core> {
        self.cores[id].as_ref()
    }

    pub fn is_orthonormal(&self) -> bool {
        self.orthonormal
    }

    pub fn leaf_dims(&self) -> Vec<usize> {
        self.spaces.iter().map(FeatureSpace::dim).collect()
    }

    /// `r_α` for every active node.
    pub fn ranks(&self) -> RankTuple {
        let map: BTreeMap<Node, usize> = self
            .active
            .ids()
            .map(|id| (self.tree.node(id).clone(), self.son_width(id)))
            .collect();
        RankTuple::new(&self.tree, &self.active, map).expect("ranks keyed by the active set")
    }

    /// Number of stored coefficients.
    pub fn storage(&self) -> usize {
        self.cores.iter().flatten().map(Core::len).sum()
    }

    /// Evaluate at each point. Work is split across threads in chunks and
    /// merged in input order.
    pub fn eval(&self, points: &[Vec<f64>]) -> Result<Vec<f64>, TensorError> {
        const CHUNK: usize = 4096;
        let parts: Result<Vec<Vec<f64>>, TensorError> = points
            .par_chunks(CHUNK)
            .map(|chunk| {
                let mut scratch = Scratch::new(self.tree.len());
                chunk.iter().map(|p| self.eval_with(p, &mut scratch)).collect()
            })
            .collect();
        Ok(parts?.into_iter().flatten().collect())
    }

    pub fn eval_point(&self, x: &[f64]) -> Result<f64, TensorError> {
        self.eval_with(x, &mut Scratch::new(self.tree.len()))
    }

    fn eval_with(&self, x: &[f64], scratch: &mut Scratch) -> Result<f64, TensorError> {
        let t = &self.tree;
        if x.len() != t.d() {
            return Err(TensorError::PointDim {
                expected: t.d(),
                got: x.len(),
            });
        }
        let Scratch { vals, a, b } = scratch;
        // BFS numbering puts sons after parents
        for id in (0..t.len()).rev() {
            if t.is_leaf(id) {
                let dim = t.node(id).first_dim();
                let space = &self.spaces[dim];
                a.clear();
                a.resize(space.dim(), 0.0);
                space.eval_into(x[dim], a)?;
                let out = &mut vals[id];
                out.clear();
                match &self.cores[id] {
                    Some(core) => out.extend(core.data.chunks(a.len()).map(|c| dot(c, a))),
                    None => out.extend_from_slice(a),
                }
            } else {
                let core = self.cores[id].as_ref().expect("checked at construction");
                let mut cur = std::mem::take(a);
                let mut next = std::mem::take(b);
                for (k, &s) in t.sons(id).iter().rev().enumerate() {
                    let v = &vals[s];
                    let src: &[f64] = if k == 0 { &core.data } else { &cur };
                    next.clear();
                    next.extend(src.chunks(v.len()).map(|c| dot(c, v)));
                    std::mem::swap(&mut cur, &mut next);
                }
                vals[id].clear();
                vals[id].extend_from_slice(&cur);
                *a = cur;
                *b = next;
            }
        }
        Ok(vals[t.root()][0])
    }

    /// L² norm from the root core. Needs orthonormal components below the
    /// root.
    pub fn norm(&self) -> Result<f64, TensorError> {
        if !self.orthonormal {
            return Err(TensorError::NotOrthonormal);
        }
        let root = self.cores[self.tree.root()].as_ref().expect("root core");
        Ok(dot(&root.data, &root.data).sqrt())
    }

    /// Gram matrix of the components `{v^α_k}` of every active node,
    /// contracted bottom-up without assuming the sons are orthonormal.
    pub fn component_grams(&self) -> Vec<Option<DMatrix<f64>>> {
        let t = &self.tree;
        let mut grams: Vec<Option<DMatrix<f64>>> = vec![None; t.len()];
        for id in (0..t.len()).rev() {
            if t.is_leaf(id) && !self.active.contains(id) {
                let n = self.spaces[t.node(id).first_dim()].dim();
                grams[id] = Some(DMatrix::identity(n, n));
                continue;
            }
            let core = self.cores[id].as_ref().expect("core");
            let (shape, offset) = if id == t.root() {
                let mut s = vec![1];
                s.extend_from_slice(&core.shape);
                (s, 1)
            } else {
                (core.shape.clone(), 1)
            };
            let mut weighted = core.data.clone();
            let mut wshape = shape.clone();
            if !t.is_leaf(id) {
                for (k, &s) in t.sons(id).iter().enumerate() {
                    let g = grams[s].as_ref().expect("son gram");
                    let (w, ws) = mode_product(&weighted, &wshape, k + offset, g);
                    weighted = w;
                    wshape = ws;
                }
            }
            let rows = shape[0];
            let c = DMatrix::from_row_slice(rows, core.data.len() / rows, &core.data);
            let w = DMatrix::from_row_slice(rows, weighted.len() / rows, &weighted);
            grams[id] = Some(&c * w.transpose());
        }
        grams
    }

    /// Contract the whole network into the product-basis coefficient array.
    pub fn to_dense(&self) -> Result<DenseTensor, TensorError> {
        self.to_dense_capped(DENSE_CAP)
    }

    pub fn to_dense_capped(&self, cap: usize) -> Result<DenseTensor, TensorError> {
        let t = &self.tree;
        let dims = self.leaf_dims();
        let total = dims.iter().try_fold(1usize, |acc, &n| acc.checked_mul(n));
        match total {
            Some(n) if n <= cap => {}
            _ => return Err(TensorError::CapExceeded(total.unwrap_or(usize::MAX), cap)),
        }
        // per node: (data, shape [r, n_{dims of α in sorted order}])
        let mut parts: Vec<Option<(Vec<f64>, Vec<usize>)>> = vec![None; t.len()];
        for id in (0..t.len()).rev() {
            let node = t.node(id);
            if t.is_leaf(id) {
                let n = dims[node.first_dim()];
                parts[id] = Some(match &self.cores[id] {
                    Some(c) => (c.data.clone(), c.shape.clone()),
                    None => (DMatrix::<f64>::identity(n, n).as_slice().to_vec(), vec![n, n]),
                });
                continue;
            }
            let core = self.cores[id].as_ref().expect("core");
            let mut shape = if id == t.root() {
                let mut s = vec![1];
                s.extend_from_slice(&core.shape);
                s
            } else {
                core.shape.clone()
            };
            let mut data = core.data.clone();
            // axis order after expansion: sons' dims in son order
            let mut dim_order: Vec<usize> = Vec::new();
            let mut axis = 1;
            for &s in t.sons(id) {
                let (sdata, sshape) = parts[s].take().expect("son contracted");
                let rows = sshape[0];
                let cols = sdata.len() / rows;
                let m = DMatrix::from_row_slice(rows, cols, &sdata);
                let (d2, mut s2) = mode_product(&data, &shape, axis, &m.transpose());
                data = d2;
                // split the flattened son axis into its dimensions
                s2.splice(axis..=axis, sshape[1..].iter().copied());
                shape = s2;
                axis += sshape.len() - 1;
                dim_order.extend_from_slice(t.node(s).dims());
            }
            // sort dimensions ascending
            let mut perm: Vec<usize> = (0..dim_order.len()).collect();
            perm.sort_by_key(|&k| dim_order[k]);
            let mut full_perm = vec![0];
            full_perm.extend(perm.iter().map(|p| p + 1));
            let (data, shape) = permute(&data, &shape, &full_perm);
            parts[id] = Some((data, shape));
        }
        let (data, shape) = parts[t.root()].take().expect("root");
        debug_assert_eq!(shape[1..], dims[..]);
        Ok(DenseTensor::new(dims, data))
    }

    /// Serialize to the versioned JSON container.
    pub fn to_json(&self) -> String {
        let cores = self
            .cores
            .iter()
            .enumerate()
            .filter_map(|(id, c)| {
                c.as_ref().map(|c| SerializedCore {
                    node: self.tree.node(id).to_string(),
                    shape: c.shape.clone(),
                    data: c.data.clone(),
                })
            })
            .collect();
        let doc = SerializedTreeTensor {
            format: FORMAT_TAG.to_string(),
            version: FORMAT_VERSION,
            tree: self.tree.to_text(&self.active),
            spaces: self.spaces.clone(),
            orthonormal: self.orthonormal,
            cores,
        };
        serde_json::to_string(&doc).expect("serializable")
    }

    pub fn from_json(text: &str) -> Result<Self, TensorError> {
        let doc: SerializedTreeTensor =
            serde_json::from_str(text).map_err(|e| TensorError::Format(e.to_string()))?;
        if doc.format != FORMAT_TAG || doc.version != FORMAT_VERSION {
            return Err(TensorError::Format(format!(
                "unsupported container {} v{}",
                doc.format, doc.version
            )));
        }
        let (tree, active) = parse_tree_text(&doc.tree)?;
        let mut cores = vec![None; tree.len()];
        for c in doc.cores {
            let node: Node = c.node.parse().map_err(TensorError::Format)?;
            let id = tree
                .id_of(&node)
                .ok_or_else(|| TensorError::UnexpectedCore(c.node.clone()))?;
            if c.shape.iter().product::<usize>() != c.data.len() {
                return Err(TensorError::Format(format!("core {} size mismatch", c.node)));
            }
            cores[id] = Some(Core::new(c.shape, c.data));
        }
        Self::new(tree, active, doc.spaces, cores, doc.orthonormal)
    }

    /// A random tree tensor with the given ranks. With `orthonormal`, every
    /// active node's components are orthonormal (rows of the reshaped core
    /// are orthonormalized); otherwise cores are i.i.d. Gaussian.
    pub fn random(
        tree: &DimensionTree,
        active: &ActiveSet,
        spaces: &[FeatureSpace],
        ranks: &RankTuple,
        orthonormal: bool,
        rng: &mut RngStream,
    ) -> Result<Self, TensorError> {
        let mut cores: Vec<Option<Core>> = vec![None; tree.len()];
        let width = |id: usize| -> Result<usize, TensorError> {
            if active.contains(id) {
                Ok(ranks
                    .get(tree.node(id))
                    .ok_or_else(|| TreeError::MissingRank(tree.node(id).to_string()))?)
            } else {
                Ok(spaces[tree.node(id).first_dim()].dim())
            }
        };
        for id in nodes_bottom_up(tree, active).into_iter().chain([tree.root()]) {
            let mut tail = Vec::new();
            if tree.is_leaf(id) {
                tail.push(spaces[tree.node(id).first_dim()].dim());
            } else {
                for &s in tree.sons(id) {
                    tail.push(width(s)?);
                }
            }
            let cols: usize = tail.iter().product();
            let rows = if id == tree.root() { 1 } else { width(id)? };
            let mut m = DMatrix::from_fn(rows, cols, |_, _| rng.rng().sample::<f64, _>(StandardNormal));
            if orthonormal && id != tree.root() {
                if rows > cols {
                    return Err(TensorError::Shape {
                        node: tree.node(id).to_string(),
                        got: vec![rows, cols],
                        expected: vec![cols, cols],
                    });
                }
                let q = m.transpose().qr().q();
                m = q.transpose();
            }
            let mut shape = if id == tree.root() { vec![] } else { vec![rows] };
            shape.extend(tail);
            cores[id] = Some(Core::new(shape, m.transpose().as_slice().to_vec()));
        }
        Self::new(tree.clone(), active.clone(), spaces.to_vec(), cores, orthonormal)
    }
}

/// Reusable buffers for pointwise contraction.
struct Scratch {
    vals: Vec<Vec<f64>>,
    a: Vec<f64>,
    b: Vec<f64>,
}

impl Scratch {
    fn new(nodes: usize) -> Self {
        Self {
            vals: vec![Vec::new(); nodes],
            a: Vec::new(),
            b: Vec::new(),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct SerializedCore {
    node: String,
    shape: Vec<usize>,
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct SerializedTreeTensor {
    format: String,
    version: u32,
    tree: String,
    spaces: Vec<FeatureSpace>,
    orthonormal: bool,
    cores: Vec<SerializedCore>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Full coefficient array over the product basis, row-major in dimension
/// order.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseTensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl DenseTensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Self {
        assert_eq!(shape.iter().product::<usize>(), data.len(), "dense size mismatch");
        Self { shape, data }
    }

    pub fn from_fn(shape: Vec<usize>, mut f: impl FnMut(&[usize]) -> f64) -> Self {
        let mut data = Vec::with_capacity(shape.iter().product());
        crate::tensor_ops::for_each_index(&shape, |idx| data.push(f(idx)));
        Self { shape, data }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn d(&self) -> usize {
        self.shape.len()
    }

    pub fn norm(&self) -> f64 {
        dot(&self.data, &self.data).sqrt()
    }

    pub fn sub(&self, other: &DenseTensor) -> DenseTensor {
        assert_eq!(self.shape, other.shape);
        DenseTensor::new(
            self.shape.clone(),
            self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        )
    }

    fn check_alpha(&self, alpha: &Node) -> Result<(), TensorError> {
        if alpha.is_empty()
            || alpha.len() >= self.d()
            || alpha.dims().iter().any(|&k| k >= self.d())
        {
            return Err(TensorError::BadAlpha(alpha.to_string()));
        }
        Ok(())
    }

    /// Axis permutation putting `alpha` first, both groups in ascending order.
    fn alpha_first(&self, alpha: &Node) -> Vec<usize> {
        let mut perm: Vec<usize> = alpha.dims().to_vec();
        perm.extend(alpha.complement(self.d()));
        perm
    }

    /// The α-matricisation: rows index `α`, columns index the complement.
    pub fn matricize(&self, alpha: &Node) -> Result<DMatrix<f64>, TensorError> {
        self.check_alpha(alpha)?;
        let perm = self.alpha_first(alpha);
        let (data, shape) = permute(&self.data, &self.shape, &perm);
        let rows: usize = shape[..alpha.len()].iter().product();
        Ok(DMatrix::from_row_slice(rows, data.len() / rows, &data))
    }

    /// Apply `mat` (acting on the flattened `alpha` index) to the tensor.
    /// `alpha` may be the full dimension set.
    pub fn apply_on(&self, alpha: &Node, mat: &DMatrix<f64>) -> DenseTensor {
        let perm = self.alpha_first(alpha);
        let (data, shape) = permute(&self.data, &self.shape, &perm);
        let rows: usize = shape[..alpha.len()].iter().product();
        let m = DMatrix::from_row_slice(rows, data.len() / rows, &data);
        let out = mat * m;
        let flat = out.transpose().as_slice().to_vec();
        let mut inv = vec![0; perm.len()];
        for (k, &p) in perm.iter().enumerate() {
            inv[p] = k;
        }
        let (data, shape) = permute(&flat, &shape, &inv);
        DenseTensor::new(shape, data)
    }

    /// Evaluate the represented function at a point.
    pub fn eval_point(&self, spaces: &[FeatureSpace], x: &[f64]) -> Result<f64, TensorError> {
        let rows: Vec<Vec<f64>> = spaces
            .iter()
            .zip(x)
            .map(|(s, &xi)| {
                let mut r = vec![0.0; s.dim()];
                s.eval_into(xi, &mut r).map(|_| r)
            })
            .collect::<Result<_, _>>()?;
        // contract the last axis first
        let mut cur = self.data.clone();
        for row in rows.iter().rev() {
            cur = cur.chunks(row.len()).map(|c| dot(c, row)).collect();
        }
        Ok(cur[0])
    }
}

/// Where to truncate a singular value decomposition.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Truncation {
    Rank(usize),
    /// Smallest rank whose tail energy is at most `tol² ·` total energy.
    RelTol(f64),
}

/// Truncated SVD of an α-matricisation.
#[derive(Clone, Debug)]
pub struct AlphaSvd {
    /// `N_α × r` left singular vectors.
    pub left: DMatrix<f64>,
    /// All singular values, decreasing.
    pub singular_values: Vec<f64>,
    /// `r × N_αᶜ` right singular vectors.
    pub right: DMatrix<f64>,
    pub rank: usize,
    /// `‖u - u_r‖`, the best rank-r approximation error.
    pub error: f64,
}

/// Number of leading singular values kept by a truncation rule.
pub fn truncation_rank(sigma: &[f64], trunc: Truncation) -> usize {
    match trunc {
        Truncation::Rank(r) => r.min(sigma.len()),
        Truncation::RelTol(tol) => {
            // suffix sums: subtracting from the total cancels at tight tolerances
            let mut tails = vec![0.0; sigma.len() + 1];
            for k in (0..sigma.len()).rev() {
                tails[k] = tails[k + 1] + sigma[k] * sigma[k];
            }
            let bound = tol * tol * tails[0];
            (0..=sigma.len()).find(|&r| tails[r] <= bound).unwrap_or(sigma.len())
        }
    }
}

pub fn dense_alpha_svd(
    x: &DenseTensor,
    alpha: &Node,
    trunc: Truncation,
) -> Result<AlphaSvd, TensorError> {
    let m = x.matricize(alpha)?;
    let svd = thin_svd(&m);
    let sigma = svd.sigma;
    let r = truncation_rank(&sigma, trunc);
    let error = sigma[r..].iter().map(|s| s * s).sum::<f64>().sqrt();
    Ok(AlphaSvd {
        left: svd.u.columns(0, r).into_owned(),
        singular_values: sigma,
        right: svd.v.columns(0, r).transpose(),
        rank: r,
        error,
    })
}

/// Leaves-to-root principal component analysis with orthogonal projections
/// on a dense array: the ideal counterpart of the sampling algorithm, used as
/// a reference. Ranks are clipped to the available dimension.
pub fn ideal_tree_pca(
    x: &DenseTensor,
    tree: &DimensionTree,
    active: &ActiveSet,
    ranks: &RankTuple,
) -> Result<DenseTensor, TensorError> {
    // orthonormal basis of U_β as columns, rows over β's sorted dims
    let mut bases: Vec<Option<DMatrix<f64>>> = vec![None; tree.len()];
    let project_sons = |u: &DenseTensor, id: usize, bases: &[Option<DMatrix<f64>>]| {
        let mut out = u.clone();
        for &s in tree.sons(id) {
            if let Some(q) = &bases[s] {
                out = out.apply_on(tree.node(s), &(q * q.transpose()));
            }
        }
        out
    };
    for id in nodes_bottom_up(tree, active) {
        let u_alpha = project_sons(x, id, &bases);
        let r = ranks
            .get(tree.node(id))
            .ok_or_else(|| TreeError::MissingRank(tree.node(id).to_string()))?;
        let svd = dense_alpha_svd(&u_alpha, tree.node(id), Truncation::Rank(r))?;
        bases[id] = Some(svd.left);
    }
    Ok(project_sons(x, tree.root(), &bases))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dimtree::{build_tree, TreeKind};

    fn legendre_spaces(d: usize, p: usize) -> Vec<FeatureSpace> {
        vec![FeatureSpace::legendre(p); d]
    }

    /// Rank-one tree tensor `a ⊗ b` on a Tucker tree with d = 2.
    fn outer(a: &[f64], b: &[f64]) -> TreeTensor {
        let (t, act) = build_tree(TreeKind::Tucker, 2).unwrap();
        let p = a.len() - 1;
        let mut cores = vec![None; t.len()];
        cores[t.leaf_of(0)] = Some(Core::new(vec![1, a.len()], a.to_vec()));
        cores[t.leaf_of(1)] = Some(Core::new(vec![1, b.len()], b.to_vec()));
        cores[0] = Some(Core::new(vec![1, 1], vec![1.0]));
        TreeTensor::new(t, act, legendre_spaces(2, p), cores, false).unwrap()
    }

    #[test]
    fn constant_function() {
        let (t, a) = build_tree(TreeKind::Ttt, 4).unwrap();
        let spaces = legendre_spaces(4, 2);
        let cores = (0..t.len())
            .map(|id| {
                let mut shape = if id == 0 { vec![] } else { vec![1] };
                Some(if t.is_leaf(id) {
                    shape.push(3);
                    Core::new(shape, vec![1.0, 0.0, 0.0])
                } else {
                    shape.extend([1, 1]);
                    Core::new(shape, vec![1.0])
                })
            })
            .collect();
        let tt = TreeTensor::new(t, a, spaces, cores, true).unwrap();
        for x in [[0.1, -0.5, 0.9, 0.0], [1.0, -1.0, 0.3, 0.2]] {
            assert!((tt.eval_point(&x).unwrap() - 1.0).abs() < 1e-15);
        }
        assert!((tt.norm().unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn elementary_product() {
        let a = [0.3, -1.2, 0.5];
        let b = [1.0, 0.25, -0.7];
        let tt = outer(&a, &b);
        let s = FeatureSpace::legendre(2);
        let mut rng = RngStream::new(0, &[1]);
        for _ in 0..10 {
            let x = s.measure().sample(2, &mut rng);
            let fa = dot(&a, s.eval(&x[..1]).unwrap().as_slice());
            let fb = dot(&b, s.eval(&x[1..]).unwrap().as_slice());
            assert!((tt.eval_point(&x).unwrap() - fa * fb).abs() < 1e-12);
        }
        let dense = tt.to_dense().unwrap();
        for (i, ai) in a.iter().enumerate() {
            for (j, bj) in b.iter().enumerate() {
                assert!((dense.data()[i * 3 + j] - ai * bj).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn norm_of_root() {
        let (t, a) = build_tree(TreeKind::Tucker, 2).unwrap();
        let mut cores = vec![None; t.len()];
        cores[t.leaf_of(0)] = Some(Core::new(vec![2, 2], vec![1.0, 0.0, 0.0, 1.0]));
        cores[t.leaf_of(1)] = Some(Core::new(vec![1, 2], vec![0.0, 1.0]));
        cores[0] = Some(Core::new(vec![2, 1], vec![3.0, 4.0]));
        let tt = TreeTensor::new(t.clone(), a.clone(), legendre_spaces(2, 1), cores.clone(), true).unwrap();
        assert!((tt.norm().unwrap() - 5.0).abs() < 1e-15);

        cores[0] = Some(Core::new(vec![2, 1], vec![0.0, 0.0]));
        let zero = TreeTensor::new(t.clone(), a.clone(), legendre_spaces(2, 1), cores.clone(), true).unwrap();
        assert_eq!(zero.norm().unwrap(), 0.0);

        let flagless = TreeTensor::new(t, a, legendre_spaces(2, 1), cores, false).unwrap();
        assert!(matches!(flagless.norm(), Err(TensorError::NotOrthonormal)));
    }

    #[test]
    fn shape_mismatch_rejected() {
        let (t, a) = build_tree(TreeKind::Tucker, 2).unwrap();
        let mut cores = vec![None; t.len()];
        cores[t.leaf_of(0)] = Some(Core::new(vec![1, 3], vec![1.0; 3]));
        cores[t.leaf_of(1)] = Some(Core::new(vec![1, 2], vec![1.0; 2]));
        cores[0] = Some(Core::new(vec![1, 1], vec![1.0]));
        let err = TreeTensor::new(t, a, legendre_spaces(2, 1), cores, false).unwrap_err();
        assert!(matches!(err, TensorError::Shape { ref node, .. } if node == "{1}"), "{err}");
    }

    #[test]
    fn tt_rank_one_dense() {
        let (t, a) = build_tree(TreeKind::Tt, 3).unwrap();
        let spaces = legendre_spaces(3, 2);
        let ranks = RankTuple::uniform(&t, &a, 1);
        let tt = TreeTensor::random(&t, &a, &spaces, &ranks, false, &mut RngStream::new(3, &[0])).unwrap();
        let dense = tt.to_dense().unwrap();
        for alpha in [Node::new(vec![0]), Node::new(vec![0, 1]), Node::new(vec![1])] {
            let svd = dense_alpha_svd(&dense, &alpha, Truncation::Rank(1)).unwrap();
            assert!(svd.error <= 1e-12 * dense.norm());
        }
    }

    #[test]
    fn ttt_ranks_bounded() {
        let (t, a) = build_tree(TreeKind::Ttt, 4).unwrap();
        let spaces = legendre_spaces(4, 3);
        let ranks = RankTuple::uniform(&t, &a, 2);
        let tt = TreeTensor::random(&t, &a, &spaces, &ranks, false, &mut RngStream::new(8, &[0])).unwrap();
        let dense = tt.to_dense().unwrap();
        for id in a.ids() {
            let svd = dense_alpha_svd(&dense, t.node(id), Truncation::Rank(2)).unwrap();
            let s = &svd.singular_values;
            assert!(s.len() <= 2 || s[2] <= 1e-10 * s[0], "{}: {s:?}", t.node(id));
        }
    }

    #[test]
    fn dense_svd_examples() {
        let x = DenseTensor::new(vec![2, 2], vec![3.0, 0.0, 0.0, 1.0]);
        let svd = dense_alpha_svd(&x, &Node::new(vec![0]), Truncation::Rank(1)).unwrap();
        assert!((svd.singular_values[0] - 3.0).abs() < 1e-14);
        assert!((svd.singular_values[1] - 1.0).abs() < 1e-14);
        assert!((svd.error - 1.0).abs() < 1e-14);

        let a = [0.5, -1.0, 2.0];
        let b = [1.0, 3.0];
        let c = [-0.4, 0.2, 0.1, 1.0];
        let e = DenseTensor::from_fn(vec![3, 2, 4], |i| a[i[0]] * b[i[1]] * c[i[2]]);
        for alpha in [vec![0], vec![1], vec![2], vec![0, 2]] {
            let svd = dense_alpha_svd(&e, &Node::new(alpha), Truncation::Rank(1)).unwrap();
            assert!(svd.error <= 1e-14 * e.norm());
        }

        assert!(matches!(
            dense_alpha_svd(&x, &Node::new(vec![0, 1]), Truncation::Rank(1)),
            Err(TensorError::BadAlpha(_))
        ));
        assert!(matches!(
            dense_alpha_svd(&x, &Node::new(vec![]), Truncation::Rank(1)),
            Err(TensorError::BadAlpha(_))
        ));
    }

    #[test]
    fn sum_of_two_elementary() {
        let mut rng = RngStream::new(21, &[0]);
        let mut vecs = |n: usize| -> Vec<f64> {
            (0..n).map(|_| rng.rng().sample::<f64, _>(StandardNormal)).collect()
        };
        let (a1, b1, c1) = (vecs(3), vecs(4), vecs(2));
        let (a2, b2, c2) = (vecs(3), vecs(4), vecs(2));
        let x = DenseTensor::from_fn(vec![3, 4, 2], |i| {
            a1[i[0]] * b1[i[1]] * c1[i[2]] + a2[i[0]] * b2[i[1]] * c2[i[2]]
        });
        for alpha in [vec![0], vec![1], vec![2]] {
            let svd = dense_alpha_svd(&x, &Node::new(alpha), Truncation::Rank(2)).unwrap();
            assert!(svd.error <= 1e-12 * x.norm());
        }
    }

    #[test]
    fn cap_enforced() {
        let (t, a) = build_tree(TreeKind::Tt, 3).unwrap();
        let spaces = legendre_spaces(3, 9);
        let ranks = RankTuple::uniform(&t, &a, 1);
        let tt = TreeTensor::random(&t, &a, &spaces, &ranks, false, &mut RngStream::new(1, &[0])).unwrap();
        assert!(matches!(tt.to_dense_capped(999), Err(TensorError::CapExceeded(1000, 999))));
    }

    #[test]
    fn json_round_trip() {
        let (t, a) = build_tree(TreeKind::Balanced, 5).unwrap();
        let spaces = vec![
            FeatureSpace::legendre(3),
            FeatureSpace::hermite(2),
            FeatureSpace::canonical(2).unwrap(),
            FeatureSpace::legendre(1),
            FeatureSpace::hermite(4),
        ];
        let ranks = RankTuple::uniform(&t, &a, 2);
        let tt = TreeTensor::random(&t, &a, &spaces, &ranks, true, &mut RngStream::new(5, &[0])).unwrap();
        let back = TreeTensor::from_json(&tt.to_json()).unwrap();
        assert_eq!(tt, back);
        assert!(TreeTensor::from_json("{\"format\":\"x\"}").is_err());
    }

    #[test]
    fn random_orthonormal_components() {
        let (t, a) = build_tree(TreeKind::Ttt, 4).unwrap();
        let spaces = legendre_spaces(4, 3);
        let ranks = RankTuple::uniform(&t, &a, 3);
        let tt = TreeTensor::random(&t, &a, &spaces, &ranks, true, &mut RngStream::new(2, &[0])).unwrap();
        for id in a.ids() {
            let g = tt.component_grams()[id].clone().unwrap();
            assert!((g - DMatrix::identity(3, 3)).amax() < 1e-12);
        }
        let dense = tt.to_dense().unwrap();
        assert!((tt.norm().unwrap() - dense.norm()).abs() <= 1e-10 * dense.norm());
    }

    #[test]
    fn ideal_pca_exact_for_low_rank() {
        let (t, a) = build_tree(TreeKind::Balanced, 4).unwrap();
        let spaces = legendre_spaces(4, 3);
        let ranks = RankTuple::uniform(&t, &a, 2);
        let tt = TreeTensor::random(&t, &a, &spaces, &ranks, false, &mut RngStream::new(4, &[0])).unwrap();
        let dense = tt.to_dense().unwrap();
        let approx = ideal_tree_pca(&dense, &t, &a, &ranks).unwrap();
        assert!(approx.sub(&dense).norm() <= 1e-12 * dense.norm());
        let coarse = ideal_tree_pca(&dense, &t, &a, &RankTuple::uniform(&t, &a, 1)).unwrap();
        assert!(coarse.sub(&dense).norm() > 1e-3 * dense.norm());
    }
}
