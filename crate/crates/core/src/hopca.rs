//! Learning a tree tensor from point evaluations.
//!
//! Nodes are visited from the leaves to the root. At an active node `α` the
//! function is evaluated on `Γ_{V_α} × {x_{αᶜ}^k}`, where `Γ_{V_α}` is the magic
//! grid of the leaf space (leaves) or the product of the sons' magic grids
//! (interior nodes). Interpolating each sample column gives coefficient
//! samples of `u_α = I_{V_α} u`, whose leading left singular vectors span the
//! retained space `U_α`. Magic points of `U_α` are then picked inside
//! `Γ_{V_α}`, so grids are nested all the way up. The root is pure
//! interpolation on the product of its sons' grids.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bases::{BasisError, FeatureSpace, Measure1D, DEFAULT_CANDIDATES};
use crate::dimtree::{
    leaf_dim, nodes_bottom_up, rank_at, sons_space_dim, ActiveSet, DimensionTree, Node,
    RankTuple, TreeError,
};
use crate::interp::{magic_points, InterpError, ProductInterpolator};
use crate::linalg::thin_svd;
use crate::rng::tag;
use crate::tnet::{truncation_rank, Core, TensorError, TreeTensor, Truncation};
use crate::RngStream;

#[derive(Debug, Error)]
pub enum HopcaError {
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Basis(#[from] BasisError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("node {node}: {source}")]
    Interp {
        node: String,
        #[source]
        source: InterpError,
    },
    #[error("evaluation failed at {point:?}: {message}")]
    Evaluator { point: Vec<f64>, message: String },
    #[error("non-finite value {value} at {point:?}")]
    NonFinite { point: Vec<f64>, value: f64 },
    #[error("node {node}: rank {rank} exceeds the available dimension {available}")]
    RankTooLarge {
        node: String,
        rank: usize,
        available: usize,
    },
    #[error("empty sample matrix")]
    EmptySamples,
    #[error("invalid policy: {0}")]
    Policy(String),
    #[error("{what}: expected {expected}, got {got}")]
    Layout {
        what: &'static str,
        expected: usize,
        got: usize,
    },
}

type Evaluator = dyn Fn(&[f64]) -> Result<f64, String> + Send + Sync;

/// A function known only through point evaluations, with the measure of
/// each variable and a counter of the evaluations spent.
pub struct BlackBox {
    f: Arc<Evaluator>,
    measures: Vec<Measure1D>,
    counter: AtomicUsize,
    concurrent: bool,
}

impl std::fmt::Debug for BlackBox {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BlackBox")
            .field("measures", &self.measures)
            .field("count", &self.count())
            .field("concurrent", &self.concurrent)
            .finish()
    }
}

impl BlackBox {
    pub fn new(measures: Vec<Measure1D>, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self::fallible(measures, move |x| Ok(f(x)))
    }

    pub fn fallible(
        measures: Vec<Measure1D>,
        f: impl Fn(&[f64]) -> Result<f64, String> + Send + Sync + 'static,
    ) -> Self {
        Self {
            f: Arc::new(f),
            measures,
            counter: AtomicUsize::new(0),
            concurrent: false,
        }
    }

    /// Declare the evaluator safe to call from several threads at once.
    pub fn concurrent(mut self, yes: bool) -> Self {
        self.concurrent = yes;
        self
    }

    /// The function represented by a tree tensor, over its leaf measures.
    pub fn from_tensor(tt: TreeTensor) -> Self {
        let measures = tt.spaces().iter().map(FeatureSpace::measure).collect();
        Self::fallible(measures, move |x| tt.eval_point(x).map_err(|e| e.to_string())).concurrent(true)
    }

    pub fn d(&self) -> usize {
        self.measures.len()
    }

    pub fn measures(&self) -> &[Measure1D] {
        &self.measures
    }

    /// Evaluations counted so far.
    pub fn count(&self) -> usize {
        self.counter.load(Ordering::SeqCst)
    }

    /// Evaluate and count every requested point.
    pub fn eval_batch(&self, points: &[Vec<f64>]) -> Result<Vec<f64>, HopcaError> {
        self.counter.fetch_add(points.len(), Ordering::SeqCst);
        self.eval_uncounted(points)
    }

    /// Evaluate without touching the counter (test data only).
    pub fn eval_uncounted(&self, points: &[Vec<f64>]) -> Result<Vec<f64>, HopcaError> {
        for p in points {
            if p.len() != self.d() {
                return Err(HopcaError::Layout {
                    what: "point coordinates",
                    expected: self.d(),
                    got: p.len(),
                });
            }
        }
        if self.concurrent && points.len() > 64 {
            points.par_iter().map(|p| self.eval_one(p)).collect()
        } else {
            points.iter().map(|p| self.eval_one(p)).collect()
        }
    }

    fn eval_one(&self, x: &[f64]) -> Result<f64, HopcaError> {
        let value = (self.f)(x).map_err(|message| HopcaError::Evaluator {
            point: x.to_vec(),
            message,
        })?;
        if !value.is_finite() {
            return Err(HopcaError::NonFinite {
                point: x.to_vec(),
                value,
            });
        }
        Ok(value)
    }

    /// Draw `count` i.i.d. points from the product measure.
    pub fn sample_points(&self, count: usize, rng: &mut RngStream) -> Vec<Vec<f64>> {
        (0..count)
            .map(|_| self.measures.iter().map(|m| m.sample_one(rng)).collect())
            .collect()
    }
}

/// The function `(i₁,…,i_d) ↦ f(i·2^{-d})` with `i = Σ_k i_k 2^{d-k}`, on
/// `{0,1}^d` with the uniform measure.
pub fn tensorize(f: impl Fn(f64) -> f64 + Send + Sync + 'static, d: usize) -> BlackBox {
    let h = (0.5f64).powi(d as i32);
    let measures = vec![Measure1D::FiniteUniform { m: 2 }; d];
    BlackBox::new(measures, move |bits| {
        let i = bits.iter().fold(0u64, |acc, &b| 2 * acc + b as u64);
        f(i as f64 * h)
    })
    .concurrent(true)
}

/// `(u(x_α^i, x_{αᶜ}^k))_{i,k}`. Grid points list the coordinates of `alpha`
/// in increasing dimension order, samples those of the complement.
pub fn partial_sample_matrix(
    u: &BlackBox,
    alpha: &Node,
    grid: &[Vec<f64>],
    samples: &[Vec<f64>],
) -> Result<DMatrix<f64>, HopcaError> {
    if grid.is_empty() || samples.is_empty() {
        return Err(HopcaError::EmptySamples);
    }
    let d = u.d();
    let comp = alpha.complement(d);
    let mut points = Vec::with_capacity(grid.len() * samples.len());
    for g in grid {
        if g.len() != alpha.len() {
            return Err(HopcaError::Layout {
                what: "grid point coordinates",
                expected: alpha.len(),
                got: g.len(),
            });
        }
        for s in samples {
            if s.len() != comp.len() {
                return Err(HopcaError::Layout {
                    what: "sample coordinates",
                    expected: comp.len(),
                    got: s.len(),
                });
            }
            let mut x = vec![0.0; d];
            for (&k, &v) in alpha.dims().iter().zip(g) {
                x[k] = v;
            }
            for (&k, &v) in comp.iter().zip(s) {
                x[k] = v;
            }
            points.push(x);
        }
    }
    let values = u.eval_batch(&points)?;
    Ok(DMatrix::from_row_slice(grid.len(), samples.len(), &values))
}

/// How many principal components a node keeps.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PcaRule {
    Rank(usize),
    /// Relative tail energy bound.
    Tolerance(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Pca {
    /// `dim V × r`, orthonormal columns.
    pub components: DMatrix<f64>,
    /// Singular values of `m^{-1/2} A`, decreasing.
    pub singular_values: Vec<f64>,
    pub rank: usize,
    /// The rule asked for zero components and one was kept anyway.
    pub clamped: bool,
}

/// Principal components of the columns of `samples` (coefficient samples in
/// an orthonormal basis).
pub fn empirical_pca(samples: &DMatrix<f64>, rule: PcaRule) -> Result<Pca, HopcaError> {
    let (n, m) = samples.shape();
    if n == 0 || m == 0 {
        return Err(HopcaError::EmptySamples);
    }
    let scaled = samples / (m as f64).sqrt();
    let svd = thin_svd(&scaled);
    let sigma = svd.sigma;
    let wanted = match rule {
        PcaRule::Rank(r) => truncation_rank(&sigma, Truncation::Rank(r)),
        PcaRule::Tolerance(tol) => truncation_rank(&sigma, Truncation::RelTol(tol)),
    };
    let rank = wanted.max(1);
    Ok(Pca {
        components: svd.u.columns(0, rank).into_owned(),
        singular_values: sigma,
        rank,
        clamped: wanted == 0,
    })
}

/// Per-node tolerance used in tolerance mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocalRule {
    #[default]
    Eps,
    EpsOverSqrtA,
}

#[derive(Clone, Debug, PartialEq)]
pub enum BudgetPolicy {
    /// `m_α = ⌈γ r_α⌉` samples per node.
    PrescribedRank { ranks: RankTuple, gamma: f64 },
    /// `m_α = ⌈γ dim V_α⌉` samples per node, `γ = 1` in the plain mode.
    PrescribedTolerance {
        eps: f64,
        local_rule: LocalRule,
        gamma: f64,
    },
}

impl BudgetPolicy {
    pub fn rank(ranks: RankTuple, gamma: f64) -> Self {
        BudgetPolicy::PrescribedRank { ranks, gamma }
    }

    pub fn tolerance(eps: f64) -> Self {
        BudgetPolicy::PrescribedTolerance {
            eps,
            local_rule: LocalRule::Eps,
            gamma: 1.0,
        }
    }

    pub fn gamma(&self) -> f64 {
        match *self {
            BudgetPolicy::PrescribedRank { gamma, .. } | BudgetPolicy::PrescribedTolerance { gamma, .. } => {
                gamma
            }
        }
    }

    fn validate(&self) -> Result<(), HopcaError> {
        let gamma = self.gamma();
        if !(gamma >= 1.0 && gamma.is_finite()) {
            return Err(HopcaError::Policy(format!("gamma = {gamma} must be at least 1")));
        }
        match *self {
            BudgetPolicy::PrescribedTolerance { eps, .. } if !(eps > 0.0 && eps.is_finite()) => {
                Err(HopcaError::Policy(format!("eps = {eps} must be positive")))
            }
            _ => Ok(()),
        }
    }

    fn samples(&self, rank: usize, dim_v: usize) -> usize {
        let base = match self {
            BudgetPolicy::PrescribedRank { .. } => rank,
            BudgetPolicy::PrescribedTolerance { .. } => dim_v,
        };
        // guard against 1.1 * 10 = 11.000000000000002
        (self.gamma() * base as f64 - 1e-9).ceil() as usize
    }
}

/// Closed-form evaluation count of a run that ends with the given ranks.
pub fn predicted_evaluations(
    tree: &DimensionTree,
    active: &ActiveSet,
    ranks: &RankTuple,
    leaf_dims: &[usize],
    policy: &BudgetPolicy,
) -> Result<usize, HopcaError> {
    let mut total = sons_space_dim(tree, active, ranks, leaf_dims, tree.root())?;
    for id in active.ids() {
        let dim_v = if tree.is_leaf(id) {
            leaf_dim(leaf_dims, tree.node(id).first_dim())?
        } else {
            sons_space_dim(tree, active, ranks, leaf_dims, id)?
        };
        total += policy.samples(rank_at(tree, ranks, id)?, dim_v) * dim_v;
    }
    Ok(total)
}

/// What one active node computed.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeResult {
    pub node: Node,
    /// `r × dim V`: rows are the components in the basis of `V_α`.
    pub components: DMatrix<f64>,
    pub singular_values: Vec<f64>,
    /// `Γ_{V_α}`: points over the dimensions of `α`.
    pub v_grid: Vec<Vec<f64>>,
    /// Positions of the magic points of `U_α` in `v_grid`.
    pub magic_indices: Vec<usize>,
    pub samples: usize,
    pub clamped: bool,
}

impl NodeResult {
    pub fn rank(&self) -> usize {
        self.components.nrows()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HopcaReport {
    /// Evaluations of `u` spent by the algorithm.
    pub evaluations: usize,
    pub storage: usize,
    pub ranks: RankTuple,
    /// Active nodes in processing order.
    pub nodes: Vec<NodeResult>,
    /// Some node had no energy and was clamped to rank one.
    pub degenerate: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HopcaOptions {
    /// Random candidates per continuous leaf.
    pub candidates: usize,
}

impl Default for HopcaOptions {
    fn default() -> Self {
        Self {
            candidates: DEFAULT_CANDIDATES,
        }
    }
}

pub fn hopca_approximate(
    u: &BlackBox,
    tree: &DimensionTree,
    active: &ActiveSet,
    spaces: &[FeatureSpace],
    policy: &BudgetPolicy,
    seed: u64,
) -> Result<(TreeTensor, HopcaReport), HopcaError> {
    hopca_approximate_with(u, tree, active, spaces, policy, seed, &HopcaOptions::default())
}

/// Output space of a processed node: its grid and its basis on that grid.
struct Processed {
    grid: Vec<Vec<f64>>,
    basis_at_grid: DMatrix<f64>,
}

#[allow(clippy::too_many_arguments)]
pub fn hopca_approximate_with(
    u: &BlackBox,
    tree: &DimensionTree,
    active: &ActiveSet,
    spaces: &[FeatureSpace],
    policy: &BudgetPolicy,
    seed: u64,
    options: &HopcaOptions,
) -> Result<(TreeTensor, HopcaReport), HopcaError> {
    policy.validate()?;
    active.validate(tree)?;
    let d = tree.d();
    for (what, got) in [("feature spaces", spaces.len()), ("black-box dimensions", u.d())] {
        if got != d {
            return Err(HopcaError::Layout { what, expected: d, got });
        }
    }
    let start = u.count();
    let tol = match *policy {
        BudgetPolicy::PrescribedTolerance {
            eps,
            local_rule: LocalRule::Eps,
            ..
        } => eps,
        BudgetPolicy::PrescribedTolerance {
            eps,
            local_rule: LocalRule::EpsOverSqrtA,
            ..
        } => eps / (active.len() as f64).sqrt(),
        BudgetPolicy::PrescribedRank { .. } => 0.0,
    };

    let mut done: Vec<Option<Processed>> = (0..tree.len()).map(|_| None).collect();
    let mut cores: Vec<Option<Core>> = vec![None; tree.len()];
    let mut nodes = Vec::new();

    for id in (0..tree.len()).rev() {
        if tree.is_leaf(id) && !active.contains(id) {
            let (grid, basis) = leaf_grid(tree, spaces, id, seed, options.candidates)?;
            done[id] = Some(Processed {
                grid,
                basis_at_grid: basis,
            });
        }
    }

    for id in nodes_bottom_up(tree, active) {
        let node = tree.node(id);
        let interp_err = |source| HopcaError::Interp {
            node: node.to_string(),
            source,
        };
        let (v_grid, v_interp, widths) = if tree.is_leaf(id) {
            let (grid, basis) = leaf_grid(tree, spaces, id, seed, options.candidates)?;
            let n = basis.nrows();
            (grid, ProductInterpolator::new(&[basis]), vec![n])
        } else {
            product_grid(tree, id, &done)
        };
        let dim_v = v_grid.len();

        let (rule, requested) = match policy {
            BudgetPolicy::PrescribedRank { ranks, .. } => {
                let r = rank_at(tree, ranks, id)?;
                if r > dim_v {
                    return Err(HopcaError::RankTooLarge {
                        node: node.to_string(),
                        rank: r,
                        available: dim_v,
                    });
                }
                (PcaRule::Rank(r), r)
            }
            BudgetPolicy::PrescribedTolerance { .. } => (PcaRule::Tolerance(tol), dim_v),
        };
        let m = policy.samples(requested, dim_v);

        let comp = node.complement(d);
        let mut label = vec![tag("samples")];
        label.extend(node.dims().iter().map(|&k| k as u64));
        let mut rng = RngStream::new(seed, &label);
        let samples: Vec<Vec<f64>> = (0..m)
            .map(|_| comp.iter().map(|&k| u.measures()[k].sample_one(&mut rng)).collect())
            .collect();

        let values = partial_sample_matrix(u, node, &v_grid, &samples)?;
        let coeffs = v_interp.solve(&values).map_err(interp_err)?;
        let pca = empirical_pca(&coeffs, rule)?;
        let on_grid = v_interp.apply(&pca.components).map_err(interp_err)?;
        let magic = magic_points(&on_grid).map_err(interp_err)?;

        let mut shape = vec![pca.rank];
        shape.extend(widths);
        cores[id] = Some(Core::new(shape, pca.components.as_slice().to_vec()));
        done[id] = Some(Processed {
            grid: magic.point_indices().iter().map(|&i| v_grid[i].clone()).collect(),
            basis_at_grid: magic.interp_matrix().clone(),
        });
        nodes.push(NodeResult {
            node: node.clone(),
            components: pca.components.transpose(),
            singular_values: pca.singular_values,
            v_grid,
            magic_indices: magic.point_indices().to_vec(),
            samples: m,
            clamped: pca.clamped,
        });
    }

    let root = tree.root();
    let (grid, interp, widths) = product_grid(tree, root, &done);
    let values = partial_sample_matrix(u, tree.node(root), &grid, &[vec![]])?;
    let coeffs = interp.solve(&values).map_err(|source| HopcaError::Interp {
        node: tree.node(root).to_string(),
        source,
    })?;
    cores[root] = Some(Core::new(widths, coeffs.as_slice().to_vec()));

    let tt = TreeTensor::new(tree.clone(), active.clone(), spaces.to_vec(), cores, true)?;
    let report = HopcaReport {
        evaluations: u.count() - start,
        storage: tt.storage(),
        ranks: tt.ranks(),
        degenerate: nodes.iter().any(|n| n.clamped),
        nodes,
    };
    Ok((tt, report))
}

/// Magic grid of a leaf space inside its candidate pool.
fn leaf_grid(
    tree: &DimensionTree,
    spaces: &[FeatureSpace],
    id: usize,
    seed: u64,
    candidates: usize,
) -> Result<(Vec<Vec<f64>>, DMatrix<f64>), HopcaError> {
    let dim = tree.node(id).first_dim();
    let space = &spaces[dim];
    let mut rng = RngStream::new(seed, &[tag("candidates"), dim as u64]);
    let pool = space.candidate_grid(candidates, &mut rng);
    let b = space.eval(&pool)?;
    let magic = magic_points(&b).map_err(|source| HopcaError::Interp {
        node: tree.node(id).to_string(),
        source,
    })?;
    let grid = magic.point_indices().iter().map(|&i| vec![pool[i]]).collect();
    Ok((grid, magic.interp_matrix().clone()))
}

/// Product of the sons' grids, row-major over sons in son order, with
/// coordinates laid out over the node's sorted dimensions.
fn product_grid(
    tree: &DimensionTree,
    id: usize,
    done: &[Option<Processed>],
) -> (Vec<Vec<f64>>, ProductInterpolator, Vec<usize>) {
    let node = tree.node(id);
    let sons: Vec<&Processed> = tree
        .sons(id)
        .iter()
        .map(|&s| done[s].as_ref().expect("sons processed first"))
        .collect();
    let widths: Vec<usize> = sons.iter().map(|p| p.grid.len()).collect();
    // where each son's coordinates land in the parent point
    let slots: Vec<Vec<usize>> = tree
        .sons(id)
        .iter()
        .map(|&s| {
            tree.node(s)
                .dims()
                .iter()
                .map(|k| node.dims().binary_search(k).expect("son dims inside parent"))
                .collect()
        })
        .collect();
    let total: usize = widths.iter().product();
    let mut grid = Vec::with_capacity(total);
    let mut idx = vec![0usize; sons.len()];
    for _ in 0..total {
        let mut x = vec![0.0; node.len()];
        for (j, p) in sons.iter().enumerate() {
            for (&slot, &v) in slots[j].iter().zip(&p.grid[idx[j]]) {
                x[slot] = v;
            }
        }
        grid.push(x);
        for k in (0..idx.len()).rev() {
            idx[k] += 1;
            if idx[k] < widths[k] {
                break;
            }
            idx[k] = 0;
        }
    }
    let mats: Vec<DMatrix<f64>> = sons.iter().map(|p| p.basis_at_grid.clone()).collect();
    (grid, ProductInterpolator::new(&mats), widths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dimtree::{build_tree, storage_complexity, TreeKind};

    fn uniform(d: usize) -> Vec<Measure1D> {
        vec![Measure1D::Uniform { a: -1.0, b: 1.0 }; d]
    }

    #[test]
    fn partial_samples_examples() {
        let one = BlackBox::new(uniform(3), |_| 1.0);
        let grid = vec![vec![0.1], vec![0.2]];
        let samples = vec![vec![0.3, 0.4], vec![0.5, 0.6], vec![0.0, 0.0]];
        let m = partial_sample_matrix(&one, &Node::new(vec![1]), &grid, &samples).unwrap();
        assert_eq!(m, DMatrix::from_element(2, 3, 1.0));

        let prod = BlackBox::new(uniform(2), |x| x[0] * x[1]);
        let m = partial_sample_matrix(&prod, &Node::new(vec![0]), &[vec![0.5], vec![-0.25]], &[vec![0.8]])
            .unwrap();
        assert_eq!(m.as_slice(), &[0.5 * 0.8, -0.25 * 0.8]);

        let before = prod.count();
        let grid: Vec<Vec<f64>> = (0..5).map(|k| vec![k as f64 / 10.0]).collect();
        let samples: Vec<Vec<f64>> = (0..3).map(|k| vec![k as f64 / 7.0]).collect();
        partial_sample_matrix(&prod, &Node::new(vec![1]), &grid, &samples).unwrap();
        assert_eq!(prod.count() - before, 15);
    }

    #[test]
    fn evaluator_failure_names_point() {
        let bad = BlackBox::fallible(uniform(2), |x| {
            if x[0] > 0.0 {
                Err("boom".into())
            } else {
                Ok(0.0)
            }
        });
        let err = partial_sample_matrix(&bad, &Node::new(vec![0]), &[vec![-0.5], vec![0.5]], &[vec![0.1]])
            .unwrap_err();
        assert!(matches!(err, HopcaError::Evaluator { ref point, .. } if point == &vec![0.5, 0.1]));
        let nan = BlackBox::new(uniform(1), |_| f64::NAN);
        assert!(matches!(
            nan.eval_batch(&[vec![0.0]]),
            Err(HopcaError::NonFinite { .. })
        ));
    }

    #[test]
    fn pca_examples() {
        let col = [1.0, 2.0, -2.0];
        let a = DMatrix::from_fn(3, 2, |i, _| col[i]);
        let pca = empirical_pca(&a, PcaRule::Tolerance(1e-8)).unwrap();
        assert_eq!(pca.rank, 1);
        let c = pca.components.column(0);
        let sign = c[0].signum();
        for i in 0..3 {
            assert!((sign * c[i] - col[i] / 3.0).abs() < 1e-14);
        }

        let a = DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 4.0]);
        let pca = empirical_pca(&a, PcaRule::Rank(1)).unwrap();
        assert!((pca.components[(1, 0)].abs() - 1.0).abs() < 1e-14);
        assert!(pca.components[(0, 0)].abs() < 1e-14);

        let mut rng = RngStream::new(9, &[0]);
        let g = |rng: &mut RngStream, n| DMatrix::from_vec(n, 1, Measure1D::StdGaussian.sample(n, rng));
        let a = g(&mut rng, 6) * g(&mut rng, 5).transpose() + g(&mut rng, 6) * g(&mut rng, 5).transpose();
        let pca = empirical_pca(&a, PcaRule::Tolerance(1e-10)).unwrap();
        assert_eq!(pca.rank, 2);
        assert!(pca.singular_values[2] <= 1e-10 * pca.singular_values[0]);

        assert!(matches!(
            empirical_pca(&DMatrix::zeros(0, 3), PcaRule::Rank(1)),
            Err(HopcaError::EmptySamples)
        ));
        let zero = empirical_pca(&DMatrix::zeros(3, 3), PcaRule::Tolerance(1e-6)).unwrap();
        assert!(zero.clamped && zero.rank == 1);
    }

    #[test]
    fn predicted_examples() {
        let (t, a) = build_tree(TreeKind::Tt, 10).unwrap();
        let ranks = RankTuple::uniform(&t, &a, 3);
        let policy = BudgetPolicy::PrescribedRank {
            ranks: ranks.clone(),
            gamma: 1.0,
        };
        assert_eq!(predicted_evaluations(&t, &a, &ranks, &[5; 10], &policy).unwrap(), 390);
        assert_eq!(storage_complexity(&t, &a, &ranks, &[5; 10]).unwrap(), 390);

        let (t, a) = build_tree(TreeKind::Tucker, 2).unwrap();
        let ranks = RankTuple::uniform(&t, &a, 1);
        let policy = BudgetPolicy::tolerance(1e-3);
        assert_eq!(predicted_evaluations(&t, &a, &ranks, &[2, 2], &policy).unwrap(), 9);
    }

    #[test]
    fn tensorize_examples() {
        let f = tensorize(|t| t, 3);
        assert_eq!(f.eval_batch(&[vec![1.0, 0.0, 1.0]]).unwrap(), vec![5.0 / 8.0]);
        let g = tensorize(|t| t + 7.0, 1);
        assert_eq!(g.eval_batch(&[vec![0.0]]).unwrap(), vec![7.0]);
        assert_eq!(g.count(), 1);
    }

    fn elementary(d: usize) -> BlackBox {
        BlackBox::new(uniform(d), |x| {
            x.iter()
                .enumerate()
                .map(|(k, &v)| 1.0 + 0.3 * v - 0.2 * (k as f64 + 1.0) * v * v)
                .product()
        })
    }

    #[test]
    fn rank_one_recovery_on_every_tree() {
        for kind in [TreeKind::Tucker, TreeKind::Tt, TreeKind::Ttt, TreeKind::Balanced] {
            let d = 5;
            let u = elementary(d);
            let (t, a) = build_tree(kind, d).unwrap();
            let spaces = vec![FeatureSpace::legendre(2); d];
            let ranks = RankTuple::uniform(&t, &a, 1);
            let policy = BudgetPolicy::PrescribedRank { ranks: ranks.clone(), gamma: 1.0 };
            let (tt, report) = hopca_approximate(&u, &t, &a, &spaces, &policy, 3).unwrap();
            assert_eq!(report.evaluations, report.storage, "{kind}");
            assert_eq!(
                report.evaluations,
                predicted_evaluations(&t, &a, &ranks, &tt.leaf_dims(), &policy).unwrap()
            );
            let pts = u.sample_points(200, &mut RngStream::new(77, &[0]));
            let exact = u.eval_uncounted(&pts).unwrap();
            let approx = tt.eval(&pts).unwrap();
            let err: f64 = exact.iter().zip(&approx).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let norm: f64 = exact.iter().map(|a| a * a).sum::<f64>().sqrt();
            assert!(err <= 1e-10 * norm, "{kind}: {err}");
            for n in &report.nodes {
                if n.singular_values.len() > 1 {
                    assert!(n.singular_values[1] <= 1e-12 * n.singular_values[0], "{kind} {}", n.node);
                }
            }
        }
    }

    #[test]
    fn deterministic_for_seed() {
        let (t, a) = build_tree(TreeKind::Balanced, 4).unwrap();
        let spaces = vec![FeatureSpace::legendre(3); 4];
        let policy = BudgetPolicy::tolerance(1e-6);
        let f = |x: &[f64]| (x[0] + 0.5 * x[1] - x[2] * x[3]).cos();
        let (t1, r1) = hopca_approximate(&BlackBox::new(uniform(4), f), &t, &a, &spaces, &policy, 11).unwrap();
        let (t2, r2) = hopca_approximate(&BlackBox::new(uniform(4), f), &t, &a, &spaces, &policy, 11).unwrap();
        assert_eq!(t1, t2);
        assert_eq!(r1, r2);
        let (t3, _) = hopca_approximate(&BlackBox::new(uniform(4), f), &t, &a, &spaces, &policy, 12).unwrap();
        assert_ne!(t1, t3);
    }

    #[test]
    fn rank_request_checked() {
        let (t, a) = build_tree(TreeKind::Tt, 3).unwrap();
        let spaces = vec![FeatureSpace::legendre(1); 3];
        let policy = BudgetPolicy::PrescribedRank {
            ranks: RankTuple::uniform(&t, &a, 3),
            gamma: 1.0,
        };
        let err = hopca_approximate(&elementary(3), &t, &a, &spaces, &policy, 0).unwrap_err();
        assert!(matches!(err, HopcaError::RankTooLarge { rank: 3, available: 2, .. }), "{err}");
        let bad = BudgetPolicy::PrescribedRank {
            ranks: RankTuple::uniform(&t, &a, 1),
            gamma: 0.5,
        };
        assert!(matches!(
            hopca_approximate(&elementary(3), &t, &a, &spaces, &bad, 0),
            Err(HopcaError::Policy(_))
        ));
    }

    #[test]
    fn zero_function_is_flagged() {
        let (t, a) = build_tree(TreeKind::Tt, 3).unwrap();
        let spaces = vec![FeatureSpace::legendre(2); 3];
        let policy = BudgetPolicy::tolerance(1e-4);
        let u = BlackBox::new(uniform(3), |_| 0.0);
        let (tt, report) = hopca_approximate(&u, &t, &a, &spaces, &policy, 0).unwrap();
        assert!(report.degenerate);
        assert_eq!(tt.norm().unwrap(), 0.0);
    }
}
