//! Equality-constrained weighted group-sparse representation by ADMM.
//!
//! One solver serves all four classifier kinds:
//!
//! ```text
//! min_M  sum_j w_j ||M_{G_j}||_F   s.t.  D M = T
//! ```
//!
//! split as `Z = M` and iterated with two multipliers. Blocks `G_j` run
//! along rows of `M` for forward kinds (atoms grouped by class) and along
//! columns for inverse kinds (training-sample representations grouped by
//! class).

use nalgebra::{Cholesky, DMatrix};
use serde::{Deserialize, Serialize};

use crate::dictionary::VariationDictionary;
use crate::error::{Error, Result};

/// Which axis of the coefficient matrix the group blocks partition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GroupAxis {
    Rows,
    Columns,
}

/// The four classifier kinds built on this solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClassifierKind {
    Src,
    Gsrc,
    Iprc,
    Ipgsrc,
}

impl ClassifierKind {
    /// Inverse kinds represent training samples over test atoms and
    /// classify by category contribution rate.
    pub fn is_inverse(self) -> bool {
        matches!(self, ClassifierKind::Iprc | ClassifierKind::Ipgsrc)
    }
}

impl std::fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ClassifierKind::Src => "src",
            ClassifierKind::Gsrc => "gsrc",
            ClassifierKind::Iprc => "iprc",
            ClassifierKind::Ipgsrc => "ipgsrc",
        };
        write!(f, "{s}")
    }
}

impl std::str::FromStr for ClassifierKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "src" => Ok(ClassifierKind::Src),
            "gsrc" => Ok(ClassifierKind::Gsrc),
            "iprc" => Ok(ClassifierKind::Iprc),
            "ipgsrc" => Ok(ClassifierKind::Ipgsrc),
            other => Err(Error::config(format!("unknown classifier kind '{other}'"))),
        }
    }
}

/// Per-block weighting convention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WeightScheme {
    /// `w_j = sqrt(|G_j|)`
    SqrtSize,
    /// `w_j = 1`
    Unit,
}

impl std::str::FromStr for WeightScheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sqrt" => Ok(WeightScheme::SqrtSize),
            "unit" => Ok(WeightScheme::Unit),
            other => Err(Error::config(format!("unknown weight scheme '{other}'"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct GroupSparseProblem {
    /// `m x d` atom matrix
    pub dictionary: DMatrix<f64>,
    /// `m x t` targets
    pub targets: DMatrix<f64>,
    /// blocks along `axis` of the `d x t` coefficient matrix
    pub groups: Vec<Vec<usize>>,
    pub axis: GroupAxis,
    pub weights: Vec<f64>,
}

impl GroupSparseProblem {
    pub fn validate(&self) -> Result<()> {
        if self.dictionary.nrows() != self.targets.nrows() {
            return Err(Error::data("dictionary and targets must share row dimension"));
        }
        if self.weights.len() != self.groups.len() {
            return Err(Error::data("one weight per group required"));
        }
        if self.weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::data("weights must be nonnegative"));
        }
        let extent = match self.axis {
            GroupAxis::Rows => self.dictionary.ncols(),
            GroupAxis::Columns => self.targets.ncols(),
        };
        let mut seen = vec![false; extent];
        for block in &self.groups {
            if block.is_empty() {
                return Err(Error::data("empty group block"));
            }
            for &i in block {
                if i >= extent || seen[i] {
                    return Err(Error::data("groups must partition the block axis"));
                }
                seen[i] = true;
            }
        }
        if seen.iter().any(|&s| !s) {
            return Err(Error::data("groups must cover the block axis"));
        }
        Ok(())
    }
}

/// Penalties, step lengths and stopping controls.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverOptions {
    pub beta1: f64,
    pub beta2: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub tol_primal: f64,
    pub max_iter: usize,
    /// optional absolute feasibility target replacing the relative one
    pub noise_eps: Option<f64>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            beta1: 1.0,
            beta2: 1.0,
            gamma1: 1.618,
            gamma2: 1.618,
            tol_primal: 1e-6,
            max_iter: 2000,
            noise_eps: None,
        }
    }
}

const GOLDEN_STEP_LIMIT: f64 = 1.618033988749895;

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta1 > 0.0) || !(self.beta2 > 0.0) {
            return Err(Error::config("beta1 and beta2 must be positive"));
        }
        for (name, g) in [("gamma1", self.gamma1), ("gamma2", self.gamma2)] {
            if !(g > 0.0 && g < GOLDEN_STEP_LIMIT + 1e-12) {
                return Err(Error::config(format!(
                    "{name} must lie in (0, (1+sqrt(5))/2), got {g}"
                )));
            }
        }
        if !(self.tol_primal > 0.0) {
            return Err(Error::config("tol_primal must be positive"));
        }
        if self.max_iter == 0 {
            return Err(Error::config("max_iter must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SolverIterRecord {
    pub iter: usize,
    /// `||Z - M||_F`
    pub split_residual: f64,
    /// `||D M - T||_F`
    pub feasibility_residual: f64,
    /// `sum_j w_j ||Z_{G_j}||_F`
    pub objective: f64,
}

#[derive(Debug, Clone)]
pub struct IpgsrSolution {
    pub coefficients: DMatrix<f64>,
    pub auxiliary: DMatrix<f64>,
    pub lambda1: DMatrix<f64>,
    pub lambda2: DMatrix<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub history: Vec<SolverIterRecord>,
}

fn block_norm(mat: &DMatrix<f64>, block: &[usize], axis: GroupAxis) -> f64 {
    let mut sq = 0.0;
    match axis {
        GroupAxis::Rows => {
            for &i in block {
                sq += mat.row(i).norm_squared();
            }
        }
        GroupAxis::Columns => {
            for &j in block {
                sq += mat.column(j).norm_squared();
            }
        }
    }
    sq.sqrt()
}

fn scale_block(mat: &mut DMatrix<f64>, block: &[usize], axis: GroupAxis, factor: f64) {
    match axis {
        GroupAxis::Rows => {
            for &i in block {
                mat.row_mut(i).scale_mut(factor);
            }
        }
        GroupAxis::Columns => {
            for &j in block {
                mat.column_mut(j).scale_mut(factor);
            }
        }
    }
}

/// Block-wise radial shrink: each block is scaled by
/// `max(1 - tau_j / ||block||_F, 0)`, with `0 * 0/0 = 0`.
pub fn group_shrink(
    gamma: &DMatrix<f64>,
    groups: &[Vec<usize>],
    axis: GroupAxis,
    thresholds: &[f64],
) -> DMatrix<f64> {
    let mut out = gamma.clone();
    for (block, &tau) in groups.iter().zip(thresholds) {
        let norm = block_norm(gamma, block, axis);
        let factor = if norm > tau { (norm - tau) / norm } else { 0.0 };
        scale_block(&mut out, block, axis, factor);
    }
    out
}

/// `sum_j w_j ||Z_{G_j}||_F`
pub fn group_objective(
    z: &DMatrix<f64>,
    groups: &[Vec<usize>],
    axis: GroupAxis,
    weights: &[f64],
) -> f64 {
    groups
        .iter()
        .zip(weights)
        .map(|(block, &w)| w * block_norm(z, block, axis))
        .sum()
}

/// Runs the two-block ADMM of the representation problem.
///
/// The `d x d` system matrix `beta1 I + beta2 D^T D` is positive definite
/// for `beta1 > 0`; its Cholesky factor is computed once and reused.
pub fn ipgsr_solve(problem: &GroupSparseProblem, opts: &SolverOptions) -> Result<IpgsrSolution> {
    problem.validate()?;
    opts.validate()?;
    let d_mat = &problem.dictionary;
    let t_mat = &problem.targets;
    if d_mat.iter().chain(t_mat.iter()).any(|v| !v.is_finite()) {
        return Err(Error::numerical("solver inputs contain non-finite values"));
    }
    let d = d_mat.ncols();
    let t = t_mat.ncols();
    if d == 0 || t == 0 {
        return Err(Error::data("empty dictionary or target set"));
    }

    let d_t = d_mat.transpose();
    let gram = &d_t * d_mat;
    let system = DMatrix::identity(d, d) * opts.beta1 + &gram * opts.beta2;
    let chol = Cholesky::new(system)
        .expect("beta1 I + beta2 D^T D is positive definite for beta1 > 0");
    let dt_t = &d_t * t_mat;

    let thresholds: Vec<f64> = problem.weights.iter().map(|w| w / opts.beta1).collect();
    let norm_t = t_mat.norm();

    let mut m = DMatrix::zeros(d, t);
    let mut z = DMatrix::zeros(d, t);
    let mut lambda1 = DMatrix::zeros(d, t);
    let mut lambda2 = DMatrix::zeros(d_mat.nrows(), t);

    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    let mut stalled = 0usize;
    for iter in 1..=opts.max_iter {
        iterations = iter;
        // (1) closed-form M step
        let rhs = -&lambda1 + &z * opts.beta1 + &d_t * &lambda2 + &dt_t * opts.beta2;
        let m_next = chol.solve(&rhs);
        let step = (&m_next - &m).norm();
        m = m_next;
        // (2) block shrink
        z = group_shrink(&(&m + &lambda1 / opts.beta1), &problem.groups, problem.axis, &thresholds);
        // (3)-(4) multiplier updates
        let split = &z - &m;
        let feas = d_mat * &m - t_mat;
        lambda1 -= opts.gamma1 * opts.beta1 * &split;
        lambda2 -= opts.gamma2 * opts.beta2 * &feas;

        let split_residual = split.norm();
        let feasibility_residual = feas.norm();
        history.push(SolverIterRecord {
            iter,
            split_residual,
            feasibility_residual,
            objective: group_objective(&z, &problem.groups, problem.axis, &problem.weights),
        });

        let feas_target = opts
            .noise_eps
            .unwrap_or(opts.tol_primal * norm_t.max(1.0));
        if split_residual <= opts.tol_primal * m.norm().max(1.0) && feasibility_residual <= feas_target
        {
            converged = true;
            break;
        }
        // When the equality constraint is infeasible (fewer atoms than
        // rows), the feasibility residual plateaus at the projection
        // distance while the iterate itself settles. Once both the split
        // residual and the change in M sit below tolerance for a stretch
        // of iterations, further sweeps only grow the multiplier along
        // the infeasible direction — exit with converged = false.
        let settle = 0.1 * opts.tol_primal * m.norm().max(1.0);
        if step <= settle && split_residual <= settle {
            stalled += 1;
            if stalled >= 10 {
                break;
            }
        } else {
            stalled = 0;
        }
    }

    Ok(IpgsrSolution {
        coefficients: m,
        auxiliary: z,
        lambda1,
        lambda2,
        iterations,
        converged,
        history,
    })
}

fn singleton_groups(n: usize) -> Vec<Vec<usize>> {
    (0..n).map(|i| vec![i]).collect()
}

fn weights_for(groups: &[Vec<usize>], scheme: WeightScheme) -> Vec<f64> {
    groups
        .iter()
        .map(|g| match scheme {
            WeightScheme::SqrtSize => (g.len() as f64).sqrt(),
            WeightScheme::Unit => 1.0,
        })
        .collect()
}

/// Instantiates the representation problem for one classifier kind.
///
/// Inverse kinds represent the training sparse parts over test atoms, so
/// class blocks index columns of the coefficient matrix; forward kinds
/// represent test samples over training atoms, so class blocks index rows.
pub fn make_problem(
    kind: ClassifierKind,
    dict: &VariationDictionary,
    scheme: WeightScheme,
) -> GroupSparseProblem {
    let class_blocks = dict.groups.blocks.clone();
    let n_train = dict.train_sparse.ncols();
    let (dictionary, targets, groups, axis) = match kind {
        ClassifierKind::Ipgsrc => (
            dict.test_sparse.clone(),
            dict.train_sparse.clone(),
            class_blocks,
            GroupAxis::Columns,
        ),
        ClassifierKind::Iprc => (
            dict.test_sparse.clone(),
            dict.train_sparse.clone(),
            singleton_groups(n_train),
            GroupAxis::Columns,
        ),
        ClassifierKind::Gsrc => (
            dict.train_sparse.clone(),
            dict.test_sparse.clone(),
            class_blocks,
            GroupAxis::Rows,
        ),
        ClassifierKind::Src => (
            dict.train_sparse.clone(),
            dict.test_sparse.clone(),
            singleton_groups(n_train),
            GroupAxis::Rows,
        ),
    };
    let weights = weights_for(&groups, scheme);
    GroupSparseProblem {
        dictionary,
        targets,
        groups,
        axis,
        weights,
    }
}
