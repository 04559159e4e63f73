//! Regular vine copulas: structure, sequential fitting, density and the
//! Rosenblatt transform.
//!
//! Data are passed column-major: `columns[k]` is the series of the variable
//! with label `k + 1`.

mod matrix;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use matrix::{MatrixError, RVineMatrix};
use matrix::Plan;

use crate::copula::{clamp_unit, select_family, CopulaError, FamilyTag, PairCopula, Selection};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VineError {
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error("expected {expected} columns, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("columns have unequal lengths")]
    RaggedColumns,
    #[error("{got} rows, need at least {needed} (20 per variable)")]
    TooFewRows { got: usize, needed: usize },
    #[error("value {value} in column {column} is outside (0, 1)")]
    DomainError { column: usize, value: f64 },
    #[error("expected {expected} edges, got {got}")]
    EdgeCount { expected: usize, got: usize },
    #[error("edge in tree {tree}, column {col}: {source}")]
    Edge {
        tree: usize,
        col: usize,
        #[source]
        source: CopulaError,
    },
}

/// One fitted pair-copula with its position in the vine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VineEdge {
    pub tree: usize,
    pub column: usize,
    /// First copula argument (off-diagonal label).
    pub first: usize,
    /// Second copula argument (diagonal label of the column).
    pub second: usize,
    pub conditioning: Vec<usize>,
    pub copula: PairCopula,
}

/// A vine structure plus one pair-copula per edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "VineModelRepr", into = "VineModelRepr")]
pub struct VineModel {
    structure: RVineMatrix,
    variable_names: Vec<String>,
    edges: Vec<VineEdge>,
    plan: Plan,
}

#[derive(Serialize, Deserialize)]
struct VineModelRepr {
    variables: Vec<String>,
    matrix: RVineMatrix,
    edges: Vec<EdgeRepr>,
}

#[derive(Serialize, Deserialize)]
struct EdgeRepr {
    tree: usize,
    column: usize,
    copula: PairCopula,
}

impl TryFrom<VineModelRepr> for VineModel {
    type Error = VineError;
    fn try_from(r: VineModelRepr) -> Result<Self, VineError> {
        let plan = r.matrix.build_plan()?;
        let mut copulas = Vec::with_capacity(plan.steps.len());
        for step in &plan.steps {
            let edge = r
                .edges
                .iter()
                .find(|e| e.tree == step.tree && e.column == step.col)
                .ok_or(VineError::EdgeCount {
                    expected: plan.steps.len(),
                    got: r.edges.len(),
                })?;
            copulas.push(edge.copula.clone());
        }
        if r.edges.len() != plan.steps.len() {
            return Err(VineError::EdgeCount {
                expected: plan.steps.len(),
                got: r.edges.len(),
            });
        }
        VineModel::new(r.matrix, r.variables, copulas)
    }
}

impl From<VineModel> for VineModelRepr {
    fn from(m: VineModel) -> Self {
        VineModelRepr {
            variables: m.variable_names,
            matrix: m.structure,
            edges: m
                .edges
                .into_iter()
                .map(|e| EdgeRepr {
                    tree: e.tree,
                    column: e.column,
                    copula: e.copula,
                })
                .collect(),
        }
    }
}

/// Full output of [`fit_vine_detailed`].
#[derive(Debug, Clone)]
pub struct VineFit {
    pub model: VineModel,
    /// Per edge (fitting order), the selection record.
    pub selections: Vec<Selection>,
    /// Per edge (fitting order), the pseudo-observations `(first, second)` it was fitted on.
    pub pseudo_obs: Vec<(Vec<f64>, Vec<f64>)>,
}

impl VineModel {
    /// Assembles a model; `copulas` are given in fitting order (tree by
    /// tree, columns left to right).
    pub fn new(
        structure: RVineMatrix,
        variable_names: Vec<String>,
        copulas: Vec<PairCopula>,
    ) -> Result<Self, VineError> {
        let d = structure.dim();
        if variable_names.len() != d {
            return Err(VineError::DimensionMismatch {
                expected: d,
                got: variable_names.len(),
            });
        }
        let plan = structure.build_plan()?;
        if copulas.len() != plan.steps.len() {
            return Err(VineError::EdgeCount {
                expected: plan.steps.len(),
                got: copulas.len(),
            });
        }
        let edges = plan
            .steps
            .iter()
            .zip(copulas)
            .map(|(s, copula)| VineEdge {
                tree: s.tree,
                column: s.col,
                first: s.b,
                second: s.a,
                conditioning: s.cond.clone(),
                copula,
            })
            .collect();
        Ok(Self {
            structure,
            variable_names,
            edges,
            plan,
        })
    }

    /// All edges independent.
    pub fn independent(structure: RVineMatrix, variable_names: Vec<String>) -> Result<Self, VineError> {
        let n = structure.dim() * (structure.dim() - 1) / 2;
        Self::new(structure, variable_names, vec![PairCopula::independence(); n])
    }

    pub fn dim(&self) -> usize {
        self.structure.dim()
    }

    pub fn structure(&self) -> &RVineMatrix {
        &self.structure
    }

    pub fn variable_names(&self) -> &[String] {
        &self.variable_names
    }

    pub fn edges(&self) -> &[VineEdge] {
        &self.edges
    }

    pub fn edge(&self, tree: usize, column: usize) -> Option<&VineEdge> {
        self.edges.iter().find(|e| e.tree == tree && e.column == column)
    }

    fn check_point(&self, point: &[f64]) -> Result<(), VineError> {
        if point.len() != self.dim() {
            return Err(VineError::DimensionMismatch {
                expected: self.dim(),
                got: point.len(),
            });
        }
        for (column, &value) in point.iter().enumerate() {
            if !(value > 0.0 && value < 1.0) {
                return Err(VineError::DomainError { column, value });
            }
        }
        Ok(())
    }

    /// Fills every slot for one observation and returns the log-density.
    fn forward(&self, point: &[f64], slots: &mut [f64]) -> f64 {
        slots[..point.len()].copy_from_slice(point);
        let mut ln = 0.0;
        for (step, edge) in self.plan.steps.iter().zip(&self.edges) {
            let (ub, ua) = (slots[step.in_b], slots[step.in_a]);
            let c = &edge.copula;
            ln += c.ln_pdf(ub, ua);
            slots[step.out_a] = clamp_unit(c.h_first(ub, ua));
            slots[step.out_b] = clamp_unit(c.h_second(ub, ua));
        }
        ln
    }

    pub fn log_density(&self, point: &[f64]) -> Result<f64, VineError> {
        self.check_point(point)?;
        let mut slots = vec![0.0; self.plan.n_slots];
        Ok(self.forward(point, &mut slots))
    }

    pub fn density(&self, point: &[f64]) -> Result<f64, VineError> {
        self.log_density(point).map(f64::exp)
    }

    /// Slot holding `F(label | all variables of its column)` for each label.
    fn rosenblatt_slots(&self) -> Vec<usize> {
        let d = self.dim();
        let mut out = vec![0; d];
        for col in 0..d {
            let a = self.structure.get(col, col);
            out[a - 1] = if col + 1 == d {
                a - 1
            } else {
                let top = d - 1 - col;
                self.plan
                    .steps
                    .iter()
                    .find(|s| s.col == col && s.tree == top)
                    .map(|s| s.out_a)
                    .expect("every column has a top edge")
            };
        }
        out
    }

    /// Rosenblatt transform of each row. The variable on the last diagonal
    /// position is copied; every other variable is conditioned on the
    /// variables to its right on the diagonal.
    pub fn rosenblatt(&self, columns: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, VineError> {
        let t = self.check_columns(columns)?;
        let d = self.dim();
        let targets = self.rosenblatt_slots();
        let mut slots = vec![0.0; self.plan.n_slots];
        let mut point = vec![0.0; d];
        let mut out = vec![Vec::with_capacity(t); d];
        for row in 0..t {
            for k in 0..d {
                point[k] = columns[k][row];
            }
            self.check_point(&point)?;
            self.forward(&point, &mut slots);
            for k in 0..d {
                out[k].push(slots[targets[k]]);
            }
        }
        Ok(out)
    }

    /// Inverse Rosenblatt transform of one row of independent uniforms.
    pub fn inverse_rosenblatt_point(&self, w: &[f64]) -> Result<Vec<f64>, VineError> {
        self.check_point(w)?;
        let d = self.dim();
        let mut slots = vec![0.0; self.plan.n_slots];
        for col in (0..d).rev() {
            let a = self.structure.get(col, col);
            // walk the column from its top tree down to tree 1
            let mut x = w[a - 1];
            for tree in (1..d - col).rev() {
                let (step, edge) = self.step(tree, col);
                x = edge
                    .copula
                    .h_first_inverse(clamp_unit(x), slots[step.in_b])
                    .map_err(|source| VineError::Edge { tree, col, source })?;
            }
            slots[a - 1] = clamp_unit(x);
            for tree in 1..d - col {
                let (step, edge) = self.step(tree, col);
                let (ub, ua) = (slots[step.in_b], slots[step.in_a]);
                slots[step.out_a] = clamp_unit(edge.copula.h_first(ub, ua));
                slots[step.out_b] = clamp_unit(edge.copula.h_second(ub, ua));
            }
        }
        Ok(slots[..d].to_vec())
    }

    fn step(&self, tree: usize, col: usize) -> (&matrix::Step, &VineEdge) {
        self.plan
            .steps
            .iter()
            .zip(&self.edges)
            .find(|(s, _)| s.tree == tree && s.col == col)
            .expect("edge exists for every (tree, column) below the diagonal")
    }

    /// Draws `n` rows from the model by inverse Rosenblatt, column-major.
    pub fn simulate(&self, n: usize, seed: u64) -> Result<Vec<Vec<f64>>, VineError> {
        let d = self.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = vec![Vec::with_capacity(n); d];
        let mut w = vec![0.0; d];
        for _ in 0..n {
            for x in w.iter_mut() {
                *x = crate::copula::open_uniform(&mut rng);
            }
            let u = self.inverse_rosenblatt_point(&w)?;
            for k in 0..d {
                out[k].push(u[k]);
            }
        }
        Ok(out)
    }

    fn check_columns(&self, columns: &[Vec<f64>]) -> Result<usize, VineError> {
        if columns.len() != self.dim() {
            return Err(VineError::DimensionMismatch {
                expected: self.dim(),
                got: columns.len(),
            });
        }
        let t = columns[0].len();
        if columns.iter().any(|c| c.len() != t) {
            return Err(VineError::RaggedColumns);
        }
        Ok(t)
    }
}

/// Sequential tree-by-tree selection and fit on pseudo-observations.
pub fn fit_vine(
    columns: &[Vec<f64>],
    structure: &RVineMatrix,
    variable_names: &[String],
    candidates: &[FamilyTag],
    alpha: Option<f64>,
) -> Result<VineModel, VineError> {
    fit_vine_detailed(columns, structure, variable_names, candidates, alpha).map(|f| f.model)
}

pub fn fit_vine_detailed(
    columns: &[Vec<f64>],
    structure: &RVineMatrix,
    variable_names: &[String],
    candidates: &[FamilyTag],
    alpha: Option<f64>,
) -> Result<VineFit, VineError> {
    let d = structure.dim();
    if columns.len() != d {
        return Err(VineError::DimensionMismatch {
            expected: d,
            got: columns.len(),
        });
    }
    let t = columns[0].len();
    if columns.iter().any(|c| c.len() != t) {
        return Err(VineError::RaggedColumns);
    }
    if d > 1 && t < 20 * d {
        return Err(VineError::TooFewRows { got: t, needed: 20 * d });
    }
    for (column, c) in columns.iter().enumerate() {
        if let Some(&value) = c.iter().find(|x| !(**x > 0.0 && **x < 1.0)) {
            return Err(VineError::DomainError { column, value });
        }
    }

    let plan = structure.build_plan()?;
    let mut slots: Vec<Vec<f64>> = vec![Vec::new(); plan.n_slots];
    for (k, c) in columns.iter().enumerate() {
        slots[k] = c.clone();
    }
    let mut selections = Vec::with_capacity(plan.steps.len());
    let mut pseudo_obs = Vec::with_capacity(plan.steps.len());
    for step in &plan.steps {
        let (ub, ua) = (&slots[step.in_b], &slots[step.in_a]);
        let sel = select_family(ub, ua, candidates, alpha).map_err(|source| VineError::Edge {
            tree: step.tree,
            col: step.col,
            source,
        })?;
        log::debug!(
            "tree {} edge ({},{}|{:?}): {}",
            step.tree,
            step.b,
            step.a,
            step.cond,
            sel.copula
        );
        let c = &sel.copula;
        let out_a: Vec<f64> = ub.iter().zip(ua).map(|(&x, &y)| clamp_unit(c.h_first(x, y))).collect();
        let out_b: Vec<f64> = ub.iter().zip(ua).map(|(&x, &y)| clamp_unit(c.h_second(x, y))).collect();
        pseudo_obs.push((ub.clone(), ua.clone()));
        slots[step.out_a] = out_a;
        slots[step.out_b] = out_b;
        selections.push(sel);
    }
    let copulas = selections.iter().map(|s| s.copula.clone()).collect();
    let model = VineModel::new(structure.clone(), variable_names.to_vec(), copulas)?;
    Ok(VineFit {
        model,
        selections,
        pseudo_obs,
    })
}

#[cfg(test)]
mod tests;
