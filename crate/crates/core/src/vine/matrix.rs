use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MatrixError {
    #[error("matrix must be square and non-empty")]
    NotSquare,
    #[error("entry ({row}, {col}) above the diagonal must be 0")]
    NotLowerTriangular { row: usize, col: usize },
    #[error("diagonal {0:?} is not a permutation of 1..=d")]
    InvalidDiagonal(Vec<usize>),
    #[error("column {col}: {reason}")]
    BadLabels { col: usize, reason: String },
    #[error("tree {tree}, column {col}: {reason}")]
    ProximityViolation {
        tree: usize,
        col: usize,
        reason: String,
    },
}

/// Validated lower-triangular R-vine matrix with 1-based variable labels.
///
/// Column `j`, row `i > j` (0-based) holds the edge of tree `d - i` joining
/// `M[i][j]` and `M[j][j]` given `M[i+1..d][j]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<usize>>", into = "Vec<Vec<usize>>")]
pub struct RVineMatrix {
    m: Vec<Vec<usize>>,
}

impl TryFrom<Vec<Vec<usize>>> for RVineMatrix {
    type Error = MatrixError;
    fn try_from(m: Vec<Vec<usize>>) -> Result<Self, MatrixError> {
        RVineMatrix::new(m)
    }
}

impl From<RVineMatrix> for Vec<Vec<usize>> {
    fn from(m: RVineMatrix) -> Self {
        m.m
    }
}

/// Slot-level description of one edge, in fitting order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Step {
    pub tree: usize,
    pub col: usize,
    /// Diagonal variable of the column (second copula argument).
    pub a: usize,
    /// Off-diagonal partner (first copula argument).
    pub b: usize,
    pub cond: Vec<usize>,
    pub in_b: usize,
    pub in_a: usize,
    pub out_a: usize,
    pub out_b: usize,
}

/// Evaluation plan: slots `0..d` hold the raw inputs for labels `1..=d`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Plan {
    pub steps: Vec<Step>,
    pub n_slots: usize,
}

impl RVineMatrix {
    pub fn new(m: Vec<Vec<usize>>) -> Result<Self, MatrixError> {
        let d = m.len();
        if d == 0 || m.iter().any(|row| row.len() != d) {
            return Err(MatrixError::NotSquare);
        }
        for (row, r) in m.iter().enumerate() {
            for (col, &x) in r.iter().enumerate().skip(row + 1) {
                if x != 0 {
                    return Err(MatrixError::NotLowerTriangular { row, col });
                }
            }
        }
        let diag: Vec<usize> = (0..d).map(|j| m[j][j]).collect();
        let mut sorted = diag.clone();
        sorted.sort_unstable();
        if sorted != (1..=d).collect::<Vec<_>>() {
            return Err(MatrixError::InvalidDiagonal(diag));
        }
        for col in 0..d {
            let allowed: BTreeSet<usize> = diag[col..].iter().copied().collect();
            let mut seen = BTreeSet::new();
            for row in col + 1..d {
                let x = m[row][col];
                let bad = |reason: String| MatrixError::BadLabels { col, reason };
                if x == 0 || x > d {
                    return Err(bad(format!("label {x} outside 1..={d}")));
                }
                if x == diag[col] {
                    return Err(bad(format!("label {x} repeats the diagonal entry")));
                }
                if !allowed.contains(&x) {
                    return Err(bad(format!("label {x} is not a diagonal entry at or right of this column")));
                }
                if !seen.insert(x) {
                    return Err(bad(format!("label {x} appears twice")));
                }
            }
        }
        let matrix = Self { m };
        matrix.build_plan()?;
        Ok(matrix)
    }

    pub fn dim(&self) -> usize {
        self.m.len()
    }

    pub fn get(&self, row: usize, col: usize) -> usize {
        self.m[row][col]
    }

    pub fn rows(&self) -> &[Vec<usize>] {
        &self.m
    }

    /// Canonical vine rooted at variable 1: diagonal `(d, d-1, ..., 1)` and
    /// every tree-`t` edge conditioned on `1..t-1`.
    pub fn default_structure(d: usize) -> Self {
        assert!(d >= 1, "dimension must be positive");
        let m = (0..d)
            .map(|i| (0..d).map(|j| if j <= i { if j == i { d - j } else { d - i } } else { 0 }).collect())
            .collect();
        Self::new(m).expect("canonical vine is valid")
    }

    /// Symbolic pass over the trees. Each edge must find its two inputs,
    /// `F(a | D)` and `F(b | D)`, among the outputs of the previous tree,
    /// and each tree must be a spanning tree over the previous tree's edges.
    pub(crate) fn build_plan(&self) -> Result<Plan, MatrixError> {
        let d = self.dim();
        let mut slots: HashMap<(usize, Vec<usize>), usize> = (1..=d).map(|v| ((v, Vec::new()), v - 1)).collect();
        let mut n_slots = d;
        let mut steps = Vec::with_capacity(d * (d - 1) / 2);
        // node id of each full set in the previous tree
        let mut prev_nodes: HashMap<Vec<usize>, usize> = (1..=d).map(|v| (vec![v], v - 1)).collect();

        for tree in 1..d {
            let row = d - tree;
            let mut parent: Vec<usize> = (0..prev_nodes.len()).collect();
            let mut nodes = HashMap::new();
            for col in 0..row {
                let a = self.m[col][col];
                let b = self.m[row][col];
                let mut cond: Vec<usize> = self.m[row + 1..].iter().map(|r| r[col]).collect();
                cond.sort_unstable();
                let violation = |reason: String| MatrixError::ProximityViolation { tree, col, reason };

                let in_a = *slots
                    .get(&(a, cond.clone()))
                    .ok_or_else(|| violation(format!("F({a} | {cond:?}) is not produced by tree {}", tree - 1)))?;
                let in_b = *slots
                    .get(&(b, cond.clone()))
                    .ok_or_else(|| violation(format!("F({b} | {cond:?}) is not produced by tree {}", tree - 1)))?;

                let joined = |x: usize| {
                    let mut s = cond.clone();
                    s.push(x);
                    s.sort_unstable();
                    s
                };
                let (na, nb) = (prev_nodes[&joined(a)], prev_nodes[&joined(b)]);
                let (ra, rb) = (find(&mut parent, na), find(&mut parent, nb));
                if ra == rb {
                    return Err(violation("edge closes a cycle in its tree".into()));
                }
                parent[ra] = rb;

                let mut full = joined(a);
                full.push(b);
                full.sort_unstable();
                if nodes.insert(full, nodes.len()).is_some() {
                    return Err(violation("duplicate edge".into()));
                }

                let out_a = n_slots;
                let out_b = n_slots + 1;
                n_slots += 2;
                slots.insert((a, joined(b)), out_a);
                slots.insert((b, joined(a)), out_b);
                steps.push(Step {
                    tree,
                    col,
                    a,
                    b,
                    cond,
                    in_b,
                    in_a,
                    out_a,
                    out_b,
                });
            }
            prev_nodes = nodes;
        }
        Ok(Plan { steps, n_slots })
    }
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accepts_three_dimensional_example() {
        let m = RVineMatrix::new(vec![vec![3, 0, 0], vec![2, 2, 0], vec![1, 1, 1]]).unwrap();
        assert_eq!(m, RVineMatrix::default_structure(3));
        let plan = m.build_plan().unwrap();
        let pairs: Vec<(usize, usize, usize, Vec<usize>)> =
            plan.steps.iter().map(|s| (s.tree, s.b, s.a, s.cond.clone())).collect();
        // (VPD, PRE), (VPD, PET) in tree 1 and (PET, PRE; VPD) in tree 2
        assert_eq!(pairs, vec![(1, 1, 3, vec![]), (1, 1, 2, vec![]), (2, 2, 3, vec![1])]);
    }

    #[test]
    fn trivial_and_two_dimensional() {
        let one = RVineMatrix::default_structure(1);
        assert_eq!(one.rows(), &[vec![1]]);
        assert!(one.build_plan().unwrap().steps.is_empty());
        let two = RVineMatrix::default_structure(2);
        assert_eq!(two.rows(), &[vec![2, 0], vec![1, 1]]);
    }

    #[test]
    fn rejects_invalid_matrices() {
        assert_eq!(
            RVineMatrix::new(vec![vec![1, 0], vec![1, 1]]),
            Err(MatrixError::InvalidDiagonal(vec![1, 1]))
        );
        assert!(matches!(
            RVineMatrix::new(vec![vec![2, 1], vec![1, 1]]),
            Err(MatrixError::NotLowerTriangular { .. })
        ));
        assert!(matches!(
            RVineMatrix::new(vec![vec![3, 0, 0], vec![3, 2, 0], vec![1, 1, 1]]),
            Err(MatrixError::BadLabels { .. })
        ));
        assert!(matches!(
            RVineMatrix::new(vec![vec![1, 0], vec![2]]),
            Err(MatrixError::NotSquare)
        ));
    }

    #[test]
    fn rejects_proximity_violation() {
        // Tree 1 is the path 4-1-2-3. Tree 2 then asks for (3, 4 | 1), which
        // needs F(3 | 1) from an edge 3-1 that does not exist.
        let m = vec![
            vec![4, 0, 0, 0],
            vec![2, 3, 0, 0],
            vec![3, 1, 2, 0],
            vec![1, 2, 1, 1],
        ];
        assert!(matches!(
            RVineMatrix::new(m),
            Err(MatrixError::ProximityViolation { .. })
        ));
    }

    #[test]
    fn d_vine_is_valid() {
        // path 1-2-3-4
        let m = vec![
            vec![4, 0, 0, 0],
            vec![1, 3, 0, 0],
            vec![2, 1, 2, 0],
            vec![3, 2, 1, 1],
        ];
        let v = RVineMatrix::new(m).unwrap();
        assert_eq!(v.build_plan().unwrap().steps.len(), 6);
    }

    #[test]
    fn default_structures_round_trip() {
        for d in 1..=8 {
            let m = RVineMatrix::default_structure(d);
            assert_eq!(RVineMatrix::new(m.rows().to_vec()).unwrap(), m);
            assert_eq!(m.build_plan().unwrap().steps.len(), d * (d - 1) / 2);
        }
    }
}
