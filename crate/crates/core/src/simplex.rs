//! Dense-tableau primal simplex with Bland's rule.
//!
//! Solves `min c'x  s.t.  A x = b, x >= 0` with a textbook two-phase
//! method. Problem sizes here are tiny (a handful of rows, at most a few
//! thousand columns), so a dense tableau is simpler and fast enough.
//! Bland's rule (smallest index enters, smallest basic index leaves on
//! ratio ties) guarantees termination under degeneracy.

const EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum SimplexError {
    Infeasible,
    Unbounded,
    IterationLimit,
}

impl std::fmt::Display for SimplexError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SimplexError::Infeasible => write!(f, "linear program is infeasible"),
            SimplexError::Unbounded => write!(f, "linear program is unbounded"),
            SimplexError::IterationLimit => write!(f, "simplex iteration limit exceeded"),
        }
    }
}

impl std::error::Error for SimplexError {}

#[derive(Debug, Clone)]
pub(crate) struct SimplexSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// Column indices of the final basic variables, one per row.
    pub basis: Vec<usize>,
}

/// Equality-form linear program. `rows[i]` holds the coefficients of
/// constraint `i` over the `num_vars` structural variables.
#[derive(Debug, Clone)]
pub(crate) struct StandardLp {
    pub num_vars: usize,
    pub rows: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
    pub cost: Vec<f64>,
}

pub(crate) fn solve(lp: &StandardLp) -> Result<SimplexSolution, SimplexError> {
    let m = lp.rows.len();
    let n = lp.num_vars;
    assert_eq!(lp.rhs.len(), m);
    assert_eq!(lp.cost.len(), n);

    // Tableau layout: n structural columns, m artificial columns, rhs.
    let cols = n + m;
    let mut t = vec![vec![0.0; cols + 1]; m];
    for i in 0..m {
        let sign = if lp.rhs[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            t[i][j] = sign * lp.rows[i][j];
        }
        t[i][n + i] = 1.0;
        t[i][cols] = sign * lp.rhs[i];
    }
    let mut basis: Vec<usize> = (n..n + m).collect();

    // Phase 1: minimize the sum of artificials.
    let mut phase1 = vec![0.0; cols];
    for j in n..cols {
        phase1[j] = 1.0;
    }
    let obj1 = run(&mut t, &mut basis, &phase1, cols)?;
    if obj1 > 1e-7 {
        return Err(SimplexError::Infeasible);
    }

    // Drive remaining artificials out of the basis; drop redundant rows.
    let mut keep = vec![true; m];
    for i in 0..m {
        if basis[i] >= n {
            let pivot_col = (0..n).find(|&j| t[i][j].abs() > EPS);
            match pivot_col {
                Some(j) => pivot(&mut t, &mut basis, i, j, cols),
                None => keep[i] = false, // redundant constraint
            }
        }
    }
    let mut t: Vec<Vec<f64>> = t
        .into_iter()
        .zip(keep.iter())
        .filter(|(_, &k)| k)
        .map(|(row, _)| row)
        .collect();
    basis = basis
        .into_iter()
        .zip(keep.iter())
        .filter(|(_, &k)| k)
        .map(|(b, _)| b)
        .collect();

    // Phase 2 over structural columns only; artificial columns are simply
    // never allowed to re-enter the basis.
    let mut phase2 = vec![0.0; cols];
    phase2[..n].copy_from_slice(&lp.cost);
    let objective = run_restricted(&mut t, &mut basis, &phase2, cols, n)?;

    let mut x = vec![0.0; n];
    for (i, &b) in basis.iter().enumerate() {
        if b < n {
            x[b] = t[i][cols];
        }
    }
    Ok(SimplexSolution {
        x,
        objective,
        basis,
    })
}

/// Run simplex allowing every column to enter. Returns the objective.
fn run(
    t: &mut [Vec<f64>],
    basis: &mut [usize],
    cost: &[f64],
    cols: usize,
) -> Result<f64, SimplexError> {
    run_restricted(t, basis, cost, cols, cols)
}

/// Run simplex allowing only columns `< enterable` to enter the basis.
fn run_restricted(
    t: &mut [Vec<f64>],
    basis: &mut [usize],
    cost: &[f64],
    cols: usize,
    enterable: usize,
) -> Result<f64, SimplexError> {
    let m = t.len();
    // Bland's rule never revisits a basis, so this cap is unreachable at
    // our problem sizes; it only guards against numerical corruption.
    let max_iters = 1_000_000;

    for _ in 0..max_iters {
        // With a full tableau (rows are B^{-1} A), the reduced cost of
        // column j is c_j - c_B' (B^{-1} a_j).
        let basic_cost: Vec<f64> = basis.iter().map(|&b| cost[b]).collect();

        // Bland: smallest-index column with negative reduced cost.
        let mut entering = None;
        for j in 0..enterable {
            if basis.contains(&j) {
                continue;
            }
            let reduced = cost[j] - (0..m).map(|i| basic_cost[i] * t[i][j]).sum::<f64>();
            if reduced < -EPS {
                entering = Some(j);
                break;
            }
        }
        let j = match entering {
            Some(j) => j,
            None => {
                let obj = basis
                    .iter()
                    .enumerate()
                    .map(|(i, &b)| cost[b] * t[i][cols])
                    .sum();
                return Ok(obj);
            }
        };

        // Ratio test; ties leave the smallest basic index (Bland).
        let mut leaving: Option<(usize, f64)> = None;
        for i in 0..m {
            if t[i][j] > EPS {
                let ratio = t[i][cols] / t[i][j];
                match leaving {
                    None => leaving = Some((i, ratio)),
                    Some((li, lr)) => {
                        if ratio < lr - EPS || (ratio < lr + EPS && basis[i] < basis[li]) {
                            leaving = Some((i, ratio));
                        }
                    }
                }
            }
        }
        let (row, _) = leaving.ok_or(SimplexError::Unbounded)?;
        pivot(t, basis, row, j, cols);
    }
    Err(SimplexError::IterationLimit)
}

fn pivot(t: &mut [Vec<f64>], basis: &mut [usize], row: usize, col: usize, cols: usize) {
    let scale = t[row][col];
    debug_assert!(scale.abs() > 1e-12);
    for v in t[row].iter_mut() {
        *v /= scale;
    }
    for i in 0..t.len() {
        if i != row && t[i][col].abs() > 0.0 {
            let factor = t[i][col];
            for j in 0..=cols {
                let delta = factor * t[row][j];
                t[i][j] -= delta;
            }
            t[i][col] = 0.0;
        }
    }
    basis[row] = col;
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lp(num_vars: usize, rows: Vec<Vec<f64>>, rhs: Vec<f64>, cost: Vec<f64>) -> StandardLp {
        StandardLp {
            num_vars,
            rows,
            rhs,
            cost,
        }
    }

    #[test]
    fn solves_small_equality_lp() {
        // min x0 + 2 x1  s.t.  x0 + x1 = 1
        let sol = solve(&lp(2, vec![vec![1.0, 1.0]], vec![1.0], vec![1.0, 2.0])).unwrap();
        assert!((sol.objective - 1.0).abs() < 1e-9);
        assert!((sol.x[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn handles_surplus_columns() {
        // min  3a + 3b  s.t.  2a - s1 = 1, 2b - s2 = 1, a + b = 1
        // (a = b = 1/2 forced by the >= 0.5 constraints and the mixing row)
        let sol = solve(&lp(
            4,
            vec![
                vec![2.0, 0.0, -1.0, 0.0],
                vec![0.0, 2.0, 0.0, -1.0],
                vec![1.0, 1.0, 0.0, 0.0],
            ],
            vec![1.0, 1.0, 1.0],
            vec![3.0, 3.0, 0.0, 0.0],
        ))
        .unwrap();
        assert!((sol.objective - 3.0).abs() < 1e-9);
        assert!((sol.x[0] - 0.5).abs() < 1e-9);
        assert!((sol.x[1] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn detects_infeasible() {
        // x0 = -1 with x0 >= 0 is infeasible.
        let out = solve(&lp(1, vec![vec![1.0]], vec![-1.0], vec![1.0]));
        assert_eq!(out.unwrap_err(), SimplexError::Infeasible);
    }

    #[test]
    fn detects_unbounded() {
        // min -x0 s.t. x0 - x1 = 0: both can grow without bound.
        let out = solve(&lp(2, vec![vec![1.0, -1.0]], vec![0.0], vec![-1.0, 0.0]));
        assert_eq!(out.unwrap_err(), SimplexError::Unbounded);
    }

    #[test]
    fn degenerate_problem_terminates() {
        // Redundant constraints force degenerate pivots.
        let sol = solve(&lp(
            2,
            vec![vec![1.0, 1.0], vec![2.0, 2.0], vec![1.0, 0.0]],
            vec![1.0, 2.0, 0.0],
            vec![1.0, 1.0],
        ))
        .unwrap();
        assert!((sol.objective - 1.0).abs() < 1e-9);
        assert!(sol.x[0].abs() < 1e-9);
    }
}
