//! Minimum-cost rectangular assignment (Hungarian algorithm with potentials).
//!
//! Rows are at most as many as columns and every row is saturated. Among
//! optimal assignments the lexicographically smallest column vector is
//! returned, so results are reproducible when costs tie.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::tree::Label;

/// Cost matrix between two label lists, `rows.len() <= cols.len()`.
#[derive(Clone, Debug, PartialEq)]
pub struct AssignmentProblem {
    pub rows: Vec<Label>,
    pub cols: Vec<Label>,
    pub cost: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Assignment {
    pub pairs: BTreeMap<Label, Label>,
    pub cost: f64,
}

/// Solves a labeled assignment problem.
pub fn solve_assignment(p: &AssignmentProblem) -> Result<Assignment> {
    if p.cost.len() != p.rows.len() || p.cost.iter().any(|r| r.len() != p.cols.len()) {
        return Err(Error::input("cost matrix shape does not match row and column labels"));
    }
    let (cols, cost) = solve(&p.cost)?;
    let pairs = p
        .rows
        .iter()
        .zip(cols)
        .map(|(&r, c)| (r, p.cols[c]))
        .collect();
    Ok(Assignment { pairs, cost })
}

/// Index-level solver: returns the chosen column of every row and the total
/// cost summed in row order.
pub fn solve(cost: &[Vec<f64>]) -> Result<(Vec<usize>, f64)> {
    let n = cost.len();
    if n == 0 {
        return Ok((Vec::new(), 0.0));
    }
    let m = cost[0].len();
    if cost.iter().any(|r| r.len() != m) {
        return Err(Error::input("cost matrix rows have different lengths"));
    }
    if n > m {
        return Err(Error::input(format!(
            "{n} rows cannot be saturated by {m} columns"
        )));
    }
    if cost.iter().flatten().any(|c| !c.is_finite()) {
        return Err(Error::input("costs must be finite"));
    }

    let all_rows: Vec<usize> = (0..n).collect();
    let all_cols: Vec<usize> = (0..m).collect();
    let mut current = hungarian(cost, &all_rows, &all_cols);
    let optimum = total(cost, &all_rows, &current);
    let tol = 1e-12 * (1.0 + optimum.abs());

    // Walk rows in order, moving each to the smallest column that still
    // admits an optimal completion.
    let mut used = vec![false; m];
    let mut prefix = 0.0;
    for r in 0..n {
        let rest: Vec<usize> = ((r + 1)..n).collect();
        for c in 0..current[r] {
            if used[c] {
                continue;
            }
            let free: Vec<usize> = (0..m).filter(|&k| !used[k] && k != c).collect();
            let sub = hungarian(cost, &rest, &free);
            let sub_cost = total(cost, &rest, &sub);
            if prefix + cost[r][c] + sub_cost <= optimum + tol {
                current[r] = c;
                current[(r + 1)..].copy_from_slice(&sub);
                break;
            }
        }
        used[current[r]] = true;
        prefix += cost[r][current[r]];
    }
    let cost_sum = total(cost, &all_rows, &current);
    Ok((current, cost_sum))
}

fn total(cost: &[Vec<f64>], rows: &[usize], cols: &[usize]) -> f64 {
    rows.iter().zip(cols).map(|(&r, &c)| cost[r][c]).sum()
}

/// Optimal assignment of `rows` into `cols` (sub-problem of `cost`), returned
/// as the chosen column (an original index) for each row in `rows` order.
fn hungarian(cost: &[Vec<f64>], rows: &[usize], cols: &[usize]) -> Vec<usize> {
    let n = rows.len();
    let m = cols.len();
    if n == 0 {
        return Vec::new();
    }
    debug_assert!(n <= m);
    let a = |i: usize, j: usize| cost[rows[i - 1]][cols[j - 1]];
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![inf; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = a(i0, j) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut out = vec![0usize; n];
    for j in 1..=m {
        if p[j] != 0 {
            out[p[j] - 1] = cols[j - 1];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_by_one() {
        let p = AssignmentProblem {
            rows: vec![Label(4)],
            cols: vec![Label(9)],
            cost: vec![vec![7.0]],
        };
        let a = solve_assignment(&p).unwrap();
        assert_eq!(a.pairs, BTreeMap::from([(Label(4), Label(9))]));
        assert_eq!(a.cost, 7.0);
    }

    #[test]
    fn identity_favoring() {
        let cost: Vec<Vec<f64>> = (0..4)
            .map(|i| (0..4).map(|j| if i == j { 0.0 } else { 1.0 }).collect())
            .collect();
        assert_eq!(solve(&cost).unwrap(), (vec![0, 1, 2, 3], 0.0));
    }

    #[test]
    fn ties_pick_lexicographically_smallest() {
        let cost = vec![vec![1.0; 3]; 3];
        assert_eq!(solve(&cost).unwrap().0, vec![0, 1, 2]);
        let cost = vec![vec![2.0, 1.0, 1.0], vec![1.0, 2.0, 1.0]];
        // optimum 2 reachable by [1,0], [1,2], [2,0]; smallest is [1,0]
        assert_eq!(solve(&cost).unwrap(), (vec![1, 0], 2.0));
    }

    #[test]
    fn rectangular() {
        let cost = vec![vec![5.0, 1.0, 3.0], vec![2.0, 4.0, 0.5]];
        assert_eq!(solve(&cost).unwrap(), (vec![1, 2], 1.5));
    }

    #[test]
    fn errors() {
        assert!(matches!(solve(&[vec![1.0], vec![2.0]]), Err(Error::Input(_))));
        assert!(matches!(solve(&[vec![f64::NAN]]), Err(Error::Input(_))));
        assert!(matches!(solve(&[vec![f64::INFINITY, 1.0]]), Err(Error::Input(_))));
        assert!(solve(&[]).unwrap().0.is_empty());
    }
}
