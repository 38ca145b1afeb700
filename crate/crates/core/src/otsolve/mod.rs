//! Exact integer transportation problems.
//!
//! [`solve_transportation`] runs a primal transportation simplex on a
//! spanning-forest basis and returns the integer plan together with dual
//! potentials `(xi, phi)` satisfying `phi[l] - xi[k] <= cost[k][l]`, with
//! equality on every arc that carries flow. [`verify_certificate`] checks
//! those conditions independently of the solver.
//!
//! Forbidden arcs are removed from the graph, never priced with a big-M.

mod certificate;
mod simplex;

pub use certificate::{verify_certificate, CertificateFailure, CertificateReport};
pub use simplex::solve_transportation;

use crate::error::{Error, Result};

/// A transportation problem with integer masses.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportProblem {
    rows: usize,
    cols: usize,
    costs: Vec<f64>,
    admissible: Vec<bool>,
    supplies: Vec<u64>,
    demands: Vec<u64>,
}

impl TransportProblem {
    /// Dense problem with every arc admissible. `costs` must be rectangular
    /// with finite entries.
    pub fn new(costs: Vec<Vec<f64>>, supplies: Vec<u64>, demands: Vec<u64>) -> Result<Self> {
        let rows = costs.len();
        let cols = costs.first().map_or(0, Vec::len);
        if supplies.len() != rows {
            return Err(Error::Dimension(format!(
                "{} supplies for {rows} cost rows",
                supplies.len()
            )));
        }
        if demands.len() != cols {
            return Err(Error::Dimension(format!(
                "{} demands for {cols} cost columns",
                demands.len()
            )));
        }
        let mut flat = Vec::with_capacity(rows * cols);
        for (r, row) in costs.into_iter().enumerate() {
            if row.len() != cols {
                return Err(Error::Dimension(format!(
                    "cost row {r} has {} entries, expected {cols}",
                    row.len()
                )));
            }
            if let Some(c) = row.iter().find(|c| !c.is_finite()) {
                return Err(Error::domain(format!("non-finite cost {c} in row {r}")));
            }
            flat.extend(row);
        }
        Ok(Self {
            rows,
            cols,
            costs: flat,
            admissible: vec![true; rows * cols],
            supplies,
            demands,
        })
    }

    /// Removes every arc whose mask entry is `true`.
    pub fn with_forbidden(mut self, forbidden: &[Vec<bool>]) -> Result<Self> {
        if forbidden.len() != self.rows || forbidden.iter().any(|r| r.len() != self.cols) {
            return Err(Error::Dimension("forbidden mask shape differs from costs".into()));
        }
        for (r, row) in forbidden.iter().enumerate() {
            for (c, &f) in row.iter().enumerate() {
                if f {
                    self.admissible[r * self.cols + c] = false;
                }
            }
        }
        Ok(self)
    }

    pub fn forbid(&mut self, row: usize, col: usize) {
        self.admissible[row * self.cols + col] = false;
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn cost(&self, row: usize, col: usize) -> f64 {
        self.costs[row * self.cols + col]
    }

    pub fn is_admissible(&self, row: usize, col: usize) -> bool {
        self.admissible[row * self.cols + col]
    }

    pub fn supplies(&self) -> &[u64] {
        &self.supplies
    }

    pub fn demands(&self) -> &[u64] {
        &self.demands
    }

    pub fn is_balanced(&self) -> bool {
        self.supplies.iter().sum::<u64>() == self.demands.iter().sum::<u64>()
    }

    /// Balances the problem by appending a zero-cost slack row or column,
    /// admissible everywhere, that absorbs the excess.
    pub fn balanced(mut self) -> Self {
        let s: u64 = self.supplies.iter().sum();
        let d: u64 = self.demands.iter().sum();
        if s < d {
            self.costs.extend(std::iter::repeat_n(0.0, self.cols));
            self.admissible.extend(std::iter::repeat_n(true, self.cols));
            self.supplies.push(d - s);
            self.rows += 1;
        } else if d < s {
            let cols = self.cols + 1;
            let mut costs = Vec::with_capacity(self.rows * cols);
            let mut adm = Vec::with_capacity(self.rows * cols);
            for r in 0..self.rows {
                costs.extend_from_slice(&self.costs[r * self.cols..(r + 1) * self.cols]);
                costs.push(0.0);
                adm.extend_from_slice(&self.admissible[r * self.cols..(r + 1) * self.cols]);
                adm.push(true);
            }
            self.costs = costs;
            self.admissible = adm;
            self.demands.push(s - d);
            self.cols = cols;
        }
        self
    }

    /// Largest absolute admissible cost.
    pub fn max_abs_cost(&self) -> f64 {
        self.costs
            .iter()
            .zip(&self.admissible)
            .filter(|(_, &a)| a)
            .map(|(c, _)| c.abs())
            .fold(0.0, f64::max)
    }

    /// Tolerance used for dual feasibility and slackness checks.
    pub fn tolerance(&self) -> f64 {
        1e-9 * (1.0 + self.max_abs_cost())
    }
}

/// Optimal integer plan with its dual certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    pub rows: usize,
    pub cols: usize,
    /// Row-major flow matrix `Z`.
    pub flow: Vec<u64>,
    pub objective: f64,
    /// Row potentials `xi`.
    pub xi: Vec<f64>,
    /// Column potentials `phi`.
    pub phi: Vec<f64>,
}

impl TransportPlan {
    pub fn flow(&self, row: usize, col: usize) -> u64 {
        self.flow[row * self.cols + col]
    }

    /// Dual objective `sum_l phi(l) m_l - sum_k xi(k) m_k`. Equals the primal
    /// objective at optimality.
    pub fn dual_objective(&self, problem: &TransportProblem) -> f64 {
        let pos: f64 = self
            .phi
            .iter()
            .zip(problem.demands())
            .map(|(p, &m)| p * m as f64)
            .sum();
        let neg: f64 = self
            .xi
            .iter()
            .zip(problem.supplies())
            .map(|(x, &m)| x * m as f64)
            .sum();
        pos - neg
    }

    /// For unit-mass square problems, the column matched to each row.
    pub fn permutation(&self) -> Option<Vec<usize>> {
        (0..self.rows)
            .map(|r| {
                let mut it = (0..self.cols).filter(|&c| self.flow(r, c) > 0);
                match (it.next(), it.next()) {
                    (Some(c), None) if self.flow(r, c) == 1 => Some(c),
                    _ => None,
                }
            })
            .collect()
    }
}

/// Row-major sum of `cost * flow` over arcs carrying flow.
pub(crate) fn plan_cost(problem: &TransportProblem, flow: &[u64]) -> f64 {
    let mut total = 0.0;
    for r in 0..problem.rows() {
        for c in 0..problem.cols() {
            let z = flow[r * problem.cols() + c];
            if z > 0 {
                total += problem.cost(r, c) * z as f64;
            }
        }
    }
    total
}

/// Result of [`solve_semi_assignment`].
#[derive(Debug, Clone, PartialEq)]
pub struct SemiAssignment {
    /// Column chosen for each row.
    pub columns: Vec<usize>,
    /// Total cost of the chosen arcs.
    pub cost: f64,
    /// Underlying plan, including the slack row when one was added.
    pub plan: TransportPlan,
}

/// Assigns every row to exactly one admissible column without exceeding the
/// per-column capacities, at minimum total cost.
///
/// `forbidden[r][c] == true` removes arc `(r, c)`.
pub fn solve_semi_assignment(
    costs: &[Vec<f64>],
    capacities: &[u64],
    forbidden: &[Vec<bool>],
) -> Result<SemiAssignment> {
    let rows = costs.len();
    let cols = capacities.len();
    if costs.iter().any(|r| r.len() != cols) {
        return Err(Error::Dimension("cost rows must have one entry per capacity".into()));
    }
    if forbidden.len() != rows || forbidden.iter().any(|r| r.len() != cols) {
        return Err(Error::Dimension("forbidden mask shape differs from costs".into()));
    }
    if let Some(r) = forbidden.iter().position(|row| row.iter().all(|&f| f)) {
        return Err(Error::DeviceUnreachable { device: r });
    }
    let capacity: u64 = capacities.iter().sum();
    if capacity < rows as u64 {
        return Err(Error::Infeasible(format!(
            "total capacity {capacity} is below the {rows} rows to assign"
        )));
    }
    if rows == 0 {
        let problem = TransportProblem::new(Vec::new(), Vec::new(), Vec::new())?;
        return Ok(SemiAssignment {
            columns: Vec::new(),
            cost: 0.0,
            plan: solve_transportation(&problem)?,
        });
    }

    let problem = TransportProblem::new(costs.to_vec(), vec![1; rows], capacities.to_vec())?
        .with_forbidden(forbidden)?
        .balanced();
    let plan = solve_transportation(&problem)?;
    let columns = (0..rows)
        .map(|r| {
            (0..cols)
                .find(|&c| plan.flow(r, c) == 1)
                .expect("unit row supply routes to exactly one column")
        })
        .collect::<Vec<_>>();
    let cost = columns
        .iter()
        .enumerate()
        .map(|(r, &c)| costs[r][c])
        .fold(0.0, |a, b| a + b);
    Ok(SemiAssignment { columns, cost, plan })
}
