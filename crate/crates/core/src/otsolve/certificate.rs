use super::{plan_cost, TransportPlan, TransportProblem};

/// One reason a plan fails its optimality certificate.
#[derive(Debug, Clone, PartialEq)]
pub enum CertificateFailure {
    Shape { reason: String },
    RowMarginal { row: usize, expected: u64, actual: u64 },
    ColumnMarginal { col: usize, expected: u64, actual: u64 },
    ForbiddenFlow { row: usize, col: usize, flow: u64 },
    /// `phi(l) - xi(k)` exceeds the arc cost.
    DualInfeasible { row: usize, col: usize, excess: f64 },
    /// An arc with positive flow whose reduced cost is not zero.
    Slackness { row: usize, col: usize, gap: f64 },
    /// Stated objective differs from the recomputed primal cost.
    Objective { stated: f64, recomputed: f64 },
    /// Primal and dual objectives differ.
    DualityGap { primal: f64, dual: f64 },
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CertificateReport {
    pub failures: Vec<CertificateFailure>,
    pub tolerance: f64,
}

impl CertificateReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn has_slackness_violation(&self) -> bool {
        self.failures
            .iter()
            .any(|f| matches!(f, CertificateFailure::Slackness { .. }))
    }

    pub fn has_marginal_violation(&self) -> bool {
        self.failures.iter().any(|f| {
            matches!(
                f,
                CertificateFailure::RowMarginal { .. } | CertificateFailure::ColumnMarginal { .. }
            )
        })
    }
}

/// Checks marginals, dual feasibility, complementary slackness and the
/// primal/dual objective match, with tolerance `1e-9 * (1 + max|cost|)`.
pub fn verify_certificate(plan: &TransportPlan, problem: &TransportProblem) -> CertificateReport {
    let tol = problem.tolerance();
    let mut report = CertificateReport {
        failures: Vec::new(),
        tolerance: tol,
    };
    let (rows, cols) = (problem.rows(), problem.cols());
    if plan.rows != rows
        || plan.cols != cols
        || plan.flow.len() != rows * cols
        || plan.xi.len() != rows
        || plan.phi.len() != cols
    {
        report.failures.push(CertificateFailure::Shape {
            reason: format!(
                "plan is {}x{} with {} potentials, problem is {rows}x{cols}",
                plan.rows,
                plan.cols,
                plan.xi.len() + plan.phi.len()
            ),
        });
        return report;
    }

    for (r, &expected) in problem.supplies().iter().enumerate() {
        let actual: u64 = (0..cols).map(|c| plan.flow(r, c)).sum();
        if actual != expected {
            report
                .failures
                .push(CertificateFailure::RowMarginal { row: r, expected, actual });
        }
    }
    for (c, &expected) in problem.demands().iter().enumerate() {
        let actual: u64 = (0..rows).map(|r| plan.flow(r, c)).sum();
        if actual != expected {
            report
                .failures
                .push(CertificateFailure::ColumnMarginal { col: c, expected, actual });
        }
    }

    for r in 0..rows {
        for c in 0..cols {
            let z = plan.flow(r, c);
            if !problem.is_admissible(r, c) {
                if z > 0 {
                    report
                        .failures
                        .push(CertificateFailure::ForbiddenFlow { row: r, col: c, flow: z });
                }
                continue;
            }
            let reduced = problem.cost(r, c) - (plan.phi[c] - plan.xi[r]);
            if reduced < -tol {
                report.failures.push(CertificateFailure::DualInfeasible {
                    row: r,
                    col: c,
                    excess: -reduced,
                });
            }
            if z > 0 && reduced.abs() > tol {
                report
                    .failures
                    .push(CertificateFailure::Slackness { row: r, col: c, gap: reduced });
            }
        }
    }

    let primal = plan_cost(problem, &plan.flow);
    let scale = tol * (1.0 + problem.supplies().iter().sum::<u64>() as f64);
    if (primal - plan.objective).abs() > scale {
        report.failures.push(CertificateFailure::Objective {
            stated: plan.objective,
            recomputed: primal,
        });
    }
    let dual = plan.dual_objective(problem);
    if (primal - dual).abs() > scale {
        report
            .failures
            .push(CertificateFailure::DualityGap { primal, dual });
    }
    report
}
