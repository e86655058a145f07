//! Invariant checks over a built or reloaded pyramid.

use serde::{Deserialize, Serialize};

use crate::filterbank::{verify_pr, FilterLevel};
use crate::graph::laplacian;
use crate::linalg::{asymmetry, max_abs};
use crate::multires::Pyramid;

pub const ORTHONORMALITY_TOL: f64 = 1e-8;
pub const FOLDING_TOL: f64 = 1e-6;
pub const PR_TOL: f64 = 1e-8;
pub const LAPLACIAN_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub level: usize,
    pub name: String,
    pub value: f64,
    pub tol: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub checks: Vec<Check>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    fn push(&mut self, level: usize, name: impl Into<String>, value: f64, tol: f64) {
        self.checks.push(Check { level, name: name.into(), value, tol, passed: value <= tol });
    }
}

pub fn audit_level(index: usize, level: &FilterLevel, report: &mut AuditReport) {
    let l = laplacian(level.graph());
    let m = l.matrix();
    let scale = max_abs(m).max(1.0);
    report.push(index, "laplacian_symmetry", asymmetry(m) / scale, LAPLACIAN_TOL);
    report.push(index, "laplacian_row_sums", l.max_row_sum_residual() / scale, LAPLACIAN_TOL);

    let p = level.pattern();
    let split = (p.keep_low().len() + p.keep_high().len()) as f64 - level.n() as f64;
    report.push(index, "critical_sampling", split.abs(), 0.0);

    let basis = level.basis();
    report.push(index, "orthonormality", basis.orthonormality_error(), ORTHONORMALITY_TOL);
    report.push(index, "folding", basis.folding_error(), FOLDING_TOL);

    let pr = verify_pr(level);
    report.push(index, "pr_reconstruction", pr.reconstruction_residual, PR_TOL);
    report.push(index, "pr_alias_cancellation", pr.alias_residual, PR_TOL);
    report.push(index, "operator_pr", pr.operator_residual, PR_TOL);

    if let Some(r) = level.report() {
        let failed = r.steps.iter().filter(|s| !s.certificate.passes()).count();
        report.push(index, "qecqp_certificates_failed", failed as f64, 0.0);
    }
}

pub fn audit_pyramid(p: &Pyramid) -> AuditReport {
    let mut report = AuditReport::default();
    for (i, level) in p.levels().iter().enumerate() {
        audit_level(i, level, &mut report);
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate, GraphKind};
    use crate::multires::{build_pyramid, PyramidConfig};

    #[test]
    fn fresh_ring_pyramid_is_green() {
        let g = generate(GraphKind::Ring { n: 16 }, 0).unwrap();
        let p = build_pyramid(&g, &PyramidConfig { depth: 3, ..PyramidConfig::default() }).unwrap();
        let report = audit_pyramid(&p);
        assert!(report.passed(), "{:?}", report.failures().collect::<Vec<_>>());
        assert!(report.checks.iter().any(|c| c.name == "qecqp_certificates_failed"));
    }
}
