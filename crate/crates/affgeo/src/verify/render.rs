//! Report rendering: stable-keyed JSON for machines, aligned text for
//! humans.

use super::VerificationReport;
use crate::error::{Error, Result};

/// Schema-versioned JSON; byte-identical across identical invocations
/// (no timestamps anywhere in the document).
pub fn render_json(report: &VerificationReport) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(report).map_err(|e| Error::Io(e.to_string()))?;
    out.push(b'\n');
    Ok(out)
}

pub fn render_text(report: &VerificationReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "surface {} (grid {})\n",
        report.surface_id, report.grid
    ));
    for c in &report.checks {
        let status = if c.pass { "PASS" } else { "FAIL" };
        out.push_str(&format!(
            "  [{status}] {:<32} max {:>12.3e}  tol {:>8.1e}  grid {:<8} {}\n",
            c.name, c.max_residual, c.tolerance, c.grid, c.citation
        ));
        if !c.pass && !c.worst_point.is_empty() {
            out.push_str(&format!("         worst at {:?}\n", c.worst_point));
        }
        if let Some(d) = &c.detail {
            out.push_str(&format!("         {d}\n"));
        }
    }
    out.push_str(&format!(
        "  overall: {} ({} checks, {} ms)\n",
        if report.overall_pass { "PASS" } else { "FAIL" },
        report.checks.len(),
        report.wall_time_ms
    ));
    out
}
