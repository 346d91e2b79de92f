use qgat_core::gradcheck::{run_gradcheck, Corruption};

use super::{csv_error, csv_writer};
use crate::error::{CliError, CliResult};
use crate::ExperimentSpec;

pub fn cmd_gradcheck(spec: &ExperimentSpec, corrupt: Option<&str>, offset: f64) -> CliResult<()> {
    spec.prepare_out()?;
    let corruption = corrupt.map(|pattern| Corruption {
        pattern: pattern.to_string(),
        offset,
    });
    let report = run_gradcheck(&spec.config.gradcheck, corruption.as_ref())?;

    let path = spec.out.join("gradcheck.csv");
    let mut w = csv_writer(&path)?;
    w.write_record([
        "component",
        "tensor",
        "entries",
        "max_rel_error",
        "tolerance",
        "passed",
    ])
    .map_err(csv_error(&path))?;
    println!(
        "{:<20} {:<18} {:>8} {:>14} {:>10}  status",
        "component", "tensor", "entries", "max_rel_err", "tol"
    );
    for t in &report.tensors {
        let status = if t.passed() { "ok" } else { "FAIL" };
        println!(
            "{:<20} {:<18} {:>8} {:>14.3e} {:>10.0e}  {status}",
            t.component, t.tensor, t.entries, t.max_rel_error, t.tolerance
        );
        w.write_record([
            t.component.clone(),
            t.tensor.clone(),
            t.entries.to_string(),
            t.max_rel_error.to_string(),
            t.tolerance.to_string(),
            t.passed().to_string(),
        ])
        .map_err(csv_error(&path))?;
    }
    w.flush().map_err(|e| CliError::io(&path, e))?;

    println!();
    for (component, err, ok) in report.by_component() {
        println!(
            "{component:<20} max relative error {err:.3e}  {}",
            if ok { "ok" } else { "FAIL" }
        );
    }
    if report.passed() {
        Ok(())
    } else {
        let failed = report.tensors.iter().filter(|t| !t.passed()).count();
        Err(CliError::Failed(format!(
            "gradient check failed for {failed} tensor(s)"
        )))
    }
}
