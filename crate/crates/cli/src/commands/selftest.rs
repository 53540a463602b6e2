//! `norm-selftest`: the seeded tensor-norm invariant battery.

use std::path::Path;

use ntkcorr_core::selftest::{battery_tensors, run_norm_battery, Fault, InvariantOutcome};

use crate::error::{CliError, CliResult};
use crate::output;

pub const CASES: usize = 50;

/// One line per invariant group.
pub fn format_table(outcomes: &[InvariantOutcome]) -> String {
    let mut s = format!(
        "{:<30} {:>6} {:>9} {:>12}  result\n",
        "invariant", "cases", "failures", "worst"
    );
    for o in outcomes {
        s.push_str(&format!(
            "{:<30} {:>6} {:>9} {:>12.3e}  {}\n",
            o.name,
            o.cases,
            o.failures,
            o.worst,
            if o.passed() { "PASS" } else { "FAIL" }
        ));
        if !o.passed() {
            s.push_str(&format!("    {}\n", o.detail));
        }
    }
    s
}

/// Run the battery, optionally corrupted, and dump its tensors as CSV.
///
/// Any failed invariant is an [`CliError::Invariant`] after the table is built.
pub fn run(
    cases: usize,
    seed: u64,
    inject_fault: bool,
    dump_tensors: Option<&Path>,
) -> CliResult<(Vec<InvariantOutcome>, String)> {
    if cases == 0 {
        return Err(CliError::Input("need at least one case".into()));
    }
    let fault = inject_fault.then_some(Fault::ProductSign);
    let outcomes = run_norm_battery(cases, seed, fault);
    if let Some(dir) = dump_tensors {
        for (i, t) in battery_tensors(cases, seed).iter().enumerate() {
            let mut buf = Vec::new();
            t.write_csv(&mut buf)?;
            output::write_text(
                &dir.join(format!("tensor_{i:03}.csv")),
                &String::from_utf8(buf).expect("ascii"),
            )?;
        }
    }
    let table = format_table(&outcomes);
    Ok((outcomes, table))
}
