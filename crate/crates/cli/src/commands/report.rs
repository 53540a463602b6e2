//! Aggregate every fit below a results directory into one report.

use std::collections::BTreeMap;
use std::path::Path;

use serde_json::Value;

use crate::error::{CliError, CliResult};
use crate::output::{self, FITS_DIR};
use crate::svg;

pub const REPORT_FILE: &str = "report.json";
pub const INDEX_FILE: &str = "index.svg";

/// Fit summaries keyed by statistic, prefixed with the run directory
/// relative to `root` when the fit is not at the top level.
pub fn collect(root: &Path) -> CliResult<BTreeMap<String, Value>> {
    let mut out = BTreeMap::new();
    for path in output::find_fit_files(root)? {
        let text = std::fs::read_to_string(&path)?;
        let value: Value =
            serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let stat = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
        let run_dir = path.parent().and_then(Path::parent).unwrap_or(root);
        let rel = run_dir.strip_prefix(root).unwrap_or(run_dir);
        let key = if rel.as_os_str().is_empty() {
            stat.to_string()
        } else {
            format!("{}/{stat}", rel.to_string_lossy().replace('\\', "/"))
        };
        out.insert(key, value);
    }
    Ok(out)
}

/// Write `report.json` and `index.svg` under `out`.
///
/// Every name in `required` must match a key exactly or the statistic part of
/// a nested key; otherwise nothing is written.
pub fn run(root: &Path, out: &Path, required: &[String]) -> CliResult<BTreeMap<String, Value>> {
    if !root.is_dir() {
        return Err(CliError::Input(format!("{} is not a directory", root.display())));
    }
    let fits = collect(root)?;
    if fits.is_empty() {
        return Err(CliError::Missing(vec![format!(
            "{}/**/{FITS_DIR}/*.json",
            root.display()
        )]));
    }
    let missing: Vec<String> = required
        .iter()
        .filter(|name| {
            !fits
                .keys()
                .any(|k| k == *name || k.rsplit('/').next() == Some(name.as_str()))
        })
        .cloned()
        .collect();
    if !missing.is_empty() {
        return Err(CliError::Missing(missing));
    }
    output::write_json(&out.join(REPORT_FILE), &fits)?;
    let field = |v: &Value, k: &str| {
        v.get(k)
            .and_then(Value::as_f64)
            .map_or("-".into(), |x| format!("{x:.3}"))
    };
    let rows: Vec<Vec<String>> = fits
        .iter()
        .map(|(k, v)| {
            vec![
                k.clone(),
                field(v, "exponent"),
                field(v, "exponent_stderr"),
                field(v, "r_squared"),
            ]
        })
        .collect();
    output::write_text(
        &out.join(INDEX_FILE),
        &svg::table("fitted exponents", &["statistic", "exponent", "stderr", "r^2"], &rows),
    )?;
    Ok(fits)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nested_fits_are_keyed_by_run_directory() {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path();
        output::write_json(&root.join("fits/a.json"), &serde_json::json!({"exponent": -1.0})).unwrap();
        output::write_json(&root.join("x/y/fits/b.json"), &serde_json::json!({"exponent": 0.5})).unwrap();
        let fits = collect(root).unwrap();
        assert_eq!(fits.keys().collect::<Vec<_>>(), vec!["a", "x/y/b"]);
        assert!(run(root, root, &["b".into()]).is_ok());
        assert!(matches!(run(root, root, &["c".into()]), Err(CliError::Missing(m)) if m == vec!["c".to_string()]));
    }
}
