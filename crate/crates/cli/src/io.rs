//! Point-file and group-spec parsing.
//!
//! Points travel as headerless CSV: one point per row, `n` decimal floats in
//! layer order. Group specs are line-oriented key: value documents with the
//! fields `builtin`, `layers` and repeated `bracket` records.

use std::fmt::Write as _;
use std::path::Path;

use carnot::algebra::{Algebra, BracketEntry, StratifiedAlgebra};
use carnot::group::GroupElement;

use crate::CliError;

pub fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(path.to_path_buf(), e))
}

/// Parses a points CSV against the algebra dimension. Rows are 1-based in
/// error messages.
pub fn parse_points(algebra: &Algebra, text: &str, origin: &str) -> Result<Vec<GroupElement>, CliError> {
    let n = algebra.total_dim();
    let mut points = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let row = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').collect();
        if fields.len() != n {
            return Err(CliError::Usage(format!(
                "{origin}: row {row} has {} columns, expected {n}",
                fields.len()
            )));
        }
        let mut coords = Vec::with_capacity(n);
        for f in fields {
            let v: f64 = f.trim().parse().map_err(|_| {
                CliError::Usage(format!("{origin}: row {row}: `{f}` is not a number"))
            })?;
            coords.push(v);
        }
        let p = GroupElement::new(algebra.clone(), coords)
            .map_err(|e| CliError::Usage(format!("{origin}: row {row}: {e}")))?;
        points.push(p);
    }
    if points.is_empty() {
        return Err(CliError::Usage(format!("{origin}: no points")));
    }
    Ok(points)
}

pub fn format_points(points: &[GroupElement]) -> String {
    let mut out = String::new();
    for p in points {
        let row: Vec<String> = p.coords().iter().map(|x| format!("{x}")).collect();
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}

/// Resolves `--group`: a builtin name, or a path to a group-spec file.
pub fn resolve_group(spec: &str) -> Result<Algebra, CliError> {
    if let Ok(alg) = StratifiedAlgebra::builtin(spec) {
        return Ok(alg);
    }
    let path = Path::new(spec);
    if !path.exists() {
        return Err(CliError::Usage(format!(
            "`{spec}` is neither a builtin group (heisenberg(k), engel, free_step2(r)) nor an existing group-spec file"
        )));
    }
    let text = read_file(path)?;
    parse_group_spec(&text, spec)
}

fn parse_group_spec(text: &str, origin: &str) -> Result<Algebra, CliError> {
    let mut layers: Option<Vec<usize>> = None;
    let mut entries: Vec<BracketEntry> = Vec::new();
    let mut builtin: Option<String> = None;
    for (idx, raw) in text.lines().enumerate() {
        let row = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once(':').ok_or_else(|| {
            CliError::Usage(format!("{origin}: line {row}: expected `key: value`"))
        })?;
        let value = value.trim();
        match key.trim() {
            "builtin" => builtin = Some(value.to_owned()),
            "layers" => {
                let dims = value
                    .split(',')
                    .map(|v| v.trim().parse::<usize>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|_| {
                        CliError::Usage(format!("{origin}: line {row}: bad layer list"))
                    })?;
                layers = Some(dims);
            }
            "bracket" => {
                entries.push(parse_bracket_record(value, origin, row)?);
            }
            other => {
                return Err(CliError::Usage(format!(
                    "{origin}: line {row}: unknown field `{other}`"
                )))
            }
        }
    }
    if let Some(name) = builtin {
        return StratifiedAlgebra::builtin(&name).map_err(|e| CliError::Usage(e.to_string()));
    }
    let layers = layers
        .ok_or_else(|| CliError::Usage(format!("{origin}: missing `layers` (or `builtin`)")))?;
    let alg = StratifiedAlgebra::from_table(layers, entries)
        .map_err(|e| CliError::Usage(format!("{origin}: {e}")))?;
    let report = alg.validate();
    if !report.is_clean() {
        let mut msg = format!("{origin}: bracket table violates structure:");
        for v in &report.violations {
            let _ = write!(msg, " {v};");
        }
        return Err(CliError::Usage(msg));
    }
    Ok(alg)
}

/// `bracket: a=0 b=1 coeffs=0,0,1`
fn parse_bracket_record(value: &str, origin: &str, row: usize) -> Result<BracketEntry, CliError> {
    let mut a = None;
    let mut b = None;
    let mut coeffs = None;
    for token in value.split_whitespace() {
        let (k, v) = token.split_once('=').ok_or_else(|| {
            CliError::Usage(format!("{origin}: line {row}: expected `key=value` fields"))
        })?;
        match k {
            "a" => a = v.parse::<usize>().ok(),
            "b" => b = v.parse::<usize>().ok(),
            "coeffs" => {
                let list = v
                    .split(',')
                    .map(|x| x.trim().parse::<f64>())
                    .collect::<Result<Vec<_>, _>>()
                    .ok();
                coeffs = list;
            }
            other => {
                return Err(CliError::Usage(format!(
                    "{origin}: line {row}: unknown bracket field `{other}`"
                )))
            }
        }
    }
    match (a, b, coeffs) {
        (Some(a), Some(b), Some(coeffs)) => Ok(BracketEntry { a, b, coeffs }),
        _ => Err(CliError::Usage(format!(
            "{origin}: line {row}: bracket needs a=, b= and coeffs="
        ))),
    }
}
