//! Deterministic CSV/JSON export. Fixed column order, 17-significant-digit
//! floats, rows sorted by (level, lexicographic path, t); identical inputs
//! produce byte-identical files. Files are written atomically (temp file in
//! the target directory, then rename).

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::closedform::PolynomialSolution;
use crate::decay::DecayReport;
use crate::error::{Error, Result};
use crate::solver::{SolutionField, SolveSummary};
use crate::tree::psi_embed;

/// 17 significant digits: enough to round-trip any f64.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut tmp = path.to_path_buf();
    let mut name = tmp
        .file_name()
        .map(|n| n.to_os_string())
        .unwrap_or_default();
    name.push(".tmp");
    tmp.set_file_name(name);
    {
        let mut file = fs::File::create(&tmp).map_err(io_err)?;
        file.write_all(bytes).map_err(io_err)?;
        file.sync_all().map_err(io_err)?;
    }
    fs::rename(&tmp, path).map_err(io_err)
}

/// One row per (vertex, node): vertex,level,psi,t,value.
pub fn field_csv(field: &SolutionField) -> String {
    let shape = &field.shape;
    let m = shape.branching();
    let mut out = String::from("vertex,level,psi,t,value\n");
    for rank in 0..shape.vertex_count() {
        let path = shape.path_of(rank);
        let (psi, _) = psi_embed(&path, m);
        let level = path.level();
        for k in 0..field.grid.len() {
            out.push_str(&format!(
                "{path},{level},{},{},{}\n",
                format_float(psi),
                format_float(field.grid.node(k)),
                format_float(field.at(rank, k)),
            ));
        }
    }
    out
}

pub fn write_field_csv(field: &SolutionField, path: &Path) -> Result<()> {
    atomic_write(path, field_csv(field).as_bytes())
}

/// JSON run summary.
#[derive(Debug, Serialize)]
pub struct FieldSummary<'a> {
    pub operator: &'a crate::averaging::AveragingSpec,
    pub datum: &'a crate::datum::InitialDatum,
    pub depth: usize,
    pub m: usize,
    pub dt: f64,
    #[serde(rename = "T")]
    pub t_end: f64,
    pub sup_norm_trajectory: &'a [f64],
    pub residual: Option<f64>,
}

pub fn field_summary_json(field: &SolutionField, residual: Option<f64>) -> Result<String> {
    let sup = field.sup_norm_trajectory();
    let summary = FieldSummary {
        operator: &field.spec,
        datum: &field.datum,
        depth: field.shape.depth(),
        m: field.shape.branching(),
        dt: field.grid.dt(),
        t_end: field.grid.t_end(),
        sup_norm_trajectory: &sup,
        residual,
    };
    Ok(serde_json::to_string_pretty(&summary)?)
}

pub fn summary_json(
    field_meta: &crate::config::ExperimentConfig,
    summary: &SolveSummary,
) -> Result<String> {
    let wire = FieldSummary {
        operator: &field_meta.operator,
        datum: &field_meta.datum,
        depth: field_meta.tree.depth,
        m: field_meta.tree.m,
        dt: field_meta.grid.t_end / field_meta.grid.steps as f64,
        t_end: field_meta.grid.t_end,
        sup_norm_trajectory: &summary.sup_norm_trajectory,
        residual: summary.residual,
    };
    Ok(serde_json::to_string_pretty(&wire)?)
}

/// Plot-ready decay CSV: t,max_abs_u,bound.
pub fn decay_csv(report: &DecayReport) -> String {
    let mut out = String::from("t,max_abs_u,bound\n");
    for node in &report.nodes {
        out.push_str(&format!(
            "{},{},{}\n",
            format_float(node.t),
            format_float(node.max_abs_u),
            format_float(node.bound),
        ));
    }
    out
}

pub fn write_decay_csv(report: &DecayReport, path: &Path) -> Result<()> {
    atomic_write(path, decay_csv(report).as_bytes())
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    atomic_write(path, text.as_bytes())
}

/// Per-vertex coefficient rows: vertex,level,degree,c0,c1,...,c<max>.
/// Shorter polynomials are zero-padded so every row has the same width.
pub fn polynomial_csv(solution: &PolynomialSolution) -> String {
    let max_degree = solution.max_degree();
    let mut out = String::from("vertex,level,degree");
    for j in 0..=max_degree {
        out.push_str(&format!(",c{j}"));
    }
    out.push('\n');
    let shape = &solution.shape;
    for rank in 0..shape.vertex_count() {
        let path = shape.path_of(rank);
        let coeffs = solution.coeffs(rank);
        out.push_str(&format!("{path},{},{}", path.level(), coeffs.len() - 1));
        for j in 0..=max_degree {
            let c = coeffs.get(j).copied().unwrap_or(0.0);
            out.push_str(&format!(",{}", format_float(c)));
        }
        out.push('\n');
    }
    out
}

pub fn write_polynomial_csv(solution: &PolynomialSolution, path: &Path) -> Result<()> {
    atomic_write(path, polynomial_csv(solution).as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::averaging::AveragingSpec;
    use crate::datum::InitialDatum;
    use crate::solver::{solve_ivp, ClosureRule, TimeGrid};
    use crate::tree::TreeShape;

    #[test]
    fn float_formatting_is_17_digits() {
        assert_eq!(format_float(1.0), "1.0000000000000000e0");
        assert_eq!(format_float(0.1), "1.0000000000000001e-1");
        let v = std::f64::consts::PI;
        assert_eq!(format_float(v).parse::<f64>().unwrap(), v);
    }

    #[test]
    fn constant_field_csv() {
        let shape = TreeShape::new(2, 1).unwrap();
        let datum = InitialDatum::LevelFunction {
            values: vec![1.0, 1.0],
        };
        let grid = TimeGrid::new(1.0, 1).unwrap();
        let closure = ClosureRule::GeometricEnvelope { k: 1.0, lambda: 0.0 };
        let field = solve_ivp(shape, AveragingSpec::mean(2), &datum, grid, closure).unwrap();
        let csv = field_csv(&field);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 1 + 3 * 2); // header + 3 vertices x 2 nodes
        assert_eq!(lines[0], "vertex,level,psi,t,value");
        for line in &lines[1..] {
            assert!(line.ends_with("1.0000000000000000e0"), "{line}");
        }
        // root rows come first and have an empty vertex column
        assert!(lines[1].starts_with(",0,"));
    }

    #[test]
    fn exports_are_deterministic() {
        let shape = TreeShape::new(2, 3).unwrap();
        let datum = InitialDatum::Geometric {
            k: 1.0,
            lambda: 0.4,
            seed: Some(1),
        };
        let grid = TimeGrid::new(1.0, 10).unwrap();
        let closure = ClosureRule::GeometricEnvelope { k: 1.0, lambda: 0.4 };
        let a = field_csv(&solve_ivp(shape, AveragingSpec::mean(2), &datum, grid, closure).unwrap());
        let b = field_csv(&solve_ivp(shape, AveragingSpec::mean(2), &datum, grid, closure).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn atomic_write_replaces_content() {
        let dir = std::env::temp_dir().join("treeflow_export_test");
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("out.csv");
        atomic_write(&path, b"one").unwrap();
        atomic_write(&path, b"two").unwrap();
        assert_eq!(fs::read(&path).unwrap(), b"two");
        fs::remove_dir_all(&dir).unwrap();
    }
}
