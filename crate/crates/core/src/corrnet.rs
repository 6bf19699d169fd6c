//! Monthly correlation matrices, their summary statistics and threshold graphs.

use std::fmt::Write as _;
use std::ops::Range;

use ndarray::{Array2, ArrayView2};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::metrics::{check_window, is_constant, ReturnPanel};

/// Tolerance used when validating externally supplied matrices.
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;

/// Raw coefficients may exceed `[-1, 1]` by at most this much before clamping.
pub const OVERSHOOT_TOLERANCE: f64 = 1e-9;

/// Thresholds reported by the sensitivity sweep.
pub const SENSITIVITY_THRESHOLDS: [f64; 5] = [0.75, 0.80, 0.85, 0.90, 0.95];

pub const DEFAULT_THRESHOLD: f64 = 0.9;

/// Pearson correlations of one window of returns.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    entities: Vec<String>,
    values: Array2<f64>,
    /// Entities with zero variance in the window; their off-diagonal entries are 0.
    degenerate_entities: Vec<usize>,
}

impl CorrelationMatrix {
    /// Wraps a user-supplied matrix after checking shape, symmetry, range and
    /// unit diagonal.
    pub fn new(entities: Vec<String>, values: Array2<f64>) -> Result<Self> {
        let n = entities.len();
        if values.dim() != (n, n) {
            return Err(Error::InvalidConfig(format!(
                "correlation matrix shape {:?} does not match {n} entities",
                values.dim()
            )));
        }
        for i in 0..n {
            if (values[[i, i]] - 1.0).abs() > SYMMETRY_TOLERANCE {
                return Err(Error::InvalidConfig(format!(
                    "diagonal entry {i} is {}, expected 1",
                    values[[i, i]]
                )));
            }
            for j in 0..i {
                let (a, b) = (values[[i, j]], values[[j, i]]);
                if !a.is_finite() || (a - b).abs() > SYMMETRY_TOLERANCE {
                    return Err(Error::InvalidConfig(format!(
                        "matrix not symmetric at ({i}, {j})"
                    )));
                }
                if a.abs() > 1.0 + SYMMETRY_TOLERANCE {
                    return Err(Error::InvalidConfig(format!(
                        "entry ({i}, {j}) = {a} outside [-1, 1]"
                    )));
                }
            }
        }
        Ok(CorrelationMatrix {
            entities,
            values,
            degenerate_entities: Vec::new(),
        })
    }

    /// `(1 - rho) I + rho J`: every pair correlated at `rho`.
    pub fn uniform(entities: Vec<String>, rho: f64) -> Result<Self> {
        let n = entities.len();
        let values = Array2::from_shape_fn((n, n), |(i, j)| if i == j { 1.0 } else { rho });
        Self::new(entities, values)
    }

    pub fn entities(&self) -> &[String] {
        &self.entities
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn degenerate_entities(&self) -> &[usize] {
        &self.degenerate_entities
    }

    pub fn is_degenerate(&self) -> bool {
        !self.degenerate_entities.is_empty()
    }

    pub fn n(&self) -> usize {
        self.entities.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[[i, j]]
    }

    /// Upper-triangle off-diagonal entries, row by row.
    pub fn off_diagonal(&self) -> impl Iterator<Item = f64> + '_ {
        let n = self.n();
        (0..n).flat_map(move |i| (i + 1..n).map(move |j| self.values[[i, j]]))
    }
}

/// Correlation matrix of `returns` over the rows in `window`.
pub fn correlation_matrix(
    returns: &ReturnPanel,
    window: Range<usize>,
) -> Result<CorrelationMatrix> {
    check_window(returns, &window, 2)?;
    correlation_from_rows(returns.entities().to_vec(), returns.window(window))
}

/// Correlation matrix of a `T x N` block of returns (`T >= 2`).
///
/// Uses window averages throughout: `C_ij = cov_ij / sqrt(var_i var_j)` with
/// `cov_ij = <(R_i - mu_i)(R_j - mu_j)>`.
pub fn correlation_from_rows(
    entities: Vec<String>,
    rows: ArrayView2<'_, f64>,
) -> Result<CorrelationMatrix> {
    let (t, n) = rows.dim();
    if n != entities.len() {
        return Err(Error::InvalidConfig(format!(
            "{n} return columns for {} entities",
            entities.len()
        )));
    }
    if t < 2 {
        return Err(Error::InsufficientData(format!(
            "correlation needs at least 2 observations, got {t}"
        )));
    }
    let tf = t as f64;
    let mut centered = Array2::<f64>::zeros((t, n));
    let mut var = vec![0.0; n];
    let mut degenerate = Vec::new();
    for (i, col) in rows.columns().into_iter().enumerate() {
        let xs = col.to_vec();
        if is_constant(&xs) {
            degenerate.push(i);
            continue;
        }
        let mu = xs.iter().sum::<f64>() / tf;
        let mut ss = 0.0;
        for (k, x) in xs.iter().enumerate() {
            let d = x - mu;
            centered[[k, i]] = d;
            ss += d * d;
        }
        var[i] = ss / tf;
    }

    let mut values = Array2::<f64>::eye(n);
    for i in 0..n {
        if degenerate.contains(&i) {
            continue;
        }
        for j in (i + 1)..n {
            if degenerate.contains(&j) {
                continue;
            }
            let cov = centered.column(i).dot(&centered.column(j)) / tf;
            let c = cov / (var[i] * var[j]).sqrt();
            if !c.is_finite() || c.abs() > 1.0 + OVERSHOOT_TOLERANCE {
                return Err(Error::Numerical(format!(
                    "correlation ({}, {}) = {c} outside [-1, 1]",
                    entities[i], entities[j]
                )));
            }
            let c = c.clamp(-1.0, 1.0);
            values[[i, j]] = c;
            values[[j, i]] = c;
        }
    }
    Ok(CorrelationMatrix {
        entities,
        values,
        degenerate_entities: degenerate,
    })
}

/// Summary statistics over the `N(N-1)/2` off-diagonal entries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrStats {
    pub mean: f64,
    /// Population standard deviation.
    pub stdev: f64,
    /// `stdev / mean`; `None` when the mean is exactly zero.
    pub ratio: Option<f64>,
    pub min: f64,
    pub max: f64,
}

pub fn corr_stats(c: &CorrelationMatrix) -> Result<CorrStats> {
    if c.n() < 2 {
        return Err(Error::InsufficientData(format!(
            "correlation statistics need N >= 2, got {}",
            c.n()
        )));
    }
    let xs: Vec<f64> = c.off_diagonal().collect();
    let m = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / m;
    let stdev = if is_constant(&xs) {
        0.0
    } else {
        (xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / m).sqrt()
    };
    let min = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(CorrStats {
        // the running sum can land an ulp outside [min, max]
        mean: mean.clamp(min, max),
        stdev,
        ratio: (mean != 0.0).then(|| stdev / mean),
        min,
        max,
    })
}

/// Graph linking every pair whose correlation reaches the threshold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdjacencyGraph {
    pub threshold: f64,
    pub entities: Vec<String>,
    /// Index pairs `(i, j)` with `i < j`, sorted lexicographically.
    pub edges: Vec<(usize, usize)>,
    pub edge_count: usize,
    /// `edge_count / (N(N-1)/2)`; 0 when `N < 2`.
    pub normalized_connectedness: f64,
}

impl AdjacencyGraph {
    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        let key = if i < j { (i, j) } else { (j, i) };
        self.edges.binary_search(&key).is_ok()
    }

    /// Edges as name pairs, each pair ordered by name.
    pub fn named_edges(&self) -> Vec<(String, String)> {
        self.edges
            .iter()
            .map(|&(i, j)| {
                let (a, b) = (&self.entities[i], &self.entities[j]);
                if a <= b {
                    (a.clone(), b.clone())
                } else {
                    (b.clone(), a.clone())
                }
            })
            .collect()
    }
}

pub fn check_threshold(t: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidConfig(format!(
            "threshold {t} outside [0, 1]"
        )));
    }
    Ok(())
}

pub fn adjacency(c: &CorrelationMatrix, threshold: f64) -> Result<AdjacencyGraph> {
    check_threshold(threshold)?;
    let n = c.n();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if c.get(i, j) >= threshold {
                edges.push((i, j));
            }
        }
    }
    let pairs = n * n.saturating_sub(1) / 2;
    let edge_count = edges.len();
    Ok(AdjacencyGraph {
        threshold,
        entities: c.entities().to_vec(),
        edges,
        edge_count,
        normalized_connectedness: if pairs == 0 {
            0.0
        } else {
            edge_count as f64 / pairs as f64
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphFormat {
    Dot,
    EdgeListJson,
}

fn dot_quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for ch in s.chars() {
        if ch == '"' || ch == '\\' {
            out.push('\\');
        }
        out.push(ch);
    }
    out.push('"');
    out
}

#[derive(Serialize)]
struct EdgeList<'a> {
    threshold: f64,
    nodes: &'a [String],
    edges: Vec<[&'a str; 2]>,
}

/// Renders the graph; nodes in panel order, edges in index order.
pub fn export_graph(g: &AdjacencyGraph, format: GraphFormat) -> String {
    match format {
        GraphFormat::Dot => {
            let mut out = String::from("graph {\n");
            for e in &g.entities {
                let _ = writeln!(out, "  {};", dot_quote(e));
            }
            for &(i, j) in &g.edges {
                let _ = writeln!(
                    out,
                    "  {} -- {};",
                    dot_quote(&g.entities[i]),
                    dot_quote(&g.entities[j])
                );
            }
            out.push_str("}\n");
            out
        }
        GraphFormat::EdgeListJson => {
            let doc = EdgeList {
                threshold: g.threshold,
                nodes: &g.entities,
                edges: g
                    .edges
                    .iter()
                    .map(|&(i, j)| [g.entities[i].as_str(), g.entities[j].as_str()])
                    .collect(),
            };
            let mut s = serde_json::to_string(&doc).expect("edge list serializes");
            s.push('\n');
            s
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;
    use ndarray::array;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("S{i:02}")).collect()
    }

    fn panel(values: Array2<f64>) -> ReturnPanel {
        let d0 = NaiveDate::from_ymd_opt(2006, 1, 2).unwrap();
        let dates = (0..values.nrows())
            .map(|i| d0 + chrono::Days::new(i as u64))
            .collect();
        ReturnPanel::new(names(values.ncols()), dates, values).unwrap()
    }

    #[test]
    fn identical_columns_correlate_perfectly() {
        let r = panel(array![
            [0.01, 0.01],
            [-0.02, -0.02],
            [0.005, 0.005],
            [0.03, 0.03]
        ]);
        let c = correlation_matrix(&r, 0..4).unwrap();
        assert_eq!(c.get(0, 1), 1.0);
        assert_eq!(c.get(1, 0), 1.0);
        assert_eq!(c.get(0, 0), 1.0);
    }

    #[test]
    fn negated_column_anticorrelates() {
        let r = panel(array![[0.01, -0.01], [-0.02, 0.02], [0.005, -0.005]]);
        let c = correlation_matrix(&r, 0..3).unwrap();
        assert!((c.get(0, 1) + 1.0).abs() < 1e-15);
        assert!(c.get(0, 1) >= -1.0);
    }

    #[test]
    fn degenerate_entity_flagged_and_zeroed() {
        let r = panel(array![
            [0.01, 0.002, 0.3],
            [-0.02, 0.002, 0.1],
            [0.005, 0.002, 0.2]
        ]);
        let c = correlation_matrix(&r, 0..3).unwrap();
        assert_eq!(c.degenerate_entities(), &[1]);
        assert_eq!(c.get(0, 1), 0.0);
        assert_eq!(c.get(1, 2), 0.0);
        assert_eq!(c.get(1, 1), 1.0);
        assert!(c.get(0, 2) != 0.0);
    }

    #[test]
    fn short_window_rejected() {
        let r = panel(array![[0.01, 0.02], [0.03, 0.01]]);
        assert!(matches!(
            correlation_matrix(&r, 0..1),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn constant_matrix_stats() {
        let c = CorrelationMatrix::uniform(names(5), 0.8).unwrap();
        let s = corr_stats(&c).unwrap();
        assert_eq!(s.mean, 0.8);
        assert_eq!(s.stdev, 0.0);
        assert_eq!(s.min, 0.8);
        assert_eq!(s.max, 0.8);
        assert_eq!(s.ratio, Some(0.0));
    }

    #[test]
    fn zero_mean_has_no_ratio() {
        let c = CorrelationMatrix::uniform(names(3), 0.0).unwrap();
        assert_eq!(corr_stats(&c).unwrap().ratio, None);
        let one = CorrelationMatrix::uniform(names(1), 0.0).unwrap();
        assert!(corr_stats(&one).is_err());
    }

    #[test]
    fn adjacency_examples() {
        let zero = CorrelationMatrix::uniform(names(13), 0.0).unwrap();
        assert_eq!(adjacency(&zero, 0.9).unwrap().edge_count, 0);

        let ones = CorrelationMatrix::uniform(names(13), 1.0).unwrap();
        for t in [0.0, 0.5, 0.9, 1.0] {
            let g = adjacency(&ones, t).unwrap();
            assert_eq!(g.edge_count, 78);
            assert_eq!(g.normalized_connectedness, 1.0);
        }

        let c = CorrelationMatrix::new(
            names(3),
            array![[1.0, 0.95, 0.85], [0.95, 1.0, 0.7], [0.85, 0.7, 1.0]],
        )
        .unwrap();
        let g = adjacency(&c, 0.9).unwrap();
        assert_eq!(g.edges, vec![(0, 1)]);
        assert!(g.has_edge(1, 0));
        assert!(!g.has_edge(0, 2));
    }

    #[test]
    fn threshold_range_checked() {
        let c = CorrelationMatrix::uniform(names(3), 0.5).unwrap();
        assert!(adjacency(&c, 1.1).is_err());
        assert!(adjacency(&c, -0.1).is_err());
        assert!(adjacency(&c, f64::NAN).is_err());
    }

    #[test]
    fn invalid_matrices_rejected() {
        assert!(CorrelationMatrix::new(names(2), array![[1.0, 0.5], [0.4, 1.0]]).is_err());
        assert!(CorrelationMatrix::new(names(2), array![[1.0, 1.5], [1.5, 1.0]]).is_err());
        assert!(CorrelationMatrix::new(names(2), array![[0.9, 0.5], [0.5, 1.0]]).is_err());
        assert!(CorrelationMatrix::new(names(3), array![[1.0, 0.5], [0.5, 1.0]]).is_err());
    }

    #[test]
    fn dot_export() {
        let empty = adjacency(&CorrelationMatrix::uniform(names(13), 0.0).unwrap(), 0.9).unwrap();
        let dot = export_graph(&empty, GraphFormat::Dot);
        assert!(dot.starts_with("graph {\n"));
        assert_eq!(dot.lines().filter(|l| l.ends_with(';')).count(), 13);
        assert!(!dot.contains("--"));

        let full = adjacency(&CorrelationMatrix::uniform(names(13), 1.0).unwrap(), 0.9).unwrap();
        let dot = export_graph(&full, GraphFormat::Dot);
        assert_eq!(dot.lines().filter(|l| l.contains(" -- ")).count(), 78);
        assert_eq!(dot, export_graph(&full, GraphFormat::Dot));
        assert!(dot.contains("  \"S00\" -- \"S01\";\n"));
    }

    #[test]
    fn dot_quotes_names() {
        let c =
            CorrelationMatrix::uniform(vec!["Oil \"and\" Gas".into(), "IT".into()], 1.0).unwrap();
        let dot = export_graph(&adjacency(&c, 0.9).unwrap(), GraphFormat::Dot);
        assert!(dot.contains(r#""Oil \"and\" Gas" -- "IT";"#), "{dot}");
    }

    #[test]
    fn json_edge_list() {
        let c = CorrelationMatrix::new(
            vec!["A".into(), "B".into(), "C".into()],
            array![[1.0, 0.95, 0.85], [0.95, 1.0, 0.7], [0.85, 0.7, 1.0]],
        )
        .unwrap();
        let g = adjacency(&c, 0.8).unwrap();
        let s = export_graph(&g, GraphFormat::EdgeListJson);
        assert_eq!(
            s,
            "{\"threshold\":0.8,\"nodes\":[\"A\",\"B\",\"C\"],\"edges\":[[\"A\",\"B\"],[\"A\",\"C\"]]}\n"
        );
    }
}
