//! Reader and writer for the subset of the TSPLIB format used here:
//! `EXPLICIT` weights in `FULL_MATRIX` or `LOWER_DIAG_ROW` layout, and
//! `EUC_2D` node coordinates. SOP files mark precedences with `-1`.

use super::{nint_distance, Instance, ProblemKind};
use crate::error::{parse_err, Error, Result};
use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, Default)]
pub struct ParseOptions {
    /// Keep exact real Euclidean distances instead of rounding to the
    /// nearest integer.
    pub exact_euclidean: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum WeightType {
    Explicit,
    Euc2d,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum WeightFormat {
    FullMatrix,
    LowerDiagRow,
}

pub fn parse_tsplib(text: &str) -> Result<Instance> {
    parse_tsplib_with(text, ParseOptions::default())
}

pub fn parse_tsplib_with(text: &str, opts: ParseOptions) -> Result<Instance> {
    let mut name = String::from("unnamed");
    let mut declared_type: Option<(String, usize)> = None;
    let mut dimension: Option<usize> = None;
    let mut weight_type: Option<WeightType> = None;
    let mut weight_format: Option<WeightFormat> = None;
    let mut coords: Vec<(f64, f64, usize)> = Vec::new();
    let mut weights: Vec<(f64, usize)> = Vec::new();
    let mut weights_line = 0;

    #[derive(PartialEq)]
    enum Section {
        Header,
        Coords,
        Weights,
        Skip,
    }
    let mut section = Section::Header;

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let upper = line.to_ascii_uppercase();
        if upper == "EOF" {
            break;
        }
        match upper.as_str() {
            "NODE_COORD_SECTION" => {
                section = Section::Coords;
                continue;
            }
            "EDGE_WEIGHT_SECTION" => {
                section = Section::Weights;
                weights_line = lineno;
                continue;
            }
            "DISPLAY_DATA_SECTION" | "FIXED_EDGES_SECTION" | "TOUR_SECTION" => {
                section = Section::Skip;
                continue;
            }
            _ => {}
        }
        let starts_numeric = line
            .chars()
            .next()
            .map(|c| c.is_ascii_digit() || c == '-' || c == '+' || c == '.')
            .unwrap_or(false);
        if !starts_numeric {
            // A header line, possibly after a data section.
            section = Section::Header;
            let (key, value) = match line.split_once(':') {
                Some((k, v)) => (k.trim().to_ascii_uppercase(), v.trim().to_string()),
                None => {
                    let mut it = line.splitn(2, char::is_whitespace);
                    let k = it.next().unwrap_or("").to_ascii_uppercase();
                    let v = it.next().map(|s| s.trim().to_string());
                    match v {
                        Some(v) if !v.is_empty() => (k, v),
                        _ => return Err(parse_err(lineno, format!("malformed header line `{line}`"))),
                    }
                }
            };
            match key.as_str() {
                "NAME" => name = value,
                "TYPE" => declared_type = Some((value.to_ascii_uppercase(), lineno)),
                "DIMENSION" => {
                    let d: usize = value
                        .parse()
                        .map_err(|_| parse_err(lineno, format!("bad DIMENSION `{value}`")))?;
                    dimension = Some(d);
                }
                "EDGE_WEIGHT_TYPE" => {
                    weight_type = Some(match value.to_ascii_uppercase().as_str() {
                        "EXPLICIT" => WeightType::Explicit,
                        "EUC_2D" => WeightType::Euc2d,
                        other => {
                            return Err(parse_err(
                                lineno,
                                format!("unsupported EDGE_WEIGHT_TYPE `{other}`"),
                            ))
                        }
                    })
                }
                "EDGE_WEIGHT_FORMAT" => {
                    weight_format = Some(match value.to_ascii_uppercase().as_str() {
                        "FULL_MATRIX" => WeightFormat::FullMatrix,
                        "LOWER_DIAG_ROW" => WeightFormat::LowerDiagRow,
                        other => {
                            return Err(parse_err(
                                lineno,
                                format!("unsupported EDGE_WEIGHT_FORMAT `{other}`"),
                            ))
                        }
                    })
                }
                "COMMENT" | "NODE_COORD_TYPE" | "DISPLAY_DATA_TYPE" | "CAPACITY" => {}
                _ => {}
            }
            continue;
        }
        match section {
            Section::Coords => {
                let toks: Vec<&str> = line.split_whitespace().collect();
                if toks.len() != 3 {
                    return Err(parse_err(lineno, "coordinate line needs `id x y`"));
                }
                let x: f64 = toks[1]
                    .parse()
                    .map_err(|_| parse_err(lineno, format!("bad coordinate `{}`", toks[1])))?;
                let y: f64 = toks[2]
                    .parse()
                    .map_err(|_| parse_err(lineno, format!("bad coordinate `{}`", toks[2])))?;
                coords.push((x, y, lineno));
            }
            Section::Weights => {
                for tok in line.split_whitespace() {
                    let v: f64 = tok
                        .parse()
                        .map_err(|_| parse_err(lineno, format!("bad weight `{tok}`")))?;
                    weights.push((v, lineno));
                }
            }
            Section::Skip => {}
            Section::Header => {
                return Err(parse_err(lineno, format!("unexpected data line `{line}`")));
            }
        }
    }

    let n = dimension.ok_or_else(|| parse_err(1, "missing DIMENSION"))?;
    if n < 3 {
        return Err(parse_err(1, format!("DIMENSION must be at least 3, got {n}")));
    }
    let weight_type = weight_type.unwrap_or(if coords.is_empty() {
        WeightType::Explicit
    } else {
        WeightType::Euc2d
    });
    let declared_kind = match &declared_type {
        None => None,
        Some((t, line)) => Some(match t.as_str() {
            "TSP" => ProblemKind::SymmetricTsp,
            "ATSP" => ProblemKind::AsymmetricTsp,
            "SOP" => ProblemKind::Sop,
            other => return Err(parse_err(*line, format!("unsupported TYPE `{other}`"))),
        }),
    };

    let mut costs = vec![0.0; n * n];
    match weight_type {
        WeightType::Euc2d => {
            if coords.len() != n {
                let line = coords.last().map(|c| c.2).unwrap_or(1);
                return Err(parse_err(
                    line,
                    format!("expected {n} coordinates, found {}", coords.len()),
                ));
            }
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        let (dx, dy) = (coords[i].0 - coords[j].0, coords[i].1 - coords[j].1);
                        costs[i * n + j] = if opts.exact_euclidean {
                            (dx * dx + dy * dy).sqrt()
                        } else {
                            nint_distance(dx, dy)
                        };
                    }
                }
            }
        }
        WeightType::Explicit => {
            let format = weight_format.unwrap_or(WeightFormat::FullMatrix);
            // SOP files in the public library repeat the dimension as the
            // first token of the weight section.
            if declared_kind == Some(ProblemKind::Sop)
                && format == WeightFormat::FullMatrix
                && weights.len() == n * n + 1
                && weights[0].0 == n as f64
            {
                weights.remove(0);
            }
            let expected = match format {
                WeightFormat::FullMatrix => n * n,
                WeightFormat::LowerDiagRow => n * (n + 1) / 2,
            };
            if weights.len() != expected {
                let line = weights.last().map(|w| w.1).unwrap_or(weights_line.max(1));
                return Err(parse_err(
                    line,
                    format!(
                        "weight section holds {} values, {:?} of dimension {n} needs {expected}",
                        weights.len(),
                        format
                    ),
                ));
            }
            match format {
                WeightFormat::FullMatrix => {
                    for (k, (v, _)) in weights.iter().enumerate() {
                        costs[k] = *v;
                    }
                }
                WeightFormat::LowerDiagRow => {
                    let mut k = 0;
                    for i in 0..n {
                        for j in 0..=i {
                            costs[i * n + j] = weights[k].0;
                            costs[j * n + i] = weights[k].0;
                            k += 1;
                        }
                    }
                }
            }
        }
    }

    let symmetric = (0..n).all(|i| ((i + 1)..n).all(|j| costs[i * n + j] == costs[j * n + i]));
    let kind = match declared_kind {
        Some(ProblemKind::SymmetricTsp) if !symmetric => {
            let line = declared_type.map(|t| t.1).unwrap_or(1);
            return Err(parse_err(line, "TYPE TSP but the cost matrix is not symmetric"));
        }
        Some(k) => k,
        None if symmetric => ProblemKind::SymmetricTsp,
        None => ProblemKind::AsymmetricTsp,
    };

    let mut precedence = Vec::new();
    if kind == ProblemKind::Sop {
        let sentinel: f64 = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter(|&(i, j)| i != j)
            .map(|(i, j)| costs[i * n + j])
            .filter(|&c| c != -1.0)
            .map(f64::abs)
            .sum::<f64>()
            + 1.0;
        let raw = costs.clone();
        for i in 0..n {
            for j in 0..n {
                if i != j && raw[i * n + j] == -1.0 {
                    // column city precedes row city
                    precedence.push((j, i));
                    let transposed = raw[j * n + i];
                    costs[i * n + j] = if transposed != -1.0 {
                        transposed
                    } else {
                        sentinel
                    };
                }
            }
        }
    }

    Instance::new(name, n, costs, kind, precedence).map_err(|e| match e {
        Error::InvalidInstance(msg) => parse_err(weights_line.max(1), msg),
        other => other,
    })
}

/// Writes an instance as an explicit full-matrix TSPLIB file. SOP
/// precedences are written back in the `-1` encoding.
pub fn write_tsplib(instance: &Instance) -> String {
    let n = instance.n();
    let mut out = String::new();
    let ty = match instance.kind() {
        ProblemKind::SymmetricTsp => "TSP",
        ProblemKind::AsymmetricTsp => "ATSP",
        ProblemKind::Sop => "SOP",
    };
    let _ = writeln!(out, "NAME: {}", instance.name());
    let _ = writeln!(out, "TYPE: {ty}");
    let _ = writeln!(out, "DIMENSION: {n}");
    let _ = writeln!(out, "EDGE_WEIGHT_TYPE: EXPLICIT");
    let _ = writeln!(out, "EDGE_WEIGHT_FORMAT: FULL_MATRIX");
    let _ = writeln!(out, "EDGE_WEIGHT_SECTION");
    let mut matrix: Vec<f64> = instance.costs().to_vec();
    for i in 0..n {
        matrix[i * n + i] = 0.0;
    }
    for &(a, b) in instance.precedence() {
        matrix[b * n + a] = -1.0;
    }
    if instance.kind() == ProblemKind::Sop {
        let _ = writeln!(out, "{n}");
    }
    for i in 0..n {
        let row: Vec<String> = (0..n).map(|j| format!("{}", matrix[i * n + j])).collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
    out.push_str("EOF\n");
    out
}
