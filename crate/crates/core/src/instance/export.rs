//! Writers for reduced instances and the MTZ model in LP text format.

use super::{write_tsplib, EdgeMask, Instance, ProblemKind};
use crate::error::{parse_err, Result};
use std::fmt::Write as _;

/// Output layout for a reduced instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReducedMode {
    /// Header `n <n> directed <0|1> edges <k>` followed by `i j cost` lines
    /// (1-based) for kept edges only.
    SparseEdgeList,
    /// Full TSPLIB matrix where every removed edge costs
    /// `sum |c| + 1` over the edge universe.
    PenalizedFullMatrix,
}

/// Penalty assigned to removed edges: larger than any tour avoiding them.
pub fn removal_penalty(instance: &Instance) -> f64 {
    instance.abs_cost_sum() + 1.0
}

pub fn write_reduced(instance: &Instance, mask: &EdgeMask, mode: ReducedMode) -> Result<String> {
    mask.check(instance)?;
    match mode {
        ReducedMode::SparseEdgeList => Ok(write_sparse(instance, mask)),
        ReducedMode::PenalizedFullMatrix => {
            let n = instance.n();
            let penalty = removal_penalty(instance);
            let mut costs = instance.costs().to_vec();
            for (e, &(i, j)) in instance.edges().iter().enumerate() {
                if !mask.is_kept(e) {
                    costs[i * n + j] = penalty;
                    if !instance.is_directed() {
                        costs[j * n + i] = penalty;
                    }
                }
            }
            let reduced = Instance::new(
                instance.name(),
                n,
                costs,
                instance.kind(),
                instance.precedence().to_vec(),
            )?;
            Ok(write_tsplib(&reduced))
        }
    }
}

fn write_sparse(instance: &Instance, mask: &EdgeMask) -> String {
    let mut out = String::new();
    let directed = u8::from(instance.is_directed());
    let _ = writeln!(
        out,
        "n {} directed {} edges {}",
        instance.n(),
        directed,
        mask.kept_count()
    );
    for (e, &(i, j)) in instance.edges().iter().enumerate() {
        if mask.is_kept(e) {
            let _ = writeln!(out, "{} {} {}", i + 1, j + 1, instance.cost(i, j));
        }
    }
    // SOP precedences ride along as optional trailing lines.
    for &(a, b) in instance.precedence() {
        let _ = writeln!(out, "p {} {}", a + 1, b + 1);
    }
    out
}

/// Reads a sparse reduced instance. Edges absent from the list get the
/// removal penalty (computed over the listed edges) and are masked out.
pub fn parse_reduced(text: &str, name: &str) -> Result<(Instance, EdgeMask)> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let (hline, header) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let toks: Vec<&str> = header.split_whitespace().collect();
    if toks.len() != 6 || toks[0] != "n" || toks[2] != "directed" || toks[4] != "edges" {
        return Err(parse_err(
            hline,
            "expected header `n <n> directed <0|1> edges <k>`",
        ));
    }
    let num = |s: &str| -> Result<usize> {
        s.parse()
            .map_err(|_| parse_err(hline, format!("bad number `{s}`")))
    };
    let n = num(toks[1])?;
    let directed = match toks[3] {
        "0" => false,
        "1" => true,
        other => return Err(parse_err(hline, format!("directed must be 0 or 1, got `{other}`"))),
    };
    let k = num(toks[5])?;
    if n < 3 {
        return Err(parse_err(hline, "need at least 3 cities"));
    }

    let mut listed: Vec<(usize, usize, f64)> = Vec::with_capacity(k);
    let mut precedence = Vec::new();
    for (lineno, line) in lines {
        let t: Vec<&str> = line.split_whitespace().collect();
        if t.first() == Some(&"p") {
            if t.len() != 3 {
                return Err(parse_err(lineno, "precedence line needs `p a b`"));
            }
            let a: usize = t[1].parse().map_err(|_| parse_err(lineno, "bad city"))?;
            let b: usize = t[2].parse().map_err(|_| parse_err(lineno, "bad city"))?;
            if a == 0 || b == 0 || a > n || b > n {
                return Err(parse_err(lineno, "city out of range"));
            }
            precedence.push((a - 1, b - 1));
            continue;
        }
        if t.len() != 3 {
            return Err(parse_err(lineno, "edge line needs `i j cost`"));
        }
        let i: usize = t[0].parse().map_err(|_| parse_err(lineno, "bad city"))?;
        let j: usize = t[1].parse().map_err(|_| parse_err(lineno, "bad city"))?;
        let c: f64 = t[2].parse().map_err(|_| parse_err(lineno, "bad cost"))?;
        if i == 0 || j == 0 || i > n || j > n || i == j {
            return Err(parse_err(lineno, format!("invalid edge {i} {j}")));
        }
        listed.push((i - 1, j - 1, c));
    }
    if listed.len() != k {
        return Err(parse_err(
            hline,
            format!("header announces {k} edges, found {}", listed.len()),
        ));
    }
    let penalty = listed.iter().map(|e| e.2.abs()).sum::<f64>() + 1.0;
    let mut costs = vec![penalty; n * n];
    for i in 0..n {
        costs[i * n + i] = 0.0;
    }
    for &(i, j, c) in &listed {
        costs[i * n + j] = c;
        if !directed {
            costs[j * n + i] = c;
        }
    }
    let kind = match (directed, precedence.is_empty()) {
        (false, true) => ProblemKind::SymmetricTsp,
        (true, true) => ProblemKind::AsymmetricTsp,
        (true, false) => ProblemKind::Sop,
        (false, false) => {
            return Err(parse_err(hline, "precedence lines require directed 1"));
        }
    };
    let instance = Instance::new(name, n, costs, kind, precedence)?;
    let mut mask = EdgeMask::none(&instance);
    for &(i, j, _) in &listed {
        mask.set(instance.edge_index(i, j), true);
    }
    Ok((instance, mask))
}

fn term(coef: f64, var: &str, first: bool) -> String {
    let sign = if coef < 0.0 { "-" } else { "+" };
    let mag = coef.abs();
    match (first, coef < 0.0) {
        (true, false) => format!("{mag} {var}"),
        (true, true) => format!("- {mag} {var}"),
        _ => format!(" {sign} {mag} {var}"),
    }
}

fn push_wrapped(out: &mut String, prefix: &str, terms: &[String], suffix: &str) {
    out.push_str(prefix);
    for (k, t) in terms.iter().enumerate() {
        if k > 0 && k % 8 == 0 {
            out.push_str("\n   ");
        }
        out.push_str(t);
    }
    out.push_str(suffix);
    out.push('\n');
}

/// Miller-Tucker-Zemlin model with binaries only for the kept arcs. SOP
/// precedences `(a, b)` add `u_a - u_b <= -1` for non-start cities.
pub fn write_mtz_lp(instance: &Instance, mask: &EdgeMask) -> Result<String> {
    mask.check(instance)?;
    let n = instance.n();
    let var = |i: usize, j: usize| format!("x_{}_{}", i + 1, j + 1);
    let arcs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
        .filter(|&(i, j)| mask.allows(instance, i, j))
        .collect();

    let mut out = String::new();
    let _ = writeln!(
        out,
        "\\ MTZ model for {}: {} cities, {} arc variables",
        instance.name(),
        n,
        arcs.len()
    );
    out.push_str("Minimize\n");
    let obj: Vec<String> = arcs
        .iter()
        .enumerate()
        .map(|(k, &(i, j))| term(instance.cost(i, j), &var(i, j), k == 0))
        .collect();
    push_wrapped(&mut out, " obj: ", &obj, "");

    out.push_str("Subject To\n");
    for i in 0..n {
        let lhs: Vec<String> = arcs
            .iter()
            .filter(|a| a.0 == i)
            .enumerate()
            .map(|(k, &(a, b))| term(1.0, &var(a, b), k == 0))
            .collect();
        write_assignment(&mut out, &format!("out_{}", i + 1), &lhs);
    }
    for j in 0..n {
        let lhs: Vec<String> = arcs
            .iter()
            .filter(|a| a.1 == j)
            .enumerate()
            .map(|(k, &(a, b))| term(1.0, &var(a, b), k == 0))
            .collect();
        write_assignment(&mut out, &format!("in_{}", j + 1), &lhs);
    }
    for &(i, j) in arcs.iter().filter(|&&(i, j)| i != 0 && j != 0) {
        let _ = writeln!(
            out,
            " mtz_{a}_{b}: u_{a} - u_{b} + {n} {x} <= {rhs}",
            a = i + 1,
            b = j + 1,
            x = var(i, j),
            rhs = n - 1
        );
    }
    for &(a, b) in instance.precedence().iter().filter(|p| p.0 != 0) {
        let _ = writeln!(out, " prec_{a}_{b}: u_{a} - u_{b} <= -1", a = a + 1, b = b + 1);
    }

    out.push_str("Bounds\n");
    for i in 1..n {
        let _ = writeln!(out, " u_{} >= 0", i + 1);
    }
    out.push_str("Binaries\n");
    let names: Vec<String> = arcs.iter().map(|&(i, j)| format!(" {}", var(i, j))).collect();
    for chunk in names.chunks(8) {
        let _ = writeln!(out, "{}", chunk.concat());
    }
    out.push_str("End\n");
    Ok(out)
}

fn write_assignment(out: &mut String, name: &str, lhs: &[String]) {
    if lhs.is_empty() {
        // No usable arc: an explicitly infeasible row keeps the file valid.
        let _ = writeln!(out, " {name}: 0 u_2 = 1");
    } else {
        push_wrapped(out, &format!(" {name}: "), lhs, " = 1");
    }
}
