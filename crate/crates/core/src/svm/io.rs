//! Versioned text container for trained models.
//!
//! ```text
//! MLPR-SVM v1 dual-rbf          MLPR-SVM v1 primal-linear
//! gamma <g>                     bias <b>
//! bias <b>                      class_weights <r+> <r->
//! class_weights <r+> <r->       w <w1> ... <wd>
//! nsv <k>
//! <coeff> <f1> ... <fd>   (k lines)
//! ```
//!
//! `dual-linear` models use the dual layout without the `gamma` line.
//! Numbers are written in shortest round-trip form, so loading reproduces
//! every value exactly.

use super::{DualModel, Kernel, LinearModel, SvmModel};
use crate::error::{parse_err, Error, Result};
use std::fmt::Write as _;

const MAGIC: &str = "MLPR-SVM";
const VERSION: &str = "v1";

pub fn save_model(model: &SvmModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC} {VERSION} {}", model.kind_tag());
    match model {
        SvmModel::Dual(m) => {
            if let Kernel::Rbf { gamma } = m.kernel {
                let _ = writeln!(out, "gamma {gamma}");
            }
            let _ = writeln!(out, "bias {}", m.bias);
            let _ = writeln!(out, "class_weights {} {}", m.class_weights.0, m.class_weights.1);
            let _ = writeln!(out, "nsv {}", m.n_support());
            for k in 0..m.n_support() {
                let _ = write!(out, "{}", m.coeffs[k]);
                for v in m.support_vector(k) {
                    let _ = write!(out, " {v}");
                }
                out.push('\n');
            }
        }
        SvmModel::Linear(m) => {
            let _ = writeln!(out, "bias {}", m.bias);
            let _ = writeln!(out, "class_weights {} {}", m.class_weights.0, m.class_weights.1);
            let _ = write!(out, "w");
            for v in &m.weights {
                let _ = write!(out, " {v}");
            }
            out.push('\n');
        }
    }
    out
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn next_line(&mut self) -> Result<(usize, Vec<&'a str>)> {
        for (i, l) in self.inner.by_ref() {
            let toks: Vec<&str> = l.split_whitespace().collect();
            if !toks.is_empty() {
                self.last = i + 1;
                return Ok((i + 1, toks));
            }
        }
        Err(parse_err(self.last + 1, "unexpected end of model file"))
    }

    fn keyed(&mut self, key: &str) -> Result<(usize, Vec<f64>)> {
        let (line, toks) = self.next_line()?;
        if toks[0] != key {
            return Err(parse_err(line, format!("expected `{key}`, found `{}`", toks[0])));
        }
        Ok((line, numbers(line, &toks[1..])?))
    }
}

fn numbers(line: usize, toks: &[&str]) -> Result<Vec<f64>> {
    toks.iter()
        .map(|t| {
            t.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| parse_err(line, format!("corrupt number `{t}`")))
        })
        .collect()
}

fn scalar(line: usize, vals: &[f64], key: &str) -> Result<f64> {
    match vals {
        [v] => Ok(*v),
        _ => Err(parse_err(line, format!("`{key}` takes one value"))),
    }
}

pub fn load_model(text: &str) -> Result<SvmModel> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        last: 0,
    };
    let (hline, header) = lines.next_line()?;
    if header.len() != 3 || header[0] != MAGIC {
        return Err(parse_err(hline, "not an MLPR-SVM model file"));
    }
    if header[1] != VERSION {
        return Err(parse_err(
            hline,
            format!("unsupported model version `{}`", header[1]),
        ));
    }
    match header[2] {
        kind @ ("dual-rbf" | "dual-linear") => {
            let kernel = if kind == "dual-rbf" {
                let (l, v) = lines.keyed("gamma")?;
                let gamma = scalar(l, &v, "gamma")?;
                if gamma <= 0.0 {
                    return Err(parse_err(l, "gamma must be positive"));
                }
                Kernel::Rbf { gamma }
            } else {
                Kernel::Linear
            };
            let (l, v) = lines.keyed("bias")?;
            let bias = scalar(l, &v, "bias")?;
            let (l, cw) = lines.keyed("class_weights")?;
            if cw.len() != 2 {
                return Err(parse_err(l, "`class_weights` takes two values"));
            }
            let (l, v) = lines.keyed("nsv")?;
            let nsv = scalar(l, &v, "nsv")?;
            if nsv < 0.0 || nsv.fract() != 0.0 {
                return Err(parse_err(l, "nsv must be a non-negative integer"));
            }
            let nsv = nsv as usize;
            let mut dim = None;
            let mut coeffs = Vec::with_capacity(nsv);
            let mut support_vectors = Vec::new();
            for _ in 0..nsv {
                let (l, toks) = lines.next_line()?;
                let vals = numbers(l, &toks)?;
                if vals.len() < 2 {
                    return Err(parse_err(l, "support vector line needs a coefficient and features"));
                }
                let d = vals.len() - 1;
                if *dim.get_or_insert(d) != d {
                    return Err(Error::SizeMismatch {
                        expected: dim.unwrap_or(d),
                        actual: d,
                    });
                }
                coeffs.push(vals[0]);
                support_vectors.extend_from_slice(&vals[1..]);
            }
            if let Ok((l, _)) = lines.next_line() {
                return Err(parse_err(l, "trailing data after support vectors"));
            }
            Ok(SvmModel::Dual(DualModel {
                kernel,
                dim: dim.unwrap_or(crate::features::NUM_FEATURES),
                support_vectors,
                coeffs,
                bias,
                class_weights: (cw[0], cw[1]),
            }))
        }
        "primal-linear" => {
            let (l, v) = lines.keyed("bias")?;
            let bias = scalar(l, &v, "bias")?;
            let (l, cw) = lines.keyed("class_weights")?;
            if cw.len() != 2 {
                return Err(parse_err(l, "`class_weights` takes two values"));
            }
            let (l, weights) = lines.keyed("w")?;
            if weights.is_empty() {
                return Err(parse_err(l, "empty weight vector"));
            }
            Ok(SvmModel::Linear(LinearModel {
                weights,
                bias,
                class_weights: (cw[0], cw[1]),
            }))
        }
        other => Err(parse_err(hline, format!("unknown model kind `{other}`"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dual() -> SvmModel {
        SvmModel::Dual(DualModel {
            kernel: Kernel::Rbf { gamma: 1.0 / 6.0 },
            dim: 6,
            support_vectors: (0..12).map(|k| (k as f64 * 0.1).sin()).collect(),
            coeffs: vec![0.3, -0.3],
            bias: -0.1 / 3.0,
            class_weights: (485.0, 1.0),
        })
    }

    #[test]
    fn dual_round_trip_is_exact() {
        let m = dual();
        let text = save_model(&m);
        assert!(text.starts_with("MLPR-SVM v1 dual-rbf\n"));
        assert_eq!(load_model(&text).unwrap(), m);
    }

    #[test]
    fn linear_round_trip_is_exact() {
        let m = SvmModel::Linear(LinearModel {
            weights: vec![0.1, 0.2, 1.0 / 3.0, 0.0, -5.5, 1e-300],
            bias: 0.7,
            class_weights: (13.5, 1.0),
        });
        let text = save_model(&m);
        assert!(text.starts_with("MLPR-SVM v1 primal-linear\n"));
        assert_eq!(load_model(&text).unwrap(), m);
    }

    #[test]
    fn truncated_and_corrupt_files() {
        let text = save_model(&dual());
        let truncated: String = text.lines().take(5).collect::<Vec<_>>().join("\n");
        assert!(matches!(load_model(&truncated), Err(Error::Parse { .. })));
        assert!(load_model(&text.replace("v1", "v2")).is_err());
        assert!(load_model(&text.replace("bias", "bias x")).is_err());
        let nan = text.replacen("0.3 ", "NaN ", 1);
        assert!(load_model(&nan).is_err());
        assert!(load_model("").is_err());
    }

    #[test]
    fn shape_mismatch() {
        let text = "MLPR-SVM v1 dual-linear\nbias 0\nclass_weights 1 1\nnsv 2\n1 0 0\n-1 0 0 0\n";
        assert!(matches!(load_model(text), Err(Error::SizeMismatch { .. })));
    }
}
