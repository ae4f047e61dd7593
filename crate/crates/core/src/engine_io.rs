//! Textual serialization of expansion artifacts, for caching across runs.
//!
//! The format is line oriented and binary free:
//!
//! ```text
//! multiscale-expansion v1
//! dim <D>
//! order <N>
//! k <n>            followed by D² rows of "re im" pairs
//! b <m> <n> <count>
//! component <re(Δ)> <im(Δ)> <power>   followed by D² coefficient rows
//! end
//! ```
//!
//! `K` matrices and `B` frequency components are stored in the original
//! basis; frames are recomputed deterministically on load.

use std::collections::BTreeMap;
use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::engine::MsptExpansion;
use crate::error::{Error, Result};
use crate::signal::IntegratedMatrix;
use crate::superop::{spectral_decompose_matrix, SuperOperator};
use crate::tolerances::Tolerances;

const HEADER: &str = "multiscale-expansion v1";

fn write_matrix(out: &mut String, m: &Array2<C64>) {
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols())
            .map(|j| format!("{:.16e} {:.16e}", m[(i, j)].re, m[(i, j)].im))
            .collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
}

struct Reader<'a> {
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Reader<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            lines: text.lines().enumerate(),
        }
    }

    fn next_line(&mut self) -> Result<(usize, &'a str)> {
        for (idx, line) in self.lines.by_ref() {
            let trimmed = line.trim();
            if !trimmed.is_empty() {
                return Ok((idx + 1, trimmed));
            }
        }
        Err(Error::ArtifactParse {
            line: 0,
            message: "unexpected end of artifact".into(),
        })
    }

    fn read_matrix(&mut self, side: usize) -> Result<Array2<C64>> {
        let mut m = Array2::zeros((side, side));
        for i in 0..side {
            let (lineno, line) = self.next_line()?;
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 2 * side {
                return Err(Error::ArtifactParse {
                    line: lineno,
                    message: format!("expected {} numbers, found {}", 2 * side, fields.len()),
                });
            }
            for j in 0..side {
                let re = parse_f64(fields[2 * j], lineno)?;
                let im = parse_f64(fields[2 * j + 1], lineno)?;
                m[(i, j)] = C64::new(re, im);
            }
        }
        Ok(m)
    }
}

fn parse_f64(s: &str, line: usize) -> Result<f64> {
    s.parse::<f64>().map_err(|_| Error::ArtifactParse {
        line,
        message: format!("cannot parse number `{s}`"),
    })
}

fn parse_usize(s: &str, line: usize) -> Result<usize> {
    s.parse::<usize>().map_err(|_| Error::ArtifactParse {
        line,
        message: format!("cannot parse integer `{s}`"),
    })
}

impl MsptExpansion {
    /// Serialize the ladder to the textual artifact format.
    pub fn write_text(&self) -> String {
        let mut out = String::new();
        out.push_str(HEADER);
        out.push('\n');
        out.push_str(&format!("dim {}\n", self.dim()));
        out.push_str(&format!("order {}\n", self.order()));
        for (n, k) in self.k_generators().iter().enumerate() {
            out.push_str(&format!("k {n}\n"));
            write_matrix(&mut out, k.mat());
        }
        for ((m, n), _) in self.b_raw().iter() {
            let corr = self
                .b_correction(*m, *n)
                .expect("key comes from the ladder");
            out.push_str(&format!("b {m} {n} {}\n", corr.components().len()));
            for (freq, power, coeff) in corr.components() {
                out.push_str(&format!(
                    "component {:.16e} {:.16e} {power}\n",
                    freq.re, freq.im
                ));
                write_matrix(&mut out, coeff);
            }
        }
        out.push_str("end\n");
        out
    }

    /// Reconstruct an expansion from the textual artifact format. Frames are
    /// recomputed from the stored `K` matrices.
    pub fn read_text(text: &str, tol: &Tolerances) -> Result<MsptExpansion> {
        let mut r = Reader::new(text);
        let (lineno, header) = r.next_line()?;
        if header != HEADER {
            return Err(Error::ArtifactParse {
                line: lineno,
                message: format!("unknown header `{header}`"),
            });
        }
        let (lineno, dim_line) = r.next_line()?;
        let dim = match dim_line.strip_prefix("dim ") {
            Some(v) => parse_usize(v.trim(), lineno)?,
            None => {
                return Err(Error::ArtifactParse {
                    line: lineno,
                    message: "expected `dim <D>`".into(),
                })
            }
        };
        let (lineno, order_line) = r.next_line()?;
        let order = match order_line.strip_prefix("order ") {
            Some(v) => parse_usize(v.trim(), lineno)?,
            None => {
                return Err(Error::ArtifactParse {
                    line: lineno,
                    message: "expected `order <N>`".into(),
                })
            }
        };
        let side = dim * dim;

        let mut k: Vec<SuperOperator> = Vec::with_capacity(order + 1);
        for expect_n in 0..=order {
            let (lineno, line) = r.next_line()?;
            if line != format!("k {expect_n}") {
                return Err(Error::ArtifactParse {
                    line: lineno,
                    message: format!("expected `k {expect_n}`, found `{line}`"),
                });
            }
            let m = r.read_matrix(side)?;
            k.push(SuperOperator::from_matrix(m).map_err(|e| Error::ArtifactParse {
                line: lineno,
                message: e.to_string(),
            })?);
        }

        let mut frames = Vec::with_capacity(order + 1);
        for (n, kn) in k.iter().enumerate() {
            frames.push(Arc::new(spectral_decompose_matrix(
                kn.mat(),
                tol,
                &format!(" (K{n})"),
            )?));
        }

        let mut b: BTreeMap<(usize, usize), IntegratedMatrix> = BTreeMap::new();
        loop {
            let (lineno, line) = r.next_line()?;
            if line == "end" {
                break;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 4 || fields[0] != "b" {
                return Err(Error::ArtifactParse {
                    line: lineno,
                    message: format!("expected `b <m> <n> <count>` or `end`, found `{line}`"),
                });
            }
            let m_idx = parse_usize(fields[1], lineno)?;
            let n_idx = parse_usize(fields[2], lineno)?;
            let count = parse_usize(fields[3], lineno)?;
            if n_idx > order || m_idx == 0 || m_idx + n_idx > order {
                return Err(Error::ArtifactParse {
                    line: lineno,
                    message: format!("correction index ({m_idx},{n_idx}) outside order {order}"),
                });
            }
            let frame = &frames[n_idx];
            let mut integ = IntegratedMatrix::zeros(side);
            for _ in 0..count {
                let (lineno, line) = r.next_line()?;
                let fields: Vec<&str> = line.split_whitespace().collect();
                if fields.len() != 4 || fields[0] != "component" {
                    return Err(Error::ArtifactParse {
                        line: lineno,
                        message: format!("expected `component <re> <im> <power>`, found `{line}`"),
                    });
                }
                let freq = C64::new(
                    parse_f64(fields[1], lineno)?,
                    parse_f64(fields[2], lineno)?,
                );
                let power = parse_usize(fields[3], lineno)? as u32;
                let coeff = r.read_matrix(side)?;
                let coeff_eig = frame.to_eigenbasis(&coeff.view());
                for i in 0..side {
                    for j in 0..side {
                        let c = coeff_eig[(i, j)];
                        if c != C64::new(0.0, 0.0) {
                            integ.entries[i * side + j].push(crate::signal::ExpTerm {
                                coeff: c,
                                freq,
                                power,
                            });
                        }
                    }
                }
            }
            b.insert((m_idx, n_idx), integ);
        }

        Ok(MsptExpansion::from_parts(dim, order, k, frames, b))
    }
}
