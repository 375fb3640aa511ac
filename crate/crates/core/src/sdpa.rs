//! SDPA sparse format (`.dat-s`) export and a reader for the same format.
//!
//! A program `min cᵀy s.t. b − Ay ∈ K` is written in SDPA form
//! `min cᵀy s.t. Σᵢ Fᵢ yᵢ − F₀ ⪰ 0` with `Fᵢ = −mat(Aᵢ)` and `F₀ = −mat(b)`.
//! The first block is diagonal (negative size in the block structure) and
//! holds every zero-cone row twice, once with each sign, followed by the
//! nonnegative rows. Each PSD cone is one symmetric block; svec
//! off-diagonals are divided by `√2` to recover matrix entries.
//!
//! Entries are emitted by matrix number, then block, then row of the cone
//! program, with values in shortest round-trip scientific notation.

use std::fmt::Write as _;

use crate::cone::Cone;
use crate::error::FormulationError;
use crate::formulation::ConicProgram;

#[derive(Debug, Clone, PartialEq)]
pub struct SdpaEntry {
    /// 0 for `F₀`, `i` for `Fᵢ`.
    pub matrix: usize,
    /// 1-based block number.
    pub block: usize,
    /// 1-based, `row ≤ col`.
    pub row: usize,
    pub col: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpaProblem {
    pub num_vars: usize,
    /// Block orders; negative for diagonal blocks.
    pub block_struct: Vec<i64>,
    pub objective: Vec<f64>,
    pub entries: Vec<SdpaEntry>,
}

/// Where a cone-program row lands in the SDPA blocks.
#[derive(Debug, Clone, Copy)]
enum RowTarget {
    /// Zero-cone row: two diagonal positions with opposite signs.
    Pair {
        pos: usize,
    },
    Diag {
        pos: usize,
    },
    Matrix {
        block: usize,
        row: usize,
        col: usize,
        scale: f64,
    },
}

fn row_targets(prog: &ConicProgram) -> (Vec<RowTarget>, Vec<i64>) {
    let mut targets = Vec::with_capacity(prog.num_rows());
    let mut lp_pos = 1;
    let mut psd_orders = Vec::new();
    // lp rows first so the diagonal block is numbered 1
    for cone in &prog.cones {
        match *cone {
            Cone::Zero(k) => {
                for _ in 0..k {
                    targets.push(Some(RowTarget::Pair { pos: lp_pos }));
                    lp_pos += 2;
                }
            }
            Cone::Nonnegative(k) => {
                for _ in 0..k {
                    targets.push(Some(RowTarget::Diag { pos: lp_pos }));
                    lp_pos += 1;
                }
            }
            Cone::Psd(k) => {
                psd_orders.push(k);
                for _ in 0..crate::cone::svec_len(k) {
                    targets.push(None);
                }
            }
        }
    }
    let lp_size = lp_pos - 1;
    let first_psd_block = if lp_size > 0 { 2 } else { 1 };
    let mut block = first_psd_block;
    let mut row = 0;
    for cone in &prog.cones {
        if let Cone::Psd(k) = *cone {
            for c in 0..k {
                for r in 0..=c {
                    let scale = if r == c {
                        1.0
                    } else {
                        std::f64::consts::FRAC_1_SQRT_2
                    };
                    targets[row] = Some(RowTarget::Matrix {
                        block,
                        row: r + 1,
                        col: c + 1,
                        scale,
                    });
                    row += 1;
                }
            }
            block += 1;
        } else {
            row += cone.rows();
        }
    }
    let mut block_struct = Vec::new();
    if lp_size > 0 {
        block_struct.push(-(lp_size as i64));
    }
    block_struct.extend(psd_orders.iter().map(|&k| k as i64));
    (
        targets
            .into_iter()
            .map(|t| t.expect("every row has a target"))
            .collect(),
        block_struct,
    )
}

fn push_entries(out: &mut Vec<SdpaEntry>, matrix: usize, target: RowTarget, coef: f64) {
    // Fᵢ = −Aᵢ, F₀ = −b
    let v = -coef;
    match target {
        RowTarget::Pair { pos } => {
            out.push(SdpaEntry {
                matrix,
                block: 1,
                row: pos,
                col: pos,
                value: v,
            });
            out.push(SdpaEntry {
                matrix,
                block: 1,
                row: pos + 1,
                col: pos + 1,
                value: -v,
            });
        }
        RowTarget::Diag { pos } => out.push(SdpaEntry {
            matrix,
            block: 1,
            row: pos,
            col: pos,
            value: v,
        }),
        RowTarget::Matrix {
            block,
            row,
            col,
            scale,
        } => out.push(SdpaEntry {
            matrix,
            block,
            row,
            col,
            value: v * scale,
        }),
    }
}

pub fn to_sdpa(prog: &ConicProgram) -> SdpaProblem {
    let (targets, block_struct) = row_targets(prog);
    let mut entries = Vec::new();
    for (r, &b) in prog.b.iter().enumerate() {
        if b != 0.0 {
            push_entries(&mut entries, 0, targets[r], b);
        }
    }
    for col in 0..prog.num_vars() {
        for (r, v) in prog.a.col(col) {
            push_entries(&mut entries, col + 1, targets[r], v);
        }
    }
    // block-major within each matrix; stable so row order is kept
    entries.sort_by_key(|e| (e.matrix, e.block));
    SdpaProblem {
        num_vars: prog.num_vars(),
        block_struct,
        objective: prog.objective.clone(),
        entries,
    }
}

impl SdpaProblem {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "\"edge-based localization relaxation\"");
        let _ = writeln!(s, "{}", self.num_vars);
        let _ = writeln!(s, "{}", self.block_struct.len());
        let bs: Vec<String> = self.block_struct.iter().map(i64::to_string).collect();
        let _ = writeln!(s, "{}", bs.join(" "));
        let c: Vec<String> = self.objective.iter().map(|v| format!("{v:e}")).collect();
        let _ = writeln!(s, "{}", c.join(" "));
        for e in &self.entries {
            let _ = writeln!(
                s,
                "{} {} {} {} {:e}",
                e.matrix, e.block, e.row, e.col, e.value
            );
        }
        s
    }

    pub fn parse(text: &str) -> Result<SdpaProblem, FormulationError> {
        let err = |line: usize, reason: &str| FormulationError::Sdpa {
            line,
            reason: reason.to_string(),
        };
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('"') && !l.starts_with('*'));
        let clean = |l: &str| -> String {
            l.chars()
                .map(|c| {
                    if matches!(c, ',' | '(' | ')' | '{' | '}') {
                        ' '
                    } else {
                        c
                    }
                })
                .collect()
        };
        let (ln, l) = lines
            .next()
            .ok_or_else(|| err(0, "missing variable count"))?;
        let num_vars: usize = clean(l)
            .split_whitespace()
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| err(ln, "bad variable count"))?;
        let (ln, l) = lines.next().ok_or_else(|| err(ln, "missing block count"))?;
        let nblocks: usize = clean(l)
            .split_whitespace()
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| err(ln, "bad block count"))?;
        let (ln, l) = lines
            .next()
            .ok_or_else(|| err(ln, "missing block structure"))?;
        let block_struct: Vec<i64> = clean(l)
            .split_whitespace()
            .take(nblocks)
            .map(|t| t.parse().map_err(|_| err(ln, "bad block size")))
            .collect::<Result<_, _>>()?;
        if block_struct.len() != nblocks {
            return Err(err(ln, "block structure shorter than block count"));
        }
        let mut objective = Vec::with_capacity(num_vars);
        let mut last = ln;
        while objective.len() < num_vars {
            let (ln, l) = lines
                .next()
                .ok_or_else(|| err(last, "objective vector truncated"))?;
            last = ln;
            for t in clean(l).split_whitespace() {
                objective.push(
                    t.parse::<f64>()
                        .map_err(|_| err(ln, "bad objective coefficient"))?,
                );
            }
        }
        if objective.len() != num_vars {
            return Err(err(last, "objective vector has the wrong length"));
        }
        let mut entries = Vec::new();
        for (ln, l) in lines {
            let toks: Vec<&str> = l.split_whitespace().collect();
            if toks.len() != 5 {
                return Err(err(ln, "entry lines need five fields"));
            }
            let idx = |t: &str| t.parse::<usize>().map_err(|_| err(ln, "bad index"));
            let e = SdpaEntry {
                matrix: idx(toks[0])?,
                block: idx(toks[1])?,
                row: idx(toks[2])?,
                col: idx(toks[3])?,
                value: toks[4].parse().map_err(|_| err(ln, "bad value"))?,
            };
            if e.matrix > num_vars
                || e.block == 0
                || e.block > nblocks
                || e.row == 0
                || e.row > e.col
            {
                return Err(err(ln, "entry index out of range"));
            }
            let order = block_struct[e.block - 1].unsigned_abs() as usize;
            if e.col > order || (block_struct[e.block - 1] < 0 && e.row != e.col) {
                return Err(err(ln, "entry outside its block"));
            }
            entries.push(e);
        }
        Ok(SdpaProblem {
            num_vars,
            block_struct,
            objective,
            entries,
        })
    }

    /// Dense blocks of `Σ Fᵢ yᵢ − F₀`.
    pub fn evaluate(&self, y: &[f64]) -> Vec<nalgebra::DMatrix<f64>> {
        let mut blocks: Vec<nalgebra::DMatrix<f64>> = self
            .block_struct
            .iter()
            .map(|&k| {
                let k = k.unsigned_abs() as usize;
                nalgebra::DMatrix::zeros(k, k)
            })
            .collect();
        for e in &self.entries {
            let w = if e.matrix == 0 { -1.0 } else { y[e.matrix - 1] };
            let m = &mut blocks[e.block - 1];
            m[(e.row - 1, e.col - 1)] += w * e.value;
            if e.row != e.col {
                m[(e.col - 1, e.row - 1)] += w * e.value;
            }
        }
        blocks
    }
}

pub fn write_sdpa(prog: &ConicProgram, path: impl AsRef<std::path::Path>) -> std::io::Result<()> {
    std::fs::write(path, to_sdpa(prog).to_text())
}
