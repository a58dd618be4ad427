//! Free-format MPS export of the site-selection model, and a reader for the
//! same dialect used to check round trips.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::plan::model::SpflpModel;
use crate::plan::simplex::{LinearProgram, RowSense};

const OBJ_ROW: &str = "obj";

fn sense_code(s: RowSense) -> char {
    match s {
        RowSense::Le => 'L',
        RowSense::Ge => 'G',
        RowSense::Eq => 'E',
    }
}

/// MPS text for `model`. Every column is integer (one INTORG block), every
/// variable gets explicit LO and UP bounds, numbers use shortest round-trip
/// formatting so the reader recovers them bit for bit.
pub fn export_mps(model: &SpflpModel, name: &str) -> String {
    write_mps(&model.lp, name, &model.var_names, &model.row_names)
}

pub fn write_mps(lp: &LinearProgram<f64>, name: &str, var_names: &[String], row_names: &[String]) -> String {
    let n = lp.num_vars();
    let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (r, row) in lp.rows.iter().enumerate() {
        for &(j, a) in &row.coeffs {
            if a != 0.0 {
                cols[j].push((r, a));
            }
        }
    }
    let mut s = String::new();
    let _ = writeln!(s, "NAME {name}");
    let _ = writeln!(s, "OBJSENSE\n    MIN");
    let _ = writeln!(s, "ROWS\n N {OBJ_ROW}");
    for (r, row) in lp.rows.iter().enumerate() {
        let _ = writeln!(s, " {} {}", sense_code(row.sense), row_names[r]);
    }
    let _ = writeln!(s, "COLUMNS");
    let _ = writeln!(s, "    MARKER 'MARKER' 'INTORG'");
    for j in 0..n {
        let c = lp.objective[j];
        // A column with no entries still needs one line to be declared.
        if c != 0.0 || cols[j].is_empty() {
            let _ = writeln!(s, "    {} {OBJ_ROW} {}", var_names[j], c);
        }
        for &(r, a) in &cols[j] {
            let _ = writeln!(s, "    {} {} {}", var_names[j], row_names[r], a);
        }
    }
    let _ = writeln!(s, "    MARKER 'MARKER' 'INTEND'");
    let _ = writeln!(s, "RHS");
    for (r, row) in lp.rows.iter().enumerate() {
        if row.rhs != 0.0 {
            let _ = writeln!(s, "    RHS {} {}", row_names[r], row.rhs);
        }
    }
    let _ = writeln!(s, "BOUNDS");
    for j in 0..n {
        let _ = writeln!(s, " LO BND {} {}", var_names[j], lp.lower[j]);
        if lp.upper[j].is_finite() {
            let _ = writeln!(s, " UP BND {} {}", var_names[j], lp.upper[j]);
        } else {
            let _ = writeln!(s, " PL BND {}", var_names[j]);
        }
    }
    let _ = writeln!(s, "ENDATA");
    s
}

#[derive(Debug, Error, PartialEq)]
pub enum MpsError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("unknown row {0}")]
    UnknownRow(String),
    #[error("unknown column {0}")]
    UnknownColumn(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedMps {
    pub name: String,
    pub minimize: bool,
    pub row_names: Vec<String>,
    pub col_names: Vec<String>,
    pub integer: Vec<bool>,
    pub lp: LinearProgram<f64>,
}

fn syntax(line: usize, message: impl Into<String>) -> MpsError {
    MpsError::Syntax {
        line: line + 1,
        message: message.into(),
    }
}

/// Reads free-format MPS with N/L/G/E rows, INTORG markers, RHS and
/// LO/UP/FX/PL/MI/BV bounds. Columns default to [0, ∞).
pub fn parse_mps(text: &str) -> Result<ParsedMps, MpsError> {
    #[derive(PartialEq, Clone, Copy)]
    enum Sec {
        None,
        ObjSense,
        Rows,
        Columns,
        Rhs,
        Bounds,
    }
    let mut sec = Sec::None;
    let mut name = String::new();
    let mut minimize = true;
    let mut obj_name = String::new();
    let mut row_index: HashMap<String, usize> = HashMap::new();
    let mut row_names = Vec::new();
    let mut senses = Vec::new();
    let mut col_index: HashMap<String, usize> = HashMap::new();
    let mut col_names: Vec<String> = Vec::new();
    let mut integer = Vec::new();
    let mut objective = Vec::new();
    let mut entries: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();
    let mut lower: Vec<f64> = Vec::new();
    let mut upper: Vec<f64> = Vec::new();
    let mut in_int = false;
    let num = |line: usize, t: &str| t.parse::<f64>().map_err(|_| syntax(line, format!("bad number {t}")));

    for (ln, raw) in text.lines().enumerate() {
        if raw.trim().is_empty() || raw.starts_with('*') {
            continue;
        }
        let toks: Vec<&str> = raw.split_whitespace().collect();
        if !raw.starts_with(' ') {
            sec = match toks[0] {
                "NAME" => {
                    name = toks.get(1).unwrap_or(&"").to_string();
                    Sec::None
                }
                "OBJSENSE" => {
                    if let Some(t) = toks.get(1) {
                        minimize = !t.starts_with("MAX");
                    }
                    Sec::ObjSense
                }
                "ROWS" => Sec::Rows,
                "COLUMNS" => Sec::Columns,
                "RHS" => Sec::Rhs,
                "BOUNDS" => Sec::Bounds,
                "RANGES" => return Err(syntax(ln, "RANGES not supported")),
                "ENDATA" => break,
                other => return Err(syntax(ln, format!("unknown section {other}"))),
            };
            continue;
        }
        match sec {
            Sec::ObjSense => minimize = !toks[0].starts_with("MAX"),
            Sec::Rows => {
                if toks.len() != 2 {
                    return Err(syntax(ln, "row line needs sense and name"));
                }
                let sense = match toks[0] {
                    "N" => {
                        if obj_name.is_empty() {
                            obj_name = toks[1].to_string();
                        }
                        continue;
                    }
                    "L" => RowSense::Le,
                    "G" => RowSense::Ge,
                    "E" => RowSense::Eq,
                    s => return Err(syntax(ln, format!("bad row sense {s}"))),
                };
                row_index.insert(toks[1].to_string(), row_names.len());
                row_names.push(toks[1].to_string());
                senses.push(sense);
            }
            Sec::Columns => {
                if toks.len() >= 3 && toks[1] == "'MARKER'" {
                    in_int = match toks[2] {
                        "'INTORG'" => true,
                        "'INTEND'" => false,
                        m => return Err(syntax(ln, format!("bad marker {m}"))),
                    };
                    continue;
                }
                if toks.len() != 3 && toks.len() != 5 {
                    return Err(syntax(ln, "column line needs 3 or 5 fields"));
                }
                let col = match col_index.get(toks[0]) {
                    Some(&c) => c,
                    None => {
                        let c = col_names.len();
                        col_index.insert(toks[0].to_string(), c);
                        col_names.push(toks[0].to_string());
                        integer.push(in_int);
                        objective.push(0.0);
                        entries.push(Vec::new());
                        lower.push(0.0);
                        upper.push(f64::INFINITY);
                        c
                    }
                };
                for pair in toks[1..].chunks(2) {
                    let v = num(ln, pair[1])?;
                    if pair[0] == obj_name {
                        objective[col] = v;
                    } else {
                        let r = *row_index.get(pair[0]).ok_or_else(|| MpsError::UnknownRow(pair[0].into()))?;
                        entries[col].push((r, v));
                    }
                }
            }
            Sec::Rhs => {
                if rhs.is_empty() {
                    rhs = vec![0.0; row_names.len()];
                }
                if toks.len() != 3 && toks.len() != 5 {
                    return Err(syntax(ln, "rhs line needs 3 or 5 fields"));
                }
                for pair in toks[1..].chunks(2) {
                    if pair[0] == obj_name {
                        continue;
                    }
                    let r = *row_index.get(pair[0]).ok_or_else(|| MpsError::UnknownRow(pair[0].into()))?;
                    rhs[r] = num(ln, pair[1])?;
                }
            }
            Sec::Bounds => {
                if toks.len() < 3 {
                    return Err(syntax(ln, "bound line too short"));
                }
                let c = *col_index.get(toks[2]).ok_or_else(|| MpsError::UnknownColumn(toks[2].into()))?;
                let val = || {
                    toks.get(3)
                        .ok_or_else(|| syntax(ln, "bound needs a value"))
                        .and_then(|t| num(ln, t))
                };
                match toks[0] {
                    "LO" => lower[c] = val()?,
                    "UP" => upper[c] = val()?,
                    "FX" => {
                        let v = val()?;
                        lower[c] = v;
                        upper[c] = v;
                    }
                    "PL" => upper[c] = f64::INFINITY,
                    "MI" => lower[c] = f64::NEG_INFINITY,
                    "BV" => {
                        lower[c] = 0.0;
                        upper[c] = 1.0;
                        integer[c] = true;
                    }
                    b => return Err(syntax(ln, format!("bad bound type {b}"))),
                }
            }
            Sec::None => return Err(syntax(ln, "data outside a section")),
        }
    }
    if rhs.is_empty() {
        rhs = vec![0.0; row_names.len()];
    }
    let mut lp = LinearProgram::new(col_names.len());
    lp.objective = objective;
    lp.lower = lower;
    lp.upper = upper;
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); row_names.len()];
    for (c, col) in entries.iter().enumerate() {
        for &(r, v) in col {
            rows[r].push((c, v));
        }
    }
    for (r, coeffs) in rows.into_iter().enumerate() {
        lp.add_row(coeffs, senses[r], rhs[r]);
    }
    Ok(ParsedMps {
        name,
        minimize,
        row_names,
        col_names,
        integer,
        lp,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_round_trip() {
        let mut lp = LinearProgram::<f64>::new(3);
        lp.objective = vec![1.5, 0.0, -2.0];
        lp.upper = vec![1.0, 7.0, f64::INFINITY];
        lp.add_row(vec![(0, 1.0), (2, 0.1)], RowSense::Le, 3.0);
        lp.add_row(vec![(0, 1.0), (1, 1.0)], RowSense::Eq, 0.0);
        lp.add_row(vec![(2, 1.0 / 3.0)], RowSense::Ge, -1.25);
        let vars: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let rows: Vec<String> = ["r1", "r2", "r3"].iter().map(|s| s.to_string()).collect();
        let text = write_mps(&lp, "t", &vars, &rows);
        let p = parse_mps(&text).unwrap();
        assert_eq!(p.name, "t");
        assert!(p.minimize);
        assert_eq!(p.col_names, vars);
        assert_eq!(p.row_names, rows);
        assert_eq!(p.integer, vec![true; 3]);
        assert_eq!(p.lp, lp);
    }

    #[test]
    fn rejects_unknown_row() {
        let text = "NAME x\nROWS\n N obj\nCOLUMNS\n    a nope 1\nENDATA\n";
        assert_eq!(parse_mps(text), Err(MpsError::UnknownRow("nope".into())));
    }
}
