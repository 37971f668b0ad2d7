//! MPS export and import.
//!
//! The writer lays fields out on the classic fixed columns (1-2 code,
//! 5-12 name, 15-22 row, 25-36 value) and widens them when a name is longer
//! than eight characters; the reader splits on whitespace, so it accepts
//! both. The objective sense is declared with an `OBJSENSE MAX` section and
//! every column sits between `INTORG`/`INTEND` markers with a `BV` bound.
//! Model metadata travels as `* meta key=value` comment lines.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::MilpError;
use crate::model::{MilpModel, RowSense, VarId};

const OBJ_ROW: &str = "OBJ";

fn field(s: &str, width: usize) -> String {
    format!("{s:<width$}")
}

fn num(v: f64) -> String {
    // Shortest round-trip representation.
    format!("{v}")
}

pub fn write_mps_string(model: &MilpModel) -> Result<String, MilpError> {
    model.validate()?;
    if model.constraints().iter().any(|c| c.name == OBJ_ROW) {
        return Err(MilpError::InvalidModel(format!("row name {OBJ_ROW} is reserved")));
    }
    let w = model
        .variables()
        .iter()
        .map(|v| v.name.len())
        .chain(model.constraints().iter().map(|c| c.name.len()))
        .max()
        .unwrap_or(0)
        .max(8);

    let mut out = String::new();
    writeln!(out, "NAME          {}", model.name).unwrap();
    for (k, v) in model.metadata() {
        writeln!(out, "* meta {k}={v}").unwrap();
    }
    writeln!(out, "OBJSENSE").unwrap();
    writeln!(out, "    MAX").unwrap();
    writeln!(out, "ROWS").unwrap();
    writeln!(out, " N  {OBJ_ROW}").unwrap();
    for c in model.constraints() {
        let code = match c.sense {
            RowSense::Le => "L",
            RowSense::Ge => "G",
            RowSense::Eq => "E",
        };
        writeln!(out, " {code}  {}", c.name).unwrap();
    }

    let mut columns: Vec<Vec<(&str, f64)>> = vec![Vec::new(); model.num_vars()];
    for (v, c) in model.objective_terms() {
        columns[v.0].push((OBJ_ROW, c));
    }
    for c in model.constraints() {
        for (v, a) in &c.coeffs {
            columns[v.0].push((c.name.as_str(), *a));
        }
    }
    writeln!(out, "COLUMNS").unwrap();
    if model.num_vars() > 0 {
        writeln!(out, "    MARKER                 'MARKER'                 'INTORG'").unwrap();
        for (j, var) in model.variables().iter().enumerate() {
            if columns[j].is_empty() {
                columns[j].push((OBJ_ROW, 0.0));
            }
            for (row, val) in &columns[j] {
                writeln!(out, "    {}  {}  {}", field(&var.name, w), field(row, w), num(*val)).unwrap();
            }
        }
        writeln!(out, "    MARKER                 'MARKER'                 'INTEND'").unwrap();
    }
    writeln!(out, "RHS").unwrap();
    for c in model.constraints() {
        if c.rhs != 0.0 {
            writeln!(out, "    {}  {}  {}", field("RHS", w), field(&c.name, w), num(c.rhs)).unwrap();
        }
    }
    writeln!(out, "BOUNDS").unwrap();
    for var in model.variables() {
        writeln!(out, " BV {}  {}", field("BND", w), var.name).unwrap();
    }
    writeln!(out, "ENDATA").unwrap();
    Ok(out)
}

pub fn export_mps(model: &MilpModel, path: impl AsRef<Path>) -> Result<(), MilpError> {
    let text = write_mps_string(model)?;
    fs::write(path, text)?;
    Ok(())
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Section {
    None,
    ObjSense,
    Rows,
    Columns,
    Rhs,
    Bounds,
}

/// Parses MPS text produced by [`write_mps_string`] (or any free-format MPS
/// restricted to binary columns).
pub fn parse_mps(text: &str) -> Result<MilpModel, MilpError> {
    let mut model = MilpModel::new("model");
    let mut section = Section::None;
    let mut rows: Vec<(String, RowSense)> = Vec::new();
    let mut row_index: HashMap<String, usize> = HashMap::new();
    let mut row_terms: Vec<Vec<(VarId, f64)>> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();
    let mut var_index: HashMap<String, VarId> = HashMap::new();
    let mut objective: Vec<(VarId, f64)> = Vec::new();
    let mut maximize = false;
    let mut in_int = false;
    let mut scale: Option<f64> = None;

    for (ln, raw) in text.lines().enumerate() {
        let line_no = ln + 1;
        let err = |msg: String| MilpError::Parse { line: line_no, msg };
        if let Some(rest) = raw.strip_prefix("* meta ") {
            let (k, v) = rest.split_once('=').ok_or_else(|| err("malformed meta line".into()))?;
            if k == "objective_scale" {
                scale = Some(v.parse().map_err(|_| err(format!("bad scale {v}")))?);
            } else {
                model.set_metadata(k, v);
            }
            continue;
        }
        if raw.trim().is_empty() || raw.starts_with('*') {
            continue;
        }
        let tokens: Vec<&str> = raw.split_whitespace().collect();
        if !raw.starts_with(' ') && !raw.starts_with('\t') {
            section = match tokens[0] {
                "NAME" => {
                    model.name = tokens.get(1).unwrap_or(&"model").to_string();
                    Section::None
                }
                "OBJSENSE" => {
                    if let Some(s) = tokens.get(1) {
                        maximize = *s == "MAX" || *s == "MAXIMIZE";
                    }
                    Section::ObjSense
                }
                "ROWS" => Section::Rows,
                "COLUMNS" => Section::Columns,
                "RHS" => Section::Rhs,
                "BOUNDS" => Section::Bounds,
                "ENDATA" => break,
                other => return Err(err(format!("unknown section {other}"))),
            };
            continue;
        }
        match section {
            Section::ObjSense => maximize = tokens[0] == "MAX" || tokens[0] == "MAXIMIZE",
            Section::Rows => {
                if tokens.len() != 2 {
                    return Err(err("row line needs a type and a name".into()));
                }
                let sense = match tokens[0] {
                    "N" => continue,
                    "L" => RowSense::Le,
                    "G" => RowSense::Ge,
                    "E" => RowSense::Eq,
                    t => return Err(err(format!("unknown row type {t}"))),
                };
                row_index.insert(tokens[1].to_string(), rows.len());
                rows.push((tokens[1].to_string(), sense));
                row_terms.push(Vec::new());
                rhs.push(0.0);
            }
            Section::Columns => {
                if tokens.len() >= 3 && tokens[1] == "'MARKER'" {
                    in_int = tokens[2] == "'INTORG'";
                    continue;
                }
                if tokens.len() != 3 && tokens.len() != 5 {
                    return Err(err("column line needs one or two (row, value) pairs".into()));
                }
                if !in_int {
                    return Err(err(format!("column {} outside integer markers", tokens[0])));
                }
                let var = *var_index
                    .entry(tokens[0].to_string())
                    .or_insert_with(|| model.add_binary(tokens[0]));
                for pair in tokens[1..].chunks(2) {
                    let value: f64 = pair[1].parse().map_err(|_| err(format!("bad number {}", pair[1])))?;
                    if pair[0] == OBJ_ROW {
                        objective.push((var, value));
                    } else {
                        let r = *row_index.get(pair[0]).ok_or_else(|| err(format!("unknown row {}", pair[0])))?;
                        row_terms[r].push((var, value));
                    }
                }
            }
            Section::Rhs => {
                if tokens.len() != 3 && tokens.len() != 5 {
                    return Err(err("rhs line needs one or two (row, value) pairs".into()));
                }
                for pair in tokens[1..].chunks(2) {
                    let value: f64 = pair[1].parse().map_err(|_| err(format!("bad number {}", pair[1])))?;
                    if pair[0] == OBJ_ROW {
                        continue;
                    }
                    let r = *row_index.get(pair[0]).ok_or_else(|| err(format!("unknown row {}", pair[0])))?;
                    rhs[r] = value;
                }
            }
            Section::Bounds => {
                if tokens.len() < 3 || tokens[0] != "BV" {
                    return Err(err("only BV bounds are supported".into()));
                }
                if !var_index.contains_key(tokens[2]) {
                    return Err(err(format!("bound on unknown column {}", tokens[2])));
                }
            }
            Section::None => return Err(err("data line outside a section".into())),
        }
    }

    if !maximize && !objective.is_empty() {
        return Err(MilpError::Parse { line: 0, msg: "only maximization models are supported".into() });
    }
    for (var, c) in objective {
        model.add_objective(var, c);
    }
    for (((name, sense), terms), b) in rows.into_iter().zip(row_terms).zip(rhs) {
        model.add_constraint(name, terms, sense, b);
    }
    if let Some(s) = scale {
        model.set_objective_scale(s);
    }
    Ok(model)
}

/// Reads a `name value` solution file (one variable per line, `#` comments)
/// and returns a full assignment. Unlisted variables are zero.
pub fn parse_solution(text: &str, model: &MilpModel) -> Result<Vec<bool>, MilpError> {
    let index: HashMap<&str, usize> =
        model.variables().iter().enumerate().map(|(i, v)| (v.name.as_str(), i)).collect();
    let mut out = vec![false; model.num_vars()];
    for (ln, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| MilpError::Parse { line: ln + 1, msg };
        let mut it = line.split_whitespace();
        let (Some(name), Some(val), None) = (it.next(), it.next(), it.next()) else {
            return Err(err("expected `name value`".into()));
        };
        let j = *index.get(name).ok_or_else(|| err(format!("unknown variable {name}")))?;
        let v: f64 = val.parse().map_err(|_| err(format!("bad value {val}")))?;
        if (v - v.round()).abs() > 1e-6 || !(0.0..=1.0).contains(&v.round()) {
            return Err(err(format!("{name} = {v} is not binary")));
        }
        out[j] = v.round() == 1.0;
    }
    Ok(out)
}

pub fn read_solution(path: impl AsRef<Path>, model: &MilpModel) -> Result<Vec<bool>, MilpError> {
    parse_solution(&fs::read_to_string(path)?, model)
}

/// Writes an assignment in the format [`parse_solution`] reads.
pub fn write_solution_string(model: &MilpModel, assignment: &[bool]) -> String {
    let mut out = String::new();
    for (var, on) in model.variables().iter().zip(assignment) {
        writeln!(out, "{} {}", var.name, u8::from(*on)).unwrap();
    }
    out
}
