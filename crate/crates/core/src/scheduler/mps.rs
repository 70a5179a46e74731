//! Fixed-format MPS export.
//!
//! Rows and columns get positional 8-character names (`R0000001`,
//! `C0000001`); the descriptive names are listed in leading comment lines.
//! Numbers are written in at most 12 characters, so the output is
//! byte-identical for identical models.

use std::fmt::Write as _;
use std::path::Path;

use super::milp::{Milp, Sense};
use super::UcError;

const OBJ: &str = "COST";

fn col_name(j: usize) -> String {
    format!("C{:07}", j + 1)
}

fn row_name(i: usize) -> String {
    format!("R{:07}", i + 1)
}

/// Shortest representation of `v` that fits the 12-character number field.
pub fn format_number(v: f64) -> String {
    let plain = format!("{v}");
    if plain.len() <= 12 {
        return plain;
    }
    for prec in (0..=8).rev() {
        let s = format!("{v:.prec$e}");
        if s.len() <= 12 {
            return s;
        }
    }
    unreachable!("an f64 always fits in 12 characters with 0 fractional digits")
}

fn line(out: &mut String, kind: &str, f2: &str, f3: &str, f4: &str, f5: &str, f6: &str) {
    let mut s = format!(" {kind:<2} {f2:<8}  {f3:<8}  {f4:>12}   {f5:<8}  {f6:>12}");
    s.truncate(s.trim_end().len());
    out.push_str(&s);
    out.push('\n');
}

/// Serialises `model` in fixed MPS format.
pub fn to_mps(model: &Milp, name: &str) -> Result<String, UcError> {
    if model.columns.is_empty() {
        return Err(UcError::Instance(
            "cannot export a model without columns".into(),
        ));
    }
    for (j, c) in model.columns.iter().enumerate() {
        if c.lo.is_nan() || c.hi.is_nan() || c.lo > c.hi || !c.cost.is_finite() {
            return Err(UcError::Instance(format!(
                "column {j} ({}) has invalid bounds or cost",
                c.name
            )));
        }
    }
    let mut out = String::new();
    let _ = writeln!(
        out,
        "* rows {} columns {} integers {}",
        model.rows.len(),
        model.columns.len(),
        model.integer_columns().len()
    );
    for (i, r) in model.rows.iter().enumerate() {
        let _ = writeln!(out, "* {} {}", row_name(i), r.name);
    }
    for (j, c) in model.columns.iter().enumerate() {
        let _ = writeln!(out, "* {} {}", col_name(j), c.name);
    }
    let _ = writeln!(out, "NAME          {name}");
    out.push_str("ROWS\n");
    line(&mut out, "N", OBJ, "", "", "", "");
    for (i, r) in model.rows.iter().enumerate() {
        let kind = match r.sense {
            Sense::Le => "L",
            Sense::Ge => "G",
            Sense::Eq => "E",
        };
        line(&mut out, kind, &row_name(i), "", "", "", "");
    }

    // Column-major coefficient lists.
    let mut by_col: Vec<Vec<(usize, f64)>> = vec![Vec::new(); model.columns.len()];
    for (i, r) in model.rows.iter().enumerate() {
        for &(j, a) in &r.coefs {
            if a != 0.0 {
                by_col[j].push((i, a));
            }
        }
    }
    out.push_str("COLUMNS\n");
    let mut in_int = false;
    let mut markers = 0;
    for (j, c) in model.columns.iter().enumerate() {
        if c.integer != in_int {
            let tag = if c.integer { "'INTORG'" } else { "'INTEND'" };
            line(
                &mut out,
                "",
                &format!("M{markers:07}"),
                "'MARKER'",
                "",
                tag,
                "",
            );
            markers += 1;
            in_int = c.integer;
        }
        let mut entries: Vec<(String, f64)> = Vec::new();
        if c.cost != 0.0 {
            entries.push((OBJ.to_string(), c.cost));
        }
        entries.extend(by_col[j].iter().map(|&(i, a)| (row_name(i), a)));
        if entries.is_empty() {
            // Keep the column declared.
            entries.push((OBJ.to_string(), 0.0));
        }
        let name = col_name(j);
        for pair in entries.chunks(2) {
            let (r1, a1) = &pair[0];
            match pair.get(1) {
                Some((r2, a2)) => line(
                    &mut out,
                    "",
                    &name,
                    r1,
                    &format_number(*a1),
                    r2,
                    &format_number(*a2),
                ),
                None => line(&mut out, "", &name, r1, &format_number(*a1), "", ""),
            }
        }
    }
    if in_int {
        line(
            &mut out,
            "",
            &format!("M{markers:07}"),
            "'MARKER'",
            "",
            "'INTEND'",
            "",
        );
    }

    out.push_str("RHS\n");
    let rhs: Vec<(usize, f64)> = model
        .rows
        .iter()
        .enumerate()
        .filter(|(_, r)| r.rhs != 0.0)
        .map(|(i, r)| (i, r.rhs))
        .collect();
    for pair in rhs.chunks(2) {
        let (i1, b1) = pair[0];
        match pair.get(1) {
            Some(&(i2, b2)) => line(
                &mut out,
                "",
                "RHS",
                &row_name(i1),
                &format_number(b1),
                &row_name(i2),
                &format_number(b2),
            ),
            None => line(
                &mut out,
                "",
                "RHS",
                &row_name(i1),
                &format_number(b1),
                "",
                "",
            ),
        }
    }

    out.push_str("BOUNDS\n");
    for (j, c) in model.columns.iter().enumerate() {
        let name = col_name(j);
        let b = |out: &mut String, kind: &str, v: Option<f64>| {
            line(
                out,
                kind,
                "BND",
                &name,
                &v.map(format_number).unwrap_or_default(),
                "",
                "",
            )
        };
        if c.integer && c.lo == 0.0 && c.hi == 1.0 {
            b(&mut out, "BV", None);
        } else if c.lo == c.hi {
            b(&mut out, "FX", Some(c.lo));
        } else if c.lo == f64::NEG_INFINITY && c.hi == f64::INFINITY {
            b(&mut out, "FR", None);
        } else {
            if c.lo == f64::NEG_INFINITY {
                b(&mut out, "MI", None);
            } else if c.lo != 0.0 || c.integer {
                b(&mut out, "LO", Some(c.lo));
            }
            if c.hi.is_finite() {
                b(&mut out, "UP", Some(c.hi));
            } else if c.integer {
                b(&mut out, "PL", None);
            }
        }
    }
    out.push_str("ENDATA\n");
    Ok(out)
}

/// Writes the model to `path`.
pub fn export_model(model: &Milp, name: &str, path: &Path) -> Result<(), UcError> {
    std::fs::write(path, to_mps(model, name)?)?;
    Ok(())
}
