//! Solver-neutral MILP container.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
    pub cost: f64,
    pub integer: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub name: String,
    pub coefs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// min cᵀx subject to rows and column bounds; integer columns are binary
/// or general integers within their bounds.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Milp {
    pub columns: Vec<Column>,
    pub rows: Vec<Row>,
}

impl Milp {
    pub fn add_col(
        &mut self,
        name: impl Into<String>,
        lo: f64,
        hi: f64,
        cost: f64,
        integer: bool,
    ) -> usize {
        self.columns.push(Column {
            name: name.into(),
            lo,
            hi,
            cost,
            integer,
        });
        self.columns.len() - 1
    }

    pub fn add_row(
        &mut self,
        name: impl Into<String>,
        coefs: Vec<(usize, f64)>,
        sense: Sense,
        rhs: f64,
    ) -> usize {
        let coefs = coefs.into_iter().filter(|(_, a)| *a != 0.0).collect();
        self.rows.push(Row {
            name: name.into(),
            coefs,
            sense,
            rhs,
        });
        self.rows.len() - 1
    }

    pub fn integer_columns(&self) -> Vec<usize> {
        (0..self.columns.len())
            .filter(|&j| self.columns[j].integer)
            .collect()
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        self.columns.iter().zip(x).map(|(c, v)| c.cost * v).sum()
    }

    /// Largest absolute bound or row violation of `x`, scaled per row by
    /// max(1, |rhs|).
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (c, v) in self.columns.iter().zip(x) {
            worst = worst.max(c.lo - v).max(v - c.hi);
        }
        for r in &self.rows {
            let lhs: f64 = r.coefs.iter().map(|(j, a)| a * x[*j]).sum();
            let viol = match r.sense {
                Sense::Le => lhs - r.rhs,
                Sense::Ge => r.rhs - lhs,
                Sense::Eq => (lhs - r.rhs).abs(),
            };
            worst = worst.max(viol / r.rhs.abs().max(1.0));
        }
        worst
    }
}
