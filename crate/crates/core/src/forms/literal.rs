//! JSON literals for polynomial forms and polynomial matrix maps.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::backends::PolyForm;
use super::local::multi_indices;
use crate::error::{Error, Result};
use crate::poly::Polynomial;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermLiteral {
    pub multi_index: Vec<usize>,
    /// Exponent string (comma separated, e.g. `"1,0"`) to coefficient.
    pub coeff_poly: BTreeMap<String, f64>,
    pub target_index: usize,
}

/// `{"degree": p, "target": "h"|"V"|"scalar", "terms": [...]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FormLiteral {
    pub degree: usize,
    #[serde(default = "default_target")]
    pub target: String,
    pub terms: Vec<TermLiteral>,
}

fn default_target() -> String {
    "h".into()
}

impl FormLiteral {
    pub fn to_form(&self, chart_dim: usize, target_dim: usize) -> Result<PolyForm> {
        let target_dim = if self.target == "scalar" { 1 } else { target_dim };
        let mut f = PolyForm::new(chart_dim, self.degree, target_dim);
        for t in &self.terms {
            if t.multi_index.len() != self.degree {
                return Err(Error::Parse(format!("multi-index {:?} for a {}-form", t.multi_index, self.degree)));
            }
            let p = Polynomial::from_map(chart_dim, &t.coeff_poly)?;
            f.add_term(&t.multi_index, t.target_index, p).map_err(|e| Error::Parse(e.to_string()))?;
        }
        Ok(f)
    }

    pub fn from_form(f: &PolyForm, target: &str) -> Self {
        use super::FormSource;
        let table = multi_indices(f.chart_dim(), f.degree());
        let terms = f
            .terms()
            .iter()
            .map(|(mi, k, p)| TermLiteral { multi_index: table.list[*mi].clone(), coeff_poly: p.to_map(), target_index: *k })
            .collect();
        FormLiteral { degree: f.degree(), target: target.into(), terms }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntryLiteral {
    pub row: usize,
    pub col: usize,
    pub coeff_poly: BTreeMap<String, f64>,
}

/// Polynomial matrix-valued map `R^m -> R^{rows x cols}`; unlisted entries are zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolyMatrixLiteral {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<EntryLiteral>,
}

/// Dense polynomial matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyMatrix {
    pub rows: usize,
    pub cols: usize,
    pub nvars: usize,
    pub entries: Vec<Polynomial>,
}

impl PolyMatrix {
    pub fn zero(rows: usize, cols: usize, nvars: usize) -> Self {
        PolyMatrix { rows, cols, nvars, entries: vec![Polynomial::zero(nvars); rows * cols] }
    }

    pub fn identity(n: usize, nvars: usize) -> Self {
        let mut m = Self::zero(n, n, nvars);
        for i in 0..n {
            m.set(i, i, Polynomial::constant(nvars, 1.0));
        }
        m
    }

    /// Constant matrix.
    pub fn constant(a: &nalgebra::DMatrix<f64>, nvars: usize) -> Self {
        let mut m = Self::zero(a.nrows(), a.ncols(), nvars);
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                m.set(i, j, Polynomial::constant(nvars, a[(i, j)]));
            }
        }
        m
    }

    /// Entrywise `d/dx_var`.
    pub fn derivative(&self, var: usize) -> Self {
        PolyMatrix { entries: self.entries.iter().map(|p| p.derivative(var)).collect(), ..self.clone() }
    }

    /// Whether every entry has degree zero.
    pub fn is_constant(&self) -> bool {
        self.entries.iter().all(|p| p.degree() == 0)
    }

    pub fn get(&self, i: usize, j: usize) -> &Polynomial {
        &self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, p: Polynomial) {
        self.entries[i * self.cols + j] = p;
    }

    pub fn eval_taylor(&self, x: &[crate::taylor::Taylor]) -> crate::taylor::TMat {
        let data = self.entries.iter().map(|p| p.eval_taylor(x)).collect();
        crate::taylor::TMat::from_entries(self.rows, self.cols, data)
    }

    pub fn eval(&self, x: &[f64]) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_fn(self.rows, self.cols, |i, j| self.get(i, j).eval(x))
    }
}

impl PolyMatrixLiteral {
    pub fn to_matrix(&self, nvars: usize) -> Result<PolyMatrix> {
        let mut m = PolyMatrix::zero(self.rows, self.cols, nvars);
        for e in &self.entries {
            if e.row >= self.rows || e.col >= self.cols {
                return Err(Error::Parse(format!("entry ({}, {}) out of range", e.row, e.col)));
            }
            m.set(e.row, e.col, Polynomial::from_map(nvars, &e.coeff_poly)?);
        }
        Ok(m)
    }

    pub fn from_matrix(m: &PolyMatrix) -> Self {
        let mut entries = Vec::new();
        for i in 0..m.rows {
            for j in 0..m.cols {
                let p = m.get(i, j);
                if !p.is_zero() {
                    entries.push(EntryLiteral { row: i, col: j, coeff_poly: p.to_map() });
                }
            }
        }
        PolyMatrixLiteral { rows: m.rows, cols: m.cols, entries }
    }
}
