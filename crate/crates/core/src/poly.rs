//! Sparse multivariate polynomials with real coefficients.

use std::collections::BTreeMap;

use rand::Rng;

use crate::error::{Error, Result};
use crate::taylor::Taylor;

/// `sum_e c_e x^e`, keyed by exponent vectors.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Polynomial {
    nvars: usize,
    terms: BTreeMap<Vec<u8>, f64>,
}

impl Polynomial {
    pub fn zero(nvars: usize) -> Self {
        Polynomial { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: f64) -> Self {
        let mut p = Self::zero(nvars);
        p.add_term(vec![0; nvars], c);
        p
    }

    /// The coordinate `x_i`.
    pub fn var(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        let mut p = Self::zero(nvars);
        p.add_term(e, 1.0);
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn add_term(&mut self, exps: Vec<u8>, c: f64) {
        assert_eq!(exps.len(), self.nvars);
        if c == 0.0 {
            return;
        }
        let entry = self.terms.entry(exps).or_insert(0.0);
        *entry += c;
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u8>, &f64)> {
        self.terms.iter()
    }

    pub fn degree(&self) -> usize {
        self.terms.keys().map(|e| e.iter().map(|&x| x as usize).sum()).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.values().all(|&c| c == 0.0)
    }

    /// Random polynomial of total degree at most `degree`, coefficients in `[-scale, scale]`.
    pub fn random(nvars: usize, degree: usize, scale: f64, rng: &mut impl Rng) -> Self {
        let mut p = Self::zero(nvars);
        let b = crate::taylor::basis(nvars, degree);
        for i in 0..b.len() {
            p.add_term(b.exponents(i).to_vec(), rng.gen_range(-scale..scale));
        }
        p
    }

    /// `d/dx_var`.
    pub fn derivative(&self, var: usize) -> Self {
        let mut p = Self::zero(self.nvars);
        for (e, &c) in &self.terms {
            if e[var] > 0 {
                let mut f = e.clone();
                f[var] -= 1;
                p.add_term(f, c * e[var] as f64);
            }
        }
        p
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| c * e.iter().zip(x).map(|(&k, &xi)| xi.powi(k as i32)).product::<f64>())
            .sum()
    }

    /// Evaluate on Taylor arguments, giving an exact expansion.
    pub fn eval_taylor(&self, x: &[Taylor]) -> Taylor {
        assert_eq!(x.len(), self.nvars);
        let b = x.first().map(|t| t.basis().clone());
        let Some(b) = b else {
            let c = self.terms.get(&Vec::new()).copied().unwrap_or(0.0);
            return Taylor::constant(&crate::taylor::basis(0, 0), c);
        };
        let maxdeg = self.terms.keys().flat_map(|e| e.iter().copied()).max().unwrap_or(0) as usize;
        let powers: Vec<Vec<Taylor>> = x
            .iter()
            .map(|xi| {
                let mut v = vec![Taylor::constant(&b, 1.0)];
                for k in 1..=maxdeg {
                    let next = &v[k - 1] * xi;
                    v.push(next);
                }
                v
            })
            .collect();
        let mut out = Taylor::zero(&b);
        for (e, &c) in &self.terms {
            let mut t = Taylor::constant(&b, c);
            for (i, &k) in e.iter().enumerate() {
                if k > 0 {
                    t = &t * &powers[i][k as usize];
                }
            }
            out.add_scaled(&t, 1.0);
        }
        out
    }

    /// Parse a map from comma-separated exponent strings (e.g. `"1,0,2"`) to
    /// coefficients.
    pub fn from_map(nvars: usize, map: &BTreeMap<String, f64>) -> Result<Self> {
        let mut p = Self::zero(nvars);
        for (key, &c) in map {
            let exps: Vec<u8> = if key.trim().is_empty() {
                vec![]
            } else {
                key.split(',')
                    .map(|s| s.trim().parse::<u8>().map_err(|_| Error::Parse(format!("bad exponent string `{key}`"))))
                    .collect::<Result<_>>()?
            };
            if exps.len() != nvars {
                return Err(Error::Parse(format!("exponent string `{key}` needs {nvars} entries")));
            }
            p.add_term(exps, c);
        }
        Ok(p)
    }

    pub fn to_map(&self) -> BTreeMap<String, f64> {
        self.terms
            .iter()
            .map(|(e, &c)| (e.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(","), c))
            .collect()
    }
}
