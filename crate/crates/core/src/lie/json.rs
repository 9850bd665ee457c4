use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::LieAlgebra;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BracketEntry {
    pub i: usize,
    pub j: usize,
    pub coeffs: BTreeMap<String, f64>,
}

/// On-disk algebra definition. Unlisted pairs bracket to zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlgebraJson {
    pub dim: usize,
    pub basis: Vec<String>,
    pub brackets: Vec<BracketEntry>,
}

impl AlgebraJson {
    pub fn to_algebra(&self) -> Result<LieAlgebra> {
        if self.basis.len() != self.dim {
            return Err(Error::Parse(format!("{} basis names for dim {}", self.basis.len(), self.dim)));
        }
        let d = self.dim;
        let mut c = vec![0.0; d * d * d];
        for e in &self.brackets {
            if e.i >= d || e.j >= d {
                return Err(Error::Parse(format!("bracket index ({}, {}) out of range", e.i, e.j)));
            }
            for (name, &v) in &e.coeffs {
                let k = self
                    .basis
                    .iter()
                    .position(|b| b == name)
                    .ok_or_else(|| Error::Parse(format!("unknown basis name `{name}`")))?;
                c[(k * d + e.i) * d + e.j] = v;
                c[(k * d + e.j) * d + e.i] = -v;
            }
        }
        LieAlgebra::new(d, c, self.basis.clone())
    }

    pub fn from_algebra(alg: &LieAlgebra) -> Self {
        let d = alg.dim();
        let mut brackets = Vec::new();
        for i in 0..d {
            for j in (i + 1)..d {
                let coeffs: BTreeMap<String, f64> = (0..d)
                    .filter(|&k| alg.sc(k, i, j) != 0.0)
                    .map(|k| (alg.names()[k].clone(), alg.sc(k, i, j)))
                    .collect();
                if !coeffs.is_empty() {
                    brackets.push(BracketEntry { i, j, coeffs });
                }
            }
        }
        AlgebraJson { dim: d, basis: alg.names().to_vec(), brackets }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::presets;

    #[test]
    fn presets_round_trip() {
        for name in presets::names() {
            let a = presets::algebra(name).unwrap().algebra;
            let text = serde_json::to_string(&AlgebraJson::from_algebra(&a)).unwrap();
            let back: AlgebraJson = serde_json::from_str(&text).unwrap();
            assert_eq!(back.to_algebra().unwrap(), a, "{name}");
        }
    }
}
