use std::sync::Arc;

use super::local::{multi_indices, LocalForm};
use super::FormSource;
use crate::poly::Polynomial;
use crate::taylor::{basis, Taylor};

/// Form with polynomial coefficients `sum_{I,k} p_{I,k}(x) dx^I e_k`.
#[derive(Clone, Debug)]
pub struct PolyForm {
    chart_dim: usize,
    degree: usize,
    target_dim: usize,
    /// `(multi-index rank, target index, coefficient)`
    terms: Vec<(usize, usize, Polynomial)>,
}

impl PolyForm {
    pub fn new(chart_dim: usize, degree: usize, target_dim: usize) -> Self {
        PolyForm { chart_dim, degree, target_dim, terms: Vec::new() }
    }

    /// Add `p(x) dx^{multi_index} e_target`; the multi-index must be strictly increasing.
    pub fn add_term(&mut self, multi_index: &[usize], target: usize, p: Polynomial) -> crate::Result<()> {
        let table = multi_indices(self.chart_dim, self.degree);
        let rank = table.rank(multi_index).ok_or_else(|| {
            crate::Error::DimensionMismatch(format!("multi-index {multi_index:?} is not strictly increasing in 0..{}", self.chart_dim))
        })?;
        if target >= self.target_dim || p.nvars() != self.chart_dim {
            return Err(crate::Error::DimensionMismatch("polynomial term shape".into()));
        }
        self.terms.push((rank, target, p));
        Ok(())
    }

    /// Random form with polynomial coefficients of degree at most `poly_degree`.
    pub fn random(
        chart_dim: usize,
        degree: usize,
        target_dim: usize,
        poly_degree: usize,
        rng: &mut impl rand::Rng,
    ) -> Self {
        let mut f = Self::new(chart_dim, degree, target_dim);
        for mi in 0..multi_indices(chart_dim, degree).len() {
            for k in 0..target_dim {
                f.terms.push((mi, k, Polynomial::random(chart_dim, poly_degree, 1.0, rng)));
            }
        }
        f
    }

    pub fn terms(&self) -> &[(usize, usize, Polynomial)] {
        &self.terms
    }

    pub fn max_poly_degree(&self) -> usize {
        self.terms.iter().map(|t| t.2.degree()).max().unwrap_or(0)
    }
}

impl FormSource for PolyForm {
    fn degree(&self) -> usize {
        self.degree
    }
    fn chart_dim(&self) -> usize {
        self.chart_dim
    }
    fn target_dim(&self) -> usize {
        self.target_dim
    }
    fn expand(&self, x: &[f64], order: usize) -> LocalForm {
        let b = basis(self.chart_dim, order);
        let pt = Taylor::point(&b, x);
        let mut f = LocalForm::zero(self.chart_dim, self.degree, self.target_dim, &b);
        for (mi, k, p) in &self.terms {
            let v = p.eval_taylor(&pt);
            f.coeff_mut(*mi, *k).add_scaled(&v, 1.0);
        }
        f
    }
}

type ExpandFn = Arc<dyn Fn(&[f64], usize) -> LocalForm + Send + Sync>;

/// Form backed by a closure that returns exact expansions.
#[derive(Clone)]
pub struct FnForm {
    chart_dim: usize,
    degree: usize,
    target_dim: usize,
    f: ExpandFn,
}

impl FnForm {
    pub fn new(
        chart_dim: usize,
        degree: usize,
        target_dim: usize,
        f: impl Fn(&[f64], usize) -> LocalForm + Send + Sync + 'static,
    ) -> Self {
        FnForm { chart_dim, degree, target_dim, f: Arc::new(f) }
    }
}

impl FormSource for FnForm {
    fn degree(&self) -> usize {
        self.degree
    }
    fn chart_dim(&self) -> usize {
        self.chart_dim
    }
    fn target_dim(&self) -> usize {
        self.target_dim
    }
    fn expand(&self, x: &[f64], order: usize) -> LocalForm {
        (self.f)(x, order)
    }
}

type SampleFn = Arc<dyn Fn(&[f64], &[&[f64]]) -> Vec<f64> + Send + Sync>;

/// Black-box evaluator `(x, v_1..v_p) -> target`. Derivatives come from
/// central differences with step `1e-4 (1 + |x|)` for first and
/// `1e-3 (1 + |x|)` for second order; expansions stop at order 2.
#[derive(Clone)]
pub struct SampledForm {
    chart_dim: usize,
    degree: usize,
    target_dim: usize,
    f: SampleFn,
}

impl SampledForm {
    pub fn new(
        chart_dim: usize,
        degree: usize,
        target_dim: usize,
        f: impl Fn(&[f64], &[&[f64]]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        SampledForm { chart_dim, degree, target_dim, f: Arc::new(f) }
    }

    pub const MAX_ORDER: usize = 2;

    fn coefficients(&self, x: &[f64]) -> Vec<f64> {
        let n = self.chart_dim;
        let table = multi_indices(n, self.degree);
        let mut out = Vec::with_capacity(table.len() * self.target_dim);
        for idx in &table.list {
            let vecs: Vec<Vec<f64>> = idx
                .iter()
                .map(|&i| {
                    let mut v = vec![0.0; n];
                    v[i] = 1.0;
                    v
                })
                .collect();
            let refs: Vec<&[f64]> = vecs.iter().map(|v| v.as_slice()).collect();
            out.extend((self.f)(x, &refs));
        }
        out
    }
}

impl FormSource for SampledForm {
    fn degree(&self) -> usize {
        self.degree
    }
    fn chart_dim(&self) -> usize {
        self.chart_dim
    }
    fn target_dim(&self) -> usize {
        self.target_dim
    }
    fn exact(&self) -> bool {
        false
    }
    fn expand(&self, x: &[f64], order: usize) -> LocalForm {
        let n = self.chart_dim;
        let b = basis(n, order);
        let mut f = LocalForm::zero(n, self.degree, self.target_dim, &b);
        let len = f.coeffs().len();
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let at = |dx: &[(usize, f64)]| {
            let mut y = x.to_vec();
            for &(i, s) in dx {
                y[i] += s;
            }
            self.coefficients(&y)
        };
        let mut taylor: Vec<Vec<f64>> = vec![vec![0.0; b.len()]; len];
        let c0 = at(&[]);
        for (t, v) in taylor.iter_mut().zip(&c0) {
            t[0] = *v;
        }
        if order >= 1 {
            let h = 1e-4 * (1.0 + norm);
            for i in 0..n {
                let (p, m) = (at(&[(i, h)]), at(&[(i, -h)]));
                let mut e = vec![0u8; n];
                e[i] = 1;
                let mi = b.index_of(&e).unwrap();
                for (t, (a, c)) in taylor.iter_mut().zip(p.iter().zip(&m)) {
                    t[mi] = (a - c) / (2.0 * h);
                }
            }
        }
        if order >= 2 {
            let h = 1e-3 * (1.0 + norm);
            for i in 0..n {
                for j in i..n {
                    let mut e = vec![0u8; n];
                    e[i] += 1;
                    e[j] += 1;
                    let mi = b.index_of(&e).unwrap();
                    let second: Vec<f64> = if i == j {
                        let (p, m) = (at(&[(i, h)]), at(&[(i, -h)]));
                        p.iter().zip(&m).zip(&c0).map(|((a, c), z)| (a - 2.0 * z + c) / (h * h) / 2.0).collect()
                    } else {
                        let pp = at(&[(i, h), (j, h)]);
                        let pm = at(&[(i, h), (j, -h)]);
                        let mp = at(&[(i, -h), (j, h)]);
                        let mm = at(&[(i, -h), (j, -h)]);
                        (0..len).map(|k| (pp[k] - pm[k] - mp[k] + mm[k]) / (4.0 * h * h)).collect()
                    };
                    for (t, v) in taylor.iter_mut().zip(second) {
                        t[mi] = v;
                    }
                }
            }
        }
        for (k, t) in taylor.into_iter().enumerate() {
            let w = self.target_dim;
            *f.coeff_mut(k / w, k % w) = Taylor::from_coeffs(&b, t);
        }
        f
    }
}
