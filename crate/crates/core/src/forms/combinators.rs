use std::sync::Arc;

use nalgebra::DMatrix;

use super::local::LocalForm;
use super::{ChartMap, Form, FormSource, MatrixFn};
use crate::lie::MultilinearFunction;
use crate::taylor::{basis, Taylor};

pub(super) struct Exterior(pub Form);

impl FormSource for Exterior {
    fn degree(&self) -> usize {
        self.0.degree() + 1
    }
    fn chart_dim(&self) -> usize {
        self.0.chart_dim()
    }
    fn target_dim(&self) -> usize {
        self.0.target_dim()
    }
    fn exact(&self) -> bool {
        self.0.exact()
    }
    fn expand(&self, x: &[f64], order: usize) -> LocalForm {
        self.0.expand(x, order + 1).d()
    }
}

pub(super) struct Wedge {
    pub a: Form,
    pub b: Form,
    pub tensor: Arc<Vec<(usize, usize, usize, f64)>>,
    pub out_dim: usize,
}

impl FormSource for Wedge {
    fn degree(&self) -> usize {
        self.a.degree() + self.b.degree()
    }
    fn chart_dim(&self) -> usize {
        self.a.chart_dim()
    }
    fn target_dim(&self) -> usize {
        self.out_dim
    }
    fn exact(&self) -> bool {
        self.a.exact() && self.b.exact()
    }
    fn expand(&self, x: &[f64], order: usize) -> LocalForm {
        if self.degree() > self.chart_dim() {
            return LocalForm::zero(self.chart_dim(), self.degree(), self.out_dim, &basis(self.chart_dim(), order));
        }
        self.a.expand(x, order).wedge(&self.b.expand(x, order), &self.tensor, self.out_dim)
    }
}

pub(super) struct Multilinear {
    pub f: MultilinearFunction,
    pub forms: Vec<Form>,
}

impl FormSource for Multilinear {
    fn degree(&self) -> usize {
        self.forms.iter().map(|f| f.degree()).sum()
    }
    fn chart_dim(&self) -> usize {
        self.forms[0].chart_dim()
    }
    fn target_dim(&self) -> usize {
        1
    }
    fn exact(&self) -> bool {
        self.forms.iter().all(|f| f.exact())
    }
    fn expand(&self, x: &[f64], order: usize) -> LocalForm {
        let n = self.chart_dim();
        if self.degree() > n {
            return LocalForm::zero(n, self.degree(), 1, &basis(n, order));
        }
        let mut acc = self.forms[0].expand(x, order);
        for f in &self.forms[1..] {
            acc = acc.tensor_wedge(&f.expand(x, order));
        }
        let row = DMatrix::from_row_slice(1, self.f.coeffs().len(), self.f.coeffs());
        acc.map_target(&row)
    }
}

pub(super) struct Pullback {
    pub map: ChartMap,
    pub form: Form,
}

impl FormSource for Pullback {
    fn degree(&self) -> usize {
        self.form.degree()
    }
    fn chart_dim(&self) -> usize {
        self.map.in_dim
    }
    fn target_dim(&self) -> usize {
        self.form.target_dim()
    }
    fn exact(&self) -> bool {
        self.form.exact()
    }
    fn expand(&self, y: &[f64], order: usize) -> LocalForm {
        let f = self.map.expand(y, order + 1);
        let x: Vec<f64> = f.iter().map(|t| t.value()).collect();
        self.form.expand(&x, order).pullback(&f)
    }
}

pub(super) struct MapTarget {
    pub form: Form,
    pub m: DMatrix<f64>,
}

impl FormSource for MapTarget {
    fn degree(&self) -> usize {
        self.form.degree()
    }
    fn chart_dim(&self) -> usize {
        self.form.chart_dim()
    }
    fn target_dim(&self) -> usize {
        self.m.nrows()
    }
    fn exact(&self) -> bool {
        self.form.exact()
    }
    fn expand(&self, x: &[f64], order: usize) -> LocalForm {
        self.form.expand(x, order).map_target(&self.m)
    }
}

pub(super) struct Twist {
    pub form: Form,
    pub rows: usize,
    pub field: MatrixFn,
}

impl FormSource for Twist {
    fn degree(&self) -> usize {
        self.form.degree()
    }
    fn chart_dim(&self) -> usize {
        self.form.chart_dim()
    }
    fn target_dim(&self) -> usize {
        self.rows
    }
    fn exact(&self) -> bool {
        self.form.exact()
    }
    fn expand(&self, x: &[f64], order: usize) -> LocalForm {
        let m = (self.field)(&Taylor::point(&basis(x.len(), order), x));
        self.form.expand(x, order).twist(&m)
    }
}

pub(super) struct Combo(pub Vec<(f64, Form)>);

impl FormSource for Combo {
    fn degree(&self) -> usize {
        self.0[0].1.degree()
    }
    fn chart_dim(&self) -> usize {
        self.0[0].1.chart_dim()
    }
    fn target_dim(&self) -> usize {
        self.0[0].1.target_dim()
    }
    fn exact(&self) -> bool {
        self.0.iter().all(|(_, f)| f.exact())
    }
    fn expand(&self, x: &[f64], order: usize) -> LocalForm {
        let mut acc = self.0[0].1.expand(x, order).scale(self.0[0].0);
        for (s, f) in &self.0[1..] {
            acc = acc.add(&f.expand(x, order).scale(*s));
        }
        acc
    }
}
