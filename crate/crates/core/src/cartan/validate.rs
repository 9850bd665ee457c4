use nalgebra::{DMatrix, DVector};

use super::{CartanConnection, GeneralizedCartanConnection, LocalModel, VectorField};
use crate::error::{Error, Result};
use crate::forms::{multi_indices, Form, LocalForm};
use crate::lie::MatrixRep;
use crate::linalg;
use crate::taylor::{basis, TMat, Taylor};

fn vec_max(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn field_at(f: &VectorField, y: &[f64], order: usize) -> Vec<Taylor> {
    f(&Taylor::point(&basis(y.len(), order), y))
}

/// Lie bracket `[U, V]^i = U^j d_j V^i - V^j d_j U^i` of expansions at one point (order >= 1).
pub fn field_bracket(u: &[Taylor], v: &[Taylor]) -> Vec<f64> {
    let n = u.len();
    (0..n)
        .map(|i| (0..n).map(|j| u[j].value() * v[i].derivative(j).value() - v[j].value() * u[i].derivative(j).value()).sum())
        .collect()
}

/// `max |kappa(zeta_X) - X|` over basis `X` of `g` and the samples.
pub fn reproduction_residual(conn: &GeneralizedCartanConnection, samples: &[Vec<f64>]) -> Result<f64> {
    let model = conn.model();
    let gd = model.g().sub().dim();
    let mut worst = 0.0f64;
    for y in samples {
        let k = conn.kappa().at(y).value_matrix();
        for i in 0..gd {
            let x = model.g().sub().basis_vector(i);
            let z = model.fundamental_field(&x).ok_or(Error::ModelMismatch)?;
            let zv: Vec<f64> = field_at(&z, y, 0).iter().map(|t| t.value()).collect();
            let got = &k * DVector::from_vec(zv);
            let want = model.g().embed(&x);
            worst = worst.max(vec_max(got.iter().zip(&want).map(|(a, b)| a - b)));
        }
    }
    Ok(worst)
}

/// Residual of `(r^g)^* Psi = rho(g^{-1}) Psi` for a `W`-valued form, with
/// `rho_inv(z)` giving the matrix of `exp(z)^{-1}` on `W`.
pub fn equivariance_residual_with(
    form: &Form,
    model: &LocalModel,
    rho_inv: &dyn Fn(&[f64]) -> DMatrix<f64>,
    samples: &[Vec<f64>],
    group_samples: &[Vec<f64>],
) -> Result<f64> {
    let p = form.degree();
    let table = multi_indices(form.chart_dim(), p);
    let mut worst = 0.0f64;
    for (y, z) in samples.iter().zip(group_samples.iter().cycle()) {
        let (y2, t) = model.right_action(y, z)?;
        let here = form.at(y);
        let there = form.at(&y2);
        let r = rho_inv(z);
        let cols: Vec<Vec<f64>> = (0..t.ncols()).map(|j| t.column(j).iter().copied().collect()).collect();
        for idx in &table.list {
            let e: Vec<Vec<f64>> = idx
                .iter()
                .map(|&i| {
                    let mut v = vec![0.0; t.ncols()];
                    v[i] = 1.0;
                    v
                })
                .collect();
            let er: Vec<&[f64]> = e.iter().map(|v| v.as_slice()).collect();
            let tr: Vec<&[f64]> = idx.iter().map(|&i| cols[i].as_slice()).collect();
            let lhs = there.eval(&tr);
            let rhs = &r * DVector::from_vec(here.eval(&er));
            worst = worst.max(vec_max(lhs.iter().zip(rhs.iter()).map(|(a, b)| a - b)));
        }
    }
    Ok(worst)
}

/// Residual of `(r^g)^* kappa = Ad(g^{-1}) kappa` at sampled points and group elements.
pub fn equivariance_residual(conn: &GeneralizedCartanConnection, samples: &[Vec<f64>], group_samples: &[Vec<f64>]) -> Result<f64> {
    let model = conn.model().clone();
    equivariance_residual_with(conn.kappa(), &model, &|z| model.ad_h_inverse(z), samples, group_samples)
}

/// Residual of `L_{zeta_Y} kappa = -ad(Y) kappa` for basis `Y` of `g`.
pub fn infinitesimal_equivariance_residual(conn: &GeneralizedCartanConnection, samples: &[Vec<f64>]) -> Result<f64> {
    let model = conn.model();
    let n = model.chart_dim();
    let mut worst = 0.0f64;
    for y in samples {
        let k1 = conn.kappa().expand(y, 1).as_matrix();
        let k0 = k1.value();
        for (i, ad) in model.ad_g().iter().enumerate() {
            let zf = model.fundamental_field(&model.g().sub().basis_vector(i)).ok_or(Error::ModelMismatch)?;
            let z = field_at(&zf, y, 1);
            let mut lhs = &k0 * DMatrix::from_fn(n, n, |a, b| z[a].derivative(b).value());
            for (j, zj) in z.iter().enumerate() {
                lhs += k1.derivative(j).value() * zj.value();
            }
            lhs += ad * &k0;
            worst = worst.max(lhs.amax());
        }
    }
    Ok(worst)
}

/// Minimum over samples of the smallest singular value of `kappa`.
pub fn nondegeneracy(conn: &GeneralizedCartanConnection, samples: &[Vec<f64>]) -> f64 {
    samples
        .iter()
        .map(|y| linalg::min_singular_value(&conn.kappa().at(y).value_matrix()))
        .fold(f64::INFINITY, f64::min)
}

/// `K = d kappa + 1/2 [kappa, kappa]`.
pub fn curvature(conn: &GeneralizedCartanConnection) -> Form {
    let k = conn.kappa();
    let half = k.bracket(k, conn.model().h()).expect("dimensions checked at construction").scale(0.5);
    k.d().add(&half).expect("same shape")
}

/// `max_y |Psi(y)|` over the samples.
pub fn form_norm(form: &Form, samples: &[Vec<f64>]) -> f64 {
    samples.iter().map(|y| form.norm_at(y)).fold(0.0, f64::max)
}

/// `max |i_{zeta_X} Psi|` over basis `X` of `g`.
pub fn horizontality_residual(form: &Form, model: &LocalModel, samples: &[Vec<f64>]) -> Result<f64> {
    if form.degree() == 0 {
        return Ok(0.0);
    }
    let mut worst = 0.0f64;
    for y in samples {
        let at = form.at(y);
        for i in 0..model.g().sub().dim() {
            let z = model.fundamental_field(&model.g().sub().basis_vector(i)).ok_or(Error::ModelMismatch)?;
            worst = worst.max(at.interior(&field_at(&z, y, 0)).max_abs());
        }
    }
    Ok(worst)
}

/// `dK + [kappa, K]`; requires exact expansions.
pub fn bianchi_form(conn: &GeneralizedCartanConnection) -> Form {
    let k = curvature(conn);
    k.d().add(&conn.kappa().bracket(&k, conn.model().h()).expect("same algebra")).expect("same shape")
}

pub fn bianchi_residual(conn: &GeneralizedCartanConnection, samples: &[Vec<f64>]) -> Result<f64> {
    if !conn.kappa().exact() {
        return Err(Error::BackendUnsupported);
    }
    Ok(form_norm(&bianchi_form(conn), samples))
}

/// Bianchi residual for sampled connections, from nested finite differences.
pub fn bianchi_residual_sampled(conn: &GeneralizedCartanConnection, samples: &[Vec<f64>]) -> f64 {
    form_norm(&bianchi_form(conn), samples)
}

/// Scale used to normalise residuals of a form at the samples.
pub fn form_scale(form: &Form, samples: &[Vec<f64>], order: usize) -> f64 {
    samples.iter().map(|y| form.expand(y, order).max_abs_all()).fold(1.0, f64::max)
}

/// Horizontality tolerance on covariant-derivative inputs.
pub const HORIZONTAL_TOL: f64 = 1e-7;

/// `d Psi + rho(kappa) ^ Psi` for a horizontal `Psi`.
pub fn covariant_derivative(conn: &GeneralizedCartanConnection, rho: &MatrixRep, psi: &Form, samples: &[Vec<f64>]) -> Result<Form> {
    if conn.model().has_action() {
        let res = horizontality_residual(psi, conn.model(), samples)?;
        if res > HORIZONTAL_TOL * form_scale(psi, samples, 0) {
            return Err(Error::NotHorizontal(res));
        }
    }
    psi.d().add(&conn.kappa().rho_wedge(psi, rho)?)
}

fn zeta_expansion(conn: &CartanConnection, y: &[f64], order: usize) -> Result<TMat> {
    let k = conn.kappa().expand(y, order).as_matrix();
    let cond = linalg::condition_number(&k.value());
    if !(cond <= 1e12) {
        return Err(Error::SingularCoframe(cond));
    }
    k.inverse().ok_or(Error::SingularCoframe(cond))
}

/// `zeta_X(y) = kappa_y^{-1} X`.
pub fn zeta(conn: &CartanConnection, y: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    let inv = zeta_expansion(conn, y, 0)?.value();
    Ok((inv * DVector::from_column_slice(x)).iter().copied().collect())
}

fn zeta_taylor(inv: &TMat, x: &[f64]) -> Vec<Taylor> {
    let b = inv.basis().clone();
    let xs: Vec<Taylor> = x.iter().map(|&v| Taylor::constant(&b, v)).collect();
    inv.apply(&xs)
}

/// Residual of `[zeta_X, zeta_Y] = zeta_[X,Y]` for `X` in `h`, `Y` in `g`,
/// with `X` ranging over the basis of `h`.
pub fn cartan_bracket_residual(conn: &CartanConnection, samples: &[Vec<f64>]) -> Result<f64> {
    let model = conn.model();
    let h = model.h();
    let mut worst = 0.0f64;
    for y in samples {
        let inv = zeta_expansion(conn, y, 1)?;
        for a in 0..h.dim() {
            let x = h.basis_vector(a);
            let zx = zeta_taylor(&inv, &x);
            for i in 0..model.g().sub().dim() {
                let w = model.g().embed(&model.g().sub().basis_vector(i));
                let br = field_bracket(&zx, &zeta_taylor(&inv, &w));
                let expect = (inv.value() * DVector::from_vec(h.bracket_unchecked(&x, &w))).iter().copied().collect::<Vec<_>>();
                let scale = vec_max(br.iter().copied()).max(1.0);
                worst = worst.max(vec_max(br.iter().zip(&expect).map(|(p, q)| p - q)) / scale);
            }
        }
    }
    Ok(worst)
}

/// Residual of `zeta(K(zeta_X, zeta_Y)) + [zeta_X, zeta_Y] - zeta_[X,Y]`
/// for random `X, Y` in `h`, normalised by the size of the bracket terms.
pub fn bracket_defect_residual(conn: &CartanConnection, samples: &[Vec<f64>], seed: u64) -> Result<f64> {
    bracket_defect(conn, samples, seed, 1.0)
}

/// Same identity with the opposite sign on the curvature term.
pub fn bracket_defect_residual_flipped(conn: &CartanConnection, samples: &[Vec<f64>], seed: u64) -> Result<f64> {
    bracket_defect(conn, samples, seed, -1.0)
}

fn bracket_defect(conn: &CartanConnection, samples: &[Vec<f64>], seed: u64, sign: f64) -> Result<f64> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let h = conn.model().h();
    let kf = curvature(conn);
    let mut worst = 0.0f64;
    for y in samples {
        let x: Vec<f64> = (0..h.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let w: Vec<f64> = (0..h.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let inv = zeta_expansion(conn, y, 1)?;
        let (zx, zw) = (zeta_taylor(&inv, &x), zeta_taylor(&inv, &w));
        let zxv: Vec<f64> = zx.iter().map(|t| t.value()).collect();
        let zwv: Vec<f64> = zw.iter().map(|t| t.value()).collect();
        let kval = kf.at(y).eval(&[&zxv, &zwv]);
        let inv0 = inv.value();
        let lhs = &inv0 * DVector::from_vec(kval);
        let br = field_bracket(&zx, &zw);
        let zb = &inv0 * DVector::from_vec(h.bracket_unchecked(&x, &w));
        let scale = vec_max(br.iter().copied()).max(vec_max(zb.iter().copied())).max(1.0);
        let res = (0..br.len()).map(|i| sign * lhs[i] + br[i] - zb[i]);
        worst = worst.max(vec_max(res) / scale);
    }
    Ok(worst)
}

/// `k(y)(X, Y) = K(zeta_X, zeta_Y)` as a tensor `k[a][b][c]` (component
/// `a`, arguments `e_b, e_c`).
#[derive(Clone, Debug, PartialEq)]
pub struct CurvatureFunction {
    pub dim: usize,
    pub values: Vec<Vec<f64>>,
    pub points: Vec<Vec<f64>>,
}

impl CurvatureFunction {
    pub fn at(&self, sample: usize, a: usize, b: usize, c: usize) -> f64 {
        self.values[sample][(a * self.dim + b) * self.dim + c]
    }

    pub fn antisymmetry_residual(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0f64;
        for s in 0..self.values.len() {
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        worst = worst.max((self.at(s, a, b, c) + self.at(s, a, c, b)).abs());
                    }
                }
            }
        }
        worst
    }

    /// `max |k(u) - k(u')|` over sample pairs.
    pub fn constancy_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.values.len() {
            for j in i + 1..self.values.len() {
                worst = worst.max(vec_max(self.values[i].iter().zip(&self.values[j]).map(|(a, b)| a - b)));
            }
        }
        worst
    }
}

pub fn curvature_function(conn: &CartanConnection, samples: &[Vec<f64>]) -> Result<CurvatureFunction> {
    let n = conn.model().h().dim();
    let kf = curvature(conn);
    let mut values = Vec::new();
    for y in samples {
        let inv = zeta_expansion(conn, y, 0)?.value();
        let cols: Vec<Vec<f64>> = (0..n).map(|b| inv.column(b).iter().copied().collect()).collect();
        let at = kf.at(y);
        let mut t = vec![0.0; n * n * n];
        for b in 0..n {
            for c in 0..n {
                let v = at.eval(&[&cols[b], &cols[c]]);
                for a in 0..n {
                    t[(a * n + b) * n + c] = v[a];
                }
            }
        }
        values.push(t);
    }
    Ok(CurvatureFunction { dim: n, values, points: samples.to_vec() })
}

/// Tolerance on `[g, V] subset V` for reductive splittings.
pub const REDUCTIVE_TOL: f64 = 1e-9;

/// Residual of `[g, V] subset V` for a complement given by columns.
pub fn reductive_residual(model: &LocalModel, complement: &DMatrix<f64>) -> f64 {
    let inc = model.g().inclusion();
    let full = DMatrix::from_fn(inc.nrows(), inc.ncols() + complement.ncols(), |i, j| {
        if j < inc.ncols() { inc[(i, j)] } else { complement[(i, j - inc.ncols())] }
    });
    let proj = linalg::pinv(&full);
    let gd = inc.ncols();
    let mut worst = 0.0f64;
    for ad in model.ad_g() {
        for c in 0..complement.ncols() {
            let v = ad * complement.column(c);
            let coeffs = &proj * v;
            worst = worst.max(vec_max(coeffs.iter().take(gd).copied()));
        }
    }
    worst
}

/// `kappa = theta + omega` along `h = V + g`: returns `(theta, omega)` in
/// complement and subalgebra coordinates.
pub fn reductive_split(conn: &GeneralizedCartanConnection, complement: &DMatrix<f64>) -> Result<(Form, Form)> {
    let model = conn.model();
    let inc = model.g().inclusion();
    let (hd, gd) = (inc.nrows(), inc.ncols());
    if complement.nrows() != hd || complement.ncols() + gd != hd {
        return Err(Error::DimensionMismatch("complement must fill h".into()));
    }
    let res = reductive_residual(model, complement);
    if res > REDUCTIVE_TOL {
        return Err(Error::NotReductive(res));
    }
    let full = DMatrix::from_fn(hd, hd, |i, j| if j < gd { inc[(i, j)] } else { complement[(i, j - gd)] });
    let proj = full.try_inverse().ok_or(Error::NotReductive(f64::INFINITY))?;
    let omega = conn.kappa().map_target(proj.rows(0, gd).into_owned())?;
    let theta = conn.kappa().map_target(proj.rows(gd, hd - gd).into_owned())?;
    Ok((theta, omega))
}

/// Pointwise rank of a form's value matrix.
pub fn pointwise_rank(form: &Form, y: &[f64]) -> usize {
    linalg::rank(&form.at(y).value_matrix(), linalg::RANK_TOL)
}

/// Local-form helper: the value of a 1-form on a Taylor vector field expansion.
pub fn apply_one_form(k: &LocalForm, v: &[Taylor]) -> Vec<Taylor> {
    k.as_matrix().apply(v)
}
