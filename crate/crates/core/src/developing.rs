//! Flat connections: Maurer-Cartan residuals, development along paths,
//! holonomy of loops and the pullback `f -> f^kappa` of alternating functions.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cartan::form_norm;
use crate::chart::GroupChart;
use crate::error::{Error, Result};
use crate::forms::{ChartMap, Form};
use crate::group::GroupValuedMap;
use crate::lie::presets::{self, GroupRelation};
use crate::lie::{LieAlgebra, MatrixRep, MultilinearFunction};
use crate::poly::Polynomial;
use crate::taylor::TMat;

/// Tolerance for `c(0) = c(1)`.
pub const CLOSED_TOL: f64 = 1e-12;
pub const DEFAULT_STEPS: usize = 1024;
/// Steps between step-doubling checks and relation projections.
pub const CHECK_EVERY: usize = 64;
pub const LOCAL_ERROR_TOL: f64 = 1e-6;
pub const PROJECTION_TRIGGER: f64 = 1e-9;
/// Flatness level above which development only warns.
pub const FLATNESS_WARN: f64 = 1e-4;

/// Sign of the quadratic term in the Maurer-Cartan equation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Convention {
    /// `d kappa + 1/2 [kappa, kappa]`, satisfied by `phi^{-1} d phi`.
    Right,
    /// `d kappa - 1/2 [kappa, kappa]`, satisfied by `d phi phi^{-1}`.
    Left,
}

/// The Maurer-Cartan expression of `kappa` for the chosen sign.
pub fn mc_form(kappa: &Form, alg: &LieAlgebra, convention: Convention) -> Result<Form> {
    let s = match convention {
        Convention::Right => 0.5,
        Convention::Left => -0.5,
    };
    kappa.d().add(&kappa.bracket(kappa, alg)?.scale(s))
}

pub fn mc_residual(kappa: &Form, alg: &LieAlgebra, convention: Convention, samples: &[Vec<f64>]) -> Result<f64> {
    Ok(form_norm(&mc_form(kappa, alg, convention)?, samples))
}

/// A smooth path `c: [0, 1] -> R^n`.
///
/// `poly`: `c(t) = sum_k p_k t^k` with `control_points[k] = p_k`.
/// `polyline_smooth`: through the control points, one segment per gap, each
/// traversed with the smoothstep profile `3u^2 - 2u^3` so the velocity
/// vanishes at every control point and the path is `C^1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Path {
    Poly { control_points: Vec<Vec<f64>> },
    PolylineSmooth { control_points: Vec<Vec<f64>> },
}

impl Path {
    pub fn poly(coefficients: Vec<Vec<f64>>) -> Result<Self> {
        Self::checked(Path::Poly { control_points: coefficients })
    }

    pub fn polyline_smooth(points: Vec<Vec<f64>>) -> Result<Self> {
        Self::checked(Path::PolylineSmooth { control_points: points })
    }

    fn checked(p: Path) -> Result<Self> {
        let pts = p.control_points();
        if pts.is_empty() || pts.iter().any(|q| q.len() != pts[0].len()) {
            return Err(Error::DimensionMismatch("path control points".into()));
        }
        if matches!(p, Path::PolylineSmooth { .. }) && pts.len() < 2 {
            return Err(Error::DimensionMismatch("polyline needs two points".into()));
        }
        Ok(p)
    }

    /// Straight segment from `a` to `b`.
    pub fn segment(a: &[f64], b: &[f64]) -> Result<Self> {
        Self::poly(vec![a.to_vec(), b.iter().zip(a).map(|(p, q)| p - q).collect()])
    }

    /// `a + t (b - a) + t (1 - t) q(t)` with `q(t) = sum_k q_k t^k`.
    pub fn bent(a: &[f64], b: &[f64], q: &[Vec<f64>]) -> Result<Self> {
        let n = a.len();
        let mut c = vec![vec![0.0; n]; q.len() + 2];
        c[0] = a.to_vec();
        for i in 0..n {
            c[1][i] = b[i] - a[i];
        }
        for (k, qk) in q.iter().enumerate() {
            for i in 0..n {
                c[k + 1][i] += qk[i];
                c[k + 2][i] -= qk[i];
            }
        }
        Self::poly(c)
    }

    /// Random bent path with endpoints in `[-w/2, w/2]^n` and bulge at most
    /// `0.4 w`, so it stays in the box of half width `w`.
    pub fn random(dim: usize, half_width: f64, degree: usize, closed: bool, rng: &mut impl Rng) -> Self {
        let a: Vec<f64> = (0..dim).map(|_| rng.gen_range(-0.5..0.5) * half_width).collect();
        let b: Vec<f64> = if closed { a.clone() } else { (0..dim).map(|_| rng.gen_range(-0.5..0.5) * half_width).collect() };
        let each = 1.6 * half_width / (degree + 1) as f64;
        let q: Vec<Vec<f64>> = (0..=degree).map(|_| (0..dim).map(|_| rng.gen_range(-each..each)).collect()).collect();
        Self::bent(&a, &b, &q).expect("consistent dimensions")
    }

    pub fn control_points(&self) -> &[Vec<f64>] {
        match self {
            Path::Poly { control_points } | Path::PolylineSmooth { control_points } => control_points,
        }
    }

    pub fn dim(&self) -> usize {
        self.control_points()[0].len()
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        self.eval_with_derivative(t).0
    }

    pub fn derivative(&self, t: f64) -> Vec<f64> {
        self.eval_with_derivative(t).1
    }

    pub fn eval_with_derivative(&self, t: f64) -> (Vec<f64>, Vec<f64>) {
        let n = self.dim();
        match self {
            Path::Poly { control_points } => {
                let mut c = vec![0.0; n];
                let mut dc = vec![0.0; n];
                for p in control_points.iter().rev() {
                    for i in 0..n {
                        dc[i] = dc[i] * t + c[i];
                        c[i] = c[i] * t + p[i];
                    }
                }
                (c, dc)
            }
            Path::PolylineSmooth { control_points } => {
                let segs = control_points.len() - 1;
                let x = (t.clamp(0.0, 1.0) * segs as f64).min(segs as f64);
                let i = (x.floor() as usize).min(segs - 1);
                let u = x - i as f64;
                let (p, q) = (&control_points[i], &control_points[i + 1]);
                let s = u * u * (3.0 - 2.0 * u);
                let ds = 6.0 * u * (1.0 - u) * segs as f64;
                ((0..n).map(|j| p[j] + s * (q[j] - p[j])).collect(), (0..n).map(|j| ds * (q[j] - p[j])).collect())
            }
        }
    }

    pub fn closure_gap(&self) -> f64 {
        self.eval(0.0).iter().zip(self.eval(1.0)).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn is_closed(&self) -> bool {
        self.closure_gap() <= CLOSED_TOL
    }

    /// Largest excess of `|c_i(t)|` over the half widths, on a fine grid.
    pub fn box_excess(&self, half_widths: &[f64]) -> f64 {
        (0..=256)
            .map(|k| {
                let c = self.eval(k as f64 / 256.0);
                c.iter().zip(half_widths).fold(f64::NEG_INFINITY, |m, (x, w)| m.max(x.abs() - w))
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn check_in_box(&self, half_widths: &[f64]) -> Result<()> {
        if half_widths.len() != self.dim() {
            return Err(Error::DimensionMismatch("path vs chart box".into()));
        }
        let e = self.box_excess(half_widths);
        if e > 0.0 {
            return Err(Error::OutsideChart(e));
        }
        Ok(())
    }

    /// Central-difference cross-check of the derivative evaluator.
    pub fn derivative_residual(&self) -> f64 {
        let h = 1e-5;
        // probe points avoid polyline nodes, where the second derivative jumps
        (0..17)
            .map(|k| {
                let t = (k as f64 + 0.3) / 17.0;
                let (p, m) = (self.eval(t + h), self.eval(t - h));
                let d = self.derivative(t);
                (0..self.dim()).fold(0.0, |w: f64, i| w.max(((p[i] - m[i]) / (2.0 * h) - d[i]).abs()))
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug)]
pub struct DevelopOptions {
    pub steps: usize,
    /// Defining relation to project onto every `CHECK_EVERY` steps.
    pub relation: GroupRelation,
}

impl Default for DevelopOptions {
    fn default() -> Self {
        DevelopOptions { steps: DEFAULT_STEPS, relation: GroupRelation::None }
    }
}

impl DevelopOptions {
    pub fn with_steps(steps: usize) -> Self {
        DevelopOptions { steps, ..Default::default() }
    }
}

/// Solution of `phi' = phi rho(kappa(c'))` on `N + 1` uniform nodes.
#[derive(Clone, Debug)]
pub struct Development {
    pub times: Vec<f64>,
    pub values: Vec<DMatrix<f64>>,
    /// Largest step-doubling error estimate.
    pub local_error: f64,
    /// Largest `|phi^{-1} phi' - rho(kappa(c'))|` at `N / 10` interior
    /// checkpoints, `phi'` by a five-point stencil on the nodes.
    pub match_residual: f64,
    /// Right Maurer-Cartan residual along the path when it exceeds
    /// `FLATNESS_WARN` times the size of `d kappa`.
    pub flatness_warning: Option<f64>,
}

impl Development {
    pub fn endpoint(&self) -> &DMatrix<f64> {
        self.values.last().expect("at least one node")
    }
}

fn velocity_matrix(kappa: &Form, rep: &MatrixRep, path: &Path, t: f64) -> DMatrix<f64> {
    let (c, dc) = path.eval_with_derivative(t);
    rep.apply(&kappa.eval(&c, &[&dc]))
}

fn rk4_step(phi: &DMatrix<f64>, a0: &DMatrix<f64>, am: &DMatrix<f64>, a1: &DMatrix<f64>, h: f64) -> DMatrix<f64> {
    let k1 = phi * a0;
    let k2 = (phi + &k1 * (h / 2.0)) * am;
    let k3 = (phi + &k2 * (h / 2.0)) * am;
    let k4 = (phi + &k3 * h) * a1;
    phi + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.amax()
}

/// Integrates `phi' = phi rho(kappa_{c(t)}(c'(t)))`, `phi(0) = phi0`, by
/// classical RK4.
pub fn develop(kappa: &Form, rep: &MatrixRep, path: &Path, phi0: &DMatrix<f64>, opts: &DevelopOptions) -> Result<Development> {
    if kappa.degree() != 1 || kappa.chart_dim() != path.dim() || kappa.target_dim() != rep.algebra_dim() {
        return Err(Error::DimensionMismatch("connection, path and representation".into()));
    }
    if phi0.nrows() != rep.dim() || phi0.ncols() != rep.dim() {
        return Err(Error::DimensionMismatch("initial value".into()));
    }
    let n = opts.steps.max(1);
    let h = 1.0 / n as f64;
    let alg_check = (0..=8).map(|k| path.eval(k as f64 / 8.0)).collect::<Vec<_>>();
    let flatness_warning = flatness_along(kappa, rep, &alg_check)?;

    let mut values = Vec::with_capacity(n + 1);
    let mut phi = phi0.clone();
    values.push(phi.clone());
    let mut a_prev = velocity_matrix(kappa, rep, path, 0.0);
    let mut local_error = 0.0f64;
    let mut failures = 0;
    for i in 0..n {
        let t = i as f64 * h;
        let am = velocity_matrix(kappa, rep, path, t + h / 2.0);
        let a1 = velocity_matrix(kappa, rep, path, t + h);
        let next = rk4_step(&phi, &a_prev, &am, &a1, h);
        if i % CHECK_EVERY == 0 {
            let aq = velocity_matrix(kappa, rep, path, t + h / 4.0);
            let a3q = velocity_matrix(kappa, rep, path, t + 3.0 * h / 4.0);
            let half = rk4_step(&phi, &a_prev, &aq, &am, h / 2.0);
            let two = rk4_step(&half, &am, &a3q, &a1, h / 2.0);
            let est = max_abs(&(&two - &next)) / 15.0;
            local_error = local_error.max(est);
            if est > LOCAL_ERROR_TOL {
                failures += 1;
                if failures >= 3 {
                    return Err(Error::StepUnstable(est));
                }
            }
        }
        phi = next;
        if (i + 1) % CHECK_EVERY == 0 && opts.relation.residual(&phi) > PROJECTION_TRIGGER {
            phi = opts.relation.project(&phi);
        }
        values.push(phi.clone());
        a_prev = a1;
    }
    let times: Vec<f64> = (0..=n).map(|i| i as f64 * h).collect();
    let match_residual = match_residual(kappa, rep, path, &values, h);
    Ok(Development { times, values, local_error, match_residual, flatness_warning })
}

fn flatness_along(kappa: &Form, rep: &MatrixRep, points: &[Vec<f64>]) -> Result<Option<f64>> {
    // structure constants recovered from the representation
    let alg = LieAlgebra::from_matrices(rep.generators(), (0..rep.algebra_dim()).map(|i| format!("X{i}")).collect());
    let Ok(alg) = alg else { return Ok(None) };
    let res = mc_residual(kappa, &alg, Convention::Right, points)?;
    let scale = form_norm(&kappa.d(), points).max(1.0);
    Ok((res > FLATNESS_WARN * scale).then_some(res))
}

fn match_residual(kappa: &Form, rep: &MatrixRep, path: &Path, values: &[DMatrix<f64>], h: f64) -> f64 {
    let n = values.len() - 1;
    if n < 20 {
        return 0.0;
    }
    let mut worst = 0.0f64;
    for k in 1..10 {
        let i = (k * n / 10).clamp(2, n - 2);
        let d = (&values[i - 2] - &values[i - 1] * 8.0 + &values[i + 1] * 8.0 - &values[i + 2]) / (12.0 * h);
        let Some(inv) = values[i].clone().try_inverse() else { return f64::INFINITY };
        let a = velocity_matrix(kappa, rep, path, i as f64 * h);
        worst = worst.max(max_abs(&(inv * d - a)));
    }
    worst
}

/// Development around a closed loop from the identity; returns `phi(1)`.
pub fn holonomy(kappa: &Form, rep: &MatrixRep, path: &Path, opts: &DevelopOptions) -> Result<DMatrix<f64>> {
    if !path.is_closed() {
        return Err(Error::PathNotClosed(path.closure_gap()));
    }
    let d = rep.dim();
    Ok(develop(kappa, rep, path, &DMatrix::identity(d, d), opts)?.endpoint().clone())
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// `f^kappa(X_1..X_k) = f(kappa X_1, .., kappa X_k)` for alternating `f`.
pub fn flat_pullback(kappa: &Form, f: &MultilinearFunction) -> Result<Form> {
    if f.dim() != kappa.target_dim() || kappa.degree() != 1 {
        return Err(Error::TargetMismatch("function vs connection".into()));
    }
    if f.arity() == 0 {
        let c = f.coeffs()[0];
        return Ok(Form::function(kappa.chart_dim(), 1, move |x| vec![crate::taylor::Taylor::constant(x[0].basis(), c)]));
    }
    let k = f.arity();
    Ok(Form::apply_multilinear(f, &vec![kappa.clone(); k])?.scale(1.0 / factorial(k)))
}

/// Left Maurer-Cartan form `a^{-1} da` of a first-kind or second-kind chart.
pub fn left_maurer_cartan(chart: &GroupChart) -> Form {
    let chart = chart.clone();
    let n = chart.dim();
    Form::one_form_from_field(n, n, move |s| chart.left_trivialization(s))
}

/// `f^psi` where `psi = a(s(x))` for a chart `a` and coordinates `s(x)`:
/// the left-invariant extension of `f` pulled back along the coordinates.
pub fn pullback_of_left_invariant(chart: &GroupChart, coords: &ChartMap, f: &MultilinearFunction) -> Result<Form> {
    flat_pullback(&left_maurer_cartan(chart), f)?.pullback(coords)
}

/// Group-valued map `x -> exp(rho(P(x)))` with its chart coordinates `P`.
#[derive(Clone, Debug)]
pub struct ExpMap {
    pub name: String,
    pub algebra: String,
    pub polys: Vec<Polynomial>,
    pub map: GroupValuedMap,
    pub chart: GroupChart,
}

impl ExpMap {
    pub fn new(name: &str, algebra: &str, polys: Vec<Polynomial>) -> Result<Self> {
        let p = presets::algebra(algebra)?;
        let rep = p.rep()?.clone();
        let m = polys.first().map(|q| q.nvars()).unwrap_or(0);
        let map = GroupValuedMap::exp_product(m, rep.clone(), vec![polys.clone()])?;
        let chart = GroupChart::first_kind(p.algebra.clone(), rep, p.relation.clone())?;
        Ok(ExpMap { name: name.into(), algebra: algebra.into(), polys, map, chart })
    }

    pub fn domain_dim(&self) -> usize {
        self.map.domain_dim()
    }

    pub fn relation(&self) -> GroupRelation {
        self.chart.relation().clone()
    }

    pub fn coordinates(&self) -> ChartMap {
        let polys = self.polys.clone();
        ChartMap::new(self.domain_dim(), polys.len(), move |x| polys.iter().map(|p| p.eval_taylor(x)).collect())
    }

    pub fn algebra(&self) -> &LieAlgebra {
        self.chart.algebra()
    }
}

fn poly2(terms: &[([u8; 2], f64)]) -> Polynomial {
    let mut p = Polynomial::zero(2);
    for (e, c) in terms {
        p.add_term(e.to_vec(), *c);
    }
    p
}

/// Stable catalog of exponential maps on `R^2`.
pub fn exp_map_names() -> Vec<&'static str> {
    vec!["so3-exp", "sl2-exp", "heisenberg-exp"]
}

pub fn exp_map(name: &str) -> Result<ExpMap> {
    match name {
        "so3-exp" => ExpMap::new(
            name,
            "so3",
            vec![
                poly2(&[([1, 0], 0.8), ([0, 2], 0.3)]),
                poly2(&[([0, 1], -0.6), ([1, 1], 0.4)]),
                poly2(&[([2, 0], 0.5), ([0, 0], 0.1)]),
            ],
        ),
        "sl2-exp" => ExpMap::new(
            name,
            "sl2",
            vec![
                poly2(&[([1, 0], 0.4), ([0, 1], 0.2)]),
                poly2(&[([0, 1], 0.5), ([2, 0], -0.2)]),
                poly2(&[([1, 1], 0.3), ([1, 0], -0.3)]),
            ],
        ),
        "heisenberg-exp" => ExpMap::new(
            name,
            "heisenberg",
            vec![
                poly2(&[([1, 0], 1.0), ([0, 2], 0.2)]),
                poly2(&[([0, 1], 0.7)]),
                poly2(&[([1, 1], 0.5), ([2, 0], 0.1)]),
            ],
        ),
        _ => Err(Error::UnknownPreset(name.into())),
    }
}

/// `max |phi_N(1) - phi_4N(1)|` for the one-parameter subgroup `kappa = X dt`.
pub fn one_parameter_error(rep: &MatrixRep, x: &[f64], steps: usize) -> Result<f64> {
    let kappa = Form::constant_one_form(DMatrix::from_column_slice(x.len(), 1, x));
    let path = Path::segment(&[0.0], &[1.0])?;
    let id = DMatrix::identity(rep.dim(), rep.dim());
    let a = develop(&kappa, rep, &path, &id, &DevelopOptions::with_steps(steps))?;
    let b = develop(&kappa, rep, &path, &id, &DevelopOptions::with_steps(4 * steps))?;
    Ok(max_abs(&(a.endpoint() - b.endpoint())))
}

/// `e(N) / e(4N)` for the one-parameter subgroup; `256` for a fourth-order
/// method.
pub fn convergence_ratio(rep: &MatrixRep, x: &[f64], steps: usize) -> Result<f64> {
    Ok(one_parameter_error(rep, x, steps)? / one_parameter_error(rep, x, 4 * steps)?)
}

/// Left-translation residual `|phi_b(t) - g phi_a(t)|` with
/// `g = phi_b(0) phi_a(0)^{-1}`, over all nodes.
pub fn translation_residual(a: &Development, b: &Development) -> Result<f64> {
    let g = &b.values[0] * a.values[0].clone().try_inverse().ok_or(Error::SingularFrame)?;
    Ok(a.values.iter().zip(&b.values).map(|(p, q)| max_abs(&(q - &g * p))).fold(0.0, f64::max))
}

/// Matrix exponential of a Taylor-free constant, for the abelian oracle.
pub fn exp_matrix(m: &DMatrix<f64>) -> DMatrix<f64> {
    let b = crate::taylor::basis(0, 0);
    TMat::from_matrix(&b, m).exp().value()
}

/// Endpoint residual `|phi(1) - g psi(c(1))|` with `g = phi(0) psi(c(0))^{-1}`.
pub fn reproduces_map(dev: &Development, map: &GroupValuedMap, path: &Path) -> Result<f64> {
    let g = &dev.values[0] * map.eval(&path.eval(0.0)).try_inverse().ok_or(Error::SingularFrame)?;
    Ok(max_abs(&(dev.endpoint() - g * map.eval(&path.eval(1.0)))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group;
    use crate::lie::Symmetry;
    use crate::taylor::Taylor;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn paths_evaluate_consistently() {
        let p = Path::random(2, 1.0, 3, false, &mut rng(1));
        assert!(p.derivative_residual() <= 1e-6);
        assert!(p.check_in_box(&[1.0, 1.0]).is_ok());
        let l = Path::random(3, 0.6, 2, true, &mut rng(2));
        assert!(l.is_closed());
        let s = Path::polyline_smooth(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0]]).unwrap();
        assert!(s.derivative_residual() <= 1e-6);
        assert_eq!(s.eval(0.5), vec![1.0, 0.0]);
        assert_eq!(s.derivative(0.5), vec![0.0, 0.0]);
        assert!(matches!(Path::segment(&[0.0], &[2.0]).unwrap().check_in_box(&[1.0]), Err(Error::OutsideChart(_))));
        let json = serde_json::to_string(&s).unwrap();
        assert!(json.contains("\"kind\":\"polyline_smooth\""));
        assert_eq!(serde_json::from_str::<Path>(&json).unwrap(), s);
    }

    #[test]
    fn log_derivatives_satisfy_their_maurer_cartan_equations() {
        for name in exp_map_names() {
            let e = exp_map(name).unwrap();
            let samples = crate::sampling::box_points(&[1.0, 1.0], 16, 3);
            let left = e.map.log_derivative_form(true);
            let right = e.map.log_derivative_form(false);
            let scale = form_norm(&left.d(), &samples).max(1.0);
            assert!(mc_residual(&left, e.algebra(), Convention::Right, &samples).unwrap() <= 1e-10 * scale, "{name}");
            assert!(mc_residual(&right, e.algebra(), Convention::Left, &samples).unwrap() <= 1e-10 * scale, "{name}");
            if name != "heisenberg-exp" {
                assert!(mc_residual(&left, e.algebra(), Convention::Left, &samples).unwrap() > 1e-3);
            }
        }
        let k = Form::constant_one_form(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]));
        let ab = LieAlgebra::abelian(2);
        let s = vec![vec![0.1, 0.2]];
        assert_eq!(mc_residual(&k, &ab, Convention::Right, &s).unwrap(), 0.0);
        assert_eq!(mc_residual(&k, &ab, Convention::Left, &s).unwrap(), 0.0);
    }

    #[test]
    fn development_reproduces_the_map_up_to_left_translation() {
        let e = exp_map("so3-exp").unwrap();
        let kappa = e.map.log_derivative_form(true);
        let opts = DevelopOptions { steps: 256, relation: e.relation() };
        let path = Path::random(2, 1.0, 2, false, &mut rng(5));
        let phi0 = group::exp(e.map.rep(), &[0.3, -0.2, 0.5]);
        let dev = develop(&kappa, e.map.rep(), &path, &phi0, &opts).unwrap();
        assert!(reproduces_map(&dev, &e.map, &path).unwrap() <= 1e-7);
        assert!(dev.match_residual <= 1e-6);
        assert!(dev.flatness_warning.is_none());
        let id = DMatrix::identity(3, 3);
        let dev2 = develop(&kappa, e.map.rep(), &path, &id, &opts).unwrap();
        assert!(translation_residual(&dev2, &dev).unwrap() <= 1e-8);
    }

    #[test]
    fn zero_and_one_parameter_developments() {
        let p = presets::algebra("sl2").unwrap();
        let rep = p.rep().unwrap();
        let path = Path::segment(&[0.0], &[1.0]).unwrap();
        let phi0 = group::exp(rep, &[0.1, 0.2, -0.3]);
        let zero = develop(&Form::zero(1, 1, 3), rep, &path, &phi0, &DevelopOptions::default()).unwrap();
        assert!(zero.values.iter().all(|v| v == &phi0));
        let x = [0.4, -0.7, 0.9];
        let kappa = Form::constant_one_form(DMatrix::from_column_slice(3, 1, &x));
        let dev = develop(&kappa, rep, &path, &phi0, &DevelopOptions::default()).unwrap();
        assert!(max_abs(&(dev.endpoint() - &phi0 * group::exp(rep, &x))) <= 1e-8);
        let r = convergence_ratio(rep, &x, 8).unwrap();
        assert!((256.0 / 3.0..=256.0 * 3.0).contains(&r), "ratio {r}");
    }

    #[test]
    fn flat_holonomy_is_trivial_and_curved_abelian_holonomy_is_exp_of_area() {
        let e = exp_map("sl2-exp").unwrap();
        let kappa = e.map.log_derivative_form(true);
        let lp = Path::random(2, 1.0, 3, true, &mut rng(9));
        let hol = holonomy(&kappa, e.map.rep(), &lp, &DevelopOptions::default()).unwrap();
        assert!(max_abs(&(hol - DMatrix::identity(2, 2))) <= 1e-6);
        assert_eq!(holonomy(&Form::zero(2, 1, 3), e.map.rep(), &lp, &DevelopOptions::default()).unwrap(), DMatrix::identity(2, 2));
        // kappa = y dx X on R^2 with h = gl(1), X = 1
        let rep = MatrixRep::new(vec![DMatrix::from_element(1, 1, 1.0)]).unwrap();
        let k = Form::one_form_from_field(2, 1, |x| {
            let b = x[0].basis().clone();
            TMat::from_entries(1, 2, vec![x[1].clone(), Taylor::zero(&b)])
        });
        let square = Path::polyline_smooth(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        let h = holonomy(&k, &rep, &square, &DevelopOptions::default()).unwrap();
        // counterclockwise: the integral of y dx is minus the area
        assert!((h[(0, 0)] - exp_matrix(&DMatrix::from_element(1, 1, -1.0))[(0, 0)]).abs() <= 1e-8);
        assert!(matches!(holonomy(&k, &rep, &Path::segment(&[0.0, 0.0], &[1.0, 0.0]).unwrap(), &DevelopOptions::default()), Err(Error::PathNotClosed(_))));
    }

    #[test]
    fn flat_pullback_is_a_chain_map_and_factors_through_the_map() {
        let e = exp_map("so3-exp").unwrap();
        let kappa = e.map.log_derivative_form(true);
        let samples = crate::sampling::box_points(&[1.0, 1.0], 8, 4);
        let mc = left_maurer_cartan(&e.chart);
        let gs = crate::sampling::box_points(&[0.5; 3], 8, 4);
        for k in 1..=3 {
            let f = MultilinearFunction::random_alternating(3, k, &mut rng(k as u64));
            let df = f.ce_differential(e.algebra()).unwrap();
            for (form, pts) in [(&mc, &gs), (&kappa, &samples)] {
                let lhs = flat_pullback(form, &f).unwrap().d();
                if k < 3 {
                    let rhs = flat_pullback(form, &df).unwrap();
                    let scale = form_norm(&lhs, pts).max(1.0);
                    assert!(form_norm(&lhs.sub(&rhs).unwrap(), pts) <= 1e-10 * scale);
                } else {
                    assert!(form_norm(&lhs, pts) <= 1e-10);
                }
            }
            let a = flat_pullback(&kappa, &f).unwrap();
            let b = pullback_of_left_invariant(&e.chart, &e.coordinates(), &f).unwrap();
            assert!(form_norm(&a.sub(&b).unwrap(), &samples) <= 1e-10);
        }
        let f1 = MultilinearFunction::new(3, 1, Symmetry::Alternating, vec![1.0, 0.0, 0.0]).unwrap();
        let lhs = flat_pullback(&mc, &f1).unwrap();
        let y = [0.1, 0.2, 0.3];
        assert_eq!(lhs.eval(&y, &[&[1.0, 0.0, 0.0]]), mc.eval(&y, &[&[1.0, 0.0, 0.0]])[..1].to_vec());
    }

    #[test]
    fn unstable_steps_are_reported() {
        let rep = MatrixRep::new(vec![DMatrix::from_element(1, 1, 1.0)]).unwrap();
        let k = Form::constant_one_form(DMatrix::from_element(1, 1, 400.0));
        let path = Path::segment(&[0.0], &[1.0]).unwrap();
        let r = develop(&k, &rep, &path, &DMatrix::identity(1, 1), &DevelopOptions::with_steps(256));
        assert!(matches!(r, Err(Error::StepUnstable(_))));
    }
}
