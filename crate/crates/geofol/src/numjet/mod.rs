//! Differentiation engine: values and partial derivatives (orders 1–3) of
//! smooth maps at chart points.
//!
//! Two independent backends are provided and cross-validated throughout the
//! test suite: forward-mode dual numbers (nested once per derivative order)
//! and central finite differences with Richardson extrapolation. Third-order
//! partials are always finite differences of second-order dual jets.

mod map;
mod scalar;

pub use map::{ChartBox, ChartMap, ConstantMap, DynMap, LinearMap, SmoothMap};
pub use scalar::{Dual, Field, Scalar, D1, D2, D3, D4};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Base finite-difference step on unit-scaled charts.
pub const FD_STEP: f64 = 1e-4;
/// Step for the third-order finite differences of dual Hessians.
const FD_STEP_3RD: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum JetError {
    #[error("point {point:?} lies outside the chart box (stencil margin included)")]
    OutsideChart { point: Vec<f64> },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("unsupported jet order {0}; orders 1..=3 are available")]
    UnsupportedOrder(usize),
}

/// Differentiation backend selector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    #[default]
    Dual,
    FiniteDiff,
}

/// Pointwise derivative package of a smooth map, in chart coordinates.
#[derive(Clone, Debug)]
pub struct Jet {
    pub order: usize,
    pub dim_in: usize,
    pub dim_out: usize,
    pub value: DVector<f64>,
    /// `dim_out x dim_in` Jacobian.
    pub first: DMatrix<f64>,
    /// Per output component, the `dim_in x dim_in` Hessian (empty for order 1).
    pub second: Vec<DMatrix<f64>>,
    /// Per output component, flat `[i*n*n + j*n + k]` third partials.
    pub third: Option<Vec<Vec<f64>>>,
}

impl Jet {
    pub fn third_partial(&self, comp: usize, i: usize, j: usize, k: usize) -> f64 {
        let n = self.dim_in;
        self.third.as_ref().expect("order-3 jet required")[comp][i * n * n + j * n + k]
    }
}

/// Evaluate all partial derivatives of `map` up to `order` at `point`.
pub fn eval_jet(
    map: &SmoothMap,
    point: &[f64],
    order: usize,
    backend: Backend,
) -> Result<Jet, JetError> {
    if !(1..=3).contains(&order) {
        return Err(JetError::UnsupportedOrder(order));
    }
    let margin = if order == 3 { 2.0 * FD_STEP_3RD } else { FD_STEP };
    map.check_interior(point, margin)?;
    let mut jet = match backend {
        Backend::Dual => dual_jet(map, point, order.min(2)),
        Backend::FiniteDiff => fd_jet(map, point, order.min(2)),
    };
    jet.order = order;
    if order == 3 {
        jet.third = Some(third_partials(map, point));
    }
    Ok(jet)
}

/// First-partials tensor contracted with `direction`.
pub fn directional_derivative(
    field: &SmoothMap,
    point: &[f64],
    direction: &[f64],
    backend: Backend,
) -> Result<DVector<f64>, JetError> {
    if direction.len() != field.domain_dim() {
        return Err(JetError::DimensionMismatch {
            expected: field.domain_dim(),
            got: direction.len(),
        });
    }
    let jet = eval_jet(field, point, 1, backend)?;
    Ok(&jet.first * DVector::from_column_slice(direction))
}

fn dual_jet(map: &SmoothMap, point: &[f64], order: usize) -> Jet {
    let n = map.domain_dim();
    let m = map.codomain_dim();
    let mut value = DVector::zeros(m);
    let mut first = DMatrix::zeros(m, n);
    let mut second = Vec::new();

    if order == 1 {
        for i in 0..n {
            let xs: Vec<D1> = point
                .iter()
                .enumerate()
                .map(|(k, &v)| D1::new(v, if k == i { 1.0 } else { 0.0 }))
                .collect();
            let out = map.eval(&xs);
            for (c, o) in out.iter().enumerate() {
                first[(c, i)] = o.eps;
                if i == 0 {
                    value[c] = o.re;
                }
            }
        }
        if n == 0 {
            let out = map.eval::<f64>(point);
            value = DVector::from_vec(out);
        }
    } else {
        second = vec![DMatrix::zeros(n, n); m];
        for i in 0..n {
            for j in i..n {
                let xs: Vec<D2> = point
                    .iter()
                    .enumerate()
                    .map(|(k, &v)| {
                        D2::new(
                            D1::new(v, if k == i { 1.0 } else { 0.0 }),
                            D1::new(if k == j { 1.0 } else { 0.0 }, 0.0),
                        )
                    })
                    .collect();
                let out = map.eval(&xs);
                for (c, o) in out.iter().enumerate() {
                    second[c][(i, j)] = o.eps.eps;
                    second[c][(j, i)] = o.eps.eps;
                    if j == i {
                        first[(c, i)] = o.re.eps;
                    }
                    if i == 0 && j == 0 {
                        value[c] = o.re.re;
                    }
                }
            }
        }
    }

    Jet {
        order,
        dim_in: n,
        dim_out: m,
        value,
        first,
        second,
        third: None,
    }
}

/// Richardson extrapolation of a second-order-accurate central estimate.
fn richardson(coarse: f64, fine: f64) -> f64 {
    (4.0 * fine - coarse) / 3.0
}

fn fd_jet(map: &SmoothMap, point: &[f64], order: usize) -> Jet {
    let n = map.domain_dim();
    let m = map.codomain_dim();
    let h = FD_STEP;
    let eval = |x: &[f64]| map.eval::<f64>(x);
    let shift = |base: &[f64], idx: &[(usize, f64)]| {
        let mut x = base.to_vec();
        for &(i, d) in idx {
            x[i] += d;
        }
        x
    };

    let value = DVector::from_vec(eval(point));
    let mut first = DMatrix::zeros(m, n);
    for i in 0..n {
        for step in [h, 0.5 * h] {
            let fp = eval(&shift(point, &[(i, step)]));
            let fm = eval(&shift(point, &[(i, -step)]));
            for c in 0..m {
                let d = (fp[c] - fm[c]) / (2.0 * step);
                if step == h {
                    first[(c, i)] = d;
                } else {
                    first[(c, i)] = richardson(first[(c, i)], d);
                }
            }
        }
    }

    let mut second = Vec::new();
    if order >= 2 {
        second = vec![DMatrix::zeros(n, n); m];
        for i in 0..n {
            for j in i..n {
                for step in [h, 0.5 * h] {
                    let est: Vec<f64> = if i == j {
                        let fp = eval(&shift(point, &[(i, step)]));
                        let fm = eval(&shift(point, &[(i, -step)]));
                        (0..m)
                            .map(|c| (fp[c] - 2.0 * value[c] + fm[c]) / (step * step))
                            .collect()
                    } else {
                        let fpp = eval(&shift(point, &[(i, step), (j, step)]));
                        let fpm = eval(&shift(point, &[(i, step), (j, -step)]));
                        let fmp = eval(&shift(point, &[(i, -step), (j, step)]));
                        let fmm = eval(&shift(point, &[(i, -step), (j, -step)]));
                        (0..m)
                            .map(|c| (fpp[c] - fpm[c] - fmp[c] + fmm[c]) / (4.0 * step * step))
                            .collect()
                    };
                    for c in 0..m {
                        if step == h {
                            second[c][(i, j)] = est[c];
                        } else {
                            second[c][(i, j)] = richardson(second[c][(i, j)], est[c]);
                            second[c][(j, i)] = second[c][(i, j)];
                        }
                    }
                }
            }
        }
    }

    Jet {
        order,
        dim_in: n,
        dim_out: m,
        value,
        first,
        second,
        third: None,
    }
}

/// Third partials as central finite differences of second-order dual jets.
fn third_partials(map: &SmoothMap, point: &[f64]) -> Vec<Vec<f64>> {
    let n = map.domain_dim();
    let m = map.codomain_dim();
    let mut third = vec![vec![0.0; n * n * n]; m];
    for k in 0..n {
        let mut coarse: Option<Vec<Vec<f64>>> = None;
        for step in [FD_STEP_3RD, 0.5 * FD_STEP_3RD] {
            let mut xp = point.to_vec();
            xp[k] += step;
            let mut xm = point.to_vec();
            xm[k] -= step;
            let jp = dual_jet(map, &xp, 2);
            let jm = dual_jet(map, &xm, 2);
            let est: Vec<Vec<f64>> = (0..m)
                .map(|c| {
                    let mut e = vec![0.0; n * n];
                    for i in 0..n {
                        for j in 0..n {
                            e[i * n + j] =
                                (jp.second[c][(i, j)] - jm.second[c][(i, j)]) / (2.0 * step);
                        }
                    }
                    e
                })
                .collect();
            match coarse.take() {
                None => coarse = Some(est),
                Some(co) => {
                    for c in 0..m {
                        for ij in 0..n * n {
                            third[c][ij * n + k] = richardson(co[c][ij], est[c][ij]);
                        }
                    }
                }
            }
        }
    }
    third
}

/// Value and Jacobian of `map` at a dual-valued point, one derivative level up.
///
/// This is what lets constructions differentiate *through* charts whose
/// evaluators themselves take jets of other charts.
pub fn value_and_jacobian_s<S: Scalar>(map: &SmoothMap, x: &[S]) -> (Vec<S>, Vec<Vec<S>>) {
    let n = map.domain_dim();
    let m = map.codomain_dim();
    let mut value = vec![S::zero(); m];
    let mut jac = vec![vec![S::zero(); n]; m];
    for i in 0..n {
        let xs: Vec<S::Lift> = x
            .iter()
            .enumerate()
            .map(|(k, &v)| S::lift(v, if k == i { S::one() } else { S::zero() }))
            .collect();
        let out = map.eval(&xs);
        for (c, &o) in out.iter().enumerate() {
            jac[c][i] = S::infinitesimal(o);
            if i == 0 {
                value[c] = S::real(o);
            }
        }
    }
    (value, jac)
}

/// Second partials `[out][i][j]` of `map` at a dual-valued point.
pub fn second_partials_s<S: Scalar>(map: &SmoothMap, x: &[S]) -> Vec<Vec<Vec<S>>> {
    let n = map.domain_dim();
    let m = map.codomain_dim();
    let mut hess = vec![vec![vec![S::zero(); n]; n]; m];
    for i in 0..n {
        for j in i..n {
            let xs: Vec<<S::Lift as Scalar>::Lift> = x
                .iter()
                .enumerate()
                .map(|(k, &v)| {
                    <S::Lift as Scalar>::lift(
                        S::lift(v, if k == i { S::one() } else { S::zero() }),
                        S::lift(
                            if k == j { S::one() } else { S::zero() },
                            S::zero(),
                        ),
                    )
                })
                .collect();
            let out = map.eval(&xs);
            for (c, &o) in out.iter().enumerate() {
                let d2 = S::infinitesimal(<S::Lift as Scalar>::infinitesimal(o));
                hess[c][i][j] = d2;
                hess[c][j][i] = d2;
            }
        }
    }
    hess
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Identity2;
    impl ChartMap for Identity2 {
        fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
            x.to_vec()
        }
    }

    struct Circle;
    impl ChartMap for Circle {
        fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
            vec![x[0].cos(), x[0].sin()]
        }
    }

    struct Quad;
    impl ChartMap for Quad {
        fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
            vec![x[0] * x[0], x[0] * x[1]]
        }
    }

    fn ident() -> SmoothMap {
        SmoothMap::new(2, ChartBox::centered(2, 2.0), Identity2)
    }

    #[test]
    fn identity_jet_is_identity() {
        let map = ident();
        for backend in [Backend::Dual, Backend::FiniteDiff] {
            let jet = eval_jet(&map, &[0.3, 0.7], 1, backend).unwrap();
            assert!((jet.first[(0, 0)] - 1.0).abs() < 1e-10);
            assert!((jet.first[(1, 1)] - 1.0).abs() < 1e-10);
            assert!(jet.first[(0, 1)].abs() < 1e-10);
            assert!(jet.first[(1, 0)].abs() < 1e-10);
        }
        let jet = eval_jet(&map, &[0.3, 0.7], 2, Backend::Dual).unwrap();
        assert!(jet.second[0].amax() < 1e-12);
        assert!(jet.second[1].amax() < 1e-12);
    }

    #[test]
    fn circle_jet_order_two() {
        let map = SmoothMap::new(2, ChartBox::centered(1, 2.0), Circle);
        for backend in [Backend::Dual, Backend::FiniteDiff] {
            let jet = eval_jet(&map, &[0.0], 2, backend).unwrap();
            assert!((jet.value[0] - 1.0).abs() < 1e-10);
            assert!(jet.value[1].abs() < 1e-10);
            assert!(jet.first[(0, 0)].abs() < 1e-9);
            assert!((jet.first[(1, 0)] - 1.0).abs() < 1e-9);
            assert!((jet.second[0][(0, 0)] + 1.0).abs() < 1e-6);
            assert!(jet.second[1][(0, 0)].abs() < 1e-6);
        }
    }

    #[test]
    fn hand_differentiated_quadratic() {
        // f(x) = (x1^2, x1 x2) at (1, 2): J = [[2,0],[2,1]], Hess f1 = [[2,0],[0,0]].
        let map = SmoothMap::new(2, ChartBox::centered(2, 3.0), Quad);
        for backend in [Backend::Dual, Backend::FiniteDiff] {
            let jet = eval_jet(&map, &[1.0, 2.0], 2, backend).unwrap();
            assert!((jet.first[(0, 0)] - 2.0).abs() < 1e-7);
            assert!(jet.first[(0, 1)].abs() < 1e-7);
            assert!((jet.first[(1, 0)] - 2.0).abs() < 1e-7);
            assert!((jet.first[(1, 1)] - 1.0).abs() < 1e-7);
            assert!((jet.second[0][(0, 0)] - 2.0).abs() < 1e-6);
            assert!(jet.second[0][(0, 1)].abs() < 1e-6);
            assert!(jet.second[0][(1, 1)].abs() < 1e-6);
            assert!((jet.second[1][(0, 1)] - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn directional_derivatives() {
        struct SumMap;
        impl ChartMap for SumMap {
            fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
                vec![x[0] + x[1]]
            }
        }
        let map = SmoothMap::new(1, ChartBox::centered(2, 1.0), SumMap);
        let d = directional_derivative(&map, &[0.0, 0.0], &[1.0, 1.0], Backend::Dual).unwrap();
        assert!((d[0] - 2.0).abs() < 1e-12);

        struct SinX1;
        impl ChartMap for SinX1 {
            fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
                vec![x[0].sin()]
            }
        }
        let map = SmoothMap::new(1, ChartBox::centered(2, 1.0), SinX1);
        let d = directional_derivative(&map, &[0.0, 0.0], &[0.0, 1.0], Backend::Dual).unwrap();
        assert!(d[0].abs() < 1e-12);

        // hand gradient of x1*x2 at (2,3) is (3,2); dot (1,-1) = 1
        let map = SmoothMap::new(1, ChartBox::centered(2, 4.0), Prod);
        struct Prod;
        impl ChartMap for Prod {
            fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
                vec![x[0] * x[1]]
            }
        }
        for backend in [Backend::Dual, Backend::FiniteDiff] {
            let d = directional_derivative(&map, &[2.0, 3.0], &[1.0, -1.0], backend).unwrap();
            assert!((d[0] - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn errors_outside_chart_and_order() {
        let map = ident();
        assert!(matches!(
            eval_jet(&map, &[5.0, 0.0], 1, Backend::Dual),
            Err(JetError::OutsideChart { .. })
        ));
        assert!(matches!(
            eval_jet(&map, &[0.0, 0.0], 4, Backend::Dual),
            Err(JetError::UnsupportedOrder(4))
        ));
    }

    #[test]
    fn third_order_of_sine() {
        // d^3/dx^3 sin x = -cos x
        let map = SmoothMap::new(2, ChartBox::centered(1, 2.0), Circle);
        let jet = eval_jet(&map, &[0.4], 3, Backend::Dual).unwrap();
        // component 1 is sin
        assert!((jet.third_partial(1, 0, 0, 0) + 0.4f64.cos()).abs() < 1e-7);
    }

    struct TrigPoly;
    impl ChartMap for TrigPoly {
        fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
            let a = x[0] * x[1] + x[1].sin();
            vec![a * a, (x[0] * S::from_f64(0.5)).exp() * x[1]]
        }
    }

    #[test]
    fn backends_agree_and_schwarz_holds() {
        let map = SmoothMap::new(2, ChartBox::centered(2, 1.5), TrigPoly);
        for p in map.chart().grid(&[5, 5], 0.1) {
            let jd = eval_jet(&map, &p, 2, Backend::Dual).unwrap();
            let jf = eval_jet(&map, &p, 2, Backend::FiniteDiff).unwrap();
            for c in 0..2 {
                for i in 0..2 {
                    let scale = 1.0 + jd.first[(c, i)].abs();
                    assert!((jd.first[(c, i)] - jf.first[(c, i)]).abs() <= 1e-5 * scale);
                    for j in 0..2 {
                        let scale = 1.0 + jd.second[c][(i, j)].abs();
                        assert!(
                            (jd.second[c][(i, j)] - jf.second[c][(i, j)]).abs() <= 1e-5 * scale
                        );
                        // Schwarz symmetry
                        let sym = (jf.second[c][(i, j)] - jf.second[c][(j, i)]).abs();
                        assert!(sym <= 1e-7 * scale);
                    }
                }
            }
        }
    }

    #[test]
    fn dual_backend_is_linear() {
        struct Combo(f64, f64);
        impl ChartMap for Combo {
            fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
                let f = TrigPoly.eval(x);
                let g = Quad.eval(x);
                f.iter()
                    .zip(&g)
                    .map(|(&a, &b)| S::from_f64(self.0) * a + S::from_f64(self.1) * b)
                    .collect()
            }
        }
        let (alpha, beta) = (1.7, -0.4);
        let box2 = ChartBox::centered(2, 1.5);
        let f = SmoothMap::new(2, box2.clone(), TrigPoly);
        let g = SmoothMap::new(2, box2.clone(), Quad);
        let combo = SmoothMap::new(2, box2, Combo(alpha, beta));
        let p = [0.4, -0.6];
        let jf = eval_jet(&f, &p, 2, Backend::Dual).unwrap();
        let jg = eval_jet(&g, &p, 2, Backend::Dual).unwrap();
        let jc = eval_jet(&combo, &p, 2, Backend::Dual).unwrap();
        for c in 0..2 {
            for i in 0..2 {
                assert_eq!(
                    jc.first[(c, i)],
                    alpha * jf.first[(c, i)] + beta * jg.first[(c, i)]
                );
            }
        }
    }

    #[test]
    fn generic_jacobian_matches_jet() {
        let map = SmoothMap::new(2, ChartBox::centered(2, 1.5), TrigPoly);
        let p = [0.3, 0.2];
        let jet = eval_jet(&map, &p, 2, Backend::Dual).unwrap();
        let (v, jac) = value_and_jacobian_s::<f64>(&map, &p);
        let hess = second_partials_s::<f64>(&map, &p);
        for c in 0..2 {
            assert!((v[c] - jet.value[c]).abs() < 1e-14);
            for i in 0..2 {
                assert!((jac[c][i] - jet.first[(c, i)]).abs() < 1e-14);
                for j in 0..2 {
                    assert!((hess[c][i][j] - jet.second[c][(i, j)]).abs() < 1e-12);
                }
            }
        }
    }
}
