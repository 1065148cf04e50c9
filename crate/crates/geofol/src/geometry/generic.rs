//! Scalar-generic geometry pipeline.
//!
//! Everything here is written over the [`Scalar`] tower so that charts built
//! *from* geometric quantities of another chart (the flat-envelope extension
//! in particular) stay differentiable by the dual backend: evaluating such a
//! chart at a dual-valued point transparently nests further dual levels for
//! the inner jets.

use crate::geometry::{DistributionField, ImmersionField};
use crate::numjet::{second_partials_s, value_and_jacobian_s, Scalar};

pub type Mat<S> = Vec<Vec<S>>;

pub fn dot_s<S: Scalar>(u: &[S], v: &[S]) -> S {
    u.iter().zip(v).fold(S::zero(), |acc, (&a, &b)| acc + a * b)
}

pub fn g_inner_s<S: Scalar>(g: &Mat<S>, u: &[S], v: &[S]) -> S {
    let mut acc = S::zero();
    for (i, row) in g.iter().enumerate() {
        for (j, &gij) in row.iter().enumerate() {
            acc = acc + u[i] * gij * v[j];
        }
    }
    acc
}

pub fn mat_vec_s<S: Scalar>(m: &Mat<S>, v: &[S]) -> Vec<S> {
    m.iter().map(|row| dot_s(row, v)).collect()
}

/// Determinant by cofactor expansion; intended for small matrices.
pub fn det_s<S: Scalar>(m: &Mat<S>) -> S {
    let n = m.len();
    match n {
        0 => S::one(),
        1 => m[0][0],
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        _ => {
            let mut acc = S::zero();
            for k in 0..n {
                let minor: Mat<S> = m[1..]
                    .iter()
                    .map(|row| {
                        row.iter()
                            .enumerate()
                            .filter(|(j, _)| *j != k)
                            .map(|(_, &v)| v)
                            .collect()
                    })
                    .collect();
                let term = m[0][k] * det_s(&minor);
                acc = if k % 2 == 0 { acc + term } else { acc - term };
            }
            acc
        }
    }
}

/// Solve `A x = b` by Gaussian elimination; pivots chosen on value parts.
pub fn solve_s<S: Scalar>(a: &Mat<S>, b: &[S]) -> Vec<S> {
    let n = a.len();
    let mut m: Mat<S> = a.iter().map(|row| row.clone()).collect();
    let mut rhs = b.to_vec();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| {
                m[i][col]
                    .value()
                    .abs()
                    .partial_cmp(&m[j][col].value().abs())
                    .unwrap()
            })
            .unwrap();
        m.swap(col, piv);
        rhs.swap(col, piv);
        let inv = S::one() / m[col][col];
        for i in col + 1..n {
            let factor = m[i][col] * inv;
            for j in col..n {
                m[i][j] = m[i][j] - factor * m[col][j];
            }
            rhs[i] = rhs[i] - factor * rhs[col];
        }
    }
    let mut x = vec![S::zero(); n];
    for i in (0..n).rev() {
        let mut s = rhs[i];
        for j in i + 1..n {
            s = s - m[i][j] * x[j];
        }
        x[i] = s / m[i][i];
    }
    x
}

/// Generalized cross product of the Jacobian columns, oriented so that
/// `det[∂_1 f, …, ∂_n f, ν] > 0`; `jac[c][i]` is ambient row `c`, column `i`.
pub fn cross_normal_s<S: Scalar>(jac: &Mat<S>) -> Vec<S> {
    let amb = jac.len();
    let n = amb - 1;
    let mut nu = vec![S::zero(); amb];
    for k in 0..amb {
        let minor: Mat<S> = (0..amb)
            .filter(|&r| r != k)
            .map(|r| jac[r].clone())
            .collect();
        let d = det_s(&minor);
        nu[k] = if (k + n) % 2 == 0 { d } else { -d };
    }
    nu
}

/// Pointwise geometric data of an immersion at a dual-valued chart point.
pub struct ImmersionData<S> {
    pub value: Vec<S>,
    /// `jac[c][i]` ambient component `c` of `∂_i f`.
    pub jac: Mat<S>,
    pub g: Mat<S>,
    pub eta: Vec<S>,
    pub h: Mat<S>,
    /// Shape operator in the chart basis, `a[k][i] = (g⁻¹h)_{ki}`.
    pub a: Mat<S>,
}

pub fn immersion_data_s<S: Scalar>(f: &ImmersionField, x: &[S]) -> ImmersionData<S> {
    let n = f.dim();
    let amb = n + 1;
    let (value, jac) = value_and_jacobian_s(f.map(), x);
    let hess = second_partials_s(f.map(), x);

    let mut g = vec![vec![S::zero(); n]; n];
    for i in 0..n {
        for j in 0..n {
            let mut s = S::zero();
            for c in 0..amb {
                s = s + jac[c][i] * jac[c][j];
            }
            g[i][j] = s;
        }
    }

    let mut eta = cross_normal_s(&jac);
    let sign = S::from_f64(f.orientation().sign());
    let norm = dot_s(&eta, &eta).sqrt();
    for e in eta.iter_mut() {
        *e = *e * sign / norm;
    }

    let mut h = vec![vec![S::zero(); n]; n];
    for i in 0..n {
        for j in 0..n {
            let mut s = S::zero();
            for c in 0..amb {
                s = s + hess[c][i][j] * eta[c];
            }
            h[i][j] = s;
        }
    }

    // a = g^{-1} h, column by column
    let mut a = vec![vec![S::zero(); n]; n];
    for j in 0..n {
        let col: Vec<S> = (0..n).map(|i| h[i][j]).collect();
        let sol = solve_s(&g, &col);
        for i in 0..n {
            a[i][j] = sol[i];
        }
    }

    ImmersionData {
        value,
        jac,
        g,
        eta,
        h,
        a,
    }
}

/// The case-(iii) partial frame at a point: the distribution-normal direction
/// `Y`, the shape-coupled direction `X ∈ 𝒟 ∩ Δ^⊥`, and the scalars of
/// `AY = βY + μX`, `AX = μY + ρX`.
pub struct CaseIiiFrame<S> {
    pub data: ImmersionData<S>,
    /// Chart components of the metric-unit normal to the distribution.
    pub y: Vec<S>,
    /// Chart components of `X`, chosen as the normalized `AY − βY` (μ > 0).
    pub x: Vec<S>,
    pub beta: S,
    pub mu: S,
    pub rho: S,
}

/// Extract the case-(iii) frame. `gauge_y` fixes which chart coordinate
/// direction seeds the complement of the distribution; it must be chosen once
/// per chart (away from degeneracies) so the field is smooth.
pub fn case_iii_frame_s<S: Scalar>(
    f: &ImmersionField,
    d: &DistributionField,
    gauge_y: usize,
    at: &[S],
) -> CaseIiiFrame<S> {
    let n = f.dim();
    let data = immersion_data_s(f, at);

    // metric-orthonormalized distribution basis
    let mut basis: Vec<Vec<S>> = Vec::with_capacity(d.rank());
    for gen in d.generators() {
        let mut v = gen.eval(at);
        for b in &basis {
            let c = g_inner_s(&data.g, b, &v);
            for i in 0..n {
                v[i] = v[i] - b[i] * c;
            }
        }
        let nv = g_inner_s(&data.g, &v, &v).sqrt();
        for vi in v.iter_mut() {
            *vi = *vi / nv;
        }
        basis.push(v);
    }

    // Y: gauge coordinate direction minus its projection onto the distribution
    let mut y = vec![S::zero(); n];
    y[gauge_y] = S::one();
    for b in &basis {
        let c = g_inner_s(&data.g, b, &y);
        for i in 0..n {
            y[i] = y[i] - b[i] * c;
        }
    }
    let ny = g_inner_s(&data.g, &y, &y).sqrt();
    for yi in y.iter_mut() {
        *yi = *yi / ny;
    }

    let ay = mat_vec_s(&data.a, &y);
    let beta = g_inner_s(&data.g, &ay, &y);
    let mut w: Vec<S> = (0..n).map(|i| ay[i] - y[i] * beta).collect();
    let mu = g_inner_s(&data.g, &w, &w).sqrt();
    for wi in w.iter_mut() {
        *wi = *wi / mu;
    }
    let ax = mat_vec_s(&data.a, &w);
    let rho = g_inner_s(&data.g, &ax, &w);

    CaseIiiFrame {
        data,
        y,
        x: w,
        beta,
        mu,
        rho,
    }
}

impl<S: Scalar> CaseIiiFrame<S> {
    /// Ambient pushforward of a chart vector.
    pub fn push(&self, v: &[S]) -> Vec<S> {
        let amb = self.data.jac.len();
        (0..amb)
            .map(|c| dot_s(&self.data.jac[c], v))
            .collect()
    }

    /// The envelope line direction `Z = ρ f_*Y − μ f_*X` (ambient, not unit).
    pub fn envelope_direction(&self) -> Vec<S> {
        let fy = self.push(&self.y);
        let fx = self.push(&self.x);
        fy.iter()
            .zip(&fx)
            .map(|(&a, &b)| a * self.rho - b * self.mu)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{geometry_jet, ImmersionField};
    use crate::numjet::{Backend, ChartBox, ChartMap, SmoothMap};

    struct Graph;
    impl ChartMap for Graph {
        fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
            vec![x[0], x[1], x[0] * x[0] + x[0] * x[1].sin()]
        }
    }

    #[test]
    fn generic_pipeline_matches_f64_geometry_jet() {
        let f = ImmersionField::new(SmoothMap::new(3, ChartBox::centered(2, 1.0), Graph));
        let x = [0.3, -0.4];
        let jet = geometry_jet(&f, &x, Backend::Dual).unwrap();
        let data = immersion_data_s::<f64>(&f, &x);
        for i in 0..2 {
            for j in 0..2 {
                assert!((data.g[i][j] - jet.g[(i, j)]).abs() < 1e-12);
                assert!((data.h[i][j] - jet.h[(i, j)]).abs() < 1e-10);
                assert!((data.a[i][j] - jet.a[(i, j)]).abs() < 1e-10);
            }
        }
        for c in 0..3 {
            assert!((data.eta[c] - jet.eta[c]).abs() < 1e-12);
        }
    }

    #[test]
    fn solve_and_det() {
        let a = vec![
            vec![2.0, 1.0, 0.0],
            vec![1.0, 3.0, 1.0],
            vec![0.0, 1.0, 4.0],
        ];
        let d = det_s(&a);
        assert!((d - 18.0).abs() < 1e-12);
        let b = vec![1.0, 2.0, 3.0];
        let x = solve_s(&a, &b);
        for i in 0..3 {
            let r: f64 = dot_s(&a[i], &x) - b[i];
            assert!(r.abs() < 1e-12);
        }
    }
}
