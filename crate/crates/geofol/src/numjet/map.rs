//! Smooth maps between chart boxes, evaluable at every scalar depth.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::scalar::{Scalar, D1, D2, D3, D4};
use super::JetError;

/// A finite coordinate box in `R^n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChartBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl ChartBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        assert_eq!(lo.len(), hi.len());
        assert!(
            lo.iter().zip(&hi).all(|(a, b)| a.is_finite() && b.is_finite() && a < b),
            "chart box bounds must be finite and nonempty per axis"
        );
        ChartBox { lo, hi }
    }

    /// Unit-ish symmetric box `[-r, r]^n`.
    pub fn centered(dim: usize, r: f64) -> Self {
        ChartBox::new(vec![-r; dim], vec![r; dim])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, x: &[f64], margin: f64) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(&v, (&lo, &hi))| v >= lo + margin && v <= hi - margin)
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(a, b)| 0.5 * (a + b)).collect()
    }

    /// Uniform grid with `res[i]` nodes per axis, endpoints shrunk by `margin`.
    pub fn grid(&self, res: &[usize], margin: f64) -> Vec<Vec<f64>> {
        assert_eq!(res.len(), self.dim());
        let mut pts = vec![vec![]];
        for (i, &r) in res.iter().enumerate() {
            assert!(r >= 2, "grid resolution must be >= 2 per axis");
            let (lo, hi) = (self.lo[i] + margin, self.hi[i] - margin);
            let mut next = Vec::with_capacity(pts.len() * r);
            for p in &pts {
                for k in 0..r {
                    let mut q = p.clone();
                    q.push(lo + (hi - lo) * k as f64 / (r - 1) as f64);
                    next.push(q);
                }
            }
            pts = next;
        }
        pts
    }
}

/// Evaluator of a smooth map, generic over the differentiation scalar.
///
/// Implementors write the formula once; the crate instantiates it at `f64`
/// and at each nested dual depth.
pub trait ChartMap: Send + Sync + 'static {
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S>;
}

/// Object-safe view of a [`ChartMap`] at the five concrete scalar depths.
pub trait DynMap: Send + Sync {
    fn eval_d0(&self, x: &[f64]) -> Vec<f64>;
    fn eval_d1(&self, x: &[D1]) -> Vec<D1>;
    fn eval_d2(&self, x: &[D2]) -> Vec<D2>;
    fn eval_d3(&self, x: &[D3]) -> Vec<D3>;
    fn eval_d4(&self, x: &[D4]) -> Vec<D4>;
}

impl<M: ChartMap> DynMap for M {
    fn eval_d0(&self, x: &[f64]) -> Vec<f64> {
        self.eval(x)
    }
    fn eval_d1(&self, x: &[D1]) -> Vec<D1> {
        self.eval(x)
    }
    fn eval_d2(&self, x: &[D2]) -> Vec<D2> {
        self.eval(x)
    }
    fn eval_d3(&self, x: &[D3]) -> Vec<D3> {
        self.eval(x)
    }
    fn eval_d4(&self, x: &[D4]) -> Vec<D4> {
        self.eval(x)
    }
}

/// A `C^3` map from a chart box into `R^m`, shareable across threads.
#[derive(Clone)]
pub struct SmoothMap {
    domain_dim: usize,
    codomain_dim: usize,
    chart: ChartBox,
    map: Arc<dyn DynMap>,
}

impl SmoothMap {
    pub fn new(codomain_dim: usize, chart: ChartBox, map: impl ChartMap) -> Self {
        SmoothMap {
            domain_dim: chart.dim(),
            codomain_dim,
            chart,
            map: Arc::new(map),
        }
    }

    pub fn domain_dim(&self) -> usize {
        self.domain_dim
    }

    pub fn codomain_dim(&self) -> usize {
        self.codomain_dim
    }

    pub fn chart(&self) -> &ChartBox {
        &self.chart
    }

    /// Same evaluator on a different chart box (must have the same dimension).
    pub fn with_chart(&self, chart: ChartBox) -> Self {
        assert_eq!(chart.dim(), self.domain_dim);
        SmoothMap {
            chart,
            ..self.clone()
        }
    }

    pub(crate) fn raw(&self) -> &dyn DynMap {
        &*self.map
    }

    /// Evaluate at any supported scalar depth.
    pub fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        debug_assert_eq!(x.len(), self.domain_dim);
        S::eval_map(self, x)
    }

    pub fn check_interior(&self, x: &[f64], margin: f64) -> Result<(), JetError> {
        if x.len() != self.domain_dim {
            return Err(JetError::DimensionMismatch {
                expected: self.domain_dim,
                got: x.len(),
            });
        }
        if !self.chart.contains(x, margin) {
            return Err(JetError::OutsideChart { point: x.to_vec() });
        }
        Ok(())
    }
}

/// Constant vector field / constant map.
pub struct ConstantMap(pub Vec<f64>);

impl ChartMap for ConstantMap {
    fn eval<S: Scalar>(&self, _x: &[S]) -> Vec<S> {
        self.0.iter().map(|&v| S::from_f64(v)).collect()
    }
}

/// Linear map `x -> A x` given by rows.
pub struct LinearMap(pub Vec<Vec<f64>>);

impl ChartMap for LinearMap {
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        self.0
            .iter()
            .map(|row| {
                row.iter()
                    .zip(x)
                    .fold(S::zero(), |acc, (&a, &xi)| acc + S::from_f64(a) * xi)
            })
            .collect()
    }
}
