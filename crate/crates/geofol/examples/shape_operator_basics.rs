//! Fundamental forms, shape operator, and covariant derivatives on a graph
//! chart of the unit sphere.

use geofol::geometry::{covariant_derivative, geometry_jet, ImmersionField};
use geofol::numjet::{Backend, ChartBox, ChartMap, ConstantMap, Scalar, SmoothMap};

struct SphereGraph;

impl ChartMap for SphereGraph {
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let r2 = x[0] * x[0] + x[1] * x[1];
        vec![x[0], x[1], (S::one() - r2).sqrt()]
    }
}

fn main() {
    let f = ImmersionField::new(SmoothMap::new(3, ChartBox::centered(2, 0.6), SphereGraph));
    let x = [0.25, -0.1];
    let jet = geometry_jet(&f, &x, Backend::Dual).unwrap();

    println!("first fundamental form  g = {:.6}", jet.g);
    println!("second fundamental form h = {:.6}", jet.h);
    println!(
        "principal curvatures: {:?}  (sphere: both ±1)",
        jet.principal_curvatures()
    );

    // Christoffel symbols drive the intrinsic derivative; for a constant
    // chart field on the sphere the covariant derivative is nonzero
    let v = SmoothMap::new(2, f.chart().clone(), ConstantMap(vec![1.0, 0.0]));
    let cd = covariant_derivative(&f, &v, &v, &x, Backend::Dual).unwrap();
    println!("nabla_V V = {:?}", cd.value.as_slice());
    println!(
        "cross-check against the projected ambient derivative: {:.2e}",
        cd.cross_residual
    );
}
