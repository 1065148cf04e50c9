//! A generic partial tube: synthesized base curve in R³, circular fiber
//! parallel-transported in the normal bundle. The tube kills the coupling
//! between fiber directions and the curve direction, and every fiber is a
//! totally geodesic leaf.

use geofol::classify::{classify_point, is_totally_geodesic, PREDICATE_TOL};
use geofol::constructions::{build_partial_tube, tube_coupling_residual, PartialTubeSpec};
use geofol::curves::{curve_from_curvatures, parallel_normal_frame, ScalarFn1d};
use geofol::numjet::{Backend, ChartBox, ChartMap, Scalar, SmoothMap};
use nalgebra::DVector;

struct FiberCircle {
    r: f64,
}

impl ChartMap for FiberCircle {
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let r = S::from_f64(self.r);
        vec![r * x[0].cos(), r * x[0].sin()]
    }
}

fn main() {
    let kappas = [
        ScalarFn1d::Const { value: 0.5 },
        ScalarFn1d::Const { value: 0.2 },
    ];
    let e: Vec<DVector<f64>> = (0..3)
        .map(|i| {
            let mut v = DVector::zeros(3);
            v[i] = 1.0;
            v
        })
        .collect();
    let mf = curve_from_curvatures(&kappas, &e, &DVector::zeros(3), (0.0, 2.0), 1e-3).unwrap();
    let frame = parallel_normal_frame(&mf.curve, &e[1..]).unwrap();
    let f0 = SmoothMap::new(
        2,
        ChartBox::new(vec![-3.0], vec![3.0]),
        FiberCircle { r: 0.4 },
    );
    let tube = build_partial_tube(&PartialTubeSpec::new(frame, f0)).unwrap();

    let coupling = tube_coupling_residual(&tube, 8, Backend::Dual).unwrap();
    println!("worst normalized coupling |h(X, d_s)|: {coupling:.2e}");

    for x in [[0.4, 0.5], [-2.0, 1.6]] {
        let (ok, res) =
            is_totally_geodesic(&tube.immersion, &tube.distribution, &x, PREDICATE_TOL).unwrap();
        let pc = classify_point(&tube.immersion, &tube.distribution, &x, PREDICATE_TOL).unwrap();
        println!(
            "at {x:?}: fiber geodesic: {ok} (residual {res:.2e}), A(D) stays in D: {}",
            pc.case_ii
        );
    }
}
