//! Order-3 jets of a smooth chart map under both differentiation backends.

use geofol::numjet::{eval_jet, Backend, ChartBox, ChartMap, Scalar, SmoothMap};

struct Saddle;

impl ChartMap for Saddle {
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        vec![x[0], x[1], x[0] * x[1] + (x[0] * S::from_f64(2.0)).sin()]
    }
}

fn main() {
    let map = SmoothMap::new(3, ChartBox::centered(2, 1.0), Saddle);
    let x = [0.3, -0.4];

    for order in 1..=3 {
        let dual = eval_jet(&map, &x, order, Backend::Dual).unwrap();
        let fd = eval_jet(&map, &x, order, Backend::FiniteDiff).unwrap();
        let mut worst = 0.0f64;
        for r in 0..3 {
            for c in 0..2 {
                worst = worst.max((dual.first[(r, c)] - fd.first[(r, c)]).abs());
            }
        }
        println!("order {order}: value {:?}", dual.value.as_slice());
        println!("  backend disagreement on the Jacobian: {worst:.2e}");
    }

    // second partials of the height function, exact values for comparison
    let jet = eval_jet(&map, &x, 2, Backend::Dual).unwrap();
    let d2 = &jet.second[2];
    println!(
        "height Hessian: [[{:.6}, {:.6}], [{:.6}, {:.6}]]",
        d2[(0, 0)],
        d2[(0, 1)],
        d2[(1, 0)],
        d2[(1, 1)]
    );
    println!(
        "exact:          [[{:.6}, 1.000000], [1.000000, 0.000000]]",
        -4.0 * (2.0f64 * x[0]).sin()
    );
}
