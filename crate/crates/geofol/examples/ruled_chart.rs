//! A ruled chart over a curve with smooth-ramp curvatures: the rulings are
//! affine, the second fundamental form vanishes on them, and the
//! classification reports the orthogonal-image case at every point.

use geofol::classify::{classify_point, PREDICATE_TOL};
use geofol::constructions::build_ruled_example;
use geofol::curves::ScalarFn1d;
use geofol::geometry::geometry_jet;
use geofol::numjet::Backend;

fn main() {
    // kappa_2 and kappa_3 switch on smoothly at s = 0
    let kappas = vec![
        ScalarFn1d::Const { value: 1.0 },
        ScalarFn1d::SmoothRamp { amp: 1.0, scale: 1.0 },
        ScalarFn1d::SmoothRamp { amp: 1.0, scale: 1.0 },
    ];
    let built = build_ruled_example(&kappas, (-1.5, 1.5), 0.3).unwrap();

    println!("   s     |h on rulings|   |h(d_s, rulings)|   case_i");
    for s in [-1.2, -0.5, 0.3, 1.0] {
        let x = [s, 0.05, -0.05];
        let jet = geometry_jet(&built.immersion, &x, Backend::Dual).unwrap();
        let mut on_rulings = 0.0f64;
        let mut coupled = 0.0f64;
        for i in 1..3 {
            coupled = coupled.max(jet.h[(0, i)].abs());
            for j in 1..3 {
                on_rulings = on_rulings.max(jet.h[(i, j)].abs());
            }
        }
        let pc = classify_point(&built.immersion, &built.distribution, &x, PREDICATE_TOL).unwrap();
        println!("{s:5.1}   {on_rulings:12.2e}   {coupled:15.2e}   {}", pc.case_i);
    }
    println!("(for s < 0 the chart splits off a flat factor; for s > 0 the");
    println!(" rulings couple to the curve direction but stay h-isotropic)");
}
