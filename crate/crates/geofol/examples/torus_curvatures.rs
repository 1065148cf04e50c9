//! A torus as a rotation hypersurface: principal curvatures along the
//! profile angle against the closed forms 1/r and cos θ / (R + r cos θ).

use geofol::constructions::build_rotation_hypersurface;
use geofol::geometry::geometry_jet;
use geofol::numjet::{Backend, ChartBox, ChartMap, Scalar, SmoothMap};

struct ProfileCircle {
    r: f64,
}

impl ChartMap for ProfileCircle {
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let r = S::from_f64(self.r);
        vec![r * x[0].cos(), r * x[0].sin()]
    }
}

fn main() {
    let (r, big_r) = (0.5, 2.0);
    let profile = SmoothMap::new(
        2,
        ChartBox::new(vec![-3.0], vec![3.0]),
        ProfileCircle { r },
    );
    let torus = build_rotation_hypersurface(&profile, big_r).unwrap();

    println!(" theta   |k_profile| (1/r)   |k_parallel|     exact");
    for theta in [-2.5f64, -1.0, 0.0, 1.0, 2.5] {
        let jet = geometry_jet(&torus.immersion, &[theta, 1.0], Backend::Dual).unwrap();
        let mut ks: Vec<f64> = jet.principal_curvatures().iter().map(|k| k.abs()).collect();
        ks.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let exact = (theta.cos() / (big_r + r * theta.cos())).abs();
        println!("{theta:6.2}   {:12.6}   {:12.6}   {:12.6}", ks[0], ks[1], exact);
    }
}
