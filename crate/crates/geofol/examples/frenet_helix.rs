//! Frenet apparatus of a unit-speed helix; the recovered curvature and
//! torsion match the closed forms a/c² and b/c².

use geofol::curves::frenet_apparatus;
use geofol::numjet::{ChartBox, ChartMap, Scalar, SmoothMap};

struct Helix {
    a: f64,
    b: f64,
}

impl ChartMap for Helix {
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let c = S::from_f64((self.a * self.a + self.b * self.b).sqrt());
        let t = x[0] / c;
        let a = S::from_f64(self.a);
        let b = S::from_f64(self.b);
        vec![a * t.cos(), a * t.sin(), b * t]
    }
}

fn main() {
    let (a, b) = (1.0, 0.5);
    let c2 = a * a + b * b;
    let helix = SmoothMap::new(3, ChartBox::new(vec![-10.0], vec![10.0]), Helix { a, b });

    println!("  s      kappa_1    kappa_2    (exact {:.6} / {:.6})", a / c2, b / c2);
    for s in [-2.0, 0.0, 1.0, 3.5] {
        let data = frenet_apparatus(&helix, s).unwrap();
        println!(
            "{s:5.1}   {:.6}   {:.6}",
            data.curvatures[0], data.curvatures[1]
        );
    }

    let data = frenet_apparatus(&helix, 0.7).unwrap();
    println!("frame at s = 0.7:");
    for (i, e) in data.frame.iter().enumerate() {
        println!("  e{} = {:?}", i + 1, e.as_slice());
    }
}
