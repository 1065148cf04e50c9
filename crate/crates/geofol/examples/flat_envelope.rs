//! Extend a coupled-case chart along its envelope line field over one
//! geodesic leaf: the result is flat (rank-one shape operator) and tangent
//! to the base along the zero section.

use geofol::constructions::{
    build_flat_envelope, build_surface_like, clairaut_field, clairaut_leaf, revolution_surface,
    verify_flat_envelope, EnvelopeLeafSpec, SurfaceKind, SurfaceLikeSpec,
};
use geofol::curves::VectorSpline;
use geofol::numjet::{Backend, ChartBox, ChartMap, Scalar, SmoothMap};

struct LeafMap {
    spline: VectorSpline,
}

impl ChartMap for LeafMap {
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let mut out = self.spline.eval(x[0]);
        out.extend_from_slice(&x[1..]);
        out
    }
}

fn main() {
    let chart = ChartBox::new(vec![-1.0, -1.0], vec![1.0, 1.0]);
    let base = build_surface_like(&SurfaceLikeSpec {
        g: revolution_surface(2.0, 0.3, chart.clone()),
        d0: clairaut_field(2.0, 0.3, 1.0, chart),
        kind: SurfaceKind::Cylindrical,
        n: 3,
        factor_range: (-1.0, 1.0),
        t_range: (0.0, 0.0),
    })
    .unwrap();

    // leaf through the origin of the chart, swept by the geodesic flow
    let spline = clairaut_leaf(2.0, 0.3, 1.0, [0.0, 0.0], (-0.4, 0.4), 1e-3);
    let leaf = SmoothMap::new(
        3,
        ChartBox::new(vec![-0.4, -0.8], vec![0.4, 0.8]),
        LeafMap { spline },
    );
    let env = build_flat_envelope(&EnvelopeLeafSpec {
        base: base.immersion,
        distribution: base.distribution,
        gauge_y: 0,
        leaf,
        nullity_coords: vec![1],
        s_range: (-0.15, 0.15),
    })
    .unwrap();

    let chart = env.immersion.chart();
    println!(
        "envelope chart: tau x u x s = [{:.2}, {:.2}] x [{:.2}, {:.2}] x [{:.3}, {:.3}]",
        chart.lo[0], chart.hi[0], chart.lo[1], chart.hi[1], chart.lo[2], chart.hi[2]
    );

    let checks = verify_flat_envelope(&env, 3, Backend::Dual).unwrap();
    println!("flatness   sigma_2/max(sigma_1, 1): {:.2e}", checks.flatness);
    println!("tangency   <f_* X, eta_F> defect:   {:.2e}", checks.tangency);
    println!("nullity    pushforward mismatch:    {:.2e}", checks.nullity_agreement);
    println!("leaf angle along the zero section:  {:.2e} rad", checks.leaf_angle);
}
