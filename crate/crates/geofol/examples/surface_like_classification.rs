//! Cylindrical surface-like chart over a surface of revolution with a
//! conserved-momentum geodesic field: the generic coupled case. The
//! classification reports the hyperplane-kernel case, and the adapted frame
//! satisfies its residual identities.

use geofol::classify::{adapted_frame, classify_point, residual_suite, PREDICATE_TOL};
use geofol::constructions::{
    build_surface_like, clairaut_field, revolution_surface, SurfaceKind, SurfaceLikeSpec,
};
use geofol::numjet::ChartBox;

fn main() {
    let chart = ChartBox::new(vec![-1.0, -1.0], vec![1.0, 1.0]);
    let spec = SurfaceLikeSpec {
        g: revolution_surface(2.0, 0.3, chart.clone()),
        d0: clairaut_field(2.0, 0.3, 1.0, chart),
        kind: SurfaceKind::Cylindrical,
        n: 3,
        factor_range: (-1.0, 1.0),
        t_range: (0.0, 0.0),
    };
    let built = build_surface_like(&spec).unwrap();

    let grid = built.immersion.chart().grid(&[3, 3, 3], 5e-2);
    let mut counts = [0usize; 3];
    for x in &grid {
        let pc = classify_point(&built.immersion, &built.distribution, x, PREDICATE_TOL).unwrap();
        counts[0] += pc.case_i as usize;
        counts[1] += pc.case_ii as usize;
        counts[2] += pc.case_iii as usize;
    }
    println!(
        "{} grid points: case_i {}x, case_ii {}x, case_iii {}x",
        grid.len(),
        counts[0],
        counts[1],
        counts[2]
    );

    let frame = adapted_frame(&built.immersion, &built.distribution, 0, &grid).unwrap();
    let fp = &frame.points[grid.len() / 2];
    println!(
        "frame scalars at {:?}: beta {:+.4}, mu {:+.4}, rho {:+.4}",
        fp.x, fp.vectors.beta, fp.vectors.mu, fp.vectors.rho
    );
    println!(
        "frame residuals: shape {:.2e}, transport {:.2e}, lambda {:.2e}",
        fp.eq_shape_residual, fp.eq_transport_residual, fp.eq_lambda_residual
    );

    let suite = residual_suite(&frame, &fp.x).unwrap();
    println!("identity suite at the same point:");
    for (name, value) in suite.as_map() {
        println!("  {name}: {value:.2e}");
    }
}
