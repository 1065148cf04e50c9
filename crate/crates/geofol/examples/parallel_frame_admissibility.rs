//! Parallel normal frames along a curve and the admissible fiber region:
//! a fiber position is usable for a partial tube only while its margin
//! `1 − ⟨c'', φ_s(y)⟩` keeps a fixed sign over the whole curve.

use geofol::curves::{circle_radial_frame, omega_margin};

fn main() {
    // circle of radius 2 in R^3, radial + axis sections
    let r = 2.0;
    let frame = circle_radial_frame(r, 3, (0.0, 2.0 * std::f64::consts::PI * r), 1e-3);
    println!("frame rank {} in R^{}", frame.rank(), frame.dim());

    // margins are linear in the radial coordinate: 1 + y_1 / r
    for y1 in [-3.0, -2.0, -1.0, 0.0, 1.5] {
        let m = omega_margin(&frame, &[y1, 0.0]);
        println!(
            "y = ({y1:4.1}, 0.0): margin in [{:+.3}, {:+.3}]  admissible: {}",
            m.min, m.max, m.admissible
        );
    }

    // the sections stay orthonormal and normal to the curve as s moves
    for s in [0.0, 3.0, 9.0] {
        let xi1 = frame.section_at(0, s);
        let xi2 = frame.section_at(1, s);
        println!(
            "s = {s:4.1}: |xi1| = {:.9}, |xi2| = {:.9}, <xi1, xi2> = {:+.2e}",
            xi1.norm(),
            xi2.norm(),
            xi1.dot(&xi2)
        );
    }
}
