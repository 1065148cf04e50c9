//! Frenet apparatus of curves in `R^N`, synthesis of curves from prescribed
//! curvatures, parallel transport in the normal bundle, and the admissibility
//! margin that keeps partial tubes immersed.
//!
//! Sampled curves and frames are stored on uniform `s`-grids with cubic
//! Hermite interpolation (node values plus exact derivative samples from the
//! integrator's right-hand side), so downstream immersion charts can be
//! evaluated — and differentiated — at arbitrary `s`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numjet::{self, Backend, ChartBox, ChartMap, JetError, Scalar, SmoothMap};

/// Default integration step for the fixed-step RK4 schemes.
pub const DEFAULT_STEP: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum CurveError {
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error("curve is not unit speed at s = {s}: |c'| = {speed}")]
    NotUnitSpeed { s: f64, speed: f64 },
    #[error("degenerate Frenet apparatus at index {index}: Gram-Schmidt pivot {pivot:.3e}")]
    DegenerateFrenet { index: usize, pivot: f64 },
    #[error("initial frame is not orthonormal (max deviation {0:.3e})")]
    FrameNotOrthonormal(f64),
    #[error("initial section {index} is not normal to the curve (⟨ξ, γ'⟩ = {dot:.3e})")]
    SectionNotNormal { index: usize, dot: f64 },
    #[error("step size must be positive, got {0}")]
    BadStep(f64),
    #[error("ambient dimension {0} unsupported here (1 < N <= 4 required)")]
    UnsupportedDimension(usize),
}

// ---------------------------------------------------------------------------
// scalar functions of arclength (presets, serializable)
// ---------------------------------------------------------------------------

/// Curvature functions of `s` restricted to a safe preset algebra.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ScalarFn1d {
    Const { value: f64 },
    /// `c0 + c1 s + c2 s^2 + …`
    Poly { coeffs: Vec<f64> },
    Sin { amp: f64, freq: f64, phase: f64 },
    /// `C^∞` ramp: 0 for `s ≤ 0`, `amp · exp(−scale/s)` for `s > 0`.
    SmoothRamp { amp: f64, scale: f64 },
}

impl ScalarFn1d {
    pub fn eval(&self, s: f64) -> f64 {
        match self {
            ScalarFn1d::Const { value } => *value,
            ScalarFn1d::Poly { coeffs } => coeffs.iter().rev().fold(0.0, |acc, c| acc * s + c),
            ScalarFn1d::Sin { amp, freq, phase } => amp * (freq * s + phase).sin(),
            ScalarFn1d::SmoothRamp { amp, scale } => {
                if s <= 0.0 {
                    0.0
                } else {
                    amp * (-scale / s).exp()
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Hermite splines over uniform s-grids
// ---------------------------------------------------------------------------

/// Cubic Hermite interpolant of a sampled `R^dim`-valued function of `s`.
#[derive(Clone, Debug)]
pub struct VectorSpline {
    s0: f64,
    step: f64,
    /// `[node][component]`
    values: Vec<Vec<f64>>,
    derivs: Vec<Vec<f64>>,
    dim: usize,
    period: Option<f64>,
}

impl VectorSpline {
    pub fn new(s0: f64, step: f64, values: Vec<Vec<f64>>, derivs: Vec<Vec<f64>>) -> Self {
        assert_eq!(values.len(), derivs.len());
        assert!(values.len() >= 2);
        let dim = values[0].len();
        VectorSpline {
            s0,
            step,
            values,
            derivs,
            dim,
            period: None,
        }
    }

    pub fn with_period(mut self, period: f64) -> Self {
        self.period = Some(period);
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn s_range(&self) -> (f64, f64) {
        (self.s0, self.s0 + self.step * (self.values.len() - 1) as f64)
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(move |k| self.s0 + self.step * k as f64)
    }

    pub fn node_values(&self) -> &[Vec<f64>] {
        &self.values
    }

    /// Evaluate at any scalar depth (segment located by the value part).
    pub fn eval<S: Scalar>(&self, s: S) -> Vec<S> {
        let mut s = s;
        if let Some(p) = self.period {
            let k = ((s.value() - self.s0) / p).floor();
            s = s - S::from_f64(k * p);
        }
        let pos = (s.value() - self.s0) / self.step;
        let seg = (pos.floor() as isize).clamp(0, self.values.len() as isize - 2) as usize;
        let t = (s - S::from_f64(self.s0 + self.step * seg as f64)) * S::from_f64(1.0 / self.step);
        let t2 = t * t;
        let t3 = t2 * t;
        let three = S::from_f64(3.0);
        let two = S::from_f64(2.0);
        let h00 = two * t3 - three * t2 + S::one();
        let h10 = t3 - two * t2 + t;
        let h01 = -(two * t3) + three * t2;
        let h11 = t3 - t2;
        let d = S::from_f64(self.step);
        (0..self.dim)
            .map(|c| {
                h00 * S::from_f64(self.values[seg][c])
                    + h10 * d * S::from_f64(self.derivs[seg][c])
                    + h01 * S::from_f64(self.values[seg + 1][c])
                    + h11 * d * S::from_f64(self.derivs[seg + 1][c])
            })
            .collect()
    }

    pub fn eval_f64(&self, s: f64) -> DVector<f64> {
        DVector::from_vec(self.eval::<f64>(s))
    }
}

impl ChartMap for VectorSpline {
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        VectorSpline::eval(self, x[0])
    }
}

// ---------------------------------------------------------------------------
// sampled curves
// ---------------------------------------------------------------------------

/// A unit-speed curve sampled on a uniform `s`-grid, with position, velocity
/// and acceleration splines.
#[derive(Clone, Debug)]
pub struct SampledCurve {
    position: VectorSpline,
    velocity: VectorSpline,
    dim: usize,
}

impl SampledCurve {
    pub fn new(position: VectorSpline, velocity: VectorSpline) -> Self {
        let dim = position.dim();
        assert_eq!(velocity.dim(), dim);
        SampledCurve {
            position,
            velocity,
            dim,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn s_range(&self) -> (f64, f64) {
        self.position.s_range()
    }

    pub fn step(&self) -> f64 {
        self.position.step
    }

    pub fn s_nodes(&self) -> Vec<f64> {
        self.position.nodes().collect()
    }

    /// Declare the curve periodic with the given period (caller's assertion;
    /// gluing is never inferred).
    pub fn with_period(mut self, period: f64) -> Self {
        self.position = self.position.with_period(period);
        self.velocity = self.velocity.with_period(period);
        self
    }

    pub fn position_spline(&self) -> &VectorSpline {
        &self.position
    }

    pub fn point(&self, s: f64) -> DVector<f64> {
        self.position.eval_f64(s)
    }

    pub fn velocity(&self, s: f64) -> DVector<f64> {
        self.velocity.eval_f64(s)
    }

    /// `γ''(s)` as the derivative of the velocity spline.
    pub fn acceleration(&self, s: f64) -> DVector<f64> {
        let d1 = numjet::Dual::variable(s);
        DVector::from_vec(
            self.velocity
                .eval::<numjet::D1>(d1)
                .iter()
                .map(|d| d.eps)
                .collect::<Vec<_>>(),
        )
    }

    /// The curve as a smooth one-parameter chart map.
    pub fn as_map(&self) -> SmoothMap {
        let (lo, hi) = self.s_range();
        SmoothMap::new(
            self.dim,
            ChartBox::new(vec![lo], vec![hi]),
            self.position.clone(),
        )
    }
}

// ---------------------------------------------------------------------------
// Frenet apparatus
// ---------------------------------------------------------------------------

/// Frenet frame and curvatures of a curve at one parameter value.
#[derive(Clone, Debug)]
pub struct FrenetData {
    pub s: f64,
    /// Orthonormal frame `e_1, …, e_N`, `e_1 = c'`.
    pub frame: Vec<DVector<f64>>,
    /// `κ_1, …, κ_{N−1}`.
    pub curvatures: Vec<f64>,
}

const FRENET_PIVOT: f64 = 1e-8;

/// Orthonormal Frenet frame at `s` from Gram-Schmidt on `(c', c'', c''')`,
/// completed by the generalized cross product in `R^4`.
fn frenet_frame_at(curve: &SmoothMap, s: f64) -> Result<Vec<DVector<f64>>, CurveError> {
    let n = curve.codomain_dim();
    let order = (n - 1).min(3);
    let jet = numjet::eval_jet(curve, &[s], order.max(1), Backend::Dual)?;
    let mut derivs: Vec<DVector<f64>> = Vec::new();
    derivs.push(jet.first.column(0).into_owned());
    if order >= 2 {
        derivs.push(DVector::from_iterator(n, (0..n).map(|c| jet.second[c][(0, 0)])));
    }
    if order >= 3 {
        derivs.push(DVector::from_iterator(
            n,
            (0..n).map(|c| jet.third_partial(c, 0, 0, 0)),
        ));
    }

    let speed = derivs[0].norm();
    if (speed - 1.0).abs() > 1e-6 {
        return Err(CurveError::NotUnitSpeed { s, speed });
    }

    let mut frame: Vec<DVector<f64>> = Vec::new();
    for (idx, d) in derivs.iter().enumerate() {
        let mut v = d.clone();
        for e in &frame {
            let c = e.dot(d);
            v -= e * c;
        }
        let pivot = v.norm();
        if pivot < FRENET_PIVOT {
            return Err(CurveError::DegenerateFrenet { index: idx, pivot });
        }
        frame.push(v / pivot);
    }
    if frame.len() == n - 1 {
        // complete the frame so det(e_1, …, e_N) > 0
        let m = DMatrix::from_columns(&frame.iter().map(|v| v.clone()).collect::<Vec<_>>());
        let last = crate::geometry::cross_normal(&m);
        frame.push(last.clone() / last.norm());
    }
    if frame.len() != n {
        return Err(CurveError::UnsupportedDimension(n));
    }
    Ok(frame)
}

/// Frenet frame and curvatures `κ_i = ⟨e_i', e_{i+1}⟩` at `s`; frame
/// derivatives by Richardson-extrapolated central differences.
pub fn frenet_apparatus(curve: &SmoothMap, s: f64) -> Result<FrenetData, CurveError> {
    let n = curve.codomain_dim();
    if !(2..=4).contains(&n) {
        return Err(CurveError::UnsupportedDimension(n));
    }
    let frame = frenet_frame_at(curve, s)?;

    let h = 1e-2;
    let mut curvatures = vec![0.0; n - 1];
    let mut coarse = vec![0.0; n - 1];
    for (pass, step) in [h, 0.5 * h].into_iter().enumerate() {
        let fp = frenet_frame_at(curve, s + step)?;
        let fm = frenet_frame_at(curve, s - step)?;
        for i in 0..n - 1 {
            let de = (&fp[i] - &fm[i]) / (2.0 * step);
            let est = de.dot(&frame[i + 1]);
            if pass == 0 {
                coarse[i] = est;
            } else {
                curvatures[i] = (4.0 * est - coarse[i]) / 3.0;
            }
        }
    }
    Ok(FrenetData {
        s,
        frame,
        curvatures,
    })
}

// ---------------------------------------------------------------------------
// curve synthesis from prescribed curvatures
// ---------------------------------------------------------------------------

/// A synthesized curve with its Frenet frame field sampled along `s`.
#[derive(Clone, Debug)]
pub struct FrenetMovingFrame {
    pub curve: SampledCurve,
    /// Splines for `e_1, …, e_N`.
    pub frames: Vec<VectorSpline>,
    pub kappas: Vec<ScalarFn1d>,
}

impl FrenetMovingFrame {
    pub fn dim(&self) -> usize {
        self.curve.dim()
    }

    pub fn frame_at(&self, s: f64) -> Vec<DVector<f64>> {
        self.frames.iter().map(|sp| sp.eval_f64(s)).collect()
    }

    pub fn frame_spline(&self, i: usize) -> &VectorSpline {
        &self.frames[i]
    }
}

fn check_orthonormal(frame: &[DVector<f64>], tol: f64) -> Result<(), CurveError> {
    let mut worst = 0.0f64;
    for (i, a) in frame.iter().enumerate() {
        for (j, b) in frame.iter().enumerate() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((a.dot(b) - target).abs());
        }
    }
    if worst > tol {
        return Err(CurveError::FrameNotOrthonormal(worst));
    }
    Ok(())
}

fn modified_gram_schmidt(frame: &mut [DVector<f64>]) {
    for i in 0..frame.len() {
        for j in 0..i {
            let c = frame[j].dot(&frame[i]);
            let fj = frame[j].clone();
            frame[i] -= fj * c;
        }
        let n = frame[i].norm();
        frame[i] /= n;
    }
}

/// Integrate the Frenet system `c' = e_1`, `e_i' = −κ_{i−1}e_{i−1} + κ_i e_{i+1}`
/// with classical RK4 at fixed step, re-orthonormalizing the frame each step.
pub fn curve_from_curvatures(
    kappas: &[ScalarFn1d],
    initial_frame: &[DVector<f64>],
    initial_point: &DVector<f64>,
    s_range: (f64, f64),
    step: f64,
) -> Result<FrenetMovingFrame, CurveError> {
    let n = initial_point.len();
    assert_eq!(kappas.len(), n - 1, "need N-1 curvature functions in R^N");
    assert_eq!(initial_frame.len(), n);
    if step <= 0.0 {
        return Err(CurveError::BadStep(step));
    }
    check_orthonormal(initial_frame, 1e-10)?;

    let steps = ((s_range.1 - s_range.0) / step).round() as usize;
    assert!(steps >= 1);
    let h = (s_range.1 - s_range.0) / steps as f64;

    // state = (c, e_1, …, e_N) flattened
    let pack = |c: &DVector<f64>, e: &[DVector<f64>]| {
        let mut v = Vec::with_capacity(n * (n + 1));
        v.extend(c.iter());
        for ei in e {
            v.extend(ei.iter());
        }
        DVector::from_vec(v)
    };
    let unpack = |v: &DVector<f64>| {
        let c = DVector::from_iterator(n, v.iter().take(n).copied());
        let e: Vec<DVector<f64>> = (0..n)
            .map(|i| DVector::from_iterator(n, v.iter().skip(n * (i + 1)).take(n).copied()))
            .collect();
        (c, e)
    };
    let rhs = |s: f64, v: &DVector<f64>| {
        let (_, e) = unpack(v);
        let k: Vec<f64> = kappas.iter().map(|f| f.eval(s)).collect();
        let mut out = Vec::with_capacity(n * (n + 1));
        out.extend(e[0].iter());
        for i in 0..n {
            let mut de = DVector::zeros(n);
            if i > 0 {
                de -= &e[i - 1] * k[i - 1];
            }
            if i + 1 < n {
                de += &e[i + 1] * k[i];
            }
            out.extend(de.iter());
        }
        DVector::from_vec(out)
    };

    let mut state = pack(initial_point, initial_frame);
    let mut s = s_range.0;

    let mut points = Vec::with_capacity(steps + 1);
    let mut velocities = Vec::with_capacity(steps + 1);
    let mut accels = Vec::with_capacity(steps + 1);
    let mut frame_vals: Vec<Vec<Vec<f64>>> = vec![Vec::with_capacity(steps + 1); n];
    let mut frame_ders: Vec<Vec<Vec<f64>>> = vec![Vec::with_capacity(steps + 1); n];

    let mut record = |s: f64, state: &DVector<f64>| {
        let (c, e) = unpack(state);
        let d = rhs(s, state);
        let (_, de_all) = {
            let dc = DVector::from_iterator(n, d.iter().take(n).copied());
            let de: Vec<DVector<f64>> = (0..n)
                .map(|i| DVector::from_iterator(n, d.iter().skip(n * (i + 1)).take(n).copied()))
                .collect();
            (dc, de)
        };
        points.push(c.iter().copied().collect::<Vec<_>>());
        velocities.push(e[0].iter().copied().collect::<Vec<_>>());
        accels.push(de_all[0].iter().copied().collect::<Vec<_>>());
        for i in 0..n {
            frame_vals[i].push(e[i].iter().copied().collect());
            frame_ders[i].push(de_all[i].iter().copied().collect());
        }
    };
    record(s, &state);

    for _ in 0..steps {
        let k1 = rhs(s, &state);
        let k2 = rhs(s + 0.5 * h, &(&state + &k1 * (0.5 * h)));
        let k3 = rhs(s + 0.5 * h, &(&state + &k2 * (0.5 * h)));
        let k4 = rhs(s + h, &(&state + &k3 * h));
        state += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        s += h;

        let (c, mut e) = unpack(&state);
        modified_gram_schmidt(&mut e);
        state = pack(&c, &e);
        record(s, &state);
    }

    let position = VectorSpline::new(s_range.0, h, points, velocities.clone());
    let velocity = VectorSpline::new(s_range.0, h, velocities, accels);
    let frames = (0..n)
        .map(|i| {
            VectorSpline::new(
                s_range.0,
                h,
                std::mem::take(&mut frame_vals[i]),
                std::mem::take(&mut frame_ders[i]),
            )
        })
        .collect();

    Ok(FrenetMovingFrame {
        curve: SampledCurve::new(position, velocity),
        frames,
        kappas: kappas.to_vec(),
    })
}

// ---------------------------------------------------------------------------
// parallel normal frames
// ---------------------------------------------------------------------------

/// Orthonormal, normally-parallel sections `ξ_1, …, ξ_m` along a sampled
/// unit-speed curve. The map `φ_s(y) = Σ y_i ξ_i(s)` realized by the section
/// splines is a parallel vector-bundle isometry onto their span.
#[derive(Clone, Debug)]
pub struct ParallelNormalFrame {
    pub curve: SampledCurve,
    pub sections: Vec<VectorSpline>,
}

impl ParallelNormalFrame {
    pub fn rank(&self) -> usize {
        self.sections.len()
    }

    pub fn dim(&self) -> usize {
        self.curve.dim()
    }

    /// `φ_s(y)` at a node-independent `s`.
    pub fn phi(&self, s: f64, y: &[f64]) -> DVector<f64> {
        let mut v = DVector::zeros(self.dim());
        for (yi, sec) in y.iter().zip(&self.sections) {
            v += sec.eval_f64(s) * *yi;
        }
        v
    }

    pub fn section_at(&self, i: usize, s: f64) -> DVector<f64> {
        self.sections[i].eval_f64(s)
    }
}

/// Integrate `ξ' = −⟨ξ, γ''⟩ γ'` (the normally-parallel extension) with RK4,
/// re-projecting onto the normal space and re-orthonormalizing each step.
pub fn parallel_normal_frame(
    curve: &SampledCurve,
    initial_sections: &[DVector<f64>],
) -> Result<ParallelNormalFrame, CurveError> {
    let (s0, _s1) = curve.s_range();
    let h = curve.step();
    let t0 = curve.velocity(s0);
    for (i, xi) in initial_sections.iter().enumerate() {
        let dot = xi.dot(&t0);
        if dot.abs() > 1e-8 {
            return Err(CurveError::SectionNotNormal { index: i, dot });
        }
    }
    check_orthonormal(initial_sections, 1e-8)?;

    let m = initial_sections.len();
    let nodes = curve.s_nodes();
    let mut sections: Vec<DVector<f64>> = initial_sections.to_vec();
    let mut vals: Vec<Vec<Vec<f64>>> = vec![Vec::with_capacity(nodes.len()); m];
    let mut ders: Vec<Vec<Vec<f64>>> = vec![Vec::with_capacity(nodes.len()); m];

    let rhs = |s: f64, xi: &DVector<f64>| {
        let acc = curve.acceleration(s);
        let vel = curve.velocity(s);
        -&vel * xi.dot(&acc)
    };
    let mut record = |s: f64, sections: &[DVector<f64>]| {
        for i in 0..m {
            vals[i].push(sections[i].iter().copied().collect());
            ders[i].push(rhs(s, &sections[i]).iter().copied().collect());
        }
    };
    record(s0, &sections);

    for (k, &s) in nodes.iter().enumerate().take(nodes.len() - 1) {
        for xi in sections.iter_mut() {
            let k1 = rhs(s, xi);
            let k2 = rhs(s + 0.5 * h, &(&*xi + &k1 * (0.5 * h)));
            let k3 = rhs(s + 0.5 * h, &(&*xi + &k2 * (0.5 * h)));
            let k4 = rhs(s + h, &(&*xi + &k3 * h));
            *xi += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        }
        // re-project onto the normal space, then re-orthonormalize
        let s_next = nodes[k + 1];
        let mut t = curve.velocity(s_next);
        t /= t.norm();
        for xi in sections.iter_mut() {
            let c = xi.dot(&t);
            *xi -= &t * c;
        }
        modified_gram_schmidt(&mut sections);
        record(s_next, &sections);
    }

    let sections = (0..m)
        .map(|i| {
            VectorSpline::new(
                s0,
                h,
                std::mem::take(&mut vals[i]),
                std::mem::take(&mut ders[i]),
            )
        })
        .collect();
    Ok(ParallelNormalFrame {
        curve: curve.clone(),
        sections,
    })
}

// ---------------------------------------------------------------------------
// admissibility margin Ω(γ; φ)
// ---------------------------------------------------------------------------

/// Signed margins of `1 − ⟨γ''(s), φ_s(y)⟩` over the sampled `s`-grid.
#[derive(Clone, Debug, Serialize)]
pub struct OmegaMargin {
    pub min: f64,
    pub max: f64,
    /// True iff the margin never reaches zero: `y` stays in `Ω(γ;φ)`.
    pub admissible: bool,
    /// Margin of smallest magnitude and where it occurs.
    pub worst: f64,
    pub worst_s: f64,
}

/// Margins of the fiber position `y` over every sampled `s`.
pub fn omega_margin(frame: &ParallelNormalFrame, y: &[f64]) -> OmegaMargin {
    assert_eq!(y.len(), frame.rank());
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    let mut worst = f64::INFINITY;
    let mut worst_s = frame.curve.s_range().0;
    for s in frame.curve.s_nodes() {
        let acc = frame.curve.acceleration(s);
        let margin = 1.0 - acc.dot(&frame.phi(s, y));
        min = min.min(margin);
        max = max.max(margin);
        if margin.abs() < worst.abs() {
            worst = margin;
            worst_s = s;
        }
    }
    let admissible = !(min <= 0.0 && max >= 0.0);
    OmegaMargin {
        min,
        max,
        admissible,
        worst,
        worst_s,
    }
}

// ---------------------------------------------------------------------------
// closed-form sample curves (exact node data)
// ---------------------------------------------------------------------------

/// Unit-speed circle of the given radius in the first two ambient
/// coordinates, sampled with exact node values and derivatives.
pub fn circle_curve(radius: f64, ambient_dim: usize, s_range: (f64, f64), step: f64) -> SampledCurve {
    let steps = ((s_range.1 - s_range.0) / step).round().max(1.0) as usize;
    let h = (s_range.1 - s_range.0) / steps as f64;
    let mut points = Vec::with_capacity(steps + 1);
    let mut vels = Vec::with_capacity(steps + 1);
    let mut accs = Vec::with_capacity(steps + 1);
    for k in 0..=steps {
        let s = s_range.0 + h * k as f64;
        let (a, b) = ((s / radius).cos(), (s / radius).sin());
        let mut p = vec![0.0; ambient_dim];
        let mut v = vec![0.0; ambient_dim];
        let mut acc = vec![0.0; ambient_dim];
        p[0] = radius * a;
        p[1] = radius * b;
        v[0] = -b;
        v[1] = a;
        acc[0] = -a / radius;
        acc[1] = -b / radius;
        points.push(p);
        vels.push(v);
        accs.push(acc);
    }
    SampledCurve::new(
        VectorSpline::new(s_range.0, h, points, vels.clone()),
        VectorSpline::new(s_range.0, h, vels, accs),
    )
}

/// The radial-plus-constant parallel normal frame of [`circle_curve`]:
/// `ξ_1 = e_r(s)` and constant sections along the remaining axes.
pub fn circle_radial_frame(
    radius: f64,
    ambient_dim: usize,
    s_range: (f64, f64),
    step: f64,
) -> ParallelNormalFrame {
    let curve = circle_curve(radius, ambient_dim, s_range, step);
    let steps = curve.s_nodes().len() - 1;
    let h = curve.step();
    let m = ambient_dim - 1;
    let mut vals: Vec<Vec<Vec<f64>>> = vec![Vec::with_capacity(steps + 1); m];
    let mut ders: Vec<Vec<Vec<f64>>> = vec![Vec::with_capacity(steps + 1); m];
    for k in 0..=steps {
        let s = s_range.0 + h * k as f64;
        let (a, b) = ((s / radius).cos(), (s / radius).sin());
        let mut er = vec![0.0; ambient_dim];
        let mut der = vec![0.0; ambient_dim];
        er[0] = a;
        er[1] = b;
        der[0] = -b / radius;
        der[1] = a / radius;
        vals[0].push(er);
        ders[0].push(der);
        for j in 1..m {
            let mut e = vec![0.0; ambient_dim];
            e[j + 1] = 1.0;
            vals[j].push(e);
            ders[j].push(vec![0.0; ambient_dim]);
        }
    }
    let sections = (0..m)
        .map(|i| {
            VectorSpline::new(
                s_range.0,
                h,
                std::mem::take(&mut vals[i]),
                std::mem::take(&mut ders[i]),
            )
        })
        .collect();
    ParallelNormalFrame { curve, sections }
}

/// Straight unit-speed line through `origin` along `direction`.
pub fn line_curve(
    origin: &DVector<f64>,
    direction: &DVector<f64>,
    s_range: (f64, f64),
    step: f64,
) -> SampledCurve {
    let dir = direction / direction.norm();
    let n = origin.len();
    let steps = ((s_range.1 - s_range.0) / step).round().max(1.0) as usize;
    let h = (s_range.1 - s_range.0) / steps as f64;
    let mut points = Vec::new();
    let mut vels = Vec::new();
    let mut accs = Vec::new();
    for k in 0..=steps {
        let s = s_range.0 + h * k as f64;
        let p = origin + &dir * s;
        points.push(p.iter().copied().collect());
        vels.push(dir.iter().copied().collect());
        accs.push(vec![0.0; n]);
    }
    SampledCurve::new(
        VectorSpline::new(s_range.0, h, points, vels.clone()),
        VectorSpline::new(s_range.0, h, vels, accs),
    )
}

// ---------------------------------------------------------------------------
// serialization
// ---------------------------------------------------------------------------

/// JSON document for sampled curves and frames:
/// `{"s": [...], "points": [[...]], "frames": [[[...]]]}`, row-major doubles.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CurveDoc {
    pub s: Vec<f64>,
    pub points: Vec<Vec<f64>>,
    pub frames: Vec<Vec<Vec<f64>>>,
}

impl CurveDoc {
    pub fn from_parallel_frame(frame: &ParallelNormalFrame) -> Self {
        let s = frame.curve.s_nodes();
        let points = frame.curve.position_spline().node_values().to_vec();
        let frames = s
            .iter()
            .enumerate()
            .map(|(k, _)| {
                frame
                    .sections
                    .iter()
                    .map(|sec| sec.node_values()[k].clone())
                    .collect()
            })
            .collect();
        CurveDoc { s, points, frames }
    }

    pub fn from_moving_frame(mf: &FrenetMovingFrame) -> Self {
        let s = mf.curve.s_nodes();
        let points = mf.curve.position_spline().node_values().to_vec();
        let frames = s
            .iter()
            .enumerate()
            .map(|(k, _)| mf.frames.iter().map(|sp| sp.node_values()[k].clone()).collect())
            .collect();
        CurveDoc { s, points, frames }
    }
}
