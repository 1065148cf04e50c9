//! Builders for hypersurface families carrying a totally geodesic
//! corank-one foliation: partial tubes over curves, rotation hypersurfaces,
//! ruled pieces, cylindrical/conical surface-like charts, and the flat
//! envelope of tangent spaces along a leaf in the coupled (non-degenerate)
//! case.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curves::{
    circle_radial_frame, curve_from_curvatures, omega_margin, CurveError, ParallelNormalFrame,
    ScalarFn1d, VectorSpline,
};
use crate::geometry::{
    generic::{case_iii_frame_s, dot_s},
    geometry_jet, DistributionField, GeometryError, ImmersionField,
};
use crate::numjet::{
    self, Backend, ChartBox, ChartMap, ConstantMap, JetError, Scalar, SmoothMap,
};

#[derive(Debug, Error)]
pub enum ConstructionError {
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error("fiber point {p:?} is inadmissible: margin {margin:.3e} at s = {s}")]
    Inadmissible { p: Vec<f64>, s: f64, margin: f64 },
    #[error("fiber immersion is not substantial: image spans rank {found} < {expected}")]
    NotSubstantial { found: usize, expected: usize },
    #[error("map degenerates at sampled chart points {samples:?}")]
    NotImmersion { samples: Vec<Vec<f64>> },
    #[error("profile touches the rotation axis near {p:?} (clearance {clearance:.3e})")]
    AxisTouch { p: Vec<f64>, clearance: f64 },
    #[error("supplied direction field is not geodesic (worst residual {residual:.3e})")]
    NotGeodesic { residual: f64 },
    #[error("cone base does not map into the unit sphere (worst deviation {deviation:.3e})")]
    NotSpherical { deviation: f64 },
    #[error("base is not in the coupled case at {point:?}: mu = {mu:.3e}, rho = {rho:.3e}")]
    NotCoupled { point: Vec<f64>, mu: f64, rho: f64 },
    #[error("envelope chart degenerates for every nonzero fiber offset; shrink s_range")]
    TubeWidth,
}

/// A built hypersurface together with its distinguished distribution.
#[derive(Clone)]
pub struct Construction {
    pub immersion: ImmersionField,
    pub distribution: DistributionField,
    /// Set by [`build_rotation_hypersurface`].
    pub rotation: bool,
}

fn constant_direction(chart: &ChartBox, index: usize) -> SmoothMap {
    let mut e = vec![0.0; chart.dim()];
    e[index] = 1.0;
    SmoothMap::new(chart.dim(), chart.clone(), ConstantMap(e))
}

/// Grid samples where the map's Jacobian drops rank.
fn degenerate_samples(
    map: &SmoothMap,
    res: usize,
    min_singular: f64,
) -> Result<Vec<Vec<f64>>, ConstructionError> {
    let grid = map.chart().grid(&vec![res; map.domain_dim()], 2.0 * numjet::FD_STEP);
    let mut bad = Vec::new();
    for x in grid {
        let jet = numjet::eval_jet(map, &x, 1, Backend::Dual)?;
        let svd = jet.first.clone().svd(false, false);
        let smin = svd.singular_values.iter().cloned().fold(f64::INFINITY, f64::min);
        if smin < min_singular {
            bad.push(x);
        }
    }
    Ok(bad)
}

// ---------------------------------------------------------------------------
// partial tubes
// ---------------------------------------------------------------------------

/// Ingredients of a partial tube: a parallel frame `φ_s` of rank `n` along a
/// unit-speed curve in `R^{n+1}` and a fiber immersion `f_0` of an
/// `(n−1)`-chart into the frame fiber `R^n`.
#[derive(Clone)]
pub struct PartialTubeSpec {
    pub frame: ParallelNormalFrame,
    pub f0: SmoothMap,
    /// Require the fiber image to span the full fiber (no affine reduction).
    /// Degenerate fibers (hyperplane slices, profile segments) set this off.
    pub require_substantial: bool,
    /// Grid resolution per fiber axis for the admissibility sweep.
    pub check_res: usize,
}

impl PartialTubeSpec {
    pub fn new(frame: ParallelNormalFrame, f0: SmoothMap) -> Self {
        PartialTubeSpec {
            frame,
            f0,
            require_substantial: true,
            check_res: 6,
        }
    }

    pub fn without_substantial_check(mut self) -> Self {
        self.require_substantial = false;
        self
    }
}

struct TubeMap {
    frame: ParallelNormalFrame,
    f0: SmoothMap,
}

impl ChartMap for TubeMap {
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let k = self.f0.domain_dim();
        let s = x[k];
        let y = self.f0.eval(&x[..k]);
        let mut out = self.frame.curve.position_spline().eval(s);
        for (yi, sec) in y.iter().zip(&self.frame.sections) {
            for (o, c) in out.iter_mut().zip(sec.eval(s)) {
                *o = *o + *yi * c;
            }
        }
        out
    }
}

/// `f(p, s) = γ(s) + φ_s(f_0(p))`, with the fiber coordinate fields as the
/// distinguished distribution.
pub fn build_partial_tube(spec: &PartialTubeSpec) -> Result<Construction, ConstructionError> {
    let m = spec.f0.codomain_dim();
    let k = spec.f0.domain_dim();
    assert_eq!(
        spec.frame.rank(),
        m,
        "frame rank must match the fiber codomain"
    );
    assert_eq!(
        spec.frame.dim(),
        m + 1,
        "hypersurface codimension must be one"
    );

    let bad = degenerate_samples(&spec.f0, spec.check_res, 1e-8)?;
    if !bad.is_empty() {
        return Err(ConstructionError::NotImmersion { samples: bad });
    }

    let grid = spec
        .f0
        .chart()
        .grid(&vec![spec.check_res; k], 2.0 * numjet::FD_STEP);
    if spec.require_substantial {
        // centered image samples must span the whole fiber
        let samples: Vec<Vec<f64>> = grid.iter().map(|p| spec.f0.eval::<f64>(p)).collect();
        let mut mean = vec![0.0; m];
        for s in &samples {
            for (a, b) in mean.iter_mut().zip(s) {
                *a += b / samples.len() as f64;
            }
        }
        let mat = DMatrix::from_fn(m, samples.len(), |r, c| samples[c][r] - mean[r]);
        let svd = mat.svd(false, false);
        let smax = svd.singular_values.max();
        let rank = svd
            .singular_values
            .iter()
            .filter(|&&s| s > 1e-6 * smax.max(1.0))
            .count();
        if rank < m {
            return Err(ConstructionError::NotSubstantial {
                found: rank,
                expected: m,
            });
        }
    }

    for p in &grid {
        let y = spec.f0.eval::<f64>(p);
        let margin = omega_margin(&spec.frame, &y);
        if !margin.admissible {
            return Err(ConstructionError::Inadmissible {
                p: p.clone(),
                s: margin.worst_s,
                margin: margin.worst,
            });
        }
    }

    let (s_lo, s_hi) = spec.frame.curve.s_range();
    let mut lo = spec.f0.chart().lo.clone();
    let mut hi = spec.f0.chart().hi.clone();
    lo.push(s_lo);
    hi.push(s_hi);
    let chart = ChartBox::new(lo, hi);

    let map = SmoothMap::new(
        spec.frame.dim(),
        chart.clone(),
        TubeMap {
            frame: spec.frame.clone(),
            f0: spec.f0.clone(),
        },
    );
    let generators = (0..k).map(|i| constant_direction(&chart, i)).collect();
    Ok(Construction {
        immersion: ImmersionField::new(map),
        distribution: DistributionField::new(generators),
        rotation: false,
    })
}

/// Rotate a profile chart `f_0 ⊂ R^n` about the axis `{y_1 = −R}`-offset
/// circle: a partial tube over a circle of radius `R` with the
/// radial-plus-constant parallel frame.
pub fn build_rotation_hypersurface(
    profile: &SmoothMap,
    radius: f64,
) -> Result<Construction, ConstructionError> {
    let m = profile.codomain_dim();
    let grid = profile
        .chart()
        .grid(&vec![6; profile.domain_dim()], 2.0 * numjet::FD_STEP);
    for p in &grid {
        let y = profile.eval::<f64>(p);
        let clearance = radius + y[0];
        if clearance < 1e-3 {
            return Err(ConstructionError::AxisTouch {
                p: p.clone(),
                clearance,
            });
        }
    }
    let frame = circle_radial_frame(
        radius,
        m + 1,
        (0.0, 2.0 * std::f64::consts::PI * radius),
        1e-3,
    );
    let spec = PartialTubeSpec::new(frame, profile.clone()).without_substantial_check();
    let mut built = build_partial_tube(&spec)?;
    built.rotation = true;
    Ok(built)
}

/// Worst coupling `|h(X̂, ∂̂_s)| / (1 + ‖A‖)` between g-normalized fiber
/// directions and the g-normalized curve direction over an interior grid.
pub fn tube_coupling_residual(
    built: &Construction,
    res: usize,
    backend: Backend,
) -> Result<f64, ConstructionError> {
    let f = &built.immersion;
    let n = f.dim();
    let grid = f.chart().grid(&vec![res; n], 1e-3);
    let mut worst = 0.0f64;
    for x in grid {
        let jet = geometry_jet(f, &x, backend)?;
        let mut ds = DVector::zeros(n);
        ds[n - 1] = 1.0;
        let dsn = jet.norm(&ds);
        for i in 0..n - 1 {
            let mut xi = DVector::zeros(n);
            xi[i] = 1.0;
            let coupling = (xi.transpose() * &jet.h * &ds)[(0, 0)].abs() / (jet.norm(&xi) * dsn);
            worst = worst.max(coupling / (1.0 + jet.shape_norm()));
        }
    }
    Ok(worst)
}

/// Largest drift of the fiber-slice metric across `s` (parallel transport
/// should make fixed-`s` slices isometric).
pub fn fiber_metric_drift(built: &Construction, res: usize) -> Result<f64, ConstructionError> {
    let f = &built.immersion;
    let n = f.dim();
    let grid = f.chart().grid(&vec![res; n], 1e-3);
    // group by fiber point: compare the fiber block of g across the s-axis
    let mut worst = 0.0f64;
    let mut reference: Vec<(Vec<f64>, DMatrix<f64>)> = Vec::new();
    for x in grid {
        let jet = geometry_jet(f, &x, Backend::Dual)?;
        let block = jet.g.view((0, 0), (n - 1, n - 1)).into_owned();
        let p: Vec<f64> = x[..n - 1].to_vec();
        match reference.iter().find(|(q, _)| {
            q.iter().zip(&p).all(|(a, b)| (a - b).abs() < 1e-12)
        }) {
            Some((_, g0)) => {
                worst = worst.max((&block - g0).amax());
            }
            None => reference.push((p, block)),
        }
    }
    Ok(worst)
}

// ---------------------------------------------------------------------------
// ruled pieces
// ---------------------------------------------------------------------------

struct RuledMap {
    position: VectorSpline,
    rulings: Vec<VectorSpline>,
}

impl ChartMap for RuledMap {
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let s = x[0];
        let mut out = self.position.eval(s);
        for (t, dir) in x[1..].iter().zip(&self.rulings) {
            for (o, c) in out.iter_mut().zip(dir.eval(s)) {
                *o = *o + *t * c;
            }
        }
        out
    }
}

/// Ruled chart `F(s, t) = c(s) + Σ t_j e_{j+2}(s)` over a curve with
/// prescribed curvatures, ruled by its higher Frenet directions.
pub fn build_ruled_example(
    kappas: &[ScalarFn1d],
    s_range: (f64, f64),
    t_half: f64,
) -> Result<Construction, ConstructionError> {
    let ambient = kappas.len() + 1;
    assert!(ambient >= 3, "need at least one ruling direction");
    let steps = 200;
    for k in 0..=steps {
        let s = s_range.0 + (s_range.1 - s_range.0) * k as f64 / steps as f64;
        assert!(kappas[0].eval(s) > 0.0, "kappa_1 must stay positive");
    }

    let n = ambient - 1;
    let e0: Vec<DVector<f64>> = (0..ambient)
        .map(|i| {
            let mut v = DVector::zeros(ambient);
            v[i] = 1.0;
            v
        })
        .collect();
    let mf = curve_from_curvatures(kappas, &e0, &DVector::zeros(ambient), s_range, 1e-3)?;

    let mut lo = vec![s_range.0];
    let mut hi = vec![s_range.1];
    lo.extend(std::iter::repeat(-t_half).take(n - 1));
    hi.extend(std::iter::repeat(t_half).take(n - 1));
    let chart = ChartBox::new(lo, hi);

    let map = SmoothMap::new(
        ambient,
        chart.clone(),
        RuledMap {
            position: mf.curve.position_spline().clone(),
            rulings: mf.frames[2..].to_vec(),
        },
    );
    let bad = degenerate_samples(&map, 5, 1e-6)?;
    if !bad.is_empty() {
        return Err(ConstructionError::NotImmersion { samples: bad });
    }
    let generators = (1..n).map(|i| constant_direction(&chart, i)).collect();
    Ok(Construction {
        immersion: ImmersionField::new(map),
        distribution: DistributionField::new(generators),
        rotation: false,
    })
}

// ---------------------------------------------------------------------------
// surface-like charts
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurfaceKind {
    Cylindrical,
    Conical,
}

/// Inputs for a surface-like hypersurface: a surface chart `g`, a geodesic
/// direction field `d0` on its chart, and the flat/cone factors.
#[derive(Clone)]
pub struct SurfaceLikeSpec {
    pub g: SmoothMap,
    pub d0: SmoothMap,
    pub kind: SurfaceKind,
    /// Hypersurface dimension.
    pub n: usize,
    /// Range of each Euclidean-factor coordinate.
    pub factor_range: (f64, f64),
    /// Cone parameter range (conical only); must stay positive.
    pub t_range: (f64, f64),
}

struct CylinderMap {
    g: SmoothMap,
}

impl ChartMap for CylinderMap {
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let mut out = self.g.eval(&x[..2]);
        out.extend_from_slice(&x[2..]);
        out
    }
}

struct ConeMap {
    g: SmoothMap,
}

impl ChartMap for ConeMap {
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let t = x[2];
        let mut out: Vec<S> = self.g.eval(&x[..2]).iter().map(|&v| v * t).collect();
        out.extend_from_slice(&x[3..]);
        out
    }
}

/// Direction field on a surface chart, lifted to a bigger chart by padding
/// with zeros (it only reads the first two coordinates).
struct LiftedField {
    inner: SmoothMap,
    total: usize,
}

impl ChartMap for LiftedField {
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let mut v = self.inner.eval(&x[..2]);
        v.resize(self.total, S::zero());
        v
    }
}

/// Worst geodesy residual of a direction field on a surface immersed in R³:
/// component of `∇_V V` g-orthogonal to `V`, normalized.
fn geodesy_residual(
    g: &ImmersionField,
    d0: &SmoothMap,
    res: usize,
) -> Result<f64, ConstructionError> {
    let grid = g.chart().grid(&vec![res; 2], 1e-3);
    let mut worst = 0.0f64;
    for x in grid {
        let jet = geometry_jet(g, &x, Backend::Dual)?;
        let cd = crate::geometry::covariant_derivative(g, d0, d0, &x, Backend::Dual)?;
        let v = DVector::from_vec(d0.eval::<f64>(&x));
        let vn = jet.norm(&v);
        let coeff = jet.inner(&v, &cd.value) / (vn * vn);
        let perp = &cd.value - &v * coeff;
        worst = worst.max(jet.norm(&perp) / (1.0 + jet.norm(&cd.value)));
    }
    Ok(worst)
}

/// Cylinder `(x, u) ↦ (g(x), u)` or cone `(x, t, u) ↦ (t·g(x), u)` over a
/// surface chart, with the geodesic field plus the flat (and radial)
/// directions as the distribution.
pub fn build_surface_like(spec: &SurfaceLikeSpec) -> Result<Construction, ConstructionError> {
    let n = spec.n;
    let (chart, map, mut generators_idx) = match spec.kind {
        SurfaceKind::Cylindrical => {
            assert_eq!(spec.g.codomain_dim(), 3, "cylindrical base lives in R^3");
            assert!(n >= 2);
            let g_imm = ImmersionField::new(spec.g.clone());
            let res = geodesy_residual(&g_imm, &spec.d0, 7)?;
            if res > 1e-5 {
                return Err(ConstructionError::NotGeodesic { residual: res });
            }
            let mut lo = spec.g.chart().lo.clone();
            let mut hi = spec.g.chart().hi.clone();
            lo.extend(std::iter::repeat(spec.factor_range.0).take(n - 2));
            hi.extend(std::iter::repeat(spec.factor_range.1).take(n - 2));
            let chart = ChartBox::new(lo, hi);
            let map = SmoothMap::new(n + 1, chart.clone(), CylinderMap { g: spec.g.clone() });
            (chart, map, (2..n).collect::<Vec<_>>())
        }
        SurfaceKind::Conical => {
            assert_eq!(spec.g.codomain_dim(), 4, "cone base lives in the sphere in R^4");
            assert!(n >= 3);
            assert!(spec.t_range.0 > 0.0, "cone parameter must stay positive");
            let grid = spec.g.chart().grid(&[7, 7], 1e-3);
            let mut dev = 0.0f64;
            for x in &grid {
                let v = spec.g.eval::<f64>(x);
                let norm: f64 = v.iter().map(|c| c * c).sum::<f64>().sqrt();
                dev = dev.max((norm - 1.0).abs());
            }
            if dev > 1e-8 {
                return Err(ConstructionError::NotSpherical { deviation: dev });
            }
            let mut lo = spec.g.chart().lo.clone();
            let mut hi = spec.g.chart().hi.clone();
            lo.push(spec.t_range.0);
            hi.push(spec.t_range.1);
            lo.extend(std::iter::repeat(spec.factor_range.0).take(n - 3));
            hi.extend(std::iter::repeat(spec.factor_range.1).take(n - 3));
            let chart = ChartBox::new(lo, hi);
            let map = SmoothMap::new(n + 1, chart.clone(), ConeMap { g: spec.g.clone() });
            (chart, map, (2..n).collect::<Vec<_>>())
        }
    };

    let mut generators = vec![SmoothMap::new(
        n,
        chart.clone(),
        LiftedField {
            inner: spec.d0.clone(),
            total: n,
        },
    )];
    generators.extend(generators_idx.drain(..).map(|i| constant_direction(&chart, i)));

    let built = Construction {
        immersion: ImmersionField::new(map),
        distribution: DistributionField::new(generators),
        rotation: false,
    };

    // the builder re-verifies total geodesy of the assembled distribution
    // rather than trusting its inputs
    let grid = built.immersion.chart().grid(&vec![3; n], 1e-3);
    let mut worst = 0.0f64;
    for x in &grid {
        let (_, res) =
            crate::classify::is_totally_geodesic(&built.immersion, &built.distribution, x, 1e-5)
                .map_err(|e| match e {
                    crate::classify::ClassifyError::Geometry(g) => ConstructionError::Geometry(g),
                    _ => ConstructionError::NotGeodesic { residual: f64::NAN },
                })?;
        worst = worst.max(res);
    }
    if worst > 1e-5 {
        return Err(ConstructionError::NotGeodesic { residual: worst });
    }
    Ok(built)
}

// ---------------------------------------------------------------------------
// surfaces of revolution and their geodesic fields (presets)
// ---------------------------------------------------------------------------

/// `(θ, t) ↦ (r(t) cos θ, r(t) sin θ, t)` with `r(t) = r0 + amp·sin t`.
#[derive(Clone, Copy)]
pub struct RevolutionChart {
    pub r0: f64,
    pub amp: f64,
}

impl RevolutionChart {
    fn radius<S: Scalar>(&self, t: S) -> S {
        S::from_f64(self.r0) + S::from_f64(self.amp) * t.sin()
    }
}

impl ChartMap for RevolutionChart {
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let r = self.radius(x[1]);
        vec![r * x[0].cos(), r * x[0].sin(), x[1]]
    }
}

/// The unit direction field with conserved angular momentum `c` on a
/// [`RevolutionChart`]: its integral curves are exactly the non-meridian
/// geodesics with that momentum, so `∇_V V = 0`.
#[derive(Clone, Copy)]
pub struct ClairautField {
    pub surface: RevolutionChart,
    pub c: f64,
}

impl ChartMap for ClairautField {
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let r = self.surface.radius(x[1]);
        let rp = S::from_f64(self.surface.amp) * x[1].cos();
        let c = S::from_f64(self.c);
        let a = c / (r * r);
        let b = ((S::one() - (c / r) * (c / r)) / (S::one() + rp * rp)).sqrt();
        vec![a, b]
    }
}

pub fn revolution_surface(r0: f64, amp: f64, chart: ChartBox) -> SmoothMap {
    SmoothMap::new(3, chart, RevolutionChart { r0, amp })
}

pub fn clairaut_field(r0: f64, amp: f64, c: f64, chart: ChartBox) -> SmoothMap {
    assert!(
        c.abs() < r0 - amp.abs(),
        "momentum must stay below the waist radius"
    );
    SmoothMap::new(
        2,
        chart,
        ClairautField {
            surface: RevolutionChart { r0, amp },
            c,
        },
    )
}

/// Integral curve of the momentum-`c` field through `seed`, as a spline over
/// the flow parameter.
pub fn clairaut_leaf(
    r0: f64,
    amp: f64,
    c: f64,
    seed: [f64; 2],
    tau_range: (f64, f64),
    step: f64,
) -> VectorSpline {
    let field = ClairautField {
        surface: RevolutionChart { r0, amp },
        c,
    };
    let rhs = |x: [f64; 2]| {
        let v = field.eval(&[x[0], x[1]]);
        [v[0], v[1]]
    };
    let steps = ((tau_range.1 - tau_range.0) / step).round().max(1.0) as usize;
    let h = (tau_range.1 - tau_range.0) / steps as f64;
    let mut x = seed;
    let mut values = Vec::with_capacity(steps + 1);
    let mut derivs = Vec::with_capacity(steps + 1);
    values.push(x.to_vec());
    derivs.push(rhs(x).to_vec());
    for _ in 0..steps {
        let k1 = rhs(x);
        let k2 = rhs([x[0] + 0.5 * h * k1[0], x[1] + 0.5 * h * k1[1]]);
        let k3 = rhs([x[0] + 0.5 * h * k2[0], x[1] + 0.5 * h * k2[1]]);
        let k4 = rhs([x[0] + h * k3[0], x[1] + h * k3[1]]);
        x = [
            x[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
            x[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        ];
        values.push(x.to_vec());
        derivs.push(rhs(x).to_vec());
    }
    VectorSpline::new(tau_range.0, h, values, derivs)
}

/// Flat chart of the Clifford torus in the unit sphere of R⁴.
pub struct CliffordTorus;

impl ChartMap for CliffordTorus {
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let w = S::from_f64(1.0 / 2.0f64.sqrt());
        vec![w * x[0].cos(), w * x[0].sin(), w * x[1].cos(), w * x[1].sin()]
    }
}

pub fn clifford_torus(chart: ChartBox) -> SmoothMap {
    SmoothMap::new(4, chart, CliffordTorus)
}

/// Chart of a totally geodesic 2-sphere inside the unit sphere of R⁴.
pub struct GreatSphere;

impl ChartMap for GreatSphere {
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        vec![
            x[0].cos() * x[1].cos(),
            x[0].cos() * x[1].sin(),
            x[0].sin(),
            S::zero(),
        ]
    }
}

pub fn great_sphere(chart: ChartBox) -> SmoothMap {
    SmoothMap::new(4, chart, GreatSphere)
}

// ---------------------------------------------------------------------------
// flat envelope along a leaf
// ---------------------------------------------------------------------------

/// A leaf of the distribution on a coupled-case base, with everything needed
/// to extend the hypersurface by the envelope line field.
#[derive(Clone)]
pub struct EnvelopeLeafSpec {
    pub base: ImmersionField,
    pub distribution: DistributionField,
    /// Chart coordinate seeding the direction transverse to the distribution.
    pub gauge_y: usize,
    /// Chart of the leaf: an `(n−1)`-chart into the base chart box.
    pub leaf: SmoothMap,
    /// Leaf coordinates tangent to the relative-nullity factor.
    pub nullity_coords: Vec<usize>,
    pub s_range: (f64, f64),
}

struct EnvelopeMap {
    base: ImmersionField,
    distribution: DistributionField,
    gauge_y: usize,
    leaf: SmoothMap,
}

impl ChartMap for EnvelopeMap {
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let k = self.leaf.domain_dim();
        let sigma = self.leaf.eval(&x[..k]);
        let frame = case_iii_frame_s(&self.base, &self.distribution, self.gauge_y, &sigma);
        let z = frame.envelope_direction();
        let zn = dot_s(&z, &z).sqrt();
        let s = x[k];
        frame
            .data
            .value
            .iter()
            .zip(&z)
            .map(|(&f, &zi)| f + s * zi / zn)
            .collect()
    }
}

/// The built envelope together with the spec it came from.
#[derive(Clone)]
pub struct FlatEnvelope {
    pub immersion: ImmersionField,
    pub spec: EnvelopeLeafSpec,
}

/// Extend the base along the envelope line field over the leaf:
/// `F(x, s) = f(σ(x)) + s·Z(σ(x))/|Z|` with `Z = ρ f_*Y − μ f_*X`.
pub fn build_flat_envelope(spec: &EnvelopeLeafSpec) -> Result<FlatEnvelope, ConstructionError> {
    let k = spec.leaf.domain_dim();
    let leaf_grid = spec.leaf.chart().grid(&vec![5; k], 1e-3);
    for x in &leaf_grid {
        let sigma = spec.leaf.eval::<f64>(x);
        let frame =
            case_iii_frame_s::<f64>(&spec.base, &spec.distribution, spec.gauge_y, &sigma);
        if frame.mu.abs() < 1e-6 || frame.rho.abs() < 1e-6 {
            return Err(ConstructionError::NotCoupled {
                point: sigma,
                mu: frame.mu,
                rho: frame.rho,
            });
        }
    }

    let mut lo = spec.leaf.chart().lo.clone();
    let mut hi = spec.leaf.chart().hi.clone();
    lo.push(spec.s_range.0);
    hi.push(spec.s_range.1);
    let full_chart = ChartBox::new(lo.clone(), hi.clone());
    let map = SmoothMap::new(
        spec.base.ambient_dim(),
        full_chart,
        EnvelopeMap {
            base: spec.base.clone(),
            distribution: spec.distribution.clone(),
            gauge_y: spec.gauge_y,
            leaf: spec.leaf.clone(),
        },
    );

    // shrink the fiber interval until the chart stays immersed everywhere
    let mut scale = 1.0;
    loop {
        let (s0, s1) = (spec.s_range.0 * scale, spec.s_range.1 * scale);
        lo[k] = s0;
        hi[k] = s1;
        let candidate = map.with_chart(ChartBox::new(lo.clone(), hi.clone()));
        let bad = degenerate_samples(&candidate, 4, 1e-6)?;
        if bad.is_empty() {
            return Ok(FlatEnvelope {
                immersion: ImmersionField::new(candidate),
                spec: spec.clone(),
            });
        }
        scale *= 0.5;
        if scale < 1e-3 {
            return Err(ConstructionError::TubeWidth);
        }
    }
}

/// Residuals of the envelope's defining properties over an interior grid.
#[derive(Clone, Debug, Serialize)]
pub struct EnvelopeChecks {
    /// Worst `|⟨f_*X, η_F⟩| / |f_*X|`: the base frame direction stays tangent.
    pub tangency: f64,
    /// Worst mismatch of the pushforward along the nullity factor.
    pub nullity_agreement: f64,
    /// Worst `σ_2(A) / max(σ_1(A), 1)`: rank of the shape operator ≤ 1.
    pub flatness: f64,
    /// Largest principal angle (radians) between the tangent spaces of the
    /// envelope and the base along the zero section.
    pub leaf_angle: f64,
}

pub fn verify_flat_envelope(
    env: &FlatEnvelope,
    res: usize,
    backend: Backend,
) -> Result<EnvelopeChecks, ConstructionError> {
    let f = &env.immersion;
    let spec = &env.spec;
    let n = f.dim();
    let amb = f.ambient_dim();
    let k = n - 1;
    let grid = f.chart().grid(&vec![res; n], 1e-3);
    let mut tangency = 0.0f64;
    let mut nullity_agreement = 0.0f64;
    let mut flatness = 0.0f64;
    for x in &grid {
        let jet = geometry_jet(f, x, backend)?;
        let sv = jet.shape_symmetrized().svd(false, false).singular_values;
        let mut s: Vec<f64> = sv.iter().cloned().collect();
        s.sort_by(|a, b| b.partial_cmp(a).unwrap());
        flatness = flatness.max(s[1] / s[0].max(1.0));

        let sigma = spec.leaf.eval::<f64>(&x[..k]);
        let frame =
            case_iii_frame_s::<f64>(&spec.base, &spec.distribution, spec.gauge_y, &sigma);
        let fx = frame.push(&frame.x);
        let fx_norm = dot_s(&fx, &fx).sqrt();
        let dot: f64 = fx.iter().zip(jet.eta.iter()).map(|(a, b)| a * b).sum();
        tangency = tangency.max(dot.abs() / fx_norm);

        // pushforward along the nullity factor must be s-independent
        let leaf_jet = numjet::eval_jet(&spec.leaf, &x[..k], 1, backend)?;
        for &j in &spec.nullity_coords {
            let mut base_col = DVector::zeros(amb);
            for c in 0..amb {
                for i in 0..spec.base.dim() {
                    base_col[c] += frame.data.jac[c][i] * leaf_jet.first[(i, j)];
                }
            }
            let env_col = jet.jacobian.column(j).into_owned();
            nullity_agreement = nullity_agreement
                .max((env_col - &base_col).norm() / (1.0 + base_col.norm()));
        }
    }

    // tangency of the whole tangent spaces along the zero section
    let mut leaf_angle = 0.0f64;
    for x in spec.leaf.chart().grid(&vec![res; k], 1e-3) {
        let mut at = x.clone();
        at.push(0.0);
        let env_jet = numjet::eval_jet(f.map(), &at, 1, Backend::Dual)?;
        let sigma = spec.leaf.eval::<f64>(&x);
        let base_jet = numjet::eval_jet(spec.base.map(), &sigma, 1, Backend::Dual)?;
        let q_env = orthonormal_columns(&env_jet.first);
        let q_base = orthonormal_columns(&base_jet.first);
        let overlap = q_env.transpose() * q_base;
        let sv = overlap.svd(false, false).singular_values;
        let cos_min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
        leaf_angle = leaf_angle.max(cos_min.clamp(-1.0, 1.0).acos());
    }

    Ok(EnvelopeChecks {
        tangency,
        nullity_agreement,
        flatness,
        leaf_angle,
    })
}

fn orthonormal_columns(m: &DMatrix<f64>) -> DMatrix<f64> {
    let qr = m.clone().qr();
    qr.q()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify;
    use crate::curves::{line_curve, parallel_normal_frame};
    use crate::geometry::relative_nullity;

    struct ProfileCircle {
        r: f64,
    }
    impl ChartMap for ProfileCircle {
        fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
            let r = S::from_f64(self.r);
            vec![r * x[0].cos(), r * x[0].sin()]
        }
    }

    struct SphereAngles {
        c0: f64,
        r: f64,
    }
    impl ChartMap for SphereAngles {
        fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
            let r = S::from_f64(self.r);
            vec![
                S::from_f64(self.c0) + r * x[0].cos() * x[1].cos(),
                r * x[0].sin() * x[1].cos(),
                r * x[1].sin(),
            ]
        }
    }

    struct Segment;
    impl ChartMap for Segment {
        fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
            vec![S::from_f64(0.5), x[0]]
        }
    }

    #[test]
    fn torus_principal_curvatures() {
        let (r, big_r) = (0.5, 2.0);
        let profile = SmoothMap::new(
            2,
            ChartBox::new(vec![-3.0], vec![3.0]),
            ProfileCircle { r },
        );
        let torus = build_rotation_hypersurface(&profile, big_r).unwrap();
        assert!(torus.rotation);
        // outer equator: profile angle 0, any s
        let jet = geometry_jet(&torus.immersion, &[0.0, 1.3], Backend::Dual).unwrap();
        let mut ks: Vec<f64> = jet.principal_curvatures().iter().map(|k| k.abs()).collect();
        ks.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((ks[0] - 1.0 / (big_r + r)).abs() < 1e-5, "outer {}", ks[0]);
        assert!((ks[1] - 1.0 / r).abs() < 1e-5, "profile {}", ks[1]);
        // toward the inner equator: cos θ/(R + r cos θ)
        let jet = geometry_jet(&torus.immersion, &[2.9, 1.3], Backend::Dual).unwrap();
        let theta: f64 = 2.9;
        let expect = (theta.cos() / (big_r + r * theta.cos())).abs();
        let mut ks: Vec<f64> = jet.principal_curvatures().iter().map(|k| k.abs()).collect();
        ks.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((ks[0] - expect).abs() < 1e-5);
    }

    #[test]
    fn rotation_sphere_fiber_curvatures() {
        // fiber sphere S²(r) centered at (c0, 0, 0), rotated at radius R
        let (c0, r, big_r) = (0.3, 0.5, 2.0);
        let profile = SmoothMap::new(
            3,
            ChartBox::centered(2, 0.4),
            SphereAngles { c0, r },
        );
        let built = build_rotation_hypersurface(&profile, big_r).unwrap();
        let jet = geometry_jet(&built.immersion, &[0.0, 0.0, 2.0], Backend::Dual).unwrap();
        let mut ks: Vec<f64> = jet.principal_curvatures().iter().map(|k| k.abs()).collect();
        ks.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let parallel = 1.0 / (big_r + c0 + r);
        assert!((ks[0] - parallel).abs() < 1e-4, "parallel {} vs {parallel}", ks[0]);
        assert!((ks[1] - 1.0 / r).abs() < 1e-4);
        assert!((ks[2] - 1.0 / r).abs() < 1e-4);
    }

    #[test]
    fn flat_tube_over_line() {
        let line = line_curve(
            &DVector::zeros(3),
            &DVector::from_vec(vec![1.0, 0.0, 0.0]),
            (0.0, 2.0),
            1e-3,
        );
        let init = vec![
            DVector::from_vec(vec![0.0, 1.0, 0.0]),
            DVector::from_vec(vec![0.0, 0.0, 1.0]),
        ];
        let frame = parallel_normal_frame(&line, &init).unwrap();
        let f0 = SmoothMap::new(2, ChartBox::new(vec![-1.0], vec![1.0]), Segment);
        let spec = PartialTubeSpec::new(frame, f0).without_substantial_check();
        let built = build_partial_tube(&spec).unwrap();
        let jet = geometry_jet(&built.immersion, &[0.2, 1.0], Backend::Dual).unwrap();
        assert!(jet.shape_norm() < 1e-8, "flat tube must have A = 0");
    }

    #[test]
    fn substantial_check_rejects_hyperplane_fiber() {
        let line = line_curve(
            &DVector::zeros(3),
            &DVector::from_vec(vec![1.0, 0.0, 0.0]),
            (0.0, 2.0),
            1e-3,
        );
        let init = vec![
            DVector::from_vec(vec![0.0, 1.0, 0.0]),
            DVector::from_vec(vec![0.0, 0.0, 1.0]),
        ];
        let frame = parallel_normal_frame(&line, &init).unwrap();
        let f0 = SmoothMap::new(2, ChartBox::new(vec![-1.0], vec![1.0]), Segment);
        assert!(matches!(
            build_partial_tube(&PartialTubeSpec::new(frame, f0)),
            Err(ConstructionError::NotSubstantial { .. })
        ));
    }

    #[test]
    fn inadmissible_fiber_is_rejected() {
        // profile circle that reaches the rotation axis: y_1 = −R at angle π
        let profile = SmoothMap::new(
            2,
            ChartBox::new(vec![-3.2], vec![3.2]),
            ProfileCircle { r: 2.5 },
        );
        assert!(matches!(
            build_rotation_hypersurface(&profile, 2.0),
            Err(ConstructionError::AxisTouch { .. })
        ));
    }

    fn generic_tube() -> Construction {
        // synthesized base curve in R³ with curvature and torsion, fiber a
        // small planar circle in the normal bundle
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
        let init = vec![e[1].clone(), e[2].clone()];
        let frame = parallel_normal_frame(&mf.curve, &init).unwrap();
        let f0 = SmoothMap::new(
            2,
            ChartBox::new(vec![-3.0], vec![3.0]),
            ProfileCircle { r: 0.4 },
        );
        build_partial_tube(&PartialTubeSpec::new(frame, f0)).unwrap()
    }

    #[test]
    fn tube_kills_fiber_curve_coupling() {
        let built = generic_tube();
        let worst = tube_coupling_residual(&built, 10, Backend::Dual).unwrap();
        assert!(worst <= 1e-6, "coupling {worst}");
    }

    #[test]
    fn tube_fibers_are_isometric_across_s() {
        let built = generic_tube();
        let drift = fiber_metric_drift(&built, 6).unwrap();
        assert!(drift <= 1e-6, "drift {drift}");
    }

    #[test]
    fn tube_fibers_are_totally_geodesic() {
        let built = generic_tube();
        for x in built.immersion.chart().grid(&[4, 4], 1e-3) {
            let (ok, res) =
                classify::is_totally_geodesic(&built.immersion, &built.distribution, &x, 1e-5)
                    .unwrap();
            assert!(ok, "residual {res} at {x:?}");
        }
    }

    fn ramp_kappas() -> Vec<ScalarFn1d> {
        vec![
            ScalarFn1d::Const { value: 1.0 },
            ScalarFn1d::SmoothRamp { amp: 1.0, scale: 1.0 },
            ScalarFn1d::SmoothRamp { amp: 1.0, scale: 1.0 },
        ]
    }

    #[test]
    fn ruled_example_base_curve_and_rulings() {
        let built = build_ruled_example(&ramp_kappas(), (-1.5, 1.5), 0.3).unwrap();
        // t = 0 slice recovers the base curve: compare against a directly
        // synthesized copy
        let e: Vec<DVector<f64>> = (0..4)
            .map(|i| {
                let mut v = DVector::zeros(4);
                v[i] = 1.0;
                v
            })
            .collect();
        let mf =
            curve_from_curvatures(&ramp_kappas(), &e, &DVector::zeros(4), (-1.5, 1.5), 1e-3)
                .unwrap();
        for s in [-1.0, 0.4, 1.2] {
            let on_ruled = built.immersion.map().eval::<f64>(&[s, 0.0, 0.0]);
            let direct = mf.curve.point(s);
            let diff: f64 = on_ruled
                .iter()
                .zip(direct.iter())
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt();
            assert!(diff < 1e-12);
        }
        // rulings are affine: h restricted to them vanishes
        for x in built.immersion.chart().grid(&[4, 3, 3], 1e-3) {
            let jet = geometry_jet(&built.immersion, &x, Backend::Dual).unwrap();
            for i in 1..3 {
                for j in 1..3 {
                    assert!(jet.h[(i, j)].abs() < 1e-6, "h[{i}{j}] at {x:?}");
                }
            }
        }
    }

    #[test]
    fn ruled_example_dichotomy() {
        let built = build_ruled_example(&ramp_kappas(), (-1.5, 1.5), 0.3).unwrap();
        // s < 0: the curve is planar and the chart splits off a flat factor —
        // no coupling between ∂_s and the rulings
        for s in [-1.2, -0.6] {
            let jet = geometry_jet(&built.immersion, &[s, 0.05, -0.05], Backend::Dual).unwrap();
            for j in 1..3 {
                assert!(jet.h[(0, j)].abs() < 1e-6, "coupling at s={s}");
            }
        }
        // s > 0: some ruling couples to ∂_s
        let jet = geometry_jet(&built.immersion, &[1.0, 0.05, -0.05], Backend::Dual).unwrap();
        let max_coupling = (1..3).map(|j| jet.h[(0, j)].abs()).fold(0.0, f64::max);
        assert!(max_coupling >= 1e-3, "coupling {max_coupling}");
    }

    fn revolution_spec() -> SurfaceLikeSpec {
        let chart = ChartBox::new(vec![-1.0, -1.0], vec![1.0, 1.0]);
        SurfaceLikeSpec {
            g: revolution_surface(2.0, 0.3, chart.clone()),
            d0: clairaut_field(2.0, 0.3, 1.0, chart),
            kind: SurfaceKind::Cylindrical,
            n: 3,
            factor_range: (-1.0, 1.0),
            t_range: (0.0, 0.0),
        }
    }

    #[test]
    fn cylindrical_surface_like_builds_and_is_coupled() {
        let built = build_surface_like(&revolution_spec()).unwrap();
        // the geodesic direction is neither principal nor asymptotic: the
        // nullity contains exactly the flat factor, and A𝒟 leaves 𝒟
        let x = [0.2, 0.1, 0.0];
        let jet = geometry_jet(&built.immersion, &x, Backend::Dual).unwrap();
        let (nullity, rank) = relative_nullity(&jet, 1e-6);
        assert_eq!(rank, 2);
        assert_eq!(nullity.dim(), 1);
        let frame = case_iii_frame_s::<f64>(
            &built.immersion,
            &built.distribution,
            0,
            &x,
        );
        assert!(frame.mu.abs() > 1e-3, "mu {}", frame.mu);
        assert!(frame.rho.abs() > 1e-3, "rho {}", frame.rho);
    }

    #[test]
    fn non_geodesic_field_is_rejected() {
        let mut spec = revolution_spec();
        // a constant coordinate field follows parallels, which are not
        // geodesics on this surface
        spec.d0 = SmoothMap::new(
            2,
            spec.g.chart().clone(),
            ConstantMap(vec![1.0, 0.0]),
        );
        assert!(matches!(
            build_surface_like(&spec),
            Err(ConstructionError::NotGeodesic { .. })
        ));
    }

    #[test]
    fn cone_over_great_sphere_is_flat() {
        let chart = ChartBox::new(vec![-0.6, -0.6], vec![0.6, 0.6]);
        let spec = SurfaceLikeSpec {
            g: great_sphere(chart.clone()),
            d0: SmoothMap::new(2, chart, ConstantMap(vec![1.0, 0.0])),
            kind: SurfaceKind::Conical,
            n: 3,
            factor_range: (0.0, 0.0),
            t_range: (0.5, 1.5),
        };
        let built = build_surface_like(&spec).unwrap();
        for x in built.immersion.chart().grid(&[3, 3, 3], 1e-3) {
            let jet = geometry_jet(&built.immersion, &x, Backend::Dual).unwrap();
            let sv = jet.shape_symmetrized().svd(false, false).singular_values;
            let mut s: Vec<f64> = sv.iter().cloned().collect();
            s.sort_by(|a, b| b.partial_cmp(a).unwrap());
            assert!(s[1] / s[0].max(1e-12).max(1.0) <= 1e-5);
            assert!(s[0] < 1e-8, "cone over a great sphere is a hyperplane");
        }
    }

    #[test]
    fn cone_requires_spherical_base() {
        let chart = ChartBox::new(vec![-0.6, -0.6], vec![0.6, 0.6]);
        struct NotSphere;
        impl ChartMap for NotSphere {
            fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
                vec![x[0], x[1], S::one(), S::zero()]
            }
        }
        let spec = SurfaceLikeSpec {
            g: SmoothMap::new(4, chart.clone(), NotSphere),
            d0: SmoothMap::new(2, chart, ConstantMap(vec![1.0, 0.0])),
            kind: SurfaceKind::Conical,
            n: 3,
            factor_range: (0.0, 0.0),
            t_range: (0.5, 1.5),
        };
        assert!(matches!(
            build_surface_like(&spec),
            Err(ConstructionError::NotSpherical { .. })
        ));
    }

    fn envelope_over_revolution() -> FlatEnvelope {
        let built = build_surface_like(&revolution_spec()).unwrap();
        let leaf_spline = clairaut_leaf(2.0, 0.3, 1.0, [0.0, 0.0], (-0.4, 0.4), 1e-3);
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
        let leaf = SmoothMap::new(
            3,
            ChartBox::new(vec![-0.4, -0.8], vec![0.4, 0.8]),
            LeafMap { spline: leaf_spline },
        );
        build_flat_envelope(&EnvelopeLeafSpec {
            base: built.immersion,
            distribution: built.distribution,
            gauge_y: 0,
            leaf,
            nullity_coords: vec![1],
            s_range: (-0.15, 0.15),
        })
        .unwrap()
    }

    #[test]
    fn envelope_zero_section_is_the_base() {
        let env = envelope_over_revolution();
        for tau in [-0.3, 0.0, 0.25] {
            let on_env = env.immersion.map().eval::<f64>(&[tau, 0.3, 0.0]);
            let sigma = env.spec.leaf.eval::<f64>(&[tau, 0.3]);
            let on_base = env.spec.base.map().eval::<f64>(&sigma);
            let diff: f64 = on_env
                .iter()
                .zip(&on_base)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt();
            assert!(diff < 1e-12, "zero section must coincide with the base");
        }
    }

    #[test]
    fn envelope_is_flat_and_tangent() {
        let env = envelope_over_revolution();
        let checks = verify_flat_envelope(&env, 3, Backend::Dual).unwrap();
        assert!(checks.flatness <= 1e-4, "flatness {}", checks.flatness);
        assert!(checks.tangency <= 1e-5, "tangency {}", checks.tangency);
        assert!(
            checks.nullity_agreement <= 1e-5,
            "nullity {}",
            checks.nullity_agreement
        );
        assert!(checks.leaf_angle <= 1e-5, "angle {}", checks.leaf_angle);
    }

    #[test]
    fn envelope_rejects_uncoupled_base() {
        // a torus of revolution has μ = 0 for the rotation distribution
        let profile = SmoothMap::new(
            2,
            ChartBox::new(vec![-3.0], vec![3.0]),
            ProfileCircle { r: 0.5 },
        );
        let torus = build_rotation_hypersurface(&profile, 2.0).unwrap();
        struct IdLeaf;
        impl ChartMap for IdLeaf {
            fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
                vec![x[0], S::from_f64(3.0)]
            }
        }
        let leaf = SmoothMap::new(2, ChartBox::new(vec![-1.0], vec![1.0]), IdLeaf);
        let spec = EnvelopeLeafSpec {
            base: torus.immersion,
            distribution: torus.distribution,
            gauge_y: 1,
            leaf,
            nullity_coords: vec![],
            s_range: (-0.1, 0.1),
        };
        assert!(matches!(
            build_flat_envelope(&spec),
            Err(ConstructionError::NotCoupled { .. })
        ));
    }
}
