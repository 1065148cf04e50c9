//! Batch front end: read a JSON run config, build the requested
//! hypersurface, sweep the verification suites over a chart grid, and write
//! a versioned JSON report plus an optional OBJ mesh.
//!
//! The config format is versioned (`"version": 1`) and restricted to a safe
//! preset algebra for curvature functions — no embedded interpreter. Reports
//! echo the full config so every tolerance decision stays auditable.

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::{
    adapted_frame, classify_point, is_curvature_invariant, is_totally_geodesic,
    residual_suite, ClassifyError, PointClass, PREDICATE_TOL, SUITE_TOL,
};
use crate::constructions::{
    build_flat_envelope, build_partial_tube, build_rotation_hypersurface, build_ruled_example,
    build_surface_like, clairaut_field, clairaut_leaf, clifford_torus, great_sphere,
    revolution_surface, tube_coupling_residual, verify_flat_envelope, Construction,
    ConstructionError, EnvelopeLeafSpec, FlatEnvelope, PartialTubeSpec, SurfaceKind,
    SurfaceLikeSpec,
};
use crate::curves::{
    circle_radial_frame, curve_from_curvatures, line_curve, parallel_normal_frame, ScalarFn1d,
    VectorSpline,
};
use crate::geometry::ImmersionField;
use crate::numjet::{Backend, ChartBox, ChartMap, ConstantMap, Scalar, SmoothMap};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Build(#[from] ConstructionError),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error(transparent)]
    Curve(#[from] crate::curves::CurveError),
}

// ---------------------------------------------------------------------------
// config schema
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendChoice {
    Dual,
    Fd,
}

impl BackendChoice {
    pub fn to_backend(self) -> Backend {
        match self {
            BackendChoice::Dual => Backend::Dual,
            BackendChoice::Fd => Backend::FiniteDiff,
        }
    }
}

/// Verification suites; unknown names fail at parse time.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuiteName {
    Classify,
    TotallyGeodesic,
    CurvatureInvariant,
    #[serde(rename = "residuals_7_11")]
    Residuals7_11,
    EnvelopeChecks,
    PartialTubeEq3,
}

impl SuiteName {
    fn key(self) -> &'static str {
        match self {
            SuiteName::Classify => "classify",
            SuiteName::TotallyGeodesic => "totally_geodesic",
            SuiteName::CurvatureInvariant => "curvature_invariant",
            SuiteName::Residuals7_11 => "residuals_7_11",
            SuiteName::EnvelopeChecks => "envelope_checks",
            SuiteName::PartialTubeEq3 => "partial_tube_eq3",
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl ChartSpec {
    fn to_box(&self) -> Result<ChartBox, CliError> {
        if self.lo.is_empty() || self.lo.len() != self.hi.len() {
            return Err(CliError::Config("chart box must be nonempty".into()));
        }
        for (a, b) in self.lo.iter().zip(&self.hi) {
            if !(a < b) {
                return Err(CliError::Config(format!(
                    "chart box interval [{a}, {b}] is empty"
                )));
            }
        }
        Ok(ChartBox::new(self.lo.clone(), self.hi.clone()))
    }
}

/// Base curve of a partial tube, with its parallel normal frame seeded on
/// the coordinate axes.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum BaseCurve {
    Line { dim: usize, length: f64 },
    Circle { radius: f64, dim: usize },
    Synthesized { kappas: Vec<ScalarFn1d>, s_range: (f64, f64) },
}

/// Fiber / profile immersion presets.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Profile {
    /// Circle of the given radius about `center` in the first two fiber
    /// coordinates; `center.len()` fixes the fiber dimension.
    Circle {
        radius: f64,
        center: Vec<f64>,
        angle_range: (f64, f64),
    },
    /// Sphere of the given radius about `center` in the first three fiber
    /// coordinates, in latitude/longitude angles.
    Sphere {
        radius: f64,
        center: Vec<f64>,
        angle_half: f64,
    },
}

struct ProfileCircleMap {
    radius: f64,
    center: Vec<f64>,
}

impl ChartMap for ProfileCircleMap {
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let r = S::from_f64(self.radius);
        let mut out: Vec<S> = self.center.iter().map(|&c| S::from_f64(c)).collect();
        out[0] = out[0] + r * x[0].cos();
        out[1] = out[1] + r * x[0].sin();
        out
    }
}

struct ProfileSphereMap {
    radius: f64,
    center: Vec<f64>,
}

impl ChartMap for ProfileSphereMap {
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let r = S::from_f64(self.radius);
        let mut out: Vec<S> = self.center.iter().map(|&c| S::from_f64(c)).collect();
        out[0] = out[0] + r * x[0].cos() * x[1].cos();
        out[1] = out[1] + r * x[0].sin() * x[1].cos();
        out[2] = out[2] + r * x[1].sin();
        out
    }
}

impl Profile {
    fn to_map(&self) -> Result<SmoothMap, CliError> {
        match self {
            Profile::Circle {
                radius,
                center,
                angle_range,
            } => {
                if center.len() < 2 {
                    return Err(CliError::Config(
                        "profile circle needs at least two fiber coordinates".into(),
                    ));
                }
                if !(angle_range.0 < angle_range.1) {
                    return Err(CliError::Config("empty profile angle range".into()));
                }
                Ok(SmoothMap::new(
                    center.len(),
                    ChartBox::new(vec![angle_range.0], vec![angle_range.1]),
                    ProfileCircleMap {
                        radius: *radius,
                        center: center.clone(),
                    },
                ))
            }
            Profile::Sphere {
                radius,
                center,
                angle_half,
            } => {
                if center.len() < 3 {
                    return Err(CliError::Config(
                        "profile sphere needs at least three fiber coordinates".into(),
                    ));
                }
                if *angle_half <= 0.0 {
                    return Err(CliError::Config("empty profile angle range".into()));
                }
                Ok(SmoothMap::new(
                    center.len(),
                    ChartBox::centered(2, *angle_half),
                    ProfileSphereMap {
                        radius: *radius,
                        center: center.clone(),
                    },
                ))
            }
        }
    }

    fn fiber_dim(&self) -> usize {
        match self {
            Profile::Circle { center, .. } | Profile::Sphere { center, .. } => center.len(),
        }
    }
}

/// Base of a conical surface-like chart: a preset surface in the unit
/// sphere of R⁴.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConeBase {
    GreatSphere,
    CliffordTorus,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ConstructionConfig {
    PartialTube {
        base: BaseCurve,
        fiber: Profile,
        #[serde(default = "default_true")]
        substantial: bool,
    },
    Rotation {
        profile: Profile,
        radius: f64,
    },
    RuledExample {
        kappas: Vec<ScalarFn1d>,
        s_range: (f64, f64),
        t_half: f64,
    },
    /// `g × R^{n−2}` over a surface of revolution carrying the conserved-
    /// momentum geodesic field.
    SurfaceLikeCylindrical {
        r0: f64,
        amp: f64,
        momentum: f64,
        chart: ChartSpec,
        n: usize,
        factor_range: (f64, f64),
    },
    SurfaceLikeConical {
        base: ConeBase,
        d0: [f64; 2],
        chart: ChartSpec,
        n: usize,
        t_range: (f64, f64),
        factor_range: (f64, f64),
    },
    /// Envelope of tangent spaces along a geodesic leaf of the cylindrical
    /// revolution chart.
    FlatEnvelope {
        r0: f64,
        amp: f64,
        momentum: f64,
        chart: ChartSpec,
        seed: [f64; 2],
        leaf_tau: (f64, f64),
        leaf_u: f64,
        s_range: (f64, f64),
    },
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub predicate: Option<f64>,
    pub suite: Option<f64>,
    /// Frame-equation residual bound for the adapted frame.
    pub frame: Option<f64>,
    /// Partial-tube coupling bound (already normalized by `1 + ‖A‖`).
    pub coupling: Option<f64>,
    pub envelope_flatness: Option<f64>,
    pub envelope_tangency: Option<f64>,
}

impl Tolerances {
    pub fn predicate(&self) -> f64 {
        self.predicate.unwrap_or(PREDICATE_TOL)
    }
    pub fn suite(&self) -> f64 {
        self.suite.unwrap_or(SUITE_TOL)
    }
    pub fn frame(&self) -> f64 {
        self.frame.unwrap_or(1e-4)
    }
    pub fn coupling(&self) -> f64 {
        self.coupling.unwrap_or(1e-6)
    }
    pub fn envelope_flatness(&self) -> f64 {
        self.envelope_flatness.unwrap_or(1e-4)
    }
    pub fn envelope_tangency(&self) -> f64 {
        self.envelope_tangency.unwrap_or(1e-5)
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub report: Option<PathBuf>,
    pub mesh: Option<PathBuf>,
    pub mesh_res: Option<[usize; 2]>,
    /// Close the mesh periodically along each of the two sampled axes.
    pub mesh_wrap: Option<[bool; 2]>,
    /// Fixed values for chart axes beyond the two sampled ones (defaults to
    /// the chart center).
    pub mesh_slice: Option<Vec<f64>>,
    /// Three ambient axes to project onto; required when the ambient
    /// dimension exceeds three.
    pub projection: Option<[usize; 3]>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    pub construction: ConstructionConfig,
    #[serde(default)]
    pub verify: Vec<SuiteName>,
    /// Per-axis grid resolution for the verification sweep; a single entry
    /// broadcasts to every chart axis.
    #[serde(default)]
    pub grid_res: Vec<usize>,
    /// Absolute margin (chart units) kept from the chart boundary.
    #[serde(default = "default_margin")]
    pub grid_margin: f64,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub backend: Option<BackendChoice>,
    #[serde(default)]
    pub output: OutputSpec,
}

fn default_margin() -> f64 {
    0.05
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.version != 1 {
            return Err(CliError::Config(format!(
                "unsupported config version {}",
                self.version
            )));
        }
        for &r in &self.grid_res {
            if r < 2 {
                return Err(CliError::Config(format!(
                    "grid resolution {r} < 2 per axis"
                )));
            }
        }
        if self.grid_margin <= 0.0 {
            return Err(CliError::Config("grid margin must be positive".into()));
        }
        let envelope = matches!(self.construction, ConstructionConfig::FlatEnvelope { .. });
        for s in &self.verify {
            match s {
                SuiteName::EnvelopeChecks if !envelope => {
                    return Err(CliError::Config(
                        "envelope_checks only applies to flat_envelope configs".into(),
                    ));
                }
                SuiteName::PartialTubeEq3
                    if !matches!(
                        self.construction,
                        ConstructionConfig::PartialTube { .. }
                            | ConstructionConfig::Rotation { .. }
                    ) =>
                {
                    return Err(CliError::Config(
                        "partial_tube_eq3 only applies to partial tubes and rotations".into(),
                    ));
                }
                _ if envelope && *s != SuiteName::EnvelopeChecks => {
                    return Err(CliError::Config(format!(
                        "suite {} does not apply to flat_envelope configs",
                        s.key()
                    )));
                }
                _ => {}
            }
        }
        match &self.construction {
            ConstructionConfig::PartialTube { base, fiber, .. } => {
                let fiber_dim = fiber.fiber_dim();
                let base_dim = match base {
                    BaseCurve::Line { dim, .. } | BaseCurve::Circle { dim, .. } => *dim,
                    BaseCurve::Synthesized { kappas, .. } => kappas.len() + 1,
                };
                if base_dim != fiber_dim + 1 {
                    return Err(CliError::Config(format!(
                        "base curve lives in R^{base_dim} but the fiber needs R^{}",
                        fiber_dim + 1
                    )));
                }
            }
            ConstructionConfig::SurfaceLikeCylindrical {
                r0, amp, momentum, chart, n, ..
            } => {
                chart.to_box()?;
                if chart.lo.len() != 2 {
                    return Err(CliError::Config("surface chart must be 2-dimensional".into()));
                }
                if *n < 2 {
                    return Err(CliError::Config("hypersurface dimension must be >= 2".into()));
                }
                if momentum.abs() >= r0 - amp.abs() {
                    return Err(CliError::Config(
                        "momentum must stay below the waist radius".into(),
                    ));
                }
            }
            ConstructionConfig::SurfaceLikeConical { chart, n, t_range, .. } => {
                chart.to_box()?;
                if chart.lo.len() != 2 {
                    return Err(CliError::Config("surface chart must be 2-dimensional".into()));
                }
                if *n < 3 {
                    return Err(CliError::Config(
                        "conical charts need dimension >= 3".into(),
                    ));
                }
                if !(t_range.0 > 0.0 && t_range.0 < t_range.1) {
                    return Err(CliError::Config("cone parameter range must be positive".into()));
                }
            }
            ConstructionConfig::FlatEnvelope {
                r0, amp, momentum, chart, leaf_tau, leaf_u, ..
            } => {
                chart.to_box()?;
                if momentum.abs() >= r0 - amp.abs() {
                    return Err(CliError::Config(
                        "momentum must stay below the waist radius".into(),
                    ));
                }
                if !(leaf_tau.0 < leaf_tau.1) || *leaf_u <= 0.0 {
                    return Err(CliError::Config("empty leaf chart".into()));
                }
            }
            _ => {}
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// report schema ("report_v1")
// ---------------------------------------------------------------------------

#[derive(Serialize)]
pub struct Provenance {
    pub toolkit_version: &'static str,
    pub backend: &'static str,
    pub wall_time_ms: f64,
}

#[derive(Serialize)]
pub struct PointRecord {
    pub x: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub class: Option<PointClass>,
    pub residuals: BTreeMap<String, f64>,
}

#[derive(Serialize, Default)]
pub struct Summary {
    pub grid_size: usize,
    pub histogram: BTreeMap<String, usize>,
    pub max_residual: BTreeMap<String, f64>,
    pub suite_pass: BTreeMap<String, bool>,
}

#[derive(Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub config: RunConfig,
    pub provenance: Provenance,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub points: Vec<PointRecord>,
    pub summary: Summary,
}

/// Histogram bucket for a set-valued classification. Inclusion cases take
/// precedence when the hyperplane-kernel case co-holds degenerately (a rank-
/// one distribution, or a kernel sitting inside the distribution).
pub fn dominant_label(pc: &PointClass) -> String {
    if pc.flat_point {
        "flat".into()
    } else if pc.ambiguous {
        "ambiguous".into()
    } else if pc.case_i && pc.case_ii {
        "case_i+case_ii".into()
    } else if pc.case_i {
        "case_i".into()
    } else if pc.case_ii {
        "case_ii".into()
    } else {
        "case_iii".into()
    }
}

// ---------------------------------------------------------------------------
// builders
// ---------------------------------------------------------------------------

pub enum BuiltArtifact {
    Dist(Construction),
    Env(FlatEnvelope),
}

impl BuiltArtifact {
    pub fn immersion(&self) -> &ImmersionField {
        match self {
            BuiltArtifact::Dist(c) => &c.immersion,
            BuiltArtifact::Env(e) => &e.immersion,
        }
    }
}

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

pub fn build_construction(cfg: &ConstructionConfig) -> Result<BuiltArtifact, CliError> {
    match cfg {
        ConstructionConfig::PartialTube {
            base,
            fiber,
            substantial,
        } => {
            let f0 = fiber.to_map()?;
            let m = f0.codomain_dim();
            let frame = match base {
                BaseCurve::Line { dim, length } => {
                    let mut dir = DVector::zeros(*dim);
                    dir[0] = 1.0;
                    let curve = line_curve(&DVector::zeros(*dim), &dir, (0.0, *length), 1e-3);
                    let init: Vec<DVector<f64>> = (1..*dim)
                        .map(|i| {
                            let mut v = DVector::zeros(*dim);
                            v[i] = 1.0;
                            v
                        })
                        .collect();
                    parallel_normal_frame(&curve, &init)?
                }
                BaseCurve::Circle { radius, dim } => circle_radial_frame(
                    *radius,
                    *dim,
                    (0.0, 2.0 * std::f64::consts::PI * radius),
                    1e-3,
                ),
                BaseCurve::Synthesized { kappas, s_range } => {
                    let ambient = kappas.len() + 1;
                    let e: Vec<DVector<f64>> = (0..ambient)
                        .map(|i| {
                            let mut v = DVector::zeros(ambient);
                            v[i] = 1.0;
                            v
                        })
                        .collect();
                    let mf = curve_from_curvatures(
                        kappas,
                        &e,
                        &DVector::zeros(ambient),
                        *s_range,
                        1e-3,
                    )?;
                    parallel_normal_frame(&mf.curve, &e[1..])?
                }
            };
            if frame.rank() != m {
                return Err(CliError::Config(format!(
                    "frame rank {} does not match the fiber dimension {m}",
                    frame.rank()
                )));
            }
            let mut spec = PartialTubeSpec::new(frame, f0);
            if !substantial {
                spec = spec.without_substantial_check();
            }
            Ok(BuiltArtifact::Dist(build_partial_tube(&spec)?))
        }
        ConstructionConfig::Rotation { profile, radius } => {
            let map = profile.to_map()?;
            Ok(BuiltArtifact::Dist(build_rotation_hypersurface(
                &map, *radius,
            )?))
        }
        ConstructionConfig::RuledExample {
            kappas,
            s_range,
            t_half,
        } => Ok(BuiltArtifact::Dist(build_ruled_example(
            kappas, *s_range, *t_half,
        )?)),
        ConstructionConfig::SurfaceLikeCylindrical {
            r0,
            amp,
            momentum,
            chart,
            n,
            factor_range,
        } => {
            let cb = chart.to_box()?;
            let spec = SurfaceLikeSpec {
                g: revolution_surface(*r0, *amp, cb.clone()),
                d0: clairaut_field(*r0, *amp, *momentum, cb),
                kind: SurfaceKind::Cylindrical,
                n: *n,
                factor_range: *factor_range,
                t_range: (0.0, 0.0),
            };
            Ok(BuiltArtifact::Dist(build_surface_like(&spec)?))
        }
        ConstructionConfig::SurfaceLikeConical {
            base,
            d0,
            chart,
            n,
            t_range,
            factor_range,
        } => {
            let cb = chart.to_box()?;
            let g = match base {
                ConeBase::GreatSphere => great_sphere(cb.clone()),
                ConeBase::CliffordTorus => clifford_torus(cb.clone()),
            };
            let spec = SurfaceLikeSpec {
                g,
                d0: SmoothMap::new(2, cb, ConstantMap(d0.to_vec())),
                kind: SurfaceKind::Conical,
                n: *n,
                t_range: *t_range,
                factor_range: *factor_range,
            };
            Ok(BuiltArtifact::Dist(build_surface_like(&spec)?))
        }
        ConstructionConfig::FlatEnvelope {
            r0,
            amp,
            momentum,
            chart,
            seed,
            leaf_tau,
            leaf_u,
            s_range,
        } => {
            let cb = chart.to_box()?;
            let base_spec = SurfaceLikeSpec {
                g: revolution_surface(*r0, *amp, cb.clone()),
                d0: clairaut_field(*r0, *amp, *momentum, cb),
                kind: SurfaceKind::Cylindrical,
                n: 3,
                factor_range: (-1.0, 1.0),
                t_range: (0.0, 0.0),
            };
            let built = build_surface_like(&base_spec)?;
            let spline = clairaut_leaf(*r0, *amp, *momentum, *seed, *leaf_tau, 1e-3);
            let leaf = SmoothMap::new(
                3,
                ChartBox::new(vec![leaf_tau.0, -leaf_u], vec![leaf_tau.1, *leaf_u]),
                LeafMap { spline },
            );
            Ok(BuiltArtifact::Env(build_flat_envelope(&EnvelopeLeafSpec {
                base: built.immersion,
                distribution: built.distribution,
                gauge_y: 0,
                leaf,
                nullity_coords: vec![1],
                s_range: *s_range,
            })?))
        }
    }
}

// ---------------------------------------------------------------------------
// suite runner
// ---------------------------------------------------------------------------

fn resolve_res(cfg: &RunConfig, dim: usize) -> Result<Vec<usize>, CliError> {
    match cfg.grid_res.len() {
        0 => Ok(vec![3; dim]),
        1 => Ok(vec![cfg.grid_res[0]; dim]),
        l if l == dim => Ok(cfg.grid_res.clone()),
        l => Err(CliError::Config(format!(
            "grid_res has {l} entries for a {dim}-axis chart"
        ))),
    }
}

fn max_entry(map: &mut BTreeMap<String, f64>, key: &str, v: f64) {
    let e = map.entry(key.to_string()).or_insert(0.0);
    *e = e.max(v);
}

fn run_suites(
    cfg: &RunConfig,
    built: &BuiltArtifact,
    backend: Backend,
) -> Result<(Vec<PointRecord>, Summary), CliError> {
    let f = built.immersion();
    let dim = f.dim();
    let res = resolve_res(cfg, dim)?;
    let grid = f.chart().grid(&res, cfg.grid_margin);
    let tol = &cfg.tolerances;

    let mut records: Vec<PointRecord> = grid
        .iter()
        .map(|x| PointRecord {
            x: x.clone(),
            class: None,
            residuals: BTreeMap::new(),
        })
        .collect();
    let mut summary = Summary {
        grid_size: grid.len(),
        ..Summary::default()
    };

    for suite in &cfg.verify {
        match (suite, built) {
            (SuiteName::Classify, BuiltArtifact::Dist(c)) => {
                let mut ambiguous = 0usize;
                for (x, rec) in grid.iter().zip(&mut records) {
                    let pc = classify_point(&c.immersion, &c.distribution, x, tol.predicate())?;
                    if pc.ambiguous {
                        ambiguous += 1;
                    }
                    *summary.histogram.entry(dominant_label(&pc)).or_insert(0) += 1;
                    rec.class = Some(pc);
                }
                summary
                    .suite_pass
                    .insert(suite.key().into(), ambiguous == 0);
            }
            (SuiteName::TotallyGeodesic, BuiltArtifact::Dist(c)) => {
                let mut worst = 0.0f64;
                for (x, rec) in grid.iter().zip(&mut records) {
                    let (_, r) =
                        is_totally_geodesic(&c.immersion, &c.distribution, x, tol.predicate())?;
                    rec.residuals.insert("totally_geodesic".into(), r);
                    worst = worst.max(r);
                }
                max_entry(&mut summary.max_residual, "totally_geodesic", worst);
                summary
                    .suite_pass
                    .insert(suite.key().into(), worst <= tol.predicate());
            }
            (SuiteName::CurvatureInvariant, BuiltArtifact::Dist(c)) => {
                let mut worst = 0.0f64;
                for (x, rec) in grid.iter().zip(&mut records) {
                    let (_, r) =
                        is_curvature_invariant(&c.immersion, &c.distribution, x, tol.predicate())?;
                    rec.residuals.insert("curvature_invariant".into(), r);
                    worst = worst.max(r);
                }
                max_entry(&mut summary.max_residual, "curvature_invariant", worst);
                summary
                    .suite_pass
                    .insert(suite.key().into(), worst <= tol.predicate());
            }
            (SuiteName::Residuals7_11, BuiltArtifact::Dist(c)) => {
                let frame = adapted_frame(&c.immersion, &c.distribution, 0, &grid)?;
                let mut good = 0usize;
                for (i, (x, rec)) in grid.iter().zip(&mut records).enumerate() {
                    let fp = &frame.points[i];
                    rec.residuals
                        .insert("eq_shape".into(), fp.eq_shape_residual);
                    rec.residuals
                        .insert("eq_transport".into(), fp.eq_transport_residual);
                    rec.residuals
                        .insert("eq_lambda".into(), fp.eq_lambda_residual);
                    max_entry(&mut summary.max_residual, "eq_shape", fp.eq_shape_residual);
                    max_entry(
                        &mut summary.max_residual,
                        "eq_transport",
                        fp.eq_transport_residual,
                    );
                    max_entry(&mut summary.max_residual, "eq_lambda", fp.eq_lambda_residual);
                    let suite_vals = residual_suite(&frame, x)?;
                    for (k, v) in suite_vals.as_map() {
                        max_entry(&mut summary.max_residual, &k, v);
                        rec.residuals.insert(k, v);
                    }
                    let frame_ok = fp.eq_shape_residual <= tol.frame()
                        && fp.eq_transport_residual <= tol.frame()
                        && fp.eq_lambda_residual <= tol.frame();
                    if frame_ok && suite_vals.worst() <= tol.suite() {
                        good += 1;
                    }
                }
                let frac = good as f64 / grid.len() as f64;
                summary.suite_pass.insert(suite.key().into(), frac >= 0.95);
            }
            (SuiteName::PartialTubeEq3, BuiltArtifact::Dist(c)) => {
                let r = tube_coupling_residual(c, res[0].max(4), backend)?;
                max_entry(&mut summary.max_residual, "coupling", r);
                summary
                    .suite_pass
                    .insert(suite.key().into(), r <= tol.coupling());
            }
            (SuiteName::EnvelopeChecks, BuiltArtifact::Env(env)) => {
                let checks = verify_flat_envelope(env, res[0].max(3), backend)?;
                max_entry(&mut summary.max_residual, "envelope_flatness", checks.flatness);
                max_entry(&mut summary.max_residual, "envelope_tangency", checks.tangency);
                max_entry(
                    &mut summary.max_residual,
                    "envelope_nullity",
                    checks.nullity_agreement,
                );
                max_entry(&mut summary.max_residual, "envelope_leaf_angle", checks.leaf_angle);
                let pass = checks.flatness <= tol.envelope_flatness()
                    && checks.tangency <= tol.envelope_tangency()
                    && checks.nullity_agreement <= tol.envelope_tangency()
                    && checks.leaf_angle <= tol.envelope_tangency();
                summary.suite_pass.insert(suite.key().into(), pass);
            }
            _ => {
                // validate() keeps these combinations out
                return Err(CliError::Config(format!(
                    "suite {} does not apply to this construction",
                    suite.key()
                )));
            }
        }
    }

    Ok((records, summary))
}

// ---------------------------------------------------------------------------
// OBJ export
// ---------------------------------------------------------------------------

/// FNV-1a over the canonical config serialization; recorded in the mesh
/// header so a mesh can be traced back to its exact config.
pub fn config_hash(cfg: &RunConfig) -> u64 {
    let bytes = serde_json::to_vec(cfg).expect("config serializes");
    let mut h: u64 = 0xcbf29ce484222325;
    for b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Sample the immersion over the first two chart axes and triangulate.
/// Returns vertex positions and 0-based triangle indices.
pub fn build_mesh(
    f: &ImmersionField,
    res: [usize; 2],
    wrap: [bool; 2],
    slice: Option<&[f64]>,
    projection: Option<&[usize; 3]>,
) -> Result<(Vec<[f64; 3]>, Vec<[usize; 3]>), CliError> {
    let chart = f.chart();
    let dim = chart.dim();
    if dim < 2 {
        return Err(CliError::Config("mesh export needs a chart with >= 2 axes".into()));
    }
    if res[0] < 2 || res[1] < 2 {
        return Err(CliError::Config("mesh resolution must be >= 2 per axis".into()));
    }
    let amb = f.ambient_dim();
    let proj: [usize; 3] = match projection {
        Some(p) => {
            if p.iter().any(|&a| a >= amb) {
                return Err(CliError::Config("projection axis out of range".into()));
            }
            *p
        }
        None if amb == 3 => [0, 1, 2],
        None => {
            return Err(CliError::Config(format!(
                "ambient dimension {amb} > 3 requires a projection"
            )));
        }
    };
    let rest: Vec<f64> = match slice {
        Some(s) => {
            if s.len() != dim - 2 {
                return Err(CliError::Config(format!(
                    "mesh slice needs {} values",
                    dim - 2
                )));
            }
            s.to_vec()
        }
        None => chart.center()[2..].to_vec(),
    };

    let coord = |axis: usize, i: usize| -> f64 {
        let (lo, hi) = (chart.lo[axis], chart.hi[axis]);
        let denom = if wrap[axis] { res[axis] } else { res[axis] - 1 } as f64;
        lo + (hi - lo) * i as f64 / denom
    };

    let mut verts = Vec::with_capacity(res[0] * res[1]);
    for i in 0..res[0] {
        for j in 0..res[1] {
            let mut x = vec![coord(0, i), coord(1, j)];
            x.extend_from_slice(&rest);
            let p = f.map().eval::<f64>(&x);
            verts.push([p[proj[0]], p[proj[1]], p[proj[2]]]);
        }
    }

    let quads0 = if wrap[0] { res[0] } else { res[0] - 1 };
    let quads1 = if wrap[1] { res[1] } else { res[1] - 1 };
    let idx = |i: usize, j: usize| (i % res[0]) * res[1] + (j % res[1]);
    let mut tris = Vec::with_capacity(2 * quads0 * quads1);
    for i in 0..quads0 {
        for j in 0..quads1 {
            tris.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
            tris.push([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
        }
    }
    Ok((verts, tris))
}

pub fn export_mesh(
    f: &ImmersionField,
    out: &OutputSpec,
    hash: u64,
    path: &Path,
) -> Result<(), CliError> {
    let res = out.mesh_res.unwrap_or([32, 32]);
    let wrap = out.mesh_wrap.unwrap_or([false, false]);
    let (verts, tris) = build_mesh(
        f,
        res,
        wrap,
        out.mesh_slice.as_deref(),
        out.projection.as_ref(),
    )?;
    let mut buf = String::new();
    buf.push_str("# geofol mesh export\n");
    buf.push_str(&format!("# config-hash {hash:016x}\n"));
    for v in &verts {
        buf.push_str(&format!("v {} {} {}\n", v[0], v[1], v[2]));
    }
    for t in &tris {
        buf.push_str(&format!("f {} {} {}\n", t[0] + 1, t[1] + 1, t[2] + 1));
    }
    std::fs::write(path, buf)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// run entry point
// ---------------------------------------------------------------------------

#[derive(Default)]
pub struct RunOverrides {
    pub mesh: Option<PathBuf>,
    pub backend: Option<BackendChoice>,
    pub report: Option<PathBuf>,
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let tmp = path.with_extension("json.tmp");
    {
        let mut fh = std::fs::File::create(&tmp)?;
        fh.write_all(bytes)?;
        fh.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Execute a run config: exit 0 when every requested suite passes, 1 on a
/// suite failure, 2 on config or build errors. Diagnostics go to stderr,
/// the report path to stdout.
pub fn run(config_path: &Path, overrides: &RunOverrides) -> i32 {
    let started = Instant::now();
    let raw = match std::fs::read_to_string(config_path) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("geofol: cannot read {}: {e}", config_path.display());
            return 2;
        }
    };
    let mut cfg: RunConfig = match serde_json::from_str(&raw) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("geofol: config parse error: {e}");
            return 2;
        }
    };
    if let Some(b) = overrides.backend {
        cfg.backend = Some(b);
    }
    if let Some(m) = &overrides.mesh {
        cfg.output.mesh = Some(m.clone());
    }
    if let Some(r) = &overrides.report {
        cfg.output.report = Some(r.clone());
    }
    if let Err(e) = cfg.validate() {
        eprintln!("geofol: {e}");
        return 2;
    }

    let backend = cfg.backend.unwrap_or(BackendChoice::Dual);
    let report_path = cfg.output.report.clone().unwrap_or_else(|| {
        let stem = config_path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "run".into());
        config_path.with_file_name(format!("{stem}.report.json"))
    });

    let outcome: Result<(BuiltArtifact, Vec<PointRecord>, Summary), CliError> =
        build_construction(&cfg.construction).and_then(|built| {
            let (records, summary) = run_suites(&cfg, &built, backend.to_backend())?;
            Ok((built, records, summary))
        });

    let hash = config_hash(&cfg);
    let (error, points, summary, built) = match outcome {
        Ok((built, points, summary)) => (None, points, summary, Some(built)),
        Err(e) => (Some(e.to_string()), Vec::new(), Summary::default(), None),
    };
    let exit = match &error {
        Some(_) => 2,
        None if summary.suite_pass.values().all(|&p| p) => 0,
        None => 1,
    };

    if let (Some(built), Some(mesh_path)) = (&built, cfg.output.mesh.clone()) {
        if let Err(e) = export_mesh(built.immersion(), &cfg.output, hash, &mesh_path) {
            eprintln!("geofol: mesh export failed: {e}");
            return 2;
        }
    }

    let report = Report {
        schema: "report_v1",
        provenance: Provenance {
            toolkit_version: env!("CARGO_PKG_VERSION"),
            backend: match backend {
                BackendChoice::Dual => "dual",
                BackendChoice::Fd => "fd",
            },
            wall_time_ms: started.elapsed().as_secs_f64() * 1e3,
        },
        error: error.clone(),
        points,
        summary,
        config: cfg,
    };
    let bytes = match serde_json::to_vec_pretty(&report) {
        Ok(b) => b,
        Err(e) => {
            eprintln!("geofol: report serialization failed: {e}");
            return 2;
        }
    };
    if let Err(e) = write_atomic(&report_path, &bytes) {
        eprintln!("geofol: cannot write report: {e}");
        return 2;
    }
    println!("{}", report_path.display());
    if let Some(err) = &error {
        eprintln!("geofol: {err}");
    }
    exit
}

// ---------------------------------------------------------------------------
// argument parsing
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum BackendArg {
    Dual,
    Fd,
}

#[derive(Parser)]
#[command(name = "geofol", about = "Batch runner for hypersurface constructions")]
pub struct Cli {
    #[command(subcommand)]
    pub cmd: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Build a construction from a JSON config and run its suites.
    Run {
        config: PathBuf,
        #[arg(long)]
        mesh: Option<PathBuf>,
        #[arg(long)]
        backend: Option<BackendArg>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

pub fn main() -> i32 {
    let cli = Cli::parse();
    match cli.cmd {
        Command::Run {
            config,
            mesh,
            backend,
            report,
        } => run(
            &config,
            &RunOverrides {
                mesh,
                backend: backend.map(|b| match b {
                    BackendArg::Dual => BackendChoice::Dual,
                    BackendArg::Fd => BackendChoice::Fd,
                }),
                report,
            },
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn torus_config_json() -> String {
        r#"{
            "version": 1,
            "construction": {
                "type": "rotation",
                "profile": {"type": "circle", "radius": 0.5, "center": [0.0, 0.0], "angle_range": [-3.0, 3.0]},
                "radius": 2.0
            },
            "verify": ["classify", "partial_tube_eq3"],
            "grid_res": [4]
        }"#
        .into()
    }

    #[test]
    fn parses_and_validates_torus_config() {
        let cfg: RunConfig = serde_json::from_str(&torus_config_json()).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.verify.len(), 2);
    }

    #[test]
    fn unknown_suite_name_fails_at_parse_time() {
        let raw = torus_config_json().replace("partial_tube_eq3", "no_such_suite");
        assert!(serde_json::from_str::<RunConfig>(&raw).is_err());
    }

    #[test]
    fn grid_resolution_one_is_rejected() {
        let raw = torus_config_json().replace("[4]", "[1]");
        let cfg: RunConfig = serde_json::from_str(&raw).unwrap();
        assert!(matches!(cfg.validate(), Err(CliError::Config(_))));
    }

    #[test]
    fn envelope_rejects_pointwise_suites() {
        let raw = r#"{
            "version": 1,
            "construction": {
                "type": "flat_envelope",
                "r0": 2.0, "amp": 0.3, "momentum": 1.0,
                "chart": {"lo": [-1.0, -1.0], "hi": [1.0, 1.0]},
                "seed": [0.0, 0.0], "leaf_tau": [-0.4, 0.4], "leaf_u": 0.8,
                "s_range": [-0.15, 0.15]
            },
            "verify": ["classify"]
        }"#;
        let cfg: RunConfig = serde_json::from_str(raw).unwrap();
        assert!(matches!(cfg.validate(), Err(CliError::Config(_))));
    }

    #[test]
    fn config_hash_is_stable_and_sensitive() {
        let a: RunConfig = serde_json::from_str(&torus_config_json()).unwrap();
        let b: RunConfig = serde_json::from_str(&torus_config_json()).unwrap();
        assert_eq!(config_hash(&a), config_hash(&b));
        let raw = torus_config_json().replace("2.0", "2.5");
        let c: RunConfig = serde_json::from_str(&raw).unwrap();
        assert_ne!(config_hash(&a), config_hash(&c));
    }

    #[test]
    fn mesh_counts_match_grid_arithmetic() {
        let cfg: RunConfig = serde_json::from_str(&torus_config_json()).unwrap();
        let built = build_construction(&cfg.construction).unwrap();
        // closed in both directions: every grid cell becomes a quad
        let (verts, tris) =
            build_mesh(built.immersion(), [32, 32], [true, true], None, None).unwrap();
        assert_eq!(verts.len(), 1024);
        assert_eq!(tris.len(), 2048);
        // open patch: one fewer quad per axis
        let (verts, tris) =
            build_mesh(built.immersion(), [8, 5], [false, false], None, None).unwrap();
        assert_eq!(verts.len(), 40);
        assert_eq!(tris.len(), 2 * 7 * 4);
    }

    #[test]
    fn planar_chart_mesh_has_parallel_normals() {
        struct Plane;
        impl ChartMap for Plane {
            fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
                vec![x[0], x[1], x[0] * S::from_f64(0.5) + x[1]]
            }
        }
        let f = ImmersionField::new(SmoothMap::new(3, ChartBox::centered(2, 1.0), Plane));
        let (verts, tris) = build_mesh(&f, [6, 6], [false, false], None, None).unwrap();
        let normal = |t: &[usize; 3]| -> [f64; 3] {
            let a = verts[t[0]];
            let b = verts[t[1]];
            let c = verts[t[2]];
            let u = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
            let v = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
            let n = [
                u[1] * v[2] - u[2] * v[1],
                u[2] * v[0] - u[0] * v[2],
                u[0] * v[1] - u[1] * v[0],
            ];
            let l = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
            [n[0] / l, n[1] / l, n[2] / l]
        };
        let n0 = normal(&tris[0]);
        for t in &tris {
            let n = normal(t);
            let dot = n0[0] * n[0] + n0[1] * n[1] + n0[2] * n[2];
            assert!((dot.abs() - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn projection_required_above_three_dimensions() {
        let raw = r#"{
            "version": 1,
            "construction": {
                "type": "rotation",
                "profile": {"type": "sphere", "radius": 0.5, "center": [0.3, 0.0, 0.0], "angle_half": 0.4},
                "radius": 2.0
            }
        }"#;
        let cfg: RunConfig = serde_json::from_str(raw).unwrap();
        let built = build_construction(&cfg.construction).unwrap();
        assert!(matches!(
            build_mesh(built.immersion(), [6, 6], [false, false], None, None),
            Err(CliError::Config(_))
        ));
        let (verts, _) =
            build_mesh(built.immersion(), [6, 6], [false, false], None, Some(&[0, 1, 3])).unwrap();
        assert_eq!(verts.len(), 36);
    }
}
