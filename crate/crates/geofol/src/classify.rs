//! Pointwise classification of a hypersurface with a distinguished totally
//! geodesic distribution: the basic predicates, the three-way pointwise
//! dichotomy, line-of-curvature trajectories, the adapted frame of the
//! coupled (non-degenerate) case, and its suite of residual identities.

use std::collections::BTreeMap;

use nalgebra::DVector;
use serde::Serialize;
use thiserror::Error;

use crate::geometry::{
    covariant_derivative, curvature_operator, generic::case_iii_frame_s, geometry_jet,
    relative_nullity, shape_image, DistributionField, GeometryError, GeometryJet, ImmersionField,
    Subspace,
};
use crate::numjet::Backend;

/// Default predicate tolerance.
pub const PREDICATE_TOL: f64 = 1e-5;
/// Default tolerance for the residual identity suite (each residual stacks
/// three derivative levels).
pub const SUITE_TOL: f64 = 5e-3;
/// Rank cutoff used when splitting tangent spaces by shape-operator kernels.
pub const RANK_TOL: f64 = 1e-6;

const FD_H: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("distribution is rank-degenerate at the sample point (rank {found} < {expected})")]
    DegenerateDistribution { found: usize, expected: usize },
    #[error("distribution rank {rank} does not match the required rank {expected}")]
    RankMismatch { rank: usize, expected: usize },
    #[error("not the coupled case at {point:?}: mu = {mu:.3e}, rho = {rho:.3e}")]
    NotCoupledCase { point: Vec<f64>, mu: f64, rho: f64 },
    #[error("rho ~ 0 at the sample point; warp-ratio residual undefined")]
    RhoVanishes,
    #[error("shape-operator kernel has dimension {found}, expected {expected}")]
    KernelMismatch { found: usize, expected: usize },
}

fn orthonormal_distribution(
    d: &DistributionField,
    jet: &GeometryJet,
    x: &[f64],
) -> Result<Subspace, ClassifyError> {
    let span = d.eval_basis(x);
    let sub = Subspace::from_span(&span, &jet.g, 1e-10);
    if sub.dim() < d.rank() {
        return Err(ClassifyError::DegenerateDistribution {
            found: sub.dim(),
            expected: d.rank(),
        });
    }
    Ok(sub)
}

/// g-norm of the component of `v` g-orthogonal to the subspace.
fn complement_norm(sub: &Subspace, jet: &GeometryJet, v: &DVector<f64>) -> f64 {
    let mut rest = v.clone();
    for j in 0..sub.dim() {
        let b = sub.basis.column(j).into_owned();
        let c = jet.inner(&b, v);
        rest -= b * c;
    }
    jet.norm(&rest)
}

/// Whether the leaves of `D` are totally geodesic at `x`: `∇_V W` stays in
/// `D` for all generator pairs. Returns the worst normalized residual.
pub fn is_totally_geodesic(
    f: &ImmersionField,
    d: &DistributionField,
    x: &[f64],
    tol: f64,
) -> Result<(bool, f64), ClassifyError> {
    let jet = geometry_jet(f, x, Backend::Dual)?;
    let sub = orthonormal_distribution(d, &jet, x)?;
    let mut worst = 0.0f64;
    for v in d.generators() {
        for w in d.generators() {
            let cd = covariant_derivative(f, v, w, x, Backend::Dual)?;
            let normal_part = complement_norm(&sub, &jet, &cd.value);
            worst = worst.max(normal_part / (1.0 + jet.norm(&cd.value)));
        }
    }
    Ok((worst <= tol, worst))
}

/// Whether `D` is curvature invariant at `x`: `R(V,W)Z ∈ D` for all
/// generators, evaluated through the Gauss-equation form of `R`.
pub fn is_curvature_invariant(
    f: &ImmersionField,
    d: &DistributionField,
    x: &[f64],
    tol: f64,
) -> Result<(bool, f64), ClassifyError> {
    let jet = geometry_jet(f, x, Backend::Dual)?;
    let sub = orthonormal_distribution(d, &jet, x)?;
    let basis: Vec<DVector<f64>> = (0..sub.dim())
        .map(|j| sub.basis.column(j).into_owned())
        .collect();
    let mut worst = 0.0f64;
    for v in &basis {
        for w in &basis {
            for z in &basis {
                let r = curvature_operator(&jet, v, w, z);
                let res = complement_norm(&sub, &jet, &r) / (1.0 + jet.norm(&r));
                worst = worst.max(res);
            }
        }
    }
    Ok((worst <= tol, worst))
}

// ---------------------------------------------------------------------------
// pointwise classification
// ---------------------------------------------------------------------------

/// Set-valued pointwise classification. Multiple flags may hold at once
/// (flat points satisfy both inclusion cases); `ambiguous` marks tolerance
/// gaps where none fired.
#[derive(Clone, Debug, Serialize)]
pub struct PointClass {
    pub case_i: bool,
    pub case_ii: bool,
    pub case_iii: bool,
    pub flat_point: bool,
    pub ambiguous: bool,
    /// Defining residual per flag.
    pub residuals: BTreeMap<String, f64>,
    pub tol: f64,
    /// Set when the distribution failed the curvature-invariance precheck.
    pub curvature_invariant_warning: Option<f64>,
}

/// Classify the shape-operator behaviour of `D` at `x`:
/// `case_i` — `A(D) ⊥ D` (the second fundamental form vanishes on `D`);
/// `case_ii` — `A(D) ⊆ D`;
/// `case_iii` — `D` meets the shape kernel in exactly a hyperplane of `D`.
pub fn classify_point(
    f: &ImmersionField,
    d: &DistributionField,
    x: &[f64],
    tol: f64,
) -> Result<PointClass, ClassifyError> {
    let jet = geometry_jet(f, x, Backend::Dual)?;
    let sub = orthonormal_distribution(d, &jet, x)?;
    let k = sub.dim();
    let a_norm = jet.shape_norm();

    let (_, ci_res) = is_curvature_invariant(f, d, x, tol)?;
    let warning = if ci_res > tol { Some(ci_res) } else { None };

    // case (i): h restricted to D×D vanishes
    let mut h_max = 0.0f64;
    for i in 0..k {
        for j in 0..k {
            let hij = (sub.basis.column(i).transpose() * &jet.h * sub.basis.column(j))[(0, 0)];
            h_max = h_max.max(hij.abs());
        }
    }
    let case_i = h_max <= tol * a_norm.max(1e-12);

    // case (ii): A(D) stays inside D
    let image = shape_image(&jet, &sub.basis, RANK_TOL);
    let case_ii_res = if image.dim() == 0 {
        0.0
    } else {
        image.containment_residual(&sub)?
    };
    let case_ii = case_ii_res <= tol;

    // case (iii): D ∩ ker A is a hyperplane of D
    let (nullity, _) = relative_nullity(&jet, RANK_TOL);
    let isect = sub.intersection_dim(&nullity, tol.max(1e-8))?;
    let case_iii = isect + 1 == k;

    let flat_point = a_norm <= tol;
    let ambiguous = !(case_i || case_ii || case_iii || flat_point);

    let mut residuals = BTreeMap::new();
    residuals.insert("case_i".into(), h_max / a_norm.max(1e-12));
    residuals.insert("case_ii".into(), case_ii_res);
    residuals.insert(
        "case_iii".into(),
        (k as f64 - 1.0 - isect as f64).abs(),
    );
    residuals.insert("flat_point".into(), a_norm);

    Ok(PointClass {
        case_i,
        case_ii,
        case_iii,
        flat_point,
        ambiguous,
        residuals,
        tol,
        curvature_invariant_warning: warning,
    })
}

/// For a corank-one `D`: whether the orthogonal trajectories are lines of
/// curvature, i.e. the unit normal direction `Y` to `D` is a shape
/// eigenvector. Residual is the sine of the angle between `AY` and `Y`.
pub fn is_line_of_curvature_trajectory(
    f: &ImmersionField,
    d: &DistributionField,
    x: &[f64],
    tol: f64,
) -> Result<(bool, f64), ClassifyError> {
    let n = f.dim();
    if d.rank() != n - 1 {
        return Err(ClassifyError::RankMismatch {
            rank: d.rank(),
            expected: n - 1,
        });
    }
    let jet = geometry_jet(f, x, Backend::Dual)?;
    let sub = orthonormal_distribution(d, &jet, x)?;
    let comp = sub.orthogonal_complement();
    let y = comp.basis.column(0).into_owned();
    let ay = &jet.a * &y;
    let ay_norm = jet.norm(&ay);
    if ay_norm <= tol * jet.shape_norm().max(1.0) {
        return Ok((true, 0.0));
    }
    let cos = (jet.inner(&ay, &y) / (ay_norm * jet.norm(&y))).clamp(-1.0, 1.0);
    let sine = (1.0 - cos * cos).max(0.0).sqrt();
    Ok((sine <= tol, sine))
}

// ---------------------------------------------------------------------------
// adapted frame for the coupled case
// ---------------------------------------------------------------------------

/// Frame vectors and coupling scalars at one point, in chart coordinates.
#[derive(Clone, Debug)]
pub struct FrameVectors {
    /// g-unit direction transverse to `D`.
    pub y: DVector<f64>,
    /// g-unit direction in `D` carrying the shape coupling.
    pub xdir: DVector<f64>,
    /// g-orthonormal basis of the shape kernel inside `D`.
    pub t: Vec<DVector<f64>>,
    pub beta: f64,
    pub mu: f64,
    pub rho: f64,
}

/// A smooth pointwise-evaluable frame field on a chart; the residual suite
/// differentiates it by finite differences.
pub trait FrameField {
    fn immersion(&self) -> &ImmersionField;
    fn vectors(&self, x: &[f64]) -> Result<FrameVectors, ClassifyError>;
}

/// g-orthonormal basis of `D ∩ ker A`, found as the kernel of the second
/// fundamental form restricted to `D` (for `ρ ≠ 0` the two agree, and the
/// restriction stays well-conditioned even where the ambient kernel jumps).
fn restricted_kernel(
    jet: &GeometryJet,
    sub: &Subspace,
) -> Result<Vec<DVector<f64>>, ClassifyError> {
    let n = jet.dim();
    let k = sub.dim();
    let mut rest = nalgebra::DMatrix::zeros(k, k);
    for p in 0..k {
        let av = &jet.a * sub.basis.column(p).into_owned();
        for q in 0..k {
            rest[(q, p)] = jet.inner(&sub.basis.column(q).into_owned(), &av);
        }
    }
    let sym = (rest.clone() + rest.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let emax = eig.eigenvalues.iter().fold(0.0f64, |m, &l| m.max(l.abs()));
    let cutoff = RANK_TOL * emax.max(1.0);
    let mut kernel = Vec::new();
    for i in 0..k {
        if eig.eigenvalues[i].abs() <= cutoff {
            let mut b = DVector::zeros(n);
            for p in 0..k {
                b += sub.basis.column(p) * eig.eigenvectors[(p, i)];
            }
            kernel.push(b);
        }
    }
    if kernel.len() + 1 != k {
        return Err(ClassifyError::KernelMismatch {
            found: kernel.len(),
            expected: k - 1,
        });
    }
    Ok(kernel)
}

/// The gauge-fixed adapted frame field extracted from `(f, D)`.
#[derive(Clone)]
pub struct AdaptedFrameField {
    pub f: ImmersionField,
    pub d: DistributionField,
    /// Chart coordinate seeding `Y`'s direction (fixed once per chart).
    pub gauge_y: usize,
    /// Reference coordinate axes whose kernel projections seed the `T^j`
    /// basis, fixed at the seed point.
    refs: Vec<usize>,
}

impl FrameField for AdaptedFrameField {
    fn immersion(&self) -> &ImmersionField {
        &self.f
    }

    fn vectors(&self, x: &[f64]) -> Result<FrameVectors, ClassifyError> {
        let frame = case_iii_frame_s::<f64>(&self.f, &self.d, self.gauge_y, x);
        if frame.mu.abs() < 1e-6 || frame.rho.abs() < 1e-6 {
            return Err(ClassifyError::NotCoupledCase {
                point: x.to_vec(),
                mu: frame.mu,
                rho: frame.rho,
            });
        }
        let jet = geometry_jet(&self.f, x, Backend::Dual)?;
        let n = self.f.dim();
        let sub = orthonormal_distribution(&self.d, &jet, x)?;
        let kernel = restricted_kernel(&jet, &sub)?;
        // project the fixed reference axes onto the kernel and orthonormalize;
        // signs pinned to the reference to keep the field smooth
        let mut t: Vec<DVector<f64>> = Vec::with_capacity(kernel.len());
        for &r in &self.refs {
            let mut e = DVector::zeros(n);
            e[r] = 1.0;
            let mut p = DVector::zeros(n);
            for b in &kernel {
                let c = jet.inner(b, &e);
                p += b * c;
            }
            for prev in &t {
                let c = jet.inner(prev, &p);
                p -= prev * c;
            }
            let norm = jet.norm(&p);
            if norm < 1e-8 {
                return Err(ClassifyError::DegenerateDistribution {
                    found: t.len(),
                    expected: n - 2,
                });
            }
            p /= norm;
            if jet.inner(&p, &e) < 0.0 {
                p = -p;
            }
            t.push(p);
        }
        Ok(FrameVectors {
            y: DVector::from_vec(frame.y),
            xdir: DVector::from_vec(frame.x),
            t,
            beta: frame.beta,
            mu: frame.mu,
            rho: frame.rho,
        })
    }
}

/// Frame data with verification residuals at one grid point.
#[derive(Clone, Debug)]
pub struct FramePoint {
    pub x: Vec<f64>,
    pub vectors: FrameVectors,
    pub lambda: Vec<f64>,
    pub theta: Vec<f64>,
    /// `μ/ρ`.
    pub phi_w: f64,
    /// Worst defect of `AY = βY + μX`, `AX = μY + ρX`, `AT^j = 0`.
    pub eq_shape_residual: f64,
    /// Worst norm among the vanishing covariant derivatives
    /// `∇_{T^j}T^i, ∇_{T^j}X, ∇_{T^j}Y, ∇_X Y`.
    pub eq_transport_residual: f64,
    /// Defect of `∇_X T^j = λ_j X` and of the two `λ_j` definitions agreeing.
    pub eq_lambda_residual: f64,
}

/// The adapted frame evaluated over a grid, with residual checks.
pub struct AdaptedFrame {
    pub field: AdaptedFrameField,
    pub points: Vec<FramePoint>,
}

impl FrameField for AdaptedFrame {
    fn immersion(&self) -> &ImmersionField {
        self.field.immersion()
    }
    fn vectors(&self, x: &[f64]) -> Result<FrameVectors, ClassifyError> {
        self.field.vectors(x)
    }
}

/// Directional derivative of a scalar field by Richardson-extrapolated
/// central differences along a chart vector.
fn dir_scalar<F>(field: &F, v: &DVector<f64>, x: &[f64], h: f64) -> Result<f64, ClassifyError>
where
    F: Fn(&[f64]) -> Result<f64, ClassifyError>,
{
    let shift = |t: f64| -> Vec<f64> {
        x.iter().zip(v.iter()).map(|(a, b)| a + t * b).collect()
    };
    let d = |step: f64| -> Result<f64, ClassifyError> {
        Ok((field(&shift(step))? - field(&shift(-step))?) / (2.0 * step))
    };
    let coarse = d(h)?;
    let fine = d(0.5 * h)?;
    Ok((4.0 * fine - coarse) / 3.0)
}

/// Covariant derivative `∇_v W` of a pointwise-computable vector field.
fn cov_of_field<F>(
    f: &ImmersionField,
    jet: &GeometryJet,
    field: &F,
    v: &DVector<f64>,
    x: &[f64],
    h: f64,
) -> Result<DVector<f64>, ClassifyError>
where
    F: Fn(&[f64]) -> Result<DVector<f64>, ClassifyError>,
{
    let n = f.dim();
    let shift = |t: f64| -> Vec<f64> {
        x.iter().zip(v.iter()).map(|(a, b)| a + t * b).collect()
    };
    let d = |step: f64| -> Result<DVector<f64>, ClassifyError> {
        Ok((field(&shift(step))? - field(&shift(-step))?) / (2.0 * step))
    };
    let mut out = (d(0.5 * h)? * 4.0 - d(h)?) / 3.0;
    let w = field(x)?;
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                out[k] += jet.gamma[k][(i, j)] * v[i] * w[j];
            }
        }
    }
    Ok(out)
}

/// Extract and verify the adapted frame over a grid of chart points.
///
/// `gauge_y` fixes the coordinate seeding the transverse direction; the
/// kernel gauge is pinned to the coordinate axes best aligned with the
/// kernel at the first grid point.
pub fn adapted_frame(
    f: &ImmersionField,
    d: &DistributionField,
    gauge_y: usize,
    grid: &[Vec<f64>],
) -> Result<AdaptedFrame, ClassifyError> {
    assert!(!grid.is_empty());
    let n = f.dim();
    let seed = &grid[0];

    // pick reference axes at the seed: the coordinates with the largest
    // g-projection onto the coupled-case kernel of the distribution
    let seed_jet = geometry_jet(f, seed, Backend::Dual)?;
    let seed_sub = orthonormal_distribution(d, &seed_jet, seed)?;
    let seed_frame = case_iii_frame_s::<f64>(f, d, gauge_y, seed);
    if seed_frame.mu.abs() < 1e-6 || seed_frame.rho.abs() < 1e-6 {
        return Err(ClassifyError::NotCoupledCase {
            point: seed.clone(),
            mu: seed_frame.mu,
            rho: seed_frame.rho,
        });
    }
    let kernel = restricted_kernel(&seed_jet, &seed_sub)?;
    let mut scored: Vec<(f64, usize)> = (0..n)
        .map(|r| {
            let mut e = DVector::zeros(n);
            e[r] = 1.0;
            let mut p = DVector::zeros(n);
            for b in &kernel {
                let c = seed_jet.inner(b, &e);
                p += b * c;
            }
            (seed_jet.norm(&p), r)
        })
        .collect();
    scored.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let refs: Vec<usize> = scored.iter().take(kernel.len()).map(|&(_, r)| r).collect();

    let field = AdaptedFrameField {
        f: f.clone(),
        d: d.clone(),
        gauge_y,
        refs,
    };

    let mut points = Vec::with_capacity(grid.len());
    for x in grid {
        let vectors = field.vectors(x)?;
        let jet = geometry_jet(f, x, Backend::Dual)?;

        // shape relations
        let mut shape_res = 0.0f64;
        let ay = &jet.a * &vectors.y;
        let expect = &vectors.y * vectors.beta + &vectors.xdir * vectors.mu;
        shape_res = shape_res.max(jet.norm(&(ay - expect)));
        let ax = &jet.a * &vectors.xdir;
        let expect = &vectors.y * vectors.mu + &vectors.xdir * vectors.rho;
        shape_res = shape_res.max(jet.norm(&(ax - expect)));
        for t in &vectors.t {
            shape_res = shape_res.max(jet.norm(&(&jet.a * t)));
        }
        shape_res /= 1.0 + jet.shape_norm();

        // vanishing transports (the kernel directions are flat for the frame)
        let y_field = |q: &[f64]| field.vectors(q).map(|v| v.y);
        let x_field = |q: &[f64]| field.vectors(q).map(|v| v.xdir);
        let mut transport = 0.0f64;
        for (_j, t) in vectors.t.iter().enumerate() {
            for i in 0..vectors.t.len() {
                let ti_field = |q: &[f64]| field.vectors(q).map(|v| v.t[i].clone());
                let cd = cov_of_field(f, &jet, &ti_field, t, x, FD_H)?;
                transport = transport.max(jet.norm(&cd));
            }
            let cd = cov_of_field(f, &jet, &x_field, t, x, FD_H)?;
            transport = transport.max(jet.norm(&cd));
            let cd = cov_of_field(f, &jet, &y_field, t, x, FD_H)?;
            transport = transport.max(jet.norm(&cd));
        }
        let cd = cov_of_field(f, &jet, &y_field, &vectors.xdir, x, FD_H)?;
        transport = transport.max(jet.norm(&cd));

        // λ_j two ways and θ_j
        let xx = cov_of_field(f, &jet, &x_field, &vectors.xdir, x, FD_H)?;
        let yy = cov_of_field(f, &jet, &y_field, &vectors.y, x, FD_H)?;
        let mut lambda = Vec::new();
        let mut theta = Vec::new();
        let mut lambda_res = 0.0f64;
        for (j, t) in vectors.t.iter().enumerate() {
            let tj_field = |q: &[f64]| field.vectors(q).map(|v| v.t[j].clone());
            let cd = cov_of_field(f, &jet, &tj_field, &vectors.xdir, x, FD_H)?;
            let lam = jet.inner(&cd, &vectors.xdir);
            // defect of ∇_X T^j lying along X
            let rest = &cd - &vectors.xdir * lam;
            lambda_res = lambda_res.max(jet.norm(&rest));
            let lam_alt = -jet.inner(&xx, t);
            lambda_res = lambda_res.max((lam - lam_alt).abs());
            lambda.push(lam);
            theta.push(jet.inner(&yy, t));
        }

        points.push(FramePoint {
            x: x.clone(),
            vectors,
            lambda,
            theta,
            phi_w: points
                .last()
                .map(|_: &FramePoint| 0.0)
                .unwrap_or(0.0),
            eq_shape_residual: shape_res,
            eq_transport_residual: transport,
            eq_lambda_residual: lambda_res,
        });
        let last = points.last_mut().unwrap();
        last.phi_w = last.vectors.mu / last.vectors.rho;
    }

    Ok(AdaptedFrame { field, points })
}

// ---------------------------------------------------------------------------
// residual identity suite
// ---------------------------------------------------------------------------

/// Normalized residuals of the compatibility identities satisfied by the
/// coupled-case frame; each is scaled by `1 + |left-hand side|`.
#[derive(Clone, Debug, Serialize)]
pub struct ResidualSuite {
    /// `T^i(ρ) = ρ⟨∇_X X, T^i⟩`
    pub r7a: f64,
    /// `T^i(μ) = μ⟨∇_X X, T^i⟩`
    pub r7b: f64,
    /// `T^i(μ) = ρ⟨∇_Y X, T^i⟩ + μ⟨∇_Y Y, T^i⟩`
    pub r7c: f64,
    /// `X(⟨∇_Y Y, T^i⟩) = ⟨∇_Y Y, X⟩(⟨∇_Y Y, T^i⟩ − ⟨∇_X X, T^i⟩)`
    pub r8a: f64,
    /// `T^i(⟨∇_X X, T^j⟩) = ⟨∇_X X, T^i⟩⟨∇_X X, T^j⟩`
    pub r8b: f64,
    /// same as `r8b` with `Y` in place of `X`
    pub r8c: f64,
    /// constancy of the warp ratio along the kernel: `T^j(μ/ρ) = 0`
    pub r9: f64,
    /// `μ(λ_j + θ_j) + ρ⟨∇_Y X, T^j⟩ = 0`
    pub r11: f64,
}

impl ResidualSuite {
    pub fn as_map(&self) -> BTreeMap<String, f64> {
        let mut m = BTreeMap::new();
        m.insert("r7a".into(), self.r7a);
        m.insert("r7b".into(), self.r7b);
        m.insert("r7c".into(), self.r7c);
        m.insert("r8a".into(), self.r8a);
        m.insert("r8b".into(), self.r8b);
        m.insert("r8c".into(), self.r8c);
        m.insert("r9".into(), self.r9);
        m.insert("r11".into(), self.r11);
        m
    }

    pub fn worst(&self) -> f64 {
        self.as_map().values().cloned().fold(0.0, f64::max)
    }
}

/// Evaluate the residual identities of a frame field at `x` by nested finite
/// differences of its scalars and covariant derivatives.
pub fn residual_suite(frame: &dyn FrameField, x: &[f64]) -> Result<ResidualSuite, ClassifyError> {
    let f = frame.immersion();
    let v0 = frame.vectors(x)?;
    let jet = geometry_jet(f, x, Backend::Dual)?;
    let k = v0.t.len();
    if v0.rho.abs() < 1e-8 {
        return Err(ClassifyError::RhoVanishes);
    }

    let rho_field = |q: &[f64]| frame.vectors(q).map(|v| v.rho);
    let mu_field = |q: &[f64]| frame.vectors(q).map(|v| v.mu);
    let x_field = |q: &[f64]| frame.vectors(q).map(|v| v.xdir);
    let y_field = |q: &[f64]| frame.vectors(q).map(|v| v.y);

    // scalar fields ⟨∇_X X, T^i⟩, ⟨∇_Y Y, T^i⟩ as functions of the point
    let xx_t = |i: usize| {
        move |q: &[f64]| -> Result<f64, ClassifyError> {
            let vq = frame.vectors(q)?;
            let jq = geometry_jet(f, q, Backend::Dual)?;
            let xf = |p: &[f64]| frame.vectors(p).map(|v| v.xdir);
            let cd = cov_of_field(f, &jq, &xf, &vq.xdir, q, FD_H)?;
            Ok(jq.inner(&cd, &vq.t[i]))
        }
    };
    let yy_t = |i: usize| {
        move |q: &[f64]| -> Result<f64, ClassifyError> {
            let vq = frame.vectors(q)?;
            let jq = geometry_jet(f, q, Backend::Dual)?;
            let yf = |p: &[f64]| frame.vectors(p).map(|v| v.y);
            let cd = cov_of_field(f, &jq, &yf, &vq.y, q, FD_H)?;
            Ok(jq.inner(&cd, &vq.t[i]))
        }
    };

    let xx = cov_of_field(f, &jet, &x_field, &v0.xdir, x, FD_H)?;
    let yy = cov_of_field(f, &jet, &y_field, &v0.y, x, FD_H)?;
    let yx = cov_of_field(f, &jet, &x_field, &v0.y, x, FD_H)?;

    let mut r7a = 0.0f64;
    let mut r7b = 0.0f64;
    let mut r7c = 0.0f64;
    let mut r8a = 0.0f64;
    let mut r8b = 0.0f64;
    let mut r8c = 0.0f64;
    let mut r9 = 0.0f64;
    let mut r11 = 0.0f64;

    for i in 0..k {
        let ti = &v0.t[i];
        let t_rho = dir_scalar(&rho_field, ti, x, FD_H)?;
        let t_mu = dir_scalar(&mu_field, ti, x, FD_H)?;
        let xx_ti = jet.inner(&xx, ti);
        let yy_ti = jet.inner(&yy, ti);
        let yx_ti = jet.inner(&yx, ti);

        r7a = r7a.max((t_rho - v0.rho * xx_ti).abs() / (1.0 + t_rho.abs()));
        r7b = r7b.max((t_mu - v0.mu * xx_ti).abs() / (1.0 + t_mu.abs()));
        r7c = r7c
            .max((t_mu - v0.rho * yx_ti - v0.mu * yy_ti).abs() / (1.0 + t_mu.abs()));

        // X(⟨∇_Y Y, T^i⟩)
        let lhs_8a = dir_scalar(&yy_t(i), &v0.xdir, x, FD_H)?;
        let yy_x = jet.inner(&yy, &v0.xdir);
        r8a = r8a.max(
            (lhs_8a - yy_x * (yy_ti - xx_ti)).abs() / (1.0 + lhs_8a.abs()),
        );

        for j in 0..k {
            let xx_tj = jet.inner(&xx, &v0.t[j]);
            let yy_tj = jet.inner(&yy, &v0.t[j]);
            let lhs_8b = dir_scalar(&xx_t(j), ti, x, FD_H)?;
            r8b = r8b.max((lhs_8b - xx_ti * xx_tj).abs() / (1.0 + lhs_8b.abs()));
            let lhs_8c = dir_scalar(&yy_t(j), ti, x, FD_H)?;
            r8c = r8c.max((lhs_8c - yy_ti * yy_tj).abs() / (1.0 + lhs_8c.abs()));
        }

        let warp = |q: &[f64]| -> Result<f64, ClassifyError> {
            let v = frame.vectors(q)?;
            if v.rho.abs() < 1e-8 {
                return Err(ClassifyError::RhoVanishes);
            }
            Ok(v.mu / v.rho)
        };
        let t_warp = dir_scalar(&warp, ti, x, FD_H)?;
        r9 = r9.max(t_warp.abs() / (1.0 + t_warp.abs()));

        // λ_i, θ_i recomputed here from covariant derivatives
        let lam = -xx_ti;
        let theta = yy_ti;
        let lhs_11 = v0.mu * (lam + theta);
        r11 = r11.max((lhs_11 + v0.rho * yx_ti).abs() / (1.0 + lhs_11.abs()));
    }

    Ok(ResidualSuite {
        r7a,
        r7b,
        r7c,
        r8a,
        r8b,
        r8c,
        r9,
        r11,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::{
        build_partial_tube, build_rotation_hypersurface, build_ruled_example, build_surface_like,
        clairaut_field, revolution_surface, Construction, PartialTubeSpec, SurfaceKind,
        SurfaceLikeSpec,
    };
    use crate::curves::{curve_from_curvatures, parallel_normal_frame, ScalarFn1d};
    use crate::numjet::{ChartBox, ChartMap, ConstantMap, Scalar, SmoothMap};

    struct Plane;
    impl ChartMap for Plane {
        fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
            vec![x[0], x[1], x[0] * S::from_f64(0.5)]
        }
    }

    struct SphereGraph;
    impl ChartMap for SphereGraph {
        fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
            let r2 = x[0] * x[0] + x[1] * x[1];
            vec![x[0], x[1], (S::one() - r2).sqrt()]
        }
    }

    fn const_field(chart: &ChartBox, v: Vec<f64>) -> SmoothMap {
        SmoothMap::new(v.len(), chart.clone(), ConstantMap(v))
    }

    fn plane_immersion() -> ImmersionField {
        ImmersionField::new(SmoothMap::new(3, ChartBox::centered(2, 1.0), Plane))
    }

    #[test]
    fn constant_distribution_on_plane_is_geodesic() {
        let f = plane_immersion();
        let d = DistributionField::new(vec![const_field(f.chart(), vec![1.0, 0.3])]);
        let (ok, res) = is_totally_geodesic(&f, &d, &[0.1, 0.2], PREDICATE_TOL).unwrap();
        assert!(ok, "residual {res}");
        assert!(res <= 1e-10);
        let (ok, _) = is_curvature_invariant(&f, &d, &[0.1, 0.2], PREDICATE_TOL).unwrap();
        assert!(ok);
    }

    #[test]
    fn latitude_field_on_sphere_is_not_geodesic() {
        let f = ImmersionField::new(SmoothMap::new(3, ChartBox::centered(2, 0.5), SphereGraph));
        let d = DistributionField::new(vec![const_field(f.chart(), vec![1.0, 0.0])]);
        let (ok, res) = is_totally_geodesic(&f, &d, &[0.1, 0.3], PREDICATE_TOL).unwrap();
        assert!(!ok);
        assert!(res >= 1e-2, "residual {res}");
        // constant curvature: every distribution is curvature invariant
        let (ok, res) = is_curvature_invariant(&f, &d, &[0.1, 0.3], PREDICATE_TOL).unwrap();
        assert!(ok, "residual {res}");
    }

    #[test]
    fn plane_classifies_as_flat_with_both_inclusions() {
        let f = plane_immersion();
        let d = DistributionField::new(vec![const_field(f.chart(), vec![1.0, 0.0])]);
        let pc = classify_point(&f, &d, &[0.1, -0.2], PREDICATE_TOL).unwrap();
        assert!(pc.flat_point && pc.case_i && pc.case_ii);
        assert!(!pc.ambiguous);
        let (ok, _) = is_line_of_curvature_trajectory(&f, &d, &[0.1, -0.2], PREDICATE_TOL).unwrap();
        assert!(ok, "flat chart: AY = 0 counts as a curvature line");
    }

    fn ramp_ruled() -> Construction {
        build_ruled_example(
            &[
                ScalarFn1d::Const { value: 1.0 },
                ScalarFn1d::SmoothRamp { amp: 1.0, scale: 1.0 },
                ScalarFn1d::SmoothRamp { amp: 1.0, scale: 1.0 },
            ],
            (-1.5, 1.5),
            0.3,
        )
        .unwrap()
    }

    #[test]
    fn ruled_chart_is_case_one_only() {
        let built = ramp_ruled();
        let pc = classify_point(
            &built.immersion,
            &built.distribution,
            &[1.0, 0.05, -0.05],
            PREDICATE_TOL,
        )
        .unwrap();
        assert!(pc.case_i, "{:?}", pc.residuals);
        assert!(!pc.case_ii, "case_ii residual {}", pc.residuals["case_ii"]);
        assert!(pc.residuals["case_ii"] >= 1e-3);
        // generic ruled points do not have curvature-line trajectories —
        // complement the rulings to a corank-one distribution including ∂_s
        let chart = built.immersion.chart().clone();
        let d2 = DistributionField::new(vec![
            const_field(&chart, vec![1.0, 0.0, 0.0]),
            const_field(&chart, vec![0.0, 1.0, 0.0]),
        ]);
        let (ok, res) =
            is_line_of_curvature_trajectory(&built.immersion, &d2, &[1.0, 0.05, -0.05], 1e-5)
                .unwrap();
        assert!(!ok);
        assert!(res >= 1e-2, "sine {res}");
    }

    fn generic_tube() -> Construction {
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
        let frame = parallel_normal_frame(&mf.curve, &[e[1].clone(), e[2].clone()]).unwrap();
        struct Circle;
        impl ChartMap for Circle {
            fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
                let r = S::from_f64(0.4);
                vec![r * x[0].cos(), r * x[0].sin()]
            }
        }
        let f0 = SmoothMap::new(2, ChartBox::new(vec![-3.0], vec![3.0]), Circle);
        build_partial_tube(&PartialTubeSpec::new(frame, f0)).unwrap()
    }

    #[test]
    fn partial_tube_fibers_are_case_two() {
        let built = generic_tube();
        for x in built.immersion.chart().grid(&[4, 4], 1e-2) {
            let pc =
                classify_point(&built.immersion, &built.distribution, &x, PREDICATE_TOL).unwrap();
            assert!(pc.case_ii, "at {x:?}: {:?}", pc.residuals);
        }
    }

    #[test]
    fn rotation_hypersurface_has_curvature_line_trajectories() {
        struct Circle;
        impl ChartMap for Circle {
            fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
                let r = S::from_f64(0.5);
                vec![r * x[0].cos(), r * x[0].sin()]
            }
        }
        let profile = SmoothMap::new(2, ChartBox::new(vec![-3.0], vec![3.0]), Circle);
        let torus = build_rotation_hypersurface(&profile, 2.0).unwrap();
        for x in torus.immersion.chart().grid(&[4, 4], 1e-2) {
            let (ok, res) =
                is_line_of_curvature_trajectory(&torus.immersion, &torus.distribution, &x, 1e-5)
                    .unwrap();
            assert!(ok, "sine {res} at {x:?}");
            let pc =
                classify_point(&torus.immersion, &torus.distribution, &x, PREDICATE_TOL).unwrap();
            assert!(pc.case_ii, "curvature-line trajectories imply case (ii)");
        }
    }

    fn revolution_like() -> Construction {
        let chart = ChartBox::new(vec![-1.0, -1.0], vec![1.0, 1.0]);
        build_surface_like(&SurfaceLikeSpec {
            g: revolution_surface(2.0, 0.3, chart.clone()),
            d0: clairaut_field(2.0, 0.3, 1.0, chart),
            kind: SurfaceKind::Cylindrical,
            n: 3,
            factor_range: (-1.0, 1.0),
            t_range: (0.0, 0.0),
        })
        .unwrap()
    }

    #[test]
    fn surface_like_is_case_three() {
        let built = revolution_like();
        for x in built.immersion.chart().grid(&[3, 3, 3], 5e-2) {
            let pc =
                classify_point(&built.immersion, &built.distribution, &x, PREDICATE_TOL).unwrap();
            assert!(pc.case_iii, "at {x:?}: {:?}", pc.residuals);
            assert!(!pc.case_i && !pc.case_ii, "exclusively coupled at {x:?}");
        }
    }

    #[test]
    fn implication_and_sign_invariance() {
        // totally geodesic ⟹ curvature invariant, and orientation flips
        // leave the classification untouched
        let corpus: Vec<Construction> = vec![generic_tube(), ramp_ruled(), revolution_like()];
        for built in &corpus {
            let n = built.immersion.dim();
            for x in built.immersion.chart().grid(&vec![3; n], 5e-2) {
                let (tg, _) =
                    is_totally_geodesic(&built.immersion, &built.distribution, &x, PREDICATE_TOL)
                        .unwrap();
                if tg {
                    let (ci, res) = is_curvature_invariant(
                        &built.immersion,
                        &built.distribution,
                        &x,
                        PREDICATE_TOL,
                    )
                    .unwrap();
                    assert!(ci, "geodesic but not curvature invariant at {x:?} ({res})");
                }
                let pc =
                    classify_point(&built.immersion, &built.distribution, &x, PREDICATE_TOL)
                        .unwrap();
                let flipped = built.immersion.flipped();
                let pf = classify_point(&flipped, &built.distribution, &x, PREDICATE_TOL).unwrap();
                assert_eq!(pc.case_i, pf.case_i);
                assert_eq!(pc.case_ii, pf.case_ii);
                assert_eq!(pc.case_iii, pf.case_iii);
                assert_eq!(pc.flat_point, pf.flat_point);
            }
        }
    }

    /// Brute-force oracle: test the three conditions straight from `h`, the
    /// raw generator span, and a kernel basis, sharing no code with
    /// `classify_point`.
    fn brute_force_class(f: &ImmersionField, d: &DistributionField, x: &[f64]) -> (bool, bool, bool) {
        let jet = geometry_jet(f, x, Backend::Dual).unwrap();
        let n = f.dim();
        let raw = d.eval_basis(x);
        let k = raw.ncols();
        // case (i): h(V_a, V_b) = 0 for raw generators, scaled by their size
        let mut case_i = true;
        for a in 0..k {
            for b in 0..k {
                let va = raw.column(a);
                let vb = raw.column(b);
                let h = (va.transpose() * &jet.h * vb)[(0, 0)];
                let scale = jet.norm(&va.into_owned()) * jet.norm(&vb.into_owned());
                if h.abs() > 1e-5 * jet.shape_norm().max(1e-12) * scale {
                    case_i = false;
                }
            }
        }
        // case (ii): solve for A V_a in the generator span and check the
        // ambient-pushforward mismatch
        let mut case_ii = true;
        for a in 0..k {
            let av = &jet.a * raw.column(a);
            // least squares in the g inner product
            let mut gram = nalgebra::DMatrix::zeros(k, k);
            let mut rhs = DVector::zeros(k);
            for p in 0..k {
                for q in 0..k {
                    gram[(p, q)] =
                        jet.inner(&raw.column(p).into_owned(), &raw.column(q).into_owned());
                }
                rhs[p] = jet.inner(&raw.column(p).into_owned(), &av);
            }
            let coef = gram.lu().solve(&rhs).unwrap();
            let mut recon = DVector::zeros(n);
            for p in 0..k {
                recon += raw.column(p) * coef[p];
            }
            let err = jet.norm(&(&av - recon)) / (1.0 + jet.norm(&av));
            if err > 1e-5 {
                case_ii = false;
            }
        }
        // case (iii) by dimension counting: kernel of A from its raw SVD,
        // intersection dimension from the rank of the stacked bases
        let svd = jet.a.clone().svd(false, true);
        let smax = svd.singular_values.max();
        let vt = svd.v_t.unwrap();
        let mut kernel_cols: Vec<DVector<f64>> = Vec::new();
        for i in 0..n {
            if svd.singular_values[i] <= 1e-6 * smax.max(1.0) {
                kernel_cols.push(vt.row(i).transpose());
            }
        }
        let kd = kernel_cols.len();
        let mut stacked = nalgebra::DMatrix::zeros(n, k + kd);
        for p in 0..k {
            stacked.set_column(p, &raw.column(p).into_owned().normalize());
        }
        for (p, b) in kernel_cols.iter().enumerate() {
            stacked.set_column(k + p, b);
        }
        let sv = stacked.svd(false, false).singular_values;
        let rank = sv.iter().filter(|&&s| s > 1e-6 * sv.max()).count();
        let isect = k + kd - rank;
        let case_iii = isect == k - 1;
        (case_i, case_ii, case_iii)
    }

    #[test]
    fn classification_matches_brute_force() {
        let corpus: Vec<Construction> = vec![generic_tube(), ramp_ruled(), revolution_like()];
        for built in &corpus {
            let n = built.immersion.dim();
            for x in built.immersion.chart().grid(&vec![3; n], 5e-2) {
                let pc =
                    classify_point(&built.immersion, &built.distribution, &x, PREDICATE_TOL)
                        .unwrap();
                let (bi, bii, biii) = brute_force_class(&built.immersion, &built.distribution, &x);
                assert_eq!(pc.case_i, bi, "case i at {x:?}");
                assert_eq!(pc.case_ii, bii, "case ii at {x:?}");
                assert_eq!(pc.case_iii, biii, "case iii at {x:?}");
            }
        }
    }

    #[test]
    fn adapted_frame_on_surface_like() {
        let built = revolution_like();
        let grid = built.immersion.chart().grid(&[3, 3, 3], 0.1);
        let frame = adapted_frame(&built.immersion, &built.distribution, 0, &grid).unwrap();
        for p in &frame.points {
            assert!(p.eq_shape_residual <= 1e-5, "shape {}", p.eq_shape_residual);
            assert!(
                p.eq_transport_residual <= 1e-4,
                "transport {} at {:?}",
                p.eq_transport_residual,
                p.x
            );
            assert!(p.eq_lambda_residual <= 1e-4, "lambda {}", p.eq_lambda_residual);
            assert!(p.vectors.mu.abs() > 1e-3 && p.vectors.rho.abs() > 1e-3);
            // the warp ratio matches its defining scalars
            assert!((p.phi_w - p.vectors.mu / p.vectors.rho).abs() < 1e-12);
        }
    }

    #[test]
    fn adapted_frame_rejects_flat_and_rotation_charts() {
        let f = plane_immersion();
        let d = DistributionField::new(vec![const_field(f.chart(), vec![1.0, 0.0])]);
        assert!(matches!(
            adapted_frame(&f, &d, 1, &[vec![0.0, 0.0]]),
            Err(ClassifyError::NotCoupledCase { .. })
        ));

        struct Circle;
        impl ChartMap for Circle {
            fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
                let r = S::from_f64(0.5);
                vec![r * x[0].cos(), r * x[0].sin()]
            }
        }
        let profile = SmoothMap::new(2, ChartBox::new(vec![-3.0], vec![3.0]), Circle);
        let torus = build_rotation_hypersurface(&profile, 2.0).unwrap();
        assert!(matches!(
            adapted_frame(&torus.immersion, &torus.distribution, 1, &[vec![0.3, 1.0]]),
            Err(ClassifyError::NotCoupledCase { .. })
        ));
    }

    #[test]
    fn residual_suite_on_surface_like() {
        let built = revolution_like();
        let grid = built.immersion.chart().grid(&[2, 2, 2], 0.2);
        let frame = adapted_frame(&built.immersion, &built.distribution, 0, &grid).unwrap();
        for x in &grid {
            let suite = residual_suite(&frame, x).unwrap();
            assert!(
                suite.worst() <= SUITE_TOL,
                "suite at {x:?}: {:?}",
                suite.as_map()
            );
        }
    }

    /// A hand-built frame on a flat chart violating exactly one identity:
    /// constant frame, μ ≡ 0, ρ varying along the kernel direction.
    struct PlantedViolation {
        f: ImmersionField,
    }

    impl FrameField for PlantedViolation {
        fn immersion(&self) -> &ImmersionField {
            &self.f
        }
        fn vectors(&self, x: &[f64]) -> Result<FrameVectors, ClassifyError> {
            Ok(FrameVectors {
                y: DVector::from_vec(vec![1.0, 0.0, 0.0]),
                xdir: DVector::from_vec(vec![0.0, 1.0, 0.0]),
                t: vec![DVector::from_vec(vec![0.0, 0.0, 1.0])],
                beta: 0.0,
                mu: 0.0,
                rho: 1.0 + 0.5 * x[2],
            })
        }
    }

    #[test]
    fn planted_violation_trips_only_its_residual() {
        struct Flat3;
        impl ChartMap for Flat3 {
            fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
                vec![x[0], x[1], x[2], S::zero()]
            }
        }
        let f = ImmersionField::new(SmoothMap::new(4, ChartBox::centered(3, 1.0), Flat3));
        let frame = PlantedViolation { f };
        let suite = residual_suite(&frame, &[0.1, 0.0, 0.2]).unwrap();
        // T(ρ) = 0.5 but ρ⟨∇_X X, T⟩ = 0
        assert!(suite.r7a >= 0.1, "r7a {}", suite.r7a);
        for (name, value) in suite.as_map() {
            if name != "r7a" {
                assert!(value <= 1e-8, "{name} = {value}");
            }
        }
    }
}
