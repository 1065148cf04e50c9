//! Pointwise extrinsic and intrinsic geometry of immersed hypersurface
//! charts: fundamental forms, shape operator, Christoffel symbols, covariant
//! derivatives, curvature via the Gauss equation, relative nullity, and
//! metric-aware subspace algebra.

pub mod generic;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::numjet::{self, Backend, ChartBox, JetError, SmoothMap};

/// Relative singular-value cutoff for rank decisions (caller-overridable).
pub const RANK_TOL: f64 = 1e-6;
/// Immersion degeneracy threshold on the Jacobian's singular values.
pub const IMMERSION_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error("immersion degenerates at {point:?}: smallest/largest singular value {ratio:.3e}")]
    Degenerate { point: Vec<f64>, ratio: f64 },
    #[error("distribution is rank deficient at {point:?}: expected rank {expected}, got {got}")]
    RankDeficient {
        point: Vec<f64>,
        expected: usize,
        got: usize,
    },
    #[error("subspaces use different metrics (max entry difference {0:.3e})")]
    MetricMismatch(f64),
    #[error("internal cross-check failed: two covariant-derivative routes differ by {0:.3e}")]
    CrossCheck(f64),
}

/// Unit-normal sign convention of a chart.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Orientation {
    Positive,
    Negative,
}

impl Orientation {
    pub fn sign(self) -> f64 {
        match self {
            Orientation::Positive => 1.0,
            Orientation::Negative => -1.0,
        }
    }
    pub fn flipped(self) -> Self {
        match self {
            Orientation::Positive => Orientation::Negative,
            Orientation::Negative => Orientation::Positive,
        }
    }
}

/// A parametrized hypersurface chart `U ⊂ R^n → R^{n+1}` with jet evaluation.
#[derive(Clone)]
pub struct ImmersionField {
    map: SmoothMap,
    orientation: Orientation,
}

impl ImmersionField {
    pub fn new(map: SmoothMap) -> Self {
        assert_eq!(
            map.codomain_dim(),
            map.domain_dim() + 1,
            "hypersurface chart must map R^n into R^(n+1)"
        );
        ImmersionField {
            map,
            orientation: Orientation::Positive,
        }
    }

    pub fn with_orientation(mut self, orientation: Orientation) -> Self {
        self.orientation = orientation;
        self
    }

    pub fn flipped(&self) -> Self {
        let mut f = self.clone();
        f.orientation = f.orientation.flipped();
        f
    }

    pub fn map(&self) -> &SmoothMap {
        &self.map
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn dim(&self) -> usize {
        self.map.domain_dim()
    }

    pub fn ambient_dim(&self) -> usize {
        self.map.codomain_dim()
    }

    pub fn chart(&self) -> &ChartBox {
        self.map.chart()
    }
}

/// Rank-`k` field of tangent subspaces, given by `k` generating vector fields
/// on the chart (each a map from the chart into `R^n`).
#[derive(Clone)]
pub struct DistributionField {
    rank: usize,
    generators: Vec<SmoothMap>,
}

impl DistributionField {
    pub fn new(generators: Vec<SmoothMap>) -> Self {
        assert!(!generators.is_empty());
        let n = generators[0].codomain_dim();
        assert!(generators.iter().all(|g| g.codomain_dim() == n));
        DistributionField {
            rank: generators.len(),
            generators,
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn generators(&self) -> &[SmoothMap] {
        &self.generators
    }

    /// Raw generator matrix (columns) at a point.
    pub fn eval_basis(&self, x: &[f64]) -> DMatrix<f64> {
        let n = self.generators[0].codomain_dim();
        let mut m = DMatrix::zeros(n, self.rank);
        for (j, g) in self.generators.iter().enumerate() {
            let v = g.eval::<f64>(x);
            for i in 0..n {
                m[(i, j)] = v[i];
            }
        }
        m
    }
}

/// Pointwise geometric package of an immersion chart.
#[derive(Clone, Debug)]
pub struct GeometryJet {
    pub point: Vec<f64>,
    /// Ambient Jacobian `(n+1) x n` (pushforward of coordinate fields).
    pub jacobian: DMatrix<f64>,
    /// Per ambient component, `n x n` second partials of the chart map.
    pub second: Vec<DMatrix<f64>>,
    /// First fundamental form.
    pub g: DMatrix<f64>,
    pub g_inv: DMatrix<f64>,
    /// Unit normal in `R^{n+1}`.
    pub eta: DVector<f64>,
    /// Second fundamental form `⟨∂²f, η⟩`.
    pub h: DMatrix<f64>,
    /// Shape operator `g⁻¹ h` in the chart basis.
    pub a: DMatrix<f64>,
    /// Christoffel symbols, `gamma[k][(i, j)] = Γ^k_{ij}`.
    pub gamma: Vec<DMatrix<f64>>,
}

impl GeometryJet {
    pub fn dim(&self) -> usize {
        self.g.nrows()
    }

    /// `⟨u, v⟩` in the induced metric.
    pub fn inner(&self, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        (u.transpose() * &self.g * v)[(0, 0)]
    }

    pub fn norm(&self, u: &DVector<f64>) -> f64 {
        self.inner(u, u).max(0.0).sqrt()
    }

    /// Symmetrized shape operator `g^{1/2} A g^{-1/2}` (Euclidean-symmetric).
    pub fn shape_symmetrized(&self) -> DMatrix<f64> {
        let (gs, gs_inv) = symmetric_sqrt(&self.g);
        let s = &gs * &self.a * &gs_inv;
        0.5 * (&s + s.transpose())
    }

    /// Operator norm of the shape operator (largest principal curvature).
    pub fn shape_norm(&self) -> f64 {
        self.shape_symmetrized()
            .symmetric_eigenvalues()
            .iter()
            .fold(0.0, |m, &l| m.max(l.abs()))
    }

    /// Principal curvatures (eigenvalues of `A`), ascending.
    pub fn principal_curvatures(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self
            .shape_symmetrized()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ev
    }
}

/// Symmetric square root and its inverse of an SPD matrix.
pub fn symmetric_sqrt(g: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let eig = g.clone().symmetric_eigen();
    let n = g.nrows();
    let mut s = DMatrix::zeros(n, n);
    let mut s_inv = DMatrix::zeros(n, n);
    for i in 0..n {
        let l = eig.eigenvalues[i].max(0.0).sqrt();
        s[(i, i)] = l;
        s_inv[(i, i)] = 1.0 / l;
    }
    let q = &eig.eigenvectors;
    (q * &s * q.transpose(), q * &s_inv * q.transpose())
}

/// Generalized cross product of the columns of `jac`, oriented so that
/// `det[∂_1 f, …, ∂_n f, ν] > 0`.
pub fn cross_normal(jac: &DMatrix<f64>) -> DVector<f64> {
    let amb = jac.nrows();
    let n = jac.ncols();
    assert_eq!(amb, n + 1);
    let mut nu = DVector::zeros(amb);
    for k in 0..amb {
        let minor = jac.clone().remove_row(k);
        let sign = if (k + n) % 2 == 0 { 1.0 } else { -1.0 };
        nu[k] = sign * minor.determinant();
    }
    nu
}

/// Evaluate the full pointwise geometric package at a chart point.
pub fn geometry_jet(
    f: &ImmersionField,
    x: &[f64],
    backend: Backend,
) -> Result<GeometryJet, GeometryError> {
    let jet = numjet::eval_jet(f.map(), x, 2, backend)?;
    let n = f.dim();
    let jac = jet.first.clone();

    let svd = jac.clone().svd(false, false);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if smin < IMMERSION_TOL * smax {
        return Err(GeometryError::Degenerate {
            point: x.to_vec(),
            ratio: smin / smax,
        });
    }

    let g = jac.transpose() * &jac;
    let g_inv = g
        .clone()
        .try_inverse()
        .ok_or(GeometryError::Degenerate {
            point: x.to_vec(),
            ratio: 0.0,
        })?;

    let mut eta = cross_normal(&jac) * f.orientation().sign();
    eta /= eta.norm();

    let mut h = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let mut s = 0.0;
            for c in 0..n + 1 {
                s += jet.second[c][(i, j)] * eta[c];
            }
            h[(i, j)] = s;
        }
    }
    let a = &g_inv * &h;

    // ∂_k g_ij from second-order jets, then the Koszul formula.
    let mut dg = vec![DMatrix::zeros(n, n); n];
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for c in 0..n + 1 {
                    s += jet.second[c][(k, i)] * jac[(c, j)] + jac[(c, i)] * jet.second[c][(k, j)];
                }
                dg[k][(i, j)] = s;
            }
        }
    }
    let mut gamma = vec![DMatrix::zeros(n, n); n];
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for l in 0..n {
                    s += g_inv[(k, l)] * (dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)]);
                }
                gamma[k][(i, j)] = 0.5 * s;
            }
        }
    }

    Ok(GeometryJet {
        point: x.to_vec(),
        jacobian: jac,
        second: jet.second,
        g,
        g_inv,
        eta,
        h,
        a,
        gamma,
    })
}

/// Gauss-equation curvature operator `R(X,Y)Z = ⟨AY,Z⟩AX − ⟨AX,Z⟩AY`,
/// inner products in the induced metric, all vectors in chart coordinates.
pub fn curvature_operator(
    jet: &GeometryJet,
    x: &DVector<f64>,
    y: &DVector<f64>,
    z: &DVector<f64>,
) -> DVector<f64> {
    let ax = &jet.a * x;
    let ay = &jet.a * y;
    &ax * jet.inner(&ay, z) - &ay * jet.inner(&ax, z)
}

/// Relative nullity `Δ = ker A` and the rank of the shape operator.
pub fn relative_nullity(jet: &GeometryJet, tol: f64) -> (Subspace, usize) {
    let (_, gs_inv) = symmetric_sqrt(&jet.g);
    let s = jet.shape_symmetrized();
    let eig = s.symmetric_eigen();
    let n = jet.dim();
    let smax = eig.eigenvalues.iter().fold(0.0f64, |m, &l| m.max(l.abs()));
    let cutoff = tol * smax.max(1.0);
    let mut kernel_cols = Vec::new();
    let mut rank = 0;
    for i in 0..n {
        if eig.eigenvalues[i].abs() > cutoff {
            rank += 1;
        } else {
            kernel_cols.push(eig.eigenvectors.column(i).into_owned());
        }
    }
    let mut basis = DMatrix::zeros(n, kernel_cols.len());
    for (j, w) in kernel_cols.iter().enumerate() {
        // eigenvectors of the symmetrized operator pull back to a
        // g-orthonormal kernel basis
        basis.set_column(j, &(&gs_inv * w));
    }
    (
        Subspace {
            basis,
            metric: jet.g.clone(),
        },
        rank,
    )
}

/// Result of a covariant derivative with its internal consistency residual.
#[derive(Clone, Debug)]
pub struct CovariantDerivative {
    /// `∇_V W` at the point, in chart coordinates.
    pub value: DVector<f64>,
    /// Relative disagreement between the Christoffel route and the projected
    /// ambient route.
    pub cross_residual: f64,
}

/// `∇_V W` at `x`, computed two ways: via Christoffel symbols and as the
/// tangential part of the ambient directional derivative.
pub fn covariant_derivative(
    f: &ImmersionField,
    v: &SmoothMap,
    w: &SmoothMap,
    x: &[f64],
    backend: Backend,
) -> Result<CovariantDerivative, GeometryError> {
    let jet = geometry_jet(f, x, backend)?;
    let n = f.dim();
    let jv = numjet::eval_jet(v, x, 1, backend)?;
    let jw = numjet::eval_jet(w, x, 1, backend)?;
    let vv = &jv.value;
    let wv = &jw.value;

    // Christoffel route
    let mut value = DVector::zeros(n);
    for k in 0..n {
        let mut s = 0.0;
        for i in 0..n {
            s += vv[i] * jw.first[(k, i)];
            for j in 0..n {
                s += vv[i] * wv[j] * jet.gamma[k][(i, j)];
            }
        }
        value[k] = s;
    }

    // Ambient route: D_V (f_* W), projected tangentially
    let amb = n + 1;
    let mut ambient = DVector::zeros(amb);
    for c in 0..amb {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += vv[i] * wv[j] * jet.second[c][(i, j)];
            }
            let dw: f64 = (0..n).map(|j| jw.first[(i, j)] * vv[j]).sum();
            s += jet.jacobian[(c, i)] * dw;
        }
        ambient[c] = s;
    }
    let rhs = jet.jacobian.transpose() * ambient;
    let tangential = &jet.g_inv * rhs;

    let cross_residual = (&tangential - &value).norm() / (1.0 + value.norm());
    Ok(CovariantDerivative {
        value,
        cross_residual,
    })
}

/// Intrinsic curvature tensor `R^l_{ijk}` from finite differences of the
/// Christoffel symbols; independent third-order cross-check of the pipeline.
pub fn intrinsic_curvature_fd(
    f: &ImmersionField,
    x: &[f64],
    backend: Backend,
    step: f64,
) -> Result<Vec<f64>, GeometryError> {
    let n = f.dim();
    let center = geometry_jet(f, x, backend)?;
    // dgamma[i][k][(j,l)] = ∂_i Γ^k_{jl}
    let mut dgamma = vec![vec![DMatrix::zeros(n, n); n]; n];
    for i in 0..n {
        let mut xp = x.to_vec();
        xp[i] += step;
        let mut xm = x.to_vec();
        xm[i] -= step;
        let jp = geometry_jet(f, &xp, backend)?;
        let jm = geometry_jet(f, &xm, backend)?;
        for k in 0..n {
            dgamma[i][k] = (&jp.gamma[k] - &jm.gamma[k]) / (2.0 * step);
        }
    }
    let mut r = vec![0.0; n * n * n * n];
    for l in 0..n {
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let mut s = dgamma[i][l][(j, k)] - dgamma[j][l][(i, k)];
                    for m in 0..n {
                        s += center.gamma[l][(i, m)] * center.gamma[m][(j, k)]
                            - center.gamma[l][(j, m)] * center.gamma[m][(i, k)];
                    }
                    r[((l * n + i) * n + j) * n + k] = s;
                }
            }
        }
    }
    Ok(r)
}

/// A tangent subspace at a point, stored as a metric-orthonormal basis.
#[derive(Clone, Debug)]
pub struct Subspace {
    /// `n x k` basis, `basisᵀ g basis = I`.
    pub basis: DMatrix<f64>,
    pub metric: DMatrix<f64>,
}

impl Subspace {
    /// Orthonormalize a raw span against the metric, truncating at `tol`
    /// relative rank.
    pub fn from_span(span: &DMatrix<f64>, metric: &DMatrix<f64>, tol: f64) -> Self {
        let n = span.nrows();
        let mut cols: Vec<DVector<f64>> = Vec::new();
        let norm0: f64 = span
            .column_iter()
            .map(|c| g_norm(metric, &c.into_owned()))
            .fold(0.0, f64::max)
            .max(1e-300);
        for j in 0..span.ncols() {
            let mut v = span.column(j).into_owned();
            for b in &cols {
                let c = g_inner(metric, b, &v);
                v -= b * c;
            }
            let nv = g_norm(metric, &v);
            if nv > tol * norm0 {
                cols.push(v / nv);
            }
        }
        let mut basis = DMatrix::zeros(n, cols.len());
        for (j, c) in cols.iter().enumerate() {
            basis.set_column(j, c);
        }
        Subspace {
            basis,
            metric: metric.clone(),
        }
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    fn check_metric(&self, other: &Subspace) -> Result<(), GeometryError> {
        let d = (&self.metric - &other.metric).amax();
        if d > 1e-9 {
            return Err(GeometryError::MetricMismatch(d));
        }
        Ok(())
    }

    /// Principal cosines between the two subspaces, descending.
    pub fn principal_cosines(&self, other: &Subspace) -> Result<Vec<f64>, GeometryError> {
        self.check_metric(other)?;
        if self.dim() == 0 || other.dim() == 0 {
            return Ok(Vec::new());
        }
        let m = self.basis.transpose() * &self.metric * &other.basis;
        let mut sv: Vec<f64> = m.svd(false, false).singular_values.iter().copied().collect();
        sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
        Ok(sv)
    }

    /// Largest principal sine between `self` and its projection onto `other`
    /// (0 iff `self ⊆ other`). Empty `self` gives 0; `self` larger than
    /// `other` gives 1.
    pub fn containment_residual(&self, other: &Subspace) -> Result<f64, GeometryError> {
        if self.dim() == 0 {
            return Ok(0.0);
        }
        let cos = self.principal_cosines(other)?;
        if cos.len() < self.dim() {
            return Ok(1.0);
        }
        let cmin = cos[self.dim() - 1].clamp(-1.0, 1.0);
        Ok((1.0 - cmin * cmin).max(0.0).sqrt())
    }

    /// Dimension of the intersection: principal cosines within `tol` of 1.
    pub fn intersection_dim(&self, other: &Subspace, tol: f64) -> Result<usize, GeometryError> {
        let cos = self.principal_cosines(other)?;
        Ok(cos.iter().filter(|&&c| c >= 1.0 - tol).count())
    }

    /// Metric-orthogonal complement within the full tangent space.
    pub fn orthogonal_complement(&self) -> Subspace {
        let n = self.basis.nrows();
        let mut cols: Vec<DVector<f64>> = self.basis.column_iter().map(|c| c.into_owned()).collect();
        let k = cols.len();
        for j in 0..n {
            if cols.len() == n {
                break;
            }
            let mut v = DVector::zeros(n);
            v[j] = 1.0;
            for b in &cols {
                let c = g_inner(&self.metric, b, &v);
                v -= b * c;
            }
            let nv = g_norm(&self.metric, &v);
            if nv > 1e-8 {
                cols.push(v / nv);
            }
        }
        let mut basis = DMatrix::zeros(n, cols.len() - k);
        for (j, c) in cols[k..].iter().enumerate() {
            basis.set_column(j, c);
        }
        Subspace {
            basis,
            metric: self.metric.clone(),
        }
    }
}

pub fn g_inner(g: &DMatrix<f64>, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
    (u.transpose() * g * v)[(0, 0)]
}

pub fn g_norm(g: &DMatrix<f64>, u: &DVector<f64>) -> f64 {
    g_inner(g, u, u).max(0.0).sqrt()
}

/// Image `A(D)` of a distribution under the shape operator, as a subspace.
pub fn shape_image(jet: &GeometryJet, d_basis: &DMatrix<f64>, tol: f64) -> Subspace {
    let image = &jet.a * d_basis;
    Subspace::from_span(&image, &jet.g, tol)
}
