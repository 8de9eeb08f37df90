//! Parameterized curves of invertible matrices, their lengths, the
//! left-invariant covariant derivative, geodesic residuals and competitor
//! curves.
//!
//! A [`Curve`] is a pure function of `t`. Evaluators are expected to accept
//! parameters slightly outside `[0, 1]` (by the finite-difference step) so that
//! central differences work at the endpoints.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{GeoError, Result};
use crate::manifolds::{
    congruence_norm, left_exp_matrix, left_metric_at, GroupPoint, MetricKind, PolarGeodesic, SpdGeodesic,
    UnitaryGeodesic,
};
use crate::matfun::{
    bracket, fro_norm, herm_split, hermitian_part, matrix_exp, polar_decompose, polar_derivative, real,
    solve_left, CMatrix, SpdMatrix,
};
use crate::sampling::{gaussian_matrix, random_anti_hermitian, rng_for, uniform, with_norm};
use crate::subgroups::{project_to_algebra, LieAlgebraSpec, SubgroupContext};

pub const DEFAULT_STEP: f64 = 1e-3;
pub const DEFAULT_PANELS: usize = 256;
/// Relative residual above which a curve or field is not in the subgroup.
pub const SUBGROUP_TOL: f64 = 1e-6;

pub type MatrixFn = Arc<dyn Fn(f64) -> CMatrix + Send + Sync>;

/// `t -> matrix` with an optional analytic velocity.
#[derive(Clone)]
pub struct Curve {
    eval: MatrixFn,
    velocity: Option<MatrixFn>,
    h: f64,
    panels: usize,
}

impl fmt::Debug for Curve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Curve")
            .field("analytic_velocity", &self.velocity.is_some())
            .field("h", &self.h)
            .field("panels", &self.panels)
            .finish()
    }
}

impl Curve {
    pub fn new(eval: impl Fn(f64) -> CMatrix + Send + Sync + 'static) -> Self {
        Curve { eval: Arc::new(eval), velocity: None, h: DEFAULT_STEP, panels: DEFAULT_PANELS }
    }

    pub fn with_velocity(mut self, v: impl Fn(f64) -> CMatrix + Send + Sync + 'static) -> Self {
        self.velocity = Some(Arc::new(v));
        self
    }

    /// Drops the analytic velocity so every derivative is a finite difference.
    pub fn without_velocity(mut self) -> Self {
        self.velocity = None;
        self
    }

    pub fn with_step(mut self, h: f64) -> Self {
        assert!(h > 0.0 && h.is_finite(), "finite-difference step must be positive");
        self.h = h;
        self
    }

    pub fn with_panels(mut self, panels: usize) -> Self {
        assert!(panels > 0, "panel count must be positive");
        self.panels = panels;
        self
    }

    pub fn step(&self) -> f64 {
        self.h
    }

    pub fn panels(&self) -> usize {
        self.panels
    }

    pub fn has_analytic_velocity(&self) -> bool {
        self.velocity.is_some()
    }

    pub fn constant(x: CMatrix) -> Self {
        let zero = CMatrix::zeros(x.nrows(), x.ncols());
        Curve::new(move |_| x.clone()).with_velocity(move |_| zero.clone())
    }

    /// `t -> exp(t x)`.
    pub fn exp_ray(x: CMatrix) -> Self {
        let x2 = x.clone();
        Curve::new(move |t| matrix_exp(&x.map(|z| z * t))).with_velocity(move |t| &x2 * matrix_exp(&x2.map(|z| z * t)))
    }

    /// `t -> g exp(t v*) exp(t (v - v*))`, the left-invariant geodesic from `g` with initial velocity `g v`.
    pub fn left_exp_ray(g: CMatrix, v: CMatrix) -> Self {
        let (g2, v2) = (g.clone(), v.clone());
        Curve::new(move |t| left_exp_matrix(&g, &v.map(|z| z * t))).with_velocity(move |t| {
            let vs = v2.adjoint();
            let w = &v2 - &vs;
            let a = matrix_exp(&vs.map(|z| z * t));
            let b = matrix_exp(&w.map(|z| z * t));
            &g2 * (&a * &vs * &b + &a * &b * &w)
        })
    }

    pub fn spd_geodesic(geo: SpdGeodesic) -> Self {
        let geo2 = geo.clone();
        Curve::new(move |t| geo.at(t)).with_velocity(move |t| geo2.velocity(t))
    }

    pub fn unitary_geodesic(geo: UnitaryGeodesic) -> Self {
        let geo2 = geo.clone();
        Curve::new(move |t| geo.at(t)).with_velocity(move |t| geo2.velocity(t))
    }

    pub fn polar_geodesic(geo: PolarGeodesic) -> Self {
        let geo2 = geo.clone();
        Curve::new(move |t| geo.at(t)).with_velocity(move |t| geo2.velocity(t))
    }

    /// `(1 - t) p + t q`.
    pub fn chord(p: CMatrix, q: CMatrix) -> Self {
        let d = &q - &p;
        Curve::new(move |t| p.map(|z| z * (1.0 - t)) + q.map(|z| z * t)).with_velocity(move |_| d.clone())
    }

    /// The pointwise product `self(t) other(t)`.
    pub fn product(&self, other: &Curve) -> Curve {
        let (a, b) = (self.clone(), other.clone());
        let (a2, b2) = (self.clone(), other.clone());
        Curve::new(move |t| a.at(t) * b.at(t))
            .with_velocity(move |t| a2.velocity(t) * b2.at(t) + a2.at(t) * b2.velocity(t))
            .with_step(self.h)
            .with_panels(self.panels)
    }

    /// `t -> self(t^2)`.
    pub fn reparam_square(&self) -> Curve {
        let (a, a2) = (self.clone(), self.clone());
        Curve::new(move |t| a.at(t * t)).with_velocity(move |t| a2.velocity(t * t).map(|z| z * (2.0 * t)))
    }

    pub fn at(&self, t: f64) -> CMatrix {
        (self.eval)(t)
    }

    /// Analytic velocity when available, central difference otherwise.
    pub fn velocity(&self, t: f64) -> CMatrix {
        match &self.velocity {
            Some(v) => v(t),
            None => self.fd_velocity(t),
        }
    }

    pub fn fd_velocity(&self, t: f64) -> CMatrix {
        let h = self.h;
        (self.at(t + h) - self.at(t - h)).map(|z| z / (2.0 * h))
    }

    pub fn fd_acceleration(&self, t: f64) -> CMatrix {
        let h = self.h;
        (self.at(t + h) - self.at(t).map(|z| z * 2.0) + self.at(t - h)).map(|z| z / (h * h))
    }

    /// Largest relative gap between the analytic and difference velocities at 5 seeded parameters.
    pub fn velocity_defect(&self, seed: u64) -> f64 {
        let mut rng = rng_for(seed, 0x76_656c);
        (0..5)
            .map(|_| {
                let t = uniform(&mut rng, 0.0, 1.0);
                let v = self.velocity(t);
                fro_norm(&(&v - self.fd_velocity(t))) / fro_norm(&v).max(1.0)
            })
            .fold(0.0, f64::max)
    }

    /// `k + 1` equally spaced samples on `[0, 1]`.
    pub fn sample(&self, k: usize) -> Vec<(f64, CMatrix)> {
        let k = k.max(1);
        (0..=k)
            .map(|i| {
                let t = i as f64 / k as f64;
                (t, self.at(t))
            })
            .collect()
    }
}

/// A field of tangent vectors along a curve.
#[derive(Clone)]
pub struct TangentField {
    field: MatrixFn,
}

impl fmt::Debug for TangentField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("TangentField")
    }
}

impl TangentField {
    pub fn new(field: impl Fn(f64) -> CMatrix + Send + Sync + 'static) -> Self {
        TangentField { field: Arc::new(field) }
    }

    /// `t -> c'(t)`.
    pub fn velocity_of(c: &Curve) -> Self {
        let c = c.clone();
        TangentField::new(move |t| c.velocity(t))
    }

    /// `t -> c(t) w`, left translate of a fixed algebra element.
    pub fn left_translate(c: &Curve, w: CMatrix) -> Self {
        let c = c.clone();
        TangentField::new(move |t| c.at(t) * &w)
    }

    /// `t -> f(t) eta(t)`.
    pub fn scaled(&self, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        let eta = self.clone();
        TangentField::new(move |t| eta.at(t).map(|z| z * f(t)))
    }

    pub fn sum(&self, other: &TangentField) -> Self {
        let (a, b) = (self.clone(), other.clone());
        TangentField::new(move |t| a.at(t) + b.at(t))
    }

    pub fn at(&self, t: f64) -> CMatrix {
        (self.field)(t)
    }
}

/// Speed of the tangent vector `v` at `x` in the given metric.
pub fn speed(metric: MetricKind, x: &CMatrix, v: &CMatrix) -> Result<f64> {
    match metric {
        MetricKind::LeftInvariant(p) => left_metric_at(x, v, p),
        MetricKind::PositiveCone => {
            let p = SpdMatrix::new(x.clone())?;
            Ok(congruence_norm(p.eigen(), &hermitian_part(v)))
        }
        MetricKind::PolarProduct => {
            let (u, p) = polar_decompose(x)?;
            let pv = polar_derivative(&u, &p, v);
            Ok(pv.unitary_speed.hypot(pv.positive_speed))
        }
    }
}

/// Sum with a fixed binary-tree order, independent of how the terms were computed.
fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Composite Simpson rule on `K` panels from `2K + 1` equally spaced samples.
fn simpson(samples: &[f64]) -> f64 {
    let m = samples.len() - 1;
    debug_assert!(m >= 2 && m % 2 == 0);
    let h = 1.0 / m as f64;
    let weighted: Vec<f64> = samples
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let w = if i == 0 || i == m {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            w * s
        })
        .collect();
    pairwise_sum(&weighted) * h / 3.0
}

fn speeds_on_grid(c: &Curve, metric: MetricKind, nodes: usize) -> Result<Vec<f64>> {
    let metric = metric.validate()?;
    let m = nodes - 1;
    (0..nodes)
        .into_par_iter()
        .map(|i| {
            let t = i as f64 / m as f64;
            speed(metric, &c.at(t), &c.velocity(t))
        })
        .collect()
}

/// Length with `K` and `2K` panels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LengthReport {
    pub length: f64,
    /// Simpson value with `2K` panels
    pub refined: f64,
    /// `|refined - length| / max(length, 1e-300)`
    pub relative_change: f64,
}

/// `∫_0^1 |c'(t)| dt` by composite Simpson on the curve's panel count.
pub fn curve_length(c: &Curve, metric: MetricKind) -> Result<f64> {
    let speeds = speeds_on_grid(c, metric, 2 * c.panels + 1)?;
    Ok(simpson(&speeds))
}

/// [`curve_length`] together with the panel-doubling comparison.
pub fn length_report(c: &Curve, metric: MetricKind) -> Result<LengthReport> {
    let fine = speeds_on_grid(c, metric, 4 * c.panels + 1)?;
    let coarse: Vec<f64> = fine.iter().step_by(2).copied().collect();
    let length = simpson(&coarse);
    let refined = simpson(&fine);
    let relative_change = if length == 0.0 && refined == 0.0 {
        0.0
    } else {
        (refined - length).abs() / length.abs().max(1e-300)
    };
    Ok(LengthReport { length, refined, relative_change })
}

/// `c(t) (mu' + ([b, mu] + [b, mu*] + [mu, b*]) / 2)` with `b = c^{-1} c'`, `mu = c^{-1} eta`.
///
/// `mu'` is a central difference with the curve's step.
pub fn covariant_derivative(c: &Curve, eta: &TangentField, t: f64) -> Result<CMatrix> {
    let x = c.at(t);
    Ok(&x * reduced_covariant_derivative(c, eta, t)?)
}

/// `c^{-1} D_t eta`, the covariant derivative pulled back to the algebra.
pub fn reduced_covariant_derivative(c: &Curve, eta: &TangentField, t: f64) -> Result<CMatrix> {
    let h = c.h;
    let x = c.at(t);
    let beta = solve_left(&x, &c.velocity(t))?;
    let mu = solve_left(&x, &eta.at(t))?;
    let mu_plus = solve_left(&c.at(t + h), &eta.at(t + h))?;
    let mu_minus = solve_left(&c.at(t - h), &eta.at(t - h))?;
    let mu_dot = (mu_plus - mu_minus).map(|z| z / (2.0 * h));
    let bs = beta.adjoint();
    let ms = mu.adjoint();
    let corr = bracket(&beta, &mu) + bracket(&beta, &ms) + bracket(&mu, &bs);
    Ok(mu_dot + corr.map(|z| z * 0.5))
}

fn grid_points(grid: usize) -> Result<Vec<f64>> {
    if grid < 2 {
        return Err(GeoError::ConfigInvalid(format!("grid needs at least 2 points, got {grid}")));
    }
    Ok((0..grid).map(|i| i as f64 / (grid - 1) as f64).collect())
}

/// Largest geodesic-equation defect along `c`, relative to the largest squared speed.
///
/// All derivatives are central differences with the curve's step, so this is
/// an oracle independent of any analytic velocity the curve carries.
/// * `PositiveCone`: `|c^{-1/2} (c'' - c' c^{-1} c') c^{-1/2}|_2` (Euler's equation);
/// * `LeftInvariant(2)`: `|c^{-1} D_t c'|_2` with the covariant derivative above.
pub fn geodesic_residual(c: &Curve, metric: MetricKind, grid: usize) -> Result<f64> {
    let ts = grid_points(grid)?;
    let fd = c.clone().without_velocity();
    let pairs: Vec<(f64, f64)> = match metric {
        MetricKind::PositiveCone => ts
            .par_iter()
            .map(|&t| {
                let x = SpdMatrix::new(hermitian_part(&fd.at(t)))?;
                let v = fd.fd_velocity(t);
                let a = fd.fd_acceleration(t);
                let defect = a - &v * x.inv() * &v;
                let eig = x.eigen();
                Ok((congruence_norm(eig, &defect), congruence_norm(eig, &v).powi(2)))
            })
            .collect::<Result<_>>()?,
        MetricKind::LeftInvariant(2.0) => {
            let field = TangentField::velocity_of(&fd);
            ts.par_iter()
                .map(|&t| {
                    let r = reduced_covariant_derivative(&fd, &field, t)?;
                    let beta = solve_left(&fd.at(t), &fd.fd_velocity(t))?;
                    Ok((fro_norm(&r), fro_norm(&beta).powi(2)))
                })
                .collect::<Result<_>>()?
        }
        other => {
            return Err(GeoError::ConfigInvalid(format!(
                "geodesic residual is defined for PositiveCone and LeftInvariant(2), not {other:?}"
            )))
        }
    };
    let worst = pairs.iter().map(|p| p.0).fold(0.0, f64::max);
    let speed_sq = pairs.iter().map(|p| p.1).fold(0.0, f64::max);
    Ok(if speed_sq > 0.0 { worst / speed_sq } else { worst })
}

fn subgroup_residual(spec: &LieAlgebraSpec, x: &CMatrix, what: &str) -> Result<f64> {
    let (_, r) = project_to_algebra(spec, x)?;
    let tolerance = SUBGROUP_TOL * fro_norm(x).max(1.0);
    if r > tolerance {
        let _ = what;
        return Err(GeoError::NotInSubgroup { residual: r, tolerance });
    }
    Ok(r)
}

/// Largest distance from `c^{-1} D_t eta` to the algebra over the grid.
///
/// Fails with `NotInSubgroup` when `c^{-1} c'` or `c^{-1} eta` leaves the algebra.
pub fn tangency_residual(c: &Curve, eta: &TangentField, spec: &LieAlgebraSpec, grid: usize) -> Result<f64> {
    let ts = grid_points(grid)?;
    let residuals: Vec<f64> = ts
        .par_iter()
        .map(|&t| {
            let x = c.at(t);
            subgroup_residual(spec, &solve_left(&x, &c.velocity(t))?, "velocity")?;
            subgroup_residual(spec, &solve_left(&x, &eta.at(t))?, "field")?;
            let d = reduced_covariant_derivative(c, eta, t)?;
            Ok(project_to_algebra(spec, &d)?.1)
        })
        .collect::<Result<_>>()?;
    Ok(residuals.into_iter().fold(0.0, f64::max))
}

/// How a competitor curve is bent away from its base.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PerturbMode {
    /// `base(t) exp(s(t) w)` with `w` anti-Hermitian, so unitary curves stay unitary.
    Group,
    /// `exp(s w / 2) base(t) exp(s w* / 2)` with `w` arbitrary, so positive curves stay positive.
    Spd,
    /// `base(t) exp(s(t) w)` with `w` arbitrary.
    Polar,
}

/// Endpoint-preserving smooth perturbation of `base`.
///
/// The bump is `s(t) = a sin(pi t) (1 + b sin(2 pi t + phi))` with `b ∈ [0, 1/2)` and
/// `phi` drawn from the seed, and `w` has unit Hilbert-Schmidt norm.
pub fn perturb_curve(base: &Curve, seed: u64, amplitude: f64, mode: PerturbMode) -> Result<Curve> {
    if !(amplitude >= 0.0) || !amplitude.is_finite() {
        return Err(GeoError::ConfigInvalid(format!("amplitude must be nonnegative, got {amplitude}")));
    }
    if amplitude == 0.0 {
        return Ok(base.clone());
    }
    let n = base.at(0.0).nrows();
    let mut rng = rng_for(seed, 0x7065_7274);
    let raw = match mode {
        PerturbMode::Group => random_anti_hermitian(&mut rng, n),
        PerturbMode::Spd | PerturbMode::Polar => gaussian_matrix(&mut rng, n),
    };
    let w = with_norm(&raw, 1.0);
    let b = uniform(&mut rng, 0.0, 0.5);
    let phi = uniform(&mut rng, 0.0, 2.0 * std::f64::consts::PI);
    let pi = std::f64::consts::PI;
    let s = move |t: f64| amplitude * (pi * t).sin() * (1.0 + b * (2.0 * pi * t + phi).sin());
    let ds = move |t: f64| {
        amplitude
            * (pi * (pi * t).cos() * (1.0 + b * (2.0 * pi * t + phi).sin())
                + (pi * t).sin() * b * 2.0 * pi * (2.0 * pi * t + phi).cos())
    };
    let (base_e, base_v) = (base.clone(), base.clone());
    let curve = match mode {
        PerturbMode::Group | PerturbMode::Polar => {
            let (w1, w2) = (w.clone(), w);
            Curve::new(move |t| base_e.at(t) * matrix_exp(&w1.map(|z| z * s(t)))).with_velocity(move |t| {
                let e = matrix_exp(&w2.map(|z| z * s(t)));
                base_v.velocity(t) * &e + base_v.at(t) * &w2 * &e * real(ds(t))
            })
        }
        PerturbMode::Spd => {
            let (w1, w2) = (w.clone(), w);
            Curve::new(move |t| {
                let f = matrix_exp(&w1.map(|z| z * (0.5 * s(t))));
                hermitian_part(&(&f * base_e.at(t) * f.adjoint()))
            })
            .with_velocity(move |t| {
                let f = matrix_exp(&w2.map(|z| z * (0.5 * s(t))));
                let df = &w2 * &f * real(0.5 * ds(t));
                let y = &df * base_v.at(t) * f.adjoint();
                &y + y.adjoint() + hermitian_part(&(&f * base_v.velocity(t) * f.adjoint()))
            })
        }
    };
    Ok(curve.with_step(base.h).with_panels(base.panels))
}

/// `exp(t x) exp(t y)` where `(x, y)` is the anti-Hermitian/Hermitian split of `v ∈ g`.
pub fn polar_group_geodesic(ctx: &SubgroupContext, v: &CMatrix, t: f64) -> Result<GroupPoint> {
    let (_, r) = project_to_algebra(&ctx.spec, v)?;
    let tolerance = crate::subgroups::CLOSURE_TOL * fro_norm(v).max(1.0);
    if r > tolerance {
        return Err(GeoError::NotInSubgroup { residual: r, tolerance });
    }
    let (x, y) = herm_split(v);
    GroupPoint::new(matrix_exp(&x.map(|z| z * t)) * matrix_exp(&y.map(|z| z * t)))
}

/// The same curve as a [`Curve`] with analytic velocity `x e^{tx} e^{ty} + e^{tx} y e^{ty}`.
pub fn polar_group_geodesic_curve(v: &CMatrix) -> Curve {
    let (x, y) = herm_split(v);
    let (x2, y2) = (x.clone(), y.clone());
    Curve::new(move |t| matrix_exp(&x.map(|z| z * t)) * matrix_exp(&y.map(|z| z * t))).with_velocity(move |t| {
        let a = matrix_exp(&x2.map(|z| z * t));
        let b = matrix_exp(&y2.map(|z| z * t));
        &x2 * &a * &b + &a * &y2 * &b
    })
}
