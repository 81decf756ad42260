//! Concrete estimation applications: single rotation averaging, point cloud
//! registration, mesh registration, and absolute pose estimation.
//!
//! Each application knows how to synthesize instances, expose its squared
//! residuals as quadratic polynomials in the canonical variable layout
//! (column-stacked rotation first, then translation), assemble the lifted
//! TLS polynomial optimization instance, and project points back onto its
//! feasible set.

pub mod geom;
mod solve;

pub use geom::{rotation_error_deg, translation_error, Mat3, Vec3};
pub use solve::{weighted_closed_form, weighted_solve, WeightedSolution};

use crate::costs::{tls_objective, ResidualPop};
use crate::poly::{
    ball_constraint, fov_cone_constraints, so3_constraints, so3_row_constraints, Monomial,
    Polynomial,
};
use geom::*;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const DEFAULT_SIGMA_DEG: f64 = 5.0;
pub const DEFAULT_BETA_ANGLE_DEG: f64 = 15.0;
pub const DEFAULT_PCR_NOISE: f64 = 0.01;
pub const DEFAULT_T_BOUND: f64 = 10.0;
pub const DEFAULT_APE_PIXEL_NOISE: f64 = 0.001;
pub const DEFAULT_APE_BETA: f64 = 1e-2;
pub const DEFAULT_ALPHA: f64 = std::f64::consts::FRAC_PI_2;

/// Noise-bound aggregate for squared-norm residuals of 3D Gaussian noise.
pub const PCR_BETA_FACTOR: f64 = 5.54;

#[derive(Debug, Error)]
pub enum AppError {
    #[error("outlier rate must lie in [0, 1), got {0}")]
    InvalidOutlierRate(f64),
    #[error("need at least one measurement")]
    EmptyInstance,
    #[error("measurement index {0} out of range (N = {1})")]
    IndexOutOfRange(usize, usize),
    #[error("operation not defined for {0:?}")]
    UnsupportedKind(InstanceKind),
    #[error("all measurements marked outliers; weighted solve undefined")]
    NoInliers,
    #[error("invalid instance data: {0}")]
    InvalidData(String),
    #[error(transparent)]
    Poly(#[from] crate::poly::PolyError),
    #[error(transparent)]
    Cost(#[from] crate::costs::CostError),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InstanceKind {
    Sra,
    Pcr,
    Mesh,
    Ape,
}

#[derive(Debug, Clone)]
pub struct SraInstance {
    pub rotations: Vec<Mat3>,
    pub betas: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct PcrInstance {
    pub p: Vec<Vec3>,
    pub q: Vec<Vec3>,
    pub betas: Vec<f64>,
    pub t_bound: f64,
}

#[derive(Debug, Clone)]
pub struct MeshInstance {
    /// Point cloud: points with unit normals.
    pub p: Vec<Vec3>,
    pub u: Vec<Vec3>,
    /// Mesh: a point on each face and the face unit normal.
    pub q: Vec<Vec3>,
    pub v: Vec<Vec3>,
    pub betas: Vec<f64>,
    pub t_bound: f64,
}

#[derive(Debug, Clone)]
pub struct ApeInstance {
    /// 3D keypoints (centered at zero) and unit bearing vectors.
    pub p: Vec<Vec3>,
    pub u: Vec<Vec3>,
    pub betas: Vec<f64>,
    pub t_bound: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone)]
pub enum Instance {
    Sra(SraInstance),
    Pcr(PcrInstance),
    Mesh(MeshInstance),
    Ape(ApeInstance),
}

#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub rotation: Mat3,
    pub translation: Option<Vec3>,
    /// `true` marks an inlier.
    pub inlier_mask: Vec<bool>,
}

impl GroundTruth {
    /// Ground truth in the canonical variable layout of the instance.
    pub fn x(&self) -> Vec<f64> {
        let mut x = stack_rotation(&self.rotation).to_vec();
        if let Some(t) = self.translation {
            x.extend_from_slice(&t);
        }
        x
    }

    pub fn theta(&self) -> Vec<f64> {
        self.inlier_mask.iter().map(|&m| if m { 1.0 } else { -1.0 }).collect()
    }

    pub fn outlier_count(&self) -> usize {
        self.inlier_mask.iter().filter(|&&m| !m).count()
    }
}

fn check_rate(rate: f64) -> Result<(), AppError> {
    if !(0.0..1.0).contains(&rate) {
        return Err(AppError::InvalidOutlierRate(rate));
    }
    Ok(())
}

/// Outlier count convention: round half away from zero.
pub fn outlier_count(n: usize, rate: f64) -> usize {
    (n as f64 * rate + 0.5).floor() as usize
}

fn outlier_mask(n: usize, rate: f64, rng: &mut ChaCha8Rng) -> Vec<bool> {
    let k = outlier_count(n, rate);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    let mut inlier = vec![true; n];
    for &i in idx.iter().take(k) {
        inlier[i] = false;
    }
    inlier
}

fn randn(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Chordal noise bound from an angular threshold.
pub fn sra_beta_from_angle(beta_angle_deg: f64) -> f64 {
    2.0 * 2.0f64.sqrt() * (beta_angle_deg.to_radians() / 2.0).sin()
}

/// Synthetic single rotation averaging: inliers perturb the ground truth by
/// a random-axis rotation with angle `~N(0, sigma^2)`; outliers are uniform
/// random rotations.
pub fn gen_sra(
    n: usize,
    outlier_rate: f64,
    sigma_deg: f64,
    seed: u64,
) -> Result<(SraInstance, GroundTruth), AppError> {
    check_rate(outlier_rate)?;
    if n == 0 {
        return Err(AppError::EmptyInstance);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rot_gt = random_rotation(&mut rng);
    let inlier_mask = outlier_mask(n, outlier_rate, &mut rng);
    let beta = sra_beta_from_angle(DEFAULT_BETA_ANGLE_DEG);
    let mut rotations = Vec::with_capacity(n);
    for &is_inlier in &inlier_mask {
        if is_inlier {
            let axis = random_unit(&mut rng);
            let angle = randn(&mut rng) * sigma_deg.to_radians();
            rotations.push(mat_mul(&rot_gt, &axis_angle(&axis, angle)));
        } else {
            rotations.push(random_rotation(&mut rng));
        }
    }
    Ok((
        SraInstance { rotations, betas: vec![beta; n] },
        GroundTruth { rotation: rot_gt, translation: None, inlier_mask },
    ))
}

fn random_translation_in_ball(rng: &mut ChaCha8Rng, t_bound: f64) -> Vec3 {
    let dir = random_unit(rng);
    // Stay strictly interior so the ball bound never binds at the optimum.
    let radius = 0.95 * t_bound * rng.gen_range(0.0f64..1.0).cbrt();
    scale(&dir, radius)
}

/// Synthetic point cloud registration with Gaussian inlier noise and
/// `N(0, I)` outlier targets.
pub fn gen_pcr(
    n: usize,
    outlier_rate: f64,
    noise_std: f64,
    t_bound: f64,
    seed: u64,
) -> Result<(PcrInstance, GroundTruth), AppError> {
    check_rate(outlier_rate)?;
    if n == 0 {
        return Err(AppError::EmptyInstance);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rot_gt = random_rotation(&mut rng);
    let t_gt = random_translation_in_ball(&mut rng, t_bound);
    let inlier_mask = outlier_mask(n, outlier_rate, &mut rng);
    let beta = PCR_BETA_FACTOR * noise_std;
    let mut p = Vec::with_capacity(n);
    let mut q = Vec::with_capacity(n);
    for &is_inlier in &inlier_mask {
        let pi: Vec3 = [randn(&mut rng), randn(&mut rng), randn(&mut rng)];
        let qi = if is_inlier {
            let eps: Vec3 = [
                randn(&mut rng) * noise_std,
                randn(&mut rng) * noise_std,
                randn(&mut rng) * noise_std,
            ];
            add(&add(&mat_vec(&rot_gt, &pi), &t_gt), &eps)
        } else {
            [randn(&mut rng), randn(&mut rng), randn(&mut rng)]
        };
        p.push(pi);
        q.push(qi);
    }
    Ok((
        PcrInstance { p, q, betas: vec![beta; n], t_bound },
        GroundTruth { rotation: rot_gt, translation: Some(t_gt), inlier_mask },
    ))
}

/// Synthetic mesh registration: planes with unit normals, point samples on
/// the planes, transformed into the point-cloud frame with Gaussian noise.
pub fn gen_mesh(
    n: usize,
    outlier_rate: f64,
    noise_std: f64,
    t_bound: f64,
    seed: u64,
) -> Result<(MeshInstance, GroundTruth), AppError> {
    check_rate(outlier_rate)?;
    if n == 0 {
        return Err(AppError::EmptyInstance);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rot_gt = random_rotation(&mut rng);
    let t_gt = random_translation_in_ball(&mut rng, t_bound);
    let inlier_mask = outlier_mask(n, outlier_rate, &mut rng);
    let beta = PCR_BETA_FACTOR * noise_std;
    let rot_t = transpose(&rot_gt);
    let (mut p, mut u, mut q, mut v) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for &is_inlier in &inlier_mask {
        let vi = random_unit(&mut rng);
        let qi: Vec3 = [randn(&mut rng), randn(&mut rng), randn(&mut rng)];
        if is_inlier {
            let wi: Vec3 = [randn(&mut rng), randn(&mut rng), randn(&mut rng)];
            // Another point on the plane through q_i with normal v_i.
            let q_on_plane = add(&qi, &cross(&wi, &vi));
            let eps_p: Vec3 = [
                randn(&mut rng) * noise_std,
                randn(&mut rng) * noise_std,
                randn(&mut rng) * noise_std,
            ];
            let eps_n: Vec3 = [
                randn(&mut rng) * noise_std,
                randn(&mut rng) * noise_std,
                randn(&mut rng) * noise_std,
            ];
            p.push(add(&mat_vec(&rot_t, &sub(&q_on_plane, &t_gt)), &eps_p));
            u.push(normalize(&add(&mat_vec(&rot_t, &vi), &eps_n)));
        } else {
            p.push([randn(&mut rng), randn(&mut rng), randn(&mut rng)]);
            u.push(random_unit(&mut rng));
        }
        q.push(qi);
        v.push(vi);
    }
    Ok((
        MeshInstance { p, u, q, v, betas: vec![beta; n], t_bound },
        GroundTruth { rotation: rot_gt, translation: Some(t_gt), inlier_mask },
    ))
}

fn inside_cone(t: &Vec3, alpha: f64) -> bool {
    (alpha / 2.0).tan() * t[2] >= (t[0] * t[0] + t[1] * t[1]).sqrt()
}

/// Synthetic absolute pose estimation: centered 3D keypoints projected with
/// pixel noise; outlier bearings are random directions inside the FOV cone.
pub fn gen_ape(
    n: usize,
    outlier_rate: f64,
    pixel_noise: f64,
    t_bound: f64,
    alpha: f64,
    seed: u64,
) -> Result<(ApeInstance, GroundTruth), AppError> {
    check_rate(outlier_rate)?;
    if n == 0 {
        return Err(AppError::EmptyInstance);
    }
    // Validate alpha through the cone generator.
    fov_cone_constraints(9, alpha)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Centered keypoints.
    let mut p: Vec<Vec3> = (0..n)
        .map(|_| [randn(&mut rng), randn(&mut rng), randn(&mut rng)])
        .collect();
    let centroid = p.iter().fold([0.0; 3], |acc, v| add(&acc, v));
    let centroid = scale(&centroid, 1.0 / n as f64);
    for pi in p.iter_mut() {
        *pi = sub(pi, &centroid);
    }
    // Pose with the object center inside the FOV cone and positive depths.
    let (rot_gt, t_gt) = loop {
        let r = random_rotation(&mut rng);
        let dir = random_unit(&mut rng);
        let radius = (0.95 * t_bound * rng.gen_range(0.0f64..1.0).cbrt()).max(1.0);
        let t = scale(&dir, radius);
        if !inside_cone(&t, alpha) {
            continue;
        }
        let min_depth = p
            .iter()
            .map(|pi| mat_vec(&r, pi)[2] + t[2])
            .fold(f64::INFINITY, f64::min);
        if min_depth > 0.5 {
            break (r, t);
        }
    };
    let inlier_mask = outlier_mask(n, outlier_rate, &mut rng);
    let mut u = Vec::with_capacity(n);
    for (i, &is_inlier) in inlier_mask.iter().enumerate() {
        if is_inlier {
            let y = add(&mat_vec(&rot_gt, &p[i]), &t_gt);
            let px = y[0] / y[2] + randn(&mut rng) * pixel_noise;
            let py = y[1] / y[2] + randn(&mut rng) * pixel_noise;
            u.push(normalize(&[px, py, 1.0]));
        } else {
            loop {
                let dir = random_unit(&mut rng);
                if inside_cone(&dir, alpha) {
                    u.push(dir);
                    break;
                }
            }
        }
    }
    Ok((
        ApeInstance { p, u, betas: vec![DEFAULT_APE_BETA; n], t_bound, alpha },
        GroundTruth { rotation: rot_gt, translation: Some(t_gt), inlier_mask },
    ))
}

/// Affine polynomial `constant + sum coeff * x_var`.
fn affine(terms: &[(usize, f64)], constant: f64) -> Polynomial {
    let mut p = Polynomial::zero();
    p.add_term(Monomial::one(), constant);
    for &(v, c) in terms {
        p.add_term(Monomial::var(v), c);
    }
    p
}

/// Variable index of rotation entry `R[i][j]` in the column-stacked layout.
fn rvar(i: usize, j: usize) -> usize {
    3 * j + i
}

impl Instance {
    pub fn kind(&self) -> InstanceKind {
        match self {
            Instance::Sra(_) => InstanceKind::Sra,
            Instance::Pcr(_) => InstanceKind::Pcr,
            Instance::Mesh(_) => InstanceKind::Mesh,
            Instance::Ape(_) => InstanceKind::Ape,
        }
    }

    pub fn len(&self) -> usize {
        self.betas().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn betas(&self) -> &[f64] {
        match self {
            Instance::Sra(s) => &s.betas,
            Instance::Pcr(s) => &s.betas,
            Instance::Mesh(s) => &s.betas,
            Instance::Ape(s) => &s.betas,
        }
    }

    /// Geometric variable count: 9 rotation entries, plus 3 translations.
    pub fn d(&self) -> usize {
        match self {
            Instance::Sra(_) => 9,
            _ => 12,
        }
    }

    pub fn t_bound(&self) -> Option<f64> {
        match self {
            Instance::Sra(_) => None,
            Instance::Pcr(s) => Some(s.t_bound),
            Instance::Mesh(s) => Some(s.t_bound),
            Instance::Ape(s) => Some(s.t_bound),
        }
    }

    pub fn alpha(&self) -> Option<f64> {
        match self {
            Instance::Ape(s) => Some(s.alpha),
            _ => None,
        }
    }

    /// Squared residual of measurement `i` as a quadratic polynomial in `x`.
    pub fn residual_sq(&self, i: usize) -> Result<Polynomial, AppError> {
        if i >= self.len() {
            return Err(AppError::IndexOutOfRange(i, self.len()));
        }
        Ok(match self {
            Instance::Sra(s) => {
                // ||R - Rt||_F^2 = 6 - 2 <Rt, R> on SO(3).
                let rt = &s.rotations[i];
                let mut p = Polynomial::constant(6.0);
                for r in 0..3 {
                    for c in 0..3 {
                        p.add_term(Monomial::var(rvar(r, c)), -2.0 * rt[r][c]);
                    }
                }
                p
            }
            Instance::Pcr(s) => {
                let (pi, qi) = (&s.p[i], &s.q[i]);
                let mut out = Polynomial::zero();
                for k in 0..3 {
                    let mut terms: Vec<(usize, f64)> = (0..3).map(|j| (rvar(k, j), -pi[j])).collect();
                    terms.push((9 + k, -1.0));
                    let l = affine(&terms, qi[k]);
                    out = out.add(&l.mul(&l));
                }
                out
            }
            Instance::Mesh(s) => {
                let (pi, ui, qi, vi) = (&s.p[i], &s.u[i], &s.q[i], &s.v[i]);
                // Point-to-plane term <v, q - R p - t>.
                let mut terms: Vec<(usize, f64)> = Vec::new();
                for k in 0..3 {
                    for j in 0..3 {
                        terms.push((rvar(k, j), -vi[k] * pi[j]));
                    }
                    terms.push((9 + k, -vi[k]));
                }
                let e = affine(&terms, dot(vi, qi));
                let mut out = e.mul(&e);
                // Normal alignment ||v - R u||^2.
                for k in 0..3 {
                    let terms: Vec<(usize, f64)> = (0..3).map(|j| (rvar(k, j), -ui[j])).collect();
                    let nk = affine(&terms, vi[k]);
                    out = out.add(&nk.mul(&nk));
                }
                out
            }
            Instance::Ape(s) => {
                let (pi, ui) = (&s.p[i], &s.u[i]);
                // y = R p + t; r^2 = y^T (I - u u^T) y.
                let y: Vec<Polynomial> = (0..3)
                    .map(|k| {
                        let mut terms: Vec<(usize, f64)> =
                            (0..3).map(|j| (rvar(k, j), pi[j])).collect();
                        terms.push((9 + k, 1.0));
                        affine(&terms, 0.0)
                    })
                    .collect();
                let mut out = Polynomial::zero();
                for k in 0..3 {
                    for l in 0..3 {
                        let m = if k == l { 1.0 } else { 0.0 } - ui[k] * ui[l];
                        if m != 0.0 {
                            out = out.add(&y[k].mul(&y[l]).scale(m));
                        }
                    }
                }
                out
            }
        })
    }

    /// Direct numeric evaluation of the squared residual polynomial.
    pub fn residual_sq_value(&self, i: usize, x: &[f64]) -> f64 {
        match self {
            Instance::Sra(s) => {
                let r = unstack_rotation(x);
                6.0 - 2.0 * trace(&mat_mul(&transpose(&s.rotations[i]), &r))
            }
            Instance::Pcr(s) => {
                let r = unstack_rotation(x);
                let t = [x[9], x[10], x[11]];
                let e = sub(&sub(&s.q[i], &mat_vec(&r, &s.p[i])), &t);
                dot(&e, &e)
            }
            Instance::Mesh(s) => {
                let r = unstack_rotation(x);
                let t = [x[9], x[10], x[11]];
                let e = dot(&s.v[i], &sub(&sub(&s.q[i], &mat_vec(&r, &s.p[i])), &t));
                let n = sub(&s.v[i], &mat_vec(&r, &s.u[i]));
                e * e + dot(&n, &n)
            }
            Instance::Ape(s) => {
                let r = unstack_rotation(x);
                let t = [x[9], x[10], x[11]];
                let y = add(&mat_vec(&r, &s.p[i]), &t);
                let proj = dot(&s.u[i], &y);
                dot(&y, &y) - proj * proj
            }
        }
    }

    pub fn residual_sq_values(&self, x: &[f64]) -> Vec<f64> {
        (0..self.len()).map(|i| self.residual_sq_value(i, x)).collect()
    }

    /// TLS objective at a candidate `(x, theta)`.
    pub fn tls_objective_at(&self, x: &[f64], theta: &[f64]) -> f64 {
        tls_objective(&self.residual_sq_values(x), self.betas(), theta)
    }

    /// Residuals plus the polynomial feasible-set description.
    pub fn residual_pop(&self) -> Result<ResidualPop, AppError> {
        let residuals: Result<Vec<_>, _> = (0..self.len()).map(|i| self.residual_sq(i)).collect();
        let residuals = residuals?;
        let (equalities, inequalities) = match self {
            Instance::Sra(_) => (so3_constraints(0), vec![]),
            Instance::Pcr(s) => {
                (so3_constraints(0), vec![ball_constraint(9, 3, s.t_bound)?])
            }
            Instance::Mesh(s) => {
                (so3_constraints(0), vec![ball_constraint(9, 3, s.t_bound)?])
            }
            Instance::Ape(s) => {
                // Both the column- and row-form rotation descriptions; the
                // extra equalities tighten the relaxation for this problem.
                let mut eq = so3_constraints(0);
                eq.extend(so3_row_constraints(0));
                let mut ineq = vec![ball_constraint(9, 3, s.t_bound)?];
                ineq.extend(fov_cone_constraints(9, s.alpha)?);
                (eq, ineq)
            }
        };
        Ok(ResidualPop { d: self.d(), residuals_sq: residuals, equalities, inequalities })
    }

    /// Assemble the lifted TLS polynomial optimization instance.
    pub fn build_tls_pop(&self) -> Result<crate::poly::PopInstance, AppError> {
        let base = self.residual_pop()?;
        Ok(crate::costs::tls_pop_reformulate(&base, self.betas())?)
    }

    /// Feasibility of the geometric block (rotation manifold plus
    /// translation bounds) up to `tol`.
    pub fn is_feasible_x(&self, x: &[f64], tol: f64) -> bool {
        let r = unstack_rotation(x);
        if !is_rotation(&r, tol.max(1e-12)) {
            return false;
        }
        match self {
            Instance::Sra(_) => true,
            Instance::Pcr(s) | Instance::Mesh(MeshInstance { t_bound: _, .. }) if false => {
                let _ = s;
                unreachable!()
            }
            Instance::Pcr(s) => {
                let t = [x[9], x[10], x[11]];
                norm(&t) <= s.t_bound + tol
            }
            Instance::Mesh(s) => {
                let t = [x[9], x[10], x[11]];
                norm(&t) <= s.t_bound + tol
            }
            Instance::Ape(s) => {
                let t = [x[9], x[10], x[11]];
                norm(&t) <= s.t_bound + tol
                    && (s.alpha / 2.0).tan() * t[2] + tol
                        >= (t[0] * t[0] + t[1] * t[1]).sqrt()
                    && t[2] >= -tol
            }
        }
    }

    /// Project the geometric block onto the feasible set. The rotation uses
    /// the exact SVD projection; translations are clipped into the ball and,
    /// for the FOV cone, rotated toward the axis onto the cone boundary
    /// (inexact for the cone, flagged by the return value).
    pub fn project_feasible(&self, x: &mut [f64]) -> bool {
        let r = project_so3(&unstack_rotation(x));
        x[..9].copy_from_slice(&stack_rotation(&r));
        let mut exact = true;
        if let Some(t_bound) = self.t_bound() {
            let mut t = [x[9], x[10], x[11]];
            let n = norm(&t);
            if n > t_bound {
                t = scale(&t, t_bound / n);
            }
            if let Instance::Ape(s) = self {
                if !inside_cone(&t, s.alpha) {
                    let half = s.alpha / 2.0;
                    let n = norm(&t);
                    if n > 1e-12 {
                        let rho = (t[0] * t[0] + t[1] * t[1]).sqrt();
                        let e_rho = if rho > 1e-12 {
                            [t[0] / rho, t[1] / rho, 0.0]
                        } else {
                            [1.0, 0.0, 0.0]
                        };
                        // Rotate onto the cone boundary, keeping the norm.
                        t = add(
                            &scale(&e_rho, n * half.sin()),
                            &[0.0, 0.0, n * half.cos()],
                        );
                        exact = false;
                    }
                }
            }
            x[9..12].copy_from_slice(&t);
        }
        exact
    }

    /// Random feasible geometric point, for property tests and sampling.
    pub fn random_feasible_x(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let mut x = stack_rotation(&random_rotation(rng)).to_vec();
        match self {
            Instance::Sra(_) => {}
            Instance::Pcr(s) => x.extend(random_translation_in_ball(rng, s.t_bound)),
            Instance::Mesh(s) => x.extend(random_translation_in_ball(rng, s.t_bound)),
            Instance::Ape(s) => loop {
                let t = random_translation_in_ball(rng, s.t_bound);
                if inside_cone(&t, s.alpha) {
                    x.extend(t);
                    break;
                }
            },
        }
        x
    }

    /// SHA-256 of the canonical JSON serialization (ground truth excluded).
    pub fn content_hash(&self) -> String {
        let json = self.to_json(None).expect("serialize");
        let mut hasher = Sha256::new();
        hasher.update(json.as_bytes());
        hex_string(&hasher.finalize())
    }
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

// ---------------------------------------------------------------------------
// JSON schema
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize, Default)]
pub struct DataJson {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rotations: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct GroundTruthJson {
    /// Row-major 3x3 rotation.
    pub rotation: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub translation: Option<Vec<f64>>,
    pub inlier_mask: Vec<bool>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct InstanceFile {
    pub kind: InstanceKind,
    #[serde(rename = "N")]
    pub n: usize,
    pub betas: Vec<f64>,
    pub data: DataJson,
    #[serde(rename = "T", skip_serializing_if = "Option::is_none")]
    pub t_bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub groundtruth: Option<GroundTruthJson>,
}

fn mat_to_row_major(m: &Mat3) -> Vec<f64> {
    m.iter().flat_map(|row| row.iter().copied()).collect()
}

fn mat_from_row_major(v: &[f64]) -> Result<Mat3, AppError> {
    if v.len() != 9 {
        return Err(AppError::InvalidData(format!("expected 9 rotation entries, got {}", v.len())));
    }
    Ok([[v[0], v[1], v[2]], [v[3], v[4], v[5]], [v[6], v[7], v[8]]])
}

fn vecs_to_json(v: &[Vec3]) -> Vec<Vec<f64>> {
    v.iter().map(|x| x.to_vec()).collect()
}

fn vecs_from_json(v: &Option<Vec<Vec<f64>>>, what: &str, n: usize) -> Result<Vec<Vec3>, AppError> {
    let v = v
        .as_ref()
        .ok_or_else(|| AppError::InvalidData(format!("missing data field '{what}'")))?;
    if v.len() != n {
        return Err(AppError::InvalidData(format!("field '{what}' has {} rows, expected {n}", v.len())));
    }
    v.iter()
        .map(|row| {
            if row.len() != 3 {
                return Err(AppError::InvalidData(format!("'{what}' rows must have 3 entries")));
            }
            Ok([row[0], row[1], row[2]])
        })
        .collect()
}

impl Instance {
    pub fn to_json(&self, gt: Option<&GroundTruth>) -> Result<String, AppError> {
        let mut data = DataJson::default();
        let (t_bound, alpha) = (self.t_bound(), self.alpha());
        match self {
            Instance::Sra(s) => {
                data.rotations = Some(s.rotations.iter().map(mat_to_row_major).collect());
            }
            Instance::Pcr(s) => {
                data.p = Some(vecs_to_json(&s.p));
                data.q = Some(vecs_to_json(&s.q));
            }
            Instance::Mesh(s) => {
                data.p = Some(vecs_to_json(&s.p));
                data.u = Some(vecs_to_json(&s.u));
                data.q = Some(vecs_to_json(&s.q));
                data.v = Some(vecs_to_json(&s.v));
            }
            Instance::Ape(s) => {
                data.p = Some(vecs_to_json(&s.p));
                data.u = Some(vecs_to_json(&s.u));
            }
        }
        let file = InstanceFile {
            kind: self.kind(),
            n: self.len(),
            betas: self.betas().to_vec(),
            data,
            t_bound,
            alpha,
            groundtruth: gt.map(|g| GroundTruthJson {
                rotation: mat_to_row_major(&g.rotation),
                translation: g.translation.map(|t| t.to_vec()),
                inlier_mask: g.inlier_mask.clone(),
            }),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str) -> Result<(Instance, Option<GroundTruth>), AppError> {
        let file: InstanceFile = serde_json::from_str(text)?;
        let n = file.n;
        if file.betas.len() != n {
            return Err(AppError::InvalidData("betas length mismatch".into()));
        }
        if file.betas.iter().any(|&b| !(b > 0.0)) {
            return Err(AppError::InvalidData("betas must be positive".into()));
        }
        let need_t = || {
            file.t_bound
                .ok_or_else(|| AppError::InvalidData("missing field 'T'".into()))
        };
        let instance = match file.kind {
            InstanceKind::Sra => {
                let rots = file
                    .data
                    .rotations
                    .as_ref()
                    .ok_or_else(|| AppError::InvalidData("missing data field 'rotations'".into()))?;
                if rots.len() != n {
                    return Err(AppError::InvalidData("rotation count mismatch".into()));
                }
                let mut rotations = Vec::with_capacity(n);
                for r in rots {
                    let m = mat_from_row_major(r)?;
                    if !is_rotation(&m, 1e-9) {
                        return Err(AppError::InvalidData("measurement is not a rotation".into()));
                    }
                    rotations.push(m);
                }
                Instance::Sra(SraInstance { rotations, betas: file.betas })
            }
            InstanceKind::Pcr => Instance::Pcr(PcrInstance {
                p: vecs_from_json(&file.data.p, "p", n)?,
                q: vecs_from_json(&file.data.q, "q", n)?,
                betas: file.betas,
                t_bound: need_t()?,
            }),
            InstanceKind::Mesh => {
                let u = vecs_from_json(&file.data.u, "u", n)?;
                let v = vecs_from_json(&file.data.v, "v", n)?;
                for w in u.iter().chain(v.iter()) {
                    if (norm(w) - 1.0).abs() > 1e-9 {
                        return Err(AppError::InvalidData("normals must be unit".into()));
                    }
                }
                Instance::Mesh(MeshInstance {
                    p: vecs_from_json(&file.data.p, "p", n)?,
                    u,
                    q: vecs_from_json(&file.data.q, "q", n)?,
                    v,
                    betas: file.betas,
                    t_bound: need_t()?,
                })
            }
            InstanceKind::Ape => {
                let alpha = file
                    .alpha
                    .ok_or_else(|| AppError::InvalidData("missing field 'alpha'".into()))?;
                if !(alpha > 0.0 && alpha < std::f64::consts::PI) {
                    return Err(AppError::InvalidData("alpha outside (0, pi)".into()));
                }
                let u = vecs_from_json(&file.data.u, "u", n)?;
                for w in &u {
                    if (norm(w) - 1.0).abs() > 1e-9 {
                        return Err(AppError::InvalidData("bearings must be unit".into()));
                    }
                }
                Instance::Ape(ApeInstance {
                    p: vecs_from_json(&file.data.p, "p", n)?,
                    u,
                    betas: file.betas,
                    t_bound: need_t()?,
                    alpha,
                })
            }
        };
        let gt = match file.groundtruth {
            None => None,
            Some(g) => {
                let rotation = mat_from_row_major(&g.rotation)?;
                let translation = match g.translation {
                    None => None,
                    Some(t) => {
                        if t.len() != 3 {
                            return Err(AppError::InvalidData("translation must have 3 entries".into()));
                        }
                        Some([t[0], t[1], t[2]])
                    }
                };
                if g.inlier_mask.len() != n {
                    return Err(AppError::InvalidData("inlier mask length mismatch".into()));
                }
                Some(GroundTruth { rotation, translation, inlier_mask: g.inlier_mask })
            }
        };
        Ok((instance, gt))
    }
}

/// Generate by kind with per-kind default noise parameters.
pub fn generate(
    kind: InstanceKind,
    n: usize,
    outlier_rate: f64,
    seed: u64,
) -> Result<(Instance, GroundTruth), AppError> {
    Ok(match kind {
        InstanceKind::Sra => {
            let (inst, gt) = gen_sra(n, outlier_rate, DEFAULT_SIGMA_DEG, seed)?;
            (Instance::Sra(inst), gt)
        }
        InstanceKind::Pcr => {
            let (inst, gt) = gen_pcr(n, outlier_rate, DEFAULT_PCR_NOISE, DEFAULT_T_BOUND, seed)?;
            (Instance::Pcr(inst), gt)
        }
        InstanceKind::Mesh => {
            let (inst, gt) = gen_mesh(n, outlier_rate, DEFAULT_PCR_NOISE, DEFAULT_T_BOUND, seed)?;
            (Instance::Mesh(inst), gt)
        }
        InstanceKind::Ape => {
            let (inst, gt) = gen_ape(
                n,
                outlier_rate,
                DEFAULT_APE_PIXEL_NOISE,
                DEFAULT_T_BOUND,
                DEFAULT_ALPHA,
                seed,
            )?;
            (Instance::Ape(inst), gt)
        }
    })
}

#[cfg(test)]
mod tests;
