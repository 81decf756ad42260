//! Small fixed-size geometry helpers shared by the estimation applications.

use crate::linalg::svd3;
use rand::Rng;
use rand_distr::StandardNormal;

pub type Vec3 = [f64; 3];
pub type Mat3 = [[f64; 3]; 3];

pub const IDENTITY: Mat3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

pub fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn norm(a: &Vec3) -> f64 {
    dot(a, a).sqrt()
}

pub fn sub(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn add(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn scale(a: &Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

pub fn cross(a: &Vec3, b: &Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn normalize(a: &Vec3) -> Vec3 {
    let n = norm(a);
    scale(a, 1.0 / n)
}

pub fn mat_vec(m: &Mat3, v: &Vec3) -> Vec3 {
    [dot(&m[0], v), dot(&m[1], v), dot(&m[2], v)]
}

pub fn mat_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                out[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    out
}

pub fn transpose(m: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = m[j][i];
        }
    }
    out
}

pub fn trace(m: &Mat3) -> f64 {
    m[0][0] + m[1][1] + m[2][2]
}

pub fn det(m: &Mat3) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Rodrigues' formula for a unit axis and angle in radians.
pub fn axis_angle(axis: &Vec3, angle: f64) -> Mat3 {
    let (s, c) = angle.sin_cos();
    let k = normalize(axis);
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let kk = k[i] * k[j] * (1.0 - c);
            out[i][j] = kk + if i == j { c } else { 0.0 };
        }
    }
    out[0][1] += -s * k[2];
    out[0][2] += s * k[1];
    out[1][0] += s * k[2];
    out[1][2] += -s * k[0];
    out[2][0] += -s * k[1];
    out[2][1] += s * k[0];
    out
}

pub fn random_unit<R: Rng>(rng: &mut R) -> Vec3 {
    loop {
        let v: Vec3 = [
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        ];
        let n = norm(&v);
        if n > 1e-6 {
            return scale(&v, 1.0 / n);
        }
    }
}

/// Uniform random rotation via a normalized quaternion.
pub fn random_rotation<R: Rng>(rng: &mut R) -> Mat3 {
    let q: [f64; 4] = [
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
    ];
    let n = (q.iter().map(|v| v * v).sum::<f64>()).sqrt();
    let [w, x, y, z] = [q[0] / n, q[1] / n, q[2] / n, q[3] / n];
    [
        [
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
        ],
        [
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
        ],
        [
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        ],
    ]
}

/// Rotation maximizing `tr(R^T M)`: the SO(3) projection of `M` with the
/// determinant sign fixed.
pub fn project_so3(m: &Mat3) -> Mat3 {
    let (u, _s, vt) = svd3(m).expect("3x3 svd");
    let d = det(&mat_mul(&u, &vt));
    let mut corr = u;
    if d < 0.0 {
        for row in corr.iter_mut() {
            row[2] = -row[2];
        }
    }
    mat_mul(&corr, &vt)
}

/// Rotation maximizing `tr(R M)` (used for weighted point-set alignment
/// where `M = sum w p' q'^T`).
pub fn argmax_trace_rm(m: &Mat3) -> Mat3 {
    project_so3(&transpose(m))
}

pub fn is_rotation(m: &Mat3, tol: f64) -> bool {
    let rtr = mat_mul(&transpose(m), m);
    let mut err: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            let expect = if i == j { 1.0 } else { 0.0 };
            err = err.max((rtr[i][j] - expect).abs());
        }
    }
    err <= tol && (det(m) - 1.0).abs() <= tol
}

/// Geodesic rotation distance in degrees.
pub fn rotation_error_deg(a: &Mat3, b: &Mat3) -> f64 {
    let c = ((trace(&mat_mul(&transpose(a), b)) - 1.0) / 2.0).clamp(-1.0, 1.0);
    c.acos().to_degrees()
}

pub fn translation_error(a: &Vec3, b: &Vec3) -> f64 {
    norm(&sub(a, b))
}

/// Column-stack a rotation into 9 coordinates: `x[3j + i] = R[i][j]`.
pub fn stack_rotation(r: &Mat3) -> [f64; 9] {
    let mut out = [0.0; 9];
    for j in 0..3 {
        for i in 0..3 {
            out[3 * j + i] = r[i][j];
        }
    }
    out
}

pub fn unstack_rotation(x: &[f64]) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for j in 0..3 {
        for i in 0..3 {
            out[i][j] = x[3 * j + i];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rotation_error_examples() {
        assert!(rotation_error_deg(&IDENTITY, &IDENTITY).abs() < 1e-12);
        let half_turn = axis_angle(&[0.0, 0.0, 1.0], std::f64::consts::PI);
        assert!((rotation_error_deg(&half_turn, &IDENTITY) - 180.0).abs() < 1e-9);
        let five = axis_angle(&[0.3, -0.5, 0.81], 5.0f64.to_radians());
        assert!((rotation_error_deg(&five, &IDENTITY) - 5.0).abs() < 1e-9);
    }

    #[test]
    fn random_rotations_are_rotations() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let r = random_rotation(&mut rng);
            assert!(is_rotation(&r, 1e-12));
        }
    }

    #[test]
    fn project_so3_recovers_scaled_rotation() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let r = random_rotation(&mut rng);
            let mut m = r;
            for row in m.iter_mut() {
                for v in row.iter_mut() {
                    *v *= 2.5;
                }
            }
            let p = project_so3(&m);
            assert!(rotation_error_deg(&p, &r) < 1e-9);
        }
    }

    #[test]
    fn project_so3_fixes_reflection() {
        // A reflection (det = -1) must still project to a proper rotation.
        let refl = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, -1.0]];
        let p = project_so3(&refl);
        assert!(is_rotation(&p, 1e-12));
    }

    #[test]
    fn stack_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let r = random_rotation(&mut rng);
        let x = stack_rotation(&r);
        assert_eq!(unstack_rotation(&x), r);
    }
}
