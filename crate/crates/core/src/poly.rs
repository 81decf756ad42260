//! Sparse multivariate polynomial arithmetic over the variables `(x, theta)`,
//! plus the quadratic constraint generators describing rotation, ball and
//! field-of-view feasible sets.
//!
//! Variables are indexed canonically: geometric variables `x_1..x_d` first,
//! then binary confidence variables `theta_1..theta_N`. Monomials order by
//! graded lexicographic rank under that variable order, which keeps every
//! downstream basis and constraint enumeration deterministic.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PolyError {
    #[error("point has {got} coordinates but the polynomial references variable {var}")]
    DimensionMismatch { var: usize, got: usize },
    #[error("ball radius must be positive, got {0}")]
    InvalidRadius(f64),
    #[error("FOV angle must lie in (0, pi), got {0}")]
    InvalidAngle(f64),
    #[error("degree {got} exceeds the cap {cap} for {what}")]
    DegreeTooHigh { what: &'static str, got: usize, cap: usize },
    #[error("theta variable {0} must appear in exactly one equality of the form theta^2 - 1")]
    BadThetaConstraint(usize),
}

/// A power product of variables; zero exponents are never stored.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Monomial {
    /// Sorted `(variable, exponent)` pairs with exponent >= 1.
    powers: Vec<(u16, u8)>,
}

impl Monomial {
    pub fn one() -> Self {
        Self::default()
    }

    pub fn var(v: usize) -> Self {
        Self { powers: vec![(v as u16, 1)] }
    }

    pub fn from_powers(mut powers: Vec<(u16, u8)>) -> Self {
        powers.retain(|&(_, e)| e > 0);
        powers.sort_unstable_by_key(|&(v, _)| v);
        debug_assert!(powers.windows(2).all(|w| w[0].0 < w[1].0));
        Self { powers }
    }

    pub fn degree(&self) -> usize {
        self.powers.iter().map(|&(_, e)| e as usize).sum()
    }

    pub fn is_one(&self) -> bool {
        self.powers.is_empty()
    }

    pub fn powers(&self) -> &[(u16, u8)] {
        &self.powers
    }

    pub fn exponent_of(&self, var: usize) -> u8 {
        self.powers
            .iter()
            .find(|&&(v, _)| v as usize == var)
            .map(|&(_, e)| e)
            .unwrap_or(0)
    }

    /// Largest referenced variable index, if any.
    pub fn max_var(&self) -> Option<usize> {
        self.powers.last().map(|&(v, _)| v as usize)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut out: Vec<(u16, u8)> = Vec::with_capacity(self.powers.len() + other.powers.len());
        let (mut i, mut j) = (0, 0);
        while i < self.powers.len() && j < other.powers.len() {
            let (va, ea) = self.powers[i];
            let (vb, eb) = other.powers[j];
            match va.cmp(&vb) {
                Ordering::Less => {
                    out.push((va, ea));
                    i += 1;
                }
                Ordering::Greater => {
                    out.push((vb, eb));
                    j += 1;
                }
                Ordering::Equal => {
                    out.push((va, ea + eb));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.powers[i..]);
        out.extend_from_slice(&other.powers[j..]);
        Monomial { powers: out }
    }

    /// Exact monomial division: `self / other` when every exponent divides.
    pub fn div(&self, other: &Monomial) -> Option<Monomial> {
        let mut out = Vec::with_capacity(self.powers.len());
        let mut j = 0;
        for &(v, e) in &self.powers {
            let mut rem = e;
            while j < other.powers.len() && other.powers[j].0 < v {
                return None; // other references a variable absent from self
            }
            if j < other.powers.len() && other.powers[j].0 == v {
                let eb = other.powers[j].1;
                if eb > e {
                    return None;
                }
                rem = e - eb;
                j += 1;
            }
            if rem > 0 {
                out.push((v, rem));
            }
        }
        if j < other.powers.len() {
            return None;
        }
        Some(Monomial { powers: out })
    }

    pub fn eval(&self, point: &[f64]) -> Result<f64, PolyError> {
        let mut acc = 1.0;
        for &(v, e) in &self.powers {
            let v = v as usize;
            if v >= point.len() {
                return Err(PolyError::DimensionMismatch { var: v, got: point.len() });
            }
            acc *= point[v].powi(e as i32);
        }
        Ok(acc)
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Monomial {
    /// Graded lexicographic: lower degree first; within a degree, the
    /// monomial with the larger exponent on the earliest variable first.
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree().cmp(&other.degree()).then_with(|| {
            let (mut i, mut j) = (0, 0);
            loop {
                match (self.powers.get(i), other.powers.get(j)) {
                    (None, None) => return Ordering::Equal,
                    (Some(_), None) => return Ordering::Less,
                    (None, Some(_)) => return Ordering::Greater,
                    (Some(&(va, ea)), Some(&(vb, eb))) => match va.cmp(&vb) {
                        Ordering::Less => return Ordering::Less,
                        Ordering::Greater => return Ordering::Greater,
                        Ordering::Equal => {
                            match ea.cmp(&eb) {
                                Ordering::Greater => return Ordering::Less,
                                Ordering::Less => return Ordering::Greater,
                                Ordering::Equal => {}
                            }
                            i += 1;
                            j += 1;
                        }
                    },
                }
            }
        })
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_one() {
            return write!(f, "1");
        }
        for (k, &(v, e)) in self.powers.iter().enumerate() {
            if k > 0 {
                write!(f, "*")?;
            }
            write!(f, "v{v}")?;
            if e > 1 {
                write!(f, "^{e}")?;
            }
        }
        Ok(())
    }
}

/// A finite sum of monomials with nonzero real coefficients.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Polynomial {
    terms: BTreeMap<Monomial, f64>,
}

impl Polynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        let mut p = Self::zero();
        p.add_term(Monomial::one(), c);
        p
    }

    pub fn var(v: usize) -> Self {
        let mut p = Self::zero();
        p.add_term(Monomial::var(v), 1.0);
        p
    }

    /// Accumulate a term, pruning exact-zero coefficients only.
    pub fn add_term(&mut self, m: Monomial, c: f64) {
        if c == 0.0 {
            return;
        }
        let entry = self.terms.entry(m).or_insert(0.0);
        *entry += c;
        if *entry == 0.0 {
            let key = self
                .terms
                .iter()
                .find(|(_, &v)| v == 0.0)
                .map(|(k, _)| k.clone())
                .expect("just inserted");
            self.terms.remove(&key);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, f64)> {
        self.terms.iter().map(|(m, &c)| (m, c))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn max_var(&self) -> Option<usize> {
        self.terms.keys().filter_map(Monomial::max_var).max()
    }

    pub fn coefficient(&self, m: &Monomial) -> f64 {
        self.terms.get(m).copied().unwrap_or(0.0)
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        let mut out = self.clone();
        for (m, c) in other.terms() {
            out.add_term(m.clone(), c);
        }
        out
    }

    pub fn sub(&self, other: &Polynomial) -> Polynomial {
        let mut out = self.clone();
        for (m, c) in other.terms() {
            out.add_term(m.clone(), -c);
        }
        out
    }

    pub fn scale(&self, s: f64) -> Polynomial {
        let mut out = Polynomial::zero();
        for (m, c) in self.terms() {
            out.add_term(m.clone(), c * s);
        }
        out
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        let mut out = Polynomial::zero();
        for (ma, ca) in self.terms() {
            for (mb, cb) in other.terms() {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }

    pub fn mul_monomial(&self, m: &Monomial) -> Polynomial {
        let mut out = Polynomial::zero();
        for (ma, ca) in self.terms() {
            out.add_term(ma.mul(m), ca);
        }
        out
    }

    pub fn eval(&self, point: &[f64]) -> Result<f64, PolyError> {
        let mut acc = 0.0;
        for (m, c) in self.terms() {
            acc += c * m.eval(point)?;
        }
        Ok(acc)
    }

    /// Partial derivative with respect to one variable.
    pub fn differentiate(&self, var: usize) -> Polynomial {
        let mut out = Polynomial::zero();
        for (m, c) in self.terms() {
            let e = m.exponent_of(var);
            if e == 0 {
                continue;
            }
            let mut powers: Vec<(u16, u8)> = m.powers().to_vec();
            for p in powers.iter_mut() {
                if p.0 as usize == var {
                    p.1 -= 1;
                }
            }
            out.add_term(Monomial::from_powers(powers), c * e as f64);
        }
        out
    }
}

/// Canonical variable layout: `d` geometric variables then `n_theta` binaries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VarSpace {
    pub d: usize,
    pub n_theta: usize,
}

impl VarSpace {
    pub fn new(d: usize, n_theta: usize) -> Self {
        Self { d, n_theta }
    }

    pub fn total(&self) -> usize {
        self.d + self.n_theta
    }

    pub fn theta_var(&self, i: usize) -> usize {
        debug_assert!(i < self.n_theta);
        self.d + i
    }

    pub fn is_theta(&self, v: usize) -> bool {
        v >= self.d && v < self.total()
    }

    pub fn name(&self, v: usize) -> String {
        if v < self.d {
            format!("x{}", v + 1)
        } else {
            format!("theta{}", v - self.d + 1)
        }
    }
}

/// A polynomial optimization instance: minimize `objective` subject to
/// `equalities = 0` and `inequalities >= 0`.
#[derive(Debug, Clone)]
pub struct PopInstance {
    pub vars: VarSpace,
    pub objective: Polynomial,
    pub equalities: Vec<Polynomial>,
    pub inequalities: Vec<Polynomial>,
}

impl PopInstance {
    /// Check the degree caps and that each theta has exactly one
    /// `theta^2 - 1` equality.
    pub fn validate(&self) -> Result<(), PolyError> {
        if self.objective.degree() > 3 {
            return Err(PolyError::DegreeTooHigh {
                what: "objective",
                got: self.objective.degree(),
                cap: 3,
            });
        }
        for h in &self.equalities {
            if h.degree() > 2 {
                return Err(PolyError::DegreeTooHigh { what: "equality", got: h.degree(), cap: 2 });
            }
        }
        for g in &self.inequalities {
            if g.degree() > 2 {
                return Err(PolyError::DegreeTooHigh {
                    what: "inequality",
                    got: g.degree(),
                    cap: 2,
                });
            }
        }
        for i in 0..self.vars.n_theta {
            let v = self.vars.theta_var(i);
            let mut sq = Polynomial::zero();
            sq.add_term(Monomial::from_powers(vec![(v as u16, 2)]), 1.0);
            sq.add_term(Monomial::one(), -1.0);
            let count = self
                .equalities
                .iter()
                .filter(|h| *h == &sq || **h == sq.scale(-1.0))
                .count();
            if count != 1 {
                return Err(PolyError::BadThetaConstraint(i));
            }
        }
        Ok(())
    }

    /// Constraint satisfaction check up to `tol`.
    pub fn is_feasible(&self, point: &[f64], tol: f64) -> bool {
        self.equalities
            .iter()
            .all(|h| h.eval(point).map(|v| v.abs() <= tol).unwrap_or(false))
            && self
                .inequalities
                .iter()
                .all(|g| g.eval(point).map(|v| v >= -tol).unwrap_or(false))
    }
}

fn var_poly(v: usize) -> Polynomial {
    Polynomial::var(v)
}

fn dot3(a: [usize; 3], b: [usize; 3]) -> Polynomial {
    let mut p = Polynomial::zero();
    for k in 0..3 {
        p = p.add(&var_poly(a[k]).mul(&var_poly(b[k])));
    }
    p
}

fn cross3_minus(a: [usize; 3], b: [usize; 3], c: [usize; 3]) -> Vec<Polynomial> {
    // a x b - c, componentwise.
    let comp = |i: usize, j: usize, ci: usize| -> Polynomial {
        var_poly(a[i])
            .mul(&var_poly(b[j]))
            .sub(&var_poly(a[j]).mul(&var_poly(b[i])))
            .sub(&var_poly(c[ci]))
    };
    vec![comp(1, 2, 0), comp(2, 0, 1), comp(0, 1, 2)]
}

/// The 15 quadratic equalities cutting out SO(3) on the column-stacked
/// rotation `r = [r_1; r_2; r_3]` starting at `offset`: 3 unit-norm,
/// 3 orthogonality, 9 right-hand-rule (column cross products).
pub fn so3_constraints(offset: usize) -> Vec<Polynomial> {
    let col = |j: usize| [offset + 3 * j, offset + 3 * j + 1, offset + 3 * j + 2];
    let mut out = Vec::with_capacity(15);
    for j in 0..3 {
        // 1 - <r_j, r_j>
        out.push(Polynomial::constant(1.0).sub(&dot3(col(j), col(j))));
    }
    for &(i, j) in &[(0usize, 1usize), (1, 2), (2, 0)] {
        out.push(dot3(col(i), col(j)));
    }
    for &(i, j, k) in &[(0usize, 1usize, 2usize), (1, 2, 0), (2, 0, 1)] {
        out.extend(cross3_minus(col(i), col(j), col(k)));
    }
    out
}

/// Row-form counterpart of [`so3_constraints`]: the same 15 identities
/// applied to the rows of the rotation (R R^T = I and row cross products).
pub fn so3_row_constraints(offset: usize) -> Vec<Polynomial> {
    let row = |i: usize| [offset + i, offset + 3 + i, offset + 6 + i];
    let mut out = Vec::with_capacity(15);
    for i in 0..3 {
        out.push(Polynomial::constant(1.0).sub(&dot3(row(i), row(i))));
    }
    for &(i, j) in &[(0usize, 1usize), (1, 2), (2, 0)] {
        out.push(dot3(row(i), row(j)));
    }
    for &(i, j, k) in &[(0usize, 1usize, 2usize), (1, 2, 0), (2, 0, 1)] {
        out.extend(cross3_minus(row(i), row(j), row(k)));
    }
    out
}

/// The single SO(2) equality on `(r_1, r_2)`, stored as `<r, r> - 1`.
pub fn so2_constraints(offset: usize) -> Vec<Polynomial> {
    let mut p = Polynomial::zero();
    for k in 0..2 {
        p = p.add(&var_poly(offset + k).mul(&var_poly(offset + k)));
    }
    vec![p.sub(&Polynomial::constant(1.0))]
}

/// Ball membership `T^2 - <t, t> >= 0` on `dim` variables at `offset`.
pub fn ball_constraint(offset: usize, dim: usize, t_radius: f64) -> Result<Polynomial, PolyError> {
    if !(t_radius > 0.0) {
        return Err(PolyError::InvalidRadius(t_radius));
    }
    let mut p = Polynomial::constant(t_radius * t_radius);
    for k in 0..dim {
        p = p.sub(&var_poly(offset + k).mul(&var_poly(offset + k)));
    }
    Ok(p)
}

/// FOV cone membership on 3 variables at `offset`:
/// `tan^2(alpha/2) t_3^2 - t_1^2 - t_2^2 >= 0` and `t_3 >= 0`.
pub fn fov_cone_constraints(offset: usize, alpha: f64) -> Result<Vec<Polynomial>, PolyError> {
    if !(alpha > 0.0 && alpha < std::f64::consts::PI) {
        return Err(PolyError::InvalidAngle(alpha));
    }
    let tan2 = (alpha / 2.0).tan().powi(2);
    let sq = |v: usize| var_poly(v).mul(&var_poly(v));
    let g1 = sq(offset + 2)
        .scale(tan2)
        .sub(&sq(offset))
        .sub(&sq(offset + 1));
    let g2 = var_poly(offset + 2);
    Ok(vec![g1, g2])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn randn(rng: &mut ChaCha8Rng) -> f64 {
        use rand_distr::StandardNormal;
        rng.sample(StandardNormal)
    }

    /// Gram-Schmidt a Gaussian matrix into a rotation; determinant fixed by
    /// flipping the last column. Column-stacked into 9 values.
    fn random_rotation_vec(rng: &mut ChaCha8Rng) -> [f64; 9] {
        loop {
            let mut cols = [[0.0f64; 3]; 3];
            for c in cols.iter_mut() {
                for v in c.iter_mut() {
                    *v = randn(rng);
                }
            }
            // Orthonormalize columns.
            let norm = |v: &[f64; 3]| (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            let n0 = norm(&cols[0]);
            if n0 < 1e-6 {
                continue;
            }
            for v in cols[0].iter_mut() {
                *v /= n0;
            }
            let d01: f64 = (0..3).map(|k| cols[0][k] * cols[1][k]).sum();
            for k in 0..3 {
                cols[1][k] -= d01 * cols[0][k];
            }
            let n1 = norm(&cols[1]);
            if n1 < 1e-6 {
                continue;
            }
            for v in cols[1].iter_mut() {
                *v /= n1;
            }
            // Third column = cross product gives det +1 directly.
            cols[2] = [
                cols[0][1] * cols[1][2] - cols[0][2] * cols[1][1],
                cols[0][2] * cols[1][0] - cols[0][0] * cols[1][2],
                cols[0][0] * cols[1][1] - cols[0][1] * cols[1][0],
            ];
            let mut out = [0.0; 9];
            for j in 0..3 {
                for i in 0..3 {
                    out[3 * j + i] = cols[j][i];
                }
            }
            return out;
        }
    }

    fn random_poly(rng: &mut ChaCha8Rng, nvars: usize, max_deg: usize, nterms: usize) -> Polynomial {
        let mut p = Polynomial::zero();
        for _ in 0..nterms {
            let deg = rng.gen_range(0..=max_deg);
            let mut m = Monomial::one();
            for _ in 0..deg {
                m = m.mul(&Monomial::var(rng.gen_range(0..nvars)));
            }
            p.add_term(m, rng.gen_range(-2.0..2.0));
        }
        p
    }

    #[test]
    fn eval_basics() {
        let one = Polynomial::constant(1.0);
        assert_eq!(one.eval(&[5.0, -3.0]).unwrap(), 1.0);

        let mut xsq = Polynomial::zero();
        xsq.add_term(Monomial::from_powers(vec![(0, 2)]), 1.0);
        assert_eq!(xsq.eval(&[3.0]).unwrap(), 9.0);

        // theta_1^2 - 1 at theta_1 = -1 with vars (d=0, N=1)
        let mut tsq = Polynomial::zero();
        tsq.add_term(Monomial::from_powers(vec![(0, 2)]), 1.0);
        tsq.add_term(Monomial::one(), -1.0);
        assert_eq!(tsq.eval(&[-1.0]).unwrap(), 0.0);
    }

    #[test]
    fn eval_dimension_mismatch() {
        let p = Polynomial::var(3);
        assert!(matches!(p.eval(&[1.0]), Err(PolyError::DimensionMismatch { .. })));
    }

    #[test]
    fn mul_basics() {
        let x = Polynomial::var(0);
        let xx = x.mul(&x);
        assert_eq!(xx.degree(), 2);
        assert_eq!(xx.num_terms(), 1);

        // (theta^2 - 1) * x over vars (x=0, theta=1)
        let mut tsq = Polynomial::zero();
        tsq.add_term(Monomial::from_powers(vec![(1, 2)]), 1.0);
        tsq.add_term(Monomial::one(), -1.0);
        let prod = tsq.mul(&x);
        assert_eq!(prod.num_terms(), 2);
        assert_eq!(prod.eval(&[2.0, 3.0]).unwrap(), (9.0 - 1.0) * 2.0);

        // (1+x)(1-x) = 1 - x^2
        let a = Polynomial::constant(1.0).add(&x);
        let b = Polynomial::constant(1.0).sub(&x);
        let p = a.mul(&b);
        assert_eq!(p.num_terms(), 2);
        assert_eq!(p.eval(&[0.5]).unwrap(), 1.0 - 0.25);
    }

    #[test]
    fn ring_distributivity_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let a = random_poly(&mut rng, 4, 2, 5);
            let b = random_poly(&mut rng, 4, 2, 5);
            let c = random_poly(&mut rng, 4, 2, 5);
            let lhs = a.add(&b).mul(&c);
            let rhs = a.mul(&c).add(&b.mul(&c));
            for _ in 0..5 {
                let pt: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.5..1.5)).collect();
                let l = lhs.eval(&pt).unwrap();
                let r = rhs.eval(&pt).unwrap();
                assert!((l - r).abs() <= 1e-12 * (1.0 + l.abs().max(r.abs())));
            }
        }
    }

    #[test]
    fn so3_count_and_identity() {
        let cons = so3_constraints(0);
        assert_eq!(cons.len(), 15);
        let ident = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
        for h in &cons {
            assert!(h.eval(&ident).unwrap().abs() < 1e-15);
        }
        // Scaled identity breaks the first unit-norm constraint: 1 - 4 = -3.
        let scaled: Vec<f64> = ident.iter().map(|v| 2.0 * v).collect();
        assert_eq!(cons[0].eval(&scaled).unwrap(), -3.0);
    }

    #[test]
    fn so3_row_constraints_match_on_rotations() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let cols = so3_constraints(0);
        let rows = so3_row_constraints(0);
        assert_eq!(rows.len(), 15);
        for _ in 0..100 {
            let r = random_rotation_vec(&mut rng);
            for h in cols.iter().chain(rows.iter()) {
                assert!(h.eval(&r).unwrap().abs() < 1e-12);
            }
        }
        // Row and column families are genuinely different polynomials.
        assert_ne!(cols[3], rows[3]);
    }

    #[test]
    fn so3_vanishes_on_random_rotations() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let cons = so3_constraints(0);
        for _ in 0..1000 {
            let r = random_rotation_vec(&mut rng);
            for h in &cons {
                assert!(h.eval(&r).unwrap().abs() < 1e-12);
            }
        }
    }

    #[test]
    fn so3_rejects_non_rotations() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let cons = so3_constraints(0);
        for _ in 0..1000 {
            let m: Vec<f64> = (0..9).map(|_| randn(&mut rng)).collect();
            let max_violation = cons
                .iter()
                .map(|h| h.eval(&m).unwrap().abs())
                .fold(0.0f64, f64::max);
            assert!(max_violation > 1e-6);
        }
    }

    #[test]
    fn so2_parametrization() {
        let cons = so2_constraints(0);
        assert_eq!(cons.len(), 1);
        assert!(cons[0].eval(&[1.0, 0.0]).unwrap().abs() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let phi: f64 = rng.gen_range(-3.2..3.2);
            assert!(cons[0].eval(&[phi.cos(), phi.sin()]).unwrap().abs() < 1e-15);
        }
    }

    #[test]
    fn ball_values() {
        let t = 2.5;
        let g = ball_constraint(0, 3, t).unwrap();
        assert_eq!(g.eval(&[0.0, 0.0, 0.0]).unwrap(), t * t);
        assert!(g.eval(&[t, 0.0, 0.0]).unwrap().abs() < 1e-12);
        assert!((g.eval(&[t, t, t]).unwrap() - (-2.0 * t * t)).abs() < 1e-12);
        assert!(ball_constraint(0, 3, 0.0).is_err());
        assert!(ball_constraint(0, 3, -1.0).is_err());
    }

    #[test]
    fn cone_values() {
        let alpha = std::f64::consts::FRAC_PI_2;
        let cons = fov_cone_constraints(0, alpha).unwrap();
        assert_eq!(cons.len(), 2);
        assert!(cons[0].eval(&[0.0, 0.0, 1.0]).unwrap() >= 0.0);
        assert!(cons[1].eval(&[0.0, 0.0, 1.0]).unwrap() >= 0.0);
        let boundary = [(alpha / 2.0).tan(), 0.0, 1.0];
        assert!(cons[0].eval(&boundary).unwrap().abs() < 1e-12);
        assert!(cons[1].eval(&[0.0, 0.0, -1.0]).unwrap() < 0.0);
        assert!(fov_cone_constraints(0, 0.0).is_err());
        assert!(fov_cone_constraints(0, std::f64::consts::PI).is_err());
    }

    #[test]
    fn ball_and_cone_signs_match_membership() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let t = 1.7;
        let alpha = 1.1f64;
        let ball = ball_constraint(0, 3, t).unwrap();
        let cone = fov_cone_constraints(0, alpha).unwrap();
        for _ in 0..1000 {
            let pt: Vec<f64> = (0..3).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let in_ball = pt.iter().map(|v| v * v).sum::<f64>() <= t * t;
            assert_eq!(ball.eval(&pt).unwrap() >= 0.0, in_ball);
            let in_cone = (alpha / 2.0).tan() * pt[2] >= (pt[0] * pt[0] + pt[1] * pt[1]).sqrt();
            let g_ok = cone[0].eval(&pt).unwrap() >= 0.0 && cone[1].eval(&pt).unwrap() >= 0.0;
            assert_eq!(g_ok, in_cone);
        }
    }

    #[test]
    fn differentiate_matches_finite_difference() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let p = random_poly(&mut rng, 3, 3, 8);
        let dp = p.differentiate(1);
        let pt = [0.3, -0.7, 1.2];
        let h = 1e-6;
        let mut up = pt;
        up[1] += h;
        let mut dn = pt;
        dn[1] -= h;
        let fd = (p.eval(&up).unwrap() - p.eval(&dn).unwrap()) / (2.0 * h);
        assert!((dp.eval(&pt).unwrap() - fd).abs() < 1e-6);
    }

    #[test]
    fn monomial_ordering_graded_lex() {
        let one = Monomial::one();
        let x0 = Monomial::var(0);
        let x1 = Monomial::var(1);
        let x0sq = Monomial::from_powers(vec![(0, 2)]);
        let x0x1 = x0.mul(&x1);
        let x1sq = Monomial::from_powers(vec![(1, 2)]);
        let mut v = vec![x1sq.clone(), x0x1.clone(), one.clone(), x0sq.clone(), x1.clone(), x0.clone()];
        v.sort();
        assert_eq!(v, vec![one, x0, x1, x0sq, x0x1, x1sq]);
    }
}
