//! Source-beamformer subproblem: maximize a ratio of quadratic forms
//! subject to a transmit-power ball and a forwarded-relay-power ellipsoid.
//!
//! The ratio is driven to its global optimum by Dinkelbach iterations.
//! Each parametric subproblem is a (possibly indefinite) quadratic
//! maximization under the two constraints; its Lagrangian dual reduces to
//! a one-dimensional convex search over the constraint mixing weight,
//! where each evaluation is a generalized eigenvalue problem. With at
//! most two quadratic constraints this dual is tight, and at an interior
//! dual optimum the top generalized eigenvector satisfies both
//! constraints with equality after scaling, so the recovered vector is
//! primal-optimal. A projected gradient polish absorbs the residual
//! numerical slack.

use super::OptError;
use crate::matkit::{
    max_eig_hermitian, max_gen_eig, null_space_basis, quad_form, re, symmetrize, CMatrix, CVector,
};

/// maximize (q^H M1 q + 1) / (q^H M2 q + c)
/// subject to ||q||^2 <= p_b and q^H W q <= s.
///
/// M1, M2, W are Hermitian positive semidefinite and c > 0, so the
/// denominator stays positive and q = 0 is always feasible with value 1/c.
#[derive(Debug, Clone)]
pub struct FractionalProblem {
    pub m1: CMatrix,
    pub m2: CMatrix,
    pub c: f64,
    pub p_b: f64,
    pub w: CMatrix,
    pub s: f64,
}

impl FractionalProblem {
    pub fn value(&self, q: &CVector) -> f64 {
        (quad_form(&self.m1, q) + 1.0) / (quad_form(&self.m2, q) + self.c)
    }

    pub fn feasible(&self, q: &CVector, tol: f64) -> bool {
        q.norm_squared() <= self.p_b * (1.0 + tol) + tol
            && quad_form(&self.w, q) <= self.s * (1.0 + tol) + tol
    }

    /// Largest feasible scaling of `q` along its own direction.
    fn clip(&self, q: &CVector) -> CVector {
        let n2 = q.norm_squared();
        if n2 == 0.0 {
            return q.clone();
        }
        let wq = quad_form(&self.w, q).max(0.0);
        let mut sigma2 = self.p_b / n2;
        if wq > 0.0 {
            sigma2 = sigma2.min(self.s.max(0.0) / wq);
        }
        q * re(sigma2.min(1.0).sqrt())
    }
}

/// max q^H C q under the two constraints of `p`, for Hermitian C that may
/// be indefinite. Returns a feasible maximizer (zero when the maximum is
/// not positive).
fn inner_qcqp(p: &FractionalProblem, c_mat: &CMatrix) -> (CVector, f64) {
    let n = c_mat.nrows();
    let zero = CVector::zeros(n);
    let Ok(top) = max_eig_hermitian(c_mat) else {
        return (zero, 0.0);
    };
    if top.value <= 1e-14 {
        return (zero, 0.0);
    }
    // ball-only candidate; globally optimal whenever it meets the second
    // constraint, since it maximizes over a superset
    let q_ball = &top.vector * re(p.p_b.sqrt());
    if quad_form(&p.w, &q_ball) <= p.s * (1.0 + 1e-12) + 1e-15 {
        return (q_ball.clone(), quad_form(c_mat, &q_ball));
    }

    // dual: min over alpha of lambda_max(C, alpha I/p_b + (1-alpha) W/s),
    // convex in alpha; golden-section search
    let eye = CMatrix::identity(n, n);
    let w_scaled = symmetrize(&p.w) * re(1.0 / p.s);
    let eval = |alpha: f64| -> (f64, Option<CVector>) {
        let b = &eye * re(alpha / p.p_b) + &w_scaled * re(1.0 - alpha);
        match max_gen_eig(c_mat, &b) {
            Ok(pair) => (pair.value.max(0.0), Some(pair.vector)),
            Err(_) => (f64::INFINITY, None),
        }
    };
    let (mut lo, mut hi) = (1e-7f64, 1.0f64);
    let inv_phi = 0.618_033_988_749_894_9;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (eval(x1).0, eval(x2).0);
    for _ in 0..80 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = eval(x1).0;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = eval(x2).0;
        }
    }
    let alpha = 0.5 * (lo + hi);
    let mut best = (zero, 0.0);
    for cand_alpha in [alpha, 1.0] {
        if let (_, Some(x)) = eval(cand_alpha) {
            let q = p.clip(&(x * re(1e3))); // scale up, then clip to the boundary
            let v = quad_form(c_mat, &q);
            if v > best.1 {
                best = (q, v);
            }
        }
    }
    best
}

fn polish(p: &FractionalProblem, q0: &CVector, iters: usize) -> CVector {
    let mut q = q0.clone();
    let mut val = p.value(&q);
    let mut step = 1.0f64;
    for _ in 0..iters {
        let num = quad_form(&p.m1, &q) + 1.0;
        let den = quad_form(&p.m2, &q) + p.c;
        // d value / dq^* of the ratio
        let grad = (&p.m1 * &q - &p.m2 * &q * re(num / den)) * re(1.0 / den);
        let gnorm = grad.norm();
        if gnorm < 1e-14 {
            break;
        }
        let mut moved = false;
        let mut t = step;
        for _ in 0..25 {
            let cand = p.clip(&(&q + &grad * re(t)));
            let v = p.value(&cand);
            if v > val + 1e-15 {
                q = cand;
                val = v;
                step = t * 2.0;
                moved = true;
                break;
            }
            t *= 0.5;
        }
        if !moved {
            break;
        }
    }
    q
}

/// Globally optimizes the fractional program. Returns the maximizer and
/// its objective value.
pub fn optimize_qb_fractional(p: &FractionalProblem) -> Result<(CVector, f64), OptError> {
    let n = p.m1.nrows();
    if p.m2.nrows() != n || p.w.nrows() != n {
        return Err(OptError::ShapeMismatch(format!(
            "fractional problem matrices disagree: {n}, {}, {}",
            p.m2.nrows(),
            p.w.nrows()
        )));
    }
    if p.c <= 0.0 || p.p_b <= 0.0 {
        return Err(OptError::InfeasibleBudget(p.p_b.min(p.c)));
    }
    if p.s < -1e-12 {
        return Err(OptError::InfeasibleRelayBudget);
    }

    // degenerate relay budget: restrict to the null space of W, where the
    // ellipsoid constraint is vacuous, and solve the ball-only problem
    if p.s <= 1e-14 && p.w.norm() > 1e-12 {
        let basis = null_space_basis(&p.w.clone())?;
        if basis.ncols() == 0 {
            return Ok((CVector::zeros(n), 1.0 / p.c));
        }
        let reduced = FractionalProblem {
            m1: symmetrize(&(basis.adjoint() * &p.m1 * &basis)),
            m2: symmetrize(&(basis.adjoint() * &p.m2 * &basis)),
            c: p.c,
            p_b: p.p_b,
            w: CMatrix::zeros(basis.ncols(), basis.ncols()),
            s: 1.0,
        };
        let (y, v) = optimize_qb_fractional(&reduced)?;
        return Ok((basis * y, v));
    }

    // ball-only closed form: along any direction the ratio is monotone in
    // the squared scale, so the optimum sits at the origin or on the
    // sphere; over the sphere it is a generalized Rayleigh quotient
    let sphere = max_gen_eig(
        &symmetrize(&(&p.m1 * re(p.p_b) + CMatrix::identity(n, n))),
        &symmetrize(&(&p.m2 * re(p.p_b) + CMatrix::identity(n, n) * re(p.c))),
    )?;
    let mut best_q = CVector::zeros(n);
    let mut best_v = 1.0 / p.c;
    let q_sphere = &sphere.vector * re(p.p_b.sqrt());
    if p.feasible(&q_sphere, 1e-12) && p.value(&q_sphere) > best_v {
        best_v = p.value(&q_sphere);
        best_q = q_sphere;
    }

    // Dinkelbach iterations on gamma = achieved ratio
    let mut gamma = best_v;
    for _ in 0..60 {
        let c_mat = symmetrize(&(&p.m1 - &p.m2 * re(gamma)));
        let (q, _) = inner_qcqp(p, &c_mat);
        let q = polish(p, &p.clip(&q), 60);
        let v = p.value(&q);
        if v > best_v {
            best_v = v;
            best_q = q;
        }
        if best_v <= gamma * (1.0 + 1e-12) + 1e-14 {
            break;
        }
        gamma = best_v;
    }
    let q = polish(p, &best_q, 200);
    let v = p.value(&q);
    if v > best_v {
        Ok((q, v))
    } else {
        Ok((best_q, best_v))
    }
}
