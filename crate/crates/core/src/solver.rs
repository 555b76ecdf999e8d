//! Time-domain DG solver on a periodic uniform grid: linear heat equation and
//! viscous Burgers equation with explicit Runge-Kutta stepping.

use thiserror::Error;

use crate::basis::{
    build_local_matrices, legendre_deriv, legendre_eval, BasisError, QuadratureRule,
    ReferenceBasis,
};
use crate::grid::DGField;
use crate::scalar::Scalar;
use crate::scheme::{stencil_apply, SchemeError, StencilOperator};

/// Any modal coefficient beyond this magnitude counts as blow-up.
pub const BLOWUP_THRESHOLD: f64 = 1e10;

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("solution blew up at RK stage {stage} (max |U| = {max_abs:e})")]
    BlowUp { stage: usize, max_abs: f64 },
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error(transparent)]
    Basis(#[from] BasisError),
    #[error("time step must be positive, got {0}")]
    NonPositiveStep(f64),
}

/// Explicit Runge-Kutta tableaus used by the solver. On linear problems each
/// reduces to the truncated-exponential stability polynomial of its stage
/// count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RKTableau {
    /// Heun form, two stages.
    SspRk2,
    /// Shu-Osher form, three stages.
    SspRk3,
    /// Classical four-stage scheme.
    ClassicRk4,
}

impl RKTableau {
    pub fn stages(self) -> usize {
        match self {
            RKTableau::SspRk2 => 2,
            RKTableau::SspRk3 => 3,
            RKTableau::ClassicRk4 => 4,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            RKTableau::SspRk2 => "RK2",
            RKTableau::SspRk3 => "RK3",
            RKTableau::ClassicRk4 => "RK4",
        }
    }
}

fn check_finite<S: Scalar>(field: &DGField<S>, stage: usize) -> Result<(), SolveError> {
    let max_abs = field.max_abs_coeff();
    if !max_abs.is_finite() || max_abs > S::of(BLOWUP_THRESHOLD) {
        return Err(SolveError::BlowUp {
            stage,
            max_abs: max_abs.to_f64().unwrap_or(f64::INFINITY),
        });
    }
    Ok(())
}

/// One explicit multi-stage step `field -> field(t + dt)`.
pub fn rk_step<S, F>(
    field: &DGField<S>,
    rhs: F,
    dt: S,
    tableau: RKTableau,
) -> Result<DGField<S>, SolveError>
where
    S: Scalar,
    F: Fn(&DGField<S>) -> Result<DGField<S>, SolveError>,
{
    if !(dt > S::zero()) {
        return Err(SolveError::NonPositiveStep(dt.to_f64().unwrap_or(f64::NAN)));
    }
    let mut out = match tableau {
        RKTableau::SspRk2 => {
            let k = rhs(field)?;
            let mut u1 = field.clone();
            u1.axpy(dt, &k);
            check_finite(&u1, 1)?;
            let k1 = rhs(&u1)?;
            u1.axpy(dt, &k1);
            let mut out = field.clone();
            out.scale(S::half());
            out.axpy(S::half(), &u1);
            out
        }
        RKTableau::SspRk3 => {
            let k = rhs(field)?;
            let mut u1 = field.clone();
            u1.axpy(dt, &k);
            check_finite(&u1, 1)?;
            let k1 = rhs(&u1)?;
            u1.axpy(dt, &k1);
            let mut u2 = field.clone();
            u2.scale(S::of(0.75));
            u2.axpy(S::of(0.25), &u1);
            check_finite(&u2, 2)?;
            let k2 = rhs(&u2)?;
            u2.axpy(dt, &k2);
            let third = S::one() / S::of(3.0);
            let mut out = field.clone();
            out.scale(third);
            out.axpy(S::two() * third, &u2);
            out
        }
        RKTableau::ClassicRk4 => {
            let k1 = rhs(field)?;
            let mut s = field.clone();
            s.axpy(dt * S::half(), &k1);
            check_finite(&s, 1)?;
            let k2 = rhs(&s)?;
            let mut s = field.clone();
            s.axpy(dt * S::half(), &k2);
            check_finite(&s, 2)?;
            let k3 = rhs(&s)?;
            let mut s = field.clone();
            s.axpy(dt, &k3);
            check_finite(&s, 3)?;
            let k4 = rhs(&s)?;
            let sixth = dt / S::of(6.0);
            let mut out = field.clone();
            out.axpy(sixth, &k1);
            out.axpy(sixth * S::two(), &k2);
            out.axpy(sixth * S::two(), &k3);
            out.axpy(sixth, &k4);
            out
        }
    };
    check_finite(&out, tableau.stages())?;
    out.time = field.time + dt;
    Ok(out)
}

/// Heat-equation right-hand side: the viscous stencil with periodic wrap.
pub fn heat_rhs<S: Scalar>(
    field: &DGField<S>,
    op: &StencilOperator<S>,
    gamma: S,
    h: S,
) -> Result<DGField<S>, SolveError> {
    Ok(stencil_apply(op, field, gamma, h)?)
}

/// Precomputed tables for the nonlinear convection term of the Burgers
/// equation; quadrature with `ceil(3p/2) + 1` nodes integrates `u^2 P_l'`
/// exactly.
#[derive(Debug, Clone)]
pub struct ConvectionKernel<S> {
    p: usize,
    nodes: usize,
    weights: Vec<S>,
    basis_at_nodes: Vec<S>,
    deriv_at_nodes: Vec<S>,
    value_left: Vec<S>,
    value_right: Vec<S>,
    inv_mass: Vec<S>,
}

impl<S: Scalar> ConvectionKernel<S> {
    pub fn new(p: usize) -> Result<Self, SolveError> {
        let n_nodes = (3 * p).div_ceil(2) + 1;
        let rule = QuadratureRule::gauss_legendre(n_nodes)?;
        let local = build_local_matrices::<S>(p)?;
        let basis = ReferenceBasis::new(p)?;
        let n = p + 1;
        let mut basis_at_nodes = vec![S::zero(); n_nodes * n];
        let mut deriv_at_nodes = vec![S::zero(); n_nodes * n];
        for (q, &x) in rule.nodes().iter().enumerate() {
            for l in 0..n {
                basis_at_nodes[q * n + l] = legendre_eval(l, x);
                deriv_at_nodes[q * n + l] = legendre_deriv(l, x);
            }
        }
        Ok(Self {
            p,
            nodes: n_nodes,
            weights: rule.weights().to_vec(),
            basis_at_nodes,
            deriv_at_nodes,
            value_left: (0..n).map(|l| basis.value_left(l)).collect(),
            value_right: (0..n).map(|l| basis.value_right(l)).collect(),
            inv_mass: (0..n).map(|l| local.mass(l).recip()).collect(),
        })
    }

    fn trace(&self, dofs: &[S], right: bool) -> S {
        let table = if right { &self.value_right } else { &self.value_left };
        dofs.iter().zip(table).map(|(&d, &v)| d * v).sum()
    }
}

fn rusanov_flux<S: Scalar>(u_left: S, u_right: S) -> S {
    let f = |u: S| u * u * S::half();
    let speed = u_left.abs().max(u_right.abs());
    (f(u_left) + f(u_right)) * S::half() - speed * (u_right - u_left) * S::half()
}

/// Viscous Burgers right-hand side: weak-form convection with Rusanov
/// interface fluxes plus the viscous stencil contribution.
pub fn burgers_rhs<S: Scalar>(
    field: &DGField<S>,
    kernel: &ConvectionKernel<S>,
    op: &StencilOperator<S>,
    gamma: S,
    h: S,
) -> Result<DGField<S>, SolveError> {
    if field.p != kernel.p {
        return Err(SolveError::Scheme(SchemeError::DegreeMismatch {
            field: field.p,
            op: kernel.p,
        }));
    }
    let mut out = if gamma > S::zero() {
        stencil_apply(op, field, gamma, h)?
    } else {
        DGField::zeros(field.grid, field.p)
    };
    out.time = field.time;
    let ne = field.n_elements();
    let n = field.n_modes();
    // Interface fluxes, one per face e+1/2.
    let mut face_flux = vec![S::zero(); ne];
    for e in 0..ne {
        let next = (e + 1) % ne;
        let u_left = kernel.trace(field.element(e), true);
        let u_right = kernel.trace(field.element(next), false);
        face_flux[e] = rusanov_flux(u_left, u_right);
    }
    for e in 0..ne {
        let prev_face = face_flux[(e + ne - 1) % ne];
        let next_face = face_flux[e];
        let dofs = field.element(e);
        for l in 0..n {
            // int F(u) P_l' dxi by quadrature.
            let mut volume = S::zero();
            for q in 0..kernel.nodes {
                let mut u = S::zero();
                for j in 0..n {
                    u += dofs[j] * kernel.basis_at_nodes[q * n + j];
                }
                volume += kernel.weights[q] * (u * u * S::half()) * kernel.deriv_at_nodes[q * n + l];
            }
            let surface = next_face * kernel.value_right[l] - prev_face * kernel.value_left[l];
            *out.coeff_mut(e, l) += (volume - surface) * kernel.inv_mass[l] / h;
        }
    }
    Ok(out)
}

/// Domain-averaged amplitude `E_num = sqrt((1/(2 N_e)) sum_e int (u^e)^2 dxi)`
/// by exact quadrature.
pub fn field_energy<S: Scalar>(field: &DGField<S>) -> S {
    let local = build_local_matrices::<S>(field.p).expect("degree validated at construction");
    // Orthogonality collapses the integral: int (u^e)^2 dxi = sum_l 2 M_ll U_l^2.
    let mut acc = S::zero();
    for e in 0..field.n_elements() {
        for (l, &c) in field.element(e).iter().enumerate() {
            acc += S::two() * local.mass(l) * c * c;
        }
    }
    (acc / (S::two() * S::of_usize(field.n_elements()))).sqrt()
}

/// L2 error of the field against a reference profile, by `4(p+1)`-point
/// quadrature per element.
pub fn l2_error<S: Scalar, F: Fn(S) -> S>(field: &DGField<S>, exact: F) -> S {
    let rule = QuadratureRule::gauss_legendre(4 * (field.p + 1)).expect("non-empty rule");
    let mut acc = S::zero();
    for e in 0..field.n_elements() {
        let xc = field.grid.center(e);
        for (&x, &w) in rule.nodes().iter().zip(rule.weights()) {
            let diff = field.eval_local(e, x) - exact(xc + x * field.grid.h * S::half());
            acc += w * diff * diff * field.grid.h * S::half();
        }
    }
    acc.sqrt()
}

/// March `field` to `t_end` with fixed steps of `dt` (final step clipped so
/// the end time is hit exactly). Returns the number of steps taken.
pub fn advance_to<S, F>(
    field: &mut DGField<S>,
    rhs: F,
    dt: S,
    t_end: S,
    tableau: RKTableau,
) -> Result<usize, SolveError>
where
    S: Scalar,
    F: Fn(&DGField<S>) -> Result<DGField<S>, SolveError>,
{
    if !(dt > S::zero()) {
        return Err(SolveError::NonPositiveStep(dt.to_f64().unwrap_or(f64::NAN)));
    }
    let mut steps = 0usize;
    let tiny = dt * S::of(1e-12);
    while field.time < t_end - tiny {
        let remaining = t_end - field.time;
        let step = if remaining < dt { remaining } else { dt };
        *field = rk_step(field, &rhs, step, tableau)?;
        steps += 1;
    }
    field.time = t_end;
    Ok(steps)
}
