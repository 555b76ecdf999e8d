//! Legendre modal basis on the reference element `[-1, 1]`, Gauss quadrature,
//! and the local mass/stiffness matrices of the discretization.
//!
//! The basis is normalized so that `P_l(1) = 1` and `P_l(-1) = (-1)^l`; mass
//! entries are `M_ll = 1/(2l+1)` and the stiffness matrix couples only modes
//! of equal parity.

use thiserror::Error;

use crate::scalar::{Scalar, C};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BasisError {
    #[error("polynomial degree must be at least 1, got {0}")]
    DegreeTooLow(usize),
    #[error("quadrature rule needs at least 1 node")]
    EmptyRule,
}

/// Legendre polynomial `P_l(xi)` by the three-term recurrence.
pub fn legendre_eval<S: Scalar>(l: usize, xi: S) -> S {
    legendre_pair(l, xi).0
}

/// Derivative `dP_l/dxi`, from the recurrence `P'_{l+1} = (2l+1) P_l + P'_{l-1}`.
pub fn legendre_deriv<S: Scalar>(l: usize, xi: S) -> S {
    legendre_pair(l, xi).1
}

fn legendre_pair<S: Scalar>(l: usize, xi: S) -> (S, S) {
    let mut value = S::one();
    let mut deriv = S::zero();
    if l == 0 {
        return (value, deriv);
    }
    let mut prev_value = value;
    let mut prev_deriv = deriv;
    value = xi;
    deriv = S::one();
    for m in 1..l {
        let mf = S::of_usize(m);
        let two_m1 = S::of_usize(2 * m + 1);
        let next_value = (two_m1 * xi * value - mf * prev_value) / S::of_usize(m + 1);
        let next_deriv = two_m1 * value + prev_deriv;
        prev_value = value;
        prev_deriv = deriv;
        value = next_value;
        deriv = next_deriv;
    }
    (value, deriv)
}

/// Evaluate the modal expansion `sum_l dofs[l] * P_l(xi)`.
pub fn eval_modal<S: Scalar>(dofs: &[S], xi: S) -> S {
    // Three-term recurrence inlined so a (p+1)-term sum costs one pass.
    let mut acc = S::zero();
    let mut prev = S::one();
    let mut cur = xi;
    for (l, &d) in dofs.iter().enumerate() {
        let basis = match l {
            0 => S::one(),
            1 => xi,
            _ => {
                let m = l - 1;
                let next = (S::of_usize(2 * m + 1) * xi * cur - S::of_usize(m) * prev)
                    / S::of_usize(m + 1);
                prev = cur;
                cur = next;
                cur
            }
        };
        acc += d * basis;
    }
    acc
}

/// Endpoint tables of the basis of degree `p`.
#[derive(Debug, Clone)]
pub struct ReferenceBasis<S> {
    p: usize,
    /// `[P_l(-1), P_l(+1)]` for `l = 0..=p`.
    endpoint_values: Vec<[S; 2]>,
    /// `[P_l'(-1), P_l'(+1)]` for `l = 0..=p`.
    derivative_endpoint_values: Vec<[S; 2]>,
}

impl<S: Scalar> ReferenceBasis<S> {
    pub fn new(p: usize) -> Result<Self, BasisError> {
        if p < 1 {
            return Err(BasisError::DegreeTooLow(p));
        }
        let mut endpoint_values = Vec::with_capacity(p + 1);
        let mut derivative_endpoint_values = Vec::with_capacity(p + 1);
        for l in 0..=p {
            // P_l(1) = 1, P_l(-1) = (-1)^l, P_l'(1) = l(l+1)/2 and the parity rule.
            let sign = if l % 2 == 0 { S::one() } else { -S::one() };
            let d_right = S::of_usize(l * (l + 1)) * S::half();
            endpoint_values.push([sign, S::one()]);
            derivative_endpoint_values.push([-sign * d_right, d_right]);
        }
        Ok(Self {
            p,
            endpoint_values,
            derivative_endpoint_values,
        })
    }

    pub fn degree(&self) -> usize {
        self.p
    }

    pub fn value_left(&self, l: usize) -> S {
        self.endpoint_values[l][0]
    }

    pub fn value_right(&self, l: usize) -> S {
        self.endpoint_values[l][1]
    }

    pub fn deriv_left(&self, l: usize) -> S {
        self.derivative_endpoint_values[l][0]
    }

    pub fn deriv_right(&self, l: usize) -> S {
        self.derivative_endpoint_values[l][1]
    }
}

/// Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct QuadratureRule<S> {
    nodes: Vec<S>,
    weights: Vec<S>,
}

impl<S: Scalar> QuadratureRule<S> {
    /// Nodes and weights by Newton iteration on the roots of `P_n`.
    pub fn gauss_legendre(n: usize) -> Result<Self, BasisError> {
        if n == 0 {
            return Err(BasisError::EmptyRule);
        }
        let tol = S::of(1e-14).max(S::epsilon() * S::of(4.0));
        let mut nodes = vec![S::zero(); n];
        let mut weights = vec![S::zero(); n];
        for i in 0..n {
            // Tricomi-style initial guess, then Newton on P_n.
            let theta = S::PI() * (S::of_usize(i) + S::of(0.75)) / (S::of_usize(n) + S::half());
            let mut x = theta.cos();
            for _ in 0..100 {
                let (value, d) = legendre_pair(n, x);
                let step = value / d;
                x = x - step;
                if step.abs() <= tol {
                    break;
                }
            }
            let (_, deriv) = legendre_pair(n, x);
            nodes[i] = x;
            weights[i] = S::two() / ((S::one() - x * x) * deriv * deriv);
        }
        nodes.reverse();
        weights.reverse();
        if n % 2 == 1 {
            nodes[n / 2] = S::zero();
        }
        Ok(Self { nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[S] {
        &self.nodes
    }

    pub fn weights(&self) -> &[S] {
        &self.weights
    }

    pub fn integrate<F: Fn(S) -> S>(&self, f: F) -> S {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Diagonal mass entries and the stiffness matrix of the reference element.
#[derive(Debug, Clone)]
pub struct LocalMatrices<S> {
    p: usize,
    /// `M_ll = (1/2) int P_l^2 dxi`.
    mass: Vec<S>,
    /// `S_lj = int P_l' P_j' dxi`, row-major `(p+1) x (p+1)`.
    stiffness: Vec<S>,
}

impl<S: Scalar> LocalMatrices<S> {
    pub fn degree(&self) -> usize {
        self.p
    }

    pub fn mass(&self, l: usize) -> S {
        self.mass[l]
    }

    pub fn stiffness(&self, l: usize, j: usize) -> S {
        self.stiffness[l * (self.p + 1) + j]
    }

    /// Denominator `L_ll = 2 M_ll` of the projection formula.
    pub fn projection_denominator(&self, l: usize) -> S {
        S::two() * self.mass[l]
    }
}

/// Mass and stiffness by a quadrature rule exact for degree `2p`.
pub fn build_local_matrices<S: Scalar>(p: usize) -> Result<LocalMatrices<S>, BasisError> {
    if p < 1 {
        return Err(BasisError::DegreeTooLow(p));
    }
    let rule = QuadratureRule::gauss_legendre(p + 1)?;
    let n = p + 1;
    let mut values = vec![S::zero(); rule.len() * n];
    let mut derivs = vec![S::zero(); rule.len() * n];
    for (q, &x) in rule.nodes().iter().enumerate() {
        for l in 0..n {
            let (v, d) = legendre_pair(l, x);
            values[q * n + l] = v;
            derivs[q * n + l] = d;
        }
    }
    let mut mass = vec![S::zero(); n];
    let mut stiffness = vec![S::zero(); n * n];
    for (q, &w) in rule.weights().iter().enumerate() {
        for l in 0..n {
            mass[l] += S::half() * w * values[q * n + l] * values[q * n + l];
            for j in 0..n {
                stiffness[l * n + j] += w * derivs[q * n + l] * derivs[q * n + j];
            }
        }
    }
    Ok(LocalMatrices { p, mass, stiffness })
}

/// Projected coefficients of a single Fourier mode `exp(i kh xi / 2)` on the
/// reference element: `mu_l = int exp(i kh xi/2) P_l dxi / (2 M_ll)`.
///
/// Uses a `4(p+1)`-point rule, which drives projection error of the
/// transcendental integrand below 1e-12 on the resolvable range.
pub fn fourier_coefficients<S: Scalar>(p: usize, kh: S) -> Result<Vec<C<S>>, BasisError> {
    if p < 1 {
        return Err(BasisError::DegreeTooLow(p));
    }
    let rule = QuadratureRule::gauss_legendre(4 * (p + 1))?;
    let local = build_local_matrices::<S>(p)?;
    let mut coeffs = vec![C::new(S::zero(), S::zero()); p + 1];
    for (&x, &w) in rule.nodes().iter().zip(rule.weights()) {
        let phase = kh * x * S::half();
        let kernel = C::new(phase.cos(), phase.sin());
        let mut prev = S::one();
        let mut cur = x;
        for (l, c) in coeffs.iter_mut().enumerate() {
            let basis = match l {
                0 => S::one(),
                1 => x,
                _ => {
                    let m = l - 1;
                    let next = (S::of_usize(2 * m + 1) * x * cur - S::of_usize(m) * prev)
                        / S::of_usize(m + 1);
                    prev = cur;
                    cur = next;
                    cur
                }
            };
            *c += kernel * (w * basis);
        }
    }
    for (l, c) in coeffs.iter_mut().enumerate() {
        *c = *c / local.projection_denominator(l);
    }
    Ok(coeffs)
}
