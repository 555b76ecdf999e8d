//! Viscous-flux formulations assembled into element-stencil update matrices.
//!
//! All three formulations are assembled from the primal form: interface
//! average-derivative terms, jump-penalty terms, the volume stiffness term,
//! and the jump times test-derivative (lift) terms, divided by the mass
//! matrix. The matrices are dimensionless; the `gamma / h^2` scale is applied
//! when the stencil acts on a field:
//!
//! `dU^e/dt = (gamma/h^2) (Kmm U^{e-2} + Km U^{e-1} + L U^e + Kp U^{e+1} + Kpp U^{e+2})`
//!
//! BR2 is implemented through its interior-penalty-equivalent 1D form with
//! `C(p) = (p+1)^2 / 2`; the per-face local lift polynomial is never
//! materialized. The stabilized BR1 couples to next-nearest neighbors through
//! the cross-face coefficient `C1(p) = (-1)^{p+1} (p+1) / 4`; LDG uses
//! one-sided fluxes selected by a face switch plus the `2C(p) + eta` penalty.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::basis::{build_local_matrices, BasisError, ReferenceBasis};
use crate::grid::DGField;
use crate::linalg::Mat;
use crate::scalar::Scalar;

#[derive(Debug, Error, PartialEq)]
pub enum SchemeError {
    #[error("polynomial degree must be at least 1, got {0}")]
    DegreeTooLow(usize),
    #[error("diffusivity must be positive, got {0}")]
    NonPositiveDiffusivity(f64),
    #[error("element width must be positive, got {0}")]
    NonPositiveWidth(f64),
    #[error("penalty parameter must be finite")]
    NonFinitePenalty,
    #[error("field degree {field} does not match operator degree {op}")]
    DegreeMismatch { field: usize, op: usize },
    #[error("non-compact stencil needs at least 5 elements, got {0}")]
    RingTooSmall(usize),
    #[error(transparent)]
    Basis(#[from] BasisError),
}

/// Viscous flux formulation tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Formulation {
    /// Symmetric interior penalty; coincides with BR2 in 1D under
    /// `C(p) = (p+1)^2/2`, `hbar_f = h_e`.
    #[serde(rename = "SIPG_BR2")]
    SipgBr2,
    /// Stabilized first Bassi-Rebay scheme; `eta = 0` is the standard BR1.
    #[serde(rename = "BR1")]
    Br1,
    /// Local discontinuous Galerkin with alternating one-sided fluxes.
    #[serde(rename = "LDG")]
    Ldg,
}

impl Formulation {
    pub fn label(self) -> &'static str {
        match self {
            Formulation::SipgBr2 => "SIPG_BR2",
            Formulation::Br1 => "BR1",
            Formulation::Ldg => "LDG",
        }
    }
}

/// LDG upwind direction: `Right` takes the solution trace from the right
/// element and the gradient trace from the left element at every face.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BetaSwitch {
    Right,
    Left,
}

impl Default for BetaSwitch {
    fn default() -> Self {
        BetaSwitch::Right
    }
}

/// Complete description of one viscous discretization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "S: Serialize",
    deserialize = "S: serde::Deserialize<'de> + num_traits::One"
))]
pub struct SchemeConfig<S> {
    pub formulation: Formulation,
    pub p: usize,
    pub eta: S,
    #[serde(default)]
    pub beta_switch: BetaSwitch,
    pub gamma: S,
    /// Element width; not part of the wire format, set from the grid in use.
    #[serde(skip, default = "unit_width")]
    pub h: S,
}

fn unit_width<S: num_traits::One>() -> S {
    S::one()
}

impl<S: Scalar> SchemeConfig<S> {
    pub fn new(
        formulation: Formulation,
        p: usize,
        eta: S,
        beta_switch: BetaSwitch,
        gamma: S,
        h: S,
    ) -> Result<Self, SchemeError> {
        if p < 1 {
            return Err(SchemeError::DegreeTooLow(p));
        }
        if !(gamma > S::zero()) {
            return Err(SchemeError::NonPositiveDiffusivity(
                gamma.to_f64().unwrap_or(f64::NAN),
            ));
        }
        if !(h > S::zero()) {
            return Err(SchemeError::NonPositiveWidth(h.to_f64().unwrap_or(f64::NAN)));
        }
        if !eta.is_finite() {
            return Err(SchemeError::NonFinitePenalty);
        }
        Ok(Self {
            formulation,
            p,
            eta,
            beta_switch,
            gamma,
            h,
        })
    }

    /// Convenience constructor for the dimensionless analysis setting.
    pub fn analysis(formulation: Formulation, p: usize, eta: S) -> Result<Self, SchemeError> {
        Self::new(formulation, p, eta, BetaSwitch::Right, S::one(), S::one())
    }

    /// Smallest semi-discretely stable penalty for this formulation/order.
    pub fn eta_min(&self) -> S {
        match self.formulation {
            Formulation::SipgBr2 => S::of_usize(self.p) / S::of_usize(self.p + 1),
            Formulation::Br1 => S::zero(),
            Formulation::Ldg => -S::of_usize(2 * self.p + 1),
        }
    }

    /// Penalties below the stability minimum are permitted (the minimum-eta
    /// scan probes them) but flagged.
    pub fn is_flagged_unstable(&self) -> bool {
        self.eta < self.eta_min() - S::of(1e-12)
    }

    /// `C(p) = (p+1)^2 / 2`.
    pub fn jump_coefficient(&self) -> S {
        S::of_usize((self.p + 1) * (self.p + 1)) * S::half()
    }

    /// `C1(p) = (-1)^{p+1} (p+1) / 4`, the BR1 cross-face coefficient.
    pub fn cross_face_coefficient(&self) -> S {
        let sign = if self.p % 2 == 0 { -S::one() } else { S::one() };
        sign * S::of_usize(self.p + 1) / S::of(4.0)
    }
}

/// The five element-coupling matrices of the vector update form.
#[derive(Debug, Clone, PartialEq)]
pub struct StencilOperator<S> {
    p: usize,
    kmm: Mat<S>,
    km: Mat<S>,
    l: Mat<S>,
    kp: Mat<S>,
    kpp: Mat<S>,
}

impl<S: Scalar> StencilOperator<S> {
    pub fn degree(&self) -> usize {
        self.p
    }

    pub fn second_left(&self) -> &Mat<S> {
        &self.kmm
    }

    pub fn left(&self) -> &Mat<S> {
        &self.km
    }

    pub fn center(&self) -> &Mat<S> {
        &self.l
    }

    pub fn right(&self) -> &Mat<S> {
        &self.kp
    }

    pub fn second_right(&self) -> &Mat<S> {
        &self.kpp
    }

    /// True when the next-nearest blocks vanish identically.
    pub fn is_compact(&self) -> bool {
        self.kmm.is_zero(S::zero()) && self.kpp.is_zero(S::zero())
    }

    pub fn blocks(&self) -> [&Mat<S>; 5] {
        [&self.kmm, &self.km, &self.l, &self.kp, &self.kpp]
    }

    pub fn max_abs_diff(&self, other: &Self) -> S {
        self.blocks()
            .iter()
            .zip(other.blocks().iter())
            .fold(S::zero(), |m, (a, b)| m.max(a.max_abs_diff(b)))
    }
}

struct AssemblyTables<S> {
    n: usize,
    v_left: Vec<S>,
    v_right: Vec<S>,
    d_left: Vec<S>,
    d_right: Vec<S>,
    stiffness: Vec<S>,
    inv_mass: Vec<S>,
}

impl<S: Scalar> AssemblyTables<S> {
    fn new(p: usize) -> Result<Self, SchemeError> {
        let basis = ReferenceBasis::new(p)?;
        let local = build_local_matrices::<S>(p)?;
        let n = p + 1;
        let mut stiffness = Vec::with_capacity(n * n);
        for l in 0..n {
            for j in 0..n {
                stiffness.push(local.stiffness(l, j));
            }
        }
        Ok(Self {
            n,
            v_left: (0..n).map(|l| basis.value_left(l)).collect(),
            v_right: (0..n).map(|l| basis.value_right(l)).collect(),
            d_left: (0..n).map(|l| basis.deriv_left(l)).collect(),
            d_right: (0..n).map(|l| basis.deriv_right(l)).collect(),
            stiffness,
            inv_mass: (0..n).map(|l| local.mass(l).recip()).collect(),
        })
    }
}

/// Assemble the update matrices for the chosen formulation.
pub fn assemble_stencil<S: Scalar>(config: &SchemeConfig<S>) -> Result<StencilOperator<S>, SchemeError> {
    if config.p < 1 {
        return Err(SchemeError::DegreeTooLow(config.p));
    }
    let t = AssemblyTables::new(config.p)?;
    let n = t.n;
    let mut kmm = Mat::zeros(n);
    let mut km = Mat::zeros(n);
    let mut l_mat = Mat::zeros(n);
    let mut kp = Mat::zeros(n);
    let mut kpp = Mat::zeros(n);

    let c = config.jump_coefficient();
    let two = S::two();
    match config.formulation {
        Formulation::SipgBr2 => {
            let pen = config.eta * c;
            for l in 0..n {
                for j in 0..n {
                    let lc = t.v_right[l] * t.d_right[j] - t.v_left[l] * t.d_left[j]
                        - pen * (t.v_right[l] * t.v_right[j] + t.v_left[l] * t.v_left[j])
                        - two * t.stiffness[l * n + j]
                        + t.d_right[l] * t.v_right[j]
                        - t.d_left[l] * t.v_left[j];
                    let pc = t.v_right[l] * t.d_left[j] + pen * t.v_right[l] * t.v_left[j]
                        - t.d_right[l] * t.v_left[j];
                    let mc = -t.v_left[l] * t.d_right[j]
                        + pen * t.v_left[l] * t.v_right[j]
                        + t.d_left[l] * t.v_right[j];
                    l_mat.set(l, j, lc);
                    kp.set(l, j, pc);
                    km.set(l, j, mc);
                }
            }
        }
        Formulation::Br1 => {
            // eta_tilde = 1 + eta folds the added penalty into the standard
            // BR1 lift average; the C1 terms carry the next-neighbor coupling.
            let pen = (S::one() + config.eta) * c;
            let c1 = config.cross_face_coefficient();
            for l in 0..n {
                for j in 0..n {
                    let lc = t.v_right[l] * t.d_right[j] - t.v_left[l] * t.d_left[j]
                        - pen * (t.v_right[l] * t.v_right[j] + t.v_left[l] * t.v_left[j])
                        - c1 * (t.v_left[j] * t.v_right[l] + t.v_right[j] * t.v_left[l])
                        - two * t.stiffness[l * n + j]
                        + t.d_right[l] * t.v_right[j]
                        - t.d_left[l] * t.v_left[j];
                    let pc = t.v_right[l] * t.d_left[j]
                        + pen * t.v_right[l] * t.v_left[j]
                        + c1 * (t.v_right[j] * t.v_right[l] + t.v_left[j] * t.v_left[l])
                        - t.d_right[l] * t.v_left[j];
                    let mc = -t.v_left[l] * t.d_right[j]
                        + pen * t.v_left[l] * t.v_right[j]
                        + c1 * (t.v_right[j] * t.v_right[l] + t.v_left[j] * t.v_left[l])
                        + t.d_left[l] * t.v_right[j];
                    let ppc = -c1 * t.v_left[j] * t.v_right[l];
                    let mmc = -c1 * t.v_right[j] * t.v_left[l];
                    l_mat.set(l, j, lc);
                    kp.set(l, j, pc);
                    km.set(l, j, mc);
                    kpp.set(l, j, ppc);
                    kmm.set(l, j, mmc);
                }
            }
        }
        Formulation::Ldg => {
            let pen = two * c + config.eta;
            match config.beta_switch {
                BetaSwitch::Right => {
                    for l in 0..n {
                        for j in 0..n {
                            let lc = two * t.d_right[j] * t.v_right[l]
                                - pen * (t.v_right[l] * t.v_right[j] + t.v_left[l] * t.v_left[j])
                                - two * t.stiffness[l * n + j]
                                + two * t.d_right[l] * t.v_right[j];
                            let pc = pen * t.v_right[l] * t.v_left[j]
                                - two * t.d_right[l] * t.v_left[j];
                            let mc = -two * t.d_right[j] * t.v_left[l]
                                + pen * t.v_left[l] * t.v_right[j];
                            l_mat.set(l, j, lc);
                            kp.set(l, j, pc);
                            km.set(l, j, mc);
                        }
                    }
                }
                BetaSwitch::Left => {
                    for l in 0..n {
                        for j in 0..n {
                            let lc = -two * t.d_left[j] * t.v_left[l]
                                - pen * (t.v_right[l] * t.v_right[j] + t.v_left[l] * t.v_left[j])
                                - two * t.stiffness[l * n + j]
                                - two * t.d_left[l] * t.v_left[j];
                            let pc = two * t.d_left[j] * t.v_right[l]
                                + pen * t.v_right[l] * t.v_left[j];
                            let mc = pen * t.v_left[l] * t.v_right[j]
                                + two * t.d_left[l] * t.v_right[j];
                            l_mat.set(l, j, lc);
                            kp.set(l, j, pc);
                            km.set(l, j, mc);
                        }
                    }
                }
            }
        }
    }

    for mat in [&mut kmm, &mut km, &mut l_mat, &mut kp, &mut kpp] {
        for l in 0..n {
            mat.scale_row(l, t.inv_mass[l]);
        }
    }

    Ok(StencilOperator {
        p: config.p,
        kmm,
        km,
        l: l_mat,
        kp,
        kpp,
    })
}

/// Apply the stencil to a periodic field: the semi-discrete time derivative.
pub fn stencil_apply<S: Scalar>(
    op: &StencilOperator<S>,
    field: &DGField<S>,
    gamma: S,
    h: S,
) -> Result<DGField<S>, SchemeError> {
    if field.p != op.p {
        return Err(SchemeError::DegreeMismatch {
            field: field.p,
            op: op.p,
        });
    }
    let ne = field.n_elements();
    if !op.is_compact() && ne < 5 {
        return Err(SchemeError::RingTooSmall(ne));
    }
    let scale = gamma / (h * h);
    let n = op.p + 1;
    let compact = op.is_compact();
    let mut out = DGField::zeros(field.grid, field.p);
    out.time = field.time;
    let mut local = vec![S::zero(); n];
    for e in 0..ne {
        local.iter_mut().for_each(|v| *v = S::zero());
        let prev = (e + ne - 1) % ne;
        let next = (e + 1) % ne;
        op.km.mul_vec_acc(field.element(prev), S::one(), &mut local);
        op.l.mul_vec_acc(field.element(e), S::one(), &mut local);
        op.kp.mul_vec_acc(field.element(next), S::one(), &mut local);
        if !compact {
            let prev2 = (e + ne - 2) % ne;
            let next2 = (e + 2) % ne;
            op.kmm.mul_vec_acc(field.element(prev2), S::one(), &mut local);
            op.kpp.mul_vec_acc(field.element(next2), S::one(), &mut local);
        }
        for l in 0..n {
            *out.coeff_mut(e, l) = scale * local[l];
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use approx::assert_abs_diff_eq;

    fn consistency_defect(op: &StencilOperator<f64>) -> f64 {
        // (Kmm + Km + L + Kp + Kpp) e_0 must vanish.
        let n = op.degree() + 1;
        let mut worst: f64 = 0.0;
        for l in 0..n {
            let sum: f64 = op.blocks().iter().map(|m| m.get(l, 0)).sum();
            worst = worst.max(sum.abs());
        }
        worst
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(matches!(
            SchemeConfig::new(Formulation::SipgBr2, 0, 1.0, BetaSwitch::Right, 1.0, 1.0),
            Err(SchemeError::DegreeTooLow(0))
        ));
        assert!(SchemeConfig::new(Formulation::Ldg, 2, 0.0, BetaSwitch::Right, -1.0, 1.0).is_err());
        assert!(SchemeConfig::new(Formulation::Ldg, 2, 0.0, BetaSwitch::Right, 1.0, 0.0).is_err());
        assert!(
            SchemeConfig::new(Formulation::Br1, 2, f64::NAN, BetaSwitch::Right, 1.0, 1.0).is_err()
        );
    }

    #[test]
    fn stability_flagging_follows_minimum() {
        let br2 = SchemeConfig::analysis(Formulation::SipgBr2, 2, 0.5).unwrap();
        assert!(br2.is_flagged_unstable());
        let br2_ok = SchemeConfig::analysis(Formulation::SipgBr2, 2, 0.67).unwrap();
        assert!(!br2_ok.is_flagged_unstable());
        let ldg = SchemeConfig::analysis(Formulation::Ldg, 3, -7.0).unwrap();
        assert!(!ldg.is_flagged_unstable());
        let ldg_bad = SchemeConfig::analysis(Formulation::Ldg, 3, -7.5).unwrap();
        assert!(ldg_bad.is_flagged_unstable());
    }

    #[test]
    fn br2_p1_matrices_frozen() {
        // Frozen from the exact rational assembly of the interior-penalty
        // primal form at p = 1, eta = 1.
        let config = SchemeConfig::analysis(Formulation::SipgBr2, 1, 1.0).unwrap();
        let op = assemble_stencil(&config).unwrap();
        let km = Mat::from_rows(&[&[2.0, 1.0], &[-3.0, 0.0]]);
        let l = Mat::from_rows(&[&[-4.0, 0.0], &[0.0, -12.0]]);
        let kp = Mat::from_rows(&[&[2.0, -1.0], &[3.0, 0.0]]);
        assert!(op.left().max_abs_diff(&km) < 1e-14);
        assert!(op.center().max_abs_diff(&l) < 1e-14);
        assert!(op.right().max_abs_diff(&kp) < 1e-14);
        assert!(op.is_compact());
    }

    #[test]
    fn ldg_p1_matrices_frozen() {
        let config = SchemeConfig::analysis(Formulation::Ldg, 1, 0.0).unwrap();
        let op = assemble_stencil(&config).unwrap();
        let km = Mat::from_rows(&[&[4.0, 2.0], &[-12.0, -6.0]]);
        let l = Mat::from_rows(&[&[-8.0, 2.0], &[6.0, -24.0]]);
        let kp = Mat::from_rows(&[&[4.0, -4.0], &[6.0, -6.0]]);
        assert!(op.left().max_abs_diff(&km) < 1e-14);
        assert!(op.center().max_abs_diff(&l) < 1e-14);
        assert!(op.right().max_abs_diff(&kp) < 1e-14);
    }

    #[test]
    fn compactness_by_formulation() {
        for p in 1..=4 {
            let br2 = assemble_stencil(
                &SchemeConfig::analysis(Formulation::SipgBr2, p, 1.0).unwrap(),
            )
            .unwrap();
            assert!(br2.is_compact());
            let ldg =
                assemble_stencil(&SchemeConfig::analysis(Formulation::Ldg, p, 0.0).unwrap())
                    .unwrap();
            assert!(ldg.is_compact());
            let br1 =
                assemble_stencil(&SchemeConfig::analysis(Formulation::Br1, p, 0.0).unwrap())
                    .unwrap();
            assert!(!br1.is_compact(), "BR1 couples to next-nearest neighbors");
        }
    }

    #[test]
    fn consistency_over_eta_sweep() {
        for p in 1..=8 {
            for k in 0..20 {
                let eta = -3.0 + 0.4 * k as f64;
                for formulation in [Formulation::SipgBr2, Formulation::Br1, Formulation::Ldg] {
                    let config = SchemeConfig::analysis(formulation, p, eta).unwrap();
                    let op = assemble_stencil(&config).unwrap();
                    let defect = consistency_defect(&op);
                    assert!(
                        defect < 1e-12,
                        "{} p{} eta {} defect {defect}",
                        formulation.label(),
                        p,
                        eta
                    );
                }
            }
        }
    }

    #[test]
    fn br1_zero_eta_is_standard_br1() {
        // eta_tilde = 1 exactly reproduces the unstabilized lift average.
        let a = assemble_stencil(&SchemeConfig::analysis(Formulation::Br1, 3, 0.0).unwrap())
            .unwrap();
        let b = assemble_stencil(
            &SchemeConfig::new(Formulation::Br1, 3, 0.0, BetaSwitch::Left, 1.0, 1.0).unwrap(),
        )
        .unwrap();
        // The switch is LDG-only; BR1 ignores it.
        assert!(a.max_abs_diff(&b) == 0.0);
    }

    #[test]
    fn ldg_switch_parity_map() {
        // Mirroring the switch conjugates the stencil with parity
        // D = diag((-1)^l) and swaps the off-diagonal blocks.
        for p in 1..=5 {
            for eta in [0.0, 1.5, -3.0] {
                let right: StencilOperator<f64> = assemble_stencil(
                    &SchemeConfig::new(Formulation::Ldg, p, eta, BetaSwitch::Right, 1.0, 1.0)
                        .unwrap(),
                )
                .unwrap();
                let left: StencilOperator<f64> = assemble_stencil(
                    &SchemeConfig::new(Formulation::Ldg, p, eta, BetaSwitch::Left, 1.0, 1.0)
                        .unwrap(),
                )
                .unwrap();
                let n = p + 1;
                let mut worst: f64 = 0.0;
                for l in 0..n {
                    for j in 0..n {
                        let sign = if (l + j) % 2 == 0 { 1.0 } else { -1.0 };
                        worst = worst
                            .max((right.left().get(l, j) - sign * left.right().get(l, j)).abs());
                        worst = worst
                            .max((right.right().get(l, j) - sign * left.left().get(l, j)).abs());
                        worst = worst
                            .max((right.center().get(l, j) - sign * left.center().get(l, j)).abs());
                    }
                }
                assert!(worst < 1e-12, "parity defect {worst} at p={p} eta={eta}");
            }
        }
    }

    #[test]
    fn constant_field_has_zero_derivative() {
        let grid = GridSpec::new(0.0_f64, 1.0, 6).unwrap();
        let field = DGField::project(grid, 2, |_| 3.25).unwrap();
        for formulation in [Formulation::SipgBr2, Formulation::Br1, Formulation::Ldg] {
            let config = SchemeConfig::analysis(formulation, 2, 1.0).unwrap();
            let op = assemble_stencil(&config).unwrap();
            let rate = stencil_apply(&op, &field, 0.7, grid.h).unwrap();
            assert!(rate.max_abs_coeff() < 1e-11);
        }
    }

    #[test]
    fn small_ring_rejected_for_noncompact() {
        let grid = GridSpec::new(0.0_f64, 1.0, 3).unwrap();
        let field = DGField::zeros(grid, 2);
        let br1 = assemble_stencil(&SchemeConfig::analysis(Formulation::Br1, 2, 0.0).unwrap())
            .unwrap();
        assert!(matches!(
            stencil_apply(&br1, &field, 1.0, grid.h),
            Err(SchemeError::RingTooSmall(3))
        ));
        // Compact schemes accept the same ring.
        let br2 = assemble_stencil(&SchemeConfig::analysis(Formulation::SipgBr2, 2, 1.0).unwrap())
            .unwrap();
        assert!(stencil_apply(&br2, &field, 1.0, grid.h).is_ok());
    }

    #[test]
    fn degree_mismatch_rejected() {
        let grid = GridSpec::new(0.0_f64, 1.0, 6).unwrap();
        let field = DGField::zeros(grid, 3);
        let op = assemble_stencil(&SchemeConfig::analysis(Formulation::SipgBr2, 2, 1.0).unwrap())
            .unwrap();
        assert!(matches!(
            stencil_apply(&op, &field, 1.0, grid.h),
            Err(SchemeError::DegreeMismatch { field: 3, op: 2 })
        ));
    }

    #[test]
    fn cell_average_conservation_on_random_field() {
        let grid = GridSpec::new(0.0_f64, 2.0, 9).unwrap();
        // Deterministic scrambled field.
        let field = DGField::project(grid, 3, |x| {
            (7.3 * x).sin() + 0.3 * (2.1 * x * x).cos()
        })
        .unwrap();
        for formulation in [Formulation::SipgBr2, Formulation::Br1, Formulation::Ldg] {
            let config = SchemeConfig::analysis(formulation, 3, 1.0).unwrap();
            let op = assemble_stencil(&config).unwrap();
            let rate = stencil_apply(&op, &field, 1.0, grid.h).unwrap();
            let total: f64 = (0..9).map(|e| rate.coeff(e, 0)).sum();
            assert!(
                total.abs() < 1e-12 * rate.max_abs_coeff().max(1.0) * 9.0,
                "{}: mean drift {total}",
                formulation.label()
            );
        }
    }

    #[test]
    fn config_json_round_trip() {
        let config = SchemeConfig::new(
            Formulation::SipgBr2,
            3,
            0.75,
            BetaSwitch::Right,
            0.01,
            0.125,
        )
        .unwrap();
        let text = serde_json::to_string(&config).unwrap();
        assert!(text.contains("\"SIPG_BR2\""));
        assert!(text.contains("\"beta_switch\":\"right\""));
        assert!(!text.contains("\"h\""), "element width is not part of the wire format");
        let back: SchemeConfig<f64> = serde_json::from_str(&text).unwrap();
        assert_eq!(back.formulation, config.formulation);
        assert_abs_diff_eq!(back.eta, config.eta);
        assert_abs_diff_eq!(back.h, 1.0);
        assert!(serde_json::from_str::<SchemeConfig<f64>>(
            "{\"formulation\":\"CDG\",\"p\":2,\"eta\":1.0,\"gamma\":1.0}"
        )
        .is_err());
    }
}
