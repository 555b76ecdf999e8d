//! Semi-discrete and fully-discrete von Neumann analysis.
//!
//! The periodic stencil at dimensionless wavenumber `kh` has the symbol
//!
//! `A(kh) = Kmm e^{-2i kh} + Km e^{-i kh} + L + Kp e^{i kh} + Kpp e^{2i kh}`
//!
//! whose `p+1` eigenpairs drive everything else: eigenmode dissipation curves,
//! expansion weights of the projected Fourier mode, combined-mode ("true")
//! diffusion factors, the minimum-penalty scan, and the maximum-time-step scan
//! for explicit Runge-Kutta integration.

use thiserror::Error;

use crate::basis::{fourier_coefficients, BasisError, QuadratureRule};
use crate::linalg::{self, CMat, EigenError};
use crate::scalar::{Scalar, C};
use crate::scheme::{assemble_stencil, SchemeConfig, SchemeError, StencilOperator};

/// Number of wavenumber samples used by the stability scans; resolves the
/// narrow instability pockets near the Nyquist wavenumber.
pub const SCAN_KH_SAMPLES: usize = 401;

/// Non-growing tolerance on `Re lambda` (semi-discrete) and on
/// `|lambda_G| - 1` (fully-discrete); separates round-off at the consistency
/// zero eigenvalue from genuine growth.
pub const GROWTH_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("eigen decomposition failed at kh = {kh}: {source}")]
    EigenAt { kh: f64, source: EigenError },
    #[error("eigenvector matrix is singular at kh = {kh}")]
    SingularModeMatrix { kh: f64 },
    #[error("scheme is not semi-discretely stable (max Re lambda = {max_re:e})")]
    SemiDiscreteUnstable { max_re: f64 },
    #[error("non-dimensional time must be non-negative, got {0}")]
    NegativeTime(f64),
    #[error("fully-discrete eigenvalue is zero: log singularity")]
    LogSingularity,
    #[error("Runge-Kutta stage count must be 2, 3, or 4, got {0}")]
    InvalidStageCount(usize),
    #[error("time step must be positive, got {0}")]
    NonPositiveStep(f64),
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error(transparent)]
    Basis(#[from] BasisError),
}

/// Eigen structure of the symbol at one wavenumber, physical mode first.
#[derive(Debug, Clone)]
pub struct EigenSystem<S> {
    pub kh: S,
    /// Eigenvalues `lambda_j = -(h^2/gamma) omega_j`; index 0 is mode(1).
    pub lambdas: Vec<C<S>>,
    /// Unit-norm eigenvectors as columns, ordered like `lambdas`.
    pub vectors: CMat<S>,
    /// Expansion weights `theta` of the projected Fourier mode.
    pub weights: Vec<C<S>>,
    /// Relative energy shares `Gamma_l = |theta_l|^2 / sum |theta_j|^2`.
    pub shares: Vec<S>,
    /// 1-norm condition number of the eigenvector matrix.
    pub condition: S,
}

impl<S: Scalar> EigenSystem<S> {
    pub fn n_modes(&self) -> usize {
        self.lambdas.len()
    }

    pub fn max_imag(&self) -> S {
        self.lambdas
            .iter()
            .fold(S::zero(), |m, z| m.max(z.im.abs()))
    }

    pub fn max_real(&self) -> S {
        self.lambdas
            .iter()
            .fold(S::neg_infinity(), |m, z| m.max(z.re))
    }

    /// Physical-mode eigenvalue.
    pub fn physical(&self) -> C<S> {
        self.lambdas[0]
    }
}

/// Dimensionless wavenumber bookkeeping for one analysis point.
#[derive(Debug, Clone)]
pub struct WavenumberPoint<S> {
    /// `kh` on the element, in `[0, (p+1) pi]`.
    pub kh: S,
    /// `K = kh / (p+1)`, in `[0, pi]`.
    pub normalized: S,
    /// Complex modified wavenumber `K_m` per mode (principal square root of
    /// `-lambda) / (p+1)^2`).
    pub modified: Vec<C<S>>,
}

impl<S: Scalar> WavenumberPoint<S> {
    pub fn from_eigen(eig: &EigenSystem<S>, p: usize) -> Self {
        let pp = S::of_usize((p + 1) * (p + 1));
        let modified = eig
            .lambdas
            .iter()
            .map(|&l| (-l / C::new(pp, S::zero())).sqrt())
            .collect();
        Self {
            kh: eig.kh,
            normalized: eig.kh / S::of_usize(p + 1),
            modified,
        }
    }

    /// `K_m^2` of the physical mode (real part).
    pub fn physical_km_squared(&self) -> S {
        let km = self.modified[0];
        (km * km).re
    }
}

/// Diffusion factors of one `(kh, tau_p)` analysis point.
#[derive(Debug, Clone, Copy)]
pub struct DiffusionFactors<S> {
    pub g_true: S,
    pub g_phys: S,
    pub g_exact: S,
    /// `|Delta G| = |G_exact - G_true|`.
    pub dg_abs: S,
}

/// Sampled combined-mode curves at a fixed non-dimensional time.
#[derive(Debug, Clone)]
pub struct DiffusionProfile<S> {
    pub tau_p: S,
    /// `(K, G_true, G_phys, G_exact, |Delta G|)` per wavenumber sample.
    pub samples: Vec<(S, DiffusionFactors<S>)>,
}

/// The symbol of the periodic stencil at wavenumber `kh`, dimensionless
/// (the `gamma/h^2` scale is factored out).
pub fn amplification_matrix<S: Scalar>(op: &StencilOperator<S>, kh: S) -> CMat<S> {
    let n = op.degree() + 1;
    let shifts: [(i32, &crate::linalg::Mat<S>); 5] = [
        (-2, op.second_left()),
        (-1, op.left()),
        (0, op.center()),
        (1, op.right()),
        (2, op.second_right()),
    ];
    CMat::from_fn(n, |l, j| {
        let mut acc = C::new(S::zero(), S::zero());
        for (m, block) in shifts.iter() {
            let v = block.get(l, j);
            if v != S::zero() {
                let phase = S::of(*m as f64) * kh;
                acc += C::new(phase.cos(), phase.sin()) * v;
            }
        }
        acc
    })
}

/// Full eigen decomposition of a symbol matrix (no mode ordering applied).
pub fn eigen_decompose<S: Scalar>(
    a: &CMat<S>,
    kh: S,
) -> Result<linalg::EigenDecomposition<S>, AnalysisError> {
    linalg::eigen_decompose(a).map_err(|source| AnalysisError::EigenAt {
        kh: kh.to_f64().unwrap_or(f64::NAN),
        source,
    })
}

/// Expansion weights and energy shares of the projected mode coefficients.
pub struct ModeWeights<S> {
    pub theta: Vec<C<S>>,
    pub shares: Vec<S>,
    pub condition: S,
}

pub fn mode_weights<S: Scalar>(
    vectors: &CMat<S>,
    mu_hat: &[C<S>],
    kh: S,
) -> Result<ModeWeights<S>, AnalysisError> {
    let singular = |_| AnalysisError::SingularModeMatrix {
        kh: kh.to_f64().unwrap_or(f64::NAN),
    };
    let theta = linalg::lu_solve(vectors, mu_hat).map_err(singular)?;
    let condition = linalg::condition_1(vectors).map_err(singular)?;
    let total: S = theta.iter().map(|z| z.norm_sqr()).sum();
    let shares = theta.iter().map(|z| z.norm_sqr() / total).collect();
    Ok(ModeWeights {
        theta,
        shares,
        condition,
    })
}

fn overlap_permutation<S: Scalar>(prev: &CMat<S>, next: &CMat<S>) -> Vec<usize> {
    // Greedy maximal-overlap assignment of new columns to previous columns.
    let n = prev.dim();
    let mut scores = vec![vec![S::zero(); n]; n];
    for i in 0..n {
        let vi = prev.column(i);
        for j in 0..n {
            let mut dot = C::new(S::zero(), S::zero());
            for r in 0..n {
                dot += vi[r].conj() * next.get(r, j);
            }
            scores[i][j] = dot.norm();
        }
    }
    let mut perm = vec![usize::MAX; n];
    let mut used_row = vec![false; n];
    let mut used_col = vec![false; n];
    for _ in 0..n {
        let (mut bi, mut bj, mut best) = (0, 0, S::neg_infinity());
        for i in 0..n {
            if used_row[i] {
                continue;
            }
            for j in 0..n {
                if used_col[j] {
                    continue;
                }
                if scores[i][j] > best {
                    best = scores[i][j];
                    bi = i;
                    bj = j;
                }
            }
        }
        perm[bi] = bj;
        used_row[bi] = true;
        used_col[bj] = true;
    }
    perm
}

fn apply_permutation<S: Scalar>(
    perm: &[usize],
    values: &[C<S>],
    vectors: &CMat<S>,
) -> (Vec<C<S>>, CMat<S>) {
    let n = values.len();
    let ordered_values: Vec<C<S>> = perm.iter().map(|&j| values[j]).collect();
    let ordered_vectors = CMat::from_fn(n, |r, c| vectors.get(r, perm[c]));
    (ordered_values, ordered_vectors)
}

fn initial_permutation<S: Scalar>(values: &[C<S>], kh: S) -> Vec<usize> {
    // mode(1) is the eigenvalue nearest the exact dissipation -(kh)^2; the
    // remaining modes are ordered by descending real part.
    let target = C::new(-kh * kh, S::zero());
    let n = values.len();
    let mut idx: Vec<usize> = (0..n).collect();
    let physical = (0..n)
        .min_by(|&a, &b| {
            (values[a] - target)
                .norm()
                .partial_cmp(&(values[b] - target).norm())
                .unwrap()
        })
        .expect("non-empty spectrum");
    idx.retain(|&j| j != physical);
    idx.sort_by(|&a, &b| values[b].re.partial_cmp(&values[a].re).unwrap());
    let mut perm = vec![physical];
    perm.extend(idx);
    perm
}

fn eigen_with_weights<S: Scalar>(
    p: usize,
    kh: S,
    values: Vec<C<S>>,
    vectors: CMat<S>,
) -> Result<EigenSystem<S>, AnalysisError> {
    let mu_hat = fourier_coefficients::<S>(p, kh)?;
    let weights = mode_weights(&vectors, &mu_hat, kh)?;
    Ok(EigenSystem {
        kh,
        lambdas: values,
        vectors,
        weights: weights.theta,
        shares: weights.shares,
        condition: weights.condition,
    })
}

/// Eigen systems along a wavenumber path with continuity-tracked mode labels:
/// the first point is labeled by closeness to the exact dissipation, later
/// points by maximal eigenvector overlap with the previous sample.
pub fn track_modes<S: Scalar>(
    op: &StencilOperator<S>,
    khs: &[S],
) -> Result<Vec<EigenSystem<S>>, AnalysisError> {
    let p = op.degree();
    let mut out = Vec::with_capacity(khs.len());
    let mut prev_vectors: Option<CMat<S>> = None;
    for &kh in khs {
        let a = amplification_matrix(op, kh);
        let eig = eigen_decompose(&a, kh)?;
        let perm = match &prev_vectors {
            None => initial_permutation(&eig.values, kh),
            Some(prev) => overlap_permutation(prev, &eig.vectors),
        };
        let (values, vectors) = apply_permutation(&perm, &eig.values, &eig.vectors);
        prev_vectors = Some(vectors.clone());
        out.push(eigen_with_weights(p, kh, values, vectors)?);
    }
    Ok(out)
}

/// Eigen system at a single wavenumber, labeled by tracking along a short
/// deterministic ramp from a small wavenumber up to `kh`.
pub fn eigen_system_at<S: Scalar>(
    op: &StencilOperator<S>,
    kh: S,
) -> Result<EigenSystem<S>, AnalysisError> {
    const RAMP_STEPS: usize = 48;
    if kh <= S::of(1e-12) {
        let a = amplification_matrix(op, kh);
        let eig = eigen_decompose(&a, kh)?;
        let perm = initial_permutation(&eig.values, kh);
        let (values, vectors) = apply_permutation(&perm, &eig.values, &eig.vectors);
        return eigen_with_weights(op.degree(), kh, values, vectors);
    }
    let ramp: Vec<S> = (1..=RAMP_STEPS)
        .map(|i| kh * S::of_usize(i) / S::of_usize(RAMP_STEPS))
        .collect();
    let mut systems = track_modes(op, &ramp)?;
    Ok(systems.pop().expect("non-empty ramp"))
}

/// Energy of a modal coefficient vector: `sqrt((1/2) int |sum c_l P_l|^2 dxi)`
/// with a `(p+2)`-point rule (exact for the squared modulus of a degree-p
/// polynomial).
fn modal_energy<S: Scalar>(coeffs: &[C<S>], rule: &QuadratureRule<S>) -> S {
    let mut acc = S::zero();
    for (&x, &w) in rule.nodes().iter().zip(rule.weights()) {
        let mut u = C::new(S::zero(), S::zero());
        let mut prev = S::one();
        let mut cur = x;
        for (l, &c) in coeffs.iter().enumerate() {
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
            u += c * basis;
        }
        acc += w * u.norm_sqr();
    }
    (S::half() * acc).sqrt()
}

fn combined_g_from_factors<S: Scalar>(
    eig: &EigenSystem<S>,
    p: usize,
    mode_factors: &[C<S>],
    physical_factor: S,
    g_exact: S,
) -> Result<DiffusionFactors<S>, AnalysisError> {
    let n = p + 1;
    let rule = QuadratureRule::gauss_legendre(p + 2)?;
    let mut coeffs_now = vec![C::new(S::zero(), S::zero()); n];
    let mut coeffs_init = vec![C::new(S::zero(), S::zero()); n];
    for l in 0..n {
        for j in 0..n {
            let base = eig.weights[j] * eig.vectors.get(l, j);
            coeffs_init[l] += base;
            coeffs_now[l] += base * mode_factors[j];
        }
    }
    let e_init = modal_energy(&coeffs_init, &rule);
    let e_now = modal_energy(&coeffs_now, &rule);
    let g_true = e_now / e_init;
    Ok(DiffusionFactors {
        g_true,
        g_phys: physical_factor,
        g_exact,
        dg_abs: (g_exact - g_true).abs(),
    })
}

/// Semi-discrete combined-mode diffusion factors at `(kh, tau_p)`.
pub fn combined_mode_g<S: Scalar>(
    config: &SchemeConfig<S>,
    kh: S,
    tau_p: S,
) -> Result<DiffusionFactors<S>, AnalysisError> {
    if tau_p < S::zero() {
        return Err(AnalysisError::NegativeTime(tau_p.to_f64().unwrap_or(f64::NAN)));
    }
    let op = assemble_stencil(config)?;
    let eig = eigen_system_at(&op, kh)?;
    combined_mode_g_from(&eig, config.p, tau_p)
}

/// Same as [`combined_mode_g`] but reusing an already tracked eigen system.
pub fn combined_mode_g_from<S: Scalar>(
    eig: &EigenSystem<S>,
    p: usize,
    tau_p: S,
) -> Result<DiffusionFactors<S>, AnalysisError> {
    if tau_p < S::zero() {
        return Err(AnalysisError::NegativeTime(tau_p.to_f64().unwrap_or(f64::NAN)));
    }
    let pp = S::of_usize((p + 1) * (p + 1));
    let tau = tau_p / pp;
    // exp(-K_m^2 tau_p) = exp(lambda tau) mode-wise.
    let factors: Vec<C<S>> = eig.lambdas.iter().map(|&l| (l * tau).exp()).collect();
    let k = eig.kh / S::of_usize(p + 1);
    let g_exact = (-k * k * tau_p).exp();
    let g_phys = (eig.physical().re * tau).exp();
    combined_g_from_factors(eig, p, &factors, g_phys, g_exact)
}

/// Explicit Runge-Kutta scheme abstracted by its linear stability polynomial
/// `P(z) = sum_{m=0}^{s} z^m / m!`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RKScheme {
    stages: usize,
}

impl RKScheme {
    pub fn new(stages: usize) -> Result<Self, AnalysisError> {
        if !(2..=4).contains(&stages) {
            return Err(AnalysisError::InvalidStageCount(stages));
        }
        Ok(Self { stages })
    }

    pub fn stages(&self) -> usize {
        self.stages
    }

    pub fn label(&self) -> &'static str {
        match self.stages {
            2 => "RK2",
            3 => "RK3",
            _ => "RK4",
        }
    }

    /// Horner evaluation of the truncated-exponential polynomial.
    pub fn poly<S: Scalar>(&self, z: C<S>) -> C<S> {
        let one = C::new(S::one(), S::zero());
        let mut acc = one;
        for m in (1..=self.stages).rev() {
            acc = one + z * acc / C::new(S::of_usize(m), S::zero());
        }
        acc
    }

    pub fn poly_real<S: Scalar>(&self, z: S) -> S {
        let mut acc = S::one();
        for m in (1..=self.stages).rev() {
            acc = S::one() + z * acc / S::of_usize(m);
        }
        acc
    }

    /// Negative real-axis stability boundary `z*` with `|P(-z*)| = 1`,
    /// located by bisection (2 for RK2, ~2.5127 for RK3, ~2.7853 for RK4).
    pub fn real_axis_boundary<S: Scalar>(&self) -> S {
        let mut lo = S::one();
        let mut hi = S::of(4.0);
        for _ in 0..80 {
            let mid = (lo + hi) * S::half();
            if self.poly_real(-mid).abs() <= S::one() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }
}

/// Fully-discrete operator `G = P(dtau A)` by Horner matrix recurrence.
pub fn rk_amplification<S: Scalar>(a: &CMat<S>, dtau: S, rk: RKScheme) -> CMat<S> {
    let n = a.dim();
    let ident = CMat::identity(n);
    let mut acc = ident.clone();
    for m in (1..=rk.stages()).rev() {
        // acc <- I + (dtau/m) A acc
        let scaled = a.mul_mat(&acc);
        let factor = C::new(dtau / S::of_usize(m), S::zero());
        acc = CMat::from_fn(n, |i, j| ident.get(i, j) + scaled.get(i, j) * factor);
    }
    acc
}

/// Classification of a fully-discrete eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FdMode<S> {
    /// `0 < lambda <= 1`: `K_m^2 = -ln(lambda) / dtau_p`.
    Decaying { km_squared: S },
    /// `lambda <= 0` or `lambda > 1`.
    Growing,
}

/// Modified wavenumber of a fully-discrete eigenvalue (real by the analysis).
pub fn fully_discrete_km2<S: Scalar>(lambda: S, dtau_p: S) -> Result<FdMode<S>, AnalysisError> {
    if !(dtau_p > S::zero()) {
        return Err(AnalysisError::NonPositiveStep(
            dtau_p.to_f64().unwrap_or(f64::NAN),
        ));
    }
    if lambda == S::zero() {
        return Err(AnalysisError::LogSingularity);
    }
    if lambda < S::zero() || lambda > S::one() {
        return Ok(FdMode::Growing);
    }
    Ok(FdMode::Decaying {
        km_squared: -lambda.ln() / dtau_p,
    })
}

fn scan_grid<S: Scalar>(p: usize, samples: usize) -> Vec<S> {
    let top = S::of_usize(p + 1) * S::PI();
    (0..samples)
        .map(|i| top * S::of_usize(i) / S::of_usize(samples - 1))
        .collect()
}

fn spectrum_over_grid<S: Scalar>(
    config: &SchemeConfig<S>,
    samples: usize,
) -> Result<Vec<Vec<C<S>>>, AnalysisError> {
    let op = assemble_stencil(config)?;
    scan_grid::<S>(config.p, samples)
        .into_iter()
        .map(|kh| {
            let a = amplification_matrix(&op, kh);
            linalg::eigenvalues(&a).map_err(|source| AnalysisError::EigenAt {
                kh: kh.to_f64().unwrap_or(f64::NAN),
                source,
            })
        })
        .collect()
}

fn semi_discrete_stable<S: Scalar>(config: &SchemeConfig<S>) -> Result<(bool, S), AnalysisError> {
    let op = assemble_stencil(config)?;
    let tol = S::of(GROWTH_TOLERANCE);
    let mut max_re = S::neg_infinity();
    // Sweep from the Nyquist end down: instability pockets live there, so
    // unstable configurations short-circuit quickly.
    for kh in scan_grid::<S>(config.p, SCAN_KH_SAMPLES).into_iter().rev() {
        let a = amplification_matrix(&op, kh);
        let values = linalg::eigenvalues(&a).map_err(|source| AnalysisError::EigenAt {
            kh: kh.to_f64().unwrap_or(f64::NAN),
            source,
        })?;
        for v in values {
            max_re = max_re.max(v.re);
        }
        if max_re > tol {
            return Ok((false, max_re));
        }
    }
    Ok((true, max_re))
}

/// Smallest grid penalty with no growing eigenmode over the sampled
/// wavenumber range; `None` when no grid point is stable.
pub fn min_eta_scan<S: Scalar>(
    formulation: crate::scheme::Formulation,
    p: usize,
    eta_grid: &[S],
) -> Result<Option<S>, AnalysisError> {
    for &eta in eta_grid {
        let config = SchemeConfig::analysis(formulation, p, eta)?;
        if semi_discrete_stable(&config)?.0 {
            return Ok(Some(eta));
        }
    }
    Ok(None)
}

/// Largest non-dimensional step `dtau = gamma dt / h^2` for which the
/// fully-discrete operator has no growing mode, by bisection at relative
/// resolution 1e-4 over the sampled wavenumber grid.
pub fn max_dtau_scan<S: Scalar>(
    config: &SchemeConfig<S>,
    rk: RKScheme,
) -> Result<S, AnalysisError> {
    let (stable, max_re) = semi_discrete_stable(config)?;
    if !stable {
        return Err(AnalysisError::SemiDiscreteUnstable {
            max_re: max_re.to_f64().unwrap_or(f64::NAN),
        });
    }
    let spectra = spectrum_over_grid(config, SCAN_KH_SAMPLES)?;
    let tol = S::one() + S::of(GROWTH_TOLERANCE);
    let stable_at = |dtau: S| -> bool {
        spectra.iter().all(|values| {
            values
                .iter()
                .all(|&l| rk.poly(l * C::new(dtau, S::zero())).norm() <= tol)
        })
    };
    let mut lo = S::zero();
    let mut hi = S::of(1e-3);
    let mut expansions = 0;
    while stable_at(hi) {
        lo = hi;
        hi = hi * S::two();
        expansions += 1;
        if expansions > 60 {
            return Ok(lo);
        }
    }
    while (hi - lo) > S::of(1e-4) * hi {
        let mid = (lo + hi) * S::half();
        if stable_at(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Fully-discrete combined-mode diffusion factors after `n_steps` steps of
/// size `dtau`: per-mode decay factors are `P(dtau lambda_j)^n`.
pub fn fully_discrete_g<S: Scalar>(
    config: &SchemeConfig<S>,
    rk: RKScheme,
    dtau: S,
    n_steps: usize,
    kh: S,
) -> Result<DiffusionFactors<S>, AnalysisError> {
    if !(dtau > S::zero()) {
        return Err(AnalysisError::NonPositiveStep(dtau.to_f64().unwrap_or(f64::NAN)));
    }
    let op = assemble_stencil(config)?;
    let eig = eigen_system_at(&op, kh)?;
    let p = config.p;
    let pp = S::of_usize((p + 1) * (p + 1));
    let dtau_p = pp * dtau;
    let tau_p_n = S::of_usize(n_steps) * dtau_p;
    let factors: Vec<C<S>> = eig
        .lambdas
        .iter()
        .map(|&l| complex_powi(rk.poly(l * C::new(dtau, S::zero())), n_steps))
        .collect();
    let k = kh / S::of_usize(p + 1);
    let g_exact = (-k * k * tau_p_n).exp();
    let lambda_g_phys = rk.poly(eig.physical() * C::new(dtau, S::zero())).re;
    let g_phys = match fully_discrete_km2(lambda_g_phys, dtau_p) {
        Ok(FdMode::Decaying { km_squared }) => (-S::of_usize(n_steps) * dtau_p * km_squared).exp(),
        _ => lambda_g_phys.abs().powi(n_steps as i32),
    };
    combined_g_from_factors(&eig, p, &factors, g_phys, g_exact)
}

fn complex_powi<S: Scalar>(base: C<S>, mut n: usize) -> C<S> {
    let mut result = C::new(S::one(), S::zero());
    let mut b = base;
    while n > 0 {
        if n & 1 == 1 {
            result = result * b;
        }
        b = b * b;
        n >>= 1;
    }
    result
}

/// Semi-discrete combined-mode profile over `n_k` wavenumbers in `[0, pi]`.
pub fn diffusion_profile<S: Scalar>(
    config: &SchemeConfig<S>,
    tau_p: S,
    n_k: usize,
) -> Result<(DiffusionProfile<S>, Vec<EigenSystem<S>>), AnalysisError> {
    if tau_p < S::zero() {
        return Err(AnalysisError::NegativeTime(tau_p.to_f64().unwrap_or(f64::NAN)));
    }
    let op = assemble_stencil(config)?;
    let khs = scan_grid::<S>(config.p, n_k);
    let systems = track_modes(&op, &khs)?;
    let mut samples = Vec::with_capacity(n_k);
    for eig in &systems {
        let factors = combined_mode_g_from(eig, config.p, tau_p)?;
        samples.push((eig.kh / S::of_usize(config.p + 1), factors));
    }
    Ok((DiffusionProfile { tau_p, samples }, systems))
}

/// Fully-discrete profile at fixed `(dtau, n_steps)`.
pub fn fully_discrete_profile<S: Scalar>(
    config: &SchemeConfig<S>,
    rk: RKScheme,
    dtau: S,
    n_steps: usize,
    n_k: usize,
) -> Result<DiffusionProfile<S>, AnalysisError> {
    let op = assemble_stencil(config)?;
    let khs = scan_grid::<S>(config.p, n_k);
    let systems = track_modes(&op, &khs)?;
    let p = config.p;
    let pp = S::of_usize((p + 1) * (p + 1));
    let dtau_p = pp * dtau;
    let tau_p_n = S::of_usize(n_steps) * dtau_p;
    let mut samples = Vec::with_capacity(n_k);
    for eig in &systems {
        let factors: Vec<C<S>> = eig
            .lambdas
            .iter()
            .map(|&l| complex_powi(rk.poly(l * C::new(dtau, S::zero())), n_steps))
            .collect();
        let k = eig.kh / S::of_usize(p + 1);
        let g_exact = (-k * k * tau_p_n).exp();
        let lambda_g_phys = rk.poly(eig.physical() * C::new(dtau, S::zero())).re;
        let g_phys = match fully_discrete_km2(lambda_g_phys, dtau_p) {
            Ok(FdMode::Decaying { km_squared }) => {
                (-S::of_usize(n_steps) * dtau_p * km_squared).exp()
            }
            _ => lambda_g_phys.abs().powi(n_steps as i32),
        };
        let f = combined_g_from_factors(eig, p, &factors, g_phys, g_exact)?;
        samples.push((k, f));
    }
    Ok(DiffusionProfile {
        tau_p: tau_p_n,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scheme::Formulation;
    use approx::assert_abs_diff_eq;

    fn br2(p: usize, eta: f64) -> SchemeConfig<f64> {
        SchemeConfig::analysis(Formulation::SipgBr2, p, eta).unwrap()
    }

    #[test]
    fn symbol_annihilates_constants_at_zero() {
        for formulation in [Formulation::SipgBr2, Formulation::Br1, Formulation::Ldg] {
            let config = SchemeConfig::analysis(formulation, 3, 1.0).unwrap();
            let op = assemble_stencil(&config).unwrap();
            let a = amplification_matrix(&op, 0.0);
            let e0: Vec<C<f64>> = (0..4)
                .map(|i| C::new(if i == 0 { 1.0 } else { 0.0 }, 0.0))
                .collect();
            let out = a.mul_vec(&e0);
            for v in out {
                assert!(v.norm() < 1e-12);
            }
        }
    }

    #[test]
    fn br2_p1_symbol_at_quarter_nyquist_frozen() {
        // Frozen from the rational stencil blocks composed with e^{+-i pi/2}:
        // A = [[-4, -2i], [6i, -12]].
        let op = assemble_stencil(&br2(1, 1.0)).unwrap();
        let a = amplification_matrix(&op, std::f64::consts::FRAC_PI_2);
        let expect = [
            [C::new(-4.0, 0.0), C::new(0.0, -2.0)],
            [C::new(0.0, 6.0), C::new(-12.0, 0.0)],
        ];
        for i in 0..2 {
            for j in 0..2 {
                assert!((a.get(i, j) - expect[i][j]).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn br2_p2_nyquist_eigenvalues_real_nonpositive() {
        let op = assemble_stencil(&br2(2, 1.0)).unwrap();
        let a = amplification_matrix(&op, 3.0 * std::f64::consts::PI / 3.0);
        let eig = eigen_decompose(&a, std::f64::consts::PI).unwrap();
        for v in eig.values {
            assert!(v.im.abs() < 1e-10, "Im {}", v.im);
            assert!(v.re <= 1e-9, "Re {}", v.re);
        }
    }

    #[test]
    fn physical_mode_tracks_exact_dissipation_at_low_kh() {
        for formulation in [Formulation::SipgBr2, Formulation::Br1, Formulation::Ldg] {
            let eta = match formulation {
                Formulation::SipgBr2 => 1.0,
                _ => 0.0,
            };
            let config = SchemeConfig::analysis(formulation, 2, eta).unwrap();
            let op = assemble_stencil(&config).unwrap();
            let kh = 0.3_f64;
            let eig = eigen_system_at(&op, kh).unwrap();
            let lambda = eig.physical();
            assert!(
                (lambda.re + kh * kh).abs() < 5e-4 * kh * kh + 1e-9,
                "{}: physical eigenvalue {} vs {}",
                formulation.label(),
                lambda.re,
                -kh * kh
            );
        }
    }

    #[test]
    fn shares_concentrate_on_physical_mode_at_low_kh() {
        let op = assemble_stencil(&br2(1, 1.0)).unwrap();
        let eig = eigen_system_at(&op, 1e-3).unwrap();
        assert!(eig.shares[0] > 1.0 - 1e-6, "Gamma {:?}", eig.shares);
        assert!(eig.shares[1] < 1e-6);
        let total: f64 = eig.shares.iter().sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn br1_physical_share_loses_dominance_past_nyquist() {
        let config = SchemeConfig::analysis(Formulation::Br1, 2, 0.0).unwrap();
        let op = assemble_stencil(&config).unwrap();
        let below = eigen_system_at(&op, 0.8 * std::f64::consts::PI).unwrap();
        assert!(
            below.shares[0] >= below.shares[1].max(below.shares[2]),
            "mode(1) dominates below kh = pi: {:?}",
            below.shares
        );
        let above = eigen_system_at(&op, 1.6 * std::f64::consts::PI).unwrap();
        assert!(
            below.shares[0] > above.shares[0],
            "share must decay past the single-mode range: {:?} vs {:?}",
            below.shares,
            above.shares
        );
        assert!(
            above.shares[0] < above.shares[1].max(above.shares[2]),
            "mode(1) loses dominance past kh = pi: {:?}",
            above.shares
        );
    }

    #[test]
    fn combined_g_is_one_at_zero_time_and_zero_wavenumber() {
        let config = br2(2, 1.0);
        let f0 = combined_mode_g(&config, 2.0, 0.0).unwrap();
        assert_abs_diff_eq!(f0.g_true, 1.0, epsilon = 1e-12);
        for tau_p in [0.25, 1.0, 2.0] {
            let f = combined_mode_g(&config, 0.0, tau_p).unwrap();
            assert_abs_diff_eq!(f.g_true, 1.0, epsilon = 1e-11);
            assert_abs_diff_eq!(f.g_exact, 1.0, epsilon = 1e-15);
        }
        assert!(combined_mode_g(&config, 1.0, -0.5).is_err());
    }

    #[test]
    fn ldg_p2_long_time_error_matches_reported_value() {
        // Combined-mode |Delta G| for the K = pi/3 single-mode setup.
        let config = SchemeConfig::analysis(Formulation::Ldg, 2, 0.0).unwrap();
        let kh = std::f64::consts::PI; // K = pi/3 at p = 2
        let f = combined_mode_g(&config, kh, 2.0).unwrap();
        assert_abs_diff_eq!(f.dg_abs, 1.22e-3, epsilon = 1e-5);
    }

    #[test]
    fn min_eta_scan_reference_orders() {
        let grid: Vec<f64> = (0..=120).map(|i| 0.3 + 0.01 * i as f64).collect();
        let eta2 = min_eta_scan(Formulation::SipgBr2, 2, &grid).unwrap().unwrap();
        assert!((eta2 - 0.67).abs() < 0.0101, "BR2 p2 minimum {eta2}");
        let ints: Vec<f64> = (-20..=0).map(|i| i as f64).collect();
        let eta_ldg = min_eta_scan(Formulation::Ldg, 3, &ints).unwrap().unwrap();
        assert_abs_diff_eq!(eta_ldg, -7.0);
        let around_zero: Vec<f64> = (-8..=8).map(|i| 0.05 * i as f64).collect();
        let eta_br1 = min_eta_scan(Formulation::Br1, 2, &around_zero)
            .unwrap()
            .unwrap();
        assert_abs_diff_eq!(eta_br1, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn rk_polynomial_basics() {
        let rk2 = RKScheme::new(2).unwrap();
        assert_abs_diff_eq!(rk2.poly_real(-2.0_f64), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(rk2.poly_real(0.0_f64), 1.0);
        let rk3 = RKScheme::new(3).unwrap();
        assert_abs_diff_eq!(rk3.real_axis_boundary::<f64>(), 2.512745326618, epsilon = 1e-9);
        let rk4 = RKScheme::new(4).unwrap();
        assert_abs_diff_eq!(rk4.real_axis_boundary::<f64>(), 2.785293563405, epsilon = 1e-9);
        assert!(RKScheme::new(5).is_err());
    }

    #[test]
    fn rk_amplification_matches_scalar_polynomial() {
        let op = assemble_stencil(&br2(2, 1.0)).unwrap();
        let a = amplification_matrix(&op, 1.3);
        let rk = RKScheme::new(3).unwrap();
        let dtau = 0.01;
        let g = rk_amplification(&a, dtau, rk);
        // Eigenvalues of G are P applied to eigenvalues of A.
        let mut la = linalg::eigenvalues(&a).unwrap();
        let mut lg = linalg::eigenvalues(&g).unwrap();
        la.sort_by(|x, y| x.re.partial_cmp(&y.re).unwrap());
        lg.sort_by(|x, y| x.re.partial_cmp(&y.re).unwrap());
        for (a_val, g_val) in la.iter().zip(&lg) {
            let expect = rk.poly(*a_val * C::new(dtau, 0.0));
            assert!((expect - g_val).norm() < 1e-11);
        }
        // dtau -> 0 gives the identity.
        let g0 = rk_amplification(&a, 1e-300, rk);
        let id = CMat::<f64>::identity(3);
        assert!(g0.max_abs_diff(&id) < 1e-12);
    }

    #[test]
    fn fully_discrete_km_classification() {
        let dtau_p = 0.3;
        match fully_discrete_km2(1.0, dtau_p).unwrap() {
            FdMode::Decaying { km_squared } => assert_abs_diff_eq!(km_squared, 0.0),
            _ => panic!("lambda = 1 is the undamped mean"),
        }
        match fully_discrete_km2((-dtau_p as f64).exp(), dtau_p).unwrap() {
            FdMode::Decaying { km_squared } => assert_abs_diff_eq!(km_squared, 1.0, epsilon = 1e-12),
            _ => panic!("inversion identity"),
        }
        assert_eq!(fully_discrete_km2(1.05, dtau_p).unwrap(), FdMode::Growing);
        assert_eq!(fully_discrete_km2(-0.5, dtau_p).unwrap(), FdMode::Growing);
        assert!(matches!(
            fully_discrete_km2(0.0, dtau_p),
            Err(AnalysisError::LogSingularity)
        ));
    }

    #[test]
    fn max_dtau_matches_reference_stability_limits() {
        let rk3 = RKScheme::new(3).unwrap();
        let dtau = max_dtau_scan(&br2(2, 1.0), rk3).unwrap();
        assert!((dtau - 0.0418).abs() / 0.0418 < 0.02, "BR2 p2 RK3 {dtau}");
        let rk2 = RKScheme::new(2).unwrap();
        let ldg = SchemeConfig::analysis(Formulation::Ldg, 1, 0.0).unwrap();
        let dtau_ldg: f64 = max_dtau_scan(&ldg, rk2).unwrap();
        assert!(
            (dtau_ldg - 0.0555).abs() / 0.0555 < 0.02,
            "LDG p1 RK2 {dtau_ldg}"
        );
    }

    #[test]
    fn max_dtau_cross_check_against_real_axis_boundary() {
        // dtau_max ~ (RK real-axis interval) / spectral radius of the symbol.
        let config = br2(1, 1.0);
        let rk = RKScheme::new(4).unwrap();
        let scanned = max_dtau_scan(&config, rk).unwrap();
        let spectra = spectrum_over_grid(&config, SCAN_KH_SAMPLES).unwrap();
        let rho = spectra
            .iter()
            .flat_map(|v| v.iter().map(|z| z.norm()))
            .fold(0.0_f64, f64::max);
        let predicted = rk.real_axis_boundary::<f64>() / rho;
        assert!(
            (scanned - predicted).abs() / predicted < 5e-4,
            "scan {scanned} vs boundary/rho {predicted}"
        );
    }

    #[test]
    fn fully_discrete_reduces_to_semi_discrete_at_small_step() {
        let config = br2(2, 1.0);
        let rk = RKScheme::new(3).unwrap();
        let dtau_max = 0.0418;
        let kh = 2.0;
        // Same tau_p: n dtau_p = tau_p.
        let tau_p = 1.0_f64;
        let dtau: f64 = 0.5 * dtau_max;
        let n = (tau_p / (9.0 * dtau)).round() as usize;
        let dtau_exact = tau_p / (9.0 * n as f64);
        let fd = fully_discrete_g(&config, rk, dtau_exact, n, kh).unwrap();
        let sd = combined_mode_g(&config, kh, tau_p).unwrap();
        assert!(
            (fd.g_true - sd.g_true).abs() < 5e-3,
            "fd {} vs sd {}",
            fd.g_true,
            sd.g_true
        );
        // n = 0 leaves the projected data untouched.
        let f0 = fully_discrete_g(&config, rk, dtau_exact, 0, kh).unwrap();
        assert_abs_diff_eq!(f0.g_true, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn profile_has_contracted_shape() {
        let config = br2(2, 1.0);
        let (profile, systems) = diffusion_profile(&config, 1.0, 101).unwrap();
        assert_eq!(profile.samples.len(), 101);
        assert_abs_diff_eq!(profile.samples[0].0, 0.0);
        assert_abs_diff_eq!(profile.samples[100].0, std::f64::consts::PI, epsilon = 1e-12);
        assert_abs_diff_eq!(profile.samples[0].1.g_true, 1.0, epsilon = 1e-10);
        for eig in &systems {
            let sum: f64 = eig.shares.iter().sum();
            assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn wavenumber_point_from_eigen() {
        let op = assemble_stencil(&br2(2, 1.0)).unwrap();
        let kh = 1.5;
        let eig = eigen_system_at(&op, kh).unwrap();
        let point = WavenumberPoint::from_eigen(&eig, 2);
        assert_abs_diff_eq!(point.normalized, 0.5);
        // K_m^2 of the physical mode approximates K^2 at resolved kh.
        let km2 = point.physical_km_squared();
        assert!((km2 - 0.25).abs() < 0.01, "K_m^2 {km2}");
    }
}
