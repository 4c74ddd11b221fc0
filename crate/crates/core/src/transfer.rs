//! Fundamental solutions and monodromy of the shifted Dirac system
//! `J y′ + V(x+t) y = λ y` for piecewise-constant potentials.
//!
//! On a segment where `V ≡ (q₁, q₂)` the system has constant coefficient
//! matrix `A = J(V − λ) = [[q₂, −(q₁+λ)], [λ−q₁, −q₂]]`, trace-free with
//! `det A = λ² − q₁² − q₂²`, so the propagator over a step `h` is exactly
//! `cos(ωh)·I + sin(ωh)/ω · A` with `ω² = det A`, continued through
//! `ω = 0`. Everything downstream is an ordered product of these.

use crate::mat2::{Mat2, Vec2};
use crate::potential::Potential;
use crate::scalar::Scalar;
use std::fmt;

/// 16-point Gauss-Legendre rule on [-1, 1] (positive half; nodes are symmetric).
const GL16_NODES: [f64; 8] = [
    0.095_012_509_837_637_44,
    0.281_603_550_779_258_9,
    0.458_016_777_657_227_4,
    0.617_876_244_402_643_7,
    0.755_404_408_355_003,
    0.865_631_202_387_831_7,
    0.944_575_023_073_232_6,
    0.989_400_934_991_649_9,
];
const GL16_WEIGHTS: [f64; 8] = [
    0.189_450_610_455_068_5,
    0.182_603_415_044_923_6,
    0.169_156_519_395_002_55,
    0.149_595_988_816_576_73,
    0.124_628_971_255_533_87,
    0.095_158_511_682_492_78,
    0.062_253_523_938_647_89,
    0.027_152_459_411_754_095,
];

#[derive(Debug, Clone, PartialEq)]
pub enum TransferError {
    /// `t` sits on a breakpoint of the potential, so `V(t)` is ambiguous.
    ShiftAtBreakpoint { t: f64 },
}

impl fmt::Display for TransferError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TransferError::ShiftAtBreakpoint { t } => {
                write!(f, "t = {t} lies on a breakpoint of the potential")
            }
        }
    }
}

impl std::error::Error for TransferError {}

/// Coefficient matrix `A = J(V − λ)` of the first-order system `y′ = Ay`.
fn coefficient_matrix<T: Scalar>(q1: f64, q2: f64, lambda: T) -> Mat2<T> {
    let q1 = T::from_real(T::real_from_f64(q1));
    let q2 = T::from_real(T::real_from_f64(q2));
    Mat2::new(q2, -(q1 + lambda), lambda - q1, -q2)
}

/// Exact propagator `exp(A·dx)` over a constant segment.
pub fn segment_exponential<T: Scalar>(q1: f64, q2: f64, lambda: T, dx: f64) -> Mat2<T> {
    let a = coefficient_matrix(q1, q2, lambda);
    let u = lambda * lambda
        - T::from_real(T::real_from_f64(q1 * q1 + q2 * q2));
    let (c, s) = u.rot_kernels(T::real_from_f64(dx));
    Mat2::identity().scale(c) + a.scale(s)
}

/// Segment propagator together with its analytic λ-derivative.
fn segment_exponential_dl(q1: f64, q2: f64, lambda: f64, dx: f64) -> (Mat2<f64>, Mat2<f64>) {
    let a = coefficient_matrix(q1, q2, lambda);
    let u = lambda * lambda - q1 * q1 - q2 * q2;
    let h = dx;
    let (c, s) = u.rot_kernels(h);
    let m = Mat2::identity().scale(c) + a.scale(s);

    let dc_du = -0.5 * h * s;
    let z = u.abs().sqrt() * h;
    let ds_du = if z < 1e-2 {
        let h3 = h * h * h;
        let h2 = h * h;
        h3 * (-1.0 / 6.0 + u * h2 * (1.0 / 60.0 + u * h2 * (-1.0 / 1680.0 + u * h2 / 90720.0)))
    } else {
        (h * c - s) / (2.0 * u)
    };
    let du_dl = 2.0 * lambda;
    // dA/dλ is constant.
    let da_dl = Mat2::new(0.0, -1.0, 1.0, 0.0);
    let dm = (Mat2::identity().scale(dc_du) + a.scale(ds_du)).scale(du_dl) + da_dl.scale(s);
    (m, dm)
}

/// Ordered product of segment propagators of `shift(V, t)` across `[0, x)`
/// for `x ∈ [0, 1]`.
fn partial_product<T: Scalar>(shifted: &Potential, x: f64, lambda: T) -> Mat2<T> {
    let mut psi = Mat2::identity();
    if x <= 0.0 {
        return psi;
    }
    for (a, b, q1, q2) in shifted.segments() {
        if a >= x {
            break;
        }
        let end = b.min(x);
        psi = segment_exponential(q1, q2, lambda, end - a) * psi;
    }
    psi
}

/// Fundamental matrix solution `ψ(x, λ, t)` of `Jy′ + V(x+t)y = λy` with
/// `ψ(0) = I`, for arbitrary real `x` via periodicity of the coefficients.
pub fn fundamental<T: Scalar>(v: &Potential, x: f64, lambda: T, t: f64) -> Mat2<T> {
    let shifted = v.shift(t);
    let n = x.floor() as i64;
    let r = x - n as f64;
    let frac_part = partial_product(&shifted, r, lambda);
    if n == 0 {
        return frac_part;
    }
    let period = partial_product(&shifted, 1.0, lambda);
    let mut acc = Mat2::identity();
    if n > 0 {
        for _ in 0..n {
            acc = period * acc;
        }
    } else {
        let inv = period.inverse();
        for _ in 0..(-n) {
            acc = inv * acc;
        }
    }
    frac_part * acc
}

/// Monodromy matrix `ψ(1, λ, t)` of the shifted system with its analytic
/// λ-derivative and the derived scalar data.
#[derive(Debug, Clone, Copy)]
pub struct Monodromy {
    pub psi: Mat2<f64>,
    pub d_lambda: Mat2<f64>,
}

impl Monodromy {
    /// Lyapunov function `Δ = ½ Tr ψ(1)`.
    pub fn delta(&self) -> f64 {
        0.5 * self.psi.trace()
    }

    /// `a = (φ₂(1) − θ₁(1)) / 2`.
    pub fn a(&self) -> f64 {
        0.5 * (self.psi.e[1][1] - self.psi.e[0][0])
    }

    pub fn phi1(&self) -> f64 {
        self.psi.e[0][1]
    }

    pub fn theta2(&self) -> f64 {
        self.psi.e[1][0]
    }

    pub fn phi2(&self) -> f64 {
        self.psi.e[1][1]
    }

    pub fn theta1(&self) -> f64 {
        self.psi.e[0][0]
    }

    pub fn delta_prime(&self) -> f64 {
        0.5 * self.d_lambda.trace()
    }

    pub fn a_prime(&self) -> f64 {
        0.5 * (self.d_lambda.e[1][1] - self.d_lambda.e[0][0])
    }

    pub fn phi1_prime(&self) -> f64 {
        self.d_lambda.e[0][1]
    }

    pub fn theta2_prime(&self) -> f64 {
        self.d_lambda.e[1][0]
    }
}

/// Full monodromy data at `(λ, t)`; the λ-derivative comes from the product
/// rule over segments, not finite differences.
pub fn monodromy(v: &Potential, lambda: f64, t: f64) -> Monodromy {
    let shifted = v.shift(t);
    let segs: Vec<(Mat2<f64>, Mat2<f64>)> = shifted
        .segments()
        .map(|(a, b, q1, q2)| segment_exponential_dl(q1, q2, lambda, b - a))
        .collect();

    // Prefix products P_i = E_i ⋯ E_1 (P_0 = I).
    let mut prefixes = Vec::with_capacity(segs.len() + 1);
    prefixes.push(Mat2::identity());
    for (e, _) in &segs {
        let last = *prefixes.last().unwrap();
        prefixes.push(*e * last);
    }
    let psi = *prefixes.last().unwrap();

    // d(E_k ⋯ E_1) = Σ_i (E_k ⋯ E_{i+1}) dE_i (E_{i−1} ⋯ E_1).
    let mut d = Mat2::zero();
    let mut suffix = Mat2::identity();
    for i in (0..segs.len()).rev() {
        d = d + suffix * segs[i].1 * prefixes[i];
        suffix = suffix * segs[i].0;
    }
    Monodromy { psi, d_lambda: d }
}

/// `‖φ(·, λ, t)‖² = ∫₀¹ (φ₁² + φ₂²) dx` by composite Gauss-Legendre
/// quadrature with exact in-segment evaluation of `φ`.
pub fn phi_norm_sq(v: &Potential, lambda: f64, t: f64) -> f64 {
    let shifted = v.shift(t);
    let mut phi_start = Vec2::new(0.0, 1.0);
    let mut total = 0.0;
    for (a, b, q1, q2) in shifted.segments() {
        let len = b - a;
        let rate = (lambda * lambda - q1 * q1 - q2 * q2).abs().sqrt();
        let chunks = (len * (rate + 1.0) / 2.0).ceil().max(1.0) as usize;
        let h = len / chunks as f64;
        for k in 0..chunks {
            let half = 0.5 * h;
            let mid = k as f64 * h + half;
            let mut sum = 0.0;
            for (&node, &weight) in GL16_NODES.iter().zip(&GL16_WEIGHTS) {
                for sign in [-1.0, 1.0] {
                    let xoff = mid + sign * node * half;
                    let phi = segment_exponential(q1, q2, lambda, xoff).mul_vec(&phi_start);
                    sum += weight * (phi.x1 * phi.x1 + phi.x2 * phi.x2);
                }
            }
            total += sum * half;
        }
        phi_start = segment_exponential(q1, q2, lambda, len).mul_vec(&phi_start);
    }
    total
}

/// `∂_t ψ(1, λ, t)` as the commutator `[J(V(t) − λ), ψ(1, λ, t)]`.
///
/// Defined for `t` away from the breakpoints of `V`, where `V(t)` is
/// single-valued.
pub fn t_derivative_monodromy(
    v: &Potential,
    lambda: f64,
    t: f64,
) -> Result<Mat2<f64>, TransferError> {
    if v.breakpoint_distance(t) < 1e-12 {
        return Err(TransferError::ShiftAtBreakpoint { t });
    }
    let (q1, q2) = v.value_at(t);
    let a = coefficient_matrix(q1, q2, lambda);
    let psi = monodromy(v, lambda, t).psi;
    Ok(a.commutator(&psi))
}

impl Mat2<f64> {
    /// Largest singular value, from `σ₁² + σ₂² = ‖A‖_F²` and `σ₁σ₂ = |det|`.
    pub fn op_norm(&self) -> f64 {
        let s = self.frobenius();
        let s2 = s * s;
        let d = self.det().abs();
        (0.5 * (s2 + (s2 * s2 - 4.0 * d * d).max(0.0).sqrt())).sqrt()
    }
}

impl Mat2<num_complex::Complex64> {
    pub fn op_norm(&self) -> f64 {
        let s = self.frobenius();
        let s2 = s * s;
        let d = self.det().norm();
        (0.5 * (s2 + (s2 * s2 - 4.0 * d * d).max(0.0).sqrt())).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_potential(rng: &mut ChaCha8Rng, max_segments: usize) -> Potential {
        let n = rng.gen_range(1..=max_segments);
        let mut breaks: Vec<f64> = vec![0.0];
        for _ in 1..n {
            breaks.push(rng.gen_range(0.01..0.99));
        }
        breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
        breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
        // |q| ≤ 2 and |x| ≤ 2 keep ‖ψ‖ ≲ e⁶ in gap regions; the Wronskian
        // identity can only be observed to ‖ψ‖²·ε in f64.
        let values = (0..breaks.len())
            .map(|_| (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)))
            .collect();
        Potential::piecewise(breaks, values).unwrap()
    }

    fn mat_close(a: &Mat2<f64>, b: &Mat2<f64>, tol: f64) -> bool {
        (*a - *b).frobenius() <= tol
    }

    #[test]
    fn free_potential_is_a_rotation() {
        let lambda = 1.3_f64;
        for &x in &[0.0, 0.4, 1.0, 2.7, -1.2] {
            let psi = fundamental(&Potential::free(), x, lambda, 0.0);
            let expected = Mat2::new(
                (lambda * x).cos(),
                -(lambda * x).sin(),
                (lambda * x).sin(),
                (lambda * x).cos(),
            );
            assert!(mat_close(&psi, &expected, 1e-12), "x = {x}");
        }
    }

    #[test]
    fn constant_mass_closed_form() {
        // Single segment: ψ(1) = cos ω I + sinc ω · [[0, −(λ+m)], [λ−m, 0]].
        let m = 1.0;
        let v = Potential::constant_mass(m);
        for &lambda in &[2.0_f64, 0.3, -1.7] {
            let mono = monodromy(&v, lambda, 0.0);
            let u = lambda * lambda - m * m;
            let (c, s) = u.rot_kernels(1.0);
            assert!((mono.delta() - c).abs() < 1e-13);
            assert!((mono.phi1() + (lambda + m) * s).abs() < 1e-13);
            assert!((mono.theta2() - (lambda - m) * s).abs() < 1e-13);
            assert!(mono.a().abs() < 1e-13);
        }
    }

    #[test]
    fn zero_length_segment_is_identity() {
        let e = segment_exponential(0.7, -0.3, 2.0_f64, 0.0);
        assert!(mat_close(&e, &Mat2::identity(), 0.0));
    }

    #[test]
    fn wronskian_is_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let v = random_potential(&mut rng, 8);
            let x: f64 = rng.gen_range(-1.0..2.0);
            let lambda: f64 = rng.gen_range(-10.0..10.0);
            let t = rng.gen_range(-1.5..1.5);
            let psi = fundamental(&v, x, lambda, t);
            assert!((psi.det() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn growth_bound_in_operator_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..100 {
            let v = random_potential(&mut rng, 6);
            let lambda = Complex64::new(rng.gen_range(-6.0..6.0), rng.gen_range(-5.0..5.0));
            let x = rng.gen_range(0.0..1.0);
            let psi = fundamental(&v, x, lambda, 0.0);
            let bound = (v.norm_p() + lambda.im.abs() * x).exp();
            assert!(
                psi.op_norm() <= bound * (1.0 + 1e-8),
                "norm {} exceeds bound {}",
                psi.op_norm(),
                bound
            );
        }
    }

    #[test]
    fn periodicity_composition() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let v = random_potential(&mut rng, 5);
            let x = rng.gen_range(0.0..1.0);
            let lambda = rng.gen_range(-5.0..5.0);
            let t = rng.gen_range(0.0..1.0);
            let lhs = fundamental(&v, 1.0 + x, lambda, t);
            let rhs = fundamental(&v, x, lambda, t) * fundamental(&v, 1.0, lambda, t);
            assert!(mat_close(&lhs, &rhs, 1e-11));
        }
    }

    #[test]
    fn shift_conjugation_identity() {
        // ψ(1, λ, t) = ψ(t, λ) ψ(1, λ) ψ(t, λ)⁻¹, both sides computed
        // through independent code paths.
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for _ in 0..40 {
            let v = random_potential(&mut rng, 6);
            let lambda = rng.gen_range(-6.0..6.0);
            let t = rng.gen_range(-1.0..2.0);
            let lhs = monodromy(&v, lambda, t).psi;
            let pt = fundamental(&v, t, lambda, 0.0);
            let rhs = pt * fundamental(&v, 1.0, lambda, 0.0) * pt.inverse();
            assert!(mat_close(&lhs, &rhs, 1e-9), "t = {t}");
        }
    }

    #[test]
    fn lyapunov_is_shift_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..40 {
            let v = random_potential(&mut rng, 6);
            let lambda = rng.gen_range(-8.0..8.0);
            let t = rng.gen_range(-2.0..2.0);
            let d0 = monodromy(&v, lambda, 0.0).delta();
            let dt = monodromy(&v, lambda, t).delta();
            assert!((d0 - dt).abs() < 1e-10);
        }
    }

    #[test]
    fn lambda_derivative_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..20 {
            let v = random_potential(&mut rng, 5);
            let lambda = rng.gen_range(-4.0..4.0);
            let t = rng.gen_range(0.0..1.0);
            let mono = monodromy(&v, lambda, t);
            let h = 1e-5;
            let plus = monodromy(&v, lambda + h, t).psi;
            let minus = monodromy(&v, lambda - h, t).psi;
            let fd = (plus - minus).scale(0.5 / h);
            assert!(
                (mono.d_lambda - fd).frobenius() < 1e-7,
                "analytic vs FD mismatch"
            );
        }
    }

    #[test]
    fn t_derivative_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let mut done = 0;
        while done < 20 {
            let v = random_potential(&mut rng, 5);
            let lambda = rng.gen_range(-4.0..4.0);
            let t = rng.gen_range(0.0..1.0);
            if v.breakpoint_distance(t) < 1e-3 {
                continue;
            }
            let dot = t_derivative_monodromy(&v, lambda, t).unwrap();
            // Richardson slope: error must shrink like h².
            let fd = |h: f64| {
                let plus = monodromy(&v, lambda, t + h).psi;
                let minus = monodromy(&v, lambda, t - h).psi;
                ((plus - minus).scale(0.5 / h) - dot).frobenius()
            };
            let e1 = fd(1e-4);
            let e2 = fd(5e-5);
            assert!(e1 < 1e-5, "first-order error too large: {e1}");
            if e1 > 1e-11 {
                assert!(e2 < e1 * 0.4, "no quadratic decay: {e1} -> {e2}");
            }
            // Diagonal entries are opposite; the trace derivative vanishes.
            assert!((dot.e[0][0] + dot.e[1][1]).abs() < 1e-12);
            done += 1;
        }
    }

    #[test]
    fn t_derivative_rejects_breakpoints() {
        let v = Potential::even_two_step(2.0);
        assert!(t_derivative_monodromy(&v, 1.0, 0.5).is_err());
        assert!(t_derivative_monodromy(&v, 1.0, 0.25).is_ok());
    }

    #[test]
    fn free_phi_norm_is_one() {
        let n = phi_norm_sq(&Potential::free(), std::f64::consts::PI, 0.0);
        assert!((n - 1.0).abs() < 1e-13);
    }

    #[test]
    fn dirichlet_norm_identity_constant_mass() {
        // At the Dirichlet point μ₀ = −m the norm equals −φ₂ ∂_λφ₁.
        let m = 1.0;
        let v = Potential::constant_mass(m);
        let mono = monodromy(&v, -m, 0.0);
        let lhs = phi_norm_sq(&v, -m, 0.0);
        let rhs = -mono.phi2() * mono.phi1_prime();
        assert!((lhs - rhs).abs() < 1e-10, "lhs {lhs} rhs {rhs}");
        assert!((lhs - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gauss_rule_integrates_polynomials() {
        // Degree-15 exactness on [0, 1] via the embedded rule.
        let v = Potential::free();
        // ∫₀¹ cos²(πx) dx = 1/2 with φ = (−sin, cos) gives 1; checked above.
        // Here: weights sum to 2.
        let sum: f64 = GL16_WEIGHTS.iter().sum::<f64>() * 2.0;
        assert!((sum - 2.0).abs() < 1e-14);
        let _ = v;
    }
}
