//! Elementary factors of the path terms: the Gaussian kernel `Z`, the vertex
//! factor `V`, the log-ratio variables and the chain factor `S`.

use core::f64::consts::PI;

use num_complex::Complex64;
#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::cover::AlternatingWord;
use crate::error::{Error, Result};
use crate::geometry::Vortex;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Fractional fluxes `α` (vortex a) and `β` (vortex b), each in `[0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Flux {
    alpha: f64,
    beta: f64,
}

impl Flux {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        for (name, v) in [("alpha", alpha), ("beta", beta)] {
            if !(0.0..1.0).contains(&v) {
                return Err(Error::InvalidParameter {
                    name,
                    reason: "flux must lie in [0, 1)",
                });
            }
        }
        Ok(Flux { alpha, beta })
    }

    pub fn zero() -> Self {
        Flux { alpha: 0.0, beta: 0.0 }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn sigma(&self, v: Vortex) -> f64 {
        match v {
            Vortex::A => self.alpha,
            Vortex::B => self.beta,
        }
    }

    /// `sin(πσ)/π` for the given vortex.
    pub fn strength(&self, v: Vortex) -> f64 {
        (PI * self.sigma(v)).sin() / PI
    }
}

/// Time argument of an evaluation.
///
/// Every time variable is rotated as `t ↦ T·e^{−iφ}`. `φ = π/2` is the
/// Euclidean (heat-kernel) case with `τ = T`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EvalMode {
    Euclidean { tau: f64 },
    Rotated { t: f64, phi: f64 },
}

impl EvalMode {
    pub fn euclidean(tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "tau",
                reason: "time must be positive and finite",
            });
        }
        Ok(EvalMode::Euclidean { tau })
    }

    pub fn rotated(t: f64, phi: f64) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "t",
                reason: "time must be positive and finite",
            });
        }
        if !(phi > 0.0 && phi <= PI / 2.0) {
            return Err(Error::InvalidParameter {
                name: "phi",
                reason: "contour angle must lie in (0, pi/2]",
            });
        }
        Ok(EvalMode::Rotated { t, phi })
    }

    /// Time modulus `T`.
    pub fn scale(&self) -> f64 {
        match *self {
            EvalMode::Euclidean { tau } => tau,
            EvalMode::Rotated { t, .. } => t,
        }
    }

    /// Contour angle `φ`.
    pub fn angle(&self) -> f64 {
        match *self {
            EvalMode::Euclidean { .. } => PI / 2.0,
            EvalMode::Rotated { phi, .. } => phi,
        }
    }

    pub fn is_euclidean(&self) -> bool {
        match *self {
            EvalMode::Euclidean { .. } => true,
            EvalMode::Rotated { phi, .. } => phi == PI / 2.0,
        }
    }

    /// The same mode at another time modulus.
    pub fn with_scale(&self, scale: f64) -> Self {
        match *self {
            EvalMode::Euclidean { .. } => EvalMode::Euclidean { tau: scale },
            EvalMode::Rotated { phi, .. } => EvalMode::Rotated { t: scale, phi },
        }
    }

    /// `e^{−iφ}`, exact in the Euclidean case.
    pub fn rotation(&self) -> Complex64 {
        if self.is_euclidean() {
            Complex64::new(0.0, -1.0)
        } else {
            Complex64::from_polar(1.0, -self.angle())
        }
    }

    /// Complex contour time `T·e^{−iφ}`.
    pub fn contour_time(&self) -> Complex64 {
        self.rotation() * self.scale()
    }
}

/// `visible · (1/4πit)·exp(i r²/4t)`.
///
/// On the Euclidean ray `t = −iτ` this is the real heat kernel
/// `(1/4πτ)·e^{−r²/4τ}`. Negative real times give zero.
pub fn kernel_z(t: Complex64, r: f64, visible: bool) -> Result<Complex64> {
    if !(r >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "r",
            reason: "distance must be nonnegative",
        });
    }
    if t == Complex64::new(0.0, 0.0) || !t.is_finite() || t.im > 0.0 {
        return Err(Error::TimeDomain);
    }
    if !visible || (t.im == 0.0 && t.re < 0.0) {
        return Ok(Complex64::new(0.0, 0.0));
    }
    if t.re == 0.0 {
        let tau = -t.im;
        return Ok(Complex64::new(heat_kernel(tau, r), 0.0));
    }
    Ok((I * (r * r) / (t * 4.0)).exp() / (I * t * (4.0 * PI)))
}

/// `(1/4πτ)·e^{−r²/4τ}`.
pub fn heat_kernel(tau: f64, r: f64) -> f64 {
    (-r * r / (4.0 * tau)).exp() / (4.0 * PI * tau)
}

/// Free planar kernel in the given mode.
pub fn free_kernel(mode: &EvalMode, r: f64) -> Complex64 {
    match *mode {
        EvalMode::Euclidean { tau } => Complex64::new(heat_kernel(tau, r), 0.0),
        EvalMode::Rotated { .. } => {
            let t = mode.contour_time();
            (I * (r * r) / (t * 4.0)).exp() / (I * t * (4.0 * PI))
        }
    }
}

/// `2i[(θ−π+iL)⁻¹ − (θ+π+iL)⁻¹]` with `L = log(t₂r₁/(t₁r₂))`.
pub fn vertex_v(theta: f64, r1: f64, r2: f64, t1: Complex64, t2: Complex64) -> Result<Complex64> {
    if !(r1 > 0.0 && r2 > 0.0) {
        return Err(Error::InvalidParameter {
            name: "r",
            reason: "vertex radii must be positive",
        });
    }
    if t1 == Complex64::new(0.0, 0.0) || t2 == Complex64::new(0.0, 0.0) {
        return Err(Error::TimeDomain);
    }
    let ratio = (t2 * r1) / (t1 * r2);
    if ratio.im == 0.0 && ratio.re <= 0.0 {
        return Err(Error::LogDomain);
    }
    vertex_v_log(theta, ratio.ln())
}

/// Vertex factor in terms of the log-ratio `L`.
pub fn vertex_v_log(theta: f64, log_ratio: Complex64) -> Result<Complex64> {
    let minus = Complex64::new(theta - PI, 0.0) + I * log_ratio;
    let plus = Complex64::new(theta + PI, 0.0) + I * log_ratio;
    if minus.norm_sqr() == 0.0 || plus.norm_sqr() == 0.0 {
        return Err(Error::Pole);
    }
    Ok(vertex_v_unchecked(theta, log_ratio.re, log_ratio.im))
}

/// Real-`L` fast path, `V = 4πi / ((θ+iL)² − π²)`; callers guarantee that
/// the pole is avoided.
#[inline]
pub(crate) fn vertex_v_unchecked(theta: f64, l_re: f64, l_im: f64) -> Complex64 {
    let z = Complex64::new(theta - l_im, l_re);
    Complex64::new(0.0, 4.0 * PI) / (z * z - PI * PI)
}

/// `s_j = log(t_j r_{j−1} / (t_{j−1} r_j))` for `j = 1..n`.
///
/// Times are the moduli on the contour; the common rotation cancels.
pub fn log_ratios(times: &[f64], radii: &[f64]) -> Result<alloc::vec::Vec<f64>> {
    if times.len() != radii.len() || times.len() < 2 {
        return Err(Error::InvalidParameter {
            name: "times",
            reason: "need n+1 times and n+1 radii with n >= 1",
        });
    }
    let mut out = alloc::vec::Vec::with_capacity(times.len() - 1);
    for j in 1..times.len() {
        let ratio = (times[j] * radii[j - 1]) / (times[j - 1] * radii[j]);
        if !(ratio > 0.0 && ratio.is_finite()) {
            return Err(Error::LogDomain);
        }
        out.push(ratio.ln());
    }
    Ok(out)
}

/// Which denominator the interior chain factors use.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ChainVariant {
    /// `exp(−σ_j s_j)/(1+exp(−s_j))`.
    #[default]
    Matched,
    /// `exp(−σ_j s_j)/(1+exp(−s_{j+1}))`, the index pairing of the printed
    /// display, kept for comparison.
    Mixed,
}

/// End factor `(sin πσ/π)·e^{−σ(s−iθ)}/(1+e^{−s+iθ})` without the strength.
#[inline]
pub(crate) fn end_shape(sigma: f64, s: Complex64, theta: f64) -> Complex64 {
    let num = (-(s - I * theta) * sigma).exp();
    let den = Complex64::new(1.0, 0.0) + (-s + I * theta).exp();
    num / den
}

/// Interior factor `e^{−σ s}/(1+e^{−s'})` without the strength.
#[inline]
pub(crate) fn interior_shape(sigma: f64, s: Complex64, s_den: Complex64) -> Complex64 {
    (-s * sigma).exp() / (Complex64::new(1.0, 0.0) + (-s_den).exp())
}

/// Chain factor `S_γ̄(s, θ, θ₀)` for a word of length `n ≥ 2`.
pub fn chain_s(
    word: &AlternatingWord,
    s: &[Complex64],
    theta: f64,
    theta0: f64,
    flux: &Flux,
    variant: ChainVariant,
) -> Result<Complex64> {
    let seq = word.vortices();
    let n = seq.len();
    if n < 2 || s.len() != n {
        return Err(Error::InvalidParameter {
            name: "word",
            reason: "chain factor needs n >= 2 and n log-ratios",
        });
    }
    for angle in [theta, theta0] {
        if !(angle.abs() < PI) {
            return Err(Error::ValidityDomain { angle });
        }
    }
    let mut prod = Complex64::new(1.0, 0.0);
    for j in 0..n {
        let sigma = flux.sigma(seq[j]);
        let shape = if j == 0 {
            end_shape(sigma, s[0], theta0)
        } else if j == n - 1 {
            end_shape(sigma, s[j], theta)
        } else {
            let den = match variant {
                ChainVariant::Matched => s[j],
                ChainVariant::Mixed => s[j + 1],
            };
            interior_shape(sigma, s[j], den)
        };
        if !shape.is_finite() {
            return Err(Error::Pole);
        }
        prod *= shape * flux.strength(seq[j]);
    }
    Ok(prod)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn z_examples() {
        let t = c(0.0, -1.0);
        assert_eq!(kernel_z(t, 1.0, false).unwrap(), c(0.0, 0.0));
        let z = kernel_z(t, 0.0, true).unwrap();
        assert!((z.re - 1.0 / (4.0 * PI)).abs() < 1e-16 && z.im == 0.0);
        assert!((z.re - 0.0795775).abs() < 1e-7);
        assert_eq!(kernel_z(c(-1.0, 0.0), 1.0, true).unwrap(), c(0.0, 0.0));
        assert_eq!(kernel_z(c(0.0, 0.0), 1.0, true), Err(Error::TimeDomain));
    }

    #[test]
    fn z_rotated_matches_euclidean_limit() {
        let mode = EvalMode::rotated(0.7, PI / 2.0 - 1e-9).unwrap();
        let z = kernel_z(mode.contour_time(), 1.3, true).unwrap();
        let e = heat_kernel(0.7, 1.3);
        assert!((z - c(e, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn v_examples() {
        let t = c(0.0, -1.0);
        let v = vertex_v(0.0, 1.0, 1.0, t, t).unwrap();
        assert!((v - c(0.0, -4.0 / PI)).norm() < 1e-15);
        assert!((v.im + 1.27324).abs() < 1e-5);
        let v = vertex_v(PI / 2.0, 2.0, 2.0, t, t).unwrap();
        let direct = I * 2.0 * (c(-PI / 2.0, 0.0).inv() - c(3.0 * PI / 2.0, 0.0).inv());
        assert!((v - c(0.0, -16.0 / (3.0 * PI))).norm() < 1e-14);
        assert!((v - direct).norm() < 1e-14);
        let far = vertex_v(0.0, 1.0, 1.0, t, t * 1e30).unwrap();
        assert!(far.norm() < 3e-3);
        assert_eq!(vertex_v(PI, 1.0, 1.0, t, t), Err(Error::Pole));
    }

    #[test]
    fn v_antisymmetry() {
        for &(theta, l) in &[(0.3, 0.0), (1.2, -0.7), (-2.5, 3.1)] {
            let v = vertex_v_log(theta, c(l, 0.0)).unwrap();
            let w = vertex_v_log(-theta, c(l, 0.0)).unwrap();
            assert!((w + v.conj()).norm() < 1e-14);
        }
    }

    #[test]
    fn log_ratio_examples() {
        assert_eq!(log_ratios(&[1.0, 1.0], &[2.0, 2.0]).unwrap(), vec![0.0]);
        let s = log_ratios(&[1.0, 2.0], &[1.0, 1.0]).unwrap();
        assert!((s[0] - 2f64.ln()).abs() < 1e-16);
        assert_eq!(log_ratios(&[1.0, 1.0, 1.0], &[1.0, 1.0, 1.0]).unwrap(), vec![0.0, 0.0]);
        assert_eq!(log_ratios(&[1.0, -1.0], &[1.0, 1.0]), Err(Error::LogDomain));
    }

    #[test]
    fn chain_examples() {
        let ab = AlternatingWord::new(vec![Vortex::A, Vortex::B]).unwrap();
        let s = [c(0.0, 0.0), c(0.0, 0.0)];
        let half = Flux::new(0.5, 0.5).unwrap();
        let v = chain_s(&ab, &s, 0.0, 0.0, &half, ChainVariant::Matched).unwrap();
        assert!((v - c(1.0 / (4.0 * PI * PI), 0.0)).norm() < 1e-16);
        let one = Flux::new(0.5, 0.0).unwrap();
        let v = chain_s(&ab, &s, 0.0, 0.0, &one, ChainVariant::Matched).unwrap();
        assert_eq!(v, c(0.0, 0.0));
        assert!(matches!(
            chain_s(&ab, &s, PI, 0.0, &half, ChainVariant::Matched),
            Err(Error::ValidityDomain { .. })
        ));
    }

    #[test]
    fn chain_variants_agree_for_two_letters() {
        let ab = AlternatingWord::new(vec![Vortex::A, Vortex::B]).unwrap();
        let flux = Flux::new(0.3, 0.7).unwrap();
        let s = [c(0.4, 0.0), c(-1.1, 0.0)];
        let m = chain_s(&ab, &s, 0.5, -1.0, &flux, ChainVariant::Matched).unwrap();
        let x = chain_s(&ab, &s, 0.5, -1.0, &flux, ChainVariant::Mixed).unwrap();
        assert_eq!(m, x);
        let aba = AlternatingWord::new(vec![Vortex::A, Vortex::B, Vortex::A]).unwrap();
        let s3 = [c(0.4, 0.0), c(-1.1, 0.0), c(0.9, 0.0)];
        let m = chain_s(&aba, &s3, 0.5, -1.0, &flux, ChainVariant::Matched).unwrap();
        let x = chain_s(&aba, &s3, 0.5, -1.0, &flux, ChainVariant::Mixed).unwrap();
        assert!((m - x).norm() > 1e-3 * m.norm());
    }

    #[test]
    fn flux_validation() {
        assert!(Flux::new(1.0, 0.0).is_err());
        assert!(Flux::new(-0.1, 0.0).is_err());
        assert!(Flux::new(0.0, 0.999).is_ok());
    }
}
