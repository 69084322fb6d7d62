//! Flat geometry of the twice-punctured plane.
//!
//! All operations work in the canonical frame `a = (0, 0)`, `b = (ρ, 0)`.
//! Arbitrary placements are mapped into it once by [`VortexConfig::new`] and
//! [`VortexConfig::to_canonical`].
//!
//! Polar frames are counterclockwise with the axis pointing from the center
//! toward the other vortex, so the cuts `L_a = {x < 0, y = 0}` and
//! `L_b = {x > ρ, y = 0}` sit at `θ = ±π`. Points on a cut get `θ = +π`.

use core::f64::consts::PI;
use core::fmt;

use num_complex::Complex64;
#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::kernels::Flux;

/// One of the two punctures.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Vortex {
    A,
    B,
}

impl Vortex {
    pub fn other(self) -> Vortex {
        match self {
            Vortex::A => Vortex::B,
            Vortex::B => Vortex::A,
        }
    }

    pub fn label(self) -> char {
        match self {
            Vortex::A => 'a',
            Vortex::B => 'b',
        }
    }
}

impl fmt::Display for Vortex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label())
    }
}

/// A point of the plane, in length units.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlanePoint {
    pub x: f64,
    pub y: f64,
}

impl PlanePoint {
    pub const fn new(x: f64, y: f64) -> Self {
        PlanePoint { x, y }
    }

    pub fn dist(self, other: PlanePoint) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Vortex placement and the rigid motion onto the canonical frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VortexConfig {
    a: PlanePoint,
    b: PlanePoint,
    rho: f64,
    cos: f64,
    sin: f64,
}

impl VortexConfig {
    /// Canonical placement `a = (0, 0)`, `b = (rho, 0)`.
    pub fn canonical(rho: f64) -> Result<Self> {
        Self::new(PlanePoint::new(0.0, 0.0), PlanePoint::new(rho, 0.0))
    }

    /// Arbitrary placement; the rigid motion taking `a` to the origin and `b`
    /// onto the positive x-axis is stored for [`to_canonical`](Self::to_canonical).
    pub fn new(a: PlanePoint, b: PlanePoint) -> Result<Self> {
        if !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidParameter {
                name: "vortices",
                reason: "coordinates must be finite",
            });
        }
        let rho = a.dist(b);
        if !(rho > 0.0) {
            return Err(Error::InvalidParameter {
                name: "vortices",
                reason: "a and b must be distinct",
            });
        }
        let (cos, sin) = if a.y == b.y && a.x < b.x {
            (1.0, 0.0)
        } else {
            ((b.x - a.x) / rho, (b.y - a.y) / rho)
        };
        Ok(VortexConfig { a, b, rho, cos, sin })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Position of `a` in the frame the configuration was given in.
    pub fn a(&self) -> PlanePoint {
        self.a
    }

    /// Position of `b` in the frame the configuration was given in.
    pub fn b(&self) -> PlanePoint {
        self.b
    }

    pub fn to_canonical(&self, p: PlanePoint) -> PlanePoint {
        let dx = p.x - self.a.x;
        let dy = p.y - self.a.y;
        PlanePoint::new(dx * self.cos + dy * self.sin, -dx * self.sin + dy * self.cos)
    }

    pub fn from_canonical(&self, p: PlanePoint) -> PlanePoint {
        PlanePoint::new(
            self.a.x + p.x * self.cos - p.y * self.sin,
            self.a.y + p.x * self.sin + p.y * self.cos,
        )
    }

    /// Canonical position of a vortex.
    pub fn position(&self, v: Vortex) -> PlanePoint {
        match v {
            Vortex::A => PlanePoint::new(0.0, 0.0),
            Vortex::B => PlanePoint::new(self.rho, 0.0),
        }
    }

    /// The cut a canonical point lies on, if any.
    pub fn cut_at(&self, p: PlanePoint) -> Option<Vortex> {
        if p.y != 0.0 {
            None
        } else if p.x < 0.0 {
            Some(Vortex::A)
        } else if p.x > self.rho {
            Some(Vortex::B)
        } else {
            None
        }
    }

    /// The vortex a canonical point coincides with, if any.
    pub fn vortex_at(&self, p: PlanePoint) -> Option<Vortex> {
        if p.y != 0.0 {
            None
        } else if p.x == 0.0 {
            Some(Vortex::A)
        } else if p.x == self.rho {
            Some(Vortex::B)
        } else {
            None
        }
    }

    /// Rejects points that coincide with a vortex.
    pub fn check_endpoint(&self, p: PlanePoint, what: &'static str) -> Result<()> {
        if !p.is_finite() {
            return Err(Error::InvalidParameter {
                name: what,
                reason: "coordinates must be finite",
            });
        }
        match self.vortex_at(p) {
            Some(vortex) => Err(Error::DegeneratePoint { what, vortex }),
            None => Ok(()),
        }
    }
}

/// Polar coordinates about a vortex.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolarAround {
    pub center: Vortex,
    pub r: f64,
    pub theta: f64,
}

/// Maps an angle into `(−π, π]`, sending `−π` to `+π`.
pub(crate) fn wrap_half_open(theta: f64) -> f64 {
    if theta <= -PI {
        theta + 2.0 * PI
    } else if theta > PI {
        theta - 2.0 * PI
    } else {
        theta
    }
}

pub fn polar_around(p: PlanePoint, center: Vortex, cfg: &VortexConfig) -> Result<PolarAround> {
    let c = cfg.position(center);
    let (dx, dy) = match center {
        Vortex::A => (p.x - c.x, p.y - c.y),
        Vortex::B => (c.x - p.x, c.y - p.y),
    };
    let r = dx.hypot(dy);
    if r == 0.0 {
        return Err(Error::DegeneratePoint {
            what: "point",
            vortex: center,
        });
    }
    // atan2(-0.0, x<0) is -π; the tie-break wants +π.
    let theta = wrap_half_open(dy.atan2(dx));
    Ok(PolarAround { center, r, theta })
}

/// Inverse of [`polar_around`].
pub fn polar_to_point(polar: PolarAround, cfg: &VortexConfig) -> PlanePoint {
    let c = cfg.position(polar.center);
    let (s, co) = polar.theta.sin_cos();
    match polar.center {
        Vortex::A => PlanePoint::new(c.x + polar.r * co, c.y + polar.r * s),
        Vortex::B => PlanePoint::new(c.x - polar.r * co, c.y - polar.r * s),
    }
}

/// End angles `(θ₀, θ)` of a word of length at least two.
///
/// `θ₀ = ∠x₀,c₁,c₂` turns from the direction of `x₀` to the direction of
/// `c₂`, so it is the negated polar angle of `x₀` about `c₁` (an `x₀` on the
/// cut gives `−π`). `θ = ∠c_{n−1},c_n,x` is the polar angle of `x` about `c_n`.
pub fn opening_angles(
    word: &crate::cover::AlternatingWord,
    x0: PlanePoint,
    x: PlanePoint,
    cfg: &VortexConfig,
) -> Result<(f64, f64)> {
    let seq = word.vortices();
    if seq.len() < 2 {
        return Err(Error::InvalidParameter {
            name: "word",
            reason: "opening angles need a word of length at least two",
        });
    }
    cfg.check_endpoint(x0, "x0")?;
    cfg.check_endpoint(x, "x")?;
    let first = polar_around(x0, seq[0], cfg)?;
    let last = polar_around(x, seq[seq.len() - 1], cfg)?;
    Ok((-first.theta, last.theta))
}

/// Single-vortex angle data of the segment `x₀ → x` about one vortex.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepAngle {
    /// `θ_c(x) − θ_c(x₀)`, in `(−2π, 2π)`.
    pub raw: f64,
    /// `0` or `±2π`; nonzero iff the segment crosses the cut of the vortex.
    pub eta: f64,
    /// `raw − eta`, the angle subtended by the segment, in `(−π, π)`.
    pub reduced: f64,
}

/// Angle swept about `center` along the straight segment, with the on-cut
/// tie-break of [`polar_around`].
pub fn sweep_angle(center: Vortex, x0: PlanePoint, x: PlanePoint, cfg: &VortexConfig) -> Result<SweepAngle> {
    let p0 = polar_around(x0, center, cfg)?;
    let p1 = polar_around(x, center, cfg)?;
    let raw = p1.theta - p0.theta;
    let eta = if raw > PI {
        2.0 * PI
    } else if raw < -PI {
        -2.0 * PI
    } else {
        0.0
    };
    let reduced = raw - eta;
    if reduced.abs() >= PI {
        return Err(Error::VortexOnSegment(center));
    }
    Ok(SweepAngle { raw, eta, reduced })
}

/// Phase attached to the direct term by one cut.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CrossingFactor {
    pub zeta: Complex64,
    pub eta: f64,
}

impl CrossingFactor {
    pub fn from_eta(eta: f64, sigma: f64) -> Self {
        CrossingFactor {
            zeta: Complex64::from_polar(1.0, sigma * eta),
            eta,
        }
    }
}

/// Classifies the crossings of the segment `x₀ → x` with `L_a` and `L_b`.
///
/// Crossing `L_a` from the lower half-plane gives `η_a = 2π`, from the upper
/// `−2π`; for `L_b` the roles are swapped. An endpoint lying on a cut is
/// rejected because the side is then ambiguous.
pub fn crossing_factors(
    x0: PlanePoint,
    x: PlanePoint,
    flux: &Flux,
    cfg: &VortexConfig,
) -> Result<(CrossingFactor, CrossingFactor)> {
    cfg.check_endpoint(x0, "x0")?;
    cfg.check_endpoint(x, "x")?;
    for p in [x0, x] {
        if let Some(v) = cfg.cut_at(p) {
            return Err(Error::AmbiguousCrossing(v));
        }
    }
    let rho = cfg.rho();
    let (mut eta_a, mut eta_b) = (0.0, 0.0);
    if x0.y == 0.0 && x.y == 0.0 {
        // Both on the axis between the vortices (cuts were excluded above).
    } else if x0.y == 0.0 || x.y == 0.0 {
        // One endpoint on the open segment (a, b): no cut is met.
    } else if (x0.y < 0.0) != (x.y < 0.0) {
        let xc = x0.x + (x.x - x0.x) * x0.y / (x0.y - x.y);
        if xc == 0.0 {
            return Err(Error::VortexOnSegment(Vortex::A));
        }
        if xc == rho {
            return Err(Error::VortexOnSegment(Vortex::B));
        }
        let lower = x0.y < 0.0;
        if xc < 0.0 {
            eta_a = if lower { 2.0 * PI } else { -2.0 * PI };
        } else if xc > rho {
            eta_b = if lower { -2.0 * PI } else { 2.0 * PI };
        }
    }
    Ok((
        CrossingFactor::from_eta(eta_a, flux.alpha()),
        CrossingFactor::from_eta(eta_b, flux.beta()),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cover::AlternatingWord;

    fn cfg2() -> VortexConfig {
        VortexConfig::canonical(2.0).unwrap()
    }

    #[test]
    fn polar_examples() {
        let cfg = cfg2();
        let p = polar_around(PlanePoint::new(1.0, 0.0), Vortex::A, &cfg).unwrap();
        assert_eq!((p.r, p.theta), (1.0, 0.0));
        let p = polar_around(PlanePoint::new(3.0, 0.0), Vortex::B, &cfg).unwrap();
        assert_eq!((p.r, p.theta), (1.0, PI));
        let p = polar_around(PlanePoint::new(0.0, 1.0), Vortex::A, &cfg).unwrap();
        assert_eq!(p.r, 1.0);
        assert!((p.theta - PI / 2.0).abs() < 1e-15);
        assert!(polar_around(PlanePoint::new(2.0, 0.0), Vortex::B, &cfg).is_err());
    }

    #[test]
    fn negative_zero_on_cut_gets_plus_pi() {
        let cfg = cfg2();
        let p = polar_around(PlanePoint::new(-1.0, -0.0), Vortex::A, &cfg).unwrap();
        assert_eq!(p.theta, PI);
        let p = polar_around(PlanePoint::new(3.0, -0.0), Vortex::B, &cfg).unwrap();
        assert_eq!(p.theta, PI);
    }

    #[test]
    fn b_frame_upper_half_plane_is_negative() {
        let cfg = cfg2();
        let p = polar_around(PlanePoint::new(2.0, 1.0), Vortex::B, &cfg).unwrap();
        assert!((p.theta + PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn opening_angle_examples() {
        let rho = 1.5;
        let cfg = VortexConfig::canonical(rho).unwrap();
        let ab = AlternatingWord::new(alloc::vec![Vortex::A, Vortex::B]).unwrap();
        let ba = AlternatingWord::new(alloc::vec![Vortex::B, Vortex::A]).unwrap();
        let (t0, t) = opening_angles(&ab, PlanePoint::new(-1.0, 0.0), PlanePoint::new(rho + 1.0, 0.0), &cfg).unwrap();
        assert_eq!(t0, -PI);
        assert_eq!(t, PI);
        let (t0, _) = opening_angles(&ab, PlanePoint::new(0.0, 1.0), PlanePoint::new(1.0, 1.0), &cfg).unwrap();
        assert!((t0 + PI / 2.0).abs() < 1e-15);
        let (t0, _) = opening_angles(&ba, PlanePoint::new(rho, -1.0), PlanePoint::new(1.0, 1.0), &cfg).unwrap();
        assert!((t0 + PI / 2.0).abs() < 1e-15);
        let a = AlternatingWord::new(alloc::vec![Vortex::A]).unwrap();
        assert!(opening_angles(&a, PlanePoint::new(0.0, 1.0), PlanePoint::new(1.0, 1.0), &cfg).is_err());
    }

    #[test]
    fn crossing_examples() {
        let cfg = cfg2();
        let flux = Flux::new(0.25, 0.25).unwrap();
        let (fa, fb) = crossing_factors(PlanePoint::new(1.0, 1.0), PlanePoint::new(1.0, -1.0), &flux, &cfg).unwrap();
        assert_eq!((fa.eta, fb.eta), (0.0, 0.0));
        assert_eq!(fa.zeta, Complex64::new(1.0, 0.0));
        let (fa, fb) = crossing_factors(PlanePoint::new(-1.0, -1.0), PlanePoint::new(-1.0, 1.0), &flux, &cfg).unwrap();
        assert_eq!(fa.eta, 2.0 * PI);
        assert!((fa.zeta - Complex64::new(0.0, 1.0)).norm() < 1e-15);
        assert_eq!(fb.eta, 0.0);
        let (fa, fb) = crossing_factors(PlanePoint::new(3.0, 1.0), PlanePoint::new(3.0, -1.0), &flux, &cfg).unwrap();
        assert_eq!(fa.eta, 0.0);
        assert_eq!(fb.eta, 2.0 * PI);
        assert!((fb.zeta - Complex64::new(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn crossing_errors() {
        let cfg = cfg2();
        let flux = Flux::new(0.25, 0.25).unwrap();
        assert_eq!(
            crossing_factors(PlanePoint::new(0.0, 1.0), PlanePoint::new(0.0, -1.0), &flux, &cfg),
            Err(Error::VortexOnSegment(Vortex::A))
        );
        assert_eq!(
            crossing_factors(PlanePoint::new(-1.0, 0.0), PlanePoint::new(-1.0, 1.0), &flux, &cfg),
            Err(Error::AmbiguousCrossing(Vortex::A))
        );
    }

    #[test]
    fn sweep_matches_crossing_and_flags_vortex_on_segment() {
        let cfg = cfg2();
        let s = sweep_angle(Vortex::A, PlanePoint::new(-1.0, -1.0), PlanePoint::new(-1.0, 1.0), &cfg).unwrap();
        assert_eq!(s.eta, 2.0 * PI);
        assert!((s.reduced + PI / 2.0).abs() < 1e-14);
        let s = sweep_angle(Vortex::B, PlanePoint::new(3.0, 1.0), PlanePoint::new(3.0, -1.0), &cfg).unwrap();
        assert_eq!(s.eta, 2.0 * PI);
        assert_eq!(
            sweep_angle(Vortex::A, PlanePoint::new(1.0, 0.0), PlanePoint::new(-1.0, 0.0), &cfg),
            Err(Error::VortexOnSegment(Vortex::A))
        );
    }

    #[test]
    fn rigid_motion_round_trip() {
        let cfg = VortexConfig::new(PlanePoint::new(1.0, 2.0), PlanePoint::new(1.0, 5.0)).unwrap();
        assert_eq!(cfg.rho(), 3.0);
        let b = cfg.to_canonical(PlanePoint::new(1.0, 5.0));
        assert!((b.x - 3.0).abs() < 1e-15 && b.y.abs() < 1e-15);
        let p = PlanePoint::new(-0.3, 7.1);
        let q = cfg.from_canonical(cfg.to_canonical(p));
        assert!(p.dist(q) < 1e-14);
        assert!(VortexConfig::new(PlanePoint::new(1.0, 1.0), PlanePoint::new(1.0, 1.0)).is_err());
    }
}
