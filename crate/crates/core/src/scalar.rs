//! Scalar abstraction shared by every numeric routine in the crate.
//!
//! All of the math (embeddings, persistence, spectra) is written against
//! [`Scalar`] so the same code runs in `f32`, `f64` or double-double
//! ([`twofloat::TwoFloat`]) arithmetic. The extended type matters for the
//! non-uniform Fourier round trip, whose system matrix is routinely
//! conditioned past what `f64` can resolve.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, NumAssign};
use twofloat::TwoFloat;

/// Floating point scalar usable throughout the crate.
pub trait Scalar:
    Float + FloatConst + NumAssign + Debug + Display + Default + Send + Sync + 'static
{
    /// Unit roundoff of the type (distance from 1 to the next representable
    /// value). `TwoFloat::epsilon()` reports the smallest positive normal, so
    /// this cannot be derived from `Float::epsilon` generically.
    fn unit_roundoff() -> Self;

    /// Lossless-enough conversion from `f64`; panics only on NaN payloads
    /// the target cannot hold, which never happens for the supported types.
    #[inline]
    fn of(x: f64) -> Self {
        <Self as num_traits::NumCast>::from(x).expect("f64 converts to every Scalar")
    }

    #[inline]
    fn of_usize(x: usize) -> Self {
        Self::of(x as f64)
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Quotient accurate to the type's working precision.
    ///
    /// Same as `/` except for [`TwoFloat`], whose built-in division of two
    /// double-doubles is only accurate to about `f64` precision.
    #[inline]
    fn quot(self, rhs: Self) -> Self {
        self / rhs
    }
}

impl Scalar for f32 {
    fn unit_roundoff() -> Self {
        f32::EPSILON
    }
}

impl Scalar for f64 {
    fn unit_roundoff() -> Self {
        f64::EPSILON
    }
}

impl Scalar for TwoFloat {
    fn unit_roundoff() -> Self {
        // 2^-104: two 53-bit mantissas minus the shared hidden bit headroom.
        TwoFloat::from(2f64.powi(-104))
    }

    fn quot(self, rhs: Self) -> Self {
        // one Newton correction through the accurate TwoFloat / f64 path
        let q = self / rhs;
        q + (self - q * rhs) / rhs.hi()
    }
}

/// Total order on scalars that are known not to be NaN.
#[inline]
pub(crate) fn cmp_scalar<T: Scalar>(a: &T, b: &T) -> std::cmp::Ordering {
    a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal)
}

/// `(sin 2πf, cos 2πf)` for a phase given in turns.
///
/// Range reduction happens on the turn count so the argument handed to the
/// series never exceeds π/4; the Taylor sums run until the terms drop below
/// the type's roundoff. This keeps double-double phases accurate to ~1e-31,
/// which the library trigonometry of `TwoFloat` does not.
pub fn sin_cos_turns<T: Scalar>(turns: T) -> (T, T) {
    let one = T::one();
    let mut f = turns - turns.floor();
    if f >= one {
        f -= one;
    }
    // Octant reduction: f in [0, 1) -> k in 0..8, remainder in [0, 1/8].
    let eight = T::of(8.0);
    let scaled = f * eight;
    let k = scaled.floor().to_usize().unwrap_or(0).min(7);
    let rem = (scaled - T::of_usize(k)).quot(eight); // turns, in [0, 1/8)
    let tau = T::PI() + T::PI();
    let (s, c) = if k.is_multiple_of(2) {
        taylor_sin_cos(rem * tau)
    } else {
        // mirror around the octant boundary: angle = (k+1)/8 turn - rem'
        let rem2 = T::one().quot(eight) - rem;
        let (s, c) = taylor_sin_cos(rem2 * tau);
        (c, s)
    };
    // (s, c) is sin/cos of the reduced angle measured within the quadrant
    // pair; map back by quadrant.
    match k {
        0 => (s, c),
        1 => (s, c),
        2 => (c, -s),
        3 => (c, -s),
        4 => (-s, -c),
        5 => (-s, -c),
        6 => (-c, s),
        _ => (-c, s),
    }
}

fn taylor_sin_cos<T: Scalar>(x: T) -> (T, T) {
    let eps = T::unit_roundoff();
    let x2 = x * x;
    let mut sin = x;
    let mut cos = T::one();
    let mut term_s = x;
    let mut term_c = T::one();
    let mut k = 1usize;
    loop {
        let a = T::of_usize(2 * k);
        let b = T::of_usize(2 * k + 1);
        term_c = (-term_c * x2).quot((a - T::one()) * a);
        term_s = (-term_s * x2).quot(a * b);
        cos += term_c;
        sin += term_s;
        if term_c.abs() <= eps * T::of(1e-3) && term_s.abs() <= eps * T::of(1e-3) {
            break;
        }
        k += 1;
        if k > 64 {
            break;
        }
    }
    (sin, cos)
}
