//! Exact arithmetic on circle angles and the dynamics of angle
//! multiplication `sigma_d : a -> d*a (mod 1)`.

use std::fmt;
use std::str::FromStr;

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, Zero};

use crate::error::{Error, Result};

/// Default step cap for orbit computation. Rational orbits terminate by
/// pigeonhole on the reduced denominator, so this only guards absurd inputs.
pub const DEFAULT_ORBIT_CAP: usize = 1_000_000;

/// A point of the circle `R/Z`, stored as an exact rational in `[0, 1)`
/// in lowest terms.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Angle(BigRational);

impl Angle {
    /// Builds an angle from a fraction, reducing modulo 1.
    pub fn new<N: Into<BigInt>, D: Into<BigInt>>(num: N, den: D) -> Result<Self> {
        let den: BigInt = den.into();
        if den.is_zero() {
            return Err(Error::ZeroDenominator);
        }
        Ok(Self::from_ratio(BigRational::new(num.into(), den)))
    }

    /// Reduces an arbitrary rational modulo 1 into `[0, 1)`.
    pub fn from_ratio(r: BigRational) -> Self {
        let mut f = r.fract();
        if f.is_negative() {
            f += BigRational::one();
        }
        Angle(f)
    }

    pub fn zero() -> Self {
        Angle(BigRational::zero())
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn as_ratio(&self) -> &BigRational {
        &self.0
    }

    /// `d * a mod 1`; the underlying angle map. Prefer [`sigma`] when a
    /// degree check is wanted.
    pub fn times(&self, k: u32) -> Self {
        Self::from_ratio(&self.0 * BigRational::from_integer(BigInt::from(k)))
    }

    /// `a + p/q mod 1`.
    pub fn add_ratio(&self, r: &BigRational) -> Self {
        Self::from_ratio(&self.0 + r)
    }

    /// Counterclockwise distance from `from` to `self`, in `[0, 1)`.
    pub fn ccw_dist(&self, from: &Angle) -> BigRational {
        let diff = self.as_ratio() - from.as_ratio();
        if diff.is_negative() {
            diff + BigRational::one()
        } else {
            diff
        }
    }

    /// True if `self` lies strictly inside the open arc travelled
    /// counterclockwise from `s` to `t`. Empty when `s == t`.
    pub fn in_open_arc(&self, s: &Angle, t: &Angle) -> bool {
        if s == t {
            return false;
        }
        if s < t {
            s < self && self < t
        } else {
            self > s || self < t
        }
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

impl fmt::Debug for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl FromStr for Angle {
    type Err = Error;

    /// Accepts `p/q` or a bare integer (`0` in particular).
    fn from_str(s: &str) -> Result<Self> {
        let parse_int = |t: &str| -> Result<BigInt> {
            t.parse::<BigInt>().map_err(|_| Error::Parse {
                line: 0,
                col: 0,
                msg: format!("bad fraction `{s}`"),
            })
        };
        match s.split_once('/') {
            Some((p, q)) => Angle::new(parse_int(p)?, parse_int(q)?),
            None => Ok(Angle::from_ratio(BigRational::from_integer(parse_int(s)?))),
        }
    }
}

/// Orbit bookkeeping for a (pre)periodic point: `orbit` lists the
/// `preperiod + period` distinct iterates, and the map sends the last
/// entry back to `orbit[preperiod]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrbitInfo {
    pub preperiod: usize,
    pub period: usize,
    pub orbit: Vec<Angle>,
}

fn check_degree(d: u32) -> Result<()> {
    if d < 2 {
        return Err(Error::InvalidDegree(d));
    }
    Ok(())
}

/// The angle map `sigma_d(a) = d*a mod 1`.
pub fn sigma(d: u32, a: &Angle) -> Result<Angle> {
    check_degree(d)?;
    Ok(a.times(d))
}

/// Iterates `sigma_d` until the first repeat and returns minimal
/// preperiod and period. Every rational angle terminates: the reduced
/// denominator never grows under `sigma_d`.
pub fn orbit(d: u32, a: &Angle) -> Result<OrbitInfo> {
    orbit_with_cap(d, a, DEFAULT_ORBIT_CAP)
}

pub fn orbit_with_cap(d: u32, a: &Angle, cap: usize) -> Result<OrbitInfo> {
    check_degree(d)?;
    let mut seen: std::collections::HashMap<Angle, usize> = std::collections::HashMap::new();
    let mut seq = Vec::new();
    let mut x = a.clone();
    loop {
        if let Some(&i) = seen.get(&x) {
            return Ok(OrbitInfo {
                preperiod: i,
                period: seq.len() - i,
                orbit: seq,
            });
        }
        if seq.len() >= cap {
            return Err(Error::OrbitCapExceeded(cap));
        }
        seen.insert(x.clone(), seq.len());
        seq.push(x.clone());
        x = x.times(d);
    }
}

/// The `d` preimages `{(a+i)/d : 0 <= i < d}` of `a` under `sigma_d`,
/// in increasing circular order.
pub fn preimages(d: u32, a: &Angle) -> Result<Vec<Angle>> {
    check_degree(d)?;
    let q = a.denom().clone();
    let p = a.numer().clone();
    let dq = BigInt::from(d) * &q;
    (0..d)
        .map(|i| Angle::new(&p + BigInt::from(i) * &q, dq.clone()))
        .collect()
}

/// Length of the smallest arc containing both points; an exact metric
/// with values in `[0, 1/2]`.
pub fn rho(a: &Angle, b: &Angle) -> BigRational {
    let diff = if a >= b {
        a.as_ratio() - b.as_ratio()
    } else {
        b.as_ratio() - a.as_ratio()
    };
    let complement = BigRational::one() - &diff;
    if diff <= complement {
        diff
    } else {
        complement
    }
}

/// The expansion constant `1/(2d)`: whenever `0 < rho(x, y) < 1/(2d)`,
/// the map `sigma_d` strictly increases `rho`.
pub fn epsilon_d(d: u32) -> Result<BigRational> {
    check_degree(d)?;
    Ok(BigRational::new(BigInt::one(), BigInt::from(2 * d)))
}
