//! Labels and the evaluable-loss abstraction shared by CPE and composite losses.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::scalar::{weighted, Real, RealFn};

/// Binary label `y ∈ {-1, +1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Pos,
    Neg,
}

impl Label {
    pub fn from_sign(y: i64) -> Result<Label> {
        match y {
            1 => Ok(Label::Pos),
            -1 => Ok(Label::Neg),
            other => Err(Error::Argument(format!("label must be +1 or -1, got {other}"))),
        }
    }

    pub fn sign(self) -> i8 {
        match self {
            Label::Pos => 1,
            Label::Neg => -1,
        }
    }

    pub fn flip(self) -> Label {
        match self {
            Label::Pos => Label::Neg,
            Label::Neg => Label::Pos,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Pos => "+1",
            Label::Neg => "-1",
        })
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Label> {
        match s.trim() {
            "1" | "+1" | "pos" | "positive" => Ok(Label::Pos),
            "-1" | "neg" | "negative" => Ok(Label::Neg),
            other => Err(Error::Parse(format!("bad label {other:?}"))),
        }
    }
}

/// A loss `ℓ(y, p)` over some prediction domain: probability estimates for
/// CPE losses, raw scores for composite losses.
pub trait Loss<T: Real> {
    fn partial(&self, y: Label, p: T) -> T;

    /// `η ℓ(1, p) + (1 - η) ℓ(-1, p)`, with `0 · ∞ = 0`.
    fn conditional_risk(&self, eta: T, p: T) -> T {
        weighted(eta, self.partial(Label::Pos, p)) + weighted(T::one() - eta, self.partial(Label::Neg, p))
    }
}

impl<T: Real, L: Loss<T> + ?Sized> Loss<T> for &L {
    fn partial(&self, y: Label, p: T) -> T {
        (**self).partial(y, p)
    }
}

/// A loss given directly by its two partial functions.
#[derive(Clone)]
pub struct PartialLosses<T: Real> {
    pub ell_pos: RealFn<T>,
    pub ell_neg: RealFn<T>,
}

impl<T: Real> Loss<T> for PartialLosses<T> {
    fn partial(&self, y: Label, p: T) -> T {
        match y {
            Label::Pos => (self.ell_pos)(p),
            Label::Neg => (self.ell_neg)(p),
        }
    }
}

pub(crate) fn check_unit<T: Real>(what: &str, x: T) -> Result<()> {
    if x >= T::zero() && x <= T::one() {
        Ok(())
    } else {
        Err(Error::Argument(format!("{what} = {x} must lie in [0,1]")))
    }
}
