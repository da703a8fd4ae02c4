//! Scalar abstraction shared by the numeric parts of the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point type usable by the inference engine: `f32` or `f64`.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 converts to every Real")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// `ln(sum(exp(xs)))`, returning `-inf` for an empty or all `-inf` input.
pub fn log_sum_exp<T: Real>(xs: &[T]) -> T {
    let max = xs.iter().copied().fold(T::neg_infinity(), T::max);
    if !max.is_finite() {
        return max;
    }
    let mut acc = NeumaierSum::default();
    for &x in xs {
        acc.add((x - max).exp());
    }
    max + acc.total().ln()
}

/// Compensated (Neumaier) summation.
#[derive(Clone, Copy, Debug, Default)]
pub struct NeumaierSum<T> {
    sum: T,
    comp: T,
}

impl<T: Real> NeumaierSum<T> {
    pub fn add(&mut self, x: T) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> T {
        self.sum + self.comp
    }
}

/// Accumulates terms given as `(log_scale, value)` pairs so that the sum
/// `Σ value·exp(log_scale)` can be formed without overflow or underflow.
///
/// Terms are reduced in sorted order, so the result does not depend on the
/// order in which they were pushed.
#[derive(Clone, Debug, Default)]
pub struct LogSum<T> {
    terms: Vec<(T, T)>,
}

impl<T: Real> LogSum<T> {
    pub fn new() -> Self {
        Self { terms: Vec::new() }
    }

    pub fn push(&mut self, log_scale: T, value: T) {
        if value > T::zero() && log_scale > T::neg_infinity() {
            self.terms.push((log_scale, value));
        }
    }

    pub fn push_log(&mut self, log_value: T) {
        self.push(log_value, T::one());
    }

    /// Natural log of the accumulated sum.
    pub fn ln(&self) -> T {
        if self.terms.is_empty() {
            return T::neg_infinity();
        }
        let mut terms: Vec<T> = self.terms.iter().map(|&(s, v)| s + v.ln()).collect();
        terms.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        log_sum_exp(&terms)
    }
}
