//! Certified real arithmetic.
//!
//! An [`Enclosure`] is a pair of arbitrary-precision floats `[lo, hi]` with
//! `lo` rounded toward −∞ and `hi` toward +∞, guaranteed to contain the exact
//! real value of the expression it represents. Exact integer and rational
//! inputs additionally carry their rational value, so ring operations on them
//! stay width-zero until a transcendental step or a size cap forces interval
//! form.
//!
//! All branching elsewhere in the crate goes through [`Enclosure::compare`]
//! and the `certified_*` helpers, which return [`Verdict::Unknown`] instead of
//! guessing when the enclosures overlap. Callers escalate precision via
//! [`Precision::escalate`] and surface an explicit error when the maximum is
//! reached.

use std::cell::RefCell;
use std::fmt;

use astro_float::{BigFloat, Consts, Radix, RoundingMode, Sign, Word};
use num_bigint::{BigInt, BigUint, Sign as IntSign};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Default working precision in bits.
pub const DEFAULT_BITS: u32 = 128;
/// Hard ceiling for precision escalation.
pub const MAX_BITS: u32 = 4096;
/// Rational values whose numerator+denominator exceed this many bits stop
/// propagating exactly and fall back to interval form.
const EXACT_BIT_CAP: u64 = 16384;

thread_local! {
    static CONSTS: RefCell<Consts> = RefCell::new(Consts::new().expect("constants cache"));
}

fn with_consts<T>(f: impl FnOnce(&mut Consts) -> T) -> T {
    CONSTS.with(|c| f(&mut c.borrow_mut()))
}

/// Three-valued result of a certified comparison.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    True,
    False,
    Unknown,
}

impl Verdict {
    pub fn is_true(self) -> bool {
        self == Verdict::True
    }
    pub fn is_false(self) -> bool {
        self == Verdict::False
    }
    pub fn is_unknown(self) -> bool {
        self == Verdict::Unknown
    }
}

/// Precision-escalation policy: start at `bits`, double on ambiguity up to
/// `max_bits`, then fail loudly.
#[derive(Clone, Copy, Debug)]
pub struct Precision {
    pub bits: u32,
    pub max_bits: u32,
}

impl Default for Precision {
    fn default() -> Self {
        Precision {
            bits: DEFAULT_BITS,
            max_bits: MAX_BITS,
        }
    }
}

/// What a retryable stage reports back to [`Precision::escalate`].
pub enum StageOutcome<T> {
    Done(T),
    /// The stage hit an ambiguous comparison; carries the two enclosures and
    /// a short description for diagnostics.
    Retry {
        lhs: String,
        rhs: String,
        context: String,
    },
}

impl Precision {
    pub fn new(bits: u32, max_bits: u32) -> Self {
        Precision { bits, max_bits }
    }

    /// Runs `stage` at doubling precision until it reports `Done` or the
    /// ceiling is reached.
    pub fn escalate<T>(&self, mut stage: impl FnMut(u32) -> Result<StageOutcome<T>>) -> Result<T> {
        let mut bits = self.bits;
        loop {
            match stage(bits)? {
                StageOutcome::Done(v) => return Ok(v),
                StageOutcome::Retry { lhs, rhs, context } => {
                    if bits >= self.max_bits {
                        return Err(Error::AmbiguousComparison {
                            bits,
                            lhs,
                            rhs,
                            context,
                        });
                    }
                    bits = (bits * 2).min(self.max_bits);
                }
            }
        }
    }
}

fn rm_down() -> RoundingMode {
    RoundingMode::Down
}
fn rm_up() -> RoundingMode {
    RoundingMode::Up
}

fn chk(f: BigFloat, what: &str) -> Result<BigFloat> {
    if f.is_nan() || f.is_inf() {
        Err(Error::NumericDomain(format!("{what} produced {f:?}")))
    } else {
        Ok(f)
    }
}

/// Exact conversion of a big integer to a float (no rounding).
pub fn bigint_to_float(n: &BigInt) -> BigFloat {
    let (sign, mag) = (n.sign(), n.magnitude());
    if mag.is_zero() {
        return BigFloat::from_i64(0, 64);
    }
    let bits = mag.bits();
    let words = mag.to_u64_digits();
    // Shift left so the leading bit sits at the top of the last word; the
    // value is then 0.mantissa * 2^bits.
    let shift = (64 - (bits % 64)) % 64;
    let mut m: Vec<Word> = Vec::with_capacity(words.len() + 1);
    if shift == 0 {
        m.extend_from_slice(&words);
    } else {
        let mut carry: u64 = 0;
        for w in &words {
            m.push((w << shift) | carry);
            carry = w >> (64 - shift);
        }
        debug_assert_eq!(carry, 0);
    }
    let s = if sign == IntSign::Minus {
        Sign::Neg
    } else {
        Sign::Pos
    };
    BigFloat::from_words(&m, s, bits as i32)
}

/// Exact conversion of a (finite, non-NaN) float to a rational.
pub fn float_to_rational(f: &BigFloat) -> BigRational {
    if f.is_zero() {
        return BigRational::zero();
    }
    let (words, n, sign, e, _) = f.as_raw_parts().expect("finite float");
    // value = 0.mantissa * 2^e, mantissa has n significant bits at the top.
    let mut mag = BigUint::zero();
    for w in words.iter().rev() {
        mag = (mag << 64) | BigUint::from(*w);
    }
    let total_bits = (words.len() * 64) as i64;
    let _ = n;
    let mut num = BigInt::from(mag);
    if sign == Sign::Neg {
        num = -num;
    }
    let exp = e as i64 - total_bits;
    if exp >= 0 {
        BigRational::from_integer(num << exp as u64)
    } else {
        BigRational::new(num, BigInt::one() << (-exp) as u64)
    }
}

/// Directed conversion of a rational to a float with `bits` precision.
pub fn rational_to_float(q: &BigRational, bits: u32, rm: RoundingMode) -> BigFloat {
    let num = bigint_to_float(q.numer());
    let den = bigint_to_float(q.denom());
    num.div(&den, bits as usize, rm)
}

fn float_le(a: &BigFloat, b: &BigFloat) -> bool {
    matches!(a.cmp(b), Some(c) if c <= 0)
}
fn float_lt(a: &BigFloat, b: &BigFloat) -> bool {
    matches!(a.cmp(b), Some(c) if c < 0)
}

/// A certified interval enclosure of a real number.
#[derive(Clone)]
pub struct Enclosure {
    lo: BigFloat,
    hi: BigFloat,
    bits: u32,
    exact: Option<BigRational>,
}

impl fmt::Debug for Enclosure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.dec_lo(12), self.dec_hi(12))
    }
}

impl fmt::Display for Enclosure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.dec_lo(30), self.dec_hi(30))
    }
}

enum GeomTerms {
    Finite(u64),
    Infinite,
}

impl Enclosure {
    fn assert_ordered(self) -> Self {
        debug_assert!(
            !self.lo.is_nan() && !self.hi.is_nan() && float_le(&self.lo, &self.hi),
            "enclosure endpoints out of order"
        );
        self
    }

    fn from_parts(lo: BigFloat, hi: BigFloat, bits: u32, exact: Option<BigRational>) -> Self {
        Enclosure {
            lo,
            hi,
            bits,
            exact,
        }
        .assert_ordered()
    }

    pub fn from_rational_bits(q: BigRational, bits: u32) -> Self {
        let lo = rational_to_float(&q, bits, rm_down());
        let hi = rational_to_float(&q, bits, rm_up());
        Enclosure::from_parts(lo, hi, bits, Some(q))
    }

    pub fn from_rational(q: BigRational) -> Self {
        Enclosure::from_rational_bits(q, DEFAULT_BITS)
    }

    pub fn from_i64_bits(n: i64, bits: u32) -> Self {
        Enclosure::from_rational_bits(BigRational::from_integer(BigInt::from(n)), bits)
    }

    pub fn from_u64_bits(n: u64, bits: u32) -> Self {
        Enclosure::from_rational_bits(BigRational::from_integer(BigInt::from(n)), bits)
    }

    pub fn zero(bits: u32) -> Self {
        Enclosure::from_i64_bits(0, bits)
    }

    pub fn one(bits: u32) -> Self {
        Enclosure::from_i64_bits(1, bits)
    }

    /// Enclosure spanning two certified bounds (drops exactness).
    pub fn from_bounds(lo: &Enclosure, hi: &Enclosure) -> Self {
        let bits = lo.bits.max(hi.bits);
        Enclosure::from_parts(lo.lo.clone(), hi.hi.clone(), bits, None)
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn exact_value(&self) -> Option<&BigRational> {
        self.exact.as_ref()
    }

    pub fn is_exact(&self) -> bool {
        self.exact.is_some()
    }

    pub fn lo_float(&self) -> &BigFloat {
        &self.lo
    }

    pub fn hi_float(&self) -> &BigFloat {
        &self.hi
    }

    /// Exact rational lower/upper bounds of the enclosure.
    pub fn lo_rational(&self) -> BigRational {
        match &self.exact {
            Some(q) => q.clone(),
            None => float_to_rational(&self.lo),
        }
    }

    pub fn hi_rational(&self) -> BigRational {
        match &self.exact {
            Some(q) => q.clone(),
            None => float_to_rational(&self.hi),
        }
    }

    /// Re-rounds to a different working precision (exactness survives).
    pub fn at_bits(&self, bits: u32) -> Self {
        if let Some(q) = &self.exact {
            return Enclosure::from_rational_bits(q.clone(), bits);
        }
        let mut lo = self.lo.clone();
        let mut hi = self.hi.clone();
        lo.set_precision(bits as usize, rm_down()).expect("precision");
        hi.set_precision(bits as usize, rm_up()).expect("precision");
        Enclosure::from_parts(lo, hi, bits, None)
    }

    /// Drops the exact tag, forcing interval representation.
    pub fn as_interval(&self) -> Self {
        Enclosure::from_parts(self.lo.clone(), self.hi.clone(), self.bits, None)
    }

    fn keep_exact(q: &BigRational) -> bool {
        q.numer().magnitude().bits() + q.denom().magnitude().bits() <= EXACT_BIT_CAP
    }

    fn wrap_exact(q: BigRational, bits: u32) -> Self {
        if Enclosure::keep_exact(&q) {
            Enclosure::from_rational_bits(q, bits)
        } else {
            Enclosure::from_rational_bits(q, bits).as_interval()
        }
    }

    pub fn add(&self, other: &Enclosure) -> Enclosure {
        let bits = self.bits.max(other.bits);
        if let (Some(a), Some(b)) = (&self.exact, &other.exact) {
            return Enclosure::wrap_exact(a + b, bits);
        }
        let lo = self.lo.add(&other.lo, bits as usize, rm_down());
        let hi = self.hi.add(&other.hi, bits as usize, rm_up());
        Enclosure::from_parts(lo, hi, bits, None)
    }

    pub fn sub(&self, other: &Enclosure) -> Enclosure {
        let bits = self.bits.max(other.bits);
        if let (Some(a), Some(b)) = (&self.exact, &other.exact) {
            return Enclosure::wrap_exact(a - b, bits);
        }
        let lo = self.lo.sub(&other.hi, bits as usize, rm_down());
        let hi = self.hi.sub(&other.lo, bits as usize, rm_up());
        Enclosure::from_parts(lo, hi, bits, None)
    }

    pub fn neg(&self) -> Enclosure {
        let exact = self.exact.as_ref().map(|q| -q.clone());
        Enclosure::from_parts(self.hi.neg(), self.lo.neg(), self.bits, exact)
    }

    pub fn mul(&self, other: &Enclosure) -> Enclosure {
        let bits = self.bits.max(other.bits);
        if let (Some(a), Some(b)) = (&self.exact, &other.exact) {
            return Enclosure::wrap_exact(a * b, bits);
        }
        let p = bits as usize;
        // Directed products of all endpoint pairs; min for lo, max for hi.
        let cands_down = [
            self.lo.mul(&other.lo, p, rm_down()),
            self.lo.mul(&other.hi, p, rm_down()),
            self.hi.mul(&other.lo, p, rm_down()),
            self.hi.mul(&other.hi, p, rm_down()),
        ];
        let cands_up = [
            self.lo.mul(&other.lo, p, rm_up()),
            self.lo.mul(&other.hi, p, rm_up()),
            self.hi.mul(&other.lo, p, rm_up()),
            self.hi.mul(&other.hi, p, rm_up()),
        ];
        let mut lo = cands_down[0].clone();
        for c in &cands_down[1..] {
            lo = lo.min(c);
        }
        let mut hi = cands_up[0].clone();
        for c in &cands_up[1..] {
            hi = hi.max(c);
        }
        Enclosure::from_parts(lo, hi, bits, None)
    }

    pub fn div(&self, other: &Enclosure) -> Result<Enclosure> {
        let bits = self.bits.max(other.bits);
        if other.contains_zero() {
            return Err(Error::NumericDomain(format!(
                "division by enclosure spanning zero: {other}"
            )));
        }
        if let (Some(a), Some(b)) = (&self.exact, &other.exact) {
            return Ok(Enclosure::wrap_exact(a / b, bits));
        }
        let p = bits as usize;
        let cands_down = [
            self.lo.div(&other.lo, p, rm_down()),
            self.lo.div(&other.hi, p, rm_down()),
            self.hi.div(&other.lo, p, rm_down()),
            self.hi.div(&other.hi, p, rm_down()),
        ];
        let cands_up = [
            self.lo.div(&other.lo, p, rm_up()),
            self.lo.div(&other.hi, p, rm_up()),
            self.hi.div(&other.lo, p, rm_up()),
            self.hi.div(&other.hi, p, rm_up()),
        ];
        let mut lo = cands_down[0].clone();
        for c in &cands_down[1..] {
            lo = lo.min(c);
        }
        let mut hi = cands_up[0].clone();
        for c in &cands_up[1..] {
            hi = hi.max(c);
        }
        Ok(Enclosure::from_parts(lo, hi, bits, None))
    }

    pub fn recip(&self) -> Result<Enclosure> {
        Enclosure::one(self.bits).div(self)
    }

    pub fn contains_zero(&self) -> bool {
        let zero = BigFloat::from_i64(0, 64);
        float_le(&self.lo, &zero) && float_le(&zero, &self.hi)
    }

    pub fn is_positive(&self) -> bool {
        let zero = BigFloat::from_i64(0, 64);
        float_lt(&zero, &self.lo)
    }

    /// Integer power. Negative exponents require the base to exclude zero.
    pub fn pow_i64(&self, k: i64) -> Result<Enclosure> {
        if k < 0 {
            return self.pow_i64(-k)?.recip();
        }
        let bits = self.bits;
        if let Some(q) = &self.exact {
            let p = num_traits::pow::pow(q.clone(), k as usize);
            return Ok(Enclosure::wrap_exact(p, bits));
        }
        // Square-and-multiply on intervals; multiplication handles signs.
        let mut result = Enclosure::one(bits);
        let mut base = self.clone();
        let mut e = k as u64;
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul(&base);
            }
            base = base.mul(&base);
            e >>= 1;
        }
        Ok(result)
    }

    pub fn sqrt(&self) -> Result<Enclosure> {
        if self.lo.is_negative() {
            return Err(Error::NumericDomain(format!("sqrt of {self}")));
        }
        let bits = self.bits;
        if let Some(q) = &self.exact {
            if let Some(root) = rational_sqrt_exact(q) {
                return Ok(Enclosure::wrap_exact(root, bits));
            }
        }
        let p = bits as usize;
        let lo = chk(self.lo.sqrt(p, rm_down()), "sqrt")?;
        let hi = chk(self.hi.sqrt(p, rm_up()), "sqrt")?;
        Ok(Enclosure::from_parts(lo, hi, bits, None))
    }

    pub fn ln(&self) -> Result<Enclosure> {
        if !self.is_positive() {
            return Err(Error::NumericDomain(format!("log of {self}")));
        }
        let bits = self.bits;
        if let Some(q) = &self.exact {
            if q.is_one() {
                return Ok(Enclosure::zero(bits));
            }
        }
        let p = bits as usize;
        let lo = with_consts(|cc| self.lo.ln(p, rm_down(), cc));
        let hi = with_consts(|cc| self.hi.ln(p, rm_up(), cc));
        Ok(Enclosure::from_parts(chk(lo, "ln")?, chk(hi, "ln")?, bits, None))
    }

    pub fn exp(&self) -> Result<Enclosure> {
        let bits = self.bits;
        if let Some(q) = &self.exact {
            if q.is_zero() {
                return Ok(Enclosure::one(bits));
            }
        }
        let p = bits as usize;
        let lo = with_consts(|cc| self.lo.exp(p, rm_down(), cc));
        let hi = with_consts(|cc| self.hi.exp(p, rm_up(), cc));
        Ok(Enclosure::from_parts(chk(lo, "exp")?, chk(hi, "exp")?, bits, None))
    }

    /// Certified cosine; sound on any argument width (falls back to [-1, 1]
    /// when the interval is too wide to resolve monotonicity).
    pub fn cos(&self) -> Result<Enclosure> {
        self.trig(true)
    }

    pub fn sin(&self) -> Result<Enclosure> {
        self.trig(false)
    }

    fn trig(&self, is_cos: bool) -> Result<Enclosure> {
        let bits = self.bits;
        let p = bits as usize;
        // If the argument interval is wider than 2^-8, give up on
        // monotonicity analysis and return the trivial bound.
        let wide = {
            let w = self.width_upper();
            !w.is_zero() && matches!(w.exponent(), Some(e) if e > -8)
        };
        if wide {
            return Ok(Enclosure::from_parts(
                BigFloat::from_i64(-1, p),
                BigFloat::from_i64(1, p),
                bits,
                None,
            ));
        }
        // Evaluate at both endpoints with both roundings; the true image of
        // a short interval is within [min-eps, max+eps] where eps bounds the
        // derivative (|f'| <= 1) times the width. Add the width outward.
        let f = |x: &BigFloat, rm: RoundingMode| -> BigFloat {
            with_consts(|cc| if is_cos { x.cos(p, rm, cc) } else { x.sin(p, rm, cc) })
        };
        let w = self.width_upper();
        let candidates_lo = [f(&self.lo, rm_down()), f(&self.hi, rm_down())];
        let candidates_hi = [f(&self.lo, rm_up()), f(&self.hi, rm_up())];
        let mut lo = candidates_lo[0].min(&candidates_lo[1]);
        let mut hi = candidates_hi[0].max(&candidates_hi[1]);
        lo = lo.sub(&w, p, rm_down());
        hi = hi.add(&w, p, rm_up());
        // clamp to [-1, 1]
        let one = BigFloat::from_i64(1, p);
        let m_one = BigFloat::from_i64(-1, p);
        lo = lo.max(&m_one);
        hi = hi.min(&one);
        Ok(Enclosure::from_parts(chk(lo, "trig")?, chk(hi, "trig")?, bits, None))
    }

    /// Builds an enclosure directly from two floats (must satisfy lo <= hi).
    pub fn from_floats(lo: BigFloat, hi: BigFloat, bits: u32) -> Result<Enclosure> {
        if lo.is_nan() || hi.is_nan() || !float_le(&lo, &hi) {
            return Err(Error::NumericDomain("from_floats: unordered bounds".into()));
        }
        Ok(Enclosure::from_parts(lo, hi, bits, None))
    }

    /// Raises a certified-positive enclosure to an exact rational power.
    /// Integer and half-integer exponents take direct routes; the general
    /// case goes through `exp(q * ln(self))`.
    pub fn pow_rat(&self, q: &BigRational) -> Result<Enclosure> {
        if q.is_integer() {
            let k = q.to_integer().to_i64().ok_or_else(|| {
                Error::InvalidInput("integer exponent out of i64 range".into())
            })?;
            return self.pow_i64(k);
        }
        if !self.is_positive() {
            return Err(Error::NumericDomain(format!(
                "rational power of non-positive enclosure {self}"
            )));
        }
        let two = BigInt::from(2);
        if q.denom() == &two {
            // q = k/2 with k odd
            let k = q.numer().to_i64().ok_or_else(|| {
                Error::InvalidInput("half-integer exponent out of range".into())
            })?;
            let whole = k.div_euclid(2);
            let base = self.pow_i64(whole)?;
            return Ok(base.mul(&self.sqrt()?));
        }
        let expo = Enclosure::from_rational_bits(q.clone(), self.bits);
        self.ln()?.mul(&expo).exp()
    }

    /// Raises to an enclosure power (base must be certified positive).
    pub fn pow_enclosure(&self, e: &Enclosure) -> Result<Enclosure> {
        if let Some(q) = &e.exact {
            return self.pow_rat(q);
        }
        if !self.is_positive() {
            return Err(Error::NumericDomain(format!(
                "enclosure power of non-positive base {self}"
            )));
        }
        self.ln()?.mul(e).exp()
    }

    fn geometric(&self, terms: GeomTerms) -> Result<Enclosure> {
        let bits = self.bits;
        match terms {
            GeomTerms::Infinite => {
                // 1/(1-x); requires x.hi < 1.
                let one = Enclosure::one(bits);
                let denom = one.sub(self);
                if !denom.is_positive() {
                    return Err(Error::HorizonTooSmall {
                        horizon: 0,
                        reason: format!("geometric series ratio not certified < 1: {self}"),
                    });
                }
                one.div(&denom)
            }
            GeomTerms::Finite(t) => {
                if let Some(q) = &self.exact {
                    if q.is_one() {
                        return Ok(Enclosure::from_u64_bits(t + 1, bits));
                    }
                    let num = BigRational::one() - num_traits::pow::pow(q.clone(), (t + 1) as usize);
                    let den = BigRational::one() - q.clone();
                    return Ok(Enclosure::wrap_exact(num / den, bits));
                }
                // Sum of x^k is monotone increasing in x for x >= 0.
                if self.lo.is_negative() {
                    return Err(Error::NumericDomain(format!(
                        "finite geometric sum of possibly-negative ratio {self}"
                    )));
                }
                let eval = |x: &Enclosure| -> Result<Enclosure> {
                    let one = Enclosure::one(bits);
                    let num = one.sub(&x.pow_i64(t as i64 + 1)?);
                    let den = one.sub(x);
                    if !den.is_positive() {
                        return Err(Error::NumericDomain(
                            "geometric ratio not certified < 1".into(),
                        ));
                    }
                    num.div(&den)
                };
                let lo_pt = Enclosure::from_parts(self.lo.clone(), self.lo.clone(), bits, None);
                let hi_pt = Enclosure::from_parts(self.hi.clone(), self.hi.clone(), bits, None);
                let a = eval(&lo_pt)?;
                let b = eval(&hi_pt)?;
                Ok(Enclosure::from_parts(a.lo, b.hi, bits, None))
            }
        }
    }

    /// Certified enclosure of `Σ_{k=0}^{terms} self^k`.
    pub fn geometric_sum(&self, terms: u64) -> Result<Enclosure> {
        self.geometric(GeomTerms::Finite(terms))
    }

    /// Certified enclosure of `Σ_{k=0}^{∞} self^k = 1/(1-self)`; requires
    /// `self.hi < 1`.
    pub fn geometric_sum_inf(&self) -> Result<Enclosure> {
        self.geometric(GeomTerms::Infinite)
    }

    /// The spec's three-valued order test: `True` when `self < other` is
    /// certified, `False` when `self > other` is certified, else `Unknown`.
    pub fn compare(&self, other: &Enclosure) -> Verdict {
        if float_lt(&self.hi, &other.lo) {
            return Verdict::True;
        }
        if float_lt(&other.hi, &self.lo) {
            return Verdict::False;
        }
        if let (Some(a), Some(b)) = (&self.exact, &other.exact) {
            if a < b {
                return Verdict::True;
            }
            if a > b {
                return Verdict::False;
            }
        }
        Verdict::Unknown
    }

    /// Certified `self < other`.
    pub fn certified_lt(&self, other: &Enclosure) -> Verdict {
        self.compare(other)
    }

    /// Certified `self <= other` (exact ties resolve to `True`).
    pub fn certified_le(&self, other: &Enclosure) -> Verdict {
        if float_le(&self.hi, &other.lo) {
            return Verdict::True;
        }
        if float_lt(&other.hi, &self.lo) {
            return Verdict::False;
        }
        if let (Some(a), Some(b)) = (&self.exact, &other.exact) {
            return if a <= b { Verdict::True } else { Verdict::False };
        }
        Verdict::Unknown
    }

    pub fn certified_gt(&self, other: &Enclosure) -> Verdict {
        other.certified_lt(self)
    }

    pub fn certified_ge(&self, other: &Enclosure) -> Verdict {
        other.certified_le(self)
    }

    /// Componentwise max: encloses `max(x, y)` for `x ∈ self`, `y ∈ other`.
    pub fn max_enc(&self, other: &Enclosure) -> Enclosure {
        let bits = self.bits.max(other.bits);
        let exact = match (&self.exact, &other.exact) {
            (Some(a), Some(b)) => Some(a.max(b).clone()),
            _ => None,
        };
        Enclosure::from_parts(
            self.lo.max(&other.lo),
            self.hi.max(&other.hi),
            bits,
            exact,
        )
    }

    pub fn min_enc(&self, other: &Enclosure) -> Enclosure {
        let bits = self.bits.max(other.bits);
        let exact = match (&self.exact, &other.exact) {
            (Some(a), Some(b)) => Some(a.min(b).clone()),
            _ => None,
        };
        Enclosure::from_parts(
            self.lo.min(&other.lo),
            self.hi.min(&other.hi),
            bits,
            exact,
        )
    }

    /// Upper bound on the width `hi - lo`.
    pub fn width_upper(&self) -> BigFloat {
        self.hi.sub(&self.lo, self.bits as usize, rm_up())
    }

    /// True when the width is certified at most `2^-k`.
    pub fn width_within_pow2(&self, k: i32) -> bool {
        let w = self.width_upper();
        if w.is_zero() {
            return true;
        }
        if w.is_negative() {
            return true;
        }
        match w.exponent() {
            Some(e) => e <= -k,
            None => false,
        }
    }

    /// Does the enclosure provably contain the rational `q`?
    /// (True means certified containment of q between the outward bounds.)
    pub fn contains_rational(&self, q: &BigRational) -> bool {
        if let Some(e) = &self.exact {
            return e == q;
        }
        let lo = float_to_rational(&self.lo);
        let hi = float_to_rational(&self.hi);
        &lo <= q && q <= &hi
    }

    /// Decimal string of the lower bound, rounded down, `digits` significant.
    pub fn dec_lo(&self, digits: usize) -> String {
        format_float(&self.lo, digits, rm_down())
    }

    /// Decimal string of an upper bound on the width.
    pub fn dec_width(&self) -> String {
        let w = self.width_upper();
        if w.is_zero() {
            return "0".into();
        }
        format_float(&w, 3, rm_up())
    }

    /// Decimal string of the upper bound, rounded up.
    pub fn dec_hi(&self, digits: usize) -> String {
        format_float(&self.hi, digits, rm_up())
    }

    /// Certified floor/ceiling: `Some(n)` when every point of the enclosure
    /// has the same floor (resp. ceiling).
    pub fn floor_certain(&self) -> Option<BigInt> {
        let lo = self.lo_rational().floor().to_integer();
        let hi = self.hi_rational().floor().to_integer();
        if lo == hi {
            Some(lo)
        } else {
            None
        }
    }

    pub fn ceil_certain(&self) -> Option<BigInt> {
        let lo = self.lo_rational().ceil().to_integer();
        let hi = self.hi_rational().ceil().to_integer();
        if lo == hi {
            Some(lo)
        } else {
            None
        }
    }

    /// Conservative floor: the floor of the lower bound (certainly ≤ the
    /// floor of the exact value).
    pub fn floor_lower(&self) -> BigInt {
        self.lo_rational().floor().to_integer()
    }
}

fn format_float(f: &BigFloat, digits: usize, rm: RoundingMode) -> String {
    let mut x = f.clone();
    // Reduce precision so the decimal printout stays short; keep a couple of
    // guard words so the directed rounding below stays outward.
    let target_bits = ((digits as f64 * 3.33) as usize + 16).max(32);
    if x.mantissa_max_bit_len().unwrap_or(0) > target_bits {
        let _ = x.set_precision(target_bits, rm);
    }
    with_consts(|cc| x.format(Radix::Dec, rm, cc)).unwrap_or_else(|_| "<nan>".into())
}

fn rational_sqrt_exact(q: &BigRational) -> Option<BigRational> {
    if q.is_negative() {
        return None;
    }
    let n = q.numer().magnitude();
    let d = q.denom().magnitude();
    let ns = n.sqrt();
    let ds = d.sqrt();
    if &(&ns * &ns) == n && &(&ds * &ds) == d {
        Some(BigRational::new(BigInt::from(ns), BigInt::from(ds)))
    } else {
        None
    }
}

/// Directed bounds of π at the given precision.
pub fn pi_bounds(bits: u32) -> (BigFloat, BigFloat) {
    with_consts(|cc| (cc.pi(bits as usize, rm_down()), cc.pi(bits as usize, rm_up())))
}

/// Enclosure of `base^exponent` for a positive integer base. Width-zero when
/// the exponent is an integer small enough to stay exact.
pub fn int_pow(base: &BigUint, exponent: &BigRational, bits: u32) -> Result<Enclosure> {
    if base.is_zero() {
        return Err(Error::InvalidInput("integer power of zero base".into()));
    }
    if base.is_one() {
        return Ok(Enclosure::one(bits));
    }
    if exponent.is_integer() {
        let k = exponent
            .to_integer()
            .to_i64()
            .ok_or_else(|| Error::InvalidInput("exponent out of range".into()))?;
        let mag = num_traits::pow::pow(
            BigRational::from_integer(BigInt::from(base.clone())),
            k.unsigned_abs() as usize,
        );
        let val = if k < 0 { mag.recip() } else { mag };
        return Ok(Enclosure::wrap_exact(val, bits));
    }
    let b = Enclosure::from_rational_bits(
        BigRational::from_integer(BigInt::from(base.clone())),
        bits,
    );
    b.pow_rat(exponent)
}

/// Enclosure of `base^exponent` for positive integer base and enclosure
/// exponent.
pub fn int_pow_enclosure(base: &BigUint, exponent: &Enclosure, bits: u32) -> Result<Enclosure> {
    if base.is_zero() {
        return Err(Error::InvalidInput("integer power of zero base".into()));
    }
    if base.is_one() {
        return Ok(Enclosure::one(bits));
    }
    let b = Enclosure::from_rational_bits(
        BigRational::from_integer(BigInt::from(base.clone())),
        bits,
    );
    b.pow_enclosure(exponent)
}

/// Fast path for `n^{-r}`: exact for integer r, sqrt-based for half-integer
/// r, general `exp(ln)` otherwise.
pub fn inv_int_pow(n: u64, r: &BigRational, bits: u32) -> Result<Enclosure> {
    int_pow(&BigUint::from(n), &-r.clone(), bits)
}

/// JSON form of an enclosure: decimal strings plus the working precision.
#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
pub struct EnclosureJson {
    pub lo: String,
    pub hi: String,
    pub precision_bits: u32,
}

impl Enclosure {
    pub fn to_json(&self) -> EnclosureJson {
        EnclosureJson {
            lo: self.dec_lo(40),
            hi: self.dec_hi(40),
            precision_bits: self.bits,
        }
    }
}

/// Parses an exact rational from a decimal string ("2", "1.5", "-0.25") or a
/// fraction ("3/2").
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = |_| Error::InvalidInput(format!("cannot parse rational from {s:?}"));
    if let Some((a, b)) = s.split_once('/') {
        let num: BigInt = a.trim().parse().map_err(bad)?;
        let den: BigInt = b.trim().parse().map_err(bad)?;
        if den.is_zero() {
            return Err(Error::InvalidInput("zero denominator".into()));
        }
        return Ok(BigRational::new(num, den));
    }
    if let Some((int_part, frac_part)) = s.split_once('.') {
        let negative = int_part.trim_start().starts_with('-');
        let int_val: BigInt = if int_part.is_empty() || int_part == "-" {
            BigInt::zero()
        } else {
            int_part.parse().map_err(bad)?
        };
        if frac_part.is_empty() || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
            return Err(Error::InvalidInput(format!(
                "cannot parse rational from {s:?}"
            )));
        }
        let frac_val: BigInt = frac_part.parse().map_err(bad)?;
        let scale = num_traits::pow::pow(BigInt::from(10), frac_part.len());
        let mag = int_val.abs() * &scale + frac_val;
        let signed = if negative { -mag } else { mag };
        return Ok(BigRational::new(signed, scale));
    }
    let n: BigInt = s.parse().map_err(bad)?;
    Ok(BigRational::from_integer(n))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn exact_ring_ops_stay_width_zero() {
        let a = Enclosure::from_rational(rat(1, 3));
        let b = Enclosure::from_rational(rat(2, 7));
        let c = a.add(&b).mul(&a).div(&b).unwrap().sub(&a);
        let expected = (rat(1, 3) + rat(2, 7)) * rat(1, 3) / rat(2, 7) - rat(1, 3);
        assert_eq!(c.exact_value(), Some(&expected));
        assert!(c.contains_rational(&expected));
    }

    #[test]
    fn int_pow_identity_cases() {
        let one = int_pow(&BigUint::from(2u32), &rat(0, 1), 64).unwrap();
        assert_eq!(one.exact_value(), Some(&rat(1, 1)));
        let unit = int_pow(&BigUint::from(1u32), &rat(-37, 10), 64).unwrap();
        assert!(unit.contains_rational(&rat(1, 1)));
        assert!(!unit.contains_rational(&rat(2, 1)));
    }

    #[test]
    fn int_pow_exact_inverse_square() {
        let v = int_pow(&BigUint::from(3u32), &rat(-2, 1), 64).unwrap();
        assert_eq!(v.exact_value(), Some(&rat(1, 9)));
        assert!(v.width_within_pow2(50));
    }

    #[test]
    fn int_pow_irrational_contains_reference() {
        // 3^(-3/2) = 1/(3*sqrt(3))
        let v = int_pow(&BigUint::from(3u32), &rat(-3, 2), 128).unwrap();
        assert!(!v.is_exact());
        let hi = v.hi_rational();
        let lo = v.lo_rational();
        // (3*sqrt 3)^-1 squared is 1/27; check lo^2 <= 1/27 <= hi^2.
        assert!(lo.clone() * lo <= rat(1, 27));
        assert!(hi.clone() * hi >= rat(1, 27));
        assert!(v.width_within_pow2(100));
    }

    #[test]
    fn compare_verdicts() {
        let mk = |lo: i64, hi: i64| {
            Enclosure::from_bounds(&Enclosure::from_i64_bits(lo, 64), &Enclosure::from_i64_bits(hi, 64))
        };
        assert_eq!(mk(1, 1).compare(&mk(2, 2)), Verdict::True);
        assert_eq!(mk(1, 3).compare(&mk(2, 4)), Verdict::Unknown);
        assert_eq!(mk(5, 6).compare(&mk(1, 2)), Verdict::False);
        // antisymmetry
        assert_eq!(mk(2, 2).compare(&mk(1, 1)), Verdict::False);
    }

    #[test]
    fn exact_tie_breaks_le() {
        let a = Enclosure::from_rational(rat(21, 20));
        let b = Enclosure::from_rational(rat(21, 20));
        assert_eq!(a.certified_le(&b), Verdict::True);
        assert_eq!(a.certified_lt(&b), Verdict::Unknown);
    }

    #[test]
    fn geometric_sums() {
        let half = Enclosure::from_rational(rat(1, 2));
        assert_eq!(half.geometric_sum(1).unwrap().exact_value(), Some(&rat(3, 2)));
        let inf = half.geometric_sum_inf().unwrap();
        assert!(inf.contains_rational(&rat(2, 1)));
        let ninth = int_pow(&BigUint::from(3u32), &rat(-2, 1), 96).unwrap();
        let s = ninth.geometric_sum(2).unwrap();
        assert_eq!(s.exact_value(), Some(&rat(91, 81)));
    }

    #[test]
    fn ln_exp_roundtrip_contains() {
        let x = Enclosure::from_rational(rat(7, 3));
        let y = x.ln().unwrap().exp().unwrap();
        assert!(y.contains_rational(&rat(7, 3)));
        assert!(y.width_within_pow2(100));
    }

    #[test]
    fn monotone_refinement() {
        let coarse = int_pow(&BigUint::from(7u32), &rat(-5, 3), 96).unwrap();
        let fine = int_pow(&BigUint::from(7u32), &rat(-5, 3), 192).unwrap();
        assert!(coarse.lo_rational() <= fine.lo_rational());
        assert!(fine.hi_rational() <= coarse.hi_rational());
    }

    #[test]
    fn parse_rational_forms() {
        assert_eq!(parse_rational("2").unwrap(), rat(2, 1));
        assert_eq!(parse_rational("1.5").unwrap(), rat(3, 2));
        assert_eq!(parse_rational("3/2").unwrap(), rat(3, 2));
        assert_eq!(parse_rational("-0.25").unwrap(), rat(-1, 4));
        assert!(parse_rational("abc").is_err());
    }

    #[test]
    fn float_rational_roundtrip() {
        let q = rat(-355, 113);
        let f = rational_to_float(&q, 128, RoundingMode::Down);
        let back = float_to_rational(&f);
        assert!(back <= q);
        let f2 = rational_to_float(&q, 128, RoundingMode::Up);
        assert!(float_to_rational(&f2) >= q);
        // dyadic rationals convert exactly
        let d = rat(-7, 8);
        let fd = rational_to_float(&d, 64, RoundingMode::Down);
        assert_eq!(float_to_rational(&fd), d);
    }

    #[test]
    fn escalation_reports_ambiguity() {
        let prec = Precision::new(64, 128);
        let res: Result<()> = prec.escalate(|_| {
            Ok(StageOutcome::Retry {
                lhs: "a".into(),
                rhs: "b".into(),
                context: "test".into(),
            })
        });
        match res {
            Err(Error::AmbiguousComparison { bits, .. }) => assert_eq!(bits, 128),
            other => panic!("expected ambiguity, got {other:?}"),
        }
    }
}
