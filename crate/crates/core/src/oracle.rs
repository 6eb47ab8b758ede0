//! Brute-force sampling of divisor-function values, containment checks
//! against computed closures, and scatter-data emission.
//!
//! Sampling is a check, not a source of truth: the exact closure machinery
//! never consumes sampled values. With a small integer exponent and a real
//! character the samples are exact `u128` fractions; otherwise they are
//! outward-rounded double intervals derived from enclosures.

use std::io::Write;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};
use rayon::prelude::*;

use crate::characters::DirichletCharacter;
use crate::closure::ClosureResult;
use crate::error::{Error, Result};
use crate::numberfield::{
    sigma_ideal_complex, FieldSpec, IdealFactorization, NormStream,
};
use crate::primes::Primes;
use crate::rigor::Enclosure;

/// One sampled divisor-function value.
#[derive(Clone, Copy, Debug)]
pub enum SampleValue {
    /// Exact rational (real character, small integer exponent).
    Exact { num: u128, den: u128 },
    /// Certified double bounds.
    Real { lo: f64, hi: f64 },
    /// Certified double bounds per component (complex characters).
    Complex {
        re: (f64, f64),
        im: (f64, f64),
    },
}

impl SampleValue {
    pub fn real_bounds(&self) -> Option<(f64, f64)> {
        match *self {
            SampleValue::Exact { num, den } => {
                let v = num as f64 / den as f64;
                Some((v * (1.0 - 1e-12), v * (1.0 + 1e-12)))
            }
            SampleValue::Real { lo, hi } => Some((lo, hi)),
            SampleValue::Complex { .. } => None,
        }
    }

    pub fn exact(&self) -> Option<BigRational> {
        match *self {
            SampleValue::Exact { num, den } => Some(BigRational::new(
                BigInt::from(num),
                BigInt::from(den),
            )),
            _ => None,
        }
    }
}

/// One sample: the input (an integer for the rationals, an ideal norm
/// otherwise), a divisibility bitmask over the first 32 stream entries, and
/// the value.
#[derive(Clone, Copy, Debug)]
pub struct Sample {
    pub input: u64,
    pub small_prime_mask: u32,
    pub value: SampleValue,
}

/// Complete enumeration of divisor-function values up to a norm bound.
#[derive(Clone, Debug)]
pub struct SampleSet {
    pub max_norm: u64,
    pub samples: Vec<Sample>,
}

/// Divisor-function values for every positive integer (over the rationals)
/// or every integral ideal (general fields) of norm up to `max_norm`.
pub fn sample_image(
    field: &FieldSpec,
    chi: &DirichletCharacter,
    r: &BigRational,
    max_norm: u64,
    primes: &Primes,
) -> Result<SampleSet> {
    if max_norm < 1 {
        return Err(Error::InvalidInput("sampling needs max_norm >= 1".into()));
    }
    let stream = field.norm_stream(max_norm, primes)?;
    match field {
        FieldSpec::Rational => sample_rational(chi, r, max_norm, &stream),
        _ => sample_ideals(field, chi, r, max_norm, &stream),
    }
}

/// Fast path over the rationals: smallest-prime-factor sieve plus memoized
/// prime-power values, multiplicative assembly.
fn sample_rational(
    chi: &DirichletCharacter,
    r: &BigRational,
    max_norm: u64,
    stream: &NormStream,
) -> Result<SampleSet> {
    let n = max_norm as usize;
    let mut spf = vec![0u32; n + 1];
    for i in 2..=n {
        if spf[i] == 0 {
            let mut j = i;
            while j <= n {
                if spf[j] == 0 {
                    spf[j] = i as u32;
                }
                j += i;
            }
        }
    }
    let exact_mode = chi.is_real() && exactly_representable(r, max_norm);
    let mask_primes: Vec<u64> = stream
        .entries()
        .iter()
        .take(32)
        .map(|e| e.norm)
        .collect();
    // memoized prime-power values keyed by p^a
    let mut memo: std::collections::HashMap<u64, SampleValue> = std::collections::HashMap::new();
    let mut samples = Vec::with_capacity(n);
    let r_int = r.to_integer().to_i64().unwrap_or(0);
    for m in 1..=max_norm {
        let mut rest = m;
        let mut value = if exact_mode {
            SampleValue::Exact { num: 1, den: 1 }
        } else if chi.is_real() {
            SampleValue::Real { lo: 1.0, hi: 1.0 }
        } else {
            SampleValue::Complex {
                re: (1.0, 1.0),
                im: (0.0, 0.0),
            }
        };
        while rest > 1 {
            let p = spf[rest as usize] as u64;
            let mut pk = 1u64;
            while rest % p == 0 {
                rest /= p;
                pk *= p;
            }
            let pv = match memo.get(&pk) {
                Some(v) => *v,
                None => {
                    let v = prime_power_value(p, pk, chi, r, r_int, exact_mode)?;
                    memo.insert(pk, v);
                    v
                }
            };
            value = mul_values(value, pv)?;
        }
        let mut mask = 0u32;
        for (b, &q) in mask_primes.iter().enumerate() {
            if m % q == 0 {
                mask |= 1 << b;
            }
        }
        samples.push(Sample {
            input: m,
            small_prime_mask: mask,
            value,
        });
    }
    Ok(SampleSet { max_norm, samples })
}

fn exactly_representable(r: &BigRational, max_norm: u64) -> bool {
    if !r.is_integer() || r.is_negative() {
        return false;
    }
    match r.to_integer().to_u32() {
        // num < 2 * n^r must fit u128 with headroom
        Some(k) => (max_norm as f64).powi(k as i32) < 1.0e36,
        None => false,
    }
}

fn prime_power_value(
    p: u64,
    pk: u64,
    chi: &DirichletCharacter,
    r: &BigRational,
    r_int: i64,
    exact_mode: bool,
) -> Result<SampleValue> {
    let e = pk.ilog(p);
    if exact_mode {
        // Σ_{a <= e} sign^a p^{-ra} = (num, den) with den = p^{re}
        let sign = chi.eval_real(p as u128)?;
        let pr = (p as u128).pow(r_int as u32);
        let mut den: u128 = 1;
        for _ in 0..e {
            den = den
                .checked_mul(pr)
                .ok_or_else(|| Error::NumericDomain("sample denominator overflow".into()))?;
        }
        let mut num: u128 = 0;
        let mut term = den; // p^{-r*0} scaled by den
        for a in 0..=e {
            let signed = match sign {
                0 => a == 0,
                1 => true,
                -1 => a % 2 == 0,
                _ => unreachable!(),
            };
            if sign == -1 && a % 2 == 1 {
                num = num
                    .checked_sub(term)
                    .ok_or_else(|| Error::NumericDomain("sample underflow".into()))?;
            } else if signed {
                num = num
                    .checked_add(term)
                    .ok_or_else(|| Error::NumericDomain("sample overflow".into()))?;
            }
            term /= pr;
        }
        Ok(SampleValue::Exact { num, den })
    } else if chi.is_real() {
        let sign = chi.eval_real(p as u128)?;
        let enc = crate::numberfield::sigma_prime_power(p, sign, r, Some(e), 64)?;
        Ok(SampleValue::Real {
            lo: f64_lo(&enc),
            hi: f64_hi(&enc),
        })
    } else {
        // complex character: per-power complex value
        let x = crate::rigor::inv_int_pow(p, r, 64)?;
        let mut re = Enclosure::zero(64);
        let mut im = Enclosure::zero(64);
        for a in 0..=e {
            let w = x.pow_i64(a as i64)?;
            match chi.eval((p as u128).pow(a)) {
                crate::characters::CharValue::Zero => {}
                crate::characters::CharValue::Root { num, den } => {
                    let (c, s) = crate::numberfield::root_of_unity(num, den, 64)?;
                    re = re.add(&w.mul(&c));
                    im = im.add(&w.mul(&s));
                }
            }
        }
        Ok(SampleValue::Complex {
            re: (f64_lo(&re), f64_hi(&re)),
            im: (f64_lo(&im), f64_hi(&im)),
        })
    }
}

fn mul_values(a: SampleValue, b: SampleValue) -> Result<SampleValue> {
    Ok(match (a, b) {
        (SampleValue::Exact { num: n1, den: d1 }, SampleValue::Exact { num: n2, den: d2 }) => {
            let num = n1
                .checked_mul(n2)
                .ok_or_else(|| Error::NumericDomain("sample numerator overflow".into()))?;
            let den = d1
                .checked_mul(d2)
                .ok_or_else(|| Error::NumericDomain("sample denominator overflow".into()))?;
            SampleValue::Exact { num, den }
        }
        (SampleValue::Real { lo: a1, hi: b1 }, SampleValue::Real { lo: a2, hi: b2 }) => {
            SampleValue::Real {
                lo: widen_down(a1 * a2),
                hi: widen_up(b1 * b2),
            }
        }
        (
            SampleValue::Complex { re: r1, im: i1 },
            SampleValue::Complex { re: r2, im: i2 },
        ) => {
            // (r1 + i1 i)(r2 + i2 i) with interval endpoints
            let mul = |x: (f64, f64), y: (f64, f64)| -> (f64, f64) {
                let c = [x.0 * y.0, x.0 * y.1, x.1 * y.0, x.1 * y.1];
                (
                    widen_down(c.iter().cloned().fold(f64::INFINITY, f64::min)),
                    widen_up(c.iter().cloned().fold(f64::NEG_INFINITY, f64::max)),
                )
            };
            let sub = |x: (f64, f64), y: (f64, f64)| (widen_down(x.0 - y.1), widen_up(x.1 - y.0));
            let add = |x: (f64, f64), y: (f64, f64)| (widen_down(x.0 + y.0), widen_up(x.1 + y.1));
            SampleValue::Complex {
                re: sub(mul(r1, r2), mul(i1, i2)),
                im: add(mul(r1, i2), mul(i1, r2)),
            }
        }
        (SampleValue::Exact { num, den }, o @ SampleValue::Complex { .. })
        | (o @ SampleValue::Complex { .. }, SampleValue::Exact { num, den }) => {
            let v = num as f64 / den as f64;
            let x = SampleValue::Complex {
                re: (widen_down(v), widen_up(v)),
                im: (0.0, 0.0),
            };
            mul_values(x, o)?
        }
        (SampleValue::Exact { num, den }, o) | (o, SampleValue::Exact { num, den }) => {
            let v = num as f64 / den as f64;
            mul_values(
                SampleValue::Real {
                    lo: widen_down(v),
                    hi: widen_up(v),
                },
                o,
            )?
        }
        (SampleValue::Real { .. }, SampleValue::Complex { .. })
        | (SampleValue::Complex { .. }, SampleValue::Real { .. }) => {
            return Err(Error::NumericDomain(
                "mixed real/complex sample product".into(),
            ))
        }
    })
}

fn widen_down(x: f64) -> f64 {
    // two ulps of slack absorb the rounding of the preceding operation
    let y = f64::from_bits(x.to_bits().wrapping_sub(2));
    if x > 0.0 && y.is_finite() {
        y
    } else {
        x - x.abs() * 1e-16 - f64::MIN_POSITIVE
    }
}

fn widen_up(x: f64) -> f64 {
    let y = f64::from_bits(x.to_bits().wrapping_add(2));
    if x > 0.0 && y.is_finite() {
        y
    } else {
        x + x.abs() * 1e-16 + f64::MIN_POSITIVE
    }
}

fn f64_lo(e: &Enclosure) -> f64 {
    widen_down(
        e.lo_rational()
            .to_f64()
            .unwrap_or(f64::NEG_INFINITY),
    )
}

fn f64_hi(e: &Enclosure) -> f64 {
    widen_up(e.hi_rational().to_f64().unwrap_or(f64::INFINITY))
}

/// Ideal enumeration for general fields: depth-first over the stream with a
/// norm budget.
fn sample_ideals(
    field: &FieldSpec,
    chi: &DirichletCharacter,
    r: &BigRational,
    max_norm: u64,
    stream: &NormStream,
) -> Result<SampleSet> {
    let _ = field;
    let mut samples = Vec::new();
    let mut factors: Vec<(usize, u32)> = Vec::new();
    let exact_mode = chi.is_real() && exactly_representable(r, max_norm);
    let r_int = r.to_integer().to_i64().unwrap_or(0);
    let mut memo: std::collections::HashMap<(u64, u32), SampleValue> =
        std::collections::HashMap::new();
    dfs_ideals(
        stream,
        chi,
        r,
        r_int,
        exact_mode,
        max_norm,
        0,
        1,
        &mut factors,
        &mut memo,
        &mut samples,
    )?;
    samples.sort_by_key(|s| s.input);
    Ok(SampleSet { max_norm, samples })
}

#[allow(clippy::too_many_arguments)]
fn dfs_ideals(
    stream: &NormStream,
    chi: &DirichletCharacter,
    r: &BigRational,
    r_int: i64,
    exact_mode: bool,
    max_norm: u64,
    start: usize,
    norm_acc: u64,
    factors: &mut Vec<(usize, u32)>,
    memo: &mut std::collections::HashMap<(u64, u32), SampleValue>,
    samples: &mut Vec<Sample>,
) -> Result<()> {
    // emit the current ideal
    let mut value = if exact_mode {
        SampleValue::Exact { num: 1, den: 1 }
    } else if chi.is_real() {
        SampleValue::Real { lo: 1.0, hi: 1.0 }
    } else {
        SampleValue::Complex {
            re: (1.0, 1.0),
            im: (0.0, 0.0),
        }
    };
    for &(k, e) in factors.iter() {
        let norm = stream.entries()[k].norm;
        let key = (norm, e);
        let pv = match memo.get(&key) {
            Some(v) => *v,
            None => {
                let v = ideal_prime_power_value(stream, k, e, chi, r, r_int, exact_mode)?;
                memo.insert(key, v);
                v
            }
        };
        value = mul_values(value, pv)?;
    }
    let mut mask = 0u32;
    for &(k, _) in factors.iter() {
        if k < 32 {
            mask |= 1 << k;
        }
    }
    samples.push(Sample {
        input: norm_acc,
        small_prime_mask: mask,
        value,
    });
    for k in start..stream.len() {
        let norm = stream.entries()[k].norm;
        let Some(mut acc) = norm_acc.checked_mul(norm) else {
            break;
        };
        if acc > max_norm {
            break;
        }
        let mut e = 1u32;
        loop {
            factors.push((k, e));
            dfs_ideals(
                stream, chi, r, r_int, exact_mode, max_norm, k + 1, acc, factors, memo, samples,
            )?;
            factors.pop();
            acc = match acc.checked_mul(norm) {
                Some(v) if v <= max_norm => v,
                _ => break,
            };
            e += 1;
        }
    }
    Ok(())
}

fn ideal_prime_power_value(
    stream: &NormStream,
    k: usize,
    e: u32,
    chi: &DirichletCharacter,
    r: &BigRational,
    r_int: i64,
    exact_mode: bool,
) -> Result<SampleValue> {
    let norm = stream.entries()[k].norm;
    if exact_mode {
        let sign = chi.eval_real(norm as u128)?;
        let nr = (norm as u128).pow(r_int as u32);
        let mut den: u128 = 1;
        for _ in 0..e {
            den = den
                .checked_mul(nr)
                .ok_or_else(|| Error::NumericDomain("sample denominator overflow".into()))?;
        }
        let mut num: u128 = 0;
        let mut term = den;
        for a in 0..=e {
            match sign {
                0 => {
                    if a == 0 {
                        num += term;
                    }
                }
                1 => num += term,
                -1 => {
                    if a % 2 == 0 {
                        num += term;
                    } else {
                        num -= term;
                    }
                }
                _ => unreachable!(),
            }
            term /= nr;
        }
        Ok(SampleValue::Exact { num, den })
    } else if chi.is_real() {
        let sign = chi.eval_real(norm as u128)?;
        let enc = crate::numberfield::sigma_prime_power(norm, sign, r, Some(e), 64)?;
        Ok(SampleValue::Real {
            lo: f64_lo(&enc),
            hi: f64_hi(&enc),
        })
    } else {
        let ideal = IdealFactorization::new(vec![(k, e)])?;
        let (re, im) = sigma_ideal_complex(stream, chi, r, &ideal, 64)?;
        Ok(SampleValue::Complex {
            re: (f64_lo(&re), f64_hi(&re)),
            im: (f64_lo(&im), f64_hi(&im)),
        })
    }
}

/// Outcome of checking a sample set against a computed closure.
#[derive(Clone, Debug)]
pub struct VerificationReport {
    pub total_samples: usize,
    /// Inputs of samples escaping every interval (capped at 16 witnesses).
    pub containment_failures: Vec<u64>,
    /// Number of samples landing in each interval.
    pub interval_hits: Vec<usize>,
    /// Map from divisibility pattern (over the expanded stream entries) to
    /// the interval index, when single-valued.
    pub class_map: Vec<(u32, usize)>,
    /// False when some divisibility class straddles two intervals.
    pub class_consistent: bool,
}

impl VerificationReport {
    /// All samples contained and every interval hit by at least one sample.
    pub fn is_pass(&self) -> bool {
        self.containment_failures.is_empty() && self.interval_hits.iter().all(|&h| h > 0)
    }
}

/// Checks containment (every sample inside some interval), coverage (every
/// interval hit), and the divisibility-class decomposition (samples in one
/// class land in one interval).
pub fn verify_against_closure(
    samples: &SampleSet,
    closure: &ClosureResult,
) -> Result<VerificationReport> {
    let intervals = &closure.union.intervals;
    if intervals.is_empty() {
        return Err(Error::InvalidInput("closure with no intervals".into()));
    }
    // exact rational outer hulls
    let hulls: Vec<(BigRational, BigRational)> = intervals
        .iter()
        .map(|iv| (iv.lo.lo_rational(), iv.hi.hi_rational()))
        .collect();
    let hulls_f64: Vec<(f64, f64)> = hulls
        .iter()
        .map(|(lo, hi)| {
            (
                widen_down(lo.to_f64().unwrap_or(f64::NEG_INFINITY)),
                widen_up(hi.to_f64().unwrap_or(f64::INFINITY)),
            )
        })
        .collect();
    let mask_bits = closure.base.index.min(32);
    let assign = |s: &Sample| -> Option<usize> {
        let (vlo, vhi) = s.value.real_bounds()?;
        // fast filter with doubles, exact confirmation near boundaries
        for (i, &(hlo, hhi)) in hulls_f64.iter().enumerate() {
            if vlo >= hlo && vhi <= hhi {
                // strictly interior at double precision is decisive given
                // the certified gaps; near-boundary cases fall through
                let margin = (hhi - hlo) * 1e-9 + 1e-13;
                if vlo >= hlo + margin && vhi <= hhi - margin {
                    return Some(i);
                }
                break;
            }
        }
        // exact pass
        if let Some(v) = s.value.exact() {
            for (i, (hlo, hhi)) in hulls.iter().enumerate() {
                if &v >= hlo && &v <= hhi {
                    return Some(i);
                }
            }
            return None;
        }
        // interval value: outer test
        for (i, &(hlo, hhi)) in hulls_f64.iter().enumerate() {
            if vlo >= hlo && vhi <= hhi {
                return Some(i);
            }
        }
        None
    };
    let key_mask: u32 = if mask_bits >= 32 {
        u32::MAX
    } else {
        (1u32 << mask_bits) - 1
    };
    let results: Vec<(u32, Option<usize>)> = samples
        .samples
        .par_iter()
        .map(|s| (s.small_prime_mask & key_mask, assign(s)))
        .collect();
    let mut containment_failures = Vec::new();
    let mut interval_hits = vec![0usize; intervals.len()];
    let mut class_to_interval: std::collections::HashMap<u32, usize> =
        std::collections::HashMap::new();
    let mut class_consistent = true;
    for (sample, (key, res)) in samples.samples.iter().zip(&results) {
        match res {
            Some(i) => {
                interval_hits[*i] += 1;
                match class_to_interval.get(key) {
                    None => {
                        class_to_interval.insert(*key, *i);
                    }
                    Some(&j) if j != *i => class_consistent = false,
                    _ => {}
                }
            }
            None => {
                if containment_failures.len() < 16 {
                    containment_failures.push(sample.input);
                }
            }
        }
    }
    let mut class_map: Vec<(u32, usize)> = class_to_interval.into_iter().collect();
    class_map.sort_unstable();
    Ok(VerificationReport {
        total_samples: samples.samples.len(),
        containment_failures,
        interval_hits,
        class_map,
        class_consistent,
    })
}

/// Writes scatter data as CSV rows `n,sigma_lo,sigma_hi`.
pub fn write_csv<W: Write>(samples: &SampleSet, out: &mut W) -> Result<()> {
    writeln!(out, "n,sigma_lo,sigma_hi")?;
    for s in &samples.samples {
        match s.value.real_bounds() {
            Some((lo, hi)) => writeln!(out, "{},{},{}", s.input, lo, hi)?,
            None => {
                if let SampleValue::Complex { re, im } = s.value {
                    writeln!(out, "{},{},{},{},{}", s.input, re.0, re.1, im.0, im.1)?;
                }
            }
        }
    }
    Ok(())
}

/// Writes a minimal standalone SVG scatter plot of the sampled image.
pub fn write_svg<W: Write>(samples: &SampleSet, out: &mut W) -> Result<()> {
    let pts: Vec<(f64, f64)> = samples
        .samples
        .iter()
        .filter_map(|s| {
            let (lo, hi) = s.value.real_bounds()?;
            Some((s.input as f64, (lo + hi) / 2.0))
        })
        .collect();
    if pts.is_empty() {
        return Err(Error::InvalidInput("no real-valued samples to plot".into()));
    }
    let (w, h) = (900.0, 600.0);
    let x_max = samples.max_norm as f64;
    let y_min = pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let y_max = pts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let pad = 0.05 * (y_max - y_min).max(1e-9);
    let (y_lo, y_hi) = (y_min - pad, y_max + pad);
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    )?;
    writeln!(out, r#"<rect width="{w}" height="{h}" fill="white"/>"#)?;
    // subsample dense inputs so the file stays manageable
    let step = (pts.len() / 200_000).max(1);
    for (x, y) in pts.iter().step_by(step) {
        let px = x / x_max * (w - 40.0) + 20.0;
        let py = h - 20.0 - (y - y_lo) / (y_hi - y_lo) * (h - 40.0);
        writeln!(out, r#"<circle cx="{px:.2}" cy="{py:.2}" r="0.6" fill="black"/>"#)?;
    }
    writeln!(out, "</svg>")?;
    Ok(())
}
