//! Lower bounds for the component count: the power-of-two bound from
//! partitioning integers by small coprime divisors, the partition-product
//! bound over prime-ideal multiplicities, and the supporting tail
//! inequalities and growth constants.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use std::collections::BTreeSet;

use crate::characters::{CharValue, DirichletCharacter};
use crate::closure::zeta_tail_sum;
use crate::error::{Error, Result};
use crate::numberfield::{ideal_count, prime_ideal_count, FieldSpec};
use crate::primes::Primes;
use crate::rigor::{int_pow, inv_int_pow, Enclosure, Precision, StageOutcome, Verdict};

/// `2^{π_m(2r-2) - δ_m}` with `δ_m = 0` for even modulus, 1 otherwise;
/// requires `r >= 3`.
pub fn power_of_two_lower_bound(
    r: &BigRational,
    modulus: &BigUint,
    primes: &Primes,
) -> Result<BigUint> {
    if r < &BigRational::from_integer(BigInt::from(3)) {
        return Err(Error::InvalidInput(
            "power-of-two bound requires r >= 3".into(),
        ));
    }
    let x = r * BigRational::from_integer(BigInt::from(2))
        - BigRational::from_integer(BigInt::from(2));
    let count = primes.pi_m_rational(&x, modulus)?;
    let delta = if modulus.is_even() { 0u64 } else { 1 };
    let exponent = count.saturating_sub(delta);
    Ok(BigUint::one() << exponent)
}

/// Certified tail inequalities used by the separation argument:
/// variant 1: `d^{-r} > Σ_{n > d} n^{-r}` for integer `0 < d <= r-1`;
/// variant 2: `d^{-r} > Σ_{n >= d+2, n odd} n^{-r}` for odd `d <= 2r-2`.
/// Returns the certified truth value; rejects domain violations.
pub fn tail_inequality(d: u64, r: &BigRational, odd_variant: bool, bits: u32) -> Result<bool> {
    if d == 0 {
        return Err(Error::InvalidInput("tail inequality needs d >= 1".into()));
    }
    let d_rat = BigRational::from_integer(BigInt::from(d));
    if odd_variant {
        if d % 2 == 0 {
            return Err(Error::InvalidInput(
                "odd-variant tail inequality needs odd d".into(),
            ));
        }
        let two_r_minus_2 = r * BigRational::from_integer(BigInt::from(2))
            - BigRational::from_integer(BigInt::from(2));
        if d_rat > two_r_minus_2 {
            return Err(Error::InvalidInput(format!(
                "odd-variant needs d <= 2r-2 (d = {d})"
            )));
        }
    } else if d_rat > r - BigRational::one() {
        return Err(Error::InvalidInput(format!(
            "variant 1 needs d <= r-1 (d = {d})"
        )));
    }
    let lhs = inv_int_pow(d, r, bits)?;
    let rhs = if odd_variant {
        odd_tail_sum(d + 2, r, 512, bits)?
    } else {
        zeta_tail_sum(d + 1, r, 512, bits)?
    };
    match lhs.certified_gt(&rhs) {
        Verdict::True => Ok(true),
        Verdict::False => Ok(false),
        Verdict::Unknown => Err(Error::AmbiguousComparison {
            bits,
            lhs: format!("{lhs}"),
            rhs: format!("{rhs}"),
            context: format!("tail inequality at d={d}"),
        }),
    }
}

/// Enclosure of `Σ_{n >= start, n odd} n^{-r}` (start must be odd).
pub fn odd_tail_sum(start: u64, r: &BigRational, terms: u64, bits: u32) -> Result<Enclosure> {
    debug_assert!(start % 2 == 1);
    let mut acc = Enclosure::zero(bits);
    let mut n = start;
    for _ in 0..terms {
        acc = acc.add(&inv_int_pow(n, r, bits)?.as_interval());
        n += 2;
    }
    // remainder over odd m >= n: upper (1/2)∫_{n-2}^∞ x^{-r} dx, lower
    // (1/2)∫_{n}^∞.
    let r_minus_1 = Enclosure::from_rational_bits(r - BigRational::one(), bits);
    let two = Enclosure::from_u64_bits(2, bits);
    let upper = Enclosure::from_u64_bits(n - 2, bits)
        .pow_rat(&(BigRational::one() - r))?
        .div(&two.mul(&r_minus_1))?;
    let lower = Enclosure::from_u64_bits(n, bits)
        .pow_rat(&(BigRational::one() - r))?
        .div(&two.mul(&r_minus_1))?;
    Ok(acc.add(&Enclosure::from_bounds(&lower, &upper)))
}

/// The pair of divisor sets that partitions integers for the power-of-two
/// bound: `b1` collects divisors up to `r-1` coprime to the modulus, `b2`
/// collects odd-range divisors and empties whenever `2 ∈ b1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartitionSignature {
    pub b1: BTreeSet<u64>,
    pub b2: BTreeSet<u64>,
}

pub fn partition_signature(
    n: u64,
    r: &BigRational,
    modulus: &BigUint,
) -> PartitionSignature {
    let r_minus_1 = r - BigRational::one();
    let two_r_minus_2 = &r_minus_1 * BigRational::from_integer(BigInt::from(2));
    let mut b1 = BTreeSet::new();
    let mut b2 = BTreeSet::new();
    let le = |d: u64, bound: &BigRational| BigRational::from_integer(BigInt::from(d)) <= *bound;
    let ge = |d: u64, bound: &BigRational| BigRational::from_integer(BigInt::from(d)) >= *bound;
    for d in 1..=n {
        if n % d != 0 {
            continue;
        }
        let bd = BigUint::from(d);
        if le(d, &r_minus_1) && bd.gcd(modulus).is_one() {
            b1.insert(d);
        }
        if ge(d, &r_minus_1)
            && le(d, &two_r_minus_2)
            && bd.gcd(&(modulus * 2u32)).is_one()
        {
            b2.insert(d);
        }
    }
    if b1.contains(&2) {
        b2.clear();
    }
    PartitionSignature { b1, b2 }
}

/// Outcome of a separation check between two integers with distinct
/// signatures: the pivot divisor, the character value there, and the
/// certified gap lower bound.
#[derive(Clone, Debug)]
pub struct Separation {
    pub pivot: u64,
    pub theta: CharValue,
    pub gap_lower: Enclosure,
    pub holds: bool,
}

/// Certifies that the images of the partition classes of `x` and `y` have
/// disjoint closures, via the projected gap at the smallest distinguishing
/// divisor. Errors when the signatures coincide.
pub fn separation_check(
    x: u64,
    y: u64,
    r: &BigRational,
    chi: &DirichletCharacter,
    bits: u32,
) -> Result<Separation> {
    if r < &BigRational::from_integer(BigInt::from(3)) {
        return Err(Error::InvalidInput("separation check needs r >= 3".into()));
    }
    let modulus = BigUint::from_bytes_be(&chi.modulus().to_be_bytes());
    let sx = partition_signature(x, r, &modulus);
    let sy = partition_signature(y, r, &modulus);
    if sx == sy {
        return Err(Error::InvalidInput(format!(
            "{x} and {y} share the same partition signature"
        )));
    }
    let (pivot, odd_variant) = if sx.b1 != sy.b1 {
        let d0 = sx
            .b1
            .symmetric_difference(&sy.b1)
            .next()
            .copied()
            .expect("nonequal sets differ");
        (d0, false)
    } else {
        let d0 = sx
            .b2
            .symmetric_difference(&sy.b2)
            .next()
            .copied()
            .expect("nonequal sets differ");
        (d0, true)
    };
    let theta = chi.eval(pivot as u128);
    let lhs = inv_int_pow(pivot, r, bits)?;
    let tail = if odd_variant {
        odd_tail_sum(pivot + 2, r, 512, bits)?
    } else {
        zeta_tail_sum(pivot + 1, r, 512, bits)?
    };
    let gap = lhs.sub(&tail);
    let holds = match gap.certified_gt(&Enclosure::zero(bits)) {
        Verdict::True => true,
        Verdict::False => false,
        Verdict::Unknown => {
            return Err(Error::AmbiguousComparison {
                bits,
                lhs: format!("{gap}"),
                rhs: "0".into(),
                context: format!("separation gap at pivot {pivot}"),
            })
        }
    };
    Ok(Separation {
        pivot,
        theta,
        gap_lower: gap,
        holds,
    })
}

/// Explicit certified constant `η` with `d_s(n) <= η n^ε` for all `n >= 1`:
/// the product over primes of the per-prime maximum of
/// `C(e+s-1, s-1) / p^{εe}`, which is 1 once `p^ε >= s`.
pub fn divisor_growth_constant(
    s: u32,
    epsilon: &BigRational,
    bits: u32,
    primes: &Primes,
) -> Result<Enclosure> {
    if s == 0 {
        return Err(Error::InvalidInput("degree must be positive".into()));
    }
    if epsilon <= &BigRational::from_integer(BigInt::ZERO) {
        return Err(Error::InvalidInput("epsilon must be positive".into()));
    }
    if s == 1 {
        return Ok(Enclosure::one(bits));
    }
    // factor = 1 once p^ε >= s, i.e. p^c >= s^d for ε = c/d
    let c = epsilon
        .numer()
        .to_u32()
        .ok_or_else(|| Error::InvalidInput("epsilon numerator too large".into()))?;
    let d = epsilon
        .denom()
        .to_u32()
        .ok_or_else(|| Error::InvalidInput("epsilon denominator too large".into()))?;
    let s_pow_d = BigUint::from(s).pow(d);
    let mut eta = Enclosure::one(bits);
    let table = primes.snapshot(1 << 20)?;
    for &p in table.as_slice() {
        if BigUint::from(p).pow(c) >= s_pow_d {
            break;
        }
        // term(e) = C(e+s-1, s-1) / p^{εe}; the ratio term(e+1)/term(e)
        // = ((e+s)/(e+1)) / p^ε is strictly decreasing, so scan until it
        // drops to <= 1 and take the max term.
        let mut e_star = 0u64;
        loop {
            let e = e_star;
            // ratio > 1 iff (e+s)^d > (e+1)^d * p^c
            let lhs = BigUint::from(e + s as u64).pow(d);
            let rhs = BigUint::from(e + 1).pow(d) * BigUint::from(p).pow(c);
            if lhs > rhs {
                e_star += 1;
            } else {
                break;
            }
        }
        let binom = crate::numberfield::binomial(e_star + s as u64 - 1, s as u64 - 1);
        let p_pow = int_pow(
            &BigUint::from(p),
            &(-epsilon * BigRational::from_integer(BigInt::from(e_star))),
            bits,
        )?;
        eta = eta.mul(&Enclosure::from_u64_bits(binom, bits).mul(&p_pow));
    }
    Ok(eta)
}

/// Result of the separation-depth computation: the largest certified `h`
/// such that `d^{-r} > Σ_{n > d} a_K(n)/n^r` for every `2 <= d <= h`.
#[derive(Clone, Debug)]
pub struct SeparationDepth {
    pub h: u64,
    pub epsilon: BigRational,
    pub eta: Enclosure,
    /// `h` from the closed-form floor alone (diagnostic).
    pub h_formula: u64,
    /// `h` from the direct certified scan alone (diagnostic).
    pub h_scan: u64,
}

/// Computes the separation depth by both routes and returns the larger:
/// the floor formula `⌊((r-ε-1)/η)^{1/(1+ε)}⌋` (always valid) and a direct
/// certified scan with exact ideal counts plus an η-based tail.
pub fn separation_depth(
    field: &FieldSpec,
    r: &BigRational,
    epsilon: &BigRational,
    precision: &Precision,
    primes: &Primes,
) -> Result<SeparationDepth> {
    let threshold = epsilon + BigRational::one();
    if r <= &threshold {
        return Err(Error::InvalidInput(
            "separation depth needs r > epsilon + 1".into(),
        ));
    }
    let bits = precision.bits;
    let s = field.degree();
    let eta = divisor_growth_constant(s, epsilon, bits, primes)?;
    // formula route: conservative floor of ((r-ε-1)/η)^{1/(1+ε)}
    let margin = Enclosure::from_rational_bits(r - epsilon - BigRational::one(), bits);
    let base = margin.div(&eta)?;
    let expo = BigRational::one() / (BigRational::one() + epsilon);
    let h_formula = base
        .pow_rat(&expo)?
        .floor_lower()
        .to_u64()
        .unwrap_or(0)
        .max(1);
    // scan route
    let scan_cap = (4 * h_formula + 64).min(2000);
    let mut h_scan = 1u64;
    let tail_terms = 2048u64;
    'scan: for d in 2..=scan_cap {
        let verdict = precision.escalate(|bits| {
            let lhs = inv_int_pow(d, r, bits)?;
            // Σ_{n>d} a_K(n)/n^r: exact coefficients to the cutoff, then the
            // η-tail η/(r-ε-1) · N^{-r+ε+1}.
            let cutoff = d + tail_terms;
            let mut partial = Enclosure::zero(bits);
            for n in (d + 1)..=cutoff {
                let a = ideal_count(field, n)?;
                if a == 0 {
                    continue;
                }
                partial = partial.add(
                    &Enclosure::from_u64_bits(a, bits).mul(&inv_int_pow(n, r, bits)?.as_interval()),
                );
            }
            let eta_here = divisor_growth_constant(s, epsilon, bits, primes)?;
            let tail_up = eta_here
                .mul(&Enclosure::from_u64_bits(cutoff, bits).pow_rat(
                    &(BigRational::one() + epsilon - r),
                )?)
                .div(&Enclosure::from_rational_bits(
                    r - epsilon - BigRational::one(),
                    bits,
                ))?;
            let rhs = Enclosure::from_bounds(&partial, &partial.add(&tail_up));
            Ok(StageOutcome::Done(lhs.certified_gt(&rhs)))
        })?;
        match verdict {
            Verdict::True => h_scan = d,
            // Unknown cannot be improved by precision here (tail-dominated);
            // stopping keeps the result a certified lower estimate.
            _ => break 'scan,
        }
    }
    Ok(SeparationDepth {
        h: h_formula.max(h_scan),
        epsilon: epsilon.clone(),
        eta,
        h_formula,
        h_scan,
    })
}

/// `Π_{n=2}^{h} (b_K(n) + 1)` over the certified separation depth.
pub fn partition_lower_bound(
    field: &FieldSpec,
    r: &BigRational,
    epsilon: &BigRational,
    precision: &Precision,
    primes: &Primes,
) -> Result<(BigUint, SeparationDepth)> {
    let depth = separation_depth(field, r, epsilon, precision, primes)?;
    let mut acc = BigUint::one();
    for n in 2..=depth.h {
        let b = prime_ideal_count(field, n)? as u64;
        acc *= BigUint::from(b + 1);
    }
    Ok((acc, depth))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn power_of_two_bound_examples() {
        let primes = Primes::default();
        // r=3, m=1: 2^{π(4) - 1} = 2^{2-1} = 2
        assert_eq!(
            power_of_two_lower_bound(&rat(3, 1), &BigUint::one(), &primes).unwrap(),
            BigUint::from(2u32)
        );
        // r=3, m=2: primes <= 4 coprime to 2 is {3}; even modulus: 2^1 = 2
        assert_eq!(
            power_of_two_lower_bound(&rat(3, 1), &BigUint::from(2u32), &primes).unwrap(),
            BigUint::from(2u32)
        );
        // r=6, m=1: 2^{π(10) - 1} = 2^3 = 8
        assert_eq!(
            power_of_two_lower_bound(&rat(6, 1), &BigUint::one(), &primes).unwrap(),
            BigUint::from(8u32)
        );
        assert!(power_of_two_lower_bound(&rat(2, 1), &BigUint::one(), &primes).is_err());
    }

    #[test]
    fn tail_inequality_examples() {
        // d=2, r=3: 1/8 > Σ_{n>=3} n^{-3} ≈ 0.0770
        assert!(tail_inequality(2, &rat(3, 1), false, 128).unwrap());
        // d=3, r=5/2 odd variant: 3 <= 2r-2 = 3
        assert!(tail_inequality(3, &rat(5, 2), true, 128).unwrap());
        // domain violation: d=5 > r-1=2
        assert!(tail_inequality(5, &rat(3, 1), false, 128).is_err());
        // even d rejected in odd variant
        assert!(tail_inequality(2, &rat(3, 1), true, 128).is_err());
    }

    #[test]
    fn odd_tail_encloses_reference() {
        // Σ_{n odd >= 3} n^{-2} = π²/8 - 1 ≈ 0.2337005501361698
        let s = odd_tail_sum(3, &rat(2, 1), 512, 128).unwrap();
        let reference = rat(2337005501361698, 10000000000000000);
        assert!(s.lo_rational() <= reference.clone());
        assert!(s.hi_rational() >= reference);
    }

    #[test]
    fn signatures_and_separation() {
        let chi = DirichletCharacter::principal(1);
        let r = rat(3, 1);
        // x=1 has empty B1∩divisors... B1(1) = {1}; B1(2) = {1, 2}
        let s1 = partition_signature(1, &r, &BigUint::one());
        let s2 = partition_signature(2, &r, &BigUint::one());
        assert_ne!(s1, s2);
        let sep = separation_check(1, 2, &r, &chi, 128).unwrap();
        assert!(sep.holds);
        assert_eq!(sep.pivot, 2);

        // same signature: x = y = 1
        assert!(separation_check(1, 1, &r, &chi, 128).is_err());
    }

    #[test]
    fn separation_with_kronecker_character() {
        let chi = DirichletCharacter::kronecker(-4).unwrap();
        let sep = separation_check(1, 3, &rat(3, 1), &chi, 128).unwrap();
        assert!(sep.holds);
        assert_eq!(sep.pivot, 3);
        assert_eq!(sep.theta, CharValue::MINUS_ONE);
    }

    #[test]
    fn separation_on_random_pairs() {
        let primes = Primes::default();
        let _ = primes;
        let chi = DirichletCharacter::principal(1);
        let mut seed = 7u64;
        let mut next = move || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
            (seed >> 33) % 1000 + 1
        };
        let mut checked = 0;
        for r_int in [3i64, 4, 5, 6] {
            let r = rat(r_int, 1);
            while checked < 250 * (r_int - 2) {
                let x = next();
                let y = next();
                let sx = partition_signature(x, &r, &BigUint::one());
                let sy = partition_signature(y, &r, &BigUint::one());
                if sx == sy {
                    continue;
                }
                let sep = separation_check(x, y, &r, &chi, 128).unwrap();
                assert!(sep.holds, "x={x} y={y} r={r_int}");
                checked += 1;
            }
        }
    }

    #[test]
    fn growth_constant_trivial_for_degree_one() {
        let primes = Primes::default();
        let eta = divisor_growth_constant(1, &rat(1, 1), 96, &primes).unwrap();
        assert_eq!(eta.exact_value(), Some(&rat(1, 1)));
    }

    #[test]
    fn growth_constant_dominates_exhaustively() {
        let primes = Primes::default();
        for s in [2u32, 3, 4] {
            for eps in [rat(1, 1), rat(1, 2), rat(1, 4)] {
                let eta = divisor_growth_constant(s, &eps, 128, &primes).unwrap();
                // The dominating constant is the upper endpoint of the η
                // enclosure; the bound is exactly tight at worst-case n
                // (e.g. s=2, ε=1/2, n=12), so compare against the upper
                // side of the product enclosure.
                for n in 1..=10_000u64 {
                    let d = crate::numberfield::tuple_divisor_count(s, n);
                    let bound = eta
                        .mul(&int_pow(&BigUint::from(n), &eps, 128).unwrap())
                        .hi_rational();
                    assert!(
                        BigRational::from_integer(BigInt::from(d as i64)) <= bound,
                        "d_{s}({n}) = {d} exceeds η n^ε"
                    );
                }
            }
        }
    }

    #[test]
    fn separation_depth_rational_field() {
        // For K = Q at r = 5 the scan reduces to the plain tail inequality;
        // h >= 4 must certify.
        let primes = Primes::default();
        let depth = separation_depth(
            &FieldSpec::Rational,
            &rat(5, 1),
            &rat(1, 2),
            &Precision::default(),
            &primes,
        )
        .unwrap();
        assert!(depth.h >= 4, "h = {}", depth.h);
    }

    #[test]
    fn separation_depth_gaussian() {
        let primes = Primes::default();
        let gauss = FieldSpec::quadratic(-1).unwrap();
        let depth = separation_depth(
            &gauss,
            &rat(10, 1),
            &rat(1, 1),
            &Precision::default(),
            &primes,
        )
        .unwrap();
        assert!(depth.h >= 2, "h = {}", depth.h);
        let (bound, _) =
            partition_lower_bound(&gauss, &rat(10, 1), &rat(1, 1), &Precision::default(), &primes)
                .unwrap();
        // b_K(2) = 1 so the bound is at least 2
        assert!(bound >= BigUint::from(2u32));
    }

    #[test]
    fn partition_bound_rational_field_h4() {
        // For K = Q with h = 4: (b(2)+1)(b(3)+1)(b(4)+1) = 2*2*1 = 4
        let primes = Primes::default();
        let (bound, depth) = partition_lower_bound(
            &FieldSpec::Rational,
            &rat(5, 1),
            &rat(1, 2),
            &Precision::default(),
            &primes,
        )
        .unwrap();
        assert!(depth.h >= 4);
        if depth.h == 4 {
            assert_eq!(bound, BigUint::from(4u32));
        } else {
            assert!(bound >= BigUint::from(4u32));
        }
    }

    #[test]
    fn depth_requires_margin() {
        let primes = Primes::default();
        assert!(separation_depth(
            &FieldSpec::Rational,
            &rat(3, 2),
            &rat(1, 1),
            &Precision::default(),
            &primes
        )
        .is_err());
    }
}
