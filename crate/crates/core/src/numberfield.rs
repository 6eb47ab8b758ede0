//! Number-field descriptions and the ordered prime-ideal norm stream.
//!
//! Supported fields: the rationals, quadratic fields, cyclotomic fields, and
//! fields given by a monic irreducible integer polynomial. Splitting data
//! comes from the Kronecker symbol of the discriminant (quadratic), the
//! multiplicative order of `p` (cyclotomic), or the factor degrees of the
//! polynomial mod `p` (Dedekind–Kummer, valid when `p` does not divide the
//! polynomial discriminant). Ramified primes of polynomial fields must be
//! declared explicitly; index divisors are out of scope.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::characters::{kronecker_symbol, CharValue, DirichletCharacter};
use crate::error::{Error, Result};
use crate::polyfield::{self, PolyZ};
use crate::primes::Primes;
use crate::rigor::{int_pow, Enclosure};

/// Declared splitting data for a ramified prime of a polynomial field:
/// `g` primes above `p`, each with ramification index `e` and inertia
/// degree `f`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RamifiedPrime {
    pub p: u64,
    pub e: u32,
    pub f: u32,
    pub g: u32,
}

/// A number field admitted by the norm-stream machinery.
#[derive(Clone, Debug)]
pub enum FieldSpec {
    Rational,
    /// `Q(sqrt(d))` for squarefree `d != 0, 1`.
    Quadratic { d: i64 },
    /// `Q(zeta_m)` for `m >= 3`.
    Cyclotomic { m: u32 },
    /// `Q[x]/(f)` for monic irreducible `f`; `galois` asserts uniform
    /// splitting (checked at every unramified prime the stream touches).
    Polynomial {
        poly: PolyZ,
        galois: bool,
        ramified: Vec<RamifiedPrime>,
        disc: BigInt,
    },
}

/// Splitting of a rational prime: list of `(e, f, count)` classes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplittingType {
    pub classes: Vec<(u32, u32, u32)>,
}

impl SplittingType {
    fn uniform(e: u32, f: u32, g: u32) -> SplittingType {
        SplittingType {
            classes: vec![(e, f, g)],
        }
    }

    /// Sum of `e*f*g` over classes; equals the field degree.
    pub fn degree_sum(&self) -> u32 {
        self.classes.iter().map(|&(e, f, g)| e * f * g).sum()
    }
}

impl FieldSpec {
    pub fn rational() -> FieldSpec {
        FieldSpec::Rational
    }

    pub fn quadratic(d: i64) -> Result<FieldSpec> {
        if d == 0 || d == 1 {
            return Err(Error::InvalidInput("quadratic field needs d != 0, 1".into()));
        }
        if !crate::characters::is_squarefree(d.unsigned_abs()) {
            return Err(Error::InvalidInput(format!("d = {d} is not squarefree")));
        }
        Ok(FieldSpec::Quadratic { d })
    }

    pub fn cyclotomic(m: u32) -> Result<FieldSpec> {
        if m < 3 {
            return Err(Error::InvalidInput("cyclotomic field needs m >= 3".into()));
        }
        Ok(FieldSpec::Cyclotomic { m })
    }

    /// Builds a polynomial field, verifying monicity and irreducibility over
    /// Q (via an irreducible-mod-p witness or an Eisenstein witness).
    pub fn polynomial(
        poly: PolyZ,
        galois: bool,
        ramified: Vec<RamifiedPrime>,
        primes: &Primes,
    ) -> Result<FieldSpec> {
        if !poly.is_monic() {
            return Err(Error::InvalidInput("field polynomial must be monic".into()));
        }
        if poly.degree() < 2 {
            return Err(Error::InvalidInput(
                "field polynomial must have degree >= 2".into(),
            ));
        }
        verify_irreducible_over_q(&poly, primes)?;
        let disc = polyfield::discriminant(&poly)?;
        if disc.is_zero() {
            return Err(Error::InvalidInput(
                "field polynomial has zero discriminant".into(),
            ));
        }
        Ok(FieldSpec::Polynomial {
            poly,
            galois,
            ramified,
            disc,
        })
    }

    pub fn degree(&self) -> u32 {
        match self {
            FieldSpec::Rational => 1,
            FieldSpec::Quadratic { .. } => 2,
            FieldSpec::Cyclotomic { m } => euler_phi(*m as u64) as u32,
            FieldSpec::Polynomial { poly, .. } => poly.degree() as u32,
        }
    }

    /// Field discriminant for the closed-form variants (used to decide
    /// ramification); quadratic: `d` or `4d`, cyclotomic: ramified iff `p|m`
    /// (with the usual `m ≡ 2 mod 4` caveat handled by the order formula).
    pub fn quadratic_discriminant(d: i64) -> i64 {
        if d.rem_euclid(4) == 1 {
            d
        } else {
            4 * d
        }
    }

    /// Splitting type of the rational prime `p`.
    pub fn splitting(&self, p: u64) -> Result<SplittingType> {
        match self {
            FieldSpec::Rational => Ok(SplittingType::uniform(1, 1, 1)),
            FieldSpec::Quadratic { d } => {
                let disc = FieldSpec::quadratic_discriminant(*d);
                if BigInt::from(disc).is_multiple_of(&BigInt::from(p)) {
                    return Ok(SplittingType::uniform(2, 1, 1));
                }
                match kronecker_symbol(disc, p as u128) {
                    1 => Ok(SplittingType::uniform(1, 1, 2)),
                    -1 => Ok(SplittingType::uniform(1, 2, 1)),
                    _ => unreachable!("non-divisor with zero symbol"),
                }
            }
            FieldSpec::Cyclotomic { m } => {
                let m = *m as u64;
                let (pa, m_rest) = split_prime_power(m, p);
                let e = euler_phi(pa) as u32;
                let f = if m_rest == 1 {
                    1
                } else {
                    multiplicative_order(p, m_rest) as u32
                };
                let g = (euler_phi(m_rest) / f as u64) as u32;
                Ok(SplittingType::uniform(e, f, g))
            }
            FieldSpec::Polynomial {
                poly,
                galois,
                ramified,
                disc,
            } => {
                if disc.is_multiple_of(&BigInt::from(p)) {
                    for r in ramified {
                        if r.p == p {
                            return Ok(SplittingType::uniform(r.e, r.f, r.g));
                        }
                    }
                    return Err(Error::UntabulatedRamified { p });
                }
                let fp = poly.reduce_mod(p);
                unramified_splitting(&fp, *galois)
            }
        }
    }

    /// Builds the ordered prime-ideal norm stream up to `up_to_norm`.
    pub fn norm_stream(&self, up_to_norm: u64, primes: &Primes) -> Result<NormStream> {
        let table = primes.snapshot(up_to_norm.max(4))?;
        let plist: Vec<u64> = table
            .as_slice()
            .iter()
            .copied()
            .take_while(|&p| p <= up_to_norm)
            .collect();
        let expected_degree = self.degree();
        // Polynomial fields batch the coefficient reductions through a
        // remainder tree; one long division per prime would dominate the
        // whole stream construction otherwise.
        let batch: Option<Vec<Vec<u64>>> = match self {
            FieldSpec::Polynomial { poly, disc, .. } if plist.len() > 64 => {
                let tree = polyfield::ModulusTree::new(&plist);
                let disc_mods = tree.reduce(disc);
                let coeff_mods: Vec<Vec<u64>> =
                    poly.coeffs().iter().map(|c| tree.reduce(c)).collect();
                let mut per_prime = Vec::with_capacity(plist.len());
                for i in 0..plist.len() {
                    let mut row: Vec<u64> =
                        coeff_mods.iter().map(|col| col[i]).collect();
                    row.push(disc_mods[i]);
                    per_prime.push(row);
                }
                Some(per_prime)
            }
            _ => None,
        };
        let mut entries = Vec::new();
        for (idx, &p) in plist.iter().enumerate() {
            let split = match (&batch, self) {
                (
                    Some(rows),
                    FieldSpec::Polynomial {
                        galois, ramified, ..
                    },
                ) => {
                    let row = &rows[idx];
                    let disc_mod = *row.last().unwrap();
                    if disc_mod == 0 {
                        match ramified.iter().find(|r| r.p == p) {
                            Some(r) => SplittingType::uniform(r.e, r.f, r.g),
                            None => return Err(Error::UntabulatedRamified { p }),
                        }
                    } else {
                        let fp =
                            polyfield::PolyFp::new(p, row[..row.len() - 1].to_vec());
                        unramified_splitting(&fp, *galois)?
                    }
                }
                _ => self.splitting(p)?,
            };
            debug_assert!(
                matches!(self, FieldSpec::Polynomial { galois: false, .. })
                    || split.degree_sum() == expected_degree,
                "efg sum mismatch at p={p}"
            );
            for &(e, f, g) in &split.classes {
                // norm = p^f
                if let Some(norm) = checked_pow_u64(p, f) {
                    if norm <= up_to_norm {
                        for tie in 0..g {
                            entries.push(StreamEntry {
                                norm,
                                p,
                                e,
                                f,
                                tie_rank: tie,
                            });
                        }
                    }
                }
            }
        }
        entries.sort_by_key(|s| (s.norm, s.p, s.tie_rank));
        Ok(NormStream {
            limit: up_to_norm,
            entries,
        })
    }

    pub fn to_descriptor(&self) -> FieldDescriptor {
        match self {
            FieldSpec::Rational => FieldDescriptor::Rational,
            FieldSpec::Quadratic { d } => FieldDescriptor::Quadratic { d: *d },
            FieldSpec::Cyclotomic { m } => FieldDescriptor::Cyclotomic { m: *m },
            FieldSpec::Polynomial {
                poly,
                galois,
                ramified,
                ..
            } => FieldDescriptor::Polynomial {
                coeffs: poly.coeffs().iter().map(|c| c.to_string()).collect(),
                galois: *galois,
                ramified: ramified.clone(),
            },
        }
    }

    pub fn from_descriptor(desc: &FieldDescriptor, primes: &Primes) -> Result<FieldSpec> {
        match desc {
            FieldDescriptor::Rational => Ok(FieldSpec::Rational),
            FieldDescriptor::Quadratic { d } => FieldSpec::quadratic(*d),
            FieldDescriptor::Cyclotomic { m } => FieldSpec::cyclotomic(*m),
            FieldDescriptor::Polynomial {
                coeffs,
                galois,
                ramified,
            } => {
                let parsed = coeffs
                    .iter()
                    .map(|s| {
                        s.parse::<BigInt>()
                            .map_err(|_| Error::InvalidInput(format!("bad coefficient {s:?}")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                FieldSpec::polynomial(PolyZ::new(parsed), *galois, ramified.clone(), primes)
            }
        }
    }
}

/// JSON field descriptor. Polynomial coefficients are listed from the
/// constant term upward and must end with 1 (monic).
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum FieldDescriptor {
    Rational,
    Quadratic {
        d: i64,
    },
    Cyclotomic {
        m: u32,
    },
    Polynomial {
        coeffs: Vec<String>,
        #[serde(default)]
        galois: bool,
        #[serde(default)]
        ramified: Vec<RamifiedPrime>,
    },
}

/// Splitting type of an unramified prime from the reduced polynomial:
/// factor degrees become inertia degrees (Dedekind–Kummer).
fn unramified_splitting(fp: &polyfield::PolyFp, galois: bool) -> Result<SplittingType> {
    let p = fp.modulus();
    let degrees = polyfield::factor_degrees(fp)?;
    if galois && degrees.len() != 1 {
        let witness: Vec<u32> = degrees
            .iter()
            .flat_map(|&(d, c)| std::iter::repeat(d).take(c as usize))
            .collect();
        return Err(Error::NotGalois {
            p,
            degrees: witness,
        });
    }
    Ok(SplittingType {
        classes: degrees.iter().map(|&(d, c)| (1, d, c)).collect(),
    })
}

fn verify_irreducible_over_q(poly: &PolyZ, primes: &Primes) -> Result<()> {
    // A prime with irreducible reduction certifies irreducibility of a
    // monic polynomial; try small primes first, they are cheap.
    let table = primes.snapshot(1000)?;
    for &p in table.as_slice().iter().take(120) {
        let fp = poly.reduce_mod(p);
        if fp.degree() == poly.degree() && polyfield::is_irreducible(&fp) {
            return Ok(());
        }
    }
    if eisenstein_witness(poly).is_some() {
        return Ok(());
    }
    Err(Error::IrreducibilityUnverified(
        "no Eisenstein or irreducible-mod-p witness among the first 120 primes".into(),
    ))
}

/// Returns a prime q witnessing that `poly` is Eisenstein at q, if one of
/// the small prime factors (q < 2^16) of the gcd of the lower coefficients
/// works.
pub fn eisenstein_witness(poly: &PolyZ) -> Option<u64> {
    let c0 = poly.coeffs()[0].magnitude().clone();
    if c0.is_zero() {
        return None;
    }
    // Candidate primes must divide every non-leading coefficient.
    let mut g = c0.clone();
    for c in poly.coeffs().iter().take(poly.degree()).skip(1) {
        g = g.gcd(c.magnitude());
        if g.is_one() {
            return None;
        }
    }
    let mut candidates = Vec::new();
    let mut rest = g;
    let mut d = 2u64;
    while BigUint::from(d) * BigUint::from(d) <= rest && d < (1 << 16) {
        if rest.is_multiple_of(&BigUint::from(d)) {
            candidates.push(d);
            while rest.is_multiple_of(&BigUint::from(d)) {
                rest /= BigUint::from(d);
            }
        }
        d += 1;
    }
    if rest > BigUint::one() {
        if let Some(q) = rest.to_u64() {
            candidates.push(q);
        }
    }
    for q in candidates {
        let bq2 = BigInt::from(q) * BigInt::from(q);
        if !poly.coeffs()[0].is_multiple_of(&bq2) {
            return Some(q);
        }
    }
    None
}

/// One prime ideal in the stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StreamEntry {
    pub norm: u64,
    pub p: u64,
    pub e: u32,
    pub f: u32,
    pub tie_rank: u32,
}

/// Prime ideals ordered by norm (ties: rational prime ascending, then tie
/// rank). The multiplicity of a norm value equals the number of prime
/// ideals of that norm.
#[derive(Clone, Debug)]
pub struct NormStream {
    limit: u64,
    entries: Vec<StreamEntry>,
}

impl NormStream {
    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn entries(&self) -> &[StreamEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Number of prime ideals with norm exactly `n` (within the limit).
    pub fn multiplicity(&self, n: u64) -> u32 {
        debug_assert!(n <= self.limit);
        let start = self.entries.partition_point(|s| s.norm < n);
        let end = self.entries.partition_point(|s| s.norm <= n);
        (end - start) as u32
    }

    /// Re-orders tie ranks within equal-norm groups (testing hook for
    /// order-independence checks); the closure must not be affected.
    pub fn with_reversed_ties(&self) -> NormStream {
        let mut entries = self.entries.clone();
        let mut i = 0;
        while i < entries.len() {
            let mut j = i + 1;
            while j < entries.len() && entries[j].norm == entries[i].norm {
                j += 1;
            }
            entries[i..j].reverse();
            i = j;
        }
        NormStream {
            limit: self.limit,
            entries,
        }
    }
}

/// An integral ideal in factored form: distinct stream indices with positive
/// exponents. The empty product is the unit ideal.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IdealFactorization {
    /// `(stream index, exponent)`, indices strictly increasing.
    pub factors: Vec<(usize, u32)>,
}

impl IdealFactorization {
    pub fn unit() -> IdealFactorization {
        IdealFactorization::default()
    }

    pub fn new(mut factors: Vec<(usize, u32)>) -> Result<IdealFactorization> {
        factors.sort_unstable();
        for w in factors.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::InvalidInput(
                    "repeated stream index in ideal factorization".into(),
                ));
            }
        }
        if factors.iter().any(|&(_, e)| e == 0) {
            return Err(Error::InvalidInput(
                "zero exponent in ideal factorization".into(),
            ));
        }
        Ok(IdealFactorization { factors })
    }

    pub fn norm(&self, stream: &NormStream) -> u128 {
        self.factors
            .iter()
            .map(|&(k, e)| (stream.entries()[k].norm as u128).pow(e))
            .product()
    }
}

fn checked_pow_u64(base: u64, exp: u32) -> Option<u64> {
    let mut acc: u64 = 1;
    for _ in 0..exp {
        acc = acc.checked_mul(base)?;
    }
    Some(acc)
}

pub fn euler_phi(mut n: u64) -> u64 {
    let mut result = n;
    let mut p = 2u64;
    while p * p <= n {
        if n % p == 0 {
            while n % p == 0 {
                n /= p;
            }
            result -= result / p;
        }
        p += 1;
    }
    if n > 1 {
        result -= result / n;
    }
    result
}

fn split_prime_power(m: u64, p: u64) -> (u64, u64) {
    let mut pa = 1u64;
    let mut rest = m;
    while rest % p == 0 {
        rest /= p;
        pa *= p;
    }
    (pa, rest)
}

fn multiplicative_order(p: u64, m: u64) -> u64 {
    debug_assert!(m > 0 && p % m != 0);
    let phi = euler_phi(m);
    // order divides phi; scan divisors in increasing order
    let mut divs = Vec::new();
    let mut d = 1u64;
    while d * d <= phi {
        if phi % d == 0 {
            divs.push(d);
            divs.push(phi / d);
        }
        d += 1;
    }
    divs.sort_unstable();
    divs.dedup();
    for d in divs {
        if pow_mod_u64(p % m, d, m) == 1 {
            return d;
        }
    }
    unreachable!("order must divide phi");
}

fn pow_mod_u64(mut b: u64, mut e: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut acc = 1u64;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = ((acc as u128 * b as u128) % m as u128) as u64;
        }
        b = ((b as u128 * b as u128) % m as u128) as u64;
        e >>= 1;
    }
    acc
}

/// Number of integral ideals of norm `n` (the n-th Dedekind zeta
/// coefficient), from the Euler factors `(1 - p^{-f x})^{-g}` per class.
pub fn ideal_count(field: &FieldSpec, n: u64) -> Result<u64> {
    if n == 0 {
        return Err(Error::InvalidInput("ideal_count needs n >= 1".into()));
    }
    if n == 1 {
        return Ok(1);
    }
    let mut acc: u64 = 1;
    for (p, e) in factorize_u64(n) {
        let split = field.splitting(p)?;
        acc = acc
            .checked_mul(prime_power_ideal_count(&split, e))
            .ok_or_else(|| Error::InvalidInput("ideal count overflow".into()))?;
    }
    Ok(acc)
}

/// Coefficient of `y^e` in `prod_i (1 - y^{f_i})^{-g_i}`.
fn prime_power_ideal_count(split: &SplittingType, e: u32) -> u64 {
    let e = e as usize;
    let mut dp = vec![0u64; e + 1];
    dp[0] = 1;
    for &(_, f, g) in &split.classes {
        let f = f as usize;
        // multiply dp by (1 - y^f)^{-g} = sum_k C(k+g-1, g-1) y^{fk}
        let mut next = vec![0u64; e + 1];
        for (i, &v) in dp.iter().enumerate() {
            if v == 0 {
                continue;
            }
            let mut k = 0usize;
            while i + f * k <= e {
                next[i + f * k] += v * binomial(k as u64 + g as u64 - 1, g as u64 - 1);
                k += 1;
            }
        }
        dp = next;
    }
    dp[e]
}

/// Number of prime ideals of norm `n`.
pub fn prime_ideal_count(field: &FieldSpec, n: u64) -> Result<u32> {
    if n < 2 {
        return Ok(0);
    }
    match as_prime_power(n) {
        Some((p, k)) => {
            let split = field.splitting(p)?;
            Ok(split
                .classes
                .iter()
                .filter(|&&(_, f, _)| f == k)
                .map(|&(_, _, g)| g)
                .sum())
        }
        None => Ok(0),
    }
}

/// `n = p^k` decomposition for prime powers.
pub fn as_prime_power(n: u64) -> Option<(u64, u32)> {
    if n < 2 {
        return None;
    }
    let factors = factorize_u64(n);
    if factors.len() == 1 {
        Some(factors[0])
    } else {
        None
    }
}

pub fn factorize_u64(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2u64;
    while p * p <= n {
        if n % p == 0 {
            let mut e = 0u32;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as u64
}

/// `d_s(n)`: number of ordered s-tuples with product n, via the
/// prime-factorization product of binomials.
pub fn tuple_divisor_count(s: u32, n: u64) -> u128 {
    if n == 0 {
        return 0;
    }
    factorize_u64(n)
        .into_iter()
        .map(|(_, e)| binomial(e as u64 + s as u64 - 1, s as u64 - 1) as u128)
        .product()
}

/// The divisor-sum value of a single prime-power ideal: `Σ_{a<=e} t^a N^{-ra}`
/// where `t = χ(N)` is a real sign. `e = None` means the limit value.
pub fn sigma_prime_power(
    norm: u64,
    sign: i8,
    r: &BigRational,
    e: Option<u32>,
    bits: u32,
) -> Result<Enclosure> {
    let x = int_pow(&BigUint::from(norm), &-r.clone(), bits)?;
    match (sign, e) {
        (0, _) => Ok(Enclosure::one(bits)),
        (1, Some(e)) => x.geometric_sum(e as u64),
        (1, None) => x.geometric_sum_inf(),
        (-1, Some(e)) => {
            // Σ (-x)^a = (1 - (-x)^{e+1}) / (1 + x)
            let one = Enclosure::one(bits);
            let neg_x = x.neg();
            let num = one.sub(&neg_x.pow_i64(e as i64 + 1)?);
            let den = one.add(&x);
            num.div(&den)
        }
        (-1, None) => {
            let one = Enclosure::one(bits);
            one.div(&one.add(&x))
        }
        _ => Err(Error::InvalidInput("sign must be in {-1,0,1}".into())),
    }
}

/// Divisor-function value of an ideal under a real character: the product of
/// per-prime geometric sums. Exact (width zero) whenever `r` is an integer.
pub fn sigma_ideal(
    stream: &NormStream,
    chi: &DirichletCharacter,
    r: &BigRational,
    ideal: &IdealFactorization,
    bits: u32,
) -> Result<Enclosure> {
    let mut acc = Enclosure::one(bits);
    for &(k, e) in &ideal.factors {
        let entry = stream
            .entries()
            .get(k)
            .ok_or_else(|| Error::InvalidInput(format!("stream index {k} out of range")))?;
        let sign = chi.eval_real(entry.norm as u128)?;
        acc = acc.mul(&sigma_prime_power(entry.norm, sign, r, Some(e), bits)?);
    }
    Ok(acc)
}

/// Number of divisors of `ideal` with norm exactly `n`.
pub fn divisor_count_of_norm(stream: &NormStream, ideal: &IdealFactorization, n: u64) -> u64 {
    if n == 0 {
        return 0;
    }
    // DP over prime factors on divisors of n only.
    let mut counts: std::collections::HashMap<u64, u64> = std::collections::HashMap::new();
    counts.insert(1, 1);
    for &(k, e) in &ideal.factors {
        let norm = stream.entries()[k].norm;
        let mut next = counts.clone();
        for a in 1..=e {
            let powed = match checked_pow_u64(norm, a) {
                Some(v) if v <= n => v,
                _ => break,
            };
            for (&m, &c) in &counts {
                if let Some(nm) = m.checked_mul(powed) {
                    if nm <= n && n % nm == 0 {
                        *next.entry(nm).or_insert(0) += c;
                    }
                }
            }
        }
        counts = next;
        counts.retain(|&m, _| n % m == 0);
    }
    counts.get(&n).copied().unwrap_or(0)
}

/// Complex divisor-function value for arbitrary characters (sampling only):
/// returns certified enclosures of the real and imaginary parts.
pub fn sigma_ideal_complex(
    stream: &NormStream,
    chi: &DirichletCharacter,
    r: &BigRational,
    ideal: &IdealFactorization,
    bits: u32,
) -> Result<(Enclosure, Enclosure)> {
    let mut re = Enclosure::one(bits);
    let mut im = Enclosure::zero(bits);
    for &(k, e) in &ideal.factors {
        let entry = stream.entries()[k];
        let x = int_pow(&BigUint::from(entry.norm), &-r.clone(), bits)?;
        let mut term_re = Enclosure::zero(bits);
        let mut term_im = Enclosure::zero(bits);
        for a in 0..=e {
            let weight = x.pow_i64(a as i64)?;
            match chi.eval((entry.norm as u128).pow(a)) {
                CharValue::Zero => {}
                CharValue::Root { num, den } => {
                    let (c, s) = root_of_unity(num, den, bits)?;
                    term_re = term_re.add(&weight.mul(&c));
                    term_im = term_im.add(&weight.mul(&s));
                }
            }
        }
        let new_re = re.mul(&term_re).sub(&im.mul(&term_im));
        let new_im = re.mul(&term_im).add(&im.mul(&term_re));
        re = new_re;
        im = new_im;
    }
    Ok((re, im))
}

/// Certified `(cos, sin)` of `2π num/den`.
pub fn root_of_unity(num: u32, den: u32, bits: u32) -> Result<(Enclosure, Enclosure)> {
    use astro_float::RoundingMode;
    if num == 0 {
        return Ok((Enclosure::one(bits), Enclosure::zero(bits)));
    }
    if 2 * num == den {
        return Ok((Enclosure::one(bits).neg(), Enclosure::zero(bits)));
    }
    if 4 * num == den {
        return Ok((Enclosure::zero(bits), Enclosure::one(bits)));
    }
    if 4 * num == 3 * den {
        return Ok((Enclosure::zero(bits), Enclosure::one(bits).neg()));
    }
    let p = bits as usize + 16;
    let angle = |rm: RoundingMode| {
        crate::rigor::rational_to_float(
            &(BigRational::new(BigInt::from(2 * num as i64), BigInt::from(den as i64))),
            bits + 16,
            rm,
        )
    };
    // enclosure of 2π·num/den via enclosure of π
    let (pi_lo, pi_hi) = crate::rigor::pi_bounds(bits + 16);
    let th_lo = angle(RoundingMode::Down).mul(&pi_lo, p, RoundingMode::Down);
    let th_hi = angle(RoundingMode::Up).mul(&pi_hi, p, RoundingMode::Up);
    let theta = Enclosure::from_floats(th_lo, th_hi, bits + 16)?;
    let c = theta.cos()?;
    let s = theta.sin()?;
    Ok((c.at_bits(bits), s.at_bits(bits)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn stream(field: &FieldSpec, limit: u64) -> NormStream {
        field.norm_stream(limit, &Primes::default()).unwrap()
    }

    #[test]
    fn rational_stream_is_primes() {
        let s = stream(&FieldSpec::Rational, 10);
        let norms: Vec<u64> = s.entries().iter().map(|e| e.norm).collect();
        assert_eq!(norms, vec![2, 3, 5, 7]);
    }

    #[test]
    fn gaussian_stream_small_norms() {
        // Q(i): 2 ramified (one ideal, norm 2), 5 splits (two ideals), 3
        // inert (norm 9).
        let k = FieldSpec::quadratic(-1).unwrap();
        let s = stream(&k, 10);
        let norms: Vec<u64> = s.entries().iter().map(|e| e.norm).collect();
        assert_eq!(norms, vec![2, 5, 5, 9]);
        assert_eq!(s.multiplicity(5), 2);
        assert_eq!(s.multiplicity(2), 1);
        let first = s.entries()[0];
        assert_eq!((first.e, first.f), (2, 1));
    }

    #[test]
    fn cyclotomic_five_stream() {
        // Q(zeta_5): 5 totally ramified (norm 5 once); 11 ≡ 1 mod 5 splits
        // completely (4 ideals of norm 11); 2 has order 4 mod 5 (norm 16).
        let k = FieldSpec::cyclotomic(5).unwrap();
        let s = stream(&k, 20);
        let norms: Vec<u64> = s.entries().iter().map(|e| e.norm).collect();
        assert_eq!(norms, vec![5, 11, 11, 11, 11, 16]);
        let ram = s.entries()[0];
        assert_eq!((ram.e, ram.f), (4, 1));
    }

    #[test]
    fn efg_product_is_degree() {
        let primes = Primes::default();
        let fields = [
            FieldSpec::Rational,
            FieldSpec::quadratic(-1).unwrap(),
            FieldSpec::quadratic(5).unwrap(),
            FieldSpec::cyclotomic(5).unwrap(),
            FieldSpec::cyclotomic(12).unwrap(),
        ];
        let table = primes.snapshot(200).unwrap();
        for field in &fields {
            for &p in table.as_slice().iter().take(40) {
                let split = field.splitting(p).unwrap();
                assert_eq!(split.degree_sum(), field.degree(), "p={p} {field:?}");
            }
        }
    }

    #[test]
    fn ideal_count_examples() {
        let gauss = FieldSpec::quadratic(-1).unwrap();
        assert_eq!(ideal_count(&gauss, 1).unwrap(), 1);
        assert_eq!(ideal_count(&gauss, 25).unwrap(), 3);
        assert_eq!(ideal_count(&gauss, 3).unwrap(), 0);
    }

    #[test]
    fn gaussian_ideal_count_matches_enumeration() {
        // Brute force: ideals of Z[i] of norm n correspond to divisor
        // combinations from the stream; enumerate products of stream prime
        // powers and count by norm.
        let gauss = FieldSpec::quadratic(-1).unwrap();
        let limit = 2000u64;
        let s = stream(&gauss, limit);
        let mut counts = vec![0u64; (limit + 1) as usize];
        // DFS over stream entries
        fn dfs(
            entries: &[StreamEntry],
            idx: usize,
            norm_acc: u64,
            limit: u64,
            counts: &mut [u64],
        ) {
            if idx == entries.len() {
                counts[norm_acc as usize] += 1;
                return;
            }
            let base = entries[idx].norm;
            let mut n = norm_acc;
            loop {
                dfs(entries, idx + 1, n, limit, counts);
                n = match n.checked_mul(base) {
                    Some(v) if v <= limit => v,
                    _ => break,
                };
            }
        }
        dfs(s.entries(), 0, 1, limit, &mut counts);
        for n in 1..=limit {
            assert_eq!(
                ideal_count(&gauss, n).unwrap(),
                counts[n as usize],
                "norm {n}"
            );
        }
    }

    #[test]
    fn prime_ideal_count_examples() {
        assert_eq!(prime_ideal_count(&FieldSpec::Rational, 7).unwrap(), 1);
        let gauss = FieldSpec::quadratic(-1).unwrap();
        assert_eq!(prime_ideal_count(&gauss, 5).unwrap(), 2);
        assert_eq!(prime_ideal_count(&gauss, 4).unwrap(), 0);
        assert_eq!(prime_ideal_count(&gauss, 2).unwrap(), 1);
    }

    #[test]
    fn tuple_divisor_count_examples() {
        for s in 1..=5u32 {
            assert_eq!(tuple_divisor_count(s, 1), 1);
        }
        assert_eq!(tuple_divisor_count(2, 12), 6);
        // triples with product 4: brute force
        let mut brute = 0u32;
        for a in 1..=4u64 {
            for b in 1..=4 {
                for c in 1..=4 {
                    if a * b * c == 4 {
                        brute += 1;
                    }
                }
            }
        }
        assert_eq!(brute, 6);
        assert_eq!(tuple_divisor_count(3, 4), brute as u128);
    }

    #[test]
    fn ideal_count_bounded_by_tuple_count() {
        let primes = Primes::default();
        let _ = primes;
        let fields = [
            FieldSpec::Rational,
            FieldSpec::quadratic(-1).unwrap(),
            FieldSpec::quadratic(5).unwrap(),
            FieldSpec::cyclotomic(5).unwrap(),
        ];
        for field in &fields {
            let s = field.degree();
            for n in 1..=10_000u64 {
                let a = ideal_count(field, n).unwrap() as u128;
                let d = tuple_divisor_count(s, n);
                assert!(a <= d, "a_K({n}) = {a} > d_{s}({n}) = {d} on {field:?}");
            }
        }
    }

    #[test]
    fn sigma_examples() {
        let bits = 96;
        // K = Q, trivial character, r = 2, ideal (6): 1 + 1/4 + 1/9 + 1/36 = 25/18
        let q = FieldSpec::Rational;
        let s = stream(&q, 10);
        let chi = DirichletCharacter::principal(1);
        // (6) = index of 2 (0) and 3 (1)
        let ideal = IdealFactorization::new(vec![(0, 1), (1, 1)]).unwrap();
        let v = sigma_ideal(&s, &chi, &rat(2, 1), &ideal, bits).unwrap();
        assert_eq!(v.exact_value(), Some(&rat(25, 18)));

        // unit ideal -> exactly 1
        let unit = IdealFactorization::unit();
        let v1 = sigma_ideal(&s, &chi, &rat(2, 1), &unit, bits).unwrap();
        assert_eq!(v1.exact_value(), Some(&rat(1, 1)));

        // Q(i), prime above 5: 1 + 1/25 = 26/25
        let gauss = FieldSpec::quadratic(-1).unwrap();
        let gs = stream(&gauss, 10);
        let p5 = gs.entries().iter().position(|e| e.norm == 5).unwrap();
        let ideal5 = IdealFactorization::new(vec![(p5, 1)]).unwrap();
        let v5 = sigma_ideal(&gs, &chi, &rat(2, 1), &ideal5, bits).unwrap();
        assert_eq!(v5.exact_value(), Some(&rat(26, 25)));
    }

    #[test]
    fn sigma_multiplicative_on_coprime_ideals() {
        let gauss = FieldSpec::quadratic(-1).unwrap();
        let s = stream(&gauss, 200);
        let chi = DirichletCharacter::kronecker(-4).unwrap();
        let r = rat(3, 1);
        let mut seed = 42u64;
        let mut next = move || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
            (seed >> 33) as usize
        };
        for _ in 0..1000 {
            let i = next() % s.len();
            let j = next() % s.len();
            if i == j {
                continue;
            }
            let ei = 1 + (next() % 3) as u32;
            let ej = 1 + (next() % 3) as u32;
            let a = IdealFactorization::new(vec![(i, ei)]).unwrap();
            let b = IdealFactorization::new(vec![(j, ej)]).unwrap();
            let ab = IdealFactorization::new(vec![(i, ei), (j, ej)]).unwrap();
            let va = sigma_ideal(&s, &chi, &r, &a, 96).unwrap();
            let vb = sigma_ideal(&s, &chi, &r, &b, 96).unwrap();
            let vab = sigma_ideal(&s, &chi, &r, &ab, 96).unwrap();
            // integer r: exact values multiply exactly
            assert_eq!(
                vab.exact_value().unwrap(),
                &(va.exact_value().unwrap() * vb.exact_value().unwrap())
            );
        }
    }

    #[test]
    fn divisor_count_of_norm_examples() {
        let gauss = FieldSpec::quadratic(-1).unwrap();
        let s = stream(&gauss, 10);
        let unit = IdealFactorization::unit();
        assert_eq!(divisor_count_of_norm(&s, &unit, 1), 1);
        // product of both norm-5 primes
        let fives: Vec<usize> = s
            .entries()
            .iter()
            .enumerate()
            .filter(|(_, e)| e.norm == 5)
            .map(|(i, _)| i)
            .collect();
        let both = IdealFactorization::new(vec![(fives[0], 1), (fives[1], 1)]).unwrap();
        assert_eq!(divisor_count_of_norm(&s, &both, 5), 2);
        assert_eq!(divisor_count_of_norm(&s, &both, 25), 1);
    }

    #[test]
    fn polynomial_field_stream_matches_quadratic() {
        // x^2 + 1 defines Q(i); ramified prime 2 declared.
        let primes = Primes::default();
        let poly = PolyZ::from_i64(&[1, 0, 1]);
        let k = FieldSpec::polynomial(
            poly,
            true,
            vec![RamifiedPrime {
                p: 2,
                e: 2,
                f: 1,
                g: 1,
            }],
            &primes,
        )
        .unwrap();
        let s1 = k.norm_stream(500, &primes).unwrap();
        let gauss = FieldSpec::quadratic(-1).unwrap();
        let s2 = gauss.norm_stream(500, &primes).unwrap();
        let n1: Vec<u64> = s1.entries().iter().map(|e| e.norm).collect();
        let n2: Vec<u64> = s2.entries().iter().map(|e| e.norm).collect();
        assert_eq!(n1, n2);
    }

    #[test]
    fn polynomial_field_untabulated_ramified_prime_fails() {
        let primes = Primes::default();
        let poly = PolyZ::from_i64(&[1, 0, 1]);
        let k = FieldSpec::polynomial(poly, true, vec![], &primes).unwrap();
        match k.norm_stream(10, &primes) {
            Err(Error::UntabulatedRamified { p: 2 }) => {}
            other => panic!("expected untabulated ramified prime, got {other:?}"),
        }
    }

    #[test]
    fn non_galois_polynomial_detected() {
        // x^3 - 2 is not Galois: 5 factors as (deg 1)(deg 2) mod 5.
        let primes = Primes::default();
        let poly = PolyZ::from_i64(&[-2, 0, 0, 1]);
        let k = FieldSpec::polynomial(
            poly,
            true,
            vec![
                RamifiedPrime {
                    p: 2,
                    e: 3,
                    f: 1,
                    g: 1,
                },
                RamifiedPrime {
                    p: 3,
                    e: 3,
                    f: 1,
                    g: 1,
                },
            ],
            &primes,
        )
        .unwrap();
        match k.norm_stream(30, &primes) {
            Err(Error::NotGalois { p, .. }) => assert!(p == 5 || p == 7, "p={p}"),
            other => panic!("expected Galois failure, got {other:?}"),
        }
    }

    #[test]
    fn tie_reversal_preserves_norm_multiset() {
        let k = FieldSpec::cyclotomic(5).unwrap();
        let s = stream(&k, 200);
        let r = s.with_reversed_ties();
        let a: Vec<u64> = s.entries().iter().map(|e| e.norm).collect();
        let b: Vec<u64> = r.entries().iter().map(|e| e.norm).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn field_descriptor_roundtrip() {
        let primes = Primes::default();
        let json = r#"{"type":"quadratic","d":-1}"#;
        let desc: FieldDescriptor = serde_json::from_str(json).unwrap();
        let k = FieldSpec::from_descriptor(&desc, &primes).unwrap();
        assert_eq!(k.degree(), 2);
        let desc2 = k.to_descriptor();
        let j2 = serde_json::to_string(&desc2).unwrap();
        assert!(j2.contains("\"quadratic\""));
    }
}
