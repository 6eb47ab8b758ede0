//! Dirichlet characters with exact root-of-unity values.
//!
//! Values are never floats: a character value is either zero or `e^{2πi k/n}`
//! stored as the reduced fraction `k/n` of a full turn. Sign data is exact,
//! which is what the closure combinatorics rely on. Conversion to enclosures
//! happens only at the analytic boundary (complex sampling).

use std::sync::Arc;

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest modulus for which full character enumeration is supported.
pub const ENUMERATION_CAP: u64 = 1 << 20;

/// An exact character value: zero or a root of unity `e^{2πi·num/den}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CharValue {
    Zero,
    /// Reduced fraction of a full turn; `0 <= num < den`, `gcd(num, den) = 1`.
    Root { num: u32, den: u32 },
}

impl CharValue {
    pub const ONE: CharValue = CharValue::Root { num: 0, den: 1 };
    pub const MINUS_ONE: CharValue = CharValue::Root { num: 1, den: 2 };

    pub fn root(num: u32, den: u32) -> CharValue {
        debug_assert!(den > 0);
        let num = num % den;
        let g = num.gcd(&den);
        if num == 0 {
            return CharValue::Root { num: 0, den: 1 };
        }
        CharValue::Root {
            num: num / g,
            den: den / g,
        }
    }

    pub fn from_sign(s: i8) -> CharValue {
        match s {
            0 => CharValue::Zero,
            1 => CharValue::ONE,
            -1 => CharValue::MINUS_ONE,
            _ => unreachable!("sign out of range"),
        }
    }

    pub fn mul(self, other: CharValue) -> CharValue {
        match (self, other) {
            (CharValue::Zero, _) | (_, CharValue::Zero) => CharValue::Zero,
            (CharValue::Root { num: a, den: b }, CharValue::Root { num: c, den: d }) => {
                // a/b + c/d mod 1
                let l = (b as u64).lcm(&(d as u64));
                let s = ((a as u64) * (l / b as u64) + (c as u64) * (l / d as u64)) % l;
                CharValue::root(s as u32, l as u32)
            }
        }
    }

    /// The value as a real sign, if it is one of {0, 1, -1}.
    pub fn as_sign(self) -> Option<i8> {
        match self {
            CharValue::Zero => Some(0),
            CharValue::Root { num: 0, den: 1 } => Some(1),
            CharValue::Root { num: 1, den: 2 } => Some(-1),
            _ => None,
        }
    }

    pub fn is_one(self) -> bool {
        self == CharValue::ONE
    }

    /// Multiplicative order of the root (`None` for zero).
    pub fn order(self) -> Option<u32> {
        match self {
            CharValue::Zero => None,
            CharValue::Root { den, .. } => Some(den),
        }
    }

    pub fn pow(self, e: u64) -> CharValue {
        match self {
            CharValue::Zero => {
                if e == 0 {
                    CharValue::ONE
                } else {
                    CharValue::Zero
                }
            }
            CharValue::Root { num, den } => {
                let r = ((num as u64) * (e % den as u64)) % den as u64;
                CharValue::root(r as u32, den)
            }
        }
    }
}

#[derive(Clone, Debug)]
enum Kind {
    Principal,
    Kronecker { d: i64 },
    Table(Arc<TableData>),
}

#[derive(Debug)]
struct TableData {
    /// Value at each residue `0..m` (index = residue).
    values: Vec<CharValue>,
}

/// A Dirichlet character of modulus `m`.
#[derive(Clone, Debug)]
pub struct DirichletCharacter {
    modulus: u128,
    kind: Kind,
    order: u32,
    is_real: bool,
    is_principal: bool,
}

impl DirichletCharacter {
    /// The principal character mod `m`: 1 on residues coprime to `m`, else 0.
    pub fn principal(m: u128) -> DirichletCharacter {
        assert!(m >= 1, "modulus must be positive");
        DirichletCharacter {
            modulus: m,
            kind: Kind::Principal,
            order: 1,
            is_real: true,
            is_principal: true,
        }
    }

    /// The real character given by the Kronecker symbol `(d|·)` for a
    /// fundamental discriminant `d`; modulus `|d|`.
    pub fn kronecker(d: i64) -> Result<DirichletCharacter> {
        if !is_fundamental_discriminant(d) {
            return Err(Error::NotFundamental(d));
        }
        Ok(DirichletCharacter {
            modulus: d.unsigned_abs() as u128,
            kind: Kind::Kronecker { d },
            order: if d == 1 { 1 } else { 2 },
            is_real: true,
            is_principal: d == 1,
        })
    }

    /// Builds a character from an explicit residue-value table and validates
    /// complete multiplicativity; rejects invalid tables with a witness pair.
    pub fn from_table(m: u64, values: Vec<CharValue>) -> Result<DirichletCharacter> {
        if m == 0 || values.len() != m as usize {
            return Err(Error::InvalidInput(format!(
                "value table must have exactly m={m} entries"
            )));
        }
        if m == 1 {
            if values[0] != CharValue::ONE {
                return Err(Error::InvalidInput(
                    "modulus-1 character must be constant 1".into(),
                ));
            }
        } else {
            for (a, v) in values.iter().enumerate() {
                let coprime = (a as u64).gcd(&m) == 1;
                match (coprime, v) {
                    (false, CharValue::Zero) => {}
                    (false, _) => {
                        return Err(Error::InvalidInput(format!(
                            "chi({a}) must be zero (gcd({a},{m}) > 1)"
                        )))
                    }
                    (true, CharValue::Zero) => {
                        return Err(Error::InvalidInput(format!(
                            "chi({a}) must be nonzero (gcd({a},{m}) = 1)"
                        )))
                    }
                    (true, _) => {}
                }
            }
            if values[1] != CharValue::ONE {
                return Err(Error::InvalidInput("chi(1) must equal 1".into()));
            }
            for a in 0..m {
                for b in a..m {
                    let ab = (a as u128 * b as u128 % m as u128) as u64;
                    let lhs = values[a as usize].mul(values[b as usize]);
                    if lhs != values[ab as usize] {
                        return Err(Error::NotMultiplicative { a, b, ab });
                    }
                }
            }
        }
        let order = values
            .iter()
            .filter_map(|v| v.order())
            .fold(1u32, |acc, d| acc.lcm(&d));
        let is_real = order <= 2;
        let is_principal = values
            .iter()
            .all(|v| matches!(v, CharValue::Zero) || v.is_one());
        Ok(DirichletCharacter {
            modulus: m as u128,
            kind: Kind::Table(Arc::new(TableData { values })),
            order,
            is_real,
            is_principal,
        })
    }

    pub fn modulus(&self) -> u128 {
        self.modulus
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    /// True when every value lies in {-1, 0, 1}.
    pub fn is_real(&self) -> bool {
        self.is_real
    }

    pub fn is_principal(&self) -> bool {
        self.is_principal
    }

    /// Exact value at `n`.
    pub fn eval(&self, n: u128) -> CharValue {
        match &self.kind {
            Kind::Principal => {
                if self.modulus == 1 || gcd_u128(n % self.modulus, self.modulus) == 1 {
                    CharValue::ONE
                } else {
                    CharValue::Zero
                }
            }
            Kind::Kronecker { d } => CharValue::from_sign(kronecker_symbol(*d, n)),
            Kind::Table(t) => t.values[(n % self.modulus) as usize],
        }
    }

    /// Value at `n` as a sign in {-1, 0, 1}; errors for non-real characters.
    pub fn eval_real(&self, n: u128) -> Result<i8> {
        self.eval(n).as_sign().ok_or_else(|| {
            Error::NotRealCharacter(format!("value at {n} is a higher-order root of unity"))
        })
    }

    /// All characters mod `m` via the unit-group decomposition; `phi(m)` of
    /// them, filtered to real-valued ones on request.
    pub fn enumerate(m: u64, real_only: bool) -> Result<Vec<DirichletCharacter>> {
        if m == 0 {
            return Err(Error::InvalidInput("modulus must be positive".into()));
        }
        if m > ENUMERATION_CAP {
            return Err(Error::InvalidInput(format!(
                "modulus {m} exceeds enumeration cap {ENUMERATION_CAP}"
            )));
        }
        if m == 1 {
            return Ok(vec![DirichletCharacter::principal(1)]);
        }
        let components = unit_group_components(m);
        let dlogs = discrete_log_table(m, &components);
        let orders: Vec<u64> = components.iter().map(|c| c.order).collect();
        let mut tuples = vec![vec![0u64; orders.len()]];
        for (i, &d) in orders.iter().enumerate() {
            let mut next = Vec::with_capacity(tuples.len() * d as usize);
            for t in &tuples {
                for v in 0..d {
                    let mut t2 = t.clone();
                    t2[i] = v;
                    next.push(t2);
                }
            }
            tuples = next;
        }
        let mut out = Vec::new();
        for t in tuples {
            let mut values = vec![CharValue::Zero; m as usize];
            for (a, dl) in dlogs.iter().enumerate() {
                if let Some(dl) = dl {
                    let mut v = CharValue::ONE;
                    for (i, &x) in dl.iter().enumerate() {
                        let d = orders[i];
                        let k = (t[i] * (x % d)) % d;
                        v = v.mul(CharValue::root(k as u32, d as u32));
                    }
                    values[a] = v;
                }
            }
            let chi = DirichletCharacter::from_table(m, values)?;
            if !real_only || chi.is_real() {
                out.push(chi);
            }
        }
        // Deterministic order: principal first, then by order, then by the
        // value signature.
        out.sort_by_key(|c| {
            (
                !c.is_principal(),
                c.order(),
                (0..m)
                    .map(|a| format!("{:?}", c.eval(a as u128)))
                    .collect::<Vec<_>>(),
            )
        });
        Ok(out)
    }

    pub fn to_descriptor(&self) -> CharacterDescriptor {
        match &self.kind {
            Kind::Principal => CharacterDescriptor::Principal {
                modulus: self.modulus.to_string(),
            },
            Kind::Kronecker { d } => CharacterDescriptor::Kronecker { d: *d },
            Kind::Table(t) => CharacterDescriptor::Table {
                modulus: self.modulus as u64,
                values: t.values.iter().map(encode_value).collect(),
            },
        }
    }

    pub fn from_descriptor(desc: &CharacterDescriptor) -> Result<DirichletCharacter> {
        match desc {
            CharacterDescriptor::Principal { modulus } => {
                let m: u128 = modulus
                    .parse()
                    .map_err(|_| Error::InvalidInput(format!("bad modulus {modulus:?}")))?;
                if m == 0 {
                    return Err(Error::InvalidInput("modulus must be positive".into()));
                }
                Ok(DirichletCharacter::principal(m))
            }
            CharacterDescriptor::Kronecker { d } => DirichletCharacter::kronecker(*d),
            CharacterDescriptor::Table { modulus, values } => {
                let vals = values
                    .iter()
                    .map(|s| decode_value(s))
                    .collect::<Result<Vec<_>>>()?;
                DirichletCharacter::from_table(*modulus, vals)
            }
        }
    }
}

/// Serialized character descriptor: `{kind, modulus/d/values}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CharacterDescriptor {
    Principal { modulus: String },
    Kronecker { d: i64 },
    Table { modulus: u64, values: Vec<String> },
}

fn encode_value(v: &CharValue) -> String {
    match v {
        CharValue::Zero => "0".into(),
        CharValue::Root { num: 0, den: 1 } => "1".into(),
        CharValue::Root { num: 1, den: 2 } => "-1".into(),
        CharValue::Root { num, den } => format!("{num}/{den}"),
    }
}

fn decode_value(s: &str) -> Result<CharValue> {
    match s.trim() {
        "0" => Ok(CharValue::Zero),
        "1" => Ok(CharValue::ONE),
        "-1" => Ok(CharValue::MINUS_ONE),
        other => {
            let (n, d) = other
                .split_once('/')
                .ok_or_else(|| Error::InvalidInput(format!("bad character value {other:?}")))?;
            let num: u32 = n
                .trim()
                .parse()
                .map_err(|_| Error::InvalidInput(format!("bad character value {other:?}")))?;
            let den: u32 = d
                .trim()
                .parse()
                .map_err(|_| Error::InvalidInput(format!("bad character value {other:?}")))?;
            if den == 0 {
                return Err(Error::InvalidInput("zero denominator in root".into()));
            }
            Ok(CharValue::root(num, den))
        }
    }
}

/// One cyclic factor of `(Z/m)^x`: a generator of order `order` inside the
/// CRT component mod `pm`.
struct Component {
    pm: u64,
    gen: u64,
    order: u64,
}

fn unit_group_components(m: u64) -> Vec<Component> {
    let mut comps = Vec::new();
    let mut rest = m;
    let mut factors = Vec::new();
    let mut p = 2u64;
    while p * p <= rest {
        if rest % p == 0 {
            let mut pk = 1u64;
            while rest % p == 0 {
                rest /= p;
                pk *= p;
            }
            factors.push((p, pk));
        }
        p += 1;
    }
    if rest > 1 {
        factors.push((rest, rest));
    }
    for (p, pk) in factors {
        if p == 2 {
            if pk == 2 {
                // (Z/2)^x is trivial
            } else if pk == 4 {
                comps.push(Component {
                    pm: pk,
                    gen: 3,
                    order: 2,
                });
            } else {
                // (Z/2^k)^x = {±1} x <3> for k >= 3
                comps.push(Component {
                    pm: pk,
                    gen: pk - 1,
                    order: 2,
                });
                comps.push(Component {
                    pm: pk,
                    gen: 3,
                    order: pk / 4,
                });
            }
        } else {
            let phi = pk / p * (p - 1);
            let g = primitive_root_mod_prime_power(p, pk, phi);
            comps.push(Component {
                pm: pk,
                gen: g,
                order: phi,
            });
        }
    }
    comps
}

fn primitive_root_mod_prime_power(p: u64, pk: u64, phi: u64) -> u64 {
    let phi_p = p - 1;
    let prime_factors = small_prime_factors(phi_p);
    let mut g = 2u64;
    loop {
        if g % p != 0 && prime_factors.iter().all(|&q| pow_mod(g, phi_p / q, p) != 1) {
            break;
        }
        g += 1;
    }
    if pk == p {
        return g;
    }
    let factors_k = small_prime_factors(phi);
    let generates = |x: u64| factors_k.iter().all(|&q| pow_mod(x, phi / q, pk) != 1);
    if generates(g) {
        g
    } else {
        g + p
    }
}

fn small_prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            out.push(d);
            while n % d == 0 {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
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

/// For every unit `a mod m`, the exponent vector with respect to the cyclic
/// components: `a ≡ Π gen_i^{e_i}` inside each CRT factor.
fn discrete_log_table(m: u64, components: &[Component]) -> Vec<Option<Vec<u64>>> {
    // Group components by their CRT modulus pm; within a pm with two
    // generators (the 2^k case) solve jointly.
    let mut dlogs: Vec<Option<Vec<u64>>> = vec![None; m as usize];
    // Precompute, per component, residue -> exponent maps for the subgroup
    // generated by gen.
    let mut maps: Vec<std::collections::HashMap<u64, u64>> = Vec::new();
    for c in components {
        let mut map = std::collections::HashMap::new();
        let mut x = 1u64;
        for e in 0..c.order {
            map.entry(x).or_insert(e);
            x = ((x as u128 * c.gen as u128) % c.pm as u128) as u64;
        }
        maps.push(map);
    }
    'outer: for a in 0..m {
        if a.gcd(&m) != 1 {
            continue;
        }
        let mut dl = vec![0u64; components.len()];
        let mut i = 0;
        while i < components.len() {
            let c = &components[i];
            let r = a % c.pm;
            let joint_2k = c.pm % 2 == 0 && c.pm >= 8 && c.gen == c.pm - 1;
            if joint_2k {
                // components[i] is the sign part, components[i+1] the <3> part
                let cyc = &maps[i + 1];
                if let Some(&e) = cyc.get(&r) {
                    dl[i] = 0;
                    dl[i + 1] = e;
                } else if let Some(&e) = cyc.get(&(c.pm - r)) {
                    dl[i] = 1;
                    dl[i + 1] = e;
                } else {
                    continue 'outer;
                }
                i += 2;
            } else {
                match maps[i].get(&r) {
                    Some(&e) => dl[i] = e,
                    None => continue 'outer,
                }
                i += 1;
            }
        }
        dlogs[a as usize] = Some(dl);
    }
    dlogs
}

fn gcd_u128(a: u128, b: u128) -> u128 {
    let (mut a, mut b) = (a, b);
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// True when `d` is a fundamental discriminant: 1, or squarefree `d ≡ 1 mod
/// 4`, or `4k` with `k ≡ 2, 3 mod 4` squarefree.
pub fn is_fundamental_discriminant(d: i64) -> bool {
    if d == 0 {
        return false;
    }
    if d == 1 {
        return true;
    }
    let m4 = d.rem_euclid(4);
    if m4 == 1 {
        is_squarefree(d.unsigned_abs())
    } else if m4 == 0 {
        let k = d / 4;
        let km4 = k.rem_euclid(4);
        (km4 == 2 || km4 == 3) && is_squarefree(k.unsigned_abs())
    } else {
        false
    }
}

pub fn is_squarefree(mut n: u64) -> bool {
    if n == 0 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            n /= d;
            if n % d == 0 {
                return false;
            }
        }
        d += 1;
    }
    true
}

/// Kronecker symbol `(a|n)`.
pub fn kronecker_symbol(a: i64, n: u128) -> i8 {
    if n == 0 {
        return if a == 1 || a == -1 { 1 } else { 0 };
    }
    let mut a = a as i128;
    let mut n = n;
    let mut result: i8 = 1;
    // Strip factors of two from n using (a|2).
    if n % 2 == 0 {
        if a % 2 == 0 {
            return 0;
        }
        let a8 = (a.rem_euclid(8)) as u8;
        let sym2: i8 = if a8 == 1 || a8 == 7 { 1 } else { -1 };
        while n % 2 == 0 {
            n /= 2;
            result *= sym2;
        }
    }
    if n == 1 {
        return result;
    }
    // n odd from here; Jacobi with reciprocity.
    if a < 0 {
        if n % 4 == 3 {
            result = -result;
        }
        a = -a;
    }
    let mut a = (a as u128) % n;
    loop {
        if a == 0 {
            return if n == 1 { result } else { 0 };
        }
        while a % 2 == 0 {
            a /= 2;
            let n8 = n % 8;
            if n8 == 3 || n8 == 5 {
                result = -result;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if a % 4 == 3 && n % 4 == 3 {
            result = -result;
        }
        a %= n;
        if n == 1 {
            return result;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn principal_character_values() {
        let chi = DirichletCharacter::principal(1);
        assert!(chi.is_principal() && chi.is_real());
        assert_eq!(chi.eval(42), CharValue::ONE);

        let chi5 = DirichletCharacter::principal(5);
        assert_eq!(chi5.eval(10), CharValue::Zero);
        assert_eq!(chi5.eval(7), CharValue::ONE);
    }

    #[test]
    fn kronecker_minus_four() {
        let chi = DirichletCharacter::kronecker(-4).unwrap();
        assert!(chi.is_real());
        assert_eq!(chi.modulus(), 4);
        assert_eq!(chi.eval_real(3).unwrap(), -1);
        assert_eq!(chi.eval_real(2).unwrap(), 0);
        assert_eq!(chi.eval_real(5).unwrap(), 1);
        // (-4|p) = 1 iff p ≡ 1 mod 4, by brute-force residue classes.
        for p in [3u128, 5, 7, 11, 13, 17, 19, 23] {
            let expected = if p % 4 == 1 { 1 } else { -1 };
            assert_eq!(chi.eval_real(p).unwrap(), expected, "at {p}");
        }
    }

    #[test]
    fn kronecker_five() {
        let chi = DirichletCharacter::kronecker(5).unwrap();
        // Squares map to 1: (5|4) = (5|2)^2 = 1.
        assert_eq!(chi.eval_real(4).unwrap(), 1);
        // Against Legendre mod 5: residues {1,4} are the squares.
        for n in 1u128..30 {
            let expected = match n % 5 {
                0 => 0,
                1 | 4 => 1,
                _ => -1,
            };
            assert_eq!(chi.eval_real(n).unwrap(), expected, "at {n}");
        }
    }

    #[test]
    fn kronecker_symbol_matches_legendre() {
        for p in [3u64, 5, 7, 11, 13, 17, 19, 23, 29] {
            let mut squares = std::collections::HashSet::new();
            for x in 1..p {
                squares.insert(x * x % p);
            }
            for a in 1..p {
                let expected: i8 = if squares.contains(&a) { 1 } else { -1 };
                assert_eq!(kronecker_symbol(a as i64, p as u128), expected, "({a}|{p})");
            }
            assert_eq!(kronecker_symbol(0, p as u128), 0);
        }
    }

    #[test]
    fn kronecker_periodic_and_multiplicative() {
        for d in [-4i64, 5, -3, 8, -8, 12, 13] {
            let chi = DirichletCharacter::kronecker(d).unwrap();
            let m = d.unsigned_abs() as u128;
            for n in 1u128..60 {
                assert_eq!(chi.eval(n), chi.eval(n + m), "period at {n}, d={d}");
                for k in 1u128..20 {
                    assert_eq!(
                        chi.eval(n * k),
                        chi.eval(n).mul(chi.eval(k)),
                        "mult at {n},{k}, d={d}"
                    );
                }
            }
        }
    }

    #[test]
    fn fundamental_discriminant_classification() {
        for d in [1i64, -4, 5, 8, -8, -3, 12, 13, -7, -11, 21] {
            assert!(is_fundamental_discriminant(d), "{d}");
        }
        for d in [0i64, 2, 3, -5, 6, 7, 9, -9, 16, 25, -12] {
            assert!(!is_fundamental_discriminant(d), "{d}");
        }
    }

    #[test]
    fn enumerate_mod_one_and_five() {
        let all = DirichletCharacter::enumerate(1, false).unwrap();
        assert_eq!(all.len(), 1);
        assert!(all[0].is_principal());

        // (Z/5)^x is cyclic of order 4: 4 characters, 2 real.
        let all5 = DirichletCharacter::enumerate(5, false).unwrap();
        assert_eq!(all5.len(), 4);
        let real5 = DirichletCharacter::enumerate(5, true).unwrap();
        assert_eq!(real5.len(), 2);
        // The nonprincipal real one is the Legendre character.
        let leg = real5.iter().find(|c| !c.is_principal()).unwrap();
        let kron = DirichletCharacter::kronecker(5).unwrap();
        for n in 0..10u128 {
            assert_eq!(leg.eval(n), kron.eval(n));
        }
    }

    #[test]
    fn enumerate_mod_eight_all_real() {
        // (Z/8)^x = C2 x C2: 4 characters, all of order <= 2.
        let all = DirichletCharacter::enumerate(8, false).unwrap();
        assert_eq!(all.len(), 4);
        assert!(all.iter().all(|c| c.is_real()));
    }

    #[test]
    fn enumerated_characters_multiplicative_and_orthogonal() {
        for m in [3u64, 4, 5, 7, 8, 9, 12, 15, 16, 24] {
            let chars = DirichletCharacter::enumerate(m, false).unwrap();
            let phi = (1..=m).filter(|a| a.gcd(&m) == 1).count();
            assert_eq!(chars.len(), phi, "count at m={m}");
            for chi in &chars {
                let mut seed = 0x9e3779b97f4a7c15u64 ^ m;
                for _ in 0..200 {
                    seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
                    let a = (seed >> 16) % (4 * m);
                    seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
                    let b = (seed >> 16) % (4 * m);
                    assert_eq!(
                        chi.eval((a * b) as u128),
                        chi.eval(a as u128).mul(chi.eval(b as u128))
                    );
                }
                if !chi.is_principal() {
                    // orthogonality: the value sum over a full period vanishes
                    let sum = (0..m).fold((0f64, 0f64), |(re, im), a| {
                        match chi.eval(a as u128) {
                            CharValue::Zero => (re, im),
                            CharValue::Root { num, den } => {
                                let th = std::f64::consts::TAU * num as f64 / den as f64;
                                (re + th.cos(), im + th.sin())
                            }
                        }
                    });
                    assert!(
                        sum.0.abs() < 1e-9 && sum.1.abs() < 1e-9,
                        "orthogonality at m={m}"
                    );
                }
            }
        }
    }

    #[test]
    fn table_validation_rejects_bad_tables() {
        let bad = vec![
            CharValue::Zero,
            CharValue::ONE,
            CharValue::ONE,
            CharValue::MINUS_ONE,
            CharValue::ONE,
        ];
        match DirichletCharacter::from_table(5, bad) {
            Err(Error::NotMultiplicative { .. }) => {}
            other => panic!("expected multiplicativity failure, got {other:?}"),
        }
    }

    #[test]
    fn descriptor_roundtrip() {
        let chi = DirichletCharacter::kronecker(-8).unwrap();
        let desc = chi.to_descriptor();
        let json = serde_json::to_string(&desc).unwrap();
        let back: CharacterDescriptor = serde_json::from_str(&json).unwrap();
        let chi2 = DirichletCharacter::from_descriptor(&back).unwrap();
        for n in 0..40u128 {
            assert_eq!(chi.eval(n), chi2.eval(n));
        }
    }
}
