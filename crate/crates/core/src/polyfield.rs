//! Polynomial arithmetic over F_p and Z: distinct-degree detection,
//! irreducibility, deterministic irreducible search, split polynomials, and
//! integer discriminants via the Sylvester resultant.
//!
//! Only factor *degrees* are computed, never full factorizations — the
//! splitting type of a prime in a number field is determined by the degrees.

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

/// A polynomial over F_p, coefficients ascending, no leading zeros.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolyFp {
    p: u64,
    coeffs: Vec<u64>,
}

impl PolyFp {
    pub fn new(p: u64, mut coeffs: Vec<u64>) -> PolyFp {
        assert!(p >= 2, "modulus must be a prime >= 2");
        for c in &mut coeffs {
            *c %= p;
        }
        while coeffs.len() > 1 && *coeffs.last().unwrap() == 0 {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0);
        }
        PolyFp { p, coeffs }
    }

    pub fn zero(p: u64) -> PolyFp {
        PolyFp::new(p, vec![0])
    }

    pub fn one(p: u64) -> PolyFp {
        PolyFp::new(p, vec![1])
    }

    pub fn x(p: u64) -> PolyFp {
        PolyFp::new(p, vec![0, 1])
    }

    pub fn modulus(&self) -> u64 {
        self.p
    }

    pub fn coeffs(&self) -> &[u64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        if self.is_zero() {
            0
        } else {
            self.coeffs.len() - 1
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0] == 0
    }

    pub fn is_monic(&self) -> bool {
        *self.coeffs.last().unwrap() == 1
    }

    fn mulmod(&self, a: u64, b: u64) -> u64 {
        ((a as u128 * b as u128) % self.p as u128) as u64
    }

    pub fn add(&self, other: &PolyFp) -> PolyFp {
        debug_assert_eq!(self.p, other.p);
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out = vec![0u64; n];
        for (i, o) in out.iter_mut().enumerate() {
            let a = self.coeffs.get(i).copied().unwrap_or(0);
            let b = other.coeffs.get(i).copied().unwrap_or(0);
            *o = (a + b) % self.p;
        }
        PolyFp::new(self.p, out)
    }

    pub fn sub(&self, other: &PolyFp) -> PolyFp {
        debug_assert_eq!(self.p, other.p);
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out = vec![0u64; n];
        for (i, o) in out.iter_mut().enumerate() {
            let a = self.coeffs.get(i).copied().unwrap_or(0);
            let b = other.coeffs.get(i).copied().unwrap_or(0);
            *o = (a + self.p - b) % self.p;
        }
        PolyFp::new(self.p, out)
    }

    pub fn mul(&self, other: &PolyFp) -> PolyFp {
        debug_assert_eq!(self.p, other.p);
        if self.is_zero() || other.is_zero() {
            return PolyFp::zero(self.p);
        }
        let mut out = vec![0u64; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (j, &b) in other.coeffs.iter().enumerate() {
                let idx = i + j;
                out[idx] = (out[idx] + self.mulmod(a, b)) % self.p;
            }
        }
        PolyFp::new(self.p, out)
    }

    /// Remainder of `self` divided by monic-normalizable `other`.
    pub fn rem(&self, other: &PolyFp) -> PolyFp {
        debug_assert_eq!(self.p, other.p);
        assert!(!other.is_zero(), "division by zero polynomial");
        let mut r = self.coeffs.clone();
        let d = other.degree();
        let lead_inv = inv_mod(*other.coeffs.last().unwrap(), self.p);
        while r.len() > d && !(r.len() == 1 && r[0] == 0) {
            let k = r.len() - 1;
            let factor = self.mulmod(r[k], lead_inv);
            if factor != 0 {
                for (j, &c) in other.coeffs.iter().enumerate() {
                    let idx = k - d + j;
                    r[idx] = (r[idx] + self.p - self.mulmod(factor, c)) % self.p;
                }
            }
            r.pop();
            while r.len() > 1 && *r.last().unwrap() == 0 {
                r.pop();
            }
            if r.len() <= d {
                break;
            }
        }
        PolyFp::new(self.p, r)
    }

    pub fn gcd(&self, other: &PolyFp) -> PolyFp {
        let mut a = self.clone();
        let mut b = other.clone();
        while !b.is_zero() {
            let r = a.rem(&b);
            a = b;
            b = r;
        }
        a.monic()
    }

    pub fn monic(&self) -> PolyFp {
        if self.is_zero() {
            return self.clone();
        }
        let lead = *self.coeffs.last().unwrap();
        if lead == 1 {
            return self.clone();
        }
        let inv = inv_mod(lead, self.p);
        PolyFp::new(
            self.p,
            self.coeffs.iter().map(|&c| self.mulmod(c, inv)).collect(),
        )
    }

    pub fn derivative(&self) -> PolyFp {
        if self.degree() == 0 {
            return PolyFp::zero(self.p);
        }
        let out: Vec<u64> = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, &c)| self.mulmod(c, (i as u64) % self.p))
            .collect();
        PolyFp::new(self.p, out)
    }

    /// `base^e mod self` by square-and-multiply.
    pub fn pow_mod(&self, base: &PolyFp, mut e: u128) -> PolyFp {
        let mut acc = PolyFp::one(self.p);
        let mut b = base.rem(self);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&b).rem(self);
            }
            b = b.mul(&b).rem(self);
            e >>= 1;
        }
        acc
    }

    pub fn eval(&self, x: u64) -> u64 {
        let mut acc = 0u64;
        for &c in self.coeffs.iter().rev() {
            acc = (self.mulmod(acc, x % self.p) + c) % self.p;
        }
        acc
    }
}

fn inv_mod(a: u64, p: u64) -> u64 {
    // Extended Euclid; p prime, a != 0 mod p.
    let (mut t, mut new_t) = (0i128, 1i128);
    let (mut r, mut new_r) = (p as i128, (a % p) as i128);
    while new_r != 0 {
        let q = r / new_r;
        (t, new_t) = (new_t, t - q * new_t);
        (r, new_r) = (new_r, r - q * new_r);
    }
    debug_assert_eq!(r, 1, "inverse of non-unit");
    t.rem_euclid(p as i128) as u64
}

/// Degrees of the irreducible factors of a squarefree `f`, as sorted
/// `(degree, count)` pairs. Rejects non-squarefree input with the gcd
/// witness.
pub fn factor_degrees(f: &PolyFp) -> Result<Vec<(u32, u32)>> {
    if f.degree() == 0 {
        return Ok(Vec::new());
    }
    let monic = f.monic();
    let deriv = monic.derivative();
    let g = monic.gcd(&deriv);
    if g.degree() > 0 {
        return Err(Error::NotSquarefree {
            p: f.modulus(),
            witness: format!("{:?}", g.coeffs()),
        });
    }
    let p = f.modulus();
    let mut rest = monic;
    let mut out: Vec<(u32, u32)> = Vec::new();
    let x = PolyFp::x(p);
    let mut h = x.clone();
    let mut d = 0u32;
    while rest.degree() >= 1 {
        d += 1;
        if (rest.degree() as u32) < 2 * d {
            // whatever remains is a single irreducible factor
            out.push((rest.degree() as u32, 1));
            break;
        }
        h = rest.pow_mod(&h, p as u128);
        let diff = h.sub(&x);
        let g = rest.gcd(&diff);
        if g.degree() > 0 {
            let count = g.degree() as u32 / d;
            out.push((d, count));
            // divide rest by g
            rest = poly_div_exact(&rest, &g);
            h = h.rem(&rest);
        }
    }
    out.sort_unstable();
    Ok(out)
}

fn poly_div_exact(a: &PolyFp, b: &PolyFp) -> PolyFp {
    // Long division, asserting zero remainder.
    let p = a.modulus();
    let mut r = a.coeffs().to_vec();
    let d = b.degree();
    let lead_inv = inv_mod(*b.coeffs().last().unwrap(), p);
    let mut q = vec![0u64; r.len().saturating_sub(d)];
    let mm = |x: u64, y: u64| ((x as u128 * y as u128) % p as u128) as u64;
    while r.len() > d && !(r.len() == 1 && r[0] == 0) {
        let k = r.len() - 1;
        let factor = mm(r[k], lead_inv);
        q[k - d] = factor;
        if factor != 0 {
            for (j, &c) in b.coeffs().iter().enumerate() {
                let idx = k - d + j;
                r[idx] = (r[idx] + p - mm(factor, c)) % p;
            }
        }
        r.pop();
        while r.len() > 1 && *r.last().unwrap() == 0 {
            r.pop();
        }
    }
    debug_assert!(r.iter().all(|&c| c == 0), "inexact division");
    PolyFp::new(p, q)
}

/// Irreducibility over F_p: `x^{p^n} ≡ x mod f` plus gcd checks at the
/// maximal proper divisors `n/q`.
pub fn is_irreducible(f: &PolyFp) -> bool {
    let n = f.degree();
    if n == 0 {
        return false;
    }
    if n == 1 {
        return true;
    }
    let monic = f.monic();
    let p = f.modulus();
    let x = PolyFp::x(p);
    // x^{p^n} mod f
    let mut h = x.clone();
    for _ in 0..n {
        h = monic.pow_mod(&h, p as u128);
    }
    if !h.sub(&x).rem(&monic).is_zero() {
        return false;
    }
    let mut prime_divs = Vec::new();
    let mut m = n;
    let mut d = 2usize;
    while d * d <= m {
        if m % d == 0 {
            prime_divs.push(d);
            while m % d == 0 {
                m /= d;
            }
        }
        d += 1;
    }
    if m > 1 {
        prime_divs.push(m);
    }
    for q in prime_divs {
        let e = n / q;
        let mut hq = x.clone();
        for _ in 0..e {
            hq = monic.pow_mod(&hq, p as u128);
        }
        let g = monic.gcd(&hq.sub(&x));
        if g.degree() > 0 {
            return false;
        }
    }
    true
}

/// First monic irreducible polynomial of degree `s` over F_p, scanning
/// coefficient vectors `(c_{s-1}, ..., c_0)` as base-p counters from zero.
pub fn find_irreducible(p: u64, s: u32) -> PolyFp {
    assert!(s >= 1);
    if s == 1 {
        return PolyFp::x(p);
    }
    let s = s as usize;
    let mut counter = vec![0u64; s]; // counter[0] = c_0
    loop {
        let mut coeffs = counter.clone();
        coeffs.push(1);
        let f = PolyFp::new(p, coeffs);
        if is_irreducible(&f) {
            return f;
        }
        // increment base-p counter, c_0 fastest
        let mut i = 0;
        loop {
            counter[i] += 1;
            if counter[i] < p {
                break;
            }
            counter[i] = 0;
            i += 1;
            assert!(i < s, "no irreducible polynomial found (impossible)");
        }
    }
}

/// `x (x-1) ... (x-(s-1)) mod p`: monic of degree `s` with `s` distinct
/// roots; requires `p > s`.
pub fn split_polynomial(p: u64, s: u32) -> Result<PolyFp> {
    if (s as u64) >= p {
        return Err(Error::InvalidInput(format!(
            "split polynomial needs p > s (got p={p}, s={s})"
        )));
    }
    let mut f = PolyFp::one(p);
    for root in 0..s as u64 {
        f = f.mul(&PolyFp::new(p, vec![(p - root) % p, 1]));
    }
    Ok(f)
}

/// A monic (where required) integer polynomial, coefficients ascending.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolyZ {
    coeffs: Vec<BigInt>,
}

impl PolyZ {
    pub fn new(mut coeffs: Vec<BigInt>) -> PolyZ {
        while coeffs.len() > 1 && coeffs.last().unwrap().is_zero() {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(BigInt::zero());
        }
        PolyZ { coeffs }
    }

    pub fn from_i64(coeffs: &[i64]) -> PolyZ {
        PolyZ::new(coeffs.iter().map(|&c| BigInt::from(c)).collect())
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_monic(&self) -> bool {
        self.coeffs.last().unwrap().is_one()
    }

    pub fn derivative(&self) -> PolyZ {
        if self.degree() == 0 {
            return PolyZ::new(vec![BigInt::zero()]);
        }
        PolyZ::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * BigInt::from(i))
                .collect(),
        )
    }

    pub fn reduce_mod(&self, p: u64) -> PolyFp {
        use num_traits::ToPrimitive;
        let bp = BigInt::from(p);
        PolyFp::new(
            p,
            self.coeffs
                .iter()
                .map(|c| {
                    let r = c % &bp;
                    let r = if r.is_negative() { r + &bp } else { r };
                    r.to_u64().expect("residue below a u64 modulus")
                })
                .collect(),
        )
    }
}

/// Remainder tree: reduces one big integer modulo many word-size moduli in
/// `O(M(n) log k)` instead of `k` independent long divisions.
pub struct ModulusTree {
    moduli: Vec<u64>,
    /// levels[0] = leaf moduli, levels.last() = the full product.
    levels: Vec<Vec<BigUint>>,
}

impl ModulusTree {
    pub fn new(moduli: &[u64]) -> ModulusTree {
        assert!(!moduli.is_empty());
        let mut levels: Vec<Vec<BigUint>> =
            vec![moduli.iter().map(|&m| BigUint::from(m)).collect()];
        while levels.last().unwrap().len() > 1 {
            let prev = levels.last().unwrap();
            let mut next = Vec::with_capacity(prev.len().div_ceil(2));
            for pair in prev.chunks(2) {
                next.push(if pair.len() == 2 {
                    &pair[0] * &pair[1]
                } else {
                    pair[0].clone()
                });
            }
            levels.push(next);
        }
        ModulusTree {
            moduli: moduli.to_vec(),
            levels,
        }
    }

    pub fn moduli(&self) -> &[u64] {
        &self.moduli
    }

    /// `n mod m_i` for every leaf modulus, with the representative in
    /// `[0, m_i)`.
    pub fn reduce(&self, n: &BigInt) -> Vec<u64> {
        use num_integer::Integer as _;
        let top = self.levels.last().unwrap()[0].clone();
        let start = n.mod_floor(&BigInt::from(top)).to_biguint().unwrap();
        let mut rems = vec![start];
        for level in self.levels.iter().rev().skip(1) {
            let mut next = Vec::with_capacity(level.len());
            for (i, m) in level.iter().enumerate() {
                let parent = &rems[i / 2];
                next.push(parent % m);
            }
            rems = next;
        }
        rems.into_iter()
            .map(|r| r.to_u64_digits().first().copied().unwrap_or(0))
            .collect()
    }
}

/// Resultant of `f` and `g` as the determinant of the Sylvester matrix,
/// computed by fraction-free (Bareiss) elimination.
pub fn resultant(f: &PolyZ, g: &PolyZ) -> BigInt {
    let n = f.degree();
    let m = g.degree();
    if n == 0 {
        return num_traits::pow::pow(f.coeffs()[0].clone(), m);
    }
    if m == 0 {
        return num_traits::pow::pow(g.coeffs()[0].clone(), n);
    }
    let size = n + m;
    let mut mat = vec![vec![BigInt::zero(); size]; size];
    // m rows of f's coefficients (descending), n rows of g's.
    for (row, mrow) in mat.iter_mut().enumerate().take(m) {
        for (k, c) in f.coeffs().iter().rev().enumerate() {
            mrow[row + k] = c.clone();
        }
    }
    for row in 0..n {
        for (k, c) in g.coeffs().iter().rev().enumerate() {
            mat[m + row][row + k] = c.clone();
        }
    }
    bareiss_determinant(mat)
}

fn bareiss_determinant(mut m: Vec<Vec<BigInt>>) -> BigInt {
    let n = m.len();
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n {
        // pivot
        if m[k][k].is_zero() {
            let swap = (k + 1..n).find(|&r| !m[r][k].is_zero());
            match swap {
                Some(r) => {
                    m.swap(k, r);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let num = &m[i][j] * &m[k][k] - &m[i][k] * &m[k][j];
                m[i][j] = num / &prev;
            }
            m[i][k] = BigInt::zero();
        }
        prev = m[k][k].clone();
    }
    sign * m[n - 1][n - 1].clone()
}

/// Discriminant of a monic integer polynomial of degree >= 2:
/// `(-1)^{s(s-1)/2} Res(f, f')`.
pub fn discriminant(f: &PolyZ) -> Result<BigInt> {
    if !f.is_monic() {
        return Err(Error::InvalidInput(
            "discriminant requires a monic polynomial".into(),
        ));
    }
    let s = f.degree();
    if s < 2 {
        return Err(Error::InvalidInput(
            "discriminant requires degree >= 2".into(),
        ));
    }
    let res = resultant(f, &f.derivative());
    let sign = if (s * (s - 1) / 2) % 2 == 0 { 1 } else { -1 };
    Ok(BigInt::from(sign) * res)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factor_degrees_examples() {
        // x^2 + 1 mod 5 has roots 2, 3
        let f = PolyFp::new(5, vec![1, 0, 1]);
        assert_eq!(factor_degrees(&f).unwrap(), vec![(1, 2)]);
        // x^2 + 1 mod 3 is irreducible
        let f = PolyFp::new(3, vec![1, 0, 1]);
        assert_eq!(factor_degrees(&f).unwrap(), vec![(2, 1)]);
        // x mod 7
        let f = PolyFp::x(7);
        assert_eq!(factor_degrees(&f).unwrap(), vec![(1, 1)]);
    }

    #[test]
    fn factor_degrees_rejects_non_squarefree() {
        // (x+1)^2 mod 5
        let f = PolyFp::new(5, vec![1, 2, 1]);
        match factor_degrees(&f) {
            Err(Error::NotSquarefree { p: 5, .. }) => {}
            other => panic!("expected squarefree failure, got {other:?}"),
        }
    }

    #[test]
    fn irreducibility_examples() {
        assert!(is_irreducible(&PolyFp::new(2, vec![1, 1, 1]))); // x^2+x+1 mod 2
        assert!(!is_irreducible(&PolyFp::new(2, vec![1, 0, 1]))); // (x+1)^2
    }

    #[test]
    fn irreducibility_matches_brute_force_for_cubics_mod_5() {
        // x^3 + 2x + 1 mod 5 and friends: brute force over all roots and all
        // monic quadratic divisors.
        let p = 5u64;
        let brute = |f: &PolyFp| -> bool {
            for x in 0..p {
                if f.eval(x) == 0 {
                    return false;
                }
            }
            for a in 0..p {
                for b in 0..p {
                    let q = PolyFp::new(p, vec![b, a, 1]);
                    if f.rem(&q).is_zero() {
                        return false;
                    }
                }
            }
            true
        };
        for c0 in 0..p {
            for c1 in 0..p {
                for c2 in 0..p {
                    let f = PolyFp::new(p, vec![c0, c1, c2, 1]);
                    assert_eq!(is_irreducible(&f), brute(&f), "{:?}", f.coeffs());
                }
            }
        }
    }

    #[test]
    fn irreducible_iff_single_full_degree_factor() {
        for p in [2u64, 3, 5, 7] {
            for deg in 1..=3usize {
                let total = (p as usize).pow(deg as u32);
                for idx in 0..total {
                    let mut coeffs = Vec::with_capacity(deg + 1);
                    let mut rest = idx;
                    for _ in 0..deg {
                        coeffs.push((rest % p as usize) as u64);
                        rest /= p as usize;
                    }
                    coeffs.push(1);
                    let f = PolyFp::new(p, coeffs);
                    if let Ok(degrees) = factor_degrees(&f) {
                        let irr = is_irreducible(&f);
                        let single = degrees == vec![(deg as u32, 1)];
                        assert_eq!(irr, single, "p={p} f={:?}", f.coeffs());
                        // degree sum invariant
                        let sum: u32 = degrees.iter().map(|&(d, c)| d * c).sum();
                        assert_eq!(sum as usize, deg);
                    }
                }
            }
        }
    }

    #[test]
    fn find_irreducible_first_in_lex_order() {
        assert_eq!(find_irreducible(2, 2).coeffs(), &[1, 1, 1]); // x^2+x+1
        assert_eq!(find_irreducible(5, 1).coeffs(), &[0, 1]); // x
        assert_eq!(find_irreducible(3, 2).coeffs(), &[1, 0, 1]); // x^2+1
    }

    #[test]
    fn split_polynomial_examples() {
        // x^2 - x = x^2 + 4x mod 5
        assert_eq!(split_polynomial(5, 2).unwrap().coeffs(), &[0, 4, 1]);
        // x^3 - 3x^2 + 2x mod 7
        assert_eq!(split_polynomial(7, 3).unwrap().coeffs(), &[0, 2, 4, 1]);
        assert!(split_polynomial(3, 3).is_err());
    }

    #[test]
    fn discriminant_quadratics() {
        // x^2 + 1 -> -4; x^2 - 5 -> 20
        assert_eq!(
            discriminant(&PolyZ::from_i64(&[1, 0, 1])).unwrap(),
            BigInt::from(-4)
        );
        assert_eq!(
            discriminant(&PolyZ::from_i64(&[-5, 0, 1])).unwrap(),
            BigInt::from(20)
        );
    }

    #[test]
    fn discriminant_cubic_matches_closed_form() {
        // For x^3 + a x^2 + b x + c:
        // disc = 18abc - 4a^3 c + a^2 b^2 - 4 b^3 - 27 c^2.
        let closed = |a: i64, b: i64, c: i64| -> BigInt {
            BigInt::from(18 * a * b * c)
                - BigInt::from(4) * BigInt::from(a).pow(3) * BigInt::from(c)
                + BigInt::from(a * a * b * b)
                - BigInt::from(4) * BigInt::from(b).pow(3)
                - BigInt::from(27 * c * c)
        };
        let f = PolyZ::from_i64(&[147, 0, 90, 1]); // x^3 + 90x^2 + 147
        assert_eq!(discriminant(&f).unwrap(), closed(90, 0, 147));
        for (a, b, c) in [(0i64, 2, 1), (1, -3, 2), (-4, 0, 9), (7, 5, -11)] {
            let f = PolyZ::from_i64(&[c, b, a, 1]);
            assert_eq!(discriminant(&f).unwrap(), closed(a, b, c), "({a},{b},{c})");
        }
    }

    #[test]
    fn discriminant_vanishes_mod_p_iff_not_squarefree() {
        let mut seed = 0x243f6a8885a308d3u64;
        let mut next = move || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            seed >> 33
        };
        let primes = [2u64, 3, 5, 7, 11, 13];
        for _ in 0..1000 {
            let deg = 2 + (next() % 3) as usize;
            let mut coeffs: Vec<i64> = (0..deg).map(|_| (next() % 41) as i64 - 20).collect();
            coeffs.push(1);
            let f = PolyZ::new(coeffs.iter().map(|&c| BigInt::from(c)).collect());
            let disc = discriminant(&f).unwrap();
            let p = primes[(next() % primes.len() as u64) as usize];
            let fp = f.reduce_mod(p);
            if fp.degree() != deg {
                continue; // leading coefficient vanished (cannot happen: monic)
            }
            let disc_zero = (&disc % BigInt::from(p)).is_zero();
            let squarefree = factor_degrees(&fp).is_ok();
            assert_eq!(disc_zero, !squarefree, "f={:?} p={p}", f.coeffs());
        }
    }
}
