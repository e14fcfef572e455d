//! Exact modular and prime arithmetic.
//!
//! Every product of residues goes through a 128-bit intermediate, so any
//! modulus up to `2^63 - 1` is handled without overflow. Transcendental
//! functions are only ever applied to an exactly reduced residue `x mod m`.

use std::f64::consts::TAU;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest modulus accepted anywhere in the crate.
pub const MAX_MODULUS: u64 = (1 << 63) - 1;

/// Witnesses that make Miller-Rabin deterministic for every `n < 3.3 * 10^24`.
const MR_WITNESSES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

#[inline]
pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

#[inline]
pub fn add_mod(a: u64, b: u64, m: u64) -> u64 {
    let s = a as u128 + b as u128;
    (s % m as u128) as u64
}

pub fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Reduces a signed integer into `[0, m)`.
#[inline]
pub fn reduce(x: i128, m: u64) -> u64 {
    x.rem_euclid(m as i128) as u64
}

/// Deterministic primality test for every 64-bit integer.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &w in &MR_WITNESSES {
        if n == w {
            return true;
        }
        if n % w == 0 {
            return false;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for &a in &MR_WITNESSES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// A certified prime modulus.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u64", into = "u64")]
pub struct PrimeModulus {
    p: u64,
    residue_class_mod4: u8,
}

impl PrimeModulus {
    pub fn new(p: u64) -> Result<Self> {
        if p > MAX_MODULUS {
            return Err(Error::ModulusOutOfRange { value: p });
        }
        if !is_prime(p) {
            return Err(Error::NotPrime { value: p });
        }
        Ok(PrimeModulus {
            p,
            residue_class_mod4: (p % 4) as u8,
        })
    }

    #[inline]
    pub fn get(&self) -> u64 {
        self.p
    }

    pub fn residue_class_mod4(&self) -> u8 {
        self.residue_class_mod4
    }

    pub fn is_odd(&self) -> bool {
        self.p != 2
    }

    /// The unit `σ_p` of the quadratic Gauss sum: `1` for `p ≡ 1 (mod 4)`,
    /// `i` for `p ≡ 3 (mod 4)`.
    pub fn gauss_sign(&self) -> Complex64 {
        match self.residue_class_mod4 {
            3 => Complex64::i(),
            _ => Complex64::new(1.0, 0.0),
        }
    }

    pub(crate) fn require_odd(&self) -> Result<()> {
        if self.is_odd() {
            Ok(())
        } else {
            Err(Error::EvenPrime { p: self.p })
        }
    }
}

impl TryFrom<u64> for PrimeModulus {
    type Error = Error;
    fn try_from(p: u64) -> Result<Self> {
        PrimeModulus::new(p)
    }
}

impl From<PrimeModulus> for u64 {
    fn from(p: PrimeModulus) -> u64 {
        p.p
    }
}

impl fmt::Display for PrimeModulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.p)
    }
}

/// An element of `Z/mZ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Residue {
    pub value: u64,
    pub modulus: u64,
}

impl Residue {
    pub fn new(value: i128, modulus: u64) -> Result<Self> {
        if modulus == 0 {
            return Err(Error::InvalidArgument("modulus must be positive".into()));
        }
        Ok(Residue {
            value: reduce(value, modulus),
            modulus,
        })
    }
}

/// Largest prime `p <= n`. Bertrand's postulate guarantees `p >= n/2`.
pub fn largest_prime_leq(n: u64) -> Result<PrimeModulus> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("largest_prime_leq needs n >= 2, got {n}")));
    }
    let mut c = n.min(MAX_MODULUS);
    loop {
        if is_prime(c) {
            return PrimeModulus::new(c);
        }
        c -= 1;
    }
}

/// All primes in `[2, n]` by the sieve of Eratosthenes.
pub fn primes_up_to(n: u64) -> Vec<u64> {
    if n < 2 {
        return Vec::new();
    }
    let n = n as usize;
    let mut composite = vec![false; n + 1];
    let mut out = Vec::new();
    for i in 2..=n {
        if composite[i] {
            continue;
        }
        out.push(i as u64);
        let mut j = i * i;
        while j <= n {
            composite[j] = true;
            j += i;
        }
    }
    out
}

/// Primes in the half-open window `(lo, hi]`, via a segmented sieve.
pub fn primes_in_window(lo: u64, hi: u64) -> Vec<u64> {
    if hi < 2 || hi <= lo {
        return Vec::new();
    }
    let start = lo + 1;
    let len = (hi - start + 1) as usize;
    let mut composite = vec![false; len];
    let root = (hi as f64).sqrt() as u64 + 1;
    for q in primes_up_to(root) {
        let first = (q * q).max(start.div_ceil(q) * q);
        let mut j = first;
        while j <= hi {
            composite[(j - start) as usize] = true;
            j += q;
        }
    }
    (start..=hi)
        .zip(composite)
        .filter(|&(v, c)| v >= 2 && !c)
        .map(|(v, _)| v)
        .collect()
}

/// Primes `q` with `P/2 < q <= P`, ascending.
pub fn primes_in_dyadic(p_param: u64) -> Vec<u64> {
    primes_in_window(p_param / 2, p_param)
}

/// Primes in `(P/2, P]` for a real-valued `P`, as used by the staged constructions.
pub fn primes_in_dyadic_real(p_param: f64) -> Vec<u64> {
    if !(p_param >= 2.0) {
        return Vec::new();
    }
    let hi = p_param.floor() as u64;
    // largest integer <= P/2; integers > P/2 start just above it
    let lo = (p_param / 2.0).floor() as u64;
    primes_in_window(lo, hi)
}

/// Lower bound on the dyadic prime count, valid for `P >= 250`.
pub fn dyadic_count_lower_bound(p_param: f64) -> f64 {
    2.0 * p_param / (5.0 * (p_param / 2.0).ln())
}

/// Upper bound on the dyadic prime count, valid for every `P > 2`.
pub fn dyadic_count_upper_bound(p_param: f64) -> f64 {
    0.76 * p_param / p_param.ln()
}

fn ext_gcd(a: i128, b: i128) -> (i128, i128, i128) {
    let (mut old_r, mut r) = (a, b);
    let (mut old_s, mut s) = (1i128, 0i128);
    let (mut old_t, mut t) = (0i128, 1i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
        (old_t, t) = (t, old_t - q * t);
    }
    (old_r, old_s, old_t)
}

pub fn gcd(a: u64, b: u64) -> u64 {
    let (mut a, mut b) = (a, b);
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Multiplicative inverse of `a` modulo `m`, as a residue in `(0, m)`.
pub fn mod_inverse(a: i64, m: u64) -> Result<Residue> {
    if m < 2 {
        return Err(Error::InvalidArgument(format!("mod_inverse needs m >= 2, got {m}")));
    }
    let ar = reduce(a as i128, m);
    let (g, s, _) = ext_gcd(ar as i128, m as i128);
    if g != 1 {
        return Err(Error::NotCoprime { a, m });
    }
    Residue::new(s, m)
}

/// Inverse of an already reduced residue; panics if it is not invertible.
pub(crate) fn inv_mod(a: u64, m: u64) -> u64 {
    let (g, s, _) = ext_gcd(a as i128, m as i128);
    assert_eq!(g, 1, "{a} is not invertible modulo {m}");
    reduce(s, m)
}

/// Legendre symbol `(d/p)` by Euler's criterion; `0` when `p | d`.
pub fn legendre_symbol(d: i64, p: &PrimeModulus) -> i8 {
    let m = p.get();
    let dr = reduce(d as i128, m);
    if dr == 0 {
        return 0;
    }
    if m == 2 {
        return 1;
    }
    let e = pow_mod(dr, (m - 1) / 2, m);
    if e == 1 {
        1
    } else {
        debug_assert_eq!(e, m - 1);
        -1
    }
}

/// `e^{2πi r/m}` for a residue `r` already reduced into `[0, m)`.
#[inline]
pub fn unit_phase(r: u64, m: u64) -> Complex64 {
    debug_assert!(r < m);
    // Use the representative in (-m/2, m/2] to keep the angle small.
    let signed = if r > m / 2 { r as f64 - m as f64 } else { r as f64 };
    let (s, c) = (TAU * (signed / m as f64)).sin_cos();
    Complex64::new(c, s)
}

/// `e^{2πi x/m}` with `x` reduced exactly before the transcendental call.
pub fn root_of_unity(x: i64, m: u64) -> Result<Complex64> {
    if m == 0 {
        return Err(Error::InvalidArgument("root_of_unity needs m >= 1".into()));
    }
    Ok(unit_phase(reduce(x as i128, m), m))
}

/// Moduli above this fall back to [`unit_phase`] in [`PhaseTable`].
const PHASE_TABLE_MAX_MODULUS: u64 = 1 << 40;

/// `e^{2πi r/m}` for reduced `r` as a product of two exact table lookups,
/// `e(hi·2^s/m) · e(lo/m)` with `r = hi·2^s + lo`. Each table holds about
/// `√m` entries.
#[derive(Clone, Debug)]
pub struct PhaseTable {
    modulus: u64,
    shift: u32,
    hi: Vec<Complex64>,
    lo: Vec<Complex64>,
}

impl PhaseTable {
    pub fn new(m: u64) -> Self {
        assert!(m >= 1, "modulus must be positive");
        if m > PHASE_TABLE_MAX_MODULUS {
            return PhaseTable {
                modulus: m,
                shift: 0,
                hi: Vec::new(),
                lo: Vec::new(),
            };
        }
        let bits = 64 - (m - 1).max(1).leading_zeros();
        let shift = bits.div_ceil(2);
        let hi = (0..=((m - 1) >> shift)).map(|h| unit_phase(h << shift, m)).collect();
        let lo = (0..(1u64 << shift).min(m)).map(|l| unit_phase(l, m)).collect();
        PhaseTable {
            modulus: m,
            shift,
            hi,
            lo,
        }
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    #[inline]
    pub fn phase(&self, r: u64) -> Complex64 {
        debug_assert!(r < self.modulus);
        if self.hi.is_empty() {
            return unit_phase(r, self.modulus);
        }
        let mask = (1u64 << self.shift) - 1;
        self.hi[(r >> self.shift) as usize] * self.lo[(r & mask) as usize]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GaussSumMode {
    Direct,
    ClosedForm,
}

/// The quadratic Gauss sum `Σ_{x ∈ F_p} e_p(d x^2)`.
pub fn gauss_sum(d: i64, p: &PrimeModulus, mode: GaussSumMode) -> Result<Complex64> {
    p.require_odd()?;
    let m = p.get();
    let dr = reduce(d as i128, m);
    if dr == 0 {
        return Err(Error::ZeroMultiplier { p: m });
    }
    Ok(match mode {
        GaussSumMode::Direct => (0..m)
            .map(|x| unit_phase(mul_mod(dr, mul_mod(x, x, m), m), m))
            .sum(),
        GaussSumMode::ClosedForm => {
            p.gauss_sign() * (m as f64).sqrt() * f64::from(legendre_symbol(d, p))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phase_table_matches_direct() {
        for m in [1u64, 2, 3, 7, 1000, 10_007, 1 << 20, 999_983] {
            let table = PhaseTable::new(m);
            let step = (m / 5000).max(1);
            for r in (0..m).step_by(step as usize).chain([m - 1]) {
                assert!((table.phase(r) - unit_phase(r, m)).norm() < 1e-14, "m={m} r={r}");
            }
        }
        let big = PhaseTable::new((1 << 41) + 1);
        assert_eq!(big.phase(12345), unit_phase(12345, (1 << 41) + 1));
    }
    use proptest::prelude::*;

    fn trial_division(n: u64) -> bool {
        if n < 2 {
            return false;
        }
        let mut d = 2;
        while d * d <= n {
            if n % d == 0 {
                return false;
            }
            d += 1;
        }
        true
    }

    #[test]
    fn miller_rabin_matches_trial_division() {
        for n in 0..20_000u64 {
            assert_eq!(is_prime(n), trial_division(n), "n = {n}");
        }
    }

    #[test]
    fn miller_rabin_large_values() {
        assert!(is_prime(999_983));
        assert!(is_prime(1_000_003));
        assert!(!is_prime(MAX_MODULUS));
        assert!(is_prime(9_223_372_036_854_775_783)); // largest prime below 2^63
        // strong pseudoprime to bases 2..=11
        assert!(!is_prime(3_215_031_751));
        assert!(!is_prime(3_825_123_056_546_413_051));
    }

    #[test]
    fn largest_prime_examples() {
        assert_eq!(largest_prime_leq(2).unwrap().get(), 2);
        assert_eq!(largest_prime_leq(100).unwrap().get(), 97);
        assert_eq!(largest_prime_leq(1_000_000).unwrap().get(), 999_983);
        assert!(largest_prime_leq(1).is_err());
    }

    #[test]
    fn largest_prime_against_sieve() {
        let sieve = primes_up_to(5000);
        for n in 2..=5000u64 {
            let expect = *sieve.iter().rfind(|&&q| q <= n).unwrap();
            let got = largest_prime_leq(n).unwrap().get();
            assert_eq!(got, expect);
            assert!(2 * got >= n);
        }
    }

    #[test]
    fn dyadic_examples() {
        assert_eq!(primes_in_dyadic(4), vec![3]);
        assert_eq!(primes_in_dyadic(20), vec![11, 13, 17, 19]);
        // sieve count of primes in (125, 250]
        let v = primes_in_dyadic(250).len();
        assert_eq!(v, 23);
        assert!(v as f64 > dyadic_count_lower_bound(250.0));
    }

    #[test]
    fn dyadic_count_bounds() {
        for p_param in 3..=5000u64 {
            let v = primes_in_dyadic(p_param).len() as f64;
            assert!(v <= dyadic_count_upper_bound(p_param as f64), "P = {p_param}");
            if p_param >= 250 {
                assert!(v > dyadic_count_lower_bound(p_param as f64), "P = {p_param}");
            }
        }
    }

    #[test]
    fn dyadic_matches_trial_division() {
        for p_param in 3..=600u64 {
            let expect: Vec<u64> = (1..=p_param)
                .filter(|&q| 2 * q > p_param && trial_division(q))
                .collect();
            assert_eq!(primes_in_dyadic(p_param), expect);
        }
    }

    #[test]
    fn dyadic_real_parameter() {
        // (12.5, 25] -> 13, 17, 19, 23
        assert_eq!(primes_in_dyadic_real(25.0), vec![13, 17, 19, 23]);
        // (13, 26]: 13 is excluded
        assert_eq!(primes_in_dyadic_real(26.0), vec![17, 19, 23]);
        assert_eq!(primes_in_dyadic_real(26.5), vec![17, 19, 23]);
        assert!(primes_in_dyadic_real(1.5).is_empty());
    }

    #[test]
    fn inverse_examples() {
        assert_eq!(mod_inverse(3, 7).unwrap().value, 5);
        assert_eq!(mod_inverse(1, 13).unwrap().value, 1);
        assert_eq!(mod_inverse(4, 8), Err(Error::NotCoprime { a: 4, m: 8 }));
        assert_eq!(mod_inverse(-3, 7).unwrap().value, 2);
    }

    #[test]
    fn reciprocity_law() {
        for a in 2..=1000u64 {
            for b in 2..=1000u64 {
                if gcd(a, b) != 1 {
                    continue;
                }
                let ia = mod_inverse(a as i64, b).unwrap().value as u128;
                let ib = mod_inverse(b as i64, a).unwrap().value as u128;
                let lhs = ia * a as u128 + ib * b as u128 - 1;
                assert_eq!(lhs % (a as u128 * b as u128), 0, "a={a} b={b}");
            }
        }
    }

    #[test]
    fn legendre_examples() {
        let p7 = PrimeModulus::new(7).unwrap();
        assert_eq!(legendre_symbol(2, &p7), 1);
        assert_eq!(legendre_symbol(3, &p7), -1);
        assert_eq!(legendre_symbol(0, &p7), 0);
        assert_eq!(legendre_symbol(-1, &p7), -1);
    }

    #[test]
    fn legendre_multiplicative_and_matches_squares() {
        for p in primes_up_to(997).into_iter().skip(1) {
            let pm = PrimeModulus::new(p).unwrap();
            let mut squares = vec![false; p as usize];
            for x in 1..p {
                squares[(x * x % p) as usize] = true;
            }
            let chi: Vec<i8> = (0..p as i64).map(|d| legendre_symbol(d, &pm)).collect();
            for d in 1..p as usize {
                assert_eq!(chi[d] == 1, squares[d]);
            }
            for d1 in 1..p {
                for d2 in (1..p).step_by(7) {
                    let prod = (d1 * d2 % p) as usize;
                    assert_eq!(chi[prod], chi[d1 as usize] * chi[d2 as usize]);
                }
            }
        }
    }

    #[test]
    fn roots_of_unity() {
        let close = |a: Complex64, b: Complex64| (a - b).norm() < 1e-15;
        assert!(close(root_of_unity(0, 9).unwrap(), Complex64::new(1.0, 0.0)));
        assert!(close(root_of_unity(2, 4).unwrap(), Complex64::new(-1.0, 0.0)));
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!(close(root_of_unity(1, 8).unwrap(), Complex64::new(h, h)));
        assert!(close(root_of_unity(-7, 8).unwrap(), Complex64::new(h, h)));
        for x in -50..50 {
            assert!((root_of_unity(x, 37).unwrap().norm() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn gauss_sum_examples() {
        let g = |d, p| {
            let pm = PrimeModulus::new(p).unwrap();
            (
                gauss_sum(d, &pm, GaussSumMode::Direct).unwrap(),
                gauss_sum(d, &pm, GaussSumMode::ClosedForm).unwrap(),
            )
        };
        let (d, c) = g(1, 5);
        assert!((d - Complex64::new(5f64.sqrt(), 0.0)).norm() < 1e-12);
        assert!((c - d).norm() < 1e-12);
        let (d, c) = g(1, 3);
        assert!((d - Complex64::new(0.0, 3f64.sqrt())).norm() < 1e-12);
        assert!((c - d).norm() < 1e-12);
        let (d, c) = g(3, 7);
        assert!((d - Complex64::new(0.0, -(7f64.sqrt()))).norm() < 1e-12);
        assert!((c - d).norm() < 1e-12);

        let p5 = PrimeModulus::new(5).unwrap();
        assert_eq!(gauss_sum(10, &p5, GaussSumMode::Direct), Err(Error::ZeroMultiplier { p: 5 }));
        let p2 = PrimeModulus::new(2).unwrap();
        assert!(gauss_sum(1, &p2, GaussSumMode::Direct).is_err());
    }

    #[test]
    fn prime_modulus_serde() {
        let p = PrimeModulus::new(101).unwrap();
        let json = serde_json::to_string(&p).unwrap();
        assert_eq!(json, "101");
        let back: PrimeModulus = serde_json::from_str(&json).unwrap();
        assert_eq!(back, p);
        assert!(serde_json::from_str::<PrimeModulus>("100").is_err());
    }

    proptest! {
        #[test]
        fn gauss_sum_routes_agree(idx in 1usize..1229, d in 1i64..100_000) {
            let primes = primes_up_to(10_007);
            let p = primes[idx.min(primes.len() - 1)];
            let pm = PrimeModulus::new(p).unwrap();
            prop_assume!(d % p as i64 != 0);
            let a = gauss_sum(d, &pm, GaussSumMode::Direct).unwrap();
            let b = gauss_sum(d, &pm, GaussSumMode::ClosedForm).unwrap();
            prop_assert!((a - b).norm() <= 1e-9 * (p as f64).sqrt());
        }

        #[test]
        fn inverse_is_inverse(a in 1i64..1_000_000_000, m in 2u64..1_000_000_000) {
            match mod_inverse(a, m) {
                Ok(r) => {
                    prop_assert!(r.value > 0 && r.value < m);
                    prop_assert_eq!(mul_mod(reduce(a as i128, m), r.value, m), 1 % m);
                }
                Err(_) => prop_assert_ne!(gcd(a as u64, m), 1),
            }
        }
    }
}
