//! Sumset growth in the digit cube `C_{M,r} = {0,…,M-1}^r`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_cost, Error, Result};

/// Bisection steps used by [`tau_solver`].
const TAU_ITERATIONS: usize = 100;
/// Exhaustive scans are limited to this many `(A, B)` pairs.
pub const EXHAUSTIVE_PAIR_LIMIT: u128 = 20_000_000;

/// Growth exponents for sumsets in `C_{M,r}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TauSolution {
    pub m: u64,
    /// Root of `(1/M)^{2τ} + ((M-1)/M)^τ = 1` on `(1/2, 1]`.
    pub tau: f64,
    /// `log(2M-1) / (2 log M)`, the exponent attained by the full cube.
    pub tau_prime: f64,
    pub residual: f64,
}

/// `(1/M)^{2τ} + ((M-1)/M)^τ - 1`, strictly decreasing in `τ`.
pub(crate) fn tau_equation(m: u64, tau: f64) -> f64 {
    let mf = m as f64;
    (-2.0 * tau * mf.ln()).exp() + (tau * (-1.0 / mf).ln_1p()).exp() - 1.0
}

pub fn tau_solver(m: u64) -> Result<TauSolution> {
    if m < 2 {
        return Err(Error::InvalidArgument(format!("tau_solver needs M >= 2, got {m}")));
    }
    let (mut lo, mut hi) = (0.5f64, 1.0f64);
    for _ in 0..TAU_ITERATIONS {
        let mid = 0.5 * (lo + hi);
        if tau_equation(m, mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let tau = 0.5 * (lo + hi);
    let mf = m as f64;
    Ok(TauSolution {
        m,
        tau,
        tau_prime: (2.0 * mf - 1.0).ln() / (2.0 * mf.ln()),
        residual: tau_equation(m, tau).abs(),
    })
}

/// A point of `C_{M,r}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CubePoint {
    pub digits: Vec<u32>,
    pub m: u32,
}

impl CubePoint {
    pub fn new(digits: Vec<u32>, m: u32) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidArgument(format!("cube side M must be >= 2, got {m}")));
        }
        if let Some(&d) = digits.iter().find(|&&d| d >= m) {
            return Err(Error::InvalidArgument(format!("digit {d} outside [0, {m})")));
        }
        Ok(CubePoint { digits, m })
    }

    pub fn r(&self) -> u32 {
        self.digits.len() as u32
    }

    /// Every point of `C_{M,r}`, in increasing order of [`cube_encode`].
    pub fn enumerate(m: u32, r: u32) -> Vec<CubePoint> {
        let count = (m as usize).pow(r);
        (0..count)
            .map(|mut idx| {
                let digits = (0..r)
                    .map(|_| {
                        let d = (idx % m as usize) as u32;
                        idx /= m as usize;
                        d
                    })
                    .collect();
                CubePoint { digits, m }
            })
            .collect()
    }
}

/// `Σ_j x_j (2M)^{j-1}`: the embedding of the cube into the integers.
pub fn cube_encode(point: &CubePoint) -> Result<u64> {
    let base = 2 * point.m as u128;
    let mut acc = 0u128;
    let mut scale = 1u128;
    for &d in &point.digits {
        acc += d as u128 * scale;
        scale = scale.saturating_mul(base);
        if acc > u64::MAX as u128 {
            return Err(Error::InvalidArgument("cube encoding exceeds 64 bits".into()));
        }
    }
    Ok(acc as u64)
}

/// Inverse of [`cube_encode`]; fails when a base-`2M` digit reaches `[M, 2M)`
/// or the value needs more than `r` digits.
pub fn cube_decode(value: u64, m: u32, r: u32) -> Result<CubePoint> {
    if m < 2 {
        return Err(Error::InvalidArgument(format!("cube side M must be >= 2, got {m}")));
    }
    let base = 2 * m as u64;
    let mut rest = value;
    let mut digits = Vec::with_capacity(r as usize);
    for _ in 0..r {
        let d = (rest % base) as u32;
        if d >= m {
            return Err(Error::NotInCube { value, m, r });
        }
        digits.push(d);
        rest /= base;
    }
    if rest != 0 {
        return Err(Error::NotInCube { value, m, r });
    }
    Ok(CubePoint { digits, m })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CubeSumsetReport {
    /// `|A + B|` with the sum taken coordinatewise in `Z^r`.
    pub lhs: usize,
    /// `(|A||B|)^{τ_M}`.
    pub rhs: f64,
    pub pass: bool,
    /// `(|A||B|)^{τ'_M}`; reported for comparison only.
    pub rhs_tau_prime: f64,
    pub holds_with_tau_prime: bool,
}

fn cube_shape(points: &[CubePoint]) -> Result<(u32, u32)> {
    let first = points.first().ok_or(Error::EmptySet)?;
    let (m, r) = (first.m, first.r());
    if let Some(p) = points.iter().find(|p| p.m != m || p.r() != r) {
        return Err(Error::DimensionMismatch(format!(
            "point {:?} (M = {}) does not lie in C_{{{m},{r}}}",
            p.digits, p.m
        )));
    }
    Ok((m, r))
}

/// Checks `|A + B| >= (|A||B|)^τ` for subsets of the same cube.
pub fn verify_cube_sumset_bound(a: &[CubePoint], b: &[CubePoint]) -> Result<CubeSumsetReport> {
    let (ma, ra) = cube_shape(a)?;
    let (mb, rb) = cube_shape(b)?;
    if (ma, ra) != (mb, rb) {
        return Err(Error::DimensionMismatch(format!(
            "C_{{{ma},{ra}}} vs C_{{{mb},{rb}}}"
        )));
    }
    let mut a: Vec<&CubePoint> = a.iter().collect();
    a.sort();
    a.dedup();
    let mut b: Vec<&CubePoint> = b.iter().collect();
    b.sort();
    b.dedup();

    let mut sums: Vec<Vec<u32>> = a
        .iter()
        .flat_map(|x| {
            b.iter().map(move |y| {
                x.digits
                    .iter()
                    .zip(&y.digits)
                    .map(|(u, v)| u + v)
                    .collect()
            })
        })
        .collect();
    sums.sort_unstable();
    sums.dedup();

    let tau = tau_solver(ma as u64)?;
    let product = (a.len() * b.len()) as f64;
    let rhs = product.powf(tau.tau);
    let rhs_tau_prime = product.powf(tau.tau_prime);
    let lhs = sums.len();
    Ok(CubeSumsetReport {
        lhs,
        rhs,
        pass: lhs as f64 >= rhs - 1e-9,
        rhs_tau_prime,
        holds_with_tau_prime: lhs as f64 >= rhs_tau_prime - 1e-9,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExhaustiveCubeReport {
    pub m: u32,
    pub r: u32,
    pub tau: f64,
    pub pairs_checked: u64,
    pub failures: u64,
    /// Smallest `|A + B| - (|A||B|)^τ` over all pairs.
    pub min_margin: f64,
    /// Pairs where the stronger `τ'` exponent fails (never a failure criterion).
    pub tau_prime_shortfalls: u64,
}

/// Runs the sumset bound over every pair of nonempty subsets of `C_{M,r}`.
pub fn exhaustive_cube_scan(m: u32, r: u32) -> Result<ExhaustiveCubeReport> {
    let points = CubePoint::enumerate(m, r);
    let n = points.len();
    let sum_base = (2 * m - 1) as usize;
    let sum_cells = sum_base.pow(r);
    let pair_count = if n >= 64 {
        u128::MAX
    } else {
        ((1u128 << n) - 1).saturating_mul((1u128 << n) - 1)
    };
    check_cost(pair_count, EXHAUSTIVE_PAIR_LIMIT)?;
    if sum_cells > 128 {
        return Err(Error::DimensionMismatch(format!(
            "sum grid of C_{{{m},{r}}} has {sum_cells} cells; at most 128 supported"
        )));
    }
    let subsets = (1u64 << n) - 1;

    // index of x + y in the (2M-1)-ary grid of possible coordinate sums
    let sum_index: Vec<Vec<u32>> = points
        .iter()
        .map(|x| {
            points
                .iter()
                .map(|y| {
                    x.digits
                        .iter()
                        .zip(&y.digits)
                        .rev()
                        .fold(0usize, |acc, (u, v)| acc * sum_base + (u + v) as usize)
                        as u32
                })
                .collect()
        })
        .collect();

    let tau = tau_solver(m as u64)?;
    let powers: Vec<(f64, f64)> = (0..=n * n)
        .map(|k| ((k as f64).powf(tau.tau), (k as f64).powf(tau.tau_prime)))
        .collect();

    let (failures, shortfalls, min_margin) = (1..=subsets)
        .into_par_iter()
        .map(|amask| {
            let a_idx: Vec<usize> = (0..n).filter(|&i| amask >> i & 1 == 1).collect();
            // sumset of A with each single point
            let rows: Vec<u128> = (0..n)
                .map(|j| {
                    a_idx
                        .iter()
                        .fold(0u128, |acc, &i| acc | 1u128 << sum_index[i][j])
                })
                .collect();
            let mut failures = 0u64;
            let mut shortfalls = 0u64;
            let mut min_margin = f64::INFINITY;
            for bmask in 1..=subsets {
                let mut cover = 0u128;
                let mut bm = bmask;
                while bm != 0 {
                    let j = bm.trailing_zeros() as usize;
                    cover |= rows[j];
                    bm &= bm - 1;
                }
                let lhs = cover.count_ones() as f64;
                let prod = a_idx.len() * bmask.count_ones() as usize;
                let (rhs, rhs_prime) = powers[prod];
                let margin = lhs - rhs;
                if margin < -1e-9 {
                    failures += 1;
                }
                if lhs < rhs_prime - 1e-9 {
                    shortfalls += 1;
                }
                min_margin = min_margin.min(margin);
            }
            (failures, shortfalls, min_margin)
        })
        .reduce(
            || (0, 0, f64::INFINITY),
            |x, y| (x.0 + y.0, x.1 + y.1, x.2.min(y.2)),
        );

    Ok(ExhaustiveCubeReport {
        m,
        r,
        tau: tau.tau,
        pairs_checked: subsets * subsets,
        failures,
        min_margin,
        tau_prime_shortfalls: shortfalls,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub lhs: f64,
    pub rhs: f64,
    pub tau: f64,
    pub pass: bool,
}

/// `Σ_μ max_{κ+λ=μ} (U_κ V_λ)^τ  >=  (ΣU)^τ (ΣV)^τ` with `τ = τ_M`, `M = len`.
pub fn check_unordered_inequality(u: &[f64], v: &[f64]) -> Result<InequalityReport> {
    if u.len() != v.len() {
        return Err(Error::LengthMismatch {
            left: u.len(),
            right: v.len(),
        });
    }
    let m = u.len();
    if m < 2 {
        return Err(Error::InvalidArgument(format!("vectors need length >= 2, got {m}")));
    }
    if u.iter().chain(v).any(|&x| !(x >= 0.0) || !x.is_finite()) {
        return Err(Error::InvalidArgument("entries must be finite and non-negative".into()));
    }
    let tau = tau_solver(m as u64)?.tau;
    let lhs: f64 = (0..=2 * m - 2)
        .map(|mu| {
            let lo = mu.saturating_sub(m - 1);
            let hi = mu.min(m - 1);
            (lo..=hi)
                .map(|k| (u[k] * v[mu - k]).powf(tau))
                .fold(0.0, f64::max)
        })
        .sum();
    let rhs = u.iter().sum::<f64>().powf(tau) * v.iter().sum::<f64>().powf(tau);
    Ok(InequalityReport {
        lhs,
        rhs,
        tau,
        pass: lhs >= rhs - 1e-9,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    #[test]
    fn tau_two_closed_form() {
        let t = tau_solver(2).unwrap();
        let closed = (2.0 / (5f64.sqrt() - 1.0)).log2();
        assert!((t.tau - closed).abs() < 1e-12);
        assert!((t.tau - 0.694_241_9).abs() < 1e-7);
        assert!((t.tau_prime - 3f64.ln() / (2.0 * 2f64.ln())).abs() < 1e-15);
        assert!((t.tau_prime - 0.792_481_3).abs() < 1e-7);
        assert!(t.residual <= 1e-12);
    }

    #[test]
    fn tau_monotone_and_bracketed() {
        let mut prev = 1.0;
        for e in 1..=16 {
            let m = 1u64 << e;
            let t = tau_solver(m).unwrap();
            assert!(t.residual <= 1e-12, "M={m} residual {}", t.residual);
            assert!(t.tau > 0.5 && t.tau <= t.tau_prime, "M={m}: {t:?}");
            assert!(t.tau < prev);
            prev = t.tau;
        }
        for m in [3, 5, 6, 7, 100, 1000, 65_535] {
            let t = tau_solver(m).unwrap();
            assert!(t.tau > 0.5 && t.tau <= t.tau_prime);
        }
        assert!(tau_solver(1).is_err());
    }

    #[test]
    fn tau_equation_is_decreasing() {
        for m in [2u64, 3, 7, 64, 65_536] {
            let mut prev = f64::INFINITY;
            for i in 0..=1000 {
                let t = 0.5 + 0.5 * i as f64 / 1000.0;
                let f = tau_equation(m, t);
                assert!(f < prev, "M={m} t={t}");
                prev = f;
            }
        }
    }

    #[test]
    fn codec_examples() {
        let p = CubePoint::new(vec![3, 5], 16).unwrap();
        assert_eq!(cube_encode(&p).unwrap(), 163);
        assert_eq!(cube_decode(163, 16, 2).unwrap(), p);
        for x in CubePoint::enumerate(2, 4) {
            assert_eq!(cube_decode(cube_encode(&x).unwrap(), 2, 4).unwrap(), x);
        }
        // digit 2 in base 4 is outside [0, 2)
        assert_eq!(cube_decode(2, 2, 3), Err(Error::NotInCube { value: 2, m: 2, r: 3 }));
        // needs a fourth digit
        assert!(cube_decode(64, 2, 3).is_err());
        assert_eq!(cube_decode(0, 5, 0).unwrap().digits, Vec::<u32>::new());
    }

    #[test]
    fn freiman_isomorphism_random_quadruples() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let pts = CubePoint::enumerate(4, 3);
        let mut equal_cases = 0;
        for _ in 0..10_000 {
            let q: Vec<&CubePoint> = (0..4).map(|_| &pts[rng.random_range(0..pts.len())]).collect();
            let e: Vec<u64> = q.iter().map(|p| cube_encode(p).unwrap()).collect();
            let int_eq = e[0] + e[1] == e[2] + e[3];
            let dig_eq = (0..3).all(|j| {
                q[0].digits[j] + q[1].digits[j] == q[2].digits[j] + q[3].digits[j]
            });
            assert_eq!(int_eq, dig_eq);
            equal_cases += int_eq as u32;
        }
        // exercise the trivial-relation direction too
        for x in &pts {
            for y in &pts {
                let s = cube_encode(x).unwrap() + cube_encode(y).unwrap();
                let t = cube_encode(y).unwrap() + cube_encode(x).unwrap();
                assert_eq!(s, t);
            }
        }
        assert!(equal_cases > 0);
    }

    #[test]
    fn full_cube_attains_tau_prime() {
        let c = CubePoint::enumerate(2, 2);
        let r = verify_cube_sumset_bound(&c, &c).unwrap();
        assert_eq!(r.lhs, 9);
        assert!((r.rhs_tau_prime - 9.0).abs() < 1e-9);
        assert!(r.pass && r.holds_with_tau_prime);

        let x = CubePoint::new(vec![1, 0], 2).unwrap();
        let y = CubePoint::new(vec![0, 1], 2).unwrap();
        let r = verify_cube_sumset_bound(&[x.clone()], &[y]).unwrap();
        assert_eq!(r.lhs, 1);
        assert!(r.pass);

        assert_eq!(verify_cube_sumset_bound(&[], &[x.clone()]), Err(Error::EmptySet));
        let z = CubePoint::new(vec![0, 0, 0], 2).unwrap();
        assert!(matches!(
            verify_cube_sumset_bound(&[x], &[z]),
            Err(Error::DimensionMismatch(_))
        ));
    }

    /// Bitmask scan versus the explicit sumset on every pair in C_{2,2}.
    #[test]
    fn exhaustive_scan_matches_explicit_sumsets() {
        let pts = CubePoint::enumerate(2, 2);
        let tau = tau_solver(2).unwrap().tau;
        let mut min_margin = f64::INFINITY;
        for am in 1u32..16 {
            for bm in 1u32..16 {
                let a: Vec<CubePoint> = (0..4).filter(|i| am >> i & 1 == 1).map(|i| pts[i].clone()).collect();
                let b: Vec<CubePoint> = (0..4).filter(|i| bm >> i & 1 == 1).map(|i| pts[i].clone()).collect();
                let sums: BTreeSet<Vec<u32>> = a
                    .iter()
                    .flat_map(|x| b.iter().map(move |y| vec![x.digits[0] + y.digits[0], x.digits[1] + y.digits[1]]))
                    .collect();
                let report = verify_cube_sumset_bound(&a, &b).unwrap();
                assert_eq!(report.lhs, sums.len());
                min_margin = min_margin.min(sums.len() as f64 - ((a.len() * b.len()) as f64).powf(tau));
            }
        }
        let scan = exhaustive_cube_scan(2, 2).unwrap();
        assert_eq!(scan.pairs_checked, 225);
        assert_eq!(scan.failures, 0);
        assert_eq!(scan.min_margin, min_margin);
    }

    #[test]
    fn exhaustive_small_cubes() {
        for (m, r) in [(2, 1), (2, 2), (2, 3), (3, 2)] {
            let s = exhaustive_cube_scan(m, r).unwrap();
            assert_eq!(s.failures, 0, "C_{{{m},{r}}}");
            assert!(s.min_margin >= -1e-9);
        }
        // Woodall: the stronger exponent holds for M = 2
        assert_eq!(exhaustive_cube_scan(2, 3).unwrap().tau_prime_shortfalls, 0);
        assert!(exhaustive_cube_scan(2, 5).is_err());
    }

    #[test]
    fn unordered_examples() {
        let r = check_unordered_inequality(&[1.0, 0.0], &[1.0, 0.0]).unwrap();
        assert!((r.lhs - 1.0).abs() < 1e-15 && (r.rhs - 1.0).abs() < 1e-15 && r.pass);
        let r = check_unordered_inequality(&[1.0, 1.0], &[1.0, 1.0]).unwrap();
        assert!((r.lhs - 3.0).abs() < 1e-12);
        let golden_sq = (3.0 + 5f64.sqrt()) / 2.0;
        assert!((r.rhs - golden_sq).abs() < 1e-9);
        assert!(r.pass);
        assert_eq!(
            check_unordered_inequality(&[1.0, 2.0], &[1.0]),
            Err(Error::LengthMismatch { left: 2, right: 1 })
        );
        assert!(check_unordered_inequality(&[1.0, -2.0], &[1.0, 0.0]).is_err());
    }

    proptest! {
        #[test]
        fn unordered_inequality_holds(
            (u, v) in (2usize..=6).prop_flat_map(|m| (
                proptest::collection::vec(0.0f64..10.0, m),
                proptest::collection::vec(0.0f64..10.0, m),
            ))
        ) {
            let r = check_unordered_inequality(&u, &v).unwrap();
            prop_assert!(r.pass, "{:?} {:?} -> {:?}", u, v, r);
        }
    }
}
