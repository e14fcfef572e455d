use serde::{Deserialize, Serialize};

use crate::additive::{sorted_sum_energy, ResidueSet};
use crate::arith::{mul_mod, reduce, PhaseTable, PrimeModulus};
use crate::error::{check_cost, Error, Result};

/// `|B1| · |B2|` limit of [`exp_sum_energy_check`].
pub const EXP_SUM_LIMIT: u128 = 10_000_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpSumEnergyReport {
    pub lhs: f64,
    pub rhs: f64,
    pub energy_b1: u64,
    pub energy_b2: u64,
    pub pass: bool,
}

/// Compares `|Σ_{b1, b2} e_p(θ (b1 - b2)^2)|` with
/// `|B1|^{1/2} E(B1,B1)^{1/8} |B2|^{1/2} E(B2,B2)^{1/8} p^{1/8}`.
pub fn exp_sum_energy_check(
    theta: u64,
    b1: &ResidueSet,
    b2: &ResidueSet,
    p: &PrimeModulus,
) -> Result<ExpSumEnergyReport> {
    let pv = p.get();
    for set in [b1, b2] {
        if set.modulus() != pv {
            return Err(Error::ModulusMismatch {
                left: set.modulus(),
                right: pv,
            });
        }
    }
    let theta = theta % pv;
    if theta == 0 {
        return Err(Error::ZeroTheta);
    }
    check_cost(b1.len() as u128 * b2.len() as u128, EXP_SUM_LIMIT)?;
    let table = PhaseTable::new(pv);
    let mut sum = num_complex::Complex64::new(0.0, 0.0);
    for &x in b1.elements() {
        for &y in b2.elements() {
            let d = reduce(x as i128 - y as i128, pv);
            sum += table.phase(mul_mod(theta, mul_mod(d, d, pv), pv));
        }
    }
    let lhs = sum.norm();
    let energy_b1 = sorted_sum_energy(b1, b1);
    let energy_b2 = sorted_sum_energy(b2, b2);
    let side = |n: usize, e: u64| (n as f64).sqrt() * (e as f64).powf(0.125);
    let rhs = side(b1.len(), energy_b1) * side(b2.len(), energy_b2) * (pv as f64).powf(0.125);
    Ok(ExpSumEnergyReport {
        lhs,
        rhs,
        energy_b1,
        energy_b2,
        pass: lhs <= rhs * (1.0 + 1e-9),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{unit_phase, PrimeModulus};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn singletons() {
        let p = PrimeModulus::new(1009).unwrap();
        let b = ResidueSet::new(1009, [17]).unwrap();
        let r = exp_sum_energy_check(5, &b, &b, &p).unwrap();
        assert!((r.lhs - 1.0).abs() < 1e-12);
        assert!((r.rhs - 1009f64.powf(0.125)).abs() < 1e-12);
        assert!(r.pass);
        assert_eq!(exp_sum_energy_check(1009, &b, &b, &p), Err(Error::ZeroTheta));
    }

    #[test]
    fn full_field_has_gauss_magnitude() {
        // Σ_{b1,b2} e_p(θ(b1-b2)^2) = p · G(θ), so |·| = p^{3/2}
        let p = PrimeModulus::new(101).unwrap();
        let all = ResidueSet::new(101, 0..101).unwrap();
        let r = exp_sum_energy_check(3, &all, &all, &p).unwrap();
        assert!((r.lhs - 101f64.powf(1.5)).abs() < 1e-8);
        assert_eq!(r.energy_b1, 101u64.pow(3));
        assert!(r.pass);
    }

    #[test]
    fn random_corpus_passes() {
        let p = PrimeModulus::new(1009).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        for _ in 0..100 {
            let theta = rng.random_range(1..1009);
            let mut draw = || {
                let n = rng.random_range(1..60);
                ResidueSet::new(1009, (0..n).map(|_| rng.random_range(0..1009u64))).unwrap()
            };
            let (b1, b2) = (draw(), draw());
            let r = exp_sum_energy_check(theta, &b1, &b2, &p).unwrap();
            // independent evaluation through the table-free phase
            let direct: num_complex::Complex64 = b1
                .elements()
                .iter()
                .flat_map(|&x| b2.elements().iter().map(move |&y| (x, y)))
                .map(|(x, y)| {
                    let d = (x as i64 - y as i64).rem_euclid(1009) as u64;
                    unit_phase(theta * d * d % 1009, 1009)
                })
                .sum();
            assert!((direct.norm() - r.lhs).abs() < 1e-9);
            assert!(r.pass);
        }
    }
}
