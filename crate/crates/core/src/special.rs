//! Special functions: Hurwitz zeta by Euler-Maclaurin with a remainder
//! bound, harmonic numbers and the Gamma function.

use num_complex::Complex64;

/// B_{2j} for j = 1..=15.
const BERNOULLI_EVEN: [f64; 15] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
    854513.0 / 138.0,
    -236364091.0 / 2730.0,
    8553103.0 / 6.0,
    -23749461029.0 / 870.0,
    8615841276005.0 / 14322.0,
];

fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// Hurwitz zeta `sum_{n>=0} (n + a)^{-s}` for `a > 0`, `s != 1`, `Re(s) > -(2p+1)`.
///
/// `direct` terms are summed explicitly and `p` Bernoulli corrections are
/// applied at `a + direct`. Returns the value together with a bound on the
/// truncated Euler-Maclaurin remainder.
pub fn hurwitz_zeta_em(s: Complex64, a: f64, direct: usize, p: usize) -> (Complex64, f64) {
    let p = p.clamp(1, BERNOULLI_EVEN.len() - 1);
    let mut sum = Complex64::new(0.0, 0.0);
    for n in 0..direct {
        sum += (-s * (n as f64 + a).ln()).exp();
    }
    let x = direct as f64 + a;
    let ln_x = x.ln();
    let x_pow = (-s * ln_x).exp(); // x^{-s}
    sum += x_pow * x / (s - 1.0);
    sum += 0.5 * x_pow;
    // rising factorial s (s+1) ... (s + 2j - 2)
    let mut rising = s;
    let mut x_term = x_pow / x; // x^{-s-1}
    for j in 1..=p {
        let coeff = BERNOULLI_EVEN[j - 1] / factorial(2 * j);
        sum += coeff * rising * x_term;
        rising *= (s + (2 * j - 1) as f64) * (s + (2 * j) as f64);
        x_term /= x * x;
    }
    // |R_p| <= |s (s+1) ... (s+2p)| |B_{2p+2}| / (2p+2)! * x^{-sigma-2p-1} / (sigma + 2p + 1)
    let sigma = s.re;
    let bound = rising.norm() * BERNOULLI_EVEN[p].abs() / factorial(2 * p + 2) * x.powf(-sigma - 2.0 * p as f64 - 1.0)
        / (sigma + 2.0 * p as f64 + 1.0);
    (sum, bound)
}

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Harmonic number H_n, summed directly for small n and from its asymptotic
/// expansion otherwise (absolute error below 1e-16 there).
pub fn harmonic(n: f64) -> f64 {
    if n < 1.0 {
        return 0.0;
    }
    if n <= 1000.0 {
        let m = n as u64;
        // sum smallest terms first
        return (1..=m).rev().map(|k| 1.0 / k as f64).sum();
    }
    let inv = 1.0 / n;
    let inv2 = inv * inv;
    n.ln() + EULER_GAMMA + 0.5 * inv - inv2 / 12.0 + inv2 * inv2 / 120.0 - inv2 * inv2 * inv2 / 252.0
}

/// Gamma function; exact factorials at positive integers up to 170.
pub fn gamma(x: f64) -> f64 {
    if x > 0.0 && x <= 171.0 && x.fract() == 0.0 {
        return factorial(x as usize - 1);
    }
    statrs::function::gamma::gamma(x)
}

#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;

    #[test]
    fn gamma_is_exact_on_factorials() {
        let mut f = 1.0;
        for n in 0..=10u32 {
            if n > 0 {
                f *= n as f64;
            }
            assert_eq!(gamma(n as f64 + 1.0), f);
        }
    }

    #[test]
    fn gamma_matches_reference_values() {
        // Gamma(1/2) = sqrt(pi); Gamma(3/2) = sqrt(pi)/2; Gamma(7.3) from mpmath
        let sqrt_pi = std::f64::consts::PI.sqrt();
        assert!((gamma(0.5) - sqrt_pi).abs() < 1e-10 * sqrt_pi);
        assert!((gamma(1.5) - 0.5 * sqrt_pi).abs() < 1e-10);
        let want = 1271.4236336639089;
        assert!((gamma(7.3) - want).abs() / want < 1e-10);
    }

    #[test]
    fn harmonic_closed_form_agrees_with_summation_at_switch() {
        let direct: f64 = (1..=5000u64).rev().map(|k| 1.0 / k as f64).sum();
        assert!((harmonic(5000.0) - direct).abs() < 1e-13);
    }

    #[test]
    fn hurwitz_at_unit_offset_is_riemann_zeta() {
        // zeta(2) = pi^2/6
        let (v, bound) = hurwitz_zeta_em(Complex64::new(2.0, 0.0), 1.0, 10, 8);
        assert!((v.re - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-14);
        assert!(v.im.abs() < 1e-15);
        assert!(bound < 1e-14);
    }
}
