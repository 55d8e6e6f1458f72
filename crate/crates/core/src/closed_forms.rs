//! Exact formulas for the competitive system: scaling exponents, the spatially
//! flat particular solution, the singular elliptic profiles, the scalar
//! comparison profile and the regime/well-posedness predicates.
//!
//! Everything here is a pure function of its arguments.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Distance from `pq = 1` below which the exponents are treated as undefined.
const PQ_ONE_TOL: f64 = 1e-12;

/// Exponent pair `(p, q)` with the derived scaling exponents
/// `a = (p+1)/(pq-1)` and `b = (q+1)/(pq-1)`.
///
/// For `pq < 1` both exponents are negative and are reported as such.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerPair {
    p: f64,
    q: f64,
    a: f64,
    b: f64,
}

impl PowerPair {
    pub fn new(p: f64, q: f64) -> Result<Self> {
        derive_exponents(p, q)
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn pq(&self) -> f64 {
        self.p * self.q
    }

    pub fn is_superlinear(&self) -> bool {
        self.pq() > 1.0
    }

    /// The pair with the roles of `u` and `v` exchanged.
    pub fn swapped(&self) -> Self {
        PowerPair {
            p: self.q,
            q: self.p,
            a: self.b,
            b: self.a,
        }
    }

    fn require_superlinear(&self, what: &str) -> Result<()> {
        if self.is_superlinear() {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "{what} requires pq > 1, got p = {}, q = {}",
                self.p, self.q
            )))
        }
    }
}

pub fn derive_exponents(p: f64, q: f64) -> Result<PowerPair> {
    if !(p.is_finite() && p > 0.0) {
        return Err(Error::invalid(format!("p must be positive, got {p}")));
    }
    if !(q.is_finite() && q > 0.0) {
        return Err(Error::invalid(format!("q must be positive, got {q}")));
    }
    let denom = p * q - 1.0;
    if denom.abs() <= PQ_ONE_TOL {
        return Err(Error::invalid(format!(
            "pq = 1 (p = {p}, q = {q}): scaling exponents are undefined"
        )));
    }
    Ok(PowerPair {
        p,
        q,
        a: (p + 1.0) / denom,
        b: (q + 1.0) / denom,
    })
}

/// Amplitudes of the flat solution `u* = A* t^{-a}`, `v* = B* t^{-b}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlatSolutionConstants {
    pub a_star: f64,
    pub b_star: f64,
}

/// Positive roots of
/// `(A*)^{pq-1} = (p+1)(q+1)^p (pq-1)^{-(p+1)}` and
/// `(B*)^{pq-1} = (q+1)(p+1)^q (pq-1)^{-(q+1)}`, taken in log space.
pub fn flat_constants(pair: &PowerPair) -> Result<FlatSolutionConstants> {
    pair.require_superlinear("the flat solution")?;
    let (p, q) = (pair.p, pair.q);
    let m = pair.pq() - 1.0;
    let ln_a = ((p + 1.0).ln() + p * (q + 1.0).ln() - (p + 1.0) * m.ln()) / m;
    let ln_b = ((q + 1.0).ln() + q * (p + 1.0).ln() - (q + 1.0) * m.ln()) / m;
    Ok(FlatSolutionConstants {
        a_star: ln_a.exp(),
        b_star: ln_b.exp(),
    })
}

/// Values `(u*(t), v*(t))` of the flat particular solution.
pub fn eval_flat(pair: &PowerPair, t: f64) -> Result<(f64, f64)> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::invalid(format!("t must be positive, got {t}")));
    }
    let c = flat_constants(pair)?;
    Ok((c.a_star * t.powf(-pair.a), c.b_star * t.powf(-pair.b)))
}

/// Amplitudes of the singular stationary profiles
/// `u₊ = A₊ |x|^{-2a}`, `v₊ = B₊ |x|^{-2b}` in dimension `dim_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipticSolutionConstants {
    pub a_sub: f64,
    pub b_sub: f64,
    pub dim_n: u32,
}

impl EllipticSolutionConstants {
    /// `(u₊(r), v₊(r))` for `r > 0`.
    pub fn eval(&self, pair: &PowerPair, r: f64) -> (f64, f64) {
        (
            self.a_sub * r.powf(-2.0 * pair.a),
            self.b_sub * r.powf(-2.0 * pair.b),
        )
    }
}

/// Radial Laplacian of a pure power: `Δ r^{-k} = k(k + 2 - N) r^{-k-2}`.
/// Returns the coefficient `k(k + 2 - N)`.
fn pure_power_laplacian_coeff(k: f64, dim_n: u32) -> f64 {
    k * (k + 2.0 - dim_n as f64)
}

/// Constants obtained by substituting pure radial powers into
/// `-Δu + v^p = 0`, `-Δv + u^q = 0`.
///
/// With `α = 2a(2a+2-N)` and `β = 2b(2b+2-N)` the substitution gives
/// `α A₊ = B₊^p` and `β B₊ = A₊^q`, hence `A₊^{pq-1} = α β^p` and
/// `B₊^{pq-1} = β α^q`.
pub fn elliptic_constants(pair: &PowerPair, dim_n: u32) -> Result<EllipticSolutionConstants> {
    if dim_n == 0 {
        return Err(Error::invalid("dimension N must be at least 1"));
    }
    let n = dim_n as f64;
    if (2.0 * pair.a).min(2.0 * pair.b) <= n - 2.0 {
        return Err(Error::invalid(format!(
            "singular elliptic profiles need min(2a, 2b) > N - 2; got 2a = {}, 2b = {}, N = {dim_n}",
            2.0 * pair.a,
            2.0 * pair.b
        )));
    }
    let alpha = pure_power_laplacian_coeff(2.0 * pair.a, dim_n);
    let beta = pure_power_laplacian_coeff(2.0 * pair.b, dim_n);
    if !(alpha > 0.0 && beta > 0.0) {
        return Err(Error::invalid(format!(
            "no positive singular profile: 2a(2a+2-N) = {alpha}, 2b(2b+2-N) = {beta}"
        )));
    }
    let m = pair.pq() - 1.0;
    let ln_a = (alpha.ln() + pair.p * beta.ln()) / m;
    let ln_b = (beta.ln() + pair.q * alpha.ln()) / m;
    Ok(EllipticSolutionConstants {
        a_sub: ln_a.exp(),
        b_sub: ln_b.exp(),
        dim_n,
    })
}

/// Universal bound `((Q-1)t)^{-1/(Q-1)}` for the scalar equation
/// `U_t - ΔU + U^Q = 0`.
pub fn scalar_profile(big_q: f64, t: f64) -> Result<f64> {
    if !(big_q > 1.0 && big_q.is_finite()) {
        return Err(Error::invalid(format!("Q must exceed 1, got {big_q}")));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::invalid(format!("t must be positive, got {t}")));
    }
    Ok(((big_q - 1.0) * t).powf(-1.0 / (big_q - 1.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegimeReport {
    /// `pq > 1`
    pub superlinear: bool,
    /// `pq < 1`
    pub sublinear: bool,
    /// `max(p, q) < 1 + 2/N`: measure data admissible.
    pub measure_subcritical: bool,
    /// `p, q >= 1 + 2/N`: point singularities at t = 0 are removable.
    pub removable_supercritical: bool,
    /// `min(2a, 2b) > N - 2`
    pub elliptic_singular_exists: bool,
}

pub fn classify_regime(pair: &PowerPair, dim_n: u32) -> Result<RegimeReport> {
    if dim_n == 0 {
        return Err(Error::invalid("dimension N must be at least 1"));
    }
    let n = dim_n as f64;
    let critical = 1.0 + 2.0 / n;
    Ok(RegimeReport {
        superlinear: pair.pq() > 1.0,
        sublinear: pair.pq() < 1.0,
        measure_subcritical: pair.p.max(pair.q) < critical,
        removable_supercritical: pair.p >= critical && pair.q >= critical,
        elliptic_singular_exists: (2.0 * pair.a).min(2.0 * pair.b) > n - 2.0,
    })
}

/// Lebesgue exponent of the initial data; `Infinity` stands for L^∞.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LebesgueExponent {
    Finite(f64),
    Infinity,
}

impl LebesgueExponent {
    fn reciprocal(self) -> f64 {
        match self {
            LebesgueExponent::Finite(x) => 1.0 / x,
            LebesgueExponent::Infinity => 0.0,
        }
    }

    fn validate(self, name: &str) -> Result<()> {
        match self {
            LebesgueExponent::Finite(x) if !(x >= 1.0) => Err(Error::invalid(format!(
                "{name} must be at least 1, got {x}"
            ))),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WellposednessVerdict {
    pub existence: bool,
    pub uniqueness: bool,
}

/// Existence/uniqueness predicate for data `u₀ ∈ L^θ`, `v₀ ∈ L^λ` on a bounded domain.
pub fn wellposedness(
    pair: &PowerPair,
    dim_n: u32,
    theta: LebesgueExponent,
    lambda: LebesgueExponent,
) -> Result<WellposednessVerdict> {
    if dim_n == 0 {
        return Err(Error::invalid("dimension N must be at least 1"));
    }
    theta.validate("theta")?;
    lambda.validate("lambda")?;
    let n = dim_n as f64;
    let (inv_t, inv_l) = (theta.reciprocal(), lambda.reciprocal());
    let (p, q) = (pair.p, pair.q);
    let existence = (p * inv_l).max(q * inv_t) < 1.0 + 2.0 / n;
    let uniqueness = existence
        && p >= 1.0
        && q >= 1.0
        && (p * inv_l - inv_t).max(q * inv_t - inv_l) < 2.0 / n;
    Ok(WellposednessVerdict {
        existence,
        uniqueness,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pair(p: f64, q: f64) -> PowerPair {
        PowerPair::new(p, q).unwrap()
    }

    #[test]
    fn exponents_by_hand() {
        let e = pair(2.0, 2.0);
        assert!((e.a() - 1.0).abs() < 1e-15 && (e.b() - 1.0).abs() < 1e-15);
        let e = pair(2.0, 3.0);
        assert!((e.a() - 0.6).abs() < 1e-15 && (e.b() - 0.8).abs() < 1e-15);
        let e = pair(0.5, 3.0);
        assert!((e.a() - 3.0).abs() < 1e-14 && (e.b() - 8.0).abs() < 1e-14);
    }

    #[test]
    fn exponents_reject_bad_input() {
        assert!(PowerPair::new(1.0, 1.0).is_err());
        assert!(PowerPair::new(0.5, 2.0).is_err());
        assert!(PowerPair::new(0.0, 2.0).is_err());
        assert!(PowerPair::new(2.0, -1.0).is_err());
        assert!(PowerPair::new(f64::NAN, 2.0).is_err());
    }

    #[test]
    fn sublinear_exponents_are_negative() {
        let e = pair(0.5, 0.5);
        assert!(e.a() < 0.0 && e.b() < 0.0);
    }

    #[test]
    fn flat_constants_by_hand() {
        let c = flat_constants(&pair(2.0, 2.0)).unwrap();
        assert!((c.a_star - 1.0).abs() < 1e-14 && (c.b_star - 1.0).abs() < 1e-14);

        let c = flat_constants(&pair(2.0, 3.0)).unwrap();
        assert!((c.a_star - (48.0f64 / 125.0).powf(0.2)).abs() < 1e-14);
        assert!((c.b_star - (108.0f64 / 625.0).powf(0.2)).abs() < 1e-14);
        assert!((c.a_star - 0.8258).abs() < 1e-4);
        assert!((c.b_star - 0.7039).abs() < 1e-4);
    }

    #[test]
    fn flat_constants_match_scalar_profile_on_diagonal() {
        for big_q in [1.5, 2.0, 3.0, 4.5, 7.0] {
            let c = flat_constants(&pair(big_q, big_q)).unwrap();
            let reduced = (big_q - 1.0).powf(-1.0 / (big_q - 1.0));
            assert!((c.a_star - reduced).abs() < 1e-12, "Q = {big_q}");
            assert!((c.a_star - scalar_profile(big_q, 1.0).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn flat_constants_reject_sublinear() {
        assert!(flat_constants(&pair(0.5, 0.5)).is_err());
    }

    #[test]
    fn eval_flat_values() {
        let e = pair(2.0, 2.0);
        let (u, v) = eval_flat(&e, 1.0).unwrap();
        assert!((u - 1.0).abs() < 1e-14 && (v - 1.0).abs() < 1e-14);
        let (u, v) = eval_flat(&e, 2.0).unwrap();
        assert!((u - 0.5).abs() < 1e-14 && (v - 0.5).abs() < 1e-14);
        assert!(eval_flat(&e, 0.0).is_err());
        assert!(eval_flat(&e, -1.0).is_err());

        let h = 1e-4;
        let du = (eval_flat(&e, 1.0 + h).unwrap().0 - eval_flat(&e, 1.0 - h).unwrap().0) / (2.0 * h);
        let v = eval_flat(&e, 1.0).unwrap().1;
        assert!((du + v * v).abs() < 1e-8);
    }

    /// Oracle: radial Laplacian of a sampled profile by central differences.
    fn fd_radial_laplacian(f: impl Fn(f64) -> f64, r: f64, n: u32) -> f64 {
        let h = 1e-3 * r;
        let d2 = (-f(r + 2.0 * h) + 16.0 * f(r + h) - 30.0 * f(r) + 16.0 * f(r - h) - f(r - 2.0 * h))
            / (12.0 * h * h);
        let d1 = (-f(r + 2.0 * h) + 8.0 * f(r + h) - 8.0 * f(r - h) + f(r - 2.0 * h)) / (12.0 * h);
        d2 + (n as f64 - 1.0) / r * d1
    }

    #[test]
    fn elliptic_constants_by_differentiation() {
        let e = pair(2.0, 2.0);
        let c = elliptic_constants(&e, 1).unwrap();
        assert!((c.a_sub - 6.0).abs() < 1e-12 && (c.b_sub - 6.0).abs() < 1e-12);
        let c = elliptic_constants(&e, 3).unwrap();
        assert!((c.a_sub - 2.0).abs() < 1e-12 && (c.b_sub - 2.0).abs() < 1e-12);
    }

    #[test]
    fn elliptic_constants_resubstitute() {
        for (p, q, n) in [(2.0, 3.0, 1), (3.0, 2.0, 2), (1.5, 2.0, 3), (2.5, 2.5, 2)] {
            let e = pair(p, q);
            let c = elliptic_constants(&e, n).unwrap();
            for r in [0.3, 0.7, 1.3] {
                let lu = fd_radial_laplacian(|s| c.eval(&e, s).0, r, n);
                let lv = fd_radial_laplacian(|s| c.eval(&e, s).1, r, n);
                let (u, v) = c.eval(&e, r);
                assert!((lu - v.powf(p)).abs() <= 1e-6 * v.powf(p), "{p} {q} {n} {r}");
                assert!((lv - u.powf(q)).abs() <= 1e-6 * u.powf(q), "{p} {q} {n} {r}");
            }
        }
    }

    #[test]
    fn elliptic_constants_asymmetric_differ_from_printed_exponent() {
        // B₊^{pq-1} = β α^q; using α^p instead would break re-substitution for p != q.
        let e = pair(2.0, 3.0);
        let c = elliptic_constants(&e, 1).unwrap();
        let alpha = 2.0 * e.a() * (2.0 * e.a() + 1.0);
        let beta = 2.0 * e.b() * (2.0 * e.b() + 1.0);
        let printed = (beta * alpha.powf(e.p())).powf(1.0 / (e.pq() - 1.0));
        assert!((c.b_sub - printed).abs() > 1e-3);
    }

    #[test]
    fn elliptic_constants_reject_outside_range() {
        // p = q = 2: 2a = 2, so N - 2 must stay below 2.
        assert!(elliptic_constants(&pair(2.0, 2.0), 4).is_err());
        assert!(elliptic_constants(&pair(2.0, 2.0), 0).is_err());
    }

    #[test]
    fn scalar_profile_values() {
        assert!((scalar_profile(2.0, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((scalar_profile(3.0, 0.5).unwrap() - 1.0).abs() < 1e-15);
        assert!((scalar_profile(2.0, 0.1).unwrap() - 10.0).abs() < 1e-12);
        assert!(scalar_profile(1.0, 1.0).is_err());
        assert!(scalar_profile(2.0, 0.0).is_err());
    }

    #[test]
    fn regimes() {
        let r = classify_regime(&pair(2.0, 2.0), 1).unwrap();
        assert!(r.superlinear && !r.sublinear);
        assert!(r.measure_subcritical && !r.removable_supercritical);
        assert!(r.elliptic_singular_exists);

        let r = classify_regime(&pair(3.0, 3.0), 1).unwrap();
        assert!(r.removable_supercritical && !r.measure_subcritical);

        let r = classify_regime(&pair(0.5, 0.5), 2).unwrap();
        assert!(r.sublinear && !r.superlinear);
    }

    #[test]
    fn wellposedness_examples() {
        use LebesgueExponent::*;
        let e = pair(2.0, 2.0);
        let w = wellposedness(&e, 1, Finite(1.0), Finite(1.0)).unwrap();
        assert!(w.existence && w.uniqueness);
        let w = wellposedness(&e, 3, Finite(1.0), Finite(1.0)).unwrap();
        assert!(!w.existence && !w.uniqueness);
        for n in 1..6 {
            let w = wellposedness(&pair(9.0, 7.0), n, Infinity, Infinity).unwrap();
            assert!(w.existence && w.uniqueness);
        }
        assert!(wellposedness(&e, 1, Finite(0.5), Infinity).is_err());
    }

    #[test]
    fn wellposedness_sublinear_has_no_uniqueness() {
        use LebesgueExponent::*;
        let w = wellposedness(&pair(0.5, 3.0), 1, Infinity, Infinity).unwrap();
        assert!(w.existence && !w.uniqueness);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn flat_solution_resubstitutes(p in 0.3f64..6.0, q in 0.3f64..6.0) {
            prop_assume!(p * q >= 1.5);
            let e = pair(p, q);
            for t in [0.5, 1.0, 2.0] {
                let h = 1e-3 * t;
                let f = |s: f64| eval_flat(&e, s).unwrap();
                let d = |g: &dyn Fn(f64) -> f64| {
                    (-g(t + 2.0 * h) + 8.0 * g(t + h) - 8.0 * g(t - h) + g(t - 2.0 * h)) / (12.0 * h)
                };
                let du = d(&|s| f(s).0);
                let dv = d(&|s| f(s).1);
                let (u, v) = f(t);
                prop_assert!((du + v.powf(p)).abs() <= 1e-6 * v.powf(p));
                prop_assert!((dv + u.powf(q)).abs() <= 1e-6 * u.powf(q));
            }
        }

        #[test]
        fn swap_symmetry(p in 0.1f64..8.0, q in 0.1f64..8.0) {
            prop_assume!((p * q - 1.0).abs() > 1e-6);
            let e = pair(p, q);
            let s = pair(q, p);
            prop_assert_eq!(e.a(), s.b());
            prop_assert_eq!(e.b(), s.a());
            prop_assert_eq!(e.swapped(), s);
        }

        #[test]
        fn measure_subcritical_monotone_in_dimension(p in 0.1f64..8.0, q in 0.1f64..8.0) {
            prop_assume!((p * q - 1.0).abs() > 1e-6);
            let e = pair(p, q);
            let mut seen_false = false;
            for n in 1..12 {
                let r = classify_regime(&e, n).unwrap();
                prop_assert!(!(r.superlinear && r.sublinear));
                prop_assert!(!(r.removable_supercritical && r.measure_subcritical));
                if seen_false {
                    prop_assert!(!r.measure_subcritical);
                }
                seen_false |= !r.measure_subcritical;
            }
        }
    }
}
