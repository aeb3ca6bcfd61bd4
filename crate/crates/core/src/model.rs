//! Barotropic pressure laws, the potential energy density `G`, and the
//! density-corridor constants.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fields::ScalarField;

/// Cubic pressure `P(ρ) = aρ + bρ² + cρ³` that rises on `[0, ρ′]`, dips
/// between `ρ′` and `ρ″`, and rises again after `ρ″`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NonMonotone {
    coefficients: [f64; 3],
    rho_prime: f64,
    rho_double_prime: f64,
}

const VALIDATION_SAMPLES: usize = 20_000;

impl NonMonotone {
    /// Builds the law from its coefficients `[a, b, c]` and landmarks and
    /// checks the monotonicity hypotheses on a fine sample of `[0, 4ρ″]`.
    pub fn new(coefficients: [f64; 3], rho_prime: f64, rho_double_prime: f64) -> Result<Self> {
        if !(rho_prime > 0.0 && rho_double_prime > rho_prime) {
            return Err(Error::InvalidParams(format!(
                "need 0 < rho' < rho'', got {rho_prime}, {rho_double_prime}"
            )));
        }
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParams(
                "non-finite pressure coefficient".into(),
            ));
        }
        let law = Self {
            coefficients,
            rho_prime,
            rho_double_prime,
        };
        law.validate()?;
        Ok(law)
    }

    /// Places the local maximum of `P` at `ρ′ + θ(ρ″ − ρ′)` and the local
    /// minimum at `ρ″`; `slope` is `P′(0)`.
    ///
    /// `θ` must lie in `(1/3, 1)`; below `1/3` the dip undershoots `P(ρ′)`.
    pub fn from_landmarks(
        rho_prime: f64,
        rho_double_prime: f64,
        slope: f64,
        theta: f64,
    ) -> Result<Self> {
        if !(slope > 0.0 && slope.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "pressure slope must be positive, got {slope}"
            )));
        }
        if !(theta > 1.0 / 3.0 && theta < 1.0) {
            return Err(Error::InvalidParams(format!(
                "peak fraction must lie in (1/3, 1), got {theta}"
            )));
        }
        let r1 = rho_prime + theta * (rho_double_prime - rho_prime);
        let r2 = rho_double_prime;
        let c = slope / (3.0 * r1 * r2);
        let b = -1.5 * c * (r1 + r2);
        Self::new([slope, b, c], rho_prime, rho_double_prime)
    }

    pub fn coefficients(&self) -> [f64; 3] {
        self.coefficients
    }

    pub fn rho_prime(&self) -> f64 {
        self.rho_prime
    }

    pub fn rho_double_prime(&self) -> f64 {
        self.rho_double_prime
    }

    fn p(&self, rho: f64) -> f64 {
        let [a, b, c] = self.coefficients;
        rho * (a + rho * (b + rho * c))
    }

    fn dp(&self, rho: f64) -> f64 {
        let [a, b, c] = self.coefficients;
        a + rho * (2.0 * b + 3.0 * c * rho)
    }

    fn validate(&self) -> Result<()> {
        let top = 4.0 * self.rho_double_prime;
        let p1 = self.p(self.rho_prime);
        let p2 = self.p(self.rho_double_prime);
        let fail = |what: &str, rho: f64| {
            Err(Error::InvalidParams(format!(
                "pressure law violates {what} near rho = {rho}"
            )))
        };
        let in_rising_branch = |rho: f64| rho <= self.rho_prime || rho >= self.rho_double_prime;
        let (mut prev_rho, mut prev) = (0.0, 0.0);
        for i in 1..=VALIDATION_SAMPLES {
            let rho = top * i as f64 / VALIDATION_SAMPLES as f64;
            let p = self.p(rho);
            if p <= 0.0 {
                return fail("P > 0", rho);
            }
            let rising = in_rising_branch(prev_rho) && in_rising_branch(rho);
            if rising && p <= prev {
                return fail("monotonicity outside (rho', rho'')", rho);
            }
            if rho > self.rho_prime && p <= p1 {
                return fail("P(rho) > P(rho')", rho);
            }
            if rho > self.rho_double_prime && p <= p2 {
                return fail("P(rho) > P(rho'')", rho);
            }
            (prev_rho, prev) = (rho, p);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PressureLaw {
    /// `P = Kρ^γ` with `γ ≥ 1`.
    GammaLaw {
        k: f64,
        gamma: f64,
    },
    NonMonotone(NonMonotone),
}

/// `e^y − 1 − y` without cancellation for small `y`.
fn expm1_minus_linear(y: f64) -> f64 {
    if y.abs() < 0.5 {
        let mut term = y * y / 2.0;
        let mut sum = term;
        for k in 3..30 {
            term *= y / k as f64;
            sum += term;
            if term.abs() < 1e-17 * sum.abs() {
                break;
            }
        }
        sum
    } else {
        y.exp_m1() - y
    }
}

fn ensure_positive(rho: f64) -> Result<()> {
    if rho > 0.0 {
        Ok(())
    } else if rho.is_nan() {
        Err(Error::NonFinite("rho".into()))
    } else {
        Err(Error::blow_up("rho", format!("non-positive density {rho}")))
    }
}

/// Adaptive Simpson quadrature of `f` on `[a, b]` to absolute tolerance `tol`.
fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let diff = left + right - whole;
        if depth == 0 || diff.abs() <= 15.0 * tol {
            left + right + diff / 15.0
        } else {
            recurse(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                + recurse(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
    }
    if a == b {
        return 0.0;
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = simpson(fa, fm, fb, a, b);
    recurse(f, a, b, fa, fm, fb, whole, tol, 40)
}

impl PressureLaw {
    pub fn gamma_law(k: f64, gamma: f64) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "stiffness must be positive, got {k}"
            )));
        }
        if !(gamma >= 1.0 && gamma.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "adiabatic exponent must be >= 1, got {gamma}"
            )));
        }
        Ok(Self::GammaLaw { k, gamma })
    }

    pub fn pressure_at(&self, rho: f64) -> Result<f64> {
        ensure_positive(rho)?;
        Ok(self.p(rho))
    }

    pub fn pressure_derivative_at(&self, rho: f64) -> Result<f64> {
        ensure_positive(rho)?;
        Ok(self.dp(rho))
    }

    /// `G(ρ) = ρ ∫_{ρ̃}^{ρ} (P(s) − P(ρ̃)) / s² ds`.
    pub fn g_potential_at(&self, rho_tilde: f64, rho: f64) -> Result<f64> {
        ensure_positive(rho)?;
        ensure_positive(rho_tilde)?;
        Ok(self.g(rho_tilde, rho))
    }

    /// Landmarks `(ρ′, ρ″)`; a monotone law uses `ρ̃` for both.
    pub fn landmarks(&self, rho_tilde: f64) -> (f64, f64) {
        match self {
            Self::GammaLaw { .. } => (rho_tilde, rho_tilde),
            Self::NonMonotone(law) => (law.rho_prime, law.rho_double_prime),
        }
    }

    pub(crate) fn p(&self, rho: f64) -> f64 {
        match self {
            Self::GammaLaw { k, gamma } => k * rho.powf(*gamma),
            Self::NonMonotone(law) => law.p(rho),
        }
    }

    pub(crate) fn dp(&self, rho: f64) -> f64 {
        match self {
            Self::GammaLaw { k, gamma } => {
                if *gamma == 1.0 {
                    *k
                } else {
                    k * gamma * rho.powf(gamma - 1.0)
                }
            }
            Self::NonMonotone(law) => law.dp(rho),
        }
    }

    pub(crate) fn g(&self, rho_tilde: f64, rho: f64) -> f64 {
        match self {
            Self::GammaLaw { k, gamma } => {
                // Written in x = log(ρ/ρ̃) so that G = O(x²) near ρ̃ keeps
                // full relative precision.
                let x = (rho / rho_tilde).ln();
                if *gamma == 1.0 {
                    k * rho_tilde * (x * x.exp_m1() - expm1_minus_linear(x))
                } else {
                    let bracket = expm1_minus_linear(gamma * x) - gamma * expm1_minus_linear(x);
                    k * rho_tilde.powf(*gamma) * bracket / (gamma - 1.0)
                }
            }
            Self::NonMonotone(law) => {
                let p_tilde = law.p(rho_tilde);
                let integrand = |s: f64| (law.p(s) - p_tilde) / (s * s);
                rho * adaptive_simpson(&integrand, rho_tilde, rho, 1e-12)
            }
        }
    }
}

fn pointwise<F>(rho: &ScalarField, f: F) -> Result<ScalarField>
where
    F: Fn(f64) -> f64 + Sync,
{
    let bad = rho.values().par_iter().position_first(|&r| !(r > 0.0));
    if let Some(i) = bad {
        ensure_positive(rho.values()[i])?;
    }
    Ok(rho.map(f))
}

pub fn pressure(law: &PressureLaw, rho: &ScalarField) -> Result<ScalarField> {
    pointwise(rho, |r| law.p(r))
}

pub fn pressure_derivative(law: &PressureLaw, rho: &ScalarField) -> Result<ScalarField> {
    pointwise(rho, |r| law.dp(r))
}

pub fn g_potential(law: &PressureLaw, rho_tilde: f64, rho: &ScalarField) -> Result<ScalarField> {
    ensure_positive(rho_tilde)?;
    pointwise(rho, |r| law.g(rho_tilde, r))
}

/// Bounds `ρ̲ < ρ̄` of the density corridor and the margin `d` of the
/// initial data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Corridor {
    pub rho_lower: f64,
    pub rho_upper: f64,
    pub d: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub mu: f64,
    pub lambda: f64,
    pub rho_tilde: f64,
    pub h_tilde: [f64; 3],
    pub pressure: PressureLaw,
    pub corridor: Corridor,
    delta: f64,
}

/// `δ = min{min(ρ̃, ρ′) − ρ̲, ρ̄ − max(ρ̃, ρ″), (ρ̄ − ρ̲)/2}`.
pub fn corridor_delta(rho_tilde: f64, landmarks: (f64, f64), corridor: &Corridor) -> f64 {
    let (rp, rpp) = landmarks;
    let a = rho_tilde.min(rp) - corridor.rho_lower;
    let b = corridor.rho_upper - rho_tilde.max(rpp);
    let c = 0.5 * (corridor.rho_upper - corridor.rho_lower);
    a.min(b).min(c)
}

impl ModelParams {
    pub fn new(
        mu: f64,
        lambda: f64,
        rho_tilde: f64,
        h_tilde: [f64; 3],
        pressure: PressureLaw,
        corridor: Corridor,
    ) -> Result<Self> {
        let invalid = |m: String| Err(Error::InvalidParams(m));
        if !(mu > 0.0 && mu.is_finite() && lambda > 0.0 && lambda.is_finite()) {
            return invalid(format!(
                "viscosities must be positive, got mu={mu}, lambda={lambda}"
            ));
        }
        if !(rho_tilde > 0.0 && rho_tilde.is_finite()) {
            return invalid(format!(
                "reference density must be positive, got {rho_tilde}"
            ));
        }
        if h_tilde.iter().any(|h| !h.is_finite()) {
            return invalid("non-finite reference magnetic field".into());
        }
        let (rp, rpp) = pressure.landmarks(rho_tilde);
        let Corridor {
            rho_lower,
            rho_upper,
            d,
        } = corridor;
        if !(rho_lower < rho_tilde.min(rp)) {
            return invalid(format!(
                "rho_lower={rho_lower} must lie below min(rho_tilde, rho')"
            ));
        }
        if !(rho_upper > rho_tilde.max(rpp)) {
            return invalid(format!(
                "rho_upper={rho_upper} must lie above max(rho_tilde, rho'')"
            ));
        }
        let delta = corridor_delta(rho_tilde, (rp, rpp), &corridor);
        if !(delta > 0.0) {
            return invalid(format!("corridor width delta={delta} must be positive"));
        }
        if !(d > 0.0 && d < delta) {
            return invalid(format!("margin d={d} must lie in (0, delta={delta})"));
        }
        Ok(Self {
            mu,
            lambda,
            rho_tilde,
            h_tilde,
            pressure,
            corridor,
            delta,
        })
    }

    /// Gamma law with `K = 1` and corridor `[ρ̃/2, 3ρ̃/2]`, `d = ρ̃/4`.
    pub fn with_gamma(
        mu: f64,
        lambda: f64,
        rho_tilde: f64,
        h_tilde: [f64; 3],
        gamma: f64,
    ) -> Result<Self> {
        let corridor = Corridor {
            rho_lower: 0.5 * rho_tilde,
            rho_upper: 1.5 * rho_tilde,
            d: 0.25 * rho_tilde,
        };
        Self::new(
            mu,
            lambda,
            rho_tilde,
            h_tilde,
            PressureLaw::gamma_law(1.0, gamma)?,
            corridor,
        )
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// `P̃ = P(ρ̃)`.
    pub fn p_tilde(&self) -> f64 {
        self.pressure.p(self.rho_tilde)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorridorReport {
    pub min: f64,
    pub max: f64,
    pub inside: bool,
}

pub fn corridor_check(params: &ModelParams, rho: &ScalarField) -> CorridorReport {
    let (min, max) = (rho.min(), rho.max());
    CorridorReport {
        min,
        max,
        inside: min >= params.corridor.rho_lower && max <= params.corridor.rho_upper,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::GridSpec;
    use proptest::prelude::*;

    fn fixture() -> NonMonotone {
        NonMonotone::from_landmarks(0.8, 1.2, 1.0, 2.0 / 3.0).unwrap()
    }

    /// Composite Gauss-Legendre (5 point) on 2000 panels.
    fn gauss_integral(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
        let nodes = [
            (0.0, 0.568_888_888_888_888_9),
            (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
            (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
            (0.906_179_845_938_664, 0.236_926_885_056_189_1),
            (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
        ];
        let panels = 2000;
        let w = (b - a) / panels as f64;
        (0..panels)
            .map(|i| {
                let c = a + (i as f64 + 0.5) * w;
                nodes
                    .iter()
                    .map(|(x, wt)| wt * f(c + 0.5 * w * x))
                    .sum::<f64>()
                    * 0.5
                    * w
            })
            .sum()
    }

    fn g_by_quadrature(law: &PressureLaw, rho_tilde: f64, rho: f64) -> f64 {
        let pt = law.p(rho_tilde);
        rho * gauss_integral(|s| (law.p(s) - pt) / (s * s), rho_tilde, rho)
    }

    #[test]
    fn gamma_law_values() {
        let l = PressureLaw::gamma_law(1.0, 1.4).unwrap();
        assert_eq!(l.pressure_at(1.0).unwrap(), 1.0);
        let l2 = PressureLaw::gamma_law(1.0, 2.0).unwrap();
        assert_eq!(l2.pressure_at(2.0).unwrap(), 4.0);
        assert_eq!(l2.pressure_derivative_at(3.0).unwrap(), 6.0);
        let l1 = PressureLaw::gamma_law(2.5, 1.0).unwrap();
        for r in [0.1, 1.0, 7.0] {
            assert_eq!(l1.pressure_derivative_at(r).unwrap(), 2.5);
        }
        assert!(PressureLaw::gamma_law(1.0, 0.9).is_err());
    }

    #[test]
    fn g_closed_form_example() {
        let l = PressureLaw::gamma_law(1.0, 2.0).unwrap();
        assert!((l.g_potential_at(1.0, 2.0).unwrap() - 1.0).abs() < 1e-14);
        assert!((g_by_quadrature(&l, 1.0, 2.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn g_closed_form_matches_quadrature() {
        for gamma in [1.0, 1.4, 2.0, 3.0] {
            let l = PressureLaw::gamma_law(1.3, gamma).unwrap();
            for rho in [0.2, 0.7, 0.99, 1.05, 2.5, 9.0] {
                let a = l.g_potential_at(1.1, rho).unwrap();
                let b = g_by_quadrature(&l, 1.1, rho);
                assert!(
                    (a - b).abs() <= 1e-10 * b.abs(),
                    "gamma={gamma} rho={rho}: {a} vs {b}"
                );
            }
        }
    }

    #[test]
    fn g_vanishes_to_second_order_at_reference() {
        for law in [
            PressureLaw::gamma_law(1.0, 1.4).unwrap(),
            PressureLaw::NonMonotone(fixture()),
        ] {
            let rt = 1.0;
            assert_eq!(law.g(rt, rt), 0.0);
            let eps = 1e-4;
            let d1 = (law.g(rt, rt + eps) - law.g(rt, rt - eps)) / (2.0 * eps);
            assert!(d1.abs() < 1e-7, "{d1}");
            let eps = 1e-4;
            let d2 =
                (law.g(rt, rt + eps) - 2.0 * law.g(rt, rt) + law.g(rt, rt - eps)) / (eps * eps);
            let expect = law.dp(rt) / rt;
            assert!(
                (d2 - expect).abs() <= 1e-6 * expect.abs(),
                "{d2} vs {expect}"
            );
        }
    }

    #[test]
    fn non_monotone_g_matches_antiderivative() {
        let law = fixture();
        let [a, b, c] = law.coefficients();
        let rt = 1.0;
        let pt = law.p(rt);
        let exact = |r: f64| {
            r * (a * (r / rt).ln()
                + b * (r - rt)
                + 0.5 * c * (r * r - rt * rt)
                + pt * (1.0 / r - 1.0 / rt))
        };
        for r in [0.3, 0.8, 0.95, 1.2, 2.0] {
            let g = PressureLaw::NonMonotone(law).g(rt, r);
            assert!((g - exact(r)).abs() < 1e-11, "{r}");
        }
    }

    #[test]
    fn non_monotone_shape() {
        let law = fixture();
        assert!(law.dp(1.15) < 0.0);
        assert!(law.dp(0.5) > 0.0 && law.dp(1.5) > 0.0);
        assert!(law.dp(1.2).abs() < 1e-12);
        assert!(law.p(1.2) > law.p(0.8));
        // A dip that undershoots P(ρ′) must be rejected.
        assert!(NonMonotone::from_landmarks(0.8, 1.2, 1.0, 0.2).is_err());
        assert!(NonMonotone::new([1.0, -3.0, 1.0], 0.8, 1.2).is_err());
    }

    #[test]
    fn non_monotone_matches_polynomial() {
        let law = PressureLaw::NonMonotone(fixture());
        let [a, b, c] = fixture().coefficients();
        for r in [0.1, 0.8, 1.0, 1.7] {
            let direct = a * r + b * r.powi(2) + c * r.powi(3);
            assert!((law.pressure_at(r).unwrap() - direct).abs() < 1e-14);
        }
    }

    #[test]
    fn non_positive_density_is_blow_up() {
        let law = PressureLaw::gamma_law(1.0, 1.4).unwrap();
        assert!(law.pressure_at(0.0).unwrap_err().is_blow_up());
        let g = GridSpec::new(8, 1.0).unwrap();
        let mut rho = ScalarField::constant(g, 1.0);
        rho.values_mut()[3] = -0.1;
        assert!(matches!(pressure(&law, &rho), Err(Error::BlowUp { field, .. }) if field == "rho"));
    }

    #[test]
    fn params_validation_and_delta() {
        let law = PressureLaw::NonMonotone(fixture());
        let cor = Corridor {
            rho_lower: 0.5,
            rho_upper: 1.5,
            d: 0.2,
        };
        let p = ModelParams::new(0.1, 0.1, 1.0, [1.0; 3], law, cor).unwrap();
        let expect = (1.0f64.min(0.8) - 0.5).min(1.5 - 1.2).min(0.5);
        assert_eq!(p.delta(), expect);
        assert_eq!(
            corridor_delta(1.0, law.landmarks(1.0), &p.corridor),
            p.delta()
        );
        let bad_d = Corridor { d: 0.35, ..cor };
        assert!(ModelParams::new(0.1, 0.1, 1.0, [1.0; 3], law, bad_d).is_err());
        let bad_lower = Corridor {
            rho_lower: 0.85,
            ..cor
        };
        assert!(ModelParams::new(0.1, 0.1, 1.0, [1.0; 3], law, bad_lower).is_err());
        assert!(ModelParams::new(0.0, 0.1, 1.0, [1.0; 3], law, cor).is_err());
    }

    #[test]
    fn corridor_reports() {
        let p = ModelParams::with_gamma(0.1, 0.1, 1.0, [1.0; 3], 1.4).unwrap();
        let g = GridSpec::new(8, 1.0).unwrap();
        assert!(corridor_check(&p, &ScalarField::constant(g, 1.0)).inside);
        assert!(!corridor_check(&p, &ScalarField::constant(g, 2.5)).inside);
        let kap = g.kappa();
        let rho = ScalarField::from_fn(g, |x| 1.0 + 0.2 * (kap * x[0]).sin());
        assert!(corridor_check(&p, &rho).inside);
    }

    proptest! {
        #[test]
        fn g_nonnegative_for_monotone_laws(gamma in 1.0f64..3.0, rho in 0.1f64..10.0) {
            let law = PressureLaw::gamma_law(1.0, gamma).unwrap();
            prop_assert!(law.g(1.0, rho) >= 0.0);
        }

        #[test]
        fn non_monotone_derivative_matches_differences(rho in 0.05f64..3.0) {
            let law = PressureLaw::NonMonotone(fixture());
            let eps = 1e-5;
            let fd = (law.p(rho + eps) - law.p(rho - eps)) / (2.0 * eps);
            let dp = law.dp(rho);
            prop_assert!((fd - dp).abs() <= 1e-8 * dp.abs().max(law.p(rho) / rho));
        }
    }
}
