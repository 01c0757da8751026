use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::AnalysisError;

// Gauss-Kronrod 7/15 abscissae and weights on [-1, 1], non-negative half.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

const MAX_INTERVALS: usize = 2000;

/// Result of [`integrate_adaptive`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod_panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Panel {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let pair = f(c - dx) + f(c + dx);
        kron += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Panel { a, b, value: kron * h, error: ((kron - gauss) * h).abs() }
}

/// Globally adaptive Gauss-Kronrod (7/15) quadrature of `f` on `[a, b]`.
///
/// Bisects the panel with the largest error until the summed error estimate
/// drops below `abs_tol` or the panel budget runs out.
pub fn integrate_adaptive<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64) -> Quadrature {
    if a == b {
        return Quadrature { value: 0.0, error_estimate: 0.0, evaluations: 0 };
    }
    let first = kronrod_panel(&f, a, b);
    let mut error = first.error;
    let mut evaluations = 15;
    let mut heap = BinaryHeap::from([first]);
    while error > abs_tol && heap.len() < MAX_INTERVALS {
        let worst = heap.pop().expect("heap never empties");
        let mid = 0.5 * (worst.a + worst.b);
        let left = kronrod_panel(&f, worst.a, mid);
        let right = kronrod_panel(&f, mid, worst.b);
        evaluations += 30;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }
    // re-sum to shed the drift of the running error update
    let value = heap.iter().map(|p| p.value).sum();
    let error_estimate = heap.iter().map(|p| p.error).sum();
    Quadrature { value, error_estimate, evaluations }
}

/// Target bound on the neglected tail beyond the truncation point.
const TAIL_TOL: f64 = 1e-14;
const QUAD_TOL: f64 = 1e-13;

/// `G(s) = ∫_s^∞ exp(-δ u^p) du` for `0 < δ < 1`, `p > 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GFunction {
    delta: f64,
    p: f64,
    int_p: Option<i32>,
}

/// Value of [`GFunction`] at one point together with how it was obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GEvaluation {
    pub value: f64,
    /// Upper limit used for the quadrature.
    pub cutoff: f64,
    /// Analytic bound on `∫_cutoff^∞`, already included in `value`.
    pub tail_bound: f64,
    pub quadrature_error: f64,
}

impl GFunction {
    /// `0 < delta < 1` and `p > 1`, the range in which the bound holds.
    pub fn new(delta: f64, p: f64) -> Result<Self, AnalysisError> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(AnalysisError::InvalidArgument(format!("delta = {delta} not in (0, 1)")));
        }
        if p <= 1.0 {
            return Err(AnalysisError::InvalidArgument(format!("p = {p} must exceed 1")));
        }
        Self::general(delta, p)
    }

    /// Any `delta > 0`, `p >= 1`. Used for the time transform of the
    /// estimator, which needs `delta = 1` and accepts `p = 1`.
    pub(crate) fn general(delta: f64, p: f64) -> Result<Self, AnalysisError> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(AnalysisError::InvalidArgument(format!("delta = {delta} must be positive")));
        }
        if !(p >= 1.0 && p.is_finite()) {
            return Err(AnalysisError::InvalidArgument(format!("p = {p} must be at least 1")));
        }
        let int_p = (p.fract() == 0.0 && p <= 16.0).then_some(p as i32);
        Ok(Self { delta, p, int_p })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    fn pow(&self, u: f64) -> f64 {
        match self.int_p {
            Some(k) => u.powi(k),
            None => u.powf(self.p),
        }
    }

    fn integrand(&self, u: f64) -> f64 {
        (-self.delta * self.pow(u)).exp()
    }

    // ∫_B^∞ e^{-δu^p} du <= e^{-δB^p} / (δ p B^{p-1}) for B > 0
    fn tail_bound(&self, b: f64) -> f64 {
        self.integrand(b) / (self.delta * self.p * self.pow(b) / b)
    }

    /// Evaluates `G(s)` for `s >= 0`.
    pub fn eval(&self, s: f64) -> Result<GEvaluation, AnalysisError> {
        if !(s >= 0.0 && s.is_finite()) {
            return Err(AnalysisError::InvalidArgument(format!("G evaluated at s = {s}")));
        }
        let mut cutoff = s.max(1.0);
        let mut tail_bound = self.tail_bound(cutoff);
        while tail_bound >= TAIL_TOL {
            cutoff *= 1.25;
            tail_bound = self.tail_bound(cutoff);
        }
        let q = integrate_adaptive(|u| self.integrand(u), s, cutoff, QUAD_TOL);
        Ok(GEvaluation {
            value: q.value + tail_bound,
            cutoff,
            tail_bound,
            quadrature_error: q.error_estimate,
        })
    }

    pub fn value(&self, s: f64) -> Result<f64, AnalysisError> {
        self.eval(s).map(|g| g.value)
    }
}

/// Shorthand for `GFunction::new(delta, p)?.value(s)`.
pub fn g_integral(s: f64, delta: f64, p: f64) -> Result<f64, AnalysisError> {
    GFunction::new(delta, p)?.value(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn integrates_polynomials_exactly() {
        let q = integrate_adaptive(|x| x.powi(5) - 3.0 * x * x + 1.0, -1.0, 2.0, 1e-14);
        // [x^6/6 - x^3 + x] from -1 to 2
        let exact = (64.0 / 6.0 - 8.0 + 2.0) - (1.0 / 6.0 + 1.0 - 1.0);
        assert_relative_eq!(q.value, exact, max_relative = 1e-14);
    }

    #[test]
    fn integrates_gaussian() {
        let q = integrate_adaptive(|x| (-x * x).exp(), 0.0, 10.0, 1e-14);
        assert_relative_eq!(q.value, 0.5 * std::f64::consts::PI.sqrt(), max_relative = 1e-13);
    }

    #[test]
    fn g_rejects_bad_parameters() {
        assert!(GFunction::new(1.0, 2.0).is_err());
        assert!(GFunction::new(0.5, 1.0).is_err());
        assert!(g_integral(-0.1, 0.5, 2.0).is_err());
    }

    #[test]
    fn g_gaussian_case() {
        // δ = 1/2, p = 2: G(s) = sqrt(pi/2) erfc(s / sqrt 2)
        let g = GFunction::new(0.5, 2.0).unwrap();
        assert_relative_eq!(g.value(0.0).unwrap(), (std::f64::consts::PI / 2.0).sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn g_tail_bound_is_tiny_and_monotone() {
        let g = GFunction::new(0.3, 3.0).unwrap();
        let mut prev = f64::INFINITY;
        for k in 0..40 {
            let e = g.eval(0.1 * k as f64).unwrap();
            assert!(e.tail_bound < TAIL_TOL);
            assert!(e.value < prev);
            prev = e.value;
        }
    }
}
