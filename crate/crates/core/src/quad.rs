//! Numerical quadrature used throughout the crate.
//!
//! Three rules are provided:
//! - adaptive Gauss–Kronrod (7,15) with global bisection for smooth integrands,
//! - tanh-sinh on a finite interval, which tolerates integrable endpoint singularities,
//! - exp-sinh on a half-line `[a, ∞)` for decaying tails.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};

/// Value and error estimate of a quadrature.
#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
    pub evals: usize,
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive Gauss–Kronrod quadrature of `f` over `[a, b]`.
///
/// Stops when the summed error estimate is below `max(abs_tol, rel_tol·|I|)`.
pub fn gauss_kronrod<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64, max_segments: usize) -> Result<Quadrature> {
    if a == b {
        return Ok(Quadrature { value: 0.0, error: 0.0, evals: 0 });
    }
    let (value, error) = gk15(&f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value, error });
    let mut total = value;
    let mut total_err = error;
    let mut evals = 15;
    while total_err > abs_tol.max(rel_tol * total.abs()) {
        if heap.len() >= max_segments {
            return Err(Error::Tolerance(format!(
                "Gauss-Kronrod on [{a}, {b}] stalled at error {total_err:e} after {max_segments} segments"
            )));
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            heap.push(worst);
            break;
        }
        let (v1, e1) = gk15(&f, worst.a, mid);
        let (v2, e2) = gk15(&f, mid, worst.b);
        evals += 30;
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        heap.push(Segment {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Segment {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
        });
    }
    if !total.is_finite() {
        return Err(Error::Tolerance(format!("non-finite Gauss-Kronrod result on [{a}, {b}]")));
    }
    // Re-sum from the segments so that drift from the running update does not accumulate.
    let mut segs: Vec<Segment> = heap.into_vec();
    segs.sort_by(|s, t| s.a.total_cmp(&t.a));
    let value = neumaier(segs.iter().map(|s| s.value));
    let error = segs.iter().map(|s| s.error).sum();
    Ok(Quadrature { value, error, evals })
}

/// Tanh-sinh quadrature on the finite interval `[a, b]`.
///
/// Abscissae are generated from their distance to the nearer endpoint, so the
/// integrand is never evaluated at the endpoints themselves and integrable
/// singularities there are resolved.
pub fn tanh_sinh<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<Quadrature> {
    if a == b {
        return Ok(Quadrature { value: 0.0, error: 0.0, evals: 0 });
    }
    let half = 0.5 * (b - a);
    let t_max = 4.0;
    let term = |t: f64| -> f64 {
        let u = FRAC_PI_2 * t.sinh();
        let ch = u.cosh();
        let w = FRAC_PI_2 * t.cosh() / (ch * ch);
        if w == 0.0 || !w.is_finite() {
            return 0.0;
        }
        let d = 2.0 * half / ((2.0 * u.abs()).exp() + 1.0);
        let x = if t > 0.0 { b - d } else { a + d };
        if x <= a || x >= b {
            return 0.0;
        }
        let v = w * f(x);
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    let mut h = 1.0;
    let mut sum = term(0.0);
    let mut evals = 1;
    let mut k = 1;
    while (k as f64) * h <= t_max {
        sum += term(k as f64 * h) + term(-(k as f64) * h);
        evals += 2;
        k += 1;
    }
    let mut estimate = half * h * sum;
    for level in 1..=12 {
        h *= 0.5;
        let mut j = 1;
        let mut add = 0.0;
        while (j as f64) * h <= t_max {
            add += term(j as f64 * h) + term(-(j as f64) * h);
            evals += 2;
            j += 2;
        }
        sum += add;
        let next = half * h * sum;
        let err = (next - estimate).abs();
        estimate = next;
        if level >= 3 && err <= tol.max(4.0 * f64::EPSILON * next.abs()) {
            return Ok(Quadrature { value: next, error: err, evals });
        }
    }
    Err(Error::Tolerance(format!("tanh-sinh on [{a}, {b}] did not reach {tol:e}")))
}

/// Exp-sinh quadrature of a decaying integrand on `[a, ∞)`; abscissae
/// `a + exp(π/2·sinh t)` map the half-line exponentially.
pub fn exp_sinh<F: Fn(f64) -> f64>(f: F, a: f64, tol: f64) -> Result<Quadrature> {
    let t_max = 4.0;
    let term = |t: f64| -> f64 {
        let e = (FRAC_PI_2 * t.sinh()).exp();
        let x = a + e;
        if !x.is_finite() || x <= a {
            return 0.0;
        }
        let w = FRAC_PI_2 * t.cosh() * e;
        let v = w * f(x);
        if v.is_finite() {
            v
        } else {
            f64::NAN
        }
    };
    let mut h = 1.0;
    let mut sum = term(0.0);
    let mut evals = 1;
    let mut k = 1;
    while (k as f64) * h <= t_max {
        sum += term(k as f64 * h) + term(-(k as f64) * h);
        evals += 2;
        k += 1;
    }
    let mut estimate = h * sum;
    for level in 1..=12 {
        h *= 0.5;
        let mut j = 1;
        let mut add = 0.0;
        while (j as f64) * h <= t_max {
            add += term(j as f64 * h) + term(-(j as f64) * h);
            evals += 2;
            j += 2;
        }
        sum += add;
        let next = h * sum;
        if !next.is_finite() {
            return Err(Error::Tolerance(format!("exp-sinh on [{a}, inf) produced a non-finite sum")));
        }
        let err = (next - estimate).abs();
        estimate = next;
        if level >= 3 && err <= tol.max(4.0 * f64::EPSILON * next.abs()) {
            return Ok(Quadrature { value: next, error: err, evals });
        }
    }
    Err(Error::Tolerance(format!("exp-sinh on [{a}, inf) did not reach {tol:e}")))
}

/// Compensated (Neumaier) summation.
pub fn neumaier<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Running compensated sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct Accumulator {
    sum: f64,
    comp: f64,
}

impl Accumulator {
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_kronrod_polynomial_and_oscillatory() {
        let q = gauss_kronrod(|x| x * x * x - x, -1.0, 2.0, 1e-13, 0.0, 100).unwrap();
        assert!((q.value - 2.25).abs() < 1e-13);
        let q = gauss_kronrod(|x: f64| (10.0 * x).sin(), 0.0, 3.0, 1e-12, 0.0, 1000).unwrap();
        let exact = (1.0 - (30.0_f64).cos()) / 10.0;
        assert!((q.value - exact).abs() < 1e-11);
    }

    #[test]
    fn tanh_sinh_endpoint_singularities() {
        let q = tanh_sinh(|x: f64| -x.ln(), 0.0, 1.0, 1e-12).unwrap();
        assert!((q.value - 1.0).abs() < 1e-11, "{}", q.value);
        let q = tanh_sinh(|x: f64| x.powf(-0.75), 0.0, 1.0, 1e-10).unwrap();
        assert!((q.value - 4.0).abs() < 1e-8, "{}", q.value);
    }

    #[test]
    fn exp_sinh_tails() {
        let q = exp_sinh(|x: f64| (-x).exp(), 0.0, 1e-12).unwrap();
        assert!((q.value - 1.0).abs() < 1e-11);
        let q = exp_sinh(|x: f64| 1.0 / (x * x), 1.0, 1e-12).unwrap();
        assert!((q.value - 1.0).abs() < 1e-10, "{}", q.value);
    }

    #[test]
    fn neumaier_beats_naive() {
        let v = [1.0, 1e100, 1.0, -1e100];
        assert_eq!(neumaier(v), 2.0);
    }
}
