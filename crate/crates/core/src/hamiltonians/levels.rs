//! Exact integration of `E_ε[g(r)] V_α''(r)` along one side of the origin.
//!
//! `E_ε ∘ g` is constant between consecutive solutions of `g(r) ∈ εℤ`, so the
//! integral is a finite sum of `level · (V_α'(b) - V_α'(a))` once the crossings
//! are located. Crossings are found on monotone pieces of `g`, whose ends are
//! the sign changes of `g'` on a sample grid.

use crate::error::{Error, Result};
use crate::potentials::Potential;
use crate::staircase::{e_eps, Envelope};

const GEOMETRIC_SAMPLES: usize = 1500;
const UNIFORM_SAMPLES: usize = 2500;
/// Smallest geometric sample relative to the interval length, when it starts at 0.
const INNER_RATIO: f64 = 1e-12;
const MAX_CROSSINGS: usize = 50_000_000;
const ROOT_ITERATIONS: usize = 200;
/// Values within this fraction of `ε` from `εℤ` count as lattice values.
const LATTICE_SNAP: f64 = 1e-9;

/// Interval `[a, b]` on which `E_ε ∘ g` equals `level`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Piece {
    pub a: f64,
    pub b: f64,
    pub level: f64,
}

/// `E_ε` with values near `εℤ` snapped onto it, so that differences of lattice
/// values that carry rounding still pick the requested envelope.
pub(crate) fn quantize(gamma: f64, eps: f64, env: Envelope) -> f64 {
    let k = (gamma / eps).round();
    if (gamma - k * eps).abs() <= LATTICE_SNAP * eps {
        e_eps(k * eps, eps, env)
    } else {
        e_eps(gamma, eps, env)
    }
}

/// `V_α'(r)` for `r > 0`, zero at infinity.
#[inline]
pub(crate) fn dv(pot: &Potential, alpha: f64, r: f64) -> f64 {
    if r == f64::INFINITY {
        0.0
    } else {
        pot.scaled_d(alpha, 1, r)
    }
}

/// Smallest `r ∈ [lo, hi]` beyond which `bound·|V_α'(r)| ≤ budget`, or `hi` if none.
pub(crate) fn cutoff(pot: &Potential, alpha: f64, bound: f64, budget: f64, lo: f64, hi: f64) -> f64 {
    let tail = |r: f64| bound * dv(pot, alpha, r).abs();
    if !(tail(hi) <= budget) {
        return hi;
    }
    let (mut a, mut b) = (lo.max(hi * INNER_RATIO), hi);
    if tail(a) <= budget {
        return a;
    }
    for _ in 0..200 {
        let m = (a * b).sqrt();
        if !(m > a && m < b) {
            break;
        }
        if tail(m) <= budget {
            b = m;
        } else {
            a = m;
        }
    }
    b
}

fn samples(a: f64, b: f64) -> Vec<f64> {
    let lo = if a > 0.0 { a } else { b * INNER_RATIO };
    let ratio = (b / lo).powf(1.0 / (GEOMETRIC_SAMPLES - 1) as f64);
    let mut s: Vec<f64> = Vec::with_capacity(GEOMETRIC_SAMPLES + UNIFORM_SAMPLES + 1);
    s.push(a);
    let mut r = lo;
    for _ in 0..GEOMETRIC_SAMPLES {
        s.push(r.min(b));
        r *= ratio;
    }
    let du = (b - a) / (UNIFORM_SAMPLES - 1) as f64;
    s.extend((0..UNIFORM_SAMPLES).map(|i| a + i as f64 * du));
    s.push(b);
    s.retain(|r| *r >= a && *r <= b);
    s.sort_by(f64::total_cmp);
    s.dedup();
    s
}

/// Ends of the monotone pieces of `g` on `[a, b]`.
fn monotone_breaks(dg: &dyn Fn(f64) -> f64, a: f64, b: f64) -> Vec<f64> {
    let mut ends = vec![a];
    let mut last: Option<(f64, f64)> = None;
    for r in samples(a, b) {
        let d = dg(r);
        if d == 0.0 || !d.is_finite() {
            continue;
        }
        if let Some((r0, s0)) = last {
            if s0 != d.signum() {
                let (mut lo, mut hi) = (r0, r);
                for _ in 0..200 {
                    let m = 0.5 * (lo + hi);
                    if !(m > lo && m < hi) {
                        break;
                    }
                    let dm = dg(m);
                    if dm == 0.0 {
                        lo = m;
                        hi = m;
                        break;
                    }
                    if dm.signum() == s0 {
                        lo = m;
                    } else {
                        hi = m;
                    }
                }
                let t = 0.5 * (lo + hi);
                if t > *ends.last().unwrap() && t < b {
                    ends.push(t);
                }
            }
        }
        last = Some((r, d.signum()));
    }
    ends.push(b);
    ends
}

/// Solves `g(r) = target` on a bracket where `g` is monotone.
fn solve(g: &dyn Fn(f64) -> f64, dg: &dyn Fn(f64) -> f64, target: f64, bracket: (f64, f64, f64, f64), increasing: bool) -> f64 {
    let (mut lo, mut hi, glo, ghi) = bracket;
    let mut r = if ghi != glo {
        lo + (hi - lo) * ((target - glo) / (ghi - glo)).clamp(0.0, 1.0)
    } else {
        0.5 * (lo + hi)
    };
    for _ in 0..ROOT_ITERATIONS {
        let f = g(r) - target;
        if f == 0.0 {
            return r;
        }
        if (f < 0.0) == increasing {
            lo = r;
        } else {
            hi = r;
        }
        let d = dg(r);
        let mut next = r - f / d;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - r).abs() <= 4.0 * f64::EPSILON * r.abs() || hi - lo <= 4.0 * f64::EPSILON * hi.abs() {
            return next;
        }
        r = next;
    }
    r
}

/// Pieces of constant `E_ε ∘ g` covering `[a, b]`, merged where the level repeats.
pub(crate) fn level_pieces(g: &dyn Fn(f64) -> f64, dg: &dyn Fn(f64) -> f64, a: f64, b: f64, eps: f64, env: Envelope) -> Result<Vec<Piece>> {
    let mut out: Vec<Piece> = Vec::new();
    if !(b > a) {
        return Ok(out);
    }
    let push = |p: Piece, out: &mut Vec<Piece>| match out.last_mut() {
        Some(last) if last.level == p.level => last.b = p.b,
        _ => out.push(p),
    };
    let ends = monotone_breaks(dg, a, b);
    let mut crossings = 0usize;
    for w in ends.windows(2) {
        let (pa, pb) = (w[0], w[1]);
        let (ga, gb) = (g(pa), g(pb));
        if !(ga.is_finite() && gb.is_finite()) {
            return Err(Error::Domain(format!("test function is not finite on [{pa}, {pb}]")));
        }
        if ga == gb {
            push(
                Piece {
                    a: pa,
                    b: pb,
                    level: quantize(ga, eps, env),
                },
                &mut out,
            );
            continue;
        }
        let increasing = gb > ga;
        let (lo, hi) = if increasing { (ga, gb) } else { (gb, ga) };
        let mut kmin = (lo / eps).ceil();
        if kmin * eps <= lo {
            kmin += 1.0;
        }
        let mut kmax = (hi / eps).floor();
        if kmax * eps >= hi {
            kmax -= 1.0;
        }
        let count = if kmax >= kmin { (kmax - kmin) as usize + 1 } else { 0 };
        crossings += count;
        if crossings > MAX_CROSSINGS {
            return Err(Error::Tolerance(format!("more than {MAX_CROSSINGS} lattice crossings; increase eps or shrink rho")));
        }
        let (mut r0, mut g0) = (pa, ga);
        for i in 0..count {
            let k = if increasing { kmin + i as f64 } else { kmax - i as f64 };
            let target = k * eps;
            let r = solve(g, dg, target, (r0, pb, g0, gb), increasing).clamp(r0, pb);
            let level = e_eps(0.5 * (g0 + target), eps, Envelope::Upper);
            push(Piece { a: r0, b: r, level }, &mut out);
            r0 = r;
            g0 = target;
        }
        let level = if g0 == gb {
            quantize(gb, eps, env)
        } else {
            e_eps(0.5 * (g0 + gb), eps, Envelope::Upper)
        };
        push(Piece { a: r0, b: pb, level }, &mut out);
    }
    Ok(out)
}
