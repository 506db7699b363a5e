//! Initial data: explicit particle lists or signed densities sampled by quantiles.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::ParticleState;
use crate::error::{Error, Result};

/// Unit-mass profile of one density component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Shape {
    /// `(1 + cos(π(x - center)/width)) / (2 width)` on `|x - center| < width`.
    Bump {
        center: f64,
        width: f64,
    },
    Uniform {
        lo: f64,
        hi: f64,
    },
    /// Porous-medium self-similar profile at time `s` for `κ_s = (κ²)_xx`.
    Barenblatt {
        s: f64,
        center: f64,
    },
}

/// `(3 / (4√12))^{2/3}`, the height constant of the unit-mass Barenblatt profile.
fn barenblatt_height() -> f64 {
    (3.0 / (4.0 * 12f64.sqrt())).powf(2.0 / 3.0)
}

impl Shape {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Shape::Bump { center, width } => center.is_finite() && width > 0.0 && width.is_finite(),
            Shape::Uniform { lo, hi } => lo.is_finite() && hi.is_finite() && hi > lo,
            Shape::Barenblatt { s, center } => center.is_finite() && s > 0.0 && s.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid density shape {self:?}")))
        }
    }

    /// Closed support `[lo, hi]`.
    pub fn support(&self) -> (f64, f64) {
        match *self {
            Shape::Bump { center, width } => (center - width, center + width),
            Shape::Uniform { lo, hi } => (lo, hi),
            Shape::Barenblatt { s, center } => {
                let r = (12.0 * barenblatt_height()).sqrt() * s.powf(1.0 / 3.0);
                (center - r, center + r)
            }
        }
    }

    pub fn density(&self, x: f64) -> f64 {
        let (lo, hi) = self.support();
        if !(x > lo && x < hi) {
            return 0.0;
        }
        match *self {
            Shape::Bump { center, width } => (1.0 + (PI * (x - center) / width).cos()) / (2.0 * width),
            Shape::Uniform { lo, hi } => 1.0 / (hi - lo),
            Shape::Barenblatt { s, center } => {
                let a = s.powf(1.0 / 3.0);
                let xi = (x - center) / a;
                (barenblatt_height() - xi * xi / 12.0).max(0.0) / a
            }
        }
    }

    /// Cumulative distribution, in closed form.
    pub fn cdf(&self, x: f64) -> f64 {
        let (lo, hi) = self.support();
        if x <= lo {
            return 0.0;
        }
        if x >= hi {
            return 1.0;
        }
        match *self {
            Shape::Bump { center, width } => {
                let y = x - center;
                (y + width + (width / PI) * (PI * y / width).sin()) / (2.0 * width)
            }
            Shape::Uniform { lo, hi } => (x - lo) / (hi - lo),
            Shape::Barenblatt { s, center } => {
                let c = barenblatt_height();
                let a = s.powf(1.0 / 3.0);
                let xi_max = (12.0 * c).sqrt();
                let g = |z: f64| c * z - z * z * z / 36.0;
                (g((x - center) / a) - g(-xi_max)).clamp(0.0, 1.0)
            }
        }
    }

    /// `F⁻¹(q)` by bisection on the support.
    pub fn quantile(&self, q: f64) -> f64 {
        let (mut lo, mut hi) = self.support();
        if let Shape::Uniform { lo, hi } = *self {
            return lo + q * (hi - lo);
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if !(mid > lo && mid < hi) {
                break;
            }
            if self.cdf(mid) < q {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// Component `sign · mass · shape` of a signed density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityComponent {
    pub sign: i8,
    pub mass: f64,
    pub shape: Shape,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialData {
    /// Fixed configuration; `n` is the list length.
    Particles { x: Vec<f64>, b: Vec<i8> },
    /// `κ° = Σ sign · mass · shape`. With `n` particles a component receives
    /// `n_s ≈ n · mass` charges (largest remainders) at its `(i - ½)/n_s`
    /// quantiles, each shifted by up to `jitter` quantile cells (seeded); the
    /// rest are neutral.
    Density {
        components: Vec<DensityComponent>,
        #[serde(default)]
        jitter: f64,
    },
}

impl InitialData {
    pub fn validate(&self) -> Result<()> {
        match self {
            InitialData::Particles { x, b } => ParticleState::new(x.clone(), b.clone()).map(|_| ()),
            InitialData::Density { components, jitter } => {
                if !(*jitter >= 0.0 && *jitter < 0.5) {
                    return Err(Error::Config(format!("jitter must lie in [0, 0.5), got {jitter}")));
                }
                let mut total = 0.0;
                for c in components {
                    if c.sign != 1 && c.sign != -1 {
                        return Err(Error::Config(format!("component sign must be +1 or -1, got {}", c.sign)));
                    }
                    if !(c.mass > 0.0 && c.mass.is_finite()) {
                        return Err(Error::Config(format!("component mass must be positive, got {}", c.mass)));
                    }
                    c.shape.validate()?;
                    total += c.mass;
                }
                if total > 1.0 + 1e-12 {
                    return Err(Error::Config(format!("total mass {total} exceeds 1")));
                }
                Ok(())
            }
        }
    }

    /// `u°(x) = ∫_{-∞}^x κ°`; for explicit particles, the staircase they define.
    pub fn u0(&self, x: f64) -> f64 {
        match self {
            InitialData::Particles { x: xs, b } => {
                let n = xs.len() as f64;
                xs.iter().zip(b).filter(|(xi, _)| **xi <= x).map(|(_, &bi)| bi as f64).sum::<f64>() / n
            }
            InitialData::Density { components, .. } => components.iter().map(|c| c.sign as f64 * c.mass * c.shape.cdf(x)).sum(),
        }
    }

    /// Particle configuration with `n` particles (ignored for explicit lists).
    pub fn sample(&self, n: usize, seed: u64) -> Result<ParticleState> {
        let (components, jitter) = match self {
            InitialData::Particles { x, b } => return ParticleState::new(x.clone(), b.clone()),
            InitialData::Density { components, jitter } => (components, *jitter),
        };
        if n == 0 {
            return Err(Error::Config("need at least one particle".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut charged: Vec<(f64, i8)> = Vec::with_capacity(n);
        for (c, ns) in components.iter().zip(apportion(components, n)) {
            for i in 0..ns {
                let shift = if jitter > 0.0 { rng.gen_range(-jitter..jitter) } else { 0.0 };
                let q = (i as f64 + 0.5 + shift) / ns as f64;
                charged.push((c.shape.quantile(q), c.sign));
            }
        }
        charged.sort_by(|a, b| a.0.total_cmp(&b.0));
        let left = charged.first().map_or(0.0, |c| c.0) - 1.0;
        let neutral = n - charged.len();
        let mut x: Vec<f64> = (0..neutral).map(|k| left - (neutral - k) as f64).collect();
        let mut b = vec![0i8; neutral];
        for (xi, bi) in charged {
            x.push(xi);
            b.push(bi);
        }
        ParticleState::new(x, b)
    }
}

/// Charge counts `n_s ≈ n · mass_s` by largest remainders, summing to
/// `round(n · Σ mass_s) ≤ n`; ties go to the earlier component.
fn apportion(components: &[DensityComponent], n: usize) -> Vec<usize> {
    let quotas: Vec<f64> = components.iter().map(|c| n as f64 * c.mass).collect();
    let total = (quotas.iter().sum::<f64>().round() as usize).min(n);
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let mut order: Vec<usize> = (0..quotas.len()).collect();
    order.sort_by(|&a, &b| (quotas[b] - quotas[b].floor()).total_cmp(&(quotas[a] - quotas[a].floor())).then(a.cmp(&b)));
    let assigned: usize = counts.iter().sum();
    for &k in order.iter().take(total.saturating_sub(assigned)) {
        counts[k] += 1;
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;

    fn integrate_density(s: &Shape, x: f64) -> f64 {
        let (lo, _) = s.support();
        let k = 20_000;
        let h = (x - lo) / k as f64;
        (0..k).map(|i| s.density(lo + (i as f64 + 0.5) * h)).sum::<f64>() * h
    }

    #[test]
    fn cdfs_integrate_densities() {
        let shapes = [
            Shape::Bump { center: 0.3, width: 0.5 },
            Shape::Uniform { lo: -1.0, hi: 2.0 },
            Shape::Barenblatt { s: 0.05, center: -0.2 },
        ];
        for s in shapes {
            let (lo, hi) = s.support();
            for t in [0.1, 0.4, 0.77, 1.0] {
                let x = lo + t * (hi - lo);
                assert!((s.cdf(x) - integrate_density(&s, x)).abs() < 1e-7, "{s:?} at {x}");
                let q = s.cdf(x);
                if q > 0.0 && q < 1.0 {
                    assert!((s.quantile(q) - x).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn quantile_sampling_matches_u0() {
        let data = InitialData::Density {
            components: vec![
                DensityComponent {
                    sign: 1,
                    mass: 0.5,
                    shape: Shape::Bump { center: -0.3, width: 0.4 },
                },
                DensityComponent {
                    sign: -1,
                    mass: 0.5,
                    shape: Shape::Bump { center: 0.3, width: 0.4 },
                },
            ],
            jitter: 0.0,
        };
        data.validate().unwrap();
        for n in [20, 200] {
            let s = data.sample(n, 0).unwrap();
            assert_eq!(s.n(), n);
            assert_eq!(s.net_charge(), 0);
            let stair = crate::staircase::u_n(&s);
            let d = (0..400).map(|i| -1.0 + i as f64 * 0.005).map(|x| (stair.eval(x) - data.u0(x)).abs()).fold(0.0, f64::max);
            assert!(d <= 1.0 / n as f64 + 1e-12, "n = {n}: {d}");
        }
    }

    #[test]
    fn neutral_particles_fill_the_remainder() {
        let data = InitialData::Density {
            components: vec![DensityComponent {
                sign: -1,
                mass: 0.25,
                shape: Shape::Uniform { lo: 0.0, hi: 1.0 },
            }],
            jitter: 0.0,
        };
        let s = data.sample(40, 0).unwrap();
        assert_eq!(s.charged().len(), 10);
        assert_eq!(s.net_charge(), -10);
        assert!(s.x.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn jitter_is_seeded() {
        let data = InitialData::Density {
            components: vec![DensityComponent {
                sign: 1,
                mass: 1.0,
                shape: Shape::Bump { center: 0.0, width: 1.0 },
            }],
            jitter: 0.3,
        };
        assert_eq!(data.sample(50, 9).unwrap(), data.sample(50, 9).unwrap());
        assert_ne!(data.sample(50, 9).unwrap(), data.sample(50, 10).unwrap());
    }

    #[test]
    fn apportionment_respects_n() {
        let c = DensityComponent {
            sign: 1,
            mass: 0.5,
            shape: Shape::Uniform { lo: 0.0, hi: 1.0 },
        };
        assert_eq!(apportion(&[c, c], 25), vec![13, 12]);
        let third = DensityComponent { mass: 1.0 / 3.0, ..c };
        assert_eq!(apportion(&[third, third, third], 10), vec![4, 3, 3]);
        assert_eq!(apportion(&[third], 10), vec![3]);
    }

    #[test]
    fn rejects_excess_mass() {
        let c = DensityComponent {
            sign: 1,
            mass: 0.7,
            shape: Shape::Uniform { lo: 0.0, hi: 1.0 },
        };
        let data = InitialData::Density {
            components: vec![c, c],
            jitter: 0.0,
        };
        assert!(matches!(data.validate(), Err(Error::Config(_))));
    }
}
