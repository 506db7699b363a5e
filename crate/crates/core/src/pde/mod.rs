//! Explicit monotone schemes for the integrated limit equations
//! `u_t = f_m(u_x) u_xx + U'|u_x|` (m = 2, 3) and `u_t = (M[u] + U')|u_x|`.

mod local;
mod nonlocal;

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use local::{solve_hj_local, LocalScheme};
pub use nonlocal::{solve_hj_nonlocal, NonlocalScheme};

/// Samples `values[i] = u(x0 + i·dx)`; `u` is linear between nodes and equal to
/// the far-field constants outside the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    pub x0: f64,
    pub dx: f64,
    pub values: Vec<f64>,
    pub far_left: f64,
    pub far_right: f64,
}

impl GridFunction {
    /// Grid function whose far-field constants are its boundary values.
    pub fn new(x0: f64, dx: f64, values: Vec<f64>) -> Result<Self> {
        if !(dx > 0.0) || values.len() < 2 {
            return Err(Error::Domain(format!("grid needs dx > 0 and two nodes (dx = {dx}, {} nodes)", values.len())));
        }
        let (far_left, far_right) = (values[0], *values.last().unwrap());
        Ok(GridFunction {
            x0,
            dx,
            values,
            far_left,
            far_right,
        })
    }

    /// Samples `f` at `nodes` equispaced points of `[a, b]`.
    pub fn from_fn(a: f64, b: f64, nodes: usize, f: impl Fn(f64) -> f64) -> Self {
        let dx = (b - a) / (nodes - 1) as f64;
        let values: Vec<f64> = (0..nodes).map(|i| f(a + i as f64 * dx)).collect();
        let (far_left, far_right) = (values[0], values[nodes - 1]);
        GridFunction {
            x0: a,
            dx,
            values,
            far_left,
            far_right,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn node(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.dx
    }

    pub fn x_end(&self) -> f64 {
        self.node(self.len() - 1)
    }

    /// Piecewise-linear interpolant, constant outside the grid.
    pub fn eval(&self, x: f64) -> f64 {
        let s = (x - self.x0) / self.dx;
        if s < 0.0 {
            return self.far_left;
        }
        let last = self.len() - 1;
        if s >= last as f64 {
            return if s == last as f64 { self.values[last] } else { self.far_right };
        }
        let i = s.floor() as usize;
        let w = s - i as f64;
        if w == 0.0 {
            self.values[i]
        } else {
            (1.0 - w) * self.values[i] + w * self.values[i + 1]
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(self.far_left.abs().max(self.far_right.abs()), |m, v| m.max(v.abs()))
    }

    /// Resets the far-field constants to the boundary values.
    pub fn sync_far_field(&mut self) {
        self.far_left = self.values[0];
        self.far_right = *self.values.last().unwrap();
    }

    /// `∫ |u - v|` over the grid by the trapezoid rule; both must share the grid.
    pub fn l1_distance(&self, other: &GridFunction) -> Result<f64> {
        self.same_grid(other)?;
        let d: Vec<f64> = self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).collect();
        Ok(trapezoid(&d, self.dx))
    }

    pub fn same_grid(&self, other: &GridFunction) -> Result<()> {
        if self.len() != other.len() || (self.x0 - other.x0).abs() > 1e-12 * self.dx || (self.dx - other.dx).abs() > 1e-12 * self.dx {
            return Err(Error::Domain("grid functions live on different grids".into()));
        }
        Ok(())
    }

    /// CSV with header `x,u`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["x", "u"])?;
        for (i, v) in self.values.iter().enumerate() {
            out.write_record([format!("{:e}", self.node(i)), format!("{v:e}")])?;
        }
        out.flush()?;
        Ok(())
    }

    /// Reads the CSV written by [`GridFunction::write_csv`]; nodes must be equispaced.
    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let mut xs = Vec::new();
        let mut us = Vec::new();
        for rec in rd.records() {
            let rec = rec?;
            let parse = |k: usize| -> Result<f64> {
                rec.get(k)
                    .ok_or_else(|| Error::Data("short CSV row".into()))?
                    .trim()
                    .parse()
                    .map_err(|e| Error::Data(format!("bad number in CSV: {e}")))
            };
            xs.push(parse(0)?);
            us.push(parse(1)?);
        }
        if xs.len() < 2 {
            return Err(Error::Data("grid CSV needs at least two rows".into()));
        }
        let dx = (xs[xs.len() - 1] - xs[0]) / (xs.len() - 1) as f64;
        if xs.iter().enumerate().any(|(i, &x)| (x - (xs[0] + i as f64 * dx)).abs() > 1e-9 * dx.abs().max(1e-300)) {
            return Err(Error::Data("grid CSV nodes are not equispaced".into()));
        }
        GridFunction::new(xs[0], dx, us)
    }
}

pub(crate) fn trapezoid(v: &[f64], dx: f64) -> f64 {
    match v.len() {
        0 | 1 => 0.0,
        n => dx * (0.5 * (v[0] + v[n - 1]) + v[1..n - 1].iter().sum::<f64>()),
    }
}

/// `κ = u_x` by central differences, one-sided at the ends.
pub fn kappa_from_u(u: &GridFunction) -> GridFunction {
    let n = u.len();
    let v = &u.values;
    let mut k = vec![0.0; n];
    k[0] = (v[1] - v[0]) / u.dx;
    k[n - 1] = (v[n - 1] - v[n - 2]) / u.dx;
    for i in 1..n - 1 {
        k[i] = (v[i + 1] - v[i - 1]) / (2.0 * u.dx);
    }
    GridFunction {
        x0: u.x0,
        dx: u.dx,
        values: k,
        far_left: 0.0,
        far_right: 0.0,
    }
}

/// Upwinded `|u_x|` for the transport term `c·|u_x|`, monotone for either sign of `c`.
#[inline]
pub(crate) fn upwind_abs(c: f64, d_minus: f64, d_plus: f64) -> f64 {
    if c >= 0.0 {
        d_plus.max(-d_minus).max(0.0)
    } else {
        (-d_plus).max(d_minus).max(0.0)
    }
}

/// One explicit scheme on a fixed grid.
pub trait Scheme {
    /// Largest monotone step for the current data.
    fn stable_dt(&self, u: &GridFunction) -> Result<f64>;
    /// Advances by exactly `dt`.
    fn step(&self, u: &GridFunction, dt: f64) -> Result<GridFunction>;
}

/// Statistics of a solve.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub steps: usize,
    pub dt_min: f64,
    pub dt_max: f64,
}

/// Steps `u0` to `t_end`; `observer(t, u)` runs after every step.
pub fn evolve<S: Scheme + ?Sized>(scheme: &S, u0: &GridFunction, t_end: f64, max_steps: usize, mut observer: impl FnMut(f64, &GridFunction)) -> Result<(GridFunction, SolveStats)> {
    let mut u = u0.clone();
    let mut t = 0.0;
    let mut stats = SolveStats {
        steps: 0,
        dt_min: f64::INFINITY,
        dt_max: 0.0,
    };
    while t < t_end {
        let dt = scheme.stable_dt(&u)?;
        if !(dt > 0.0) {
            return Err(Error::Convergence(format!("time step collapsed to {dt:e} at t = {t}")));
        }
        let last = dt >= t_end - t;
        let dt = if last { t_end - t } else { dt };
        u = scheme.step(&u, dt)?;
        t = if last { t_end } else { t + dt };
        stats.steps += 1;
        stats.dt_min = stats.dt_min.min(dt);
        stats.dt_max = stats.dt_max.max(dt);
        observer(t, &u);
        if stats.steps >= max_steps && t < t_end {
            return Err(Error::Convergence(format!("step budget {max_steps} exhausted at t = {t}")));
        }
    }
    Ok((u, stats))
}

/// Snapshots of `u` at the requested times (which must be increasing).
pub fn evolve_snapshots<S: Scheme + ?Sized>(scheme: &S, u0: &GridFunction, times: &[f64], max_steps: usize) -> Result<Vec<GridFunction>> {
    let mut out = Vec::with_capacity(times.len());
    let mut u = u0.clone();
    let mut t = 0.0;
    for &tk in times {
        if tk < t {
            return Err(Error::Config("snapshot times must increase".into()));
        }
        if tk > t {
            u = evolve(scheme, &u, tk - t, max_steps, |_, _| {})?.0;
            t = tk;
        }
        out.push(u.clone());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolation_and_far_field() {
        let g = GridFunction::new(0.0, 0.5, vec![1.0, 2.0, 4.0]).unwrap();
        assert_eq!(g.eval(-1.0), 1.0);
        assert_eq!(g.eval(0.25), 1.5);
        assert_eq!(g.eval(1.0), 4.0);
        assert_eq!(g.eval(9.0), 4.0);
        assert_eq!(g.sup_norm(), 4.0);
    }

    #[test]
    fn kappa_examples() {
        let c = GridFunction::from_fn(-1.0, 1.0, 11, |_| 3.0);
        assert!(kappa_from_u(&c).values.iter().all(|&v| v == 0.0));
        let ramp = GridFunction::from_fn(-1.0, 2.0, 301, |x| 2.5 * x.clamp(0.0, 1.0));
        let k = kappa_from_u(&ramp);
        for i in 0..k.len() {
            let x = k.node(i);
            if x > 0.05 && x < 0.95 {
                assert!((k.values[i] - 2.5).abs() < 1e-9);
            }
        }
        let total = trapezoid(&k.values, k.dx);
        assert!((total - (ramp.far_right - ramp.far_left)).abs() < k.dx * k.dx);
    }

    #[test]
    fn csv_roundtrip() {
        let g = GridFunction::from_fn(-1.0, 1.0, 9, |x| x * x);
        let mut buf = Vec::new();
        g.write_csv(&mut buf).unwrap();
        assert!(buf.starts_with(b"x,u\n"));
        let back = GridFunction::read_csv(&buf[..]).unwrap();
        assert_eq!(back.values, g.values);
        assert!((back.dx - g.dx).abs() < 1e-15);
    }

    #[test]
    fn upwinding_is_consistent() {
        for &p in &[-2.0, 0.0, 3.0] {
            assert_eq!(upwind_abs(1.0, p, p), p.abs());
            assert_eq!(upwind_abs(-1.0, p, p), p.abs());
        }
    }
}
