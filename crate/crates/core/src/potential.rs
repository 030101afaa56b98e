//! Radial potentials `V(|x|) >= 0` and their decay functionals.
//!
//! For a cutoff `R > 1`:
//!
//! * `m = max_{|x| <= 1} V`,
//! * `𝒱(R) = R^{-(q-2)(N-2)} inf_{|x| >= R} |x|^{(q-2)(N-2)} V(x)`,
//! * `𝒲(R) = inf_{|x| >= R} |x|^{(4-μ)/2} V(x)`.
//!
//! The three example families are "constant core, power tail" profiles, so
//! both infima have closed forms. Tabulated potentials are searched over
//! their samples in `[R, r_last]`; the tail beyond the last sample is not
//! modeled and the result says so.

use std::path::Path;

use crate::error::{param_err, ChoquardError, Result};
use crate::grid::Grid;
use crate::nonlinearity::DIM;

#[derive(Debug, Clone, PartialEq)]
pub enum PotentialModel {
    /// `2𝒱₀` on `|x| <= 2`, `𝒱₀ 2^{e+1} |x|^{-e}` beyond, `e = (q-2)(N-2)`.
    Example1 { v0: f64, q: f64 },
    /// `1` on the unit ball, `|x|^{-(4-μ)/2 + δ}` outside.
    Example2 { delta: f64, mu: f64 },
    /// `2𝒲₀` on the unit ball, `2𝒲₀ |x|^{-(4-μ)/2}` outside.
    Example3 { w0: f64, mu: f64 },
    Constant(f64),
    /// Piecewise-linear interpolation of `(radius, value)` samples; constant
    /// extrapolation outside the sampled range.
    RadialTable { radii: Vec<f64>, values: Vec<f64> },
}

/// Result of an infimum over `|x| >= R`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailInfimum {
    pub value: f64,
    /// Set for tables: the infimum only covers `[R, last sample]`.
    pub tail_unmodeled: bool,
}

impl PotentialModel {
    pub fn example1(v0: f64, q: f64) -> Result<Self> {
        if !(v0 >= 0.0) || !(q >= 2.0) {
            return param_err(format!("Example 1 needs V0 >= 0 and q >= 2, got V0={v0}, q={q}"));
        }
        Ok(Self::Example1 { v0, q })
    }

    pub fn example2(delta: f64, mu: f64) -> Result<Self> {
        if !(delta > 0.0) {
            return param_err(format!("Example 2 needs delta > 0, got {delta}"));
        }
        check_mu(mu)?;
        Ok(Self::Example2 { delta, mu })
    }

    pub fn example3(w0: f64, mu: f64) -> Result<Self> {
        if !(w0 >= 0.0) {
            return param_err(format!("Example 3 needs W0 >= 0, got {w0}"));
        }
        check_mu(mu)?;
        Ok(Self::Example3 { w0, mu })
    }

    pub fn table(radii: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if radii.is_empty() || radii.len() != values.len() {
            return param_err("potential table needs equally many radii and values (at least one)");
        }
        if radii.windows(2).any(|w| !(w[1] > w[0])) || radii[0] < 0.0 {
            return param_err("potential table radii must be nonnegative and strictly increasing");
        }
        if let Some((node, &value)) = values.iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
            return Err(ChoquardError::NegativePotential { node, value });
        }
        Ok(Self::RadialTable { radii, values })
    }

    /// Reads a two-column `radius,value` CSV; a non-numeric first line is
    /// treated as a header.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut radii = Vec::new();
        let mut values = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            let parsed = (cols.len() == 2)
                .then(|| (cols[0].parse::<f64>(), cols[1].parse::<f64>()));
            match parsed {
                Some((Ok(r), Ok(v))) => {
                    radii.push(r);
                    values.push(v);
                }
                _ if radii.is_empty() && lineno == 0 => continue,
                _ => {
                    return Err(ChoquardError::Config(format!(
                        "{}:{}: expected `radius,value`",
                        path.display(),
                        lineno + 1
                    )))
                }
            }
        }
        Self::table(radii, values)
    }

    /// `V(r)`.
    pub fn eval(&self, r: f64) -> f64 {
        let r = r.abs();
        match self {
            Self::Example1 { v0, q } => {
                let e = example1_exponent(*q);
                if r <= 2.0 {
                    2.0 * v0
                } else {
                    v0 * 2f64.powf(e + 1.0) * r.powf(-e)
                }
            }
            Self::Example2 { delta, mu } => {
                if r <= 1.0 {
                    1.0
                } else {
                    r.powf(-(4.0 - mu) / 2.0 + delta)
                }
            }
            Self::Example3 { w0, mu } => {
                if r <= 1.0 {
                    2.0 * w0
                } else {
                    2.0 * w0 * r.powf(-(4.0 - mu) / 2.0)
                }
            }
            Self::Constant(c) => *c,
            Self::RadialTable { radii, values } => interpolate(radii, values, r),
        }
    }

    pub fn eval_point(&self, x: [f64; 3]) -> f64 {
        self.eval((x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt())
    }

    /// Potential at every grid node; rejects negative samples.
    pub fn sample(&self, grid: &Grid) -> Result<Vec<f64>> {
        let v = grid.sample(|r| self.eval(r));
        if let Some((node, &value)) = v.iter().enumerate().find(|(_, x)| !(**x >= 0.0)) {
            return Err(ChoquardError::NegativePotential { node, value });
        }
        Ok(v)
    }

    /// `m = max_{|x| <= 1} V(x)`.
    pub fn m(&self) -> f64 {
        match self {
            Self::Example1 { v0, .. } => 2.0 * v0,
            Self::Example2 { .. } => 1.0,
            Self::Example3 { w0, .. } => 2.0 * w0,
            Self::Constant(c) => *c,
            Self::RadialTable { radii, values } => radii
                .iter()
                .zip(values)
                .filter(|(r, _)| **r <= 1.0)
                .map(|(_, v)| *v)
                .fold(interpolate(radii, values, 1.0), f64::max),
        }
    }

    /// `𝒱(R)` for the growth exponent `q`.
    pub fn v_calligraphic(&self, cutoff: f64, q: f64) -> Result<TailInfimum> {
        check_cutoff(cutoff)?;
        let e = example1_exponent(q);
        let inf = self.weighted_tail_inf(cutoff, e, TailWeight::Example1Exponent(q));
        Ok(TailInfimum {
            value: inf.value / cutoff.powf(e),
            tail_unmodeled: inf.tail_unmodeled,
        })
    }

    /// `𝒲(R)` for the Riesz exponent `μ`.
    pub fn w_calligraphic(&self, cutoff: f64, mu: f64) -> Result<TailInfimum> {
        check_cutoff(cutoff)?;
        Ok(self.weighted_tail_inf(cutoff, (4.0 - mu) / 2.0, TailWeight::Decay(mu)))
    }

    /// `inf_{r >= R} r^a V(r)`.
    fn weighted_tail_inf(&self, cutoff: f64, a: f64, weight: TailWeight) -> TailInfimum {
        let closed = |r_match: f64, c_in: f64, c_out: f64, slope: f64| {
            // slope = a - b for the tail `c_out r^{-b}`
            let inner = if cutoff < r_match {
                c_in * cutoff.powf(a)
            } else {
                f64::INFINITY
            };
            let start = cutoff.max(r_match);
            let outer = if slope > 0.0 {
                c_out * start.powf(slope)
            } else if slope == 0.0 {
                c_out
            } else {
                0.0
            };
            TailInfimum {
                value: inner.min(outer),
                tail_unmodeled: false,
            }
        };
        match self {
            Self::Example1 { v0, q } => {
                let b = example1_exponent(*q);
                let slope = match weight {
                    TailWeight::Example1Exponent(wq) if wq == *q => 0.0,
                    _ => a - b,
                };
                closed(2.0, 2.0 * v0, v0 * 2f64.powf(b + 1.0), slope)
            }
            Self::Example2 { delta, mu } => {
                let slope = match weight {
                    TailWeight::Decay(wmu) if wmu == *mu => *delta,
                    _ => a - (4.0 - mu) / 2.0 + delta,
                };
                closed(1.0, 1.0, 1.0, slope)
            }
            Self::Example3 { w0, mu } => {
                let slope = match weight {
                    TailWeight::Decay(wmu) if wmu == *mu => 0.0,
                    _ => a - (4.0 - mu) / 2.0,
                };
                closed(1.0, 2.0 * w0, 2.0 * w0, slope)
            }
            Self::Constant(c) => {
                let value = if *c == 0.0 {
                    0.0
                } else if a > 0.0 {
                    c * cutoff.powf(a)
                } else if a == 0.0 {
                    *c
                } else {
                    0.0
                };
                TailInfimum {
                    value,
                    tail_unmodeled: false,
                }
            }
            Self::RadialTable { radii, values } => {
                let mut value = cutoff.powf(a) * interpolate(radii, values, cutoff);
                for (r, v) in radii.iter().zip(values) {
                    if *r >= cutoff {
                        value = value.min(r.powf(a) * v);
                    }
                }
                TailInfimum {
                    value,
                    tail_unmodeled: true,
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum TailWeight {
    Example1Exponent(f64),
    Decay(f64),
}

fn example1_exponent(q: f64) -> f64 {
    (q - 2.0) * (DIM - 2.0)
}

fn check_mu(mu: f64) -> Result<()> {
    if !(mu > 0.0 && mu < DIM) {
        return param_err(format!("mu must lie in (0, N), got {mu}"));
    }
    Ok(())
}

fn check_cutoff(cutoff: f64) -> Result<()> {
    if !(cutoff > 1.0) || !cutoff.is_finite() {
        return param_err(format!("decay functionals are defined for R > 1, got {cutoff}"));
    }
    Ok(())
}

fn interpolate(radii: &[f64], values: &[f64], r: f64) -> f64 {
    if r <= radii[0] {
        return values[0];
    }
    if r >= radii[radii.len() - 1] {
        return values[values.len() - 1];
    }
    let j = radii.partition_point(|&x| x <= r);
    let (r0, r1) = (radii[j - 1], radii[j]);
    let t = (r - r0) / (r1 - r0);
    values[j - 1] * (1.0 - t) + values[j] * t
}
