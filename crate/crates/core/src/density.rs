//! Compactly supported initial probability densities and their distribution functions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad;

/// Mass deviation below which user data is silently renormalized.
pub const RENORMALIZE_TOL: f64 = 1e-6;

/// Piecewise polynomial of degree at most 2 on consecutive intervals.
///
/// On `[breakpoints[j], breakpoints[j + 1]]` the density is
/// `c0 + c1 (x - x_j) + c2 (x - x_j)^2` with `[c0, c1, c2] = pieces[j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Piecewise {
    pub breakpoints: Vec<f64>,
    pub pieces: Vec<[f64; 3]>,
}

/// Initial density presets. Every variant is normalized to unit mass.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialDensity {
    /// Uniform density on `[a, b]`.
    Indicator { a: f64, b: f64 },
    /// `(1 - |x|/h)_+ / h`.
    Triangle { half_width: f64 },
    /// `1/4 on [-1, 1]` plus `3/(2 sqrt 2) sqrt(1/2 - |x|)` on `[-1/2, 1/2]`.
    CompositeSqrt,
    /// `1/4 on [-1, -1/2] and [1/2, 1]`, `3/4 on [-1/2, 1/2]`.
    CompositeStep,
    /// User-supplied pieces; `scale` is the normalization factor applied on top.
    Piecewise { data: Piecewise, scale: f64 },
    /// `(R^2 - x^2)^alpha` normalized to unit mass.
    PowerBump { alpha: f64, radius: f64, norm: f64 },
}

const SQRT_COEF: f64 = 1.060_660_171_779_821_2; // 3 / (2 sqrt 2)

impl InitialDensity {
    pub fn indicator(a: f64, b: f64) -> Result<Self> {
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::Density(format!("indicator needs a < b, got [{a}, {b}]")));
        }
        Ok(Self::Indicator { a, b })
    }

    pub fn triangle(half_width: f64) -> Result<Self> {
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(Error::Density(format!(
                "triangle half width must be positive, got {half_width}"
            )));
        }
        Ok(Self::Triangle { half_width })
    }

    pub fn power_bump(alpha: f64, radius: f64) -> Result<Self> {
        if !(alpha > 0.0) || !(radius > 0.0) || !alpha.is_finite() || !radius.is_finite() {
            return Err(Error::Density(format!(
                "power bump needs alpha > 0 and radius > 0, got alpha = {alpha}, radius = {radius}"
            )));
        }
        let raw = power_bump_raw_cdf(alpha, radius, radius);
        Ok(Self::PowerBump {
            alpha,
            radius,
            norm: 1.0 / raw,
        })
    }

    /// Validates user pieces: nonnegative, no zero plateau, mass within
    /// [`RENORMALIZE_TOL`] of one (then rescaled to exactly one).
    pub fn piecewise(data: Piecewise) -> Result<Self> {
        let k = data.pieces.len();
        if k == 0 || data.breakpoints.len() != k + 1 {
            return Err(Error::Density(format!(
                "piecewise needs n + 1 breakpoints for n pieces, got {} and {k}",
                data.breakpoints.len()
            )));
        }
        if data.breakpoints.iter().any(|x| !x.is_finite())
            || data.breakpoints.windows(2).any(|w| !(w[0] < w[1]))
        {
            return Err(Error::Density("breakpoints must be finite and strictly increasing".into()));
        }
        let mut mass = 0.0;
        for (j, c) in data.pieces.iter().enumerate() {
            let h = data.breakpoints[j + 1] - data.breakpoints[j];
            if c.iter().any(|v| !v.is_finite()) {
                return Err(Error::Density(format!("piece {j} has non-finite coefficients")));
            }
            if quadratic_min(c, h) < -1e-14 {
                return Err(Error::Density(format!("piece {j} takes negative values")));
            }
            let piece_mass = c[0] * h + c[1] * h * h / 2.0 + c[2] * h * h * h / 3.0;
            if !(piece_mass > 0.0) {
                return Err(Error::Density(format!(
                    "piece {j} on [{}, {}] carries no mass; zero plateaus inside the support are not supported",
                    data.breakpoints[j],
                    data.breakpoints[j + 1]
                )));
            }
            mass += piece_mass;
        }
        if (mass - 1.0).abs() > RENORMALIZE_TOL {
            return Err(Error::Density(format!(
                "piecewise density has mass {mass}, expected 1 (tolerance {RENORMALIZE_TOL})"
            )));
        }
        Ok(Self::Piecewise {
            data,
            scale: 1.0 / mass,
        })
    }

    /// Closed support interval `[a, b]`.
    pub fn support(&self) -> (f64, f64) {
        match self {
            Self::Indicator { a, b } => (*a, *b),
            Self::Triangle { half_width } => (-half_width, *half_width),
            Self::CompositeSqrt | Self::CompositeStep => (-1.0, 1.0),
            Self::Piecewise { data, .. } => (
                data.breakpoints[0],
                data.breakpoints[data.breakpoints.len() - 1],
            ),
            Self::PowerBump { radius, .. } => (-radius, *radius),
        }
    }

    pub fn density(&self, x: f64) -> f64 {
        let (a, b) = self.support();
        if x < a || x > b {
            return 0.0;
        }
        match self {
            Self::Indicator { a, b } => 1.0 / (b - a),
            Self::Triangle { half_width: h } => (1.0 - x.abs() / h).max(0.0) / h,
            Self::CompositeSqrt => {
                let bump = if x.abs() <= 0.5 {
                    SQRT_COEF * (0.5 - x.abs()).sqrt()
                } else {
                    0.0
                };
                0.25 + bump
            }
            Self::CompositeStep => {
                if x.abs() <= 0.5 {
                    0.75
                } else {
                    0.25
                }
            }
            Self::Piecewise { data, scale } => {
                let j = piece_index(&data.breakpoints, x);
                let c = &data.pieces[j];
                let s = x - data.breakpoints[j];
                scale * (c[0] + s * (c[1] + s * c[2]))
            }
            Self::PowerBump {
                alpha,
                radius,
                norm,
            } => norm * (radius * radius - x * x).max(0.0).powf(*alpha),
        }
    }

    /// Distribution function `F(x) = int_{-inf}^x u`.
    pub fn cdf(&self, x: f64) -> f64 {
        let (a, b) = self.support();
        if x <= a {
            return 0.0;
        }
        if x >= b {
            return 1.0;
        }
        match self {
            Self::Indicator { a, b } => (x - a) / (b - a),
            Self::Triangle { half_width: h } => {
                if x <= 0.0 {
                    let r = 1.0 + x / h;
                    0.5 * r * r
                } else {
                    let r = 1.0 - x / h;
                    1.0 - 0.5 * r * r
                }
            }
            Self::CompositeSqrt => {
                if x > 0.0 {
                    return 1.0 - self.cdf(-x);
                }
                let mut f = 0.25 * (x + 1.0);
                if x > -0.5 {
                    f += SQRT_COEF * (2.0 / 3.0) * (0.5 + x).powf(1.5);
                }
                f
            }
            Self::CompositeStep => {
                if x <= -0.5 {
                    0.25 * (x + 1.0)
                } else if x <= 0.5 {
                    0.125 + 0.75 * (x + 0.5)
                } else {
                    0.875 + 0.25 * (x - 0.5)
                }
            }
            Self::Piecewise { data, scale } => {
                let j = piece_index(&data.breakpoints, x);
                let mut f = 0.0;
                for (i, c) in data.pieces.iter().enumerate().take(j) {
                    f += poly_integral(c, data.breakpoints[i + 1] - data.breakpoints[i]);
                }
                f += poly_integral(&data.pieces[j], x - data.breakpoints[j]);
                scale * f
            }
            Self::PowerBump {
                alpha,
                radius,
                norm,
            } => norm * power_bump_raw_cdf(*alpha, *radius, x),
        }
    }

    /// Points strictly inside the support where the density may jump or kink.
    pub fn interior_breakpoints(&self) -> Vec<f64> {
        match self {
            Self::Triangle { .. } => vec![0.0],
            Self::CompositeSqrt => vec![-0.5, 0.0, 0.5],
            Self::CompositeStep => vec![-0.5, 0.5],
            Self::Piecewise { data, .. } => {
                data.breakpoints[1..data.breakpoints.len() - 1].to_vec()
            }
            _ => Vec::new(),
        }
    }
}

fn piece_index(breaks: &[f64], x: f64) -> usize {
    let k = breaks.len() - 1;
    breaks[1..k].partition_point(|&b| b <= x).min(k - 1)
}

fn poly_integral(c: &[f64; 3], s: f64) -> f64 {
    s * (c[0] + s * (c[1] / 2.0 + s * c[2] / 3.0))
}

fn quadratic_min(c: &[f64; 3], h: f64) -> f64 {
    let p = |s: f64| c[0] + s * (c[1] + s * c[2]);
    let mut m = p(0.0).min(p(h));
    if c[2] > 0.0 {
        let v = -c[1] / (2.0 * c[2]);
        if v > 0.0 && v < h {
            m = m.min(p(v));
        }
    }
    m
}

/// `int_{-R}^x (R^2 - y^2)^alpha dy` via `y = R sin(theta)`, which keeps the integrand smooth.
fn power_bump_raw_cdf(alpha: f64, radius: f64, x: f64) -> f64 {
    let theta = (x / radius).clamp(-1.0, 1.0).asin();
    let k = 2.0 * alpha + 1.0;
    radius.powf(k)
        * quad::integrate(
            |th: f64| th.cos().max(0.0).powf(k),
            -std::f64::consts::FRAC_PI_2,
            theta,
            1e-14,
        )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn numeric_mass(d: &InitialDensity) -> f64 {
        let (a, b) = d.support();
        let mut pts = vec![a];
        pts.extend(d.interior_breakpoints());
        pts.push(b);
        pts.windows(2)
            .map(|w| quad::integrate(|x| d.density(x), w[0], w[1], 1e-12))
            .sum()
    }

    fn all_presets() -> Vec<InitialDensity> {
        vec![
            InitialDensity::indicator(-0.5, 0.5).unwrap(),
            InitialDensity::triangle(1.0).unwrap(),
            InitialDensity::CompositeSqrt,
            InitialDensity::CompositeStep,
            InitialDensity::power_bump(1.0, 1.0).unwrap(),
            InitialDensity::power_bump(0.5, 1.0).unwrap(),
        ]
    }

    #[test]
    fn presets_have_unit_mass() {
        for d in all_presets() {
            let m = numeric_mass(&d);
            assert!((m - 1.0).abs() < 1e-9, "{d:?}: {m}");
            assert!((d.cdf(d.support().1) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn cdf_examples() {
        let ind = InitialDensity::indicator(-0.5, 0.5).unwrap();
        assert_eq!(ind.cdf(0.0), 0.5);
        let tri = InitialDensity::triangle(1.0).unwrap();
        assert!((tri.cdf(-0.25) - 0.28125).abs() < 1e-15);
        let q = quad::integrate(|x| tri.density(x), -1.0, -0.25, 1e-13);
        assert!((q - 0.28125).abs() < 1e-11);
        assert!((InitialDensity::CompositeStep.cdf(-0.5) - 0.125).abs() < 1e-15);
    }

    #[test]
    fn cdf_matches_quadrature_of_density() {
        for d in all_presets() {
            let (a, b) = d.support();
            for k in 1..20 {
                let x = a + (b - a) * k as f64 / 20.0;
                let mut pts = vec![a];
                pts.extend(d.interior_breakpoints().into_iter().filter(|&p| p < x));
                pts.push(x);
                let q: f64 = pts
                    .windows(2)
                    .map(|w| quad::integrate(|y| d.density(y), w[0], w[1], 1e-13))
                    .sum();
                assert!((q - d.cdf(x)).abs() < 1e-8, "{d:?} at {x}: {q} vs {}", d.cdf(x));
            }
        }
    }

    #[test]
    fn piecewise_validation() {
        let ok = Piecewise {
            breakpoints: vec![-1.0, 0.0, 1.0],
            pieces: vec![[0.0, 1.0, 0.0], [1.0, -1.0, 0.0]],
        };
        let d = InitialDensity::piecewise(ok).unwrap();
        let tri = InitialDensity::triangle(1.0).unwrap();
        for x in [-0.7, -0.1, 0.3, 0.9] {
            assert!((d.cdf(x) - tri.cdf(x)).abs() < 1e-14);
        }

        let plateau = Piecewise {
            breakpoints: vec![-1.0, -0.5, 0.5, 1.0],
            pieces: vec![[1.0, 0.0, 0.0], [0.0, 0.0, 0.0], [1.0, 0.0, 0.0]],
        };
        let err = InitialDensity::piecewise(plateau).unwrap_err();
        assert!(err.to_string().contains("plateau"));

        let negative = Piecewise {
            breakpoints: vec![0.0, 1.0],
            pieces: vec![[2.0, -3.0, 0.0]],
        };
        assert!(InitialDensity::piecewise(negative).is_err());

        let heavy = Piecewise {
            breakpoints: vec![0.0, 1.0],
            pieces: vec![[1.1, 0.0, 0.0]],
        };
        assert!(InitialDensity::piecewise(heavy).is_err());

        let near = Piecewise {
            breakpoints: vec![0.0, 1.0],
            pieces: vec![[1.0 + 1e-8, 0.0, 0.0]],
        };
        let d = InitialDensity::piecewise(near).unwrap();
        assert!((d.cdf(1.0 - 1e-12) - 1.0).abs() < 1e-11);
    }

    #[test]
    fn constructor_errors() {
        assert!(InitialDensity::indicator(1.0, 1.0).is_err());
        assert!(InitialDensity::triangle(0.0).is_err());
        assert!(InitialDensity::power_bump(-1.0, 1.0).is_err());
    }
}
