//! Closed-form comparison solutions.
//!
//! * `u_hom`: explicit solution of the homogeneous (`nu -> infinity`) equation for
//!   the centred unit indicator.
//! * `U`, `U_m`: Gaussian and Barenblatt self-similar solutions, `V`, `V_m` their
//!   stationary profiles in similarity variables.
//! * The power supersolution `A(t) (R(t)^2 - x^2)^alpha` of the `m = 1` equation.
//!
//! The printed Barenblatt `U_m` solves `u_t = (u^m)_xx`; the porous-medium limit of
//! the flux-limited equation is `u_t = (u^(m-1) u_x)_x = (u^m)_xx / m`, so its
//! self-similar attractor is `U_m(x, t / m)`. [`eval_barenblatt`] is the printed
//! formula, [`ReferenceProfile::Barenblatt`] the attractor.

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::{Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::quad;
use crate::transform::DensitySample;

/// Mass tolerance for the normalization constants.
const MASS_TOL: f64 = 1e-12;

/// `u_hom(x, t) = chi_[-1/2 - t, 1/2 + t](x) / (1 + 2t)`.
pub fn eval_u_hom(x: f64, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::Reference(format!("u_hom needs t >= 0, got {t}")));
    }
    let half = 0.5 + t;
    Ok(if x.abs() <= half { 1.0 / (1.0 + 2.0 * t) } else { 0.0 })
}

/// Heat kernel `exp(-x^2 / 4t) / sqrt(4 pi t)`.
pub fn eval_selfsim_heat(x: f64, t: f64) -> Result<f64> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::Reference(format!("heat kernel needs t > 0, got {t}")));
    }
    Ok((-x * x / (4.0 * t)).exp() / (4.0 * PI * t).sqrt())
}

/// `V(x) = exp(-x^2 / 2) / sqrt(2 pi)`.
pub fn eval_stationary_gaussian(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

fn check_m(m: f64) -> Result<()> {
    if !(m > 1.0) || !m.is_finite() {
        return Err(Error::Reference(format!("Barenblatt profiles need m > 1, got {m}")));
    }
    Ok(())
}

/// `(C - c y^2)_+^(1/(m-1))`.
fn bump(c_top: f64, c_quad: f64, m: f64, y: f64) -> f64 {
    let base = c_top - c_quad * y * y;
    if base > 0.0 {
        base.powf(1.0 / (m - 1.0))
    } else {
        0.0
    }
}

/// Integral of the bump over `(-inf, x]`, via `y = R sin(theta)`.
fn bump_cdf(c_top: f64, c_quad: f64, m: f64, x: f64) -> f64 {
    let r = (c_top / c_quad).sqrt();
    if x <= -r {
        return 0.0;
    }
    let upper = if x >= r { FRAC_PI_2 } else { (x / r).asin() };
    let q = 1.0 / (m - 1.0);
    let scale = c_top.powf(q) * r;
    let integrand = |th: f64| {
        let c = th.cos().max(0.0);
        c.powf(2.0 * q + 1.0)
    };
    scale * quad::integrate(integrand, -FRAC_PI_2, upper, 1e-14)
}

/// Mass of the bump: `C^(q + 1/2) c^(-1/2) K_m`, `K_m` the full theta integral.
fn bump_mass(c_top: f64, c_quad: f64, m: f64) -> f64 {
    let q = 1.0 / (m - 1.0);
    c_top.powf(q) * (c_top / c_quad).sqrt() * theta_integral(m)
}

fn theta_integral(m: f64) -> f64 {
    static CACHE: OnceLock<Mutex<HashMap<u64, f64>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(&k) = cache.lock().unwrap().get(&m.to_bits()) {
        return k;
    }
    let p = 2.0 / (m - 1.0) + 1.0;
    let k = quad::integrate(|th: f64| th.cos().max(0.0).powf(p), -FRAC_PI_2, FRAC_PI_2, 1e-14);
    cache.lock().unwrap().insert(m.to_bits(), k);
    k
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum ConstKind {
    SelfSimilar,
    Stationary,
}

fn constant_cache() -> &'static Mutex<HashMap<(ConstKind, u64), f64>> {
    static CACHE: OnceLock<Mutex<HashMap<(ConstKind, u64), f64>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Height constant `C` with unit mass for the bump with quadratic coefficient `c_quad`.
fn unit_mass_constant(kind: ConstKind, m: f64, c_quad: f64) -> Result<f64> {
    check_m(m)?;
    let key = (kind, m.to_bits());
    if let Some(&c) = constant_cache().lock().unwrap().get(&key) {
        return Ok(c);
    }
    let mass = |c: f64| bump_mass(c, c_quad, m);
    let mut hi = 1.0;
    while mass(hi) < 1.0 {
        hi *= 2.0;
        if hi > 1e300 {
            return Err(Error::Reference(format!("no unit-mass constant for m = {m}")));
        }
    }
    let mut lo = hi / 2.0;
    while mass(lo) > 1.0 {
        lo /= 2.0;
    }
    let c = quad::bisect(mass, 1.0, lo, hi, 0.0);
    let err = (mass(c) - 1.0).abs();
    if err > MASS_TOL * 100.0 {
        return Err(Error::Reference(format!(
            "mass normalization for m = {m} stalled at error {err:e}"
        )));
    }
    constant_cache().lock().unwrap().insert(key, c);
    Ok(c)
}

fn selfsim_quad(m: f64) -> f64 {
    (m - 1.0) / (2.0 * m * (m + 1.0))
}

/// `C~_m`: unit mass of `U_m(., t)` (independent of `t`).
pub fn barenblatt_constant(m: f64) -> Result<f64> {
    unit_mass_constant(ConstKind::SelfSimilar, m, selfsim_quad(m))
}

/// `C_m`: unit mass of the stationary profile `V_m`.
pub fn stationary_barenblatt_constant(m: f64) -> Result<f64> {
    unit_mass_constant(ConstKind::Stationary, m, 0.5 * (m - 1.0))
}

/// `U_m(x, t) = t^(-1/(m+1)) (C~_m - (m-1)/(2m(m+1)) x^2 t^(-2/(m+1)))_+^(1/(m-1))`.
pub fn eval_barenblatt(x: f64, t: f64, m: f64) -> Result<f64> {
    check_m(m)?;
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::Reference(format!("Barenblatt needs t > 0, got {t}")));
    }
    let c = barenblatt_constant(m)?;
    let k = 1.0 / (m + 1.0);
    let s = t.powf(-k);
    Ok(s * bump(c, selfsim_quad(m), m, x * s))
}

/// Free-boundary radius of [`eval_barenblatt`] at time `t`.
pub fn barenblatt_radius(m: f64, t: f64) -> Result<f64> {
    let c = barenblatt_constant(m)?;
    Ok((c / selfsim_quad(m)).sqrt() * t.powf(1.0 / (m + 1.0)))
}

/// `V_m(x) = (C_m - (m-1) x^2 / 2)_+^(1/(m-1))`.
pub fn eval_stationary_barenblatt(x: f64, m: f64) -> Result<f64> {
    let c = stationary_barenblatt_constant(m)?;
    Ok(bump(c, 0.5 * (m - 1.0), m, x))
}

/// Similarity length `L(t) = ((m+1) t)^(1/(m+1))` of the porous-medium limit.
pub fn similarity_length(m: f64, t: f64) -> f64 {
    ((m + 1.0) * t).powf(1.0 / (m + 1.0))
}

/// Maps a physical-time sample to similarity variables `y = x / L`, `v = L u`.
///
/// The self-similar attractor at any `t > 0` maps onto `V` (`m = 1`) or `V_m`.
/// Mass is preserved since `v dy = u dx`. `psi_eta` and `w` are rescaled as
/// `v_y / v` and `v_y`.
pub fn selfsim_rescale(sample: &DensitySample, m: f64) -> Result<DensitySample> {
    if !(sample.t > 0.0) {
        return Err(Error::Reference(format!(
            "rescaling needs t > 0, got {}",
            sample.t
        )));
    }
    if !(m >= 1.0) {
        return Err(Error::Reference(format!("rescaling needs m >= 1, got {m}")));
    }
    let l = similarity_length(m, sample.t);
    let mut out = sample.clone();
    out.x.iter_mut().for_each(|x| *x /= l);
    out.u.iter_mut().for_each(|u| *u *= l);
    out.psi_eta.iter_mut().for_each(|p| *p *= l);
    out.w.iter_mut().for_each(|w| *w *= l * l);
    out.support = (sample.support.0 / l, sample.support.1 / l);
    out.u_max *= l;
    out.u_max_x /= l;
    Ok(out)
}

/// `A(t) (R(t)^2 - x^2)^alpha` with `A(t) = a0 + a_dot t`, `R(t) = r0 + t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerSupersolution {
    pub alpha: f64,
    pub a0: f64,
    pub a_dot: f64,
    pub r0: f64,
}

impl PowerSupersolution {
    pub fn new(alpha: f64, a0: f64, a_dot: f64, r0: f64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::Reference(format!("alpha must be > 0, got {alpha}")));
        }
        if !(a0 > 0.0) || !a0.is_finite() {
            return Err(Error::Reference(format!("A(0) must be > 0, got {a0}")));
        }
        if !(a_dot >= 0.0) || !a_dot.is_finite() {
            return Err(Error::Reference(format!("A'(t) must be >= 0, got {a_dot}")));
        }
        if !(r0 > 0.0) || !r0.is_finite() {
            return Err(Error::Reference(format!("R(0) must be > 0, got {r0}")));
        }
        Ok(Self {
            alpha,
            a0,
            a_dot,
            r0,
        })
    }

    pub fn amplitude(&self, t: f64) -> f64 {
        self.a0 + self.a_dot * t
    }

    pub fn radius(&self, t: f64) -> f64 {
        self.r0 + t
    }

    pub fn eval(&self, t: f64, x: f64) -> f64 {
        let r = self.radius(t);
        let h = r * r - x * x;
        if h > 0.0 {
            self.amplitude(t) * h.powf(self.alpha)
        } else {
            0.0
        }
    }

    /// Mass `A B(1/2, alpha+1) R^(2 alpha + 1)`, by quadrature.
    pub fn mass(&self, t: f64) -> f64 {
        let r = self.radius(t);
        let a = self.alpha;
        let k = quad::integrate(|th: f64| th.cos().max(0.0).powf(2.0 * a + 1.0), -FRAC_PI_2, FRAC_PI_2, 1e-14);
        self.amplitude(t) * r.powf(2.0 * a + 1.0) * k
    }

    /// `U_t - (U U_x / sqrt(U^2 + U_x^2))_x` with exact derivatives.
    pub fn residual(&self, t: f64, x: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::Reference(format!("residual needs t >= 0, got {t}")));
        }
        let r = self.radius(t);
        let h = r * r - x * x;
        if !(h > 0.0) {
            return Err(Error::Reference(format!(
                "x = {x} is outside the open support (-{r}, {r}) at t = {t}"
            )));
        }
        let a = self.amplitude(t);
        let al = self.alpha;
        let h_a = h.powf(al);
        let h_a1 = h_a / h;
        let u_t = self.a_dot * h_a + 2.0 * a * al * r * h_a1;
        let q = (h * h + 4.0 * al * al * x * x).sqrt();
        let q_x = (-2.0 * x * h + 4.0 * al * al * x) / q;
        let j_x = -2.0 * a * al * h_a / q + 4.0 * a * al * al * x * x * h_a1 / q
            + 2.0 * a * al * x * h_a * q_x / (q * q);
        Ok(u_t - j_x)
    }

    /// Residual on `nt x nx` points: `t_i` uniform on `[t0, t1]`, `x_j = R(t_i) xi_j`
    /// with `xi_j` uniform on `[-(1 - margin), 1 - margin]`.
    pub fn residual_grid(
        &self,
        (t0, t1): (f64, f64),
        nt: usize,
        nx: usize,
        margin: f64,
        exec: Exec,
    ) -> Result<Vec<Vec<f64>>> {
        if nt < 2 || nx < 2 || !(t1 > t0) || !(margin > 0.0 && margin < 1.0) {
            return Err(Error::Reference("degenerate residual grid".into()));
        }
        let times: Vec<f64> = (0..nt)
            .map(|i| t0 + (t1 - t0) * i as f64 / (nt - 1) as f64)
            .collect();
        let rows = exec.map(&times, |&t| {
            let r = self.radius(t);
            (0..nx)
                .map(|j| {
                    let xi = (1.0 - margin) * (-1.0 + 2.0 * j as f64 / (nx - 1) as f64);
                    self.residual(t, r * xi)
                })
                .collect::<Result<Vec<f64>>>()
        });
        rows.into_iter().collect()
    }
}

/// Comparison profiles selectable by metrics and scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ReferenceProfile {
    /// `u_hom(x, t)`.
    HomogeneousRhe,
    /// `U(x, t)`.
    SelfsimHeat,
    /// `U_m(x, t)`.
    Barenblatt { m: f64 },
    /// `U_m(x, t / m)`, the large-time attractor of the solver's equation.
    BarenblattAttractor { m: f64 },
    /// `V(x)`, time-independent.
    StationaryGaussian,
    /// `V_m(x)`, time-independent.
    StationaryBarenblatt { m: f64 },
    PowerSupersolution(PowerSupersolution),
}

impl ReferenceProfile {
    /// Resolves a scenario reference name; `m` supplies the Barenblatt exponent.
    pub fn from_name(name: &str, m: f64) -> Result<Self> {
        let p = match name {
            "u_hom" | "homogeneous_rhe" => Self::HomogeneousRhe,
            "selfsim_heat" => Self::SelfsimHeat,
            "barenblatt" => Self::Barenblatt { m },
            "barenblatt_attractor" => Self::BarenblattAttractor { m },
            "stationary_gaussian" => Self::StationaryGaussian,
            "stationary_barenblatt" => Self::StationaryBarenblatt { m },
            other => {
                return Err(Error::Reference(format!("unknown reference profile '{other}'")))
            }
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Barenblatt { m }
            | Self::BarenblattAttractor { m }
            | Self::StationaryBarenblatt { m } => {
                check_m(m)?;
                barenblatt_constant(m)?;
                stationary_barenblatt_constant(m)?;
                Ok(())
            }
            Self::PowerSupersolution(p) => {
                PowerSupersolution::new(p.alpha, p.a0, p.a_dot, p.r0).map(|_| ())
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, x: f64, t: f64) -> Result<f64> {
        match *self {
            Self::HomogeneousRhe => eval_u_hom(x, t),
            Self::SelfsimHeat => eval_selfsim_heat(x, t),
            Self::Barenblatt { m } => eval_barenblatt(x, t, m),
            Self::BarenblattAttractor { m } => eval_barenblatt(x, t / m, m),
            Self::StationaryGaussian => Ok(eval_stationary_gaussian(x)),
            Self::StationaryBarenblatt { m } => eval_stationary_barenblatt(x, m),
            Self::PowerSupersolution(p) => Ok(p.eval(t, x)),
        }
    }

    /// Mass of the profile on `(-inf, x]` at time `t`.
    pub fn cdf(&self, x: f64, t: f64) -> Result<f64> {
        match *self {
            Self::HomogeneousRhe => {
                eval_u_hom(0.0, t)?;
                let half = 0.5 + t;
                Ok(((x + half) / (2.0 * half)).clamp(0.0, 1.0))
            }
            Self::SelfsimHeat => {
                eval_selfsim_heat(0.0, t)?;
                Ok(0.5 * libm::erfc(-x / (4.0 * t).sqrt()))
            }
            Self::Barenblatt { m } | Self::BarenblattAttractor { m } => {
                let tau = self.barenblatt_time(t);
                eval_barenblatt(0.0, tau, m)?;
                let s = tau.powf(-1.0 / (m + 1.0));
                Ok(bump_cdf(barenblatt_constant(m)?, selfsim_quad(m), m, x * s))
            }
            Self::StationaryGaussian => Ok(0.5 * libm::erfc(-x / 2f64.sqrt())),
            Self::StationaryBarenblatt { m } => Ok(bump_cdf(
                stationary_barenblatt_constant(m)?,
                0.5 * (m - 1.0),
                m,
                x,
            )),
            Self::PowerSupersolution(p) => {
                let r = p.radius(t);
                let lo = -r;
                let hi = x.clamp(-r, r);
                Ok(quad::integrate(|y| p.eval(t, y), lo, hi, 1e-13))
            }
        }
    }

    /// Half-width of the support at time `t`, `None` for the Gaussians.
    pub fn support_radius(&self, t: f64) -> Result<Option<f64>> {
        Ok(match *self {
            Self::HomogeneousRhe => Some(0.5 + t),
            Self::SelfsimHeat | Self::StationaryGaussian => None,
            Self::Barenblatt { m } | Self::BarenblattAttractor { m } => {
                Some(barenblatt_radius(m, self.barenblatt_time(t))?)
            }
            Self::StationaryBarenblatt { m } => {
                Some((2.0 * stationary_barenblatt_constant(m)? / (m - 1.0)).sqrt())
            }
            Self::PowerSupersolution(p) => Some(p.radius(t)),
        })
    }

    fn barenblatt_time(&self, t: f64) -> f64 {
        match *self {
            Self::BarenblattAttractor { m } => t / m,
            _ => t,
        }
    }

    /// Profile mass outside `[a, b]` at time `t`.
    pub fn mass_outside(&self, a: f64, b: f64, t: f64) -> Result<f64> {
        let total = match self {
            Self::PowerSupersolution(p) => p.mass(t),
            _ => 1.0,
        };
        Ok((total - (self.cdf(b, t)? - self.cdf(a, t)?)).max(0.0))
    }
}
