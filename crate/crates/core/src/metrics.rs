//! Error estimators, front diagnostics and rate fitting.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad;
use crate::reference::ReferenceProfile;
use crate::transform::{reconstruct, DensitySample, PseudoInverseState};

/// Default `|psi_eta|` level flagging a forming jump in the bulk.
pub const DISCONTINUITY_THRESHOLD: f64 = 1e3;
/// Default `|psi_eta|` level at the boundary-adjacent nodes read as a vertical contact.
pub const VERTICAL_CONTACT_THRESHOLD: f64 = 1e2;

/// One row of the metrics stream. Field order is the serialized key order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsRecord {
    pub t: f64,
    /// `None` when no reference profile is configured or it is undefined at `t`.
    pub l1_paper: Option<f64>,
    pub l1_quadrature: Option<f64>,
    pub support_left: f64,
    pub support_right: f64,
    pub u_max: f64,
    pub max_interior_abs_psi_eta: f64,
    pub liftoff_left: f64,
    pub liftoff_right: f64,
    pub w_max: f64,
}

impl MetricsRecord {
    /// Metrics of `sample`; `m` is the exponent used by the lift-off indicator.
    ///
    /// Reference errors are skipped when the profile is singular at `t`
    /// (self-similar profiles at `t = 0`).
    pub fn from_sample(
        sample: &DensitySample,
        m: f64,
        reference: Option<&ReferenceProfile>,
    ) -> Result<Self> {
        let (l1_paper, l1_quadrature) = match reference {
            Some(r) if reference_defined(r, sample.t) => (
                Some(l1_error_paper(sample, r, sample.t)?),
                Some(l1_error_quadrature(sample, r, sample.t)?),
            ),
            _ => (None, None),
        };
        let (liftoff_left, liftoff_right) = liftoff_from_profile(&sample.u, &sample.eta, m);
        let w_max = sample.w[1..sample.len() - 1]
            .iter()
            .fold(0.0f64, |a, w| a.max(w.abs()));
        let record = Self {
            t: sample.t,
            l1_paper,
            l1_quadrature,
            support_left: sample.support.0,
            support_right: sample.support.1,
            u_max: sample.u_max,
            max_interior_abs_psi_eta: max_interior_abs_psi_eta(sample).0,
            liftoff_left,
            liftoff_right,
            w_max,
        };
        record.check()?;
        Ok(record)
    }

    fn check(&self) -> Result<()> {
        let opt = [self.l1_paper, self.l1_quadrature];
        let fixed = [
            self.t,
            self.support_left,
            self.support_right,
            self.u_max,
            self.max_interior_abs_psi_eta,
            self.liftoff_left,
            self.liftoff_right,
            self.w_max,
        ];
        if fixed.iter().chain(opt.iter().flatten()).any(|v| !v.is_finite()) {
            return Err(Error::Metrics(format!("non-finite entry in record at t = {}", self.t)));
        }
        if !(self.support_left <= self.support_right) {
            return Err(Error::Metrics(format!("inverted support at t = {}", self.t)));
        }
        Ok(())
    }
}

fn reference_defined(r: &ReferenceProfile, t: f64) -> bool {
    match r {
        ReferenceProfile::SelfsimHeat
        | ReferenceProfile::Barenblatt { .. }
        | ReferenceProfile::BarenblattAttractor { .. } => t > 0.0,
        _ => t >= 0.0,
    }
}

/// `(1/N) sum_i |u_i - ref(x_i, t)|` over all `N` nodes.
pub fn l1_error_paper(sample: &DensitySample, reference: &ReferenceProfile, t: f64) -> Result<f64> {
    let r = sample
        .x
        .iter()
        .map(|&x| reference.eval(x, t))
        .collect::<Result<Vec<f64>>>()?;
    l1_distance_paper(&sample.u, &r)
}

/// `(1/N) sum_i |a_i - b_i|` for node values on a shared node set.
pub fn l1_distance_paper(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::Metrics(format!(
            "node value lists differ in length or are empty ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    let sum: f64 = a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum();
    Ok(sum / a.len() as f64)
}

/// Trapezoidal `int |u - ref| dx` over the sample support plus the reference mass
/// outside it.
pub fn l1_error_quadrature(
    sample: &DensitySample,
    reference: &ReferenceProfile,
    t: f64,
) -> Result<f64> {
    let diffs = sample
        .x
        .iter()
        .zip(&sample.u)
        .map(|(x, u)| Ok((u - reference.eval(*x, t)?).abs()))
        .collect::<Result<Vec<f64>>>()?;
    let inside: f64 = sample
        .x
        .windows(2)
        .zip(diffs.windows(2))
        .map(|(x, d)| 0.5 * (d[0] + d[1]) * (x[1] - x[0]))
        .sum();
    let (a, b) = sample.support;
    Ok(inside + reference.mass_outside(a, b, t)?)
}

/// Power-law fit of an error series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub points: usize,
}

/// Least-squares slope of `ln err` against `ln t` over points with `t` in `window`.
pub fn rate_fit(series: &[(f64, f64)], window: (f64, f64)) -> Result<RateFit> {
    let (lo, hi) = window;
    if !(lo < hi) {
        return Err(Error::Metrics(format!("empty fit window [{lo}, {hi}]")));
    }
    let pts: Vec<(f64, f64)> = series
        .iter()
        .copied()
        .filter(|&(t, e)| t >= lo && t <= hi && t > 0.0 && e > 0.0)
        .collect();
    if pts.len() < 3 {
        return Err(Error::Metrics(format!(
            "rate fit needs at least 3 positive points in [{lo}, {hi}], got {}",
            pts.len()
        )));
    }
    let (slope, intercept) = quad::log_log_fit(&pts)
        .ok_or_else(|| Error::Metrics("degenerate fit window".into()))?;
    Ok(RateFit {
        slope,
        intercept,
        points: pts.len(),
    })
}

/// One-sided differences of `psi^(m+1)` on the first and last interior segments,
/// sign-normalized so that growth toward the bulk is positive on both sides.
pub fn liftoff_from_profile(psi: &[f64], eta: &[f64], m: f64) -> (f64, f64) {
    let n = psi.len();
    if n < 4 {
        return (0.0, 0.0);
    }
    let p = |v: f64| v.powf(m + 1.0);
    let left = (p(psi[2]) - p(psi[1])) / (eta[2] - eta[1]);
    let right = (p(psi[n - 3]) - p(psi[n - 2])) / (eta[n - 2] - eta[n - 3]);
    (left, right)
}

/// Lift-off indicator of a state; see [`liftoff_from_profile`].
pub fn liftoff_indicator(state: &PseudoInverseState, m: f64) -> Result<(f64, f64)> {
    let s = reconstruct(state)?;
    Ok(liftoff_from_profile(&s.u, &s.eta, m))
}

/// Largest `|psi_eta|` over nodes `2..=n-3` and its index.
///
/// The nodes next to the end nodes are excluded: they carry the imposed vertical
/// contact, not a bulk jump.
pub fn max_interior_abs_psi_eta(sample: &DensitySample) -> (f64, usize) {
    let n = sample.len();
    let mut best = (0.0, n / 2);
    for i in 2..n.saturating_sub(2) {
        let v = sample.psi_eta[i].abs();
        if v > best.0 {
            best = (v, i);
        }
    }
    best
}

/// One point of the discontinuity time series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscontinuityPoint {
    pub t: f64,
    pub value: f64,
    pub index: usize,
    pub eta: f64,
    pub x: f64,
}

/// Per-snapshot maximum interior `|psi_eta|` with its location.
pub fn discontinuity_indicator(snapshots: &[PseudoInverseState]) -> Result<Vec<DiscontinuityPoint>> {
    snapshots
        .iter()
        .map(|s| {
            let r = reconstruct(s)?;
            let (value, index) = max_interior_abs_psi_eta(&r);
            Ok(DiscontinuityPoint {
                t: r.t,
                value,
                index,
                eta: r.eta[index],
                x: r.x[index],
            })
        })
        .collect()
}

/// First point at which the indicator reaches `threshold` after growing
/// monotonically over the preceding points.
pub fn jump_onset(series: &[DiscontinuityPoint], threshold: f64) -> Option<usize> {
    let k = series.iter().position(|p| p.value >= threshold)?;
    let start = series[..k]
        .iter()
        .rposition(|p| p.value < series[k].value.min(threshold) / 10.0)
        .map_or(0, |i| i + 1);
    let growing = series[start..=k].windows(2).all(|w| w[1].value >= w[0].value);
    growing.then_some(k)
}

/// Whether `|psi_eta|` at the first and last interior nodes exceeds `threshold`.
pub fn vertical_contact(sample: &DensitySample, threshold: f64) -> (bool, bool) {
    let n = sample.len();
    (
        sample.psi_eta[1].abs() > threshold,
        sample.psi_eta[n - 2].abs() > threshold,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::InitialDensity;
    use crate::mesh::MassMesh;
    use crate::transform::init_pseudo_inverse;
    use std::sync::Arc;

    fn indicator_sample(n: usize) -> DensitySample {
        let mesh = Arc::new(MassMesh::uniform(n).unwrap());
        let d = InitialDensity::indicator(-0.5, 0.5).unwrap();
        reconstruct(&init_pseudo_inverse(&d, mesh).unwrap()).unwrap()
    }

    #[test]
    fn l1_paper_definition() {
        let s = indicator_sample(10);
        let r = ReferenceProfile::HomogeneousRhe;
        // end nodes carry u = 0 against u_hom = 1
        let e = l1_error_paper(&s, &r, 0.0).unwrap();
        assert!((e - 2.0 / 10.0).abs() < 1e-12);
        let mut shifted = s.clone();
        shifted.u.iter_mut().for_each(|u| *u += 0.25);
        let mut same = s.clone();
        same.u = s.x.iter().map(|&x| r.eval(x, 0.0).unwrap()).collect();
        assert_eq!(l1_error_paper(&same, &r, 0.0).unwrap(), 0.0);
        same.u.iter_mut().for_each(|u| *u += 0.25);
        assert!((l1_error_paper(&same, &r, 0.0).unwrap() - 0.25).abs() < 1e-14);
    }

    #[test]
    fn l1_quadrature_disjoint_is_two() {
        let mut s = indicator_sample(100);
        // move the sample far away from u_hom's support
        s.x.iter_mut().for_each(|x| *x += 10.0);
        s.support = (s.x[0], s.x[99]);
        let e = l1_error_quadrature(&s, &ReferenceProfile::HomogeneousRhe, 0.0).unwrap();
        let full: f64 = s
            .x
            .windows(2)
            .zip(s.u.windows(2))
            .map(|(x, u)| 0.5 * (u[0] + u[1]) * (x[1] - x[0]))
            .sum();
        assert!((e - full - 1.0).abs() < 1e-12);
        assert!((e - 2.0).abs() < 0.05);
    }

    #[test]
    fn rate_fit_exact_power_laws() {
        let series: Vec<(f64, f64)> = (1..=20).map(|k| (k as f64, (k as f64).powf(-1.0 / 3.0))).collect();
        let f = rate_fit(&series, (1.0, 20.0)).unwrap();
        assert!((f.slope + 1.0 / 3.0).abs() < 1e-12);
        let series: Vec<(f64, f64)> = (1..=20).map(|k| (k as f64, 7.0 / (k as f64).sqrt())).collect();
        let f = rate_fit(&series, (2.0, 15.0)).unwrap();
        assert!((f.slope + 0.5).abs() < 1e-12);
        assert_eq!(f.points, 14);
        assert!(rate_fit(&series, (2.0, 3.0)).is_err());
        assert!(rate_fit(&series, (3.0, 2.0)).is_err());
    }

    #[test]
    fn liftoff_regimes() {
        let profile = |p: f64, n: usize| {
            let mesh = MassMesh::uniform(n).unwrap();
            let psi: Vec<f64> = mesh.nodes().iter().map(|e| (0.5 - e.abs()).powf(p)).collect();
            (psi, mesh.nodes().to_vec())
        };
        let m = 1.5;
        let at = |p: f64, n: usize| {
            let (psi, eta) = profile(p, n);
            liftoff_from_profile(&psi, &eta, m)
        };
        // p = 0.5 > 1/(m+1): indicator decays under refinement
        assert!(at(0.5, 10_000).0 < at(0.5, 100).0);
        // p = 0.3 < 1/(m+1): it diverges
        assert!(at(0.3, 10_000).0 > 2.0 * at(0.3, 100).0);
        let (l, r) = at(0.3, 1000);
        assert!((l - r).abs() < 1e-9 * l.abs());
    }

    #[test]
    fn discontinuity_onset_detection() {
        let pts: Vec<DiscontinuityPoint> = [1.0, 5.0, 50.0, 500.0, 2000.0, 800.0]
            .iter()
            .enumerate()
            .map(|(i, &v)| DiscontinuityPoint {
                t: i as f64,
                value: v,
                index: 3,
                eta: 0.0,
                x: 0.0,
            })
            .collect();
        assert_eq!(jump_onset(&pts, 1e3), Some(4));
        assert_eq!(jump_onset(&pts, 1e4), None);
    }

    #[test]
    fn record_serializes_in_order() {
        let s = indicator_sample(20);
        let rec = MetricsRecord::from_sample(&s, 1.0, Some(&ReferenceProfile::HomogeneousRhe)).unwrap();
        let line = serde_json::to_string(&rec).unwrap();
        let keys = [
            "t",
            "l1_paper",
            "l1_quadrature",
            "support_left",
            "support_right",
            "u_max",
            "max_interior_abs_psi_eta",
            "liftoff_left",
            "liftoff_right",
            "w_max",
        ];
        let mut last = 0;
        for k in keys {
            let pos = line.find(&format!("\"{k}\"")).unwrap();
            assert!(pos >= last, "{k} out of order in {line}");
            last = pos;
        }
        let none = MetricsRecord::from_sample(&s, 1.0, Some(&ReferenceProfile::SelfsimHeat)).unwrap();
        assert_eq!(none.l1_paper, None);
    }
}
