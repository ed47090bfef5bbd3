//! Change of variables between densities `u(x)` and pseudo-inverses `phi(eta)`.
//!
//! `phi` maps the shifted mass coordinate `eta` to the particle position carrying
//! cumulative mass `eta + 1/2`. The density along particles is
//! `psi = 1 / phi_eta = u(phi)`.
//!
//! Node indices are zero-based throughout: node `0` and node `n - 1` are the
//! support endpoints, nodes `1..=n-2` are interior.

use std::sync::Arc;

use crate::density::InitialDensity;
use crate::error::{Error, Result};
use crate::mesh::MassMesh;
use crate::quad;

/// Node values of the pseudo-inverse at time `t`; the only evolved unknown.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoInverseState {
    pub t: f64,
    pub phi: Vec<f64>,
    /// Tracked maximum of `u` (an interior node index). Nodes at or left of it use
    /// forward differences for `phi_eta`, nodes right of it backward differences.
    pub argmax: usize,
    pub mesh: Arc<MassMesh>,
}

impl PseudoInverseState {
    /// Builds a state from explicit positions and tracks the initial argmax.
    pub fn new(mesh: Arc<MassMesh>, phi: Vec<f64>, t: f64) -> Result<Self> {
        if phi.len() != mesh.len() {
            return Err(Error::solver(
                t,
                format!("{} positions for {} mesh nodes", phi.len(), mesh.len()),
            ));
        }
        check_monotone(&phi, t)?;
        let n = mesh.len();
        let mut psi = vec![0.0; n];
        let mut psi_eta = vec![0.0; n];
        let provisional = n / 2 - 1;
        node_derivatives(&mesh, &phi, provisional, &mut psi, &mut psi_eta);
        let argmax = track_argmax(&psi, provisional);
        Ok(Self {
            t,
            phi,
            argmax,
            mesh,
        })
    }

    pub fn len(&self) -> usize {
        self.phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi.is_empty()
    }

    /// `(phi_0, phi_{n-1})`.
    pub fn support(&self) -> (f64, f64) {
        (self.phi[0], self.phi[self.phi.len() - 1])
    }

    pub fn check_monotone(&self) -> Result<()> {
        check_monotone(&self.phi, self.t)
    }
}

/// Reconstructed `(x, u)` samples plus derived diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct DensitySample {
    pub t: f64,
    pub eta: Vec<f64>,
    /// Node positions, `x_i = phi_i`.
    pub x: Vec<f64>,
    /// `u_i = psi_i`; zero at both end nodes by convention.
    pub u: Vec<f64>,
    /// `psi_eta_i = (u_x / u)(x_i)`; zero at the end nodes.
    pub psi_eta: Vec<f64>,
    /// `w_i = psi_i psi_eta_i = u_x(x_i)`.
    pub w: Vec<f64>,
    pub support: (f64, f64),
    pub argmax: usize,
    pub u_max: f64,
    pub u_max_x: f64,
}

impl DensitySample {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Trapezoidal integral of the samples over the interior nodes.
    pub fn trapezoid_mass(&self) -> f64 {
        let n = self.len();
        if n < 3 {
            return 0.0;
        }
        self.x[1..n - 1]
            .windows(2)
            .zip(self.u[1..n - 1].windows(2))
            .map(|(x, u)| 0.5 * (u[0] + u[1]) * (x[1] - x[0]))
            .sum()
    }
}

/// Inverts the distribution function of `density` at every node.
///
/// Interior nodes satisfy `F(phi_i) = eta_i + 1/2`; the end nodes sit on the
/// support endpoints.
pub fn init_pseudo_inverse(density: &InitialDensity, mesh: Arc<MassMesh>) -> Result<PseudoInverseState> {
    let (a, b) = density.support();
    let n = mesh.len();
    let mut phi = vec![0.0; n];
    phi[0] = a;
    phi[n - 1] = b;
    for (p, eta) in phi[1..n - 1].iter_mut().zip(&mesh.nodes()[1..n - 1]) {
        *p = quad::newton_bisect(|x| density.cdf(x), |x| density.density(x), eta + 0.5, a, b);
    }
    if let Err(e) = check_monotone(&phi, 0.0) {
        return Err(Error::Density(format!(
            "distribution function is not strictly increasing on its support ({e})"
        )));
    }
    PseudoInverseState::new(mesh, phi, 0.0)
}

/// Samples `(x, u)` and derivatives from a state.
pub fn reconstruct(state: &PseudoInverseState) -> Result<DensitySample> {
    state.check_monotone()?;
    let n = state.len();
    let mut psi = vec![0.0; n];
    let mut psi_eta = vec![0.0; n];
    node_derivatives(&state.mesh, &state.phi, state.argmax, &mut psi, &mut psi_eta);
    let w: Vec<f64> = psi.iter().zip(&psi_eta).map(|(p, d)| p * d).collect();
    let argmax = state.argmax;
    let (mut u_max, mut u_max_x) = (0.0, state.phi[argmax]);
    for (&p, &x) in psi[1..n - 1].iter().zip(&state.phi[1..n - 1]) {
        if p > u_max {
            u_max = p;
            u_max_x = x;
        }
    }
    Ok(DensitySample {
        t: state.t,
        eta: state.mesh.nodes().to_vec(),
        x: state.phi.clone(),
        u: psi,
        psi_eta,
        w,
        support: state.support(),
        argmax,
        u_max,
        u_max_x,
    })
}

/// Reconstruction error of [`init_pseudo_inverse`] followed by [`reconstruct`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundTripError {
    pub n: usize,
    /// `max_i |u_i - u_0(x_i)|` over all interior nodes.
    pub max_all: f64,
    /// Same, restricted to nodes whose mass coordinate is at least `margin` away
    /// from those of the support ends and of the interior breakpoints of `u_0`.
    pub max_smooth: f64,
}

/// Round trip of `density` on a uniform mesh of `n` nodes.
pub fn round_trip_error(density: &InitialDensity, n: usize, margin: f64) -> Result<RoundTripError> {
    let mesh = Arc::new(MassMesh::uniform(n)?);
    let state = init_pseudo_inverse(density, mesh)?;
    let sample = reconstruct(&state)?;
    let mut singular: Vec<f64> = density
        .interior_breakpoints()
        .iter()
        .map(|&x| density.cdf(x) - 0.5)
        .collect();
    singular.extend([-0.5, 0.5]);
    let (mut max_all, mut max_smooth) = (0.0f64, 0.0f64);
    for i in 1..n - 1 {
        let x = sample.x[i];
        let err = (sample.u[i] - density.density(x)).abs();
        max_all = max_all.max(err);
        if singular.iter().all(|s| (sample.eta[i] - s).abs() >= margin) {
            max_smooth = max_smooth.max(err);
        }
    }
    Ok(RoundTripError {
        n,
        max_all,
        max_smooth,
    })
}

/// Observed convergence order `-d ln(err) / d ln(n)` by least squares.
pub fn observed_order(errors: &[(usize, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = errors.iter().map(|&(n, e)| (n as f64, e)).collect();
    quad::log_log_fit(&pts).map(|(slope, _)| -slope)
}

/// Directional differences at every node for a given argmax.
///
/// `psi_i` uses a forward difference of `phi` for `i <= argmax` and a backward one
/// otherwise; `psi_eta` uses the opposite direction. `psi` is zero at both end
/// nodes, which imposes the vertical contact angle on the adjacent interior nodes.
/// Assumes `phi` is strictly increasing.
pub(crate) fn node_derivatives(
    mesh: &MassMesh,
    phi: &[f64],
    argmax: usize,
    psi: &mut [f64],
    psi_eta: &mut [f64],
) {
    let n = phi.len();
    let k = argmax.clamp(1, n - 2);
    let d = mesh.spacings();
    let inv_d = mesh.inv_spacings();
    psi[0] = 0.0;
    psi[n - 1] = 0.0;
    psi_eta[0] = 0.0;
    psi_eta[n - 1] = 0.0;

    // forward differences on 1..=k, backward on k+1..=n-2
    for ((p, w), dd) in psi[1..=k]
        .iter_mut()
        .zip(phi[1..=k + 1].windows(2))
        .zip(&d[1..=k])
    {
        *p = dd / (w[1] - w[0]);
    }
    for ((p, w), dd) in psi[k + 1..n - 1]
        .iter_mut()
        .zip(phi[k..n - 1].windows(2))
        .zip(&d[k..n - 2])
    {
        *p = dd / (w[1] - w[0]);
    }

    // psi_eta in the opposite direction
    for ((e, w), id) in psi_eta[1..=k].iter_mut().zip(psi[..=k].windows(2)).zip(&inv_d[..k]) {
        *e = (w[1] - w[0]) * id;
    }
    for ((e, w), id) in psi_eta[k + 1..n - 1]
        .iter_mut()
        .zip(psi[k + 1..].windows(2))
        .zip(&inv_d[k + 1..n - 1])
    {
        *e = (w[1] - w[0]) * id;
    }
}

/// Interior index of the largest `psi`; ties keep `previous`, then the smaller index.
pub fn track_argmax(psi: &[f64], previous: usize) -> usize {
    let n = psi.len();
    let top = lane_max(&psi[1..n - 1]);
    if (1..n - 1).contains(&previous) && psi[previous] == top {
        return previous;
    }
    psi[1..n - 1].iter().position(|&p| p == top).map_or(1, |k| k + 1)
}

/// Largest entry of `v` ignoring NaN (`-inf` when empty). Independent lanes keep
/// the reduction off a single dependency chain.
#[inline]
pub(crate) fn lane_max(v: &[f64]) -> f64 {
    const LANES: usize = 8;
    let mut acc = [f64::NEG_INFINITY; LANES];
    let chunks = v.chunks_exact(LANES);
    let rest = chunks.remainder();
    for c in chunks {
        for (a, &x) in acc.iter_mut().zip(c) {
            *a = if x > *a { x } else { *a };
        }
    }
    for (a, &x) in acc.iter_mut().zip(rest) {
        *a = if x > *a { x } else { *a };
    }
    acc.iter().fold(f64::NEG_INFINITY, |m, &x| if x > m { x } else { m })
}

pub(crate) fn check_monotone(phi: &[f64], t: f64) -> Result<()> {
    // strictly increasing with finite ends implies every entry is finite
    let increasing = phi.windows(2).fold(true, |ok, w| ok & (w[1] > w[0]));
    let ends_finite = phi.first().is_none_or(|x| x.is_finite())
        && phi.last().is_none_or(|x| x.is_finite());
    if increasing && ends_finite {
        return Ok(());
    }
    if let Some(i) = phi.iter().position(|x| !x.is_finite()) {
        return Err(Error::solver(t, format!("non-finite position at node {i}")));
    }
    let i = phi.windows(2).position(|w| !(w[1] > w[0])).unwrap_or(0);
    Err(Error::solver(
        t,
        format!(
            "positions not strictly increasing between nodes {i} and {}: {} >= {}",
            i + 1,
            phi[i],
            phi[i + 1]
        ),
    ))
}
