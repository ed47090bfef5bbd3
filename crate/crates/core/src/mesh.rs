//! Fixed partitions of the mass interval `[-1/2, 1/2]`.
//!
//! Nodes are the Lagrangian labels: they never move during a run. Particle
//! positions live in [`crate::transform::PseudoInverseState`].

use crate::error::{Error, Result};

/// Tolerance used when matching focus points against their mirror images.
const FOCUS_MATCH_TOL: f64 = 1e-12;

/// An immutable, symmetric partition `eta_0 = -1/2 < ... < eta_{n-1} = 1/2` with even `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct MassMesh {
    nodes: Vec<f64>,
    spacings: Vec<f64>,
    inv_spacings: Vec<f64>,
}

impl MassMesh {
    /// Equally spaced nodes.
    pub fn uniform(n: usize) -> Result<Self> {
        check_count(n)?;
        let denom = (n - 1) as f64;
        let mut nodes = vec![0.0; n];
        for i in 0..n / 2 {
            let v = -0.5 + i as f64 / denom;
            nodes[i] = v;
            nodes[n - 1 - i] = -v;
        }
        Self::from_nodes(nodes)
    }

    /// Nodes graded geometrically toward each focus point.
    ///
    /// The left half `[-1/2, 0]` is split into bands at the focus points. Within a
    /// band the spacings form a geometric progression whose largest/smallest ratio
    /// is `ratio`, smallest next to the focus end(s). Bands receive spacings in
    /// proportion to their length, focus points land exactly on nodes, and the
    /// right half is the mirror image.
    pub fn graded(n: usize, focus: &[f64], ratio: f64) -> Result<Self> {
        check_count(n)?;
        if !(ratio > 1.0) || !ratio.is_finite() {
            return Err(Error::Mesh(format!("grading ratio must be > 1, got {ratio}")));
        }
        if focus.is_empty() {
            return Err(Error::Mesh("graded mesh needs at least one focus point".into()));
        }
        for &f in focus {
            if !(-0.5..=0.5).contains(&f) {
                return Err(Error::Mesh(format!("focus point {f} outside [-1/2, 1/2]")));
            }
            if !focus.iter().any(|&g| (g + f).abs() <= FOCUS_MATCH_TOL) {
                return Err(Error::Mesh(format!(
                    "focus set is not symmetric about 0: {f} has no mirror image"
                )));
            }
        }
        let is_focus = |p: f64| focus.iter().any(|&g| (g - p).abs() <= FOCUS_MATCH_TOL);

        // Band anchors on the left half.
        let mut anchors = vec![-0.5];
        let mut interior: Vec<f64> = focus
            .iter()
            .copied()
            .filter(|&f| f > -0.5 + FOCUS_MATCH_TOL && f < -FOCUS_MATCH_TOL)
            .collect();
        interior.sort_by(f64::total_cmp);
        interior.dedup_by(|a, b| (*a - *b).abs() <= FOCUS_MATCH_TOL);
        anchors.extend(interior);
        anchors.push(0.0);

        // Slots: n/2 - 1 full spacings plus the central spacing, half of which lies left of 0.
        let slots = n / 2;
        let n_bands = anchors.len() - 1;
        let targets: Vec<f64> = (0..n_bands)
            .map(|b| {
                let len = anchors[b + 1] - anchors[b];
                len * (n - 1) as f64 + if b + 1 == n_bands { 0.5 } else { 0.0 }
            })
            .collect();
        let counts = largest_remainder(&targets, slots);
        if let Some(b) = counts.iter().position(|&c| c < 2) {
            return Err(Error::Mesh(format!(
                "n = {n} leaves fewer than two spacings in band [{}, {}]",
                anchors[b],
                anchors[b + 1]
            )));
        }

        let mut left = Vec::with_capacity(slots);
        for b in 0..n_bands {
            let (lo, hi) = (anchors[b], anchors[b + 1]);
            let last = b + 1 == n_bands;
            let profile = band_profile(counts[b], is_focus(lo), is_focus(hi), ratio);
            let mut weight: f64 = profile.iter().sum();
            if last {
                weight -= 0.5 * profile[profile.len() - 1];
            }
            let scale = (hi - lo) / weight;
            // The band's final spacing ends on the next anchor (or straddles 0 for the
            // last band), so only its first count - 1 spacings produce new nodes.
            let mut eta = lo;
            left.push(eta);
            for p in &profile[..profile.len() - 1] {
                eta += p * scale;
                left.push(eta);
            }
        }
        debug_assert_eq!(left.len(), slots);

        let mut nodes = vec![0.0; n];
        for (i, &v) in left.iter().enumerate() {
            nodes[i] = v;
            nodes[n - 1 - i] = -v;
        }
        Self::from_nodes(nodes)
    }

    /// Validates an explicit node list against the mesh invariants.
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        let n = nodes.len();
        check_count(n)?;
        if nodes[0] != -0.5 || nodes[n - 1] != 0.5 {
            return Err(Error::Mesh("end nodes must be exactly -1/2 and 1/2".into()));
        }
        let spacings: Vec<f64> = nodes.windows(2).map(|w| w[1] - w[0]).collect();
        if let Some(i) = spacings.iter().position(|&d| !(d > 0.0)) {
            return Err(Error::Mesh(format!("nodes not strictly increasing at index {i}")));
        }
        for i in 0..n / 2 {
            let a = nodes[i];
            let b = -nodes[n - 1 - i];
            if (a - b).abs() > f64::EPSILON * a.abs().max(f64::MIN_POSITIVE) {
                return Err(Error::Mesh(format!("mesh not symmetric at index {i}")));
            }
        }
        let inv_spacings = spacings.iter().map(|d| 1.0 / d).collect();
        Ok(Self {
            nodes,
            spacings,
            inv_spacings,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// `spacings()[i] = nodes[i + 1] - nodes[i]`.
    pub fn spacings(&self) -> &[f64] {
        &self.spacings
    }

    /// `1 / spacings()[i]`.
    pub fn inv_spacings(&self) -> &[f64] {
        &self.inv_spacings
    }

    pub fn min_spacing(&self) -> f64 {
        self.spacings.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_spacing(&self) -> f64 {
        self.spacings.iter().copied().fold(0.0, f64::max)
    }

    /// Index of the node closest to `eta`.
    pub fn nearest(&self, eta: f64) -> usize {
        let pos = self.nodes.partition_point(|&v| v < eta);
        if pos == 0 {
            0
        } else if pos == self.nodes.len() {
            pos - 1
        } else if (self.nodes[pos] - eta).abs() < (eta - self.nodes[pos - 1]).abs() {
            pos
        } else {
            pos - 1
        }
    }
}

fn check_count(n: usize) -> Result<()> {
    if n < 4 || !n.is_multiple_of(2) {
        return Err(Error::Mesh(format!(
            "node count must be even and at least 4, got {n}"
        )));
    }
    Ok(())
}

/// Relative spacings for one band: geometric growth away from the focus end(s).
fn band_profile(count: usize, left_focus: bool, right_focus: bool, ratio: f64) -> Vec<f64> {
    let steps = match (left_focus, right_focus) {
        (true, true) => (count - 1) / 2,
        (false, false) => 0,
        _ => count - 1,
    };
    if steps == 0 {
        return vec![1.0; count];
    }
    let q = ratio.powf(1.0 / steps as f64);
    (0..count)
        .map(|j| {
            let k = match (left_focus, right_focus) {
                (true, true) => j.min(count - 1 - j),
                (true, false) => j,
                (false, true) => count - 1 - j,
                (false, false) => 0,
            };
            q.powi(k as i32)
        })
        .collect()
}

/// Rounds `targets` to integers summing to `total`, keeping the largest fractional parts.
fn largest_remainder(targets: &[f64], total: usize) -> Vec<usize> {
    let mut counts: Vec<usize> = targets.iter().map(|t| t.floor().max(0.0) as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..targets.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = targets[a] - targets[a].floor();
        let fb = targets[b] - targets[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    let missing = total.saturating_sub(assigned);
    for &b in order.iter().cycle().take(missing) {
        counts[b] += 1;
    }
    counts
}
