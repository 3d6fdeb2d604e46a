//! Distribution network model: buses, lines, admittance matrix, topology
//! classification, and the gauge transform for homogeneous networks.
//!
//! Bus 0 is always the slack bus with fixed voltage V_0 = 1. Buses 1..=n are
//! PQ buses. Lines are undirected and carry a complex admittance; at most one
//! line exists per bus pair (parallel lines are merged by admittance
//! summation when a network is constructed programmatically).

use crate::error::{Error, Result};
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub const SLACK: BusId = BusId(0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BusId(pub usize);

impl BusId {
    pub fn new(index: usize) -> Self {
        BusId(index)
    }

    pub fn index(&self) -> usize {
        self.0
    }

    pub fn is_slack(&self) -> bool {
        self.0 == 0
    }
}

impl std::fmt::Display for BusId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Undirected line with complex admittance. Stored canonically with
/// `from < to`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Line {
    pub from: BusId,
    pub to: BusId,
    pub y: Complex64,
}

impl Line {
    pub fn new(from: usize, to: usize, y: Complex64) -> Self {
        Line {
            from: BusId(from),
            to: BusId(to),
            y,
        }
    }
}

/// Validated network: n PQ buses plus the slack bus 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    n: usize,
    lines: Vec<Line>,
    /// Adjacency over buses 0..=n: (neighbor, admittance).
    adj: Vec<Vec<(usize, Complex64)>>,
}

impl Network {
    /// Builds a network from a line list. Parallel lines between the same
    /// bus pair are merged by admittance summation; all other violations
    /// (out-of-range ids, self-loops, zero or non-finite admittances) are
    /// collected exhaustively and reported together.
    pub fn new(n: usize, lines: Vec<Line>) -> Result<Self> {
        let mut reasons = Vec::new();
        if n == 0 {
            reasons.push("n must be at least 1 (empty network)".to_string());
        }
        for (idx, line) in lines.iter().enumerate() {
            let (a, b) = (line.from.index(), line.to.index());
            if a > n || b > n {
                reasons.push(format!(
                    "lines[{idx}]: bus id out of range (pair {a}-{b}, valid ids are 0..={n})"
                ));
            }
            if a == b {
                reasons.push(format!("lines[{idx}]: self-loop at bus {a}"));
            }
            if !line.y.re.is_finite() || !line.y.im.is_finite() {
                reasons.push(format!("lines[{idx}]: admittance is not finite"));
            } else if line.y == Complex64::new(0.0, 0.0) {
                reasons.push(format!("lines[{idx}]: zero admittance on pair {a}-{b}"));
            }
        }
        if !reasons.is_empty() {
            return Err(Error::InvalidNetwork { reasons });
        }

        // Merge parallel lines and canonicalize to from < to.
        let mut merged: std::collections::BTreeMap<(usize, usize), Complex64> =
            std::collections::BTreeMap::new();
        for line in &lines {
            let (a, b) = (line.from.index(), line.to.index());
            let key = (a.min(b), a.max(b));
            *merged.entry(key).or_insert(Complex64::new(0.0, 0.0)) += line.y;
        }
        for (&(a, b), &y) in &merged {
            if y == Complex64::new(0.0, 0.0) {
                reasons.push(format!(
                    "pair {a}-{b}: parallel lines merge to zero admittance"
                ));
            }
        }
        if !reasons.is_empty() {
            return Err(Error::InvalidNetwork { reasons });
        }

        let lines: Vec<Line> = merged
            .into_iter()
            .map(|((a, b), y)| Line::new(a, b, y))
            .collect();
        let mut adj = vec![Vec::new(); n + 1];
        for line in &lines {
            let (a, b) = (line.from.index(), line.to.index());
            adj[a].push((b, line.y));
            adj[b].push((a, line.y));
        }
        Ok(Network { n, lines, adj })
    }

    /// Number of PQ buses (total bus count is n + 1).
    pub fn n(&self) -> usize {
        self.n
    }

    /// Lines in canonical order: sorted by (min bus, max bus).
    pub fn lines(&self) -> &[Line] {
        &self.lines
    }

    pub fn neighbors(&self, bus: usize) -> &[(usize, Complex64)] {
        &self.adj[bus]
    }

    /// Sum of admittances of lines incident to `bus`.
    pub fn degree_sum(&self, bus: usize) -> Complex64 {
        self.adj[bus]
            .iter()
            .map(|&(_, y)| y)
            .sum()
    }

    /// Admittance of the line between `a` and `b`, if present.
    pub fn line_admittance(&self, a: usize, b: usize) -> Option<Complex64> {
        self.adj[a].iter().find(|&&(k, _)| k == b).map(|&(_, y)| y)
    }

    /// Returns a copy with every line admittance mapped through `f`.
    /// Topology is preserved.
    pub fn map_admittances(&self, f: impl Fn(Complex64) -> Complex64) -> Result<Network> {
        let lines = self
            .lines
            .iter()
            .map(|l| Line { y: f(l.y), ..*l })
            .collect();
        Network::new(self.n, lines)
    }

    /// Bus admittance matrix over all n+1 buses (slack included):
    /// Y_ii = sum of incident admittances, Y_ik = -y_ik. Complex symmetric,
    /// not conjugated.
    pub fn admittance_matrix(&self) -> DMatrix<Complex64> {
        let m = self.n + 1;
        let mut y = DMatrix::zeros(m, m);
        for i in 0..m {
            y[(i, i)] = self.degree_sum(i);
            for &(k, yik) in &self.adj[i] {
                y[(i, k)] = -yik;
            }
        }
        y
    }

    fn component_count(&self) -> usize {
        let m = self.n + 1;
        let mut seen = vec![false; m];
        let mut components = 0;
        for start in 0..m {
            if seen[start] {
                continue;
            }
            components += 1;
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(i) = stack.pop() {
                for &(k, _) in &self.adj[i] {
                    if !seen[k] {
                        seen[k] = true;
                        stack.push(k);
                    }
                }
            }
        }
        components
    }

    /// Component labels of the PQ subgraph: buses 1..=n connected through
    /// lines that do not touch the slack. Entry i is the component id of
    /// bus i+1. H_c is block diagonal over these components, so several
    /// certificate arguments decompose along them.
    pub fn pq_components(&self) -> Vec<usize> {
        let mut label = vec![usize::MAX; self.n];
        let mut next = 0;
        for start in 1..=self.n {
            if label[start - 1] != usize::MAX {
                continue;
            }
            label[start - 1] = next;
            let mut stack = vec![start];
            while let Some(i) = stack.pop() {
                for &(k, _) in &self.adj[i] {
                    if k != SLACK.index() && label[k - 1] == usize::MAX {
                        label[k - 1] = next;
                        stack.push(k);
                    }
                }
            }
            next += 1;
        }
        label
    }
}

/// Wraps an angle to (-pi, pi].
pub fn wrap_angle(a: f64) -> f64 {
    let mut w = a % (2.0 * PI);
    if w <= -PI {
        w += 2.0 * PI;
    } else if w > PI {
        w -= 2.0 * PI;
    }
    w
}

/// Topology and admittance-phase classification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkClass {
    pub connected: bool,
    pub acyclic: bool,
    pub homogeneous: bool,
    /// Common admittance argument for homogeneous networks (taken from the
    /// first line in canonical order), None otherwise.
    pub homogeneity_angle: Option<f64>,
    pub purely_resistive: bool,
    pub all_resistive_lines: bool,
}

/// Classifies a network. `angle_tol` bounds the admissible spread of line
/// admittance arguments for the homogeneity flag.
pub fn classify(net: &Network, angle_tol: f64) -> NetworkClass {
    let components = net.component_count();
    let connected = components == 1;
    // Forest test: a graph is acyclic iff |E| = |V| - #components.
    let acyclic = net.lines().len() == net.n() + 1 - components;

    let mut homogeneous = true;
    let mut max_dev: f64 = 0.0;
    let base = net.lines().first().map(|l| l.y.arg());
    if let Some(base) = base {
        for line in net.lines() {
            let dev = wrap_angle(line.y.arg() - base).abs();
            max_dev = max_dev.max(dev);
        }
        homogeneous = max_dev <= angle_tol;
    }
    let all_resistive_lines = net.lines().iter().all(|l| l.y.re > 0.0);
    let homogeneity_angle = if homogeneous { base } else { None };
    let purely_resistive = homogeneous
        && homogeneity_angle.map(|a| a.abs() <= angle_tol).unwrap_or(false)
        && all_resistive_lines;
    NetworkClass {
        connected,
        acyclic,
        homogeneous,
        homogeneity_angle,
        purely_resistive,
        all_resistive_lines,
    }
}

/// Maximum deviation of line admittance arguments from the first line's
/// argument, in radians.
pub fn homogeneity_deviation(net: &Network) -> f64 {
    let base = match net.lines().first() {
        Some(l) => l.y.arg(),
        None => return 0.0,
    };
    net.lines()
        .iter()
        .map(|l| wrap_angle(l.y.arg() - base).abs())
        .fold(0.0, f64::max)
}

/// Rotates all admittances of a homogeneous network to the real axis:
/// y_ik -> e^{-j phi} y_ik with phi the common argument. Returns the
/// transformed network and phi. Callers map powers and direction
/// coefficients forward by S_i -> e^{j phi} S_i, C_i -> e^{j phi} C_i;
/// power-flow residuals and functional values are invariant under the
/// combined change.
pub fn gauge_transform(net: &Network, angle_tol: f64) -> Result<(Network, f64)> {
    let dev = homogeneity_deviation(net);
    if dev > angle_tol {
        return Err(Error::Invalid(format!(
            "gauge transform requires a homogeneous network: max admittance \
             argument deviation {dev:.3e} exceeds angle tolerance {angle_tol:.3e}"
        )));
    }
    let phi = net.lines().first().map(|l| l.y.arg()).unwrap_or(0.0);
    if phi == 0.0 {
        return Ok((net.clone(), 0.0)); // already resistive: exact identity
    }
    let rot = Complex64::from_polar(1.0, -phi);
    let transformed = net.map_admittances(|y| rot * y)?;
    Ok((transformed, phi))
}
