//! The quadratic power-flow map and its certificate matrices.
//!
//! With slack voltage V_0 = 1 and PQ voltages V in C^n, the injected complex
//! power at bus i is
//!
//! ```text
//! S_i = V_i * sum_{k ~ i} conj(y_ik) * conj(V_i - V_k)
//! ```
//!
//! A linear functional c.p over stacked real injections p = (P, Q) is encoded
//! by complex coefficients C_i = c_i + j*c_{n+i}, so c.p = sum Re(conj(C_i) S_i).
//! The same functional is the quadratic form
//!
//! ```text
//! c.p = V^H H_c V - V^H J_c - J_c^H V
//! ```
//!
//! with the Hermitian certificate matrix H_c and slack vector J_c built here.

use crate::error::{Error, Result};
use crate::network::Network;
use crate::tolerances::{NEWTON_MAX_ITER, NEWTON_TOL};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// PQ-bus voltages; index i holds bus i+1. Slack is implicit at 1.
#[derive(Debug, Clone, PartialEq)]
pub struct VoltageProfile(pub DVector<Complex64>);

impl VoltageProfile {
    pub fn flat(n: usize) -> Self {
        VoltageProfile(DVector::from_element(n, Complex64::new(1.0, 0.0)))
    }

    pub fn from_slice(v: &[Complex64]) -> Self {
        VoltageProfile(DVector::from_column_slice(v))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

/// Complex injections S_i at PQ buses; P_i = Re S_i, Q_i = Im S_i.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerInjection(pub DVector<Complex64>);

impl PowerInjection {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn total_p(&self) -> f64 {
        self.0.iter().map(|s| s.re).sum()
    }

    pub fn total_q(&self) -> f64 {
        self.0.iter().map(|s| s.im).sum()
    }

    /// Stacked real coordinates (P_1..P_n, Q_1..Q_n).
    pub fn stacked_real(&self) -> Vec<f64> {
        let n = self.0.len();
        let mut out = Vec::with_capacity(2 * n);
        out.extend(self.0.iter().map(|s| s.re));
        out.extend(self.0.iter().map(|s| s.im));
        out
    }

    pub fn from_stacked_real(p: &[f64]) -> Result<Self> {
        if p.len() % 2 != 0 {
            return Err(Error::Dimension(format!(
                "stacked injection vector has odd length {}",
                p.len()
            )));
        }
        let n = p.len() / 2;
        Ok(PowerInjection(DVector::from_iterator(
            n,
            (0..n).map(|i| Complex64::new(p[i], p[n + i])),
        )))
    }
}

/// Linear functional coefficients C_i = c_i + j*c_{n+i}.
#[derive(Debug, Clone, PartialEq)]
pub struct Direction(pub DVector<Complex64>);

impl Direction {
    /// The distinguished direction c_+ with C_i = 1 for every bus: the
    /// functional is total real power sum(P_i).
    pub fn cplus(n: usize) -> Self {
        Direction(DVector::from_element(n, Complex64::new(1.0, 0.0)))
    }

    pub fn from_slice(c: &[Complex64]) -> Self {
        Direction(DVector::from_column_slice(c))
    }

    pub fn from_stacked_real(c: &[f64]) -> Result<Self> {
        if c.len() % 2 != 0 {
            return Err(Error::Dimension(format!(
                "stacked direction vector has odd length {}",
                c.len()
            )));
        }
        let n = c.len() / 2;
        Ok(Direction(DVector::from_iterator(
            n,
            (0..n).map(|i| Complex64::new(c[i], c[n + i])),
        )))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn stacked_real(&self) -> Vec<f64> {
        let n = self.0.len();
        let mut out = Vec::with_capacity(2 * n);
        out.extend(self.0.iter().map(|c| c.re));
        out.extend(self.0.iter().map(|c| c.im));
        out
    }

    /// Euclidean norm of the stacked real coefficient vector (equals the
    /// complex 2-norm of the C_i).
    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn normalized(&self) -> Direction {
        let n = self.norm();
        if n == 0.0 {
            return self.clone();
        }
        Direction(&self.0 / Complex64::new(n, 0.0))
    }

    pub fn is_real(&self, tol: f64) -> bool {
        let scale = self.0.iter().map(|c| c.norm()).fold(0.0, f64::max).max(1e-300);
        self.0.iter().all(|c| c.im.abs() <= tol * scale)
    }

    /// c . p = sum Re(conj(C_i) S_i).
    pub fn dot(&self, p: &PowerInjection) -> f64 {
        self.0
            .iter()
            .zip(p.0.iter())
            .map(|(c, s)| (c.conj() * s).re)
            .sum()
    }

    /// Cosine of the angle between two directions as stacked real vectors.
    pub fn alignment(&self, other: &Direction) -> f64 {
        let num: f64 = self
            .0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| a.re * b.re + a.im * b.im)
            .sum();
        num / (self.norm() * other.norm()).max(1e-300)
    }
}

/// Precomputed reduced admittance data for repeated power-flow evaluation.
pub(crate) struct PowerFlowEngine {
    pub n: usize,
    pub y_ll: DMatrix<Complex64>,
    /// Column Y[1.., 0] of the full admittance matrix (equals -y_i0).
    pub y_l0: DVector<Complex64>,
}

impl PowerFlowEngine {
    pub fn new(net: &Network) -> Self {
        let y = net.admittance_matrix();
        let n = net.n();
        let y_ll = y.view((1, 1), (n, n)).into_owned();
        let y_l0 = y.view((1, 0), (n, 1)).column(0).into_owned();
        PowerFlowEngine { n, y_ll, y_l0 }
    }

    /// Branch currents aggregated per bus: I_i = sum_{k~i} y_ik (V_i - V_k).
    pub fn currents(&self, v: &DVector<Complex64>) -> DVector<Complex64> {
        &self.y_ll * v + &self.y_l0
    }

    pub fn eval(&self, v: &DVector<Complex64>) -> DVector<Complex64> {
        let i = self.currents(v);
        v.zip_map(&i, |vi, ii| vi * ii.conj())
    }
}

/// Evaluates the power-flow map S(V) on the PQ buses.
pub fn power_flow(net: &Network, v: &VoltageProfile) -> Result<PowerInjection> {
    if v.dim() != net.n() {
        return Err(Error::Dimension(format!(
            "voltage profile has {} entries, network has {} PQ buses",
            v.dim(),
            net.n()
        )));
    }
    let engine = PowerFlowEngine::new(net);
    Ok(PowerInjection(engine.eval(&v.0)))
}

/// c . p evaluated through the power-flow map (the "physics route" used to
/// cross-check the matrix form V^H H V - 2 Re(J^H V)).
pub fn functional_value(net: &Network, v: &VoltageProfile, c: &Direction) -> Result<f64> {
    if c.dim() != net.n() {
        return Err(Error::Dimension(format!(
            "direction has {} entries, network has {} PQ buses",
            c.dim(),
            net.n()
        )));
    }
    Ok(c.dot(&power_flow(net, v)?))
}

/// Certificate matrices for a direction c: the Hermitian n x n matrix H_c,
/// the slack coupling vector J_c, and the bordered (n+1) x (n+1) Hermitian
/// matrix A(a, c) = [[a, -J^H], [-J, H]].
#[derive(Debug, Clone, PartialEq)]
pub struct CertificateMatrices {
    pub h: DMatrix<Complex64>,
    pub j: DVector<Complex64>,
    pub a: f64,
    pub bordered: DMatrix<Complex64>,
}

impl CertificateMatrices {
    /// The quadratic form V^H H V - 2 Re(J^H V); equals c . p(V) for every V.
    pub fn quadratic_form(&self, v: &DVector<Complex64>) -> f64 {
        let vhv = (v.adjoint() * &self.h * v)[(0, 0)].re;
        let jv = self.j.dotc(v).re;
        vhv - 2.0 * jv
    }
}

/// Builds H_c, J_c and the bordered matrix A(a, c):
///
/// * (H_c)_ii = Re(C_i * sum_{l~i} y_il)
/// * (H_c)_ik = -(C_i y_ik + conj(C_k) conj(y_ik)) / 2 for lines i~k, else 0
/// * (J_c)_i  = C_i y_i0 / 2 for buses adjacent to the slack, else 0
pub fn build_certificates(net: &Network, c: &Direction, a: f64) -> Result<CertificateMatrices> {
    let n = net.n();
    if c.dim() != n {
        return Err(Error::Dimension(format!(
            "direction has {} entries, network has {} PQ buses",
            c.dim(),
            n
        )));
    }
    let mut h = DMatrix::zeros(n, n);
    for i in 1..=n {
        h[(i - 1, i - 1)] = Complex64::new((c.0[i - 1] * net.degree_sum(i)).re, 0.0);
    }
    for line in net.lines() {
        let (p, q) = (line.from.index(), line.to.index());
        if p == 0 || q == 0 {
            continue;
        }
        let (i, k) = (p - 1, q - 1);
        let hidden = -(c.0[i] * line.y + (c.0[k] * line.y).conj()) * 0.5;
        h[(i, k)] = hidden;
        h[(k, i)] = hidden.conj();
    }
    let mut j = DVector::zeros(n);
    for &(k, y) in net.neighbors(0) {
        j[k - 1] = c.0[k - 1] * y * 0.5;
    }

    let mut bordered = DMatrix::zeros(n + 1, n + 1);
    bordered[(0, 0)] = Complex64::new(a, 0.0);
    for i in 0..n {
        bordered[(0, i + 1)] = -j[i].conj();
        bordered[(i + 1, 0)] = -j[i];
    }
    bordered.view_mut((1, 1), (n, n)).copy_from(&h);

    Ok(CertificateMatrices { h, j, a, bordered })
}

/// The c_+ direction together with its certificates (a = 0). H_+ is the real
/// grounded conductance Laplacian of the PQ subgraph.
pub fn cplus_direction(net: &Network) -> (Direction, CertificateMatrices) {
    let c = Direction::cplus(net.n());
    let certs = build_certificates(net, &c, 0.0).expect("c_+ always matches the network size");
    (c, certs)
}

#[derive(Debug, Clone)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Multi-start radii around the flat start.
    pub radii: Vec<f64>,
    pub starts_per_radius: usize,
    pub seed: u64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            tol: NEWTON_TOL,
            max_iter: NEWTON_MAX_ITER,
            radii: vec![0.2, 0.5, 1.0],
            starts_per_radius: 3,
            seed: 0,
        }
    }
}

/// Outcome of a feasibility probe. Newton failure is never evidence of
/// infeasibility, so there is no `Infeasible` variant by construction.
#[derive(Debug, Clone)]
pub enum NewtonOutcome {
    Solved {
        voltage: VoltageProfile,
        iterations: usize,
        residual: f64,
    },
    Inconclusive {
        attempts: usize,
        best_residual: f64,
    },
}

impl NewtonOutcome {
    pub fn is_solved(&self) -> bool {
        matches!(self, NewtonOutcome::Solved { .. })
    }
}

/// Newton-Raphson in rectangular voltage coordinates with the full 2n x 2n
/// real Jacobian. Starts from the flat profile, then retries from randomized
/// profiles 1 + r*u at increasing radii.
pub fn newton_feasibility(
    net: &Network,
    target: &PowerInjection,
    opts: &NewtonOptions,
) -> Result<NewtonOutcome> {
    let n = net.n();
    if target.dim() != n {
        return Err(Error::Dimension(format!(
            "target injection has {} entries, network has {} PQ buses",
            target.dim(),
            n
        )));
    }
    let engine = PowerFlowEngine::new(net);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut starts = vec![DVector::from_element(n, Complex64::new(1.0, 0.0))];
    for &radius in &opts.radii {
        for _ in 0..opts.starts_per_radius {
            // Gaussian direction, normalized to the requested radius.
            let mut u = DVector::from_element(n, Complex64::new(0.0, 0.0));
            for x in u.iter_mut() {
                *x = Complex64::new(gauss(&mut rng), gauss(&mut rng));
            }
            let norm = u.norm();
            if norm > 0.0 {
                u /= Complex64::new(norm / radius, 0.0);
            }
            starts.push(DVector::from_element(n, Complex64::new(1.0, 0.0)) + u);
        }
    }

    let mut best_residual = f64::INFINITY;
    let mut attempts = 0;
    for start in starts {
        attempts += 1;
        match newton_single(&engine, &target.0, start, opts) {
            SingleOutcome::Converged(v, iters, resid) => {
                return Ok(NewtonOutcome::Solved {
                    voltage: VoltageProfile(v),
                    iterations: iters,
                    residual: resid,
                });
            }
            SingleOutcome::Stalled(resid) => best_residual = best_residual.min(resid),
        }
    }
    Ok(NewtonOutcome::Inconclusive {
        attempts,
        best_residual,
    })
}

fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller; avoids pulling in a distributions crate for one call site.
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    (-2.0 * u1.ln()).sqrt() * u2.cos()
}

enum SingleOutcome {
    Converged(DVector<Complex64>, usize, f64),
    Stalled(f64),
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{gauge_transform, Line, Network};
    use crate::testutil::{
        c, random_connected_net, random_direction, random_homogeneous_tree, random_voltage,
        three_bus_chain, two_bus,
    };
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn flat_profile_injects_nothing() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let net = random_connected_net(&mut rng, 6, true);
            let s = power_flow(&net, &VoltageProfile::flat(net.n())).unwrap();
            assert!(s.0.norm() < 1e-14);
        }
    }

    #[test]
    fn two_bus_matches_closed_form() {
        // S_1 = v * conj(y) * conj(v - 1)
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let y = c(rng.gen_range(0.1..3.0), rng.gen_range(-2.0..2.0));
            let v = c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let net = two_bus(y);
            let s = power_flow(&net, &VoltageProfile::from_slice(&[v])).unwrap();
            let expected = v * y.conj() * (v - c(1.0, 0.0)).conj();
            assert!((s.0[0] - expected).norm() < 1e-13);
        }
    }

    #[test]
    fn three_bus_resistive_supporting_profile() {
        // Chain 0--1--2 with unit admittances at V = (1/2, 1/2).
        let net = three_bus_chain(c(1.0, 0.0));
        let v = VoltageProfile::from_slice(&[c(0.5, 0.0), c(0.5, 0.0)]);
        let s = power_flow(&net, &v).unwrap();
        assert!((s.0[0] - c(-0.25, 0.0)).norm() < 1e-15);
        assert!((s.0[1] - c(0.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn functional_reduces_to_power_sums() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let net = random_connected_net(&mut rng, 5, true);
            let v = random_voltage(&mut rng, net.n(), 0.8);
            let s = power_flow(&net, &v).unwrap();
            let cplus = Direction::cplus(net.n());
            assert!((cplus.dot(&s) - s.total_p()).abs() < 1e-12);
            let cq = Direction(DVector::from_element(net.n(), c(0.0, 1.0)));
            assert!((cq.dot(&s) - s.total_q()).abs() < 1e-12);
        }
    }

    #[test]
    fn functional_equals_matrix_form() {
        // c.p(V) computed through the power-flow map must match
        // V^H H V - 2 Re(J^H V) to 1e-10 relative on random instances.
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..1000 {
            let net = random_connected_net(&mut rng, 6, true);
            let v = random_voltage(&mut rng, net.n(), 1.0);
            let dir = random_direction(&mut rng, net.n(), false);
            let physics = functional_value(&net, &v, &dir).unwrap();
            let certs = build_certificates(&net, &dir, 0.0).unwrap();
            let matrix = certs.quadratic_form(&v.0);
            let scale = physics.abs().max(matrix.abs()).max(1.0);
            assert!(
                (physics - matrix).abs() <= 1e-10 * scale,
                "physics {physics} vs matrix {matrix}"
            );
        }
    }

    #[test]
    fn three_bus_certificates_match_closed_form() {
        // H_c = [[Re(C1 y + C1), -(C1 + conj(C2))/2], [conj, Re C2]],
        // J_c = (C1 y / 2, 0) for the chain with y_12 = 1.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let y = c(rng.gen_range(0.1..2.0), rng.gen_range(-2.0..2.0));
            let net = three_bus_chain(y);
            let dir = random_direction(&mut rng, 2, false);
            let (c1, c2) = (dir.0[0], dir.0[1]);
            let certs = build_certificates(&net, &dir, 0.0).unwrap();
            assert!((certs.h[(0, 0)] - c((c1 * y + c1).re, 0.0)).norm() < 1e-14);
            assert!((certs.h[(1, 1)] - c(c2.re, 0.0)).norm() < 1e-14);
            let off = -(c1 + c2.conj()) * 0.5;
            assert!((certs.h[(0, 1)] - off).norm() < 1e-14);
            assert!((certs.h[(1, 0)] - off.conj()).norm() < 1e-14);
            assert!((certs.j[0] - c1 * y * 0.5).norm() < 1e-14);
            assert!(certs.j[1].norm() == 0.0);
        }
    }

    #[test]
    fn certificates_are_hermitian_and_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..200 {
            let net = random_connected_net(&mut rng, 6, true);
            let d1 = random_direction(&mut rng, net.n(), false);
            let d2 = random_direction(&mut rng, net.n(), false);
            let c1 = build_certificates(&net, &d1, 0.0).unwrap();
            let c2 = build_certificates(&net, &d2, 0.0).unwrap();
            assert_eq!(c1.h.adjoint(), c1.h, "exactly Hermitian by construction");
            assert_eq!(
                c1.bordered.adjoint(),
                c1.bordered,
                "bordered matrix Hermitian"
            );
            let sum_dir = Direction(&d1.0 + &d2.0);
            let cs = build_certificates(&net, &sum_dir, 0.0).unwrap();
            assert!(((&c1.h + &c2.h) - &cs.h).norm() < 1e-12 * cs.h.norm().max(1.0));
            assert!(((&c1.j + &c2.j) - &cs.j).norm() < 1e-12 * cs.j.norm().max(1.0));
        }
    }

    #[test]
    fn real_direction_on_resistive_net_gives_real_h() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let net =
                crate::testutil::random_connected_net_sized(&mut rng, 5, true, true);
            let dir = random_direction(&mut rng, net.n(), true);
            let certs = build_certificates(&net, &dir, 0.0).unwrap();
            assert!(certs.h.iter().all(|e| e.im == 0.0));
        }
    }

    #[test]
    fn certificates_are_gauge_covariant() {
        // Rotating the direction with the gauge angle reproduces the original
        // matrices entrywise: H'_{e^{j phi} C} == H_C, J' == J.
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..100 {
            let (net, phi) = random_homogeneous_tree(&mut rng, 2, 6);
            let (resistive, phi2) = gauge_transform(&net, 1e-9).unwrap();
            assert!((phi - phi2).abs() < 1e-12);
            let dir = random_direction(&mut rng, net.n(), false);
            let rot = Complex64::from_polar(1.0, phi2);
            let rotated = Direction(dir.0.map(|x| rot * x));
            let orig = build_certificates(&net, &dir, 0.0).unwrap();
            let transformed = build_certificates(&resistive, &rotated, 0.0).unwrap();
            assert!(
                (&orig.h - &transformed.h).norm() <= 1e-12 * orig.h.norm().max(1.0),
                "H covariance"
            );
            assert!(
                (&orig.j - &transformed.j).norm() <= 1e-12 * orig.j.norm().max(1.0),
                "J covariance"
            );
        }
    }

    #[test]
    fn power_images_rotate_forward_under_gauge() {
        // Oracle for the gauge sign convention: on the transformed network
        // S'(V) = e^{+j phi} S(V) for every V (voltages untouched).
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let (net, _) = random_homogeneous_tree(&mut rng, 2, 6);
            let (resistive, phi) = gauge_transform(&net, 1e-9).unwrap();
            let v = random_voltage(&mut rng, net.n(), 1.0);
            let s_orig = power_flow(&net, &v).unwrap();
            let s_tran = power_flow(&resistive, &v).unwrap();
            let rot = Complex64::from_polar(1.0, phi);
            let rotated = PowerInjection(s_orig.0.map(|s| rot * s));
            let scale = s_tran.0.norm().max(1.0);
            assert!(
                (&s_tran.0 - &rotated.0).norm() <= 1e-12 * scale,
                "transformed power must equal e^{{+j phi}} times original"
            );
        }
    }

    #[test]
    fn hplus_satisfies_edge_sum_identity() {
        // V^H H_+ V = sum_{lines i~k, both PQ} Re(y)|V_i - V_k|^2
        //           + sum_{i~0} Re(y_i0) |V_i|^2
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..200 {
            let net = random_connected_net(&mut rng, 6, true);
            let v = random_voltage(&mut rng, net.n(), 1.0);
            let (_, certs) = cplus_direction(&net);
            let form = (v.0.adjoint() * &certs.h * &v.0)[(0, 0)].re;
            let mut edge_sum = 0.0;
            for line in net.lines() {
                let (a, b) = (line.from.index(), line.to.index());
                if a == 0 {
                    edge_sum += line.y.re * v.0[b - 1].norm_sqr();
                } else {
                    edge_sum += line.y.re * (v.0[a - 1] - v.0[b - 1]).norm_sqr();
                }
            }
            assert!(
                (form - edge_sum).abs() <= 1e-11 * form.abs().max(1.0),
                "form {form} vs edge sum {edge_sum}"
            );
        }
    }

    #[test]
    fn hplus_positive_definite_on_connected_resistive_nets() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let net = random_connected_net(&mut rng, 6, true);
            let (_, certs) = cplus_direction(&net);
            let min = crate::linalg::min_eigenvalue(&certs.h);
            assert!(min > 1e-12, "H_+ must be PD, got min eigenvalue {min}");
        }
    }

    #[test]
    fn bordered_matrix_structure() {
        let net = three_bus_chain(c(1.0, 1.0));
        let dir = Direction::from_slice(&[c(0.0, -1.0), c(0.0, -1.0)]);
        let certs = build_certificates(&net, &dir, 0.5).unwrap();
        let a = &certs.bordered;
        assert_eq!(a.nrows(), 3);
        assert_eq!(a[(0, 0)], c(0.5, 0.0));
        for i in 0..2 {
            assert_eq!(a[(i + 1, 0)], -certs.j[i]);
            assert_eq!(a[(0, i + 1)], -certs.j[i].conj());
            for k in 0..2 {
                assert_eq!(a[(i + 1, k + 1)], certs.h[(i, k)]);
            }
        }
    }

    #[test]
    fn newton_zero_target_converges_at_flat_start() {
        let net = three_bus_chain(c(1.0, 1.0));
        let target = PowerInjection(DVector::from_element(2, c(0.0, 0.0)));
        match newton_feasibility(&net, &target, &NewtonOptions::default()).unwrap() {
            NewtonOutcome::Solved {
                voltage,
                iterations,
                ..
            } => {
                assert_eq!(iterations, 0, "flat start already solves S = 0");
                assert!((voltage.0 - DVector::from_element(2, c(1.0, 0.0))).norm() < 1e-12);
            }
            NewtonOutcome::Inconclusive { .. } => panic!("zero target must be feasible"),
        }
    }

    #[test]
    fn newton_round_trips_random_profiles() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for trial in 0..50 {
            let net = random_connected_net(&mut rng, 5, true);
            let v_true = random_voltage(&mut rng, net.n(), 0.3);
            let target = power_flow(&net, &v_true).unwrap();
            let opts = NewtonOptions {
                seed: trial,
                ..NewtonOptions::default()
            };
            match newton_feasibility(&net, &target, &opts).unwrap() {
                NewtonOutcome::Solved { voltage, .. } => {
                    let s = power_flow(&net, &voltage).unwrap();
                    assert!(
                        (&s.0 - &target.0).norm() <= 1e-7,
                        "recovered injection must match target"
                    );
                }
                NewtonOutcome::Inconclusive { best_residual, .. } => {
                    panic!("trial {trial}: feasible target not found, best {best_residual}")
                }
            }
        }
    }

    #[test]
    fn newton_is_inconclusive_below_pmin() {
        // For the 3-bus chain with y = 1 + j, total real power is bounded
        // below by P_min = -1/2; targets below that are infeasible and every
        // start must come back inconclusive.
        let net = three_bus_chain(c(1.0, 1.0));
        let target = PowerInjection(DVector::from_column_slice(&[c(-0.3, 0.0), c(-0.3, 0.0)]));
        match newton_feasibility(&net, &target, &NewtonOptions::default()).unwrap() {
            NewtonOutcome::Solved { voltage, .. } => {
                panic!("infeasible target reported solved at {:?}", voltage)
            }
            NewtonOutcome::Inconclusive { attempts, .. } => assert_eq!(attempts, 10),
        }
    }

    #[test]
    fn dimension_mismatches_are_rejected() {
        let net = three_bus_chain(c(1.0, 0.0));
        let v = VoltageProfile::flat(3);
        assert!(power_flow(&net, &v).is_err());
        let d = Direction::cplus(4);
        assert!(build_certificates(&net, &d, 0.0).is_err());
        let t = PowerInjection(DVector::from_element(1, c(0.0, 0.0)));
        assert!(newton_feasibility(&net, &t, &NewtonOptions::default()).is_err());
    }

    #[test]
    fn stacked_real_round_trip() {
        let dir = Direction::from_slice(&[c(1.0, 2.0), c(-0.5, 0.25)]);
        let stacked = dir.stacked_real();
        assert_eq!(stacked, vec![1.0, -0.5, 2.0, 0.25]);
        let back = Direction::from_stacked_real(&stacked).unwrap();
        assert_eq!(back, dir);
        assert!((dir.norm() - (1.0f64 + 4.0 + 0.25 + 0.0625).sqrt()).abs() < 1e-15);
        let inj = PowerInjection(DVector::from_column_slice(&[c(0.5, -1.0), c(2.0, 3.0)]));
        let back = PowerInjection::from_stacked_real(&inj.stacked_real()).unwrap();
        assert_eq!(back, inj);
    }
}

fn newton_single(
    engine: &PowerFlowEngine,
    target: &DVector<Complex64>,
    mut v: DVector<Complex64>,
    opts: &NewtonOptions,
) -> SingleOutcome {
    let n = engine.n;
    let mut best = f64::INFINITY;
    for iter in 0..=opts.max_iter {
        let s = engine.eval(&v);
        let mismatch = &s - target;
        let resid = mismatch.norm();
        best = best.min(resid);
        if resid <= opts.tol {
            return SingleOutcome::Converged(v, iter, resid);
        }
        if iter == opts.max_iter {
            break;
        }
        // dS = A dV + B conj(dV) with A = diag(conj I), B = diag(V) conj(Y_LL).
        let currents = engine.currents(&v);
        let mut jac = DMatrix::<f64>::zeros(2 * n, 2 * n);
        for r in 0..n {
            for cidx in 0..n {
                let a = if r == cidx {
                    currents[r].conj()
                } else {
                    Complex64::new(0.0, 0.0)
                };
                let b = v[r] * engine.y_ll[(r, cidx)].conj();
                let plus = a + b;
                let minus = a - b;
                jac[(r, cidx)] = plus.re;
                jac[(r, n + cidx)] = -minus.im;
                jac[(n + r, cidx)] = plus.im;
                jac[(n + r, n + cidx)] = minus.re;
            }
        }
        let mut rhs = DVector::<f64>::zeros(2 * n);
        for r in 0..n {
            rhs[r] = -mismatch[r].re;
            rhs[n + r] = -mismatch[r].im;
        }
        let step = match jac.lu().solve(&rhs) {
            Some(step) => step,
            None => return SingleOutcome::Stalled(best), // singular Jacobian
        };
        if !step.iter().all(|x| x.is_finite()) {
            return SingleOutcome::Stalled(best);
        }
        for i in 0..n {
            v[i] += Complex64::new(step[i], step[n + i]);
        }
    }
    SingleOutcome::Stalled(best)
}
