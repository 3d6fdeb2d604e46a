//! Boundary exploration: supporting points of the solvability set, forward
//! image clouds, 2-D slice convexity measurements, and the inner convex
//! band [P_min, P_max] assembled from flat-edge witnesses.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certificates::{sample_psd_cone, FlatEdgeWitness, ProbeReport};
use crate::error::{Error, Result};
use crate::geometry::{
    alpha_shape_area, convex_hull, dedup_points, detect_flat_segment, median_nn_distance,
    polygon_area, FlatSegment, ALPHA_NN_FACTOR,
};
use crate::linalg;
use crate::network::Network;
use crate::quadratic::{
    build_certificates, cplus_direction, functional_value, power_flow, Direction,
    PowerFlowEngine, PowerInjection, VoltageProfile,
};
use crate::tolerances::Tolerances;

/// A point of the solvability set lying on one of its supporting
/// hyperplanes: `c . p >= support_value` holds for every feasible p, with
/// equality at `injection`.
#[derive(Debug, Clone)]
pub struct BoundaryPoint {
    pub direction: Direction,
    pub voltage: VoltageProfile,
    pub injection: PowerInjection,
    /// Minimum of c.p over the whole solvability set.
    pub support_value: f64,
}

/// Minimizes c.p over voltage space for a direction strictly inside the PSD
/// cone. The minimizer solves H_c V = J_c, so the support value and the
/// touching injection come out of one positive-definite solve. Scaling c by
/// a positive factor scales the support value and leaves the voltage alone.
pub fn supporting_point(net: &Network, c: &Direction, tols: &Tolerances) -> Result<BoundaryPoint> {
    let certs = build_certificates(net, c, 0.0)?;
    let (min_eig, h_norm) = linalg::eigen_extremes(&certs.h);
    if min_eig <= tols.psd * h_norm.max(f64::MIN_POSITIVE) {
        return Err(Error::Invalid(format!(
            "H_c is singular or indefinite (min eigenvalue {min_eig:.3e}, norm {h_norm:.3e}); \
             the direction sits on the cone boundary, so the minimum is attained on an affine \
             set rather than a point — use find_flat_edge instead"
        )));
    }
    let v = linalg::solve_hpd(&certs.h, &certs.j).ok_or_else(|| {
        Error::Invalid(format!(
            "Cholesky failed on H_c despite min eigenvalue {min_eig:.3e}"
        ))
    })?;
    let voltage = VoltageProfile(v);
    let support_value = functional_value(net, &voltage, c)?;
    let injection = power_flow(net, &voltage)?;
    Ok(BoundaryPoint {
        direction: c.clone(),
        voltage,
        injection,
        support_value,
    })
}

/// Supporting points for `count` directions spread over the PSD cone. Cone
/// samples land on the cone boundary most of the time, where `supporting_point`
/// is undefined; those directions are pulled strictly inside by blending
/// toward c_+ (the blend stays positive definite because H is linear in c).
pub fn sample_boundary(
    net: &Network,
    count: usize,
    seed: u64,
    tols: &Tolerances,
) -> Result<Vec<BoundaryPoint>> {
    let cone = sample_psd_cone(net, false, count, seed, tols)?;
    let cplus_hat = cplus_direction(net).0.normalized();
    let points: Vec<Option<BoundaryPoint>> = cone
        .into_par_iter()
        .map(|sample| {
            let dir = if sample.boundary {
                Direction(
                    &cplus_hat.0 * Complex64::new(0.2, 0.0)
                        + &sample.direction.0 * Complex64::new(0.8, 0.0),
                )
                .normalized()
            } else {
                sample.direction
            };
            supporting_point(net, &dir, tols).ok()
        })
        .collect();
    Ok(points.into_iter().flatten().collect())
}

/// How to sample voltage space when building a forward-image cloud.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CloudSpec {
    /// Regular grid with `per_axis` levels on each of the 2n real voltage
    /// coordinates. Limited to small networks.
    Grid { per_axis: usize },
    /// Uniform random draws over the box.
    Random { count: usize },
}

const GRID_MAX_EVALS: u128 = 10_000_000;
const GRID_MAX_BUSES: usize = 4;

/// Evaluates the power-flow map over voltages drawn from `bounds^(2n)`
/// (rectangular coordinates, `(lo, hi)` per axis) and returns the resulting
/// injections. Every returned point is feasible by construction. Random
/// draws are reproducible per index regardless of thread scheduling.
pub fn image_cloud(
    net: &Network,
    spec: &CloudSpec,
    bounds: (f64, f64),
    seed: u64,
) -> Result<Vec<PowerInjection>> {
    let (lo, hi) = bounds;
    if !lo.is_finite() || !hi.is_finite() || lo >= hi {
        return Err(Error::Invalid(format!(
            "voltage box ({lo}, {hi}) must be a finite nonempty interval"
        )));
    }
    let n = net.n();
    let engine = PowerFlowEngine::new(net);
    match *spec {
        CloudSpec::Grid { per_axis } => {
            if n > GRID_MAX_BUSES {
                return Err(Error::Invalid(format!(
                    "grid mode covers at most {GRID_MAX_BUSES} PQ buses \
                     ({} real dimensions); this network has {n}",
                    2 * GRID_MAX_BUSES
                )));
            }
            if per_axis < 2 {
                return Err(Error::Invalid(
                    "grid needs at least 2 levels per axis".to_string(),
                ));
            }
            let total = (per_axis as u128)
                .checked_pow(2 * n as u32)
                .filter(|&t| t <= GRID_MAX_EVALS)
                .ok_or_else(|| {
                    Error::Invalid(format!(
                        "grid of {per_axis}^{} points exceeds the {GRID_MAX_EVALS} evaluation cap",
                        2 * n
                    ))
                })? as usize;
            let step = (hi - lo) / (per_axis - 1) as f64;
            let cloud = (0..total)
                .into_par_iter()
                .map(|idx| {
                    let mut digits = idx;
                    let mut coords = vec![0.0f64; 2 * n];
                    for c in coords.iter_mut() {
                        *c = lo + step * (digits % per_axis) as f64;
                        digits /= per_axis;
                    }
                    let v = nalgebra::DVector::from_fn(n, |i, _| {
                        Complex64::new(coords[i], coords[n + i])
                    });
                    PowerInjection(engine.eval(&v))
                })
                .collect();
            Ok(cloud)
        }
        CloudSpec::Random { count } => {
            let cloud = (0..count)
                .into_par_iter()
                .map(|idx| {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(idx as u64);
                    let v = nalgebra::DVector::from_fn(n, |_, _| {
                        Complex64::new(rng.gen_range(lo..hi), rng.gen_range(lo..hi))
                    });
                    PowerInjection(engine.eval(&v))
                })
                .collect();
            Ok(cloud)
        }
    }
}

/// Forward-image points with total active power drawn uniformly from
/// `band`. In stacked real voltage coordinates the level set
/// `c_+ . p = L` is exactly the ellipsoid
/// `(x - x_c)^T H (x - x_c) = L - p_min` around the supporting voltage
/// x_c, so sampling the unit sphere and mapping through H^(-1/2) lands on
/// the requested level to machine precision. This fills thin slabs at any
/// density, where a box sampler would waste almost all of its draws
/// outside the slab. Levels below p_min are clipped away; the band must
/// reach above p_min.
pub fn level_band_cloud(
    net: &Network,
    band: (f64, f64),
    count: usize,
    seed: u64,
    tols: &Tolerances,
) -> Result<Vec<PowerInjection>> {
    let (lo_req, hi) = band;
    if !lo_req.is_finite() || !hi.is_finite() || lo_req > hi {
        return Err(Error::Invalid(format!(
            "level band ({lo_req}, {hi}) must be a finite interval"
        )));
    }
    let n = net.n();
    let (cplus, certs) = cplus_direction(net);
    let base = supporting_point(net, &cplus, tols)?;
    let p_min = base.support_value;
    if hi <= p_min {
        return Err(Error::Invalid(format!(
            "level band tops out at {hi}, below the global minimum {p_min:.6} of c_+ . p"
        )));
    }
    let lo = lo_req.max(p_min);

    // Real 2n x 2n representation of the Hermitian H_+ and its inverse
    // square root.
    let h = &certs.h;
    let hr = nalgebra::DMatrix::<f64>::from_fn(2 * n, 2 * n, |r, c| {
        let (i, k) = (r % n, c % n);
        match (r >= n, c >= n) {
            (false, false) | (true, true) => h[(i, k)].re,
            (false, true) => -h[(i, k)].im,
            (true, false) => h[(i, k)].im,
        }
    });
    let eig = hr.symmetric_eigen();
    if eig.eigenvalues.iter().any(|&l| l <= 0.0) {
        return Err(Error::Invalid(
            "H_+ is not positive definite; epsilon-regularize purely reactive lines first"
                .to_string(),
        ));
    }
    let scaled = nalgebra::DMatrix::<f64>::from_fn(2 * n, 2 * n, |r, c| {
        eig.eigenvectors[(r, c)] / eig.eigenvalues[c].sqrt()
    });
    let w = &scaled * eig.eigenvectors.transpose();
    let x_c = nalgebra::DVector::<f64>::from_fn(2 * n, |r, _| {
        if r < n {
            base.voltage.0[r].re
        } else {
            base.voltage.0[r - n].im
        }
    });

    let engine = PowerFlowEngine::new(net);
    let cloud = (0..count)
        .into_par_iter()
        .map(|idx| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(idx as u64);
            let level: f64 = rng.gen_range(lo..=hi);
            let mut gauss = || {
                let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
                let u2: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                (-2.0 * u1.ln()).sqrt() * u2.cos()
            };
            let mut u = nalgebra::DVector::<f64>::from_fn(2 * n, |_, _| gauss());
            let norm = u.norm();
            if norm > 0.0 {
                u /= norm;
            }
            let x = &x_c + &w * u * (level - p_min).max(0.0).sqrt();
            let v = nalgebra::DVector::from_fn(n, |i, _| Complex64::new(x[i], x[n + i]));
            PowerInjection(engine.eval(&v))
        })
        .collect();
    Ok(cloud)
}

/// A linear functional of the injection vector, expressed over the stacked
/// real coordinates (P1..Pn, Q1..Qn).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Functional {
    pub coeffs: Vec<f64>,
    pub label: String,
}

impl Functional {
    pub fn new(coeffs: Vec<f64>, label: impl Into<String>) -> Self {
        Functional {
            coeffs,
            label: label.into(),
        }
    }

    /// Active power at PQ bus `bus` (1-based, matching the P1..Pn headers).
    pub fn coordinate_p(bus: usize, n: usize) -> Result<Self> {
        Self::coordinate(bus, n, false)
    }

    /// Reactive power at PQ bus `bus` (1-based).
    pub fn coordinate_q(bus: usize, n: usize) -> Result<Self> {
        Self::coordinate(bus, n, true)
    }

    fn coordinate(bus: usize, n: usize, reactive: bool) -> Result<Self> {
        if bus == 0 || bus > n {
            return Err(Error::Dimension(format!(
                "coordinate bus {bus} out of range 1..={n}"
            )));
        }
        let mut coeffs = vec![0.0; 2 * n];
        let (offset, tag) = if reactive { (n, "Q") } else { (0, "P") };
        coeffs[offset + bus - 1] = 1.0;
        Ok(Functional::new(coeffs, format!("{tag}{bus}")))
    }

    pub fn eval(&self, p: &PowerInjection) -> f64 {
        debug_assert_eq!(self.coeffs.len(), 2 * p.dim());
        self.coeffs
            .iter()
            .zip(p.stacked_real())
            .map(|(c, x)| c * x)
            .sum()
    }
}

/// Convexity measurements for one slab `|c_+ . p - level| <= thickness` of a
/// cloud, projected to the plane by two functionals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceReport {
    /// Value of c_+ . p (total active power) at the slab center.
    pub level: f64,
    pub thickness: f64,
    pub projection: [String; 2],
    pub points2d: Vec<[f64; 2]>,
    pub hull_area: f64,
    pub cloud_area: f64,
    /// cloud_area / hull_area; near 1 for a convex slice, visibly below 1
    /// when the slice boundary caves in.
    pub convexity_ratio: f64,
    /// A straight stretch of the slice boundary, when one exists.
    pub flat_segment: Option<FlatSegment>,
}

/// Cuts the slab `|c_+ . p - level| <= thickness` out of a cloud, projects it
/// to 2-D, and compares the convex hull area against an alpha-shape (concave
/// hull) area. The alpha radius is `ALPHA_NN_FACTOR` times the median
/// nearest-neighbor distance, which tracks the sampling density without
/// per-cloud tuning and reads a uniformly sampled convex slice as ratio
/// close to 1.
pub fn slice_convexity(
    cloud: &[PowerInjection],
    level: f64,
    thickness: f64,
    proj: (&Functional, &Functional),
) -> Result<SliceReport> {
    if cloud.is_empty() {
        return Err(Error::Invalid("cannot slice an empty cloud".to_string()));
    }
    if !(thickness > 0.0) {
        return Err(Error::Invalid(format!(
            "slice thickness must be positive, got {thickness}"
        )));
    }
    let points2d: Vec<[f64; 2]> = cloud
        .iter()
        .filter(|p| (p.total_p() - level).abs() <= thickness)
        .map(|p| [proj.0.eval(p), proj.1.eval(p)])
        .collect();
    if points2d.len() < 10 {
        return Err(Error::Invalid(format!(
            "insufficient data: slice at level {level} (thickness {thickness}) holds {} points \
             (< 10); widen the slab or densify the cloud",
            points2d.len()
        )));
    }
    let unique = dedup_points(&points2d);
    let hull = convex_hull(&unique);
    let hull_area = polygon_area(&hull);
    if hull_area <= 0.0 {
        return Err(Error::Invalid(format!(
            "slice at level {level} projects to a degenerate (zero-area) figure"
        )));
    }
    let alpha = ALPHA_NN_FACTOR * median_nn_distance(&unique);
    let cloud_area = alpha_shape_area(&unique, alpha);
    let flat_segment = detect_flat_segment(&unique, &hull);
    Ok(SliceReport {
        level,
        thickness,
        projection: [proj.0.label.clone(), proj.1.label.clone()],
        points2d,
        hull_area,
        cloud_area,
        convexity_ratio: cloud_area / hull_area,
        flat_segment,
    })
}

/// Minimum of c_+ . p over the affine slice pinned by a flat-edge witness:
/// V = v_b + U t with U an orthonormal basis of null(H_c). The reduced
/// system U* H_+ U t = U* (J_+ - H_+ v_b) is positive definite whenever H_+
/// is, so the minimum is attained and unique in the t coordinates.
pub fn p_of_c(net: &Network, witness: &FlatEdgeWitness, tols: &Tolerances) -> Result<f64> {
    let n = net.n();
    let certs_c = build_certificates(net, &witness.c, 0.0)?;
    let (_, h_norm) = linalg::eigen_extremes(&certs_c.h);
    let null = linalg::null_basis(&certs_c.h, tols.mult * h_norm.max(f64::MIN_POSITIVE));
    let (cplus, certs_plus) = cplus_direction(net);
    if null.is_empty() {
        // No free directions: the slice is the single point v_b.
        return functional_value(net, &witness.v_b, &cplus);
    }
    let u = DMatrix::from_columns(&null);
    let reduced = u.adjoint() * &certs_plus.h * &u;
    let rhs = u.adjoint() * (&certs_plus.j - &certs_plus.h * &witness.v_b.0);
    let t = linalg::solve_hpd(&reduced, &rhs).ok_or_else(|| {
        Error::Invalid(format!(
            "reduced {n}-bus edge system is singular; H_+ is not positive definite — \
             epsilon-regularize purely reactive lines first"
        ))
    })?;
    let v = &witness.v_b.0 + u * t;
    functional_value(net, &VoltageProfile(v), &cplus)
}

/// The inner convex band: every injection with
/// `p_min <= c_+ . p <= p_max` that is feasible stays connected to the
/// trivial solution, and the band edges are certified by the supporting
/// point at c_+ (below) and the tightest flat-edge witness (above).
#[derive(Debug, Clone)]
pub struct SubsetBounds {
    /// Global minimum of total active power over the solvability set.
    pub p_min: f64,
    /// Least P(c) over the discovered witnesses; None when no flat edge was
    /// found, in which case the band is unbounded above.
    pub p_max: Option<f64>,
    /// P(c) per witness, aligned with `witnesses`.
    pub witness_values: Vec<f64>,
    pub witnesses: Vec<FlatEdgeWitness>,
}

pub fn subset_bounds(
    net: &Network,
    probe: &ProbeReport,
    tols: &Tolerances,
) -> Result<SubsetBounds> {
    let (cplus, _) = cplus_direction(net);
    let p_min = supporting_point(net, &cplus, tols)?.support_value;
    let mut witness_values = Vec::with_capacity(probe.candidates.len());
    for witness in &probe.candidates {
        witness_values.push(p_of_c(net, witness, tols)?);
    }
    let p_max = witness_values.iter().copied().reduce(f64::min);
    Ok(SubsetBounds {
        p_min,
        p_max,
        witness_values,
        witnesses: probe.candidates.clone(),
    })
}
