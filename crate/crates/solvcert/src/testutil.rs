//! Shared builders for unit and property tests.

use crate::network::{Line, Network};
use crate::quadratic::{Direction, VoltageProfile};
use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub(crate) fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub(crate) fn rng_for(seed: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}

pub(crate) fn two_bus(y: Complex64) -> Network {
    Network::new(1, vec![Line::new(0, 1, y)]).unwrap()
}

/// Chain 0 -- 1 -- 2 with y_01 = y and y_12 = 1.
pub(crate) fn three_bus_chain(y: Complex64) -> Network {
    Network::new(2, vec![Line::new(0, 1, y), Line::new(1, 2, c(1.0, 0.0))]).unwrap()
}

pub(crate) fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    (-2.0 * u1.ln()).sqrt() * u2.cos()
}

/// Random connected graph over buses 0..=n: random spanning tree plus
/// optional extra edges. Admittances have positive real part and a random
/// imaginary part.
pub(crate) fn random_connected_net(
    rng: &mut ChaCha8Rng,
    max_n: usize,
    extra_edges: bool,
) -> Network {
    let n = rng.gen_range(1..=max_n);
    random_connected_net_sized(rng, n, extra_edges, false)
}

pub(crate) fn random_connected_net_sized(
    rng: &mut ChaCha8Rng,
    n: usize,
    extra_edges: bool,
    resistive: bool,
) -> Network {
    let mut draw_y = |rng: &mut ChaCha8Rng| {
        if resistive {
            c(rng.gen_range(0.2..3.0), 0.0)
        } else {
            c(rng.gen_range(0.2..3.0), rng.gen_range(-1.0..1.0))
        }
    };
    let mut lines = Vec::new();
    for v in 1..=n {
        let parent = rng.gen_range(0..v);
        lines.push(Line::new(parent, v, draw_y(rng)));
    }
    if extra_edges && n >= 2 {
        for _ in 0..rng.gen_range(1..=n) {
            let a = rng.gen_range(0..=n);
            let b = rng.gen_range(0..=n);
            let key = (a.min(b), a.max(b));
            if a != b
                && lines.iter().all(|l| {
                    (
                        l.from.index().min(l.to.index()),
                        l.from.index().max(l.to.index()),
                    ) != key
                })
            {
                lines.push(Line::new(a, b, draw_y(rng)));
            }
        }
    }
    Network::new(n, lines).unwrap()
}

/// Random tree with all admittance arguments equal to a common random phi.
pub(crate) fn random_homogeneous_tree(
    rng: &mut ChaCha8Rng,
    min_n: usize,
    max_n: usize,
) -> (Network, f64) {
    let n = rng.gen_range(min_n..=max_n);
    let phi = rng.gen_range(-1.2..1.2);
    let mut lines = Vec::new();
    for v in 1..=n {
        let parent = rng.gen_range(0..v);
        let mag = rng.gen_range(0.3..2.5);
        lines.push(Line::new(parent, v, Complex64::from_polar(mag, phi)));
    }
    (Network::new(n, lines).unwrap(), phi)
}

pub(crate) fn random_voltage(rng: &mut ChaCha8Rng, n: usize, radius: f64) -> VoltageProfile {
    VoltageProfile(DVector::from_fn(n, |_, _| {
        c(
            1.0 + radius * gauss(rng),
            radius * gauss(rng),
        )
    }))
}

pub(crate) fn random_direction(rng: &mut ChaCha8Rng, n: usize, real_only: bool) -> Direction {
    Direction(DVector::from_fn(n, |_, _| {
        if real_only {
            c(gauss(rng), 0.0)
        } else {
            c(gauss(rng), gauss(rng))
        }
    }))
}
