// scratch: criterion-3 tuning with the ellipsoid band sampler
use num_complex::Complex64;
use solvcert::boundary::{level_band_cloud, slice_convexity, Functional};
use solvcert::network::{Line, Network};
use solvcert::tolerances::Tolerances;

fn main() {
    let net = Network::new(
        2,
        vec![
            Line::new(0, 1, Complex64::new(1.0, 1.0)),
            Line::new(1, 2, Complex64::new(1.0, 0.0)),
        ],
    )
    .unwrap();
    let tols = Tolerances::default();
    let q1 = Functional::coordinate_q(1, 2).unwrap();
    let q2 = Functional::coordinate_q(2, 2).unwrap();
    for count in [300_000usize, 1_000_000] {
        let t0 = std::time::Instant::now();
        let cloud = level_band_cloud(&net, (-0.45, 1.3), count, 2024, &tols).unwrap();
        println!("count={count} band cloud in {:?}", t0.elapsed());
        for (level, ts) in [
            (0.0, vec![0.03, 0.05, 0.08]),
            (0.5, vec![0.05, 0.12, 0.2]),
            (1.0, vec![0.03, 0.05, 0.08]),
        ] {
            for t in ts {
                let t1 = std::time::Instant::now();
                match slice_convexity(&cloud, level, t, (&q1, &q2)) {
                    Ok(r) => println!(
                        "  level {level} t {t}: pts={} ratio={:.4} hull={:.3} cloud={:.3} flat={} ({:?})",
                        r.points2d.len(),
                        r.convexity_ratio,
                        r.hull_area,
                        r.cloud_area,
                        r.flat_segment
                            .map(|f| format!(
                                "len {:.3} ({:.3},{:.3})->({:.3},{:.3}) gap {:.4}",
                                f.length, f.start[0], f.start[1], f.end[0], f.end[1], f.support_gap
                            ))
                            .unwrap_or_else(|| "none".into()),
                        t1.elapsed()
                    ),
                    Err(e) => println!("  level {level} t {t}: ERR {e}"),
                }
            }
        }
    }
}
