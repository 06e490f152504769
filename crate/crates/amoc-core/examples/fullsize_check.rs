//! Developer scratch run: full-size quantile simulation for every
//! published table row, printing deviations from the published values.

use amoc_core::limit::{estimate_quantiles, FamilyKind, LimitFamily, SimConfig};

fn main() {
    let seed: u64 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(0xC11AE);
    let cfg = SimConfig {
        replications: 200_000,
        grid: 5_000,
        seed,
        workers: 0,
    };
    let rows: [(FamilyKind, f64, usize, [f64; 5]); 15] = [
        (FamilyKind::WeightedBridgeSup, 0.01, 5000, [2.970, 3.225, 3.455, 3.730, 4.331]),
        (FamilyKind::WeightedBridgeSup, 0.05, 5000, [2.833, 3.095, 3.331, 3.619, 4.241]),
        (FamilyKind::WeightedBridgeSup, 0.10, 5000, [2.736, 3.007, 3.252, 3.548, 4.171]),
        (FamilyKind::BridgeSup, 0.0, 5000, [1.224, 1.358, 1.480, 1.628, 1.949]),
        (FamilyKind::BridgeL2, 0.0, 5000, [0.347, 0.461, 0.581, 0.743, 1.168]),
        (FamilyKind::DSup, 0.01, 5000, [3.224, 3.463, 3.679, 3.935, 4.403]),
        (FamilyKind::DSup, 0.05, 5000, [3.135, 3.378, 3.603, 3.895, 4.403]),
        (FamilyKind::DSup, 0.10, 5000, [3.082, 3.330, 3.559, 3.834, 4.376]),
        (FamilyKind::HSup, 0.0, 5000, [0.830, 0.900, 0.962, 1.041, 1.360]),
        (FamilyKind::FSup, 0.01, 5000, [6.595, 7.444, 8.273, 9.336, 11.866]),
        (FamilyKind::FSup, 0.05, 5000, [6.166, 7.017, 7.846, 8.907, 11.510]),
        (FamilyKind::FSup, 0.10, 5000, [5.856, 6.715, 7.536, 8.606, 11.169]),
        (FamilyKind::JSup, 0.01, 1000, [2.530, 2.795, 3.038, 3.327, 3.964]),
        (FamilyKind::JSup, 0.05, 1000, [2.380, 2.658, 2.908, 3.207, 3.852]),
        (FamilyKind::JSup, 0.10, 1000, [2.285, 2.570, 2.827, 3.132, 3.792]),
    ];
    for (kind, delta, grid, table) in rows {
        let f = LimitFamily::new(kind, delta).unwrap();
        let t = estimate_quantiles(&f, &SimConfig { grid, ..cfg }).unwrap();
        print!("{:>20}/{:.2}:", kind.name(), delta);
        for (q, e) in t.quantiles.iter().zip(table) {
            print!(" {q:.4}({:+.4})", q - e);
        }
        println!();
    }
}
