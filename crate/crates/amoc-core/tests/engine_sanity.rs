//! Moderate-size simulation checks of the quantile engine against known
//! asymptotic values. The full-size table reproduction lives in the
//! acceptance suite of the CLI crate; these runs are sized for the crate
//! test budget.

use amoc_core::limit::{
    estimate_quantiles, kolmogorov_sup_quantile, FamilyKind, LimitFamily, SimConfig,
};

fn config(grid: usize) -> SimConfig {
    SimConfig {
        replications: 30_000,
        grid,
        seed: 0xA110C,
        workers: 0,
    }
}

fn q95(kind: FamilyKind, delta: f64, grid: usize) -> f64 {
    let family = LimitFamily::new(kind, delta).unwrap();
    let table = estimate_quantiles(&family, &config(grid)).unwrap();
    let q = table.quantile(0.95).unwrap();
    println!("{}/{delta}: 95% = {q:.4}", kind.name());
    q
}

#[test]
fn bridge_sup_matches_series_quantile() {
    let q = q95(FamilyKind::BridgeSup, 0.0, 2000);
    let exact = kolmogorov_sup_quantile(0.95);
    assert!(
        (q - exact).abs() < 0.015,
        "simulated {q} vs series {exact}"
    );
}

#[test]
fn families_match_published_95_points() {
    for (kind, delta, grid, expect, tol) in [
        (FamilyKind::WeightedBridgeSup, 0.05, 2000, 3.095, 0.05),
        (FamilyKind::BridgeL2, 0.0, 2000, 0.461, 0.02),
        (FamilyKind::HSup, 0.0, 2000, 0.900, 0.03),
        (FamilyKind::DSup, 0.05, 2000, 3.378, 0.05),
        (FamilyKind::FSup, 0.05, 2000, 7.017, 0.20),
        (FamilyKind::JSup, 0.05, 500, 2.658, 0.06),
    ] {
        let q = q95(kind, delta, grid);
        assert!(
            (q - expect).abs() < tol,
            "{}/{delta}: simulated {q} vs published {expect}",
            kind.name()
        );
    }
}
