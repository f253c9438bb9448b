#[path = "support/phase_oracle.rs"]
mod phase_oracle;

use hopscatter::rfsim::theoretical_phase;
use hopscatter::rng::seeded_rng;
use hopscatter::Position2D;
use phase_oracle::{circ_diff, exact_phase};
use rand::Rng;

#[test]
fn oracle_reproduces_hand_evaluated_value() {
    // 4π · 920e6 · 0.1 / 299792458
    let v = exact_phase(0.1, 0.0, 0.0, 0.0, 920e6);
    assert!((v - 3.856_354_840_4).abs() < 1e-9, "{v}");
}

#[test]
fn theoretical_phase_matches_exact_evaluation() {
    let mut rng = seeded_rng(1, "phase-oracle");
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let p = Position2D::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let a = Position2D::new(rng.random_range(-2.0..2.0), rng.random_range(-0.5..0.5));
        let f = rng.random_range(902e6..928e6f64).round();
        let got = theoretical_phase(&p, &a, f).unwrap();
        assert!((0.0..std::f64::consts::TAU).contains(&got));
        worst = worst.max(circ_diff(got, exact_phase(p.x, p.y, a.x, a.y, f)));
    }
    assert!(worst < 1e-10, "worst deviation {worst:e} rad");
}
