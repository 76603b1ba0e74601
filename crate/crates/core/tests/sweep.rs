use spike4_core::asymptotics::{run_sweep, EpsSweepPlan, SweepDomain, DEFAULT_LADDER};
use spike4_core::groundstate::SolveOptions;
use spike4_core::PhysParams;

fn plan(warm_start: bool) -> EpsSweepPlan {
    EpsSweepPlan {
        eps: DEFAULT_LADDER.to_vec(),
        domain: SweepDomain::RadialBall { radius: 1.0 },
        params: PhysParams { alpha1: 5.0, alpha2: 5.0, ..PhysParams::default() }.with_beta(0.1),
        nodes_per_eps: 24.0,
        warm_start,
        solve: SolveOptions::default(),
    }
}

#[test]
fn warm_and_cold_ladders_agree() {
    let warm = run_sweep(&plan(true), None).unwrap();
    let cold = run_sweep(&plan(false), None).unwrap();
    assert_eq!(warm.len(), cold.len());
    for (w, c) in warm.iter().zip(&cold) {
        assert!(w.ok && c.ok && w.converged && c.converged, "ε = {}", w.eps);
        let rel = (w.scaled_energy - c.scaled_energy).abs() / c.scaled_energy;
        assert!(rel < 1e-6, "ε = {}: {rel:e}", w.eps);
        assert_eq!(w.p1, c.p1);
    }
    // warm starts should not cost more work overall
    let iters = |t: &[spike4_core::asymptotics::SpikeTrace]| t.iter().map(|e| e.iterations).sum::<usize>();
    assert!(iters(&warm) <= iters(&cold), "{} vs {}", iters(&warm), iters(&cold));
}

#[test]
fn ladder_is_reproducible() {
    let a = run_sweep(&plan(true), None).unwrap();
    let b = run_sweep(&plan(true), None).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.scaled_energy.to_bits(), y.scaled_energy.to_bits());
        assert_eq!(x.iterations, y.iterations);
    }
}
