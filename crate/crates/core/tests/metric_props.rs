use hilbundle::integrator::{Integrator, TimeGrid};
use hilbundle::linalg::{hermitian_sqrt, pseudo_adjoint, random, MetricOperator};
use hilbundle::metric::{evolve_metric, invariance_check, metric_residual, NonHermitianGenerator};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const HBAR: f64 = 0.9;

fn setup(seed: u64, n: usize) -> (NonHermitianGenerator, MetricOperator, TimeGrid, ChaCha8Rng) {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let gen = NonHermitianGenerator::constant(random::complex_matrix(n, &mut r).scale_real(0.5));
    let eta0 = MetricOperator::new(random::positive(n, &mut r)).unwrap();
    (gen, eta0, TimeGrid::new(0.0, 1.0, 400).unwrap(), r)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn trajectory_starts_at_initial_metric_and_stays_positive(seed in any::<u64>(), n in 1usize..4) {
        let (gen, eta0, grid, _) = setup(seed, n);
        let traj = evolve_metric(&gen, &eta0, &grid, HBAR, Integrator::Magnus4).unwrap();
        prop_assert_eq!(traj.eta0().op(), eta0.op());
        for eta in traj.eta() {
            prop_assert!(eta.eigen_range().0 > 0.0);
        }
    }

    #[test]
    fn trajectory_solves_metric_equation(seed in any::<u64>(), n in 1usize..4) {
        let (gen, eta0, grid, _) = setup(seed, n);
        let traj = evolve_metric(&gen, &eta0, &grid, HBAR, Integrator::Magnus4).unwrap();
        for k in (1..grid.steps()).step_by(37) {
            let r = metric_residual(&gen, &traj, grid.time(k), HBAR).unwrap();
            prop_assert!(r <= 1e-6, "t={}: {r:e}", grid.time(k));
        }
    }

    #[test]
    fn evolved_inner_products_are_invariant(seed in any::<u64>(), n in 1usize..4) {
        let (gen, eta0, grid, mut r) = setup(seed, n);
        let traj = evolve_metric(&gen, &eta0, &grid, HBAR, Integrator::Magnus4).unwrap();
        let (a, b) = (random::state(n, &mut r), random::state(n, &mut r));
        let drift = invariance_check(&gen, &traj, &a, &b, HBAR, Integrator::Magnus4).unwrap();
        prop_assert!(drift <= 1e-7, "{drift:e}");
    }

    /// `O = ρ⁻¹oρ` for Hermitian `o` is self-adjoint under `η = ρ²`.
    #[test]
    fn hermitian_picture_observables_are_pseudo_hermitian(seed in any::<u64>(), n in 1usize..5) {
        let (gen, eta0, grid, mut r) = setup(seed, n);
        let traj = evolve_metric(&gen, &eta0, &grid, HBAR, Integrator::Magnus4).unwrap();
        let eta = &traj.eta()[grid.steps() / 2];
        let rho = hermitian_sqrt(eta).unwrap();
        let rho_inv = rho.inverse(1e12).unwrap();
        let o = random::hermitian(n, &mut r);
        let big_o = &(&rho_inv * &o) * &rho;
        let eta_inv = eta.op().inverse(1e12).unwrap();
        let expected = &(eta.op() * &big_o) * &eta_inv;
        let scale = big_o.max_abs().max(1.0);
        prop_assert!(big_o.adjoint().max_diff(&expected) <= 1e-8 * scale);
    }

    /// A moving metric makes `𝓗` differ from its own pseudo-adjoint by
    /// `iħ η⁻¹η̇`.
    #[test]
    fn generator_is_not_an_observable(seed in any::<u64>(), n in 2usize..4) {
        let (gen, eta0, grid, _) = setup(seed, n);
        let traj = evolve_metric(&gen, &eta0, &grid, HBAR, Integrator::Magnus4).unwrap();
        let t = grid.time(grid.steps() / 2);
        let h = gen.value(t).unwrap();
        let gap = pseudo_adjoint(traj.at(t).unwrap(), &h).unwrap().max_diff(&h);
        prop_assert!(gap > 1e-3, "{gap:e}");
    }
}
