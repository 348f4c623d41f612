use coagfrag::kernels::*;
use coagfrag::rng::{uniform, Seed};
use coagfrag::stats::ks_distance;
use coagfrag::ParticleSystem;
use proptest::prelude::*;

fn system() -> impl Strategy<Value = ParticleSystem> {
    (1u64..20, prop::collection::vec(1e-3f64..1e3, 2..40)).prop_map(|(n, sizes)| ParticleSystem::new(n, sizes).unwrap())
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

fn frag_laws() -> Vec<FragLaw> {
    vec![
        uniform_binary(ScalarFn::Power { c: 1.0, alpha: 1.0 }),
        uniform_binary(ScalarFn::Affine { a: 1.0, b: 1.0 }),
        deterministic_binary(ScalarFn::Constant(2.0), Kappa::ShiftedHalf),
        deterministic_binary(ScalarFn::NegLog { a: 1.0, b: 1.0 }, Kappa::Half),
        deterministic_binary(ScalarFn::Constant(1.0), Kappa::Fraction(0.3)),
        FragLaw::custom("ternary", |x| x, |x, rng| {
            let a = uniform(rng) * x / 2.0;
            let b = (x - a) / 3.0;
            vec![a, b, x - a - b]
        }),
    ]
}

proptest! {
    #[test]
    fn direct_transformations_conserve_mass_and_count(xi in system(), pick in any::<prop::sample::Index>(), other in any::<prop::sample::Index>(), theta in 0.01f64..0.99) {
        let i = pick.index(xi.len());
        let j = other.index(xi.len());
        let x = xi.sizes[i];
        let before = xi.clone();

        let split = xi.apply_frag(i, &[theta * x, x - theta * x]).unwrap();
        prop_assert!(close(split.mass(), xi.mass()));
        prop_assert_eq!(split.len(), xi.len() + 1);

        let three = xi.apply_frag(i, &[theta * x / 2.0, theta * x / 2.0, x - theta * x]).unwrap();
        prop_assert!(close(three.mass(), xi.mass()));
        prop_assert_eq!(three.len(), xi.len() + 2);

        if i != j {
            let merged = xi.apply_coag_direct(i, j).unwrap();
            prop_assert!(close(merged.mass(), xi.mass()));
            prop_assert_eq!(merged.len(), xi.len() - 1);
        }
        prop_assert_eq!(&xi, &before);
    }

    #[test]
    fn mass_flow_transformations_keep_count(xi in system(), pick in any::<prop::sample::Index>(), other in any::<prop::sample::Index>(), theta in 0.01f64..1.0) {
        let i = pick.index(xi.len());
        let j = other.index(xi.len());
        let before = xi.clone();

        let grown = xi.apply_coag_massflow(i, j).unwrap();
        prop_assert_eq!(grown.len(), xi.len());
        let gain = grown.mass() - xi.mass();
        prop_assert!((gain - xi.sizes[j] / xi.n as f64).abs() <= 1e-12 * grown.mass());

        let shrunk = xi.apply_frag_massflow(i, theta * xi.sizes[i]).unwrap();
        prop_assert_eq!(shrunk.len(), xi.len());
        prop_assert!(shrunk.sizes[i] <= xi.sizes[i]);
        prop_assert_eq!(&xi, &before);
    }

    #[test]
    fn every_fragment_draw_conserves_mass(x in 1e-3f64..1e3, seed in any::<u64>()) {
        let mut rng = Seed::new(seed, 0).streams().auxiliary();
        for law in frag_laws() {
            let z = law.sample_fragments(x, &mut rng).unwrap();
            prop_assert!(z.len() >= 2);
            prop_assert!(z.iter().all(|&y| y > 0.0));
            prop_assert!(close(z.iter().sum(), x), "{:?}: {:?} from {}", law, z, x);
        }
    }

    #[test]
    fn mass_flow_rate_equals_fragmentation_rate(x in 1e-3f64..1e3) {
        for law in frag_laws() {
            let direct = law.total_rate(x);
            let mf = massflow_from_frag(law);
            prop_assert_eq!(mf.total_rate(x), direct);
        }
    }

    #[test]
    fn symmetrization_is_idempotent(x in 1e-3f64..1e3, y in 1e-3f64..1e3) {
        let kernels = [
            constant_kernel(2.0),
            additive_kernel(),
            product_power_kernel(0.75),
            CoagKernel::Monomial { c: 1.0, a: 2.0, b: 0.5 },
            CoagKernel::custom("skew", None, |x, y| x * x + y),
        ];
        for k in &kernels {
            let once = sym_coag(k);
            let twice = sym_coag(&once);
            prop_assert_eq!(once.eval(x, y), twice.eval(x, y));
            prop_assert!(close(once.eval(x, y), once.eval(y, x)));
            prop_assert!(close(once.eval(x, y), 0.5 * (k.eval(x, y) + k.eval(y, x))));
        }
    }
}

#[test]
fn size_biased_uniform_split_has_linear_density() {
    // Keeping fragment z of a uniform split with probability z/x gives
    // v = y/x with density 2v, so P(v ≤ s) = s².
    let mf = massflow_from_frag(uniform_binary(ScalarFn::Constant(1.0)));
    let mut rng = Seed::new(31, 0).streams().auxiliary();
    let x = 3.0;
    let v: Vec<f64> = (0..100_000).map(|_| mf.sample_next(x, &mut rng).unwrap() / x).collect();
    let d = ks_distance(&v, |s| s.clamp(0.0, 1.0).powi(2));
    assert!(d < 0.01, "{d}");
}

#[test]
fn size_biased_deterministic_split_is_two_point() {
    let mf = massflow_from_frag(deterministic_binary(ScalarFn::Constant(1.0), Kappa::ShiftedHalf));
    let mut rng = Seed::new(32, 0).streams().auxiliary();
    let x = 2.0;
    let kappa = 1.25;
    let draws = 100_000;
    let big = (0..draws)
        .filter(|_| {
            let y = mf.sample_next(x, &mut rng).unwrap();
            assert!(y == kappa || y == x - kappa);
            y == kappa
        })
        .count();
    assert!((big as f64 / draws as f64 - kappa / x).abs() < 0.01);
    assert_eq!(mf.next_size_atoms(x).unwrap(), Some(vec![(kappa, kappa / x), (x - kappa, (x - kappa) / x)]));
}

#[test]
fn uniform_binary_moment_ratio() {
    let mf = massflow_from_frag(uniform_binary(ScalarFn::Constant(1.0)));
    for (k, alpha) in [0.5, 1.0, 2.0, 4.0].into_iter().enumerate() {
        let est = massflow_moment_ratio(&mf, 5.0, alpha, 50_000, Seed::new(33, k as u64)).unwrap();
        let exact = 2.0 / (alpha + 2.0);
        assert!(est.within(exact, 3.0), "α = {alpha}: {est:?} vs {exact}");
        assert_eq!(massflow_moment_ratio_exact(&mf, 5.0, alpha).unwrap(), Some(exact));
    }
}

#[test]
fn fragment_cdf_of_uniform_split() {
    let law = uniform_binary(ScalarFn::Constant(1.0));
    let mut rng = Seed::new(34, 0).streams().auxiliary();
    let x = 4.0;
    let first: Vec<f64> = (0..100_000).map(|_| law.sample_fragments(x, &mut rng).unwrap()[0] / x).collect();
    assert!(ks_distance(&first, |s| s.clamp(0.0, 1.0)) < 0.01);
}
