use nhlab::jordan::{round_trip, JordanSpec, TriangleTransform};
use nhlab::observables::{packet_binorm, PacketParams};
use nhlab::report::{Record, SuiteReport};
use nhlab::scattering::{green, transmission};
use nhlab::ModelParams;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type C = Complex64;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn random_round_trip_holds(seed in any::<u64>(), kappa in 0.5f64..2.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spec = JordanSpec::random(&mut rng, 12);
        let t = TriangleTransform::random(&spec, &mut rng);
        let rt = round_trip(&spec, &t, kappa).unwrap();
        prop_assert!(rt.passes(1e-10), "{:?}", rt);
    }

    #[test]
    fn packet_binorm_scales_as_sqrt_eps(eps in 1e-3f64..0.2, re in -2.0f64..2.0, im in 0.3f64..2.0) {
        let z = C::new(re, im);
        let a = packet_binorm(&PacketParams::new(eps, z).unwrap()).unwrap().value;
        let b = packet_binorm(&PacketParams::new(4.0 * eps, z).unwrap()).unwrap().value;
        prop_assert!((b / a - 2.0).norm() < 1e-6);
        prop_assert!((a.re - (std::f64::consts::PI / 8.0 * eps).sqrt()).abs() < 1e-6 * a.re);
    }

    #[test]
    fn transparent_potentials_are_reflectionless(k in 0.2f64..4.0, alpha in 0.5f64..1.5, im in 0.5f64..2.0) {
        let p = ModelParams::jordan_bound(alpha, C::new(0.0, im)).unwrap();
        let t = transmission(&p, k).unwrap();
        prop_assert!((t.t.norm() - 1.0).abs() < 1e-6);
        prop_assert!(t.r.norm() < 1e-8);
    }

    #[test]
    fn green_function_is_symmetric(x in -3.0f64..3.0, xp in -3.0f64..3.0, lre in -2.0f64..0.5, lim in 0.2f64..2.0) {
        let p = ModelParams::two_level(C::new(1.0, 0.0), 0.3, C::new(0.0, 1.0)).unwrap();
        let l = C::new(lre, lim);
        let a = green(&p, l, x, xp).unwrap();
        let b = green(&p, l, xp, x).unwrap();
        prop_assert!((a - b).norm() <= 1e-12 * a.norm().max(1.0));
    }

    #[test]
    fn suite_pass_is_conjunction_of_gating_records(flags in proptest::collection::vec((any::<bool>(), any::<bool>()), 0..20)) {
        let mut s = SuiteReport::new("p");
        for (i, (ok, gating)) in flags.iter().enumerate() {
            let r = Record::flag(&format!("r{i}"), "anchor", *ok);
            s.push(if *gating { r } else { r.diagnostic() });
        }
        prop_assert_eq!(s.pass, flags.iter().all(|(ok, g)| *ok || !*g));
    }
}
