use branchlink::bounds::{k_step_bound, one_step_bound, RegularityCertificate};
use branchlink::estimator::{estimate_path_tvd, ProcessPair, Side};
use branchlink::matching::{check_match, construct_offspring_exact, match_psdbp_to_dcbp, min_variance_exact};
use branchlink::rational::{self, Rational};
use branchlink::{ControlMap, Distribution, KernelOptions, OffspringFamily, ProcessSpec, SumOptions, TransitionKernel};
use num_traits::Zero;
use proptest::prelude::*;

fn distribution() -> impl Strategy<Value = Distribution> {
    prop_oneof![
        (0u64..20).prop_map(Distribution::point),
        (0.0..=1.0f64).prop_map(|p| Distribution::bernoulli(p).unwrap()),
        (1u64..40, 0.01..0.99f64).prop_map(|(n, p)| Distribution::binomial(n, p).unwrap()),
        (0.05..30.0f64).prop_map(|mu| Distribution::poisson(mu).unwrap()),
        (0.1..0.95f64).prop_map(|q| Distribution::geometric(q).unwrap()),
        (0.2..8.0f64, 0.15..0.95f64).prop_map(|(r, q)| Distribution::negative_binomial(r, q).unwrap()),
        (0.0..0.9f64, 0.1..10.0f64).prop_map(|(pi0, l)| Distribution::zero_inflated_poisson(pi0, l).unwrap()),
        (0.0..0.9f64, 0.15..0.9f64).prop_map(|(p, q)| Distribution::zero_inflated_geometric(p, q).unwrap()),
        (1u64..30, 0.01..0.99f64).prop_map(|(s, p)| Distribution::scaled_bernoulli(s, p).unwrap()),
        prop::collection::vec(0.01..1.0f64, 1..8).prop_map(|w| {
            let total: f64 = w.iter().sum();
            let atoms = w.iter().enumerate().map(|(i, p)| (2 * i as u64, p / total)).collect();
            Distribution::finite(atoms).unwrap()
        }),
    ]
}

fn pmf_gap(a: &Distribution, b: &Distribution) -> f64 {
    let hi = a.upper_point(1e-14).max(b.upper_point(1e-14));
    (0..=hi).map(|k| (a.pmf(k) - b.pmf(k)).abs()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn truncated_law_is_normalised(d in distribution()) {
        let law = d.to_finite(1e-13);
        prop_assert!((law.total_mass() + law.omitted_mass() - 1.0).abs() < 1e-12);
        prop_assert!(law.omitted_mass() < 1e-12);
    }

    #[test]
    fn analytic_moments_match_sums(d in distribution()) {
        let law = d.to_finite(1e-15);
        let scale = d.variance().max(1.0);
        prop_assert!((law.mean() - d.mean()).abs() < 1e-8 * d.mean().max(1.0));
        prop_assert!((law.variance() - d.variance()).abs() < 1e-7 * scale);
    }

    #[test]
    fn division_round_trips(d in distribution(), n in 1u64..6) {
        let v = d.divide(n);
        if let Some(c) = v.component() {
            let back = c.iid_sum(n, SumOptions::default()).unwrap();
            prop_assert!(pmf_gap(&back, &d) < 1e-9, "{d} / {n} -> {c}");
        }
    }

    #[test]
    fn closed_sums_match_dense_convolution(mu in 0.1..5.0f64, n in 1u64..12, trials in 1u64..20, p in 0.05..0.95f64) {
        let opts = SumOptions::default();
        for d in [Distribution::poisson(mu).unwrap(), Distribution::binomial(trials, p).unwrap()] {
            let closed = d.iid_sum(n, opts).unwrap();
            let dense = Distribution::FiniteSupport(d.to_finite(1e-16)).iid_sum(n, opts).unwrap();
            prop_assert!(pmf_gap(&closed, &dense) < 1e-10);
        }
    }

    #[test]
    fn consecutive_overlap_at_most_half(d in distribution()) {
        let g = d.consecutive_overlap(1e-12);
        prop_assert!((0.0..=0.5).contains(&g));
    }

    #[test]
    fn constructed_offspring_hits_moments(num in 0i64..400, den in 1i64..40, extra_num in 0i64..50, extra_den in 1i64..10) {
        let alpha = rational::ratio(num, den);
        let beta = min_variance_exact(&alpha) + rational::ratio(extra_num, extra_den);
        let beta = if alpha.is_zero() { Rational::zero() } else { beta };
        let atoms = construct_offspring_exact(&alpha, &beta).unwrap();
        let mean: Rational = atoms.iter().map(|(k, p)| rational::from_u64(*k) * p).sum();
        let second: Rational = atoms.iter().map(|(k, p)| rational::from_u64(*k * *k) * p).sum();
        let mass: Rational = atoms.iter().map(|a| a.1.clone()).sum();
        prop_assert_eq!(mass, rational::int(1));
        prop_assert!(atoms.iter().all(|a| a.1 >= Rational::zero()));
        prop_assert_eq!(&mean, &alpha);
        prop_assert_eq!(second - &mean * &mean, beta);
    }

    #[test]
    fn matched_psdbp_agrees_with_its_dcbp(a in 1i64..4, b in 0i64..4, n in 1u64..6, p in 0.1..0.9f64) {
        let map = ControlMap::AffineFloor { a: rational::int(a), b: rational::int(b) };
        let offspring = Distribution::binomial(n, p).unwrap();
        let dcbp = ProcessSpec::dcbp(map.clone(), offspring.clone());
        let report = match_psdbp_to_dcbp(&dcbp, 1, 60).unwrap();
        match report.construction {
            Some(built) => prop_assert!(check_match(&built, &dcbp, 1..=60).unwrap().matched),
            None => {
                // the witness must really have too little variance for its mean
                let z = report.witness.expect("infeasible reports carry a witness");
                let (m, v) = offspring.exact_moments().unwrap();
                let scale = rational::ratio(map.eval(z) as i64, z as i64);
                prop_assert!(&v * &scale < min_variance_exact(&(&m * &scale)));
            }
        }
    }

    #[test]
    fn one_step_bound_scales_as_inverse_root(h in 0.1..3.0f64, r in 0.5..20.0f64, eta in 0.01..0.5f64, s2 in 0.1..10.0f64, z in 1.0..1e6f64) {
        let c = cert(h, r, eta, s2);
        let base = one_step_bound(1.0, &c);
        prop_assert!((one_step_bound(z, &c) * z.sqrt() / base - 1.0).abs() < 1e-12);
    }

    #[test]
    fn k_step_bound_grows_with_k(h in 0.5..2.0f64, alpha in 0.05..0.95f64, z in 1.0..1e5f64, k in 1u32..15) {
        let c = cert(h, 4.0, 0.2, 2.0);
        prop_assert!(k_step_bound(z, k + 1, alpha, &c).unwrap() > k_step_bound(z, k, alpha, &c).unwrap());
    }
}

fn cert(h: f64, r: f64, eta: f64, s2: f64) -> RegularityCertificate {
    RegularityCertificate { h, r, eta, m_tilde: 1.2, sigma2_tilde: s2, audited_range: (1, 100), exact: true }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn estimate_independent_of_workers(seed in any::<u64>(), z0 in 1u64..30, workers in 2usize..6) {
        let opts = KernelOptions::default();
        let pair = ProcessPair::new(
            TransitionKernel::new(ProcessSpec::psdbp(OffspringFamily::NbShiftGated { lambda: 3.0, m: 2 }), opts),
            TransitionKernel::new(
                ProcessSpec::dcbp(ControlMap::ShiftGated { m: 2 }, Distribution::zero_inflated_poisson(2.0 / 3.0, 3.0).unwrap()),
                opts,
            ),
        );
        let a = estimate_path_tvd(&pair, z0, 2, 3000, seed, Side::Cbp, 1).unwrap();
        let b = estimate_path_tvd(&pair, z0, 2, 3000, seed, Side::Cbp, workers).unwrap();
        prop_assert_eq!(a.value.to_bits(), b.value.to_bits());
        prop_assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
    }

    #[test]
    fn distribution_text_round_trips(d in distribution()) {
        let parsed: Distribution = d.to_string().parse().unwrap();
        prop_assert_eq!(parsed, d);
    }
}
