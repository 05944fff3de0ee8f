use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use ppstat::detection::{bipartite_probs, noise_correct, single_mode_probs, DetectorPair, Layout};
use ppstat::estimator::count_based_pg_eta;
use ppstat::metrics::{fidelity, rmsle, MetricConfig};
use ppstat::pnd::{apply_loss_bipartite, apply_loss_single, loss_matrix, LossChannel, PndMatrix};
use ppstat::simulator::{expected_counts, sample_multinomial};

fn distribution(n: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(1e-6..1.0f64, n).prop_map(|v| {
        let s: f64 = v.iter().sum();
        v.into_iter().map(|x| x / s).collect()
    })
}

fn pnd(n_max: usize) -> impl Strategy<Value = PndMatrix> {
    distribution((n_max + 1) * (n_max + 1)).prop_map(move |c| PndMatrix::new(n_max, c).unwrap())
}

fn arm() -> impl Strategy<Value = DetectorPair> {
    (0.0..=1.0f64, 0.01..=1.0f64, 0.01..=1.0f64, 0.0..0.1f64, 0.0..0.1f64, 0.05..=1.0f64).prop_map(
        |(t, et, er, dt, dr, g)| DetectorPair::new(t, et, er, dt, dr).unwrap().with_gamma(g).unwrap(),
    )
}

proptest! {
    #[test]
    fn rmsle_is_symmetric_and_zero_on_the_diagonal(p in distribution(9), o in distribution(9)) {
        let cfg = MetricConfig::default();
        let a = rmsle(&p, &o, cfg).unwrap();
        prop_assert!(a >= 0.0);
        prop_assert!((a - rmsle(&o, &p, cfg).unwrap()).abs() < 1e-12);
        prop_assert_eq!(rmsle(&p, &p, cfg).unwrap(), 0.0);
    }

    #[test]
    fn fidelity_lies_in_unit_interval(p in distribution(9), o in distribution(9)) {
        let f = fidelity(&p, &o).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&f));
        prop_assert!((f - fidelity(&o, &p).unwrap()).abs() < 1e-15);
        prop_assert!((fidelity(&p, &p).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn multinomial_draws_keep_the_total(w in distribution(16), n in 0u64..1_000_000_000, seed in any::<u64>()) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let c = sample_multinomial(&w, n, &mut rng).unwrap();
        prop_assert_eq!(c.len(), 16);
        prop_assert_eq!(c.iter().sum::<u64>(), n);
    }

    #[test]
    fn loss_preserves_total_and_composes(pv in distribution(5), a in 0.0..=1.0f64, b in 0.0..=1.0f64) {
        let out = apply_loss_single(&pv, a).unwrap();
        prop_assert!((out.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(out.iter().all(|v| *v >= -1e-15));
        let la = loss_matrix(LossChannel::new(a).unwrap(), 4);
        let lb = loss_matrix(LossChannel::new(b).unwrap(), 4);
        let lab = loss_matrix(LossChannel::new(a * b).unwrap(), 4);
        prop_assert!((la * lb - lab).abs().max() < 1e-12);
    }

    #[test]
    fn bipartite_loss_keeps_normalization(p in pnd(2), ts in 0.0..=1.0f64, ti in 0.0..=1.0f64) {
        let q = apply_loss_bipartite(&p, ts, ti).unwrap();
        prop_assert!((q.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn outcome_probabilities_are_distributions(p in pnd(2), s in arm(), i in arm(), pv in distribution(3)) {
        let w = bipartite_probs(&p, &s, &i).unwrap();
        prop_assert!(w.iter().all(|v| *v >= 0.0));
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let u = single_mode_probs(&pv, &s).unwrap();
        prop_assert!(u.iter().all(|v| *v >= 0.0));
        prop_assert!((u.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn noise_correction_inverts_expected_noise(p in pnd(2), s in arm(), i in arm()) {
        let quiet = |a: &DetectorPair| DetectorPair { d_t: 0.0, d_r: 0.0, ..*a };
        let n = 1e9;
        let noisy = expected_counts(Layout::Bipartite, &bipartite_probs(&p, &s, &i).unwrap(), n, 0).unwrap();
        let clean = bipartite_probs(&p, &quiet(&s), &quiet(&i)).unwrap();
        let c = noise_correct(&noisy, &[s.d_t, s.d_r, i.d_t, i.d_r]).unwrap();
        for (k, v) in c.record.counts().iter().enumerate() {
            prop_assert!((v - clean[k] * n).abs() < 1e-6 * n, "status {}: {} vs {}", k, v, clean[k] * n);
        }
    }

    /// With at most one pair the coincidence sum recovers `P11` whatever the
    /// beam-splitter ratios.
    #[test]
    fn count_based_pair_probability_ignores_split(
        p11 in 1e-4..0.1f64, p10 in 0.0..0.1f64, p01 in 0.0..0.1f64,
        t_s in 0.05..0.95f64, t_i in 0.05..0.95f64,
        etas in proptest::array::uniform4(0.1..=1.0f64),
    ) {
        let p = PndMatrix::from_rows([[1.0 - p11 - p10 - p01, p01], [p10, p11]]).unwrap();
        let s = DetectorPair::new(t_s, etas[0], etas[1], 0.0, 0.0).unwrap();
        let i = DetectorPair::new(t_i, etas[2], etas[3], 0.0, 0.0).unwrap();
        let rec = expected_counts(Layout::Bipartite, &bipartite_probs(&p, &s, &i).unwrap(), 1.0, 0).unwrap();
        let (p_g, _, _) = count_based_pg_eta(&rec, etas).unwrap();
        prop_assert!((p_g - p11).abs() < 1e-12 * (1.0 + p11), "{} vs {}", p_g, p11);
    }
}
