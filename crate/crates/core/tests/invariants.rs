//! Property tests over random graphs, Hamiltonians, states and Pauli strings.

mod common;

use proptest::prelude::*;
use qite_core::analysis::{failure_prob, failure_prob_ite_closed, random_diagonal_hamiltonian, thm1_bound, thm2_check};
use qite_core::graph::UnitDiskGraph;
use qite_core::hamiltonian::{DiagonalHamiltonian, DEFAULT_U};
use qite_core::ite::{energy_expectation, ite_state};
use qite_core::pauli::{PauliLetter, PauliString};
use qite_core::qite::{qite_evolve, DomainSet, QiteConfig};
use qite_core::runner::{default_box_side, ExperimentConfig, InstanceSource};
use qite_core::sampler::ShotSampler;
use qite_core::state::StateVector;

use common::{dense_hamiltonian, dense_pauli};

fn letter(code: u8) -> Option<PauliLetter> {
    match code {
        1 => Some(PauliLetter::X),
        2 => Some(PauliLetter::Y),
        3 => Some(PauliLetter::Z),
        _ => None,
    }
}

fn pauli_from_codes(codes: &[u8]) -> PauliString {
    let support: Vec<_> = codes
        .iter()
        .enumerate()
        .filter_map(|(q, &c)| letter(c).map(|l| (q, l)))
        .collect();
    PauliString::from_support(&support).unwrap()
}

fn letters(codes: &[u8]) -> Vec<char> {
    codes.iter().map(|&c| ['I', 'X', 'Y', 'Z'][c as usize]).collect()
}

fn udmis(n: usize, seed: u64) -> (UnitDiskGraph, DiagonalHamiltonian) {
    let g = UnitDiskGraph::random_unit_disk(n, default_box_side(n), seed).unwrap();
    let h = DiagonalHamiltonian::from_udmis(&g, DEFAULT_U).unwrap();
    (g, h)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pauli_product_matches_dense(a in prop::collection::vec(0u8..4, 4), b in prop::collection::vec(0u8..4, 4)) {
        let (pa, pb) = (pauli_from_codes(&a), pauli_from_codes(&b));
        let (phase, prod) = pa.mul(&pb);
        let prod_codes: Vec<u8> = (0..4)
            .map(|q| match prod.letter_at(q) {
                Some(PauliLetter::X) => 1,
                Some(PauliLetter::Y) => 2,
                Some(PauliLetter::Z) => 3,
                None => 0,
            })
            .collect();
        let lhs = dense_pauli(&letters(&a)) * dense_pauli(&letters(&b));
        let rhs = dense_pauli(&letters(&prod_codes)) * phase;
        prop_assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn pauli_multiplication_is_associative(
        a in prop::collection::vec(0u8..4, 5),
        b in prop::collection::vec(0u8..4, 5),
        c in prop::collection::vec(0u8..4, 5),
    ) {
        let (pa, pb, pc) = (pauli_from_codes(&a), pauli_from_codes(&b), pauli_from_codes(&c));
        let (p1, ab) = pa.mul(&pb);
        let (p2, left) = ab.mul(&pc);
        let (p3, bc) = pb.mul(&pc);
        let (p4, right) = pa.mul(&bc);
        prop_assert_eq!(left, right);
        prop_assert!((p1 * p2 - p3 * p4).norm() < 1e-15);
    }

    #[test]
    fn pauli_text_roundtrip(a in prop::collection::vec(0u8..4, 8)) {
        let p = pauli_from_codes(&a);
        prop_assert_eq!(p.to_string().parse::<PauliString>().unwrap(), p);
    }

    #[test]
    fn energies_match_dense_diagonal(seed in any::<u64>()) {
        let h = random_diagonal_hamiltonian(5, seed).unwrap();
        let dense = dense_hamiltonian(&h);
        for (i, e) in h.energies().iter().enumerate() {
            prop_assert!((dense[(i, i)].re - e).abs() < 1e-12);
        }
    }

    #[test]
    fn ground_states_are_maximum_independent_sets(n in 1usize..=8, seed in any::<u64>()) {
        let (g, h) = udmis(n, seed);
        let spectrum = h.spectrum().unwrap();
        let mis = g.brute_force_mis().unwrap();
        prop_assert_eq!(spectrum.level_bitstrings(0), mis.witnesses);
        prop_assert!((spectrum.ground_energy() + mis.size as f64).abs() < 1e-9);
    }

    #[test]
    fn graph_text_roundtrip(n in 1usize..=10, seed in any::<u64>()) {
        let (g, _) = udmis(n, seed);
        prop_assert_eq!(UnitDiskGraph::parse(&g.to_text()).unwrap(), g);
    }

    #[test]
    fn ite_energy_decreases(seed in any::<u64>(), t1 in 0.0f64..5.0, dt in 0.0f64..5.0) {
        let h = random_diagonal_hamiltonian(5, seed).unwrap();
        let e1 = energy_expectation(&ite_state(&h, t1).unwrap(), &h).unwrap();
        let e2 = energy_expectation(&ite_state(&h, t1 + dt).unwrap(), &h).unwrap();
        prop_assert!(e2 <= e1 + 1e-12);
    }

    #[test]
    fn ite_failure_respects_bound(seed in any::<u64>(), t in 0.0f64..20.0, frac in 0.0f64..=1.0) {
        let h = random_diagonal_hamiltonian(6, seed).unwrap();
        let spectrum = h.spectrum().unwrap();
        if let Some(gap) = spectrum.gap() {
            let delta_e = frac * gap;
            let pf = failure_prob_ite_closed(&spectrum, t, delta_e).unwrap();
            let direct = failure_prob(&ite_state(&h, t).unwrap(), &spectrum, delta_e).unwrap();
            prop_assert!((pf - direct).abs() < 1e-10);
            let bound = thm1_bound(t, delta_e, spectrum.ground_degeneracy(), spectrum.dim()).unwrap();
            prop_assert!(pf <= bound + 1e-12);
        }
    }

    #[test]
    fn thm2_never_fails_for_nearby_states(seed in any::<u64>(), t in 0.0f64..3.0, dt in 0.0f64..0.5) {
        // Two ITE states are a valid pair for the bound at any distance.
        let h = random_diagonal_hamiltonian(5, seed).unwrap();
        let spectrum = h.spectrum().unwrap();
        let (a, b) = (ite_state(&h, t).unwrap(), ite_state(&h, t + dt).unwrap());
        let eps = a.norm_distance(&b).unwrap();
        let pa = failure_prob(&a, &spectrum, 0.0).unwrap();
        let pb = failure_prob(&b, &spectrum, 0.0).unwrap();
        prop_assert!(thm2_check(eps, pb, pa).holds);
    }

    #[test]
    fn qite_preserves_norm(n in 2usize..=6, seed in any::<u64>(), tau in 0.001f64..0.2, b_domain in any::<bool>()) {
        let (g, h) = udmis(n, seed);
        let domains = if b_domain {
            DomainSet::build_domain_b(&h, &g, seed).unwrap()
        } else {
            DomainSet::build_domain_a(&h)
        };
        let cfg = QiteConfig { tau, n_max: 10, record_every: 1, ..QiteConfig::default() };
        let run = qite_evolve(&h, &domains, &cfg).unwrap();
        prop_assert!(run.trace.max_norm_drift < 1e-10);
        for snap in &run.trace.snapshots {
            prop_assert!((snap.state.norm() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn qite_reruns_are_bit_identical(n in 2usize..=6, seed in any::<u64>()) {
        let (g, h) = udmis(n, seed);
        let domains = DomainSet::build_domain_b(&h, &g, seed).unwrap();
        let cfg = QiteConfig { n_max: 5, ..QiteConfig::default() };
        let a = qite_evolve(&h, &domains, &cfg).unwrap().final_state.to_bytes();
        let b = qite_evolve(&h, &domains, &cfg).unwrap().final_state.to_bytes();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn state_bytes_roundtrip(n in 1usize..=6, index in any::<usize>()) {
        let s = StateVector::basis_state(n, index % (1 << n)).unwrap();
        let back = StateVector::from_bytes(&s.to_bytes()).unwrap();
        prop_assert_eq!(back.to_bytes(), s.to_bytes());
    }

    #[test]
    fn shots_land_on_support(n in 1usize..=6, seed in any::<u64>()) {
        let (_, h) = udmis(n, seed);
        let s = ite_state(&h, 50.0).unwrap();
        let probs = s.probabilities();
        for idx in ShotSampler::new(&s).sample_many(200, seed) {
            prop_assert!(probs[idx] > 0.0);
        }
    }

    #[test]
    fn config_toml_roundtrip(count in 1usize..50, n in 1usize..10, seed in any::<u64>(), tau in 0.001f64..1.0) {
        let cfg = ExperimentConfig {
            instance: InstanceSource::Random { count, n, box_side: Some(1.5), master_seed: seed },
            qite: QiteConfig { tau, ..QiteConfig::default() },
            ..ExperimentConfig::default()
        };
        let back = ExperimentConfig::from_toml_str(&cfg.to_toml_string().unwrap()).unwrap();
        prop_assert_eq!(back, cfg);
    }
}
