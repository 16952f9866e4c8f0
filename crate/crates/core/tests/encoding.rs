use dephasing::encoding::{decode, encode, encode_with, physical_index, LogicalRegister};
use dephasing::linalg::{self, random_density_matrix, CMatrix};
use dephasing::register::{evolve, ghz_amplitudes, pair_exponent, RegisterState, Topology};
use dephasing::spectral::{gamma_quadrature, Dimension, ReservoirSpec};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn spec() -> ReservoirSpec {
    ReservoirSpec::with_ratio(Dimension::One, 100.0).unwrap()
}

fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[test]
fn round_trip_is_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for l in 1..=4 {
        let rho = random_density_matrix(1 << l, &mut rng);
        let reg = encode(&rho, &vec![0.0; l]).unwrap();
        assert_eq!(reg.physical().n_qubits(), 2 * l);
        let back = decode(&reg).unwrap();
        assert!(max_abs_diff(&back.rho, &rho) < 1e-12);
        assert_eq!(back.leaked, 0.0);
    }
}

#[test]
fn code_space_survives_shared_dephasing() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let spec = spec();
    for draw in 0..20 {
        let l = 1 + draw % 3;
        let rho = random_density_matrix(1 << l, &mut rng);
        let pairs: Vec<f64> = (0..l).map(|m| 2.5 * m as f64).collect();
        let reg = encode(&rho, &pairs).unwrap();
        for t in [0.01, 1.0, 30.0] {
            let out = evolve(reg.physical(), &spec, t).unwrap();
            let back = decode(&LogicalRegister::from_physical(out).unwrap()).unwrap();
            assert!(max_abs_diff(&back.rho, &rho) < 1e-12);
            assert!(linalg::fidelity(&back.rho, &rho) >= 1.0 - 1e-10);
        }
    }
}

#[test]
fn bare_register_loses_coherence_quadratically() {
    let spec = spec();
    let t = 0.8;
    let g = gamma_quadrature(&spec, t).unwrap();
    for l in 1..=3usize {
        let bare = RegisterState::from_amplitudes(&ghz_amplitudes(l), vec![0.0; l], Topology::Shared).unwrap();
        let out = evolve(&bare, &spec, t).unwrap();
        let top = (1 << l) - 1;
        let ratio = out.element(top, 0).norm() / bare.element(top, 0).norm();
        let expected = (-((l * l) as f64) * g).exp();
        assert!((ratio - expected).abs() < 1e-12 * expected.max(1e-300) + 1e-15);

        let logical = linalg::pure_state(&ghz_amplitudes(l));
        let enc = encode(&logical, &vec![0.0; l]).unwrap();
        let out = evolve(enc.physical(), &spec, t).unwrap();
        let (a, b) = (physical_index(top, l), physical_index(0, l));
        assert!((out.element(a, b) - enc.physical().element(a, b)).norm() < 1e-15);
    }
}

#[test]
fn two_pairs_on_separate_or_common_reservoirs() {
    // pairs far apart behave as two reservoirs; one spot is a single shared reservoir
    let spec = spec();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let rho = random_density_matrix(4, &mut rng);
    for pairs in [[0.0, 0.0], [0.0, 1e3]] {
        let reg = encode(&rho, &pairs).unwrap();
        for t in [0.5, 50.0] {
            let out = evolve(reg.physical(), &spec, t).unwrap();
            let back = decode(&LogicalRegister::from_physical(out).unwrap()).unwrap();
            assert!(max_abs_diff(&back.rho, &rho) < 1e-12);
        }
    }
}

#[test]
fn intra_pair_offset_degrades_protection_gradually() {
    let spec = ReservoirSpec::with_ratio(Dimension::Three, 10.0).unwrap();
    let t = 5.0;
    let mut previous = 0.0;
    for delta in [0.0, 0.01, 0.05, 0.2] {
        let e = pair_exponent(&spec, 0b10, 0b01, &[0.0, delta], Topology::Shared, t).unwrap();
        assert!(e >= previous, "delta {delta}: {e} < {previous}");
        previous = e;
    }
    assert!(previous > 0.0);

    let plus = linalg::pure_state(&[Complex64::new(1.0, 0.0); 2]);
    let reg = encode_with(&plus, &[0.0], 0.2, Topology::Shared).unwrap();
    let out = evolve(reg.physical(), &spec, t).unwrap();
    let back = decode(&LogicalRegister::from_physical(out).unwrap()).unwrap();
    let f = linalg::fidelity(&back.rho, &plus);
    assert!(f < 1.0 - 1e-6 && f > 0.5);
}
