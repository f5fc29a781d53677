//! Cross-checks the bitmask Hamiltonian builder against an independent
//! construction that applies each ladder-operator term to explicit
//! occupation-number kets.

use std::collections::BTreeMap;

use proptest::prelude::*;
use tlschain::model::build_hamiltonian;
use tlschain::{Configuration, ModeLayout, ModelParams, SectorBasis};

/// Occupation list: [qubit, tau_0..tau_{L-1}, ups_0..ups_{L-1}].
type Ket = Vec<u8>;

fn ket_of(c: &Configuration, l: usize) -> Ket {
    let mut k = vec![(c.tau_bits & 1) as u8];
    k.extend((0..l).map(|i| ((c.tau_bits >> (i + 1)) & 1) as u8));
    k.extend((0..l).map(|i| ((c.upsilon_bits >> i) & 1) as u8));
    k
}

fn annihilate(k: &Ket, m: usize) -> Option<Ket> {
    (k[m] == 1).then(|| {
        let mut o = k.clone();
        o[m] = 0;
        o
    })
}

fn create(k: &Ket, m: usize) -> Option<Ket> {
    (k[m] == 0).then(|| {
        let mut o = k.clone();
        o[m] = 1;
        o
    })
}

/// Applies `c†_a c_b + c†_b c_a` with amplitude `j`.
fn hop(k: &Ket, a: usize, b: usize, j: f64, out: &mut BTreeMap<Ket, f64>) {
    if let Some(x) = annihilate(k, b).and_then(|x| create(&x, a)) {
        *out.entry(x).or_default() += j;
    }
    if let Some(x) = annihilate(k, a).and_then(|x| create(&x, b)) {
        *out.entry(x).or_default() += j;
    }
}

fn apply_h(k: &Ket, p: &ModelParams<f64>, l: usize) -> BTreeMap<Ket, f64> {
    let q = 0;
    let tau = |i: usize| 1 + i;
    let ups = |i: usize| 1 + l + i;
    let mut out = BTreeMap::new();
    let mut diag = p.u_q * k[q] as f64;
    for i in 0..l {
        diag += p.u_tau_site[i] * k[tau(i)] as f64;
        diag += p.u_upsilon_site[i] * k[ups(i)] as f64;
        diag += p.u_cross * (k[tau(i)] * k[ups(i)]) as f64;
    }
    *out.entry(k.clone()).or_default() += diag;
    for i in 0..l.saturating_sub(1) {
        hop(k, tau(i), tau(i + 1), p.j_tau, &mut out);
        hop(k, ups(i), ups(i + 1), p.j_upsilon, &mut out);
    }
    hop(k, q, tau(0), p.j_q_tau, &mut out);
    out
}

fn oracle_matrix(p: &ModelParams<f64>, b: &SectorBasis) -> Vec<f64> {
    let l = b.layout().chain_length();
    let kets: Vec<Ket> = b.configs().iter().map(|c| ket_of(c, l)).collect();
    let n = kets.len();
    let mut m = vec![0.0; n * n];
    for (col, k) in kets.iter().enumerate() {
        for (target, amp) in apply_h(k, p, l) {
            let row = kets
                .iter()
                .position(|x| *x == target)
                .expect("H leaves the sector");
            m[row * n + col] += amp;
        }
    }
    m
}

fn params_from(l: usize, v: &[f64]) -> ModelParams<f64> {
    ModelParams {
        j_tau: v[0],
        j_upsilon: v[1],
        u_cross: v[2],
        u_q: v[3],
        j_q_tau: v[4],
        u_tau_site: v[5..5 + l].to_vec(),
        u_upsilon_site: v[5 + l..5 + 2 * l].to_vec(),
    }
}

#[test]
fn reference_parameters_l2_sector_1_1() {
    let b = SectorBasis::enumerate(ModeLayout::new(2).unwrap(), 1, 1).unwrap();
    let p = ModelParams::reference(2);
    let h = build_hamiltonian(&p, &b).unwrap();
    assert_eq!(h.as_row_major(), oracle_matrix(&p, &b).as_slice());
}

#[test]
fn all_sectors_up_to_l3_match_oracle() {
    for l in 1..=3 {
        let mut p = ModelParams::reference(l);
        p.j_q_tau = 0.3;
        p.u_q = 0.7;
        p.j_upsilon = 1.3;
        p.u_tau_site = (0..l).map(|i| 0.1 * i as f64).collect();
        p.u_upsilon_site = (0..l).map(|i| -0.2 * i as f64 + 0.05).collect();
        let layout = ModeLayout::new(l).unwrap();
        for nt in 0..=l + 1 {
            for nu in 0..=l {
                let b = SectorBasis::enumerate(layout, nt, nu).unwrap();
                let h = build_hamiltonian(&p, &b).unwrap();
                let o = oracle_matrix(&p, &b);
                for (x, y) in h.as_row_major().iter().zip(&o) {
                    assert!((x - y).abs() < 1e-14, "L={l} ({nt},{nu})");
                }
            }
        }
    }
}

#[test]
fn trace_equals_eigenvalue_sum() {
    let b = SectorBasis::enumerate(ModeLayout::new(4).unwrap(), 2, 2).unwrap();
    let mut p = ModelParams::reference(4);
    p.u_tau_site = vec![0.3, -0.1, 0.2, 0.5];
    let h = build_hamiltonian(&p, &b).unwrap();
    let s = tlschain::propagation::decompose(&h).unwrap();
    let sum: f64 = s.eigenvalues().iter().sum();
    assert!((sum - h.trace()).abs() < 1e-10);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn random_parameters_hermitian_and_match_oracle(
        l in 1usize..=3,
        v in proptest::collection::vec(-2.0f64..2.0, 11),
        nt_pick in 0usize..5,
        nu_pick in 0usize..4,
    ) {
        let p = params_from(l, &v);
        let b = SectorBasis::enumerate(ModeLayout::new(l).unwrap(), nt_pick % (l + 2), nu_pick % (l + 1)).unwrap();
        let h = build_hamiltonian(&p, &b).unwrap();
        prop_assert!(h.hermiticity_defect() < 1e-12);
        let o = oracle_matrix(&p, &b);
        for (x, y) in h.as_row_major().iter().zip(&o) {
            prop_assert!((x - y).abs() < 1e-13);
        }
    }

    #[test]
    fn larger_chains_stay_hermitian(v in proptest::collection::vec(-2.0f64..2.0, 5 + 12)) {
        let p = params_from(6, &v);
        let b = SectorBasis::enumerate(ModeLayout::new(6).unwrap(), 2, 2).unwrap();
        let h = build_hamiltonian(&p, &b).unwrap();
        prop_assert!(h.hermiticity_defect() < 1e-12);
    }
}
