use proptest::prelude::*;
use tlschain::{Configuration, ModeLayout, SectorBasis};

/// Every (tau, upsilon) bitmask pair filtered by popcount, sorted.
fn brute_force(l: usize, nt: usize, nu: usize) -> Vec<Configuration> {
    let mut out = Vec::new();
    for t in 0u32..(1 << (l + 1)) {
        for u in 0u32..(1 << l) {
            if t.count_ones() as usize == nt && u.count_ones() as usize == nu {
                out.push(Configuration::new(t, u));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn enumeration_matches_brute_force_up_to_l4() {
    for l in 1..=4 {
        let layout = ModeLayout::new(l).unwrap();
        for nt in 0..=l + 1 {
            for nu in 0..=l {
                let b = SectorBasis::enumerate(layout, nt, nu).unwrap();
                assert_eq!(b.configs(), brute_force(l, nt, nu).as_slice(), "L={l} ({nt},{nu})");
            }
        }
    }
}

#[test]
fn index_matches_linear_scan() {
    let b = SectorBasis::enumerate(ModeLayout::new(3).unwrap(), 1, 1).unwrap();
    let scan = |c: &Configuration| b.configs().iter().position(|x| x == c).unwrap();
    for c in [
        Configuration::from_sites(true, 0, 0b100),
        Configuration::from_sites(false, 0b010, 0b001),
        Configuration::from_sites(false, 0b100, 0b010),
    ] {
        assert_eq!(b.index_of(&c).unwrap(), scan(&c));
    }
}

#[test]
fn ordering_is_frozen() {
    // Lexicographic on (tau_bits, upsilon_bits); pinned so output files are
    // comparable across builds.
    let b = SectorBasis::enumerate(ModeLayout::new(3).unwrap(), 1, 1).unwrap();
    let got: Vec<(u32, u32)> = b.configs().iter().map(|c| (c.tau_bits, c.upsilon_bits)).collect();
    let expected = vec![
        (1, 1), (1, 2), (1, 4),
        (2, 1), (2, 2), (2, 4),
        (4, 1), (4, 2), (4, 4),
        (8, 1), (8, 2), (8, 4),
    ];
    assert_eq!(got, expected);
}

proptest! {
    #[test]
    fn index_is_a_bijection(l in 1usize..=7, nt_frac in 0.0f64..=1.0, nu_frac in 0.0f64..=1.0) {
        let nt = ((l + 1) as f64 * nt_frac).round() as usize;
        let nu = (l as f64 * nu_frac).round() as usize;
        let b = SectorBasis::enumerate(ModeLayout::new(l).unwrap(), nt, nu).unwrap();
        let bin = |n: u64, k: u64| (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1));
        prop_assert_eq!(b.len() as u64, bin(l as u64 + 1, nt as u64) * bin(l as u64, nu as u64));
        for (k, c) in b.configs().iter().enumerate() {
            prop_assert_eq!(b.index_of(c).unwrap(), k);
        }
        let again = SectorBasis::enumerate(ModeLayout::new(l).unwrap(), nt, nu).unwrap();
        prop_assert_eq!(b, again);
    }
}
