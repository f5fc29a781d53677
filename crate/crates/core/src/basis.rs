//! Conserved-number sectors of the qubit + two-species chain.
//!
//! Modes are hard-core: every mode holds zero or one excitation. The qubit is
//! stored as mode 0 of the τ register, so the τ register has `L + 1` bits
//! (bit 0 = qubit, bit `i + 1` = τ site `i`) and the υ register has `L` bits
//! (bit `i` = υ site `i`). Site 0 is the chain end attached to the qubit.
//!
//! Because the Hamiltonian conserves the τ-carrier count (qubit included) and
//! the υ count separately, every state lives in a direct sum of sectors of
//! fixed `(N_τ, N_υ)`.

use std::fmt;

use crate::error::{Error, Result};

/// Largest supported chain length. The τ register needs `L + 1` bits of a `u32`.
pub const MAX_CHAIN_LENGTH: usize = 30;

/// Geometry of the registers for a chain of `L` two-species sites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModeLayout {
    chain_length: usize,
}

impl ModeLayout {
    pub fn new(chain_length: usize) -> Result<Self> {
        if chain_length == 0 || chain_length > MAX_CHAIN_LENGTH {
            return Err(Error::InvalidChainLength(chain_length));
        }
        Ok(Self { chain_length })
    }

    #[inline]
    pub fn chain_length(&self) -> usize {
        self.chain_length
    }

    /// Width of the τ register: the qubit plus `L` τ sites.
    #[inline]
    pub fn tau_modes(&self) -> usize {
        self.chain_length + 1
    }

    #[inline]
    pub fn upsilon_modes(&self) -> usize {
        self.chain_length
    }

    /// Checks that `mode` addresses an existing mode.
    pub fn check_mode(&self, mode: Mode) -> Result<()> {
        match mode {
            Mode::Qubit => Ok(()),
            Mode::Tau(i) | Mode::Upsilon(i) if i < self.chain_length => Ok(()),
            other => Err(Error::InvalidMode(format!(
                "{other} does not exist on a chain of length {}",
                self.chain_length
            ))),
        }
    }
}

/// Identifies a single hard-core mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Qubit,
    /// τ species on chain site `i`.
    Tau(usize),
    /// υ species on chain site `i`.
    Upsilon(usize),
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Qubit => write!(f, "qubit"),
            Mode::Tau(i) => write!(f, "tau[{i}]"),
            Mode::Upsilon(i) => write!(f, "upsilon[{i}]"),
        }
    }
}

/// Occupation pattern of both registers.
///
/// Derived ordering compares `tau_bits` first, then `upsilon_bits`, which is
/// the lexicographic order used by [`SectorBasis`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Configuration {
    pub tau_bits: u32,
    pub upsilon_bits: u32,
}

impl Configuration {
    pub const fn new(tau_bits: u32, upsilon_bits: u32) -> Self {
        Self {
            tau_bits,
            upsilon_bits,
        }
    }

    /// Builds a configuration from a qubit occupation and chain-site masks
    /// (bit `i` = site `i` for both species).
    pub const fn from_sites(qubit: bool, tau_sites: u32, upsilon_sites: u32) -> Self {
        Self {
            tau_bits: (tau_sites << 1) | qubit as u32,
            upsilon_bits: upsilon_sites,
        }
    }

    #[inline]
    pub fn qubit_occupied(&self) -> bool {
        self.tau_bits & 1 == 1
    }

    /// τ occupations of the chain sites, without the qubit bit.
    #[inline]
    pub fn tau_sites(&self) -> u32 {
        self.tau_bits >> 1
    }

    #[inline]
    pub fn occupation(&self, mode: Mode) -> bool {
        match mode {
            Mode::Qubit => self.tau_bits & 1 == 1,
            Mode::Tau(i) => (self.tau_bits >> (i + 1)) & 1 == 1,
            Mode::Upsilon(i) => (self.upsilon_bits >> i) & 1 == 1,
        }
    }

    #[inline]
    pub fn n_tau(&self) -> usize {
        self.tau_bits.count_ones() as usize
    }

    #[inline]
    pub fn n_upsilon(&self) -> usize {
        self.upsilon_bits.count_ones() as usize
    }

    /// Ket label in site order, e.g. `|1>_q|0000000>_tau|1100000>_ups`.
    /// The leftmost character of each chain string is site 0.
    pub fn ket_label(&self, layout: &ModeLayout) -> String {
        let sites = |bits: u32| -> String {
            (0..layout.chain_length())
                .map(|i| if (bits >> i) & 1 == 1 { '1' } else { '0' })
                .collect()
        };
        format!(
            "|{}>_q|{}>_tau|{}>_ups",
            self.tau_bits & 1,
            sites(self.tau_sites()),
            sites(self.upsilon_bits)
        )
    }
}

/// Pascal table of binomial coefficients up to `MAX_CHAIN_LENGTH + 1`.
fn binomial_table() -> &'static [[u64; MAX_CHAIN_LENGTH + 2]; MAX_CHAIN_LENGTH + 2] {
    use std::sync::OnceLock;
    static TABLE: OnceLock<[[u64; MAX_CHAIN_LENGTH + 2]; MAX_CHAIN_LENGTH + 2]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = [[0u64; MAX_CHAIN_LENGTH + 2]; MAX_CHAIN_LENGTH + 2];
        for n in 0..t.len() {
            t[n][0] = 1;
            for k in 1..=n {
                t[n][k] = t[n - 1][k - 1] + t[n - 1][k];
            }
        }
        t
    })
}

/// `C(n, k)`, zero when `k > n`.
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    binomial_table()[n][k] as usize
}

/// Rank of `mask` among all masks with the same popcount, in ascending
/// numeric order (combinatorial number system).
fn combinadic_rank(mut mask: u32) -> usize {
    let mut rank = 0;
    let mut k = 1;
    while mask != 0 {
        let pos = mask.trailing_zeros() as usize;
        rank += binomial(pos, k);
        mask &= mask - 1;
        k += 1;
    }
    rank
}

/// All `width`-bit masks with popcount `k`, ascending.
fn masks_with_popcount(width: usize, k: usize) -> Vec<u32> {
    let mut out = Vec::with_capacity(binomial(width, k));
    if k == 0 {
        out.push(0);
        return out;
    }
    let limit = 1u64 << width;
    let mut v: u64 = (1u64 << k) - 1;
    while v < limit {
        out.push(v as u32);
        // Gosper's hack: next larger integer with the same popcount.
        let c = v & v.wrapping_neg();
        let r = v + c;
        v = (((r ^ v) >> 2) / c) | r;
    }
    out
}

/// Ordered basis of one `(N_τ, N_υ)` sector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SectorBasis {
    layout: ModeLayout,
    n_tau: usize,
    n_upsilon: usize,
    configs: Vec<Configuration>,
    upsilon_block: usize,
}

impl SectorBasis {
    /// Enumerates every configuration with the requested excitation numbers.
    ///
    /// `n_tau` counts the qubit excitation together with τ-site excitations.
    pub fn enumerate(layout: ModeLayout, n_tau: usize, n_upsilon: usize) -> Result<Self> {
        if n_tau > layout.tau_modes() {
            return Err(Error::ExcitationOutOfRange {
                species: "tau",
                value: n_tau,
                modes: layout.tau_modes(),
            });
        }
        if n_upsilon > layout.upsilon_modes() {
            return Err(Error::ExcitationOutOfRange {
                species: "upsilon",
                value: n_upsilon,
                modes: layout.upsilon_modes(),
            });
        }
        let taus = masks_with_popcount(layout.tau_modes(), n_tau);
        let ups = masks_with_popcount(layout.upsilon_modes(), n_upsilon);
        let configs = taus
            .iter()
            .flat_map(|&t| ups.iter().map(move |&u| Configuration::new(t, u)))
            .collect();
        Ok(Self {
            layout,
            n_tau,
            n_upsilon,
            configs,
            upsilon_block: ups.len(),
        })
    }

    #[inline]
    pub fn layout(&self) -> &ModeLayout {
        &self.layout
    }

    #[inline]
    pub fn n_tau(&self) -> usize {
        self.n_tau
    }

    #[inline]
    pub fn n_upsilon(&self) -> usize {
        self.n_upsilon
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.configs.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.configs.is_empty()
    }

    #[inline]
    pub fn configs(&self) -> &[Configuration] {
        &self.configs
    }

    #[inline]
    pub fn config(&self, index: usize) -> Configuration {
        self.configs[index]
    }

    pub fn contains(&self, config: &Configuration) -> bool {
        config.n_tau() == self.n_tau
            && config.n_upsilon() == self.n_upsilon
            && (config.tau_bits >> self.layout.tau_modes()) == 0
            && (config.upsilon_bits >> self.layout.upsilon_modes()) == 0
    }

    /// Position of `config` in the basis. O(L) via combinadic ranking.
    pub fn index_of(&self, config: &Configuration) -> Result<usize> {
        if !self.contains(config) {
            return Err(Error::NotInSector {
                tau: config.tau_bits,
                upsilon: config.upsilon_bits,
            });
        }
        Ok(combinadic_rank(config.tau_bits) * self.upsilon_block
            + combinadic_rank(config.upsilon_bits))
    }
}

/// Direct sum of sectors, laid out as contiguous blocks of one state vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SectorSum {
    blocks: Vec<(SectorBasis, usize)>,
    dimension: usize,
}

impl SectorSum {
    pub fn new(sectors: Vec<SectorBasis>) -> Result<Self> {
        for (i, a) in sectors.iter().enumerate() {
            for b in &sectors[i + 1..] {
                if a.layout != b.layout {
                    return Err(Error::IncompatibleSectors(
                        "blocks use different layouts".into(),
                    ));
                }
                if a.n_tau == b.n_tau && a.n_upsilon == b.n_upsilon {
                    return Err(Error::IncompatibleSectors(format!(
                        "sector ({}, {}) listed twice",
                        a.n_tau, a.n_upsilon
                    )));
                }
            }
        }
        let mut offset = 0;
        let blocks = sectors
            .into_iter()
            .map(|s| {
                let o = offset;
                offset += s.len();
                (s, o)
            })
            .collect();
        Ok(Self {
            blocks,
            dimension: offset,
        })
    }

    pub fn single(sector: SectorBasis) -> Self {
        let dimension = sector.len();
        Self {
            blocks: vec![(sector, 0)],
            dimension,
        }
    }

    #[inline]
    pub fn dimension(&self) -> usize {
        self.dimension
    }

    #[inline]
    pub fn blocks(&self) -> &[(SectorBasis, usize)] {
        &self.blocks
    }

    pub fn block_range(&self, block: usize) -> std::ops::Range<usize> {
        let (s, o) = &self.blocks[block];
        *o..*o + s.len()
    }

    /// Block holding sector `(n_tau, n_upsilon)`, if any.
    pub fn find(&self, n_tau: usize, n_upsilon: usize) -> Option<usize> {
        self.blocks
            .iter()
            .position(|(s, _)| s.n_tau == n_tau && s.n_upsilon == n_upsilon)
    }

    /// Global index of `config` across all blocks.
    pub fn index_of(&self, config: &Configuration) -> Result<usize> {
        let block = self
            .find(config.n_tau(), config.n_upsilon())
            .ok_or(Error::NotInSector {
                tau: config.tau_bits,
                upsilon: config.upsilon_bits,
            })?;
        let (sector, offset) = &self.blocks[block];
        Ok(offset + sector.index_of(config)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layout(l: usize) -> ModeLayout {
        ModeLayout::new(l).unwrap()
    }

    #[test]
    fn sector_sizes_match_binomials() {
        assert_eq!(SectorBasis::enumerate(layout(7), 1, 2).unwrap().len(), 168);
        assert_eq!(SectorBasis::enumerate(layout(7), 0, 2).unwrap().len(), 21);
        assert_eq!(SectorBasis::enumerate(layout(3), 1, 1).unwrap().len(), 12);
    }

    #[test]
    fn index_inverts_enumeration() {
        let b = SectorBasis::enumerate(layout(3), 1, 1).unwrap();
        for (k, c) in b.configs().iter().enumerate() {
            assert_eq!(b.index_of(c).unwrap(), k);
        }
    }

    #[test]
    fn first_and_last_configs() {
        let b = SectorBasis::enumerate(layout(5), 2, 3).unwrap();
        let first = *b.configs().iter().min().unwrap();
        let last = *b.configs().iter().max().unwrap();
        assert_eq!(b.index_of(&first).unwrap(), 0);
        assert_eq!(b.index_of(&last).unwrap(), b.len() - 1);
        assert!(b.configs().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn rejects_out_of_range_excitations() {
        assert!(matches!(
            SectorBasis::enumerate(layout(3), 5, 0),
            Err(Error::ExcitationOutOfRange { species: "tau", .. })
        ));
        assert!(matches!(
            SectorBasis::enumerate(layout(3), 0, 4),
            Err(Error::ExcitationOutOfRange {
                species: "upsilon",
                ..
            })
        ));
        assert!(ModeLayout::new(0).is_err());
    }

    #[test]
    fn wrong_popcount_is_not_member() {
        let b = SectorBasis::enumerate(layout(3), 1, 1).unwrap();
        let c = Configuration::new(0b11, 0b1);
        assert!(matches!(b.index_of(&c), Err(Error::NotInSector { .. })));
        // bit beyond the register width
        let c = Configuration::new(0b1, 0b1000);
        assert!(b.index_of(&c).is_err());
    }

    #[test]
    fn empty_and_full_sectors() {
        let full = SectorBasis::enumerate(layout(4), 5, 4).unwrap();
        assert_eq!(full.len(), 1);
        assert_eq!(full.config(0), Configuration::new(0b11111, 0b1111));
        let empty = SectorBasis::enumerate(layout(4), 0, 0).unwrap();
        assert_eq!(empty.config(0), Configuration::new(0, 0));
    }

    #[test]
    fn sector_sum_offsets() {
        let l = layout(7);
        let s0 = SectorBasis::enumerate(l, 0, 2).unwrap();
        let s1 = SectorBasis::enumerate(l, 1, 2).unwrap();
        let sum = SectorSum::new(vec![s0, s1]).unwrap();
        assert_eq!(sum.dimension(), 189);
        assert_eq!(sum.block_range(1), 21..189);
        let c = Configuration::from_sites(true, 0, 0b11);
        let g = sum.index_of(&c).unwrap();
        assert!(g >= 21);
        assert_eq!(sum.blocks()[1].0.config(g - 21), c);
        let dup = SectorBasis::enumerate(l, 0, 2).unwrap();
        assert!(SectorSum::new(vec![dup.clone(), dup]).is_err());
    }

    #[test]
    fn ket_label_puts_site_zero_first() {
        let c = Configuration::from_sites(true, 0, 0b11);
        assert_eq!(c.ket_label(&layout(7)), "|1>_q|0000000>_tau|1100000>_ups");
        assert!(c.occupation(Mode::Qubit));
        assert!(c.occupation(Mode::Upsilon(1)));
        assert!(!c.occupation(Mode::Tau(0)));
    }

    #[test]
    fn check_mode_bounds() {
        let l = layout(3);
        assert!(l.check_mode(Mode::Tau(2)).is_ok());
        assert!(l.check_mode(Mode::Upsilon(3)).is_err());
    }
}
