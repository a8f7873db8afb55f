//! Key expansion: a Fibonacci LFSR, chunking of the running key into m-bit
//! keystream symbols, and the GF(2) bookkeeping the correlation attack needs.
//!
//! Register convention used everywhere in the crate: the register holds cells
//! `0..L`; each clock outputs cell 0, computes the feedback as the XOR of the
//! tapped cells, shifts every cell one place toward index 0 and writes the
//! feedback into cell `L - 1`. The seed bit `s_j` initialises cell `j`, so the
//! first `L` output bits are the seed itself. Taps `T` give the recurrence
//! `a[t + L] = XOR_{j in T} a[t + j]`, i.e. the characteristic polynomial
//! `x^L + sum_{j in T} x^j`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// The shared secret: an ordered bit string `s_0 … s_{|K|-1}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedKey {
    bits: Vec<bool>,
}

impl SeedKey {
    pub fn new(bits: Vec<bool>) -> Result<Self> {
        if bits.len() < 2 {
            return invalid(format!("seed key needs at least 2 bits, got {}", bits.len()));
        }
        Ok(Self { bits })
    }

    /// Seed whose bit `j` is bit `j` of `value`.
    pub fn from_u64(value: u64, len: usize) -> Result<Self> {
        if len > 64 {
            return invalid(format!("cannot build a {len}-bit seed from a u64"));
        }
        if len < 64 && value >> len != 0 {
            return invalid(format!("value {value:#x} does not fit in {len} bits"));
        }
        Self::new((0..len).map(|j| value >> j & 1 == 1).collect())
    }

    /// Inverse of [`SeedKey::from_u64`]; `None` above 64 bits.
    pub fn to_u64(&self) -> Option<u64> {
        (self.bits.len() <= 64).then(|| {
            self.bits
                .iter()
                .enumerate()
                .fold(0u64, |acc, (j, &b)| acc | (u64::from(b) << j))
        })
    }

    /// Parses an ASCII `0`/`1` string, first character = `s_0`.
    pub fn parse(text: &str) -> Result<Self> {
        Self::new(parse_bits(text)?)
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }
}

impl fmt::Display for SeedKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_bits(&self.bits))
    }
}

/// Parses an ASCII `0`/`1` string; the first character is the first bit.
pub fn parse_bits(text: &str) -> Result<Vec<bool>> {
    text.trim()
        .chars()
        .enumerate()
        .map(|(i, c)| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            other => invalid(format!("bit string has {other:?} at position {i}")),
        })
        .collect()
}

pub fn format_bits(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

/// Register length and tap positions of a Fibonacci LFSR.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LfsrSpec {
    length: usize,
    taps: Vec<usize>,
}

/// Primitive characteristic polynomials, as tap sets, for lengths 2..=24.
const PRIMITIVE_TAPS: [&[usize]; 23] = [
    &[0, 1],
    &[0, 1],
    &[0, 1],
    &[0, 2],
    &[0, 1],
    &[0, 1],
    &[0, 2, 3, 4],
    &[0, 4],
    &[0, 3],
    &[0, 2],
    &[0, 1, 4, 6],
    &[0, 1, 3, 4],
    &[0, 1, 6, 10],
    &[0, 1],
    &[0, 1, 3, 12],
    &[0, 3],
    &[0, 7],
    &[0, 1, 2, 5],
    &[0, 3],
    &[0, 2],
    &[0, 1],
    &[0, 5],
    &[0, 1, 2, 7],
];

impl LfsrSpec {
    pub fn new(length: usize, taps: impl IntoIterator<Item = usize>) -> Result<Self> {
        if length == 0 {
            return invalid("LFSR length must be positive");
        }
        let mut taps: Vec<usize> = taps.into_iter().collect();
        taps.sort_unstable();
        taps.dedup();
        if taps.is_empty() {
            return invalid("LFSR tap set is empty");
        }
        if let Some(&bad) = taps.iter().find(|&&t| t >= length) {
            return invalid(format!("tap {bad} out of range for a {length}-cell register"));
        }
        Ok(Self { length, taps })
    }

    /// A maximal-length register (period `2^length - 1`) from the built-in table.
    pub fn primitive(length: usize) -> Result<Self> {
        match length {
            2..=24 => Self::new(length, PRIMITIVE_TAPS[length - 2].iter().copied()),
            _ => invalid(format!("no built-in primitive polynomial of degree {length}")),
        }
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn taps(&self) -> &[usize] {
        &self.taps
    }

    fn tap_mask(&self) -> Option<u64> {
        (self.length <= 64).then(|| self.taps.iter().fold(0, |m, &t| m | 1 << t))
    }

    fn check_seed(&self, seed: &SeedKey) -> Result<()> {
        if seed.len() != self.length {
            return invalid(format!(
                "seed has {} bits but the LFSR has {} cells",
                seed.len(),
                self.length
            ));
        }
        Ok(())
    }
}

/// Word-packed register for lengths up to 64, used on hot paths.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Register {
    state: u64,
    mask: u64,
    top: u32,
}

impl Register {
    /// `seed` holds `s_j` at bit `j`. Panics if the spec is longer than 64.
    pub(crate) fn new(spec: &LfsrSpec, seed: u64) -> Self {
        Self {
            state: seed,
            mask: spec.tap_mask().expect("register longer than 64 cells"),
            top: spec.length as u32 - 1,
        }
    }

    #[inline]
    pub(crate) fn step(&mut self) -> bool {
        let out = self.state & 1 == 1;
        let feedback = u64::from((self.state & self.mask).count_ones() & 1);
        self.state = (self.state >> 1) | (feedback << self.top);
        out
    }

    /// Next `m` output bits as an integer, first bit most significant.
    #[inline]
    pub(crate) fn next_symbol(&mut self, m: u32) -> u32 {
        (0..m).fold(0, |acc, _| (acc << 1) | u32::from(self.step()))
    }
}

/// Runs the LFSR from `seed` and returns the first `nbits` output bits.
pub fn lfsr_expand(seed: &SeedKey, spec: &LfsrSpec, nbits: usize) -> Result<Vec<bool>> {
    spec.check_seed(seed)?;
    if let Some(value) = seed.to_u64() {
        let mut reg = Register::new(spec, value);
        return Ok((0..nbits).map(|_| reg.step()).collect());
    }
    let len = spec.length;
    let mut cells = seed.bits().to_vec();
    let mut head = 0;
    let mut out = Vec::with_capacity(nbits);
    for _ in 0..nbits {
        out.push(cells[head]);
        let feedback = spec
            .taps
            .iter()
            .fold(false, |acc, &t| acc ^ cells[(head + t) % len]);
        cells[head] = feedback;
        head = (head + 1) % len;
    }
    Ok(out)
}

/// One keystream symbol `Z_i`, an integer in `[0, M)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct KeystreamSymbol(u32);

impl KeystreamSymbol {
    pub fn new(value: u32, big_m: u32) -> Result<Self> {
        if value >= big_m {
            return invalid(format!("keystream symbol {value} not below M = {big_m}"));
        }
        Ok(Self(value))
    }

    /// Skips the range check; callers guarantee `value < M`.
    pub(crate) fn new_unchecked(value: u32) -> Self {
        Self(value)
    }

    pub fn value(self) -> u32 {
        self.0
    }
}

impl fmt::Display for KeystreamSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// `log2(M)`; fails unless `M` is a power of two no smaller than 2.
pub fn bits_per_symbol(big_m: u32) -> Result<u32> {
    if big_m < 2 || !big_m.is_power_of_two() {
        return invalid(format!("M = {big_m} is not a power of two >= 2"));
    }
    Ok(big_m.trailing_zeros())
}

/// Splits a running key into m-bit symbols, first bit of each block as MSB.
pub fn chunk_symbols(bits: &[bool], big_m: u32) -> Result<Vec<KeystreamSymbol>> {
    let m = bits_per_symbol(big_m)? as usize;
    if !bits.len().is_multiple_of(m) {
        return invalid(format!(
            "{} key bits do not split into {m}-bit symbols",
            bits.len()
        ));
    }
    Ok(bits
        .chunks(m)
        .map(|block| {
            KeystreamSymbol(block.iter().fold(0, |acc, &b| (acc << 1) | u32::from(b)))
        })
        .collect())
}

/// An affine function over GF(2) of the seed bits.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Gf2LinearForm {
    words: Vec<u64>,
    len: usize,
    constant: bool,
}

impl Gf2LinearForm {
    pub fn zero(len: usize) -> Self {
        Self {
            words: vec![0; len.div_ceil(64)],
            len,
            constant: false,
        }
    }

    /// The form selecting seed bit `j`.
    pub fn unit(len: usize, j: usize) -> Self {
        let mut form = Self::zero(len);
        form.words[j / 64] |= 1 << (j % 64);
        form
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn constant(&self) -> bool {
        self.constant
    }

    pub fn coefficient(&self, j: usize) -> bool {
        self.words[j / 64] >> (j % 64) & 1 == 1
    }

    /// Coefficients packed into a u64 (bit `j` = coefficient of `s_j`).
    pub fn mask(&self) -> Option<u64> {
        (self.len <= 64).then(|| self.words.first().copied().unwrap_or(0))
    }

    pub fn xor_assign(&mut self, other: &Self) {
        debug_assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
        self.constant ^= other.constant;
    }

    pub fn eval(&self, seed: &SeedKey) -> Result<bool> {
        if seed.len() != self.len {
            return invalid(format!(
                "form over {} bits evaluated on a {}-bit seed",
                self.len,
                seed.len()
            ));
        }
        let dot = seed
            .bits()
            .iter()
            .enumerate()
            .fold(false, |acc, (j, &b)| acc ^ (b & self.coefficient(j)));
        Ok(dot ^ self.constant)
    }

    #[inline]
    pub fn eval_u64(&self, seed: u64) -> bool {
        ((self.words[0] & seed).count_ones() & 1 == 1) ^ self.constant
    }
}

/// Symbolic forms for the first `nbits` output bits of the register.
pub fn output_bit_forms(spec: &LfsrSpec, nbits: usize) -> Vec<Gf2LinearForm> {
    let len = spec.length;
    let mut cells: Vec<Gf2LinearForm> = (0..len).map(|j| Gf2LinearForm::unit(len, j)).collect();
    let mut head = 0;
    let mut out = Vec::with_capacity(nbits);
    for _ in 0..nbits {
        out.push(cells[head].clone());
        let mut feedback = Gf2LinearForm::zero(len);
        for &t in &spec.taps {
            feedback.xor_assign(&cells[(head + t) % len]);
        }
        cells[head] = feedback;
        head = (head + 1) % len;
    }
    out
}

/// The `m` forms giving the bits of `Z_i` (1-based slot), MSB first.
pub fn symbol_linear_forms(spec: &LfsrSpec, slot: usize, big_m: u32) -> Result<Vec<Gf2LinearForm>> {
    if slot == 0 {
        return invalid("slot indices start at 1");
    }
    let m = bits_per_symbol(big_m)? as usize;
    let mut forms = output_bit_forms(spec, slot * m);
    Ok(forms.split_off((slot - 1) * m))
}

/// Quadratic output filter over a sliding window:
/// `out_t = in_t ^ (in_{t+1} & in_{t+2}) ^ (in_{t+3} & in_{t+4}) ^ …`
/// with `window / 2` AND terms. `window` must be even; the output is
/// `window` bits shorter than the input. With `window = 2` this is
/// `out_t = in_t ^ (in_{t+1} & in_{t+2})`.
pub fn nonlinear_filter(bits: &[bool], window: usize) -> Result<Vec<bool>> {
    if window < 2 || !window.is_multiple_of(2) {
        return invalid(format!("filter window must be even and >= 2, got {window}"));
    }
    if bits.len() < window + 1 {
        return invalid(format!(
            "filter with window {window} needs at least {} input bits, got {}",
            window + 1,
            bits.len()
        ));
    }
    Ok(bits
        .windows(window + 1)
        .map(|w| {
            w[1..]
                .chunks(2)
                .fold(w[0], |acc, pair| acc ^ (pair[0] & pair[1]))
        })
        .collect())
}

/// Anything that turns a seed key into a running key.
pub trait KeyExpander: Send + Sync {
    fn seed_len(&self) -> usize;

    fn expand(&self, seed: &SeedKey, nbits: usize) -> Result<Vec<bool>>;

    /// Whether every output bit is a GF(2)-linear function of the seed.
    fn is_linear(&self) -> bool;
}

impl KeyExpander for LfsrSpec {
    fn seed_len(&self) -> usize {
        self.length
    }

    fn expand(&self, seed: &SeedKey, nbits: usize) -> Result<Vec<bool>> {
        lfsr_expand(seed, self, nbits)
    }

    fn is_linear(&self) -> bool {
        true
    }
}

/// LFSR followed by [`nonlinear_filter`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilteredLfsr {
    pub spec: LfsrSpec,
    pub window: usize,
}

impl FilteredLfsr {
    pub fn new(spec: LfsrSpec, window: usize) -> Result<Self> {
        if window < 2 || !window.is_multiple_of(2) {
            return invalid(format!("filter window must be even and >= 2, got {window}"));
        }
        Ok(Self { spec, window })
    }
}

impl KeyExpander for FilteredLfsr {
    fn seed_len(&self) -> usize {
        self.spec.length
    }

    fn expand(&self, seed: &SeedKey, nbits: usize) -> Result<Vec<bool>> {
        if nbits == 0 {
            self.spec.check_seed(seed)?;
            return Ok(Vec::new());
        }
        let raw = lfsr_expand(seed, &self.spec, nbits + self.window)?;
        nonlinear_filter(&raw, self.window)
    }

    fn is_linear(&self) -> bool {
        false
    }
}

/// Expands enough bits for `n` symbols and chunks them.
pub fn keystream_symbols(
    expander: &dyn KeyExpander,
    seed: &SeedKey,
    big_m: u32,
    n: usize,
) -> Result<Vec<KeystreamSymbol>> {
    let m = bits_per_symbol(big_m)? as usize;
    let bits = expander.expand(seed, n * m)?;
    chunk_symbols(&bits, big_m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn x4_x_1() -> LfsrSpec {
        LfsrSpec::new(4, [0, 1]).unwrap()
    }

    /// Hand simulation of taps {0,1}, seed s_0 = 1:
    /// a = 1,0,0,0, then a[t+4] = a[t] ^ a[t+1].
    const HAND_SEQUENCE: &str = "100010011010111";

    #[test]
    fn all_zero_seed_is_a_fixed_point() {
        let seed = SeedKey::parse("0000").unwrap();
        let bits = lfsr_expand(&seed, &x4_x_1(), 8).unwrap();
        assert_eq!(format_bits(&bits), "00000000");
    }

    #[test]
    fn hand_simulated_sequence() {
        let seed = SeedKey::parse("1000").unwrap();
        assert!(seed.bits()[0]);
        let bits = lfsr_expand(&seed, &x4_x_1(), 30).unwrap();
        assert!(bits[0]);
        assert_eq!(format_bits(&bits[..15]), HAND_SEQUENCE);
        assert_eq!(bits[..15], bits[15..]);
    }

    /// Exhaustive cycle search on the packed state, independent of `lfsr_expand`.
    fn cycle_length(len: usize, taps: &[usize], start: u64) -> u64 {
        let mask: u64 = taps.iter().map(|&t| 1u64 << t).sum();
        let mut state = start;
        let mut steps = 0;
        loop {
            let fb = (state & mask).count_ones() as u64 & 1;
            state = (state >> 1) | (fb << (len - 1));
            steps += 1;
            if state == start {
                return steps;
            }
        }
    }

    fn output_period(bits: &[bool], max: usize) -> usize {
        (1..=max)
            .find(|&p| (0..bits.len() - p).all(|t| bits[t] == bits[t + p]))
            .unwrap()
    }

    #[test]
    fn primitive_registers_have_maximal_period() {
        for len in [3usize, 4, 5] {
            let spec = LfsrSpec::primitive(len).unwrap();
            let full = (1u64 << len) - 1;
            for seed in 1..=full {
                assert_eq!(cycle_length(len, spec.taps(), seed), full);
                let bits = lfsr_expand(&SeedKey::from_u64(seed, len).unwrap(), &spec, 4 * full as usize).unwrap();
                assert_eq!(output_period(&bits, full as usize), full as usize, "len {len} seed {seed}");
            }
        }
        assert_eq!(output_period(&lfsr_expand(&SeedKey::parse("0110").unwrap(), &x4_x_1(), 60).unwrap(), 15), 15);
    }

    #[test]
    fn whole_primitive_table_is_maximal() {
        for len in 2..=24 {
            let spec = LfsrSpec::primitive(len).unwrap();
            assert_eq!(cycle_length(len, spec.taps(), 1), (1u64 << len) - 1, "degree {len}");
        }
    }

    #[test]
    fn generic_path_matches_packed_register() {
        // A 70-cell register has no packed form; its first 64 cells are
        // exercised against a 64-cell packed run started from the same bits.
        let spec = LfsrSpec::new(70, [0, 3, 9, 41]).unwrap();
        let bits: Vec<bool> = (0..70).map(|j| (j * 7 + 3) % 5 < 2).collect();
        let seed = SeedKey::new(bits.clone()).unwrap();
        let out = lfsr_expand(&seed, &spec, 300).unwrap();
        assert_eq!(&out[..70], &bits[..]);
        for t in 0..230 {
            let expect = spec.taps().iter().fold(false, |acc, &j| acc ^ out[t + j]);
            assert_eq!(out[t + 70], expect);
        }
    }

    #[test]
    fn mismatched_seed_length() {
        let seed = SeedKey::parse("101").unwrap();
        assert!(matches!(lfsr_expand(&seed, &x4_x_1(), 4), Err(crate::Error::InvalidArgument(_))));
    }

    #[test]
    fn spec_validation() {
        assert!(LfsrSpec::new(4, []).is_err());
        assert!(LfsrSpec::new(4, [0, 4]).is_err());
        assert!(SeedKey::new(vec![true]).is_err());
        assert_eq!(SeedKey::from_u64(0b1011, 4).unwrap().to_string(), "1101");
        assert!(SeedKey::from_u64(16, 4).is_err());
    }

    #[test]
    fn chunking_examples() {
        let syms = chunk_symbols(&parse_bits("0110").unwrap(), 4).unwrap();
        assert_eq!(syms.iter().map(|z| z.value()).collect::<Vec<_>>(), vec![1, 2]);
        let syms = chunk_symbols(&parse_bits("111").unwrap(), 8).unwrap();
        assert_eq!(syms[0].value(), 7);
        assert!(chunk_symbols(&parse_bits("10100").unwrap(), 4).is_err());
        assert!(chunk_symbols(&parse_bits("101").unwrap(), 6).is_err());
        assert!(bits_per_symbol(1).is_err());
        assert_eq!(bits_per_symbol(2048).unwrap(), 11);
    }

    #[test]
    fn first_slot_forms_are_identity() {
        let spec = LfsrSpec::primitive(10).unwrap();
        let forms = symbol_linear_forms(&spec, 1, 16).unwrap();
        assert_eq!(forms.len(), 4);
        for (j, f) in forms.iter().enumerate() {
            assert_eq!(*f, Gf2LinearForm::unit(10, j));
            assert!(!f.constant());
        }
        assert!(symbol_linear_forms(&spec, 0, 16).is_err());
    }

    #[test]
    fn forms_vanish_on_zero_seed() {
        let spec = LfsrSpec::primitive(9).unwrap();
        let zero = SeedKey::from_u64(0, 9).unwrap();
        for slot in [1, 5, 40] {
            for f in symbol_linear_forms(&spec, slot, 8).unwrap() {
                assert!(!f.eval(&zero).unwrap());
            }
        }
    }

    #[test]
    fn third_slot_forms_on_x4_x_1() {
        // Bits 4 and 5: a4 = s0 ^ s1, a5 = s1 ^ s2.
        let forms = symbol_linear_forms(&x4_x_1(), 3, 4).unwrap();
        assert_eq!(forms[0].mask(), Some(0b0011));
        assert_eq!(forms[1].mask(), Some(0b0110));
        let mut rng = crate::rng::stream(11, "forms-test", 0);
        use rand::Rng;
        for _ in 0..100 {
            let seed = SeedKey::from_u64(rng.random_range(0..16), 4).unwrap();
            let z = chunk_symbols(&lfsr_expand(&seed, &x4_x_1(), 6).unwrap(), 4).unwrap()[2].value();
            let from_forms = (u32::from(forms[0].eval(&seed).unwrap()) << 1) | u32::from(forms[1].eval(&seed).unwrap());
            assert_eq!(z, from_forms);
        }
    }

    #[test]
    fn forms_agree_with_expansion_on_every_seed() {
        for (len, big_m) in [(6usize, 4u32), (8, 8), (10, 16)] {
            let spec = LfsrSpec::primitive(len).unwrap();
            let slots = 12;
            let m = bits_per_symbol(big_m).unwrap() as usize;
            let forms = output_bit_forms(&spec, slots * m);
            for value in 0..(1u64 << len) {
                let seed = SeedKey::from_u64(value, len).unwrap();
                let bits = lfsr_expand(&seed, &spec, slots * m).unwrap();
                for (f, b) in forms.iter().zip(&bits) {
                    assert_eq!(f.eval_u64(value), *b);
                    assert_eq!(f.eval(&seed).unwrap(), *b);
                }
                let syms = chunk_symbols(&bits, big_m).unwrap();
                let slot_forms = symbol_linear_forms(&spec, slots, big_m).unwrap();
                let z = slot_forms
                    .iter()
                    .fold(0u32, |acc, f| (acc << 1) | u32::from(f.eval_u64(value)));
                assert_eq!(z, syms[slots - 1].value());
            }
        }
    }

    #[test]
    fn filter_examples() {
        assert_eq!(nonlinear_filter(&[false; 8], 2).unwrap(), vec![false; 6]);
        assert_eq!(nonlinear_filter(&[true; 8], 2).unwrap(), vec![false; 6]);
        let out = nonlinear_filter(&parse_bits("10110").unwrap(), 2).unwrap();
        assert_eq!(format_bits(&out), "111");
        assert!(nonlinear_filter(&parse_bits("10").unwrap(), 2).is_err());
        assert!(nonlinear_filter(&parse_bits("10110").unwrap(), 3).is_err());
        // window 4: out_0 = 1 ^ (0&1) ^ (1&1) = 0
        assert_eq!(format_bits(&nonlinear_filter(&parse_bits("10111").unwrap(), 4).unwrap()), "0");
    }

    #[test]
    fn filtered_expander_is_not_linear() {
        let spec = LfsrSpec::primitive(16).unwrap();
        let filtered = FilteredLfsr::new(spec.clone(), 2).unwrap();
        let mut rng = crate::rng::stream(3, "filter-linearity", 0);
        use rand::Rng;
        let mut mismatches = 0;
        for _ in 0..100 {
            let a: u64 = rng.random_range(0..1 << 16);
            let b: u64 = rng.random_range(0..1 << 16);
            let ea = filtered.expand(&SeedKey::from_u64(a, 16).unwrap(), 64).unwrap();
            let eb = filtered.expand(&SeedKey::from_u64(b, 16).unwrap(), 64).unwrap();
            let eab = filtered.expand(&SeedKey::from_u64(a ^ b, 16).unwrap(), 64).unwrap();
            if (0..64).any(|t| eab[t] != (ea[t] ^ eb[t])) {
                mismatches += 1;
            }
        }
        assert!(mismatches >= 1);
        assert!(!filtered.is_linear() && spec.is_linear());
    }

    proptest! {
        #[test]
        fn expansion_is_linear_in_the_seed(a in 0u64..1 << 20, b in 0u64..1 << 20) {
            let spec = LfsrSpec::primitive(20).unwrap();
            let run = |v| lfsr_expand(&SeedKey::from_u64(v, 20).unwrap(), &spec, 200).unwrap();
            let (ea, eb, eab) = (run(a), run(b), run(a ^ b));
            for t in 0..200 {
                prop_assert_eq!(eab[t], ea[t] ^ eb[t]);
            }
        }

        #[test]
        fn seed_text_round_trip(v in 0u64..1 << 30) {
            let seed = SeedKey::from_u64(v, 30).unwrap();
            let back = SeedKey::parse(&seed.to_string()).unwrap();
            prop_assert_eq!(back.to_u64(), Some(v));
        }
    }
}
