//! Measurement counts, probability and quasi-probability distributions, and
//! the comparison metrics reported by every experiment.
//!
//! Bitstrings are little-endian in display: the character at position `k`
//! counted from the right holds qubit (or classical bit) `k`. Keys missing
//! from a distribution are implicit zeros everywhere.

use std::cmp::Ordering;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance on `Σ p = 1` for [`ProbDist`] and [`QuasiDist`].
pub const NORMALIZATION_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum DistError {
    #[error("bitstring is empty")]
    EmptyBitString,
    #[error("invalid bitstring {0:?}: only '0' and '1' are allowed")]
    InvalidBitString(String),
    #[error("bitstring of width {0} exceeds the supported maximum of 128")]
    BitStringTooWide(usize),
    #[error("bitstring width mismatch: expected {expected}, found {found}")]
    WidthMismatch { expected: usize, found: usize },
    #[error("shots must be positive")]
    ZeroShots,
    #[error("counts sum to {sum} but shots is {shots}")]
    ShotMismatch { sum: u64, shots: u64 },
    #[error("distribution has no entries")]
    Empty,
    #[error("distribution sums to {0}, expected 1")]
    NotNormalized(f64),
    #[error("negative or non-finite probability {value} for {key}")]
    InvalidProbability { key: BitString, value: f64 },
    #[error("quasi-distribution has no positive mass")]
    NoPositiveMass,
    #[error("i/o error: {0}")]
    Io(String),
    #[error("malformed counts json: {0}")]
    Json(String),
}

/// Widest outcome label a [`BitString`] can hold.
pub const MAX_BITSTRING_WIDTH: usize = 128;

/// A measured outcome label, stored packed so keys copy and hash cheaply.
/// Ordering matches the lexicographic order of the written label.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct BitString {
    // Two words rather than a u128 keep the key at 8-byte alignment.
    lo: u64,
    hi: u64,
    width: u8,
}

impl BitString {
    fn packed(bits: u128, len: usize) -> Self {
        Self { lo: bits as u64, hi: (bits >> 64) as u64, width: (len - 1) as u8 }
    }

    /// Bit `k` is qubit `k`, i.e. character `len − 1 − k` of the label.
    fn value(&self) -> u128 {
        (u128::from(self.hi) << 64) | u128::from(self.lo)
    }

    /// Builds the `width`-character label of basis index `index`
    /// (bit `k` of `index` lands at position `k` from the right).
    pub fn from_index(index: usize, width: usize) -> Self {
        assert!((1..=MAX_BITSTRING_WIDTH).contains(&width), "bitstring width must be in 1..=128");
        let bits = index as u128;
        let bits = if width < 128 { bits & ((1u128 << width) - 1) } else { bits };
        Self::packed(bits, width)
    }

    /// Builds a label from bits given in qubit order (`bits[0]` is qubit 0).
    pub fn from_bits(bits: &[bool]) -> Self {
        assert!((1..=MAX_BITSTRING_WIDTH).contains(&bits.len()), "bitstring width must be in 1..=128");
        let packed = bits.iter().enumerate().fold(0u128, |acc, (k, &b)| acc | (u128::from(b) << k));
        Self::packed(packed, bits.len())
    }

    pub fn all_ones(width: usize) -> Self {
        Self::from_bits(&vec![true; width])
    }

    pub fn zeros(width: usize) -> Self {
        Self::from_bits(&vec![false; width])
    }

    pub fn len(&self) -> usize {
        usize::from(self.width) + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Value of qubit `k` (position `k` from the right).
    pub fn bit(&self, k: usize) -> bool {
        assert!(k < self.len(), "qubit {k} out of range for width {}", self.len());
        (self.value() >> k) & 1 == 1
    }

    /// Bits in qubit order.
    pub fn bits(&self) -> Vec<bool> {
        (0..self.len()).map(|k| self.bit(k)).collect()
    }

    /// Basis index; the width must not exceed 64.
    pub fn to_index(&self) -> u64 {
        self.lo
    }

    pub fn count_ones(&self) -> usize {
        (self.lo.count_ones() + self.hi.count_ones()) as usize
    }

    /// Number of qubits set in both labels.
    pub fn overlap(&self, other: &BitString) -> usize {
        ((self.lo & other.lo).count_ones() + (self.hi & other.hi).count_ones()) as usize
    }
}

impl Ord for BitString {
    fn cmp(&self, other: &Self) -> Ordering {
        // Compare the shared leading characters, then the shorter label wins.
        let common = self.len().min(other.len());
        let a = self.value() >> (self.len() - common);
        let b = other.value() >> (other.len() - common);
        a.cmp(&b).then(self.len().cmp(&other.len()))
    }
}

impl PartialOrd for BitString {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl FromStr for BitString {
    type Err = DistError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.is_empty() {
            return Err(DistError::EmptyBitString);
        }
        if !s.bytes().all(|b| b == b'0' || b == b'1') {
            return Err(DistError::InvalidBitString(s.to_string()));
        }
        if s.len() > MAX_BITSTRING_WIDTH {
            return Err(DistError::BitStringTooWide(s.len()));
        }
        let bits = s.bytes().fold(0u128, |acc, b| (acc << 1) | u128::from(b == b'1'));
        Ok(Self::packed(bits, s.len()))
    }
}

impl TryFrom<String> for BitString {
    type Error = DistError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<BitString> for String {
    fn from(b: BitString) -> Self {
        b.to_string()
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut buf = [0u8; MAX_BITSTRING_WIDTH];
        let n = self.len();
        for (i, c) in buf[..n].iter_mut().enumerate() {
            *c = if self.bit(n - 1 - i) { b'1' } else { b'0' };
        }
        f.write_str(std::str::from_utf8(&buf[..n]).expect("ascii digits"))
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString(\"{self}\")")
    }
}

/// Anything that names an outcome: label text or a [`BitString`].
pub trait OutcomeLabel {
    fn to_bitstring(&self) -> Result<BitString, DistError>;
}

impl OutcomeLabel for BitString {
    fn to_bitstring(&self) -> Result<BitString, DistError> {
        Ok(*self)
    }
}

impl OutcomeLabel for &BitString {
    fn to_bitstring(&self) -> Result<BitString, DistError> {
        Ok(**self)
    }
}

impl OutcomeLabel for &str {
    fn to_bitstring(&self) -> Result<BitString, DistError> {
        self.parse()
    }
}

impl OutcomeLabel for String {
    fn to_bitstring(&self) -> Result<BitString, DistError> {
        self.parse()
    }
}

impl OutcomeLabel for &String {
    fn to_bitstring(&self) -> Result<BitString, DistError> {
        self.parse()
    }
}

fn common_width<'a>(keys: impl Iterator<Item = &'a BitString>) -> Result<usize, DistError> {
    let mut width = None;
    for key in keys {
        match width {
            None => width = Some(key.len()),
            Some(w) if w != key.len() => {
                return Err(DistError::WidthMismatch { expected: w, found: key.len() })
            }
            Some(_) => {}
        }
    }
    width.ok_or(DistError::Empty)
}

/// Histogram of measured bitstrings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CountsRepr", into = "CountsRepr")]
pub struct Counts {
    entries: IndexMap<BitString, u64>,
    shots: u64,
}

#[derive(Serialize, Deserialize)]
struct CountsRepr {
    shots: u64,
    counts: IndexMap<BitString, u64>,
}

impl TryFrom<CountsRepr> for Counts {
    type Error = DistError;

    fn try_from(r: CountsRepr) -> Result<Self, Self::Error> {
        Counts::new(r.counts, r.shots)
    }
}

impl From<Counts> for CountsRepr {
    fn from(c: Counts) -> Self {
        CountsRepr { shots: c.shots, counts: c.entries }
    }
}

impl Counts {
    pub fn new(entries: IndexMap<BitString, u64>, shots: u64) -> Result<Self, DistError> {
        if shots == 0 {
            return Err(DistError::ZeroShots);
        }
        common_width(entries.keys())?;
        let sum: u64 = entries.values().sum();
        if sum != shots {
            return Err(DistError::ShotMismatch { sum, shots });
        }
        Ok(Self { entries, shots })
    }

    /// Builds counts whose shot total is the sum of the tallies.
    pub fn from_tallies<I, K>(tallies: I) -> Result<Self, DistError>
    where
        I: IntoIterator<Item = (K, u64)>,
        K: OutcomeLabel,
    {
        let mut entries = IndexMap::new();
        for (k, n) in tallies {
            *entries.entry(k.to_bitstring()?).or_insert(0) += n;
        }
        let shots = entries.values().sum();
        Self::new(entries, shots)
    }

    pub fn shots(&self) -> u64 {
        self.shots
    }

    pub fn width(&self) -> usize {
        self.entries.keys().next().map_or(0, BitString::len)
    }

    pub fn get(&self, key: &BitString) -> u64 {
        self.entries.get(key).copied().unwrap_or(0)
    }

    pub fn entries(&self) -> &IndexMap<BitString, u64> {
        &self.entries
    }

    pub fn iter(&self) -> impl Iterator<Item = (&BitString, u64)> {
        self.entries.iter().map(|(k, &v)| (k, v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Outcomes with a non-zero tally.
    pub fn support(&self) -> impl Iterator<Item = &BitString> {
        self.entries.iter().filter(|(_, &n)| n > 0).map(|(k, _)| k)
    }

    pub fn from_json_str(s: &str) -> Result<Self, DistError> {
        serde_json::from_str(s).map_err(|e| DistError::Json(e.to_string()))
    }

    /// Loads the provider-agnostic `{"shots": N, "counts": {...}}` file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, DistError> {
        let text = std::fs::read_to_string(path).map_err(|e| DistError::Io(e.to_string()))?;
        Self::from_json_str(&text)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(self).expect("counts serialize")
    }
}

fn check_entries(entries: &IndexMap<BitString, f64>, allow_negative: bool) -> Result<(), DistError> {
    common_width(entries.keys())?;
    for (k, &v) in entries {
        if !v.is_finite() || (!allow_negative && v < 0.0) {
            return Err(DistError::InvalidProbability { key: *k, value: v });
        }
    }
    let sum: f64 = entries.values().sum();
    if (sum - 1.0).abs() > NORMALIZATION_TOL {
        return Err(DistError::NotNormalized(sum));
    }
    Ok(())
}

/// Non-negative distribution summing to one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "IndexMap<BitString, f64>", into = "IndexMap<BitString, f64>")]
pub struct ProbDist {
    entries: IndexMap<BitString, f64>,
}

impl TryFrom<IndexMap<BitString, f64>> for ProbDist {
    type Error = DistError;

    fn try_from(entries: IndexMap<BitString, f64>) -> Result<Self, Self::Error> {
        Self::new(entries)
    }
}

impl From<ProbDist> for IndexMap<BitString, f64> {
    fn from(p: ProbDist) -> Self {
        p.entries
    }
}

impl ProbDist {
    pub fn new(entries: IndexMap<BitString, f64>) -> Result<Self, DistError> {
        check_entries(&entries, false)?;
        Ok(Self { entries })
    }

    /// Convenience constructor from `(label, probability)` pairs.
    pub fn from_pairs<I, K>(pairs: I) -> Result<Self, DistError>
    where
        I: IntoIterator<Item = (K, f64)>,
        K: OutcomeLabel,
    {
        let mut entries = IndexMap::new();
        for (k, v) in pairs {
            *entries.entry(k.to_bitstring()?).or_insert(0.0) += v;
        }
        Self::new(entries)
    }

    /// Divides non-negative weights by their total.
    pub fn normalized(weights: IndexMap<BitString, f64>) -> Result<Self, DistError> {
        common_width(weights.keys())?;
        for (k, &v) in &weights {
            if !v.is_finite() || v < 0.0 {
                return Err(DistError::InvalidProbability { key: *k, value: v });
            }
        }
        let total: f64 = weights.values().sum();
        if total <= 0.0 {
            return Err(DistError::NoPositiveMass);
        }
        let entries = weights.into_iter().map(|(k, v)| (k, v / total)).collect();
        Ok(Self { entries })
    }

    pub fn get(&self, key: &BitString) -> f64 {
        self.entries.get(key).copied().unwrap_or(0.0)
    }

    pub fn width(&self) -> usize {
        self.entries.keys().next().map_or(0, BitString::len)
    }

    pub fn entries(&self) -> &IndexMap<BitString, f64> {
        &self.entries
    }

    pub fn iter(&self) -> impl Iterator<Item = (&BitString, f64)> {
        self.entries.iter().map(|(k, &v)| (k, v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Outcomes with positive probability.
    pub fn support(&self) -> impl Iterator<Item = &BitString> {
        self.entries.iter().filter(|(_, &v)| v > 0.0).map(|(k, _)| k)
    }

    /// The most probable outcome; ties go to the lexicographically smallest key.
    pub fn argmax(&self) -> &BitString {
        self.entries
            .iter()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap_or(Ordering::Equal).then_with(|| b.0.cmp(a.0)))
            .map(|(k, _)| k)
            .expect("distribution is non-empty")
    }
}

/// Real-valued distribution summing to one; entries may be negative.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "IndexMap<BitString, f64>", into = "IndexMap<BitString, f64>")]
pub struct QuasiDist {
    entries: IndexMap<BitString, f64>,
}

impl TryFrom<IndexMap<BitString, f64>> for QuasiDist {
    type Error = DistError;

    fn try_from(entries: IndexMap<BitString, f64>) -> Result<Self, Self::Error> {
        Self::new(entries)
    }
}

impl From<QuasiDist> for IndexMap<BitString, f64> {
    fn from(q: QuasiDist) -> Self {
        q.entries
    }
}

impl QuasiDist {
    pub fn new(entries: IndexMap<BitString, f64>) -> Result<Self, DistError> {
        check_entries(&entries, true)?;
        Ok(Self { entries })
    }

    pub fn from_pairs<I, K>(pairs: I) -> Result<Self, DistError>
    where
        I: IntoIterator<Item = (K, f64)>,
        K: OutcomeLabel,
    {
        let mut entries = IndexMap::new();
        for (k, v) in pairs {
            *entries.entry(k.to_bitstring()?).or_insert(0.0) += v;
        }
        Self::new(entries)
    }

    pub fn get(&self, key: &BitString) -> f64 {
        self.entries.get(key).copied().unwrap_or(0.0)
    }

    pub fn width(&self) -> usize {
        self.entries.keys().next().map_or(0, BitString::len)
    }

    pub fn entries(&self) -> &IndexMap<BitString, f64> {
        &self.entries
    }

    pub fn iter(&self) -> impl Iterator<Item = (&BitString, f64)> {
        self.entries.iter().map(|(k, &v)| (k, v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Parity expectation computed directly on the quasi-probabilities.
    pub fn parity_expectation(&self, mask: &BitString) -> Result<f64, DistError> {
        parity_over(self.iter(), self.width(), mask)
    }
}

/// `count / shots` for every outcome, keys and order preserved.
pub fn counts_to_probs(counts: &Counts) -> Result<ProbDist, DistError> {
    if counts.shots == 0 {
        return Err(DistError::ZeroShots);
    }
    let shots = counts.shots as f64;
    let mut entries: IndexMap<BitString, f64> =
        counts.entries.iter().map(|(k, &n)| (*k, n as f64 / shots)).collect();
    // Guard against accumulated rounding in the quotient sum.
    let sum: f64 = entries.values().sum();
    if sum != 1.0 {
        entries.values_mut().for_each(|v| *v /= sum);
    }
    ProbDist::new(entries)
}

/// Largest-remainder rounding of `probs × shots`; the result sums to `shots`
/// exactly. Equal remainders are broken by lexicographic key order.
pub fn probs_to_counts(probs: &ProbDist, shots: u64) -> Result<Counts, DistError> {
    if shots == 0 {
        return Err(DistError::ZeroShots);
    }
    let keys: Vec<&BitString> = probs.entries.keys().collect();
    let tallies = largest_remainder(probs.entries.values().copied(), &keys, shots);
    let entries = keys.into_iter().cloned().zip(tallies).collect();
    Counts::new(entries, shots)
}

/// Integer tallies for `values × shots` summing to `shots`. Leftover shots go
/// to the largest fractional parts, ties broken by ascending key.
pub(crate) fn largest_remainder(values: impl Iterator<Item = f64>, keys: &[&BitString], shots: u64) -> Vec<u64> {
    let total = shots as f64;
    let mut floors = Vec::with_capacity(keys.len());
    let mut remainders = Vec::with_capacity(keys.len());
    for (i, p) in values.enumerate() {
        let x = p * total;
        let nearest = x.round();
        // Products that are integral up to rounding noise count as exact.
        let (fl, rem) = if (x - nearest).abs() <= 1e-9 * x.abs().max(1.0) {
            (nearest, 0.0)
        } else {
            (x.floor(), x - x.floor())
        };
        floors.push(fl.max(0.0) as u64);
        remainders.push((i, rem));
    }
    let n = floors.len() as u64;
    let assigned: u64 = floors.iter().sum();
    if assigned <= shots {
        let deficit = shots - assigned;
        let (rounds, partial) = (deficit / n, (deficit % n) as usize);
        if rounds > 0 {
            floors.iter_mut().for_each(|f| *f += rounds);
        }
        if partial > 0 {
            let by_remainder = |a: &(usize, f64), b: &(usize, f64)| {
                b.1.partial_cmp(&a.1).unwrap_or(Ordering::Equal).then_with(|| keys[a.0].cmp(keys[b.0]))
            };
            remainders.select_nth_unstable_by(partial - 1, by_remainder);
            for &(i, _) in &remainders[..partial] {
                floors[i] += 1;
            }
        }
    } else {
        // Only reachable when the input sums slightly above one.
        remainders.sort_by(|a, b| {
            a.1.partial_cmp(&b.1).unwrap_or(Ordering::Equal).then_with(|| keys[b.0].cmp(keys[a.0]))
        });
        let mut excess = assigned - shots;
        for &(i, _) in remainders.iter().cycle() {
            if excess == 0 {
                break;
            }
            if floors[i] > 0 {
                floors[i] -= 1;
                excess -= 1;
            }
        }
    }
    floors
}

/// `(Σ √(p_i q_i))²` over the union of keys.
pub fn hellinger_fidelity(p: &ProbDist, q: &ProbDist) -> f64 {
    let overlap: f64 = p.iter().map(|(k, pv)| (pv * q.get(k)).sqrt()).sum();
    (overlap * overlap).min(1.0)
}

/// `½ Σ |p_i − q_i|` over the union of keys.
pub fn total_variation(p: &ProbDist, q: &ProbDist) -> f64 {
    let mut tv: f64 = p.iter().map(|(k, pv)| (pv - q.get(k)).abs()).sum();
    tv += q.iter().filter(|(k, _)| !p.entries.contains_key(*k)).map(|(_, v)| v).sum::<f64>();
    0.5 * tv
}

pub fn success_probability(p: &ProbDist, target: &BitString) -> Result<f64, DistError> {
    if p.width() != target.len() {
        return Err(DistError::WidthMismatch { expected: p.width(), found: target.len() });
    }
    Ok(p.get(target))
}

/// `Σ p(x)·(−1)^popcount(x & mask)`.
pub fn parity_expectation(p: &ProbDist, mask: &BitString) -> Result<f64, DistError> {
    parity_over(p.iter(), p.width(), mask)
}

fn parity_over<'a>(
    entries: impl Iterator<Item = (&'a BitString, f64)>,
    width: usize,
    mask: &BitString,
) -> Result<f64, DistError> {
    if width != mask.len() {
        return Err(DistError::WidthMismatch { expected: width, found: mask.len() });
    }
    Ok(entries
        .map(|(k, v)| if k.overlap(mask) % 2 == 1 { -v } else { v })
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    #[test]
    fn bitstring_validation_and_order() {
        assert_eq!("".parse::<BitString>(), Err(DistError::EmptyBitString));
        assert!(matches!("01a".parse::<BitString>(), Err(DistError::InvalidBitString(_))));
        let b = bs("110");
        assert!(!b.bit(0));
        assert!(b.bit(1));
        assert!(b.bit(2));
        assert_eq!(b.to_index(), 6);
        assert_eq!(BitString::from_index(6, 3), b);
        assert_eq!(BitString::from_bits(&[false, true, true]), b);
        assert_eq!("1".repeat(129).parse::<BitString>(), Err(DistError::BitStringTooWide(129)));
        let wide = BitString::all_ones(128);
        assert_eq!(wide.to_string(), "1".repeat(128));
        assert!(bs("01") < bs("010") && bs("010") < bs("1"));
        assert_eq!(serde_json::to_string(&b).unwrap(), "\"110\"");
    }

    #[test]
    fn counts_reject_bad_input() {
        let mut e = IndexMap::new();
        e.insert(bs("0"), 3);
        assert_eq!(Counts::new(e.clone(), 0), Err(DistError::ZeroShots));
        assert_eq!(Counts::new(e.clone(), 4), Err(DistError::ShotMismatch { sum: 3, shots: 4 }));
        e.insert(bs("01"), 1);
        assert!(matches!(Counts::new(e, 4), Err(DistError::WidthMismatch { .. })));
    }

    #[test]
    fn counts_json_shape() {
        let c = Counts::from_json_str(r#"{"shots": 3, "counts": {"01": 2, "10": 1}}"#).unwrap();
        assert_eq!(c.get(&bs("01")), 2);
        let back = Counts::from_json_str(&c.to_json_string()).unwrap();
        assert_eq!(back, c);
        assert!(Counts::from_json_str(r#"{"shots": 5, "counts": {"01": 2}}"#).is_err());
    }

    #[test]
    fn counts_to_probs_examples() {
        let p = counts_to_probs(&Counts::from_tallies([("0", 1)]).unwrap()).unwrap();
        assert_eq!(p.get(&bs("0")), 1.0);
        let p = counts_to_probs(&Counts::from_tallies([("00", 500), ("11", 500)]).unwrap()).unwrap();
        assert_eq!(p.get(&bs("00")), 0.5);
        assert_eq!(p.get(&bs("11")), 0.5);
    }

    #[test]
    fn probs_to_counts_examples() {
        let c = probs_to_counts(&ProbDist::from_pairs([("00", 0.5), ("11", 0.5)]).unwrap(), 1000).unwrap();
        assert_eq!((c.get(&bs("00")), c.get(&bs("11"))), (500, 500));

        let c = probs_to_counts(&ProbDist::from_pairs([("0", 0.6667), ("1", 0.3333)]).unwrap(), 3).unwrap();
        assert_eq!((c.get(&bs("0")), c.get(&bs("1"))), (2, 1));

        let c = probs_to_counts(&ProbDist::from_pairs([("1", 1.0)]).unwrap(), 7).unwrap();
        assert_eq!(c.get(&bs("1")), 7);
        assert_eq!(probs_to_counts(&ProbDist::from_pairs([("1", 1.0)]).unwrap(), 0), Err(DistError::ZeroShots));
    }

    #[test]
    fn largest_remainder_ties_are_lexicographic() {
        let p = ProbDist::from_pairs([("11", 0.5), ("10", 0.25), ("01", 0.25)]).unwrap();
        // 0.5·2 = 1 exact; two 0.5 remainders compete for the last shot.
        let c = probs_to_counts(&p, 2).unwrap();
        assert_eq!(c.get(&bs("11")), 1);
        assert_eq!(c.get(&bs("01")), 1);
        assert_eq!(c.get(&bs("10")), 0);
    }

    #[test]
    fn hellinger_examples() {
        let half = ProbDist::from_pairs([("0", 0.5), ("1", 0.5)]).unwrap();
        let zero = ProbDist::from_pairs([("0", 1.0)]).unwrap();
        let one = ProbDist::from_pairs([("1", 1.0)]).unwrap();
        assert!((hellinger_fidelity(&half, &half) - 1.0).abs() < 1e-15);
        assert_eq!(hellinger_fidelity(&zero, &one), 0.0);
        assert!((hellinger_fidelity(&zero, &half) - 0.5).abs() < 1e-15);
        assert!((total_variation(&zero, &half) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn success_probability_examples() {
        let p = ProbDist::from_pairs([("111", 0.9), ("011", 0.1)]).unwrap();
        assert_eq!(success_probability(&p, &bs("111")).unwrap(), 0.9);
        assert_eq!(success_probability(&p, &bs("000")).unwrap(), 0.0);
        assert!(matches!(success_probability(&p, &bs("11")), Err(DistError::WidthMismatch { .. })));
    }

    #[test]
    fn parity_examples() {
        let p = ProbDist::from_pairs([("00", 1.0)]).unwrap();
        assert_eq!(parity_expectation(&p, &bs("11")).unwrap(), 1.0);
        let p = ProbDist::from_pairs([("01", 1.0)]).unwrap();
        assert_eq!(parity_expectation(&p, &bs("01")).unwrap(), -1.0);
        let p = ProbDist::from_pairs([("00", 0.5), ("11", 0.5)]).unwrap();
        assert_eq!(parity_expectation(&p, &bs("11")).unwrap(), 1.0);
        assert!(parity_expectation(&p, &bs("1")).is_err());
    }

    #[test]
    fn quasi_allows_negatives_but_not_bad_sums() {
        assert!(QuasiDist::from_pairs([("0", 1.1), ("1", -0.1)]).is_ok());
        assert!(matches!(QuasiDist::from_pairs([("0", 1.1)]), Err(DistError::NotNormalized(_))));
        assert!(ProbDist::from_pairs([("0", 1.1), ("1", -0.1)]).is_err());
    }
}
