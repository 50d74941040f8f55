//! Superimposed ACK patterns.
//!
//! Each receiver embeds a bit pattern in its ACK. When several receivers
//! acknowledge in the same slot the patterns superimpose, and a bit position
//! reads hot as soon as any transmitter drove it hot (energy presence, no
//! power-level comparison). One-hot patterns of length `population` keep
//! every non-empty subset of ACKers distinguishable under that OR.

use std::fmt;
use std::str::FromStr;

use crate::{Error, Result};

/// Largest receiver population that can be assigned patterns.
pub const MAX_POPULATION: usize = 16;

/// Fixed-length bit vector; bit 0 is the leftmost character when printed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BitWord {
    bits: u32,
    len: u8,
}

impl BitWord {
    pub fn zeros(len: usize) -> Result<Self> {
        if len > MAX_POPULATION {
            return Err(Error::PopulationTooLarge {
                population: len,
                max: MAX_POPULATION,
            });
        }
        Ok(BitWord { bits: 0, len: len as u8 })
    }

    pub fn len(&self) -> usize {
        usize::from(self.len)
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, index: usize) -> bool {
        index < self.len() && self.bits & (1 << index) != 0
    }

    pub fn set(&mut self, index: usize) {
        assert!(index < self.len(), "bit {index} out of range for length {}", self.len);
        self.bits |= 1 << index;
    }

    pub fn count_ones(&self) -> u32 {
        self.bits.count_ones()
    }

    pub fn or(self, other: BitWord) -> Result<BitWord> {
        if self.len != other.len {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                got: other.len(),
            });
        }
        Ok(BitWord {
            bits: self.bits | other.bits,
            len: self.len,
        })
    }
}

impl fmt::Display for BitWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len() {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for BitWord {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut word = BitWord::zeros(s.len())?;
        for (i, c) in s.chars().enumerate() {
            match c {
                '1' => word.set(i),
                '0' => {}
                _ => return Err(Error::Config(format!("invalid bit '{c}' in word {s:?}"))),
            }
        }
        Ok(word)
    }
}

/// The pattern a receiver embeds in its ACK.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AckPattern {
    pub receiver_id: usize,
    pub bits: BitWord,
}

/// OR of the patterns of every receiver that acknowledged in one slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SuperimposedWord {
    pub bits: BitWord,
}

/// Set of receiver ids, at most [`MAX_POPULATION`] of them.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct ReceiverSet(u32);

impl ReceiverSet {
    pub fn new() -> Self {
        ReceiverSet(0)
    }

    pub fn insert(&mut self, id: usize) {
        assert!(id < MAX_POPULATION);
        self.0 |= 1 << id;
    }

    pub fn contains(&self, id: usize) -> bool {
        id < MAX_POPULATION && self.0 & (1 << id) != 0
    }

    pub fn len(&self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        (0..MAX_POPULATION).filter(move |&i| self.contains(i))
    }
}

impl FromIterator<usize> for ReceiverSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let mut set = ReceiverSet::new();
        for id in iter {
            set.insert(id);
        }
        set
    }
}

pub fn assign_pattern(receiver_id: usize, population: usize) -> Result<AckPattern> {
    let mut bits = BitWord::zeros(population)?;
    if receiver_id >= population {
        return Err(Error::ReceiverOutOfRange {
            id: receiver_id,
            population,
        });
    }
    bits.set(receiver_id);
    Ok(AckPattern { receiver_id, bits })
}

pub fn superimpose<'a, I>(patterns: I) -> Result<SuperimposedWord>
where
    I: IntoIterator<Item = &'a AckPattern>,
{
    let mut iter = patterns.into_iter();
    let first = iter.next().ok_or(Error::EmptySuperimposition)?;
    let bits = iter.try_fold(first.bits, |acc, p| acc.or(p.bits))?;
    Ok(SuperimposedWord { bits })
}

/// Recovers which receivers acknowledged from a superimposed word.
pub fn decode_ack(word: &SuperimposedWord, population: usize) -> Result<ReceiverSet> {
    if population > MAX_POPULATION {
        return Err(Error::PopulationTooLarge {
            population,
            max: MAX_POPULATION,
        });
    }
    if word.bits.len() != population {
        return Err(Error::LengthMismatch {
            expected: population,
            got: word.bits.len(),
        });
    }
    if word.bits.count_ones() == 0 {
        return Err(Error::Undecodable {
            word: word.bits.to_string(),
            population,
        });
    }
    // one-hot: hot position i means receiver i acknowledged
    Ok((0..population).filter(|&i| word.bits.get(i)).collect())
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn word(s: &str) -> SuperimposedWord {
        SuperimposedWord { bits: s.parse().unwrap() }
    }

    #[test]
    fn pair_patterns() {
        assert_eq!(assign_pattern(0, 2).unwrap().bits.to_string(), "10");
        assert_eq!(assign_pattern(1, 2).unwrap().bits.to_string(), "01");
        assert_eq!(assign_pattern(0, 1).unwrap().bits.to_string(), "1");
        assert_eq!(assign_pattern(2, 4).unwrap().bits.to_string(), "0010");
    }

    #[test]
    fn pattern_errors() {
        assert!(matches!(assign_pattern(0, 17), Err(Error::PopulationTooLarge { .. })));
        assert!(matches!(assign_pattern(2, 2), Err(Error::ReceiverOutOfRange { .. })));
        assert!(assign_pattern(15, 16).is_ok());
    }

    #[test]
    fn superimpose_examples() {
        let p = |id, n| assign_pattern(id, n).unwrap();
        assert_eq!(superimpose(&[p(0, 2)]).unwrap().bits.to_string(), "10");
        assert_eq!(superimpose(&[p(0, 2), p(1, 2)]).unwrap().bits.to_string(), "11");
        assert_eq!(
            superimpose(&[p(0, 4), p(2, 4), p(3, 4)]).unwrap().bits.to_string(),
            "1011"
        );
        assert!(matches!(superimpose(&[]), Err(Error::EmptySuperimposition)));
        assert!(matches!(
            superimpose(&[p(0, 2), p(0, 3)]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn decode_examples() {
        assert_eq!(decode_ack(&word("11"), 2).unwrap().iter().collect::<Vec<_>>(), [0, 1]);
        assert_eq!(decode_ack(&word("01"), 2).unwrap().iter().collect::<Vec<_>>(), [1]);
        assert!(matches!(decode_ack(&word("00"), 2), Err(Error::Undecodable { .. })));
        assert!(matches!(decode_ack(&word("010"), 2), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn four_receivers_all_subsets() {
        let patterns: Vec<_> = (0..4).map(|i| assign_pattern(i, 4).unwrap()).collect();
        let mut seen = std::collections::HashSet::new();
        for mask in 1u32..16 {
            let chosen: Vec<_> = patterns.iter().filter(|p| mask & (1 << p.receiver_id) != 0).collect();
            let w = superimpose(chosen.iter().copied()).unwrap();
            assert!(seen.insert(w), "subset {mask:04b} collides");
            let expected: ReceiverSet = chosen.iter().map(|p| p.receiver_id).collect();
            assert_eq!(decode_ack(&w, 4).unwrap(), expected);
        }
        assert_eq!(seen.len(), 15);
    }

    proptest! {
        #[test]
        fn adding_transmitter_keeps_hot_bits(pop in 1usize..=16, mask in 1u32..65536, extra in 0usize..16) {
            let extra = extra % pop;
            let mask = mask & ((1u32 << pop) - 1);
            prop_assume!(mask != 0);
            let patterns: Vec<_> = (0..pop).filter(|i| mask & (1 << i) != 0)
                .map(|i| assign_pattern(i, pop).unwrap()).collect();
            let before = superimpose(&patterns).unwrap();
            let mut more = patterns.clone();
            more.push(assign_pattern(extra, pop).unwrap());
            let after = superimpose(&more).unwrap();
            for i in 0..pop {
                prop_assert!(!before.bits.get(i) || after.bits.get(i));
            }
        }
    }
}
