//! Message alphabets and the threshold quantizer.
//!
//! A level alphabet M = {0, ±L_1, …, ±L_s} is symmetric around zero; a
//! message names one of its elements by signed level index, so arithmetic
//! on messages stays exact and only [`Alphabet::value`] touches the reals.
//! The quantizer maps a real to the alphabet through s positive thresholds
//! T_1 < … < T_s (with T_{s+1} = ∞): values below T_1 collapse to zero,
//! values in [T_i, T_{i+1}) map to ±L_i.

use crate::{Error, Result};

/// One element of a level alphabet, stored as a signed level index:
/// 0 is the zero message, +k means +L_k, −k means −L_k.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Message(i8);

impl Message {
    pub const ZERO: Message = Message(0);

    /// Wraps a signed level index without range checking; the alphabet
    /// methods validate on use.
    pub fn new(index: i8) -> Message {
        Message(index)
    }

    pub fn index(self) -> i8 {
        self.0
    }

    /// Level number |index| in [0, s].
    pub fn magnitude(self) -> u8 {
        self.0.unsigned_abs()
    }

    pub fn signum(self) -> i8 {
        self.0.signum()
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl std::ops::Neg for Message {
    type Output = Message;

    fn neg(self) -> Message {
        Message(-self.0)
    }
}

impl std::fmt::Display for Message {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A finite message alphabet plus the channel magnitude C.
///
/// `levels[i-1]` is L_i and `thresholds[i-1]` is T_i; both lists are
/// strictly increasing and positive. Channel outputs take values ±C.
#[derive(Debug, Clone, PartialEq)]
pub struct Alphabet {
    levels: Vec<f64>,
    thresholds: Vec<f64>,
    channel: f64,
}

impl Alphabet {
    pub fn new(levels: Vec<f64>, thresholds: Vec<f64>, channel: f64) -> Result<Alphabet> {
        if levels.is_empty() {
            return Err(Error::InvalidAlphabet("need at least one level".into()));
        }
        if levels.len() != thresholds.len() {
            return Err(Error::InvalidAlphabet(format!(
                "{} levels but {} thresholds",
                levels.len(),
                thresholds.len()
            )));
        }
        for list in [&levels, &thresholds] {
            if list.iter().any(|&x| !x.is_finite() || x <= 0.0) {
                return Err(Error::InvalidAlphabet(
                    "levels and thresholds must be positive and finite".into(),
                ));
            }
            if list.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidAlphabet(
                    "levels and thresholds must be strictly increasing".into(),
                ));
            }
        }
        if !channel.is_finite() || channel <= 0.0 {
            return Err(Error::InvalidAlphabet(format!(
                "channel magnitude must be positive, got {channel}"
            )));
        }
        Ok(Alphabet { levels, thresholds, channel })
    }

    /// The s-level alphabet with L_i = i, T_i = i − 1/2 and C = 1: levels
    /// sit at the integers and thresholds halfway between them.
    pub fn uniform(s: usize) -> Alphabet {
        Alphabet::new(
            (1..=s).map(|i| i as f64).collect(),
            (1..=s).map(|i| i as f64 - 0.5).collect(),
            1.0,
        )
        .expect("uniform alphabet parameters are valid for s >= 1")
    }

    /// Same alphabet with a different channel magnitude.
    pub fn with_channel(&self, channel: f64) -> Result<Alphabet> {
        Alphabet::new(self.levels.clone(), self.thresholds.clone(), channel)
    }

    /// Number of positive levels s; the alphabet has 2s+1 elements.
    pub fn s(&self) -> usize {
        self.levels.len()
    }

    /// Alphabet size 2s+1.
    pub fn size(&self) -> usize {
        2 * self.levels.len() + 1
    }

    /// Channel magnitude C.
    pub fn channel(&self) -> f64 {
        self.channel
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    /// Largest threshold T_s.
    pub fn top_threshold(&self) -> f64 {
        *self.thresholds.last().unwrap()
    }

    /// Largest level L_s.
    pub fn top_level(&self) -> f64 {
        *self.levels.last().unwrap()
    }

    /// Real value of a message. Panics if the index is outside [−s, s].
    pub fn value(&self, m: Message) -> f64 {
        let k = m.magnitude() as usize;
        assert!(k <= self.s(), "message index {} outside alphabet", m.index());
        if k == 0 {
            0.0
        } else {
            self.levels[k - 1] * m.signum() as f64
        }
    }

    /// Checked construction of a message belonging to this alphabet.
    pub fn message(&self, index: i8) -> Result<Message> {
        if index.unsigned_abs() as usize > self.s() {
            return Err(Error::InvalidAlphabet(format!(
                "level index {index} outside [-{0}, {0}]",
                self.s()
            )));
        }
        Ok(Message(index))
    }

    /// Threshold quantizer: Q(x) = sgn(x)·L_i when T_i ≤ |x| < T_{i+1}
    /// (taking T_{s+1} = ∞), and 0 when |x| < T_1. Odd by construction.
    pub fn quantize(&self, x: f64) -> Message {
        let mag = x.abs();
        // partition_point counts thresholds <= mag; boundary T_i maps up.
        let i = self.thresholds.partition_point(|&t| t <= mag);
        Message(i as i8 * if x > 0.0 { 1 } else if x < 0.0 { -1 } else { 0 })
    }

    /// Zero-based position of a message in the value-ordered alphabet
    /// (−L_s first, +L_s last); used to flatten LUT index tuples.
    pub fn offset(&self, m: Message) -> usize {
        debug_assert!((m.magnitude() as usize) <= self.s());
        (m.index() as isize + self.s() as isize) as usize
    }

    /// Inverse of [`Alphabet::offset`].
    pub fn from_offset(&self, off: usize) -> Message {
        debug_assert!(off < self.size());
        Message((off as isize - self.s() as isize) as i8)
    }

    /// All 2s+1 messages in ascending value order.
    pub fn messages(&self) -> impl Iterator<Item = Message> + '_ {
        let s = self.s() as i8;
        (-s..=s).map(Message)
    }

    /// Channel value for a received bit under the bipolar map: 0 → +C,
    /// 1 → −C.
    pub fn channel_value(&self, bit: u8) -> f64 {
        if bit & 1 == 0 {
            self.channel
        } else {
            -self.channel
        }
    }
}
