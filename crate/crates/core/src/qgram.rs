//! 2-bit encoding of DNA q-grams as integer keys.

/// Encodes length-`q` windows of a DNA sequence as integers with
/// `A=0, C=1, G=2, T=3`, first base most significant. Windows touching any
/// other character are skipped. Lowercase bases count as bases.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QGramEncoder {
    q: u32,
    canonical: bool,
}

#[inline]
fn base_code(b: u8) -> Option<u64> {
    match b {
        b'A' | b'a' => Some(0),
        b'C' | b'c' => Some(1),
        b'G' | b'g' => Some(2),
        b'T' | b't' => Some(3),
        _ => None,
    }
}

impl QGramEncoder {
    /// `q` must be in `1..=32`.
    pub fn new(q: u32, canonical: bool) -> crate::Result<Self> {
        if !(1..=32).contains(&q) {
            return Err(crate::Error::InvalidArgument(format!(
                "q = {q} must be in 1..=32"
            )));
        }
        Ok(Self { q, canonical })
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn canonical(&self) -> bool {
        self.canonical
    }

    fn mask(&self) -> u64 {
        if self.q == 32 {
            u64::MAX
        } else {
            (1u64 << (2 * self.q)) - 1
        }
    }

    /// Code of the reverse complement of a q-gram code.
    pub fn reverse_complement(&self, code: u64) -> u64 {
        let mut fwd = code;
        let mut rc = 0u64;
        for _ in 0..self.q {
            rc = (rc << 2) | (3 - (fwd & 3));
            fwd >>= 2;
        }
        rc
    }

    /// A fresh rolling encoder over one sequence.
    pub fn roller(&self) -> QGramRoller {
        QGramRoller {
            enc: *self,
            mask: self.mask(),
            fwd: 0,
            rev: 0,
            valid: 0,
        }
    }

    /// All q-gram keys of a contiguous sequence.
    pub fn encode(&self, seq: &[u8]) -> Vec<u64> {
        let mut roller = self.roller();
        seq.iter().filter_map(|&b| roller.push(b)).collect()
    }
}

/// Incremental q-gram encoder; feed it one character at a time.
#[derive(Clone, Debug)]
pub struct QGramRoller {
    enc: QGramEncoder,
    mask: u64,
    fwd: u64,
    rev: u64,
    valid: u32,
}

impl QGramRoller {
    /// Adds a character and returns the key of the window ending at it, if
    /// that window is complete and valid.
    #[inline]
    pub fn push(&mut self, b: u8) -> Option<u64> {
        let Some(code) = base_code(b) else {
            self.valid = 0;
            return None;
        };
        let q = self.enc.q;
        self.fwd = ((self.fwd << 2) | code) & self.mask;
        self.rev = (self.rev >> 2) | ((3 - code) << (2 * (q - 1)));
        self.valid = (self.valid + 1).min(q);
        if self.valid < q {
            return None;
        }
        Some(if self.enc.canonical {
            self.fwd.min(self.rev)
        } else {
            self.fwd
        })
    }

    /// Forgets the current window, e.g. at a record boundary.
    pub fn reset(&mut self) {
        self.valid = 0;
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn examples() {
        assert_eq!(QGramEncoder::new(2, false).unwrap().encode(b"AC"), vec![1]);
        assert_eq!(QGramEncoder::new(2, true).unwrap().encode(b"AC"), vec![1]);
        assert_eq!(QGramEncoder::new(2, false).unwrap().encode(b"GT"), vec![11]);
        assert!(QGramEncoder::new(3, false)
            .unwrap()
            .encode(b"ACNGT")
            .is_empty());
        assert_eq!(
            QGramEncoder::new(3, false).unwrap().encode(b"ACGTA"),
            vec![6, 27, 44]
        );
        assert_eq!(
            QGramEncoder::new(1, false).unwrap().encode(b"acgtN"),
            vec![0, 1, 2, 3]
        );
    }

    #[test]
    fn canonical_picks_smaller_strand() {
        let enc = QGramEncoder::new(3, true).unwrap();
        // TTT (63) has reverse complement AAA (0)
        assert_eq!(enc.encode(b"TTT"), vec![0]);
        // AAC -> GTT
        assert_eq!(enc.reverse_complement(1), 0b10_11_11);
    }

    #[test]
    fn q_bounds() {
        assert!(QGramEncoder::new(0, true).is_err());
        assert!(QGramEncoder::new(33, true).is_err());
        let enc = QGramEncoder::new(32, false).unwrap();
        assert_eq!(enc.encode(&[b'T'; 32]), vec![u64::MAX]);
    }

    fn naive(seq: &[u8], q: usize, canonical: bool) -> Vec<u64> {
        let comp = |b: u8| match b.to_ascii_uppercase() {
            b'A' => b'T',
            b'C' => b'G',
            b'G' => b'C',
            _ => b'A',
        };
        let code = |w: &[u8]| {
            w.iter()
                .fold(0u64, |acc, &b| (acc << 2) | base_code(b).unwrap())
        };
        seq.windows(q)
            .filter(|w| w.iter().all(|&b| base_code(b).is_some()))
            .map(|w| {
                let fwd = code(w);
                let rc: Vec<u8> = w.iter().rev().map(|&b| comp(b)).collect();
                if canonical {
                    fwd.min(code(&rc))
                } else {
                    fwd
                }
            })
            .collect()
    }

    proptest! {
        #[test]
        fn rolling_matches_windows(seq in "[ACGTNacgt]{0,80}", q in 1u32..=32, canonical in any::<bool>()) {
            let enc = QGramEncoder::new(q, canonical).unwrap();
            let got = enc.encode(seq.as_bytes());
            prop_assert_eq!(&got, &naive(seq.as_bytes(), q as usize, canonical));
            let limit = if q == 32 { u64::MAX } else { (1u64 << (2 * q)) - 1 };
            prop_assert!(got.iter().all(|&c| c <= limit));
        }
    }
}
