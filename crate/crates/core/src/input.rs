//! Key stream readers: raw little-endian u64 records, decimal text, and
//! q-grams of FASTA sequences.

use std::io::{self, BufRead, BufReader, Read};
use std::str::FromStr;

use crate::qgram::{QGramEncoder, QGramRoller};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KeyFormat {
    /// 8-byte little-endian records.
    U64Le,
    /// One decimal integer per line; blank lines are ignored.
    Text,
    /// q-grams of every FASTA record.
    Fasta,
}

impl FromStr for KeyFormat {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "u64le" => Ok(Self::U64Le),
            "text" => Ok(Self::Text),
            "fasta" => Ok(Self::Fasta),
            _ => Err(crate::Error::InvalidArgument(format!(
                "unknown key format {s:?}"
            ))),
        }
    }
}

pub type KeyStream = Box<dyn Iterator<Item = io::Result<u64>> + Send>;

/// Opens a key stream over `input`. `qgrams` is required for FASTA.
pub fn read_keys<R>(
    input: R,
    format: KeyFormat,
    qgrams: Option<QGramEncoder>,
) -> crate::Result<KeyStream>
where
    R: Read + Send + 'static,
{
    let reader = BufReader::with_capacity(1 << 16, input);
    Ok(match format {
        KeyFormat::U64Le => Box::new(U64LeKeys { reader }),
        KeyFormat::Text => Box::new(TextKeys {
            reader,
            line: String::new(),
            line_no: 0,
        }),
        KeyFormat::Fasta => {
            let enc = qgrams.ok_or_else(|| {
                crate::Error::InvalidArgument("FASTA input needs a q-gram length".into())
            })?;
            Box::new(FastaKeys {
                reader,
                roller: enc.roller(),
                line: Vec::new(),
                pending: Vec::new(),
                next: 0,
            })
        }
    })
}

fn invalid(msg: String) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg)
}

struct U64LeKeys<R> {
    reader: BufReader<R>,
}

impl<R: Read> Iterator for U64LeKeys<R> {
    type Item = io::Result<u64>;

    fn next(&mut self) -> Option<Self::Item> {
        let mut rec = [0u8; 8];
        let mut filled = 0;
        while filled < 8 {
            match self.reader.read(&mut rec[filled..]) {
                Ok(0) if filled == 0 => return None,
                Ok(0) => return Some(Err(invalid(format!("truncated record of {filled} bytes")))),
                Ok(n) => filled += n,
                Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
                Err(e) => return Some(Err(e)),
            }
        }
        Some(Ok(u64::from_le_bytes(rec)))
    }
}

struct TextKeys<R> {
    reader: BufReader<R>,
    line: String,
    line_no: u64,
}

impl<R: Read> Iterator for TextKeys<R> {
    type Item = io::Result<u64>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            self.line.clear();
            match self.reader.read_line(&mut self.line) {
                Ok(0) => return None,
                Ok(_) => {}
                Err(e) => return Some(Err(e)),
            }
            self.line_no += 1;
            let trimmed = self.line.trim();
            if trimmed.is_empty() {
                continue;
            }
            return Some(trimmed.parse::<u64>().map_err(|e| {
                invalid(format!(
                    "line {}: {trimmed:?} is not a key: {e}",
                    self.line_no
                ))
            }));
        }
    }
}

struct FastaKeys<R> {
    reader: BufReader<R>,
    roller: QGramRoller,
    line: Vec<u8>,
    pending: Vec<u64>,
    next: usize,
}

impl<R: Read> Iterator for FastaKeys<R> {
    type Item = io::Result<u64>;

    fn next(&mut self) -> Option<Self::Item> {
        while self.next == self.pending.len() {
            self.pending.clear();
            self.next = 0;
            self.line.clear();
            match self.reader.read_until(b'\n', &mut self.line) {
                Ok(0) => return None,
                Ok(_) => {}
                Err(e) => return Some(Err(e)),
            }
            if self.line.first() == Some(&b'>') {
                self.roller.reset();
                continue;
            }
            for &b in &self.line {
                if b.is_ascii_whitespace() {
                    continue;
                }
                if let Some(key) = self.roller.push(b) {
                    self.pending.push(key);
                }
            }
        }
        let key = self.pending[self.next];
        self.next += 1;
        Some(Ok(key))
    }
}
