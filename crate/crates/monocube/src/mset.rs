//! `.mset` text format for vertex sets.
//!
//! ```text
//! n=<dim>
//! hex=<mask>
//! minimal=<bitstring> <bitstring> ...   (optional)
//! ```
//!
//! The mask is written nibble by nibble in increasing vertex order:
//! character `k` holds vertices `4k..4k+3`, vertex `4k` in the least
//! significant bit of the nibble. There are `ceil(2^n / 4)` characters,
//! lowercase. Bitstrings in the `minimal` line are `x_1 ... x_n`.

use crate::cube::{Vertex, VertexSet};
use crate::error::{Error, Result};

/// A parsed file. `with_minimal` records whether the optional line was
/// present so that writing reproduces the input byte for byte.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MsetFile {
    pub set: VertexSet,
    pub with_minimal: bool,
}

pub fn encode_hex(set: &VertexSet) -> String {
    let bits = 1usize << set.n();
    let chars = bits.div_ceil(4);
    (0..chars)
        .map(|k| {
            let nibble = (0..4)
                .filter(|&b| 4 * k + b < bits && set.contains((4 * k + b) as u32))
                .fold(0u32, |acc, b| acc | 1 << b);
            std::char::from_digit(nibble, 16).unwrap()
        })
        .collect()
}

pub fn decode_hex(n: u32, hex: &str, line: usize) -> Result<VertexSet> {
    let bits = 1usize << n;
    let chars = bits.div_ceil(4);
    let err = |msg: String| Error::Parse { line, msg };
    if hex.len() != chars {
        return Err(err(format!(
            "expected {chars} hex digits, found {}",
            hex.len()
        )));
    }
    let mut members = Vec::new();
    for (k, ch) in hex.chars().enumerate() {
        let nibble = ch
            .to_digit(16)
            .ok_or_else(|| err(format!("invalid hex digit {ch:?}")))?;
        for b in 0..4 {
            if nibble >> b & 1 == 1 {
                if 4 * k + b >= bits {
                    return Err(err("mask has bits beyond 2^n".into()));
                }
                members.push((4 * k + b) as u32);
            }
        }
    }
    VertexSet::from_members(n, members)
}

impl MsetFile {
    pub fn new(set: VertexSet) -> Self {
        MsetFile {
            set,
            with_minimal: true,
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("n={}\nhex={}\n", self.set.n(), encode_hex(&self.set));
        if self.with_minimal {
            let mins: Vec<String> = self
                .set
                .minimal_elements()
                .into_iter()
                .map(|v| Vertex(v).to_bitstring(self.set.n()))
                .collect();
            out.push_str("minimal=");
            out.push_str(&mins.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let lines: Vec<&str> = text.lines().collect();
        let field = |idx: usize, key: &str| -> Result<&str> {
            let line = lines.get(idx).ok_or_else(|| Error::Parse {
                line: idx + 1,
                msg: format!("missing `{key}=` line"),
            })?;
            line.strip_prefix(key)
                .and_then(|rest| rest.strip_prefix('='))
                .ok_or_else(|| Error::Parse {
                    line: idx + 1,
                    msg: format!("expected `{key}=`"),
                })
        };
        let n: u32 = field(0, "n")?.trim().parse().map_err(|_| Error::Parse {
            line: 1,
            msg: "dimension is not an integer".into(),
        })?;
        if n == 0 || n > crate::cube::MAX_DIM {
            return Err(Error::Dimension(n));
        }
        let set = decode_hex(n, field(1, "hex")?.trim(), 2)?;
        let with_minimal = lines.len() > 2;
        if with_minimal {
            let listed = field(2, "minimal")?;
            let mut got = Vec::new();
            for token in listed.split_whitespace() {
                let (v, len) = Vertex::parse_bitstring(token).map_err(|_| Error::Parse {
                    line: 3,
                    msg: format!("bad bitstring {token:?}"),
                })?;
                if len != n {
                    return Err(Error::Parse {
                        line: 3,
                        msg: format!("bitstring {token:?} has length {len}, expected {n}"),
                    });
                }
                got.push(v.0);
            }
            got.sort_unstable();
            if got != set.minimal_elements() {
                return Err(Error::Parse {
                    line: 3,
                    msg: "minimal elements do not match the mask".into(),
                });
            }
            if lines.len() > 3 && lines[3..].iter().any(|l| !l.trim().is_empty()) {
                return Err(Error::Parse {
                    line: 4,
                    msg: "unexpected trailing content".into(),
                });
            }
        }
        Ok(MsetFile { set, with_minimal })
    }
}
