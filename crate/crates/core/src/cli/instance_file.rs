//! The `evlcp-v1` JSON instance format.
//!
//! ```json
//! {"version": "evlcp-v1", "k": 1, "n": 2,
//!  "A": [[[1, 0], [0, 1]], [[2, 1], [1, 2]]],
//!  "q": [[0, 0], [-1, 1]]}
//! ```
//!
//! Each block may be given as nested rows or as a flat row-major array of
//! length `n * n`; `q` is optional and defaults to zeros. Writing always uses
//! nested rows and the key order above.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::model::{BlockMatrix, EvlcpInstance};

pub const FORMAT_VERSION: &str = "evlcp-v1";

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(untagged)]
enum BlockData {
    Rows(Vec<Vec<f64>>),
    Flat(Vec<f64>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    version: String,
    k: usize,
    n: usize,
    #[serde(rename = "A")]
    a: Vec<BlockData>,
    q: Option<Vec<Vec<f64>>>,
}

#[derive(Serialize)]
struct CanonicalFile<'a> {
    version: &'static str,
    k: usize,
    n: usize,
    #[serde(rename = "A")]
    a: Vec<Vec<Vec<f64>>>,
    q: &'a [Vec<f64>],
}

pub fn parse(text: &str) -> Result<EvlcpInstance> {
    let raw: RawFile = serde_json::from_str(text).map_err(|e| Error::Input(format!("invalid instance file: {e}")))?;
    if raw.version != FORMAT_VERSION {
        return Err(Error::Input(format!("unsupported version '{}', expected '{FORMAT_VERSION}'", raw.version)));
    }
    let (k, n) = (raw.k, raw.n);
    if raw.a.len() != k + 1 {
        return Err(Error::Input(format!("k = {k} needs {} blocks in A, found {}", k + 1, raw.a.len())));
    }
    let blocks = raw
        .a
        .into_iter()
        .enumerate()
        .map(|(j, b)| {
            let m = match b {
                BlockData::Rows(rows) => Matrix::from_rows(&rows),
                BlockData::Flat(flat) => Matrix::from_row_slice(n, &flat),
            }
            .map_err(|e| Error::Input(format!("block {j}: {e}")))?;
            if m.dim() != n {
                return Err(Error::Input(format!("block {j} is {0}x{0}, expected {n}x{n}", m.dim())));
            }
            Ok(m)
        })
        .collect::<Result<Vec<_>>>()?;
    let a = BlockMatrix::new(blocks)?;
    match raw.q {
        Some(q) => EvlcpInstance::new(a, q),
        None => Ok(EvlcpInstance::homogeneous(a)),
    }
}

pub fn read(path: &Path) -> Result<EvlcpInstance> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Input(format!("cannot read {}: {e}", path.display())))?;
    parse(&text)
}

fn canonical(inst: &EvlcpInstance) -> CanonicalFile<'_> {
    CanonicalFile {
        version: FORMAT_VERSION,
        k: inst.k(),
        n: inst.n(),
        a: inst.matrix().blocks().iter().map(Matrix::to_rows).collect(),
        q: inst.q(),
    }
}

/// Pretty-printed canonical form, newline terminated.
pub fn to_string(inst: &EvlcpInstance) -> String {
    let mut s = serde_json::to_string_pretty(&canonical(inst)).expect("instance serializes");
    s.push('\n');
    s
}

pub fn write(path: &Path, inst: &EvlcpInstance) -> Result<()> {
    std::fs::write(path, to_string(inst)).map_err(|e| Error::Input(format!("cannot write {}: {e}", path.display())))
}

/// SHA-256 of the compact canonical form, lowercase hex.
pub fn digest(inst: &EvlcpInstance) -> String {
    let compact = serde_json::to_vec(&canonical(inst)).expect("instance serializes");
    hex::encode(Sha256::digest(&compact))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin;

    const SAMPLE: &str = r#"{"version": "evlcp-v1", "k": 1, "n": 2,
        "A": [[[1, 0], [0, 1]], [2, 1, 1, 2]],
        "q": [[0, 0], [-1, 1]]}"#;

    #[test]
    fn nested_and_flat_blocks() {
        let inst = parse(SAMPLE).unwrap();
        assert_eq!(inst.matrix().block(1).to_rows(), vec![vec![2.0, 1.0], vec![1.0, 2.0]]);
        assert_eq!(inst.q()[1], vec![-1.0, 1.0]);
    }

    #[test]
    fn canonical_round_trip() {
        let first = to_string(&parse(SAMPLE).unwrap());
        let second = to_string(&parse(&first).unwrap());
        assert_eq!(first, second);
        assert_eq!(digest(&parse(SAMPLE).unwrap()), digest(&parse(&first).unwrap()));
    }

    #[test]
    fn missing_q_defaults_to_zero() {
        let inst = parse(r#"{"version":"evlcp-v1","k":1,"n":1,"A":[[1],[2]]}"#).unwrap();
        assert_eq!(inst.q(), &[vec![0.0], vec![0.0]]);
    }

    #[test]
    fn digests_differ_between_instances() {
        let a = builtin::instance("example-2.1").unwrap();
        let b = builtin::instance("example-4.1").unwrap();
        assert_eq!(digest(&a).len(), 64);
        assert_ne!(digest(&a), digest(&b));
    }

    #[test]
    fn rejects_malformed_files() {
        for bad in [
            r#"{"version":"evlcp-v2","k":1,"n":1,"A":[[1],[2]]}"#,
            r#"{"version":"evlcp-v1","k":2,"n":1,"A":[[1],[2]]}"#,
            r#"{"version":"evlcp-v1","k":1,"n":2,"A":[[1,0,0,1],[1,2,3]]}"#,
            r#"{"version":"evlcp-v1","k":1,"n":1,"A":[[1],[2]],"q":[[0],[0,1]]}"#,
            r#"{"version":"evlcp-v1","k":1,"n":1,"A":[[1],[2]],"extra":1}"#,
            "not json",
        ] {
            assert!(matches!(parse(bad), Err(Error::Input(_))), "{bad}");
        }
    }
}
