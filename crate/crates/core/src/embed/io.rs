//! Sidecar file for sparse embeddings.
//!
//! Layout (little endian):
//!
//! ```text
//! magic      8 bytes   "OLEMB\0\0\x01"
//! header_len u32
//! header     JSON      {format, nodes, features, nnz, seed, params, feature_names}
//! rows       nodes ×   { count: u32, count × (feature: u32, value: f64) }
//! ```
//!
//! The text export writes `node<TAB>feature<TAB>value` lines.

use std::io::{Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use serde::{Deserialize, Serialize};

use super::snore::{SnoreParams, SparseEmbedding};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"OLEMB\0\0\x01";
pub const FORMAT_TAG: &str = "ontolink-snore-sparse-v1";

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    format: String,
    nodes: usize,
    features: usize,
    nnz: usize,
    seed: Option<u64>,
    params: Option<SnoreParams>,
    feature_names: Vec<String>,
}

pub fn write_embedding<W: Write>(emb: &SparseEmbedding, mut out: W) -> Result<()> {
    let header = Header {
        format: FORMAT_TAG.to_string(),
        nodes: emb.node_count(),
        features: emb.feature_count(),
        nnz: emb.nnz(),
        seed: emb.seed,
        params: emb.params.clone(),
        feature_names: emb.feature_names().to_vec(),
    };
    let json = serde_json::to_vec(&header).map_err(|e| Error::Format(e.to_string()))?;
    out.write_all(MAGIC)?;
    out.write_u32::<LittleEndian>(json.len() as u32)?;
    out.write_all(&json)?;
    let (indptr, indices, values) = emb.raw_parts();
    for w in indptr.windows(2) {
        out.write_u32::<LittleEndian>((w[1] - w[0]) as u32)?;
        for k in w[0]..w[1] {
            out.write_u32::<LittleEndian>(indices[k])?;
            out.write_f64::<LittleEndian>(values[k])?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn read_embedding<R: Read>(mut input: R) -> Result<SparseEmbedding> {
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format(
            "bad magic; not an ontolink embedding file".into(),
        ));
    }
    let len = input.read_u32::<LittleEndian>()? as usize;
    let mut json = vec![0u8; len];
    input.read_exact(&mut json)?;
    let header: Header =
        serde_json::from_slice(&json).map_err(|e| Error::Format(format!("header: {e}")))?;
    if header.format != FORMAT_TAG {
        return Err(Error::Format(format!(
            "unsupported format tag '{}'",
            header.format
        )));
    }
    if header.feature_names.len() != header.features {
        return Err(Error::Format(
            "feature name count does not match header".into(),
        ));
    }
    let mut rows = Vec::with_capacity(header.nodes);
    let mut nnz = 0;
    for _ in 0..header.nodes {
        let count = input.read_u32::<LittleEndian>()? as usize;
        let mut row = Vec::with_capacity(count);
        for _ in 0..count {
            let f = input.read_u32::<LittleEndian>()?;
            let v = input.read_f64::<LittleEndian>()?;
            row.push((f, v));
        }
        nnz += count;
        rows.push(row);
    }
    if nnz != header.nnz {
        return Err(Error::Format(format!(
            "header says {} entries, payload has {nnz}",
            header.nnz
        )));
    }
    let mut emb = SparseEmbedding::from_rows(rows, header.feature_names)
        .map_err(|e| Error::Format(e.to_string()))?;
    emb.params = header.params;
    emb.seed = header.seed;
    Ok(emb)
}

pub fn write_text<W: Write>(emb: &SparseEmbedding, mut out: W) -> Result<()> {
    let names = emb.feature_names();
    for u in 0..emb.node_count() as u32 {
        for (f, v) in emb.row_entries(u) {
            writeln!(out, "{}\t{}\t{}", names[u as usize], names[f as usize], v)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn binary_round_trip(rows in prop::collection::vec(
            prop::collection::btree_map(0u32..6, 0.005f64..1.0, 0..6), 1..8
        ), seed in any::<u64>()) {
            let names: Vec<String> = (0..6).map(|i| format!("http://x/{i}")).collect();
            let rows: Vec<Vec<(u32, f64)>> = rows.into_iter().map(|r| r.into_iter().collect()).collect();
            let mut emb = SparseEmbedding::from_rows(rows, names).unwrap();
            emb.seed = Some(seed);
            emb.params = Some(SnoreParams::default());
            let mut buf = Vec::new();
            write_embedding(&emb, &mut buf).unwrap();
            let back = read_embedding(buf.as_slice()).unwrap();
            prop_assert_eq!(back, emb);
        }
    }

    #[test]
    fn rejects_garbage() {
        assert!(read_embedding(&b"not an embedding"[..]).is_err());
        let emb = SparseEmbedding::from_rows(vec![vec![(0, 1.0)]], vec!["a".into()]).unwrap();
        let mut buf = Vec::new();
        write_embedding(&emb, &mut buf).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(read_embedding(buf.as_slice()).is_err());
    }

    #[test]
    fn text_export() {
        let emb =
            SparseEmbedding::from_rows(vec![vec![(1, 0.5)], vec![]], vec!["a".into(), "b".into()])
                .unwrap();
        let mut out = Vec::new();
        write_text(&emb, &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "a\tb\t0.5\n");
    }
}
