//! Line-oriented JSON helpers shared by the snapshot readers and writers.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

/// A line that failed to deserialize, with its 1-based line number.
#[derive(Debug, Clone)]
pub struct BadLine {
    pub line: usize,
    pub reason: String,
}

/// Reads a JSONL file, returning parsed records and the lines that failed.
/// Blank lines are skipped.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> std::io::Result<(Vec<T>, Vec<BadLine>)> {
    let reader = BufReader::new(File::open(path)?);
    let mut records = Vec::new();
    let mut bad = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<T>(&line) {
            Ok(rec) => records.push(rec),
            Err(err) => bad.push(BadLine {
                line: idx + 1,
                reason: err.to_string(),
            }),
        }
    }
    Ok((records, bad))
}

/// Writes records as one JSON object per line.
pub fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> std::io::Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut writer = BufWriter::new(File::create(path)?);
    for rec in records {
        serde_json::to_writer(&mut writer, rec)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(serde::Serialize, serde::Deserialize, PartialEq, Debug)]
    struct Row {
        k: String,
        n: u32,
    }

    #[test]
    fn roundtrip_and_bad_line_reporting() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rows.jsonl");
        let rows = vec![
            Row { k: "a".into(), n: 1 },
            Row { k: "b".into(), n: 2 },
        ];
        write_jsonl(&path, &rows).unwrap();
        let (back, bad) = read_jsonl::<Row>(&path).unwrap();
        assert_eq!(back, rows);
        assert!(bad.is_empty());

        std::fs::write(&path, "{\"k\":\"a\",\"n\":1}\nnot json\n\n{\"k\":\"c\",\"n\":3}\n")
            .unwrap();
        let (back, bad) = read_jsonl::<Row>(&path).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(bad.len(), 1);
        assert_eq!(bad[0].line, 2);
    }
}
