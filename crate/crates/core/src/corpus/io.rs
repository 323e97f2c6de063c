use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::{Error, Result};

/// Reads one JSON object per non-blank line.
pub fn read_jsonl<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<Vec<T>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            msg: e.to_string(),
        })?;
        out.push(item);
    }
    Ok(out)
}

/// Writes one JSON object per line through a temporary file and a rename, so
/// readers never observe a half-written file.
pub fn write_jsonl<T: Serialize>(path: impl AsRef<Path>, items: &[T]) -> Result<()> {
    let path = path.as_ref();
    let tmp = path.with_extension("tmp");
    {
        let file = File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        let mut w = BufWriter::new(file);
        for item in items {
            serde_json::to_writer(&mut w, item)?;
            w.write_all(b"\n").map_err(|e| Error::io(&tmp, e))?;
        }
        w.flush().map_err(|e| Error::io(&tmp, e))?;
    }
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{AspectInstance, SentenceRecord};

    #[test]
    fn jsonl_formats() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sd.jsonl");
        std::fs::write(&p, "{\"id\": \"r1\", \"text\": \"Good.\", \"label\": 0}\n\n{\"id\":\"r2\",\"text\":\"Bad\",\"label\":1}\n").unwrap();
        let recs: Vec<SentenceRecord> = read_jsonl(&p).unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[1].label, 1);

        let q = dir.path().join("td.jsonl");
        std::fs::write(&q, "{\"id\":\"a\",\"tokens\":[\"the\",\"food\"],\"aspect_start\":1,\"aspect_end\":2,\"label\":2}\n").unwrap();
        let inst: Vec<AspectInstance> = read_jsonl(&q).unwrap();
        assert_eq!(inst[0].aspect_tokens(), ["food".to_string()]);

        let out = dir.path().join("out.jsonl");
        write_jsonl(&out, &inst).unwrap();
        let back: Vec<AspectInstance> = read_jsonl(&out).unwrap();
        assert_eq!(back, inst);
    }

    #[test]
    fn parse_error_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.jsonl");
        std::fs::write(&p, "{\"id\":\"a\",\"text\":\"x\",\"label\":0}\n{oops}\n").unwrap();
        match read_jsonl::<SentenceRecord>(&p) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }
}
