//! Score files: CSV with header `id,is_ood,loss,score_r[,score_g]`.

use std::io::{Read, Write};
use std::path::Path;

use crate::posthoc::{ScoredDataset, ScoredSample};
use crate::{Error, Result};

const BASE_HEADER: [&str; 4] = ["id", "is_ood", "loss", "score_r"];

/// Parses a score file. `origin` only labels error messages.
pub fn read_scores<R: Read>(reader: R, origin: &Path) -> Result<ScoredDataset> {
    let mut csv = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let parse_err = |line: u64, message: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        message,
    };
    let header = csv.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
    let names: Vec<&str> = header.iter().map(str::trim).collect();
    let has_g = match names.as_slice() {
        [a, b, c, d] if [*a, *b, *c, *d] == BASE_HEADER => false,
        [a, b, c, d, "score_g"] if [*a, *b, *c, *d] == BASE_HEADER => true,
        _ => {
            return Err(parse_err(
                1,
                format!("expected header id,is_ood,loss,score_r[,score_g], found {}", names.join(",")),
            ))
        }
    };

    let mut rows = Vec::new();
    for record in csv.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != names.len() {
            return Err(parse_err(line, format!("expected {} fields, found {}", names.len(), record.len())));
        }
        let num = |k: usize, what: &str| -> Result<f64> {
            let raw = record[k].trim();
            let v: f64 = raw
                .parse()
                .map_err(|_| parse_err(line, format!("{what}: cannot parse {raw:?} as a number")))?;
            if v.is_nan() {
                return Err(parse_err(line, format!("{what} is NaN")));
            }
            Ok(v)
        };
        let is_ood = match record[1].trim() {
            "0" => false,
            "1" => true,
            other => return Err(parse_err(line, format!("is_ood must be 0 or 1, found {other:?}"))),
        };
        let loss = num(2, "loss")?;
        if !(loss >= 0.0) || !loss.is_finite() {
            return Err(parse_err(line, format!("loss must be finite and nonnegative, found {loss}")));
        }
        if is_ood && loss != 0.0 {
            return Err(parse_err(line, "loss must be 0 when is_ood=1".into()));
        }
        rows.push(ScoredSample {
            score_r: num(3, "score_r")?,
            score_g: if has_g { Some(num(4, "score_g")?) } else { None },
            is_ood,
            loss,
        });
    }
    ScoredDataset::new(rows).map_err(|e| parse_err(0, e.to_string()))
}

pub fn load_scores(path: &Path) -> Result<ScoredDataset> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_scores(std::io::BufReader::new(file), path)
}

pub fn write_scores<W: Write>(writer: W, dataset: &ScoredDataset) -> std::io::Result<()> {
    let mut w = std::io::BufWriter::new(writer);
    write!(w, "id,is_ood,loss,score_r")?;
    if dataset.has_score_g() {
        write!(w, ",score_g")?;
    }
    writeln!(w)?;
    for (i, s) in dataset.samples().iter().enumerate() {
        write!(w, "{i},{},{},{}", u8::from(s.is_ood), s.loss, s.score_r)?;
        if let Some(g) = s.score_g {
            write!(w, ",{g}")?;
        }
        writeln!(w)?;
    }
    w.flush()
}

pub fn save_scores(path: &Path, dataset: &ScoredDataset) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_scores(file, dataset).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ScoredDataset> {
        read_scores(text.as_bytes(), Path::new("scores.csv"))
    }

    #[test]
    fn reads_both_layouts() {
        let d = parse("id,is_ood,loss,score_r\n0,0,1,0.5\n1,1,0,0.25\n").unwrap();
        assert_eq!(d.len(), 2);
        assert!(!d.has_score_g());
        let d = parse("id,is_ood,loss,score_r,score_g\na,0,0,0.5,1e-3\nb,1,0,0.25,inf\n").unwrap();
        assert_eq!(d.samples()[1].score_g, Some(f64::INFINITY));
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = parse("id,is_ood,loss,score_r\n0,0,0,0.5\n1,1,0.5,0.2\n").unwrap_err();
        assert!(err.to_string().contains("scores.csv:3:"), "{err}");
        let err = parse("id,is_ood,loss,score_r\n0,2,0,0.5\n").unwrap_err();
        assert!(err.to_string().contains(":2:"), "{err}");
        let err = parse("id,is_ood,loss,score_r\n0,0,0,x\n").unwrap_err();
        assert!(err.to_string().contains("score_r"), "{err}");
        let err = parse("id,label,loss,score_r\n").unwrap_err();
        assert!(err.to_string().contains(":1:"), "{err}");
        let err = parse("id,is_ood,loss,score_r\n0,0,-1,0.1\n").unwrap_err();
        assert!(err.to_string().contains("nonnegative"), "{err}");
    }

    #[test]
    fn write_then_read() {
        let text = "id,is_ood,loss,score_r,score_g\n0,0,0,0.1,2.5\n1,1,0,0.30000000000000004,0.001\n";
        let d = parse(text).unwrap();
        let mut out = Vec::new();
        write_scores(&mut out, &d).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), text);
    }
}
