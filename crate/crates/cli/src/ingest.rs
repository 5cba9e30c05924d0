//! CSV ingestion: header `x1,...,xd[,y]`, numeric body, row order
//! preserved. Row numbers in errors are 1-based body rows.

use ksl_core::error::{CoreError, Result};
use ksl_core::interpolation::LabeledSet;
use ksl_core::sampling::SampleSet;

#[derive(Debug)]
pub enum Ingested {
    Unlabeled(SampleSet),
    Labeled(LabeledSet),
}

impl Ingested {
    #[cfg_attr(not(test), allow(dead_code))]
    pub fn sample(&self) -> &SampleSet {
        match self {
            Ingested::Unlabeled(s) => s,
            Ingested::Labeled(l) => &l.sample,
        }
    }
}

fn parse_header(line: &str) -> Result<(usize, bool)> {
    let cells: Vec<&str> = line.trim_end().split(',').collect();
    let labeled = cells.last().map(|c| c.trim() == "y").unwrap_or(false);
    let d = if labeled { cells.len() - 1 } else { cells.len() };
    if d == 0 {
        return Err(CoreError::CsvParse {
            row: 0,
            message: "header has no coordinate columns".into(),
        });
    }
    for (j, cell) in cells[..d].iter().enumerate() {
        let expect = format!("x{}", j + 1);
        if cell.trim() != expect {
            return Err(CoreError::CsvParse {
                row: 0,
                message: format!("expected header column `{expect}`, got `{}`", cell.trim()),
            });
        }
    }
    Ok((d, labeled))
}

pub fn ingest_csv(text: &str) -> Result<Ingested> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| CoreError::CsvParse {
        row: 0,
        message: "empty file".into(),
    })?;
    let (d, labeled) = parse_header(header)?;
    let width = d + labeled as usize;
    let mut coords = Vec::new();
    let mut ys = Vec::new();
    let mut m = 0usize;
    for (idx, line) in lines.enumerate() {
        let row = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.trim_end().split(',').collect();
        if cells.len() != width {
            return Err(CoreError::CsvParse {
                row,
                message: format!("expected {width} cells, got {}", cells.len()),
            });
        }
        for (j, cell) in cells.iter().enumerate() {
            let v: f64 = cell.trim().parse().map_err(|_| CoreError::CsvParse {
                row,
                message: format!("non-numeric cell `{}` in column {}", cell.trim(), j + 1),
            })?;
            if !v.is_finite() {
                return Err(CoreError::CsvParse {
                    row,
                    message: format!("non-finite value in column {}", j + 1),
                });
            }
            if labeled && j == d {
                ys.push(v);
            } else {
                coords.push(v);
            }
        }
        m += 1;
    }
    if m == 0 {
        return Err(CoreError::CsvParse {
            row: 0,
            message: "no data rows".into(),
        });
    }
    let sample = SampleSet::from_points(coords, m, d)?;
    if labeled {
        Ok(Ingested::Labeled(LabeledSet::new(sample, ys)?))
    } else {
        Ok(Ingested::Unlabeled(sample))
    }
}

/// First pair of exactly-equal points, if any.
pub fn find_duplicate(s: &SampleSet) -> Option<(usize, usize)> {
    for i in 0..s.len() {
        for j in (i + 1)..s.len() {
            if s.point(i) == s.point(j) {
                return Some((i, j));
            }
        }
    }
    None
}
