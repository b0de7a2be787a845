//! Delimited numeric tables.
//!
//! Fields are split on commas, semicolons or runs of whitespace, whichever
//! the first data line uses. A first line with any non-numeric field is a
//! header. Blank lines and lines starting with `#` are skipped.

use std::fs;
use std::path::Path;

use lingof::DataMatrix;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Delimiter {
    Comma,
    Semicolon,
    Whitespace,
}

impl Delimiter {
    fn detect(line: &str) -> Self {
        if line.contains(',') {
            Delimiter::Comma
        } else if line.contains(';') {
            Delimiter::Semicolon
        } else {
            Delimiter::Whitespace
        }
    }

    fn split<'a>(&self, line: &'a str) -> Vec<&'a str> {
        match self {
            Delimiter::Comma => line.split(',').map(str::trim).collect(),
            Delimiter::Semicolon => line.split(';').map(str::trim).collect(),
            Delimiter::Whitespace => line.split_whitespace().collect(),
        }
    }
}

pub fn read_table(path: &Path) -> CliResult<DataMatrix> {
    let text = fs::read_to_string(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    parse_table(&text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

pub fn parse_table(text: &str) -> Result<DataMatrix, String> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .peekable();
    let Some(&(_, first)) = lines.peek() else {
        return Err("no data rows".into());
    };
    let delim = Delimiter::detect(first);
    let fields = delim.split(first);
    let header = if fields.iter().any(|f| f.parse::<f64>().is_err()) {
        lines.next();
        Some(fields.iter().map(|f| f.trim_matches('"').to_string()).collect::<Vec<_>>())
    } else {
        None
    };
    let width = fields.len();
    let mut values = Vec::new();
    let mut n = 0;
    for (row, line) in lines {
        let cells = delim.split(line);
        if cells.len() != width {
            return Err(format!("row {row}: expected {width} columns, found {}", cells.len()));
        }
        for (col, cell) in cells.iter().enumerate() {
            let v: f64 = cell
                .parse()
                .map_err(|_| format!("row {row}, column {}: '{cell}' is not a number", col + 1))?;
            if !v.is_finite() {
                return Err(format!("row {row}, column {}: non-finite value '{cell}'", col + 1));
            }
            values.push(v);
        }
        n += 1;
    }
    if width < 2 {
        return Err(format!("need at least 2 columns, found {width}"));
    }
    if n < 2 {
        return Err(format!("need at least 2 data rows, found {n}"));
    }
    let data = DataMatrix::from_row_major(n, width, &values).map_err(|e| e.to_string())?;
    match header {
        Some(names) => data.with_column_names(names).map_err(|e| e.to_string()),
        None => Ok(data),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn whitespace_without_header() {
        let d = parse_table("1.0 2.0\n3.0\t4.0\n\n5 6\n").unwrap();
        assert_eq!((d.n(), d.p()), (3, 2));
        assert_eq!(d.row(1), vec![3.0, 4.0]);
        assert!(d.column_names().is_none());
    }

    #[test]
    fn comma_with_header_and_comments() {
        let d = parse_table("# pair 1\nx,y\n1,2\n3,4e-1\n").unwrap();
        assert_eq!(d.column_names().unwrap(), ["x", "y"]);
        assert_eq!(d.row(1), vec![3.0, 0.4]);
    }

    #[test]
    fn errors_name_row_and_column() {
        let e = parse_table("x,y\n1,2\n3,abc\n").unwrap_err();
        assert!(e.contains("row 3, column 2"), "{e}");
        let e = parse_table("1 2\n3\n").unwrap_err();
        assert!(e.contains("row 2"), "{e}");
        let e = parse_table("1 2\n3 nan\n").unwrap_err();
        assert!(e.contains("non-finite"), "{e}");
        assert!(parse_table("1\n2\n3\n").unwrap_err().contains("2 columns"));
        assert!(parse_table("\n# only\n").is_err());
    }
}
