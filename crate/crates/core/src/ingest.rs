//! Line-oriented edge list parsing.
//!
//! The parser is fed one line at a time so callers can stream large files
//! without holding the text in memory.

use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::stream::EdgeStream;
use crate::{NodeId, Timestamp};

/// Supported edge list layouts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeListFormat {
    /// `src,dst,t` rows over a single node id space.
    PlainCsv,
    /// `user,item,timestamp,label,feat...` rows. Label and features are
    /// ignored; item ids are shifted past the largest user id.
    JodieCsv,
}

impl EdgeListFormat {
    pub const fn label(self) -> &'static str {
        match self {
            EdgeListFormat::PlainCsv => "plain_csv",
            EdgeListFormat::JodieCsv => "jodie_csv",
        }
    }
}

impl fmt::Display for EdgeListFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for EdgeListFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "plain_csv" | "plain" | "csv" => Ok(EdgeListFormat::PlainCsv),
            "jodie_csv" | "jodie" => Ok(EdgeListFormat::JodieCsv),
            other => Err(Error::Config(format!("unknown edge list format `{other}`"))),
        }
    }
}

/// Incremental parser producing an [`EdgeStream`].
#[derive(Debug)]
pub struct StreamBuilder {
    format: EdgeListFormat,
    line_no: usize,
    seen_first_row: bool,
    rows: Vec<(NodeId, NodeId, Timestamp)>,
}

impl StreamBuilder {
    pub fn new(format: EdgeListFormat) -> Self {
        StreamBuilder {
            format,
            line_no: 0,
            seen_first_row: false,
            rows: Vec::new(),
        }
    }

    /// Consumes the next line of the file (with or without its line
    /// terminator). Blank lines are skipped; a first row in which no field
    /// is numeric is treated as a header.
    pub fn push_line(&mut self, line: &str) -> Result<()> {
        self.line_no += 1;
        let mut line = line.trim_end_matches(['\n', '\r']);
        if self.line_no == 1 {
            line = line.trim_start_matches('\u{feff}');
        }
        if line.trim().is_empty() {
            return Ok(());
        }
        if !self.seen_first_row {
            self.seen_first_row = true;
            if is_header(line) {
                return Ok(());
            }
        }
        let row = parse_row(line).map_err(|reason| Error::Parse {
            line: self.line_no,
            reason,
        })?;
        self.rows.push(row);
        Ok(())
    }

    pub fn rows_read(&self) -> usize {
        self.rows.len()
    }

    pub fn finish(self) -> Result<EdgeStream> {
        if self.rows.is_empty() {
            return Err(Error::EmptyStream);
        }
        match self.format {
            EdgeListFormat::PlainCsv => Ok(EdgeStream::from_triples(self.rows, false)),
            EdgeListFormat::JodieCsv => {
                let offset = self
                    .rows
                    .iter()
                    .map(|r| r.0)
                    .max()
                    .and_then(|m| m.checked_add(1))
                    .ok_or_else(|| Error::Config("user id range overflows".to_string()))?;
                let mut shifted = Vec::with_capacity(self.rows.len());
                for (i, (u, item, t)) in self.rows.into_iter().enumerate() {
                    let dst = item.checked_add(offset).ok_or_else(|| Error::Parse {
                        line: i + 1,
                        reason: "item id overflows after offset".to_string(),
                    })?;
                    shifted.push((u, dst, t));
                }
                Ok(EdgeStream::from_triples(shifted, true))
            }
        }
    }
}

/// Parses a whole edge list held in memory.
pub fn parse_str(text: &str, format: EdgeListFormat) -> Result<EdgeStream> {
    let mut builder = StreamBuilder::new(format);
    for line in text.split('\n') {
        builder.push_line(line)?;
    }
    builder.finish()
}

fn is_header(line: &str) -> bool {
    !line.split(',').any(|f| f.trim().parse::<f64>().is_ok())
}

fn parse_row(
    line: &str,
) -> core::result::Result<(NodeId, NodeId, Timestamp), alloc::string::String> {
    let mut fields = line.split(',');
    let mut next = |name: &str| {
        fields
            .next()
            .map(str::trim)
            .ok_or_else(|| format!("missing {name} field"))
    };
    let src = next("source")?;
    let dst = next("destination")?;
    let t = next("timestamp")?;
    let src = src
        .parse::<NodeId>()
        .map_err(|_| format!("invalid node id `{src}`"))?;
    let dst = dst
        .parse::<NodeId>()
        .map_err(|_| format!("invalid node id `{dst}`"))?;
    Ok((src, dst, parse_timestamp(t)?))
}

/// Whole seconds; fractional parts are truncated toward zero.
fn parse_timestamp(field: &str) -> core::result::Result<Timestamp, alloc::string::String> {
    if let Ok(t) = field.parse::<Timestamp>() {
        return Ok(t);
    }
    match field.parse::<f64>() {
        Ok(x) if x.is_finite() && x.abs() < 9.0e18 => Ok(x as Timestamp),
        _ => Err(format!("invalid timestamp `{field}`")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plain_rows_with_duplicates() {
        let s = parse_str("1,2,10\n1,2,10\n2,3,5\n", EdgeListFormat::PlainCsv).unwrap();
        let ts: alloc::vec::Vec<_> = s.events().iter().map(|e| e.t_orig).collect();
        assert_eq!(ts, [5, 10, 10]);
    }

    #[test]
    fn alpha_first_field_is_parse_error() {
        let err = parse_str("a,2,10\n", EdgeListFormat::PlainCsv).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "{err:?}");
    }

    #[test]
    fn error_names_line_number() {
        let err = parse_str("src,dst,t\n1,2,3\n1,2,x\n", EdgeListFormat::PlainCsv).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err:?}");
        let err = parse_str("1,2\n", EdgeListFormat::PlainCsv).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn empty_input() {
        assert_eq!(
            parse_str("", EdgeListFormat::PlainCsv).unwrap_err(),
            Error::EmptyStream
        );
        assert_eq!(
            parse_str("u,i,ts\n\n", EdgeListFormat::PlainCsv).unwrap_err(),
            Error::EmptyStream
        );
    }

    #[test]
    fn crlf_and_fractional_timestamps() {
        let s = parse_str(
            "src,dst,t\r\n0,1,36.9\r\n1,0,-2.5\r\n",
            EdgeListFormat::PlainCsv,
        )
        .unwrap();
        let ts: alloc::vec::Vec<_> = s.events().iter().map(|e| e.t_orig).collect();
        assert_eq!(ts, [-2, 36]);
    }

    #[test]
    fn jodie_offsets_items() {
        let text = "user_id,item_id,timestamp,state_label,comma_separated_list_of_features\n\
                    0,0,0.0,0,0.1,0.2\n\
                    2,1,5.0,0,0.3,0.4\n\
                    1,0,7.0,1,0.5,0.6\n";
        let s = parse_str(text, EdgeListFormat::JodieCsv).unwrap();
        assert!(s.is_bipartite());
        assert_eq!(s.node_universe(), &[0, 1, 2, 3, 4]);
        assert_eq!(s.dst_universe(), &[3, 4]);
        assert_eq!(s.events()[1].edge(), (2, 4));
    }

    #[test]
    fn format_names() {
        assert_eq!(
            "jodie_csv".parse::<EdgeListFormat>().unwrap(),
            EdgeListFormat::JodieCsv
        );
        assert_eq!(
            "plain-csv".parse::<EdgeListFormat>().unwrap(),
            EdgeListFormat::PlainCsv
        );
        assert!("parquet".parse::<EdgeListFormat>().is_err());
    }
}
