//! Stream text format.
//!
//! ```text
//! n K
//! + u v
//! - u v
//! ```
//!
//! ASCII, whitespace-separated fields, LF line endings, one event per line.
//! Sequence numbers are implicit (line order, starting at 1). The writer
//! emits the canonical orientation `u < v`, a single space between fields
//! and a trailing LF, so fixtures are byte-stable. The reader accepts any
//! whitespace and skips blank lines.

use std::io::{self, BufRead, Write};
use std::path::Path;

use super::{Edge, EventKind, StreamSpec, VertexId};
use crate::error::{Error, Result};

pub fn write_stream<W: Write>(spec: &StreamSpec, out: W) -> io::Result<()> {
    let mut w = StreamWriter::new(out, spec.n, spec.k)?;
    for ev in &spec.events {
        w.event(ev.kind, ev.edge)?;
    }
    w.finish()
}

/// Incremental writer for the stream format.
pub struct StreamWriter<W: Write> {
    out: io::BufWriter<W>,
}

impl<W: Write> StreamWriter<W> {
    pub fn new(out: W, n: usize, k: usize) -> io::Result<Self> {
        let mut out = io::BufWriter::new(out);
        writeln!(out, "{n} {k}")?;
        Ok(StreamWriter { out })
    }

    pub fn event(&mut self, kind: EventKind, e: Edge) -> io::Result<()> {
        let sign = match kind {
            EventKind::Insert => '+',
            EventKind::Delete => '-',
        };
        writeln!(self.out, "{sign} {} {}", e.u(), e.v())
    }

    pub fn finish(mut self) -> io::Result<()> {
        self.out.flush()
    }
}

pub fn parse_stream(text: &str) -> Result<StreamSpec> {
    read_stream(text.as_bytes())
}

pub fn read_stream<R: BufRead>(input: R) -> Result<StreamSpec> {
    let mut spec: Option<StreamSpec> = None;
    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        let err = |msg: &str| Error::Parse {
            line: lineno,
            msg: msg.to_string(),
        };
        match spec.as_mut() {
            None => {
                let [n, k] = fields[..] else {
                    return Err(err("expected header `n K`"));
                };
                let n = n.parse().map_err(|_| err("bad vertex count"))?;
                let k = k.parse().map_err(|_| err("bad deletion budget"))?;
                spec = Some(StreamSpec::new(n, k));
            }
            Some(spec) => {
                let [sign, a, b] = fields[..] else {
                    return Err(err("expected `+ u v` or `- u v`"));
                };
                let kind = match sign {
                    "+" => EventKind::Insert,
                    "-" => EventKind::Delete,
                    _ => return Err(err("event must start with + or -")),
                };
                let a: VertexId = a.parse().map_err(|_| err("bad vertex id"))?;
                let b: VertexId = b.parse().map_err(|_| err("bad vertex id"))?;
                let e = Edge::new(a, b).map_err(|_| err("self-loop"))?;
                if e.check_range(spec.n).is_err() {
                    return Err(err("vertex id out of range"));
                }
                spec.push(kind, e);
            }
        }
    }
    spec.ok_or(Error::Parse {
        line: 1,
        msg: "empty input".into(),
    })
}

impl StreamSpec {
    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        write_stream(self, &mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        read_stream(io::BufReader::new(f))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        write_stream(self, f)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn writes_canonical_text() {
        let mut s = StreamSpec::new(4, 1);
        s.insert(Edge::of(3, 1));
        s.insert(Edge::of(0, 2));
        s.delete(Edge::of(1, 3));
        assert_eq!(s.to_text(), "4 1\n+ 1 3\n+ 0 2\n- 1 3\n");
    }

    #[test]
    fn parses_loose_whitespace() {
        let s = parse_stream("3 2\n\n+  2 0\n-\t0 2\n").unwrap();
        assert_eq!(s.n, 3);
        assert_eq!(s.k, 2);
        assert_eq!(s.events.len(), 2);
        assert_eq!(s.events[1].seq, 2);
        assert_eq!(s.events[1].edge, Edge::of(0, 2));
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(matches!(parse_stream(""), Err(Error::Parse { .. })));
        assert!(matches!(parse_stream("3\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_stream("3 0\n* 0 1\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_stream("3 0\n+ 1 1\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_stream("3 0\n+ 1 3\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_stream("3 0\n+ 1 x\n"), Err(Error::Parse { line: 2, .. })));
    }
}
