//! Edge-list text format: a header line `n k p seed` followed by one
//! `u v` pair per line with `u < v`, in sorted order.

use std::io::{BufRead, Write};

use super::{ConceptGraph, NodeId};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeListHeader {
    pub n: usize,
    pub k: usize,
    pub p: f64,
    pub seed: u64,
}

pub fn write_edge_list<W: Write>(
    mut out: W,
    header: &EdgeListHeader,
    graph: &ConceptGraph,
) -> Result<()> {
    writeln!(
        out,
        "{} {} {} {}",
        header.n, header.k, header.p, header.seed
    )?;
    for (u, v) in graph.edges() {
        writeln!(out, "{u} {v}")?;
    }
    Ok(())
}

fn field<T: std::str::FromStr>(token: Option<&str>, line: usize, what: &str) -> Result<T> {
    token
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| Error::Parse(format!("line {line}: bad or missing {what}")))
}

pub fn read_edge_list<R: BufRead>(input: R) -> Result<(EdgeListHeader, ConceptGraph)> {
    let mut lines = input.lines().enumerate();
    let (_, first) = lines
        .next()
        .ok_or_else(|| Error::Parse("empty edge list".into()))?;
    let first = first?;
    let mut tokens = first.split_whitespace();
    let header = EdgeListHeader {
        n: field(tokens.next(), 1, "n")?,
        k: field(tokens.next(), 1, "k")?,
        p: field(tokens.next(), 1, "p")?,
        seed: field(tokens.next(), 1, "seed")?,
    };
    let mut edges = Vec::new();
    let mut previous: Option<(NodeId, NodeId)> = None;
    for (idx, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let u: NodeId = field(tokens.next(), idx + 1, "u")?;
        let v: NodeId = field(tokens.next(), idx + 1, "v")?;
        if u >= v || previous.is_some_and(|p| p >= (u, v)) {
            return Err(Error::Parse(format!(
                "line {}: edges must satisfy u < v and be strictly sorted",
                idx + 1
            )));
        }
        previous = Some((u, v));
        edges.push((u, v));
    }
    let graph = ConceptGraph::from_edges(header.n, edges)?;
    Ok((header, graph))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_stream;
    use crate::semgraph::{generate_substrate, rewire, SubstrateSpec};

    #[test]
    fn round_trip() {
        let g0 = generate_substrate(SubstrateSpec::new(30, 4).unwrap()).unwrap();
        let g = rewire(&g0, 0.2, &mut derive_stream(11, &[1])).unwrap();
        let header = EdgeListHeader {
            n: 30,
            k: 4,
            p: 0.2,
            seed: 11,
        };
        let mut buf = Vec::new();
        write_edge_list(&mut buf, &header, &g).unwrap();
        let (h, back) = read_edge_list(buf.as_slice()).unwrap();
        assert_eq!(h, header);
        assert_eq!(back, g);
    }

    #[test]
    fn golden_text() {
        let g = generate_substrate(SubstrateSpec::new(4, 2).unwrap()).unwrap();
        let header = EdgeListHeader {
            n: 4,
            k: 2,
            p: 0.0,
            seed: 7,
        };
        let mut buf = Vec::new();
        write_edge_list(&mut buf, &header, &g).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "4 2 0 7\n0 1\n0 3\n1 2\n2 3\n"
        );
    }

    #[test]
    fn rejects_unsorted_and_malformed() {
        assert!(read_edge_list("4 2 0 7\n1 2\n0 1\n".as_bytes()).is_err());
        assert!(read_edge_list("4 2 0 7\n2 1\n".as_bytes()).is_err());
        assert!(read_edge_list("4 2 zero 7\n".as_bytes()).is_err());
        assert!(read_edge_list("".as_bytes()).is_err());
        assert!(read_edge_list("3 2 0 7\n0 5\n".as_bytes()).is_err());
    }
}
