//! Parser for the graph-map text format.
//!
//! Grammar (one section per header, `#` starts a line comment):
//!
//! ```text
//! document     = vertices edges vertex-map edge-map
//! vertices     = "vertices:" name+
//! edges        = "edges:" edge-decl+
//! edge-decl    = name "=" "(" name "," name ")"
//! vertex-map   = "map" "vertices:" (name "->" name)+
//! edge-map     = "map" "edges:" (name "->" word)+
//! word         = letter+
//! letter       = name | name "^-1"
//! ```
//!
//! Names are `[A-Za-z0-9_]+`. Every vertex and edge must be declared
//! before use; every vertex and edge needs exactly one image line.

use std::collections::HashMap;
use std::fmt;

use fibercone::graph::{CombGraph, EdgePath, GraphMap};

#[derive(Debug)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.column, self.message)
    }
}

impl std::error::Error for ParseError {}

fn err<T>(line: usize, column: usize, message: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError { line, column, message: message.into() })
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    None,
    Vertices,
    Edges,
    VertexMap,
    EdgeMap,
}

/// Parsed graph map together with the declared names, for readable output.
pub struct ParsedMap {
    pub map: GraphMap,
    pub vertex_names: Vec<String>,
    pub edge_names: Vec<String>,
}

pub fn parse_graph_map(input: &str) -> Result<ParsedMap, ParseError> {
    let mut vertex_ids: HashMap<String, u32> = HashMap::new();
    let mut vertex_names: Vec<String> = Vec::new();
    let mut edge_ids: HashMap<String, u32> = HashMap::new();
    let mut edge_names: Vec<String> = Vec::new();
    let mut edge_decls: Vec<(u32, u32)> = Vec::new();
    let mut vertex_images: HashMap<u32, (u32, usize)> = HashMap::new();
    let mut edge_words: HashMap<u32, (Vec<(u32, bool)>, usize)> = HashMap::new();

    let mut section = Section::None;
    for (lineno, raw) in input.lines().enumerate() {
        let lineno = lineno + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let lower = line.to_ascii_lowercase();
        if lower == "vertices:" || lower.starts_with("vertices:") {
            section = Section::Vertices;
            let rest = &line["vertices:".len()..];
            parse_vertex_names(rest, lineno, &mut vertex_ids, &mut vertex_names)?;
            continue;
        }
        if lower == "edges:" {
            section = Section::Edges;
            continue;
        }
        if lower == "map vertices:" {
            section = Section::VertexMap;
            continue;
        }
        if lower == "map edges:" {
            section = Section::EdgeMap;
            continue;
        }
        match section {
            Section::None => {
                return err(lineno, 1, "expected a section header (vertices:, edges:, map vertices:, map edges:)")
            }
            Section::Vertices => {
                parse_vertex_names(line, lineno, &mut vertex_ids, &mut vertex_names)?;
            }
            Section::Edges => {
                // name = (v, w)
                let Some((name, rest)) = line.split_once('=') else {
                    return err(lineno, 1, "edge declaration must look like `a = (v, w)`");
                };
                let name = name.trim();
                let rest = rest.trim();
                if !rest.starts_with('(') || !rest.ends_with(')') {
                    return err(lineno, line.find('=').unwrap_or(0) + 2, "expected `(v, w)`");
                }
                let inner = &rest[1..rest.len() - 1];
                let Some((a, b)) = inner.split_once(',') else {
                    return err(lineno, 1, "expected two comma-separated vertices");
                };
                let a = a.trim();
                let b = b.trim();
                let &va = vertex_ids
                    .get(a)
                    .ok_or_else(|| ParseError {
                        line: lineno,
                        column: 1,
                        message: format!("unknown vertex `{a}`"),
                    })?;
                let &vb = vertex_ids.get(b).ok_or_else(|| ParseError {
                    line: lineno,
                    column: 1,
                    message: format!("unknown vertex `{b}`"),
                })?;
                if edge_ids.contains_key(name) {
                    return err(lineno, 1, format!("edge `{name}` declared twice"));
                }
                edge_ids.insert(name.to_string(), edge_decls.len() as u32);
                edge_names.push(name.to_string());
                edge_decls.push((va, vb));
            }
            Section::VertexMap => {
                let Some((from, to)) = line.split_once("->") else {
                    return err(lineno, 1, "vertex image must look like `v -> w`");
                };
                let from = from.trim();
                let to = to.trim();
                let &vf = vertex_ids.get(from).ok_or_else(|| ParseError {
                    line: lineno,
                    column: 1,
                    message: format!("unknown vertex `{from}`"),
                })?;
                let &vt = vertex_ids.get(to).ok_or_else(|| ParseError {
                    line: lineno,
                    column: 1,
                    message: format!("unknown vertex `{to}`"),
                })?;
                if let Some((_, prev)) = vertex_images.get(&vf) {
                    return err(lineno, 1, format!("vertex `{from}` already mapped on line {prev}"));
                }
                vertex_images.insert(vf, (vt, lineno));
            }
            Section::EdgeMap => {
                let Some((from, word)) = line.split_once("->") else {
                    return err(lineno, 1, "edge image must look like `a -> b c^-1`");
                };
                let from = from.trim();
                let &ef = edge_ids.get(from).ok_or_else(|| ParseError {
                    line: lineno,
                    column: 1,
                    message: format!("unknown edge `{from}`"),
                })?;
                let mut letters = Vec::new();
                for tok in word.split_whitespace() {
                    let (name, inverse) = match tok.strip_suffix("^-1") {
                        Some(base) => (base, true),
                        None => (tok, false),
                    };
                    let &e = edge_ids.get(name).ok_or_else(|| ParseError {
                        line: lineno,
                        column: 1,
                        message: format!("unknown edge `{name}` in image word"),
                    })?;
                    letters.push((e, inverse));
                }
                if letters.is_empty() {
                    return err(lineno, 1, "image words must be nonempty (combinatorial maps)");
                }
                if let Some((_, prev)) = edge_words.get(&ef) {
                    return err(lineno, 1, format!("edge `{from}` already mapped on line {prev}"));
                }
                edge_words.insert(ef, (letters, lineno));
            }
        }
    }

    if vertex_names.is_empty() {
        return err(1, 1, "no vertices declared");
    }
    let graph = CombGraph::new(vertex_names.len() as u32, &edge_decls)
        .map_err(|e| ParseError { line: 1, column: 1, message: e.to_string() })?;
    let mut vi = Vec::with_capacity(vertex_names.len());
    for v in 0..vertex_names.len() as u32 {
        let Some(&(img, _)) = vertex_images.get(&v) else {
            return err(1, 1, format!("vertex `{}` has no image", vertex_names[v as usize]));
        };
        vi.push(img);
    }
    let mut paths = Vec::with_capacity(edge_names.len());
    for e in 0..edge_names.len() as u32 {
        let Some((letters, lineno)) = edge_words.get(&e) else {
            return err(1, 1, format!("edge `{}` has no image", edge_names[e as usize]));
        };
        let darts: Vec<u32> =
            letters.iter().map(|&(e, inv)| (e << 1) | u32::from(inv)).collect();
        let base = graph.init(darts[0]);
        let path = EdgePath::new(&graph, darts, base).map_err(|ge| ParseError {
            line: *lineno,
            column: 1,
            message: format!("image word is not a composable path: {ge}"),
        })?;
        paths.push(path);
    }
    let map = GraphMap::from_edge_images(graph.clone(), graph, vi, paths).map_err(|ge| {
        ParseError { line: 1, column: 1, message: format!("invalid graph map: {ge}") }
    })?;
    Ok(ParsedMap { map, vertex_names, edge_names })
}

fn parse_vertex_names(
    rest: &str,
    lineno: usize,
    vertex_ids: &mut HashMap<String, u32>,
    vertex_names: &mut Vec<String>,
) -> Result<(), ParseError> {
    for name in rest.split_whitespace() {
        if vertex_ids.contains_key(name) {
            return err(lineno, 1, format!("vertex `{name}` declared twice"));
        }
        vertex_ids.insert(name.to_string(), vertex_names.len() as u32);
        vertex_names.push(name.to_string());
    }
    Ok(())
}

/// Render a graph map in the text format (used by `--emit-fixture`).
pub fn render_graph_map(p: &ParsedMap) -> String {
    let g = &p.map.domain;
    let mut out = String::new();
    out.push_str("vertices:");
    for v in &p.vertex_names {
        out.push(' ');
        out.push_str(v);
    }
    out.push_str("\nedges:\n");
    for e in g.edges() {
        let d = g.positive_dart(e);
        out.push_str(&format!(
            "  {} = ({}, {})\n",
            p.edge_names[e as usize],
            p.vertex_names[g.init(d) as usize],
            p.vertex_names[g.term(d) as usize]
        ));
    }
    out.push_str("map vertices:\n");
    for v in 0..g.n_vertices() {
        out.push_str(&format!(
            "  {} -> {}\n",
            p.vertex_names[v as usize],
            p.vertex_names[p.map.vertex_image[v as usize] as usize]
        ));
    }
    out.push_str("map edges:\n");
    for e in g.edges() {
        let d = g.positive_dart(e);
        let word: Vec<String> = p.map.dart_image[d as usize]
            .darts
            .iter()
            .map(|&q| {
                let name = &p.edge_names[(q >> 1) as usize];
                if q % 2 == 0 { name.clone() } else { format!("{name}^-1") }
            })
            .collect();
        out.push_str(&format!("  {} -> {}\n", p.edge_names[e as usize], word.join(" ")));
    }
    out
}
