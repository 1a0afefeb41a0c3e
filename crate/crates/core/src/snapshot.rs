//! Binary snapshot persistence for [`Graph`].
//!
//! Layout: magic "KGF1", version u32, then four length-prefixed sections
//! (header, node table, edge table, string pool), all little-endian.
//! Strings are interned in first-seen order, so identical graphs produce
//! byte-identical snapshots.

use std::io::{Read, Write};

use thiserror::Error;

use crate::graph::{Graph, NodeId, PropertyMap, PropertyValue};

pub const MAGIC: &[u8; 4] = b"KGF1";
pub const VERSION: u32 = 1;

const TAG_TEXT: u8 = 0;
const TAG_INT: u8 = 1;
const TAG_FLOAT: u8 = 2;
const TAG_BOOL: u8 = 3;

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("snapshot format error at byte {offset}: {detail}")]
    Format { offset: u64, detail: String },
    #[error("unsupported snapshot version {found} (expected {VERSION})")]
    Version { found: u32 },
    #[error("snapshot i/o: {0}")]
    Io(#[from] std::io::Error),
}

struct Interner {
    ids: std::collections::HashMap<String, u32>,
    pool: Vec<String>,
}

impl Interner {
    fn new() -> Self {
        Interner {
            ids: std::collections::HashMap::new(),
            pool: Vec::new(),
        }
    }

    fn intern(&mut self, s: &str) -> u32 {
        if let Some(&id) = self.ids.get(s) {
            return id;
        }
        let id = self.pool.len() as u32;
        self.ids.insert(s.to_string(), id);
        self.pool.push(s.to_string());
        id
    }
}

fn put_u32(buf: &mut Vec<u8>, v: u32) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn put_u64(buf: &mut Vec<u8>, v: u64) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn encode_props(buf: &mut Vec<u8>, props: &PropertyMap, pool: &mut Interner) {
    put_u32(buf, props.len() as u32);
    for (k, v) in props {
        put_u32(buf, pool.intern(k));
        match v {
            PropertyValue::Text(s) => {
                buf.push(TAG_TEXT);
                put_u32(buf, pool.intern(s));
            }
            PropertyValue::Int(i) => {
                buf.push(TAG_INT);
                buf.extend_from_slice(&i.to_le_bytes());
            }
            PropertyValue::Float(f) => {
                buf.push(TAG_FLOAT);
                buf.extend_from_slice(&f.to_bits().to_le_bytes());
            }
            PropertyValue::Bool(b) => {
                buf.push(TAG_BOOL);
                buf.push(u8::from(*b));
            }
        }
    }
}

/// Serializes a frozen graph into `sink`.
pub fn snapshot_save<W: Write>(g: &Graph, sink: &mut W) -> Result<(), SnapshotError> {
    let mut pool = Interner::new();

    let mut nodes = Vec::new();
    for n in g.nodes() {
        put_u32(&mut nodes, pool.intern(&n.label));
        encode_props(&mut nodes, &n.props, &mut pool);
    }

    let mut edges = Vec::new();
    for e in g.edges() {
        put_u32(&mut edges, e.src.0);
        put_u32(&mut edges, e.dst.0);
        put_u32(&mut edges, pool.intern(&e.etype));
        encode_props(&mut edges, &e.props, &mut pool);
    }

    let mut strings = Vec::new();
    for s in &pool.pool {
        put_u32(&mut strings, s.len() as u32);
        strings.extend_from_slice(s.as_bytes());
    }

    let mut header = Vec::new();
    put_u64(&mut header, g.node_count() as u64);
    put_u64(&mut header, g.edge_count() as u64);
    put_u64(&mut header, pool.pool.len() as u64);

    sink.write_all(MAGIC)?;
    sink.write_all(&VERSION.to_le_bytes())?;
    for section in [&header, &nodes, &edges, &strings] {
        sink.write_all(&(section.len() as u64).to_le_bytes())?;
        sink.write_all(section)?;
    }
    Ok(())
}

/// Cursor over a byte buffer that reports absolute file offsets in errors.
struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
    base: u64,
}

impl<'a> Cursor<'a> {
    fn new(buf: &'a [u8], base: u64) -> Self {
        Cursor { buf, pos: 0, base }
    }

    fn offset(&self) -> u64 {
        self.base + self.pos as u64
    }

    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8], SnapshotError> {
        if self.pos + n > self.buf.len() {
            return Err(SnapshotError::Format {
                offset: self.offset(),
                detail: format!("truncated while reading {what}"),
            });
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self, what: &str) -> Result<u8, SnapshotError> {
        Ok(self.take(1, what)?[0])
    }

    fn u32(&mut self, what: &str) -> Result<u32, SnapshotError> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64, SnapshotError> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn done(&self) -> bool {
        self.pos == self.buf.len()
    }
}

fn decode_props(
    cur: &mut Cursor<'_>,
    pool: &[String],
) -> Result<PropertyMap, SnapshotError> {
    let count = cur.u32("property count")?;
    let mut props = PropertyMap::new();
    for _ in 0..count {
        let key = pool_str(cur, pool, "property key")?;
        let tag = cur.u8("value tag")?;
        let value = match tag {
            TAG_TEXT => PropertyValue::Text(pool_str(cur, pool, "text value")?),
            TAG_INT => PropertyValue::Int(i64::from_le_bytes(
                cur.take(8, "int value")?.try_into().unwrap(),
            )),
            TAG_FLOAT => PropertyValue::Float(f64::from_bits(cur.u64("float value")?)),
            TAG_BOOL => PropertyValue::Bool(cur.u8("bool value")? != 0),
            other => {
                return Err(SnapshotError::Format {
                    offset: cur.offset() - 1,
                    detail: format!("unknown value tag {other}"),
                })
            }
        };
        props.insert(key, value);
    }
    Ok(props)
}

fn pool_str(
    cur: &mut Cursor<'_>,
    pool: &[String],
    what: &str,
) -> Result<String, SnapshotError> {
    let sid = cur.u32(what)?;
    pool.get(sid as usize).cloned().ok_or(SnapshotError::Format {
        offset: cur.offset() - 4,
        detail: format!("{what}: string id {sid} out of range"),
    })
}

/// Deserializes a snapshot. The returned graph is frozen.
pub fn snapshot_load<R: Read>(source: &mut R) -> Result<Graph, SnapshotError> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes)?;

    let mut top = Cursor::new(&bytes, 0);
    let magic = top.take(4, "magic")?;
    if magic != MAGIC {
        return Err(SnapshotError::Format {
            offset: 0,
            detail: format!("bad magic {magic:02x?}"),
        });
    }
    let version = top.u32("version")?;
    if version != VERSION {
        return Err(SnapshotError::Version { found: version });
    }

    let mut sections: Vec<(u64, &[u8])> = Vec::new();
    for name in ["header", "node table", "edge table", "string pool"] {
        let len = top.u64(&format!("{name} length"))? as usize;
        let base = top.offset();
        let payload = top.take(len, name)?;
        sections.push((base, payload));
    }
    if !top.done() {
        return Err(SnapshotError::Format {
            offset: top.offset(),
            detail: "trailing bytes after final section".into(),
        });
    }

    let mut header = Cursor::new(sections[0].1, sections[0].0);
    let node_count = header.u64("node count")? as usize;
    let edge_count = header.u64("edge count")? as usize;
    let string_count = header.u64("string count")? as usize;

    let mut strings = Cursor::new(sections[3].1, sections[3].0);
    let mut pool = Vec::with_capacity(string_count);
    for _ in 0..string_count {
        let len = strings.u32("string length")? as usize;
        let raw = strings.take(len, "string bytes")?;
        let s = std::str::from_utf8(raw).map_err(|_| SnapshotError::Format {
            offset: strings.offset() - len as u64,
            detail: "string pool entry is not valid UTF-8".into(),
        })?;
        pool.push(s.to_string());
    }

    let mut g = Graph::new();
    let mut nodes = Cursor::new(sections[1].1, sections[1].0);
    for _ in 0..node_count {
        let label = pool_str(&mut nodes, &pool, "node label")?;
        let props = decode_props(&mut nodes, &pool)?;
        g.add_node(label, props).expect("fresh graph is unfrozen");
    }
    if !nodes.done() {
        return Err(SnapshotError::Format {
            offset: nodes.offset(),
            detail: "trailing bytes in node table".into(),
        });
    }

    let mut edges = Cursor::new(sections[2].1, sections[2].0);
    for _ in 0..edge_count {
        let src = NodeId(edges.u32("edge src")?);
        let dst = NodeId(edges.u32("edge dst")?);
        let etype = pool_str(&mut edges, &pool, "edge type")?;
        let props = decode_props(&mut edges, &pool)?;
        let at = edges.offset();
        g.add_edge(src, dst, etype, props)
            .map_err(|e| SnapshotError::Format {
                offset: at,
                detail: e.to_string(),
            })?;
    }
    if !edges.done() {
        return Err(SnapshotError::Format {
            offset: edges.offset(),
            detail: "trailing bytes in edge table".into(),
        });
    }

    g.freeze();
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::PropertyMap;

    fn sample() -> Graph {
        let mut g = Graph::new();
        let mut p = PropertyMap::new();
        p.insert("name".into(), PropertyValue::text("Chelsea"));
        p.insert("won".into(), PropertyValue::Bool(true));
        p.insert("goals".into(), PropertyValue::Int(2));
        p.insert("xg".into(), PropertyValue::Float(1.75));
        let a = g.add_node("Team", p).unwrap();
        let b = g.add_node("Game", PropertyMap::new()).unwrap();
        g.add_edge(a, b, "PARTICIPATED_IN", PropertyMap::new()).unwrap();
        g.freeze();
        g
    }

    #[test]
    fn round_trip_identity() {
        let g = sample();
        let mut buf = Vec::new();
        snapshot_save(&g, &mut buf).unwrap();
        let h = snapshot_load(&mut buf.as_slice()).unwrap();
        assert_eq!(g.node_count(), h.node_count());
        assert_eq!(g.edge_count(), h.edge_count());
        for (a, b) in g.nodes().zip(h.nodes()) {
            assert_eq!(a, b);
        }
        for (a, b) in g.edges().zip(h.edges()) {
            assert_eq!(a, b);
        }
        assert!(h.is_frozen());
    }

    #[test]
    fn save_is_deterministic() {
        let g = sample();
        let mut one = Vec::new();
        let mut two = Vec::new();
        snapshot_save(&g, &mut one).unwrap();
        snapshot_save(&g, &mut two).unwrap();
        assert_eq!(one, two);
    }

    #[test]
    fn truncated_input_is_format_error() {
        let g = sample();
        let mut buf = Vec::new();
        snapshot_save(&g, &mut buf).unwrap();
        for cut in [3, 7, 12, buf.len() - 1] {
            let err = snapshot_load(&mut &buf[..cut]).unwrap_err();
            assert!(matches!(err, SnapshotError::Format { .. }), "cut={cut}: {err}");
        }
    }

    #[test]
    fn wrong_version_rejected() {
        let g = sample();
        let mut buf = Vec::new();
        snapshot_save(&g, &mut buf).unwrap();
        buf[4] = 9;
        assert!(matches!(
            snapshot_load(&mut buf.as_slice()),
            Err(SnapshotError::Version { found: 9 })
        ));
    }

    #[test]
    fn bad_magic_rejected() {
        let err = snapshot_load(&mut &b"NOPE\x01\x00\x00\x00"[..]).unwrap_err();
        assert!(matches!(err, SnapshotError::Format { offset: 0, .. }));
    }
}
