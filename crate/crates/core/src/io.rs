//! File formats: binary CSR graphs ("MXG1"), binary feature matrices
//! ("MXF1"), tab-separated edge lists, ordering files, and loss-trace
//! golden files with hex-float encoding for exact round-trips.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::CsrGraph;
use crate::kernels::FeatureMatrix;

const GRAPH_MAGIC: &[u8; 4] = b"MXG1";
const FEATURE_MAGIC: &[u8; 4] = b"MXF1";
const FLAG_WEIGHTED: u8 = 0b01;
const FLAG_NARROW: u8 = 0b10; // 32-bit indices

/// Statistics reported by the edge-list loader.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LoadStats {
    pub lines: usize,
    pub duplicates: usize,
    pub self_loops: usize,
}

/// Parse a text edge list: one `u<TAB>v` pair per line, 0-based ids.
/// Whitespace other than tab is tolerated. Lines starting with `#` are
/// comments; a `# nodes=N` header declares the node count, and any id >= N
/// is then a range error. Self-loops are preserved (and surface in the
/// returned stats rather than being silently merged).
pub fn load_edge_list(path: &Path, make_symmetric: bool) -> Result<(CsrGraph, LoadStats)> {
    let file = File::open(path)?;
    let reader = BufReader::new(file);
    let mut edges: Vec<(usize, usize)> = Vec::new();
    let mut declared_n: Option<usize> = None;
    let mut stats = LoadStats {
        lines: 0,
        duplicates: 0,
        self_loops: 0,
    };

    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('#') {
            if let Some(eq) = rest.trim().strip_prefix("nodes=") {
                declared_n = Some(eq.trim().parse::<usize>().map_err(|e| Error::Parse {
                    line: lineno,
                    msg: format!("bad node count: {e}"),
                })?);
            }
            continue;
        }
        stats.lines += 1;
        let mut it = trimmed.split_whitespace();
        let parse = |tok: Option<&str>, lineno: usize| -> Result<usize> {
            tok.ok_or(Error::Parse {
                line: lineno,
                msg: "expected two node ids".into(),
            })?
            .parse::<usize>()
            .map_err(|e| Error::Parse {
                line: lineno,
                msg: format!("bad node id: {e}"),
            })
        };
        let u = parse(it.next(), lineno)?;
        let v = parse(it.next(), lineno)?;
        if it.next().is_some() {
            return Err(Error::Parse {
                line: lineno,
                msg: "trailing tokens after edge".into(),
            });
        }
        if let Some(n) = declared_n {
            if u >= n || v >= n {
                return Err(Error::Range(format!(
                    "line {lineno}: id {} >= declared nodes {n}",
                    u.max(v)
                )));
            }
        }
        if u == v {
            stats.self_loops += 1;
        }
        edges.push((u, v));
    }

    let n =
        declared_n.unwrap_or_else(|| edges.iter().map(|&(u, v)| u.max(v) + 1).max().unwrap_or(0));
    {
        let mut sorted = edges.clone();
        sorted.sort_unstable();
        let len = sorted.len();
        sorted.dedup();
        stats.duplicates = len - sorted.len();
    }
    let graph = CsrGraph::from_edges(n, &edges, make_symmetric)?;
    Ok((graph, stats))
}

fn write_u64<W: Write>(w: &mut W, x: u64) -> Result<()> {
    w.write_all(&x.to_le_bytes())?;
    Ok(())
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf).map_err(truncated)?;
    Ok(u64::from_le_bytes(buf))
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf).map_err(truncated)?;
    Ok(u32::from_le_bytes(buf))
}

fn truncated(e: std::io::Error) -> Error {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        Error::Format("truncated file".into())
    } else {
        Error::Io(e)
    }
}

/// Write a graph in the binary CSR format. Indices narrow to 32 bits when
/// the graph is small enough; weights are stored as f32.
pub fn save_csr(path: &Path, g: &CsrGraph) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let narrow = (g.num_nodes() as u64) < (1u64 << 32) && (g.nnz() as u64) < (1u64 << 32);
    let mut flags = 0u8;
    if g.is_weighted() {
        flags |= FLAG_WEIGHTED;
    }
    if narrow {
        flags |= FLAG_NARROW;
    }
    w.write_all(GRAPH_MAGIC)?;
    w.write_all(&[flags])?;
    write_u64(&mut w, g.num_nodes() as u64)?;
    write_u64(&mut w, g.nnz() as u64)?;
    let write_idx = |w: &mut BufWriter<File>, x: usize| -> Result<()> {
        if narrow {
            w.write_all(&(x as u32).to_le_bytes())?;
        } else {
            w.write_all(&(x as u64).to_le_bytes())?;
        }
        Ok(())
    };
    for &off in g.row_offsets() {
        write_idx(&mut w, off)?;
    }
    for &c in g.col_indices() {
        write_idx(&mut w, c)?;
    }
    if let Some(vals) = g.values() {
        for &v in vals {
            w.write_all(&(v as f32).to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Read a graph written by [`save_csr`]. Weights widen from f32 to f64.
pub fn load_csr(path: &Path) -> Result<CsrGraph> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(truncated)?;
    if &magic != GRAPH_MAGIC {
        return Err(Error::Format(format!(
            "bad magic {:?}, expected {GRAPH_MAGIC:?}",
            magic
        )));
    }
    let mut flags = [0u8; 1];
    r.read_exact(&mut flags).map_err(truncated)?;
    let weighted = flags[0] & FLAG_WEIGHTED != 0;
    let narrow = flags[0] & FLAG_NARROW != 0;
    let n = read_u64(&mut r)? as usize;
    let nnz = read_u64(&mut r)? as usize;

    let read_idx = |r: &mut BufReader<File>| -> Result<usize> {
        Ok(if narrow {
            read_u32(r)? as usize
        } else {
            read_u64(r)? as usize
        })
    };
    let mut row_offsets = Vec::with_capacity(n + 1);
    for _ in 0..=n {
        row_offsets.push(read_idx(&mut r)?);
    }
    let mut col_indices = Vec::with_capacity(nnz);
    for _ in 0..nnz {
        col_indices.push(read_idx(&mut r)?);
    }
    let values = if weighted {
        let mut vals = Vec::with_capacity(nnz);
        for _ in 0..nnz {
            let mut buf = [0u8; 4];
            r.read_exact(&mut buf).map_err(truncated)?;
            vals.push(f32::from_le_bytes(buf) as f64);
        }
        Some(vals)
    } else {
        None
    };
    // symmetry is re-derived rather than trusted from the file
    let g = CsrGraph::from_parts(n, row_offsets, col_indices, values, false)?;
    let symmetric = g.is_structurally_symmetric();
    CsrGraph::from_parts(
        g.num_nodes(),
        g.row_offsets().to_vec(),
        g.col_indices().to_vec(),
        g.values().map(<[f64]>::to_vec),
        symmetric,
    )
}

/// Write a feature matrix: magic, u64 rows, u64 cols, row-major f32.
pub fn save_features(path: &Path, m: &FeatureMatrix<f64>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(FEATURE_MAGIC)?;
    write_u64(&mut w, m.rows() as u64)?;
    write_u64(&mut w, m.cols() as u64)?;
    for &x in m.data() {
        w.write_all(&(x as f32).to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_features(path: &Path) -> Result<FeatureMatrix<f64>> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(truncated)?;
    if &magic != FEATURE_MAGIC {
        return Err(Error::Format(format!(
            "bad magic {:?}, expected {FEATURE_MAGIC:?}",
            magic
        )));
    }
    let rows = read_u64(&mut r)? as usize;
    let cols = read_u64(&mut r)? as usize;
    let mut data = Vec::with_capacity(rows * cols);
    for _ in 0..rows * cols {
        let mut buf = [0u8; 4];
        r.read_exact(&mut buf).map_err(truncated)?;
        data.push(f32::from_le_bytes(buf) as f64);
    }
    FeatureMatrix::from_vec(rows, cols, data)
}

/// Write an ordering: one node id per line, in position order.
pub fn save_ordering(path: &Path, perm: &[usize]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for &v in perm {
        writeln!(w, "{v}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_ordering(path: &Path) -> Result<Vec<usize>> {
    let reader = BufReader::new(File::open(path)?);
    let mut perm = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        perm.push(t.parse::<usize>().map_err(|e| Error::Parse {
            line: idx + 1,
            msg: format!("bad node id: {e}"),
        })?);
    }
    Ok(perm)
}

/// Encode an f64 as a C-style hex float ("0x1.921fb54442d18p+1"), which
/// round-trips exactly.
pub fn to_hex_float(x: f64) -> String {
    if x == 0.0 {
        return if x.is_sign_negative() {
            "-0x0p+0".into()
        } else {
            "0x0p+0".into()
        };
    }
    let bits = x.to_bits();
    let sign = if bits >> 63 == 1 { "-" } else { "" };
    let raw_exp = ((bits >> 52) & 0x7FF) as i64;
    let mantissa = bits & ((1u64 << 52) - 1);
    let (lead, exp, mant) = if raw_exp == 0 {
        // subnormal: 0.mantissa * 2^-1022
        (0u64, -1022i64, mantissa)
    } else {
        (1u64, raw_exp - 1023, mantissa)
    };
    let mut hex = format!("{mant:013x}");
    while hex.len() > 1 && hex.ends_with('0') {
        hex.pop();
    }
    if hex == "0" {
        format!("{sign}0x{lead}p{exp:+}")
    } else {
        format!("{sign}0x{lead}.{hex}p{exp:+}")
    }
}

/// Parse the hex-float form produced by [`to_hex_float`].
pub fn from_hex_float(s: &str) -> Result<f64> {
    let err = || Error::Format(format!("bad hex float {s:?}"));
    let (sign, rest) = match s.strip_prefix('-') {
        Some(r) => (-1.0, r),
        None => (1.0, s),
    };
    let rest = rest.strip_prefix("0x").ok_or_else(err)?;
    let (mant_str, exp_str) = rest.split_once('p').ok_or_else(err)?;
    let exp: i64 = exp_str.parse().map_err(|_| err())?;
    let (int_part, frac_part) = match mant_str.split_once('.') {
        Some((i, f)) => (i, f),
        None => (mant_str, ""),
    };
    let int_val = u64::from_str_radix(int_part, 16).map_err(|_| err())?;
    let mut value = int_val as f64;
    let mut scale = 1.0f64 / 16.0;
    for ch in frac_part.chars() {
        let digit = ch.to_digit(16).ok_or_else(err)? as f64;
        value += digit * scale;
        scale /= 16.0;
    }
    Ok(sign * value * (exp as f64).exp2())
}

/// Write a loss trace as a JSON array of hex-float strings.
pub fn save_trace(path: &Path, trace: &[f64]) -> Result<()> {
    let strings: Vec<String> = trace.iter().map(|&x| to_hex_float(x)).collect();
    let json = serde_json::to_string_pretty(&strings)
        .map_err(|e| Error::Format(format!("trace encode: {e}")))?;
    std::fs::write(path, json)?;
    Ok(())
}

pub fn load_trace(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)?;
    let strings: Vec<String> =
        serde_json::from_str(&text).map_err(|e| Error::Format(format!("trace decode: {e}")))?;
    strings.iter().map(|s| from_hex_float(s)).collect()
}
