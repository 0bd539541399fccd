//! Binary little-endian PLY in the reference 3DGS vertex layout.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::scene::{GaussianScene, RawGaussian, Side, SH_BASES, SH_COEFFS};

const REST_PER_CHANNEL: usize = SH_BASES - 1;

/// Vertex property names in file order.
pub fn property_names() -> Vec<String> {
    let mut names: Vec<String> = ["x", "y", "z", "nx", "ny", "nz"].iter().map(|s| s.to_string()).collect();
    names.extend((0..3).map(|i| format!("f_dc_{i}")));
    names.extend((0..3 * REST_PER_CHANNEL).map(|i| format!("f_rest_{i}")));
    names.push("opacity".into());
    names.extend((0..3).map(|i| format!("scale_{i}")));
    names.extend((0..4).map(|i| format!("rot_{i}")));
    names
}

struct Header {
    vertex_count: usize,
    /// For each property in file order, its index in [`property_names`].
    slots: Vec<usize>,
}

fn read_header<R: BufRead>(reader: &mut R) -> Result<Header> {
    let mut line = String::new();
    let mut next_line = |reader: &mut R| -> Result<String> {
        line.clear();
        if reader.read_line(&mut line)? == 0 {
            return Err(Error::Schema("unexpected end of file in header".into()));
        }
        Ok(line.trim_end_matches(['\n', '\r']).to_string())
    };
    if next_line(reader)? != "ply" {
        return Err(Error::Schema("missing 'ply' magic".into()));
    }
    let names = property_names();
    let mut vertex_count = None;
    let mut in_vertex = false;
    let mut slots = Vec::new();
    let mut seen = vec![false; names.len()];
    loop {
        let l = next_line(reader)?;
        let tokens: Vec<&str> = l.split_whitespace().collect();
        match tokens.as_slice() {
            ["end_header"] => break,
            ["format", "binary_little_endian", _] => {}
            ["format", other, ..] => {
                return Err(Error::Schema(format!("unsupported format '{other}', expected binary_little_endian")))
            }
            ["comment", ..] | ["obj_info", ..] | [] => {}
            ["element", "vertex", n] => {
                let n: usize = n
                    .parse()
                    .map_err(|_| Error::Schema(format!("bad vertex count '{n}'")))?;
                vertex_count = Some(n);
                in_vertex = true;
            }
            ["element", name, _] => {
                return Err(Error::Schema(format!("unexpected element '{name}'")));
            }
            ["property", ty, name] if in_vertex => {
                if *ty != "float" && *ty != "float32" {
                    return Err(Error::Schema(format!("property '{name}' has type '{ty}', expected float")));
                }
                let slot = names
                    .iter()
                    .position(|n| n == name)
                    .ok_or_else(|| Error::Schema(format!("unexpected property '{name}'")))?;
                if seen[slot] {
                    return Err(Error::Schema(format!("duplicate property '{name}'")));
                }
                seen[slot] = true;
                slots.push(slot);
            }
            _ => return Err(Error::Schema(format!("unrecognized header line '{l}'"))),
        }
    }
    let vertex_count = vertex_count.ok_or_else(|| Error::Schema("no vertex element".into()))?;
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(Error::Schema(format!("missing property '{}'", names[missing])));
    }
    Ok(Header { vertex_count, slots })
}

/// Parses a splat model from a reader and applies activations.
pub fn read_splat_model<R: Read>(reader: R) -> Result<GaussianScene> {
    let mut reader = BufReader::new(reader);
    let header = read_header(&mut reader)?;
    if header.vertex_count == 0 {
        return Err(Error::EmptyScene);
    }
    let stride = header.slots.len() * 4;
    let mut buf = vec![0u8; stride];
    let mut values = vec![0f32; header.slots.len()];
    let mut gaussians = Vec::with_capacity(header.vertex_count);
    for v in 0..header.vertex_count {
        reader.read_exact(&mut buf).map_err(|e| {
            Error::Schema(format!("truncated vertex data at vertex {v} of {}: {e}", header.vertex_count))
        })?;
        for (i, &slot) in header.slots.iter().enumerate() {
            values[slot] = f32::from_le_bytes(buf[i * 4..i * 4 + 4].try_into().unwrap());
        }
        gaussians.push(unpack(&values));
    }
    let mut trailing = [0u8; 1];
    if reader.read(&mut trailing)? != 0 {
        return Err(Error::Schema("trailing bytes after vertex data".into()));
    }
    GaussianScene::from_raw(gaussians)
}

fn unpack(v: &[f32]) -> RawGaussian {
    let mut sh = [0f32; SH_COEFFS];
    sh[..3].copy_from_slice(&v[6..9]);
    for c in 0..3 {
        for k in 1..SH_BASES {
            sh[k * 3 + c] = v[9 + c * REST_PER_CHANNEL + (k - 1)];
        }
    }
    let o = 9 + 3 * REST_PER_CHANNEL;
    RawGaussian {
        position: [v[0], v[1], v[2]],
        sh,
        opacity: v[o],
        scale: [v[o + 1], v[o + 2], v[o + 3]],
        rotation: [v[o + 4], v[o + 5], v[o + 6], v[o + 7]],
    }
}

fn pack(g: &RawGaussian, out: &mut Vec<f32>) {
    out.clear();
    out.extend_from_slice(&g.position);
    out.extend_from_slice(&[0.0; 3]);
    out.extend_from_slice(&g.sh[..3]);
    for c in 0..3 {
        for k in 1..SH_BASES {
            out.push(g.sh[k * 3 + c]);
        }
    }
    out.push(g.opacity);
    out.extend_from_slice(&g.scale);
    out.extend_from_slice(&g.rotation);
}

pub fn load_splat_model(path: impl AsRef<Path>) -> Result<GaussianScene> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_splat_model(file)
}

/// Writes the Gaussians for which `select(g)` holds. Returns the count written.
pub fn write_selection<W: Write>(scene: &GaussianScene, select: impl Fn(usize) -> bool, writer: W) -> Result<usize> {
    let chosen: Vec<usize> = (0..scene.count()).filter(|&g| select(g)).collect();
    if chosen.is_empty() {
        return Err(Error::EmptySelection);
    }
    let mut w = BufWriter::new(writer);
    writeln!(w, "ply")?;
    writeln!(w, "format binary_little_endian 1.0")?;
    writeln!(w, "element vertex {}", chosen.len())?;
    for name in property_names() {
        writeln!(w, "property float {name}")?;
    }
    writeln!(w, "end_header")?;
    let mut values = Vec::with_capacity(property_names().len());
    for &g in &chosen {
        pack(&scene.raw(g), &mut values);
        for v in &values {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(chosen.len())
}

/// Serializes the side of `labels` selected by `side`.
pub fn write_splat_model<W: Write>(scene: &GaussianScene, labels: &[bool], side: Side, writer: W) -> Result<usize> {
    if labels.len() != scene.count() {
        return Err(Error::InvalidInput(format!(
            "label vector has {} entries, scene has {} Gaussians",
            labels.len(),
            scene.count()
        )));
    }
    write_selection(scene, |g| side.selects(labels[g]), writer)
}

pub fn save_splat_model(scene: &GaussianScene, labels: &[bool], side: Side, path: impl AsRef<Path>) -> Result<usize> {
    let path = path.as_ref();
    if labels.len() == scene.count() && !labels.iter().any(|&l| side.selects(l)) {
        return Err(Error::EmptySelection);
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_splat_model(scene, labels, side, file)
}
