//! Minimal PLY reader and writer for voxelized colored point clouds.
//!
//! Reads `ascii` and `binary_little_endian` files whose first element is
//! `vertex` with `x`, `y`, `z` (any numeric type) and `red`, `green`, `blue`.
//! Other vertex properties are skipped. Elements after `vertex` are ignored.

use std::io::{BufRead, BufReader, Read, Write};

use crate::cloud::{ColorTriple, PointCloud, VoxelPosition};
use crate::color::{rgb_to_ycbcr, ycbcr_to_rgb};
use crate::error::{Error, Result};

/// How the three color channels of a file are interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColorSpace {
    Rgb,
    YCbCr,
}

impl ColorSpace {
    fn tag(self) -> &'static str {
        match self {
            ColorSpace::Rgb => "rgb",
            ColorSpace::YCbCr => "ycbcr",
        }
    }
}

/// Maps file positions to voxel indices: `voxel = (p - offset) * scale`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Voxelization {
    pub scale: f64,
    pub offset: [f64; 3],
}

impl Default for Voxelization {
    fn default() -> Self {
        Voxelization { scale: 1.0, offset: [0.0; 3] }
    }
}

const INTEGRAL_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Scalar {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl Scalar {
    fn parse(name: &str) -> Result<Self> {
        Ok(match name {
            "char" | "int8" => Scalar::I8,
            "uchar" | "uint8" => Scalar::U8,
            "short" | "int16" => Scalar::I16,
            "ushort" | "uint16" => Scalar::U16,
            "int" | "int32" => Scalar::I32,
            "uint" | "uint32" => Scalar::U32,
            "float" | "float32" => Scalar::F32,
            "double" | "float64" => Scalar::F64,
            other => return Err(Error::Ply(format!("unknown scalar type {other:?}"))),
        })
    }

    fn size(self) -> usize {
        match self {
            Scalar::I8 | Scalar::U8 => 1,
            Scalar::I16 | Scalar::U16 => 2,
            Scalar::I32 | Scalar::U32 | Scalar::F32 => 4,
            Scalar::F64 => 8,
        }
    }

    fn is_float(self) -> bool {
        matches!(self, Scalar::F32 | Scalar::F64)
    }

    fn decode_le(self, b: &[u8]) -> f64 {
        match self {
            Scalar::I8 => f64::from(b[0] as i8),
            Scalar::U8 => f64::from(b[0]),
            Scalar::I16 => f64::from(i16::from_le_bytes([b[0], b[1]])),
            Scalar::U16 => f64::from(u16::from_le_bytes([b[0], b[1]])),
            Scalar::I32 => f64::from(i32::from_le_bytes([b[0], b[1], b[2], b[3]])),
            Scalar::U32 => f64::from(u32::from_le_bytes([b[0], b[1], b[2], b[3]])),
            Scalar::F32 => f64::from(f32::from_le_bytes([b[0], b[1], b[2], b[3]])),
            Scalar::F64 => f64::from_le_bytes(b[..8].try_into().expect("8 bytes")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Ascii,
    BinaryLe,
}

struct Header {
    format: Format,
    vertex_count: usize,
    properties: Vec<(String, Scalar)>,
    color_space: Option<ColorSpace>,
}

fn read_header<R: BufRead>(r: &mut R) -> Result<Header> {
    let mut line = String::new();
    let mut next = |line: &mut String| -> Result<()> {
        line.clear();
        if r.read_line(line)? == 0 {
            return Err(Error::Ply("unexpected end of header".into()));
        }
        Ok(())
    };
    next(&mut line)?;
    if line.trim_end() != "ply" {
        return Err(Error::Ply("missing 'ply' magic".into()));
    }
    let mut format = None;
    let mut vertex_count = None;
    let mut properties = Vec::new();
    let mut color_space = None;
    let mut in_vertex = false;
    let mut seen_element = false;
    loop {
        next(&mut line)?;
        let words: Vec<&str> = line.split_whitespace().collect();
        match words.as_slice() {
            ["end_header"] => break,
            ["format", f, _version] => {
                format = Some(match *f {
                    "ascii" => Format::Ascii,
                    "binary_little_endian" => Format::BinaryLe,
                    other => return Err(Error::Ply(format!("unsupported format {other:?}"))),
                })
            }
            ["comment", "color_space", cs] => {
                color_space = match *cs {
                    "rgb" => Some(ColorSpace::Rgb),
                    "ycbcr" => Some(ColorSpace::YCbCr),
                    _ => None,
                }
            }
            ["comment", ..] | ["obj_info", ..] | [] => {}
            ["element", name, count] => {
                if !seen_element && *name != "vertex" {
                    return Err(Error::Ply("first element must be 'vertex'".into()));
                }
                in_vertex = *name == "vertex" && !seen_element;
                if in_vertex {
                    vertex_count =
                        Some(count.parse::<usize>().map_err(|_| Error::Ply(format!("bad vertex count {count:?}")))?);
                }
                seen_element = true;
            }
            ["property", "list", ..] if in_vertex => {
                return Err(Error::Ply("list properties on vertices are not supported".into()))
            }
            ["property", ty, name] if in_vertex => properties.push((name.to_string(), Scalar::parse(ty)?)),
            ["property", ..] => {}
            _ => return Err(Error::Ply(format!("unrecognized header line {:?}", line.trim_end()))),
        }
    }
    Ok(Header {
        format: format.ok_or_else(|| Error::Ply("missing format line".into()))?,
        vertex_count: vertex_count.ok_or_else(|| Error::Ply("missing vertex element".into()))?,
        properties,
        color_space,
    })
}

fn integral(v: f64, axis: usize, vox: &Voxelization) -> Result<i64> {
    let scaled = (v - vox.offset[axis]) * vox.scale;
    let r = scaled.round();
    if !scaled.is_finite() || (scaled - r).abs() > INTEGRAL_TOLERANCE {
        return Err(Error::Ply(format!("position {v} is not integral after voxelization")));
    }
    Ok(r as i64)
}

/// A decoded file: the cloud plus the color space recorded in its header.
#[derive(Debug, Clone)]
pub struct PlyCloud {
    pub cloud: PointCloud,
    pub color_space: Option<ColorSpace>,
}

/// Reads a cloud. Colors are converted to YCbCr according to `color_space`,
/// or to the file's `comment color_space` line when `None` (RGB if absent).
pub fn read_ply<R: Read>(reader: R, color_space: Option<ColorSpace>, vox: &Voxelization) -> Result<PlyCloud> {
    let mut r = BufReader::new(reader);
    let header = read_header(&mut r)?;
    let find = |name: &str| header.properties.iter().position(|(n, _)| n == name);
    let cols: Vec<usize> = ["x", "y", "z", "red", "green", "blue"]
        .iter()
        .map(|n| find(n).ok_or_else(|| Error::Ply(format!("missing vertex property {n:?}"))))
        .collect::<Result<_>>()?;
    for &c in &cols[3..] {
        if header.properties[c].1.is_float() {
            return Err(Error::Ply("color properties must be integers".into()));
        }
    }

    let mut raw = vec![0f64; header.properties.len()];
    let mut points = Vec::with_capacity(header.vertex_count);
    let space = color_space.or(header.color_space).unwrap_or(ColorSpace::Rgb);
    let mut line = String::new();
    let stride: usize = header.properties.iter().map(|(_, s)| s.size()).sum();
    let mut buf = vec![0u8; stride];
    for v in 0..header.vertex_count {
        match header.format {
            Format::Ascii => {
                line.clear();
                if r.read_line(&mut line)? == 0 {
                    return Err(Error::Ply(format!("file ends at vertex {v}")));
                }
                let mut fields = line.split_whitespace();
                for slot in raw.iter_mut() {
                    let tok = fields.next().ok_or_else(|| Error::Ply(format!("vertex {v}: too few fields")))?;
                    *slot = tok.parse().map_err(|_| Error::Ply(format!("vertex {v}: bad number {tok:?}")))?;
                }
            }
            Format::BinaryLe => {
                r.read_exact(&mut buf).map_err(|_| Error::Ply(format!("file ends at vertex {v}")))?;
                let mut at = 0;
                for (slot, (_, ty)) in raw.iter_mut().zip(&header.properties) {
                    *slot = ty.decode_le(&buf[at..at + ty.size()]);
                    at += ty.size();
                }
            }
        }
        let pos = VoxelPosition::from_i64(
            integral(raw[cols[0]], 0, vox)?,
            integral(raw[cols[1]], 1, vox)?,
            integral(raw[cols[2]], 2, vox)?,
        )?;
        let c = [3, 4, 5].map(|i| raw[cols[i]] as i64);
        let color = match space {
            ColorSpace::Rgb => rgb_to_ycbcr(c[0], c[1], c[2])?,
            ColorSpace::YCbCr => ColorTriple::from_i64(c)?,
        };
        points.push((pos, color));
    }
    Ok(PlyCloud { cloud: PointCloud::from_points(points)?, color_space: header.color_space })
}

/// Writes a cloud as binary little-endian PLY with float positions and
/// uchar colors, converting from YCbCr when `color_space` is RGB.
pub fn write_ply<W: Write>(writer: W, cloud: &PointCloud, color_space: ColorSpace) -> Result<()> {
    let mut w = std::io::BufWriter::new(writer);
    write!(
        w,
        "ply\nformat binary_little_endian 1.0\ncomment color_space {}\nelement vertex {}\n\
         property float x\nproperty float y\nproperty float z\n\
         property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n",
        color_space.tag(),
        cloud.len()
    )?;
    for (p, c) in cloud.iter() {
        for v in p.coords() {
            w.write_all(&(v as f32).to_le_bytes())?;
        }
        let bytes = match color_space {
            ColorSpace::YCbCr => c.channels(),
            ColorSpace::Rgb => ycbcr_to_rgb(c),
        };
        w.write_all(&bytes)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes an ASCII PLY with integer positions; handy for fixtures.
pub fn write_ply_ascii<W: Write>(writer: W, cloud: &PointCloud, color_space: ColorSpace) -> Result<()> {
    let mut w = std::io::BufWriter::new(writer);
    write!(
        w,
        "ply\nformat ascii 1.0\ncomment color_space {}\nelement vertex {}\n\
         property int x\nproperty int y\nproperty int z\n\
         property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n",
        color_space.tag(),
        cloud.len()
    )?;
    for (p, c) in cloud.iter() {
        let [r, g, b] = match color_space {
            ColorSpace::YCbCr => c.channels(),
            ColorSpace::Rgb => ycbcr_to_rgb(c),
        };
        writeln!(w, "{} {} {} {r} {g} {b}", p.x(), p.y(), p.z())?;
    }
    w.flush()?;
    Ok(())
}
