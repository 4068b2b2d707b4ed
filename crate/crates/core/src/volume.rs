//! 3-D label volumes, sample stacks, and the `blv1`/`bfv1` file formats.
//!
//! A `blv1` file is a single-line JSON header
//! `{"magic":"blv1","dims":[nz,ny,nx],"spacing_mm":[sz,sy,sx]}` terminated by
//! a newline byte (0x0A), followed immediately by `nz*ny*nx` bytes of label
//! ids, z-major then y then x. `bfv1` is the float variant used for
//! uncertainty maps: same header shape with magic `bfv1` and a little-endian
//! f32 payload.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Label id 0 is always background.
pub const BACKGROUND: u8 = 0;

/// A 3-D integer label grid with voxel spacing.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelVolume {
    dims: (usize, usize, usize),
    spacing_mm: (f64, f64, f64),
    labels: Vec<u8>,
}

impl LabelVolume {
    pub fn new(
        dims: (usize, usize, usize),
        spacing_mm: (f64, f64, f64),
        labels: Vec<u8>,
    ) -> Result<Self> {
        let (nz, ny, nx) = dims;
        if nz == 0 || ny == 0 || nx == 0 {
            return Err(Error::InvalidVolume(format!("dims must be positive, got {dims:?}")));
        }
        let n = nz
            .checked_mul(ny)
            .and_then(|v| v.checked_mul(nx))
            .ok_or_else(|| Error::InvalidVolume("dims overflow".into()))?;
        if labels.len() != n {
            return Err(Error::InvalidVolume(format!(
                "labels length {} does not match dims product {}",
                labels.len(),
                n
            )));
        }
        let (sz, sy, sx) = spacing_mm;
        if !(sz > 0.0 && sy > 0.0 && sx > 0.0) || !(sz.is_finite() && sy.is_finite() && sx.is_finite()) {
            return Err(Error::InvalidVolume(format!(
                "spacing components must be positive, got {spacing_mm:?}"
            )));
        }
        Ok(Self { dims, spacing_mm, labels })
    }

    /// Volume filled with a single label.
    pub fn filled(dims: (usize, usize, usize), spacing_mm: (f64, f64, f64), label: u8) -> Result<Self> {
        let n = dims.0 * dims.1 * dims.2;
        Self::new(dims, spacing_mm, vec![label; n])
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        self.dims
    }

    pub fn spacing_mm(&self) -> (f64, f64, f64) {
        self.spacing_mm
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    #[inline]
    pub fn index(&self, z: usize, y: usize, x: usize) -> usize {
        (z * self.dims.1 + y) * self.dims.2 + x
    }

    #[inline]
    pub fn at(&self, z: usize, y: usize, x: usize) -> u8 {
        self.labels[self.index(z, y, x)]
    }

    /// Volume of one voxel in mm^3.
    pub fn voxel_volume_mm3(&self) -> f64 {
        self.spacing_mm.0 * self.spacing_mm.1 * self.spacing_mm.2
    }

    pub fn count_label(&self, label: u8) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }

    pub fn same_grid(&self, other: &LabelVolume) -> bool {
        self.dims == other.dims && self.spacing_mm == other.spacing_mm
    }
}

/// A real-valued field over the same grid layout as [`LabelVolume`].
#[derive(Debug, Clone, PartialEq)]
pub struct FloatVolume {
    dims: (usize, usize, usize),
    spacing_mm: (f64, f64, f64),
    values: Vec<f32>,
}

impl FloatVolume {
    pub fn new(
        dims: (usize, usize, usize),
        spacing_mm: (f64, f64, f64),
        values: Vec<f32>,
    ) -> Result<Self> {
        let n = dims.0 * dims.1 * dims.2;
        if values.len() != n {
            return Err(Error::InvalidVolume(format!(
                "values length {} does not match dims product {}",
                values.len(),
                n
            )));
        }
        let (sz, sy, sx) = spacing_mm;
        if !(sz > 0.0 && sy > 0.0 && sx > 0.0) {
            return Err(Error::InvalidVolume(format!(
                "spacing components must be positive, got {spacing_mm:?}"
            )));
        }
        Ok(Self { dims, spacing_mm, values })
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        self.dims
    }

    pub fn spacing_mm(&self) -> (f64, f64, f64) {
        self.spacing_mm
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }
}

/// The N Monte-Carlo segmentation samples for one subject.
#[derive(Debug, Clone)]
pub struct SampleStack {
    subject_id: String,
    organ_label: u8,
    samples: Vec<LabelVolume>,
}

impl SampleStack {
    pub fn new(subject_id: impl Into<String>, organ_label: u8, samples: Vec<LabelVolume>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InvalidStack(format!(
                "need at least 2 samples, got {}",
                samples.len()
            )));
        }
        let first = &samples[0];
        for (i, s) in samples.iter().enumerate().skip(1) {
            if !s.same_grid(first) {
                return Err(Error::InvalidStack(format!(
                    "sample {i} grid {:?}/{:?} differs from sample 0 {:?}/{:?}",
                    s.dims(),
                    s.spacing_mm(),
                    first.dims(),
                    first.spacing_mm()
                )));
            }
        }
        Ok(Self {
            subject_id: subject_id.into(),
            organ_label,
            samples,
        })
    }

    pub fn subject_id(&self) -> &str {
        &self.subject_id
    }

    pub fn organ_label(&self) -> u8 {
        self.organ_label
    }

    pub fn samples(&self) -> &[LabelVolume] {
        &self.samples
    }

    pub fn n_samples(&self) -> usize {
        self.samples.len()
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        self.samples[0].dims()
    }

    pub fn spacing_mm(&self) -> (f64, f64, f64) {
        self.samples[0].spacing_mm()
    }

    pub fn voxel_volume_mm3(&self) -> f64 {
        self.samples[0].voxel_volume_mm3()
    }
}

#[derive(Serialize, Deserialize)]
struct VolumeHeader {
    magic: String,
    dims: [usize; 3],
    spacing_mm: [f64; 3],
}

const LABEL_MAGIC: &str = "blv1";
const FLOAT_MAGIC: &str = "bfv1";

fn read_header_line(reader: &mut impl Read) -> Result<VolumeHeader> {
    let mut line = Vec::new();
    let mut byte = [0u8; 1];
    loop {
        let n = reader.read(&mut byte)?;
        if n == 0 {
            return Err(Error::MalformedHeader("unexpected end of file before newline".into()));
        }
        if byte[0] == b'\n' {
            break;
        }
        line.push(byte[0]);
        if line.len() > 4096 {
            return Err(Error::MalformedHeader("header line exceeds 4096 bytes".into()));
        }
    }
    let text = std::str::from_utf8(&line)
        .map_err(|e| Error::MalformedHeader(format!("header is not utf-8: {e}")))?;
    serde_json::from_str(text).map_err(|e| Error::MalformedHeader(format!("header is not valid json: {e}")))
}

fn validate_header(header: &VolumeHeader, expected_magic: &str) -> Result<usize> {
    if header.magic != expected_magic {
        return Err(Error::UnsupportedVersion(header.magic.clone()));
    }
    let [nz, ny, nx] = header.dims;
    if nz == 0 || ny == 0 || nx == 0 {
        return Err(Error::MalformedHeader(format!("dims must be positive, got {:?}", header.dims)));
    }
    if header.spacing_mm.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
        return Err(Error::MalformedHeader(format!(
            "spacing components must be positive, got {:?}",
            header.spacing_mm
        )));
    }
    nz.checked_mul(ny)
        .and_then(|v| v.checked_mul(nx))
        .ok_or_else(|| Error::MalformedHeader("dims overflow".into()))
}

fn write_header(writer: &mut impl Write, magic: &str, dims: (usize, usize, usize), spacing: (f64, f64, f64)) -> Result<()> {
    let header = VolumeHeader {
        magic: magic.to_string(),
        dims: [dims.0, dims.1, dims.2],
        spacing_mm: [spacing.0, spacing.1, spacing.2],
    };
    let text = serde_json::to_string(&header)?;
    writer.write_all(text.as_bytes())?;
    writer.write_all(b"\n")?;
    Ok(())
}

/// Reads a `blv1` label volume.
pub fn read_label_volume(path: impl AsRef<Path>) -> Result<LabelVolume> {
    let mut reader = BufReader::new(File::open(path)?);
    let header = read_header_line(&mut reader)?;
    let n = validate_header(&header, LABEL_MAGIC)?;
    let mut labels = Vec::new();
    reader.read_to_end(&mut labels)?;
    if labels.len() != n {
        return Err(Error::PayloadLength { expected: n, found: labels.len() });
    }
    LabelVolume::new(
        (header.dims[0], header.dims[1], header.dims[2]),
        (header.spacing_mm[0], header.spacing_mm[1], header.spacing_mm[2]),
        labels,
    )
}

/// Writes a `blv1` label volume.
pub fn write_label_volume(vol: &LabelVolume, path: impl AsRef<Path>) -> Result<()> {
    let mut writer = BufWriter::new(File::create(path)?);
    write_header(&mut writer, LABEL_MAGIC, vol.dims(), vol.spacing_mm())?;
    writer.write_all(vol.labels())?;
    writer.flush()?;
    Ok(())
}

/// Reads a `bfv1` float volume (little-endian f32 payload).
pub fn read_float_volume(path: impl AsRef<Path>) -> Result<FloatVolume> {
    let mut reader = BufReader::new(File::open(path)?);
    let header = read_header_line(&mut reader)?;
    let n = validate_header(&header, FLOAT_MAGIC)?;
    let mut payload = Vec::new();
    reader.read_to_end(&mut payload)?;
    if payload.len() != n * 4 {
        return Err(Error::PayloadLength { expected: n * 4, found: payload.len() });
    }
    let values = payload
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect();
    FloatVolume::new(
        (header.dims[0], header.dims[1], header.dims[2]),
        (header.spacing_mm[0], header.spacing_mm[1], header.spacing_mm[2]),
        values,
    )
}

/// Writes a `bfv1` float volume.
pub fn write_float_volume(vol: &FloatVolume, path: impl AsRef<Path>) -> Result<()> {
    let mut writer = BufWriter::new(File::create(path)?);
    write_header(&mut writer, FLOAT_MAGIC, vol.dims(), vol.spacing_mm())?;
    for v in vol.values() {
        writer.write_all(&v.to_le_bytes())?;
    }
    writer.flush()?;
    Ok(())
}
