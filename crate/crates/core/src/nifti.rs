//! NIfTI-1 single-file reader and writer.
//!
//! Only what label volumes need is interpreted: the 348-byte header's
//! geometry fields, the voxel datatype and the data offset. Orientation
//! (qform/sform) is ignored; metric computation assumes co-registered grids.

use crate::volume::{LabelVolume, VolumeError};
use flate2::read::MultiGzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;
use std::io::{Read, Write};
use std::path::Path;
use thiserror::Error;

pub const HEADER_SIZE: usize = 348;
/// Header plus the 4-byte extension flag; the usual single-file data offset.
pub const DEFAULT_VOX_OFFSET: usize = 352;
pub const MAGIC_SINGLE: &[u8; 4] = b"n+1\0";
pub const MAGIC_PAIR: &[u8; 4] = b"ni1\0";

const NIFTI2_HEADER_SIZE: i32 = 540;
const INTEGER_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum NiftiError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("file shorter than the 348-byte NIfTI-1 header ({0} bytes)")]
    ShortHeader(usize),
    #[error("sizeof_hdr is 348 in neither byte order (read {0})")]
    BadHeaderSize(i32),
    #[error("NIfTI-2 files are not supported")]
    Nifti2Unsupported,
    #[error("bad magic {0:?}, expected \"n+1\\0\"")]
    BadMagic([u8; 4]),
    #[error("header-only file (magic \"ni1\\0\"); .hdr/.img pairs are not supported")]
    HeaderOnlyFile,
    #[error("unsupported datatype code {0}")]
    UnsupportedDatatype(i16),
    #[error("invalid dim field {0:?}")]
    BadDims([i16; 8]),
    #[error("dimension {axis} has extent {extent}; only 3D volumes are supported")]
    UnsupportedRank { axis: usize, extent: i16 },
    #[error("invalid vox_offset {0}")]
    BadVoxOffset(f32),
    #[error("payload truncated: need {needed} bytes from offset {offset}, file has {available}")]
    TruncatedData {
        offset: usize,
        needed: usize,
        available: usize,
    },
    #[error("voxel {index} holds non-integer value {value}")]
    NonIntegerLabels { index: usize, value: f64 },
    #[error("voxel {index} holds negative label {value}")]
    NegativeLabel { index: usize, value: f64 },
    #[error("label {value} at voxel {index} does not fit the {datatype:?} datatype")]
    LabelOutOfRange {
        index: usize,
        value: u32,
        datatype: Datatype,
    },
    #[error(transparent)]
    Volume(#[from] VolumeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Endian {
    Little,
    Big,
}

/// Voxel storage types accepted for label volumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Datatype {
    U8,
    I16,
    I32,
    F32,
    F64,
}

impl Datatype {
    pub fn from_code(code: i16) -> Option<Self> {
        Some(match code {
            2 => Self::U8,
            4 => Self::I16,
            8 => Self::I32,
            16 => Self::F32,
            64 => Self::F64,
            _ => return None,
        })
    }

    pub fn code(self) -> i16 {
        match self {
            Self::U8 => 2,
            Self::I16 => 4,
            Self::I32 => 8,
            Self::F32 => 16,
            Self::F64 => 64,
        }
    }

    pub fn size(self) -> usize {
        match self {
            Self::U8 => 1,
            Self::I16 => 2,
            Self::I32 | Self::F32 => 4,
            Self::F64 => 8,
        }
    }

    fn max_label(self) -> u32 {
        match self {
            Self::U8 => u8::MAX as u32,
            Self::I16 => i16::MAX as u32,
            Self::I32 => i32::MAX as u32,
            Self::F32 => 1 << 24,
            Self::F64 => u32::MAX,
        }
    }
}

/// The header fields this crate reads and writes.
#[derive(Debug, Clone, PartialEq)]
pub struct NiftiHeader {
    pub sizeof_hdr: i32,
    pub datatype_code: i16,
    pub bitpix: i16,
    pub dim: [i16; 8],
    pub pixdim: [f32; 8],
    pub vox_offset: f32,
    pub scl_slope: f32,
    pub scl_inter: f32,
    pub magic: [u8; 4],
    pub endian: Endian,
}

struct Fields<'a> {
    bytes: &'a [u8],
    endian: Endian,
}

impl Fields<'_> {
    fn array<const N: usize>(&self, offset: usize) -> [u8; N] {
        self.bytes[offset..offset + N].try_into().unwrap()
    }

    fn i16(&self, offset: usize) -> i16 {
        let raw = self.array(offset);
        match self.endian {
            Endian::Little => i16::from_le_bytes(raw),
            Endian::Big => i16::from_be_bytes(raw),
        }
    }

    fn i32(&self, offset: usize) -> i32 {
        let raw = self.array(offset);
        match self.endian {
            Endian::Little => i32::from_le_bytes(raw),
            Endian::Big => i32::from_be_bytes(raw),
        }
    }

    fn f32(&self, offset: usize) -> f32 {
        let raw = self.array(offset);
        match self.endian {
            Endian::Little => f32::from_le_bytes(raw),
            Endian::Big => f32::from_be_bytes(raw),
        }
    }
}

impl NiftiHeader {
    /// Header for storing `dims`/`spacing` with the given datatype.
    pub fn for_volume(dims: [usize; 3], spacing: [f64; 3], datatype: Datatype, endian: Endian) -> Self {
        let mut dim = [1i16; 8];
        dim[0] = 3;
        for (d, &n) in dim[1..4].iter_mut().zip(&dims) {
            *d = n as i16;
        }
        let mut pixdim = [1f32; 8];
        for (p, &s) in pixdim[1..4].iter_mut().zip(&spacing) {
            *p = s as f32;
        }
        Self {
            sizeof_hdr: HEADER_SIZE as i32,
            datatype_code: datatype.code(),
            bitpix: (datatype.size() * 8) as i16,
            dim,
            pixdim,
            vox_offset: DEFAULT_VOX_OFFSET as f32,
            scl_slope: 1.0,
            scl_inter: 0.0,
            magic: *MAGIC_SINGLE,
            endian,
        }
    }

    /// Decodes the fixed header, inferring byte order from `sizeof_hdr`.
    pub fn parse(bytes: &[u8]) -> Result<Self, NiftiError> {
        if bytes.len() < HEADER_SIZE {
            return Err(NiftiError::ShortHeader(bytes.len()));
        }
        let raw: [u8; 4] = bytes[0..4].try_into().unwrap();
        let endian = if i32::from_le_bytes(raw) == HEADER_SIZE as i32 {
            Endian::Little
        } else if i32::from_be_bytes(raw) == HEADER_SIZE as i32 {
            Endian::Big
        } else if i32::from_le_bytes(raw) == NIFTI2_HEADER_SIZE
            || i32::from_be_bytes(raw) == NIFTI2_HEADER_SIZE
        {
            return Err(NiftiError::Nifti2Unsupported);
        } else {
            return Err(NiftiError::BadHeaderSize(i32::from_le_bytes(raw)));
        };
        let f = Fields { bytes, endian };

        let magic: [u8; 4] = f.array(344);
        if &magic == MAGIC_PAIR {
            return Err(NiftiError::HeaderOnlyFile);
        }
        if &magic != MAGIC_SINGLE {
            return Err(NiftiError::BadMagic(magic));
        }

        let mut dim = [0i16; 8];
        for (i, d) in dim.iter_mut().enumerate() {
            *d = f.i16(40 + 2 * i);
        }
        let mut pixdim = [0f32; 8];
        for (i, p) in pixdim.iter_mut().enumerate() {
            *p = f.f32(76 + 4 * i);
        }
        Ok(Self {
            sizeof_hdr: f.i32(0),
            datatype_code: f.i16(70),
            bitpix: f.i16(72),
            dim,
            pixdim,
            vox_offset: f.f32(108),
            scl_slope: f.f32(112),
            scl_inter: f.f32(116),
            magic,
            endian,
        })
    }

    pub fn datatype(&self) -> Result<Datatype, NiftiError> {
        Datatype::from_code(self.datatype_code).ok_or(NiftiError::UnsupportedDatatype(self.datatype_code))
    }

    /// Spatial extents (nx, ny, nz). Higher dimensions must be singleton.
    pub fn spatial_dims(&self) -> Result<[usize; 3], NiftiError> {
        let rank = self.dim[0];
        if !(1..=7).contains(&rank) {
            return Err(NiftiError::BadDims(self.dim));
        }
        let rank = rank as usize;
        let mut dims = [1usize; 3];
        for axis in 1..=rank {
            let extent = self.dim[axis];
            if extent < 1 {
                return Err(NiftiError::BadDims(self.dim));
            }
            if axis <= 3 {
                dims[axis - 1] = extent as usize;
            } else if extent != 1 {
                return Err(NiftiError::UnsupportedRank { axis, extent });
            }
        }
        Ok(dims)
    }

    /// Voxel spacing in mm; unusable components fall back to 1.0.
    pub fn spacing(&self) -> [f64; 3] {
        let mut spacing = [1.0; 3];
        for (axis, s) in spacing.iter_mut().enumerate() {
            let p = f64::from(self.pixdim[axis + 1]).abs();
            if p.is_finite() && p > 0.0 {
                *s = p;
            } else {
                log::warn!("pixdim[{}] = {} is unusable; using spacing 1.0", axis + 1, self.pixdim[axis + 1]);
            }
        }
        spacing
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = vec![0u8; HEADER_SIZE];
        let put = |out: &mut [u8], offset: usize, raw: &[u8]| out[offset..offset + raw.len()].copy_from_slice(raw);
        let le = self.endian == Endian::Little;
        macro_rules! enc {
            ($v:expr) => {
                if le {
                    $v.to_le_bytes()
                } else {
                    $v.to_be_bytes()
                }
            };
        }
        put(&mut out, 0, &enc!(self.sizeof_hdr));
        out[38] = b'r';
        for (i, d) in self.dim.iter().enumerate() {
            put(&mut out, 40 + 2 * i, &enc!(d));
        }
        put(&mut out, 70, &enc!(self.datatype_code));
        put(&mut out, 72, &enc!(self.bitpix));
        for (i, p) in self.pixdim.iter().enumerate() {
            put(&mut out, 76 + 4 * i, &enc!(p));
        }
        put(&mut out, 108, &enc!(self.vox_offset));
        put(&mut out, 112, &enc!(self.scl_slope));
        put(&mut out, 116, &enc!(self.scl_inter));
        put(&mut out, 344, &self.magic);
        out
    }
}

fn maybe_gunzip(bytes: &[u8]) -> Result<std::borrow::Cow<'_, [u8]>, NiftiError> {
    if bytes.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        MultiGzDecoder::new(bytes).read_to_end(&mut out)?;
        Ok(out.into())
    } else {
        Ok(bytes.into())
    }
}

fn decode_values(payload: &[u8], datatype: Datatype, endian: Endian) -> Vec<f64> {
    macro_rules! decode {
        ($t:ty) => {
            payload
                .chunks_exact(std::mem::size_of::<$t>())
                .map(|c| {
                    let raw = c.try_into().unwrap();
                    let v = match endian {
                        Endian::Little => <$t>::from_le_bytes(raw),
                        Endian::Big => <$t>::from_be_bytes(raw),
                    };
                    v as f64
                })
                .collect()
        };
    }
    match datatype {
        Datatype::U8 => payload.iter().map(|&b| f64::from(b)).collect(),
        Datatype::I16 => decode!(i16),
        Datatype::I32 => decode!(i32),
        Datatype::F32 => decode!(f32),
        Datatype::F64 => decode!(f64),
    }
}

/// Parses a NIfTI-1 single file (optionally gzip-compressed) into a label volume.
pub fn parse_nifti(bytes: &[u8]) -> Result<LabelVolume, NiftiError> {
    let bytes = maybe_gunzip(bytes)?;
    let header = NiftiHeader::parse(&bytes)?;
    let datatype = header.datatype()?;
    let dims = header.spatial_dims()?;
    let spacing = header.spacing();

    let offset = header.vox_offset;
    if !offset.is_finite() || offset < HEADER_SIZE as f32 {
        return Err(NiftiError::BadVoxOffset(offset));
    }
    let offset = offset as usize;
    let count = dims[0] * dims[1] * dims[2];
    let needed = count * datatype.size();
    if bytes.len() < offset + needed {
        return Err(NiftiError::TruncatedData {
            offset,
            needed,
            available: bytes.len().saturating_sub(offset),
        });
    }
    let mut values = decode_values(&bytes[offset..offset + needed], datatype, header.endian);

    let (slope, inter) = (f64::from(header.scl_slope), f64::from(header.scl_inter));
    if slope != 0.0 && slope.is_finite() && (slope != 1.0 || inter != 0.0) {
        for v in &mut values {
            *v = *v * slope + inter;
        }
    }

    let labels = values
        .into_iter()
        .enumerate()
        .map(|(index, value)| {
            let rounded = value.round();
            if !value.is_finite() || (value - rounded).abs() > INTEGER_TOLERANCE {
                Err(NiftiError::NonIntegerLabels { index, value })
            } else if rounded < 0.0 {
                Err(NiftiError::NegativeLabel { index, value })
            } else if rounded > f64::from(u32::MAX) {
                Err(NiftiError::NonIntegerLabels { index, value })
            } else {
                Ok(rounded as u32)
            }
        })
        .collect::<Result<Vec<u32>, _>>()?;

    Ok(LabelVolume::new(dims, spacing, labels)?)
}

pub fn read_nifti(path: impl AsRef<Path>) -> Result<LabelVolume, NiftiError> {
    parse_nifti(&std::fs::read(path)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WriteOptions {
    pub datatype: Datatype,
    pub endian: Endian,
    pub gzip: bool,
}

impl Default for WriteOptions {
    fn default() -> Self {
        Self {
            datatype: Datatype::U8,
            endian: Endian::Little,
            gzip: false,
        }
    }
}

/// Serializes a label volume as a NIfTI-1 single file.
pub fn write_nifti(volume: &LabelVolume, options: WriteOptions) -> Result<Vec<u8>, NiftiError> {
    let WriteOptions { datatype, endian, gzip } = options;
    let header = NiftiHeader::for_volume(volume.dims(), volume.spacing(), datatype, endian);
    let mut out = header.to_bytes();
    out.resize(DEFAULT_VOX_OFFSET, 0);

    let max = datatype.max_label();
    for (index, &value) in volume.labels().iter().enumerate() {
        if value > max {
            return Err(NiftiError::LabelOutOfRange { index, value, datatype });
        }
        let le = endian == Endian::Little;
        macro_rules! push {
            ($v:expr) => {
                out.extend_from_slice(&if le { $v.to_le_bytes() } else { $v.to_be_bytes() })
            };
        }
        match datatype {
            Datatype::U8 => out.push(value as u8),
            Datatype::I16 => push!(value as i16),
            Datatype::I32 => push!(value as i32),
            Datatype::F32 => push!(value as f32),
            Datatype::F64 => push!(f64::from(value)),
        }
    }

    if gzip {
        let mut enc = GzEncoder::new(Vec::new(), Compression::fast());
        enc.write_all(&out)?;
        out = enc.finish()?;
    }
    Ok(out)
}

pub fn write_nifti_file(path: impl AsRef<Path>, volume: &LabelVolume, options: WriteOptions) -> Result<(), NiftiError> {
    std::fs::write(path, write_nifti(volume, options)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cube() -> LabelVolume {
        let mut v = LabelVolume::zeros([4, 3, 2], [0.5, 1.0, 2.5]).unwrap();
        v.set(1, 1, 0, 1);
        v.set(2, 2, 1, 2);
        v.set(3, 0, 1, 7);
        v
    }

    fn raw_file(header: &NiftiHeader, payload: &[u8]) -> Vec<u8> {
        let mut out = header.to_bytes();
        out.resize(DEFAULT_VOX_OFFSET, 0);
        out.extend_from_slice(payload);
        out
    }

    #[test]
    fn header_offsets() {
        let h = NiftiHeader::for_volume([4, 4, 4], [1.0; 3], Datatype::I16, Endian::Little);
        let b = h.to_bytes();
        assert_eq!(b.len(), 348);
        assert_eq!(i32::from_le_bytes(b[0..4].try_into().unwrap()), 348);
        assert_eq!(i16::from_le_bytes(b[40..42].try_into().unwrap()), 3);
        assert_eq!(i16::from_le_bytes(b[42..44].try_into().unwrap()), 4);
        assert_eq!(i16::from_le_bytes(b[70..72].try_into().unwrap()), 4);
        assert_eq!(f32::from_le_bytes(b[80..84].try_into().unwrap()), 1.0);
        assert_eq!(f32::from_le_bytes(b[108..112].try_into().unwrap()), 352.0);
        assert_eq!(&b[344..348], b"n+1\0");
    }

    #[test]
    fn uint8_direct_mapping() {
        let h = NiftiHeader::for_volume([4, 4, 4], [1.0; 3], Datatype::U8, Endian::Little);
        let v = parse_nifti(&raw_file(&h, &[0u8; 64])).unwrap();
        assert_eq!(v.dims(), [4, 4, 4]);
        assert_eq!(v.spacing(), [1.0, 1.0, 1.0]);
        assert_eq!(v.foreground_count(), 0);
    }

    #[test]
    fn big_endian_header_is_byte_swapped() {
        let h = NiftiHeader::for_volume([2, 1, 1], [1.5, 2.0, 3.0], Datatype::I16, Endian::Big);
        let bytes = raw_file(&h, &[0, 5, 1, 0]);
        assert_eq!(&bytes[0..4], &348i32.to_be_bytes());
        let parsed = NiftiHeader::parse(&bytes).unwrap();
        assert_eq!(parsed.endian, Endian::Big);
        let v = parse_nifti(&bytes).unwrap();
        assert_eq!(v.labels(), &[5, 256]);
        assert_eq!(v.spacing(), [1.5, 2.0, 3.0]);
    }

    #[test]
    fn float_labels_within_tolerance_round() {
        let h = NiftiHeader::for_volume([2, 1, 1], [1.0; 3], Datatype::F32, Endian::Little);
        let mut payload = 2.000_000_1f32.to_le_bytes().to_vec();
        payload.extend_from_slice(&0.0f32.to_le_bytes());
        let v = parse_nifti(&raw_file(&h, &payload)).unwrap();
        assert_eq!(v.labels(), &[2, 0]);

        let mut payload = 2.5f32.to_le_bytes().to_vec();
        payload.extend_from_slice(&0.0f32.to_le_bytes());
        assert!(matches!(
            parse_nifti(&raw_file(&h, &payload)),
            Err(NiftiError::NonIntegerLabels { index: 0, .. })
        ));
    }

    #[test]
    fn error_paths() {
        let h = NiftiHeader::for_volume([2, 2, 2], [1.0; 3], Datatype::U8, Endian::Little);

        let mut pair = h.clone();
        pair.magic = *MAGIC_PAIR;
        assert!(matches!(parse_nifti(&raw_file(&pair, &[0; 8])), Err(NiftiError::HeaderOnlyFile)));

        let mut bad = h.clone();
        bad.magic = *b"abcd";
        assert!(matches!(parse_nifti(&raw_file(&bad, &[0; 8])), Err(NiftiError::BadMagic(_))));

        let mut rgb = h.clone();
        rgb.datatype_code = 128;
        assert!(matches!(
            parse_nifti(&raw_file(&rgb, &[0; 8])),
            Err(NiftiError::UnsupportedDatatype(128))
        ));

        assert!(matches!(
            parse_nifti(&raw_file(&h, &[0; 7])),
            Err(NiftiError::TruncatedData { needed: 8, available: 7, .. })
        ));

        let mut bytes = raw_file(&h, &[0; 8]);
        bytes[0..4].copy_from_slice(&1234i32.to_le_bytes());
        assert!(matches!(parse_nifti(&bytes), Err(NiftiError::BadHeaderSize(1234))));
        bytes[0..4].copy_from_slice(&540i32.to_le_bytes());
        assert!(matches!(parse_nifti(&bytes), Err(NiftiError::Nifti2Unsupported)));

        let mut neg = NiftiHeader::for_volume([1, 1, 1], [1.0; 3], Datatype::I16, Endian::Little);
        neg.vox_offset = 352.0;
        assert!(matches!(
            parse_nifti(&raw_file(&neg, &(-3i16).to_le_bytes())),
            Err(NiftiError::NegativeLabel { .. })
        ));

        assert!(matches!(parse_nifti(&[0u8; 100]), Err(NiftiError::ShortHeader(100))));
    }

    #[test]
    fn rank_rules() {
        let mut h = NiftiHeader::for_volume([2, 2, 1], [1.0; 3], Datatype::U8, Endian::Little);
        h.dim[0] = 4;
        h.dim[4] = 1;
        assert_eq!(parse_nifti(&raw_file(&h, &[0; 4])).unwrap().dims(), [2, 2, 1]);
        h.dim[4] = 3;
        assert!(matches!(
            parse_nifti(&raw_file(&h, &[0; 12])),
            Err(NiftiError::UnsupportedRank { axis: 4, extent: 3 })
        ));
        let mut flat = NiftiHeader::for_volume([5, 1, 1], [1.0; 3], Datatype::U8, Endian::Little);
        flat.dim[0] = 1;
        flat.dim[2] = 0;
        assert_eq!(parse_nifti(&raw_file(&flat, &[1; 5])).unwrap().dims(), [5, 1, 1]);
    }

    #[test]
    fn zero_pixdim_defaults_to_one() {
        let mut h = NiftiHeader::for_volume([1, 1, 1], [1.0; 3], Datatype::U8, Endian::Little);
        h.pixdim[2] = 0.0;
        h.pixdim[3] = 0.8;
        let v = parse_nifti(&raw_file(&h, &[3])).unwrap();
        assert_eq!(v.spacing(), [1.0, 1.0, f64::from(0.8f32)]);
    }

    #[test]
    fn round_trip_all_datatypes_and_orders() {
        let v = cube();
        for datatype in [Datatype::U8, Datatype::I16, Datatype::I32, Datatype::F32, Datatype::F64] {
            for endian in [Endian::Little, Endian::Big] {
                for gzip in [false, true] {
                    let bytes = write_nifti(&v, WriteOptions { datatype, endian, gzip }).unwrap();
                    assert_eq!(bytes.starts_with(&[0x1f, 0x8b]), gzip);
                    assert_eq!(parse_nifti(&bytes).unwrap(), v, "{datatype:?} {endian:?} gzip={gzip}");
                }
            }
        }
    }

    #[test]
    fn writer_rejects_overflow() {
        let v = LabelVolume::new([1, 1, 1], [1.0; 3], vec![300]).unwrap();
        assert!(matches!(
            write_nifti(&v, WriteOptions::default()),
            Err(NiftiError::LabelOutOfRange { value: 300, .. })
        ));
    }
}
