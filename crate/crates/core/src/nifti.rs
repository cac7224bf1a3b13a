//! Single-file little-endian NIfTI-1 (`.nii`) volumes with float32 or uint8
//! payloads. The per-voxel component meaning is carried in the `descrip`
//! field as `dfa:<tag>`.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

const HEADER_SIZE: usize = 348;
const DATA_OFFSET: usize = 352;
const DT_UINT8: i16 = 2;
const DT_FLOAT32: i16 = 16;

#[derive(Debug, Error)]
pub enum NiftiError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed header at byte {offset}: {message}")]
    Parse { offset: usize, message: String },
    #[error("truncated file: expected {expected} bytes, found {actual}")]
    Truncated { expected: usize, actual: usize },
    #[error("unsupported datatype code {0} (only float32 and uint8)")]
    UnsupportedDatatype(i16),
    #[error("expected a {expected} volume, found {found}")]
    TagMismatch { expected: String, found: String },
    #[error("{0}")]
    Invalid(String),
}

pub type NiftiResult<T> = std::result::Result<T, NiftiError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Datatype {
    Float32,
    Uint8,
}

impl Datatype {
    fn code(self) -> i16 {
        match self {
            Datatype::Float32 => DT_FLOAT32,
            Datatype::Uint8 => DT_UINT8,
        }
    }

    fn bytes(self) -> usize {
        match self {
            Datatype::Float32 => 4,
            Datatype::Uint8 => 1,
        }
    }
}

/// Meaning of the per-voxel components.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Semantics {
    Scalar,
    /// Even-order SH coefficients up to order `L`.
    Sh(usize),
    /// `Dxx, Dxy, Dxz, Dyy, Dyz, Dzz`.
    Tensor6,
    /// `K` peaks as `(x, y, z, weight)`, zero-padded.
    Peaks(usize),
    /// `u1, u2, u3`, zeros for missing axes.
    Frame9,
    Mask,
    /// Generic `N`-component vector.
    Vector(usize),
}

impl Semantics {
    pub fn components(self) -> usize {
        match self {
            Semantics::Scalar | Semantics::Mask => 1,
            Semantics::Sh(l) => (l + 1) * (l + 2) / 2,
            Semantics::Tensor6 => 6,
            Semantics::Peaks(k) => 4 * k,
            Semantics::Frame9 => 9,
            Semantics::Vector(n) => n,
        }
    }

    /// Tag name without parameters, used in mismatch messages.
    pub fn kind(self) -> &'static str {
        match self {
            Semantics::Scalar => "scalar",
            Semantics::Sh(_) => "sh",
            Semantics::Tensor6 => "tensor6",
            Semantics::Peaks(_) => "peaks",
            Semantics::Frame9 => "frame9",
            Semantics::Mask => "mask",
            Semantics::Vector(_) => "vec",
        }
    }
}

impl fmt::Display for Semantics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Semantics::Sh(l) => write!(f, "sh:{l}"),
            Semantics::Peaks(k) => write!(f, "peaks:{k}"),
            Semantics::Vector(n) => write!(f, "vec:{n}"),
            other => f.write_str(other.kind()),
        }
    }
}

impl FromStr for Semantics {
    type Err = NiftiError;

    fn from_str(s: &str) -> NiftiResult<Self> {
        let bad = || NiftiError::Invalid(format!("unknown component tag {s:?}"));
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a.parse::<usize>().map_err(|_| bad())?)),
            None => (s, None),
        };
        Ok(match (name, arg) {
            ("scalar", None) => Semantics::Scalar,
            ("tensor6", None) => Semantics::Tensor6,
            ("frame9", None) => Semantics::Frame9,
            ("mask", None) => Semantics::Mask,
            ("sh", Some(l)) if l % 2 == 0 => Semantics::Sh(l),
            ("peaks", Some(k)) if k > 0 => Semantics::Peaks(k),
            ("vec", Some(n)) if n > 0 => Semantics::Vector(n),
            _ => return Err(bad()),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VolumeHeader {
    pub dims: [usize; 3],
    pub components: usize,
    /// Voxel spacing in mm.
    pub spacing: [f64; 3],
    pub datatype: Datatype,
    /// `None` when the file has no `dfa:` tag.
    pub semantics: Option<Semantics>,
}

impl VolumeHeader {
    pub fn voxels(&self) -> usize {
        self.dims.iter().product()
    }

    /// Checks the tag against `expected` by kind (parameters free).
    pub fn expect_kind(&self, expected: &str) -> NiftiResult<Semantics> {
        match self.semantics {
            Some(s) if s.kind() == expected => Ok(s),
            other => Err(NiftiError::TagMismatch {
                expected: expected.to_string(),
                found: other.map_or_else(|| "untagged".to_string(), |s| s.to_string()),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum VolumeData {
    Float32(Vec<f32>),
    Uint8(Vec<u8>),
}

/// Payload stored component-major: component `c` of voxel `v` (x fastest)
/// lives at `v + c·voxels`.
#[derive(Debug, Clone, PartialEq)]
pub struct NiftiVolume {
    pub header: VolumeHeader,
    pub data: VolumeData,
}

impl NiftiVolume {
    pub fn float32(dims: [usize; 3], spacing: [f64; 3], semantics: Semantics, data: Vec<f32>) -> NiftiResult<Self> {
        Self::build(dims, spacing, semantics, Datatype::Float32, VolumeData::Float32(data))
    }

    pub fn uint8(dims: [usize; 3], spacing: [f64; 3], semantics: Semantics, data: Vec<u8>) -> NiftiResult<Self> {
        Self::build(dims, spacing, semantics, Datatype::Uint8, VolumeData::Uint8(data))
    }

    fn build(
        dims: [usize; 3],
        spacing: [f64; 3],
        semantics: Semantics,
        datatype: Datatype,
        data: VolumeData,
    ) -> NiftiResult<Self> {
        let header = VolumeHeader {
            dims,
            components: semantics.components(),
            spacing,
            datatype,
            semantics: Some(semantics),
        };
        let len = match &data {
            VolumeData::Float32(v) => v.len(),
            VolumeData::Uint8(v) => v.len(),
        };
        if len != header.voxels() * header.components {
            return Err(NiftiError::Invalid(format!(
                "{semantics} volume of dims {dims:?} needs {} values, got {len}",
                header.voxels() * header.components
            )));
        }
        Ok(Self { header, data })
    }

    /// Values as f64, component-major.
    pub fn values_f64(&self) -> Vec<f64> {
        match &self.data {
            VolumeData::Float32(v) => v.iter().map(|&x| x as f64).collect(),
            VolumeData::Uint8(v) => v.iter().map(|&x| x as f64).collect(),
        }
    }

    /// Component `c` of voxel `v`.
    pub fn component(&self, v: usize, c: usize) -> f64 {
        let i = v + c * self.header.voxels();
        match &self.data {
            VolumeData::Float32(d) => d[i] as f64,
            VolumeData::Uint8(d) => d[i] as f64,
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let h = &self.header;
        let mut out = vec![0u8; DATA_OFFSET];
        let put_i16 = |out: &mut [u8], at: usize, v: i16| out[at..at + 2].copy_from_slice(&v.to_le_bytes());
        let put_f32 = |out: &mut [u8], at: usize, v: f32| out[at..at + 4].copy_from_slice(&v.to_le_bytes());
        out[0..4].copy_from_slice(&(HEADER_SIZE as i32).to_le_bytes());
        out[38] = b'r';
        let ndim: i16 = if h.components > 1 { 4 } else { 3 };
        let dim = [
            ndim,
            h.dims[0] as i16,
            h.dims[1] as i16,
            h.dims[2] as i16,
            h.components as i16,
            1,
            1,
            1,
        ];
        for (k, d) in dim.iter().enumerate() {
            put_i16(&mut out, 40 + 2 * k, *d);
        }
        put_i16(&mut out, 70, h.datatype.code());
        put_i16(&mut out, 72, 8 * h.datatype.bytes() as i16);
        let pixdim = [1.0, h.spacing[0], h.spacing[1], h.spacing[2], 1.0, 1.0, 1.0, 1.0];
        for (k, p) in pixdim.iter().enumerate() {
            put_f32(&mut out, 76 + 4 * k, *p as f32);
        }
        put_f32(&mut out, 108, DATA_OFFSET as f32);
        put_f32(&mut out, 112, 1.0);
        // mm units
        out[123] = 2;
        if let Some(s) = h.semantics {
            let text = format!("dfa:{s}");
            let n = text.len().min(79);
            out[148..148 + n].copy_from_slice(&text.as_bytes()[..n]);
        }
        // Scanner-anatomical sform: scaled identity centered on voxel 0.
        put_i16(&mut out, 254, 1);
        for (row, at) in [280usize, 296, 312].iter().enumerate() {
            put_f32(&mut out, at + 4 * row, h.spacing[row] as f32);
        }
        out[344..348].copy_from_slice(b"n+1\0");
        match &self.data {
            VolumeData::Float32(v) => {
                out.reserve(v.len() * 4);
                for x in v {
                    out.extend_from_slice(&x.to_le_bytes());
                }
            }
            VolumeData::Uint8(v) => out.extend_from_slice(v),
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> NiftiResult<Self> {
        if bytes.len() < HEADER_SIZE {
            return Err(NiftiError::Truncated {
                expected: HEADER_SIZE,
                actual: bytes.len(),
            });
        }
        let i16_at = |at: usize| i16::from_le_bytes([bytes[at], bytes[at + 1]]);
        let f32_at = |at: usize| f32::from_le_bytes(bytes[at..at + 4].try_into().expect("4 bytes"));
        let sizeof_hdr = i32::from_le_bytes(bytes[0..4].try_into().expect("4 bytes"));
        if sizeof_hdr != HEADER_SIZE as i32 {
            let message = if sizeof_hdr.swap_bytes() == HEADER_SIZE as i32 {
                "big-endian files are not supported".to_string()
            } else {
                format!("sizeof_hdr is {sizeof_hdr}, expected 348")
            };
            return Err(NiftiError::Parse { offset: 0, message });
        }
        if &bytes[344..348] != b"n+1\0" {
            return Err(NiftiError::Parse {
                offset: 344,
                message: format!("magic {:?} is not single-file NIfTI-1 \"n+1\"", &bytes[344..348]),
            });
        }
        let ndim = i16_at(40);
        if !(1..=7).contains(&ndim) {
            return Err(NiftiError::Parse {
                offset: 40,
                message: format!("dim[0] = {ndim} out of range"),
            });
        }
        let mut dim = [1usize; 7];
        for k in 0..ndim as usize {
            let d = i16_at(42 + 2 * k);
            if d < 1 {
                return Err(NiftiError::Parse {
                    offset: 42 + 2 * k,
                    message: format!("dim[{}] = {d} must be positive", k + 1),
                });
            }
            dim[k] = d as usize;
        }
        if dim[4..].iter().any(|&d| d != 1) {
            return Err(NiftiError::Parse {
                offset: 50,
                message: format!("dimensions beyond the 4th are not supported: {:?}", &dim[4..]),
            });
        }
        let datatype = match i16_at(70) {
            DT_FLOAT32 => Datatype::Float32,
            DT_UINT8 => Datatype::Uint8,
            other => return Err(NiftiError::UnsupportedDatatype(other)),
        };
        let mut spacing = [1.0; 3];
        for (k, s) in spacing.iter_mut().enumerate() {
            let p = f32_at(80 + 4 * k).abs() as f64;
            if !(p.is_finite() && p > 0.0) {
                return Err(NiftiError::Parse {
                    offset: 80 + 4 * k,
                    message: format!("pixdim[{}] = {p} must be positive", k + 1),
                });
            }
            *s = p;
        }
        let vox_offset = f32_at(108);
        if !(vox_offset >= HEADER_SIZE as f32 && vox_offset.fract() == 0.0) {
            return Err(NiftiError::Parse {
                offset: 108,
                message: format!("vox_offset {vox_offset} is invalid"),
            });
        }
        let start = vox_offset as usize;
        let descrip = &bytes[148..228];
        let end = descrip.iter().position(|&b| b == 0).unwrap_or(descrip.len());
        let text = String::from_utf8_lossy(&descrip[..end]);
        let semantics = match text.trim().strip_prefix("dfa:") {
            Some(tag) => Some(tag.parse::<Semantics>().map_err(|e| NiftiError::Parse {
                offset: 148,
                message: e.to_string(),
            })?),
            None => None,
        };
        let header = VolumeHeader {
            dims: [dim[0], dim[1], dim[2]],
            components: dim[3],
            spacing,
            datatype,
            semantics,
        };
        if let Some(s) = semantics {
            if s.components() != header.components {
                return Err(NiftiError::Parse {
                    offset: 48,
                    message: format!("tag {s} needs {} components, dim[4] = {}", s.components(), header.components),
                });
            }
        }
        let n = header.voxels() * header.components;
        let expected = start + n * datatype.bytes();
        if bytes.len() < expected {
            return Err(NiftiError::Truncated {
                expected,
                actual: bytes.len(),
            });
        }
        let payload = &bytes[start..expected];
        let slope = f32_at(112);
        let inter = f32_at(116);
        let data = match datatype {
            Datatype::Float32 => {
                let mut v: Vec<f32> = payload
                    .chunks_exact(4)
                    .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
                    .collect();
                if slope != 0.0 && (slope != 1.0 || inter != 0.0) {
                    v.iter_mut().for_each(|x| *x = *x * slope + inter);
                }
                VolumeData::Float32(v)
            }
            Datatype::Uint8 => VolumeData::Uint8(payload.to_vec()),
        };
        Ok(Self { header, data })
    }
}

pub fn read_volume(path: impl AsRef<Path>) -> NiftiResult<NiftiVolume> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|source| NiftiError::Io {
        path: path.display().to_string(),
        source,
    })?;
    NiftiVolume::from_bytes(&bytes)
}

pub fn write_volume(path: impl AsRef<Path>, volume: &NiftiVolume) -> NiftiResult<()> {
    let path = path.as_ref();
    std::fs::write(path, volume.to_bytes()).map_err(|source| NiftiError::Io {
        path: path.display().to_string(),
        source,
    })
}
