//! Minimal NIfTI-1 reader/writer and on-disk case discovery.
//!
//! Only the subset of the format actually produced by segmentation
//! pipelines is supported: single-file volumes (magic `n+1\0`), 2-D or
//! 3-D extents, the five common datatypes (uint8, int16, int32, float32,
//! float64), optional gzip compression, and `scl_slope`/`scl_inter`
//! intensity scaling. Header/data pairs (`ni1\0`), NIfTI-2, and
//! orientation metadata beyond voxel spacing are rejected or ignored.
//!
//! The reader is meant to survive hostile input: every size is checked
//! before any allocation, all arithmetic on header fields is overflow
//! checked, gzip streams are read through hard length caps, and malformed
//! files always surface as [`Error`] values rather than panics.
//!
//! Both byte orders are accepted; the order is inferred from `dim[0]`,
//! which must decode to 1..=7 in exactly the stored endianness. Files are
//! always written little-endian. Gzip compression is detected on read by
//! the `0x1f 0x8b` prefix (never the file name) and selected on write by
//! a `.gz` file-name suffix.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;
use ndarray::Array3;

use crate::error::{Error, Result};
use crate::model::{LabelMap, Spacing, Volume3D, DEFAULT_SLICE_SPACING_MM, MAX_TISSUE_CODE};

/// Size of the fixed NIfTI-1 header in bytes.
pub const HEADER_LEN: usize = 348;

/// Offset of the voxel payload in files written by this module: the
/// 348-byte header plus the 4-byte extension flag of the single-file
/// layout.
pub const WRITE_DATA_OFFSET: usize = 352;

/// Hard cap on the number of voxels the reader will allocate for.
/// Clinical short-axis stacks are far below this; anything above it is
/// treated as corrupt or unsupported input.
pub const MAX_VOXELS: usize = 1 << 26;

const GZIP_MAGIC: [u8; 2] = [0x1f, 0x8b];
const MAGIC_SINGLE: [u8; 4] = *b"n+1\0";
const MAGIC_PAIR: [u8; 4] = *b"ni1\0";

const DT_UINT8: i16 = 2;
const DT_INT16: i16 = 4;
const DT_INT32: i16 = 8;
const DT_FLOAT32: i16 = 16;
const DT_FLOAT64: i16 = 64;

fn bytes_per_voxel(datatype: i16) -> Option<usize> {
    match datatype {
        DT_UINT8 => Some(1),
        DT_INT16 => Some(2),
        DT_INT32 | DT_FLOAT32 => Some(4),
        DT_FLOAT64 => Some(8),
        _ => None,
    }
}

fn rd_i16(b: &[u8], off: usize, big_endian: bool) -> i16 {
    let a = [b[off], b[off + 1]];
    if big_endian {
        i16::from_be_bytes(a)
    } else {
        i16::from_le_bytes(a)
    }
}

fn rd_i32(b: &[u8], off: usize, big_endian: bool) -> i32 {
    let a = [b[off], b[off + 1], b[off + 2], b[off + 3]];
    if big_endian {
        i32::from_be_bytes(a)
    } else {
        i32::from_le_bytes(a)
    }
}

fn rd_f32(b: &[u8], off: usize, big_endian: bool) -> f32 {
    let a = [b[off], b[off + 1], b[off + 2], b[off + 3]];
    if big_endian {
        f32::from_be_bytes(a)
    } else {
        f32::from_le_bytes(a)
    }
}

fn wr_i16(b: &mut [u8], off: usize, v: i16) {
    b[off..off + 2].copy_from_slice(&v.to_le_bytes());
}

fn wr_i32(b: &mut [u8], off: usize, v: i32) {
    b[off..off + 4].copy_from_slice(&v.to_le_bytes());
}

fn wr_f32(b: &mut [u8], off: usize, v: f32) {
    b[off..off + 4].copy_from_slice(&v.to_le_bytes());
}

/// Parsed and validated NIfTI-1 header.
///
/// Raw fields keep their on-file values (after byte-order correction);
/// the accessor methods expose the derived quantities the reader needs.
/// A value of this type always describes a volume this crate can load.
#[derive(Debug, Clone)]
pub struct NiftiHeader {
    /// Dimension array: `dim[0]` is the number of meaningful axes.
    pub dim: [i16; 8],
    /// Datatype code (uint8 = 2, int16 = 4, int32 = 8, float32 = 16,
    /// float64 = 64).
    pub datatype: i16,
    /// Bits per voxel; always consistent with `datatype`.
    pub bitpix: i16,
    /// Grid spacings; `pixdim[1..=3]` hold the voxel size in mm.
    pub pixdim: [f32; 8],
    /// Byte offset of the voxel payload.
    pub vox_offset: f32,
    /// Intensity scaling slope; 0 means "no scaling".
    pub scl_slope: f32,
    /// Intensity scaling intercept, applied when the slope is non-zero.
    pub scl_inter: f32,
    /// Format magic; only `n+1\0` (single-file) is accepted.
    pub magic: [u8; 4],
    /// True when the file is stored big-endian.
    pub big_endian: bool,
    extents: (usize, usize, usize),
    spacing: Spacing,
    data_offset: usize,
    payload_len: usize,
}

impl NiftiHeader {
    /// Parses and validates a 348-byte header.
    ///
    /// Rejects anything that could make the payload unreadable: unknown
    /// byte order, wrong magic, unsupported dimensionality or datatype,
    /// inconsistent `bitpix`, non-integral or out-of-range `vox_offset`,
    /// non-finite spacing fields, and grids above [`MAX_VOXELS`].
    pub fn parse(bytes: &[u8]) -> Result<Self> {
        if bytes.len() != HEADER_LEN {
            return Err(Error::InvalidNifti(format!(
                "header must be exactly {HEADER_LEN} bytes, got {}",
                bytes.len()
            )));
        }

        // Standard endianness heuristic: dim[0] (offset 40) must land in
        // 1..=7 under exactly one byte order.
        let dim0_le = rd_i16(bytes, 40, false);
        let dim0_be = rd_i16(bytes, 40, true);
        let big_endian = if (1..=7).contains(&dim0_le) {
            false
        } else if (1..=7).contains(&dim0_be) {
            true
        } else {
            return Err(Error::InvalidNifti(format!(
                "cannot determine byte order: dim[0] is {dim0_le} (LE) / {dim0_be} (BE)"
            )));
        };

        let sizeof_hdr = rd_i32(bytes, 0, big_endian);
        if sizeof_hdr != HEADER_LEN as i32 {
            return Err(Error::InvalidNifti(format!(
                "sizeof_hdr is {sizeof_hdr}, expected {HEADER_LEN}"
            )));
        }

        let mut magic = [0u8; 4];
        magic.copy_from_slice(&bytes[344..348]);
        if magic == MAGIC_PAIR {
            return Err(Error::UnsupportedNifti(
                "two-file (.hdr/.img) NIfTI layout is not supported".into(),
            ));
        }
        if magic != MAGIC_SINGLE {
            return Err(Error::InvalidNifti(format!("bad magic {:?}", &magic)));
        }

        let mut dim = [0i16; 8];
        for (i, d) in dim.iter_mut().enumerate() {
            *d = rd_i16(bytes, 40 + 2 * i, big_endian);
        }
        let ndim = dim[0];
        if !(2..=7).contains(&ndim) {
            return Err(Error::InvalidNifti(format!(
                "dim[0] = {ndim}; need at least 2 spatial axes"
            )));
        }
        let ndim = ndim as usize;
        for (i, &d) in dim.iter().enumerate().take(ndim + 1).skip(1) {
            if d < 1 {
                return Err(Error::InvalidNifti(format!("dim[{i}] = {d}, must be >= 1")));
            }
            if i > 3 && d > 1 {
                return Err(Error::UnsupportedNifti(format!(
                    "dim[{i}] = {d}: time-resolved or higher-dimensional data not supported"
                )));
            }
        }
        let nx = dim[1] as usize;
        let ny = dim[2] as usize;
        let nz = if ndim >= 3 { dim[3] as usize } else { 1 };
        let n_voxels = nx
            .checked_mul(ny)
            .and_then(|v| v.checked_mul(nz))
            .ok_or_else(|| Error::InvalidNifti("voxel count overflows".into()))?;
        if n_voxels > MAX_VOXELS {
            return Err(Error::UnsupportedNifti(format!(
                "grid of {n_voxels} voxels exceeds the {MAX_VOXELS}-voxel reader cap"
            )));
        }

        let datatype = rd_i16(bytes, 70, big_endian);
        let bpv = bytes_per_voxel(datatype).ok_or_else(|| {
            Error::UnsupportedNifti(format!("datatype code {datatype} not supported"))
        })?;
        let bitpix = rd_i16(bytes, 72, big_endian);
        if bitpix as usize != bpv * 8 {
            return Err(Error::InvalidNifti(format!(
                "bitpix {bitpix} inconsistent with datatype {datatype}"
            )));
        }

        let mut pixdim = [0f32; 8];
        for (i, p) in pixdim.iter_mut().enumerate() {
            *p = rd_f32(bytes, 76 + 4 * i, big_endian);
        }
        for (i, p) in pixdim.iter().enumerate().take(4).skip(1) {
            if !p.is_finite() {
                return Err(Error::InvalidNifti(format!("pixdim[{i}] is not finite")));
            }
        }
        let mut fallback = |axis: &str, raw: f32, default: f64| -> f64 {
            let s = f64::from(raw.abs());
            if s > 0.0 {
                s
            } else {
                log::warn!("pixdim for {axis} is zero; assuming {default} mm");
                default
            }
        };
        let sx = fallback("x", pixdim[1], 1.0);
        let sy = fallback("y", pixdim[2], 1.0);
        let sz = if ndim >= 3 {
            fallback("z", pixdim[3], DEFAULT_SLICE_SPACING_MM)
        } else {
            DEFAULT_SLICE_SPACING_MM
        };
        let spacing = Spacing::new(sx, sy, sz)?;

        let vox_offset = rd_f32(bytes, 108, big_endian);
        if !vox_offset.is_finite()
            || vox_offset < HEADER_LEN as f32
            || vox_offset > 1e9
            || vox_offset.fract() != 0.0
        {
            return Err(Error::InvalidNifti(format!("vox_offset {vox_offset} is invalid")));
        }
        let data_offset = vox_offset as usize;

        let mut scl_slope = rd_f32(bytes, 112, big_endian);
        if !scl_slope.is_finite() {
            log::warn!("non-finite scl_slope treated as no scaling");
            scl_slope = 0.0;
        }
        let scl_inter = rd_f32(bytes, 116, big_endian);
        if scl_slope != 0.0 && !scl_inter.is_finite() {
            return Err(Error::InvalidNifti("non-finite scl_inter".into()));
        }

        let payload_len = n_voxels
            .checked_mul(bpv)
            .ok_or_else(|| Error::InvalidNifti("payload size overflows".into()))?;

        Ok(Self {
            dim,
            datatype,
            bitpix,
            pixdim,
            vox_offset,
            scl_slope,
            scl_inter,
            magic,
            big_endian,
            extents: (nx, ny, nz),
            spacing,
            data_offset,
            payload_len,
        })
    }

    /// Grid extents `(nx, ny, nz)`; 2-D files report `nz = 1`.
    pub fn extents(&self) -> (usize, usize, usize) {
        self.extents
    }

    /// Voxel spacing in mm, with 1 mm / 10 mm fallbacks substituted for
    /// zero in-plane / slice `pixdim` entries.
    pub fn spacing(&self) -> Spacing {
        self.spacing
    }

    /// Byte offset of the voxel payload within the (decompressed) file.
    pub fn data_offset(&self) -> usize {
        self.data_offset
    }

    /// Exact payload size in bytes.
    pub fn payload_len(&self) -> usize {
        self.payload_len
    }
}

/// Reads header and raw payload, transparently decompressing gzip input.
fn read_nifti_bytes(path: &Path) -> Result<(NiftiHeader, Vec<u8>)> {
    let raw = fs::read(path)?;
    if raw.len() >= 2 && raw[..2] == GZIP_MAGIC {
        let mut dec = GzDecoder::new(&raw[..]);
        let mut hdr = [0u8; HEADER_LEN];
        dec.read_exact(&mut hdr).map_err(|e| {
            Error::InvalidNifti(format!("gzip stream shorter than the header: {e}"))
        })?;
        let header = NiftiHeader::parse(&hdr)?;
        let skip = (header.data_offset() - HEADER_LEN) as u64;
        let skipped = io::copy(&mut dec.by_ref().take(skip), &mut io::sink())
            .map_err(|e| Error::InvalidNifti(format!("corrupt gzip stream: {e}")))?;
        if skipped != skip {
            return Err(Error::InvalidNifti(
                "gzip stream ends before the voxel payload".into(),
            ));
        }
        // payload_len is capped via MAX_VOXELS, so this allocation is bounded.
        let mut payload = vec![0u8; header.payload_len()];
        dec.read_exact(&mut payload)
            .map_err(|e| Error::InvalidNifti(format!("truncated voxel payload: {e}")))?;
        Ok((header, payload))
    } else {
        if raw.len() < HEADER_LEN {
            return Err(Error::InvalidNifti(format!(
                "file is {} bytes, shorter than the {HEADER_LEN}-byte header",
                raw.len()
            )));
        }
        let header = NiftiHeader::parse(&raw[..HEADER_LEN])?;
        let end = header
            .data_offset()
            .checked_add(header.payload_len())
            .ok_or_else(|| Error::InvalidNifti("payload extent overflows".into()))?;
        if end > raw.len() {
            return Err(Error::InvalidNifti(format!(
                "truncated voxel payload: need {end} bytes, file has {}",
                raw.len()
            )));
        }
        let payload = raw[header.data_offset()..end].to_vec();
        Ok((header, payload))
    }
}

fn decode_payload(payload: &[u8], datatype: i16, big_endian: bool) -> Vec<f64> {
    match datatype {
        DT_UINT8 => payload.iter().map(|&b| f64::from(b)).collect(),
        DT_INT16 => payload
            .chunks_exact(2)
            .map(|c| f64::from(rd_i16(c, 0, big_endian)))
            .collect(),
        DT_INT32 => payload
            .chunks_exact(4)
            .map(|c| f64::from(rd_i32(c, 0, big_endian)))
            .collect(),
        DT_FLOAT32 => payload
            .chunks_exact(4)
            .map(|c| f64::from(rd_f32(c, 0, big_endian)))
            .collect(),
        DT_FLOAT64 => payload
            .chunks_exact(8)
            .map(|c| {
                let mut a = [0u8; 8];
                a.copy_from_slice(c);
                if big_endian {
                    f64::from_be_bytes(a)
                } else {
                    f64::from_le_bytes(a)
                }
            })
            .collect(),
        // parse() only lets the five supported codes through.
        _ => unreachable!("unsupported datatype {datatype} after header validation"),
    }
}

/// Reorders an x-fastest flat payload into an `(x, y, z)`-indexed grid.
fn to_array(values: &[f64], (nx, ny, nz): (usize, usize, usize)) -> Array3<f64> {
    let mut arr = Array3::zeros((nx, ny, nz));
    let mut i = 0;
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                arr[[x, y, z]] = values[i];
                i += 1;
            }
        }
    }
    arr
}

/// Reads a scalar volume, applying `scl_slope`/`scl_inter` scaling when
/// the slope is non-zero and taking spacing from `pixdim[1..=3]`.
pub fn read_volume(path: impl AsRef<Path>) -> Result<Volume3D> {
    let path = path.as_ref();
    let (header, payload) = read_nifti_bytes(path)?;
    let mut values = decode_payload(&payload, header.datatype, header.big_endian);
    if header.scl_slope != 0.0 {
        let slope = f64::from(header.scl_slope);
        let inter = f64::from(header.scl_inter);
        for v in &mut values {
            *v = *v * slope + inter;
        }
    }
    Volume3D::new(to_array(&values, header.extents()), header.spacing())
}

/// Reads a tissue label map: a volume whose every value must round to an
/// integer code in 0..=4.
///
/// Values are rounded to the nearest integer so that maps stored as
/// floats (a common exporter quirk) still load; anything rounding outside
/// the code range is reported with its code and x-fastest voxel index.
pub fn read_labelmap(path: impl AsRef<Path>) -> Result<LabelMap> {
    let v = read_volume(path)?;
    let (data, spacing) = v.into_parts();
    let (nx, ny, nz) = data.dim();
    let mut labels = Array3::zeros((nx, ny, nz));
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                let raw = data[[x, y, z]];
                let index = x + nx * (y + ny * z);
                if !raw.is_finite() {
                    return Err(Error::InvalidNifti(format!(
                        "non-finite label value at voxel index {index}"
                    )));
                }
                let code = raw.round();
                if code < 0.0 || code > f64::from(MAX_TISSUE_CODE) {
                    return Err(Error::InvalidLabel { code: code as i64, index });
                }
                labels[[x, y, z]] = code as u8;
            }
        }
    }
    LabelMap::new(labels, spacing)
}

fn encode_header(
    dims: (usize, usize, usize),
    spacing: Spacing,
    datatype: i16,
) -> Result<Vec<u8>> {
    let (nx, ny, nz) = dims;
    for (name, n) in [("x", nx), ("y", ny), ("z", nz)] {
        if n == 0 || n > i16::MAX as usize {
            return Err(Error::InvalidArgument(format!(
                "{name} extent {n} not storable in a NIfTI-1 header"
            )));
        }
    }
    let bpv = bytes_per_voxel(datatype).expect("writer uses supported datatypes");
    let mut h = vec![0u8; WRITE_DATA_OFFSET];
    wr_i32(&mut h, 0, HEADER_LEN as i32);
    wr_i16(&mut h, 40, 3); // dim[0]
    wr_i16(&mut h, 42, nx as i16);
    wr_i16(&mut h, 44, ny as i16);
    wr_i16(&mut h, 46, nz as i16);
    for i in 4..8 {
        wr_i16(&mut h, 40 + 2 * i, 1);
    }
    wr_i16(&mut h, 70, datatype);
    wr_i16(&mut h, 72, (bpv * 8) as i16);
    wr_f32(&mut h, 76, 1.0); // pixdim[0] (qfac placeholder)
    for (i, s) in [spacing.sx(), spacing.sy(), spacing.sz()].into_iter().enumerate() {
        let s32 = s as f32;
        if !s32.is_finite() || s32 <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "spacing component {s} not storable as float32"
            )));
        }
        wr_f32(&mut h, 76 + 4 * (i + 1), s32);
    }
    wr_f32(&mut h, 108, WRITE_DATA_OFFSET as f32); // vox_offset
    wr_f32(&mut h, 112, 0.0); // scl_slope: no scaling
    wr_f32(&mut h, 116, 0.0); // scl_inter
    h[123] = 2; // xyzt_units: millimetres
    h[344..348].copy_from_slice(&MAGIC_SINGLE);
    Ok(h)
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    let gz = path
        .file_name()
        .and_then(|n| n.to_str())
        .map(|n| n.to_ascii_lowercase().ends_with(".gz"))
        .unwrap_or(false);
    let file = fs::File::create(path)?;
    if gz {
        let mut enc = GzEncoder::new(file, Compression::default());
        enc.write_all(bytes)?;
        enc.finish()?;
    } else {
        let mut file = file;
        file.write_all(bytes)?;
    }
    Ok(())
}

/// Writes a label map as uint8 voxels, gzip-compressed when the file name
/// ends in `.gz`. Reading the file back reproduces the map bit-exactly
/// (spacing survives to float32 precision).
pub fn write_labelmap(m: &LabelMap, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let (nx, ny, nz) = m.dims();
    let mut bytes = encode_header(m.dims(), m.spacing(), DT_UINT8)?;
    bytes.reserve(nx * ny * nz);
    let labels = m.labels();
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                bytes.push(labels[[x, y, z]]);
            }
        }
    }
    write_bytes(path, &bytes)
}

/// Writes a scalar volume as float32 voxels (intensities are rounded to
/// float32 precision), gzip-compressed when the file name ends in `.gz`.
pub fn write_volume(v: &Volume3D, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let (nx, ny, nz) = v.dims();
    let mut bytes = encode_header(v.dims(), v.spacing(), DT_FLOAT32)?;
    bytes.reserve(nx * ny * nz * 4);
    let data = v.data();
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                bytes.extend_from_slice(&(data[[x, y, z]] as f32).to_le_bytes());
            }
        }
    }
    write_bytes(path, &bytes)
}

/// A ground-truth volume matched (by file-name stem) with the submitted
/// prediction, when one exists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CasePair {
    /// File-name stem shared by truth and prediction.
    pub case_id: String,
    /// Ground-truth label map path.
    pub truth_path: PathBuf,
    /// Matching prediction path; `None` marks a missing prediction,
    /// which the evaluator scores worst-possible instead of aborting.
    pub prediction_path: Option<PathBuf>,
}

/// Strips a `.nii` / `.nii.gz` suffix (case-insensitive), returning the
/// case stem, or `None` for non-NIfTI names.
fn nifti_stem(name: &str) -> Option<&str> {
    let lower = name.to_ascii_lowercase();
    if let Some(stripped) = lower.strip_suffix(".nii.gz") {
        Some(&name[..stripped.len()])
    } else if let Some(stripped) = lower.strip_suffix(".nii") {
        Some(&name[..stripped.len()])
    } else {
        None
    }
}

fn scan_dir(dir: &Path) -> Result<BTreeMap<String, PathBuf>> {
    let mut out: BTreeMap<String, PathBuf> = BTreeMap::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if !path.is_file() {
            continue;
        }
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
            continue;
        };
        let Some(stem) = nifti_stem(name) else {
            continue;
        };
        match out.get(stem) {
            // Two spellings of the same stem (e.g. `.nii` next to
            // `.nii.gz`): keep the lexicographically first for
            // determinism and say so.
            Some(existing) if existing.as_os_str() <= path.as_os_str() => {
                log::warn!("ignoring duplicate case file {}", path.display());
            }
            Some(existing) => {
                log::warn!("ignoring duplicate case file {}", existing.display());
                out.insert(stem.to_string(), path);
            }
            None => {
                out.insert(stem.to_string(), path);
            }
        }
    }
    Ok(out)
}

/// Pairs ground-truth and prediction files by file-name stem.
///
/// Results come back sorted lexicographically by case id. Truths without
/// a matching prediction are kept as missing-prediction entries;
/// predictions without a truth are ignored with a warning. A truth
/// directory holding no NIfTI files is an error.
pub fn discover_cases(truth_dir: impl AsRef<Path>, pred_dir: impl AsRef<Path>) -> Result<Vec<CasePair>> {
    let truth_dir = truth_dir.as_ref();
    let truths = scan_dir(truth_dir)?;
    if truths.is_empty() {
        return Err(Error::EmptyDataset(format!(
            "no NIfTI files in truth directory {}",
            truth_dir.display()
        )));
    }
    let mut preds = scan_dir(pred_dir.as_ref())?;
    let pairs = truths
        .into_iter()
        .map(|(case_id, truth_path)| {
            let prediction_path = preds.remove(&case_id);
            CasePair { case_id, truth_path, prediction_path }
        })
        .collect();
    for (stem, path) in preds {
        log::warn!("prediction {} ({stem}) has no matching truth; ignored", path.display());
    }
    Ok(pairs)
}
