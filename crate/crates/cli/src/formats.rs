//! Binary dataset and checkpoint files, and IDX loading.

use std::fs;
use std::io::{Cursor, Read};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use flate2::read::GzDecoder;
use num_complex::Complex64;
use paraquannet_core::datagen::{Dataset, Sample, DATA_QUBITS};
use paraquannet_core::ingest::{parse_idx, IdxImageSet};
use paraquannet_core::model::ModelState;
use paraquannet_core::{Angle, Circuit, GateKind, GateOp, Statevector};

pub const DATASET_MAGIC: &[u8; 4] = b"PQWD";
pub const CHECKPOINT_MAGIC: &[u8; 4] = b"PQMD";
pub const FORMAT_VERSION: u32 = 1;

const NO_QUBIT: u8 = u8::MAX;
const ANGLE_NONE: u8 = 0;
const ANGLE_SLOT: u8 = 1;
const ANGLE_FIXED: u8 = 2;

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("bad magic: expected {expected:?}, found {found:?}")]
    Magic { expected: String, found: String },
    #[error("unsupported format version {0}")]
    Version(u32),
    #[error("checksum mismatch: stored {stored:08x}, computed {computed:08x}")]
    Checksum { stored: u32, computed: u32 },
    #[error("file truncated or has trailing bytes")]
    Length,
    #[error("invalid content: {0}")]
    Content(String),
    #[error(transparent)]
    Core(#[from] paraquannet_core::Error),
}

pub type Result<T> = std::result::Result<T, FormatError>;

fn seal(mut body: Vec<u8>) -> Vec<u8> {
    let crc = crc32fast::hash(&body);
    body.write_u32::<LittleEndian>(crc).unwrap();
    body
}

/// Checks the magic and trailing CRC and returns the bytes between them.
fn unseal<'a>(bytes: &'a [u8], magic: &[u8; 4]) -> Result<&'a [u8]> {
    if bytes.len() < 8 {
        return Err(FormatError::Length);
    }
    if &bytes[..4] != magic {
        return Err(FormatError::Magic {
            expected: String::from_utf8_lossy(magic).into_owned(),
            found: String::from_utf8_lossy(&bytes[..4]).into_owned(),
        });
    }
    let (body, tail) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(tail.try_into().unwrap());
    let computed = crc32fast::hash(body);
    if stored != computed {
        return Err(FormatError::Checksum { stored, computed });
    }
    Ok(&body[4..])
}

fn check_version(r: &mut Cursor<&[u8]>) -> Result<()> {
    match r.read_u32::<LittleEndian>().map_err(eof)? {
        FORMAT_VERSION => Ok(()),
        v => Err(FormatError::Version(v)),
    }
}

fn finish(r: &Cursor<&[u8]>) -> Result<()> {
    if r.position() as usize == r.get_ref().len() {
        Ok(())
    } else {
        Err(FormatError::Length)
    }
}

fn eof(e: std::io::Error) -> FormatError {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        FormatError::Length
    } else {
        FormatError::Io(e)
    }
}

pub fn encode_dataset(dataset: &Dataset) -> Result<Vec<u8>> {
    let dim = 1usize << DATA_QUBITS;
    let mut out = Vec::with_capacity(20 + dataset.len() * (1 + dim * 16) + 4);
    out.extend_from_slice(DATASET_MAGIC);
    out.write_u32::<LittleEndian>(FORMAT_VERSION)?;
    out.write_u32::<LittleEndian>(DATA_QUBITS as u32)?;
    out.write_u64::<LittleEndian>(dataset.len() as u64)?;
    for s in &dataset.samples {
        if s.state.qubit_count() != DATA_QUBITS {
            return Err(FormatError::Content(format!(
                "sample has {} qubits",
                s.state.qubit_count()
            )));
        }
        out.write_u8(s.label)?;
        for a in s.state.amplitudes() {
            out.write_f64::<LittleEndian>(a.re)?;
            out.write_f64::<LittleEndian>(a.im)?;
        }
    }
    Ok(seal(out))
}

pub fn decode_dataset(bytes: &[u8]) -> Result<Dataset> {
    let mut r = Cursor::new(unseal(bytes, DATASET_MAGIC)?);
    check_version(&mut r)?;
    let qubits = r.read_u32::<LittleEndian>().map_err(eof)? as usize;
    if qubits == 0 || qubits > paraquannet_core::simcore::MAX_QUBITS {
        return Err(FormatError::Content(format!("qubit count {qubits}")));
    }
    let count = r.read_u64::<LittleEndian>().map_err(eof)?;
    let dim = 1usize << qubits;
    let remaining = r.get_ref().len() as u64 - r.position();
    if count.checked_mul(1 + dim as u64 * 16) != Some(remaining) {
        return Err(FormatError::Length);
    }
    let mut samples = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let label = r.read_u8().map_err(eof)?;
        let mut amps = Vec::with_capacity(dim);
        for _ in 0..dim {
            let re = r.read_f64::<LittleEndian>().map_err(eof)?;
            let im = r.read_f64::<LittleEndian>().map_err(eof)?;
            amps.push(Complex64::new(re, im));
        }
        samples.push(Sample {
            state: Statevector::new(amps)?,
            label,
        });
    }
    finish(&r)?;
    Ok(Dataset {
        samples,
        seed: None,
    })
}

pub fn save_dataset(path: &Path, dataset: &Dataset) -> Result<u32> {
    let bytes = encode_dataset(dataset)?;
    fs::write(path, &bytes)?;
    Ok(crc_of(&bytes))
}

pub fn load_dataset(path: &Path) -> Result<Dataset> {
    decode_dataset(&fs::read(path)?)
}

/// Stored CRC of a sealed file image.
pub fn crc_of(bytes: &[u8]) -> u32 {
    u32::from_le_bytes(bytes[bytes.len() - 4..].try_into().unwrap())
}

pub fn encode_checkpoint(model: &ModelState) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.write_u32::<LittleEndian>(FORMAT_VERSION)?;
    let kernel = &model.kernel;
    out.write_u32::<LittleEndian>(kernel.qubit_count() as u32)?;
    out.write_u32::<LittleEndian>(kernel.ops().len() as u32)?;
    for op in kernel.ops() {
        out.write_u8(op.kind.code())?;
        out.write_u8(op.qubits[0] as u8)?;
        out.write_u8(if op.kind.arity() == 2 {
            op.qubits[1] as u8
        } else {
            NO_QUBIT
        })?;
        match op.angle {
            None => out.write_u8(ANGLE_NONE)?,
            Some(Angle::Slot(s)) => {
                out.write_u8(ANGLE_SLOT)?;
                out.write_u32::<LittleEndian>(s as u32)?;
            }
            Some(Angle::Fixed(v)) => {
                out.write_u8(ANGLE_FIXED)?;
                out.write_f64::<LittleEndian>(v)?;
            }
        }
    }
    let params = model.parameters();
    out.write_u32::<LittleEndian>(params.len() as u32)?;
    for p in params {
        out.write_f64::<LittleEndian>(p)?;
    }
    Ok(seal(out))
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<ModelState> {
    let mut r = Cursor::new(unseal(bytes, CHECKPOINT_MAGIC)?);
    check_version(&mut r)?;
    let qubits = r.read_u32::<LittleEndian>().map_err(eof)? as usize;
    let op_count = r.read_u32::<LittleEndian>().map_err(eof)? as usize;
    let mut ops = Vec::with_capacity(op_count.min(4096));
    for _ in 0..op_count {
        let code = r.read_u8().map_err(eof)?;
        let kind = GateKind::from_code(code)
            .ok_or_else(|| FormatError::Content(format!("gate code {code}")))?;
        let q0 = r.read_u8().map_err(eof)? as usize;
        let q1 = r.read_u8().map_err(eof)?;
        let angle = match r.read_u8().map_err(eof)? {
            ANGLE_NONE => None,
            ANGLE_SLOT => Some(Angle::Slot(
                r.read_u32::<LittleEndian>().map_err(eof)? as usize
            )),
            ANGLE_FIXED => Some(Angle::Fixed(r.read_f64::<LittleEndian>().map_err(eof)?)),
            t => return Err(FormatError::Content(format!("angle tag {t}"))),
        };
        let op = if q1 == NO_QUBIT {
            GateOp::new(kind, &[q0], angle)?
        } else {
            GateOp::new(kind, &[q0, q1 as usize], angle)?
        };
        ops.push(op);
    }
    let kernel = Circuit::new(qubits, ops)?;
    let count = r.read_u32::<LittleEndian>().map_err(eof)? as usize;
    let mut params = Vec::with_capacity(count.min(1 << 16));
    for _ in 0..count {
        params.push(r.read_f64::<LittleEndian>().map_err(eof)?);
    }
    finish(&r)?;
    let mut model = ModelState::zeros(kernel)?;
    model.set_parameters(&params)?;
    Ok(model)
}

pub fn save_checkpoint(path: &Path, model: &ModelState) -> Result<()> {
    fs::write(path, encode_checkpoint(model)?)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<ModelState> {
    decode_checkpoint(&fs::read(path)?)
}

/// Reads a file, inflating it when it starts with the gzip magic.
pub fn read_maybe_gz(path: &Path) -> Result<Vec<u8>> {
    let raw = fs::read(path)?;
    if raw.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(raw.as_slice()).read_to_end(&mut out)?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

/// Finds `stem` or `stem.gz` in `dir`.
pub fn find_idx(dir: &Path, stem: &str) -> Result<std::path::PathBuf> {
    for name in [stem.to_string(), format!("{stem}.gz")] {
        let p = dir.join(name);
        if p.is_file() {
            return Ok(p);
        }
    }
    Err(FormatError::Io(std::io::Error::new(
        std::io::ErrorKind::NotFound,
        format!("{stem}[.gz] not found in {}", dir.display()),
    )))
}

pub fn load_idx_pair(images: &Path, labels: &Path) -> Result<IdxImageSet> {
    Ok(parse_idx(&read_maybe_gz(images)?, &read_maybe_gz(labels)?)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use paraquannet_core::datagen::{generate_dataset, GeneratorFamily};

    #[test]
    fn dataset_round_trip_is_bit_exact() {
        let ds = generate_dataset(&GeneratorFamily::standard(), 2, 9).unwrap();
        let bytes = encode_dataset(&ds).unwrap();
        assert_eq!(&bytes[..4], b"PQWD");
        assert_eq!(bytes.len(), 20 + 16 * (1 + 256 * 16) + 4);
        let back = decode_dataset(&bytes).unwrap();
        assert_eq!(back.samples, ds.samples);
        assert_eq!(encode_dataset(&back).unwrap(), bytes);
    }

    #[test]
    fn corrupted_files_are_rejected() {
        let ds = generate_dataset(&GeneratorFamily::standard(), 1, 0).unwrap();
        let bytes = encode_dataset(&ds).unwrap();
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(
            decode_dataset(&bad),
            Err(FormatError::Magic { .. })
        ));
        let mut bad = bytes.clone();
        bad[100] ^= 1;
        assert!(matches!(
            decode_dataset(&bad),
            Err(FormatError::Checksum { .. })
        ));
        assert!(matches!(
            decode_dataset(&bytes[..6]),
            Err(FormatError::Length)
        ));
    }

    #[test]
    fn checkpoint_round_trip_is_bit_exact() {
        let model = ModelState::standard(4);
        let bytes = encode_checkpoint(&model).unwrap();
        let back = decode_checkpoint(&bytes).unwrap();
        assert_eq!(back, model);
        assert_eq!(back.parameter_count(), 637);
        let mut bad = bytes;
        bad[1] = b'Z';
        assert!(matches!(
            decode_checkpoint(&bad),
            Err(FormatError::Magic { .. })
        ));
    }
}
