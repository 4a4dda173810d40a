//! On-disk formats.
//!
//! * **EITF** frame sequences: magic `EITF`, then `u32` LE width, height and
//!   frame count, an `f64` LE sample rate and `frame_count · width · height`
//!   `f32` LE values, frame-major and row-major.
//! * **Trigger files**: UTF-8 text, a kind tag (`cardiac` or `respiratory`)
//!   on the first line and one 0-based frame index per following line.
//! * **Pixel maps**: CSV with one image row per line, values printed in
//!   shortest round-trip form, plus an 8-bit binary PGM preview.

use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use eitmap_core::{CycleKind, FrameSequence, MapKind, PixelMap, TriggerTrain};

pub const EITF_MAGIC: &[u8; 4] = b"EITF";
pub const EITF_HEADER_LEN: usize = 24;

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("cannot access {}: {source}", .path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("I/O failure: {0}")]
    Stream(#[from] io::Error),
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("truncated payload: header promises {expected} bytes, found {found}")]
    TruncatedPayload { expected: u64, found: u64 },
    #[error("trigger indices not strictly increasing at line {line}")]
    NonMonotonicTriggers { line: usize },
    #[error("unknown trigger kind tag `{0}`")]
    UnknownKindTag(String),
    #[error("line {line}: `{text}` is not a frame index")]
    InvalidIndex { line: usize, text: String },
    #[error("line {line}: {message}")]
    Csv { line: usize, message: String },
    #[error(transparent)]
    Core(#[from] eitmap_core::Error),
}

pub type Result<T, E = DataError> = std::result::Result<T, E>;

fn io_at(path: &Path) -> impl FnOnce(io::Error) -> DataError + '_ {
    move |source| DataError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(io_at(path))
}

/// Writes `bytes` to `path`, creating parent directories.
pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_at(dir))?;
    }
    fs::write(path, bytes).map_err(io_at(path))
}

// ---------------------------------------------------------------- EITF

pub fn read_frame_sequence(mut reader: impl Read) -> Result<FrameSequence> {
    let mut header = [0u8; EITF_HEADER_LEN];
    let mut filled = 0;
    while filled < header.len() {
        match reader.read(&mut header[filled..])? {
            0 => break,
            n => filled += n,
        }
    }
    if filled < 4 || &header[..4] != EITF_MAGIC {
        return Err(DataError::MalformedHeader("missing EITF magic".into()));
    }
    if filled < EITF_HEADER_LEN {
        return Err(DataError::MalformedHeader(format!(
            "header is {filled} bytes, expected {EITF_HEADER_LEN}"
        )));
    }
    let u32_at = |i: usize| u32::from_le_bytes(header[i..i + 4].try_into().unwrap()) as usize;
    let (width, height, frames) = (u32_at(4), u32_at(8), u32_at(12));
    let sample_rate = f64::from_le_bytes(header[16..24].try_into().unwrap());
    if width == 0 || height == 0 || frames == 0 {
        return Err(DataError::MalformedHeader(format!(
            "dimensions {width}x{height}x{frames} must all be positive"
        )));
    }
    if !(sample_rate.is_finite() && sample_rate > 0.0) {
        return Err(DataError::MalformedHeader(format!("sample rate {sample_rate}")));
    }
    let values = width
        .checked_mul(height)
        .and_then(|p| p.checked_mul(frames))
        .filter(|v| v.checked_mul(4).is_some())
        .ok_or_else(|| DataError::MalformedHeader("payload size overflows".into()))?;
    let expected = values * 4;
    let mut payload = Vec::with_capacity(expected.min(1 << 30));
    (&mut reader).take(expected as u64 + 1).read_to_end(&mut payload)?;
    if payload.len() != expected {
        let found = if payload.len() > expected {
            // count the whole excess for the message
            payload.len() as u64 + reader_rest_len(&mut reader)?
        } else {
            payload.len() as u64
        };
        return Err(DataError::TruncatedPayload {
            expected: expected as u64,
            found,
        });
    }
    let data = payload
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
        .collect();
    Ok(FrameSequence::new(width, height, sample_rate, data)?)
}

fn reader_rest_len(reader: &mut impl Read) -> Result<u64> {
    Ok(io::copy(reader, &mut io::sink())?)
}

pub fn write_frame_sequence(mut writer: impl Write, seq: &FrameSequence) -> Result<()> {
    let dim = |v: usize, what: &str| {
        u32::try_from(v).map_err(|_| DataError::MalformedHeader(format!("{what} {v} exceeds u32")))
    };
    let mut header = Vec::with_capacity(EITF_HEADER_LEN);
    header.extend_from_slice(EITF_MAGIC);
    header.extend_from_slice(&dim(seq.width(), "width")?.to_le_bytes());
    header.extend_from_slice(&dim(seq.height(), "height")?.to_le_bytes());
    header.extend_from_slice(&dim(seq.frame_count(), "frame count")?.to_le_bytes());
    header.extend_from_slice(&seq.sample_rate().to_le_bytes());
    writer.write_all(&header)?;
    for frame in seq.frames() {
        let bytes: Vec<u8> = frame.iter().flat_map(|v| v.to_le_bytes()).collect();
        writer.write_all(&bytes)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn load_frame_sequence(path: impl AsRef<Path>) -> Result<FrameSequence> {
    read_frame_sequence(open(path.as_ref())?)
}

pub fn save_frame_sequence(path: impl AsRef<Path>, seq: &FrameSequence) -> Result<()> {
    let path = path.as_ref();
    write_frame_sequence(create(path)?, seq).map_err(|e| match e {
        DataError::Stream(source) => DataError::Io {
            path: path.to_path_buf(),
            source,
        },
        other => other,
    })
}

// ------------------------------------------------------------ triggers

pub fn parse_trigger_train(text: &str) -> Result<TriggerTrain> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let tag = lines.next().map(|(_, l)| l.trim()).unwrap_or("");
    let kind = CycleKind::from_tag(tag).ok_or_else(|| DataError::UnknownKindTag(tag.into()))?;
    let mut indices: Vec<usize> = Vec::new();
    for (i, line) in lines {
        let text = line.trim();
        let index: usize = text.parse().map_err(|_| DataError::InvalidIndex {
            line: i + 1,
            text: text.into(),
        })?;
        if indices.last().is_some_and(|&prev| index <= prev) {
            return Err(DataError::NonMonotonicTriggers { line: i + 1 });
        }
        indices.push(index);
    }
    Ok(TriggerTrain::new(kind, indices)?)
}

pub fn format_trigger_train(train: &TriggerTrain) -> String {
    let mut out = String::with_capacity(8 * (train.len() + 1));
    out.push_str(train.kind().tag());
    out.push('\n');
    for i in train.indices() {
        out.push_str(&i.to_string());
        out.push('\n');
    }
    out
}

pub fn load_trigger_train(path: impl AsRef<Path>) -> Result<TriggerTrain> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(io_at(path))?;
    parse_trigger_train(&text)
}

pub fn save_trigger_train(path: impl AsRef<Path>, train: &TriggerTrain) -> Result<()> {
    write_bytes(path.as_ref(), format_trigger_train(train).as_bytes())
}

// ---------------------------------------------------------- pixel maps

pub fn map_to_csv(map: &PixelMap) -> String {
    let mut out = String::with_capacity(map.len() * 8);
    for row in map.values().chunks(map.width()) {
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            out.push_str(&v.to_string());
        }
        out.push('\n');
    }
    out
}

/// Parses a CSV map; the shape comes from the row and column counts and
/// `kind` is checked against the values.
pub fn parse_map_csv(text: &str, kind: MapKind) -> Result<PixelMap> {
    let mut values = Vec::new();
    let (mut width, mut height) = (0, 0);
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let before = values.len();
        for field in line.split(',') {
            let v: f64 = field.trim().parse().map_err(|_| DataError::Csv {
                line: i + 1,
                message: format!("`{}` is not a number", field.trim()),
            })?;
            values.push(v);
        }
        let n = values.len() - before;
        if height == 0 {
            width = n;
        } else if n != width {
            return Err(DataError::Csv {
                line: i + 1,
                message: format!("{n} columns, expected {width}"),
            });
        }
        height += 1;
    }
    if height == 0 {
        return Err(DataError::Csv {
            line: 0,
            message: "no rows".into(),
        });
    }
    Ok(PixelMap::with_shape(width, height, kind, values)?)
}

/// 8-bit P5 preview. Region labels use fixed gray levels `85 · label`;
/// other kinds scale min → 0 and max → 255, and a constant map is black.
pub fn map_to_pgm(map: &PixelMap) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", map.width(), map.height()).into_bytes();
    let gray: Box<dyn Fn(f64) -> u8> = if map.kind() == MapKind::RegionLabel {
        Box::new(|v| (v * 85.0) as u8)
    } else {
        let lo = map.values().iter().copied().fold(f64::INFINITY, f64::min);
        let hi = map.values().iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let span = hi - lo;
        Box::new(move |v| {
            if span > 0.0 {
                ((v - lo) / span * 255.0).round() as u8
            } else {
                0
            }
        })
    };
    out.extend(map.values().iter().map(|&v| gray(v)));
    out
}

/// Decodes a P5 image written by [`map_to_pgm`] into raw gray levels.
pub fn parse_pgm(bytes: &[u8]) -> Result<(usize, usize, Vec<u8>)> {
    let bad = |m: &str| DataError::MalformedHeader(format!("PGM: {m}"));
    let mut cursor = io::Cursor::new(bytes);
    let mut tokens = Vec::new();
    while tokens.len() < 4 {
        let mut line = String::new();
        if cursor.read_line(&mut line)? == 0 {
            return Err(bad("header ends early"));
        }
        tokens.extend(line.split_whitespace().map(str::to_owned));
    }
    if tokens[0] != "P5" || tokens[3] != "255" {
        return Err(bad("expected P5 with maxval 255"));
    }
    let w: usize = tokens[1].parse().map_err(|_| bad("width"))?;
    let h: usize = tokens[2].parse().map_err(|_| bad("height"))?;
    let start = cursor.position() as usize;
    let pixels = bytes[start..].to_vec();
    if pixels.len() != w * h {
        return Err(DataError::TruncatedPayload {
            expected: (w * h) as u64,
            found: pixels.len() as u64,
        });
    }
    Ok((w, h, pixels))
}

/// Writes `<path>.csv` and `<path>.pgm` (any extension on `path` is
/// replaced) and returns both paths.
pub fn write_pixel_map(map: &PixelMap, path: impl AsRef<Path>) -> Result<(PathBuf, PathBuf)> {
    let csv = path.as_ref().with_extension("csv");
    let pgm = path.as_ref().with_extension("pgm");
    write_bytes(&csv, map_to_csv(map).as_bytes())?;
    write_bytes(&pgm, &map_to_pgm(map))?;
    Ok((csv, pgm))
}

pub fn load_pixel_map(path: impl AsRef<Path>, kind: MapKind) -> Result<PixelMap> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(io_at(path))?;
    parse_map_csv(&text, kind)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_at(dir))?;
    }
    File::create(path).map(BufWriter::new).map_err(io_at(path))
}
