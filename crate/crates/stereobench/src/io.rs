//! 8-bit RGB PNG reading and writing.

use std::fs::File;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};

use png::{BitDepth, ColorType};
use stereobench_core::Image8;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{0}: file not found")]
    FileNotFound(PathBuf),
    #[error("{path}: cannot decode PNG: {message}")]
    DecodeError { path: PathBuf, message: String },
    #[error("{path}: unsupported format ({detail}); expected 8-bit RGB without alpha")]
    UnsupportedFormat { path: PathBuf, detail: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

impl IoError {
    pub(crate) fn io(path: &Path, source: io::Error) -> Self {
        if source.kind() == io::ErrorKind::NotFound {
            IoError::FileNotFound(path.to_path_buf())
        } else {
            IoError::Io {
                path: path.to_path_buf(),
                source,
            }
        }
    }
}

/// Decodes an 8-bit RGB PNG. Palette images are expanded; grayscale,
/// alpha and 16-bit images are rejected rather than converted.
pub fn load_image(path: &Path) -> Result<Image8, IoError> {
    let file = File::open(path).map_err(|e| IoError::io(path, e))?;
    let decode_err = |e: png::DecodingError| match e {
        png::DecodingError::IoError(io) if io.kind() != io::ErrorKind::UnexpectedEof => IoError::io(path, io),
        other => IoError::DecodeError {
            path: path.to_path_buf(),
            message: other.to_string(),
        },
    };
    let mut decoder = png::Decoder::new(BufReader::new(file));
    decoder.set_transformations(png::Transformations::EXPAND);
    let mut reader = decoder.read_info().map_err(decode_err)?;
    let (color, depth) = reader.output_color_type();
    if color != ColorType::Rgb || depth != BitDepth::Eight {
        return Err(IoError::UnsupportedFormat {
            path: path.to_path_buf(),
            detail: format!("{color:?}, {} bits per sample", depth as u8),
        });
    }
    let size = reader.output_buffer_size().ok_or_else(|| IoError::DecodeError {
        path: path.to_path_buf(),
        message: "image too large".into(),
    })?;
    let mut buf = vec![0; size];
    let frame = reader.next_frame(&mut buf).map_err(decode_err)?;
    buf.truncate(frame.buffer_size());
    let (w, h) = (frame.width as usize, frame.height as usize);
    Image8::new(h, w, buf).map_err(|e| IoError::DecodeError {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Encodes to PNG in memory. The bytes depend only on the pixels.
pub fn encode_png(img: &Image8) -> Vec<u8> {
    let mut out = Vec::new();
    let mut enc = png::Encoder::new(&mut out, img.width() as u32, img.height() as u32);
    enc.set_color(ColorType::Rgb);
    enc.set_depth(BitDepth::Eight);
    let mut writer = enc.write_header().expect("writing to memory");
    writer.write_image_data(img.data()).expect("buffer matches header");
    writer.finish().expect("writing to memory");
    out
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), IoError> {
    let mut f = File::create(path).map_err(|e| IoError::io(path, e))?;
    f.write_all(bytes).map_err(|e| IoError::io(path, e))
}

/// Writes `img` as PNG. Zero-sized images cannot be constructed, so every
/// `Image8` is saveable.
pub fn save_image(img: &Image8, path: &Path) -> Result<(), IoError> {
    write_bytes(path, &encode_png(img))
}
