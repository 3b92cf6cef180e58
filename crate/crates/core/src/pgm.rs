//! Grayscale PGM images (P2 ASCII and P5 binary, maxval 255).

use std::fmt::Write as _;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PgmFormat {
    Ascii,
    Binary,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(Error::Shape(format!("{width} × {height} image needs {} pixels, got {}", width * height, pixels.len())));
        }
        Ok(Self { width, height, pixels })
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> u8) -> Self {
        let pixels = (0..height).flat_map(|r| (0..width).map(move |c| (r, c))).map(|(r, c)| f(r, c)).collect();
        Self { width, height, pixels }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Row-major pixel values.
    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.pixels[row * self.width + col]
    }

    pub fn to_pgm(&self, format: PgmFormat) -> Vec<u8> {
        let header = |magic: &str| format!("{magic}\n{} {}\n255\n", self.width, self.height);
        match format {
            PgmFormat::Binary => {
                let mut out = header("P5").into_bytes();
                out.extend_from_slice(&self.pixels);
                out
            }
            PgmFormat::Ascii => {
                let mut s = header("P2");
                for row in self.pixels.chunks(self.width.max(1)) {
                    let line: Vec<String> = row.iter().map(u8::to_string).collect();
                    let _ = writeln!(s, "{}", line.join(" "));
                }
                s.into_bytes()
            }
        }
    }

    pub fn parse_pgm(bytes: &[u8]) -> Result<(Self, PgmFormat)> {
        let mut pos = 0;
        let magic = next_token(bytes, &mut pos)?;
        let format = match magic.as_str() {
            "P2" => PgmFormat::Ascii,
            "P5" => PgmFormat::Binary,
            other => return Err(Error::Parse(format!("PGM: unsupported magic {other:?}"))),
        };
        let width = parse_header_num(bytes, &mut pos, "width")?;
        let height = parse_header_num(bytes, &mut pos, "height")?;
        let maxval = parse_header_num(bytes, &mut pos, "maxval")?;
        if maxval != 255 {
            return Err(Error::Unsupported(format!("PGM maxval {maxval}; only 255 is supported")));
        }
        let n = width * height;
        let pixels = match format {
            PgmFormat::Binary => {
                // Exactly one whitespace byte separates the header from the raster.
                pos += 1;
                let raster = bytes.get(pos..pos + n).ok_or_else(|| Error::Parse(format!("PGM: expected {n} raster bytes")))?;
                raster.to_vec()
            }
            PgmFormat::Ascii => {
                let mut px = Vec::with_capacity(n);
                for _ in 0..n {
                    let v = parse_header_num(bytes, &mut pos, "pixel")?;
                    if v > 255 {
                        return Err(Error::Parse(format!("PGM: pixel value {v} exceeds maxval")));
                    }
                    px.push(v as u8);
                }
                px
            }
        };
        Ok((Self { width, height, pixels }, format))
    }

    pub fn read(path: &std::path::Path) -> Result<(Self, PgmFormat)> {
        Self::parse_pgm(&std::fs::read(path)?)
    }

    pub fn write(&self, path: &std::path::Path, format: PgmFormat) -> Result<()> {
        std::fs::write(path, self.to_pgm(format))?;
        Ok(())
    }
}

fn next_token(bytes: &[u8], pos: &mut usize) -> Result<String> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if start == *pos {
        return Err(Error::Parse("PGM: unexpected end of file".into()));
    }
    Ok(String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
}

fn parse_header_num(bytes: &[u8], pos: &mut usize, what: &str) -> Result<usize> {
    let tok = next_token(bytes, pos)?;
    tok.parse().map_err(|_| Error::Parse(format!("PGM: bad {what} {tok:?}")))
}
