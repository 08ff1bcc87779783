//! Grid persistence formats.
//!
//! Binary: a 16-byte header (`b"BPGR"`, version, width, height as
//! little-endian 32-bit fields) followed by a run-length encoding of the
//! row-major bitmap. Runs are little-endian `u32` counts alternating
//! empty/occupied, starting with empty; run counts sum to `width * height`.
//!
//! Text: one `'0'`/`'1'` character per site, one row per line, row `y` on
//! line `y`. Intended for tests and small fixtures; rendering refuses grids
//! larger than 200 in either dimension.

use crate::error::{Error, Result};
use crate::grid::{GridConfig, InfectionField, SiteSet, NEVER};

pub const MAGIC: &[u8; 4] = b"BPGR";
pub const VERSION: u32 = 1;
pub const TEXT_LIMIT: usize = 200;

pub fn to_binary(set: &SiteSet) -> Vec<u8> {
    let config = set.config();
    let mut out = Vec::with_capacity(32);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(config.width as u32).to_le_bytes());
    out.extend_from_slice(&(config.height as u32).to_le_bytes());
    let mut current = false;
    let mut run: u32 = 0;
    for y in 0..config.height {
        for x in 0..config.width {
            let bit = set.get(x, y);
            if bit == current {
                run += 1;
            } else {
                out.extend_from_slice(&run.to_le_bytes());
                current = bit;
                run = 1;
            }
        }
    }
    out.extend_from_slice(&run.to_le_bytes());
    out
}

pub fn from_binary(bytes: &[u8]) -> Result<SiteSet> {
    if bytes.len() < 16 {
        return Err(Error::BadGridData("short header".into()));
    }
    if &bytes[0..4] != MAGIC {
        return Err(Error::BadGridData("bad magic".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(Error::BadGridData(format!("unsupported version {version}")));
    }
    let width = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let height = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
    if width == 0 || height == 0 {
        return Err(Error::BadGridData("zero dimension".into()));
    }
    let body = &bytes[16..];
    if body.len() % 4 != 0 {
        return Err(Error::BadGridData("truncated run".into()));
    }
    let config = GridConfig::new(width, height);
    let mut set = SiteSet::empty(config);
    let mut pos: usize = 0;
    let total = config.area();
    let mut occupied = false;
    for chunk in body.chunks_exact(4) {
        let run = u32::from_le_bytes(chunk.try_into().unwrap()) as usize;
        if pos + run > total {
            return Err(Error::BadGridData("runs exceed grid area".into()));
        }
        if occupied {
            for i in pos..pos + run {
                set.insert(i % width, i / width);
            }
        }
        pos += run;
        occupied = !occupied;
    }
    if pos != total {
        return Err(Error::BadGridData(format!("runs cover {pos} of {total} sites")));
    }
    Ok(set)
}

pub fn render(set: &SiteSet) -> Result<String> {
    let config = set.config();
    if config.width > TEXT_LIMIT || config.height > TEXT_LIMIT {
        return Err(Error::GridTooLarge(config.width, config.height));
    }
    let mut out = String::with_capacity((config.width + 1) * config.height);
    for y in 0..config.height {
        if y > 0 {
            out.push('\n');
        }
        for x in 0..config.width {
            out.push(if set.get(x, y) { '1' } else { '0' });
        }
    }
    Ok(out)
}

pub fn parse(text: &str) -> Result<SiteSet> {
    let lines: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
    if lines.is_empty() {
        return Err(Error::BadGridData("no rows".into()));
    }
    let width = lines[0].trim().len();
    let config = GridConfig::new(width, lines.len());
    let mut set = SiteSet::empty(config);
    for (y, line) in lines.iter().enumerate() {
        let line = line.trim();
        if line.len() != width {
            return Err(Error::BadGridData(format!("row {y} has width {} != {width}", line.len())));
        }
        for (x, ch) in line.chars().enumerate() {
            match ch {
                '1' => set.insert(x, y),
                '0' => {}
                other => return Err(Error::BadGridData(format!("bad cell '{other}' at ({x}, {y})"))),
            }
        }
    }
    Ok(set)
}

/// Per-site infection times, comma-separated, `-` for never-infected sites.
pub fn render_times(field: &InfectionField) -> Result<String> {
    let config = field.config();
    if config.width > TEXT_LIMIT || config.height > TEXT_LIMIT {
        return Err(Error::GridTooLarge(config.width, config.height));
    }
    let mut out = String::new();
    for y in 0..config.height {
        if y > 0 {
            out.push('\n');
        }
        for x in 0..config.width {
            if x > 0 {
                out.push(',');
            }
            let t = field.time(x, y);
            if t == NEVER {
                out.push('-');
            } else {
                out.push_str(&t.to_string());
            }
        }
    }
    Ok(out)
}
