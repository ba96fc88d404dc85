use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use bzip2::read::MultiBzDecoder;
use flate2::read::MultiGzDecoder;
use tempfile::NamedTempFile;

use super::InputFormat;

/// Opens `path`, decompressing `.gz` and `.bz2` by extension.
pub fn open_input(path: &Path) -> Result<Box<dyn BufRead>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
    let reader: Box<dyn BufRead> = match ext {
        "gz" => Box::new(BufReader::new(MultiGzDecoder::new(BufReader::new(file)))),
        "bz2" => Box::new(BufReader::new(MultiBzDecoder::new(BufReader::new(file)))),
        _ => Box::new(BufReader::new(file)),
    };
    Ok(reader)
}

/// Resolves `Auto` by peeking: text lines start with a decimal timestamp
/// followed by `|`.
pub fn sniff(reader: &mut dyn BufRead, format: InputFormat) -> io::Result<InputFormat> {
    if format != InputFormat::Auto {
        return Ok(format);
    }
    let head = reader.fill_buf()?;
    if head.is_empty() {
        return Ok(InputFormat::Text);
    }
    let digits = head.iter().take_while(|b| b.is_ascii_digit()).count();
    Ok(if digits > 0 && head.get(digits) == Some(&b'|') { InputFormat::Text } else { InputFormat::Mrt })
}

/// Writes `path` through a temporary file in the same directory, so readers
/// never see a partial file.
pub fn write_atomic<F>(path: &Path, fill: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> io::Result<()>,
{
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let tmp = NamedTempFile::new_in(dir).with_context(|| format!("creating temp file in {}", dir.display()))?;
    let mut w = BufWriter::new(tmp);
    fill(&mut w).with_context(|| format!("writing {}", path.display()))?;
    let tmp = w.into_inner().map_err(|e| e.into_error()).with_context(|| format!("writing {}", path.display()))?;
    tmp.persist(path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

pub fn open_intermediate(dir: &Path, name: &str) -> Result<BufReader<File>> {
    let path = dir.join(name);
    let f = File::open(&path).with_context(|| format!("missing intermediate {}", path.display()))?;
    Ok(BufReader::new(f))
}

/// `key=value` lines in key order.
pub fn write_meta(path: &Path, meta: &BTreeMap<&str, String>) -> Result<()> {
    write_atomic(path, |w| {
        for (k, v) in meta {
            writeln!(w, "{k}={v}")?;
        }
        Ok(())
    })
}

pub fn read_meta(dir: &Path, name: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for line in open_intermediate(dir, name)?.lines() {
        let line = line?;
        if let Some((k, v)) = line.split_once('=') {
            out.insert(k.to_string(), v.to_string());
        }
    }
    Ok(out)
}
