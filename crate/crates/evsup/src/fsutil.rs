use std::fs;
use std::path::Path;

use crate::error::{AppError, AppResult};

/// Create `dir` if needed; refuse when it already holds entries.
pub fn ensure_empty_dir(dir: &Path) -> AppResult<()> {
    if dir.exists() {
        let mut entries = fs::read_dir(dir).map_err(AppError::io(dir))?;
        if entries.next().is_some() {
            return Err(AppError::Overwrite(dir.to_path_buf()));
        }
    }
    fs::create_dir_all(dir).map_err(AppError::io(dir))
}

pub fn create_dir(dir: &Path) -> AppResult<()> {
    fs::create_dir_all(dir).map_err(AppError::io(dir))
}

pub fn write(path: &Path, bytes: impl AsRef<[u8]>) -> AppResult<()> {
    fs::write(path, bytes).map_err(AppError::io(path))
}

pub fn read(path: &Path) -> AppResult<Vec<u8>> {
    fs::read(path).map_err(AppError::io(path))
}

pub fn read_string(path: &Path) -> AppResult<String> {
    fs::read_to_string(path).map_err(AppError::io(path))
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> AppResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| AppError::format(path, e))?;
    text.push('\n');
    write(path, text)
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> AppResult<T> {
    serde_json::from_str(&read_string(path)?).map_err(|e| AppError::format(path, e))
}

pub fn f32_le_bytes(values: impl IntoIterator<Item = f32>) -> Vec<u8> {
    values.into_iter().flat_map(f32::to_le_bytes).collect()
}

pub fn f32_from_le(path: &Path, bytes: &[u8]) -> AppResult<Vec<f32>> {
    if !bytes.len().is_multiple_of(4) {
        return Err(AppError::format(path, format!("{} bytes is not a whole number of float32 values", bytes.len())));
    }
    Ok(bytes.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect())
}
