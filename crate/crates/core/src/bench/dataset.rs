use std::path::Path;

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::seeded;

/// Pixel count of an 8x8 digit image.
pub const DIGIT_PIXELS: usize = 64;

/// Reads an 8x8 digits CSV: 64 pixel columns per row, optionally followed by
/// a label column that is ignored. Pixels are divided by the largest value
/// in the file so the result lies in `[0, 1]`.
pub fn load_digits(path: impl AsRef<Path>) -> Result<Vec<Vec<f64>>> {
    load_pixels(path, DIGIT_PIXELS)
}

/// Like [`load_digits`] for rows of `width` pixels.
pub fn load_pixels(path: impl AsRef<Path>, width: usize) -> Result<Vec<Vec<f64>>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_pixels(&text, width)
}

pub fn parse_pixels(text: &str, width: usize) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let row_no = idx + 1;
        let record = record.map_err(|e| Error::parse(row_no, e.to_string()))?;
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if record.len() != width && record.len() != width + 1 {
            return Err(Error::parse(
                row_no,
                format!(
                    "expected {width} pixel values, found {} fields",
                    record.len()
                ),
            ));
        }
        let pixels = record
            .iter()
            .take(width)
            .map(|field| {
                let v: f64 = field
                    .parse()
                    .map_err(|_| Error::parse(row_no, format!("non-numeric pixel `{field}`")))?;
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::parse(row_no, format!("pixel out of range: {v}")));
                }
                Ok(v)
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(pixels);
    }
    if rows.len() < 2 {
        return Err(Error::Dataset(format!(
            "need at least 2 rows, found {}",
            rows.len()
        )));
    }
    let max = rows.iter().flatten().copied().fold(0.0, f64::max);
    if max > 0.0 {
        rows.iter_mut().flatten().for_each(|v| *v /= max);
    }
    Ok(rows)
}

/// Turns real images into complex signals: sample `j` keeps its pixels as
/// the real part and takes half of a different, randomly chosen sample as
/// the imaginary part.
pub fn complexify(dataset: &[Vec<f64>], seed: u64) -> Result<Vec<Vec<Complex64>>> {
    let count = dataset.len();
    if count < 2 {
        return Err(Error::Dataset(format!(
            "complexify needs at least 2 samples, got {count}"
        )));
    }
    let mut rng = seeded(seed);
    dataset
        .iter()
        .enumerate()
        .map(|(j, real)| {
            let r = rng.random_range(0..count - 1);
            let partner = if r >= j { r + 1 } else { r };
            let imag = &dataset[partner];
            if imag.len() != real.len() {
                return Err(Error::Dataset("samples have different lengths".into()));
            }
            Ok(real
                .iter()
                .zip(imag)
                .map(|(&re, &im)| Complex64::new(re, 0.5 * im))
                .collect())
        })
        .collect()
}

/// Seeded shuffle of `0..count` split into `(train, test)` index lists with
/// `round(count * test_fraction)` test items, at least one of each.
pub fn holdout_split(
    count: usize,
    test_fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if count < 3 {
        return Err(Error::Dataset(format!(
            "holdout split needs at least 3 samples, got {count}"
        )));
    }
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Parameter(format!(
            "test fraction must be in (0, 1), got {test_fraction}"
        )));
    }
    let mut idx: Vec<usize> = (0..count).collect();
    idx.shuffle(&mut seeded(seed));
    let test_len = ((count as f64 * test_fraction).round() as usize).clamp(1, count - 2);
    let test = idx.split_off(count - test_len);
    Ok((idx, test))
}
