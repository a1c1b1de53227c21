//! The make-circles toy dataset: two concentric noisy circles, one class
//! each, scaled into RX rotation angles.

use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::numfmt::sig9;
use crate::seeds::{derive_rng, STREAM_DATASET, STREAM_SPLIT};

pub const DEFAULT_POINTS: usize = 1200;
pub const DEFAULT_NOISE: f64 = 0.1;
pub const DEFAULT_FACTOR: f64 = 0.5;
pub const DEFAULT_TRAIN_FRACTION: f64 = 0.8;

/// Upper end of the feature range after scaling; features become angles
/// in `[0, π]`.
pub const FEATURE_RANGE: f64 = std::f64::consts::PI;

pub const CSV_HEADER: &str = "x1,x2,label,split";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub features: [f64; 2],
    pub label: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    fn as_str(&self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub train: Vec<Sample>,
    pub test: Vec<Sample>,
}

/// Train-set statistics used for min-max scaling.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingReport {
    pub min: [f64; 2],
    pub max: [f64; 2],
    /// Test points with at least one feature clamped into `[0, π]`.
    pub clamped_test_points: usize,
}

/// Generates `n / 2` points on the unit circle (label 0) and `n / 2` on the
/// circle of radius `factor` (label 1), evenly spaced in angle, then adds
/// independent Gaussian noise to every coordinate.
pub fn make_circles(n: usize, noise_sigma: f64, factor: f64, seed: u64) -> Result<Vec<Sample>> {
    if n == 0 || n % 2 != 0 {
        return Err(Error::Dataset(format!("point count must be even and positive, got {n}")));
    }
    if !(factor > 0.0 && factor < 1.0) {
        return Err(Error::Dataset(format!("factor must lie in (0, 1), got {factor}")));
    }
    if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
        return Err(Error::Dataset(format!("noise must be finite and non-negative, got {noise_sigma}")));
    }
    let mut rng = derive_rng(seed, STREAM_DATASET);
    let noise = Normal::new(0.0, noise_sigma).map_err(|e| Error::Dataset(e.to_string()))?;
    let per_class = n / 2;
    let mut points = Vec::with_capacity(n);
    for (label, radius) in [(0usize, 1.0), (1usize, factor)] {
        for i in 0..per_class {
            let angle = 2.0 * std::f64::consts::PI * i as f64 / per_class as f64;
            points.push(Sample {
                features: [radius * angle.cos(), radius * angle.sin()],
                label,
            });
        }
    }
    if noise_sigma > 0.0 {
        for p in &mut points {
            p.features[0] += noise.sample(&mut rng);
            p.features[1] += noise.sample(&mut rng);
        }
    }
    Ok(points)
}

/// Stratified seeded split, then per-feature min-max scaling to `[0, π]`
/// fitted on the train portion only. Test features falling outside the
/// interval are clamped.
pub fn scale_and_split(points: &[Sample], train_fraction: f64, seed: u64) -> Result<(Dataset, ScalingReport)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Dataset(format!("train fraction must lie in (0, 1), got {train_fraction}")));
    }
    let mut rng = derive_rng(seed, STREAM_SPLIT);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for label in 0..2 {
        let mut class: Vec<Sample> = points.iter().copied().filter(|p| p.label == label).collect();
        class.shuffle(&mut rng);
        let cut = (class.len() as f64 * train_fraction).round() as usize;
        test.extend_from_slice(&class[cut..]);
        class.truncate(cut);
        train.extend(class);
    }
    if let Some(bad) = points.iter().find(|p| p.label > 1) {
        return Err(Error::InvalidLabel(bad.label));
    }
    if train.is_empty() || test.is_empty() {
        return Err(Error::Dataset("split leaves an empty train or test set".into()));
    }
    train.shuffle(&mut rng);
    test.shuffle(&mut rng);

    let mut min = [f64::INFINITY; 2];
    let mut max = [f64::NEG_INFINITY; 2];
    for p in &train {
        for f in 0..2 {
            min[f] = min[f].min(p.features[f]);
            max[f] = max[f].max(p.features[f]);
        }
    }
    for f in 0..2 {
        if max[f] <= min[f] {
            return Err(Error::Dataset(format!("feature {} is constant on the train split", f + 1)));
        }
    }
    let scale = |v: f64, f: usize| (v - min[f]) / (max[f] - min[f]) * FEATURE_RANGE;
    for p in &mut train {
        for f in 0..2 {
            p.features[f] = scale(p.features[f], f);
        }
    }
    let mut clamped_test_points = 0;
    for p in &mut test {
        let mut clamped = false;
        for f in 0..2 {
            let v = scale(p.features[f], f);
            let c = v.clamp(0.0, FEATURE_RANGE);
            clamped |= c != v;
            p.features[f] = c;
        }
        clamped_test_points += usize::from(clamped);
    }
    log::info!(
        "split {} train / {} test; {} test points clamped into [0, pi]",
        train.len(),
        test.len(),
        clamped_test_points
    );
    Ok((
        Dataset { train, test },
        ScalingReport {
            min,
            max,
            clamped_test_points,
        },
    ))
}

/// Generation followed by the split, as used by every experiment.
pub fn generate(n: usize, noise_sigma: f64, factor: f64, train_fraction: f64, seed: u64) -> Result<(Dataset, ScalingReport)> {
    let points = make_circles(n, noise_sigma, factor, seed)?;
    scale_and_split(&points, train_fraction, seed)
}

impl Dataset {
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{CSV_HEADER}")?;
        for (split, samples) in [(Split::Train, &self.train), (Split::Test, &self.test)] {
            for s in samples {
                writeln!(
                    out,
                    "{},{},{},{}",
                    sig9(s.features[0]),
                    sig9(s.features[1]),
                    s.label,
                    split.as_str()
                )?;
            }
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV is ASCII")
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Dataset> {
        let mut lines = input.lines();
        let header = lines.next().transpose()?.unwrap_or_default();
        if header.trim_end() != CSV_HEADER {
            return Err(Error::Dataset(format!("expected header `{CSV_HEADER}`")));
        }
        let mut dataset = Dataset {
            train: Vec::new(),
            test: Vec::new(),
        };
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let bad = || Error::Dataset(format!("malformed row {}: {line}", lineno + 2));
            let fields: Vec<&str> = line.trim_end().split(',').collect();
            let [x1, x2, label, split] = fields.as_slice() else {
                return Err(bad());
            };
            let sample = Sample {
                features: [x1.parse().map_err(|_| bad())?, x2.parse().map_err(|_| bad())?],
                label: label.parse().map_err(|_| bad())?,
            };
            if sample.label > 1 {
                return Err(Error::InvalidLabel(sample.label));
            }
            match *split {
                "train" => dataset.train.push(sample),
                "test" => dataset.test.push(sample),
                _ => return Err(bad()),
            }
        }
        Ok(dataset)
    }

    /// SHA-256 of the CSV serialization, first 16 hex digits.
    pub fn checksum(&self) -> String {
        let digest = Sha256::digest(self.to_csv_string().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

/// Draws a fresh uniform sample, used by tests and examples that need
/// ad-hoc points.
pub fn random_sample<R: Rng + ?Sized>(rng: &mut R) -> Sample {
    Sample {
        features: [
            rng.random_range(0.0..FEATURE_RANGE),
            rng.random_range(0.0..FEATURE_RANGE),
        ],
        label: rng.random_range(0..2),
    }
}
