//! Generates the scaled make-circles split and writes it as CSV.
//!
//! ```text
//! cargo run --example dataset -- circles.csv
//! ```

use std::fs::File;
use std::io::BufWriter;

use qfl_ring::datagen::generate;

fn main() -> qfl_ring::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| "circles.csv".to_string());
    let (dataset, scaling) = generate(1200, 0.1, 0.5, 0.8, 42)?;
    let inner = dataset.train.iter().filter(|s| s.label == 1).count();
    println!("train {} ({inner} inner), test {}", dataset.train.len(), dataset.test.len());
    println!("feature min {:?}, max {:?}, clamped test points {}", scaling.min, scaling.max, scaling.clamped_test_points);
    dataset.write_csv(BufWriter::new(File::create(&path)?))?;
    println!("wrote {path} (checksum {})", dataset.checksum());
    Ok(())
}
