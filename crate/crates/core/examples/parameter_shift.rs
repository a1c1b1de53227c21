//! Forward pass of the two-qubit classifier and its parameter-shift
//! gradient, checked against central differences.

use qfl_ring::seeds::derive_rng;
use qfl_ring::vqc::VqcModel;

fn main() -> qfl_ring::Result<()> {
    let model = VqcModel::random(2, 2, &mut derive_rng(7, 0))?;
    let features = [0.4, 2.2];
    let z = model.forward(&features)?;
    println!("<Z0>, <Z1> = {:+.6}, {:+.6}", z[0], z[1]);

    // gradient of <Z0> alone
    let grad = model.gradient(&features, &[1.0, 0.0])?;
    let eps = 1e-6;
    println!("{:>5} {:>12} {:>12}", "param", "shift rule", "finite diff");
    for (i, g) in grad.as_slice().iter().enumerate() {
        let bumped = |d: f64| -> qfl_ring::Result<f64> {
            let mut p = model.params().clone();
            p.as_mut_slice()[i] += d;
            Ok(VqcModel::new(p).forward(&features)?[0])
        };
        let fd = (bumped(eps)? - bumped(-eps)?) / (2.0 * eps);
        println!("{i:>5} {g:>12.8} {fd:>12.8}");
    }
    Ok(())
}
