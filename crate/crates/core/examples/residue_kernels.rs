//! Closed-form residue kernels against truncated quadrature.

use layerflow::kernels::{residue_kernel_pair, residue_kernel_quadrature};

fn main() -> layerflow::error::Result<()> {
    println!("{:>6} {:>6} {:>14} {:>14} {:>10}", "a", "|xi|", "closed", "quadrature", "rel_err");
    for a in [0.25, 1.0, 4.0] {
        for xi in [0.5, 2.0] {
            let exact = residue_kernel_pair(a, xi)?;
            let quad = residue_kernel_quadrature(a, xi)?;
            let err = ((exact.0 - quad.0).abs() / exact.0.abs()).max((exact.1 - quad.1).abs() / exact.1.abs());
            println!("{a:>6} {xi:>6} {:>14.8} {:>14.8} {err:>10.2e}", exact.0, quad.0);
        }
    }
    Ok(())
}
