use trispin::linalg::eigh;
use trispin::qlm::{build_ion_hamiltonian, QlmConfig};

#[test]
fn n6_eigh_repro() {
    let c6 = QlmConfig::<f64>::new(6, 1.0, 0.5).unwrap();
    let h = build_ion_hamiltonian(&c6).unwrap();
    println!("built H dim {}", h.dim);
    let t0 = std::time::Instant::now();
    match eigh(&h.matrix, h.dim) {
        Ok(eig) => {
            println!("eigh ok in {:?}; lambda range [{:.4}, {:.4}]", t0.elapsed(), eig.values[0], eig.values[h.dim-1]);
            // residual spot checks
            let n = h.dim;
            for &k in &[0usize, 1000, 2047] {
                let v = eig.vector(k);
                let mut worst = 0.0f64;
                for r in 0..n {
                    let mut av = 0.0;
                    for c in 0..n {
                        av += h.matrix[r * n + c] * v[c];
                    }
                    worst = worst.max((av - eig.values[k] * v[r]).abs());
                }
                println!("residual eigenpair {k}: {worst:.3e}");
            }
        }
        Err(e) => println!("eigh FAILED after {:?}: {e}", t0.elapsed()),
    }
}
