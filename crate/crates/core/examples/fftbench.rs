use std::time::Instant;
use darktrack::spectral::{Fft2, Complex64};
fn main() {
    let mut good = Vec::new();
    for n in 8usize..=128 {
        // keep to sizes with small prime factors
        let mut m = n;
        for p in [2usize, 3, 5] { while m % p == 0 { m /= p; } }
        if m != 1 { continue; }
        let fft = Fft2::new(n, n);
        let mut buf: Vec<Complex64> = (0..n*n).map(|i| Complex64::new(i as f64 * 0.37 % 1.0, 0.0)).collect();
        for _ in 0..20 { fft.forward_in_place(&mut buf); }
        let t = Instant::now();
        let iters = (400_000 / (n*n)).max(20);
        for _ in 0..iters { fft.forward_in_place(&mut buf); }
        let per_bin = t.elapsed().as_secs_f64() / iters as f64 / (n*n) as f64 * 1e9;
        println!("n={n:3}: {per_bin:6.2} ns/bin");
        if per_bin < 13.0 { good.push(n); }
    }
    println!("fast sizes: {good:?}");
}
