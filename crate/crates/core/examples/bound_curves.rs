//! The lambda factor and both regret upper-bound shapes.

use riskrl::harness::{bound_curve, lambda_curve, BoundKind};

fn main() {
    for p in lambda_curve(&[2, 4], &[0.0, 0.05, 0.1, 0.2]) {
        println!("H {} beta {:<5} lambda {:.4e}", p.horizon, p.beta, p.lambda);
    }
    let ks = [100, 1000, 10_000];
    let rsvi = bound_curve(BoundKind::Rsvi, 3, 2, 3, &ks, 0.1, 0.1);
    let rsq = bound_curve(BoundKind::Rsq, 3, 2, 3, &ks, 0.1, 0.1);
    for (a, b) in rsvi.iter().zip(&rsq) {
        println!("K {:>6}: rsvi {:.1}  rsq {:.1}", a.episodes, a.bound, b.bound);
    }
}
