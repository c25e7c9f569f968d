//! Differentiates randomly generated programs and compares every gradient
//! slot with central differences.
//!
//!     cargo run --release --example gradcheck_fuzz -- [programs] [seed]

use gradir::fuzz::{generate_program, point_is_regular, sample_point, FuzzConfig, Margins};
use gradir::{compare_with_finite_differences, GradientProgram};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let mut args = std::env::args().skip(1);
    let programs: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(50);
    let seed: u64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut worst, mut slots, mut failures) = (0.0f64, 0usize, 0usize);
    for i in 0..programs {
        let g = generate_program(&mut rng, FuzzConfig::default());
        let gp = GradientProgram::new(&g.program, &g.entry).expect("generated programs check");
        for _ in 0..3 {
            let point = (0..100)
                .map(|_| sample_point(&mut rng, &g.params))
                .find(|p| point_is_regular(&gp, &g.entry, p, Margins::default()));
            let Some(point) = point else { continue };
            for s in compare_with_finite_differences(&gp, &g.entry, &point, 1e-4).expect("evaluates") {
                slots += 1;
                worst = worst.max(s.error);
                if s.error > 1e-3 {
                    failures += 1;
                    println!("program {i}: arg {} [{}] ad={} fd={}", s.argument, s.index, s.ad, s.fd);
                }
            }
        }
    }
    println!("{programs} programs, {slots} slots, {failures} over 1e-3, worst relative error {worst:.2e}");
}
