//! Walks the quasi-random direction stream: prints the first quadruples,
//! checks unit norms, and estimates angular averages with known closed
//! forms.
//!
//! Run with `cargo run --example directions_dump`.

use qrdom::directions::{direction_stream, SequenceKind};

fn main() -> qrdom::Result<()> {
    let kind = SequenceKind::ReverseHalton;

    println!("first 4 quadruples of the {} stream", kind.name());
    println!("{:>3} {:>2} {:>12} {:>12} {:>12}", "i", "j", "s1", "s2", "s3");
    for quad in direction_stream(1, 4, kind)? {
        for (j, d) in quad.directions.iter().enumerate() {
            println!(
                "{:>3} {:>2} {:>12.8} {:>12.8} {:>12.8}",
                quad.index,
                j + 1,
                d.s1,
                d.s2,
                d.s3
            );
        }
    }

    // Every direction lies on the unit sphere by construction.
    let mut worst_norm = 0.0f64;
    for quad in direction_stream(1, 256, kind)? {
        for d in &quad.directions {
            worst_norm = worst_norm.max((d.norm() - 1.0).abs());
        }
    }
    println!("\nworst |s| deviation over 256 quadruples: {worst_norm:.2e}");

    // Sample means vs angular averages over the upper hemisphere: the
    // constant 1, s1^2 (average 1/3), and s3 (average 1/2).
    let (mut m0, mut m1, mut m3, mut n) = (0.0, 0.0, 0.0, 0u64);
    for quad in direction_stream(1, 256, kind)? {
        for d in &quad.directions {
            m0 += 1.0;
            m1 += d.s1 * d.s1;
            m3 += d.s3;
            n += 1;
        }
    }
    let inv = 1.0 / n as f64;
    println!("\nsample means over {n} directions (closed form in brackets):");
    println!("  <1>    = {:.6}  [1]", m0 * inv);
    println!("  <s1^2> = {:.6}  [1/3 = {:.6}]", m1 * inv, 1.0 / 3.0);
    println!("  <s3>   = {:.6}  [1/2]", m3 * inv);
    Ok(())
}
