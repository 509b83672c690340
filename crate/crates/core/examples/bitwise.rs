//! The bitwise comparison predicates that the encrypted circuits mirror.

use pnfv::netfn::{bitwise_and_eq, bitwise_geq, bitwise_leq};

fn main() {
    println!("  a    b   a==b a>=b a<=b");
    for (a, b) in [(5u64, 5u64), (5, 3), (3, 5), (0, 255), (200, 199)] {
        println!(
            "{a:>3}  {b:>3}   {:>4} {:>4} {:>4}",
            bitwise_and_eq(a, b, 8),
            bitwise_geq(a, b, 8),
            bitwise_leq(a, b, 8)
        );
    }
    let agree = (0..256u64)
        .flat_map(|a| (0..256u64).map(move |b| (a, b)))
        .all(|(a, b)| {
            bitwise_and_eq(a, b, 8) == u8::from(a == b)
                && bitwise_geq(a, b, 8) == u8::from(a >= b)
                && bitwise_leq(a, b, 8) == u8::from(a <= b)
        });
    println!("all 65536 8-bit pairs agree with integer comparison: {agree}");
}
