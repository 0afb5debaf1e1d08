//! Seeding, jumping and per-task stream families.
//!
//! cargo run --example xoshiro_streams

use glsbi::rng::{command, StreamFamily, Xoshiro256PlusPlus};

fn main() {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(0);
    let first: Vec<String> = (0..4).map(|_| format!("{:016x}", rng.next_u64())).collect();
    println!("seed 0, first outputs: {}", first.join(" "));

    let mut u = Xoshiro256PlusPlus::seed_from_u64(7);
    let draws: Vec<String> = (0..4).map(|_| format!("{:.6}", u.next_f64())).collect();
    println!("uniforms in [0, 1): {}", draws.join(" "));

    // one family per command, one stream per task
    let build = StreamFamily::new(42, command::BUILD_TABLE);
    let evaluate = StreamFamily::new(42, command::EVALUATE);
    for task in 0..3 {
        let mut a = build.stream(task);
        let mut b = evaluate.stream(task);
        println!("task {task}: build-table {:016x}  evaluate {:016x}", a.next_u64(), b.next_u64());
    }

    // a stream is the base generator advanced by whole jumps
    let mut base = Xoshiro256PlusPlus::seed_from_u64(42);
    base.long_jump();
    base.jump();
    assert_eq!(base.next_u64(), StreamFamily::new(42, 1).stream(1).next_u64());
    println!("stream(1) of command 1 equals long_jump + jump of the seeded generator");
}
