//! Erdős-Rényi graph generation, degree statistics and reciprocal pairs.
//!
//! cargo run --example er_graph

use glsbi::graph::{generate_er, reciprocal_pair_count, remove_reciprocal, GraphParams};
use glsbi::rng::Xoshiro256PlusPlus;

fn main() -> glsbi::Result<()> {
    let (n, p) = (500, 0.02);
    let params = GraphParams::new(n, p, 0.01)?;
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(11);
    let g = generate_er(&params, &mut rng)?;

    let pairs = (n * (n - 1)) as f64;
    println!("n={n} p={p}: {} edges (expected {:.1})", g.edge_count(), pairs * p);

    let in_deg: Vec<usize> = (0..n).map(|i| g.presyn(i).len()).collect();
    let mean_in = in_deg.iter().sum::<usize>() as f64 / n as f64;
    let isolated = in_deg.iter().filter(|&&d| d == 0).count();
    println!("mean in-degree {mean_in:.2} (expected {:.2}), {isolated} neurons without inputs", (n - 1) as f64 * p);

    let out_max = g.out_degrees().into_iter().max().unwrap_or(0);
    println!("max out-degree {out_max}");

    let reciprocal = reciprocal_pair_count(&g);
    println!("{reciprocal} reciprocal pairs (expected {:.1})", pairs / 2.0 * p * p);

    let thinned = remove_reciprocal(&g, &mut rng);
    println!(
        "after removal: {} edges, {} reciprocal pairs, effective p {:.5} (p - p^2/2 = {:.5})",
        thinned.edge_count(),
        reciprocal_pair_count(&thinned),
        thinned.edge_count() as f64 / pairs,
        p - p * p / 2.0
    );
    Ok(())
}
