//! Exhaustive robustness checks and certified graph generation.
//!
//! ```text
//! cargo run --example graph_robustness
//! ```

use elrc::graph::{
    generate_r_robust_digraph, is_f_local_attack, is_r_reachable, max_robustness, robustness_ceiling, Digraph,
    VertexSet,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for n in 2..=8 {
        let g = Digraph::complete(n)?;
        println!("complete K{n}: max robustness {} (ceiling {})", max_robustness(&g)?, robustness_ceiling(n));
    }

    // Five agents where 1 hears 2, 3, 5 and 5 hears 1, 4.
    let g: Digraph = "5\n1: 2 3 5\n2: 1 3\n3: 2 4\n4: 1 3 5\n5: 1 4\n".parse()?;
    let s = VertexSet::from([0, 4]);
    println!("{{1, 5}} is 2-reachable: {}", is_r_reachable(&g, &s, 2)?);
    println!("five-agent graph: max robustness {}", max_robustness(&g)?);

    let g = generate_r_robust_digraph(8, 3, 42)?;
    println!("\ngenerated 3-robust graph on 8 agents, {} edges:\n{g}", g.edge_count());
    println!("max robustness {}", max_robustness(&g)?);
    let byz = VertexSet::from([0]);
    println!("{{1}} is a 1-local attack: {}", is_f_local_attack(&g, &byz, 1)?);

    match generate_r_robust_digraph(4, 3, 0) {
        Err(e) => println!("n = 4, r = 3: {e}"),
        Ok(_) => unreachable!("3-robustness needs at least 5 agents"),
    }
    Ok(())
}
