use std::time::Instant;
use wheelgen_core::design::*;
use wheelgen_core::topopt::*;

#[test]
fn probe_optimize() {
    let mask = AnnulusMask::standard(64);
    let opt = Optimizer::new(mask.clone(), TopOptConfig::default()).unwrap();
    let xref = generate_reference(&ReferenceSpec{spoke_count:5, spoke_width:4.0, twist:20.0, hole_pattern:None, seed:1}, &mask).unwrap();
    println!("ref fill: {:.3}, volume {:.1}", xref.fill_fraction(), xref.volume());
    for (i, j) in [(0usize, 5usize), (3, 5), (5, 5), (8, 5), (10, 5)] {
        let t = Instant::now();
        let res = opt.optimize_cell(&xref, i, j).unwrap();
        let iters = res.history.len() - 1;
        let l1 = res.design.l1_distance(&xref);
        let c0 = res.history[0].compliance;
        println!("cell({i},{j}): iters={iters} time={:.2}s compliance {:.4}->{:.4} L1={:.1} fill={:.3}",
            t.elapsed().as_secs_f64(), c0, res.compliance, l1, res.design.fill_fraction());
    }
}
