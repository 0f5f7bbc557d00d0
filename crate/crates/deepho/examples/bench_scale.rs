use deepho::chain::{BasedComplex, HomologyComputer};
use deepho::grid::{build_window, Cell, Subcomplex};
use std::time::Instant;

fn main() {
    let t0 = Instant::now();
    let w = build_window(3, 12, None).unwrap();
    println!("window S=12: {} simplices, built in {:?}", w.num_simplices(), t0.elapsed());

    // z-axis
    let axis_cells = (0..w.simplex_count(1)).filter_map(|id| {
        let vs = &w.simplices[1][id];
        let a = w.verts[vs[0] as usize];
        let b = w.verts[vs[1] as usize];
        if a[0] == 0 && a[1] == 0 && b[0] == 0 && b[1] == 0 {
            Some(Cell::new(1, id as u32))
        } else {
            None
        }
    });
    let axis = Subcomplex::from_cells(&w, axis_cells);
    for r in 1..=5u32 {
        let t = Instant::now();
        let n = axis.iterated_star(r);
        let y = n.complement_closure();
        let t_build = t.elapsed();
        let t = Instant::now();
        let cx = BasedComplex::from_subcomplex(&y, None, true);
        let t_cx = t.elapsed();
        let t = Instant::now();
        let h = HomologyComputer::new(cx);
        let core = h.collapsed.core.total_size();
        let t_col = t.elapsed();
        let t = Instant::now();
        let g0 = h.group(0);
        let g1 = h.group(1);
        let g2 = h.group(2);
        println!(
            "R={r}: |Y|={} core={} H~0={g0} H1={g1} H2={g2} build={t_build:?} cx={t_cx:?} collapse={t_col:?} solve={:?}",
            y.num_simplices(), core, t.elapsed()
        );
    }
}
