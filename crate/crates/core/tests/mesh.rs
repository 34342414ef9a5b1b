use std::collections::HashSet;

use fracell::mesh::{Diagonal, Mesh};
use proptest::prelude::*;

fn check_census(mesh: &Mesh<f64>) {
    let census = mesh.edge_census();
    assert!(census.values().all(|&m| m == 1 || m == 2));
    let once: HashSet<(usize, usize)> = census.iter().filter(|(_, &m)| m == 1).map(|(&e, _)| e).collect();
    let facets: HashSet<(usize, usize)> = mesh
        .boundary_facets()
        .iter()
        .map(|f| {
            let (a, b) = mesh.facet_points(f.cell, f.local_edge);
            let index = |p: [f64; 2]| mesh.vertices().iter().position(|v| *v == p).unwrap();
            let (i, j) = (index(a), index(b));
            (i.min(j), i.max(j))
        })
        .collect();
    assert_eq!(once, facets);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn random_refinement_keeps_invariants(
        n in 1usize..5,
        left in any::<bool>(),
        rounds in proptest::collection::vec(proptest::collection::vec(any::<prop::sample::Index>(), 1..6), 1..5),
    ) {
        let diagonal = if left { Diagonal::Left } else { Diagonal::Right };
        let mut mesh = Mesh::<f64>::unit_square_with(n, diagonal);
        for marks in rounds {
            let marked: Vec<usize> = marks.iter().map(|i| i.index(mesh.cell_count())).collect();
            let next = mesh.refine(&marked).unwrap();
            prop_assert!(next.vertex_count() >= mesh.vertex_count());
            prop_assert!(next.cell_count() > mesh.cell_count());
            prop_assert!((next.total_area() - 1.0).abs() <= 1e-12);
            next.check_invariants().unwrap();
            check_census(&next);
            mesh = next;
        }
    }

    #[test]
    fn repeated_bisection_of_one_cell_stays_conforming(cell in 0usize..32, bisections in 1usize..4) {
        let mesh = Mesh::<f64>::unit_square(4);
        let fine = mesh.refine_repeated(&[cell], bisections).unwrap();
        fine.check_invariants().unwrap();
        check_census(&fine);
        prop_assert!(fine.cell_count() >= mesh.cell_count() + (1 << bisections) - 1);
    }
}

#[test]
fn text_format_round_trips_refined_mesh() {
    let mesh = Mesh::<f64>::unit_square(3).refine(&[0, 5, 7]).unwrap();
    let mut buf = Vec::new();
    mesh.write_text(&mut buf).unwrap();
    let back = Mesh::<f64>::read_text(buf.as_slice()).unwrap();
    assert_eq!(back.vertices(), mesh.vertices());
    assert_eq!(back.cells(), mesh.cells());
}

#[test]
fn malformed_text_reports_the_offending_line() {
    let err = Mesh::<f64>::read_text("vertices 3\n0 0\n1 0\n0 1\ncells 1\n0 1 7\n".as_bytes()).unwrap_err();
    assert!(err.to_string().contains("line 6"), "{err}");
    let err = Mesh::<f64>::read_text("vertices 1\n0 0\n".as_bytes()).unwrap_err();
    assert!(err.to_string().contains("line 3"), "{err}");
}
