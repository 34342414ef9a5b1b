use std::sync::Arc;

use fracell::fem::{assemble_mass, assemble_stiffness, Coefficient, FeSpace, Order};
use fracell::mesh::Mesh;
use fracell::oracle::DiscreteSpectrum;
use fracell::pseudotime::Operators;
use fracell::quadrature::TriangleRule;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Dense matrix in vertex-keyed form so that matrices built on different
/// cell orderings compare entry by entry.
fn keyed(space: &FeSpace<f64>, m: &fracell::SparseSym64) -> Vec<((usize, usize), f64)> {
    let key = |i: usize| {
        let p = space.dof_points()[i];
        ((p[0] * 1e6).round() as usize) * 10_000_000 + (p[1] * 1e6).round() as usize
    };
    let dense = m.to_dense();
    let mut out: Vec<((usize, usize), f64)> = Vec::new();
    for i in 0..dense.nrows() {
        for j in 0..dense.ncols() {
            out.push(((key(i), key(j)), dense[(i, j)]));
        }
    }
    out.sort_by_key(|e| e.0);
    out
}

#[test]
fn matrices_do_not_depend_on_cell_order() {
    let base = Mesh::<f64>::unit_square(4).refine(&[1, 6, 20]).unwrap();
    let mut cells = base.cells().to_vec();
    cells.shuffle(&mut ChaCha8Rng::seed_from_u64(3));
    let shuffled = Mesh::new(base.vertices().to_vec(), cells).unwrap();
    let k = Coefficient::new(|p: [f64; 2]| 1.0 + p[0] * p[1]);
    for order in [Order::Linear, Order::Quadratic] {
        let a = FeSpace::new(Arc::new(base.clone()), order);
        let b = FeSpace::new(Arc::new(shuffled.clone()), order);
        for (ma, mb) in [
            (assemble_stiffness(&a, &k).unwrap(), assemble_stiffness(&b, &k).unwrap()),
            (assemble_mass(&a), assemble_mass(&b)),
        ] {
            for (x, y) in keyed(&a, &ma).iter().zip(keyed(&b, &mb)) {
                assert_eq!(x.0, y.0);
                assert!((x.1 - y.1).abs() <= 1e-12, "{order:?}");
            }
        }
    }
}

#[test]
fn smallest_eigenvalue_decreases_towards_continuous_value() {
    let lambda1 = 2.0 * std::f64::consts::PI.powi(2);
    let mut previous = f64::INFINITY;
    let mut mesh = Mesh::<f64>::unit_square(2);
    for _ in 0..4 {
        let space = FeSpace::new(Arc::new(mesh.clone()), Order::Linear);
        let ops = Operators::assemble(&space, &Coefficient::constant(1.0)).unwrap();
        let l = DiscreteSpectrum::new(&ops).unwrap().lambda_min();
        assert!(l >= lambda1 && l <= previous, "{l} after {previous}");
        previous = l;
        mesh = mesh.refine_uniformly(1);
    }
    assert!(previous / lambda1 - 1.0 < 0.05);
}

#[test]
fn quadrature_integrates_monomials_exactly() {
    // int over the reference triangle of x^a y^b is a! b! / (a + b + 2)!
    let fact = |n: u32| (1..=n).map(f64::from).product::<f64>();
    for rule in [TriangleRule::<f64>::degree4(), TriangleRule::data()] {
        for a in 0..=4u32 {
            for b in 0..=(4 - a) {
                let exact = fact(a) * fact(b) / fact(a + b + 2);
                let got: f64 = rule
                    .points
                    .iter()
                    .zip(&rule.weights)
                    .map(|(l, w)| w * 0.5 * l[1].powi(a as i32) * l[2].powi(b as i32))
                    .sum();
                assert!((got - exact).abs() < 1e-13, "x^{a} y^{b}: {got} vs {exact}");
            }
        }
    }
}
