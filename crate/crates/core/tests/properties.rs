//! Invariants of the energies, sets and estimators under random inputs.

use capflow_core::capacity::{gamma_plus_lp_on_grid, LPConfig};
use capflow_core::measures::{sym_energy, triple_perm_energy, wolff_energy};
use capflow_core::sets::{constraint_grid, Similarity};
use capflow_core::symmetrization::perm_component;
use capflow_core::{DiscreteMeasure, KernelParams, Point, SetSpec, Triple, WolffParams};
use proptest::prelude::*;
use std::collections::BTreeSet;

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-300)
}

/// Distinct planar atoms on a 1/64 lattice with masses in (0, 1].
fn measure(min: usize, max: usize) -> impl Strategy<Value = DiscreteMeasure> {
    prop::collection::btree_set((-64i32..64, -64i32..64), min..max).prop_flat_map(|cells: BTreeSet<_>| {
        let len = cells.len();
        (Just(cells), prop::collection::vec(0.01f64..1.0, len))
    }).prop_map(|(cells, masses)| {
        let atoms = cells
            .into_iter()
            .map(|(i, j)| Point(vec![i as f64 / 64.0, j as f64 / 64.0]))
            .collect();
        DiscreteMeasure::new(2, atoms, masses).unwrap()
    })
}

fn rigid(mu: &DiscreteMeasure, theta: f64, shift: [f64; 2]) -> DiscreteMeasure {
    let (s, c) = theta.sin_cos();
    mu.map_atoms(|p| Point(vec![c * p.0[0] - s * p.0[1] + shift[0], s * p.0[0] + c * p.0[1] + shift[1]]))
        .unwrap()
}

fn permuted(mu: &DiscreteMeasure, seed: u64) -> DiscreteMeasure {
    let mut order: Vec<usize> = (0..mu.len()).collect();
    order.sort_by_key(|&k| (k as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ seed);
    DiscreteMeasure::new(
        2,
        order.iter().map(|&k| mu.atoms()[k].clone()).collect(),
        order.iter().map(|&k| mu.masses()[k]).collect(),
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn energies_ignore_labels(mu in measure(3, 10), seed in any::<u64>(), n in 1u32..=3) {
        let nu = permuted(&mu, seed);
        let params = KernelParams::new(0.5, n, 2).unwrap();
        let wp = WolffParams::for_alpha(0.5).unwrap();
        prop_assert!(close(sym_energy(&mu, &params).unwrap(), sym_energy(&nu, &params).unwrap(), 1e-12));
        prop_assert!(close(wolff_energy(&mu, &wp).unwrap(), wolff_energy(&nu, &wp).unwrap(), 1e-12));
        prop_assert!(close(triple_perm_energy(&mu, n).unwrap(), triple_perm_energy(&nu, n).unwrap(), 1e-12));
    }

    #[test]
    fn wolff_energy_ignores_rigid_motions(
        mu in measure(3, 10),
        theta in 0.0f64..6.3,
        tx in -3.0f64..3.0,
        ty in -3.0f64..3.0,
    ) {
        let nu = rigid(&mu, theta, [tx, ty]);
        let wp = WolffParams::for_alpha(0.3).unwrap();
        prop_assert!(close(wolff_energy(&mu, &wp).unwrap(), wolff_energy(&nu, &wp).unwrap(), 1e-9));
    }

    // The kernel is built from coordinate components, so the permutation
    // energies are invariant under translations and the symmetries of the
    // coordinate frame (quarter turns, axis reflections), not under all rotations.
    #[test]
    fn sym_energies_ignore_frame_symmetries(
        mu in measure(3, 10),
        quarter in 0u32..4,
        flip in any::<bool>(),
        tx in -3.0f64..3.0,
        ty in -3.0f64..3.0,
        n in 1u32..=3,
    ) {
        let nu = mu
            .map_atoms(|p| {
                let (mut x, mut y) = (p.0[0], p.0[1]);
                if flip {
                    x = -x;
                }
                for _ in 0..quarter {
                    (x, y) = (-y, x);
                }
                Point(vec![x + tx, y + ty])
            })
            .unwrap();
        let params = KernelParams::new(0.7, n, 2).unwrap();
        prop_assert!(close(sym_energy(&mu, &params).unwrap(), sym_energy(&nu, &params).unwrap(), 1e-9));
        prop_assert!(close(triple_perm_energy(&mu, n).unwrap(), triple_perm_energy(&nu, n).unwrap(), 1e-8));
    }

    #[test]
    fn triple_energy_scales_inverse_square(mu in measure(3, 9), lambda in 0.1f64..10.0, n in 1u32..=3) {
        let big = mu.map_atoms(|p| p.scaled(lambda)).unwrap();
        let a = triple_perm_energy(&mu, n).unwrap();
        let b = triple_perm_energy(&big, n).unwrap();
        prop_assert!(close(b, a / (lambda * lambda), 1e-9), "{b} vs {}", a / (lambda * lambda));
    }

    #[test]
    fn triple_energy_nonnegative(mu in measure(3, 10), n in 1u32..=3) {
        prop_assert!(triple_perm_energy(&mu, n).unwrap() >= 0.0);
    }

    #[test]
    fn collinear_support_has_zero_triple_energy(
        ts in prop::collection::btree_set(-100i32..100, 3..12),
        dir in (1i32..8, -8i32..8),
        n in 1u32..=3,
    ) {
        let atoms: Vec<Point> = ts
            .iter()
            .map(|&t| Point(vec![t as f64 * dir.0 as f64 / 16.0, t as f64 * dir.1 as f64 / 16.0]))
            .collect();
        let len = atoms.len();
        let mu = DiscreteMeasure::new(2, atoms, vec![1.0 / len as f64; len]).unwrap();
        prop_assert_eq!(triple_perm_energy(&mu, n).unwrap(), 0.0);
    }

    #[test]
    fn zero_mass_atom_is_inert(mu in measure(3, 9), cell in (100i32..120, 100i32..120), n in 1u32..=2) {
        let mut atoms = mu.atoms().to_vec();
        let mut masses = mu.masses().to_vec();
        atoms.push(Point(vec![cell.0 as f64 / 64.0, cell.1 as f64 / 64.0]));
        masses.push(0.0);
        let nu = DiscreteMeasure::new(2, atoms, masses).unwrap();
        let params = KernelParams::new(0.5, n, 2).unwrap();
        let wp = WolffParams::for_alpha(0.5).unwrap();
        prop_assert!(close(sym_energy(&mu, &params).unwrap(), sym_energy(&nu, &params).unwrap(), 1e-12));
        prop_assert!(close(wolff_energy(&mu, &wp).unwrap(), wolff_energy(&nu, &wp).unwrap(), 1e-12));
        prop_assert!(close(triple_perm_energy(&mu, n).unwrap(), triple_perm_energy(&nu, n).unwrap(), 1e-12));
    }

    #[test]
    fn heavier_atom_does_not_lower_energies(mu in measure(3, 9), pick in any::<prop::sample::Index>(), extra in 0.0f64..2.0, n in 1u32..=2) {
        let k = pick.index(mu.len());
        let mut masses = mu.masses().to_vec();
        masses[k] += extra;
        let nu = mu.with_masses(masses).unwrap();
        let wp = WolffParams::for_alpha(0.5).unwrap();
        prop_assert!(wolff_energy(&nu, &wp).unwrap() >= wolff_energy(&mu, &wp).unwrap() * (1.0 - 1e-12));
        prop_assert!(triple_perm_energy(&nu, n).unwrap() >= triple_perm_energy(&mu, n).unwrap() * (1.0 - 1e-12) - 1e-15);
    }

    #[test]
    fn energy_ratio_across_n_is_positive(mu in measure(4, 12), alpha in prop::sample::select(vec![0.3, 0.5, 0.7])) {
        let e1 = sym_energy(&mu, &KernelParams::new(alpha, 1, 2).unwrap()).unwrap();
        for n in 2..=3 {
            let en = sym_energy(&mu, &KernelParams::new(alpha, n, 2).unwrap()).unwrap();
            prop_assert!(en.is_finite() && en > 0.0 && e1 > 0.0);
        }
    }

    #[test]
    fn alpha_one_components_nonnegative(c in prop::array::uniform9(-1.0f64..1.0), n in 1u32..=3, d in 2usize..=3) {
        let t = Triple::from_coords(&c[0..d], &c[3..3 + d], &c[6..6 + d]);
        prop_assume!(t.ensure_distinct().is_ok());
        let params = KernelParams::new(1.0, n, d).unwrap();
        for i in 0..d {
            let v = perm_component(&params, i, &t).unwrap();
            prop_assert!(v >= -1e-9, "p^{i} = {v}");
        }
    }

    #[test]
    fn generated_sets_commute_with_similarities(
        scale in 0.1f64..5.0,
        rotation in -3.0f64..3.0,
        tx in -2.0f64..2.0,
        ty in -2.0f64..2.0,
        which in 0usize..3,
    ) {
        let spec = match which {
            0 => SetSpec::cantor4(2, 0.25),
            1 => SetSpec::circle(12),
            _ => SetSpec::lipschitz_graph(15, 0.5),
        };
        let sim = Similarity { scale, rotation, translation: [tx, ty] };
        let base = spec.generate().unwrap();
        let moved = spec.clone().with_transform(sim.clone()).generate().unwrap();
        prop_assert_eq!(base.len(), moved.len());
        for (p, q) in base.points.iter().zip(&moved.points) {
            let image = sim.apply(&p.0);
            prop_assert!((image[0] - q.0[0]).abs() <= 1e-12 * scale.max(1.0) * 4.0);
            prop_assert!((image[1] - q.0[1]).abs() <= 1e-12 * scale.max(1.0) * 4.0);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn lp_is_monotone_under_inclusion(drop in 1usize..8, alpha in prop::sample::select(vec![0.3, 0.5, 0.7])) {
        let big = SetSpec::cantor4(2, 0.25).generate().unwrap();
        let params = KernelParams::new(alpha, 1, 2).unwrap();
        let h = big.min_spacing();
        let grid = constraint_grid(&big, h, 2.0 * h, 0.5 * h).unwrap();
        let mut small = big.clone();
        small.points.truncate(16 - drop);
        small.weights.truncate(16 - drop);
        let cfg = LPConfig::default();
        let a = gamma_plus_lp_on_grid(&small, &params, &grid, &cfg).unwrap();
        let b = gamma_plus_lp_on_grid(&big, &params, &grid, &cfg).unwrap();
        prop_assert!(a.status().is_success() && b.status().is_success());
        prop_assert!(a.value <= b.value * (1.0 + 1e-9), "{} > {}", a.value, b.value);
    }
}

