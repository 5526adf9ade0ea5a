use std::f64::consts::PI;

use clusterkit::expansion::{log_partition_series, log_partition_series_mc, partition_direct};
use clusterkit::models::classical_gas::{
    mayer_zeta, pressure_order1_closed_form, pressure_series, rho2_truncated, ClassicalGasParams, MayerKernel, Potential,
};
use clusterkit::models::lattice_polymer::{enumerate_lattice_polymers, origin_polymer_counts, LatticePolymerParams};
use clusterkit::models::quantum_gas::{check_condconvquant, QuantumGasParams};
use clusterkit::polymer_space::{DiscreteKernel, DiscretePolymerSpace, UniformBox};

fn rods(z: f64, cutoff: f64) -> ClassicalGasParams {
    let mut p = ClassicalGasParams::new(1, 1.0, z, Potential::HardSphere { radius: 1.0 }).unwrap();
    p.cutoff = Some(cutoff);
    p
}

/// `∫∫ φ(0, x_1, x_2)` for hard rods by a midpoint rule on `[-2, 2]^2`.
fn order2_quadrature(cells: usize) -> f64 {
    let h = 4.0 / cells as f64;
    let zeta = |a: f64, b: f64| if (a - b).abs() < 1.0 { -1.0 } else { 0.0 };
    let mut total = 0.0;
    for i in 0..cells {
        let x = -2.0 + (i as f64 + 0.5) * h;
        for j in 0..cells {
            let y = -2.0 + (j as f64 + 0.5) * h;
            let (a, b, c) = (zeta(0.0, x), zeta(0.0, y), zeta(x, y));
            total += (a * b + a * c + b * c + a * b * c) / 6.0;
        }
    }
    total * h * h
}

#[test]
fn hard_rod_order_two_matches_quadrature() {
    let quad = order2_quadrature(2000);
    // the exact value 3/2 follows from βp = W(z) for hard rods
    assert!((quad - 1.5).abs() < 5e-3, "{quad}");
    let z = 0.1;
    let r = pressure_series(&rods(z, 1.25), 2, 400_000, 21).unwrap();
    let term = r.orders[2].term.re() / z.powi(3);
    let se = r.orders[2].stderr.unwrap() / z.powi(3);
    assert!((term - quad).abs() <= 3.0 * se + 5e-3, "{term} ± {se} vs {quad}");
}

#[test]
fn order_one_pressure_matches_closed_form_in_every_dimension() {
    for d in 1..=3u32 {
        let mut p = ClassicalGasParams::new(d, 1.0, 0.04, Potential::HardSphere { radius: 0.8 }).unwrap();
        p.cutoff = Some(1.2);
        let want = pressure_order1_closed_form(&p).unwrap();
        let r = pressure_series(&p, 1, 50_000, d as u64).unwrap();
        let o = &r.orders[1];
        assert!((o.term.re() - want).abs() <= 3.0 * o.stderr.unwrap(), "d = {d}");
    }
}

#[test]
fn square_well_pressure_is_analytic_at_order_one() {
    let mut p = ClassicalGasParams::new(2, 0.5, 0.05, Potential::SquareWell { radius: 1.0, height: 3.0 }).unwrap();
    p.cutoff = Some(1.5);
    let want = -0.5 * 0.05f64.powi(2) * PI * (1.0 - (-1.5f64).exp());
    assert!((pressure_order1_closed_form(&p).unwrap() - want).abs() < 1e-15);
    let r = pressure_series(&p, 1, 50_000, 3).unwrap();
    assert!((r.orders[1].term.re() - want).abs() <= 3.0 * r.orders[1].stderr.unwrap());
}

#[test]
fn rho2_third_order_for_hard_rods() {
    // with x_1 = 0, x_2 = 0.5 the order-3 term is 6 z^3 ∫ dx_3 φ(0, 0.5, x_3)
    let z = 0.05;
    let r = rho2_truncated(&rods(z, 1.0), &[0.0], &[0.5], 3, 200_000, 5).unwrap();
    // φ(0, 0.5, x) = (1/6)(ab + ac + bc + abc) with a = ζ(0, 0.5) = -1
    let mut exact = 0.0;
    let cells = 200_000;
    let h = 6.0 / cells as f64;
    for k in 0..cells {
        let x = -3.0 + (k as f64 + 0.5) * h;
        let b = if x.abs() < 1.0 { -1.0 } else { 0.0 };
        let c = if (x - 0.5).abs() < 1.0 { -1.0 } else { 0.0 };
        exact += (-b - c + b * c - b * c) / 6.0 * h;
    }
    let want = z * z * -1.0 + 6.0 * z.powi(3) * exact;
    assert!((r.value - want).abs() <= 3.0 * r.stderr + 1e-9, "{} ± {} vs {want}", r.value, r.stderr);
}

/// `log Z` for rods in `[0, L]` discretized to `cells` points of mass `z h`.
fn discretized_log_z(z: f64, length: f64, cells: usize, order: usize) -> f64 {
    let p = rods(z, 1.0);
    let h = length / cells as f64;
    let centers: Vec<f64> = (0..cells).map(|k| (k as f64 + 0.5) * h).collect();
    let space = DiscretePolymerSpace::from_real_weights("grid", &vec![z * h; cells]).unwrap();
    let kernel = DiscreteKernel::from_real_fn(cells, |i, j| mayer_zeta(&p, &[centers[i]], &[centers[j]]));
    log_partition_series(&space, &kernel, order, None).unwrap().sum().re
}

#[test]
fn discretized_gas_approaches_continuum_series() {
    let (z, length, order) = (0.1, 2.5, 3);
    let kernel = MayerKernel::new(&rods(z, 1.0)).unwrap();
    let space = UniformBox::new(vec![0.0], vec![length], z).unwrap();
    let mc = log_partition_series_mc(&space, &kernel, order, 400_000, 8).unwrap();
    let (target, se) = (mc.sum().re, mc.stderr());
    let errors: Vec<f64> = [5, 10, 20, 40].iter().map(|&m| (discretized_log_z(z, length, m, order) - target).abs()).collect();
    assert!(errors.windows(2).all(|w| w[1] < w[0] + 3.0 * se), "{errors:?} (stderr {se})");
    assert!(errors[3] < errors[0] / 2.0, "{errors:?}");
    assert!(errors[3] <= 4.0 * se + 5e-3);
}

#[test]
fn lattice_series_matches_direct_sum_on_small_box() {
    let s = enumerate_lattice_polymers(&LatticePolymerParams::new(2, vec![3, 3], 2)).unwrap();
    assert_eq!(s.space.len(), 21);
    let z = partition_direct(&s.space, &s.kernel, 9).unwrap().re;
    let series = log_partition_series(&s.space, &s.kernel, 6, None).unwrap().sum().re.exp();
    assert!((series - z).abs() <= 1e-8 * z, "{series} vs {z}");
}

#[test]
fn rooted_counts_respect_walk_bound_in_several_dimensions() {
    for (d, n) in [(1u32, 8usize), (2, 6), (3, 4)] {
        let counts = origin_polymer_counts(d, n).unwrap();
        for (k, c) in counts.iter().enumerate() {
            assert!(*c <= (2 * d as u64).pow(2 * (k as u32 + 1)));
        }
    }
}

#[test]
fn rooted_counts_match_box_enumeration() {
    // polymers through the centre of a box large enough to hold them all
    let n = 4;
    let s = enumerate_lattice_polymers(&LatticePolymerParams::new(2, vec![7, 7], n)).unwrap();
    let centre = vec![3, 3];
    let mut by_size = vec![0u64; n];
    for p in &s.polymers {
        if p.contains(&centre) {
            by_size[p.len() - 1] += 1;
        }
    }
    assert_eq!(by_size, origin_polymer_counts(2, n).unwrap());
}

#[test]
fn quantum_criterion_monotone_in_fugacity() {
    for d in 3..=6u32 {
        let mut seen_fail = false;
        for k in 1..=50 {
            let z = k as f64 / 50.0;
            let r = check_condconvquant(&QuantumGasParams { d, beta: 0.7, z, potential_integral: 5.0, statistics: None }).unwrap();
            assert!(!(seen_fail && r.passed), "d = {d}: passes again at z = {z}");
            seen_fail |= !r.passed;
            assert_eq!(r.passed, z <= r.max_z);
        }
    }
}
