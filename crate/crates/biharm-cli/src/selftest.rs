//! Fast invariant suite: special-function references, kernel limits,
//! Kaczmarz algebra, noise variance, and the asymptotic-coefficient
//! detector. Prints one line per invariant with measured vs tolerated error.

use biharm::greens::{measurement_kernel_g, phi_2d, phi_3d};
use biharm::inverse::{kaczmarz_sweep, BlockSystem};
use biharm::randsrc::{sample_white_noise, Grid};
use biharm::specfun::{asymptotic_coefficients, bessel_j0, bessel_y0, macdonald_k0};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

struct Report {
    failures: usize,
}

impl Report {
    fn check(&mut self, name: &str, measured: f64, tolerance: f64) {
        let ok = measured.is_finite() && measured <= tolerance;
        if !ok {
            self.failures += 1;
        }
        println!(
            "{:<44} measured {measured:9.2e}  tolerance {tolerance:7.1e}  {}",
            name,
            if ok { "ok" } else { "FAIL" }
        );
    }
}

/// Returns true when every invariant holds.
pub fn run() -> bool {
    let mut r = Report { failures: 0 };

    let j0_refs = [
        (1.0, 0.7651976865579666),
        (8.0, 0.17165080713755391),
        (50.0, 0.055812327669251815),
        (300.0, -0.033298554876305668),
    ];
    let worst = j0_refs
        .iter()
        .map(|&(x, v)| (bessel_j0(x).unwrap() - v).abs())
        .fold(0.0f64, f64::max);
    r.check("specfun: J0 reference values (abs)", worst, 1e-12);

    let y0_refs = [
        (1.0, 0.08825696421567696),
        (8.0, 0.22352148938756622),
        (50.0, -0.098064995470077079),
        (300.0, -0.031831889730003398),
    ];
    let worst = y0_refs
        .iter()
        .map(|&(x, v)| (bessel_y0(x).unwrap() - v).abs())
        .fold(0.0f64, f64::max);
    r.check("specfun: Y0 reference values (abs)", worst, 1e-10);

    let k0_refs = [
        (0.5, 0.92441907122766586),
        (1.0, 0.42102443824070834),
        (2.0, 0.11389387274953344),
        (10.0, 1.7780062316167652e-5),
    ];
    let worst = k0_refs
        .iter()
        .map(|&(x, v)| ((macdonald_k0(x).unwrap() - v) / v).abs())
        .fold(0.0f64, f64::max);
    r.check("specfun: K0 reference values (rel)", worst, 1e-10);

    let defect = asymptotic_coefficients(8).ratio_defect();
    r.check("specfun: coefficient ratio identity", defect, 1e-14);
    // the detector itself must fire on a perturbed leading coefficient
    let mut bad = asymptotic_coefficients(8);
    bad.entries[0] *= Complex64::new(1.0 + 1e-6, 0.0);
    let fired = if bad.ratio_defect() > 1e-7 { 0.0 } else { 1.0 };
    r.check("specfun: ratio detector fires on 1e-6 bump", fired, 0.5);

    let target = Complex64::new(0.0, 0.125);
    let rel = (phi_2d(1e-6, 1.0).unwrap() - target).norm() / target.norm();
    r.check("greens: phi_2d(r->0, k=1) -> i/8 (rel)", rel, 1e-4);
    let g = measurement_kernel_g(1e-6, 3.0).unwrap();
    r.check("greens: G(r->0) -> -1 (abs)", (g + 1.0).abs(), 1e-3);
    let k = 2.0;
    let target = Complex64::new(1.0, 1.0) / (8.0 * std::f64::consts::PI * k);
    let rel = (phi_3d(1e-8, k).unwrap() - target).norm() / target.norm();
    r.check("greens: phi_3d(r->0) -> (1+i)/8pik (rel)", rel, 1e-4);

    let b = DVector::from_iterator(4, (0..4).map(|i| i as f64 - 1.5));
    let ident = BlockSystem {
        a: DMatrix::identity(4, 4),
        b: b.clone(),
        k: 1.0,
        domain: 0,
    };
    let q = kaczmarz_sweep(std::slice::from_ref(&ident), &DVector::zeros(4), 0.0).unwrap();
    r.check("inverse: identity block fixed point", (&q - &b).norm(), 1e-12);
    let gamma = 0.25;
    let q = kaczmarz_sweep(&[ident], &DVector::zeros(4), gamma).unwrap();
    r.check(
        "inverse: damped identity step b/(1+gamma)",
        (&q - &b / (1.0 + gamma)).norm(),
        1e-12,
    );

    let grid = Grid::square(-1.0, 1.0, 20).unwrap();
    let area = grid.cell_area();
    let mut sum = 0.0;
    let mut sumsq = 0.0;
    let mut n = 0usize;
    for path in 0..20 {
        for w in sample_white_noise(&grid, 42, path).increments {
            sum += w;
            sumsq += w * w;
            n += 1;
        }
    }
    let mean = sum / n as f64;
    let var = sumsq / n as f64 - mean * mean;
    r.check(
        "randsrc: increment variance = |I| (rel)",
        (var / area - 1.0).abs(),
        0.05,
    );
    r.check(
        "randsrc: increment mean (units of sqrt |I|)",
        mean.abs() / area.sqrt(),
        0.05,
    );

    println!(
        "selftest: {} invariants checked, {} failed",
        12, r.failures
    );
    r.failures == 0
}
