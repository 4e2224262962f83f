use num_complex::Complex64;
use proptest::prelude::*;

use pseudowell::bound::{
    build_wavefunction, eigencondition, eigencondition_with, find_real_bound_states, ModelIICondition, DEFAULT_TOL,
};
use pseudowell::oracle::{delta_matrix, local_wavenumber, region_matrix, Oracle, ScaledTransfer, TransferMatrix};
use pseudowell::potential::{critical_depth, critical_imaginary_strength, decompose};
use pseudowell::scattering::{amplitudes, pseudo_unitarity_defect, s_matrix, ScatteringData};
use pseudowell::{Family, PiecewiseSystem, PotentialSpec};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn family() -> impl Strategy<Value = Family> {
    prop_oneof![Just(Family::ModelI), Just(Family::ModelII)]
}

fn spec() -> impl Strategy<Value = PotentialSpec> {
    (family(), 0.0..30.0f64, 0.2..5.0f64, 0.0..6.0f64)
        .prop_map(|(f, v0, a, lam)| PotentialSpec::new(f, v0, a, lam).unwrap())
}

/// P-pseudo-Hermitian by construction: `V(-x) = V(x)*`.
fn symmetric_system() -> impl Strategy<Value = PiecewiseSystem> {
    (
        prop::collection::vec((0.05..1.0f64, -8.0..8.0f64, -3.0..3.0f64, -3.0..3.0f64, -3.0..3.0f64), 1..4),
        -4.0..4.0f64,
        -3.0..3.0f64,
    )
        .prop_map(|(layers, centre_u, centre_delta)| {
            // Right half: interface x_j with strength s_j, then potential w_j
            // up to the next interface (zero after the last one).
            let mut x = 0.0;
            let n = layers.len();
            let mut pos = Vec::new();
            let mut s = Vec::new();
            let mut w = Vec::new();
            for (j, (gap, u_re, u_im, s_re, s_im)) in layers.into_iter().enumerate() {
                x += gap;
                pos.push(x);
                s.push(c(s_re, s_im));
                w.push(if j + 1 == n { c(0.0, 0.0) } else { c(u_re, u_im) });
            }
            let mut xs: Vec<f64> = pos.iter().rev().map(|x| -x).collect();
            let mut ss: Vec<Complex64> = s.iter().rev().map(|z| z.conj()).collect();
            let mut us: Vec<Complex64> = w.iter().rev().map(|z| z.conj()).collect();
            xs.push(0.0);
            ss.push(c(centre_delta, 0.0));
            us.push(c(centre_u, 0.0));
            us.push(c(centre_u, 0.0));
            xs.extend(pos);
            ss.extend(s);
            us.extend(w);
            PiecewiseSystem::new(xs, us, ss).unwrap()
        })
}

fn scale(s: &ScatteringData) -> f64 {
    [s.t_l, s.t_r, s.r_l, s.r_r].iter().map(|z| z.norm_sqr()).fold(1.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 128, .. ProptestConfig::default() })]

    #[test]
    fn closed_forms_are_pseudo_unitary(spec in spec(), ka in 0.05..20.0f64) {
        let data = amplitudes(&spec, ka / spec.a()).unwrap();
        let defect = pseudo_unitarity_defect(&s_matrix(&data));
        prop_assert!(defect < 1e-10 * scale(&data), "defect {defect:e}");
        prop_assert!((data.t_l - data.t_r).norm() == 0.0);
    }

    #[test]
    fn oracle_is_pseudo_unitary_for_symmetric_systems(system in symmetric_system(), k in 0.05..10.0f64) {
        prop_assert!(system.is_p_pseudo_hermitian(1e-15));
        let data = Oracle::default().amplitudes(&system, k).unwrap();
        let defect = pseudo_unitarity_defect(&s_matrix(&data));
        prop_assert!(defect < 1e-9 * scale(&data), "defect {defect:e}");
        prop_assert!((data.t_l - data.t_r).norm() < 1e-9 * data.t_l.norm().max(1.0));
    }

    #[test]
    fn factors_are_unimodular(
        k_re in 0.05..5.0f64, k_im in -2.0..2.0f64,
        u_re in -10.0..10.0f64, u_im in -5.0..5.0f64,
        x0 in -2.0..2.0f64, width in 0.0..2.0f64,
        s_re in -5.0..5.0f64, s_im in -5.0..5.0f64,
    ) {
        let k = c(k_re, k_im);
        let region = region_matrix(k, local_wavenumber(k, c(u_re, u_im)), x0, x0 + width);
        let delta = delta_matrix(c(s_re, s_im), k, x0).unwrap();
        for m in [region, delta] {
            let size = m.entries().iter().flatten().map(|z| z.norm()).fold(1.0, f64::max);
            prop_assert!((m.det() - c(1.0, 0.0)).norm() < 1e-12 * size * size);
        }
    }

    #[test]
    fn composed_transfer_is_unimodular(system in symmetric_system(), k in 0.05..10.0f64) {
        let total = Oracle::default().transfer(&system, c(k, 0.0)).unwrap();
        let m = total.mantissa();
        let size = m.entries().iter().flatten().map(|z| z.norm()).fold(0.0, f64::max);
        let det = total.det();
        prop_assert!((det - c(1.0, 0.0)).norm() < 1e-10 * (size * total.log_scale().exp()).powi(2).max(1.0));
    }

    #[test]
    fn grouping_does_not_matter(system in symmetric_system(), k in 0.05..10.0f64, cut in 0usize..8) {
        let factors = Oracle::default().factors(&system, c(k, 0.0)).unwrap();
        let cut = cut.min(factors.len());
        let fold = |fs: &[ScaledTransfer]| fs.iter().fold(ScaledTransfer::identity(), |acc, f| *f * acc);
        let left = fold(&factors[..cut]);
        let right = fold(&factors[cut..]);
        let grouped = (right * left).to_matrix();
        let straight = fold(&factors).to_matrix();
        // Rounding scales with the factor norms, not with the (possibly cancelled) product.
        let size: f64 = factors
            .iter()
            .map(|f| f.to_matrix().entries().iter().flatten().map(|z| z.norm()).fold(1.0, f64::max))
            .product();
        for (a, b) in grouped.entries().iter().flatten().zip(straight.entries().iter().flatten()) {
            prop_assert!((a - b).norm() < 1e-13 * size, "{:e} vs {size:e}", (a - b).norm());
        }
    }

    #[test]
    fn splitting_a_region_changes_nothing(spec in spec(), t in 0.01..0.99f64, ka in 0.05..10.0f64) {
        let system = decompose(&spec);
        let xs = system.interfaces().to_vec();
        let split = xs[0] + t * (xs[1] - xs[0]);
        let mut new_xs = vec![xs[0], split];
        new_xs.extend_from_slice(&xs[1..]);
        let mut us = system.region_potentials().to_vec();
        us.insert(1, us[1]);
        let mut ss = system.delta_strengths().to_vec();
        ss.insert(1, c(0.0, 0.0));
        let refined = PiecewiseSystem::new(new_xs, us, ss).unwrap();
        let k = ka / spec.a();
        let a = Oracle::default().amplitudes(&system, k).unwrap();
        let b = Oracle::default().amplitudes(&refined, k).unwrap();
        // Conditioning grows with the delta strengths measured in units of k.
        let strength: f64 = system.delta_strengths().iter().map(|s| s.norm()).sum();
        let size = scale(&a).sqrt() * (1.0 + strength / k);
        for (x, y) in [(a.t_l, b.t_l), (a.t_r, b.t_r), (a.r_l, b.r_l), (a.r_r, b.r_r)] {
            prop_assert!((x - y).norm() < 1e-13 * size, "{spec:?} ka={ka} t={t}: {:e}", (x - y).norm());
        }
    }

    #[test]
    fn decompose_round_trips(spec in spec()) {
        let system = decompose(&spec);
        prop_assert!(system.is_p_pseudo_hermitian(0.0));
        prop_assert_eq!(system.to_spec(), Some(spec));
    }

    #[test]
    fn critical_maps_invert(family in family(), v0 in 0.0..3.9f64, a in 0.2..1.0f64) {
        let spec = PotentialSpec::new(family, v0, a, 0.0).unwrap();
        let lam = critical_imaginary_strength(&spec).unwrap();
        let back = critical_depth(family, lam, a).unwrap();
        prop_assert!((back - v0).abs() <= 1e-12 * v0.max(1e-300));
    }

    #[test]
    fn negating_lambda_mirrors_the_amplitudes(spec in spec(), ka in 0.05..10.0f64) {
        let k = ka / spec.a();
        let system = decompose(&spec);
        let negated: Vec<Complex64> = system
            .delta_strengths()
            .iter()
            .map(|s| c(s.re, -s.im))
            .collect();
        let mirror = PiecewiseSystem::new(
            system.interfaces().to_vec(),
            system.region_potentials().to_vec(),
            negated,
        ).unwrap();
        let reference = Oracle::default().amplitudes(&mirror, k).unwrap();
        let expected = amplitudes(&spec, k).unwrap().mirrored();
        let size = scale(&reference).sqrt();
        for (x, y) in [
            (reference.t_l, expected.t_l),
            (reference.r_l, expected.r_l),
            (reference.r_r, expected.r_r),
        ] {
            prop_assert!((x - y).norm() < 1e-9 * size);
        }
    }

    #[test]
    fn conditions_have_real_coefficients(spec in spec(), re in 0.0..3.0f64, im in -3.0..3.0f64) {
        let beta = c(re, im);
        for v in [ModelIICondition::Printed, ModelIICondition::Corrected] {
            let f = eigencondition_with(&spec, beta, v);
            let g = eigencondition_with(&spec, beta.conj(), v);
            prop_assert!((f.conj() - g).norm() <= 1e-12 * f.norm().max(1e-300) + 1e-300);
        }
    }

    #[test]
    fn every_real_root_builds_a_wavefunction(spec in spec()) {
        for state in find_real_bound_states(&spec, DEFAULT_TOL) {
            prop_assert!(state.residual < DEFAULT_TOL);
            prop_assert!(eigencondition(&spec, state.beta).norm() < DEFAULT_TOL);
            let psi = build_wavefunction(&spec, &state).unwrap();
            let strengths = decompose(&spec).delta_strengths().to_vec();
            for (x, s) in psi.interfaces().iter().zip(strengths) {
                let value = psi.value(*x);
                let below = psi.regions().iter().find(|r| r.hi == *x).unwrap().value_at(*x);
                let above = psi.regions().iter().find(|r| r.lo == *x).unwrap().value_at(*x);
                prop_assert!((below - above).norm() <= 1e-10 * value.norm().max(1e-300));
                let (d_minus, d_plus) = psi.slopes(*x);
                let size = d_minus.norm().max(d_plus.norm()).max((s * value).norm()).max(1e-300);
                prop_assert!((d_plus - d_minus - s * value).norm() <= 1e-10 * size);
            }
        }
    }
}

#[test]
fn transfer_matrix_product_is_plain_matrix_product() {
    let a = TransferMatrix::new([[c(1.0, 2.0), c(0.5, 0.0)], [c(0.0, -1.0), c(2.0, 0.0)]]);
    let b = TransferMatrix::new([[c(0.0, 1.0), c(1.0, 0.0)], [c(3.0, 0.0), c(-1.0, 1.0)]]);
    let p = a * b;
    assert_eq!(p.get(0, 0), c(1.0, 2.0) * c(0.0, 1.0) + c(0.5, 0.0) * c(3.0, 0.0));
    assert!((p.det() - a.det() * b.det()).norm() < 1e-13);
}
