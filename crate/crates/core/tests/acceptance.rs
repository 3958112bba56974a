//! Acceptance suite: every numbered criterion runs at its stated tolerance
//! and prints one PASS line. Run with `--nocapture` to see the lines:
//!
//! ```text
//! cargo test -p cocycle-core --test acceptance -- --nocapture
//! ```

use cocycle_core::cocycle::LocallyConstantGenerator;
use cocycle_core::*;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn full_shift_2() -> Sft {
    presets::full_shift(2, 1.0).unwrap()
}

fn golden_mean() -> Sft {
    presets::golden_mean_shift(1.0).unwrap()
}

/// A random point in the local stable set of `y` (same coordinates from 0 on).
fn random_stable_partner<R: Rng>(sft: &Sft, y: &SymbolicPoint, rng: &mut R) -> SymbolicPoint {
    loop {
        let w = sft.random_point(4, rng).unwrap();
        for shift in 0..8 {
            let ws = w.shifted(shift);
            if ws.symbol_at(0) == y.symbol_at(0) {
                return bracket(&ws, y).unwrap();
            }
        }
    }
}

#[test]
fn criterion_01_action_isometry() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = 0.0_f64;
    for i in 0..1000 {
        let d = 2 + i % 3;
        let b = presets::random_invertible(d, &mut rng);
        let eta = presets::random_structure(d, &mut rng);
        let zeta = presets::random_structure(d, &mut rng);
        let before = distance(&eta, &zeta);
        let after = distance(&push(&b, &eta), &push(&b, &zeta));
        worst = worst.max((before - after).abs());
    }
    assert!(worst <= 1e-10, "worst isometry defect {worst:.3e}");
    println!("[PASS] criterion 1: action isometry, worst defect {worst:.3e} <= 1e-10 over 1000 draws, d in {{2,3,4}}");
}

#[test]
fn criterion_02_holonomy_contract() {
    let sft = golden_mean();
    let gen = presets::bunched_window1(&sft).unwrap();
    let cert = certify_uniform_bunching(&gen, &sft, 2).unwrap().expect("example is bunched");
    let mut rng = ChaCha8Rng::seed_from_u64(202);

    // truncated limits stabilize once n exceeds the window depth |w-| = 1
    let mut worst_stab = 0.0_f64;
    for _ in 0..50 {
        let y = sft.random_point(4, &mut rng).unwrap();
        let z = random_stable_partner(&sft, &y, &mut rng);
        for n in [1i64, 3, 9, 33] {
            let at = |m: i64| {
                gen.evaluate(&z, m).try_inverse().unwrap() * gen.evaluate(&y, m)
            };
            worst_stab = worst_stab.max((at(n) - at(n + 16)).amax());
        }
    }
    assert!(worst_stab <= 1e-14, "stabilization defect {worst_stab:.3e}");

    // fitted L over 10^3 stable pairs, then zero violations
    let mut pairs = Vec::new();
    for _ in 0..1000 {
        let y = sft.random_point(4, &mut rng).unwrap();
        let z = random_stable_partner(&sft, &y, &mut rng);
        let h = stable_holonomy(&gen, &sft, &y, &z, &cert).unwrap();
        let dev = (h - DMatrix::<f64>::identity(2, 2)).norm();
        let rho = sft.rho_distance(&y, &z);
        pairs.push((dev, rho));
    }
    let fitted_l = pairs
        .iter()
        .filter(|(_, rho)| *rho > 0.0)
        .map(|(dev, rho)| dev / rho)
        .fold(0.0_f64, f64::max);
    let violations = pairs
        .iter()
        .filter(|(dev, rho)| *dev > fitted_l * rho * (1.0 + 1e-12) + 1e-15)
        .count();
    assert_eq!(violations, 0);
    assert!(fitted_l.is_finite() && fitted_l > 0.0);

    // composition residual on triples of a common stable set
    let mut worst_comp = 0.0_f64;
    for _ in 0..200 {
        let x = sft.random_point(4, &mut rng).unwrap();
        let y = random_stable_partner(&sft, &x, &mut rng);
        let z = random_stable_partner(&sft, &x, &mut rng);
        let hyz = stable_holonomy(&gen, &sft, &y, &z, &cert).unwrap();
        let hyx = stable_holonomy(&gen, &sft, &y, &x, &cert).unwrap();
        let hxz = stable_holonomy(&gen, &sft, &x, &z, &cert).unwrap();
        worst_comp = worst_comp.max((hyz - hxz * hyx).amax());
    }
    assert!(worst_comp <= 1e-10, "composition residual {worst_comp:.3e}");
    println!("[PASS] criterion 2: holonomy contract, stabilization {worst_stab:.3e} <= 1e-14, fitted L = {fitted_l:.6}, 0 violations in 1000 pairs, composition {worst_comp:.3e} <= 1e-10");
}

/// Brute-force membership over s <= 10 * block period, by plain norm products.
fn brute_force_membership(
    gen: &LocallyConstantGenerator,
    p: &SymbolicPoint,
    k: usize,
    n_block: usize,
    theta: f64,
) -> bool {
    let period = {
        fn gcd(a: usize, b: usize) -> usize {
            if b == 0 { a } else { gcd(b, a % b) }
        }
        k / gcd(k, n_block)
    };
    let n = n_block as i64;
    for direction in [1i64, -1] {
        let mut product = 1.0_f64;
        for j in 0..(10 * period) as i64 {
            let m = gen.evaluate(&p.shifted(direction * j * n), direction * n);
            let sv = m.singular_values();
            product *= sv.max() / sv.min();
            if product > ((j + 1) as f64 * n as f64 * theta).exp() {
                return false;
            }
        }
    }
    true
}

#[test]
fn criterion_03_exact_membership_vs_brute_force() {
    let golden = golden_mean();
    let full = full_shift_2();
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let cocycles: Vec<(Sft, LocallyConstantGenerator)> = vec![
        (golden.clone(), presets::bunched_window1(&golden).unwrap()),
        (full.clone(), presets::rotation_by_symbol(&full, &[0.4, 1.3]).unwrap()),
        (full.clone(), presets::random_near_conformal(&full, 2, 0, 1, 0.3, &mut rng).unwrap()),
    ];
    let mut checked = 0usize;
    for (sft, gen) in &cocycles {
        for _ in 0..100 {
            let p = sft.random_periodic_point(8, &mut rng);
            let k = p.period().unwrap();
            let n_block = rng.gen_range(1..=3usize);
            let base = bunching_membership_periodic(gen, &p, k, n_block, 1.0).unwrap().witness;
            // stay away from the decision boundary so both routes agree exactly
            let offset = rng.gen_range(0.01..0.4) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            let theta = (base + offset).max(1e-3);
            if (theta - base).abs() < 5e-3 {
                continue;
            }
            let fast = bunching_membership_periodic(gen, &p, k, n_block, theta).unwrap().member;
            let brute = brute_force_membership(gen, &p, k, n_block, theta);
            assert_eq!(fast, brute, "disagreement at N={n_block}, theta={theta}");
            checked += 1;
        }
    }
    assert!(checked >= 250);
    println!("[PASS] criterion 3: exact D(N,theta) decision agrees with brute force on {checked} random periodic points across 3 cocycles (100%)");
}

/// Independent maximum-mean-cycle oracle: DFS over simple cycles of bounded
/// length in the block graph.
fn simple_cycle_theta(gen: &LocallyConstantGenerator, sft: &Sft, n_block: usize, max_len: usize) -> f64 {
    let (weights, edges) = block_graph(gen, sft, n_block).unwrap();
    let nv = weights.len();
    let mut adj = vec![Vec::new(); nv];
    for &(u, v) in &edges {
        adj[u].push(v);
    }
    let mut best = f64::NEG_INFINITY;
    let mut stack: Vec<usize> = Vec::new();
    let mut on: Vec<bool> = vec![false; nv];
    #[allow(clippy::too_many_arguments)]
    fn dfs(
        v: usize,
        start: usize,
        sum: f64,
        adj: &[Vec<usize>],
        w: &[f64],
        stack: &mut Vec<usize>,
        on: &mut [bool],
        max_len: usize,
        best: &mut f64,
    ) {
        for &nxt in &adj[v] {
            if nxt == start {
                *best = (*best).max(sum / stack.len() as f64);
            } else if !on[nxt] && stack.len() < max_len {
                on[nxt] = true;
                stack.push(nxt);
                dfs(nxt, start, sum + w[nxt], adj, w, stack, on, max_len, best);
                stack.pop();
                on[nxt] = false;
            }
        }
    }
    for s in 0..nv {
        on[s] = true;
        stack.push(s);
        dfs(s, s, weights[s], &adj, &weights, &mut stack, &mut on, max_len, &mut best);
        stack.pop();
        on[s] = false;
    }
    best / n_block as f64
}

#[test]
fn criterion_04_karp_vs_cycle_enumeration() {
    let mut worst = 0.0_f64;
    for sft in [golden_mean(), full_shift_2()] {
        let gen = presets::bunched_window1(&sft).unwrap();
        for n_block in [1usize, 2] {
            let karp = uniform_bunching_theta(&gen, &sft, n_block).unwrap();
            let oracle = simple_cycle_theta(&gen, &sft, n_block, 6);
            worst = worst.max((karp - oracle).abs());
        }
    }
    assert!(worst <= 1e-12, "Karp vs enumeration gap {worst:.3e}");
    println!("[PASS] criterion 4: Karp theta* matches simple-cycle enumeration within {worst:.3e} <= 1e-12 on window-1 examples over golden-mean and full-2 shifts");
}

#[test]
fn criterion_05_gap_proposition() {
    let golden = golden_mean();
    let full = full_shift_2();
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let examples: Vec<(Sft, LocallyConstantGenerator)> = vec![
        (golden.clone(), presets::bunched_window1(&golden).unwrap()),
        (full.clone(), presets::rotation_by_symbol(&full, &[0.7, 1.1]).unwrap()),
        (full.clone(), presets::random_near_conformal(&full, 2, 0, 1, 0.2, &mut rng).unwrap()),
    ];
    for (i, (sft, gen)) in examples.iter().enumerate() {
        let n_block = 8;
        // eps with a strict margin over the exact requirement R^4 <= e^{N eps}
        let eps = 4.0 * gen.r_bound().ln() / n_block as f64 + 0.01;
        let theta = uniform_bunching_theta(gen, sft, n_block).unwrap() + 0.05;
        let report = gap_check(gen, sft, n_block, theta, eps, 1000, 505 + i as u64).unwrap();
        assert!(report.condition_holds, "example {i}: R^4 > e^(N eps)");
        assert!(report.tested_in_d > 0);
        assert!(
            report.counterexamples.is_empty(),
            "example {i}: {} counterexamples",
            report.counterexamples.len()
        );
    }
    println!("[PASS] criterion 5: gap proposition, zero counterexamples over 1000 random periodic points per example (3 examples)");
}

#[test]
fn criterion_06_invariance_implies_boundedness() {
    let full = full_shift_2();
    let golden = golden_mean();
    let s = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
    let s_inv = s.clone().try_inverse().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let preserved_field = presets::random_conformal_field(&golden, 2, 0, 0, 0.4, &mut rng).unwrap();

    let cases: Vec<(Sft, LocallyConstantGenerator, ConformalField)> = vec![
        (
            full.clone(),
            presets::rotation_by_symbol(&full, &[0.5, 1.2]).unwrap(),
            ConformalField::constant(&full, ConformalStructure::identity(2)).unwrap(),
        ),
        (
            full.clone(),
            presets::conjugated_rotation(&full, &s, &[1.0, 0.6]).unwrap(),
            ConformalField::constant(
                &full,
                ConformalStructure::from_spd(&(s_inv.transpose() * &s_inv)).unwrap(),
            )
            .unwrap(),
        ),
        (
            golden.clone(),
            presets::generator_preserving(&golden, &preserved_field, &[0.9, 0.4]).unwrap(),
            preserved_field,
        ),
    ];
    for (i, (sft, gen, field)) in cases.iter().enumerate() {
        let residual = verify_invariant_field(gen, field, sft).unwrap();
        assert!(residual <= 1e-10, "case {i}: residual {residual:.3e}");
        // periodic exponents vanish
        for k in 1..=8usize {
            for p in sft.enumerate_periodic(k).unwrap() {
                let lambda = gen.lyapunov_periodic(&p, k).unwrap().lambda_plus;
                assert!(lambda.abs() <= 1e-8, "case {i}: |lambda_+| = {lambda:.3e}");
            }
        }
        // norms stay below the field-derived bound gamma on sampled orbits
        let gamma = field.comparison_bound();
        let log_gamma = gamma.ln() + 1e-9;
        for orbit in 0..100 {
            let mut orbit_rng = ChaCha8Rng::seed_from_u64(606 + orbit);
            let x = sft.random_point(4, &mut orbit_rng).unwrap();
            let mut acc = DMatrix::<f64>::identity(2, 2);
            for n in 1..=10_000i64 {
                acc = gen.matrix_at(&x, n - 1) * &acc;
                let log_norm = spectral_norm(&acc).ln();
                assert!(
                    log_norm <= log_gamma,
                    "case {i}: ||A^{n}|| = e^{log_norm:.6} above gamma = {gamma:.6}"
                );
            }
        }
    }
    println!("[PASS] criterion 6: invariant fields force |lambda_+| <= 1e-8 (periods <= 8) and ||A^n|| <= gamma for n <= 10^4 on 100 orbits, 3 examples");
}

#[test]
fn criterion_07_round_trip_rigidity() {
    let sft = golden_mean();
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    // conformal conjugates are reconstructed
    for q_window in [(0i64, 0i64), (0, 1)] {
        let q = presets::random_transfer_sl(&sft, 2, q_window.0, q_window.1, &mut rng).unwrap();
        let rot = presets::rotation_by_symbol(&sft, &[0.9, 0.4]).unwrap();
        let gen = presets::coboundary_generator(&sft, &q, &rot).unwrap();
        match construct_invariant_structure(&gen, &sft, 6).unwrap() {
            ConstructOutcome::Structure(st) => {
                assert!(st.residual <= 1e-8, "residual {:.3e}", st.residual)
            }
            ConstructOutcome::Obstruction(o) => panic!("unexpected obstruction {o:?}"),
        }
    }
    // coboundaries verify exactly and perturbations are detected
    let id = presets::identity_generator(&sft, 2).unwrap();
    let p = presets::random_transfer(&sft, 2, 0, 1, &mut rng).unwrap();
    let a = presets::coboundary_generator(&sft, &p, &id).unwrap();
    let residual = verify_coboundary(&a, &id, &p, &sft).unwrap();
    assert!(residual <= 1e-12, "coboundary residual {residual:.3e}");
    let mut table = p.table().clone();
    let key = table.keys().next().unwrap().clone();
    table.get_mut(&key).unwrap()[(0, 0)] += 1e-3;
    let p_bad = TransferField::new(&sft, 2, 0, 1, table).unwrap();
    let detected = verify_coboundary(&a, &id, &p_bad, &sft).unwrap();
    assert!(detected >= 1e-4, "perturbation only moved the residual to {detected:.3e}");
    println!("[PASS] criterion 7: conjugates reconstructed (residual <= 1e-8), coboundary residual {residual:.1e} <= 1e-12, 1e-3 perturbation detected at {detected:.1e} >= 1e-4");
}

#[test]
fn criterion_08_obstruction_correctness() {
    let sft = full_shift_2();
    let gen = presets::constant_diag(&sft, &[2.0, 0.5]).unwrap();
    match construct_invariant_structure(&gen, &sft, 6).unwrap() {
        ConstructOutcome::Obstruction(Obstruction::PositiveExponent { lambda_plus, period, .. }) => {
            assert!((lambda_plus - 2.0_f64.ln()).abs() <= 1e-10);
            assert_eq!(period, 1);
            println!("[PASS] criterion 8: diag(2,1/2) yields PositiveExponent with lambda_+ = {lambda_plus:.12} = log 2 within 1e-10");
        }
        other => panic!("expected PositiveExponent, got {other:?}"),
    }
}

#[test]
fn criterion_09_shadowing_experiment() {
    let sft = full_shift_2();
    let gen = presets::constant_diag(&sft, &[2.0, 0.5]).unwrap();
    let x = SymbolicPoint::periodic(&sft, &[1]).unwrap();
    let y = SymbolicPoint::periodic(&sft, &[2]).unwrap();
    let lambda = 2.0_f64.ln();
    let xi = 2.0 * lambda;
    let zeta = gen.zeta();
    let theta = 0.5;
    let tuned = tune_parameters(lambda, xi, zeta, sft.tau(), theta).unwrap().expect("feasible");
    // revalidate the tuned parameters against the inequalities and chi > 0
    assert!(shadowing_inequalities(tuned.b, tuned.c, theta, zeta, xi).iter().all(|&ok| ok));
    assert!(tuned.chi > 0.0);
    assert!(tuned.eps <= theta / 10.0);

    let family = ShadowingFamily {
        x: x.clone(),
        y: y.clone(),
        k: 1,
        b: tuned.b,
        c: tuned.c,
        eps: tuned.eps,
        m_values: vec![4, 8, 16, 32],
    };
    // period and distance bounds are exact for every m
    for &m in &family.m_values {
        let spec =
            ShadowingSpec::new(&sft, x.clone(), y.clone(), 1, m, tuned.b, tuned.c).unwrap();
        let (p, u_m) = build_shadowing_point(&sft, &spec).unwrap();
        assert_eq!(u_m, (2 * tuned.b + tuned.c + 2) * m);
        assert_eq!(p.shifted(u_m as i64), p, "f^u_m(p^m) != p^m at m = {m}");
        assert!(shadowing_bounds_hold(&spec, &p), "distance bounds fail at m = {m}");
    }
    let report = growth_and_membership_experiment(&gen, &sft, &family, 2, theta, None).unwrap();
    for row in &report.rows {
        assert!(
            row.log_norm >= row.chi_reference,
            "m = {}: log norm {:.4} below reference {:.4}",
            row.m,
            row.log_norm,
            row.chi_reference
        );
    }
    println!("[PASS] criterion 9: shadowing experiment, b={}, c={}, eps={:.4e}, chi={:.4}; exact periods, distance bounds, and growth >= chi m - 3 log C for m in {{4,8,16,32}}", tuned.b, tuned.c, tuned.eps, report.chi);
}

#[test]
fn criterion_10_jacobian_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    let mut worst = 0.0_f64;
    for sft in [full_shift_2(), golden_mean()] {
        let mut measures = vec![MarkovMeasure::parry(&sft).unwrap()];
        for _ in 0..3 {
            measures.push(MarkovMeasure::random_compatible(&sft, &mut rng).unwrap());
        }
        for mu in &measures {
            let rev = mu.reversed();
            for depth in 1..=6usize {
                for w in sft.enumerate_words(depth).unwrap() {
                    // unstable side: for each admissible predecessor j of w,
                    // mu^u([w]) = mu^u([j, w]) * J_u on that cylinder
                    for j in sft.symbols() {
                        if sft.allowed(j, w[0]) {
                            let j_u = mu.symbol_prob(w[0])
                                / (mu.symbol_prob(j) * mu.transition_prob(j, w[0]));
                            let mut pre = vec![j];
                            pre.extend_from_slice(&w);
                            worst = worst
                                .max((mu.cylinder_measure(&w) - mu.cylinder_measure(&pre) * j_u).abs());
                        }
                        // stable side: mirrored through the reversed chain
                        if sft.allowed(w[depth - 1], j) {
                            let rw: Vec<Symbol> = w.iter().rev().copied().collect();
                            let j_s = rev.symbol_prob(rw[0])
                                / (rev.symbol_prob(j) * rev.transition_prob(j, rw[0]));
                            let mut pre = vec![j];
                            pre.extend_from_slice(&rw);
                            worst = worst.max(
                                (rev.cylinder_measure(&rw) - rev.cylinder_measure(&pre) * j_s)
                                    .abs(),
                            );
                        }
                    }
                }
            }
        }
    }
    assert!(worst <= 1e-12, "worst identity defect {worst:.3e}");
    println!("[PASS] criterion 10: Jacobian cylinder identity holds to {worst:.3e} <= 1e-12 over all cylinders of depth <= 6, Parry + 3 random measures on 2 shifts");
}
