//! Independent oracle for the transition-average stationary law: build the
//! embedded per-transition DTMC of the saturated 1-and-n system explicitly
//! from its transition rules and solve it with a dense linear solve, then
//! compare against the closed geometric form.
//!
//! State indexing here: `0..=n` are the arrival-or-full states (0, b),
//! `n+1..=2n` are the large-job-present states (1, b).

use nalgebra::{DMatrix, DVector};

use msjlab::exact1n::{transition_dist, Canonical1n, SatState1n};

fn transition_chain_stationary(n: usize, p_n: f64) -> Vec<f64> {
    let p1 = 1.0 - p_n;
    let m = 2 * n + 1;
    let empty = |b: usize| b; // (0, b)
    let blocked = |b: usize| n + 1 + b; // (1, b)
    let mut kernel = DMatrix::<f64>::zeros(m, m);
    for b in 0..n {
        // Arrival states: a 1-server or an n-server job joins.
        kernel[(empty(b), empty(b + 1))] += p1;
        kernel[(empty(b), blocked(b))] += p_n;
    }
    // Full of 1-server jobs: one of them completes.
    kernel[(empty(n), empty(n - 1))] += 1.0;
    // n-server job in service: it completes and the system empties.
    kernel[(blocked(0), empty(0))] += 1.0;
    for b in 1..n {
        // Blocked head: 1-server jobs drain one at a time.
        kernel[(blocked(b), blocked(b - 1))] += 1.0;
    }

    let mut a = kernel.transpose() - DMatrix::<f64>::identity(m, m);
    for j in 0..m {
        a[(m - 1, j)] = 1.0;
    }
    let mut rhs = DVector::<f64>::zeros(m);
    rhs[m - 1] = 1.0;
    a.lu()
        .solve(&rhs)
        .expect("irreducible chain")
        .iter()
        .copied()
        .collect()
}

#[test]
fn closed_form_matches_transition_chain_solve() {
    for &(n, p_n) in &[
        (2usize, 0.5),
        (2, 0.1),
        (3, 0.9),
        (5, 0.3),
        (8, 0.55),
        (12, 0.05),
    ] {
        let params = Canonical1n::new(n as u64, p_n, 1.0, 1.0).unwrap();
        let dist = transition_dist(&params, 1 << 20).unwrap();
        let oracle = transition_chain_stationary(n, p_n);
        for (b, &solved) in oracle[..=n].iter().enumerate() {
            let closed = dist.mass_at(&SatState1n::new(0, b as u64)).unwrap();
            assert!(
                (closed - solved).abs() < 1e-12,
                "n={n} p_n={p_n} state (0,{b}): {closed} vs {solved}"
            );
        }
        for (b, &solved) in oracle[n + 1..].iter().enumerate() {
            let closed = dist.mass_at(&SatState1n::new(1, b as u64)).unwrap();
            assert!(
                (closed - solved).abs() < 1e-12,
                "n={n} p_n={p_n} state (1,{b}): {closed} vs {solved}"
            );
        }
    }
}

#[test]
fn frozen_small_case_agrees_with_both_routes() {
    // n = 2, p_n = 1/2: masses 1/4, 1/4, 1/8 on (0,0),(0,1),(0,2) and
    // 1/4, 1/8 on (1,0),(1,1), frozen from the solved balance equations.
    let oracle = transition_chain_stationary(2, 0.5);
    let expected = [0.25, 0.25, 0.125, 0.25, 0.125];
    for (got, want) in oracle.iter().zip(expected) {
        assert!((got - want).abs() < 1e-14, "{got} vs {want}");
    }
}
