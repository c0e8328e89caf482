//! Per-machine analysis: effective inputs, transition codes, and the
//! scalar profile the sizing formulas consume.
//!
//! An input is *effective* for a state when some explicit cube of that state
//! holds a literal at its position. This is a syntactic notion and may
//! over-approximate true semantic dependence (a redundant literal still
//! counts), but it is always safe: fixing every effective input fixes the
//! state's next state and outputs regardless of the remaining inputs.

use crate::error::Result;
use crate::fsm::CanonicalFsm;
use std::collections::HashMap;

/// Analysis result for one state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateProfile {
    /// State code.
    pub state: usize,
    /// Effective input positions, ascending.
    pub effective_inputs: Vec<u32>,
    /// Number of effective inputs.
    pub ei_count: u32,
}

/// A deduplicated (next state, output vector) pair. Transitions across the
/// whole machine are numbered by first appearance; that number is the global
/// transition index stored in RAM words.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TransitionCode {
    pub dst: usize,
    pub outputs: u64,
}

/// Everything the overlay sizing and tailoring stages need to know about a
/// machine.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FsmProfile {
    pub per_state: Vec<StateProfile>,
    /// Largest per-state effective-input count.
    pub ei_max: u32,
    /// Deduplicated transitions in first-appearance order; the list length
    /// is the machine's `t_max`.
    pub transitions: Vec<TransitionCode>,
    /// Distinct transitions leaving each state (defaults included).
    pub per_state_transition_count: Vec<usize>,
    /// Largest per-state transition count.
    pub t_state_max: usize,
    pub s_total: usize,
    pub i_total: u32,
    pub o_total: u32,
}

impl FsmProfile {
    /// Number of distinct transitions in the whole machine.
    pub fn t_max(&self) -> usize {
        self.transitions.len()
    }

    /// The per-state effective-input counts as one multiset (state order).
    pub fn ei_counts(&self) -> Vec<u32> {
        self.per_state.iter().map(|p| p.ei_count).collect()
    }
}

/// Effective input positions of one state, ascending: every position where
/// some explicit cube of the state holds a `0` or `1` literal. Implicit
/// default cubes are all-don't-care and contribute nothing.
pub fn effective_inputs(fsm: &CanonicalFsm, state: usize) -> Vec<u32> {
    let mut care = 0u64;
    for &ci in fsm.cubes_of(state) {
        care |= fsm.base.cubes[ci].inputs.care;
    }
    (0..fsm.num_inputs()).filter(|&j| care >> j & 1 == 1).collect()
}

/// The machine's deduplicated transition list, ordered by first appearance:
/// states ascending by code, each state's explicit cubes in file order, the
/// implicit default cube (if any) last within its state.
pub fn unique_transitions(fsm: &CanonicalFsm) -> Vec<TransitionCode> {
    let mut order: Vec<TransitionCode> = Vec::new();
    let mut seen: HashMap<TransitionCode, usize> = HashMap::new();
    let mut push = |code: TransitionCode, order: &mut Vec<TransitionCode>| {
        seen.entry(code).or_insert_with(|| {
            order.push(code);
            order.len() - 1
        });
    };
    for state in 0..fsm.state_count() {
        for &ci in fsm.cubes_of(state) {
            let cube = &fsm.base.cubes[ci];
            push(
                TransitionCode {
                    dst: cube.dst,
                    outputs: cube.outputs.value,
                },
                &mut order,
            );
        }
        if let Some((dst, outputs)) = fsm.default_transition(state) {
            push(TransitionCode { dst, outputs }, &mut order);
        }
    }
    order
}

/// Distinct transition codes leaving one state, in first-appearance order
/// (explicit cubes in file order, then the default).
pub fn state_transitions(fsm: &CanonicalFsm, state: usize) -> Vec<TransitionCode> {
    let mut out: Vec<TransitionCode> = Vec::new();
    let push = |code: TransitionCode, out: &mut Vec<TransitionCode>| {
        if !out.contains(&code) {
            out.push(code);
        }
    };
    for &ci in fsm.cubes_of(state) {
        let cube = &fsm.base.cubes[ci];
        push(
            TransitionCode {
                dst: cube.dst,
                outputs: cube.outputs.value,
            },
            &mut out,
        );
    }
    if let Some((dst, outputs)) = fsm.default_transition(state) {
        push(TransitionCode { dst, outputs }, &mut out);
    }
    out
}

/// Compute the full profile of a canonical machine.
pub fn profile(fsm: &CanonicalFsm) -> Result<FsmProfile> {
    let per_state: Vec<StateProfile> = (0..fsm.state_count())
        .map(|state| {
            let effective = effective_inputs(fsm, state);
            StateProfile {
                state,
                ei_count: effective.len() as u32,
                effective_inputs: effective,
            }
        })
        .collect();
    let ei_max = per_state.iter().map(|p| p.ei_count).max().unwrap_or(0);
    let transitions = unique_transitions(fsm);
    let per_state_transition_count: Vec<usize> = (0..fsm.state_count())
        .map(|s| state_transitions(fsm, s).len())
        .collect();
    let t_state_max = per_state_transition_count.iter().copied().max().unwrap_or(0);
    Ok(FsmProfile {
        per_state,
        ei_max,
        transitions,
        per_state_transition_count,
        t_state_max,
        s_total: fsm.state_count(),
        i_total: fsm.num_inputs(),
        o_total: fsm.num_outputs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fsm::canonicalize;
    use crate::kiss;

    fn build(text: &str) -> CanonicalFsm {
        canonicalize(&kiss::parse(text).unwrap().fsm).unwrap()
    }

    fn chain5() -> CanonicalFsm {
        build(
            "\
.i 6
.o 0
.r s0
1----- s0 s1
1----- s1 s2
1----- s2 s3
1----- s3 s4
-11111 s4 s0
",
        )
    }

    #[test]
    fn chain_profile_scalars() {
        let prof = profile(&chain5()).unwrap();
        assert_eq!(prof.ei_counts(), vec![1, 1, 1, 1, 5]);
        assert_eq!(prof.ei_max, 5);
        assert_eq!(prof.t_max(), 5);
        assert_eq!(prof.t_state_max, 2);
        assert_eq!(prof.s_total, 5);
        assert_eq!(prof.i_total, 6);
        assert_eq!(prof.o_total, 0);
    }

    #[test]
    fn chain_transition_order_is_first_appearance() {
        // Zero-width outputs collapse duplicates: the explicit move to s1
        // and s1's default self-loop are the same code.
        let prof = profile(&chain5()).unwrap();
        let dsts: Vec<usize> = prof.transitions.iter().map(|t| t.dst).collect();
        assert_eq!(dsts, vec![1, 0, 2, 3, 4]);
        assert!(prof.transitions.iter().all(|t| t.outputs == 0));
    }

    #[test]
    fn effective_inputs_are_syntactic() {
        let prof = profile(&chain5()).unwrap();
        assert_eq!(prof.per_state[0].effective_inputs, vec![0]);
        assert_eq!(prof.per_state[4].effective_inputs, vec![1, 2, 3, 4, 5]);

        // A redundant literal still counts as effective.
        let fsm = build(".i 2\n.o 0\n.r a\n1- a b\n11 a b\n-1 b a\n");
        assert_eq!(effective_inputs(&fsm, 0), vec![0, 1]);
    }

    #[test]
    fn all_dontcare_state_has_no_effective_inputs() {
        let fsm = build(".i 3\n.o 1\n.r a\n--- a b 1\n1-- b a 0\n");
        assert_eq!(effective_inputs(&fsm, 0), Vec::<u32>::new());
        assert_eq!(effective_inputs(&fsm, 1), vec![0]);
    }

    #[test]
    fn single_state_machine_has_one_transition() {
        let fsm = build(".i 1\n.o 1\n- s0 s0 0\n");
        let prof = profile(&fsm).unwrap();
        assert_eq!(prof.t_max(), 1);
        assert_eq!(prof.t_state_max, 1);
        assert_eq!(prof.ei_max, 0);
    }

    #[test]
    fn outputs_distinguish_transition_codes() {
        // Same destination, different outputs: two distinct codes. State a
        // is fully covered, so only b contributes a default (b, 0) — which
        // collapses onto the (b, 0) code already present.
        let fsm = build(".i 1\n.o 1\n.r a\n1 a b 1\n0 a b 0\n1 b a 0\n");
        let prof = profile(&fsm).unwrap();
        assert_eq!(
            prof.transitions,
            vec![
                TransitionCode { dst: 1, outputs: 1 },
                TransitionCode { dst: 1, outputs: 0 },
                TransitionCode { dst: 0, outputs: 0 },
            ]
        );
        assert_eq!(prof.per_state_transition_count, vec![2, 2]);
    }

    #[test]
    fn default_only_counts_when_coverage_is_incomplete() {
        // Both states fully covered: no defaults anywhere, so only the
        // explicit codes remain.
        let fsm = build(".i 1\n.o 0\n.r a\n1 a b\n0 a a\n- b a\n");
        let prof = profile(&fsm).unwrap();
        assert_eq!(prof.per_state_transition_count, vec![2, 1]);
        assert_eq!(prof.t_max(), 2);
    }

    #[test]
    fn brute_force_ei_safety_on_small_machines() {
        // Fixing all effective inputs of a state fixes its behavior no
        // matter what the remaining inputs do.
        for text in [
            ".i 4\n.o 1\n.r a\n1--- a b 1\n01-- a c 0\n---1 b a 0\n1--- c a 1\n",
            ".i 3\n.o 2\n.r x\n1-- x y 01\n0-1 x x 10\n-1- y x 11\n",
        ] {
            let fsm = build(text);
            let width = fsm.num_inputs();
            for state in 0..fsm.state_count() {
                let eff = effective_inputs(&fsm, state);
                let mut eff_mask = 0u64;
                for &j in &eff {
                    eff_mask |= 1 << j;
                }
                for v in 0u64..(1 << width) {
                    let base = fsm.step(state, v);
                    for w in 0u64..(1 << width) {
                        if (v ^ w) & eff_mask == 0 {
                            assert_eq!(fsm.step(state, w), base);
                        }
                    }
                }
            }
        }
    }
}
