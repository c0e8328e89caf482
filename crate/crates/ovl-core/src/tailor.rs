//! Tailoring: derive the smallest instance that hosts a machine (or a set
//! of machines) on each architecture.
//!
//! For `mram` the interesting decision is how to group states into STEs. A
//! group of states with effective-input counts up to `e` and size `n` costs
//! `2^(clog2(max(2, n)) + e) * tbits` (state-transition RAM) plus
//! `2^clog2(max(2, n)) * e * ibits` (input-select RAM). The optimal grouping
//! over the *sorted distinct* EI values is found by dynamic programming over
//! contiguous partitions; splitting never helps within one distinct value,
//! so contiguous partitions of the distinct values lose no generality.

use crate::arch::{clog2, Arch, InstanceSpec, SteSpec};
use crate::profile::{FsmProfile, StateProfile, TransitionCode};

/// Cost of one STE hosting `count` states of at most `ei` effective inputs:
/// its state-transition plus input-select bits. Saturates on overflow so
/// absurd groupings compare as "worse than anything".
fn ste_cost(ei: u32, count: u64, tbits: u32, ibits: u32) -> u128 {
    let ps = count.max(2);
    let psbits = clog2(ps as u128);
    let st = match 1u128.checked_shl(psbits + ei) {
        Some(d) => d.saturating_mul(tbits as u128),
        None => u128::MAX,
    };
    let is = (1u128 << psbits).saturating_mul(ei as u128 * ibits as u128);
    st.saturating_add(is)
}

/// Choose the STE list for a machine whose states have the given
/// effective-input counts. Returns STEs ascending by `ei`, each sized
/// `ei = group max`, `pseudo_states = max(2, group size)`.
///
/// Among minimum-cost contiguous partitions of the sorted distinct EI
/// values, ties prefer fewer STEs, then the lexicographically smallest list
/// of group boundaries.
pub fn optimize_stes(ei_counts: &[u32], t_max: u64, i_total: u32) -> Vec<SteSpec> {
    assert!(!ei_counts.is_empty(), "a machine has at least one state");
    let tbits = clog2((t_max as u128).max(1));
    let ibits = clog2((i_total as u128).max(1));

    // Distinct EI values ascending, with how many states carry each.
    let mut sorted = ei_counts.to_vec();
    sorted.sort_unstable();
    let mut values: Vec<u32> = Vec::new();
    let mut counts: Vec<u64> = Vec::new();
    for v in sorted {
        if values.last() == Some(&v) {
            *counts.last_mut().unwrap() += 1;
        } else {
            values.push(v);
            counts.push(1);
        }
    }
    let d = values.len();

    // best[j]: (cost, groups, boundaries) for the first j distinct values,
    // where boundaries lists the start index of every group after the first.
    #[derive(Clone)]
    struct Best {
        cost: u128,
        groups: usize,
        bounds: Vec<usize>,
    }
    let mut best: Vec<Option<Best>> = vec![None; d + 1];
    best[0] = Some(Best {
        cost: 0,
        groups: 0,
        bounds: Vec::new(),
    });
    for j in 1..=d {
        for i in 0..j {
            let Some(prefix) = best[i].clone() else {
                continue;
            };
            let group_count: u64 = counts[i..j].iter().sum();
            let cost = prefix
                .cost
                .saturating_add(ste_cost(values[j - 1], group_count, tbits, ibits));
            let mut bounds = prefix.bounds;
            if i > 0 {
                bounds.push(i);
            }
            let candidate = Best {
                cost,
                groups: prefix.groups + 1,
                bounds,
            };
            let better = match &best[j] {
                None => true,
                Some(cur) => {
                    (candidate.cost, candidate.groups, &candidate.bounds)
                        < (cur.cost, cur.groups, &cur.bounds)
                }
            };
            if better {
                best[j] = Some(candidate);
            }
        }
    }

    let chosen = best[d].take().unwrap();
    let mut starts = vec![0usize];
    starts.extend(&chosen.bounds);
    starts.push(d);
    starts
        .windows(2)
        .map(|w| SteSpec {
            ei: values[w[1] - 1],
            pseudo_states: counts[w[0]..w[1]].iter().sum::<u64>().max(2),
        })
        .collect()
}

/// The tightest instance of the given architecture that hosts the profiled
/// machine: every capacity equals the machine's demand.
pub fn tailor_single(prof: &FsmProfile, arch: Arch) -> InstanceSpec {
    let s = prof.s_total as u64;
    let t = prof.t_max() as u64;
    match arch {
        Arch::OneRam => InstanceSpec::one_ram(s, prof.i_total, prof.o_total, t),
        Arch::TwoRam => InstanceSpec::two_ram(s, prof.i_total, prof.o_total, t, prof.ei_max),
        Arch::ThreeRam => InstanceSpec::three_ram(
            s,
            prof.i_total,
            prof.o_total,
            t,
            prof.t_state_max as u64,
            prof.ei_max,
        ),
        Arch::MRam => InstanceSpec::m_ram(
            s,
            prof.i_total,
            prof.o_total,
            t,
            optimize_stes(&prof.ei_counts(), t, prof.i_total),
        ),
    }
}

/// The joint requirement of several machines: scalars are element-wise
/// maxima and the effective-input multiset is the rank-wise maximum (each
/// machine's per-state EI counts sorted descending, padded with zeros, then
/// position-wise max). An instance tailored from the envelope hosts every
/// member.
///
/// A single profile envelopes to itself, unchanged. For two or more, the
/// per-state input sets and the transition list are synthetic — only the
/// scalars and the EI multiset of an envelope mean anything downstream.
pub fn envelope(profiles: &[FsmProfile]) -> FsmProfile {
    assert!(!profiles.is_empty(), "envelope of nothing is undefined");
    if profiles.len() == 1 {
        return profiles[0].clone();
    }

    let s_total = profiles.iter().map(|p| p.s_total).max().unwrap();
    let i_total = profiles.iter().map(|p| p.i_total).max().unwrap();
    let o_total = profiles.iter().map(|p| p.o_total).max().unwrap();
    let t_max = profiles.iter().map(|p| p.t_max()).max().unwrap();
    let t_state_max = profiles.iter().map(|p| p.t_state_max).max().unwrap();

    // Rank-wise max of the descending EI lists.
    let mut ranked: Vec<u32> = vec![0; s_total];
    for p in profiles {
        let mut eis = p.ei_counts();
        eis.sort_unstable_by(|a, b| b.cmp(a));
        for (slot, ei) in ranked.iter_mut().zip(eis) {
            *slot = (*slot).max(ei);
        }
    }
    let ei_max = ranked.first().copied().unwrap_or(0);

    let per_state: Vec<StateProfile> = ranked
        .iter()
        .enumerate()
        .map(|(state, &ei)| StateProfile {
            state,
            effective_inputs: (0..ei).collect(),
            ei_count: ei,
        })
        .collect();

    // A synthetic transition list of the right length: distinct codes in
    // lexicographic order. Never consumed for bits, only for its length.
    let outputs_per_dst = if o_total >= 63 { u64::MAX } else { 1 << o_total };
    let transitions: Vec<TransitionCode> = (0..t_max)
        .map(|i| TransitionCode {
            dst: i / outputs_per_dst as usize,
            outputs: (i as u64) % outputs_per_dst,
        })
        .collect();

    let per_state_transition_count = vec![t_state_max; s_total];
    FsmProfile {
        per_state,
        ei_max,
        transitions,
        per_state_transition_count,
        t_state_max,
        s_total,
        i_total,
        o_total,
    }
}

/// Tailor one instance that hosts every profiled machine: tailor the
/// envelope.
pub fn tailor_multi(profiles: &[FsmProfile], arch: Arch) -> InstanceSpec {
    tailor_single(&envelope(profiles), arch)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arch::{hostable, total_bits};
    use crate::fsm::canonicalize;
    use crate::kiss;
    use crate::profile::profile;

    fn profile_of(text: &str) -> FsmProfile {
        profile(&canonicalize(&kiss::parse(text).unwrap().fsm).unwrap()).unwrap()
    }

    fn chain5_profile() -> FsmProfile {
        profile_of(
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
    fn chain_machine_splits_into_two_stes() {
        let stes = optimize_stes(&[1, 1, 1, 1, 5], 5, 6);
        assert_eq!(
            stes,
            vec![
                SteSpec {
                    ei: 1,
                    pseudo_states: 4
                },
                SteSpec {
                    ei: 5,
                    pseudo_states: 2
                },
            ]
        );
        // Split cost: (24 + 12) + (192 + 30) = 258. A single STE would cost
        // 2^(3+5)*3 + 8*5*3 = 888. The split wins.
        let tbits = 3;
        let ibits = 3;
        assert_eq!(ste_cost(1, 4, tbits, ibits) + ste_cost(5, 1, tbits, ibits), 258);
        assert_eq!(ste_cost(5, 5, tbits, ibits), 888);
    }

    #[test]
    fn single_distinct_value_means_single_ste() {
        assert_eq!(
            optimize_stes(&[3], 4, 8),
            vec![SteSpec {
                ei: 3,
                pseudo_states: 2
            }]
        );
        assert_eq!(
            optimize_stes(&[2, 2, 2, 2, 2, 2], 4, 8),
            vec![SteSpec {
                ei: 2,
                pseudo_states: 6
            }]
        );
    }

    /// Every contiguous partition of the sorted distinct EI values, scored
    /// like the DP scores them. The reference the DP is checked against.
    fn brute_force_partition(ei_counts: &[u32], t_max: u64, i_total: u32) -> Vec<SteSpec> {
        let tbits = clog2((t_max as u128).max(1));
        let ibits = clog2((i_total as u128).max(1));
        let mut sorted = ei_counts.to_vec();
        sorted.sort_unstable();
        let mut values: Vec<u32> = Vec::new();
        let mut counts: Vec<u64> = Vec::new();
        for v in sorted {
            if values.last() == Some(&v) {
                *counts.last_mut().unwrap() += 1;
            } else {
                values.push(v);
                counts.push(1);
            }
        }
        let d = values.len();
        assert!(d <= 16, "brute force only meant for small inputs");
        let mut best: Option<(u128, usize, Vec<usize>, Vec<SteSpec>)> = None;
        for cuts in 0u32..(1 << (d - 1)) {
            let mut bounds = Vec::new();
            for b in 1..d {
                if cuts >> (b - 1) & 1 == 1 {
                    bounds.push(b);
                }
            }
            let mut starts = vec![0usize];
            starts.extend(&bounds);
            starts.push(d);
            let mut cost = 0u128;
            let mut stes = Vec::new();
            for w in starts.windows(2) {
                let count: u64 = counts[w[0]..w[1]].iter().sum();
                cost = cost.saturating_add(ste_cost(values[w[1] - 1], count, tbits, ibits));
                stes.push(SteSpec {
                    ei: values[w[1] - 1],
                    pseudo_states: count.max(2),
                });
            }
            let key = (cost, stes.len(), bounds.clone());
            let better = match &best {
                None => true,
                Some((c, g, b, _)) => key < (*c, *g, b.clone()),
            };
            if better {
                best = Some((cost, stes.len(), bounds, stes));
            }
        }
        best.unwrap().3
    }

    #[test]
    fn dp_matches_brute_force_on_assorted_multisets() {
        let cases: Vec<(Vec<u32>, u64, u32)> = vec![
            (vec![1, 1, 1, 1, 5], 5, 6),
            (vec![0, 0, 1, 2, 3, 4], 7, 8),
            (vec![2, 2, 5, 5, 9], 12, 10),
            (vec![1, 3, 3, 3, 7, 8], 9, 9),
            (vec![4], 2, 4),
            (vec![0, 8], 3, 8),
        ];
        for (eis, t, i) in cases {
            assert_eq!(
                optimize_stes(&eis, t, i),
                brute_force_partition(&eis, t, i),
                "multiset {eis:?}"
            );
        }
    }

    #[test]
    fn tailored_instances_host_their_machine() {
        let prof = chain5_profile();
        for arch in Arch::ALL {
            let inst = tailor_single(&prof, arch);
            assert_eq!(inst.validate().map_err(|e| e.to_string()), Ok(()));
            assert_eq!(hostable(&inst, &prof), Ok(()));
        }
    }

    #[test]
    fn tailored_totals_match_the_worked_example() {
        let prof = chain5_profile();
        let totals: Vec<u128> = Arch::ALL
            .iter()
            .map(|&a| total_bits(&tailor_single(&prof, a)).unwrap())
            .collect();
        assert_eq!(totals, vec![1536, 888, 424, 306]);
    }

    #[test]
    fn envelope_of_one_profile_is_that_profile() {
        let prof = chain5_profile();
        assert_eq!(envelope(std::slice::from_ref(&prof)), prof);
    }

    #[test]
    fn envelope_takes_rankwise_ei_maxima() {
        // Second machine: EI counts {2, 2, 1}.
        let other = profile_of(".i 3\n.o 0\n.r a\n1-0 a b\n-11 b c\n1-- c a\n");
        assert_eq!(
            {
                let mut v = other.ei_counts();
                v.sort_unstable();
                v
            },
            vec![1, 2, 2]
        );
        let env = envelope(&[chain5_profile(), other]);
        let mut eis = env.ei_counts();
        eis.sort_unstable_by(|a, b| b.cmp(a));
        assert_eq!(eis, vec![5, 2, 1, 1, 1]);
        assert_eq!(env.s_total, 5);
        assert_eq!(env.i_total, 6);
    }

    #[test]
    fn envelope_dominates_members() {
        let profs = vec![
            chain5_profile(),
            profile_of(".i 3\n.o 2\n.r a\n1-0 a b 01\n-11 b c 10\n1-- c a 11\n"),
            profile_of(".i 1\n.o 1\n- s0 s0 1\n"),
        ];
        for arch in Arch::ALL {
            let inst = tailor_multi(&profs, arch);
            for (i, p) in profs.iter().enumerate() {
                assert_eq!(hostable(&inst, p), Ok(()), "machine {i} on {arch}");
            }
        }
    }

    #[test]
    fn capacity_growth_never_shrinks_bits_or_breaks_hosting() {
        let prof = chain5_profile();
        for arch in Arch::ALL {
            let inst = tailor_single(&prof, arch);
            let base_bits = total_bits(&inst).unwrap();
            let mut grown = Vec::new();
            let mut g = inst.clone();
            g.s_total += 1;
            grown.push(g);
            let mut g = inst.clone();
            g.i_total += 1;
            grown.push(g);
            let mut g = inst.clone();
            g.o_total += 1;
            grown.push(g);
            let mut g = inst.clone();
            g.t_max += 1;
            grown.push(g);
            if let Some(t) = inst.t_state_max {
                let mut g = inst.clone();
                g.t_state_max = Some(t + 1);
                grown.push(g);
            }
            if let Some(e) = inst.ei_max {
                let mut g = inst.clone();
                g.ei_max = Some(e + 1);
                grown.push(g);
            }
            for i in 0..inst.stes.len() {
                let mut g = inst.clone();
                g.stes[i].pseudo_states += 1;
                grown.push(g);
                // growing one STE's ei may unsort the list; skip when it would
                let mut g = inst.clone();
                g.stes[i].ei += 1;
                if g.stes.windows(2).all(|w| w[0].ei <= w[1].ei) {
                    grown.push(g);
                }
            }
            for g in grown {
                assert!(total_bits(&g).unwrap() >= base_bits, "{arch}: {g:?}");
                assert_eq!(hostable(&g, &prof), Ok(()), "{arch}: {g:?}");
            }
        }
    }
}
