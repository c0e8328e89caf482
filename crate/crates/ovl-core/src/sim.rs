//! Cycle-accurate interpreter for compiled overlay bitstreams, plus the
//! equivalence checker that compares a bitstream against its reference
//! machine.
//!
//! The interpreter walks the RAM images exactly the way the hardware
//! datapath would: read a word, slice the fields, register the next state.
//! It is total over corrupted images — a select slot naming a nonexistent
//! input reads a constant 0, per-engine addresses are truncated to the
//! engine's own address width, and a state-map row naming a nonexistent
//! engine yields transition code 0 — so fault-injection experiments always
//! produce a verdict rather than a crash.

use crate::arch::{clog2, ram_shapes, Arch};
use crate::error::{Error, Result};
use crate::fsm::{mask, CanonicalFsm, Trace, TraceRecord};
use crate::mapper::Bitstream;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Widest input vector [`Strategy::Exhaustive`] will enumerate.
const EXHAUSTIVE_INPUT_CAP: usize = 16;

/// A loaded overlay: validated RAM images plus the state register.
#[derive(Debug, Clone)]
pub struct OverlaySim {
    bits: Bitstream,
    state: u64,
}

impl OverlaySim {
    /// Load a bitstream, checking its sections against the shapes its own
    /// header implies and its reset code against the state space.
    pub fn new(bits: Bitstream) -> Result<OverlaySim> {
        bits.inst.validate()?;
        let shapes = ram_shapes(&bits.inst)?;
        if bits.sections.len() != shapes.len() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} sections, found {}",
                shapes.len(),
                bits.sections.len()
            )));
        }
        for (section, shape) in bits.sections.iter().zip(&shapes) {
            if section.name != shape.name
                || u128::from(section.depth) != shape.depth
                || section.width != shape.width
            {
                return Err(Error::ShapeMismatch(format!(
                    "expected section {} depth={} width={}, found {} depth={} width={}",
                    shape.name, shape.depth, shape.width, section.name, section.depth, section.width
                )));
            }
        }
        if bits.reset >= bits.inst.s_total {
            return Err(Error::ShapeMismatch(format!(
                "reset state {} outside s_total {}",
                bits.reset, bits.inst.s_total
            )));
        }
        let state = bits.reset;
        Ok(OverlaySim { bits, state })
    }

    pub fn bitstream(&self) -> &Bitstream {
        &self.bits
    }

    /// Current value of the state register.
    pub fn state(&self) -> u64 {
        self.state
    }

    pub fn reset_code(&self) -> u64 {
        self.bits.reset
    }

    /// Return the state register to the reset code.
    pub fn reset(&mut self) {
        self.state = self.bits.reset;
    }

    /// One combinational evaluation: from `state` under `inputs`, the next
    /// state and the outputs driven in the same cycle. Pure — the register
    /// is untouched.
    pub fn eval(&self, state: u64, inputs: u64) -> (u64, u64) {
        self.eval_inner(state, inputs, None)
    }

    /// Like [`eval`](Self::eval), additionally reporting every RAM read the
    /// evaluation performed as `(section name, address)` pairs, in read
    /// order. This is the hook fault-injection tests use to find which
    /// words an evaluation actually depends on.
    pub fn eval_probed(&self, state: u64, inputs: u64) -> (u64, u64, Vec<(String, u64)>) {
        let mut reads = Vec::new();
        let (next, out) = self.eval_inner(state, inputs, Some(&mut reads));
        (next, out, reads)
    }

    fn eval_inner(
        &self,
        state: u64,
        inputs: u64,
        mut probe: Option<&mut Vec<(String, u64)>>,
    ) -> (u64, u64) {
        let inst = &self.bits.inst;
        let inputs = inputs & mask(inst.i_total);
        let sbits = inst.sbits();
        let ibits = inst.ibits();
        let o_total = inst.o_total;
        let sections = &self.bits.sections;
        let mut touch = |name: &str, addr: u64| {
            if let Some(reads) = probe.as_deref_mut() {
                reads.push((name.to_string(), addr));
            }
        };
        // A select slot can name an input beyond the machine's width (only
        // via a corrupted image); such slots read 0.
        let input_bit = |idx: u64| -> u64 {
            if idx < u64::from(inst.i_total) {
                inputs >> idx & 1
            } else {
                0
            }
        };
        let gather = |section: &crate::mapper::Section, row: u64, slots: u32| -> u64 {
            let mut slot_bits = 0u64;
            for k in 0..slots {
                let idx = section.field(row, k * ibits, ibits);
                slot_bits |= input_bit(idx) << k;
            }
            slot_bits
        };

        match inst.arch {
            Arch::OneRam => {
                let st = &sections[0];
                let addr = (state << inst.i_total) | inputs;
                touch("state_transition", addr);
                (st.field(addr, o_total, sbits), st.field(addr, 0, o_total))
            }
            Arch::TwoRam => {
                let ei_max = inst.ei_max.unwrap();
                touch("input_select", state);
                let slot_bits = gather(&sections[0], state, ei_max);
                let addr = (state << ei_max) | slot_bits;
                touch("state_transition", addr);
                let st = &sections[1];
                (st.field(addr, o_total, sbits), st.field(addr, 0, o_total))
            }
            Arch::ThreeRam => {
                let ei_max = inst.ei_max.unwrap();
                let tsbits = clog2(u128::from(inst.t_state_max.unwrap()));
                touch("input_select", state);
                let slot_bits = gather(&sections[0], state, ei_max);
                let st_addr = (state << ei_max) | slot_bits;
                touch("state_transition", st_addr);
                let local = sections[1].field(st_addr, 0, tsbits);
                let tc_addr = (state << tsbits) | local;
                touch("transition_code", tc_addr);
                let tc = &sections[2];
                (
                    tc.field(tc_addr, o_total, sbits),
                    tc.field(tc_addr, 0, o_total),
                )
            }
            Arch::MRam => {
                let tbits = inst.tbits();
                let map_low = clog2(u128::from(inst.s_ste_max()));
                let ste_bits = clog2(inst.num_ste() as u128);
                touch("state_map", state);
                let row = &sections[0];
                let ps = row.field(state, 0, map_low);
                let ste_idx = row.field(state, map_low, ste_bits) as usize;
                // A corrupted map row can name an engine that does not
                // exist; nothing drives the code bus, which reads 0.
                let code = if ste_idx < inst.num_ste() {
                    let ste = inst.stes[ste_idx];
                    // Each engine sees only its own address bits of ps.
                    let ps = ps & mask(clog2(u128::from(ste.pseudo_states)));
                    let select = &sections[2 + 2 * ste_idx];
                    touch(&select.name, ps);
                    let slot_bits = gather(select, ps, ste.ei);
                    let st = &sections[3 + 2 * ste_idx];
                    let addr = (ps << ste.ei) | slot_bits;
                    touch(&st.name, addr);
                    st.field(addr, 0, tbits)
                } else {
                    0
                };
                touch("transition_code", code);
                let tc = &sections[1];
                (tc.field(code, o_total, sbits), tc.field(code, 0, o_total))
            }
        }
    }

    /// Apply one input vector: drive the outputs for this cycle and advance
    /// the state register. Returns `(next state, outputs)`.
    pub fn step(&mut self, inputs: u64) -> (u64, u64) {
        let (next, out) = self.eval(self.state, inputs);
        self.state = next;
        (next, out)
    }

    /// Reset, then run the whole stimulus, one vector per cycle. Record `i`
    /// holds the registered state at the start of cycle `i` and the outputs
    /// driven during it.
    pub fn run(&mut self, stimulus: &[u64]) -> Trace {
        self.reset();
        let mut records = Vec::with_capacity(stimulus.len());
        for (cycle, &inputs) in stimulus.iter().enumerate() {
            let inputs = inputs & mask(self.bits.inst.i_total);
            let state = self.state;
            let (_, outputs) = self.step(inputs);
            records.push(TraceRecord {
                cycle,
                inputs,
                state,
                outputs,
            });
        }
        Trace {
            records,
            input_width: self.bits.inst.i_total,
            output_width: self.bits.inst.o_total,
            final_state: self.state,
        }
    }
}

/// How [`verify_equivalence`] exercises the pair of machines.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    /// Every reachable state crossed with every input vector. Only allowed
    /// up to 16 inputs.
    Exhaustive,
    /// One seeded random walk of `steps` cycles from reset, compared
    /// cycle by cycle.
    Random { seed: u64, steps: u64 },
}

/// The first observed divergence between reference machine and overlay.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Counterexample {
    /// Cycle index for walk-based checks; `None` for state-space checks.
    pub cycle: Option<u64>,
    /// Registered state the divergence starts from.
    pub state: u64,
    /// Input vector applied in that state.
    pub inputs: u64,
    pub expected_next: u64,
    pub expected_outputs: u64,
    pub actual_next: u64,
    pub actual_outputs: u64,
}

/// Outcome of an equivalence check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Verdict {
    pub equivalent: bool,
    /// Present exactly when `equivalent` is false.
    pub counterexample: Option<Counterexample>,
    /// `(distinct states examined, total checks performed)`.
    pub coverage: (u64, u64),
    pub strategy: Strategy,
}

/// Check that the overlay behaves exactly like the reference machine.
/// State codes are compared directly — the compiler preserves the
/// reference state numbering, so code equality is the strongest and
/// simplest criterion.
///
/// [`Strategy::Exhaustive`] checks every reachable state against every
/// input vector and reports the first divergence in (state, vector) order.
/// [`Strategy::Random`] compares one seeded walk cycle by cycle; the same
/// seed always walks the same path.
pub fn verify_equivalence(
    fsm: &CanonicalFsm,
    sim: &OverlaySim,
    strategy: Strategy,
) -> Result<Verdict> {
    let inst = &sim.bitstream().inst;
    if u64::from(fsm.num_inputs()) != u64::from(inst.i_total)
        || u64::from(fsm.num_outputs()) != u64::from(inst.o_total)
    {
        return Err(Error::ArityMismatch(format!(
            "machine has {} inputs / {} outputs, bitstream carries {} / {}",
            fsm.num_inputs(),
            fsm.num_outputs(),
            inst.i_total,
            inst.o_total
        )));
    }

    match strategy {
        Strategy::Exhaustive => {
            let i_total = fsm.num_inputs() as usize;
            if i_total > EXHAUSTIVE_INPUT_CAP {
                return Err(Error::ExhaustiveTooWide {
                    i_total,
                    cap: EXHAUSTIVE_INPUT_CAP,
                });
            }
            let reachable = fsm.reachable_states();
            let vectors = 1u64 << i_total;
            let coverage = (reachable.len() as u64, reachable.len() as u64 * vectors);

            // The reset codes must agree or the walks diverge at cycle 0
            // before any input is applied.
            if sim.reset_code() != fsm.reset_state() as u64 {
                let state = fsm.reset_state() as u64;
                return Ok(Verdict {
                    equivalent: false,
                    counterexample: Some(Counterexample {
                        cycle: Some(0),
                        state,
                        inputs: 0,
                        expected_next: state,
                        expected_outputs: 0,
                        actual_next: sim.reset_code(),
                        actual_outputs: 0,
                    }),
                    coverage: (0, 0),
                    strategy,
                });
            }

            let check = |idx: u64| -> Option<Counterexample> {
                let state = reachable[(idx >> i_total) as usize];
                let inputs = idx & mask(i_total as u32);
                let (en, eo) = fsm.step(state, inputs);
                let (an, ao) = sim.eval(state as u64, inputs);
                if (en as u64, eo) != (an, ao) {
                    Some(Counterexample {
                        cycle: None,
                        state: state as u64,
                        inputs,
                        expected_next: en as u64,
                        expected_outputs: eo,
                        actual_next: an,
                        actual_outputs: ao,
                    })
                } else {
                    None
                }
            };

            #[cfg(feature = "parallel")]
            let counterexample = {
                use rayon::prelude::*;
                (0..coverage.1).into_par_iter().find_map_first(check)
            };
            #[cfg(not(feature = "parallel"))]
            let counterexample = (0..coverage.1).find_map(check);

            Ok(Verdict {
                equivalent: counterexample.is_none(),
                counterexample,
                coverage,
                strategy,
            })
        }
        Strategy::Random { seed, steps } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let input_mask = mask(fsm.num_inputs());
            let mut ref_state = fsm.reset_state();
            let mut sim_state = sim.reset_code();
            let mut visited = std::collections::HashSet::new();
            for cycle in 0..steps {
                visited.insert(ref_state);
                let inputs = rng.gen::<u64>() & input_mask;
                let (en, eo) = fsm.step(ref_state, inputs);
                let (an, ao) = sim.eval(sim_state, inputs);
                if ref_state as u64 != sim_state || (en as u64, eo) != (an, ao) {
                    return Ok(Verdict {
                        equivalent: false,
                        counterexample: Some(Counterexample {
                            cycle: Some(cycle),
                            state: ref_state as u64,
                            inputs,
                            expected_next: en as u64,
                            expected_outputs: eo,
                            actual_next: an,
                            actual_outputs: ao,
                        }),
                        coverage: (visited.len() as u64, cycle + 1),
                        strategy,
                    });
                }
                ref_state = en;
                sim_state = an;
            }
            Ok(Verdict {
                equivalent: true,
                counterexample: None,
                coverage: (visited.len() as u64, steps),
                strategy,
            })
        }
    }
}

/// Parse a stimulus file: one line per cycle, one `0`/`1` character per
/// input, leftmost character = input 0. `#` starts a comment line. Blank
/// lines are skipped for machines with at least one input; for zero-input
/// machines every non-comment line (necessarily empty) counts as a cycle.
pub fn parse_stimulus(text: &str, i_total: u32) -> Result<Vec<u64>> {
    let mut vectors = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.trim_end();
        if line.starts_with('#') || (line.is_empty() && i_total > 0) {
            continue;
        }
        if line.len() != i_total as usize {
            return Err(Error::StimulusWidth {
                line: no + 1,
                expected: i_total as usize,
                got: line.len(),
            });
        }
        let mut v = 0u64;
        for (j, c) in line.chars().enumerate() {
            match c {
                '0' => {}
                '1' => v |= 1 << j,
                _ => {
                    return Err(Error::Parse {
                        line: no + 1,
                        msg: format!("stimulus character {c:?} is not 0 or 1"),
                    })
                }
            }
        }
        vectors.push(v);
    }
    Ok(vectors)
}

fn bits_text(value: u64, width: u32) -> String {
    (0..width)
        .map(|j| if value >> j & 1 == 1 { '1' } else { '0' })
        .collect()
}

/// Render a trace as one text line per cycle:
/// `cycle=<i> in=<bits> state=<code> out=<bits>`.
pub fn render_trace_text(trace: &Trace) -> String {
    let mut out = String::new();
    for r in &trace.records {
        out.push_str(&format!(
            "cycle={} in={} state={} out={}\n",
            r.cycle,
            bits_text(r.inputs, trace.input_width),
            r.state,
            bits_text(r.outputs, trace.output_width),
        ));
    }
    out
}

/// Render a trace as CSV with header `cycle,in,state,out`.
pub fn render_trace_csv(trace: &Trace) -> String {
    let mut out = String::from("cycle,in,state,out\n");
    for r in &trace.records {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.cycle,
            bits_text(r.inputs, trace.input_width),
            r.state,
            bits_text(r.outputs, trace.output_width),
        ));
    }
    out
}
