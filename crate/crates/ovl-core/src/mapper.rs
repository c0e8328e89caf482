//! Compile a machine onto an overlay instance: fill every RAM section.
//!
//! All shapes come from the *instance*, never from the machine, so a
//! machine mapped onto an oversized (envelope) instance still produces
//! well-formed images — spare addresses hold zero words. Word layouts:
//!
//! * transition-code words: destination state code in the high `sbits`,
//!   output vector in the low `o_total` bits.
//! * input-select words: one `ibits`-wide slot per selectable input, slot
//!   `k` at bit `k * ibits`, holding the state's `k`-th effective input
//!   (ascending position); unused slots repeat input 0.
//! * state-transition addresses: `(state_or_pseudo_state << slots) | slot
//!   bits`, slot 0 at the least-significant address bit.
//! * state-map words (`mram`): STE index in the high bits, pseudo-state in
//!   the low `clog2(s_ste_max)` bits.

use crate::arch::{clog2, greedy_placement, hostable, ram_shapes, Arch, InstanceSpec, RamShape};
use crate::error::{Error, Result};
use crate::fsm::CanonicalFsm;
use crate::profile::{FsmProfile, TransitionCode};
use bitvec::prelude::*;
use std::collections::HashMap;

/// Default ceiling on materialized RAM bits per instance (2^28). Mapping
/// and bitstream loading refuse anything larger unless told otherwise.
pub const DEFAULT_BIT_CAP: u128 = 1 << 28;

/// One RAM image: `depth` words of `width` bits, packed. Words are accessed
/// through sub-word fields (at most 64 bits per access) or whole-word hex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Section {
    pub name: String,
    pub depth: u64,
    pub width: u32,
    bits: BitVec<u64, Lsb0>,
}

impl Section {
    /// A zero-filled section. The caller is responsible for cap-checking
    /// `depth * width` first.
    pub fn new(name: String, depth: u64, width: u32) -> Section {
        let len = depth
            .checked_mul(width as u64)
            .and_then(|n| usize::try_from(n).ok())
            .expect("section size must be cap-checked before allocation");
        Section {
            name,
            depth,
            width,
            bits: bitvec![u64, Lsb0; 0; len],
        }
    }

    pub fn from_shape(shape: &RamShape) -> Section {
        Section::new(
            shape.name.clone(),
            u64::try_from(shape.depth).expect("cap-checked depth"),
            shape.width,
        )
    }

    fn bit_range(&self, addr: u64, lo: u32, len: u32) -> std::ops::Range<usize> {
        debug_assert!(addr < self.depth, "address {addr} out of range");
        debug_assert!(lo + len <= self.width, "field beyond word width");
        let start = addr as usize * self.width as usize + lo as usize;
        start..start + len as usize
    }

    /// Read a field of up to 64 bits from one word.
    pub fn field(&self, addr: u64, lo: u32, len: u32) -> u64 {
        debug_assert!(len <= 64);
        if len == 0 {
            return 0;
        }
        self.bits[self.bit_range(addr, lo, len)].load_le()
    }

    /// Write a field of up to 64 bits in one word.
    pub fn set_field(&mut self, addr: u64, lo: u32, len: u32, value: u64) {
        debug_assert!(len <= 64);
        if len == 0 {
            debug_assert_eq!(value, 0);
            return;
        }
        debug_assert!(len == 64 || value < 1 << len, "value wider than field");
        let range = self.bit_range(addr, lo, len);
        self.bits[range].store_le(value);
    }

    /// The whole word as a lowercase fixed-width hex string:
    /// `max(1, ceil(width / 4))` digits, most-significant digit first.
    pub fn word_hex(&self, addr: u64) -> String {
        let digits = (self.width as usize).div_ceil(4).max(1);
        let mut out = String::with_capacity(digits);
        for d in (0..digits).rev() {
            let lo = (d * 4) as u32;
            let len = 4.min(self.width.saturating_sub(lo));
            let nibble = if len == 0 { 0 } else { self.field(addr, lo, len) };
            out.push(char::from_digit(nibble as u32, 16).unwrap());
        }
        out
    }

    /// Overwrite one word from a hex string. Rejects values that do not fit
    /// in `width` bits.
    pub fn set_word_hex(&mut self, addr: u64, hex: &str) -> std::result::Result<(), String> {
        if hex.is_empty() || !hex.chars().all(|c| c.is_ascii_hexdigit()) {
            return Err(format!("bad hex word {hex:?}"));
        }
        let width = self.width;
        let overflow = move || format!("word {hex:?} does not fit in {width} bits");
        for (d, ch) in hex.chars().rev().enumerate() {
            let nibble = ch.to_digit(16).unwrap() as u64;
            let lo = (d * 4) as u32;
            if lo >= self.width {
                if nibble != 0 {
                    return Err(overflow());
                }
                continue;
            }
            let len = 4.min(self.width - lo);
            if nibble >> len != 0 {
                return Err(overflow());
            }
            self.set_field(addr, lo, len, nibble);
        }
        Ok(())
    }

    /// Are two words bit-identical?
    pub fn words_equal(&self, a: u64, b: u64) -> bool {
        if self.width == 0 {
            return true;
        }
        self.bits[self.bit_range(a, 0, self.width)] == self.bits[self.bit_range(b, 0, self.width)]
    }

    pub fn bits_total(&self) -> u128 {
        self.depth as u128 * self.width as u128
    }
}

/// A compiled machine: header plus filled RAM sections in canonical order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bitstream {
    pub fsm_name: String,
    pub inst: InstanceSpec,
    /// State code the simulator starts in.
    pub reset: u64,
    pub sections: Vec<Section>,
}

impl Bitstream {
    pub fn section(&self, name: &str) -> Option<&Section> {
        self.sections.iter().find(|s| s.name == name)
    }

    pub fn section_mut(&mut self, name: &str) -> Option<&mut Section> {
        self.sections.iter_mut().find(|s| s.name == name)
    }
}

/// Per-state placement on an `mram` instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    /// Indexed by state code: `(ste index, pseudo_state)`.
    pub placed: Vec<(usize, u64)>,
}

/// Place every state of a profiled machine into the instance's STEs
/// (greedy, descending effective-input demand). Fails when the instance is
/// not hostable.
pub fn assign_states(prof: &FsmProfile, inst: &InstanceSpec) -> Result<Assignment> {
    hostable(inst, prof).map_err(Error::NotHostable)?;
    let placed = greedy_placement(inst, prof)
        .map_err(|s| Error::NotHostable(format!("state {s} fits no STE")))?;
    Ok(Assignment { placed })
}

fn cap_check(shapes: &[RamShape], cap: u128) -> Result<()> {
    let mut needed = 0u128;
    for s in shapes {
        needed = needed.checked_add(s.bits).ok_or(Error::SizeOverflow)?;
    }
    if needed > cap {
        return Err(Error::CapExceeded { needed, cap });
    }
    Ok(())
}

/// Compose the input vector that the reference interpreter should see when
/// the overlay's selected slots carry `slot_bits`: effective input `k` of
/// the state gets slot bit `k`, every other input reads 0.
fn inputs_from_slots(effective: &[u32], slot_bits: u64) -> u64 {
    let mut inputs = 0u64;
    for (k, &pos) in effective.iter().enumerate() {
        inputs |= (slot_bits >> k & 1) << pos;
    }
    inputs
}

/// Fill one input-select word: the state's effective inputs in ascending
/// position order, one slot each, unused slots repeating input 0.
fn fill_select_word(section: &mut Section, addr: u64, slots: u32, ibits: u32, effective: &[u32]) {
    for k in 0..slots {
        let input = effective.get(k as usize).copied().unwrap_or(0);
        section.set_field(addr, k * ibits, ibits, input as u64);
    }
}

/// Compile `fsm` onto `inst`. The machine must be hostable and the
/// instance's total bits must not exceed `cap`.
pub fn map(
    fsm: &CanonicalFsm,
    prof: &FsmProfile,
    inst: &InstanceSpec,
    cap: u128,
) -> Result<Bitstream> {
    hostable(inst, prof).map_err(Error::NotHostable)?;
    let shapes = ram_shapes(inst)?;
    cap_check(&shapes, cap)?;
    let mut sections: Vec<Section> = shapes.iter().map(Section::from_shape).collect();

    let sbits = inst.sbits();
    let ibits = inst.ibits();
    let o_total = inst.o_total;

    // Global transition indices in first-appearance order.
    let t_index: HashMap<TransitionCode, u64> = prof
        .transitions
        .iter()
        .enumerate()
        .map(|(i, &t)| (t, i as u64))
        .collect();
    let index_of = |dst: usize, outputs: u64| -> u64 {
        t_index[&TransitionCode { dst, outputs }]
    };

    match inst.arch {
        Arch::OneRam => {
            let st = &mut sections[0];
            for state in 0..prof.s_total {
                for v in 0u64..1 << inst.i_total {
                    let (next, out) = fsm.step(state, v);
                    let addr = ((state as u64) << inst.i_total) | v;
                    st.set_field(addr, 0, o_total, out);
                    st.set_field(addr, o_total, sbits, next as u64);
                }
            }
        }
        Arch::TwoRam => {
            let ei_max = inst.ei_max.unwrap();
            for state in 0..prof.s_total {
                let eff = &prof.per_state[state].effective_inputs;
                fill_select_word(&mut sections[0], state as u64, ei_max, ibits, eff);
                for slot_bits in 0u64..1 << ei_max {
                    let (next, out) = fsm.step(state, inputs_from_slots(eff, slot_bits));
                    let addr = ((state as u64) << ei_max) | slot_bits;
                    sections[1].set_field(addr, 0, o_total, out);
                    sections[1].set_field(addr, o_total, sbits, next as u64);
                }
            }
        }
        Arch::ThreeRam => {
            let ei_max = inst.ei_max.unwrap();
            let tsbits = clog2(inst.t_state_max.unwrap() as u128);
            for state in 0..prof.s_total {
                let eff = &prof.per_state[state].effective_inputs;
                fill_select_word(&mut sections[0], state as u64, ei_max, ibits, eff);
                // Local transition codes in first-appearance order.
                let local = crate::profile::state_transitions(fsm, state);
                for (li, code) in local.iter().enumerate() {
                    let addr = ((state as u64) << tsbits) | li as u64;
                    sections[2].set_field(addr, 0, o_total, code.outputs);
                    sections[2].set_field(addr, o_total, sbits, code.dst as u64);
                }
                for slot_bits in 0u64..1 << ei_max {
                    let (next, out) = fsm.step(state, inputs_from_slots(eff, slot_bits));
                    let li = local
                        .iter()
                        .position(|c| c.dst == next && c.outputs == out)
                        .expect("state_transitions covers every reachable code") as u64;
                    sections[1].set_field(((state as u64) << ei_max) | slot_bits, 0, tsbits, li);
                }
            }
        }
        Arch::MRam => {
            let assignment = assign_states(prof, inst)?;
            let tbits = inst.tbits();
            let map_low = clog2(inst.s_ste_max() as u128);
            let ste_bits = clog2(inst.num_ste() as u128);
            for (t, code) in prof.transitions.iter().enumerate() {
                sections[1].set_field(t as u64, 0, o_total, code.outputs);
                sections[1].set_field(t as u64, o_total, sbits, code.dst as u64);
            }
            for state in 0..prof.s_total {
                let (ste_idx, ps) = assignment.placed[state];
                let ste = inst.stes[ste_idx];
                sections[0].set_field(state as u64, 0, map_low, ps);
                sections[0].set_field(state as u64, map_low, ste_bits, ste_idx as u64);
                let eff = &prof.per_state[state].effective_inputs;
                let select = &mut sections[2 + 2 * ste_idx];
                fill_select_word(select, ps, ste.ei, ibits, eff);
                let st = &mut sections[3 + 2 * ste_idx];
                for slot_bits in 0u64..1 << ste.ei {
                    let (next, out) = fsm.step(state, inputs_from_slots(eff, slot_bits));
                    st.set_field((ps << ste.ei) | slot_bits, 0, tbits, index_of(next, out));
                }
            }
        }
    }

    Ok(Bitstream {
        fsm_name: fsm.base.name.clone(),
        inst: inst.clone(),
        reset: fsm.reset_state() as u64,
        sections,
    })
}
