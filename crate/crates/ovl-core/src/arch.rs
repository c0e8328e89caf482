//! Overlay architecture model: the four RAM organizations, their sizing
//! formulas, hostability checks, and the textual instance-config format.
//!
//! All four architectures implement a Mealy machine out of block RAMs:
//!
//! * **one**: a single state-transition RAM addressed by every input wire.
//! * **two**: an input-select RAM narrows each state to its `ei_max` chosen
//!   inputs before the state-transition RAM.
//! * **three**: the state-transition RAM shrinks to per-state transition
//!   indices, decoded by a shared transition-code RAM.
//! * **mram**: states are partitioned across state-transition elements
//!   (STEs) sized for their effective-input demand; a state-map RAM routes
//!   each state code to its STE and pseudo-state slot.
//!
//! Depths and bit counts are computed in `u128` so that instances far too
//! large to build can still be *sized* and reported.

use crate::error::{Error, Result};
use crate::profile::FsmProfile;

/// Ceiling log2. `clog2(1) == 0`; zero has no defined value.
pub fn clog2(n: u128) -> u32 {
    assert!(n > 0, "clog2 is undefined for 0");
    128 - (n - 1).leading_zeros()
}

fn pow2(exp: u32) -> Result<u128> {
    if exp >= 128 {
        return Err(Error::SizeOverflow);
    }
    Ok(1u128 << exp)
}

fn mul(a: u128, b: u128) -> Result<u128> {
    a.checked_mul(b).ok_or(Error::SizeOverflow)
}

/// The four overlay organizations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Arch {
    OneRam,
    TwoRam,
    ThreeRam,
    MRam,
}

impl Arch {
    pub const ALL: [Arch; 4] = [Arch::OneRam, Arch::TwoRam, Arch::ThreeRam, Arch::MRam];

    /// Canonical lowercase name used in bitstreams, configs and the CLI.
    pub fn name(self) -> &'static str {
        match self {
            Arch::OneRam => "one",
            Arch::TwoRam => "two",
            Arch::ThreeRam => "three",
            Arch::MRam => "mram",
        }
    }

    pub fn from_name(s: &str) -> Option<Arch> {
        match s {
            "one" => Some(Arch::OneRam),
            "two" => Some(Arch::TwoRam),
            "three" => Some(Arch::ThreeRam),
            "mram" => Some(Arch::MRam),
            _ => None,
        }
    }
}

impl std::fmt::Display for Arch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// One state-transition element of an `mram` instance: hosts up to
/// `pseudo_states` states that each use at most `ei` effective inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SteSpec {
    pub ei: u32,
    pub pseudo_states: u64,
}

/// A concrete overlay instance: the capacities the hardware would be built
/// with. A machine is mapped onto an instance; the instance's fields, not
/// the machine's, determine every RAM shape.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstanceSpec {
    pub arch: Arch,
    /// State capacity (codes run 0..s_total).
    pub s_total: u64,
    /// Input wires.
    pub i_total: u32,
    /// Output wires.
    pub o_total: u32,
    /// Capacity for distinct machine-wide transitions (mram decode depth).
    pub t_max: u64,
    /// Per-state transition capacity; `three` only.
    pub t_state_max: Option<u64>,
    /// Effective-input slots per state; `two` and `three` only.
    pub ei_max: Option<u32>,
    /// STE list, ascending by `ei`; `mram` only.
    pub stes: Vec<SteSpec>,
}

impl InstanceSpec {
    pub fn one_ram(s_total: u64, i_total: u32, o_total: u32, t_max: u64) -> Self {
        InstanceSpec {
            arch: Arch::OneRam,
            s_total,
            i_total,
            o_total,
            t_max,
            t_state_max: None,
            ei_max: None,
            stes: Vec::new(),
        }
    }

    pub fn two_ram(s_total: u64, i_total: u32, o_total: u32, t_max: u64, ei_max: u32) -> Self {
        InstanceSpec {
            arch: Arch::TwoRam,
            s_total,
            i_total,
            o_total,
            t_max,
            t_state_max: None,
            ei_max: Some(ei_max),
            stes: Vec::new(),
        }
    }

    pub fn three_ram(
        s_total: u64,
        i_total: u32,
        o_total: u32,
        t_max: u64,
        t_state_max: u64,
        ei_max: u32,
    ) -> Self {
        InstanceSpec {
            arch: Arch::ThreeRam,
            s_total,
            i_total,
            o_total,
            t_max,
            t_state_max: Some(t_state_max),
            ei_max: Some(ei_max),
            stes: Vec::new(),
        }
    }

    pub fn m_ram(s_total: u64, i_total: u32, o_total: u32, t_max: u64, stes: Vec<SteSpec>) -> Self {
        InstanceSpec {
            arch: Arch::MRam,
            s_total,
            i_total,
            o_total,
            t_max,
            t_state_max: None,
            ei_max: None,
            stes,
        }
    }

    pub fn num_ste(&self) -> usize {
        self.stes.len()
    }

    /// Largest pseudo-state capacity across STEs.
    pub fn s_ste_max(&self) -> u64 {
        self.stes.iter().map(|s| s.pseudo_states).max().unwrap_or(0)
    }

    /// State-code width.
    pub fn sbits(&self) -> u32 {
        clog2(self.s_total as u128)
    }

    /// Input-index width (0 when there are no or one input wires).
    pub fn ibits(&self) -> u32 {
        clog2((self.i_total as u128).max(1))
    }

    /// Transition-index width.
    pub fn tbits(&self) -> u32 {
        clog2(self.t_max as u128)
    }

    /// Structural validity of the description itself.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidInstance(msg));
        if self.s_total == 0 {
            return fail("s_total must be at least 1".into());
        }
        if self.t_max == 0 {
            return fail("t_max must be at least 1".into());
        }
        if self.i_total as usize > crate::fsm::MAX_WIDTH
            || self.o_total as usize > crate::fsm::MAX_WIDTH
        {
            return fail(format!(
                "at most {} input and output wires supported",
                crate::fsm::MAX_WIDTH
            ));
        }
        match self.arch {
            Arch::OneRam => {}
            Arch::TwoRam => {
                if self.ei_max.is_none() {
                    return fail("two-RAM instances need ei_max".into());
                }
            }
            Arch::ThreeRam => {
                if self.ei_max.is_none() {
                    return fail("three-RAM instances need ei_max".into());
                }
                match self.t_state_max {
                    None => return fail("three-RAM instances need t_state_max".into()),
                    Some(0) => return fail("t_state_max must be at least 1".into()),
                    Some(_) => {}
                }
            }
            Arch::MRam => {
                if self.stes.is_empty() {
                    return fail("mram instances need at least one ste".into());
                }
                for (i, ste) in self.stes.iter().enumerate() {
                    if ste.pseudo_states < 2 {
                        return fail(format!("ste {i} needs at least 2 pseudo-states"));
                    }
                }
                if self.stes.windows(2).any(|w| w[0].ei > w[1].ei) {
                    return fail("ste list must be sorted ascending by ei".into());
                }
                let capacity: u64 = self.stes.iter().map(|s| s.pseudo_states).sum();
                if capacity < self.s_total {
                    return fail(format!(
                        "ste pseudo-state capacity {capacity} below s_total {}",
                        self.s_total
                    ));
                }
            }
        }
        if self.arch != Arch::ThreeRam && self.t_state_max.is_some() {
            return fail(format!("{} instances take no t_state_max", self.arch));
        }
        if !matches!(self.arch, Arch::TwoRam | Arch::ThreeRam) && self.ei_max.is_some() {
            return fail(format!("{} instances take no ei_max", self.arch));
        }
        if self.arch != Arch::MRam && !self.stes.is_empty() {
            return fail(format!("{} instances take no ste list", self.arch));
        }
        Ok(())
    }
}

/// Shape of one physical RAM: depth is always a power of two; `bits` is
/// `depth * width`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RamShape {
    pub name: String,
    pub depth: u128,
    pub width: u32,
    pub bits: u128,
}

fn shape(name: String, depth_exp: u32, width: u32) -> Result<RamShape> {
    let depth = pow2(depth_exp)?;
    let bits = mul(depth, width as u128)?;
    Ok(RamShape {
        name,
        depth,
        width,
        bits,
    })
}

/// The RAM shapes of an instance, in the canonical section order used by
/// bitstreams.
///
/// * `one`: `state_transition` = `2^(sbits + i_total) x (sbits + o_total)`.
/// * `two`: `input_select` = `2^sbits x (ei_max * ibits)`;
///   `state_transition` = `2^(sbits + ei_max) x (sbits + o_total)`.
/// * `three`: `input_select` as in `two`;
///   `state_transition` = `2^(sbits + ei_max) x clog2(t_state_max)`;
///   `transition_code` = `2^(sbits + clog2(t_state_max)) x (sbits + o_total)`.
/// * `mram`: `state_map` = `2^sbits x (clog2(s_ste_max) + clog2(num_ste))`;
///   `transition_code` = `2^tbits x (sbits + o_total)`; then per STE `i`:
///   `input_select_i` = `2^clog2(ps_i) x (ei_i * ibits)` and
///   `state_transition_i` = `2^(clog2(ps_i) + ei_i) x tbits`.
pub fn ram_shapes(inst: &InstanceSpec) -> Result<Vec<RamShape>> {
    inst.validate()?;
    let sbits = inst.sbits();
    let ibits = inst.ibits();
    let code_width = sbits + inst.o_total;
    match inst.arch {
        Arch::OneRam => Ok(vec![shape(
            "state_transition".into(),
            sbits + inst.i_total,
            code_width,
        )?]),
        Arch::TwoRam => {
            let ei_max = inst.ei_max.unwrap();
            Ok(vec![
                shape("input_select".into(), sbits, ei_max * ibits)?,
                shape("state_transition".into(), sbits + ei_max, code_width)?,
            ])
        }
        Arch::ThreeRam => {
            let ei_max = inst.ei_max.unwrap();
            let tsbits = clog2(inst.t_state_max.unwrap() as u128);
            Ok(vec![
                shape("input_select".into(), sbits, ei_max * ibits)?,
                shape("state_transition".into(), sbits + ei_max, tsbits)?,
                shape("transition_code".into(), sbits + tsbits, code_width)?,
            ])
        }
        Arch::MRam => {
            let tbits = inst.tbits();
            let map_width = clog2(inst.s_ste_max() as u128) + clog2(inst.num_ste() as u128);
            let mut shapes = vec![
                shape("state_map".into(), sbits, map_width)?,
                shape("transition_code".into(), tbits, code_width)?,
            ];
            for (i, ste) in inst.stes.iter().enumerate() {
                let psbits = clog2(ste.pseudo_states as u128);
                shapes.push(shape(format!("input_select_{i}"), psbits, ste.ei * ibits)?);
                shapes.push(shape(
                    format!("state_transition_{i}"),
                    psbits + ste.ei,
                    tbits,
                )?);
            }
            Ok(shapes)
        }
    }
}

/// Total RAM bits of an instance: the sum over its shapes.
pub fn total_bits(inst: &InstanceSpec) -> Result<u128> {
    let mut total = 0u128;
    for s in ram_shapes(inst)? {
        total = total.checked_add(s.bits).ok_or(Error::SizeOverflow)?;
    }
    Ok(total)
}

/// Greedy state placement for `mram` instances: states descending by
/// effective-input count (ties by state code ascending) each take the
/// lowest-`ei` STE that is adequate (`ste.ei >= state.ei`) and still has a
/// free pseudo-state slot. Returns per-state `(ste index, pseudo_state)`,
/// with pseudo-states numbered in placement order within each STE, or the
/// code of the first state that fits nowhere.
pub(crate) fn greedy_placement(
    inst: &InstanceSpec,
    prof: &FsmProfile,
) -> std::result::Result<Vec<(usize, u64)>, usize> {
    let mut order: Vec<usize> = (0..prof.per_state.len()).collect();
    order.sort_by_key(|&s| (std::cmp::Reverse(prof.per_state[s].ei_count), s));
    let mut used = vec![0u64; inst.stes.len()];
    let mut placed = vec![(0usize, 0u64); prof.per_state.len()];
    for s in order {
        let need = prof.per_state[s].ei_count;
        let slot = inst
            .stes
            .iter()
            .enumerate()
            .find(|(i, ste)| ste.ei >= need && used[*i] < ste.pseudo_states);
        match slot {
            Some((i, _)) => {
                placed[s] = (i, used[i]);
                used[i] += 1;
            }
            None => return Err(s),
        }
    }
    Ok(placed)
}

/// Can this instance host this machine? `Ok(())` when every capacity bound
/// holds, `Err(reason)` naming the first violated bound otherwise.
pub fn hostable(inst: &InstanceSpec, prof: &FsmProfile) -> std::result::Result<(), String> {
    if prof.s_total as u64 > inst.s_total {
        return Err(format!(
            "machine has {} states, instance holds {}",
            prof.s_total, inst.s_total
        ));
    }
    if prof.i_total > inst.i_total {
        return Err(format!(
            "machine has {} inputs, instance has {}",
            prof.i_total, inst.i_total
        ));
    }
    if prof.o_total > inst.o_total {
        return Err(format!(
            "machine has {} outputs, instance has {}",
            prof.o_total, inst.o_total
        ));
    }
    if prof.t_max() as u64 > inst.t_max {
        return Err(format!(
            "machine has {} distinct transitions, instance holds {}",
            prof.t_max(),
            inst.t_max
        ));
    }
    match inst.arch {
        Arch::OneRam => {}
        Arch::TwoRam | Arch::ThreeRam => {
            let ei_max = inst.ei_max.unwrap();
            if prof.ei_max > ei_max {
                return Err(format!(
                    "machine needs {} effective inputs per state, instance selects {ei_max}",
                    prof.ei_max
                ));
            }
            if inst.arch == Arch::ThreeRam {
                let cap = inst.t_state_max.unwrap();
                if prof.t_state_max as u64 > cap {
                    return Err(format!(
                        "machine needs {} transitions per state, instance holds {cap}",
                        prof.t_state_max
                    ));
                }
            }
        }
        Arch::MRam => {
            if let Err(state) = greedy_placement(inst, prof) {
                return Err(format!(
                    "no STE with free capacity can take state {state} ({} effective inputs)",
                    prof.per_state[state].ei_count
                ));
            }
        }
    }
    Ok(())
}

/// Render an instance as its textual config form: `arch`, the scalar fields
/// that apply, then one `ste <ei> <pseudo_states>` line per STE.
pub fn emit_instance(inst: &InstanceSpec) -> String {
    let mut out = String::new();
    out.push_str(&format!("arch {}\n", inst.arch));
    out.push_str(&format!("s_total {}\n", inst.s_total));
    out.push_str(&format!("i_total {}\n", inst.i_total));
    out.push_str(&format!("o_total {}\n", inst.o_total));
    out.push_str(&format!("t_max {}\n", inst.t_max));
    if let Some(t) = inst.t_state_max {
        out.push_str(&format!("t_state_max {t}\n"));
    }
    if let Some(e) = inst.ei_max {
        out.push_str(&format!("ei_max {e}\n"));
    }
    for ste in &inst.stes {
        out.push_str(&format!("ste {} {}\n", ste.ei, ste.pseudo_states));
    }
    out
}

/// Parse the textual config form written by [`emit_instance`]. Field order
/// is free; unknown keys are errors; the result is validated.
pub fn parse_instance(text: &str) -> Result<InstanceSpec> {
    let mut arch: Option<Arch> = None;
    let mut fields: std::collections::HashMap<&str, u64> = std::collections::HashMap::new();
    let mut stes: Vec<SteSpec> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| Error::Parse { line: line_no, msg };
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens[0] {
            "arch" => {
                if tokens.len() != 2 {
                    return Err(err("arch takes one value".into()));
                }
                arch = Some(
                    Arch::from_name(tokens[1])
                        .ok_or_else(|| err(format!("unknown architecture {:?}", tokens[1])))?,
                );
            }
            "ste" => {
                if tokens.len() != 3 {
                    return Err(err("ste takes <ei> <pseudo_states>".into()));
                }
                let ei = tokens[1]
                    .parse()
                    .map_err(|_| err("ste ei is not a number".into()))?;
                let pseudo_states = tokens[2]
                    .parse()
                    .map_err(|_| err("ste pseudo_states is not a number".into()))?;
                stes.push(SteSpec { ei, pseudo_states });
            }
            key @ ("s_total" | "i_total" | "o_total" | "t_max" | "t_state_max" | "ei_max") => {
                if tokens.len() != 2 {
                    return Err(err(format!("{key} takes one value")));
                }
                let value: u64 = tokens[1]
                    .parse()
                    .map_err(|_| err(format!("{key} is not a number")))?;
                if fields.insert(key, value).is_some() {
                    return Err(err(format!("{key} given twice")));
                }
            }
            other => return Err(err(format!("unknown config key {other:?}"))),
        }
    }
    let arch = arch.ok_or(Error::Parse {
        line: 0,
        msg: "config is missing the arch line".into(),
    })?;
    let need = |key: &str| -> Result<u64> {
        fields.get(key).copied().ok_or(Error::Parse {
            line: 0,
            msg: format!("config is missing {key}"),
        })
    };
    let inst = InstanceSpec {
        arch,
        s_total: need("s_total")?,
        i_total: need("i_total")? as u32,
        o_total: need("o_total")? as u32,
        t_max: need("t_max")?,
        t_state_max: fields.get("t_state_max").copied(),
        ei_max: fields.get("ei_max").copied().map(|v| v as u32),
        stes,
    };
    inst.validate()?;
    Ok(inst)
}
