//! FSM intermediate representation and the reference interpreter.
//!
//! A machine is a list of transition cubes over ternary input patterns, in
//! file order. [`canonicalize`] checks the cubes for conflicts, normalizes
//! don't-care outputs to `0`, and records which states need the implicit
//! default transition (self-loop, all-zero outputs) for uncovered input
//! space. The canonical machine doubles as the bit-exact reference
//! interpreter that every overlay architecture is verified against.

use crate::error::{Error, Result};

/// Maximum number of inputs or outputs a machine may declare. Input vectors,
/// output vectors and state codes are carried in `u64` words throughout.
pub const MAX_WIDTH: usize = 64;

/// A ternary pattern over `width` positions. Bit `j` of `care`/`value`
/// corresponds to position `j`, which is the `j`-th character of the textual
/// form (leftmost character = position 0). `care` bit set means the position
/// holds a literal; clear means don't-care. `value` bits are zero wherever
/// `care` is zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ternary {
    pub width: u32,
    pub care: u64,
    pub value: u64,
}

impl Ternary {
    /// All-don't-care pattern.
    pub fn any(width: u32) -> Self {
        Ternary {
            width,
            care: 0,
            value: 0,
        }
    }

    pub fn from_text(s: &str) -> std::result::Result<Self, String> {
        let width = s.chars().count();
        if width > MAX_WIDTH {
            return Err(format!(
                "pattern has {width} positions, at most {MAX_WIDTH} supported"
            ));
        }
        let mut care = 0u64;
        let mut value = 0u64;
        for (j, ch) in s.chars().enumerate() {
            match ch {
                '0' => care |= 1 << j,
                '1' => {
                    care |= 1 << j;
                    value |= 1 << j;
                }
                '-' => {}
                other => return Err(format!("bad pattern character {other:?}")),
            }
        }
        Ok(Ternary {
            width: width as u32,
            care,
            value,
        })
    }

    pub fn to_text(self) -> String {
        (0..self.width)
            .map(|j| {
                if self.care >> j & 1 == 0 {
                    '-'
                } else if self.value >> j & 1 == 1 {
                    '1'
                } else {
                    '0'
                }
            })
            .collect()
    }

    /// Does a concrete bit vector satisfy the pattern?
    pub fn matches(self, bits: u64) -> bool {
        (bits ^ self.value) & self.care == 0
    }

    /// Do the two patterns share at least one concrete vector?
    pub fn intersects(self, other: Ternary) -> bool {
        (self.value ^ other.value) & self.care & other.care == 0
    }

    /// `true` when every position is don't-care.
    pub fn is_any(self) -> bool {
        self.care == 0
    }
}

/// One transition row: when the machine is in `src` and the inputs satisfy
/// `inputs`, it moves to `dst` and drives `outputs` in the same cycle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cube {
    pub inputs: Ternary,
    pub src: usize,
    pub dst: usize,
    pub outputs: Ternary,
}

/// A parsed machine, faithful to its source: cubes in file order, states in
/// first-appearance order (their index is the state code used everywhere
/// downstream), output don't-cares still present.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FsmIr {
    pub name: String,
    pub num_inputs: u32,
    pub num_outputs: u32,
    /// State names; the index of a name is its code.
    pub states: Vec<String>,
    /// Code of the reset state.
    pub reset_state: usize,
    pub cubes: Vec<Cube>,
}

impl FsmIr {
    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    /// Structural sanity: at least one state and one cube, indices in range,
    /// pattern widths consistent with the declared counts.
    pub fn validate(&self) -> Result<()> {
        if self.cubes.is_empty() || self.states.is_empty() {
            return Err(Error::EmptyMachine);
        }
        if self.num_inputs as usize > MAX_WIDTH {
            return Err(Error::TooWide {
                what: "inputs",
                n: self.num_inputs as usize,
                max: MAX_WIDTH,
            });
        }
        if self.num_outputs as usize > MAX_WIDTH {
            return Err(Error::TooWide {
                what: "outputs",
                n: self.num_outputs as usize,
                max: MAX_WIDTH,
            });
        }
        if self.reset_state >= self.states.len() {
            return Err(Error::Parse {
                line: 0,
                msg: format!("reset state code {} out of range", self.reset_state),
            });
        }
        for (i, c) in self.cubes.iter().enumerate() {
            if c.src >= self.states.len() || c.dst >= self.states.len() {
                return Err(Error::Parse {
                    line: 0,
                    msg: format!("cube {i} references an unknown state"),
                });
            }
            if c.inputs.width != self.num_inputs || c.outputs.width != self.num_outputs {
                return Err(Error::Parse {
                    line: 0,
                    msg: format!("cube {i} pattern width disagrees with declared counts"),
                });
            }
        }
        Ok(())
    }
}

/// A machine checked for conflicts and normalized for compilation. Explicit
/// cubes keep their file order; each state additionally carries an implicit
/// default cube (self-loop, all-zero outputs) when its explicit cubes do not
/// cover the whole input space.
#[derive(Debug, Clone)]
pub struct CanonicalFsm {
    /// The source machine with output don't-cares rewritten to `0`.
    pub base: FsmIr,
    /// Per state: indices into `base.cubes`, in file order.
    state_cubes: Vec<Vec<usize>>,
    /// Per state: whether the implicit default cube exists.
    has_default: Vec<bool>,
    /// `true` when no state needed a default cube.
    pub coverage_complete: bool,
}

/// Check a machine for conflicting overlaps, normalize output don't-cares to
/// `0`, and record where implicit default cubes are needed.
///
/// Two cubes of the same state conflict when their input patterns intersect
/// but their `(dst, outputs)` differ after normalization; that is fatal.
/// Consistent overlaps are permitted.
pub fn canonicalize(fsm: &FsmIr) -> Result<CanonicalFsm> {
    fsm.validate()?;
    let mut base = fsm.clone();
    for cube in &mut base.cubes {
        // '-' outputs become '0': value bits are already clear there, so
        // completing the care mask is the whole rewrite.
        cube.outputs.care = mask(base.num_outputs);
    }

    let mut state_cubes = vec![Vec::new(); base.states.len()];
    for (i, cube) in base.cubes.iter().enumerate() {
        state_cubes[cube.src].push(i);
    }

    for (s, idxs) in state_cubes.iter().enumerate() {
        for (a, &ia) in idxs.iter().enumerate() {
            for &ib in &idxs[a + 1..] {
                let (ca, cb) = (&base.cubes[ia], &base.cubes[ib]);
                let same_code = ca.dst == cb.dst && ca.outputs.value == cb.outputs.value;
                if !same_code && ca.inputs.intersects(cb.inputs) {
                    return Err(Error::Ambiguous {
                        state: base.states[s].clone(),
                        a: ia,
                        b: ib,
                    });
                }
            }
        }
    }

    let has_default: Vec<bool> = state_cubes
        .iter()
        .map(|idxs| {
            let patterns: Vec<Ternary> = idxs.iter().map(|&i| base.cubes[i].inputs).collect();
            !covers_everything(&patterns)
        })
        .collect();
    let coverage_complete = !has_default.iter().any(|&d| d);

    Ok(CanonicalFsm {
        base,
        state_cubes,
        has_default,
        coverage_complete,
    })
}

/// Low `width` bits set.
pub(crate) fn mask(width: u32) -> u64 {
    if width == 0 {
        0
    } else if width == 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}

/// Exact tautology check: does the union of the patterns cover every
/// concrete vector? Recursive cofactoring on literal positions; the
/// recursion depth is bounded by the number of distinct cared-for positions.
fn covers_everything(patterns: &[Ternary]) -> bool {
    if patterns.iter().any(|p| p.is_any()) {
        return true;
    }
    let union_care = patterns.iter().fold(0u64, |m, p| m | p.care);
    if union_care == 0 {
        // No patterns at all (the all-dash case returned above).
        return false;
    }
    let pos = union_care.trailing_zeros();
    let bit = 1u64 << pos;
    for branch in [0u64, bit] {
        let cofactor: Vec<Ternary> = patterns
            .iter()
            .filter(|p| p.care & bit == 0 || p.value & bit == branch)
            .map(|p| Ternary {
                width: p.width,
                care: p.care & !bit,
                value: p.value & !bit,
            })
            .collect();
        if cofactor.is_empty() || !covers_everything(&cofactor) {
            return false;
        }
    }
    true
}

impl CanonicalFsm {
    pub fn num_inputs(&self) -> u32 {
        self.base.num_inputs
    }

    pub fn num_outputs(&self) -> u32 {
        self.base.num_outputs
    }

    pub fn state_count(&self) -> usize {
        self.base.states.len()
    }

    pub fn reset_state(&self) -> usize {
        self.base.reset_state
    }

    /// Indices into `base.cubes` of the explicit cubes of `state`, in file
    /// order.
    pub fn cubes_of(&self, state: usize) -> &[usize] {
        &self.state_cubes[state]
    }

    /// Does `state` carry the implicit default cube?
    pub fn has_default(&self, state: usize) -> bool {
        self.has_default[state]
    }

    /// The default transition of `state`, if one exists: self-loop with
    /// all-zero outputs.
    pub fn default_transition(&self, state: usize) -> Option<(usize, u64)> {
        self.has_default[state].then_some((state, 0))
    }

    /// One combinational evaluation: next state and same-cycle outputs for
    /// the given current state and input vector. Explicit cubes are scanned
    /// in file order; consistent overlaps make the result order-independent.
    pub fn step(&self, state: usize, inputs: u64) -> (usize, u64) {
        let inputs = inputs & mask(self.base.num_inputs);
        for &ci in &self.state_cubes[state] {
            let cube = &self.base.cubes[ci];
            if cube.inputs.matches(inputs) {
                return (cube.dst, cube.outputs.value);
            }
        }
        (state, 0)
    }

    /// Run the machine from reset over a stimulus, one input vector per
    /// cycle. Record `i` holds the registered state at the start of cycle
    /// `i` and the outputs driven during it.
    pub fn simulate(&self, stimulus: &[u64]) -> Trace {
        let mut records = Vec::with_capacity(stimulus.len());
        let mut state = self.base.reset_state;
        for (cycle, &inputs) in stimulus.iter().enumerate() {
            let inputs = inputs & mask(self.base.num_inputs);
            let (next, outputs) = self.step(state, inputs);
            records.push(TraceRecord {
                cycle,
                inputs,
                state: state as u64,
                outputs,
            });
            state = next;
        }
        Trace {
            records,
            input_width: self.base.num_inputs,
            output_width: self.base.num_outputs,
            final_state: state as u64,
        }
    }

    /// States that can follow `state` in one cycle. Every explicit cube is
    /// satisfiable, so its target is reachable; the default adds the state
    /// itself.
    pub fn successors(&self, state: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self.state_cubes[state]
            .iter()
            .map(|&ci| self.base.cubes[ci].dst)
            .collect();
        if self.has_default[state] {
            out.push(state);
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// All states reachable from reset, ascending by code.
    pub fn reachable_states(&self) -> Vec<usize> {
        let mut seen = vec![false; self.state_count()];
        let mut queue = vec![self.base.reset_state];
        seen[self.base.reset_state] = true;
        while let Some(s) = queue.pop() {
            for n in self.successors(s) {
                if !seen[n] {
                    seen[n] = true;
                    queue.push(n);
                }
            }
        }
        (0..self.state_count()).filter(|&s| seen[s]).collect()
    }
}

/// One simulation record: the registered state at the start of the cycle,
/// the inputs applied during it, and the outputs driven in the same cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceRecord {
    pub cycle: usize,
    pub inputs: u64,
    pub state: u64,
    pub outputs: u64,
}

/// A complete simulation run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
    pub input_width: u32,
    pub output_width: u32,
    /// Registered state after the last cycle.
    pub final_state: u64,
}
