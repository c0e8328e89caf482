//! KISS2 reader and writer.
//!
//! The accepted dialect: directives `.i`, `.o`, `.s`, `.p`, `.r`, transition
//! rows `<inputs> <src> <dst> <outputs>`, `#` comments, `.e` as an optional
//! end marker. `.s` and `.p` are cross-checked against the actual state and
//! row counts; a mismatch is a warning, not an error. When `.o 0` (or `.i 0`)
//! is declared, the corresponding row token is omitted entirely.

use crate::error::{Error, Result};
use crate::fsm::{Cube, FsmIr, Ternary};
use std::collections::HashMap;

/// Parse result: the machine plus any non-fatal complaints about the text.
#[derive(Debug)]
pub struct Parsed {
    pub fsm: FsmIr,
    pub warnings: Vec<String>,
}

struct RawRow {
    line: usize,
    inputs: Ternary,
    src: String,
    dst: String,
    outputs: Ternary,
}

/// Parse KISS2 text. States are numbered by first appearance in the rows
/// (source before destination); that number is the state code everywhere
/// else in the toolkit. The reset state is `.r`'s argument, or the source
/// of the first row when `.r` is absent.
pub fn parse(text: &str) -> Result<Parsed> {
    let mut warnings = Vec::new();
    let mut num_inputs: Option<u32> = None;
    let mut num_outputs: Option<u32> = None;
    let mut declared_states: Option<usize> = None;
    let mut declared_rows: Option<usize> = None;
    let mut reset_name: Option<String> = None;
    let mut rows: Vec<RawRow> = Vec::new();
    let mut ended = false;

    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw_line.find('#') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if ended {
            warnings.push(format!("line {line_no}: content after .e ignored"));
            continue;
        }
        let err = |msg: String| Error::Parse { line: line_no, msg };

        if let Some(rest) = line.strip_prefix('.') {
            let mut parts = rest.split_whitespace();
            let directive = parts.next().unwrap_or("");
            let arg = parts.next();
            if parts.next().is_some() {
                return Err(err(format!(".{directive} takes at most one argument")));
            }
            match directive {
                "i" | "o" | "s" | "p" => {
                    let n: usize = arg
                        .ok_or_else(|| err(format!(".{directive} needs a count")))?
                        .parse()
                        .map_err(|_| err(format!(".{directive} count is not a number")))?;
                    let slot = match directive {
                        "i" => {
                            check_width(n, "inputs")?;
                            num_inputs.replace(n as u32).map(|_| "i")
                        }
                        "o" => {
                            check_width(n, "outputs")?;
                            num_outputs.replace(n as u32).map(|_| "o")
                        }
                        "s" => declared_states.replace(n).map(|_| "s"),
                        _ => declared_rows.replace(n).map(|_| "p"),
                    };
                    if slot.is_some() {
                        return Err(err(format!(".{directive} given twice")));
                    }
                }
                "r" => {
                    let name = arg.ok_or_else(|| err(".r needs a state name".into()))?;
                    if reset_name.replace(name.to_string()).is_some() {
                        return Err(err(".r given twice".into()));
                    }
                }
                "e" => ended = true,
                other => warnings.push(format!(
                    "line {line_no}: unrecognized directive .{other} skipped"
                )),
            }
            continue;
        }

        // A transition row. Token count depends on the declared widths.
        let ni = num_inputs.ok_or_else(|| err("transition row before .i".into()))?;
        let no = num_outputs.ok_or_else(|| err("transition row before .o".into()))?;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        let expected = 2 + usize::from(ni > 0) + usize::from(no > 0);
        if tokens.len() != expected {
            return Err(err(format!(
                "expected {expected} fields on a transition row, got {}",
                tokens.len()
            )));
        }
        let mut pos = 0;
        let inputs = if ni > 0 {
            pos += 1;
            Ternary::from_text(tokens[0]).map_err(&err)?
        } else {
            Ternary::any(0)
        };
        if inputs.width != ni {
            return Err(err(format!(
                "input pattern has {} positions, .i declared {ni}",
                inputs.width
            )));
        }
        let src = tokens[pos].to_string();
        let dst = tokens[pos + 1].to_string();
        let outputs = if no > 0 {
            Ternary::from_text(tokens[pos + 2]).map_err(&err)?
        } else {
            Ternary::any(0)
        };
        if outputs.width != no {
            return Err(err(format!(
                "output pattern has {} positions, .o declared {no}",
                outputs.width
            )));
        }
        rows.push(RawRow {
            line: line_no,
            inputs,
            src,
            dst,
            outputs,
        });
    }

    if rows.is_empty() {
        return Err(Error::EmptyMachine);
    }

    // Number states by first appearance, source before destination.
    let mut states: Vec<String> = Vec::new();
    let mut codes: HashMap<String, usize> = HashMap::new();
    let mut intern = |name: &str, states: &mut Vec<String>| -> usize {
        *codes.entry(name.to_string()).or_insert_with(|| {
            states.push(name.to_string());
            states.len() - 1
        })
    };
    let mut cubes = Vec::with_capacity(rows.len());
    for row in &rows {
        let src = intern(&row.src, &mut states);
        let dst = intern(&row.dst, &mut states);
        cubes.push(Cube {
            inputs: row.inputs,
            src,
            dst,
            outputs: row.outputs,
        });
    }

    let reset_state = match &reset_name {
        Some(name) => *codes.get(name).ok_or_else(|| Error::Parse {
            line: 0,
            msg: format!(".r names state {name:?}, which appears in no transition row"),
        })?,
        None => cubes[0].src,
    };

    if let Some(n) = declared_states {
        if n != states.len() {
            warnings.push(format!(
                ".s declares {n} states but the rows define {}",
                states.len()
            ));
        }
    }
    if let Some(n) = declared_rows {
        if n != rows.len() {
            warnings.push(format!(
                ".p declares {n} rows but {} are present",
                rows.len()
            ));
        }
    }
    let _ = rows.last().map(|r| r.line); // row line numbers only matter for errors

    let fsm = FsmIr {
        name: "fsm".to_string(),
        num_inputs: num_inputs.unwrap(),
        num_outputs: num_outputs.unwrap(),
        states,
        reset_state,
        cubes,
    };
    fsm.validate()?;
    Ok(Parsed { fsm, warnings })
}

fn check_width(n: usize, what: &'static str) -> Result<()> {
    if n > crate::fsm::MAX_WIDTH {
        Err(Error::TooWide {
            what,
            n,
            max: crate::fsm::MAX_WIDTH,
        })
    } else {
        Ok(())
    }
}

/// Write a machine back out in canonical KISS2 form: `.i .o .s .p .r`, then
/// the explicit cubes in their original order, then `.e`. Implicit default
/// cubes are never written.
pub fn emit(fsm: &FsmIr) -> String {
    let mut out = String::new();
    out.push_str(&format!(".i {}\n", fsm.num_inputs));
    out.push_str(&format!(".o {}\n", fsm.num_outputs));
    out.push_str(&format!(".s {}\n", fsm.states.len()));
    out.push_str(&format!(".p {}\n", fsm.cubes.len()));
    out.push_str(&format!(".r {}\n", fsm.states[fsm.reset_state]));
    for cube in &fsm.cubes {
        let mut fields: Vec<String> = Vec::with_capacity(4);
        if fsm.num_inputs > 0 {
            fields.push(cube.inputs.to_text());
        }
        fields.push(fsm.states[cube.src].clone());
        fields.push(fsm.states[cube.dst].clone());
        if fsm.num_outputs > 0 {
            fields.push(cube.outputs.to_text());
        }
        out.push_str(&fields.join(" "));
        out.push('\n');
    }
    out.push_str(".e\n");
    out
}
