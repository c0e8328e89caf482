//! The textual bitstream form, `OVLBITS v1`.
//!
//! ```text
//! OVLBITS v1
//! fsm <name>
//! arch <one|two|three|mram>
//! param <key>=<value>          # fixed order, see below
//! ste <i> ei=<e> ps=<p>        # mram only, ascending i
//! section <name> depth=<d> width=<w>
//! <hexword>                    # one word per line, ascending address
//! rle <count> <hexword>        # any maximal run of >= 4 equal words
//! end
//! ... more sections ...
//! ```
//!
//! Words are lowercase fixed-width hex, `max(1, ceil(width/4))` digits.
//! Params appear in the order `s_total, i_total, o_total, t_max,
//! [t_state_max], [ei_max], reset`; sections in the canonical order of
//! [`crate::arch::ram_shapes`]. The writer is deterministic, so equal
//! bitstreams produce byte-identical text.

use crate::arch::{ram_shapes, Arch, InstanceSpec, SteSpec};
use crate::error::{Error, Result};
use crate::mapper::{Bitstream, Section, DEFAULT_BIT_CAP};

const MAGIC: &str = "OVLBITS v1";
/// Equal-word runs at least this long are collapsed to one `rle` line.
const RLE_MIN: u64 = 4;

/// Render a bitstream. The inverse of [`read_bitstream`].
pub fn write_bitstream(b: &Bitstream) -> String {
    let mut out = String::new();
    out.push_str(MAGIC);
    out.push('\n');
    out.push_str(&format!("fsm {}\n", b.fsm_name));
    out.push_str(&format!("arch {}\n", b.inst.arch));
    out.push_str(&format!("param s_total={}\n", b.inst.s_total));
    out.push_str(&format!("param i_total={}\n", b.inst.i_total));
    out.push_str(&format!("param o_total={}\n", b.inst.o_total));
    out.push_str(&format!("param t_max={}\n", b.inst.t_max));
    if let Some(t) = b.inst.t_state_max {
        out.push_str(&format!("param t_state_max={t}\n"));
    }
    if let Some(e) = b.inst.ei_max {
        out.push_str(&format!("param ei_max={e}\n"));
    }
    out.push_str(&format!("param reset={}\n", b.reset));
    for (i, ste) in b.inst.stes.iter().enumerate() {
        out.push_str(&format!("ste {i} ei={} ps={}\n", ste.ei, ste.pseudo_states));
    }
    for section in &b.sections {
        out.push_str(&format!(
            "section {} depth={} width={}\n",
            section.name, section.depth, section.width
        ));
        let mut addr = 0u64;
        while addr < section.depth {
            let mut run = 1u64;
            while addr + run < section.depth && section.words_equal(addr, addr + run) {
                run += 1;
            }
            let hex = section.word_hex(addr);
            if run >= RLE_MIN {
                out.push_str(&format!("rle {run} {hex}\n"));
            } else {
                for _ in 0..run {
                    out.push_str(&hex);
                    out.push('\n');
                }
            }
            addr += run;
        }
        out.push_str("end\n");
    }
    out
}

/// Parse bitstream text with the default materialization cap.
pub fn read_bitstream(text: &str) -> Result<Bitstream> {
    read_bitstream_with_cap(text, DEFAULT_BIT_CAP)
}

/// Parse bitstream text, refusing to materialize more than `cap` RAM bits.
/// Validates the magic line, header completeness, section shapes against
/// the header-implied instance, word widths and word counts.
pub fn read_bitstream_with_cap(text: &str, cap: u128) -> Result<Bitstream> {
    let mut lines = text.lines().enumerate();
    let err = |line: usize, msg: String| Error::BitstreamFormat { line: line + 1, msg };

    let (first_no, first) = lines
        .next()
        .ok_or_else(|| err(0, "empty bitstream".into()))?;
    if first.trim_end() != MAGIC {
        return Err(Error::VersionMismatch {
            expected: MAGIC.into(),
            found: first.trim_end().into(),
        });
    }
    let _ = first_no;

    let mut fsm_name: Option<String> = None;
    let mut arch: Option<Arch> = None;
    let mut params: Vec<(String, u64)> = Vec::new();
    let mut stes: Vec<SteSpec> = Vec::new();

    // Header lines until the first section.
    let mut pending_section: Option<(usize, String)> = None;
    for (no, raw) in lines.by_ref() {
        let line = raw.trim_end();
        if line.is_empty() {
            return Err(err(no, "blank line inside bitstream".into()));
        }
        if let Some(rest) = line.strip_prefix("section ") {
            pending_section = Some((no, rest.to_string()));
            break;
        } else if let Some(rest) = line.strip_prefix("fsm ") {
            fsm_name = Some(rest.to_string());
        } else if let Some(rest) = line.strip_prefix("arch ") {
            arch =
                Some(Arch::from_name(rest).ok_or_else(|| {
                    err(no, format!("unknown architecture {rest:?}"))
                })?);
        } else if let Some(rest) = line.strip_prefix("param ") {
            let (key, value) = rest
                .split_once('=')
                .ok_or_else(|| err(no, "param needs key=value".into()))?;
            let value: u64 = value
                .parse()
                .map_err(|_| err(no, format!("param {key} is not a number")))?;
            params.push((key.to_string(), value));
        } else if let Some(rest) = line.strip_prefix("ste ") {
            let fields: Vec<&str> = rest.split_whitespace().collect();
            let bad = || err(no, "ste needs <i> ei=<e> ps=<p>".into());
            if fields.len() != 3 {
                return Err(bad());
            }
            let idx: usize = fields[0].parse().map_err(|_| bad())?;
            if idx != stes.len() {
                return Err(err(no, format!("ste index {idx} out of order")));
            }
            let ei = fields[1].strip_prefix("ei=").ok_or_else(bad)?;
            let ps = fields[2].strip_prefix("ps=").ok_or_else(bad)?;
            stes.push(SteSpec {
                ei: ei.parse().map_err(|_| bad())?,
                pseudo_states: ps.parse().map_err(|_| bad())?,
            });
        } else {
            return Err(err(no, format!("unexpected header line {line:?}")));
        }
    }

    let fsm_name = fsm_name.ok_or_else(|| err(0, "missing fsm line".into()))?;
    let arch = arch.ok_or_else(|| err(0, "missing arch line".into()))?;
    let param = |key: &str| -> Option<u64> {
        params
            .iter()
            .find_map(|(k, v)| (k == key).then_some(*v))
    };
    let missing = |key: &str| err(0, format!("missing param {key}"));
    let inst = InstanceSpec {
        arch,
        s_total: param("s_total").ok_or_else(|| missing("s_total"))?,
        i_total: param("i_total").ok_or_else(|| missing("i_total"))? as u32,
        o_total: param("o_total").ok_or_else(|| missing("o_total"))? as u32,
        t_max: param("t_max").ok_or_else(|| missing("t_max"))?,
        t_state_max: param("t_state_max"),
        ei_max: param("ei_max").map(|v| v as u32),
        stes,
    };
    let reset = param("reset").ok_or_else(|| missing("reset"))?;
    inst.validate()?;
    if reset >= inst.s_total {
        return Err(Error::ShapeMismatch(format!(
            "reset state {reset} outside s_total {}",
            inst.s_total
        )));
    }

    // The header fixes every section shape; read them in order.
    let shapes = ram_shapes(&inst)?;
    let mut needed = 0u128;
    for s in &shapes {
        needed = needed.checked_add(s.bits).ok_or(Error::SizeOverflow)?;
    }
    if needed > cap {
        return Err(Error::CapExceeded { needed, cap });
    }

    let mut sections: Vec<Section> = Vec::with_capacity(shapes.len());
    for shape in &shapes {
        let (no, decl) = pending_section.take().ok_or_else(|| {
            Error::ShapeMismatch(format!("missing section {}", shape.name))
        })?;
        let fields: Vec<&str> = decl.split_whitespace().collect();
        let bad = |msg: String| err(no, msg);
        if fields.len() != 3 {
            return Err(bad("section needs <name> depth=<d> width=<w>".into()));
        }
        let depth: u64 = fields[1]
            .strip_prefix("depth=")
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| bad("bad depth".into()))?;
        let width: u32 = fields[2]
            .strip_prefix("width=")
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| bad("bad width".into()))?;
        if fields[0] != shape.name || depth as u128 != shape.depth || width != shape.width {
            return Err(Error::ShapeMismatch(format!(
                "expected section {} depth={} width={}, found {} depth={depth} width={width}",
                shape.name, shape.depth, shape.width, fields[0]
            )));
        }
        let mut section = Section::new(shape.name.clone(), depth, width);
        let digits = (width as usize).div_ceil(4).max(1);
        let mut addr = 0u64;
        let mut done = false;
        for (no, raw) in lines.by_ref() {
            let line = raw.trim_end();
            if line == "end" {
                done = true;
                break;
            }
            let (count, hex) = match line.strip_prefix("rle ") {
                Some(rest) => {
                    let (count, hex) = rest
                        .split_once(' ')
                        .ok_or_else(|| err(no, "rle needs <count> <hexword>".into()))?;
                    let count: u64 = count
                        .parse()
                        .map_err(|_| err(no, "rle count is not a number".into()))?;
                    if count == 0 {
                        return Err(err(no, "rle count must be positive".into()));
                    }
                    (count, hex)
                }
                None => (1, line),
            };
            if hex.len() != digits {
                return Err(err(
                    no,
                    format!("word {hex:?} should be {digits} hex digits"),
                ));
            }
            if addr + count > depth {
                return Err(err(no, format!("section {} overflows its depth", shape.name)));
            }
            for a in addr..addr + count {
                section
                    .set_word_hex(a, hex)
                    .map_err(|msg| err(no, msg))?;
            }
            addr += count;
        }
        if !done {
            return Err(err(0, format!("section {} missing its end line", shape.name)));
        }
        if addr != depth {
            return Err(Error::ShapeMismatch(format!(
                "section {} holds {addr} words, depth is {depth}",
                shape.name
            )));
        }
        sections.push(section);

        // Find the next section declaration, if any.
        if let Some((no, raw)) = lines.next() {
            let line = raw.trim_end();
            let Some(rest) = line.strip_prefix("section ") else {
                return Err(err(no, format!("unexpected line {line:?} between sections")));
            };
            pending_section = Some((no, rest.to_string()));
        }
    }
    if let Some((no, decl)) = pending_section {
        return Err(err(no, format!("unexpected extra section {decl:?}")));
    }

    Ok(Bitstream {
        fsm_name,
        inst,
        reset,
        sections,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arch::Arch;
    use crate::fsm::canonicalize;
    use crate::kiss;
    use crate::mapper::map;
    use crate::profile::profile;
    use crate::tailor::tailor_single;

    fn chain5_bitstream(arch: Arch) -> Bitstream {
        let text = "\
.i 6
.o 0
.r s0
1----- s0 s1
1----- s1 s2
1----- s2 s3
1----- s3 s4
-11111 s4 s0
";
        let mut parsed = kiss::parse(text).unwrap();
        parsed.fsm.name = "chain5".into();
        let fsm = canonicalize(&parsed.fsm).unwrap();
        let prof = profile(&fsm).unwrap();
        map(&fsm, &prof, &tailor_single(&prof, arch), DEFAULT_BIT_CAP).unwrap()
    }

    #[test]
    fn round_trip_all_architectures() {
        for arch in Arch::ALL {
            let b = chain5_bitstream(arch);
            let text = write_bitstream(&b);
            let back = read_bitstream(&text).unwrap();
            assert_eq!(back, b, "{arch}");
            // write(read(text)) is byte-identical too
            assert_eq!(write_bitstream(&back), text, "{arch}");
        }
    }

    #[test]
    fn text_shape_of_the_mram_stream() {
        let text = write_bitstream(&chain5_bitstream(Arch::MRam));
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "OVLBITS v1");
        assert_eq!(lines[1], "fsm chain5");
        assert_eq!(lines[2], "arch mram");
        assert!(lines.contains(&"param reset=0"));
        assert!(lines.contains(&"ste 0 ei=1 ps=4"));
        assert!(lines.contains(&"ste 1 ei=5 ps=2"));
        assert!(lines.contains(&"section state_map depth=8 width=3"));
        // STE1's image: 31 self-loop words, the escape word, 32 spare words.
        assert!(lines.contains(&"rle 31 4"));
        assert!(lines.contains(&"rle 32 0"));
        // input_select_1 carries the packed slot list 0x58d1.
        assert!(lines.contains(&"58d1"));
        assert_eq!(lines.iter().filter(|l| **l == "end").count(), 6);
    }

    #[test]
    fn runs_shorter_than_four_stay_literal() {
        let text = write_bitstream(&chain5_bitstream(Arch::MRam));
        // state_map ends with three zero words: literal, not rle.
        let after: Vec<&str> = text
            .lines()
            .skip_while(|l| !l.starts_with("section state_map"))
            .take_while(|l| *l != "end")
            .collect();
        assert_eq!(after[1..], ["0", "1", "2", "3", "4", "0", "0", "0"]);
    }

    #[test]
    fn version_mismatch_is_its_own_error() {
        assert!(matches!(
            read_bitstream("OVLBITS v2\nfsm x\n"),
            Err(Error::VersionMismatch { .. })
        ));
    }

    #[test]
    fn corrupt_words_are_rejected() {
        let good = write_bitstream(&chain5_bitstream(Arch::MRam));
        // state_map width is 3: words are one digit, "9" needs four bits.
        let bad = good.replacen("\n1\n2\n3\n4\n", "\n1\n2\n3\n9\n", 1);
        assert_ne!(good, bad);
        let err = read_bitstream(&bad).unwrap_err();
        assert!(matches!(err, Error::BitstreamFormat { .. }), "{err:?}");
    }

    #[test]
    fn word_count_must_match_depth() {
        let good = write_bitstream(&chain5_bitstream(Arch::MRam));
        let bad = good.replacen("rle 32 0", "rle 31 0", 1);
        assert!(matches!(
            read_bitstream(&bad),
            Err(Error::ShapeMismatch(_))
        ));
        let bad = good.replacen("rle 32 0", "rle 33 0", 1);
        assert!(read_bitstream(&bad).is_err());
    }

    #[test]
    fn tampered_shapes_are_rejected() {
        let good = write_bitstream(&chain5_bitstream(Arch::MRam));
        let bad = good.replacen("section state_map depth=8", "section state_map depth=16", 1);
        assert!(read_bitstream(&bad).is_err());
    }

    #[test]
    fn cap_applies_to_reading_too() {
        let text = write_bitstream(&chain5_bitstream(Arch::OneRam)); // 1536 bits
        assert!(matches!(
            read_bitstream_with_cap(&text, 100),
            Err(Error::CapExceeded { .. })
        ));
    }

    #[test]
    fn zero_width_sections_round_trip() {
        // A one-state machine on `three` has two width-0 sections.
        let text = ".i 1\n.o 1\n- s0 s0 1\n";
        let fsm = canonicalize(&kiss::parse(text).unwrap().fsm).unwrap();
        let prof = profile(&fsm).unwrap();
        let b = map(
            &fsm,
            &prof,
            &tailor_single(&prof, Arch::ThreeRam),
            DEFAULT_BIT_CAP,
        )
        .unwrap();
        let rendered = write_bitstream(&b);
        assert!(rendered.contains("section input_select depth=1 width=0\n0\nend\n"));
        assert_eq!(read_bitstream(&rendered).unwrap(), b);
    }
}
