//! Area and compile-time comparison tables across architectures.
//!
//! [`area_table`] sizes a minimally tailored instance of each requested
//! architecture for each benchmark and tabulates exact RAM bit totals plus
//! the relative savings of the per-engine architecture; [`timing_report`]
//! measures the wall-clock cost of the profile → tailor → map pipeline.

use crate::arch::{total_bits, Arch};
use crate::fsm::CanonicalFsm;
use crate::mapper::{map, DEFAULT_BIT_CAP};
use crate::profile::{profile, FsmProfile};
use crate::tailor::{tailor_multi, tailor_single};
use std::time::Instant;

/// One benchmark line of an [`AreaTable`].
#[derive(Debug, Clone, PartialEq)]
pub struct AreaRow {
    pub name: String,
    /// True when the row sizes one shared instance for several machines.
    pub envelope: bool,
    /// Total RAM bits per architecture, parallel to `AreaTable::archs`.
    /// A benchmark that cannot be sized carries its error text instead.
    pub bits: Vec<Result<u128, String>>,
    /// Exact savings ratio `1 - mram/three`, when both columns exist.
    pub vs_three: Option<f64>,
    /// Exact savings ratio `1 - mram/two`, when both columns exist.
    pub vs_two: Option<f64>,
}

/// An aggregate line of an [`AreaTable`]. Bit columns that cannot be
/// aggregated (no surviving values) hold `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub name: String,
    pub bits: Vec<Option<f64>>,
    pub vs_three: Option<f64>,
    pub vs_two: Option<f64>,
}

/// Exact memory-bit comparison across architectures.
#[derive(Debug, Clone, PartialEq)]
pub struct AreaTable {
    pub archs: Vec<Arch>,
    pub rows: Vec<AreaRow>,
    /// `average`, `median`, `trimmed average` (largest value per column
    /// dropped) over the single-machine rows, then `total average` over
    /// every row including envelopes.
    pub summary: Vec<SummaryRow>,
}

/// Whole-percent rendering of a savings ratio, truncated toward zero, so
/// 0.2783 prints as 27 and -0.334 as -33.
pub(crate) fn percent_trunc(ratio: f64) -> i64 {
    (ratio * 100.0) as i64
}

fn ratio(bits: &[Result<u128, String>], m: Option<usize>, other: Option<usize>) -> Option<f64> {
    let (m, other) = (m?, other?);
    match (&bits[m], &bits[other]) {
        (Ok(m), Ok(o)) if *o > 0 => Some(1.0 - *m as f64 / *o as f64),
        _ => None,
    }
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

fn median(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let mut xs = xs.to_vec();
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len();
    Some(if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    })
}

/// Drop one occurrence of the maximum, then average what remains.
fn trimmed_mean(xs: &[f64]) -> Option<f64> {
    if xs.len() < 2 {
        return None;
    }
    let mut xs = xs.to_vec();
    xs.sort_by(|a, b| a.total_cmp(b));
    xs.pop();
    mean(&xs)
}

/// Size every benchmark on every architecture. Each entry names one row;
/// an entry holding several profiles becomes an envelope row — one shared
/// instance tailored to host each of its machines in turn.
pub fn area_table(benchmarks: &[(String, Vec<FsmProfile>)], archs: &[Arch]) -> AreaTable {
    let mram = archs.iter().position(|&a| a == Arch::MRam);
    let three = archs.iter().position(|&a| a == Arch::ThreeRam);
    let two = archs.iter().position(|&a| a == Arch::TwoRam);

    let compute = |(name, profiles): &(String, Vec<FsmProfile>)| -> AreaRow {
        let bits: Vec<Result<u128, String>> = archs
            .iter()
            .map(|&arch| {
                let inst = if profiles.len() == 1 {
                    tailor_single(&profiles[0], arch)
                } else {
                    tailor_multi(profiles, arch)
                };
                total_bits(&inst).map_err(|e| e.to_string())
            })
            .collect();
        let vs_three = ratio(&bits, mram, three);
        let vs_two = ratio(&bits, mram, two);
        AreaRow {
            name: name.clone(),
            envelope: profiles.len() > 1,
            bits,
            vs_three,
            vs_two,
        }
    };

    #[cfg(feature = "parallel")]
    let rows: Vec<AreaRow> = {
        use rayon::prelude::*;
        benchmarks.par_iter().map(compute).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let rows: Vec<AreaRow> = benchmarks.iter().map(compute).collect();

    // Aggregates: per-column over the single-machine rows, plus a final
    // average over everything including envelope rows.
    let singles: Vec<&AreaRow> = rows.iter().filter(|r| !r.envelope).collect();
    let column = |rows: &[&AreaRow], c: usize| -> Vec<f64> {
        rows.iter()
            .filter_map(|r| r.bits[c].as_ref().ok().map(|&b| b as f64))
            .collect()
    };
    let ratios = |rows: &[&AreaRow], f: fn(&AreaRow) -> Option<f64>| -> Vec<f64> {
        rows.iter().filter_map(|r| f(r)).collect()
    };
    let everything: Vec<&AreaRow> = rows.iter().collect();
    let mut summary = Vec::new();
    let mut push = |name: &str,
                    rows: &[&AreaRow],
                    agg: fn(&[f64]) -> Option<f64>| {
        summary.push(SummaryRow {
            name: name.to_string(),
            bits: (0..archs.len()).map(|c| agg(&column(rows, c))).collect(),
            vs_three: agg(&ratios(rows, |r| r.vs_three)),
            vs_two: agg(&ratios(rows, |r| r.vs_two)),
        });
    };
    push("average", &singles, mean);
    push("median", &singles, median);
    push("trimmed average", &singles, trimmed_mean);
    push("total average", &everything, mean);

    AreaTable {
        archs: archs.to_vec(),
        rows,
        summary,
    }
}

fn render_f64(x: f64) -> String {
    if (x - x.trunc()).abs() < 1e-9 {
        format!("{}", x.trunc() as i128)
    } else {
        format!("{x:.1}")
    }
}

impl AreaTable {
    fn headers(&self) -> Vec<String> {
        let mut h = vec!["fsm".to_string()];
        h.extend(self.archs.iter().map(|a| a.to_string()));
        h.push("mram vs three".into());
        h.push("mram vs two".into());
        h
    }

    pub fn to_markdown(&self) -> String {
        let headers = self.headers();
        let mut out = format!("| {} |\n", headers.join(" | "));
        out.push_str(&format!("|{}\n", " ---: |".repeat(headers.len())));
        let pct = |r: Option<f64>| match r {
            Some(r) => format!("{}%", percent_trunc(r)),
            None => "-".to_string(),
        };
        for row in &self.rows {
            let mut cells = vec![row.name.clone()];
            cells.extend(row.bits.iter().map(|b| match b {
                Ok(v) => v.to_string(),
                Err(e) => format!("error: {e}"),
            }));
            cells.push(pct(row.vs_three));
            cells.push(pct(row.vs_two));
            out.push_str(&format!("| {} |\n", cells.join(" | ")));
        }
        for row in &self.summary {
            let mut cells = vec![row.name.clone()];
            cells.extend(row.bits.iter().map(|b| match b {
                Some(v) => render_f64(*v),
                None => "-".to_string(),
            }));
            cells.push(pct(row.vs_three));
            cells.push(pct(row.vs_two));
            out.push_str(&format!("| {} |\n", cells.join(" | ")));
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.headers().join(",").replace(' ', "_");
        out.push('\n');
        let pct = |r: Option<f64>| match r {
            Some(r) => percent_trunc(r).to_string(),
            None => String::new(),
        };
        for row in &self.rows {
            let mut cells = vec![row.name.clone()];
            cells.extend(row.bits.iter().map(|b| match b {
                Ok(v) => v.to_string(),
                Err(e) => format!("error: {}", e.replace(',', ";")),
            }));
            cells.push(pct(row.vs_three));
            cells.push(pct(row.vs_two));
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        for row in &self.summary {
            let mut cells = vec![row.name.clone()];
            cells.extend(row.bits.iter().map(|b| match b {
                Some(v) => render_f64(*v),
                None => String::new(),
            }));
            cells.push(pct(row.vs_three));
            cells.push(pct(row.vs_two));
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// One benchmark line of a [`TimingTable`]: median milliseconds per
/// architecture, `None` where the pipeline failed.
#[derive(Debug, Clone, PartialEq)]
pub struct TimingRow {
    pub name: String,
    pub millis: Vec<Option<f64>>,
}

/// Wall-clock cost of profile + tailor + map, per benchmark and
/// architecture.
#[derive(Debug, Clone, PartialEq)]
pub struct TimingTable {
    pub archs: Vec<Arch>,
    pub repetitions: usize,
    pub rows: Vec<TimingRow>,
}

/// Measure the full compile pipeline. Runs strictly sequentially — timing
/// samples must not contend with each other — and reports the median of
/// `repetitions` runs (at least one) in milliseconds.
pub fn timing_report(
    benchmarks: &[(String, CanonicalFsm)],
    archs: &[Arch],
    repetitions: usize,
) -> TimingTable {
    let repetitions = repetitions.max(1);
    let rows = benchmarks
        .iter()
        .map(|(name, fsm)| {
            let millis = archs
                .iter()
                .map(|&arch| {
                    let mut samples = Vec::with_capacity(repetitions);
                    for _ in 0..repetitions {
                        let start = Instant::now();
                        let ok = profile(fsm).ok().and_then(|prof| {
                            let inst = tailor_single(&prof, arch);
                            map(fsm, &prof, &inst, DEFAULT_BIT_CAP).ok()
                        });
                        let elapsed = start.elapsed().as_secs_f64() * 1e3;
                        ok.as_ref()?;
                        samples.push(elapsed);
                    }
                    median(&samples)
                })
                .collect();
            TimingRow {
                name: name.clone(),
                millis,
            }
        })
        .collect();
    TimingTable {
        archs: archs.to_vec(),
        repetitions,
        rows,
    }
}

impl TimingTable {
    pub fn to_markdown(&self) -> String {
        let mut headers = vec!["fsm".to_string()];
        headers.extend(self.archs.iter().map(|a| format!("{a} (ms)")));
        let mut out = format!("| {} |\n", headers.join(" | "));
        out.push_str(&format!("|{}\n", " ---: |".repeat(headers.len())));
        for row in &self.rows {
            let mut cells = vec![row.name.clone()];
            cells.extend(row.millis.iter().map(|m| match m {
                Some(v) => format!("{v:.3}"),
                None => "-".to_string(),
            }));
            out.push_str(&format!("| {} |\n", cells.join(" | ")));
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut headers = vec!["fsm".to_string()];
        headers.extend(self.archs.iter().map(|a| format!("{a}_ms")));
        let mut out = headers.join(",");
        out.push('\n');
        for row in &self.rows {
            let mut cells = vec![row.name.clone()];
            cells.extend(row.millis.iter().map(|m| match m {
                Some(v) => format!("{v:.3}"),
                None => String::new(),
            }));
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fsm::canonicalize;
    use crate::kiss;
    use crate::profile::StateProfile;

    const ALL: [Arch; 4] = Arch::ALL;

    fn profiled(text: &str) -> FsmProfile {
        profile(&canonicalize(&kiss::parse(text).unwrap().fsm).unwrap()).unwrap()
    }

    const CHAIN5: &str = "\
.i 6
.o 0
.r s0
1----- s0 s1
1----- s1 s2
1----- s2 s3
1----- s3 s4
-11111 s4 s0
";

    #[test]
    fn chain_row_carries_the_exact_totals_and_truncated_percents() {
        let table = area_table(&[("chain5".into(), vec![profiled(CHAIN5)])], &ALL);
        let row = &table.rows[0];
        let bits: Vec<u128> = row.bits.iter().map(|b| *b.as_ref().unwrap()).collect();
        assert_eq!(bits, vec![1536, 888, 424, 306]);
        assert_eq!(percent_trunc(row.vs_three.unwrap()), 27);
        assert_eq!(percent_trunc(row.vs_two.unwrap()), 65);

        let md = table.to_markdown();
        assert!(md.contains("| chain5 | 1536 | 888 | 424 | 306 | 27% | 65% |"));
        let csv = table.to_csv();
        assert!(csv.contains("chain5,1536,888,424,306,27,65"));
    }

    #[test]
    fn single_benchmark_summary_collapses_onto_the_row() {
        let table = area_table(&[("chain5".into(), vec![profiled(CHAIN5)])], &ALL);
        let avg = &table.summary[0];
        let med = &table.summary[1];
        let trim = &table.summary[2];
        let total = &table.summary[3];
        assert_eq!(avg.name, "average");
        for c in 0..4 {
            let row_value = *table.rows[0].bits[c].as_ref().unwrap() as f64;
            assert_eq!(avg.bits[c], Some(row_value));
            assert_eq!(med.bits[c], Some(row_value));
            assert_eq!(total.bits[c], Some(row_value));
            assert_eq!(trim.bits[c], None, "one value cannot be trimmed");
        }
        assert_eq!(avg.vs_three, table.rows[0].vs_three);
        assert_eq!(med.vs_three, table.rows[0].vs_three);
    }

    #[test]
    fn percent_truncates_toward_zero_and_zero_savings_is_zero_percent() {
        assert_eq!(percent_trunc(1.0 - 306.0 / 424.0), 27);
        assert_eq!(percent_trunc(-0.334), -33);
        assert_eq!(percent_trunc(0.0), 0);
        assert_eq!(percent_trunc(0.999), 99);
    }

    #[test]
    fn tiny_machines_show_negative_savings() {
        // One state, one input, one output: the per-engine overhead
        // exceeds the three-memory total, so the ratio goes negative.
        let table = area_table(
            &[("single".into(), vec![profiled(".i 1\n.o 1\n- s0 s0 0\n")])],
            &ALL,
        );
        let row = &table.rows[0];
        assert_eq!(row.bits[2], Ok(1));
        assert_eq!(row.bits[3], Ok(2));
        assert_eq!(percent_trunc(row.vs_three.unwrap()), -100);
        assert!(table.to_markdown().contains("-100%"));
    }

    #[test]
    fn envelope_rows_size_one_shared_instance() {
        let profiles = vec![profiled(CHAIN5), profiled(".i 1\n.o 1\n- s0 s0 0\n")];
        let table = area_table(&[("multi".into(), profiles.clone())], &[Arch::MRam]);
        let row = &table.rows[0];
        assert!(row.envelope);
        let expected = total_bits(&tailor_multi(&profiles, Arch::MRam)).unwrap();
        assert_eq!(row.bits[0], Ok(expected));
        // Envelope rows stay out of the plain average but join the total.
        assert_eq!(table.summary[0].bits[0], None);
        assert_eq!(table.summary[3].bits[0], Some(expected as f64));
    }

    #[test]
    fn oversized_benchmarks_become_row_errors_not_crashes() {
        // A synthetic profile so large the flat table size overflows.
        let huge = FsmProfile {
            per_state: vec![StateProfile {
                state: 0,
                effective_inputs: vec![],
                ei_count: 0,
            }],
            ei_max: 0,
            transitions: vec![],
            per_state_transition_count: vec![1],
            t_state_max: 1,
            s_total: 1 << 62,
            i_total: 64,
            o_total: 8,
        };
        let table = area_table(&[("huge".into(), vec![huge])], &[Arch::OneRam]);
        let row = &table.rows[0];
        assert!(row.bits[0].is_err());
        assert!(table.to_markdown().contains("error:"));
        assert_eq!(table.summary[0].bits[0], None);
    }

    #[test]
    fn summary_statistics_aggregate_per_column() {
        let rows = vec![
            ("a".to_string(), vec![profiled(CHAIN5)]),
            ("b".to_string(), vec![profiled(".i 1\n.o 1\n- s0 s0 0\n")]),
            (
                "c".to_string(),
                vec![profiled(
                    ".i 1\n.o 1\n.r off\n1 off on 1\n0 off off 0\n1 on off 0\n0 on on 1\n",
                )],
            ),
        ];
        let table = area_table(&rows, &ALL);
        let mram: Vec<f64> = table
            .rows
            .iter()
            .map(|r| *r.bits[3].as_ref().unwrap() as f64)
            .collect();
        let avg = &table.summary[0];
        let med = &table.summary[1];
        let trim = &table.summary[2];
        assert_eq!(avg.bits[3], mean(&mram));
        assert_eq!(med.bits[3], median(&mram));
        // Trimming drops the largest (chain5) value.
        let rest: Vec<f64> = mram.iter().copied().filter(|&v| v != 306.0).collect();
        assert_eq!(trim.bits[3], mean(&rest));
    }

    #[test]
    fn median_and_trim_helpers() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median(&[]), None);
        assert_eq!(trimmed_mean(&[1.0, 2.0, 30.0]), Some(1.5));
        assert_eq!(trimmed_mean(&[5.0]), None);
    }

    #[test]
    fn timing_covers_every_cell_and_stays_fast() {
        let fsm = canonicalize(&kiss::parse(CHAIN5).unwrap().fsm).unwrap();
        let t = timing_report(&[("chain5".into(), fsm)], &ALL, 3);
        assert_eq!(t.rows.len(), 1);
        for (i, cell) in t.rows[0].millis.iter().enumerate() {
            let ms = cell.expect("pipeline must succeed");
            assert!(ms < 1000.0, "arch {} took {ms} ms", ALL[i]);
        }
        let md = t.to_markdown();
        assert!(md.starts_with("| fsm | one (ms) |"));
    }

    #[test]
    fn per_engine_mapping_beats_flat_select_tables_on_wide_machines() {
        // One state watches 14 inputs, nine watch one input. The
        // two-memory image replicates the 14-input table for every state;
        // the per-engine image gives the wide state its own small engine.
        let mut text = String::from(".i 14\n.o 1\n.r s0\n11111111111111 s0 s1 1\n");
        for k in 1..9 {
            text.push_str(&format!("1------------- s{k} s{} 0\n", k + 1));
        }
        text.push_str("1------------- s9 s0 1\n");
        let fsm = canonicalize(&kiss::parse(&text).unwrap().fsm).unwrap();
        let t = timing_report(&[("wide".into(), fsm)], &[Arch::TwoRam, Arch::MRam], 3);
        let two = t.rows[0].millis[0].unwrap();
        let mram = t.rows[0].millis[1].unwrap();
        assert!(
            mram < two,
            "per-engine map took {mram} ms, flat map {two} ms"
        );
    }
}
