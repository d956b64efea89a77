//! Event-file and scan-table serialization.
//!
//! Event files are thin CSV: a fixed header, then one record per line of
//! comma-separated integers, LF-terminated. Outcome columns carry an
//! explicit sign (`+1` / `-1`). Scan tables render reals at six significant
//! digits and leave undefined statistics as empty cells, so reruns diff
//! byte-for-byte and never print NaN.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::CandidateEvent;
use crate::scan::ScanResult;
use crate::stats::{chsh_bound_stat, stat_two_tailed, Chi2NoSignal, NoSignalSet, SampleStats};

pub const EVENT_HEADER: &str = "run_id,sync_index,click1_ps,click2_ps,clean_attempts,a,b,x,y";

pub const SCAN_HEADER: &str = "start_offset_ps,invalid_threshold,N,S_chsh,sigma_chsh,\
p_chsh_gauss,p_chsh_binom,S_AB0,sig_AB0,S_AB1,sig_AB1,S_BA0,sig_BA0,S_BA1,sig_BA1,chi2,p_chi2";

fn parse_field<T: FromStr>(s: &str, name: &'static str, line: usize) -> Result<T> {
    s.parse().map_err(|_| Error::Parse {
        line,
        message: format!("bad {name}: {s:?}"),
    })
}

/// Reads an event file. Blank lines are skipped; anything else malformed
/// errors with its 1-based line number (line 1 is the header).
pub fn read_events<R: BufRead>(reader: R) -> Result<Vec<CandidateEvent>> {
    let mut lines = reader.lines();
    let header = match lines.next() {
        Some(h) => h?,
        None => {
            return Err(Error::Parse {
                line: 1,
                message: "missing header".into(),
            })
        }
    };
    if header != EVENT_HEADER {
        return Err(Error::HeaderMismatch {
            expected: EVENT_HEADER,
            found: header,
        });
    }
    let mut events = Vec::new();
    for (idx, line) in lines.enumerate() {
        let line_no = idx + 2;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 9 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected 9 fields, got {}", fields.len()),
            });
        }
        let ev = CandidateEvent::new(
            parse_field(fields[0], "run_id", line_no)?,
            parse_field(fields[1], "sync_index", line_no)?,
            parse_field(fields[2], "click1_ps", line_no)?,
            parse_field(fields[3], "click2_ps", line_no)?,
            parse_field(fields[4], "clean_attempts", line_no)?,
            parse_field(fields[5], "a", line_no)?,
            parse_field(fields[6], "b", line_no)?,
            parse_field(fields[7], "x", line_no)?,
            parse_field(fields[8], "y", line_no)?,
        )
        .map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        events.push(ev);
    }
    Ok(events)
}

pub fn read_events_path(path: &Path) -> Result<Vec<CandidateEvent>> {
    read_events(BufReader::new(File::open(path)?))
}

/// Writes an event file that [`read_events`] maps back to the same events.
pub fn write_events<W: Write>(events: &[CandidateEvent], writer: W) -> Result<()> {
    let mut w = BufWriter::new(writer);
    writeln!(w, "{EVENT_HEADER}")?;
    for e in events {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{:+},{:+}",
            e.run_id,
            e.sync_index,
            e.click1_ps,
            e.click2_ps,
            e.clean_attempts,
            e.setting_a,
            e.setting_b,
            e.outcome_x,
            e.outcome_y
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_events_path(events: &[CandidateEvent], path: &Path) -> Result<()> {
    write_events(events, File::create(path)?)
}

/// Renders a real at six significant digits, decimal inside 1e-4..1e6 and
/// scientific outside. Pure function of the value, so emitted tables are
/// byte-stable.
pub fn format_sig6(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}"); // stats are always finite; never emitted by the writers
    }
    let x = if x == 0.0 { 0.0 } else { x }; // normalize -0.0
    let sci = format!("{x:.5e}");
    // exponent of the already-rounded mantissa
    let epos = sci.find('e').expect("exponential format");
    let exp: i32 = sci[epos + 1..].parse().expect("exponent digits");
    if !(-4..=5).contains(&exp) {
        sci
    } else {
        format!("{:.*}", (5 - exp).max(0) as usize, x)
    }
}

fn push_cell(line: &mut String, v: Option<f64>) {
    line.push(',');
    if let Some(v) = v {
        line.push_str(&format_sig6(v));
    }
}

/// Writes scan rows under [`SCAN_HEADER`]. Undefined statistics become empty
/// cells; a point whose chi-square degenerated keeps its other columns.
pub fn write_scan_csv<W: Write>(rows: &[ScanResult], writer: W) -> Result<()> {
    let mut w = BufWriter::new(writer);
    writeln!(w, "{SCAN_HEADER}")?;
    for r in rows {
        let mut line = format!(
            "{},{},{}",
            r.start_offset_ps, r.invalid_threshold, r.n_selected
        );
        let cells: [Option<f64>; 14] = match r.stats.as_ref() {
            None => [None; 14],
            Some(st) => [
                Some(st.chsh.value),
                Some(st.chsh.sigma),
                st.chsh.p,
                Some(st.p_chsh_binomial),
                Some(st.nosig.ab0.value),
                Some(st.nosig.ab0.sigma),
                Some(st.nosig.ab1.value),
                Some(st.nosig.ab1.sigma),
                Some(st.nosig.ba0.value),
                Some(st.nosig.ba0.sigma),
                Some(st.nosig.ba1.value),
                Some(st.nosig.ba1.sigma),
                st.chi2.map(|c| c.chi2),
                st.chi2.map(|c| c.p),
            ],
        };
        for c in cells {
            push_cell(&mut line, c);
        }
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_scan_csv_path(rows: &[ScanResult], path: &Path) -> Result<()> {
    write_scan_csv(rows, File::create(path)?)
}

fn opt_field(s: &str, name: &'static str, line: usize) -> Result<Option<f64>> {
    if s.is_empty() {
        return Ok(None);
    }
    let v: f64 = parse_field(s, name, line)?;
    if !v.is_finite() {
        return Err(Error::Parse {
            line,
            message: format!("{name} must be finite, got {s:?}"),
        });
    }
    Ok(Some(v))
}

/// Reads a scan table back into rows. Tail probabilities come from their
/// columns verbatim; z values are recomputed from value and sigma, which the
/// table does not carry.
pub fn read_scan_csv<R: BufRead>(reader: R) -> Result<Vec<ScanResult>> {
    let mut lines = reader.lines();
    let header = match lines.next() {
        Some(h) => h?,
        None => {
            return Err(Error::Parse {
                line: 1,
                message: "missing header".into(),
            })
        }
    };
    if header != SCAN_HEADER {
        return Err(Error::HeaderMismatch {
            expected: SCAN_HEADER,
            found: header,
        });
    }
    let mut rows = Vec::new();
    for (idx, line) in lines.enumerate() {
        let line_no = idx + 2;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 17 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected 17 fields, got {}", fields.len()),
            });
        }
        let start_offset_ps = parse_field(fields[0], "start_offset_ps", line_no)?;
        let invalid_threshold = parse_field(fields[1], "invalid_threshold", line_no)?;
        let n_selected = parse_field(fields[2], "N", line_no)?;
        let mut cells = [None; 14];
        const NAMES: [&str; 14] = [
            "S_chsh", "sigma_chsh", "p_chsh_gauss", "p_chsh_binom", "S_AB0", "sig_AB0", "S_AB1",
            "sig_AB1", "S_BA0", "sig_BA0", "S_BA1", "sig_BA1", "chi2", "p_chi2",
        ];
        for (i, c) in cells.iter_mut().enumerate() {
            *c = opt_field(fields[3 + i], NAMES[i], line_no)?;
        }
        let n_defined = cells[..12].iter().filter(|c| c.is_some()).count();
        let stats = match n_defined {
            0 => {
                if cells[12].is_some() || cells[13].is_some() {
                    return Err(Error::Parse {
                        line: line_no,
                        message: "chi2 cells present without statistics".into(),
                    });
                }
                None
            }
            12 => {
                let v = |i: usize| cells[i].unwrap();
                let chi2 = match (cells[12], cells[13]) {
                    (Some(chi2), Some(p)) => Some(Chi2NoSignal { chi2, dof: 4, p }),
                    (None, None) => None,
                    _ => {
                        return Err(Error::Parse {
                            line: line_no,
                            message: "chi2 and p_chi2 must be both present or both empty".into(),
                        })
                    }
                };
                let mut chsh = chsh_bound_stat(v(0), v(1));
                chsh.p = Some(v(2));
                Some(SampleStats {
                    chsh,
                    p_chsh_binomial: v(3),
                    nosig: NoSignalSet {
                        ab0: stat_two_tailed(v(4), v(5)),
                        ab1: stat_two_tailed(v(6), v(7)),
                        ba0: stat_two_tailed(v(8), v(9)),
                        ba1: stat_two_tailed(v(10), v(11)),
                    },
                    chi2,
                })
            }
            k => {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("row defines {k} of 12 statistic cells"),
                })
            }
        };
        rows.push(ScanResult {
            start_offset_ps,
            invalid_threshold,
            n_selected,
            stats,
        });
    }
    Ok(rows)
}

pub fn read_scan_csv_path(path: &Path) -> Result<Vec<ScanResult>> {
    read_scan_csv(BufReader::new(File::open(path)?))
}
