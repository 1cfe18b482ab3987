//! Line-delimited JSON snapshots of a vortex cloud and a spray.
//!
//! One record per atom, vortices first:
//!
//! ```text
//! {"kind":"vortex","x1":1.0000000000000000e0,"x2":0.0000000000000000e0,"xi1":null,"xi2":null,"weight":2.5000000000000000e-1}
//! {"kind":"spray","x1":...,"x2":...,"xi1":...,"xi2":...,"weight":...}
//! ```
//!
//! Numbers are written with 17 significant digits, which round-trips every
//! finite `f64` bit-exactly.

use std::io::{BufRead, Write};

use serde::Deserialize;
use thiserror::Error;

use super::{MeasureError, PhaseAtom, PhaseAtomCloud, SignedAtom, SignedAtomCloud};
use crate::geometry::Vec2;

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: {source}")]
    Invalid { line: usize, source: MeasureError },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Record {
    kind: String,
    x1: f64,
    x2: f64,
    xi1: Option<f64>,
    xi2: Option<f64>,
    weight: f64,
}

/// Formats a float with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{:.16e}", v)
}

pub fn write_snapshot<W: Write>(
    mut w: W,
    vortices: &SignedAtomCloud,
    spray: &PhaseAtomCloud,
) -> std::io::Result<()> {
    for a in vortices.atoms() {
        writeln!(
            w,
            "{{\"kind\":\"vortex\",\"x1\":{},\"x2\":{},\"xi1\":null,\"xi2\":null,\"weight\":{}}}",
            fmt_f64(a.pos.x),
            fmt_f64(a.pos.y),
            fmt_f64(a.weight)
        )?;
    }
    for a in spray.atoms() {
        writeln!(
            w,
            "{{\"kind\":\"spray\",\"x1\":{},\"x2\":{},\"xi1\":{},\"xi2\":{},\"weight\":{}}}",
            fmt_f64(a.x.x),
            fmt_f64(a.x.y),
            fmt_f64(a.xi.x),
            fmt_f64(a.xi.y),
            fmt_f64(a.weight)
        )?;
    }
    Ok(())
}

pub fn read_snapshot<R: BufRead>(r: R) -> Result<(SignedAtomCloud, PhaseAtomCloud), SnapshotError> {
    let mut vortices = Vec::new();
    let mut spray = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let rec: Record = serde_json::from_str(&line).map_err(|e| SnapshotError::Parse {
            line: lineno,
            message: e.to_string(),
        })?;
        let pos = Vec2::new(rec.x1, rec.x2);
        match rec.kind.as_str() {
            "vortex" => {
                if rec.xi1.is_some() || rec.xi2.is_some() {
                    return Err(SnapshotError::Parse {
                        line: lineno,
                        message: "vortex records must have null xi fields".into(),
                    });
                }
                if rec.weight == 0.0 {
                    return Err(SnapshotError::Parse {
                        line: lineno,
                        message: "vortex weight must be nonzero".into(),
                    });
                }
                vortices.push((lineno, SignedAtom::new(pos, rec.weight)));
            }
            "spray" => match (rec.xi1, rec.xi2) {
                (Some(a), Some(b)) => {
                    spray.push((lineno, PhaseAtom::new(pos, Vec2::new(a, b), rec.weight)))
                }
                _ => {
                    return Err(SnapshotError::Parse {
                        line: lineno,
                        message: "spray records need both xi1 and xi2".into(),
                    })
                }
            },
            other => {
                return Err(SnapshotError::Parse {
                    line: lineno,
                    message: format!("unknown kind {other:?}"),
                })
            }
        }
    }
    let vortex_lines: Vec<usize> = vortices.iter().map(|(l, _)| *l).collect();
    let spray_lines: Vec<usize> = spray.iter().map(|(l, _)| *l).collect();
    let v = SignedAtomCloud::new(vortices.into_iter().map(|(_, a)| a).collect()).map_err(|e| {
        SnapshotError::Invalid {
            line: lookup_line(&e, &vortex_lines),
            source: e,
        }
    })?;
    let s = PhaseAtomCloud::new(spray.into_iter().map(|(_, a)| a).collect()).map_err(|e| {
        SnapshotError::Invalid {
            line: lookup_line(&e, &spray_lines),
            source: e,
        }
    })?;
    Ok((v, s))
}

fn lookup_line(e: &MeasureError, lines: &[usize]) -> usize {
    match e {
        MeasureError::NonFinite { index } | MeasureError::NonPositiveWeight { index, .. } => {
            lines.get(*index).copied().unwrap_or(0)
        }
        _ => 0,
    }
}

pub fn snapshot_to_string(vortices: &SignedAtomCloud, spray: &PhaseAtomCloud) -> String {
    let mut buf = Vec::new();
    write_snapshot(&mut buf, vortices, spray).expect("writing to memory");
    String::from_utf8(buf).expect("ascii output")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn record_layout() {
        let v = SignedAtomCloud::from_pairs([(Vec2::new(1.0, -0.0), 0.25)]).unwrap();
        let s = PhaseAtomCloud::new(vec![PhaseAtom::new(
            Vec2::new(0.1, 2.0),
            Vec2::new(-3.0, 1e-300),
            0.5,
        )])
        .unwrap();
        let text = snapshot_to_string(&v, &s);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(
            lines[0],
            "{\"kind\":\"vortex\",\"x1\":1.0000000000000000e0,\"x2\":-0.0000000000000000e0,\"xi1\":null,\"xi2\":null,\"weight\":2.5000000000000000e-1}"
        );
        assert!(lines[1].starts_with("{\"kind\":\"spray\",\"x1\":1.0000000000000001e-1"));
        let (v2, s2) = read_snapshot(text.as_bytes()).unwrap();
        assert_eq!(v2.atoms()[0].pos.y.to_bits(), (-0.0f64).to_bits());
        assert_eq!(s2, s);
    }

    #[test]
    fn rejects_malformed_records() {
        let bad_kind =
            "{\"kind\":\"rock\",\"x1\":0,\"x2\":0,\"xi1\":null,\"xi2\":null,\"weight\":1}\n";
        assert!(matches!(
            read_snapshot(bad_kind.as_bytes()),
            Err(SnapshotError::Parse { line: 1, .. })
        ));
        let extra = "{\"kind\":\"vortex\",\"x1\":0,\"x2\":0,\"xi1\":null,\"xi2\":null,\"weight\":1,\"z\":0}\n";
        assert!(read_snapshot(extra.as_bytes()).is_err());
        let neg = "{\"kind\":\"spray\",\"x1\":0,\"x2\":0,\"xi1\":0,\"xi2\":0,\"weight\":-1}\n";
        assert!(matches!(
            read_snapshot(neg.as_bytes()),
            Err(SnapshotError::Invalid { line: 1, .. })
        ));
    }

    fn finite() -> impl Strategy<Value = f64> {
        prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO
    }

    proptest! {
        #[test]
        fn write_read_write_is_byte_identical(
            vs in prop::collection::vec((finite(), finite(), finite()), 0..8),
            ss in prop::collection::vec((finite(), finite(), finite(), finite(), 1e-300..1e300f64), 0..8),
        ) {
            let v = SignedAtomCloud::from_pairs(vs.into_iter().map(|(a, b, w)| (Vec2::new(a, b), w))).unwrap();
            let s = PhaseAtomCloud::new(ss.into_iter().map(|(a, b, c, d, w)| PhaseAtom::new(Vec2::new(a, b), Vec2::new(c, d), w)).collect()).unwrap();
            let first = snapshot_to_string(&v, &s);
            let (v2, s2) = read_snapshot(first.as_bytes()).unwrap();
            prop_assert_eq!(snapshot_to_string(&v2, &s2), first);
            for (a, b) in v.atoms().iter().zip(v2.atoms()) {
                prop_assert_eq!(a.pos.x.to_bits(), b.pos.x.to_bits());
                prop_assert_eq!(a.weight.to_bits(), b.weight.to_bits());
            }
        }
    }
}
