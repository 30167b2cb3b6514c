//! Plain-text form of a [`TinyInstance`].
//!
//! ```text
//! tiny-instance 1
//! config <key> <value>                      one line per EnvConfig key
//! profile <id> <x> <y> <distance> <tx_power> <cpu> <battery_weight> <target_fps> <initial_tolerance>
//! slot <t> bits <D_0> .. <D_N-1>
//! slot <t> cycles <C_0> .. <C_N-1>
//! slot <t> fading <g_00> <g_01> .. <g_N-1,M-1>   row-major by user
//! ```
//!
//! Blank lines and lines starting with `#` are ignored. Floats are written
//! in shortest round-trip form, so parsing a written fixture is lossless.

use std::fmt::Write as _;

use ndarray::Array2;

use super::{OracleError, TinyInstance};
use crate::env::{EnvConfig, SlotDraw, Tape, VuProfile};

const HEADER: &str = "tiny-instance 1";

/// Bits, cycles and fading of one slot, as they are read.
type SlotFields = (Option<Vec<f64>>, Option<Vec<f64>>, Option<Vec<f64>>);

pub fn write_fixture(inst: &TinyInstance) -> String {
    let mut out = String::new();
    let list = |v: &mut dyn Iterator<Item = f64>| v.map(|x| format!("{x:?}")).collect::<Vec<_>>().join(" ");
    writeln!(out, "{HEADER}").unwrap();
    for (key, value) in inst.config.entries() {
        writeln!(out, "config {key} {value}").unwrap();
    }
    for p in &inst.tape.profiles {
        writeln!(
            out,
            "profile {} {:?} {:?} {:?} {:?} {:?} {:?} {} {}",
            p.user_id,
            p.position.0,
            p.position.1,
            p.distance,
            p.tx_power,
            p.cpu,
            p.battery_weight,
            p.target_fps,
            p.initial_tolerance
        )
        .unwrap();
    }
    for (t, slot) in inst.tape.slots.iter().enumerate() {
        writeln!(out, "slot {t} bits {}", list(&mut slot.frame_bits.iter().copied())).unwrap();
        writeln!(out, "slot {t} cycles {}", list(&mut slot.cycles_per_bit.iter().copied())).unwrap();
        writeln!(out, "slot {t} fading {}", list(&mut slot.fading.iter().copied())).unwrap();
    }
    out
}

pub fn parse_fixture(text: &str) -> Result<TinyInstance, OracleError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let err = |line: usize, reason: String| OracleError::Fixture { line, reason };
    match lines.next() {
        Some((_, HEADER)) => {}
        Some((line, other)) => return Err(err(line, format!("expected `{HEADER}`, found `{other}`"))),
        None => return Err(err(0, "empty fixture".into())),
    }

    let mut config = EnvConfig::default();
    let mut profiles = Vec::new();
    let mut slots: Vec<SlotFields> = Vec::new();
    for (line, text) in lines {
        let fields: Vec<&str> = text.split_whitespace().collect();
        let floats = |items: &[&str]| -> Result<Vec<f64>, OracleError> {
            items
                .iter()
                .map(|s| s.parse::<f64>().map_err(|_| err(line, format!("malformed number `{s}`"))))
                .collect()
        };
        let int = |s: &str| s.parse::<usize>().map_err(|_| err(line, format!("malformed integer `{s}`")));
        match fields.as_slice() {
            ["config", key, value] => config.set(key, value).map_err(|e| err(line, e.to_string()))?,
            ["profile", id, rest @ ..] if rest.len() == 8 => {
                let v = floats(&rest[..6])?;
                profiles.push(VuProfile {
                    user_id: int(id)?,
                    position: (v[0], v[1]),
                    distance: v[2],
                    tx_power: v[3],
                    cpu: v[4],
                    battery_weight: v[5],
                    target_fps: int(rest[6])?,
                    initial_tolerance: int(rest[7])?,
                });
            }
            ["slot", t, kind, values @ ..] => {
                let t = int(t)?;
                if t > slots.len() {
                    return Err(err(line, format!("slot {t} appears before slot {}", slots.len())));
                }
                if t == slots.len() {
                    slots.push((None, None, None));
                }
                let values = Some(floats(values)?);
                let entry = &mut slots[t];
                let target = match *kind {
                    "bits" => &mut entry.0,
                    "cycles" => &mut entry.1,
                    "fading" => &mut entry.2,
                    other => return Err(err(line, format!("unknown slot field `{other}`"))),
                };
                if target.is_some() {
                    return Err(err(line, format!("duplicate `{kind}` for slot {t}")));
                }
                *target = values;
            }
            _ => return Err(err(line, format!("unrecognized line `{text}`"))),
        }
    }

    let (n, m) = (config.n_users, config.n_channels);
    let slots = slots
        .into_iter()
        .enumerate()
        .map(|(t, entry)| match entry {
            (Some(frame_bits), Some(cycles_per_bit), Some(fading)) => {
                let fading = Array2::from_shape_vec((n, m), fading)
                    .map_err(|_| err(0, format!("slot {t} fading needs {} values", n * m)))?;
                Ok(SlotDraw { frame_bits, cycles_per_bit, fading })
            }
            _ => Err(err(0, format!("slot {t} is missing bits, cycles or fading"))),
        })
        .collect::<Result<Vec<_>, _>>()?;
    TinyInstance::new(config, Tape { profiles, slots })
}
