//! The `ppoi` plain-text instance format.
//!
//! An instance is a header line followed by one record per line:
//!
//! ```text
//! ppoi <buildings> <solar> <batteries> <recurring> <once-off>
//! b <id> <small rooms> <large rooms>
//! s <solar id> <building id>
//! c <id> <capacity kWh> <max power kW> <efficiency>
//! r <id> <rooms> <S|L> <load kW> <duration> <n prec> <prec...>
//! a <id> <rooms> <S|L> <load kW> <duration> <value> <penalty> <n prec> <prec...>
//! ```
//!
//! Tokens are whitespace separated and blank lines are ignored. Records of a
//! kind may appear in any order but their ids must cover `0..count` exactly.

use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::num::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RoomSize {
    #[serde(rename = "S")]
    Small,
    #[serde(rename = "L")]
    Large,
}

impl RoomSize {
    pub fn code(self) -> char {
        match self {
            RoomSize::Small => 'S',
            RoomSize::Large => 'L',
        }
    }
}

impl fmt::Display for RoomSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.code())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Building {
    pub id: usize,
    pub small_rooms: usize,
    pub large_rooms: usize,
}

impl Building {
    pub fn rooms(&self, size: RoomSize) -> usize {
        match size {
            RoomSize::Small => self.small_rooms,
            RoomSize::Large => self.large_rooms,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolarMapping {
    pub solar_id: usize,
    pub building_id: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Battery<T> {
    pub id: usize,
    /// kWh
    pub capacity: T,
    /// kW
    pub max_power: T,
    /// Round-trip efficiency in (0, 1].
    pub efficiency: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecurringActivity<T> {
    pub id: usize,
    pub rooms_required: usize,
    pub room_size: RoomSize,
    /// Total kW drawn while the activity runs.
    pub load: T,
    /// Number of 15-minute periods.
    pub duration: usize,
    /// Recurring activities that must finish before this one starts.
    pub precedences: Vec<usize>,
}

/// Optional activity. Parsed and kept for completeness; never scheduled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OnceOffActivity<T> {
    pub id: usize,
    pub rooms_required: usize,
    pub room_size: RoomSize,
    pub load: T,
    pub duration: usize,
    pub value: T,
    pub penalty: T,
    pub precedences: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance<T> {
    pub buildings: Vec<Building>,
    pub solar_maps: Vec<SolarMapping>,
    pub batteries: Vec<Battery<T>>,
    pub recurring: Vec<RecurringActivity<T>>,
    pub onceoff: Vec<OnceOffActivity<T>>,
}

impl<T> Default for Instance<T> {
    fn default() -> Self {
        Self {
            buildings: Vec::new(),
            solar_maps: Vec::new(),
            batteries: Vec::new(),
            recurring: Vec::new(),
            onceoff: Vec::new(),
        }
    }
}

impl<T: Scalar> Instance<T> {
    pub fn num_buildings(&self) -> usize {
        self.buildings.len()
    }
    pub fn num_solar(&self) -> usize {
        self.solar_maps.len()
    }
    pub fn num_batteries(&self) -> usize {
        self.batteries.len()
    }
    pub fn num_recurring(&self) -> usize {
        self.recurring.len()
    }
    pub fn num_onceoff(&self) -> usize {
        self.onceoff.len()
    }

    /// Header counts in file order.
    pub fn counts(&self) -> [usize; 5] {
        [
            self.num_buildings(),
            self.num_solar(),
            self.num_batteries(),
            self.num_recurring(),
            self.num_onceoff(),
        ]
    }

    /// Total rooms of one size over all buildings.
    pub fn total_rooms(&self, size: RoomSize) -> usize {
        self.buildings.iter().map(|b| b.rooms(size)).sum()
    }

    /// Successor lists of the recurring precedence graph (`pred -> [succ]`).
    pub fn successors(&self) -> Vec<Vec<usize>> {
        let n = self.recurring.len();
        let mut succ = vec![Vec::new(); n];
        for act in &self.recurring {
            for &p in &act.precedences {
                if p < n {
                    succ[p].push(act.id);
                }
            }
        }
        succ
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    MissingHeader,
    UnknownRecord(String),
    WrongArity { record: char, expected: String, found: usize },
    BadNumber { token: String },
    BadRoomSize { token: String },
    InvalidValue { field: &'static str, reason: &'static str },
    IndexOutOfRange { what: &'static str, index: usize, limit: usize },
    DuplicateId { record: char, id: usize },
    CountMismatch { record: char, header: usize, found: usize },
    MissingId { record: char, id: usize },
}

/// Parser diagnostic. `line` is 1-based; 0 for whole-file problems.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub kind: ParseErrorKind,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::MissingHeader => write!(f, "missing header (expected `ppoi` with five counts)"),
            Self::UnknownRecord(tag) => write!(f, "unknown record type `{tag}`"),
            Self::WrongArity { record, expected, found } => {
                write!(f, "`{record}` record expects {expected} tokens, found {found}")
            }
            Self::BadNumber { token } => write!(f, "non-numeric token `{token}`"),
            Self::BadRoomSize { token } => write!(f, "room size `{token}` is not S or L"),
            Self::InvalidValue { field, reason } => write!(f, "invalid {field}: {reason}"),
            Self::IndexOutOfRange { what, index, limit } => {
                write!(f, "{what} index {index} out of range (limit {limit})")
            }
            Self::DuplicateId { record, id } => write!(f, "duplicate `{record}` id {id}"),
            Self::CountMismatch { record, header, found } => write!(
                f,
                "count mismatch for `{record}` records: header says {header}, found {found}"
            ),
            Self::MissingId { record, id } => write!(f, "`{record}` ids are not dense: {id} missing"),
        }
    }
}

fn err(line: usize, kind: ParseErrorKind) -> ParseError {
    ParseError { line, kind }
}

fn parse_count(line: usize, tok: &str) -> Result<usize, ParseError> {
    tok.parse::<usize>()
        .map_err(|_| err(line, ParseErrorKind::BadNumber { token: tok.to_string() }))
}

fn parse_real<T: Scalar>(line: usize, tok: &str) -> Result<T, ParseError> {
    match tok.parse::<T>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(err(line, ParseErrorKind::BadNumber { token: tok.to_string() })),
    }
}

fn parse_size(line: usize, tok: &str) -> Result<RoomSize, ParseError> {
    match tok {
        "S" => Ok(RoomSize::Small),
        "L" => Ok(RoomSize::Large),
        _ => Err(err(line, ParseErrorKind::BadRoomSize { token: tok.to_string() })),
    }
}

fn check_arity(line: usize, record: char, toks: &[&str], fixed: usize) -> Result<(), ParseError> {
    if toks.len() != fixed {
        return Err(err(
            line,
            ParseErrorKind::WrongArity { record, expected: fixed.to_string(), found: toks.len() },
        ));
    }
    Ok(())
}

/// Parses `<n> <p1> ... <pn>` which must exactly consume `rest`.
fn parse_precedences(line: usize, record: char, fixed: usize, toks: &[&str]) -> Result<Vec<usize>, ParseError> {
    let n = parse_count(line, toks[fixed])?;
    let rest = &toks[fixed + 1..];
    if rest.len() != n {
        return Err(err(
            line,
            ParseErrorKind::WrongArity {
                record,
                expected: format!("{}", fixed + 1 + n),
                found: toks.len(),
            },
        ));
    }
    rest.iter().map(|t| parse_count(line, t)).collect()
}

fn check_activity_shape<T: Scalar>(line: usize, rooms: usize, load: T, duration: usize) -> Result<(), ParseError> {
    if rooms == 0 {
        return Err(err(line, ParseErrorKind::InvalidValue { field: "rooms", reason: "must be at least 1" }));
    }
    if load < T::zero() {
        return Err(err(line, ParseErrorKind::InvalidValue { field: "load", reason: "must be non-negative" }));
    }
    if duration == 0 {
        return Err(err(line, ParseErrorKind::InvalidValue { field: "duration", reason: "must be at least 1" }));
    }
    Ok(())
}

/// Collects `(line, id, item)` triples into an id-ordered vector, checking
/// uniqueness, density and the header count.
fn densify<I>(record: char, header: usize, mut items: Vec<(usize, usize, I)>) -> Result<Vec<I>, ParseError> {
    if items.len() != header {
        let line = items.last().map_or(1, |(l, _, _)| *l);
        return Err(err(line, ParseErrorKind::CountMismatch { record, header, found: items.len() }));
    }
    items.sort_by_key(|(_, id, _)| *id);
    for w in items.windows(2) {
        if w[0].1 == w[1].1 {
            return Err(err(w[1].0, ParseErrorKind::DuplicateId { record, id: w[1].1 }));
        }
    }
    for (expect, (line, id, _)) in items.iter().enumerate() {
        if *id != expect {
            return Err(if *id >= header {
                err(*line, ParseErrorKind::IndexOutOfRange { what: "record id", index: *id, limit: header })
            } else {
                err(0, ParseErrorKind::MissingId { record, id: expect })
            });
        }
    }
    Ok(items.into_iter().map(|(_, _, item)| item).collect())
}

/// Parses an instance from its text form.
pub fn parse_instance<T: Scalar>(text: &str) -> Result<Instance<T>, ParseError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split_whitespace().collect::<Vec<_>>()))
        .filter(|(_, toks)| !toks.is_empty());

    let (hline, header) = lines.next().ok_or_else(|| err(0, ParseErrorKind::MissingHeader))?;
    if header[0] != "ppoi" {
        return Err(err(hline, ParseErrorKind::MissingHeader));
    }
    check_arity(hline, 'p', &header, 6)?;
    let mut counts = [0usize; 5];
    for (slot, tok) in counts.iter_mut().zip(&header[1..]) {
        *slot = parse_count(hline, tok)?;
    }

    let mut buildings = Vec::new();
    let mut solars = Vec::new();
    let mut batteries = Vec::new();
    let mut recurring = Vec::new();
    let mut onceoff = Vec::new();

    for (line, toks) in lines {
        match toks[0] {
            "b" => {
                check_arity(line, 'b', &toks, 4)?;
                let id = parse_count(line, toks[1])?;
                let small_rooms = parse_count(line, toks[2])?;
                let large_rooms = parse_count(line, toks[3])?;
                buildings.push((line, id, Building { id, small_rooms, large_rooms }));
            }
            "s" => {
                check_arity(line, 's', &toks, 3)?;
                let solar_id = parse_count(line, toks[1])?;
                let building_id = parse_count(line, toks[2])?;
                if building_id >= counts[0] {
                    return Err(err(
                        line,
                        ParseErrorKind::IndexOutOfRange { what: "building", index: building_id, limit: counts[0] },
                    ));
                }
                solars.push((line, solar_id, SolarMapping { solar_id, building_id }));
            }
            "c" => {
                check_arity(line, 'c', &toks, 5)?;
                let id = parse_count(line, toks[1])?;
                let capacity: T = parse_real(line, toks[2])?;
                let max_power: T = parse_real(line, toks[3])?;
                let efficiency: T = parse_real(line, toks[4])?;
                if capacity <= T::zero() {
                    return Err(err(line, ParseErrorKind::InvalidValue { field: "capacity", reason: "must be positive" }));
                }
                if max_power <= T::zero() {
                    return Err(err(line, ParseErrorKind::InvalidValue { field: "max power", reason: "must be positive" }));
                }
                if efficiency <= T::zero() || efficiency > T::one() {
                    return Err(err(line, ParseErrorKind::InvalidValue { field: "efficiency", reason: "must lie in (0, 1]" }));
                }
                batteries.push((line, id, Battery { id, capacity, max_power, efficiency }));
            }
            "r" => {
                if toks.len() < 7 {
                    return Err(err(line, ParseErrorKind::WrongArity { record: 'r', expected: "at least 7".into(), found: toks.len() }));
                }
                let id = parse_count(line, toks[1])?;
                let rooms_required = parse_count(line, toks[2])?;
                let room_size = parse_size(line, toks[3])?;
                let load: T = parse_real(line, toks[4])?;
                let duration = parse_count(line, toks[5])?;
                let precedences = parse_precedences(line, 'r', 6, &toks)?;
                check_activity_shape(line, rooms_required, load, duration)?;
                if let Some(&bad) = precedences.iter().find(|&&p| p >= counts[3]) {
                    return Err(err(
                        line,
                        ParseErrorKind::IndexOutOfRange { what: "precedence", index: bad, limit: counts[3] },
                    ));
                }
                recurring.push((line, id, RecurringActivity { id, rooms_required, room_size, load, duration, precedences }));
            }
            "a" => {
                if toks.len() < 9 {
                    return Err(err(line, ParseErrorKind::WrongArity { record: 'a', expected: "at least 9".into(), found: toks.len() }));
                }
                let id = parse_count(line, toks[1])?;
                let rooms_required = parse_count(line, toks[2])?;
                let room_size = parse_size(line, toks[3])?;
                let load: T = parse_real(line, toks[4])?;
                let duration = parse_count(line, toks[5])?;
                let value: T = parse_real(line, toks[6])?;
                let penalty: T = parse_real(line, toks[7])?;
                let precedences = parse_precedences(line, 'a', 8, &toks)?;
                check_activity_shape(line, rooms_required, load, duration)?;
                onceoff.push((
                    line,
                    id,
                    OnceOffActivity { id, rooms_required, room_size, load, duration, value, penalty, precedences },
                ));
            }
            "ppoi" => return Err(err(line, ParseErrorKind::UnknownRecord("ppoi (repeated header)".into()))),
            other => return Err(err(line, ParseErrorKind::UnknownRecord(other.to_string()))),
        }
    }

    Ok(Instance {
        buildings: densify('b', counts[0], buildings)?,
        solar_maps: densify('s', counts[1], solars)?,
        batteries: densify('c', counts[2], batteries)?,
        recurring: densify('r', counts[3], recurring)?,
        onceoff: densify('a', counts[4], onceoff)?,
    })
}

fn push_list(out: &mut String, xs: &[usize]) {
    let _ = write!(out, " {}", xs.len());
    for x in xs {
        let _ = write!(out, " {x}");
    }
}

/// Writes the canonical text form: header first, records grouped by kind in id order.
pub fn serialize_instance<T: Scalar>(inst: &Instance<T>) -> String {
    let [nb, ns, nc, nr, na] = inst.counts();
    let mut out = format!("ppoi {nb} {ns} {nc} {nr} {na}\n");
    for b in &inst.buildings {
        let _ = writeln!(out, "b {} {} {}", b.id, b.small_rooms, b.large_rooms);
    }
    for s in &inst.solar_maps {
        let _ = writeln!(out, "s {} {}", s.solar_id, s.building_id);
    }
    for c in &inst.batteries {
        let _ = writeln!(out, "c {} {} {} {}", c.id, c.capacity, c.max_power, c.efficiency);
    }
    for r in &inst.recurring {
        let _ = write!(out, "r {} {} {} {} {}", r.id, r.rooms_required, r.room_size, r.load, r.duration);
        push_list(&mut out, &r.precedences);
        out.push('\n');
    }
    for a in &inst.onceoff {
        let _ = write!(
            out,
            "a {} {} {} {} {} {} {}",
            a.id, a.rooms_required, a.room_size, a.load, a.duration, a.value, a.penalty
        );
        push_list(&mut out, &a.precedences);
        out.push('\n');
    }
    out
}

/// Semantic problem found in a structurally parsed instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InstanceViolation {
    IndexOutOfRange { what: String, index: usize, limit: usize },
    PrecedenceCycle { activities: Vec<usize> },
    InsufficientRooms { activity: usize, size: RoomSize, required: usize, available: usize },
}

impl fmt::Display for InstanceViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::IndexOutOfRange { what, index, limit } => {
                write!(f, "{what} index {index} out of range (limit {limit})")
            }
            Self::PrecedenceCycle { activities } => write!(f, "precedence cycle through activities {activities:?}"),
            Self::InsufficientRooms { activity, size, required, available } => write!(
                f,
                "insufficient rooms: activity {activity} needs {required} {size} rooms, {available} exist"
            ),
        }
    }
}

/// Finds one cycle per strongly tangled region of the recurring precedence
/// graph (iterative DFS with colouring).
fn precedence_cycles<T: Scalar>(inst: &Instance<T>) -> Vec<Vec<usize>> {
    let n = inst.recurring.len();
    let succ = inst.successors();
    // 0 = unvisited, 1 = on stack, 2 = done
    let mut colour = vec![0u8; n];
    let mut cycles = Vec::new();
    for root in 0..n {
        if colour[root] != 0 {
            continue;
        }
        let mut stack: Vec<(usize, usize)> = vec![(root, 0)];
        let mut path = vec![root];
        colour[root] = 1;
        while let Some(&mut (node, ref mut next)) = stack.last_mut() {
            if *next < succ[node].len() {
                let child = succ[node][*next];
                *next += 1;
                match colour[child] {
                    0 => {
                        colour[child] = 1;
                        stack.push((child, 0));
                        path.push(child);
                    }
                    1 => {
                        let start = path.iter().position(|&v| v == child).unwrap_or(0);
                        let mut cyc: Vec<usize> = path[start..].to_vec();
                        cyc.sort_unstable();
                        cycles.push(cyc);
                    }
                    _ => {}
                }
            } else {
                colour[node] = 2;
                stack.pop();
                path.pop();
            }
        }
    }
    cycles.sort();
    cycles.dedup();
    cycles
}

/// Checks index ranges, precedence acyclicity and room satisfiability of
/// every recurring activity. Once-off activities are never scheduled, so
/// their room demands are not checked.
pub fn validate_instance<T: Scalar>(inst: &Instance<T>) -> Vec<InstanceViolation> {
    let mut out = Vec::new();
    let nb = inst.num_buildings();
    let nr = inst.num_recurring();
    for s in &inst.solar_maps {
        if s.building_id >= nb {
            out.push(InstanceViolation::IndexOutOfRange { what: "building".into(), index: s.building_id, limit: nb });
        }
    }
    for act in &inst.recurring {
        for &p in &act.precedences {
            if p >= nr {
                out.push(InstanceViolation::IndexOutOfRange { what: "precedence".into(), index: p, limit: nr });
            }
        }
    }
    for cyc in precedence_cycles(inst) {
        out.push(InstanceViolation::PrecedenceCycle { activities: cyc });
    }
    for act in &inst.recurring {
        let available = inst.total_rooms(act.room_size);
        if act.rooms_required > available {
            out.push(InstanceViolation::InsufficientRooms {
                activity: act.id,
                size: act.room_size,
                required: act.rooms_required,
                available,
            });
        }
    }
    out
}

/// Text of the six-record example instance used throughout the tests and docs.
pub const EXAMPLE_INSTANCE: &str = "ppoi 3 2 1 4 2
b 0 1 2
b 1 1 0
b 2 0 1
s 0 0
s 1 2
c 0 5 2 0.87
r 0 1 L 15 8 1 2
r 1 2 S 8 12 0
r 2 2 L 10 4 0
r 3 1 S 4 4 0
a 0 2 S 8 12 500 100 0
a 1 2 L 8 16 2000 1500 1 0
";

#[cfg(test)]
mod tests {
    use super::*;

    fn normalize(text: &str) -> Vec<Vec<String>> {
        text.lines()
            .map(|l| l.split_whitespace().map(str::to_string).collect::<Vec<_>>())
            .filter(|t| !t.is_empty())
            .collect()
    }

    #[test]
    fn example_parses() {
        let inst: Instance<f64> = parse_instance(EXAMPLE_INSTANCE).unwrap();
        assert_eq!(inst.counts(), [3, 2, 1, 4, 2]);
        let c = &inst.batteries[0];
        assert_eq!((c.capacity, c.max_power, c.efficiency), (5.0, 2.0, 0.87));
        let r0 = &inst.recurring[0];
        assert_eq!(r0.rooms_required, 1);
        assert_eq!(r0.room_size, RoomSize::Large);
        assert_eq!(r0.load, 15.0);
        assert_eq!(r0.duration, 8);
        assert_eq!(r0.precedences, vec![2]);
        assert_eq!(inst.onceoff[1].precedences, vec![0]);
        assert_eq!(inst.onceoff[1].value, 2000.0);
    }

    #[test]
    fn example_serializes_back() {
        let inst: Instance<f64> = parse_instance(EXAMPLE_INSTANCE).unwrap();
        assert_eq!(normalize(&serialize_instance(&inst)), normalize(EXAMPLE_INSTANCE));
    }

    #[test]
    fn empty_instance() {
        let inst: Instance<f64> = parse_instance("ppoi 0 0 0 0 0").unwrap();
        assert_eq!(inst, Instance::default());
        assert_eq!(serialize_instance(&inst).trim_end(), "ppoi 0 0 0 0 0");
    }

    #[test]
    fn whitespace_tolerated() {
        let text = "\n  ppoi   0 0 1 0 0  \n\n c 0  5\t2 0.87\n\n";
        let inst: Instance<f64> = parse_instance(text).unwrap();
        assert_eq!(inst.batteries.len(), 1);
    }

    #[test]
    fn header_count_mismatch() {
        let text = EXAMPLE_INSTANCE.replacen("ppoi 3 2 1 4 2", "ppoi 3 2 1 5 2", 1);
        let e = parse_instance::<f64>(&text).unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::CountMismatch { record: 'r', header: 5, found: 4 }), "{e}");
    }

    #[test]
    fn error_cases() {
        let cases: &[(&str, fn(&ParseErrorKind) -> bool)] = &[
            ("", |k| matches!(k, ParseErrorKind::MissingHeader)),
            ("b 0 1 1", |k| matches!(k, ParseErrorKind::MissingHeader)),
            ("ppoi 1 0 0 0 0\nx 0", |k| matches!(k, ParseErrorKind::UnknownRecord(_))),
            ("ppoi 1 0 0 0 0\nb 0 one 1", |k| matches!(k, ParseErrorKind::BadNumber { .. })),
            ("ppoi 1 0 0 0 0\nb 0 -1 1", |k| matches!(k, ParseErrorKind::BadNumber { .. })),
            ("ppoi 1 1 0 0 0\nb 0 1 1\ns 0 1", |k| matches!(k, ParseErrorKind::IndexOutOfRange { .. })),
            ("ppoi 0 0 0 1 0\nr 0 1 M 1 1 0", |k| matches!(k, ParseErrorKind::BadRoomSize { .. })),
            ("ppoi 0 0 0 1 0\nr 0 1 L 1 1 1 3", |k| matches!(k, ParseErrorKind::IndexOutOfRange { .. })),
            ("ppoi 0 0 0 1 0\nr 0 1 L 1 1 2 0", |k| matches!(k, ParseErrorKind::WrongArity { .. })),
            ("ppoi 0 0 0 1 0\nr 0 0 L 1 1 0", |k| matches!(k, ParseErrorKind::InvalidValue { .. })),
            ("ppoi 0 0 1 0 0\nc 0 5 2 1.5", |k| matches!(k, ParseErrorKind::InvalidValue { .. })),
            ("ppoi 0 0 1 0 0\nc 0 5 2 NaN", |k| matches!(k, ParseErrorKind::BadNumber { .. })),
            ("ppoi 2 0 0 0 0\nb 0 1 1\nb 0 1 1", |k| matches!(k, ParseErrorKind::DuplicateId { .. })),
            ("ppoi 2 0 0 0 0\nb 0 1 1\nb 2 1 1", |k| matches!(k, ParseErrorKind::IndexOutOfRange { .. })),
            ("ppoi 0 0 0 0 0\nppoi 0 0 0 0 0", |k| matches!(k, ParseErrorKind::UnknownRecord(_))),
        ];
        for (text, ok) in cases {
            let e = parse_instance::<f64>(text).unwrap_err();
            assert!(ok(&e.kind), "{text:?} gave {e}");
        }
    }

    #[test]
    fn error_reports_line_number() {
        let e = parse_instance::<f64>("ppoi 1 0 0 0 0\n\nb 0 x 1").unwrap_err();
        assert_eq!(e.line, 3);
    }

    #[test]
    fn out_of_order_ids_are_sorted() {
        let inst: Instance<f64> = parse_instance("ppoi 2 0 0 0 0\nb 1 0 3\nb 0 2 0").unwrap();
        assert_eq!(inst.buildings[0].small_rooms, 2);
        assert_eq!(inst.buildings[1].large_rooms, 3);
    }

    #[test]
    fn example_validates() {
        let inst: Instance<f64> = parse_instance(EXAMPLE_INSTANCE).unwrap();
        assert!(validate_instance(&inst).is_empty());
    }

    #[test]
    fn room_demand_boundary() {
        // three large rooms in total across the buildings
        let ok: Instance<f64> = parse_instance("ppoi 2 0 0 1 0\nb 0 0 2\nb 1 0 1\nr 0 3 L 5 2 0").unwrap();
        assert!(validate_instance(&ok).is_empty());
        let bad: Instance<f64> = parse_instance("ppoi 2 0 0 1 0\nb 0 0 2\nb 1 0 1\nr 0 4 L 5 2 0").unwrap();
        let v = validate_instance(&bad);
        assert_eq!(v.len(), 1);
        assert!(v[0].to_string().contains("insufficient rooms"));
    }

    #[test]
    fn two_cycle_detected() {
        let inst: Instance<f64> =
            parse_instance("ppoi 1 0 0 2 0\nb 0 2 2\nr 0 1 S 1 1 1 1\nr 1 1 S 1 1 1 0").unwrap();
        let v = validate_instance(&inst);
        assert_eq!(v, vec![InstanceViolation::PrecedenceCycle { activities: vec![0, 1] }]);
        assert!(v[0].to_string().contains("precedence cycle"));
    }

    #[test]
    fn self_loop_is_a_cycle() {
        let inst: Instance<f64> = parse_instance("ppoi 1 0 0 1 0\nb 0 2 2\nr 0 1 S 1 1 1 0").unwrap();
        assert_eq!(validate_instance(&inst), vec![InstanceViolation::PrecedenceCycle { activities: vec![0] }]);
    }

    #[test]
    fn constructed_instance_out_of_range() {
        let mut inst: Instance<f64> = parse_instance(EXAMPLE_INSTANCE).unwrap();
        inst.recurring[1].precedences.push(9);
        inst.solar_maps[0].building_id = 7;
        let v = validate_instance(&inst);
        assert_eq!(v.len(), 2);
    }

    #[test]
    fn f32_instances_parse() {
        let inst: Instance<f32> = parse_instance(EXAMPLE_INSTANCE).unwrap();
        assert_eq!(inst.batteries[0].efficiency, 0.87f32);
    }
}
