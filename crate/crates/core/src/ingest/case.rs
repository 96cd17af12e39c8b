//! Steady-state network cases and the case-script reader.
//!
//! The reader accepts the common text case format built from assignments
//! such as `mpc.baseMVA = 100;` and `mpc.bus = [ ... ];`. Only `baseMVA`,
//! `bus`, `gen` and `branch` are interpreted; other assignments are skipped.

use std::collections::HashSet;

use crate::error::Position;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BusKind {
    Slack,
    Pv,
    Pq,
}

/// Bus record; loads and shunts in per-unit on the case base.
#[derive(Debug, Clone, PartialEq)]
pub struct Bus {
    pub id: usize,
    pub kind: BusKind,
    pub p_load: f64,
    pub q_load: f64,
    pub shunt_g: f64,
    pub shunt_b: f64,
    /// Voltage magnitude setpoint (pv and slack buses).
    pub v_setpoint: f64,
    /// Angle setpoint in radians (slack bus).
    pub v_angle_setpoint: f64,
    /// Voltage magnitude column as stored in the file.
    pub vm: f64,
    /// Voltage angle column as stored in the file, radians.
    pub va: f64,
}

impl Bus {
    pub fn pq(id: usize, p_load: f64, q_load: f64) -> Self {
        Self {
            id,
            kind: BusKind::Pq,
            p_load,
            q_load,
            shunt_g: 0.0,
            shunt_b: 0.0,
            v_setpoint: 1.0,
            v_angle_setpoint: 0.0,
            vm: 1.0,
            va: 0.0,
        }
    }

    pub fn slack(id: usize, v: f64) -> Self {
        Self { kind: BusKind::Slack, v_setpoint: v, vm: v, ..Self::pq(id, 0.0, 0.0) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub from: usize,
    pub to: usize,
    pub r: f64,
    pub x: f64,
    /// Total line charging susceptance.
    pub b_charging: f64,
    /// Off-nominal tap ratio on the `from` side; 1.0 when nominal.
    pub tap: f64,
}

impl Branch {
    pub fn line(from: usize, to: usize, r: f64, x: f64) -> Self {
        Self { from, to, r, x, b_charging: 0.0, tap: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub bus: usize,
    pub p_set: f64,
    pub q_set: f64,
    pub v_setpoint: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkCase {
    /// System base in MVA.
    pub base_power: f64,
    pub buses: Vec<Bus>,
    pub branches: Vec<Branch>,
    pub generators: Vec<Generator>,
}

impl NetworkCase {
    pub fn bus_index(&self, id: usize) -> Option<usize> {
        self.buses.iter().position(|b| b.id == id)
    }

    pub fn slack_index(&self) -> Option<usize> {
        self.buses.iter().position(|b| b.kind == BusKind::Slack)
    }

    pub fn labels(&self) -> Vec<String> {
        self.buses.iter().map(|b| b.id.to_string()).collect()
    }

    /// Net scheduled complex injection per bus (generation minus load).
    pub fn scheduled_injections(&self) -> Vec<crate::C64> {
        let mut s: Vec<crate::C64> =
            self.buses.iter().map(|b| crate::C64::new(-b.p_load, -b.q_load)).collect();
        for g in &self.generators {
            if let Some(k) = self.bus_index(g.bus) {
                s[k] += crate::C64::new(g.p_set, g.q_set);
            }
        }
        s
    }

    pub fn validate(&self) -> Result<()> {
        let mut ids = HashSet::new();
        for b in &self.buses {
            if !ids.insert(b.id) {
                return Err(Error::Invalid(format!("duplicate bus id {}", b.id)));
            }
        }
        let slacks = self.buses.iter().filter(|b| b.kind == BusKind::Slack).count();
        if slacks != 1 {
            return Err(Error::Invalid(format!("expected exactly one slack bus, found {slacks}")));
        }
        for br in &self.branches {
            for end in [br.from, br.to] {
                if !ids.contains(&end) {
                    return Err(Error::UnknownBus(end.to_string()));
                }
            }
            if br.r == 0.0 && br.x == 0.0 {
                return Err(Error::ZeroImpedance { from: br.from.to_string(), to: br.to.to_string() });
            }
            if !(br.tap > 0.0) {
                return Err(Error::Invalid(format!("branch {}-{} has tap {}", br.from, br.to, br.tap)));
            }
        }
        for g in &self.generators {
            if !ids.contains(&g.bus) {
                return Err(Error::UnknownBus(g.bus.to_string()));
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Lexer

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(f64),
    Str,
    Eq,
    Semi,
    Comma,
    Newline,
    Open(char),
    Close(char),
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    pos: Position,
}

fn lex(text: &str) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line_no = ln + 1;
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        // `function mpc = case14` header lines carry no data.
        if line.trim_start().starts_with("function") {
            out.push(Token { tok: Tok::Newline, pos: Position { line: line_no, column: chars.len() + 1 } });
            continue;
        }
        while i < chars.len() {
            let c = chars[i];
            let pos = Position { line: line_no, column: i + 1 };
            match c {
                '%' => break,
                ' ' | '\t' | '\r' => i += 1,
                '=' => {
                    out.push(Token { tok: Tok::Eq, pos });
                    i += 1;
                }
                ';' => {
                    out.push(Token { tok: Tok::Semi, pos });
                    i += 1;
                }
                ',' => {
                    out.push(Token { tok: Tok::Comma, pos });
                    i += 1;
                }
                '[' | '{' => {
                    out.push(Token { tok: Tok::Open(c), pos });
                    i += 1;
                }
                ']' | '}' => {
                    out.push(Token { tok: Tok::Close(c), pos });
                    i += 1;
                }
                '\'' | '"' => {
                    let close = chars[i + 1..].iter().position(|&d| d == c).ok_or_else(|| {
                        Error::parse(line_no, i + 1, "unterminated string literal")
                    })?;
                    out.push(Token { tok: Tok::Str, pos });
                    i += close + 2;
                }
                c if c.is_ascii_alphabetic() || c == '_' => {
                    let start = i;
                    while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == '.') {
                        i += 1;
                    }
                    let word: String = chars[start..i].iter().collect();
                    let tok = match word.as_str() {
                        "Inf" | "inf" => Tok::Number(f64::INFINITY),
                        "NaN" | "nan" => Tok::Number(f64::NAN),
                        _ => Tok::Ident(word),
                    };
                    out.push(Token { tok, pos });
                }
                c if c.is_ascii_digit() || c == '.' || c == '-' || c == '+' => {
                    let start = i;
                    i += 1;
                    while i < chars.len() {
                        let d = chars[i];
                        let exp_sign = (d == '-' || d == '+') && matches!(chars[i - 1], 'e' | 'E');
                        if d.is_ascii_digit() || d == '.' || d == 'e' || d == 'E' || exp_sign {
                            i += 1;
                        } else {
                            break;
                        }
                    }
                    let word: String = chars[start..i].iter().collect();
                    let inf_follows = chars[i..].starts_with(&['I', 'n', 'f']);
                    let value = if (word == "-" || word == "+") && inf_follows {
                        i += 3;
                        if word == "-" { f64::NEG_INFINITY } else { f64::INFINITY }
                    } else {
                        word.parse::<f64>().map_err(|_| Error::parse(line_no, start + 1, format!("malformed number `{word}`")))?
                    };
                    out.push(Token { tok: Tok::Number(value), pos });
                }
                other => return Err(Error::parse(line_no, i + 1, format!("unexpected character `{other}`"))),
            }
        }
        out.push(Token { tok: Tok::Newline, pos: Position { line: line_no, column: chars.len() + 1 } });
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Parser

struct Table {
    rows: Vec<Vec<f64>>,
    row_pos: Vec<Position>,
}

enum Value {
    Number(f64),
    Table(Table),
    Other,
}

struct Parser {
    toks: Vec<Token>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.toks.get(self.at)
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.toks.get(self.at).cloned();
        self.at += 1;
        t
    }

    fn end_pos(&self) -> Position {
        self.toks.last().map(|t| t.pos).unwrap_or(Position { line: 1, column: 1 })
    }

    fn skip_separators(&mut self) {
        while matches!(self.peek().map(|t| &t.tok), Some(Tok::Newline | Tok::Semi | Tok::Comma)) {
            self.at += 1;
        }
    }

    fn statements(&mut self) -> Result<Vec<(String, Position, Value)>> {
        let mut out = Vec::new();
        loop {
            self.skip_separators();
            let Some(tok) = self.bump() else { break };
            let name = match tok.tok {
                Tok::Ident(name) => name,
                other => {
                    return Err(Error::Parse { pos: tok.pos, msg: format!("expected an assignment, found {other:?}") })
                }
            };
            match self.bump() {
                Some(Token { tok: Tok::Eq, .. }) => {}
                Some(t) => return Err(Error::Parse { pos: t.pos, msg: format!("expected `=` after `{name}`") }),
                None => return Err(Error::Parse { pos: self.end_pos(), msg: format!("expected `=` after `{name}`") }),
            }
            let value = self.value(&name)?;
            out.push((name, tok.pos, value));
        }
        Ok(out)
    }

    fn value(&mut self, name: &str) -> Result<Value> {
        let Some(tok) = self.bump() else {
            return Err(Error::Parse { pos: self.end_pos(), msg: format!("missing value for `{name}`") });
        };
        match tok.tok {
            Tok::Number(v) => Ok(Value::Number(v)),
            Tok::Str => Ok(Value::Other),
            Tok::Open('[') => self.table(name, tok.pos).map(Value::Table),
            Tok::Open('{') => {
                // Cell arrays (bus names and the like) are skipped wholesale.
                let mut depth = 1;
                while depth > 0 {
                    match self.bump().map(|t| t.tok) {
                        Some(Tok::Open(_)) => depth += 1,
                        Some(Tok::Close(_)) => depth -= 1,
                        Some(_) => {}
                        None => {
                            return Err(Error::Parse { pos: tok.pos, msg: format!("unterminated `{{` in `{name}`") })
                        }
                    }
                }
                Ok(Value::Other)
            }
            other => Err(Error::Parse { pos: tok.pos, msg: format!("unexpected {other:?} as value of `{name}`") }),
        }
    }

    fn table(&mut self, name: &str, open: Position) -> Result<Table> {
        let mut rows = Vec::new();
        let mut row_pos = Vec::new();
        let mut row: Vec<f64> = Vec::new();
        let mut start: Option<Position> = None;
        loop {
            let Some(tok) = self.bump() else {
                return Err(Error::Parse { pos: open, msg: format!("unterminated `[` in `{name}`") });
            };
            match tok.tok {
                Tok::Number(v) => {
                    start.get_or_insert(tok.pos);
                    row.push(v);
                }
                Tok::Comma => {}
                Tok::Semi | Tok::Newline | Tok::Close(']') => {
                    if !row.is_empty() {
                        rows.push(std::mem::take(&mut row));
                        row_pos.push(start.take().expect("row start recorded"));
                    }
                    if tok.tok == Tok::Close(']') {
                        break;
                    }
                }
                other => {
                    return Err(Error::Parse { pos: tok.pos, msg: format!("unexpected {other:?} inside `{name}`") })
                }
            }
        }
        if let Some(first) = rows.first() {
            let width = first.len();
            for (k, r) in rows.iter().enumerate() {
                if r.len() != width {
                    return Err(Error::Parse {
                        pos: row_pos[k],
                        msg: format!("row {} of `{name}` has {} columns, expected {width}", k + 1, r.len()),
                    });
                }
            }
        }
        Ok(Table { rows, row_pos })
    }
}

fn field(name: &str) -> &str {
    name.rsplit('.').next().unwrap_or(name)
}

fn require_width(t: &Table, name: &str, min: usize) -> Result<()> {
    if let Some(r) = t.rows.first() {
        if r.len() < min {
            return Err(Error::Parse {
                pos: t.row_pos[0],
                msg: format!("row 1 of `{name}` has {} columns, at least {min} required", r.len()),
            });
        }
    }
    Ok(())
}

fn as_id(v: f64, pos: Position, what: &str) -> Result<usize> {
    if v >= 0.0 && v.fract() == 0.0 && v < 1e15 {
        Ok(v as usize)
    } else {
        Err(Error::Parse { pos, msg: format!("{what} `{v}` is not a non-negative integer") })
    }
}

const BUS_MIN_COLS: usize = 13;
const GEN_MIN_COLS: usize = 10;
const BRANCH_MIN_COLS: usize = 11;

/// Parses a case script into per-unit quantities on the system base.
pub fn parse_case_script(text: &str) -> Result<NetworkCase> {
    let toks = lex(text)?;
    let statements = Parser { toks, at: 0 }.statements()?;

    let mut base: Option<f64> = None;
    let mut bus_t = None;
    let mut gen_t = None;
    let mut branch_t = None;
    for (name, pos, value) in statements {
        match (field(&name), value) {
            ("baseMVA", Value::Number(v)) => base = Some(v),
            ("baseMVA", _) => return Err(Error::Parse { pos, msg: "baseMVA must be a number".into() }),
            ("bus", Value::Table(t)) => bus_t = Some((pos, t)),
            ("gen", Value::Table(t)) => gen_t = Some((pos, t)),
            ("branch", Value::Table(t)) => branch_t = Some((pos, t)),
            (f @ ("bus" | "gen" | "branch"), _) => {
                return Err(Error::Parse { pos, msg: format!("`{f}` must be a numeric table") })
            }
            (_, _) => log::warn!("skipping unsupported case field `{name}` ({pos})"),
        }
    }
    let base = base.ok_or_else(|| Error::Invalid("case has no baseMVA".into()))?;
    if !(base > 0.0) {
        return Err(Error::Invalid(format!("baseMVA must be positive, got {base}")));
    }
    let (_, bus_t) = bus_t.ok_or_else(|| Error::Invalid("case has no bus table".into()))?;
    require_width(&bus_t, "bus", BUS_MIN_COLS)?;

    let mut buses = Vec::with_capacity(bus_t.rows.len());
    for (r, pos) in bus_t.rows.iter().zip(&bus_t.row_pos) {
        let kind = match r[1] as i64 {
            1 => BusKind::Pq,
            2 => BusKind::Pv,
            3 => BusKind::Slack,
            other => return Err(Error::Parse { pos: *pos, msg: format!("unsupported bus type {other}") }),
        };
        buses.push(Bus {
            id: as_id(r[0], *pos, "bus id")?,
            kind,
            p_load: r[2] / base,
            q_load: r[3] / base,
            shunt_g: r[4] / base,
            shunt_b: r[5] / base,
            v_setpoint: r[7],
            v_angle_setpoint: r[8].to_radians(),
            vm: r[7],
            va: r[8].to_radians(),
        });
    }

    let mut generators = Vec::new();
    if let Some((_, gen_t)) = gen_t {
        require_width(&gen_t, "gen", GEN_MIN_COLS)?;
        for (r, pos) in gen_t.rows.iter().zip(&gen_t.row_pos) {
            if r[7] <= 0.0 {
                continue;
            }
            generators.push(Generator {
                bus: as_id(r[0], *pos, "generator bus")?,
                p_set: r[1] / base,
                q_set: r[2] / base,
                v_setpoint: r[5],
            });
        }
    }

    let mut branches = Vec::new();
    if let Some((_, branch_t)) = branch_t {
        require_width(&branch_t, "branch", BRANCH_MIN_COLS)?;
        for (r, pos) in branch_t.rows.iter().zip(&branch_t.row_pos) {
            if r[10] == 0.0 {
                continue;
            }
            if r[9] != 0.0 {
                return Err(Error::Parse {
                    pos: *pos,
                    msg: format!("phase-shifting transformers are not supported (angle {})", r[9]),
                });
            }
            branches.push(Branch {
                from: as_id(r[0], *pos, "branch from bus")?,
                to: as_id(r[1], *pos, "branch to bus")?,
                r: r[2],
                x: r[3],
                b_charging: r[4],
                tap: if r[8] == 0.0 { 1.0 } else { r[8] },
            });
        }
    }

    // Voltage setpoints of regulated buses come from their generators.
    for bus in buses.iter_mut() {
        if bus.kind == BusKind::Pq {
            continue;
        }
        match generators.iter().find(|g| g.bus == bus.id) {
            Some(g) => bus.v_setpoint = g.v_setpoint,
            None if bus.kind == BusKind::Pv => {
                log::warn!("pv bus {} has no in-service generator; treating it as pq", bus.id);
                bus.kind = BusKind::Pq;
            }
            None => {}
        }
    }

    let case = NetworkCase { base_power: base, buses, branches, generators };
    case.validate()?;
    Ok(case)
}
