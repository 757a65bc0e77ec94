//! Line-oriented instance text format.
//!
//! ```text
//! StringID Type x y demand ReadyTime DueDate ServiceTime
//! D0 d 0.5 0.5 0.0 0.0 2.0 0.0
//! C1 c 0.12 0.83 0.21 0.06 0.86 0.02
//! S6 f 0.4 0.61 0.0 0.0 2.0 0.0
//!
//! Q Vehicle load capacity /1.5/
//! B Battery capacity /0.1/
//! r Energy consumption rate /0.25/
//! g Charging rate /1.0/
//! H Planning horizon /2.0/
//! ```
//!
//! Numbers are written in fixed notation with 12 significant digits, trailing
//! zeros trimmed but at least one fractional digit kept. Generated instances
//! are rounded to 12 significant digits up front, so writing and parsing
//! them is lossless.

use crate::model::{Customer, Instance, ModelError, Node, NodeKind, Point, TimeWindow, VehicleConfig};
use std::fmt::Write as _;
use thiserror::Error;

pub const SIGNIFICANT_DIGITS: usize = 12;
pub const HEADER: &str = "StringID Type x y demand ReadyTime DueDate ServiceTime";

const PARAMS: [(&str, &str); 5] = [
    ("Q", "Vehicle load capacity"),
    ("B", "Battery capacity"),
    ("r", "Energy consumption rate"),
    ("g", "Charging rate"),
    ("H", "Planning horizon"),
];

#[derive(Debug, Error, PartialEq)]
pub enum ParseError {
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("unexpected end of input after line {last_line}: {message}")]
    Truncated { last_line: usize, message: String },
    #[error("invalid instance: {0}")]
    Invalid(#[from] ModelError),
}

fn decimal_exponent(x: f64) -> i32 {
    let s = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x);
    s.rsplit('e').next().and_then(|e| e.parse().ok()).unwrap_or(0)
}

/// Rounds to 12 significant decimal digits.
pub fn quantize(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { 0.0 } else { x };
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x).parse().expect("formatted float parses")
}

/// Fixed-notation rendering with 12 significant digits.
pub fn format_number(x: f64) -> String {
    if x == 0.0 {
        return "0.0".to_string();
    }
    let decimals = (SIGNIFICANT_DIGITS as i32 - 1 - decimal_exponent(x)).max(1) as usize;
    let mut s = format!("{:.*}", decimals, x);
    if s.contains('.') {
        while s.ends_with('0') && !s.ends_with(".0") {
            s.pop();
        }
    }
    s
}

/// Rounds every float of the instance to 12 significant digits.
pub fn quantize_instance(instance: &mut Instance) {
    let q = |p: &mut Point| {
        p.x = quantize(p.x);
        p.y = quantize(p.y);
    };
    q(&mut instance.depot.position);
    for c in &mut instance.customers {
        q(&mut c.node.position);
        c.demand = quantize(c.demand);
        c.service = quantize(c.service);
        c.window.earliest = quantize(c.window.earliest);
        c.window.latest = quantize(c.window.latest);
    }
    for s in &mut instance.stations {
        q(&mut s.position);
    }
    let v = &mut instance.vehicle;
    v.capacity = quantize(v.capacity);
    v.battery = quantize(v.battery);
    v.consumption_rate = quantize(v.consumption_rate);
    v.charge_rate = quantize(v.charge_rate);
    instance.horizon = quantize(instance.horizon);
}

pub fn string_id(kind: NodeKind, id: usize) -> String {
    match kind {
        NodeKind::Depot => format!("D{id}"),
        NodeKind::Customer => format!("C{id}"),
        NodeKind::Station => format!("S{id}"),
    }
}

pub fn write_instance_text(instance: &Instance) -> String {
    let f = format_number;
    let h = instance.horizon;
    let mut out = String::new();
    out.push_str(HEADER);
    out.push('\n');
    let mut row = |kind: NodeKind, id: usize, p: Point, demand: f64, window: TimeWindow, service: f64| {
        let _ = writeln!(
            out,
            "{} {} {} {} {} {} {} {}",
            string_id(kind, id),
            kind.code(),
            f(p.x),
            f(p.y),
            f(demand),
            f(window.earliest),
            f(window.latest),
            f(service)
        );
    };
    let full = TimeWindow::new(0.0, h);
    row(NodeKind::Depot, 0, instance.depot.position, 0.0, full, 0.0);
    for c in &instance.customers {
        row(NodeKind::Customer, c.id(), c.position(), c.demand, c.window, c.service);
    }
    for s in &instance.stations {
        row(NodeKind::Station, s.id, s.position, 0.0, full, 0.0);
    }
    out.push('\n');
    let v = &instance.vehicle;
    for ((sym, label), value) in PARAMS.iter().zip([v.capacity, v.battery, v.consumption_rate, v.charge_rate, h]) {
        let _ = writeln!(out, "{sym} {label} /{}/", f(value));
    }
    out
}

fn parse_number(token: &str, line: usize, what: &str) -> Result<f64, ParseError> {
    token
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| ParseError::Line { line, message: format!("invalid {what} '{token}'") })
}

pub fn parse_instance_text(text: &str) -> Result<Instance, ParseError> {
    let err = |line: usize, message: String| ParseError::Line { line, message };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty());

    let Some((first, header)) = lines.next() else {
        return Err(ParseError::Truncated { last_line: 0, message: "missing header".into() });
    };
    if header.split_whitespace().collect::<Vec<_>>() != HEADER.split_whitespace().collect::<Vec<_>>() {
        return Err(err(first, format!("expected header '{HEADER}'")));
    }

    let mut depot = None;
    let mut customers = Vec::new();
    let mut stations = Vec::new();
    let mut params: [Option<f64>; 5] = [None; 5];
    let mut last_line = first;

    for (no, line) in lines {
        last_line = no;
        if let Some(rest) = line.strip_suffix('/') {
            let sym = line.split_whitespace().next().unwrap_or("");
            let Some(slot) = PARAMS.iter().position(|(s, _)| *s == sym) else {
                return Err(err(no, format!("unknown parameter '{sym}'")));
            };
            let Some((_, value)) = rest.rsplit_once('/') else {
                return Err(err(no, "parameter value must be enclosed in slashes".into()));
            };
            if params[slot].is_some() {
                return Err(err(no, format!("duplicate parameter '{sym}'")));
            }
            params[slot] = Some(parse_number(value.trim(), no, sym)?);
            continue;
        }
        if params.iter().any(Option::is_some) {
            return Err(err(no, "node row after parameter lines".into()));
        }
        let cols: Vec<&str> = line.split_whitespace().collect();
        if cols.len() != 8 {
            return Err(err(no, format!("expected 8 columns, found {}", cols.len())));
        }
        let kind = NodeKind::from_code(cols[1]).ok_or_else(|| err(no, format!("unknown node type '{}'", cols[1])))?;
        let id = cols[0]
            .get(1..)
            .and_then(|digits| digits.parse::<usize>().ok())
            .filter(|id| string_id(kind, *id) == cols[0])
            .ok_or_else(|| err(no, format!("string id '{}' does not match type '{}'", cols[0], cols[1])))?;
        let [x, y, demand, ready, due, service] = [
            ("x", cols[2]),
            ("y", cols[3]),
            ("demand", cols[4]),
            ("ReadyTime", cols[5]),
            ("DueDate", cols[6]),
            ("ServiceTime", cols[7]),
        ]
        .map(|(what, tok)| parse_number(tok, no, what));
        let position = Point::new(x?, y?);
        if !position.in_unit_square() {
            return Err(err(no, format!("coordinate {position} outside the unit square")));
        }
        let (demand, ready, due, service) = (demand?, ready?, due?, service?);
        let expected = match kind {
            NodeKind::Depot => 0,
            NodeKind::Customer => customers.len() + 1,
            NodeKind::Station => customers.len() + stations.len() + 1,
        };
        if id != expected || (kind == NodeKind::Depot && depot.is_some()) {
            return Err(err(no, format!("node id {id} out of order, expected {expected}")));
        }
        match kind {
            NodeKind::Depot => depot = Some(Node::depot(position)),
            NodeKind::Customer => {
                if depot.is_none() || !stations.is_empty() {
                    return Err(err(no, "customers must follow the depot and precede stations".into()));
                }
                customers.push(Customer::new(id, position, demand, service, TimeWindow::new(ready, due)));
            }
            NodeKind::Station => {
                if depot.is_none() {
                    return Err(err(no, "stations must follow the depot".into()));
                }
                stations.push(Node::station(id, position));
            }
        }
    }

    let depot = depot.ok_or_else(|| ParseError::Truncated { last_line, message: "missing depot row".into() })?;
    let mut values = [0.0; 5];
    for (slot, (sym, label)) in PARAMS.iter().enumerate() {
        values[slot] = params[slot].ok_or_else(|| ParseError::Truncated {
            last_line,
            message: format!("missing parameter line '{sym} {label}'"),
        })?;
    }
    let [capacity, battery, consumption_rate, charge_rate, horizon] = values;
    let instance = Instance {
        depot,
        customers,
        stations,
        vehicle: VehicleConfig { capacity, battery, consumption_rate, charge_rate },
        horizon,
    };
    instance.validate()?;
    Ok(instance)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> Instance {
        Instance {
            depot: Node::depot(Point::new(0.5, 0.5)),
            customers: vec![
                Customer::new(1, Point::new(0.1, 0.2), 0.3, 0.02, TimeWindow::new(0.0, 0.8)),
                Customer::new(2, Point::new(0.9, 0.7), 0.123456789012, 0.01, TimeWindow::new(1.2, 2.0)),
            ],
            stations: vec![Node::station(3, Point::new(0.4, 0.6))],
            vehicle: VehicleConfig { capacity: 1.5, battery: 0.1, consumption_rate: 0.25, charge_rate: 1.0 },
            horizon: 2.0,
        }
    }

    #[test]
    fn number_format() {
        assert_eq!(format_number(0.5), "0.5");
        assert_eq!(format_number(2.0), "2.0");
        assert_eq!(format_number(0.0), "0.0");
        assert_eq!(format_number(1.0 / 3.0), "0.333333333333");
        assert_eq!(format_number(0.000012345), "0.000012345");
        assert_eq!(format_number(123.456), "123.456");
        assert_eq!(quantize(0.1 + 0.2), 0.3);
    }

    #[test]
    fn depot_row_and_layout() {
        let text = write_instance_text(&tiny());
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], HEADER);
        assert_eq!(lines[1], "D0 d 0.5 0.5 0.0 0.0 2.0 0.0");
        assert_eq!(lines[2], "C1 c 0.1 0.2 0.3 0.0 0.8 0.02");
        assert_eq!(lines[4], "S3 f 0.4 0.6 0.0 0.0 2.0 0.0");
        assert_eq!(lines[5], "");
        assert_eq!(lines[6], "Q Vehicle load capacity /1.5/");
        assert_eq!(lines[10], "H Planning horizon /2.0/");
    }

    #[test]
    fn roundtrip_tiny() {
        let inst = tiny();
        assert_eq!(parse_instance_text(&write_instance_text(&inst)).unwrap(), inst);
    }

    #[test]
    fn parse_errors_name_lines() {
        let text = write_instance_text(&tiny());
        let bad = text.replace("C1 c", "C1 x");
        assert!(matches!(parse_instance_text(&bad), Err(ParseError::Line { line: 3, .. })));

        let truncated: String = text.lines().take(7).map(|l| format!("{l}\n")).collect();
        assert!(matches!(
            parse_instance_text(&truncated),
            Err(ParseError::Truncated { last_line: 7, .. })
        ));

        let outside = text.replace("C1 c 0.1", "C1 c 1.1");
        assert!(matches!(parse_instance_text(&outside), Err(ParseError::Line { line: 3, .. })));

        let misnumbered = text.replace("C2 c", "C5 c");
        assert!(matches!(parse_instance_text(&misnumbered), Err(ParseError::Line { line: 4, .. })));

        let mislabeled = text.replace("S3 f", "C3 f");
        assert!(matches!(parse_instance_text(&mislabeled), Err(ParseError::Line { line: 5, .. })));

        assert!(matches!(parse_instance_text(""), Err(ParseError::Truncated { .. })));
    }
}
