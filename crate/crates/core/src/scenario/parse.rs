//! Netlist reader.
//!
//! One statement per line; `#` starts a comment. Components:
//!
//! ```text
//! R<name> <n+> <n-> <ohms>
//! C<name> <n+> <n-> <farads> [derate=<1/V> vrated=<V>]
//! S<name> <n+> <n-> ctrl=[!]<control> [ron=] [roff=] [ton=] [toff=] [offset=]
//! V<name> <n+> <n-> dc=<V> | step=<V> at=<s> | ramp=<V> slew=<V/s> [at=<s>]
//! X<name> <n+> <n-> converter [voc=] [rint=] [cpar=]
//! X<name> <n+> <n-> probe [rin=] [cin=]
//! ```
//!
//! Directives: `.ctrl`, `.tran`, `.probe`, `.sweep`, `.mc`, `.end`.

use std::collections::BTreeMap;

use crate::analysis::MismatchModel;
use crate::circuit::{validate_component, Circuit, Component, ComponentKind, Derating, SourceSignal, SwitchDrive};
use crate::devices::{ControlSignal, ConverterParams, DriverSpec};
use crate::error::{Error, ParseError, Result};
use crate::mna::{IntegrationSettings, ProbeSpec};
use crate::units::parse_value;

use super::{Analysis, Scenario, ScenarioSource};

#[derive(Clone, Copy)]
struct Tok<'a> {
    col: usize,
    text: &'a str,
}

fn tokenize(line: &str) -> Vec<Tok<'_>> {
    let body = line.split('#').next().unwrap_or("");
    let mut out = Vec::new();
    let mut start: Option<(usize, usize)> = None;
    for (col, (byte, ch)) in body.char_indices().enumerate() {
        if ch.is_whitespace() {
            if let Some((c, b)) = start.take() {
                out.push(Tok {
                    col: c + 1,
                    text: &body[b..byte],
                });
            }
        } else if start.is_none() {
            start = Some((col, byte));
        }
    }
    if let Some((c, b)) = start {
        out.push(Tok {
            col: c + 1,
            text: &body[b..],
        });
    }
    out
}

pub(crate) fn is_identifier(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

struct Placed {
    line: usize,
    cols: [usize; 3],
}

struct Parser<'s> {
    origin: &'s str,
    line: usize,
    circuit: Circuit,
    placed: Vec<Placed>,
    switch_refs: Vec<(usize, usize, String)>,
    controls: BTreeMap<String, usize>,
    settings: Option<IntegrationSettings>,
    probes: Vec<(usize, usize, ProbeSpec)>,
    extra: Vec<Analysis>,
    ended: bool,
}

type PResult<T> = std::result::Result<T, ParseError>;

/// `key=value` parameters with the column of each value.
struct Params<'a> {
    items: Vec<(&'a str, usize, &'a str)>,
}

impl<'a> Params<'a> {
    fn get(&self, key: &str) -> Option<(usize, &'a str)> {
        self.items.iter().find(|(k, _, _)| *k == key).map(|(_, c, v)| (*c, *v))
    }
}

impl<'s> Parser<'s> {
    fn err(&self, col: usize, msg: impl Into<String>) -> ParseError {
        ParseError {
            origin: self.origin.to_string(),
            line: self.line,
            column: col,
            message: msg.into(),
        }
    }

    fn params<'a>(&self, toks: &[Tok<'a>], allowed: &[&str]) -> PResult<Params<'a>> {
        let mut items: Vec<(&'a str, usize, &'a str)> = Vec::new();
        for t in toks {
            let Some((k, v)) = t.text.split_once('=') else {
                return Err(self.err(t.col, format!("expected key=value, found '{}'", t.text)));
            };
            if !allowed.contains(&k) {
                return Err(self.err(
                    t.col,
                    format!("unknown parameter '{k}'; expected one of {}", allowed.join(", ")),
                ));
            }
            if items.iter().any(|(x, _, _)| *x == k) {
                return Err(self.err(t.col, format!("parameter '{k}' given twice")));
            }
            if v.is_empty() {
                return Err(self.err(t.col, format!("parameter '{k}' has no value")));
            }
            items.push((k, t.col + k.len() + 1, v));
        }
        Ok(Params { items })
    }

    fn value(&self, col: usize, text: &str) -> PResult<f64> {
        parse_value(text).map_err(|m| self.err(col, m))
    }

    fn opt_value(&self, p: &Params<'_>, key: &str, default: f64) -> PResult<f64> {
        match p.get(key) {
            Some((c, v)) => self.value(c, v),
            None => Ok(default),
        }
    }

    fn req_value(&self, p: &Params<'_>, key: &str, stmt_col: usize) -> PResult<f64> {
        match p.get(key) {
            Some((c, v)) => self.value(c, v),
            None => Err(self.err(stmt_col, format!("missing required parameter '{key}'"))),
        }
    }

    fn statement(&mut self, toks: &[Tok<'_>]) -> PResult<()> {
        let head = toks[0];
        if self.ended {
            return Err(self.err(head.col, "statement after .end"));
        }
        if head.text.starts_with('.') {
            return self.directive(toks);
        }
        let kind_letter = head.text.chars().next().expect("non-empty token");
        if !matches!(kind_letter, 'R' | 'C' | 'S' | 'V' | 'X') {
            return Err(self.err(head.col, format!("unknown statement '{}'", head.text)));
        }
        if head.text.len() < 2 || !is_identifier(head.text) {
            return Err(self.err(head.col, format!("invalid component name '{}'", head.text)));
        }
        if toks.len() < 3 {
            return Err(self.err(head.col, format!("'{}' needs two node labels", head.text)));
        }
        for t in &toks[1..3] {
            if !is_identifier(t.text) {
                return Err(self.err(t.col, format!("invalid node label '{}'", t.text)));
            }
        }
        if self.circuit.component(head.text).is_some() {
            return Err(self.err(head.col, format!("duplicate component name '{}'", head.text)));
        }
        let rest = &toks[3..];
        let kind = match kind_letter {
            'R' => {
                let [v] = rest else {
                    return Err(self.err(head.col, "resistor takes exactly one value"));
                };
                ComponentKind::Resistor {
                    resistance: self.value(v.col, v.text)?,
                }
            }
            'C' => {
                let Some(v) = rest.first() else {
                    return Err(self.err(head.col, "capacitor needs a value"));
                };
                let capacitance = self.value(v.col, v.text)?;
                let p = self.params(&rest[1..], &["derate", "vrated"])?;
                let derating = match (p.get("derate"), p.get("vrated")) {
                    (None, None) => None,
                    (Some((c1, d)), Some((c2, r))) => Some(Derating {
                        per_volt: self.value(c1, d)?,
                        rated_voltage: self.value(c2, r)?,
                    }),
                    _ => return Err(self.err(head.col, "derate and vrated must be given together")),
                };
                ComponentKind::Capacitor {
                    capacitance,
                    derating,
                }
            }
            'S' => {
                let p = self.params(rest, &["ctrl", "ron", "roff", "ton", "toff", "offset"])?;
                let Some((ccol, ctrl)) = p.get("ctrl") else {
                    return Err(self.err(head.col, "switch needs ctrl=<control>"));
                };
                let (inverted, name) = match ctrl.strip_prefix('!') {
                    Some(n) => (true, n),
                    None => (false, ctrl),
                };
                if !is_identifier(name) {
                    return Err(self.err(ccol, format!("invalid control name '{ctrl}'")));
                }
                let d = DriverSpec::default();
                self.switch_refs.push((self.line, ccol + usize::from(inverted), name.to_string()));
                ComponentKind::Switch {
                    on_resistance: self.opt_value(&p, "ron", 5.0)?,
                    off_resistance: self.opt_value(&p, "roff", 1e9)?,
                    drive: SwitchDrive {
                        control: name.to_string(),
                        inverted,
                        driver: DriverSpec {
                            turn_on_delay: self.opt_value(&p, "ton", d.turn_on_delay)?,
                            turn_off_delay: self.opt_value(&p, "toff", d.turn_off_delay)?,
                            offset: self.opt_value(&p, "offset", d.offset)?,
                        },
                    },
                }
            }
            'V' => {
                let p = self.params(rest, &["dc", "step", "ramp", "at", "slew"])?;
                let shapes = ["dc", "step", "ramp"].iter().filter(|k| p.get(k).is_some()).count();
                if shapes != 1 {
                    return Err(self.err(head.col, "source needs exactly one of dc=, step=, ramp="));
                }
                let signal = if let Some((c, v)) = p.get("dc") {
                    if p.get("at").is_some() || p.get("slew").is_some() {
                        return Err(self.err(head.col, "dc source takes no at= or slew="));
                    }
                    SourceSignal::Dc {
                        level: self.value(c, v)?,
                    }
                } else if let Some((c, v)) = p.get("step") {
                    if p.get("slew").is_some() {
                        return Err(self.err(head.col, "step source takes no slew="));
                    }
                    SourceSignal::Step {
                        level: self.value(c, v)?,
                        at: self.opt_value(&p, "at", 0.0)?,
                    }
                } else {
                    let (c, v) = p.get("ramp").expect("counted above");
                    SourceSignal::Ramp {
                        level: self.value(c, v)?,
                        slew: self.req_value(&p, "slew", head.col)?,
                        at: self.opt_value(&p, "at", 0.0)?,
                    }
                };
                ComponentKind::IdealSource { signal }
            }
            _ => {
                let Some(model) = rest.first() else {
                    return Err(self.err(head.col, "device needs a model: converter or probe"));
                };
                match model.text {
                    "converter" => {
                        let p = self.params(&rest[1..], &["voc", "rint", "cpar"])?;
                        let d = ConverterParams::default();
                        ComponentKind::ConverterSource {
                            open_circuit_voltage: self.opt_value(&p, "voc", d.open_circuit_voltage)?,
                            internal_resistance: self.opt_value(&p, "rint", d.internal_resistance)?,
                            parallel_capacitance: self.opt_value(&p, "cpar", d.parallel_capacitance)?,
                        }
                    }
                    "probe" => {
                        let p = self.params(&rest[1..], &["rin", "cin"])?;
                        ComponentKind::Probe {
                            input_resistance: self.opt_value(&p, "rin", 100e6)?,
                            input_capacitance: self.opt_value(&p, "cin", 5.5e-12)?,
                        }
                    }
                    other => {
                        return Err(self.err(model.col, format!("unknown device model '{other}'")));
                    }
                }
            }
        };
        let pos = self.circuit.node(toks[1].text);
        let neg = self.circuit.node(toks[2].text);
        let comp = Component {
            name: head.text.to_string(),
            kind,
            pos,
            neg,
        };
        if pos == neg {
            return Err(self.err(toks[2].col, "both terminals on the same node"));
        }
        validate_component(&comp).map_err(|e| self.err(head.col, strip_prefix(e)))?;
        self.circuit
            .add(&comp.name, pos, neg, comp.kind)
            .map_err(|e| self.err(head.col, strip_prefix(e)))?;
        self.placed.push(Placed {
            line: self.line,
            cols: [head.col, toks[1].col, toks[2].col],
        });
        Ok(())
    }

    fn directive(&mut self, toks: &[Tok<'_>]) -> PResult<()> {
        let head = toks[0];
        let rest = &toks[1..];
        match head.text {
            ".ctrl" => {
                let [name, shape, params @ ..] = rest else {
                    return Err(self.err(head.col, ".ctrl needs a name and a shape"));
                };
                if !is_identifier(name.text) {
                    return Err(self.err(name.col, format!("invalid control name '{}'", name.text)));
                }
                if shape.text != "square" {
                    return Err(self.err(shape.col, format!("unknown control shape '{}'", shape.text)));
                }
                if self.controls.contains_key(name.text) {
                    return Err(self.err(name.col, format!("control '{}' defined twice", name.text)));
                }
                let p = self.params(params, &["f", "duty", "phase"])?;
                let ctrl = ControlSignal {
                    frequency: self.req_value(&p, "f", head.col)?,
                    duty: self.opt_value(&p, "duty", 0.5)?,
                    phase: self.opt_value(&p, "phase", 0.0)?,
                };
                ctrl.validate().map_err(|m| self.err(name.col, m))?;
                self.controls.insert(name.text.to_string(), self.line);
                self.circuit.set_control(name.text, ctrl);
            }
            ".tran" => {
                if self.settings.is_some() {
                    return Err(self.err(head.col, "only one .tran directive is allowed"));
                }
                let [step, stop, params @ ..] = rest else {
                    return Err(self.err(head.col, ".tran needs a step and a stop time"));
                };
                let mut settings = IntegrationSettings::new(self.value(step.col, step.text)?, self.value(stop.col, stop.text)?);
                let p = self.params(params, &["damp"])?;
                if let Some((c, v)) = p.get("damp") {
                    settings.damping_steps = v
                        .parse()
                        .map_err(|_| self.err(c, format!("damp must be a non-negative integer, got '{v}'")))?;
                }
                settings
                    .validate()
                    .map_err(|e| self.err(step.col, strip_prefix(e)))?;
                self.settings = Some(settings);
            }
            ".probe" => {
                let spec = match rest {
                    [one] => match one.text.strip_prefix("I(").and_then(|s| s.strip_suffix(')')) {
                        Some(name) => ProbeSpec::Current(name.to_string()),
                        None => ProbeSpec::Node(one.text.to_string()),
                    },
                    [a, b] => ProbeSpec::Pair(a.text.to_string(), b.text.to_string()),
                    _ => return Err(self.err(head.col, ".probe takes one or two nodes, or I(<component>)")),
                };
                for t in rest {
                    let label = t.text.strip_prefix("I(").and_then(|s| s.strip_suffix(')')).unwrap_or(t.text);
                    if !is_identifier(label) {
                        return Err(self.err(t.col, format!("invalid probe target '{}'", t.text)));
                    }
                }
                self.probes.push((self.line, rest[0].col, spec));
            }
            ".sweep" => {
                let p = self.params(rest, &["f"])?;
                let Some((c, list)) = p.get("f") else {
                    return Err(self.err(head.col, ".sweep needs f=<list>"));
                };
                let mut frequencies = Vec::new();
                let mut col = c;
                for item in list.split(',') {
                    let f = self.value(col, item)?;
                    if !(f > 0.0) {
                        return Err(self.err(col, format!("sweep frequency must be positive, got {f}")));
                    }
                    frequencies.push(f);
                    col += item.chars().count() + 1;
                }
                self.extra.push(Analysis::Sweep { frequencies });
            }
            ".mc" => {
                let p = self.params(rest, &["trials", "sigma", "spread", "seed", "median"])?;
                let int = |key: &str| -> PResult<u64> {
                    let (c, v) = p
                        .get(key)
                        .ok_or_else(|| self.err(head.col, format!("missing required parameter '{key}'")))?;
                    v.parse()
                        .map_err(|_| self.err(c, format!("{key} must be a non-negative integer, got '{v}'")))
                };
                let model = MismatchModel {
                    trials: int("trials")? as usize,
                    seed: int("seed")?,
                    sigma: self.opt_value(&p, "sigma", 0.0)?,
                    offset_spread: self.opt_value(&p, "spread", 0.0)?,
                    off_resistance_median: match p.get("median") {
                        Some((c, v)) => Some(self.value(c, v)?),
                        None => None,
                    },
                };
                model.validate().map_err(|e| self.err(head.col, strip_prefix(e)))?;
                self.extra.push(Analysis::MonteCarlo(model));
            }
            ".end" => {
                if let Some(t) = rest.first() {
                    return Err(self.err(t.col, ".end takes no arguments"));
                }
                self.ended = true;
            }
            other => return Err(self.err(head.col, format!("unknown directive '{other}'"))),
        }
        Ok(())
    }

    fn finish(mut self) -> PResult<Scenario> {
        for (line, col, name) in &self.switch_refs {
            if !self.controls.contains_key(name) {
                self.line = *line;
                return Err(self.err(*col, format!("undefined control '{name}'")));
            }
        }
        if let Some(node) = self.circuit.floating_node() {
            let (ci, slot) = self
                .circuit
                .components()
                .iter()
                .enumerate()
                .find_map(|(i, c)| {
                    if c.pos == node {
                        Some((i, 1))
                    } else if c.neg == node {
                        Some((i, 2))
                    } else {
                        None
                    }
                })
                .expect("floating nodes belong to some component");
            self.line = self.placed[ci].line;
            return Err(self.err(
                self.placed[ci].cols[slot],
                format!("node '{}' has no DC path to ground", self.circuit.label(node)),
            ));
        }
        let Some(settings) = self.settings else {
            self.line = self.line.max(1);
            return Err(self.err(1, "missing .tran directive"));
        };
        let mut probes = Vec::new();
        for (line, col, spec) in std::mem::take(&mut self.probes) {
            self.line = line;
            let missing = match &spec {
                ProbeSpec::Node(n) => self.circuit.find_node(n).is_none().then(|| format!("undefined node '{n}'")),
                ProbeSpec::Pair(a, b) => [a, b]
                    .into_iter()
                    .find(|n| self.circuit.find_node(n).is_none())
                    .map(|n| format!("undefined node '{n}'")),
                ProbeSpec::Current(c) => self
                    .circuit
                    .component(c)
                    .is_none()
                    .then(|| format!("undefined component '{c}'")),
            };
            if let Some(m) = missing {
                return Err(self.err(col, m));
            }
            probes.push(spec);
        }
        let mut analyses = vec![Analysis::Transient];
        analyses.append(&mut self.extra);
        Ok(Scenario {
            circuit: self.circuit,
            settings,
            probes,
            analyses,
        })
    }
}

fn strip_prefix(e: Error) -> String {
    match e {
        Error::InvalidCircuit(m) | Error::InvalidParameter(m) => m,
        other => other.to_string(),
    }
}

/// Parse netlist text into a scenario. Diagnostics name the origin, line,
/// and column of the offending token.
pub fn parse(source: &ScenarioSource) -> Result<Scenario> {
    let mut p = Parser {
        origin: &source.origin,
        line: 0,
        circuit: Circuit::new(),
        placed: Vec::new(),
        switch_refs: Vec::new(),
        controls: BTreeMap::new(),
        settings: None,
        probes: Vec::new(),
        extra: Vec::new(),
        ended: false,
    };
    for (i, raw) in source.text.split('\n').enumerate() {
        p.line = i + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        let toks = tokenize(line);
        if toks.is_empty() {
            continue;
        }
        p.statement(&toks)?;
    }
    Ok(p.finish()?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn src(text: &str) -> ScenarioSource {
        ScenarioSource::new("test.ckt", text)
    }

    fn parse_err(text: &str) -> ParseError {
        match parse(&src(text)) {
            Err(Error::Parse(e)) => e,
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn resistor_to_ground() {
        let s = parse(&src("V1 1 0 dc=800\nR1 1 0 3.6M\n.tran 1u 1m\n")).unwrap();
        let r = s.circuit.component("R1").unwrap();
        assert_eq!(r.kind, ComponentKind::Resistor { resistance: 3.6e6 });
        assert!(r.neg.is_ground());
        assert_eq!(s.circuit.label(r.pos), "1");
    }

    #[test]
    fn capacitor_suffix() {
        let s = parse(&src("R1 2 0 1k\nR2 3 0 1k\nC1 2 3 220p\n.tran 1u 1m")).unwrap();
        match s.circuit.component("C1").unwrap().kind {
            ComponentKind::Capacitor { capacitance, .. } => assert_eq!(capacitance, 2.2e-10),
            _ => panic!(),
        }
    }

    #[test]
    fn undefined_control_is_reported() {
        let e = parse_err("R1 1 0 1k\nR2 2 0 1k\nS1 1 2 ctrl=g ron=5 roff=1G\n.tran 1u 1m\n");
        assert_eq!(e.line, 3);
        assert_eq!(e.column, 13);
        assert!(e.message.contains("undefined control 'g'"), "{e}");
        assert!(e.to_string().starts_with("test.ckt: line 3, column 13:"));
    }

    #[test]
    fn suffixes_are_case_sensitive() {
        let e = parse_err("R1 1 0 3.6meg\n");
        assert_eq!((e.line, e.column), (1, 8));
        let s = parse(&src("R1 1 0 5m\n.tran 1u 1m")).unwrap();
        assert_eq!(
            s.circuit.component("R1").unwrap().kind,
            ComponentKind::Resistor { resistance: 5e-3 }
        );
    }

    #[test]
    fn duplicate_names_and_unknown_statements() {
        let e = parse_err("R1 1 0 1k\nR1 1 0 2k\n");
        assert_eq!(e.line, 2);
        assert!(e.message.contains("duplicate"));
        let e = parse_err("L1 1 0 1u\n");
        assert!(e.message.contains("unknown statement"));
        let e = parse_err(".option x\n");
        assert!(e.message.contains("unknown directive"));
    }

    #[test]
    fn statements_after_end_are_rejected() {
        let e = parse_err("R1 1 0 1k\n.tran 1u 1m\n.end\n# fine\nR2 1 0 1k\n");
        assert_eq!(e.line, 5);
        assert!(parse(&src("R1 1 0 1k\n.tran 1u 1m\n.end\n# trailing comment\n\n")).is_ok());
    }

    #[test]
    fn crlf_and_comments() {
        let s = parse(&src("# header\r\nR1 A GND 1k # load\r\n.tran 1u 1m\r\n.probe A\r\n")).unwrap();
        assert_eq!(s.probes, vec![ProbeSpec::Node("A".into())]);
        assert!(s.circuit.component("R1").unwrap().neg.is_ground());
    }

    #[test]
    fn floating_node_names_the_node() {
        let e = parse_err("R1 A 0 1k\nC1 A X 1n\n.tran 1u 1m\n");
        assert_eq!((e.line, e.column), (2, 6));
        assert!(e.message.contains("'X'"));
    }

    #[test]
    fn missing_tran_and_bad_probe() {
        assert!(parse_err("R1 A 0 1k\n").message.contains(".tran"));
        let e = parse_err("R1 A 0 1k\n.tran 1u 1m\n.probe Q\n");
        assert_eq!((e.line, e.column), (3, 8));
        let e = parse_err("R1 A 0 1k\n.tran 1u 1m\n.probe I(R9)\n");
        assert!(e.message.contains("R9"));
    }

    #[test]
    fn full_switch_and_sources() {
        let text = "\
.ctrl g square f=100 duty=0.5 phase=0
V1 e 0 ramp=1.8k slew=35M
R9 e A 1k
S1 A O ctrl=g ron=5 roff=1G ton=0.4m toff=0.1m offset=-10u
S2 O 0 ctrl=!g
Xload O 0 probe
.tran 1u 30m damp=3
.probe A O
.probe I(S1)
.sweep f=2,5,10
.mc trials=10 sigma=1 spread=50u seed=7
.end
";
        let s = parse(&src(text)).unwrap();
        assert_eq!(s.settings.damping_steps, 3);
        assert_eq!(s.sweep_frequencies().unwrap(), &[2.0, 5.0, 10.0]);
        assert_eq!(s.mismatch_model().unwrap().trials, 10);
        match &s.circuit.component("S2").unwrap().kind {
            ComponentKind::Switch { drive, .. } => assert!(drive.inverted),
            _ => panic!(),
        }
        match &s.circuit.component("S1").unwrap().kind {
            ComponentKind::Switch { drive, .. } => assert_eq!(drive.driver.offset, -10e-6),
            _ => panic!(),
        }
    }
}
