//! Plain-text `.crn` model format and the built-in benchmark networks.
//!
//! ```text
//! # comments run to end of line
//! @model PP
//! @species Pred Prey
//! @init Pred=200 Prey=200
//! @time 200
//! @bound 10000
//! @reaction rep: Prey -> 2 Prey @ 1
//! @reaction eat: Pred + Prey -> 2 Pred @ 0.005
//! @reaction starve: Pred -> 0 @ 1
//! ```
//!
//! `0` denotes the empty complex. Species missing from `@init` start at 0.
//! The optional `@bound` stops a run once any count exceeds it; without
//! predators the prey above grow exponentially, and the bound keeps such
//! runs finite.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;

use crate::crn::{CrnModel, Reaction, State};
use crate::error::{Error, Result};

const PREDATOR_PREY: &str = "\
@model PP
@species Pred Prey
@init Pred=200 Prey=200
@time 200
@bound 10000
@reaction rep: Prey -> 2 Prey @ 1
@reaction eat: Pred + Prey -> 2 Pred @ 0.005
@reaction starve: Pred -> 0 @ 1
";

const VIRAL: &str = "\
@model VI
@species DNA RNA P V
@init RNA=1
@time 200
@reaction d0: DNA + P -> V @ 1.125e-5
@reaction x: RNA -> RNA + P @ 1000
@reaction t: DNA -> DNA + RNA @ 0.025
@reaction p: RNA -> DNA + RNA @ 1
@reaction d2: RNA -> 0 @ 0.25
@reaction d5: P -> 0 @ 1.9985
";

const TOGGLE_SWITCH: &str = "\
@model TS
@species mA mB sA sB pA pB
@time 50000
@reaction r0: 0 -> mA @ 1
@reaction r1: 0 -> mB @ 1
@reaction r2: mA -> 0 @ 0.1
@reaction r3: mB -> 0 @ 0.1
@reaction r4: pA -> 0 @ 0.1
@reaction r5: mA -> sA @ 5
@reaction r6: mB -> sB @ 5
@reaction r7: mB + sA -> sA @ 20
@reaction r8: mA + sB -> sB @ 20
@reaction r9: pB -> 0 @ 0.1
@reaction r10: sA -> 0 @ 0.01
@reaction r11: sB -> 0 @ 0.01
@reaction r12: sA -> sA + pA @ 10
@reaction r13: sB -> sB + pB @ 10
";

const REPRESSILATOR: &str = "\
@model RP
@species mA mB mC pA pB pC
@init mA=10 pA=500
@time 50000
@reaction spawnA: 0 -> mA @ 0.1
@reaction spawnB: 0 -> mB @ 0.1
@reaction spawnC: 0 -> mC @ 0.1
@reaction prodA: mA -> mA + pA @ 50
@reaction prodB: mB -> mB + pB @ 50
@reaction prodC: mC -> mC + pC @ 50
@reaction despawnA: mA -> 0 @ 0.01
@reaction despawnB: mB -> 0 @ 0.01
@reaction despawnC: mC -> 0 @ 0.01
@reaction degradeA: mA + pB -> pB @ 50
@reaction degradeB: mB + pC -> pC @ 50
@reaction degradeC: mC + pA -> pA @ 50
@reaction dissolveA: pA -> 0 @ 0.01
@reaction dissolveB: pB -> 0 @ 0.01
@reaction dissolveC: pC -> 0 @ 0.01
";

// On/off switch whose every reaction emits one X; X counts switching events.
const SWITCH: &str = "\
@model SWITCH
@species ON OFF X
@init ON=1 X=50
@time 200
@reaction on_off: ON -> OFF + X @ 1
@reaction off_on: OFF -> ON + X @ 1
";

const BUILTIN_SOURCES: [(&str, &str); 5] = [
    ("PP", PREDATOR_PREY),
    ("VI", VIRAL),
    ("TS", TOGGLE_SWITCH),
    ("RP", REPRESSILATOR),
    ("SWITCH", SWITCH),
];

/// All built-in models keyed by their short name.
pub fn builtin_models() -> BTreeMap<String, CrnModel> {
    BUILTIN_SOURCES
        .iter()
        .map(|(name, src)| {
            let model = parse_model(src).expect("built-in model source is valid");
            (name.to_string(), model)
        })
        .collect()
}

/// Looks up one built-in model by name (case-insensitive).
pub fn builtin(name: &str) -> Option<CrnModel> {
    BUILTIN_SOURCES
        .iter()
        .find(|(n, _)| n.eq_ignore_ascii_case(name))
        .map(|(_, src)| parse_model(src).expect("built-in model source is valid"))
}

/// Source text of a built-in model, as shipped.
pub fn builtin_source(name: &str) -> Option<&'static str> {
    BUILTIN_SOURCES
        .iter()
        .find(|(n, _)| n.eq_ignore_ascii_case(name))
        .map(|(_, src)| *src)
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Syntax {
        line,
        column,
        message: message.into(),
    }
}

/// Column (1-based) of `token` inside `line`; both must come from the same buffer.
fn column_of(line: &str, token: &str) -> usize {
    let offset = token.as_ptr() as usize - line.as_ptr() as usize;
    line[..offset].chars().count() + 1
}

struct PendingReaction {
    line: usize,
    name: String,
    reactants: Vec<(String, u32, usize)>,
    products: Vec<(String, u32, usize)>,
    rate: f64,
}

pub fn parse_model(text: &str) -> Result<CrnModel> {
    let mut name: Option<String> = None;
    let mut species: Vec<String> = Vec::new();
    let mut init: Vec<(String, u64, usize, usize)> = Vec::new();
    let mut t_end: Option<f64> = None;
    let mut bound: Option<u64> = None;
    let mut pending: Vec<PendingReaction> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let content = raw.split('#').next().unwrap_or("");
        let trimmed = content.trim();
        if trimmed.is_empty() {
            continue;
        }
        let (directive, rest) = match trimmed.find(char::is_whitespace) {
            Some(pos) => (&trimmed[..pos], trimmed[pos..].trim_start()),
            None => (trimmed, ""),
        };
        let col = column_of(raw, directive);
        match directive {
            "@model" => {
                if name.is_some() {
                    return Err(syntax(lineno, col, "duplicate @model"));
                }
                if rest.is_empty() || rest.contains(char::is_whitespace) {
                    return Err(syntax(lineno, col, "@model expects a single name"));
                }
                name = Some(rest.to_string());
            }
            "@species" => {
                if rest.is_empty() {
                    return Err(syntax(lineno, col, "@species expects at least one name"));
                }
                for tok in rest.split_whitespace() {
                    if !is_identifier(tok) {
                        return Err(syntax(
                            lineno,
                            column_of(raw, tok),
                            format!("invalid species name `{tok}`"),
                        ));
                    }
                    if species.iter().any(|s| s == tok) {
                        return Err(syntax(
                            lineno,
                            column_of(raw, tok),
                            format!("duplicate species `{tok}`"),
                        ));
                    }
                    species.push(tok.to_string());
                }
            }
            "@init" => {
                for tok in rest.split_whitespace() {
                    let tcol = column_of(raw, tok);
                    let (sp, val) = tok
                        .split_once('=')
                        .ok_or_else(|| syntax(lineno, tcol, "expected <species>=<count>"))?;
                    let count: u64 = val
                        .parse()
                        .map_err(|_| syntax(lineno, tcol, format!("invalid initial count `{val}`")))?;
                    init.push((sp.to_string(), count, lineno, tcol));
                }
            }
            "@time" => {
                if t_end.is_some() {
                    return Err(syntax(lineno, col, "duplicate @time"));
                }
                let t: f64 = rest
                    .parse()
                    .map_err(|_| syntax(lineno, col, format!("invalid time `{rest}`")))?;
                if !(t.is_finite() && t > 0.0) {
                    return Err(syntax(lineno, col, "@time must be positive"));
                }
                t_end = Some(t);
            }
            "@bound" => {
                if bound.is_some() {
                    return Err(syntax(lineno, col, "duplicate @bound"));
                }
                let b: u64 = rest
                    .parse()
                    .ok()
                    .filter(|&b| b > 0)
                    .ok_or_else(|| syntax(lineno, col, format!("invalid bound `{rest}`")))?;
                bound = Some(b);
            }
            "@reaction" => pending.push(parse_reaction(raw, rest, lineno)?),
            other => {
                return Err(syntax(lineno, col, format!("unknown directive `{other}`")));
            }
        }
    }

    let end = text.lines().count().max(1);
    let name = name.ok_or_else(|| syntax(end, 1, "missing @model"))?;
    let t_end = t_end.ok_or_else(|| syntax(end, 1, "missing @time"))?;

    let index = |sp: &str, line: usize, col: usize| {
        species
            .iter()
            .position(|s| s == sp)
            .ok_or_else(|| syntax(line, col, format!("unknown species `{sp}`")))
    };

    let mut initial = State::zeros(species.len());
    let mut seen_init = HashSet::new();
    for (sp, count, line, col) in &init {
        let i = index(sp, *line, *col)?;
        if !seen_init.insert(i) {
            return Err(syntax(*line, *col, format!("species `{sp}` initialised twice")));
        }
        initial.0[i] = *count;
    }

    let mut reactions = Vec::with_capacity(pending.len());
    let mut seen_labels = HashSet::new();
    for p in pending {
        if !seen_labels.insert(p.name.clone()) {
            return Err(syntax(p.line, 1, format!("duplicate reaction `{}`", p.name)));
        }
        let mut reactants = vec![0u32; species.len()];
        let mut products = vec![0u32; species.len()];
        for (sp, n, col) in &p.reactants {
            reactants[index(sp, p.line, *col)?] += n;
        }
        for (sp, n, col) in &p.products {
            products[index(sp, p.line, *col)?] += n;
        }
        reactions.push(Reaction::new(p.name, reactants, products, p.rate)?);
    }

    CrnModel::new(name, species, reactions, initial, t_end)?.with_bound(bound)
}

fn is_identifier(tok: &str) -> bool {
    let mut chars = tok.chars();
    matches!(chars.next(), Some(c) if c.is_alphabetic() || c == '_')
        && chars.all(|c| c.is_alphanumeric() || c == '_' || c == '\'')
}

fn parse_reaction(raw: &str, rest: &str, line: usize) -> Result<PendingReaction> {
    let rcol = column_of(raw, rest);
    let (label, body) = rest
        .split_once(':')
        .ok_or_else(|| syntax(line, rcol, "expected `<label>: <complex> -> <complex> @ <rate>`"))?;
    let label = label.trim();
    if !is_identifier(label) {
        return Err(syntax(line, rcol, format!("invalid reaction label `{label}`")));
    }
    let (lhs, rhs_rate) = body
        .split_once("->")
        .ok_or_else(|| syntax(line, column_of(raw, body), "missing `->`"))?;
    let (rhs, rate_str) = rhs_rate
        .split_once('@')
        .ok_or_else(|| syntax(line, column_of(raw, rhs_rate), "missing `@ <rate>`"))?;
    let rate_tok = rate_str.trim();
    let rate_col = if rate_tok.is_empty() {
        column_of(raw, rate_str)
    } else {
        column_of(raw, rate_tok)
    };
    let rate: f64 = rate_tok
        .parse()
        .map_err(|_| syntax(line, rate_col, format!("invalid rate `{rate_tok}`")))?;
    if !(rate.is_finite() && rate > 0.0) {
        return Err(syntax(line, rate_col, "rate must be positive"));
    }
    Ok(PendingReaction {
        line,
        name: label.to_string(),
        reactants: parse_complex(raw, lhs, line)?,
        products: parse_complex(raw, rhs, line)?,
        rate,
    })
}

fn parse_complex(raw: &str, text: &str, line: usize) -> Result<Vec<(String, u32, usize)>> {
    let trimmed = text.trim();
    if trimmed == "0" {
        return Ok(Vec::new());
    }
    if trimmed.is_empty() {
        return Err(syntax(line, column_of(raw, text), "empty complex; write `0`"));
    }
    let mut terms = Vec::new();
    for term in trimmed.split('+') {
        let term = term.trim();
        if term.is_empty() {
            return Err(syntax(line, column_of(raw, trimmed), "dangling `+`"));
        }
        let col = column_of(raw, term);
        let parts: Vec<&str> = term.split_whitespace().collect();
        let (count, sp) = match parts.as_slice() {
            [sp] => (1, *sp),
            [n, sp] => {
                let n: u32 = n
                    .parse()
                    .map_err(|_| syntax(line, col, format!("invalid stoichiometry `{n}`")))?;
                (n, *sp)
            }
            _ => return Err(syntax(line, col, format!("malformed term `{term}`"))),
        };
        if !is_identifier(sp) {
            return Err(syntax(line, col, format!("invalid species `{sp}`")));
        }
        if count > 0 {
            terms.push((sp.to_string(), count, col));
        }
    }
    Ok(terms)
}

fn write_complex(out: &mut String, species: &[String], stoich: &[u32]) {
    let mut first = true;
    for (sp, &n) in species.iter().zip(stoich) {
        if n == 0 {
            continue;
        }
        if !first {
            out.push_str(" + ");
        }
        first = false;
        if n > 1 {
            let _ = write!(out, "{n} ");
        }
        out.push_str(sp);
    }
    if first {
        out.push('0');
    }
}

/// Canonical text form: header directives in fixed order, only nonzero
/// initial counts, one reaction per line in model order.
pub fn serialize_model(model: &CrnModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "@model {}", model.name);
    let _ = writeln!(out, "@species {}", model.species.join(" "));
    let inits: Vec<String> = model
        .species
        .iter()
        .zip(model.initial_state.counts())
        .filter(|(_, &c)| c > 0)
        .map(|(s, c)| format!("{s}={c}"))
        .collect();
    if !inits.is_empty() {
        let _ = writeln!(out, "@init {}", inits.join(" "));
    }
    let _ = writeln!(out, "@time {}", model.t_end);
    if let Some(b) = model.bound {
        let _ = writeln!(out, "@bound {b}");
    }
    for r in &model.reactions {
        let _ = write!(out, "@reaction {}: ", r.name);
        write_complex(&mut out, &model.species, &r.reactants);
        out.push_str(" -> ");
        write_complex(&mut out, &model.species, &r.products);
        let _ = writeln!(out, " @ {}", r.rate);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crn::propensity;

    #[test]
    fn predator_prey_parses() {
        let m = parse_model(PREDATOR_PREY).unwrap();
        assert_eq!(m.species_count(), 2);
        assert_eq!(m.reactions.len(), 3);
        assert_eq!(m.initial_state, State(vec![200, 200]));
        assert_eq!(m.t_end, 200.0);
        assert_eq!(m.reaction("eat").unwrap().rate, 0.005);
        assert_eq!(m.bound, Some(10_000));
    }

    #[test]
    fn bound_directive() {
        let base = "@model B\n@species X\n@init X=5\n@time 1\n";
        assert_eq!(parse_model(base).unwrap().bound, None);
        assert_eq!(parse_model(&format!("{base}@bound 7\n")).unwrap().bound, Some(7));
        for bad in ["@bound 0", "@bound x", "@bound 3", "@bound 9\n@bound 9"] {
            assert!(parse_model(&format!("{base}{bad}\n")).is_err(), "{bad}");
        }
    }

    #[test]
    fn viral_parses() {
        let m = builtin("VI").unwrap();
        assert_eq!(m.species, ["DNA", "RNA", "P", "V"]);
        assert_eq!(m.initial_state, State(vec![0, 1, 0, 0]));
        assert_eq!(m.t_end, 200.0);
        assert_eq!(m.reaction("d0").unwrap().rate, 1.125e-5);
        assert_eq!(m.reaction("x").unwrap().rate, 1000.0);
        assert_eq!(m.reaction("d5").unwrap().rate, 1.9985);
    }

    #[test]
    fn builtins_transcribed() {
        let all = builtin_models();
        assert_eq!(all.len(), 5);
        let pp = &all["PP"];
        assert_eq!(pp.t_end, 200.0);
        let ts = &all["TS"];
        assert_eq!(ts.reactions.len(), 14);
        assert_eq!(ts.initial_state, State::zeros(6));
        assert_eq!(ts.t_end, 50000.0);
        let r7 = ts.reaction("r7").unwrap();
        assert_eq!(r7.rate, 20.0);
        assert_eq!(r7.reactants, vec![0, 1, 1, 0, 0, 0]);
        assert_eq!(r7.products, vec![0, 0, 1, 0, 0, 0]);
        let rp = &all["RP"];
        assert_eq!(rp.reactions.len(), 15);
        assert_eq!(rp.initial_state, State(vec![10, 0, 0, 500, 0, 0]));
        assert_eq!(rp.t_end, 50000.0);
        let sw = &all["SWITCH"];
        assert_eq!(sw.species, ["ON", "OFF", "X"]);
        assert_eq!(sw.reactions.len(), 2);
        assert!(sw.reactions.iter().all(|r| r.rate == 1.0));
        assert_eq!(sw.initial_state, State(vec![1, 0, 50]));
        assert_eq!(sw.t_end, 200.0);
    }

    #[test]
    fn builtins_have_finite_initial_propensities() {
        for m in builtin_models().values() {
            m.validate().unwrap();
            for r in &m.reactions {
                let a = propensity(r, &m.initial_state);
                assert!(a.is_finite() && a >= 0.0);
            }
        }
    }

    #[test]
    fn builtin_sources_are_canonical() {
        for (_, src) in BUILTIN_SOURCES {
            let m = parse_model(src).unwrap();
            let once = serialize_model(&m);
            assert_eq!(parse_model(&once).unwrap(), m);
            assert_eq!(serialize_model(&parse_model(&once).unwrap()), once);
        }
    }

    #[test]
    fn serialized_pp_has_three_reactions() {
        let text = serialize_model(&builtin("PP").unwrap());
        assert_eq!(text.lines().filter(|l| l.starts_with("@reaction")).count(), 3);
    }

    #[test]
    fn empty_reaction_list() {
        let m = parse_model("@model E\n@species A\n@time 1\n").unwrap();
        let text = serialize_model(&m);
        assert_eq!(text.lines().filter(|l| l.starts_with("@reaction")).count(), 0);
        assert_eq!(parse_model(&text).unwrap(), m);
    }

    #[test]
    fn missing_time_is_error() {
        let err = parse_model("@model A\n@species X\n").unwrap_err();
        assert!(matches!(err, Error::Syntax { .. }), "{err}");
    }

    #[test]
    fn rejects_bad_input() {
        let base = "@model A\n@species X Y\n@time 1\n";
        let cases = [
            "@reaction r: X -> Z @ 1\n",
            "@reaction r: X -> Y @ 0\n",
            "@reaction r: X -> Y @ -2\n",
            "@reaction r: X -> Y\n",
            "@reaction r X -> Y @ 1\n",
            "@reaction r: X + -> Y @ 1\n",
            "@init Z=3\n",
            "@init X=-1\n",
            "@species X\n",
            "@bogus\n",
        ];
        for c in cases {
            let text = format!("{base}{c}");
            assert!(parse_model(&text).is_err(), "accepted: {c}");
        }
        assert!(parse_model("@model A\n@species X\n@time 0\n").is_err());
        assert!(parse_model("@model A\n@species X\n@time -3\n").is_err());
    }

    #[test]
    fn syntax_errors_carry_position() {
        let text = "@model A\n@species X\n@time 1\n@reaction r: X -> X @ abc\n";
        match parse_model(text).unwrap_err() {
            Error::Syntax { line, column, .. } => {
                assert_eq!(line, 4);
                assert_eq!(column, 23);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn comments_and_stoichiometry() {
        let text = "# header\n@model D # trailing\n@species A B\n@init A=10\n@time 5\n\
                    @reaction dim: 2 A -> B @ 0.5\n@reaction back: B -> A + A @ 1\n";
        let m = parse_model(text).unwrap();
        assert_eq!(m.reactions[0].reactants, vec![2, 0]);
        assert_eq!(m.reactions[1].products, vec![2, 0]);
        let again = parse_model(&serialize_model(&m)).unwrap();
        assert_eq!(again, m);
    }
}
