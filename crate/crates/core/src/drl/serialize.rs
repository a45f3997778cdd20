//! Plain-text agent snapshots for inference-mode reloads.
//!
//! ```text
//! cellfree-agent 1
//! algorithm <name>
//! state_dim <n>
//! action <discrete|continuous> <n>
//! scaler <values...>          (count, mean, m2 per state dimension)
//! network <name> <dims...>
//! <parameters...>             (weights row-major then biases, per layer)
//! ```
//!
//! Floats use Rust's shortest round-trip formatting, so a reload is exact.

use std::fmt::Write as _;

use super::agents::{make_agent, ActionSpace, Agent, Algorithm, Hyper};
use super::normalize::ObservationScaler;
use crate::error::{Error, Result};

const MAGIC: &str = "cellfree-agent 1";

fn join(values: impl IntoIterator<Item = f64>) -> String {
    let mut s = String::new();
    for (i, v) in values.into_iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        write!(s, "{v}").expect("string write");
    }
    s
}

pub fn save_agent(agent: &dyn Agent) -> String {
    let mut out = String::new();
    let (kind, n) = match agent.action_space() {
        ActionSpace::Discrete(n) => ("discrete", n),
        ActionSpace::Continuous(n) => ("continuous", n),
    };
    writeln!(out, "{MAGIC}").expect("string write");
    writeln!(out, "algorithm {}", agent.algorithm()).expect("string write");
    writeln!(out, "state_dim {}", agent.state_dim()).expect("string write");
    writeln!(out, "action {kind} {n}").expect("string write");
    writeln!(out, "scaler {}", join(agent.scaler().to_flat())).expect("string write");
    for (name, net) in agent.networks() {
        let dims: Vec<String> = net.dims().iter().map(|d| d.to_string()).collect();
        writeln!(out, "network {name} {}", dims.join(" ")).expect("string write");
        writeln!(out, "{}", join(net.params())).expect("string write");
    }
    out
}

fn parse_err(msg: impl Into<String>) -> Error {
    Error::Parse(msg.into())
}

fn floats(line: &str) -> Result<Vec<f64>> {
    line.split_whitespace()
        .map(|t| t.parse::<f64>().map_err(|e| parse_err(format!("bad number '{t}': {e}"))))
        .collect()
}

fn field<'a>(line: Option<&'a str>, key: &str) -> Result<&'a str> {
    let line = line.ok_or_else(|| parse_err(format!("missing '{key}' line")))?;
    line.strip_prefix(key)
        .map(str::trim)
        .ok_or_else(|| parse_err(format!("expected '{key}', found '{line}'")))
}

/// Rebuilds an agent from [`save_agent`] output. Optimizer state and replay
/// memory are not stored; the result is meant for inference.
pub fn load_agent(text: &str, hyper: &Hyper) -> Result<Box<dyn Agent>> {
    let mut lines = text.lines();
    if lines.next() != Some(MAGIC) {
        return Err(parse_err("not an agent snapshot"));
    }
    let algorithm: Algorithm = field(lines.next(), "algorithm")?.parse()?;
    let state_dim: usize = field(lines.next(), "state_dim")?
        .parse()
        .map_err(|e| parse_err(format!("state_dim: {e}")))?;
    let action = field(lines.next(), "action")?;
    let mut parts = action.split_whitespace();
    let kind = parts.next().unwrap_or_default();
    let n: usize = parts
        .next()
        .ok_or_else(|| parse_err("action size missing"))?
        .parse()
        .map_err(|e| parse_err(format!("action size: {e}")))?;
    let space = match kind {
        "discrete" => ActionSpace::Discrete(n),
        "continuous" => ActionSpace::Continuous(n),
        other => return Err(parse_err(format!("unknown action kind '{other}'"))),
    };
    let scaler = ObservationScaler::from_flat(&floats(field(lines.next(), "scaler")?)?)
        .filter(|s| s.dim() == state_dim)
        .ok_or_else(|| parse_err("scaler does not match the state dimension"))?;
    let mut agent = make_agent(algorithm, state_dim, space, hyper, 0)?;
    *agent.scaler_mut() = scaler;
    let mut nets = agent.networks_mut();
    let mut seen = 0;
    while let Some(header) = lines.next() {
        if header.trim().is_empty() {
            continue;
        }
        let rest = field(Some(header), "network")?;
        let mut it = rest.split_whitespace();
        let name = it.next().ok_or_else(|| parse_err("network name missing"))?;
        let dims: Vec<usize> = it
            .map(|t| t.parse().map_err(|e| parse_err(format!("network dims: {e}"))))
            .collect::<Result<_>>()?;
        let params = floats(lines.next().ok_or_else(|| parse_err(format!("parameters of '{name}' missing")))?)?;
        let (_, net) = nets
            .iter_mut()
            .find(|(n, _)| *n == name)
            .ok_or_else(|| parse_err(format!("{algorithm} has no network '{name}'")))?;
        if net.dims() != dims {
            return Err(parse_err(format!("network '{name}' dims {dims:?} differ from {:?}", net.dims())));
        }
        net.set_params(&params)?;
        seen += 1;
    }
    if seen != nets.len() {
        return Err(parse_err(format!("expected {} networks, found {seen}", nets.len())));
    }
    drop(nets);
    Ok(agent)
}
