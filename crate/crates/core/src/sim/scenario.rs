//! Scripted runs over a single deterministic event loop.
//!
//! ```text
//! # firewall
//! scheme bgn
//! policies firewall.pol          # relative to the script
//! policy eq 3 22 set 6 2         # inline, same syntax
//! stateful off
//! seed 7
//! inject 000000000000000000000000080045... expect forward
//! tcp 127.0.0.1:5000 10.0.0.2:80 SYN expect drop at 20
//! udp 10.0.0.1:53 10.0.0.2:53 expect forward
//! ```
//!
//! Configuration lines must precede the first injection. Times are logical
//! ticks; without `at` each injection is one tick after the previous one.

use std::fmt;
use std::net::{Ipv4Addr, SocketAddrV4};
use std::path::Path;

use crate::netfn::{parse_line, parse_policy_file, Layout, NetworkFunction, Policy};
use crate::ops::OpCounts;
use crate::schemes::SchemeId;

use super::fabric::{Fabric, Message, Role};
use super::frame::{tcp_flags, RawFrame};
use super::roles::{Ctx, Deployment, SimConfig};
use super::{SimError, Verdict};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceEvent {
    pub time: u64,
    pub role: Role,
    pub event: String,
    pub detail: String,
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\t{}\t{}\t{}", self.time, self.role, self.event, self.detail)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VerdictRecord {
    pub time: u64,
    /// Summary of the frame as the client would forward it.
    pub frame: String,
    pub verdict: Verdict,
    pub expected: Option<Verdict>,
}

impl VerdictRecord {
    pub fn is_mismatch(&self) -> bool {
        self.expected.is_some_and(|e| e != self.verdict)
    }
}

#[derive(Clone, Debug, Default)]
pub struct Trace {
    pub events: Vec<TraceEvent>,
    pub verdicts: Vec<VerdictRecord>,
    pub entry_counts: OpCounts,
    pub cloud_counts: OpCounts,
    pub client_counts: OpCounts,
}

impl Trace {
    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn mismatches(&self) -> usize {
        self.verdicts.iter().filter(|v| v.is_mismatch()).count()
    }

    pub fn events_named<'a>(&'a self, event: &'a str) -> impl Iterator<Item = &'a TraceEvent> + 'a {
        self.events.iter().filter(move |e| e.event == event)
    }
}

impl fmt::Display for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.events {
            writeln!(f, "{e}")?;
        }
        Ok(())
    }
}

fn describe(msg: &Message) -> String {
    match msg {
        Message::Ingress(f) => format!("ingress bytes={}", f.len()),
        Message::Forward { frame, .. } => format!("forward frame_bytes={}", frame.len()),
        Message::Encapsulated(p) => format!(
            "encapsulated packets={} bytes={}",
            p.len(),
            p.iter().map(Vec::len).sum::<usize>()
        ),
        Message::StateRequest(b) => format!("state-request bytes={}", b.len()),
        Message::StateRegistered(id) => format!("state-registered id={id}"),
        Message::StateMaintenance(b) => format!("state-maintenance bytes={}", b.len()),
        Message::Egress(f) => format!("egress bytes={}", f.len()),
    }
}

/// A deployment plus its fabric and trace.
pub struct Simulator {
    deployment: Deployment,
    fabric: Fabric,
    trace: Trace,
    clock: u64,
}

impl Simulator {
    pub fn new(cfg: &SimConfig, nf: NetworkFunction) -> Result<Self, SimError> {
        Ok(Self {
            deployment: Deployment::new(cfg, nf)?,
            fabric: Fabric::new(),
            trace: Trace::default(),
            clock: 0,
        })
    }

    pub fn deployment(&self) -> &Deployment {
        &self.deployment
    }

    pub fn trace(&self) -> &Trace {
        &self.trace
    }

    pub fn into_trace(mut self) -> Trace {
        self.sync_counts();
        self.trace
    }

    fn sync_counts(&mut self) {
        self.trace.entry_counts = self.deployment.entry.counts();
        self.trace.cloud_counts = self.deployment.cloud.counts();
        self.trace.client_counts = self.deployment.client.counts();
    }

    fn push(&mut self, role: Role, event: &str, detail: String) {
        self.trace.events.push(TraceEvent {
            time: self.clock,
            role,
            event: event.to_string(),
            detail,
        });
    }

    /// Injects at the next tick.
    pub fn inject(&mut self, frame: RawFrame, expect: Option<Verdict>) -> Result<Verdict, SimError> {
        let t = self.clock + 1;
        self.inject_at(t, frame, expect)
    }

    /// Runs the frame through entry, cloud and client, including any state
    /// table traffic it triggers, before returning.
    pub fn inject_at(
        &mut self,
        time: u64,
        frame: RawFrame,
        expect: Option<Verdict>,
    ) -> Result<Verdict, SimError> {
        self.clock = time.max(self.clock);
        self.push(Role::Net, "inject", frame.summary());
        self.fabric.send(Role::Net, Role::Entry, Message::Ingress(frame));
        let mut verdicts = Vec::new();
        while let Some((from, to, msg)) = self.fabric.deliver() {
            self.push(from, "msg", format!("to={to} {}", describe(&msg)));
            let mut ctx = Ctx::new();
            let d = &mut self.deployment;
            match (to, msg) {
                (Role::Entry, Message::Ingress(f)) => d.entry.handle(f, &mut ctx)?,
                (Role::Cloud, Message::Forward { frame, body }) => {
                    d.cloud.handle_forward(frame, body, &mut ctx)?
                }
                (Role::Cloud, Message::StateRequest(b)) => d.cloud.handle_request(&b, &mut ctx)?,
                (Role::Cloud, Message::StateMaintenance(b)) => d.cloud.handle_maintenance(&b, &mut ctx)?,
                (Role::Client, Message::Encapsulated(p)) => d.client.handle_encapsulated(&p, &mut ctx)?,
                (Role::Client, Message::StateRegistered(id)) => d.client.handle_registered(id, &mut ctx),
                (Role::Net, Message::Egress(f)) => ctx.events.push((Role::Net, "egress", f.summary())),
                _ => return Err(SimError::Unsupported("message sent to the wrong role")),
            }
            for (role, event, detail) in ctx.events {
                self.push(role, event, detail);
            }
            for (dest, m) in ctx.sends {
                self.fabric.send(to, dest, m);
            }
            verdicts.extend(ctx.verdicts);
        }
        let [(verdict, summary)]: [(Verdict, String); 1] = verdicts
            .try_into()
            .map_err(|_| SimError::Unsupported("frame produced no single verdict"))?;
        self.trace.verdicts.push(VerdictRecord {
            time: self.clock,
            frame: summary,
            verdict,
            expected: expect,
        });
        self.sync_counts();
        Ok(verdict)
    }
}

struct Pending {
    cfg: SimConfig,
    policies: Vec<Policy>,
}

fn script_err(line: usize, msg: impl Into<String>) -> SimError {
    SimError::Script {
        line,
        msg: msg.into(),
    }
}

fn parse_flags(tok: &str, line: usize) -> Result<u8, SimError> {
    if tok == "-" {
        return Ok(0);
    }
    tok.split('|').try_fold(0u8, |acc, name| {
        let bit = match name.to_ascii_uppercase().as_str() {
            "SYN" => tcp_flags::SYN,
            "ACK" => tcp_flags::ACK,
            "FIN" => tcp_flags::FIN,
            "RST" => tcp_flags::RST,
            "PSH" => tcp_flags::PSH,
            _ => return Err(script_err(line, format!("unknown tcp flag `{name}`"))),
        };
        Ok(acc | bit)
    })
}

fn parse_endpoint(tok: &str, line: usize) -> Result<(Ipv4Addr, u16), SimError> {
    let a: SocketAddrV4 = tok
        .parse()
        .map_err(|_| script_err(line, format!("bad endpoint `{tok}`")))?;
    Ok((*a.ip(), a.port()))
}

/// `... expect <verdict> [at <time>]`
fn parse_tail(tokens: &[&str], line: usize) -> Result<(Verdict, Option<u64>), SimError> {
    let (expect, at) = match tokens {
        ["expect", v] => (v, None),
        ["expect", v, "at", t] => (v, Some(t)),
        _ => return Err(script_err(line, "expected `expect <forward|drop> [at <time>]`")),
    };
    let verdict = expect.parse().map_err(|e: String| script_err(line, e))?;
    let time = at
        .map(|t| t.parse().map_err(|_| script_err(line, format!("bad time `{t}`"))))
        .transpose()?;
    Ok((verdict, time))
}

/// Runs a scenario script. Policy files are resolved against `base_dir`.
pub fn run_scenario(script: &str, base_dir: impl AsRef<Path>) -> Result<Trace, SimError> {
    let base_dir = base_dir.as_ref();
    let layout = Layout::ipv4();
    let mut pending = Some(Pending {
        cfg: SimConfig::default(),
        policies: Vec::new(),
    });
    let mut sim: Option<Simulator> = None;

    for (k, raw) in script.lines().enumerate() {
        let line = k + 1;
        let text = raw.split('#').next().unwrap_or("").trim();
        let tokens: Vec<&str> = text.split_whitespace().collect();
        let Some((&head, rest)) = tokens.split_first() else {
            continue;
        };
        let is_packet = matches!(head, "inject" | "tcp" | "udp");
        if !is_packet {
            let p = pending
                .as_mut()
                .ok_or_else(|| script_err(line, "configuration after the first injection"))?;
            match (head, rest) {
                ("scheme", [s]) => {
                    p.cfg.scheme = s
                        .parse::<SchemeId>()
                        .map_err(|e| script_err(line, e.to_string()))?;
                }
                ("stateful", ["on"]) => p.cfg.stateful = true,
                ("stateful", ["off"]) => p.cfg.stateful = false,
                ("seed", [s]) => {
                    p.cfg.seed = s
                        .parse()
                        .map_err(|_| script_err(line, format!("bad seed `{s}`")))?;
                }
                ("policies", [file]) => {
                    let path = base_dir.join(file);
                    let text = std::fs::read_to_string(&path).map_err(|_| SimError::UnknownPolicyFile {
                        path: path.display().to_string(),
                    })?;
                    let nf = parse_policy_file(&text, &layout)
                        .map_err(|e| script_err(line, format!("{file}: {e}")))?;
                    p.policies.extend(nf.policies().iter().cloned());
                }
                ("policy", [_, ..]) => {
                    let policy = parse_line(&rest.join(" ")).map_err(|e| script_err(line, e))?;
                    policy
                        .validate(&layout)
                        .map_err(|e| script_err(line, e.to_string()))?;
                    p.policies.push(policy);
                }
                _ => return Err(script_err(line, format!("unknown directive `{text}`"))),
            }
            continue;
        }

        let (frame, tail) = match (head, rest) {
            ("inject", [hex_frame, tail @ ..]) => {
                let bytes = hex::decode(hex_frame).map_err(|e| script_err(line, format!("bad hex: {e}")))?;
                (
                    RawFrame::parse(&bytes).map_err(|e| script_err(line, e.to_string()))?,
                    tail,
                )
            }
            ("tcp", [src, dst, flags, tail @ ..]) => {
                let (s, sp) = parse_endpoint(src, line)?;
                let (d, dp) = parse_endpoint(dst, line)?;
                (RawFrame::tcp(s, sp, d, dp, parse_flags(flags, line)?), tail)
            }
            ("udp", [src, dst, tail @ ..]) => {
                let (s, sp) = parse_endpoint(src, line)?;
                let (d, dp) = parse_endpoint(dst, line)?;
                (RawFrame::udp(s, sp, d, dp, &[])?, tail)
            }
            _ => return Err(script_err(line, format!("malformed `{head}` line"))),
        };
        let (expect, at) = parse_tail(tail, line)?;
        if let Some(p) = pending.take() {
            let nf = NetworkFunction::new(p.policies).map_err(|e| script_err(line, e.to_string()))?;
            sim = Some(Simulator::new(&p.cfg, nf)?);
        }
        let s = sim.as_mut().expect("created on first injection");
        let time = at.unwrap_or(s.clock + 1);
        if time < s.clock {
            return Err(script_err(
                line,
                format!("time {time} is earlier than {}", s.clock),
            ));
        }
        s.inject_at(time, frame, Some(expect))?;
    }
    Ok(sim.map(Simulator::into_trace).unwrap_or_default())
}

/// Reads a script and resolves policy files next to it.
pub fn run_scenario_file(path: impl AsRef<Path>) -> Result<Trace, SimError> {
    let path = path.as_ref();
    let script = std::fs::read_to_string(path)?;
    run_scenario(&script, path.parent().unwrap_or(Path::new(".")))
}
