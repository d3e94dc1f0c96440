// Copyright 2026 The Cipollino Authors
// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::Ipv4Addr;

use chrono::{DateTime, Duration, SecondsFormat, Utc};
use rand::Rng;
use rand_distr::{Distribution, Exp};

use super::SimError;
use crate::client::ConnectionRequest;
use crate::topology::AsNumber;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WorkloadKind {
    Web,
    Mixed,
}

impl WorkloadKind {
    pub fn as_str(self) -> &'static str {
        match self {
            WorkloadKind::Web => "web",
            WorkloadKind::Mixed => "mixed",
        }
    }
}

/// Time-ordered connection requests of one client.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorkloadStream {
    requests: Vec<ConnectionRequest>,
    label: WorkloadKind,
}

impl WorkloadStream {
    /// Fails if timestamps decrease.
    pub fn new(requests: Vec<ConnectionRequest>, label: WorkloadKind) -> Result<Self, SimError> {
        if let Some(i) = requests.windows(2).position(|w| w[1].at < w[0].at) {
            return Err(SimError::Argument(format!("request {} is earlier than its predecessor", i + 1)));
        }
        Ok(WorkloadStream { requests, label })
    }

    pub fn requests(&self) -> &[ConnectionRequest] {
        &self.requests
    }

    pub fn label(&self) -> WorkloadKind {
        self.label
    }

    pub fn len(&self) -> usize {
        self.requests.len()
    }

    pub fn is_empty(&self) -> bool {
        self.requests.is_empty()
    }
}

fn rows(reader: impl Read) -> impl Iterator<Item = Result<(usize, String), SimError>> {
    BufReader::new(reader).lines().enumerate().filter_map(|(i, l)| match l {
        Err(e) => Some(Err(SimError::Io(e))),
        Ok(l) => {
            let t = l.trim();
            (!t.is_empty() && !t.starts_with('#')).then(|| Ok((i + 1, t.to_string())))
        }
    })
}

fn parse_err(file: &'static str, line: usize, message: impl Into<String>) -> SimError {
    SimError::Parse {
        file,
        line,
        message: message.into(),
    }
}

fn fields<'l>(file: &'static str, line_no: usize, line: &'l str, n: usize) -> Result<Vec<&'l str>, SimError> {
    let f: Vec<&str> = line.split(',').map(str::trim).collect();
    if f.len() != n {
        return Err(parse_err(file, line_no, format!("expected {n} fields, found {}", f.len())));
    }
    Ok(f)
}

fn is_header(line_no: usize, first: &str, name: &str) -> bool {
    line_no == 1 && first == name
}

fn millis(seconds: f64) -> Duration {
    Duration::milliseconds((seconds * 1000.0).round() as i64)
}

#[derive(Debug, Clone, Copy)]
pub struct WebWorkloadOptions {
    pub start: DateTime<Utc>,
    pub client_asn: AsNumber,
    /// Mean of the exponential gap between page loads.
    pub mean_gap_seconds: f64,
    /// Spacing of the requests within one page load.
    pub burst_spacing_ms: i64,
}

impl WebWorkloadOptions {
    pub fn new(start: DateTime<Utc>, client_asn: AsNumber) -> Self {
        WebWorkloadOptions {
            start,
            client_asn,
            mean_gap_seconds: 30.0,
            burst_spacing_ms: 50,
        }
    }
}

/// One burst of requests per site, visited in rank order. `sites` is CSV
/// `site,rank`; `dns` is CSV `site,ip,port`, one row per endpoint.
pub fn generate_web_workload<R: Rng + ?Sized>(
    sites: impl Read,
    dns: impl Read,
    options: WebWorkloadOptions,
    rng: &mut R,
) -> Result<WorkloadStream, SimError> {
    let mut ranked: Vec<(u64, usize, String)> = Vec::new();
    for row in rows(sites) {
        let (n, line) = row?;
        let f = fields("site list", n, &line, 2)?;
        if is_header(n, f[0], "site") {
            continue;
        }
        let rank: u64 = f[1]
            .parse()
            .map_err(|_| parse_err("site list", n, format!("bad rank {:?}", f[1])))?;
        ranked.push((rank, ranked.len(), f[0].to_string()));
    }
    if ranked.is_empty() {
        return Err(SimError::Argument("site list is empty".into()));
    }
    ranked.sort();

    let mut endpoints: BTreeMap<String, Vec<(Ipv4Addr, u32)>> = BTreeMap::new();
    for row in rows(dns) {
        let (n, line) = row?;
        let f = fields("dns map", n, &line, 3)?;
        if is_header(n, f[0], "site") {
            continue;
        }
        let ip: Ipv4Addr = f[1]
            .parse()
            .map_err(|_| parse_err("dns map", n, format!("bad address {:?}", f[1])))?;
        let port: u32 = f[2]
            .parse()
            .map_err(|_| parse_err("dns map", n, format!("bad port {:?}", f[2])))?;
        endpoints.entry(f[0].to_string()).or_default().push((ip, port));
    }

    let gap = Exp::new(1.0 / options.mean_gap_seconds.max(1e-3))
        .map_err(|e| SimError::Argument(format!("gap distribution: {e}")))?;
    let mut requests = Vec::new();
    let mut at = options.start;
    for (i, (_, _, site)) in ranked.iter().enumerate() {
        let eps = endpoints
            .get(site)
            .ok_or_else(|| SimError::Argument(format!("site {site} has no DNS entry")))?;
        if i > 0 {
            at += millis(gap.sample(rng));
        }
        for (k, &(ip, port)) in eps.iter().enumerate() {
            let t = at + Duration::milliseconds(options.burst_spacing_ms * k as i64);
            requests.push(ConnectionRequest::new(t, ip, port, options.client_asn).map_err(|e| SimError::Argument(e.to_string()))?);
        }
        at += Duration::milliseconds(options.burst_spacing_ms * eps.len().saturating_sub(1) as i64);
    }
    WorkloadStream::new(requests, WorkloadKind::Web)
}

/// Ports used by an application when its profile row leaves them empty.
pub fn default_ports(app: &str) -> Option<Vec<u16>> {
    match app.to_ascii_lowercase().as_str() {
        "web" | "http" => Some(vec![80, 443]),
        "p2p" | "bittorrent" => Some(vec![6881]),
        "mail" | "email" | "e-mail" => Some(vec![25, 587]),
        "irc" | "chat" => Some(vec![6667]),
        _ => None,
    }
}

#[derive(Debug, Clone)]
struct AppProfile {
    rate_per_hour: f64,
    ports: Vec<u16>,
    ips: Vec<Ipv4Addr>,
}

/// Independent Poisson request streams per application, merged. `profile` is
/// CSV `app,rate_per_hour,ports,ips` with `;`-separated lists.
pub fn generate_mixed_workload<R: Rng + ?Sized>(
    profile: impl Read,
    duration_seconds: u64,
    start: DateTime<Utc>,
    client_asn: AsNumber,
    rng: &mut R,
) -> Result<WorkloadStream, SimError> {
    let mut apps = Vec::new();
    for row in rows(profile) {
        let (n, line) = row?;
        let f = fields("profile", n, &line, 4)?;
        if is_header(n, f[0], "app") {
            continue;
        }
        let rate_per_hour: f64 = f[1]
            .parse()
            .ok()
            .filter(|r: &f64| r.is_finite() && *r >= 0.0)
            .ok_or_else(|| parse_err("profile", n, format!("bad rate {:?}", f[1])))?;
        let ports = if f[2].is_empty() {
            default_ports(f[0]).ok_or_else(|| parse_err("profile", n, format!("no default ports for {:?}", f[0])))?
        } else {
            f[2].split(';')
                .map(|p| p.trim().parse::<u16>().ok().filter(|p| *p > 0))
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| parse_err("profile", n, format!("bad ports {:?}", f[2])))?
        };
        let ips = f[3]
            .split(';')
            .map(|s| s.trim().parse::<Ipv4Addr>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| parse_err("profile", n, format!("bad addresses {:?}", f[3])))?;
        if ips.is_empty() {
            return Err(parse_err("profile", n, "no destination addresses"));
        }
        apps.push(AppProfile {
            rate_per_hour,
            ports,
            ips,
        });
    }
    if apps.iter().map(|a| a.rate_per_hour).sum::<f64>() <= 0.0 {
        return Err(SimError::Argument("profile has zero total rate".into()));
    }

    let horizon = duration_seconds as f64;
    let mut tagged: Vec<(DateTime<Utc>, usize, usize, ConnectionRequest)> = Vec::new();
    for (ai, app) in apps.iter().enumerate() {
        if app.rate_per_hour == 0.0 {
            continue;
        }
        let gap = Exp::new(app.rate_per_hour / 3600.0).map_err(|e| SimError::Argument(e.to_string()))?;
        let mut t = 0.0;
        let mut seq = 0;
        loop {
            t += gap.sample(rng);
            if t >= horizon {
                break;
            }
            let port = app.ports[rng.random_range(0..app.ports.len())];
            let ip = app.ips[rng.random_range(0..app.ips.len())];
            let at = start + millis(t);
            let req = ConnectionRequest::new(at, ip, port.into(), client_asn).map_err(|e| SimError::Argument(e.to_string()))?;
            tagged.push((at, ai, seq, req));
            seq += 1;
        }
    }
    tagged.sort_by_key(|(at, ai, seq, _)| (*at, *ai, *seq));
    WorkloadStream::new(tagged.into_iter().map(|t| t.3).collect(), WorkloadKind::Mixed)
}

/// Writes `at,dest_ip,dest_port,client_asn` rows after a header.
pub fn write_workload(stream: &WorkloadStream, mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "# workload: {}", stream.label.as_str())?;
    writeln!(out, "at,dest_ip,dest_port,client_asn")?;
    for r in &stream.requests {
        writeln!(
            out,
            "{},{},{},{}",
            r.at.to_rfc3339_opts(SecondsFormat::Millis, true),
            r.dest_ip,
            r.dest_port,
            r.client_asn
        )?;
    }
    Ok(())
}

pub fn read_workload(reader: impl Read) -> Result<WorkloadStream, SimError> {
    let mut label = WorkloadKind::Web;
    let mut requests = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let n = i + 1;
        let line = line?;
        let line = line.trim();
        if let Some(comment) = line.strip_prefix('#') {
            match comment.trim() {
                "workload: mixed" => label = WorkloadKind::Mixed,
                "workload: web" => label = WorkloadKind::Web,
                _ => {}
            }
            continue;
        }
        if line.is_empty() || line.starts_with("at,") {
            continue;
        }
        let f = fields("workload", n, line, 4)?;
        let at = DateTime::parse_from_rfc3339(f[0])
            .map_err(|e| parse_err("workload", n, format!("bad timestamp {:?}: {e}", f[0])))?
            .with_timezone(&Utc);
        let ip: Ipv4Addr = f[1]
            .parse()
            .map_err(|_| parse_err("workload", n, format!("bad address {:?}", f[1])))?;
        let port: u32 = f[2]
            .parse()
            .map_err(|_| parse_err("workload", n, format!("bad port {:?}", f[2])))?;
        let client: AsNumber = f[3].parse().map_err(|e: String| parse_err("workload", n, e))?;
        requests.push(ConnectionRequest::new(at, ip, port, client).map_err(|e| parse_err("workload", n, e.to_string()))?);
    }
    WorkloadStream::new(requests, label)
}
