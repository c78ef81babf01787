//! Independent reference implementations and fixtures shared by the
//! integration tests.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};
use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;

use rand::Rng;
use semnav::geometry::{Cell, GridDims};
use semnav::mapping::{CellState, PartialMap};
use semnav::planner::{Candidate, LspCosts, PlannerState};

/// Expected cost of committing to a fixed visit order: each frontier is
/// reached from the previous one, pays `R_S` on success, and on failure
/// pays `R_E` and moves on. Exhausting every frontier costs `terminal`.
pub fn ordering_cost(state: &PlannerState, order: &[usize], terminal: f64) -> f64 {
    let c = state.candidates();
    let (r_s, r_e) = (state.costs.success, state.costs.exploration);
    let mut reach = 1.0;
    let mut total = 0.0;
    let mut prev: Option<usize> = None;
    for &i in order {
        let travel = match prev {
            None => c[i].distance,
            Some(p) => state.between(p, i),
        };
        let p = c[i].p_success;
        total += reach * (travel + p * r_s + (1.0 - p) * r_e);
        reach *= 1.0 - p;
        prev = Some(i);
    }
    total + reach * terminal
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for (k, &x) in items.iter().enumerate() {
        let mut rest = items.to_vec();
        rest.remove(k);
        for mut tail in permutations(&rest) {
            tail.insert(0, x);
            out.push(tail);
        }
    }
    out
}

/// `Q(a)` for every frontier by enumerating all orderings that start at `a`.
pub fn brute_force_q(state: &PlannerState, terminal: f64) -> Vec<f64> {
    let n = state.len();
    let all: Vec<usize> = (0..n).collect();
    permutations(&all)
        .into_iter()
        .fold(vec![f64::INFINITY; n], |mut best, order| {
            let cost = ordering_cost(state, &order, terminal);
            if cost < best[order[0]] {
                best[order[0]] = cost;
            }
            best
        })
}

/// Random planner instance: frontier midpoints and the agent are points in
/// a 10 m square, so all distances form a metric.
pub fn random_state(rng: &mut impl Rng, n: usize, costs: LspCosts) -> PlannerState {
    let agent: (f64, f64) = (rng.random_range(0.0..10.0), rng.random_range(0.0..10.0));
    let pts: Vec<(f64, f64)> = (0..n)
        .map(|_| (rng.random_range(0.0..10.0), rng.random_range(0.0..10.0)))
        .collect();
    let d = |a: (f64, f64), b: (f64, f64)| ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt();
    let candidates = pts
        .iter()
        .enumerate()
        .map(|(id, &p)| Candidate {
            id,
            midpoint: Cell::new(0, id),
            p_success: rng.random_range(0.01..=0.99),
            distance: d(agent, p),
        })
        .collect();
    let between = pts.iter().map(|&a| pts.iter().map(|&b| d(a, b)).collect()).collect();
    PlannerState::new(candidates, between, costs).unwrap()
}

pub fn random_partial_map(rng: &mut impl Rng, width: usize, height: usize) -> PartialMap {
    let dims = GridDims::new(width, height, 0.25);
    let mut map = PartialMap::new(dims);
    let p_free = rng.random_range(0.2..0.8);
    let p_obstacle = rng.random_range(0.0..(1.0 - p_free));
    for cell in dims.cells().collect::<Vec<_>>() {
        let u: f64 = rng.random();
        if u < p_free {
            map.set(cell, CellState::Free);
        } else if u < p_free + p_obstacle {
            map.set(cell, CellState::Obstacle);
        }
    }
    map
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Frontier cell sets straight from the definition: a free cell with an
/// unknown 4-neighbor, grouped by 8-connectivity with union-find.
pub fn naive_frontier_sets(map: &PartialMap) -> BTreeSet<BTreeSet<Cell>> {
    let dims = map.dims();
    let (w, h) = (dims.width as isize, dims.height as isize);
    let state = |r: isize, c: isize| -> Option<CellState> {
        (r >= 0 && c >= 0 && r < h && c < w).then(|| map.get(Cell::new(r as usize, c as usize)))
    };
    let mut members = Vec::new();
    for r in 0..h {
        for c in 0..w {
            if state(r, c) != Some(CellState::Free) {
                continue;
            }
            let touches_unknown = [(1, 0), (-1, 0), (0, 1), (0, -1)]
                .iter()
                .any(|(dr, dc)| state(r + dr, c + dc) == Some(CellState::Unknown));
            if touches_unknown {
                members.push((r, c));
            }
        }
    }
    let index: HashMap<(isize, isize), usize> = members.iter().enumerate().map(|(i, &m)| (m, i)).collect();
    let mut parent: Vec<usize> = (0..members.len()).collect();
    for (i, &(r, c)) in members.iter().enumerate() {
        for dr in -1..=1 {
            for dc in -1..=1 {
                if let Some(&j) = index.get(&(r + dr, c + dc)) {
                    let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                    parent[a] = b;
                }
            }
        }
    }
    let mut groups: HashMap<usize, BTreeSet<Cell>> = HashMap::new();
    for (i, &(r, c)) in members.iter().enumerate() {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().insert(Cell::new(r as usize, c as usize));
    }
    groups.into_values().collect()
}

/// Minimal HTTP/1.1 server answering each request with the next canned
/// reply body, recording request bodies and headers.
/// Header lines and body of one received request.
pub type Recorded = (Vec<String>, String);

pub struct StubServer {
    pub url: String,
    pub requests: Arc<Mutex<Vec<Recorded>>>,
    handle: Option<JoinHandle<()>>,
}

impl StubServer {
    /// `replies` are `(status, body)` pairs served in order.
    pub fn start(replies: Vec<(u16, String)>) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/v1/complete", listener.local_addr().unwrap());
        let requests = Arc::new(Mutex::new(Vec::new()));
        let log = requests.clone();
        let handle = std::thread::spawn(move || {
            for (status, body) in replies {
                let Ok((mut stream, _)) = listener.accept() else {
                    return;
                };
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut headers = Vec::new();
                let mut length = 0usize;
                loop {
                    let mut line = String::new();
                    if reader.read_line(&mut line).unwrap_or(0) == 0 {
                        break;
                    }
                    let line = line.trim_end().to_string();
                    if line.is_empty() {
                        break;
                    }
                    if let Some((k, v)) = line.split_once(':') {
                        if k.eq_ignore_ascii_case("content-length") {
                            length = v.trim().parse().unwrap_or(0);
                        }
                    }
                    headers.push(line);
                }
                let mut buf = vec![0u8; length];
                reader.read_exact(&mut buf).unwrap();
                log.lock().unwrap().push((headers, String::from_utf8_lossy(&buf).into_owned()));
                let reply = format!(
                    "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                    body.len()
                );
                stream.write_all(reply.as_bytes()).unwrap();
                stream.flush().unwrap();
            }
        });
        Self {
            url,
            requests,
            handle: Some(handle),
        }
    }

    pub fn join(mut self) -> Vec<Recorded> {
        if let Some(h) = self.handle.take() {
            h.join().unwrap();
        }
        self.requests.lock().unwrap().clone()
    }
}

/// Reply body in the endpoint's wire format.
pub fn text_reply(text: &str) -> String {
    serde_json::json!({ "text": text }).to_string()
}
