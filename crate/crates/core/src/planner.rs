//! Per-link mode selection and widest-path routing over trusted relays.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::db_to_transmittance;
use crate::error::{Error, Result};
use crate::rates::{skr_cv_asymptotic, CvRateInput, DetectorTrust, DvLinkModel};
use crate::receivers::SpadParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Mode {
    Dv,
    Cv,
    Dead,
}

/// Transmitter and receiver settings of the CV mode on a link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CvProfile {
    pub v_a: f64,
    pub eta: f64,
    pub v_el: f64,
    pub beta: f64,
    pub symbol_rate: f64,
    pub trust: DetectorTrust,
}

impl Default for CvProfile {
    fn default() -> Self {
        let t1 = CvRateInput::baseline();
        Self {
            v_a: t1.v_a,
            eta: t1.eta,
            v_el: t1.v_el,
            beta: t1.beta,
            symbol_rate: t1.symbol_rate,
            trust: t1.trust,
        }
    }
}

/// DV settings for planning: a long steady-state block and a low-dark-count
/// detector, so that finite-size effects do not hide long-reach links.
pub fn planner_dv_profile() -> DvLinkModel {
    DvLinkModel {
        spad: SpadParams {
            eta_det: 0.2,
            dark_prob: 1e-7,
            misalignment: SpadParams::misalignment_for_qber(0.006),
            basis_split: 0.5,
        },
        block_size: 1e11,
        ..DvLinkModel::default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QLink {
    pub id: String,
    pub endpoints: [String; 2],
    pub loss_db: f64,
    #[serde(default)]
    pub xi_a: f64,
    #[serde(default)]
    pub cv: CvProfile,
    #[serde(default = "planner_dv_profile")]
    pub dv: DvLinkModel,
}

impl QLink {
    pub fn new(id: &str, a: &str, b: &str, loss_db: f64, xi_a: f64) -> Self {
        Self {
            id: id.to_string(),
            endpoints: [a.to_string(), b.to_string()],
            loss_db,
            xi_a,
            cv: CvProfile::default(),
            dv: planner_dv_profile(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.endpoints[0] == self.endpoints[1] {
            return Err(Error::Config(format!("link `{}` connects a node to itself", self.id)));
        }
        db_to_transmittance(self.loss_db)?;
        if !(self.xi_a >= 0.0) {
            return Err(Error::domain("xi_a", self.xi_a, "excess noise must be >= 0"));
        }
        Ok(())
    }

    fn cv_input(&self) -> Result<CvRateInput> {
        Ok(CvRateInput {
            v_a: self.cv.v_a,
            t: db_to_transmittance(self.loss_db)?,
            xi_a: self.xi_a,
            eta: self.cv.eta,
            v_el: self.cv.v_el,
            beta: self.cv.beta,
            symbol_rate: self.cv.symbol_rate,
            trust: self.cv.trust,
        })
    }
}

/// Secret-key rate (bits/s) of `link` operated in `mode`.
pub fn link_rate(link: &QLink, mode: Mode) -> Result<f64> {
    link.validate()?;
    match mode {
        Mode::Cv => Ok(skr_cv_asymptotic(&link.cv_input()?)?.skr_bps),
        Mode::Dv => Ok(link.dv.rate(db_to_transmittance(link.loss_db)?)?.skr_bps),
        Mode::Dead => Ok(0.0),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkAssignment {
    pub id: String,
    pub mode: Mode,
    pub rate_bps: f64,
    pub cv_bps: f64,
    pub dv_bps: f64,
}

/// Picks the better mode per link from a pair of rates; ties go to DV.
pub fn choose_mode(cv_bps: f64, dv_bps: f64) -> (Mode, f64) {
    if cv_bps <= 0.0 && dv_bps <= 0.0 {
        (Mode::Dead, 0.0)
    } else if cv_bps > dv_bps {
        (Mode::Cv, cv_bps)
    } else {
        (Mode::Dv, dv_bps)
    }
}

/// Independent per-link assignment, in input order.
pub fn assign_modes(links: &[QLink]) -> Result<Vec<LinkAssignment>> {
    links
        .par_iter()
        .map(|l| {
            let cv = link_rate(l, Mode::Cv)?;
            let dv = link_rate(l, Mode::Dv)?;
            let (mode, rate) = choose_mode(cv, dv);
            Ok(LinkAssignment {
                id: l.id.clone(),
                mode,
                rate_bps: rate,
                cv_bps: cv,
                dv_bps: dv,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Network {
    pub links: Vec<QLink>,
    pub src: String,
    pub dst: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Route {
    pub nodes: Vec<String>,
    pub links: Vec<String>,
    pub bottleneck_bps: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanStatus {
    Routed,
    NoRoute,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeAssignment {
    pub status: PlanStatus,
    pub links: Vec<LinkAssignment>,
    pub route: Option<Route>,
}

#[derive(PartialEq)]
struct Frontier {
    width: f64,
    hops: usize,
    node: usize,
}

impl Eq for Frontier {}

impl Ord for Frontier {
    fn cmp(&self, other: &Self) -> Ordering {
        self.width
            .total_cmp(&other.width)
            .then_with(|| other.hops.cmp(&self.hops))
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Max-min route over undirected edges `(u, v, width)`. Edges of zero width
/// carry no key and are skipped. Returns the edge indices along the path
/// and its bottleneck.
pub fn widest_path(n_nodes: usize, edges: &[(usize, usize, f64)], src: usize, dst: usize) -> Option<(Vec<usize>, f64)> {
    let mut adj = vec![Vec::new(); n_nodes];
    for (k, &(u, v, w)) in edges.iter().enumerate() {
        if w > 0.0 {
            adj[u].push((v, k));
            adj[v].push((u, k));
        }
    }
    let mut best = vec![f64::NEG_INFINITY; n_nodes];
    let mut via: Vec<Option<(usize, usize)>> = vec![None; n_nodes];
    let mut done = vec![false; n_nodes];
    let mut heap = BinaryHeap::new();
    best[src] = f64::INFINITY;
    heap.push(Frontier {
        width: f64::INFINITY,
        hops: 0,
        node: src,
    });
    while let Some(Frontier { width, hops, node }) = heap.pop() {
        if done[node] {
            continue;
        }
        done[node] = true;
        if node == dst {
            break;
        }
        for &(next, k) in &adj[node] {
            let w = width.min(edges[k].2);
            if !done[next] && w > best[next] {
                best[next] = w;
                via[next] = Some((node, k));
                heap.push(Frontier {
                    width: w,
                    hops: hops + 1,
                    node: next,
                });
            }
        }
    }
    if !done[dst] || src == dst {
        return None;
    }
    let mut path = Vec::new();
    let mut at = dst;
    while let Some((prev, k)) = via[at] {
        path.push(k);
        at = prev;
    }
    path.reverse();
    Some((path, best[dst]))
}

/// Assigns modes to every link and finds the widest route from `src` to
/// `dst`, assuming trusted relays at intermediate nodes.
pub fn best_path(network: &Network, src: &str, dst: &str) -> Result<ModeAssignment> {
    let mut index: BTreeMap<&str, usize> = BTreeMap::new();
    for l in &network.links {
        for e in &l.endpoints {
            let n = index.len();
            index.entry(e.as_str()).or_insert(n);
        }
    }
    let lookup = |name: &str| index.get(name).copied().ok_or_else(|| Error::UnknownNode(name.to_string()));
    let (s, d) = (lookup(src)?, lookup(dst)?);
    if s == d {
        return Err(Error::Config("source and destination are the same node".into()));
    }

    let links = assign_modes(&network.links)?;
    let edges: Vec<_> = network
        .links
        .iter()
        .zip(&links)
        .map(|(l, a)| (index[l.endpoints[0].as_str()], index[l.endpoints[1].as_str()], a.rate_bps))
        .collect();

    let route = widest_path(index.len(), &edges, s, d).map(|(path, width)| {
        let names: Vec<&str> = {
            let mut v = vec![""; index.len()];
            for (name, &i) in &index {
                v[i] = name;
            }
            v
        };
        let mut nodes = vec![src.to_string()];
        let mut at = s;
        for &k in &path {
            let (u, v, _) = edges[k];
            at = if u == at { v } else { u };
            nodes.push(names[at].to_string());
        }
        Route {
            nodes,
            links: path.iter().map(|&k| network.links[k].id.clone()).collect(),
            bottleneck_bps: width,
        }
    });
    Ok(ModeAssignment {
        status: if route.is_some() {
            PlanStatus::Routed
        } else {
            PlanStatus::NoRoute
        },
        links,
        route,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::RandomSource;

    #[test]
    fn short_link_prefers_cv() {
        let l = QLink::new("l", "a", "b", 0.0, 0.012);
        let cv = link_rate(&l, Mode::Cv).unwrap();
        let dv = link_rate(&l, Mode::Dv).unwrap();
        assert!(cv > 1e6 && cv > dv, "cv {cv} dv {dv}");
        assert_eq!(assign_modes(&[l]).unwrap()[0].mode, Mode::Cv);
    }

    #[test]
    fn long_link_prefers_dv() {
        // Input-referred excess noise on a long link; at ξ_A = 0.012 the CV
        // bound still gives ~60 bit/s at 40 dB.
        let l = QLink::new("l", "a", "b", 40.0, 0.03);
        assert_eq!(link_rate(&l, Mode::Cv).unwrap(), 0.0);
        assert!(link_rate(&l, Mode::Dv).unwrap() > 0.0);
        assert_eq!(assign_modes(&[l]).unwrap()[0].mode, Mode::Dv);
    }

    #[test]
    fn very_long_link_is_dead() {
        let l = QLink::new("l", "a", "b", 80.0, 0.03);
        let a = &assign_modes(&[l]).unwrap()[0];
        assert_eq!((a.cv_bps, a.dv_bps, a.mode), (0.0, 0.0, Mode::Dead));
    }

    #[test]
    fn ties_go_to_dv_and_argmax_is_invariant() {
        assert_eq!(choose_mode(3.0, 3.0).0, Mode::Dv);
        assert_eq!(choose_mode(0.0, 0.0).0, Mode::Dead);
        let mut rng = RandomSource::new(3);
        for _ in 0..1000 {
            let (c, d) = (rng.uniform() * 1e6, rng.uniform() * 1e6);
            let f = |x: f64| (x + 1.0).ln() * 7.0 + x.sqrt();
            assert_eq!(choose_mode(c, d).0, choose_mode(f(c), f(d)).0);
        }
        assert!(assign_modes(&[]).unwrap().is_empty());
    }

    #[test]
    fn widest_path_examples() {
        // parallel links of width 5 and 8
        let (p, w) = widest_path(2, &[(0, 1, 5.0), (0, 1, 8.0)], 0, 1).unwrap();
        assert_eq!((p, w), (vec![1], 8.0));
        // two hops at >= 10 beat a direct link of 4
        let (p, w) = widest_path(3, &[(0, 2, 4.0), (0, 1, 10.0), (1, 2, 12.0)], 0, 2).unwrap();
        assert_eq!((p, w), (vec![1, 2], 10.0));
        assert!(widest_path(3, &[(0, 1, 1.0)], 0, 2).is_none());
        assert!(widest_path(2, &[(0, 1, 0.0)], 0, 1).is_none());
    }

    #[test]
    fn disconnected_and_unknown_nodes() {
        let net = Network {
            links: vec![QLink::new("ab", "a", "b", 1.0, 0.01), QLink::new("cd", "c", "d", 1.0, 0.01)],
            src: "a".into(),
            dst: "d".into(),
        };
        let plan = best_path(&net, "a", "d").unwrap();
        assert_eq!(plan.status, PlanStatus::NoRoute);
        assert!(plan.route.is_none());
        assert_eq!(plan.links.len(), 2);
        assert!(matches!(best_path(&net, "a", "z"), Err(Error::UnknownNode(_))));
        assert!(best_path(&net, "a", "a").is_err());
    }

    /// Exhaustive oracle: every simple path, every per-link mode choice.
    fn brute_force(n: usize, links: &[(usize, usize, f64, f64)], s: usize, d: usize) -> f64 {
        let m = links.len();
        let mut best = 0.0f64;
        for mask in 0u32..(1 << m) {
            let width: Vec<f64> = (0..m)
                .map(|k| if mask & (1 << k) != 0 { links[k].2 } else { links[k].3 })
                .collect();
            fn dfs(at: usize, d: usize, links: &[(usize, usize, f64, f64)], width: &[f64], seen: &mut Vec<bool>, cur: f64, best: &mut f64) {
                if at == d {
                    *best = best.max(cur);
                    return;
                }
                for (k, &(u, v, _, _)) in links.iter().enumerate() {
                    let next = if u == at { v } else if v == at { u } else { continue };
                    if !seen[next] {
                        seen[next] = true;
                        dfs(next, d, links, width, seen, cur.min(width[k]), best);
                        seen[next] = false;
                    }
                }
            }
            let mut seen = vec![false; n];
            seen[s] = true;
            dfs(s, d, links, &width, &mut seen, f64::INFINITY, &mut best);
        }
        best
    }

    fn random_network(rng: &mut RandomSource) -> (usize, Vec<QLink>) {
        let n = 2 + (rng.uniform() * 4.0) as usize;
        let m = 1 + (rng.uniform() * 6.0) as usize;
        let links = (0..m)
            .map(|k| {
                let u = (rng.uniform() * n as f64) as usize;
                let v = (u + 1 + (rng.uniform() * (n - 1) as f64) as usize) % n;
                QLink::new(&format!("l{k}"), &format!("n{u}"), &format!("n{v}"), 50.0 * rng.uniform(), 0.04 * rng.uniform())
            })
            .collect();
        (n, links)
    }

    #[test]
    fn matches_brute_force_on_small_graphs() {
        let mut rng = RandomSource::new(99);
        let mut trials = 0;
        while trials < 200 {
            let (n, links) = random_network(&mut rng);
            let (src, dst) = ("n0".to_string(), format!("n{}", n - 1));
            let net = Network {
                links: links.clone(),
                src: src.clone(),
                dst: dst.clone(),
            };
            let plan = match best_path(&net, &src, &dst) {
                Ok(p) => p,
                Err(Error::UnknownNode(_)) => continue,
                Err(e) => panic!("{e}"),
            };
            trials += 1;
            let id = |s: &str| s[1..].parse::<usize>().unwrap();
            let rated: Vec<_> = links
                .iter()
                .map(|l| {
                    let cv = link_rate(l, Mode::Cv).unwrap();
                    let dv = link_rate(l, Mode::Dv).unwrap();
                    (id(&l.endpoints[0]), id(&l.endpoints[1]), cv, dv)
                })
                .collect();
            let oracle = brute_force(n, &rated, 0, n - 1);
            let got = plan.route.as_ref().map_or(0.0, |r| r.bottleneck_bps);
            assert_eq!(got, oracle);
            if let Some(r) = &plan.route {
                let min = r
                    .links
                    .iter()
                    .map(|id| plan.links.iter().find(|a| &a.id == id).unwrap().rate_bps)
                    .fold(f64::INFINITY, f64::min);
                assert_eq!(min, r.bottleneck_bps);
            }
        }
    }

    #[test]
    fn adding_a_link_never_narrows_the_route() {
        let mut rng = RandomSource::new(5);
        for _ in 0..200 {
            let n = 5;
            let mut edges: Vec<(usize, usize, f64)> = Vec::new();
            let mut prev = 0.0;
            for _ in 0..8 {
                let u = (rng.uniform() * n as f64) as usize;
                let v = (u + 1 + (rng.uniform() * (n - 1) as f64) as usize) % n;
                edges.push((u, v, rng.uniform()));
                let w = widest_path(n, &edges, 0, n - 1).map_or(0.0, |r| r.1);
                assert!(w >= prev);
                prev = w;
            }
        }
    }
}
