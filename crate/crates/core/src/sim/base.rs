use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::NetworkSpec;
use crate::prob::contingency::ENUMERATION_CAP;
use crate::prob::{Dmc, JointPmf};

/// One channel use shared by a set of transmitting and receiving nodes.
/// Orthogonal edges are links with one input and one output.
#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    pub inputs: Vec<usize>,
    pub input_sizes: Vec<usize>,
    pub outputs: Vec<usize>,
    pub output_sizes: Vec<usize>,
    pub dmc: Dmc,
}

/// Links of a network: its edges in order, then the multiuser channel if any.
pub fn links(spec: &NetworkSpec) -> Vec<Link> {
    let mut out: Vec<Link> = spec
        .edges
        .iter()
        .map(|e| Link {
            inputs: vec![e.from],
            input_sizes: vec![e.dmc.input_size()],
            outputs: vec![e.to],
            output_sizes: vec![e.dmc.output_size()],
            dmc: e.dmc.clone(),
        })
        .collect();
    if let Some(ch) = &spec.channel {
        out.push(Link {
            inputs: ch.inputs.clone(),
            input_sizes: ch.input_sizes.clone(),
            outputs: ch.outputs.clone(),
            output_sizes: ch.output_sizes.clone(),
            dmc: ch.dmc.clone(),
        });
    }
    out
}

/// Encoder `phi` of `node` on `link` in `session` (1-based), as a lookup table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderTable {
    pub link: usize,
    pub node: usize,
    pub session: usize,
    pub table: Vec<usize>,
}

/// Decoder `psi` of source `source` (id) at `node`, as a lookup table whose entries
/// index reconstruction blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecoderTable {
    pub source: usize,
    pub node: usize,
    pub table: Vec<usize>,
}

/// A block joint source-channel code: `m` source samples over `n` sessions.
///
/// A node's table key is a mixed-radix number, most significant digit first:
/// the `m` letters of every source placed at the node (sources in network order),
/// then for every earlier session and every link the node hears (link order) the
/// letter it received. Link input tuples and reconstruction blocks are flattened
/// the same way.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseJointCode {
    pub m: usize,
    pub n: usize,
    pub encoders: Vec<EncoderTable>,
    pub decoders: Vec<DecoderTable>,
}

/// Letters of one block: per source `m` letters and per session the flat output
/// of every link.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockState {
    pub src: Vec<Vec<usize>>,
    pub y: Vec<Vec<usize>>,
}

/// Exact laws of a base code on its network.
#[derive(Debug, Clone)]
pub struct ExactAnalysis {
    /// `[session][link]` joint law of the flat link input and output.
    pub session_joints: Vec<Vec<JointPmf>>,
    /// Per `(source id, node)`: expected per-letter distortion.
    pub distortions: BTreeMap<(usize, usize), f64>,
    /// Per `(source id, node)`: joint law of the source block and its reconstruction.
    pub recon_joints: BTreeMap<(usize, usize), JointPmf>,
}

fn mixed(digits: &[usize], radix: &[usize]) -> usize {
    digits.iter().zip(radix).fold(0, |acc, (d, r)| acc * r + d)
}

fn unmixed(mut v: usize, radix: &[usize]) -> Vec<usize> {
    let mut out = vec![0; radix.len()];
    for i in (0..radix.len()).rev() {
        out[i] = v % radix[i];
        v /= radix[i];
    }
    out
}

/// A base code bound to a network, with lookups resolved.
#[derive(Debug, Clone)]
pub struct BoundCode<'a> {
    pub spec: &'a NetworkSpec,
    pub code: &'a BaseJointCode,
    pub links: Vec<Link>,
    encoders: HashMap<(usize, usize, usize), usize>,
    decoders: HashMap<(usize, usize), usize>,
    source_sizes: Vec<usize>,
    recon_sizes: Vec<usize>,
}

impl<'a> BoundCode<'a> {
    pub fn new(spec: &'a NetworkSpec, code: &'a BaseJointCode) -> Result<Self> {
        let bad = |m: String| Error::InvalidSpec(format!("base code: {m}"));
        if code.m == 0 || code.n == 0 {
            return Err(bad("m and n must be positive".into()));
        }
        if code.n as f64 > spec.kappa * code.m as f64 + 1e-9 {
            return Err(bad(format!("n = {} exceeds kappa m = {}", code.n, spec.kappa * code.m as f64)));
        }
        let links = links(spec);
        let source_sizes: Vec<usize> = spec.sources.iter().map(|s| spec.joint_source_law.dims()[s.component]).collect();
        let recon_sizes: Vec<usize> = spec.distortion_measures.iter().map(|d| d.recon_size()).collect();
        let mut bound = Self {
            spec,
            code,
            links,
            encoders: HashMap::new(),
            decoders: HashMap::new(),
            source_sizes,
            recon_sizes,
        };
        for (i, e) in code.encoders.iter().enumerate() {
            let link = bound
                .links
                .get(e.link)
                .ok_or_else(|| bad(format!("encoder {i} names missing link {}", e.link)))?;
            let pos = link
                .inputs
                .iter()
                .position(|v| *v == e.node)
                .ok_or_else(|| bad(format!("node {} does not transmit on link {}", e.node, e.link)))?;
            if e.session == 0 || e.session > code.n {
                return Err(bad(format!("encoder {i} has session {} outside 1..{}", e.session, code.n)));
            }
            let size = bound.key_size(e.node, e.session)?;
            if e.table.len() != size {
                return Err(bad(format!("encoder {i} table has {} entries, expected {size}", e.table.len())));
            }
            if e.table.iter().any(|x| *x >= link.input_sizes[pos]) {
                return Err(bad(format!("encoder {i} emits a letter outside the link alphabet")));
            }
            if bound.encoders.insert((e.link, e.node, e.session), i).is_some() {
                return Err(bad(format!("duplicate encoder for link {} node {} session {}", e.link, e.node, e.session)));
            }
        }
        for (l, link) in bound.links.iter().enumerate() {
            for node in &link.inputs {
                for t in 1..=code.n {
                    if !bound.encoders.contains_key(&(l, *node, t)) {
                        return Err(bad(format!("no encoder for link {l} node {node} session {t}")));
                    }
                }
            }
        }
        for (i, dcd) in code.decoders.iter().enumerate() {
            let k = spec.source_index(dcd.source)?;
            let size = bound.key_size(dcd.node, code.n + 1)?;
            if dcd.table.len() != size {
                return Err(bad(format!("decoder {i} table has {} entries, expected {size}", dcd.table.len())));
            }
            let blocks = (bound.recon_sizes[k] as u128).pow(code.m as u32);
            if dcd.table.iter().any(|v| *v as u128 >= blocks) {
                return Err(bad(format!("decoder {i} emits an invalid reconstruction block")));
            }
            bound.decoders.insert((dcd.source, dcd.node), i);
        }
        for (node, wanted) in &spec.demands {
            for id in wanted {
                if !bound.decoders.contains_key(&(*id, *node)) {
                    return Err(bad(format!("no decoder for source {id} at node {node}")));
                }
            }
        }
        Ok(bound)
    }

    fn key_radix(&self, node: usize, session: usize) -> Vec<usize> {
        let mut radix = Vec::new();
        for (k, s) in self.spec.sources.iter().enumerate() {
            if s.placement.contains(&node) {
                radix.extend(std::iter::repeat(self.source_sizes[k]).take(self.code.m));
            }
        }
        for _ in 1..session {
            for link in &self.links {
                for (pos, v) in link.outputs.iter().enumerate() {
                    if *v == node {
                        radix.push(link.output_sizes[pos]);
                    }
                }
            }
        }
        radix
    }

    fn key_size(&self, node: usize, session: usize) -> Result<usize> {
        let size = self
            .key_radix(node, session)
            .iter()
            .fold(1u128, |a, r| a.saturating_mul(*r as u128));
        if size > ENUMERATION_CAP {
            return Err(Error::EnumerationCap {
                what: format!("base code table of node {node} in session {session}"),
                needed: size,
                cap: ENUMERATION_CAP,
            });
        }
        Ok(size as usize)
    }

    fn key(&self, state: &BlockState, node: usize, session: usize) -> usize {
        let mut digits = Vec::new();
        for (k, s) in self.spec.sources.iter().enumerate() {
            if s.placement.contains(&node) {
                digits.extend_from_slice(&state.src[k]);
            }
        }
        for t in 0..session - 1 {
            for (l, link) in self.links.iter().enumerate() {
                let outs = unmixed(state.y[t][l], &link.output_sizes);
                for (pos, v) in link.outputs.iter().enumerate() {
                    if *v == node {
                        digits.push(outs[pos]);
                    }
                }
            }
        }
        mixed(&digits, &self.key_radix(node, session))
    }

    /// Flat input of `link` in `session` (1-based) for a block whose outputs of
    /// earlier sessions are filled in.
    pub fn link_input(&self, state: &BlockState, link: usize, session: usize) -> usize {
        let l = &self.links[link];
        let digits: Vec<usize> = l
            .inputs
            .iter()
            .map(|node| {
                let e = self.encoders[&(link, *node, session)];
                self.code.encoders[e].table[self.key(state, *node, session)]
            })
            .collect();
        mixed(&digits, &l.input_sizes)
    }

    /// Reconstruction block of source `id` at `node` after all sessions.
    pub fn decode(&self, state: &BlockState, id: usize, node: usize) -> Result<Vec<usize>> {
        let k = self.spec.source_index(id)?;
        let d = self
            .decoders
            .get(&(id, node))
            .ok_or_else(|| Error::InvalidSpec(format!("no decoder for source {id} at node {node}")))?;
        let flat = self.code.decoders[*d].table[self.key(state, node, self.code.n + 1)];
        Ok(unmixed(flat, &vec![self.recon_sizes[k]; self.code.m]))
    }

    pub fn source_block_index(&self, state: &BlockState, k: usize) -> usize {
        mixed(&state.src[k], &vec![self.source_sizes[k]; self.code.m])
    }

    pub fn source_blocks(&self, k: usize) -> usize {
        self.source_sizes[k].pow(self.code.m as u32)
    }

    pub fn recon_blocks(&self, k: usize) -> usize {
        self.recon_sizes[k].pow(self.code.m as u32)
    }

    /// Demanded `(source id, node)` pairs in ascending order.
    pub fn demanded(&self) -> Vec<(usize, usize)> {
        let mut v: Vec<(usize, usize)> = self
            .spec
            .demands
            .iter()
            .flat_map(|(node, ids)| ids.iter().map(move |id| (*id, *node)))
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Per-letter distortion of a reconstruction block.
    pub fn block_distortion(&self, k: usize, src: &[usize], recon: &[usize]) -> f64 {
        let d = &self.spec.distortion_measures[k];
        src.iter().zip(recon).map(|(s, r)| d.d(*s, *r)).sum::<f64>() / self.code.m as f64
    }

    /// Exact session laws and distortions by forward enumeration over source
    /// blocks and channel outputs.
    pub fn analyze(&self) -> Result<ExactAnalysis> {
        let joint = &self.spec.joint_source_law;
        let letters = joint.probs().len();
        let m = self.code.m;
        let blocks = (letters as u128).saturating_pow(m as u32);
        if blocks > ENUMERATION_CAP {
            return Err(Error::EnumerationCap {
                what: "source blocks".into(),
                needed: blocks,
                cap: ENUMERATION_CAP,
            });
        }
        let mut states: Vec<(f64, BlockState)> = Vec::new();
        for b in 0..blocks as usize {
            let letters_of_block = unmixed(b, &vec![letters; m]);
            let mut p = 1.0;
            let mut src = vec![Vec::with_capacity(m); self.spec.sources.len()];
            for l in letters_of_block {
                p *= joint.probs()[l];
                let idx = joint.unflatten(l);
                for (k, s) in self.spec.sources.iter().enumerate() {
                    src[k].push(idx[s.component]);
                }
            }
            if p > 0.0 {
                states.push((p, BlockState { src, y: Vec::new() }));
            }
        }
        let mut session_joints = Vec::with_capacity(self.code.n);
        for t in 1..=self.code.n {
            let mut acc: Vec<Vec<f64>> = self
                .links
                .iter()
                .map(|l| vec![0.0; l.dmc.input_size() * l.dmc.output_size()])
                .collect();
            let mut next = Vec::new();
            for (p, state) in &states {
                let xs: Vec<usize> = (0..self.links.len()).map(|l| self.link_input(state, l, t)).collect();
                for (l, link) in self.links.iter().enumerate() {
                    let ny = link.dmc.output_size();
                    for y in 0..ny {
                        acc[l][xs[l] * ny + y] += p * link.dmc.prob(xs[l], y);
                    }
                }
                let radix: Vec<usize> = self.links.iter().map(|l| l.dmc.output_size()).collect();
                let combos: usize = radix.iter().product();
                for c in 0..combos {
                    let ys = unmixed(c, &radix);
                    let mut q = *p;
                    for (l, link) in self.links.iter().enumerate() {
                        q *= link.dmc.prob(xs[l], ys[l]);
                    }
                    if q > 0.0 {
                        let mut s = state.clone();
                        s.y.push(ys);
                        next.push((q, s));
                    }
                }
                if next.len() as u128 > ENUMERATION_CAP {
                    return Err(Error::EnumerationCap {
                        what: format!("base code states in session {t}"),
                        needed: next.len() as u128,
                        cap: ENUMERATION_CAP,
                    });
                }
            }
            states = next;
            let joints = self
                .links
                .iter()
                .zip(acc)
                .map(|(l, probs)| JointPmf::from_weights(vec![l.dmc.input_size(), l.dmc.output_size()], probs))
                .collect::<Result<Vec<_>>>()?;
            session_joints.push(joints);
        }
        let mut distortions = BTreeMap::new();
        let mut recon_joints = BTreeMap::new();
        for (id, node) in self.demanded() {
            let k = self.spec.source_index(id)?;
            let (ns, nr) = (self.source_blocks(k), self.recon_blocks(k));
            let mut law = vec![0.0; ns * nr];
            let mut dist = 0.0;
            for (p, state) in &states {
                let r = self.decode(state, id, node)?;
                dist += p * self.block_distortion(k, &state.src[k], &r);
                let rf = mixed(&r, &vec![self.recon_sizes[k]; m]);
                law[self.source_block_index(state, k) * nr + rf] += p;
            }
            distortions.insert((id, node), dist);
            recon_joints.insert((id, node), JointPmf::from_weights(vec![ns, nr], law)?);
        }
        Ok(ExactAnalysis {
            session_joints,
            distortions,
            recon_joints,
        })
    }

    /// Runs one block over the true channels.
    pub fn run_block<R: rand::Rng + ?Sized>(&self, src: Vec<Vec<usize>>, rng: &mut R) -> BlockState {
        let mut state = BlockState { src, y: Vec::new() };
        for t in 1..=self.code.n {
            let ys = (0..self.links.len())
                .map(|l| {
                    let x = self.link_input(&state, l, t);
                    crate::prob::rng::sample_symbol(self.links[l].dmc.row(x), rng)
                })
                .collect();
            state.y.push(ys);
        }
        state
    }
}

/// Flattens a reconstruction block.
pub fn flat_block(block: &[usize], size: usize) -> usize {
    mixed(block, &vec![size; block.len()])
}
