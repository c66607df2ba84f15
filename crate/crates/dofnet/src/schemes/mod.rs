//! Transmission schemes: per-node relay programs organized into one or two
//! operation modes, plus synthesis entry points that turn a classification
//! witness into a concrete, verifiable scheme.
//!
//! A [`Scheme`] says what every node transmits in every mode: nothing, a
//! scaled copy of its received signal, a replay of a signal remembered from
//! an earlier mode, or a lattice encode/decode role for the alignment
//! schemes.  Symbols are tracked explicitly (which source owns each one,
//! in which modes it is injected, and where it is decoded), so the verifier
//! can recover the exact end-to-end coefficient of every symbol at every
//! destination, including contributions that travel through a buffer.
//!
//! Submodules:
//! - [`af`]: one-shot amplify-and-forward scaling vectors that make the
//!   end-to-end two-by-two transfer diagonal.
//! - [`two_mode`]: buffering schemes that deliver three symbols per
//!   two-slot block.
//! - [`ia`]: asymmetric lattice-alignment schemes for the half-integer
//!   corner points, plus the constructed alignment ratios they rely on.
//! - [`verify`]: exact transfer/noise/power verification for all of the
//!   above.

pub mod af;
pub mod ia;
pub mod two_mode;
pub mod verify;

use std::collections::BTreeMap;
use std::fmt;

use crate::classifier::{CaseWitness, Classification, SumDofCase};
use crate::error::{Error, Result};
use crate::netmodel::{LayeredNetwork, Path};

/// What one relay does during one operation mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RelayProgram {
    /// Transmit nothing.
    Silent,
    /// Transmit the signal received this mode, scaled by the factor.
    ScaleForward(f64),
    /// Stay silent but remember the signal received this mode.
    BufferStore,
    /// Transmit the remembered signal, scaled by the factor.
    BufferForward(f64),
    /// Transmit the signal received this mode plus the remembered signal
    /// scaled by the factor (used to cancel a known cross-term).
    CombineForward(f64),
    /// Source-side lattice encoding; coefficients live in [`IaParameters`].
    IaEncode,
    /// Hard-decode on the local lattice, re-encode, and forward;
    /// coefficients live in [`IaParameters`].
    IaDecodeForward,
}

impl RelayProgram {
    /// Scale factor carried by the program, if any.
    pub fn scale(&self) -> Option<f64> {
        match self {
            RelayProgram::ScaleForward(x)
            | RelayProgram::BufferForward(x)
            | RelayProgram::CombineForward(x) => Some(*x),
            _ => None,
        }
    }

    fn token(&self) -> &'static str {
        match self {
            RelayProgram::Silent => "silent",
            RelayProgram::ScaleForward(_) => "scale_forward",
            RelayProgram::BufferStore => "buffer_store",
            RelayProgram::BufferForward(_) => "buffer_forward",
            RelayProgram::CombineForward(_) => "combine_forward",
            RelayProgram::IaEncode => "ia_encode",
            RelayProgram::IaDecodeForward => "ia_decode_forward",
        }
    }
}

impl fmt::Display for RelayProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.scale() {
            Some(x) => write!(f, "{} x={}", self.token(), x),
            None => write!(f, "{}", self.token()),
        }
    }
}

/// Which amplify-and-forward construction produced a diagonal scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AfShape {
    /// One scaled layer feeding a single bottleneck.
    SingleKey,
    /// Two scaled layers for two bottlenecks at different depths.
    TwoKey,
    /// One scaled layer of width at least three shared by both bottlenecks.
    ThreeColumn,
    /// Shared-segment topology with a three-node scaled layer.
    Butterfly,
    /// Cross-path topology with two two-node scaled layers.
    Grail,
    /// No interference to cancel; every relay simply forwards.
    Trivial,
}

impl AfShape {
    fn token(&self) -> &'static str {
        match self {
            AfShape::SingleKey => "single_key",
            AfShape::TwoKey => "two_key",
            AfShape::ThreeColumn => "three_column",
            AfShape::Butterfly => "butterfly",
            AfShape::Grail => "grail",
            AfShape::Trivial => "trivial",
        }
    }

    fn from_token(tok: &str) -> Option<AfShape> {
        Some(match tok {
            "single_key" => AfShape::SingleKey,
            "two_key" => AfShape::TwoKey,
            "three_column" => AfShape::ThreeColumn,
            "butterfly" => AfShape::Butterfly,
            "grail" => AfShape::Grail,
            "trivial" => AfShape::Trivial,
            _ => return None,
        })
    }
}

/// Which buffering layout a two-mode scheme uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TwoModeVariant {
    /// Buffer on the second pair's path, at the layer of the deciding relay.
    SecondPathBuffer,
    /// Buffer on the first pair's path, at the layer of the deciding relay.
    FirstPathBuffer,
    /// Buffer on the second pair's path, at the layer of the detour head.
    DetourBuffer,
    /// Buffer at the detour head itself and cancel the cross-term there in
    /// the second mode.
    DetourCancel,
}

impl TwoModeVariant {
    fn token(&self) -> &'static str {
        match self {
            TwoModeVariant::SecondPathBuffer => "second_path_buffer",
            TwoModeVariant::FirstPathBuffer => "first_path_buffer",
            TwoModeVariant::DetourBuffer => "detour_buffer",
            TwoModeVariant::DetourCancel => "detour_cancel",
        }
    }

    fn from_token(tok: &str) -> Option<TwoModeVariant> {
        Some(match tok {
            "second_path_buffer" => TwoModeVariant::SecondPathBuffer,
            "first_path_buffer" => TwoModeVariant::FirstPathBuffer,
            "detour_buffer" => TwoModeVariant::DetourBuffer,
            "detour_cancel" => TwoModeVariant::DetourCancel,
            _ => return None,
        })
    }
}

/// Top-level family of a scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeKind {
    /// Only one stream is served; the other source stays silent.
    SingleStream { stream: usize },
    /// One-shot amplify-and-forward with a diagonal end-to-end transfer.
    AfDiagonal { shape: AfShape },
    /// Width-two bottleneck: a genuine two-by-two-by-two interference
    /// channel that linear forwarding cannot diagonalize.  Verification is
    /// rank-only and the scheme is flagged as alignment-based.
    Ia222,
    /// Two-mode buffering scheme delivering three symbols per block.
    TwoMode { variant: TwoModeVariant },
    /// Three-stage lattice-alignment scheme for a half-integer corner.
    IaThreeStage { case_two: bool },
}

/// Payload for the width-two bottleneck directive: the two middle nodes the
/// rank checks run over, and any nodes the reduction silenced to get there.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ia222Info {
    pub middle: [usize; 2],
    pub silenced: Vec<usize>,
}

/// Full parameterization of a three-stage lattice-alignment scheme.
///
/// `epsilon` trades rate against decoding reliability; the two exponents are
/// fixed functions of it.  The codebook is the symmetric integer interval of
/// half-width `gamma * P^codebook_halfwidth_exponent`, scaled by
/// `beta * P^power_exponent` at the sources.  `irrational_t` is the
/// alignment ratio that keeps the two interleaved lattices separable at the
/// hard decoders.
#[derive(Debug, Clone, PartialEq)]
pub struct IaParameters {
    /// Which of the two middle-layer zero patterns applies: `false` when the
    /// first stream splits, `true` when the second does.
    pub case_two: bool,
    pub epsilon: f64,
    pub gamma: f64,
    pub beta: f64,
    /// Common scale applied by the two outer middle relays.
    pub alpha_relay: f64,
    /// Alignment ratio seen by the hard decoders.
    pub irrational_t: f64,
    /// Codebook half-width grows as `P` to this power: (1-eps)/(2(2+eps)).
    pub codebook_halfwidth_exponent: f64,
    /// Source scale grows as `P` to this power: (1+2eps)/(2(2+eps)).
    pub power_exponent: f64,
    /// The three middle-layer nodes, in layer order.
    pub middle: [usize; 3],
    /// Mixing coefficients for the two halves of the split message.
    pub src_split: [f64; 2],
    /// Coefficient for the unsplit message at the other source.
    pub src_single: f64,
    /// Forward scales at the two outer middle nodes (times `alpha_relay`).
    pub relay_outer: [f64; 2],
    /// Re-encode scale at the decode-and-forward middle node.
    pub relay_decode: f64,
    /// Constellation ratios at the three hard decoders
    /// (middle node, first destination, second destination).
    pub decode_ratio: [f64; 3],
    /// True when `irrational_t` was constructed (rather than inherited from
    /// the channel gains), so its distance-decay rate is certified.
    pub constructed_ratio: bool,
}

impl IaParameters {
    /// Codebook half-width exponent implied by `eps`.
    pub fn halfwidth_exponent(eps: f64) -> f64 {
        (1.0 - eps) / (2.0 * (2.0 + eps))
    }

    /// Source power exponent implied by `eps`.
    pub fn power_exponent_for(eps: f64) -> f64 {
        (1.0 + 2.0 * eps) / (2.0 * (2.0 + eps))
    }

    /// Per-message degrees-of-freedom parameter implied by `eps`.
    pub fn per_message_dof(eps: f64) -> f64 {
        (1.0 - eps) / (2.0 + eps)
    }

    /// Codebook half-width (number of positive lattice points) at power `p`.
    pub fn halfwidth_at(&self, p: f64) -> u64 {
        (self.gamma * p.powf(self.codebook_halfwidth_exponent)).floor() as u64
    }

    /// Source amplitude scale at power `p`.
    pub fn source_scale_at(&self, p: f64) -> f64 {
        self.beta * p.powf(self.power_exponent)
    }
}

/// One independent message symbol carried by a block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolSpec {
    /// Owning source: 1 or 2.
    pub source: usize,
    /// Modes (0-based) in which the owner injects the symbol.
    pub inject_modes: Vec<usize>,
}

/// Where one symbol is decoded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecodeSpec {
    /// Index into [`Scheme::symbols`].
    pub symbol: usize,
    /// Destination: 1 or 2.
    pub dest: usize,
    /// Mode (0-based) whose received signal carries the symbol.
    pub mode: usize,
}

/// Relay programs for one mode, keyed by node index.
pub type ModePrograms = BTreeMap<usize, RelayProgram>;

/// A complete transmission scheme for a network.
#[derive(Debug, Clone, PartialEq)]
pub struct Scheme {
    pub kind: SchemeKind,
    /// One entry per mode; all modes cover the same nodes.
    pub modes: Vec<ModePrograms>,
    pub symbols: Vec<SymbolSpec>,
    pub decodes: Vec<DecodeSpec>,
    /// Degrees-of-freedom pair the scheme is designed to achieve.
    pub predicted_dof: (f64, f64),
    /// Fraction of the power budget spent on fresh symbols; in (0, 1).
    pub power_margin: f64,
    /// Present only for three-stage alignment schemes.
    pub ia: Option<IaParameters>,
    /// Present only for width-two bottleneck directives.
    pub ia222: Option<Ia222Info>,
}

impl Scheme {
    /// Number of operation modes (1 or 2).
    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    /// Program of `node` in `mode`, defaulting to silent for nodes the
    /// builder left out (destinations never transmit).
    pub fn program(&self, mode: usize, node: usize) -> RelayProgram {
        self.modes
            .get(mode)
            .and_then(|m| m.get(&node).copied())
            .unwrap_or(RelayProgram::Silent)
    }

    /// Nodes carrying a non-silent program in at least one mode.
    pub fn active_nodes(&self) -> Vec<usize> {
        let mut out: Vec<usize> = Vec::new();
        for mode in &self.modes {
            for (&v, &prog) in mode {
                if prog != RelayProgram::Silent && !out.contains(&v) {
                    out.push(v);
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Structural well-formedness against a network.  Checks mode counts,
    /// program coverage, buffer ordering, finite scales, and symbol/decode
    /// index ranges.  Signal-level properties are the verifier's job.
    pub fn check(&self, net: &LayeredNetwork) -> Result<()> {
        if self.modes.is_empty() || self.modes.len() > 2 {
            return Err(Error::invariant("scheme must have one or two modes"));
        }
        if !(self.power_margin > 0.0 && self.power_margin < 1.0) {
            return Err(Error::invariant("power margin must lie in (0, 1)"));
        }
        if !(self.predicted_dof.0.is_finite() && self.predicted_dof.1.is_finite()) {
            return Err(Error::invariant("predicted degrees of freedom must be finite"));
        }
        let t = net.terminals();
        let keys: Vec<usize> = self.modes[0].keys().copied().collect();
        for (k, mode) in self.modes.iter().enumerate() {
            let mode_keys: Vec<usize> = mode.keys().copied().collect();
            if mode_keys != keys {
                return Err(Error::invariant("all modes must cover the same nodes"));
            }
            for (&v, prog) in mode {
                if v >= net.len() {
                    return Err(Error::invariant("program for unknown node"));
                }
                if v == t.d1 || v == t.d2 {
                    return Err(Error::invariant("destinations do not transmit"));
                }
                if let Some(x) = prog.scale() {
                    if !x.is_finite() {
                        return Err(Error::invariant("scale factors must be finite"));
                    }
                }
                match prog {
                    RelayProgram::BufferForward(_) | RelayProgram::CombineForward(_) => {
                        let stored_earlier = (0..k).any(|j| {
                            self.modes[j].get(&v) == Some(&RelayProgram::BufferStore)
                        });
                        if !stored_earlier {
                            return Err(Error::invariant(
                                "buffer replay requires a store in an earlier mode",
                            ));
                        }
                    }
                    RelayProgram::IaEncode => {
                        if v != t.s1 && v != t.s2 {
                            return Err(Error::invariant("only sources encode lattice symbols"));
                        }
                    }
                    _ => {}
                }
            }
        }
        // Every non-terminal node needs a stated program in every mode.
        for v in 0..net.len() {
            if v == t.s1 || v == t.s2 || v == t.d1 || v == t.d2 {
                continue;
            }
            if !self.modes[0].contains_key(&v) {
                return Err(Error::invariant("every relay needs a program in every mode"));
            }
        }
        if self.symbols.is_empty() {
            return Err(Error::invariant("scheme carries no symbols"));
        }
        for sym in &self.symbols {
            if sym.source != 1 && sym.source != 2 {
                return Err(Error::invariant("symbol owner must be source 1 or 2"));
            }
            if sym.inject_modes.is_empty() {
                return Err(Error::invariant("symbol is never injected"));
            }
            if sym.inject_modes.iter().any(|&m| m >= self.modes.len()) {
                return Err(Error::invariant("symbol injected in unknown mode"));
            }
        }
        for dec in &self.decodes {
            if dec.symbol >= self.symbols.len() {
                return Err(Error::invariant("decode references unknown symbol"));
            }
            if dec.dest != 1 && dec.dest != 2 {
                return Err(Error::invariant("decode destination must be 1 or 2"));
            }
            if dec.mode >= self.modes.len() {
                return Err(Error::invariant("decode references unknown mode"));
            }
        }
        if let Some(info) = &self.ia222 {
            for &v in &info.middle {
                if v >= net.len() {
                    return Err(Error::invariant("bottleneck node out of range"));
                }
            }
        }
        if let Some(ia) = &self.ia {
            if !(ia.epsilon > 0.0 && ia.epsilon < 1.0) {
                return Err(Error::invariant("epsilon must lie in (0, 1)"));
            }
            for &v in &ia.middle {
                if v >= net.len() {
                    return Err(Error::invariant("middle node out of range"));
                }
            }
        }
        Ok(())
    }

    /// Serialize to the line-oriented text format.  Scale factors print in
    /// shortest round-trip decimal form, so parsing the output reproduces
    /// the exact same bit patterns.
    pub fn serialize(&self, net: &LayeredNetwork) -> String {
        let mut out = String::new();
        let kind = match self.kind {
            SchemeKind::SingleStream { stream } => format!("kind=single_stream stream={stream}"),
            SchemeKind::AfDiagonal { shape } => format!("kind=af_diagonal shape={}", shape.token()),
            SchemeKind::Ia222 => "kind=ia222".to_string(),
            SchemeKind::TwoMode { variant } => format!("kind=two_mode variant={}", variant.token()),
            SchemeKind::IaThreeStage { case_two } => {
                format!("kind=ia_three_stage case={}", if case_two { 2 } else { 1 })
            }
        };
        out.push_str(&format!(
            "scheme {kind} modes={} margin={} dof={},{}\n",
            self.modes.len(),
            self.power_margin,
            self.predicted_dof.0,
            self.predicted_dof.1
        ));
        for sym in &self.symbols {
            let modes: Vec<String> = sym.inject_modes.iter().map(|m| m.to_string()).collect();
            out.push_str(&format!(
                "symbol source={} modes={}\n",
                sym.source,
                modes.join(",")
            ));
        }
        for dec in &self.decodes {
            out.push_str(&format!(
                "decode symbol={} dest={} mode={}\n",
                dec.symbol, dec.dest, dec.mode
            ));
        }
        for (k, mode) in self.modes.iter().enumerate() {
            for (&v, prog) in mode {
                out.push_str(&format!("mode {k} node {} {prog}\n", net.name(v)));
            }
        }
        if let Some(info) = &self.ia222 {
            let silenced = if info.silenced.is_empty() {
                "-".to_string()
            } else {
                info.silenced
                    .iter()
                    .map(|&v| net.name(v).to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            };
            out.push_str(&format!(
                "ia222 middle={},{} silenced={}\n",
                net.name(info.middle[0]),
                net.name(info.middle[1]),
                silenced
            ));
        }
        if let Some(ia) = &self.ia {
            out.push_str(&format!(
                "ia case={} eps={} gamma={} beta={} alpha_relay={} t={} halfwidth_exp={} \
                 power_exp={} constructed={}\n",
                if ia.case_two { 2 } else { 1 },
                ia.epsilon,
                ia.gamma,
                ia.beta,
                ia.alpha_relay,
                ia.irrational_t,
                ia.codebook_halfwidth_exponent,
                ia.power_exponent,
                ia.constructed_ratio
            ));
            out.push_str(&format!(
                "ia_middle {} {} {}\n",
                net.name(ia.middle[0]),
                net.name(ia.middle[1]),
                net.name(ia.middle[2])
            ));
            out.push_str(&format!("ia_coeff src_split {} {}\n", ia.src_split[0], ia.src_split[1]));
            out.push_str(&format!("ia_coeff src_single {}\n", ia.src_single));
            out.push_str(&format!(
                "ia_coeff relay_outer {} {}\n",
                ia.relay_outer[0], ia.relay_outer[1]
            ));
            out.push_str(&format!("ia_coeff relay_decode {}\n", ia.relay_decode));
            out.push_str(&format!(
                "ia_coeff decode_ratio {} {} {}\n",
                ia.decode_ratio[0], ia.decode_ratio[1], ia.decode_ratio[2]
            ));
        }
        out
    }

    /// Parse the text format produced by [`Scheme::serialize`].
    pub fn parse(net: &LayeredNetwork, text: &str) -> Result<Scheme> {
        let mut kind: Option<SchemeKind> = None;
        let mut margin = 0.0f64;
        let mut dof = (0.0f64, 0.0f64);
        let mut symbols: Vec<SymbolSpec> = Vec::new();
        let mut decodes: Vec<DecodeSpec> = Vec::new();
        let mut modes: Vec<ModePrograms> = Vec::new();
        let mut ia222: Option<Ia222Info> = None;
        let mut ia_line: Option<BTreeMap<String, String>> = None;
        let mut ia_middle: Option<[usize; 3]> = None;
        let mut ia_coeffs: BTreeMap<String, Vec<f64>> = BTreeMap::new();

        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: &str| Error::Parse {
                line: lineno + 1,
                msg: msg.to_string(),
            };
            let mut words = line.split_whitespace();
            let head = words.next().unwrap();
            match head {
                "scheme" => {
                    let kv = parse_kv(words)?;
                    let kind_tok = kv.get("kind").ok_or_else(|| err("missing kind"))?;
                    kind = Some(match kind_tok.as_str() {
                        "single_stream" => SchemeKind::SingleStream {
                            stream: get_usize(&kv, "stream", lineno)?,
                        },
                        "af_diagonal" => SchemeKind::AfDiagonal {
                            shape: kv
                                .get("shape")
                                .and_then(|s| AfShape::from_token(s))
                                .ok_or_else(|| err("bad shape"))?,
                        },
                        "ia222" => SchemeKind::Ia222,
                        "two_mode" => SchemeKind::TwoMode {
                            variant: kv
                                .get("variant")
                                .and_then(|s| TwoModeVariant::from_token(s))
                                .ok_or_else(|| err("bad variant"))?,
                        },
                        "ia_three_stage" => SchemeKind::IaThreeStage {
                            case_two: get_usize(&kv, "case", lineno)? == 2,
                        },
                        _ => return Err(err("unknown scheme kind")),
                    });
                    let n_modes = get_usize(&kv, "modes", lineno)?;
                    if n_modes == 0 || n_modes > 2 {
                        return Err(err("modes must be 1 or 2"));
                    }
                    modes = vec![ModePrograms::new(); n_modes];
                    margin = get_f64(&kv, "margin", lineno)?;
                    let dof_str = kv.get("dof").ok_or_else(|| err("missing dof"))?;
                    let parts: Vec<&str> = dof_str.split(',').collect();
                    if parts.len() != 2 {
                        return Err(err("dof needs two comma-separated values"));
                    }
                    dof = (
                        parts[0].parse().map_err(|_| err("bad dof value"))?,
                        parts[1].parse().map_err(|_| err("bad dof value"))?,
                    );
                }
                "symbol" => {
                    let kv = parse_kv(words)?;
                    let source = get_usize(&kv, "source", lineno)?;
                    let modes_str = kv.get("modes").ok_or_else(|| err("missing modes"))?;
                    let inject_modes: Vec<usize> = modes_str
                        .split(',')
                        .map(|m| m.parse().map_err(|_| err("bad mode index")))
                        .collect::<Result<_>>()?;
                    symbols.push(SymbolSpec { source, inject_modes });
                }
                "decode" => {
                    let kv = parse_kv(words)?;
                    decodes.push(DecodeSpec {
                        symbol: get_usize(&kv, "symbol", lineno)?,
                        dest: get_usize(&kv, "dest", lineno)?,
                        mode: get_usize(&kv, "mode", lineno)?,
                    });
                }
                "mode" => {
                    let k: usize = words
                        .next()
                        .and_then(|w| w.parse().ok())
                        .ok_or_else(|| err("missing mode index"))?;
                    if k >= modes.len() {
                        return Err(err("mode index out of range (scheme line first?)"));
                    }
                    if words.next() != Some("node") {
                        return Err(err("expected `node`"));
                    }
                    let name = words.next().ok_or_else(|| err("missing node id"))?;
                    let v = net.require(name)?;
                    let tok = words.next().ok_or_else(|| err("missing program"))?;
                    let x = match words.next() {
                        Some(w) => {
                            let stripped =
                                w.strip_prefix("x=").ok_or_else(|| err("expected x=<real>"))?;
                            Some(stripped.parse::<f64>().map_err(|_| err("bad scale"))?)
                        }
                        None => None,
                    };
                    let prog = match (tok, x) {
                        ("silent", None) => RelayProgram::Silent,
                        ("scale_forward", Some(x)) => RelayProgram::ScaleForward(x),
                        ("buffer_store", None) => RelayProgram::BufferStore,
                        ("buffer_forward", Some(x)) => RelayProgram::BufferForward(x),
                        ("combine_forward", Some(x)) => RelayProgram::CombineForward(x),
                        ("ia_encode", None) => RelayProgram::IaEncode,
                        ("ia_decode_forward", None) => RelayProgram::IaDecodeForward,
                        _ => return Err(err("bad program/scale combination")),
                    };
                    modes[k].insert(v, prog);
                }
                "ia222" => {
                    let kv = parse_kv(words)?;
                    let mid = kv.get("middle").ok_or_else(|| err("missing middle"))?;
                    let parts: Vec<&str> = mid.split(',').collect();
                    if parts.len() != 2 {
                        return Err(err("middle needs two nodes"));
                    }
                    let silenced_str = kv.get("silenced").ok_or_else(|| err("missing silenced"))?;
                    let silenced = if silenced_str == "-" {
                        Vec::new()
                    } else {
                        silenced_str
                            .split(',')
                            .map(|n| net.require(n))
                            .collect::<Result<_>>()?
                    };
                    ia222 = Some(Ia222Info {
                        middle: [net.require(parts[0])?, net.require(parts[1])?],
                        silenced,
                    });
                }
                "ia" => {
                    ia_line = Some(parse_kv(words)?);
                }
                "ia_middle" => {
                    let names: Vec<&str> = words.collect();
                    if names.len() != 3 {
                        return Err(err("ia_middle needs three nodes"));
                    }
                    ia_middle = Some([
                        net.require(names[0])?,
                        net.require(names[1])?,
                        net.require(names[2])?,
                    ]);
                }
                "ia_coeff" => {
                    let name = words.next().ok_or_else(|| err("missing coeff name"))?;
                    let vals: Vec<f64> = words
                        .map(|w| w.parse().map_err(|_| err("bad coeff value")))
                        .collect::<Result<_>>()?;
                    ia_coeffs.insert(name.to_string(), vals);
                }
                _ => return Err(err("unknown directive")),
            }
        }

        let kind = kind.ok_or(Error::Malformed("missing scheme line".into()))?;
        let ia = match ia_line {
            None => None,
            Some(kv) => {
                let middle =
                    ia_middle.ok_or(Error::Malformed("ia block without ia_middle".into()))?;
                let take = |name: &str, n: usize| -> Result<Vec<f64>> {
                    let v = ia_coeffs
                        .get(name)
                        .ok_or_else(|| Error::Malformed(format!("missing ia_coeff {name}")))?;
                    if v.len() != n {
                        return Err(Error::Malformed(format!("ia_coeff {name} needs {n} values")));
                    }
                    Ok(v.clone())
                };
                let split = take("src_split", 2)?;
                let outer = take("relay_outer", 2)?;
                let ratio = take("decode_ratio", 3)?;
                Some(IaParameters {
                    case_two: get_usize(&kv, "case", 0)? == 2,
                    epsilon: get_f64(&kv, "eps", 0)?,
                    gamma: get_f64(&kv, "gamma", 0)?,
                    beta: get_f64(&kv, "beta", 0)?,
                    alpha_relay: get_f64(&kv, "alpha_relay", 0)?,
                    irrational_t: get_f64(&kv, "t", 0)?,
                    codebook_halfwidth_exponent: get_f64(&kv, "halfwidth_exp", 0)?,
                    power_exponent: get_f64(&kv, "power_exp", 0)?,
                    middle,
                    src_split: [split[0], split[1]],
                    src_single: take("src_single", 1)?[0],
                    relay_outer: [outer[0], outer[1]],
                    relay_decode: take("relay_decode", 1)?[0],
                    decode_ratio: [ratio[0], ratio[1], ratio[2]],
                    constructed_ratio: kv.get("constructed").map(|s| s == "true").unwrap_or(false),
                })
            }
        };
        let scheme = Scheme {
            kind,
            modes,
            symbols,
            decodes,
            predicted_dof: dof,
            power_margin: margin,
            ia,
            ia222,
        };
        scheme.check(net)?;
        Ok(scheme)
    }
}

fn parse_kv<'a, I: Iterator<Item = &'a str>>(words: I) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for w in words {
        let (k, v) = w
            .split_once('=')
            .ok_or(Error::Malformed(format!("expected key=value, got `{w}`")))?;
        map.insert(k.to_string(), v.to_string());
    }
    Ok(map)
}

fn get_usize(kv: &BTreeMap<String, String>, key: &str, line: usize) -> Result<usize> {
    kv.get(key)
        .and_then(|s| s.parse().ok())
        .ok_or(Error::Parse {
            line: line + 1,
            msg: format!("missing or bad `{key}`"),
        })
}

fn get_f64(kv: &BTreeMap<String, String>, key: &str, line: usize) -> Result<f64> {
    kv.get(key)
        .and_then(|s| s.parse().ok())
        .ok_or(Error::Parse {
            line: line + 1,
            msg: format!("missing or bad `{key}`"),
        })
}

/// Build a one-mode scheme that serves a single stream: the chosen source's
/// symbol rides a fixed path while the other source stays silent.  Every
/// relay on the path forwards unscaled; everything else is silent.
pub fn synth_single_stream(net: &LayeredNetwork, stream: usize) -> Result<Scheme> {
    let t = net.terminals();
    let (s, d) = if stream == 1 { (t.s1, t.d1) } else { (t.s2, t.d2) };
    let full = net.full_set();
    let path: Path = net
        .some_path(&full, s, d)
        .ok_or(Error::invariant("requested stream has no route"))?;
    let mut programs = ModePrograms::new();
    for v in 0..net.len() {
        if v == t.s1 || v == t.s2 || v == t.d1 || v == t.d2 {
            continue;
        }
        let prog = if path.contains(v) {
            RelayProgram::ScaleForward(1.0)
        } else {
            RelayProgram::Silent
        };
        programs.insert(v, prog);
    }
    let predicted = if stream == 1 { (1.0, 0.0) } else { (0.0, 1.0) };
    Ok(Scheme {
        kind: SchemeKind::SingleStream { stream },
        modes: vec![programs],
        symbols: vec![SymbolSpec { source: stream, inject_modes: vec![0] }],
        decodes: vec![DecodeSpec { symbol: 0, dest: stream, mode: 0 }],
        predicted_dof: predicted,
        power_margin: 0.5,
        ia: None,
        ia222: None,
    })
}

/// Synthesize the scheme matching a classification: single stream for the
/// cut cases, diagonal amplify-and-forward for the disjoint-pair and
/// shared-topology cases, and two-mode buffering for the half-integer
/// cases.  The result is structurally checked but not yet verified; run it
/// through [`verify::verify_scheme`] for the signal-level report.
pub fn synthesize(net: &LayeredNetwork, cls: &Classification) -> Result<Scheme> {
    let t = net.terminals();
    match cls.case {
        SumDofCase::Disconnected => {
            if net.reachable(t.s1, t.d1) {
                synth_single_stream(net, 1)
            } else if net.reachable(t.s2, t.d2) {
                synth_single_stream(net, 2)
            } else {
                Err(Error::InvalidArgument(
                    "neither stream has a route; nothing to synthesize".into(),
                ))
            }
        }
        SumDofCase::A | SumDofCase::APrime => {
            let stream = if net.reachable(t.s1, t.d1) { 1 } else { 2 };
            synth_single_stream(net, stream)
        }
        SumDofCase::B => match &cls.witness {
            CaseWitness::Manageable(w) => af::af_scheme_from_pair(net, w),
            _ => Err(Error::invariant("disjoint-pair case without its witness")),
        },
        SumDofCase::BPrime => match &cls.witness {
            CaseWitness::Butterfly(w) => af::butterfly_scheme(net, w),
            CaseWitness::Grail(w) => af::grail_scheme(net, w),
            _ => Err(Error::invariant("shared-topology case without its witness")),
        },
        SumDofCase::C1 => match &cls.witness {
            CaseWitness::C1(w) => two_mode::synth_two_mode_c1(net, w),
            _ => Err(Error::invariant("first half-integer case without its witness")),
        },
        SumDofCase::C2 => match &cls.witness {
            CaseWitness::C2(w) => two_mode::synth_two_mode_c2(net, w),
            _ => Err(Error::invariant("second half-integer case without its witness")),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn sample_af_scheme(net: &LayeredNetwork) -> Scheme {
        let t = net.terminals();
        let mut programs = ModePrograms::new();
        for v in 0..net.len() {
            if v == t.s1 || v == t.s2 || v == t.d1 || v == t.d2 {
                continue;
            }
            programs.insert(v, RelayProgram::ScaleForward(0.1 + v as f64 * 0.25));
        }
        Scheme {
            kind: SchemeKind::AfDiagonal { shape: AfShape::Trivial },
            modes: vec![programs],
            symbols: vec![
                SymbolSpec { source: 1, inject_modes: vec![0] },
                SymbolSpec { source: 2, inject_modes: vec![0] },
            ],
            decodes: vec![
                DecodeSpec { symbol: 0, dest: 1, mode: 0 },
                DecodeSpec { symbol: 1, dest: 2, mode: 0 },
            ],
            predicted_dof: (1.0, 1.0),
            power_margin: 0.5,
            ia: None,
            ia222: None,
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let net = fixtures::parallel();
        let mut scheme = sample_af_scheme(&net);
        // Scale factors with no short decimal form must still survive.
        let ugly = 1.0 / 3.0 + 1e-13;
        if let Some(RelayProgram::ScaleForward(x)) = scheme.modes[0].values_mut().next().map(|p| {
            *p = RelayProgram::ScaleForward(ugly);
            *p
        }) {
            assert_eq!(x, ugly);
        }
        let text = scheme.serialize(&net);
        let back = Scheme::parse(&net, &text).expect("parse back");
        assert_eq!(back, scheme);
        // Serializing again yields the identical text.
        assert_eq!(back.serialize(&net), text);
    }

    #[test]
    fn two_mode_round_trip() {
        let net = fixtures::parallel();
        let t = net.terminals();
        let relays: Vec<usize> = (0..net.len())
            .filter(|&v| v != t.s1 && v != t.s2 && v != t.d1 && v != t.d2)
            .collect();
        let mut m0 = ModePrograms::new();
        let mut m1 = ModePrograms::new();
        for (i, &v) in relays.iter().enumerate() {
            if i == 0 {
                m0.insert(v, RelayProgram::BufferStore);
                m1.insert(v, RelayProgram::CombineForward(-0.625));
            } else {
                m0.insert(v, RelayProgram::ScaleForward(1.0));
                m1.insert(v, RelayProgram::ScaleForward(1.0));
            }
        }
        let scheme = Scheme {
            kind: SchemeKind::TwoMode { variant: TwoModeVariant::DetourCancel },
            modes: vec![m0, m1],
            symbols: vec![
                SymbolSpec { source: 1, inject_modes: vec![0] },
                SymbolSpec { source: 1, inject_modes: vec![1] },
                SymbolSpec { source: 2, inject_modes: vec![0, 1] },
            ],
            decodes: vec![
                DecodeSpec { symbol: 0, dest: 1, mode: 0 },
                DecodeSpec { symbol: 1, dest: 1, mode: 1 },
                DecodeSpec { symbol: 2, dest: 2, mode: 1 },
            ],
            predicted_dof: (1.0, 0.5),
            power_margin: 0.25,
            ia: None,
            ia222: None,
        };
        scheme.check(&net).expect("well-formed");
        let text = scheme.serialize(&net);
        let back = Scheme::parse(&net, &text).expect("parse");
        assert_eq!(back, scheme);
    }

    #[test]
    fn buffer_replay_without_store_rejected() {
        let net = fixtures::parallel();
        let mut scheme = sample_af_scheme(&net);
        let first = *scheme.modes[0].keys().next().expect("has relays");
        scheme.modes[0].insert(first, RelayProgram::BufferForward(1.0));
        assert!(scheme.check(&net).is_err());
    }

    #[test]
    fn missing_relay_program_rejected() {
        let net = fixtures::parallel();
        let mut scheme = sample_af_scheme(&net);
        let first = *scheme.modes[0].keys().next().expect("has relays");
        scheme.modes[0].remove(&first);
        assert!(scheme.check(&net).is_err());
    }

    #[test]
    fn destination_program_rejected() {
        let net = fixtures::parallel();
        let mut scheme = sample_af_scheme(&net);
        let t = net.terminals();
        scheme.modes[0].insert(t.d1, RelayProgram::ScaleForward(1.0));
        assert!(scheme.check(&net).is_err());
    }

    #[test]
    fn non_finite_scale_rejected() {
        let net = fixtures::parallel();
        let mut scheme = sample_af_scheme(&net);
        let first = *scheme.modes[0].keys().next().expect("has relays");
        scheme.modes[0].insert(first, RelayProgram::ScaleForward(f64::NAN));
        assert!(scheme.check(&net).is_err());
    }

    #[test]
    fn single_stream_covers_bottleneck() {
        let net = fixtures::bottleneck();
        let scheme = synth_single_stream(&net, 1).expect("synth");
        scheme.check(&net).expect("well-formed");
        assert_eq!(scheme.predicted_dof, (1.0, 0.0));
        let m = net.require("m").expect("bottleneck relay");
        assert_eq!(scheme.program(0, m), RelayProgram::ScaleForward(1.0));
    }

    #[test]
    fn parse_rejects_unknown_directive() {
        let net = fixtures::parallel();
        let scheme = sample_af_scheme(&net);
        let mut text = scheme.serialize(&net);
        text.push_str("frobnicate all\n");
        assert!(Scheme::parse(&net, &text).is_err());
    }

    #[test]
    fn parse_rejects_unknown_node() {
        let net = fixtures::parallel();
        let scheme = sample_af_scheme(&net);
        let text = scheme.serialize(&net).replace("node a", "node zz");
        assert!(Scheme::parse(&net, &text).is_err());
    }

    #[test]
    fn ia_parameters_round_trip() {
        let net = fixtures::funnel_shallow();
        let t = net.terminals();
        let mut programs = ModePrograms::new();
        for v in 0..net.len() {
            if v == t.s1 || v == t.s2 || v == t.d1 || v == t.d2 {
                continue;
            }
            programs.insert(v, RelayProgram::ScaleForward(1.0));
        }
        let mid = [
            net.require("a2").unwrap(),
            net.require("w").unwrap(),
            net.require("b2").unwrap(),
        ];
        programs.insert(mid[1], RelayProgram::IaDecodeForward);
        let eps = 0.1;
        let scheme = Scheme {
            kind: SchemeKind::IaThreeStage { case_two: false },
            modes: vec![programs],
            symbols: vec![
                SymbolSpec { source: 1, inject_modes: vec![0] },
                SymbolSpec { source: 1, inject_modes: vec![0] },
                SymbolSpec { source: 2, inject_modes: vec![0] },
            ],
            decodes: vec![
                DecodeSpec { symbol: 0, dest: 1, mode: 0 },
                DecodeSpec { symbol: 1, dest: 1, mode: 0 },
                DecodeSpec { symbol: 2, dest: 2, mode: 0 },
            ],
            predicted_dof: (
                2.0 * IaParameters::per_message_dof(eps),
                IaParameters::per_message_dof(eps),
            ),
            power_margin: 0.5,
            ia: Some(IaParameters {
                case_two: false,
                epsilon: eps,
                gamma: 1.0,
                beta: 0.125,
                alpha_relay: 0.0625,
                irrational_t: 1.414213562373095,
                codebook_halfwidth_exponent: IaParameters::halfwidth_exponent(eps),
                power_exponent: IaParameters::power_exponent_for(eps),
                middle: mid,
                src_split: [1.0, 1.414213562373095],
                src_single: 0.75,
                relay_outer: [1.0, -0.5],
                relay_decode: 1.25,
                decode_ratio: [1.414213562373095, 0.7071067811865475, 1.414213562373095],
                constructed_ratio: true,
            }),
            ia222: None,
        };
        scheme.check(&net).expect("well-formed");
        let text = scheme.serialize(&net);
        let back = Scheme::parse(&net, &text).expect("parse");
        assert_eq!(back, scheme);
    }
}
