//! Verification suites with their canonical parameters.

use crate::biorthogonality::{gram_with_targets, printed_gram, rotated_gram, DEFAULT_TOL};
use crate::coalescence::{coalesce_kernel, coalesce_psi0, coalesce_psi1, discrete_trace, level_splitting, DEFAULT_BETAS};
use crate::diffop::chain_residuals;
use crate::error::{Error, Result};
use crate::identity::{apply_kernel_multi, smeared_functional, Battery, KernelFamily, Functional, TestFunction, Variant};
use crate::jordan::{
    bilinear, binorm_structure, build, diagonalize_identity, eigenvector, mansym_cell, matches_structure, max_abs,
    random_round_trips, symmetric_realization, t_symmetric_form, JordanSpec, Pairing,
};
use crate::model::{ModelKind, ModelParams};
use crate::observables::{
    average, packet_binorm, packet_ev, packet_ev_stencil, packet_study, prefactor_reports, Expansion, Observable,
    Operator, PacketParams, Prescription,
};
use crate::report::{Record, SuiteReport, Table};
use crate::scattering::{
    derivative_jump, green, green_residual, pole_order, singular_points, transmission, DEFAULT_RADII, DEFAULT_THETA,
};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::f64::consts::PI;
use std::str::FromStr;
use std::time::Instant;

type C = Complex64;
const I: C = C::new(0.0, 1.0);

pub const CHAIN_TOL: f64 = 1e-6;
pub const BINORM_TOL: f64 = 1e-8;
pub const SLOPE_TOL: f64 = 0.02;
pub const PREFACTOR_REL_TOL: f64 = 1e-3;
pub const ORDER_MIN: f64 = 0.8;
pub const KERNEL_LIMIT_TOL: f64 = 1e-2;
pub const FULL_KERNEL_TOL: f64 = 1e-4;
pub const PUNCTURED_TOL: f64 = 1e-3;
pub const PUNCTURED_EPS: f64 = 1e-3;
pub const POLE_TOL: f64 = 0.05;
pub const TRANSMISSION_TOL: f64 = 1e-6;
pub const REFLECTION_TOL: f64 = 1e-8;
pub const FINITE_TOL: f64 = 1e-10;
pub const FINITE_CASES: usize = 100;
pub const FINITE_MAX_DIM: usize = 12;
/// Packet widths spanning the wide window `[10⁻³, 10⁻¹]`.
pub const PACKET_EPS: [f64; 5] = [1e-1, 0.031622776601683794, 1e-2, 0.0031622776601683794, 1e-3];
/// Packet widths in the asymptotic window `[10⁻⁴, 10⁻³]`.
pub const PACKET_EPS_ASYMPTOTIC: [f64; 3] = [1e-3, 0.00031622776601683794, 1e-4];
pub const MOMENTA: [f64; 3] = [0.5, 1.0, 2.0];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Chains,
    Binorms,
    Packet,
    Coalescence,
    Identity,
    Scattering,
    Finite,
}

impl Suite {
    pub const ALL: [Suite; 7] =
        [Suite::Chains, Suite::Binorms, Suite::Packet, Suite::Coalescence, Suite::Identity, Suite::Scattering, Suite::Finite];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Chains => "chains",
            Suite::Binorms => "binorms",
            Suite::Packet => "packet",
            Suite::Coalescence => "coalescence",
            Suite::Identity => "identity",
            Suite::Scattering => "scattering",
            Suite::Finite => "finite",
        }
    }
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::Parameter(format!("unknown suite '{s}'")))
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SuiteOptions {
    pub seed: u64,
    pub kappa: f64,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions { seed: 42, kappa: 1.0 }
    }
}

pub fn run(suite: Suite, opts: &SuiteOptions) -> SuiteReport {
    let t = Instant::now();
    let mut r = match suite {
        Suite::Chains => chains(),
        Suite::Binorms => binorms(),
        Suite::Packet => packet(),
        Suite::Coalescence => coalescence(),
        Suite::Identity => identity(),
        Suite::Scattering => scattering(),
        Suite::Finite => finite(opts),
    };
    r.seconds = t.elapsed().as_secs_f64();
    r
}

fn jb() -> ModelParams {
    ModelParams::jordan_bound(1.0, I).expect("valid")
}
fn tl() -> ModelParams {
    ModelParams::two_level(C::new(1.0, 0.0), 0.3, I).expect("valid")
}
fn th(n: u32) -> ModelParams {
    ModelParams::threshold(n, I).expect("valid")
}
fn cbs(alpha: f64) -> ModelParams {
    ModelParams::continuum_bs(alpha, I).expect("valid")
}

fn model_tag(p: &ModelParams) -> String {
    match p.kind() {
        ModelKind::Threshold => format!("threshold_n{}", p.n()),
        k => k.name().replace('-', "_"),
    }
}

const ANCHOR_CHAIN: &str = "Jordan chain: h psi0 = lambda psi0, (h - lambda) psi1 = psi0";
const ANCHOR_CONTINUUM: &str = "continuum eigenfunctions h psi(k) = k^2 psi(k)";

fn chain_records(s: &mut SuiteReport, p: &ModelParams) {
    let tag = model_tag(p);
    for (i, r) in chain_residuals(p).into_iter().enumerate() {
        let anchor = if r.relation.contains("psi(k)") { ANCHOR_CONTINUUM } else { ANCHOR_CHAIN };
        s.push(Record::at_most(&format!("chains.{tag}.{i}"), anchor, r.sup_norm, CHAIN_TOL).with_note(&r.relation));
    }
}

pub fn chains() -> SuiteReport {
    let mut s = SuiteReport::new("chains");
    for p in [jb(), cbs(1.0)] {
        chain_records(&mut s, &p);
    }
    s
}

const ANCHOR_BINORM: &str = "bilinear norms of the bound-state chain";

fn binorm_records(s: &mut SuiteReport, p: &ModelParams, tol: f64) -> serde_json::Value {
    let tag = model_tag(p);
    let (states, targets) = printed_gram(p);
    let table = gram_with_targets(&states, &targets, DEFAULT_TOL);
    for (i, row) in table.entries.iter().enumerate() {
        for (j, e) in row.iter().enumerate() {
            let id = format!("binorms.{tag}.{i}{j}");
            match (e.value, e.target) {
                (Some(v), Some(t)) => s.push(Record::abs_c(&id, ANCHOR_BINORM, v, t, tol)),
                (None, Some(_)) => s.push(Record::failed(&id, ANCHOR_BINORM, &Error::Convergence(e.note.clone().unwrap_or_default()))),
                _ => {}
            }
        }
    }
    serde_json::to_value(&table).unwrap_or_default()
}

pub fn binorms() -> SuiteReport {
    let mut s = SuiteReport::new("binorms");
    let mut data = serde_json::Map::new();
    for p in [jb(), tl(), th(3)] {
        let t = binorm_records(&mut s, &p, BINORM_TOL);
        data.insert(model_tag(&p), t);
    }
    match rotated_gram(&jb(), 1.0) {
        Ok((states, targets)) => {
            let table = gram_with_targets(&states, &targets, DEFAULT_TOL);
            for (i, row) in table.entries.iter().enumerate() {
                for (j, e) in row.iter().enumerate() {
                    if let (Some(v), Some(t)) = (e.value, e.target) {
                        s.push(Record::abs_c(&format!("binorms.rotated.{i}{j}"), "diagonal resolution of identity for the rotated pair", v, t, BINORM_TOL));
                    }
                }
            }
        }
        Err(e) => s.push(Record::failed("binorms.rotated", "rotated pair", &e)),
    }
    s.data = serde_json::Value::Object(data);
    s
}

const ANCHOR_PACKET: &str = "wave-packet regularization of the self-orthogonal threshold state";

/// Packet table with columns `epsilon, binorm, ev_total, ev_potential, ev_kinetic`.
pub fn packet_table(eps: &[f64], z: C) -> Result<Table> {
    let study = packet_study(eps, z)?;
    let mut t = Table::new(&["epsilon", "binorm", "ev_total", "ev_potential", "ev_kinetic"]);
    for i in 0..eps.len() {
        t.push(vec![eps[i], study.binorm[i].re, study.total[i].re, study.potential[i].re, study.kinetic[i].re]);
    }
    Ok(t)
}

pub fn packet() -> SuiteReport {
    packet_at(I)
}

/// Packet checks at a chosen `z`.
pub fn packet_at(z: C) -> SuiteReport {
    let mut s = SuiteReport::new("packet");
    s.push_result("packet.study", ANCHOR_PACKET, packet_study(&PACKET_EPS, z), |st| {
        let mono = |v: &[C]| v.windows(2).all(|w| w[1].norm() < w[0].norm());
        let shrink = |v: &[C]| v.last().map_or(f64::INFINITY, |l| l.norm()) / v[0].norm();
        vec![
            Record::abs("packet.binorm_slope", ANCHOR_PACKET, st.binorm_slope.unwrap_or(f64::NAN), 0.5, SLOPE_TOL),
            Record::abs("packet.total_slope", ANCHOR_PACKET, st.total_slope.unwrap_or(f64::NAN), 1.5, SLOPE_TOL),
            Record::abs("packet.potential_slope_wide", ANCHOR_PACKET, st.potential_slope.unwrap_or(f64::NAN), 1.5, SLOPE_TOL)
                .diagnostic()
                .with_note("<V>/eps^1.5 still carries sqrt(eps) corrections on [1e-3, 1e-1]; the asymptotic window decides"),
            Record::abs("packet.kinetic_slope_wide", ANCHOR_PACKET, st.kinetic_slope.unwrap_or(f64::NAN), 1.5, SLOPE_TOL).diagnostic(),
            Record::flag("packet.total_ratio_vanishes", "quantum averages of kinetic and potential energies vanish", mono(&st.total_ratio) && shrink(&st.total_ratio) < 0.05),
            Record::flag("packet.potential_ratio_vanishes", "quantum averages of kinetic and potential energies vanish", mono(&st.potential_ratio) && shrink(&st.potential_ratio) < 0.05),
        ]
    });
    s.push_result("packet.asymptotic", ANCHOR_PACKET, packet_study(&PACKET_EPS_ASYMPTOTIC, z), |st| {
        vec![
            Record::abs("packet.potential_slope", ANCHOR_PACKET, st.potential_slope.unwrap_or(f64::NAN), 1.5, SLOPE_TOL),
            Record::abs("packet.kinetic_slope", ANCHOR_PACKET, st.kinetic_slope.unwrap_or(f64::NAN), 1.5, SLOPE_TOL),
        ]
    });
    let p = PacketParams::new(1e-2, z).expect("valid");
    s.push_result("packet.binorm_value", ANCHOR_PACKET, packet_binorm(&p), |b| {
        vec![Record::abs("packet.binorm_value", ANCHOR_PACKET, b.value.re, 0.1 * (PI / 8.0).sqrt(), 1e-6)]
    });
    s.push_result("packet.prefactors", ANCHOR_PACKET, prefactor_reports(z), |reps| {
        let mut out = Vec::new();
        for r in reps {
            let id = format!("packet.{}_prefactor", r.quantity);
            match r.quantity.as_str() {
                "binorm" | "total" => out.push(Record::rel(&id, ANCHOR_PACKET, r.oracle, r.printed, PREFACTOR_REL_TOL)),
                "potential" => {
                    let derived = -(25.0 * PI / 18.0).sqrt();
                    out.push(Record::rel(&id, ANCHOR_PACKET, r.oracle, derived, PREFACTOR_REL_TOL).with_note("target -sqrt(25 pi/18) from the small-eps asymptotics"));
                    out.push(
                        Record::rel(&format!("{id}_printed"), ANCHOR_PACKET, r.printed, r.oracle, PREFACTOR_REL_TOL)
                            .diagnostic()
                            .with_note("printed -sqrt(25 pi/36) disagrees with the quadrature oracle: suspected typo"),
                    );
                }
                _ => out.push(Record::rel(&id, ANCHOR_PACKET, r.oracle, r.printed, PREFACTOR_REL_TOL).diagnostic()),
            }
        }
        out
    });
    let total = packet_ev(&p, Observable::Total).and_then(|t| Ok((t, packet_ev_stencil(&p, Observable::Total)?)));
    s.push_result("packet.total_stencil", ANCHOR_PACKET, total, |(t, st)| {
        vec![Record::abs("packet.total_stencil", ANCHOR_PACKET, (st - t.value).norm() / t.value.norm(), 0.0, 1e-6)
            .with_note("relative difference between the stencil and the factorized h")]
    });
    let kin = packet_ev(&p, Observable::Kinetic).and_then(|k| Ok((k, packet_ev_stencil(&p, Observable::Kinetic)?)));
    s.push_result("packet.kinetic_independent", ANCHOR_PACKET, kin, |(k, st)| {
        vec![Record::abs_c("packet.kinetic_independent", ANCHOR_PACKET, k.value, st, 1e-6)]
    });
    let psi0 = Expansion::single(th(1).bound_states()[0]);
    s.push_result("packet.hermitian_average", "average values with the Hermitian scalar product", average(&psi0, Operator::Potential, Prescription::Hermitian), |a| {
        vec![
            Record::abs("packet.hermitian_denominator", "average values with the Hermitian scalar product", a.denominator.re, PI, 1e-6),
            Record::abs_c("packet.hermitian_potential", "average values with the Hermitian scalar product", a.value.unwrap_or(C::new(f64::NAN, 0.0)), C::new(-0.5, 0.0), 1e-6),
        ]
    });
    let pair = tl().bound_states();
    let e = Expansion::new(pair, vec![C::new(1.0, 0.0), C::new(0.0, 0.0)]);
    s.push_result("packet.binorm_prescription", "binorm prescription with denominator sum |C_r|^2", e.and_then(|e| average(&e, Operator::Identity, Prescription::Binorm)), |a| {
        vec![Record::abs_c("packet.binorm_prescription", "binorm prescription with denominator sum |C_r|^2", a.denominator, C::new(1.0, 0.0), 1e-12)]
    });
    s.push_result("packet.raw_average", "0/0 uncertainty of raw bilinear averages", average(&psi0, Operator::Potential, Prescription::Raw), |a| {
        vec![Record::flag("packet.raw_average", "0/0 uncertainty of raw bilinear averages", a.value.is_none() && a.note.as_deref() == Some("0/0, use packet regularization"))]
    });
    if let Ok(t) = packet_table(&PACKET_EPS, z) {
        s.data = json!({ "packet": t });
    }
    s
}

const ANCHOR_COALESCE: &str = "coalescence of the two-level pair into the Jordan cell";

pub fn coalescence() -> SuiteReport {
    coalescence_at(1.0, I)
}

/// Coalescence checks of the two-level pair with `α`, `z` onto the Jordan cell.
pub fn coalescence_at(alpha: f64, z: C) -> SuiteReport {
    let mut s = SuiteReport::new("coalescence");
    let mut table = Table::new(&["beta", "psi0_minus", "psi0_plus", "psi1"]);
    let psi0 = coalesce_psi0(alpha, z, &DEFAULT_BETAS);
    let psi1 = coalesce_psi1(alpha, z, &DEFAULT_BETAS);
    if let (Ok([m, p]), Ok(q)) = (&psi0, &psi1) {
        for i in 0..DEFAULT_BETAS.len() {
            table.push(vec![DEFAULT_BETAS[i], m.errors[i], p.errors[i], q.errors[i]]);
        }
    }
    s.push_result("coalescence.psi0", ANCHOR_COALESCE, psi0, |series| {
        series
            .iter()
            .enumerate()
            .flat_map(|(i, c)| {
                let tag = if i == 0 { "minus" } else { "plus" };
                [
                    Record::at_least(&format!("coalescence.psi0_{tag}.order"), ANCHOR_COALESCE, c.order.unwrap_or(f64::NAN), ORDER_MIN),
                    Record::flag(&format!("coalescence.psi0_{tag}.monotone"), ANCHOR_COALESCE, c.monotone),
                ]
            })
            .collect()
    });
    s.push_result("coalescence.psi1", ANCHOR_COALESCE, psi1, |c| {
        vec![
            Record::at_least("coalescence.psi1.order", ANCHOR_COALESCE, c.order.unwrap_or(f64::NAN), ORDER_MIN),
            Record::flag("coalescence.psi1.monotone", ANCHOR_COALESCE, c.monotone),
        ]
    });
    for (i, (x, xp)) in [(0.3, -0.7), (0.0, 0.0), (1.0, 2.0), (-1.5, 0.5)].into_iter().enumerate() {
        let id = format!("coalescence.kernel.{i}");
        s.push_result(&id, ANCHOR_COALESCE, coalesce_kernel(alpha, z, &[1e-3], x, xp), |c| {
            vec![Record::at_most(&id, ANCHOR_COALESCE, c.errors[0], KERNEL_LIMIT_TOL).with_note(&format!("x = {x}, x' = {xp}, beta = 1e-3"))]
        });
    }
    s.push_result("coalescence.splitting", ANCHOR_COALESCE, level_splitting(alpha, 0.01), |d| {
        vec![Record::abs("coalescence.splitting", ANCHOR_COALESCE, d, 0.04 * alpha, 1e-12)]
    });
    s.push_result("coalescence.trace", ANCHOR_COALESCE, discrete_trace(alpha, z, &[0.1, 0.01]), |t| {
        let mut v: Vec<Record> = t
            .traces
            .iter()
            .zip(&t.betas)
            .map(|(tr, b)| Record::abs_c(&format!("coalescence.trace.beta{b}"), ANCHOR_COALESCE, *tr, C::new(2.0, 0.0), BINORM_TOL))
            .collect();
        v.push(Record::abs_c("coalescence.trace.limit", ANCHOR_COALESCE, t.limit, C::new(2.0, 0.0), BINORM_TOL));
        v
    });
    s.data = json!({ "sweep": table });
    s
}

const ANCHOR_FULL: &str = "resolution of identity with the full discrete term";
const ANCHOR_PUNCTURED: &str = "regularized resolution of identity near the spectral singularity";

pub fn identity() -> SuiteReport {
    let mut s = SuiteReport::new("identity");
    let battery = Battery::builtin();
    let gaussians = match battery.gaussian_functions() {
        Ok(g) => g,
        Err(e) => {
            s.push(Record::failed("identity.battery", ANCHOR_FULL, &e));
            return s;
        }
    };
    let full = [
        ("jordan_bound.full", jb(), Variant::Full),
        ("jordan_bound.full_diagonal", jb(), Variant::FullDiagonal { kappa: 1.0 }),
        ("two_level.full", tl(), Variant::Full),
        ("threshold_n1.full", th(1), Variant::Full),
        ("continuum_bs.full", cbs(1.0), Variant::Full),
    ];
    for (tag, model, variant) in full {
        let kernel = match KernelFamily::new(model, variant, PUNCTURED_EPS) {
            Ok(k) => k,
            Err(e) => {
                s.push(Record::failed(&format!("identity.{tag}"), ANCHOR_FULL, &e));
                continue;
            }
        };
        for (g, spec) in gaussians.iter().zip(&battery.gaussians) {
            let id = format!("identity.{tag}.sigma{}_c{}", spec.sigma, spec.center);
            s.push_result(&id, ANCHOR_FULL, apply_kernel_multi(&kernel, g, &battery.probes), |vals| {
                let worst = vals.iter().map(|v| v.deviation()).fold(0.0, f64::max);
                vec![Record::at_most(&id, ANCHOR_FULL, worst, FULL_KERNEL_TOL).with_note("largest deviation over the probe points")]
            });
        }
    }
    let probes = [0.0, 0.5];
    for model in [th(1), cbs(1.0)] {
        let tag = model_tag(&model);
        let psi0 = model.bound_states()[0];
        let phi = match TestFunction::state(psi0, 2.0) {
            Ok(f) => f,
            Err(e) => {
                s.push(Record::failed(&format!("identity.{tag}.psi0"), ANCHOR_PUNCTURED, &e));
                continue;
            }
        };
        for variant in [Variant::Reduced, Variant::Extended] {
            let id = format!("identity.{tag}.{}_psi0", variant.name());
            let r = KernelFamily::new(model, variant, PUNCTURED_EPS).and_then(|k| apply_kernel_multi(&k, &phi, &probes));
            s.push_result(&id, ANCHOR_PUNCTURED, r, |vals| {
                let worst = match variant {
                    Variant::Reduced => vals.iter().map(|v| v.value.norm()).fold(0.0, f64::max),
                    _ => vals.iter().map(|v| v.deviation()).fold(0.0, f64::max),
                };
                let note = if variant == Variant::Reduced { "largest |K psi0| (annihilation)" } else { "largest |K psi0 - psi0| (reproduction)" };
                vec![Record::at_most(&id, ANCHOR_PUNCTURED, worst, PUNCTURED_TOL).with_note(note)]
            });
        }
    }
    for (g, spec) in gaussians.iter().zip(&battery.gaussians) {
        for eps in [1e-1, 1e-2, 1e-3] {
            let id = format!("identity.sine_bound.sigma{}_c{}.eps{eps}", spec.sigma, spec.center);
            let anchor = "sqrt(eps) bound on the sine functional";
            s.push_result(&id, anchor, smeared_functional(Functional::Sine, I, g, 0.5, eps), |v| {
                vec![Record::at_most(&id, anchor, v.value.norm(), v.bound.unwrap_or(f64::NAN))]
            });
        }
    }
    s
}

const ANCHOR_GREEN: &str = "Green function built from continuum solutions";
const ANCHOR_POLE: &str = "pole structure of the Green function";
const ANCHOR_T: &str = "transmission coefficients of the transparent potentials";

fn transmission_records(s: &mut SuiteReport, p: &ModelParams, ks: &[f64], tol: f64) {
    let tag = model_tag(p);
    for &k in ks {
        let id = format!("scattering.{tag}.k{k}");
        match transmission(p, k) {
            Ok(t) => {
                s.push(Record::abs_c(&format!("{id}.t"), ANCHOR_T, t.t, t.printed, tol));
                s.push(Record::at_most(&format!("{id}.r"), ANCHOR_T, t.r.norm(), REFLECTION_TOL));
            }
            Err(Error::ExcludedMomentum(_)) if p.kind() == ModelKind::ContinuumBs => {
                s.push(Record::flag(&format!("{id}.excluded"), ANCHOR_T, true).with_note("k = alpha is the embedded eigenvalue; no scattering solution"));
            }
            Err(e) => s.push(Record::failed(&id, ANCHOR_T, &e)),
        }
    }
}

fn green_records(s: &mut SuiteReport, p: &ModelParams) {
    let tag = model_tag(p);
    let lambda = C::new(-0.3, 0.7);
    let id = format!("scattering.{tag}.green");
    let sym = green(p, lambda, 0.4, -1.1).and_then(|a| Ok((a - green(p, lambda, -1.1, 0.4)?).norm()));
    s.push_result(&id, ANCHOR_GREEN, sym, |d| vec![Record::at_most(&format!("{id}.symmetry"), ANCHOR_GREEN, d, 1e-12)]);
    s.push_result(&id, ANCHOR_GREEN, derivative_jump(p, lambda, 0.3), |j| {
        vec![Record::abs_c(&format!("{id}.jump"), ANCHOR_GREEN, j, C::new(1.0, 0.0), 1e-6)
            .with_note("dG/dx(x'-0) - dG/dx(x'+0)")]
    });
    s.push_result(&id, ANCHOR_GREEN, green_residual(p, lambda, 0.3, 0.5, 2.0), |r| {
        vec![Record::at_most(&format!("{id}.residual"), ANCHOR_GREEN, r, 1e-6)]
    });
}

fn pole_records(s: &mut SuiteReport, p: &ModelParams) {
    let tag = model_tag(p);
    if p.kind() == ModelKind::ContinuumBs {
        return;
    }
    for (i, l) in singular_points(p).into_iter().enumerate() {
        let id = format!("scattering.{tag}.pole{i}");
        s.push_result(&id, ANCHOR_POLE, pole_order(p, l, &DEFAULT_RADII, DEFAULT_THETA, 0.3, -0.7), |f| {
            let r = match p.kind() {
                ModelKind::JordanBound => Record::abs(&id, ANCHOR_POLE, f.order, 2.0, POLE_TOL),
                ModelKind::TwoLevel => Record::abs(&id, ANCHOR_POLE, f.order, 1.0, POLE_TOL),
                _ if p.n() == 1 => Record::abs(&id, ANCHOR_POLE, f.slope, -1.5, POLE_TOL).with_note("exponent of |G| as lambda -> 0"),
                _ => Record::abs(&id, ANCHOR_POLE, f.slope, -(p.n() as f64) - 0.5, POLE_TOL).diagnostic(),
            };
            vec![r.with_note(&format!("lambda0 = {l}"))]
        });
    }
}

pub fn scattering() -> SuiteReport {
    let mut s = SuiteReport::new("scattering");
    let mut table = Table::new(&["model", "k", "t_re", "t_im", "abs_t", "abs_r"]);
    for p in [jb(), tl(), th(1)] {
        pole_records(&mut s, &p);
    }
    for (m, p) in [jb(), tl(), th(1), cbs(1.0), cbs(0.7)].iter().enumerate() {
        transmission_records(&mut s, p, &MOMENTA, TRANSMISSION_TOL);
        green_records(&mut s, p);
        for k in (1..=20).map(|j| 0.25 * j as f64) {
            if let Ok(t) = transmission(p, k) {
                table.push(vec![m as f64, k, t.t.re, t.t.im, t.t.norm(), t.r.norm()]);
            }
        }
    }
    let unit = table.rows.iter().map(|r| (r[4] - 1.0).abs()).fold(0.0, f64::max);
    s.push(Record::at_most("scattering.unit_modulus", ANCHOR_T, unit, TRANSMISSION_TOL).with_note("max ||T| - 1| over k = 0.25..5"));
    let refl = table.rows.iter().map(|r| r[5]).fold(0.0, f64::max);
    s.push(Record::at_most("scattering.reflectionless", ANCHOR_T, refl, REFLECTION_TOL).with_note("max |R| over k = 0.25..5"));
    let far = transmission(&jb(), 50.0).and_then(|a| Ok(((a.t - 1.0).norm(), (transmission(&jb(), 5.0)?.t - 1.0).norm())));
    s.push_result("scattering.high_energy", ANCHOR_T, far, |(a, b)| {
        vec![Record::flag("scattering.high_energy", ANCHOR_T, a < b && a < 0.1).with_note("|T(50) - 1| below |T(5) - 1| and 0.1")]
    });
    s.data = json!({ "transmission": table, "models": ["jordan_bound", "two_level", "threshold_n1", "continuum_bs a=1", "continuum_bs a=0.7"] });
    s
}

const ANCHOR_FINITE: &str = "finite-dimensional Jordan-cell biorthogonal algebra";

pub fn finite(opts: &SuiteOptions) -> SuiteReport {
    let mut s = SuiteReport::new("finite");
    s.push_result("finite.random", ANCHOR_FINITE, random_round_trips(opts.seed, FINITE_CASES, FINITE_MAX_DIM, FINITE_TOL), |r| {
        vec![
            Record::abs("finite.random.passed", ANCHOR_FINITE, r.passed as f64, r.cases as f64, 0.0)
                .with_note(&format!("seed {}, largest dimension {}", r.seed, r.max_dim)),
            Record::at_most("finite.random.worst_residual", ANCHOR_FINITE, r.worst, FINITE_TOL),
        ]
    });
    let cell = build(&JordanSpec::single(C::new(-1.0, 0.0), 2)).and_then(|(h, sys)| {
        let form = t_symmetric_form(&sys, &h);
        diagonalize_identity(&sys, &form, opts.kappa)
    });
    s.push_result("finite.mansym", ANCHOR_FINITE, cell, |rot| {
        let (v, rank) = eigenvector(&rot.h, C::new(-1.0, 0.0));
        vec![
            Record::at_most("finite.mansym", "symmetric 2x2 matrix of the rotated cell", max_abs(&(&rot.h - mansym_cell(1.0, opts.kappa))), 1e-14),
            Record::at_most("finite.rotated_identity", "diagonal resolution of identity", max_abs(&(&rot.identity - nalgebra::DMatrix::identity(2, 2))), 1e-12),
            Record::abs("finite.rotated_rank", "the rotated cell is not diagonalizable", rank as f64, 1.0, 0.0),
            Record::at_most("finite.zero_norm_eigenvector", "single eigenvector with zero bilinear norm", bilinear(&v, &v).norm(), 1e-12),
        ]
    });
    for p in 1..=3usize {
        let id = format!("finite.binorm_structure.p{p}");
        let anchor = "vanishing bilinear pairings inside one cell";
        let r = binorm_structure(p).and_then(|pat| {
            let (_, chain) = symmetric_realization(C::new(0.3, -0.2), p, opts.kappa)?;
            let gram = chain.transpose() * &chain;
            Ok((pat, matches_structure(&gram, 1e-10)?))
        });
        s.push_result(&id, anchor, r, |(pat, ok)| {
            let anti = pat.iter().enumerate().all(|(i, row)| row[p - 1 - i] == Pairing::AntiDiagonal);
            vec![Record::flag(&id, anchor, ok && anti)]
        });
    }
    s
}

/// Checks for one model at the given parameters: chains, binorm table,
/// transmission and pole orders.  `tol` governs the binorm table.
pub fn model_suite(p: &ModelParams, tol: f64) -> SuiteReport {
    let mut s = SuiteReport::new(&format!("model.{}", model_tag(p)));
    chain_records(&mut s, p);
    let table = binorm_records(&mut s, p, tol);
    if p.kind() == ModelKind::JordanBound {
        if let Ok((states, targets)) = rotated_gram(p, 1.0) {
            let t = gram_with_targets(&states, &targets, DEFAULT_TOL);
            for (i, row) in t.entries.iter().enumerate() {
                for (j, e) in row.iter().enumerate() {
                    if let (Some(v), Some(tg)) = (e.value, e.target) {
                        s.push(Record::abs_c(&format!("binorms.rotated.{i}{j}"), "diagonal resolution of identity for the rotated pair", v, tg, tol));
                    }
                }
            }
        }
    }
    transmission_records(&mut s, p, &MOMENTA, TRANSMISSION_TOL);
    green_records(&mut s, p);
    pole_records(&mut s, p);
    s.data = json!({ "binorm_table": table });
    s
}

/// Full kernel of one model on the Gaussian battery, plus the Reduced and
/// Extended kernels on `ψ₀` for the threshold models at width `eps`.
pub fn identity_model(p: &ModelParams, tol: f64, eps: f64) -> SuiteReport {
    let mut s = SuiteReport::new(&format!("identity.{}", model_tag(p)));
    let battery = Battery::builtin();
    let tag = model_tag(p);
    let kernel = KernelFamily::new(*p, Variant::Full, eps);
    let gaussians = battery.gaussian_functions();
    match (kernel, gaussians) {
        (Ok(k), Ok(gs)) => {
            for (g, spec) in gs.iter().zip(&battery.gaussians) {
                let id = format!("identity.{tag}.full.sigma{}_c{}", spec.sigma, spec.center);
                s.push_result(&id, ANCHOR_FULL, apply_kernel_multi(&k, g, &battery.probes), |vals| {
                    let worst = vals.iter().map(|v| v.deviation()).fold(0.0, f64::max);
                    vec![Record::at_most(&id, ANCHOR_FULL, worst, tol).with_note("largest deviation over the probe points")]
                });
            }
        }
        (Err(e), _) | (_, Err(e)) => s.push(Record::failed(&format!("identity.{tag}.full"), ANCHOR_FULL, &e)),
    }
    let threshold_like = matches!(p.kind(), ModelKind::Threshold | ModelKind::ContinuumBs);
    if threshold_like {
        let psi0 = p.bound_states()[0];
        for variant in [Variant::Reduced, Variant::Extended] {
            let id = format!("identity.{tag}.{}_psi0", variant.name());
            let r = TestFunction::state(psi0, 2.0)
                .and_then(|phi| KernelFamily::new(*p, variant, eps).and_then(|k| apply_kernel_multi(&k, &phi, &[0.0, 0.5])));
            s.push_result(&id, ANCHOR_PUNCTURED, r, |vals| {
                let worst = match variant {
                    Variant::Reduced => vals.iter().map(|v| v.value.norm()).fold(0.0, f64::max),
                    _ => vals.iter().map(|v| v.deviation()).fold(0.0, f64::max),
                };
                vec![Record::at_most(&id, ANCHOR_PUNCTURED, worst, PUNCTURED_TOL).with_note(&format!("eps = {eps}"))]
            });
        }
    }
    s
}

/// Transmission at `ks`, Green-function checks and pole orders for one model.
pub fn scatter_model(p: &ModelParams, ks: &[f64], tol: f64) -> SuiteReport {
    let mut s = SuiteReport::new(&format!("scattering.{}", model_tag(p)));
    let mut table = Table::new(&["k", "t_re", "t_im", "printed_re", "printed_im", "abs_t", "abs_r"]);
    for &k in ks {
        if let Ok(t) = transmission(p, k) {
            table.push(vec![k, t.t.re, t.t.im, t.printed.re, t.printed.im, t.t.norm(), t.r.norm()]);
        }
    }
    transmission_records(&mut s, p, ks, tol);
    green_records(&mut s, p);
    pole_records(&mut s, p);
    s.data = json!({ "transmission": table });
    s
}
