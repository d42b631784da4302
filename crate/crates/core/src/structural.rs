//! Structural interaction criteria.
//!
//! Decides, from a declared [`MechanismShape`], whether pairs (or the
//! triple) of pathways interact structurally: total-spurious, direct-
//! indirect, direct-spurious, indirect-spurious, and the three-way
//! interaction. Each granular criterion is implemented twice — as the
//! decision-tree walk and as the clause-list definition — and the two are
//! asserted to agree on every fixture.
//!
//! The total-spurious criterion asks about the *reduced-form* outcome
//! mechanism: mediators are substituted term-by-term (linear occurrences
//! expand against the mediator's own additive terms; non-linear occurrences
//! collapse the mediator's full argument set into the term), since the
//! total effect runs through both the direct and the mediated paths.
//!
//! Verdicts are sound relative to the declared shape. A shape that declares
//! a coupled term where the true mechanism is additive gets a conservative
//! "interaction" verdict; a shape that hides a coupling gets a wrong
//! "no-interaction" verdict — the analyzer never inspects data.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scm::spec::Role;
use crate::shape::{MechanismShape, Scale, ShapeVar};

/// The five structural criteria.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Criterion {
    TeSe,
    DeIe,
    DeSe,
    IeSe,
    DeIeSe,
}

impl Criterion {
    pub const ALL: [Criterion; 5] =
        [Criterion::TeSe, Criterion::DeIe, Criterion::DeSe, Criterion::IeSe, Criterion::DeIeSe];

    /// Display name on a scale (`Str-TE-SE`, `Str-TLR-SLR`, ...).
    pub fn label(self, scale: Scale) -> String {
        let (t, d, i, s) = match scale {
            Scale::Mean => ("TE", "DE", "IE", "SE"),
            Scale::LogRisk => ("TLR", "DLR", "ILR", "SLR"),
            Scale::LogOdds => ("TLO", "DLO", "ILO", "SLO"),
        };
        match self {
            Criterion::TeSe => format!("Str-{t}-{s}"),
            Criterion::DeIe => format!("Str-{d}-{i}"),
            Criterion::DeSe => format!("Str-{d}-{s}"),
            Criterion::IeSe => format!("Str-{i}-{s}"),
            Criterion::DeIeSe => format!("Str-{d}-{i}-{s}"),
        }
    }

    /// The effect measure admissible for this criterion.
    pub fn effect(self) -> crate::effects::EffectKind {
        use crate::effects::EffectKind;
        match self {
            Criterion::TeSe => EffectKind::TeSe,
            Criterion::DeIe => EffectKind::DeIe,
            Criterion::DeSe => EffectKind::DeSe,
            Criterion::IeSe => EffectKind::IeSe,
            Criterion::DeIeSe => EffectKind::DeIeSe,
        }
    }
}

/// Interaction / no-interaction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    NoInteraction,
    Interaction,
}

/// A criterion decision plus the branch that fired.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructuralVerdict {
    pub criterion: Criterion,
    pub scale: Scale,
    pub verdict: Verdict,
    /// Which tree branch or definition clause decided it.
    pub witness: String,
}

fn no(criterion: Criterion, scale: Scale, witness: &str) -> StructuralVerdict {
    StructuralVerdict { criterion, scale, verdict: Verdict::NoInteraction, witness: witness.into() }
}

fn yes(criterion: Criterion, scale: Scale, witness: &str) -> StructuralVerdict {
    StructuralVerdict { criterion, scale, verdict: Verdict::Interaction, witness: witness.into() }
}

/// Analysis context: variable names by role plus derived edge facts.
struct Ctx<'a> {
    shape: &'a MechanismShape,
    z_names: Vec<&'a str>,
    w_names: Vec<&'a str>,
    x: &'a ShapeVar,
    y: &'a ShapeVar,
}

impl<'a> Ctx<'a> {
    fn new(shape: &'a MechanismShape) -> Ctx<'a> {
        Ctx {
            shape,
            z_names: shape.names_with_role(Role::Z),
            w_names: shape.names_with_role(Role::W),
            x: shape.x(),
            y: shape.y(),
        }
    }

    /// Confounders with a directed path into the treatment.
    fn z_into_x(&self) -> Vec<&'a str> {
        self.z_names
            .iter()
            .copied()
            .filter(|z| self.shape.depends_on(&self.x.name, z))
            .collect()
    }

    /// Mediators the treatment feeds into.
    fn w_from_x(&self) -> Vec<&'a str> {
        self.w_names
            .iter()
            .copied()
            .filter(|w| self.shape.depends_on(w, &self.x.name))
            .collect()
    }

    /// Mediators fed by some confounder.
    fn w_from_z(&self) -> Vec<&'a str> {
        self.w_names
            .iter()
            .copied()
            .filter(|w| self.z_names.iter().any(|z| self.shape.depends_on(w, z)))
            .collect()
    }

    fn is_z(&self, name: &str) -> bool {
        self.z_names.contains(&name)
    }

    fn is_w(&self, name: &str) -> bool {
        self.w_names.contains(&name)
    }

    /// Some mediator mechanism has a term coupling X with a confounder.
    fn fw_couples_x_z(&self) -> Option<String> {
        for w in &self.w_names {
            let wv = self.shape.var(w).expect("role-listed");
            for t in &wv.terms {
                if t.args.contains(&self.x.name) && t.args.iter().any(|a| self.is_z(a)) {
                    return Some(format!("term {:?} in f_{w} couples X and Z", t.args));
                }
            }
        }
        None
    }
}

/// Reduced-form terms of the outcome mechanism: mediators substituted away.
/// Each entry is the coupled argument set of one reduced additive term.
fn reduced_outcome_terms(ctx: &Ctx) -> Vec<BTreeSet<String>> {
    let mut out = Vec::new();
    for t in &ctx.y.terms {
        reduce_term(ctx, &t.args, &t.nonlinear, &mut out);
    }
    out
}

fn reduce_term(
    ctx: &Ctx,
    args: &BTreeSet<String>,
    nonlinear: &BTreeSet<String>,
    out: &mut Vec<BTreeSet<String>>,
) {
    let ws: Vec<&String> = args.iter().filter(|a| ctx.is_w(a)).collect();
    if ws.is_empty() {
        out.push(args.clone());
        return;
    }
    // A term with several mediators is a product of mediator factors: a
    // single linear mediator expands additively against its own terms; any
    // other configuration entangles the full ancestry of every mediator in
    // the term.
    if ws.len() == 1 && !nonlinear.contains(ws[0].as_str()) {
        let w = ws[0].clone();
        let rest: BTreeSet<String> = args.iter().filter(|a| **a != w).cloned().collect();
        let wv = ctx.shape.var(&w).expect("mediator exists");
        if wv.terms.is_empty() {
            out.push(rest);
            return;
        }
        for wt in &wv.terms {
            let mut piece = rest.clone();
            for a in &wt.args {
                piece.insert(a.clone());
            }
            // The mediator's own terms may reference further mediators.
            let piece_nl: BTreeSet<String> = wt.nonlinear.clone();
            reduce_term(ctx, &piece, &piece_nl, out);
        }
    } else {
        let mut collapsed: BTreeSet<String> =
            args.iter().filter(|a| !ctx.is_w(a)).cloned().collect();
        let mut stack: Vec<String> = ws.into_iter().cloned().collect();
        while let Some(w) = stack.pop() {
            let wv = ctx.shape.var(&w).expect("mediator exists");
            for a in &wv.args {
                if ctx.is_w(a) {
                    if !collapsed.contains(a) {
                        stack.push(a.clone());
                    }
                } else {
                    collapsed.insert(a.clone());
                }
            }
        }
        out.push(collapsed);
    }
}

/// Str-TE-SE: no interaction of total and spurious effects iff the
/// reduced-form outcome mechanism is additive in (X | Z) or there is no
/// back-door path into X.
pub fn check_te_se(shape: &MechanismShape, scale: Scale) -> Result<StructuralVerdict> {
    check_link(shape, scale)?;
    let ctx = Ctx::new(shape);
    let zx = ctx.z_into_x();
    if zx.is_empty() {
        return Ok(no(Criterion::TeSe, scale, "no back-door path: Z is not an input of f_x"));
    }
    for t in reduced_outcome_terms(&ctx) {
        if t.contains(&ctx.x.name) {
            if let Some(z) = zx.iter().find(|z| t.contains(**z)) {
                return Ok(yes(
                    Criterion::TeSe,
                    scale,
                    &format!("reduced f_y couples X and {z} while Z drives X"),
                ));
            }
        }
    }
    Ok(no(Criterion::TeSe, scale, "f_y additive in (X | Z): no term couples X with a confounder"))
}

/// Str-DE-IE: no interaction of direct and indirect effects iff f_y has no
/// term coupling X with an X-responsive mediator, or X feeds no mediator.
pub fn check_de_ie(shape: &MechanismShape, scale: Scale) -> Result<StructuralVerdict> {
    check_link(shape, scale)?;
    let ctx = Ctx::new(shape);
    let wx = ctx.w_from_x();
    if wx.is_empty() {
        return Ok(no(Criterion::DeIe, scale, "no indirect path: X is not an input of f_w"));
    }
    for t in &ctx.y.terms {
        if t.args.contains(&ctx.x.name) {
            if let Some(w) = wx.iter().find(|w| t.args.contains(**w)) {
                return Ok(yes(
                    Criterion::DeIe,
                    scale,
                    &format!("f_y couples X and {w} while X drives {w}"),
                ));
            }
        }
    }
    Ok(no(Criterion::DeIe, scale, "f_y additive in (X | W): no term couples X with a mediator"))
}

/// Walks the direct-spurious decision tree.
fn de_se_tree(ctx: &Ctx, scale: Scale) -> StructuralVerdict {
    let c = Criterion::DeSe;
    if ctx.z_into_x().is_empty() {
        return no(c, scale, "no Z -> X edge");
    }
    let couples_x_and = |pred: &dyn Fn(&str) -> bool| -> Option<String> {
        for t in &ctx.y.terms {
            if t.args.contains(&ctx.x.name) {
                if let Some(v) = t.args.iter().find(|a| pred(a)) {
                    return Some(v.clone());
                }
            }
        }
        None
    };
    if ctx.w_from_z().is_empty() {
        // No Z -> W edge: only an f_y(X, Z) term transmits the interaction.
        return match couples_x_and(&|a| ctx.is_z(a)) {
            Some(z) => yes(c, scale, &format!("f_y couples X and {z}")),
            None => no(c, scale, "no Z -> W edge and no f_y term couples X and Z"),
        };
    }
    match couples_x_and(&|a| ctx.is_z(a) || ctx.is_w(a)) {
        Some(v) => yes(c, scale, &format!("f_y couples X and {v}")),
        None => no(c, scale, "no f_y term couples X with Z or W"),
    }
}

/// Direct-spurious clause list.
fn de_se_clauses(ctx: &Ctx, scale: Scale) -> StructuralVerdict {
    let c = Criterion::DeSe;
    if ctx.z_into_x().is_empty() {
        return no(c, scale, "clause (i): Z is not an argument of f_x");
    }
    let no_xz = ctx
        .y
        .terms
        .iter()
        .all(|t| !(t.args.contains(&ctx.x.name) && t.args.iter().any(|a| ctx.is_z(a))));
    let no_xw = ctx
        .y
        .terms
        .iter()
        .all(|t| !(t.args.contains(&ctx.x.name) && t.args.iter().any(|a| ctx.is_w(a))));
    if ctx.w_from_z().is_empty() && no_xz {
        return no(c, scale, "clause (ii): Z not an argument of f_w and f_y = f1(X,W) + f2(Z,W)");
    }
    if no_xz && no_xw {
        return no(c, scale, "clause (iii): f_y = f1(X) + f2(Z,W)");
    }
    yes(c, scale, "no clause of the direct-spurious definition holds")
}

/// True if every outcome term that reads mediators has the W-linear form
/// `w · g(X)` (single mediator, linear, cofactor free of Z and other W).
fn fy_w_terms_linear_with_x_cofactor(ctx: &Ctx) -> bool {
    ctx.y.terms.iter().all(|t| {
        let ws: Vec<&String> = t.args.iter().filter(|a| ctx.is_w(a)).collect();
        if ws.is_empty() {
            return true;
        }
        if ws.len() > 1 {
            return false;
        }
        let w = ws[0];
        t.linear_in(w)
            && t.args
                .iter()
                .all(|a| a == w || a == &ctx.x.name || (!ctx.is_z(a) && !ctx.is_w(a)))
    })
}

/// Leaf question of the indirect-spurious tree: some outcome term uses a
/// mediator non-linearly (or entangles several mediators).
fn fy_nonlinear_in_w(ctx: &Ctx) -> Option<String> {
    for t in &ctx.y.terms {
        let ws: Vec<&String> = t.args.iter().filter(|a| ctx.is_w(a)).collect();
        if ws.len() > 1 {
            return Some(format!("term {:?} entangles several mediators", t.args));
        }
        if let Some(w) = ws.first() {
            if !t.linear_in(w) {
                return Some(format!("f_y non-linear in {w}"));
            }
        }
    }
    None
}

fn ie_se_tree(ctx: &Ctx, scale: Scale) -> StructuralVerdict {
    let c = Criterion::IeSe;
    if ctx.z_into_x().is_empty() {
        return no(c, scale, "no Z -> X edge");
    }
    if ctx.w_from_x().is_empty() {
        return no(c, scale, "no X -> W edge");
    }
    if let Some(witness) = ctx.fw_couples_x_z() {
        // X and Z interact inside a mediator; a W -> Y edge transmits it.
        return if ctx.w_names.iter().any(|w| ctx.y.args.contains(*w)) {
            yes(c, scale, &witness)
        } else {
            no(c, scale, "W is not an argument of f_y")
        };
    }
    for t in &ctx.y.terms {
        if t.args.iter().any(|a| ctx.is_z(a)) && t.args.iter().any(|a| ctx.is_w(a)) {
            return yes(c, scale, &format!("f_y term {:?} couples Z and W", t.args));
        }
    }
    match fy_nonlinear_in_w(ctx) {
        Some(witness) => yes(c, scale, &witness),
        None => no(c, scale, "f_w additive in (X | Z) and f_y linear in W"),
    }
}

fn ie_se_clauses(ctx: &Ctx, scale: Scale) -> StructuralVerdict {
    let c = Criterion::IeSe;
    if ctx.z_into_x().is_empty() {
        return no(c, scale, "clause (i): Z is not an argument of f_x");
    }
    if ctx.w_from_x().is_empty() {
        return no(c, scale, "clause (ii): X is not an argument of f_w");
    }
    if !ctx.w_names.iter().any(|w| ctx.y.args.contains(*w)) {
        return no(c, scale, "clause (iv): W is not an argument of f_y");
    }
    let fw_additive = ctx.fw_couples_x_z().is_none();
    // Clause (iii): f_y = f1(X, Z) + sum of w-linear terms with X-only
    // cofactors. Any finite sum of W-linear terms qualifies.
    let fy_ok = fy_w_terms_linear_with_x_cofactor(ctx);
    if fw_additive && fy_ok {
        return no(c, scale, "clause (iii): f_w = f1(X) + f2(Z) and f_y = f1(X,Z) + W*f2(X)");
    }
    yes(c, scale, "no clause of the indirect-spurious definition holds")
}

fn de_ie_se_tree(ctx: &Ctx, scale: Scale) -> StructuralVerdict {
    let c = Criterion::DeIeSe;
    if ctx.z_into_x().is_empty() {
        return no(c, scale, "no Z -> X edge");
    }
    if ctx.w_from_x().is_empty() {
        return no(c, scale, "no X -> W edge");
    }
    if let Some(witness) = ctx.fw_couples_x_z() {
        for t in &ctx.y.terms {
            if t.args.contains(&ctx.x.name) && t.args.iter().any(|a| ctx.is_w(a)) {
                return yes(c, scale, &format!("{witness}; f_y couples X and W"));
            }
        }
        return no(c, scale, "f_w couples X and Z but no f_y term couples X and W");
    }
    for t in &ctx.y.terms {
        if t.args.contains(&ctx.x.name)
            && t.args.iter().any(|a| ctx.is_z(a))
            && t.args.iter().any(|a| ctx.is_w(a))
        {
            return yes(c, scale, &format!("three-way f_y term {:?}", t.args));
        }
    }
    // Only (X, W) terms remain in question: non-linear in W, or entangling
    // several mediators, transmits the three-way interaction.
    for t in &ctx.y.terms {
        if !t.args.contains(&ctx.x.name) {
            continue;
        }
        let ws: Vec<&String> = t.args.iter().filter(|a| ctx.is_w(a)).collect();
        if ws.len() > 1 {
            return yes(c, scale, &format!("term {:?} entangles X with several mediators", t.args));
        }
        if let Some(w) = ws.first() {
            if !t.linear_in(w) {
                return yes(c, scale, &format!("f_y(X, {w}) term non-linear in {w}"));
            }
        }
    }
    no(c, scale, "f_w additive and every X-W coupling is W-linear")
}

fn de_ie_se_clauses(ctx: &Ctx, scale: Scale) -> StructuralVerdict {
    let c = Criterion::DeIeSe;
    if ctx.z_into_x().is_empty() {
        return no(c, scale, "clause (i): Z is not an argument of f_x");
    }
    if ctx.w_from_x().is_empty() {
        return no(c, scale, "clause (ii): X is not an argument of f_w");
    }
    // Clause (iv): f_y = f1(X, Z) + f2(Z, W), i.e. no term couples X and W.
    let no_xw = ctx
        .y
        .terms
        .iter()
        .all(|t| !(t.args.contains(&ctx.x.name) && t.args.iter().any(|a| ctx.is_w(a))));
    if no_xw {
        return no(c, scale, "clause (iv): f_y = f1(X,Z) + f2(Z,W)");
    }
    // Clause (iii): f_w additive in (X | Z) and
    // f_y = f1(X,Z) + W*f2(X) + f3(Z,W).
    if ctx.fw_couples_x_z().is_none() {
        let fy_ok = ctx.y.terms.iter().all(|t| {
            let ws: Vec<&String> = t.args.iter().filter(|a| ctx.is_w(a)).collect();
            if ws.is_empty() || !t.args.contains(&ctx.x.name) {
                return true; // part of f1(X, Z, U) or f3(Z, W, U); any shape
            }
            // X-W coupling: must be W-linear with X-only cofactor.
            ws.len() == 1
                && t.linear_in(ws[0])
                && t.args.iter().all(|a| a == ws[0] || a == &ctx.x.name)
        });
        if fy_ok {
            return no(
                c,
                scale,
                "clause (iii): f_w = f1(X) + f2(Z) and f_y = f1(X,Z) + W*f2(X) + f3(Z,W)",
            );
        }
    }
    yes(c, scale, "no clause of the three-way definition holds")
}

fn check_link(shape: &MechanismShape, scale: Scale) -> Result<()> {
    let y = shape.y();
    if y.link != scale.link() {
        return Err(Error::Unsupported(format!(
            "shape `{}` declares its outcome terms on the {:?} link, cannot answer {} questions",
            shape.name,
            y.link,
            scale.label()
        )));
    }
    Ok(())
}

/// Direct-spurious, indirect-spurious, or three-way criterion via the
/// decision trees.
pub fn check_granular(
    shape: &MechanismShape,
    criterion: Criterion,
    scale: Scale,
) -> Result<StructuralVerdict> {
    check_link(shape, scale)?;
    let ctx = Ctx::new(shape);
    Ok(match criterion {
        Criterion::DeSe => de_se_tree(&ctx, scale),
        Criterion::IeSe => ie_se_tree(&ctx, scale),
        Criterion::DeIeSe => de_ie_se_tree(&ctx, scale),
        Criterion::TeSe => return check_te_se(shape, scale),
        Criterion::DeIe => return check_de_ie(shape, scale),
    })
}

/// Same granular criteria via the clause lists of their definitions.
/// Exposed so the tree/definition agreement can be property-tested.
pub fn check_granular_clauses(
    shape: &MechanismShape,
    criterion: Criterion,
    scale: Scale,
) -> Result<StructuralVerdict> {
    check_link(shape, scale)?;
    let ctx = Ctx::new(shape);
    Ok(match criterion {
        Criterion::DeSe => de_se_clauses(&ctx, scale),
        Criterion::IeSe => ie_se_clauses(&ctx, scale),
        Criterion::DeIeSe => de_ie_se_clauses(&ctx, scale),
        Criterion::TeSe => return check_te_se(shape, scale),
        Criterion::DeIe => return check_de_ie(shape, scale),
    })
}

/// All five criteria on the requested scale.
pub fn check_all(shape: &MechanismShape, scale: Scale) -> Result<Vec<StructuralVerdict>> {
    Criterion::ALL.iter().map(|&c| check_granular(shape, c, scale)).collect()
}
