//! Optimal control problems assembled from MPC primitives.
//!
//! A primitive is a bundle of *atoms*. Each atom wraps one [`PrimitiveModel`]
//! (its own state components, dynamics, stage cost and constraint functions)
//! together with the names it reads from the surrounding state. Composition
//! concatenates atoms and state schemas; evaluation resolves every name to an
//! index once, when an [`Ocp`] is built, so the inner loops only do indexed
//! slice reads.
//!
//! Stage costs are summed in atom order, which is the left-fold order of the
//! composition. Splitting an atom list at any point therefore splits the cost
//! into two partial sums whose sum reproduces the composed cost exactly.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Separator between a namespace prefix and a state name (`prev/x`).
pub const NAMESPACE_SEP: char = '/';

/// Upper bound on inequality or equality components contributed by one atom.
pub const MAX_ATOM_CONSTRAINTS: usize = 16;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ControlInput {
    /// Longitudinal acceleration [m/s²].
    pub a: f64,
    /// Front-tire steering angle [rad].
    pub delta: f64,
}

impl ControlInput {
    pub const ZERO: ControlInput = ControlInput { a: 0.0, delta: 0.0 };

    pub fn new(a: f64, delta: f64) -> Self {
        Self { a, delta }
    }

    pub fn is_finite(&self) -> bool {
        self.a.is_finite() && self.delta.is_finite()
    }
}

/// Box-shaped input space `U = [a_min, a_max] × [delta_min, delta_max]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputBox {
    pub a_min: f64,
    pub a_max: f64,
    pub delta_min: f64,
    pub delta_max: f64,
}

impl InputBox {
    pub fn new(a_min: f64, a_max: f64, delta_min: f64, delta_max: f64) -> Result<Self> {
        let b = Self { a_min, a_max, delta_min, delta_max };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = [self.a_min, self.a_max, self.delta_min, self.delta_max].iter().all(|v| v.is_finite())
            && self.a_min < self.a_max
            && self.delta_min < self.delta_max;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("input box {self:?}")))
        }
    }

    pub fn clamp(&self, u: ControlInput) -> ControlInput {
        ControlInput { a: u.a.clamp(self.a_min, self.a_max), delta: u.delta.clamp(self.delta_min, self.delta_max) }
    }

    pub fn contains(&self, u: ControlInput) -> bool {
        (self.a_min..=self.a_max).contains(&u.a) && (self.delta_min..=self.delta_max).contains(&u.delta)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StateComponent {
    pub name: String,
    pub unit: String,
}

impl StateComponent {
    pub fn new(name: impl Into<String>, unit: impl Into<String>) -> Self {
        Self { name: name.into(), unit: unit.into() }
    }
}

/// Ordered, shared list of state components.
pub type Schema = Arc<[StateComponent]>;

/// Strips every namespace prefix, `prev/target/x` -> `x`.
pub fn base_name(name: &str) -> &str {
    name.rsplit(NAMESPACE_SEP).next().unwrap_or(name)
}

/// Anything that can report the measured value of a (base) state name.
pub trait StateSource {
    fn value(&self, name: &str) -> Option<f64>;
}

impl StateSource for [(&str, f64)] {
    fn value(&self, name: &str) -> Option<f64> {
        self.iter().find(|(n, _)| *n == name).map(|(_, v)| *v)
    }
}

impl<const K: usize> StateSource for [(&str, f64); K] {
    fn value(&self, name: &str) -> Option<f64> {
        self.as_slice().value(name)
    }
}

/// A state instance tagged with its schema.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    schema: Schema,
    values: Vec<f64>,
}

impl StateVector {
    pub fn new(schema: Schema, values: Vec<f64>) -> Result<Self> {
        if schema.len() != values.len() {
            return Err(Error::SchemaMismatch(format!("{} values for {} components", values.len(), schema.len())));
        }
        Ok(Self { schema, values })
    }

    /// Convenience constructor with unit-less components.
    pub fn from_pairs(pairs: &[(&str, f64)]) -> Self {
        let schema: Schema = pairs.iter().map(|(n, _)| StateComponent::new(*n, "")).collect();
        Self { schema, values: pairs.iter().map(|(_, v)| *v).collect() }
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.schema.iter().position(|c| c.name == name).map(|i| self.values[i])
    }
}

impl StateSource for StateVector {
    fn value(&self, name: &str) -> Option<f64> {
        self.get(name)
    }
}

/// Evaluation context of one prediction stage.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Stage {
    pub k: usize,
    /// Absolute time of the stage, `t0 + k·dt`.
    pub time: f64,
    pub dt: f64,
    pub input: ControlInput,
    /// Input of stage `k-1` (the previously applied input at `k = 0`).
    pub prev_input: ControlInput,
}

impl Stage {
    pub fn new(k: usize, time: f64, dt: f64, input: ControlInput, prev_input: ControlInput) -> Self {
        Self { k, time, dt, input, prev_input }
    }

    /// Finite-difference input rate `(u_k - u_{k-1}) / dt`.
    pub fn input_rate(&self) -> ControlInput {
        ControlInput {
            a: (self.input.a - self.prev_input.a) / self.dt,
            delta: (self.input.delta - self.prev_input.delta) / self.dt,
        }
    }
}

/// Schema-checked view of the state for one atom.
pub struct Slots<'a> {
    x: &'a [f64],
    own: &'a [usize],
    reads: &'a [usize],
}

impl<'a> Slots<'a> {
    /// `i`-th component of the atom's own state.
    #[inline]
    pub fn own(&self, i: usize) -> f64 {
        self.x[self.own[i]]
    }

    /// `i`-th declared read.
    #[inline]
    pub fn read(&self, i: usize) -> f64 {
        self.x[self.reads[i]]
    }
}

/// Write target for an atom's own state derivative.
pub struct Derivative<'a> {
    out: &'a mut [f64],
    own: &'a [usize],
}

impl<'a> Derivative<'a> {
    #[inline]
    pub fn set(&mut self, i: usize, value: f64) {
        self.out[self.own[i]] = value;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PrimitiveKind {
    EgoDynamics,
    LateralTask,
    LongitudinalTask,
    Safety,
}

/// The functions of one MPC primitive `(X, f, J, g, h)`.
///
/// Own state names are local to the model; reads name components of the
/// composed state (typically the ego state) and are resolved at build time.
pub trait PrimitiveModel: Send + Sync + fmt::Debug {
    fn states(&self) -> Vec<StateComponent> {
        Vec::new()
    }

    /// Initial value of the own state used when nothing is measured.
    fn default_state(&self) -> Vec<f64> {
        vec![0.0; self.states().len()]
    }

    fn reads(&self) -> &[&'static str] {
        &[]
    }

    /// Number of penalty terms in the stage cost.
    fn cost_terms(&self) -> usize {
        0
    }

    fn ineq_labels(&self) -> Vec<String> {
        Vec::new()
    }

    fn eq_labels(&self) -> Vec<String> {
        Vec::new()
    }

    fn derivative(&self, _s: &Slots, _u: ControlInput, _dx: &mut Derivative) {}

    fn stage_cost(&self, _s: &Slots, _stage: &Stage) -> f64 {
        0.0
    }

    fn ineq(&self, _s: &Slots, _stage: &Stage, _out: &mut [f64]) {}

    fn eq(&self, _s: &Slots, _stage: &Stage, _out: &mut [f64]) {}
}

#[derive(Clone, Debug)]
pub(crate) struct Atom {
    model: Arc<dyn PrimitiveModel>,
    primitive: String,
    kind: PrimitiveKind,
    namespace: String,
    own_names: Vec<String>,
    read_names: Vec<String>,
    ineq_labels: Vec<String>,
    eq_labels: Vec<String>,
}

impl Atom {
    fn new(primitive: &str, kind: PrimitiveKind, model: Arc<dyn PrimitiveModel>) -> Result<Self> {
        let own_names = model.states().into_iter().map(|c| c.name).collect();
        let read_names = model.reads().iter().map(|s| s.to_string()).collect();
        let ineq_labels = model.ineq_labels();
        let eq_labels = model.eq_labels();
        if ineq_labels.len() > MAX_ATOM_CONSTRAINTS || eq_labels.len() > MAX_ATOM_CONSTRAINTS {
            return Err(Error::InvalidParameter(format!(
                "primitive {primitive} has more than {MAX_ATOM_CONSTRAINTS} constraints"
            )));
        }
        Ok(Self {
            model,
            primitive: primitive.to_string(),
            kind,
            namespace: String::new(),
            own_names,
            read_names,
            ineq_labels,
            eq_labels,
        })
    }

    fn prefixed(&self, prefix: &str) -> Self {
        let mut a = self.clone();
        a.namespace = format!("{prefix}{}", self.namespace);
        a
    }

    fn qualified(&self, name: &str) -> String {
        format!("{}{}", self.namespace, name)
    }

    pub(crate) fn n_g(&self) -> usize {
        self.ineq_labels.len()
    }

    pub(crate) fn n_h(&self) -> usize {
        self.eq_labels.len()
    }

    fn label(&self, local: &str) -> String {
        format!("{}{}.{}", self.namespace, self.primitive, local)
    }
}

/// An MPC primitive, possibly the composition of several.
#[derive(Clone, Debug)]
pub struct MpcPrimitive {
    name: String,
    kind: PrimitiveKind,
    input_space: InputBox,
    schema: Vec<StateComponent>,
    atoms: Vec<Atom>,
}

impl MpcPrimitive {
    pub fn new(
        name: impl Into<String>,
        kind: PrimitiveKind,
        input_space: InputBox,
        model: impl PrimitiveModel + 'static,
    ) -> Result<Self> {
        let name = name.into();
        let model: Arc<dyn PrimitiveModel> = Arc::new(model);
        let schema = model.states();
        let mut seen = std::collections::BTreeSet::new();
        for c in &schema {
            if !seen.insert(c.name.as_str()) {
                return Err(Error::DuplicateStateName(c.name.clone()));
            }
        }
        let atom = Atom::new(&name, kind, model)?;
        Ok(Self { name, kind, input_space, schema, atoms: vec![atom] })
    }

    /// The identity element of [`compose`]: no state, zero cost, no constraints.
    pub fn empty(input_space: InputBox) -> Self {
        #[derive(Debug)]
        struct Empty;
        impl PrimitiveModel for Empty {}
        Self::new("EMPTY", PrimitiveKind::Safety, input_space, Empty).expect("empty primitive")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> PrimitiveKind {
        self.kind
    }

    pub fn input_space(&self) -> &InputBox {
        &self.input_space
    }

    pub fn schema(&self) -> &[StateComponent] {
        &self.schema
    }

    pub fn n(&self) -> usize {
        self.schema.len()
    }

    pub fn n_g(&self) -> usize {
        self.atoms.iter().map(Atom::n_g).sum()
    }

    pub fn n_h(&self) -> usize {
        self.atoms.iter().map(Atom::n_h).sum()
    }

    pub fn cost_terms(&self) -> usize {
        self.atoms.iter().map(|a| a.model.cost_terms()).sum()
    }

    /// Number of ego-dynamics primitives folded into this one.
    pub fn dynamics_count(&self) -> usize {
        self.atoms.iter().filter(|a| a.kind == PrimitiveKind::EgoDynamics).count()
    }

    /// Primitive names of the atoms, in fold order.
    pub fn atom_names(&self) -> Vec<&str> {
        self.atoms.iter().map(|a| a.primitive.as_str()).collect()
    }

    pub fn ineq_labels(&self) -> Vec<String> {
        self.atoms.iter().flat_map(|a| a.ineq_labels.iter().map(move |l| a.label(l))).collect()
    }

    pub fn default_state(&self) -> Vec<f64> {
        self.atoms.iter().flat_map(|a| a.model.default_state()).collect()
    }

    fn bind_to(&self, x: &StateVector) -> Result<Binding> {
        let schema: Vec<&str> = x.schema.iter().map(|c| c.name.as_str()).collect();
        Binding::resolve(&self.atoms, &schema, &vec![Role::Constrained; self.atoms.len()])
    }

    /// Stage cost evaluated against a state that contains every own state
    /// component and every read, located by name.
    pub fn stage_cost(&self, x: &StateVector, stage: &Stage) -> Result<f64> {
        let b = self.bind_to(x)?;
        let mut total = 0.0;
        for (atom, ba) in self.atoms.iter().zip(&b.atoms) {
            total += atom.model.stage_cost(&ba.slots(&x.values), stage);
        }
        Ok(total)
    }

    pub fn ineq(&self, x: &StateVector, stage: &Stage) -> Result<Vec<f64>> {
        let b = self.bind_to(x)?;
        let mut out = vec![0.0; b.n_g];
        for (atom, ba) in self.atoms.iter().zip(&b.atoms) {
            let n = atom.n_g();
            atom.model.ineq(&ba.slots(&x.values), stage, &mut out[ba.g_off..ba.g_off + n]);
        }
        Ok(out)
    }

    pub fn eq(&self, x: &StateVector, stage: &Stage) -> Result<Vec<f64>> {
        let b = self.bind_to(x)?;
        let mut out = vec![0.0; b.n_h];
        for (atom, ba) in self.atoms.iter().zip(&b.atoms) {
            let n = atom.n_h();
            atom.model.eq(&ba.slots(&x.values), stage, &mut out[ba.h_off..ba.h_off + n]);
        }
        Ok(out)
    }

    /// Time derivative of `x` (components outside this primitive's own state
    /// are left at zero).
    pub fn derivative(&self, x: &StateVector, u: ControlInput) -> Result<Vec<f64>> {
        let b = self.bind_to(x)?;
        let mut out = vec![0.0; x.len()];
        for (atom, ba) in self.atoms.iter().zip(&b.atoms) {
            let mut d = Derivative { out: &mut out, own: &ba.own };
            atom.model.derivative(&ba.slots(&x.values), u, &mut d);
        }
        Ok(out)
    }
}

/// `p1 ⊕ p2`: product state space and dynamics, summed stage costs,
/// concatenated inequality and equality constraints.
pub fn compose(p1: &MpcPrimitive, p2: &MpcPrimitive) -> Result<MpcPrimitive> {
    if p1.input_space != p2.input_space {
        return Err(Error::IncompatibleInputSpace);
    }
    for c in &p2.schema {
        if p1.schema.iter().any(|o| o.name == c.name) {
            return Err(Error::DuplicateStateName(c.name.clone()));
        }
    }
    let name = match (p1.name.is_empty(), p2.name.is_empty()) {
        (true, _) => p2.name.clone(),
        (_, true) => p1.name.clone(),
        _ => format!("{}+{}", p1.name, p2.name),
    };
    Ok(MpcPrimitive {
        name,
        kind: p1.kind,
        input_space: p1.input_space,
        schema: p1.schema.iter().chain(&p2.schema).cloned().collect(),
        atoms: p1.atoms.iter().chain(&p2.atoms).cloned().collect(),
    })
}

/// How an atom takes part in an OCP.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) enum Role {
    /// Cost and hard constraints.
    Constrained,
    /// Constraints become a squared penalty on stages `0..N`; the atom's own
    /// cost is kept only if `keep_cost`.
    Penalized { rho_g: f64, rho_h: f64, keep_cost: bool },
    /// Dynamics only.
    Passive,
}

#[derive(Clone, Debug)]
struct BoundAtom {
    own: Vec<usize>,
    reads: Vec<usize>,
    g_off: usize,
    h_off: usize,
}

impl BoundAtom {
    fn slots<'a>(&'a self, x: &'a [f64]) -> Slots<'a> {
        Slots { x, own: &self.own, reads: &self.reads }
    }
}

#[derive(Clone, Debug)]
struct Binding {
    atoms: Vec<BoundAtom>,
    n_g: usize,
    n_h: usize,
}

impl Binding {
    fn resolve(atoms: &[Atom], schema: &[&str], roles: &[Role]) -> Result<Self> {
        let find = |atom: &Atom, name: &str| -> Result<usize> {
            let q = atom.qualified(name);
            schema
                .iter()
                .position(|s| *s == q)
                .ok_or_else(|| Error::UnresolvedRead { primitive: atom.primitive.clone(), name: q })
        };
        let mut out = Vec::with_capacity(atoms.len());
        let (mut n_g, mut n_h) = (0, 0);
        for (atom, role) in atoms.iter().zip(roles) {
            let own = atom.own_names.iter().map(|n| find(atom, n)).collect::<Result<Vec<_>>>()?;
            let reads = atom.read_names.iter().map(|n| find(atom, n)).collect::<Result<Vec<_>>>()?;
            out.push(BoundAtom { own, reads, g_off: n_g, h_off: n_h });
            if *role == Role::Constrained {
                n_g += atom.n_g();
                n_h += atom.n_h();
            }
        }
        Ok(Self { atoms: out, n_g, n_h })
    }
}

/// Squared-hinge penalty `ρ_g·Σ max(0, g)² + ρ_h·Σ h²`.
pub fn constraint_penalty(g: &[f64], h: &[f64], rho_g: f64, rho_h: f64) -> f64 {
    let pg: f64 = g.iter().map(|v| v.max(0.0).powi(2)).sum();
    let ph: f64 = h.iter().map(|v| v * v).sum();
    rho_g * pg + rho_h * ph
}

/// Time and input context a trajectory is evaluated in.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Origin {
    /// Absolute time of stage 0.
    pub t0: f64,
    /// Input applied just before stage 0; `None` means "same as the first
    /// input" (zero input rate at stage 0).
    pub prev_input: Option<ControlInput>,
}

impl Origin {
    pub fn new(t0: f64, prev_input: ControlInput) -> Self {
        Self { t0, prev_input: Some(prev_input) }
    }
}

/// Inputs seen at stage `k` of an `N`-input sequence. Stage `N` holds the last
/// input.
pub(crate) fn stage_inputs(
    inputs: &[ControlInput],
    k: usize,
    prev0: Option<ControlInput>,
) -> (ControlInput, ControlInput) {
    let n = inputs.len();
    if k >= n {
        let last = inputs[n - 1];
        return (last, last);
    }
    let prev = if k == 0 { prev0.unwrap_or(inputs[0]) } else { inputs[k - 1] };
    (inputs[k], prev)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub schema: Schema,
    /// `N + 1` predicted states.
    pub states: Vec<Vec<f64>>,
    /// `N` inputs.
    pub inputs: Vec<ControlInput>,
    pub origin: Origin,
}

impl Trajectory {
    pub fn horizon(&self) -> usize {
        self.inputs.len()
    }

    pub fn state(&self, k: usize) -> StateVector {
        StateVector { schema: self.schema.clone(), values: self.states[k].clone() }
    }

    pub fn final_state(&self) -> StateVector {
        self.state(self.states.len() - 1)
    }
}

/// Raw constraint values of one stage.
#[derive(Clone, Debug, PartialEq)]
pub struct StageConstraints {
    pub g: Vec<f64>,
    pub h: Vec<f64>,
}

struct OcpInner {
    input_space: InputBox,
    schema: Schema,
    atoms: Vec<Atom>,
    roles: Vec<Role>,
    binding: Binding,
    horizon: usize,
    dt: f64,
    provenance: Vec<String>,
}

/// A fully assembled optimal control problem. Cheap to clone.
#[derive(Clone)]
pub struct Ocp {
    inner: Arc<OcpInner>,
}

impl fmt::Debug for Ocp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Ocp")
            .field("provenance", &self.inner.provenance)
            .field("n", &self.n())
            .field("n_g", &self.n_g())
            .field("n_h", &self.n_h())
            .field("horizon", &self.inner.horizon)
            .field("dt", &self.inner.dt)
            .finish()
    }
}

/// Folds `primitives` left to right with [`compose`] into an OCP.
pub fn build_ocp(primitives: &[MpcPrimitive], horizon: usize, dt: f64, input_space: InputBox) -> Result<Ocp> {
    let dynamics: usize = primitives.iter().map(MpcPrimitive::dynamics_count).sum();
    if primitives.is_empty() || dynamics != 1 {
        return Err(Error::MissingDynamics(dynamics));
    }
    if let Some(p) = primitives.iter().find(|p| p.input_space != input_space) {
        log::debug!("primitive {} has a different input space", p.name);
        return Err(Error::IncompatibleInputSpace);
    }
    let mut acc = primitives[0].clone();
    for p in &primitives[1..] {
        acc = compose(&acc, p)?;
    }
    let provenance = primitives.iter().map(|p| p.name.clone()).collect();
    let roles = vec![Role::Constrained; acc.atoms.len()];
    Ocp::assemble(input_space, acc.schema, acc.atoms, roles, horizon, dt, provenance)
}

impl Ocp {
    pub(crate) fn assemble(
        input_space: InputBox,
        schema: Vec<StateComponent>,
        atoms: Vec<Atom>,
        roles: Vec<Role>,
        horizon: usize,
        dt: f64,
        provenance: Vec<String>,
    ) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::InvalidParameter("horizon must be at least 1".into()));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("dt = {dt}")));
        }
        if provenance.is_empty() {
            return Err(Error::InvalidParameter("empty provenance".into()));
        }
        input_space.validate()?;
        let names: Vec<&str> = schema.iter().map(|c| c.name.as_str()).collect();
        let binding = Binding::resolve(&atoms, &names, &roles)?;
        Ok(Self {
            inner: Arc::new(OcpInner {
                input_space,
                schema: schema.into(),
                atoms,
                roles,
                binding,
                horizon,
                dt,
                provenance,
            }),
        })
    }

    pub fn input_space(&self) -> &InputBox {
        &self.inner.input_space
    }

    pub fn schema(&self) -> &Schema {
        &self.inner.schema
    }

    pub fn n(&self) -> usize {
        self.inner.schema.len()
    }

    pub fn n_g(&self) -> usize {
        self.inner.binding.n_g
    }

    pub fn n_h(&self) -> usize {
        self.inner.binding.n_h
    }

    pub fn horizon(&self) -> usize {
        self.inner.horizon
    }

    pub fn dt(&self) -> f64 {
        self.inner.dt
    }

    pub fn provenance(&self) -> &[String] {
        &self.inner.provenance
    }

    /// Schema, atoms and roles with every name moved under `prefix`.
    pub(crate) fn namespaced_parts(&self, prefix: &str) -> (Vec<StateComponent>, Vec<Atom>, Vec<Role>) {
        let schema = self
            .inner
            .schema
            .iter()
            .map(|c| StateComponent::new(format!("{prefix}{}", c.name), c.unit.clone()))
            .collect();
        let atoms = self.inner.atoms.iter().map(|a| a.prefixed(prefix)).collect();
        (schema, atoms, self.inner.roles.clone())
    }

    /// Primitive names of all atoms in fold order, with namespaces.
    pub fn atom_names(&self) -> Vec<String> {
        self.inner.atoms.iter().map(|a| format!("{}{}", a.namespace, a.primitive)).collect()
    }

    /// Labels of the hard inequality components, `LC.gap` style.
    pub fn ineq_labels(&self) -> Vec<String> {
        self.constrained_atoms().flat_map(|a| a.ineq_labels.iter().map(move |l| a.label(l))).collect()
    }

    pub fn eq_labels(&self) -> Vec<String> {
        self.constrained_atoms().flat_map(|a| a.eq_labels.iter().map(move |l| a.label(l))).collect()
    }

    fn constrained_atoms(&self) -> impl Iterator<Item = &Atom> {
        self.inner.atoms.iter().zip(&self.inner.roles).filter(|(_, r)| **r == Role::Constrained).map(|(a, _)| a)
    }

    /// Same constraint structure: identical labels in identical order,
    /// ignoring namespaces.
    pub fn same_constraints(&self, other: &Ocp) -> bool {
        let strip = |v: Vec<String>| -> Vec<String> { v.iter().map(|l| base_name(l).to_string()).collect() };
        strip(self.ineq_labels()) == strip(other.ineq_labels()) && strip(self.eq_labels()) == strip(other.eq_labels())
    }

    /// Assembles the initial state from measurements of the base names.
    pub fn measure(&self, source: &(impl StateSource + ?Sized)) -> Result<StateVector> {
        let values = self
            .inner
            .schema
            .iter()
            .map(|c| {
                let base = base_name(&c.name);
                source.value(base).ok_or_else(|| Error::SchemaMismatch(format!("no measurement for `{base}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        StateVector::new(self.inner.schema.clone(), values)
    }

    /// Default state of every atom (PV primitives carry their initial state).
    pub fn default_state(&self) -> StateVector {
        let values = self.inner.atoms.iter().flat_map(|a| a.model.default_state()).collect();
        StateVector { schema: self.inner.schema.clone(), values }
    }

    pub fn check_state(&self, x: &StateVector) -> Result<()> {
        if x.schema.len() != self.inner.schema.len()
            || x.schema.iter().zip(self.inner.schema.iter()).any(|(a, b)| a.name != b.name)
        {
            return Err(Error::SchemaMismatch("state does not match the OCP schema".into()));
        }
        Ok(())
    }

    pub fn derivative(&self, x: &[f64], u: ControlInput, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for (atom, b) in self.inner.atoms.iter().zip(&self.inner.binding.atoms) {
            let mut d = Derivative { out, own: &b.own };
            atom.model.derivative(&b.slots(x), u, &mut d);
        }
    }

    /// One explicit-Euler step `x + f(x, u)·dt` written into `next`.
    pub fn euler_step(&self, x: &[f64], u: ControlInput, next: &mut [f64]) {
        self.derivative(x, u, next);
        let dt = self.inner.dt;
        for (n, xi) in next.iter_mut().zip(x) {
            *n = xi + *n * dt;
        }
    }

    /// Stage cost `J_k`, including iOCP penalty terms.
    pub fn stage_cost(&self, x: &[f64], stage: &Stage) -> f64 {
        let mut total = 0.0;
        let mut g = [0.0; MAX_ATOM_CONSTRAINTS];
        let mut h = [0.0; MAX_ATOM_CONSTRAINTS];
        for ((atom, b), role) in self.inner.atoms.iter().zip(&self.inner.binding.atoms).zip(&self.inner.roles) {
            let s = b.slots(x);
            match *role {
                Role::Constrained => total += atom.model.stage_cost(&s, stage),
                Role::Penalized { rho_g, rho_h, keep_cost } => {
                    if keep_cost {
                        total += atom.model.stage_cost(&s, stage);
                    }
                    if stage.k < self.inner.horizon {
                        let (ng, nh) = (atom.n_g(), atom.n_h());
                        atom.model.ineq(&s, stage, &mut g[..ng]);
                        atom.model.eq(&s, stage, &mut h[..nh]);
                        total += constraint_penalty(&g[..ng], &h[..nh], rho_g, rho_h);
                    }
                }
                Role::Passive => {}
            }
        }
        total
    }

    /// Hard inequality values `g_k` (feasible iff all ≤ 0).
    pub fn ineq(&self, x: &[f64], stage: &Stage, out: &mut [f64]) {
        for ((atom, b), role) in self.inner.atoms.iter().zip(&self.inner.binding.atoms).zip(&self.inner.roles) {
            if *role == Role::Constrained {
                let n = atom.n_g();
                atom.model.ineq(&b.slots(x), stage, &mut out[b.g_off..b.g_off + n]);
            }
        }
    }

    /// Hard equality values `h_k` (feasible iff all = 0).
    pub fn eq(&self, x: &[f64], stage: &Stage, out: &mut [f64]) {
        for ((atom, b), role) in self.inner.atoms.iter().zip(&self.inner.binding.atoms).zip(&self.inner.roles) {
            if *role == Role::Constrained {
                let n = atom.n_h();
                atom.model.eq(&b.slots(x), stage, &mut out[b.h_off..b.h_off + n]);
            }
        }
    }

    /// Stage context for stage `k` of `traj`.
    pub fn stage_of(&self, traj: &Trajectory, k: usize) -> Stage {
        let (u, prev) = stage_inputs(&traj.inputs, k, traj.origin.prev_input);
        Stage::new(k, traj.origin.t0 + k as f64 * self.inner.dt, self.inner.dt, u, prev)
    }

    pub fn rollout(&self, x0: &StateVector, inputs: &[ControlInput]) -> Result<Trajectory> {
        self.rollout_from(x0, inputs, Origin::default())
    }

    /// Explicit-Euler forward integration `x(k+1) = x(k) + f(x(k), u(k))·dt`.
    pub fn rollout_from(&self, x0: &StateVector, inputs: &[ControlInput], origin: Origin) -> Result<Trajectory> {
        self.check_state(x0)?;
        if inputs.len() != self.inner.horizon {
            return Err(Error::SchemaMismatch(format!("{} inputs for horizon {}", inputs.len(), self.inner.horizon)));
        }
        let mut states = Vec::with_capacity(inputs.len() + 1);
        states.push(x0.values.clone());
        for u in inputs {
            let mut next = vec![0.0; x0.len()];
            self.euler_step(states.last().unwrap(), *u, &mut next);
            states.push(next);
        }
        Ok(Trajectory { schema: self.inner.schema.clone(), states, inputs: inputs.to_vec(), origin })
    }

    fn check_trajectory(&self, traj: &Trajectory) -> Result<()> {
        let schema_ok = traj.schema.len() == self.inner.schema.len()
            && traj.schema.iter().zip(self.inner.schema.iter()).all(|(a, b)| a.name == b.name);
        if !schema_ok
            || traj.inputs.len() != self.inner.horizon
            || traj.states.len() != self.inner.horizon + 1
            || traj.states.iter().any(|s| s.len() != self.n())
        {
            return Err(Error::SchemaMismatch("trajectory does not match the OCP".into()));
        }
        Ok(())
    }

    /// Raw `g` and `h` values at stages `0..=N`.
    pub fn eval_constraints(&self, traj: &Trajectory) -> Result<Vec<StageConstraints>> {
        self.check_trajectory(traj)?;
        Ok((0..=self.inner.horizon)
            .map(|k| {
                let stage = self.stage_of(traj, k);
                let mut g = vec![0.0; self.n_g()];
                let mut h = vec![0.0; self.n_h()];
                self.ineq(&traj.states[k], &stage, &mut g);
                self.eq(&traj.states[k], &stage, &mut h);
                StageConstraints { g, h }
            })
            .collect())
    }

    /// `Σ_{k=0}^{N} J_k` along `traj`.
    pub fn trajectory_cost(&self, traj: &Trajectory) -> Result<f64> {
        self.check_trajectory(traj)?;
        Ok((0..=self.inner.horizon).map(|k| self.stage_cost(&traj.states[k], &self.stage_of(traj, k))).sum())
    }
}
