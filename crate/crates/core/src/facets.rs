//! Candidate terminal facets: index families `I0` aligned with the loading,
//! sign-flip families `I_1..I_M`, their vertices and feasibility.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::construction::SweepingProcess;
use crate::geometry::{cone_decompose_strict, cone_membership, AMetric, ConeSpec, GeometryError};
use crate::linalg::{self, EPS};

#[derive(Clone, Debug, PartialEq, Error)]
pub enum FacetError {
    #[error("no index family aligns with the {direction} loading direction")]
    NoCandidates { direction: Sign },
    #[error("loading rate is zero, the loading direction is undefined")]
    ZeroLoadingRate,
    #[error("vertex system for {family} is singular")]
    SingularVertexSystem { family: String },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Sign `α` of a constraint: `Minus` for the lower limit, `Plus` for the
/// upper one. `Minus < Plus`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sign {
    Minus,
    Plus,
}

impl Sign {
    pub fn of(x: f64) -> Option<Sign> {
        if x > 0.0 {
            Some(Sign::Plus)
        } else if x < 0.0 {
            Some(Sign::Minus)
        } else {
            None
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Sign::Minus => -1.0,
            Sign::Plus => 1.0,
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Minus => Sign::Plus,
            Sign::Plus => Sign::Minus,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Sign::Minus => '-',
            Sign::Plus => '+',
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

/// A pair `(α, j)`; `spring` is zero-based, displayed one-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SignedIndex {
    pub spring: usize,
    pub sign: Sign,
}

impl SignedIndex {
    pub fn new(sign: Sign, spring: usize) -> Self {
        Self { spring, sign }
    }

    pub fn plus(spring: usize) -> Self {
        Self::new(Sign::Plus, spring)
    }

    pub fn minus(spring: usize) -> Self {
        Self::new(Sign::Minus, spring)
    }

    /// Symbolic limit name, e.g. `c3+`.
    pub fn limit_name(&self) -> String {
        format!("c{}{}", self.spring + 1, self.sign)
    }

    /// The limit `c_j^α`.
    pub fn limit(&self, proc: &SweepingProcess) -> f64 {
        match self.sign {
            Sign::Minus => proc.c_minus()[self.spring],
            Sign::Plus => proc.c_plus()[self.spring],
        }
    }
}

impl fmt::Display for SignedIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.sign, self.spring + 1)
    }
}

/// `{(+,1),(+,2)}`.
pub fn format_family(family: &[SignedIndex]) -> String {
    let parts: Vec<String> = family.iter().map(|s| format!("{s}")).collect();
    format!("{{{}}}", parts.join(","))
}

/// An index family `I0` satisfying the loading cone condition.
#[derive(Clone, Debug, PartialEq)]
pub struct PlasticSet {
    /// Sorted by spring.
    pub members: Vec<SignedIndex>,
    /// The direction lies in the relative interior of the cone.
    pub strict: bool,
    /// Conic coordinates of the direction over `α G e_j`.
    pub coeffs: DVector<f64>,
    pub irreducible: bool,
}

impl PlasticSet {
    pub fn springs(&self) -> Vec<usize> {
        self.members.iter().map(|s| s.spring).collect()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

impl fmt::Display for PlasticSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", format_family(&self.members))
    }
}

/// The `2^k` sign patterns over a base spring set, `Minus` first.
#[derive(Clone, Debug, PartialEq)]
pub struct FlipFamily {
    pub springs: Vec<usize>,
    pub families: Vec<Vec<SignedIndex>>,
}

impl FlipFamily {
    pub fn over(springs: Vec<usize>) -> Self {
        let k = springs.len();
        let families = (0..1usize << k)
            .map(|pattern| {
                springs
                    .iter()
                    .enumerate()
                    .map(|(p, &j)| {
                        let bit = (pattern >> (k - 1 - p)) & 1;
                        SignedIndex::new(if bit == 1 { Sign::Plus } else { Sign::Minus }, j)
                    })
                    .collect()
            })
            .collect();
        Self { springs, families }
    }

    pub fn len(&self) -> usize {
        self.families.len()
    }

    pub fn is_empty(&self) -> bool {
        self.families.is_empty()
    }
}

/// One scenario: an `I0` and, when `|I0| < d`, a flip family.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    /// One-based position in the enumeration.
    pub number: usize,
    pub i0: PlasticSet,
    pub flips: Option<FlipFamily>,
}

impl Scenario {
    /// `I0 ∪ I_i` for each vertex, or `[I0]` in the vertex case.
    pub fn vertex_families(&self) -> Vec<Vec<SignedIndex>> {
        match &self.flips {
            None => alloc::vec![self.i0.members.clone()],
            Some(f) => f
                .families
                .iter()
                .map(|fam| {
                    let mut all = self.i0.members.clone();
                    all.extend(fam.iter().copied());
                    all
                })
                .collect(),
        }
    }

    pub fn is_vertex(&self) -> bool {
        self.flips.is_none()
    }

    /// Flip families formatted as `I1={(-,3)}` and so on.
    pub fn describe_flips(&self) -> Vec<String> {
        match &self.flips {
            None => Vec::new(),
            Some(f) => f
                .families
                .iter()
                .enumerate()
                .map(|(i, fam)| format!("I{}={}", i + 1, format_family(fam)))
                .collect(),
        }
    }
}

/// Direction of `l1`.
pub fn loading_direction(proc: &SweepingProcess) -> Result<Sign, FacetError> {
    Sign::of(proc.loading().l1).ok_or(FacetError::ZeroLoadingRate)
}

fn direction_vector(d: usize, direction: Sign) -> DVector<f64> {
    let mut x = DVector::zeros(d);
    x[0] = direction.value();
    x
}

fn signed_generators(proc: &SweepingProcess, members: &[SignedIndex]) -> ConeSpec {
    let g = proc.frame();
    let cols: Vec<DVector<f64>> = members
        .iter()
        .map(|s| g.column(s.spring) * s.sign.value())
        .collect();
    ConeSpec::labelled(
        if cols.is_empty() {
            DMatrix::zeros(g.nrows(), 0)
        } else {
            DMatrix::from_columns(&cols)
        },
        members.to_vec(),
    )
}

fn combinations(pool: &[usize], k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(pool: &[usize], k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..pool.len() {
            cur.push(pool[i]);
            rec(pool, k, i + 1, cur, out);
            cur.pop();
        }
    }
    rec(pool, k, 0, &mut cur, &mut out);
    out
}

/// Does `direction · e_1` lie in `cone{α G e_j : (α, j) ∈ members}`?
pub fn aligns_with_loading(
    proc: &SweepingProcess,
    members: &[SignedIndex],
    direction: Sign,
    tol: f64,
) -> bool {
    let x = direction_vector(proc.dim(), direction);
    let cone = signed_generators(proc, members);
    cone_membership(&AMetric::identity(proc.dim()), &x, &cone, tol).inside
}

/// No proper subset satisfies the loading cone condition. Subsets of size
/// `|I0| - 1` suffice since the condition is monotone.
pub fn is_irreducible(proc: &SweepingProcess, members: &[SignedIndex], direction: Sign, tol: f64) -> bool {
    let k = members.len();
    (0..k).all(|drop| {
        let rest: Vec<SignedIndex> = members
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != drop)
            .map(|(_, &s)| s)
            .collect();
        !aligns_with_loading(proc, &rest, direction, tol)
    })
}

/// Classify an arbitrary family against the loading direction.
pub fn classify_i0(
    proc: &SweepingProcess,
    members: &[SignedIndex],
    direction: Sign,
    tol: f64,
) -> Result<PlasticSet, FacetError> {
    let mut members = members.to_vec();
    members.sort();
    let x = direction_vector(proc.dim(), direction);
    let cone = signed_generators(proc, &members);
    let metric = AMetric::identity(proc.dim());
    let (strict, coeffs) = match cone_decompose_strict(&metric, &x, &cone, tol) {
        Ok(dec) => (dec.strict, dec.coeffs),
        Err(GeometryError::NotInSpan { .. }) => (false, DVector::zeros(members.len())),
        Err(e) => return Err(e.into()),
    };
    let strict = strict && coeffs.iter().all(|&c| c > 0.0);
    let irreducible = is_irreducible(proc, &members, direction, tol);
    Ok(PlasticSet {
        members,
        strict,
        coeffs,
        irreducible,
    })
}

/// All irreducible `I0` with `1 <= |I0| <= d` aligned with the loading
/// direction, in lexicographic order of size, springs and signs.
pub fn enumerate_i0(proc: &SweepingProcess, direction: Sign, tol: f64) -> Result<Vec<PlasticSet>, FacetError> {
    let d = proc.dim();
    let m = proc.springs();
    let springs: Vec<usize> = (0..m).collect();
    let mut out = Vec::new();
    for size in 1..=d.min(m) {
        for subset in combinations(&springs, size) {
            for pattern in 0..1usize << size {
                let members: Vec<SignedIndex> = subset
                    .iter()
                    .enumerate()
                    .map(|(p, &j)| {
                        let bit = (pattern >> (size - 1 - p)) & 1;
                        SignedIndex::new(if bit == 1 { Sign::Plus } else { Sign::Minus }, j)
                    })
                    .collect();
                if !aligns_with_loading(proc, &members, direction, tol) {
                    continue;
                }
                if !is_irreducible(proc, &members, direction, tol) {
                    continue;
                }
                out.push(classify_i0(proc, &members, direction, tol)?);
            }
        }
    }
    if out.is_empty() {
        return Err(FacetError::NoCandidates { direction });
    }
    Ok(out)
}

/// Flip families over every admissible base spring set for `I0`.
pub fn enumerate_families(proc: &SweepingProcess, i0: &PlasticSet) -> Vec<FlipFamily> {
    let d = proc.dim();
    if i0.len() >= d {
        return Vec::new();
    }
    let used = i0.springs();
    let pool: Vec<usize> = (0..proc.springs()).filter(|j| !used.contains(j)).collect();
    let g = proc.frame();
    combinations(&pool, d - i0.len())
        .into_iter()
        .filter(|extra| {
            let mut cols = used.clone();
            cols.extend(extra.iter().copied());
            linalg::rank(&linalg::select_columns(g, &cols)) == d
        })
        .map(FlipFamily::over)
        .collect()
}

/// Every scenario for the given direction, numbered from 1.
pub fn enumerate_scenarios(proc: &SweepingProcess, direction: Sign, tol: f64) -> Result<Vec<Scenario>, FacetError> {
    let mut out = Vec::new();
    for i0 in enumerate_i0(proc, direction, tol)? {
        if i0.len() == proc.dim() {
            out.push(Scenario {
                number: out.len() + 1,
                i0,
                flips: None,
            });
            continue;
        }
        for fam in enumerate_families(proc, &i0) {
            out.push(Scenario {
                number: out.len() + 1,
                i0: i0.clone(),
                flips: Some(fam),
            });
        }
    }
    Ok(out)
}

/// `A y* = K c` where `c` lists the limits `c_j^α` of the defining family.
#[derive(Clone, Debug, PartialEq)]
pub struct VertexFormula {
    /// m×d coefficients.
    pub coefficients: DMatrix<f64>,
    pub terms: Vec<SignedIndex>,
}

fn format_coeff(c: f64, first: bool) -> Option<String> {
    if c.abs() < 1e-12 {
        return None;
    }
    let r = libm::round(c);
    let is_int = (c - r).abs() < 1e-9;
    let sign = if c < 0.0 {
        if first {
            "-"
        } else {
            " - "
        }
    } else if first {
        ""
    } else {
        " + "
    };
    let mag = c.abs();
    Some(if is_int && (r.abs() - 1.0).abs() < 0.5 {
        String::from(sign)
    } else if is_int {
        format!("{sign}{}*", libm::fabs(r) as i64)
    } else {
        format!("{sign}{mag:.6}*")
    })
}

impl VertexFormula {
    /// Symbolic expression of stress `j`, e.g. `c3+ + c4+`.
    pub fn expression(&self, j: usize) -> String {
        let mut out = String::new();
        for (k, t) in self.terms.iter().enumerate() {
            if let Some(prefix) = format_coeff(self.coefficients[(j, k)], out.is_empty()) {
                out.push_str(&prefix);
                out.push_str(&t.limit_name());
            }
        }
        if out.is_empty() {
            out.push('0');
        }
        out
    }

    pub fn evaluate(&self, proc: &SweepingProcess) -> DVector<f64> {
        let c = DVector::from_iterator(self.terms.len(), self.terms.iter().map(|t| t.limit(proc)));
        &self.coefficients * c
    }
}

/// A vertex `y*` with `<e_j, A y*> = c_j^α` on its defining family.
#[derive(Clone, Debug, PartialEq)]
pub struct Vertex {
    pub family: Vec<SignedIndex>,
    /// The state `y*`, relative to the moving offset.
    pub state: DVector<f64>,
    /// `A y*`.
    pub stress: DVector<f64>,
    pub formula: VertexFormula,
}

/// `y* = V_basis ({e_j}ᵀ A V_basis)^{-1} (c_j^α)`.
pub fn compute_vertex(proc: &SweepingProcess, family: &[SignedIndex]) -> Result<Vertex, FacetError> {
    let d = proc.dim();
    let singular = || FacetError::SingularVertexSystem {
        family: format_family(family),
    };
    if family.len() != d {
        return Err(singular());
    }
    let av = proc.metric().apply_rows(proc.v_basis());
    let rows: Vec<usize> = family.iter().map(|s| s.spring).collect();
    let sys = linalg::select_rows(&av, &rows);
    let inv = linalg::inverse(&sys, 1e3 * EPS * d as f64).ok_or_else(singular)?;
    let c = DVector::from_iterator(d, family.iter().map(|s| s.limit(proc)));
    let v = &inv * &c;
    let state = proc.lift(&v);
    let stress = proc.metric().apply(&state);
    let scale = c.amax().max(1.0);
    for (k, s) in family.iter().enumerate() {
        if (stress[s.spring] - c[k]).abs() > 1e-9 * scale {
            return Err(singular());
        }
    }
    Ok(Vertex {
        family: family.to_vec(),
        state,
        stress,
        formula: VertexFormula {
            coefficients: av * inv,
            terms: family.to_vec(),
        },
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CheckStatus {
    Satisfied,
    /// Equal to a limit within tolerance.
    Marginal,
    ViolatedLower,
    ViolatedUpper,
}

/// `c_j^- < <e_j, A y*> < c_j^+` for a spring outside the defining family.
#[derive(Clone, Debug, PartialEq)]
pub struct InequalityCheck {
    /// Index into the scenario's vertex list.
    pub vertex: usize,
    pub spring: usize,
    pub lower: f64,
    pub value: f64,
    pub upper: f64,
    pub status: CheckStatus,
    pub expression: String,
}

impl InequalityCheck {
    /// `c4- < c1+ - c3- < c4+`.
    pub fn describe(&self) -> String {
        let j = self.spring + 1;
        format!("c{j}- < {} < c{j}+", self.expression)
    }

    /// The failing side, e.g. `c3+ + c4+ > c1+`.
    pub fn violation(&self) -> Option<String> {
        let j = self.spring + 1;
        match self.status {
            CheckStatus::ViolatedUpper => Some(format!("{} > c{j}+", self.expression)),
            CheckStatus::ViolatedLower => Some(format!("{} < c{j}-", self.expression)),
            CheckStatus::Marginal if (self.value - self.upper).abs() <= (self.value - self.lower).abs() => {
                Some(format!("{} = c{j}+", self.expression))
            }
            CheckStatus::Marginal => Some(format!("{} = c{j}-", self.expression)),
            CheckStatus::Satisfied => None,
        }
    }
}

/// `c_j^- < c_j^+` for a flipped spring, so that flipped vertices differ.
#[derive(Clone, Debug, PartialEq)]
pub struct DistinctnessCheck {
    pub spring: usize,
    pub lower: f64,
    pub upper: f64,
    pub holds: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Feasibility {
    Feasible,
    /// No violation, but some inequality holds only with equality.
    Marginal,
    Infeasible,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeasibilityReport {
    pub checks: Vec<InequalityCheck>,
    pub distinct: Vec<DistinctnessCheck>,
    pub verdict: Feasibility,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.verdict == Feasibility::Feasible
    }

    /// Human-readable failures, violations first.
    pub fn violations(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .checks
            .iter()
            .filter(|c| matches!(c.status, CheckStatus::ViolatedLower | CheckStatus::ViolatedUpper))
            .filter_map(InequalityCheck::violation)
            .collect();
        out.extend(
            self.distinct
                .iter()
                .filter(|c| !c.holds)
                .map(|c| format!("c{0}- = c{0}+", c.spring + 1)),
        );
        out.extend(
            self.checks
                .iter()
                .filter(|c| c.status == CheckStatus::Marginal)
                .filter_map(InequalityCheck::violation),
        );
        out.dedup();
        out
    }
}

/// Default relative feasibility tolerance.
pub const DEFAULT_TOL_FEAS: f64 = 1e-9;

/// Strict feasibility of every vertex, with per-spring tolerance
/// `tol_feas * (c_j^+ - c_j^-)`.
pub fn feasibility_check(
    proc: &SweepingProcess,
    scenario: &Scenario,
    vertices: &[Vertex],
    tol_feas: f64,
) -> FeasibilityReport {
    let cm = proc.c_minus();
    let cp = proc.c_plus();
    let mut checks = Vec::new();
    for (vi, vx) in vertices.iter().enumerate() {
        for j in 0..proc.springs() {
            if vx.family.iter().any(|s| s.spring == j) {
                continue;
            }
            let tol = tol_feas * (cp[j] - cm[j]);
            let value = vx.stress[j];
            let status = if value > cp[j] + tol {
                CheckStatus::ViolatedUpper
            } else if value < cm[j] - tol {
                CheckStatus::ViolatedLower
            } else if value >= cp[j] - tol || value <= cm[j] + tol {
                CheckStatus::Marginal
            } else {
                CheckStatus::Satisfied
            };
            checks.push(InequalityCheck {
                vertex: vi,
                spring: j,
                lower: cm[j],
                value,
                upper: cp[j],
                status,
                expression: vx.formula.expression(j),
            });
        }
    }
    let distinct: Vec<DistinctnessCheck> = scenario
        .flips
        .as_ref()
        .map(|f| {
            f.springs
                .iter()
                .map(|&j| DistinctnessCheck {
                    spring: j,
                    lower: cm[j],
                    upper: cp[j],
                    holds: cm[j] < cp[j],
                })
                .collect()
        })
        .unwrap_or_default();
    let violated = checks
        .iter()
        .any(|c| matches!(c.status, CheckStatus::ViolatedLower | CheckStatus::ViolatedUpper))
        || distinct.iter().any(|c| !c.holds);
    let verdict = if violated {
        Feasibility::Infeasible
    } else if checks.iter().any(|c| c.status == CheckStatus::Marginal) {
        Feasibility::Marginal
    } else {
        Feasibility::Feasible
    };
    FeasibilityReport {
        checks,
        distinct,
        verdict,
    }
}

/// A scenario with its vertices and feasibility report.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioEvaluation {
    pub scenario: Scenario,
    pub vertices: Vec<Vertex>,
    pub feasibility: FeasibilityReport,
}

pub fn evaluate_scenario(
    proc: &SweepingProcess,
    scenario: &Scenario,
    tol_feas: f64,
) -> Result<ScenarioEvaluation, FacetError> {
    let vertices = scenario
        .vertex_families()
        .iter()
        .map(|fam| compute_vertex(proc, fam))
        .collect::<Result<Vec<_>, _>>()?;
    let feasibility = feasibility_check(proc, scenario, &vertices, tol_feas);
    Ok(ScenarioEvaluation {
        scenario: scenario.clone(),
        vertices,
        feasibility,
    })
}
