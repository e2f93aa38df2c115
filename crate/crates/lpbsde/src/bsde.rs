//! Backward solver for jump BSDEs on simulated scenarios.
//!
//! Two conditional-expectation backends are provided. `markov-exact` works
//! for single-atom measures without Brownian dependence, where the state is
//! `(t, jump count)` and expectations are exact Poisson-increment sums with
//! the tail truncated at cumulative mass `1e-12`. `regression` handles the
//! general atomic case by per-step least squares on polynomial features of
//! the state. The orthogonal martingale component is identically zero in the
//! Brownian-Poisson filtration generated here; its slot is kept so the
//! solution remains the full quadruple `(Y, Z, ψ, M)`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::levy::{euclid, LevyMeasure};
use crate::paths::PathBundle;
use crate::rng::{path_rng, StreamTag};
use crate::sum_norms::{sum_norm, MarkFunction};
use crate::{Error, Result};

/// Generator evaluator `f(t, y, z, ψ)` with its declared regularity
/// constants. `z` is a `d × k` matrix flattened row-major; `ψ` is the list of
/// values at the atoms of the paired measure.
#[derive(Clone)]
pub struct GeneratorSpec {
    pub name: String,
    /// One-sided (monotonicity) constant in `y`.
    pub alpha_mono: f64,
    /// Lipschitz constant in `z`.
    pub k_z: f64,
    /// Lipschitz constant in `ψ` for the `L^1+L^2` norm.
    pub k_psi: f64,
    eval: Arc<dyn Fn(f64, &[f64], &[f64], &[Vec<f64>]) -> Vec<f64> + Send + Sync>,
}

impl std::fmt::Debug for GeneratorSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GeneratorSpec")
            .field("name", &self.name)
            .field("alpha_mono", &self.alpha_mono)
            .field("k_z", &self.k_z)
            .field("k_psi", &self.k_psi)
            .finish()
    }
}

impl GeneratorSpec {
    pub fn new(
        name: impl Into<String>,
        alpha_mono: f64,
        k_z: f64,
        k_psi: f64,
        eval: impl Fn(f64, &[f64], &[f64], &[Vec<f64>]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        GeneratorSpec {
            name: name.into(),
            alpha_mono,
            k_z,
            k_psi,
            eval: Arc::new(eval),
        }
    }

    pub fn eval(&self, t: f64, y: &[f64], z: &[f64], psi: &[Vec<f64>]) -> Vec<f64> {
        (self.eval)(t, y, z, psi)
    }

    /// `f(t, 0, 0, 0)` for a problem of shape `(d, k, n_atoms)`.
    pub fn f0(&self, t: f64, d: usize, k: usize, n_atoms: usize) -> Vec<f64> {
        let y = vec![0.0; d];
        let z = vec![0.0; d * k];
        let psi = vec![vec![0.0; d]; n_atoms];
        self.eval(t, &y, &z, &psi)
    }
}

/// Terminal condition as a functional of the path.
#[derive(Debug, Clone)]
pub enum TerminalCondition {
    Constant(Vec<f64>),
    /// `ξ = N_T`, the total jump count (scalar).
    JumpCount,
    /// Radial clamp `q_n` of another terminal condition.
    Truncated {
        base: Box<TerminalCondition>,
        level: f64,
    },
}

impl TerminalCondition {
    /// Evaluate as a function of the terminal jump count.
    pub fn eval_count(&self, count: f64) -> Vec<f64> {
        match self {
            TerminalCondition::Constant(c) => c.clone(),
            TerminalCondition::JumpCount => vec![count],
            TerminalCondition::Truncated { base, level } => {
                truncate_q(&base.eval_count(count), *level)
            }
        }
    }
}

/// Radial clamp `q_n(x) = x n / (|x| ∨ n)`; always `|q_n(x)| <= n`.
pub fn truncate_q(x: &[f64], n: f64) -> Vec<f64> {
    let r = euclid(x);
    if r <= n {
        x.to_vec()
    } else {
        x.iter().map(|v| v * n / r).collect()
    }
}

/// A fully specified problem instance.
#[derive(Clone)]
pub struct ProblemSpec {
    pub id: String,
    pub measure: LevyMeasure,
    pub generator: GeneratorSpec,
    pub terminal: TerminalCondition,
    /// Solution dimension.
    pub d: usize,
    /// Brownian dimension.
    pub k: usize,
    /// Closed-form solution `(t, T, count) -> y`, when one exists.
    pub exact: Option<Arc<dyn Fn(f64, f64, f64) -> Vec<f64> + Send + Sync>>,
}

impl std::fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("id", &self.id)
            .field("d", &self.d)
            .field("k", &self.k)
            .finish()
    }
}

/// Built-in problem registry: `counterexample`, `zero`, `linear-decay`.
pub fn builtin_problem(id: &str) -> Result<ProblemSpec> {
    match id {
        // μ = δ_1, f = -2ψ(1), ξ = N_T; exact solution Y_t = N_t - (T - t),
        // ψ = 1, Z = 0.
        "counterexample" => Ok(ProblemSpec {
            id: id.into(),
            measure: LevyMeasure::single_atom(1.0, 1.0),
            generator: GeneratorSpec::new("minus-two-psi", 0.0, 0.0, 2.0, |_t, _y, _z, psi| {
                vec![-2.0 * psi[0][0]]
            }),
            terminal: TerminalCondition::JumpCount,
            d: 1,
            k: 0,
            exact: Some(Arc::new(|t, t_max, count| vec![count - (t_max - t)])),
        }),
        // f ≡ 0, ξ = 1: Y ≡ 1, Z = ψ = M = 0.
        "zero" => Ok(ProblemSpec {
            id: id.into(),
            measure: LevyMeasure::single_atom(1.0, 1.0),
            generator: GeneratorSpec::new("zero", 0.0, 0.0, 0.0, |_t, _y, _z, _psi| vec![0.0]),
            terminal: TerminalCondition::Constant(vec![1.0]),
            d: 1,
            k: 0,
            exact: Some(Arc::new(|_t, _t_max, _count| vec![1.0])),
        }),
        // f = -y, ξ = 1: Y_t = e^{-(T-t)}.
        "linear-decay" => Ok(ProblemSpec {
            id: id.into(),
            measure: LevyMeasure::single_atom(1.0, 1.0),
            generator: GeneratorSpec::new("linear-decay", -1.0, 0.0, 0.0, |_t, y, _z, _psi| {
                vec![-y[0]]
            }),
            terminal: TerminalCondition::Constant(vec![1.0]),
            d: 1,
            k: 0,
            exact: Some(Arc::new(|t, t_max, _count| vec![(-(t_max - t)).exp()])),
        }),
        _ => Err(Error::InvalidInput(format!(
            "unknown problem id {id:?} (known: counterexample, zero, linear-decay)"
        ))),
    }
}

/// Replace `(ξ, f)` by the truncated data
/// `ξ_n = q_n(ξ)`, `f_n = f - f(·,0,0,0) + q_n(f(·,0,0,0))`.
pub fn build_truncated_problem(problem: &ProblemSpec, n: f64) -> Result<ProblemSpec> {
    if !(n > 0.0) {
        return Err(Error::InvalidInput(format!(
            "truncation level {n} must be > 0"
        )));
    }
    let mut out = problem.clone();
    out.id = format!("{}-q{}", problem.id, n);
    out.terminal = TerminalCondition::Truncated {
        base: Box::new(problem.terminal.clone()),
        level: n,
    };
    let inner = problem.generator.clone();
    let (d, k, n_atoms) = (problem.d, problem.k, problem.measure.atom_count());
    out.generator = GeneratorSpec::new(
        format!("{}-q{}", inner.name, n),
        inner.alpha_mono,
        inner.k_z,
        inner.k_psi,
        move |t, y, z, psi| {
            let mut v = inner.eval(t, y, z, psi);
            let f0 = inner.f0(t, d, k, n_atoms);
            let q = truncate_q(&f0, n);
            for i in 0..v.len() {
                v[i] = v[i] - f0[i] + q[i];
            }
            v
        },
    );
    out.exact = None;
    Ok(out)
}

/// Conditional-expectation backend.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveMethod {
    MarkovExact,
    Regression,
}

/// Grid-sampled solution quadruple for one scenario, with path diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct BsdeSolution {
    pub grid: Vec<f64>,
    /// `Y` at grid nodes.
    pub y: Vec<Vec<f64>>,
    /// `Z` at grid nodes (`d × k` flattened); zero without Brownian noise.
    pub z: Vec<Vec<f64>>,
    /// `ψ` at grid nodes, per atom.
    pub psi: Vec<Vec<Vec<f64>>>,
    /// `Y` at jump times (time, value just after the jump).
    pub y_at_jumps: Vec<(f64, Vec<f64>)>,
    /// Orthogonal martingale path at grid nodes; identically zero here.
    pub m_path: Vec<Vec<f64>>,
    pub sup_abs_y: f64,
    /// `Σ_i |Z_i|² h_i`.
    pub z_square_integral: f64,
    /// `Σ_events |ψ(mark)|²`, the jump-integral quadratic variation.
    pub psi_qv: f64,
    /// `[M]_T`; zero here.
    pub m_qv: f64,
    /// `|Y_T - ξ|` (exactly zero by construction).
    pub terminal_error: f64,
}

/// Solver-level diagnostics shared across paths.
#[derive(Debug, Clone, Default, Serialize)]
pub struct SolveDiagnostics {
    pub max_fixed_point_iters: usize,
    /// Worst regression condition number, when regression ran.
    pub max_condition: Option<f64>,
}

/// Solver knobs beyond the backend choice.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SolveOptions {
    pub method: SolveMethod,
    /// Take the `y`-step explicitly instead of by fixed point; only for
    /// benign (small `h` times Lipschitz) generators.
    pub explicit_y: bool,
    /// Total degree of the regression polynomial features.
    pub regression_degree: usize,
}

impl SolveOptions {
    pub fn new(method: SolveMethod) -> Self {
        SolveOptions {
            method,
            explicit_y: false,
            regression_degree: 2,
        }
    }
}

/// Solve the backward equation on a set of scenarios sharing one grid,
/// with implicit stepping and degree-2 regression features.
pub fn solve_backward(
    problem: &ProblemSpec,
    scenarios: &[PathBundle],
    method: SolveMethod,
) -> Result<(Vec<BsdeSolution>, SolveDiagnostics)> {
    solve_backward_opts(problem, scenarios, &SolveOptions::new(method))
}

/// Solve with explicit options.
pub fn solve_backward_opts(
    problem: &ProblemSpec,
    scenarios: &[PathBundle],
    opts: &SolveOptions,
) -> Result<(Vec<BsdeSolution>, SolveDiagnostics)> {
    if scenarios.is_empty() {
        return Err(Error::Empty("no scenarios".into()));
    }
    let grid = &scenarios[0].grid;
    if scenarios.iter().any(|s| &s.grid != grid) {
        return Err(Error::InvalidInput("scenarios must share a grid".into()));
    }
    if opts.regression_degree == 0 || opts.regression_degree > 3 {
        return Err(Error::InvalidInput(format!(
            "regression degree {} outside the supported 1..=3",
            opts.regression_degree
        )));
    }
    match opts.method {
        SolveMethod::MarkovExact => solve_markov_exact(problem, scenarios, opts),
        SolveMethod::Regression => solve_regression(problem, scenarios, opts),
    }
}

/// Truncated Poisson increment pmf with tail mass below `1e-12`,
/// renormalized so conditional expectations of constants are exact.
fn poisson_step_pmf(mean: f64) -> Vec<f64> {
    let mut pmf = Vec::new();
    let mut term = (-mean).exp();
    let mut cum = 0.0;
    let mut k = 0usize;
    while cum < 1.0 - 1e-12 && k < 4096 {
        pmf.push(term);
        cum += term;
        k += 1;
        term *= mean / k as f64;
    }
    for w in &mut pmf {
        *w /= cum;
    }
    pmf
}

/// Headroom above the observed maximal count so lattice-edge clamping is
/// below solver tolerance.
fn poisson_headroom(mean: f64) -> usize {
    let mut term = (-mean).exp();
    let mut cum = 0.0;
    let mut k = 0usize;
    while cum < 1.0 - 1e-15 && k < 100_000 {
        cum += term;
        k += 1;
        term *= mean / k as f64;
    }
    k + 4
}

struct FixedPointOutcome {
    y: Vec<f64>,
    iters: usize,
}

/// Implicit-in-`y` step `y = target + h f(t, y, z, ψ)` by damped fixed-point
/// iteration (tolerance `1e-12`, at most 200 iterations).
fn implicit_step(
    gen: &GeneratorSpec,
    t: f64,
    h: f64,
    target: &[f64],
    z: &[f64],
    psi: &[Vec<f64>],
    explicit: bool,
) -> Result<FixedPointOutcome> {
    if explicit {
        let fv = gen.eval(t, target, z, psi);
        let y = target.iter().zip(&fv).map(|(a, b)| a + h * b).collect();
        return Ok(FixedPointOutcome { y, iters: 1 });
    }
    let mut y = target.to_vec();
    let mut omega = 1.0;
    for iter in 0..200 {
        let fv = gen.eval(t, &y, z, psi);
        let next: Vec<f64> = target
            .iter()
            .zip(&fv)
            .zip(&y)
            .map(|((tgt, f), cur)| (1.0 - omega) * cur + omega * (tgt + h * f))
            .collect();
        let diff = next
            .iter()
            .zip(&y)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let scale = 1.0 + euclid(&next);
        y = next;
        if diff <= 1e-12 * scale {
            return Ok(FixedPointOutcome { y, iters: iter + 1 });
        }
        if iter == 50 {
            omega = 0.5;
        } else if iter == 120 {
            omega = 0.25;
        }
    }
    Err(Error::FixedPointDiverged {
        t,
        residual: f64::NAN,
    })
}

fn solve_markov_exact(
    problem: &ProblemSpec,
    scenarios: &[PathBundle],
    opts: &SolveOptions,
) -> Result<(Vec<BsdeSolution>, SolveDiagnostics)> {
    let atoms = match &problem.measure {
        LevyMeasure::Atomic { atoms } if atoms.len() == 1 => atoms,
        _ => {
            return Err(Error::InvalidInput(
                "markov-exact requires an atomic measure with exactly one atom".into(),
            ))
        }
    };
    if problem.k != 0 {
        return Err(Error::InvalidInput(
            "markov-exact requires no Brownian dependence (k = 0)".into(),
        ));
    }
    let rate = atoms[0].w;
    let grid = &scenarios[0].grid;
    let n_steps = grid.len() - 1;
    let t_horizon = *grid.last().unwrap();

    let max_count = scenarios.iter().map(|s| s.jumps.len()).max().unwrap_or(0);
    let top = max_count + poisson_headroom(rate * t_horizon);

    // terminal layer
    let mut value: Vec<Vec<f64>> = (0..=top)
        .map(|c| problem.terminal.eval_count(c as f64))
        .collect();
    let mut psi_table: Vec<Vec<Vec<f64>>> = Vec::with_capacity(n_steps);
    let mut y_table: Vec<Vec<Vec<f64>>> = vec![Vec::new(); n_steps];
    let mut max_iters = 0usize;

    for i in (0..n_steps).rev() {
        let h = grid[i + 1] - grid[i];
        let pmf = poisson_step_pmf(rate * h);
        let cont: Vec<Vec<f64>> = (0..=top)
            .map(|c| {
                let mut acc = vec![0.0; problem.d];
                for (j, w) in pmf.iter().enumerate() {
                    let idx = (c + j).min(top);
                    for (a, v) in acc.iter_mut().zip(&value[idx]) {
                        *a += w * v;
                    }
                }
                acc
            })
            .collect();
        let mut new_value = Vec::with_capacity(top + 1);
        let mut psi_row = Vec::with_capacity(top + 1);
        for c in 0..=top {
            let up = (c + 1).min(top);
            let psi_c: Vec<f64> = cont[up].iter().zip(&cont[c]).map(|(a, b)| a - b).collect();
            let out = implicit_step(
                &problem.generator,
                grid[i],
                h,
                &cont[c],
                &[],
                std::slice::from_ref(&psi_c),
                opts.explicit_y,
            )?;
            max_iters = max_iters.max(out.iters);
            new_value.push(out.y);
            psi_row.push(psi_c);
        }
        value = new_value;
        psi_table.push(psi_row);
        y_table[i] = value.clone();
    }
    psi_table.reverse();
    // y_table[i] holds the value function at node i; add the terminal layer
    let terminal_layer: Vec<Vec<f64>> = (0..=top)
        .map(|c| problem.terminal.eval_count(c as f64))
        .collect();

    let diagnostics = SolveDiagnostics {
        max_fixed_point_iters: max_iters,
        max_condition: None,
    };

    let solutions = scenarios
        .iter()
        .map(|scenario| {
            evaluate_markov_path(
                problem,
                scenario,
                &y_table,
                &terminal_layer,
                &psi_table,
                rate,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((solutions, diagnostics))
}

fn evaluate_markov_path(
    problem: &ProblemSpec,
    scenario: &PathBundle,
    y_table: &[Vec<Vec<f64>>],
    terminal_layer: &[Vec<f64>],
    psi_table: &[Vec<Vec<f64>>],
    rate: f64,
) -> Result<BsdeSolution> {
    let grid = &scenario.grid;
    let n_steps = grid.len() - 1;
    let d = problem.d;

    // prefix counts at grid nodes
    let mut counts = vec![0usize; grid.len()];
    {
        let mut c = 0usize;
        let mut e = 0usize;
        for (i, &t) in grid.iter().enumerate() {
            while e < scenario.jumps.len() && scenario.jumps[e].time <= t {
                c += 1;
                e += 1;
            }
            counts[i] = c;
        }
    }

    let mut y = Vec::with_capacity(grid.len());
    let mut psi = Vec::with_capacity(n_steps);
    let mut z = vec![vec![]; grid.len()];
    for i in 0..n_steps {
        let c = counts[i].min(y_table[i].len() - 1);
        y.push(y_table[i][c].clone());
        psi.push(vec![psi_table[i][c].clone()]);
        z[i] = vec![0.0; 0];
    }
    let c_t = counts[n_steps].min(terminal_layer.len() - 1);
    y.push(terminal_layer[c_t].clone());
    // psi at the terminal node is unused; repeat the last step for shape
    psi.push(psi.last().cloned().unwrap_or_else(|| vec![vec![0.0; d]]));

    // walk jump times inside each step for the cadlag path and sup |Y|
    let mut sup_abs_y = euclid(&y[0]);
    let mut y_at_jumps = Vec::with_capacity(scenario.jumps.len());
    let mut psi_qv = 0.0;
    let mut e = 0usize;
    for i in 0..n_steps {
        let psi_i = &psi[i][0];
        let f_val = problem.generator.eval(grid[i], &y[i], &[], &psi[i]);
        let comp: Vec<f64> = psi_i.iter().map(|v| rate * v).collect();
        let mut cur = y[i].clone();
        let mut last_t = grid[i];
        while e < scenario.jumps.len() && scenario.jumps[e].time <= grid[i + 1] {
            let s = scenario.jumps[e].time;
            // drift the linear segment to s-, then apply the jump
            let mut pre = vec![0.0; d];
            for (j, p) in pre.iter_mut().enumerate() {
                *p = cur[j] - (s - last_t) * (f_val[j] + comp[j]);
            }
            sup_abs_y = sup_abs_y.max(euclid(&pre));
            let post: Vec<f64> = pre.iter().zip(psi_i).map(|(a, b)| a + b).collect();
            sup_abs_y = sup_abs_y.max(euclid(&post));
            psi_qv += psi_i.iter().map(|v| v * v).sum::<f64>();
            y_at_jumps.push((s, post.clone()));
            cur = post;
            last_t = s;
            e += 1;
        }
        sup_abs_y = sup_abs_y.max(euclid(&y[i + 1]));
    }

    let xi = problem.terminal.eval_count(counts[n_steps] as f64);
    let terminal_error = y
        .last()
        .unwrap()
        .iter()
        .zip(&xi)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();

    Ok(BsdeSolution {
        grid: grid.clone(),
        y,
        z,
        psi,
        y_at_jumps,
        m_path: vec![vec![0.0; d]; grid.len()],
        sup_abs_y,
        z_square_integral: 0.0,
        psi_qv,
        m_qv: 0.0,
        terminal_error,
    })
}

/// Monomial features of the state up to a total degree.
fn features(state: &[f64], degree: usize) -> Vec<f64> {
    let n = state.len();
    let mut out = vec![1.0];
    // previous layer as (value, smallest variable index allowed next)
    let mut layer: Vec<(f64, usize)> = vec![(1.0, 0)];
    for _ in 0..degree {
        let mut next = Vec::new();
        for &(v, lo) in &layer {
            for j in lo..n {
                let m = v * state[j];
                out.push(m);
                next.push((m, j));
            }
        }
        layer = next;
    }
    out
}

fn solve_regression(
    problem: &ProblemSpec,
    scenarios: &[PathBundle],
    opts: &SolveOptions,
) -> Result<(Vec<BsdeSolution>, SolveDiagnostics)> {
    let degree = opts.regression_degree;
    let atoms = match &problem.measure {
        LevyMeasure::Atomic { atoms } if !atoms.is_empty() => atoms.clone(),
        _ => {
            return Err(Error::InvalidInput(
                "regression requires a non-empty atomic measure".into(),
            ))
        }
    };
    let grid = scenarios[0].grid.clone();
    let n_steps = grid.len() - 1;
    let n_paths = scenarios.len();
    let d = problem.d;
    let k = problem.k;
    let n_atoms = atoms.len();

    // state per path per node: per-atom counts then Brownian coordinates
    let state_dim = n_atoms + k;
    let mut states = vec![vec![vec![0.0_f64; state_dim]; n_paths]; grid.len()];
    for (pi, sc) in scenarios.iter().enumerate() {
        let mut counts = vec![0.0; n_atoms];
        let mut w_acc = vec![0.0; k];
        let mut e = 0usize;
        for (ni, &t) in grid.iter().enumerate() {
            while e < sc.jumps.len() && sc.jumps[e].time <= t {
                if let Some(a) = sc.jumps[e].atom {
                    counts[a] += 1.0;
                }
                e += 1;
            }
            if ni > 0 {
                for j in 0..k {
                    w_acc[j] += sc.brownian[ni - 1][j];
                }
            }
            states[ni][pi][..n_atoms].copy_from_slice(&counts);
            states[ni][pi][n_atoms..].copy_from_slice(&w_acc);
        }
    }

    let n_feat = features(&vec![0.0; state_dim], degree).len();
    let mut max_condition = 0.0_f64;
    let mut max_iters = 0usize;

    // value per path, backward from the terminal condition
    let mut v: Vec<Vec<f64>> = scenarios
        .iter()
        .map(|sc| {
            let total = sc.jumps.len() as f64;
            problem.terminal.eval_count(total)
        })
        .collect();

    let mut y_nodes = vec![vec![Vec::new(); n_paths]; grid.len()];
    let mut z_nodes = vec![vec![vec![0.0; d * k]; n_paths]; grid.len()];
    let mut psi_nodes = vec![vec![vec![vec![0.0; d]; n_atoms]; n_paths]; grid.len()];
    for (pi, val) in v.iter().enumerate() {
        y_nodes[n_steps][pi] = val.clone();
    }

    for i in (0..n_steps).rev() {
        let h = grid[i + 1] - grid[i];

        // per-atom compensated jump counts over this step
        let mut step_comp = vec![vec![0.0_f64; n_atoms]; n_paths];
        for (pi, sc) in scenarios.iter().enumerate() {
            for (aj, atom) in atoms.iter().enumerate() {
                step_comp[pi][aj] = -atom.w * h;
            }
            for ev in &sc.jumps {
                if ev.time > grid[i] && ev.time <= grid[i + 1] {
                    if let Some(aj) = ev.atom {
                        step_comp[pi][aj] += 1.0;
                    }
                }
            }
        }

        // martingale-augmented design: value features, then the same features
        // times each compensated increment. The interaction coefficients are
        // the jump response ψ and the Brownian slope Z.
        let n_aug = n_feat * (1 + n_atoms + k);
        let mut design = DMatrix::zeros(n_paths, n_aug);
        for pi in 0..n_paths {
            let f = features(&states[i][pi], degree);
            for (j, x) in f.iter().enumerate() {
                design[(pi, j)] = *x;
                for aj in 0..n_atoms {
                    design[(pi, n_feat * (1 + aj) + j)] = *x * step_comp[pi][aj];
                }
                for kk in 0..k {
                    design[(pi, n_feat * (1 + n_atoms + kk) + j)] =
                        *x * scenarios[pi].brownian[i][kk];
                }
            }
        }
        let (kept, normalized) = select_columns(&design);
        let svd = normalized.clone().svd(true, true);
        let smax = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
        let smin_pos = svd
            .singular_values
            .iter()
            .cloned()
            .filter(|s| *s > smax * 1e-12)
            .fold(f64::INFINITY, f64::min);
        if smax > 0.0 && smin_pos.is_finite() {
            max_condition = max_condition.max(smax / smin_pos);
        }

        // coefficients in original column indexing, per solution component
        let mut betas = vec![vec![0.0_f64; n_aug]; d];
        for comp in 0..d {
            let rhs = DVector::from_iterator(n_paths, v.iter().map(|val| val[comp]));
            let sol = svd
                .solve(&rhs, smax * 1e-12)
                .map_err(|e| Error::InvalidInput(format!("svd solve: {e}")))?;
            for (slot, &col) in kept.iter().enumerate() {
                betas[comp][col.0] = sol[slot] / col.1;
            }
        }

        let eval_block = |beta: &[f64], block: usize, state: &[f64]| -> f64 {
            let f = features(state, degree);
            f.iter()
                .enumerate()
                .map(|(j, x)| x * beta[n_feat * block + j])
                .sum()
        };

        let mut new_v = Vec::with_capacity(n_paths);
        for pi in 0..n_paths {
            let state = &states[i][pi];
            let cont: Vec<f64> = (0..d).map(|c| eval_block(&betas[c], 0, state)).collect();
            let mut psi_p = vec![vec![0.0; d]; n_atoms];
            for aj in 0..n_atoms {
                for c in 0..d {
                    psi_p[aj][c] = eval_block(&betas[c], 1 + aj, state);
                }
            }
            let mut z_p = vec![0.0; d * k];
            for c in 0..d {
                for kk in 0..k {
                    z_p[c * k + kk] = eval_block(&betas[c], 1 + n_atoms + kk, state);
                }
            }
            let out =
                implicit_step(&problem.generator, grid[i], h, &cont, &z_p, &psi_p, opts.explicit_y)?;
            max_iters = max_iters.max(out.iters);
            y_nodes[i][pi] = out.y.clone();
            z_nodes[i][pi] = z_p;
            psi_nodes[i][pi] = psi_p;
            new_v.push(out.y);
        }
        v = new_v;
    }

    let diagnostics = SolveDiagnostics {
        max_fixed_point_iters: max_iters,
        max_condition: Some(max_condition),
    };

    let mut solutions = Vec::with_capacity(n_paths);
    for (pi, sc) in scenarios.iter().enumerate() {
        let y: Vec<Vec<f64>> = (0..grid.len()).map(|ni| y_nodes[ni][pi].clone()).collect();
        let z: Vec<Vec<f64>> = (0..grid.len()).map(|ni| z_nodes[ni][pi].clone()).collect();
        let psi: Vec<Vec<Vec<f64>>> = (0..grid.len())
            .map(|ni| psi_nodes[ni][pi].clone())
            .collect();
        let mut sup_abs_y = 0.0_f64;
        for val in &y {
            sup_abs_y = sup_abs_y.max(euclid(val));
        }
        let mut psi_qv = 0.0;
        let mut e = 0usize;
        for i in 0..n_steps {
            while e < sc.jumps.len() && sc.jumps[e].time <= grid[i + 1] {
                if let Some(aj) = sc.jumps[e].atom {
                    psi_qv += psi[i][aj].iter().map(|x| x * x).sum::<f64>();
                }
                e += 1;
            }
        }
        let z_square_integral: f64 = (0..n_steps)
            .map(|i| {
                let h = grid[i + 1] - grid[i];
                h * z[i].iter().map(|x| x * x).sum::<f64>()
            })
            .sum();
        let xi = problem.terminal.eval_count(sc.jumps.len() as f64);
        let terminal_error = y
            .last()
            .unwrap()
            .iter()
            .zip(&xi)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        solutions.push(BsdeSolution {
            grid: grid.clone(),
            y,
            z,
            psi,
            y_at_jumps: Vec::new(),
            m_path: vec![vec![0.0; d]; grid.len()],
            sup_abs_y,
            z_square_integral,
            psi_qv,
            m_qv: 0.0,
            terminal_error,
        });
    }
    Ok((solutions, diagnostics))
}

/// Greedy orthogonal column selection with per-column normalization.
///
/// Returns the kept `(original index, scale)` pairs and the reduced matrix of
/// normalized kept columns. Collinear and near-zero columns are dropped so
/// fitted polynomials stay well defined away from degenerate designs.
fn select_columns(a: &DMatrix<f64>) -> (Vec<(usize, f64)>, DMatrix<f64>) {
    let n_rows = a.nrows();
    let mut kept: Vec<(usize, f64)> = Vec::new();
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut cols: Vec<DVector<f64>> = Vec::new();
    for j in 0..a.ncols() {
        let col = a.column(j).into_owned();
        let norm = col.norm();
        if norm <= 1e-300 {
            continue;
        }
        let unit = &col / norm;
        let mut resid = unit.clone();
        for b in &basis {
            let proj = b.dot(&resid);
            resid -= b * proj;
        }
        if resid.norm() > 1e-7 {
            basis.push(&resid / resid.norm());
            kept.push((j, norm));
            cols.push(unit);
        }
        if kept.len() == n_rows {
            break;
        }
    }
    let mut reduced = DMatrix::zeros(n_rows, kept.len());
    for (slot, c) in cols.iter().enumerate() {
        reduced.set_column(slot, c);
    }
    (kept, reduced)
}

/// Discrete residual of the backward equation, telescoped per step.
#[derive(Debug, Clone, Serialize)]
pub struct ResidualReport {
    pub per_step: Vec<f64>,
    pub max_abs: f64,
    pub total_abs: f64,
    pub terminal_gap: f64,
}

/// Check the solved path against the discrete equation
/// `Y_i = Y_{i+1} + h f(t_i, Y_i, Z_i, ψ_i) - (jump sum - h ∫ψ_i dμ) - Z_i ΔW_i`.
pub fn residual_check(
    sol: &BsdeSolution,
    problem: &ProblemSpec,
    scenario: &PathBundle,
) -> Result<ResidualReport> {
    if sol.grid != scenario.grid {
        return Err(Error::InvalidInput(
            "solution and scenario grids differ".into(),
        ));
    }
    let atoms = match &problem.measure {
        LevyMeasure::Atomic { atoms } => atoms,
        _ => {
            return Err(Error::InvalidInput(
                "residual check requires an atomic measure".into(),
            ))
        }
    };
    let grid = &sol.grid;
    let n_steps = grid.len() - 1;
    let d = problem.d;
    let mut per_step = Vec::with_capacity(n_steps);
    let mut e = 0usize;
    for i in 0..n_steps {
        let h = grid[i + 1] - grid[i];
        let f_val = problem
            .generator
            .eval(grid[i], &sol.y[i], &sol.z[i], &sol.psi[i]);
        let mut jump_sum = vec![0.0; d];
        while e < scenario.jumps.len() && scenario.jumps[e].time <= grid[i + 1] {
            if let Some(aj) = scenario.jumps[e].atom {
                for c in 0..d {
                    jump_sum[c] += sol.psi[i][aj][c];
                }
            }
            e += 1;
        }
        let mut comp = vec![0.0; d];
        for (aj, atom) in atoms.iter().enumerate() {
            for c in 0..d {
                comp[c] += atom.w * sol.psi[i][aj][c];
            }
        }
        let mut zdw = vec![0.0; d];
        for c in 0..d {
            for kk in 0..problem.k {
                zdw[c] += sol.z[i][c * problem.k + kk] * scenario.brownian[i][kk];
            }
        }
        let mut r2 = 0.0;
        for c in 0..d {
            let r =
                sol.y[i][c] - sol.y[i + 1][c] - h * f_val[c] + jump_sum[c] - h * comp[c] + zdw[c];
            r2 += r * r;
        }
        per_step.push(r2.sqrt());
    }
    let max_abs = per_step.iter().cloned().fold(0.0, f64::max);
    let total_abs = per_step.iter().sum();
    Ok(ResidualReport {
        per_step,
        max_abs,
        total_abs,
        terminal_gap: sol.terminal_error,
    })
}

/// Sampling battery for generator-assumption validation.
#[derive(Debug, Clone)]
pub struct BatterySpec {
    pub samples: usize,
    pub t_horizon: f64,
    pub scale: f64,
    pub radii: Vec<f64>,
    pub seed: u64,
}

impl Default for BatterySpec {
    fn default() -> Self {
        BatterySpec {
            samples: 2000,
            t_horizon: 1.0,
            scale: 2.0,
            radii: vec![0.5, 1.0, 2.0, 5.0],
            seed: 1,
        }
    }
}

/// Sampled margins for the monotonicity and Lipschitz assumptions, plus the
/// sampled growth bound. Violations are report entries, not errors.
#[derive(Debug, Clone, Serialize)]
pub struct AssumptionReport {
    /// Worst `<Δf, Δy> - α|Δy|²` over the battery (should be <= 0).
    pub worst_monotonicity_margin: f64,
    /// Worst `|Δf| - K_z|Δz| - K_ψ ‖Δψ‖_{L^1+L^2}` over the battery.
    pub worst_lipschitz_margin: f64,
    /// `sup_{|y|<=r} |f(t,y,0,0) - f(t,0,0,0)|` per battery radius.
    pub growth_by_radius: Vec<(f64, f64)>,
    pub monotonicity_ok: bool,
    pub lipschitz_ok: bool,
}

/// Sampled margin for the radial growth condition
/// `<y̌, f(t,y,z,ψ)> <= f_t + α|y| + K|z| + K ‖ψ‖_{L¹+L²}`.
#[derive(Debug, Clone, Serialize)]
pub struct ConditionCReport {
    pub worst_margin: f64,
    pub ok: bool,
}

/// Spot-check the radial growth condition by sampling; violations make the
/// report not-ok but are not errors.
pub fn condition_c_check(
    gen: &GeneratorSpec,
    measure: &LevyMeasure,
    d: usize,
    k: usize,
    f_t_bound: f64,
    alpha: f64,
    big_k: f64,
    battery: &BatterySpec,
) -> Result<ConditionCReport> {
    let n_atoms = measure.atom_count();
    let mut rng = path_rng(battery.seed, 1, StreamTag::Battery);
    let draw_vec = |rng: &mut rand_chacha::ChaCha8Rng, n: usize, scale: f64| -> Vec<f64> {
        (0..n)
            .map(|_| {
                let z: f64 = StandardNormal.sample(rng);
                scale * z
            })
            .collect()
    };
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..battery.samples {
        let t = rng.random::<f64>() * battery.t_horizon;
        let y = draw_vec(&mut rng, d, battery.scale);
        let z = draw_vec(&mut rng, d * k, battery.scale);
        let psi: Vec<Vec<f64>> = (0..n_atoms)
            .map(|_| draw_vec(&mut rng, d, battery.scale))
            .collect();
        let f = gen.eval(t, &y, &z, &psi);
        let ny = euclid(&y);
        let pairing = if ny > 0.0 {
            y.iter().zip(&f).map(|(a, b)| a * b / ny).sum::<f64>()
        } else {
            0.0
        };
        let nz = euclid(&z);
        let npsi = if n_atoms > 0 {
            sum_norm(
                &MarkFunction::AtomValues {
                    values: psi.clone(),
                },
                measure,
                1.0,
            )?
            .value
        } else {
            0.0
        };
        worst = worst.max(pairing - f_t_bound - alpha * ny - big_k * nz - big_k * npsi);
    }
    let tol = 1e-9 * battery.scale.max(1.0);
    Ok(ConditionCReport {
        worst_margin: worst,
        ok: worst <= tol,
    })
}

/// Spot-check (H1)/(H2)/(H3)-style assumptions by sampling.
pub fn validate_generator(
    gen: &GeneratorSpec,
    measure: &LevyMeasure,
    d: usize,
    k: usize,
    battery: &BatterySpec,
) -> Result<AssumptionReport> {
    let n_atoms = measure.atom_count();
    let mut rng = path_rng(battery.seed, 0, StreamTag::Battery);
    let draw_vec = |rng: &mut rand_chacha::ChaCha8Rng, n: usize, scale: f64| -> Vec<f64> {
        (0..n)
            .map(|_| {
                let z: f64 = StandardNormal.sample(rng);
                scale * z
            })
            .collect()
    };
    let mut worst_mono = f64::NEG_INFINITY;
    let mut worst_lip = f64::NEG_INFINITY;
    for _ in 0..battery.samples {
        let t = rng.random::<f64>() * battery.t_horizon;
        let y = draw_vec(&mut rng, d, battery.scale);
        let y2 = draw_vec(&mut rng, d, battery.scale);
        let z = draw_vec(&mut rng, d * k, battery.scale);
        let z2 = draw_vec(&mut rng, d * k, battery.scale);
        let psi: Vec<Vec<f64>> = (0..n_atoms)
            .map(|_| draw_vec(&mut rng, d, battery.scale))
            .collect();
        let psi2: Vec<Vec<f64>> = (0..n_atoms)
            .map(|_| draw_vec(&mut rng, d, battery.scale))
            .collect();

        // monotonicity in y, all else fixed
        let fy = gen.eval(t, &y, &z, &psi);
        let fy2 = gen.eval(t, &y2, &z, &psi);
        let mut dot = 0.0;
        let mut dy2 = 0.0;
        for c in 0..d {
            dot += (fy[c] - fy2[c]) * (y[c] - y2[c]);
            dy2 += (y[c] - y2[c]) * (y[c] - y2[c]);
        }
        worst_mono = worst_mono.max(dot - gen.alpha_mono * dy2);

        // Lipschitz in (z, ψ), y fixed
        let fz = gen.eval(t, &y, &z, &psi);
        let fz2 = gen.eval(t, &y, &z2, &psi2);
        let df = fz
            .iter()
            .zip(&fz2)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let dz = z
            .iter()
            .zip(&z2)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let dpsi_fn = MarkFunction::AtomValues {
            values: psi
                .iter()
                .zip(&psi2)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect())
                .collect(),
        };
        let dpsi = if n_atoms > 0 {
            sum_norm(&dpsi_fn, measure, 1.0)?.value
        } else {
            0.0
        };
        worst_lip = worst_lip.max(df - gen.k_z * dz - gen.k_psi * dpsi);
    }

    let mut growth = Vec::new();
    for &r in &battery.radii {
        let mut sup = 0.0_f64;
        for _ in 0..battery.samples / 4 {
            let t = rng.random::<f64>() * battery.t_horizon;
            let mut y = draw_vec(&mut rng, d, 1.0);
            let norm = euclid(&y).max(1e-300);
            let target = rng.random::<f64>() * r;
            for v in &mut y {
                *v *= target / norm;
            }
            let z0 = vec![0.0; d * k];
            let psi0 = vec![vec![0.0; d]; n_atoms];
            let f = gen.eval(t, &y, &z0, &psi0);
            let f0 = gen.eval(t, &vec![0.0; d], &z0, &psi0);
            let diff = f
                .iter()
                .zip(&f0)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            sup = sup.max(diff);
        }
        growth.push((r, sup));
    }

    let tol = 1e-9 * battery.scale.max(1.0);
    Ok(AssumptionReport {
        worst_monotonicity_margin: worst_mono,
        worst_lipschitz_margin: worst_lip,
        growth_by_radius: growth,
        monotonicity_ok: worst_mono <= tol,
        lipschitz_ok: worst_lip <= tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::uniform_grid;

    fn make_scenarios(problem: &ProblemSpec, n: usize, steps: usize, seed: u64) -> Vec<PathBundle> {
        (0..n)
            .map(|i| {
                PathBundle::generate(
                    &problem.measure,
                    None,
                    uniform_grid(1.0, steps),
                    problem.k,
                    seed,
                    i as u64,
                )
                .unwrap()
            })
            .collect()
    }

    #[test]
    fn truncate_q_examples() {
        assert_eq!(truncate_q(&[3.0], 5.0), vec![3.0]);
        assert_eq!(truncate_q(&[7.0], 5.0), vec![5.0]);
        // |x| = 5 exactly: untouched
        assert_eq!(truncate_q(&[3.0, 4.0], 5.0), vec![3.0, 4.0]);
        let clamped = truncate_q(&[6.0, 8.0], 5.0);
        assert!((euclid(&clamped) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn truncated_problem_fixes_f0() {
        // counterexample: f(·,0,0,0) = 0 so f_n = f for all n
        let p = builtin_problem("counterexample").unwrap();
        let pn = build_truncated_problem(&p, 3.0).unwrap();
        let psi = vec![vec![0.7]];
        let orig = p.generator.eval(0.3, &[1.0], &[], &psi);
        let trunc = pn.generator.eval(0.3, &[1.0], &[], &psi);
        assert_eq!(orig, trunc);
        // f_n(t,0,0,0) = q_n(f(t,0,0,0)) by evaluation
        let gen_big = GeneratorSpec::new("const", 0.0, 0.0, 0.0, |_t, _y, _z, _psi| vec![9.0]);
        let prob = ProblemSpec {
            id: "const".into(),
            measure: LevyMeasure::single_atom(1.0, 1.0),
            generator: gen_big,
            terminal: TerminalCondition::Constant(vec![0.0]),
            d: 1,
            k: 0,
            exact: None,
        };
        let probn = build_truncated_problem(&prob, 4.0).unwrap();
        assert_eq!(probn.generator.f0(0.0, 1, 0, 1), vec![4.0]);
        // terminal clamp
        match probn.terminal {
            TerminalCondition::Truncated { level, .. } => assert_eq!(level, 4.0),
            _ => panic!(),
        }
    }

    #[test]
    fn counterexample_is_recovered_exactly() {
        let p = builtin_problem("counterexample").unwrap();
        let scenarios = make_scenarios(&p, 20, 32, 77);
        let (sols, _) = solve_backward(&p, &scenarios, SolveMethod::MarkovExact).unwrap();
        let exact = p.exact.clone().unwrap();
        for (sol, sc) in sols.iter().zip(&scenarios) {
            let mut count = 0usize;
            let mut e = 0usize;
            for (i, &t) in sol.grid.iter().enumerate() {
                while e < sc.jumps.len() && sc.jumps[e].time <= t {
                    count += 1;
                    e += 1;
                }
                let want = exact(t, 1.0, count as f64);
                assert!(
                    (sol.y[i][0] - want[0]).abs() < 1e-10,
                    "node {i}: {} vs {}",
                    sol.y[i][0],
                    want[0]
                );
                if i < sol.grid.len() - 1 {
                    assert!((sol.psi[i][0][0] - 1.0).abs() < 1e-10);
                }
            }
            assert_eq!(sol.terminal_error, 0.0);
            let res = residual_check(sol, &p, sc).unwrap();
            assert!(res.max_abs < 1e-10, "residual {}", res.max_abs);
        }
    }

    #[test]
    fn constant_terminal_zero_generator() {
        let p = builtin_problem("zero").unwrap();
        let scenarios = make_scenarios(&p, 5, 16, 3);
        let (sols, _) = solve_backward(&p, &scenarios, SolveMethod::MarkovExact).unwrap();
        for sol in &sols {
            for y in &sol.y {
                assert!((y[0] - 1.0).abs() < 1e-13);
            }
            assert_eq!(sol.psi_qv, 0.0);
        }
    }

    #[test]
    fn linear_decay_converges_first_order() {
        let p = builtin_problem("linear-decay").unwrap();
        let mut errors = Vec::new();
        for steps in [8usize, 16, 32, 64] {
            let scenarios = make_scenarios(&p, 1, steps, 5);
            let (sols, _) = solve_backward(&p, &scenarios, SolveMethod::MarkovExact).unwrap();
            let sol = &sols[0];
            let exact = p.exact.clone().unwrap();
            let err = sol
                .grid
                .iter()
                .enumerate()
                .map(|(i, &t)| (sol.y[i][0] - exact(t, 1.0, 0.0)[0]).abs())
                .fold(0.0_f64, f64::max);
            errors.push(err);
        }
        // measured order >= 0.9: err ratio per halving >= 2^0.9
        for w in errors.windows(2) {
            assert!(w[0] / w[1] >= 2f64.powf(0.9), "ratios {:?}", errors);
        }
    }

    #[test]
    fn residual_localizes_injected_fault() {
        let p = builtin_problem("counterexample").unwrap();
        let scenarios = make_scenarios(&p, 1, 16, 9);
        let (mut sols, _) = solve_backward(&p, &scenarios, SolveMethod::MarkovExact).unwrap();
        sols[0].y[7][0] += 0.1;
        let res = residual_check(&sols[0], &p, &scenarios[0]).unwrap();
        // fault at node 7 pollutes steps 6 and 7 only
        for (i, r) in res.per_step.iter().enumerate() {
            if i == 6 || i == 7 {
                assert!(*r > 0.05, "step {i} residual {r}");
            } else {
                assert!(*r < 1e-10, "step {i} residual {r}");
            }
        }
    }

    #[test]
    fn regression_recovers_counterexample_within_mc_noise() {
        // the exact value function lies in the martingale-augmented feature
        // span, so the least-squares fit has zero residual up to conditioning
        let p = builtin_problem("counterexample").unwrap();
        let scenarios = make_scenarios(&p, 2000, 16, 13);
        let (sols, diag) = solve_backward(&p, &scenarios, SolveMethod::Regression).unwrap();
        assert!(diag.max_condition.unwrap().is_finite());
        let exact = p.exact.clone().unwrap();
        let mut worst = 0.0_f64;
        for (sol, sc) in sols.iter().zip(&scenarios) {
            let mut e = 0usize;
            let mut count = 0usize;
            for (i, &t) in sol.grid.iter().enumerate() {
                while e < sc.jumps.len() && sc.jumps[e].time <= t {
                    count += 1;
                    e += 1;
                }
                worst = worst.max((sol.y[i][0] - exact(t, 1.0, count as f64)[0]).abs());
            }
        }
        assert!(worst < 1e-6, "worst node error {worst}");
    }

    #[test]
    fn generator_validation_confirms_declared_constants() {
        let p = builtin_problem("counterexample").unwrap();
        let rep =
            validate_generator(&p.generator, &p.measure, 1, 0, &BatterySpec::default()).unwrap();
        assert!(
            rep.monotonicity_ok,
            "margin {}",
            rep.worst_monotonicity_margin
        );
        assert!(rep.lipschitz_ok, "margin {}", rep.worst_lipschitz_margin);

        let decay = builtin_problem("linear-decay").unwrap();
        let rep = validate_generator(
            &decay.generator,
            &decay.measure,
            1,
            0,
            &BatterySpec::default(),
        )
        .unwrap();
        assert!(rep.monotonicity_ok);

        // f(y) = y² violates monotonicity globally; the battery must witness it
        let bad = GeneratorSpec::new("quadratic", 0.0, 0.0, 0.0, |_t, y, _z, _psi| {
            vec![y[0] * y[0]]
        });
        let rep = validate_generator(
            &bad,
            &LevyMeasure::single_atom(1.0, 1.0),
            1,
            0,
            &BatterySpec::default(),
        )
        .unwrap();
        assert!(!rep.monotonicity_ok);
    }

    #[test]
    fn explicit_stepping_still_converges_on_benign_generators() {
        use super::SolveOptions;
        let p = builtin_problem("linear-decay").unwrap();
        let scenarios = make_scenarios(&p, 1, 64, 5);
        let opts = SolveOptions {
            method: SolveMethod::MarkovExact,
            explicit_y: true,
            regression_degree: 2,
        };
        let (sols, diag) = solve_backward_opts(&p, &scenarios, &opts).unwrap();
        assert_eq!(diag.max_fixed_point_iters, 1);
        let exact = p.exact.clone().unwrap();
        let err = sols[0]
            .grid
            .iter()
            .enumerate()
            .map(|(i, &t)| (sols[0].y[i][0] - exact(t, 1.0, 0.0)[0]).abs())
            .fold(0.0_f64, f64::max);
        assert!(err < 0.02, "explicit error {err}");
    }

    #[test]
    fn degree_one_regression_is_enough_for_a_linear_value_function() {
        use super::SolveOptions;
        let p = builtin_problem("counterexample").unwrap();
        let scenarios = make_scenarios(&p, 500, 8, 29);
        let opts = SolveOptions {
            method: SolveMethod::Regression,
            explicit_y: false,
            regression_degree: 1,
        };
        let (sols, _) = solve_backward_opts(&p, &scenarios, &opts).unwrap();
        let exact = p.exact.clone().unwrap();
        let mut worst = 0.0_f64;
        for (sol, sc) in sols.iter().zip(&scenarios) {
            let mut e = 0usize;
            let mut count = 0usize;
            for (i, &t) in sol.grid.iter().enumerate() {
                while e < sc.jumps.len() && sc.jumps[e].time <= t {
                    count += 1;
                    e += 1;
                }
                worst = worst.max((sol.y[i][0] - exact(t, 1.0, count as f64)[0]).abs());
            }
        }
        assert!(worst < 1e-8, "worst node error {worst}");
    }

    #[test]
    fn condition_c_spot_check_on_registry() {
        // counterexample: <y̌, -2ψ(1)> <= 2 ‖ψ‖ with f_t = 0, α = 0, K = 2
        let p = builtin_problem("counterexample").unwrap();
        let rep = condition_c_check(
            &p.generator,
            &p.measure,
            1,
            0,
            0.0,
            0.0,
            2.0,
            &BatterySpec::default(),
        )
        .unwrap();
        assert!(rep.ok, "margin {}", rep.worst_margin);

        // with K understated to 1 the battery must find a witness
        let bad = condition_c_check(
            &p.generator,
            &p.measure,
            1,
            0,
            0.0,
            0.0,
            1.0,
            &BatterySpec::default(),
        )
        .unwrap();
        assert!(!bad.ok);
    }

    #[test]
    fn comparison_principle_on_monotone_pairs() {
        // κ = +0.5 >= -1 generators; discrete scheme preserves order
        let mk = |shift: f64| {
            GeneratorSpec::new("halfpsi", 0.0, 0.0, 0.5, move |_t, _y, _z, psi| {
                vec![0.5 * psi[0][0] + shift]
            })
        };
        let base = builtin_problem("counterexample").unwrap();
        let p1 = ProblemSpec {
            id: "cmp1".into(),
            generator: mk(-1.0),
            terminal: TerminalCondition::Truncated {
                base: Box::new(TerminalCondition::JumpCount),
                level: 2.0,
            },
            ..base.clone()
        };
        let p2 = ProblemSpec {
            id: "cmp2".into(),
            generator: mk(0.0),
            terminal: TerminalCondition::JumpCount,
            ..base
        };
        let scenarios = make_scenarios(&p1, 50, 32, 17);
        let (s1, _) = solve_backward(&p1, &scenarios, SolveMethod::MarkovExact).unwrap();
        let (s2, _) = solve_backward(&p2, &scenarios, SolveMethod::MarkovExact).unwrap();
        for (a, b) in s1.iter().zip(&s2) {
            for (ya, yb) in a.y.iter().zip(&b.y) {
                assert!(ya[0] <= yb[0] + 1e-12, "{} > {}", ya[0], yb[0]);
            }
        }
    }
}
